use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use super::ilu::Ilu0;
use super::{dot, norm2, CscMatrix};
use crate::error::{FbiError, Result};

/// Counters exposed for diagnostics and tests.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub factorizations: usize,
    pub solves: usize,
    pub krylov_iterations: usize,
}

enum Factors {
    Lu(Lu<usize, f64>),
    Ilu(Ilu0),
}

/// Sparse solver that keeps its last factorization as a preconditioner.
///
/// Systems up to `direct_limit` unknowns use a sparse LU, larger ones an
/// ILU(0). A solve first runs GMRES preconditioned with the cached factors;
/// when that stalls within the Krylov budget the current matrix is
/// refactorized, so every returned solution meets `rel_tol` on the true
/// residual.
pub struct LinearSolver {
    pattern: Option<(Vec<usize>, Vec<usize>)>,
    symbolic: Option<SymbolicLu<usize>>,
    factors: Option<Factors>,
    /// Krylov budget before refactorizing with the LU preconditioner.
    pub max_krylov: usize,
    /// Krylov budget with the ILU(0) preconditioner.
    pub max_krylov_ilu: usize,
    pub restart: usize,
    pub direct_limit: usize,
    pub rel_tol: f64,
    stats: SolverStats,
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver::new()
    }
}

impl LinearSolver {
    pub fn new() -> Self {
        faer::set_global_parallelism(faer::Par::Seq);
        LinearSolver {
            pattern: None,
            symbolic: None,
            factors: None,
            max_krylov: 30,
            max_krylov_ilu: 600,
            restart: 60,
            direct_limit: 30_000,
            rel_tol: 1e-11,
            stats: SolverStats::default(),
        }
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    /// Drops the cached factors; the next solve factorizes from scratch.
    pub fn invalidate(&mut self) {
        self.factors = None;
    }

    pub fn solve(&mut self, a: &CscMatrix, b: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(a.nrows(), b.len());
        self.stats.solves += 1;
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let tol = self.rel_tol * bnorm;
        if self.factors.is_some() && self.same_pattern(a) {
            if let Some(x) = self.gmres(a, b, vec![0.0; b.len()], tol) {
                return Ok(x);
            }
        }
        self.factorize(a)?;
        let mut x = b.to_vec();
        self.precondition(&mut x);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(FbiError::LinearSolver(
                "preconditioner produced non-finite values (singular matrix?)".into(),
            ));
        }
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
        if norm2(&r) <= tol {
            return Ok(x);
        }
        self.gmres(a, b, x, tol).ok_or_else(|| {
            FbiError::LinearSolver(format!(
                "GMRES with a fresh factorization did not reach tolerance {tol:e} (n = {})",
                b.len()
            ))
        })
    }

    fn same_pattern(&self, a: &CscMatrix) -> bool {
        matches!(&self.pattern, Some((cp, ri)) if cp == a.col_ptr() && ri == a.row_idx())
    }

    fn factorize(&mut self, a: &CscMatrix) -> Result<()> {
        self.stats.factorizations += 1;
        if a.nrows() > self.direct_limit {
            self.pattern = Some((a.col_ptr().to_vec(), a.row_idx().to_vec()));
            self.factors = Some(Factors::Ilu(Ilu0::new(a)?));
            return Ok(());
        }
        let sym = SymbolicSparseColMatRef::new_checked(a.nrows(), a.ncols(), a.col_ptr(), None, a.row_idx());
        if !self.same_pattern(a) {
            let symbolic = SymbolicLu::try_new(sym)
                .map_err(|e| FbiError::LinearSolver(format!("symbolic factorization failed: {e:?}")))?;
            self.symbolic = Some(symbolic);
            self.pattern = Some((a.col_ptr().to_vec(), a.row_idx().to_vec()));
        }
        let mat = SparseColMatRef::new(sym, a.values());
        let symbolic = self.symbolic.clone().expect("symbolic factorization present");
        let lu = Lu::try_new_with_symbolic(symbolic, mat)
            .map_err(|e| FbiError::LinearSolver(format!("numeric factorization failed: {e:?}")))?;
        self.factors = Some(Factors::Lu(lu));
        Ok(())
    }

    fn precondition(&self, x: &mut [f64]) {
        let n = x.len();
        match self.factors.as_ref().expect("factorization present") {
            Factors::Lu(lu) => lu.solve_in_place(MatMut::from_column_major_slice_mut(x, n, 1)),
            Factors::Ilu(ilu) => ilu.apply(x),
        }
    }

    /// Right-preconditioned restarted GMRES; `None` if the Krylov budget does not suffice.
    fn gmres(&mut self, a: &CscMatrix, b: &[f64], mut x: Vec<f64>, tol: f64) -> Option<Vec<f64>> {
        let n = b.len();
        let m = match self.factors {
            Some(Factors::Ilu(_)) => self.max_krylov_ilu,
            _ => self.max_krylov,
        };
        let restart = self.restart.max(1);
        let mut used = 0;
        while used < m {
            let ax = a.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let beta = norm2(&r);
            if beta <= tol {
                return Some(x);
            }
            let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
            let mut precond: Vec<Vec<f64>> = Vec::new();
            let mut h: Vec<Vec<f64>> = Vec::new();
            let mut cs: Vec<f64> = Vec::new();
            let mut sn: Vec<f64> = Vec::new();
            let mut g = vec![beta];
            let mut k = 0;
            let mut converged = false;
            while used < m && k < restart {
                let mut z = basis[k].clone();
                self.precondition(&mut z);
                let mut w = a.mul_vec(&z);
                precond.push(z);
                let mut hk = vec![0.0; k + 2];
                for (i, v) in basis.iter().enumerate() {
                    let hij = dot(&w, v);
                    hk[i] = hij;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= hij * vi);
                }
                let wn = norm2(&w);
                hk[k + 1] = wn;
                for i in 0..k {
                    let t = cs[i] * hk[i] + sn[i] * hk[i + 1];
                    hk[i + 1] = -sn[i] * hk[i] + cs[i] * hk[i + 1];
                    hk[i] = t;
                }
                let denom = (hk[k] * hk[k] + hk[k + 1] * hk[k + 1]).sqrt();
                let (c, s) = if denom == 0.0 {
                    (1.0, 0.0)
                } else {
                    (hk[k] / denom, hk[k + 1] / denom)
                };
                cs.push(c);
                sn.push(s);
                hk[k] = denom;
                hk[k + 1] = 0.0;
                g.push(-s * g[k]);
                g[k] *= c;
                h.push(hk);
                used += 1;
                self.stats.krylov_iterations += 1;
                k += 1;
                if g[k].abs() <= 0.5 * tol || wn == 0.0 {
                    converged = true;
                    break;
                }
                basis.push(w.iter().map(|v| v / wn).collect());
            }
            // back substitution on the triangular Hessenberg factor
            let mut y = vec![0.0; k];
            for i in (0..k).rev() {
                let mut s = g[i];
                for j in (i + 1)..k {
                    s -= h[j][i] * y[j];
                }
                y[i] = s / h[i][i];
            }
            for (j, yj) in y.iter().enumerate() {
                for i in 0..n {
                    x[i] += yj * precond[j][i];
                }
            }
            if converged {
                let ax = a.mul_vec(&x);
                let res: f64 = b
                    .iter()
                    .zip(&ax)
                    .map(|(bi, ai)| (bi - ai) * (bi - ai))
                    .sum::<f64>()
                    .sqrt();
                if res <= tol {
                    return Some(x);
                }
            }
        }
        None
    }
}

use std::io::Write;

use crate::error::{FbiError, Result};

/// Diagnostics of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub time: f64,
    pub outer_iters: usize,
    /// `|(K_FF v_f - K_FB v_b) / epsilon|_2`.
    pub violation_unscaled: f64,
    /// `(int |v_f(r) - v_b|^2 ds)^(1/2)` along the coupled centerline.
    pub violation_scaled: f64,
    pub f_f_norm: f64,
    pub f_b_norm: f64,
    pub omega_history: Vec<f64>,
    pub fluid_newton: usize,
    pub beam_newton: usize,
    /// Largest nodal `|v_b - v_f(x_b)|` over beam nodes inside the fluid domain.
    pub slip_max: f64,
}

impl StepReport {
    /// Last relaxation factor; 1 when the step needed no relaxation.
    pub fn omega_last(&self) -> f64 {
        self.omega_history.last().copied().unwrap_or(1.0)
    }
}

pub const STEP_CSV_HEADER: &str =
    "t,iters,violation_unscaled,violation_scaled,f_F_norm,f_B_norm,omega_last,fluid_newton,beam_newton,slip_max";

fn step_fields(r: &StepReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{}",
        r.time,
        r.outer_iters,
        r.violation_unscaled,
        r.violation_scaled,
        r.f_f_norm,
        r.f_b_norm,
        r.omega_last(),
        r.fluid_newton,
        r.beam_newton,
        r.slip_max
    )
}

/// Writes the step report table. Floats use the shortest round-trip
/// representation, so identical runs give identical bytes.
pub fn write_step_csv(mut w: impl Write, reports: &[StepReport]) -> Result<()> {
    writeln!(w, "{STEP_CSV_HEADER}")?;
    for r in reports {
        write_step_row(&mut w, r)?;
    }
    Ok(())
}

/// Writes one data row of the step table, without header.
pub fn write_step_row(mut w: impl Write, r: &StepReport) -> Result<()> {
    writeln!(w, "{}", step_fields(r))?;
    Ok(())
}

/// One completed run of a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub key: String,
    pub value: String,
    pub last: StepReport,
    pub slip_max_over_time: f64,
    pub violation_max_over_time: f64,
}

impl SweepEntry {
    pub fn new(key: &str, value: &str, reports: &[StepReport]) -> Result<Self> {
        let last = reports
            .last()
            .cloned()
            .ok_or_else(|| FbiError::Config(format!("sweep run {key}={value} produced no steps")))?;
        let fold = |f: fn(&StepReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
        Ok(SweepEntry {
            key: key.to_string(),
            value: value.to_string(),
            last,
            slip_max_over_time: fold(|r| r.slip_max),
            violation_max_over_time: fold(|r| r.violation_scaled),
        })
    }
}

/// Summary with one row per run: the final step report followed by maxima over time.
pub fn write_sweep_summary(mut w: impl Write, entries: &[SweepEntry]) -> Result<()> {
    writeln!(
        w,
        "key,value,{STEP_CSV_HEADER},slip_max_over_time,violation_scaled_max_over_time"
    )?;
    for e in entries {
        writeln!(
            w,
            "{},{},{},{},{}",
            e.key,
            e.value,
            step_fields(&e.last),
            e.slip_max_over_time,
            e.violation_max_over_time
        )?;
    }
    Ok(())
}

/// Least-squares line through `(log10 x, log10 y)`: `(slope, intercept, r^2)`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(FbiError::Config("log-log fit needs at least two (x, y) pairs".into()));
    }
    if let Some(k) = (0..x.len()).find(|&k| !(x[k] > 0.0 && y[k] > 0.0)) {
        return Err(FbiError::Config(format!(
            "log-log fit needs positive values, row {k} has ({}, {})",
            x[k], y[k]
        )));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FbiError::Config("log-log fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, my - slope * mx, r2))
}

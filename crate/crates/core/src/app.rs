//! Running configured simulations: single runs, sweeps and their output files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::beam::write_beam_vtk;
use crate::config::{RawConfig, SimulationConfig};
use crate::coupling::write_segments_csv;
use crate::driver::{
    fit_loglog_slope, write_step_csv, write_step_row, write_sweep_summary, Simulation, StepReport, SweepEntry,
    STEP_CSV_HEADER,
};
use crate::error::{FbiError, Result};
use crate::fluid::{write_fluid_vtk, FluidState};
use crate::mesh::{write_mesh, FluidMesh};
use crate::Vec3;

pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.csv";
pub const PROFILE_FILE: &str = "profile.csv";
pub const SEGMENTS_FILE: &str = "segments.csv";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Parameter sweep: key and the values to run in sequence.
    pub sweep: Option<(String, Vec<String>)>,
    pub mesh_out: Option<PathBuf>,
    /// Print per-step progress to stderr.
    pub verbose: bool,
}

/// Result of one configured run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub reports: Vec<StepReport>,
    /// Final velocity profile `(point, velocity)` along the configured line.
    pub profile: Vec<(Vec3, Vec3)>,
}

/// Penalty sweep fit of a diagnostic against `coupling.epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFit {
    pub column: &'static str,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub entries: Vec<SweepEntry>,
    pub runs: Vec<RunOutput>,
    pub fits: Vec<SweepFit>,
}

/// Samples the velocity at `n` equidistant points from `a` to `b`; points
/// outside the mesh are skipped.
pub fn sample_profile(mesh: &FluidMesh, state: &FluidState, a: Vec3, b: Vec3, n: usize) -> Vec<(Vec3, Vec3)> {
    (0..n)
        .filter_map(|i| {
            let x = a + (b - a) * (i as f64 / (n - 1).max(1) as f64);
            state.sample(mesh, &x).map(|v| (x, v))
        })
        .collect()
}

pub fn write_profile_csv(mut w: impl Write, profile: &[(Vec3, Vec3)]) -> Result<()> {
    writeln!(w, "x,y,z,vx,vy,vz")?;
    for (x, v) in profile {
        writeln!(w, "{},{},{},{},{},{}", x.x, x.y, x.z, v.x, v.y, v.z)?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| FbiError::Config(format!("cannot create {}: {e}", path.display())))
}

fn write_snapshot(dir: &Path, sim: &Simulation) -> Result<()> {
    let k = sim.steps_done();
    write_fluid_vtk(
        create(&dir.join(format!("fluid_{k:05}.vtk")))?,
        sim.fluid_mesh(),
        sim.fluid_state(),
    )?;
    write_beam_vtk(
        create(&dir.join(format!("beam_{k:05}.vtk")))?,
        sim.beam_mesh(),
        sim.beam_state(),
    )?;
    Ok(())
}

/// Runs one configuration and writes its outputs under `config.output.dir`.
///
/// The step table is written row by row as the run progresses, so a failed
/// run leaves the completed steps on disk.
pub fn run_single(config: &SimulationConfig, options: &RunOptions) -> Result<RunOutput> {
    let out = &config.output;
    let setup = config.setup()?;
    std::fs::create_dir_all(&out.dir)
        .map_err(|e| FbiError::Config(format!("cannot create output directory {}: {e}", out.dir.display())))?;
    if let Some(path) = &options.mesh_out {
        let mut w = create(path)?;
        write_mesh(&setup.fluid_mesh, &mut w)?;
        w.flush()?;
    }
    let mut sim = Simulation::new(setup)?;
    let mut csv = match &out.csv {
        Some(name) => {
            let mut w = create(&out.dir.join(name))?;
            writeln!(w, "{STEP_CSV_HEADER}")?;
            Some(w)
        }
        None => None,
    };
    if out.vtk_every_n > 0 {
        write_snapshot(&out.dir, &sim)?;
    }
    let total = sim.num_steps();
    let reports = sim.run(|sim, r| {
        if let Some(w) = csv.as_mut() {
            write_step_row(&mut *w, r)?;
            w.flush()?;
        }
        if out.vtk_every_n > 0 && sim.steps_done() % out.vtk_every_n == 0 {
            write_snapshot(&out.dir, sim)?;
        }
        if options.verbose {
            eprintln!(
                "step {}/{total} t = {:.6} iters = {} violation = {:e}",
                sim.steps_done(),
                r.time,
                r.outer_iters,
                r.violation_unscaled
            );
        }
        Ok(())
    })?;
    if out.segments {
        let mut w = create(&out.dir.join(SEGMENTS_FILE))?;
        write_segments_csv(&mut w, sim.segments())?;
        w.flush()?;
    }
    let profile = match out.profile {
        Some((a, b, n)) => {
            let p = sample_profile(sim.fluid_mesh(), sim.fluid_state(), a, b, n);
            let mut w = create(&out.dir.join(PROFILE_FILE))?;
            write_profile_csv(&mut w, &p)?;
            w.flush()?;
            p
        }
        None => Vec::new(),
    };
    Ok(RunOutput {
        dir: out.dir.clone(),
        reports,
        profile,
    })
}

/// Runs `raw` once per sweep value, each in `<output.dir>/<key>=<value>/`,
/// and writes the combined summary to `<output.dir>/sweep_summary.csv`.
pub fn run_sweep(raw: &RawConfig, key: &str, values: &[String], options: &RunOptions) -> Result<SweepOutput> {
    if values.is_empty() {
        return Err(FbiError::Config(format!("sweep over '{key}' has no values")));
    }
    // validate every variant before running any of them
    let mut configs = Vec::with_capacity(values.len());
    let mut errors = Vec::new();
    for v in values {
        let mut r = raw.clone();
        r.apply_overrides(&[format!("{key}={v}")])?;
        match SimulationConfig::from_raw(r) {
            Ok(c) => configs.push(c),
            Err(FbiError::Validation(e)) => errors.extend(e.into_iter().map(|m| format!("{key}={v}: {m}"))),
            Err(e) => return Err(e),
        }
    }
    if !errors.is_empty() {
        return Err(FbiError::Validation(errors));
    }
    let base = configs[0].output.dir.clone();
    let mut runs = Vec::new();
    let mut entries = Vec::new();
    for (mut config, v) in configs.into_iter().zip(values) {
        config.output.dir = base.join(format!("{key}={v}"));
        let opts = RunOptions {
            sweep: None,
            mesh_out: None,
            ..options.clone()
        };
        let run = run_single(&config, &opts)?;
        entries.push(SweepEntry::new(key, v, &run.reports)?);
        runs.push(run);
    }
    let mut w = create(&base.join(SWEEP_SUMMARY_FILE))?;
    write_sweep_summary(&mut w, &entries)?;
    w.flush()?;

    let mut fits = Vec::new();
    if key == "coupling.epsilon" && entries.len() >= 2 {
        let eps: Vec<f64> = values.iter().map(|v| v.parse::<f64>().unwrap_or(f64::NAN)).collect();
        let columns: [(&'static str, fn(&SweepEntry) -> f64); 3] = [
            ("violation_unscaled", |e| e.last.violation_unscaled),
            ("violation_scaled", |e| e.last.violation_scaled),
            ("slip_max_over_time", |e| e.slip_max_over_time),
        ];
        for (column, f) in columns {
            let y: Vec<f64> = entries.iter().map(f).collect();
            if let Ok((slope, intercept, r2)) = fit_loglog_slope(&eps, &y) {
                fits.push(SweepFit {
                    column,
                    slope,
                    intercept,
                    r2,
                });
            }
        }
    }
    Ok(SweepOutput { entries, runs, fits })
}

/// Writes the step table of `reports` to `path`.
pub fn write_step_file(path: &Path, reports: &[StepReport]) -> Result<()> {
    let mut w = create(path)?;
    write_step_csv(&mut w, reports)?;
    w.flush()?;
    Ok(())
}

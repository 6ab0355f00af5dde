//! Plain trajectory runs: load or synthesize an initial state, march to
//! the final time, stream the conservation diagnostics, and write the
//! terminal state in the binary grid format. A zero-length run echoes the
//! input state bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use num_complex::Complex64 as C64;

use dnls_core::dynamics::{integrate, Integrator, ObserverSpec};
use dnls_core::grid::{GridFunction, LatticeGrid};
use dnls_core::interp::pointwise_project;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::experiments::{decay_field, BOUNDARY_MASS_FLAG};
use crate::report::{ChannelSeries, ExperimentReport};

pub fn run(cfg: &ExperimentConfig, _jobs: usize) -> Result<ExperimentReport> {
    run_with_output(cfg, None)
}

/// Variant used by the CLI: also writes the terminal state under `out_dir`.
pub fn run_with_output(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentReport> {
    let params = cfg.model()?;
    let d = params.dim();
    let t_final = cfg.f64_or("simulate.t_final", 1.0)?;
    let tau = cfg.f64_or("simulate.tau", 1e-3)?;
    let samples = cfg.u64_or("simulate.samples", 16)? as usize;

    let u0 = match cfg.get("simulate.input") {
        Some(path) => {
            let mut reader = BufReader::new(File::open(path)?);
            GridFunction::read_binary(&mut reader)?
        }
        None => {
            let n_points = cfg.u64_or("simulate.n_points", 256)? as usize;
            let l = cfg.f64("domain.half_width")?;
            let amplitude = cfg.f64_or("simulate.amplitude", 1.0)?;
            let delta = cfg.f64_or("simulate.delta", 2.5)?;
            let grid = LatticeGrid::new(d, n_points, 2.0 * l / n_points as f64)?;
            let field = decay_field(delta, d, cfg.seed()?, &grid.refined(1))?;
            pointwise_project(&field, &grid)?.scale(C64::new(amplitude, 0.0))
        }
    };

    let mut report = ExperimentReport::new("simulate", cfg.entries().clone());
    report.abscissa = "t".to_string();

    // Sobolev orders of the streamed norms; the header follows the list
    let norms: Vec<u32> = match cfg.get("simulate.norms") {
        Some(_) => cfg.f64_list("simulate.norms")?.iter().map(|&m| m as u32).collect(),
        None => vec![1, 2],
    };

    let integ = Integrator::strang(params, tau)?;
    let observer = ObserverSpec::uniform(t_final, samples.max(1), norms.clone(), false);
    let (u_final, obs) = integrate(&u0, &integ, t_final, &observer)?;

    // trajectory table t,mass,energy,H1,H2[,Hm...]
    let times: Vec<f64> = obs.rows.iter().map(|r| r.t).collect();
    let col = |f: &dyn Fn(&dnls_core::dynamics::ObservationRow) -> f64| -> Vec<(f64, f64)> {
        times.iter().cloned().zip(obs.rows.iter().map(f)).collect()
    };
    report.channels.push(ChannelSeries { name: "mass".into(), points: col(&|r| r.mass) });
    report.channels.push(ChannelSeries { name: "energy".into(), points: col(&|r| r.energy) });
    for (slot, m) in norms.iter().enumerate() {
        report
            .channels
            .push(ChannelSeries { name: format!("H{m}"), points: col(&|r| r.sobolev[slot]) });
    }

    let mass_drift = obs
        .rows
        .iter()
        .map(|r| (r.mass - obs.rows[0].mass).abs())
        .fold(0.0, f64::max)
        / obs.rows[0].mass.max(f64::MIN_POSITIVE);
    report.scalars.insert("relative_mass_drift".into(), mass_drift);
    report.scalars.insert("final_energy".into(), obs.rows.last().expect("rows").energy);
    if obs.max_boundary_fraction > BOUNDARY_MASS_FLAG {
        report.warnings.push(format!(
            "boundary shell mass exceeded {BOUNDARY_MASS_FLAG:.0e} of the total during the run"
        ));
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("simulate_final.grid");
        let mut writer = BufWriter::new(File::create(&path)?);
        u_final.write_binary(&mut writer)?;
    }
    Ok(report)
}

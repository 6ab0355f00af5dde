//! Experiment drivers: one module per kind, plus the shared spectral
//! bookkeeping they use to compare lattice trajectories against continuum
//! surrogates.
//!
//! All comparisons happen in frequency space. Grids sharing one box share
//! the dual frequency step, so the quadrature weight `(n h)^{-d} = (2L)^{-d}`
//! is the same for every refinement and spectra can be compared mode by
//! mode after zero-pad embedding.

pub mod converge;
pub mod functional;
pub mod growth;
pub mod linear_flow;
pub mod simulate;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use dnls_core::grid::LatticeGrid;
use dnls_core::interp::{generate_decay_function, ContinuumField, DecayProfile};
use dnls_core::spectral::{sigma_at, SpectrumFunction};

use crate::config::{ExperimentConfig, Kind};
use crate::error::{HarnessError, Result};
use crate::report::{ExperimentReport, ReportFormat};

/// Runs flagged when the outer 10% shell of the box carries more than this
/// fraction of the mass.
pub const BOUNDARY_MASS_FLAG: f64 = 1e-10;

/// Dispatch a parsed configuration to its driver. Side artifacts beyond
/// the report (the terminal state of a simulate run) go to `out_dir` when
/// one is given.
pub fn run(
    kind: Kind,
    cfg: &ExperimentConfig,
    jobs: usize,
    out_dir: Option<&std::path::Path>,
) -> Result<ExperimentReport> {
    if let Some(declared) = cfg.get("experiment.kind") {
        if Kind::parse(declared)? != kind {
            return Err(HarnessError::Config(format!(
                "config declares kind '{declared}' but '{}' was requested",
                kind.as_str()
            )));
        }
    }
    let started = std::time::Instant::now();
    let mut report = match kind {
        Kind::Converge => converge::run(cfg, jobs)?,
        Kind::LinearFlow => linear_flow::run(cfg, jobs)?,
        Kind::InterpTest => interp_test::run(cfg, jobs, false)?,
        Kind::Aliasing => interp_test::run(cfg, jobs, true)?,
        Kind::Growth => growth::run(cfg, jobs)?,
        Kind::FunctionalCheck => functional::run(cfg, jobs)?,
        Kind::Simulate => simulate::run_with_output(cfg, out_dir)?,
    };
    report.runtime_s = started.elapsed().as_secs_f64();
    Ok(report)
}

/// Run and write the report plus any side files; returns the report.
pub fn run_and_write(
    kind: Kind,
    cfg: &ExperimentConfig,
    jobs: usize,
    out_dir: &std::path::Path,
    format: ReportFormat,
) -> Result<ExperimentReport> {
    let report = run(kind, cfg, jobs, Some(out_dir))?;
    report.write(out_dir, format)?;
    Ok(report)
}

/// Order-preserving parallel map over independent sweep points.
pub(crate) fn map_ordered<I, T>(
    jobs: usize,
    inputs: &[I],
    f: impl Fn(&I) -> Result<T> + Sync,
) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
{
    if jobs <= 1 {
        return inputs.iter().map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| inputs.par_iter().map(&f).collect())
}

/// Sharp-regularity random data for the sweep, synthesized on `grid`.
pub(crate) fn decay_field(
    regularity: f64,
    d: usize,
    seed: u64,
    grid: &LatticeGrid,
) -> Result<ContinuumField> {
    let profile = DecayProfile::new(regularity, d, seed)?;
    Ok(generate_decay_function(&profile, grid)?)
}

pub(crate) fn squared_frequency(spec: &SpectrumFunction, flat: usize) -> f64 {
    let xi = spec.frequency(flat);
    xi[..spec.grid().dim()].iter().map(|x| x * x).sum()
}

/// `H^s` distance of two spectra on the same dual grid under the continuum
/// weight `(1+|xi|^2)^s`.
pub(crate) fn hs_distance(a: &SpectrumFunction, b: &SpectrumFunction, s: f64) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(HarnessError::Core(dnls_core::Error::GridMismatch));
    }
    let w = (a.grid().points_per_axis() as f64 * a.grid().spacing()).powi(-(a.grid().dim() as i32));
    let mut acc = 0.0;
    for flat in 0..a.coeffs().len() {
        let weight = (1.0 + squared_frequency(a, flat)).powf(s);
        acc += weight * (a.coeffs()[flat] - b.coeffs()[flat]).norm_sqr();
    }
    Ok((acc * w).sqrt())
}

/// Diagonal discrete flow `exp(-i t sigma_h)` applied on the spectrum's own
/// lattice.
pub(crate) fn apply_discrete_flow(spec: &mut SpectrumFunction, t: f64) {
    let grid = *spec.grid();
    for flat in 0..spec.coeffs().len() {
        let k = spec.mode_index(flat);
        let phase = C64::from_polar(1.0, -t * sigma_at(&grid, k));
        spec.coeffs_mut()[flat] *= phase;
    }
}

/// Continuum flow `exp(-i t |xi|^2)` on the same dual grid.
pub(crate) fn apply_continuum_flow(spec: &mut SpectrumFunction, t: f64) {
    for flat in 0..spec.coeffs().len() {
        let xi2 = squared_frequency(spec, flat);
        spec.coeffs_mut()[flat] *= C64::from_polar(1.0, -t * xi2);
    }
}

/// Composite trapezoid over uniformly spaced samples on `[0, T]`.
pub(crate) fn trapezoid(values: &[f64], t_final: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let dt = t_final / (values.len() - 1) as f64;
    let mut acc = 0.5 * (values[0] + values[values.len() - 1]);
    for v in &values[1..values.len() - 1] {
        acc += v;
    }
    acc * dt
}

//! Free-flow comparison: evolve the projected data with the exact lattice
//! flow and the continuum flow, measure the `H^s` gap per spacing, and fit
//! the rate. A second channel isolates the in-torus symbol error (the
//! `t h^2 |xi|^4` law), which dominates for smooth data.

use dnls_core::grid::LatticeGrid;
use dnls_core::interp::{embed_spectrum, pointwise_project};
use dnls_core::spectral::dft;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiments::{
    apply_continuum_flow, apply_discrete_flow, decay_field, hs_distance, map_ordered,
    squared_frequency,
};
use crate::report::ExperimentReport;

pub fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentReport> {
    let params = cfg.model()?;
    let d = params.dim();
    let hs = cfg.dyadic_h_values()?;
    let l = cfg.f64("domain.half_width")?;
    let refine = cfg.u64_or("domain.refine", 3)? as u32;
    let s = cfg.f64_or("measure.s", 0.0)?;
    let delta = cfg.f64("measure.delta")?;
    let t_final = cfg.f64_or("measure.t_final", 1.0)?;
    if s.is_nan() || s < 0.0 || s >= delta - d as f64 / 2.0 {
        return Err(HarnessError::Config(format!(
            "need 0 <= s < delta - d/2, got s = {s}, delta = {delta}, d = {d}"
        )));
    }

    let mut report = ExperimentReport::new("linear-flow", cfg.entries().clone());
    let h_min = *hs.last().expect("validated non-empty");
    let master = LatticeGrid::from_half_width(d, l, h_min)?.refined(refine);
    let psi0 = decay_field(delta, d, cfg.seed()?, &master)?;
    let boundary = psi0.as_grid_function().boundary_mass_fraction();
    if boundary > crate::experiments::BOUNDARY_MASS_FLAG {
        report.warnings.push(format!(
            "data carries boundary shell mass fraction {boundary:.2e} (flag at {:.0e})",
            crate::experiments::BOUNDARY_MASS_FLAG
        ));
    }
    let psi0_spec = psi0.spectrum();
    let mut target = psi0_spec.clone();
    apply_continuum_flow(&mut target, t_final);

    struct Point {
        h: f64,
        total: f64,
        symbol: f64,
    }
    let points = map_ordered(jobs, &hs, |&h| -> Result<Point> {
        let coarse = LatticeGrid::from_half_width(d, l, h)?;
        let u0 = pointwise_project(&psi0, &coarse)?;
        let u0_spec = dft(&u0);

        // isolated symbol error: same data, both flows, coarse band only
        let mut lattice_band = u0_spec.clone();
        apply_discrete_flow(&mut lattice_band, t_final);
        let mut continuum_band = u0_spec.clone();
        apply_continuum_flow(&mut continuum_band, t_final);
        let w = (2.0 * l).powi(-(d as i32));
        let mut symbol2 = 0.0;
        for flat in 0..lattice_band.coeffs().len() {
            let weight = (1.0 + squared_frequency(&lattice_band, flat)).powf(s);
            symbol2 +=
                weight * (lattice_band.coeffs()[flat] - continuum_band.coeffs()[flat]).norm_sqr();
        }

        // full gap against the continuum evolution of the full-band data
        let total = hs_distance(&embed_spectrum(&lattice_band, &master)?, &target, s)?;
        Ok(Point { h, total, symbol: (symbol2 * w).sqrt() })
    })?;

    report.add_channel("total", points.iter().map(|p| (p.h, p.total)).collect());
    report.add_channel("symbol", points.iter().map(|p| (p.h, p.symbol)).collect());

    let default_exponent = (delta - s) / 2.0 - d as f64 / 4.0;
    let exponent = cfg.f64_or("measure.expected_slope", default_exponent)?;
    let tolerance = cfg.f64_or("measure.slope_tolerance", 0.2)?;
    let law = "||S_h exp(it Lap_h) Pi_h psi0 - exp(it Lap) psi0||_{H^s} <= C h^((delta-s)/2 - d/4) (1+t)";
    if cfg.bool_or("measure.two_sided", false)? {
        report.assert_slope_within("total", law, exponent, tolerance)?;
    } else {
        report.assert_slope_at_least("total", law, exponent, tolerance)?;
    }
    let fit = report.fit_channel("symbol")?;
    report.report_only("symbol", "in-torus symbol gap, t h^2 |xi|^4 law (slope ~2 for smooth data)", fit.slope);
    Ok(report)
}

//! Functional-inequality sweeps: Gagliardo-Nirenberg and space-time
//! (Strichartz-type) ratios plus the continuous bilinear product bound,
//! evaluated on seeded random data across a spacing sweep. The assertion
//! is uniformity: no upward trend in the spacing.

use dnls_core::grid::LatticeGrid;
use dnls_core::energies::{gagliardo_nirenberg_ratio, is_admissible_pair, strichartz_ratio};
use dnls_core::interp::{
    continuum_sobolev_norm, pointwise_project, shannon_interpolate, shannon_sobolev_norm,
};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiments::{decay_field, map_ordered};
use crate::report::ExperimentReport;

pub fn run(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentReport> {
    let d = cfg.u64_or("model.d", 1)? as usize;
    let hs = cfg.dyadic_h_values()?;
    let l = cfg.f64("domain.half_width")?;
    let seeds = cfg.u64_or("functional.seeds", 20)?;
    let base_seed = cfg.seed()?;
    let delta = cfg.f64_or("functional.delta", 2.0)?;
    let gn_q = cfg.f64_or("functional.gn_q", if d == 1 { 6.0 } else { 4.0 })?;
    let gn_s = cfg.f64_or("functional.gn_s", 1.0)?;
    let st_q = cfg.f64_or("functional.strichartz_q", if d == 1 { 6.0 } else { 3.0 })?;
    let st_r = cfg.f64_or("functional.strichartz_r", f64::INFINITY)?;
    let st_t = cfg.f64_or("functional.t_final", 1.0)?;
    let bi_s = cfg.f64_or("functional.bilinear_s", 0.5)?;
    let bi_s1 = cfg.f64_or("functional.bilinear_s1", 1.0)?;
    let bi_s2 = cfg.f64_or("functional.bilinear_s2", 1.0)?;

    if !is_admissible_pair(st_q, st_r, d) {
        return Err(HarnessError::Config(format!(
            "(q, r) = ({st_q}, {st_r}) is not admissible in dimension {d}: need 3/q + d/r = d/2"
        )));
    }
    if !(bi_s <= bi_s1 && bi_s <= bi_s2 && bi_s < bi_s1 + bi_s2 - d as f64 / 2.0) {
        return Err(HarnessError::Config(format!(
            "bilinear exponents need s <= s1, s2 and s < s1 + s2 - d/2, got ({bi_s}, {bi_s1}, {bi_s2})"
        )));
    }

    let mut report = ExperimentReport::new("functional-check", cfg.entries().clone());
    report.notes.push(format!(
        "space-time pair (q, r) = ({st_q}, {st_r}): 3/q + d/r = d/2 holds in d = {d}"
    ));

    struct Point {
        h: f64,
        gn_mean: f64,
        gn_max: f64,
        st_mean: f64,
        st_max: f64,
        bi_mean: f64,
        bi_max: f64,
    }
    let points = map_ordered(jobs, &hs, |&h| -> Result<Point> {
        let grid = LatticeGrid::from_half_width(d, l, h)?;
        let fine = grid.refined(1);
        let mut gn = Vec::new();
        let mut st = Vec::new();
        let mut bi = Vec::new();
        for i in 0..seeds {
            let f = decay_field(delta, d, base_seed + i, &fine)?;
            let g = decay_field(delta, d, base_seed + 1000 + i, &fine)?;
            let fc = pointwise_project(&f, &grid)?;
            let gc = pointwise_project(&g, &grid)?;
            gn.push(gagliardo_nirenberg_ratio(&fc, gn_q, gn_s)?);
            st.push(strichartz_ratio(&fc, st_q, st_r, st_t)?);
            let product = shannon_interpolate(&fc, 1)?.mul(&shannon_interpolate(&gc, 1)?)?;
            let num = continuum_sobolev_norm(&product, bi_s);
            let den = shannon_sobolev_norm(&fc, bi_s1) * shannon_sobolev_norm(&gc, bi_s2);
            bi.push(num / den);
        }
        let stats = |v: &[f64]| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let max = v.iter().cloned().fold(0.0, f64::max);
            (mean, max)
        };
        let (gn_mean, gn_max) = stats(&gn);
        let (st_mean, st_max) = stats(&st);
        let (bi_mean, bi_max) = stats(&bi);
        Ok(Point { h, gn_mean, gn_max, st_mean, st_max, bi_mean, bi_max })
    })?;

    report.add_channel("gn_ratio", points.iter().map(|p| (p.h, p.gn_mean)).collect());
    report.add_channel("gn_ratio_max", points.iter().map(|p| (p.h, p.gn_max)).collect());
    report.add_channel("strichartz_ratio", points.iter().map(|p| (p.h, p.st_mean)).collect());
    report.add_channel("strichartz_ratio_max", points.iter().map(|p| (p.h, p.st_max)).collect());
    report.add_channel("bilinear_ratio", points.iter().map(|p| (p.h, p.bi_mean)).collect());
    report.add_channel("bilinear_ratio_max", points.iter().map(|p| (p.h, p.bi_max)).collect());

    let trend = cfg.f64_or("functional.trend_tolerance", 0.15)?;
    report.assert_slope_within(
        "gn_ratio",
        "||u||_{L^q} <= C ||u||_{L^2}^(1-theta) ||u||_{H^s dot}^theta, C uniform in h",
        0.0,
        trend,
    )?;
    report.assert_slope_within(
        "strichartz_ratio",
        "||exp(it Lap) u||_{L^q_t L^r} <= C ||u||_{H^{1/q}}, C uniform in h",
        0.0,
        trend,
    )?;
    report.assert_slope_within(
        "bilinear_ratio",
        "||fg||_{H^s} <= C ||f||_{H^s1} ||g||_{H^s2}, C uniform in h",
        0.0,
        trend,
    )?;
    Ok(report)
}

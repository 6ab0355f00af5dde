//! Rate extraction: least squares on `(log h, log e)`.

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Some measurements sat at or below the floor `1e-16` and were clamped.
    pub floored: bool,
}

/// Floor for vanishing error measurements; fitting zero is meaningless, so
/// clamped points are flagged for the caller to warn about.
pub const ERROR_FLOOR: f64 = 1e-16;

pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 3 {
        return Err(HarnessError::Config(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut floored = false;
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(h, e) in points {
        if h.is_nan() || h <= 0.0 {
            return Err(HarnessError::Config(format!("slope fit needs positive abscissae, got {h}")));
        }
        if !e.is_finite() {
            return Err(HarnessError::Config(format!("slope fit got non-finite value {e}")));
        }
        let e = if e < ERROR_FLOOR {
            floored = true;
            ERROR_FLOOR
        } else {
            e
        };
        xs.push(h.ln());
        ys.push(e.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - mx) * (y - my);
        var += (x - mx) * (x - mx);
    }
    let slope = cov / var;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let fit = intercept + slope * x;
        ss_res += (y - fit) * (y - fit);
        ss_tot += (y - my) * (y - my);
    }
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LogLogFit { slope, intercept, r2, floored })
}

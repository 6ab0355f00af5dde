//! Time integration of the lattice Schrödinger equation
//! `i du/dt + Lap u = lambda |u|^(p-1) u`, conservation diagnostics, the
//! recursive stack of time derivatives, and reference solutions for
//! continuum-limit studies.
//!
//! The integrator is Strang splitting with exact sub-flows: the linear flow
//! is diagonal in Fourier and the pointwise gauge flow leaves `|u|`
//! invariant, so the only time error is the O(tau^2) splitting commutator.
//! Both sub-flows are L2 isometries, which makes the mass exact up to
//! roundoff no matter the step count.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, LatticeGrid};
use crate::spectral::{bin_index, fft_all_axes, sigma_at};

/// Nonlinearity power, sign and dimension.
///
/// Admissible sets: `lambda = 1` with `d` in {1, 2} and odd `p >= 3`
/// (defocusing), `lambda = -1` with `d = 1`, `p = 3` (focusing cubic), and
/// `lambda = 0` as the linear degeneration used by diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    lambda: i32,
    p: u32,
    d: usize,
}

impl ModelParams {
    pub fn new(lambda: i32, p: u32, d: usize) -> Result<Self> {
        if p < 3 || p.is_multiple_of(2) {
            return Err(Error::InvalidParameters(format!(
                "nonlinearity power must be odd and >= 3, got {p}"
            )));
        }
        match (lambda, d) {
            (1, 1) | (1, 2) => {}
            (-1, 1) if p == 3 => {}
            (-1, _) => {
                return Err(Error::InvalidParameters(
                    "focusing runs support only the cubic case in one dimension".into(),
                ))
            }
            (0, 1) | (0, 2) => {}
            _ => {
                return Err(Error::InvalidParameters(format!(
                    "unsupported combination lambda = {lambda}, d = {d}, p = {p}"
                )))
            }
        }
        Ok(Self { lambda, p, d })
    }

    pub fn defocusing_cubic(d: usize) -> Self {
        Self::new(1, 3, d).expect("valid parameters")
    }

    pub fn focusing_cubic_1d() -> Self {
        Self::new(-1, 3, 1).expect("valid parameters")
    }

    pub fn linear(d: usize) -> Self {
        Self::new(0, 3, d).expect("valid parameters")
    }

    pub fn lambda(&self) -> f64 {
        self.lambda as f64
    }

    pub fn lambda_sign(&self) -> i32 {
        self.lambda
    }

    pub fn power(&self) -> u32 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_linear(&self) -> bool {
        self.lambda == 0
    }
}

/// Time-stepping scheme; a single second-order splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Strang,
}

/// Scheme, step size and model for one trajectory. The splitting is
/// unconditionally stable; `tau` is chosen by accuracy only.
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub params: ModelParams,
    pub tau: f64,
    pub scheme: Scheme,
}

impl Integrator {
    pub fn strang(params: ModelParams, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
        }
        Ok(Self { params, tau, scheme: Scheme::Strang })
    }
}

/// Pointwise nonlinearity `lambda |u|^(p-1) u`.
pub fn nonlinearity(u: &GridFunction, params: &ModelParams) -> GridFunction {
    let half = ((params.p - 1) / 2) as i32;
    let lambda = params.lambda();
    u.map(|v| lambda * v.norm_sqr().powi(half) * v)
}

/// Exact gauge sub-flow over `dt`: rotate each value by
/// `exp(-i lambda |u|^(p-1) dt)`; `|u|` is pointwise invariant.
fn gauge_kick(u: &GridFunction, params: &ModelParams, dt: f64) -> GridFunction {
    if params.is_linear() {
        return u.clone();
    }
    let half = ((params.p - 1) / 2) as i32;
    let lambda = params.lambda();
    u.map(|v| v * C64::from_polar(1.0, -lambda * v.norm_sqr().powi(half) * dt))
}

/// Cached diagonal phases for the drift of one fixed step size.
struct DriftTable {
    tau: f64,
    /// `exp(-i tau sigma_h)` in FFT bin order, so the drift needs no
    /// reordering passes.
    phases: Vec<C64>,
}

impl DriftTable {
    fn new(grid: &LatticeGrid, tau: f64) -> Self {
        let mut phases = vec![C64::new(0.0, 0.0); grid.len()];
        let half = (grid.points_per_axis() / 2) as i64;
        for flat in 0..grid.len() {
            let idx = grid.multi_index(flat);
            let mut k = [0i64; 2];
            for ax in 0..grid.dim() {
                k[ax] = idx[ax] as i64 - half;
            }
            phases[bin_index(grid, flat)] = C64::from_polar(1.0, -tau * sigma_at(grid, k));
        }
        Self { tau, phases }
    }

    fn apply(&self, u: &GridFunction) -> GridFunction {
        let grid = *u.grid();
        let mut work = u.values().to_vec();
        fft_all_axes(&mut work, &grid, true);
        for (w, ph) in work.iter_mut().zip(&self.phases) {
            *w *= ph;
        }
        fft_all_axes(&mut work, &grid, false);
        let scale = 1.0 / grid.len() as f64;
        for w in &mut work {
            *w *= scale;
        }
        GridFunction::new(grid, work).expect("size preserved")
    }
}

/// One Strang step: half kick, full drift, half kick.
pub fn step_strang(u: &GridFunction, integrator: &Integrator) -> GridFunction {
    let table = DriftTable::new(u.grid(), integrator.tau);
    step_with_table(u, integrator, &table)
}

fn step_with_table(u: &GridFunction, integrator: &Integrator, table: &DriftTable) -> GridFunction {
    debug_assert_eq!(table.tau, integrator.tau);
    let half = integrator.tau / 2.0;
    let kicked = gauge_kick(u, &integrator.params, half);
    let drifted = table.apply(&kicked);
    gauge_kick(&drifted, &integrator.params, half)
}

/// What to record along a trajectory.
#[derive(Debug, Clone, Default)]
pub struct ObserverSpec {
    /// Strictly increasing sample times in `(0, T]`; the initial state is
    /// always recorded.
    pub sample_times: Vec<f64>,
    /// Extra Sobolev orders recorded per sample (mass and energy always are).
    pub sobolev_orders: Vec<u32>,
    /// Keep the full state at every sample time.
    pub keep_snapshots: bool,
}

impl ObserverSpec {
    pub fn none() -> Self {
        Self::default()
    }

    /// `samples` uniform intervals over `[0, T]`.
    pub fn uniform(t_final: f64, samples: usize, sobolev_orders: Vec<u32>, keep_snapshots: bool) -> Self {
        let sample_times =
            (1..=samples).map(|i| t_final * i as f64 / samples as f64).collect();
        Self { sample_times, sobolev_orders, keep_snapshots }
    }
}

#[derive(Debug, Clone)]
pub struct ObservationRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub sobolev: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Observations {
    pub rows: Vec<ObservationRow>,
    pub snapshots: Vec<(f64, GridFunction)>,
    /// Largest boundary-shell mass fraction seen at any sample.
    pub max_boundary_fraction: f64,
}

fn record(obs: &mut Observations, spec: &ObserverSpec, t: f64, u: &GridFunction, params: &ModelParams) {
    let sobolev =
        spec.sobolev_orders.iter().map(|&m| crate::spectral::sobolev_norm(u, m as f64)).collect();
    obs.rows.push(ObservationRow { t, mass: mass(u), energy: energy(u, params), sobolev });
    obs.max_boundary_fraction = obs.max_boundary_fraction.max(u.boundary_mass_fraction());
    if spec.keep_snapshots {
        obs.snapshots.push((t, u.clone()));
    }
}

/// March to `T` with Strang steps, landing exactly on every sample time and
/// on `T` with a final short step. Deterministic given its inputs; aborts
/// with the last healthy time when the state stops being finite.
pub fn integrate(
    u0: &GridFunction,
    integrator: &Integrator,
    t_final: f64,
    observers: &ObserverSpec,
) -> Result<(GridFunction, Observations)> {
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(Error::InvalidArgument(format!("final time must be >= 0, got {t_final}")));
    }
    let mut events: Vec<f64> = observers
        .sample_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= t_final)
        .chain(std::iter::once(t_final))
        .collect();
    events.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    events.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * t_final.max(1.0));

    let table = DriftTable::new(u0.grid(), integrator.tau);
    let mut obs = Observations::default();
    record(&mut obs, observers, 0.0, u0, &integrator.params);

    let mut u = u0.clone();
    let mut t = 0.0;
    for &target in &events {
        if target <= t {
            continue;
        }
        while target - t > integrator.tau * (1.0 + 1e-9) {
            u = step_with_table(&u, integrator, &table);
            t += integrator.tau;
            if !u.is_finite() {
                return Err(Error::Instability { t_last: t - integrator.tau, reason: "non-finite state".into() });
            }
        }
        let rest = target - t;
        if rest > integrator.tau * 1e-9 {
            let short = Integrator { tau: rest, ..*integrator };
            u = step_strang(&u, &short);
            if !u.is_finite() {
                return Err(Error::Instability { t_last: t, reason: "non-finite state".into() });
            }
        }
        t = target;
        record(&mut obs, observers, t, &u, &integrator.params);
    }
    Ok((u, obs))
}

/// Conserved mass `||u||_{L2}^2`.
pub fn mass(u: &GridFunction) -> f64 {
    let w = u.grid().cell_volume();
    w * u.values().iter().map(|v| v.norm_sqr()).sum::<f64>()
}

/// Hamiltonian `1/2 ||u||_{H1dot}^2 + lambda/(p+1) ||u||_{L^{p+1}}^{p+1}`,
/// assembled from the real-space forward differences.
pub fn energy(u: &GridFunction, params: &ModelParams) -> f64 {
    let mut kinetic = 0.0;
    for axis in 1..=u.grid().dim() {
        let g = u.forward_difference(axis).expect("axis in range");
        kinetic += g.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * u.grid().cell_volume();
    }
    let p1 = (params.p + 1) as i32;
    let potential: f64 =
        u.values().iter().map(|v| v.norm_sqr().powi(p1 / 2)).sum::<f64>() * u.grid().cell_volume();
    0.5 * kinetic + params.lambda() / p1 as f64 * potential
}

// ---------------------------------------------------------------------------
// Time-derivative jet.
// ---------------------------------------------------------------------------

/// The stack `(u, du/dt, .., d^k u/dt^k)` computed from the equation by the
/// recursion `d^(n+1) u = i (Lap d^n u - lambda d^n(|u|^(p-1) u))`, never by
/// numerical differencing.
#[derive(Debug, Clone)]
pub struct TimeJet {
    params: ModelParams,
    layers: Vec<GridFunction>,
}

impl TimeJet {
    pub fn order(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn layer(&self, n: usize) -> &GridFunction {
        &self.layers[n]
    }

    pub fn layers(&self) -> &[GridFunction] {
        &self.layers
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut v = Vec::with_capacity(parts);
            v.push(first);
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// `d^n/dt^n (u^{n_plus} conj(u)^{n_minus})` by the multinomial Leibniz rule
/// over the layers of the jet (`d^m conj(u) = conj(d^m u)`).
pub fn jet_product_derivative(
    layers: &[GridFunction],
    n: u32,
    n_plus: u32,
    n_minus: u32,
) -> GridFunction {
    let grid = *layers[0].grid();
    let parts = (n_plus + n_minus) as usize;
    debug_assert!(layers.len() > n as usize);
    let mut acc = vec![C64::new(0.0, 0.0); grid.len()];
    for comp in compositions(n, parts) {
        let mut coeff = factorial(n);
        for &a in &comp {
            coeff /= factorial(a);
        }
        for (flat, out) in acc.iter_mut().enumerate() {
            let mut term = C64::new(coeff, 0.0);
            for (slot, &a) in comp.iter().enumerate() {
                let v = layers[a as usize].values()[flat];
                term *= if slot < n_plus as usize { v } else { v.conj() };
            }
            *out += term;
        }
    }
    GridFunction::new(grid, acc).expect("sizes match")
}

/// Build the jet of order `k` at the state `u`.
pub fn time_jet(u: &GridFunction, k: usize, params: &ModelParams) -> Result<TimeJet> {
    let n_plus = params.p.div_ceil(2);
    let n_minus = (params.p - 1) / 2;
    let mut layers = vec![u.clone()];
    for n in 0..k {
        let linear = layers[n].laplacian();
        let next = if params.is_linear() {
            linear.scale(C64::i())
        } else {
            let nl = jet_product_derivative(&layers, n as u32, n_plus, n_minus);
            linear.sub(&nl.scale(C64::new(params.lambda(), 0.0)))?.scale(C64::i())
        };
        if !next.is_finite() {
            return Err(Error::ResourceLimit(format!("jet layer {} is not finite", n + 1)));
        }
        let sup = next.lp_norm(f64::INFINITY)?;
        if sup > 1e120 {
            return Err(Error::ResourceLimit(format!("jet layer {} overflows: {sup}", n + 1)));
        }
        layers.push(next);
    }
    Ok(TimeJet { params: *params, layers })
}

// ---------------------------------------------------------------------------
// Reference solutions.
// ---------------------------------------------------------------------------

/// Standing soliton of the focusing cubic equation in one dimension:
/// `psi(t, x) = sqrt(2) sech(x - x0) exp(i t)`.
pub fn soliton_field(grid: &LatticeGrid, x0: f64, t: f64) -> Result<GridFunction> {
    if grid.dim() != 1 {
        return Err(Error::InvalidParameters("the soliton reference lives in one dimension".into()));
    }
    let phase = C64::from_polar(1.0, t);
    Ok(GridFunction::from_fn(*grid, |a| {
        let amp = 2.0_f64.sqrt() / (a[0] - x0).cosh();
        phase * amp
    }))
}

/// Continuum reference for convergence studies: either the exact soliton or
/// a much finer lattice trajectory standing in for the limit equation.
pub enum Reference {
    Soliton { grid: LatticeGrid, x0: f64 },
    FineGrid(FineGridReference),
}

pub struct FineGridReference {
    integrator: Integrator,
    state: GridFunction,
    t: f64,
}

impl Reference {
    pub fn soliton(grid: LatticeGrid, params: &ModelParams, x0: f64) -> Result<Self> {
        if *params != ModelParams::focusing_cubic_1d() {
            return Err(Error::InvalidParameters(
                "the soliton reference requires the focusing cubic equation in one dimension".into(),
            ));
        }
        Ok(Reference::Soliton { grid, x0 })
    }

    pub fn fine_grid(psi0: GridFunction, params: &ModelParams, tau_ref: f64) -> Result<Self> {
        let integrator = Integrator::strang(*params, tau_ref)?;
        Ok(Reference::FineGrid(FineGridReference { integrator, state: psi0, t: 0.0 }))
    }

    pub fn grid(&self) -> &LatticeGrid {
        match self {
            Reference::Soliton { grid, .. } => grid,
            Reference::FineGrid(f) => f.state.grid(),
        }
    }

    /// State at time `t`; fine-grid references only advance forward.
    pub fn state_at(&mut self, t: f64) -> Result<GridFunction> {
        match self {
            Reference::Soliton { grid, x0 } => soliton_field(grid, *x0, t),
            Reference::FineGrid(f) => {
                if t < f.t - 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "fine-grid reference cannot rewind from {} to {t}",
                        f.t
                    )));
                }
                if t > f.t + 1e-12 {
                    let (state, _) =
                        integrate(&f.state, &f.integrator, t - f.t, &ObserverSpec::none())?;
                    f.state = state;
                    f.t = t;
                }
                Ok(f.state.clone())
            }
        }
    }
}

/// Integrate the projected soliton on `grid` to `t_final` and return the L2
/// distance from the closed form; errors above the acceptance threshold.
pub fn validate_soliton(grid: &LatticeGrid, x0: f64, tau: f64, t_final: f64, threshold: f64) -> Result<f64> {
    let params = ModelParams::focusing_cubic_1d();
    let integrator = Integrator::strang(params, tau)?;
    let u0 = soliton_field(grid, x0, 0.0)?;
    let (u, _) = integrate(&u0, &integrator, t_final, &ObserverSpec::none())?;
    let exact = soliton_field(grid, x0, t_final)?;
    let residual = u.sub(&exact)?.lp_norm(2.0)?;
    if residual > threshold {
        return Err(Error::ReferenceNotConverged(format!(
            "soliton residual {residual:.3e} at t = {t_final} exceeds {threshold:.1e} on n = {}",
            grid.points_per_axis()
        )));
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::linear_flow;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: LatticeGrid, seed: u64, amp: f64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len())
            .map(|_| C64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)))
            .collect();
        GridFunction::new(grid, values).unwrap()
    }

    fn smooth_field(grid: LatticeGrid, amp: f64) -> GridFunction {
        let l = grid.half_width();
        GridFunction::from_fn(grid, |a| {
            let envelope = (-a[0] * a[0] / (0.08 * l * l)).exp();
            C64::new(amp * envelope, 0.3 * amp * envelope * (a[0] * 1.1).sin())
        })
    }

    #[test]
    fn parameter_set_validation() {
        assert!(ModelParams::new(1, 3, 1).is_ok());
        assert!(ModelParams::new(1, 7, 2).is_ok());
        assert!(ModelParams::new(-1, 3, 1).is_ok());
        assert!(ModelParams::new(0, 3, 2).is_ok());
        assert!(ModelParams::new(-1, 5, 1).is_err());
        assert!(ModelParams::new(-1, 3, 2).is_err());
        assert!(ModelParams::new(1, 4, 1).is_err());
        assert!(ModelParams::new(1, 3, 3).is_err());
        assert!(ModelParams::new(2, 3, 1).is_err());
        let params = ModelParams::defocusing_cubic(1);
        assert!(Integrator::strang(params, 0.0).is_err());
        assert!(Integrator::strang(params, -0.1).is_err());
        assert!(Integrator::strang(params, f64::NAN).is_err());
    }

    #[test]
    fn nonlinearity_examples() {
        let grid = LatticeGrid::new(1, 8, 0.5).unwrap();
        let params = ModelParams::defocusing_cubic(1);
        let zero = GridFunction::zeros(grid);
        assert!(nonlinearity(&zero, &params).lp_norm(f64::INFINITY).unwrap() == 0.0);
        // p = 3, value 2 at one point: |2|^2 * 2 = 8
        let mut u = GridFunction::zeros(grid);
        u.values_mut()[3] = C64::new(2.0, 0.0);
        let n = nonlinearity(&u, &params);
        assert!((n.values()[3] - C64::new(8.0, 0.0)).norm() < 1e-14);
        // gauge equivariance
        let v = random_field(grid, 3, 1.0);
        let theta = C64::from_polar(1.0, 0.9);
        let a = nonlinearity(&v.scale(theta), &params);
        let b = nonlinearity(&v, &params).scale(theta);
        for i in 0..grid.len() {
            assert!((a.values()[i] - b.values()[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn linear_step_equals_linear_flow() {
        let grid = LatticeGrid::new(1, 32, 0.25).unwrap();
        let u = random_field(grid, 5, 1.0);
        let integ = Integrator::strang(ModelParams::linear(1), 0.37).unwrap();
        let a = step_strang(&u, &integ);
        let b = linear_flow(&u, 0.37);
        for i in 0..grid.len() {
            assert!((a.values()[i] - b.values()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn single_site_phase_rotation() {
        // huge spacing kills the Laplacian; the step must match the exact
        // single-site solution c exp(-i lambda |c|^2 t) to O(tau^3)
        let grid = LatticeGrid::new(1, 4, 1e6).unwrap();
        let c = C64::new(1.2, -0.7);
        let mut u = GridFunction::zeros(grid);
        u.values_mut()[2] = c;
        let tau = 0.01;
        let integ = Integrator::strang(ModelParams::defocusing_cubic(1), tau).unwrap();
        let stepped = step_strang(&u, &integ);
        let exact = c * C64::from_polar(1.0, -c.norm_sqr() * tau);
        assert!((stepped.values()[2] - exact).norm() < 1e-11);
    }

    #[test]
    fn mass_examples_and_conservation() {
        let grid = LatticeGrid::new(1, 8, 0.25).unwrap();
        assert_eq!(mass(&GridFunction::zeros(grid)), 0.0);
        assert!((mass(&GridFunction::delta_at_origin(grid)) - 0.25).abs() < 1e-15);

        let grid = LatticeGrid::new(1, 64, 0.25).unwrap();
        let u0 = smooth_field(grid, 1.0);
        let m0 = mass(&u0);
        let integ = Integrator::strang(ModelParams::defocusing_cubic(1), 1e-3).unwrap();
        let mut u = u0;
        for _ in 0..1000 {
            u = step_strang(&u, &integ);
        }
        assert!((mass(&u) - m0).abs() <= 1e-11 * m0);
    }

    #[test]
    fn energy_examples() {
        let grid = LatticeGrid::new(1, 16, 0.5).unwrap();
        let params = ModelParams::defocusing_cubic(1);
        assert_eq!(energy(&GridFunction::zeros(grid), &params), 0.0);
        // constant c: gradient part zero, energy = (1/4)(2L)|c|^4
        let c = C64::new(0.8, 0.6); // |c| = 1
        let u = GridFunction::constant(grid, c);
        let expect = 0.25 * 2.0 * grid.half_width();
        assert!((energy(&u, &params) - expect).abs() < 1e-12);
    }

    #[test]
    fn integrate_zero_time_is_identity() {
        let grid = LatticeGrid::new(1, 16, 0.5).unwrap();
        let u = random_field(grid, 7, 1.0);
        let integ = Integrator::strang(ModelParams::defocusing_cubic(1), 0.1).unwrap();
        let (v, obs) = integrate(&u, &integ, 0.0, &ObserverSpec::none()).unwrap();
        assert_eq!(u, v);
        assert_eq!(obs.rows.len(), 1);
    }

    #[test]
    fn strang_is_second_order() {
        let grid = LatticeGrid::new(1, 64, 0.25).unwrap();
        let u0 = smooth_field(grid, 1.0);
        let params = ModelParams::defocusing_cubic(1);
        let t_final = 0.5;
        let err = |tau: f64| {
            let a = integrate(&u0, &Integrator::strang(params, tau).unwrap(), t_final, &ObserverSpec::none())
                .unwrap()
                .0;
            let b = integrate(&u0, &Integrator::strang(params, tau / 2.0).unwrap(), t_final, &ObserverSpec::none())
                .unwrap()
                .0;
            a.sub(&b).unwrap().lp_norm(2.0).unwrap()
        };
        let e1 = err(0.02);
        let e2 = err(0.01);
        let order = (e1 / e2).log2();
        assert!((1.8..=2.2).contains(&order), "order {order}");
    }

    #[test]
    fn energy_drift_shrinks_quadratically() {
        let grid = LatticeGrid::new(1, 64, 0.25).unwrap();
        let u0 = smooth_field(grid, 1.0);
        let params = ModelParams::defocusing_cubic(1);
        let e0 = energy(&u0, &params);
        let drift = |tau: f64| {
            let u = integrate(&u0, &Integrator::strang(params, tau).unwrap(), 1.0, &ObserverSpec::none())
                .unwrap()
                .0;
            (energy(&u, &params) - e0).abs()
        };
        let d1 = drift(0.02);
        let d2 = drift(0.01);
        let factor = d1 / d2;
        assert!((3.0..=5.0).contains(&factor), "factor {factor}");
    }

    #[test]
    fn gauge_invariance_of_flow() {
        let grid = LatticeGrid::new(1, 32, 0.25).unwrap();
        let u0 = smooth_field(grid, 0.8);
        let params = ModelParams::defocusing_cubic(1);
        let integ = Integrator::strang(params, 5e-3).unwrap();
        let theta = C64::from_polar(1.0, 1.234);
        let a = integrate(&u0.scale(theta), &integ, 0.5, &ObserverSpec::none()).unwrap().0;
        let b = integrate(&u0, &integ, 0.5, &ObserverSpec::none()).unwrap().0.scale(theta);
        let diff = a.sub(&b).unwrap().lp_norm(2.0).unwrap();
        assert!(diff <= 1e-11 * b.lp_norm(2.0).unwrap());
    }

    #[test]
    fn time_reversal_returns_to_initial_state() {
        // conjugation inverts every sub-flow exactly, and the splitting is
        // time-symmetric, so the return error is pure roundoff -- well
        // inside the O(tau^2) budget
        let grid = LatticeGrid::new(1, 48, 0.25).unwrap();
        let u0 = smooth_field(grid, 0.9);
        let params = ModelParams::defocusing_cubic(1);
        let integ = Integrator::strang(params, 0.02).unwrap();
        let fwd = integrate(&u0, &integ, 0.4, &ObserverSpec::none()).unwrap().0;
        let back = integrate(&fwd.conj(), &integ, 0.4, &ObserverSpec::none()).unwrap().0.conj();
        let err = back.sub(&u0).unwrap().lp_norm(2.0).unwrap();
        assert!(err <= 1e-11 * u0.lp_norm(2.0).unwrap(), "return error {err}");
    }

    #[test]
    fn defocusing_h1_stays_under_energy_bound() {
        let grid = LatticeGrid::new(1, 64, 0.25).unwrap();
        let u0 = smooth_field(grid, 1.0);
        let params = ModelParams::defocusing_cubic(1);
        let bound = (mass(&u0) + 2.0 * energy(&u0, &params)).sqrt();
        let integ = Integrator::strang(params, 5e-3).unwrap();
        let spec = ObserverSpec::uniform(2.0, 20, vec![1], false);
        let (_, obs) = integrate(&u0, &integ, 2.0, &spec).unwrap();
        for row in &obs.rows {
            assert!(row.sobolev[0] <= 2.0 * bound, "t={} H1={}", row.t, row.sobolev[0]);
        }
    }

    #[test]
    fn linear_jet_closes_on_laplacian_powers() {
        let grid = LatticeGrid::new(1, 32, 0.5).unwrap();
        let u = smooth_field(grid, 1.0);
        let jet = time_jet(&u, 3, &ModelParams::linear(1)).unwrap();
        let mut expect = u.clone();
        for n in 1..=3 {
            expect = expect.laplacian().scale(C64::i());
            let diff = jet.layer(n).sub(&expect).unwrap().lp_norm(2.0).unwrap();
            let scale = expect.lp_norm(2.0).unwrap();
            assert!(diff <= 1e-10 * scale, "n={n}: {diff} vs {scale}");
        }
    }

    /// Backward evolution through the conjugation symmetry
    /// `u(-t) = conj(exp-flow(conj(u0), t))`.
    fn integrate_backward(u0: &GridFunction, integ: &Integrator, t: f64) -> GridFunction {
        integrate(&u0.conj(), integ, t, &ObserverSpec::none()).unwrap().0.conj()
    }

    #[test]
    fn jet_matches_centered_time_differences() {
        let grid = LatticeGrid::new(1, 16, 0.5).unwrap();
        let u0 = smooth_field(grid, 0.8);
        let params = ModelParams::defocusing_cubic(1);
        let eps = 1e-4;
        let integ = Integrator::strang(params, eps / 8.0).unwrap();
        let fwd = integrate(&u0, &integ, eps, &ObserverSpec::none()).unwrap().0;
        let bwd = integrate_backward(&u0, &integ, eps);
        let jet = time_jet(&u0, 2, &params).unwrap();

        // first derivative, relative error <= 1e-5
        let fd1 = fwd.sub(&bwd).unwrap().scale(C64::new(1.0 / (2.0 * eps), 0.0));
        let err1 = fd1.sub(jet.layer(1)).unwrap().lp_norm(2.0).unwrap();
        let scale1 = jet.layer(1).lp_norm(2.0).unwrap();
        assert!(err1 <= 1e-5 * scale1, "rel err {}", err1 / scale1);

        // second derivative, relative error <= 1e-3
        let fd2 = fwd
            .add(&bwd)
            .unwrap()
            .sub(&u0.scale(C64::new(2.0, 0.0)))
            .unwrap()
            .scale(C64::new(1.0 / (eps * eps), 0.0));
        let err2 = fd2.sub(jet.layer(2)).unwrap().lp_norm(2.0).unwrap();
        let scale2 = jet.layer(2).lp_norm(2.0).unwrap();
        assert!(err2 <= 1e-3 * scale2, "rel err {}", err2 / scale2);
    }

    #[test]
    fn soliton_profile_and_mass() {
        let grid = LatticeGrid::new(1, 256, 0.125).unwrap();
        let psi0 = soliton_field(&grid, 0.0, 0.0).unwrap();
        // value sqrt(2) sech(x) at the origin
        let mid = grid.points_per_axis() / 2;
        assert!((psi0.values()[mid].re - 2.0_f64.sqrt()).abs() < 1e-12);
        // |psi| is time independent, so the mass is constant in t
        let psi1 = soliton_field(&grid, 0.0, 1.7).unwrap();
        assert!((mass(&psi0) - mass(&psi1)).abs() < 1e-12 * mass(&psi0));
    }

    #[test]
    fn soliton_reference_requires_focusing_cubic() {
        let grid = LatticeGrid::new(1, 64, 0.25).unwrap();
        assert!(Reference::soliton(grid, &ModelParams::defocusing_cubic(1), 0.0).is_err());
        assert!(Reference::soliton(grid, &ModelParams::focusing_cubic_1d(), 0.0).is_ok());
    }

    #[test]
    fn soliton_integration_sanity() {
        // coarse-budget version of the validation run: the shape survives
        let grid = LatticeGrid::new(1, 1024, 24.0 / 1024.0).unwrap(); // L = 12
        let residual = validate_soliton(&grid, 0.0, 2e-3, 0.25, 1e-2).unwrap();
        assert!(residual < 1e-3, "residual {residual}");
    }

    #[test]
    fn instability_is_reported_not_propagated() {
        let grid = LatticeGrid::new(1, 8, 0.5).unwrap();
        let mut u = GridFunction::zeros(grid);
        u.values_mut()[0] = C64::new(f64::MAX, 0.0);
        // cubing f64::MAX overflows to infinity in the gauge phase
        let integ = Integrator::strang(ModelParams::defocusing_cubic(1), 0.1).unwrap();
        let res = integrate(&u, &integ, 1.0, &ObserverSpec::none());
        assert!(matches!(res, Err(Error::Instability { .. })));
    }

    #[test]
    fn two_dimensional_mass_conservation() {
        let grid = LatticeGrid::new(2, 32, 0.5).unwrap();
        let u0 = random_field(grid, 11, 0.5);
        let m0 = mass(&u0);
        let integ = Integrator::strang(ModelParams::new(1, 5, 2).unwrap(), 2e-3).unwrap();
        let (u, _) = integrate(&u0, &integ, 0.2, &ObserverSpec::none()).unwrap();
        assert!((mass(&u) - m0).abs() <= 1e-11 * m0);
    }
}

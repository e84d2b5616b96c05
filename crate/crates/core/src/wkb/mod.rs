//! Splitting on phase/amplitude pairs `(phi, a)` with `u = a exp(i phi / eps)`.
//!
//! `x_flow` is the free flow written in WKB variables,
//!
//! ```text
//! d_t phi + |grad phi|^2 / 2 = 0
//! d_t a + grad phi . grad a + a Lap phi / 2 = i (eps/2) Lap a
//! ```
//!
//! and `y_flow` the nonlinear flow, which is explicit. `grenier_flow`
//! integrates the coupled system and is the reference for the splitting.

mod commutator;
mod lawson;
mod monitor;
mod snapshot;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{vector_norm, ComplexField, Grid, NormKind, RealField};
use crate::nonlinearity::NonlinearitySpec;
use crate::wavefunction::{check_eps, step_count, Composition, WaveFunction};
use lawson::{Coupling, Pair};

pub use commutator::{commutator_ab, CommutatorOutput};
pub use monitor::{GrowthMonitor, GrowthSample};
pub use snapshot::{read_snapshot, write_snapshot};

#[derive(Clone, Debug)]
pub struct WKBState {
    phi: RealField,
    amp: ComplexField,
    eps: f64,
}

impl WKBState {
    pub fn new(phi: RealField, amp: ComplexField, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        phi.grid().check_same(amp.grid())?;
        if !phi.is_finite() {
            return Err(Error::NonFinite("phase"));
        }
        if !amp.is_finite() {
            return Err(Error::NonFinite("amplitude"));
        }
        Ok(Self { phi, amp, eps })
    }

    pub fn from_fns(
        grid: Arc<Grid>,
        eps: f64,
        phi: impl Fn(&[f64]) -> f64,
        amp: impl Fn(&[f64]) -> Complex64,
    ) -> Result<Self> {
        Self::new(
            RealField::from_fn(grid.clone(), phi),
            ComplexField::from_fn(grid, amp),
            eps,
        )
    }

    fn from_pair(grid: &Arc<Grid>, pair: Pair, eps: f64) -> Self {
        Self {
            phi: RealField::from_vec(grid.clone(), pair.phi),
            amp: ComplexField::from_vec(grid.clone(), pair.a),
            eps,
        }
    }

    fn to_pair(&self) -> Pair {
        Pair {
            phi: self.phi.values().to_vec(),
            a: self.amp.values().to_vec(),
        }
    }

    pub fn phi(&self) -> &RealField {
        &self.phi
    }

    pub fn amp(&self) -> &ComplexField {
        &self.amp
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.phi.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.phi.is_finite() && self.amp.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct XFlowConfig {
    /// `delta <= c_cfl dx / max(1, |grad phi|_inf)`.
    pub c_cfl: f64,
    /// Accepted change between successive substep refinements, per unit time.
    pub tol: f64,
    pub max_refinements: usize,
    /// Caustic guard on `|hess phi|_inf`; `None` uses ten times the value at
    /// the start of the call (at least 10).
    pub caustic_limit: Option<f64>,
}

impl Default for XFlowConfig {
    fn default() -> Self {
        Self {
            c_cfl: 0.5,
            tol: 1e-8,
            max_refinements: 8,
            caustic_limit: None,
        }
    }
}

impl XFlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_cfl > 0.0 && self.c_cfl <= 1.0) {
            return Err(Error::InvalidArgument(format!("c_cfl must lie in (0, 1], got {}", self.c_cfl)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("x_flow tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }

    /// The configuration with the caustic limit pinned to `state`.
    pub fn anchored(&self, state: &WKBState) -> Self {
        let mut cfg = self.clone();
        if cfg.caustic_limit.is_none() {
            cfg.caustic_limit = Some(default_caustic_limit(state));
        }
        cfg
    }
}

pub fn default_caustic_limit(state: &WKBState) -> f64 {
    10.0 * state.phi.hessian_linf().max(1.0)
}

fn max_substep(grid: &Grid, phi: &[f64], c_cfl: f64) -> f64 {
    let speed = grid
        .gradient_real(phi)
        .iter()
        .fold(0.0f64, |m, g| g.iter().fold(m, |m, v| m.max(v.abs())));
    c_cfl * grid.min_spacing() / speed.max(1.0)
}

fn check_caustic(grid: &Grid, phi: &[f64], limit: f64, t: f64) -> Result<()> {
    let hessian = grid.hessian_linf(phi);
    if !hessian.is_finite() || hessian > limit {
        return Err(Error::Caustic { t, hessian, limit });
    }
    Ok(())
}

fn integrate(grid: &Grid, eps: f64, y: &Pair, t: f64, n: usize, coupling: Coupling) -> Pair {
    let h = t / n as f64;
    (0..n).fold(y.clone(), |y, _| lawson::step(grid, eps, &y, h, coupling))
}

/// `x_flow` over `[0, t]`, with substeps doubled until two successive
/// refinements agree to `cfg.tol * t`.
pub fn x_flow(state: &WKBState, t: f64, cfg: &XFlowConfig) -> Result<WKBState> {
    cfg.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("x_flow time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(state.clone());
    }
    let grid = state.grid();
    let limit = cfg.caustic_limit.unwrap_or_else(|| default_caustic_limit(state));
    let y0 = state.to_pair();
    let mut n = (t / max_substep(grid, &y0.phi, cfg.c_cfl)).ceil().max(1.0) as usize;
    let mut coarse = integrate(grid, state.eps, &y0, t, n, Coupling::None);
    let scale = 1.0 + state.phi.linf() + state.amp.norm(NormKind::L2);
    let mut diff = f64::INFINITY;
    for _ in 0..cfg.max_refinements {
        n *= 2;
        let fine = integrate(grid, state.eps, &y0, t, n, Coupling::None);
        diff = lawson::distance(grid, &coarse, &fine);
        if !diff.is_finite() {
            return Err(Error::NonFinite("x_flow"));
        }
        if diff <= cfg.tol * t + 1e-12 * scale {
            check_caustic(grid, &fine.phi, limit, t)?;
            return Ok(WKBState::from_pair(grid, fine, state.eps));
        }
        coarse = fine;
    }
    check_caustic(grid, &coarse.phi, limit, t)?;
    Err(Error::NonConvergence(format!(
        "x_flow substeps still change the result by {diff:.3e} after {} refinements",
        cfg.max_refinements
    )))
}

/// Exact nonlinear flow: `phi -= t f(|a|^2)` for `alpha = 0`, otherwise
/// `a *= exp(-i eps^(alpha-1) t f(|a|^2))`.
pub fn y_flow(state: &WKBState, t: f64, spec: &NonlinearitySpec) -> Result<WKBState> {
    spec.check_dimension(state.grid())?;
    if t == 0.0 || spec.is_vanishing() {
        return Ok(state.clone());
    }
    let grid = state.grid();
    let rho: Vec<f64> = state.amp.values().iter().map(|c| c.norm_sqr()).collect();
    let f = spec.eval(grid, &rho);
    let mut out = state.clone();
    if spec.is_weak() {
        let rate = spec.coupling(state.eps) * t;
        out.amp
            .values_mut()
            .iter_mut()
            .zip(&f)
            .for_each(|(a, fv)| *a *= Complex64::from_polar(1.0, -rate * fv));
    } else {
        out.phi
            .values_mut()
            .iter_mut()
            .zip(&f)
            .for_each(|(p, fv)| *p -= t * fv);
    }
    Ok(out)
}

/// `y_flow(x_flow(state, dt), dt)`.
pub fn lie_wkb_step(state: &WKBState, dt: f64, spec: &NonlinearitySpec, cfg: &XFlowConfig) -> Result<WKBState> {
    y_flow(&x_flow(state, dt, cfg)?, dt, spec)
}

/// `x_flow(y_flow(state, dt), dt)`.
pub fn lie_adjoint_wkb_step(
    state: &WKBState,
    dt: f64,
    spec: &NonlinearitySpec,
    cfg: &XFlowConfig,
) -> Result<WKBState> {
    x_flow(&y_flow(state, dt, spec)?, dt, cfg)
}

/// `x_flow(y_flow(x_flow(state, dt/2), dt), dt/2)`.
pub fn strang_wkb_step(state: &WKBState, dt: f64, spec: &NonlinearitySpec, cfg: &XFlowConfig) -> Result<WKBState> {
    let mid = y_flow(&x_flow(state, 0.5 * dt, cfg)?, dt, spec)?;
    x_flow(&mid, 0.5 * dt, cfg)
}

pub fn wkb_step(
    state: &WKBState,
    composition: Composition,
    dt: f64,
    spec: &NonlinearitySpec,
    cfg: &XFlowConfig,
) -> Result<WKBState> {
    match composition {
        Composition::Lie => lie_wkb_step(state, dt, spec, cfg),
        Composition::LieAdjoint => lie_adjoint_wkb_step(state, dt, spec, cfg),
        Composition::Strang => strang_wkb_step(state, dt, spec, cfg),
    }
}

/// `T / dt` splitting steps; the caustic limit is anchored at the initial
/// state and the monitor, if any, sees every step.
pub fn wkb_evolve(
    state: &WKBState,
    composition: Composition,
    dt: f64,
    t_final: f64,
    spec: &NonlinearitySpec,
    cfg: &XFlowConfig,
    mut monitor: Option<&mut GrowthMonitor>,
) -> Result<WKBState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidScheme(format!("dt must be positive, got {dt}")));
    }
    let n = step_count(t_final, dt)?;
    spec.validate_for(state.grid())?;
    let cfg = cfg.anchored(state);
    let mut s = state.clone();
    for k in 0..n {
        s = wkb_step(&s, composition, dt, spec, &cfg).map_err(|e| shift_time(e, k as f64 * dt))?;
        if let Some(m) = monitor.as_deref_mut() {
            m.observe(&s, dt);
        }
    }
    Ok(s)
}

// Guard errors raised inside one step report the time within that step.
fn shift_time(err: Error, offset: f64) -> Error {
    match err {
        Error::Caustic { t, hessian, limit } => Error::Caustic {
            t: t + offset,
            hessian,
            limit,
        },
        other => other,
    }
}

/// Coupled phase/amplitude flow over `[0, T]` with Lawson RK4 steps no
/// longer than `dt_int` (and the CFL bound).
pub fn grenier_flow(
    state: &WKBState,
    t_final: f64,
    dt_int: f64,
    spec: &NonlinearitySpec,
    cfg: &XFlowConfig,
) -> Result<WKBState> {
    cfg.validate()?;
    if !(dt_int > 0.0) {
        return Err(Error::InvalidArgument(format!("dt_int must be positive, got {dt_int}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time must be >= 0, got {t_final}")));
    }
    spec.validate_for(state.grid())?;
    if t_final == 0.0 {
        return Ok(state.clone());
    }
    let grid = state.grid();
    let limit = cfg.caustic_limit.unwrap_or_else(|| default_caustic_limit(state));
    let mut y = state.to_pair();
    let h_max = dt_int.min(max_substep(grid, &y.phi, cfg.c_cfl));
    let n = (t_final / h_max).ceil().max(1.0) as usize;
    let h = t_final / n as f64;
    let coupling = if spec.is_vanishing() {
        Coupling::None
    } else {
        Coupling::Nonlinear(spec)
    };
    for k in 0..n {
        y = lawson::step(grid, state.eps, &y, h, coupling);
        let t = (k + 1) as f64 * h;
        if y.phi.iter().any(|v| !v.is_finite()) || y.a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coupled phase/amplitude flow"));
        }
        check_caustic(grid, &y.phi, limit, t)?;
    }
    Ok(WKBState::from_pair(grid, y, state.eps))
}

/// `a exp(i phi / eps)`.
pub fn reconstruct(state: &WKBState) -> WaveFunction {
    let inv = 1.0 / state.eps;
    let values = state
        .amp
        .values()
        .iter()
        .zip(state.phi.values())
        .map(|(a, p)| a * Complex64::from_polar(1.0, p * inv))
        .collect();
    WaveFunction::from_parts(ComplexField::from_vec(state.grid().clone(), values), state.eps)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WkbError {
    /// `|a - a_ref|_{H^{s-1}}`.
    pub e_amp: f64,
    /// `|grad(phi - phi_ref)|_{H^s}`.
    pub e_gradphase: f64,
    /// `|phi - phi_ref|_inf`.
    pub e_phase_inf: f64,
}

impl WkbError {
    pub fn sum(&self) -> f64 {
        self.e_amp + self.e_gradphase + self.e_phase_inf
    }
}

pub fn wkb_error(numeric: &WKBState, exact: &WKBState, s: f64) -> Result<WkbError> {
    numeric.grid().check_same(exact.grid())?;
    if numeric.eps != exact.eps {
        return Err(Error::InvalidArgument(format!(
            "eps differs: {} vs {}",
            numeric.eps, exact.eps
        )));
    }
    let dphi = numeric.phi.sub(&exact.phi)?;
    let da = numeric.amp.sub(&exact.amp)?;
    Ok(WkbError {
        e_amp: da.norm(NormKind::Hs(s - 1.0)),
        e_gradphase: vector_norm(&dphi.gradient(), NormKind::Hs(s)),
        e_phase_inf: dphi.linf(),
    })
}

/// Density `|a|^2` and current `|a|^2 grad phi + eps Im(conj(a) grad a)`.
pub fn observables(state: &WKBState) -> (RealField, Vec<RealField>) {
    let grid = state.grid();
    let rho = state.amp.abs_sq();
    let grad_phi = state.phi.gradient();
    let grad_a = grid.gradient_complex(state.amp.values());
    let current = (0..grid.dim())
        .map(|axis| {
            let values = (0..grid.total())
                .map(|j| {
                    let a = state.amp.values()[j];
                    rho.values()[j] * grad_phi[axis].values()[j]
                        + state.eps * (a.conj() * grad_a[axis][j]).im
                })
                .collect();
            RealField::from_vec(grid.clone(), values)
        })
        .collect();
    (rho, current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{KernelSpec, LocalTerm};
    use crate::wavefunction::{free_step, lie_step, SchemeSpec};

    fn grid() -> Arc<Grid> {
        Grid::line(256, 32.0, -16.0).unwrap()
    }

    fn bump(eps: f64, beta: f64) -> WKBState {
        WKBState::from_fns(
            grid(),
            eps,
            |x| beta * (-0.5 * x[0] * x[0]).exp(),
            |x| Complex64::new((-x[0] * x[0]).exp(), 0.0),
        )
        .unwrap()
    }

    fn smoothed() -> NonlinearitySpec {
        NonlinearitySpec::kernel_only(KernelSpec::Smoothed { lambda: 1.0 })
    }

    #[test]
    fn state_invariants() {
        let g = grid();
        let other = Grid::line(128, 32.0, -16.0).unwrap();
        assert!(WKBState::new(RealField::zeros(g.clone()), ComplexField::zeros(other), 0.1).is_err());
        assert!(WKBState::new(RealField::zeros(g.clone()), ComplexField::zeros(g), 0.0).is_err());
    }

    #[test]
    fn y_flow_branches() {
        let s = bump(0.1, 0.3);
        assert_eq!(y_flow(&s, 0.0, &smoothed()).unwrap().phi().values(), s.phi().values());
        let out = y_flow(&s, 0.2, &smoothed()).unwrap();
        assert_eq!(out.amp().values(), s.amp().values());
        let f = crate::nonlinearity::apply_f(&smoothed(), &s.amp().abs_sq()).unwrap();
        let expected = s.phi().sub(&f.scale(0.2)).unwrap();
        assert!(out.phi().sub(&expected).unwrap().linf() < 1e-15);

        let c = Complex64::new(0.5, 0.2);
        let flat = WKBState::from_fns(grid(), 0.1, |_| 0.4, |_| c).unwrap();
        let cubic = NonlinearitySpec::new(None, Some(LocalTerm::power(1.0, 1.0).unwrap()), 1.0).unwrap();
        let out = y_flow(&flat, 0.7, &cubic).unwrap();
        let rotated = c * Complex64::from_polar(1.0, -0.7 * c.norm_sqr());
        assert!(out.amp().values().iter().all(|a| (a - rotated).norm() < 1e-14));
        assert_eq!(out.phi().values(), flat.phi().values());
    }

    #[test]
    fn x_flow_with_flat_phase_is_free_flow() {
        let s = bump(0.2, 0.0);
        let out = x_flow(&s, 0.5, &XFlowConfig::default()).unwrap();
        assert!(out.phi().linf() < 1e-14);
        let u = WaveFunction::new(s.amp().clone(), 0.2).unwrap();
        let free = free_step(&u, 0.5);
        let err = out.amp().sub(free.field()).unwrap().linf();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn x_flow_intertwines_with_free_flow() {
        let s = bump(0.1, 0.3);
        let out = x_flow(&s, 0.05, &XFlowConfig::default()).unwrap();
        let wave = free_step(&reconstruct(&s), 0.05);
        assert!(reconstruct(&out).distance(&wave).unwrap() < 1e-6);
        assert_eq!(x_flow(&s, 0.0, &XFlowConfig::default()).unwrap().phi().values(), s.phi().values());
    }

    #[test]
    fn lie_step_intertwines() {
        let s = bump(0.1, 0.3);
        let spec = smoothed();
        let out = lie_wkb_step(&s, 0.01, &spec, &XFlowConfig::default()).unwrap();
        let scheme = SchemeSpec::nonlinear(Composition::Lie, 0.01, spec).unwrap();
        let wave = lie_step(&reconstruct(&s), &scheme, 0.0).unwrap();
        assert!(reconstruct(&out).distance(&wave).unwrap() < 1e-6);
    }

    #[test]
    fn vanishing_nonlinearity_reduces_to_x_flow() {
        let s = bump(0.1, 0.3);
        let cfg = XFlowConfig::default();
        let x = x_flow(&s, 0.1, &cfg).unwrap();
        let z = lie_wkb_step(&s, 0.1, &NonlinearitySpec::vanishing(), &cfg).unwrap();
        assert_eq!(x.phi().values(), z.phi().values());
        let g = grenier_flow(&s, 0.1, 0.01, &NonlinearitySpec::vanishing(), &cfg).unwrap();
        assert!(wkb_error(&g, &x, 2.0).unwrap().sum() < 1e-8);
    }

    #[test]
    fn caustic_guard_trips() {
        // phi = -cos(x) focuses at t = 1
        let g = Grid::line(128, 2.0 * std::f64::consts::PI, 0.0).unwrap();
        let s = WKBState::from_fns(g, 0.1, |x| -x[0].cos(), |_| Complex64::new(1.0, 0.0)).unwrap();
        let err = grenier_flow(&s, 1.5, 0.01, &NonlinearitySpec::vanishing(), &XFlowConfig::default());
        match err {
            Err(Error::Caustic { t, .. }) => assert!(t > 0.5 && t < 1.0, "{t}"),
            other => panic!("expected caustic, got {other:?}"),
        }
    }

    #[test]
    fn reconstruction_identities() {
        let s = bump(0.1, 0.3);
        let flat = WKBState::new(RealField::zeros(grid()), s.amp().clone(), 0.1).unwrap();
        assert_eq!(reconstruct(&flat).values(), s.amp().values());
        let theta = 0.7;
        let gauged = WKBState::new(
            s.phi().map(|p| p - 0.1 * theta),
            s.amp().scale(Complex64::from_polar(1.0, theta)),
            0.1,
        )
        .unwrap();
        assert!(reconstruct(&gauged).distance(&reconstruct(&s)).unwrap() < 1e-12);
        let m = s.amp().norm(NormKind::L2);
        assert!((reconstruct(&s).mass() - m).abs() < 1e-12 * m);
    }

    #[test]
    fn error_metrics() {
        let s = bump(0.1, 0.3);
        let zero = wkb_error(&s, &s, 3.0).unwrap();
        assert_eq!(zero.sum(), 0.0);
        let shifted = WKBState::new(s.phi().map(|p| p + 0.25), s.amp().clone(), 0.1).unwrap();
        let e = wkb_error(&shifted, &s, 3.0).unwrap();
        assert!(e.e_gradphase < 1e-9);
        assert!((e.e_phase_inf - 0.25).abs() < 1e-14);
        assert_eq!(e.e_amp, 0.0);
    }

    #[test]
    fn observables_match_wavefunction() {
        let s = WKBState::from_fns(
            grid(),
            0.2,
            |x| 0.3 * (-0.5 * x[0] * x[0]).exp(),
            |x| Complex64::new((-x[0] * x[0]).exp(), 0.2 * (-x[0] * x[0]).exp() * x[0]),
        )
        .unwrap();
        let (rho, j) = observables(&s);
        let u = reconstruct(&s);
        let rho_u = crate::wavefunction::density(&u);
        let j_u = crate::wavefunction::current(&u);
        assert!(rho.sub(&rho_u).unwrap().linf() < 1e-14);
        assert!(j[0].sub(&j_u[0]).unwrap().linf() < 1e-10);
    }
}

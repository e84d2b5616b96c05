//! Splitting schemes acting directly on wavefunctions.
//!
//! The free flow solves `du/dt = i (eps/2) Lap u` exactly in Fourier space,
//! the nonlinear flow rotates the phase by `-eps^(alpha-1) t f(|u|^2)`, and the
//! potential flow rotates it by `-t V / eps`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, NormKind, RealField};
use crate::nonlinearity::NonlinearitySpec;

/// Runs abort once `|u|_inf` exceeds this multiple of its initial value.
pub const BLOW_UP_FACTOR: f64 = 1e6;
pub const MAX_HALVINGS: usize = 14;

#[derive(Clone, Debug)]
pub struct WaveFunction {
    field: ComplexField,
    eps: f64,
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")))
    }
}

impl WaveFunction {
    pub fn new(field: ComplexField, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if !field.is_finite() {
            return Err(Error::NonFinite("wavefunction"));
        }
        Ok(Self { field, eps })
    }

    pub(crate) fn from_parts(field: ComplexField, eps: f64) -> Self {
        Self { field, eps }
    }

    pub fn field(&self) -> &ComplexField {
        &self.field
    }

    pub fn into_field(self) -> ComplexField {
        self.field
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.field.grid()
    }

    pub fn values(&self) -> &[Complex64] {
        self.field.values()
    }

    /// `|u|_{L2}`.
    pub fn mass(&self) -> f64 {
        self.field.norm(NormKind::L2)
    }

    pub fn linf(&self) -> f64 {
        self.field.linf()
    }

    /// `|self - other|_{L2}`.
    pub fn distance(&self, other: &WaveFunction) -> Result<f64> {
        Ok(self.field.sub(&other.field)?.norm(NormKind::L2))
    }

    fn with_values(&self, values: Vec<Complex64>) -> Self {
        Self::from_parts(ComplexField::from_vec(self.grid().clone(), values), self.eps)
    }
}

type PotentialFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Real external potential `V(t, x)`.
#[derive(Clone)]
pub struct PotentialSpec {
    label: String,
    v: PotentialFn,
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PotentialSpec({})", self.label)
    }
}

impl PotentialSpec {
    pub fn new(label: impl Into<String>, v: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            v: Arc::new(v),
        }
    }

    /// `V = omega^2 |x|^2 / 2`.
    pub fn harmonic(omega: f64) -> Self {
        Self::new(format!("harmonic(omega={omega})"), move |_, x| {
            0.5 * omega * omega * x.iter().map(|v| v * v).sum::<f64>()
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        (self.v)(t, x)
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Vec<f64> {
        (0..grid.total()).map(|j| self.eval(t, &grid.point(j))).collect()
    }

    /// Samples pure second and third axis derivatives by finite differences at
    /// the start, middle and end of `[t0, t1]`, and rejects potentials whose
    /// derivatives over the box exceed 1.5 times their size on the central
    /// half of the box.
    pub fn check_subquadratic(&self, grid: &Grid, t0: f64, t1: f64) -> Result<()> {
        for t in [t0, 0.5 * (t0 + t1), t1] {
            for axis in 0..grid.dim() {
                let h = 0.5 * grid.spacing()[axis];
                let center = grid.origin()[axis] + 0.5 * grid.lengths()[axis];
                let quarter = 0.25 * grid.lengths()[axis];
                let (mut full, mut inner) = ([0.0f64; 2], [0.0f64; 2]);
                for j in 0..grid.total() {
                    let mut x = grid.point(j);
                    let x0 = x[axis];
                    let mut at = |s: f64| {
                        x[axis] = x0 + s * h;
                        self.eval(t, &x)
                    };
                    let (m2, m1, p0, p1, p2) = (at(-2.0), at(-1.0), at(0.0), at(1.0), at(2.0));
                    let values = [m2, m1, p0, p1, p2];
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidPotential(format!(
                            "{} is not finite near {:?}",
                            self.label,
                            grid.point(j)
                        )));
                    }
                    let d2 = (p1 - 2.0 * p0 + m1) / (h * h);
                    let d3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h);
                    let central = (x0 - center).abs() <= quarter;
                    for (k, d) in [d2, d3].into_iter().enumerate() {
                        full[k] = full[k].max(d.abs());
                        if central {
                            inner[k] = inner[k].max(d.abs());
                        }
                    }
                }
                let slack = 1e-6 * (1.0 + full[0]);
                for k in 0..2 {
                    if full[k] > 1.5 * inner[k] + slack {
                        return Err(Error::InvalidPotential(format!(
                            "{}: order-{} derivative grows from {:.3e} to {:.3e} along axis {axis} at t = {t}",
                            self.label,
                            k + 2,
                            inner[k],
                            full[k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Composition {
    /// `Y^t X^t`.
    Lie,
    /// `X^t Y^t`.
    LieAdjoint,
    /// `X^{t/2} Y^t X^{t/2}`.
    Strang,
}

/// The flow paired with the free flow in a splitting.
#[derive(Clone, Debug)]
pub enum BStep {
    Nonlinear(NonlinearitySpec),
    Potential(PotentialSpec),
}

#[derive(Clone, Debug)]
pub struct SchemeSpec {
    composition: Composition,
    dt: f64,
    drive: BStep,
}

impl SchemeSpec {
    pub fn new(composition: Composition, dt: f64, drive: BStep) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidScheme(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            composition,
            dt,
            drive,
        })
    }

    pub fn nonlinear(composition: Composition, dt: f64, spec: NonlinearitySpec) -> Result<Self> {
        Self::new(composition, dt, BStep::Nonlinear(spec))
    }

    pub fn potential(composition: Composition, dt: f64, v: PotentialSpec) -> Result<Self> {
        Self::new(composition, dt, BStep::Potential(v))
    }

    pub fn composition(&self) -> Composition {
        self.composition
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn drive(&self) -> &BStep {
        &self.drive
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.composition, dt, self.drive.clone())
    }
}

/// `X^t`: `u_hat <- exp(-i eps t |xi|^2 / 2) u_hat`.
pub fn free_step(u: &WaveFunction, t: f64) -> WaveFunction {
    if t == 0.0 {
        return u.clone();
    }
    let grid = u.grid();
    let mut buf = u.values().to_vec();
    grid.forward(&mut buf);
    grid.propagate_spectrum(&mut buf, u.eps, t);
    grid.inverse(&mut buf);
    u.with_values(buf)
}

/// `Y^t`: `u <- u exp(-i eps^(alpha-1) t f(|u|^2))`.
pub fn nonlinear_step(u: &WaveFunction, t: f64, spec: &NonlinearitySpec) -> Result<WaveFunction> {
    spec.check_dimension(u.grid())?;
    if t == 0.0 || spec.is_vanishing() {
        return Ok(u.clone());
    }
    let rho: Vec<f64> = u.values().iter().map(|c| c.norm_sqr()).collect();
    let f = spec.eval(u.grid(), &rho);
    let rate = spec.coupling(u.eps) * t;
    let values = u
        .values()
        .iter()
        .zip(&f)
        .map(|(c, fv)| c * Complex64::from_polar(1.0, -rate * fv))
        .collect();
    Ok(u.with_values(values))
}

/// `u <- u exp(-i t V(t_now, x) / eps)`.
pub fn potential_step(u: &WaveFunction, t: f64, v: &PotentialSpec, t_now: f64) -> WaveFunction {
    if t == 0.0 {
        return u.clone();
    }
    let grid = u.grid();
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(j, c)| c * Complex64::from_polar(1.0, -t * v.eval(t_now, &grid.point(j)) / u.eps))
        .collect();
    u.with_values(values)
}

fn b_step(u: &WaveFunction, t: f64, drive: &BStep, t_now: f64) -> Result<WaveFunction> {
    match drive {
        BStep::Nonlinear(spec) => nonlinear_step(u, t, spec),
        BStep::Potential(v) => Ok(potential_step(u, t, v, t_now)),
    }
}

/// `Y^dt X^dt u`.
pub fn lie_step(u: &WaveFunction, scheme: &SchemeSpec, t_now: f64) -> Result<WaveFunction> {
    b_step(&free_step(u, scheme.dt), scheme.dt, &scheme.drive, t_now)
}

/// `X^dt Y^dt u`.
pub fn lie_adjoint_step(u: &WaveFunction, scheme: &SchemeSpec, t_now: f64) -> Result<WaveFunction> {
    Ok(free_step(&b_step(u, scheme.dt, &scheme.drive, t_now)?, scheme.dt))
}

/// `X^{dt/2} Y^dt X^{dt/2} u`.
pub fn strang_step(u: &WaveFunction, scheme: &SchemeSpec, t_now: f64) -> Result<WaveFunction> {
    let half = 0.5 * scheme.dt;
    let mid = b_step(&free_step(u, half), scheme.dt, &scheme.drive, t_now)?;
    Ok(free_step(&mid, half))
}

/// One step of the scheme's composition.
pub fn step(u: &WaveFunction, scheme: &SchemeSpec, t_now: f64) -> Result<WaveFunction> {
    match scheme.composition {
        Composition::Lie => lie_step(u, scheme, t_now),
        Composition::LieAdjoint => lie_adjoint_step(u, scheme, t_now),
        Composition::Strang => strang_step(u, scheme, t_now),
    }
}

/// `n` with `n dt = T`, rejecting horizons that are not a whole number of steps.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidArgument(format!("final time {t_final} must be >= 0")));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "T = {t_final} is not a multiple of dt = {dt}"
        )));
    }
    Ok(n as usize)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservableRecord {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub linf: f64,
}

#[derive(Clone, Debug, Default)]
pub struct EvolveOptions {
    /// Keep every `k`-th state (and the final one).
    pub snapshot_every: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub final_state: WaveFunction,
    pub records: Vec<ObservableRecord>,
    pub snapshots: Vec<(f64, WaveFunction)>,
}

fn record(u: &WaveFunction, step: usize, t: f64) -> ObservableRecord {
    ObservableRecord {
        step,
        t,
        mass: u.mass(),
        linf: u.linf(),
    }
}

/// Applies `T / dt` steps of the scheme.
pub fn evolve(u0: &WaveFunction, scheme: &SchemeSpec, t_final: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    let n = step_count(t_final, scheme.dt)?;
    if let BStep::Nonlinear(spec) = &scheme.drive {
        spec.validate_for(u0.grid())?;
    }
    let start = u0.linf();
    let mut u = u0.clone();
    let mut records = vec![record(&u, 0, 0.0)];
    let mut snapshots = Vec::new();
    let keep = |k: usize| opts.snapshot_every.is_some_and(|every| every > 0 && k.is_multiple_of(every));
    if keep(0) {
        snapshots.push((0.0, u.clone()));
    }
    for k in 0..n {
        let t_now = k as f64 * scheme.dt;
        u = step(&u, scheme, t_now)?;
        let t = (k + 1) as f64 * scheme.dt;
        let rec = record(&u, k + 1, t);
        if !u.field.is_finite() {
            return Err(Error::BlowUp {
                t,
                growth: f64::INFINITY,
            });
        }
        if rec.linf > BLOW_UP_FACTOR * start {
            return Err(Error::BlowUp {
                t,
                growth: rec.linf / start,
            });
        }
        records.push(rec);
        if keep(k + 1) || (opts.snapshot_every.is_some() && k + 1 == n) {
            snapshots.push((t, u.clone()));
        }
    }
    Ok(Trajectory {
        final_state: u,
        records,
        snapshots,
    })
}

/// `n` Strang steps with adjacent free half steps fused.
fn strang_fused(u0: &WaveFunction, drive: &BStep, t_final: f64, n: usize) -> Result<WaveFunction> {
    let dt = t_final / n as f64;
    let mut u = free_step(u0, 0.5 * dt);
    for k in 0..n {
        u = b_step(&u, dt, drive, k as f64 * dt)?;
        let free = if k + 1 == n { 0.5 * dt } else { dt };
        u = free_step(&u, free);
    }
    Ok(u)
}

/// Strang solution with the step halved until successive runs agree to `tol` in `L2`.
pub fn reference_solution(u0: &WaveFunction, drive: &BStep, t_final: f64, tol: f64) -> Result<WaveFunction> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if let BStep::Nonlinear(spec) = drive {
        spec.validate_for(u0.grid())?;
    }
    if t_final == 0.0 {
        return Ok(u0.clone());
    }
    let mut n = ((t_final / 0.05).ceil() as usize).max(8);
    let mut coarse = strang_fused(u0, drive, t_final, n)?;
    let mut last = f64::INFINITY;
    for _ in 0..MAX_HALVINGS {
        n *= 2;
        let fine = strang_fused(u0, drive, t_final, n)?;
        last = fine.distance(&coarse)?;
        if !last.is_finite() {
            return Err(Error::NonFinite("reference solution"));
        }
        if last < tol {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::NonConvergence(format!(
        "reference solution still changes by {last:.3e} after {MAX_HALVINGS} halvings (tol {tol:.1e})"
    )))
}

/// `|u|^2`.
pub fn density(u: &WaveFunction) -> RealField {
    u.field.abs_sq()
}

/// `eps Im(conj(u) grad u)`.
pub fn current(u: &WaveFunction) -> Vec<RealField> {
    u.field
        .gradient()
        .iter()
        .map(|du| {
            let values = u
                .values()
                .iter()
                .zip(du.values())
                .map(|(c, d)| u.eps * (c.conj() * d).im)
                .collect();
            RealField::from_vec(u.grid().clone(), values)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::{KernelSpec, LocalTerm};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn line(n: usize, l: f64) -> Arc<Grid> {
        Grid::line(n, l, -0.5 * l).unwrap()
    }

    fn gaussian(grid: &Arc<Grid>, eps: f64) -> WaveFunction {
        let f = ComplexField::from_fn(grid.clone(), |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0));
        WaveFunction::new(f, eps).unwrap()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    #[test]
    fn rejects_bad_eps() {
        let g = line(16, 2.0 * PI);
        assert!(WaveFunction::new(ComplexField::zeros(g.clone()), 0.0).is_err());
        assert!(WaveFunction::new(ComplexField::zeros(g), 1.5).is_err());
    }

    #[test]
    fn free_step_on_plane_wave() {
        let g = Grid::line(32, 2.0 * PI, 0.0).unwrap();
        let u = WaveFunction::new(
            ComplexField::from_fn(g.clone(), |x| Complex64::from_polar(1.0, 3.0 * x[0])),
            0.3,
        )
        .unwrap();
        let out = free_step(&u, 0.7);
        let rot = Complex64::from_polar(1.0, -0.3 * 0.7 * 9.0 / 2.0);
        let expected: Vec<Complex64> = u.values().iter().map(|c| c * rot).collect();
        assert!(max_diff(out.values(), &expected) < 1e-13);
        assert_eq!(free_step(&u, 0.0).values(), u.values());
    }

    #[test]
    fn free_gaussian_closed_form() {
        let g = line(512, 40.0);
        let eps = 0.5;
        let t = 1.0;
        let out = free_step(&gaussian(&g, eps), t);
        let width = Complex64::new(1.0, eps * t);
        let exact: Vec<Complex64> = g
            .coords(0)
            .iter()
            .map(|&x| (-(x * x) / (2.0 * width)).exp() / width.sqrt())
            .collect();
        assert!(max_diff(out.values(), &exact) < 1e-10);
    }

    #[test]
    fn free_group_property() {
        let g = line(128, 20.0);
        let u = gaussian(&g, 0.2);
        let a = free_step(&free_step(&u, 0.3), 0.45);
        let b = free_step(&u, 0.75);
        assert!(max_diff(a.values(), b.values()) < 1e-12);
        let back = free_step(&free_step(&u, 0.4), -0.4);
        assert!(max_diff(back.values(), u.values()) < 1e-12);
    }

    #[test]
    fn cubic_step_on_constant() {
        let g = line(16, 2.0 * PI);
        let c = Complex64::new(0.6, -0.3);
        let u = WaveFunction::new(ComplexField::from_fn(g, |_| c), 0.1).unwrap();
        let spec = NonlinearitySpec::new(None, Some(LocalTerm::power(1.0, 1.0).unwrap()), 1.0).unwrap();
        let out = nonlinear_step(&u, 0.8, &spec).unwrap();
        let expected = c * Complex64::from_polar(1.0, -0.8 * c.norm_sqr());
        assert!(out.values().iter().all(|v| (v - expected).norm() < 1e-14));
    }

    #[test]
    fn smoothed_step_matches_direct_convolution() {
        let n = 128;
        let l = 16.0;
        let g = line(n, l);
        let eps = 0.1;
        let t = 0.01;
        let u = gaussian(&g, eps);
        let spec = NonlinearitySpec::kernel_only(KernelSpec::Smoothed { lambda: 1.0 });
        let out = nonlinear_step(&u, t, &spec).unwrap();

        // periodic kernel K(x) = (1/L) sum_m K_hat(xi_m) e^{i xi_m x}, then a direct circular sum
        let dx = l / n as f64;
        let kernel: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 * dx;
                (0..n as i64)
                    .map(|m| {
                        let m = if m < n as i64 / 2 { m } else { m - n as i64 };
                        let xi = 2.0 * PI * m as f64 / l;
                        (xi * x).cos() / (1.0 + xi * xi)
                    })
                    .sum::<f64>()
                    / l
            })
            .collect();
        let rho: Vec<f64> = u.values().iter().map(|c| c.norm_sqr()).collect();
        for i in 0..n {
            let conv: f64 = (0..n).map(|j| kernel[(i + n - j) % n] * rho[j] * dx).sum();
            let expected = u.values()[i] * Complex64::from_polar(1.0, -t / eps * conv);
            assert!((out.values()[i] - expected).norm() < 1e-8);
        }
    }

    #[test]
    fn potential_step_phase() {
        let g = line(64, 10.0);
        let u = gaussian(&g, 0.25);
        let v = PotentialSpec::harmonic(1.0);
        let out = potential_step(&u, 0.01, &v, 0.0);
        for (j, (a, b)) in out.values().iter().zip(u.values()).enumerate() {
            let x = g.coords(0)[j];
            let expected = b * Complex64::from_polar(1.0, -0.01 * x * x / (2.0 * 0.25));
            assert!((a - expected).norm() < 1e-14);
        }
        let zero = PotentialSpec::new("zero", |_, _| 0.0);
        assert_eq!(potential_step(&u, 0.3, &zero, 0.0).values(), u.values());
    }

    #[test]
    fn subquadratic_check() {
        let g = line(256, 32.0);
        assert!(PotentialSpec::harmonic(1.0).check_subquadratic(&g, 0.0, 1.0).is_ok());
        let quartic = PotentialSpec::new("quartic", |_, x| x[0].powi(4));
        assert!(quartic.check_subquadratic(&g, 0.0, 1.0).is_err());
        let bounded = PotentialSpec::new("cos", |t, x| (x[0] + t).cos());
        assert!(bounded.check_subquadratic(&g, 0.0, 1.0).is_ok());
    }

    #[test]
    fn vanishing_nonlinearity_collapses_schemes() {
        let g = line(128, 20.0);
        let u = gaussian(&g, 0.3);
        let free = free_step(&u, 0.05);
        for composition in [Composition::Lie, Composition::LieAdjoint, Composition::Strang] {
            let scheme = SchemeSpec::nonlinear(composition, 0.05, NonlinearitySpec::vanishing()).unwrap();
            let out = step(&u, &scheme, 0.0).unwrap();
            assert!(max_diff(out.values(), free.values()) < 1e-14);
        }
        assert!(SchemeSpec::nonlinear(Composition::Lie, 0.0, NonlinearitySpec::vanishing()).is_err());
    }

    #[test]
    fn evolve_counts_steps_and_records() {
        let g = line(64, 20.0);
        let u = gaussian(&g, 0.5);
        let spec = NonlinearitySpec::kernel_only(KernelSpec::Smoothed { lambda: 1.0 });
        let scheme = SchemeSpec::nonlinear(Composition::Lie, 0.1, spec).unwrap();
        let traj = evolve(&u, &scheme, 1.0, &EvolveOptions { snapshot_every: Some(5) }).unwrap();
        assert_eq!(traj.records.len(), 11);
        assert_eq!(traj.snapshots.len(), 3);
        let m0 = traj.records[0].mass;
        assert!(traj.records.iter().all(|r| (r.mass - m0).abs() < 1e-12 * m0));
        assert!(evolve(&u, &scheme, 1.05, &EvolveOptions::default()).is_err());
    }

    #[test]
    fn non_finite_state_trips_guard() {
        let g = line(64, 20.0);
        let u = WaveFunction::new(
            ComplexField::from_fn(g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0)),
            1.0,
        )
        .unwrap();
        let grow = PotentialSpec::new("imaginary", |_, _| f64::NAN);
        let scheme = SchemeSpec::potential(Composition::Lie, 0.1, grow).unwrap();
        assert!(matches!(
            evolve(&u, &scheme, 0.2, &EvolveOptions::default()),
            Err(Error::BlowUp { .. })
        ));
    }

    #[test]
    fn reference_of_free_flow() {
        let g = line(128, 20.0);
        let u = gaussian(&g, 0.2);
        let r = reference_solution(&u, &BStep::Nonlinear(NonlinearitySpec::vanishing()), 0.5, 1e-10).unwrap();
        assert!(r.distance(&free_step(&u, 0.5)).unwrap() < 1e-10);
    }

    #[test]
    fn reference_self_consistency() {
        let g = line(128, 20.0);
        let u = gaussian(&g, 0.2);
        let drive = BStep::Nonlinear(NonlinearitySpec::kernel_only(KernelSpec::Smoothed { lambda: 1.0 }));
        let fine = reference_solution(&u, &drive, 0.5, 1e-9).unwrap();
        let coarse = reference_solution(&u, &drive, 0.5, 1e-7).unwrap();
        assert!(fine.distance(&coarse).unwrap() <= 1e-7);
    }

    #[test]
    fn observables_of_simple_states() {
        let g = Grid::line(32, 2.0 * PI, 0.0).unwrap();
        let eps = 0.2;
        let c = Complex64::new(0.3, 0.4);
        let u = WaveFunction::new(ComplexField::from_fn(g.clone(), |_| c), eps).unwrap();
        assert!(density(&u).values().iter().all(|r| (r - 0.25).abs() < 1e-15));
        assert!(current(&u)[0].linf() < 1e-14);
        let wave = WaveFunction::new(
            ComplexField::from_fn(g.clone(), |x| Complex64::from_polar(1.0, 2.0 * x[0])),
            eps,
        )
        .unwrap();
        assert!(current(&wave)[0].values().iter().all(|j| (j - 2.0 * eps).abs() < 1e-12));

        // u = a e^{i phi / eps} with real a: J = a^2 grad phi
        let h = line(256, 20.0);
        let u = WaveFunction::new(
            ComplexField::from_fn(h.clone(), |x| {
                let a = (-x[0] * x[0]).exp();
                let phi = 0.3 * (-0.5 * x[0] * x[0]).exp();
                Complex64::from_polar(a, phi / eps)
            }),
            eps,
        )
        .unwrap();
        let j = current(&u);
        for (k, &x) in h.coords(0).iter().enumerate() {
            let a2 = (-2.0 * x * x).exp();
            let dphi = -0.3 * x * (-0.5 * x * x).exp();
            assert!((j[0].values()[k] - a2 * dphi).abs() < 1e-10);
        }
    }

    fn band_limited(coeffs: &[(f64, f64)], eps: f64) -> WaveFunction {
        let g = Grid::line(64, 2.0 * PI, 0.0).unwrap();
        let f = ComplexField::from_fn(g, |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &(re, im))| Complex64::new(re, im) * Complex64::from_polar(1.0, (k as f64 - 8.0) * x[0]))
                .sum()
        });
        WaveFunction::new(f, eps).unwrap()
    }

    proptest! {
        #[test]
        fn steps_are_unitary(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
            eps in 0.05f64..1.0,
            dt in 0.001f64..0.5,
        ) {
            let u = band_limited(&coeffs, eps);
            let m0 = u.mass();
            prop_assume!(m0 > 1e-3);
            let spec = NonlinearitySpec::new(
                Some(KernelSpec::Smoothed { lambda: 1.0 }),
                Some(LocalTerm::power(1.0, 1.0).unwrap()),
                1.0,
            ).unwrap();
            let scheme = SchemeSpec::nonlinear(Composition::Strang, dt, spec.clone()).unwrap();
            let outs = [
                free_step(&u, dt),
                nonlinear_step(&u, dt, &spec).unwrap(),
                potential_step(&u, dt, &PotentialSpec::new("cos", |_, x| x[0].cos()), 0.0),
                lie_step(&u, &scheme, 0.0).unwrap(),
                strang_step(&u, &scheme, 0.0).unwrap(),
            ];
            for out in &outs {
                prop_assert!((out.mass() - m0).abs() <= 1e-12 * m0);
            }
            let y = &outs[1];
            for (a, b) in y.values().iter().zip(u.values()) {
                prop_assert!((a.norm() - b.norm()).abs() <= 1e-14 * (1.0 + b.norm()));
            }
        }
    }
}

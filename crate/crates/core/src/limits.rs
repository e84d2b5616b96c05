//! The `eps = 0` systems: pressureless Euler with a nonlocal force,
//! Burgers for `v = grad phi`, and the free eikonal equation.
//!
//! All three are integrated with classical RK4 and spectral derivatives.
//! The step is `min(dt_int, dx / (4 max(1, |v|_inf)))`, fixed for the run.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{vector_norm, Grid, NormKind, RealField};
use crate::nonlinearity::NonlinearitySpec;

/// Default guard: abort once `|grad v|_inf` exceeds this multiple of its
/// initial value (or of 1, whichever is larger).
pub const SINGULARITY_FACTOR: f64 = 10.0;
/// Gradient amplification that defines the numeric caustic estimate.
pub const CAUSTIC_AMPLIFICATION: f64 = 16.0;

#[derive(Clone, Debug)]
pub struct EulerState {
    pub rho: RealField,
    pub v: Vec<RealField>,
}

impl EulerState {
    pub fn new(rho: RealField, v: Vec<RealField>) -> Result<Self> {
        if v.len() != rho.grid().dim() {
            return Err(Error::InvalidArgument(format!(
                "velocity has {} components on a {}-d grid",
                v.len(),
                rho.grid().dim()
            )));
        }
        for c in &v {
            rho.grid().check_same(c.grid())?;
        }
        if !rho.is_finite() || v.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("Euler state"));
        }
        Ok(Self { rho, v })
    }

    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitRecord {
    pub t: f64,
    pub mass: f64,
    pub v_linf: f64,
    pub grad_linf: f64,
}

#[derive(Clone, Debug)]
pub struct LimitRun<S> {
    pub final_state: S,
    pub records: Vec<LimitRecord>,
}

pub fn write_summary_csv(path: impl AsRef<Path>, records: &[LimitRecord]) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "mass", "v_linf", "grad_linf"]).map_err(csv_err)?;
    for r in records {
        w.write_record([r.t, r.mass, r.v_linf, r.grad_linf].map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn linf(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `max |d_i v_j|` over the grid.
fn grad_linf(grid: &Grid, v: &[Vec<f64>]) -> f64 {
    v.iter()
        .map(|c| grid.gradient_real(c).iter().map(|g| linf(g)).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

fn speed(v: &[Vec<f64>]) -> f64 {
    let n = v.first().map_or(0, |c| c.len());
    (0..n)
        .map(|j| v.iter().map(|c| c[j] * c[j]).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

// State of the limit integrators: optional density plus velocity components.
#[derive(Clone)]
struct Fluid {
    rho: Option<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Fluid {
    fn axpy(&self, h: f64, k: &Fluid) -> Fluid {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + h * y).collect::<Vec<_>>();
        Fluid {
            rho: self.rho.as_ref().map(|r| add(r, k.rho.as_ref().expect("matching density"))),
            v: self.v.iter().zip(&k.v).map(|(a, b)| add(a, b)).collect(),
        }
    }
}

fn fluid_rhs(grid: &Grid, y: &Fluid, spec: Option<&NonlinearitySpec>) -> Fluid {
    let dim = grid.dim();
    let grads: Vec<Vec<Vec<f64>>> = y.v.iter().map(|c| grid.gradient_real(c)).collect();
    let mut dv: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..grid.total())
                .map(|j| -(0..dim).map(|k| y.v[k][j] * grads[i][k][j]).sum::<f64>())
                .collect()
        })
        .collect();
    let drho = y.rho.as_ref().map(|rho| {
        if let Some(spec) = spec {
            let force = grid.gradient_real(&spec.eval(grid, rho));
            for (d, f) in dv.iter_mut().zip(&force) {
                d.iter_mut().zip(f).for_each(|(a, b)| *a -= b);
            }
        }
        let flux: Vec<Vec<f64>> = y.v.iter().map(|c| c.iter().zip(rho).map(|(a, r)| a * r).collect()).collect();
        grid.divergence_real(&flux).into_iter().map(|d| -d).collect()
    });
    Fluid { rho: drho, v: dv }
}

fn rk4(grid: &Grid, y: &Fluid, h: f64, spec: Option<&NonlinearitySpec>) -> Fluid {
    let k1 = fluid_rhs(grid, y, spec);
    let k2 = fluid_rhs(grid, &y.axpy(0.5 * h, &k1), spec);
    let k3 = fluid_rhs(grid, &y.axpy(0.5 * h, &k2), spec);
    let k4 = fluid_rhs(grid, &y.axpy(h, &k3), spec);
    y.axpy(h / 6.0, &k1)
        .axpy(h / 3.0, &k2)
        .axpy(h / 3.0, &k3)
        .axpy(h / 6.0, &k4)
}

fn check_horizon(t_final: f64, dt_int: f64) -> Result<()> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time must be >= 0, got {t_final}")));
    }
    if !(dt_int > 0.0) {
        return Err(Error::InvalidArgument(format!("dt_int must be positive, got {dt_int}")));
    }
    Ok(())
}

/// Outcome of a guarded run: either finished or stopped when the gradient
/// first exceeded `stop_at`.
struct FluidRun {
    state: Fluid,
    records: Vec<LimitRecord>,
    stopped_at: Option<f64>,
}

fn run_fluid(
    grid: &Grid,
    y0: Fluid,
    t_final: f64,
    dt_int: f64,
    spec: Option<&NonlinearitySpec>,
    guard: f64,
    stop_at: Option<f64>,
) -> Result<FluidRun> {
    let record = |y: &Fluid, t: f64| LimitRecord {
        t,
        mass: y.rho.as_ref().map_or(0.0, |r| grid.cell_volume() * r.iter().sum::<f64>()),
        v_linf: speed(&y.v),
        grad_linf: grad_linf(grid, &y.v),
    };
    let mut records = vec![record(&y0, 0.0)];
    if t_final == 0.0 {
        return Ok(FluidRun {
            state: y0,
            records,
            stopped_at: None,
        });
    }
    let h_max = dt_int.min(grid.min_spacing() / (4.0 * speed(&y0.v).max(1.0)));
    let n = (t_final / h_max).ceil().max(1.0) as usize;
    let h = t_final / n as f64;
    let mut y = y0;
    for k in 0..n {
        y = rk4(grid, &y, h, spec);
        let t = (k + 1) as f64 * h;
        let rec = record(&y, t);
        if !rec.grad_linf.is_finite() || y.v.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("limit system"));
        }
        if stop_at.is_some_and(|s| rec.grad_linf >= s) {
            records.push(rec);
            return Ok(FluidRun {
                state: y,
                records,
                stopped_at: Some(t),
            });
        }
        if rec.grad_linf > guard {
            return Err(Error::Singularity {
                t,
                gradient: rec.grad_linf,
                limit: guard,
            });
        }
        records.push(rec);
    }
    Ok(FluidRun {
        state: y,
        records,
        stopped_at: None,
    })
}

fn velocity_values(v: &[RealField]) -> Vec<Vec<f64>> {
    v.iter().map(|c| c.values().to_vec()).collect()
}

fn fields(grid: &std::sync::Arc<Grid>, v: Vec<Vec<f64>>) -> Vec<RealField> {
    v.into_iter().map(|c| RealField::from_vec(grid.clone(), c)).collect()
}

/// `d_t rho + div(rho v) = 0`, `d_t v + v . grad v + grad f(rho) = 0`.
pub fn euler_solve(
    init: &EulerState,
    t_final: f64,
    dt_int: f64,
    spec: &NonlinearitySpec,
) -> Result<LimitRun<EulerState>> {
    check_horizon(t_final, dt_int)?;
    if spec.is_weak() && !spec.is_vanishing() {
        return Err(Error::InvalidNonlinearity(
            "the Euler limit needs alpha = 0 or a vanishing nonlinearity".into(),
        ));
    }
    spec.validate_for(init.rho.grid())?;
    let grid = init.rho.grid();
    let v = velocity_values(&init.v);
    let guard = SINGULARITY_FACTOR * grad_linf(grid, &v).max(1.0);
    let y0 = Fluid {
        rho: Some(init.rho.values().to_vec()),
        v,
    };
    let run = run_fluid(grid, y0, t_final, dt_int, Some(spec), guard, None)?;
    Ok(LimitRun {
        final_state: EulerState {
            rho: RealField::from_vec(grid.clone(), run.state.rho.expect("density is evolved")),
            v: fields(grid, run.state.v),
        },
        records: run.records,
    })
}

fn check_velocity(v0: &[RealField]) -> Result<&std::sync::Arc<Grid>> {
    let first = v0
        .first()
        .ok_or_else(|| Error::InvalidArgument("velocity has no components".into()))?;
    let grid = first.grid();
    if v0.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "velocity has {} components on a {}-d grid",
            v0.len(),
            grid.dim()
        )));
    }
    for c in v0 {
        grid.check_same(c.grid())?;
    }
    Ok(grid)
}

/// `d_t v + v . grad v = 0`.
pub fn burgers_solve(v0: &[RealField], t_final: f64, dt_int: f64) -> Result<LimitRun<Vec<RealField>>> {
    check_horizon(t_final, dt_int)?;
    let grid = check_velocity(v0)?;
    let v = velocity_values(v0);
    let guard = SINGULARITY_FACTOR * grad_linf(grid, &v).max(1.0);
    let run = run_fluid(grid, Fluid { rho: None, v }, t_final, dt_int, None, guard, None)?;
    Ok(LimitRun {
        final_state: fields(grid, run.state.v),
        records: run.records,
    })
}

/// `d_t phi + |grad phi|^2 / 2 = 0`, with a caustic guard at ten times the
/// initial `|hess phi|_inf` (at least 10).
pub fn eikonal_phase(phi0: &RealField, t_final: f64, dt_int: f64) -> Result<LimitRun<RealField>> {
    check_horizon(t_final, dt_int)?;
    let grid = phi0.grid();
    let limit = 10.0 * phi0.hessian_linf().max(1.0);
    let rhs = |phi: &[f64]| -> Vec<f64> {
        let grad = grid.gradient_real(phi);
        (0..phi.len())
            .map(|j| -0.5 * grad.iter().map(|g| g[j] * g[j]).sum::<f64>())
            .collect()
    };
    let add = |a: &[f64], h: f64, b: &[f64]| a.iter().zip(b).map(|(x, y)| x + h * y).collect::<Vec<_>>();
    let record = |phi: &[f64], t: f64| {
        let grad = grid.gradient_real(phi);
        LimitRecord {
            t,
            mass: 0.0,
            v_linf: speed(&grad),
            grad_linf: grid.hessian_linf(phi),
        }
    };
    let mut phi = phi0.values().to_vec();
    let mut records = vec![record(&phi, 0.0)];
    if t_final > 0.0 {
        let v0 = speed(&grid.gradient_real(&phi));
        let h_max = dt_int.min(grid.min_spacing() / (4.0 * v0.max(1.0)));
        let n = (t_final / h_max).ceil().max(1.0) as usize;
        let h = t_final / n as f64;
        for k in 0..n {
            let k1 = rhs(&phi);
            let k2 = rhs(&add(&phi, 0.5 * h, &k1));
            let k3 = rhs(&add(&phi, 0.5 * h, &k2));
            let k4 = rhs(&add(&phi, h, &k3));
            for j in 0..phi.len() {
                phi[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
            }
            let rec = record(&phi, (k + 1) as f64 * h);
            if !rec.grad_linf.is_finite() || rec.grad_linf > limit {
                return Err(Error::Caustic {
                    t: rec.t,
                    hessian: rec.grad_linf,
                    limit,
                });
            }
            records.push(rec);
        }
    }
    Ok(LimitRun {
        final_state: RealField::from_vec(grid.clone(), phi),
        records,
    })
}

/// Estimated onset of characteristic crossing for `d_t v + v . grad v = 0`.
///
/// In one dimension this is `-1 / min v0'` (infinite for an expansive
/// profile). Otherwise Burgers is integrated until `|grad v|_inf` reaches
/// sixteen times its initial value; no such time within `100 / |grad v0|_inf`
/// reports infinity.
pub fn caustic_time(v0: &[RealField]) -> Result<f64> {
    let grid = check_velocity(v0)?;
    if grid.dim() == 1 {
        let dv = v0[0].gradient().remove(0);
        let min = dv.values().iter().copied().fold(f64::INFINITY, f64::min);
        return Ok(if min < 0.0 { -1.0 / min } else { f64::INFINITY });
    }
    let v = velocity_values(v0);
    let g0 = grad_linf(grid, &v);
    if g0 == 0.0 {
        return Ok(f64::INFINITY);
    }
    let horizon = 100.0 / g0;
    let run = run_fluid(
        grid,
        Fluid { rho: None, v },
        horizon,
        0.01 / g0,
        None,
        f64::INFINITY,
        Some(CAUSTIC_AMPLIFICATION * g0),
    )?;
    Ok(run.stopped_at.unwrap_or(f64::INFINITY))
}

/// Curl magnitude `max |d_i v_j - d_j v_i|`; zero for `d = 1`.
#[allow(clippy::needless_range_loop)]
pub fn curl_linf(v: &[RealField]) -> f64 {
    let grads: Vec<Vec<RealField>> = v.iter().map(|c| c.gradient()).collect();
    let mut worst = 0.0f64;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let diff = grads[j][i].sub(&grads[i][j]).expect("same grid");
            worst = worst.max(diff.linf());
        }
    }
    worst
}

/// `|v|_inf` of a velocity field, pointwise Euclidean.
pub fn velocity_linf(v: &[RealField]) -> f64 {
    vector_norm(v, NormKind::Linf)
}

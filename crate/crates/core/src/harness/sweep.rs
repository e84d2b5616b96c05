//! Convergence sweeps over `(eps, dt)`.

use std::sync::Arc;
use std::time::Instant;

use log::{info, warn};

use super::config::{InitialConfig, ScenarioConfig};
use super::report::ResultRow;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::{vector_norm, Grid, NormKind, RealField};
use crate::nonlinearity::NonlinearitySpec;
use crate::wavefunction::{self, evolve, reference_solution, BStep, EvolveOptions, SchemeSpec, WaveFunction};
use crate::wkb::{self, grenier_flow, wkb_error, wkb_evolve, GrowthMonitor, WKBState, XFlowConfig};

/// Constant in the one-step geometric growth diagnostic.
pub const GROWTH_RATE: f64 = 10.0;
/// Largest norm growth accepted by the boundedness diagnostic.
pub const GROWTH_BOUND: f64 = 4.0;

#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub row: ResultRow,
    /// Guard trip that stopped the cell.
    pub failure: Option<String>,
    /// Largest growth of `|grad phi|_{H^{s+1}}` and `|a|_{H^s}` along the WKB run.
    pub growth: Option<f64>,
    pub wave_final: Option<WaveFunction>,
    pub wkb_final: Option<WKBState>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub t_final: f64,
    pub cells: Vec<CellOutcome>,
    /// `|Pi(coupled flow) - reference_solution|_{L2}` at the largest `eps` with both references.
    pub cross_check: Option<(f64, f64)>,
}

impl RunResult {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.cells.iter().map(|c| c.row.clone()).collect()
    }

    pub fn all_failed(&self) -> bool {
        !self.cells.is_empty() && self.cells.iter().all(|c| c.failure.is_some())
    }
}

/// `|f|_{L1} + |f|_{Linf}` of a scalar or vector difference.
fn l1_linf(diff: &[RealField]) -> f64 {
    vector_norm(diff, NormKind::L1) + vector_norm(diff, NormKind::Linf)
}

fn field_diff(a: &[RealField], b: &[RealField]) -> Result<Vec<RealField>> {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

type Observables = (RealField, Vec<RealField>);

fn wave_observables(u: &WaveFunction) -> Observables {
    (wavefunction::density(u), wavefunction::current(u))
}

struct Reference {
    eps: f64,
    wkb0: Option<WKBState>,
    wave0: WaveFunction,
    wkb_ref: Option<WKBState>,
    wave_ref: Option<WaveFunction>,
    observables: Option<Observables>,
    failure: Option<String>,
}

struct Setup {
    grid: Arc<Grid>,
    spec: NonlinearitySpec,
    drive: BStep,
    t_final: f64,
    steps: Vec<f64>,
    s: f64,
    xcfg: XFlowConfig,
    reference_dt: f64,
}

/// Whether `u = a exp(i phi / eps)` is resolved: the phase wavenumber plus
/// a margin for the amplitude must stay inside two thirds of the grid band.
fn wave_resolved(cfg: &ScenarioConfig, grid: &Arc<Grid>, eps: f64) -> bool {
    if matches!(cfg.initial, InitialConfig::Coherent { .. }) {
        return true;
    }
    let grad = vector_norm(&cfg.phase_field(grid).gradient(), NormKind::Linf);
    grad / eps + 6.0 <= 2.0 / 3.0 * grid.max_wavenumber()
}

fn guard_or_err<T>(r: Result<T>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if e.is_guard_trip() || matches!(e, Error::NonConvergence(_) | Error::NonFinite(_)) => {
            Ok(Err(e.to_string()))
        }
        Err(e) => Err(e),
    }
}

fn build_reference(cfg: &ScenarioConfig, setup: &Setup, eps: f64) -> Result<Reference> {
    let wkb0 = cfg.wkb_initial(&setup.grid, eps)?;
    let wave0 = cfg.wave_initial(&setup.grid, eps)?;
    let mut reference = Reference {
        eps,
        wkb0,
        wave0,
        wkb_ref: None,
        wave_ref: None,
        observables: None,
        failure: None,
    };
    if cfg.representation.wkb() {
        let s0 = reference.wkb0.as_ref().expect("WKB data");
        let xcfg = setup.xcfg.anchored(s0);
        match guard_or_err(grenier_flow(s0, setup.t_final, setup.reference_dt, &setup.spec, &xcfg))? {
            Ok(s) => reference.wkb_ref = Some(s),
            Err(msg) => reference.failure = Some(format!("WKB reference: {msg}")),
        }
    }
    if cfg.representation.wave() && wave_resolved(cfg, &setup.grid, eps) {
        match guard_or_err(reference_solution(&reference.wave0, &setup.drive, setup.t_final, cfg.reference_tol))? {
            Ok(u) => reference.wave_ref = Some(u),
            Err(msg) => reference.failure = Some(format!("wavefunction reference: {msg}")),
        }
    } else if cfg.representation.wave() {
        warn!("eps = {eps}: oscillations not resolved by the grid, wavefunction errors skipped");
    }
    reference.observables = match (&reference.wkb_ref, &reference.wave_ref) {
        (Some(s), _) => Some(wkb::observables(s)),
        (None, Some(u)) => Some(wave_observables(u)),
        _ => None,
    };
    Ok(reference)
}

fn run_cell(cfg: &ScenarioConfig, setup: &Setup, reference: &Reference, dt: f64) -> Result<CellOutcome> {
    let start = Instant::now();
    let steps = wavefunction::step_count(setup.t_final, dt)?;
    let mut row = ResultRow {
        eps: reference.eps,
        dt,
        steps,
        ..Default::default()
    };
    let mut outcome = CellOutcome {
        row: ResultRow::default(),
        failure: reference.failure.clone(),
        growth: None,
        wave_final: None,
        wkb_final: None,
    };
    let mut numeric_obs = None;

    if let (Some(s0), Some(s_ref)) = (&reference.wkb0, &reference.wkb_ref) {
        let mut monitor = GrowthMonitor::new(s0, setup.s, GROWTH_RATE);
        let run = wkb_evolve(
            s0,
            cfg.scheme.into(),
            dt,
            setup.t_final,
            &setup.spec,
            &setup.xcfg,
            Some(&mut monitor),
        );
        match guard_or_err(run)? {
            Ok(s) => {
                let e = wkb_error(&s, s_ref, setup.s)?;
                row.err_amp = Some(e.e_amp);
                row.err_gradphase = Some(e.e_gradphase);
                row.err_phase_inf = Some(e.e_phase_inf);
                numeric_obs = Some(wkb::observables(&s));
                outcome.growth = Some(monitor.max_ratio());
                if cfg.snapshots {
                    outcome.wkb_final = Some(s);
                }
            }
            Err(msg) => outcome.failure = Some(format!("WKB run: {msg}")),
        }
    }

    if let Some(u_ref) = &reference.wave_ref {
        let scheme = SchemeSpec::new(cfg.scheme.into(), dt, setup.drive.clone())?;
        match guard_or_err(evolve(&reference.wave0, &scheme, setup.t_final, &EvolveOptions::default()))? {
            Ok(traj) => {
                let u = traj.final_state;
                row.err_l2_wave = Some(u.distance(u_ref)?);
                if numeric_obs.is_none() {
                    numeric_obs = Some(wave_observables(&u));
                }
                if cfg.snapshots {
                    outcome.wave_final = Some(u);
                }
            }
            Err(msg) => outcome.failure = Some(format!("wavefunction run: {msg}")),
        }
    }

    if let (Some((rho, j)), Some((rho_ref, j_ref))) = (&numeric_obs, &reference.observables) {
        row.err_rho = Some(l1_linf(std::slice::from_ref(&rho.sub(rho_ref)?)));
        row.err_j = Some(l1_linf(&field_diff(j, j_ref)?));
    }
    row.walltime_s = start.elapsed().as_secs_f64();
    outcome.row = row;
    Ok(outcome)
}

pub fn run_sweep(cfg: &ScenarioConfig, exec: Execution) -> Result<RunResult> {
    cfg.validate()?;
    let grid = cfg.build_grid()?;
    let spec = cfg.build_nonlinearity()?;
    let drive = match cfg.build_potential() {
        Some(v) => BStep::Potential(v),
        None => BStep::Nonlinear(spec.clone()),
    };
    let t_final = cfg.horizon(&grid)?;
    let steps = cfg.time_steps(t_final);
    let min_dt = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let setup = Setup {
        grid,
        spec,
        drive,
        t_final,
        s: cfg.sobolev_index(),
        xcfg: XFlowConfig::default(),
        reference_dt: cfg.reference_dt.unwrap_or(min_dt / 8.0),
        steps,
    };
    info!(
        "sweep: {} eps x {} dt, T = {t_final:.6}, s = {}",
        cfg.eps.len(),
        setup.steps.len(),
        setup.s
    );

    let references: Vec<Reference> = exec
        .map(&cfg.eps, |&eps| build_reference(cfg, &setup, eps))
        .into_iter()
        .collect::<Result<_>>()?;

    let cross_check = references
        .iter()
        .filter_map(|r| match (&r.wkb_ref, &r.wave_ref) {
            (Some(s), Some(u)) => Some((r.eps, s, u)),
            _ => None,
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(eps, s, u)| wkb::reconstruct(s).distance(u).map(|d| (eps, d)))
        .transpose()?;
    if let Some((eps, d)) = cross_check {
        info!("reference cross-check at eps = {eps}: |Pi(coupled flow) - reference|_L2 = {d:.3e}");
    }

    let jobs: Vec<(usize, f64)> = (0..references.len())
        .flat_map(|i| setup.steps.iter().map(move |&dt| (i, dt)))
        .collect();
    let cells: Vec<CellOutcome> = exec
        .map(&jobs, |&(i, dt)| run_cell(cfg, &setup, &references[i], dt))
        .into_iter()
        .collect::<Result<_>>()?;
    for c in &cells {
        if let Some(msg) = &c.failure {
            warn!("cell eps = {}, dt = {}: {msg}", c.row.eps, c.row.dt);
        }
        if let Some(g) = c.growth.filter(|g| *g > GROWTH_BOUND) {
            warn!("cell eps = {}, dt = {}: norms grew by {g:.2}", c.row.eps, c.row.dt);
        }
    }
    Ok(RunResult {
        t_final,
        cells,
        cross_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets;

    fn small() -> ScenarioConfig {
        let mut cfg = presets::smoothed1d();
        cfg.grid.n = vec![128];
        cfg.eps = vec![0.5, 0.2];
        cfg.steps = vec![4, 8, 16];
        cfg
    }

    fn strip(mut rows: Vec<ResultRow>) -> Vec<ResultRow> {
        rows.iter_mut().for_each(|r| r.walltime_s = 0.0);
        rows
    }

    #[test]
    fn parallel_matches_sequential() {
        let cfg = small();
        let a = run_sweep(&cfg, Execution::Sequential).unwrap();
        let b = run_sweep(&cfg, Execution::Parallel).unwrap();
        assert_eq!(strip(a.rows()), strip(b.rows()));
        assert_eq!(a.rows().len(), 6);
        assert!(a.cells.iter().all(|c| c.failure.is_none()));
        let r = &a.rows()[0];
        assert!(r.err_l2_wave.is_some() && r.err_amp.is_some() && r.err_rho.is_some() && r.err_j.is_some());
        let (eps, d) = a.cross_check.unwrap();
        assert_eq!(eps, 0.5);
        assert!(d < 1e-3, "cross-check {d}");
    }

    #[test]
    fn errors_shrink_with_dt() {
        let rows = run_sweep(&small(), Execution::default()).unwrap().rows();
        for pair in rows[..3].windows(2) {
            assert!(pair[1].err_amp.unwrap() < pair[0].err_amp.unwrap());
            assert!(pair[1].err_l2_wave.unwrap() < pair[0].err_l2_wave.unwrap());
        }
    }

    #[test]
    fn unresolved_eps_skips_wave_errors() {
        let mut cfg = small();
        cfg.eps = vec![0.001];
        let rows = run_sweep(&cfg, Execution::Sequential).unwrap().rows();
        assert!(rows.iter().all(|r| r.err_l2_wave.is_none() && r.err_amp.is_some()));
    }

    #[test]
    fn guard_trips_are_recorded() {
        let mut cfg = small();
        cfg.eps = vec![0.5];
        cfg.t_final = Some(50.0);
        let res = run_sweep(&cfg, Execution::Sequential).unwrap();
        assert!(res.all_failed());
        assert!(res.rows().iter().all(|r| r.err_amp.is_none()));
    }
}

//! JSON scenario files.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, RealField};
use crate::limits::caustic_time;
use crate::nonlinearity::{KernelSpec, LocalTerm, NonlinearitySpec};
use crate::wavefunction::{Composition, PotentialSpec, WaveFunction};
use crate::wkb::WKBState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: Vec<usize>,
    pub length: Vec<f64>,
    /// Defaults to a box centered at the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<Vec<f64>>,
    #[serde(default)]
    pub dealias: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AmplitudeConfig {
    /// `height * exp(-|x|^2)`.
    Gaussian {
        #[serde(default = "one")]
        height: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        AmplitudeConfig::Gaussian { height: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhaseConfig {
    Zero,
    /// `beta * exp(-|x|^2 / 2)`.
    GaussianBump { beta: f64 },
    /// `-beta * sum_i cos(2 pi x_i / L_i)`.
    Cosine { beta: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    Wkb {
        #[serde(default)]
        amplitude: AmplitudeConfig,
        phase: PhaseConfig,
    },
    /// Harmonic-oscillator coherent state centered at `(q, p)`.
    Coherent { q: f64, p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    Smoothed { lambda: f64 },
    Poisson { lambda: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LocalConfig {
    Power { coeff: f64, exponent: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local: Option<LocalConfig>,
    #[serde(default)]
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    Harmonic { omega: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    #[default]
    Lie,
    LieAdjoint,
    Strang,
}

impl From<SchemeName> for Composition {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Lie => Composition::Lie,
            SchemeName::LieAdjoint => Composition::LieAdjoint,
            SchemeName::Strang => Composition::Strang,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Wavefunction,
    Wkb,
    #[default]
    Both,
}

impl Representation {
    pub fn wave(self) -> bool {
        matches!(self, Representation::Wavefunction | Representation::Both)
    }

    pub fn wkb(self) -> bool {
        matches!(self, Representation::Wkb | Representation::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub grid: GridConfig,
    pub initial: InitialConfig,
    /// Absent means `f = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialConfig>,
    pub eps: Vec<f64>,
    /// Explicit time steps; alternatively `steps` gives `T / n`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dt: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<usize>,
    /// Defaults to half the caustic estimate of the initial phase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub scheme: SchemeName,
    #[serde(default)]
    pub representation: Representation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Sobolev index of the WKB error norms; defaults to `ceil(d/2 + 3)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(default = "default_reference_tol")]
    pub reference_tol: f64,
    /// Step of the WKB reference integrator; defaults to the smallest `dt / 8`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_dt: Option<f64>,
    #[serde(default)]
    pub snapshots: bool,
}

fn default_reference_tol() -> f64 {
    1e-9
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn dim(&self) -> usize {
        self.grid.n.len()
    }

    pub fn sobolev_index(&self) -> f64 {
        self.s.unwrap_or_else(|| (self.dim() as f64 / 2.0 + 3.0).ceil())
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        let g = &self.grid;
        let x_min = g
            .x_min
            .clone()
            .unwrap_or_else(|| g.length.iter().map(|l| -0.5 * l).collect());
        Grid::with_options(&g.n, &g.length, &x_min, g.dealias).map_err(|e| config_err(e.to_string()))
    }

    pub fn build_nonlinearity(&self) -> Result<NonlinearitySpec> {
        let Some(cfg) = &self.nonlinearity else {
            return Ok(NonlinearitySpec::vanishing());
        };
        let kernel = cfg.kernel.as_ref().map(|k| match *k {
            KernelConfig::Smoothed { lambda } => KernelSpec::Smoothed { lambda },
            KernelConfig::Poisson { lambda } => KernelSpec::Poisson { lambda },
        });
        let local = match cfg.local {
            Some(LocalConfig::Power { coeff, exponent }) => Some(LocalTerm::power(coeff, exponent)?),
            None => None,
        };
        NonlinearitySpec::new(kernel, local, cfg.alpha)
    }

    pub fn build_potential(&self) -> Option<PotentialSpec> {
        self.potential.as_ref().map(|p| match *p {
            PotentialConfig::Harmonic { omega } => PotentialSpec::harmonic(omega),
        })
    }

    pub fn phase_field(&self, grid: &Arc<Grid>) -> RealField {
        match &self.initial {
            InitialConfig::Wkb { phase, .. } => phase_field(phase, grid),
            InitialConfig::Coherent { .. } => RealField::zeros(grid.clone()),
        }
    }

    /// WKB data at `eps`; `None` for coherent states.
    pub fn wkb_initial(&self, grid: &Arc<Grid>, eps: f64) -> Result<Option<WKBState>> {
        match &self.initial {
            InitialConfig::Wkb { amplitude, phase } => {
                let amp = amplitude_field(amplitude, grid);
                WKBState::new(phase_field(phase, grid), amp, eps).map(Some)
            }
            InitialConfig::Coherent { .. } => Ok(None),
        }
    }

    pub fn wave_initial(&self, grid: &Arc<Grid>, eps: f64) -> Result<WaveFunction> {
        match &self.initial {
            InitialConfig::Wkb { .. } => {
                let s = self.wkb_initial(grid, eps)?.expect("WKB data");
                Ok(crate::wkb::reconstruct(&s))
            }
            &InitialConfig::Coherent { q, p } => {
                WaveFunction::new(coherent_state(grid, eps, q, p, 0.0), eps)
            }
        }
    }

    /// Explicit horizon, or half the caustic estimate of `grad phi0`.
    pub fn horizon(&self, grid: &Arc<Grid>) -> Result<f64> {
        if let Some(t) = self.t_final {
            return Ok(t);
        }
        let t_star = caustic_time(&self.phase_field(grid).gradient())?;
        if t_star.is_finite() {
            Ok(0.5 * t_star)
        } else {
            Err(config_err("t_final is required when the initial phase forms no caustic"))
        }
    }

    /// The step list, resolved against the horizon.
    pub fn time_steps(&self, t_final: f64) -> Vec<f64> {
        if self.dt.is_empty() {
            self.steps.iter().map(|&n| t_final / n as f64).collect()
        } else {
            self.dt.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.grid.length.len() != d || self.grid.x_min.as_ref().is_some_and(|x| x.len() != d) {
            return Err(config_err("grid.n, grid.length and grid.x_min must have equal lengths"));
        }
        let grid = self.build_grid()?;
        let spec = self.build_nonlinearity()?;
        spec.validate_for(&grid)?;
        if self.eps.is_empty() {
            return Err(config_err("eps list is empty"));
        }
        for &e in &self.eps {
            crate::wavefunction::check_eps(e).map_err(|e| config_err(e.to_string()))?;
        }
        if self.dt.is_empty() == self.steps.is_empty() {
            return Err(config_err("give exactly one of `dt` and `steps`"));
        }
        if self.steps.contains(&0) {
            return Err(config_err("step counts must be positive"));
        }
        if !(self.reference_tol > 0.0) {
            return Err(config_err("reference_tol must be positive"));
        }
        if self.reference_dt.is_some_and(|h| !(h > 0.0)) {
            return Err(config_err("reference_dt must be positive"));
        }
        let t_final = self.horizon(&grid)?;
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(config_err(format!("t_final must be positive, got {t_final}")));
        }
        for dt in self.time_steps(t_final) {
            if !(dt > 0.0 && dt <= t_final * (1.0 + 1e-12)) {
                return Err(config_err(format!("dt = {dt} must lie in (0, T = {t_final}]")));
            }
            crate::wavefunction::step_count(t_final, dt).map_err(|e| config_err(e.to_string()))?;
        }
        if let Some(v) = self.build_potential() {
            if self.representation.wkb() {
                return Err(config_err("the WKB representation does not support a potential"));
            }
            if self.nonlinearity.is_some() {
                return Err(config_err("a potential run cannot also carry a nonlinearity"));
            }
            v.check_subquadratic(&grid, 0.0, t_final)?;
        }
        if matches!(self.initial, InitialConfig::Coherent { .. }) && self.representation.wkb() {
            return Err(config_err("coherent-state data needs the wavefunction representation"));
        }
        Ok(())
    }
}

pub fn amplitude_field(cfg: &AmplitudeConfig, grid: &Arc<Grid>) -> ComplexField {
    match *cfg {
        AmplitudeConfig::Gaussian { height } => ComplexField::from_fn(grid.clone(), |x| {
            Complex64::new(height * (-x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
        }),
    }
}

pub fn phase_field(cfg: &PhaseConfig, grid: &Arc<Grid>) -> RealField {
    match *cfg {
        PhaseConfig::Zero => RealField::zeros(grid.clone()),
        PhaseConfig::GaussianBump { beta } => RealField::from_fn(grid.clone(), |x| {
            beta * (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()
        }),
        PhaseConfig::Cosine { beta } => {
            let lengths = grid.lengths().to_vec();
            RealField::from_fn(grid.clone(), move |x| {
                -beta
                    * x.iter()
                        .zip(&lengths)
                        .map(|(v, l)| (2.0 * std::f64::consts::PI * v / l).cos())
                        .sum::<f64>()
            })
        }
    }
}

/// Coherent state of `i eps u_t = -eps^2/2 Lap u + |x|^2/2 u` at time `t`,
/// started at position `q` and momentum `p` along every axis.
pub fn coherent_state(grid: &Arc<Grid>, eps: f64, q: f64, p: f64, t: f64) -> ComplexField {
    let (s, c) = t.sin_cos();
    let qt = q * c + p * s;
    let pt = p * c - q * s;
    let gamma = 0.5 * (pt * qt - p * q) - 0.5 * eps * t;
    let d = grid.dim() as f64;
    let norm = (std::f64::consts::PI * eps).powf(-0.25 * d);
    ComplexField::from_fn(grid.clone(), |x| {
        let (mut re, mut im) = (0.0, d * gamma / eps);
        for &xi in x {
            let y = xi - qt;
            re -= y * y / (2.0 * eps);
            im += pt * y / eps;
        }
        norm * Complex64::new(re, im).exp()
    })
}

//! Built-in scenarios.

use super::config::{
    AmplitudeConfig, GridConfig, InitialConfig, KernelConfig, LocalConfig, NonlinearityConfig, PhaseConfig,
    PotentialConfig, Representation, ScenarioConfig, SchemeName,
};
use crate::error::{Error, Result};

pub const NAMES: [&str; 4] = ["smoothed1d", "poisson3d", "cubic-weak", "harmonic-linear"];

fn bump() -> InitialConfig {
    InitialConfig::Wkb {
        amplitude: AmplitudeConfig::default(),
        phase: PhaseConfig::GaussianBump { beta: 0.3 },
    }
}

fn base(name: &str, grid: GridConfig, initial: InitialConfig) -> ScenarioConfig {
    ScenarioConfig {
        name: Some(name.into()),
        grid,
        initial,
        nonlinearity: None,
        potential: None,
        eps: Vec::new(),
        dt: Vec::new(),
        steps: Vec::new(),
        t_final: None,
        scheme: SchemeName::Lie,
        representation: Representation::Both,
        output_dir: None,
        s: None,
        reference_tol: 1e-9,
        reference_dt: None,
        snapshots: false,
    }
}

fn line(n: usize, length: f64) -> GridConfig {
    GridConfig {
        n: vec![n],
        length: vec![length],
        x_min: None,
        dealias: false,
    }
}

/// `d = 1` on `[-16, 16)`, smoothed kernel, `alpha = 0`.
pub fn smoothed1d() -> ScenarioConfig {
    let mut cfg = base("smoothed1d", line(1024, 32.0), bump());
    cfg.nonlinearity = Some(NonlinearityConfig {
        kernel: Some(KernelConfig::Smoothed { lambda: 1.0 }),
        local: None,
        alpha: 0.0,
    });
    cfg.eps = vec![0.5, 0.1, 0.01];
    cfg.steps = vec![20, 40, 80, 160, 320];
    cfg
}

/// Repulsive Schrödinger-Poisson in three dimensions.
pub fn poisson3d() -> ScenarioConfig {
    let grid = GridConfig {
        n: vec![64; 3],
        length: vec![12.0; 3],
        x_min: None,
        dealias: false,
    };
    let mut cfg = base("poisson3d", grid, bump());
    cfg.nonlinearity = Some(NonlinearityConfig {
        kernel: Some(KernelConfig::Poisson { lambda: -1.0 }),
        local: None,
        alpha: 0.0,
    });
    cfg.eps = vec![0.1];
    cfg.steps = vec![10, 20, 40];
    cfg.representation = Representation::Wkb;
    cfg
}

/// Cubic local nonlinearity with `alpha = 1`.
pub fn cubic_weak() -> ScenarioConfig {
    let mut cfg = base("cubic-weak", line(1024, 32.0), bump());
    cfg.nonlinearity = Some(NonlinearityConfig {
        kernel: None,
        local: Some(LocalConfig::Power {
            coeff: 1.0,
            exponent: 1.0,
        }),
        alpha: 1.0,
    });
    cfg.eps = vec![0.1, 0.01];
    cfg.steps = vec![20, 40, 80, 160];
    cfg.representation = Representation::Wkb;
    cfg
}

/// Linear harmonic oscillator with a coherent state, one full period.
pub fn harmonic_linear() -> ScenarioConfig {
    let mut cfg = base(
        "harmonic-linear",
        line(256, 16.0),
        InitialConfig::Coherent { q: 1.0, p: 0.5 },
    );
    cfg.potential = Some(PotentialConfig::Harmonic { omega: 1.0 });
    cfg.eps = vec![0.5];
    cfg.steps = vec![50, 100, 200, 400];
    cfg.t_final = Some(2.0 * std::f64::consts::PI);
    cfg.representation = Representation::Wavefunction;
    cfg
}

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "smoothed1d" => Ok(smoothed1d()),
        "poisson3d" => Ok(poisson3d()),
        "cubic-weak" => Ok(cubic_weak()),
        "harmonic-linear" => Ok(harmonic_linear()),
        other => Err(Error::Config(format!(
            "unknown scenario `{other}`; available: {}",
            NAMES.join(", ")
        ))),
    }
}

//! Nonlinearities `f(rho) = K * rho + f2(rho)` with coupling exponent `alpha`.
//!
//! The convolution part is represented by its Fourier multiplier `K_hat`,
//! which must be real and even so that `f` maps real densities to real
//! potentials. The optional local part is supplied as the pair `(f2, f2')`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, NormKind, RealField};

type Multiplier = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied Fourier multiplier.
#[derive(Clone)]
pub struct CustomKernel {
    label: String,
    multiplier: Multiplier,
}

impl CustomKernel {
    pub fn new(label: impl Into<String>, multiplier: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            multiplier: Arc::new(multiplier),
        }
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomKernel({})", self.label)
    }
}

#[derive(Clone, Debug)]
pub enum KernelSpec {
    /// `K_hat = -lambda / |xi|^2`, zero mode removed; requires `d >= 3`.
    Poisson { lambda: f64 },
    /// `K_hat = lambda / (1 + |xi|^2)`.
    Smoothed { lambda: f64 },
    Custom(CustomKernel),
}

impl KernelSpec {
    pub fn multiplier(&self, xi: &[f64]) -> f64 {
        let k2: f64 = xi.iter().map(|k| k * k).sum();
        self.multiplier_sq(k2).unwrap_or_else(|| match self {
            KernelSpec::Custom(c) => (c.multiplier)(xi),
            _ => unreachable!(),
        })
    }

    // Closed forms depend on |xi|^2 only.
    fn multiplier_sq(&self, k2: f64) -> Option<f64> {
        match *self {
            KernelSpec::Poisson { lambda } => Some(if k2 == 0.0 { 0.0 } else { -lambda / k2 }),
            KernelSpec::Smoothed { lambda } => Some(lambda / (1.0 + k2)),
            KernelSpec::Custom(_) => None,
        }
    }

    /// `K_hat` at every flat Fourier index of `grid`.
    pub fn symbol(&self, grid: &Grid) -> Vec<f64> {
        match self {
            KernelSpec::Custom(c) => grid.modes().map(|(_, xi)| (c.multiplier)(&xi)).collect(),
            _ => grid
                .xi_sq()
                .iter()
                .map(|&k2| self.multiplier_sq(k2).expect("closed-form kernel"))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            KernelSpec::Poisson { lambda } | KernelSpec::Smoothed { lambda } => lambda == 0.0,
            KernelSpec::Custom(_) => false,
        }
    }

    fn check_dimension(&self, grid: &Grid) -> Result<()> {
        if matches!(self, KernelSpec::Poisson { .. }) && grid.dim() < 3 {
            return Err(Error::InvalidNonlinearity(format!(
                "Poisson kernel needs d >= 3, grid has d = {}",
                grid.dim()
            )));
        }
        Ok(())
    }

    /// Checks the multiplier over the grid modes: finite, real-even, and
    /// `(1+|xi|^2)|K_hat|` (d <= 2) or `|xi|^2 |K_hat|` (d >= 3) not growing
    /// toward the top of the spectrum.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.check_dimension(grid)?;
        let symbol = self.symbol(grid);
        if let Some(bad) = symbol.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidNonlinearity(format!(
                "kernel multiplier not finite at mode {:?}",
                grid.point(bad)
            )));
        }
        if let KernelSpec::Custom(c) = self {
            for (flat, xi) in grid.modes() {
                let mirrored: Vec<f64> = xi.iter().map(|k| -k).collect();
                let (a, b) = (symbol[flat], (c.multiplier)(&mirrored));
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1e-300) {
                    return Err(Error::InvalidNonlinearity(format!(
                        "kernel multiplier is not even at xi = {xi:?}"
                    )));
                }
            }
        }
        let weight = |k2: f64| if grid.dim() <= 2 { 1.0 + k2 } else { k2 };
        let half = 0.5 * grid.max_wavenumber();
        let (mut inner, mut outer) = (0.0f64, 0.0f64);
        for (&k2, &m) in grid.xi_sq().iter().zip(&symbol) {
            let w = weight(k2) * m.abs();
            if k2.sqrt() <= half {
                inner = inner.max(w);
            } else {
                outer = outer.max(w);
            }
        }
        if outer > 2.0 * inner && outer > 1e-300 {
            return Err(Error::InvalidNonlinearity(format!(
                "kernel decay too slow: weighted multiplier grows from {inner:.3e} to {outer:.3e}"
            )));
        }
        Ok(())
    }

    /// `max over grid modes of (1 + |xi|^2) |K_hat(xi)|`.
    pub fn gain_constant(&self, grid: &Grid) -> f64 {
        self.symbol(grid)
            .iter()
            .zip(grid.xi_sq())
            .fold(0.0, |m, (s, k2)| m.max((1.0 + k2) * s.abs()))
    }

    /// `K * g` for an arbitrary real grid function `g`.
    pub fn convolve(&self, grid: &Grid, values: &[f64]) -> Vec<f64> {
        if self.is_zero() {
            return vec![0.0; values.len()];
        }
        let symbol = self.symbol(grid);
        let spectrum = grid.spectrum_of_real(values);
        let out = grid.apply_symbol(&spectrum, |flat| Complex64::new(symbol[flat], 0.0));
        debug_assert!({
            let scale = out.iter().fold(1e-300f64, |m, c| m.max(c.norm()));
            out.iter().all(|c| c.im.abs() <= 1e-10 * scale)
        });
        out.into_iter().map(|c| c.re).collect()
    }
}

/// Local part `f2` with its derivative; `f2(0) = 0`.
#[derive(Clone)]
pub struct LocalTerm {
    label: String,
    f: ScalarFn,
    df: ScalarFn,
}

impl fmt::Debug for LocalTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LocalTerm({})", self.label)
    }
}

impl LocalTerm {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let label = label.into();
        let at_zero = f(0.0);
        if at_zero.abs() > 1e-14 {
            return Err(Error::InvalidNonlinearity(format!(
                "local term `{label}` has f2(0) = {at_zero}, expected 0"
            )));
        }
        Ok(Self {
            label,
            f: Arc::new(f),
            df: Arc::new(df),
        })
    }

    /// `f2(rho) = coeff * rho^exponent`, `exponent >= 1`.
    pub fn power(coeff: f64, exponent: f64) -> Result<Self> {
        if !(exponent >= 1.0 && exponent.is_finite() && coeff.is_finite()) {
            return Err(Error::InvalidNonlinearity(format!(
                "power law needs a finite coefficient and exponent >= 1, got {coeff}, {exponent}"
            )));
        }
        Self::new(
            format!("{coeff}*rho^{exponent}"),
            move |r| coeff * r.powf(exponent),
            move |r| {
                if exponent == 1.0 {
                    coeff
                } else {
                    coeff * exponent * r.powf(exponent - 1.0)
                }
            },
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, rho: f64) -> f64 {
        (self.f)(rho)
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        (self.df)(rho)
    }
}

#[derive(Clone, Debug)]
pub struct NonlinearitySpec {
    kernel: Option<KernelSpec>,
    local: Option<LocalTerm>,
    alpha: f64,
}

impl NonlinearitySpec {
    pub fn new(kernel: Option<KernelSpec>, local: Option<LocalTerm>, alpha: f64) -> Result<Self> {
        if kernel.is_none() && local.is_none() {
            return Err(Error::InvalidNonlinearity(
                "at least one of kernel and local part is required".into(),
            ));
        }
        if !alpha.is_finite() || alpha < 0.0 || (alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidNonlinearity(format!(
                "alpha must be 0 or >= 1, got {alpha}"
            )));
        }
        if alpha == 0.0 && local.is_some() {
            return Err(Error::InvalidNonlinearity(
                "a local part is only supported for alpha >= 1".into(),
            ));
        }
        Ok(Self { kernel, local, alpha })
    }

    /// Nonlocal nonlinearity with `alpha = 0`.
    pub fn kernel_only(kernel: KernelSpec) -> Self {
        Self {
            kernel: Some(kernel),
            local: None,
            alpha: 0.0,
        }
    }

    /// `f = 0`.
    pub fn vanishing() -> Self {
        Self::kernel_only(KernelSpec::Smoothed { lambda: 0.0 })
    }

    pub fn kernel(&self) -> Option<&KernelSpec> {
        self.kernel.as_ref()
    }

    pub fn local(&self) -> Option<&LocalTerm> {
        self.local.as_ref()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `alpha >= 1`: the nonlinearity acts on the amplitude, not the phase.
    pub fn is_weak(&self) -> bool {
        self.alpha >= 1.0
    }

    pub fn is_vanishing(&self) -> bool {
        self.local.is_none() && self.kernel.as_ref().is_none_or(|k| k.is_zero())
    }

    /// `eps^(alpha - 1)`, the rate of the nonlinear phase rotation.
    pub fn coupling(&self, eps: f64) -> f64 {
        eps.powf(self.alpha - 1.0)
    }

    pub fn validate_for(&self, grid: &Grid) -> Result<()> {
        if let Some(k) = &self.kernel {
            k.validate(grid)?;
        }
        Ok(())
    }

    pub(crate) fn check_dimension(&self, grid: &Grid) -> Result<()> {
        self.kernel
            .as_ref()
            .map_or(Ok(()), |k| k.check_dimension(grid))
    }

    /// `f(rho)` on raw grid values.
    pub(crate) fn eval(&self, grid: &Grid, rho: &[f64]) -> Vec<f64> {
        let mut out = match &self.kernel {
            Some(k) => k.convolve(grid, rho),
            None => vec![0.0; rho.len()],
        };
        if let Some(local) = &self.local {
            out.iter_mut().zip(rho).for_each(|(o, &r)| *o += local.eval(r));
        }
        out
    }

    /// Linear kernel part `f1` applied to an arbitrary real function.
    pub(crate) fn eval_kernel(&self, grid: &Grid, values: &[f64]) -> Vec<f64> {
        match &self.kernel {
            Some(k) => k.convolve(grid, values),
            None => vec![0.0; values.len()],
        }
    }

    /// `f2'(rho)` pointwise (zero without a local part).
    pub(crate) fn eval_local_derivative(&self, rho: &[f64]) -> Vec<f64> {
        match &self.local {
            Some(local) => rho.iter().map(|&r| local.derivative(r)).collect(),
            None => vec![0.0; rho.len()],
        }
    }
}

/// `f(rho) = K * rho + f2(rho)`.
pub fn apply_f(spec: &NonlinearitySpec, rho: &RealField) -> Result<RealField> {
    spec.check_dimension(rho.grid())?;
    let grid = rho.grid();
    Ok(RealField::from_vec(grid.clone(), spec.eval(grid, rho.values())))
}

/// Spectral gradient of `f(rho)`.
pub fn grad_f(spec: &NonlinearitySpec, rho: &RealField) -> Result<Vec<RealField>> {
    Ok(apply_f(spec, rho)?.gradient())
}

/// Outcome of a kernel gain-inequality check.
#[derive(Clone, Debug, PartialEq)]
pub struct GainReport {
    /// `|grad f(rho)|_{H^{s+1}}`.
    pub grad_norm: f64,
    /// `|f(rho)|_{L^inf}`.
    pub f_linf: f64,
    /// `|rho|_{H^s} + |rho|_{L^1}`.
    pub rhs: f64,
    pub ratio: f64,
    pub linf_ratio: f64,
    /// Largest `(1 + |xi|^2)|K_hat|` over the grid modes.
    pub constant: f64,
    pub pass: bool,
}

pub const GAIN_SLACK: f64 = 1.05;

/// Measures `|grad f(rho)|_{H^{s+1}} <= C (|rho|_{H^s} + |rho|_{L^1})` on the grid.
pub fn check_gain_bound(spec: &NonlinearitySpec, rho: &RealField, s: f64) -> Result<GainReport> {
    let kernel = spec.kernel().ok_or_else(|| {
        Error::InvalidNonlinearity("gain bound needs a convolution kernel".into())
    })?;
    let grid = rho.grid();
    kernel.validate(grid)?;
    let f = RealField::from_vec(grid.clone(), kernel.convolve(grid, rho.values()));
    let grad_norm = crate::grid::vector_norm(&f.gradient(), NormKind::Hs(s + 1.0));
    let f_linf = f.linf();
    let rhs = rho.norm(NormKind::Hs(s)) + rho.norm(NormKind::L1);
    let constant = kernel.gain_constant(grid);
    let (ratio, linf_ratio) = if rhs > 0.0 {
        (grad_norm / rhs, f_linf / rhs)
    } else {
        (0.0, 0.0)
    };
    let pass = if rhs > 0.0 {
        ratio <= constant * GAIN_SLACK
    } else {
        grad_norm == 0.0
    };
    Ok(GainReport {
        grad_norm,
        f_linf,
        rhs,
        ratio,
        linf_ratio,
        constant,
        pass,
    })
}

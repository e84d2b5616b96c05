use std::sync::Arc;

use num_complex::Complex64;

use super::{Grid, NormKind};
use crate::error::{Error, Result};

/// Real grid function.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

/// Complex grid function.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

fn check_len(grid: &Grid, len: usize) -> Result<()> {
    if len == grid.total() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "field has {len} values, grid has {} points",
            grid.total()
        )))
    }
}

fn check_order(grid: &Grid, order: &[usize]) -> Result<()> {
    if order.len() == grid.dim() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "multi-index of length {} on a {}-d grid",
            order.len(),
            grid.dim()
        )))
    }
}

impl RealField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("real field"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.total());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.total();
        Self::from_vec(grid, vec![0.0; n])
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Self {
        let n = grid.total();
        Self::from_vec(grid, vec![value; n])
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.total()).map(|j| f(&grid.point(j))).collect();
        Self::from_vec(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField::from_vec(
            self.grid.clone(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn sub(&self, other: &RealField) -> Result<RealField> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_vec(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &RealField) -> Result<RealField> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_vec(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, factor: f64) -> RealField {
        self.map(|v| v * factor)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `int f dx` by the rectangle rule (spectrally accurate for periodic data).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Normalized discrete Fourier transform.
    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.spectrum_of_real(&self.values)
    }

    pub fn derivative(&self, order: &[usize]) -> Result<RealField> {
        check_order(&self.grid, order)?;
        let d = self.grid.derivative_from_spectrum(&self.spectrum(), order);
        Ok(Self::from_vec(self.grid.clone(), d.into_iter().map(|c| c.re).collect()))
    }

    pub fn gradient(&self) -> Vec<RealField> {
        self.grid
            .gradient_real(&self.values)
            .into_iter()
            .map(|v| Self::from_vec(self.grid.clone(), v))
            .collect()
    }

    pub fn laplacian(&self) -> RealField {
        let lap = self.grid.laplacian_from_spectrum(&self.spectrum());
        Self::from_vec(self.grid.clone(), lap.into_iter().map(|c| c.re).collect())
    }

    /// `max |d_i d_j f|` over the grid and all index pairs.
    pub fn hessian_linf(&self) -> f64 {
        self.grid.hessian_linf(&self.values)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        super::norm::norm_real(self, kind)
    }
}

impl ComplexField {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, values.len())?;
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite("complex field"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec(grid: Arc<Grid>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.total());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.total();
        Self::from_vec(grid, vec![Complex64::default(); n])
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.total()).map(|j| f(&grid.point(j))).collect();
        Self::from_vec(grid, values)
    }

    /// Inverse of [`ComplexField::spectrum`].
    pub fn from_spectrum(grid: Arc<Grid>, spectrum: Vec<Complex64>) -> Result<Self> {
        check_len(&grid, spectrum.len())?;
        let mut values = spectrum;
        grid.inverse(&mut values);
        Ok(Self::from_vec(grid, values))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::from_vec(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn re(&self) -> RealField {
        RealField::from_vec(self.grid.clone(), self.values.iter().map(|v| v.re).collect())
    }

    pub fn im(&self) -> RealField {
        RealField::from_vec(self.grid.clone(), self.values.iter().map(|v| v.im).collect())
    }

    /// Pointwise `|u|^2`.
    pub fn abs_sq(&self) -> RealField {
        RealField::from_vec(self.grid.clone(), self.values.iter().map(|v| v.norm_sqr()).collect())
    }

    pub fn sub(&self, other: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_vec(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        ))
    }

    pub fn add(&self, other: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_vec(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn scale(&self, factor: Complex64) -> ComplexField {
        self.map(|v| v * factor)
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn spectrum(&self) -> Vec<Complex64> {
        self.grid.spectrum_of(&self.values)
    }

    /// Inverse transform of `(i xi)^order * transform(u)`, Nyquist zeroed for odd orders.
    pub fn derivative(&self, order: &[usize]) -> Result<ComplexField> {
        check_order(&self.grid, order)?;
        let d = self.grid.derivative_from_spectrum(&self.spectrum(), order);
        Ok(Self::from_vec(self.grid.clone(), d))
    }

    pub fn gradient(&self) -> Vec<ComplexField> {
        let spectrum = self.spectrum();
        (0..self.grid.dim())
            .map(|axis| {
                let order = self.grid.unit_order(axis);
                Self::from_vec(
                    self.grid.clone(),
                    self.grid.derivative_from_spectrum(&spectrum, &order),
                )
            })
            .collect()
    }

    pub fn laplacian(&self) -> ComplexField {
        let lap = self.grid.laplacian_from_spectrum(&self.spectrum());
        Self::from_vec(self.grid.clone(), lap)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        super::norm::norm_complex(self, kind)
    }
}

/// Spectral derivative `d^order u` of a complex field.
pub fn spectral_derivative(field: &ComplexField, order: &[usize]) -> Result<ComplexField> {
    field.derivative(order)
}

//! Periodic tensor-product grids, Fourier transforms and spectral calculus.
//!
//! Physical space is a box `[x_min, x_min + L)` per axis with `N` points
//! (power of two, at least 8). Values are stored flat in C row-major order,
//! so the last axis is contiguous. The discrete transform carries a
//! symmetric `1/sqrt(prod N)` normalization in both directions; all
//! user-facing norms are quadrature formulas and do not depend on it.
//!
//! Spectral derivatives zero the Nyquist mode of odd-order factors. When a
//! grid is built with the dealiasing flag, every derivative output is
//! additionally filtered with the 2/3-rule mask.

mod field;
pub mod fld;
mod norm;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use field::{spectral_derivative, ComplexField, RealField};
pub use norm::{vector_norm, NormKind};

pub const MIN_POINTS: usize = 8;

pub struct Grid {
    shape: Vec<usize>,
    lengths: Vec<f64>,
    origin: Vec<f64>,
    spacing: Vec<f64>,
    wavenumbers: Vec<Vec<f64>>,
    strides: Vec<usize>,
    // Per-axis wavenumber and coordinate of every flat index.
    xi: Vec<Vec<f64>>,
    xi_odd: Vec<Vec<f64>>,
    xi_sq: Vec<f64>,
    coords: Vec<Vec<f64>>,
    dealias_mask: Option<Vec<bool>>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("shape", &self.shape)
            .field("lengths", &self.lengths)
            .field("origin", &self.origin)
            .field("dealias", &self.dealias_mask.is_some())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self.lengths == other.lengths
            && self.origin == other.origin
            && self.dealias_mask.is_some() == other.dealias_mask.is_some()
    }
}

/// FFT-ordered wavenumbers `2 pi k / L`, `k = 0, 1, .., N/2 - 1, -N/2, .., -1`.
pub fn fft_wavenumbers(n: usize, length: f64) -> Vec<f64> {
    let half = (n / 2) as i64;
    (0..n as i64)
        .map(|j| {
            let k = if j < half { j } else { j - n as i64 };
            2.0 * std::f64::consts::PI * k as f64 / length
        })
        .collect()
}

impl Grid {
    pub fn new(shape: &[usize], lengths: &[f64], origin: &[f64]) -> Result<Arc<Grid>> {
        Self::with_options(shape, lengths, origin, false)
    }

    /// Single-axis grid on `[x_min, x_min + length)`.
    pub fn line(n: usize, length: f64, x_min: f64) -> Result<Arc<Grid>> {
        Self::new(&[n], &[length], &[x_min])
    }

    pub fn with_options(
        shape: &[usize],
        lengths: &[f64],
        origin: &[f64],
        dealias: bool,
    ) -> Result<Arc<Grid>> {
        let dim = shape.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if lengths.len() != dim || origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} lengths and offsets, got {} and {}",
                lengths.len(),
                origin.len()
            )));
        }
        for (axis, &n) in shape.iter().enumerate() {
            if n < MIN_POINTS || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: N = {n} must be a power of two >= {MIN_POINTS}"
                )));
            }
            if !(lengths[axis].is_finite() && lengths[axis] > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: length {} must be positive",
                    lengths[axis]
                )));
            }
            if !origin[axis].is_finite() {
                return Err(Error::InvalidGrid(format!("axis {axis}: x_min not finite")));
            }
        }

        let total: usize = shape.iter().product();
        let mut strides = vec![1usize; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * shape[axis + 1];
        }
        let spacing: Vec<f64> = (0..dim).map(|a| lengths[a] / shape[a] as f64).collect();
        let wavenumbers: Vec<Vec<f64>> = (0..dim)
            .map(|a| fft_wavenumbers(shape[a], lengths[a]))
            .collect();

        let mut xi = vec![vec![0.0; total]; dim];
        let mut xi_odd = vec![vec![0.0; total]; dim];
        let mut coords = vec![vec![0.0; total]; dim];
        let mut xi_sq = vec![0.0; total];
        let mut mask = dealias.then(|| vec![true; total]);
        for flat in 0..total {
            for axis in 0..dim {
                let j = (flat / strides[axis]) % shape[axis];
                let k = wavenumbers[axis][j];
                xi[axis][flat] = k;
                xi_odd[axis][flat] = if j == shape[axis] / 2 { 0.0 } else { k };
                coords[axis][flat] = origin[axis] + j as f64 * spacing[axis];
                xi_sq[flat] += k * k;
                if let Some(mask) = mask.as_mut() {
                    let signed = if j < shape[axis] / 2 {
                        j as i64
                    } else {
                        j as i64 - shape[axis] as i64
                    };
                    if 3 * signed.unsigned_abs() as usize > shape[axis] {
                        mask[flat] = false;
                    }
                }
            }
        }

        let mut planner = FftPlanner::new();
        let forward = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();

        Ok(Arc::new(Grid {
            shape: shape.to_vec(),
            lengths: lengths.to_vec(),
            origin: origin.to_vec(),
            spacing,
            wavenumbers,
            strides,
            xi,
            xi_odd,
            xi_sq,
            coords,
            dealias_mask: mask,
            forward,
            inverse,
        }))
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Quadrature weight `prod dx`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn total(&self) -> usize {
        self.xi_sq.len()
    }

    pub fn is_dealiased(&self) -> bool {
        self.dealias_mask.is_some()
    }

    /// Wavenumbers of one axis in FFT order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// Largest resolved wavenumber magnitude per axis (`pi N / L`).
    pub fn max_wavenumber(&self) -> f64 {
        (0..self.dim())
            .map(|a| std::f64::consts::PI / self.spacing[a])
            .fold(f64::INFINITY, f64::min)
    }

    /// `xi_axis` at every flat index.
    pub fn xi_flat(&self, axis: usize) -> &[f64] {
        &self.xi[axis]
    }

    /// `|xi|^2` at every flat index.
    pub fn xi_sq(&self) -> &[f64] {
        &self.xi_sq
    }

    /// Physical coordinate of one axis at every flat index.
    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        (0..self.dim()).map(|a| self.coords[a][flat]).collect()
    }

    /// Visits `(flat index, xi vector)` for every Fourier mode.
    pub fn modes(&self) -> impl Iterator<Item = (usize, Vec<f64>)> + '_ {
        (0..self.total()).map(move |flat| {
            let xi = (0..self.dim()).map(|a| self.xi[a][flat]).collect();
            (flat, xi)
        })
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// In-place normalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// In-place normalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let total = self.total();
        assert_eq!(data.len(), total, "buffer length does not match grid");
        let plans = if inverse { &self.inverse } else { &self.forward };
        for (axis, fft) in plans.iter().enumerate() {
            let n = self.shape[axis];
            let stride = self.strides[axis];
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let mut line = vec![Complex64::default(); n];
            for block in (0..total).step_by(n * stride) {
                for inner in 0..stride {
                    let base = block + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, value) in line.iter().enumerate() {
                        data[base + j * stride] = *value;
                    }
                }
            }
        }
        let scale = 1.0 / (total as f64).sqrt();
        data.iter_mut().for_each(|v| *v *= scale);
    }

    pub(crate) fn spectrum_of_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub(crate) fn spectrum_of(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        buf
    }

    /// Multiplier of `prod_j (i xi_j)^{m_j}` at a flat index.
    fn derivative_symbol(&self, order: &[usize], flat: usize) -> Complex64 {
        let mut symbol = Complex64::new(1.0, 0.0);
        for (axis, &m) in order.iter().enumerate() {
            if m == 0 {
                continue;
            }
            let k = if m % 2 == 1 {
                self.xi_odd[axis][flat]
            } else {
                self.xi[axis][flat]
            };
            symbol *= Complex64::new(0.0, k).powu(m as u32);
        }
        symbol
    }

    fn mask(&self, flat: usize) -> bool {
        self.dealias_mask.as_ref().is_none_or(|m| m[flat])
    }

    /// Applies a derivative to a precomputed spectrum and returns physical values.
    pub(crate) fn derivative_from_spectrum(
        &self,
        spectrum: &[Complex64],
        order: &[usize],
    ) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(flat, &c)| {
                if self.mask(flat) {
                    c * self.derivative_symbol(order, flat)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        self.inverse(&mut out);
        out
    }

    /// Multiplies a spectrum by a real symbol and returns physical values.
    pub(crate) fn apply_symbol(
        &self,
        spectrum: &[Complex64],
        symbol: impl Fn(usize) -> Complex64,
    ) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(flat, &c)| c * symbol(flat))
            .collect();
        self.inverse(&mut out);
        out
    }

    pub(crate) fn unit_order(&self, axis: usize) -> Vec<usize> {
        let mut order = vec![0; self.dim()];
        order[axis] = 1;
        order
    }

    /// Spectral gradient of real values.
    pub(crate) fn gradient_real(&self, values: &[f64]) -> Vec<Vec<f64>> {
        let spectrum = self.spectrum_of_real(values);
        self.gradient_from_spectrum_real(&spectrum)
    }

    pub(crate) fn gradient_from_spectrum_real(&self, spectrum: &[Complex64]) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|axis| {
                self.derivative_from_spectrum(spectrum, &self.unit_order(axis))
                    .into_iter()
                    .map(|c| c.re)
                    .collect()
            })
            .collect()
    }

    pub(crate) fn laplacian_from_spectrum(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = spectrum
            .iter()
            .enumerate()
            .map(|(flat, &c)| {
                if self.mask(flat) {
                    -c * self.xi_sq[flat]
                } else {
                    Complex64::default()
                }
            })
            .collect();
        self.inverse(&mut out);
        out
    }

    /// Gradient and Laplacian of real values from a single forward transform.
    pub(crate) fn gradient_laplacian_real(&self, values: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let spectrum = self.spectrum_of_real(values);
        let grad = self.gradient_from_spectrum_real(&spectrum);
        let lap = self
            .laplacian_from_spectrum(&spectrum)
            .into_iter()
            .map(|c| c.re)
            .collect();
        (grad, lap)
    }

    /// Gradient of complex values.
    pub(crate) fn gradient_complex(&self, values: &[Complex64]) -> Vec<Vec<Complex64>> {
        let spectrum = self.spectrum_of(values);
        (0..self.dim())
            .map(|axis| self.derivative_from_spectrum(&spectrum, &self.unit_order(axis)))
            .collect()
    }

    /// Spectral divergence of a real vector field.
    pub(crate) fn divergence_real(&self, components: &[Vec<f64>]) -> Vec<f64> {
        let mut acc = vec![Complex64::default(); self.total()];
        for (axis, comp) in components.iter().enumerate() {
            let spectrum = self.spectrum_of_real(comp);
            for (flat, (slot, c)) in acc.iter_mut().zip(spectrum).enumerate() {
                if self.mask(flat) {
                    *slot += c * Complex64::new(0.0, self.xi_odd[axis][flat]);
                }
            }
        }
        self.inverse(&mut acc);
        acc.into_iter().map(|c| c.re).collect()
    }

    /// `max_x max_{i,j} |d_i d_j phi|`.
    pub(crate) fn hessian_linf(&self, values: &[f64]) -> f64 {
        let spectrum = self.spectrum_of_real(values);
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let mut order = vec![0; dim];
                order[i] += 1;
                order[j] += 1;
                let d = self.derivative_from_spectrum(&spectrum, &order);
                worst = d.iter().fold(worst, |m, c| m.max(c.re.abs()));
            }
        }
        worst
    }

    /// Free propagator applied in place to physical values.
    pub(crate) fn propagate(&self, values: &mut [Complex64], eps: f64, t: f64) {
        if t == 0.0 {
            return;
        }
        self.forward(values);
        self.propagate_spectrum(values, eps, t);
        self.inverse(values);
    }

    /// Free Schrödinger propagator `exp(-i eps t |xi|^2 / 2)` applied in place to a spectrum.
    pub(crate) fn propagate_spectrum(&self, spectrum: &mut [Complex64], eps: f64, t: f64) {
        if t == 0.0 {
            return;
        }
        for (c, &k2) in spectrum.iter_mut().zip(&self.xi_sq) {
            *c *= Complex64::from_polar(1.0, -0.5 * eps * t * k2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wavenumbers_unit_box() {
        let g = Grid::line(8, 2.0 * PI, 0.0).unwrap();
        let expected = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.wavenumbers(0).iter().zip(expected) {
            assert!((k - e).abs() < 1e-14);
        }
        assert!((g.spacing()[0] - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn wavenumbers_scale_with_length() {
        let g = Grid::line(8, PI, 0.0).unwrap();
        let expected = [0.0, 2.0, 4.0, 6.0, -8.0, -6.0, -4.0, -2.0];
        for (k, e) in g.wavenumbers(0).iter().zip(expected) {
            assert!((k - e).abs() < 1e-13);
        }
    }

    #[test]
    fn tensor_grid_counts_points() {
        let g = Grid::new(&[8, 16], &[2.0 * PI, 2.0 * PI], &[0.0, 0.0]).unwrap();
        assert_eq!(g.total(), 128);
        assert_eq!(g.wavenumbers(1).len(), 16);
        // last axis is contiguous
        assert!((g.coords(1)[1] - 2.0 * PI / 16.0).abs() < 1e-15);
        assert_eq!(g.coords(0)[1], 0.0);
        assert!((g.coords(0)[16] - 2.0 * PI / 8.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::line(12, 1.0, 0.0).is_err());
        assert!(Grid::line(4, 1.0, 0.0).is_err());
        assert!(Grid::line(16, 0.0, 0.0).is_err());
        assert!(Grid::line(16, -1.0, 0.0).is_err());
        assert!(Grid::new(&[8, 8], &[1.0], &[0.0, 0.0]).is_err());
        assert!(Grid::new(&[8, 8, 8, 8], &[1.0; 4], &[0.0; 4]).is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let g = Grid::new(&[16, 8], &[3.0, 5.0], &[-1.0, 0.5]).unwrap();
        let data: Vec<Complex64> = (0..g.total())
            .map(|j| Complex64::new((j as f64 * 0.37).sin(), (j as f64 * 1.3).cos()))
            .collect();
        let mut buf = data.clone();
        g.forward(&mut buf);
        g.inverse(&mut buf);
        let err = data
            .iter()
            .zip(&buf)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn dealias_mask_drops_outer_third() {
        let g = Grid::with_options(&[12usize.next_power_of_two()], &[2.0 * PI], &[0.0], true)
            .unwrap();
        let mask = g.dealias_mask.as_ref().unwrap();
        // N = 16: modes |k| <= 5 kept
        let kept: Vec<i64> = g
            .wavenumbers(0)
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(k, _)| k.round() as i64)
            .collect();
        assert!(kept.iter().all(|k| k.abs() <= 5));
        assert_eq!(kept.len(), 11);
    }
}

use num_complex::Complex64;

use super::{ComplexField, Grid, RealField};

/// Norms used for error and regularity measurements.
///
/// `L2`, `L1` and `Linf` are quadrature formulas with weight `prod dx`;
/// the Sobolev-type norms are evaluated in Fourier space with the
/// normalization fixed so that Plancherel holds against the `L2` quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    L1,
    L2,
    Linf,
    /// `(sum (1 + |xi|^2)^s |u_hat|^2)^{1/2}`.
    Hs(f64),
    /// `|u|_{L2} + |eps grad u|_{L2}`.
    H1Eps(f64),
    /// `|u|_{L2} + ||x|^k u|_{L2} + ||eps grad|^k u|_{L2}`.
    SigmaEps { k: u32, eps: f64 },
}

fn plancherel_weight(grid: &Grid) -> f64 {
    // |u|^2_{L2} = dV sum |u_j|^2 = dV sum |c_k|^2 for the symmetric transform.
    grid.cell_volume()
}

fn weighted_spectral(grid: &Grid, spectrum: &[Complex64], weight: impl Fn(f64) -> f64) -> f64 {
    let sum: f64 = spectrum
        .iter()
        .zip(grid.xi_sq())
        .map(|(c, &k2)| weight(k2) * c.norm_sqr())
        .sum();
    (plancherel_weight(grid) * sum).sqrt()
}

fn l2_from_moduli(grid: &Grid, moduli_sq: impl Iterator<Item = f64>) -> f64 {
    (grid.cell_volume() * moduli_sq.sum::<f64>()).sqrt()
}

fn norm_values(grid: &Grid, values: &[Complex64], kind: NormKind) -> f64 {
    match kind {
        NormKind::L1 => grid.cell_volume() * values.iter().map(|v| v.norm()).sum::<f64>(),
        NormKind::L2 => l2_from_moduli(grid, values.iter().map(|v| v.norm_sqr())),
        NormKind::Linf => values.iter().fold(0.0, |m, v| m.max(v.norm())),
        NormKind::Hs(s) => {
            let spectrum = grid.spectrum_of(values);
            weighted_spectral(grid, &spectrum, |k2| (1.0 + k2).powf(s))
        }
        NormKind::H1Eps(eps) => {
            let l2 = l2_from_moduli(grid, values.iter().map(|v| v.norm_sqr()));
            let spectrum = grid.spectrum_of(values);
            l2 + weighted_spectral(grid, &spectrum, |k2| eps * eps * k2)
        }
        NormKind::SigmaEps { k, eps } => {
            let l2 = l2_from_moduli(grid, values.iter().map(|v| v.norm_sqr()));
            let moment = l2_from_moduli(
                grid,
                values.iter().enumerate().map(|(flat, v)| {
                    let r2: f64 = (0..grid.dim()).map(|a| grid.coords(a)[flat].powi(2)).sum();
                    r2.powi(k as i32) * v.norm_sqr()
                }),
            );
            let spectrum = grid.spectrum_of(values);
            let smooth = weighted_spectral(grid, &spectrum, |k2| (eps * eps * k2).powi(k as i32));
            l2 + moment + smooth
        }
    }
}

pub(super) fn norm_complex(field: &ComplexField, kind: NormKind) -> f64 {
    norm_values(field.grid(), field.values(), kind)
}

pub(super) fn norm_real(field: &RealField, kind: NormKind) -> f64 {
    match kind {
        NormKind::L1 => field.grid().cell_volume() * field.values().iter().map(|v| v.abs()).sum::<f64>(),
        NormKind::L2 => l2_from_moduli(field.grid(), field.values().iter().map(|v| v * v)),
        NormKind::Linf => field.linf(),
        _ => norm_complex(&field.to_complex(), kind),
    }
}

/// Norm of a vector field: the Euclidean combination of component norms
/// for Hilbert norms, pointwise magnitude for `L1`/`Linf`.
pub fn vector_norm(components: &[RealField], kind: NormKind) -> f64 {
    let Some(first) = components.first() else {
        return 0.0;
    };
    let grid = first.grid();
    match kind {
        NormKind::L1 | NormKind::Linf => {
            let magnitude: Vec<f64> = (0..grid.total())
                .map(|j| components.iter().map(|c| c.values()[j].powi(2)).sum::<f64>().sqrt())
                .collect();
            RealField::from_vec(grid.clone(), magnitude).norm(kind)
        }
        _ => components
            .iter()
            .map(|c| c.norm(kind).powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_l2() {
        let g = Grid::line(16, 2.0 * PI, 0.0).unwrap();
        let one = RealField::constant(g, 1.0);
        assert!((one.norm(NormKind::L2) - (2.0 * PI).sqrt()).abs() < 1e-14);
        assert!((one.norm(NormKind::L1) - 2.0 * PI).abs() < 1e-13);
        assert_eq!(one.norm(NormKind::Linf), 1.0);
    }

    #[test]
    fn single_mode_sobolev() {
        let g = Grid::line(32, 2.0 * PI, 0.0).unwrap();
        let u = ComplexField::from_fn(g, |x| Complex64::from_polar(1.0, 3.0 * x[0]));
        let expected = (2.0 * PI).sqrt() * 10.0;
        assert!((u.norm(NormKind::Hs(2.0)) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn gaussian_l2() {
        let g = Grid::line(512, 32.0, -16.0).unwrap();
        let u = RealField::from_fn(g, |x| (-0.5 * x[0] * x[0]).exp());
        assert!((u.norm(NormKind::L2) - PI.powf(0.25)).abs() < 1e-10);
    }

    #[test]
    fn h0_equals_l2_and_plancherel() {
        let g = Grid::new(&[16, 32], &[3.0, 7.0], &[-1.0, -3.0]).unwrap();
        let u = ComplexField::from_fn(g, |x| {
            Complex64::new((x[0] * 2.0).sin() + x[1], (x[0] * x[1]).cos())
        });
        let l2 = u.norm(NormKind::L2);
        let h0 = u.norm(NormKind::Hs(0.0));
        assert!((l2 - h0).abs() <= 1e-12 * l2);
    }

    #[test]
    fn h1eps_and_sigma_of_mode() {
        let g = Grid::line(32, 2.0 * PI, -PI).unwrap();
        let u = ComplexField::from_fn(g.clone(), |x| Complex64::from_polar(1.0, 2.0 * x[0]));
        let l2 = (2.0 * PI).sqrt();
        assert!((u.norm(NormKind::H1Eps(0.5)) - 2.0 * l2).abs() < 1e-12);
        // |x| moment of a unimodular function on [-pi, pi): sqrt(int x^2) = sqrt(2 pi^3 / 3)
        let sigma = u.norm(NormKind::SigmaEps { k: 1, eps: 0.5 });
        let moment: f64 = g.coords(0).iter().map(|x| x * x).sum::<f64>() * g.cell_volume();
        assert!((sigma - (l2 + moment.sqrt() + l2)).abs() < 1e-12);
    }
}

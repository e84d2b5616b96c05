//! Lawson fourth-order Runge-Kutta for the phase/amplitude system.
//!
//! The stiff part `i (eps/2) Lap a` is applied exactly through the free
//! propagator; the transport terms and the nonlinear coupling are treated
//! explicitly. The phase has no stiff part, so its stages are plain RK4.

use num_complex::Complex64;

use crate::grid::Grid;
use crate::nonlinearity::NonlinearitySpec;

#[derive(Clone, Debug)]
pub(crate) struct Pair {
    pub phi: Vec<f64>,
    pub a: Vec<Complex64>,
}

#[derive(Clone, Copy)]
pub(crate) enum Coupling<'a> {
    None,
    Nonlinear(&'a NonlinearitySpec),
}

/// `dphi = -|grad phi|^2 / 2`, `da = -grad phi . grad a - a Lap phi / 2`,
/// plus the nonlinear coupling.
pub(crate) fn rhs(grid: &Grid, eps: f64, y: &Pair, coupling: Coupling) -> Pair {
    let (grad_phi, lap_phi) = grid.gradient_laplacian_real(&y.phi);
    let grad_a = grid.gradient_complex(&y.a);
    let n = y.phi.len();
    let mut dphi = vec![0.0; n];
    let mut da = vec![Complex64::default(); n];
    for j in 0..n {
        let mut sq = 0.0;
        let mut adv = Complex64::default();
        for axis in 0..grid.dim() {
            let g = grad_phi[axis][j];
            sq += g * g;
            adv += grad_a[axis][j] * g;
        }
        dphi[j] = -0.5 * sq;
        da[j] = -adv - 0.5 * y.a[j] * lap_phi[j];
    }
    if let Coupling::Nonlinear(spec) = coupling {
        let rho: Vec<f64> = y.a.iter().map(|c| c.norm_sqr()).collect();
        let f = spec.eval(grid, &rho);
        if spec.is_weak() {
            let kappa = spec.coupling(eps);
            for ((d, a), fv) in da.iter_mut().zip(&y.a).zip(&f) {
                *d += Complex64::new(0.0, -kappa * fv) * a;
            }
        } else {
            dphi.iter_mut().zip(&f).for_each(|(d, fv)| *d -= fv);
        }
    }
    Pair { phi: dphi, a: da }
}

fn axpy_real(y: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn axpy_complex(y: &[Complex64], h: f64, k: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// One Lawson RK4 step of size `h`.
pub(crate) fn step(grid: &Grid, eps: f64, y: &Pair, h: f64, coupling: Coupling) -> Pair {
    let half = 0.5 * h;
    let k1 = rhs(grid, eps, y, coupling);
    let mut a_half = y.a.clone();
    grid.propagate(&mut a_half, eps, half);
    let mut k1_half = k1.a.clone();
    grid.propagate(&mut k1_half, eps, half);

    let y2 = Pair {
        phi: axpy_real(&y.phi, half, &k1.phi),
        a: axpy_complex(&a_half, half, &k1_half),
    };
    let k2 = rhs(grid, eps, &y2, coupling);
    let y3 = Pair {
        phi: axpy_real(&y.phi, half, &k2.phi),
        a: axpy_complex(&a_half, half, &k2.a),
    };
    let k3 = rhs(grid, eps, &y3, coupling);
    let mut a4 = axpy_complex(&a_half, h, &k3.a);
    grid.propagate(&mut a4, eps, half);
    let y4 = Pair {
        phi: axpy_real(&y.phi, h, &k3.phi),
        a: a4,
    };
    let k4 = rhs(grid, eps, &y4, coupling);

    let sixth = h / 6.0;
    let mut a: Vec<Complex64> = (0..y.a.len())
        .map(|j| a_half[j] + sixth * k1_half[j] + 2.0 * sixth * (k2.a[j] + k3.a[j]))
        .collect();
    grid.propagate(&mut a, eps, half);
    a.iter_mut().zip(&k4.a).for_each(|(v, k)| *v += sixth * k);
    let phi = (0..y.phi.len())
        .map(|j| y.phi[j] + sixth * (k1.phi[j] + 2.0 * (k2.phi[j] + k3.phi[j]) + k4.phi[j]))
        .collect();
    Pair { phi, a }
}

/// `|phi - phi'|_inf + |a - a'|_{L2}`.
pub(crate) fn distance(grid: &Grid, x: &Pair, y: &Pair) -> f64 {
    let dphi = x
        .phi
        .iter()
        .zip(&y.phi)
        .fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    let da: f64 = x.a.iter().zip(&y.a).map(|(p, q)| (p - q).norm_sqr()).sum();
    dphi + (grid.cell_volume() * da).sqrt()
}

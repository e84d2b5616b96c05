//! Lie bracket `[A, B] v = A'(v) B(v) - B'(v) A(v)` of the transport field
//! `A` and the nonlinear field `B`.

use num_complex::Complex64;

use super::WKBState;
use crate::error::Result;
use crate::grid::{ComplexField, RealField};
use crate::nonlinearity::NonlinearitySpec;

#[derive(Clone, Debug)]
pub struct CommutatorOutput {
    pub phi_c: RealField,
    pub amp_c: ComplexField,
}

/// With `rho = |a|^2` and `D = -div(rho grad phi) - eps div Im(conj(a) grad a)`:
///
/// ```text
/// alpha = 0:  phi_c = grad phi . grad f(rho) + f1(D)
///             a_c   = grad a . grad f(rho) + a Lap f(rho) / 2
/// alpha >= 1: phi_c = 0
///             a_c   = i k a (grad phi . grad f(rho) + f'(rho)[D])
///                     + (eps k / 2)(a Lap f(rho) + 2 grad f(rho) . grad a)
/// ```
///
/// where `f1` is the convolution part, `f'(rho)[D] = K * D + f2'(rho) D` and
/// `k = eps^(alpha - 1)`.
pub fn commutator_ab(state: &WKBState, spec: &NonlinearitySpec) -> Result<CommutatorOutput> {
    let grid = state.grid();
    spec.check_dimension(grid)?;
    let n = grid.total();
    let dim = grid.dim();
    let a = state.amp().values();
    let rho: Vec<f64> = a.iter().map(|c| c.norm_sqr()).collect();
    let f = spec.eval(grid, &rho);
    let (grad_f, lap_f) = grid.gradient_laplacian_real(&f);
    let grad_phi = grid.gradient_real(state.phi().values());
    let grad_a = grid.gradient_complex(a);

    let flux: Vec<Vec<f64>> = (0..dim)
        .map(|axis| {
            (0..n)
                .map(|j| rho[j] * grad_phi[axis][j] + state.eps() * (a[j].conj() * grad_a[axis][j]).im)
                .collect()
        })
        .collect();
    let d: Vec<f64> = grid.divergence_real(&flux).into_iter().map(|v| -v).collect();
    let dot = |g: &[Vec<f64>], j: usize| (0..dim).map(|axis| g[axis][j] * grad_f[axis][j]).sum::<f64>();
    let dot_a = |j: usize| {
        (0..dim)
            .map(|axis| grad_a[axis][j] * grad_f[axis][j])
            .sum::<Complex64>()
    };

    let (phi_c, amp_c) = if spec.is_weak() {
        let kappa = spec.coupling(state.eps());
        let kd = spec.eval_kernel(grid, &d);
        let local = spec.eval_local_derivative(&rho);
        let phi_c = vec![0.0; n];
        let amp_c = (0..n)
            .map(|j| {
                let real = dot(&grad_phi, j) + kd[j] + local[j] * d[j];
                Complex64::new(0.0, kappa * real) * a[j]
                    + 0.5 * state.eps() * kappa * (a[j] * lap_f[j] + 2.0 * dot_a(j))
            })
            .collect();
        (phi_c, amp_c)
    } else {
        let kd = spec.eval_kernel(grid, &d);
        let phi_c = (0..n).map(|j| dot(&grad_phi, j) + kd[j]).collect();
        let amp_c = (0..n).map(|j| dot_a(j) + 0.5 * a[j] * lap_f[j]).collect();
        (phi_c, amp_c)
    };
    Ok(CommutatorOutput {
        phi_c: RealField::from_vec(grid.clone(), phi_c),
        amp_c: ComplexField::from_vec(grid.clone(), amp_c),
    })
}

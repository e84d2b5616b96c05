use std::f64::consts::PI;

use wkbsplit::grid::{Grid, RealField};
use wkbsplit::nonlinearity::{apply_f, KernelSpec, NonlinearitySpec};

fn gaussian(r: f64, sigma: f64) -> f64 {
    (-r * r / (2.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).powf(1.5)
}

fn pair(r: f64) -> f64 {
    gaussian(r, 0.8) - gaussian(r, 1.2)
}

// Radial field of Lap f = lambda rho: f'(r) = (lambda / r^2) int_0^r s^2 rho(s) ds,
// integrated with composite Simpson.
fn radial_derivative(r: f64, lambda: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let n = 2000;
    let h = r / n as f64;
    let g = |s: f64| s * s * pair(s);
    let mut acc = g(0.0) + g(r);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
    }
    lambda * acc * h / 3.0 / (r * r)
}

#[test]
fn neutral_pair_field_matches_radial_quadrature() {
    let lambda = -1.0;
    let grid = Grid::new(&[64, 64, 64], &[12.0; 3], &[-6.0; 3]).unwrap();
    let rho = RealField::from_fn(grid.clone(), |x| pair(x.iter().map(|v| v * v).sum::<f64>().sqrt()));
    let spec = NonlinearitySpec::kernel_only(KernelSpec::Poisson { lambda });
    let f = apply_f(&spec, &rho).unwrap();
    let grad = f.gradient();

    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for flat in (0..grid.total()).step_by(97) {
        let x = grid.point(flat);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 5.0 {
            continue;
        }
        let dr = radial_derivative(r, lambda);
        for axis in 0..3 {
            let expected = if r > 0.0 { dr * x[axis] / r } else { 0.0 };
            worst = worst.max((grad[axis].values()[flat] - expected).abs());
            scale = scale.max(expected.abs());
        }
    }
    assert!(scale > 1e-3);
    assert!(worst <= 1e-5 * scale.max(1.0), "max deviation {worst:e} (field scale {scale:e})");
}

#[test]
fn poisson_rejects_low_dimensions() {
    let grid = Grid::line(64, 8.0, -4.0).unwrap();
    let rho = RealField::from_fn(grid, |x| (-x[0] * x[0]).exp());
    let spec = NonlinearitySpec::kernel_only(KernelSpec::Poisson { lambda: 1.0 });
    assert!(apply_f(&spec, &rho).is_err());
}

use log::debug;

use super::WKBState;
use crate::grid::{vector_norm, NormKind};

/// Tracks `|grad phi|_{H^{s+1}}` and `|a|_{H^s}` relative to their initial
/// values, and the one-step growth of `|grad phi|_{H^s}` against
/// `exp(c mu dt)` with `mu = |grad phi|_inf + |hess phi|_inf`.
#[derive(Clone, Debug)]
pub struct GrowthMonitor {
    s: f64,
    c: f64,
    grad0: f64,
    amp0: f64,
    last_grad_hs: f64,
    last_mu: f64,
    samples: Vec<GrowthSample>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthSample {
    pub grad_ratio: f64,
    pub amp_ratio: f64,
    pub step_factor: f64,
    pub step_bound: f64,
}

impl GrowthSample {
    pub fn geometric(&self) -> bool {
        self.step_factor <= self.step_bound
    }
}

fn ratio(value: f64, initial: f64) -> f64 {
    if initial > 0.0 {
        value / initial
    } else if value == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

fn grad_norms(state: &WKBState, s: f64) -> (f64, f64, f64) {
    let grad = state.phi().gradient();
    let mu = vector_norm(&grad, NormKind::Linf) + state.phi().hessian_linf();
    (
        vector_norm(&grad, NormKind::Hs(s + 1.0)),
        vector_norm(&grad, NormKind::Hs(s)),
        mu,
    )
}

impl GrowthMonitor {
    pub fn new(initial: &WKBState, s: f64, c: f64) -> Self {
        let (grad0, grad_hs, mu) = grad_norms(initial, s);
        Self {
            s,
            c,
            grad0,
            amp0: initial.amp().norm(NormKind::Hs(s)),
            last_grad_hs: grad_hs,
            last_mu: mu,
            samples: Vec::new(),
        }
    }

    pub fn observe(&mut self, state: &WKBState, dt: f64) -> GrowthSample {
        let (grad, grad_hs, mu) = grad_norms(state, self.s);
        let sample = GrowthSample {
            grad_ratio: ratio(grad, self.grad0),
            amp_ratio: ratio(state.amp().norm(NormKind::Hs(self.s)), self.amp0),
            step_factor: ratio(grad_hs, self.last_grad_hs),
            step_bound: (self.c * self.last_mu.max(mu) * dt).exp(),
        };
        if !sample.geometric() {
            debug!(
                "|grad phi|_Hs grew by {:.4} in one step, above exp(c mu dt) = {:.4}",
                sample.step_factor, sample.step_bound
            );
        }
        self.last_grad_hs = grad_hs;
        self.last_mu = mu;
        self.samples.push(sample);
        sample
    }

    pub fn samples(&self) -> &[GrowthSample] {
        &self.samples
    }

    /// Largest of the two norm ratios seen so far (1 before any step).
    pub fn max_ratio(&self) -> f64 {
        self.samples
            .iter()
            .fold(1.0f64, |m, s| m.max(s.grad_ratio).max(s.amp_ratio))
    }

    pub fn bounded_by(&self, factor: f64) -> bool {
        self.max_ratio() <= factor
    }

    /// Number of steps whose growth exceeded the geometric bound.
    pub fn geometric_violations(&self) -> usize {
        self.samples.iter().filter(|s| !s.geometric()).count()
    }
}

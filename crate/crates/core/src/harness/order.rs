use crate::error::{Error, Result};

/// Least-squares fit of `log error = slope * log dt + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl OrderFit {
    /// `exp(intercept)`, the error constant `C` in `error ~ C dt^slope`.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

pub fn estimate_order(pairs: &[(f64, f64)]) -> Result<OrderFit> {
    if pairs.len() < 3 {
        return Err(Error::Degenerate(format!("need at least 3 points, got {}", pairs.len())));
    }
    if let Some(&(dt, e)) = pairs.iter().find(|(dt, e)| !(*dt > 0.0 && *e > 0.0 && dt.is_finite() && e.is_finite())) {
        return Err(Error::Degenerate(format!("non-positive point ({dt}, {e})")));
    }
    let n = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-300 {
        return Err(Error::Degenerate("all step sizes are equal".into()));
    }
    if syy <= 1e-300 {
        return Err(Error::Degenerate("all errors are equal".into()));
    }
    let slope = sxy / sxx;
    Ok(OrderFit {
        slope,
        intercept: my - slope * mx,
        r2: sxy * sxy / (sxx * syy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        for p in [1.0, 2.0] {
            let pairs: Vec<(f64, f64)> = (0..5).map(|k| {
                let h = 0.1 / 2f64.powi(k);
                (h, 3.0 * h.powf(p))
            }).collect();
            let fit = estimate_order(&pairs).unwrap();
            assert!((fit.slope - p).abs() < 1e-12);
            assert!((fit.constant() - 3.0).abs() < 1e-10);
            assert!((fit.r2 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(estimate_order(&[(0.1, 1.0), (0.05, 0.5)]).is_err());
        assert!(estimate_order(&[(0.1, 1.0), (0.05, 0.0), (0.025, 0.2)]).is_err());
        assert!(estimate_order(&[(0.1, 1.0), (0.05, 1.0), (0.025, 1.0)]).is_err());
        assert!(estimate_order(&[(0.1, 1.0), (0.1, 0.5), (0.1, 0.2)]).is_err());
    }

    proptest! {
        #[test]
        fn recovers_any_power(p in 0.2f64..4.0, c in 1e-6f64..1e3, h0 in 1e-3f64..1.0) {
            let pairs: Vec<(f64, f64)> = (0..6).map(|k| {
                let h = h0 / 1.7f64.powi(k);
                (h, c * h.powf(p))
            }).collect();
            let fit = estimate_order(&pairs).unwrap();
            prop_assert!((fit.slope - p).abs() < 1e-9);
        }
    }
}

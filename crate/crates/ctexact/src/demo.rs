//! Gaussian power comparison: `y ~ N((mu1, 0, …, 0), I_k)` under the
//! alternative, the likelihood-ratio region `‖y‖² ≥ χ²_{k,1−α}` against the
//! mean most powerful region `y₁ ≥ z_{1−α}`.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::parallel;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianDemo {
    pub k: usize,
    pub mu1: f64,
    pub alpha: f64,
    pub chi2_critical: f64,
    pub z_critical: f64,
    pub lrt_power: f64,
    pub lrt_power_se: f64,
    pub bayes_power: f64,
    pub bayes_power_se: f64,
    /// `Φ(mu1 − z_{1−α})`.
    pub bayes_power_closed_form: f64,
    pub n_mc: u64,
    pub seed: u64,
}

/// `(χ²_{k,1−α}, z_{1−α})`. Needs `0 < alpha < 1` and `k ≥ 1`.
pub fn critical_values(k: usize, alpha: f64) -> (f64, f64) {
    let chi2 = ChiSquared::new(k as f64).expect("k is at least 1");
    (chi2.inverse_cdf(1.0 - alpha), standard_normal().inverse_cdf(1.0 - alpha))
}

fn standard_normal() -> Normal {
    Normal::standard()
}

pub fn closed_form_bayes_power(mu1: f64, alpha: f64) -> f64 {
    standard_normal().cdf(mu1 - standard_normal().inverse_cdf(1.0 - alpha))
}

pub fn gaussian_demo(k: usize, mu1: f64, alpha: f64, n_mc: u64, seed: u64) -> ctexact_core::Result<GaussianDemo> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ctexact_core::Error::InvalidArgument("alpha must lie in (0, 1)"));
    }
    if k == 0 {
        return Err(ctexact_core::Error::InvalidArgument("dimension and draw count must be positive"));
    }
    let (chi2_critical, z_critical) = critical_values(k, alpha);
    let (lrt, bayes) = parallel::gaussian_power(k, mu1, chi2_critical, z_critical, n_mc, seed)?;
    let se = |p: f64| (p * (1.0 - p) / n_mc as f64).sqrt();
    Ok(GaussianDemo {
        k,
        mu1,
        alpha,
        chi2_critical,
        z_critical,
        lrt_power: lrt,
        lrt_power_se: se(lrt),
        bayes_power: bayes,
        bayes_power_se: se(bayes),
        bayes_power_closed_form: closed_form_bayes_power(mu1, alpha),
        n_mc,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_values_match_tables() {
        let (chi2, z) = critical_values(100, 0.05);
        assert!((chi2 - 124.342).abs() < 1e-3, "{chi2}");
        assert!((z - 1.644854).abs() < 1e-6);
        let (chi2, _) = critical_values(1, 0.05);
        assert!((chi2 - 1.959964f64.powi(2)).abs() < 1e-5);
    }

    #[test]
    fn null_powers_are_near_alpha() {
        let d = gaussian_demo(10, 0.0, 0.05, 200_000, 11).unwrap();
        for p in [d.lrt_power, d.bayes_power] {
            assert!((p - 0.05).abs() < 4.0 * (0.05f64 * 0.95 / 200_000.0).sqrt(), "{p}");
        }
        assert!((d.bayes_power_closed_form - 0.05).abs() < 1e-8);
    }

    #[test]
    fn bayes_power_matches_closed_form() {
        let d = gaussian_demo(3, 1.0, 0.1, 200_000, 12).unwrap();
        assert!((d.bayes_power - d.bayes_power_closed_form).abs() < 4.0 * d.bayes_power_se);
        assert!(gaussian_demo(3, 1.0, 1.0, 10, 1).is_err());
    }
}

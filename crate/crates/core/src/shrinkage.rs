//! Generalized soft thresholding.
//!
//! `soft_threshold(x̃, τ)` is the global minimizer of q(x) = ½(x − x̃)² + τ|x|
//! for any real τ. For τ ≥ 0 this is the usual shrinkage. For τ < 0 the
//! problem is nonconvex and the minimizer inflates the magnitude instead:
//! x̃ − τ for x̃ ≥ 0 and x̃ + τ for x̃ < 0. At x̃ = 0 both ±|τ| are optimal and
//! the nonnegative branch is returned.

use crate::error::{check_len, Error, Result};

pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    if tau >= 0.0 {
        if x.abs() <= tau {
            0.0
        } else {
            x.signum() * (x.abs() - tau)
        }
    } else if x >= 0.0 {
        x - tau
    } else {
        x + tau
    }
}

/// ½(x − x̃)² + τ|x|
pub fn shrinkage_objective(x: f64, x_tilde: f64, tau: f64) -> f64 {
    0.5 * (x - x_tilde) * (x - x_tilde) + tau * x.abs()
}

/// Coordinatewise minimizer of (κ/2)‖x − x̃‖² + λ Σ w_i |x_i|, i.e.
/// soft_threshold(x̃_i, (λ/κ) w_i).
pub fn reweighted_prox_step(x_tilde: &[f64], weights: &[f64], lambda: f64, kappa: f64) -> Result<Vec<f64>> {
    check_len("reweighted prox step weights", x_tilde.len(), weights.len())?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    let ratio = lambda / kappa;
    Ok(x_tilde.iter().zip(weights).map(|(&x, &w)| soft_threshold(x, ratio * w)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(soft_threshold(0.3, 0.5), 0.0);
        assert_eq!(soft_threshold(1.0, 0.5), 0.5);
        assert!((soft_threshold(0.3, -0.5) - 0.8).abs() < 1e-15);
        assert!((soft_threshold(-0.3, -0.5) + 0.8).abs() < 1e-15);
        assert_eq!(soft_threshold(0.0, -0.5), 0.5);
        assert_eq!(soft_threshold(-2.0, 0.5), -1.5);
    }

    #[test]
    fn prox_step_identities() {
        let x = [0.3, -1.2, 4.0];
        assert_eq!(reweighted_prox_step(&x, &[0.0; 3], 2.0, 1.0).unwrap(), x.to_vec());
        assert_eq!(reweighted_prox_step(&x, &[1.0, -3.0, 2.0], 0.0, 2.0).unwrap(), x.to_vec());
        assert!(reweighted_prox_step(&x, &[1.0], 1.0, 1.0).is_err());
        assert!(reweighted_prox_step(&x, &[1.0; 3], 1.0, 0.0).is_err());
    }

    #[test]
    fn jump_at_zero_for_negative_threshold() {
        let tau = -0.7;
        let left = soft_threshold(-1e-12, tau);
        let right = soft_threshold(1e-12, tau);
        assert!(((right - left) - 2.0 * tau.abs()).abs() < 1e-9);
    }
}

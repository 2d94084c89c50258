use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regularizers::RegularizerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Acceleration {
    None,
    Fista,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initializer {
    /// Solution of the L1 problem under the same schedule.
    L1,
    Zero,
    /// Caller supplies x⁰ through [`solve_from`](super::solve_from).
    Provided,
}

/// Configuration of the proximal / reweighted-ℓ1 solver.
///
/// `None` in `lambda0`, `lambda_min` and `kappa` selects the automatic
/// default: λ0 = 0.1‖2Aᵀy‖∞, λ_min = 1e-8·λ0, κ from power iteration.
/// `continuation_ratio = None` runs a single fixed-λ phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub regularizer: RegularizerSpec,
    pub lambda0: Option<f64>,
    pub continuation_ratio: Option<f64>,
    pub lambda_min: Option<f64>,
    pub kappa: Option<f64>,
    /// Outer iterations allowed per λ phase.
    pub outer_max_iters: usize,
    /// Outer iterations allowed over the whole continuation path.
    pub total_max_iters: usize,
    pub inner_max_iters: usize,
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub acceleration: Acceleration,
    pub initializer: Initializer,
    pub kappa_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            regularizer: RegularizerSpec::l1(),
            lambda0: None,
            continuation_ratio: Some(0.9),
            lambda_min: None,
            kappa: None,
            outer_max_iters: 500,
            total_max_iters: 20_000,
            inner_max_iters: 20,
            outer_tol: 1e-6,
            inner_tol: 1e-4,
            acceleration: Acceleration::Fista,
            initializer: Initializer::L1,
            kappa_tol: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn new(regularizer: RegularizerSpec) -> Self {
        let initializer = if regularizer.penalty().is_entropy()
            || matches!(regularizer.penalty(), crate::regularizers::Penalty::Lpp { .. })
        {
            Initializer::L1
        } else {
            Initializer::Zero
        };
        Self { regularizer, initializer, ..Self::default() }
    }

    /// Single phase at a fixed λ.
    pub fn fixed_lambda(mut self, lambda: f64) -> Self {
        self.lambda0 = Some(lambda);
        self.continuation_ratio = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if let Some(l) = self.lambda0 {
            if !(l >= 0.0 && l.is_finite()) {
                return bad(format!("lambda0 must be nonnegative, got {l}"));
            }
        }
        if let Some(r) = self.continuation_ratio {
            if !(0.9..1.0).contains(&r) {
                return bad(format!("continuation ratio must lie in [0.9, 1), got {r}"));
            }
        }
        if let Some(l) = self.lambda_min {
            if !(l > 0.0) {
                return bad(format!("lambda_min must be positive, got {l}"));
            }
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return bad(format!("kappa must be positive, got {k}"));
            }
        }
        for (name, v) in
            [("outer_tol", self.outer_tol), ("inner_tol", self.inner_tol), ("kappa_tol", self.kappa_tol)]
        {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.outer_max_iters == 0 || self.inner_max_iters == 0 || self.total_max_iters == 0 {
            return bad("iteration caps must be positive".into());
        }
        Ok(())
    }
}

//! Sparsity penalties g(x) and their magnitude gradients.
//!
//! The entropy penalties act on the distribution q_i = |x_i|^p / ‖x‖_p^p:
//!
//! - Shannon entropy function  h_p(x)   = −Σ q_i log q_i
//! - Rényi entropy function    h_p,α(x) = log(Σ q_i^α) / (1 − α)
//!
//! Both are scale invariant, lie in [0, log N], vanish exactly on 1-sparse
//! vectors and are undefined at the origin. Their gradients with respect to
//! |x_i| change sign at a threshold ν: entries above ν are pushed up and
//! entries below are pushed down, which concentrates energy in a few entries.
//!
//! L1 and ‖x‖_p^p (0 < p < 1) are provided as baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Penalty {
    L1,
    /// ‖x‖_p^p with 0 < p < 1.
    Lpp {
        p: f64,
    },
    /// Shannon entropy function.
    Sef {
        p: f64,
    },
    /// Rényi entropy function.
    Ref {
        p: f64,
        alpha: f64,
    },
}

impl Penalty {
    pub fn name(&self) -> &'static str {
        match self {
            Self::L1 => "L1",
            Self::Lpp { .. } => "Lp",
            Self::Sef { .. } => "SEF",
            Self::Ref { .. } => "REF",
        }
    }

    pub fn is_entropy(&self) -> bool {
        matches!(self, Self::Sef { .. } | Self::Ref { .. })
    }
}

/// A validated penalty plus the ε used to keep gradients finite at zero
/// entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct RegularizerSpec {
    penalty: Penalty,
    epsilon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    #[serde(flatten)]
    penalty: Penalty,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl TryFrom<RawSpec> for RegularizerSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        Self::with_epsilon(raw.penalty, raw.epsilon)
    }
}

impl From<RegularizerSpec> for RawSpec {
    fn from(spec: RegularizerSpec) -> Self {
        RawSpec { penalty: spec.penalty, epsilon: spec.epsilon }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

impl RegularizerSpec {
    pub fn new(penalty: Penalty) -> Result<Self> {
        Self::with_epsilon(penalty, DEFAULT_EPSILON)
    }

    pub fn with_epsilon(penalty: Penalty, epsilon: f64) -> Result<Self> {
        positive("epsilon", epsilon)?;
        match penalty {
            Penalty::L1 => {}
            Penalty::Lpp { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidParameter(format!("Lp penalty requires 0 < p < 1, got {p}")));
                }
            }
            Penalty::Sef { p } => positive("p", p)?,
            Penalty::Ref { p, alpha } => {
                positive("p", p)?;
                positive("alpha", alpha)?;
                if alpha == 1.0 {
                    return Err(Error::InvalidParameter("Renyi order alpha must differ from 1".into()));
                }
            }
        }
        Ok(Self { penalty, epsilon })
    }

    pub fn l1() -> Self {
        Self { penalty: Penalty::L1, epsilon: DEFAULT_EPSILON }
    }

    pub fn lpp(p: f64) -> Result<Self> {
        Self::new(Penalty::Lpp { p })
    }

    pub fn sef(p: f64) -> Result<Self> {
        Self::new(Penalty::Sef { p })
    }

    pub fn renyi(p: f64, alpha: f64) -> Result<Self> {
        Self::new(Penalty::Ref { p, alpha })
    }

    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// g(x). Entropy penalties fail on the zero vector.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        match self.penalty {
            Penalty::L1 | Penalty::Lpp { .. } => Ok(baseline_value_and_weight(x, self)?.0),
            Penalty::Sef { p } => sef_value(x, p),
            Penalty::Ref { p, alpha } => ref_value(x, p, alpha),
        }
    }

    /// Per-coordinate weights of the linearized penalty around x: the
    /// magnitude gradient for entropy penalties, the reweighting for Lp, ones
    /// for L1.
    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.penalty {
            Penalty::L1 | Penalty::Lpp { .. } => Ok(baseline_value_and_weight(x, self)?.1),
            Penalty::Sef { .. } => sef_grad_mag(x, self),
            Penalty::Ref { .. } => ref_grad_mag(x, self),
        }
    }
}

/// q_i = |x_i|^p / ‖x‖_p^p.
pub fn prob_map(x: &[f64], p: f64) -> Result<Vec<f64>> {
    positive("p", p)?;
    let m = max_abs(x)?;
    // Normalizing by the largest magnitude keeps |x_i|^p in range.
    let powered: Vec<f64> = x.iter().map(|v| (v.abs() / m).powf(p)).collect();
    let total: f64 = powered.iter().sum();
    Ok(powered.into_iter().map(|a| a / total).collect())
}

/// Signed simplex image ẍ_i = sign(x_i) |x_i|^p / ‖x‖_p^p; Σ|ẍ_i| = 1.
pub fn mapped_simplex(x: &[f64], p: f64) -> Result<Vec<f64>> {
    let q = prob_map(x, p)?;
    Ok(q.into_iter().zip(x).map(|(qi, &xi)| if xi < 0.0 { -qi } else { qi }).collect())
}

/// x / ‖x‖_p.
pub fn p_normalized(x: &[f64], p: f64) -> Result<Vec<f64>> {
    positive("p", p)?;
    let m = max_abs(x)?;
    let norm = m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p);
    Ok(x.iter().map(|v| v / norm).collect())
}

fn max_abs(x: &[f64]) -> Result<f64> {
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        Err(Error::ZeroVector)
    } else {
        Ok(m)
    }
}

/// Shannon entropy function h_p(x), with 0·log 0 = 0.
pub fn sef_value(x: &[f64], p: f64) -> Result<f64> {
    let q = prob_map(x, p)?;
    Ok(-q.iter().filter(|&&qi| qi > 0.0).map(|&qi| qi * qi.ln()).sum::<f64>())
}

/// Rényi entropy function h_{p,α}(x).
pub fn ref_value(x: &[f64], p: f64, alpha: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    if alpha == 1.0 {
        return Err(Error::InvalidParameter("Renyi order alpha must differ from 1".into()));
    }
    let q = prob_map(x, p)?;
    let s: f64 = q.iter().filter(|&&qi| qi > 0.0).map(|qi| qi.powf(alpha)).sum();
    Ok(s.ln() / (1.0 - alpha))
}

/// Magnitudes with exact zeros replaced by ε, rescaled by their maximum.
/// Returns the rescaled magnitudes and the scale.
fn shifted_magnitudes(x: &[f64], epsilon: f64) -> Result<(Vec<f64>, f64)> {
    let m = max_abs(x)?;
    let u = x.iter().map(|v| if *v == 0.0 { epsilon / m } else { v.abs() / m }).collect();
    Ok((u, m))
}

fn require(spec: &RegularizerSpec, want: &str) -> Result<()> {
    Err(Error::InvalidParameter(format!("expected a {want} penalty, got {}", spec.penalty.name())))
}

/// ∂h_p/∂|x_i| = p|x_i|^{p−1} (Σ_l q_l log|x_l|^p − log|x_i|^p) / ‖x‖_p^p.
pub fn sef_grad_mag(x: &[f64], spec: &RegularizerSpec) -> Result<Vec<f64>> {
    let Penalty::Sef { p } = spec.penalty else {
        return require(spec, "SEF").map(|_| Vec::new());
    };
    let (u, m) = shifted_magnitudes(x, spec.epsilon)?;
    let a: Vec<f64> = u.iter().map(|v| v.powf(p)).collect();
    let s: f64 = a.iter().sum();
    let mean_log: f64 = a.iter().map(|ai| ai * ai.ln()).sum::<f64>() / s;
    // Gradients scale as 1/m under x → x/m.
    Ok(u.iter().zip(&a).map(|(ui, ai)| p * ui.powf(p - 1.0) * (mean_log - ai.ln()) / s / m).collect())
}

/// ∂h_{p,α}/∂|x_i| = pα (|x_i|^{pα−1} S − |x_i|^{p−1} T) / ((1−α) S T),
/// S = ‖x‖_p^p, T = ‖x‖_{pα}^{pα}.
pub fn ref_grad_mag(x: &[f64], spec: &RegularizerSpec) -> Result<Vec<f64>> {
    let Penalty::Ref { p, alpha } = spec.penalty else {
        return require(spec, "REF").map(|_| Vec::new());
    };
    let (u, m) = shifted_magnitudes(x, spec.epsilon)?;
    let pa = p * alpha;
    let s: f64 = u.iter().map(|v| v.powf(p)).sum();
    let t: f64 = u.iter().map(|v| v.powf(pa)).sum();
    let c = pa / ((1.0 - alpha) * s * t * m);
    Ok(u.iter().map(|ui| c * (ui.powf(pa - 1.0) * s - ui.powf(p - 1.0) * t)).collect())
}

/// Magnitude at which the entropy gradient changes sign.
///
/// SEF: ν = exp(Σ_l |x_l|^p log|x_l|^p / (p ‖x‖_p^p)).
/// REF: ν = (‖x‖_{pα}^{pα} / ‖x‖_p^p)^{1/(pα−p)}.
pub fn nu_threshold(x: &[f64], spec: &RegularizerSpec) -> Result<f64> {
    let (u, m) = shifted_magnitudes(x, spec.epsilon)?;
    match spec.penalty {
        Penalty::Sef { p } => {
            let a: Vec<f64> = u.iter().map(|v| v.powf(p)).collect();
            let s: f64 = a.iter().sum();
            let mean_log = a.iter().map(|ai| ai * ai.ln()).sum::<f64>() / s;
            Ok(m * (mean_log / p).exp())
        }
        Penalty::Ref { p, alpha } => {
            let s: f64 = u.iter().map(|v| v.powf(p)).sum();
            let t: f64 = u.iter().map(|v| v.powf(p * alpha)).sum();
            Ok(m * ((t / s).ln() / (p * alpha - p)).exp())
        }
        _ => require(spec, "SEF or REF").map(|_| 0.0),
    }
}

/// Value and reweighting of the L1 / Lp^p baselines:
/// L1 → (Σ|x_i|, 1), Lp → (Σ|x_i|^p, p(|x_i| + ε)^{p−1}).
pub fn baseline_value_and_weight(x: &[f64], spec: &RegularizerSpec) -> Result<(f64, Vec<f64>)> {
    match spec.penalty {
        Penalty::L1 => Ok((x.iter().map(|v| v.abs()).sum(), vec![1.0; x.len()])),
        Penalty::Lpp { p } => {
            let value = x.iter().map(|v| v.abs().powf(p)).sum();
            let w = x.iter().map(|v| p * (v.abs() + spec.epsilon).powf(p - 1.0)).collect();
            Ok((value, w))
        }
        _ => require(spec, "L1 or Lp").map(|_| (0.0, Vec::new())),
    }
}

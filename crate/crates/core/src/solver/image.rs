//! Analysis-form image recovery.
//!
//! Solves min_s ‖y − Us‖² + λ g(Vᵀs) for an orthonormal-row sensing operator U
//! (UUᵀ = I, so κ = 2) and a tight frame V (VVᵀ = I). Each outer iteration
//! takes the proximal point s̃ = s − Uᵀ(Us − y), freezes the penalty weights
//! Q at Vᵀs and solves the weighted analysis problem
//!
//! min_s ‖s − s̃‖² + λ Σ Q_i |(Vᵀs)_i|
//!
//! by split Bregman iterations on the splitting d = Vᵀs.
//!
//! Small λ makes plain proximal steps crawl, so a cold start walks λ down
//! geometrically from a large value to the target. A warm start (`s0`) runs
//! at the target λ only.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::operators::LinearOperator;
use crate::regularizers::RegularizerSpec;
use crate::shrinkage::soft_threshold;
use crate::vector::{dist2, relative_change};

use super::config::Acceleration;
use super::penalty_value;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImageSolverConfig {
    pub regularizer: RegularizerSpec,
    /// Target λ.
    pub lambda: f64,
    /// Ratio between successive λ of a cold start; `None` starts at the target.
    pub continuation_ratio: Option<f64>,
    /// First λ of a cold start; `None` uses half of ‖VᵀUᵀy‖∞.
    pub lambda_start: Option<f64>,
    /// Outer iterations per intermediate λ.
    pub phase_max_iters: usize,
    /// Outer iterations at the target λ.
    pub outer_max_iters: usize,
    pub outer_tol: f64,
    pub acceleration: Acceleration,
    /// Augmented-penalty weight of the splitting constraint.
    pub mu: f64,
    pub bregman_max_iters: usize,
    pub bregman_tol: f64,
}

impl Default for ImageSolverConfig {
    fn default() -> Self {
        Self {
            regularizer: RegularizerSpec::l1(),
            lambda: 0.0,
            continuation_ratio: Some(0.7),
            lambda_start: None,
            phase_max_iters: 30,
            outer_max_iters: 1000,
            outer_tol: 1e-5,
            acceleration: Acceleration::Fista,
            mu: 1.0,
            bregman_max_iters: 10,
            bregman_tol: 1e-7,
        }
    }
}

impl ImageSolverConfig {
    pub fn new(regularizer: RegularizerSpec, lambda: f64) -> Self {
        Self { regularizer, lambda, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        if let Some(r) = self.continuation_ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "continuation ratio must lie in (0, 1), got {r}"
                )));
            }
        }
        if let Some(l) = self.lambda_start {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!("lambda_start must be positive, got {l}")));
            }
        }
        if !(self.mu > 0.0) || !(self.outer_tol > 0.0) || !(self.bregman_tol > 0.0) {
            return Err(Error::InvalidParameter("mu and tolerances must be positive".into()));
        }
        if self.outer_max_iters == 0 || self.bregman_max_iters == 0 || self.phase_max_iters == 0 {
            return Err(Error::InvalidParameter("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// ‖s − s̃‖² + λ Σ Q_i |(Vᵀs)_i|
pub fn weighted_analysis_objective(
    s: &[f64],
    s_prox: &[f64],
    frame: &LinearOperator,
    weights: &[f64],
    lambda: f64,
) -> Result<f64> {
    let c = frame.adjoint(s)?;
    let d = dist2(s, s_prox);
    let pen: f64 = c.iter().zip(weights).map(|(ci, qi)| qi * ci.abs()).sum();
    Ok(d * d + lambda * pen)
}

/// Split Bregman solve of min_s ‖s − s̃‖² + λ Σ Q_i |(Vᵀs)_i|.
///
/// Returns the image and the number of iterations used.
pub fn weighted_analysis_prox(
    s_prox: &[f64],
    frame: &LinearOperator,
    weights: &[f64],
    lambda: f64,
    mu: f64,
    max_iters: usize,
    tol: f64,
) -> Result<(Vec<f64>, usize)> {
    check_len("image", frame.rows(), s_prox.len())?;
    check_len("frame weights", frame.cols(), weights.len())?;
    if lambda == 0.0 {
        return Ok((s_prox.to_vec(), 0));
    }
    let thresholds: Vec<f64> = weights.iter().map(|q| lambda * q / (2.0 * mu)).collect();
    let mut s = s_prox.to_vec();
    let mut vs = frame.adjoint(&s)?;
    let mut d: Vec<f64> = vs.iter().zip(&thresholds).map(|(c, t)| soft_threshold(*c, *t)).collect();
    let mut b: Vec<f64> = vs.iter().zip(&d).map(|(c, di)| c - di).collect();
    let mut iters = 0;
    for _ in 0..max_iters {
        iters += 1;
        let db: Vec<f64> = d.iter().zip(&b).map(|(di, bi)| di - bi).collect();
        let vdb = frame.apply(&db)?;
        let next: Vec<f64> = s_prox.iter().zip(&vdb).map(|(sp, v)| (sp + mu * v) / (1.0 + mu)).collect();
        vs = frame.adjoint(&next)?;
        for i in 0..d.len() {
            let c = vs[i] + b[i];
            d[i] = soft_threshold(c, thresholds[i]);
            b[i] = c - d[i];
        }
        let change = relative_change(&next, &s);
        s = next;
        if change < tol {
            break;
        }
    }
    Ok((s, iters))
}

#[derive(Debug, Clone)]
pub struct ImageSolveOutput {
    pub image: Vec<f64>,
    pub outer_iters: usize,
    /// ‖y − Us‖² + λ g(Vᵀs) at the start of each λ phase and after each
    /// accepted outer iteration.
    pub objectives: Vec<f64>,
    /// λ in force for each entry of `objectives`.
    pub lambdas: Vec<f64>,
}

struct ImageProblem<'a> {
    y: &'a [f64],
    sensing: &'a LinearOperator,
    frame: &'a LinearOperator,
    cfg: &'a ImageSolverConfig,
}

impl ImageProblem<'_> {
    fn objective(&self, s: &[f64], lambda: f64) -> Result<f64> {
        let r = self.sensing.apply(s)?;
        let data: f64 = r.iter().zip(self.y).map(|(a, b)| (a - b) * (a - b)).sum();
        if lambda == 0.0 {
            return Ok(data);
        }
        Ok(data + lambda * penalty_value(&self.cfg.regularizer, &self.frame.adjoint(s)?)?)
    }

    /// One proximal step from `z` at `lambda`.
    fn step(&self, z: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let r: Vec<f64> = self.sensing.apply(z)?.iter().zip(self.y).map(|(a, b)| a - b).collect();
        let g = self.sensing.adjoint(&r)?;
        let s_prox: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - gi).collect();
        if lambda == 0.0 {
            return Ok(s_prox);
        }
        let coeffs = self.frame.adjoint(z)?;
        let reg = &self.cfg.regularizer;
        let weights = if coeffs.iter().all(|&c| c == 0.0) {
            reg.weights(&vec![reg.epsilon(); coeffs.len()])?
        } else {
            reg.weights(&coeffs)?
        };
        Ok(weighted_analysis_prox(
            &s_prox,
            self.frame,
            &weights,
            lambda,
            self.cfg.mu,
            self.cfg.bregman_max_iters,
            self.cfg.bregman_tol,
        )?
        .0)
    }
}

/// Recovers s from y = Us (+ noise) with an analysis penalty on Vᵀs.
///
/// Starts from `s0` when given, otherwise from Uᵀy with λ continuation
/// (skipped when the target λ is 0).
/// Within a λ phase every accepted iterate lowers the objective: a momentum
/// step that raises it is replaced by a plain step, and a plain step that
/// raises it ends the phase. A phase also ends on a small relative change or
/// its iteration cap.
pub fn solve_analysis_image(
    y: &[f64],
    sensing: &LinearOperator,
    frame: &LinearOperator,
    cfg: &ImageSolverConfig,
    s0: Option<&[f64]>,
) -> Result<ImageSolveOutput> {
    cfg.validate()?;
    check_len("measurements", sensing.rows(), y.len())?;
    check_len("frame image size", sensing.cols(), frame.rows())?;
    let problem = ImageProblem { y, sensing, frame, cfg };
    let (mut s, mut lambda) = match s0 {
        Some(s0) => {
            check_len("initial image", sensing.cols(), s0.len())?;
            (s0.to_vec(), cfg.lambda)
        }
        None => {
            let s = sensing.adjoint(y)?;
            let start = match (cfg.continuation_ratio, cfg.lambda_start) {
                _ if cfg.lambda == 0.0 => 0.0,
                (None, _) => cfg.lambda,
                (Some(_), Some(l)) => l,
                (Some(_), None) => 0.5 * frame.adjoint(&s)?.iter().fold(0.0_f64, |a, c| a.max(c.abs())),
            };
            (s, start.max(cfg.lambda))
        }
    };

    let mut objectives = Vec::new();
    let mut lambdas = Vec::new();
    let mut outer_iters = 0;
    loop {
        let last = lambda <= cfg.lambda;
        let cap = if last { cfg.outer_max_iters } else { cfg.phase_max_iters };
        let mut f_cur = problem.objective(&s, lambda)?;
        objectives.push(f_cur);
        lambdas.push(lambda);
        let mut z = s.clone();
        let mut t = 1.0_f64;
        for _ in 0..cap {
            let mut next = problem.step(&z, lambda)?;
            let mut f_next = problem.objective(&next, lambda)?;
            let accelerated = cfg.acceleration == Acceleration::Fista && t > 1.0;
            if f_next > f_cur + 1e-12 * f_cur.abs() && accelerated {
                t = 1.0;
                next = problem.step(&s, lambda)?;
                f_next = problem.objective(&next, lambda)?;
            }
            if f_next > f_cur + 1e-12 * f_cur.abs() {
                break;
            }
            outer_iters += 1;
            let change = relative_change(&next, &s);
            z = if cfg.acceleration == Acceleration::Fista {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let beta = (t - 1.0) / t_next;
                t = t_next;
                next.iter().zip(&s).map(|(a, b)| a + beta * (a - b)).collect()
            } else {
                next.clone()
            };
            s = next;
            f_cur = f_next;
            objectives.push(f_cur);
            lambdas.push(lambda);
            if change < cfg.outer_tol {
                break;
            }
        }
        if last {
            break;
        }
        let ratio = cfg.continuation_ratio.expect("intermediate phases need a ratio");
        lambda = (lambda * ratio).max(cfg.lambda);
    }
    Ok(ImageSolveOutput { image: s, outer_iters, objectives, lambdas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{make_srm, make_wavelet_frame};
    use crate::rng::RandomSeed;

    fn test_image(side: usize) -> Vec<f64> {
        (0..side * side)
            .map(|k| {
                let (i, j) = (k / side, k % side);
                if (i / 4 + j / 4) % 2 == 0 {
                    0.8
                } else {
                    0.2
                }
            })
            .collect()
    }

    #[test]
    fn zero_lambda_full_sampling_inverts_exactly() {
        let side = 16;
        let s = test_image(side);
        let u = make_srm(side * side, side * side, RandomSeed::new(3, 0)).unwrap();
        let v = make_wavelet_frame(side, 2).unwrap();
        let y = u.apply(&s).unwrap();
        let out = solve_analysis_image(&y, &u, &v, &ImageSolverConfig::new(RegularizerSpec::l1(), 0.0), None)
            .unwrap();
        let err = dist2(&out.image, &s);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn split_bregman_matches_long_reference() {
        let side = 16;
        let v = make_wavelet_frame(side, 2).unwrap();
        let s_prox: Vec<f64> = test_image(side)
            .iter()
            .enumerate()
            .map(|(k, x)| x + 0.05 * ((k * 7919) % 13) as f64 / 13.0)
            .collect();
        let q = vec![1.0; v.cols()];
        let lambda = 0.01;
        let (short, _) = weighted_analysis_prox(&s_prox, &v, &q, lambda, 1.0, 50, 1e-12).unwrap();
        let (long, _) = weighted_analysis_prox(&s_prox, &v, &q, lambda, 1.0, 20_000, 1e-15).unwrap();
        let fs = weighted_analysis_objective(&short, &s_prox, &v, &q, lambda).unwrap();
        let fl = weighted_analysis_objective(&long, &s_prox, &v, &q, lambda).unwrap();
        assert!((fs - fl).abs() / fl < 1e-6, "{fs} {fl}");
    }

    #[test]
    fn outer_objective_is_monotone() {
        let side = 16;
        let s = test_image(side);
        let u = make_srm(side * side / 2, side * side, RandomSeed::new(4, 0)).unwrap();
        let v = make_wavelet_frame(side, 2).unwrap();
        let y = u.apply(&s).unwrap();
        let cfg = ImageSolverConfig::new(RegularizerSpec::sef(1.0).unwrap(), 1e-3);
        let out = solve_analysis_image(&y, &u, &v, &cfg, None).unwrap();
        assert!(out.lambdas.windows(2).any(|w| w[1] < w[0]), "no continuation");
        for (w, l) in out.objectives.windows(2).zip(out.lambdas.windows(2)) {
            if l[0] == l[1] {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }
    }
}

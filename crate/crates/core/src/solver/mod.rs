//! Proximal / reweighted-ℓ1 recovery.
//!
//! Minimizes F(x) = ‖y − Ax‖² + λ g(x). Each outer iteration replaces the data
//! term by its quadratic upper model with curvature κ, which gives the
//! proximal point x̃ = x − ∇f(x)/κ. The penalty is then linearized in |x|
//! around the current inner iterate and the resulting weighted-ℓ1 problem is
//! solved in closed form by (generalized) soft thresholding. Inner iterations
//! stop on convergence or as soon as the proximal objective
//! (κ/2)‖x − x̃‖² + λ g(x) would increase, which makes F nonincreasing along the
//! outer sequence.
//!
//! λ follows a geometric continuation path λ_k = ρ^k λ0 down to λ_min, or is
//! held fixed. FISTA momentum is applied to the outer sequence and restarted
//! whenever it would increase F.

mod config;
pub mod image;
mod trace;

use rand_distr::{Distribution, StandardNormal};

pub use config::{Acceleration, Initializer, SolverConfig};
pub use image::{solve_analysis_image, weighted_analysis_prox, ImageSolverConfig};
pub use trace::{SolverTrace, TraceRecord};

use crate::error::{check_len, Error, Result};
use crate::operators::LinearOperator;
use crate::regularizers::{Penalty, RegularizerSpec};
use crate::rng::RandomSeed;
use crate::shrinkage::reweighted_prox_step;
use crate::vector::{dist2, dot, is_zero, norm2, norm_inf, relative_change};

/// Safety factor applied to the power-iteration estimate of 2·λ_max(AᵀA).
pub const KAPPA_MARGIN: f64 = 0.01;
const KAPPA_MAX_ITERS: usize = 5_000;
/// Relative slack used when comparing objective values.
const MONOTONE_SLACK: f64 = 1e-12;

/// κ = 2·λ_max(AᵀA)·(1 + margin), with λ_max from power iteration.
pub fn estimate_kappa(op: &LinearOperator, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut rng = RandomSeed::new(0x6b_6170_7061, 0).rng();
    let mut v: Vec<f64> = (0..op.cols()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let n = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n);

    let mut estimate = 0.0;
    let mut change = f64::INFINITY;
    for _ in 0..KAPPA_MAX_ITERS {
        let av = op.apply(&v)?;
        // Rayleigh quotient ⟨v, AᵀAv⟩ = ‖Av‖²
        let rayleigh = dot(&av, &av);
        let w = op.adjoint(&av)?;
        let wn = norm2(&w);
        if wn == 0.0 {
            return Err(Error::InvalidParameter("operator annihilates the start vector".into()));
        }
        change = (rayleigh - estimate).abs() / rayleigh;
        estimate = rayleigh;
        if change < tol {
            return Ok(2.0 * estimate * (1.0 + KAPPA_MARGIN));
        }
        v = w.into_iter().map(|x| x / wn).collect();
    }
    Err(Error::KappaNotConverged { iterations: KAPPA_MAX_ITERS, last_change: change })
}

/// ∇f(x) = 2(AᵀAx − Aᵀy) for f(x) = ‖y − Ax‖².
pub fn data_gradient(x: &[f64], op: &LinearOperator, y: &[f64]) -> Result<Vec<f64>> {
    check_len("measurements", op.rows(), y.len())?;
    let ax = op.apply(x)?;
    let r: Vec<f64> = ax.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(op.adjoint(&r)?.into_iter().map(|v| 2.0 * v).collect())
}

/// Proximal point x − ∇f(x)/κ.
pub fn gradient_step(x: &[f64], op: &LinearOperator, y: &[f64], kappa: f64) -> Result<Vec<f64>> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let g = data_gradient(x, op, y)?;
    Ok(x.iter().zip(&g).map(|(xi, gi)| xi - gi / kappa).collect())
}

/// f(x) = ‖y − Ax‖².
pub fn data_term(x: &[f64], op: &LinearOperator, y: &[f64]) -> Result<f64> {
    check_len("measurements", op.rows(), y.len())?;
    let ax = op.apply(x)?;
    Ok(ax.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// g(x), extended by g(0) = 0 so that objective traces stay defined at the
/// origin.
pub fn penalty_value(spec: &RegularizerSpec, x: &[f64]) -> Result<f64> {
    if is_zero(x) {
        return Ok(0.0);
    }
    spec.value(x)
}

/// Linearization weights; at the origin they are taken at the ε-shifted point.
fn penalty_weights(spec: &RegularizerSpec, x: &[f64]) -> Result<Vec<f64>> {
    if is_zero(x) {
        return spec.weights(&vec![spec.epsilon(); x.len()]);
    }
    spec.weights(x)
}

/// Parameters of one inner reweighted-ℓ1 solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerSettings {
    pub lambda: f64,
    pub kappa: f64,
    pub max_iters: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub x: Vec<f64>,
    pub iters: usize,
    /// Proximal objective (κ/2)‖x − x̃‖² + λ g(x) at the returned point.
    pub objective: f64,
    /// The returned iterate is exactly zero.
    pub collapsed: bool,
}

/// (κ/2)‖x − x̃‖² + λ g(x)
pub fn proximal_objective(
    x: &[f64],
    x_prox: &[f64],
    spec: &RegularizerSpec,
    lambda: f64,
    kappa: f64,
) -> Result<f64> {
    let d = dist2(x, x_prox);
    Ok(0.5 * kappa * d * d + lambda * penalty_value(spec, x)?)
}

/// Minimizes (κ/2)‖x − x̃‖² + λ g(x) by iterated reweighted soft thresholding,
/// starting from `x_init`.
///
/// Returns the last iterate that did not increase the proximal objective.
pub fn inner_reweighted_solve(
    x_prox: &[f64],
    x_init: &[f64],
    spec: &RegularizerSpec,
    settings: InnerSettings,
) -> Result<InnerResult> {
    check_len("inner solve start point", x_prox.len(), x_init.len())?;
    let InnerSettings { lambda, kappa, max_iters, tol } = settings;

    if lambda == 0.0 {
        return Ok(InnerResult { x: x_prox.to_vec(), iters: 1, objective: 0.0, collapsed: is_zero(x_prox) });
    }

    let mut current = x_init.to_vec();
    let mut current_obj = proximal_objective(&current, x_prox, spec, lambda, kappa)?;
    let mut iters = 0;
    for _ in 0..max_iters.max(1) {
        let weights = penalty_weights(spec, &current)?;
        let next = reweighted_prox_step(x_prox, &weights, lambda, kappa)?;
        iters += 1;
        // Entropies are undefined at the origin; collapsing there is only
        // accepted when the proximal point itself is zero.
        if spec.penalty().is_entropy() && is_zero(&next) && !is_zero(x_prox) {
            break;
        }
        let next_obj = proximal_objective(&next, x_prox, spec, lambda, kappa)?;
        if next_obj > current_obj + MONOTONE_SLACK * current_obj.abs() {
            break;
        }
        let change = relative_change(&next, &current);
        current = next;
        current_obj = next_obj;
        if change < tol {
            break;
        }
    }
    Ok(InnerResult { collapsed: is_zero(&current), x: current, iters, objective: current_obj })
}

/// Recovered signal and iteration record.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub x: Vec<f64>,
    pub trace: SolverTrace,
}

/// Solves min ‖y − Ax‖² + λ g(x) for the configured penalty.
///
/// The starting point follows `cfg.initializer`; with [`Initializer::L1`] the
/// L1 problem is solved first under the same schedule.
pub fn solve(y: &[f64], op: &LinearOperator, cfg: &SolverConfig) -> Result<SolveOutput> {
    cfg.validate()?;
    check_len("measurements", op.rows(), y.len())?;
    let kappa = resolve_kappa(op, cfg)?;
    let x0 = match cfg.initializer {
        Initializer::L1 if cfg.regularizer.penalty() != Penalty::L1 => {
            let l1_cfg = SolverConfig {
                regularizer: RegularizerSpec::l1(),
                initializer: Initializer::Zero,
                kappa: Some(kappa),
                ..cfg.clone()
            };
            solve_with_kappa(y, op, &l1_cfg, vec![0.0; op.cols()], kappa)?.x
        }
        Initializer::Provided => {
            return Err(Error::InvalidParameter("initializer 'provided' requires solve_from".into()))
        }
        _ => vec![0.0; op.cols()],
    };
    solve_with_kappa(y, op, cfg, x0, kappa)
}

/// Like [`solve`] but starting from the caller's `x0`.
pub fn solve_from(y: &[f64], op: &LinearOperator, cfg: &SolverConfig, x0: &[f64]) -> Result<SolveOutput> {
    cfg.validate()?;
    check_len("measurements", op.rows(), y.len())?;
    check_len("initial point", op.cols(), x0.len())?;
    let kappa = resolve_kappa(op, cfg)?;
    solve_with_kappa(y, op, cfg, x0.to_vec(), kappa)
}

/// L1 baseline: FISTA/ISTA with the same continuation machinery, from zero.
pub fn solve_l1(y: &[f64], op: &LinearOperator, cfg: &SolverConfig) -> Result<SolveOutput> {
    let cfg =
        SolverConfig { regularizer: RegularizerSpec::l1(), initializer: Initializer::Zero, ..cfg.clone() };
    solve(y, op, &cfg)
}

fn resolve_kappa(op: &LinearOperator, cfg: &SolverConfig) -> Result<f64> {
    match cfg.kappa {
        Some(k) => Ok(k),
        None => estimate_kappa(op, cfg.kappa_tol),
    }
}

/// Default λ0 = 0.1‖2Aᵀy‖∞.
pub fn default_lambda0(op: &LinearOperator, y: &[f64]) -> Result<f64> {
    Ok(0.2 * norm_inf(&op.adjoint(y)?))
}

struct Problem<'a> {
    op: &'a LinearOperator,
    y: &'a [f64],
    spec: &'a RegularizerSpec,
    kappa: f64,
    inner_max_iters: usize,
    inner_tol: f64,
}

/// A point together with its cached image Ax and objective parts.
#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    ax: Vec<f64>,
    data: f64,
    penalty: f64,
}

impl Iterate {
    fn objective(&self, lambda: f64) -> f64 {
        self.data + lambda * self.penalty
    }
}

impl Problem<'_> {
    fn evaluate(&self, x: Vec<f64>, ax: Vec<f64>) -> Result<Iterate> {
        let data = ax.iter().zip(self.y).map(|(a, b)| (a - b) * (a - b)).sum();
        let penalty = penalty_value(self.spec, &x)?;
        Ok(Iterate { x, ax, data, penalty })
    }

    /// One proximal step from the point `z` (with image `az`).
    fn step(&self, z: &[f64], az: &[f64], lambda: f64) -> Result<(Iterate, usize)> {
        let residual: Vec<f64> = az.iter().zip(self.y).map(|(a, b)| a - b).collect();
        let grad = self.op.adjoint(&residual)?;
        let x_prox: Vec<f64> = z.iter().zip(&grad).map(|(zi, gi)| zi - 2.0 * gi / self.kappa).collect();
        let (x, iters) = match self.spec.penalty() {
            Penalty::L1 => (reweighted_prox_step(&x_prox, &vec![1.0; x_prox.len()], lambda, self.kappa)?, 1),
            _ => {
                let inner = inner_reweighted_solve(
                    &x_prox,
                    z,
                    self.spec,
                    InnerSettings {
                        lambda,
                        kappa: self.kappa,
                        max_iters: self.inner_max_iters,
                        tol: self.inner_tol,
                    },
                )?;
                (inner.x, inner.iters)
            }
        };
        let ax = self.op.apply(&x)?;
        Ok((self.evaluate(x, ax)?, iters))
    }
}

fn solve_with_kappa(
    y: &[f64],
    op: &LinearOperator,
    cfg: &SolverConfig,
    x0: Vec<f64>,
    kappa: f64,
) -> Result<SolveOutput> {
    let mut trace = SolverTrace { kappa, ..Default::default() };
    let lambda0 = match cfg.lambda0 {
        Some(l) => l,
        None => default_lambda0(op, y)?,
    };
    if is_zero(y) && is_zero(&x0) {
        trace.converged = true;
        trace.notes.push("zero measurements: returning the origin".to_string());
        trace.records.push(TraceRecord {
            phase: 0,
            outer_iter: 0,
            lambda: lambda0,
            objective: 0.0,
            data_term: 0.0,
            penalty_term: 0.0,
            inner_iters: 0,
            step_norm: 0.0,
        });
        return Ok(SolveOutput { x: x0, trace });
    }
    let lambda_min = cfg.lambda_min.unwrap_or(1e-8 * lambda0);

    let problem = Problem {
        op,
        y,
        spec: &cfg.regularizer,
        kappa,
        inner_max_iters: cfg.inner_max_iters,
        inner_tol: cfg.inner_tol,
    };
    let ax0 = op.apply(&x0)?;
    let mut cur = problem.evaluate(x0, ax0)?;
    let mut lambda = lambda0;
    let mut total_iters = 0;
    let mut phase = 0;

    'phases: loop {
        let record = |it: &Iterate, outer_iter, inner_iters, step_norm| TraceRecord {
            phase,
            outer_iter,
            lambda,
            objective: it.objective(lambda),
            data_term: it.data,
            penalty_term: it.penalty,
            inner_iters,
            step_norm,
        };
        trace.records.push(record(&cur, 0, 0, 0.0));

        let mut prev: Option<Iterate> = None;
        let mut momentum = 1.0_f64;
        let mut phase_converged = false;
        for outer in 1..=cfg.outer_max_iters {
            if total_iters >= cfg.total_max_iters {
                trace
                    .notes
                    .push(format!("total iteration cap {} reached in phase {phase}", cfg.total_max_iters));
                break 'phases;
            }
            total_iters += 1;
            let f_cur = cur.objective(lambda);

            let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let extrapolated = match &prev {
                Some(p) if momentum > 1.0 => {
                    let beta = (momentum - 1.0) / next_momentum;
                    let z: Vec<f64> = cur.x.iter().zip(&p.x).map(|(a, b)| a + beta * (a - b)).collect();
                    let az: Vec<f64> = cur.ax.iter().zip(&p.ax).map(|(a, b)| a + beta * (a - b)).collect();
                    Some((z, az))
                }
                _ => None,
            };

            let (mut candidate, mut inner_iters) = match &extrapolated {
                Some((z, az)) => problem.step(z, az, lambda)?,
                None => problem.step(&cur.x, &cur.ax, lambda)?,
            };
            let mut used_momentum = extrapolated.is_some();
            if used_momentum && candidate.objective(lambda) > f_cur + MONOTONE_SLACK * f_cur.abs() {
                trace.restarts += 1;
                (candidate, inner_iters) = problem.step(&cur.x, &cur.ax, lambda)?;
                used_momentum = false;
            }
            if candidate.objective(lambda) > f_cur + MONOTONE_SLACK * f_cur.abs() {
                // The plain proximal step cannot increase F for a valid κ; a
                // rejected step means we are at numerical stationarity.
                phase_converged = true;
                break;
            }
            let restarted = extrapolated.is_some() && !used_momentum;
            momentum =
                if cfg.acceleration == Acceleration::Fista && !restarted { next_momentum } else { 1.0 };

            let change = relative_change(&candidate.x, &cur.x);
            let step_norm = dist2(&candidate.x, &cur.x);
            prev = Some(std::mem::replace(&mut cur, candidate));
            trace.records.push(record(&cur, outer, inner_iters, step_norm));
            if change < cfg.outer_tol {
                phase_converged = true;
                break;
            }
        }
        if !phase_converged {
            trace.notes.push(format!("phase {phase} hit the outer iteration cap"));
        }

        let Some(ratio) = cfg.continuation_ratio else {
            trace.converged = phase_converged;
            break;
        };
        lambda *= ratio;
        if lambda < lambda_min {
            trace.converged = phase_converged;
            break;
        }
        phase += 1;
    }
    Ok(SolveOutput { x: cur.x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::make_gaussian;
    use crate::shrinkage::soft_threshold;

    #[test]
    fn kappa_of_identity() {
        let k = estimate_kappa(&LinearOperator::identity(7).unwrap(), 1e-9).unwrap();
        assert!((k - 2.02).abs() < 1e-12);
    }

    #[test]
    fn gradient_step_examples() {
        let a = LinearOperator::dense(2, 3, vec![1.0, 2.0, 0.0, 0.0, 1.0, -1.0]).unwrap();
        let x = [1.0, 0.5, 2.0];
        let y = a.apply(&x).unwrap();
        assert_eq!(gradient_step(&x, &a, &y, 3.0).unwrap(), x.to_vec());
        let id = LinearOperator::identity(3).unwrap();
        assert_eq!(gradient_step(&x, &id, &[0.0; 3], 2.0).unwrap(), vec![0.0; 3]);
        assert!(gradient_step(&x, &id, &[0.0; 2], 2.0).is_err());
    }

    #[test]
    fn inner_solve_with_zero_lambda_returns_prox_point() {
        let spec = RegularizerSpec::sef(1.1).unwrap();
        let xp = [0.5, -1.0, 2.0];
        let res = inner_reweighted_solve(
            &xp,
            &[1.0, 1.0, 1.0],
            &spec,
            InnerSettings { lambda: 0.0, kappa: 2.0, max_iters: 10, tol: 1e-8 },
        )
        .unwrap();
        assert_eq!(res.x, xp.to_vec());
        assert_eq!(res.iters, 1);
    }

    #[test]
    fn inner_solve_at_fixed_point_stops_fast() {
        // Uniform magnitudes give zero SEF weights, so thresholding is the
        // identity and the iteration is stationary immediately.
        let spec = RegularizerSpec::sef(1.0).unwrap();
        let xp = [1.0, -1.0, 1.0, 1.0];
        let res = inner_reweighted_solve(
            &xp,
            &xp,
            &spec,
            InnerSettings { lambda: 0.3, kappa: 2.0, max_iters: 50, tol: 1e-8 },
        )
        .unwrap();
        assert!(res.iters <= 2);
        assert_eq!(res.x, xp.to_vec());
    }

    #[test]
    fn l1_on_identity_is_soft_threshold() {
        let y = [3.0, -0.2, 0.05, -1.5, 0.7];
        let id = LinearOperator::identity(5).unwrap();
        let lambda = 0.8;
        let mut cfg = SolverConfig::new(RegularizerSpec::l1()).fixed_lambda(lambda);
        cfg.outer_tol = 1e-14;
        cfg.outer_max_iters = 10_000;
        let out = solve_l1(&y, &id, &cfg).unwrap();
        let kappa = out.trace.kappa;
        // minimizer of ‖y − x‖² + λ‖x‖₁ is soft(y, λ/2); note κ only scales the step
        for (xi, yi) in out.x.iter().zip(&y) {
            assert!((xi - soft_threshold(*yi, lambda / 2.0)).abs() < 1e-9, "{xi} {yi} {kappa}");
        }
    }

    #[test]
    fn zero_measurements_give_zero() {
        let a = make_gaussian(5, 10, RandomSeed::new(1, 0)).unwrap();
        let cfg = SolverConfig::new(RegularizerSpec::sef(1.1).unwrap());
        let out = solve(&[0.0; 5], &a, &cfg).unwrap();
        assert!(out.x.iter().all(|&v| v == 0.0));
        assert!(!out.trace.notes.is_empty());
    }
}

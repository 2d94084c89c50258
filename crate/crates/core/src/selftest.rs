//! Installation self-check: numerical oracles run against the library.

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::experiments::gen_instance;
use crate::operators::{make_gaussian, make_srm, make_wavelet_frame, LinearOperator};
use crate::regularizers::RegularizerSpec;
use crate::rng::RandomSeed;
use crate::shrinkage::{shrinkage_objective, soft_threshold};
use crate::solver::{solve, SolverConfig};
use crate::vector::{dist2, dot, norm2};

/// Deliberate defects used to check that the suite detects failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Flip the sign of every shrinkage threshold.
    ShrinkageSign,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    /// Smaller sample counts.
    pub quick: bool,
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: f64,
}

type Check = fn(&SelftestOptions) -> Result<(bool, String)>;

pub fn run_selftest(opts: SelftestOptions) -> Vec<CheckOutcome> {
    let checks: [(&'static str, Check); 6] = [
        ("shrinkage oracle", shrinkage_oracle),
        ("gradient finite differences", gradient_fd),
        ("frame orthonormality", frame_orthonormality),
        ("srm orthonormality", srm_orthonormality),
        ("adjoint dot tests", dot_tests),
        ("monotone descent", monotone_descent),
    ];
    checks
        .iter()
        .map(|(name, check)| {
            let t = Instant::now();
            let (passed, detail) = match check(&opts) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome { name, passed, detail, millis: t.elapsed().as_secs_f64() * 1e3 }
        })
        .collect()
}

/// Minimum of a 1-D function by repeated grid refinement on [lo, hi].
fn grid_minimum(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const POINTS: usize = 200;
    let (mut a, mut b) = (lo, hi);
    let mut best = f64::INFINITY;
    for _ in 0..8 {
        let step = (b - a) / POINTS as f64;
        let mut arg = a;
        for k in 0..=POINTS {
            let x = a + k as f64 * step;
            let v = f(x);
            if v < best {
                best = v;
                arg = x;
            }
        }
        a = arg - 2.0 * step;
        b = arg + 2.0 * step;
    }
    best
}

fn shrinkage_oracle(opts: &SelftestOptions) -> Result<(bool, String)> {
    let samples = if opts.quick { 1_000 } else { 10_000 };
    let mut rng = RandomSeed::new(0x5e1f, 1).rng();
    let mut worst = 0.0_f64;
    for _ in 0..samples {
        let x: f64 = rng.gen_range(-3.0..3.0);
        let tau: f64 = rng.gen_range(-2.0..2.0);
        let used_tau = if opts.fault == Some(Fault::ShrinkageSign) { -tau } else { tau };
        let closed = shrinkage_objective(soft_threshold(x, used_tau), x, tau);
        let radius = x.abs() + tau.abs() + 1.0;
        let brute = grid_minimum(|v| shrinkage_objective(v, x, tau), -radius, radius);
        worst = worst.max(closed - brute);
    }
    Ok((worst < 1e-8, format!("{samples} samples, worst excess {worst:.2e}")))
}

fn gradient_fd(opts: &SelftestOptions) -> Result<(bool, String)> {
    let vectors = if opts.quick { 20 } else { 100 };
    let mut rng = RandomSeed::new(0x5e1f, 2).rng();
    let mut specs = Vec::new();
    for p in [0.5, 1.0, 1.1, 2.0] {
        specs.push(RegularizerSpec::sef(p)?);
        for alpha in [0.5, 1.1, 2.0] {
            specs.push(RegularizerSpec::renyi(p, alpha)?);
        }
    }
    let mut worst = 0.0_f64;
    for k in 0..vectors {
        let x: Vec<f64> = (0..20)
            .map(|_| {
                let m: f64 = rng.gen_range(0.1..2.0);
                if rng.gen_bool(0.5) {
                    m
                } else {
                    -m
                }
            })
            .collect();
        let spec = &specs[k % specs.len()];
        let grad = spec.weights(&x)?;
        let mut fd = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            let h = 1e-6 * x[i].abs();
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += h;
            down[i] -= h;
            // derivative along x_i equals the magnitude derivative times sign(x_i)
            fd.push((spec.value(&up)? - spec.value(&down)?) / (2.0 * h) * x[i].signum());
        }
        worst = worst.max(dist2(&grad, &fd) / norm2(&grad));
    }
    Ok((worst < 1e-5, format!("{vectors} vectors, worst relative error {worst:.2e}")))
}

fn random_vec(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(&mut *rng)).collect()
}

fn frame_orthonormality(opts: &SelftestOptions) -> Result<(bool, String)> {
    let sides: &[usize] = if opts.quick { &[16] } else { &[16, 64] };
    let mut rng = RandomSeed::new(0x5e1f, 3).rng();
    let mut worst = 0.0_f64;
    for &side in sides {
        let v = make_wavelet_frame(side, 2)?;
        let s = random_vec(side * side, &mut rng);
        let back = v.apply(&v.adjoint(&s)?)?;
        worst = worst.max(dist2(&back, &s) / norm2(&s));
    }
    Ok((worst < 1e-10, format!("sides {sides:?}, worst ‖VVᵀs − s‖/‖s‖ {worst:.2e}")))
}

fn srm_orthonormality(opts: &SelftestOptions) -> Result<(bool, String)> {
    let count = if opts.quick { 5 } else { 20 };
    let mut rng = RandomSeed::new(0x5e1f, 4).rng();
    let mut worst = 0.0_f64;
    for k in 0..count {
        let n = rng.gen_range(8..300);
        let m = rng.gen_range(1..=n);
        let u = make_srm(m, n, RandomSeed::new(k, 0))?;
        let z = random_vec(m, &mut rng);
        let back = u.apply(&u.adjoint(&z)?)?;
        worst = worst.max(dist2(&back, &z) / norm2(&z));
    }
    Ok((worst < 1e-10, format!("{count} operators, worst ‖UUᵀz − z‖/‖z‖ {worst:.2e}")))
}

fn dot_tests(_: &SelftestOptions) -> Result<(bool, String)> {
    let mut rng = RandomSeed::new(0x5e1f, 5).rng();
    let srm = make_srm(40, 64, RandomSeed::new(9, 0))?;
    let frame = make_wavelet_frame(8, 1)?;
    let ops = [
        LinearOperator::identity(12)?,
        make_gaussian(15, 30, RandomSeed::new(8, 0))?,
        srm.clone(),
        frame.clone(),
        LinearOperator::compose(vec![srm, frame])?,
    ];
    let mut worst = 0.0_f64;
    for op in &ops {
        let x = random_vec(op.cols(), &mut rng);
        let y = random_vec(op.rows(), &mut rng);
        let lhs = dot(&op.apply(&x)?, &y);
        let rhs = dot(&x, &op.adjoint(&y)?);
        worst = worst.max((lhs - rhs).abs() / (norm2(&x) * norm2(&y)));
    }
    Ok((worst < 1e-10, format!("{} operators, worst relative gap {worst:.2e}", ops.len())))
}

fn monotone_descent(opts: &SelftestOptions) -> Result<(bool, String)> {
    let instances = if opts.quick { 2 } else { 5 };
    let specs = [
        RegularizerSpec::l1(),
        RegularizerSpec::sef(1.1)?,
        RegularizerSpec::renyi(1.1, 1.1)?,
        RegularizerSpec::lpp(0.5)?,
    ];
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..instances {
        let inst = gen_instance(60, 30, 6, 0x5e1f + seed, 0.0)?;
        for spec in specs {
            let out = solve(&inst.y, &inst.a, &SolverConfig::new(spec))?;
            worst = worst.max(out.trace.max_relative_increase());
        }
    }
    Ok((worst <= 1e-10, format!("{} solves, worst relative increase {worst:.2e}", instances * 4)))
}

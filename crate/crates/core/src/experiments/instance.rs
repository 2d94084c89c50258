use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::operators::{make_gaussian, LinearOperator};
use crate::rng::RandomSeed;
use crate::vector::dist2;

/// Stream indices used under a trial seed.
pub const MATRIX_STREAM: u64 = 0;
pub const SIGNAL_STREAM: u64 = 1;
pub const NOISE_STREAM: u64 = 2;

/// A sensing problem with known ground truth.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: Vec<f64>,
    pub a: LinearOperator,
    pub y: Vec<f64>,
    pub support: Vec<usize>,
    pub seed: u64,
    pub nu: f64,
}

impl Instance {
    /// 20·log10(‖Ax‖ / ‖y − Ax‖); infinite when noiseless.
    pub fn measurement_snr_db(&self) -> Result<f64> {
        let clean = self.a.apply(&self.x)?;
        let noise = dist2(&self.y, &clean);
        let signal = clean.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(20.0 * (signal / noise).log10())
    }
}

/// S-sparse x with N(0,1) nonzeros on a uniform support, a Gaussian A with
/// centered unit-norm rows, and y = Ax + ν w with w ~ N(0, I).
pub fn gen_instance(n: usize, m: usize, s: usize, seed: u64, nu: f64) -> Result<Instance> {
    if !(s <= m && m <= n && n > 0 && m > 0) {
        return Err(Error::InvalidParameter(format!(
            "need S <= M <= N with M, N > 0, got S={s}, M={m}, N={n}"
        )));
    }
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise scale must be nonnegative, got {nu}")));
    }
    let a = make_gaussian(m, n, RandomSeed::new(seed, MATRIX_STREAM))?;
    let mut rng = RandomSeed::new(seed, SIGNAL_STREAM).rng();
    let mut support = sample(&mut rng, n, s).into_vec();
    support.sort_unstable();
    let mut x = vec![0.0; n];
    for &i in &support {
        x[i] = StandardNormal.sample(&mut rng);
    }
    let mut y = a.apply(&x)?;
    if nu > 0.0 {
        let mut rng = RandomSeed::new(seed, NOISE_STREAM).rng();
        for v in &mut y {
            let w: f64 = StandardNormal.sample(&mut rng);
            *v += nu * w;
        }
    }
    Ok(Instance { x, a, y, support, seed, nu })
}

/// Noise scale giving an expected measurement SNR of `snr_db` for
/// [`gen_instance`] instances.
///
/// Each row of A is centered with unit norm, so E(Ax)_i² ≈ S/N and the
/// expected SNR is 10·log10(S/(N ν²)).
pub fn calibrate_nu(n: usize, s: usize, snr_db: f64) -> f64 {
    (s as f64 / n as f64).sqrt() * 10f64.powf(-snr_db / 20.0)
}

use std::fmt;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

/// Orthonormal DCT-II of arbitrary length and its inverse (the DCT-III).
#[derive(Clone)]
pub struct OrthoDct {
    len: usize,
    plan: Arc<dyn TransformType2And3<f64>>,
    scale0: f64,
    scale: f64,
}

impl fmt::Debug for OrthoDct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrthoDct").field("len", &self.len).finish()
    }
}

impl OrthoDct {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "DCT length must be positive");
        let plan = DctPlanner::new().plan_dct2(len);
        let n = len as f64;
        Self { len, plan, scale0: (1.0 / n).sqrt(), scale: (2.0 / n).sqrt() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place orthonormal DCT-II.
    pub fn forward(&self, buf: &mut [f64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.plan.process_dct2(buf);
        buf[0] *= self.scale0;
        for v in &mut buf[1..] {
            *v *= self.scale;
        }
    }

    /// In-place inverse, i.e. the transpose of [`forward`](Self::forward).
    pub fn inverse(&self, buf: &mut [f64]) {
        debug_assert_eq!(buf.len(), self.len);
        // rustdct's DCT-III halves the DC term.
        buf[0] *= 2.0 * self.scale0;
        for v in &mut buf[1..] {
            *v *= self.scale;
        }
        self.plan.process_dct3(buf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dct(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                c * x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                    .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn matches_naive_orthonormal_dct() {
        for n in [1usize, 2, 5, 8, 17, 64] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
            let mut fast = x.clone();
            let dct = OrthoDct::new(n);
            dct.forward(&mut fast);
            let slow = naive_dct(&x);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
            dct.inverse(&mut fast);
            for (a, b) in fast.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::dct::OrthoDct;
use crate::rng::RandomSeed;

/// Structurally random matrix U = D·F·R.
///
/// R permutes sample locations uniformly at random and flips signs with
/// i.i.d. ±1 draws, F is the orthonormal DCT-II, and D keeps `rows` of the N
/// transform outputs chosen uniformly without replacement (no rescaling), so
/// U Uᵀ = I.
#[derive(Debug, Clone)]
pub struct Srm {
    rows: usize,
    cols: usize,
    seed: RandomSeed,
    /// (R x)_i = signs[i] · x[perm[i]]
    perm: Vec<usize>,
    signs: Vec<f64>,
    selected: Vec<usize>,
    dct: OrthoDct,
}

impl Srm {
    pub(crate) fn new(rows: usize, cols: usize, seed: RandomSeed) -> Self {
        let mut rng = seed.rng();
        let mut perm: Vec<usize> = (0..cols).collect();
        perm.shuffle(&mut rng);
        let signs = (0..cols).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let mut selected = index::sample(&mut rng, cols, rows).into_vec();
        selected.sort_unstable();
        Self { rows, cols, seed, perm, signs, selected, dct: OrthoDct::new(cols) }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> RandomSeed {
        self.seed
    }

    pub fn selected_rows(&self) -> &[usize] {
        &self.selected
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self.perm.iter().zip(&self.signs).map(|(&p, &s)| s * x[p]).collect();
        self.dct.forward(&mut z);
        self.selected.iter().map(|&k| z[k]).collect()
    }

    pub(crate) fn adjoint(&self, u: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.cols];
        for (&k, &v) in self.selected.iter().zip(u) {
            z[k] = v;
        }
        self.dct.inverse(&mut z);
        let mut out = vec![0.0; self.cols];
        for ((&p, &s), v) in self.perm.iter().zip(&self.signs).zip(z) {
            out[p] = s * v;
        }
        out
    }
}

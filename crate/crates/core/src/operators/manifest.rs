use serde::{Deserialize, Serialize};

use super::{make_gaussian, make_srm, make_wavelet_frame, LinearOperator};
use crate::error::Result;
use crate::rng::RandomSeed;

/// JSON descriptor sufficient to rebuild an operator bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorManifest {
    Identity { dim: usize },
    Gaussian { rows: usize, cols: usize, seed: RandomSeed },
    Srm { rows: usize, cols: usize, seed: RandomSeed },
    WaveletFrame { side: usize, levels: usize },
    Composition { factors: Vec<OperatorManifest> },
}

impl OperatorManifest {
    pub fn build(&self) -> Result<LinearOperator> {
        match self {
            Self::Identity { dim } => LinearOperator::identity(*dim),
            Self::Gaussian { rows, cols, seed } => make_gaussian(*rows, *cols, *seed),
            Self::Srm { rows, cols, seed } => make_srm(*rows, *cols, *seed),
            Self::WaveletFrame { side, levels } => make_wavelet_frame(*side, *levels),
            Self::Composition { factors } => {
                LinearOperator::compose(factors.iter().map(|f| f.build()).collect::<Result<_>>()?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_rebuilds_identical_operator() {
        let op = LinearOperator::compose(vec![
            make_srm(16, 64, RandomSeed::new(3, 1)).unwrap(),
            make_wavelet_frame(8, 1).unwrap(),
        ])
        .unwrap();
        let json = serde_json::to_string(&op.manifest().unwrap()).unwrap();
        let rebuilt: OperatorManifest = serde_json::from_str(&json).unwrap();
        let op2 = rebuilt.build().unwrap();
        let v: Vec<f64> = (0..op.cols()).map(|i| (i as f64 * 0.37).cos()).collect();
        let a = op.apply(&v).unwrap();
        let b = op2.apply(&v).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn raw_dense_is_not_serializable() {
        let op = LinearOperator::dense(1, 1, vec![1.0]).unwrap();
        assert!(op.manifest().is_err());
    }
}

//! Matrix-free linear operators.
//!
//! Every operator exposes a forward map `apply: R^cols → R^rows` and its exact
//! adjoint. Concrete families:
//!
//! - [`Identity`](LinearOperator::Identity)
//! - dense row-major matrices, including the row-centered, row-normalized
//!   Gaussian ensemble ([`make_gaussian`])
//! - structurally random matrices U = D·F·R ([`make_srm`])
//! - the Db1–Db4 tight wavelet frame ([`make_wavelet_frame`])
//! - products of the above ([`LinearOperator::compose`])
//!
//! Operators are immutable once built and can be shared across threads.

mod dct;
mod manifest;
mod srm;
pub mod wavelet;

use rand_distr::{Distribution, StandardNormal};

pub use dct::OrthoDct;
pub use manifest::OperatorManifest;
pub use srm::Srm;
pub use wavelet::{default_levels, validate_geometry, Daubechies, Dwt2, WaveletFrame};

use crate::error::{check_len, Error, Result};
use crate::rng::RandomSeed;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    seed: Option<RandomSeed>,
}

impl DenseMatrix {
    /// Row-major matrix.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter("matrix dimensions must be positive".into()));
        }
        check_len("dense matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data, seed: None })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.data.chunks_exact(self.cols).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    fn matvec_t(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (row, &ui) in self.data.chunks_exact(self.cols).zip(u) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * ui;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub enum LinearOperator {
    Identity(usize),
    Dense(DenseMatrix),
    Srm(Srm),
    WaveletFrame(WaveletFrame),
    /// Product of factors, leftmost applied last: `[A, B]` is A·B.
    Composition(Vec<LinearOperator>),
}

impl LinearOperator {
    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("identity dimension must be positive".into()));
        }
        Ok(Self::Identity(n))
    }

    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        DenseMatrix::from_rows(rows, cols, data).map(Self::Dense)
    }

    /// Product `factors[0] · factors[1] · …`.
    pub fn compose(factors: Vec<LinearOperator>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("empty composition".into()));
        }
        for pair in factors.windows(2) {
            check_len("composition inner dimension", pair[0].cols(), pair[1].rows())?;
        }
        Ok(Self::Composition(factors))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Identity(_) => "identity",
            Self::Dense(_) => "dense",
            Self::Srm(_) => "srm",
            Self::WaveletFrame(_) => "wavelet_frame",
            Self::Composition(_) => "composition",
        }
    }

    pub fn rows(&self) -> usize {
        match self {
            Self::Identity(n) => *n,
            Self::Dense(m) => m.rows,
            Self::Srm(s) => s.rows(),
            Self::WaveletFrame(w) => w.pixels(),
            Self::Composition(f) => f[0].rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Self::Identity(n) => *n,
            Self::Dense(m) => m.cols,
            Self::Srm(s) => s.cols(),
            Self::WaveletFrame(w) => w.coefficients(),
            Self::Composition(f) => f[f.len() - 1].cols(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("apply", self.cols(), v.len())?;
        Ok(match self {
            Self::Identity(_) => v.to_vec(),
            Self::Dense(m) => m.matvec(v),
            Self::Srm(s) => s.apply(v),
            Self::WaveletFrame(w) => w.synthesize(v)?,
            Self::Composition(factors) => {
                let mut cur = v.to_vec();
                for f in factors.iter().rev() {
                    cur = f.apply(&cur)?;
                }
                cur
            }
        })
    }

    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint", self.rows(), u.len())?;
        Ok(match self {
            Self::Identity(_) => u.to_vec(),
            Self::Dense(m) => m.matvec_t(u),
            Self::Srm(s) => s.adjoint(u),
            Self::WaveletFrame(w) => w.analyze(u)?,
            Self::Composition(factors) => {
                let mut cur = u.to_vec();
                for f in factors {
                    cur = f.adjoint(&cur)?;
                }
                cur
            }
        })
    }

    /// Materializes the operator column by column (apply on basis vectors).
    /// Intended for small instances and tests.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let (rows, cols) = (self.rows(), self.cols());
        let mut data = vec![0.0; rows * cols];
        let mut e = vec![0.0; cols];
        for j in 0..cols {
            e[j] = 1.0;
            let col = self.apply(&e)?;
            e[j] = 0.0;
            for (i, v) in col.into_iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        DenseMatrix::from_rows(rows, cols, data)
    }

    /// Descriptor from which this operator can be rebuilt bit-for-bit.
    pub fn manifest(&self) -> Result<OperatorManifest> {
        Ok(match self {
            Self::Identity(n) => OperatorManifest::Identity { dim: *n },
            Self::Dense(m) => match m.seed {
                Some(seed) => OperatorManifest::Gaussian { rows: m.rows, cols: m.cols, seed },
                None => return Err(Error::NotSerializable("dense")),
            },
            Self::Srm(s) => OperatorManifest::Srm { rows: s.rows(), cols: s.cols(), seed: s.seed() },
            Self::WaveletFrame(w) => OperatorManifest::WaveletFrame { side: w.side(), levels: w.levels() },
            Self::Composition(factors) => OperatorManifest::Composition {
                factors: factors.iter().map(|f| f.manifest()).collect::<Result<_>>()?,
            },
        })
    }
}

fn check_underdetermined(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || rows > cols {
        return Err(Error::InvalidParameter(format!("need 0 < rows <= cols, got {rows} x {cols}")));
    }
    Ok(())
}

/// Gaussian sensing matrix with i.i.d. N(0,1) draws whose rows are centered
/// (mean removed) and then scaled to unit ℓ2 norm.
pub fn make_gaussian(rows: usize, cols: usize, seed: RandomSeed) -> Result<LinearOperator> {
    check_underdetermined(rows, cols)?;
    let mut rng = seed.rng();
    let mut data: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(&mut rng)).collect();
    for row in data.chunks_exact_mut(cols) {
        let mean = row.iter().sum::<f64>() / cols as f64;
        row.iter_mut().for_each(|v| *v -= mean);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(LinearOperator::Dense(DenseMatrix { rows, cols, data, seed: Some(seed) }))
}

/// Structurally random matrix U = D·F·R (see [`Srm`]).
pub fn make_srm(rows: usize, cols: usize, seed: RandomSeed) -> Result<LinearOperator> {
    check_underdetermined(rows, cols)?;
    Ok(LinearOperator::Srm(Srm::new(rows, cols, seed)))
}

pub fn make_wavelet_frame(side: usize, levels: usize) -> Result<LinearOperator> {
    WaveletFrame::new(side, levels).map(LinearOperator::WaveletFrame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::dot;

    #[test]
    fn identity_and_diagonal() {
        let id = LinearOperator::identity(3).unwrap();
        assert_eq!(id.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(id.adjoint(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        let d = LinearOperator::dense(2, 2, vec![1.0, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(d.apply(&[3.0, 4.0]).unwrap(), vec![3.0, 8.0]);
        assert_eq!(d.adjoint(&[3.0, 8.0]).unwrap(), vec![3.0, 16.0]);
    }

    #[test]
    fn dimension_mismatch_reports_lengths() {
        let d = LinearOperator::dense(2, 3, vec![0.0; 6]).unwrap();
        match d.apply(&[1.0, 2.0]) {
            Err(Error::DimensionMismatch { expected, actual, .. }) => {
                assert_eq!((expected, actual), (3, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(d.adjoint(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn gaussian_rows_centered_and_normalized() {
        let a = make_gaussian(4, 10, RandomSeed::new(5, 0)).unwrap();
        let LinearOperator::Dense(m) = &a else { unreachable!() };
        for i in 0..4 {
            let row = m.row(i);
            let mean = row.iter().sum::<f64>() / 10.0;
            assert!(mean.abs() < 1e-12);
            assert!((dot(row, row).sqrt() - 1.0).abs() < 1e-12);
        }
        let b = make_gaussian(4, 10, RandomSeed::new(5, 0)).unwrap();
        let LinearOperator::Dense(mb) = &b else { unreachable!() };
        assert!(m.data().iter().zip(mb.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(make_gaussian(11, 10, RandomSeed::new(5, 0)).is_err());
    }

    #[test]
    fn composition_dims() {
        let a = LinearOperator::dense(2, 3, vec![1.0; 6]).unwrap();
        let b = LinearOperator::identity(3).unwrap();
        let c = LinearOperator::compose(vec![a.clone(), b]).unwrap();
        assert_eq!((c.rows(), c.cols()), (2, 3));
        assert_eq!(c.apply(&[1.0, 1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
        assert!(LinearOperator::compose(vec![b_wrong(), a]).is_err());
    }

    fn b_wrong() -> LinearOperator {
        LinearOperator::identity(4).unwrap()
    }
}

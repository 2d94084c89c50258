//! Periodized orthonormal Daubechies wavelets (Db1–Db4) on square images and
//! the ½-weighted concatenation of the four bases into a Parseval tight frame.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

// Scaling (lowpass) filters normalized to sum √2, highest-precision values
// from spectral factorization of the Daubechies polynomial.
const DB1: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
#[allow(clippy::excessive_precision)]
const DB2: [f64; 4] = [
    0.482_962_913_144_534_143_37,
    0.836_516_303_737_807_905_58,
    0.224_143_868_042_013_381_03,
    -0.129_409_522_551_260_381_17,
];
#[allow(clippy::excessive_precision)]
const DB3: [f64; 6] = [
    0.332_670_552_950_082_616,
    0.806_891_509_311_092_576_49,
    0.459_877_502_118_491_570_1,
    -0.135_011_020_010_254_588_7,
    -0.085_441_273_882_026_661_693,
    0.035_226_291_885_709_536_603,
];
#[allow(clippy::excessive_precision)]
const DB4: [f64; 8] = [
    0.230_377_813_308_896_500_86,
    0.714_846_570_552_915_647_09,
    0.630_880_767_929_858_907_88,
    -0.027_983_769_416_859_854_211,
    -0.187_034_811_719_093_084_08,
    0.030_841_381_835_560_763_627,
    0.032_883_011_666_885_199_735,
    -0.010_597_401_785_069_032_105,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Daubechies {
    Db1,
    Db2,
    Db3,
    Db4,
}

impl Daubechies {
    pub const ALL: [Daubechies; 4] = [Self::Db1, Self::Db2, Self::Db3, Self::Db4];

    pub fn lowpass(self) -> &'static [f64] {
        match self {
            Self::Db1 => &DB1,
            Self::Db2 => &DB2,
            Self::Db3 => &DB3,
            Self::Db4 => &DB4,
        }
    }

    /// Quadrature-mirror highpass filter g_j = (−1)^j h_{L−1−j}.
    pub fn highpass(self) -> Vec<f64> {
        let h = self.lowpass();
        let n = h.len();
        (0..n).map(|j| if j % 2 == 0 { h[n - 1 - j] } else { -h[n - 1 - j] }).collect()
    }
}

/// One level of the periodized 1-D analysis: `input` (even length n) is split
/// into n/2 approximation and n/2 detail coefficients, written to `out` as
/// `[approx | detail]`.
fn analysis_1d(input: &[f64], out: &mut [f64], lo: &[f64], hi: &[f64]) {
    let n = input.len();
    let half = n / 2;
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for (j, (&l, &h)) in lo.iter().zip(hi).enumerate() {
            let x = input[(2 * k + j) % n];
            a += l * x;
            d += h * x;
        }
        out[k] = a;
        out[half + k] = d;
    }
}

/// Transpose of [`analysis_1d`].
fn synthesis_1d(input: &[f64], out: &mut [f64], lo: &[f64], hi: &[f64]) {
    let n = input.len();
    let half = n / 2;
    out.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..half {
        let a = input[k];
        let d = input[half + k];
        for (j, (&l, &h)) in lo.iter().zip(hi).enumerate() {
            out[(2 * k + j) % n] += l * a + h * d;
        }
    }
}

/// Separable 2-D periodized orthonormal DWT on a `side × side` image stored
/// row-major, with the usual nested (Mallat) coefficient layout.
#[derive(Debug, Clone)]
pub struct Dwt2 {
    side: usize,
    levels: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Dwt2 {
    pub fn new(wavelet: Daubechies, side: usize, levels: usize) -> Result<Self> {
        validate_geometry(side, levels)?;
        Ok(Self { side, levels, lo: wavelet.lowpass().to_vec(), hi: wavelet.highpass() })
    }

    /// Image → coefficients.
    pub fn analyze(&self, image: &[f64]) -> Vec<f64> {
        let side = self.side;
        let mut data = image.to_vec();
        let mut line = vec![0.0; side];
        let mut tmp = vec![0.0; side];
        for level in 0..self.levels {
            let n = side >> level;
            for r in 0..n {
                let row = &mut data[r * side..r * side + n];
                line[..n].copy_from_slice(row);
                analysis_1d(&line[..n], &mut tmp[..n], &self.lo, &self.hi);
                row.copy_from_slice(&tmp[..n]);
            }
            for c in 0..n {
                for r in 0..n {
                    line[r] = data[r * side + c];
                }
                analysis_1d(&line[..n], &mut tmp[..n], &self.lo, &self.hi);
                for r in 0..n {
                    data[r * side + c] = tmp[r];
                }
            }
        }
        data
    }

    /// Coefficients → image; exact inverse and transpose of [`analyze`](Self::analyze).
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let side = self.side;
        let mut data = coeffs.to_vec();
        let mut line = vec![0.0; side];
        let mut tmp = vec![0.0; side];
        for level in (0..self.levels).rev() {
            let n = side >> level;
            for c in 0..n {
                for r in 0..n {
                    line[r] = data[r * side + c];
                }
                synthesis_1d(&line[..n], &mut tmp[..n], &self.lo, &self.hi);
                for r in 0..n {
                    data[r * side + c] = tmp[r];
                }
            }
            for r in 0..n {
                let row = &mut data[r * side..r * side + n];
                line[..n].copy_from_slice(row);
                synthesis_1d(&line[..n], &mut tmp[..n], &self.lo, &self.hi);
                row.copy_from_slice(&tmp[..n]);
            }
        }
        data
    }
}

pub fn validate_geometry(side: usize, levels: usize) -> Result<()> {
    if side < 8 || !side.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("image side must be a power of two >= 8, got {side}")));
    }
    let max_levels = side.trailing_zeros() as usize - 2;
    if levels == 0 || levels > max_levels {
        return Err(Error::InvalidParameter(format!(
            "wavelet levels must lie in 1..={max_levels} for side {side}, got {levels}"
        )));
    }
    Ok(())
}

/// Default decomposition depth: 4 for images of side 256 and up, otherwise
/// log2(side) − 2.
pub fn default_levels(side: usize) -> usize {
    let max_levels = (side.trailing_zeros() as usize).saturating_sub(2);
    if side >= 256 {
        4
    } else {
        max_levels
    }
}

/// V = ½ [V_Db1 V_Db2 V_Db3 V_Db4]: synthesis maps 4·side² coefficients to a
/// side² image, analysis is its transpose. V Vᵀ = I.
#[derive(Debug, Clone)]
pub struct WaveletFrame {
    side: usize,
    levels: usize,
    bases: Vec<Dwt2>,
}

impl WaveletFrame {
    pub fn new(side: usize, levels: usize) -> Result<Self> {
        validate_geometry(side, levels)?;
        let bases =
            Daubechies::ALL.iter().map(|&w| Dwt2::new(w, side, levels)).collect::<Result<Vec<_>>>()?;
        Ok(Self { side, levels, bases })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn pixels(&self) -> usize {
        self.side * self.side
    }

    pub fn coefficients(&self) -> usize {
        self.bases.len() * self.pixels()
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        check_len("wavelet frame synthesis", self.coefficients(), coeffs.len())?;
        let npix = self.pixels();
        let mut image = vec![0.0; npix];
        for (basis, chunk) in self.bases.iter().zip(coeffs.chunks_exact(npix)) {
            let part = basis.synthesize(chunk);
            for (acc, v) in image.iter_mut().zip(&part) {
                *acc += 0.5 * v;
            }
        }
        Ok(image)
    }

    pub fn analyze(&self, image: &[f64]) -> Result<Vec<f64>> {
        check_len("wavelet frame analysis", self.pixels(), image.len())?;
        let mut coeffs = Vec::with_capacity(self.coefficients());
        for basis in &self.bases {
            coeffs.extend(basis.analyze(image).into_iter().map(|v| 0.5 * v));
        }
        Ok(coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_identities() {
        for w in Daubechies::ALL {
            let h = w.lowpass();
            let sum: f64 = h.iter().sum();
            assert!((sum - std::f64::consts::SQRT_2).abs() < 1e-12, "{w:?} sum {sum}");
            // Σ_k h_k h_{k+2m} = δ_m
            for m in 0..h.len() / 2 {
                let s: f64 = (0..h.len() - 2 * m).map(|k| h[k] * h[k + 2 * m]).sum();
                let expected = if m == 0 { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-12, "{w:?} shift {m}: {s}");
            }
        }
    }

    #[test]
    fn haar_constant_image_has_no_details() {
        let dwt = Dwt2::new(Daubechies::Db1, 16, 2).unwrap();
        let coeffs = dwt.analyze(&vec![3.0; 256]);
        let coarse = 16 >> 2;
        for r in 0..16 {
            for c in 0..16 {
                if r < coarse && c < coarse {
                    continue;
                }
                assert!(coeffs[r * 16 + c].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn every_basis_is_orthonormal() {
        let img: Vec<f64> = (0..32 * 32).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        for w in Daubechies::ALL {
            let dwt = Dwt2::new(w, 32, 3).unwrap();
            let c = dwt.analyze(&img);
            let energy_in: f64 = img.iter().map(|v| v * v).sum();
            let energy_out: f64 = c.iter().map(|v| v * v).sum();
            assert!((energy_in - energy_out).abs() < 1e-10 * energy_in);
            let back = dwt.synthesize(&c);
            for (a, b) in back.iter().zip(&img) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(WaveletFrame::new(12, 1).is_err());
        assert!(WaveletFrame::new(16, 0).is_err());
        assert!(WaveletFrame::new(16, 3).is_err());
        assert!(WaveletFrame::new(16, 2).is_ok());
        assert_eq!(default_levels(512), 4);
        assert_eq!(default_levels(64), 4);
        assert_eq!(default_levels(16), 2);
    }
}

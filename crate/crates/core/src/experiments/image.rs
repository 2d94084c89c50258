use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{default_levels, make_srm, make_wavelet_frame, validate_geometry, LinearOperator};
use crate::regularizers::{Penalty, RegularizerSpec};
use crate::rng::{derive_seed, RandomSeed};
use crate::solver::{solve_analysis_image, ImageSolverConfig};

use super::grid::TrialResult;
use super::instance::NOISE_STREAM;
use super::metrics::metrics;

/// Square grayscale image with intensities in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub side: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(side: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != side * side {
            return Err(Error::Image(format!(
                "expected {} pixels for a {side}x{side} image, got {}",
                side * side,
                pixels.len()
            )));
        }
        Ok(Self { side, pixels })
    }

    /// Rounded to 8 bits.
    pub fn quantized(&self) -> Self {
        Self {
            side: self.side,
            pixels: self.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0).collect(),
        }
    }

    pub fn read_pgm(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::decode_pgm(BufReader::new(file))
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.encode_pgm(&mut file)?;
        file.flush()?;
        Ok(())
    }

    /// Binary 8-bit PGM (P5). Rejects non-square images.
    pub fn decode_pgm<R: BufRead>(mut reader: R) -> Result<Self> {
        let mut header = Vec::new();
        let mut fields = Vec::new();
        while fields.len() < 4 {
            header.clear();
            if reader.read_until(b'\n', &mut header)? == 0 {
                return Err(Error::Image("truncated PGM header".into()));
            }
            let line = String::from_utf8_lossy(&header);
            let line = line.split('#').next().unwrap_or("");
            fields.extend(line.split_whitespace().map(str::to_owned));
        }
        if fields.len() > 4 {
            return Err(Error::Image("unexpected data after PGM header".into()));
        }
        if fields[0] != "P5" {
            return Err(Error::Image(format!("not a binary PGM (magic {:?})", fields[0])));
        }
        let parse = |s: &str, what: &str| {
            s.parse::<usize>().map_err(|_| Error::Image(format!("invalid PGM {what}: {s:?}")))
        };
        let (w, h, maxval) =
            (parse(&fields[1], "width")?, parse(&fields[2], "height")?, parse(&fields[3], "maxval")?);
        if w != h {
            return Err(Error::Image(format!("image must be square, got {w}x{h}")));
        }
        if maxval == 0 || maxval > 255 {
            return Err(Error::Image(format!("only 8-bit PGM is supported (maxval {maxval})")));
        }
        let mut bytes = vec![0u8; w * h];
        reader.read_exact(&mut bytes).map_err(|_| Error::Image("truncated PGM pixel data".into()))?;
        let scale = maxval as f64;
        Self::new(w, bytes.into_iter().map(|b| b as f64 / scale).collect())
    }

    pub fn encode_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.side, self.side)?;
        let bytes: Vec<u8> = self.pixels.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
        w.write_all(&bytes)?;
        Ok(())
    }
}

/// Deterministic piecewise-smooth test image: a shaded background with
/// overlapping ellipses, a bar pattern and a soft disc, rounded to 8 bits.
pub fn synthetic_phantom(side: usize) -> GrayImage {
    let ellipses: [(f64, f64, f64, f64, f64, f64); 5] = [
        // (cx, cy, rx, ry, angle, intensity)
        (0.50, 0.50, 0.42, 0.34, 0.0, 0.35),
        (0.38, 0.42, 0.14, 0.20, 0.5, 0.25),
        (0.66, 0.58, 0.12, 0.08, -0.4, -0.20),
        (0.52, 0.25, 0.06, 0.05, 0.0, 0.30),
        (0.30, 0.70, 0.08, 0.12, 1.0, 0.18),
    ];
    let n = side as f64;
    let mut pixels = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let (y, x) = ((i as f64 + 0.5) / n, (j as f64 + 0.5) / n);
            let mut v = 0.15 + 0.15 * x + 0.05 * y;
            for &(cx, cy, rx, ry, angle, value) in &ellipses {
                let (dx, dy) = (x - cx, y - cy);
                let (c, s) = (angle.cos(), angle.sin());
                let u = (c * dx + s * dy) / rx;
                let w = (-s * dx + c * dy) / ry;
                if u * u + w * w <= 1.0 {
                    v += value;
                }
            }
            if (0.72..0.9).contains(&y)
                && (0.55..0.85).contains(&x)
                && ((x * n * 0.25) as usize).is_multiple_of(2)
            {
                v += 0.2;
            }
            let r2 = (x - 0.78).powi(2) + (y - 0.25).powi(2);
            v += 0.25 * (-r2 / 0.006).exp();
            pixels.push(v.clamp(0.0, 1.0));
        }
    }
    GrayImage { side, pixels }.quantized()
}

/// Noise scale giving measurement SNR `snr_db` for an orthonormal-row
/// sensing operator applied to `image` (E|(Us)_i|² ≈ ‖s‖²/N).
pub fn calibrate_image_nu(image: &GrayImage, snr_db: f64) -> f64 {
    let power = image.pixels.iter().map(|v| v * v).sum::<f64>() / image.pixels.len() as f64;
    power.sqrt() * 10f64.powf(-snr_db / 20.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMethod {
    pub name: String,
    pub solver: ImageSolverConfig,
    /// Start from the L1 reconstruction instead of Uᵀy.
    pub init_from_l1: bool,
}

/// Image-scale λ for L1, SEF(p=1), REF(p=0.9, α=1.1), Lp(p=0.8) on 64 × 64
/// images with intensities in [0, 1].
pub const DESK_IMAGE_LAMBDA: [f64; 4] = [4e-4, 1.2e-3, 2.4e-3, 1.3e-5];

pub fn default_image_methods() -> Vec<ImageMethod> {
    let specs = [
        RegularizerSpec::l1(),
        RegularizerSpec::sef(1.0).expect("valid"),
        RegularizerSpec::renyi(0.9, 1.1).expect("valid"),
        RegularizerSpec::lpp(0.8).expect("valid"),
    ];
    specs
        .into_iter()
        .zip(DESK_IMAGE_LAMBDA)
        .map(|(spec, lambda)| ImageMethod {
            name: spec.penalty().name().to_string(),
            solver: ImageSolverConfig::new(spec, lambda),
            init_from_l1: spec.penalty() != Penalty::L1,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageExperiment {
    pub sigmas: Vec<f64>,
    /// Noise scale on the [0, 1] intensity range.
    pub nu: f64,
    pub methods: Vec<ImageMethod>,
    pub master_seed: u64,
    /// Wavelet levels; `None` picks the default for the image side.
    pub levels: Option<usize>,
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ImageExperiment {
    pub fn desk(master_seed: u64) -> Self {
        Self {
            sigmas: vec![0.2, 0.3, 0.5],
            nu: 0.0,
            methods: default_image_methods(),
            master_seed,
            levels: None,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageReport {
    pub results: Vec<TrialResult>,
    pub measurement_snr_db: Option<f64>,
    /// Reconstructions in the order of `results`.
    pub reconstructions: Vec<GrayImage>,
}

impl ImageReport {
    pub fn psnr(&self, method: &str, sigma: f64) -> Option<f64> {
        self.results.iter().find(|r| r.method == method && r.sigma == sigma).and_then(|r| r.psnr_db)
    }
}

/// Measures `image` with an SRM at each σ and reconstructs it with every
/// method. PSNR uses peak 1 on the [0, 1] range, which equals the 8-bit PSNR
/// with peak 255.
pub fn run_image_recovery(image: &GrayImage, exp: &ImageExperiment) -> Result<ImageReport> {
    let levels = match exp.levels {
        Some(l) => l,
        None => default_levels(image.side),
    };
    validate_geometry(image.side, levels)?;
    if exp.sigmas.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
        return Err(Error::InvalidParameter("sigma must lie in (0, 1]".into()));
    }
    if !(exp.nu >= 0.0) {
        return Err(Error::InvalidParameter("noise scale must be nonnegative".into()));
    }
    let frame = make_wavelet_frame(image.side, levels)?;
    let n = image.pixels.len();
    let mut results = Vec::new();
    let mut reconstructions = Vec::new();
    let mut snr_sum = 0.0;
    for (i, &sigma) in exp.sigmas.iter().enumerate() {
        let m = ((sigma * n as f64).round() as usize).clamp(1, n);
        let seed = derive_seed(exp.master_seed, &[i as u64]);
        let sensing = make_srm(m, n, RandomSeed::new(seed, 0))?;
        let clean = sensing.apply(&image.pixels)?;
        let mut y = clean.clone();
        if exp.nu > 0.0 {
            let mut rng = RandomSeed::new(seed, NOISE_STREAM).rng();
            for v in &mut y {
                let w: f64 = StandardNormal.sample(&mut rng);
                *v += exp.nu * w;
            }
            let signal: f64 = clean.iter().map(|v| v * v).sum();
            let noise: f64 = clean.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            snr_sum += 10.0 * (signal / noise).log10();
        }
        let rows = recover_all(image, &y, &sensing, &frame, exp)?;
        for (method, recon, wall_ms) in rows {
            let rep = metrics(&image.pixels, &recon, 1.0)?;
            results.push(TrialResult {
                experiment_id: "image".into(),
                method,
                sigma,
                rho_or_m: m as f64,
                trial: 0,
                seed,
                success: rep.rel_err < 1e-3,
                rel_err: rep.rel_err,
                snr_db: rep.snr_db,
                psnr_db: Some(rep.psnr_db),
                wall_ms,
            });
            reconstructions.push(GrayImage::new(image.side, recon)?);
        }
    }
    Ok(ImageReport {
        results,
        measurement_snr_db: (exp.nu > 0.0).then(|| snr_sum / exp.sigmas.len() as f64),
        reconstructions,
    })
}

fn recover_all(
    image: &GrayImage,
    y: &[f64],
    sensing: &LinearOperator,
    frame: &LinearOperator,
    exp: &ImageExperiment,
) -> Result<Vec<(String, Vec<f64>, f64)>> {
    let ms = |t: Instant| {
        if exp.record_wall_time {
            t.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    };
    let l1_cfg =
        exp.methods.iter().find(|m| m.solver.regularizer.penalty() == Penalty::L1).map(|m| m.solver.clone());
    let needs_l1 = l1_cfg.is_some() || exp.methods.iter().any(|m| m.init_from_l1);
    let l1 = if needs_l1 {
        let cfg =
            l1_cfg.unwrap_or_else(|| ImageSolverConfig::new(RegularizerSpec::l1(), DESK_IMAGE_LAMBDA[0]));
        let t = Instant::now();
        let out = solve_analysis_image(y, sensing, frame, &cfg, None)?;
        Some((out.image, ms(t)))
    } else {
        None
    };
    debug_assert_eq!(image.pixels.len(), sensing.cols());
    exp.methods
        .iter()
        .map(|m| {
            if m.solver.regularizer.penalty() == Penalty::L1 {
                let (img, t) = l1.clone().expect("L1 solved");
                return Ok((m.name.clone(), img, t));
            }
            let start = if m.init_from_l1 { l1.as_ref().map(|(img, _)| img.as_slice()) } else { None };
            let t = Instant::now();
            let out = solve_analysis_image(y, sensing, frame, &m.solver, start)?;
            Ok((m.name.clone(), out.image, ms(t)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let img = synthetic_phantom(16);
        let mut buf = Vec::new();
        img.encode_pgm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n16 16\n255\n"));
        let back = GrayImage::decode_pgm(&buf[..]).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_rejects_bad_input() {
        assert!(GrayImage::decode_pgm(&b"P2\n2 2\n255\n1 2 3 4"[..]).is_err());
        assert!(GrayImage::decode_pgm(&b"P5\n2 3\n255\n123456"[..]).is_err());
        assert!(GrayImage::decode_pgm(&b"P5\n2 2\n255\n12"[..]).is_err());
        let ok = GrayImage::decode_pgm(&b"P5\n# comment\n2 2\n255\n\x00\x10\x20\xff"[..]).unwrap();
        assert_eq!(ok.pixels[3], 1.0);
    }

    #[test]
    fn phantom_is_deterministic_and_in_range() {
        let a = synthetic_phantom(32);
        assert_eq!(a, synthetic_phantom(32));
        assert!(a.pixels.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn full_sampling_without_penalty_is_exact() {
        let img = synthetic_phantom(16);
        let mut exp = ImageExperiment::desk(3);
        exp.sigmas = vec![1.0];
        exp.methods = vec![ImageMethod {
            name: "L1".into(),
            solver: ImageSolverConfig::new(RegularizerSpec::l1(), 0.0),
            init_from_l1: false,
        }];
        let rep = run_image_recovery(&img, &exp).unwrap();
        assert!(rep.results[0].rel_err < 1e-12);
    }

    #[test]
    fn image_nu_calibration() {
        let img = GrayImage::new(2, vec![0.5; 4]).unwrap();
        assert!((calibrate_image_nu(&img, 20.0) - 0.05).abs() < 1e-15);
    }
}

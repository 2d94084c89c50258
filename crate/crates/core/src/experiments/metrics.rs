use serde::Serialize;

use crate::error::{check_len, Error, Result};
use crate::vector::{dist2, norm2};

/// Recovery quality of x̂ against x. Infinite dB values mark exact recovery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub rel_err: f64,
    pub snr_db: f64,
    pub psnr_db: f64,
}

impl MetricReport {
    pub fn exact(&self) -> bool {
        self.rel_err == 0.0
    }
}

/// RelErr = ‖x − x̂‖/‖x‖, SNR = 20 log10(1/RelErr),
/// PSNR = 10 log10(peak² N / ‖x − x̂‖²).
pub fn metrics(x_true: &[f64], x_hat: &[f64], peak: f64) -> Result<MetricReport> {
    check_len("estimate", x_true.len(), x_hat.len())?;
    let norm = norm2(x_true);
    if norm == 0.0 {
        return Err(Error::ZeroReference);
    }
    let err = dist2(x_true, x_hat);
    let rel_err = err / norm;
    let snr_db = -20.0 * rel_err.log10();
    let psnr_db = 10.0 * (peak * peak * x_true.len() as f64 / (err * err)).log10();
    Ok(MetricReport { rel_err, snr_db, psnr_db })
}

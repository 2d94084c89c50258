use serde::Serialize;

use crate::error::{check_len, Error, Result};

/// Point of the 0.5-success contour in one σ column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PtcPoint {
    pub sigma: f64,
    pub rho_half: f64,
    /// No crossing in this column; `rho_half` sits on the grid edge.
    pub clamped: bool,
}

/// Interpolated ρ at which the success rate of one column crosses 0.5.
///
/// `rates[k]` belongs to `rhos[k]` (ascending). The lowest-ρ crossing wins.
/// Columns entirely at or above 0.5 clamp to the largest ρ, columns entirely
/// below clamp to the smallest.
pub fn column_crossing(rhos: &[f64], rates: &[f64]) -> Result<(f64, bool)> {
    check_len("column rates", rhos.len(), rates.len())?;
    if rhos.is_empty() {
        return Err(Error::InvalidParameter("empty rate column".into()));
    }
    if rhos.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("rho grid must be strictly increasing".into()));
    }
    if rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::InvalidParameter("rates must lie in [0, 1]".into()));
    }
    for k in 0..rhos.len() - 1 {
        let (a, b) = (rates[k] - 0.5, rates[k + 1] - 0.5);
        if a >= 0.0 && b < 0.0 {
            let t = a / (a - b);
            return Ok((rhos[k] + t * (rhos[k + 1] - rhos[k]), false));
        }
        if a < 0.0 && b >= 0.0 {
            let t = a / (a - b);
            return Ok((rhos[k] + t * (rhos[k + 1] - rhos[k]), false));
        }
    }
    if rates[0] >= 0.5 {
        Ok((*rhos.last().expect("nonempty"), true))
    } else {
        Ok((rhos[0], true))
    }
}

/// 0.5-contour of a success-rate table, `rates[i][k]` at (`sigmas[i]`, `rhos[k]`).
pub fn extract_ptc(sigmas: &[f64], rhos: &[f64], rates: &[Vec<f64>]) -> Result<Vec<PtcPoint>> {
    check_len("rate table columns", sigmas.len(), rates.len())?;
    sigmas
        .iter()
        .zip(rates)
        .map(|(&sigma, col)| {
            let (rho_half, clamped) = column_crossing(rhos, col)?;
            Ok(PtcPoint { sigma, rho_half, clamped })
        })
        .collect()
}

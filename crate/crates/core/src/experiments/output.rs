use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

use super::grid::{CellRate, NoisyReport, PhaseTransitionReport, TrialResult};
use super::image::ImageReport;
use super::ptc::PtcPoint;

/// Header: experiment_id, method, sigma, rho_or_M, trial, seed, success,
/// rel_err, snr_db, psnr_db, wall_ms.
pub fn write_results_csv(path: &Path, results: &[TrialResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "experiment_id",
        "method",
        "sigma",
        "rho_or_M",
        "trial",
        "seed",
        "success",
        "rel_err",
        "snr_db",
        "psnr_db",
        "wall_ms",
    ])?;
    for r in results {
        w.serialize((
            &r.experiment_id,
            &r.method,
            r.sigma,
            r.rho_or_m,
            r.trial,
            r.seed,
            r.success,
            r.rel_err,
            r.snr_db,
            r.psnr_db,
            r.wall_ms,
        ))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rates_csv(path: &Path, rates: &[CellRate]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "sigma", "rho", "successes", "trials", "rate"])?;
    for c in rates {
        w.serialize((&c.method, c.sigma, c.rho, c.successes, c.trials, c.rate()))?;
    }
    w.flush()?;
    Ok(())
}

/// Header: method, sigma, rho_half.
pub fn write_ptc_csv(path: &Path, contours: &[(String, Vec<PtcPoint>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "sigma", "rho_half"])?;
    for (method, points) in contours {
        for p in points {
            w.serialize((method, p.sigma, p.rho_half))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot data files for a phase-transition run: `rates.dat` (one block per
/// method, blank-line separated rows per σ) and `ptc.dat` (one indexed block
/// per method with sigma, rho_half, clamped).
pub fn write_ptc_plot_data(dir: &Path, report: &PhaseTransitionReport) -> Result<()> {
    let mut rates = String::new();
    let mut methods: Vec<&str> = Vec::new();
    for c in &report.rates {
        if !methods.contains(&c.method.as_str()) {
            methods.push(&c.method);
        }
    }
    for (k, method) in methods.iter().enumerate() {
        if k > 0 {
            rates.push_str("\n\n");
        }
        writeln!(rates, "# {method}: sigma rho rate").expect("string write");
        let mut last_sigma = None;
        for c in report.rates.iter().filter(|c| c.method == *method) {
            if last_sigma.is_some_and(|s| s != c.sigma) {
                rates.push('\n');
            }
            last_sigma = Some(c.sigma);
            writeln!(rates, "{} {} {}", c.sigma, c.rho, c.rate()).expect("string write");
        }
    }
    fs::write(dir.join("rates.dat"), rates)?;

    let mut ptc = String::new();
    for (k, (method, points)) in report.contours.iter().enumerate() {
        if k > 0 {
            ptc.push_str("\n\n");
        }
        writeln!(ptc, "# {method}: sigma rho_half clamped").expect("string write");
        for p in points {
            writeln!(ptc, "{} {} {}", p.sigma, p.rho_half, u8::from(p.clamped)).expect("string write");
        }
    }
    fs::write(dir.join("ptc.dat"), ptc)?;
    Ok(())
}

/// `snr.dat`: sigma followed by one mean-SNR column per method.
pub fn write_noisy_plot_data(dir: &Path, report: &NoisyReport) -> Result<()> {
    let mut methods: Vec<&str> = Vec::new();
    let mut sigmas: Vec<f64> = Vec::new();
    for (m, s, _) in &report.mean_snr {
        if !methods.contains(&m.as_str()) {
            methods.push(m);
        }
        if !sigmas.contains(s) {
            sigmas.push(*s);
        }
    }
    let mut out = format!("# sigma {}\n", methods.join(" "));
    for s in sigmas {
        let row: Vec<String> =
            methods.iter().map(|m| report.mean(m, s).map_or("nan".into(), |v| v.to_string())).collect();
        writeln!(out, "{s} {}", row.join(" ")).expect("string write");
    }
    fs::write(dir.join("snr.dat"), out)?;
    Ok(())
}

/// `psnr.dat`: sigma followed by one PSNR column per method.
pub fn write_image_plot_data(dir: &Path, report: &ImageReport) -> Result<()> {
    let mut methods: Vec<&str> = Vec::new();
    let mut sigmas: Vec<f64> = Vec::new();
    for r in &report.results {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if !sigmas.contains(&r.sigma) {
            sigmas.push(r.sigma);
        }
    }
    let mut out = format!("# sigma {}\n", methods.join(" "));
    for s in sigmas {
        let row: Vec<String> =
            methods.iter().map(|m| report.psnr(m, s).map_or("nan".into(), |v| v.to_string())).collect();
        writeln!(out, "{s} {}", row.join(" ")).expect("string write");
    }
    fs::write(dir.join("psnr.dat"), out)?;
    Ok(())
}

/// Everything needed to rerun an experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<C: Serialize, S: Serialize> {
    pub experiment: String,
    pub version: String,
    pub master_seed: u64,
    pub config: C,
    pub summary: S,
}

impl<C: Serialize, S: Serialize> RunManifest<C, S> {
    pub fn new(experiment: &str, master_seed: u64, config: C, summary: S) -> Self {
        Self {
            experiment: experiment.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed,
            config,
            summary,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let row = TrialResult {
            experiment_id: "ptc".into(),
            method: "SEF".into(),
            sigma: 0.5,
            rho_or_m: 0.15,
            trial: 3,
            seed: 42,
            success: true,
            rel_err: 1e-6,
            snr_db: 120.0,
            psnr_db: None,
            wall_ms: 0.0,
        };
        write_results_csv(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment_id,method,sigma,rho_or_M,trial,seed,success,rel_err,snr_db,psnr_db,wall_ms"
        );
        assert_eq!(lines.next().unwrap(), "ptc,SEF,0.5,0.15,3,42,true,1e-6,120.0,,0.0");
    }
}

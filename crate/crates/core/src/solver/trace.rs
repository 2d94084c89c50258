use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// One accepted outer iterate. `outer_iter == 0` records the state at the
/// start of a λ phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub phase: usize,
    pub outer_iter: usize,
    pub lambda: f64,
    pub objective: f64,
    pub data_term: f64,
    pub penalty_term: f64,
    pub inner_iters: usize,
    #[serde(skip)]
    pub step_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
    pub kappa: f64,
    pub converged: bool,
    pub restarts: usize,
    pub notes: Vec<String>,
}

impl SolverTrace {
    pub fn total_outer_iters(&self) -> usize {
        self.records.iter().filter(|r| r.outer_iter > 0).count()
    }

    pub fn phases(&self) -> usize {
        self.records.last().map_or(0, |r| r.phase + 1)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    /// CSV with columns phase, outer_iter, lambda, objective, data_term,
    /// penalty_term, inner_iters.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Largest relative objective increase between consecutive records of the
    /// same phase (≤ 0 when the trace is monotone).
    pub fn max_relative_increase(&self) -> f64 {
        self.records
            .windows(2)
            .filter(|w| w[0].phase == w[1].phase)
            .map(|w| (w[1].objective - w[0].objective) / w[0].objective.abs().max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_header_and_rows() {
        let trace = SolverTrace {
            records: vec![TraceRecord {
                phase: 0,
                outer_iter: 1,
                lambda: 0.5,
                objective: 2.0,
                data_term: 1.5,
                penalty_term: 1.0,
                inner_iters: 3,
                step_norm: 0.1,
            }],
            ..Default::default()
        };
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "phase,outer_iter,lambda,objective,data_term,penalty_term,inner_iters"
        );
        assert_eq!(lines.next().unwrap(), "0,1,0.5,2.0,1.5,1.0,3");
    }
}

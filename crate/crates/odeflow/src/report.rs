//! CSV records written by the experiments.

use std::io::Write;

use serde::Serialize;

/// One fixed-step convergence run. Header:
/// `stepper,dt,steps,l_inf,l_2,seconds`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub stepper: String,
    pub dt: f64,
    pub steps: usize,
    pub l_inf: f64,
    pub l_2: f64,
    pub seconds: f64,
}

impl ConvergenceRecord {
    pub fn is_finite(&self) -> bool {
        self.l_inf.is_finite() && self.l_2.is_finite()
    }
}

/// One timed run of the scaling experiment. Header: `workers,run,seconds`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRecord {
    pub workers: usize,
    pub run: usize,
    pub seconds: f64,
}

/// Per-step wall time of a Gray-Scott run. Header: `step,t,seconds`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub seconds: f64,
}

/// Range and spread of one field at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSummary {
    pub field: String,
    pub min: f64,
    pub max: f64,
    pub variance: f64,
}

pub fn write_csv<W: Write, R: Serialize>(w: W, records: &[R]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

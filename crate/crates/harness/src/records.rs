//! Per-iteration training records and their CSV form.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Termination label of the iteration-0 row.
pub const INIT: &str = "init";
/// Termination label of the row written when the loss goes non-finite.
pub const DIVERGED: &str = "diverged";
/// Termination label of a batch skipped on a numeric failure.
pub const NUMERIC_FAILURE: &str = "numeric_failure";
/// Termination label of first-order steps.
pub const FIRST_ORDER: &str = "first_order";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub iteration: usize,
    pub epoch: usize,
    pub batch_loss: f64,
    /// Present when the global loss was recomputed after this iteration.
    pub global_loss: Option<f64>,
    pub eta: f64,
    pub gamma: f64,
    pub cg_iters: usize,
    pub termination: String,
    pub adjust_attempts: usize,
    pub wall_ms: f64,
}

impl RunRecord {
    pub fn is_step(&self) -> bool {
        self.termination != INIT && self.termination != DIVERGED
    }
}

/// Writes records with a header row; floats use the shortest decimal that
/// parses back to the same value.
pub fn write_records<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut records = Vec::new();
    for row in r.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

pub fn write_records_file(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_records(records, file)
}

pub fn read_records_file(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    read_records(file)
}

/// Last recorded global loss.
pub fn final_global_loss(records: &[RunRecord]) -> Option<f64> {
    records.iter().rev().find_map(|r| r.global_loss)
}

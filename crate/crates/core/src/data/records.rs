//! Experiment records as CSV with the header
//! `algo,b,gamma,seed,iters,grad_evals,rel_subopt`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const RECORD_HEADER: [&str; 7] = ["algo", "b", "gamma", "seed", "iters", "grad_evals", "rel_subopt"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub algo: String,
    pub b: usize,
    pub gamma: f64,
    pub seed: u64,
    pub iters: u64,
    /// In units of one component gradient; fractional for coordinate methods.
    pub grad_evals: f64,
    pub rel_subopt: f64,
}

/// 17 significant digits, so every finite value parses back exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_records<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.algo.clone(),
            r.b.to_string(),
            fmt_f64(r.gamma),
            r.seed.to_string(),
            r.iters.to_string(),
            fmt_f64(r.grad_evals),
            fmt_f64(r.rel_subopt),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_string(records: &[ExperimentRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<ExperimentRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

//! Row types and their CSV / JSON encodings.
//!
//! CSV rows carry only the value columns; JSON wraps each row in a record
//! that also names its kind, the deck size and the decimal precision.

use std::io::Write;

use serde::{Deserialize, Serialize};
use shelfmix_core::exactnum::{rat_to_decimal, BigRat};
use shelfmix_core::tvmetrics::REPORT_PLACES;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One `(n, m)` evaluation. Header names are part of the interface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TvRow {
    pub m: u64,
    pub tv_exact: Option<String>,
    pub tv_asymptotic: Option<String>,
    pub argmax_k: Option<usize>,
    pub delta_minus: Option<String>,
    pub delta_plus: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingRow {
    pub n: usize,
    pub m: u64,
    pub eps: String,
    pub repeats: u32,
    pub effective_shelves: Option<u64>,
    pub witness_tv: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulateRow {
    pub n: usize,
    pub m: u64,
    pub samples: u64,
    pub seed: u64,
    pub tv_empirical: String,
    pub tv_exact: String,
    pub tolerance: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub theta: String,
    pub passes: String,
    pub tv_asymptotic: String,
}

/// JSON envelope: `{"kind": .., "n": .., "places": 5, <row fields>}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record<R> {
    pub kind: String,
    pub n: usize,
    pub places: usize,
    #[serde(flatten)]
    pub row: R,
}

impl<R> Record<R> {
    pub fn new(kind: &str, n: usize, row: R) -> Self {
        Self {
            kind: kind.to_string(),
            n,
            places: REPORT_PLACES,
            row,
        }
    }
}

pub fn decimal(x: &BigRat) -> String {
    rat_to_decimal(x, REPORT_PLACES)
}

/// Half-up rendering of the exact binary value of `x`.
pub fn float_decimal(x: f64) -> Result<String, CliError> {
    BigRat::from_float(x)
        .map(|r| decimal(&r))
        .ok_or_else(|| CliError::Invariant(format!("non-finite value {x}")))
}

pub fn write_rows<R: Serialize + Clone>(
    out: &mut dyn Write,
    format: Format,
    kind: &str,
    n: usize,
    rows: &[R],
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let records: Vec<Record<R>> = rows
                .iter()
                .map(|r| Record::new(kind, n, r.clone()))
                .collect();
            serde_json::to_writer_pretty(&mut *out, &records)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

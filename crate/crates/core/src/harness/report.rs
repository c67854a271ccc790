//! Flat exports of a run: the full record as JSON and a long-format CSV.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::RunRecord;
use crate::distortion::DistortionTable;
use crate::Result;

/// One measured quantity; `r` and `s` are empty where they do not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub seed: u64,
    pub kappa: i64,
    pub r: Option<usize>,
    pub s: Option<usize>,
    pub quantity: String,
    pub value: f64,
    pub samples: usize,
}

impl CsvRow {
    fn new(seed: u64, kappa: i64, quantity: &str, value: f64, samples: usize) -> Self {
        Self { seed, kappa, r: None, s: None, quantity: quantity.to_string(), value, samples }
    }

    fn at(mut self, r: usize, s: Option<usize>) -> Self {
        self.r = Some(r);
        self.s = s;
        self
    }
}

pub fn table_rows(table: &DistortionTable) -> Vec<CsvRow> {
    let seed = table.params.seed;
    let mut out = Vec::new();
    for row in &table.rows {
        let k = row.kappa;
        let chords = row.type1_samples + row.type2_samples;
        let pairs: usize = row.pair_cells.iter().map(|c| c.samples).sum();
        let n_tilde = row.windows.n_tilde;
        let mut push = |name: &str, v: f64, n: usize| out.push(CsvRow::new(seed, k, name, v, n));
        push("lambda_i", row.lambda_i, chords);
        push("lambda_ii", row.lambda_ii, row.type2_samples);
        push("k0_tilde", row.k0_tilde, row.type2_samples);
        push("grad1", row.grad1, pairs);
        push("grad2", row.grad2, row.quadruple_samples);
        if let Some(slope) = row.kappa1_slope {
            push("kappa1_slope", slope, row.kappa1.len());
        }
        push("g_modulus", row.g_modulus, row.quadruple_samples);
        push("k2_ratio", row.k2_ratio, row.quadruple_samples);
        push("rational_gap", row.rational_gap, 0);
        push("averaging_gap", row.averaging.max_gap, row.averaging.checked);
        push("identity_defect", row.identities.max(), row.identities.probes);
        push("drop_fraction", row.drops.fraction(), row.drops.requested as usize);
        for c in &row.pair_cells {
            out.push(CsvRow::new(seed, k, "k1_tilde", c.k1_tilde, c.samples).at(c.r, None));
            out.push(CsvRow::new(seed, k, "grad1_cell", c.grad1, c.samples).at(c.r, None));
        }
        for v in &row.kappa1 {
            out.push(CsvRow::new(seed, k, "kappa1", v.value, 1).at(v.index, None));
        }
        for v in &row.k0_by_n {
            out.push(CsvRow::new(seed, k, "k0", v.value, 1).at(v.index, None));
        }
        out.push(CsvRow::new(seed, k, "grad2_cell", row.grad2, row.quadruple_samples).at(n_tilde, Some(n_tilde)));
    }
    out
}

pub fn record_rows(record: &RunRecord) -> Vec<CsvRow> {
    record.tables.iter().flat_map(table_rows).collect()
}

pub fn write_csv(rows: &[CsvRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    rd.deserialize().map(|r| r.map_err(csv_err)).collect()
}

/// Writes `<stem>.json` and `<stem>.csv` into `dir`.
pub fn export(record: &RunRecord, dir: &Path, stem: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(record)?;
    std::fs::write(dir.join(format!("{stem}.json")), json)?;
    write_csv(&record_rows(record), &dir.join(format!("{stem}.csv")))
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Serde(e.to_string())
}

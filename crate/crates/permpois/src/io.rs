//! CSV and JSON file formats.
//!
//! * results: `scenario,kind_params,n,method,K,N_perm,rejections,rate,ci_lo,ci_hi,n_failed,master_seed`
//! * bias: `n,replicate,bias`
//! * datasets: `y,x1[,x2_hidden]`
//! * run manifest: JSON

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use permpois_core::harness::{BiasRecord, TypeIErrorEstimate};
use permpois_core::scenarios::Dataset;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 12] = [
    "scenario",
    "kind_params",
    "n",
    "method",
    "K",
    "N_perm",
    "rejections",
    "rate",
    "ci_lo",
    "ci_hi",
    "n_failed",
    "master_seed",
];

pub const BIAS_HEADER: [&str; 3] = ["n", "replicate", "bias"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scenario: String,
    pub kind_params: String,
    pub n: usize,
    pub method: String,
    #[serde(rename = "K")]
    pub k: u32,
    #[serde(rename = "N_perm")]
    pub n_perm: u32,
    pub rejections: u32,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_failed: u32,
    pub master_seed: u64,
}

impl ResultRow {
    pub fn from_estimate(e: &TypeIErrorEstimate, master_seed: u64) -> Self {
        ResultRow {
            scenario: e.scenario.kind().name().to_string(),
            kind_params: e.scenario.params_label(),
            n: e.n,
            method: e.method.name().to_string(),
            k: e.k,
            n_perm: e.n_perm,
            rejections: e.rejections,
            rate: e.rate,
            ci_lo: e.ci_lo,
            ci_hi: e.ci_hi,
            n_failed: e.n_failed,
            master_seed,
        }
    }

    /// Series key used by plots: one curve per setting and method.
    pub fn series(&self) -> (String, String) {
        (format!("{} {}", self.scenario, self.kind_params), self.method.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub n: usize,
    pub replicate: u32,
    pub bias: f64,
}

impl From<&BiasRecord> for BiasRow {
    fn from(r: &BiasRecord) -> Self {
        BiasRow { n: r.n, replicate: r.replicate, bias: r.bias }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

pub fn write_rows<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results(path: &Path, estimates: &[TypeIErrorEstimate], master_seed: u64) -> Result<()> {
    let rows: Vec<ResultRow> = estimates.iter().map(|e| ResultRow::from_estimate(e, master_seed)).collect();
    write_rows(create(path)?, &rows).map_err(csv_err(path))
}

pub fn write_bias(path: &Path, records: &[BiasRecord]) -> Result<()> {
    let rows: Vec<BiasRow> = records.iter().map(BiasRow::from).collect();
    write_rows(create(path)?, &rows).map_err(csv_err(path))
}

/// Which known table a CSV file holds, judged by its header.
#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Results(Vec<ResultRow>),
    Bias(Vec<BiasRow>),
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text).map_err(|e| Error::io(path, e))?;
    read_table_from(path, text.as_bytes())
}

pub fn read_table_from<R: Read>(path: &Path, reader: R) -> Result<Table> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err(path))?.iter().map(str::to_string).collect();
    let table = if header == RESULTS_HEADER {
        Table::Results(rdr.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))?)
    } else if header == BIAS_HEADER {
        Table::Bias(rdr.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))?)
    } else {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!(
                "unrecognized header {:?}; expected {} or {}",
                header.join(","),
                RESULTS_HEADER.join(","),
                BIAS_HEADER.join(",")
            ),
        });
    };
    Ok(table)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let err = csv_err(path);
    let has_x2 = data.x2_hidden.is_some();
    if has_x2 {
        w.write_record(["y", "x1", "x2_hidden"]).map_err(&err)?;
    } else {
        w.write_record(["y", "x1"]).map_err(&err)?;
    }
    for i in 0..data.len() {
        let mut rec = vec![data.y[i].to_string(), data.x1[i].to_string()];
        if let Some(x2) = &data.x2_hidden {
            rec.push(x2[i].to_string());
        }
        w.write_record(&rec).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    read_dataset_from(path, open(path)?)
}

/// Reads `y` and `x1` (and `x2_hidden` if present); other columns are ignored.
pub fn read_dataset_from<R: Read>(path: &Path, reader: R) -> Result<Dataset> {
    let schema = |message: String| Error::Schema { path: path.to_path_buf(), message };
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(csv_err(path))?.clone();
    let column = |name: &str| header.iter().position(|h| h.trim() == name);
    let y_col = column("y").ok_or_else(|| schema("missing column `y`".into()))?;
    let x_col = column("x1").ok_or_else(|| schema("missing column `x1`".into()))?;
    let x2_col = column("x2_hidden");

    let (mut y, mut x1, mut x2) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let line = i + 2;
        let field = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
        let yv: u64 = field(y_col)
            .parse()
            .map_err(|_| schema(format!("line {line}: y must be a nonnegative integer, got {:?}", field(y_col))))?;
        let xv: f64 = field(x_col)
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| schema(format!("line {line}: x1 must be a finite number, got {:?}", field(x_col))))?;
        y.push(yv);
        x1.push(xv);
        if let Some(c) = x2_col {
            x2.push(field(c).parse::<f64>().unwrap_or(f64::NAN));
        }
    }
    let mut data = Dataset::new(y, x1)?;
    if x2_col.is_some() {
        data.x2_hidden = Some(x2);
    }
    Ok(data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub grid: Vec<usize>,
    pub total_fits: u64,
    pub failed_fits: u64,
    pub threads: usize,
    pub wall_seconds: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

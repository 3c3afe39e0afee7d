//! CSV dataset format and JSON configuration files.
//!
//! The dataset format has header `s1,…,sd,p1,…,pp`, one sample per row,
//! with d and p inferred from the header. Site-only files carry just the
//! `s*` columns.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::covariance::CovModel;
use crate::datagen::GeneratorSpec;
use crate::error::{Error, Result};
use crate::simplex::{Composition, CompositionalDataset, SiteSet};

/// Row-sum slack accepted in strict mode.
pub const STRICT_SUM_TOL: f64 = 1e-9;

fn parse_header(headers: &csv::StringRecord) -> Result<(usize, usize)> {
    let mut d = 0usize;
    let mut p = 0usize;
    for (idx, name) in headers.iter().enumerate() {
        let name = name.trim();
        if p == 0 && name == format!("s{}", d + 1) {
            d += 1;
        } else if name == format!("p{}", p + 1) {
            p += 1;
        } else {
            return Err(Error::Csv(format!(
                "column {}: expected `s1,…,sd,p1,…,pp` order, got `{name}`",
                idx + 1
            )));
        }
    }
    if p == 0 && d == 0 {
        return Err(Error::Csv("empty header".into()));
    }
    Ok((d, p))
}

fn parse_row(record: &csv::StringRecord, line: usize, width: usize) -> Result<Vec<f64>> {
    if record.len() != width {
        return Err(Error::Csv(format!(
            "line {line}: expected {width} fields, got {}",
            record.len()
        )));
    }
    record
        .iter()
        .enumerate()
        .map(|(col, field)| {
            field.trim().parse::<f64>().map_err(|_| {
                Error::Csv(format!("line {line}, column {}: bad number `{field}`", col + 1))
            })
        })
        .collect()
}

/// Reads a full dataset (sites + parts). Strict mode rejects rows whose
/// parts sum deviates from one by more than 1e-9.
pub fn read_dataset<R: Read>(reader: R, strict: bool) -> Result<CompositionalDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let (d, p) = parse_header(rdr.headers().map_err(|e| Error::Csv(e.to_string()))?)?;
    if p == 0 {
        return Err(Error::Csv("no part columns (p1,…) in header".into()));
    }
    let mut sites = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let values = parse_row(&record, line, d + p)?;
        let parts = values[d..].to_vec();
        if strict {
            let sum: f64 = parts.iter().sum();
            if (sum - 1.0).abs() > STRICT_SUM_TOL {
                return Err(Error::Csv(format!(
                    "line {line}: parts sum to {sum:.15}, outside strict tolerance"
                )));
            }
        }
        sites.push(values[..d].to_vec());
        rows.push(Composition::new(parts)?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if d == 0 {
        CompositionalDataset::from_rows(rows)
    } else {
        CompositionalDataset::new(SiteSet::new(sites)?, rows)
    }
}

/// Reads just the site coordinates; part columns, if present, are ignored.
pub fn read_sites<R: Read>(reader: R) -> Result<SiteSet> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let (d, p) = parse_header(rdr.headers().map_err(|e| Error::Csv(e.to_string()))?)?;
    if d == 0 {
        return Err(Error::Csv("no site columns (s1,…) in header".into()));
    }
    let mut sites = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let values = parse_row(&record, i + 2, d + p)?;
        sites.push(values[..d].to_vec());
    }
    if sites.is_empty() {
        return Err(Error::EmptyDataset);
    }
    SiteSet::new(sites)
}

/// Writes a dataset in the canonical format.
pub fn write_dataset<W: Write>(writer: W, ds: &CompositionalDataset) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let d = ds.sites().dim();
    let p = ds.part_count();
    let header: Vec<String> = (1..=d)
        .map(|i| format!("s{i}"))
        .chain((1..=p).map(|k| format!("p{k}")))
        .collect();
    wtr.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for (site, row) in ds.sites().sites().iter().zip(ds.rows()) {
        let record: Vec<String> = site
            .iter()
            .chain(row.parts())
            .map(|v| format!("{v:.17}"))
            .collect();
        wtr.write_record(&record).map_err(|e| Error::Csv(e.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads unconstrained coordinate rows (header `c1,…,cm`), as produced by
/// the forward log-ratio transform.
pub fn read_coords<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    let m = headers.len();
    for (idx, name) in headers.iter().enumerate() {
        if name.trim() != format!("c{}", idx + 1) {
            return Err(Error::Csv(format!(
                "column {}: expected `c{}`, got `{name}`",
                idx + 1,
                idx + 1
            )));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        rows.push(parse_row(&record, i + 2, m)?);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(rows)
}

pub fn read_dataset_file(path: &Path, strict: bool) -> Result<CompositionalDataset> {
    read_dataset(File::open(path)?, strict)
}

pub fn read_sites_file(path: &Path) -> Result<SiteSet> {
    read_sites(File::open(path)?)
}

pub fn read_coords_file(path: &Path) -> Result<Vec<Vec<f64>>> {
    read_coords(File::open(path)?)
}

pub fn write_dataset_file(path: &Path, ds: &CompositionalDataset) -> Result<()> {
    write_dataset(File::create(path)?, ds)
}

/// Parses a covariance model config and revalidates it through the checked
/// constructors.
pub fn read_model(text: &str) -> Result<CovModel> {
    let model: CovModel = serde_json::from_str(text)?;
    match model {
        CovModel::Proportional { sigma, rho } => CovModel::proportional(sigma, rho),
        CovModel::Lmc { terms } => CovModel::lmc(terms),
    }
}

pub fn read_model_file(path: &Path) -> Result<CovModel> {
    read_model(&std::fs::read_to_string(path)?)
}

pub fn read_generator_spec(text: &str) -> Result<GeneratorSpec> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_generator_spec_file(path: &Path) -> Result<GeneratorSpec> {
    read_generator_spec(&std::fs::read_to_string(path)?)
}

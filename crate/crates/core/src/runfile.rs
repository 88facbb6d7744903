//! Prediction run files (`id,labels`) and the LLM reasoning sidecar
//! (`id,reasoning,warnings`).

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::corpus::Dataset;
use crate::error::CorpusError;
use crate::labels::LabelSet;

pub const RUN_HEADER: [&str; 2] = ["id", "labels"];
pub const SIDECAR_HEADER: [&str; 3] = ["id", "reasoning", "warnings"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRow {
    pub id: String,
    pub labels: LabelSet,
}

pub fn write_run<W: Write>(rows: &[RunRow], out: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_HEADER)?;
    for r in rows {
        w.write_record([r.id.as_str(), r.labels.to_string().as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_run<R: Read>(input: R, path: &Path) -> Result<Vec<RunRow>, CorpusError> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if !header.iter().map(String::as_str).eq(RUN_HEADER) {
        return Err(CorpusError::Header {
            path: path.to_path_buf(),
            expected: RUN_HEADER.join(","),
            found: header.join(","),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i as u64 + 1;
        let rec = rec.map_err(|e| CorpusError::Malformed {
            row,
            message: e.to_string(),
        })?;
        let labels = LabelSet::parse_encoded(&rec[1]).map_err(|e| CorpusError::UnknownLabel {
            row,
            token: e.to_string(),
        })?;
        rows.push(RunRow {
            id: rec[0].to_string(),
            labels,
        });
    }
    Ok(rows)
}

pub fn load_run(path: &Path) -> Result<Vec<RunRow>, CorpusError> {
    let f = std::fs::File::open(path).map_err(|source| CorpusError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    read_run(f, path)
}

/// Predictions reordered to follow `gold`; every id must match exactly once.
pub fn align(
    gold: &Dataset,
    run: &[RunRow],
) -> Result<(Vec<LabelSet>, Vec<LabelSet>), CorpusError> {
    let mut by_id: HashMap<&str, LabelSet> = HashMap::with_capacity(run.len());
    for r in run {
        if by_id.insert(r.id.as_str(), r.labels).is_some() {
            return Err(CorpusError::Alignment(format!(
                "id `{}` appears twice",
                r.id
            )));
        }
    }
    if by_id.len() != gold.len() {
        return Err(CorpusError::Alignment(format!(
            "{} predictions for {} gold records",
            by_id.len(),
            gold.len()
        )));
    }
    let mut g = Vec::with_capacity(gold.len());
    let mut p = Vec::with_capacity(gold.len());
    for r in &gold.records {
        let pred = by_id
            .get(r.id.as_str())
            .ok_or_else(|| CorpusError::Alignment(format!("no prediction for `{}`", r.id)))?;
        g.push(
            r.gold
                .ok_or_else(|| CorpusError::Unlabeled { id: r.id.clone() })?,
        );
        p.push(*pred);
    }
    Ok((g, p))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SidecarRow {
    pub id: String,
    pub reasoning: String,
    pub warnings: Vec<String>,
}

pub fn write_sidecar<W: Write>(rows: &[SidecarRow], out: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SIDECAR_HEADER)?;
    for r in rows {
        w.write_record([
            r.id.as_str(),
            r.reasoning.as_str(),
            r.warnings.join("; ").as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

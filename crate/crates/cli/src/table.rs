//! CSV and JSON artifact readers and writers.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::de::DeserializeOwned;
use serde::Serialize;
use veriscope_core::{FeatureVector, LabeledDataset, Provenance};

use crate::error::{runtime, Result};

/// A feature matrix as stored on disk: `user_id, label, <features>, missing`
/// and, for resampled training sets, a trailing `provenance` column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub ids: Vec<String>,
    pub labels: Vec<bool>,
    pub rows: Vec<Vec<f64>>,
    /// Registry-aligned 0/1 string; empty for synthetic rows.
    pub missing: Vec<String>,
    pub provenance: Option<Vec<Provenance>>,
}

impl FeatureTable {
    pub fn from_vectors(names: Vec<String>, vectors: &[FeatureVector]) -> Self {
        Self {
            names,
            ids: vectors.iter().map(|v| v.user_id.clone()).collect(),
            labels: vectors.iter().map(|v| v.label).collect(),
            rows: vectors.iter().map(|v| v.values.clone()).collect(),
            missing: vectors.iter().map(FeatureVector::missing_string).collect(),
            provenance: None,
        }
    }

    /// Resampled output; originals keep their masks from `masks`.
    pub fn from_resampled(ds: &LabeledDataset, masks: &BTreeMap<String, String>) -> Self {
        Self {
            names: ds.feature_names.clone(),
            ids: ds.ids.clone(),
            labels: ds.labels.clone(),
            rows: ds.rows.clone(),
            missing: ds
                .ids
                .iter()
                .zip(&ds.provenance)
                .map(|(id, p)| match p {
                    Provenance::Original => masks.get(id).cloned().unwrap_or_default(),
                    Provenance::Synthetic => String::new(),
                })
                .collect(),
            provenance: Some(ds.provenance.clone()),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn dataset(&self) -> LabeledDataset {
        LabeledDataset {
            feature_names: self.names.clone(),
            ids: self.ids.clone(),
            rows: self.rows.clone(),
            labels: self.labels.clone(),
            provenance: self
                .provenance
                .clone()
                .unwrap_or_else(|| vec![Provenance::Original; self.len()]),
        }
    }

    /// Rows whose id satisfies `keep`, in table order.
    pub fn filter(&self, keep: impl Fn(&str) -> bool) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(&self.ids[i])).collect();
        Self {
            names: self.names.clone(),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            missing: idx.iter().map(|&i| self.missing[i].clone()).collect(),
            provenance: self.provenance.as_ref().map(|p| idx.iter().map(|&i| p[i]).collect()),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(runtime)?;
        let mut header = vec!["user_id".to_string(), "label".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("missing".into());
        if self.provenance.is_some() {
            header.push("provenance".into());
        }
        w.write_record(&header).map_err(runtime)?;
        for i in 0..self.len() {
            let mut rec = vec![self.ids[i].clone(), bit(self.labels[i]).to_string()];
            rec.extend(self.rows[i].iter().map(f64::to_string));
            rec.push(self.missing[i].clone());
            if let Some(p) = &self.provenance {
                rec.push(p[i].as_str().to_string());
            }
            w.write_record(&rec).map_err(runtime)?;
        }
        w.flush().map_err(runtime)
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_table(path).with_context(|| format!("reading {}", path.display())).map_err(runtime)
    }
}

fn read_table(path: &Path) -> anyhow::Result<FeatureTable> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let has_prov = header.last().map(String::as_str) == Some("provenance");
    let tail = if has_prov { 2 } else { 1 };
    if header.len() < 2 + tail || header[0] != "user_id" || header[1] != "label" || header[header.len() - tail] != "missing" {
        bail!("unexpected header");
    }
    let names = header[2..header.len() - tail].to_vec();
    let mut t = FeatureTable {
        names,
        ids: Vec::new(),
        labels: Vec::new(),
        rows: Vec::new(),
        missing: Vec::new(),
        provenance: has_prov.then(Vec::new),
    };
    for rec in r.records() {
        let rec = rec?;
        t.ids.push(rec[0].to_string());
        t.labels.push(parse_bit(&rec[1])?);
        let row = (2..header.len() - tail)
            .map(|j| rec[j].parse::<f64>().map_err(|e| anyhow!("column {}: {e}", header[j])))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        t.rows.push(row);
        t.missing.push(rec[header.len() - tail].to_string());
        if let Some(p) = &mut t.provenance {
            p.push(match &rec[header.len() - 1] {
                "original" => Provenance::Original,
                "synthetic" => Provenance::Synthetic,
                other => bail!("unknown provenance {other:?}"),
            });
        }
    }
    Ok(t)
}

pub fn bit(b: bool) -> u8 {
    u8::from(b)
}

fn parse_bit(s: &str) -> anyhow::Result<bool> {
    match s {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => bail!("expected 0 or 1, got {s:?}"),
    }
}

/// user_id -> true for the test partition.
pub fn write_split(path: &Path, ids: &[String], test: &[bool]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    w.write_record(["user_id", "partition"]).map_err(runtime)?;
    for (id, &t) in ids.iter().zip(test) {
        w.write_record([id.as_str(), if t { "test" } else { "train" }]).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

pub fn read_split(path: &Path) -> Result<BTreeMap<String, bool>> {
    let rows: Vec<(String, String)> = read_rows(path)?;
    rows.into_iter()
        .map(|(id, p)| match p.as_str() {
            "test" => Ok((id, true)),
            "train" => Ok((id, false)),
            other => Err(runtime(anyhow!("{}: unknown partition {other:?}", path.display()))),
        })
        .collect()
}

/// Serde rows from a headed CSV file.
pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(runtime)?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(runtime)
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    for row in rows {
        w.serialize(row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

/// Raw records with an explicit header, for column counts known only at run
/// time.
pub fn write_records(path: &Path, header: &[String], records: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    w.write_record(header).map_err(runtime)?;
    for rec in records {
        w.write_record(&rec).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(runtime)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(runtime)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(runtime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_table_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = FeatureTable {
            names: vec!["a".into(), "b c".into()],
            ids: vec!["u1".into(), "synthetic-000001".into()],
            labels: vec![true, false],
            rows: vec![vec![0.1 + 0.2, -1e-300], vec![f64::MAX, 3.0]],
            missing: vec!["01".into(), String::new()],
            provenance: Some(vec![Provenance::Original, Provenance::Synthetic]),
        };
        t.write(&path).unwrap();
        assert_eq!(FeatureTable::read(&path).unwrap(), t);
        let plain = FeatureTable { provenance: None, ..t };
        plain.write(&path).unwrap();
        assert_eq!(FeatureTable::read(&path).unwrap(), plain);
    }

    #[test]
    fn split_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let ids = vec!["a".to_string(), "b".to_string()];
        write_split(&path, &ids, &[true, false]).unwrap();
        let s = read_split(&path).unwrap();
        assert!(s["a"]);
        assert!(!s["b"]);
    }
}

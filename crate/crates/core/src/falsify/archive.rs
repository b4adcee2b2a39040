//! Archive persistence: one CSV row per evaluation plus a JSON header.

use std::io;

use serde::{Deserialize, Serialize};

use super::{Archive, FalsifyError, FeatureSpace, SearchConfig};
use crate::risk_model::Domain;
use crate::sim::{FeatureAssignment, FeatureValue, Label, Verdict};
use crate::Real;

/// Outcome types that can be written as an archive row.
pub trait Labelled {
    fn label(&self) -> Label;
    /// Names of the triggered events, sorted.
    fn triggered(&self) -> Vec<String>;
}

impl Labelled for Verdict {
    fn label(&self) -> Label {
        self.label
    }

    fn triggered(&self) -> Vec<String> {
        self.per_event
            .iter()
            .filter(|(_, o)| o.triggered)
            .map(|(n, _)| n.clone())
            .collect()
    }
}

/// An outcome read back from an archive CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub label: Label,
    pub triggered: Vec<String>,
}

impl Labelled for ArchiveRecord {
    fn label(&self) -> Label {
        self.label
    }

    fn triggered(&self) -> Vec<String> {
        self.triggered.clone()
    }
}

pub type LoadedArchive = Archive<ArchiveRecord>;

/// Provenance of an archive CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    pub situation: String,
    pub event: String,
    pub features: Vec<String>,
    pub search: SearchConfig,
    pub seeds: Vec<u64>,
    pub model_digest: String,
    pub scenario_digest: String,
    pub evaluations: usize,
    pub violations: usize,
    pub best: Option<usize>,
}

const FIXED: [&str; 3] = ["robustness", "label", "triggered"];

pub fn write_archive_csv<V: Labelled, W: io::Write>(
    archive: &Archive<V>,
    space: &FeatureSpace,
    w: W,
) -> Result<(), FalsifyError> {
    let err = |e: csv::Error| FalsifyError::Archive(e.to_string());
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["index".to_string()];
    header.extend(space.names().map(str::to_string));
    header.extend(FIXED.iter().map(|s| s.to_string()));
    out.write_record(&header).map_err(err)?;
    for p in &archive.points {
        let mut row = vec![p.index.to_string()];
        for d in &space.dims {
            let v = p
                .assignment
                .get(&d.name)
                .ok_or_else(|| FalsifyError::MissingFeature(d.name.clone()))?;
            row.push(v.to_string());
        }
        row.push(p.robustness.to_string());
        row.push(p.outcome.label().as_str().to_string());
        row.push(p.outcome.triggered().join(";"));
        out.write_record(&row).map_err(err)?;
    }
    out.flush().map_err(|e| FalsifyError::Archive(e.to_string()))
}

/// Read an archive CSV written for `space`.
pub fn read_archive<R: io::Read>(r: R, space: &FeatureSpace) -> Result<LoadedArchive, FalsifyError> {
    let bad = |m: String| FalsifyError::Archive(m);
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut expected = vec!["index".to_string()];
    expected.extend(space.names().map(str::to_string));
    expected.extend(FIXED.iter().map(|s| s.to_string()));
    if header != expected {
        return Err(bad(format!(
            "columns {header:?} do not match the feature space {expected:?}"
        )));
    }
    let d = space.len();
    let mut archive = Archive::default();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let row = line + 2;
        let index: usize = rec[0]
            .parse()
            .map_err(|_| bad(format!("row {row}: bad index `{}`", &rec[0])))?;
        if index != archive.len() {
            return Err(bad(format!("row {row}: index {index} out of order")));
        }
        let mut assignment = FeatureAssignment::new();
        for (k, dim) in space.dims.iter().enumerate() {
            let raw = &rec[k + 1];
            let v = match dim.domain {
                Domain::Interval { .. } => FeatureValue::Number(raw.parse().map_err(|_| {
                    bad(format!("row {row}: `{}` is not a number: `{raw}`", dim.name))
                })?),
                Domain::Set(_) => FeatureValue::Category(raw.to_string()),
            };
            assignment.insert(dim.name.clone(), v);
        }
        let unit = space.encode(&assignment)?;
        let robustness: Real = rec[d + 1]
            .parse()
            .map_err(|_| bad(format!("row {row}: bad robustness `{}`", &rec[d + 1])))?;
        let label = Label::parse(&rec[d + 2])
            .ok_or_else(|| bad(format!("row {row}: bad label `{}`", &rec[d + 2])))?;
        let triggered = rec[d + 3]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        archive.push(unit, assignment, robustness, ArchiveRecord { label, triggered });
    }
    Ok(archive)
}

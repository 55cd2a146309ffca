//! Run reports and report comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use trisre::verify::Check;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepError {
    pub step: String,
    pub message: String,
}

/// Everything a run produced except wall time, which goes to `timing.json`
/// so that reports from identical configs compare byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub pipeline: String,
    pub config_digest: String,
    pub base_seed: u64,
    pub results: Vec<Check>,
    pub errors: Vec<StepError>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    pub pass: bool,
}

impl RunReport {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::config(format!("/{}", e.path()), e.inner().to_string()))
    }

    /// Pretty JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.results.iter().filter(|c| c.failed())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffStatus {
    WithinTol,
    Changed,
    OnlyInA,
    OnlyInB,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub name: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    /// `(b - a) / |a|`, when both exist and `a` is nonzero.
    pub relative_delta: Option<f64>,
    pub status: DiffStatus,
}

fn inside(c: &Check, v: f64) -> bool {
    c.bound_low.is_none_or(|lo| v >= lo) && c.bound_high.is_none_or(|hi| v <= hi)
}

fn has_bounds(c: &Check) -> bool {
    c.bound_low.is_some() || c.bound_high.is_some()
}

/// Records whose value or verdict differ between two reports of the same
/// pipeline. A differing value counts as within tolerance when the verdict
/// is unchanged and each value sits inside the other record's bounds, or,
/// for unbounded records, within three combined standard errors.
pub fn compare_reports(a: &RunReport, b: &RunReport) -> Result<Vec<DiffEntry>, CliError> {
    if a.pipeline != b.pipeline {
        return Err(CliError::PipelineMismatch {
            a: a.pipeline.clone(),
            b: b.pipeline.clone(),
        });
    }
    let index = |r: &RunReport| r.results.iter().map(|c| (c.name.clone(), c.clone())).collect::<BTreeMap<_, _>>();
    let (ia, ib) = (index(a), index(b));
    let mut out = Vec::new();
    for (name, ca) in &ia {
        let Some(cb) = ib.get(name) else {
            out.push(DiffEntry {
                name: name.clone(),
                a: Some(ca.value),
                b: None,
                relative_delta: None,
                status: DiffStatus::OnlyInA,
            });
            continue;
        };
        if ca.value.to_bits() == cb.value.to_bits() && ca.pass == cb.pass {
            continue;
        }
        let close = if has_bounds(ca) || has_bounds(cb) {
            inside(ca, cb.value) && inside(cb, ca.value)
        } else {
            match (ca.std_error, cb.std_error) {
                (Some(sa), Some(sb)) => (ca.value - cb.value).abs() <= 3.0 * sa.hypot(sb),
                _ => false,
            }
        };
        out.push(DiffEntry {
            name: name.clone(),
            a: Some(ca.value),
            b: Some(cb.value),
            relative_delta: (ca.value != 0.0).then(|| (cb.value - ca.value) / ca.value.abs()),
            status: if close && ca.pass == cb.pass {
                DiffStatus::WithinTol
            } else {
                DiffStatus::Changed
            },
        });
    }
    for (name, cb) in &ib {
        if !ia.contains_key(name) {
            out.push(DiffEntry {
                name: name.clone(),
                a: None,
                b: Some(cb.value),
                relative_delta: None,
                status: DiffStatus::OnlyInB,
            });
        }
    }
    Ok(out)
}

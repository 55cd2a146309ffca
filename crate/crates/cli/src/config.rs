//! Experiment configuration: one JSON document per experiment.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use trisre::verify::Scale;
use trisre::CoefficientLaw;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    SolveIndex,
    Stationarity,
    Simulate,
    Tails,
    Constants,
    Spectral,
    GarchVerify,
    FullReport,
}

impl Pipeline {
    pub const ALL: [Pipeline; 8] = [
        Pipeline::SolveIndex,
        Pipeline::Stationarity,
        Pipeline::Simulate,
        Pipeline::Tails,
        Pipeline::Constants,
        Pipeline::Spectral,
        Pipeline::GarchVerify,
        Pipeline::FullReport,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::SolveIndex => "solve_index",
            Pipeline::Stationarity => "stationarity",
            Pipeline::Simulate => "simulate",
            Pipeline::Tails => "tails",
            Pipeline::Constants => "constants",
            Pipeline::Spectral => "spectral",
            Pipeline::GarchVerify => "garch_verify",
            Pipeline::FullReport => "full_report",
        }
    }

    /// Tolerance keys the pipeline reads; all must be present.
    pub fn required_tolerances(self) -> &'static [&'static str] {
        match self {
            Pipeline::SolveIndex => &["residual_tol"],
            Pipeline::Stationarity => &["n_se"],
            Pipeline::Simulate => &["ks_level"],
            Pipeline::Tails => &["n_se"],
            Pipeline::Constants => &["rel_tol"],
            Pipeline::Spectral => &["ks_max", "u_quantile"],
            Pipeline::GarchVerify => &["n_se", "ks_max"],
            Pipeline::FullReport => &[],
        }
    }
}

/// Simulation settings. `burn_in` and `truncation_depth` default to values
/// derived from the law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub n_draws: usize,
    #[serde(default = "one")]
    pub thinning: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_depth: Option<usize>,
    pub base_seed: u64,
}

fn one() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub law: CoefficientLaw,
    pub pipeline: Pipeline,
    pub sim: SimSpec,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "one")]
    pub workers: usize,
    /// Sample sizes for `full_report`.
    #[serde(default)]
    pub scale: Scale,
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

fn missing_field(message: &str) -> Option<&str> {
    message.strip_prefix("missing field `").and_then(|m| m.split('`').next())
}

/// Pointer suffix, relative to a tagged object, of the field that fails.
fn tagged_pointer(v: &serde_json::Value, tag: &str, message: &str) -> String {
    if message.starts_with("unknown variant") || v.get(tag).is_none() {
        return format!("/{tag}");
    }
    if let Some(field) = missing_field(message) {
        return format!("/{field}");
    }
    v.as_object()
        .and_then(|o| o.iter().find(|(k, x)| k.as_str() != tag && !x.is_number()))
        .map(|(k, _)| format!("/{k}"))
        .unwrap_or_default()
}

fn law_pointer(law: &serde_json::Value) -> String {
    use trisre::{GarchParams, PositiveDistribution};
    let mode = law.get("mode").and_then(|m| m.as_str());
    if !matches!(mode, Some("garch_coupled" | "independent_components")) {
        return "/mode".into();
    }
    if let Err(e) = serde_json::from_value::<CoefficientLaw>(law.clone()) {
        if let Some(field @ ("a1" | "a2" | "a4" | "b1" | "b2" | "params")) = missing_field(&e.to_string()) {
            return format!("/{field}");
        }
    }
    match mode {
        Some("garch_coupled") => match serde_path_to_error::deserialize::<_, GarchParams>(&law["params"]) {
            Err(e) => format!("/params{}", pointer_of(e.path())),
            Ok(_) => String::new(),
        },
        _ => {
            for key in ["a1", "a2", "a4", "b1", "b2"] {
                if let Err(e) = serde_json::from_value::<PositiveDistribution>(law[key].clone()) {
                    return format!("/{key}{}", tagged_pointer(&law[key], "kind", &e.to_string()));
                }
            }
            String::new()
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates. Errors carry a JSON pointer to the field.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut pointer = pointer_of(e.path());
            let message = e.inner().to_string();
            if pointer == "/law" {
                // tagged enums buffer their content and lose the inner path
                if let Ok(raw) = serde_json::from_str::<serde_json::Value>(text) {
                    pointer.push_str(&law_pointer(&raw["law"]));
                }
            } else if let Some(field) = missing_field(&message) {
                pointer = format!("{pointer}/{field}");
            }
            CliError::config(if pointer.is_empty() { "/".into() } else { pointer }, message)
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.law.validate().map_err(|e| CliError::config("/law", e.to_string()))?;
        if self.sim.n_draws == 0 {
            return Err(CliError::config("/sim/n_draws", "must be at least 1"));
        }
        if self.sim.thinning == 0 {
            return Err(CliError::config("/sim/thinning", "must be at least 1"));
        }
        if self.sim.truncation_depth == Some(0) {
            return Err(CliError::config("/sim/truncation_depth", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(CliError::config("/workers", "must be at least 1"));
        }
        for key in self.pipeline.required_tolerances() {
            match self.tolerances.get(*key) {
                None => return Err(CliError::config(format!("/tolerances/{key}"), "required by the pipeline")),
                Some(v) if !v.is_finite() => return Err(CliError::config(format!("/tolerances/{key}"), "must be finite")),
                _ => {}
            }
        }
        if self.pipeline == Pipeline::GarchVerify && !matches!(self.law, CoefficientLaw::GarchCoupled { .. }) {
            return Err(CliError::config("/law/mode", "garch_verify needs a garch_coupled law"));
        }
        Ok(())
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    pub fn tolerance_or(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    /// Canonical JSON (sorted keys, no whitespace) of everything that can
    /// change results: worker count and output location are left out.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("workers");
            map.remove("output_dir");
        }
        v.to_string()
    }

    /// Hex SHA-256 of [`ExperimentConfig::canonical_json`].
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "name": "lognormal",
        "law": {
            "mode": "independent_components",
            "a1": {"kind": "log_normal", "mu": -0.5, "sigma": 0.7071067811865476},
            "a2": {"kind": "constant", "value": 0.5},
            "a4": {"kind": "log_normal", "mu": -0.3, "sigma": 0.6324555320336759},
            "b1": {"kind": "constant", "value": 1.0},
            "b2": {"kind": "constant", "value": 1.0}
        },
        "pipeline": "solve_index",
        "sim": {"n_draws": 1000, "base_seed": 7},
        "tolerances": {"residual_tol": 1e-10}
    }"#;

    fn edit(f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(BASE).unwrap();
        f(&mut v);
        v.to_string()
    }

    fn pointer(text: &str) -> String {
        match ExperimentConfig::from_json(text) {
            Err(CliError::ConfigInvalid { pointer, .. }) => pointer,
            other => panic!("expected ConfigInvalid, got {other:?}"),
        }
    }

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.sim.thinning, 1);
        assert_eq!(c.workers, 1);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert_eq!(c.scale, Scale::Full);
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(pointer(&edit(|v| v["law"]["a1"]["mu"] = "x".into())), "/law/a1/mu");
        assert_eq!(pointer(&edit(|v| v["sim"].as_object_mut().unwrap().remove("base_seed").map(|_| ()).unwrap())), "/sim/base_seed");
        assert_eq!(pointer(&edit(|v| v["pipeline"] = "nope".into())), "/pipeline");
        assert_eq!(pointer(&edit(|v| v["tolerances"] = serde_json::json!({}))), "/tolerances/residual_tol");
        assert_eq!(pointer(&edit(|v| v["law"]["a4"]["sigma"] = (-1.0).into())), "/law");
        assert_eq!(pointer(&edit(|v| v["workers"] = 0.into())), "/workers");
        assert_eq!(pointer(&edit(|v| v["pipeline"] = "garch_verify".into())), "/tolerances/n_se");
        assert_eq!(pointer("{not json"), "/");
        assert_eq!(pointer(&edit(|v| v["law"]["a2"]["kind"] = "cauchy".into())), "/law/a2/kind");
        assert_eq!(pointer(&edit(|v| v["law"]["mode"] = "other".into())), "/law/mode");
        assert_eq!(pointer(&edit(|v| v["law"]["b2"].as_object_mut().unwrap().remove("value").map(|_| ()).unwrap())), "/law/b2/value");
        assert_eq!(
            pointer(&edit(|v| v["law"] = serde_json::json!({"mode": "garch_coupled", "params": {"alpha0": [0.1, "x"]}}))),
            "/law/params/alpha0/1"
        );
    }

    #[test]
    fn digest_ignores_workers_and_output() {
        let a = ExperimentConfig::from_json(BASE).unwrap();
        let b = ExperimentConfig::from_json(&edit(|v| {
            v["workers"] = 8.into();
            v["output_dir"] = "elsewhere".into();
        }))
        .unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = ExperimentConfig::from_json(&edit(|v| v["sim"]["base_seed"] = 8.into())).unwrap();
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
        // keys come out sorted
        let canon = a.canonical_json();
        assert!(canon.find("\"law\"").unwrap() < canon.find("\"name\"").unwrap());
    }
}

//! Weights as a JSON document `{"expert_names": [...], "weights": [...], "bias": x}`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::learning::ExpertWeights;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    expert_names: Vec<String>,
    weights: Vec<f64>,
    bias: f64,
}

pub fn weights_to_json(w: &ExpertWeights) -> Result<String> {
    serde_json::to_string_pretty(w).map_err(|e| Error::Schema(e.to_string()))
}

pub fn weights_from_json(text: &str) -> Result<ExpertWeights> {
    let doc: Document = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    let w = ExpertWeights {
        expert_names: doc.expert_names,
        weights: doc.weights,
        bias: doc.bias,
    };
    w.validate()?;
    Ok(w)
}

pub fn save_weights(path: &Path, w: &ExpertWeights) -> Result<()> {
    w.validate()?;
    std::fs::write(path, weights_to_json(w)? + "\n")?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<ExpertWeights> {
    weights_from_json(&std::fs::read_to_string(path)?)
}

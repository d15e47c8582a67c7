//! Result documents and their serialization.

use std::path::Path;

use anyhow::Context;
use lfboson::fock::build_layout;
use lfboson::hamiltonian::HamiltonianSpec;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    #[serde(rename = "K")]
    pub k: usize,
    /// λ/m² as configured.
    pub lambda: f64,
    pub m2: f64,
    #[serde(rename = "D")]
    pub d: usize,
    #[serde(rename = "Xi")]
    pub xi: f64,
    pub qubits: usize,
}

impl Meta {
    pub fn from_spec(spec: &HamiltonianSpec) -> anyhow::Result<Self> {
        let layout = build_layout(spec.params.k_total, spec.monomial_count())?;
        Ok(Self {
            k: spec.params.k_total,
            lambda: spec.params.lambda_over_m2,
            m2: spec.params.m2,
            d: spec.index_dim,
            xi: spec.xi_scale,
            qubits: layout.num_qubits(),
        })
    }
}

pub struct Document {
    pub meta: Meta,
    pub results: Value,
}

/// Rounds `x` to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round12(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

impl Document {
    pub fn to_json(&self) -> anyhow::Result<Value> {
        let mut doc = json!({ "meta": serde_json::to_value(&self.meta)?, "results": self.results.clone() });
        round_value(&mut doc);
        Ok(doc)
    }

    pub fn write_json(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(&self.to_json()?)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// `1.23456789012e-7`-style rendering for text output.
pub fn fmt12(x: f64) -> String {
    let r = round12(x);
    if r != 0.0 && (r.abs() < 1e-3 || r.abs() >= 1e6) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

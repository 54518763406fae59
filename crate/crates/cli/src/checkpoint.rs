//! Versioned JSON checkpoints. Parameter arrays are written with 17
//! significant digits so a reload reproduces every f64 exactly.

use std::path::Path;

use anyhow::{bail, Context};
use qdnn::data::AngleScale;
use qdnn::network::{build_network, AdamState, Network, QnnLayerSpec};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

pub const FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    #[serde(serialize_with = "digits17")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    #[serde(serialize_with = "digits17")]
    pub first_moment: Vec<f64>,
    #[serde(serialize_with = "digits17")]
    pub second_moment: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u64,
    pub architecture: Vec<QnnLayerSpec>,
    pub angle_scale: f64,
    pub step: usize,
    pub parameters: Vec<NamedArray>,
    pub optimizer: OptimizerState,
}

fn digits17<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let body: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
    let raw = RawValue::from_string(format!("[{}]", body.join(", "))).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

/// Restored training state.
pub struct Restored {
    pub network: Network,
    pub optimizer: AdamState,
    pub step: usize,
    pub angle_scale: AngleScale,
    pub architecture: Vec<QnnLayerSpec>,
}

impl Checkpoint {
    pub fn capture(
        architecture: &[QnnLayerSpec],
        angle_scale: AngleScale,
        network: &Network,
        optimizer: &AdamState,
        step: usize,
    ) -> Self {
        let mut parameters = Vec::new();
        for (i, layer) in network.layers().iter().enumerate() {
            parameters.push(NamedArray {
                name: format!("layer{i}.weights"),
                values: layer.weights().to_vec(),
            });
            if !layer.bias().is_empty() {
                parameters.push(NamedArray {
                    name: format!("layer{i}.bias"),
                    values: layer.bias().to_vec(),
                });
            }
        }
        Self {
            format_version: FORMAT_VERSION,
            architecture: architecture.to_vec(),
            angle_scale: angle_scale.radians(),
            step,
            parameters,
            optimizer: OptimizerState {
                beta1: optimizer.beta1,
                beta2: optimizer.beta2,
                epsilon: optimizer.epsilon,
                step: optimizer.step,
                first_moment: optimizer.first_moment.clone(),
                second_moment: optimizer.second_moment.clone(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).context("checkpoint is not valid JSON")?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .context("checkpoint has no format_version")?;
        if version != FORMAT_VERSION {
            bail!("checkpoint format version {version} is not supported (this build reads version {FORMAT_VERSION})");
        }
        serde_json::from_value(value).context("checkpoint structure is invalid")
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        std::fs::write(path, self.to_json()).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("loading {}", path.display()))
    }

    pub fn restore(&self) -> anyhow::Result<Restored> {
        let mut network = build_network(&self.architecture)?;
        let mut flat = Vec::with_capacity(network.num_params());
        let mut arrays = self.parameters.iter();
        for (i, layer) in network.layers().iter().enumerate() {
            let mut expect = vec![(format!("layer{i}.weights"), layer.weights().len())];
            if !layer.bias().is_empty() {
                expect.push((format!("layer{i}.bias"), layer.bias().len()));
            }
            for (name, len) in expect {
                let Some(a) = arrays.next() else {
                    bail!("checkpoint is missing parameter array {name}");
                };
                if a.name != name || a.values.len() != len {
                    bail!(
                        "parameter array {} with {} values found where {name} with {len} was expected",
                        a.name,
                        a.values.len()
                    );
                }
                flat.extend_from_slice(&a.values);
            }
        }
        if let Some(extra) = arrays.next() {
            bail!("unexpected parameter array {}", extra.name);
        }
        network.set_parameters(&flat)?;
        let o = &self.optimizer;
        if o.first_moment.len() != flat.len() || o.second_moment.len() != flat.len() {
            bail!("optimizer moments do not match the {} network parameters", flat.len());
        }
        Ok(Restored {
            network,
            optimizer: AdamState {
                beta1: o.beta1,
                beta2: o.beta2,
                epsilon: o.epsilon,
                step: o.step,
                first_moment: o.first_moment.clone(),
                second_moment: o.second_moment.clone(),
            },
            step: self.step,
            angle_scale: AngleScale::new(self.angle_scale)?,
            architecture: self.architecture.clone(),
        })
    }
}

pub fn checkpoint_name(step: usize) -> String {
    format!("checkpoint-{step:06}.json")
}

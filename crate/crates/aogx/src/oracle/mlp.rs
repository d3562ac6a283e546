//! Forward inference for serialized MLP weights.
//!
//! Weights arrive as JSON:
//!
//! ```json
//! {
//!   "n_inputs": 2,
//!   "layers": [
//!     {"w": [[1.0, 2.0], [3.0, 4.0]], "b": [0.0, 0.0], "act": "relu", "skip": false}
//!   ],
//!   "output": {"mode": "raw"}
//! }
//! ```
//!
//! `w` is row-major, one row per output neuron. `skip` adds the layer input
//! back onto the activated output and therefore needs matching widths. The
//! output head either passes the single raw value through (`"raw"`, final
//! width must be 1) or maps the final layer to a class probability and takes
//! its log-odds (`"log_odds"`; softmax over widths >= 2, the value itself as
//! `P(class=1)` for width 1).

use super::{log_odds, mask_sample, BaselineVector, OracleError, Sample, ValueOracle};
use crate::lattice::VariableSet;
use serde::{Deserialize, Serialize};
use std::io::Read;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
    skip: bool,
}

impl Layer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation, skip: bool) -> Result<Self, OracleError> {
        let out_dim = weights.len();
        if out_dim == 0 {
            return Err(OracleError::Format("layer with no output rows".into()));
        }
        let in_dim = weights[0].len();
        if in_dim == 0 || weights.iter().any(|row| row.len() != in_dim) {
            return Err(OracleError::Format("ragged or empty weight matrix".into()));
        }
        if bias.len() != out_dim {
            return Err(OracleError::Format(format!("bias length {} != output width {out_dim}", bias.len())));
        }
        if skip && in_dim != out_dim {
            return Err(OracleError::Format(format!(
                "skip connection needs equal widths, got {in_dim} -> {out_dim}"
            )));
        }
        if weights.iter().flatten().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(OracleError::Format("non-finite weight or bias".into()));
        }
        Ok(Self { weights, bias, activation, skip })
    }

    pub fn in_dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputMode {
    Raw,
    LogOdds { class: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    n_inputs: usize,
    layers: Vec<Layer>,
    output: OutputMode,
}

impl MlpModel {
    pub fn new(n_inputs: usize, layers: Vec<Layer>, output: OutputMode) -> Result<Self, OracleError> {
        if layers.is_empty() {
            return Err(OracleError::Format("model needs at least one layer".into()));
        }
        let mut width = n_inputs;
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim() != width {
                return Err(OracleError::Format(format!(
                    "layer {i} expects {} inputs but receives {width}",
                    layer.in_dim()
                )));
            }
            width = layer.out_dim();
        }
        match output {
            OutputMode::Raw => {
                if width != 1 {
                    return Err(OracleError::Format(format!("raw output needs final width 1, got {width}")));
                }
            }
            OutputMode::LogOdds { class } => {
                let limit = if width == 1 { 2 } else { width };
                if class >= limit {
                    return Err(OracleError::Format(format!("class {class} out of range for final width {width}")));
                }
            }
        }
        Ok(Self { n_inputs, layers, output })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn output_mode(&self) -> OutputMode {
        self.output
    }

    /// Raw final-layer activations.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, OracleError> {
        if x.len() != self.n_inputs {
            return Err(OracleError::DimensionMismatch { expected: self.n_inputs, got: x.len() });
        }
        let mut h = x.to_vec();
        for layer in &self.layers {
            let mut out = Vec::with_capacity(layer.out_dim());
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                let mut z = *b;
                for (w, v) in row.iter().zip(&h) {
                    z += w * v;
                }
                out.push(layer.activation.apply(z));
            }
            if layer.skip {
                for (o, i) in out.iter_mut().zip(&h) {
                    *o += i;
                }
            }
            h = out;
        }
        Ok(h)
    }

    /// Scalar model output `v(x)` after the configured head.
    pub fn score(&self, x: &[f64]) -> Result<f64, OracleError> {
        let out = self.forward(x)?;
        Ok(match self.output {
            OutputMode::Raw => out[0],
            OutputMode::LogOdds { class } => {
                let p = if out.len() == 1 {
                    if class == 1 {
                        out[0]
                    } else {
                        1.0 - out[0]
                    }
                } else {
                    softmax_prob(&out, class)
                };
                log_odds(p)
            }
        })
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, OracleError> {
        let file: ModelFile = serde_json::from_slice(bytes)?;
        file.try_into()
    }

    pub fn from_json_reader(reader: impl Read) -> Result<Self, OracleError> {
        let file: ModelFile = serde_json::from_reader(reader)?;
        file.try_into()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(ModelFile::from(self.clone())).expect("model serializes")
    }
}

fn softmax_prob(logits: &[f64], class: usize) -> f64 {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let denom: f64 = logits.iter().map(|&v| (v - max).exp()).sum();
    (logits[class] - max).exp() / denom
}

/// An MLP bound to one sample and baseline, scored under masking.
#[derive(Debug, Clone)]
pub struct MlpOracle {
    model: MlpModel,
    sample: Sample,
    baseline: BaselineVector,
}

impl MlpOracle {
    pub fn new(model: MlpModel, sample: Sample, baseline: BaselineVector) -> Result<Self, OracleError> {
        if sample.n() != model.n_inputs() || baseline.n() != model.n_inputs() {
            return Err(OracleError::DimensionMismatch {
                expected: model.n_inputs(),
                got: sample.n().max(baseline.n()),
            });
        }
        Ok(Self { model, sample, baseline })
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }
}

impl ValueOracle for MlpOracle {
    fn n(&self) -> usize {
        self.model.n_inputs()
    }

    fn value(&self, s: VariableSet) -> Result<f64, OracleError> {
        let masked = mask_sample(&self.sample, &self.baseline, s)?;
        self.model.score(&masked)
    }

    fn describe(&self) -> String {
        format!("mlp(n={}, layers={})", self.model.n_inputs(), self.model.layers.len())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    n_inputs: usize,
    layers: Vec<LayerFile>,
    output: OutputFile,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerFile {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    act: Activation,
    #[serde(default)]
    skip: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct OutputFile {
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<usize>,
}

impl TryFrom<ModelFile> for MlpModel {
    type Error = OracleError;

    fn try_from(file: ModelFile) -> Result<Self, OracleError> {
        let layers = file
            .layers
            .into_iter()
            .map(|l| Layer::new(l.w, l.b, l.act, l.skip))
            .collect::<Result<Vec<_>, _>>()?;
        let output = match file.output.mode.as_str() {
            "raw" => OutputMode::Raw,
            "log_odds" => OutputMode::LogOdds {
                class: file
                    .output
                    .class
                    .ok_or_else(|| OracleError::Format("log_odds output needs a 'class'".into()))?,
            },
            other => return Err(OracleError::Format(format!("unknown output mode '{other}'"))),
        };
        MlpModel::new(file.n_inputs, layers, output)
    }
}

impl From<MlpModel> for ModelFile {
    fn from(m: MlpModel) -> Self {
        ModelFile {
            n_inputs: m.n_inputs,
            layers: m
                .layers
                .iter()
                .map(|l| LayerFile {
                    w: l.weights.clone(),
                    b: l.bias.clone(),
                    act: l.activation,
                    skip: l.skip,
                })
                .collect(),
            output: match m.output {
                OutputMode::Raw => OutputFile { mode: "raw".into(), class: None },
                OutputMode::LogOdds { class } => OutputFile { mode: "log_odds".into(), class: Some(class) },
            },
        }
    }
}

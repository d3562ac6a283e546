//! Spectrum JSON files: the interchange format between extraction, metrics,
//! and graph building.
//!
//! Only nonzero effects are stored, ranked by `|w|` descending. The value
//! table is implicit: subset sums of the effects reconstruct it exactly, so
//! an imported spectrum is re-certified through the same integrity check as
//! a freshly computed one.

use super::{EffectSpectrum, HarsanyiError, Provenance};
use crate::lattice::{zeta_transform, SubsetTable, VariableSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub n: usize,
    pub variables: Vec<String>,
    pub v_full: f64,
    pub effects: Vec<EffectEntry>,
    pub sorted_by: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectEntry {
    pub mask: u32,
    pub members: Vec<String>,
    pub w: f64,
}

/// Default variable names `x1..xn`.
pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl SpectrumFile {
    pub fn from_spectrum(
        spec: &EffectSpectrum,
        names: Option<&[String]>,
        config_hash: Option<String>,
    ) -> Result<Self, HarsanyiError> {
        let n = spec.n();
        let names: Vec<String> = match names {
            Some(list) => {
                if list.len() != n {
                    return Err(HarsanyiError::Format(format!("{} names for {} variables", list.len(), n)));
                }
                list.to_vec()
            }
            None => default_names(n),
        };
        let effects = spec
            .ranked_effects()
            .into_iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|(s, w)| EffectEntry {
                mask: s.bits(),
                members: s.members().map(|i| names[i].clone()).collect(),
                w,
            })
            .collect();
        Ok(SpectrumFile {
            config_hash,
            n,
            variables: names,
            v_full: spec.v_full(),
            effects,
            sorted_by: "abs_w_desc".into(),
        })
    }

    /// Rebuilds the certified spectrum. The value table is recovered via
    /// subset sums of the stored effects.
    pub fn to_spectrum(&self) -> Result<(EffectSpectrum, Vec<String>), HarsanyiError> {
        if self.variables.len() != self.n {
            return Err(HarsanyiError::Format(format!(
                "{} variable names for n = {}",
                self.variables.len(),
                self.n
            )));
        }
        if self.sorted_by != "abs_w_desc" {
            return Err(HarsanyiError::Format(format!("unknown sort order '{}'", self.sorted_by)));
        }
        let mut w = SubsetTable::zeros(self.n)?;
        for e in &self.effects {
            let s = VariableSet::new(e.mask, self.n)?;
            if !e.w.is_finite() {
                return Err(HarsanyiError::Format(format!("non-finite effect at mask {:#x}", e.mask)));
            }
            let expect: Vec<&String> = s.members().map(|i| &self.variables[i]).collect();
            if e.members.len() != expect.len() || e.members.iter().zip(&expect).any(|(a, b)| &a != b) {
                return Err(HarsanyiError::Format(format!(
                    "members of mask {:#x} do not match the variable list",
                    e.mask
                )));
            }
            w.set_bits(e.mask, e.w);
        }
        let v_table = zeta_transform(&w);
        let spec = EffectSpectrum::new(w, v_table, Provenance {
            oracle: "import".into(),
            sample: "import".into(),
            baseline: "import".into(),
        })?;
        let tol = 1e-9 * spec.v_full().abs().max(1.0);
        if (spec.v_full() - self.v_full).abs() > tol {
            return Err(HarsanyiError::Format(format!(
                "stored v_full {} disagrees with effect sums {}",
                self.v_full,
                spec.v_full()
            )));
        }
        Ok((spec, self.variables.clone()))
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("spectrum file serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, HarsanyiError> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

//! The effect spectrum, its faithfulness certificate, the seven-axiom
//! verifier, and the derived game-theoretic indices.
//!
//! The central object is the [`EffectSpectrum`]: the per-subset effects
//! `w_S = Σ_{S'⊆S} (-1)^(|S|-|S'|) v(x_S')` of a game `v`, paired with the
//! value table they were derived from. Construction certifies faithfulness —
//! the subset sums of `w` must reproduce every one of the `2^n` masked
//! outputs — so any spectrum you can hold in hand is a valid explanation of
//! its oracle.
//!
//! Shapley values, Shapley interaction indices, Shapley-Taylor indices, and
//! marginal benefits are all weighted reallocations of the same effects; the
//! fast paths here work on the spectrum, while the `direct` module (behind
//! the `verification` feature) evaluates the textbook definitions on raw
//! game values as independent cross-checks.

mod axioms;
#[cfg(any(test, feature = "verification"))]
pub mod direct;
mod export;

pub use axioms::{verify_axioms, AxiomCheck, AxiomReport};
pub use export::SpectrumFile;

use crate::lattice::{mobius_transform, zeta_transform, LatticeError, SubsetTable, VariableSet};
use crate::oracle::{evaluate_table, OracleError, ValueOracle};
use thiserror::Error;

/// Relative tolerance for transform identities (faithfulness, efficiency).
pub const TRANSFORM_TOL: f64 = 1e-9;

/// Tolerance for factorial-weighted index identities, which amplify roundoff.
pub const INDEX_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum HarsanyiError {
    #[error("faithfulness certificate failed: max residual {max_residual:e}")]
    Integrity { max_residual: f64 },
    #[error("the pattern set must be nonempty")]
    EmptySet,
    #[error("pattern and environment sets overlap")]
    OverlappingSets,
    #[error("interaction order {k} invalid for {n} variables")]
    InvalidOrder { k: usize, n: usize },
    #[error("malformed spectrum file: {0}")]
    Format(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Where a spectrum came from; carried through exports for reproducibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub oracle: String,
    pub sample: String,
    pub baseline: String,
}

impl Provenance {
    pub fn unknown() -> Self {
        Self { oracle: "unknown".into(), sample: "unknown".into(), baseline: "unknown".into() }
    }
}

/// A certified effect spectrum: `zeta(w)` reproduces the value table within
/// `TRANSFORM_TOL * max|v|`, and the effects sum to `v` at the full mask.
#[derive(Debug, Clone)]
pub struct EffectSpectrum {
    w: SubsetTable,
    v_table: SubsetTable,
    provenance: Provenance,
}

impl EffectSpectrum {
    /// Validates the faithfulness certificate for an existing `(w, v)` pair.
    pub fn new(w: SubsetTable, v_table: SubsetTable, provenance: Provenance) -> Result<Self, HarsanyiError> {
        if w.n() != v_table.n() {
            return Err(HarsanyiError::Lattice(LatticeError::Length { len: w.len(), n: v_table.n() }));
        }
        let tol = TRANSFORM_TOL * v_table.max_abs();
        let reconstructed = zeta_transform(&w);
        let mut max_residual = 0.0f64;
        for (a, b) in reconstructed.values().iter().zip(v_table.values()) {
            max_residual = max_residual.max((a - b).abs());
        }
        // Efficiency, summed compensated so large lattices don't trip the
        // certificate on accumulation error alone.
        let mut sum = 0.0f64;
        let mut c = 0.0f64;
        for &x in w.values() {
            let y = x - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        let full = VariableSet::full(v_table.n());
        max_residual = max_residual.max((sum - v_table.get(full)).abs());
        if max_residual > tol {
            return Err(HarsanyiError::Integrity { max_residual });
        }
        Ok(Self { w, v_table, provenance })
    }

    /// Möbius-transforms a value table and certifies the result.
    pub fn from_values(v_table: SubsetTable, provenance: Provenance) -> Result<Self, HarsanyiError> {
        let w = mobius_transform(&v_table);
        Self::new(w, v_table, provenance)
    }

    pub fn n(&self) -> usize {
        self.w.n()
    }

    /// The effect table `{w_S}`.
    pub fn effects(&self) -> &SubsetTable {
        &self.w
    }

    /// The value table `{v(x_S)}` the spectrum was derived from.
    pub fn values(&self) -> &SubsetTable {
        &self.v_table
    }

    pub fn effect(&self, s: VariableSet) -> f64 {
        self.w.get(s)
    }

    /// `v(x)` on the unmasked sample.
    pub fn v_full(&self) -> f64 {
        self.v_table.get(VariableSet::full(self.n()))
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Effects ranked by `|w|` descending, ties broken by lower mask.
    pub fn ranked_effects(&self) -> Vec<(VariableSet, f64)> {
        let mut entries: Vec<(VariableSet, f64)> = self.w.masks().map(|s| (s, self.w.get(s))).collect();
        entries.sort_by(|a, b| {
            b.1.abs()
                .partial_cmp(&a.1.abs())
                .expect("finite effects")
                .then(a.0.bits().cmp(&b.0.bits()))
        });
        entries
    }
}

/// Runs the oracle over all masks and Möbius-transforms the result.
pub fn compute_spectrum(oracle: &dyn ValueOracle) -> Result<EffectSpectrum, HarsanyiError> {
    let provenance =
        Provenance { oracle: oracle.describe(), sample: "inline".into(), baseline: "inline".into() };
    compute_spectrum_with(oracle, provenance)
}

pub fn compute_spectrum_with(oracle: &dyn ValueOracle, provenance: Provenance) -> Result<EffectSpectrum, HarsanyiError> {
    let v_table = evaluate_table(oracle)?;
    EffectSpectrum::from_values(v_table, provenance)
}

/// Shapley values via effect reallocation: each pattern's effect is split
/// evenly over its members, `phi(i) = Σ_{S ∋ i} w_S / |S|`.
pub fn shapley_values(spec: &EffectSpectrum) -> Vec<f64> {
    let n = spec.n();
    let mut phi = vec![0.0; n];
    for s in spec.effects().masks() {
        let size = s.cardinality();
        if size == 0 {
            continue;
        }
        let share = spec.effect(s) / f64::from(size);
        for i in s.members() {
            phi[i] += share;
        }
    }
    phi
}

/// Shapley interaction index of a nonempty pattern `T`:
/// `Σ_{S ⊆ N\T} w_{S∪T} / (|S|+1)`.
pub fn shapley_interaction_index(spec: &EffectSpectrum, t: VariableSet) -> Result<f64, HarsanyiError> {
    if t.is_empty() {
        return Err(HarsanyiError::EmptySet);
    }
    let mut acc = 0.0;
    for s in t.complement().subsets() {
        acc += spec.effect(s.union(&t)) / f64::from(s.cardinality() + 1);
    }
    Ok(acc)
}

/// k-th order Shapley-Taylor interaction index: `w_T` below order `k`, a
/// binomially discounted reallocation at order `k`, zero above.
pub fn shapley_taylor_index(spec: &EffectSpectrum, t: VariableSet, k: usize) -> Result<f64, HarsanyiError> {
    let n = spec.n();
    if k < 1 || k > n {
        return Err(HarsanyiError::InvalidOrder { k, n });
    }
    let size = t.cardinality() as usize;
    if size > k {
        return Ok(0.0);
    }
    if size < k {
        return Ok(spec.effect(t));
    }
    let mut acc = 0.0;
    for s in t.complement().subsets() {
        acc += spec.effect(s.union(&t)) / binomial_f64(s.cardinality() as usize + k, k);
    }
    Ok(acc)
}

/// Marginal benefit of `T` in environment `S`: `Σ_{S'⊆S} w_{T∪S'}`.
pub fn marginal_benefit(spec: &EffectSpectrum, t: VariableSet, s: VariableSet) -> Result<f64, HarsanyiError> {
    if t.is_empty() {
        return Err(HarsanyiError::EmptySet);
    }
    if t.intersects(&s) {
        return Err(HarsanyiError::OverlappingSets);
    }
    Ok(s.subsets().map(|sp| spec.effect(t.union(&sp))).sum())
}

pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

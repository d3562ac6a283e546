//! Conciseness machinery: the unfaithfulness objective, greedy noisy-pattern
//! removal, the explained-ratio metric, and baseline-value learning.
//!
//! Pruning starts from the full lattice and only ever drops patterns — effect
//! values are never modified, so everything retained stays a true effect of
//! the underlying game. The step cost of removing a pattern `U` has a closed
//! form: with residuals `e_S = v(x_S) - Σ_{T∈Ω, T⊆S} w_T`,
//!
//! ```text
//! Δunfaith(U) = 2 w_U · SupersetSum(e)[U] + w_U² · 2^(n-|U|)
//! ```
//!
//! which the tests hold against brute-force re-evaluation.
//!
//! Baseline learning exploits that with the full pattern set the spectrum is
//! faithful for *any* baseline, so unfaithfulness stays pinned at zero and
//! only the effect mass `‖w‖₁` moves. We descend on that mass with projected
//! finite-difference steps, each coordinate confined to its
//! `(r_i - r_init_i)² <= tau_i` ball.

use crate::harsanyi::EffectSpectrum;
use crate::lattice::{mobius_transform, superset_sum, zeta_transform, LatticeError, SubsetTable, VariableSet};
use crate::oracle::{BaselineVector, OracleError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparsifyError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("objective became non-finite")]
    NonFinite,
    #[error("malformed explanation file: {0}")]
    Format(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A retained pattern set `Ω` with its effects, residual, and quality
/// figures.
#[derive(Debug, Clone)]
pub struct SparseExplanation {
    n: usize,
    patterns: Vec<(VariableSet, f64)>,
    delta: f64,
    unfaith: f64,
    r_omega: f64,
}

impl SparseExplanation {
    /// The untruncated explanation: every pattern of the spectrum retained.
    pub fn full(spec: &EffectSpectrum) -> Self {
        let patterns: Vec<(VariableSet, f64)> = spec.effects().masks().map(|s| (s, spec.effect(s))).collect();
        Self::from_retained(spec, patterns)
    }

    /// Builds the explanation for an explicit retained set, recomputing
    /// residual, unfaithfulness, and explained ratio from definitions.
    pub fn from_retained(spec: &EffectSpectrum, patterns: Vec<(VariableSet, f64)>) -> Self {
        let n = spec.n();
        let sum_w: f64 = patterns.iter().map(|(_, w)| w).sum();
        let delta = spec.v_full() - sum_w;
        let mut out = Self { n, patterns, delta, unfaith: 0.0, r_omega: 0.0 };
        out.unfaith = unfaithfulness(spec.values(), &out);
        out.r_omega = explained_ratio(&out);
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Retained patterns with their effects, ascending by mask.
    pub fn patterns(&self) -> &[(VariableSet, f64)] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// `Δ = v(x) - Σ_{S∈Ω} w_S`, the unexplained effect mass.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn unfaith(&self) -> f64 {
        self.unfaith
    }

    pub fn r_omega(&self) -> f64 {
        self.r_omega
    }

    /// Σ over retained patterns of `|w_S|`.
    pub fn l1(&self) -> f64 {
        self.patterns.iter().map(|(_, w)| w.abs()).sum()
    }

    /// The dense effect vector with zeros outside `Ω`.
    pub fn dense_effects(&self) -> SubsetTable {
        let mut t = SubsetTable::zeros(self.n).expect("n validated upstream");
        for (s, w) in &self.patterns {
            t.set_bits(s.bits(), *w);
        }
        t
    }

    /// Predicted output on mask `S`: the subset sum of retained effects.
    pub fn predict(&self, s: VariableSet) -> f64 {
        self.patterns
            .iter()
            .filter(|(t, _)| t.is_subset_of(&s))
            .map(|(_, w)| w)
            .sum()
    }
}

/// Squared reconstruction error summed over all `2^n` masks:
/// `Σ_S [v(x_S) - Σ_{T⊆S, T∈Ω} w_T]²`.
pub fn unfaithfulness(v_table: &SubsetTable, expl: &SparseExplanation) -> f64 {
    assert_eq!(v_table.n(), expl.n(), "dimension mismatch");
    let predicted = zeta_transform(&expl.dense_effects());
    v_table
        .values()
        .iter()
        .zip(predicted.values())
        .map(|(v, p)| {
            let d = v - p;
            d * d
        })
        .sum()
}

/// Ratio of explained effect mass, `R_Ω = Σ|w| / (Σ|w| + |Δ|)`; an all-zero
/// explanation of an all-zero output counts as fully explained.
pub fn explained_ratio(expl: &SparseExplanation) -> f64 {
    let mass = expl.l1();
    let denom = mass + expl.delta.abs();
    if denom == 0.0 {
        return 1.0;
    }
    mass / denom
}

/// Stop bounds for greedy pruning; at least one must be set and whichever
/// triggers first stops the removal loop.
#[derive(Debug, Clone, Default)]
pub struct PruneConfig {
    pub max_patterns: Option<usize>,
    pub min_ratio: Option<f64>,
}

impl PruneConfig {
    fn validate(&self) -> Result<(), SparsifyError> {
        if self.max_patterns.is_none() && self.min_ratio.is_none() {
            return Err(SparsifyError::Config("set max_patterns and/or min_ratio".into()));
        }
        if let Some(r) = self.min_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(SparsifyError::Config(format!("min_ratio {r} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// One removal: which pattern went, what it cost, and the state afterwards.
#[derive(Debug, Clone)]
pub struct RemovalStep {
    pub step: usize,
    pub removed: VariableSet,
    pub delta_unfaith: f64,
    pub unfaith: f64,
    pub r_omega: f64,
    pub l1: f64,
}

#[derive(Debug)]
pub struct PruneResult {
    pub explanation: SparseExplanation,
    pub trace: Vec<RemovalStep>,
    /// False when a max_patterns bound could not be reached without breaking
    /// the min_ratio floor; the result is then the best effort at the floor.
    pub satisfied: bool,
}

/// Greedy noisy-pattern removal. Starts from the full lattice and repeatedly
/// drops the pattern whose removal increases unfaithfulness the least,
/// breaking ties toward the lowest mask.
pub fn greedy_prune(spec: &EffectSpectrum, cfg: &PruneConfig) -> Result<PruneResult, SparsifyError> {
    cfg.validate()?;
    let n = spec.n();
    let len = 1usize << n;
    let w = spec.effects();
    let v_full = spec.v_full();

    let mut retained = vec![true; len];
    let mut count = len;
    let mut residual = SubsetTable::zeros(n)?;
    let mut unfaith = 0.0f64;
    let mut sum_abs = w.l1_norm();
    let mut sum_w: f64 = w.values().iter().sum();
    let mut trace = Vec::new();
    let mut satisfied = true;

    let ratio = |mass: f64, delta: f64| -> f64 {
        let denom = mass + delta.abs();
        if denom == 0.0 {
            1.0
        } else {
            mass / denom
        }
    };

    loop {
        if let Some(m) = cfg.max_patterns {
            if count <= m {
                break;
            }
        }
        if count == 0 {
            break;
        }

        // Score every retained candidate against the current residuals.
        let ss = superset_sum(&residual);
        let mut best: Option<(f64, u32)> = None;
        for bits in 0..len as u32 {
            if !retained[bits as usize] {
                continue;
            }
            let wu = w.get_bits(bits);
            let order = bits.count_ones() as usize;
            let du = 2.0 * wu * ss.get_bits(bits) + wu * wu * (1u64 << (n - order)) as f64;
            match best {
                Some((b, _)) if du >= b => {}
                _ => best = Some((du, bits)),
            }
        }
        let (du, u_bits) = best.expect("count > 0 implies a candidate");
        let wu = w.get_bits(u_bits);

        let next_sum_abs = sum_abs - wu.abs();
        let next_sum_w = sum_w - wu;
        let next_ratio = ratio(next_sum_abs, v_full - next_sum_w);
        if let Some(floor) = cfg.min_ratio {
            if next_ratio < floor {
                if cfg.max_patterns.is_some_and(|m| count > m) {
                    satisfied = false;
                }
                break;
            }
        }

        // Apply: residuals grow by w_U on every superset of U.
        retained[u_bits as usize] = false;
        count -= 1;
        let rest = (len as u32 - 1) & !u_bits;
        let mut sub = 0u32;
        loop {
            let s = u_bits | sub;
            residual.set_bits(s, residual.get_bits(s) + wu);
            if sub == rest {
                break;
            }
            sub = (sub | !rest).wrapping_add(1) & rest;
        }
        unfaith = (unfaith + du).max(0.0);
        sum_abs = next_sum_abs;
        sum_w = next_sum_w;
        trace.push(RemovalStep {
            step: trace.len() + 1,
            removed: VariableSet::new(u_bits, n)?,
            delta_unfaith: du,
            unfaith,
            r_omega: next_ratio,
            l1: sum_abs,
        });
    }

    let patterns: Vec<(VariableSet, f64)> = (0..len as u32)
        .filter(|&bits| retained[bits as usize])
        .map(|bits| (VariableSet::new(bits, n).expect("mask in range"), w.get_bits(bits)))
        .collect();
    Ok(PruneResult { explanation: SparseExplanation::from_retained(spec, patterns), trace, satisfied })
}

/// Configuration for baseline-value learning.
#[derive(Debug, Clone)]
pub struct BaselineOptConfig {
    /// Weight of the effect-mass term when combined with unfaithfulness;
    /// zero means "descend on the mass alone", which with the full pattern
    /// set reaches the same optimum.
    pub lambda: f64,
    /// `tau_i = tau_factor * Var[x_i]`.
    pub tau_factor: f64,
    pub step_size: f64,
    pub max_iters: usize,
    /// Central-difference half-width, scaled per coordinate by `1 + |r_i|`.
    pub fd_epsilon: f64,
}

impl Default for BaselineOptConfig {
    fn default() -> Self {
        Self { lambda: 0.0, tau_factor: 0.01, step_size: 0.1, max_iters: 100, fd_epsilon: 1e-4 }
    }
}

impl BaselineOptConfig {
    fn validate(&self) -> Result<(), SparsifyError> {
        if !(self.step_size > 0.0) {
            return Err(SparsifyError::Config("step_size must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(SparsifyError::Config("max_iters must be positive".into()));
        }
        if self.lambda < 0.0 || self.tau_factor < 0.0 || !(self.fd_epsilon > 0.0) {
            return Err(SparsifyError::Config("lambda, tau_factor must be >= 0 and fd_epsilon > 0".into()));
        }
        Ok(())
    }
}

/// One accepted optimizer state.
#[derive(Debug, Clone)]
pub struct BaselineTraceRow {
    pub iter: usize,
    pub unfaith: f64,
    pub r_omega: f64,
    pub l1: f64,
    pub r: Vec<f64>,
}

struct Objective {
    value: f64,
    unfaith: f64,
    l1: f64,
    r_omega: f64,
}

/// Learns baseline values by projected descent on the spectrum's effect mass.
///
/// `table_for` must produce the full value table of the game under the given
/// baseline vector. Every accepted step is projected onto the per-coordinate
/// ball `(r_i - r_init_i)² <= tau_factor * variance_i`; steps that increase
/// the objective are rejected and the step size halved, so the trace is
/// non-increasing.
pub fn learn_baseline<F>(
    table_for: F,
    r_init: &[f64],
    variance: &[f64],
    cfg: &BaselineOptConfig,
) -> Result<(BaselineVector, Vec<BaselineTraceRow>), SparsifyError>
where
    F: Fn(&[f64]) -> Result<SubsetTable, OracleError> + Sync,
{
    cfg.validate()?;
    if r_init.len() != variance.len() {
        return Err(SparsifyError::Config("r_init and variance lengths differ".into()));
    }
    if variance.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(SparsifyError::Config("variance entries must be finite and non-negative".into()));
    }
    let n = r_init.len();
    let taus: Vec<f64> = variance.iter().map(|v| cfg.tau_factor * v).collect();
    let bounds: Vec<f64> = taus.iter().map(|t| t.sqrt()).collect();

    let score = |r: &[f64]| -> Result<Objective, SparsifyError> {
        let v = table_for(r)?;
        let w = mobius_transform(&v);
        let l1 = w.l1_norm();
        let recon = zeta_transform(&w);
        let unfaith: f64 = v
            .values()
            .iter()
            .zip(recon.values())
            .map(|(a, b)| {
                let d = a - b;
                d * d
            })
            .sum();
        let sum_w: f64 = w.values().iter().sum();
        let delta = v.get(VariableSet::full(v.n())) - sum_w;
        let denom = l1 + delta.abs();
        let r_omega = if denom == 0.0 { 1.0 } else { l1 / denom };
        let value = if cfg.lambda > 0.0 { unfaith + cfg.lambda * l1 } else { l1 };
        if !value.is_finite() {
            return Err(SparsifyError::NonFinite);
        }
        Ok(Objective { value, unfaith, l1, r_omega })
    };

    let mut r = r_init.to_vec();
    let mut current = score(&r)?;
    let mut trace = vec![BaselineTraceRow {
        iter: 0,
        unfaith: current.unfaith,
        r_omega: current.r_omega,
        l1: current.l1,
        r: r.clone(),
    }];

    let frozen = bounds.iter().all(|b| *b == 0.0);
    if !frozen {
        let mut step = cfg.step_size;
        for iter in 1..=cfg.max_iters {
            let grad: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| -> Result<f64, SparsifyError> {
                    let eps = cfg.fd_epsilon * (1.0 + r[i].abs());
                    let mut plus = r.clone();
                    plus[i] += eps;
                    let mut minus = r.clone();
                    minus[i] -= eps;
                    Ok((score(&plus)?.value - score(&minus)?.value) / (2.0 * eps))
                })
                .collect::<Result<_, _>>()?;
            if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < 1e-14 {
                break;
            }
            let candidate: Vec<f64> = (0..n)
                .map(|i| (r[i] - step * grad[i]).clamp(r_init[i] - bounds[i], r_init[i] + bounds[i]))
                .collect();
            let scored = score(&candidate)?;
            if scored.value <= current.value {
                let gain = current.value - scored.value;
                r = candidate;
                current = scored;
                trace.push(BaselineTraceRow {
                    iter,
                    unfaith: current.unfaith,
                    r_omega: current.r_omega,
                    l1: current.l1,
                    r: r.clone(),
                });
                if gain <= 1e-12 * (1.0 + current.value.abs()) {
                    break;
                }
            } else {
                step *= 0.5;
                if step < cfg.step_size * 1e-9 {
                    break;
                }
            }
        }
    }

    let baseline = BaselineVector::new(r, r_init.to_vec(), taus)?;
    Ok((baseline, trace))
}

/// Removal trace CSV: `step,mask,unfaith,r_omega,l1`.
pub fn write_removal_trace(mut out: impl Write, trace: &[RemovalStep]) -> std::io::Result<()> {
    writeln!(out, "step,mask,unfaith,r_omega,l1")?;
    for row in trace {
        writeln!(out, "{},{},{},{},{}", row.step, row.removed.bits(), row.unfaith, row.r_omega, row.l1)?;
    }
    Ok(())
}

/// Objective trace CSV: `iter,unfaith,r_omega,l1`.
pub fn write_objective_trace(mut out: impl Write, trace: &[BaselineTraceRow]) -> std::io::Result<()> {
    writeln!(out, "iter,unfaith,r_omega,l1")?;
    for row in trace {
        writeln!(out, "{},{},{},{}", row.iter, row.unfaith, row.r_omega, row.l1)?;
    }
    Ok(())
}

/// Explanation JSON: the retained pattern set with its quality figures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplanationFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub n: usize,
    pub variables: Vec<String>,
    pub v_full: f64,
    pub delta: f64,
    pub unfaith: f64,
    pub r_omega: f64,
    pub patterns: Vec<PatternEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternEntry {
    pub mask: u32,
    pub members: Vec<String>,
    pub w: f64,
}

impl ExplanationFile {
    pub fn from_explanation(
        expl: &SparseExplanation,
        v_full: f64,
        names: &[String],
        config_hash: Option<String>,
    ) -> Result<Self, SparsifyError> {
        if names.len() != expl.n() {
            return Err(SparsifyError::Format(format!("{} names for {} variables", names.len(), expl.n())));
        }
        let mut ranked: Vec<&(VariableSet, f64)> = expl.patterns().iter().collect();
        ranked.sort_by(|a, b| {
            b.1.abs()
                .partial_cmp(&a.1.abs())
                .expect("finite effects")
                .then(a.0.bits().cmp(&b.0.bits()))
        });
        Ok(ExplanationFile {
            config_hash,
            n: expl.n(),
            variables: names.to_vec(),
            v_full,
            delta: expl.delta(),
            unfaith: expl.unfaith(),
            r_omega: expl.r_omega(),
            patterns: ranked
                .into_iter()
                .map(|(s, w)| PatternEntry {
                    mask: s.bits(),
                    members: s.members().map(|i| names[i].clone()).collect(),
                    w: *w,
                })
                .collect(),
        })
    }

    /// Parses and validates the structural invariants (mask ranges, name
    /// consistency, finite numbers).
    pub fn from_json_slice(bytes: &[u8]) -> Result<Self, SparsifyError> {
        let file: ExplanationFile = serde_json::from_slice(bytes)?;
        if file.variables.len() != file.n {
            return Err(SparsifyError::Format("variable list length mismatch".into()));
        }
        for p in &file.patterns {
            let s = VariableSet::new(p.mask, file.n).map_err(|e| SparsifyError::Format(e.to_string()))?;
            if !p.w.is_finite() {
                return Err(SparsifyError::Format("non-finite pattern weight".into()));
            }
            if p.members.len() != s.cardinality() as usize {
                return Err(SparsifyError::Format("member list does not match mask".into()));
            }
        }
        if ![file.v_full, file.delta, file.unfaith, file.r_omega].iter().all(|v| v.is_finite()) {
            return Err(SparsifyError::Format("non-finite summary field".into()));
        }
        Ok(file)
    }

    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("explanation serializes");
        bytes.push(b'\n');
        bytes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harsanyi::{compute_spectrum, EffectSpectrum, Provenance};
    use crate::oracle::TableOracle;
    use rand::{Rng, SeedableRng};

    fn random_game(n: usize, seed: u64) -> EffectSpectrum {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = SubsetTable::from_fn(n, |_| rng.gen_range(-2.0..2.0)).unwrap();
        EffectSpectrum::from_values(v, Provenance::unknown()).unwrap()
    }

    fn game_0125() -> EffectSpectrum {
        let v = SubsetTable::from_values(2, vec![0.0, 1.0, 2.0, 5.0]).unwrap();
        EffectSpectrum::from_values(v, Provenance::unknown()).unwrap()
    }

    /// Independent unfaithfulness oracle: direct double loop over (mask,
    /// retained pattern) pairs, no transforms involved.
    fn brute_unfaith(v: &SubsetTable, patterns: &[(VariableSet, f64)]) -> f64 {
        v.masks()
            .map(|s| {
                let y: f64 = patterns.iter().filter(|(t, _)| t.is_subset_of(&s)).map(|(_, w)| w).sum();
                let d = v.get(s) - y;
                d * d
            })
            .sum()
    }

    #[test]
    fn full_lattice_explanation_is_faithful() {
        let spec = random_game(8, 1);
        let expl = SparseExplanation::full(&spec);
        assert!(expl.unfaith() < 1e-20, "unfaith = {:e}", expl.unfaith());
        assert!((expl.r_omega() - 1.0).abs() < 1e-12);
        assert!(expl.delta().abs() < 1e-9);
    }

    #[test]
    fn empty_explanation_costs_sum_of_squares() {
        let spec = random_game(5, 2);
        let expl = SparseExplanation::from_retained(&spec, Vec::new());
        let expect: f64 = spec.values().values().iter().map(|v| v * v).sum();
        assert!((expl.unfaith() - expect).abs() < 1e-9);
    }

    #[test]
    fn dropping_a_zero_effect_keeps_unfaith_zero() {
        // n=2, v=(0,1,2,5): dropping ∅ (whose effect is 0) changes nothing.
        let spec = game_0125();
        let patterns: Vec<(VariableSet, f64)> = spec
            .effects()
            .masks()
            .filter(|s| !s.is_empty())
            .map(|s| (s, spec.effect(s)))
            .collect();
        let expl = SparseExplanation::from_retained(&spec, patterns);
        assert_eq!(expl.unfaith(), 0.0);
    }

    #[test]
    fn explained_ratio_arithmetic() {
        let spec = game_0125();
        // All nonzero patterns retained: delta = 0, ratio = 1.
        let full = SparseExplanation::full(&spec);
        assert!((explained_ratio(&full) - 1.0).abs() < 1e-12);
        // Empty omega with nonzero output: ratio = 0.
        let empty = SparseExplanation::from_retained(&spec, Vec::new());
        assert_eq!(explained_ratio(&empty), 0.0);
        // Sum |w| = 8, |delta| = 2 -> 0.8 (hand arithmetic).
        let fake = SparseExplanation {
            n: 2,
            patterns: vec![(VariableSet::full(2), 8.0)],
            delta: 2.0,
            unfaith: 0.0,
            r_omega: 0.0,
        };
        assert!((explained_ratio(&fake) - 0.8).abs() < 1e-12);
        // Degenerate all-zero spectrum: defined as 1.
        let zero_spec = EffectSpectrum::from_values(SubsetTable::zeros(2).unwrap(), Provenance::unknown()).unwrap();
        assert_eq!(explained_ratio(&SparseExplanation::full(&zero_spec)), 1.0);
    }

    #[test]
    fn pristine_removal_cost_is_squared_mass() {
        // With zero residuals the first-step cost is w_U^2 * 2^(n-|U|).
        let spec = game_0125();
        let w = spec.effects();
        let expect: Vec<f64> = (0..4u32)
            .map(|bits| {
                let wu = w.get_bits(bits);
                wu * wu * (1 << (2 - bits.count_ones())) as f64
            })
            .collect();
        assert_eq!(expect, vec![0.0, 2.0, 8.0, 4.0]);
        let result = greedy_prune(&spec, &PruneConfig { max_patterns: Some(2), min_ratio: None }).unwrap();
        // First removal: ∅ at zero cost. Second: {1} at cost 2 (vs 8 and 4).
        assert_eq!(result.trace.len(), 2);
        assert_eq!(result.trace[0].removed.bits(), 0b00);
        assert!((result.trace[0].delta_unfaith).abs() < 1e-12);
        assert_eq!(result.trace[1].removed.bits(), 0b01);
        assert!((result.trace[1].delta_unfaith - 2.0).abs() < 1e-12);
        assert!((result.explanation.unfaith() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn prune_removes_only_noise_when_budget_allows() {
        // Spectrum with exactly 3 nonzero effects; with max_patterns = 3 only
        // zero-effect patterns go, and unfaithfulness stays 0.
        let spec = game_0125();
        let result = greedy_prune(&spec, &PruneConfig { max_patterns: Some(3), min_ratio: None }).unwrap();
        assert_eq!(result.explanation.len(), 3);
        assert_eq!(result.explanation.unfaith(), 0.0);
        assert!(result.explanation.patterns().iter().all(|(_, w)| *w != 0.0));
        assert!(result.satisfied);
    }

    #[test]
    fn incremental_cost_matches_brute_force_each_step() {
        for seed in 0..4 {
            let n = 6;
            let spec = random_game(n, 50 + seed);
            let result = greedy_prune(&spec, &PruneConfig { max_patterns: Some(0), min_ratio: None }).unwrap();
            assert_eq!(result.trace.len(), 1 << n);

            let mut retained: Vec<(VariableSet, f64)> =
                spec.effects().masks().map(|s| (s, spec.effect(s))).collect();
            let mut prev = brute_unfaith(spec.values(), &retained);
            assert!(prev < 1e-18);
            for step in &result.trace {
                // The chosen pattern must be the enumerated argmin.
                let mut best = f64::INFINITY;
                let mut best_mask = 0u32;
                for (cand, _) in &retained {
                    let hypothetical: Vec<(VariableSet, f64)> =
                        retained.iter().filter(|(s, _)| s != cand).cloned().collect();
                    let cost = brute_unfaith(spec.values(), &hypothetical) - prev;
                    if cost < best - 1e-12 {
                        best = cost;
                        best_mask = cand.bits();
                    }
                }
                assert_eq!(step.removed.bits(), best_mask, "seed {seed} step {}", step.step);
                retained.retain(|(s, _)| *s != step.removed);
                let now = brute_unfaith(spec.values(), &retained);
                assert!((step.delta_unfaith - (now - prev)).abs() < 1e-8, "step {}", step.step);
                assert!((step.unfaith - now).abs() < 1e-8);
                prev = now;
            }
        }
    }

    #[test]
    fn min_ratio_floor_stops_removals() {
        let spec = random_game(6, 9);
        let result = greedy_prune(&spec, &PruneConfig { max_patterns: None, min_ratio: Some(0.7) }).unwrap();
        assert!(result.explanation.r_omega() >= 0.7);
        assert!(result.satisfied);
        // Asking for fewer patterns than the floor allows is flagged.
        let strict = greedy_prune(&spec, &PruneConfig { max_patterns: Some(0), min_ratio: Some(0.99) }).unwrap();
        if !strict.explanation.is_empty() {
            assert!(!strict.satisfied);
            assert!(strict.explanation.r_omega() >= 0.99);
        }
    }

    #[test]
    fn prune_requires_a_bound() {
        let spec = game_0125();
        assert!(matches!(greedy_prune(&spec, &PruneConfig::default()), Err(SparsifyError::Config(_))));
    }

    #[test]
    fn ratio_bookkeeping_matches_definitions_along_trace() {
        let spec = random_game(6, 31);
        let result = greedy_prune(&spec, &PruneConfig { max_patterns: Some(0), min_ratio: None }).unwrap();
        let mut retained: Vec<(VariableSet, f64)> =
            spec.effects().masks().map(|s| (s, spec.effect(s))).collect();
        for step in &result.trace {
            retained.retain(|(s, _)| *s != step.removed);
            let mass: f64 = retained.iter().map(|(_, w)| w.abs()).sum();
            let delta = spec.v_full() - retained.iter().map(|(_, w)| w).sum::<f64>();
            let denom = mass + delta.abs();
            let expect = if denom == 0.0 { 1.0 } else { mass / denom };
            assert!((step.r_omega - expect).abs() < 1e-9);
            assert!((step.l1 - mass).abs() < 1e-9);
        }
    }

    #[test]
    fn baseline_frozen_when_tau_factor_zero() {
        let table_for = |r: &[f64]| {
            SubsetTable::from_fn(2, |s| if s.contains(0) { 1.0 } else { r[0] }).map_err(OracleError::from)
        };
        let cfg = BaselineOptConfig { tau_factor: 0.0, ..Default::default() };
        let (baseline, trace) = learn_baseline(table_for, &[0.3, -0.2], &[4.0, 4.0], &cfg).unwrap();
        assert_eq!(baseline.r(), &[0.3, -0.2]);
        assert_eq!(trace.len(), 1);
    }

    #[test]
    fn baseline_learning_on_linear_game_reaches_the_corner() {
        // Linear game v(x_S) = Σ a_i (x_S)_i with all a_i > 0, all x_i far
        // above the ball, and v(r) < 0 throughout the ball. Closed form:
        //   L1(r) = Σ a_i (x_i - r_i) - Σ a_i r_i = Σ a_i x_i - 2 Σ a_i r_i,
        // strictly decreasing in every coordinate, so the constrained optimum
        // sits at r_i = r_init_i + sqrt(tau_i).
        let a = [1.0, 2.0, 0.5];
        let x = [5.0, 4.0, 6.0];
        let r_init = [-10.0, -12.0, -9.0];
        let variance = [25.0, 25.0, 25.0]; // tau = 0.25, bound = 0.5
        let sample = crate::oracle::Sample::new(x.to_vec()).unwrap();
        let table_for = |r: &[f64]| -> Result<SubsetTable, OracleError> {
            let baseline = BaselineVector::fixed(r.to_vec());
            SubsetTable::from_fn(3, |s| {
                let m = crate::oracle::mask_sample(&sample, &baseline, s).unwrap();
                a.iter().zip(&m).map(|(ai, mi)| ai * mi).sum()
            })
            .map_err(OracleError::from)
        };
        let cfg = BaselineOptConfig { step_size: 0.2, max_iters: 60, ..Default::default() };
        let (baseline, trace) = learn_baseline(table_for, &r_init, &variance, &cfg).unwrap();

        for (i, r) in baseline.r().iter().enumerate() {
            let expect = r_init[i] + 0.5;
            assert!((r - expect).abs() < 1e-3, "coordinate {i}: {r} vs {expect}");
        }
        // Non-increasing objective, unfaith pinned at zero, constraint held.
        for win in trace.windows(2) {
            assert!(win[1].l1 <= win[0].l1 + 1e-12);
        }
        for row in &trace {
            assert!(row.unfaith < 1e-9);
            for (i, ri) in row.r.iter().enumerate() {
                let d = ri - r_init[i];
                assert!(d * d <= 0.25 + 1e-9);
            }
        }
    }

    #[test]
    fn prune_trace_csv_shape() {
        let spec = game_0125();
        let result = greedy_prune(&spec, &PruneConfig { max_patterns: Some(2), min_ratio: None }).unwrap();
        let mut buf = Vec::new();
        write_removal_trace(&mut buf, &result.trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("step,mask,unfaith,r_omega,l1"));
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn explanation_file_round_trip() {
        let spec = random_game(4, 12);
        let pruned = greedy_prune(&spec, &PruneConfig { max_patterns: Some(5), min_ratio: None }).unwrap();
        let names: Vec<String> = (1..=4).map(|i| format!("x{i}")).collect();
        let file = ExplanationFile::from_explanation(&pruned.explanation, spec.v_full(), &names, None).unwrap();
        let bytes = file.to_json_bytes();
        let back = ExplanationFile::from_json_slice(&bytes).unwrap();
        assert_eq!(back.to_json_bytes(), bytes);
        assert_eq!(back.patterns.len(), pruned.explanation.len());
    }

    #[test]
    fn spectrum_prune_pipeline_smoke() {
        // End-to-end on a sparse synthetic game through the table oracle.
        let n = 6;
        let t = VariableSet::from_members(&[1, 2], n).unwrap();
        let u = VariableSet::from_members(&[3, 4, 5], n).unwrap();
        let v = SubsetTable::from_fn(n, |s| {
            let mut acc = 0.0;
            if t.is_subset_of(&s) {
                acc += 2.0;
            }
            if u.is_subset_of(&s) {
                acc -= 1.0;
            }
            acc
        })
        .unwrap();
        let spec = compute_spectrum(&TableOracle::new(v)).unwrap();
        let result = greedy_prune(&spec, &PruneConfig { max_patterns: Some(2), min_ratio: None }).unwrap();
        let masks: Vec<u32> = result.explanation.patterns().iter().map(|(s, _)| s.bits()).collect();
        assert_eq!(masks, vec![t.bits(), u.bits()]);
        assert!(result.explanation.unfaith() < 1e-18);
    }
}

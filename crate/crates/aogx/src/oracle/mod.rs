//! Everything that produces `v(x_S)`: masking semantics, the log-odds output
//! wrapper, synthetic ground-truth function suites, an MLP forward engine,
//! and an external-process oracle.

mod dataset;
mod mlp;
mod subprocess;
mod synthetic;

pub use dataset::SampleSet;
pub use mlp::{Activation, Layer, MlpModel, MlpOracle, OutputMode};
pub use subprocess::SubprocessOracle;
pub use synthetic::{
    generate_synthetic_suite, ground_truth_patterns, SyntheticFunction, SyntheticKind,
    SyntheticOracle, Term, TermOp,
};

use crate::lattice::{LatticeError, SubsetTable, VariableSet};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("backend failure at mask {mask:#x}: {message}")]
    Backend { mask: u32, message: String },
    #[error("oracle process failure: {message}")]
    Process { message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed oracle input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// An input sample: the observed value of each of the `n` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    x: Vec<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>) -> Result<Self, OracleError> {
        if x.is_empty() {
            return Err(OracleError::InvalidParameter("empty sample".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(OracleError::Format("non-finite sample entry".into()));
        }
        Ok(Self { x })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }
}

/// Baseline values substituted for masked variables, together with the
/// initial point and the per-coordinate movement budget.
///
/// Invariant: `(r_i - r_init_i)^2 <= tau_i` for every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineVector {
    r: Vec<f64>,
    r_init: Vec<f64>,
    tau: Vec<f64>,
}

impl BaselineVector {
    pub fn new(r: Vec<f64>, r_init: Vec<f64>, tau: Vec<f64>) -> Result<Self, OracleError> {
        if r.len() != r_init.len() || r.len() != tau.len() {
            return Err(OracleError::DimensionMismatch { expected: r.len(), got: r_init.len().max(tau.len()) });
        }
        if tau.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(OracleError::InvalidParameter("tau entries must be finite and non-negative".into()));
        }
        for i in 0..r.len() {
            let d = r[i] - r_init[i];
            // Tiny slack so that values landing exactly on the ball boundary
            // survive roundtrips through text formats.
            if d * d > tau[i] + 1e-12 * (1.0 + tau[i]) {
                return Err(OracleError::InvalidParameter(format!(
                    "baseline r[{i}] = {} violates (r - r_init)^2 <= tau with r_init = {}, tau = {}",
                    r[i], r_init[i], tau[i]
                )));
            }
        }
        Ok(Self { r, r_init, tau })
    }

    /// A frozen baseline: `r = r_init`, zero movement budget.
    pub fn fixed(r: Vec<f64>) -> Self {
        let tau = vec![0.0; r.len()];
        Self { r_init: r.clone(), r, tau }
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn r_init(&self) -> &[f64] {
        &self.r_init
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// Short content hash over `r`, used in spectrum provenance.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for v in &self.r {
            h.update(v.to_le_bytes());
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Masked sample: entry `i` is `x_i` if `i ∈ S`, else the baseline `r_i`.
pub fn mask_sample(sample: &Sample, baseline: &BaselineVector, s: VariableSet) -> Result<Vec<f64>, OracleError> {
    let n = sample.n();
    if baseline.n() != n {
        return Err(OracleError::DimensionMismatch { expected: n, got: baseline.n() });
    }
    if s.n() != n {
        return Err(OracleError::DimensionMismatch { expected: n, got: s.n() });
    }
    Ok((0..n)
        .map(|i| if s.contains(i) { sample.values()[i] } else { baseline.r()[i] })
        .collect())
}

/// Whether an oracle tolerates concurrent `value` calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flight {
    /// Safe to call from many threads at once.
    Concurrent,
    /// Calls must be serialized; the engine batches instead.
    SingleFlight,
}

/// Abstract evaluator mapping a variable subset to `v(x_S)`.
///
/// Implementations must be deterministic: the same mask yields the same value
/// on every call.
pub trait ValueOracle: Sync {
    fn n(&self) -> usize;

    /// `v(x_S)` for a single mask.
    fn value(&self, s: VariableSet) -> Result<f64, OracleError>;

    /// Batched evaluation; backends with per-call overhead override this.
    fn value_batch(&self, masks: &[VariableSet]) -> Result<Vec<f64>, OracleError> {
        masks.iter().map(|&s| self.value(s)).collect()
    }

    fn flight(&self) -> Flight {
        Flight::Concurrent
    }

    /// Stable identifier used in spectrum provenance.
    fn describe(&self) -> String {
        "oracle".into()
    }
}

impl<T: ValueOracle + ?Sized> ValueOracle for &T {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn value(&self, s: VariableSet) -> Result<f64, OracleError> {
        (**self).value(s)
    }
    fn value_batch(&self, masks: &[VariableSet]) -> Result<Vec<f64>, OracleError> {
        (**self).value_batch(masks)
    }
    fn flight(&self) -> Flight {
        (**self).flight()
    }
    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Default number of masks per batch handed to the backend.
pub const DEFAULT_BATCH: usize = 256;

/// Evaluates `v(x_S)` for every one of the `2^n` masks.
///
/// Concurrent oracles are driven in parallel batches; single-flight oracles
/// get sequential batches. Either way the resulting table is identical.
pub fn evaluate_table(oracle: &dyn ValueOracle) -> Result<SubsetTable, OracleError> {
    evaluate_table_with(oracle, DEFAULT_BATCH)
}

pub fn evaluate_table_with(oracle: &dyn ValueOracle, batch_size: usize) -> Result<SubsetTable, OracleError> {
    let n = oracle.n();
    let mut table = SubsetTable::zeros(n)?;
    let batch_size = batch_size.max(1);
    let masks: Vec<VariableSet> = table.masks().collect();

    let run_batch = |chunk: &[VariableSet]| -> Result<Vec<f64>, OracleError> {
        let values = oracle.value_batch(chunk)?;
        if values.len() != chunk.len() {
            return Err(OracleError::Backend {
                mask: chunk[0].bits(),
                message: format!("backend returned {} values for {} masks", values.len(), chunk.len()),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(OracleError::Backend {
                mask: chunk[pos].bits(),
                message: "backend returned a non-finite value".into(),
            });
        }
        Ok(values)
    };

    let results: Vec<Vec<f64>> = match oracle.flight() {
        Flight::Concurrent => masks
            .par_chunks(batch_size)
            .map(run_batch)
            .collect::<Result<_, _>>()?,
        Flight::SingleFlight => masks
            .chunks(batch_size)
            .map(run_batch)
            .collect::<Result<_, _>>()?,
    };

    for (chunk, values) in masks.chunks(batch_size).zip(results) {
        for (s, v) in chunk.iter().zip(values) {
            table.set_bits(s.bits(), v);
        }
    }
    Ok(table)
}

/// Log-odds output wrapper: `log(p / (1 - p))` with `p` clamped away from the
/// saturation points.
pub fn log_odds(p: f64) -> f64 {
    const EPS: f64 = 1e-7;
    let p = p.clamp(EPS, 1.0 - EPS);
    (p / (1.0 - p)).ln()
}

/// A game given directly as its value table. Used for random games in the
/// property suites and wherever a spectrum needs checking against hand-built
/// values.
#[derive(Debug, Clone)]
pub struct TableOracle {
    table: SubsetTable,
}

impl TableOracle {
    pub fn new(table: SubsetTable) -> Self {
        Self { table }
    }

    pub fn table(&self) -> &SubsetTable {
        &self.table
    }
}

impl ValueOracle for TableOracle {
    fn n(&self) -> usize {
        self.table.n()
    }

    fn value(&self, s: VariableSet) -> Result<f64, OracleError> {
        Ok(self.table.get(s))
    }

    fn describe(&self) -> String {
        format!("table(n={})", self.table.n())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_sample_substitutes_baseline() {
        let x = Sample::new(vec![3.0, -1.0]).unwrap();
        let r = BaselineVector::fixed(vec![0.0, 0.5]);
        let s = VariableSet::from_members(&[0], 2).unwrap();
        assert_eq!(mask_sample(&x, &r, s).unwrap(), vec![3.0, 0.5]);
    }

    #[test]
    fn mask_sample_full_and_empty() {
        let x = Sample::new(vec![1.0, 2.0, 3.0]).unwrap();
        let r = BaselineVector::fixed(vec![-1.0, -2.0, -3.0]);
        assert_eq!(mask_sample(&x, &r, VariableSet::full(3)).unwrap(), x.values());
        assert_eq!(mask_sample(&x, &r, VariableSet::empty(3)).unwrap(), r.r());
    }

    #[test]
    fn mask_sample_dimension_mismatch() {
        let x = Sample::new(vec![1.0, 2.0]).unwrap();
        let r = BaselineVector::fixed(vec![0.0]);
        let s = VariableSet::empty(2);
        assert!(matches!(mask_sample(&x, &r, s), Err(OracleError::DimensionMismatch { .. })));
    }

    #[test]
    fn baseline_ball_invariant_enforced() {
        let bad = BaselineVector::new(vec![1.0], vec![0.0], vec![0.5]);
        assert!(bad.is_err());
        let ok = BaselineVector::new(vec![0.5], vec![0.0], vec![0.25]);
        assert!(ok.is_ok());
    }

    #[test]
    fn log_odds_examples() {
        assert_eq!(log_odds(0.5), 0.0);
        // ln 9 by hand: ln 9 = 2.1972245773362196.
        assert!((log_odds(0.9) - 2.1972245773362196).abs() < 1e-12);
        // Inverse pair with the sigmoid over a wide range.
        for k in -10..=10 {
            let t = k as f64;
            let p = 1.0 / (1.0 + (-t).exp());
            assert!((log_odds(p) - t).abs() < 1e-6, "t = {t}");
        }
        assert!(log_odds(0.0).is_finite());
        assert!(log_odds(1.0).is_finite());
    }

    #[test]
    fn constant_oracle_gives_constant_table() {
        struct Const;
        impl ValueOracle for Const {
            fn n(&self) -> usize {
                5
            }
            fn value(&self, _: VariableSet) -> Result<f64, OracleError> {
                Ok(4.5)
            }
        }
        let t = evaluate_table(&Const).unwrap();
        assert!(t.values().iter().all(|&v| v == 4.5));
    }

    #[test]
    fn table_oracle_round_trips() {
        let table = SubsetTable::from_values(2, vec![0.0, 1.0, 2.0, 5.0]).unwrap();
        let o = TableOracle::new(table.clone());
        let t = evaluate_table(&o).unwrap();
        assert_eq!(t.values(), table.values());
    }

    #[test]
    fn evaluate_table_reports_offending_mask() {
        struct Bad;
        impl ValueOracle for Bad {
            fn n(&self) -> usize {
                3
            }
            fn value(&self, s: VariableSet) -> Result<f64, OracleError> {
                if s.bits() == 5 {
                    Ok(f64::NAN)
                } else {
                    Ok(0.0)
                }
            }
            fn flight(&self) -> Flight {
                Flight::SingleFlight
            }
        }
        match evaluate_table(&Bad) {
            Err(OracleError::Backend { mask, .. }) => assert_eq!(mask, 5),
            other => panic!("expected backend error, got {other:?}"),
        }
    }
}

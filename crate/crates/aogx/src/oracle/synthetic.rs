//! Synthetic functions with known ground-truth causal patterns, and the
//! deterministic suite generators behind the bench metrics.
//!
//! Four families:
//!
//! - `add_mul`: sums of products of binary variables, every coefficient 1,
//!   e.g. `x1*x3 + x3*x4*x5 + x4*x6`. A term's variable set is a ground-truth
//!   pattern whenever all of its variables are 1 in the sample.
//! - `add_mul_coeff`: same shape with per-term coefficients, so the term
//!   coefficients double as ground-truth causal effects.
//! - `sigmoid_family`: mixes product terms with saturated sigmoid gates of
//!   the form `c * sigmoid(5*prod(pos) - 5*sum(neg) - 2.5)`; a gate's pattern
//!   covers both its positive and negated variables and counts as active only
//!   when the gate fires.
//! - `and_or`: a boolean OR over AND clauses of threshold indicators
//!   `(x_i > 0)`, evaluated on real-valued (Gaussian) samples; a clause is a
//!   valid ground-truth pattern when all member values exceed 0.5.

use super::{mask_sample, BaselineVector, OracleError, Sample, ValueOracle};
use crate::lattice::VariableSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Samples generated per function by [`generate_synthetic_suite`].
pub const SAMPLES_PER_FUNCTION: usize = 200;

/// Gate steepness of sigmoid-family terms; `sigmoid(5p - 5q - 2.5)` crosses
/// 0.5 exactly between "all positives present, all negated absent" and every
/// other binary assignment.
const SIGMOID_GAIN: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    AddMul,
    AddMulCoeff,
    SigmoidFamily,
    AndOr,
}

impl std::fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SyntheticKind::AddMul => "add_mul",
            SyntheticKind::AddMulCoeff => "add_mul_coeff",
            SyntheticKind::SigmoidFamily => "sigmoid_family",
            SyntheticKind::AndOr => "and_or",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, OracleError> {
        match s {
            "add_mul" => Ok(SyntheticKind::AddMul),
            "add_mul_coeff" => Ok(SyntheticKind::AddMulCoeff),
            "sigmoid_family" => Ok(SyntheticKind::SigmoidFamily),
            "and_or" => Ok(SyntheticKind::AndOr),
            other => Err(OracleError::InvalidParameter(format!("unknown synthetic kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermOp {
    Product,
    Sigmoid,
}

/// One additive term. `Product` terms use `positive` only; `Sigmoid` gates
/// split their variables into positives (must be present) and negated ones
/// (must be absent) for the gate to fire.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    op: TermOp,
    positive: VariableSet,
    negated: VariableSet,
    coeff: f64,
}

impl Term {
    pub fn product(vars: VariableSet, coeff: f64) -> Self {
        Self { op: TermOp::Product, positive: vars, negated: VariableSet::empty(vars.n()), coeff }
    }

    pub fn sigmoid_gate(positive: VariableSet, negated: VariableSet, coeff: f64) -> Self {
        Self { op: TermOp::Sigmoid, positive, negated, coeff }
    }

    /// All variables the term touches (positives and negated alike).
    pub fn variables(&self) -> VariableSet {
        self.positive.union(&self.negated)
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn op(&self) -> TermOp {
        self.op
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFunction {
    n: usize,
    kind: SyntheticKind,
    terms: Vec<Term>,
}

impl SyntheticFunction {
    pub fn new(n: usize, kind: SyntheticKind, terms: Vec<Term>) -> Result<Self, OracleError> {
        for (idx, t) in terms.iter().enumerate() {
            if t.variables().is_empty() {
                return Err(OracleError::InvalidParameter(format!("term {idx} has an empty variable set")));
            }
            if t.variables().n() != n {
                return Err(OracleError::DimensionMismatch { expected: n, got: t.variables().n() });
            }
            if t.positive.intersects(&t.negated) {
                return Err(OracleError::InvalidParameter(format!(
                    "term {idx} lists a variable as both positive and negated"
                )));
            }
            if !t.coeff.is_finite() || t.coeff == 0.0 {
                return Err(OracleError::InvalidParameter(format!("term {idx} has coefficient {}", t.coeff)));
            }
            match kind {
                SyntheticKind::AddMul | SyntheticKind::AndOr => {
                    if t.op != TermOp::Product || !t.negated.is_empty() || t.coeff != 1.0 {
                        return Err(OracleError::InvalidParameter(format!(
                            "term {idx} must be a plain unit-coefficient product for kind {kind}"
                        )));
                    }
                }
                SyntheticKind::AddMulCoeff => {
                    if t.op != TermOp::Product || !t.negated.is_empty() {
                        return Err(OracleError::InvalidParameter(format!(
                            "term {idx} must be a product for kind {kind}"
                        )));
                    }
                }
                SyntheticKind::SigmoidFamily => {
                    if t.op == TermOp::Product && !t.negated.is_empty() {
                        return Err(OracleError::InvalidParameter(format!(
                            "product term {idx} cannot carry negated variables"
                        )));
                    }
                }
            }
        }
        Ok(Self { n, kind, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SyntheticKind {
        self.kind
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Evaluates the function on a real-valued vector. Binary families are
    /// polynomials, so masking with real baselines goes through the same
    /// arithmetic path.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64, OracleError> {
        if x.len() != self.n {
            return Err(OracleError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        match self.kind {
            SyntheticKind::AndOr => {
                let hit = self
                    .terms
                    .iter()
                    .any(|t| t.positive.members().all(|i| x[i] > 0.0));
                Ok(if hit { 1.0 } else { 0.0 })
            }
            _ => Ok(self
                .terms
                .iter()
                .map(|t| match t.op {
                    TermOp::Product => t.coeff * t.positive.members().map(|i| x[i]).product::<f64>(),
                    TermOp::Sigmoid => {
                        let p: f64 = t.positive.members().map(|i| x[i]).product();
                        let q: f64 = t.negated.members().map(|i| x[i]).sum();
                        let z = SIGMOID_GAIN * p - SIGMOID_GAIN * q - SIGMOID_GAIN / 2.0;
                        t.coeff / (1.0 + (-z).exp())
                    }
                })
                .sum()),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FunctionFile::from(self.clone())).expect("function serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self, OracleError> {
        let file: FunctionFile = serde_json::from_value(value)?;
        file.try_into()
    }
}

/// Ground-truth causal patterns of `f` active in `sample`.
///
/// Activation rules per family: a product term is active when all of its
/// variables are 1; a sigmoid gate when its positives are 1 and its negated
/// variables 0; an and-or clause when every member exceeds 0.5 on the raw
/// sample, independent of the masking baseline.
pub fn ground_truth_patterns(f: &SyntheticFunction, sample: &Sample) -> Result<BTreeSet<VariableSet>, OracleError> {
    if sample.n() != f.n {
        return Err(OracleError::DimensionMismatch { expected: f.n, got: sample.n() });
    }
    let x = sample.values();
    let mut out = BTreeSet::new();
    for t in &f.terms {
        let active = match f.kind {
            SyntheticKind::AddMul | SyntheticKind::AddMulCoeff => t.positive.members().all(|i| x[i] > 0.5),
            SyntheticKind::SigmoidFamily => {
                t.positive.members().all(|i| x[i] > 0.5) && t.negated.members().all(|i| x[i] < 0.5)
            }
            SyntheticKind::AndOr => t.positive.members().all(|i| x[i] > 0.5),
        };
        if active {
            out.insert(t.variables());
        }
    }
    Ok(out)
}

/// A synthetic function bound to one sample and baseline, evaluated under
/// masking.
#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    function: SyntheticFunction,
    sample: Sample,
    baseline: BaselineVector,
}

impl SyntheticOracle {
    pub fn new(function: SyntheticFunction, sample: Sample, baseline: BaselineVector) -> Result<Self, OracleError> {
        if sample.n() != function.n() || baseline.n() != function.n() {
            return Err(OracleError::DimensionMismatch {
                expected: function.n(),
                got: sample.n().max(baseline.n()),
            });
        }
        Ok(Self { function, sample, baseline })
    }

    pub fn function(&self) -> &SyntheticFunction {
        &self.function
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn baseline(&self) -> &BaselineVector {
        &self.baseline
    }
}

impl ValueOracle for SyntheticOracle {
    fn n(&self) -> usize {
        self.function.n()
    }

    fn value(&self, s: VariableSet) -> Result<f64, OracleError> {
        let masked = mask_sample(&self.sample, &self.baseline, s)?;
        self.function.evaluate(&masked)
    }

    fn describe(&self) -> String {
        format!("synthetic({}, n={}, terms={})", self.function.kind(), self.function.n(), self.function.terms().len())
    }
}

/// Deterministically generates `count` functions of the given family plus
/// [`SAMPLES_PER_FUNCTION`] samples each. Binary families get fair-coin
/// samples; the and-or family gets standard Gaussian samples.
pub fn generate_synthetic_suite(
    kind: SyntheticKind,
    count: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<(SyntheticFunction, Vec<Sample>)>, OracleError> {
    if !(6..=12).contains(&n) {
        return Err(OracleError::InvalidParameter(format!("n = {n} outside supported suite range [6, 12]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let f = match kind {
            SyntheticKind::AddMul | SyntheticKind::AddMulCoeff => random_add_mul(kind, n, &mut rng)?,
            SyntheticKind::SigmoidFamily => random_sigmoid_family(n, &mut rng)?,
            SyntheticKind::AndOr => random_and_or(n, &mut rng)?,
        };
        let samples = (0..SAMPLES_PER_FUNCTION)
            .map(|_| {
                let x = match kind {
                    SyntheticKind::AndOr => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
                    _ => (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect(),
                };
                Sample::new(x).expect("generated sample is valid")
            })
            .collect();
        out.push((f, samples));
    }
    Ok(out)
}

/// Draws a random subset with `size` members, distinct from those already
/// taken. Retries until it finds a fresh one; the caller caps the requested
/// count well below the pool size.
fn draw_distinct_subset(
    n: usize,
    size: usize,
    taken: &mut BTreeSet<u32>,
    rng: &mut ChaCha8Rng,
) -> Option<VariableSet> {
    for _ in 0..10_000 {
        let mut bits = 0u32;
        while (bits.count_ones() as usize) < size {
            bits |= 1 << rng.gen_range(0..n);
        }
        if taken.insert(bits) {
            return VariableSet::new(bits, n).ok();
        }
    }
    None
}

fn random_add_mul(kind: SyntheticKind, n: usize, rng: &mut ChaCha8Rng) -> Result<SyntheticFunction, OracleError> {
    // Term sizes 1..=4 as in the published example functions; the distinct
    // pool for those sizes caps how many terms small n can host.
    let max_size = 4.min(n);
    let mut remaining: Vec<usize> = (0..=max_size).map(|k| binomial(n, k)).collect();
    let pool: usize = remaining[1..].iter().sum();
    let requested = rng.gen_range(10..=100);
    let n_terms = requested.min(pool.saturating_sub(1)).max(1);
    let mut taken = BTreeSet::new();
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let mut size = rng.gen_range(1..=max_size);
        while remaining[size] == 0 {
            size = rng.gen_range(1..=max_size);
        }
        remaining[size] -= 1;
        let vars = draw_distinct_subset(n, size, &mut taken, rng)
            .ok_or_else(|| OracleError::InvalidParameter("term pool exhausted".into()))?;
        let coeff = match kind {
            SyntheticKind::AddMul => 1.0,
            _ => {
                let mag = rng.gen_range(1..=5) as f64;
                if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            }
        };
        terms.push(Term::product(vars, coeff));
    }
    SyntheticFunction::new(n, kind, terms)
}

fn random_sigmoid_family(n: usize, rng: &mut ChaCha8Rng) -> Result<SyntheticFunction, OracleError> {
    let n_terms = rng.gen_range(2..=5);
    let mut taken = BTreeSet::new();
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        if rng.gen_bool(0.5) {
            let size = rng.gen_range(1..=3.min(n));
            let vars = draw_distinct_subset(n, size, &mut taken, rng)
                .ok_or_else(|| OracleError::InvalidParameter("term pool exhausted".into()))?;
            terms.push(Term::product(vars, sign));
        } else {
            let pos_size = rng.gen_range(1..=2);
            let neg_size = rng.gen_range(0..=1);
            let all = draw_distinct_subset(n, pos_size + neg_size, &mut taken, rng)
                .ok_or_else(|| OracleError::InvalidParameter("term pool exhausted".into()))?;
            let members: Vec<usize> = all.members().collect();
            let positive = VariableSet::from_members(&members[..pos_size], n)?;
            let negated = VariableSet::from_members(&members[pos_size..], n)?;
            terms.push(Term::sigmoid_gate(positive, negated, sign));
        }
    }
    SyntheticFunction::new(n, SyntheticKind::SigmoidFamily, terms)
}

fn random_and_or(n: usize, rng: &mut ChaCha8Rng) -> Result<SyntheticFunction, OracleError> {
    let n_clauses = rng.gen_range(2..=4);
    let mut taken = BTreeSet::new();
    let mut terms = Vec::with_capacity(n_clauses);
    for _ in 0..n_clauses {
        let size = rng.gen_range(2..=3.min(n));
        let vars = draw_distinct_subset(n, size, &mut taken, rng)
            .ok_or_else(|| OracleError::InvalidParameter("clause pool exhausted".into()))?;
        terms.push(Term::product(vars, 1.0));
    }
    SyntheticFunction::new(n, SyntheticKind::AndOr, terms)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// On-disk representation. Variable indices are 1-based in files, matching
/// the `x1..xn` naming used everywhere else.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct FunctionFile {
    kind: SyntheticKind,
    n: usize,
    terms: Vec<TermFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TermFile {
    #[serde(default = "default_op", skip_serializing_if = "is_product")]
    op: String,
    vars: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    neg: Vec<usize>,
    #[serde(default = "default_coeff")]
    coeff: f64,
}

fn default_op() -> String {
    "product".into()
}

fn is_product(op: &str) -> bool {
    op == "product"
}

fn default_coeff() -> f64 {
    1.0
}

impl From<SyntheticFunction> for FunctionFile {
    fn from(f: SyntheticFunction) -> Self {
        let terms = f
            .terms
            .iter()
            .map(|t| TermFile {
                op: match t.op {
                    TermOp::Product => "product".into(),
                    TermOp::Sigmoid => "sigmoid".into(),
                },
                vars: t.positive.members().map(|i| i + 1).collect(),
                neg: t.negated.members().map(|i| i + 1).collect(),
                coeff: t.coeff,
            })
            .collect();
        FunctionFile { kind: f.kind, n: f.n, terms }
    }
}

impl TryFrom<FunctionFile> for SyntheticFunction {
    type Error = OracleError;

    fn try_from(file: FunctionFile) -> Result<Self, OracleError> {
        let one_based = |vars: &[usize]| -> Result<VariableSet, OracleError> {
            let members: Vec<usize> = vars
                .iter()
                .map(|&v| {
                    v.checked_sub(1)
                        .ok_or_else(|| OracleError::Format("variable indices are 1-based".into()))
                })
                .collect::<Result<_, _>>()?;
            VariableSet::from_members(&members, file.n).map_err(OracleError::from)
        };
        let terms = file
            .terms
            .iter()
            .map(|t| {
                let positive = one_based(&t.vars)?;
                let negated = one_based(&t.neg)?;
                match t.op.as_str() {
                    "product" => {
                        if !negated.is_empty() {
                            return Err(OracleError::Format("product terms cannot list 'neg' variables".into()));
                        }
                        Ok(Term::product(positive, t.coeff))
                    }
                    "sigmoid" => Ok(Term::sigmoid_gate(positive, negated, t.coeff)),
                    other => Err(OracleError::Format(format!("unknown term op '{other}'"))),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        SyntheticFunction::new(file.n, file.kind, terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{mobius_transform, SubsetTable};
    use crate::oracle::evaluate_table;

    /// `x1*x3 + x3*x4*x5 + x4*x6` over six binary variables.
    pub(crate) fn add_mul_example() -> SyntheticFunction {
        let n = 6;
        let t = |vars: &[usize]| Term::product(VariableSet::from_members(vars, n).unwrap(), 1.0);
        SyntheticFunction::new(n, SyntheticKind::AddMul, vec![t(&[0, 2]), t(&[2, 3, 4]), t(&[3, 5])]).unwrap()
    }

    #[test]
    fn add_mul_value_at_corners() {
        let f = add_mul_example();
        let ones = Sample::new(vec![1.0; 6]).unwrap();
        let zero = BaselineVector::fixed(vec![0.0; 6]);
        let oracle = SyntheticOracle::new(f, ones, zero).unwrap();
        let table = evaluate_table(&oracle).unwrap();
        assert_eq!(table.get(VariableSet::full(6)), 3.0);
        assert_eq!(table.get(VariableSet::empty(6)), 0.0);
    }

    #[test]
    fn ground_truth_all_ones() {
        let f = add_mul_example();
        let truth = ground_truth_patterns(&f, &Sample::new(vec![1.0; 6]).unwrap()).unwrap();
        let expect: BTreeSet<VariableSet> = [
            VariableSet::from_members(&[0, 2], 6).unwrap(),
            VariableSet::from_members(&[2, 3, 4], 6).unwrap(),
            VariableSet::from_members(&[3, 5], 6).unwrap(),
        ]
        .into_iter()
        .collect();
        assert_eq!(truth, expect);
    }

    #[test]
    fn ground_truth_drops_terms_with_masked_variable() {
        let f = add_mul_example();
        let truth = ground_truth_patterns(&f, &Sample::new(vec![1.0, 1.0, 0.0, 1.0, 1.0, 1.0]).unwrap()).unwrap();
        let expect: BTreeSet<VariableSet> = [VariableSet::from_members(&[3, 5], 6).unwrap()].into_iter().collect();
        assert_eq!(truth, expect);
    }

    #[test]
    fn sigmoid_gate_activation_rules() {
        // -x1*x2*x3 - sigmoid(5*x4*x5 - 5*x6 - 2.5)
        let n = 6;
        let terms = vec![
            Term::product(VariableSet::from_members(&[0, 1, 2], n).unwrap(), -1.0),
            Term::sigmoid_gate(
                VariableSet::from_members(&[3, 4], n).unwrap(),
                VariableSet::from_members(&[5], n).unwrap(),
                -1.0,
            ),
        ];
        let f = SyntheticFunction::new(n, SyntheticKind::SigmoidFamily, terms).unwrap();

        let truth = ground_truth_patterns(&f, &Sample::new(vec![1.0, 1.0, 1.0, 1.0, 1.0, 0.0]).unwrap()).unwrap();
        let expect: BTreeSet<VariableSet> = [
            VariableSet::from_members(&[0, 1, 2], n).unwrap(),
            VariableSet::from_members(&[3, 4, 5], n).unwrap(),
        ]
        .into_iter()
        .collect();
        assert_eq!(truth, expect);

        // With x6 present the gate is off: only the product term remains.
        let truth = ground_truth_patterns(&f, &Sample::new(vec![1.0; 6]).unwrap()).unwrap();
        assert_eq!(truth.len(), 1);
        assert!(truth.contains(&VariableSet::from_members(&[0, 1, 2], n).unwrap()));
    }

    #[test]
    fn and_or_clause_threshold() {
        let n = 5;
        let clauses = vec![
            Term::product(VariableSet::from_members(&[0, 1], n).unwrap(), 1.0),
            Term::product(VariableSet::from_members(&[2, 4], n).unwrap(), 1.0),
        ];
        let f = SyntheticFunction::new(n, SyntheticKind::AndOr, clauses).unwrap();
        // Both members of {x1,x2} exceed 0.5, the {x3,x5} clause misses x3.
        let truth = ground_truth_patterns(&f, &Sample::new(vec![0.8, 1.5, 0.1, 0.3, 0.9]).unwrap()).unwrap();
        assert_eq!(truth.len(), 1);
        assert!(truth.contains(&VariableSet::from_members(&[0, 1], n).unwrap()));

        // Function evaluation thresholds at zero, not 0.5.
        assert_eq!(f.evaluate(&[0.1, 0.2, -1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(f.evaluate(&[-0.1, 0.2, -1.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn suite_is_deterministic_and_sized() {
        let a = generate_synthetic_suite(SyntheticKind::AddMul, 3, 10, 7).unwrap();
        let b = generate_synthetic_suite(SyntheticKind::AddMul, 3, 10, 7).unwrap();
        assert_eq!(a.len(), 3);
        for ((fa, sa), (fb, sb)) in a.iter().zip(&b) {
            assert_eq!(fa, fb);
            assert_eq!(sa, sb);
            assert_eq!(sa.len(), SAMPLES_PER_FUNCTION);
            assert!(fa.terms().len() >= 10 || fa.n() < 10);
        }
        assert!(generate_synthetic_suite(SyntheticKind::AddMul, 0, 10, 7).unwrap().is_empty());
        assert!(generate_synthetic_suite(SyntheticKind::AddMul, 1, 5, 7).is_err());
    }

    #[test]
    fn spectrum_of_add_mul_recovers_coefficients() {
        // Möbius over the masked table lands the coefficient on each active
        // term's mask, zero elsewhere.
        let suite = generate_synthetic_suite(SyntheticKind::AddMulCoeff, 2, 8, 99).unwrap();
        for (f, samples) in suite {
            let sample = samples[0].clone();
            let truth = ground_truth_patterns(&f, &sample).unwrap();
            let oracle = SyntheticOracle::new(f.clone(), sample.clone(), BaselineVector::fixed(vec![0.0; 8])).unwrap();
            let w = mobius_transform(&evaluate_table(&oracle).unwrap());
            let mut expect = SubsetTable::zeros(8).unwrap();
            for t in f.terms() {
                if t.variables().members().all(|i| sample.values()[i] > 0.5) {
                    expect.set_bits(t.variables().bits(), t.coeff());
                }
            }
            for s in w.masks() {
                assert!((w.get(s) - expect.get(s)).abs() < 1e-9, "mask {s}");
                if expect.get(s) != 0.0 {
                    assert!(truth.contains(&s));
                }
            }
        }
    }

    #[test]
    fn function_file_round_trip() {
        let f = add_mul_example();
        let json = f.to_json();
        let back = SyntheticFunction::from_json(json.clone()).unwrap();
        assert_eq!(f, back);
        assert_eq!(json["terms"][0]["vars"], serde_json::json!([1, 3]));
    }

    #[test]
    fn rejects_invalid_terms() {
        let n = 4;
        let empty = VariableSet::empty(n);
        assert!(SyntheticFunction::new(n, SyntheticKind::AddMul, vec![Term::product(empty, 1.0)]).is_err());
        let vars = VariableSet::from_members(&[0], n).unwrap();
        assert!(SyntheticFunction::new(n, SyntheticKind::AddMul, vec![Term::product(vars, 2.0)]).is_err());
        let overlap = Term::sigmoid_gate(vars, vars, 1.0);
        assert!(SyntheticFunction::new(n, SyntheticKind::SigmoidFamily, vec![overlap]).is_err());
    }
}

//! Randomized property checks for the seven effect-spectrum axioms:
//! efficiency, linearity, dummy, symmetry, anonymity, recursive, and
//! interaction distribution.
//!
//! Each check builds games whose structure makes the axiom's claim exact in
//! real arithmetic, runs the spectrum machinery, and records the worst
//! violation observed. All violations should sit at roundoff scale.

use super::HarsanyiError;
use crate::lattice::{mobius_transform, SubsetTable, VariableSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct AxiomCheck {
    pub axiom: &'static str,
    pub trials: usize,
    pub max_violation: f64,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub n: usize,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.max_violation))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation() < tol
    }
}

impl std::fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "axiom checks over random games, n = {}", self.n)?;
        for c in &self.checks {
            writeln!(f, "  {:<24} trials {:>4}  max violation {:.3e}", c.axiom, c.trials, c.max_violation)?;
        }
        Ok(())
    }
}

/// Runs `trials` randomized games per axiom at the given `n`.
pub fn verify_axioms(n: usize, trials: usize, seed: u64) -> Result<AxiomReport, HarsanyiError> {
    if trials == 0 {
        return Err(HarsanyiError::Format("trials must be positive".into()));
    }
    if !(2..=12).contains(&n) {
        return Err(HarsanyiError::InvalidOrder { k: n, n: 12 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut run = |axiom: &'static str, f: &mut dyn FnMut(&mut ChaCha8Rng) -> f64, rng: &mut ChaCha8Rng| {
        let mut worst = 0.0f64;
        for _ in 0..trials {
            worst = worst.max(f(rng));
        }
        checks.push(AxiomCheck { axiom, trials, max_violation: worst });
    };

    run("efficiency", &mut |r| efficiency(n, r), &mut rng);
    run("linearity", &mut |r| linearity(n, r), &mut rng);
    run("dummy", &mut |r| dummy(n, r), &mut rng);
    run("symmetry", &mut |r| symmetry(n, r), &mut rng);
    run("anonymity", &mut |r| anonymity(n, r), &mut rng);
    run("recursive", &mut |r| recursive(n, r), &mut rng);
    run("interaction_distribution", &mut |r| interaction_distribution(n, r), &mut rng);

    Ok(AxiomReport { n, checks })
}

fn random_table(n: usize, rng: &mut ChaCha8Rng) -> SubsetTable {
    SubsetTable::from_fn(n, |_| rng.gen_range(-1.0..1.0)).expect("supported n")
}

/// `Σ_S w_S = v(full)`.
fn efficiency(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let v = random_table(n, rng);
    let w = mobius_transform(&v);
    let total: f64 = w.values().iter().sum();
    (total - v.get(VariableSet::full(n))).abs()
}

/// Effects of `a*u + b*v` are `a*w_u + b*w_v`.
fn linearity(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let u = random_table(n, rng);
    let v = random_table(n, rng);
    let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let mix = SubsetTable::from_fn(n, |s| a * u.get(s) + b * v.get(s)).unwrap();
    let wm = mobius_transform(&mix);
    let (wu, wv) = (mobius_transform(&u), mobius_transform(&v));
    wm.masks().fold(0.0f64, |worst, s| worst.max((wm.get(s) - (a * wu.get(s) + b * wv.get(s))).abs()))
}

/// A variable adding a constant marginal on top of any coalition has no
/// effect together with other variables.
fn dummy(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let i = rng.gen_range(0..n);
    let bit = 1u32 << i;
    let c = rng.gen_range(-1.0..1.0);
    let base = random_table(n, rng);
    let v = SubsetTable::from_fn(n, |s| {
        let without = s.bits() & !bit;
        let offset = if without == 0 { 0.0 } else { base.get_bits(without) };
        offset + if s.contains(i) { c } else { 0.0 }
    })
    .unwrap();
    let w = mobius_transform(&v);
    let mut worst = 0.0f64;
    for s in w.masks() {
        if s.contains(i) && s.cardinality() >= 2 {
            worst = worst.max(w.get(s).abs());
        }
    }
    worst
}

/// Variables that cooperate identically carry identical effects.
fn symmetry(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let i = rng.gen_range(0..n);
    let j = (i + 1 + rng.gen_range(0..n - 1)) % n;
    let base = random_table(n, rng);
    let swap = |bits: u32| -> u32 {
        let bi = (bits >> i) & 1;
        let bj = (bits >> j) & 1;
        (bits & !(1 << i) & !(1 << j)) | (bj << i) | (bi << j)
    };
    let v = SubsetTable::from_fn(n, |s| 0.5 * (base.get(s) + base.get_bits(swap(s.bits())))).unwrap();
    let w = mobius_transform(&v);
    let mut worst = 0.0f64;
    for s in w.masks() {
        if !s.contains(i) && !s.contains(j) {
            let wi = w.get_bits(s.bits() | (1 << i));
            let wj = w.get_bits(s.bits() | (1 << j));
            worst = worst.max((wi - wj).abs());
        }
    }
    worst
}

/// Relabeling the variables permutes the spectrum and nothing else.
fn anonymity(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let v = random_table(n, rng);
    let mut perm: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        perm.swap(k, rng.gen_range(0..=k));
    }
    let apply = |bits: u32| -> u32 {
        let mut out = 0u32;
        for (from, &to) in perm.iter().enumerate() {
            if (bits >> from) & 1 == 1 {
                out |= 1 << to;
            }
        }
        out
    };
    // (pi v)(x_{pi S}) = v(x_S)
    let mut pv = SubsetTable::zeros(n).unwrap();
    for s in v.masks() {
        pv.set_bits(apply(s.bits()), v.get(s));
    }
    let w = mobius_transform(&v);
    let pw = mobius_transform(&pv);
    w.masks().fold(0.0f64, |worst, s| worst.max((w.get(s) - pw.get_bits(apply(s.bits()))).abs()))
}

/// `w_{S∪{i}} = w_{S | i present} - w_S` on the sub-lattice without `i`.
fn recursive(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let v = random_table(n, rng);
    let i = rng.gen_range(0..n);
    let bit = 1u32 << i;
    // Compress masks over N \ {i} into n-1 bits.
    let expand = |cm: u32| -> u32 {
        let low = cm & (bit - 1);
        let high = (cm >> i) << (i + 1);
        low | high
    };
    let m = n - 1;
    let absent = SubsetTable::from_fn(m, |s| v.get_bits(expand(s.bits()))).unwrap();
    let present = SubsetTable::from_fn(m, |s| v.get_bits(expand(s.bits()) | bit)).unwrap();
    let w = mobius_transform(&v);
    let w_absent = mobius_transform(&absent);
    let w_present = mobius_transform(&present);
    let mut worst = 0.0f64;
    for cm in 0..(1u32 << m) {
        let lhs = w.get_bits(expand(cm) | bit);
        let rhs = w_present.get_bits(cm) - w_absent.get_bits(cm);
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

/// The interaction function `v_T` concentrates its whole effect at `T`.
fn interaction_distribution(n: usize, rng: &mut ChaCha8Rng) -> f64 {
    let t_bits = rng.gen_range(1..(1u32 << n));
    let t = VariableSet::new(t_bits, n).unwrap();
    let c = rng.gen_range(-2.0..2.0);
    let v = SubsetTable::from_fn(n, |s| if t.is_subset_of(&s) { c } else { 0.0 }).unwrap();
    let w = mobius_transform(&v);
    let mut worst = 0.0f64;
    for s in w.masks() {
        let expect = if s == t { c } else { 0.0 };
        worst = worst.max((w.get(s) - expect).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_axioms_hold_on_random_games() {
        let report = verify_axioms(6, 25, 2024).unwrap();
        assert_eq!(report.checks.len(), 7);
        assert!(report.passes(1e-8), "max violation {:.3e}\n{report}", report.max_violation());
    }

    #[test]
    fn report_rejects_bad_arguments() {
        assert!(verify_axioms(6, 0, 1).is_err());
        assert!(verify_axioms(1, 10, 1).is_err());
        assert!(verify_axioms(13, 10, 1).is_err());
    }
}

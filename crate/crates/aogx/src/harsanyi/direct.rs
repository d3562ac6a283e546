//! Textbook definitions of the derived indices, evaluated on raw game values
//! with factorial weights and inclusion–exclusion differences.
//!
//! These are `O(4^n)`-to-`O(8^n)` verification oracles for the spectrum-based
//! fast paths, deliberately sharing no code with them. Nothing in the
//! extraction pipeline calls this module; it exists so the reallocation
//! identities can be certified on random games.

use super::HarsanyiError;
use crate::lattice::{SubsetTable, VariableSet};

/// `Δv_T(x_S) = Σ_{T'⊆T} (-1)^(|T|-|T'|) v(x_{T'∪S})`, straight off the value
/// table.
pub fn marginal_benefit(v: &SubsetTable, t: VariableSet, s: VariableSet) -> Result<f64, HarsanyiError> {
    if t.is_empty() {
        return Err(HarsanyiError::EmptySet);
    }
    if t.intersects(&s) {
        return Err(HarsanyiError::OverlappingSets);
    }
    let mut acc = 0.0;
    for tp in t.subsets() {
        let sign = if (t.cardinality() - tp.cardinality()).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * v.get(tp.union(&s));
    }
    Ok(acc)
}

/// Shapley value as the size-stratified average of marginal contributions:
/// `phi(i) = (1/n) Σ_m C(n-1,m)^-1 Σ_{|S|=m, S∌i} [v(S∪{i}) - v(S)]`.
pub fn shapley_value(v: &SubsetTable, i: usize) -> f64 {
    let n = v.n();
    assert!(i < n, "variable index out of range");
    let me = VariableSet::singleton(i, n);
    let mut acc = 0.0;
    for s in me.complement().subsets() {
        let m = s.cardinality() as usize;
        let weight = 1.0 / (n as f64 * binom(n - 1, m));
        acc += weight * (v.get(s.union(&me)) - v.get(s));
    }
    acc
}

/// Shapley interaction index with its factorial weights:
/// `Σ_{S⊆N\T} |S|! (n-|S|-|T|)! / (n-|T|+1)! · Δv_T(x_S)`.
pub fn shapley_interaction(v: &SubsetTable, t: VariableSet) -> Result<f64, HarsanyiError> {
    if t.is_empty() {
        return Err(HarsanyiError::EmptySet);
    }
    let n = v.n();
    let t_size = t.cardinality() as usize;
    let denom = factorial(n - t_size + 1);
    let mut acc = 0.0;
    for s in t.complement().subsets() {
        let s_size = s.cardinality() as usize;
        let weight = factorial(s_size) * factorial(n - s_size - t_size) / denom;
        acc += weight * marginal_benefit(v, t, s)?;
    }
    Ok(acc)
}

/// k-th order Shapley-Taylor interaction index from its defining piecewise
/// form: `Δv_T(x_∅)` below order k, the discrete-derivative average at order
/// k, zero above.
pub fn shapley_taylor(v: &SubsetTable, t: VariableSet, k: usize) -> Result<f64, HarsanyiError> {
    let n = v.n();
    if k < 1 || k > n {
        return Err(HarsanyiError::InvalidOrder { k, n });
    }
    let t_size = t.cardinality() as usize;
    if t_size > k {
        return Ok(0.0);
    }
    if t_size < k {
        if t.is_empty() {
            return Ok(v.get(t));
        }
        return marginal_benefit(v, t, VariableSet::empty(n));
    }
    let mut acc = 0.0;
    for s in t.complement().subsets() {
        let m = s.cardinality() as usize;
        acc += marginal_benefit(v, t, s)? / binom(n - 1, m);
    }
    Ok(acc * k as f64 / n as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn binom(n: usize, k: usize) -> f64 {
    super::binomial_f64(n, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harsanyi::{
        marginal_benefit as derived_mb, shapley_interaction_index, shapley_taylor_index, shapley_values,
        EffectSpectrum, Provenance,
    };
    use rand::{Rng, SeedableRng};

    fn random_game(n: usize, seed: u64) -> EffectSpectrum {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = SubsetTable::from_fn(n, |_| rng.gen_range(-2.0..2.0)).unwrap();
        EffectSpectrum::from_values(v, Provenance::unknown()).unwrap()
    }

    #[test]
    fn direct_values_on_the_two_variable_game() {
        let v = SubsetTable::from_values(2, vec![0.0, 1.0, 2.0, 5.0]).unwrap();
        assert!((shapley_value(&v, 0) - 2.0).abs() < 1e-12);
        assert!((shapley_value(&v, 1) - 3.0).abs() < 1e-12);
        let t12 = VariableSet::full(2);
        assert!((shapley_interaction(&v, t12).unwrap() - 2.0).abs() < 1e-12);
        assert!((shapley_taylor(&v, t12, 2).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn derived_equals_direct_on_random_games() {
        for seed in 0..6 {
            let n = 4 + (seed as usize % 3);
            let spec = random_game(n, 400 + seed);
            let v = spec.values();

            let phi = shapley_values(&spec);
            for (i, &p) in phi.iter().enumerate() {
                assert!((p - shapley_value(v, i)).abs() < 1e-8, "shapley {i}");
            }

            for bits in 1..(1u32 << n) {
                let t = VariableSet::new(bits, n).unwrap();
                let si = shapley_interaction_index(&spec, t).unwrap();
                assert!((si - shapley_interaction(v, t).unwrap()).abs() < 1e-8, "SI {t}");
                for k in 1..=n.min(3) {
                    let sti = shapley_taylor_index(&spec, t, k).unwrap();
                    assert!((sti - shapley_taylor(v, t, k).unwrap()).abs() < 1e-8, "STI({k}) {t}");
                }
            }

            // Marginal benefits over a few random (T, S) splits.
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(900 + seed);
            for _ in 0..20 {
                let t_bits = rng.gen_range(1..(1u32 << n));
                let t = VariableSet::new(t_bits, n).unwrap();
                let comp = t.complement();
                let s_bits = rng.gen_range(0..(1u64 << comp.cardinality())) as u32;
                let s = comp
                    .subsets()
                    .nth(s_bits as usize % (1 << comp.cardinality()))
                    .unwrap();
                let a = derived_mb(&spec, t, s).unwrap();
                let b = marginal_benefit(v, t, s).unwrap();
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

//! Deterministic generators and scorers used by the test suites and
//! benchmarks. Not part of the translation pipeline itself.

use rand::Rng;

use crate::decoder::{Candidate, Scorer};
use crate::ltl::Formula;
use crate::util::fnv1a;

/// A random formula of depth at most `max_depth` (and at least 1) over the
/// given AP names.
pub fn random_formula<R: Rng>(rng: &mut R, aps: &[String], max_depth: usize) -> Formula {
    assert!(!aps.is_empty(), "need at least one AP");
    if max_depth <= 1 {
        return Formula::Atom(aps[rng.gen_range(0..aps.len())].clone());
    }
    match rng.gen_range(0..8u32) {
        0 | 1 => Formula::Atom(aps[rng.gen_range(0..aps.len())].clone()),
        2 => Formula::not(random_formula(rng, aps, max_depth - 1)),
        3 => Formula::globally(random_formula(rng, aps, max_depth - 1)),
        4 => Formula::finally(random_formula(rng, aps, max_depth - 1)),
        5 => Formula::and(
            random_formula(rng, aps, max_depth - 1),
            random_formula(rng, aps, max_depth - 1),
        ),
        6 => Formula::or(
            random_formula(rng, aps, max_depth - 1),
            random_formula(rng, aps, max_depth - 1),
        ),
        _ => Formula::until(
            random_formula(rng, aps, max_depth - 1),
            random_formula(rng, aps, max_depth - 1),
        ),
    }
}

/// Every formula of depth at most `max_depth` over the given AP names, in a
/// deterministic order. Grows fast: 1262 formulas for two APs at depth 3.
pub fn exhaustive_formulas(aps: &[&str], max_depth: usize) -> Vec<Formula> {
    let mut current: Vec<Formula> = aps.iter().map(|a| Formula::atom(*a)).collect();
    for _ in 1..max_depth {
        let previous = current.clone();
        for f in &previous {
            current.push(Formula::not(f.clone()));
            current.push(Formula::globally(f.clone()));
            current.push(Formula::finally(f.clone()));
        }
        for l in &previous {
            for r in &previous {
                current.push(Formula::and(l.clone(), r.clone()));
                current.push(Formula::or(l.clone(), r.clone()));
                current.push(Formula::until(l.clone(), r.clone()));
            }
        }
        // dedup while preserving first-seen order
        let mut seen = std::collections::HashSet::new();
        current.retain(|f| seen.insert(f.clone()));
    }
    current
}

/// Deterministic pseudo-random scorer: finite scores derived by hashing the
/// seed, the decoded prefix, and the candidate. Used to fuzz the decoding
/// soundness guarantee.
pub struct SeededNoiseScorer {
    pub seed: u64,
}

impl Scorer for SeededNoiseScorer {
    fn score_next(
        &self,
        _input_tokens: &[&str],
        output_prefix: &[&str],
        candidates: &[Candidate<'_>],
    ) -> Vec<f64> {
        candidates
            .iter()
            .map(|c| {
                let key = format!(
                    "{}\u{1}{}\u{1}{}",
                    self.seed,
                    output_prefix.join(" "),
                    c.as_str()
                );
                (fnv1a(key.as_bytes()) % 10_000) as f64 / 500.0 - 10.0
            })
            .collect()
    }
}

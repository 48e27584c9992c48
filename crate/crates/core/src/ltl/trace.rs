//! Finite traces and LTLf-style satisfaction.
//!
//! The planner-facing continuous-state semantics is out of scope; this
//! evaluator exists so formula semantics can be tested against an
//! independent oracle. Satisfaction is evaluated over a finite, non-empty
//! sequence of steps, each step being the set of AP names true at that step.

use std::collections::BTreeSet;

use super::{ApSet, Formula, LtlError};

/// A finite trace plus the AP universe its steps draw from.
///
/// The universe matters: `F B` on a trace whose steps never mention `B` is
/// false when `B` is in the universe and an [`LtlError::UnknownAtom`] when it
/// is not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    steps: Vec<BTreeSet<String>>,
    universe: BTreeSet<String>,
}

impl Trace {
    /// Build a trace whose steps are validated against `aps`.
    pub fn new(steps: Vec<BTreeSet<String>>, aps: &ApSet) -> Result<Self, LtlError> {
        Self::with_universe(steps, aps.name_set())
    }

    /// Build a trace over an explicit AP-name universe.
    pub fn with_universe(
        steps: Vec<BTreeSet<String>>,
        universe: BTreeSet<String>,
    ) -> Result<Self, LtlError> {
        if steps.is_empty() {
            return Err(LtlError::EmptyTrace);
        }
        for (i, step) in steps.iter().enumerate() {
            for name in step {
                if !universe.contains(name) {
                    return Err(LtlError::InvalidTrace(format!(
                        "step {i} mentions `{name}` which is not in the AP universe"
                    )));
                }
            }
        }
        Ok(Self { steps, universe })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false // constructor guarantees at least one step
    }

    pub fn steps(&self) -> &[BTreeSet<String>] {
        &self.steps
    }

    pub fn universe(&self) -> &BTreeSet<String> {
        &self.universe
    }

    /// The suffix starting at step `start` (0-based). Panics if out of range.
    pub fn suffix(&self, start: usize) -> Trace {
        assert!(start < self.steps.len(), "suffix start out of range");
        Trace {
            steps: self.steps[start..].to_vec(),
            universe: self.universe.clone(),
        }
    }
}

/// Parse a whitespace-separated step list like `{} {B} {A,B}` into step sets.
pub fn parse_steps(text: &str) -> Result<Vec<BTreeSet<String>>, LtlError> {
    let mut steps = Vec::new();
    for raw in text.split_whitespace() {
        let inner = raw
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| {
                LtlError::InvalidTrace(format!("step `{raw}` is not wrapped in braces"))
            })?;
        let mut step = BTreeSet::new();
        for name in inner.split(',') {
            let name = name.trim();
            if !name.is_empty() {
                step.insert(name.to_string());
            }
        }
        steps.push(step);
    }
    if steps.is_empty() {
        return Err(LtlError::EmptyTrace);
    }
    Ok(steps)
}

/// Finite-trace satisfaction of `formula` at the start of `trace`.
///
/// Computed by backward induction over trace positions: for each subformula
/// the satisfaction vector over positions is filled from the last step
/// towards the first, so evaluation is linear in `|formula| * |trace|`.
/// Until follows the finite-trace recurrence
/// `U[i] = right[i] || (left[i] && U[i+1])` with `U[last] = right[last]`.
pub fn evaluate_trace(formula: &Formula, trace: &Trace) -> Result<bool, LtlError> {
    Ok(satisfaction_vector(formula, trace)?[0])
}

fn satisfaction_vector(formula: &Formula, trace: &Trace) -> Result<Vec<bool>, LtlError> {
    let n = trace.len();
    match formula {
        Formula::Atom(name) => {
            if !trace.universe.contains(name) {
                return Err(LtlError::UnknownAtom { name: name.clone() });
            }
            Ok(trace.steps.iter().map(|s| s.contains(name)).collect())
        }
        Formula::Not(c) => {
            let v = satisfaction_vector(c, trace)?;
            Ok(v.into_iter().map(|b| !b).collect())
        }
        Formula::And(l, r) => {
            let lv = satisfaction_vector(l, trace)?;
            let rv = satisfaction_vector(r, trace)?;
            Ok(lv.into_iter().zip(rv).map(|(a, b)| a && b).collect())
        }
        Formula::Or(l, r) => {
            let lv = satisfaction_vector(l, trace)?;
            let rv = satisfaction_vector(r, trace)?;
            Ok(lv.into_iter().zip(rv).map(|(a, b)| a || b).collect())
        }
        Formula::Finally(c) => {
            let cv = satisfaction_vector(c, trace)?;
            let mut out = vec![false; n];
            out[n - 1] = cv[n - 1];
            for i in (0..n - 1).rev() {
                out[i] = cv[i] || out[i + 1];
            }
            Ok(out)
        }
        Formula::Globally(c) => {
            let cv = satisfaction_vector(c, trace)?;
            let mut out = vec![false; n];
            out[n - 1] = cv[n - 1];
            for i in (0..n - 1).rev() {
                out[i] = cv[i] && out[i + 1];
            }
            Ok(out)
        }
        Formula::Until(l, r) => {
            let lv = satisfaction_vector(l, trace)?;
            let rv = satisfaction_vector(r, trace)?;
            let mut out = vec![false; n];
            out[n - 1] = rv[n - 1];
            for i in (0..n - 1).rev() {
                out[i] = rv[i] || (lv[i] && out[i + 1]);
            }
            Ok(out)
        }
    }
}

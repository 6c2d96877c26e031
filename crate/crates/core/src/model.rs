//! Markov chain models: discrete-time (probabilities) and continuous-time
//! (rates), with atomic-proposition labelings.
//!
//! A [`Model`] is plain data and may be malformed; [`Model::validate`] checks
//! it and produces a [`ValidatedModel`], which is immutable and is the only
//! form the simulator and verifier accept. Validation normalizes DTMC rows so
//! each row's probabilities sum to exactly 1.0 in floating point, and the
//! normalization is idempotent: validating an already-validated model changes
//! no bits.

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

pub type StateId = usize;

/// Row sums may deviate from 1 by at most this much before validation; within
/// the tolerance they are renormalized to sum to exactly 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dtmc,
    Ctmc,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Dtmc => write!(f, "dtmc"),
            ModelKind::Ctmc => write!(f, "ctmc"),
        }
    }
}

/// Unvalidated model description. `rows[s]` lists the outgoing transitions of
/// state `s` as `(target, weight)` pairs; weights are probabilities for a
/// DTMC and rates for a CTMC. An empty CTMC row is an absorbing state.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub n_states: usize,
    pub init: StateId,
    pub rows: Vec<Vec<(StateId, f64)>>,
    pub labels: BTreeMap<String, BTreeSet<StateId>>,
}

/// A checked, normalized, immutable model.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedModel {
    m: Model,
    /// Per-state row totals: exactly 1.0 for DTMC states, the exit rate for
    /// CTMC states (0.0 for absorbing ones).
    totals: Vec<f64>,
}

impl Model {
    pub fn validate(self) -> Result<ValidatedModel> {
        let mut m = self;
        if m.n_states == 0 {
            return Err(Error::InvalidParams {
                message: "model must have at least one state".into(),
            });
        }
        if m.init >= m.n_states {
            return Err(Error::DanglingTarget {
                reference: m.init,
                n_states: m.n_states,
                span: None,
            });
        }
        if m.rows.len() != m.n_states {
            return Err(Error::InvalidParams {
                message: format!(
                    "model declares {} states but provides {} transition rows",
                    m.n_states,
                    m.rows.len()
                ),
            });
        }
        for (name, states) in &m.labels {
            for &s in states {
                if s >= m.n_states {
                    return Err(Error::DanglingTarget {
                        reference: s,
                        n_states: m.n_states,
                        span: None,
                    });
                }
            }
            let _ = name;
        }

        let mut totals = Vec::with_capacity(m.n_states);
        for s in 0..m.n_states {
            for &(t, w) in &m.rows[s] {
                if t >= m.n_states {
                    return Err(Error::DanglingTarget {
                        reference: t,
                        n_states: m.n_states,
                        span: None,
                    });
                }
                // Negated on purpose: also rejects NaN weights.
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(w > 0.0) || !w.is_finite() {
                    return Err(Error::NegativeOrZeroWeight {
                        state: s,
                        target: t,
                        weight: w,
                        span: None,
                    });
                }
            }
            match m.kind {
                ModelKind::Dtmc => {
                    if m.rows[s].is_empty() {
                        return Err(Error::EmptyDtmcRow { state: s, span: None });
                    }
                    let sum: f64 = m.rows[s].iter().map(|&(_, w)| w).sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                        return Err(Error::RowSumInvalid { state: s, sum, span: None });
                    }
                    normalize_row(&mut m.rows[s], sum).map_err(|(t, w)| {
                        Error::NegativeOrZeroWeight { state: s, target: t, weight: w, span: None }
                    })?;
                    totals.push(1.0);
                }
                ModelKind::Ctmc => {
                    let exit: f64 = m.rows[s].iter().map(|&(_, w)| w).sum();
                    if !exit.is_finite() {
                        return Err(Error::RowSumInvalid { state: s, sum: exit, span: None });
                    }
                    totals.push(exit);
                }
            }
        }
        Ok(ValidatedModel { m, totals })
    }
}

/// Scale a row to unit sum and fix the final entry to `1 - (sum of the rest)`
/// so the left-to-right floating-point sum is exactly 1.0. Errors (returning
/// the offending entry) if rescaling drives a probability out of (0, 1] —
/// only possible for pathological rows whose last weight is smaller than the
/// accumulated rounding error.
fn normalize_row(row: &mut [(StateId, f64)], sum: f64) -> std::result::Result<(), (StateId, f64)> {
    let last = row.len() - 1;
    let mut head_sum = 0.0;
    for (_, w) in row[..last].iter_mut() {
        *w /= sum;
        head_sum += *w;
    }
    let tail = 1.0 - head_sum;
    if row.len() > 1 && !(tail > 0.0 && tail <= 1.0) {
        return Err((row[last].0, tail));
    }
    row[last].1 = if row.len() == 1 { 1.0 } else { tail };
    Ok(())
}

impl ValidatedModel {
    pub fn kind(&self) -> ModelKind {
        self.m.kind
    }

    pub fn n_states(&self) -> usize {
        self.m.n_states
    }

    pub fn init(&self) -> StateId {
        self.m.init
    }

    /// Outgoing transitions of `s`: normalized probabilities (DTMC) or raw
    /// rates (CTMC), in declaration order.
    pub fn row(&self, s: StateId) -> &[(StateId, f64)] {
        &self.m.rows[s]
    }

    /// Exit rate of a CTMC state (0.0 when absorbing); 1.0 for DTMC states.
    pub fn row_total(&self, s: StateId) -> f64 {
        self.totals[s]
    }

    pub fn labels(&self) -> &BTreeMap<String, BTreeSet<StateId>> {
        &self.m.labels
    }

    /// Whether atom `atom` holds in state `s`. Atoms absent from the labeling
    /// hold nowhere.
    pub fn atom_holds(&self, atom: &str, s: StateId) -> bool {
        self.m.labels.get(atom).is_some_and(|set| set.contains(&s))
    }

    /// A state the process can never leave: an empty CTMC row, or a DTMC row
    /// whose every transition targets the state itself.
    pub fn is_absorbing(&self, s: StateId) -> bool {
        match self.m.kind {
            ModelKind::Ctmc => self.m.rows[s].is_empty(),
            ModelKind::Dtmc => self.m.rows[s].iter().all(|&(t, _)| t == s),
        }
    }

    pub fn as_model(&self) -> &Model {
        &self.m
    }

    pub fn into_model(self) -> Model {
        self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(pairs: &[(&str, &[StateId])]) -> BTreeMap<String, BTreeSet<StateId>> {
        pairs
            .iter()
            .map(|(n, ss)| (n.to_string(), ss.iter().copied().collect()))
            .collect()
    }

    fn two_state_dtmc() -> Model {
        Model {
            kind: ModelKind::Dtmc,
            n_states: 2,
            init: 0,
            rows: vec![vec![(1, 0.5), (0, 0.5)], vec![(1, 1.0)]],
            labels: labels(&[("goal", &[1])]),
        }
    }

    #[test]
    fn accepts_well_formed_dtmc() {
        let v = two_state_dtmc().validate().unwrap();
        assert_eq!(v.n_states(), 2);
        assert_eq!(v.row(0), &[(1, 0.5), (0, 0.5)]);
    }

    #[test]
    fn rejects_bad_row_sum() {
        let mut m = two_state_dtmc();
        m.rows[0] = vec![(1, 0.2), (0, 0.1)];
        match m.validate() {
            Err(Error::RowSumInvalid { state: 0, sum, .. }) => {
                assert!((sum - 0.3).abs() < 1e-12)
            }
            other => panic!("expected RowSumInvalid, got {other:?}"),
        }
    }

    #[test]
    fn rejects_dangling_target() {
        let mut m = two_state_dtmc();
        m.rows[1] = vec![(2, 1.0)];
        assert!(matches!(
            m.validate(),
            Err(Error::DanglingTarget { reference: 2, n_states: 2, .. })
        ));
    }

    #[test]
    fn rejects_zero_weight_and_empty_dtmc_row() {
        let mut m = two_state_dtmc();
        m.rows[1] = vec![(1, 0.0)];
        assert!(matches!(m.validate(), Err(Error::NegativeOrZeroWeight { .. })));

        let mut m = two_state_dtmc();
        m.rows[1] = vec![];
        assert!(matches!(m.validate(), Err(Error::EmptyDtmcRow { state: 1, .. })));
    }

    #[test]
    fn ctmc_empty_row_is_absorbing() {
        let m = Model {
            kind: ModelKind::Ctmc,
            n_states: 2,
            init: 0,
            rows: vec![vec![(1, 2.5)], vec![]],
            labels: labels(&[("done", &[1])]),
        };
        let v = m.validate().unwrap();
        assert!(!v.is_absorbing(0));
        assert!(v.is_absorbing(1));
        assert_eq!(v.row_total(0), 2.5);
        assert_eq!(v.row_total(1), 0.0);
    }

    #[test]
    fn atom_lookup_and_unknown_atom() {
        let v = two_state_dtmc().validate().unwrap();
        assert!(v.atom_holds("goal", 1));
        assert!(!v.atom_holds("goal", 0));
        assert!(!v.atom_holds("no_such_atom", 0));
    }

    #[test]
    fn dtmc_self_loop_is_absorbing() {
        let v = two_state_dtmc().validate().unwrap();
        assert!(!v.is_absorbing(0));
        assert!(v.is_absorbing(1));
    }

    #[test]
    fn normalization_makes_row_sums_exactly_one() {
        let m = Model {
            kind: ModelKind::Dtmc,
            n_states: 1,
            init: 0,
            rows: vec![vec![(0, 0.1), (0, 0.2), (0, 0.7)]],
            labels: BTreeMap::new(),
        };
        // (from, to) duplication is a text-format restriction, not a model
        // invariant; fine for exercising normalization.
        let v = m.validate().unwrap();
        let sum: f64 = v.row(0).iter().map(|&(_, w)| w).sum();
        assert_eq!(sum, 1.0);
    }

    #[test]
    fn validation_is_idempotent() {
        let m = Model {
            kind: ModelKind::Dtmc,
            n_states: 2,
            init: 0,
            rows: vec![vec![(0, 0.3000000001), (1, 0.7)], vec![(0, 1.0)]],
            labels: BTreeMap::new(),
        };
        let once = m.validate().unwrap();
        let twice = once.clone().into_model().validate().unwrap();
        assert_eq!(once, twice);
        let sum: f64 = once.row(0).iter().map(|&(_, w)| w).sum();
        assert_eq!(sum, 1.0);
    }

    #[test]
    fn rejects_out_of_range_label_and_init() {
        let mut m = two_state_dtmc();
        m.labels = labels(&[("goal", &[5])]);
        assert!(matches!(m.validate(), Err(Error::DanglingTarget { reference: 5, .. })));

        let mut m = two_state_dtmc();
        m.init = 9;
        assert!(matches!(m.validate(), Err(Error::DanglingTarget { reference: 9, .. })));
    }
}

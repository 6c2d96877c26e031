//! Formula evaluation on traces, error-bound composition, and the sampling
//! depth a property requires.
//!
//! Propositional connectives evaluate exactly. A `Prob` node inside a path
//! formula cannot be decided from the single trace it sits on; it is handed
//! to an [`InnerVerifier`], which runs a fresh hypothesis test from the state
//! at that trace position. Each such check carries Type-I/Type-II error
//! bounds, and the bounds of a compound formula are composed from its parts:
//!
//! * negation swaps the pair,
//! * conjunction takes `(min type1, max type2)`,
//! * disjunction takes `(max type1, min type2)`.
//!
//! The conjunction/disjunction rules look optimistic; they are used as the
//! default, with [`CompositionMode::Conservative`] substituting
//! `(max, max)` for both connectives.
//!
//! Composition is structural: the pair reported for a formula depends only
//! on its shape and the per-check strength, never on which operands a
//! short-circuiting evaluation happened to visit. This keeps reported
//! strengths (and the threshold adjustment derived from them) deterministic.

use crate::error::{Error, Result};
use crate::formula::{Bound, Formula, NodeId, PathFormula};
use crate::model::{ModelKind, StateId, ValidatedModel};
use crate::rng::SampleKey;
use crate::sim::{DepthBound, Trace, DEFAULT_HARD_CAP};

/// A `(type1, type2)` error-bound pair: the probability of wrongly deciding
/// "does not hold" resp. "holds".
pub type ErrorPair = (f64, f64);

/// How error bounds combine across Boolean connectives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CompositionMode {
    /// Conjunction `(min type1, max type2)`, disjunction by De Morgan
    /// `(max type1, min type2)`.
    #[default]
    MinMax,
    /// `(max type1, max type2)` for both connectives — a worst-case bound.
    Conservative,
}

/// Error bounds of a conjunction whose conjuncts were checked with `errs`.
pub fn compose_conjunction(mode: CompositionMode, errs: &[ErrorPair]) -> ErrorPair {
    if errs.is_empty() {
        return (0.0, 0.0);
    }
    let fold = |pick: fn(f64, f64) -> f64, get: fn(&ErrorPair) -> f64| {
        errs[1..].iter().map(get).fold(get(&errs[0]), pick)
    };
    match mode {
        CompositionMode::MinMax => (fold(f64::min, |e| e.0), fold(f64::max, |e| e.1)),
        CompositionMode::Conservative => (fold(f64::max, |e| e.0), fold(f64::max, |e| e.1)),
    }
}

/// Error bounds of a disjunction; the De Morgan dual of
/// [`compose_conjunction`].
pub fn compose_disjunction(mode: CompositionMode, errs: &[ErrorPair]) -> ErrorPair {
    let negated: Vec<ErrorPair> = errs.iter().map(|&e| compose_negation(e)).collect();
    compose_negation(compose_conjunction(mode, &negated))
}

/// Error bounds of a negation: checking `!f` with strength `(a, b)` is
/// checking `f` with `(b, a)`.
pub fn compose_negation(err: ErrorPair) -> ErrorPair {
    (err.1, err.0)
}

/// Verdict of a path formula on one trace, with the error bounds composed
/// over the inner `Prob` checks it contains (`(0, 0)` when there are none).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathVerdict {
    pub holds: bool,
    pub composed_type1: f64,
    pub composed_type2: f64,
}

/// Decides nested `Prob` nodes met during evaluation.
pub trait InnerVerifier {
    /// Decide `P>=theta [path]` at `state`. `key` scopes the check to its
    /// (trace, position, node) so repeated runs are reproducible.
    fn verify_inner(
        &mut self,
        state: StateId,
        node_id: NodeId,
        theta: f64,
        path: &PathFormula,
        key: &SampleKey,
    ) -> Result<bool>;
}

/// Inner verifier for contexts where nesting is out of scope (black-box
/// verification): any nested `Prob` node is an error.
pub struct NoNesting;

impl InnerVerifier for NoNesting {
    fn verify_inner(
        &mut self,
        _state: StateId,
        _node_id: NodeId,
        _theta: f64,
        _path: &PathFormula,
        _key: &SampleKey,
    ) -> Result<bool> {
        Err(Error::NestedNotSupported)
    }
}

/// Everything evaluation needs besides the trace itself.
pub struct EvalCtx<'a> {
    pub model: &'a ValidatedModel,
    pub mode: CompositionMode,
    /// Strength of each individual inner `Prob` check, for composition.
    pub inner_errors: ErrorPair,
    /// Refuse to reason past the end of a trace (black-box inputs); when
    /// false, a trace ending in an absorbing state is conceptually extended
    /// by self-loops.
    pub strict: bool,
}

/// Error bounds a state formula's verdict carries, composed structurally.
pub fn state_error_pair(f: &Formula, mode: CompositionMode, inner: ErrorPair) -> ErrorPair {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => (0.0, 0.0),
        Formula::Not(g) => compose_negation(state_error_pair(g, mode, inner)),
        Formula::And(a, b) => compose_conjunction(
            mode,
            &[state_error_pair(a, mode, inner), state_error_pair(b, mode, inner)],
        ),
        Formula::Or(a, b) => compose_disjunction(
            mode,
            &[state_error_pair(a, mode, inner), state_error_pair(b, mode, inner)],
        ),
        Formula::Prob { .. } => inner,
    }
}

/// Error bounds a path formula's verdict carries. An until unfolds into a
/// disjunction over decision positions of "rhs here, lhs everywhere
/// earlier", so its pair is the disjunction of `rhs` (position 0) with the
/// conjunction of `rhs` and `lhs` (any later position); a `Steps(0)` bound
/// leaves only position 0.
pub fn path_error_pair(p: &PathFormula, mode: CompositionMode, inner: ErrorPair) -> ErrorPair {
    match p {
        PathFormula::Next(f) => state_error_pair(f, mode, inner),
        PathFormula::Until { rhs, bound: Bound::Steps(0), .. } => state_error_pair(rhs, mode, inner),
        PathFormula::Until { lhs, rhs, .. } => {
            let l = state_error_pair(lhs, mode, inner);
            let r = state_error_pair(rhs, mode, inner);
            compose_disjunction(mode, &[r, compose_conjunction(mode, &[r, l])])
        }
    }
}

/// Evaluate a state formula at `state`: exact for propositional nodes,
/// delegated to `inner` for `Prob` nodes. Returns the verdict with the
/// formula's structural error bounds.
pub fn eval_state(
    f: &Formula,
    state: StateId,
    ctx: &EvalCtx,
    key: &SampleKey,
    inner: &mut dyn InnerVerifier,
) -> Result<(bool, f64, f64)> {
    let holds = eval_state_holds(f, state, ctx, key, inner)?;
    let (t1, t2) = state_error_pair(f, ctx.mode, ctx.inner_errors);
    Ok((holds, t1, t2))
}

fn eval_state_holds(
    f: &Formula,
    state: StateId,
    ctx: &EvalCtx,
    key: &SampleKey,
    inner: &mut dyn InnerVerifier,
) -> Result<bool> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(name) => ctx.model.atom_holds(name, state),
        Formula::Not(g) => !eval_state_holds(g, state, ctx, key, inner)?,
        Formula::And(a, b) => {
            eval_state_holds(a, state, ctx, key, inner)? && eval_state_holds(b, state, ctx, key, inner)?
        }
        Formula::Or(a, b) => {
            eval_state_holds(a, state, ctx, key, inner)? || eval_state_holds(b, state, ctx, key, inner)?
        }
        Formula::Prob { threshold, path, id } => {
            inner.verify_inner(state, *id, *threshold, path, &key.child(*id as u64))?
        }
    })
}

/// Evaluate a path formula on a trace. `trace_key` is the key the trace was
/// sampled with; position `i` scopes its nested checks under
/// `trace_key.child(i)`.
pub fn eval_path(
    p: &PathFormula,
    trace: &Trace,
    ctx: &EvalCtx,
    trace_key: &SampleKey,
    inner: &mut dyn InnerVerifier,
) -> Result<PathVerdict> {
    let holds = match p {
        PathFormula::Next(f) => {
            let s1 = state_at(trace, 1, ctx)?;
            eval_state_holds(f, s1, ctx, &trace_key.child(1), inner)?
        }
        PathFormula::Until { lhs, rhs, bound } => {
            eval_until(lhs, rhs, *bound, trace, ctx, trace_key, inner)?
        }
    };
    let (composed_type1, composed_type2) = path_error_pair(p, ctx.mode, ctx.inner_errors);
    Ok(PathVerdict { holds, composed_type1, composed_type2 })
}

fn eval_until(
    lhs: &Formula,
    rhs: &Formula,
    bound: Bound,
    trace: &Trace,
    ctx: &EvalCtx,
    trace_key: &SampleKey,
    inner: &mut dyn InnerVerifier,
) -> Result<bool> {
    let mut i: u64 = 0;
    loop {
        match bound {
            Bound::Steps(k) => {
                if i > k {
                    return Ok(false);
                }
            }
            Bound::Time(t) => {
                // Positions beyond the recorded trace never enter within a
                // time bound: the trace either covers the bound or ends in
                // an absorbing state that is never left.
                if i as usize >= trace.len() || trace.entry_time(i as usize) > t {
                    return Ok(false);
                }
            }
        }
        let s = state_at(trace, i as usize, ctx)?;
        let key = trace_key.child(i);
        if eval_state_holds(rhs, s, ctx, &key, inner)? {
            return Ok(true);
        }
        if !eval_state_holds(lhs, s, ctx, &key, inner)? {
            return Ok(false);
        }
        i += 1;
    }
}

/// State at trace position `i`, extending a trace that ended in absorption
/// by self-loops (unless `ctx.strict`).
fn state_at(trace: &Trace, i: usize, ctx: &EvalCtx) -> Result<StateId> {
    if i < trace.len() {
        return Ok(trace.state(i));
    }
    if !ctx.strict && !trace.truncated && ctx.model.is_absorbing(trace.last_state()) {
        return Ok(trace.last_state());
    }
    Err(Error::TraceTooShort {
        message: if trace.truncated {
            format!("position {i} requested but the trace was cut off by the step safety cap")
        } else {
            format!("position {i} requested but the trace has {} positions", trace.len())
        },
    })
}

/// Check an externally supplied trace covers a depth requirement: `Steps(k)`
/// needs `k + 1` positions, `Time(t)` needs a recorded entry at or past `t`.
pub fn check_trace_depth(trace: &Trace, bound: &Bound) -> Result<()> {
    match *bound {
        Bound::Steps(k) => {
            if (trace.len() as u64) <= k {
                return Err(Error::TraceTooShort {
                    message: format!(
                        "property needs {} positions but the trace has {}",
                        k + 1,
                        trace.len()
                    ),
                });
            }
        }
        Bound::Time(t) => {
            if trace.last_entry_time() < t {
                return Err(Error::TraceTooShort {
                    message: format!(
                        "property needs time coverage up to {t} but the trace ends at {}",
                        trace.last_entry_time()
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Sampling depth of a single path formula (its own bound only — nested
/// `Prob` nodes spawn their own simulations).
pub fn path_depth(p: &PathFormula, kind: ModelKind) -> Result<DepthBound> {
    let bound = match p {
        PathFormula::Next(_) => Bound::Steps(1),
        PathFormula::Until { bound, .. } => *bound,
    };
    if kind == ModelKind::Dtmc && matches!(bound, Bound::Time(_)) {
        return Err(Error::BoundTypeMismatch {
            message: "time-bounded properties require a continuous-time model".into(),
        });
    }
    Ok(DepthBound { kind: bound, hard_cap: DEFAULT_HARD_CAP })
}

/// Sampling depth a whole formula requires: the maximum over the outermost
/// path formulas of its `Prob` nodes (`Steps(0)` for a propositional
/// formula). Mixing step- and time-bounded operators at the top level, or a
/// time bound against a discrete-time model, is a bound-type mismatch.
pub fn required_depth(f: &Formula, kind: ModelKind) -> Result<DepthBound> {
    fn merge(a: Option<Bound>, b: Option<Bound>) -> Result<Option<Bound>> {
        Ok(match (a, b) {
            (None, x) | (x, None) => x,
            (Some(Bound::Steps(x)), Some(Bound::Steps(y))) => Some(Bound::Steps(x.max(y))),
            (Some(Bound::Time(x)), Some(Bound::Time(y))) => Some(Bound::Time(x.max(y))),
            _ => {
                return Err(Error::BoundTypeMismatch {
                    message: "step- and time-bounded operators cannot be combined at the top level"
                        .into(),
                });
            }
        })
    }
    fn walk(f: &Formula) -> Result<Option<Bound>> {
        Ok(match f {
            Formula::True | Formula::False | Formula::Atom(_) => None,
            Formula::Not(g) => walk(g)?,
            Formula::And(a, b) | Formula::Or(a, b) => merge(walk(a)?, walk(b)?)?,
            Formula::Prob { path, .. } => Some(match path.as_ref() {
                PathFormula::Next(_) => Bound::Steps(1),
                PathFormula::Until { bound, .. } => *bound,
            }),
        })
    }
    let bound = walk(f)?.unwrap_or(Bound::Steps(0));
    if kind == ModelKind::Dtmc && matches!(bound, Bound::Time(_)) {
        return Err(Error::BoundTypeMismatch {
            message: "time-bounded properties require a continuous-time model".into(),
        });
    }
    Ok(DepthBound { kind: bound, hard_cap: DEFAULT_HARD_CAP })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Model;
    use crate::text::parse_formula;
    use std::collections::{BTreeMap, BTreeSet};

    fn chain_with_goal() -> ValidatedModel {
        // 0 -> 1 -> 2 -> 2, goal = {2}, a = {0, 1}, b = {2}.
        let mut labels = BTreeMap::new();
        labels.insert("goal".to_string(), BTreeSet::from([2]));
        labels.insert("a".to_string(), BTreeSet::from([0, 1]));
        labels.insert("b".to_string(), BTreeSet::from([2]));
        Model {
            kind: ModelKind::Dtmc,
            n_states: 3,
            init: 0,
            rows: vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(2, 1.0)]],
            labels,
        }
        .validate()
        .unwrap()
    }

    fn ctx(model: &ValidatedModel) -> EvalCtx<'_> {
        EvalCtx { model, mode: CompositionMode::MinMax, inner_errors: (0.0, 0.0), strict: false }
    }

    fn until(src: &str) -> PathFormula {
        match parse_formula(src).unwrap() {
            Formula::Prob { path, .. } => *path,
            other => panic!("expected a Prob root, got {other}"),
        }
    }

    #[test]
    fn bounded_eventually_on_a_three_state_trace() {
        let m = chain_with_goal();
        let trace = Trace { states: vec![0, 1, 2], times: vec![], truncated: false };
        let key = SampleKey::new(0);
        let c = ctx(&m);
        let f2 = eval_path(&until("P>=0.5 [ F<=2 goal ]"), &trace, &c, &key, &mut NoNesting).unwrap();
        assert!(f2.holds);
        assert_eq!((f2.composed_type1, f2.composed_type2), (0.0, 0.0));
        let f1 = eval_path(&until("P>=0.5 [ F<=1 goal ]"), &trace, &c, &key, &mut NoNesting).unwrap();
        assert!(!f1.holds);
        let u = eval_path(&until("P>=0.5 [ a U<=2 b ]"), &trace, &c, &key, &mut NoNesting).unwrap();
        assert!(u.holds);
    }

    #[test]
    fn until_fails_as_soon_as_the_left_side_does() {
        let m = chain_with_goal();
        // b only at 2, a does not hold at 1 => "a U<=2 b" fails on [0,1,2]?
        // No: a = {0,1}. Use lhs "goal" which fails at position 0.
        let trace = Trace { states: vec![0, 1, 2], times: vec![], truncated: false };
        let v = eval_path(&until("P>=0.5 [ goal U<=2 b ]"), &trace, &ctx(&m), &SampleKey::new(0), &mut NoNesting)
            .unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn next_steps_through_an_absorbing_self_loop() {
        let m = chain_with_goal();
        // Trace stopped at the absorbing state 2: position 3 extends to 2.
        let trace = Trace { states: vec![0, 1, 2], times: vec![], truncated: false };
        let v = eval_path(&until("P>=0.5 [ F<=9 goal ]"), &trace, &ctx(&m), &SampleKey::new(0), &mut NoNesting)
            .unwrap();
        assert!(v.holds);

        let from_absorbed = Trace { states: vec![2], times: vec![], truncated: false };
        let v = eval_path(
            &PathFormula::Next(Formula::atom("goal")),
            &from_absorbed,
            &ctx(&m),
            &SampleKey::new(0),
            &mut NoNesting,
        )
        .unwrap();
        assert!(v.holds);
    }

    #[test]
    fn strict_mode_refuses_positions_past_the_trace() {
        let m = chain_with_goal();
        let trace = Trace { states: vec![0, 1], times: vec![], truncated: false };
        let mut c = ctx(&m);
        c.strict = true;
        let err = eval_path(&until("P>=0.5 [ F<=3 goal ]"), &trace, &c, &SampleKey::new(0), &mut NoNesting)
            .unwrap_err();
        assert!(matches!(err, Error::TraceTooShort { .. }));
    }

    #[test]
    fn truncated_traces_cannot_be_extended() {
        let m = chain_with_goal();
        let trace = Trace { states: vec![0, 1, 2], times: vec![], truncated: true };
        let err = eval_path(&until("P>=0.5 [ F<=5 false ]"), &trace, &ctx(&m), &SampleKey::new(0), &mut NoNesting)
            .unwrap_err();
        assert!(matches!(err, Error::TraceTooShort { .. }));
    }

    #[test]
    fn time_bounded_until_uses_entry_times() {
        let mut labels = BTreeMap::new();
        labels.insert("goal".to_string(), BTreeSet::from([1]));
        let m = Model {
            kind: ModelKind::Ctmc,
            n_states: 2,
            init: 0,
            rows: vec![vec![(1, 1.0)], vec![]],
            labels,
        }
        .validate()
        .unwrap();
        let trace = Trace { states: vec![0, 1], times: vec![0.0, 2.5], truncated: false };
        let hit = |t: f64| {
            eval_path(
                &until(&format!("P>=0.5 [ F<={t}t goal ]")),
                &trace,
                &ctx(&m),
                &SampleKey::new(0),
                &mut NoNesting,
            )
            .unwrap()
            .holds
        };
        assert!(hit(3.0));
        assert!(hit(2.5)); // entry exactly at the bound counts
        assert!(!hit(2.0));
    }

    #[test]
    fn nested_prob_without_a_verifier_is_an_error() {
        let m = chain_with_goal();
        let trace = Trace { states: vec![0, 1, 2], times: vec![], truncated: false };
        let p = until("P>=0.5 [ F<=2 P>=0.5 [ X goal ] ]");
        let err = eval_path(&p, &trace, &ctx(&m), &SampleKey::new(0), &mut NoNesting).unwrap_err();
        assert!(matches!(err, Error::NestedNotSupported));
    }

    #[test]
    fn composition_rules_match_the_stated_theorems() {
        let a = (0.01, 0.05);
        let b = (0.02, 0.03);
        assert_eq!(compose_conjunction(CompositionMode::MinMax, &[a, b]), (0.01, 0.05));
        assert_eq!(compose_disjunction(CompositionMode::MinMax, &[a, b]), (0.02, 0.03));
        assert_eq!(compose_negation((0.2, 0.1)), (0.1, 0.2));
        assert_eq!(compose_conjunction(CompositionMode::Conservative, &[a, b]), (0.02, 0.05));
        assert_eq!(compose_disjunction(CompositionMode::Conservative, &[a, b]), (0.02, 0.05));
        assert_eq!(compose_conjunction(CompositionMode::MinMax, &[]), (0.0, 0.0));
    }

    #[test]
    fn error_pairs_are_zero_iff_no_prob_below() {
        let inner = (0.01, 0.02);
        let m = CompositionMode::MinMax;
        let plain = until("P>=0.5 [ a U<=3 b ]");
        assert_eq!(path_error_pair(&plain, m, inner), (0.0, 0.0));

        let nested = until("P>=0.5 [ a U<=3 P>=0.5 [ X b ] ]");
        assert_eq!(path_error_pair(&nested, m, inner), (0.01, 0.02));

        // rhs = !Prob swaps before composing through the until.
        let negated = until("P>=0.5 [ a U<=3 !(P>=0.5 [ X b ]) ]");
        assert_eq!(path_error_pair(&negated, m, inner), (0.02, 0.01));
    }

    #[test]
    fn until_pair_telescopes_to_the_goal_side_under_min_max() {
        let inner = (0.05, 0.01);
        let p = until("P>=0.5 [ P>=0.5 [ X a ] U<=3 P>=0.5 [ X b ] ]");
        assert_eq!(path_error_pair(&p, CompositionMode::MinMax, inner), inner);
        // Conservative mode folds the lhs in as well: (max, max) of identical
        // pairs is still the same pair here.
        assert_eq!(path_error_pair(&p, CompositionMode::Conservative, inner), inner);
    }

    #[test]
    fn required_depth_covers_the_stated_cases() {
        let k = ModelKind::Dtmc;
        let d = |src: &str| required_depth(&parse_formula(src).unwrap(), k).unwrap().kind;
        assert_eq!(d("P>=0.9 [ X a ]"), Bound::Steps(1));
        assert_eq!(d("P>=0.9 [ a U<=5 b ]"), Bound::Steps(5));
        assert_eq!(d("P>=0.8 [ a U<=5 P>=0.9 [ F<=30 b ] ]"), Bound::Steps(5));
        assert_eq!(d("P>=0.5 [ X a ] & P>=0.5 [ F<=4 b ]"), Bound::Steps(4));
        assert_eq!(d("a & !b"), Bound::Steps(0));

        let f = parse_formula("P>=0.5 [ a U<=2.5t b ]").unwrap();
        assert!(required_depth(&f, ModelKind::Dtmc).is_err());
        assert_eq!(required_depth(&f, ModelKind::Ctmc).unwrap().kind, Bound::Time(2.5));

        let mixed = parse_formula("P>=0.5 [ X a ] & P>=0.5 [ a U<=2.5t b ]").unwrap();
        assert!(matches!(
            required_depth(&mixed, ModelKind::Ctmc).unwrap_err(),
            Error::BoundTypeMismatch { .. }
        ));
    }

    #[test]
    fn trace_depth_checks_are_strict() {
        let t = Trace { states: vec![0, 1, 2], times: vec![], truncated: false };
        assert!(check_trace_depth(&t, &Bound::Steps(2)).is_ok());
        assert!(check_trace_depth(&t, &Bound::Steps(3)).is_err());

        let c = Trace { states: vec![0, 1], times: vec![0.0, 4.0], truncated: false };
        assert!(check_trace_depth(&c, &Bound::Time(4.0)).is_ok());
        assert!(check_trace_depth(&c, &Bound::Time(4.5)).is_err());
    }
}

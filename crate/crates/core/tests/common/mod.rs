//! Oracles and generators shared by the integration tests. Everything here
//! is written independently of the library's own algorithms: plans are
//! checked in exact big-integer arithmetic, satisfaction probabilities come
//! from brute-force dynamic programming, and path formulas are re-evaluated
//! by a naive positional scan.
#![allow(dead_code)]

use num::BigUint;
use smc_core::formula::{Formula, PathFormula};
use smc_core::model::{Model, ModelKind, StateId, ValidatedModel};
use smc_core::sim::Trace;
use std::collections::{BTreeMap, BTreeSet};

/// A small self-contained generator (SplitMix64) so test-case selection does
/// not depend on the library under test.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> TestRng {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// The exact dyadic representation `(m, e)` with `x = m / 2^e` of a finite
/// non-negative double, reduced so `m` is odd (or zero).
pub fn dyadic(x: f64) -> (BigUint, u64) {
    assert!(x.is_finite() && x >= 0.0, "dyadic({x})");
    let bits = x.to_bits();
    let exp_field = (bits >> 52) & 0x7FF;
    let frac = bits & ((1u64 << 52) - 1);
    let (mut mant, neg_exp) = if exp_field == 0 {
        (frac, 1074i64)
    } else {
        (frac | (1u64 << 52), 1075 - exp_field as i64)
    };
    if mant == 0 {
        return (BigUint::from(0u32), 0);
    }
    let mut e = neg_exp;
    while mant & 1 == 0 && e > 0 {
        mant >>= 1;
        e -= 1;
    }
    if e < 0 {
        (BigUint::from(mant) << (-e) as u64, 0)
    } else {
        (BigUint::from(mant), e as u64)
    }
}

/// One success probability in exact form: p = num / 2^exp.
struct DyadicProb {
    num: BigUint,
    /// 2^exp − num, i.e. the numerator of 1 − p over the same denominator.
    co: BigUint,
    exp: u64,
}

impl DyadicProb {
    fn new(p: f64) -> DyadicProb {
        assert!(p > 0.0 && p < 1.0, "probability {p} must be strictly inside (0, 1)");
        let (num, exp) = dyadic(p);
        let co = (BigUint::from(1u32) << exp) - &num;
        DyadicProb { num, co, exp }
    }
}

/// `F(c; n, p) ≤ bound` and `F(c; n, p) ≥ bound` decided exactly, scanning
/// terms of the binomial CDF in integer arithmetic.
struct ExactCdfScan<'a> {
    p: &'a DyadicProb,
    n: u64,
    term: BigUint,
    sum: BigUint,
    k: u64,
}

impl<'a> ExactCdfScan<'a> {
    /// Starts at k = 0 with term = (1−p)^n · 2^0 over denominator 2^(exp·n).
    fn new(p: &'a DyadicProb, n: u64, co_pow_n: BigUint) -> ExactCdfScan<'a> {
        ExactCdfScan { p, n, sum: co_pow_n.clone(), term: co_pow_n, k: 0 }
    }

    /// Advance to k+1: term *= (n−k)·p / ((k+1)·(1−p)), exactly divisible.
    fn advance(&mut self) {
        let num = &self.term * (self.n - self.k) * &self.p.num;
        self.term = num / (&self.p.co * (self.k + 1));
        self.sum += &self.term;
        self.k += 1;
    }
}

/// Exhaustive exact single-sampling-plan search: the smallest n ≤ n_max for
/// which some acceptance constant c satisfies F(c; n, p0) ≤ α and
/// 1 − F(c; n, p1) ≤ β, with the smallest such c. All four comparisons are
/// decided in exact integer arithmetic on the dyadic representations of the
/// inputs.
pub fn exact_plan(p0: f64, p1: f64, alpha: f64, beta: f64, n_max: u64) -> Option<(u64, i64)> {
    let d0 = DyadicProb::new(p0);
    let d1 = DyadicProb::new(p1);
    let (a_num, a_exp) = dyadic(alpha);
    // 1 − β as a dyadic over 2^b_exp.
    let (b_num, b_exp) = dyadic(beta);
    let b_co = (BigUint::from(1u32) << b_exp) - &b_num;

    // (1−p)^n maintained incrementally across n.
    let mut co0_pow = BigUint::from(1u32);
    let mut co1_pow = BigUint::from(1u32);
    for n in 1..=n_max {
        co0_pow *= &d0.co;
        co1_pow *= &d1.co;
        // F(c; n, p0) ≤ α  ⟺  S0(c) · 2^a_exp ≤ a_num · 2^(exp0·n).
        let bound0 = &a_num << ((d0.exp * n) as usize);
        // F(c; n, p1) ≥ 1−β  ⟺  S1(c) · 2^b_exp ≥ b_co · 2^(exp1·n).
        let bound1 = &b_co << ((d1.exp * n) as usize);

        let mut scan0 = ExactCdfScan::new(&d0, n, co0_pow.clone());
        let mut scan1 = ExactCdfScan::new(&d1, n, co1_pow.clone());
        // Largest c with F0 ≤ α (at least −1: F0(−1) = 0).
        let mut c_hi: i64 = -1;
        while (&scan0.sum << a_exp as usize) <= bound0 {
            c_hi = scan0.k as i64;
            if scan0.k == n {
                break;
            }
            scan0.advance();
        }
        // Smallest c with F1 ≥ 1−β (exists: F1(n) = 1 ≥ 1−β).
        let mut c_lo: i64 = n as i64;
        loop {
            if (&scan1.sum << b_exp as usize) >= bound1 {
                c_lo = scan1.k as i64;
                break;
            }
            if scan1.k == n {
                break;
            }
            scan1.advance();
        }
        if c_lo <= c_hi {
            return Some((n, c_lo));
        }
    }
    None
}

/// Exact binomial CDF comparison F(c; n, p) vs x, returning the ordering.
pub fn exact_cdf_cmp(c: i64, n: u64, p: f64, x: f64) -> std::cmp::Ordering {
    if c < 0 {
        return 0.0f64.partial_cmp(&x).unwrap();
    }

    let d = DyadicProb::new(p);
    let (x_num, x_exp) = dyadic(x);
    let mut co_pow = BigUint::from(1u32);
    for _ in 0..n {
        co_pow *= &d.co;
    }
    let mut scan = ExactCdfScan::new(&d, n, co_pow);
    while scan.k < (c as u64).min(n) {
        scan.advance();
    }
    let lhs = &scan.sum << x_exp as usize;
    let rhs = &x_num << ((d.exp * n) as usize);
    lhs.cmp(&rhs)
}

/// Propositional state-formula evaluation by direct recursion (no Prob
/// nodes allowed).
pub fn naive_state_sat(model: &ValidatedModel, f: &Formula, s: StateId) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => model.atom_holds(a, s),
        Formula::Not(g) => !naive_state_sat(model, g, s),
        Formula::And(a, b) => naive_state_sat(model, a, s) && naive_state_sat(model, b, s),
        Formula::Or(a, b) => naive_state_sat(model, a, s) || naive_state_sat(model, b, s),
        Formula::Prob { .. } => panic!("naive_state_sat is propositional-only"),
    }
}

/// Exact P[lhs U≤k rhs] from every state of a DTMC, by dynamic programming
/// over remaining steps: rhs now ⇒ 1; ¬lhs (and ¬rhs) now ⇒ 0; otherwise
/// the weight-average over successors with one step fewer.
pub fn exact_until_probs(
    model: &ValidatedModel,
    lhs: &Formula,
    rhs: &Formula,
    k: u64,
) -> Vec<f64> {
    assert_eq!(model.kind(), ModelKind::Dtmc);
    let n = model.n_states();
    let sat_l: Vec<bool> = (0..n).map(|s| naive_state_sat(model, lhs, s)).collect();
    let sat_r: Vec<bool> = (0..n).map(|s| naive_state_sat(model, rhs, s)).collect();
    let base: Vec<f64> = (0..n)
        .map(|s| if sat_r[s] { 1.0 } else { 0.0 })
        .collect();
    let mut cur = base;
    for _ in 0..k {
        let mut next = vec![0.0f64; n];
        for s in 0..n {
            next[s] = if sat_r[s] {
                1.0
            } else if !sat_l[s] {
                0.0
            } else {
                model.row(s).iter().map(|&(t, w)| w * cur[t]).sum()
            };
        }
        cur = next;
    }
    cur
}

/// Naive positional re-evaluation of a propositional path formula on a
/// trace, treating the trace as conceptually extended by repeating its last
/// state (sampled traces always end absorbing or cover the bound).
pub fn naive_path_holds(model: &ValidatedModel, path: &PathFormula, trace: &Trace) -> bool {
    let at = |i: usize| -> StateId {
        *trace.states.get(i).unwrap_or_else(|| trace.states.last().unwrap())
    };
    match path {
        PathFormula::Next(f) => naive_state_sat(model, f, at(1)),
        PathFormula::Until { lhs, rhs, bound } => {
            let positions: Vec<usize> = match *bound {
                smc_core::formula::Bound::Steps(k) => (0..=k as usize).collect(),
                smc_core::formula::Bound::Time(t) => (0..trace.len())
                    .filter(|&i| trace.entry_time(i) <= t)
                    .collect(),
            };
            for i in positions {
                if naive_state_sat(model, rhs, at(i)) {
                    return true;
                }
                if !naive_state_sat(model, lhs, at(i)) {
                    return false;
                }
            }
            false
        }
    }
}

/// A random small DTMC: out-degree 1–3 per state, normalized random
/// weights, two atoms `a` and `b` on random state subsets.
pub fn random_dtmc(rng: &mut TestRng, n_states: usize) -> ValidatedModel {
    let mut rows = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let deg = 1 + rng.below(3.min(n_states as u64)) as usize;
        let mut targets = BTreeSet::new();
        while targets.len() < deg {
            targets.insert(rng.below(n_states as u64) as StateId);
        }
        let raw: Vec<f64> = targets.iter().map(|_| 0.05 + rng.uniform()).collect();
        let total: f64 = raw.iter().sum();
        rows.push(
            targets
                .into_iter()
                .zip(raw)
                .map(|(t, w)| (t, w / total))
                .collect::<Vec<_>>(),
        );
    }
    let mut labels: BTreeMap<String, BTreeSet<StateId>> = BTreeMap::new();
    for name in ["a", "b"] {
        let set: BTreeSet<StateId> =
            (0..n_states).filter(|_| rng.uniform() < 0.4).collect();
        labels.insert(name.to_string(), set);
    }
    Model { kind: ModelKind::Dtmc, n_states, init: 0, rows, labels }
        .validate()
        .expect("generated model must validate")
}

/// Standard error of a Bernoulli proportion estimate.
pub fn stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

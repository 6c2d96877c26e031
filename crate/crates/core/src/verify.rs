//! The verification orchestrator: ties models, simulation, evaluation, and
//! hypothesis testing together, including nested probabilistic operators and
//! black-box verification over pre-recorded traces.
//!
//! A top-level `P>=θ [φ]` draws traces from the initial state and feeds the
//! per-trace Bernoulli outcomes to the configured test. When `φ` itself
//! contains `Prob` nodes, each trace position spawns inner SPRT runs, whose
//! per-check strength widens what the outer test actually observes: a path
//! satisfied with probability p is *reported* satisfied with probability in
//! `[p(1−α′), 1−(1−p)(1−β′)]`. The outer thresholds are therefore adjusted
//! by [`nested_thresholds`] before testing, and the adjustment can fail with
//! [`Error::RegionCollapsed`] when the inner strength is too weak for the
//! outer indifference region.
//!
//! Boolean combinations at the top level verify each operand and combine the
//! verdicts propositionally; negation swaps the requested (α, β), per the
//! duality between the two error kinds.

use crate::error::{Error, Result};
use crate::formula::{Formula, NodeId, PathFormula};
use crate::hypothesis::{
    binomial_cdf, cdf_scan, ssp_decide, ssp_plan, sprt_step, Accepted, SprtState, TestMethod,
    TestParams, DEFAULT_MAX_SAMPLES,
};
use crate::logic::{
    check_trace_depth, eval_path, path_depth, path_error_pair, required_depth, CompositionMode,
    ErrorPair, EvalCtx, InnerVerifier, NoNesting,
};
use crate::model::{StateId, ValidatedModel};
use crate::rng::SampleKey;
use crate::sim::{sample_path, DepthBound, Trace, DEFAULT_HARD_CAP};
use crate::text::render_formula;
use serde::Serialize;
use std::collections::HashMap;
use std::time::Instant;

/// Everything a verification run can be configured with.
#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    /// Requested Type-I error bound of the top-level verdict.
    pub alpha: f64,
    /// Requested Type-II error bound of the top-level verdict.
    pub beta: f64,
    /// Indifference half-width for top-level thresholds.
    pub delta: f64,
    /// Test deciding the top level (inner tests are always sequential).
    pub method: TestMethod,
    pub seed: u64,
    /// Cap on samples drawn by any single test.
    pub max_samples: u64,
    /// Per-check strength and half-width of nested tests, at every level.
    pub inner_alpha: f64,
    pub inner_beta: f64,
    pub inner_delta: f64,
    pub composition: CompositionMode,
    /// Cache inner verdicts per (state, node) within one run. Sound for
    /// Markov models; disable to measure per-check error rates.
    pub memo: bool,
    /// Step safety cap per sampled trace.
    pub hard_cap: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            alpha: 0.05,
            beta: 0.05,
            delta: 0.01,
            method: TestMethod::Sprt,
            seed: 0,
            max_samples: DEFAULT_MAX_SAMPLES,
            inner_alpha: 0.05,
            inner_beta: 0.05,
            inner_delta: 0.01,
            composition: CompositionMode::MinMax,
            memo: true,
            hard_cap: DEFAULT_HARD_CAP,
        }
    }
}

/// Sampling effort and effective thresholds of one nesting level (0 = the
/// top-level test, 1 = tests spawned inside its traces, and so on).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevelReport {
    pub level: u32,
    /// Total samples drawn by all tests at this level.
    pub samples: u64,
    /// Thresholds the tests at this level actually discriminated between
    /// (after any nested adjustment).
    pub p0_effective: f64,
    pub p1_effective: f64,
}

/// Extra fields of a black-box report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlackboxInfo {
    /// Number of traces provided (the sample size is fixed by the input).
    pub n: u64,
    pub c: i64,
    /// P[accept H1 | p = θ] and P[accept H0 | p = θ]: the achieved error
    /// characterization of the forced plan at the threshold itself.
    pub achieved_type1: f64,
    pub achieved_type2: f64,
}

/// Outcome of a verification run.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    /// AcceptH0 = the property holds (within the configured strength).
    pub verdict: Accepted,
    /// The verified formula, rendered in canonical syntax.
    pub formula: String,
    pub method: TestMethod,
    pub levels: Vec<LevelReport>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blackbox: Option<BlackboxInfo>,
    pub elapsed_ms: f64,
}

/// Adjust an outer threshold pair for the strength of the per-path check:
/// `p0_adj = (θ+δ)·(1−α′)`, `p1_adj = 1 − (1−(θ−δ))·(1−β′)` (with θ±δ
/// clamped into [0, 1]). Fails with [`Error::RegionCollapsed`] when the
/// adjusted region is empty — the inner test is too weak for the outer
/// indifference region, so the caller must tighten (α′, β′) or widen δ.
pub fn nested_thresholds(
    theta: f64,
    delta: f64,
    inner_alpha: f64,
    inner_beta: f64,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&theta) || !delta.is_finite() || delta < 0.0 {
        return Err(Error::InvalidParams {
            message: format!("invalid threshold parameters theta={theta}, delta={delta}"),
        });
    }
    adjust_thresholds((theta + delta).min(1.0), (theta - delta).max(0.0), (inner_alpha, inner_beta))
}

fn adjust_thresholds(p0: f64, p1: f64, inner: ErrorPair) -> Result<(f64, f64)> {
    let (a, b) = inner;
    if !(0.0..1.0).contains(&a) || !(0.0..1.0).contains(&b) {
        return Err(Error::InvalidParams {
            message: format!("inner error bounds must lie in [0, 1) (got {a}, {b})"),
        });
    }
    let p0_adj = p0 * (1.0 - a);
    let p1_adj = 1.0 - (1.0 - p1) * (1.0 - b);
    if p0_adj > p1_adj {
        Ok((p0_adj, p1_adj))
    } else {
        Err(Error::RegionCollapsed { p0_adj, p1_adj })
    }
}

/// Acceptance constant for a forced sample size: the c in [−1, n] whose
/// binomial CDF at θ sits closest to 1/2, so that at p = θ the two verdicts
/// are roughly equally likely. Ties (within 1e-12, absorbing CDF rounding
/// dust) break toward the smaller c.
pub fn choose_blackbox_c(n: u64, theta: f64) -> i64 {
    let mut best_c = -1i64;
    let mut best_d = 0.5; // distance of F(−1) = 0 from 1/2
    cdf_scan(n, theta, |k, f| {
        let d = (f - 0.5).abs();
        if d + 1e-12 < best_d {
            best_d = d;
            best_c = k as i64;
        }
        k + 1 < n
    });
    best_c
}

/// Verify `formula` on `model` per the configuration. The formula's
/// outermost structure may be a `Prob` node, a Boolean combination of them,
/// or purely propositional (evaluated exactly on the initial state).
pub fn verify(model: &ValidatedModel, formula: &Formula, cfg: &VerifyConfig) -> Result<Report> {
    let start = Instant::now();
    // Catches time bounds on discrete models and mixed bound kinds before
    // any sampling happens.
    required_depth(formula, model.kind())?;
    let mut runner = Runner::new(model, cfg);
    let holds = runner.eval_top(formula, cfg.alpha, cfg.beta)?;
    Ok(Report {
        verdict: if holds { Accepted::H0 } else { Accepted::H1 },
        formula: render_formula(formula),
        method: cfg.method,
        levels: runner.into_levels(),
        warnings: Vec::new(),
        blackbox: None,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Verify `P>=theta [φ]` against a fixed set of pre-recorded traces: no
/// further samples can be drawn, so the sample size is the trace count and
/// the acceptance constant comes from [`choose_blackbox_c`]. `theta` is
/// authoritative (a differing threshold in the formula itself is reported
/// as a warning); nested `Prob` nodes are out of scope.
pub fn verify_blackbox(
    model: &ValidatedModel,
    formula: &Formula,
    theta: f64,
    traces: &[Trace],
) -> Result<Report> {
    let start = Instant::now();
    let (formula_theta, path) = match formula {
        Formula::Prob { threshold, path, .. } => (*threshold, path.as_ref()),
        _ => {
            return Err(Error::InvalidParams {
                message: "black-box verification needs a property of the form P>=theta [ ... ]"
                    .into(),
            });
        }
    };
    let propositional = match path {
        PathFormula::Next(f) => f.is_propositional(),
        PathFormula::Until { lhs, rhs, .. } => lhs.is_propositional() && rhs.is_propositional(),
    };
    if !propositional {
        return Err(Error::NestedNotSupported);
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParams {
            message: format!("black-box threshold must lie strictly inside (0, 1), got {theta}"),
        });
    }
    if traces.is_empty() {
        return Err(Error::InvalidParams {
            message: "black-box verification needs at least one trace".into(),
        });
    }

    let depth = required_depth(formula, model.kind())?;
    for trace in traces {
        check_trace_depth(trace, &depth.kind)?;
    }
    let ctx = EvalCtx {
        model,
        mode: CompositionMode::MinMax,
        inner_errors: (0.0, 0.0),
        strict: true,
    };
    let key = SampleKey::new(0); // never drawn from: the path is propositional
    let mut successes = 0i64;
    for trace in traces {
        successes += eval_path(path, trace, &ctx, &key, &mut NoNesting)?.holds as i64;
    }

    let n = traces.len() as u64;
    let c = choose_blackbox_c(n, theta);
    let achieved_type1 = binomial_cdf(c, n, theta);
    let mut warnings =
        vec!["transition weights in the model are ignored in black-box mode (labels only)".to_string()];
    if formula_theta != theta {
        warnings.push(format!(
            "threshold {theta} overrides the formula's threshold {formula_theta}"
        ));
    }
    Ok(Report {
        verdict: if successes > c { Accepted::H0 } else { Accepted::H1 },
        formula: render_formula(formula),
        method: TestMethod::Ssp,
        levels: vec![LevelReport { level: 0, samples: n, p0_effective: theta, p1_effective: theta }],
        warnings,
        blackbox: Some(BlackboxInfo { n, c, achieved_type1, achieved_type2: 1.0 - achieved_type1 }),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Clone, Copy)]
struct LevelSlot {
    samples: u64,
    p0: f64,
    p1: f64,
}

/// Mutable state of one verification run; implements [`InnerVerifier`] so
/// evaluation can call back into it for nested tests.
struct Runner<'a> {
    model: &'a ValidatedModel,
    cfg: &'a VerifyConfig,
    root: SampleKey,
    levels: Vec<Option<LevelSlot>>,
    memo: HashMap<(StateId, NodeId), bool>,
    current_level: u32,
}

impl<'a> Runner<'a> {
    fn new(model: &'a ValidatedModel, cfg: &'a VerifyConfig) -> Runner<'a> {
        Runner {
            model,
            cfg,
            root: SampleKey::new(cfg.seed),
            levels: Vec::new(),
            memo: HashMap::new(),
            current_level: 0,
        }
    }

    fn into_levels(self) -> Vec<LevelReport> {
        self.levels
            .into_iter()
            .enumerate()
            .filter_map(|(level, slot)| {
                slot.map(|s| LevelReport {
                    level: level as u32,
                    samples: s.samples,
                    p0_effective: s.p0,
                    p1_effective: s.p1,
                })
            })
            .collect()
    }

    fn record(&mut self, level: u32, samples: u64, p0: f64, p1: f64) {
        let idx = level as usize;
        if self.levels.len() <= idx {
            self.levels.resize(idx + 1, None);
        }
        match &mut self.levels[idx] {
            Some(slot) => slot.samples += samples,
            None => self.levels[idx] = Some(LevelSlot { samples, p0, p1 }),
        }
    }

    /// Evaluate the top-level structure at the initial state, threading the
    /// requested strength through the composition rules: negation swaps
    /// (α, β); conjunction and disjunction verify each operand at the full
    /// requested strength, which the composition theorems then guarantee for
    /// the combination.
    fn eval_top(&mut self, f: &Formula, alpha: f64, beta: f64) -> Result<bool> {
        Ok(match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(name) => self.model.atom_holds(name, self.model.init()),
            Formula::Not(g) => !self.eval_top(g, beta, alpha)?,
            Formula::And(a, b) => self.eval_top(a, alpha, beta)? && self.eval_top(b, alpha, beta)?,
            Formula::Or(a, b) => self.eval_top(a, alpha, beta)? || self.eval_top(b, alpha, beta)?,
            Formula::Prob { threshold, path, id } => {
                let prefix = self.root.child(*id as u64);
                self.run_test(
                    0,
                    self.model.init(),
                    *threshold,
                    path,
                    alpha,
                    beta,
                    self.cfg.delta,
                    self.cfg.method,
                    &prefix,
                )?
            }
        })
    }

    /// Run one hypothesis test for `P>=theta [path]` from `from`, sampling
    /// traces under `prefix.child(i)`. Returns true iff H0 was accepted.
    #[allow(clippy::too_many_arguments)]
    fn run_test(
        &mut self,
        level: u32,
        from: StateId,
        theta: f64,
        path: &PathFormula,
        alpha: f64,
        beta: f64,
        delta: f64,
        method: TestMethod,
        prefix: &SampleKey,
    ) -> Result<bool> {
        let params = TestParams::from_threshold(theta, delta, alpha, beta)?;
        let inner = (self.cfg.inner_alpha, self.cfg.inner_beta);
        let pair = path_error_pair(path, self.cfg.composition, inner);
        let (p0_eff, p1_eff) = if pair == (0.0, 0.0) {
            (params.p0, params.p1)
        } else {
            adjust_thresholds(params.p0, params.p1, pair)?
        };
        let effective = TestParams::from_bounds(p0_eff, p1_eff, alpha, beta)?;
        let depth = path_depth(path, self.model.kind())?.with_cap(self.cfg.hard_cap);

        let saved_level = self.current_level;
        self.current_level = level;
        let result = self.run_test_inner(from, path, &effective, method, prefix, &depth);
        self.current_level = saved_level;

        let verdict = result?;
        self.record(level, verdict.samples_used, p0_eff, p1_eff);
        Ok(verdict.accepted == Accepted::H0)
    }

    fn run_test_inner(
        &mut self,
        from: StateId,
        path: &PathFormula,
        effective: &TestParams,
        method: TestMethod,
        prefix: &SampleKey,
        depth: &DepthBound,
    ) -> Result<crate::hypothesis::Verdict> {
        match method {
            TestMethod::Sprt => {
                let mut state = SprtState::new(effective)?;
                loop {
                    if state.m >= self.cfg.max_samples {
                        return Err(Error::MaxSamplesExceeded { max: self.cfg.max_samples });
                    }
                    let outcome =
                        self.sample_outcome(path, from, &prefix.child(state.m), depth)?;
                    sprt_step(&mut state, outcome)?;
                    if let Some(accepted) = state.decision {
                        return Ok(crate::hypothesis::Verdict {
                            accepted,
                            samples_used: state.m,
                            params: *effective,
                            method,
                        });
                    }
                }
            }
            TestMethod::Ssp => {
                let plan =
                    ssp_plan(effective.p0, effective.p1, effective.alpha, effective.beta)?;
                if plan.n > self.cfg.max_samples {
                    return Err(Error::MaxSamplesExceeded { max: self.cfg.max_samples });
                }
                let mut outcomes = Vec::with_capacity(plan.n as usize);
                for i in 0..plan.n {
                    outcomes.push(self.sample_outcome(path, from, &prefix.child(i), depth)?);
                }
                ssp_decide(&plan, effective, &outcomes)
            }
        }
    }

    /// One Bernoulli observation: sample a trace and evaluate the path
    /// formula on it (spawning nested tests through `self`).
    fn sample_outcome(
        &mut self,
        path: &PathFormula,
        from: StateId,
        trace_key: &SampleKey,
        depth: &DepthBound,
    ) -> Result<bool> {
        let trace = sample_path(self.model, from, trace_key, depth)?;
        let ctx = EvalCtx {
            model: self.model,
            mode: self.cfg.composition,
            inner_errors: (self.cfg.inner_alpha, self.cfg.inner_beta),
            strict: false,
        };
        Ok(eval_path(path, &trace, &ctx, trace_key, self)?.holds)
    }
}

impl InnerVerifier for Runner<'_> {
    fn verify_inner(
        &mut self,
        state: StateId,
        node_id: NodeId,
        theta: f64,
        path: &PathFormula,
        key: &SampleKey,
    ) -> Result<bool> {
        if self.cfg.memo {
            if let Some(&verdict) = self.memo.get(&(state, node_id)) {
                return Ok(verdict);
            }
        }
        let verdict = self.run_test(
            self.current_level + 1,
            state,
            theta,
            path,
            self.cfg.inner_alpha,
            self.cfg.inner_beta,
            self.cfg.inner_delta,
            TestMethod::Sprt,
            key,
        )?;
        if self.cfg.memo {
            self.memo.insert((state, node_id), verdict);
        }
        Ok(verdict)
    }
}

//! Path sampling and the trace text format.
//!
//! A [`Trace`] is one finite execution: the visited states plus, for
//! continuous-time models, the entry time of each state. Sampling is
//! deterministic in the [`SampleKey`]: the step `j` out of a state consumes
//! draw index `j` for a DTMC, and draw indices `2j` (sojourn) and `2j + 1`
//! (jump target) for a CTMC, so identical `(model, from, key, bound)` always
//! produce bit-identical traces.

use crate::error::{Error, Result};
use crate::formula::Bound;
use crate::model::{ModelKind, StateId, ValidatedModel};
use crate::rng::{sample_uniform, SampleKey};
use crate::text::SourceSpan;
use std::fmt::Write as _;

/// Default step safety cap: bounded properties need few steps, so hitting
/// this many signals a modeling pathology rather than a long property.
pub const DEFAULT_HARD_CAP: u64 = 1_000_000;

/// How deep to sample: the property-derived bound plus a step safety cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DepthBound {
    pub kind: Bound,
    pub hard_cap: u64,
}

impl DepthBound {
    pub fn steps(k: u64) -> DepthBound {
        DepthBound { kind: Bound::Steps(k), hard_cap: DEFAULT_HARD_CAP }
    }

    pub fn time(t: f64) -> DepthBound {
        DepthBound { kind: Bound::Time(t), hard_cap: DEFAULT_HARD_CAP }
    }

    pub fn with_cap(self, hard_cap: u64) -> DepthBound {
        DepthBound { hard_cap, ..self }
    }
}

/// One finite sampled (or externally recorded) execution.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    /// Visited states, in order; never empty.
    pub states: Vec<StateId>,
    /// Entry time of each state; empty for a DTMC, where the entry time of
    /// position `i` is `i` itself.
    pub times: Vec<f64>,
    /// The step safety cap cut this trace short of its requested depth.
    pub truncated: bool,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> StateId {
        self.states[i]
    }

    /// Time at which position `i` was entered (the step index for a DTMC).
    pub fn entry_time(&self, i: usize) -> f64 {
        if self.times.is_empty() {
            i as f64
        } else {
            self.times[i]
        }
    }

    pub fn last_state(&self) -> StateId {
        *self.states.last().expect("trace is never empty")
    }

    pub fn last_entry_time(&self) -> f64 {
        self.entry_time(self.len() - 1)
    }
}

/// Sample one path from `from`. DTMC: exactly `min(k, hard_cap)` transitions
/// through the cumulative row distribution (self-loops count as steps).
/// CTMC: embedded jump chain with probabilities `rate / R(s)` and
/// inverse-CDF exponential sojourns `-ln(u) / R(s)`, stopping when an
/// absorbing state is entered, the step budget is spent, or the next jump
/// would land beyond a time bound (the final state then covers the rest of
/// the bound).
pub fn sample_path(
    model: &ValidatedModel,
    from: StateId,
    key: &SampleKey,
    bound: &DepthBound,
) -> Result<Trace> {
    match model.kind() {
        ModelKind::Dtmc => sample_dtmc(model, from, key, bound),
        ModelKind::Ctmc => sample_ctmc(model, from, key, bound),
    }
}

fn sample_dtmc(
    model: &ValidatedModel,
    from: StateId,
    key: &SampleKey,
    bound: &DepthBound,
) -> Result<Trace> {
    let k = match bound.kind {
        Bound::Steps(k) => k,
        Bound::Time(_) => {
            return Err(Error::BoundTypeMismatch {
                message: "time bounds require a continuous-time model".into(),
            });
        }
    };
    let steps = k.min(bound.hard_cap);
    let mut states = Vec::with_capacity(steps as usize + 1);
    states.push(from);
    for j in 0..steps {
        let s = *states.last().unwrap();
        let u = sample_uniform(key, j);
        states.push(pick_target(model.row(s), 1.0, u));
    }
    Ok(Trace { states, times: Vec::new(), truncated: k > bound.hard_cap })
}

fn sample_ctmc(
    model: &ValidatedModel,
    from: StateId,
    key: &SampleKey,
    bound: &DepthBound,
) -> Result<Trace> {
    let mut states = vec![from];
    let mut times = vec![0.0f64];
    let mut jumps = 0u64;
    let truncated = loop {
        let s = *states.last().unwrap();
        if model.is_absorbing(s) {
            break false;
        }
        match bound.kind {
            Bound::Steps(k) => {
                if jumps >= k.min(bound.hard_cap) {
                    break k > bound.hard_cap;
                }
            }
            Bound::Time(_) => {
                if jumps >= bound.hard_cap {
                    return Err(Error::HardCapExceeded { cap: bound.hard_cap });
                }
            }
        }
        let rate = model.row_total(s);
        let u_sojourn = sample_uniform(key, 2 * jumps).max(f64::MIN_POSITIVE);
        let entry = times.last().unwrap() + (-u_sojourn.ln() / rate);
        if let Bound::Time(t) = bound.kind {
            if entry > t {
                break false;
            }
        }
        let u_jump = sample_uniform(key, 2 * jumps + 1);
        states.push(pick_target(model.row(s), rate, u_jump));
        times.push(entry);
        jumps += 1;
    };
    Ok(Trace { states, times, truncated })
}

/// Map a uniform draw through the cumulative distribution of `row`, whose
/// weights sum to `total`. Rounding dust can leave `u * total` marginally
/// above the final cumulative sum, so the last entry is the fallback.
fn pick_target(row: &[(StateId, f64)], total: f64, u: f64) -> StateId {
    let point = u * total;
    let mut acc = 0.0;
    for &(target, weight) in row {
        acc += weight;
        if point < acc {
            return target;
        }
    }
    row.last().expect("sampled row is never empty").0
}

// --------------------------------------------------------------------------
// Trace text format
// --------------------------------------------------------------------------

/// Render one trace as a line of text: space-separated state ids for a
/// DTMC, `state@time` tokens for a CTMC.
pub fn format_trace(trace: &Trace) -> String {
    let mut out = String::new();
    for (i, &s) in trace.states.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if trace.times.is_empty() {
            let _ = write!(out, "{s}");
        } else {
            let _ = write!(out, "{s}@{}", trace.times[i]);
        }
    }
    out
}

/// Parse a trace file: one trace per line, `#` comments, blank lines
/// ignored. State ids are checked against `n_states` and CTMC times must be
/// finite, start at 0, and never decrease.
pub fn parse_traces(src: &str, kind: ModelKind, n_states: usize) -> Result<Vec<Trace>> {
    let mut out = Vec::new();
    for (idx, line) in src.lines().enumerate() {
        let line_no = idx as u32 + 1;
        let toks = crate::text::tokenize_line(line);
        let toks = match toks.iter().position(|&(_, t)| t.starts_with('#')) {
            Some(i) => &toks[..i],
            None => &toks[..],
        };
        if toks.is_empty() {
            continue;
        }
        let mut states = Vec::with_capacity(toks.len());
        let mut times = Vec::new();
        for &(col, tok) in toks {
            let span = SourceSpan { line: line_no, col };
            let state_text = match kind {
                ModelKind::Dtmc => {
                    if tok.contains('@') {
                        return Err(Error::Syntax {
                            span,
                            message: "discrete-time traces are plain state ids (no '@time')".into(),
                        });
                    }
                    tok
                }
                ModelKind::Ctmc => {
                    let (state_text, time_text) = tok.split_once('@').ok_or_else(|| Error::Syntax {
                        span,
                        message: format!("expected 'state@time', found '{tok}'"),
                    })?;
                    let time: f64 = time_text.parse().map_err(|_| Error::Syntax {
                        span,
                        message: format!("malformed time '{time_text}'"),
                    })?;
                    if !time.is_finite() || time < 0.0 || time_text.starts_with(['+', '-']) {
                        return Err(Error::Syntax {
                            span,
                            message: format!("time '{time_text}' must be a finite non-negative number"),
                        });
                    }
                    if times.is_empty() && time != 0.0 {
                        return Err(Error::Syntax {
                            span,
                            message: "a trace must start at time 0".into(),
                        });
                    }
                    if let Some(&prev) = times.last() {
                        if time < prev {
                            return Err(Error::Syntax {
                                span,
                                message: format!("entry times must not decrease ({time} after {prev})"),
                            });
                        }
                    }
                    times.push(time);
                    state_text
                }
            };
            let state: StateId = if state_text.bytes().all(|b| b.is_ascii_digit()) && !state_text.is_empty() {
                state_text.parse().map_err(|_| Error::Syntax {
                    span,
                    message: format!("state id '{state_text}' is out of range"),
                })?
            } else {
                return Err(Error::Syntax {
                    span,
                    message: format!("expected a state id, found '{state_text}'"),
                });
            };
            if state >= n_states {
                return Err(Error::DanglingTarget { reference: state, n_states, span: Some(span) });
            }
            states.push(state);
        }
        out.push(Trace { states, times, truncated: false });
    }
    Ok(out)
}

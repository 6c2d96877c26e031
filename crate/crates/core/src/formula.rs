//! Property formulas: Boolean state formulas over atomic propositions plus a
//! probability operator quantifying bounded path formulas.
//!
//! The representation is already normalized: the only comparison is `P>=`,
//! and the only path operators are `X` (next) and bounded until. The parser
//! (see [`crate::text`]) desugars `F<=b φ` to `true U<=b φ`, rewrites
//! `G<=b φ` through the probability operator via duality, and folds `P<`,
//! `P<=`, `P>` into this form — see [`crate::text::parse_formula`].

use std::fmt;

/// Identifies a `Prob` node within one formula. Ids are assigned in pre-order
/// by [`Formula::normalize_ids`]; they key memoization and random-stream
/// splitting for nested verification.
pub type NodeId = u32;

/// Bound on a path formula: a number of transitions, or an amount of elapsed
/// time (continuous-time models only).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Steps(u64),
    Time(f64),
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Steps(k) => write!(f, "{k}"),
            Bound::Time(t) => write!(f, "{t}t"),
        }
    }
}

/// A state formula.
#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// Holds in a state iff the probability of paths from that state
    /// satisfying `path` is at least `threshold`.
    Prob {
        threshold: f64,
        path: Box<PathFormula>,
        id: NodeId,
    },
}

/// A path formula, quantified by [`Formula::Prob`].
#[derive(Clone, Debug, PartialEq)]
pub enum PathFormula {
    /// Holds iff the state formula holds at position 1 of the path.
    Next(Formula),
    /// Holds iff `rhs` holds at some position within the bound and `lhs`
    /// holds at every earlier position.
    Until {
        lhs: Formula,
        rhs: Formula,
        bound: Bound,
    },
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Formula {
        Formula::Atom(name.into())
    }

    // Named for symmetry with `and`/`or`; this is a constructor, not `!`.
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn prob(threshold: f64, path: PathFormula) -> Formula {
        Formula::Prob { threshold, path: Box::new(path), id: 0 }
    }

    /// `true U<=bound f` — the derived "eventually" form.
    pub fn eventually(threshold: f64, bound: Bound, f: Formula) -> Formula {
        Formula::prob(threshold, PathFormula::Until { lhs: Formula::True, rhs: f, bound })
    }

    /// Assign pre-order ids to every `Prob` node. Parsing does this
    /// automatically; call it after building formulas by hand so that ids are
    /// unique and stable.
    pub fn normalize_ids(&mut self) {
        fn walk(f: &mut Formula, next: &mut NodeId) {
            match f {
                Formula::True | Formula::False | Formula::Atom(_) => {}
                Formula::Not(g) => walk(g, next),
                Formula::And(a, b) | Formula::Or(a, b) => {
                    walk(a, next);
                    walk(b, next);
                }
                Formula::Prob { path, id, .. } => {
                    *id = *next;
                    *next += 1;
                    match path.as_mut() {
                        PathFormula::Next(g) => walk(g, next),
                        PathFormula::Until { lhs, rhs, .. } => {
                            walk(lhs, next);
                            walk(rhs, next);
                        }
                    }
                }
            }
        }
        let mut next = 0;
        walk(self, &mut next);
    }

    /// True iff the formula contains no probability operator (so it can be
    /// evaluated exactly from labels alone).
    pub fn is_propositional(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(g) => g.is_propositional(),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.is_propositional() && b.is_propositional()
            }
            Formula::Prob { .. } => false,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            Formula::Not(..) => 3,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
        }
        match self {
            Formula::True => write!(f, "true")?,
            Formula::False => write!(f, "false")?,
            Formula::Atom(a) => write!(f, "{a}")?,
            Formula::Not(g) => {
                write!(f, "!")?;
                g.fmt_prec(f, 4)?;
            }
            Formula::And(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, " & ")?;
                // Left-associative: a right-nested And needs parentheses to
                // round-trip structurally.
                b.fmt_prec(f, 3)?;
            }
            Formula::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " | ")?;
                b.fmt_prec(f, 2)?;
            }
            Formula::Prob { threshold, path, .. } => {
                write!(f, "P>={threshold} [ {path} ]")?;
            }
        }
        if prec < min {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Display for PathFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathFormula::Next(g) => write!(f, "X {g}"),
            PathFormula::Until { lhs, rhs, bound } => write!(f, "{lhs} U<={bound} {rhs}"),
        }
    }
}

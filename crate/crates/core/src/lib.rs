//! Statistical verification of probabilistic temporal properties on
//! discrete- and continuous-time Markov chains.
//!
//! Instead of computing satisfaction probabilities numerically, properties
//! of the form `P>=θ [ φ ]` are decided by sampling execution traces and
//! running a sequential probability ratio test or a fixed-size single
//! sampling plan, with user-chosen bounds on the probability of a wrong
//! answer. The pieces:
//!
//! - [`model`] — Markov chain representation and validation,
//! - [`text`] — parsers for the model, formula, and trace formats,
//! - [`formula`] — the property syntax tree,
//! - [`sim`] — deterministic, seedable trace sampling,
//! - [`logic`] — path evaluation and error-bound composition,
//! - [`hypothesis`] — the statistical tests themselves,
//! - [`verify`] — the orchestrator, including nested probabilistic
//!   operators and black-box verification of pre-recorded traces,
//! - [`rng`] — the splittable counter-based random stream.
//!
//! ```
//! use smc_core::text::{parse_formula, parse_model};
//! use smc_core::verify::{verify, VerifyConfig};
//! use smc_core::hypothesis::Accepted;
//!
//! let model = parse_model(
//!     "dtmc\nstates 2\ninit 0\nlabel heads 1\ntrans 0 1 0.5\ntrans 0 0 0.5\ntrans 1 1 1.0\n",
//! )?;
//! let formula = parse_formula("P>=0.3 [ F<=1 heads ]")?;
//! let report = verify(&model, &formula, &VerifyConfig::default())?;
//! assert_eq!(report.verdict, Accepted::H0);
//! # Ok::<(), smc_core::error::Error>(())
//! ```

pub mod error;
pub mod formula;
pub mod hypothesis;
pub mod logic;
pub mod model;
pub mod rng;
pub mod sim;
pub mod text;
pub mod verify;

pub use error::{Error, Result};
pub use formula::{Bound, Formula, NodeId, PathFormula};
pub use hypothesis::{Accepted, SspPlan, TestMethod, TestParams, Verdict};
pub use logic::CompositionMode;
pub use model::{Model, ModelKind, StateId, ValidatedModel};
pub use sim::{DepthBound, Trace};
pub use verify::{Report, VerifyConfig};

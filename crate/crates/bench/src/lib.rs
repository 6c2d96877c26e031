//! Shared fixtures for the criterion benchmarks: small models that exercise
//! both simulation back ends without dominating the measurement with parsing.

use smc_core::text::parse_model;
use smc_core::ValidatedModel;

/// Three-state biased coin: 0 → goal with probability 0.9, else a trap.
pub fn coin() -> ValidatedModel {
    parse_model(
        "dtmc\nstates 3\ninit 0\nlabel goal 1\n\
         trans 0 1 0.9\ntrans 0 2 0.1\ntrans 1 1 1.0\ntrans 2 2 1.0\n",
    )
    .unwrap()
}

/// Five-state birth–death chain with attainable service and arrival rates.
pub fn queue() -> ValidatedModel {
    parse_model(
        "ctmc\nstates 5\ninit 0\nlabel full 4\n\
         trans 0 1 1.0\n\
         trans 1 0 1.5\ntrans 1 2 1.0\n\
         trans 2 1 1.5\ntrans 2 3 1.0\n\
         trans 3 2 1.5\ntrans 3 4 1.0\n\
         trans 4 3 1.5\n",
    )
    .unwrap()
}

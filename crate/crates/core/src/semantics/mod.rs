//! Network reduction, seeded simulation and reachability.

mod explore;
mod simulate;
mod step;

pub use explore::{
    check_df_network, check_failure_handling, check_term_network, explore_network, Exploration, NetCheck,
};
pub use simulate::{simulate, DropPolicy, Trace, TraceStep};
pub use step::{enumerate_steps, NetStateId, NetStep, StepRule};

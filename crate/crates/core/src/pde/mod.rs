//! Method-of-lines solver for the two-tubes equations.

pub mod flow;
pub mod run;
pub mod scheme;

pub use flow::{flow, interflow, ipm_flow_solve, tfe_closure, FlowField};
pub use run::{simulate, simulate_from, Aborted, SeriesRow, Snapshot, StepStats, Trajectory};
pub use scheme::{rhs, rhs_with_flow, step};

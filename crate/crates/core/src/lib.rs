//! Capacity-constrained pickup routing for paratransit dispatch.
//!
//! The crate bundles four cooperating pieces:
//!
//! * random instance generation with Euclidean travel costs ([`instance`]),
//! * an exact arc-flow model with load-based subtour elimination ([`milp`])
//!   solved by branch-and-bound ([`branch_bound`]) over a bounded-variable
//!   simplex engine ([`simplex`]),
//! * a brute-force optimum for tiny instances used as ground truth ([`oracle`]),
//! * a graph convolutional edge predictor with a route decoder ([`gcn`]),
//!
//! plus a scenario-grid runner ([`grid`]) that sweeps request counts against
//! vehicle capacities and reports solver statistics per cell.

pub mod branch_bound;
pub mod gcn;
pub mod grid;
pub mod instance;
pub mod milp;
pub mod oracle;
pub mod simplex;

pub use branch_bound::{SearchParams, SolveStats, Solved, Termination};
pub use gcn::{GcnConfig, GcnModel, TrainConfig};
pub use grid::{GridConfig, GridRow};
pub use instance::{CostMatrix, DemandMode, GeneratorConfig, Instance, Point};
pub use milp::{MilpModel, Routes};
pub use oracle::OracleResult;

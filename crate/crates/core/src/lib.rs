//! Exact partition sums, uniqueness calculus and E2LIN2 gadget reductions
//! for two-state spin systems with interaction matrix `[[beta, 1], [1, gamma]]`
//! and external field `mu`.

pub mod analysis;
pub mod error;
pub mod e2lin2;
pub mod exact;
pub mod field;
pub mod graph;
pub mod logweight;
pub mod partition;
pub mod reduction;
pub mod seed;
pub mod spin;
pub mod uniqueness;

pub use error::{Error, Result};
pub use graph::MultiGraph;
pub use logweight::{log_sum_exp, LogSumExp, LogWeight};
pub use partition::{partition_exact, EnumOptions};
pub use spin::{config_weight, Configuration, SideConstraint, SpinParams};

//! Graphs and linear structural equation models.

mod dag;
pub mod faithfulness;
mod intervention;
mod model;
mod restricted;

pub use dag::Dag;
pub use faithfulness::{check_i_faithfulness, FaithfulnessReport, SubsetPolicy, Violation};
pub use intervention::{changed_nodes, InterventionModel, InterventionSpec};
pub use model::LinearSem;
pub use restricted::RestrictedSem;

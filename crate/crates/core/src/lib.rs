//! Temporal planning with landmark intervals and PDDL3 state-trajectory
//! constraints.

pub mod execution;
pub mod landmarks;
pub mod model;
pub mod pddl;
pub mod search;
pub mod time;
pub mod tlg;
pub mod trajectory;
pub mod trpg;

pub use model::{GroundedTask, PropId, Proposition, TemporalPlan};
pub use time::Time;

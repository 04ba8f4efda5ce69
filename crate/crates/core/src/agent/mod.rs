//! Policies: a greedy replanning agent, a random agent, and replay.

mod planner;
mod policies;

pub use planner::{goal_count, plan, PlanResult, PlannerConfig};
pub use policies::{RandomPolicy, ReplanningPolicy, ReplayPolicy};

//! Grounded simulation of TSAL environments.

mod episode;
mod ground;
mod state;
mod step;

pub use episode::{performance, run_episode, EpisodeTrace, Policy, Terminal, TraceStep};
pub use ground::{
    ground, ground_with_cap, GroundCondition, GroundExpr, GroundTask, GroundTransition,
    NumericUpdate, DEFAULT_INSTANCE_CAP,
};
pub use state::State;
pub use step::{step, Choice, StepOutcome, UpdateRecord, EVENT_SCAN_LIMIT};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("GROUNDING_EXPLOSION: {count} instances exceed the cap of {cap}")]
    GroundingExplosion { count: u128, cap: usize },
    #[error("grounding failed: {0}")]
    Grounding(String),
    #[error("INAPPLICABLE_ACTION: {0}")]
    InapplicableAction(String),
    #[error("EVENT_CASCADE_LIMIT: events still enabled after {EVENT_SCAN_LIMIT} scans")]
    EventCascadeLimit,
    #[error("NON_FINITE_VALUE: {0} produced a non-finite value")]
    NonFinite(String),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::GroundingExplosion { .. } => "GROUNDING_EXPLOSION",
            SimError::Grounding(_) => "GROUNDING_ERROR",
            SimError::InapplicableAction(_) => "INAPPLICABLE_ACTION",
            SimError::EventCascadeLimit => "EVENT_CASCADE_LIMIT",
            SimError::NonFinite(_) => "NON_FINITE_VALUE",
        }
    }
}

//! Transformation catalog, sampling, batch generation, and revision.

mod apply;
mod batch;
mod config;
mod error;
mod kind;
mod sample;

pub use apply::{apply_all, apply_transformation, constant_at, enumerate_targets, transition_constants};
pub use batch::{generate_batch, generate_batch_with_threads, override_keys, revise, Batch, NoveltyRecord, Status};
pub use config::{GeneratorConfig, NumericLaw, NumericMode};
pub use error::TransformError;
pub use kind::{Params, Transformation, TransformationKind};
pub use sample::{perturb_value, sample_params, sample_transformation};

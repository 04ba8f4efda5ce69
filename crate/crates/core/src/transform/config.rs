use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::error::TransformError;
use super::kind::TransformationKind;

/// How numeric constants are perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumericMode {
    /// Multiply by a factor drawn log-uniformly from [0.1, 10].
    Scale,
    /// Add an offset drawn uniformly from [-10|c|, 10|c|].
    Shift,
    /// Scale or shift with equal probability.
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericLaw {
    pub mode: NumericMode,
    /// Reflect shifted values that cross zero back to the original sign.
    pub preserve_sign: bool,
}

impl Default for NumericLaw {
    fn default() -> Self {
        Self {
            mode: NumericMode::Either,
            preserve_sign: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub batch_size: usize,
    /// Relative sampling weight per kind. Kinds not listed weigh 0.
    pub weights: BTreeMap<TransformationKind, f64>,
    pub numeric_law: NumericLaw,
    /// Attempts per slot before it is given up.
    pub retry_limit: usize,
    pub dedup: bool,
    /// Transformations stacked into each record.
    pub stack_depth: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            batch_size: 100,
            weights: TransformationKind::ALL.into_iter().map(|k| (k, 1.0)).collect(),
            numeric_law: NumericLaw::default(),
            retry_limit: 25,
            dedup: true,
            stack_depth: 1,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), TransformError> {
        if self.batch_size == 0 {
            return Err(TransformError::Config("batch_size must be at least 1".into()));
        }
        if self.retry_limit == 0 {
            return Err(TransformError::Config("retry_limit must be at least 1".into()));
        }
        if self.stack_depth == 0 {
            return Err(TransformError::Config("stack_depth must be at least 1".into()));
        }
        if let Some((k, w)) = self.weights.iter().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(TransformError::Config(format!("weight for {k} must be a non-negative number, got {w}")));
        }
        if !self.weights.values().any(|w| *w > 0.0) {
            return Err(TransformError::Config("at least one kind weight must be positive".into()));
        }
        Ok(())
    }

    /// Parses `kind=w,kind=w` and replaces the weight map with it.
    pub fn set_weights(&mut self, spec: &str) -> Result<(), TransformError> {
        let mut weights = BTreeMap::new();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, w) = part
                .split_once('=')
                .ok_or_else(|| TransformError::Config(format!("expected kind=weight, got `{part}`")))?;
            let kind: TransformationKind = k.trim().parse().map_err(TransformError::Config)?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| TransformError::Config(format!("bad weight `{w}` for {kind}")))?;
            weights.insert(kind, w);
        }
        self.weights = weights;
        Ok(())
    }

    pub fn only(kind: TransformationKind) -> BTreeMap<TransformationKind, f64> {
        BTreeMap::from([(kind, 1.0)])
    }
}

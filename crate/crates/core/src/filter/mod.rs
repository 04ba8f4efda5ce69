//! Scoring novelties for relevance, noticeability, and controllability, and
//! classifying their viability from performance deltas.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agent::{PlannerConfig, RandomPolicy, ReplanningPolicy, ReplayPolicy};
use crate::seed;
use crate::sim::{ground, run_episode, GroundTask, Policy, SimError};
use crate::tsal::{DomainModel, ProblemModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViabilityThresholds {
    pub low_min: f64,
    pub med_min: f64,
    pub high_min: f64,
}

impl Default for ViabilityThresholds {
    fn default() -> Self {
        Self {
            low_min: 0.66,
            med_min: 4.0,
            high_min: 9.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    /// Episodes per (task, policy) condition.
    pub episodes: usize,
    pub max_steps: usize,
    /// Relevance requires `|Δ|` above this many pooled standard errors.
    pub relevance_se_factor: f64,
    /// Minimum spread of per-policy deltas for controllability.
    pub controllability_threshold: f64,
    pub thresholds: ViabilityThresholds,
    pub seed: u64,
    pub node_budget: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            episodes: 30,
            max_steps: 200,
            relevance_se_factor: 2.0,
            controllability_threshold: 0.05,
            thresholds: ViabilityThresholds::default(),
            seed: 0,
            node_budget: PlannerConfig::default().node_budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error("CONFIG_ERROR: {0}")]
    Config(String),
    #[error("INSUFFICIENT_POLICIES: controllability needs at least two policies, got {0}")]
    InsufficientPolicies(usize),
    #[error("{0}")]
    Sim(#[from] SimError),
    #[error("MODEL_ERROR: {0}")]
    Model(String),
}

impl FilterError {
    pub fn code(&self) -> &'static str {
        match self {
            FilterError::Config(_) => "CONFIG_ERROR",
            FilterError::InsufficientPolicies(_) => "INSUFFICIENT_POLICIES",
            FilterError::Sim(e) => e.code(),
            FilterError::Model(_) => "MODEL_ERROR",
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        let t = &self.thresholds;
        if self.episodes < 2 {
            return Err(FilterError::Config("episodes must be at least 2".into()));
        }
        if self.max_steps < 1 {
            return Err(FilterError::Config("max_steps must be at least 1".into()));
        }
        if self.node_budget < 1 {
            return Err(FilterError::Config("node_budget must be at least 1".into()));
        }
        if !(0.0 < t.low_min && t.low_min < t.med_min && t.med_min < t.high_min) {
            return Err(FilterError::Config(
                "thresholds must satisfy 0 < low_min < med_min < high_min".into(),
            ));
        }
        if !(self.relevance_se_factor >= 0.0 && self.controllability_threshold >= 0.0) {
            return Err(FilterError::Config("relevance and controllability thresholds must be non-negative".into()));
        }
        Ok(())
    }

    fn planner(&self) -> PlannerConfig {
        PlannerConfig {
            node_budget: self.node_budget,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    None,
    Low,
    Medium,
    High,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::None, Level::Low, Level::Medium, Level::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::None => "none",
            Level::Low => "low",
            Level::Medium => "medium",
            Level::High => "high",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Viability from a delta in percentage points. Intervals are open below
/// and closed above: `(low_min, med_min]` is low, and so on.
pub fn classify_viability(delta_percent: f64, t: &ViabilityThresholds) -> Level {
    let m = delta_percent.abs();
    if m <= t.low_min {
        Level::None
    } else if m <= t.med_min {
        Level::Low
    } else if m <= t.high_min {
        Level::Medium
    } else {
        Level::High
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceSummary {
    pub mean: f64,
    /// Sample standard deviation.
    pub stddev: f64,
    pub n: usize,
    pub scores: Vec<f64>,
}

impl PerformanceSummary {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let n = scores.len();
        // Shifting by the first score keeps constant samples exact.
        let origin = scores.first().copied().unwrap_or(0.0);
        let mean = if n == 0 {
            0.0
        } else {
            origin + scores.iter().map(|s| s - origin).sum::<f64>() / n as f64
        };
        let stddev = if n < 2 {
            0.0
        } else {
            (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, stddev, n, scores }
    }

    /// Variance of the mean.
    fn sq_se(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.stddev.powi(2) / self.n as f64
        }
    }
}

/// Runs `cfg.episodes` episodes, resetting the policy with
/// `split(cfg.seed, i)` before episode `i`.
pub fn measure_performance(task: &GroundTask, policy: &mut dyn Policy, cfg: &FilterConfig) -> PerformanceSummary {
    let scores = (0..cfg.episodes)
        .map(|i| {
            policy.reset(seed::split(cfg.seed, i as u64));
            run_episode(task, policy, cfg.max_steps).performance
        })
        .collect();
    PerformanceSummary::from_scores(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Planner,
    Random,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Planner => "planner",
            PolicyKind::Random => "random",
        }
    }

    fn build(self, cfg: &FilterConfig) -> Box<dyn Policy> {
        match self {
            PolicyKind::Planner => Box::new(ReplanningPolicy::new(cfg.planner())),
            PolicyKind::Random => Box::new(RandomPolicy::new(cfg.seed)),
        }
    }
}

fn measure(task: &GroundTask, kind: PolicyKind, cfg: &FilterConfig) -> PerformanceSummary {
    measure_performance(task, kind.build(cfg).as_mut(), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relevance {
    pub relevant: bool,
    /// Novel mean minus base mean.
    pub delta: f64,
    pub threshold: f64,
    pub base: PerformanceSummary,
    pub novel: PerformanceSummary,
}

fn relevance_from(base: PerformanceSummary, novel: PerformanceSummary, cfg: &FilterConfig) -> Relevance {
    let delta = novel.mean - base.mean;
    let threshold = cfg.relevance_se_factor * (base.sq_se() + novel.sq_se()).sqrt();
    Relevance {
        relevant: delta.abs() > threshold,
        delta,
        threshold,
        base,
        novel,
    }
}

/// Compares mean performance of `policy` on the two tasks.
pub fn relevance(base: &GroundTask, novel: &GroundTask, policy: PolicyKind, cfg: &FilterConfig) -> Relevance {
    relevance_from(measure(base, policy, cfg), measure(novel, policy, cfg), cfg)
}

/// First index at which the rendered observation sequences differ.
fn first_divergence(a: &[String], b: &[String]) -> Option<usize> {
    a.iter()
        .zip(b)
        .position(|(x, y)| x != y)
        .or_else(|| (a.len() != b.len()).then(|| a.len().min(b.len())))
}

/// Replays the planner's base-task actions on the novel task and reports the
/// first observation that differs (index 0 is the initial observation).
pub fn noticeability(base: &GroundTask, novel: &GroundTask, cfg: &FilterConfig) -> Option<usize> {
    let mut planner = ReplanningPolicy::new(cfg.planner());
    planner.reset(seed::split(cfg.seed, 0));
    let original = run_episode(base, &mut planner, cfg.max_steps);
    let mut replay = ReplayPolicy::from_choices(base, original.choices());
    let replayed = run_episode(novel, &mut replay, cfg.max_steps);
    let render = |t: &GroundTask, states: &[crate::sim::State]| -> Vec<String> {
        states.iter().map(|s| t.render(s)).collect()
    };
    first_divergence(
        &render(base, &original.observations),
        &render(novel, &replayed.observations),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controllability {
    pub controllable: bool,
    pub deltas: BTreeMap<PolicyKind, f64>,
}

fn controllability_from(deltas: BTreeMap<PolicyKind, f64>, cfg: &FilterConfig) -> Result<Controllability, FilterError> {
    if deltas.len() < 2 {
        return Err(FilterError::InsufficientPolicies(deltas.len()));
    }
    let max = deltas.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = deltas.values().copied().fold(f64::INFINITY, f64::min);
    Ok(Controllability {
        controllable: max - min > cfg.controllability_threshold,
        deltas,
    })
}

/// Per-policy performance deltas; controllable when they spread by more
/// than the threshold.
pub fn controllability(
    base: &GroundTask,
    novel: &GroundTask,
    policies: &[PolicyKind],
    cfg: &FilterConfig,
) -> Result<Controllability, FilterError> {
    let mut distinct = policies.to_vec();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(FilterError::InsufficientPolicies(distinct.len()));
    }
    let deltas = distinct
        .into_iter()
        .map(|k| (k, measure(novel, k, cfg).mean - measure(base, k, cfg).mean))
        .collect();
    controllability_from(deltas, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViabilityReport {
    pub relevant: bool,
    /// Planner performance delta, novel minus base.
    pub delta: f64,
    /// The same delta in percentage points.
    pub delta_percent: f64,
    pub relevance_threshold: f64,
    pub noticeable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divergence: Option<usize>,
    pub controllable: bool,
    pub policy_deltas: BTreeMap<PolicyKind, f64>,
    pub level: Level,
    pub base: PerformanceSummary,
    pub novel: PerformanceSummary,
}

/// Runs all three heuristics with the planner and random policies.
pub fn evaluate_tasks(base: &GroundTask, novel: &GroundTask, cfg: &FilterConfig) -> Result<ViabilityReport, FilterError> {
    cfg.validate()?;
    let rel = relevance(base, novel, PolicyKind::Planner, cfg);
    let random_delta =
        measure(novel, PolicyKind::Random, cfg).mean - measure(base, PolicyKind::Random, cfg).mean;
    let ctl = controllability_from(
        BTreeMap::from([(PolicyKind::Planner, rel.delta), (PolicyKind::Random, random_delta)]),
        cfg,
    )?;
    let divergence = noticeability(base, novel, cfg);
    let delta_percent = rel.delta * 100.0;
    Ok(ViabilityReport {
        relevant: rel.relevant,
        delta: rel.delta,
        delta_percent,
        relevance_threshold: rel.threshold,
        noticeable: divergence.is_some(),
        divergence,
        controllable: ctl.controllable,
        policy_deltas: ctl.deltas,
        level: classify_viability(delta_percent, &cfg.thresholds),
        base: rel.base,
        novel: rel.novel,
    })
}

/// Grounds both model pairs and evaluates them.
pub fn evaluate(
    base: (&DomainModel, &ProblemModel),
    novel: (&DomainModel, &ProblemModel),
    cfg: &FilterConfig,
) -> Result<ViabilityReport, FilterError> {
    let b = ground(base.0, base.1)?;
    let n = ground(novel.0, novel.1)?;
    evaluate_tasks(&b, &n, cfg)
}

/// Evaluates several novelties against one base in parallel. Results keep
/// the input order.
pub fn evaluate_many(
    base: (&DomainModel, &ProblemModel),
    novels: &[(DomainModel, ProblemModel)],
    cfg: &FilterConfig,
) -> Result<Vec<Result<ViabilityReport, FilterError>>, FilterError> {
    cfg.validate()?;
    let b = ground(base.0, base.1)?;
    Ok(novels
        .par_iter()
        .map(|(d, p)| {
            let n = ground(d, p)?;
            evaluate_tasks(&b, &n, cfg)
        })
        .collect())
}

//! Batches of novelty records and their revision.

use std::collections::HashSet;
use std::fmt;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::apply::apply_all;
use super::config::GeneratorConfig;
use super::error::TransformError;
use super::kind::{Transformation, TransformationKind};
use super::sample::sample_transformation;
use crate::filter::ViabilityReport;
use crate::seed;
use crate::tsal::{diff_models, print_domain, print_problem, DomainModel, ProblemModel, StructuralDiff};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Generated,
    Accepted,
    Rejected,
    Revised,
    Discarded,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Generated => "generated",
            Status::Accepted => "accepted",
            Status::Rejected => "rejected",
            Status::Revised => "revised",
            Status::Discarded => "discarded",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A generated (domain, problem) pair with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoveltyRecord {
    pub id: String,
    pub slot: usize,
    pub seed: u64,
    pub transformations: Vec<Transformation>,
    pub diff: StructuralDiff,
    /// Canonical text of the novel domain.
    pub domain: String,
    /// Canonical text of the novel problem.
    pub problem: String,
    pub status: Status,
    /// Id of the record this one was revised from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ViabilityReport>,
}

#[derive(Serialize)]
struct IdInput<'a> {
    parent: &'a Option<String>,
    slot: usize,
    seed: u64,
    transformations: &'a [Transformation],
    domain: &'a str,
    problem: &'a str,
}

impl NoveltyRecord {
    fn build(
        base: (&DomainModel, &ProblemModel),
        novel: (&DomainModel, &ProblemModel),
        slot: usize,
        seed: u64,
        transformations: Vec<Transformation>,
        status: Status,
        parent: Option<String>,
    ) -> Self {
        let domain = print_domain(novel.0);
        let problem = print_problem(novel.1);
        let input = IdInput {
            parent: &parent,
            slot,
            seed,
            transformations: &transformations,
            domain: &domain,
            problem: &problem,
        };
        let bytes = serde_json::to_vec(&input).expect("serializable");
        let id = hex::encode(&Sha256::digest(&bytes)[..8]);
        Self {
            id,
            slot,
            seed,
            diff: diff_models(base.0, base.1, novel.0, novel.1),
            transformations,
            domain,
            problem,
            status,
            parent,
            report: None,
        }
    }

    /// The first transformation's kind, used for summaries.
    pub fn kind(&self) -> TransformationKind {
        self.transformations[0].kind
    }

    pub fn target(&self) -> &str {
        &self.transformations[0].target
    }

    /// Re-applies the transformations to the base models.
    pub fn replay(&self, d: &DomainModel, p: &ProblemModel) -> Result<(DomainModel, ProblemModel), TransformError> {
        apply_all(d, p, &self.transformations)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub records: Vec<NoveltyRecord>,
    pub warnings: Vec<String>,
}

struct Candidate {
    transformations: Vec<Transformation>,
    domain: DomainModel,
    problem: ProblemModel,
    key: (String, String),
}

/// One attempt: draws and applies `stack_depth` transformations in turn.
/// Ill-formed or identity results count as failures.
fn attempt(d: &DomainModel, p: &ProblemModel, base_key: &(String, String), cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Option<Candidate> {
    let mut cur = (d.clone(), p.clone());
    let mut ts = Vec::with_capacity(cfg.stack_depth);
    for _ in 0..cfg.stack_depth {
        let t = sample_transformation(&cur.0, &cur.1, cfg, rng).ok()?;
        cur = super::apply::apply_transformation(&cur.0, &cur.1, &t).ok()?;
        ts.push(t);
    }
    let key = (print_domain(&cur.0), print_problem(&cur.1));
    if key == *base_key {
        return None;
    }
    Some(Candidate {
        transformations: ts,
        domain: cur.0,
        problem: cur.1,
        key,
    })
}

struct Slot {
    rng: ChaCha8Rng,
    used: usize,
}

impl Slot {
    fn next(&mut self, d: &DomainModel, p: &ProblemModel, base_key: &(String, String), cfg: &GeneratorConfig) -> Option<Candidate> {
        while self.used < cfg.retry_limit {
            self.used += 1;
            if let Some(c) = attempt(d, p, base_key, cfg, &mut self.rng) {
                return Some(c);
            }
        }
        None
    }
}

/// Generates `cfg.batch_size` records. Slot `i` draws from its own stream
/// seeded with `split(cfg.seed, i)`, so the output does not depend on how
/// many threads evaluate the slots.
pub fn generate_batch(d: &DomainModel, p: &ProblemModel, cfg: &GeneratorConfig) -> Result<Batch, TransformError> {
    cfg.validate()?;
    let base_key = (print_domain(d), print_problem(p));
    let mut first: Vec<(Slot, Option<Candidate>)> = (0..cfg.batch_size)
        .into_par_iter()
        .map(|i| {
            let mut slot = Slot {
                rng: seed::rng(seed::split(cfg.seed, i as u64)),
                used: 0,
            };
            let c = slot.next(d, p, &base_key, cfg);
            (slot, c)
        })
        .collect();

    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut records = Vec::new();
    let mut empty = 0;
    for (i, (slot, candidate)) in first.iter_mut().enumerate() {
        let mut c = candidate.take();
        if cfg.dedup {
            while c.as_ref().is_some_and(|c| seen.contains(&c.key)) {
                c = slot.next(d, p, &base_key, cfg);
            }
        }
        let Some(c) = c else {
            empty += 1;
            continue;
        };
        seen.insert(c.key.clone());
        records.push(NoveltyRecord::build(
            (d, p),
            (&c.domain, &c.problem),
            i,
            seed::split(cfg.seed, i as u64),
            c.transformations,
            Status::Generated,
            None,
        ));
    }
    if records.is_empty() {
        return Err(TransformError::NoApplicableKind);
    }
    let mut warnings = Vec::new();
    if empty > 0 {
        warnings.push(format!(
            "filled {} of {} slots; {empty} exhausted {} attempts without a new novelty",
            records.len(),
            cfg.batch_size,
            cfg.retry_limit
        ));
    }
    Ok(Batch { records, warnings })
}

/// Runs [`generate_batch`] on a dedicated pool of `threads` workers.
pub fn generate_batch_with_threads(
    d: &DomainModel,
    p: &ProblemModel,
    cfg: &GeneratorConfig,
    threads: usize,
) -> Result<Batch, TransformError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| TransformError::Config(e.to_string()))?;
    pool.install(|| generate_batch(d, p, cfg))
}

/// Keys accepted by [`revise`] for this record. A bare key is offered when
/// exactly one transformation carries it; `i.key` always addresses the
/// `i`-th transformation.
pub fn override_keys(r: &NoveltyRecord) -> Vec<String> {
    let keys: Vec<Option<&str>> = r.transformations.iter().map(|t| t.kind.param_key()).collect();
    let mut out = Vec::new();
    for (i, k) in keys.iter().enumerate() {
        if let Some(k) = k {
            if keys.iter().filter(|x| *x == &Some(*k)).count() == 1 {
                out.push(k.to_string());
            }
            out.push(format!("{i}.{k}"));
        }
    }
    out
}

/// Re-applies `r`'s transformations with parameter overrides and returns a
/// new record with status `revised` that points back to `r`.
pub fn revise(
    d: &DomainModel,
    p: &ProblemModel,
    r: &NoveltyRecord,
    overrides: &[(String, String)],
) -> Result<NoveltyRecord, TransformError> {
    let valid = override_keys(r);
    let invalid = |message: String| TransformError::InvalidOverride {
        message,
        valid: valid.clone(),
    };
    let mut ts = r.transformations.clone();
    for (key, value) in overrides {
        if !valid.contains(key) {
            return Err(invalid(format!("`{key}` does not name a parameter of this record")));
        }
        let (i, field) = match key.split_once('.') {
            Some((i, f)) => (i.parse::<usize>().map_err(|_| invalid(format!("bad index in `{key}`")))?, f),
            None => (
                ts.iter()
                    .position(|t| t.kind.param_key() == Some(key.as_str()))
                    .expect("listed keys resolve"),
                key.as_str(),
            ),
        };
        ts[i].params.set(field, value).map_err(&invalid)?;
    }
    let (nd, np) = match apply_all(d, p, &ts) {
        Ok(m) => m,
        Err(e) if !overrides.is_empty() => return Err(invalid(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(NoveltyRecord::build(
        (d, p),
        (&nd, &np),
        r.slot,
        r.seed,
        ts,
        Status::Revised,
        Some(r.id.clone()),
    ))
}

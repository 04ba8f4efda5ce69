//! On-disk layout of a review session.
//!
//! ```text
//! <root>/base/domain.tsal, base/problem.tsal   canonical base models
//! <root>/batch.json                            generator config and records
//! <root>/novelties/<id>.tsal                   novel domain then problem
//! <root>/reports/<id>.json                     viability reports
//! <root>/annotations.json                      human decisions, versioned
//! <root>/manifest.json                         timestamps (not reproducible)
//! ```
//!
//! Every write goes to a temporary file in the target directory and is then
//! renamed into place.

use std::collections::{BTreeMap, HashSet};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::filter::ViabilityReport;
use crate::transform::{GeneratorConfig, NoveltyRecord, Status, TransformError};
use crate::tsal::{parse_domain, parse_problem, print_domain, print_problem, DomainModel, ProblemModel};

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("IO_ERROR: {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("IO_ERROR: {path}: malformed JSON: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("session has no base models; pass --domain and --problem")]
    NoBase,
    #[error("base model is invalid: {0}")]
    InvalidBase(String),
    #[error("unknown novelty id `{0}`")]
    UnknownId(String),
    #[error("annotation version conflict: expected {expected}, current {current}")]
    Conflict { expected: u64, current: u64 },
    #[error("{0}")]
    Transform(#[from] TransformError),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::Io { .. } | SessionError::Json { .. } => "IO_ERROR",
            SessionError::NoBase => "NO_BASE",
            SessionError::InvalidBase(_) => "VALIDATION_FAILED",
            SessionError::UnknownId(_) => "UNKNOWN_ID",
            SessionError::Conflict { .. } => "VERSION_CONFLICT",
            SessionError::Transform(e) => e.code(),
        }
    }
}

type Result<T> = std::result::Result<T, SessionError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SessionError + '_ {
    move |source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `path` by staging a temporary file next to it.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| SessionError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serializable");
    out.push(b'\n');
    out
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    match std::fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|source| SessionError::Json {
                path: path.to_path_buf(),
                source,
            }),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

/// Contents of `batch.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub records: Vec<NoveltyRecord>,
}

impl BatchFile {
    pub fn get(&self, id: &str) -> Option<&NoveltyRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Ids from `id` back to the root of its revision chain.
    pub fn lineage(&self, id: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = self.get(id);
        while let Some(r) = cur {
            if out.contains(&r.id) {
                break;
            }
            out.push(r.id.clone());
            cur = r.parent.as_deref().and_then(|p| self.get(p));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub status: Status,
    #[serde(default)]
    pub note: String,
}

/// Contents of `annotations.json`. The version increases with every write.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    pub version: u64,
    pub entries: BTreeMap<String, Annotation>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Manifest {
    #[serde(default)]
    events: Vec<ManifestEvent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestEvent {
    command: String,
    unix_seconds: u64,
}

#[derive(Debug, Clone)]
pub struct Session {
    root: PathBuf,
}

impl Session {
    pub fn open(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn novelty_path(&self, id: &str) -> PathBuf {
        self.path(&format!("novelties/{id}.tsal"))
    }

    pub fn report_path(&self, id: &str) -> PathBuf {
        self.path(&format!("reports/{id}.json"))
    }

    pub fn has_base(&self) -> bool {
        self.path("base/domain.tsal").exists() && self.path("base/problem.tsal").exists()
    }

    /// Parses, validates, and stores canonical copies of the base models.
    /// Returns whether they differ from the previous base.
    pub fn set_base(&self, domain: &str, problem: &str) -> Result<bool> {
        let d = parse_domain(domain).map_err(|e| SessionError::InvalidBase(e.to_string()))?;
        let p = parse_problem(problem, &d).map_err(|e| SessionError::InvalidBase(e.to_string()))?;
        let (dt, pt) = (print_domain(&d), print_problem(&p));
        let changed = self.base_text().ok() != Some((dt.clone(), pt.clone()));
        if changed {
            write_atomic(&self.path("base/domain.tsal"), dt.as_bytes())?;
            write_atomic(&self.path("base/problem.tsal"), pt.as_bytes())?;
        }
        Ok(changed)
    }

    pub fn base_text(&self) -> Result<(String, String)> {
        if !self.has_base() {
            return Err(SessionError::NoBase);
        }
        let read = |rel: &str| {
            let p = self.path(rel);
            std::fs::read_to_string(&p).map_err(io_err(&p))
        };
        Ok((read("base/domain.tsal")?, read("base/problem.tsal")?))
    }

    pub fn base(&self) -> Result<(DomainModel, ProblemModel)> {
        let (dt, pt) = self.base_text()?;
        let d = parse_domain(&dt).map_err(|e| SessionError::InvalidBase(e.to_string()))?;
        let p = parse_problem(&pt, &d).map_err(|e| SessionError::InvalidBase(e.to_string()))?;
        Ok((d, p))
    }

    pub fn batch(&self) -> Result<BatchFile> {
        Ok(read_json(&self.path("batch.json"))?.unwrap_or_default())
    }

    /// Writes the batch and its novelty files, removing files and reports of
    /// records no longer present.
    pub fn save_batch(&self, batch: &BatchFile) -> Result<()> {
        let keep: HashSet<&str> = batch.records.iter().map(|r| r.id.as_str()).collect();
        for r in &batch.records {
            let text = format!("{}\n{}", r.domain, r.problem);
            let path = self.novelty_path(&r.id);
            if std::fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
                write_atomic(&path, text.as_bytes())?;
            }
        }
        let stored: Vec<NoveltyRecord> = batch
            .records
            .iter()
            .map(|r| NoveltyRecord {
                report: None,
                ..r.clone()
            })
            .collect();
        write_atomic(
            &self.path("batch.json"),
            &to_json(&BatchFile {
                records: stored,
                ..batch.clone()
            }),
        )?;
        for (dir, ext) in [("novelties", "tsal"), ("reports", "json")] {
            let dir = self.path(dir);
            let Ok(entries) = std::fs::read_dir(&dir) else {
                continue;
            };
            for e in entries.flatten() {
                let path = e.path();
                let stale = path.extension().is_some_and(|x| x == ext)
                    && path
                        .file_stem()
                        .and_then(|s| s.to_str())
                        .is_some_and(|s| !keep.contains(s));
                if stale {
                    std::fs::remove_file(&path).map_err(io_err(&path))?;
                }
            }
        }
        Ok(())
    }

    pub fn record(&self, id: &str) -> Result<NoveltyRecord> {
        let mut r = self
            .batch()?
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownId(id.to_string()))?;
        r.report = self.report(id)?;
        Ok(r)
    }

    pub fn report(&self, id: &str) -> Result<Option<ViabilityReport>> {
        read_json(&self.report_path(id))
    }

    pub fn save_report(&self, id: &str, report: &ViabilityReport) -> Result<()> {
        write_atomic(&self.report_path(id), &to_json(report))
    }

    pub fn annotations(&self) -> Result<Annotations> {
        Ok(read_json(&self.path("annotations.json"))?.unwrap_or_default())
    }

    /// Records a decision. With `expected`, fails unless it matches the
    /// current version. Returns the new version.
    pub fn annotate(&self, id: &str, annotation: Annotation, expected: Option<u64>) -> Result<u64> {
        if self.batch()?.get(id).is_none() {
            return Err(SessionError::UnknownId(id.to_string()));
        }
        let mut a = self.annotations()?;
        if let Some(expected) = expected {
            if expected != a.version {
                return Err(SessionError::Conflict {
                    expected,
                    current: a.version,
                });
            }
        }
        a.version += 1;
        a.entries.insert(id.to_string(), annotation);
        write_atomic(&self.path("annotations.json"), &to_json(&a))?;
        Ok(a.version)
    }

    /// Annotation status if present, otherwise the record's own status.
    pub fn effective_status(record: &NoveltyRecord, annotations: &Annotations) -> Status {
        annotations
            .entries
            .get(&record.id)
            .map_or(record.status, |a| a.status)
    }

    /// Appends a timestamped event to the manifest, which is excluded from
    /// reproducibility checks.
    pub fn log_event(&self, command: &str) -> Result<()> {
        let path = self.path("manifest.json");
        let mut m: Manifest = read_json(&path)?.unwrap_or_default();
        m.events.push(ManifestEvent {
            command: command.to_string(),
            unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        });
        write_atomic(&path, &to_json(&m))
    }
}

/// Merges a fresh batch into an existing one. Records a human has touched
/// (accepted, rejected, or revised) survive with their ancestors; the rest
/// are replaced by the fresh records. Returns the batch and how many old
/// records it kept.
pub fn merge_regenerated(old: &BatchFile, annotations: &Annotations, fresh: BatchFile) -> (BatchFile, usize) {
    let touched: Vec<&NoveltyRecord> = old
        .records
        .iter()
        .filter(|r| {
            r.status == Status::Revised
                || matches!(
                    Session::effective_status(r, annotations),
                    Status::Accepted | Status::Rejected | Status::Revised
                )
        })
        .collect();
    let mut keep: HashSet<String> = HashSet::new();
    for r in touched {
        keep.extend(old.lineage(&r.id));
    }
    let mut records: Vec<NoveltyRecord> = old
        .records
        .iter()
        .filter(|r| keep.contains(&r.id))
        .cloned()
        .collect();
    let kept = records.len();
    records.extend(fresh.records.into_iter().filter(|r| !keep.contains(&r.id)));
    let merged = BatchFile {
        generator: fresh.generator,
        warnings: fresh.warnings,
        records,
    };
    (merged, kept)
}

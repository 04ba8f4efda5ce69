//! Operations shared by the command line and the review service: loading
//! configuration, generating, filtering, revising, and reporting.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::filter::{evaluate_many, FilterConfig, FilterError, Level, ViabilityReport};
use crate::session::{merge_regenerated, BatchFile, Session, SessionError};
use crate::transform::{generate_batch, revise, GeneratorConfig, NoveltyRecord, Status, TransformError};
use crate::tsal::{parse_problem, DomainModel, ProblemModel};

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub generator: GeneratorConfig,
    pub filter: FilterConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("CONFIG_ERROR: {0}")]
    Config(String),
    #[error("{0}")]
    Session(#[from] SessionError),
    #[error("{0}")]
    Transform(#[from] TransformError),
    #[error("{0}")]
    Filter(#[from] FilterError),
}

impl PipelineError {
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "CONFIG_ERROR",
            PipelineError::Session(e) => e.code(),
            PipelineError::Transform(e) => e.code(),
            PipelineError::Filter(e) => e.code(),
        }
    }

    /// Process exit status: 1 for findings, 2 for I/O, 3 for configuration.
    pub fn exit_code(&self) -> u8 {
        match self.code() {
            "IO_ERROR" => 2,
            "CONFIG_ERROR" | "NO_BASE" | "BASE_MISMATCH" => 3,
            _ => 1,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| SessionError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.generator
            .validate()
            .map_err(|e| PipelineError::Config(strip_code(&e.to_string())))?;
        self.filter
            .validate()
            .map_err(|e| PipelineError::Config(strip_code(&e.to_string())))?;
        Ok(())
    }
}

/// Overlays a partial JSON object on `base`. Nested objects merge key by
/// key; anything else replaces. Unknown keys are rejected by `T`.
pub fn with_overrides<T: Serialize + DeserializeOwned>(base: &T, patch: &Value) -> Result<T, PipelineError> {
    fn merge(dst: &mut Value, src: &Value) {
        match (dst, src) {
            (Value::Object(d), Value::Object(s)) => {
                for (k, v) in s {
                    merge(d.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
            (dst, src) => *dst = src.clone(),
        }
    }
    let mut value = serde_json::to_value(base).expect("serializable");
    if !patch.is_null() {
        merge(&mut value, patch);
    }
    serde_json::from_value(value).map_err(|e| PipelineError::Config(e.to_string()))
}

fn strip_code(message: &str) -> String {
    message
        .strip_prefix("CONFIG_ERROR: ")
        .unwrap_or(message)
        .to_string()
}

/// Installs base models in a session. Replacing the base of a session that
/// already holds novelties is refused, since their diffs would go stale.
pub fn install_base(session: &Session, domain: &str, problem: &str) -> Result<(), PipelineError> {
    if session.has_base() && !session.batch()?.records.is_empty() {
        let d = crate::tsal::parse_domain(domain).map_err(|e| SessionError::InvalidBase(e.to_string()))?;
        let p = parse_problem(problem, &d).map_err(|e| SessionError::InvalidBase(e.to_string()))?;
        let current = session.base_text()?;
        if (crate::tsal::print_domain(&d), crate::tsal::print_problem(&p)) != current {
            return Err(PipelineError::Config(
                "BASE_MISMATCH: session already holds novelties of a different base; use a new session".into(),
            ));
        }
        return Ok(());
    }
    session.set_base(domain, problem)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub generated: usize,
    pub kept: usize,
    pub total: usize,
    pub warnings: Vec<String>,
}

/// Generates a batch and merges it into the session.
pub fn generate(session: &Session, cfg: &GeneratorConfig, workers: Option<usize>) -> Result<GenerateSummary, PipelineError> {
    cfg.validate()
        .map_err(|e| PipelineError::Config(strip_code(&e.to_string())))?;
    let (d, p) = session.base()?;
    let batch = match workers {
        Some(n) => crate::transform::generate_batch_with_threads(&d, &p, cfg, n)?,
        None => generate_batch(&d, &p, cfg)?,
    };
    let old = session.batch()?;
    let annotations = session.annotations()?;
    let fresh = BatchFile {
        generator: Some(cfg.clone()),
        warnings: batch.warnings,
        records: batch.records,
    };
    let generated = fresh.records.len();
    let (merged, kept) = merge_regenerated(&old, &annotations, fresh);
    let summary = GenerateSummary {
        generated,
        kept,
        total: merged.records.len(),
        warnings: merged.warnings.clone(),
    };
    session.save_batch(&merged)?;
    Ok(summary)
}

/// Which records a filter run covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    All,
    Ids(Vec<String>),
}

/// Resolves a selection against the session, failing on unknown ids.
pub fn select(session: &Session, selection: &Selection) -> Result<Vec<NoveltyRecord>, PipelineError> {
    let batch = session.batch()?;
    match selection {
        Selection::All => Ok(batch.records),
        Selection::Ids(ids) => ids
            .iter()
            .map(|id| {
                batch
                    .get(id)
                    .cloned()
                    .ok_or_else(|| SessionError::UnknownId(id.clone()).into())
            })
            .collect(),
    }
}

/// Outcome of filtering one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ViabilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Evaluates the selected records without writing anything. Records whose
/// models fail to simulate get an error entry and no report.
pub fn evaluate_selection(
    session: &Session,
    selection: &Selection,
    cfg: &FilterConfig,
    workers: Option<usize>,
) -> Result<Vec<FilterOutcome>, PipelineError> {
    cfg.validate()
        .map_err(|e| PipelineError::Config(strip_code(&e.to_string())))?;
    let records = select(session, selection)?;
    let (d, p) = session.base()?;
    let mut models = Vec::with_capacity(records.len());
    for r in &records {
        models.push(novel_models(&d, &p, r)?);
    }
    let run = || evaluate_many((&d, &p), &models, cfg);
    let results = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| PipelineError::Config(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    Ok(records
        .iter()
        .zip(results)
        .map(|(r, result)| match result {
            Ok(report) => FilterOutcome {
                id: r.id.clone(),
                report: Some(report),
                error: None,
            },
            Err(e) => FilterOutcome {
                id: r.id.clone(),
                report: None,
                error: Some(e.to_string()),
            },
        })
        .collect())
}

/// Writes the reports of successful outcomes. Outcomes for records that
/// have since left the batch are skipped.
pub fn persist_reports(session: &Session, outcomes: &[FilterOutcome]) -> Result<(), PipelineError> {
    let batch = session.batch()?;
    for o in outcomes {
        if let (Some(report), Some(_)) = (&o.report, batch.get(&o.id)) {
            session.save_report(&o.id, report)?;
        }
    }
    Ok(())
}

/// Evaluates the selected records and persists their reports.
pub fn filter(
    session: &Session,
    selection: &Selection,
    cfg: &FilterConfig,
    workers: Option<usize>,
) -> Result<Vec<FilterOutcome>, PipelineError> {
    let outcomes = evaluate_selection(session, selection, cfg, workers)?;
    persist_reports(session, &outcomes)?;
    Ok(outcomes)
}

/// Parses a record's stored texts, which are canonical and validated.
fn novel_models(d: &DomainModel, p: &ProblemModel, r: &NoveltyRecord) -> Result<(DomainModel, ProblemModel), PipelineError> {
    match crate::tsal::parse_domain(&r.domain).and_then(|nd| parse_problem(&r.problem, &nd).map(|np| (nd, np))) {
        Ok(m) => Ok(m),
        Err(_) => Ok(r.replay(d, p)?),
    }
}

/// Creates a revised copy of `id` and appends it to the batch.
pub fn revise_record(session: &Session, id: &str, overrides: &[(String, String)]) -> Result<NoveltyRecord, PipelineError> {
    let (d, p) = session.base()?;
    let mut batch = session.batch()?;
    let original = batch
        .get(id)
        .cloned()
        .ok_or_else(|| SessionError::UnknownId(id.to_string()))?;
    let revised = revise(&d, &p, &original, overrides)?;
    if batch.get(&revised.id).is_none() {
        batch.records.push(revised.clone());
        session.save_batch(&batch)?;
    }
    Ok(revised)
}

/// Parses `key=value` pairs given to `--set`.
pub fn parse_overrides(items: &[String]) -> Result<Vec<(String, String)>, PipelineError> {
    items
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| PipelineError::Config(format!("expected key=value, got `{s}`")))
        })
        .collect()
}

/// One line of the session report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub kind: String,
    pub target: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub delta_percent: Option<f64>,
    pub relevant: Option<bool>,
    pub noticeable: Option<bool>,
    pub controllable: Option<bool>,
    pub level: Option<Level>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub novelties: usize,
    pub filtered: usize,
    pub levels: BTreeMap<Level, usize>,
    pub rows: Vec<ReportRow>,
}

/// Summarizes the session. Filtered rows come first by descending `|Δ|`,
/// then unfiltered rows; ties keep batch order.
pub fn report(session: &Session) -> Result<SessionReport, PipelineError> {
    let batch = session.batch()?;
    let annotations = session.annotations()?;
    let mut rows = Vec::with_capacity(batch.records.len());
    for r in &batch.records {
        let rep = session.report(&r.id)?;
        rows.push(ReportRow {
            id: r.id.clone(),
            kind: r.kind().tag().to_string(),
            target: r.target().to_string(),
            status: Session::effective_status(r, &annotations),
            parent: r.parent.clone(),
            delta_percent: rep.as_ref().map(|x| x.delta_percent),
            relevant: rep.as_ref().map(|x| x.relevant),
            noticeable: rep.as_ref().map(|x| x.noticeable),
            controllable: rep.as_ref().map(|x| x.controllable),
            level: rep.as_ref().map(|x| x.level),
        });
    }
    rows.sort_by(|a, b| match (a.delta_percent, b.delta_percent) {
        (Some(x), Some(y)) => y.abs().total_cmp(&x.abs()),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let mut levels: BTreeMap<Level, usize> = Level::ALL.into_iter().map(|l| (l, 0)).collect();
    for l in rows.iter().filter_map(|r| r.level) {
        *levels.entry(l).or_default() += 1;
    }
    Ok(SessionReport {
        novelties: rows.len(),
        filtered: rows.iter().filter(|r| r.level.is_some()).count(),
        levels,
        rows,
    })
}

fn flag(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "y",
        Some(false) => "n",
        None => "-",
    }
}

fn fmt_delta(d: Option<f64>) -> String {
    d.map_or_else(|| "-".to_string(), |d| format!("{d:+.2}"))
}

impl SessionReport {
    pub fn to_table(&self) -> String {
        let mut out = format!("{} novelties, {} filtered\n", self.novelties, self.filtered);
        if self.rows.is_empty() {
            return out;
        }
        let levels: Vec<String> = self.levels.iter().map(|(l, n)| format!("{l}={n}")).collect();
        out.push_str(&format!("levels: {}\n", levels.join(" ")));
        let header = ["id", "kind", "target", "status", "delta%", "R/N/C", "level"];
        let body: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.id.clone(),
                    r.kind.clone(),
                    r.target.clone(),
                    r.status.to_string(),
                    fmt_delta(r.delta_percent),
                    format!("{}/{}/{}", flag(r.relevant), flag(r.noticeable), flag(r.controllable)),
                    r.level.map_or("-", Level::as_str).to_string(),
                ]
            })
            .collect();
        out.push_str(&render_columns(&header, &body));
        out
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "id",
            "kind",
            "target",
            "status",
            "parent",
            "delta_percent",
            "relevant",
            "noticeable",
            "controllable",
            "level",
        ])
        .expect("in-memory write");
        let opt = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.id.clone(),
                r.kind.clone(),
                r.target.clone(),
                r.status.to_string(),
                r.parent.clone().unwrap_or_default(),
                r.delta_percent.map(|d| d.to_string()).unwrap_or_default(),
                opt(r.relevant),
                opt(r.noticeable),
                opt(r.controllable),
                r.level.map(|l| l.to_string()).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Left-aligned columns separated by two spaces.
pub fn render_columns<const N: usize>(header: &[&str; N], rows: &[[String; N]]) -> String {
    let mut widths = header.map(str::len);
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i + 1 == N {
                s.push_str(cell);
            } else {
                s.push_str(&format!("{cell:<w$}  "));
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

/// Summary table printed after a filter run.
pub fn filter_table(outcomes: &[FilterOutcome]) -> String {
    let header = ["id", "delta%", "R/N/C", "level"];
    let rows: Vec<[String; 4]> = outcomes
        .iter()
        .map(|o| match (&o.report, &o.error) {
            (Some(r), _) => [
                o.id.clone(),
                format!("{:+.2}", r.delta_percent),
                format!(
                    "{}/{}/{}",
                    flag(Some(r.relevant)),
                    flag(Some(r.noticeable)),
                    flag(Some(r.controllable))
                ),
                r.level.to_string(),
            ],
            (None, e) => [
                o.id.clone(),
                "-".into(),
                "-".into(),
                format!("error: {}", e.as_deref().unwrap_or("unknown")),
            ],
        })
        .collect();
    render_columns(&header, &rows)
}

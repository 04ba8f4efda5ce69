use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use noveltyforge::bundled;
use noveltyforge::pipeline::{self, PipelineConfig, PipelineError, Selection};
use noveltyforge::service::{self, AppState, ServiceConfig};
use noveltyforge::session::{Session, SessionError};
use noveltyforge::tsal::{parse_domain, parse_problem, ParseError};

/// Generate, simulate, and triage novelties of TSAL environment models.
#[derive(Parser)]
#[command(name = "noveltyforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a domain (and optionally a problem) for errors.
    Validate(ValidateArgs),
    /// Generate a batch of novelties into a session.
    Generate(GenerateArgs),
    /// Score novelties and write viability reports.
    Filter(FilterArgs),
    /// Re-apply a novelty with changed parameters.
    Revise(ReviseArgs),
    /// Summarize a session.
    Report(ReportArgs),
    /// Serve the review API and UI for a session.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(required_unless_present = "bundled")]
    domain: Option<PathBuf>,
    problem: Option<PathBuf>,
    /// Validate a bundled pair instead of files.
    #[arg(long, conflicts_with_all = ["domain", "problem"])]
    bundled: Option<String>,
}

#[derive(Args)]
struct BaseArgs {
    /// Base domain file; stored in the session on first use.
    #[arg(long, requires = "problem", conflicts_with = "bundled")]
    domain: Option<PathBuf>,
    #[arg(long, requires = "domain")]
    problem: Option<PathBuf>,
    /// Use a bundled pair as the base (board-lite, delivery).
    #[arg(long)]
    bundled: Option<String>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    session: PathBuf,
    #[command(flatten)]
    base: BaseArgs,
    /// JSON file with `generator` and `filter` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    count: Option<usize>,
    /// Kind weights, as `kind=w,kind=w`; unlisted kinds weigh 0.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    session: PathBuf,
    /// Record ids to filter.
    #[arg(required_unless_present = "all", conflicts_with = "all")]
    ids: Vec<String>,
    #[arg(long)]
    all: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct ReviseArgs {
    #[arg(long)]
    session: PathBuf,
    id: String,
    /// Parameter override such as `constant=500`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    session: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    session: PathBuf,
    #[command(flatten)]
    base: BaseArgs,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Directory of built UI assets.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Filter jobs allowed to run at once.
    #[arg(long, default_value_t = 2)]
    filter_jobs: usize,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Self {
            code: e.exit_code(),
            message: e.to_string(),
        }
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Self {
        PipelineError::from(e).into()
    }
}

type CmdResult = Result<u8, Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("IO_ERROR: {}: {e}", path.display()),
    })
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        Some(p) => Ok(PipelineConfig::load(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn config_failure(message: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        message: format!("CONFIG_ERROR: {}", message.into()),
    }
}

fn base_text(args: &BaseArgs) -> Result<Option<(String, String)>, Failure> {
    if let Some(name) = &args.bundled {
        let (d, p) = bundled::by_name(name).ok_or_else(|| config_failure(format!("unknown bundled model `{name}`")))?;
        return Ok(Some((d.to_string(), p.to_string())));
    }
    match (&args.domain, &args.problem) {
        (Some(d), Some(p)) => Ok(Some((read_file(d)?, read_file(p)?))),
        _ => Ok(None),
    }
}

fn print_parse_error(label: &str, e: &ParseError) {
    match e {
        ParseError::Syntax(s) => println!("{label}: SYNTAX_ERROR at {s}"),
        ParseError::Semantic(vs) => {
            for v in vs {
                println!("{label}: {v}");
            }
        }
    }
}

fn cmd_validate(args: ValidateArgs) -> CmdResult {
    let (dt, pt, dl, pl) = match &args.bundled {
        Some(name) => {
            let (d, p) = bundled::by_name(name).ok_or_else(|| config_failure(format!("unknown bundled model `{name}`")))?;
            (d.to_string(), Some(p.to_string()), format!("{name} domain"), format!("{name} problem"))
        }
        None => {
            let dp = args.domain.as_deref().expect("required by clap");
            let pt = args.problem.as_deref().map(read_file).transpose()?;
            let pl = args.problem.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
            (read_file(dp)?, pt, dp.display().to_string(), pl)
        }
    };
    let d = match parse_domain(&dt) {
        Ok(d) => d,
        Err(e) => {
            print_parse_error(&dl, &e);
            return Ok(1);
        }
    };
    if let Some(pt) = pt {
        if let Err(e) = parse_problem(&pt, &d) {
            print_parse_error(&pl, &e);
            return Ok(1);
        }
    }
    println!("ok");
    Ok(0)
}

fn open_session(path: &Path, base: &BaseArgs) -> Result<Session, Failure> {
    let session = Session::open(path);
    if let Some((d, p)) = base_text(base)? {
        pipeline::install_base(&session, &d, &p)?;
    }
    Ok(session)
}

fn cmd_generate(args: GenerateArgs) -> CmdResult {
    let mut cfg = load_config(args.config.as_deref())?.generator;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(count) = args.count {
        cfg.batch_size = count;
    }
    if let Some(spec) = &args.weights {
        cfg.set_weights(spec).map_err(|e| config_failure(e.to_string().trim_start_matches("CONFIG_ERROR: ")))?;
    }
    let session = open_session(&args.session, &args.base)?;
    let summary = pipeline::generate(&session, &cfg, args.workers)?;
    session.log_event("generate")?;
    match args.format {
        Format::Json => print_json(&summary),
        _ => {
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} novelties generated, {} kept from earlier review, {} in session",
                summary.generated, summary.kept, summary.total
            );
        }
    }
    Ok(0)
}

fn cmd_filter(args: FilterArgs) -> CmdResult {
    let mut cfg = load_config(args.config.as_deref())?.filter;
    if let Some(n) = args.episodes {
        cfg.episodes = n;
    }
    if let Some(n) = args.max_steps {
        cfg.max_steps = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let session = Session::open(&args.session);
    let selection = if args.all {
        Selection::All
    } else {
        Selection::Ids(args.ids)
    };
    let outcomes = pipeline::filter(&session, &selection, &cfg, args.workers)?;
    session.log_event("filter")?;
    match args.format {
        Format::Json => print_json(&outcomes),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["id", "delta_percent", "relevant", "noticeable", "controllable", "level", "error"])
                .and_then(|_| {
                    for o in &outcomes {
                        let r = o.report.as_ref();
                        w.write_record([
                            o.id.clone(),
                            r.map(|r| r.delta_percent.to_string()).unwrap_or_default(),
                            r.map(|r| r.relevant.to_string()).unwrap_or_default(),
                            r.map(|r| r.noticeable.to_string()).unwrap_or_default(),
                            r.map(|r| r.controllable.to_string()).unwrap_or_default(),
                            r.map(|r| r.level.to_string()).unwrap_or_default(),
                            o.error.clone().unwrap_or_default(),
                        ])?;
                    }
                    w.flush().map_err(Into::into)
                })
                .map_err(|e| Failure {
                    code: 2,
                    message: format!("IO_ERROR: {e}"),
                })?;
        }
        Format::Table => print!("{}", pipeline::filter_table(&outcomes)),
    }
    Ok(if outcomes.iter().any(|o| o.error.is_some()) { 1 } else { 0 })
}

fn cmd_revise(args: ReviseArgs) -> CmdResult {
    let overrides = pipeline::parse_overrides(&args.set)?;
    let session = Session::open(&args.session);
    let r = pipeline::revise_record(&session, &args.id, &overrides)?;
    session.log_event("revise")?;
    match args.format {
        Format::Json => print_json(&r),
        _ => {
            println!("{} (revised from {})", r.id, args.id);
            for e in &r.diff.entries {
                println!("  {e}");
            }
        }
    }
    Ok(0)
}

fn cmd_report(args: ReportArgs) -> CmdResult {
    let report = pipeline::report(&Session::open(&args.session))?;
    match args.format {
        Format::Json => print_json(&report),
        Format::Csv => print!("{}", report.to_csv()),
        Format::Table => print!("{}", report.to_table()),
    }
    Ok(0)
}

fn cmd_serve(args: ServeArgs) -> CmdResult {
    let cfg = load_config(args.config.as_deref())?;
    let session = open_session(&args.session, &args.base)?;
    let state = AppState::new(
        session,
        ServiceConfig {
            static_dir: args.static_dir,
            filter_jobs: args.filter_jobs,
            workers: args.workers,
            filter: cfg.filter,
            generator: cfg.generator,
        },
    );
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure {
        code: 2,
        message: format!("IO_ERROR: {e}"),
    })?;
    runtime.block_on(service::serve(state, addr)).map_err(|e| Failure {
        code: 2,
        message: format!("IO_ERROR: cannot serve on {addr}: {e}"),
    })?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Revise(a) => cmd_revise(a),
        Command::Report(a) => cmd_report(a),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! `afscr` — batch analysis, ORGMod enumeration, resolution preview, plan
//! application and graph export for annotated goal models.
//!
//! Exit codes: 0 clean, 1 findings, 2 input error, 3 cap exceeded, 4 stale
//! plan.

mod output;

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use afscr_core::{
    analyze, apply_plan, export_dot, orgmod_labels, parse_kb, parse_model, run_sra,
    serialize_model, validate_model, GoalModel, KnowledgeBase, ResolutionContext, RoutineLabel,
    DEFAULT_CAP,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use output::Out;

#[derive(Parser)]
#[command(
    name = "afscr",
    version,
    about = "Reconcile satisfaction conditions over goal models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the ORGMod routine labels below the root.
    Orgmods(Common),
    /// Compute cumulative conditions and report conflicts.
    Analyze(Common),
    /// Print candidate refactoring plans; never modifies the model file.
    Resolve {
        #[command(flatten)]
        common: Common,
        /// Only this finding (default: every finding).
        #[arg(long)]
        finding: Option<String>,
    },
    /// Apply the plan with the given digest and write a revised model file.
    Apply {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        digest: String,
    },
    /// Emit a Graphviz description with IE/CE labels and conflict markers.
    ExportDot(Common),
    /// Run the HTTP analysis service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory holding one sub-directory per session.
        #[arg(long, default_value = "afscr-data")]
        data: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Root artefact (default: every root; orgmods needs a single root).
    #[arg(long)]
    root: Option<String>,
    /// Restrict analysis to one ORGMod, by 1-based label number.
    #[arg(long, requires = "root")]
    scope: Option<usize>,
    /// Maximum alternatives per artefact.
    #[arg(long, env = "AFSCR_CAP", default_value_t = DEFAULT_CAP, value_parser = parse_cap)]
    cap: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// Newline-delimited JSON records.
    Structured,
    Dot,
}

fn parse_cap(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("cap must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Write(#[from] io::Error),
    #[error("{path}:{err}")]
    Input {
        path: PathBuf,
        err: afscr_core::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Engine(#[from] afscr_core::Error),
    #[error("no plan with digest {0} matches the current model; it was computed against another revision")]
    StaleDigest(String),
    #[error("refusing to overwrite {0}")]
    Exists(PathBuf),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use afscr_core::Error as E;
        match self {
            CliError::Engine(E::CapExceeded { .. })
            | CliError::Input {
                err: E::CapExceeded { .. },
                ..
            } => 3,
            CliError::Engine(E::StaleRevision { .. }) | CliError::StaleDigest(_) => 4,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Findings present or not; mapped to exit code 1 or 0.
struct Outcome {
    findings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome { findings }) => ExitCode::from(u8::from(findings)),
        Err(e) => {
            eprintln!("afscr: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Orgmods(c) => orgmods(&c),
        Command::Analyze(c) => analyze_cmd(&c),
        Command::Resolve { common, finding } => resolve_cmd(&common, finding.as_deref()),
        Command::Apply { common, digest } => apply_cmd(&common, &digest),
        Command::ExportDot(c) => export_cmd(&c),
        Command::Serve { addr, data } => {
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!(
                "afscr: serving on http://{addr} (data in {})",
                data.display()
            );
            rt.block_on(afscr_service::serve(addr, data))?;
            Ok(Outcome { findings: false })
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

struct Loaded {
    model: GoalModel,
    kb: KnowledgeBase,
}

fn load(c: &Common) -> Result<Loaded> {
    let model = parse_model(&read(&c.model)?).map_err(|err| CliError::Input {
        path: c.model.clone(),
        err,
    })?;
    let diags = validate_model(&model);
    if !diags.is_empty() {
        return Err(CliError::Input {
            path: c.model.clone(),
            err: afscr_core::Error::Invalid(diags),
        });
    }
    let kb = match &c.kb {
        Some(p) => parse_kb(&read(p)?).map_err(|err| CliError::Input {
            path: p.clone(),
            err,
        })?,
        None => KnowledgeBase::default(),
    };
    if let Some(root) = &c.root {
        if model.artefact(root).is_none() {
            return Err(CliError::Usage(format!(
                "root `{root}` is not in the model"
            )));
        }
    }
    Ok(Loaded { model, kb })
}

fn single_root(c: &Common, model: &GoalModel) -> Result<String> {
    if let Some(r) = &c.root {
        return Ok(r.clone());
    }
    match model.roots().as_slice() {
        [only] => Ok(only.to_string()),
        roots => Err(CliError::Usage(format!(
            "the model has {} roots ({}); pass --root",
            roots.len(),
            roots.join(", ")
        ))),
    }
}

fn scope_label(c: &Common, model: &GoalModel, root: &str) -> Result<Option<RoutineLabel>> {
    let Some(n) = c.scope else { return Ok(None) };
    let labels = orgmod_labels(model, root, c.cap)?;
    labels
        .into_iter()
        .nth(n.wrapping_sub(1))
        .map(Some)
        .ok_or_else(|| CliError::Usage(format!("--scope {n}: {root} has fewer ORGMods")))
}

fn analysis(
    c: &Common,
    l: &Loaded,
) -> Result<(afscr_core::AnnotatedModel, afscr_core::ConflictReport)> {
    match &c.root {
        Some(root) => {
            let scope = scope_label(c, &l.model, root)?;
            Ok(run_sra(&l.model, root, &l.kb, scope.as_ref(), c.cap)?)
        }
        None => Ok(analyze(&l.model, &l.kb, c.cap)?),
    }
}

fn orgmods(c: &Common) -> Result<Outcome> {
    let l = load(c)?;
    let root = single_root(c, &l.model)?;
    let labels = orgmod_labels(&l.model, &root, c.cap)?;
    let mut out = Out::open(c.out.as_deref())?;
    output::labels(&mut out, c.format, &root, &labels)?;
    out.finish()?;
    Ok(Outcome { findings: false })
}

fn analyze_cmd(c: &Common) -> Result<Outcome> {
    let l = load(c)?;
    let (ann, report) = analysis(c, &l)?;
    let mut out = Out::open(c.out.as_deref())?;
    match c.format {
        Format::Dot => out.write_str(&export_dot(&l.model, Some(&ann), Some(&report)))?,
        f => output::report(&mut out, f, &l.model, &ann, &report)?,
    }
    out.finish()?;
    Ok(Outcome {
        findings: !report.is_clean(),
    })
}

fn resolve_cmd(c: &Common, only: Option<&str>) -> Result<Outcome> {
    let l = load(c)?;
    let ctx = ResolutionContext::analyze(&l.model, &l.kb, c.cap)?;
    let mut out = Out::open(c.out.as_deref())?;
    if ctx.report.is_clean() {
        output::nothing_to_resolve(&mut out, c.format)?;
        out.finish()?;
        return Ok(Outcome { findings: false });
    }
    let selected = match only {
        Some(id) => vec![(ctx.finding(id)?.clone(), ctx.plans_for(id)?)],
        None => ctx.all_plans()?,
    };
    output::plans(&mut out, c.format, &selected)?;
    out.finish()?;
    Ok(Outcome { findings: true })
}

/// `<dir>/<stem>.<first 12 hex of revision>.goal` next to the input.
fn revised_path(original: &Path, revision: &str) -> PathBuf {
    let stem = original
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("model");
    original.with_file_name(format!("{stem}.{}.goal", &revision[..12]))
}

fn apply_cmd(c: &Common, digest: &str) -> Result<Outcome> {
    let l = load(c)?;
    let ctx = ResolutionContext::analyze(&l.model, &l.kb, c.cap)?;
    let plan = ctx
        .all_plans()?
        .into_iter()
        .flat_map(|(_, plans)| plans)
        .find(|p| p.digest == digest)
        .ok_or_else(|| CliError::StaleDigest(digest.to_string()))?;
    let revised = apply_plan(&l.model, &plan)?;
    let revision = revised.revision();
    let path = revised_path(&c.model, &revision);
    let mut file = OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(&path)
        .map_err(|e| match e.kind() {
            io::ErrorKind::AlreadyExists => CliError::Exists(path.clone()),
            _ => CliError::Write(e),
        })?;
    file.write_all(serialize_model(&revised).as_bytes())?;

    let (_, report) = analyze(&revised, &l.kb, c.cap)?;
    let mut out = Out::open(c.out.as_deref())?;
    output::applied(&mut out, c.format, &plan, &path, &revision, &report)?;
    out.finish()?;
    Ok(Outcome { findings: false })
}

fn export_cmd(c: &Common) -> Result<Outcome> {
    let l = load(c)?;
    let dot = match analysis(c, &l) {
        Ok((ann, report)) => export_dot(&l.model, Some(&ann), Some(&report)),
        Err(CliError::Engine(afscr_core::Error::CapExceeded { .. })) => {
            export_dot(&l.model, None, None)
        }
        Err(e) => return Err(e),
    };
    let mut out = Out::open(c.out.as_deref())?;
    out.write_str(&dot)?;
    out.finish()?;
    Ok(Outcome { findings: false })
}

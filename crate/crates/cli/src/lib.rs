//! The `pipe` command line: one subcommand per pipeline stage, each a thin
//! adapter over the core library. Exit codes: 0 success, 1 domain error,
//! 2 usage error.

pub mod server;

use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use pipe_core::ebg::{Limits, DEFAULT_DEPTH, DEFAULT_SOLUTIONS};
use pipe_core::operationalizer::{generate_model_with, GenerateOptions};
use pipe_core::{
    assess_operationality, classify, cut, evaluate_coverage, explain, explain_all, generalize,
    ingest_sitemap, parse, serialize, specialize, specializes_to, Activity, Assignment, Atom,
    ContentBinding, ExplanationTree, FactSet, FrontierSpec, OperationalizedExplanation, Program,
    SessionStore, SiteNode, Theory,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "pipe", version, about = "Personalize information spaces by partial evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Dsl,
    Json,
    Pretty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JsonFormat {
    Json,
    Pretty,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a program (surface syntax or JSON) and echo it canonically.
    Parse {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "dsl")]
        format: Format,
    },
    /// Turn a JSON site map into a program.
    Ingest {
        sitemap: PathBuf,
        #[arg(long, value_enum, default_value = "dsl")]
        format: Format,
    },
    /// Specialize a program against partial input.
    Specialize {
        file: PathBuf,
        /// Input entries: `Party=Dem`, `Dem`, `!Rep`, `State!=CA`; commas allowed.
        #[arg(long = "set", value_name = "ENTRY")]
        set: Vec<String>,
        #[arg(long, value_enum, default_value = "dsl")]
        format: Format,
    },
    /// Classify each activity against a program.
    Classify {
        file: PathBuf,
        #[arg(long)]
        activities: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: JsonFormat,
    },
    /// Coverage report of a program over a set of activities.
    Coverage {
        file: PathBuf,
        #[arg(long)]
        activities: PathBuf,
        /// Fail when more than this fraction of activities is complete-only.
        #[arg(long)]
        max_complete_ratio: Option<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: JsonFormat,
    },
    /// Prove a goal from a theory and a set of facts.
    Explain {
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        facts: PathBuf,
        /// Ground goal in theory syntax, e.g. `politicalinfo(x47)`.
        #[arg(long)]
        goal: String,
        /// Print every proof instead of the first.
        #[arg(long)]
        all: bool,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_SOLUTIONS)]
        max_solutions: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: JsonFormat,
    },
    /// Replace the scenario's specifics in a proof by variables.
    Generalize {
        tree: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: JsonFormat,
    },
    /// Split a generalized proof into a fixed part and open subgoals.
    Cut {
        tree: PathBuf,
        /// `root`, `leaves`, `preds:p1,p2` or `depth:k`.
        #[arg(long)]
        frontier: FrontierSpec,
        /// Explanation id; defaults to the goal predicate.
        #[arg(long)]
        id: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: JsonFormat,
    },
    /// Compile operationalized explanations into a program.
    Generate {
        /// Files holding one explanation or an array of them.
        #[arg(required = true)]
        ops: Vec<PathBuf>,
        #[arg(long)]
        theory: PathBuf,
        #[arg(long)]
        bindings: PathBuf,
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, value_enum, default_value = "dsl")]
        format: Format,
    },
    /// Rank frontier choices by how well their models serve probe activities.
    Assess {
        /// A ground explanation tree.
        #[arg(long)]
        tree: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        frontiers: Vec<FrontierSpec>,
        #[arg(long)]
        probes: PathBuf,
        #[arg(long)]
        bindings: PathBuf,
        #[arg(long)]
        strict: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: JsonFormat,
    },
    /// Find input that specializes one program into another.
    Order {
        #[arg(long)]
        general: PathBuf,
        #[arg(long)]
        specific: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: JsonFormat,
    },
    /// Serve models and browsing sessions over HTTP.
    Serve {
        #[arg(long, env = "PIPE_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Load every `*.ispace` file here as a model named after its stem.
        #[arg(long)]
        models_dir: Option<PathBuf>,
        /// Restore from this JSON file if present; write it on shutdown.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{context}: {message}")]
    Domain { context: String, message: String },
    #[error("{0}")]
    Check(String),
}

type Result<T> = std::result::Result<T, CliError>;

fn domain(context: impl std::fmt::Display) -> impl FnOnce(String) -> CliError {
    let context = context.to_string();
    move |message| CliError::Domain { context, message }
}

fn read(path: &Path) -> Result<String> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(io)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(io)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| domain(path.display())(e.to_string()))
}

/// Programs are accepted in either surface syntax or JSON.
fn load_program(path: &Path) -> Result<Program> {
    let text = read(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        Program::from_json(&text)
    } else {
        parse(&text)
    };
    parsed.map_err(|e| domain(path.display())(e.to_string()))
}

fn load_theory(path: &Path) -> Result<Theory> {
    Theory::parse(&read(path)?).map_err(|e| domain(path.display())(e.to_string()))
}

fn load_activities(path: &Path) -> Result<Vec<Activity>> {
    let acts: Vec<Activity> = read_json(path)?;
    for a in &acts {
        a.validate().map_err(domain(format!("{}: activity {}", path.display(), a.id)))?;
    }
    Ok(acts)
}

fn load_ops(path: &Path) -> Result<Vec<OperationalizedExplanation>> {
    let value: serde_json::Value = read_json(path)?;
    let ops = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|op| vec![op])
    };
    ops.map_err(|e| domain(path.display())(e.to_string()))
}

fn program_out(p: &Program, format: Format) -> String {
    match format {
        Format::Dsl => serialize(p),
        Format::Json => serde_json::to_string(p).expect("program serializes") + "\n",
        Format::Pretty => p.to_json() + "\n",
    }
}

fn json_out<T: Serialize>(v: &T, format: JsonFormat) -> String {
    let s = match format {
        JsonFormat::Json => serde_json::to_string(v),
        JsonFormat::Pretty => serde_json::to_string_pretty(v),
    };
    s.expect("output serializes") + "\n"
}

/// Runs one invocation. Output and diagnostics go to the given writers.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, err) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(command: Command, err: &mut dyn Write) -> Result<String> {
    match command {
        Command::Parse { file, format } => Ok(program_out(&load_program(&file)?, format)),
        Command::Ingest { sitemap, format } => {
            let map: SiteNode = read_json(&sitemap)?;
            let p = ingest_sitemap(&map).map_err(|e| domain(sitemap.display())(e.to_string()))?;
            Ok(program_out(&p, format))
        }
        Command::Specialize { file, set, format } => {
            let p = load_program(&file)?;
            let a = Assignment::parse_entries(set.iter().map(String::as_str)).map_err(domain("--set"))?;
            let r = specialize(&p, &a).map_err(|e| domain(file.display())(e.to_string()))?;
            Ok(program_out(&r.residual, format))
        }
        Command::Classify { file, activities, format } => {
            let p = load_program(&file)?;
            let mut verdicts = Vec::new();
            for act in load_activities(&activities)? {
                let v = classify(&p, &act).map_err(|e| domain(format!("activity {}", act.id))(e.to_string()))?;
                verdicts.push(v);
            }
            Ok(json_out(&verdicts, format))
        }
        Command::Coverage { file, activities, max_complete_ratio, format } => {
            let p = load_program(&file)?;
            let report = evaluate_coverage(&p, &load_activities(&activities)?);
            let text = json_out(&report, format);
            if let Some(max) = max_complete_ratio {
                if report.complete_only_ratio() > max {
                    let _ = err.write_all(text.as_bytes());
                    return Err(CliError::Check(format!(
                        "complete-only ratio {:.3} exceeds {max}",
                        report.complete_only_ratio()
                    )));
                }
            }
            Ok(text)
        }
        Command::Explain { theory, facts, goal, all, depth, max_solutions, format } => {
            let t = load_theory(&theory)?;
            let f = FactSet::parse(&read(&facts)?).map_err(|e| domain(facts.display())(e.to_string()))?;
            let g = Atom::parse_ground(&goal).map_err(|e| domain("--goal")(e.to_string()))?;
            let limits = Limits { depth, solutions: max_solutions };
            let prove = domain(format!("explaining {g}"));
            if all {
                let trees = explain_all(&t, &f, &g, limits).map_err(|e| prove(e.to_string()))?;
                return Ok(json_out(&trees, format));
            }
            match explain(&t, &f, &g, limits).map_err(|e| prove(e.to_string()))? {
                Some(tree) => Ok(json_out(&tree, format)),
                None => Err(CliError::Check(format!("no proof of {g}"))),
            }
        }
        Command::Generalize { tree, theory, format } => {
            let t = load_theory(&theory)?;
            let tr: ExplanationTree = read_json(&tree)?;
            let g = generalize(&tr, &t).map_err(|e| domain(tree.display())(e.to_string()))?;
            Ok(json_out(&g, format))
        }
        Command::Cut { tree, frontier, id, format } => {
            let tr: ExplanationTree = read_json(&tree)?;
            let mut op = cut(&tr, &frontier).map_err(|e| domain(tree.display())(e.to_string()))?;
            if let Some(id) = id {
                op = op.with_id(id);
            }
            Ok(json_out(&op, format))
        }
        Command::Generate { ops, theory, bindings, strict, depth, format } => {
            let t = load_theory(&theory)?;
            let b: ContentBinding = read_json(&bindings)?;
            let mut all = Vec::new();
            for path in &ops {
                all.extend(load_ops(path)?);
            }
            let opts = GenerateOptions { strict, depth };
            let m = generate_model_with(&t, &all, &b, opts).map_err(|e| domain("generate")(e.to_string()))?;
            Ok(program_out(&m.program, format))
        }
        Command::Assess { tree, theory, frontiers, probes, bindings, strict, format } => {
            let t = load_theory(&theory)?;
            let tr: ExplanationTree = read_json(&tree)?;
            let acts = load_activities(&probes)?;
            let b: ContentBinding = read_json(&bindings)?;
            let opts = GenerateOptions { strict, ..GenerateOptions::default() };
            let rows = assess_operationality(&t, &tr, &frontiers, &acts, &b, opts)
                .map_err(|e| domain("assess")(e.to_string()))?;
            Ok(json_out(&rows, format))
        }
        Command::Order { general, specific, budget, format } => {
            let g = load_program(&general)?;
            let s = load_program(&specific)?;
            let witness = specializes_to(&g, &s, budget).map_err(|e| domain("order")(e.to_string()))?;
            Ok(json_out(&serde_json::json!({ "witness": witness }), format))
        }
        Command::Serve { port, host, models_dir, snapshot } => {
            serve(SocketAddr::new(host, port), models_dir, snapshot, err)?;
            Ok(String::new())
        }
    }
}

fn build_store(models_dir: Option<&Path>, snapshot: Option<&Path>) -> Result<SessionStore> {
    let store = match snapshot {
        Some(path) if path.exists() => {
            SessionStore::load(path).map_err(|e| domain(path.display())(e.to_string()))?
        }
        _ => SessionStore::new(),
    };
    let Some(dir) = models_dir else { return Ok(store) };
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ispace"))
        .collect();
    files.sort();
    for path in files {
        let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        if store.model(&id).is_ok() {
            continue;
        }
        let p = load_program(&path)?;
        store.add_model(id, p).map_err(|e| domain(path.display())(e.to_string()))?;
    }
    Ok(store)
}

fn serve(addr: SocketAddr, models_dir: Option<PathBuf>, snapshot: Option<PathBuf>, err: &mut dyn Write) -> Result<()> {
    let store = Arc::new(build_store(models_dir.as_deref(), snapshot.as_deref())?);
    let io = |source| CliError::Io { path: PathBuf::from(addr.to_string()), source };
    let rt = tokio::runtime::Runtime::new().map_err(io)?;
    let app = server::router(store.clone());
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        let _ = writeln!(err, "listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
    .map_err(io)?;
    if let Some(path) = snapshot {
        store.save(&path).map_err(|e| domain(path.display())(e.to_string()))?;
    }
    Ok(())
}

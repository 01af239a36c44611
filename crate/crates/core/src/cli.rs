//! Command-line entry points: check, explore, bench and serve.

use std::fmt::Write as _;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::checker::{self, CheckError, CheckResult};
use crate::egs::{self, CompileOptions, CompiledModel, EgsError, PropertyError};
use crate::explorer::{self, ExploreError, Init, Mode, Op, Session};
use crate::lks::{Lasso, TypedLks};
use crate::models::{self, HotelConfig};
use crate::seltl::BoundFormula;
use crate::service::{self, ServiceConfig, SessionManager};

#[derive(Debug, Parser)]
#[command(
    name = "selx",
    version,
    about = "Explore counter-examples and witnesses of state/event LTL properties"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a property; exit 0 if it holds within the bound, 1 on a
    /// counter-example, 2 on error.
    Check(Target),
    /// Replay a script of exploration operations.
    Explore {
        #[command(flatten)]
        target: Target,
        /// Operations separated by newlines or `;`: fwd, back, alt-state,
        /// alt-event, type <name>, enabled. `#` starts a comment.
        #[arg(long)]
        script: PathBuf,
    },
    /// Time the enabled-type dry run at every position of the first
    /// counter-example.
    Bench {
        #[command(flatten)]
        target: Target,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Leave timing columns empty, for reproducible output.
        #[arg(long)]
        omit_times: bool,
        /// Worker threads for the dry run.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Cap on concurrent checker queries.
        #[arg(long)]
        jobs: Option<usize>,
        /// Minutes before an idle session is dropped.
        #[arg(long, default_value_t = 30)]
        expiry_mins: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ce,
    Witness,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ce => Mode::CounterExample,
            ModeArg::Witness => Mode::Witness,
        }
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("property").required(true).args(["prop", "prop_file"]))]
pub struct Target {
    /// Model file, or `builtin:toggle`, `builtin:hotel` or
    /// `builtin:hotel:<guests>[<keys per room>,...]`.
    #[arg(long)]
    pub model: String,
    /// A model assertion name or a formula.
    #[arg(long)]
    pub prop: Option<String>,
    /// File holding the property.
    #[arg(long)]
    pub prop_file: Option<PathBuf>,
    #[arg(long, default_value_t = service::DEFAULT_BOUND)]
    pub bound: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Ce)]
    pub mode: ModeArg,
    /// Give deadlocked states an `idle[]` self-loop.
    #[arg(long)]
    pub add_idle: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("model: {0}")]
    Model(#[from] EgsError),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("script line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("output: {0}")]
    Output(#[from] std::io::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Model source for a `--model` argument.
pub fn model_source(spec: &str) -> Result<String, CliError> {
    match spec.strip_prefix("builtin:") {
        Some("toggle") => Ok(models::TOGGLE.to_string()),
        Some("hotel") => Ok(models::HOTEL_2_3.to_string()),
        Some(other) => other
            .strip_prefix("hotel:")
            .and_then(HotelConfig::parse)
            .map(|c| models::hotel(&c))
            .ok_or_else(|| CliError::Usage(format!("unknown built-in model `{other}`"))),
        None => read(Path::new(spec)),
    }
}

/// A compiled model with the property bound to it.
pub struct Loaded {
    pub model: CompiledModel,
    pub property_text: String,
    pub phi: BoundFormula,
}

pub fn load(target: &Target) -> Result<Loaded, CliError> {
    let src = model_source(&target.model)?;
    let sys = egs::parse_model(&src)?;
    let opts = CompileOptions {
        add_idle: target.add_idle,
        ..Default::default()
    };
    let model = egs::compile_lks(&sys, opts)?;
    let property_text = match (&target.prop, &target.prop_file) {
        (Some(p), _) => p.clone(),
        (None, Some(path)) => read(path)?,
        (None, None) => return Err(CliError::Usage("a property is required".into())),
    };
    let phi = model.property(&property_text)?;
    Ok(Loaded {
        model,
        property_text,
        phi,
    })
}

fn true_props(lks: &TypedLks, s: crate::lks::StateId) -> String {
    let props: Vec<&str> = lks
        .label(s)
        .ones()
        .map(|p| lks.prop_names()[p].as_str())
        .collect();
    format!("{{{}}}", props.join(", "))
}

/// Numbered state/event listing of a lasso.
pub fn listing(lks: &TypedLks, pi: &Lasso) -> String {
    let mut out = String::new();
    for k in 0..pi.len() {
        let s = pi.states[k];
        let marker = if k == pi.loop_start {
            "loop> "
        } else {
            "      "
        };
        let _ = writeln!(
            out,
            "{marker}{k:>3}  {}  {}",
            lks.state_name(s),
            true_props(lks, s)
        );
        let e = lks.event(pi.events[k]);
        let tail = if k + 1 == pi.len() {
            format!("  (back to {})", pi.loop_start)
        } else {
            String::new()
        };
        let _ = writeln!(out, "           --{}-->{tail}", e.name);
    }
    out
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Check(target) => check(&target, out),
        Command::Explore { target, script } => {
            let text = read(&script)?;
            explore(&target, &text, out)
        }
        Command::Bench {
            target,
            csv,
            omit_times,
            jobs,
        } => bench(&target, csv.as_deref(), omit_times, jobs, out),
        Command::Serve {
            port,
            host,
            jobs,
            expiry_mins,
        } => {
            let mut config = ServiceConfig {
                idle_expiry: std::time::Duration::from_secs(expiry_mins * 60),
                ..Default::default()
            };
            if let Some(j) = jobs {
                config.query_threads = j;
            }
            let addr = SocketAddr::new(host, port);
            writeln!(out, "listening on http://{addr}")?;
            out.flush()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(Arc::new(SessionManager::new(config)), addr))?;
            Ok(0)
        }
    }
}

fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    b.build().map_err(|e| CliError::Usage(e.to_string()))
}

fn checked_phi(l: &Loaded, mode: ModeArg) -> BoundFormula {
    match mode {
        ModeArg::Ce => l.phi.clone(),
        ModeArg::Witness => crate::seltl::Formula::not(l.phi.clone()),
    }
}

pub fn check(target: &Target, out: &mut dyn Write) -> Result<i32, CliError> {
    let l = load(target)?;
    let lks = &l.model.lks;
    let phi = checked_phi(&l, target.mode);
    let r = checker::find_counterexample(lks, &phi, target.bound)?;
    let what = match target.mode {
        ModeArg::Ce => "counter-example",
        ModeArg::Witness => "witness",
    };
    match r {
        CheckResult::Valid(b) => {
            match target.mode {
                ModeArg::Ce => writeln!(out, "valid: no counter-example within bound {b}")?,
                ModeArg::Witness => writeln!(out, "no witness within bound {b}")?,
            }
            Ok(0)
        }
        CheckResult::CounterExample(pi, stats) => {
            writeln!(
                out,
                "{what} of length {} (loop at {}), found in {:.1} ms:",
                pi.len(),
                pi.loop_start,
                stats.query_ms
            )?;
            write!(out, "{}", listing(lks, &pi))?;
            Ok(1)
        }
    }
}

/// One parsed script operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScriptOp {
    Op(Op),
    Enabled,
}

/// Parses a script into `(line, op)` pairs.
pub fn parse_script(text: &str) -> Result<Vec<(usize, ScriptOp)>, CliError> {
    let mut ops = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let code = line.split('#').next().unwrap_or("");
        for cmd in code.split(';').map(str::trim).filter(|c| !c.is_empty()) {
            let words: Vec<&str> = cmd.split_whitespace().collect();
            let op = match words.as_slice() {
                ["fwd" | "forward"] => ScriptOp::Op(Op::Forward),
                ["back" | "backward"] => ScriptOp::Op(Op::Backward),
                ["alt-state"] => ScriptOp::Op(Op::AltState),
                ["alt-event"] => ScriptOp::Op(Op::AltEvent),
                ["type", t] => ScriptOp::Op(Op::SetType(t.to_string())),
                ["enabled"] => ScriptOp::Enabled,
                _ => {
                    return Err(CliError::Script {
                        line: n + 1,
                        message: format!("unknown operation `{cmd}`"),
                    })
                }
            };
            ops.push((n + 1, op));
        }
    }
    Ok(ops)
}

fn focus_line(s: &Session) -> String {
    let lks = s.lks();
    let i = s.focus();
    let (st, ev) = s.lasso().unroll(i);
    let next = s.lasso().state_at(i + 1);
    format!(
        "focus {i}: {} --{}--> {}",
        lks.state_name(st),
        lks.event(ev).name,
        lks.state_name(next)
    )
}

fn enabled_line(s: &Session) -> String {
    let parts: Vec<String> = s
        .enabled_types()
        .into_iter()
        .map(|e| format!("{}={}", e.name, if e.enabled { "yes" } else { "no" }))
        .collect();
    format!("enabled: {}", parts.join(" "))
}

fn op_name(op: &ScriptOp) -> String {
    match op {
        ScriptOp::Enabled => "enabled".into(),
        ScriptOp::Op(Op::Forward) => "fwd".into(),
        ScriptOp::Op(Op::Backward) => "back".into(),
        ScriptOp::Op(Op::AltState) => "alt-state".into(),
        ScriptOp::Op(Op::AltEvent) => "alt-event".into(),
        ScriptOp::Op(Op::SetType(t)) => format!("type {t}"),
    }
}

pub fn explore(target: &Target, script: &str, out: &mut dyn Write) -> Result<i32, CliError> {
    let ops = parse_script(script)?;
    let l = load(target)?;
    let lks = Arc::new(l.model.lks.clone());
    let mut s = match explorer::init_session(lks, l.phi.clone(), target.bound, target.mode.into())?
    {
        Init::PropertyHolds(b) => {
            writeln!(out, "property holds within bound {b}; nothing to explore")?;
            if let Some((line, _)) = ops.first() {
                return Err(CliError::Script {
                    line: *line,
                    message: "no session to apply operations to".into(),
                });
            }
            return Ok(0);
        }
        Init::Session(s) => *s,
    };
    writeln!(out, "trace: {}", s.lasso().display(s.lks()))?;
    writeln!(out, "{}", focus_line(&s))?;
    for (_, op) in &ops {
        writeln!(out, "> {}", op_name(op))?;
        match op {
            ScriptOp::Enabled => writeln!(out, "{}", enabled_line(&s))?,
            ScriptOp::Op(op) => {
                let before = s.lasso().clone();
                match s.apply(op) {
                    Ok(()) => {
                        if s.lasso() != &before {
                            writeln!(out, "trace: {}", s.lasso().display(s.lks()))?;
                        }
                        writeln!(out, "{}", focus_line(&s))?;
                    }
                    Err(e @ ExploreError::Check(_)) => return Err(e.into()),
                    Err(e) => writeln!(out, "error: {e}")?,
                }
            }
        }
    }
    Ok(0)
}

/// One row of the benchmark table.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub i: usize,
    pub total_ms: f64,
    pub enabled: Vec<String>,
    pub executed: String,
}

/// Runs the dry run at every position of the first counter-example.
pub fn bench_rows(session: &mut Session) -> Vec<BenchRow> {
    let n = session.lasso().len();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        while session.focus() < i {
            session.step_forward();
        }
        let start = Instant::now();
        let results = session.enabled_types();
        let total_ms = start.elapsed().as_secs_f64() * 1e3;
        let lks = session.lks();
        let executed = lks
            .type_name(lks.type_of(session.lasso().event_at(i)))
            .to_string();
        rows.push(BenchRow {
            i,
            total_ms,
            enabled: results
                .into_iter()
                .filter(|r| r.enabled)
                .map(|r| r.name)
                .collect(),
            executed,
        });
    }
    rows
}

fn ms(v: f64, omit: bool) -> String {
    if omit {
        String::new()
    } else {
        format!("{v:.2}")
    }
}

pub fn bench(
    target: &Target,
    csv: Option<&Path>,
    omit_times: bool,
    jobs: Option<usize>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let pool = thread_pool(jobs)?;
    let l = load(target)?;
    let lks = Arc::new(l.model.lks.clone());
    let start = Instant::now();
    let init = explorer::init_session(lks, l.phi.clone(), target.bound, target.mode.into())?;
    let t_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut s = match init {
        Init::PropertyHolds(b) => {
            writeln!(out, "property holds within bound {b}; nothing to benchmark")?;
            return Ok(0);
        }
        Init::Session(s) => *s,
    };
    let rows = pool.install(|| bench_rows(&mut s));
    let config = target
        .model
        .strip_prefix("builtin:")
        .unwrap_or(&target.model);
    writeln!(out, "C: {config} ({} states)", s.lks().num_states())?;
    writeln!(out, "property: {}", l.property_text.trim())?;
    writeln!(out, "bound: {}", target.bound)?;
    if !omit_times {
        writeln!(out, "T: {t_ms:.2} ms")?;
    }
    writeln!(out, "trace: {}", s.lasso().display(s.lks()))?;
    let table: Vec<[String; 3]> = rows
        .iter()
        .map(|r| {
            let set: Vec<String> = r
                .enabled
                .iter()
                .map(|t| {
                    if *t == r.executed {
                        format!("*{t}")
                    } else {
                        t.clone()
                    }
                })
                .collect();
            [r.i.to_string(), ms(r.total_ms, omit_times), set.join(" ")]
        })
        .collect();
    let header = [
        "i".to_string(),
        "T_i_ms".to_string(),
        "a_i (*executed)".to_string(),
    ];
    let width = |c: usize| {
        table
            .iter()
            .chain(std::iter::once(&header))
            .map(|r| r[c].len())
            .max()
            .unwrap_or(0)
    };
    let (w0, w1) = (width(0), width(1));
    for r in std::iter::once(&header).chain(&table) {
        writeln!(out, "{:>w0$}  {:>w1$}  {}", r[0], r[1], r[2])?;
    }
    if let Some(path) = csv {
        let mut text = format!("# C={config}\n");
        if !omit_times {
            let _ = writeln!(text, "# T_ms={t_ms:.2}");
        }
        text.push_str("i,T_i_ms,enabled_types,executed_type\n");
        for r in &rows {
            let _ = writeln!(
                text,
                "{},{},{},{}",
                r.i,
                ms(r.total_ms, omit_times),
                r.enabled.join(";"),
                r.executed
            );
        }
        std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(0)
}

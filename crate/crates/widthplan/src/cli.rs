//! Command-line interface: `lookahead`, `encode`, `solve` and `branching`.
//!
//! Every command reads one domain and one or more instances and writes one
//! JSON line per instance (or per graph, for `encode`). Exit status is 0 on
//! success, 1 if `solve` left an instance unsolved, 2 on usage, parse, IO or
//! scorer errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;
use widthplan_core::encode::{self, Encoding};
use widthplan_core::lookahead::LookaheadError;
use widthplan_core::pddl::{parse_domain, parse_instance, Domain, ParseError};
use widthplan_core::{lookahead, GroundError, LookaheadConfig, LookaheadTree, Task, Variant};

use crate::policy::{self, EpisodeConfig, Limits, Mode, PolicyError};
use crate::scorer::{ScoreError, ScorerSpec};
use crate::wire::{self, Message};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSOLVED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "widthplan", version, about = "Width-based lookahead planning toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the lookahead tree of each initial state and report its size.
    Lookahead {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Encode the initial state (and its lookahead tree) as graph records.
    Encode {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_parser = parse_encoding, default_value = "ad")]
        encoding: Encoding,
    },
    /// Run one greedy episode per instance.
    Solve {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, value_parser = parse_mode, default_value = "iw_jump")]
        mode: Mode,
        /// Defaults to aa for flat_aa and ad otherwise.
        #[arg(long, value_parser = parse_encoding)]
        encoding: Option<Encoding>,
        /// oracle, zero, cmd:<program> [args..] or tcp:<host>:<port>.
        #[arg(long, env = "WIDTHPLAN_SCORER", default_value = "oracle")]
        scorer: ScorerSpec,
        #[arg(long, env = "WIDTHPLAN_MAX_CHOICES", default_value_t = policy::DEFAULT_MAX_CHOICES)]
        max_choices: usize,
        #[arg(long, env = "WIDTHPLAN_MAX_ACTIONS", default_value_t = policy::DEFAULT_MAX_ACTIONS)]
        max_actions: usize,
        /// Per-instance wall-clock limit in seconds.
        #[arg(long, env = "WIDTHPLAN_TIMEOUT")]
        timeout: Option<f64>,
    },
    /// Estimate the branching factor along a seeded random walk.
    Branching {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 10)]
        walk_len: usize,
    },
}

#[derive(Args, Debug)]
pub struct IoArgs {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long = "instance", required = true)]
    pub instances: Vec<PathBuf>,
    /// Write records here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub pretty: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Instances processed in parallel.
    #[arg(long, env = "WIDTHPLAN_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, value_parser = parse_variant, default_value = "aiw")]
    pub variant: Variant,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Per-layer capacity (caiw only; default 1000).
    #[arg(long)]
    pub capacity: Option<usize>,
    #[arg(long, env = "WIDTHPLAN_MAX_STATES", default_value_t = widthplan_core::lookahead::DEFAULT_MAX_STATES)]
    pub max_states: usize,
    #[arg(long, env = "WIDTHPLAN_MAX_DEPTH")]
    pub max_depth: Option<usize>,
}

impl SearchArgs {
    pub fn config(&self) -> Result<LookaheadConfig, LookaheadError> {
        let mut c = LookaheadConfig::new(self.variant)
            .with_width(self.k)
            .with_max_states(Some(self.max_states))
            .with_max_depth(self.max_depth);
        if let Some(cap) = self.capacity {
            c = c.with_capacity(cap);
        }
        c.validate()?;
        Ok(c)
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: LookaheadError| e.to_string())
}

fn parse_encoding(s: &str) -> Result<Encoding, String> {
    s.parse()
        .map_err(|()| format!("unknown encoding `{s}` (state, ext, aa, ad, int, intd)"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("{}:{source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Ground { path: PathBuf, source: GroundError },
    #[error("{0}")]
    Lookahead(#[from] LookaheadError),
    #[error("{0}")]
    Policy(#[from] PolicyError),
    #[error("{0}")]
    Score(#[from] ScoreError),
    #[error("{0}")]
    Io(#[from] io::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })
}

fn load_domain(path: &Path) -> Result<Domain, CliError> {
    parse_domain(&read(path)?).map_err(|source| CliError::Parse {
        path: path.into(),
        source,
    })
}

fn load_task(domain: &Domain, path: &Path) -> Result<Task, CliError> {
    let inst = parse_instance(&read(path)?, domain).map_err(|source| CliError::Parse {
        path: path.into(),
        source,
    })?;
    Task::new(domain.clone(), inst).map_err(|source| CliError::Ground {
        path: path.into(),
        source,
    })
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// What one instance contributes to the output.
struct Outcome {
    records: Vec<String>,
    unsolved: bool,
}

fn render(v: &Value, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(v).expect("json value")
    } else {
        v.to_string()
    }
}

fn render_msg(m: &Message, pretty: bool) -> String {
    if pretty {
        wire::to_json_pretty(m)
    } else {
        wire::to_json(m)
    }
}

fn cmd_lookahead(task: &Task, search: &SearchArgs, pretty: bool) -> Result<Outcome, CliError> {
    let cfg = search.config()?;
    let start = Instant::now();
    // A solved instance needs no search: report the bare root.
    let tree = if task.is_goal(task.initial_state()) {
        LookaheadTree::single(task.initial_state().clone())
    } else {
        lookahead(task, task.initial_state(), &cfg)?
    };
    let v = json!({
        "instance": task.instance().name,
        "variant": cfg.variant.as_str(),
        "k": cfg.k,
        "nodes": tree.len(),
        "max_depth": tree.max_depth(),
        "seen": tree.seen_len(),
        "truncated": tree.truncated(),
        "goal_in_tree": tree.nodes().iter().any(|n| task.is_goal(&n.state)),
        "wall_time_ms": millis(start.elapsed()),
    });
    Ok(Outcome {
        records: vec![render(&v, pretty)],
        unsolved: false,
    })
}

fn cmd_encode(task: &Task, search: &SearchArgs, encoding: Encoding, pretty: bool) -> Result<Outcome, CliError> {
    let s = task.initial_state();
    let msgs: Vec<Message> = match encoding {
        Encoding::State => vec![Message::Graph(encode::encode_state(task, s))],
        Encoding::AggregatedActions => {
            vec![Message::Graph(encode::encode_aa(task, s, &task.applicable_actions(s)))]
        }
        enc => {
            let tree = lookahead(task, s, &search.config()?)?;
            if enc == Encoding::AggregatedDelta {
                vec![Message::Graph(encode::encode_ad(task, &tree))]
            } else {
                let candidates = tree.jump_candidates();
                let q = crate::scorer::Query {
                    task,
                    encoding: enc,
                    tree: &tree,
                    candidates: &candidates,
                };
                q.requests()
            }
        }
    };
    Ok(Outcome {
        records: msgs.iter().map(|m| render_msg(m, pretty)).collect(),
        unsolved: false,
    })
}

struct SolveArgs<'a> {
    search: &'a SearchArgs,
    mode: Mode,
    encoding: Option<Encoding>,
    scorer: &'a ScorerSpec,
    limits: Limits,
}

fn cmd_solve(task: &Task, a: &SolveArgs<'_>, pretty: bool) -> Result<Outcome, CliError> {
    let lookahead_cfg = if a.mode == Mode::IwJump {
        a.search.config()?
    } else {
        LookaheadConfig::new(a.search.variant)
    };
    let cfg = EpisodeConfig::new(a.mode, lookahead_cfg)
        .with_encoding(a.encoding.unwrap_or(a.mode.default_encoding()))
        .with_limits(a.limits.clone());
    cfg.validate()?;
    let mut scorer = a.scorer.open(task)?;
    let r = policy::run_episode(task, &mut scorer, &cfg)?;
    if r.solved {
        debug_assert!(policy::replay(task, &r.plan));
    }
    let v = json!({
        "instance": task.instance().name,
        "mode": a.mode.as_str(),
        "variant": a.search.variant.as_str(),
        "encoding": cfg.encoding.as_str(),
        "solved": r.solved,
        "choices": r.choices,
        "plan_length": r.plan.len(),
        "wall_time_ms": millis(r.wall_time),
        "failure_reason": r.failure_reason.map(|f| f.as_str()),
        "plan": r.plan.iter().map(|x| task.action_string(x)).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        records: vec![render(&v, pretty)],
        unsolved: !r.solved,
    })
}

fn cmd_branching(task: &Task, walk_len: usize, seed: u64, pretty: bool) -> Result<Outcome, CliError> {
    let samples = policy::branching_samples(task, walk_len, seed);
    let mean = samples.iter().sum::<usize>() as f64 / samples.len() as f64;
    let v = json!({
        "instance": task.instance().name,
        "walk_len": walk_len,
        "seed": seed,
        "branching_factor": mean,
        "samples": samples,
    });
    Ok(Outcome {
        records: vec![render(&v, pretty)],
        unsolved: false,
    })
}

/// Runs `job` over every instance with up to `jobs` threads, keeping
/// results in instance order.
fn for_each_instance<F>(domain: &Domain, paths: &[PathBuf], jobs: usize, job: F) -> Vec<Result<Outcome, CliError>>
where
    F: Fn(&Task) -> Result<Outcome, CliError> + Sync,
{
    let slots: Vec<Mutex<Option<Result<Outcome, CliError>>>> = paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(path) = paths.get(i) else { break };
        let r = load_task(domain, path).and_then(|t| job(&t));
        *slots[i].lock().expect("slot lock") = Some(r);
    };
    let threads = jobs.clamp(1, paths.len().max(1));
    if threads == 1 {
        work();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(work);
            }
        });
    }
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every instance ran"))
        .collect()
}

type Job<'a> = Box<dyn Fn(&Task) -> Result<Outcome, CliError> + Sync + 'a>;

fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let solve_args;
    let (io_args, job): (&IoArgs, Job<'_>);
    match &cli.command {
        Command::Lookahead { io, search } => {
            search.config()?;
            io_args = io;
            job = Box::new(move |t| cmd_lookahead(t, search, io.pretty));
        }
        Command::Encode { io, search, encoding } => {
            search.config()?;
            io_args = io;
            job = Box::new(move |t| cmd_encode(t, search, *encoding, io.pretty));
        }
        Command::Solve {
            io,
            search,
            mode,
            encoding,
            scorer,
            max_choices,
            max_actions,
            timeout,
        } => {
            let timeout = match timeout {
                Some(t) if !(t.is_finite() && *t >= 0.0) => {
                    return Err(CliError::Usage(format!("invalid timeout {t}")))
                }
                t => t.map(Duration::from_secs_f64),
            };
            solve_args = SolveArgs {
                search,
                mode: *mode,
                encoding: *encoding,
                scorer,
                limits: Limits {
                    max_choices: *max_choices,
                    max_actions: *max_actions,
                    timeout,
                },
            };
            let probe = EpisodeConfig::new(*mode, LookaheadConfig::new(search.variant))
                .with_encoding(encoding.unwrap_or(mode.default_encoding()));
            probe.validate()?;
            if *mode == Mode::IwJump {
                search.config()?;
            }
            io_args = io;
            let a = &solve_args;
            job = Box::new(move |t| cmd_solve(t, a, io.pretty));
        }
        Command::Branching { io, walk_len } => {
            io_args = io;
            job = Box::new(move |t| cmd_branching(t, *walk_len, io.seed, io.pretty));
        }
    }

    let domain = load_domain(&io_args.domain)?;
    let results = for_each_instance(&domain, &io_args.instances, io_args.jobs, job);

    let mut file;
    let out: &mut dyn Write = match &io_args.output {
        Some(p) => {
            file = BufWriter::new(File::create(p)?);
            &mut file
        }
        None => stdout,
    };
    let mut code = EXIT_OK;
    for r in results {
        match r {
            Ok(o) => {
                for rec in o.records {
                    writeln!(out, "{rec}")?;
                }
                if o.unsolved {
                    code = code.max(EXIT_UNSOLVED);
                }
            }
            Err(e) => {
                writeln!(stderr, "error: {e}")?;
                code = EXIT_ERROR;
            }
        }
    }
    out.flush()?;
    Ok(code)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

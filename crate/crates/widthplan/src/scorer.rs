//! Q-value scorers used by the policy executor.

use std::collections::{HashMap, VecDeque};
use std::io::{BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use thiserror::Error;
use widthplan_core::encode::{self, Encoding};
use widthplan_core::{LookaheadTree, State, Task};

use crate::wire::{self, Message, WireError};

/// Default bound on the reachable state space the oracle will enumerate.
pub const ORACLE_MAX_STATES: usize = 100_000;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("state space exceeds {0} states")]
    StateSpaceTooLarge(usize),
    #[error("candidate state was not reached from the initial state")]
    UnknownState,
    #[error("scorer returned {found} values for {expected} candidates")]
    Length { expected: usize, found: usize },
    #[error("scorer returned NaN for candidate {0}")]
    NotANumber(usize),
    #[error("scorer error: {0}")]
    Remote(String),
    #[error("unexpected `{0}` record from scorer")]
    UnexpectedRecord(&'static str),
    #[error("scorer closed the connection")]
    Closed,
    #[error("spawning scorer: {0}")]
    Spawn(std::io::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
}

impl From<std::io::Error> for ScoreError {
    fn from(e: std::io::Error) -> Self {
        ScoreError::Wire(WireError::Io(e))
    }
}

/// One scoring request: non-root nodes `candidates` of `tree` (whose root
/// is the current state), to be encoded under `encoding`.
pub struct Query<'a> {
    pub task: &'a Task,
    pub encoding: Encoding,
    pub tree: &'a LookaheadTree,
    pub candidates: &'a [usize],
}

impl Query<'_> {
    pub fn state(&self, c: usize) -> &State {
        &self.tree.node(self.candidates[c]).state
    }

    /// Wire requests for this query. Aggregated encodings give one graph
    /// for all candidates; the others give one record per candidate whose
    /// `candidates` field holds the candidate's index.
    pub fn requests(&self) -> Vec<Message> {
        let (task, root) = (self.task, self.tree.root());
        match self.encoding {
            Encoding::AggregatedActions => {
                let actions: Vec<_> = self
                    .candidates
                    .iter()
                    .map(|&i| self.tree.node(i).action.clone().expect("non-root node"))
                    .collect();
                vec![Message::Graph(encode::encode_aa(task, root, &actions))]
            }
            Encoding::AggregatedDelta => {
                let g = encode::encode_ad(task, self.tree);
                let ids = self.candidates.iter().map(|&i| g.candidates[i - 1]).collect();
                vec![Message::Graph(g.with_candidates(ids))]
            }
            enc => (0..self.candidates.len())
                .map(|c| {
                    let s2 = self.state(c);
                    let id = vec![c as u32];
                    match enc {
                        Encoding::External => {
                            Message::GraphPair(encode::encode_external(task, root, s2).with_candidate(c as u32))
                        }
                        Encoding::Internal => Message::Graph(encode::encode_internal(task, root, s2).with_candidates(id)),
                        Encoding::InternalDelta => {
                            Message::Graph(encode::encode_internal_delta(task, root, s2).with_candidates(id))
                        }
                        _ => Message::Graph(encode::encode_state(task, s2).with_candidates(id)),
                    }
                })
                .collect(),
        }
    }
}

pub trait Scorer {
    /// One Q-value per candidate, in candidate order.
    fn score(&mut self, q: &Query<'_>) -> Result<Vec<f64>, ScoreError>;
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score(&mut self, q: &Query<'_>) -> Result<Vec<f64>, ScoreError> {
        (**self).score(q)
    }
}

/// Scores every candidate 0.
#[derive(Debug, Default, Clone, Copy)]
pub struct ZeroScorer;

impl Scorer for ZeroScorer {
    fn score(&mut self, q: &Query<'_>) -> Result<Vec<f64>, ScoreError> {
        Ok(vec![0.0; q.candidates.len()])
    }
}

/// Exact scorer: `Q = -(distance to the nearest goal)` over the state space
/// reachable from the initial state; dead states score `-inf`.
pub struct OracleScorer {
    dist: HashMap<State, u32>,
    reachable: usize,
}

impl OracleScorer {
    pub fn new(task: &Task) -> Result<Self, ScoreError> {
        Self::with_limit(task, ORACLE_MAX_STATES)
    }

    pub fn with_limit(task: &Task, max_states: usize) -> Result<Self, ScoreError> {
        let mut index: HashMap<State, usize> = HashMap::new();
        let mut states = vec![task.initial_state().clone()];
        let mut preds: Vec<Vec<usize>> = vec![Vec::new()];
        index.insert(states[0].clone(), 0);
        let mut i = 0;
        while i < states.len() {
            let s = states[i].clone();
            for a in task.applicable_actions(&s) {
                let t = s.apply(&a).expect("applicable action");
                let j = match index.get(&t) {
                    Some(&j) => j,
                    None => {
                        if states.len() == max_states {
                            return Err(ScoreError::StateSpaceTooLarge(max_states));
                        }
                        index.insert(t.clone(), states.len());
                        states.push(t);
                        preds.push(Vec::new());
                        states.len() - 1
                    }
                };
                preds[j].push(i);
            }
            i += 1;
        }
        let mut dist = vec![u32::MAX; states.len()];
        let mut queue = VecDeque::new();
        for (j, s) in states.iter().enumerate() {
            if task.is_goal(s) {
                dist[j] = 0;
                queue.push_back(j);
            }
        }
        while let Some(j) = queue.pop_front() {
            for &p in &preds[j] {
                if dist[p] == u32::MAX {
                    dist[p] = dist[j] + 1;
                    queue.push_back(p);
                }
            }
        }
        let reachable = states.len();
        let dist = states
            .into_iter()
            .zip(dist)
            .filter(|&(_, d)| d != u32::MAX)
            .collect();
        Ok(OracleScorer { dist, reachable })
    }

    /// Number of states reachable from the initial state.
    pub fn reachable(&self) -> usize {
        self.reachable
    }

    /// Goal distance, `None` for dead states.
    pub fn distance(&self, s: &State) -> Option<u32> {
        self.dist.get(s).copied()
    }

    pub fn q(&self, s: &State) -> f64 {
        self.distance(s).map_or(f64::NEG_INFINITY, |d| -f64::from(d))
    }
}

impl Scorer for OracleScorer {
    fn score(&mut self, q: &Query<'_>) -> Result<Vec<f64>, ScoreError> {
        Ok((0..q.candidates.len()).map(|c| self.q(q.state(c))).collect())
    }
}

/// Scorer speaking the framed wire protocol to another process.
pub struct RemoteScorer {
    reader: Box<dyn std::io::BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl RemoteScorer {
    /// Spawns `program args..` and talks over its stdin/stdout.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, ScoreError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(ScoreError::Spawn)?;
        let stdin: ChildStdin = child.stdin.take().expect("piped stdin");
        let stdout: ChildStdout = child.stdout.take().expect("piped stdout");
        Ok(RemoteScorer {
            reader: Box::new(BufReader::new(stdout)),
            writer: Box::new(BufWriter::new(stdin)),
            child: Some(child),
        })
    }

    /// Connects to `host:port`.
    pub fn connect(addr: &str) -> Result<Self, ScoreError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let read = stream.try_clone()?;
        Ok(RemoteScorer {
            reader: Box::new(BufReader::new(read)),
            writer: Box::new(BufWriter::new(stream)),
            child: None,
        })
    }

    fn call(&mut self, m: &Message) -> Result<Vec<f64>, ScoreError> {
        wire::write_frame(&mut self.writer, m)?;
        match wire::read_frame(&mut self.reader)? {
            Some(Message::Q(values)) => {
                let expected = m.expected_values();
                if values.len() != expected {
                    return Err(ScoreError::Length {
                        expected,
                        found: values.len(),
                    });
                }
                Ok(values)
            }
            Some(Message::Error(e)) => Err(ScoreError::Remote(e)),
            Some(other) => Err(ScoreError::UnexpectedRecord(other.kind())),
            None => Err(ScoreError::Closed),
        }
    }
}

impl Scorer for RemoteScorer {
    fn score(&mut self, q: &Query<'_>) -> Result<Vec<f64>, ScoreError> {
        let per_transition = q.encoding.is_per_transition() || q.encoding == Encoding::State;
        let mut out = Vec::with_capacity(q.candidates.len());
        for m in q.requests() {
            let values = self.call(&m)?;
            if per_transition && values.len() != 1 {
                return Err(ScoreError::Length {
                    expected: 1,
                    found: values.len(),
                });
            }
            out.extend(values);
        }
        Ok(out)
    }
}

impl Drop for RemoteScorer {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            // Closing stdin is the shutdown signal.
            self.writer = Box::new(std::io::sink());
            let _ = child.wait();
        }
    }
}

/// Scorer endpoint as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerSpec {
    Oracle,
    Zero,
    /// `cmd:<program> [args..]`, split on whitespace.
    Command(Vec<String>),
    /// `tcp:<host>:<port>`.
    Tcp(String),
}

impl std::str::FromStr for ScorerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "oracle" => return Ok(ScorerSpec::Oracle),
            "zero" => return Ok(ScorerSpec::Zero),
            _ => {}
        }
        if let Some(cmd) = s.strip_prefix("cmd:") {
            let argv: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err("empty scorer command".into());
            }
            return Ok(ScorerSpec::Command(argv));
        }
        if let Some(addr) = s.strip_prefix("tcp:") {
            if !addr.contains(':') {
                return Err(format!("expected tcp:<host>:<port>, got `{s}`"));
            }
            return Ok(ScorerSpec::Tcp(addr.into()));
        }
        Err(format!("unknown scorer `{s}` (oracle, zero, cmd:<program>, tcp:<host>:<port>)"))
    }
}

impl ScorerSpec {
    /// Opens a scorer for one instance.
    pub fn open(&self, task: &Task) -> Result<Box<dyn Scorer>, ScoreError> {
        Ok(match self {
            ScorerSpec::Oracle => Box::new(OracleScorer::new(task)?),
            ScorerSpec::Zero => Box::new(ZeroScorer),
            ScorerSpec::Command(argv) => Box::new(RemoteScorer::spawn(&argv[0], &argv[1..])?),
            ScorerSpec::Tcp(addr) => Box::new(RemoteScorer::connect(addr)?),
        })
    }
}

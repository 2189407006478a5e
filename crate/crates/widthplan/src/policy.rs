//! Greedy episode execution over scored candidates.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;
use widthplan_core::encode::Encoding;
use widthplan_core::lookahead::LookaheadError;
use widthplan_core::{lookahead, GroundAction, LookaheadConfig, LookaheadTree, State, Task};

use crate::scorer::{Query, ScoreError, Scorer};

pub const DEFAULT_MAX_CHOICES: usize = 1000;
pub const DEFAULT_MAX_ACTIONS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// One primitive action per choice, scored with the AA encoding.
    FlatAa,
    /// One primitive successor per choice, scored with the AD encoding.
    FlatAd,
    /// One lookahead-tree node per choice.
    IwJump,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::FlatAa => "flat_aa",
            Mode::FlatAd => "flat_ad",
            Mode::IwJump => "iw_jump",
        }
    }

    pub fn default_encoding(self) -> Encoding {
        match self {
            Mode::FlatAa => Encoding::AggregatedActions,
            _ => Encoding::AggregatedDelta,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Mode::FlatAa, Mode::FlatAd, Mode::IwJump]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (flat_aa, flat_ad, iw_jump)"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_choices: usize,
    /// Cap on total primitive actions in the plan.
    pub max_actions: usize,
    pub timeout: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_choices: DEFAULT_MAX_CHOICES,
            max_actions: DEFAULT_MAX_ACTIONS,
            timeout: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpisodeConfig {
    pub mode: Mode,
    pub encoding: Encoding,
    pub lookahead: LookaheadConfig,
    pub limits: Limits,
}

impl EpisodeConfig {
    pub fn new(mode: Mode, lookahead: LookaheadConfig) -> Self {
        EpisodeConfig {
            mode,
            encoding: mode.default_encoding(),
            lookahead,
            limits: Limits::default(),
        }
    }

    pub fn with_encoding(mut self, e: Encoding) -> Self {
        self.encoding = e;
        self
    }

    pub fn with_limits(mut self, l: Limits) -> Self {
        self.limits = l;
        self
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        match (self.mode, self.encoding) {
            (Mode::FlatAa, Encoding::AggregatedActions) => {}
            (Mode::FlatAa, e) | (_, e @ Encoding::AggregatedActions) => {
                return Err(PolicyError::Incompatible(self.mode, e))
            }
            _ => {}
        }
        if self.mode == Mode::IwJump {
            self.lookahead.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    ChoiceLimit,
    Timeout,
    DeadEnd,
}

impl FailureReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailureReason::ChoiceLimit => "choice_limit",
            FailureReason::Timeout => "timeout",
            FailureReason::DeadEnd => "dead_end",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeResult {
    pub solved: bool,
    pub choices: usize,
    pub plan: Vec<GroundAction>,
    pub wall_time: Duration,
    pub failure_reason: Option<FailureReason>,
    /// States at decision points, starting with the initial state.
    pub trajectory: Vec<State>,
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("mode {0} cannot be used with encoding {1}")]
    Incompatible(Mode, Encoding),
    #[error(transparent)]
    Lookahead(#[from] LookaheadError),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

fn check_values(values: &[f64], expected: usize) -> Result<(), ScoreError> {
    if values.len() != expected {
        return Err(ScoreError::Length {
            expected,
            found: values.len(),
        });
    }
    match values.iter().position(|v| v.is_nan()) {
        Some(i) => Err(ScoreError::NotANumber(i)),
        None => Ok(()),
    }
}

/// First index of the maximum.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Runs one greedy episode from the initial state of `task`.
pub fn run_episode(task: &Task, scorer: &mut dyn Scorer, cfg: &EpisodeConfig) -> Result<EpisodeResult, PolicyError> {
    cfg.validate()?;
    let start = Instant::now();
    let timed_out = || cfg.limits.timeout.is_some_and(|t| start.elapsed() >= t);
    let mut state = task.initial_state().clone();
    let mut visited: HashSet<State> = HashSet::from([state.clone()]);
    let mut trajectory = vec![state.clone()];
    let mut plan = Vec::new();
    let mut choices = 0;

    let failure = loop {
        if task.is_goal(&state) {
            break None;
        }
        if choices >= cfg.limits.max_choices {
            break Some(FailureReason::ChoiceLimit);
        }
        if timed_out() {
            break Some(FailureReason::Timeout);
        }
        let tree = match cfg.mode {
            Mode::FlatAa | Mode::FlatAd => LookaheadTree::successors(task, &state),
            Mode::IwJump => lookahead(task, &state, &cfg.lookahead)?,
        };
        if timed_out() {
            break Some(FailureReason::Timeout);
        }
        let candidates: Vec<usize> = tree
            .jump_candidates()
            .into_iter()
            .filter(|&i| !visited.contains(&tree.node(i).state))
            .collect();
        if candidates.is_empty() {
            break Some(FailureReason::DeadEnd);
        }
        let query = Query {
            task,
            encoding: cfg.encoding,
            tree: &tree,
            candidates: &candidates,
        };
        let values = scorer.score(&query)?;
        check_values(&values, candidates.len())?;
        let node = candidates[argmax(&values)];
        let steps = tree.extract_plan(node)?;
        if plan.len() + steps.len() > cfg.limits.max_actions {
            break Some(FailureReason::ChoiceLimit);
        }
        plan.extend(steps);
        state = tree.node(node).state.clone();
        let fresh = visited.insert(state.clone());
        debug_assert!(fresh, "candidate filter admitted a visited state");
        trajectory.push(state.clone());
        choices += 1;
    };

    Ok(EpisodeResult {
        solved: failure.is_none(),
        choices,
        plan,
        wall_time: start.elapsed(),
        failure_reason: failure,
        trajectory,
    })
}

/// Applies `plan` from the initial state; `true` iff every action applies
/// and the final state is a goal.
pub fn replay(task: &Task, plan: &[GroundAction]) -> bool {
    let mut s = task.initial_state().clone();
    for a in plan {
        match s.apply(a) {
            Ok(t) => s = t,
            Err(_) => return false,
        }
    }
    task.is_goal(&s)
}

/// `|A[s]|` at each state of a seeded uniform random walk of up to
/// `walk_len` steps, including the initial state.
pub fn branching_samples(task: &Task, walk_len: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = task.initial_state().clone();
    let mut actions = task.applicable_actions(&s);
    let mut samples = vec![actions.len()];
    for _ in 0..walk_len {
        let Some(a) = actions.choose(&mut rng) else { break };
        s = s.apply(a).expect("applicable action");
        actions = task.applicable_actions(&s);
        samples.push(actions.len());
    }
    samples
}

/// Mean number of applicable actions along a seeded random walk.
pub fn branching_factor(task: &Task, walk_len: usize, seed: u64) -> f64 {
    let samples = branching_samples(task, walk_len, seed);
    samples.iter().sum::<usize>() as f64 / samples.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scorer::{OracleScorer, ZeroScorer};
    use widthplan_core::Variant;

    fn cfg(mode: Mode, v: Variant) -> EpisodeConfig {
        EpisodeConfig::new(mode, LookaheadConfig::new(v))
    }

    #[test]
    fn goal_at_start() {
        let t = fixtures::load(
            fixtures::BLOCKSWORLD_DOMAIN,
            "(define (problem p) (:domain blocksworld) (:objects a) (:init (ontable a) (clear a) (handempty)) (:goal (and (ontable a))))",
        );
        let r = run_episode(&t, &mut ZeroScorer, &cfg(Mode::IwJump, Variant::Aiw)).unwrap();
        assert!(r.solved);
        assert_eq!(r.choices, 0);
        assert!(r.plan.is_empty());
    }

    #[test]
    fn zero_scorer_is_deterministic_and_picks_first() {
        let t = fixtures::blocksworld_p3();
        let c = cfg(Mode::FlatAa, Variant::Iw);
        let a = run_episode(&t, &mut ZeroScorer, &c).unwrap();
        let b = run_episode(&t, &mut ZeroScorer, &c).unwrap();
        assert_eq!(a.plan, b.plan);
        assert_eq!(a.trajectory, b.trajectory);
        let first = &t.applicable_actions(t.initial_state())[0];
        assert_eq!(&a.plan[0], first);
    }

    #[test]
    fn delivery_one_package_two_jumps() {
        let t = fixtures::delivery_n1();
        let mut o = OracleScorer::new(&t).unwrap();
        let r = run_episode(&t, &mut o, &cfg(Mode::IwJump, Variant::Aiw)).unwrap();
        assert!(r.solved);
        assert_eq!(r.choices, 2);
        assert!(replay(&t, &r.plan));
    }

    #[test]
    fn flat_oracle_is_optimal() {
        let t = fixtures::blocksworld_p3();
        let mut o = OracleScorer::new(&t).unwrap();
        let d = o.distance(t.initial_state()).unwrap() as usize;
        for mode in [Mode::FlatAa, Mode::FlatAd] {
            let r = run_episode(&t, &mut o, &cfg(mode, Variant::Iw)).unwrap();
            assert!(r.solved);
            assert_eq!(r.plan.len(), d);
        }
    }

    #[test]
    fn choice_limit_and_dead_end() {
        let t = fixtures::buttons(5).task();
        let c = cfg(Mode::FlatAa, Variant::Iw).with_limits(Limits {
            max_choices: 2,
            ..Limits::default()
        });
        let r = run_episode(&t, &mut ZeroScorer, &c).unwrap();
        assert_eq!((r.solved, r.choices, r.failure_reason), (false, 2, Some(FailureReason::ChoiceLimit)));

        // one-way corridor without a spanner
        let t = fixtures::load(
            fixtures::SPANNER_DOMAIN,
            "(define (problem p) (:domain spanner) (:objects bob - man a b - location n - nut) (:init (at bob a) (link a b) (at n b) (loose n)) (:goal (and (tightened n))))",
        );
        let r = run_episode(&t, &mut ZeroScorer, &cfg(Mode::FlatAd, Variant::Iw)).unwrap();
        assert_eq!(r.failure_reason, Some(FailureReason::DeadEnd));
        assert_eq!(r.choices, 1);
    }

    #[test]
    fn action_cap_maps_to_choice_limit() {
        let t = fixtures::gripper(2).task();
        let c = cfg(Mode::IwJump, Variant::Iw).with_limits(Limits {
            max_actions: 1,
            ..Limits::default()
        });
        let mut o = OracleScorer::new(&t).unwrap();
        let r = run_episode(&t, &mut o, &c).unwrap();
        assert_eq!(r.failure_reason, Some(FailureReason::ChoiceLimit));
        assert!(r.plan.len() <= 1);
    }

    #[test]
    fn timeout() {
        let t = fixtures::gripper(2).task();
        let c = cfg(Mode::FlatAa, Variant::Iw).with_limits(Limits {
            timeout: Some(Duration::ZERO),
            ..Limits::default()
        });
        let r = run_episode(&t, &mut ZeroScorer, &c).unwrap();
        assert_eq!(r.failure_reason, Some(FailureReason::Timeout));
    }

    struct Fixed(Vec<f64>);

    impl Scorer for Fixed {
        fn score(&mut self, q: &Query<'_>) -> Result<Vec<f64>, ScoreError> {
            Ok(self.0.iter().copied().cycle().take(q.candidates.len()).collect())
        }
    }

    #[test]
    fn bad_scores_are_errors() {
        let t = fixtures::blocksworld_p3();
        let c = cfg(Mode::FlatAa, Variant::Iw);
        assert!(run_episode(&t, &mut Fixed(vec![f64::NAN]), &c).is_err());
        struct Short;
        impl Scorer for Short {
            fn score(&mut self, _: &Query<'_>) -> Result<Vec<f64>, ScoreError> {
                Ok(vec![])
            }
        }
        assert!(matches!(
            run_episode(&t, &mut Short, &c),
            Err(PolicyError::Score(ScoreError::Length { .. }))
        ));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), 0);
        assert_eq!(argmax(&[f64::NEG_INFINITY, -5.0]), 1);
    }

    #[test]
    fn mode_encoding_compatibility() {
        let l = LookaheadConfig::new(Variant::Aiw);
        assert!(EpisodeConfig::new(Mode::IwJump, l.clone())
            .with_encoding(Encoding::AggregatedActions)
            .validate()
            .is_err());
        assert!(EpisodeConfig::new(Mode::FlatAa, l.clone())
            .with_encoding(Encoding::AggregatedDelta)
            .validate()
            .is_err());
        assert!(EpisodeConfig::new(Mode::IwJump, l).with_encoding(Encoding::Internal).validate().is_ok());
    }

    #[test]
    fn branching() {
        let t = fixtures::buttons(4).task();
        assert_eq!(branching_factor(&t, 10, 1), 4.0);
        let t = fixtures::blocksworld(5, 2).task();
        assert_eq!(branching_factor(&t, 10, 9), branching_factor(&t, 10, 9));
        let s = branching_samples(&t, 10, 9);
        assert_eq!(s.len(), 11);
        let t = fixtures::load(
            fixtures::SPANNER_DOMAIN,
            "(define (problem p) (:domain spanner) (:objects bob - man a - location) (:init (at bob a)) (:goal (and)))",
        );
        assert_eq!(branching_samples(&t, 10, 0), vec![0]);
        assert_eq!(branching_factor(&t, 10, 0), 0.0);
    }
}

//! Policies, populations, scenarios and episode orchestration.

use crate::grid::{observe, Event, GridError, GridState, Observation, Stream, CounterRng};
use crate::metrics::per_capita;
use crate::substrate::Substrate;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("population has no entries")]
    EmptyPopulation,
    #[error("population weights must be nonnegative and sum to 1 (got {0})")]
    Weights(f64),
    #[error("focal vector has length {found}, substrate has {expected} players")]
    FocalLength { found: usize, expected: usize },
    #[error("scenario has no focal seats")]
    NoFocal,
    #[error("scenario has no background seats")]
    NoBackground,
    #[error("declared mode {declared:?} does not match the focal vector (implies {implied:?})")]
    ModeMismatch { declared: Mode, implied: Mode },
    #[error("{0} background population")]
    Background(&'static str),
    #[error("expected {expected} focal policies, got {found}")]
    FocalArity { found: usize, expected: usize },
    #[error("engine: {0}")]
    Grid(#[from] GridError),
    #[error("session is closed")]
    Closed,
}

/// What a policy gets to see when choosing an action.
///
/// Focal policies only receive the observation. Background bots are
/// additionally handed the full state and the event feed.
pub struct PlayerView<'a> {
    pub player: usize,
    pub step: u32,
    pub num_actions: usize,
    /// Reward received on the previous step.
    pub reward: f64,
    state: &'a GridState,
    events: &'a [Event],
    privileged: bool,
    obs: OnceCell<Observation>,
}

impl<'a> PlayerView<'a> {
    pub fn new(state: &'a GridState, player: usize, events: &'a [Event], privileged: bool) -> Self {
        Self {
            player,
            step: state.step_count(),
            num_actions: state.substrate().num_actions(),
            reward: state.last_rewards().get(player).copied().unwrap_or(0.0),
            state,
            events,
            privileged,
            obs: OnceCell::new(),
        }
    }

    /// The egocentric observation, rendered on first use.
    pub fn observation(&self) -> &Observation {
        self.obs
            .get_or_init(|| observe(self.state, self.player).expect("view of a valid player"))
    }

    /// Full state, for privileged (background) policies only.
    pub fn state(&self) -> Option<&'a GridState> {
        self.privileged.then_some(self.state)
    }

    /// Events of the previous step, for privileged policies only.
    pub fn events(&self) -> &'a [Event] {
        if self.privileged {
            self.events
        } else {
            &[]
        }
    }
}

/// A stateful controller for one seat over one episode.
pub trait Policy: Send {
    fn act(&mut self, view: &PlayerView<'_>) -> usize;
}

/// Creates fresh policy instances. Factories have no learning interface.
pub trait PolicyFactory: Send + Sync {
    fn id(&self) -> &str;
    fn make(&self, seed: u64) -> Box<dyn Policy>;

    /// Scripted bots read the full state and event feed even when they
    /// fill a focal seat.
    fn privileged(&self) -> bool {
        false
    }
}

/// Shared reference to a policy factory; identity is pointer identity.
#[derive(Clone)]
pub struct PolicyHandle(Arc<dyn PolicyFactory>);

impl PolicyHandle {
    pub fn new(factory: impl PolicyFactory + 'static) -> Self {
        Self(Arc::new(factory))
    }

    pub fn from_fn(
        id: impl Into<String>,
        make: impl Fn(u64) -> Box<dyn Policy> + Send + Sync + 'static,
    ) -> Self {
        Self::new(FnFactory {
            id: id.into(),
            make: Box::new(make),
            privileged: false,
        })
    }

    /// Like `from_fn`, for scripted policies that read privileged views.
    pub fn scripted(
        id: impl Into<String>,
        make: impl Fn(u64) -> Box<dyn Policy> + Send + Sync + 'static,
    ) -> Self {
        Self::new(FnFactory {
            id: id.into(),
            make: Box::new(make),
            privileged: true,
        })
    }

    pub fn privileged(&self) -> bool {
        self.0.privileged()
    }

    pub fn id(&self) -> &str {
        self.0.id()
    }

    pub fn make(&self, seed: u64) -> Box<dyn Policy> {
        self.0.make(seed)
    }

    pub fn ptr_eq(&self, other: &PolicyHandle) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl fmt::Debug for PolicyHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolicyHandle({})", self.id())
    }
}

type MakeFn = Box<dyn Fn(u64) -> Box<dyn Policy> + Send + Sync>;

struct FnFactory {
    id: String,
    make: MakeFn,
    privileged: bool,
}

impl PolicyFactory for FnFactory {
    fn id(&self) -> &str {
        &self.id
    }

    fn make(&self, seed: u64) -> Box<dyn Policy> {
        (self.make)(seed)
    }

    fn privileged(&self) -> bool {
        self.privileged
    }
}

/// Uniformly random actions.
pub struct RandomPolicy {
    rng: CounterRng,
    t: u32,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: CounterRng::new(seed),
            t: 0,
        }
    }

    pub fn handle() -> PolicyHandle {
        PolicyHandle::from_fn("random", |seed| Box::new(RandomPolicy::new(seed)))
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, view: &PlayerView<'_>) -> usize {
        self.t += 1;
        self.rng
            .below(Stream::Policy, 0, self.t, 0, view.num_actions as u64) as usize
    }
}

pub struct NoopPolicy;

impl NoopPolicy {
    pub fn handle() -> PolicyHandle {
        PolicyHandle::from_fn("noop", |_| Box::new(NoopPolicy))
    }
}

impl Policy for NoopPolicy {
    fn act(&mut self, _view: &PlayerView<'_>) -> usize {
        0
    }
}

/// Replays a fixed action list, then issues no-ops.
pub struct ScriptedPolicy {
    script: Arc<Vec<usize>>,
    t: usize,
}

impl ScriptedPolicy {
    pub fn handle(id: impl Into<String>, script: Vec<usize>) -> PolicyHandle {
        let script = Arc::new(script);
        PolicyHandle::from_fn(id, move |_| {
            Box::new(ScriptedPolicy {
                script: Arc::clone(&script),
                t: 0,
            })
        })
    }
}

impl Policy for ScriptedPolicy {
    fn act(&mut self, _view: &PlayerView<'_>) -> usize {
        let a = self.script.get(self.t).copied().unwrap_or(0);
        self.t += 1;
        a
    }
}

/// A distribution over policies.
#[derive(Clone, Debug)]
pub struct Population {
    entries: Vec<(PolicyHandle, f64)>,
}

impl Population {
    pub fn new(entries: Vec<(PolicyHandle, f64)>) -> Result<Self, ProtocolError> {
        if entries.is_empty() {
            return Err(ProtocolError::EmptyPopulation);
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if entries.iter().any(|e| !(e.1 >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(ProtocolError::Weights(total));
        }
        Ok(Self { entries })
    }

    /// Single policy with weight 1.
    pub fn single(handle: PolicyHandle) -> Self {
        Self {
            entries: vec![(handle, 1.0)],
        }
    }

    /// Equal weights.
    pub fn uniform(handles: Vec<PolicyHandle>) -> Result<Self, ProtocolError> {
        let w = 1.0 / handles.len().max(1) as f64;
        let mut entries: Vec<_> = handles.into_iter().map(|h| (h, w)).collect();
        // Absorb rounding so the weights sum to one.
        let rest = w * entries.len().saturating_sub(1) as f64;
        if let Some(last) = entries.last_mut() {
            last.1 = 1.0 - rest;
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(PolicyHandle, f64)] {
        &self.entries
    }

    /// `n` independent draws with replacement.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<PolicyHandle> {
        let dist = WeightedIndex::new(self.entries.iter().map(|e| e.1)).expect("validated weights");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| self.entries[dist.sample(&mut rng)].0.clone())
            .collect()
    }
}

/// `n` policies sampled independently from `f`.
pub fn sample_joint_policy(f: &Population, n: usize, seed: u64) -> Vec<PolicyHandle> {
    f.sample(n, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Resident,
    Visitor,
    HalfAndHalf,
    Universalization,
}

impl Mode {
    /// The non-universalization mode implied by a focal vector.
    pub fn implied(c: &[bool]) -> Mode {
        let ones = c.iter().filter(|x| **x).count();
        let zeros = c.len() - ones;
        match ones.cmp(&zeros) {
            std::cmp::Ordering::Greater => Mode::Resident,
            std::cmp::Ordering::Less => Mode::Visitor,
            std::cmp::Ordering::Equal => Mode::HalfAndHalf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundEntry {
    pub bot: String,
    pub weight: f64,
}

/// A scenario file entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    pub substrate: String,
    #[serde(default)]
    pub description: String,
    pub mode: Mode,
    /// c: 1 marks a focal seat.
    pub focal: Vec<u8>,
    #[serde(default)]
    pub background: Vec<BackgroundEntry>,
    /// Default episode count for evaluations.
    #[serde(default)]
    pub episodes: Option<u32>,
}

impl ScenarioConfig {
    pub fn focal_mask(&self) -> Vec<bool> {
        self.focal.iter().map(|&x| x != 0).collect()
    }
}

/// A substrate reduced to its focal seats.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub substrate: Arc<Substrate>,
    pub background: Option<Population>,
}

impl Scenario {
    /// Validate a configuration against its substrate and background.
    pub fn build(
        config: ScenarioConfig,
        substrate: Arc<Substrate>,
        background: Option<Population>,
    ) -> Result<Self, ProtocolError> {
        let n = substrate.players();
        if config.focal.len() != n {
            return Err(ProtocolError::FocalLength {
                found: config.focal.len(),
                expected: n,
            });
        }
        let c = config.focal_mask();
        let m = c.iter().filter(|x| **x).count();
        if m == 0 {
            return Err(ProtocolError::NoFocal);
        }
        match config.mode {
            Mode::Universalization => {
                if m != n {
                    return Err(ProtocolError::ModeMismatch {
                        declared: config.mode,
                        implied: Mode::implied(&c),
                    });
                }
                if background.is_some() {
                    return Err(ProtocolError::Background("universalization takes no"));
                }
            }
            declared => {
                let implied = Mode::implied(&c);
                if declared != implied {
                    return Err(ProtocolError::ModeMismatch { declared, implied });
                }
                if m < n && background.is_none() {
                    return Err(ProtocolError::Background("missing"));
                }
            }
        }
        Ok(Self {
            config,
            substrate,
            background,
        })
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    /// Number of focal seats m.
    pub fn focal_seats(&self) -> usize {
        self.config.focal.iter().filter(|&&x| x != 0).count()
    }

    /// Focal policies for one episode: m independent draws from `f`, or a
    /// single draw copied to every seat in universalization mode.
    pub fn sample_focal(&self, f: &Population, seed: u64) -> Vec<PolicyHandle> {
        let m = self.focal_seats();
        match self.mode() {
            Mode::Universalization => {
                let one = f.sample(1, seed).pop().expect("one draw");
                vec![one; m]
            }
            _ => f.sample(m, seed),
        }
    }

    /// Player index for each seat of the focal vector, shuffled within the
    /// substrate's seat groups.
    pub fn seat_assignment(&self, seed: u64) -> Vec<usize> {
        let rng = CounterRng::new(seed);
        let n = self.substrate.players();
        let mut seats = vec![0; n];
        for (g, group) in self.substrate.seat_groups().iter().enumerate() {
            let mut players = group.clone();
            rng.shuffle(Stream::SeatShuffle, g as u64, &mut players);
            for (&seat, &player) in group.iter().zip(&players) {
                seats[seat] = player;
            }
        }
        seats
    }
}

/// Per-episode record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scenario: String,
    pub seed: u64,
    /// Focal flag per player (after seat shuffling).
    pub focal: Vec<bool>,
    pub returns: Vec<f64>,
    pub policies: Vec<String>,
    pub steps: u32,
    pub event_counts: BTreeMap<String, u64>,
    /// SHA-256 over the serialized event log.
    pub event_digest: String,
    /// SHA-256 over the final state.
    pub state_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    #[serde(skip)]
    pub events: Vec<Event>,
}

impl EpisodeResult {
    /// Mean return over focal players.
    pub fn focal_per_capita(&self) -> Result<f64, ProtocolError> {
        per_capita(&self.returns, &self.focal, true).ok_or(ProtocolError::NoFocal)
    }

    /// Mean return over background players.
    pub fn background_per_capita(&self) -> Result<f64, ProtocolError> {
        per_capita(&self.returns, &self.focal, false).ok_or(ProtocolError::NoBackground)
    }

    pub fn background_returns(&self) -> Vec<f64> {
        self.returns
            .iter()
            .zip(&self.focal)
            .filter(|(_, f)| !**f)
            .map(|(r, _)| *r)
            .collect()
    }
}

/// A live episode of a scenario with background seats driven internally.
pub struct Episode {
    scenario: Arc<Scenario>,
    seed: u64,
    state: GridState,
    focal: Vec<bool>,
    /// Focal players in seat order.
    focal_players: Vec<usize>,
    background: Vec<Option<Box<dyn Policy>>>,
    policies: Vec<String>,
    returns: Vec<f64>,
    prev_events: std::ops::Range<usize>,
    actions: Vec<usize>,
}

impl Episode {
    pub fn new(scenario: Arc<Scenario>, seed: u64) -> Self {
        let state = scenario.substrate.reset(seed);
        let n = state.num_players();
        let seats = scenario.seat_assignment(seed);
        let c = scenario.config.focal_mask();
        let rng = CounterRng::new(seed);
        let mut focal = vec![false; n];
        let mut focal_players = Vec::new();
        let mut background: Vec<Option<Box<dyn Policy>>> = (0..n).map(|_| None).collect();
        let mut policies = vec![String::new(); n];
        let bg_seats: Vec<usize> = (0..n).filter(|&s| !c[s]).collect();
        let draws = match &scenario.background {
            Some(pop) if !bg_seats.is_empty() => {
                pop.sample(bg_seats.len(), rng.derive(Stream::Background, 0))
            }
            _ => Vec::new(),
        };
        for s in 0..n {
            let p = seats[s];
            if c[s] {
                focal[p] = true;
                focal_players.push(p);
            }
        }
        for (k, &s) in bg_seats.iter().enumerate() {
            let p = seats[s];
            let h = &draws[k];
            policies[p] = h.id().to_string();
            background[p] = Some(h.make(rng.derive(Stream::Policy, p as u64)));
        }
        Self {
            scenario,
            seed,
            state,
            focal,
            focal_players,
            background,
            policies,
            returns: vec![0.0; n],
            prev_events: 0..0,
            actions: vec![0; n],
        }
    }

    pub fn state(&self) -> &GridState {
        &self.state
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    /// Player indices of the focal seats.
    pub fn focal_players(&self) -> &[usize] {
        &self.focal_players
    }

    pub fn is_done(&self) -> bool {
        self.state.is_done()
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn observe_focal(&self) -> Vec<Observation> {
        self.focal_players
            .iter()
            .map(|&p| observe(&self.state, p).expect("valid player"))
            .collect()
    }

    /// Events emitted by the most recent step.
    pub fn last_events(&self) -> &[Event] {
        &self.state.events()[self.prev_events.clone()]
    }

    /// Advance one step. `focal_actions` is in focal-seat order.
    pub fn step(&mut self, focal_actions: &[usize]) -> Result<Vec<f64>, ProtocolError> {
        if focal_actions.len() != self.focal_players.len() {
            return Err(ProtocolError::FocalArity {
                found: focal_actions.len(),
                expected: self.focal_players.len(),
            });
        }
        if self.state.is_done() {
            return Err(GridError::EpisodeFinished(self.state.step_count()).into());
        }
        let limit = self.state.substrate().num_actions();
        for (k, &a) in focal_actions.iter().enumerate() {
            if a >= limit {
                return Err(GridError::IllegalAction {
                    player: self.focal_players[k],
                    action: a,
                    limit,
                }
                .into());
            }
            self.actions[self.focal_players[k]] = a;
        }
        let events = &self.state.events()[self.prev_events.clone()];
        for (p, slot) in self.background.iter_mut().enumerate() {
            if let Some(policy) = slot {
                let view = PlayerView::new(&self.state, p, events, true);
                self.actions[p] = policy.act(&view);
            }
        }
        let out = self.state.step(&self.actions)?;
        for (r, x) in self.returns.iter_mut().zip(&out.rewards) {
            *r += x;
        }
        self.prev_events = out.events;
        Ok(self.focal_players.iter().map(|&p| out.rewards[p]).collect())
    }

    pub fn finish(self, aborted: Option<String>) -> EpisodeResult {
        let mut counts = BTreeMap::new();
        for e in self.state.events() {
            *counts.entry(e.kind.as_str().to_string()).or_insert(0) += 1;
        }
        let mut policies = self.policies;
        for &p in &self.focal_players {
            if policies[p].is_empty() {
                policies[p] = "focal".into();
            }
        }
        EpisodeResult {
            scenario: self.scenario.id().to_string(),
            seed: self.seed,
            focal: self.focal,
            returns: self.returns,
            policies,
            steps: self.state.step_count(),
            event_counts: counts,
            event_digest: event_digest(self.state.events()),
            state_digest: self.state.digest(),
            aborted,
            events: self.state.events().to_vec(),
        }
    }
}

pub fn event_digest(events: &[Event]) -> String {
    use sha2::{Digest, Sha256};
    let bytes = serde_json::to_vec(events).expect("events serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Play one episode with the given focal policies (one per focal seat).
///
/// A policy returning an out-of-range action aborts the episode; the
/// result carries the diagnostic and the returns accumulated so far.
pub fn run_episode(
    scenario: &Arc<Scenario>,
    focal: &[PolicyHandle],
    seed: u64,
) -> Result<EpisodeResult, ProtocolError> {
    run_episode_observed(scenario, focal, seed, |_| {})
}

/// `run_episode`, calling `observe` on the initial state and after every step.
pub fn run_episode_observed(
    scenario: &Arc<Scenario>,
    focal: &[PolicyHandle],
    seed: u64,
    mut observe: impl FnMut(&GridState),
) -> Result<EpisodeResult, ProtocolError> {
    let m = scenario.focal_seats();
    if focal.len() != m {
        return Err(ProtocolError::FocalArity {
            found: focal.len(),
            expected: m,
        });
    }
    let mut ep = Episode::new(Arc::clone(scenario), seed);
    let rng = CounterRng::new(seed);
    let players = ep.focal_players.clone();
    let mut focal_policies: Vec<Box<dyn Policy>> = focal
        .iter()
        .zip(&players)
        .map(|(h, &p)| h.make(rng.derive(Stream::Policy, 1000 + p as u64)))
        .collect();
    for (h, &p) in focal.iter().zip(&players) {
        ep.policies[p] = h.id().to_string();
    }
    let limit = ep.state.substrate().num_actions();
    let mut actions = vec![0; m];
    observe(&ep.state);
    while !ep.is_done() {
        let events = ep.last_events();
        for (k, policy) in focal_policies.iter_mut().enumerate() {
            let privileged = focal[k].privileged();
            let seen = if privileged { events } else { &[] };
            let view = PlayerView::new(&ep.state, players[k], seen, privileged);
            actions[k] = policy.act(&view);
        }
        if let Some(k) = actions.iter().position(|&a| a >= limit) {
            let msg = format!(
                "policy `{}` (player {}) returned action {} at step {}; substrate has {} actions",
                focal[k].id(),
                players[k],
                actions[k],
                ep.state.step_count(),
                limit
            );
            return Ok(ep.finish(Some(msg)));
        }
        ep.step(&actions)?;
        observe(&ep.state);
    }
    Ok(ep.finish(None))
}

/// Engine ABI tag for foreign bindings built on [`Session`].
pub const ABI_VERSION: u32 = 1;

/// Output of one session step.
#[derive(Clone, Debug)]
pub struct SessionStep {
    pub observations: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub events: Vec<Event>,
}

/// Reset/step/close loop over one episode, controlling only focal seats.
pub struct Session {
    episode: Option<Episode>,
}

impl Session {
    pub fn reset(scenario: Arc<Scenario>, seed: u64) -> (Self, Vec<Observation>) {
        let episode = Episode::new(scenario, seed);
        let obs = episode.observe_focal();
        (
            Self {
                episode: Some(episode),
            },
            obs,
        )
    }

    pub fn focal_seats(&self) -> usize {
        self.episode.as_ref().map_or(0, |e| e.focal_players.len())
    }

    pub fn num_actions(&self) -> usize {
        self.episode
            .as_ref()
            .map_or(0, |e| e.state.substrate().num_actions())
    }

    pub fn is_open(&self) -> bool {
        self.episode.is_some()
    }

    pub fn step(&mut self, actions: &[usize]) -> Result<SessionStep, ProtocolError> {
        let ep = self.episode.as_mut().ok_or(ProtocolError::Closed)?;
        let rewards = ep.step(actions)?;
        Ok(SessionStep {
            observations: ep.observe_focal(),
            rewards,
            done: ep.is_done(),
            events: ep.last_events().to_vec(),
        })
    }

    /// Returns accumulated so far per player.
    pub fn returns(&self) -> Result<&[f64], ProtocolError> {
        Ok(self.episode.as_ref().ok_or(ProtocolError::Closed)?.returns())
    }

    /// End the session and return the episode record.
    pub fn close(&mut self) -> Result<EpisodeResult, ProtocolError> {
        let ep = self.episode.take().ok_or(ProtocolError::Closed)?;
        Ok(ep.finish(None))
    }
}

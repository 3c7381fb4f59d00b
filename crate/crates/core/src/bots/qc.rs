//! Quality control: run a candidate bot with fixed partners and check that
//! its event log shows the behaviour it was built for.

use super::puppet::{EventPattern, Who};
use crate::grid::{Event, EventKind, Stream, CounterRng};
use crate::protocol::{PlayerView, PolicyHandle};
use crate::substrate::Substrate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

pub const MIN_EPISODES: u32 = 10;
pub const MAX_EPISODES: u32 = 30;

fn me() -> Who {
    Who::Me
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcError {
    #[error("QC needs {MIN_EPISODES}..={MAX_EPISODES} episodes, got {0}")]
    Episodes(u32),
    #[error("seat {seat} out of range for {players} players")]
    Seat { seat: usize, players: usize },
}

/// Acceptance rule over the candidate's events, aggregated over episodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// Among the candidate's `event`s, the share matching `payload` is at
    /// least `min_share`, and there are at least `min_per_episode` of them
    /// per episode on average.
    EventShare {
        event: EventKind,
        #[serde(default)]
        payload: BTreeMap<String, f64>,
        min_share: f64,
        #[serde(default)]
        min_per_episode: f64,
    },
    /// Mean count per episode of events matching the pattern is at least `min`.
    MinPerEpisode {
        event: EventKind,
        #[serde(default = "me")]
        actor: Who,
        #[serde(default)]
        target: Who,
        #[serde(default)]
        payload: BTreeMap<String, f64>,
        min: f64,
    },
    /// Total count of matching events over all episodes is at most `max`.
    MaxTotal {
        event: EventKind,
        #[serde(default = "me")]
        actor: Who,
        #[serde(default)]
        target: Who,
        #[serde(default)]
        payload: BTreeMap<String, f64>,
        max: f64,
    },
    /// Every `response` event is preceded by at least `at_least` `stimulus`
    /// events in the `within` steps before it (or at any earlier step).
    Contingent {
        response: EventPattern,
        stimulus: EventPattern,
        #[serde(default)]
        within: Option<u32>,
        #[serde(default = "one")]
        at_least: u32,
    },
    All { of: Vec<Criterion> },
}

fn one() -> u32 {
    1
}

fn pattern(event: EventKind, actor: Who, target: Who, payload: &BTreeMap<String, f64>) -> EventPattern {
    EventPattern {
        event,
        actor,
        target,
        payload: payload.clone(),
    }
}

impl Criterion {
    /// Verdict and, on failure, the failing statistics.
    pub fn evaluate(&self, logs: &[Vec<Event>], me: usize) -> (bool, Vec<String>) {
        let episodes = logs.len().max(1) as f64;
        let count = |p: &EventPattern| -> usize {
            logs.iter()
                .map(|l| l.iter().filter(|e| p.matches(e, me)).count())
                .sum()
        };
        match self {
            Criterion::EventShare {
                event,
                payload,
                min_share,
                min_per_episode,
            } => {
                let all = count(&pattern(*event, Who::Me, Who::Any, &BTreeMap::new()));
                let hit = count(&pattern(*event, Who::Me, Who::Any, payload));
                let share = if all == 0 { 0.0 } else { hit as f64 / all as f64 };
                let rate = all as f64 / episodes;
                let mut fails = Vec::new();
                if all == 0 || share < *min_share {
                    fails.push(format!("{event} share {share:.3} < {min_share} ({hit}/{all})"));
                }
                if rate < *min_per_episode {
                    fails.push(format!("{event} per episode {rate:.2} < {min_per_episode}"));
                }
                (fails.is_empty(), fails)
            }
            Criterion::MinPerEpisode {
                event,
                actor,
                target,
                payload,
                min,
            } => {
                let rate = count(&pattern(*event, *actor, *target, payload)) as f64 / episodes;
                if rate >= *min {
                    (true, vec![])
                } else {
                    (false, vec![format!("{event} per episode {rate:.2} < {min}")])
                }
            }
            Criterion::MaxTotal {
                event,
                actor,
                target,
                payload,
                max,
            } => {
                let n = count(&pattern(*event, *actor, *target, payload)) as f64;
                if n <= *max {
                    (true, vec![])
                } else {
                    (false, vec![format!("{event} total {n} > {max}")])
                }
            }
            Criterion::Contingent {
                response,
                stimulus,
                within,
                at_least,
            } => {
                let mut responses = 0;
                let mut unprompted = 0;
                for log in logs {
                    let stim: Vec<u32> = log
                        .iter()
                        .filter(|e| stimulus.matches(e, me))
                        .map(|e| e.step)
                        .collect();
                    for e in log.iter().filter(|e| response.matches(e, me)) {
                        responses += 1;
                        let lo = within.map_or(0, |w| e.step.saturating_sub(w));
                        let n = stim.iter().filter(|&&s| s >= lo && s < e.step).count();
                        if n < *at_least as usize {
                            unprompted += 1;
                        }
                    }
                }
                if unprompted == 0 {
                    (true, vec![])
                } else {
                    (
                        false,
                        vec![format!(
                            "{unprompted} of {responses} {} events lacked a preceding {}",
                            response.event, stimulus.event
                        )],
                    )
                }
            }
            Criterion::All { of } => {
                let mut ok = true;
                let mut fails = Vec::new();
                for c in of {
                    let (pass, f) = c.evaluate(logs, me);
                    ok &= pass;
                    fails.extend(f);
                }
                (ok, fails)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QcReport {
    pub candidate: String,
    pub substrate: String,
    pub episodes: u32,
    pub seat: usize,
    /// Per episode, counts of events the candidate acted in, by kind.
    pub per_episode: Vec<BTreeMap<String, u64>>,
    pub criterion: Criterion,
    pub verdict: Verdict,
    pub failures: Vec<String>,
}

/// Run `episodes` seeded episodes with the candidate in `seat` and the
/// partners filling the remaining seats in order (cycling). With no
/// partners, every seat plays the candidate.
pub fn qc_run(
    candidate: &PolicyHandle,
    substrate: &Arc<Substrate>,
    partners: &[PolicyHandle],
    seat: usize,
    episodes: u32,
    criterion: &Criterion,
    seed: u64,
) -> Result<QcReport, QcError> {
    if !(MIN_EPISODES..=MAX_EPISODES).contains(&episodes) {
        return Err(QcError::Episodes(episodes));
    }
    let n = substrate.players();
    if seat >= n {
        return Err(QcError::Seat { seat, players: n });
    }
    let roster: Vec<PolicyHandle> = (0..n)
        .map(|p| {
            if p == seat || partners.is_empty() {
                candidate.clone()
            } else {
                let k = if p < seat { p } else { p - 1 };
                partners[k % partners.len()].clone()
            }
        })
        .collect();
    let base = CounterRng::new(seed);
    let logs: Vec<Vec<Event>> = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let ep_seed = base.derive(Stream::Background, e as u64);
            play(substrate, &roster, ep_seed)
        })
        .collect();
    let per_episode = logs
        .iter()
        .map(|log| {
            let mut m = BTreeMap::new();
            for ev in log.iter().filter(|ev| ev.actor == Some(seat)) {
                *m.entry(ev.kind.as_str().to_string()).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let (ok, failures) = criterion.evaluate(&logs, seat);
    Ok(QcReport {
        candidate: candidate.id().to_string(),
        substrate: substrate.id().to_string(),
        episodes,
        seat,
        per_episode,
        criterion: criterion.clone(),
        verdict: if ok { Verdict::Accept } else { Verdict::Reject },
        failures,
    })
}

/// One episode with every seat driven by a privileged policy; returns the
/// event log.
pub fn play(substrate: &Arc<Substrate>, roster: &[PolicyHandle], seed: u64) -> Vec<Event> {
    let mut state = substrate.reset(seed);
    let rng = CounterRng::new(seed);
    let mut policies: Vec<_> = roster
        .iter()
        .enumerate()
        .map(|(p, h)| h.make(rng.derive(Stream::Policy, p as u64)))
        .collect();
    let mut actions = vec![0; roster.len()];
    let mut prev = 0..0;
    while !state.is_done() {
        let events = &state.events()[prev.clone()];
        for (p, policy) in policies.iter_mut().enumerate() {
            let view = PlayerView::new(&state, p, events, true);
            actions[p] = policy.act(&view);
        }
        prev = state.step(&actions).expect("bots return legal actions").events;
    }
    state.events().to_vec()
}

//! Event-driven puppets: "if this event, run that behaviour".

use super::behavior::{act, Behavior, Ctx};
use crate::grid::{CounterRng, Event, EventKind};
use crate::protocol::{Policy, PlayerView};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

/// Who an event field must name, relative to the observing player.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Who {
    #[default]
    Any,
    Me,
    Other,
    Nobody,
}

impl Who {
    pub fn matches(self, field: Option<usize>, me: usize) -> bool {
        match self {
            Who::Any => true,
            Who::Me => field == Some(me),
            Who::Other => field.is_some_and(|p| p != me),
            Who::Nobody => field.is_none(),
        }
    }
}

/// Matches events by kind, actor, target and exact payload values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventPattern {
    pub event: EventKind,
    #[serde(default)]
    pub actor: Who,
    #[serde(default)]
    pub target: Who,
    #[serde(default)]
    pub payload: BTreeMap<String, f64>,
}

impl EventPattern {
    pub fn new(event: EventKind) -> Self {
        Self {
            event,
            actor: Who::Any,
            target: Who::Any,
            payload: BTreeMap::new(),
        }
    }

    pub fn actor(mut self, who: Who) -> Self {
        self.actor = who;
        self
    }

    pub fn target(mut self, who: Who) -> Self {
        self.target = who;
        self
    }

    pub fn payload(mut self, key: &str, value: f64) -> Self {
        self.payload.insert(key.to_string(), value);
        self
    }

    pub fn matches(&self, e: &Event, me: usize) -> bool {
        e.kind == self.event
            && self.actor.matches(e.actor, me)
            && self.target.matches(e.target, me)
            && self.payload.iter().all(|(k, v)| e.get(k) == Some(*v))
    }
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trigger {
    /// At least `at_least` matching events, within the last `within` steps
    /// if given. A latched trigger stays true once it fired.
    Event {
        event: EventKind,
        #[serde(default)]
        actor: Who,
        #[serde(default)]
        target: Who,
        #[serde(default)]
        payload: BTreeMap<String, f64>,
        #[serde(default)]
        within: Option<u32>,
        #[serde(default = "one")]
        at_least: u32,
        #[serde(default)]
        latch: bool,
    },
    StepAtLeast { step: u32 },
    All { of: Vec<Trigger> },
    Any { of: Vec<Trigger> },
    Not { of: Box<Trigger> },
}

impl Trigger {
    pub fn on(pattern: EventPattern) -> Self {
        Trigger::Event {
            event: pattern.event,
            actor: pattern.actor,
            target: pattern.target,
            payload: pattern.payload,
            within: None,
            at_least: 1,
            latch: false,
        }
    }

    pub fn within(mut self, steps: u32) -> Self {
        if let Trigger::Event { within, .. } = &mut self {
            *within = Some(steps);
        }
        self
    }

    pub fn at_least(mut self, n: u32) -> Self {
        if let Trigger::Event { at_least, .. } = &mut self {
            *at_least = n;
        }
        self
    }

    pub fn latched(mut self) -> Self {
        if let Trigger::Event { latch, .. } = &mut self {
            *latch = true;
        }
        self
    }
}

/// Mutable evaluation state mirroring a trigger tree.
#[derive(Clone, Debug)]
enum TriggerState {
    Event {
        pattern: EventPattern,
        within: Option<u32>,
        at_least: u32,
        latch: bool,
        steps: VecDeque<u32>,
        total: u64,
        fired: bool,
    },
    StepAtLeast(u32),
    All(Vec<TriggerState>),
    Any(Vec<TriggerState>),
    Not(Box<TriggerState>),
}

impl TriggerState {
    fn new(t: &Trigger) -> Self {
        match t {
            Trigger::Event {
                event,
                actor,
                target,
                payload,
                within,
                at_least,
                latch,
            } => TriggerState::Event {
                pattern: EventPattern {
                    event: *event,
                    actor: *actor,
                    target: *target,
                    payload: payload.clone(),
                },
                within: *within,
                at_least: *at_least,
                latch: *latch,
                steps: VecDeque::new(),
                total: 0,
                fired: false,
            },
            Trigger::StepAtLeast { step } => TriggerState::StepAtLeast(*step),
            Trigger::All { of } => TriggerState::All(of.iter().map(Self::new).collect()),
            Trigger::Any { of } => TriggerState::Any(of.iter().map(Self::new).collect()),
            Trigger::Not { of } => TriggerState::Not(Box::new(Self::new(of))),
        }
    }

    fn observe(&mut self, events: &[Event], me: usize) {
        match self {
            TriggerState::Event {
                pattern,
                within,
                steps,
                total,
                ..
            } => {
                for e in events {
                    if pattern.matches(e, me) {
                        *total += 1;
                        if within.is_some() {
                            steps.push_back(e.step);
                        }
                    }
                }
            }
            TriggerState::StepAtLeast(_) => {}
            TriggerState::All(ts) | TriggerState::Any(ts) => {
                ts.iter_mut().for_each(|t| t.observe(events, me))
            }
            TriggerState::Not(t) => t.observe(events, me),
        }
    }

    /// Truth value at decision step `now`, with events up to `now - 1` seen.
    fn eval(&mut self, now: u32) -> bool {
        match self {
            TriggerState::Event {
                within,
                at_least,
                latch,
                steps,
                total,
                fired,
                ..
            } => {
                if *fired {
                    return true;
                }
                let count = match within {
                    Some(w) => {
                        let cutoff = now.saturating_sub(*w);
                        while steps.front().is_some_and(|&s| s < cutoff) {
                            steps.pop_front();
                        }
                        steps.len() as u64
                    }
                    None => *total,
                };
                let on = count >= *at_least as u64;
                if on && *latch {
                    *fired = true;
                }
                on
            }
            TriggerState::StepAtLeast(s) => now >= *s,
            TriggerState::All(ts) => ts.iter_mut().fold(true, |acc, t| t.eval(now) && acc),
            TriggerState::Any(ts) => ts.iter_mut().fold(false, |acc, t| t.eval(now) || acc),
            TriggerState::Not(t) => !t.eval(now),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub when: Trigger,
    pub run: Behavior,
}

/// Ordered rules plus a default behaviour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PuppetSpec {
    pub default: Behavior,
    #[serde(default, rename = "rule")]
    pub rules: Vec<Rule>,
}

pub struct PuppetPolicy {
    spec: Arc<PuppetSpec>,
    triggers: Vec<TriggerState>,
    rng: CounterRng,
    tick: u32,
    active: usize,
}

impl PuppetPolicy {
    pub fn new(spec: Arc<PuppetSpec>, seed: u64) -> Self {
        let triggers = spec.rules.iter().map(|r| TriggerState::new(&r.when)).collect();
        Self {
            spec,
            triggers,
            rng: CounterRng::new(seed),
            tick: 0,
            active: usize::MAX,
        }
    }

    /// Feed events and pick the behaviour for step `now`: the first rule
    /// whose trigger holds, else the default. Every trigger is evaluated so
    /// latches and windows stay current.
    pub fn select(&mut self, events: &[Event], me: usize, now: u32) -> &Behavior {
        let mut chosen = None;
        for (i, t) in self.triggers.iter_mut().enumerate() {
            t.observe(events, me);
            if t.eval(now) && chosen.is_none() {
                chosen = Some(i);
            }
        }
        self.active = chosen.unwrap_or(usize::MAX);
        match chosen {
            Some(i) => &self.spec.rules[i].run,
            None => &self.spec.default,
        }
    }

    /// Index of the rule that was active on the last step, if any.
    pub fn active_rule(&self) -> Option<usize> {
        (self.active != usize::MAX).then_some(self.active)
    }
}

impl Policy for PuppetPolicy {
    fn act(&mut self, view: &PlayerView<'_>) -> usize {
        let Some(state) = view.state() else { return 0 };
        let behavior = self.select(view.events(), view.player, view.step).clone();
        self.tick += 1;
        let ctx = Ctx {
            state,
            me: view.player,
            rng: &self.rng,
            tick: self.tick,
        };
        act(&behavior, &ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(kind: EventKind, actor: usize, step: u32) -> Event {
        Event::new(kind, step).actor(actor)
    }

    #[test]
    fn window_expires() {
        let t = Trigger::on(EventPattern::new(EventKind::PlayerCleaned).actor(Who::Other)).within(5);
        let mut s = TriggerState::new(&t);
        s.observe(&[ev(EventKind::PlayerCleaned, 1, 10)], 0);
        assert!(s.eval(11));
        assert!(s.eval(15));
        assert!(!s.eval(16));
    }

    #[test]
    fn own_events_do_not_match_other() {
        let p = EventPattern::new(EventKind::PlayerCleaned).actor(Who::Other);
        assert!(!p.matches(&ev(EventKind::PlayerCleaned, 3, 0), 3));
        assert!(p.matches(&ev(EventKind::PlayerCleaned, 2, 0), 3));
    }

    #[test]
    fn latch_holds() {
        let p = EventPattern::new(EventKind::PartnerPlayed)
            .actor(Who::Me)
            .payload("strategy", 1.0);
        let t = Trigger::on(p).at_least(2).latched().within(3);
        let mut s = TriggerState::new(&t);
        let defect = |step| {
            Event::new(EventKind::PartnerPlayed, step)
                .actor(0)
                .with("strategy", 1.0)
        };
        s.observe(&[defect(1)], 0);
        assert!(!s.eval(2));
        s.observe(&[defect(2)], 0);
        assert!(s.eval(3));
        assert!(s.eval(500));
    }
}

//! Commons Harvest, Clean Up and Allelopathic Harvest.

use crate::grid::{BeamHit, BeamKind, EventKind, GridMap, Item, Stream, World};
use crate::substrate::Rules;
use serde::{Deserialize, Serialize};

/// Regrowth probability by apple count in the neighborhood (0, 1, 2, ≥3).
pub const REGROWTH: [f64; 4] = [0.0, 0.001, 0.005, 0.025];

pub fn regrowth_probability(neighbors: usize) -> f64 {
    REGROWTH[neighbors.min(3)]
}

fn default_regrowth() -> [f64; 4] {
    REGROWTH
}

fn default_radius2() -> i32 {
    4
}

fn default_commons_zap() -> u32 {
    25
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommonsSpec {
    #[serde(default = "default_regrowth")]
    pub regrowth: [f64; 4],
    /// Squared L2 radius of the regrowth neighborhood.
    #[serde(default = "default_radius2")]
    pub radius2: i32,
    #[serde(default = "default_commons_zap")]
    pub zap_removal: u32,
}

impl Default for CommonsSpec {
    fn default() -> Self {
        Self {
            regrowth: REGROWTH,
            radius2: default_radius2(),
            zap_removal: default_commons_zap(),
        }
    }
}

fn remove_zapped(world: &mut World, p: usize, hits: &[BeamHit], duration: u32) {
    for hit in hits {
        if let BeamHit::Avatar(q) = *hit {
            if world.is_active(q) {
                let ev = world.event(EventKind::PlayerZapped).actor(p).target(q);
                world.emit(ev);
                world.remove(q, Some(duration));
            }
        }
    }
}

fn eat_apple(world: &mut World, p: usize, idx: usize) {
    if world.items[idx] == Item::Apple {
        world.set_item(idx, Item::Empty);
        world.reward(p, 1.0);
        let ev = world.event(EventKind::AppleEaten).actor(p).at(world.pos(idx));
        world.emit(ev);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CommonsRules {
    spec: CommonsSpec,
    /// Cells that can hold apples, in row-major order.
    #[serde(skip)]
    sites: Vec<usize>,
    /// For each site, the other sites within the regrowth radius.
    #[serde(skip)]
    neighbors: Vec<Vec<usize>>,
    #[serde(skip)]
    grow: Vec<usize>,
}

impl CommonsRules {
    pub fn new(spec: CommonsSpec, world: &World) -> Self {
        let sites: Vec<usize> = (0..world.cell_count())
            .filter(|&i| world.items[i] == Item::Apple)
            .collect();
        let r = (spec.radius2 as f64).sqrt() as i32;
        let mut is_site = vec![false; world.cell_count()];
        for &s in &sites {
            is_site[s] = true;
        }
        let neighbors = sites
            .iter()
            .map(|&s| {
                let c = world.pos(s);
                let mut out = Vec::new();
                for dr in -r..=r {
                    for dc in -r..=r {
                        let d2 = dr * dr + dc * dc;
                        let q = c.offset(dr, dc);
                        if d2 == 0 || d2 > spec.radius2 || !world.in_bounds(q) {
                            continue;
                        }
                        let qi = world.idx(q);
                        if is_site[qi] {
                            out.push(qi);
                        }
                    }
                }
                out
            })
            .collect();
        Self {
            spec,
            sites,
            neighbors,
            grow: Vec::new(),
        }
    }

    pub fn spec(&self) -> &CommonsSpec {
        &self.spec
    }

    /// Apple sites (cells holding an apple at episode start).
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    /// Apples within the regrowth radius of `cell`, not counting the cell.
    pub fn apples_near(&self, world: &World, cell: usize) -> usize {
        let c = world.pos(cell);
        let r = (self.spec.radius2 as f64).sqrt() as i32;
        let mut n = 0;
        for dr in -r..=r {
            for dc in -r..=r {
                let d2 = dr * dr + dc * dc;
                let q = c.offset(dr, dc);
                if d2 > 0 && d2 <= self.spec.radius2 && world.in_bounds(q) && world.item_at(q) == Item::Apple {
                    n += 1;
                }
            }
        }
        n
    }

    /// Apples currently within the regrowth radius of site number `k`.
    pub fn neighbor_apples(&self, world: &World, k: usize) -> usize {
        self.neighbors[k]
            .iter()
            .filter(|&&q| world.items[q] == Item::Apple)
            .count()
    }
}

impl Rules for CommonsRules {
    fn on_enter(&mut self, world: &mut World, p: usize, idx: usize) {
        if world.items[idx] == Item::Apple {
            let left = self.apples_near(world, idx);
            eat_apple(world, p, idx);
            if let Some(ev) = world.events.last_mut() {
                ev.payload.push(("neighbors", left as f64));
            }
        }
    }

    fn on_beam(&mut self, world: &mut World, p: usize, kind: BeamKind, hits: &[BeamHit]) {
        if kind == BeamKind::Zap {
            remove_zapped(world, p, hits, self.spec.zap_removal);
        }
    }

    fn world_update(&mut self, world: &mut World) {
        // All regrowth decisions see the same apple layer; an apple cannot
        // grow under a standing avatar.
        self.grow.clear();
        for (k, &s) in self.sites.iter().enumerate() {
            if world.items[s] != Item::Empty || world.avatar_at_idx(s).is_some() {
                continue;
            }
            let n = self.neighbor_apples(world, k);
            let p = self.spec.regrowth[n.min(3)];
            if p > 0.0 && world.rng.bernoulli(Stream::AppleRegrowth, s as u64, world.step, p) {
                self.grow.push(s);
            }
        }
        for i in 0..self.grow.len() {
            let s = self.grow[i];
            world.set_item(s, Item::Apple);
            let ev = world.event(EventKind::AppleGrown).at(world.pos(s));
            world.emit(ev);
        }
    }
}

fn default_accumulation() -> f64 {
    0.001
}
fn default_clean_amount() -> f64 {
    0.02
}
fn default_threshold() -> f64 {
    0.4
}
fn default_max_spawn() -> f64 {
    0.05
}
fn default_cleanup_zap() -> u32 {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleanUpSpec {
    #[serde(default = "default_accumulation")]
    pub accumulation_rate: f64,
    #[serde(default = "default_clean_amount")]
    pub clean_amount: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_max_spawn")]
    pub max_spawn: f64,
    #[serde(default)]
    pub initial_pollution: f64,
    #[serde(default = "default_cleanup_zap")]
    pub zap_removal: u32,
}

impl Default for CleanUpSpec {
    fn default() -> Self {
        Self {
            accumulation_rate: default_accumulation(),
            clean_amount: default_clean_amount(),
            threshold: default_threshold(),
            max_spawn: default_max_spawn(),
            initial_pollution: 0.0,
            zap_removal: default_cleanup_zap(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiverState {
    pub pollution: f64,
    pub accumulation_rate: f64,
    pub clean_amount: f64,
    pub threshold: f64,
    pub max_spawn: f64,
}

impl RiverState {
    pub fn from_spec(spec: &CleanUpSpec) -> Self {
        Self {
            pollution: spec.initial_pollution.clamp(0.0, 1.0),
            accumulation_rate: spec.accumulation_rate,
            clean_amount: spec.clean_amount,
            threshold: spec.threshold,
            max_spawn: spec.max_spawn,
        }
    }

    /// Apple spawn probability per orchard cell per step: zero above the
    /// threshold, falling linearly from `max_spawn` at zero pollution.
    pub fn spawn_probability(&self) -> f64 {
        if self.pollution > self.threshold {
            0.0
        } else if self.threshold <= 0.0 {
            self.max_spawn
        } else {
            self.max_spawn * (1.0 - self.pollution / self.threshold)
        }
    }
}

/// One step of river dynamics given the number of cleaning beams that
/// reached water this step.
pub fn cleanup_step(river: RiverState, clean_hits: u32) -> RiverState {
    let p = river.pollution + river.accumulation_rate - river.clean_amount * clean_hits as f64;
    RiverState {
        pollution: p.clamp(0.0, 1.0),
        ..river
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CleanUpRules {
    spec: CleanUpSpec,
    river: RiverState,
    #[serde(skip)]
    orchard: Vec<usize>,
    hits: u32,
}

impl CleanUpRules {
    pub fn new(spec: CleanUpSpec, map: &GridMap, world: &World) -> Self {
        let orchard = (0..world.cell_count())
            .filter(|&i| map.cells[i].orchard || world.items[i] == Item::Apple)
            .collect();
        Self {
            river: RiverState::from_spec(&spec),
            spec,
            orchard,
            hits: 0,
        }
    }

    pub fn river(&self) -> &RiverState {
        &self.river
    }

    pub fn river_mut(&mut self) -> &mut RiverState {
        &mut self.river
    }

    pub fn orchard(&self) -> &[usize] {
        &self.orchard
    }
}

impl Rules for CleanUpRules {
    fn on_enter(&mut self, world: &mut World, p: usize, idx: usize) {
        eat_apple(world, p, idx);
    }

    fn on_beam(&mut self, world: &mut World, p: usize, kind: BeamKind, hits: &[BeamHit]) {
        match kind {
            BeamKind::Zap => remove_zapped(world, p, hits, self.spec.zap_removal),
            BeamKind::Clean if !hits.is_empty() => {
                self.hits += 1;
                let ev = world
                    .event(EventKind::PlayerCleaned)
                    .actor(p)
                    .with("cells", hits.len() as f64);
                world.emit(ev);
            }
            _ => {}
        }
    }

    fn world_update(&mut self, world: &mut World) {
        self.river = cleanup_step(self.river, self.hits);
        self.hits = 0;
        let ev = world
            .event(EventKind::PollutionLevel)
            .with("level", self.river.pollution);
        world.emit(ev);
        let p = self.river.spawn_probability();
        if p <= 0.0 {
            return;
        }
        for &i in &self.orchard {
            if world.items[i] == Item::Empty
                && world.avatar_at_idx(i).is_none()
                && world.rng.bernoulli(Stream::AppleSpawn, i as u64, world.step, p)
            {
                world.set_item(i, Item::Apple);
                let ev = world.event(EventKind::AppleGrown).at(world.pos(i));
                world.emit(ev);
            }
        }
    }
}

pub const BERRY_COLORS: usize = 3;
/// `color_tag` of an avatar that has been recolored white.
pub const WHITE: u8 = u8::MAX;

/// p = 5·10⁻⁶ · b, clamped to a probability.
pub fn ripen_probability(b: u32) -> f64 {
    ripen_probability_with(5e-6, b)
}

pub fn ripen_probability_with(rate: f64, b: u32) -> f64 {
    (rate * b as f64).clamp(0.0, 1.0)
}

fn default_ripen_rate() -> f64 {
    5e-6
}
fn default_freeze() -> u32 {
    25
}
fn default_mark() -> u32 {
    50
}
fn default_allelo_removal() -> u32 {
    25
}
fn default_penalty() -> f64 {
    -10.0
}
fn default_preferred_reward() -> f64 {
    2.0
}
fn default_other_reward() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllelopathicSpec {
    #[serde(default = "default_ripen_rate")]
    pub ripen_rate: f64,
    #[serde(default = "default_freeze")]
    pub freeze_steps: u32,
    /// A second zap within this many steps of the first removes the target.
    #[serde(default = "default_mark")]
    pub mark_steps: u32,
    #[serde(default = "default_allelo_removal")]
    pub removal_steps: u32,
    #[serde(default = "default_penalty")]
    pub removal_penalty: f64,
    #[serde(default = "default_preferred_reward")]
    pub preferred_reward: f64,
    #[serde(default = "default_other_reward")]
    pub other_reward: f64,
    /// Preferred berry color per player; red (0) for everyone by default.
    #[serde(default)]
    pub preferences: Option<Vec<u8>>,
}

impl Default for AllelopathicSpec {
    fn default() -> Self {
        Self {
            ripen_rate: default_ripen_rate(),
            freeze_steps: default_freeze(),
            mark_steps: default_mark(),
            removal_steps: default_allelo_removal(),
            removal_penalty: default_penalty(),
            preferred_reward: default_preferred_reward(),
            other_reward: default_other_reward(),
            preferences: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BerryField {
    pub counts: [u32; BERRY_COLORS],
    pub total: u32,
}

impl BerryField {
    pub fn max_fraction(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        *self.counts.iter().max().unwrap() as f64 / self.total as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AllelopathicRules {
    spec: AllelopathicSpec,
    field: BerryField,
    #[serde(skip)]
    sites: Vec<usize>,
    #[serde(skip)]
    ripen: Vec<usize>,
}

impl AllelopathicRules {
    /// Deals berry colors evenly over the berry cells with a seeded shuffle.
    pub fn new(spec: AllelopathicSpec, world: &mut World) -> Self {
        let sites: Vec<usize> = (0..world.cell_count())
            .filter(|&i| matches!(world.items[i], Item::Berry { .. }))
            .collect();
        let mut colors: Vec<u8> = (0..sites.len()).map(|i| (i % BERRY_COLORS) as u8).collect();
        world.rng.shuffle(Stream::BerryColors, 0, &mut colors);
        let mut counts = [0u32; BERRY_COLORS];
        for (&s, &c) in sites.iter().zip(&colors) {
            world.items[s] = Item::Berry {
                color: c,
                ripe: false,
            };
            counts[c as usize] += 1;
        }
        for a in world.avatars.iter_mut() {
            a.color_tag = WHITE;
        }
        Self {
            spec,
            field: BerryField {
                counts,
                total: sites.len() as u32,
            },
            sites,
            ripen: Vec::new(),
        }
    }

    pub fn field(&self) -> &BerryField {
        &self.field
    }

    pub fn spec(&self) -> &AllelopathicSpec {
        &self.spec
    }

    pub fn preference(&self, p: usize) -> u8 {
        self.spec
            .preferences
            .as_ref()
            .and_then(|v| v.get(p).copied())
            .unwrap_or(0)
    }

    /// Recount colors after external edits to the berry layer.
    pub fn recount(&mut self, world: &World) {
        let mut counts = [0u32; BERRY_COLORS];
        for &s in &self.sites {
            if let Item::Berry { color, .. } = world.items[s] {
                counts[color as usize] += 1;
            }
        }
        self.field.counts = counts;
    }

    fn zap(&mut self, world: &mut World, p: usize, q: usize) {
        let t = world.step;
        let marked = t < world.avatars[q].marked_until;
        let ev = world
            .event(EventKind::PlayerZapped)
            .actor(p)
            .target(q)
            .with("second", if marked { 1.0 } else { 0.0 });
        world.emit(ev);
        if marked {
            world.avatars[q].marked_until = 0;
            world.avatars[q].frozen_until = 0;
            world.reward(q, self.spec.removal_penalty);
            world.remove(q, Some(self.spec.removal_steps));
        } else {
            world.avatars[q].frozen_until = t + 1 + self.spec.freeze_steps;
            world.avatars[q].marked_until = t + 1 + self.spec.mark_steps;
            let ev = world
                .event(EventKind::PlayerFrozen)
                .actor(p)
                .target(q)
                .with("steps", self.spec.freeze_steps as f64);
            world.emit(ev);
        }
    }
}

impl Rules for AllelopathicRules {
    fn on_enter(&mut self, world: &mut World, p: usize, idx: usize) {
        let Item::Berry { color, ripe: true } = world.items[idx] else {
            return;
        };
        world.items[idx] = Item::Berry { color, ripe: false };
        let r = if color == self.preference(p) {
            self.spec.preferred_reward
        } else {
            self.spec.other_reward
        };
        world.reward(p, r);
        let ev = world
            .event(EventKind::BerryEaten)
            .actor(p)
            .at(world.pos(idx))
            .with("color", color as f64);
        world.emit(ev);
        let white = 1.0 - self.field.max_fraction();
        if world.rng.bernoulli(Stream::AvatarRecolor, p as u64, world.step, white) {
            world.avatars[p].color_tag = WHITE;
            let ev = world.event(EventKind::AvatarRecolored).actor(p).with("color", -1.0);
            world.emit(ev);
        }
    }

    fn on_beam(&mut self, world: &mut World, p: usize, kind: BeamKind, hits: &[BeamHit]) {
        match kind {
            BeamKind::Zap => {
                for hit in hits {
                    if let BeamHit::Avatar(q) = *hit {
                        if world.is_active(q) {
                            self.zap(world, p, q);
                        }
                    }
                }
            }
            BeamKind::Plant(c) => {
                for hit in hits {
                    let BeamHit::Cell(pos) = *hit else { continue };
                    let i = world.idx(pos);
                    if let Item::Berry { color, ripe: false } = world.items[i] {
                        if color != c {
                            world.items[i] = Item::Berry { color: c, ripe: false };
                            self.field.counts[color as usize] -= 1;
                            self.field.counts[c as usize] += 1;
                            world.avatars[p].color_tag = c;
                            let ev = world
                                .event(EventKind::BerryPlanted)
                                .actor(p)
                                .at(pos)
                                .with("color", c as f64)
                                .with("previous", color as f64);
                            world.emit(ev);
                        }
                    }
                }
            }
            _ => {}
        }
    }

    fn world_update(&mut self, world: &mut World) {
        self.ripen.clear();
        let probs: [f64; BERRY_COLORS] =
            std::array::from_fn(|c| ripen_probability_with(self.spec.ripen_rate, self.field.counts[c]));
        for &s in &self.sites {
            if let Item::Berry { color, ripe: false } = world.items[s] {
                let p = probs[color as usize];
                if p > 0.0 && world.rng.bernoulli(Stream::BerryRipen, s as u64, world.step, p) {
                    self.ripen.push(s);
                }
            }
        }
        for k in 0..self.ripen.len() {
            let s = self.ripen[k];
            if let Item::Berry { color, .. } = world.items[s] {
                world.items[s] = Item::Berry { color, ripe: true };
                let ev = world
                    .event(EventKind::BerryRipened)
                    .at(world.pos(s))
                    .with("color", color as f64);
                world.emit(ev);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regrowth_table() {
        assert_eq!(regrowth_probability(0), 0.0);
        assert_eq!(regrowth_probability(1), 0.001);
        assert_eq!(regrowth_probability(2), 0.005);
        assert_eq!(regrowth_probability(3), 0.025);
        assert_eq!(regrowth_probability(12), 0.025);
    }

    #[test]
    fn ripen_examples() {
        assert!((ripen_probability(116) - 5.8e-4).abs() < 1e-15);
        assert!((ripen_probability(348) - 1.74e-3).abs() < 1e-15);
        assert_eq!(ripen_probability(0), 0.0);
    }

    #[test]
    fn river_reaches_zero_in_27_steps() {
        let mut river = RiverState::from_spec(&CleanUpSpec::default());
        river.pollution = 0.5;
        let mut steps = 0;
        while river.pollution > 0.0 {
            river = cleanup_step(river, 1);
            steps += 1;
        }
        assert_eq!(steps, 27);
    }

    #[test]
    fn spawn_probability_edges() {
        let mut river = RiverState::from_spec(&CleanUpSpec::default());
        assert_eq!(river.spawn_probability(), 0.05);
        river.pollution = 0.41;
        assert_eq!(river.spawn_probability(), 0.0);
        river.pollution = 0.2;
        assert!((river.spawn_probability() - 0.025).abs() < 1e-15);
    }
}

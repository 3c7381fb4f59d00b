use super::beam::{cast_beam, BeamHit, BeamKind, BEAM_SLOTS};
use super::event::{Event, EventKind};
use super::geom::{Orientation, Pos, Team};
use super::map::Terrain;
use super::rng::{CounterRng, Stream};
use crate::matrix::Inventory;
use crate::substrate::{ActionKind, Mechanics, MoveDir, Substrate, TurnDir};
use serde::Serialize;
use std::ops::Range;
use std::sync::Arc;
use thiserror::Error;

/// `removed_until` value for avatars that never come back.
pub const PERMANENT: u32 = u32::MAX;
const NO_AVATAR: u16 = u16::MAX;

/// Contents of the item layer of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Item {
    Empty,
    /// Matrix-game resource of the given type.
    Resource(u8),
    Apple,
    Berry { color: u8, ripe: bool },
    /// Territory resource wall; ownership lives in the territory rules.
    Claimable,
    Molecule(u16),
}

impl Item {
    /// Solid items block movement like walls do.
    pub fn solid(self) -> bool {
        matches!(self, Item::Claimable | Item::Molecule(_))
    }
}

/// A player's embodiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Avatar {
    pub id: usize,
    pub pos: Pos,
    pub orientation: Orientation,
    /// Present only in team substrates (0..=3).
    pub health: Option<u8>,
    /// Resource counts (matrix substrates; empty elsewhere).
    pub inventory: Inventory<f64>,
    /// Molecule carried (chemistry substrates).
    pub held: Option<u16>,
    /// First step at which a removed avatar may return; `None` while on the grid.
    pub removed_until: Option<u32>,
    /// Actions are ignored while `step < frozen_until`.
    pub frozen_until: u32,
    /// A punishment mark is visible while `step < marked_until`.
    pub marked_until: u32,
    pub team: Option<Team>,
    pub color_tag: u8,
    pub beam_ready_at: [u32; BEAM_SLOTS],
}

impl Avatar {
    pub fn is_removed(&self) -> bool {
        self.removed_until.is_some()
    }
}

#[derive(Clone, Debug, Serialize)]
pub(crate) struct SpawnGroup {
    pub team: Option<Team>,
    pub points: Vec<Pos>,
    pub cursor: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("episode already finished at step {0}")]
    EpisodeFinished(u32),
    #[error("joint action has {found} entries, expected {expected}")]
    Arity { found: usize, expected: usize },
    #[error("player {player} issued action {action}, substrate has {limit} actions")]
    IllegalAction {
        player: usize,
        action: usize,
        limit: usize,
    },
    #[error("no player with index {0}")]
    InvalidPlayer(usize),
}

/// The substrate-independent part of the world state.
#[derive(Clone, Debug, Serialize)]
pub struct World {
    pub(crate) width: usize,
    pub(crate) height: usize,
    pub(crate) terrain: Vec<Terrain>,
    pub(crate) items: Vec<Item>,
    #[serde(skip)]
    pub(crate) occupancy: Vec<u16>,
    pub(crate) avatars: Vec<Avatar>,
    pub(crate) step: u32,
    pub(crate) episode_length: u32,
    pub(crate) rng: CounterRng,
    pub(crate) events: Vec<Event>,
    pub(crate) rewards: Vec<f64>,
    pub(crate) spawns: Vec<SpawnGroup>,
}

impl World {
    pub(crate) fn new(
        width: usize,
        height: usize,
        terrain: Vec<Terrain>,
        episode_length: u32,
        seed: u64,
    ) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            terrain,
            items: vec![Item::Empty; n],
            occupancy: vec![NO_AVATAR; n],
            avatars: Vec::new(),
            step: 0,
            episode_length,
            rng: CounterRng::new(seed),
            events: Vec::new(),
            rewards: Vec::new(),
            spawns: Vec::new(),
        }
    }

    #[inline]
    pub fn idx(&self, pos: Pos) -> usize {
        pos.row as usize * self.width + pos.col as usize
    }

    #[inline]
    pub fn pos(&self, idx: usize) -> Pos {
        Pos::new((idx / self.width) as i32, (idx % self.width) as i32)
    }

    #[inline]
    pub fn in_bounds(&self, pos: Pos) -> bool {
        pos.row >= 0
            && pos.col >= 0
            && (pos.row as usize) < self.height
            && (pos.col as usize) < self.width
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn terrain_at(&self, pos: Pos) -> Terrain {
        self.terrain[self.idx(pos)]
    }

    #[inline]
    pub fn item_at(&self, pos: Pos) -> Item {
        self.items[self.idx(pos)]
    }

    #[inline]
    pub fn avatar_at(&self, pos: Pos) -> Option<usize> {
        let o = self.occupancy[self.idx(pos)];
        (o != NO_AVATAR).then_some(o as usize)
    }

    #[inline]
    pub fn avatar_at_idx(&self, idx: usize) -> Option<usize> {
        let o = self.occupancy[idx];
        (o != NO_AVATAR).then_some(o as usize)
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    pub fn rng(&self) -> &CounterRng {
        &self.rng
    }

    pub fn avatars(&self) -> &[Avatar] {
        &self.avatars
    }

    /// On the grid and not frozen.
    #[inline]
    pub fn can_act(&self, p: usize) -> bool {
        let a = &self.avatars[p];
        a.removed_until.is_none() && self.step >= a.frozen_until
    }

    #[inline]
    pub fn is_active(&self, p: usize) -> bool {
        self.avatars[p].removed_until.is_none()
    }

    /// Free floor a moving avatar could occupy (ignores substrate rules).
    pub fn is_open(&self, pos: Pos) -> bool {
        if !self.in_bounds(pos) {
            return false;
        }
        let i = self.idx(pos);
        self.terrain[i].passable() && !self.items[i].solid() && self.occupancy[i] == NO_AVATAR
    }

    pub(crate) fn emit(&mut self, event: Event) {
        self.events.push(event);
    }

    pub(crate) fn event(&self, kind: EventKind) -> Event {
        Event::new(kind, self.step)
    }

    pub(crate) fn reward(&mut self, p: usize, amount: f64) {
        self.rewards[p] += amount;
    }

    pub(crate) fn set_item(&mut self, idx: usize, item: Item) {
        self.items[idx] = item;
    }

    /// Take `p` off the grid for `duration` full steps, or forever.
    pub(crate) fn remove(&mut self, p: usize, duration: Option<u32>) {
        let until = match duration {
            Some(d) => self.step.saturating_add(1).saturating_add(d),
            None => PERMANENT,
        };
        let pos = self.avatars[p].pos;
        if self.avatars[p].removed_until.is_none() {
            let i = self.idx(pos);
            self.occupancy[i] = NO_AVATAR;
        }
        self.avatars[p].removed_until = Some(until);
        let kind = if duration.is_some() {
            EventKind::PlayerRemoved
        } else {
            EventKind::PlayerRemovedPermanent
        };
        let mut ev = self.event(kind).target(p).at(pos);
        if let Some(d) = duration {
            ev = ev.with("duration", d as f64);
        }
        self.emit(ev);
    }

    pub(crate) fn place(&mut self, p: usize, pos: Pos) {
        if self.avatars[p].removed_until.is_none() {
            let old = self.idx(self.avatars[p].pos);
            if self.occupancy[old] == p as u16 {
                self.occupancy[old] = NO_AVATAR;
            }
        }
        let i = self.idx(pos);
        self.occupancy[i] = p as u16;
        self.avatars[p].pos = pos;
        self.avatars[p].removed_until = None;
    }

    fn spawn_group_for(&self, p: usize) -> usize {
        let team = self.avatars[p].team;
        self.spawns
            .iter()
            .position(|g| g.team == team && !g.points.is_empty())
            .or_else(|| self.spawns.iter().position(|g| g.team.is_none()))
            .unwrap_or(0)
    }

    /// Next free spawn point for `p`, consumed round-robin from its group.
    pub(crate) fn take_spawn(&mut self, p: usize) -> Option<Pos> {
        let g = self.spawn_group_for(p);
        let len = self.spawns.get(g)?.points.len();
        for k in 0..len {
            let slot = (self.spawns[g].cursor + k) % len;
            let pos = self.spawns[g].points[slot];
            if self.is_open(pos) {
                self.spawns[g].cursor = (slot + 1) % len;
                return Some(pos);
            }
        }
        None
    }

    pub(crate) fn random_orientation(&self, p: usize) -> Orientation {
        let k = self
            .rng
            .below(Stream::Orientation, p as u64, self.step, 0, 4);
        Orientation::from_index(k as u8)
    }
}

/// Result of one engine step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub rewards: Vec<f64>,
    /// Range of this step's events in the state's event log.
    pub events: Range<usize>,
    pub done: bool,
}

/// Full world state of one episode.
#[derive(Clone, Debug, Serialize)]
pub struct GridState {
    pub(crate) world: World,
    pub(crate) rules: Mechanics,
    #[serde(skip)]
    pub(crate) substrate: Arc<Substrate>,
    pub(crate) last_rewards: Vec<f64>,
}

impl GridState {
    pub(crate) fn from_parts(world: World, rules: Mechanics, substrate: Arc<Substrate>) -> Self {
        let n = world.avatars.len();
        Self {
            world,
            rules,
            substrate,
            last_rewards: vec![0.0; n],
        }
    }

    pub fn substrate(&self) -> &Arc<Substrate> {
        &self.substrate
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn mechanics(&self) -> &Mechanics {
        &self.rules
    }

    pub fn width(&self) -> usize {
        self.world.width
    }

    pub fn height(&self) -> usize {
        self.world.height
    }

    pub fn num_players(&self) -> usize {
        self.world.avatars.len()
    }

    pub fn step_count(&self) -> u32 {
        self.world.step
    }

    pub fn episode_length(&self) -> u32 {
        self.world.episode_length
    }

    pub fn is_done(&self) -> bool {
        self.world.step >= self.world.episode_length
    }

    pub fn avatar(&self, p: usize) -> Result<&Avatar, GridError> {
        self.world.avatars.get(p).ok_or(GridError::InvalidPlayer(p))
    }

    pub fn avatars(&self) -> &[Avatar] {
        &self.world.avatars
    }

    pub fn events(&self) -> &[Event] {
        &self.world.events
    }

    pub fn last_rewards(&self) -> &[f64] {
        &self.last_rewards
    }

    pub fn in_bounds(&self, pos: Pos) -> bool {
        self.world.in_bounds(pos)
    }

    pub fn terrain(&self, pos: Pos) -> Terrain {
        self.world.terrain_at(pos)
    }

    pub fn item(&self, pos: Pos) -> Item {
        self.world.item_at(pos)
    }

    pub fn avatar_at(&self, pos: Pos) -> Option<usize> {
        self.world.avatar_at(pos)
    }

    /// Replace the item in a cell (scenario setup and tests).
    pub fn set_item(&mut self, pos: Pos, item: Item) {
        let i = self.world.idx(pos);
        self.world.items[i] = item;
    }

    /// Move an avatar onto `pos` and face it `orientation` (scenario setup and tests).
    pub fn place_avatar(&mut self, p: usize, pos: Pos, orientation: Orientation) {
        self.world.place(p, pos);
        self.world.avatars[p].orientation = orientation;
    }

    /// Mutable access to avatar attributes other than position.
    pub fn avatar_mut(&mut self, p: usize) -> &mut Avatar {
        &mut self.world.avatars[p]
    }

    /// Mutable mechanic state (scenario setup and tests).
    pub fn mechanics_mut(&mut self) -> &mut Mechanics {
        &mut self.rules
    }

    /// Advance one step.
    ///
    /// `actions` holds one action id per player; entries for removed or
    /// frozen players are ignored. Resolution order is fixed: respawns,
    /// movement and turning in ascending player index, beams and interact
    /// actions in ascending player index, then substrate world dynamics.
    pub fn step(&mut self, actions: &[usize]) -> Result<StepOutcome, GridError> {
        let n = self.world.avatars.len();
        if self.world.step >= self.world.episode_length {
            return Err(GridError::EpisodeFinished(self.world.step));
        }
        if actions.len() != n {
            return Err(GridError::Arity {
                found: actions.len(),
                expected: n,
            });
        }
        let limit = self.substrate.actions.len();
        if let Some((player, &action)) = actions.iter().enumerate().find(|(_, &a)| a >= limit) {
            return Err(GridError::IllegalAction {
                player,
                action,
                limit,
            });
        }

        let GridState {
            world,
            rules,
            substrate,
            last_rewards,
        } = self;
        let rules = rules.as_rules_mut();
        let first_event = world.events.len();
        world.rewards.iter_mut().for_each(|r| *r = 0.0);
        let t = world.step;

        for p in 0..n {
            match world.avatars[p].removed_until {
                Some(until) if until != PERMANENT && until <= t => {
                    if let Some(pos) = world.take_spawn(p) {
                        world.place(p, pos);
                        world.avatars[p].orientation = world.random_orientation(p);
                        let ev = world.event(EventKind::PlayerRespawned).actor(p).at(pos);
                        world.emit(ev);
                        rules.on_respawn(world, p);
                    }
                }
                _ => {}
            }
        }

        for (p, &action) in actions.iter().enumerate() {
            if !world.can_act(p) {
                continue;
            }
            match substrate.actions[action] {
                ActionKind::Move(dir) => {
                    let o = world.avatars[p].orientation;
                    let heading = match dir {
                        MoveDir::Forward => o,
                        MoveDir::Backward => o.reverse(),
                        MoveDir::Left => o.turn_left(),
                        MoveDir::Right => o.turn_right(),
                    };
                    try_move(world, rules, p, heading);
                }
                ActionKind::Turn(TurnDir::Left) => {
                    let a = &mut world.avatars[p];
                    a.orientation = a.orientation.turn_left();
                }
                ActionKind::Turn(TurnDir::Right) => {
                    let a = &mut world.avatars[p];
                    a.orientation = a.orientation.turn_right();
                }
                _ => {}
            }
        }

        for (p, &action) in actions.iter().enumerate() {
            if !world.can_act(p) {
                continue;
            }
            match substrate.actions[action] {
                ActionKind::Beam(kind) => {
                    if let Some(hits) = cast_beam(world, &substrate.beams, p, kind) {
                        rules.on_beam(world, p, kind, &hits);
                    }
                }
                ActionKind::Interact => rules.on_interact(world, p),
                _ => {}
            }
        }

        rules.world_update(world);
        world.step += 1;
        last_rewards.clone_from(&world.rewards);
        Ok(StepOutcome {
            rewards: world.rewards.clone(),
            events: first_event..world.events.len(),
            done: world.step >= world.episode_length,
        })
    }

    /// Fire a beam for `player` outside the normal step loop and apply the
    /// substrate's handler to the hits. Returns `None` when the beam is on
    /// cooldown.
    pub fn cast_beam(&mut self, player: usize, kind: BeamKind) -> Result<Option<Vec<BeamHit>>, GridError> {
        if player >= self.num_players() {
            return Err(GridError::InvalidPlayer(player));
        }
        let GridState {
            world,
            rules,
            substrate,
            ..
        } = self;
        let hits = cast_beam(world, &substrate.beams, player, kind);
        if let Some(h) = &hits {
            rules.as_rules_mut().on_beam(world, player, kind, h);
        }
        Ok(hits)
    }

    /// SHA-256 over the serialized state.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("state serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn try_move(world: &mut World, rules: &mut dyn crate::substrate::Rules, p: usize, heading: Orientation) {
    let target = world.avatars[p].pos.step(heading);
    let open = world.is_open(target) && rules.can_move(world, p) && {
        let i = world.idx(target);
        rules.can_enter(world, p, i)
    };
    if open {
        world.place(p, target);
        let i = world.idx(target);
        rules.on_enter(world, p, i);
    } else {
        let ev = world.event(EventKind::Bump).actor(p).at(target);
        world.emit(ev);
        if world.in_bounds(target) {
            rules.on_bump(world, p, target);
        }
    }
}

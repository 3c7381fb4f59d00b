//! Territory claiming (Open, Rooms) and the team painting games
//! (King of the Hill, Capture the Flag).

use crate::grid::{BeamHit, BeamKind, EventKind, GridMap, Item, Pos, Stream, Team, Terrain, World};
use crate::substrate::Rules;
use serde::{Deserialize, Serialize};

const NO_WALL: u32 = u32::MAX;

fn default_activation() -> u32 {
    100
}
fn default_reward_rate() -> f64 {
    0.01
}
fn default_one() -> f64 {
    1.0
}
fn default_destroy() -> u8 {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerritorySpec {
    #[serde(default = "default_activation")]
    pub activation_delay: u32,
    #[serde(default = "default_reward_rate")]
    pub reward_rate: f64,
    #[serde(default = "default_one")]
    pub reward: f64,
    /// Zaps needed to destroy a resource.
    #[serde(default = "default_destroy")]
    pub destroy_after: u8,
}

impl Default for TerritorySpec {
    fn default() -> Self {
        Self {
            activation_delay: default_activation(),
            reward_rate: default_reward_rate(),
            reward: 1.0,
            destroy_after: default_destroy(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResourceWall {
    pub cell: Pos,
    pub owner: Option<usize>,
    pub claimed_at: Option<u32>,
    pub active: bool,
    pub damage: u8,
}

#[derive(Clone, Debug, Serialize)]
pub struct TerritoryRules {
    spec: TerritorySpec,
    walls: Vec<ResourceWall>,
    #[serde(skip)]
    wall_at: Vec<u32>,
}

impl TerritoryRules {
    pub fn new(spec: TerritorySpec, world: &World) -> Self {
        let mut walls = Vec::new();
        let mut wall_at = vec![NO_WALL; world.cell_count()];
        for i in 0..world.cell_count() {
            if world.items[i] == Item::Claimable {
                wall_at[i] = walls.len() as u32;
                walls.push(ResourceWall {
                    cell: world.pos(i),
                    owner: None,
                    claimed_at: None,
                    active: false,
                    damage: 0,
                });
            }
        }
        Self {
            spec,
            walls,
            wall_at,
        }
    }

    pub fn spec(&self) -> &TerritorySpec {
        &self.spec
    }

    pub fn walls(&self) -> &[ResourceWall] {
        &self.walls
    }

    pub fn wall(&self, cell: usize) -> Option<&ResourceWall> {
        match self.wall_at.get(cell) {
            Some(&w) if w != NO_WALL => Some(&self.walls[w as usize]),
            _ => None,
        }
    }

    pub fn is_destroyed(&self, w: &ResourceWall) -> bool {
        w.damage >= self.spec.destroy_after
    }

    pub fn destroyed_count(&self) -> usize {
        self.walls.iter().filter(|w| self.is_destroyed(w)).count()
    }

    /// Claim the resource in `cell` for `p`. Reclaiming one's own resource
    /// changes nothing; claiming another player's restarts the countdown.
    pub fn claim(&mut self, world: &mut World, p: usize, cell: usize) {
        let Some(&w) = self.wall_at.get(cell) else { return };
        if w == NO_WALL {
            return;
        }
        let destroy_after = self.spec.destroy_after;
        let wall = &mut self.walls[w as usize];
        if wall.damage >= destroy_after || wall.owner == Some(p) {
            return;
        }
        let previous = wall.owner.map(|o| o as f64).unwrap_or(-1.0);
        wall.owner = Some(p);
        wall.claimed_at = Some(world.step);
        wall.active = false;
        let pos = wall.cell;
        let ev = world
            .event(EventKind::ResourceClaimed)
            .actor(p)
            .at(pos)
            .with("previous_owner", previous);
        world.emit(ev);
    }

    fn damage(&mut self, world: &mut World, p: usize, cell: usize) {
        let w = self.wall_at[cell];
        if w == NO_WALL {
            return;
        }
        let destroy_after = self.spec.destroy_after;
        let wall = &mut self.walls[w as usize];
        if wall.damage >= destroy_after {
            return;
        }
        wall.damage += 1;
        let pos = wall.cell;
        if wall.damage >= destroy_after {
            wall.owner = None;
            wall.claimed_at = None;
            wall.active = false;
            world.set_item(cell, Item::Empty);
            let ev = world.event(EventKind::ResourceDestroyed).actor(p).at(pos);
            world.emit(ev);
        } else {
            let ev = world
                .event(EventKind::ResourceDamaged)
                .actor(p)
                .at(pos)
                .with("damage", wall.damage as f64);
            world.emit(ev);
        }
    }

    fn revert_claims(&mut self, owner: usize) {
        for w in self.walls.iter_mut().filter(|w| w.owner == Some(owner)) {
            w.owner = None;
            w.claimed_at = None;
            w.active = false;
        }
    }
}

impl Rules for TerritoryRules {
    fn on_bump(&mut self, world: &mut World, p: usize, target: Pos) {
        let i = world.idx(target);
        if world.items[i] == Item::Claimable {
            self.claim(world, p, i);
        }
    }

    fn on_beam(&mut self, world: &mut World, p: usize, kind: BeamKind, hits: &[BeamHit]) {
        for hit in hits {
            match (kind, *hit) {
                (BeamKind::Claim, BeamHit::Cell(pos)) => {
                    let i = world.idx(pos);
                    self.claim(world, p, i);
                }
                (BeamKind::Zap, BeamHit::Cell(pos)) => {
                    let i = world.idx(pos);
                    self.damage(world, p, i);
                }
                (BeamKind::Zap, BeamHit::Avatar(q)) if world.is_active(q) => {
                    let ev = world.event(EventKind::PlayerZapped).actor(p).target(q);
                    world.emit(ev);
                    world.remove(q, None);
                    self.revert_claims(q);
                }
                _ => {}
            }
        }
    }

    fn world_update(&mut self, world: &mut World) {
        let t = world.step;
        for (k, w) in self.walls.iter_mut().enumerate() {
            let (Some(owner), Some(at)) = (w.owner, w.claimed_at) else {
                continue;
            };
            if !w.active && t >= at + self.spec.activation_delay {
                w.active = true;
                let ev = world.event(EventKind::ResourceActivated).actor(owner).at(w.cell);
                world.emit(ev);
            }
            if w.active && world.rng.bernoulli(Stream::TerritoryReward, k as u64, t, self.spec.reward_rate) {
                world.reward(owner, self.spec.reward);
                let ev = world
                    .event(EventKind::ResourceReward)
                    .actor(owner)
                    .at(w.cell)
                    .with("reward", self.spec.reward);
                world.emit(ev);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeamGame {
    KingOfTheHill,
    CaptureTheFlag,
}

/// What indicator tiles show.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Indicator {
    Red,
    Blue,
    Purple,
    /// Capture the Flag with neither flag at home.
    Neutral,
}

fn default_regen() -> f64 {
    0.05
}
fn default_team_respawn() -> u32 {
    25
}
fn default_hill_percent() -> u32 {
    80
}
fn default_capture() -> f64 {
    25.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TeamSpec {
    pub game: TeamGame,
    #[serde(default = "default_regen")]
    pub regen_rate: f64,
    #[serde(default = "default_team_respawn")]
    pub respawn_delay: u32,
    /// Share of hill cells (percent) a team must paint to control it.
    #[serde(default = "default_hill_percent")]
    pub hill_percent: u32,
    #[serde(default = "default_capture")]
    pub capture_reward: f64,
    /// Paid to each member of the team whose flag was captured.
    #[serde(default)]
    pub capture_penalty: f64,
}

impl TeamSpec {
    pub fn new(game: TeamGame) -> Self {
        Self {
            game,
            regen_rate: default_regen(),
            respawn_delay: default_team_respawn(),
            hill_percent: default_hill_percent(),
            capture_reward: default_capture(),
            capture_penalty: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Flag {
    pub home: Pos,
    pub carrier: Option<usize>,
    pub on_ground: Option<Pos>,
}

impl Flag {
    pub fn at_home(&self) -> bool {
        self.carrier.is_none() && self.on_ground.is_none()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TeamRules {
    spec: TeamSpec,
    ground: Vec<Option<Team>>,
    #[serde(skip)]
    hill: Vec<bool>,
    #[serde(skip)]
    hill_cells: usize,
    #[serde(skip)]
    base: Vec<Option<Team>>,
    #[serde(skip)]
    indicators: Vec<bool>,
    flags: Vec<Flag>,
    indicator: Indicator,
    #[serde(skip)]
    width: usize,
}

/// Max health by the ground under an avatar.
pub fn max_health(ground: Option<Team>, team: Team) -> u8 {
    match ground {
        Some(g) if g == team => 3,
        Some(_) => 1,
        None => 2,
    }
}

impl TeamRules {
    pub fn new(spec: TeamSpec, map: &GridMap, world: &mut World) -> Self {
        let n = world.cell_count();
        let mut ground = vec![None; n];
        let mut base = vec![None; n];
        let mut hill = vec![false; n];
        let mut indicators = vec![false; n];
        let mut homes = [None, None];
        for (i, c) in map.cells.iter().enumerate() {
            if let Some(Some(team)) = c.spawn {
                ground[i] = Some(team);
            }
            if let Some(team) = c.base {
                ground[i] = Some(team);
                base[i] = Some(team);
                homes[team.index()].get_or_insert(map.pos(i));
            }
            hill[i] = c.hill;
            indicators[i] = c.indicator;
        }
        let flags = match spec.game {
            TeamGame::CaptureTheFlag => homes
                .iter()
                .map(|h| Flag {
                    home: h.expect("capture the flag maps need a base per team"),
                    carrier: None,
                    on_ground: None,
                })
                .collect(),
            TeamGame::KingOfTheHill => Vec::new(),
        };
        let hill_cells = hill.iter().filter(|h| **h).count();
        let mut rules = Self {
            spec,
            ground,
            hill,
            hill_cells,
            base,
            indicators,
            flags,
            indicator: Indicator::Purple,
            width: map.width,
        };
        rules.indicator = rules.compute_indicator();
        rules
    }

    pub fn spec(&self) -> &TeamSpec {
        &self.spec
    }

    pub fn ground_color(&self, cell: usize) -> Option<Team> {
        self.ground[cell]
    }

    pub fn is_hill(&self, cell: usize) -> bool {
        self.hill[cell]
    }

    pub fn hill_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.hill.iter().enumerate().filter(|(_, h)| **h).map(|(i, _)| i)
    }

    pub fn base_of(&self, cell: usize) -> Option<Team> {
        self.base[cell]
    }

    pub fn is_indicator(&self, cell: usize) -> bool {
        self.indicators[cell]
    }

    pub fn indicator(&self) -> Indicator {
        self.indicator
    }

    pub fn flags(&self) -> &[Flag] {
        &self.flags
    }

    /// Paint a cell directly (scenario setup and tests).
    pub fn paint(&mut self, cell: usize, color: Option<Team>) {
        self.ground[cell] = color;
    }

    /// Team whose flag is displayed in `cell` (at home or dropped; carried
    /// flags are not drawn).
    pub fn flag_at(&self, cell: usize) -> Option<Team> {
        let pos = Pos::new((cell / self.width) as i32, (cell % self.width) as i32);
        self.flags.iter().enumerate().find_map(|(t, f)| {
            let here = match (f.carrier, f.on_ground) {
                (Some(_), _) => None,
                (None, Some(p)) => Some(p),
                (None, None) => Some(f.home),
            };
            (here == Some(pos)).then(|| Team::from_index(t))
        })
    }

    /// Hill control: the team with at least `hill_percent` of hill cells.
    pub fn hill_controller(&self) -> Option<Team> {
        if self.hill_cells == 0 {
            return None;
        }
        let mut counts = [0usize; 2];
        for (i, h) in self.hill.iter().enumerate() {
            if *h {
                if let Some(t) = self.ground[i] {
                    counts[t.index()] += 1;
                }
            }
        }
        let pct = self.spec.hill_percent as usize;
        [Team::Red, Team::Blue]
            .into_iter()
            .find(|t| counts[t.index()] * 100 >= pct * self.hill_cells)
    }

    fn compute_indicator(&self) -> Indicator {
        match self.spec.game {
            TeamGame::KingOfTheHill => match self.hill_controller() {
                Some(Team::Red) => Indicator::Red,
                Some(Team::Blue) => Indicator::Blue,
                None => Indicator::Purple,
            },
            TeamGame::CaptureTheFlag => match (self.flags[0].at_home(), self.flags[1].at_home()) {
                (true, true) => Indicator::Purple,
                (true, false) => Indicator::Red,
                (false, true) => Indicator::Blue,
                (false, false) => Indicator::Neutral,
            },
        }
    }

    fn clamp_health(&self, world: &mut World, p: usize) {
        let a = &world.avatars[p];
        let (Some(team), Some(h)) = (a.team, a.health) else { return };
        if a.removed_until.is_some() {
            return;
        }
        let cap = max_health(self.ground[world.idx(a.pos)], team);
        if h > cap {
            world.avatars[p].health = Some(cap);
        }
    }

    fn drop_flag(&mut self, world: &mut World, p: usize) {
        let pos = world.avatars[p].pos;
        for (t, f) in self.flags.iter_mut().enumerate() {
            if f.carrier == Some(p) {
                f.carrier = None;
                f.on_ground = Some(pos);
                let ev = world
                    .event(EventKind::FlagDropped)
                    .actor(p)
                    .at(pos)
                    .with("team", t as f64);
                world.emit(ev);
            }
        }
    }

    fn flag_events_on_enter(&mut self, world: &mut World, p: usize, pos: Pos) {
        let Some(team) = world.avatars[p].team else { return };
        for t in 0..self.flags.len() {
            let f = &self.flags[t];
            let flag_team = Team::from_index(t);
            let lying_here = f.carrier.is_none() && f.on_ground.unwrap_or(f.home) == pos;
            if !lying_here {
                continue;
            }
            if flag_team != team {
                self.flags[t].carrier = Some(p);
                self.flags[t].on_ground = None;
                let ev = world
                    .event(EventKind::FlagPickedUp)
                    .actor(p)
                    .at(pos)
                    .with("team", t as f64);
                world.emit(ev);
            } else if f.on_ground.is_some() {
                self.flags[t].on_ground = None;
                let ev = world
                    .event(EventKind::FlagReturned)
                    .actor(p)
                    .at(pos)
                    .with("team", t as f64);
                world.emit(ev);
            }
        }
        // Capture: carrying the enemy flag onto one's own base while one's
        // own flag is home.
        let enemy = team.other().index();
        let i = world.idx(pos);
        if self.flags[enemy].carrier == Some(p)
            && self.base[i] == Some(team)
            && self.flags[team.index()].at_home()
        {
            self.flags[enemy].carrier = None;
            self.flags[enemy].on_ground = None;
            for q in 0..world.avatars.len() {
                match world.avatars[q].team {
                    Some(t) if t == team => world.reward(q, self.spec.capture_reward),
                    Some(_) if self.spec.capture_penalty != 0.0 => {
                        world.reward(q, -self.spec.capture_penalty)
                    }
                    _ => {}
                }
            }
            let ev = world
                .event(EventKind::FlagCaptured)
                .actor(p)
                .at(pos)
                .with("team", team.index() as f64);
            world.emit(ev);
        }
    }
}

impl Rules for TeamRules {
    fn can_enter(&self, world: &World, p: usize, cell: usize) -> bool {
        match (world.avatars[p].team, self.ground[cell]) {
            (Some(me), Some(g)) => g == me,
            _ => true,
        }
    }

    fn can_move(&self, world: &World, p: usize) -> bool {
        let a = &world.avatars[p];
        match (a.team, self.ground[world.idx(a.pos)]) {
            (Some(me), Some(g)) => g == me,
            _ => true,
        }
    }

    fn on_enter(&mut self, world: &mut World, p: usize, cell: usize) {
        self.clamp_health(world, p);
        if self.spec.game == TeamGame::CaptureTheFlag {
            let pos = world.pos(cell);
            self.flag_events_on_enter(world, p, pos);
        }
    }

    fn on_beam(&mut self, world: &mut World, p: usize, kind: BeamKind, hits: &[BeamHit]) {
        if kind != BeamKind::Paint {
            return;
        }
        let Some(team) = world.avatars[p].team else { return };
        for hit in hits {
            match *hit {
                BeamHit::Cell(pos) => {
                    let i = world.idx(pos);
                    if world.terrain[i] == Terrain::Floor {
                        self.ground[i] = Some(team);
                    }
                }
                BeamHit::Avatar(q) => {
                    if world.avatars[q].team == Some(team) || !world.is_active(q) {
                        continue;
                    }
                    self.clamp_health(world, q);
                    let h = world.avatars[q].health.unwrap_or(0).saturating_sub(1);
                    world.avatars[q].health = Some(h);
                    let ev = world
                        .event(EventKind::PlayerZapped)
                        .actor(p)
                        .target(q)
                        .with("health", h as f64);
                    world.emit(ev);
                    if h == 0 {
                        self.drop_flag(world, q);
                        world.remove(q, Some(self.spec.respawn_delay));
                    }
                }
            }
        }
        for q in 0..world.avatars.len() {
            self.clamp_health(world, q);
        }
    }

    fn on_respawn(&mut self, world: &mut World, p: usize) {
        world.avatars[p].health = Some(2);
        self.clamp_health(world, p);
    }

    fn world_update(&mut self, world: &mut World) {
        let t = world.step;
        for p in 0..world.avatars.len() {
            if !world.is_active(p) {
                continue;
            }
            self.clamp_health(world, p);
            let a = &world.avatars[p];
            let (Some(team), Some(h)) = (a.team, a.health) else { continue };
            let cap = max_health(self.ground[world.idx(a.pos)], team);
            if h < cap && world.rng.bernoulli(Stream::HealthRegen, p as u64, t, self.spec.regen_rate) {
                world.avatars[p].health = Some(h + 1);
            }
        }
        if self.spec.game == TeamGame::KingOfTheHill {
            if let Some(team) = self.hill_controller() {
                for q in 0..world.avatars.len() {
                    if world.avatars[q].team == Some(team) {
                        world.reward(q, 1.0);
                    }
                }
                let ev = world
                    .event(EventKind::HillControl)
                    .with("team", team.index() as f64);
                world.emit(ev);
            }
        }
        self.indicator = self.compute_indicator();
    }
}

//! Substrate definitions: configuration, action sets, the per-mechanic rule
//! hooks the engine calls while stepping, and episode reset.

use crate::chemistry::{ChemistryRules, ChemistrySpec, GraphError, ReactionGraph};
use crate::ecology::{AllelopathicRules, AllelopathicSpec, CleanUpRules, CleanUpSpec, CommonsRules, CommonsSpec};
use crate::grid::beam::BEAM_SLOTS;
use crate::grid::state::SpawnGroup;
use crate::grid::{
    Avatar, BeamHit, BeamKind, BeamSpec, BeamTable, GridMap, GridState, InitialItem, Item, MapError,
    Orientation, Pos, Stream, Team, World,
};
use crate::matrix::{Inventory, MatrixError, MatrixRules, MatrixSpec};
use crate::territory::{TeamRules, TeamSpec, TerritoryRules, TerritorySpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveDir {
    Forward,
    Backward,
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnDir {
    Left,
    Right,
}

/// What an action id does. Ids `0..7` are shared by every substrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Noop,
    Move(MoveDir),
    Turn(TurnDir),
    Beam(BeamKind),
    /// Pick up or put down a molecule in front of the avatar.
    Interact,
}

pub const BASE_ACTIONS: [ActionKind; 7] = [
    ActionKind::Noop,
    ActionKind::Move(MoveDir::Forward),
    ActionKind::Move(MoveDir::Backward),
    ActionKind::Move(MoveDir::Left),
    ActionKind::Move(MoveDir::Right),
    ActionKind::Turn(TurnDir::Left),
    ActionKind::Turn(TurnDir::Right),
];

/// Hooks a mechanic family plugs into the engine step.
///
/// Every hook has a no-op default. Hooks run inside the fixed step order
/// documented on [`GridState::step`].
pub trait Rules {
    /// Extra movement restriction on top of terrain, items and occupancy.
    fn can_enter(&self, _world: &World, _p: usize, _cell: usize) -> bool {
        true
    }

    /// `false` keeps the avatar in place this step.
    fn can_move(&self, _world: &World, _p: usize) -> bool {
        true
    }

    fn on_enter(&mut self, _world: &mut World, _p: usize, _cell: usize) {}

    /// The avatar tried to move into `target` and was blocked.
    fn on_bump(&mut self, _world: &mut World, _p: usize, _target: Pos) {}

    fn on_beam(&mut self, _world: &mut World, _p: usize, _kind: BeamKind, _hits: &[BeamHit]) {}

    fn on_interact(&mut self, _world: &mut World, _p: usize) {}

    fn on_respawn(&mut self, _world: &mut World, _p: usize) {}

    /// Stochastic and global dynamics, after all player actions.
    fn world_update(&mut self, _world: &mut World) {}
}

/// The mechanic family of a running episode, with its mutable state.
#[derive(Clone, Debug, Serialize)]
pub enum Mechanics {
    Matrix(MatrixRules),
    Commons(CommonsRules),
    CleanUp(CleanUpRules),
    Allelopathic(AllelopathicRules),
    Territory(TerritoryRules),
    Team(TeamRules),
    Chemistry(ChemistryRules),
}

impl Mechanics {
    pub fn as_rules_mut(&mut self) -> &mut dyn Rules {
        match self {
            Mechanics::Matrix(r) => r,
            Mechanics::Commons(r) => r,
            Mechanics::CleanUp(r) => r,
            Mechanics::Allelopathic(r) => r,
            Mechanics::Territory(r) => r,
            Mechanics::Team(r) => r,
            Mechanics::Chemistry(r) => r,
        }
    }
}

/// Mechanic parameters as written in substrate files, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RulesConfig {
    Matrix(MatrixSpec),
    Commons(CommonsSpec),
    CleanUp(CleanUpSpec),
    Allelopathic(AllelopathicSpec),
    Territory(TerritorySpec),
    Team(TeamSpec),
    Chemistry(ChemistrySpec),
}

impl RulesConfig {
    pub fn family(&self) -> &'static str {
        match self {
            RulesConfig::Matrix(_) => "matrix",
            RulesConfig::Commons(_) => "commons",
            RulesConfig::CleanUp(_) => "clean_up",
            RulesConfig::Allelopathic(_) => "allelopathic",
            RulesConfig::Territory(_) => "territory",
            RulesConfig::Team(_) => "team",
            RulesConfig::Chemistry(_) => "chemistry",
        }
    }

    fn extra_actions(&self) -> Vec<ActionKind> {
        use ActionKind::Beam;
        match self {
            RulesConfig::Matrix(_) => vec![Beam(BeamKind::Interaction)],
            RulesConfig::Commons(_) => vec![Beam(BeamKind::Zap)],
            RulesConfig::CleanUp(_) => vec![Beam(BeamKind::Zap), Beam(BeamKind::Clean)],
            RulesConfig::Allelopathic(_) => vec![
                Beam(BeamKind::Plant(0)),
                Beam(BeamKind::Plant(1)),
                Beam(BeamKind::Plant(2)),
                Beam(BeamKind::Zap),
            ],
            RulesConfig::Territory(_) => vec![Beam(BeamKind::Zap), Beam(BeamKind::Claim)],
            RulesConfig::Team(_) => vec![Beam(BeamKind::Paint)],
            RulesConfig::Chemistry(_) => vec![ActionKind::Interact],
        }
    }

    fn default_beams(&self) -> BeamTable {
        let spec = |range, cooldown| BeamSpec { range, cooldown };
        let t = BeamTable::new();
        match self {
            RulesConfig::Matrix(_) => t.with(BeamKind::Interaction, spec(3, 1)),
            RulesConfig::Commons(_) => t.with(BeamKind::Zap, spec(3, 1)),
            RulesConfig::CleanUp(_) => t
                .with(BeamKind::Zap, spec(3, 1))
                .with(BeamKind::Clean, spec(5, 1)),
            RulesConfig::Allelopathic(_) => {
                let mut t = t.with(BeamKind::Zap, spec(3, 4));
                for c in 0..3 {
                    t = t.with(BeamKind::Plant(c), spec(3, 1));
                }
                t
            }
            RulesConfig::Territory(_) => t
                .with(BeamKind::Zap, spec(3, 2))
                .with(BeamKind::Claim, spec(2, 1)),
            RulesConfig::Team(_) => t.with(BeamKind::Paint, spec(3, 1)),
            RulesConfig::Chemistry(_) => t,
        }
    }
}

fn default_episode_length() -> u32 {
    1000
}

/// A substrate file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstrateConfig {
    pub id: String,
    pub name: String,
    /// Map id in the registry.
    pub map: String,
    pub players: usize,
    #[serde(default = "default_episode_length")]
    pub episode_length: u32,
    /// Overrides of beam range/cooldown keyed by beam name
    /// (`interaction`, `zap`, `clean`, `plant`, `claim`, `paint`).
    #[serde(default)]
    pub beams: BTreeMap<String, BeamSpec>,
    pub rules: RulesConfig,
}

#[derive(Debug, Error)]
pub enum SubstrateError {
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error("payoff: {0}")]
    Matrix(#[from] MatrixError),
    #[error("reaction graph: {0}")]
    Graph(#[from] GraphError),
    #[error("substrate `{id}`: {message}")]
    Invalid { id: String, message: String },
}

/// An N-player substrate ready to reset into episodes.
#[derive(Debug)]
pub struct Substrate {
    pub config: SubstrateConfig,
    pub map: GridMap,
    pub actions: Vec<ActionKind>,
    pub beams: BeamTable,
    pub graph: Option<ReactionGraph>,
    seat_groups: Vec<Vec<usize>>,
}

impl Substrate {
    pub fn new(
        config: SubstrateConfig,
        map: GridMap,
        graph: Option<ReactionGraph>,
    ) -> Result<Self, SubstrateError> {
        let invalid = |message: String| SubstrateError::Invalid {
            id: config.id.clone(),
            message,
        };
        let n = config.players;
        if n == 0 || n >= u16::MAX as usize {
            return Err(invalid(format!("bad player count {n}")));
        }
        if config.episode_length == 0 {
            return Err(invalid("episode_length must be positive".into()));
        }
        let teams = matches!(config.rules, RulesConfig::Team(_));
        if teams {
            if n % 2 != 0 {
                return Err(invalid("team substrates need an even player count".into()));
            }
            for team in [Team::Red, Team::Blue] {
                let have = map.spawn_points(Some(team)).len();
                if have < n / 2 {
                    return Err(invalid(format!(
                        "{have} spawn points for team {team:?}, need {}",
                        n / 2
                    )));
                }
            }
        } else if map.spawn_points(None).len() < n {
            return Err(invalid(format!(
                "{} spawn points for {n} players",
                map.spawn_points(None).len()
            )));
        }

        match &config.rules {
            RulesConfig::Matrix(spec) => {
                let m = spec.payoff()?;
                if spec.initial().len() != m.k() {
                    return Err(MatrixError::Dimension {
                        found: spec.initial().len(),
                        expected: m.k(),
                    }
                    .into());
                }
                let k = m.k();
                if map.count_items(|i| matches!(i, InitialItem::Resource(r) if *r as usize >= k)) > 0 {
                    return Err(invalid(format!("map has resource types beyond k = {k}")));
                }
            }
            RulesConfig::Chemistry(_) => {
                let g = graph
                    .as_ref()
                    .ok_or_else(|| invalid("chemistry substrate without a reaction graph".into()))?;
                for cell in &map.cells {
                    if let Some(InitialItem::Molecule(name)) = &cell.item {
                        if g.species_id(name).is_none() {
                            return Err(invalid(format!("map molecule `{name}` not in graph")));
                        }
                    }
                }
            }
            _ => {}
        }

        let mut actions = BASE_ACTIONS.to_vec();
        actions.extend(config.rules.extra_actions());
        let mut beams = config.rules.default_beams();
        for (name, spec) in &config.beams {
            let kinds: Vec<BeamKind> = match name.as_str() {
                "interaction" => vec![BeamKind::Interaction],
                "zap" => vec![BeamKind::Zap],
                "clean" => vec![BeamKind::Clean],
                "plant" => (0..3).map(BeamKind::Plant).collect(),
                "claim" => vec![BeamKind::Claim],
                "paint" => vec![BeamKind::Paint],
                other => return Err(invalid(format!("unknown beam `{other}`"))),
            };
            for k in kinds {
                if beams.get(k).is_none() {
                    return Err(invalid(format!("beam `{name}` is not used by this substrate")));
                }
                beams = beams.with_override(k, *spec);
            }
        }

        let seat_groups = match &config.rules {
            RulesConfig::Team(_) => vec![(0..n / 2).collect(), (n / 2..n).collect()],
            RulesConfig::Matrix(m) if m.roles == crate::matrix::RoleAssignment::FixedRowColumn => {
                vec![(0..n / 2).collect(), (n / 2..n).collect()]
            }
            _ => vec![(0..n).collect()],
        };

        Ok(Self {
            config,
            map,
            actions,
            beams,
            graph,
            seat_groups,
        })
    }

    pub fn id(&self) -> &str {
        &self.config.id
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn players(&self) -> usize {
        self.config.players
    }

    pub fn episode_length(&self) -> u32 {
        self.config.episode_length
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn action_index(&self, kind: ActionKind) -> Option<usize> {
        self.actions.iter().position(|a| *a == kind)
    }

    /// Player indices that play interchangeable roles (teams, fixed
    /// row/column roles). Seat shuffling only permutes within a group.
    pub fn seat_groups(&self) -> &[Vec<usize>] {
        &self.seat_groups
    }

    /// Start a new episode.
    pub fn reset(self: &Arc<Self>, seed: u64) -> GridState {
        let map = &self.map;
        let n = self.config.players;
        let terrain = map.cells.iter().map(|c| c.terrain()).collect();
        let mut world = World::new(map.width, map.height, terrain, self.config.episode_length, seed);

        for (i, cell) in map.cells.iter().enumerate() {
            let item = match &cell.item {
                None => Item::Empty,
                Some(InitialItem::Resource(k)) => Item::Resource(*k),
                Some(InitialItem::Apple) => Item::Apple,
                Some(InitialItem::Berry) => Item::Berry {
                    color: 0,
                    ripe: false,
                },
                Some(InitialItem::Claimable) => Item::Claimable,
                Some(InitialItem::Molecule(name)) => Item::Molecule(
                    self.graph
                        .as_ref()
                        .and_then(|g| g.species_id(name))
                        .expect("validated at construction"),
                ),
            };
            world.items[i] = item;
        }

        for (key, team) in [None, Some(Team::Red), Some(Team::Blue)].into_iter().enumerate() {
            let mut points = map.spawn_points(team);
            if points.is_empty() {
                continue;
            }
            world.rng.shuffle(Stream::SpawnShuffle, key as u64, &mut points);
            world.spawns.push(SpawnGroup {
                team,
                points,
                cursor: 0,
            });
        }

        let teams = matches!(self.config.rules, RulesConfig::Team(_));
        for p in 0..n {
            let team = teams.then(|| if p < n / 2 { Team::Red } else { Team::Blue });
            world.avatars.push(Avatar {
                id: p,
                pos: Pos::new(0, 0),
                orientation: Orientation::North,
                health: team.map(|_| 2),
                inventory: Inventory::empty(),
                held: None,
                removed_until: Some(0),
                frozen_until: 0,
                marked_until: 0,
                team,
                color_tag: p as u8,
                beam_ready_at: [0; BEAM_SLOTS],
            });
        }
        world.rewards = vec![0.0; n];
        for p in 0..n {
            let pos = world.take_spawn(p).expect("spawn points validated");
            world.place(p, pos);
            world.avatars[p].orientation = world.random_orientation(p);
        }

        let rules = match &self.config.rules {
            RulesConfig::Matrix(spec) => {
                let mut r = MatrixRules::new(spec.clone(), n).expect("validated at construction");
                r.init(&mut world);
                Mechanics::Matrix(r)
            }
            RulesConfig::Commons(spec) => Mechanics::Commons(CommonsRules::new(spec.clone(), &world)),
            RulesConfig::CleanUp(spec) => Mechanics::CleanUp(CleanUpRules::new(spec.clone(), map, &world)),
            RulesConfig::Allelopathic(spec) => {
                Mechanics::Allelopathic(AllelopathicRules::new(spec.clone(), &mut world))
            }
            RulesConfig::Territory(spec) => {
                Mechanics::Territory(TerritoryRules::new(spec.clone(), &world))
            }
            RulesConfig::Team(spec) => Mechanics::Team(TeamRules::new(spec.clone(), map, &mut world)),
            RulesConfig::Chemistry(spec) => Mechanics::Chemistry(ChemistryRules::new(
                spec.clone(),
                self.graph.clone().expect("validated at construction"),
                map,
            )),
        };
        GridState::from_parts(world, rules, Arc::clone(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_action_prefix() {
        for cfg in [
            "kind = \"commons\"",
            "kind = \"clean_up\"",
            "kind = \"allelopathic\"",
            "kind = \"territory\"",
            "kind = \"team\"\ngame = \"king_of_the_hill\"",
        ] {
            let rules: RulesConfig = toml::from_str(cfg).unwrap();
            let mut actions = BASE_ACTIONS.to_vec();
            actions.extend(rules.extra_actions());
            assert_eq!(&actions[..7], &BASE_ACTIONS);
            for a in &actions[7..] {
                if let ActionKind::Beam(b) = a {
                    assert!(rules.default_beams().get(*b).is_some(), "{a:?}");
                }
            }
        }
    }
}

//! Shared beam geometry for zapping, interaction, cleaning, claiming,
//! planting and painting beams. Substrate handlers decide what a hit does.

use super::event::EventKind;
use super::geom::Pos;
use super::map::Terrain;
use super::state::{Item, World};
use serde::{Deserialize, Serialize};

pub const BEAM_SLOTS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamKind {
    /// Matrix-game interaction beam; hits the first avatar.
    Interaction,
    /// Punishment beam; hits the first avatar, or the first resource wall in
    /// territory substrates.
    Zap,
    /// Hits every water cell in range.
    Clean,
    /// Recolors the first berry in range to the given color.
    Plant(u8),
    /// Passes through resource walls, hitting each in range.
    Claim,
    /// Paints every floor cell from the firer's own cell forward and hits
    /// the first opposing-team avatar. Teammates are transparent.
    Paint,
}

impl BeamKind {
    pub fn slot(self) -> usize {
        match self {
            BeamKind::Interaction => 0,
            BeamKind::Zap => 1,
            BeamKind::Clean => 2,
            BeamKind::Plant(_) => 3,
            BeamKind::Claim => 4,
            BeamKind::Paint => 5,
        }
    }

    pub fn code(self) -> f64 {
        match self {
            BeamKind::Plant(c) => 10.0 + c as f64,
            other => other.slot() as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamSpec {
    pub range: u8,
    /// Steps between consecutive uses; 1 allows firing every step.
    pub cooldown: u32,
}

/// Range and cooldown per beam kind for one substrate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BeamTable {
    entries: Vec<(BeamKind, BeamSpec)>,
}

impl BeamTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, kind: BeamKind, spec: BeamSpec) -> Self {
        self.entries.push((kind, spec));
        self
    }

    /// Replace the spec of an existing entry, or add it.
    pub fn with_override(mut self, kind: BeamKind, spec: BeamSpec) -> Self {
        match self.entries.iter_mut().find(|(k, _)| *k == kind) {
            Some(entry) => entry.1 = spec,
            None => self.entries.push((kind, spec)),
        }
        self
    }

    pub fn get(&self, kind: BeamKind) -> Option<BeamSpec> {
        self.entries
            .iter()
            .find_map(|(k, s)| (*k == kind).then_some(*s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BeamHit {
    Cell(Pos),
    Avatar(usize),
}

/// Trace a beam from `player` along its facing direction.
///
/// Returns `None` (after emitting `beam_blocked`) while the beam is cooling
/// down, and otherwise the hits in order of distance after emitting
/// `beam_fired`. Beams stop at walls and at the map edge.
pub(crate) fn cast_beam(
    world: &mut World,
    table: &BeamTable,
    player: usize,
    kind: BeamKind,
) -> Option<Vec<BeamHit>> {
    let spec = table.get(kind)?;
    let t = world.step;
    let slot = kind.slot();
    let a = &world.avatars[player];
    if a.removed_until.is_some() {
        return None;
    }
    if t < a.beam_ready_at[slot] {
        let ev = world
            .event(EventKind::BeamBlocked)
            .actor(player)
            .with("beam", kind.code());
        world.emit(ev);
        return None;
    }
    let origin = a.pos;
    let dir = a.orientation;
    let team = a.team;
    world.avatars[player].beam_ready_at[slot] = t + spec.cooldown.max(1);

    let mut hits = Vec::new();
    if kind == BeamKind::Paint {
        hits.push(BeamHit::Cell(origin));
    }
    let mut pos = origin;
    for _ in 0..spec.range {
        pos = pos.step(dir);
        if !world.in_bounds(pos) || world.terrain_at(pos) == Terrain::Wall {
            break;
        }
        let water = world.terrain_at(pos) == Terrain::Water;
        if let Some(other) = world.avatar_at(pos) {
            match kind {
                BeamKind::Interaction | BeamKind::Zap => {
                    hits.push(BeamHit::Avatar(other));
                    break;
                }
                BeamKind::Paint => {
                    if team.is_some() && world.avatars[other].team == team {
                        hits.push(BeamHit::Cell(pos));
                        continue;
                    }
                    hits.push(BeamHit::Cell(pos));
                    hits.push(BeamHit::Avatar(other));
                    break;
                }
                _ => break,
            }
        }
        match (kind, world.item_at(pos)) {
            (BeamKind::Zap, Item::Claimable) => {
                hits.push(BeamHit::Cell(pos));
                break;
            }
            (BeamKind::Claim, Item::Claimable) => hits.push(BeamHit::Cell(pos)),
            (BeamKind::Plant(_), Item::Berry { .. }) => {
                hits.push(BeamHit::Cell(pos));
                break;
            }
            (_, item) if item.solid() => break,
            (BeamKind::Clean, _) if water => hits.push(BeamHit::Cell(pos)),
            (BeamKind::Paint, _) if !water => hits.push(BeamHit::Cell(pos)),
            _ => {}
        }
    }
    let ev = world
        .event(EventKind::BeamFired)
        .actor(player)
        .at(origin)
        .with("beam", kind.code());
    world.emit(ev);
    Some(hits)
}

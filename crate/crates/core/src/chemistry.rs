//! Reaction-graph substrates. Molecules sit on cells (one per cell, solid)
//! or in an avatar's hands (one per avatar) and react when the reactants of
//! a reaction are close together.
//!
//! Reaction graph files are TOML:
//!
//! ```toml
//! species = ["a", "b", "c"]
//!
//! [[reaction]]
//! name = "join"
//! reactants = ["a", "b"]
//! products = ["c", "c"]
//! rate_world = 0.05
//! rate_inventory = 0.5
//! reward = 1.0
//! ```

use crate::grid::{EventKind, GridMap, Item, Pos, Stream, World};
use crate::substrate::Rules;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("parse: {0}")]
    Parse(String),
    #[error("reaction `{reaction}` names undeclared species `{species}`")]
    UnknownSpecies { reaction: String, species: String },
    #[error("reaction `{reaction}` has rate {rate} outside [0, 1]")]
    BadRate { reaction: String, rate: f64 },
    #[error("reaction `{0}` has no reactants")]
    NoReactants(String),
    #[error("species `{0}` declared twice")]
    DuplicateSpecies(String),
}

#[derive(Clone, Debug, Deserialize)]
struct GraphFile {
    species: Vec<String>,
    #[serde(default, rename = "reaction")]
    reactions: Vec<ReactionFile>,
}

fn default_reward() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
struct ReactionFile {
    name: String,
    reactants: Vec<String>,
    #[serde(default)]
    products: Vec<String>,
    rate_world: f64,
    rate_inventory: f64,
    #[serde(default = "default_reward")]
    reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reaction {
    pub name: String,
    /// Species ids, sorted.
    pub reactants: Vec<u16>,
    pub products: Vec<u16>,
    pub rate_world: f64,
    pub rate_inventory: f64,
    /// Paid to each avatar whose held molecule takes part.
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReactionGraph {
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
}

impl ReactionGraph {
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let file: GraphFile = toml::from_str(text).map_err(|e| GraphError::Parse(e.to_string()))?;
        let mut ids = BTreeMap::new();
        for (i, s) in file.species.iter().enumerate() {
            if ids.insert(s.clone(), i as u16).is_some() {
                return Err(GraphError::DuplicateSpecies(s.clone()));
            }
        }
        let mut reactions = Vec::new();
        for r in file.reactions {
            let lookup = |names: &[String]| -> Result<Vec<u16>, GraphError> {
                let mut v = names
                    .iter()
                    .map(|n| {
                        ids.get(n).copied().ok_or_else(|| GraphError::UnknownSpecies {
                            reaction: r.name.clone(),
                            species: n.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                v.sort_unstable();
                Ok(v)
            };
            let reactants = lookup(&r.reactants)?;
            let products = lookup(&r.products)?;
            if reactants.is_empty() {
                return Err(GraphError::NoReactants(r.name));
            }
            for rate in [r.rate_world, r.rate_inventory] {
                if !(0.0..=1.0).contains(&rate) {
                    return Err(GraphError::BadRate {
                        reaction: r.name.clone(),
                        rate,
                    });
                }
            }
            reactions.push(Reaction {
                name: r.name,
                reactants,
                products,
                rate_world: r.rate_world,
                rate_inventory: r.rate_inventory,
                reward: r.reward,
            });
        }
        Ok(Self {
            species: file.species,
            reactions,
        })
    }

    pub fn species_id(&self, name: &str) -> Option<u16> {
        self.species.iter().position(|s| s == name).map(|i| i as u16)
    }

    pub fn reaction_id(&self, name: &str) -> Option<usize> {
        self.reactions.iter().position(|r| r.name == name)
    }
}

fn default_radius() -> i32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChemistrySpec {
    /// Reaction graph id in the registry.
    pub graph: String,
    /// Chebyshev radius within which reactants count as "near".
    #[serde(default = "default_radius")]
    pub radius: i32,
}

/// Where a molecule taking part in a reaction sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Cell(usize),
    Held(usize),
}

#[derive(Clone, Debug, Serialize)]
pub struct ChemistryRules {
    spec: ChemistrySpec,
    #[serde(skip)]
    graph: ReactionGraph,
    #[serde(skip)]
    sites: Vec<bool>,
    /// Cells touched by a reaction this step; they do not react again.
    #[serde(skip)]
    used: Vec<bool>,
}

impl ChemistryRules {
    pub fn new(spec: ChemistrySpec, graph: ReactionGraph, map: &GridMap) -> Self {
        let n = map.cells.len();
        Self {
            spec,
            graph,
            sites: map.cells.iter().map(|c| c.site).collect(),
            used: vec![false; n],
        }
    }

    pub fn graph(&self) -> &ReactionGraph {
        &self.graph
    }

    pub fn is_site(&self, cell: usize) -> bool {
        self.sites[cell]
    }

    fn species_in(&self, world: &World, slot: Slot) -> Option<u16> {
        match slot {
            Slot::Cell(i) => match world.items[i] {
                Item::Molecule(s) => Some(s),
                _ => None,
            },
            Slot::Held(p) => world.avatars[p].held,
        }
    }

    fn slot_at(world: &World, i: usize) -> Option<Slot> {
        match world.items[i] {
            Item::Molecule(_) => Some(Slot::Cell(i)),
            _ => world
                .avatar_at_idx(i)
                .filter(|&p| world.avatars[p].held.is_some())
                .map(Slot::Held),
        }
    }

    /// Run one round of reactions over the whole map.
    ///
    /// Anchors are visited in row-major order. For each anchor the
    /// reactions are tried in graph order; a reaction is eligible when its
    /// reactant multiset can be drawn from the anchor plus unused molecules
    /// within the radius and its products have room. The first eligible
    /// reaction whose Bernoulli draw succeeds fires. A reactant set gets one
    /// draw per step however many of its members anchor an attempt.
    pub fn react_step(&mut self, world: &mut World) {
        self.used.iter_mut().for_each(|u| *u = false);
        let r = self.spec.radius;
        let mut neighborhood: Vec<(usize, Slot)> = Vec::new();
        for anchor in 0..world.cell_count() {
            if self.used[anchor] {
                continue;
            }
            let Some(anchor_slot) = Self::slot_at(world, anchor) else { continue };
            let center = world.pos(anchor);
            neighborhood.clear();
            for dr in -r..=r {
                for dc in -r..=r {
                    let q = center.offset(dr, dc);
                    if (dr, dc) == (0, 0) || !world.in_bounds(q) {
                        continue;
                    }
                    let qi = world.idx(q);
                    if self.used[qi] {
                        continue;
                    }
                    if let Some(s) = Self::slot_at(world, qi) {
                        neighborhood.push((qi, s));
                    }
                }
            }
            for (ri, reaction) in self.graph.reactions.iter().enumerate() {
                let Some(chosen) = self.select(world, anchor, anchor_slot, &neighborhood, &reaction.reactants)
                else {
                    continue;
                };
                let Some(placement) = Self::place(world, center, r, &chosen, reaction.products.len(), &self.used)
                else {
                    continue;
                };
                let held = chosen.iter().any(|(_, s)| matches!(s, Slot::Held(_)));
                let rate = if held { reaction.rate_inventory } else { reaction.rate_world };
                // Keyed by the reactant cells, so every anchor of the same
                // set sees the same draw this step.
                let mut cells: Vec<u64> = chosen.iter().map(|&(c, _)| c as u64).collect();
                cells.sort_unstable();
                let key = cells
                    .iter()
                    .fold(ri as u64, |k, &c| k.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(c + 1));
                if rate <= 0.0 || !world.rng.bernoulli(Stream::Reaction, key, world.step, rate) {
                    continue;
                }
                // Fire: clear reactants, then fill the placement slots.
                let mut holders: Vec<usize> = Vec::new();
                for &(cell, slot) in &chosen {
                    self.used[cell] = true;
                    match slot {
                        Slot::Cell(i) => world.items[i] = Item::Empty,
                        Slot::Held(p) => {
                            world.avatars[p].held = None;
                            holders.push(p);
                        }
                    }
                }
                for (&(cell, slot), &species) in placement.iter().zip(&reaction.products) {
                    self.used[cell] = true;
                    match slot {
                        Slot::Cell(i) => world.items[i] = Item::Molecule(species),
                        Slot::Held(p) => {
                            world.avatars[p].held = Some(species);
                            if !holders.contains(&p) {
                                holders.push(p);
                            }
                        }
                    }
                }
                holders.sort_unstable();
                for &p in &holders {
                    world.reward(p, reaction.reward);
                }
                let mut ev = world
                    .event(EventKind::ReactionFired)
                    .at(center)
                    .with("reaction", ri as f64)
                    .with("held", holders.len() as f64);
                if let Some(&p) = holders.first() {
                    ev = ev.actor(p);
                }
                if let Some(&p) = holders.get(1) {
                    ev = ev.target(p);
                }
                world.emit(ev);
                break;
            }
        }
    }

    /// Reactant slots for `reactants` that include the anchor, or `None`.
    fn select(
        &self,
        world: &World,
        anchor: usize,
        anchor_slot: Slot,
        neighborhood: &[(usize, Slot)],
        reactants: &[u16],
    ) -> Option<Vec<(usize, Slot)>> {
        let anchor_species = self.species_in(world, anchor_slot)?;
        let mut need: Vec<u16> = reactants.to_vec();
        let pos = need.iter().position(|&s| s == anchor_species)?;
        need.remove(pos);
        let mut chosen = vec![(anchor, anchor_slot)];
        for &(cell, slot) in neighborhood {
            if need.is_empty() {
                break;
            }
            let Some(s) = self.species_in(world, slot) else { continue };
            if let Some(k) = need.iter().position(|&x| x == s) {
                need.remove(k);
                chosen.push((cell, slot));
            }
        }
        need.is_empty().then_some(chosen)
    }

    /// Where products go: vacated hands first, then vacated cells, then
    /// free cells around the anchor in row-major order.
    fn place(
        world: &World,
        center: Pos,
        r: i32,
        chosen: &[(usize, Slot)],
        products: usize,
        used: &[bool],
    ) -> Option<Vec<(usize, Slot)>> {
        let mut out: Vec<(usize, Slot)> = chosen
            .iter()
            .filter(|(_, s)| matches!(s, Slot::Held(_)))
            .chain(chosen.iter().filter(|(_, s)| matches!(s, Slot::Cell(_))))
            .copied()
            .take(products)
            .collect();
        if out.len() < products {
            for dr in -r..=r {
                for dc in -r..=r {
                    if out.len() == products {
                        break;
                    }
                    let q = center.offset(dr, dc);
                    if !world.is_open(q) {
                        continue;
                    }
                    let qi = world.idx(q);
                    if !used[qi] {
                        out.push((qi, Slot::Cell(qi)));
                    }
                }
            }
        }
        (out.len() == products).then_some(out)
    }
}

impl Rules for ChemistryRules {
    fn on_interact(&mut self, world: &mut World, p: usize) {
        let a = &world.avatars[p];
        let front = a.pos.step(a.orientation);
        if !world.in_bounds(front) {
            return;
        }
        let i = world.idx(front);
        match (a.held, world.items[i]) {
            (None, Item::Molecule(s)) => {
                world.items[i] = Item::Empty;
                world.avatars[p].held = Some(s);
                let ev = world
                    .event(EventKind::MoleculePickedUp)
                    .actor(p)
                    .at(front)
                    .with("species", s as f64);
                world.emit(ev);
            }
            (Some(s), _) if world.is_open(front) => {
                world.items[i] = Item::Molecule(s);
                world.avatars[p].held = None;
                let ev = world
                    .event(EventKind::MoleculeDropped)
                    .actor(p)
                    .at(front)
                    .with("species", s as f64);
                world.emit(ev);
            }
            _ => {}
        }
    }

    fn world_update(&mut self, world: &mut World) {
        self.react_step(world);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let g = ReactionGraph::parse(
            r#"
species = ["a", "b", "c"]
[[reaction]]
name = "x"
reactants = ["b", "a"]
products = ["c"]
rate_world = 0.5
rate_inventory = 1.0
"#,
        )
        .unwrap();
        assert_eq!(g.reactions[0].reactants, vec![0, 1]);
        assert_eq!(g.reactions[0].reward, 1.0);
        let bad = "species = [\"a\"]\n[[reaction]]\nname=\"x\"\nreactants=[\"z\"]\nrate_world=0.1\nrate_inventory=0.1\n";
        assert!(matches!(
            ReactionGraph::parse(bad),
            Err(GraphError::UnknownSpecies { .. })
        ));
        let rate = "species = [\"a\"]\n[[reaction]]\nname=\"x\"\nreactants=[\"a\"]\nrate_world=1.5\nrate_inventory=0.1\n";
        assert!(matches!(ReactionGraph::parse(rate), Err(GraphError::BadRate { .. })));
    }
}

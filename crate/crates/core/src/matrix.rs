//! "* in the Matrix" mechanics: resources are collected into an inventory,
//! and an interaction beam resolves a matrix game between two inventories.

use crate::grid::{BeamHit, BeamKind, EventKind, Item, Pos, World};
use crate::scalar::Scalar;
use crate::substrate::Rules;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("inventory is empty; the mixed strategy is undefined")]
    EmptyInventory,
    #[error("inventory has {found} entries, matrix expects {expected}")]
    Dimension { found: usize, expected: usize },
    #[error("payoff matrix must be square and non-empty")]
    NotSquare,
    #[error("matrix is flagged symmetric but a_col is not the transpose of a_row")]
    NotSymmetric,
    #[error("inventory counts must be nonnegative")]
    Negative,
}

/// Per-resource counts ρ.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Inventory<T> {
    counts: Vec<T>,
}

impl<T: Scalar> Inventory<T> {
    pub fn new(counts: Vec<T>) -> Result<Self, MatrixError> {
        if counts.iter().any(|c| *c < T::zero()) {
            return Err(MatrixError::Negative);
        }
        Ok(Self { counts })
    }

    pub fn zeros(k: usize) -> Self {
        Self {
            counts: vec![T::zero(); k],
        }
    }

    pub fn empty() -> Self {
        Self { counts: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[T] {
        &self.counts
    }

    pub fn total(&self) -> T {
        self.counts.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn add(&mut self, k: usize, amount: T) {
        self.counts[k] = self.counts[k] + amount;
    }

    pub fn pure(k: usize, i: usize) -> Self {
        let mut inv = Self::zeros(k);
        inv.counts[i] = T::one();
        inv
    }
}

/// v_i = ρ_i / Σ_j ρ_j.
pub fn mixed_strategy<T: Scalar>(inv: &Inventory<T>) -> Result<Vec<T>, MatrixError> {
    let total = inv.total();
    if total == T::zero() {
        return Err(MatrixError::EmptyInventory);
    }
    Ok(inv.counts.iter().map(|&c| c / total).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix<T> {
    pub a_row: Vec<Vec<T>>,
    pub a_col: Vec<Vec<T>>,
    pub symmetric: bool,
}

fn is_square<T>(m: &[Vec<T>]) -> bool {
    !m.is_empty() && m.iter().all(|r| r.len() == m.len())
}

impl<T: Scalar> PayoffMatrix<T> {
    pub fn new(a_row: Vec<Vec<T>>, a_col: Vec<Vec<T>>, symmetric: bool) -> Result<Self, MatrixError> {
        if !is_square(&a_row) || !is_square(&a_col) || a_row.len() != a_col.len() {
            return Err(MatrixError::NotSquare);
        }
        let k = a_row.len();
        if symmetric && (0..k).any(|i| (0..k).any(|j| a_col[i][j] != a_row[j][i])) {
            return Err(MatrixError::NotSymmetric);
        }
        Ok(Self {
            a_row,
            a_col,
            symmetric,
        })
    }

    /// Symmetric game with `A_col = A_rowᵀ`.
    pub fn symmetric(a_row: Vec<Vec<T>>) -> Result<Self, MatrixError> {
        if !is_square(&a_row) {
            return Err(MatrixError::NotSquare);
        }
        let k = a_row.len();
        let a_col = (0..k).map(|i| (0..k).map(|j| a_row[j][i]).collect()).collect();
        Self::new(a_row, a_col, true)
    }

    pub fn k(&self) -> usize {
        self.a_row.len()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> PayoffMatrix<U> {
        let conv = |m: &Vec<Vec<T>>| m.iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect();
        PayoffMatrix {
            a_row: conv(&self.a_row),
            a_col: conv(&self.a_col),
            symmetric: self.symmetric,
        }
    }
}

fn bilinear<T: Scalar>(u: &[T], a: &[Vec<T>], v: &[T]) -> T {
    let mut acc = T::zero();
    for (i, &ui) in u.iter().enumerate() {
        if ui == T::zero() {
            continue;
        }
        let mut row = T::zero();
        for (j, &vj) in v.iter().enumerate() {
            row = row + a[i][j] * vj;
        }
        acc = acc + ui * row;
    }
    acc
}

/// `(v_rowᵀ A_row v_col, v_rowᵀ A_col v_col)` with v the normalized inventories.
pub fn resolve_interaction<T: Scalar>(
    row: &Inventory<T>,
    col: &Inventory<T>,
    m: &PayoffMatrix<T>,
) -> Result<(T, T), MatrixError> {
    for inv in [row, col] {
        if inv.len() != m.k() {
            return Err(MatrixError::Dimension {
                found: inv.len(),
                expected: m.k(),
            });
        }
    }
    let (tr, tc) = (row.total(), col.total());
    if tr == T::zero() || tc == T::zero() {
        return Err(MatrixError::EmptyInventory);
    }
    // ρ_rowᵀ A ρ_col / (Σρ_row Σρ_col): one rounding at the end, so integer
    // inventories under an antisymmetric game give exactly opposite rewards.
    let d = tr * tc;
    Ok((
        bilinear(row.counts(), &m.a_row, col.counts()) / d,
        bilinear(row.counts(), &m.a_col, col.counts()) / d,
    ))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleAssignment {
    /// The zapper is always the row player.
    #[default]
    None,
    /// Players `0..N/2` are row players, the rest column players.
    FixedRowColumn,
}

fn default_removal() -> u32 {
    200
}

fn default_respawn() -> u32 {
    100
}

/// Parameters of one matrix substrate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub a_row: Vec<Vec<f64>>,
    /// Defaults to the transpose of `a_row`.
    #[serde(default)]
    pub a_col: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub initial_inventory: Option<Vec<f64>>,
    #[serde(default = "default_removal")]
    pub removal_steps: u32,
    #[serde(default)]
    pub winner_inventory_reset: bool,
    #[serde(default)]
    pub roles: RoleAssignment,
    /// Steps before a collected resource reappears in its cell.
    #[serde(default = "default_respawn")]
    pub resource_respawn: u32,
    /// All avatars share one color.
    #[serde(default)]
    pub anonymous: bool,
}

impl MatrixSpec {
    pub fn payoff(&self) -> Result<PayoffMatrix<f64>, MatrixError> {
        match &self.a_col {
            Some(a_col) => {
                let sym = PayoffMatrix::new(self.a_row.clone(), a_col.clone(), true).is_ok();
                PayoffMatrix::new(self.a_row.clone(), a_col.clone(), sym)
            }
            None => PayoffMatrix::symmetric(self.a_row.clone()),
        }
    }

    pub fn k(&self) -> usize {
        self.a_row.len()
    }

    pub fn initial(&self) -> Inventory<f64> {
        match &self.initial_inventory {
            Some(v) => Inventory { counts: v.clone() },
            None => Inventory::zeros(self.k()),
        }
    }
}

/// Encounter resolution outcome, mainly for tests and bots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Encounter {
    Resolved {
        row: usize,
        col: usize,
        row_reward: f64,
        col_reward: f64,
        loser: usize,
    },
    /// Empty inventory or same-role pair.
    NoEffect,
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixRules {
    spec: MatrixSpec,
    #[serde(skip)]
    payoff: PayoffMatrix<f64>,
    players: usize,
    /// Collected resources waiting to reappear: (cell, type, due step).
    pending: Vec<(usize, u8, u32)>,
}

impl MatrixRules {
    pub fn new(spec: MatrixSpec, players: usize) -> Result<Self, MatrixError> {
        let payoff = spec.payoff()?;
        if spec.initial().len() != payoff.k() {
            return Err(MatrixError::Dimension {
                found: spec.initial().len(),
                expected: payoff.k(),
            });
        }
        Ok(Self {
            spec,
            payoff,
            players,
            pending: Vec::new(),
        })
    }

    pub fn spec(&self) -> &MatrixSpec {
        &self.spec
    }

    pub fn payoff(&self) -> &PayoffMatrix<f64> {
        &self.payoff
    }

    /// Whether `p` plays the row role (always true without fixed roles).
    pub fn is_row_player(&self, p: usize) -> bool {
        match self.spec.roles {
            RoleAssignment::None => true,
            RoleAssignment::FixedRowColumn => p < self.players / 2,
        }
    }

    pub(crate) fn init(&mut self, world: &mut World) {
        let init = self.spec.initial();
        for (p, a) in world.avatars.iter_mut().enumerate() {
            a.inventory = init.clone();
            a.color_tag = if self.spec.anonymous {
                0
            } else if self.spec.roles == RoleAssignment::FixedRowColumn {
                if p < self.players / 2 {
                    1
                } else {
                    4
                }
            } else {
                p as u8
            };
        }
    }

    /// Resolve an interaction-beam hit of `zapper` on `zapped`.
    pub fn apply_encounter(&mut self, world: &mut World, zapper: usize, zapped: usize) -> Encounter {
        let pos = world.avatars[zapped].pos;
        let (row, col) = match self.spec.roles {
            RoleAssignment::None => (zapper, zapped),
            RoleAssignment::FixedRowColumn => {
                match (self.is_row_player(zapper), self.is_row_player(zapped)) {
                    (true, false) => (zapper, zapped),
                    (false, true) => (zapped, zapper),
                    _ => {
                        let ev = world
                            .event(EventKind::NoEffect)
                            .actor(zapper)
                            .target(zapped)
                            .at(pos)
                            .with("same_role", 1.0);
                        world.emit(ev);
                        return Encounter::NoEffect;
                    }
                }
            }
        };
        let (rr, rc) = match resolve_interaction(
            &world.avatars[row].inventory,
            &world.avatars[col].inventory,
            &self.payoff,
        ) {
            Ok(r) => r,
            Err(_) => {
                let ev = world
                    .event(EventKind::NoEffect)
                    .actor(zapper)
                    .target(zapped)
                    .at(pos)
                    .with("empty_inventory", 1.0);
                world.emit(ev);
                return Encounter::NoEffect;
            }
        };
        let strategy = |w: &World, p: usize| {
            let c = w.avatars[p].inventory.counts();
            let mut best = 0;
            for (i, &x) in c.iter().enumerate() {
                if x > c[best] {
                    best = i;
                }
            }
            best as f64
        };
        let (s_row, s_col) = (strategy(world, row), strategy(world, col));

        world.reward(row, rr);
        world.reward(col, rc);
        let (zapper_r, zapped_r) = if row == zapper { (rr, rc) } else { (rc, rr) };
        let ev = world
            .event(EventKind::Interaction)
            .actor(zapper)
            .target(zapped)
            .at(pos)
            .with("row_reward", rr)
            .with("col_reward", rc)
            .with("zapper_reward", zapper_r)
            .with("zapped_reward", zapped_r)
            .with("row_is_zapper", if row == zapper { 1.0 } else { 0.0 });
        world.emit(ev);
        for (me, partner, s) in [(row, col, s_col), (col, row, s_row)] {
            let ev = world
                .event(EventKind::PartnerPlayed)
                .actor(me)
                .target(partner)
                .with("strategy", s);
            world.emit(ev);
        }

        let (winner, loser) = if zapper_r < zapped_r {
            (zapped, zapper)
        } else {
            (zapper, zapped)
        };
        let init = self.spec.initial();
        world.avatars[loser].inventory = init.clone();
        if self.spec.winner_inventory_reset {
            world.avatars[winner].inventory = init;
        }
        world.remove(loser, Some(self.spec.removal_steps));
        Encounter::Resolved {
            row,
            col,
            row_reward: rr,
            col_reward: rc,
            loser,
        }
    }
}

impl Rules for MatrixRules {
    fn on_enter(&mut self, world: &mut World, p: usize, idx: usize) {
        if let Item::Resource(k) = world.items[idx] {
            if (k as usize) < self.payoff.k() {
                world.avatars[p].inventory.add(k as usize, 1.0);
                world.set_item(idx, Item::Empty);
                self.pending
                    .push((idx, k, world.step + self.spec.resource_respawn));
                let ev = world
                    .event(EventKind::ResourceCollected)
                    .actor(p)
                    .at(world.pos(idx))
                    .with("resource", k as f64);
                world.emit(ev);
            }
        }
    }

    fn on_beam(&mut self, world: &mut World, p: usize, kind: BeamKind, hits: &[BeamHit]) {
        if kind != BeamKind::Interaction {
            return;
        }
        for hit in hits {
            if let BeamHit::Avatar(q) = *hit {
                if world.is_active(q) && world.is_active(p) {
                    self.apply_encounter(world, p, q);
                }
            }
        }
    }

    fn world_update(&mut self, world: &mut World) {
        let t = world.step;
        let mut i = 0;
        while i < self.pending.len() {
            let (idx, k, due) = self.pending[i];
            if due <= t && world.items[idx] == Item::Empty && world.avatar_at_idx(idx).is_none() {
                world.set_item(idx, Item::Resource(k));
                let ev = world
                    .event(EventKind::ResourceRespawned)
                    .at(world.pos(idx))
                    .with("resource", k as f64);
                world.emit(ev);
                self.pending.remove(i);
            } else {
                i += 1;
            }
        }
    }
}

impl MatrixRules {
    /// Cells whose resource is currently out, with the step it is due back.
    pub fn pending_resources(&self, world: &World) -> Vec<(Pos, u8, u32)> {
        self.pending
            .iter()
            .map(|&(i, k, d)| (world.pos(i), k, d))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd() -> PayoffMatrix<f64> {
        PayoffMatrix::symmetric(vec![vec![3.0, 0.0], vec![4.0, 1.0]]).unwrap()
    }

    #[test]
    fn mixed_strategy_examples() {
        let v = mixed_strategy(&Inventory::new(vec![2.0, 1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(v, vec![0.5, 0.25, 0.25]);
        assert_eq!(
            mixed_strategy(&Inventory::<f64>::zeros(3)),
            Err(MatrixError::EmptyInventory)
        );
    }

    #[test]
    fn pd_bilinear_examples() {
        let c = Inventory::pure(2, 0);
        assert_eq!(resolve_interaction(&c, &c, &pd()).unwrap(), (3.0, 3.0));
        let mixed = Inventory::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(resolve_interaction(&mixed, &c, &pd()).unwrap(), (3.5, 1.5));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let three = Inventory::new(vec![1.0, 1.0, 1.0]).unwrap();
        let two = Inventory::pure(2, 0);
        assert!(matches!(
            resolve_interaction(&three, &two, &pd()),
            Err(MatrixError::Dimension { found: 3, expected: 2 })
        ));
    }

    #[test]
    fn symmetric_flag_is_checked() {
        let a = vec![vec![3.0, 0.0], vec![0.0, 2.0]];
        let b = vec![vec![2.0, 0.0], vec![0.0, 3.0]];
        assert_eq!(
            PayoffMatrix::new(a.clone(), b.clone(), true),
            Err(MatrixError::NotSymmetric)
        );
        assert!(PayoffMatrix::new(a, b, false).is_ok());
    }
}

//! Grid pathfinding and facing helpers for scripted controllers.

use crate::grid::{GridState, Item, Orientation, Pos, Terrain};
use crate::substrate::{ActionKind, Mechanics};
use crate::grid::BeamKind;
use std::collections::VecDeque;

pub const NOOP: usize = 0;
pub const TURN_LEFT: usize = 5;
pub const TURN_RIGHT: usize = 6;

/// Result of a breadth-first search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Route {
    /// First step to take; `None` when already on a goal.
    pub first: Option<Orientation>,
    pub goal: usize,
    pub dist: u32,
}

/// Cells an avatar could stand on, ignoring other avatars and team paint.
pub fn walkable(state: &GridState, cell: usize) -> bool {
    let w = state.world();
    w.terrain[cell] == Terrain::Floor && !w.items[cell].solid()
}

/// Uniform-cost search from `me`'s cell to the nearest cell satisfying `goal`.
///
/// `pass` decides which cells may be traversed; the goal cell itself need
/// not be passable. Neighbours are expanded in a fixed order, so ties break
/// deterministically.
pub fn bfs(
    state: &GridState,
    from: Pos,
    pass: impl Fn(usize) -> bool,
    goal: impl Fn(usize) -> bool,
) -> Option<Route> {
    let w = state.world();
    if !w.in_bounds(from) {
        return None;
    }
    let start = w.idx(from);
    if goal(start) {
        return Some(Route {
            first: None,
            goal: start,
            dist: 0,
        });
    }
    let n = w.cell_count();
    let mut first: Vec<u8> = vec![u8::MAX; n];
    let mut dist = vec![u32::MAX; n];
    dist[start] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(c) = queue.pop_front() {
        let cp = w.pos(c);
        for o in Orientation::ALL {
            let q = cp.step(o);
            if !w.in_bounds(q) {
                continue;
            }
            let qi = w.idx(q);
            if dist[qi] != u32::MAX {
                continue;
            }
            let f = if c == start { o.index() } else { first[c] };
            if goal(qi) {
                return Some(Route {
                    first: Some(Orientation::from_index(f)),
                    goal: qi,
                    dist: dist[c] + 1,
                });
            }
            if !pass(qi) {
                continue;
            }
            dist[qi] = dist[c] + 1;
            first[qi] = f;
            queue.push_back(qi);
        }
    }
    None
}

/// Default traversal rule for player `me`: walkable cells, avoiding other
/// avatars next to `me`, and respecting team paint when `paint_through` is
/// false.
pub fn passable_for<'a>(
    state: &'a GridState,
    me: usize,
    paint_through: bool,
) -> impl Fn(usize) -> bool + 'a {
    let w = state.world();
    let here = w.avatars[me].pos;
    let team = w.avatars[me].team;
    let ground = match state.mechanics() {
        Mechanics::Team(r) if !paint_through => Some(r),
        _ => None,
    };
    move |cell| {
        if !walkable(state, cell) {
            return false;
        }
        if let Some(other) = w.avatar_at_idx(cell) {
            if other != me && w.pos(cell).manhattan(here) <= 1 {
                return false;
            }
        }
        if let (Some(r), Some(t)) = (ground, team) {
            if let Some(g) = r.ground_color(cell) {
                return g == t;
            }
        }
        true
    }
}

/// Move action that steps in absolute direction `dir` without turning.
pub fn move_toward(facing: Orientation, dir: Orientation) -> usize {
    if dir == facing {
        1
    } else if dir == facing.reverse() {
        2
    } else if dir == facing.turn_left() {
        3
    } else {
        4
    }
}

/// Turn action that brings `facing` closer to `dir`.
pub fn turn_toward(facing: Orientation, dir: Orientation) -> usize {
    if dir == facing.turn_left() {
        TURN_LEFT
    } else {
        TURN_RIGHT
    }
}

/// Walk along `dir` from `from` for up to `range` cells, stopping at walls,
/// the map edge and cells rejected by `through`. Returns the first cell
/// accepted by `hit`.
pub fn scan_line(
    state: &GridState,
    from: Pos,
    dir: Orientation,
    range: u8,
    hit: impl Fn(usize) -> bool,
    through: impl Fn(usize) -> bool,
) -> Option<usize> {
    let w = state.world();
    let mut p = from;
    for _ in 0..range {
        p = p.step(dir);
        if !w.in_bounds(p) || w.terrain_at(p) == Terrain::Wall {
            return None;
        }
        let i = w.idx(p);
        if hit(i) {
            return Some(i);
        }
        if !through(i) {
            return None;
        }
    }
    None
}

/// Cells a beam passes: floor or water without solid items or avatars.
pub fn beam_through(state: &GridState, cell: usize) -> bool {
    let w = state.world();
    !w.items[cell].solid() && w.avatar_at_idx(cell).is_none()
}

pub fn beam_action(state: &GridState, kind: BeamKind) -> Option<usize> {
    state.substrate().action_index(ActionKind::Beam(kind))
}

pub fn beam_range(state: &GridState, kind: BeamKind) -> u8 {
    state.substrate().beams.get(kind).map_or(0, |b| b.range)
}

/// If some direction has a target in beam range, fire when facing it or
/// turn toward it.
pub fn aim(
    state: &GridState,
    me: usize,
    kind: BeamKind,
    hit: impl Fn(usize) -> bool,
    through: impl Fn(usize) -> bool,
) -> Option<usize> {
    let fire = beam_action(state, kind)?;
    let range = beam_range(state, kind);
    let a = &state.world().avatars[me];
    let mut dirs = [a.orientation, a.orientation.turn_left(), a.orientation.turn_right(), a.orientation.reverse()];
    // Facing direction first, then the cheaper turns.
    dirs[1..].sort_by_key(|d| a.orientation.quarter_turns_to(*d).min(4 - a.orientation.quarter_turns_to(*d)));
    for d in dirs {
        if scan_line(state, a.pos, d, range, &hit, &through).is_some() {
            return Some(if d == a.orientation {
                fire
            } else {
                turn_toward(a.orientation, d)
            });
        }
    }
    None
}

/// Step along a route, or `None` when already at the goal.
pub fn follow(state: &GridState, me: usize, route: Option<Route>) -> Option<usize> {
    let r = route?;
    let facing = state.world().avatars[me].orientation;
    r.first.map(|d| move_toward(facing, d))
}

pub fn is_item(state: &GridState, cell: usize, pred: impl Fn(Item) -> bool) -> bool {
    pred(state.world().items[cell])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn move_mapping_covers_all_directions() {
        for f in Orientation::ALL {
            assert_eq!(move_toward(f, f), 1);
            assert_eq!(move_toward(f, f.reverse()), 2);
            assert_eq!(move_toward(f, f.turn_left()), 3);
            assert_eq!(move_toward(f, f.turn_right()), 4);
            assert_eq!(turn_toward(f, f.turn_left()), TURN_LEFT);
        }
    }
}

//! Scripted basic behaviours.

use super::nav::{self, aim, bfs, beam_through, follow, passable_for, walkable, NOOP};
use crate::grid::{BeamKind, CounterRng, GridState, Item, Orientation, Stream, Terrain};
use crate::substrate::{ActionKind, Mechanics};
use serde::{Deserialize, Serialize};

/// A basic behaviour, as named in bot definition files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "behavior", rename_all = "snake_case")]
pub enum Behavior {
    Noop,
    RandomWalk,
    /// Collect resources of type `resource`; once holding at least
    /// `engage_after` of them, hunt partners with the interaction beam.
    CollectResource {
        resource: u8,
        #[serde(default)]
        engage_after: Option<f64>,
    },
    /// Approach the nearest other avatar (opponent in team games) and zap it.
    ZapNearest,
    CleanRiver,
    /// Eat apples, never the last one within the regrowth radius.
    HarvestSustainably,
    HarvestGreedily,
    /// Stand on a cell and zap anyone in range.
    GuardCell { row: i32, col: i32 },
    /// Paint unpainted or enemy ground, restricted to the hill if `hill`.
    PaintTerritory {
        #[serde(default)]
        hill: bool,
    },
    PlantColor { color: u8 },
    EatRipeBerries,
    /// Carry molecules (of `species`, if given) to reaction sites.
    CarryMoleculeTo {
        #[serde(default)]
        species: Option<String>,
    },
    ClaimTerritory,
    /// Zap other players in reach, else zap through resource walls that
    /// are not its own.
    Invade,
    CaptureFlag,
}

impl Behavior {
    pub fn name(&self) -> &'static str {
        match self {
            Behavior::Noop => "noop",
            Behavior::RandomWalk => "random_walk",
            Behavior::CollectResource { .. } => "collect_resource",
            Behavior::ZapNearest => "zap_nearest",
            Behavior::CleanRiver => "clean_river",
            Behavior::HarvestSustainably => "harvest_sustainably",
            Behavior::HarvestGreedily => "harvest_greedily",
            Behavior::GuardCell { .. } => "guard_cell",
            Behavior::PaintTerritory { .. } => "paint_territory",
            Behavior::PlantColor { .. } => "plant_color",
            Behavior::EatRipeBerries => "eat_ripe_berries",
            Behavior::CarryMoleculeTo { .. } => "carry_molecule_to",
            Behavior::ClaimTerritory => "claim_territory",
            Behavior::Invade => "invade",
            Behavior::CaptureFlag => "capture_flag",
        }
    }
}

/// Per-instance context a behaviour acts in.
pub struct Ctx<'a> {
    pub state: &'a GridState,
    pub me: usize,
    pub rng: &'a CounterRng,
    /// Decision counter, for random draws.
    pub tick: u32,
}

impl Ctx<'_> {
    fn wander(&self) -> usize {
        1 + self.rng.below(Stream::Policy, 1, self.tick, 0, 6) as usize
    }

    /// A random action that does not step onto an `avoid` cell.
    fn wander_avoiding(&self, avoid: impl Fn(usize) -> bool) -> usize {
        let a = self.wander();
        let w = self.state.world();
        let me = &w.avatars[self.me];
        let o = me.orientation;
        let dir = match a {
            1 => o,
            2 => o.reverse(),
            3 => o.turn_left(),
            4 => o.turn_right(),
            _ => return a,
        };
        let q = me.pos.step(dir);
        if w.in_bounds(q) && avoid(w.idx(q)) {
            NOOP
        } else {
            a
        }
    }
}

pub fn act(behavior: &Behavior, ctx: &Ctx<'_>) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    if !state.world().can_act(me) {
        return NOOP;
    }
    match behavior {
        Behavior::Noop => NOOP,
        Behavior::RandomWalk => ctx.wander(),
        Behavior::CollectResource {
            resource,
            engage_after,
        } => collect_resource(ctx, *resource, *engage_after),
        Behavior::ZapNearest => zap_nearest(ctx).unwrap_or_else(|| ctx.wander()),
        Behavior::CleanRiver => clean_river(ctx),
        Behavior::HarvestSustainably => harvest(ctx, true),
        Behavior::HarvestGreedily => harvest(ctx, false),
        Behavior::GuardCell { row, col } => guard_cell(ctx, *row, *col),
        Behavior::PaintTerritory { hill } => paint_territory(ctx, *hill),
        Behavior::PlantColor { color } => plant_color(ctx, *color),
        Behavior::EatRipeBerries => {
            let route = bfs(
                state,
                pos_of(state, me),
                passable_for(state, me, false),
                |c| matches!(state.world().items[c], Item::Berry { ripe: true, .. }),
            );
            follow(state, me, route).unwrap_or_else(|| ctx.wander())
        }
        Behavior::CarryMoleculeTo { species } => carry_molecule(ctx, species.as_deref()),
        Behavior::ClaimTerritory => claim_territory(ctx),
        Behavior::Invade => invade(ctx),
        Behavior::CaptureFlag => capture_flag(ctx),
    }
}

fn pos_of(state: &GridState, p: usize) -> crate::grid::Pos {
    state.world().avatars[p].pos
}

/// Players `me` may target with a hostile beam.
fn opponents(state: &GridState, me: usize) -> impl Fn(usize) -> bool + '_ {
    let w = state.world();
    let my_team = w.avatars[me].team;
    let roles = match state.mechanics() {
        Mechanics::Matrix(r) if r.spec().roles == crate::matrix::RoleAssignment::FixedRowColumn => {
            Some(r)
        }
        _ => None,
    };
    move |q| {
        if q == me || !w.is_active(q) {
            return false;
        }
        if let (Some(a), Some(b)) = (my_team, w.avatars[q].team) {
            if a == b {
                return false;
            }
        }
        if let Some(r) = roles {
            return r.is_row_player(me) != r.is_row_player(q);
        }
        true
    }
}

fn hostile_beam(state: &GridState) -> Option<BeamKind> {
    [BeamKind::Zap, BeamKind::Paint, BeamKind::Interaction]
        .into_iter()
        .find(|k| nav::beam_action(state, *k).is_some())
}

/// Fire at an opponent in range, or walk toward the nearest one.
fn hunt(ctx: &Ctx<'_>, kind: BeamKind, avoid: impl Fn(usize) -> bool) -> Option<usize> {
    let state = ctx.state;
    let w = state.world();
    let is_target = opponents(state, ctx.me);
    let target_cell = |c: usize| w.avatar_at_idx(c).is_some_and(&is_target);
    let through = |c: usize| {
        let friendly = kind == BeamKind::Paint
            && w.avatar_at_idx(c).is_some_and(|q| w.avatars[q].team == w.avatars[ctx.me].team);
        !w.items[c].solid() && (w.avatar_at_idx(c).is_none() || friendly)
    };
    if let Some(a) = aim(state, ctx.me, kind, target_cell, through) {
        return Some(a);
    }
    let pass = passable_for(state, ctx.me, false);
    let route = bfs(state, pos_of(state, ctx.me), |c| pass(c) && !avoid(c), target_cell);
    follow(state, ctx.me, route)
}

fn zap_nearest(ctx: &Ctx<'_>) -> Option<usize> {
    let kind = hostile_beam(ctx.state)?;
    hunt(ctx, kind, |_| false)
}

fn collect_resource(ctx: &Ctx<'_>, k: u8, engage_after: Option<f64>) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let other_resource = |c: usize| matches!(w.items[c], Item::Resource(j) if j != k);
    if let Some(threshold) = engage_after {
        let held = w.avatars[me]
            .inventory
            .counts()
            .get(k as usize)
            .copied()
            .unwrap_or(0.0);
        if held >= threshold {
            if let Some(a) = hunt(ctx, BeamKind::Interaction, other_resource) {
                return a;
            }
        }
    }
    let pass = passable_for(state, me, false);
    let route = bfs(
        state,
        pos_of(state, me),
        |c| pass(c) && !other_resource(c),
        |c| w.items[c] == Item::Resource(k),
    );
    follow(state, me, route).unwrap_or_else(|| ctx.wander_avoiding(other_resource))
}

fn clean_river(ctx: &Ctx<'_>) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let water = |c: usize| w.terrain[c] == Terrain::Water;
    if let Some(a) = aim(state, me, BeamKind::Clean, water, |c| beam_through(state, c) || water(c)) {
        return a;
    }
    let pass = passable_for(state, me, false);
    let near_water = |c: usize| {
        walkable(state, c)
            && Orientation::ALL.iter().any(|&o| {
                let q = w.pos(c).step(o);
                w.in_bounds(q) && w.terrain_at(q) == Terrain::Water
            })
    };
    let route = bfs(state, pos_of(state, me), |c| pass(c), near_water);
    follow(state, me, route).unwrap_or_else(|| ctx.wander())
}

fn harvest(ctx: &Ctx<'_>, sustainable: bool) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let commons = match state.mechanics() {
        Mechanics::Commons(r) => Some(r),
        _ => None,
    };
    let eligible = |c: usize| {
        w.items[c] == Item::Apple
            && (!sustainable || commons.map_or(true, |r| r.apples_near(w, c) > 0))
    };
    let pass = passable_for(state, me, false);
    // Never route across an apple that is not the goal.
    let route = bfs(
        state,
        pos_of(state, me),
        |c| pass(c) && w.items[c] != Item::Apple,
        eligible,
    );
    follow(state, me, route).unwrap_or_else(|| {
        if sustainable {
            // Step only onto apple-free cells while waiting for regrowth.
            ctx.wander_avoiding(|c| w.items[c] == Item::Apple)
        } else {
            ctx.wander()
        }
    })
}

fn guard_cell(ctx: &Ctx<'_>, row: i32, col: i32) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let post = crate::grid::Pos::new(row, col);
    if !w.in_bounds(post) {
        return NOOP;
    }
    if let Some(kind) = hostile_beam(state) {
        let is_target = opponents(state, me);
        if let Some(a) = aim(
            state,
            me,
            kind,
            |c| w.avatar_at_idx(c).is_some_and(&is_target),
            |c| beam_through(state, c),
        ) {
            return a;
        }
    }
    let target = w.idx(post);
    let route = bfs(state, pos_of(state, me), passable_for(state, me, false), |c| c == target);
    follow(state, me, route).unwrap_or(NOOP)
}

/// Paint toward `goal`, repainting enemy ground that blocks the way.
fn paint_path(ctx: &Ctx<'_>, goal: impl Fn(usize) -> bool) -> Option<usize> {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let Mechanics::Team(rules) = state.mechanics() else { return None };
    let team = w.avatars[me].team?;
    let paint = nav::beam_action(state, BeamKind::Paint)?;
    let here = w.idx(w.avatars[me].pos);
    if rules.ground_color(here).is_some_and(|g| g != team) {
        return Some(paint);
    }
    let route = bfs(state, w.avatars[me].pos, passable_for(state, me, true), goal)?;
    let Some(dir) = route.first else { return Some(NOOP) };
    let next = w.idx(w.avatars[me].pos.step(dir));
    let facing = w.avatars[me].orientation;
    if rules.ground_color(next).is_some_and(|g| g != team) {
        return Some(if facing == dir {
            paint
        } else {
            nav::turn_toward(facing, dir)
        });
    }
    Some(nav::move_toward(facing, dir))
}

fn paint_territory(ctx: &Ctx<'_>, hill: bool) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let Mechanics::Team(rules) = state.mechanics() else { return ctx.wander() };
    let Some(team) = w.avatars[me].team else { return ctx.wander() };
    let wanted = |c: usize| {
        w.terrain[c] == Terrain::Floor
            && (!hill || rules.is_hill(c))
            && rules.ground_color(c) != Some(team)
    };
    let friendly = |c: usize| {
        w.avatar_at_idx(c).map_or(true, |q| w.avatars[q].team == Some(team))
    };
    if let Some(a) = aim(state, me, BeamKind::Paint, wanted, friendly) {
        return a;
    }
    let here_wanted = wanted(w.idx(w.avatars[me].pos));
    if here_wanted {
        return nav::beam_action(state, BeamKind::Paint).unwrap_or(NOOP);
    }
    paint_path(ctx, wanted).unwrap_or_else(|| ctx.wander())
}

fn plant_color(ctx: &Ctx<'_>, color: u8) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let berry = |c: usize| matches!(w.items[c], Item::Berry { .. });
    let wrong = |c: usize| matches!(w.items[c], Item::Berry { color: k, .. } if k != color);
    // The planting beam recolors the first berry in line, so aim only when
    // that berry has the wrong color.
    let range = nav::beam_range(state, BeamKind::Plant(color));
    let a = &w.avatars[me];
    for d in [a.orientation, a.orientation.turn_left(), a.orientation.turn_right()] {
        if let Some(c) = nav::scan_line(state, a.pos, d, range, berry, |c| beam_through(state, c)) {
            if wrong(c) {
                return if d == a.orientation {
                    nav::beam_action(state, BeamKind::Plant(color)).unwrap_or(NOOP)
                } else {
                    nav::turn_toward(a.orientation, d)
                };
            }
        }
    }
    let pass = passable_for(state, me, false);
    let beside_wrong = |c: usize| {
        walkable(state, c)
            && Orientation::ALL.iter().any(|&o| {
                let q = w.pos(c).step(o);
                w.in_bounds(q) && wrong(w.idx(q))
            })
    };
    let route = bfs(state, a.pos, |c| pass(c), beside_wrong);
    match route {
        Some(r) if r.first.is_some() => follow(state, me, Some(r)).unwrap_or(NOOP),
        // Next to a wrong berry but not lined up: turn toward it.
        Some(_) => {
            let d = Orientation::ALL
                .into_iter()
                .find(|&o| {
                    let q = a.pos.step(o);
                    w.in_bounds(q) && wrong(w.idx(q))
                })
                .unwrap_or(a.orientation);
            if d == a.orientation.reverse() {
                nav::TURN_RIGHT
            } else if d == a.orientation {
                nav::beam_action(state, BeamKind::Plant(color)).unwrap_or(NOOP)
            } else {
                nav::turn_toward(a.orientation, d)
            }
        }
        None => ctx.wander(),
    }
}

/// Turn to face `dir` and then issue `then`.
fn face_then(facing: Orientation, dir: Orientation, then: usize) -> usize {
    if facing == dir {
        then
    } else if dir == facing.reverse() {
        nav::TURN_RIGHT
    } else {
        nav::turn_toward(facing, dir)
    }
}

/// Walk next to a cell satisfying `target` and act on it with `then`.
fn reach_and(ctx: &Ctx<'_>, target: impl Fn(usize) -> bool, then: usize) -> Option<usize> {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let a = &w.avatars[me];
    let adjacent = |c: usize| {
        Orientation::ALL.into_iter().find(|&o| {
            let q = w.pos(c).step(o);
            w.in_bounds(q) && target(w.idx(q))
        })
    };
    let here = w.idx(a.pos);
    if let Some(d) = adjacent(here) {
        return Some(face_then(a.orientation, d, then));
    }
    let pass = passable_for(state, me, false);
    let route = bfs(state, a.pos, |c| pass(c), |c| walkable(state, c) && adjacent(c).is_some());
    follow(state, me, route)
}

fn carry_molecule(ctx: &Ctx<'_>, species: Option<&str>) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let Mechanics::Chemistry(rules) = state.mechanics() else { return ctx.wander() };
    let Some(interact) = state.substrate().action_index(ActionKind::Interact) else {
        return NOOP;
    };
    let wanted = species.and_then(|s| rules.graph().species_id(s));
    let held = w.avatars[me].held;
    let action = match held {
        None => reach_and(
            ctx,
            |c| match w.items[c] {
                Item::Molecule(s) => !rules.is_site(c) && wanted.map_or(true, |x| x == s),
                _ => false,
            },
            interact,
        ),
        Some(_) => reach_and(
            ctx,
            |c| rules.is_site(c) && w.items[c] == Item::Empty && w.avatar_at_idx(c).is_none(),
            interact,
        ),
    };
    action.unwrap_or_else(|| ctx.wander())
}

fn claim_territory(ctx: &Ctx<'_>) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let Mechanics::Territory(rules) = state.mechanics() else { return ctx.wander() };
    let claimable = |c: usize| {
        rules
            .wall(c)
            .is_some_and(|wall| wall.owner != Some(me) && !rules.is_destroyed(wall))
    };
    let wall_cell = |c: usize| w.items[c] == Item::Claimable;
    if let Some(a) = aim(state, me, BeamKind::Claim, claimable, |c| {
        wall_cell(c) || beam_through(state, c)
    }) {
        return a;
    }
    let pass = passable_for(state, me, false);
    let route = bfs(state, pos_of(state, me), |c| pass(c), |c| {
        walkable(state, c)
            && Orientation::ALL.iter().any(|&o| {
                let q = w.pos(c).step(o);
                w.in_bounds(q) && claimable(w.idx(q))
            })
    });
    follow(state, me, route).unwrap_or_else(|| ctx.wander())
}

fn invade(ctx: &Ctx<'_>) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let Mechanics::Territory(rules) = state.mechanics() else {
        return zap_nearest(ctx).unwrap_or_else(|| ctx.wander());
    };
    let is_target = opponents(state, me);
    let foreign = |c: usize| {
        rules
            .wall(c)
            .is_some_and(|wall| wall.owner != Some(me) && !rules.is_destroyed(wall))
    };
    let avatar = |c: usize| w.avatar_at_idx(c).is_some_and(&is_target);
    if let Some(a) = aim(state, me, BeamKind::Zap, avatar, |c| beam_through(state, c)) {
        return a;
    }
    let pass = passable_for(state, me, false);
    let here = pos_of(state, me);
    if let Some(a) = follow(state, me, bfs(state, here, &pass, avatar)) {
        return a;
    }
    if let Some(a) = aim(state, me, BeamKind::Zap, foreign, |c| beam_through(state, c)) {
        return a;
    }
    let route = bfs(state, here, &pass, |c| {
        walkable(state, c)
            && Orientation::ALL.iter().any(|&o| {
                let q = w.pos(c).step(o);
                w.in_bounds(q) && foreign(w.idx(q))
            })
    });
    follow(state, me, route).unwrap_or_else(|| ctx.wander())
}

fn capture_flag(ctx: &Ctx<'_>) -> usize {
    let state = ctx.state;
    let me = ctx.me;
    let w = state.world();
    let Mechanics::Team(rules) = state.mechanics() else { return ctx.wander() };
    let Some(team) = w.avatars[me].team else { return ctx.wander() };
    let enemy_flag = &rules.flags()[team.other().index()];
    // Carrying the flag, or escorting the teammate who does: head home.
    let goal: Box<dyn Fn(usize) -> bool> = if enemy_flag.carrier.is_some() {
        Box::new(move |c| rules.base_of(c) == Some(team))
    } else {
        let at = w.idx(enemy_flag.on_ground.unwrap_or(enemy_flag.home));
        Box::new(move |c| c == at)
    };
    if let Some(a) = zap_if_adjacent_threat(ctx) {
        return a;
    }
    paint_path(ctx, goal).unwrap_or_else(|| ctx.wander())
}

/// Paint an opponent standing right in front.
fn zap_if_adjacent_threat(ctx: &Ctx<'_>) -> Option<usize> {
    let state = ctx.state;
    let w = state.world();
    let a = &w.avatars[ctx.me];
    let front = a.pos.step(a.orientation);
    if !w.in_bounds(front) {
        return None;
    }
    let q = w.avatar_at_idx(w.idx(front))?;
    opponents(state, ctx.me)(q).then(|| nav::beam_action(state, BeamKind::Paint))?
}

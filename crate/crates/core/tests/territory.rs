use crucible_core::grid::{BeamKind, Item, Terrain};
use crucible_core::substrate::Mechanics;
use crucible_core::{EventKind, GridState, Orientation, Pos, Registry, Team};
use std::sync::Arc;

fn substrate(id: &str) -> Arc<crucible_core::Substrate> {
    Registry::builtin().unwrap().substrate(id).unwrap().clone()
}

fn cells(state: &GridState) -> Vec<Pos> {
    (0..state.height() as i32)
        .flat_map(|r| (0..state.width() as i32).map(move |c| Pos::new(r, c)))
        .collect()
}

/// Put player 0 on a free cell next to a resource wall, facing it.
fn face_a_wall(state: &mut GridState) -> Pos {
    for wall in cells(state).into_iter().filter(|&p| state.item(p) == Item::Claimable) {
        for o in [Orientation::North, Orientation::East, Orientation::South, Orientation::West] {
            let from = wall.step(o.reverse());
            if state.in_bounds(from)
                && state.terrain(from) != Terrain::Wall
                && state.item(from) == Item::Empty
                && state.avatar_at(from).is_none()
            {
                state.place_avatar(0, from, o);
                return wall;
            }
        }
    }
    panic!("no reachable wall");
}

fn wall_state(state: &GridState, wall: Pos) -> crucible_core::territory::ResourceWall {
    let Mechanics::Territory(r) = state.mechanics() else { panic!() };
    r.wall(state.world().idx(wall)).unwrap().clone()
}

#[test]
fn claimed_resources_activate_exactly_100_steps_later() {
    let sub = substrate("territory_open");
    let idle = vec![0; sub.players()];
    for claim_at in [0u32, 17, 400] {
        let mut state = sub.reset(5);
        for _ in 0..claim_at {
            state.step(&idle).unwrap();
        }
        let wall = face_a_wall(&mut state);
        state.cast_beam(0, BeamKind::Claim).unwrap().unwrap();
        assert_eq!(wall_state(&state, wall).owner, Some(0));
        while !state.is_done() {
            let before = wall_state(&state, wall).active;
            let t = state.step_count();
            state.step(&idle).unwrap();
            let after = wall_state(&state, wall).active;
            assert_eq!(!before && after, t == claim_at + 100, "claim at {claim_at}, step {t}");
        }
        let activations: Vec<u32> = state
            .events()
            .iter()
            .filter(|e| e.kind == EventKind::ResourceActivated && e.pos == Some(wall))
            .map(|e| e.step)
            .collect();
        assert_eq!(activations, vec![claim_at + 100]);
    }
}

#[test]
fn active_resources_pay_about_one_percent_per_step() {
    let sub = substrate("territory_open");
    let idle = vec![0; sub.players()];
    let (mut paid, mut trials) = (0u64, 0u64);
    for seed in 0..1000 {
        let mut state = sub.reset(seed);
        let wall = face_a_wall(&mut state);
        state.cast_beam(0, BeamKind::Claim).unwrap().unwrap();
        let mut total = 0.0;
        while !state.is_done() {
            let out = state.step(&idle).unwrap();
            total += out.rewards[0];
            if wall_state(&state, wall).active {
                trials += 1;
            }
        }
        let from_wall = state
            .events()
            .iter()
            .filter(|e| e.kind == EventKind::ResourceReward && e.pos == Some(wall))
            .count() as u64;
        assert!(state
            .events()
            .iter()
            .filter(|e| e.kind == EventKind::ResourceReward && e.pos == Some(wall))
            .all(|e| e.step >= 100));
        assert_eq!(total, from_wall as f64);
        paid += from_wall;
    }
    assert_eq!(trials, 1000 * 900);
    let mean = trials as f64 * 0.01;
    let sd = (mean * 0.99).sqrt();
    assert!((paid as f64 - mean).abs() <= 3.0 * sd, "{paid} of {trials}");
}

#[test]
fn two_zaps_destroy_a_resource_for_good() {
    let sub = substrate("territory_open");
    let idle = vec![0; sub.players()];
    let mut state = sub.reset(9);
    let wall = face_a_wall(&mut state);
    state.cast_beam(0, BeamKind::Claim).unwrap().unwrap();
    state.cast_beam(0, BeamKind::Zap).unwrap().unwrap();
    assert_eq!(wall_state(&state, wall).damage, 1);
    assert_eq!(state.item(wall), Item::Claimable);
    state.step(&idle).unwrap();
    state.step(&idle).unwrap();
    state.cast_beam(0, BeamKind::Zap).unwrap().unwrap();
    let dead = wall_state(&state, wall);
    assert_eq!((dead.damage, dead.owner, dead.active), (2, None, false));
    assert_eq!(state.item(wall), Item::Empty);

    // Nothing brings it back: claims, zaps and time.
    for _ in 0..300 {
        let t = state.step_count();
        if t % 3 == 0 {
            state.cast_beam(0, BeamKind::Claim).unwrap();
            state.cast_beam(0, BeamKind::Zap).unwrap();
        }
        state.step(&idle).unwrap();
        assert_eq!(wall_state(&state, wall), dead);
    }
    assert!(!state
        .events()
        .iter()
        .any(|e| e.kind == EventKind::ResourceReward && e.pos == Some(wall)));
}

fn koth(seed: u64) -> GridState {
    substrate("king_of_the_hill").reset(seed)
}

fn hill(state: &GridState) -> Vec<usize> {
    let Mechanics::Team(r) = state.mechanics() else { panic!() };
    r.hill_cells().collect()
}

fn paint(state: &mut GridState, cells: &[usize], team: Option<Team>) {
    let Mechanics::Team(r) = state.mechanics_mut() else { panic!() };
    for &c in cells {
        r.paint(c, team);
    }
}

#[test]
fn hill_control_switches_at_exactly_80_percent() {
    let mut state = koth(1);
    let h = hill(&state);
    assert_eq!(h.len(), 100);
    let idle = vec![0; state.num_players()];
    let team_of: Vec<Option<Team>> = state.avatars().iter().map(|a| a.team).collect();
    let size = team_of.iter().filter(|t| **t == Some(Team::Red)).count();
    assert_eq!(size, 4);
    // Keep everyone off the hill so idle avatars never repaint it.
    for painted in [79usize, 80, 0, 100, 79] {
        paint(&mut state, &h, None);
        paint(&mut state, &h[..painted], Some(Team::Red));
        let out = state.step(&idle).unwrap();
        let red: f64 = (0..8).filter(|&p| team_of[p] == Some(Team::Red)).map(|p| out.rewards[p]).sum();
        let blue: f64 = (0..8).filter(|&p| team_of[p] == Some(Team::Blue)).map(|p| out.rewards[p]).sum();
        let controlled = painted >= 80;
        assert_eq!(red, if controlled { size as f64 } else { 0.0 }, "{painted}%");
        assert_eq!(blue, 0.0);
        let Mechanics::Team(r) = state.mechanics() else { panic!() };
        assert_eq!(r.hill_controller(), controlled.then_some(Team::Red));
    }
    // Blue at 80% with red holding the rest.
    paint(&mut state, &h[..80], Some(Team::Blue));
    paint(&mut state, &h[80..], Some(Team::Red));
    let out = state.step(&idle).unwrap();
    let blue: f64 = (0..8).filter(|&p| team_of[p] == Some(Team::Blue)).map(|p| out.rewards[p]).sum();
    assert_eq!(blue, size as f64);
}

#[test]
fn friendly_fire_does_nothing() {
    let mut state = koth(2);
    let reds: Vec<usize> = (0..8).filter(|&p| state.avatars()[p].team == Some(Team::Red)).collect();
    let blue = (0..8).find(|&p| state.avatars()[p].team == Some(Team::Blue)).unwrap();
    let (a, b) = (reds[0], reds[1]);
    // Unpainted open ground in the middle of the map.
    state.place_avatar(a, Pos::new(14, 12), Orientation::East);
    state.place_avatar(b, Pos::new(14, 13), Orientation::North);
    let before = state.avatars()[b].clone();
    let events = state.events().len();
    state.cast_beam(a, BeamKind::Paint).unwrap().unwrap();
    assert_eq!(state.avatars()[b].health, before.health);
    assert!(!state.avatars()[b].is_removed());
    assert!(!state.events()[events..]
        .iter()
        .any(|e| e.kind == EventKind::PlayerZapped));

    // The same shot at an opponent costs health.
    let idle = vec![0; 8];
    state.step(&idle).unwrap();
    state.place_avatar(b, Pos::new(15, 20), Orientation::North);
    state.place_avatar(blue, Pos::new(14, 13), Orientation::North);
    let h = state.avatars()[blue].health.unwrap();
    state.cast_beam(a, BeamKind::Paint).unwrap().unwrap();
    assert!(state.avatars()[blue].health.unwrap() < h);
}

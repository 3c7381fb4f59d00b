use crucible_core::grid::Item;
use crucible_core::substrate::Mechanics;
use crucible_core::{EventKind, GridState, Orientation, Pos, Registry};

fn branched(seed: u64) -> GridState {
    let reg = Registry::builtin().unwrap();
    let mut state = reg.substrate("chemistry_branched_chain_reaction").unwrap().reset(seed);
    for r in 0..state.height() as i32 {
        for c in 0..state.width() as i32 {
            if matches!(state.item(Pos::new(r, c)), Item::Molecule(_)) {
                state.set_item(Pos::new(r, c), Item::Empty);
            }
        }
    }
    state
}

fn species(state: &GridState, name: &str) -> u16 {
    let Mechanics::Chemistry(r) = state.mechanics() else { panic!() };
    r.graph().species_id(name).unwrap()
}

fn reaction(state: &GridState, name: &str) -> f64 {
    let Mechanics::Chemistry(r) = state.mechanics() else { panic!() };
    r.graph().reaction_id(name).unwrap() as f64
}

/// Empty cells with no avatar within Chebyshev distance 2.
fn quiet_pair(state: &GridState) -> (Pos, Pos) {
    let clear = |p: Pos| {
        (-2..=2).all(|dr| {
            (-2..=2).all(|dc| {
                let q = p.offset(dr, dc);
                state.in_bounds(q) && state.avatar_at(q).is_none()
            })
        })
    };
    for r in 2..state.height() as i32 - 2 {
        for c in 2..state.width() as i32 - 3 {
            let (a, b) = (Pos::new(r, c), Pos::new(r, c + 1));
            if state.world().is_open(a) && state.world().is_open(b) && clear(a) && clear(b) {
                return (a, b);
            }
        }
    }
    panic!("no quiet spot");
}

#[test]
fn shipped_graphs_parse() {
    let reg = Registry::builtin().unwrap();
    for id in ["chemistry_branched_chain_reaction", "chemistry_metabolic_cycles"] {
        let s = reg.substrate(id).unwrap();
        let g = s.graph.as_ref().unwrap();
        assert!(!g.reactions.is_empty());
        for r in &g.reactions {
            assert!(r.reactants.iter().chain(&r.products).all(|&x| (x as usize) < g.species.len()));
        }
    }
}

#[test]
fn a_world_reaction_fires_at_its_rate_once_per_set() {
    let idle = vec![0; 8];
    let (mut fired, mut trials) = (0u64, 0u64);
    for seed in 0..25 {
        let mut state = branched(seed);
        let (pa, pb) = quiet_pair(&state);
        let (a, b) = (species(&state, "a"), species(&state, "b"));
        let join = reaction(&state, "join");
        while !state.is_done() {
            // Re-freeze the pair: an a next to a b and nothing else nearby.
            for dr in -2..=2 {
                for dc in -2..=3 {
                    state.set_item(pa.offset(dr, dc), Item::Empty);
                }
            }
            state.set_item(pa, Item::Molecule(a));
            state.set_item(pb, Item::Molecule(b));
            let out = state.step(&idle).unwrap();
            trials += 1;
            fired += state.events()[out.events]
                .iter()
                .filter(|e| e.kind == EventKind::ReactionFired && e.get("reaction") == Some(join))
                .count() as u64;
        }
    }
    let mean = trials as f64 * 0.02;
    let sd = (mean * 0.98).sqrt();
    assert!((fired as f64 - mean).abs() <= 3.0 * sd, "{fired} of {trials}");
}

#[test]
fn held_molecules_react_in_hand_and_pay_the_holder() {
    let mut state = branched(1);
    let (pa, pb) = quiet_pair(&state);
    let (a, b, ab) = (species(&state, "a"), species(&state, "b"), species(&state, "ab"));
    state.place_avatar(0, pa, Orientation::East);
    state.avatar_mut(0).held = Some(a);
    state.set_item(pb, Item::Molecule(b));
    let idle = vec![0; 8];
    let mut total = 0.0;
    for _ in 0..60 {
        let out = state.step(&idle).unwrap();
        total += out.rewards[0];
        if state.avatars()[0].held != Some(a) {
            break;
        }
    }
    // Products go to the vacated hand first; the b is consumed.
    assert_eq!(state.avatars()[0].held, Some(ab));
    assert_eq!(state.item(pb), Item::Empty);
    assert_eq!(total, 1.0);
}

#[test]
fn interact_picks_up_and_puts_down() {
    let mut state = branched(2);
    let (pa, pb) = quiet_pair(&state);
    let b = species(&state, "b");
    state.place_avatar(0, pa, Orientation::East);
    state.set_item(pb, Item::Molecule(b));
    let interact = state
        .substrate()
        .action_index(crucible_core::ActionKind::Interact)
        .unwrap();
    let mut actions = vec![0; 8];
    actions[0] = interact;
    state.step(&actions).unwrap();
    assert_eq!(state.avatars()[0].held, Some(b));
    assert_eq!(state.item(pb), Item::Empty);
    state.step(&actions).unwrap();
    assert_eq!(state.avatars()[0].held, None);
    assert_eq!(state.item(pb), Item::Molecule(b));
}

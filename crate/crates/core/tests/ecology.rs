use crucible_core::grid::Item;
use crucible_core::substrate::Mechanics;
use crucible_core::{GridState, Pos, Registry};

fn z_ok(successes: u64, trials: u64, p: f64) -> bool {
    let mean = trials as f64 * p;
    if p == 0.0 {
        return successes == 0;
    }
    let sd = (mean * (1.0 - p)).sqrt();
    (successes as f64 - mean).abs() <= 3.0 * sd
}

fn cells(state: &GridState) -> impl Iterator<Item = Pos> + '_ {
    (0..state.height() as i32).flat_map(|r| (0..state.width() as i32).map(move |c| Pos::new(r, c)))
}

/// Apple sites within L2 radius 2 of `s`.
fn neighborhood(sites: &[Pos], s: Pos) -> Vec<Pos> {
    sites
        .iter()
        .copied()
        .filter(|q| {
            let (dr, dc) = (q.row - s.row, q.col - s.col);
            *q != s && dr * dr + dc * dc <= 4
        })
        .collect()
}

/// Hold every apple site empty except `n` apples around each target, step
/// once with everyone idle, and count regrown targets.
fn regrowth_trials(n: usize, min_trials: u64) -> (u64, u64) {
    let reg = Registry::builtin().unwrap();
    let sub = reg.substrate("commons_harvest_open").unwrap().clone();
    let probe = sub.reset(0);
    let sites: Vec<Pos> = cells(&probe).filter(|&p| probe.item(p) == Item::Apple).collect();
    let mut targets: Vec<(Pos, Vec<Pos>)> = Vec::new();
    for &s in &sites {
        let nb = neighborhood(&sites, s);
        let far = targets.iter().all(|(t, _)| {
            let (dr, dc) = (t.row - s.row, t.col - s.col);
            dr * dr + dc * dc > 16
        });
        if nb.len() >= 3 && far {
            targets.push((s, nb));
        }
    }
    assert!(targets.len() >= 5, "only {} isolated targets", targets.len());

    let idle = vec![0; sub.players()];
    let (mut hits, mut trials) = (0, 0);
    let mut seed = 0;
    let mut state = sub.reset(seed);
    while trials < min_trials {
        if state.is_done() {
            seed += 1;
            state = sub.reset(seed);
        }
        for &s in &sites {
            state.set_item(s, Item::Empty);
        }
        let mut live = Vec::new();
        for (t, nb) in &targets {
            if state.avatar_at(*t).is_none() {
                for &q in &nb[..n] {
                    state.set_item(q, Item::Apple);
                }
                live.push(*t);
            }
        }
        state.step(&idle).unwrap();
        trials += live.len() as u64;
        hits += live.iter().filter(|&&t| state.item(t) == Item::Apple).count() as u64;
    }
    (hits, trials)
}

#[test]
fn frozen_patch_regrowth_frequencies() {
    for (n, p) in [(0, 0.0), (1, 0.001), (2, 0.005), (3, 0.025)] {
        let (hits, trials) = regrowth_trials(n, 100_000);
        assert!(z_ok(hits, trials, p), "n={n}: {hits}/{trials} vs p={p}");
    }
}

/// Ripening per step with the berry layer re-frozen to unripe before each
/// step; returns (ripened, trials) per color.
fn ripen_trials(all_red: bool, episodes: u64) -> ([u64; 3], [u64; 3], [u32; 3]) {
    let reg = Registry::builtin().unwrap();
    let sub = reg.substrate("allelopathic_harvest").unwrap().clone();
    let idle = vec![0; sub.players()];
    let (mut hits, mut trials, mut b) = ([0u64; 3], [0u64; 3], [0u32; 3]);
    for seed in 0..episodes {
        let mut state = sub.reset(seed);
        let berries: Vec<Pos> = cells(&state)
            .filter(|&p| matches!(state.item(p), Item::Berry { .. }))
            .collect();
        if all_red {
            for &p in &berries {
                state.set_item(p, Item::Berry { color: 0, ripe: false });
            }
            let world = state.world().clone();
            let Mechanics::Allelopathic(r) = state.mechanics_mut() else { panic!() };
            r.recount(&world);
        }
        let Mechanics::Allelopathic(r) = state.mechanics() else { panic!() };
        b = r.field().counts;
        while !state.is_done() {
            let mut unripe = [0u64; 3];
            for &p in &berries {
                if let Item::Berry { color, .. } = state.item(p) {
                    state.set_item(p, Item::Berry { color, ripe: false });
                    unripe[color as usize] += 1;
                }
            }
            state.step(&idle).unwrap();
            for &p in &berries {
                if let Item::Berry { color, ripe: true } = state.item(p) {
                    hits[color as usize] += 1;
                }
            }
            for c in 0..3 {
                trials[c] += unripe[c];
            }
        }
    }
    (hits, trials, b)
}

#[test]
fn ripening_follows_five_per_million_times_b() {
    let (hits, trials, b) = ripen_trials(false, 2);
    for c in 0..3 {
        let p = 5e-6 * b[c] as f64;
        assert!(z_ok(hits[c], trials[c], p), "color {c}, b={}: {}/{}", b[c], hits[c], trials[c]);
    }
    let (hits, trials, b) = ripen_trials(true, 1);
    assert_eq!(b, [348, 0, 0]);
    assert!(z_ok(hits[0], trials[0], 5e-6 * 348.0), "{}/{}", hits[0], trials[0]);
    assert_eq!(hits[1] + hits[2], 0);
}

#[test]
fn episode_lengths() {
    let reg = Registry::builtin().unwrap();
    for s in reg.substrates() {
        let expected = if s.id() == "allelopathic_harvest" { 2000 } else { 1000 };
        assert_eq!(s.episode_length(), expected, "{}", s.id());
        assert_eq!(s.reset(0).episode_length(), expected);
    }
    let sub = reg.substrate("allelopathic_harvest").unwrap().clone();
    let mut state = sub.reset(3);
    let idle = vec![0; sub.players()];
    let mut steps = 0;
    while !state.is_done() {
        state.step(&idle).unwrap();
        steps += 1;
    }
    assert_eq!(steps, 2000);
    assert!(state.step(&idle).is_err());
}

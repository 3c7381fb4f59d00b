use crucible_core::protocol::{NoopPolicy, ProtocolError, RandomPolicy, ScenarioConfig, ScriptedPolicy};
use crucible_core::{run_episode, EpisodeResult, Mode, Population, Registry, Scenario, Session};
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::sync::Arc;

fn result(focal: &[bool], returns: &[f64]) -> EpisodeResult {
    EpisodeResult {
        scenario: "hand_built".into(),
        seed: 0,
        focal: focal.to_vec(),
        returns: returns.to_vec(),
        policies: vec![String::new(); returns.len()],
        steps: 0,
        event_counts: BTreeMap::new(),
        event_digest: String::new(),
        state_digest: String::new(),
        aborted: None,
        events: Vec::new(),
    }
}

#[test]
fn focal_per_capita_by_hand() {
    let r = result(&[true, true, false, false], &[10.0, 20.0, 5.0, 5.0]);
    assert_eq!(r.focal_per_capita(), Ok(15.0));
    assert_eq!(r.background_per_capita(), Ok(5.0));
    assert_eq!(r.background_returns(), vec![5.0, 5.0]);
    let all = result(&[true; 3], &[1.0, 2.0, 6.0]);
    assert_eq!(all.focal_per_capita(), Ok(3.0));
    assert_eq!(all.background_per_capita(), Err(ProtocolError::NoBackground));
    assert_eq!(result(&[false], &[1.0]).focal_per_capita(), Err(ProtocolError::NoFocal));
}

proptest! {
    #[test]
    fn focal_per_capita_matches_the_marginalized_sum(
        rows in prop::collection::vec((any::<bool>(), -50i32..50), 1..16),
    ) {
        let focal: Vec<bool> = rows.iter().map(|r| r.0).collect();
        let returns: Vec<f64> = rows.iter().map(|r| r.1 as f64).collect();
        let m = focal.iter().filter(|f| **f).count();
        let r = result(&focal, &returns);
        if m == 0 {
            prop_assert_eq!(r.focal_per_capita(), Err(ProtocolError::NoFocal));
        } else {
            // (1/m) Σ_i h_i c_i with integer returns, so exact.
            let sum: i32 = rows.iter().filter(|r| r.0).map(|r| r.1).sum();
            prop_assert_eq!(r.focal_per_capita(), Ok(sum as f64 / m as f64));
        }
    }

    #[test]
    fn implied_mode_follows_the_majority(c in prop::collection::vec(any::<bool>(), 1..17)) {
        let ones = c.iter().filter(|x| **x).count();
        let zeros = c.len() - ones;
        let expected = if ones > zeros {
            Mode::Resident
        } else if ones < zeros {
            Mode::Visitor
        } else {
            Mode::HalfAndHalf
        };
        prop_assert_eq!(Mode::implied(&c), expected);
    }

    #[test]
    fn seat_assignment_permutes_players(seed in any::<u64>()) {
        let reg = Registry::builtin().unwrap();
        let s = reg.scenario("pd_visiting_cooperators").unwrap();
        let mut seats = s.seat_assignment(seed);
        seats.sort();
        prop_assert_eq!(seats, (0..8).collect::<Vec<_>>());
    }
}

fn config(substrate: &str, mode: Mode, focal: Vec<u8>) -> ScenarioConfig {
    ScenarioConfig {
        id: "test".into(),
        substrate: substrate.into(),
        description: String::new(),
        mode,
        focal,
        background: Vec::new(),
        episodes: None,
    }
}

#[test]
fn five_of_eight_focal_is_a_reduced_resident_substrate() {
    let reg = Registry::builtin().unwrap();
    let sub = reg.substrate("prisoners_dilemma_in_the_matrix").unwrap().clone();
    let bg = Population::single(reg.bot_handle("pd_cooperator").unwrap());
    let s = Scenario::build(
        config(sub.id(), Mode::Resident, vec![1, 1, 1, 1, 1, 0, 0, 0]),
        sub.clone(),
        Some(bg.clone()),
    )
    .unwrap();
    assert_eq!(s.focal_seats(), 5);
    assert_eq!(s.mode(), Mode::Resident);
    let (session, obs) = Session::reset(Arc::new(s), 4);
    assert_eq!(session.focal_seats(), 5);
    assert_eq!(obs.len(), 5);

    let err = Scenario::build(
        config(sub.id(), Mode::Visitor, vec![1, 1, 1, 1, 1, 0, 0, 0]),
        sub.clone(),
        Some(bg.clone()),
    )
    .unwrap_err();
    assert!(matches!(err, ProtocolError::ModeMismatch { .. }));
    assert!(Scenario::build(config(sub.id(), Mode::Visitor, vec![1, 0, 0]), sub.clone(), Some(bg)).is_err());
    assert_eq!(
        Scenario::build(config(sub.id(), Mode::Visitor, vec![1, 0, 0, 0, 0, 0, 0, 0]), sub, None).unwrap_err(),
        ProtocolError::Background("missing")
    );
}

#[test]
fn universalization_shares_one_policy_across_seats() {
    let reg = Registry::builtin().unwrap();
    let s = reg.scenario("pd_universalization").unwrap();
    assert_eq!(s.mode(), Mode::Universalization);
    let pop = Population::uniform(vec![
        reg.bot_handle("pd_cooperator").unwrap(),
        reg.bot_handle("pd_defector").unwrap(),
        RandomPolicy::handle(),
    ])
    .unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..40 {
        let focal = s.sample_focal(&pop, seed);
        assert_eq!(focal.len(), 8);
        assert!(focal.iter().all(|h| h.ptr_eq(&focal[0])));
        seen.insert(focal[0].id().to_string());
        if seed < 3 {
            let r = run_episode(&s, &focal, seed).unwrap();
            assert!(r.policies.iter().all(|p| p == focal[0].id()));
            assert!(r.focal.iter().all(|f| *f));
        }
    }
    assert_eq!(seen.len(), 3);
}

#[test]
fn wrong_focal_arity_is_rejected() {
    let reg = Registry::builtin().unwrap();
    let s = reg.scenario("pd_visiting_cooperators").unwrap();
    let err = run_episode(&s, &[], 0).unwrap_err();
    assert!(matches!(err, ProtocolError::FocalArity { found: 0, .. }));
}

#[test]
fn out_of_range_actions_abort_with_a_diagnostic() {
    let reg = Registry::builtin().unwrap();
    let s = reg.scenario("pd_visiting_cooperators").unwrap();
    let bad = ScriptedPolicy::handle("bad", vec![0, 0, 99]);
    let focal = vec![bad; s.focal_seats()];
    let r = run_episode(&s, &focal, 1).unwrap();
    assert_eq!(r.steps, 2);
    assert!(r.aborted.as_deref().unwrap().contains("returned action 99"));
}

#[test]
fn session_replays_run_episode() {
    let reg = Registry::builtin().unwrap();
    let s = reg.scenario("pd_visiting_cooperators").unwrap();
    let script: Vec<usize> = (0..1000).map(|t| (t * 7 + t / 13) % 8).collect();
    let focal = vec![ScriptedPolicy::handle("script", script.clone()); s.focal_seats()];
    let batch = run_episode(&s, &focal, 21).unwrap();

    let (mut session, obs) = Session::reset(Arc::clone(&s), 21);
    assert_eq!(obs.len(), s.focal_seats());
    assert!(obs.iter().all(|o| o.pixels.len() == 88 * 88 * 3));
    assert_eq!(session.num_actions(), 8);
    assert!(matches!(
        session.step(&vec![0; s.focal_seats() + 1]),
        Err(ProtocolError::FocalArity { .. })
    ));
    let mut t = 0;
    loop {
        let out = session.step(&vec![script[t]; s.focal_seats()]).unwrap();
        assert_eq!(out.rewards.len(), s.focal_seats());
        t += 1;
        if out.done {
            break;
        }
    }
    assert_eq!(t, 1000);
    assert_eq!(session.returns().unwrap(), batch.returns.as_slice());
    let closed = session.close().unwrap();
    assert_eq!(closed.event_digest, batch.event_digest);
    assert_eq!(closed.state_digest, batch.state_digest);
    assert!(!session.is_open());
    assert_eq!(session.close().unwrap_err(), ProtocolError::Closed);
    assert!(matches!(session.step(&[0]), Err(ProtocolError::Closed)));
}

#[test]
fn episodes_are_reproducible_from_the_seed() {
    let reg = Registry::builtin().unwrap();
    for id in ["clean_up_visiting_altruists", "allelopathic_visiting_green_planters", "koth_team_vs_bots"] {
        let s = reg.scenario(id).unwrap();
        let focal = vec![NoopPolicy::handle(); s.focal_seats()];
        let a = run_episode(&s, &focal, 8).unwrap();
        let b = run_episode(&s, &focal, 8).unwrap();
        assert_eq!(a, b, "{id}");
        let c = run_episode(&s, &focal, 9).unwrap();
        assert_ne!(a.state_digest, c.state_digest, "{id}");
    }
}

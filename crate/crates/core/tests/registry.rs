use crucible_core::bots::{qc_run, Verdict};
use crucible_core::protocol::Mode;
use crucible_core::Registry;
use std::collections::BTreeSet;

#[test]
fn builtin_registry_loads() {
    let reg = Registry::builtin().unwrap();
    assert_eq!(reg.substrates().count(), 19);
    for cfg in reg.scenario_configs() {
        reg.scenario(&cfg.id).unwrap();
    }
}

#[test]
fn every_substrate_has_two_scenarios_and_every_mode_is_covered() {
    let reg = Registry::builtin().unwrap();
    let mut modes = BTreeSet::new();
    for s in reg.substrates() {
        let n = reg.scenario_configs().filter(|c| c.substrate == s.id()).count();
        assert!(n >= 2, "{} has {n} scenarios", s.id());
    }
    for c in reg.scenario_configs() {
        modes.insert(format!("{:?}", c.mode));
    }
    for m in [Mode::Resident, Mode::Visitor, Mode::HalfAndHalf, Mode::Universalization] {
        assert!(modes.contains(&format!("{m:?}")));
    }
}

#[test]
fn every_bot_passes_qc() {
    let reg = Registry::builtin().unwrap();
    let mut failed = Vec::new();
    for bot in reg.bots() {
        let qc = bot.qc.as_ref().unwrap_or_else(|| panic!("{} has no QC spec", bot.id));
        let sub = qc.substrate.clone().unwrap_or_else(|| bot.substrates[0].clone());
        let substrate = reg.substrate(&sub).unwrap().clone();
        let partners: Vec<_> = qc.partners.iter().map(|p| reg.bot_handle(p).unwrap()).collect();
        let report = qc_run(
            &reg.bot_handle(&bot.id).unwrap(),
            &substrate,
            &partners,
            qc.seat,
            qc.episodes,
            &qc.criterion,
            7,
        )
        .unwrap();
        if report.verdict != Verdict::Accept {
            failed.push(format!("{}: {:?}", bot.id, report.failures));
        }
    }
    assert!(failed.is_empty(), "QC rejected:\n{}", failed.join("\n"));
}

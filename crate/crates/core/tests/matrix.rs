use crucible_core::matrix::{resolve_interaction, Inventory, PayoffMatrix};
use crucible_core::substrate::RulesConfig;
use crucible_core::{run_episode, EventKind, Registry};
use num_rational::Ratio;
use proptest::prelude::*;
use std::sync::OnceLock;

fn shipped() -> &'static [(String, PayoffMatrix<f64>)] {
    static M: OnceLock<Vec<(String, PayoffMatrix<f64>)>> = OnceLock::new();
    M.get_or_init(|| {
        Registry::builtin()
            .unwrap()
            .substrates()
            .filter_map(|s| match &s.config.rules {
                RulesConfig::Matrix(spec) => Some((s.id().to_string(), spec.payoff().unwrap())),
                _ => None,
            })
            .collect()
    })
}

/// Σ_i Σ_j p_i q_j A_ij with p, q normalized up front, summed column-major.
fn oracle(p: &[f64], a: &[Vec<f64>], q: &[f64]) -> f64 {
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    let mut acc = 0.0;
    for j in 0..q.len() {
        for i in 0..p.len() {
            acc += (p[i] / sp) * (q[j] / sq) * a[i][j];
        }
    }
    acc
}

#[test]
fn eight_matrices_ship_with_the_expected_entries() {
    let m = shipped();
    assert_eq!(m.len(), 8);
    let get = |id: &str| &m.iter().find(|(i, _)| i.starts_with(id)).unwrap().1;
    assert_eq!(get("prisoners").a_row, vec![vec![3.0, 0.0], vec![4.0, 1.0]]);
    assert_eq!(get("chicken").a_row, vec![vec![3.0, 2.0], vec![5.0, 0.0]]);
    assert_eq!(get("stag").a_row, vec![vec![4.0, 0.0], vec![2.0, 2.0]]);
    let bos = get("bach");
    assert_eq!(bos.a_row, vec![vec![3.0, 0.0], vec![0.0, 2.0]]);
    assert_eq!(bos.a_col, vec![vec![2.0, 0.0], vec![0.0, 3.0]]);
    let rws = vec![vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]];
    assert_eq!(get("running").a_row, rws);
    assert_eq!(get("arena").a_row, rws);
}

#[test]
fn pure_inventories_select_matrix_entries_exactly() {
    for (id, m) in shipped() {
        let k = m.k();
        for i in 0..k {
            for j in 0..k {
                let (r, c) = resolve_interaction(&Inventory::pure(k, i), &Inventory::pure(k, j), &m).unwrap();
                assert_eq!((r, c), (m.a_row[i][j], m.a_col[i][j]), "{id} ({i},{j})");
            }
        }
    }
}

#[test]
fn rational_inventories_match_the_oracle_exactly() {
    for (id, m) in shipped() {
        let q = m.map(|x| Ratio::<i64>::from_integer(x as i64));
        let k = m.k();
        let row = Inventory::new((0..k).map(|i| Ratio::from_integer(i as i64 + 1)).collect()).unwrap();
        let col = Inventory::new((0..k).map(|i| Ratio::from_integer(2 * k as i64 - i as i64)).collect()).unwrap();
        let (r, c) = resolve_interaction(&row, &col, &q).unwrap();
        let (sr, sc): (Ratio<i64>, Ratio<i64>) = (row.total(), col.total());
        let mut er = Ratio::from_integer(0);
        let mut ec = Ratio::from_integer(0);
        for i in 0..k {
            for j in 0..k {
                let w = row.counts()[i] / sr * (col.counts()[j] / sc);
                er += w * q.a_row[i][j];
                ec += w * q.a_col[i][j];
            }
        }
        assert_eq!((r, c), (er, ec), "{id}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn mixed_inventories_match_the_bilinear_oracle(
        which in 0usize..8,
        p in prop::collection::vec(0.0f64..20.0, 3),
        q in prop::collection::vec(0.0f64..20.0, 3),
    ) {
        let (_, m) = &shipped()[which];
        let k = m.k();
        let (p, q) = (&p[..k], &q[..k]);
        prop_assume!(p.iter().sum::<f64>() > 1e-3 && q.iter().sum::<f64>() > 1e-3);
        let (r, c) = resolve_interaction(
            &Inventory::new(p.to_vec()).unwrap(),
            &Inventory::new(q.to_vec()).unwrap(),
            m,
        ).unwrap();
        prop_assert!((r - oracle(p, &m.a_row, q)).abs() <= 1e-12);
        prop_assert!((c - oracle(p, &m.a_col, q)).abs() <= 1e-12);
    }

    #[test]
    fn integer_inventories_are_exactly_zero_sum_under_rws(
        p in prop::collection::vec(0u32..50, 3),
        q in prop::collection::vec(0u32..50, 3),
    ) {
        prop_assume!(p.iter().sum::<u32>() > 0 && q.iter().sum::<u32>() > 0);
        let m = PayoffMatrix::symmetric(vec![
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 1.0, 0.0],
        ]).unwrap();
        let inv = |v: &[u32]| Inventory::new(v.iter().map(|&x| x as f64).collect()).unwrap();
        let (r, c) = resolve_interaction(&inv(&p), &inv(&q), &m).unwrap();
        prop_assert_eq!(r + c, 0.0);
    }
}

#[test]
fn rws_episodes_are_zero_sum_per_encounter_and_per_episode() {
    let reg = Registry::builtin().unwrap();
    let mut encounters = 0;
    for (scenario, focal) in [
        ("rws_vs_gullible", "rws_rock"),
        ("rws_vs_pure_paper", "rws_scissors"),
        ("arena_rws_vs_mixed", "arena_rws_paper"),
        ("arena_rws_vs_gullible", "arena_rws_scissors"),
    ] {
        let s = reg.scenario(scenario).unwrap();
        let h = reg.bot_handle(focal).unwrap();
        for seed in 0..3 {
            let r = run_episode(&s, &vec![h.clone(); s.focal_seats()], seed).unwrap();
            let mut paid = vec![0.0; r.returns.len()];
            let mut episode_sum = 0.0;
            for e in r.events.iter().filter(|e| e.kind == EventKind::Interaction) {
                let (row, col) = (e.get("row_reward").unwrap(), e.get("col_reward").unwrap());
                assert_eq!(row + col, 0.0);
                episode_sum += row + col;
                let (zr, dr) = (e.get("zapper_reward").unwrap(), e.get("zapped_reward").unwrap());
                paid[e.actor.unwrap()] += zr;
                paid[e.target.unwrap()] += dr;
                encounters += 1;
            }
            assert_eq!(episode_sum, 0.0);
            // Returns are the per-player sums of those payments, accumulated
            // in f64, so their total is zero up to rounding.
            assert_eq!(paid, r.returns, "{scenario} seed {seed}");
            assert!(r.returns.iter().sum::<f64>().abs() < 1e-9, "{scenario} seed {seed}");
        }
    }
    assert!(encounters > 20, "only {encounters} encounters");
}

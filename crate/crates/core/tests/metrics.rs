use crucible_core::metrics::{
    brute_force_equality, fit_elo, fit_elo_with, normalize_score, positive_income_equality, MatchTable,
    ScoreFlag,
};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn equality_examples() {
    assert_eq!(positive_income_equality(&[2.0, 2.0, 2.0]), Ok(1.0));
    assert_eq!(positive_income_equality(&[4.0, 0.0]), Ok(0.5));
}

#[test]
fn equality_matches_the_double_sum_on_a_thousand_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let m = rng.gen_range(1..=64);
        let v: Vec<Ratio<i64>> = (0..m)
            .map(|_| Ratio::new(rng.gen_range(-200..1000), rng.gen_range(1..8)))
            .collect();
        let fast = positive_income_equality(&v);
        assert_eq!(fast, brute_force_equality(&v));
        if let Ok(q) = fast {
            assert!(q >= Ratio::new(1, m as i64) && q <= Ratio::from_integer(1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn equality_in_f64_tracks_the_exact_value(v in prop::collection::vec(-100i64..1000, 1..=64)) {
        let exact: Vec<Ratio<i64>> = v.iter().map(|&x| Ratio::from_integer(x)).collect();
        let float: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        match positive_income_equality(&exact) {
            Ok(q) => {
                let q = *q.numer() as f64 / *q.denom() as f64;
                prop_assert!((positive_income_equality(&float).unwrap() - q).abs() < 1e-12);
            }
            Err(e) => prop_assert_eq!(positive_income_equality(&float), Err(e)),
        }
    }

    #[test]
    fn equality_ignores_order_and_scale(
        v in prop::collection::vec(0i64..1000, 2..=32),
        k in 1i64..50,
    ) {
        let a: Vec<Ratio<i64>> = v.iter().map(|&x| Ratio::from_integer(x)).collect();
        let mut b: Vec<Ratio<i64>> = a.iter().map(|x| x * k).collect();
        b.reverse();
        prop_assert_eq!(positive_income_equality(&a), positive_income_equality(&b));
    }

    #[test]
    fn normalized_scores_stay_in_the_unit_interval(raw in -1e3f64..1e3, lo in -1e3f64..1e3, w in 0.0f64..1e3) {
        let n = normalize_score(raw, lo, lo + w);
        prop_assert!((0.0..=1.0).contains(&n.value));
        if w == 0.0 {
            prop_assert_eq!(n.flag, ScoreFlag::Degenerate);
        }
    }
}

fn bradley_terry_table(strengths: &[f64], per_pair: u32, seed: u64) -> MatchTable {
    let n = strengths.len();
    let mut t = MatchTable::new((0..n).map(|i| format!("p{i}")).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        for j in i + 1..n {
            let p = strengths[i] / (strengths[i] + strengths[j]);
            for _ in 0..per_pair {
                if rng.gen_bool(p) {
                    t.record(i, j, 1.0, 0.0);
                } else {
                    t.record(i, j, 0.0, 1.0);
                }
            }
        }
    }
    t
}

#[test]
fn elo_recovers_bradley_terry_strengths() {
    let s = [1.0, 2.0, 4.0, 8.0];
    let per_pair = 10_000;
    let t = bradley_terry_table(&s, per_pair, 17);
    let fit = fit_elo(&t).unwrap();
    assert!(fit.warnings.is_empty());
    for i in 0..3 {
        assert!(fit.ratings[i] < fit.ratings[i + 1]);
    }
    for i in 0..4 {
        for j in 0..4 {
            if i == j {
                continue;
            }
            let p = s[i] / (s[i] + s[j]);
            let sd = (p * (1.0 - p) / per_pair as f64).sqrt();
            let q = fit.win_probability(i, j);
            assert!((q - p).abs() <= 3.0 * sd, "({i},{j}): {q} vs {p}");
        }
    }
    assert_eq!(fit.normalized[0], 0.0);
    assert_eq!(fit.normalized[3], 1.0);
    assert!(fit.normalized.iter().all(|x| (0.0..=1.0).contains(x)));
    let mean: f64 = fit.ratings.iter().sum::<f64>() / 4.0;
    assert!(mean.abs() < 1e-9);
}

#[test]
fn elo_fit_satisfies_the_likelihood_equations() {
    // At the maximum, each population's expected wins equal its actual wins.
    let t = bradley_terry_table(&[1.0, 3.0, 0.5, 2.0, 6.0], 500, 3);
    let fit = fit_elo_with(&t, 0.0).unwrap();
    for i in 0..5 {
        let wins: f64 = (0..5).map(|j| t.wins[i][j] + 0.5 * t.draws[i][j]).sum();
        let expected: f64 = (0..5)
            .filter(|&j| j != i)
            .map(|j| t.games(i, j) * fit.win_probability(i, j))
            .sum();
        assert!((wins - expected).abs() < 1e-4 * wins.max(1.0), "{i}: {wins} vs {expected}");
    }
}

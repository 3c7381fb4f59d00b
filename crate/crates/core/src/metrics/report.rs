use super::elo::{fit_elo, EloFit, MatchTable};
use super::equality::positive_income_equality;
use super::score::{normalize_score, ScoreFlag};
use super::mean_stderr;
use crate::protocol::{EpisodeResult, Mode};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// One episode played by a named focal population.
#[derive(Clone, Debug)]
pub struct PopulationResult {
    pub population: String,
    pub substrate: String,
    pub mode: Mode,
    pub result: EpisodeResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub population: String,
    pub scenario: String,
    pub substrate: String,
    pub mode: Mode,
    pub episodes: usize,
    /// Episodes that aborted and were scored as missing.
    pub aborted: usize,
    pub focal_per_capita_mean: f64,
    pub focal_per_capita_stderr: f64,
    /// Omitted for resident-mode and universalization scenarios.
    pub background_per_capita: Option<f64>,
    pub equality: Option<f64>,
    pub normalized_score: f64,
    pub score_flag: ScoreFlag,
    pub anchor_lo: f64,
    pub anchor_hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EloEntry {
    pub rating: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_scenario: Vec<ScenarioMetrics>,
    /// population -> substrate -> mean normalized score.
    pub per_substrate: BTreeMap<String, BTreeMap<String, f64>>,
    pub elo: BTreeMap<String, EloEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Aggregate episode records into a report.
///
/// Anchors default per scenario to the `random` population's mean (or the
/// worst population's when absent) and the best population's mean. Elo
/// matches pair populations on the same scenario and seed, comparing focal
/// per-capita returns; ties are draws.
pub fn build_report(
    results: &[PopulationResult],
    anchors: &BTreeMap<String, (f64, f64)>,
) -> MetricsReport {
    let mut groups: BTreeMap<(String, String), Vec<&PopulationResult>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.result.scenario.clone(), r.population.clone()))
            .or_default()
            .push(r);
    }

    struct Partial<'a> {
        first: &'a PopulationResult,
        episodes: usize,
        aborted: usize,
        mean: f64,
        stderr: f64,
        background: Option<f64>,
        equality: Option<f64>,
    }

    let mut partials = Vec::new();
    for ((_, _), rs) in &groups {
        let complete: Vec<&&PopulationResult> =
            rs.iter().filter(|r| r.result.aborted.is_none()).collect();
        let focal: Vec<f64> = complete
            .iter()
            .filter_map(|r| r.result.focal_per_capita().ok())
            .collect();
        let (mean, stderr) = mean_stderr(&focal);
        let include_background = matches!(rs[0].mode, Mode::Visitor | Mode::HalfAndHalf);
        let (background, equality) = if include_background {
            let bg: Vec<f64> = complete
                .iter()
                .filter_map(|r| r.result.background_per_capita().ok())
                .collect();
            let q: Vec<f64> = complete
                .iter()
                .filter_map(|r| positive_income_equality(&r.result.background_returns()).ok())
                .collect();
            (
                (!bg.is_empty()).then(|| mean_stderr(&bg).0),
                (!q.is_empty()).then(|| mean_stderr(&q).0),
            )
        } else {
            (None, None)
        };
        partials.push(Partial {
            first: rs[0],
            episodes: rs.len(),
            aborted: rs.len() - complete.len(),
            mean,
            stderr,
            background,
            equality,
        });
    }

    let mut by_scenario: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for p in &partials {
        if p.mean.is_finite() {
            by_scenario
                .entry(p.first.result.scenario.as_str())
                .or_default()
                .push((p.first.population.as_str(), p.mean));
        }
    }
    let anchor_for = |scenario: &str| -> (f64, f64) {
        if let Some(a) = anchors.get(scenario) {
            return *a;
        }
        let means = by_scenario.get(scenario).cloned().unwrap_or_default();
        let hi = means.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
        let lo = means
            .iter()
            .find(|m| m.0 == "random")
            .map(|m| m.1)
            .unwrap_or_else(|| means.iter().map(|m| m.1).fold(f64::INFINITY, f64::min));
        (lo, hi)
    };

    let mut per_scenario = Vec::new();
    let mut warnings = Vec::new();
    for p in partials {
        let scenario = p.first.result.scenario.clone();
        let (lo, hi) = anchor_for(&scenario);
        let norm = if p.mean.is_finite() {
            normalize_score(p.mean, lo, hi)
        } else {
            warnings.push(format!(
                "{} on {}: no completed episodes",
                p.first.population, scenario
            ));
            normalize_score(0.0, 0.0, 0.0)
        };
        per_scenario.push(ScenarioMetrics {
            population: p.first.population.clone(),
            scenario,
            substrate: p.first.substrate.clone(),
            mode: p.first.mode,
            episodes: p.episodes,
            aborted: p.aborted,
            focal_per_capita_mean: p.mean,
            focal_per_capita_stderr: p.stderr,
            background_per_capita: p.background,
            equality: p.equality,
            normalized_score: norm.value,
            score_flag: norm.flag,
            anchor_lo: lo,
            anchor_hi: hi,
        });
    }

    let mut per_substrate: BTreeMap<String, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
    for m in &per_scenario {
        let e = per_substrate
            .entry(m.population.clone())
            .or_default()
            .entry(m.substrate.clone())
            .or_insert((0.0, 0));
        e.0 += m.normalized_score;
        e.1 += 1;
    }
    let per_substrate = per_substrate
        .into_iter()
        .map(|(pop, subs)| {
            let subs = subs
                .into_iter()
                .map(|(s, (sum, n))| (s, sum / n as f64))
                .collect();
            (pop, subs)
        })
        .collect();

    let (elo, elo_warnings) = elo_from_results(results);
    warnings.extend(elo_warnings);
    MetricsReport {
        per_scenario,
        per_substrate,
        elo,
        warnings,
    }
}

fn elo_from_results(results: &[PopulationResult]) -> (BTreeMap<String, EloEntry>, Vec<String>) {
    let names: Vec<String> = results
        .iter()
        .map(|r| r.population.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if names.len() < 2 {
        return (BTreeMap::new(), Vec::new());
    }
    let mut table = MatchTable::new(names.clone());
    let mut by_match: BTreeMap<(&str, u64), Vec<(usize, f64)>> = BTreeMap::new();
    for r in results {
        if let Ok(score) = r.result.focal_per_capita() {
            if r.result.aborted.is_none() {
                let i = table.index(&r.population).expect("known population");
                by_match
                    .entry((r.result.scenario.as_str(), r.result.seed))
                    .or_default()
                    .push((i, score));
            }
        }
    }
    for entrants in by_match.values() {
        for a in 0..entrants.len() {
            for b in a + 1..entrants.len() {
                let (i, si) = entrants[a];
                let (j, sj) = entrants[b];
                if i != j {
                    table.record(i, j, si, sj);
                }
            }
        }
    }
    match fit_elo(&table) {
        Ok(EloFit {
            names,
            ratings,
            normalized,
            warnings,
            ..
        }) => (
            names
                .into_iter()
                .zip(ratings.into_iter().zip(normalized))
                .map(|(n, (rating, normalized))| (n, EloEntry { rating, normalized }))
                .collect(),
            warnings,
        ),
        Err(e) => (BTreeMap::new(), vec![format!("elo: {e}")]),
    }
}

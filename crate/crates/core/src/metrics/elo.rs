use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ELO_TOLERANCE: f64 = 1e-8;
const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EloError {
    #[error("match table needs at least one population")]
    Empty,
    #[error("match table rows do not match the population count")]
    Shape,
    #[error("population `{0}` has no wins or draws; add a draw prior")]
    ZeroScore(String),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
}

/// Pairwise results: `wins[i][j]` counts i beating j; draws are symmetric.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchTable {
    pub names: Vec<String>,
    pub wins: Vec<Vec<f64>>,
    pub draws: Vec<Vec<f64>>,
}

impl MatchTable {
    pub fn new(names: Vec<String>) -> Self {
        let n = names.len();
        Self {
            names,
            wins: vec![vec![0.0; n]; n],
            draws: vec![vec![0.0; n]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Record a match between `i` and `j` decided by the two scores.
    pub fn record(&mut self, i: usize, j: usize, score_i: f64, score_j: f64) {
        if score_i > score_j {
            self.wins[i][j] += 1.0;
        } else if score_j > score_i {
            self.wins[j][i] += 1.0;
        } else {
            self.draws[i][j] += 1.0;
            self.draws[j][i] += 1.0;
        }
    }

    pub fn games(&self, i: usize, j: usize) -> f64 {
        self.wins[i][j] + self.wins[j][i] + self.draws[i][j]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EloFit {
    pub names: Vec<String>,
    /// Bradley-Terry strengths, geometric mean 1 within each component.
    pub strengths: Vec<f64>,
    /// 400 log10 strength, mean 0 within each component.
    pub ratings: Vec<f64>,
    /// Min-max normalized ratings.
    pub normalized: Vec<f64>,
    /// Connected component id per population.
    pub component: Vec<usize>,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl EloFit {
    /// Model probability that `i` beats `j`.
    pub fn win_probability(&self, i: usize, j: usize) -> f64 {
        self.strengths[i] / (self.strengths[i] + self.strengths[j])
    }
}

/// Fit with one pseudo-draw between every pair that met.
pub fn fit_elo(table: &MatchTable) -> Result<EloFit, EloError> {
    fit_elo_with(table, 1.0)
}

/// Bradley-Terry maximum likelihood by minorization-maximization. Draws
/// count half a win for each side; `prior` pseudo-draws are added to every
/// pair that played at least once.
pub fn fit_elo_with(table: &MatchTable, prior: f64) -> Result<EloFit, EloError> {
    let n = table.len();
    if n == 0 {
        return Err(EloError::Empty);
    }
    if table.wins.len() != n
        || table.draws.len() != n
        || table.wins.iter().chain(&table.draws).any(|r| r.len() != n)
    {
        return Err(EloError::Shape);
    }
    let mut games = vec![vec![0.0; n]; n];
    let mut score = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let g = table.games(i, j);
            if g > 0.0 {
                games[i][j] = g + prior;
                score[i] += table.wins[i][j] + 0.5 * (table.draws[i][j] + prior);
            }
        }
    }

    let component = components(&games);
    let count = component.iter().copied().max().map_or(0, |m| m + 1);
    let mut warnings = Vec::new();
    if count > 1 {
        warnings.push(format!(
            "comparison graph has {count} components; ratings are only comparable within one"
        ));
    }
    for i in 0..n {
        if score[i] <= 0.0 && games[i].iter().any(|g| *g > 0.0) {
            return Err(EloError::ZeroScore(table.names[i].clone()));
        }
    }

    let mut p = vec![1.0; n];
    let mut iterations = 0;
    loop {
        if iterations == MAX_ITERATIONS {
            return Err(EloError::NoConvergence(iterations));
        }
        iterations += 1;
        let mut next = p.clone();
        for i in 0..n {
            let denom: f64 = (0..n)
                .filter(|&j| games[i][j] > 0.0)
                .map(|j| games[i][j] / (p[i] + p[j]))
                .sum();
            if denom > 0.0 {
                next[i] = score[i] / denom;
            }
        }
        normalize_components(&mut next, &component, count);
        let change = p
            .iter()
            .zip(&next)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        p = next;
        if change < ELO_TOLERANCE {
            break;
        }
    }

    let ratings: Vec<f64> = p.iter().map(|s| 400.0 * s.log10()).collect();
    let lo = ratings.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratings.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let normalized = ratings
        .iter()
        .map(|r| if hi > lo { (r - lo) / (hi - lo) } else { 0.5 })
        .collect();
    Ok(EloFit {
        names: table.names.clone(),
        strengths: p,
        ratings,
        normalized,
        component,
        iterations,
        warnings,
    })
}

/// Scale each component to geometric mean 1, so log ratings have mean 0.
fn normalize_components(p: &mut [f64], component: &[usize], count: usize) {
    for c in 0..count {
        let members: Vec<usize> = (0..p.len()).filter(|&i| component[i] == c).collect();
        let mean_log =
            members.iter().map(|&i| p[i].ln()).sum::<f64>() / members.len() as f64;
        let scale = (-mean_log).exp();
        for &i in &members {
            p[i] *= scale;
        }
    }
}

fn components(games: &[Vec<f64>]) -> Vec<usize> {
    let n = games.len();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = next;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if games[i][j] > 0.0 && comp[j] == usize::MAX {
                    comp[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(names: &[&str]) -> MatchTable {
        MatchTable::new(names.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn shutout_normalizes_to_endpoints() {
        let mut t = table(&["a", "b"]);
        t.wins[0][1] = 100.0;
        let fit = fit_elo(&t).unwrap();
        assert_eq!(fit.normalized, vec![1.0, 0.0]);
        assert!(fit.ratings[0] > 0.0 && fit.ratings[1] < 0.0);
        assert!((fit.ratings[0] + fit.ratings[1]).abs() < 1e-9);
        // p_a / p_b = 100.5 / 0.5 at the fixed point.
        assert!((fit.strengths[0] / fit.strengths[1] - 201.0).abs() < 1e-4);
    }

    #[test]
    fn even_record_gives_equal_ratings() {
        let mut t = table(&["a", "b"]);
        t.wins[0][1] = 50.0;
        t.wins[1][0] = 50.0;
        let fit = fit_elo(&t).unwrap();
        assert!((fit.ratings[0] - fit.ratings[1]).abs() < 1e-9);
        assert_eq!(fit.normalized, vec![0.5, 0.5]);
    }

    #[test]
    fn all_draws_are_equal() {
        let mut t = table(&["a", "b", "c"]);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    t.draws[i][j] = 7.0;
                }
            }
        }
        let fit = fit_elo_with(&t, 0.0).unwrap();
        assert!(fit.ratings.iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn disconnected_graph_warns() {
        let mut t = table(&["a", "b", "c", "d"]);
        t.wins[0][1] = 3.0;
        t.wins[1][0] = 1.0;
        t.wins[2][3] = 1.0;
        t.wins[3][2] = 3.0;
        let fit = fit_elo(&t).unwrap();
        assert_eq!(fit.component, vec![0, 0, 1, 1]);
        assert_eq!(fit.warnings.len(), 1);
        assert!((fit.ratings[0] + fit.ratings[1]).abs() < 1e-9);
    }

    #[test]
    fn zero_score_without_prior_is_an_error() {
        let mut t = table(&["a", "b"]);
        t.wins[0][1] = 4.0;
        assert!(matches!(fit_elo_with(&t, 0.0), Err(EloError::ZeroScore(_))));
    }
}

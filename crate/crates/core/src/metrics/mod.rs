//! Evaluation metrics: per-capita returns, normalized scores, background
//! equality and Elo ratings.

mod elo;
mod equality;
mod report;
mod score;

pub use elo::{fit_elo, fit_elo_with, EloError, EloFit, MatchTable, ELO_TOLERANCE};
pub use equality::{brute_force_equality, positive_income_equality, EqualityError};
pub use report::{build_report, EloEntry, MetricsReport, PopulationResult, ScenarioMetrics};
pub use score::{normalize_score, Normalized, ScoreFlag};

use crate::scalar::Scalar;

/// Mean of `returns` over players whose mask entry equals `want`.
pub fn per_capita<T: Scalar>(returns: &[T], mask: &[bool], want: bool) -> Option<T> {
    let mut sum = T::zero();
    let mut n = 0u64;
    for (r, m) in returns.iter().zip(mask) {
        if *m == want {
            sum = sum + *r;
            n += 1;
        }
    }
    (n > 0).then(|| sum / T::from_count(n))
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

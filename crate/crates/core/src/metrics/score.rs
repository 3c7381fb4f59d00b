use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFlag {
    InRange,
    /// Raw below the low anchor; clamped to 0.
    Underflow,
    /// Raw above the high anchor; clamped to 1.
    Overflow,
    /// Anchors coincide (or are inverted); reported as 0.5.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalized<T> {
    pub value: T,
    pub flag: ScoreFlag,
}

/// (raw - lo) / (hi - lo), clamped to [0, 1].
pub fn normalize_score<T: Scalar>(raw: T, lo: T, hi: T) -> Normalized<T> {
    if !(hi > lo) {
        return Normalized {
            value: T::one() / (T::one() + T::one()),
            flag: ScoreFlag::Degenerate,
        };
    }
    if raw < lo {
        return Normalized {
            value: T::zero(),
            flag: ScoreFlag::Underflow,
        };
    }
    if raw > hi {
        return Normalized {
            value: T::one(),
            flag: ScoreFlag::Overflow,
        };
    }
    Normalized {
        value: (raw - lo) / (hi - lo),
        flag: ScoreFlag::InRange,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(normalize_score(5.0, 0.0, 10.0).value, 0.5);
        assert_eq!(normalize_score(0.0, 0.0, 10.0).value, 0.0);
        assert_eq!(
            normalize_score(12.0, 0.0, 10.0),
            Normalized { value: 1.0, flag: ScoreFlag::Overflow }
        );
        assert_eq!(
            normalize_score(3.0, 4.0, 4.0),
            Normalized { value: 0.5, flag: ScoreFlag::Degenerate }
        );
        let half = num_rational::Ratio::new(1i64, 2);
        let r = |n| num_rational::Ratio::from_integer(n);
        assert_eq!(normalize_score(r(3), r(1), r(5)).value, half);
    }
}

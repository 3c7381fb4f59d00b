//! Numeric abstraction for the payoff and metric formulas.
//!
//! The formulas only need field arithmetic and ordering, so they run over
//! `f32`, `f64` and exact rationals alike. The engine itself stores `f64`.

use num_traits::Num;
use std::fmt::Debug;

pub trait Scalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    /// `n` as a scalar, built by doubling so it works for any `Num`.
    fn from_count(n: u64) -> Self {
        let mut acc = Self::zero();
        let mut unit = Self::one();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc + unit;
            }
            unit = unit + unit;
            n >>= 1;
        }
        acc
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn abs_diff(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_count_is_exact() {
        for n in [0u64, 1, 2, 7, 64, 1000, 123_457] {
            assert_eq!(f64::from_count(n), n as f64);
            assert_eq!(i64::from_count(n), n as i64);
        }
    }
}

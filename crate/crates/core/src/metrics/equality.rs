use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum EqualityError {
    #[error("no returns")]
    Empty,
    #[error("no positive return; equality is undefined")]
    NoPositive,
}

fn positive_parts<T: Scalar>(returns: &[T]) -> Result<Vec<T>, EqualityError> {
    if returns.is_empty() {
        return Err(EqualityError::Empty);
    }
    let r: Vec<T> = returns.iter().map(|x| x.max_of(T::zero())).collect();
    if !r.iter().any(|x| *x > T::zero()) {
        return Err(EqualityError::NoPositive);
    }
    Ok(r)
}

/// Q(r) = 1 - sum_i sum_j |r+_i - r+_j| / (2 m sum_i r+_i), with r+ = max(0, r).
///
/// Uses the sorted form sum_i sum_j |x_i - x_j| = 2 sum_k (2k + 1 - m) x_(k).
/// A single positive return gives 1/m, as the formula dictates.
pub fn positive_income_equality<T: Scalar>(returns: &[T]) -> Result<T, EqualityError> {
    let mut r = positive_parts(returns)?;
    r.sort_by(|a, b| a.partial_cmp(b).expect("comparable returns"));
    let m = r.len() as u64;
    let mut pos = T::zero();
    let mut neg = T::zero();
    let mut total = T::zero();
    for (k, x) in r.iter().enumerate() {
        let k = k as u64;
        if 2 * k + 1 >= m {
            pos = pos + T::from_count(2 * k + 1 - m) * *x;
        } else {
            neg = neg + T::from_count(m - 2 * k - 1) * *x;
        }
        total = total + *x;
    }
    let two = T::one() + T::one();
    let numerator = two * (pos - neg);
    Ok(T::one() - numerator / (two * T::from_count(m) * total))
}

/// The O(m^2) double sum, for cross-checking.
pub fn brute_force_equality<T: Scalar>(returns: &[T]) -> Result<T, EqualityError> {
    let r = positive_parts(returns)?;
    let mut num = T::zero();
    let mut total = T::zero();
    for x in &r {
        total = total + *x;
        for y in &r {
            num = num + x.abs_diff(*y);
        }
    }
    let two = T::one() + T::one();
    Ok(T::one() - num / (two * T::from_count(r.len() as u64) * total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(positive_income_equality(&[2.0, 2.0, 2.0]), Ok(1.0));
        assert_eq!(positive_income_equality(&[4.0, 0.0]), Ok(0.5));
        let q: f64 = positive_income_equality(&[3.0, -1.0, 0.0]).unwrap();
        assert!((q - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(positive_income_equality::<f64>(&[-1.0, 0.0]), Err(EqualityError::NoPositive));
        assert_eq!(positive_income_equality::<f64>(&[]), Err(EqualityError::Empty));
    }

    #[test]
    fn single_earner_gives_one_over_m() {
        use num_rational::Ratio;
        let r = |n| Ratio::<i64>::from_integer(n);
        let xs = [r(5), r(0), r(0), r(0), r(0)];
        assert_eq!(positive_income_equality(&xs), Ok(Ratio::new(1, 5)));
        assert_eq!(positive_income_equality(&[5.0, 0.0, 0.0, 0.0]), Ok(0.25));
    }
}

//! Exact arithmetic substrate: rationals, cached binomial coefficients,
//! decimal rendering, and the standard normal CDF.
//!
//! Every probability produced elsewhere in the crate is a [`BigRat`] until it
//! is rendered; floats appear only in [`phi`] and the asymptotic formulas.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational, always in lowest terms with a positive denominator.
pub type BigRat = BigRational;

/// Maximum number of fractional digits accepted by [`rat_to_decimal`].
pub const MAX_DECIMAL_PLACES: usize = 50;

/// Memo of binomial coefficients, one lazily extended row per `a`.
///
/// Row `a` holds `C(a, 0), C(a, 1), ..., C(a, len - 1)`. A request for
/// `C(a, b)` is folded onto `min(b, a - b)` so that rows with huge `a` (large
/// shelf counts) only ever store the short prefix that is actually needed.
/// Rows are extended under the write lock and published whole, so readers
/// never see a partially filled entry.
#[derive(Debug, Default)]
pub struct BinomialCache {
    rows: RwLock<HashMap<u64, Arc<Vec<BigUint>>>>,
}

impl BinomialCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Exact `C(a, b)`; zero when `b < 0` or `b > a`.
    pub fn get(&self, a: u64, b: i64) -> BigUint {
        if b < 0 || b as u64 > a {
            return BigUint::zero();
        }
        let b = b as u64;
        let j = b.min(a - b) as usize;
        if let Some(row) = self.rows.read().expect("binomial cache poisoned").get(&a) {
            if let Some(v) = row.get(j) {
                return v.clone();
            }
        }
        let mut rows = self.rows.write().expect("binomial cache poisoned");
        let row = rows
            .entry(a)
            .or_insert_with(|| Arc::new(vec![BigUint::one()]));
        if row.len() <= j {
            let mut extended: Vec<BigUint> = row.as_ref().clone();
            extended.reserve(j + 1 - extended.len());
            while extended.len() <= j {
                let i = extended.len() as u64;
                let prev = extended.last().expect("row starts non-empty");
                // C(a, i) = C(a, i - 1) * (a - i + 1) / i, exact at every step.
                let next = prev * BigUint::from(a - i + 1) / BigUint::from(i);
                extended.push(next);
            }
            *row = Arc::new(extended);
        }
        row[j].clone()
    }

    /// Number of rows currently memoised.
    pub fn rows_cached(&self) -> usize {
        self.rows.read().expect("binomial cache poisoned").len()
    }
}

fn shared_cache() -> &'static BinomialCache {
    static CACHE: OnceLock<BinomialCache> = OnceLock::new();
    CACHE.get_or_init(BinomialCache::new)
}

/// Exact `C(a, b)` from the process-wide cache; zero outside `0..=a`.
pub fn binom(a: u64, b: i64) -> BigUint {
    shared_cache().get(a, b)
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * BigUint::from(i))
}

pub fn int(v: impl Into<BigInt>) -> BigRat {
    BigRat::from_integer(v.into())
}

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRat {
    BigRat::new(num.into(), den.into())
}

pub fn uint_to_rat(v: &BigUint) -> BigRat {
    BigRat::from_integer(BigInt::from(v.clone()))
}

/// Nearest `f64` to an exact rational.
pub fn rat_to_f64(x: &BigRat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Decimal rendering with exactly `places` fractional digits, rounding half
/// away from zero (half-up for the nonnegative values this crate produces).
///
/// Panics if `places > MAX_DECIMAL_PLACES`.
pub fn rat_to_decimal(x: &BigRat, places: usize) -> String {
    assert!(
        places <= MAX_DECIMAL_PLACES,
        "at most {MAX_DECIMAL_PLACES} decimal places supported"
    );
    let scale = num_traits::pow(BigInt::from(10u32), places);
    let num = x.numer().abs() * &scale;
    let den = x.denom();
    let (mut q, r) = num.div_rem(den);
    if r * 2 >= *den {
        q += 1;
    }
    let negative = x.is_negative() && !q.is_zero();
    let (int_part, frac_part) = q.div_rem(&scale);
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    out.push_str(&int_part.to_string());
    if places > 0 {
        out.push('.');
        out.push_str(&format!(
            "{:0>width$}",
            frac_part.to_string(),
            width = places
        ));
    }
    out
}

/// Standard normal CDF, absolute error below 1e-12 on all finite inputs.
pub fn phi(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("{x}")));
    }
    Ok(normal_cdf(x))
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Below this magnitude the series is used, above it the tail fraction.
const SERIES_CUTOFF: f64 = 5.0;

pub(crate) fn normal_cdf(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        0.5 + normal_density(x) * odd_series(x)
    } else if x > 0.0 {
        1.0 - upper_tail(x)
    } else {
        upper_tail(-x)
    }
}

fn normal_density(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `sum_k x^(2k+1) / (1*3*5*...*(2k+1))`, so that `Phi(x) = 1/2 + pdf(x) * S(x)`.
/// All terms share the sign of `x`, so there is no cancellation.
fn odd_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut k = 1.0;
    loop {
        term *= x2 / (2.0 * k + 1.0);
        let next = sum + term;
        if next == sum {
            return sum;
        }
        sum = next;
        k += 1.0;
    }
}

/// `1 - Phi(x)` for `x >= SERIES_CUTOFF` via the Laplace continued fraction
/// `pdf(x) / (x + 1/(x + 2/(x + 3/(x + ...))))`, evaluated bottom-up.
fn upper_tail(x: f64) -> f64 {
    const DEPTH: u32 = 120;
    let mut tail = x;
    for k in (1..=DEPTH).rev() {
        tail = x + f64::from(k) / tail;
    }
    normal_density(x) / tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert_eq!(binom(5, 2), BigUint::from(10u32));
        assert_eq!(binom(7, 9), BigUint::zero());
        assert_eq!(binom(7, -1), BigUint::zero());
        assert_eq!(binom(0, 0), BigUint::one());
        assert_eq!(binom(9, 9), BigUint::one());
    }

    #[test]
    fn pascal_at_figure_scale() {
        let lhs = binom(352, 52);
        let rhs = binom(351, 51) + binom(351, 52);
        assert_eq!(lhs, rhs);
        // Independent product route.
        let direct =
            (0..52u64).fold(BigUint::one(), |acc, i| acc * BigUint::from(352 - i)) / factorial(52);
        assert_eq!(lhs, direct);
    }

    #[test]
    fn cache_extends_rows_lazily() {
        let cache = BinomialCache::new();
        assert_eq!(
            cache.get(1_000_052, 2),
            BigUint::from(1_000_052u64 * 1_000_051 / 2)
        );
        assert_eq!(cache.rows_cached(), 1);
        // Longer request on the same row, then the symmetric index.
        let c52 = cache.get(1_000_052, 52);
        assert_eq!(cache.get(1_000_052, 1_000_000), c52);
        assert_eq!(cache.rows_cached(), 1);
    }

    #[test]
    fn cache_is_shareable_across_threads() {
        let cache = BinomialCache::new();
        std::thread::scope(|s| {
            for t in 0..4u64 {
                let cache = &cache;
                s.spawn(move || {
                    for b in 0..60 {
                        let a = 300 + (b as u64 + t) % 7;
                        assert_eq!(
                            cache.get(a, b),
                            cache.get(a - 1, b - 1) + cache.get(a - 1, b)
                        );
                    }
                });
            }
        });
    }

    #[test]
    fn phi_reference_points() {
        assert_eq!(phi(0.0).unwrap(), 0.5);
        // m = n = 52 asymptotic point: 1 - 2 Phi(-0.1899) ~ 0.1506.
        let v = phi(-0.1899).unwrap();
        assert!((v - 0.4247).abs() < 5e-5, "{v}");
        assert!((1.0 - 2.0 * v - 0.1506).abs() < 1e-4);
        assert!(phi(f64::NAN).is_err());
        assert!(phi(f64::INFINITY).is_err());
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn phi_matches_high_precision_values() {
        // Computed with 40-digit arithmetic.
        let table = [
            (-8.0, 6.220960574271784123516e-16),
            (-6.0, 9.865876450376981407009e-10),
            (-5.0, 2.866515718791939116738e-7),
            (-3.0, 1.349898031630094526652e-3),
            (-1.0, 0.1586552539314570514148),
            (-0.1899, 0.4246937462344754919332),
            (0.5, 0.6914624612740131036377),
            (1.959963984540054, 0.9749999999999999862347),
            (4.999, 0.9999997118579858535868),
            (7.5, 0.9999999999999680910833),
        ];
        for (x, want) in table {
            let got = phi(x).unwrap();
            assert!((got - want).abs() < 1e-15, "phi({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(rat_to_decimal(&ratio(1, 2), 5), "0.50000");
        assert_eq!(rat_to_decimal(&ratio(1, 3), 5), "0.33333");
        assert_eq!(rat_to_decimal(&ratio(2, 3), 5), "0.66667");
        assert_eq!(rat_to_decimal(&ratio(1, 1), 5), "1.00000");
        assert_eq!(rat_to_decimal(&ratio(5, 2), 0), "3");
        assert_eq!(rat_to_decimal(&ratio(-1, 8), 2), "-0.13");
        assert_eq!(rat_to_decimal(&ratio(-1, 1000), 2), "0.00");
        assert_eq!(rat_to_decimal(&ratio(1, 200_000), 5), "0.00001");
    }

    #[test]
    #[should_panic(expected = "decimal places")]
    fn decimal_rejects_excess_places() {
        rat_to_decimal(&ratio(1, 3), 51);
    }

    #[test]
    fn rat_to_f64_is_nearest() {
        assert_eq!(rat_to_f64(&ratio(1, 3)), 1.0 / 3.0);
        let huge = uint_to_rat(&factorial(52)) / uint_to_rat(&factorial(53));
        assert_eq!(rat_to_f64(&huge), 1.0 / 53.0);
    }
}

//! Total variation distance between the m-shelf shuffle and the uniform
//! measure, its large-deck approximation, and derived mixing quantities.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{factorial, normal_cdf, rat_to_decimal, uint_to_rat, BigRat};
use crate::permstat::{check_deck_size, ValleyTable};
use crate::shelfmeasure::{cumulative, shuffle_valley_pmf, tilt_bounds, QTable, TiltBounds};

/// Decimal places used when comparing against published tables.
pub const REPORT_PLACES: usize = 5;

const SQRT_10: f64 = 3.162_277_660_168_379_5;

/// One exact-plus-asymptotic evaluation at `(n, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TVReport {
    pub n: usize,
    pub m: u64,
    pub tv_exact: BigRat,
    pub tv_exact_decimal: String,
    /// `None` for a one-card deck, where the asymptotic formula is undefined.
    pub tv_asymptotic: Option<f64>,
    /// Smallest k maximising `P(V_{n,m} <= k) - P(V_n <= k)`.
    pub argmax_k: usize,
    /// `None` when the deck has fewer than two valley classes.
    pub delta_bounds: Option<TiltBounds>,
}

/// Exact total variation, computed from the half-l1 sum over valley classes
/// and again as the largest CDF gap; the two must agree exactly.
pub fn tv_exact(n: usize, m: u64) -> Result<TVReport> {
    let vt = ValleyTable::new(n)?;
    tv_exact_with(&vt, m)
}

/// [`tv_exact`] reusing an already built valley table.
pub fn tv_exact_with(vt: &ValleyTable, m: u64) -> Result<TVReport> {
    let n = vt.n();
    let qt = QTable::new(vt, m)?;
    let shuffled = shuffle_valley_pmf(&qt, vt)?;
    let uniform = vt.pmf();

    let half_l1: BigRat = shuffled
        .iter()
        .zip(&uniform)
        .map(|(a, b)| if a > b { a - b } else { b - a })
        .sum::<BigRat>()
        / BigRat::from_integer(2.into());

    let gaps: Vec<BigRat> = cumulative(&shuffled)
        .into_iter()
        .zip(cumulative(&uniform))
        .map(|(a, b)| a - b)
        .collect();
    let mut argmax_k = 0;
    for (k, g) in gaps.iter().enumerate() {
        if *g > gaps[argmax_k] {
            argmax_k = k;
        }
    }
    let max_gap = gaps[argmax_k].clone();

    if half_l1 != max_gap {
        return Err(Error::InvariantViolation(format!(
            "sum-form TV {half_l1} differs from max-CDF TV {max_gap} at n={n}, m={m}"
        )));
    }
    let delta_bounds = if qt.len() >= 2 {
        Some(tilt_bounds(&qt)?)
    } else {
        None
    };
    Ok(TVReport {
        n,
        m,
        tv_exact_decimal: rat_to_decimal(&half_l1, REPORT_PLACES),
        tv_exact: half_l1,
        tv_asymptotic: if n >= 2 {
            Some(tv_asymptotic(n, m)?)
        } else {
            None
        },
        argmax_k,
        delta_bounds,
    })
}

/// Scale parameter `c = m / n^(5/4)`.
pub fn scale_parameter(n: usize, m: u64) -> f64 {
    m as f64 / (n as f64).powf(1.25)
}

/// Large-deck approximation `1 - 2 Phi(-1 / (12 c^2 sqrt 10))` with
/// `c = m / n^(5/4)`.
pub fn tv_asymptotic(n: usize, m: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "asymptotic TV needs n >= 2, got {n}"
        )));
    }
    if m == 0 {
        return Err(Error::ZeroShelves);
    }
    Ok(tv_asymptotic_at_scale(scale_parameter(n, m)))
}

/// The approximation as a function of `c` alone.
pub fn tv_asymptotic_at_scale(c: f64) -> f64 {
    let shift = 1.0 / (6.0 * c * c * SQRT_10);
    if !shift.is_finite() {
        return 1.0;
    }
    normal_shift_tv(shift)
}

/// `d_TV(N(-mu, 1), N(0, 1)) = 1 - 2 Phi(-mu / 2)`.
pub fn tv_normal_shift(mu: f64) -> Result<f64> {
    if !mu.is_finite() {
        return Err(Error::NonFinite(format!("mu = {mu}")));
    }
    if mu < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "normal shift must be nonnegative, got {mu}"
        )));
    }
    Ok(normal_shift_tv(mu))
}

fn normal_shift_tv(mu: f64) -> f64 {
    (1.0 - 2.0 * normal_cdf(-mu / 2.0)).clamp(0.0, 1.0)
}

/// Limiting TV after `(5/4) log2 n + theta` one-shelf passes, one entry per
/// `theta`. That many passes compose to `2^(k-1)` shelves, so
/// `c = 2^(theta - 1)` independently of `n`.
pub fn cutoff_profile(n: usize, thetas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cutoff profile needs n >= 2, got {n}"
        )));
    }
    thetas
        .iter()
        .map(|&theta| {
            if !theta.is_finite() {
                return Err(Error::NonFinite(format!("theta = {theta}")));
            }
            Ok((theta, tv_asymptotic_at_scale((theta - 1.0).exp2())))
        })
        .collect()
}

/// Deck size, per-pass shelf count, and number of passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShuffleSpec {
    pub n: usize,
    pub m: u64,
    pub repeats: u32,
}

impl ShuffleSpec {
    pub fn new(n: usize, m: u64, repeats: u32) -> Self {
        Self { n, m, repeats }
    }
}

/// `2^(repeats - 1) m^repeats`: an m1-shelf pass followed by an m2-shelf
/// pass is one `2 m1 m2`-shelf pass.
pub fn effective_shelves(spec: &ShuffleSpec) -> Result<BigUint> {
    if spec.repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    if spec.m == 0 {
        return Err(Error::ZeroShelves);
    }
    let r = spec.repeats as usize;
    Ok(num_traits::pow(BigUint::from(spec.m), r) << (r - 1))
}

/// Default ceiling on the effective shelf count explored by [`mixing_time`].
pub const DEFAULT_MAX_SHELVES: u64 = 1_000_000_000_000;

/// Least number of passes after which the exact TV is at most `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingTime {
    pub repeats: u32,
    /// Shelf count of the composed shuffle; `None` for zero passes.
    pub effective_shelves: Option<u64>,
    /// The exact TV at `repeats` passes.
    pub witness_tv: BigRat,
}

pub fn mixing_time(n: usize, m: u64, eps: f64, max_shelves: u64) -> Result<MixingTime> {
    check_deck_size(n)?;
    if m == 0 {
        return Err(Error::ZeroShelves);
    }
    if !eps.is_finite() || eps <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive and finite, got {eps}"
        )));
    }
    // Zero passes leave the deck at the identity: TV = 1 - 1/n!.
    let unshuffled = BigRat::one() - BigRat::one() / uint_to_rat(&factorial(n as u64));
    if rat_le_f64(&unshuffled, eps) {
        return Ok(MixingTime {
            repeats: 0,
            effective_shelves: None,
            witness_tv: unshuffled,
        });
    }
    let vt = ValleyTable::new(n)?;
    let mut repeats = 1u32;
    loop {
        let shelves = effective_shelves(&ShuffleSpec::new(n, m, repeats))?;
        let shelves = shelves
            .to_u64()
            .filter(|&s| s <= max_shelves)
            .ok_or(Error::ShelfBoundExceeded { bound: max_shelves })?;
        let report = tv_exact_with(&vt, shelves)?;
        if rat_le_f64(&report.tv_exact, eps) {
            return Ok(MixingTime {
                repeats,
                effective_shelves: Some(shelves),
                witness_tv: report.tv_exact,
            });
        }
        repeats += 1;
    }
}

/// Exact comparison `x <= eps` with `eps` taken at its binary value.
fn rat_le_f64(x: &BigRat, eps: f64) -> bool {
    match BigRat::from_float(eps) {
        Some(e) => *x <= e,
        None => false,
    }
}

impl TVReport {
    pub fn tv_exact_f64(&self) -> f64 {
        crate::exactnum::rat_to_f64(&self.tv_exact)
    }

    pub fn is_zero(&self) -> bool {
        self.tv_exact.is_zero()
    }
}

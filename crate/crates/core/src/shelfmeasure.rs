//! The m-shelf shuffle measure projected onto the valley statistic.
//!
//! An m-shelf shuffle of n cards gives every permutation with k valleys the
//! same probability
//!
//! ```text
//! q(n, m, k) = sum_{r=k+1}^{n-k} C(m+n-r, n) / m^n * C(n-1-2k, r-1-k) / 2^(n-1-2k)
//! ```
//!
//! Multiplying through by `m^n 2^(n-1)` leaves an integer numerator
//! `sum_r C(m+n-r, n) C(n-1-2k, r-1-k) 4^k`, which is what [`QTable`] keeps.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{binom, uint_to_rat, BigRat};
use crate::permstat::{check_deck_size, max_valleys, ValleyTable};

fn check_shelves(m: u64) -> Result<()> {
    if m == 0 {
        return Err(Error::ZeroShelves);
    }
    Ok(())
}

/// `m^n 2^(n-1)`, the common denominator of every `q(n, m, k)`.
fn common_denominator(n: usize, m: u64) -> BigUint {
    num_traits::pow(BigUint::from(m), n) << (n - 1)
}

fn scaled_numerator(n: usize, m: u64, k: usize) -> BigUint {
    let n64 = n as u64;
    let width = (n - 1 - 2 * k) as u64;
    let mut acc = BigUint::zero();
    for r in (k + 1)..=(n - k) {
        let r64 = r as u64;
        acc += binom(m + n64 - r64, n as i64) * binom(width, (r - 1 - k) as i64);
    }
    acc << (2 * k)
}

/// Probability that an m-shelf shuffle of `n` cards yields one particular
/// permutation with `k` valleys.
pub fn q_value(n: usize, m: u64, k: i64) -> Result<BigRat> {
    check_deck_size(n)?;
    check_shelves(m)?;
    let top = max_valleys(n);
    if k < 0 || k as usize > top {
        return Err(Error::ValleyIndexOutOfRange { k, max: top });
    }
    let num = scaled_numerator(n, m, k as usize);
    Ok(uint_to_rat(&num) / uint_to_rat(&common_denominator(n, m)))
}

/// All `q(n, m, k)` for `k = 0..=max_valleys(n)`, checked for normalization
/// and monotonicity on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QTable {
    n: usize,
    m: u64,
    scaled: Vec<BigUint>,
    denominator: BigUint,
}

impl QTable {
    pub fn new(valleys: &ValleyTable, m: u64) -> Result<Self> {
        check_shelves(m)?;
        let n = valleys.n();
        let scaled: Vec<BigUint> = (0..=max_valleys(n))
            .map(|k| scaled_numerator(n, m, k))
            .collect();
        let denominator = common_denominator(n, m);

        let mass: BigUint = scaled
            .iter()
            .zip(valleys.counts())
            .map(|(a, c)| a * c)
            .sum();
        if mass != denominator {
            return Err(Error::InvariantViolation(format!(
                "q({n}, {m}, .) weighted by valley counts sums to {mass}/{denominator}, not 1"
            )));
        }
        if let Some(k) = scaled.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvariantViolation(format!(
                "q({n}, {m}, k) increases from k = {k} to k = {}",
                k + 1
            )));
        }
        if scaled[0].is_zero() {
            return Err(Error::InvariantViolation(format!("q({n}, {m}, 0) is zero")));
        }
        Ok(Self {
            n,
            m,
            scaled,
            denominator,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn len(&self) -> usize {
        self.scaled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.is_empty()
    }

    pub fn get(&self, k: usize) -> BigRat {
        uint_to_rat(&self.scaled[k]) / uint_to_rat(&self.denominator)
    }

    pub fn values(&self) -> Vec<BigRat> {
        (0..self.len()).map(|k| self.get(k)).collect()
    }

    /// Consecutive ratios `(k, q(k) / q(k - 1))` for every `k` in
    /// `1..=max_valleys` with `q(k - 1) > 0`.
    ///
    /// `q(k)` vanishes exactly when `k >= m` (no term of the sum survives), so
    /// for `m <= max_valleys` the ratio at `k = m` is zero and the ones above
    /// it are undefined and skipped.
    pub fn ratios(&self) -> Vec<(usize, BigRat)> {
        self.scaled
            .windows(2)
            .enumerate()
            .filter(|(_, w)| !w[0].is_zero())
            .map(|(i, w)| {
                (
                    i + 1,
                    BigRat::new(BigInt::from(w[1].clone()), BigInt::from(w[0].clone())),
                )
            })
            .collect()
    }
}

pub fn q_table(n: usize, m: u64) -> Result<QTable> {
    let valleys = ValleyTable::new(n)?;
    QTable::new(&valleys, m)
}

/// `P(V_{n,m} = k) = n! q(n, m, k) P(V_n = k) = q(n, m, k) * #{k valleys}`.
pub fn shuffle_valley_pmf(qt: &QTable, vt: &ValleyTable) -> Result<Vec<BigRat>> {
    if qt.n() != vt.n() {
        return Err(Error::DimensionMismatch {
            left: qt.n(),
            right: vt.n(),
        });
    }
    let pmf: Vec<BigRat> = (0..qt.len())
        .map(|k| qt.get(k) * uint_to_rat(&vt.counts()[k]))
        .collect();
    let total: BigRat = pmf.iter().sum();
    if !total.is_one() {
        return Err(Error::InvariantViolation(format!(
            "shuffle valley pmf sums to {total}"
        )));
    }
    Ok(pmf)
}

/// Extreme consecutive ratios of the q-table and where they occur.
///
/// `delta_minus` is zero when `m <= max_valleys(n)`, since the valley classes
/// `k >= m` are then unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TiltBounds {
    pub delta_minus: BigRat,
    pub delta_plus: BigRat,
    /// Valley count `k` with `q(k) / q(k - 1) = delta_minus`.
    pub argmin_k: usize,
    /// Valley count `k` with `q(k) / q(k - 1) = delta_plus`.
    pub argmax_k: usize,
}

pub fn tilt_bounds(qt: &QTable) -> Result<TiltBounds> {
    let ratios = qt.ratios();
    if ratios.is_empty() {
        return Err(Error::NoTiltRatios { n: qt.n() });
    }
    let mut lo = &ratios[0];
    let mut hi = &ratios[0];
    for r in &ratios {
        if r.1 < lo.1 {
            lo = r;
        }
        if r.1 > hi.1 {
            hi = r;
        }
    }
    Ok(TiltBounds {
        delta_minus: lo.1.clone(),
        delta_plus: hi.1.clone(),
        argmin_k: lo.0,
        argmax_k: hi.0,
    })
}

/// The uniform valley law reweighted by a geometric factor: `pmf(k)` is
/// proportional to `ratio^k * #{k valleys}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TiltedDist {
    base: ValleyTable,
    ratio: BigRat,
    pmf: Vec<BigRat>,
}

impl TiltedDist {
    pub fn new(base: &ValleyTable, ratio: BigRat) -> Result<Self> {
        if ratio <= BigRat::zero() {
            return Err(Error::InvalidArgument(format!(
                "tilt ratio must be positive, got {ratio}"
            )));
        }
        let mut factor = BigRat::one();
        let mut weights = Vec::with_capacity(base.counts().len());
        for c in base.counts() {
            weights.push(&factor * uint_to_rat(c));
            factor *= &ratio;
        }
        let z: BigRat = weights.iter().sum();
        let pmf = weights.into_iter().map(|w| w / &z).collect();
        Ok(Self {
            base: base.clone(),
            ratio,
            pmf,
        })
    }

    pub fn base(&self) -> &ValleyTable {
        &self.base
    }

    pub fn ratio(&self) -> &BigRat {
        &self.ratio
    }

    pub fn pmf(&self) -> &[BigRat] {
        &self.pmf
    }

    pub fn cdf(&self) -> Vec<BigRat> {
        cumulative(&self.pmf)
    }

    pub fn mean(&self) -> BigRat {
        crate::permstat::pmf_mean(&self.pmf)
    }
}

pub fn tilted_dist(vt: &ValleyTable, ratio: BigRat) -> Result<TiltedDist> {
    TiltedDist::new(vt, ratio)
}

pub(crate) fn cumulative(pmf: &[BigRat]) -> Vec<BigRat> {
    pmf.iter()
        .scan(BigRat::zero(), |acc, p| {
            *acc += p;
            Some(acc.clone())
        })
        .collect()
}

/// Which side of `F_{V+} <= F_{V_{n,m}} <= F_{V-}` failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `F_{V+}(k) <= F_{V_{n,m}}(k)`
    Upper,
    /// `F_{V_{n,m}}(k) <= F_{V-}(k)`
    Lower,
}

/// Outcome of the CDF sandwich check, with slack extremes on each side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominationReport {
    pub n: usize,
    pub m: u64,
    /// min / max over k of `F_{V_{n,m}}(k) - F_{V+}(k)`.
    pub upper_slack: (BigRat, BigRat),
    /// min / max over k of `F_{V-}(k) - F_{V_{n,m}}(k)`.
    pub lower_slack: (BigRat, BigRat),
    pub violation: Option<(Side, usize)>,
}

impl DominationReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Compares three pmfs on the same support: `dominant` (the tilt by delta+),
/// `middle` (the shuffle law) and `dominated` (the tilt by delta-).
pub fn sandwich_report(
    n: usize,
    m: u64,
    dominant: &[BigRat],
    middle: &[BigRat],
    dominated: &[BigRat],
) -> DominationReport {
    let f_plus = cumulative(dominant);
    let f_mid = cumulative(middle);
    let f_minus = cumulative(dominated);
    let mut violation = None;
    let mut upper: Option<(BigRat, BigRat)> = None;
    let mut lower: Option<(BigRat, BigRat)> = None;
    for k in 0..f_mid.len() {
        let up = &f_mid[k] - &f_plus[k];
        let low = &f_minus[k] - &f_mid[k];
        if violation.is_none() {
            if up < BigRat::zero() {
                violation = Some((Side::Upper, k));
            } else if low < BigRat::zero() {
                violation = Some((Side::Lower, k));
            }
        }
        widen(&mut upper, up);
        widen(&mut lower, low);
    }
    DominationReport {
        n,
        m,
        upper_slack: upper.unwrap_or_default(),
        lower_slack: lower.unwrap_or_default(),
        violation,
    }
}

fn widen(range: &mut Option<(BigRat, BigRat)>, v: BigRat) {
    match range {
        None => *range = Some((v.clone(), v)),
        Some((lo, hi)) => {
            if v < *lo {
                *lo = v.clone();
            }
            if v > *hi {
                *hi = v;
            }
        }
    }
}

/// Exact check of `F_{V+}(k) <= F_{V_{n,m}}(k) <= F_{V-}(k)` at every k.
pub fn domination_check(n: usize, m: u64) -> Result<DominationReport> {
    if n < 3 {
        return Err(Error::NoTiltRatios { n });
    }
    let vt = ValleyTable::new(n)?;
    let qt = QTable::new(&vt, m)?;
    let bounds = tilt_bounds(&qt)?;
    let middle = shuffle_valley_pmf(&qt, &vt)?;
    let plus = tilt_or_point_mass(&vt, &bounds.delta_plus)?;
    let minus = tilt_or_point_mass(&vt, &bounds.delta_minus)?;
    Ok(sandwich_report(n, m, &plus, &middle, &minus))
}

/// Tilted pmf; a zero ratio is the limit that puts all mass on k = 0.
fn tilt_or_point_mass(vt: &ValleyTable, ratio: &BigRat) -> Result<Vec<BigRat>> {
    if ratio.is_zero() {
        let mut point = vec![BigRat::zero(); vt.counts().len()];
        point[0] = BigRat::one();
        return Ok(point);
    }
    Ok(TiltedDist::new(vt, ratio.clone())?.pmf().to_vec())
}

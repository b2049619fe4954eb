//! The valley statistic of a uniformly random permutation.
//!
//! A valley of `p = (p_1, ..., p_n)` is an interior index `j` with
//! `p_{j-1} > p_j < p_{j+1}`. The number of valleys ranges over
//! `0..=max_valleys(n)` with `max_valleys(n) = floor((n - 1) / 2)`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{factorial, int, normal_cdf, rat_to_f64, uint_to_rat, BigRat};

/// Largest deck size for which valley tables are built.
pub const MAX_DECK_SIZE: usize = 64;

/// `floor((n - 1) / 2)`, the largest possible valley count.
pub fn max_valleys(n: usize) -> usize {
    n.saturating_sub(1) / 2
}

pub(crate) fn check_deck_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DECK_SIZE {
        return Err(Error::DeckSizeOutOfRange {
            n,
            max: MAX_DECK_SIZE,
        });
    }
    Ok(())
}

/// A permutation of `1..=n` in one-line notation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidPermutation("empty".into()));
        }
        let n = entries.len();
        let mut seen = vec![false; n];
        for &v in &entries {
            if v == 0 || v > n {
                return Err(Error::InvalidPermutation(format!(
                    "entry {v} outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::InvalidPermutation(format!("entry {v} repeated")));
            }
        }
        Ok(Self(entries))
    }

    /// Caller guarantees `entries` is a bijection on `1..=len`.
    pub(crate) fn from_entries_unchecked(entries: Vec<usize>) -> Self {
        debug_assert!(Self::new(entries.clone()).is_ok());
        Self(entries)
    }

    pub fn identity(n: usize) -> Self {
        Self((1..=n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Self(inv)
    }

    /// The composite `i -> self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(
            self.len(),
            other.len(),
            "composing permutations of different sizes"
        );
        Self(other.0.iter().map(|&i| self.0[i - 1]).collect())
    }

    pub fn valleys(&self) -> usize {
        count_valley_positions(&self.0)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

fn count_valley_positions(p: &[usize]) -> usize {
    p.windows(3).filter(|w| w[0] > w[1] && w[1] < w[2]).count()
}

pub fn count_valleys(p: &Permutation) -> usize {
    p.valleys()
}

/// Exact counts of `n`-permutations by number of valleys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValleyTable {
    n: usize,
    counts: Vec<BigUint>,
}

impl ValleyTable {
    /// Builds the table by inserting a new smallest value into every
    /// permutation of length `len - 1`: the `2k + 2` slots beside an existing
    /// valley or at either end keep the count at `k`, every other slot adds a
    /// valley. Hence `T(len, k) = (2k + 2) T(len - 1, k) + (len - 2k) T(len - 1, k - 1)`.
    pub fn new(n: usize) -> Result<Self> {
        check_deck_size(n)?;
        let mut row = vec![BigUint::from(1u32)];
        for len in 2..=n {
            let top = max_valleys(len);
            let next: Vec<BigUint> = (0..=top)
                .map(|k| {
                    let mut v = BigUint::zero();
                    if let Some(keep) = row.get(k) {
                        v += keep * BigUint::from(2 * k + 2);
                    }
                    if k >= 1 {
                        if let Some(add) = row.get(k - 1) {
                            v += add * BigUint::from(len - 2 * k);
                        }
                    }
                    v
                })
                .collect();
            row = next;
        }
        Ok(Self { n, counts: row })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn max_valleys(&self) -> usize {
        self.counts.len() - 1
    }

    /// `n!`, the sum of all counts.
    pub fn total(&self) -> BigUint {
        factorial(self.n as u64)
    }

    /// `P(V_n = k)` under the uniform measure.
    pub fn pmf(&self) -> Vec<BigRat> {
        let total = uint_to_rat(&self.total());
        self.counts
            .iter()
            .map(|c| uint_to_rat(c) / &total)
            .collect()
    }

    /// `P(V_n <= k)`; 0 below the support, 1 from `max_valleys` on.
    pub fn cdf(&self, k: i64) -> BigRat {
        if k < 0 {
            return BigRat::zero();
        }
        let upto = (k as usize).min(self.max_valleys());
        let below: BigUint = self.counts[..=upto].iter().sum();
        uint_to_rat(&below) / uint_to_rat(&self.total())
    }

    /// Mean and variance computed from the counts themselves.
    pub fn moments(&self) -> MomentPair {
        let total = uint_to_rat(&self.total());
        let (s1, s2) = self.counts.iter().enumerate().fold(
            (BigUint::zero(), BigUint::zero()),
            |(s1, s2), (k, c)| {
                let k = BigUint::from(k);
                (s1 + c * &k, s2 + c * &k * &k)
            },
        );
        let mean = uint_to_rat(&s1) / &total;
        let variance = uint_to_rat(&s2) / &total - &mean * &mean;
        MomentPair { mean, variance }
    }
}

pub fn valley_table(n: usize) -> Result<ValleyTable> {
    ValleyTable::new(n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentPair {
    pub mean: BigRat,
    pub variance: BigRat,
}

/// Closed forms `((n - 2) / 3, (2n + 2) / 45)`.
///
/// At `n = 2` these give variance 2/15 although `V_2` is identically zero;
/// [`ValleyTable::moments`] returns the table values instead.
pub fn uniform_moments(n: usize) -> Result<MomentPair> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "closed-form valley moments need n >= 2, got {n}"
        )));
    }
    let n = BigInt::from(n);
    Ok(MomentPair {
        mean: BigRat::new(&n - 2, BigInt::from(3)),
        variance: BigRat::new(2 * &n + 2, BigInt::from(45)),
    })
}

/// Mean and variance of the exponential tilt of `V_n` by `theta`, i.e. the
/// first two derivatives of the cumulant generating function
/// `K_n(theta) = log E[exp(theta V_n)]`.
pub fn cgf_moments(table: &ValleyTable, theta: f64) -> Result<(f64, f64)> {
    if !theta.is_finite() {
        return Err(Error::NonFinite(format!("theta = {theta}")));
    }
    let log_weights: Vec<f64> = table
        .counts()
        .iter()
        .enumerate()
        .map(|(k, c)| ln_biguint(c) + theta * k as f64)
        .collect();
    let top = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    let mean = weights
        .iter()
        .enumerate()
        .map(|(k, w)| k as f64 * w)
        .sum::<f64>()
        / z;
    let variance = weights
        .iter()
        .enumerate()
        .map(|(k, w)| (k as f64 - mean).powi(2) * w)
        .sum::<f64>()
        / z;
    Ok((mean, variance))
}

fn ln_biguint(v: &BigUint) -> f64 {
    match v.to_f64() {
        Some(x) if x.is_finite() && x > 0.0 => x.ln(),
        _ if v.is_zero() => f64::NEG_INFINITY,
        _ => {
            // Beyond f64 range: drop low bits and add them back as a log term.
            let shift = v.bits().saturating_sub(1000);
            let head = (v >> shift).to_f64().unwrap_or(f64::MAX);
            head.ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

/// Exact `P(V_n <= k)`.
pub fn uniform_cdf(table: &ValleyTable, k: i64) -> BigRat {
    table.cdf(k)
}

/// `sup_k |P(V_n <= k) - Phi((k - mu_n) / sigma_n)|` over the support.
pub fn clt_error(table: &ValleyTable) -> Result<f64> {
    let n = table.n();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "normal approximation needs n >= 3, got {n}"
        )));
    }
    let moments = uniform_moments(n)?;
    let mu = rat_to_f64(&moments.mean);
    let sigma = rat_to_f64(&moments.variance).sqrt();
    let total = uint_to_rat(&table.total());
    let mut below = BigUint::zero();
    let mut worst = 0.0_f64;
    for (k, c) in table.counts().iter().enumerate() {
        below += c;
        let exact = rat_to_f64(&(uint_to_rat(&below) / &total));
        let approx = normal_cdf((k as f64 - mu) / sigma);
        worst = worst.max((exact - approx).abs());
    }
    Ok(worst)
}

/// Exact mean of the valley count under a finite pmf indexed by `k`.
pub(crate) fn pmf_mean(pmf: &[BigRat]) -> BigRat {
    pmf.iter()
        .enumerate()
        .fold(BigRat::zero(), |acc, (k, p)| acc + p * int(k as u64))
}

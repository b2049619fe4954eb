//! Independent routes to the shelf shuffle measure: a seeded sampler of the
//! inverse shelf shuffle and an exact enumeration of the same procedure.
//!
//! The inverse shuffle cuts the deck into `2m` packets with symmetric
//! multinomial sizes, reverses packets 2, 4, 6, ... (counted from the top,
//! starting at 1), and riffles the packets together by dropping cards with
//! probability proportional to packet size. The inverse of the resulting
//! arrangement is a draw from the m-shelf shuffle measure.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exactnum::{factorial, uint_to_rat, BigRat};
use crate::permstat::{check_deck_size, max_valleys, Permutation, ValleyTable};

/// Default cap on `(2m)^n`, the number of weighted terms in an enumeration.
pub const DEFAULT_ENUM_BUDGET: u64 = 10_000_000;

/// Samples per RNG stream. Sample `i` is drawn from stream `i / SAMPLE_BLOCK`
/// of `ChaCha8Rng::seed_from_u64(seed)`, in order within the block.
pub const SAMPLE_BLOCK: u64 = 4096;

/// Minimum sample count accepted by [`empirical_tv`].
pub const MIN_TV_SAMPLES: u64 = 1000;

/// Packet sizes of a symmetric multinomial cut into `2m` packets.
pub fn cut_sizes<R: Rng + ?Sized>(n: usize, m: u64, rng: &mut R) -> Vec<usize> {
    let packets = packet_count(m);
    let mut sizes = vec![0usize; packets];
    for _ in 0..n {
        sizes[rng.random_range(0..packets)] += 1;
    }
    sizes
}

fn packet_count(m: u64) -> usize {
    assert!(m >= 1, "shelf count must be at least 1");
    usize::try_from(2 * m).expect("packet count fits in usize")
}

/// One draw from the m-shelf shuffle measure on `n` cards.
///
/// Panics if `n == 0` or `m == 0`.
pub fn inverse_shuffle_sample<R: Rng + ?Sized>(n: usize, m: u64, rng: &mut R) -> Permutation {
    assert!(n >= 1, "deck must hold at least one card");
    let packets = packet_count(m) as u64;

    // Sorting the packet labels of n uniform draws gives the cut: card c
    // (top = 1) goes to packet labels[c - 1].
    let mut labels: Vec<u64> = (0..n).map(|_| rng.random_range(0..packets)).collect();
    labels.sort_unstable();

    // For every card position, where its packet's next card comes from.
    // Packets with even 1-based index (odd 0-based label) deal bottom-up.
    let mut cursor: Vec<(usize, bool)> = Vec::with_capacity(n);
    let mut pool: Vec<usize> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let label = labels[start];
        let end = start + labels[start..].iter().take_while(|&&l| l == label).count();
        let reversed = label % 2 == 1;
        let slot = cursor.len();
        cursor.push(if reversed {
            (end, true)
        } else {
            (start + 1, false)
        });
        pool.extend(std::iter::repeat_n(slot, end - start));
        start = end;
    }

    // GSR drop: the next card comes from a packet chosen with probability
    // proportional to the cards it still holds.
    let mut arrangement = Vec::with_capacity(n);
    while !pool.is_empty() {
        let slot = pool.swap_remove(rng.random_range(0..pool.len()));
        let (next, reversed) = &mut cursor[slot];
        arrangement.push(*next);
        if *reversed {
            *next -= 1;
        } else {
            *next += 1;
        }
    }
    Permutation::from_entries_unchecked(arrangement).inverse()
}

/// Exact distribution over permutations of `n` cards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermDist {
    n: usize,
    probs: BTreeMap<Permutation, BigRat>,
}

impl PermDist {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &BTreeMap<Permutation, BigRat> {
        &self.probs
    }

    pub fn prob(&self, p: &Permutation) -> BigRat {
        self.probs.get(p).cloned().unwrap_or_else(BigRat::zero)
    }

    pub fn total(&self) -> BigRat {
        self.probs.values().sum()
    }

    /// Probability mass of each valley class.
    pub fn by_valleys(&self) -> Vec<BigRat> {
        let mut out = vec![BigRat::zero(); max_valleys(self.n) + 1];
        for (p, w) in &self.probs {
            out[p.valleys()] += w;
        }
        out
    }

    /// First pair of permutations with equal valley counts but different
    /// probabilities, scanning all of S_n (absent permutations count as 0).
    pub fn valley_class_counterexample(&self) -> Option<(Permutation, Permutation)> {
        let mut first: Vec<Option<(Permutation, BigRat)>> = vec![None; max_valleys(self.n) + 1];
        for p in all_permutations(self.n) {
            let w = self.prob(&p);
            let k = p.valleys();
            match &first[k] {
                None => first[k] = Some((p, w)),
                Some((q, v)) if *v != w => return Some((q.clone(), p)),
                Some(_) => {}
            }
        }
        None
    }

    /// Law of `second(first(.))`: `self` is applied first, then `other`.
    pub fn then(&self, other: &PermDist) -> PermDist {
        assert_eq!(self.n, other.n, "convolving measures on different decks");
        let mut probs = BTreeMap::new();
        for (a, pa) in &self.probs {
            for (b, pb) in &other.probs {
                *probs.entry(b.compose(a)).or_insert_with(BigRat::zero) += pa * pb;
            }
        }
        PermDist { n: self.n, probs }
    }
}

fn all_permutations(n: usize) -> Vec<Permutation> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Permutation>) {
        let n = used.len();
        if prefix.len() == n {
            out.push(Permutation::from_entries_unchecked(prefix.clone()));
            return;
        }
        for v in 1..=n {
            if !used[v - 1] {
                used[v - 1] = true;
                prefix.push(v);
                extend(prefix, used, out);
                prefix.pop();
                used[v - 1] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

fn enumeration_work(n: usize, m: u64) -> u128 {
    u128::from(2 * m).checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// Exact law of the m-shelf shuffle, summing over every packet-size
/// composition (multinomial weight `n! / (prod s_i! (2m)^n)`) and every
/// interleaving of the packets (GSR weight `prod s_i! / n!`).
pub fn enumerate_exact(n: usize, m: u64, budget: u64) -> Result<PermDist> {
    check_deck_size(n)?;
    if m == 0 {
        return Err(Error::ZeroShelves);
    }
    let needed = enumeration_work(n, m);
    if needed > u128::from(budget) {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let packets = packet_count(m);
    let n_fact = factorial(n as u64);
    let cut_den = uint_to_rat(&num_traits::pow(BigUint::from(packets), n));

    let mut probs: BTreeMap<Permutation, BigRat> = BTreeMap::new();
    let mut sizes = vec![0usize; packets];
    for_each_composition(n, &mut sizes, 0, &mut |sizes| {
        let size_fact: BigUint = sizes.iter().map(|&s| factorial(s as u64)).product();
        let cut = uint_to_rat(&n_fact) / uint_to_rat(&size_fact) / &cut_den;
        let riffle = uint_to_rat(&size_fact) / uint_to_rat(&n_fact);
        let weight = cut * riffle;

        let mut decks: Vec<Vec<usize>> = Vec::with_capacity(packets);
        let mut next_card = 1;
        for (i, &s) in sizes.iter().enumerate() {
            let mut packet: Vec<usize> = (next_card..next_card + s).collect();
            if i % 2 == 1 {
                packet.reverse();
            }
            next_card += s;
            decks.push(packet);
        }
        let mut taken = vec![0usize; packets];
        let mut arrangement = Vec::with_capacity(n);
        for_each_interleaving(&decks, &mut taken, &mut arrangement, &mut |arr| {
            let p = Permutation::from_entries_unchecked(arr.to_vec()).inverse();
            *probs.entry(p).or_insert_with(BigRat::zero) += &weight;
        });
    });
    let dist = PermDist { n, probs };
    if !dist.total().is_one() {
        return Err(Error::InvariantViolation(format!(
            "enumerated measure for n={n}, m={m} sums to {}",
            dist.total()
        )));
    }
    Ok(dist)
}

fn for_each_composition(
    remaining: usize,
    sizes: &mut [usize],
    i: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if i + 1 == sizes.len() {
        sizes[i] = remaining;
        f(sizes);
        return;
    }
    for s in 0..=remaining {
        sizes[i] = s;
        for_each_composition(remaining - s, sizes, i + 1, f);
    }
}

fn for_each_interleaving(
    decks: &[Vec<usize>],
    taken: &mut [usize],
    arrangement: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]),
) {
    let mut any = false;
    for d in 0..decks.len() {
        if taken[d] < decks[d].len() {
            any = true;
            arrangement.push(decks[d][taken[d]]);
            taken[d] += 1;
            for_each_interleaving(decks, taken, arrangement, f);
            taken[d] -= 1;
            arrangement.pop();
        }
    }
    if !any {
        f(arrangement);
    }
}

/// Result of comparing an m1-pass followed by an m2-pass against a single
/// `2 m1 m2`-shelf pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompositionReport {
    pub n: usize,
    pub m1: u64,
    pub m2: u64,
    pub combined_shelves: u64,
    /// First permutation whose probabilities differ: (perm, convolved, direct).
    pub mismatch: Option<(Permutation, BigRat, BigRat)>,
}

impl CompositionReport {
    pub fn holds(&self) -> bool {
        self.mismatch.is_none()
    }
}

pub fn composition_check(n: usize, m1: u64, m2: u64, budget: u64) -> Result<CompositionReport> {
    let combined_shelves = 2 * m1 * m2;
    let first = enumerate_exact(n, m1, budget)?;
    let second = enumerate_exact(n, m2, budget)?;
    let direct = enumerate_exact(n, combined_shelves, budget)?;
    let convolved = first.then(&second);
    let mismatch = all_permutations(n).into_iter().find_map(|p| {
        let a = convolved.prob(&p);
        let b = direct.prob(&p);
        (a != b).then_some((p, a, b))
    });
    Ok(CompositionReport {
        n,
        m1,
        m2,
        combined_shelves,
        mismatch,
    })
}

/// Valley histogram of a seeded batch of shuffles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRun {
    pub n: usize,
    pub m: u64,
    pub seed: u64,
    pub samples: u64,
    pub valley_histogram: Vec<u64>,
}

impl SampleRun {
    /// Half-l1 distance between the empirical valley frequencies and the
    /// exact uniform valley pmf.
    pub fn tv_against_uniform(&self, uniform: &ValleyTable) -> f64 {
        let total = uniform
            .total()
            .to_f64()
            .expect("n! fits in f64 for n <= 64");
        let samples = self.samples as f64;
        0.5 * self
            .valley_histogram
            .iter()
            .zip(uniform.counts())
            .map(|(&h, c)| (h as f64 / samples - c.to_f64().unwrap_or(f64::MAX) / total).abs())
            .sum::<f64>()
    }
}

fn block_histogram(n: usize, m: u64, seed: u64, block: u64, count: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut hist = vec![0u64; max_valleys(n) + 1];
    for _ in 0..count {
        hist[inverse_shuffle_sample(n, m, &mut rng).valleys()] += 1;
    }
    hist
}

fn merge(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Draws `samples` shuffles and tallies their valley counts. The result
/// depends only on `(n, m, samples, seed)`, not on thread scheduling.
pub fn sample_valleys(n: usize, m: u64, samples: u64, seed: u64) -> Result<SampleRun> {
    check_deck_size(n)?;
    if m == 0 {
        return Err(Error::ZeroShelves);
    }
    let blocks = samples.div_ceil(SAMPLE_BLOCK);
    let block_len = |b: u64| SAMPLE_BLOCK.min(samples - b * SAMPLE_BLOCK);
    let empty = vec![0u64; max_valleys(n) + 1];

    #[cfg(feature = "parallel")]
    let valley_histogram = {
        use rayon::prelude::*;
        (0..blocks)
            .into_par_iter()
            .map(|b| block_histogram(n, m, seed, b, block_len(b)))
            .reduce(|| empty.clone(), merge)
    };
    #[cfg(not(feature = "parallel"))]
    let valley_histogram = (0..blocks)
        .map(|b| block_histogram(n, m, seed, b, block_len(b)))
        .fold(empty, merge);

    Ok(SampleRun {
        n,
        m,
        seed,
        samples,
        valley_histogram,
    })
}

/// Monte Carlo estimate of the exact TV through the valley statistic.
///
/// The plug-in estimator carries `O(1/sqrt(samples))` noise; the documented
/// budget is `|estimate - exact| <= 5 sqrt(max_valleys(n) / samples)` with
/// probability at least 0.99.
pub fn empirical_tv(n: usize, m: u64, samples: u64, seed: u64) -> Result<f64> {
    if samples < MIN_TV_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "empirical TV needs at least {MIN_TV_SAMPLES} samples, got {samples}"
        )));
    }
    let run = sample_valleys(n, m, samples, seed)?;
    Ok(run.tv_against_uniform(&ValleyTable::new(n)?))
}

/// `5 sqrt(max_valleys(n) / samples)`.
pub fn empirical_tv_budget(n: usize, samples: u64) -> f64 {
    5.0 * (max_valleys(n) as f64 / samples as f64).sqrt()
}

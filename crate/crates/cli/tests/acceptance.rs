//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use shelfmix_core::exactnum::{rat_to_decimal, rat_to_f64, BigRat};
use shelfmix_core::permstat::{cgf_moments, uniform_moments};
use shelfmix_core::shelfmeasure::{domination_check, q_table, shuffle_valley_pmf, tilt_bounds};
use shelfmix_core::simulator::{composition_check, enumerate_exact, DEFAULT_ENUM_BUDGET};
use shelfmix_core::tvmetrics::{mixing_time, tv_asymptotic, tv_exact, DEFAULT_MAX_SHELVES};
use shelfmix_core::ValleyTable;

const FIGURE_M: [u64; 10] = [1, 10, 11, 15, 20, 26, 52, 100, 200, 300];
const FIGURE_EXACT: [&str; 10] = [
    "1.00000", "1.00000", "0.99998", "0.94267", "0.72009", "0.50949", "0.14721", "0.04093",
    "0.01028", "0.00457",
];
const ASYMPTOTIC: [(u64, f64); 6] = [
    (15, 0.97761),
    (20, 0.80107),
    (26, 0.55282),
    (52, 0.15071),
    (100, 0.04098),
    (300, 0.00456),
];

/// `max n |log delta + 1/(4 c^2 sqrt n)|` over both ratios at n = 16.
const RATIO_CONSTANT: f64 = 0.119_351;
/// `max |E[V] - mu_n + sqrt(n)/(90 c^2)|` over both tilts at n = 16.
const SHIFT_CONSTANT: f64 = 0.002_806;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn dual_grid() -> Vec<(usize, u64)> {
    let mut grid: Vec<(usize, u64)> = FIGURE_M.iter().map(|&m| (52, m)).collect();
    for n in [5, 10, 20, 33] {
        for m in [2, 7, 50] {
            grid.push((n, m));
        }
    }
    grid
}

fn figure_exact() -> Outcome {
    let start = Instant::now();
    let mut wrong = Vec::new();
    for (m, want) in FIGURE_M.iter().zip(FIGURE_EXACT) {
        let got = tv_exact(52, *m).unwrap().tv_exact_decimal;
        if got != want {
            wrong.push(format!("m={m}: {got} vs {want}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if wrong.is_empty() {
        outcome(true, format!("10 points match, {secs:.2} s"))
    } else {
        outcome(false, wrong.join("; "))
    }
}

fn figure_asymptotic() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut wrong = Vec::new();
    for (m, want) in ASYMPTOTIC {
        let got = tv_asymptotic(52, m).unwrap();
        worst = worst.max((got - want).abs());
        let shown = rat_to_decimal(&BigRat::from_float(got).unwrap(), 5);
        if (got - want).abs() > 2e-5 || shown != format!("{want:.5}") {
            wrong.push(format!("m={m}: {got:.7} vs {want}"));
        }
    }
    if wrong.is_empty() {
        outcome(true, format!("6 points, max |error| {worst:.2e}"))
    } else {
        outcome(false, wrong.join("; "))
    }
}

fn oracle_equivalence() -> Outcome {
    for n in 1..=6 {
        let vt = ValleyTable::new(n).unwrap();
        for m in 1..=3 {
            let dist = enumerate_exact(n, m, DEFAULT_ENUM_BUDGET).unwrap();
            let formula = shuffle_valley_pmf(&q_table(n, m).unwrap(), &vt).unwrap();
            if dist.by_valleys() != formula {
                return outcome(false, format!("valley law differs at n={n}, m={m}"));
            }
            if let Some((a, b)) = dist.valley_class_counterexample() {
                return outcome(false, format!("n={n}, m={m}: {a} and {b} differ"));
            }
        }
    }
    outcome(true, "18 (n, m) pairs, exact")
}

fn composition() -> Outcome {
    for (n, m1, m2) in [(4, 1, 1), (5, 1, 1), (5, 1, 2), (6, 1, 1)] {
        let r = composition_check(n, m1, m2, DEFAULT_ENUM_BUDGET).unwrap();
        if let Some((p, a, b)) = r.mismatch {
            return outcome(false, format!("({n},{m1},{m2}) at {p}: {a} vs {b}"));
        }
    }
    outcome(true, "4 triples, exact")
}

fn dual_form() -> Outcome {
    for (n, m) in dual_grid() {
        let vt = ValleyTable::new(n).unwrap();
        let shuffled = shuffle_valley_pmf(&q_table(n, m).unwrap(), &vt).unwrap();
        let uniform = vt.pmf();
        let two = BigRat::from_integer(2.into());
        let sum_form: BigRat = shuffled
            .iter()
            .zip(&uniform)
            .map(|(a, b)| if a > b { a - b } else { b - a })
            .sum::<BigRat>()
            / two;
        let mut fa = BigRat::from_integer(0.into());
        let mut fb = fa.clone();
        let mut max_gap = fa.clone();
        for (a, b) in shuffled.iter().zip(&uniform) {
            fa += a;
            fb += b;
            let gap = &fa - &fb;
            if gap > max_gap {
                max_gap = gap;
            }
        }
        if sum_form != max_gap || sum_form != tv_exact(n, m).unwrap().tv_exact {
            return outcome(false, format!("n={n}, m={m}: {sum_form} vs {max_gap}"));
        }
    }
    outcome(true, format!("{} (n, m) pairs, exact", dual_grid().len()))
}

fn moments() -> Outcome {
    let mut wrong = Vec::new();
    for n in 3..=64 {
        let table = ValleyTable::new(n).unwrap().moments();
        let closed = uniform_moments(n).unwrap();
        if table != closed {
            wrong.push(format!(
                "n={n}: table ({}, {}) vs closed form ({}, {})",
                table.mean, table.variance, closed.mean, closed.variance
            ));
        }
    }
    if wrong.is_empty() {
        outcome(true, "3 <= n <= 64, exact")
    } else {
        outcome(false, wrong.join("; "))
    }
}

fn domination() -> Outcome {
    for (n, m) in dual_grid() {
        let q = q_table(n, m).unwrap().values();
        if let Some(k) = (1..q.len()).find(|&k| q[k] > q[k - 1]) {
            return outcome(false, format!("q increases at n={n}, m={m}, k={k}"));
        }
        let r = domination_check(n, m).unwrap();
        if let Some((side, k)) = r.violation {
            return outcome(false, format!("n={n}, m={m}: {side:?} side fails at k={k}"));
        }
    }
    outcome(true, format!("{} (n, m) pairs, exact", dual_grid().len()))
}

/// Shelf count nearest `n^(5/4)` and the scale `c` it actually realises.
fn unit_scale(n: usize) -> (u64, f64) {
    let target = (n as f64).powf(1.25);
    let m = target.round() as u64;
    (m, m as f64 / target)
}

/// Per-n maxima over both ratios of the two deviations.
fn tilt_deviations(n: usize) -> (f64, f64) {
    let (m, c) = unit_scale(n);
    let vt = ValleyTable::new(n).unwrap();
    let b = tilt_bounds(&q_table(n, m).unwrap()).unwrap();
    let rn = (n as f64).sqrt();
    let mu = (n as f64 - 2.0) / 3.0;
    let mut ratio_dev: f64 = 0.0;
    let mut shift_dev: f64 = 0.0;
    for delta in [&b.delta_minus, &b.delta_plus] {
        let log_delta = rat_to_f64(delta).ln();
        ratio_dev = ratio_dev.max(n as f64 * (log_delta + 1.0 / (4.0 * c * c * rn)).abs());
        let (mean, _) = cgf_moments(&vt, log_delta).unwrap();
        shift_dev = shift_dev.max((mean - mu + rn / (90.0 * c * c)).abs());
    }
    (ratio_dev, shift_dev)
}

fn frozen_check(frozen: f64, pick: fn((f64, f64)) -> f64, label: &str) -> Outcome {
    let calibrated = pick(tilt_deviations(16));
    if calibrated > frozen || frozen - calibrated > 1e-5 {
        return outcome(
            false,
            format!("n=16 gives {calibrated:.7}, frozen constant is {frozen}"),
        );
    }
    let mut parts = vec![format!("C={frozen} (n=16: {calibrated:.7})")];
    let mut pass = true;
    for n in [32, 64] {
        let v = pick(tilt_deviations(n));
        let ok = v <= frozen;
        pass &= ok;
        parts.push(format!(
            "n={n}: {label}={v:.7} {}",
            if ok { "ok" } else { "exceeds C" }
        ));
    }
    outcome(pass, parts.join(", "))
}

fn ratio_check() -> Outcome {
    frozen_check(RATIO_CONSTANT, |d| d.0, "n*dev")
}

fn shift_check() -> Outcome {
    frozen_check(SHIFT_CONSTANT, |d| d.1, "dev")
}

fn monte_carlo() -> Outcome {
    let args = [
        "simulate",
        "--n",
        "52",
        "--m",
        "300",
        "--samples",
        "1000000",
        "--seed",
        "42",
    ];
    let run = || {
        let o = Command::new(env!("CARGO_BIN_EXE_shelfmix"))
            .args(args)
            .output()
            .expect("binary runs");
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    let start = Instant::now();
    let first = run();
    let secs = start.elapsed().as_secs_f64();
    let second = run();
    let line = first.lines().nth(1).unwrap_or_default();
    let tv: f64 = line
        .split(',')
        .nth(4)
        .and_then(|s| s.parse().ok())
        .unwrap_or(f64::NAN);
    let close = (tv - 0.00457).abs() <= 0.005;
    let stable = first == second;
    outcome(
        close && stable,
        format!("empirical TV {tv}, deterministic: {stable}, {secs:.1} s per run"),
    )
}

fn mixing() -> Outcome {
    let a = mixing_time(52, 10, 0.25, DEFAULT_MAX_SHELVES).unwrap();
    let b = mixing_time(52, 300, 0.01, DEFAULT_MAX_SHELVES).unwrap();
    let wa = rat_to_decimal(&a.witness_tv, 5);
    let wb = rat_to_decimal(&b.witness_tv, 5);
    // Witnesses are the table rows at the composed shelf counts 200 and 300.
    let pass = a.repeats == 2 && b.repeats == 1 && wa == FIGURE_EXACT[8] && wb == FIGURE_EXACT[9];
    outcome(
        pass,
        format!(
            "(52,10,0.25) -> {} passes, witness {wa}; (52,300,0.01) -> {} pass, witness {wb}",
            a.repeats, b.repeats
        ),
    )
}

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("figure exact values", figure_exact),
        ("figure asymptotic values", figure_asymptotic),
        ("oracle equivalence", oracle_equivalence),
        ("composition rule", composition),
        ("dual-form TV identity", dual_form),
        ("moment identities", moments),
        ("monotonicity and domination", domination),
        ("tilt ratio check", ratio_check),
        ("tilt shift check", shift_check),
        ("Monte Carlo consistency", monte_carlo),
        ("mixing time", mixing),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !result.pass {
            failed += 1;
        }
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag} {name}: {}", i + 1, result.detail);
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

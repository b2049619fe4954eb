//! The `shelfmix` command line.
//!
//! Every subcommand writes plot-ready rows to the given sink. [`execute`]
//! maps failures to exit codes: 1 for usage errors, 2 when a computation
//! bound is hit, 3 when an exact identity fails.

use std::io::Write;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use shelfmix_core::permstat::MAX_DECK_SIZE;
use shelfmix_core::shelfmeasure::{domination_check, q_table, shuffle_valley_pmf};
use shelfmix_core::simulator::{
    composition_check, empirical_tv_budget, enumerate_exact, sample_valleys, DEFAULT_ENUM_BUDGET,
};
use shelfmix_core::tvmetrics::{
    cutoff_profile, mixing_time, tv_asymptotic, tv_exact_with, DEFAULT_MAX_SHELVES,
};
use shelfmix_core::{Error as CoreError, ValleyTable};
use thiserror::Error;

pub mod output;

use output::{
    decimal, float_decimal, write_rows, Format, MixingRow, ProfileRow, SimulateRow, TvRow,
};

/// Largest `--m-max` accepted by `figure1`.
pub const MAX_FIGURE_ROWS: u64 = 100_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Bound(String),
    #[error("{0}")]
    Invariant(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("write failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("write failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
            CliError::Bound(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::Core(e) if e.is_bound() => 2,
            CliError::Core(e) if e.is_invariant_violation() => 3,
            CliError::Core(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "shelfmix",
    version,
    about = "Exact total variation of the m-shelf shuffle"
)]
pub struct Cli {
    /// Largest deck size accepted; values above 64 are treated as 64.
    #[arg(long, global = true, env = "SHELFMIX_MAX_N", default_value_t = MAX_DECK_SIZE)]
    pub max_n: usize,

    /// Budget for exact enumeration, counted in (2m)^n weighted terms.
    #[arg(long, global = true, env = "SHELFMIX_ENUM_BUDGET", default_value_t = DEFAULT_ENUM_BUDGET)]
    pub enum_budget: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Asymptotic,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Total variation after one m-shelf shuffle.
    Tv {
        #[arg(long, default_value_t = 52)]
        n: usize,
        #[arg(long)]
        m: u64,
        #[arg(long, value_enum, default_value_t = Mode::Both)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Exact and asymptotic TV for m = 1..=m-max.
    Figure1 {
        #[arg(long, default_value_t = 52)]
        n: usize,
        #[arg(long, default_value_t = 300)]
        m_max: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Least number of repeated m-shelf passes with exact TV at most eps.
    Mixing {
        #[arg(long, default_value_t = 52)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[arg(long)]
        eps: f64,
        /// Largest composed shelf count to evaluate.
        #[arg(long, default_value_t = DEFAULT_MAX_SHELVES)]
        max_shelves: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Monte Carlo TV estimate from seeded shuffles.
    Simulate {
        #[arg(long, default_value_t = 52)]
        n: usize,
        #[arg(long)]
        m: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Check the closed forms against brute-force enumeration.
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: u64,
    },
    /// Limiting TV along the cutoff window.
    Profile {
        #[arg(long, default_value_t = 52)]
        n: usize,
        /// Range as from:to:step.
        #[arg(long, allow_hyphen_values = true)]
        theta: ThetaRange,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

/// Inclusive arithmetic grid `from, from + step, ..., <= to`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaRange {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl ThetaRange {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.from + i as f64 * self.step)
            .collect()
    }
}

impl FromStr for ThetaRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [from, to, step] = parts.as_slice() else {
            return Err(format!("expected from:to:step, got {s:?}"));
        };
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("not a finite number: {t:?}"))
        };
        let range = ThetaRange {
            from: parse(from)?,
            to: parse(to)?,
            step: parse(step)?,
        };
        if range.step <= 0.0 {
            return Err("step must be positive".into());
        }
        if range.to < range.from {
            return Err("range end lies below its start".into());
        }
        if (range.to - range.from) / range.step > 1e6 {
            return Err("more than a million grid points".into());
        }
        Ok(range)
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to `err` as a single line.
pub fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{}", e.render());
                return 0;
            }
            let rendered = e.render().to_string();
            let line = rendered.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "shelfmix: {}", line.trim_start_matches("error: "));
            return 1;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "shelfmix: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Tv { n, m, mode, format } => {
            check_n(cli, *n)?;
            let vt = table_for(*n, *mode)?;
            let row = tv_row(*n, vt.as_ref(), *m, *mode)?;
            write_rows(out, *format, "tv", *n, &[row])
        }
        Command::Figure1 { n, m_max, format } => {
            check_n(cli, *n)?;
            if *m_max == 0 {
                return Err(CliError::Usage("--m-max must be at least 1".into()));
            }
            if *m_max > MAX_FIGURE_ROWS {
                return Err(CliError::Bound(format!(
                    "--m-max {m_max} exceeds the row bound {MAX_FIGURE_ROWS}"
                )));
            }
            let vt = ValleyTable::new(*n)?;
            let rows = (1..=*m_max)
                .into_par_iter()
                .map(|m| tv_row(*n, Some(&vt), m, Mode::Both))
                .collect::<Result<Vec<_>, _>>()?;
            write_rows(out, *format, "figure1", *n, &rows)
        }
        Command::Mixing {
            n,
            m,
            eps,
            max_shelves,
            format,
        } => {
            check_n(cli, *n)?;
            let mt = mixing_time(*n, *m, *eps, *max_shelves)?;
            let row = MixingRow {
                n: *n,
                m: *m,
                eps: eps.to_string(),
                repeats: mt.repeats,
                effective_shelves: mt.effective_shelves,
                witness_tv: decimal(&mt.witness_tv),
            };
            write_rows(out, *format, "mixing", *n, &[row])
        }
        Command::Simulate {
            n,
            m,
            samples,
            seed,
            format,
        } => {
            check_n(cli, *n)?;
            if *samples == 0 {
                return Err(CliError::Usage("--samples must be at least 1".into()));
            }
            let vt = ValleyTable::new(*n)?;
            let run = sample_valleys(*n, *m, *samples, *seed)?;
            let exact = tv_exact_with(&vt, *m)?;
            let row = SimulateRow {
                n: *n,
                m: *m,
                samples: *samples,
                seed: *seed,
                tv_empirical: float_decimal(run.tv_against_uniform(&vt))?,
                tv_exact: exact.tv_exact_decimal,
                tolerance: float_decimal(empirical_tv_budget(*n, *samples))?,
            };
            write_rows(out, *format, "simulate", *n, &[row])
        }
        Command::Oracle { n, m } => {
            check_n(cli, *n)?;
            oracle(*n, *m, cli.enum_budget, out)
        }
        Command::Profile { n, theta, format } => {
            check_n(cli, *n)?;
            let base = 1.25 * (*n as f64).log2();
            let rows = cutoff_profile(*n, &theta.values())?
                .into_iter()
                .map(|(t, tv)| {
                    Ok(ProfileRow {
                        theta: float_decimal(t)?,
                        passes: float_decimal(base + t)?,
                        tv_asymptotic: float_decimal(tv)?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            write_rows(out, *format, "profile", *n, &rows)
        }
    }
}

fn check_n(cli: &Cli, n: usize) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let cap = cli.max_n.min(MAX_DECK_SIZE);
    if n > cap {
        return Err(CliError::Bound(format!(
            "deck size {n} exceeds the bound {cap}"
        )));
    }
    Ok(())
}

fn table_for(n: usize, mode: Mode) -> Result<Option<ValleyTable>, CliError> {
    Ok(match mode {
        Mode::Asymptotic => None,
        Mode::Exact | Mode::Both => Some(ValleyTable::new(n)?),
    })
}

fn tv_row(n: usize, vt: Option<&ValleyTable>, m: u64, mode: Mode) -> Result<TvRow, CliError> {
    let mut row = TvRow {
        m,
        tv_exact: None,
        tv_asymptotic: None,
        argmax_k: None,
        delta_minus: None,
        delta_plus: None,
    };
    if let Some(vt) = vt {
        let report = tv_exact_with(vt, m)?;
        row.tv_exact = Some(report.tv_exact_decimal);
        row.argmax_k = Some(report.argmax_k);
        if let Some(b) = report.delta_bounds {
            row.delta_minus = Some(decimal(&b.delta_minus));
            row.delta_plus = Some(decimal(&b.delta_plus));
        }
    }
    match mode {
        Mode::Exact => {}
        Mode::Asymptotic => row.tv_asymptotic = Some(float_decimal(tv_asymptotic(n, m)?)?),
        Mode::Both => {
            if n >= 2 {
                row.tv_asymptotic = Some(float_decimal(tv_asymptotic(n, m)?)?);
            }
        }
    }
    Ok(row)
}

/// Prints one PASS / FAIL / SKIP line per invariant. Any FAIL is reported
/// as an invariant violation after all lines are written.
fn oracle(n: usize, m: u64, budget: u64, out: &mut dyn Write) -> Result<(), CliError> {
    let vt = ValleyTable::new(n)?;
    let dist = enumerate_exact(n, m, budget)?;
    let mut failures = 0;
    let mut line =
        |out: &mut dyn Write, ok: bool, name: &str, detail: String| -> Result<(), CliError> {
            if !ok {
                failures += 1;
            }
            let tag = if ok { "PASS" } else { "FAIL" };
            if detail.is_empty() {
                writeln!(out, "{tag} {name} n={n} m={m}")?;
            } else {
                writeln!(out, "{tag} {name} n={n} m={m}: {detail}")?;
            }
            Ok(())
        };

    let formula = shuffle_valley_pmf(&q_table(n, m)?, &vt)?;
    let enumerated = dist.by_valleys();
    let witness = (0..formula.len()).find(|&k| formula[k] != enumerated[k]);
    line(
        out,
        witness.is_none(),
        "q-equivalence",
        witness
            .map(|k| format!("k={k} enumerated {} formula {}", enumerated[k], formula[k]))
            .unwrap_or_default(),
    )?;

    let pair = dist.valley_class_counterexample();
    line(
        out,
        pair.is_none(),
        "sufficiency",
        pair.map(|(a, b)| format!("P{a} = {} but P{b} = {}", dist.prob(&a), dist.prob(&b)))
            .unwrap_or_default(),
    )?;

    match tv_exact_with(&vt, m) {
        Ok(_) => line(out, true, "dual-form-tv", String::new())?,
        Err(e) if e.is_invariant_violation() => line(out, false, "dual-form-tv", e.to_string())?,
        Err(e) => return Err(e.into()),
    }

    if n >= 3 {
        let report = domination_check(n, m)?;
        line(
            out,
            report.holds(),
            "domination",
            report
                .violation
                .map(|(side, k)| format!("{side:?} side fails at k={k}"))
                .unwrap_or_default(),
        )?;
    }

    for (m1, m2) in composition_partners(m) {
        let label = format!("composition m1={m1} m2={m2}");
        match composition_check(n, m1, m2, budget) {
            Ok(report) => line(
                out,
                report.holds(),
                &label,
                report
                    .mismatch
                    .map(|(p, a, b)| format!("P{p} composed {a} direct {b}"))
                    .unwrap_or_default(),
            )?,
            Err(CoreError::BudgetExceeded { needed, budget }) => writeln!(
                out,
                "SKIP {label} n={n} m={m}: needs {needed} terms, budget {budget}"
            )?,
            Err(e) => return Err(e.into()),
        }
    }

    if failures > 0 {
        return Err(CliError::Invariant(format!(
            "{failures} oracle check(s) failed"
        )));
    }
    Ok(())
}

/// Factorisations `m = 2 m1 m2`, then `m` composed with a one-shelf pass on
/// either side.
fn composition_partners(m: u64) -> Vec<(u64, u64)> {
    let mut partners = Vec::new();
    if m.is_multiple_of(2) {
        let half = m / 2;
        partners.extend(
            (1..=half)
                .filter(|d| half.is_multiple_of(*d))
                .map(|d| (d, half / d)),
        );
    }
    partners.push((m, 1));
    if m != 1 {
        partners.push((1, m));
    }
    partners
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_grid() {
        let r: ThetaRange = "-3:3:0.5".parse().unwrap();
        let v = r.values();
        assert_eq!(v.len(), 13);
        assert_eq!(v[0], -3.0);
        assert_eq!(v[12], 3.0);
        assert_eq!("0:0:1".parse::<ThetaRange>().unwrap().values(), vec![0.0]);
        assert!("1:0:1".parse::<ThetaRange>().is_err());
        assert!("0:1:0".parse::<ThetaRange>().is_err());
        assert!("0:1".parse::<ThetaRange>().is_err());
        assert!("a:1:1".parse::<ThetaRange>().is_err());
    }

    #[test]
    fn partners() {
        assert_eq!(composition_partners(1), vec![(1, 1)]);
        assert_eq!(composition_partners(2), vec![(1, 1), (2, 1), (1, 2)]);
        assert_eq!(
            composition_partners(12),
            vec![(1, 6), (2, 3), (3, 2), (6, 1), (12, 1), (1, 12)]
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 1);
        assert_eq!(CliError::Core(CoreError::ZeroShelves).exit_code(), 1);
        assert_eq!(
            CliError::Core(CoreError::ShelfBoundExceeded { bound: 1 }).exit_code(),
            2
        );
        assert_eq!(
            CliError::Core(CoreError::InvariantViolation(String::new())).exit_code(),
            3
        );
    }
}

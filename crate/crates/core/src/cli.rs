//! `stakeweight` command-line interface.
//!
//! Exit codes: 0 success, 1 data or validation error, 2 network error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::fetch::{fetch_validators, ChainAdapter, DEFAULT_VALIDATORS_PATH, ENDPOINT_ENV};
use crate::ingest::{read_snapshot, write_snapshot};
use crate::metrics::gini_of;
use crate::model::WeightScheme;
use crate::report::{
    analyze, compare_snapshot, render_metrics_csv, render_metrics_json, render_metrics_table,
    ComparisonReport,
};
use crate::simulate::{compare_proposer_concentration, simulate_rewards, AnnualRate};
use crate::srsw::{sybil_split_analysis, EconParams};

#[derive(Debug, Parser)]
#[command(name = "stakeweight", version, about = "Decentralization metrics for weighted validator sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metrics for one snapshot under one weight scheme.
    Analyze {
        snapshot: PathBuf,
        #[arg(long, default_value = "linear")]
        scheme: WeightScheme,
        /// Percentiles for epsilon, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0,50")]
        delta: Vec<u8>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear vs SRSW metrics and percentage changes for each snapshot.
    Compare {
        #[arg(required = true)]
        snapshots: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0,50")]
        delta: Vec<u8>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report the snapshots that loaded even if others failed.
        #[arg(long)]
        partial: bool,
    },
    /// Reward compounding or proposer-selection simulations (CSV output).
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Is splitting one stake into two identities profitable?
    Sybil {
        stake: String,
        /// Admission threshold stake s_M.
        threshold_stake: String,
        alpha: f64,
        cost: f64,
        #[arg(default_value = "srsw")]
        scheme: WeightScheme,
    },
    /// Download the bonded validator set from a Cosmos-SDK REST endpoint.
    Fetch {
        #[arg(long, env = ENDPOINT_ENV)]
        endpoint: String,
        #[arg(long, default_value = "cosmos")]
        chain: String,
        #[arg(long, default_value_t = 100)]
        limit: u32,
        #[arg(long, default_value = DEFAULT_VALIDATORS_PATH)]
        path: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    Rewards(RewardsArgs),
    Proposers(ProposersArgs),
}

#[derive(Debug, Args)]
pub struct RewardsArgs {
    pub snapshot: PathBuf,
    #[arg(long, default_value = "linear")]
    pub scheme: WeightScheme,
    /// Per-epoch inflation factor (fraction).
    #[arg(long, conflicts_with = "alpha_annual", required_unless_present = "alpha_annual")]
    pub alpha: Option<f64>,
    /// Annual inflation in percent, apportioned over --epochs-per-year.
    #[arg(long)]
    pub alpha_annual: Option<f64>,
    #[arg(long, default_value_t = 365)]
    pub epochs_per_year: u32,
    #[arg(long)]
    pub epochs: usize,
    /// Validator-set cap M; unbounded when omitted.
    #[arg(long)]
    pub cap_m: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProposersArgs {
    pub snapshot: PathBuf,
    /// Scheme whose histogram is written to --out.
    #[arg(long, default_value = "linear")]
    pub scheme: WeightScheme,
    #[arg(long, default_value_t = 1_000_000)]
    pub draws: u64,
    /// PRNG seed; a random one is generated and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{e}")
            } else {
                write!(stdout, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: Option<&Path>, body: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => fs::write(p, body)?,
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(())
}

fn parse_integer(raw: &str, name: &'static str) -> Result<BigUint> {
    raw.parse().map_err(|_| Error::InvalidParameter {
        name,
        reason: format!("`{raw}` is not a non-negative integer"),
    })
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Analyze {
            snapshot,
            scheme,
            delta,
            format,
            out,
        } => {
            let snap = read_snapshot(&snapshot)?;
            let report = analyze(&snap, scheme, &delta)?;
            let body = match format {
                Format::Table => render_metrics_table(&report),
                Format::Json => render_metrics_json(&report),
                Format::Csv => render_metrics_csv(&report)?,
            };
            emit(out.as_deref(), &body, stdout)?;
            Ok(0)
        }
        Command::Compare {
            snapshots,
            delta,
            format,
            out,
            partial,
        } => {
            let results: Vec<Result<_>> = thread::scope(|scope| {
                let handles: Vec<_> = snapshots
                    .iter()
                    .map(|p| {
                        let delta = &delta;
                        scope.spawn(move || read_snapshot(p).and_then(|s| compare_snapshot(&s, delta)))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("analysis threads do not panic"))
                    .collect()
            });
            let mut rows = Vec::new();
            let mut failed = 0;
            for (path, r) in snapshots.iter().zip(results) {
                match r {
                    Ok(row) => rows.push(row),
                    Err(e) => {
                        failed += 1;
                        writeln!(stderr, "error: {}: {e}", path.display())?;
                    }
                }
            }
            if failed > 0 && (!partial || rows.is_empty()) {
                return Ok(1);
            }
            let report = ComparisonReport::from_rows(rows);
            let body = match format {
                Format::Table => report.render_table(),
                Format::Json => report.render_json(),
                Format::Csv => report.render_csv()?,
            };
            emit(out.as_deref(), &body, stdout)?;
            Ok(0)
        }
        Command::Simulate(SimulateCommand::Rewards(a)) => simulate_rewards_cmd(a, stdout),
        Command::Simulate(SimulateCommand::Proposers(a)) => simulate_proposers_cmd(a, stdout),
        Command::Sybil {
            stake,
            threshold_stake,
            alpha,
            cost,
            scheme,
        } => {
            let stake = parse_integer(&stake, "stake")?;
            let threshold = parse_integer(&threshold_stake, "threshold_stake")?;
            let params = EconParams::new(alpha, usize::MAX, cost, scheme)?;
            let v = sybil_split_analysis(&stake, &params, &threshold)?;
            match &v.best_split {
                None => writeln!(
                    stdout,
                    "do not split ({:.3}; a single base unit cannot be split)",
                    v.single_reward
                )?,
                Some((a, b)) if v.rational_to_split => {
                    writeln!(
                        stdout,
                        "split rational (best split {a}+{b} earns {:.3} vs {:.3} as one identity)",
                        v.best_split_reward, v.single_reward
                    )?;
                    writeln!(
                        stdout,
                        "warning: the model deters splitting only under a high Sybil cost C; C={cost} is too low here"
                    )?;
                }
                Some((a, b)) => writeln!(
                    stdout,
                    "do not split ({:.3} vs best split {:.3} at {a}+{b})",
                    v.single_reward, v.best_split_reward
                )?,
            }
            Ok(0)
        }
        Command::Fetch {
            endpoint,
            chain,
            limit,
            path,
            out,
        } => {
            let mut adapter = ChainAdapter::cosmos(chain, endpoint);
            adapter.pagination_limit = limit;
            adapter.path = path;
            let snap = fetch_validators(&adapter)?;
            write_snapshot(&snap, &out)?;
            writeln!(stdout, "wrote {} bonded validators to {}", snap.len(), out.display())?;
            Ok(0)
        }
    }
}

fn simulate_rewards_cmd(a: RewardsArgs, stdout: &mut dyn Write) -> Result<i32> {
    let snap = read_snapshot(&a.snapshot)?;
    let cap = a.cap_m.unwrap_or(snap.len());
    let (alpha, annual) = match (a.alpha, a.alpha_annual) {
        (_, Some(pct)) => {
            let annual = AnnualRate {
                rate: pct / 100.0,
                epochs_per_year: a.epochs_per_year,
            };
            if a.epochs_per_year == 0 {
                return Err(Error::InvalidHorizon("epochs per year must be positive".into()));
            }
            (annual.per_epoch(), Some(annual))
        }
        (Some(alpha), None) => (alpha, None),
        (None, None) => {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: "give --alpha or --alpha-annual".into(),
            })
        }
    };
    let params = EconParams::new(alpha, cap, 0.0, a.scheme)?;
    let traj = simulate_rewards(&snap, &params, a.epochs, annual)?;
    traj.write_csv(fs::File::create(&a.out)?)?;

    let growth = traj.growth();
    let min = growth.iter().copied().fold(f64::INFINITY, f64::min);
    let max = growth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let initial: Vec<f64> = traj.stakes.iter().map(|s| s[0]).collect();
    writeln!(stdout, "scheme: {}", traj.scheme)?;
    writeln!(stdout, "alpha per epoch: {}", traj.alpha)?;
    writeln!(stdout, "epochs: {}", a.epochs)?;
    writeln!(stdout, "growth: min x{min:.6} max x{max:.6}")?;
    writeln!(
        stdout,
        "stake gini: initial {:.6} final {:.6}",
        gini_of(&initial),
        gini_of(&traj.final_stakes())
    )?;
    writeln!(stdout, "wrote {}", a.out.display())?;
    Ok(0)
}

fn simulate_proposers_cmd(a: ProposersArgs, stdout: &mut dyn Write) -> Result<i32> {
    let snap = read_snapshot(&a.snapshot)?;
    let (seed, generated) = match a.seed {
        Some(s) => (s, false),
        None => (rand::random::<u64>(), true),
    };
    let cmp = compare_proposer_concentration(&snap, a.draws, seed)?;
    let hist = match a.scheme {
        WeightScheme::Linear => &cmp.linear,
        WeightScheme::Srsw => &cmp.srsw,
    };
    hist.write_csv(fs::File::create(&a.out)?)?;
    let max_dev = hist
        .empirical_share()
        .iter()
        .zip(&hist.expected_share)
        .map(|(e, x)| (e - x).abs())
        .fold(0.0, f64::max);
    writeln!(stdout, "prng: {}", hist.algorithm)?;
    writeln!(
        stdout,
        "seed: {seed}{}",
        if generated { " (auto-generated)" } else { "" }
    )?;
    writeln!(stdout, "draws: {}", hist.draws)?;
    writeln!(stdout, "scheme: {}", hist.scheme)?;
    writeln!(stdout, "max |empirical - expected| share: {max_dev:.6}")?;
    writeln!(
        stdout,
        "expected-share gini: linear {:.6} srsw {:.6}",
        cmp.linear_share_gini, cmp.srsw_share_gini
    )?;
    writeln!(stdout, "wrote {}", a.out.display())?;
    Ok(0)
}

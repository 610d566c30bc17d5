//! Command-line front end: `capacity`, `simulate` and `sweep`.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::capacity::{common_rate_capacity, RateReport};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::fdf::{SessionCodes, SessionConfig};
use crate::harness::{
    estimate_error_rates, format_sig6, rate_sweep, threads_from_env, with_threads, write_csv,
    write_json, DownlinkRule, EstimateOptions, SweepSpec,
};

#[derive(Debug, Parser)]
#[command(
    name = "mwrc",
    version,
    about = "Functional decode-forward on the binary multi-way relay channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the common-rate capacity and per-link constraints
    Capacity(ChannelArgs),
    /// Estimate error rates of one configuration
    Simulate(SimulateArgs),
    /// Estimate error rates over a grid of n' values
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ChannelArgs {
    /// Number of users L
    #[arg(long)]
    users: Option<usize>,
    /// Crossover probabilities rho0,...,rhoL (uplink first)
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    /// JSON file with {"L": .., "rho": [..]}, used instead of --users/--rho
    #[arg(long, conflicts_with_all = ["users", "rho"])]
    config: Option<PathBuf>,
    /// Output format; the capacity report defaults to a table
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write output here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Message bits per user
    #[arg(long)]
    k: usize,
    /// Downlink channel uses; defaults to (L-1) n'
    #[arg(long)]
    n_down: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Draw new codes for every trial (ensemble average) instead of one per point
    #[arg(long)]
    resample_code_every_trial: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Uplink channel uses per phase
    #[arg(long)]
    n_prime: usize,
    /// Also write the sampled code to this JSON file
    #[arg(long)]
    dump_code: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated grid of uplink channel uses per phase
    #[arg(long, value_delimiter = ',', required = true)]
    n_prime: Vec<usize>,
}

impl ChannelArgs {
    fn params(&self) -> Result<ChannelParams> {
        if let Some(path) = &self.config {
            return ChannelParams::from_json(&std::fs::read_to_string(path)?);
        }
        let users = self
            .users
            .ok_or_else(|| Error::Parameter("--users is required (or --config)".into()))?;
        let rho = self
            .rho
            .clone()
            .ok_or_else(|| Error::Parameter("--rho is required (or --config)".into()))?;
        ChannelParams::new(users, rho)
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn options(run: &RunArgs) -> EstimateOptions {
    EstimateOptions {
        resample_code_every_trial: run.resample_code_every_trial,
    }
}

fn write_rate_table<W: Write>(mut out: W, r: &RateReport) -> Result<()> {
    writeln!(out, "users (L)            {}", r.users)?;
    for (i, (rho, c)) in r.rho.iter().zip(&r.per_link_constraints).enumerate() {
        let link = if i == 0 {
            "uplink".to_string()
        } else {
            format!("downlink {i}")
        };
        let mark = if i == r.bottleneck_link {
            "  <- bottleneck"
        } else {
            ""
        };
        writeln!(
            out,
            "link {i:<3} {link:<11} rho = {:<9} (1-H(rho))/(L-1) = {}{mark}",
            format_sig6(*rho),
            format_sig6(*c)
        )?;
    }
    writeln!(out, "capacity C           {}", format_sig6(r.capacity))?;
    writeln!(out, "cut-set upper bound  {}", format_sig6(r.upper_bound))?;
    writeln!(
        out,
        "cdf baseline rate    {}  (baseline, this artifact's variant)",
        format_sig6(r.cdf_baseline_rate)
    )?;
    Ok(())
}

fn run_capacity(args: &ChannelArgs) -> Result<()> {
    let report = common_rate_capacity(&args.params()?)?;
    let mut out = args.writer()?;
    match args.format {
        Some(Format::Json) => write_json(&mut out, &report)?,
        Some(Format::Csv) => {
            writeln!(
                out,
                "L,capacity,upper_bound,bottleneck_link,cdf_baseline_rate"
            )?;
            writeln!(
                out,
                "{},{},{},{},{}",
                report.users,
                format_sig6(report.capacity),
                format_sig6(report.upper_bound),
                report.bottleneck_link,
                format_sig6(report.cdf_baseline_rate)
            )?;
        }
        None => write_rate_table(&mut out, &report)?,
    }
    out.flush()?;
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let params = args.channel.params()?;
    let n_down = args
        .run
        .n_down
        .unwrap_or(params.users.saturating_sub(1) * args.n_prime);
    let cfg =
        SessionConfig::with_downlink(params, args.run.k, args.n_prime, n_down, args.run.seed)?;
    if let Some(path) = &args.dump_code {
        let codes = SessionCodes::sample(&cfg, 0);
        write_json(
            BufWriter::new(File::create(path)?),
            &codes.uplink.to_artifact(),
        )?;
    }
    let threads = threads_from_env()?;
    let opts = options(&args.run);
    let record = with_threads(threads, || {
        estimate_error_rates(&cfg, args.run.trials, opts)
    })??;
    let mut out = args.channel.writer()?;
    match args.channel.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&mut out, std::slice::from_ref(&record))?,
        Format::Json => write_json(&mut out, &record)?,
    }
    out.flush()?;
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let params = args.channel.params()?;
    let spec = SweepSpec {
        params,
        k: args.run.k,
        n_primes: args.n_prime.clone(),
        n_down: args
            .run
            .n_down
            .map_or(DownlinkRule::MatchUplink, DownlinkRule::Fixed),
        trials: args.run.trials,
        seed: args.run.seed,
        options: options(&args.run),
    };
    let threads = threads_from_env()?;
    let result = with_threads(threads, || rate_sweep(&spec))??;
    let mut out = args.channel.writer()?;
    match args.channel.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(&mut out, &result.records)?,
        Format::Json => write_json(&mut out, &result)?,
    }
    out.flush()?;
    Ok(())
}

/// Parses `args` (program name first) and runs the subcommand. Returns the
/// process exit code: 0 on success, 2 for usage errors, 1 for invalid
/// configurations or I/O failures.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Capacity(a) => run_capacity(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Sweep(a) => run_sweep(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

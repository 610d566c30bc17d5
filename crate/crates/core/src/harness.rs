//! Monte Carlo estimation of error rates and rate sweeps.
//!
//! Trials run in parallel on the current rayon pool. Every trial draws its
//! messages, noise and (optionally) codes from streams keyed on its index and
//! the tallies are integer sums, so results do not depend on the worker count.

use std::io::Write;
use std::ops::Add;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{common_rate_capacity, RateReport};
use crate::channel::ChannelParams;
use crate::codes::MAX_DECODE_BITS;
use crate::error::{Error, Result};
use crate::fdf::{
    random_messages, relay_uplink, run_trial, SessionCodes, SessionConfig, TrialNoise,
};

/// Environment variable capping worker threads; 0 or unset means one per core.
pub const THREADS_ENV: &str = "MWRC_THREADS";

const Z_95: f64 = 1.959_963_984_540_054;

/// Half-width of the 95% Wilson score interval for `errors` out of `trials`.
pub fn wilson_halfwidth(errors: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    Z_95 / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

/// The 95% Wilson score interval `(low, high)`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = wilson_halfwidth(errors, trials);
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Draw fresh codes for every trial instead of one code per point.
    pub resample_code_every_trial: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Tally {
    trials: u64,
    phase_errors: u64,
    user_fn_errors: u64,
    e2e_errors: u64,
    collision_trials: u64,
    e2e_errors_clean: u64,
}

impl Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            trials: self.trials + o.trials,
            phase_errors: self.phase_errors + o.phase_errors,
            user_fn_errors: self.user_fn_errors + o.user_fn_errors,
            e2e_errors: self.e2e_errors + o.e2e_errors,
            collision_trials: self.collision_trials + o.collision_trials,
            e2e_errors_clean: self.e2e_errors_clean + o.e2e_errors_clean,
        }
    }
}

/// Summary of one `(configuration, trials)` point.
///
/// `relay_err` is the fraction of uplink phases decoded wrongly,
/// `user_fn_err` the fraction of (trial, user) downlink decodes that missed
/// the relay's function set, and `e2e_err` the fraction of trials in which
/// some user recovered some other user's message wrongly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    #[serde(rename = "L")]
    pub users: usize,
    pub k: usize,
    pub n_prime: usize,
    pub n_down: usize,
    pub rho: Vec<f64>,
    #[serde(rename = "R")]
    pub rate: f64,
    #[serde(rename = "R_up")]
    pub rate_up: f64,
    #[serde(rename = "R_down")]
    pub rate_down: f64,
    pub relay_err: f64,
    pub user_fn_err: f64,
    pub e2e_err: f64,
    pub e2e_ci95: f64,
    pub trials: u64,
    pub seed: u64,
    pub e2e_errors: u64,
    /// Trials whose codes map two messages to one codeword.
    pub collision_trials: u64,
    /// End-to-end errors among trials without a codeword collision.
    pub e2e_errors_clean: u64,
}

fn session_codes(
    cfg: &SessionConfig,
    trial: u64,
    opts: EstimateOptions,
    fixed: &Option<SessionCodes>,
) -> SessionCodes {
    match fixed {
        Some(c) if !opts.resample_code_every_trial => c.clone(),
        _ => SessionCodes::sample(cfg, trial + 1),
    }
}

/// Runs `trials` independent sessions and aggregates their error rates.
pub fn estimate_error_rates(
    cfg: &SessionConfig,
    trials: u64,
    opts: EstimateOptions,
) -> Result<PointRecord> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let fixed = (!opts.resample_code_every_trial).then(|| SessionCodes::sample(cfg, 0));
    let fixed_injective = match &fixed {
        Some(c) => c.injective()?,
        None => true,
    };
    let tally = (0..trials)
        .into_par_iter()
        .map(|t| {
            let codes = session_codes(cfg, t, opts, &fixed);
            let injective = if opts.resample_code_every_trial {
                codes.injective()?
            } else {
                fixed_injective
            };
            let messages = random_messages(cfg, t);
            let out = run_trial(cfg, &messages, &codes, &TrialNoise::new(cfg.seed, t))?;
            let e2e = u64::from(out.end_to_end_error);
            Ok::<_, Error>(Tally {
                trials: 1,
                phase_errors: out.relay_phase_errors.iter().filter(|&&e| e).count() as u64,
                user_fn_errors: out.user_function_errors.iter().filter(|&&e| e).count() as u64,
                e2e_errors: e2e,
                collision_trials: u64::from(!injective),
                e2e_errors_clean: if injective { e2e } else { 0 },
            })
        })
        .try_reduce(Tally::default, |a, b| Ok(a + b))?;
    Ok(record(cfg, &tally))
}

fn record(cfg: &SessionConfig, t: &Tally) -> PointRecord {
    let n = t.trials as f64;
    PointRecord {
        users: cfg.users(),
        k: cfg.k,
        n_prime: cfg.n_prime,
        n_down: cfg.n_down,
        rho: cfg.params.rho.clone(),
        rate: cfg.rate(),
        rate_up: cfg.rate_up(),
        rate_down: cfg.rate_down(),
        relay_err: t.phase_errors as f64 / (n * cfg.phases() as f64),
        user_fn_err: t.user_fn_errors as f64 / (n * cfg.users() as f64),
        e2e_err: t.e2e_errors as f64 / n,
        e2e_ci95: wilson_halfwidth(t.e2e_errors, t.trials),
        trials: t.trials,
        seed: cfg.seed,
        e2e_errors: t.e2e_errors,
        collision_trials: t.collision_trials,
        e2e_errors_clean: t.e2e_errors_clean,
    }
}

/// Uplink-only estimate: phase decoding errors out of `trials × (L − 1)` phases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelayEstimate {
    pub phase_errors: u64,
    pub phases: u64,
    pub error_rate: f64,
    pub ci95: f64,
}

/// Runs only the uplink of `trials` sessions. Useful where the downlink is not
/// under study or would exceed the exhaustive decoder's reach.
pub fn estimate_relay_error_rate(
    cfg: &SessionConfig,
    trials: u64,
    opts: EstimateOptions,
) -> Result<RelayEstimate> {
    cfg.params.validate()?;
    if cfg.k > MAX_DECODE_BITS {
        return Err(Error::Capability {
            k: cfg.k,
            cap: MAX_DECODE_BITS,
        });
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    let ensemble = |t: u64| {
        let draw = if opts.resample_code_every_trial {
            t + 1
        } else {
            0
        };
        SessionCodes::sample_uplink(cfg, draw)
    };
    let fixed = ensemble(0);
    let phase_errors = (0..trials)
        .into_par_iter()
        .map(|t| {
            let owned;
            let codes = if opts.resample_code_every_trial {
                owned = ensemble(t);
                &owned
            } else {
                &fixed
            };
            let messages = random_messages(cfg, t);
            let (_, errs) = relay_uplink(cfg, &messages, codes, &TrialNoise::new(cfg.seed, t))?;
            Ok::<_, Error>(errs.iter().filter(|&&e| e).count() as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let phases = trials * cfg.phases() as u64;
    Ok(RelayEstimate {
        phase_errors,
        phases,
        error_rate: phase_errors as f64 / phases as f64,
        ci95: wilson_halfwidth(phase_errors, phases),
    })
}

/// How the downlink length follows the uplink in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownlinkRule {
    /// `n_down = (L − 1) n'`, the same number of channel uses as the uplink.
    MatchUplink,
    Fixed(usize),
}

impl DownlinkRule {
    pub fn n_down(&self, users: usize, n_prime: usize) -> usize {
        match *self {
            DownlinkRule::MatchUplink => (users - 1) * n_prime,
            DownlinkRule::Fixed(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub params: ChannelParams,
    pub k: usize,
    pub n_primes: Vec<usize>,
    pub n_down: DownlinkRule,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub options: EstimateOptions,
}

impl SweepSpec {
    pub fn configs(&self) -> Result<Vec<SessionConfig>> {
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.n_primes.is_empty() {
            return Err(Error::Parameter("sweep grid is empty".into()));
        }
        self.params.validate()?;
        self.n_primes
            .iter()
            .map(|&n_prime| {
                SessionConfig::with_downlink(
                    self.params.clone(),
                    self.k,
                    n_prime,
                    self.n_down.n_down(self.params.users, n_prime),
                    self.seed,
                )
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub records: Vec<PointRecord>,
    pub capacity: RateReport,
}

/// One estimate per grid point, in grid order, plus the analytic capacity.
pub fn rate_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let configs = spec.configs()?;
    let records = configs
        .iter()
        .map(|cfg| estimate_error_rates(cfg, spec.trials, spec.options))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        records,
        capacity: common_rate_capacity(&spec.params)?,
    })
}

/// Formats like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // take the exponent after rounding, which can carry into the next decade
    let sci = format!("{:.5e}", x);
    let (mantissa, e) = sci.split_once('e').expect("scientific format");
    let exp_rounded: i32 = e.parse().expect("integer exponent");
    if (-4..6).contains(&exp_rounded) {
        let decimals = (5 - exp_rounded).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp_rounded < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp_rounded.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_header(users: usize) -> String {
    let rho: Vec<String> = (0..=users).map(|i| format!("rho{i}")).collect();
    format!(
        "L,k,n_prime,n_down,{},R,R_up,R_down,relay_err,user_fn_err,e2e_err,e2e_ci95,trials,seed",
        rho.join(",")
    )
}

fn csv_row(r: &PointRecord) -> String {
    let rho: Vec<String> = r.rho.iter().map(|&x| format_sig6(x)).collect();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.users,
        r.k,
        r.n_prime,
        r.n_down,
        rho.join(","),
        format_sig6(r.rate),
        format_sig6(r.rate_up),
        format_sig6(r.rate_down),
        format_sig6(r.relay_err),
        format_sig6(r.user_fn_err),
        format_sig6(r.e2e_err),
        format_sig6(r.e2e_ci95),
        r.trials,
        r.seed
    )
}

pub fn write_csv<W: Write>(mut out: W, records: &[PointRecord]) -> Result<()> {
    let users = records.first().map_or(2, |r| r.users);
    writeln!(out, "{}", csv_header(users))?;
    for r in records {
        writeln!(out, "{}", csv_row(r))?;
    }
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Thread cap from `MWRC_THREADS`; 0 (or unset) lets rayon pick.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            Error::Parameter(format!(
                "{THREADS_ENV} must be a non-negative integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(0),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

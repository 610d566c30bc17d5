//! Functional decode-forward over the binary multi-way relay channel.
//!
//! The uplink runs `L − 1` TDMA phases of `n'` channel uses. In phase `l`
//! only users `l` and `l + 1` transmit, and the relay decodes
//! `V_{l,l+1} = W_l ⊕ W_{l+1}` with the combined code. The relay then broadcasts
//! the concatenation of all `L − 1` functions, and each user unrolls the
//! functions from its own message outward: forward to user `L`, then backward
//! to user 1.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    derived_rng, downlink_transmit, stream_id, uplink_transmit, ChannelParams, NoiseSource,
    StreamPurpose,
};
use crate::codes::{random_bitvec, CodeEnsemble, LinearCode, MAX_DECODE_BITS};
use crate::error::{check_len, Error, Result};
use crate::gf2::BitVec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub params: ChannelParams,
    /// Message bits per user.
    pub k: usize,
    /// Channel uses per uplink phase.
    pub n_prime: usize,
    /// Channel uses of the downlink broadcast.
    pub n_down: usize,
    pub seed: u64,
}

impl SessionConfig {
    /// Session with the downlink as long as the whole uplink, `n_down = (L − 1) n'`.
    pub fn new(params: ChannelParams, k: usize, n_prime: usize, seed: u64) -> Result<Self> {
        let n_down = (params.users.saturating_sub(1)) * n_prime;
        SessionConfig::with_downlink(params, k, n_prime, n_down, seed)
    }

    pub fn with_downlink(
        params: ChannelParams,
        k: usize,
        n_prime: usize,
        n_down: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = SessionConfig {
            params,
            k,
            n_prime,
            n_down,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.k == 0 || self.n_prime == 0 || self.n_down == 0 {
            return Err(Error::Parameter(format!(
                "k, n' and n_down must be positive, got k = {}, n' = {}, n_down = {}",
                self.k, self.n_prime, self.n_down
            )));
        }
        if self.downlink_message_bits() > MAX_DECODE_BITS {
            return Err(Error::Capability {
                k: self.downlink_message_bits(),
                cap: MAX_DECODE_BITS,
            });
        }
        Ok(())
    }

    pub fn users(&self) -> usize {
        self.params.users
    }

    pub fn phases(&self) -> usize {
        self.users() - 1
    }

    /// Total uplink channel uses `n = (L − 1) n'`.
    pub fn uplink_uses(&self) -> usize {
        self.phases() * self.n_prime
    }

    /// Length of the broadcast message, `(L − 1) k`.
    pub fn downlink_message_bits(&self) -> usize {
        self.params.users.saturating_sub(1) * self.k
    }

    /// Common rate `R = k / n`.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.uplink_uses() as f64
    }

    /// `k / ((L − 1) n')`, compared against `(1 − H(ρ_0)) / (L − 1)`.
    pub fn rate_up(&self) -> f64 {
        self.k as f64 / (self.phases() * self.n_prime) as f64
    }

    /// `(L − 1) k / n_down`, compared against `1 − H(ρ_i)`.
    pub fn rate_down(&self) -> f64 {
        self.downlink_message_bits() as f64 / self.n_down as f64
    }
}

/// The codes of one session: the shared-generator uplink ensemble and the
/// relay's broadcast code over `(L − 1) k`-bit messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SessionCodes {
    pub uplink: CodeEnsemble,
    pub downlink: LinearCode,
}

impl SessionCodes {
    /// Samples code draw `draw` of the session; draw 0 is the session's fixed code.
    pub fn sample(cfg: &SessionConfig, draw: u64) -> Self {
        let mut rng = derived_rng(cfg.seed, stream_id(StreamPurpose::Code, draw, 0, 0));
        let uplink = CodeEnsemble::sample(cfg.k, cfg.n_prime, cfg.users(), &mut rng);
        let downlink = LinearCode::random(cfg.downlink_message_bits(), cfg.n_down, &mut rng);
        SessionCodes { uplink, downlink }
    }

    /// The uplink ensemble of draw `draw`, identical to `sample(cfg, draw).uplink`.
    pub fn sample_uplink(cfg: &SessionConfig, draw: u64) -> CodeEnsemble {
        let mut rng = derived_rng(cfg.seed, stream_id(StreamPurpose::Code, draw, 0, 0));
        CodeEnsemble::sample(cfg.k, cfg.n_prime, cfg.users(), &mut rng)
    }

    /// False when either code maps two messages to the same codeword, in which
    /// case even a noiseless trial may decode the wrong message.
    pub fn injective(&self) -> Result<bool> {
        Ok(self.uplink.user_code(1).is_injective()? && self.downlink.is_injective()?)
    }

    fn check(&self, cfg: &SessionConfig) -> Result<()> {
        check_len("uplink code users", cfg.users(), self.uplink.users())?;
        check_len("uplink code k", cfg.k, self.uplink.k())?;
        check_len("uplink code n'", cfg.n_prime, self.uplink.n_prime())?;
        check_len(
            "downlink code k",
            cfg.downlink_message_bits(),
            self.downlink.k(),
        )?;
        check_len("downlink code n", cfg.n_down, self.downlink.n_prime())
    }
}

/// Noise streams of one trial. Link 0 phase `l` is the uplink in phase `l`;
/// link `i` phase 0 is the downlink to user `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialNoise {
    pub seed: u64,
    pub trial: u64,
}

impl TrialNoise {
    pub fn new(seed: u64, trial: u64) -> Self {
        TrialNoise { seed, trial }
    }

    pub fn uplink(&self, phase: usize) -> NoiseSource {
        NoiseSource::for_link(self.seed, self.trial, 0, phase)
    }

    pub fn downlink(&self, user: usize) -> NoiseSource {
        NoiseSource::for_link(self.seed, self.trial, user, 0)
    }
}

/// Uniform random message tuple for `trial`, drawn from its own stream.
pub fn random_messages(cfg: &SessionConfig, trial: u64) -> Vec<BitVec> {
    let mut rng = derived_rng(cfg.seed, stream_id(StreamPurpose::Messages, trial, 0, 0));
    random_message_tuple(cfg.users(), cfg.k, &mut rng)
}

pub fn random_message_tuple<R: Rng + ?Sized>(users: usize, k: usize, rng: &mut R) -> Vec<BitVec> {
    (0..users).map(|_| random_bitvec(k, rng)).collect()
}

/// Pairwise functions `V_{l,l+1}` for `l = 1..L−1`, stored 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSet {
    v: Vec<BitVec>,
}

impl FunctionSet {
    pub fn new(v: Vec<BitVec>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Parameter(
                "a function set needs at least one entry".into(),
            ));
        }
        let k = v[0].len();
        for e in &v {
            check_len("FunctionSet entry", k, e.len())?;
        }
        Ok(FunctionSet { v })
    }

    /// The true functions of a message tuple.
    pub fn from_messages(messages: &[BitVec]) -> Result<Self> {
        if messages.len() < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 messages, got {}",
                messages.len()
            )));
        }
        let v = messages
            .windows(2)
            .map(|pair| pair[0].xor(&pair[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(FunctionSet { v })
    }

    /// Splits a broadcast message back into `L − 1` functions of `k` bits.
    pub fn from_concat(concat: &BitVec, k: usize) -> Result<Self> {
        FunctionSet::new(concat.split(k)?)
    }

    pub fn entries(&self) -> &[BitVec] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn k(&self) -> usize {
        self.v[0].len()
    }

    /// `V_{l,l+1}` for 1-based `l`.
    pub fn pair(&self, l: usize) -> &BitVec {
        &self.v[l - 1]
    }

    pub fn concat(&self) -> BitVec {
        BitVec::concat(&self.v)
    }

    /// XOR of `V_{a,a+1} … V_{b−1,b}` (1-based users, `a ≤ b`), which for the
    /// true functions equals `W_a ⊕ W_b`.
    pub fn telescope(&self, a: usize, b: usize) -> BitVec {
        assert!(
            1 <= a && a <= b && b <= self.len() + 1,
            "bad telescope range {a}..{b}"
        );
        let mut acc = BitVec::zeros(self.k());
        for l in a..b {
            acc.xor_words(self.pair(l).words());
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseResult {
    pub v_hat: BitVec,
    pub error: bool,
}

/// One uplink phase: users `l` and `l + 1` transmit, everybody else sends
/// zeros, and the relay decodes `V_{l,l+1}` with the combined code.
pub fn uplink_phase(
    cfg: &SessionConfig,
    l: usize,
    w_l: &BitVec,
    w_next: &BitVec,
    codes: &CodeEnsemble,
    noise: &mut NoiseSource,
) -> Result<PhaseResult> {
    if !(1..=cfg.phases()).contains(&l) {
        return Err(Error::Parameter(format!(
            "phase index {l} out of range 1..={}",
            cfg.phases()
        )));
    }
    check_len("uplink_phase message", cfg.k, w_l.len())?;
    check_len("uplink_phase message", cfg.k, w_next.len())?;
    let (code_l, code_next) = (codes.user_code(l), codes.user_code(l + 1));
    let inputs = (1..=cfg.users())
        .map(|i| match i {
            i if i == l => code_l.encode(w_l),
            i if i == l + 1 => code_next.encode(w_next),
            _ => Ok(BitVec::zeros(cfg.n_prime)),
        })
        .collect::<Result<Vec<_>>>()?;
    let rho0 = cfg.params.uplink_rho();
    let e0 = noise.noise_vector(rho0, cfg.n_prime)?;
    let y0 = uplink_transmit(&inputs, &e0)?;
    let v_hat = code_l.combined_code(&code_next)?.ml_decode(&y0, rho0)?;
    let error = v_hat != w_l.xor(w_next)?;
    Ok(PhaseResult { v_hat, error })
}

/// Runs every uplink phase; phase `l` draws from its own noise stream.
pub fn relay_uplink(
    cfg: &SessionConfig,
    messages: &[BitVec],
    codes: &CodeEnsemble,
    noise: &TrialNoise,
) -> Result<(FunctionSet, Vec<bool>)> {
    check_len("relay_uplink messages", cfg.users(), messages.len())?;
    let mut decoded = Vec::with_capacity(cfg.phases());
    let mut errors = Vec::with_capacity(cfg.phases());
    for l in 1..=cfg.phases() {
        let r = uplink_phase(
            cfg,
            l,
            &messages[l - 1],
            &messages[l],
            codes,
            &mut noise.uplink(l),
        )?;
        decoded.push(r.v_hat);
        errors.push(r.error);
    }
    Ok((FunctionSet::new(decoded)?, errors))
}

/// The relay encodes the concatenated functions once; every user decodes its
/// own noisy copy. Returns, per user, the decoded set and whether it differs from `fs`.
pub fn downlink_broadcast(
    cfg: &SessionConfig,
    fs: &FunctionSet,
    down_code: &LinearCode,
    noise: &TrialNoise,
) -> Result<Vec<(FunctionSet, bool)>> {
    check_len(
        "downlink code k",
        cfg.downlink_message_bits(),
        down_code.k(),
    )?;
    check_len("downlink code n", cfg.n_down, down_code.n_prime())?;
    let x0 = down_code.encode(&fs.concat())?;
    (1..=cfg.users())
        .map(|i| {
            let rho = cfg.params.downlink_rho(i);
            let ei = noise.downlink(i).noise_vector(rho, cfg.n_down)?;
            let yi = downlink_transmit(&x0, &ei)?;
            let decoded = FunctionSet::from_concat(&down_code.ml_decode(&yi, rho)?, cfg.k)?;
            let error = decoded != *fs;
            Ok((decoded, error))
        })
        .collect()
}

/// Recovers every message at user `i` (1-based) from its own message and the
/// functions: first forward to user `L`, then backward to user 1.
pub fn user_recover(i: usize, w_i: &BitVec, fs: &FunctionSet) -> Result<Vec<BitVec>> {
    let users = fs.len() + 1;
    if !(1..=users).contains(&i) {
        return Err(Error::Parameter(format!(
            "user index {i} out of range 1..={users}"
        )));
    }
    check_len("user_recover message", fs.k(), w_i.len())?;
    let mut out = vec![BitVec::zeros(0); users];
    out[i - 1] = w_i.clone();
    for j in i + 1..=users {
        out[j - 1] = fs.pair(j - 1).xor(&out[j - 2])?;
    }
    for j in (1..i).rev() {
        out[j - 1] = fs.pair(j).xor(&out[j])?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub relay_phase_errors: Vec<bool>,
    pub user_function_errors: Vec<bool>,
    /// Entry `[i][j]`: user `i + 1` decoded `W_{j+1}` wrongly. The diagonal is always false.
    pub user_message_errors: Vec<Vec<bool>>,
    pub end_to_end_error: bool,
}

impl TrialOutcome {
    pub fn any_relay_error(&self) -> bool {
        self.relay_phase_errors.iter().any(|&e| e)
    }

    pub fn any_function_error(&self) -> bool {
        self.user_function_errors.iter().any(|&e| e)
    }
}

/// Uplink, broadcast and per-user recovery for one message tuple.
pub fn run_trial(
    cfg: &SessionConfig,
    messages: &[BitVec],
    codes: &SessionCodes,
    noise: &TrialNoise,
) -> Result<TrialOutcome> {
    codes.check(cfg)?;
    for w in messages {
        check_len("run_trial message", cfg.k, w.len())?;
    }
    let (relay_fs, relay_phase_errors) = relay_uplink(cfg, messages, &codes.uplink, noise)?;
    let received = downlink_broadcast(cfg, &relay_fs, &codes.downlink, noise)?;
    let users = cfg.users();
    let mut user_function_errors = Vec::with_capacity(users);
    let mut user_message_errors = Vec::with_capacity(users);
    for (idx, (fs_i, fn_err)) in received.iter().enumerate() {
        let recovered = user_recover(idx + 1, &messages[idx], fs_i)?;
        user_function_errors.push(*fn_err);
        user_message_errors.push(
            (0..users)
                .map(|j| j != idx && recovered[j] != messages[j])
                .collect::<Vec<_>>(),
        );
    }
    let end_to_end_error = user_message_errors.iter().flatten().any(|&e| e);
    Ok(TrialOutcome {
        relay_phase_errors,
        user_function_errors,
        user_message_errors,
        end_to_end_error,
    })
}

fn bitstring(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Per-trial CSV: `trial,phase_errors,user_fn_errors,e2e_error`, with the
/// flag lists written as `0`/`1` strings in phase and user order.
pub fn write_outcomes_csv<W: Write>(mut out: W, outcomes: &[(u64, TrialOutcome)]) -> Result<()> {
    writeln!(out, "trial,phase_errors,user_fn_errors,e2e_error")?;
    for (trial, o) in outcomes {
        writeln!(
            out,
            "{},{},{},{}",
            trial,
            bitstring(&o.relay_phase_errors),
            bitstring(&o.user_function_errors),
            u8::from(o.end_to_end_error)
        )?;
    }
    Ok(())
}

//! Binary-symmetric uplink and downlink models with reproducible noise.
//!
//! The uplink delivers `Y_0 = X_1 ⊕ … ⊕ X_L ⊕ E_0` to the relay and the
//! downlink delivers `Y_i = X_0 ⊕ E_i` to user `i`. Every noise process is a
//! ChaCha8 stream selected by a 64-bit stream id built from
//! `(purpose, trial, link, phase)`, so a trial's draws never depend on which
//! worker runs it or in what order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, check_probability, Error, Result};
use crate::gf2::BitVec;

/// Number of users and the crossover probability of every link.
///
/// `rho[0]` is the uplink (users to relay); `rho[i]` for `i >= 1` is the
/// downlink from the relay to user `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    #[serde(rename = "L")]
    pub users: usize,
    pub rho: Vec<f64>,
}

impl ChannelParams {
    pub fn new(users: usize, rho: Vec<f64>) -> Result<Self> {
        let p = ChannelParams { users, rho };
        p.validate()?;
        Ok(p)
    }

    /// Same crossover probability on all `users + 1` links.
    pub fn uniform(users: usize, rho: f64) -> Result<Self> {
        ChannelParams::new(users, vec![rho; users + 1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.users < 2 {
            return Err(Error::Parameter(format!(
                "need at least 2 users, got {}",
                self.users
            )));
        }
        if self.users > MAX_LINK {
            return Err(Error::Parameter(format!(
                "at most {MAX_LINK} users are supported, got {}",
                self.users
            )));
        }
        if self.rho.len() != self.users + 1 {
            return Err(Error::Parameter(format!(
                "expected {} crossover probabilities (uplink plus one per user), got {}",
                self.users + 1,
                self.rho.len()
            )));
        }
        for (i, &r) in self.rho.iter().enumerate() {
            check_probability(&format!("rho[{i}]"), r)?;
        }
        Ok(())
    }

    pub fn uplink_rho(&self) -> f64 {
        self.rho[0]
    }

    /// Crossover probability of the downlink to user `i` (1-based).
    pub fn downlink_rho(&self, user: usize) -> f64 {
        self.rho[user]
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: ChannelParams = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// What a derived random stream is used for. Distinct purposes never share a stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamPurpose {
    Noise = 0,
    Messages = 1,
    Code = 2,
}

const PURPOSE_SHIFT: u32 = 60;
const TRIAL_SHIFT: u32 = 24;
const LINK_SHIFT: u32 = 12;
pub const MAX_TRIAL: u64 = (1 << (PURPOSE_SHIFT - TRIAL_SHIFT)) - 1;
pub const MAX_LINK: usize = (1 << (TRIAL_SHIFT - LINK_SHIFT)) - 1;
pub const MAX_PHASE: usize = (1 << LINK_SHIFT) - 1;

/// Packs `(purpose, trial, link, phase)` into a ChaCha stream id.
pub fn stream_id(purpose: StreamPurpose, trial: u64, link: usize, phase: usize) -> u64 {
    assert!(
        trial <= MAX_TRIAL,
        "trial index {trial} exceeds {MAX_TRIAL}"
    );
    assert!(link <= MAX_LINK, "link index {link} exceeds {MAX_LINK}");
    assert!(
        phase <= MAX_PHASE,
        "phase index {phase} exceeds {MAX_PHASE}"
    );
    ((purpose as u64) << PURPOSE_SHIFT)
        | (trial << TRIAL_SHIFT)
        | ((link as u64) << LINK_SHIFT)
        | phase as u64
}

/// Deterministic RNG for `(master_seed, stream_id)`.
pub fn derived_rng(master_seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream_id);
    rng
}

/// An i.i.d. noise process on one link.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        NoiseSource {
            master_seed,
            stream_id,
            rng: derived_rng(master_seed, stream_id),
        }
    }

    /// Noise for `link` (0 = uplink, i = downlink to user i) in `phase` of `trial`.
    pub fn for_link(master_seed: u64, trial: u64, link: usize, phase: usize) -> Self {
        NoiseSource::new(
            master_seed,
            stream_id(StreamPurpose::Noise, trial, link, phase),
        )
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Next `len` Bernoulli(`rho`) bits from this stream.
    pub fn noise_vector(&mut self, rho: f64, len: usize) -> Result<BitVec> {
        check_probability("rho", rho)?;
        let rng = &mut self.rng;
        Ok(BitVec::from_bools((0..len).map(|_| rng.random_bool(rho))))
    }
}

/// `Y_0 = X_1 ⊕ … ⊕ X_L ⊕ E_0`.
pub fn uplink_transmit(inputs: &[BitVec], e0: &BitVec) -> Result<BitVec> {
    let mut y = e0.clone();
    for x in inputs {
        check_len("uplink_transmit", e0.len(), x.len())?;
        y.xor_assign(x)?;
    }
    Ok(y)
}

/// `Y_i = X_0 ⊕ E_i`.
pub fn downlink_transmit(x0: &BitVec, ei: &BitVec) -> Result<BitVec> {
    check_len("downlink_transmit", x0.len(), ei.len())?;
    x0.xor(ei)
}

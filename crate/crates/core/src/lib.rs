//! Functional decode-forward for the binary multi-way relay channel.
//!
//! `L` users exchange `k`-bit messages through a relay. The uplink is a
//! binary adder channel with BSC noise, the downlink a BSC broadcast. The
//! relay decodes XORs of adjacent users' messages over `L − 1` TDMA phases
//! using a shared random linear code, and broadcasts them back; every user
//! then recovers all messages from its own.
//!
//! Modules:
//! - [`gf2`]: packed bit vectors and GF(2) products.
//! - [`channel`]: link models and seeded noise streams.
//! - [`codes`]: dithered random linear codes and exhaustive ML decoding.
//! - [`fdf`]: the relay protocol and per-trial simulation.
//! - [`capacity`]: entropy, BSC capacity, common-rate capacity, baseline rate.
//! - [`harness`]: Monte Carlo estimates, sweeps and CSV/JSON output.
//! - [`cli`]: the `mwrc` command-line tool.

pub mod capacity;
pub mod channel;
pub mod cli;
pub mod codes;
mod error;
pub mod fdf;
pub mod gf2;
pub mod harness;

pub use error::{Error, Result};
pub use gf2::{BitMatrix, BitVec};

//! Dithered random linear block codes, `X(w) = (w ⊙ G) ⊕ q`.
//!
//! All users share one generator matrix `G` and hold their own dither `q`.
//! Because encoding is affine, `X_i(w_i) ⊕ X_j(w_j)` is the codeword of
//! `w_i ⊕ w_j` under the same `G` with dither `q_i ⊕ q_j`; the relay decodes
//! with that combined code. Decoding is exhaustive maximum likelihood over all
//! `2^k` messages.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{derived_rng, stream_id, StreamPurpose};
use crate::error::{check_len, check_probability, Error, Result};
use crate::gf2::{distance_words, BitMatrix, BitVec};

/// Largest message length the exhaustive decoder accepts.
pub const MAX_DECODE_BITS: usize = 20;

pub fn random_bitvec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BitVec {
    BitVec::from_bools((0..len).map(|_| rng.random::<bool>()))
}

pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> BitMatrix {
    let rows = (0..rows).map(|_| random_bitvec(cols, rng)).collect();
    BitMatrix::from_rows(cols, rows).expect("rows are generated with the requested width")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearCode {
    g: Arc<BitMatrix>,
    dither: BitVec,
}

impl LinearCode {
    pub fn new(g: Arc<BitMatrix>, dither: BitVec) -> Result<Self> {
        check_len("LinearCode::new", g.cols(), dither.len())?;
        Ok(LinearCode { g, dither })
    }

    /// A code with an i.i.d. uniform generator and dither.
    pub fn random<R: Rng + ?Sized>(k: usize, n_prime: usize, rng: &mut R) -> Self {
        let g = Arc::new(random_matrix(k, n_prime, rng));
        let dither = random_bitvec(n_prime, rng);
        LinearCode { g, dither }
    }

    pub fn k(&self) -> usize {
        self.g.rows()
    }

    pub fn n_prime(&self) -> usize {
        self.g.cols()
    }

    pub fn generator(&self) -> &Arc<BitMatrix> {
        &self.g
    }

    pub fn dither(&self) -> &BitVec {
        &self.dither
    }

    pub fn encode(&self, w: &BitVec) -> Result<BitVec> {
        check_len("encode", self.k(), w.len())?;
        let mut x = self.g.left_mul(w)?;
        x.xor_words(self.dither.words());
        Ok(x)
    }

    /// The code seen by a receiver of `X_i ⊕ X_j`: same generator, dither `q_i ⊕ q_j`.
    pub fn combined_code(&self, other: &LinearCode) -> Result<LinearCode> {
        if !Arc::ptr_eq(&self.g, &other.g) && self.g != other.g {
            return Err(Error::GeneratorMismatch);
        }
        Ok(LinearCode {
            g: Arc::clone(&self.g),
            dither: self.dither.xor(&other.dither)?,
        })
    }

    /// True when the `2^k` codewords are pairwise distinct, i.e. no nonzero
    /// message maps to the zero vector under `G`.
    pub fn is_injective(&self) -> Result<bool> {
        self.check_decodable()?;
        let mut word = BitVec::zeros(self.n_prime());
        for i in 1u64..(1u64 << self.k()) {
            word.xor_words(self.g.row(i.trailing_zeros() as usize).words());
            if word.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn check_decodable(&self) -> Result<()> {
        if self.k() > MAX_DECODE_BITS {
            return Err(Error::Capability {
                k: self.k(),
                cap: MAX_DECODE_BITS,
            });
        }
        Ok(())
    }

    /// Maximum-likelihood decoding of `y` over a BSC with crossover `rho`.
    ///
    /// Minimizes Hamming distance when `rho < 0.5` and maximizes it when
    /// `rho > 0.5`. Ties go to the smallest message (bit 0 least significant);
    /// at `rho == 0.5` every message ties, so the all-zero message is returned.
    pub fn ml_decode(&self, y: &BitVec, rho: f64) -> Result<BitVec> {
        self.check_decodable()?;
        check_len("ml_decode", self.n_prime(), y.len())?;
        check_probability("rho", rho)?;
        let k = self.k();
        if rho == 0.5 {
            return Ok(BitVec::zeros(k));
        }
        let n = self.n_prime();
        let prefer_far = rho > 0.5;

        // Walk messages in Gray-code order so each step flips one row into the codeword.
        let mut codeword = self.dither.clone();
        let score = |d: usize| if prefer_far { n - d } else { d };
        let mut best_score = score(distance_words(codeword.words(), y.words()));
        let mut best_msg = 0u64;
        for i in 1u64..(1u64 << k) {
            codeword.xor_words(self.g.row(i.trailing_zeros() as usize).words());
            let msg = i ^ (i >> 1);
            let s = score(distance_words(codeword.words(), y.words()));
            if s < best_score || (s == best_score && msg < best_msg) {
                best_score = s;
                best_msg = msg;
            }
        }
        Ok(BitVec::from_u64(best_msg, k))
    }
}

/// Parameters for sampling one shared generator and `users` dithers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeEnsembleSpec {
    pub k: usize,
    pub n_prime: usize,
    pub users: usize,
    pub seed: u64,
}

/// One generator shared by every user, plus a dither per user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeEnsemble {
    g: Arc<BitMatrix>,
    dithers: Vec<BitVec>,
}

pub fn build_ensemble(spec: &CodeEnsembleSpec) -> Result<CodeEnsemble> {
    if spec.k == 0 || spec.n_prime == 0 {
        return Err(Error::Parameter(format!(
            "code dimensions must be positive, got k = {}, n' = {}",
            spec.k, spec.n_prime
        )));
    }
    if spec.users < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 users, got {}",
            spec.users
        )));
    }
    let mut rng = derived_rng(spec.seed, stream_id(StreamPurpose::Code, 0, 0, 0));
    Ok(CodeEnsemble::sample(
        spec.k,
        spec.n_prime,
        spec.users,
        &mut rng,
    ))
}

impl CodeEnsemble {
    /// Draws the generator first, then the dithers of users `1..=users` in order.
    pub fn sample<R: Rng + ?Sized>(k: usize, n_prime: usize, users: usize, rng: &mut R) -> Self {
        let g = Arc::new(random_matrix(k, n_prime, rng));
        let dithers = (0..users).map(|_| random_bitvec(n_prime, rng)).collect();
        CodeEnsemble { g, dithers }
    }

    pub fn generator(&self) -> &Arc<BitMatrix> {
        &self.g
    }

    pub fn dithers(&self) -> &[BitVec] {
        &self.dithers
    }

    pub fn users(&self) -> usize {
        self.dithers.len()
    }

    pub fn k(&self) -> usize {
        self.g.rows()
    }

    pub fn n_prime(&self) -> usize {
        self.g.cols()
    }

    /// Code of user `i` (1-based).
    pub fn user_code(&self, user: usize) -> LinearCode {
        assert!(
            (1..=self.users()).contains(&user),
            "user {user} out of range 1..={}",
            self.users()
        );
        LinearCode {
            g: Arc::clone(&self.g),
            dither: self.dithers[user - 1].clone(),
        }
    }

    pub fn codes(&self) -> Vec<LinearCode> {
        (1..=self.users()).map(|i| self.user_code(i)).collect()
    }

    pub fn to_artifact(&self) -> CodeArtifact {
        CodeArtifact {
            k: self.k(),
            n_prime: self.n_prime(),
            generator: self.g.row_iter().map(BitVec::to_hex).collect(),
            dithers: self.dithers.iter().map(BitVec::to_hex).collect(),
        }
    }
}

/// JSON provenance record of a sampled ensemble. Rows and dithers are hex
/// strings of `n_prime` bits each.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeArtifact {
    pub k: usize,
    pub n_prime: usize,
    pub generator: Vec<String>,
    pub dithers: Vec<String>,
}

impl CodeArtifact {
    pub fn to_ensemble(&self) -> Result<CodeEnsemble> {
        check_len("CodeArtifact generator rows", self.k, self.generator.len())?;
        let rows = self
            .generator
            .iter()
            .map(|h| BitVec::from_hex(h, self.n_prime))
            .collect::<Result<Vec<_>>>()?;
        let dithers = self
            .dithers
            .iter()
            .map(|h| BitVec::from_hex(h, self.n_prime))
            .collect::<Result<Vec<_>>>()?;
        Ok(CodeEnsemble {
            g: Arc::new(BitMatrix::from_rows(self.n_prime, rows)?),
            dithers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(k: usize, n_prime: usize, seed: u64) -> CodeEnsembleSpec {
        CodeEnsembleSpec {
            k,
            n_prime,
            users: 3,
            seed,
        }
    }

    /// Independent scorer: likelihood rho^d (1-rho)^(n-d) evaluated per message,
    /// scanning messages in plain integer order.
    fn brute_force_decode(code: &LinearCode, y: &BitVec, rho: f64) -> u64 {
        let n = code.n_prime() as i32;
        let mut best = (f64::NEG_INFINITY, 0u64);
        for m in 0..(1u64 << code.k()) {
            let mut x = code.dither().clone();
            for j in 0..code.k() {
                if (m >> j) & 1 == 1 {
                    for t in 0..code.n_prime() {
                        if code.generator().row(j).get(t) {
                            x.set(t, !x.get(t));
                        }
                    }
                }
            }
            let d = (0..code.n_prime())
                .filter(|&t| x.get(t) != y.get(t))
                .count() as i32;
            let ll = rho.powi(d) * (1.0 - rho).powi(n - d);
            if ll > best.0 {
                best = (ll, m);
            }
        }
        best.1
    }

    fn min_distance(code: &LinearCode) -> usize {
        (1..(1u64 << code.k()))
            .map(|m| {
                code.generator()
                    .left_mul(&BitVec::from_u64(m, code.k()))
                    .unwrap()
                    .count_ones()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn ensemble_is_deterministic_and_shaped() {
        let a = build_ensemble(&spec(4, 16, 11)).unwrap();
        let b = build_ensemble(&spec(4, 16, 11)).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.generator().rows(), a.generator().cols()), (4, 16));
        assert!(a.dithers().iter().all(|d| d.len() == 16));
        assert_eq!(a.users(), 3);
        assert_ne!(a.dithers()[0], a.dithers()[1]);
        assert_ne!(a, build_ensemble(&spec(4, 16, 12)).unwrap());
    }

    #[test]
    fn ensemble_rejects_bad_parameters() {
        assert!(build_ensemble(&spec(0, 16, 1)).is_err());
        assert!(build_ensemble(&spec(4, 0, 1)).is_err());
        let mut s = spec(4, 16, 1);
        s.users = 1;
        assert!(build_ensemble(&s).is_err());
    }

    #[test]
    fn generator_entries_are_balanced() {
        // 10^4 entries, Binomial(10^4, 1/2): 3 sigma = 0.015
        let e = build_ensemble(&spec(100, 100, 5)).unwrap();
        let ones: usize = e.generator().row_iter().map(BitVec::count_ones).sum();
        let frac = ones as f64 / 1e4;
        assert!((0.485..=0.515).contains(&frac), "fraction {frac}");
    }

    #[test]
    fn encode_examples() {
        let e = build_ensemble(&spec(4, 16, 3)).unwrap();
        let c = e.user_code(1);
        assert_eq!(c.encode(&BitVec::zeros(4)).unwrap(), *c.dither());
        let undithered = LinearCode::new(Arc::clone(e.generator()), BitVec::zeros(16)).unwrap();
        for j in 0..4 {
            let mut w = BitVec::zeros(4);
            w.set(j, true);
            assert_eq!(undithered.encode(&w).unwrap(), *e.generator().row(j));
        }
        assert!(c.encode(&BitVec::zeros(5)).is_err());
    }

    #[test]
    fn combined_code_properties() {
        let e = build_ensemble(&spec(6, 20, 8)).unwrap();
        let (c1, c2) = (e.user_code(1), e.user_code(2));
        assert!(c1.combined_code(&c1).unwrap().dither().is_zero());
        assert_eq!(
            c1.combined_code(&c2).unwrap(),
            c2.combined_code(&c1).unwrap()
        );
        let c12 = c1.combined_code(&c2).unwrap();
        for a in 0..64u64 {
            for b in 0..64u64 {
                let (w1, w2) = (BitVec::from_u64(a, 6), BitVec::from_u64(b, 6));
                let lhs = c1
                    .encode(&w1)
                    .unwrap()
                    .xor(&c2.encode(&w2).unwrap())
                    .unwrap();
                assert_eq!(lhs, c12.encode(&w1.xor(&w2).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn combined_code_requires_shared_generator() {
        let a = build_ensemble(&spec(4, 16, 1)).unwrap().user_code(1);
        let b = build_ensemble(&spec(4, 16, 2)).unwrap().user_code(1);
        assert!(matches!(a.combined_code(&b), Err(Error::GeneratorMismatch)));
        // equal matrices in separate allocations still combine
        let a2 = build_ensemble(&spec(4, 16, 1)).unwrap().user_code(2);
        assert!(a.combined_code(&a2).is_ok());
    }

    #[test]
    fn decode_noiseless_codewords() {
        let mut checked = 0;
        for seed in 0..20 {
            let c = build_ensemble(&spec(5, 16, seed)).unwrap().user_code(2);
            if !c.is_injective().unwrap() {
                continue;
            }
            checked += 1;
            for m in 0..32 {
                let w = BitVec::from_u64(m, 5);
                let y = c.encode(&w).unwrap();
                assert_eq!(c.ml_decode(&y, 0.0).unwrap(), w);
                assert_eq!(c.ml_decode(&y, 0.2).unwrap(), w);
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn decode_corrects_single_flip_when_distance_allows() {
        let code = (0..200)
            .map(|seed| build_ensemble(&spec(4, 16, seed)).unwrap().user_code(1))
            .find(|c| min_distance(c) >= 3)
            .expect("some sampled code has minimum distance >= 3");
        for m in 0..16 {
            let w = BitVec::from_u64(m, 4);
            let x = code.encode(&w).unwrap();
            for t in 0..16 {
                let mut y = x.clone();
                y.set(t, !y.get(t));
                assert_eq!(code.ml_decode(&y, 0.1).unwrap(), w);
            }
        }
    }

    #[test]
    fn decode_matches_brute_force_scorer() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for seed in 0..5 {
            let c = build_ensemble(&spec(4, 12, seed)).unwrap().user_code(1);
            for _ in 0..100 {
                let y = random_bitvec(12, &mut rng);
                for rho in [0.05, 0.3, 0.7] {
                    let got = c.ml_decode(&y, rho).unwrap().to_u64();
                    assert_eq!(got, brute_force_decode(&c, &y, rho), "rho {rho}");
                }
            }
        }
    }

    #[test]
    fn decode_half_rho_returns_zero_message() {
        let c = build_ensemble(&spec(4, 12, 1)).unwrap().user_code(1);
        let y = c.encode(&BitVec::from_u64(9, 4)).unwrap();
        assert_eq!(c.ml_decode(&y, 0.5).unwrap(), BitVec::zeros(4));
    }

    #[test]
    fn decode_far_codeword_above_half() {
        let c = build_ensemble(&spec(4, 12, 1)).unwrap().user_code(1);
        let w = BitVec::from_u64(6, 4);
        let mut y = c.encode(&w).unwrap();
        y.xor_assign(&BitVec::ones(12)).unwrap();
        if c.is_injective().unwrap() {
            assert_eq!(c.ml_decode(&y, 1.0).unwrap(), w);
        }
    }

    #[test]
    fn decode_errors() {
        let c = build_ensemble(&spec(4, 12, 1)).unwrap().user_code(1);
        assert!(matches!(
            c.ml_decode(&BitVec::zeros(11), 0.1),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(c.ml_decode(&BitVec::zeros(12), 1.1).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let big = LinearCode::random(21, 30, &mut rng);
        assert!(matches!(
            big.ml_decode(&BitVec::zeros(30), 0.1),
            Err(Error::Capability { k: 21, cap: 20 })
        ));
    }

    #[test]
    fn injectivity_detects_dependent_rows() {
        let r = BitVec::parse_bits("10110").unwrap();
        let g = BitMatrix::from_rows(5, vec![r.clone(), BitVec::parse_bits("01100").unwrap(), r])
            .unwrap();
        let c = LinearCode::new(Arc::new(g), BitVec::zeros(5)).unwrap();
        assert!(!c.is_injective().unwrap());
        // ties resolve to the smaller message: 001 and 100 share a codeword
        let y = c.encode(&BitVec::from_u64(4, 3)).unwrap();
        assert_eq!(c.ml_decode(&y, 0.1).unwrap().to_u64(), 1);
    }

    #[test]
    fn artifact_roundtrip() {
        let e = build_ensemble(&spec(5, 70, 4)).unwrap();
        let json = serde_json::to_string(&e.to_artifact()).unwrap();
        let back: CodeArtifact = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_ensemble().unwrap(), e);
    }
}

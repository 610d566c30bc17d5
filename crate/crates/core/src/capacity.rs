//! Closed-form rates for the binary multi-way relay channel.

use serde::Serialize;

use crate::channel::ChannelParams;
use crate::error::{check_probability, Result};

/// `H(ρ) = −ρ log₂ ρ − (1−ρ) log₂(1−ρ)`, with `0 · log 0 = 0`.
pub fn binary_entropy(rho: f64) -> Result<f64> {
    check_probability("rho", rho)?;
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    Ok(term(rho) + term(1.0 - rho))
}

/// Capacity of a binary symmetric channel, `1 − H(ρ)`.
pub fn bsc_capacity(rho: f64) -> Result<f64> {
    Ok(1.0 - binary_entropy(rho)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub users: usize,
    pub rho: Vec<f64>,
    /// `(1 − max_i H(ρ_i)) / (L − 1)`.
    pub capacity: f64,
    /// Smallest right-hand side over the 2L cut constraints.
    pub upper_bound: f64,
    /// `(1 − H(ρ_i)) / (L − 1)` for `i = 0..=L`.
    pub per_link_constraints: Vec<f64>,
    /// First link index attaining the minimum.
    pub bottleneck_link: usize,
    /// Complete-decode-forward baseline (this artifact's variant).
    pub cdf_baseline_rate: f64,
}

fn per_link_constraints(params: &ChannelParams) -> Result<Vec<f64>> {
    let share = (params.users - 1) as f64;
    params
        .rho
        .iter()
        .map(|&r| Ok(bsc_capacity(r)? / share))
        .collect()
}

/// Cut-set bound: for every user `i`, the cut `{all users but i} | {relay, i}`
/// is limited by the uplink and the cut `{relay, others} | {i}` by downlink `i`.
/// Uniform inputs maximize both, leaving `1 − H(ρ)` across each cut, shared by
/// the `L − 1` messages that cross it.
fn cut_set_bound(params: &ChannelParams) -> Result<f64> {
    let share = (params.users - 1) as f64;
    let uplink = bsc_capacity(params.uplink_rho())? / share;
    (1..=params.users).try_fold(f64::INFINITY, |bound, i| {
        let downlink = bsc_capacity(params.downlink_rho(i))? / share;
        Ok(bound.min(uplink).min(downlink))
    })
}

pub fn common_rate_capacity(params: &ChannelParams) -> Result<RateReport> {
    params.validate()?;
    let share = (params.users - 1) as f64;
    let per_link = per_link_constraints(params)?;
    let max_entropy = params
        .rho
        .iter()
        .map(|&r| binary_entropy(r))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let min_constraint = per_link.iter().copied().fold(f64::INFINITY, f64::min);
    let bottleneck_link = per_link
        .iter()
        .position(|&c| c == min_constraint)
        .expect("per-link constraints are non-empty");
    Ok(RateReport {
        users: params.users,
        rho: params.rho.clone(),
        capacity: (1.0 - max_entropy) / share,
        upper_bound: cut_set_bound(params)?,
        per_link_constraints: per_link,
        bottleneck_link,
        cdf_baseline_rate: cdf_baseline_rate(params)?,
    })
}

/// Rate of a complete-decode-forward variant: the uplink is split into `L`
/// single-user slots so the relay decodes each message on its own, then the
/// relay broadcasts the same `L − 1` pairwise functions as functional
/// decode-forward does.
pub fn cdf_baseline_rate(params: &ChannelParams) -> Result<f64> {
    params.validate()?;
    let users = params.users as f64;
    let uplink = bsc_capacity(params.uplink_rho())? / users;
    let downlink = (1..=params.users).try_fold(f64::INFINITY, |acc, i| {
        Ok::<_, crate::Error>(acc.min(bsc_capacity(params.downlink_rho(i))? / (users - 1.0)))
    })?;
    Ok(uplink.min(downlink))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89 = 0.350287 + 0.149631
        assert!((binary_entropy(0.11).unwrap() - 0.49993).abs() < 1e-4);
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(1.01).is_err());
    }

    #[test]
    fn bsc_capacity_examples() {
        assert_eq!(bsc_capacity(0.0).unwrap(), 1.0);
        assert_eq!(bsc_capacity(0.5).unwrap(), 0.0);
        assert!((bsc_capacity(0.05).unwrap() - 0.71360).abs() < 1e-4);
    }

    #[test]
    fn capacity_examples() {
        let r = common_rate_capacity(&ChannelParams::uniform(2, 0.0).unwrap()).unwrap();
        assert_eq!(r.capacity, 1.0);
        assert_eq!(r.upper_bound, 1.0);

        let r = common_rate_capacity(&ChannelParams::uniform(3, 0.1).unwrap()).unwrap();
        assert!((r.capacity - 0.26550).abs() < 1e-4);

        let r =
            common_rate_capacity(&ChannelParams::new(4, vec![0.1, 0.2, 0.5, 0.0, 0.1]).unwrap())
                .unwrap();
        assert_eq!(r.capacity, 0.0);
        assert_eq!(r.bottleneck_link, 2);
        assert_eq!(r.per_link_constraints.len(), 5);
    }

    #[test]
    fn bottleneck_is_first_minimizer() {
        let r = common_rate_capacity(&ChannelParams::new(3, vec![0.01, 0.2, 0.05, 0.2]).unwrap())
            .unwrap();
        assert_eq!(r.bottleneck_link, 1);
        assert_eq!(r.capacity, r.per_link_constraints[1]);
    }

    #[test]
    fn baseline_examples() {
        let p = ChannelParams::uniform(2, 0.0).unwrap();
        assert_eq!(cdf_baseline_rate(&p).unwrap(), 0.5);
        let p = ChannelParams::new(3, vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(cdf_baseline_rate(&p).unwrap(), 0.0);
        let p = ChannelParams::uniform(3, 0.05).unwrap();
        let base = cdf_baseline_rate(&p).unwrap();
        let cap = common_rate_capacity(&p).unwrap().capacity;
        assert!((base - 0.23787).abs() < 1e-4);
        assert!((cap - 0.35680).abs() < 1e-4);
        assert!(base < cap);
    }

    fn arb_params() -> impl Strategy<Value = ChannelParams> {
        (2usize..9).prop_flat_map(|l| {
            prop::collection::vec(0.0f64..=1.0, l + 1)
                .prop_map(move |rho| ChannelParams::new(l, rho).unwrap())
        })
    }

    proptest! {
        #[test]
        fn entropy_symmetric_and_bounded(p in 0.0f64..=1.0) {
            let h = binary_entropy(p).unwrap();
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!((h - binary_entropy(1.0 - p).unwrap()).abs() < 1e-12);
            if (p - 0.5).abs() > 1e-6 {
                prop_assert!(h < 1.0);
            }
        }

        #[test]
        fn min_and_max_forms_agree(params in arb_params()) {
            let r = common_rate_capacity(&params).unwrap();
            let min_form = r.per_link_constraints.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(r.capacity, min_form);
            prop_assert_eq!(r.capacity, r.upper_bound);
            prop_assert!(r.cdf_baseline_rate <= r.capacity);
        }

        #[test]
        fn capacity_monotone_in_noise(params in arb_params(), link in 0usize..9, bump in 0.0f64..0.5) {
            let mut params = params;
            let link = link % params.rho.len();
            params.rho.iter_mut().for_each(|r| *r = r.min(1.0 - *r));
            let before = common_rate_capacity(&params).unwrap().capacity;
            params.rho[link] = (params.rho[link] + bump).min(0.5);
            let after = common_rate_capacity(&params).unwrap().capacity;
            prop_assert!(after <= before);
        }

        #[test]
        fn capacity_monotone_in_users(rho in 0.0f64..=0.5, l in 2usize..8) {
            let a = common_rate_capacity(&ChannelParams::uniform(l, rho).unwrap()).unwrap().capacity;
            let b = common_rate_capacity(&ChannelParams::uniform(l + 1, rho).unwrap()).unwrap().capacity;
            prop_assert!(b <= a);
        }
    }
}

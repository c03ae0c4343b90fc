//! Uplink decoding probability under Nakagami-m block fading.
//!
//! The received SNR is `P |h|^2 d^-α / σ²` with `|h|^2 ~ Gamma(m, 1/m)`, so a
//! packet decodes when `|h|^2 ≥ ψ = γ̄ σ² d^α / P`, which happens with
//! probability `Q(m, m ψ)`.

use crate::config::ChannelParams;
use crate::error::{Error, Result};
use crate::special::gamma_q;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkResult {
    /// Fading power the link needs to clear the decoding threshold.
    pub psi: f64,
    pub success_prob: f64,
}

fn check_power(tx_power: f64) -> Result<()> {
    if tx_power > 0.0 && !tx_power.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "transmit power must be positive, got {tx_power}"
        )))
    }
}

pub fn fading_threshold(channel: &ChannelParams, tx_power: f64) -> Result<f64> {
    check_power(tx_power)?;
    Ok(channel.snr_threshold * channel.noise_power * channel.distance.powf(channel.pathloss_exp)
        / tx_power)
}

/// Probability that an uplink packet sent at `tx_power` is decoded.
pub fn uplink_success_prob(channel: &ChannelParams, tx_power: f64) -> Result<f64> {
    Ok(uplink(channel, tx_power)?.success_prob)
}

pub fn uplink(channel: &ChannelParams, tx_power: f64) -> Result<UplinkResult> {
    let psi = fading_threshold(channel, tx_power)?;
    let success_prob = gamma_q(channel.shape, channel.shape * psi).clamp(0.0, 1.0);
    Ok(UplinkResult { psi, success_prob })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;

    fn default_channel() -> ChannelParams {
        SystemConfig::default().channel
    }

    #[test]
    fn threshold_at_default_channel() {
        let psi = fading_threshold(&default_channel(), 0.05).unwrap();
        // 10^0.5 * 1e-8 * 50^3 / 0.05 = 0.025 * sqrt(10)
        assert!((psi - 0.025 * 10f64.sqrt()).abs() < 1e-15);
        assert!((psi - 0.079_056_9).abs() < 1e-7);
    }

    #[test]
    fn threshold_scales_inversely_with_power() {
        let ch = default_channel();
        let a = fading_threshold(&ch, 0.3).unwrap();
        let b = fading_threshold(&ch, 0.6).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
        assert!(fading_threshold(&ch, 1e12).unwrap() < 1e-12);
    }

    #[test]
    fn rayleigh_success_is_exponential() {
        let r = uplink(&default_channel(), 0.05).unwrap();
        assert!((r.success_prob - (-r.psi).exp()).abs() < 1e-15);
        assert!((r.success_prob - 0.92399).abs() < 1e-5);
    }

    #[test]
    fn shape_two_closed_form() {
        // m = 2, psi = 0.5  ->  Q(2, 1) = 2/e
        let mut ch = default_channel();
        ch.shape = 2.0;
        let power = fading_threshold(&ch, 1.0).unwrap() / 0.5;
        let p = uplink_success_prob(&ch, power).unwrap();
        assert!((p - 2.0 / std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_power_is_domain_error() {
        let ch = default_channel();
        assert!(matches!(fading_threshold(&ch, 0.0), Err(Error::Domain(_))));
        assert!(matches!(uplink_success_prob(&ch, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn monotone_over_grid() {
        let base = default_channel();
        for &m in &[0.5, 1.0, 2.5, 4.0] {
            let mut ch = base.clone();
            ch.shape = m;
            let powers: Vec<f64> = (0..30).map(|i| 1e-3 * 1.3f64.powi(i)).collect();
            let ps: Vec<f64> = powers
                .iter()
                .map(|&p| uplink_success_prob(&ch, p).unwrap())
                .collect();
            assert!(ps.windows(2).all(|w| w[1] > w[0] || w[1] == 1.0), "m={m}");

            let mut prev = 1.0;
            for i in 0..20 {
                let mut far = ch.clone();
                far.distance = 10.0 + 10.0 * i as f64;
                let p = uplink_success_prob(&far, 0.01).unwrap();
                assert!(p < prev);
                prev = p;
            }
            for (noise, thr) in [(1e-9, 1.0), (1e-8, 1.0), (1e-8, 3.0), (1e-7, 3.0)] {
                let mut c = ch.clone();
                c.noise_power = noise;
                c.snr_threshold = thr;
                let p1 = uplink_success_prob(&c, 0.01).unwrap();
                c.noise_power *= 2.0;
                let p2 = uplink_success_prob(&c, 0.01).unwrap();
                c.noise_power /= 2.0;
                c.snr_threshold *= 2.0;
                let p3 = uplink_success_prob(&c, 0.01).unwrap();
                assert!(p2 < p1 && p3 < p1);
            }
        }
    }
}

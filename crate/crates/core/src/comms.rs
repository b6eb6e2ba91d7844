//! Communication phase: path loss, sum rate and the Lagrangian reward.

use crate::error::{IsacError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommConfig {
    /// Bandwidth B (Hz).
    pub bandwidth: f64,
    /// Transmit power P_t (W).
    pub tx_power: f64,
    /// Noise amplitude; noise power is its square.
    pub noise_sigma: f64,
    /// Reference distance d0 (m).
    pub ref_distance: f64,
    /// Path-loss exponent η.
    pub pathloss_eta: f64,
    /// Cosine-power exponent of the communication beam.
    pub beam_exponent: f64,
}

impl CommConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("bandwidth", self.bandwidth),
            ("tx_power", self.tx_power),
            ("noise_sigma", self.noise_sigma),
            ("d0", self.ref_distance),
            ("pathloss_eta", self.pathloss_eta),
            ("beam_exponent_comm", self.beam_exponent),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(IsacError::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// `(d0 / d)^(η/2)`.
pub fn path_loss(d: f64, cfg: &CommConfig) -> Result<f64> {
    if !(d > 0.0) {
        return Err(IsacError::DegenerateGeometry("path loss at non-positive distance"));
    }
    Ok((cfg.ref_distance / d).powf(cfg.pathloss_eta / 2.0))
}

/// Spectral efficiency of one link in bit/s/Hz.
pub fn link_efficiency(d: f64, misalignment_loss: f64, cfg: &CommConfig) -> Result<f64> {
    let gain = cfg.tx_power * path_loss(d, cfg)? * misalignment_loss;
    Ok((1.0 + gain / (cfg.noise_sigma * cfg.noise_sigma)).log2())
}

/// Per-target rate terms `tau_c · B · log2(1 + P L L_bm / σ²)`.
pub fn per_target_rates(tau_c: f64, targets: &[(f64, f64)], cfg: &CommConfig) -> Result<Vec<f64>> {
    targets
        .iter()
        .map(|&(d, loss)| Ok(tau_c * cfg.bandwidth * link_efficiency(d, loss, cfg)?))
        .collect()
}

/// Sum rate over `(distance, misalignment loss)` pairs.
pub fn sum_rate(tau_c: f64, targets: &[(f64, f64)], cfg: &CommConfig) -> Result<f64> {
    let efficiency: f64 = targets
        .iter()
        .map(|&(d, loss)| link_efficiency(d, loss, cfg))
        .sum::<Result<f64>>()?;
    Ok(tau_c * cfg.bandwidth * efficiency)
}

/// Time left for communication after the dwells; never negative.
pub fn communication_time(revisit_interval: f64, dwell_sum: f64) -> f64 {
    (revisit_interval - dwell_sum).max(0.0)
}

/// `rate - λ (Σ dwell - T0)`. The surplus is not clamped.
pub fn lagrangian_reward(rate: f64, lambda: f64, dwell_sum: f64, revisit_interval: f64) -> f64 {
    rate - lambda * (dwell_sum - revisit_interval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn table() -> CommConfig {
        CommConfig {
            bandwidth: 500.0,
            tx_power: 1.0,
            noise_sigma: 0.1,
            ref_distance: 500.0,
            pathloss_eta: 2.0,
            beam_exponent: 4.0,
        }
    }

    #[test]
    fn path_loss_values() {
        let mut c = table();
        assert_eq!(path_loss(500.0, &c).unwrap(), 1.0);
        assert_abs_diff_eq!(path_loss(1000.0, &c).unwrap(), 0.5, epsilon = 1e-15);
        c.pathloss_eta = 4.0;
        assert_abs_diff_eq!(path_loss(125.0, &c).unwrap(), 16.0, epsilon = 1e-12);
        assert!(path_loss(0.0, &c).is_err());
    }

    #[test]
    fn sum_rate_values() {
        let c = table();
        assert_eq!(sum_rate(0.0, &[(400.0, 1.0), (900.0, 0.5)], &c).unwrap(), 0.0);
        let expected = 1.5 * 500.0 * 101f64.log2();
        assert_abs_diff_eq!(sum_rate(1.5, &[(500.0, 1.0)], &c).unwrap(), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(expected, 4993.7, epsilon = 0.05);
        assert_eq!(sum_rate(2.0, &[(400.0, 0.0), (900.0, 0.0)], &c).unwrap(), 0.0);
        assert_eq!(sum_rate(2.0, &[], &c).unwrap(), 0.0);
    }

    #[test]
    fn reward_values() {
        assert_eq!(lagrangian_reward(466.37, 100.0, 3.0, 3.0), 466.37);
        assert_abs_diff_eq!(lagrangian_reward(466.37, 100.0, 3.3, 3.0), 436.37, epsilon = 1e-9);
        assert_eq!(lagrangian_reward(466.37, 0.0, 5.0, 3.0), 466.37);
        assert_eq!(communication_time(3.0, 3.6), 0.0);
        assert_abs_diff_eq!(communication_time(3.0, 1.2), 1.8, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn linear_in_comm_time(t in 0.0f64..3.0, d in 10.0f64..5000.0, l in 0.0f64..1.0) {
            let c = table();
            let one = sum_rate(t, &[(d, l)], &c).unwrap();
            let two = sum_rate(2.0 * t, &[(d, l)], &c).unwrap();
            prop_assert!((two - 2.0 * one).abs() <= 1e-9 * two.abs().max(1.0));
        }

        #[test]
        fn monotone_in_distance_and_loss(d1 in 10.0f64..5000.0, d2 in 10.0f64..5000.0,
                                         l1 in 0.0f64..1.0, l2 in 0.0f64..1.0) {
            let c = table();
            let (dn, df) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let (ll, lh) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
            prop_assert!(sum_rate(1.0, &[(dn, 0.7)], &c).unwrap() >= sum_rate(1.0, &[(df, 0.7)], &c).unwrap());
            prop_assert!(sum_rate(1.0, &[(900.0, lh)], &c).unwrap() >= sum_rate(1.0, &[(900.0, ll)], &c).unwrap());
        }

        #[test]
        fn reward_affine_in_dwell(rate in 0.0f64..1e4, lam in 0.0f64..1e3, a in 0.0f64..6.0, b in 0.0f64..6.0) {
            let ra = lagrangian_reward(rate, lam, a, 3.0);
            let rb = lagrangian_reward(rate, lam, b, 3.0);
            prop_assert!(((ra - rb) - (-lam * (a - b))).abs() <= 1e-9 * (1.0 + rate + lam * 6.0));
        }
    }
}

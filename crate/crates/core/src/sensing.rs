//! Radar SNR, beam misalignment loss and range/azimuth measurements.

use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_PI_2;

use crate::error::{IsacError, Result};
use crate::linalg::{wrap_angle, Mat2, Mat2x4, Vec2, Vec4};
use crate::motion::TargetState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarConfig {
    /// Reference SNR (linear).
    pub snr0: f64,
    /// Reference dwell time (s).
    pub tau0: f64,
    /// Reference range (m).
    pub r0: f64,
    /// Range-noise variance at unit SNR (m²).
    pub sigma_r0_sq: f64,
    /// Azimuth-noise variance at unit SNR (rad²).
    pub sigma_th0_sq: f64,
    /// Cosine-power exponent of the tracking beam.
    pub beam_exponent: f64,
}

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("snr0", self.snr0),
            ("tau0", self.tau0),
            ("r0", self.r0),
            ("sigma_r0_sq", self.sigma_r0_sq),
            ("sigma_th0_sq", self.sigma_th0_sq),
            ("beam_exponent_track", self.beam_exponent),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(IsacError::config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub range: f64,
    /// Wrapped into (-pi, pi].
    pub azimuth: f64,
}

impl Measurement {
    pub fn vector(&self) -> Vec2 {
        Vec2::new(self.range, self.azimuth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseVariances {
    pub sigma_r_sq: f64,
    pub sigma_th_sq: f64,
}

impl NoiseVariances {
    /// Diagonal measurement covariance R.
    pub fn covariance(&self) -> Mat2 {
        Mat2::new(self.sigma_r_sq, 0.0, 0.0, self.sigma_th_sq)
    }
}

/// Absolute pointing error folded into [0, pi].
pub fn misalignment(theta_true: f64, theta_hat: f64) -> f64 {
    wrap_angle(theta_true - theta_hat).abs()
}

/// Cosine-power beam loss: `cos^exponent(Δ)` inside ±90°, zero outside.
pub fn beam_misalignment_loss(theta_true: f64, theta_hat: f64, exponent: f64) -> f64 {
    loss_from_error(misalignment(theta_true, theta_hat), exponent)
}

/// Beam loss for an already-folded pointing error in [0, pi].
pub fn loss_from_error(delta: f64, exponent: f64) -> f64 {
    if delta > FRAC_PI_2 {
        0.0
    } else {
        delta.cos().max(0.0).powf(exponent)
    }
}

/// Echo SNR for dwell `tau` at range `r` with the beam steered to `theta_hat`.
pub fn snr(tau: f64, r: f64, theta_true: f64, theta_hat: f64, cfg: &RadarConfig) -> Result<f64> {
    if !(r > 0.0) {
        return Err(IsacError::DegenerateGeometry("SNR at non-positive range"));
    }
    let loss = beam_misalignment_loss(theta_true, theta_hat, cfg.beam_exponent);
    Ok(cfg.snr0 * (tau / cfg.tau0) * (r / cfg.r0).powi(-4) * loss)
}

/// Measurement-noise variances scale inversely with SNR.
pub fn measurement_noise_variances(snr_value: f64, cfg: &RadarConfig) -> Result<NoiseVariances> {
    if !(snr_value > 0.0) || !snr_value.is_finite() {
        return Err(IsacError::NoMeasurement(snr_value));
    }
    Ok(NoiseVariances {
        sigma_r_sq: cfg.sigma_r0_sq / snr_value,
        sigma_th_sq: cfg.sigma_th0_sq / snr_value,
    })
}

/// Noise-free measurement function h(x) = (range, azimuth).
pub fn measure_exact(x: f64, y: f64) -> Vec2 {
    Vec2::new(x.hypot(y), y.atan2(x))
}

pub fn measure_state(state: &Vec4) -> Vec2 {
    measure_exact(state[0], state[1])
}

/// Draws a noisy range/azimuth measurement of the target.
pub fn observe<R: Rng + ?Sized>(state: &TargetState, vars: &NoiseVariances, rng: &mut R) -> Measurement {
    let h = measure_exact(state.x, state.y);
    let nr: f64 = rng.sample(StandardNormal);
    let nt: f64 = rng.sample(StandardNormal);
    Measurement {
        range: (h[0] + vars.sigma_r_sq.sqrt() * nr).max(0.0),
        azimuth: wrap_angle(h[1] + vars.sigma_th_sq.sqrt() * nt),
    }
}

/// Jacobian of h with respect to `[x, y, vx, vy]`.
pub fn measurement_jacobian(x: f64, y: f64) -> Result<Mat2x4> {
    let r2 = x * x + y * y;
    if !(r2 > 0.0) {
        return Err(IsacError::DegenerateGeometry("Jacobian at the radar origin"));
    }
    let r = r2.sqrt();
    #[rustfmt::skip]
    let h = Mat2x4::new(
        x / r,   y / r,  0.0, 0.0,
        -y / r2, x / r2, 0.0, 0.0,
    );
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn radar() -> RadarConfig {
        RadarConfig {
            snr0: 100.0,
            tau0: 2.0,
            r0: 800.0,
            sigma_r0_sq: 10.0,
            sigma_th0_sq: 1e-4,
            beam_exponent: 4.0,
        }
    }

    #[test]
    fn misalignment_loss_cases() {
        assert_eq!(beam_misalignment_loss(0.7, 0.7, 4.0), 1.0);
        assert_eq!(beam_misalignment_loss(0.6 * PI, 0.0, 4.0), 0.0);
        assert_abs_diff_eq!(beam_misalignment_loss(PI / 3.0, 0.0, 2.0), 0.25, epsilon = 1e-12);
        // wrap across the branch cut
        assert_abs_diff_eq!(
            beam_misalignment_loss(PI - 0.1, -PI + 0.1, 2.0),
            0.2f64.cos().powi(2),
            epsilon = 1e-12
        );
    }

    #[test]
    fn snr_scaling() {
        let c = radar();
        assert_abs_diff_eq!(snr(2.0, 800.0, 0.0, 0.0, &c).unwrap(), 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(snr(4.0, 800.0, 0.0, 0.0, &c).unwrap(), 200.0, epsilon = 1e-12);
        assert_abs_diff_eq!(snr(2.0, 1600.0, 0.0, 0.0, &c).unwrap(), 100.0 / 16.0, epsilon = 1e-12);
        assert!(snr(2.0, 0.0, 0.0, 0.0, &c).is_err());
    }

    #[test]
    fn noise_variances() {
        let c = radar();
        let v = measurement_noise_variances(1.0, &c).unwrap();
        assert_eq!((v.sigma_r_sq, v.sigma_th_sq), (10.0, 1e-4));
        let v = measurement_noise_variances(10.0, &c).unwrap();
        assert_abs_diff_eq!(v.sigma_r_sq, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.sigma_th_sq, 1e-5, epsilon = 1e-18);
        assert!(matches!(
            measurement_noise_variances(0.0, &c),
            Err(IsacError::NoMeasurement(_))
        ));
    }

    #[test]
    fn noiseless_observation() {
        let zero = NoiseVariances {
            sigma_r_sq: 0.0,
            sigma_th_sq: 0.0,
        };
        let z = observe(&TargetState::new(300.0, 400.0, 1.0, 1.0), &zero, &mut seeded(0));
        assert_eq!(z.range, 500.0);
        assert_abs_diff_eq!(z.azimuth, 0.927_295_218_001_612_2, epsilon = 1e-12);
        let z = observe(&TargetState::new(-1.0, 1.0, 0.0, 0.0), &zero, &mut seeded(0));
        assert_abs_diff_eq!(z.azimuth, 3.0 * PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn range_noise_variance() {
        let vars = NoiseVariances {
            sigma_r_sq: 10.0,
            sigma_th_sq: 1e-4,
        };
        let s = TargetState::new(300.0, 400.0, 0.0, 0.0);
        let mut rng = seeded(3);
        let n = 100_000;
        let errs: Vec<f64> = (0..n).map(|_| observe(&s, &vars, &mut rng).range - 500.0).collect();
        let mean = errs.iter().sum::<f64>() / n as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 10.0).abs() / 10.0 < 0.05, "var {var}");
    }

    #[test]
    fn jacobian_values() {
        let h = measurement_jacobian(1.0, 0.0).unwrap();
        assert_eq!(h, Mat2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0));
        let h = measurement_jacobian(300.0, 400.0).unwrap();
        assert_abs_diff_eq!(h[(0, 0)], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(0, 1)], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(1, 0)], -0.0016, epsilon = 1e-15);
        assert_abs_diff_eq!(h[(1, 1)], 0.0012, epsilon = 1e-15);
        assert!(measurement_jacobian(0.0, 0.0).is_err());
    }

    fn central_difference_jacobian(x: f64, y: f64) -> Mat2x4 {
        let mut j = Mat2x4::zeros();
        let base = Vec4::new(x, y, 0.0, 0.0);
        for k in 0..4 {
            let eps = 1e-5 * base[k].abs().max(1.0);
            let mut plus = base;
            let mut minus = base;
            plus[k] += eps;
            minus[k] -= eps;
            let d = measure_state(&plus) - measure_state(&minus);
            j[(0, k)] = d[0] / (2.0 * eps);
            j[(1, k)] = wrap_angle(d[1]) / (2.0 * eps);
        }
        j
    }

    #[test]
    fn jacobian_matches_finite_differences_at_reference() {
        let fd = central_difference_jacobian(300.0, 400.0);
        let an = measurement_jacobian(300.0, 400.0).unwrap();
        assert!((fd - an).amax() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn jacobian_matches_finite_differences(r in 10.0f64..5000.0, th in -PI..PI) {
            let (x, y) = (r * th.cos(), r * th.sin());
            let fd = central_difference_jacobian(x, y);
            let an = measurement_jacobian(x, y).unwrap();
            prop_assert!((fd - an).amax() < 1e-6);
        }

        #[test]
        fn loss_even_and_monotone(d1 in 0.0f64..FRAC_PI_2, d2 in 0.0f64..FRAC_PI_2, j in 0.5f64..12.0) {
            prop_assert_eq!(beam_misalignment_loss(d1, 0.0, j), beam_misalignment_loss(-d1, 0.0, j));
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(loss_from_error(lo, j) >= loss_from_error(hi, j));
        }

        #[test]
        fn snr_monotone(t1 in 0.0f64..3.0, t2 in 0.0f64..3.0, r1 in 10.0f64..5000.0, r2 in 10.0f64..5000.0) {
            let c = radar();
            let (tl, th) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            prop_assert!(snr(tl, 800.0, 0.0, 0.0, &c).unwrap() <= snr(th, 800.0, 0.0, 0.0, &c).unwrap());
            if r1 < r2 {
                prop_assert!(snr(1.0, r1, 0.0, 0.0, &c).unwrap() > snr(1.0, r2, 0.0, 0.0, &c).unwrap());
            }
        }

        #[test]
        fn variances_decrease_with_snr(s1 in 1e-6f64..1e6, s2 in 1e-6f64..1e6) {
            prop_assume!(s1 < s2);
            let c = radar();
            let a = measurement_noise_variances(s1, &c).unwrap();
            let b = measurement_noise_variances(s2, &c).unwrap();
            prop_assert!(b.sigma_r_sq < a.sigma_r_sq && b.sigma_th_sq < a.sigma_th_sq);
        }
    }
}

//! Constant-velocity target kinematics with Gaussian maneuverability noise.

use rand::Rng;

use crate::linalg::{correlated_normal, psd_factor, Mat4, Vec4};

/// Ground-truth state of one target: position (m), velocity (m/s) and the
/// number of slots since it appeared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub age_slots: u64,
}

impl TargetState {
    pub fn new(x: f64, y: f64, vx: f64, vy: f64) -> Self {
        Self {
            x,
            y,
            vx,
            vy,
            age_slots: 0,
        }
    }

    pub fn vector(&self) -> Vec4 {
        Vec4::new(self.x, self.y, self.vx, self.vy)
    }

    pub fn with_vector(&self, v: &Vec4) -> Self {
        Self {
            x: v[0],
            y: v[1],
            vx: v[2],
            vy: v[3],
            age_slots: self.age_slots,
        }
    }

    /// Distance to the radar at the origin.
    pub fn range(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Full-quadrant azimuth in (-pi, pi].
    pub fn azimuth(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionConfig {
    /// Revisit interval T0 in seconds; one state transition per slot.
    pub revisit_interval: f64,
    /// Maneuverability-noise variance in (m/s²)².
    pub sigma_w_sq: f64,
}

impl MotionConfig {
    pub fn transition(&self) -> Mat4 {
        transition_matrix(self.revisit_interval)
    }

    pub fn process_noise(&self) -> Mat4 {
        process_noise_cov(self.revisit_interval, self.sigma_w_sq)
    }
}

/// Constant-velocity transition over `t` seconds for the state
/// `[x, y, vx, vy]`.
pub fn transition_matrix(t: f64) -> Mat4 {
    let mut f = Mat4::identity();
    f[(0, 2)] = t;
    f[(1, 3)] = t;
    f
}

/// Discrete white-noise-acceleration covariance over `t` seconds.
///
/// Mirrored entries are written from the same product so the result is
/// exactly symmetric.
pub fn process_noise_cov(t: f64, sigma_w_sq: f64) -> Mat4 {
    let pp = t.powi(4) / 4.0 * sigma_w_sq;
    let pv = t.powi(3) / 2.0 * sigma_w_sq;
    let vv = t * t * sigma_w_sq;
    let mut q = Mat4::zeros();
    for axis in 0..2 {
        let (p, v) = (axis, axis + 2);
        q[(p, p)] = pp;
        q[(p, v)] = pv;
        q[(v, p)] = pv;
        q[(v, v)] = vv;
    }
    q
}

/// Advances a target by one revisit interval: `F x + w`, `w ~ N(0, Q)`.
pub fn step_target<R: Rng + ?Sized>(state: &TargetState, cfg: &MotionConfig, rng: &mut R) -> TargetState {
    let f = cfg.transition();
    let mut next = f * state.vector();
    if cfg.sigma_w_sq > 0.0 && cfg.revisit_interval > 0.0 {
        let l = psd_factor(&cfg.process_noise());
        next += correlated_normal(&l, rng);
    }
    let mut out = state.with_vector(&next);
    out.age_slots = state.age_slots + 1;
    out
}

//! Extended Kalman filter over `[x, y, vx, vy]` with range/azimuth
//! measurements, plus the Monte-Carlo azimuth-spread feature.

use rand::Rng;

use crate::error::{IsacError, Result};
use crate::linalg::{
    correlated_normal, psd_factor, sym2_eigenvalues, symmetrize, wrap_angle, Mat2, Mat2x4, Mat4,
    Vec2, Vec4,
};
use crate::sensing::{measure_state, measurement_jacobian, Measurement, NoiseVariances};

/// Innovation covariances worse conditioned than this are rejected.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

/// State estimate: mean and covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Belief {
    pub mean: Vec4,
    pub cov: Mat4,
}

impl Belief {
    /// Zero mean with `prior_scale · I` covariance.
    pub fn initialize(prior_scale: f64) -> Self {
        Self {
            mean: Vec4::zeros(),
            cov: Mat4::identity() * prior_scale,
        }
    }

    /// Single-detection track initiation: position from the polar
    /// measurement, covariance mapped through the polar Jacobian, zero
    /// velocity with variance `velocity_var` per axis.
    pub fn from_detection(z: &Measurement, vars: &NoiseVariances, velocity_var: f64) -> Self {
        let (s, c) = z.azimuth.sin_cos();
        let r = z.range;
        let mean = Vec4::new(r * c, r * s, 0.0, 0.0);
        // d(x, y)/d(r, theta)
        let j = Mat2::new(c, -r * s, s, r * c);
        let pos = j * vars.covariance() * j.transpose();
        let mut cov = Mat4::zeros();
        cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&symmetrize(&pos));
        cov[(2, 2)] = velocity_var;
        cov[(3, 3)] = velocity_var;
        Self { mean, cov }
    }

    pub fn position(&self) -> (f64, f64) {
        (self.mean[0], self.mean[1])
    }

    pub fn azimuth(&self) -> f64 {
        self.mean[1].atan2(self.mean[0])
    }

    pub fn range(&self) -> f64 {
        self.mean[0].hypot(self.mean[1])
    }

    pub fn position_cov(&self) -> Mat2 {
        self.cov.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// Normalized estimation error squared of `truth` under this belief.
    pub fn nees(&self, truth: &Vec4) -> Option<f64> {
        let e = truth - self.mean;
        let inv = self.cov.try_inverse()?;
        Some((e.transpose() * inv * e)[(0, 0)])
    }
}

/// Time update: `F m`, `F P Fᵀ + Q`.
pub fn predict(b: &Belief, f: &Mat4, q: &Mat4) -> Belief {
    Belief {
        mean: f * b.mean,
        cov: symmetrize(&(f * b.cov * f.transpose() + q)),
    }
}

/// Measurement update with Jacobian `h` and measurement covariance `r`.
///
/// The azimuth innovation is wrapped into (-pi, pi]. The covariance uses the
/// Joseph form of `(I - K H) P`, then is symmetrized.
pub fn update(b: &Belief, z: &Measurement, h: &Mat2x4, r: &Mat2) -> Result<Belief> {
    update_about(b, z, h, r, &b.mean)
}

/// Update linearized about `point` instead of the prior mean:
/// the innovation is `z - h(point) - H (m - point)`.
fn update_about(b: &Belief, z: &Measurement, h: &Mat2x4, r: &Mat2, point: &Vec4) -> Result<Belief> {
    let s = symmetrize(&(h * b.cov * h.transpose() + r));
    let (lo, hi) = sym2_eigenvalues(&s);
    if !(lo > 0.0) || hi / lo > MAX_INNOVATION_CONDITION {
        let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(IsacError::SingularInnovation(cond));
    }
    let s_inv = s
        .try_inverse()
        .ok_or(IsacError::SingularInnovation(f64::INFINITY))?;
    let k = b.cov * h.transpose() * s_inv;
    let predicted = measure_state(point) + h * (b.mean - point);
    let innovation = Vec2::new(z.range - predicted[0], wrap_angle(z.azimuth - predicted[1]));
    let mean = b.mean + k * innovation;
    let ikh = Mat4::identity() - k * h;
    let cov = ikh * b.cov * ikh.transpose() + k * r * k.transpose();
    Ok(Belief {
        mean,
        cov: symmetrize(&cov),
    })
}

/// Convenience update that linearizes at the belief's own mean.
pub fn update_at_mean(b: &Belief, z: &Measurement, vars: &NoiseVariances) -> Result<Belief> {
    update_iterated(b, z, vars, 1)
}

/// Iterated update: relinearizes `iterations` times, each about the previous
/// pass's posterior mean (Gauss-Newton on the MAP objective). One iteration
/// is the plain extended update. Precise polar measurements of a target with
/// metres of prior error need the extra passes to stay consistent.
pub fn update_iterated(b: &Belief, z: &Measurement, vars: &NoiseVariances, iterations: usize) -> Result<Belief> {
    let r = vars.covariance();
    let mut point = b.mean;
    let mut out = *b;
    for _ in 0..iterations.max(1) {
        let h = measurement_jacobian(point[0], point[1])?;
        out = update_about(b, z, &h, &r, &point)?;
        point = out.mean;
    }
    Ok(out)
}

/// Sample variance of the azimuth of positions drawn from
/// `N(mean_pos, position block of b.cov)`, measured as wrapped deviations
/// from the azimuth of `mean_pos`.
pub fn azimuth_variance_mc<R: Rng + ?Sized>(
    b: &Belief,
    mean_pos: (f64, f64),
    n_samples: usize,
    rng: &mut R,
) -> f64 {
    assert!(n_samples >= 2, "azimuth_variance_mc needs at least two samples");
    let center = mean_pos.1.atan2(mean_pos.0);
    let l = psd_factor(&b.position_cov());
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        let d = correlated_normal(&l, rng);
        let theta = (mean_pos.1 + d[1]).atan2(mean_pos.0 + d[0]);
        let dev = wrap_angle(theta - center);
        sum += dev;
        sum_sq += dev * dev;
    }
    let n = n_samples as f64;
    ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
}

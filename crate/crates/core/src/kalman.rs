//! Constant-velocity Kalman filter over the area/aspect box encoding.
//!
//! State is the 7-vector `[u, v, s, r, u', v', s']`: target center, pixel
//! area, aspect ratio, and the per-frame rates of the first three. Aspect
//! ratio carries no velocity (constant-aspect model). The filter runs at a
//! fixed dt of one frame; there is no control input.
//!
//! `predict` performs the time update and decodes the estimation box used
//! by the drift gate; `update` folds a measured box back in.

use crate::error::{Error, Result};
use crate::geometry::BBox;
use nalgebra::{SMatrix, SVector};

pub type Vec7 = SVector<f64, 7>;
pub type Mat7 = SMatrix<f64, 7, 7>;
pub type Mat4 = SMatrix<f64, 4, 4>;
type Mat47 = SMatrix<f64, 4, 7>;

/// Area floor (px^2) applied before the square roots of the box decode.
pub const S_MIN: f64 = 1.0;
/// Aspect-ratio floor applied before the square roots of the box decode.
pub const R_MIN: f64 = 1e-3;

/// Symmetry slack for covariance validation.
const SYMMETRY_TOL: f64 = 1e-8;
/// Eigenvalue slack when checking positive semidefiniteness.
const PSD_TOL: f64 = -1e-8;

/// State transition: identity plus unit-dt velocity coupling for u, v, s.
pub(crate) fn transition_matrix() -> Mat7 {
    let mut a = Mat7::identity();
    a[(0, 4)] = 1.0;
    a[(1, 5)] = 1.0;
    a[(2, 6)] = 1.0;
    a
}

/// Observation: selects the measured components [u, v, s, r].
pub(crate) fn observation_matrix() -> Mat47 {
    let mut h = Mat47::zeros();
    h[(0, 0)] = 1.0;
    h[(1, 1)] = 1.0;
    h[(2, 2)] = 1.0;
    h[(3, 3)] = 1.0;
    h
}

/// Process noise Q, measurement noise R, and initial covariance P0.
#[derive(Debug, Clone)]
pub struct FilterConfig {
    q: Mat7,
    r: Mat4,
    p0: Mat7,
}

impl Default for FilterConfig {
    /// SORT-style defaults: high initial velocity uncertainty, small
    /// process noise on the velocity components.
    fn default() -> Self {
        Self::from_diagonals(
            [1.0, 1.0, 1.0, 1e-2, 1e-2, 1e-2, 1e-4],
            [1.0, 1.0, 10.0, 1e-2],
            [10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4],
        )
        .expect("default diagonals are valid")
    }
}

impl FilterConfig {
    /// Build from full matrices. Q and P0 must be symmetric positive
    /// semidefinite; R must be symmetric positive definite so the
    /// innovation covariance is always invertible.
    pub fn new(q: Mat7, r: Mat4, p0: Mat7) -> Result<Self> {
        check_symmetric_psd("Q", &q)?;
        check_symmetric_psd("P0", &p0)?;
        check_symmetric_psd("R", &r)?;
        if r.cholesky().is_none() {
            return Err(Error::config("R must be positive definite"));
        }
        Ok(Self { q, r, p0 })
    }

    /// Build from diagonal entries, the common case.
    pub fn from_diagonals(q: [f64; 7], r: [f64; 4], p0: [f64; 7]) -> Result<Self> {
        Self::new(
            Mat7::from_diagonal(&Vec7::from(q)),
            Mat4::from_diagonal(&SVector::<f64, 4>::from(r)),
            Mat7::from_diagonal(&Vec7::from(p0)),
        )
    }

    pub fn process_noise(&self) -> &Mat7 {
        &self.q
    }

    pub fn measurement_noise(&self) -> &Mat4 {
        &self.r
    }

    pub fn initial_covariance(&self) -> &Mat7 {
        &self.p0
    }
}

fn check_symmetric_psd<const N: usize>(name: &str, m: &SMatrix<f64, N, N>) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::config(format!("{name} has non-finite entries")));
    }
    if (m - m.transpose()).abs().max() > SYMMETRY_TOL {
        return Err(Error::config(format!("{name} is not symmetric")));
    }
    let dynamic = nalgebra::DMatrix::from_iterator(N, N, m.iter().copied());
    let min_eig = dynamic
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < PSD_TOL {
        return Err(Error::config(format!(
            "{name} is not positive semidefinite (min eigenvalue {min_eig:.3e})"
        )));
    }
    Ok(())
}

/// Filter state: estimate, error covariance, and the frame counter.
#[derive(Debug, Clone)]
pub struct TrackState {
    x: Vec7,
    p: Mat7,
    frame_index: u64,
}

impl TrackState {
    pub fn state_vector(&self) -> &Vec7 {
        &self.x
    }

    pub fn covariance(&self) -> &Mat7 {
        &self.p
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }
}

/// Output of the time update: the prior state, the decoded estimation box,
/// and whether the decode had to clamp a collapsing area or aspect.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub state: TrackState,
    pub estimation_box: BBox,
    pub clamped: bool,
}

/// Start a filter on the initial box: position from the area/aspect
/// encoding, all velocities zero, covariance P0.
pub fn init(bbox: &BBox, config: &FilterConfig) -> Result<TrackState> {
    let aa = bbox.to_area_aspect()?;
    Ok(TrackState {
        x: Vec7::from([aa.u, aa.v, aa.s, aa.r, 0.0, 0.0, 0.0]),
        p: *config.initial_covariance(),
        frame_index: 0,
    })
}

/// Time update: `x- = A x`, `P- = A P A^T + Q`, plus the box decode
/// `w = sqrt(s*r)`, `h = sqrt(s/r)` with s and r floored at [`S_MIN`] and
/// [`R_MIN`] so a collapsing estimate cannot produce NaN.
pub fn predict(state: &TrackState, config: &FilterConfig) -> Prediction {
    let a = transition_matrix();
    let mut x = a * state.x;
    let p = symmetrize(a * state.p * a.transpose() + config.process_noise());

    let clamped = x[2] < S_MIN || x[3] < R_MIN;
    x[2] = x[2].max(S_MIN);
    x[3] = x[3].max(R_MIN);

    let (s, r) = (x[2], x[3]);
    let w = (s * r).sqrt();
    let h = (s / r).sqrt();
    let estimation_box = BBox::new(x[0] - w / 2.0, x[1] - h / 2.0, w, h);

    Prediction {
        state: TrackState {
            x,
            p,
            frame_index: state.frame_index,
        },
        estimation_box,
        clamped,
    }
}

/// Measurement update on the prior produced by [`predict`]:
/// `K = P- H^T (H P- H^T + R)^-1`, `x = x- + K (z - H x-)`,
/// `P = (I - K H) P-`. Advances the frame counter.
pub fn update(prior: &TrackState, measurement: &BBox, config: &FilterConfig) -> Result<TrackState> {
    let aa = measurement.to_area_aspect()?;
    let z = SVector::<f64, 4>::from([aa.u, aa.v, aa.s, aa.r]);

    let h = observation_matrix();
    let innovation_cov = h * prior.p * h.transpose() + config.measurement_noise();
    let chol = innovation_cov.cholesky().ok_or(Error::SingularInnovation)?;
    // K = P- H^T S^-1, computed as (S^-1 (H P-))^T
    let gain = chol.solve(&(h * prior.p)).transpose();

    let x = prior.x + gain * (z - h * prior.x);
    let p = symmetrize((Mat7::identity() - gain * h) * prior.p);

    Ok(TrackState {
        x,
        p,
        frame_index: prior.frame_index + 1,
    })
}

/// Commit the prior as the posterior (no measurement this frame) and
/// advance the frame counter.
pub fn coast(prior: &TrackState) -> TrackState {
    TrackState {
        x: prior.x,
        p: prior.p,
        frame_index: prior.frame_index + 1,
    }
}

fn symmetrize(m: Mat7) -> Mat7 {
    (m + m.transpose()) * 0.5
}

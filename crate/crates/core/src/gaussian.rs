//! Dense Gaussian algebra: densities, Kalman prediction and update,
//! ellipsoidal gating, moment matching and log-domain weight arithmetic.
//!
//! Every returned covariance is symmetrised, so downstream code can rely on
//! `P == P^T` up to round-off.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Multivariate normal density `N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

/// A Gaussian with a log-domain weight. `log_weight == -inf` encodes an
/// exactly-zero weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGaussian {
    pub log_weight: f64,
    pub gaussian: Gaussian,
}

/// Ordered list of weighted Gaussians. An empty mixture is the zero intensity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GaussianMixture {
    pub components: Vec<WeightedGaussian>,
}

/// Linear/Gaussian motion and sensor model with constant survival and
/// detection probabilities, uniform Poisson clutter and a Gaussian-mixture
/// birth intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussianModel {
    pub transition: DMatrix<f64>,
    pub process_noise: DMatrix<f64>,
    pub observation: DMatrix<f64>,
    pub measurement_noise: DMatrix<f64>,
    pub p_survival: f64,
    pub p_detection: f64,
    /// Expected number of clutter measurements per scan.
    pub clutter_rate: f64,
    /// Clutter intensity per unit measurement volume.
    pub clutter_density: f64,
    pub birth: GaussianMixture,
}

/// Settings for the nearly-constant-velocity model in two dimensions with
/// state `[p_x, v_x, p_y, v_y]` and position-only measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvModelConfig {
    pub sampling_period: f64,
    pub process_noise_intensity: f64,
    pub measurement_noise_std: f64,
    pub p_survival: f64,
    pub p_detection: f64,
    pub clutter_rate: f64,
    /// Area of the surveillance region, used for the uniform clutter density.
    pub surveillance_area: f64,
    pub birth_weight: f64,
    pub birth_mean: [f64; 4],
    pub birth_cov_diag: [f64; 4],
}

impl Default for CvModelConfig {
    fn default() -> Self {
        CvModelConfig {
            sampling_period: 1.0,
            process_noise_intensity: 0.01,
            measurement_noise_std: 1.0,
            p_survival: 0.99,
            p_detection: 0.9,
            clutter_rate: 10.0,
            surveillance_area: 300.0 * 300.0,
            birth_weight: 0.005,
            birth_mean: [100.0, 0.0, 100.0, 0.0],
            birth_cov_diag: [150.0 * 150.0, 1.0, 150.0 * 150.0, 1.0],
        }
    }
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "gaussian covariance",
                expected: n,
                actual: cov.nrows().max(cov.ncols()),
            });
        }
        Ok(Gaussian { mean, cov })
    }

    /// Scalar density, handy in tests and one-dimensional examples.
    pub fn scalar(mean: f64, var: f64) -> Self {
        Gaussian {
            mean: DVector::from_element(1, mean),
            cov: DMatrix::from_element(1, 1, var),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

impl WeightedGaussian {
    pub fn new(log_weight: f64, gaussian: Gaussian) -> Self {
        WeightedGaussian {
            log_weight,
            gaussian,
        }
    }

    pub fn weight(&self) -> f64 {
        self.log_weight.exp()
    }
}

impl GaussianMixture {
    pub fn new(components: Vec<WeightedGaussian>) -> Result<Self> {
        if let Some(first) = components.first() {
            let n = first.gaussian.dim();
            for c in &components {
                if c.gaussian.dim() != n {
                    return Err(Error::DimensionMismatch {
                        context: "mixture component",
                        expected: n,
                        actual: c.gaussian.dim(),
                    });
                }
            }
        }
        Ok(GaussianMixture { components })
    }

    pub fn empty() -> Self {
        GaussianMixture::default()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    /// Expected number of targets: the integral of the intensity.
    pub fn total_weight(&self) -> f64 {
        log_sum_exp(self.log_weights().as_slice()).exp()
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.log_weight).collect()
    }
}

impl LinearGaussianModel {
    pub fn state_dim(&self) -> usize {
        self.transition.nrows()
    }

    pub fn measurement_dim(&self) -> usize {
        self.observation.nrows()
    }

    /// Checks probability ranges and matrix shapes.
    pub fn validate(&self) -> Result<()> {
        let nx = self.transition.nrows();
        let nz = self.observation.nrows();
        let shapes = [
            ("transition", self.transition.shape(), (nx, nx)),
            ("process noise", self.process_noise.shape(), (nx, nx)),
            ("observation", self.observation.shape(), (nz, nx)),
            ("measurement noise", self.measurement_noise.shape(), (nz, nz)),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(Error::InvalidParameter(format!(
                    "{name} matrix has shape {got:?}, expected {want:?}"
                )));
            }
        }
        for (name, p) in [("p_survival", self.p_survival), ("p_detection", self.p_detection)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !(self.clutter_rate >= 0.0) || !(self.clutter_density >= 0.0) {
            return Err(Error::InvalidParameter(
                "clutter rate and density must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Nearly-constant-velocity model, `F = I2 (x) [[1 T],[0 1]]`,
    /// `Q = q I2 (x) [[T^3/3 T^2/2],[T^2/2 T]]`, `H = I2 (x) [1 0]`,
    /// `R = sigma^2 I2`.
    pub fn constant_velocity(cfg: &CvModelConfig) -> Self {
        let t = cfg.sampling_period;
        let q = cfg.process_noise_intensity;
        let block_f = DMatrix::from_row_slice(2, 2, &[1.0, t, 0.0, 1.0]);
        let block_q = DMatrix::from_row_slice(
            2,
            2,
            &[t.powi(3) / 3.0, t.powi(2) / 2.0, t.powi(2) / 2.0, t],
        ) * q;
        let block_h = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let eye2 = DMatrix::<f64>::identity(2, 2);
        let birth = GaussianMixture {
            components: vec![WeightedGaussian::new(
                cfg.birth_weight.ln(),
                Gaussian {
                    mean: DVector::from_row_slice(&cfg.birth_mean),
                    cov: DMatrix::from_diagonal(&DVector::from_row_slice(&cfg.birth_cov_diag)),
                },
            )],
        };
        LinearGaussianModel {
            transition: eye2.kronecker(&block_f),
            process_noise: eye2.kronecker(&block_q),
            observation: eye2.kronecker(&block_h),
            measurement_noise: &eye2 * cfg.measurement_noise_std.powi(2),
            p_survival: cfg.p_survival,
            p_detection: cfg.p_detection,
            clutter_rate: cfg.clutter_rate,
            clutter_density: if cfg.surveillance_area > 0.0 {
                cfg.clutter_rate / cfg.surveillance_area
            } else {
                0.0
            },
            birth,
        }
    }
}

/// `(P + P^T) / 2`.
pub fn symmetrize(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

/// `log sum_i exp(w_i)`, stable for large negative inputs. Empty input and
/// all `-inf` inputs give `-inf`.
pub fn log_sum_exp(log_weights: &[f64]) -> f64 {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    if log_weights.len() == 1 {
        return max;
    }
    let sum: f64 = log_weights.iter().map(|w| (w - max).exp()).sum();
    max + sum.ln()
}

/// Innovation statistics of a Gaussian with respect to one measurement.
pub(crate) struct Innovation {
    pub residual: DVector<f64>,
    pub chol: Cholesky<f64, Dyn>,
    /// `P H^T`
    pub cross: DMatrix<f64>,
}

impl Innovation {
    pub fn compute(
        g: &Gaussian,
        z: &DVector<f64>,
        h: &DMatrix<f64>,
        r: &DMatrix<f64>,
    ) -> Result<Self> {
        let nx = g.dim();
        if h.ncols() != nx {
            return Err(Error::DimensionMismatch {
                context: "observation matrix columns",
                expected: nx,
                actual: h.ncols(),
            });
        }
        let nz = h.nrows();
        if z.len() != nz {
            return Err(Error::DimensionMismatch {
                context: "measurement vector",
                expected: nz,
                actual: z.len(),
            });
        }
        if r.shape() != (nz, nz) {
            return Err(Error::DimensionMismatch {
                context: "measurement noise",
                expected: nz,
                actual: r.nrows(),
            });
        }
        let cross = &g.cov * h.transpose();
        let s = symmetrize(&(h * &cross + r));
        let chol = match Cholesky::new(s.clone()) {
            Some(c) => c,
            None => {
                return Err(Error::SingularInnovation {
                    rcond: reciprocal_condition(&s),
                })
            }
        };
        let residual = z - h * &g.mean;
        Ok(Innovation {
            residual,
            chol,
            cross,
        })
    }

    /// Squared Mahalanobis distance of the residual.
    pub fn mahalanobis2(&self) -> f64 {
        let w = self.chol.l().solve_lower_triangular(&self.residual);
        match w {
            Some(w) => w.norm_squared(),
            None => f64::INFINITY,
        }
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn log_likelihood(&self) -> f64 {
        let d = self.residual.len() as f64;
        -0.5 * (d * (2.0 * PI).ln() + self.log_det() + self.mahalanobis2())
    }
}

fn reciprocal_condition(s: &DMatrix<f64>) -> f64 {
    let eig = s.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    if max > 0.0 {
        min / max
    } else {
        0.0
    }
}

/// Kalman prediction: `N(F x, F P F^T + Q)`.
pub fn kalman_predict(g: &Gaussian, f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<Gaussian> {
    let n = g.dim();
    if f.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "transition matrix",
            expected: n,
            actual: f.nrows(),
        });
    }
    if q.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "process noise",
            expected: n,
            actual: q.nrows(),
        });
    }
    Ok(Gaussian {
        mean: f * &g.mean,
        cov: symmetrize(&(f * &g.cov * f.transpose() + q)),
    })
}

/// Kalman update with measurement `z`. Returns the posterior and
/// `log N(z; H x, H P H^T + R)`.
pub fn kalman_update(
    g: &Gaussian,
    z: &DVector<f64>,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(Gaussian, f64)> {
    let inn = Innovation::compute(g, z, h, r)?;
    Ok(posterior_from_innovation(g, h, r, &inn))
}

pub(crate) fn posterior_from_innovation(
    g: &Gaussian,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
    inn: &Innovation,
) -> (Gaussian, f64) {
    // K = P H^T S^-1, computed as (S^-1 H P)^T since S is symmetric.
    let gain = inn.chol.solve(&inn.cross.transpose()).transpose();
    let mean = &g.mean + &gain * &inn.residual;
    // Joseph form keeps the posterior PSD under round-off.
    let i_kh = DMatrix::<f64>::identity(g.dim(), g.dim()) - &gain * h;
    let cov = &i_kh * &g.cov * i_kh.transpose() + &gain * r * gain.transpose();
    (
        Gaussian {
            mean,
            cov: symmetrize(&cov),
        },
        inn.log_likelihood(),
    )
}

/// Ellipsoidal gate: true iff the squared Mahalanobis distance of the
/// innovation is at most `threshold`.
pub fn gate(
    z: &DVector<f64>,
    g: &Gaussian,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
    threshold: f64,
) -> Result<bool> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let inn = Innovation::compute(g, z, h, r)?;
    Ok(threshold == f64::INFINITY || inn.mahalanobis2() <= threshold)
}

/// Collapses a mixture into one Gaussian with the same total weight, mean
/// and covariance.
pub fn moment_match(m: &GaussianMixture) -> Result<WeightedGaussian> {
    let first = m.components.first().ok_or(Error::EmptyMixture)?;
    let log_total = log_sum_exp(&m.log_weights());
    if log_total == f64::NEG_INFINITY || !log_total.is_finite() {
        return Err(Error::EmptyMixture);
    }
    if m.components.len() == 1 {
        return Ok(first.clone());
    }
    let n = first.gaussian.dim();
    let weights: Vec<f64> = m
        .components
        .iter()
        .map(|c| (c.log_weight - log_total).exp())
        .collect();
    let mut mean = DVector::zeros(n);
    for (w, c) in weights.iter().zip(&m.components) {
        mean += &c.gaussian.mean * *w;
    }
    let mut cov = DMatrix::zeros(n, n);
    for (w, c) in weights.iter().zip(&m.components) {
        let d = &c.gaussian.mean - &mean;
        cov += (&c.gaussian.cov + &d * d.transpose()) * *w;
    }
    Ok(WeightedGaussian {
        log_weight: log_total,
        gaussian: Gaussian {
            mean,
            cov: symmetrize(&cov),
        },
    })
}

/// `log N(x; mean, cov)` via Cholesky. Errors if `cov` is not positive
/// definite.
pub fn log_pdf(x: &DVector<f64>, g: &Gaussian) -> Result<f64> {
    let chol = Cholesky::new(symmetrize(&g.cov)).ok_or_else(|| Error::SingularInnovation {
        rcond: reciprocal_condition(&g.cov),
    })?;
    let d = x - &g.mean;
    let w = chol
        .l()
        .solve_lower_triangular(&d)
        .ok_or(Error::SingularInnovation { rcond: 0.0 })?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * (d.len() as f64 * (2.0 * PI).ln() + log_det + w.norm_squared()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn paper_model() -> LinearGaussianModel {
        LinearGaussianModel::constant_velocity(&CvModelConfig::default())
    }

    fn scalar_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
        (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt()
    }

    #[test]
    fn predict_identity_dynamics() {
        let g = Gaussian::new(DVector::from_vec(vec![1.0, 2.0]), DMatrix::identity(2, 2)).unwrap();
        let p = kalman_predict(&g, &DMatrix::identity(2, 2), &DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(p, g);
    }

    #[test]
    fn predict_moves_position_by_velocity() {
        let m = paper_model();
        let g = Gaussian::new(
            DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]),
            DMatrix::identity(4, 4),
        )
        .unwrap();
        let p = kalman_predict(&g, &m.transition, &m.process_noise).unwrap();
        assert_eq!(p.mean[0], 1.0);
        assert_eq!(p.mean[1], 1.0);
    }

    #[test]
    fn predict_identity_covariance_matches_hand_arithmetic() {
        // F F^T + Q for one CV block with T = 1, q = 0.01:
        // F F^T = [[2,1],[1,1]], Q = 0.01 [[1/3,1/2],[1/2,1]].
        let m = paper_model();
        let g = Gaussian::new(DVector::zeros(4), DMatrix::identity(4, 4)).unwrap();
        let p = kalman_predict(&g, &m.transition, &m.process_noise).unwrap();
        let block = [
            [2.0 + 0.01 / 3.0, 1.0 + 0.005],
            [1.0 + 0.005, 1.0 + 0.01],
        ];
        for (off, _) in [(0usize, 0), (2, 0)] {
            for i in 0..2 {
                for j in 0..2 {
                    assert_abs_diff_eq!(p.cov[(off + i, off + j)], block[i][j], epsilon = 1e-15);
                }
            }
        }
        assert_eq!(p.cov[(0, 2)], 0.0);
        assert_eq!(p.cov[(1, 3)], 0.0);
    }

    #[test]
    fn predict_rejects_bad_dimensions() {
        let g = Gaussian::scalar(0.0, 1.0);
        let err = kalman_predict(&g, &DMatrix::identity(2, 2), &DMatrix::zeros(2, 2));
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn update_zero_innovation_keeps_mean() {
        let m = paper_model();
        let g = Gaussian::new(
            DVector::from_vec(vec![3.0, 1.0, -2.0, 0.5]),
            DMatrix::identity(4, 4) * 4.0,
        )
        .unwrap();
        let z = &m.observation * &g.mean;
        let (post, _) = kalman_update(&g, &z, &m.observation, &m.measurement_noise).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(post.mean[i], g.mean[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn update_scalar_conjugate_oracle() {
        // Prior N(0,1), z = 1, H = R = 1: posterior N(0.5, 0.5); evidence N(1; 0, 2).
        let g = Gaussian::scalar(0.0, 1.0);
        let one = DMatrix::from_element(1, 1, 1.0);
        let (post, ll) = kalman_update(&g, &DVector::from_element(1, 1.0), &one, &one).unwrap();
        assert_abs_diff_eq!(post.mean[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(post.cov[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ll, scalar_normal_pdf(1.0, 0.0, 2.0).ln(), epsilon = 1e-14);
    }

    #[test]
    fn update_uninformative_measurement() {
        let g = Gaussian::scalar(2.0, 3.0);
        let one = DMatrix::from_element(1, 1, 1.0);
        let big = DMatrix::from_element(1, 1, 1e12);
        let (post, _) = kalman_update(&g, &DVector::from_element(1, 50.0), &one, &big).unwrap();
        assert_abs_diff_eq!(post.mean[0], 2.0, epsilon = 1e-5);
        assert_abs_diff_eq!(post.cov[(0, 0)], 3.0, epsilon = 1e-5);
    }

    #[test]
    fn update_singular_innovation_is_reported() {
        let g = Gaussian::scalar(0.0, 0.0);
        let one = DMatrix::from_element(1, 1, 1.0);
        let zero = DMatrix::zeros(1, 1);
        let err = kalman_update(&g, &DVector::from_element(1, 0.0), &one, &zero).unwrap_err();
        assert!(matches!(err, Error::SingularInnovation { .. }));
    }

    #[test]
    fn gate_examples() {
        let g = Gaussian::scalar(0.0, 0.5);
        let one = DMatrix::from_element(1, 1, 1.0);
        let half = DMatrix::from_element(1, 1, 0.5);
        // S = 1, residual 0.
        assert!(gate(&DVector::from_element(1, 0.0), &g, &one, &half, 20.0).unwrap());
        // S = 1, residual 5: 25 > 20.
        assert!(!gate(&DVector::from_element(1, 5.0), &g, &one, &half, 20.0).unwrap());
        assert!(gate(&DVector::from_element(1, 1e9), &g, &one, &half, f64::INFINITY).unwrap());
        assert!(matches!(
            gate(&DVector::from_element(1, 0.0), &g, &one, &half, 0.0),
            Err(Error::InvalidThreshold(_))
        ));
    }

    #[test]
    fn moment_match_examples() {
        let single = GaussianMixture::new(vec![WeightedGaussian::new(
            0.3_f64.ln(),
            Gaussian::scalar(1.0, 2.0),
        )])
        .unwrap();
        assert_eq!(moment_match(&single).unwrap(), single.components[0]);

        let two = GaussianMixture::new(vec![
            WeightedGaussian::new(0.0, Gaussian::scalar(-1.0, 1.0)),
            WeightedGaussian::new(0.0, Gaussian::scalar(1.0, 1.0)),
        ])
        .unwrap();
        let mm = moment_match(&two).unwrap();
        assert_abs_diff_eq!(mm.gaussian.mean[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mm.gaussian.cov[(0, 0)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mm.log_weight, 2.0_f64.ln(), epsilon = 1e-15);

        let same = GaussianMixture::new(vec![
            WeightedGaussian::new(0.2_f64.ln(), Gaussian::scalar(4.0, 3.0)),
            WeightedGaussian::new(0.3_f64.ln(), Gaussian::scalar(4.0, 3.0)),
        ])
        .unwrap();
        let mm = moment_match(&same).unwrap();
        assert_abs_diff_eq!(mm.log_weight.exp(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mm.gaussian.mean[0], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mm.gaussian.cov[(0, 0)], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn moment_match_rejects_empty() {
        assert_eq!(moment_match(&GaussianMixture::empty()), Err(Error::EmptyMixture));
        let dead = GaussianMixture::new(vec![WeightedGaussian::new(
            f64::NEG_INFINITY,
            Gaussian::scalar(0.0, 1.0),
        )])
        .unwrap();
        assert_eq!(moment_match(&dead), Err(Error::EmptyMixture));
    }

    #[test]
    fn log_sum_exp_examples() {
        assert_abs_diff_eq!(log_sum_exp(&[0.0, 0.0]), 2.0_f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            log_sum_exp(&[-1000.0, -1000.0]),
            -1000.0 + 2.0_f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[-3.25]), -3.25);
    }

    #[test]
    fn log_pdf_matches_scalar_formula() {
        let g = Gaussian::scalar(1.0, 4.0);
        let v = log_pdf(&DVector::from_element(1, 2.5), &g).unwrap();
        assert_abs_diff_eq!(v, scalar_normal_pdf(2.5, 1.0, 4.0).ln(), epsilon = 1e-14);
    }

    #[test]
    fn constant_velocity_model_shapes() {
        let m = paper_model();
        m.validate().unwrap();
        assert_eq!(m.state_dim(), 4);
        assert_eq!(m.measurement_dim(), 2);
        assert_abs_diff_eq!(m.clutter_density, 10.0 / 90000.0, epsilon = 1e-18);
        assert_eq!(m.observation[(0, 0)], 1.0);
        assert_eq!(m.observation[(1, 2)], 1.0);
    }
}

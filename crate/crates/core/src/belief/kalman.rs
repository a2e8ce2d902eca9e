//! Four-state (x, y, vx, vy) Kalman filter with a position measurement.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::scalar::Scalar;

pub type Mat4<S> = [[S; 4]; 4];

/// Gaussian over pedestrian position and velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct GaussianBelief<S: Scalar = f64> {
    /// `[x, y, vx, vy]`
    pub mean: [S; 4],
    pub covariance: Mat4<S>,
}

fn zeros<S: Scalar>() -> Mat4<S> {
    [[S::zero(); 4]; 4]
}

fn diag<S: Scalar>(d: [S; 4]) -> Mat4<S> {
    let mut m = zeros();
    for i in 0..4 {
        m[i][i] = d[i];
    }
    m
}

impl<S: Scalar> GaussianBelief<S> {
    pub fn new(position: Vec2<S>, velocity: Vec2<S>, variances: [S; 4]) -> Self {
        Self {
            mean: [position.x, position.y, velocity.x, velocity.y],
            covariance: diag(variances),
        }
    }

    #[inline]
    pub fn position(&self) -> Vec2<S> {
        Vec2::new(self.mean[0], self.mean[1])
    }

    #[inline]
    pub fn velocity(&self) -> Vec2<S> {
        Vec2::new(self.mean[2], self.mean[3])
    }

    pub fn trace(&self) -> S {
        (0..4).map(|i| self.covariance[i][i]).sum()
    }

    /// Constant-velocity prediction with a lateral acceleration input.
    ///
    /// Semi-implicit integration matching the simulator: the velocity is
    /// updated first and the position advances with the new velocity.
    /// `process_noise` holds per-second variances for each state.
    pub fn predict(&self, accel_y: S, dt: S, process_noise: &[S; 4]) -> Self {
        let [x, y, vx, vy] = self.mean;
        let vy_next = vy + accel_y * dt;
        let mean = [x + vx * dt, y + vy_next * dt, vx, vy_next];

        // P' = F P F^T + Q with F = [[I, dt I], [0, I]]
        let p = &self.covariance;
        let mut fp = *p;
        for j in 0..4 {
            fp[0][j] = p[0][j] + dt * p[2][j];
            fp[1][j] = p[1][j] + dt * p[3][j];
        }
        let mut cov = fp;
        for row in cov.iter_mut() {
            let (r0, r1, r2, r3) = (row[0], row[1], row[2], row[3]);
            row[0] = r0 + dt * r2;
            row[1] = r1 + dt * r3;
        }
        for i in 0..4 {
            cov[i][i] = cov[i][i] + process_noise[i] * dt;
        }
        Self { mean, covariance: cov }.symmetrized()
    }

    /// Innovation and its 2×2 covariance for a position measurement.
    fn innovation(&self, z: Vec2<S>, r: [S; 2]) -> ([S; 2], [[S; 2]; 2]) {
        let p = &self.covariance;
        let nu = [z.x - self.mean[0], z.y - self.mean[1]];
        let s = [[p[0][0] + r[0], p[0][1]], [p[1][0], p[1][1] + r[1]]];
        (nu, s)
    }

    /// Log density of a position measurement under the predictive distribution.
    pub fn measurement_log_likelihood(&self, z: Vec2<S>, r: [S; 2]) -> S {
        let (nu, s) = self.innovation(z, r);
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        if !(det > S::zero()) {
            return S::neg_infinity();
        }
        let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
        let maha = nu[0] * (inv[0][0] * nu[0] + inv[0][1] * nu[1])
            + nu[1] * (inv[1][0] * nu[0] + inv[1][1] * nu[1]);
        -S::lit(0.5) * maha - (S::TAU()).ln() - S::lit(0.5) * det.ln()
    }

    /// Position-measurement update in Joseph form.
    pub fn correct(&self, z: Vec2<S>, r: [S; 2]) -> Self {
        let p = &self.covariance;
        let (nu, s) = self.innovation(z, r);
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];

        // K = P H^T S^-1, H selects the first two states.
        let mut k = [[S::zero(); 2]; 4];
        for i in 0..4 {
            for j in 0..2 {
                k[i][j] = p[i][0] * inv[0][j] + p[i][1] * inv[1][j];
            }
        }
        let mut mean = self.mean;
        for i in 0..4 {
            mean[i] = mean[i] + k[i][0] * nu[0] + k[i][1] * nu[1];
        }

        // A = I - K H
        let mut a = diag([S::one(); 4]);
        for i in 0..4 {
            a[i][0] = a[i][0] - k[i][0];
            a[i][1] = a[i][1] - k[i][1];
        }
        let ap = matmul(&a, p);
        let mut cov = matmul_bt(&ap, &a);
        for i in 0..4 {
            for j in 0..4 {
                cov[i][j] = cov[i][j] + k[i][0] * r[0] * k[j][0] + k[i][1] * r[1] * k[j][1];
            }
        }
        let mut out = Self { mean, covariance: cov }.symmetrized();
        if !out.is_positive_semidefinite(S::lit(-1e-9)) {
            log::warn!("covariance lost positive semidefiniteness after correction; flooring eigenvalues");
            out.covariance = floor_eigenvalues(&out.covariance, S::zero());
        }
        out
    }

    pub fn symmetrized(mut self) -> Self {
        let half = S::lit(0.5);
        for i in 0..4 {
            for j in (i + 1)..4 {
                let m = (self.covariance[i][j] + self.covariance[j][i]) * half;
                self.covariance[i][j] = m;
                self.covariance[j][i] = m;
            }
        }
        self
    }

    pub fn is_positive_semidefinite(&self, tol: S) -> bool {
        symmetric_eigenvalues(&self.covariance)
            .iter()
            .all(|&e| e >= tol)
    }
}

fn matmul<S: Scalar>(a: &Mat4<S>, b: &Mat4<S>) -> Mat4<S> {
    let mut c = zeros();
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// `a * b^T`
fn matmul_bt<S: Scalar>(a: &Mat4<S>, b: &Mat4<S>) -> Mat4<S> {
    let mut c = zeros();
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[j][k]).sum();
        }
    }
    c
}

/// Cyclic Jacobi eigen-decomposition of a symmetric 4×4 matrix.
///
/// Returns eigenvalues and the matrix whose columns are eigenvectors.
pub fn symmetric_eigen<S: Scalar>(m: &Mat4<S>) -> ([S; 4], Mat4<S>) {
    let mut a = *m;
    let mut v = diag([S::one(); 4]);
    let two = S::lit(2.0);
    for _sweep in 0..50 {
        let off: S = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off <= S::epsilon() * S::epsilon() {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                if a[p][q] == S::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (two * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..4 {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2], a[3][3]], v)
}

pub fn symmetric_eigenvalues<S: Scalar>(m: &Mat4<S>) -> [S; 4] {
    symmetric_eigen(m).0
}

/// Rebuilds `m` with every eigenvalue raised to at least `floor`.
pub fn floor_eigenvalues<S: Scalar>(m: &Mat4<S>, floor: S) -> Mat4<S> {
    let (vals, vecs) = symmetric_eigen(m);
    let mut out = zeros();
    for (k, &val) in vals.iter().enumerate() {
        let l = val.max(floor);
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = out[i][j] + vecs[i][k] * l * vecs[j][k];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: [f64; 4] = [0.01, 0.01, 0.25, 0.25];

    #[test]
    fn scalar_gaussian_product() {
        // 1-D prior N(0, 1) on x, measurement 1 with unit variance.
        let prior: GaussianBelief<f64> = GaussianBelief::new(Vec2::zero(), Vec2::zero(), [1.0, 1.0, 0.0, 0.0]);
        let post = prior.correct(Vec2::new(1.0, 0.0), [1.0, 1.0]);
        // closed form: mean = (0/1 + 1/1) / (1/1 + 1/1), var = 1 / (1 + 1)
        assert!((post.mean[0] - 0.5).abs() < 1e-10);
        assert!((post.covariance[0][0] - 0.5).abs() < 1e-10);
        assert!((post.mean[1] - 0.0).abs() < 1e-10);
    }

    #[test]
    fn exact_measurement_pins_position() {
        let prior: GaussianBelief<f64> = GaussianBelief::new(Vec2::new(1.0, 2.0), Vec2::new(0.5, 0.0), [1.0, 2.0, 1.0, 1.0]);
        let z = Vec2::new(3.0, -1.0);
        let post = prior.correct(z, [1e-14, 1e-14]);
        assert!((post.position() - z).norm() < 1e-9);
    }

    #[test]
    fn uninformative_measurement_keeps_prior() {
        let prior: GaussianBelief<f64> = GaussianBelief::new(Vec2::new(1.0, 2.0), Vec2::new(0.5, 0.0), [1.0, 2.0, 1.0, 1.0]);
        let post = prior.correct(Vec2::new(3.0, -1.0), [1e12, 1e12]);
        for i in 0..4 {
            assert!((post.mean[i] - prior.mean[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn inert_prediction_adds_process_noise() {
        let prior = GaussianBelief::new(Vec2::new(10.0, -4.0), Vec2::zero(), [0.3, 0.4, 0.0, 0.0]);
        let pred = prior.predict(0.0, 0.1, &Q);
        assert_eq!(pred.position(), prior.position());
        for i in 0..4 {
            for j in 0..4 {
                let expected = prior.covariance[i][j] + if i == j { Q[i] * 0.1 } else { 0.0 };
                assert!((pred.covariance[i][j] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn correction_shrinks_trace() {
        let prior: GaussianBelief<f64> = GaussianBelief::new(Vec2::new(1.0, 2.0), Vec2::new(0.5, 1.0), [1.0, 2.0, 1.0, 1.0])
            .predict(3.0, 0.1, &Q);
        let post = prior.correct(Vec2::new(1.5, 2.5), [0.0025, 0.0025]);
        assert!(post.trace() <= prior.trace());
        assert!(post.is_positive_semidefinite(-1e-9));
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let m = [
            [4.0, 1.0, 0.0, 0.0],
            [1.0, 3.0, 0.0, 0.0],
            [0.0, 0.0, 2.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
        ];
        let mut e = symmetric_eigenvalues(&m);
        e.sort_by(f64::total_cmp);
        let r = (5.0f64).sqrt();
        let expected = [-1.0, 2.0, (7.0 - r) / 2.0, (7.0 + r) / 2.0];
        for (a, b) in e.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{e:?}");
        }
        let floored = floor_eigenvalues(&m, 0.0);
        let mut e2 = symmetric_eigenvalues(&floored);
        e2.sort_by(f64::total_cmp);
        assert!(e2[0].abs() < 1e-12);
    }

    #[test]
    fn likelihood_prefers_nearby_measurement() {
        let g = GaussianBelief::new(Vec2::new(0.0, 0.0), Vec2::zero(), [1.0, 1.0, 1.0, 1.0]);
        let near = g.measurement_log_likelihood(Vec2::new(0.1, 0.0), [0.01, 0.01]);
        let far = g.measurement_log_likelihood(Vec2::new(2.0, 0.0), [0.01, 0.01]);
        assert!(near > far);
        // standard bivariate normal at the mean with unit covariance: -ln(2π)
        let g = GaussianBelief::new(Vec2::zero(), Vec2::zero(), [1.0, 1.0, 0.0, 0.0]);
        let at_mean = g.measurement_log_likelihood(Vec2::zero(), [0.0, 0.0]);
        assert!((at_mean + (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
    }
}

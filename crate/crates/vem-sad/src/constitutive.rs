//! Material parameters, stress reconstruction and the nonlinear coefficient
//! laws: the stress-assisted diffusion tensor M(sigma) and the active stress
//! modulation l(phi).

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar model parameters. `m_bound` is the uniform bound M used in the
/// weighted norms (largest eigenvalue of M^{-1} over the relevant stress
/// range).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub lambda: f64,
    pub mu: f64,
    pub theta: f64,
    pub m_bound: f64,
}

impl PhysicalParams {
    pub fn new(lambda: f64, mu: f64, theta: f64, m_bound: f64) -> Self {
        assert!(mu > 0.0, "mu must be positive");
        assert!(lambda >= 1.0, "lambda must be >= 1");
        assert!(m_bound > 0.0, "M bound must be positive");
        Self {
            lambda,
            mu,
            theta,
            m_bound,
        }
    }

    /// The solvability theory asks for theta <= 1/M; violations are legal at
    /// runtime but worth surfacing.
    pub fn theta_condition_satisfied(&self) -> bool {
        self.theta <= 1.0 / self.m_bound
    }
}

/// Stress-assisted diffusion tensor variants. `sigma^2` is the matrix square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DiffusionLaw {
    /// M(sigma) = m0 exp(-m1 tr sigma) I
    Exponential { m0: f64, m1: f64 },
    /// M(sigma) = m0 (I + m0 m1 sigma^2)
    Quadratic { m0: f64, m1: f64 },
    /// M(sigma) = m0 I + m1 sigma + m2 sigma^2
    Polynomial { m0: f64, m1: f64, m2: f64 },
}

impl DiffusionLaw {
    pub fn eval(&self, sigma: Matrix2<f64>) -> Matrix2<f64> {
        match *self {
            DiffusionLaw::Exponential { m0, m1 } => {
                Matrix2::identity() * (m0 * (-m1 * sigma.trace()).exp())
            }
            DiffusionLaw::Quadratic { m0, m1 } => {
                (Matrix2::identity() + sigma * sigma * (m0 * m1)) * m0
            }
            DiffusionLaw::Polynomial { m0, m1, m2 } => {
                Matrix2::identity() * m0 + sigma * m1 + sigma * sigma * m2
            }
        }
    }
}

/// Active (diffusion-induced) stress modulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ActiveStressLaw {
    /// l(phi) = k0 + phi^n / (k1 + phi^n), saturating at high concentration.
    Hill { k0: f64, k1: f64, n: u32 },
    /// l(phi) = k0 phi
    Linear { k0: f64 },
}

impl ActiveStressLaw {
    pub fn eval(&self, phi: f64) -> f64 {
        match *self {
            ActiveStressLaw::Hill { k0, k1, n } => {
                let p = phi.powi(n as i32);
                k0 + p / (k1 + p)
            }
            ActiveStressLaw::Linear { k0 } => k0 * phi,
        }
    }

    pub fn eval_deriv(&self, phi: f64) -> f64 {
        match *self {
            ActiveStressLaw::Hill { k0: _, k1, n } => {
                let p = phi.powi(n as i32 - 1);
                let q = phi * p;
                n as f64 * k1 * p / (k1 + q).powi(2)
            }
            ActiveStressLaw::Linear { k0 } => k0,
        }
    }
}

/// Cauchy stress from strain and total volumetric stress:
/// sigma = 2 mu eps - p_tilde I.
pub fn reconstruct_stress(strain: Matrix2<f64>, p_tilde: f64, mu: f64) -> Matrix2<f64> {
    strain * (2.0 * mu) - Matrix2::identity() * p_tilde
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
fn sym_eigenvalues(m: Matrix2<f64>) -> (f64, f64) {
    let half_tr = 0.5 * m.trace();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (half_tr * half_tr - det).max(0.0).sqrt();
    (half_tr - disc, half_tr + disc)
}

/// Exact inverse of M(sigma), checked symmetric positive definite.
pub fn eval_m_inverse(law: &DiffusionLaw, sigma: Matrix2<f64>) -> Result<Matrix2<f64>> {
    eval_m_inverse_at(law, sigma, Vector2::new(f64::NAN, f64::NAN))
}

/// As [`eval_m_inverse`], carrying the evaluation point into the error.
pub fn eval_m_inverse_at(
    law: &DiffusionLaw,
    sigma: Matrix2<f64>,
    point: Vector2<f64>,
) -> Result<Matrix2<f64>> {
    let m = law.eval(sigma);
    let (e0, e1) = sym_eigenvalues(m);
    if !(e0 > 0.0 && e0.is_finite() && e1.is_finite()) {
        return Err(Error::CoefficientNotSpd {
            x: point.x,
            y: point.y,
            s00: sigma[(0, 0)],
            s01: sigma[(0, 1)],
            s11: sigma[(1, 1)],
            e0,
            e1,
        });
    }
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    Ok(Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}

/// Uniform bound M estimated over a stress sample set: the largest spectral
/// norm of M^{-1}(sigma), i.e. the constant bounding x . M^{-1} x from above.
/// Monotone under sample-set inclusion.
pub fn estimate_m_bound(
    law: &DiffusionLaw,
    samples: impl IntoIterator<Item = Matrix2<f64>>,
) -> Result<f64> {
    let mut bound: f64 = 0.0;
    let mut seen = false;
    for sigma in samples {
        let inv = eval_m_inverse(law, sigma)?;
        let (_, emax) = sym_eigenvalues(inv);
        bound = bound.max(emax);
        seen = true;
    }
    if !seen {
        return Err(Error::Constitutive("empty stress sample set".into()));
    }
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stress_reconstruction_cases() {
        let i = Matrix2::identity();
        assert_eq!(reconstruct_stress(i, 1.0, 1.0), i);
        assert_eq!(
            reconstruct_stress(Matrix2::zeros(), 0.0, 3.0),
            Matrix2::zeros()
        );
        let strain = Matrix2::new(1.0, 2.0, 2.0, 3.0);
        let sigma = reconstruct_stress(strain, 4.0, 10.0);
        assert_eq!(sigma, Matrix2::new(16.0, 40.0, 40.0, 56.0));
    }

    #[test]
    fn exponential_inverse_closed_form() {
        let law = DiffusionLaw::Exponential { m0: 0.1, m1: 1e-4 };
        // tr sigma = 0 -> M^{-1} = 10 I.
        let inv = eval_m_inverse(&law, Matrix2::new(1.0, 0.3, 0.3, -1.0)).unwrap();
        assert_relative_eq!(inv[(0, 0)], 10.0, epsilon = 1e-12);
        assert_relative_eq!(inv[(1, 1)], 10.0, epsilon = 1e-12);
        assert_relative_eq!(inv[(0, 1)], 0.0);

        // m1 = 0 -> (1/m0) I regardless of sigma.
        let law0 = DiffusionLaw::Exponential { m0: 0.25, m1: 0.0 };
        let inv0 = eval_m_inverse(&law0, Matrix2::new(5.0, 1.0, 1.0, 2.0)).unwrap();
        assert_relative_eq!(inv0[(0, 0)], 4.0);

        // Closed form (1/m0) exp(m1 tr sigma) I for random symmetric inputs.
        for t in [-7.0, -0.4, 0.0, 2.2, 11.0] {
            let sigma = Matrix2::new(t / 2.0, 0.7, 0.7, t / 2.0);
            let inv = eval_m_inverse(&law, sigma).unwrap();
            let exact = (1.0 / 0.1) * (1e-4 * t).exp();
            assert_relative_eq!(inv[(0, 0)], exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn quadratic_law_diagonal_case() {
        let law = DiffusionLaw::Quadratic { m0: 1.0, m1: 1.0 };
        let sigma = Matrix2::new(1.0, 0.0, 0.0, 0.0);
        let m = law.eval(sigma);
        assert_eq!(m, Matrix2::new(2.0, 0.0, 0.0, 1.0));
        let inv = eval_m_inverse(&law, sigma).unwrap();
        assert_relative_eq!(inv[(0, 0)], 0.5);
        assert_relative_eq!(inv[(1, 1)], 1.0);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let laws = [
            DiffusionLaw::Exponential { m0: 0.3, m1: 2e-3 },
            DiffusionLaw::Quadratic { m0: 2.0, m1: 0.1 },
            DiffusionLaw::Polynomial {
                m0: 3.0,
                m1: 0.2,
                m2: 0.05,
            },
        ];
        let sigmas = [
            Matrix2::new(1.0, 0.5, 0.5, 2.0),
            Matrix2::new(-0.4, 1.1, 1.1, 0.9),
            Matrix2::new(3.0, -0.8, -0.8, 0.2),
        ];
        for law in &laws {
            for &s in &sigmas {
                let m = law.eval(s);
                let inv = eval_m_inverse(law, s).unwrap();
                let e = inv * m - Matrix2::identity();
                assert!(e.norm() < 1e-13, "law {law:?} residual {}", e.norm());
            }
        }
    }

    #[test]
    fn non_spd_coefficient_is_reported() {
        // Polynomial law with a large negative linear part loses positivity.
        let law = DiffusionLaw::Polynomial {
            m0: 1.0,
            m1: -10.0,
            m2: 0.0,
        };
        let sigma = Matrix2::new(1.0, 0.0, 0.0, 1.0);
        let err = eval_m_inverse(&law, sigma).unwrap_err();
        assert!(matches!(err, Error::CoefficientNotSpd { .. }), "{err}");
    }

    #[test]
    fn hill_law_values() {
        let hill = ActiveStressLaw::Hill {
            k0: 1.0,
            k1: 1.0,
            n: 2,
        };
        assert_relative_eq!(hill.eval(0.0), 1.0);
        assert_relative_eq!(hill.eval(1.0), 1.5);
        let lin = ActiveStressLaw::Linear { k0: 2.0 };
        assert_relative_eq!(lin.eval(3.0), 6.0);
    }

    #[test]
    fn hill_derivative_matches_finite_differences() {
        let hill = ActiveStressLaw::Hill {
            k0: 0.3,
            k1: 2.0,
            n: 2,
        };
        for phi in [-1.5, -0.2, 0.0, 0.7, 2.0] {
            let eps = 1e-6;
            let fd = (hill.eval(phi + eps) - hill.eval(phi - eps)) / (2.0 * eps);
            assert_relative_eq!(hill.eval_deriv(phi), fd, epsilon = 1e-8, max_relative = 1e-6);
        }
    }

    #[test]
    fn lipschitz_smoke_on_bounded_interval() {
        let hill = ActiveStressLaw::Hill {
            k0: 1.0,
            k1: 1.0,
            n: 2,
        };
        // On [-3, 3] the derivative is bounded; fit an empirical constant and
        // check the increment bound against it.
        let grid: Vec<f64> = (0..=600).map(|i| -3.0 + i as f64 * 0.01).collect();
        let l = grid
            .iter()
            .map(|&p| hill.eval_deriv(p).abs())
            .fold(0.0f64, f64::max);
        for w in grid.windows(7) {
            let (a, b) = (w[0], w[6]);
            assert!((hill.eval(a) - hill.eval(b)).abs() <= l * (a - b).abs() + 1e-12);
        }
    }

    #[test]
    fn m_bound_identity_and_monotonicity() {
        // M = I: spectral norm of the inverse is 1.
        let law = DiffusionLaw::Polynomial {
            m0: 1.0,
            m1: 0.0,
            m2: 0.0,
        };
        let b = estimate_m_bound(&law, [Matrix2::zeros()]).unwrap();
        assert_relative_eq!(b, 1.0);

        let law = DiffusionLaw::Exponential { m0: 0.1, m1: 1e-3 };
        let small = [
            Matrix2::new(1.0, 0.0, 0.0, 1.0),
            Matrix2::new(5.0, 0.0, 0.0, 5.0),
        ];
        let big = [
            Matrix2::new(1.0, 0.0, 0.0, 1.0),
            Matrix2::new(5.0, 0.0, 0.0, 5.0),
            Matrix2::new(50.0, 0.0, 0.0, 50.0),
        ];
        let bs = estimate_m_bound(&law, small).unwrap();
        let bb = estimate_m_bound(&law, big).unwrap();
        assert!(bs <= bb);
    }
}

//! Parameter-weighted norms.
//!
//! The displacement norm is 2 mu ||eps(.)||^2; the pressure norm carries the
//! weights 1/(2 mu) + 1/lambda; the flux norm is the coefficient-weighted
//! mass plus M ||div .||^2; the concentration norm carries 1/M + theta.
//! Fields enter as element-wise polynomials (projections), exact fields as
//! closures; all integrals use each element's volume rule.

use nalgebra::{Matrix2, Vector2};

use crate::polybasis::{ScalarPoly, VectorPoly};
use crate::quadrature::PolygonQuadrature;

#[derive(Debug, Clone, Copy, Default)]
pub struct FieldNorms {
    pub v1: f64,
    pub q1: f64,
    pub v2: f64,
    pub q2: f64,
}

impl FieldNorms {
    pub fn total(&self) -> f64 {
        (self.v1 * self.v1 + self.q1 * self.q1 + self.v2 * self.v2 + self.q2 * self.q2).sqrt()
    }
}

fn eps_of(poly: &VectorPoly, p: Vector2<f64>) -> Matrix2<f64> {
    poly.sym_grad(p)
}

/// 2 mu sum_E ∫ |eps(u_E) - eps_exact|^2; pass `None` for the exact part to
/// get the plain norm.
pub fn v1_error_sq(
    quads: &[PolygonQuadrature],
    polys: &[VectorPoly],
    eps_exact: Option<&dyn Fn(Vector2<f64>) -> Matrix2<f64>>,
    mu: f64,
) -> f64 {
    let mut s = 0.0;
    for (quad, poly) in quads.iter().zip(polys) {
        for (&p, &w) in quad.points.iter().zip(&quad.weights) {
            let mut e = eps_of(poly, p);
            if let Some(ex) = eps_exact {
                e -= ex(p);
            }
            s += w * (e[(0, 0)] * e[(0, 0)] + 2.0 * e[(0, 1)] * e[(0, 1)] + e[(1, 1)] * e[(1, 1)]);
        }
    }
    2.0 * mu * s
}

/// weight * sum_E ∫ (p_E - exact)^2.
pub fn scalar_error_sq(
    quads: &[PolygonQuadrature],
    polys: &[ScalarPoly],
    exact: Option<&dyn Fn(Vector2<f64>) -> f64>,
    weight: f64,
) -> f64 {
    let mut s = 0.0;
    for (quad, poly) in quads.iter().zip(polys) {
        for (&p, &w) in quad.points.iter().zip(&quad.weights) {
            let mut v = poly.eval(p);
            if let Some(ex) = exact {
                v -= ex(p);
            }
            s += w * v * v;
        }
    }
    weight * s
}

/// Flux norm: sum_E ∫ (z - z_exact) . Minv (z - z_exact)
///            + m_bound * sum_E ∫ (div z - div_exact)^2,
/// with `minv` evaluated per element and point and `div_z` the exact
/// recovered divergence polynomials.
#[allow(clippy::too_many_arguments)]
pub fn v2_error_sq(
    quads: &[PolygonQuadrature],
    zbar: &[VectorPoly],
    div_z: &[ScalarPoly],
    z_exact: Option<&dyn Fn(Vector2<f64>) -> Vector2<f64>>,
    div_exact: Option<&dyn Fn(Vector2<f64>) -> f64>,
    minv: &dyn Fn(usize, Vector2<f64>) -> Matrix2<f64>,
    m_bound: f64,
) -> f64 {
    let mut s = 0.0;
    for (e, quad) in quads.iter().enumerate() {
        for (&p, &w) in quad.points.iter().zip(&quad.weights) {
            let mut z = zbar[e].eval(p);
            if let Some(ex) = z_exact {
                z -= ex(p);
            }
            let m = minv(e, p);
            s += w * (m * z).dot(&z);
            let mut d = div_z[e].eval(p);
            if let Some(ex) = div_exact {
                d -= ex(p);
            }
            s += w * m_bound * d * d;
        }
    }
    s
}

/// Pressure weight 1/(2 mu) + 1/lambda.
pub fn q1_weight(mu: f64, lambda: f64) -> f64 {
    0.5 / mu + 1.0 / lambda
}

/// Concentration weight 1/M + theta.
pub fn q2_weight(m_bound: f64, theta: f64) -> f64 {
    1.0 / m_bound + theta
}

/// Element-wise polynomial difference helpers for the fixed-point stopping
/// norm.
pub fn vector_diff(a: &[VectorPoly], b: &[VectorPoly]) -> Vec<VectorPoly> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut d = x.clone();
            d.x -= &y.x;
            d.y -= &y.y;
            d
        })
        .collect()
}

pub fn scalar_diff(a: &[ScalarPoly], b: &[ScalarPoly]) -> Vec<ScalarPoly> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut d = x.clone();
            d.coeffs -= &y.coeffs;
            d
        })
        .collect()
}

/// Divergence of projected (polynomial) fluxes, element-wise.
pub fn poly_divergence(polys: &[VectorPoly]) -> Vec<ScalarPoly> {
    polys
        .iter()
        .map(|v| {
            let k = v.k;
            let h = v.frame.h;
            let dx = crate::polybasis::poly_dx(&v.x, k, h);
            let dy = crate::polybasis::poly_dy(&v.y, k, h);
            ScalarPoly {
                frame: v.frame,
                k: k - 1,
                coeffs: dx + dy,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, BoundaryPartition, Rect};
    use crate::polybasis::ElementFrame;
    use crate::quadrature::polygon_quadrature;
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn constant_concentration_norm() {
        // phi = 1 on the unit square with M = 4, theta = 1/4:
        // ||phi||_{Q2}^2 = 1/4 + 1/4 = 1/2.
        let mesh =
            generate_square_mesh(1, Rect::unit(), &BoundaryPartition::all_dirichlet()).unwrap();
        let quads = vec![polygon_quadrature(&mesh.element_points(0), 4).unwrap()];
        let frame = mesh.frame(0);
        let phi = ScalarPoly {
            frame,
            k: 0,
            coeffs: DVector::from_vec(vec![1.0]),
        };
        let v = scalar_error_sq(&quads, &[phi], None, q2_weight(4.0, 0.25));
        assert_relative_eq!(v, 0.5, epsilon = 1e-13);
    }

    #[test]
    fn v1_norm_scales_with_mu() {
        let mesh =
            generate_square_mesh(1, Rect::unit(), &BoundaryPartition::all_dirichlet()).unwrap();
        let quads = vec![polygon_quadrature(&mesh.element_points(0), 4).unwrap()];
        let frame: ElementFrame = mesh.frame(0);
        // u = (x - x_E, 0): eps = diag(1, 0).
        let mut u = VectorPoly::zero(frame, 1);
        u.x[1] = frame.h;
        let n1 = v1_error_sq(&quads, std::slice::from_ref(&u), None, 1.0);
        let n2 = v1_error_sq(&quads, &[u], None, 2.0);
        assert_relative_eq!(n1, 2.0, epsilon = 1e-13);
        assert_relative_eq!(n2 / n1, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn zero_fields_have_zero_norms() {
        let mesh =
            generate_square_mesh(2, Rect::unit(), &BoundaryPartition::all_dirichlet()).unwrap();
        let quads: Vec<_> = (0..mesh.n_elements())
            .map(|e| polygon_quadrature(&mesh.element_points(e), 4).unwrap())
            .collect();
        let us: Vec<VectorPoly> = (0..mesh.n_elements())
            .map(|e| VectorPoly::zero(mesh.frame(e), 2))
            .collect();
        let ps: Vec<ScalarPoly> = (0..mesh.n_elements())
            .map(|e| ScalarPoly::zero(mesh.frame(e), 1))
            .collect();
        assert_eq!(v1_error_sq(&quads, &us, None, 100.0), 0.0);
        assert_eq!(scalar_error_sq(&quads, &ps, None, 3.0), 0.0);
    }

    #[test]
    fn flux_norm_with_identity_coefficient() {
        let mesh =
            generate_square_mesh(1, Rect::unit(), &BoundaryPartition::all_dirichlet()).unwrap();
        let quads = vec![polygon_quadrature(&mesh.element_points(0), 4).unwrap()];
        let frame = mesh.frame(0);
        // z = (x - x_E, y - y_E): |z|^2 integrates to ∫ r^2, div = 2.
        let mut z = VectorPoly::zero(frame, 1);
        z.x[1] = frame.h;
        z.y[2] = frame.h;
        let dz = poly_divergence(std::slice::from_ref(&z));
        let m_bound = 3.0;
        let v = v2_error_sq(
            &quads,
            &[z],
            &dz,
            None,
            None,
            &|_, _| Matrix2::identity(),
            m_bound,
        );
        // ∫ ((x-.5)^2+(y-.5)^2) = 1/6; div term: 3 * 4 * 1.
        assert_relative_eq!(v, 1.0 / 6.0 + 12.0, epsilon = 1e-12);
    }
}

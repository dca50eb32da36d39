//! Scaled monomial bases on polygonal elements and their vector splits.
//!
//! All element-local polynomial work goes through the monomials
//! m_a(x) = ((x - x_E)/h_E)^a ordered by total degree and then by
//! decreasing x-power: 1, mx, my, mx^2, mx my, my^2, ... The scaling keeps
//! values O(1) on the element independently of h.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::quadrature::PolygonQuadrature;

/// Element-local coordinate frame: barycentre and diameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementFrame {
    pub center: Vector2<f64>,
    pub h: f64,
}

impl ElementFrame {
    /// Scaled local coordinates ((x-x_E)/h_E, (y-y_E)/h_E).
    #[inline]
    pub fn local(&self, p: Vector2<f64>) -> Vector2<f64> {
        (p - self.center) / self.h
    }
}

/// Number of scalar monomials of total degree <= k.
#[inline]
pub fn dim_poly(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponent pairs (a1, a2) of the monomials up to degree k, in basis order.
pub fn exponents(k: usize) -> &'static [(u32, u32)] {
    use std::sync::OnceLock;
    const K_MAX: usize = 12;
    static TABLE: OnceLock<Vec<(u32, u32)>> = OnceLock::new();
    assert!(k <= K_MAX, "monomial degree {k} above table limit");
    let table = TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(dim_poly(K_MAX));
        for deg in 0..=K_MAX as u32 {
            for ax in (0..=deg).rev() {
                out.push((ax, deg - ax));
            }
        }
        out
    });
    &table[..dim_poly(k)]
}

/// Index of the monomial with exponents (a1, a2) in basis order.
#[inline]
pub fn monomial_index(a1: u32, a2: u32) -> usize {
    let d = (a1 + a2) as usize;
    d * (d + 1) / 2 + a2 as usize
}

/// The scaled monomial basis M_k(E).
#[derive(Debug, Clone)]
pub struct ScaledMonomialBasis {
    pub frame: ElementFrame,
    pub k: usize,
    pub exps: Vec<(u32, u32)>,
}

impl ScaledMonomialBasis {
    pub fn new(frame: ElementFrame, k: usize) -> Self {
        Self {
            frame,
            k,
            exps: exponents(k).to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn eval(&self, i: usize, p: Vector2<f64>) -> f64 {
        let l = self.frame.local(p);
        let (a1, a2) = self.exps[i];
        l.x.powi(a1 as i32) * l.y.powi(a2 as i32)
    }

    /// Values of every basis monomial at `p`.
    pub fn eval_all(&self, p: Vector2<f64>) -> DVector<f64> {
        let l = self.frame.local(p);
        let mut out = DVector::zeros(self.dim());
        for (i, &(a1, a2)) in self.exps.iter().enumerate() {
            out[i] = l.x.powi(a1 as i32) * l.y.powi(a2 as i32);
        }
        out
    }

    pub fn grad(&self, i: usize, p: Vector2<f64>) -> Vector2<f64> {
        let l = self.frame.local(p);
        let (a1, a2) = self.exps[i];
        let gx = if a1 == 0 {
            0.0
        } else {
            a1 as f64 / self.frame.h * l.x.powi(a1 as i32 - 1) * l.y.powi(a2 as i32)
        };
        let gy = if a2 == 0 {
            0.0
        } else {
            a2 as f64 / self.frame.h * l.x.powi(a1 as i32) * l.y.powi(a2 as i32 - 1)
        };
        Vector2::new(gx, gy)
    }

    /// Mass matrix H_ij = ∫_E m_i m_j by the given quadrature (exact when the
    /// rule degree is >= 2k).
    pub fn mass_matrix(&self, quad: &PolygonQuadrature) -> DMatrix<f64> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for (p, &w) in quad.points.iter().zip(&quad.weights) {
            let v = self.eval_all(*p);
            // Accumulate symmetrically so H - H^T is exactly zero.
            for i in 0..n {
                for j in i..n {
                    let t = w * v[i] * v[j];
                    h[(i, j)] += t;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
        }
        h
    }
}

/// A scalar polynomial on an element, as coefficients over M_k(E).
#[derive(Debug, Clone)]
pub struct ScalarPoly {
    pub frame: ElementFrame,
    pub k: usize,
    pub coeffs: DVector<f64>,
}

impl ScalarPoly {
    pub fn zero(frame: ElementFrame, k: usize) -> Self {
        Self {
            frame,
            k,
            coeffs: DVector::zeros(dim_poly(k)),
        }
    }

    pub fn eval(&self, p: Vector2<f64>) -> f64 {
        let l = self.frame.local(p);
        let mut s = 0.0;
        for (i, &(a1, a2)) in exponents(self.k).iter().enumerate() {
            s += self.coeffs[i] * l.x.powi(a1 as i32) * l.y.powi(a2 as i32);
        }
        s
    }

    pub fn grad(&self, p: Vector2<f64>) -> Vector2<f64> {
        let basis = ScaledMonomialBasis::new(self.frame, self.k);
        let mut g = Vector2::zeros();
        for i in 0..basis.dim() {
            g += basis.grad(i, p) * self.coeffs[i];
        }
        g
    }
}

/// A vector polynomial on an element, with per-component coefficients over
/// M_k(E).
#[derive(Debug, Clone)]
pub struct VectorPoly {
    pub frame: ElementFrame,
    pub k: usize,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl VectorPoly {
    pub fn zero(frame: ElementFrame, k: usize) -> Self {
        let n = dim_poly(k);
        Self {
            frame,
            k,
            x: DVector::zeros(n),
            y: DVector::zeros(n),
        }
    }

    /// Wraps the stacked coefficient vector [x-block; y-block].
    pub fn from_stacked(frame: ElementFrame, k: usize, c: &DVector<f64>) -> Self {
        let n = dim_poly(k);
        assert_eq!(c.len(), 2 * n);
        Self {
            frame,
            k,
            x: c.rows(0, n).into_owned(),
            y: c.rows(n, n).into_owned(),
        }
    }

    pub fn eval(&self, p: Vector2<f64>) -> Vector2<f64> {
        let basis = ScaledMonomialBasis::new(self.frame, self.k);
        let v = basis.eval_all(p);
        Vector2::new(self.x.dot(&v), self.y.dot(&v))
    }

    /// Jacobian (row-wise gradient) at `p`.
    pub fn grad(&self, p: Vector2<f64>) -> Matrix2<f64> {
        let basis = ScaledMonomialBasis::new(self.frame, self.k);
        let mut gx = Vector2::zeros();
        let mut gy = Vector2::zeros();
        for i in 0..basis.dim() {
            let g = basis.grad(i, p);
            gx += g * self.x[i];
            gy += g * self.y[i];
        }
        Matrix2::new(gx.x, gx.y, gy.x, gy.y)
    }

    /// Symmetric gradient at `p`.
    pub fn sym_grad(&self, p: Vector2<f64>) -> Matrix2<f64> {
        let g = self.grad(p);
        0.5 * (g + g.transpose())
    }

    pub fn divergence(&self, p: Vector2<f64>) -> f64 {
        let g = self.grad(p);
        g[(0, 0)] + g[(1, 1)]
    }
}

/// d/dx of a polynomial given by coefficients over M_k(E): coefficients over
/// M_{k-1}(E).
pub fn poly_dx(coeffs: &DVector<f64>, k: usize, h: f64) -> DVector<f64> {
    assert!(k >= 1);
    let mut out = DVector::zeros(dim_poly(k - 1));
    for (i, &(a1, a2)) in exponents(k).iter().enumerate() {
        if a1 > 0 {
            out[monomial_index(a1 - 1, a2)] += coeffs[i] * a1 as f64 / h;
        }
    }
    out
}

/// d/dy counterpart of [`poly_dx`].
pub fn poly_dy(coeffs: &DVector<f64>, k: usize, h: f64) -> DVector<f64> {
    assert!(k >= 1);
    let mut out = DVector::zeros(dim_poly(k - 1));
    for (i, &(a1, a2)) in exponents(k).iter().enumerate() {
        if a2 > 0 {
            out[monomial_index(a1, a2 - 1)] += coeffs[i] * a2 as f64 / h;
        }
    }
    out
}

/// Basis of the splitting (P_k)^2 = grad P_{k+1} ⊕ m_perp P_{k-1}, with
/// every member expanded in component monomial coefficients over M_k(E).
///
/// The gradient part has (k+2)(k+3)/2 - 1 members, the perp part k(k+1)/2,
/// and together they span the full 2*dim(P_k) vector polynomial space.
#[derive(Debug, Clone)]
pub struct VectorBasisSplit {
    pub frame: ElementFrame,
    pub k: usize,
    /// Component coefficients of each basis member, gradient part first.
    pub members: Vec<VectorPoly>,
    pub n_grad: usize,
    pub n_perp: usize,
}

impl VectorBasisSplit {
    pub fn new(frame: ElementFrame, k: usize) -> Self {
        let n_k = dim_poly(k);
        let mut members = Vec::new();

        // Gradient part: grad of each non-constant monomial of M_{k+1}.
        // grad m_(a1,a2) = (a1/h m_(a1-1,a2), a2/h m_(a1,a2-1)).
        for &(a1, a2) in exponents(k + 1).iter().skip(1) {
            let mut m = VectorPoly::zero(frame, k);
            if a1 > 0 {
                m.x[monomial_index(a1 - 1, a2)] = a1 as f64 / frame.h;
            }
            if a2 > 0 {
                m.y[monomial_index(a1, a2 - 1)] = a2 as f64 / frame.h;
            }
            members.push(m);
        }
        let n_grad = members.len();

        // Perp part: m_perp * m_b with m_perp = (my, -mx).
        if k >= 1 {
            for &(b1, b2) in exponents(k - 1).iter() {
                let mut m = VectorPoly::zero(frame, k);
                m.x[monomial_index(b1, b2 + 1)] = 1.0;
                m.y[monomial_index(b1 + 1, b2)] = -1.0;
                members.push(m);
            }
        }
        let n_perp = members.len() - n_grad;
        debug_assert_eq!(n_grad, dim_poly(k + 1) - 1);
        debug_assert_eq!(n_perp, if k == 0 { 0 } else { k * (k + 1) / 2 });
        debug_assert_eq!(members.len(), 2 * n_k);

        Self {
            frame,
            k,
            members,
            n_grad,
            n_perp,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Gram matrix G_ij = ∫_E s_i · s_j.
    pub fn gram(&self, quad: &PolygonQuadrature) -> DMatrix<f64> {
        let n = self.len();
        let mut g = DMatrix::zeros(n, n);
        let vals: Vec<Vec<Vector2<f64>>> = quad
            .points
            .iter()
            .map(|&p| self.members.iter().map(|m| m.eval(p)).collect())
            .collect();
        for (q, &w) in vals.iter().zip(&quad.weights) {
            for i in 0..n {
                for j in i..n {
                    g[(i, j)] += w * q[i].dot(&q[j]);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    /// Combines split-basis coefficients into a component-form polynomial.
    pub fn combine(&self, coeffs: &DVector<f64>) -> VectorPoly {
        assert_eq!(coeffs.len(), self.len());
        let mut out = VectorPoly::zero(self.frame, self.k);
        for (c, m) in coeffs.iter().zip(&self.members) {
            out.x.axpy(*c, &m.x, 1.0);
            out.y.axpy(*c, &m.y, 1.0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::polygon_quadrature;
    use approx::assert_relative_eq;

    fn unit_square_frame() -> (Vec<Vector2<f64>>, ElementFrame) {
        let verts = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(0.0, 1.0),
        ];
        let frame = ElementFrame {
            center: Vector2::new(0.5, 0.5),
            h: 2.0f64.sqrt(),
        };
        (verts, frame)
    }

    #[test]
    fn basis_counts() {
        let (_, frame) = unit_square_frame();
        assert_eq!(ScaledMonomialBasis::new(frame, 2).dim(), 6);
        assert_eq!(ScaledMonomialBasis::new(frame, 0).dim(), 1);
        let s1 = VectorBasisSplit::new(frame, 1);
        assert_eq!(s1.n_grad, 5);
        assert_eq!(s1.n_perp, 1);
        let s0 = VectorBasisSplit::new(frame, 0);
        assert_eq!(s0.n_grad, 2);
        assert_eq!(s0.n_perp, 0);
    }

    #[test]
    fn monomials_center_to_delta() {
        let (_, frame) = unit_square_frame();
        let basis = ScaledMonomialBasis::new(frame, 3);
        let v = basis.eval_all(frame.center);
        assert_relative_eq!(v[0], 1.0);
        for i in 1..basis.dim() {
            assert_relative_eq!(v[i], 0.0);
        }
    }

    #[test]
    fn ordering_is_degree_then_lex() {
        assert_eq!(
            exponents(2),
            vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        );
        assert_eq!(monomial_index(1, 1), 4);
        assert_eq!(monomial_index(0, 2), 5);
    }

    #[test]
    fn mass_matrix_entry_on_unit_square() {
        let (verts, frame) = unit_square_frame();
        let basis = ScaledMonomialBasis::new(frame, 1);
        let quad = polygon_quadrature(&verts, 4).unwrap();
        let h = basis.mass_matrix(&quad);
        assert_relative_eq!(h[(0, 0)], 1.0, epsilon = 1e-13);
        // ∫ ((x-0.5)/sqrt(2))^2 = 1/24.
        assert_relative_eq!(h[(1, 1)], 1.0 / 24.0, epsilon = 1e-14);
        assert_eq!((h.clone() - h.transpose()).norm(), 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (_, frame) = unit_square_frame();
        let basis = ScaledMonomialBasis::new(frame, 3);
        let p = Vector2::new(0.37, 0.81);
        let eps = 1e-6;
        for i in 0..basis.dim() {
            let g = basis.grad(i, p);
            let fx = (basis.eval(i, p + Vector2::new(eps, 0.0))
                - basis.eval(i, p - Vector2::new(eps, 0.0)))
                / (2.0 * eps);
            let fy = (basis.eval(i, p + Vector2::new(0.0, eps))
                - basis.eval(i, p - Vector2::new(0.0, eps)))
                / (2.0 * eps);
            assert_relative_eq!(g.x, fx, epsilon = 1e-8, max_relative = 1e-6);
            assert_relative_eq!(g.y, fy, epsilon = 1e-8, max_relative = 1e-6);
        }
    }

    #[test]
    fn split_reproduces_vector_polynomials() {
        // Project a random (P_1)^2 field onto the split basis and check the
        // residual vanishes: the split spans the whole space.
        let (verts, frame) = unit_square_frame();
        let split = VectorBasisSplit::new(frame, 1);
        let quad = polygon_quadrature(&verts, 6).unwrap();
        let gram = split.gram(&quad);

        let field = |p: Vector2<f64>| {
            Vector2::new(0.3 - 1.2 * p.x + 0.7 * p.y, -0.8 + 0.5 * p.x + 2.0 * p.y)
        };
        let n = split.len();
        let mut rhs = DVector::zeros(n);
        for (p, &w) in quad.points.iter().zip(&quad.weights) {
            let f = field(*p);
            for i in 0..n {
                rhs[i] += w * f.dot(&split.members[i].eval(*p));
            }
        }
        let coeffs = gram.clone().lu().solve(&rhs).unwrap();
        let poly = split.combine(&coeffs);
        for &p in &quad.points {
            let d = poly.eval(p) - field(p);
            assert!(d.norm() < 1e-12, "residual {} at {:?}", d.norm(), p);
        }
    }

    #[test]
    fn vector_poly_divergence() {
        let (_, frame) = unit_square_frame();
        // v = (x - x_E, y - y_E) = h * (mx, my): div = 2.
        let mut v = VectorPoly::zero(frame, 1);
        v.x[1] = frame.h;
        v.y[2] = frame.h;
        assert_relative_eq!(v.divergence(Vector2::new(0.3, 0.9)), 2.0, epsilon = 1e-14);
    }
}

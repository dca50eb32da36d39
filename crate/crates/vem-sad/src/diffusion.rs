//! Local virtual element machinery for the flux / concentration pair.
//!
//! The local flux space of degree k2 in {0, 1} is of H(div) type: its dofs
//! are the values of xi.n at the k2+1 Gauss-Lobatto points of every edge
//! (the midpoint for k2 = 0, the endpoints for k2 = 1), moments against the
//! gradient basis of degree k2-1 and against the perp basis of degree k2.
//! The divergence of a virtual flux is recovered exactly in P_k2(E), and the
//! L2 projection onto (P_k2)^2 is computed through the gradient/perp split.
//! The concentration space is P_k2(E) in scaled-monomial coefficients.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;
use crate::polybasis::{
    dim_poly, ElementFrame, ScalarPoly, ScaledMonomialBasis, VectorBasisSplit, VectorPoly,
};
use crate::quadrature::{edge_gauss, gauss_lobatto, polygon_quadrature, PolygonQuadrature};

/// Meaning of a local flux DoF, for global numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum V2DofKind {
    /// Value of xi.n (outward) at Gauss-Lobatto point `point` of local edge
    /// `edge`, ordered along the element's traversal.
    EdgePoint { edge: usize, point: usize },
    /// Moment against the index-th member of the gradient basis of degree
    /// k2-1.
    GradMoment { index: usize },
    /// Moment against the index-th member of the perp basis of degree k2.
    PerpMoment { index: usize },
}

struct EdgeData {
    start: Vector2<f64>,
    end: Vector2<f64>,
    normal: Vector2<f64>,
    length: f64,
    gauss_pts: Vec<Vector2<f64>>,
    gauss_wts: Vec<f64>,
    /// Lagrange values of the k2+1 normal-trace nodes at the quadrature
    /// points.
    lagrange: Vec<Vec<f64>>,
    /// Gauss-Lobatto node positions carrying the dofs.
    nodes: Vec<Vector2<f64>>,
    /// Local dof index of each node.
    node_dofs: Vec<usize>,
}

pub struct DiffusionLocalSpace {
    pub element: usize,
    pub k2: usize,
    pub frame: ElementFrame,
    pub n_edges: usize,
    pub n_dofs: usize,
    /// dim P_k2: local concentration coefficients.
    pub n_conc: usize,
    dof_kinds: Vec<V2DofKind>,
    /// L2 projection onto (P_k2)^2 in split-basis coefficients.
    proj_split: DMatrix<f64>,
    split: VectorBasisSplit,
    /// DoF functionals applied to the split basis members.
    dof_of_poly: DMatrix<f64>,
    /// Moments of div xi against M_k2 as functionals on the dofs.
    div_moments: DMatrix<f64>,
    /// Concentration mass matrix H_k2.
    pub mass_conc: DMatrix<f64>,
    pub quad: PolygonQuadrature,
    edges: Vec<EdgeData>,
}

impl DiffusionLocalSpace {
    pub fn build(mesh: &PolygonalMesh, e: usize, k2: usize, quad_degree: usize) -> Result<Self> {
        assert!(k2 <= 1, "flux degree supported for k2 in {{0, 1}}");
        let frame = mesh.frame(e);
        let pts = mesh.element_points(e);
        let n_edges = pts.len();
        let quad = polygon_quadrature(&pts, quad_degree.max(2 * k2 + 4))?;

        let n_conc = dim_poly(k2);
        let n_grad = n_conc - 1; // dim of the gradient basis of degree k2-1
        let n_perp = k2 * (k2 + 1) / 2; // dim of the perp basis of degree k2
        let n_dofs = n_edges * (k2 + 1) + n_grad + n_perp;

        let mut dof_kinds = Vec::with_capacity(n_dofs);
        for edge in 0..n_edges {
            for point in 0..=k2 {
                dof_kinds.push(V2DofKind::EdgePoint { edge, point });
            }
        }
        for index in 0..n_grad {
            dof_kinds.push(V2DofKind::GradMoment { index });
        }
        for index in 0..n_perp {
            dof_kinds.push(V2DofKind::PerpMoment { index });
        }
        let base22 = n_edges * (k2 + 1);
        let base23 = base22 + n_grad;

        let edges = build_edge_data(&pts, k2, n_edges);

        let basis_c = ScaledMonomialBasis::new(frame, k2);
        let mass_conc = basis_c.mass_matrix(&quad);

        // Moments of div xi against M_k2:
        // ∫ (div xi) m = -∫ xi . grad m + ∮ (xi.n) m,
        // where the volume term is a D22 dof for non-constant m.
        let mut div_moments = DMatrix::zeros(n_conc, n_dofs);
        for r in 0..n_conc {
            let mut row = boundary_trace_functional(&edges, n_dofs, |x| basis_c.eval(r, x));
            if r >= 1 {
                row[base22 + r - 1] -= 1.0;
            }
            div_moments.row_mut(r).copy_from(&row.transpose());
        }

        // Split basis of (P_k2)^2 and its Gram.
        let split = VectorBasisSplit::new(frame, k2);
        let gram = split.gram(&quad);
        let gram_lu = gram.lu();

        // Cross mass ∫ m_r^{(k2)} m_s^{(k2+1)}.
        let basis_hi = ScaledMonomialBasis::new(frame, k2 + 1);
        let mut cross = DMatrix::zeros(n_conc, dim_poly(k2 + 1));
        for (&p, &w) in quad.points.iter().zip(&quad.weights) {
            let lo = basis_c.eval_all(p);
            let hi = basis_hi.eval_all(p);
            for r in 0..n_conc {
                for s in 0..dim_poly(k2 + 1) {
                    cross[(r, s)] += w * lo[r] * hi[s];
                }
            }
        }

        // Divergence coefficients as functionals: H_k2^{-1} * div_moments.
        let div_coeff = mass_conc
            .clone()
            .lu()
            .solve(&div_moments)
            .ok_or_else(|| Error::SingularElement {
                element: e,
                detail: "singular concentration mass matrix".into(),
            })?;

        // Moments of xi against the split basis:
        //  - gradient member grad m_s (m_s non-constant in M_{k2+1}):
        //    ∫ xi . grad m_s = -∫ (div xi) m_s + ∮ (xi.n) m_s
        //  - perp member: D23 dof.
        let mut mom = DMatrix::zeros(split.len(), n_dofs);
        for j in 0..split.n_grad {
            let s = j + 1; // index into M_{k2+1}
            let mut row = boundary_trace_functional(&edges, n_dofs, |x| basis_hi.eval(s, x));
            row -= div_coeff.transpose() * cross.column(s);
            mom.row_mut(j).copy_from(&row.transpose());
        }
        for l in 0..split.n_perp {
            mom[(split.n_grad + l, base23 + l)] = 1.0;
        }
        let proj_split = gram_lu.solve(&mom).ok_or_else(|| Error::SingularElement {
            element: e,
            detail: "singular split Gram matrix".into(),
        })?;

        // DoF functionals applied to the split members.
        let mut dof_of_poly = DMatrix::zeros(n_dofs, split.len());
        for (a, member) in split.members.iter().enumerate() {
            for ed in &edges {
                for (p, &node) in ed.nodes.iter().enumerate() {
                    dof_of_poly[(ed.node_dofs[p], a)] = member.eval(node).dot(&ed.normal);
                }
            }
            // D22: moments against the gradient basis of degree k2-1, i.e.
            // grad m_r for non-constant m_r in M_k2.
            for j in 0..n_grad {
                let r = j + 1;
                let v: f64 = quad
                    .points
                    .iter()
                    .zip(&quad.weights)
                    .map(|(&p, &w)| w * member.eval(p).dot(&basis_c.grad(r, p)))
                    .sum();
                dof_of_poly[(base22 + j, a)] = v;
            }
            // D23: moments against the perp basis of degree k2.
            if n_perp > 0 {
                let perp = VectorBasisSplit::new(frame, k2);
                for l in 0..n_perp {
                    let pm = &perp.members[perp.n_grad + l];
                    let v: f64 = quad
                        .points
                        .iter()
                        .zip(&quad.weights)
                        .map(|(&p, &w)| w * member.eval(p).dot(&pm.eval(p)))
                        .sum();
                    dof_of_poly[(base23 + l, a)] = v;
                }
            }
        }

        // Unisolvence check: the dof matrix of the projection pipeline must
        // reproduce polynomials; rank deficiency signals a broken element.
        {
            let pd = &proj_split * &dof_of_poly;
            let id = DMatrix::identity(split.len(), split.len());
            if (pd - id).amax() > 1e-8 {
                return Err(Error::SingularElement {
                    element: e,
                    detail: "flux dof/projection pipeline fails polynomial reproduction".into(),
                });
            }
        }

        Ok(Self {
            element: e,
            k2,
            frame,
            n_edges,
            n_dofs,
            n_conc,
            dof_kinds,
            proj_split,
            split,
            dof_of_poly,
            div_moments,
            mass_conc,
            quad,
            edges,
        })
    }

    pub fn dof_kinds(&self) -> &[V2DofKind] {
        &self.dof_kinds
    }

    /// L2-projected polynomial flux of a local DoF vector.
    pub fn project_l2(&self, dofs: &DVector<f64>) -> VectorPoly {
        let c = &self.proj_split * dofs;
        self.split.combine(&c)
    }

    /// Exact divergence of a virtual flux in P_k2(E).
    pub fn divergence(&self, dofs: &DVector<f64>) -> Result<ScalarPoly> {
        let moments = &self.div_moments * dofs;
        let coeffs = self
            .mass_conc
            .clone()
            .lu()
            .solve(&moments)
            .ok_or_else(|| Error::SingularElement {
                element: self.element,
                detail: "singular concentration mass matrix".into(),
            })?;
        Ok(ScalarPoly {
            frame: self.frame,
            k: self.k2,
            coeffs,
        })
    }

    /// Weighted flux matrix a2h with pointwise coefficient `coeff` (the
    /// inverse diffusion tensor): consistency on projections plus the
    /// dof-matrix stabilization scaled by ||∫ coeff||_F.
    pub fn local_a2h(
        &self,
        coeff: &dyn Fn(Vector2<f64>) -> Result<Matrix2<f64>>,
    ) -> Result<DMatrix<f64>> {
        let n = self.split.len();
        let mut weighted = DMatrix::zeros(n, n);
        let mut integral = Matrix2::zeros();
        for (&p, &w) in self.quad.points.iter().zip(&self.quad.weights) {
            let m = coeff(p)?;
            check_spd(&m, p)?;
            integral += m * w;
            let vals: Vec<Vector2<f64>> = self.split.members.iter().map(|s| s.eval(p)).collect();
            for a in 0..n {
                let ma = m * vals[a];
                for b in a..n {
                    weighted[(a, b)] += w * ma.dot(&vals[b]);
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                weighted[(a, b)] = weighted[(b, a)];
            }
        }
        let tau = integral.norm(); // Frobenius norm of ∫_E coeff
        let consistency = self.proj_split.transpose() * weighted * &self.proj_split;
        let id = DMatrix::identity(self.n_dofs, self.n_dofs);
        let defect = id - &self.dof_of_poly * &self.proj_split;
        let stab = defect.transpose() * defect * tau;
        let k = consistency + stab;
        let kt = k.transpose();
        Ok(0.5 * (k + kt))
    }

    /// Coupling block b2(xi, psi) = ∫ psi div xi (n_dofs x n_conc).
    pub fn local_b2(&self) -> DMatrix<f64> {
        self.div_moments.transpose()
    }

    /// Concentration mass matrix.
    pub fn local_c2(&self) -> DMatrix<f64> {
        self.mass_conc.clone()
    }

    /// Source vector G2(psi) = -∫ g psi.
    pub fn local_g2(&self, g: &dyn Fn(Vector2<f64>) -> f64) -> DVector<f64> {
        let basis = ScaledMonomialBasis::new(self.frame, self.k2);
        let mut out = DVector::zeros(self.n_conc);
        for (&p, &w) in self.quad.points.iter().zip(&self.quad.weights) {
            let gv = g(p);
            let m = basis.eval_all(p);
            for r in 0..self.n_conc {
                out[r] -= w * gv * m[r];
            }
        }
        out
    }

    /// Essential-boundary load F2(xi) = <phi_D, xi.n> on local edge `edge`.
    pub fn local_f2(&self, edge: usize, phi_d: &dyn Fn(Vector2<f64>) -> f64) -> DVector<f64> {
        let ed = &self.edges[edge];
        let (pts, wts) = edge_gauss(ed.start, ed.end, 8);
        let params = nodes_param(self.k2);
        let mut out = DVector::zeros(self.n_dofs);
        for (&x, &w) in pts.iter().zip(&wts) {
            let s = param_on_edge(ed, x);
            let lag = lagrange_at(&params, s);
            let pv = phi_d(x) * w;
            for (node, &dof) in ed.node_dofs.iter().enumerate() {
                out[dof] += pv * lag[node];
            }
        }
        out
    }

    /// DoF vector of a smooth flux field (the Fortin interpolant's image).
    ///
    /// Edge dofs are the values at the Gauss-Lobatto nodes of the L2(e)
    /// projection of xi.n onto P_k2(e): for traces already in P_k2(e) this
    /// is plain point evaluation, and for smooth fields it is the moment
    /// matching that makes div commute with the interpolation.
    pub fn interpolate(&self, xi: &dyn Fn(Vector2<f64>) -> Vector2<f64>) -> DVector<f64> {
        let mut dofs = DVector::zeros(self.n_dofs);
        let params = nodes_param(self.k2);
        for ed in &self.edges {
            // Legendre coefficients of the trace on [-1, 1] up to degree k2.
            let (gp, gw) = crate::quadrature::gauss_legendre(8);
            let mid = 0.5 * (ed.start + ed.end);
            let half = 0.5 * (ed.end - ed.start);
            let mut legendre = [0.0f64; 2];
            for (&s, &w) in gp.iter().zip(&gw) {
                let v = xi(mid + half * s).dot(&ed.normal);
                legendre[0] += 0.5 * w * v;
                if self.k2 >= 1 {
                    legendre[1] += 1.5 * w * v * s;
                }
            }
            for (p, &dof) in ed.node_dofs.iter().enumerate() {
                let s = params[p];
                dofs[dof] = legendre[0] + if self.k2 >= 1 { legendre[1] * s } else { 0.0 };
            }
        }
        let basis_c = ScaledMonomialBasis::new(self.frame, self.k2);
        let base22 = self.n_edges * (self.k2 + 1);
        let n_grad = self.n_conc - 1;
        for j in 0..n_grad {
            let r = j + 1;
            dofs[base22 + j] = self
                .quad
                .points
                .iter()
                .zip(&self.quad.weights)
                .map(|(&p, &w)| w * xi(p).dot(&basis_c.grad(r, p)))
                .sum();
        }
        let n_perp = self.n_dofs - base22 - n_grad;
        if n_perp > 0 {
            let base23 = base22 + n_grad;
            for l in 0..n_perp {
                let pm = &self.split.members[self.split.n_grad + l];
                dofs[base23 + l] = self
                    .quad
                    .points
                    .iter()
                    .zip(&self.quad.weights)
                    .map(|(&p, &w)| w * xi(p).dot(&pm.eval(p)))
                    .sum();
            }
        }
        dofs
    }

    /// Positions of the Gauss-Lobatto dof nodes of local edge `edge`.
    pub fn edge_nodes(&self, edge: usize) -> &[Vector2<f64>] {
        &self.edges[edge].nodes
    }

    /// Outward normal of local edge `edge`.
    pub fn edge_normal(&self, edge: usize) -> Vector2<f64> {
        self.edges[edge].normal
    }

    /// Wraps concentration coefficients as a polynomial on this element.
    pub fn concentration_poly(&self, coeffs: DVector<f64>) -> ScalarPoly {
        ScalarPoly {
            frame: self.frame,
            k: self.k2,
            coeffs,
        }
    }
}

fn check_spd(m: &Matrix2<f64>, p: Vector2<f64>) -> Result<()> {
    let sym_gap = (m[(0, 1)] - m[(1, 0)]).abs();
    let tr = m.trace();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let e0 = 0.5 * tr - disc;
    let e1 = 0.5 * tr + disc;
    if !(e0 > 0.0) || !e1.is_finite() || sym_gap > 1e-10 * (1.0 + m.norm()) {
        return Err(Error::CoefficientNotSpd {
            x: p.x,
            y: p.y,
            s00: m[(0, 0)],
            s01: m[(0, 1)],
            s11: m[(1, 1)],
            e0,
            e1,
        });
    }
    Ok(())
}

fn build_edge_data(pts: &[Vector2<f64>], k2: usize, n_edges: usize) -> Vec<EdgeData> {
    let (gl_ref, _) = gauss_lobatto(k2 + 1);
    let params = nodes_param(k2);
    let n_gq = k2 + 2;
    (0..n_edges)
        .map(|j| {
            let a = pts[j];
            let b = pts[(j + 1) % n_edges];
            let t = (b - a).normalize();
            let normal = Vector2::new(t.y, -t.x);
            let length = (b - a).norm();
            let (gauss_pts, gauss_wts) = edge_gauss(a, b, n_gq);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let nodes: Vec<Vector2<f64>> = gl_ref.iter().map(|&s| mid + half * s).collect();
            let gp: Vec<f64> = gauss_pts
                .iter()
                .map(|&x| (x - mid).dot(&half) / half.norm_squared())
                .collect();
            let lagrange: Vec<Vec<f64>> = (0..=k2)
                .map(|node| gp.iter().map(|&s| lagrange_basis(&params, node, s)).collect())
                .collect();
            let node_dofs: Vec<usize> = (0..=k2).map(|p| j * (k2 + 1) + p).collect();
            EdgeData {
                start: a,
                end: b,
                normal,
                length,
                gauss_pts,
                gauss_wts,
                lagrange,
                nodes,
                node_dofs,
            }
        })
        .collect()
}

fn nodes_param(k2: usize) -> Vec<f64> {
    gauss_lobatto(k2 + 1).0
}

fn param_on_edge(ed: &EdgeData, x: Vector2<f64>) -> f64 {
    let mid = 0.5 * (ed.start + ed.end);
    let half = 0.5 * (ed.end - ed.start);
    (x - mid).dot(&half) / half.norm_squared()
}

fn lagrange_basis(params: &[f64], node: usize, s: f64) -> f64 {
    let mut v = 1.0;
    for (i, &p) in params.iter().enumerate() {
        if i != node {
            v *= (s - p) / (params[node] - p);
        }
    }
    v
}

fn lagrange_at(params: &[f64], s: f64) -> Vec<f64> {
    (0..params.len())
        .map(|node| lagrange_basis(params, node, s))
        .collect()
}

/// Functional xi -> ∮ (xi.n) q over the element boundary, with the normal
/// trace interpolated from the edge dofs.
fn boundary_trace_functional(
    edges: &[EdgeData],
    n_dofs: usize,
    q: impl Fn(Vector2<f64>) -> f64,
) -> DVector<f64> {
    let mut out = DVector::zeros(n_dofs);
    for ed in edges {
        for (g, (&x, &w)) in ed.gauss_pts.iter().zip(&ed.gauss_wts).enumerate() {
            let qv = q(x) * w;
            for (node, &dof) in ed.node_dofs.iter().enumerate() {
                out[dof] += qv * ed.lagrange[node][g];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_square_mesh, generate_voronoi_mesh, BoundaryPartition, Rect};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_element_space(k2: usize) -> DiffusionLocalSpace {
        let mesh =
            generate_square_mesh(1, Rect::unit(), &BoundaryPartition::all_dirichlet()).unwrap();
        DiffusionLocalSpace::build(&mesh, 0, k2, 8).unwrap()
    }

    #[test]
    fn dof_counts() {
        assert_eq!(one_element_space(0).n_dofs, 4);
        assert_eq!(one_element_space(1).n_dofs, 11);
        assert_eq!(one_element_space(0).n_conc, 1);
        assert_eq!(one_element_space(1).n_conc, 3);
    }

    #[test]
    fn divergence_recovery_constants_and_linears() {
        for k2 in [0usize, 1] {
            let sp = one_element_space(k2);
            let dofs = sp.interpolate(&|_| Vector2::new(1.0, 0.0));
            let div = sp.divergence(&dofs).unwrap();
            assert!(div.coeffs.amax() < 1e-13);

            let dofs = sp.interpolate(&|p| Vector2::new(p.x, p.y));
            let div = sp.divergence(&dofs).unwrap();
            assert_relative_eq!(div.eval(Vector2::new(0.3, 0.8)), 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn divergence_recovery_random_linear_fields() {
        let mesh = generate_voronoi_mesh(10, Rect::unit(), 5, 1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for e in 0..mesh.n_elements() {
            let sp = DiffusionLocalSpace::build(&mesh, e, 1, 8).unwrap();
            let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let cc = c.clone();
            let xi = move |p: Vector2<f64>| {
                Vector2::new(cc[0] + cc[1] * p.x + cc[2] * p.y, cc[3] + cc[4] * p.x + cc[5] * p.y)
            };
            let dofs = sp.interpolate(&xi);
            let div = sp.divergence(&dofs).unwrap();
            let exact = c[1] + c[5];
            for &p in sp.quad.points.iter().take(4) {
                assert_relative_eq!(div.eval(p), exact, epsilon = 1e-12, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn projection_reproduces_and_is_idempotent() {
        let mesh = generate_voronoi_mesh(8, Rect::unit(), 17, 1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for k2 in [0usize, 1] {
            for e in 0..mesh.n_elements() {
                let sp = DiffusionLocalSpace::build(&mesh, e, k2, 8).unwrap();
                // Reproduction on a random (P_k2)^2 field.
                let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let cc = c.clone();
                let xi = move |p: Vector2<f64>| {
                    if k2 == 0 {
                        Vector2::new(cc[0], cc[3])
                    } else {
                        Vector2::new(
                            cc[0] + cc[1] * p.x + cc[2] * p.y,
                            cc[3] + cc[4] * p.x + cc[5] * p.y,
                        )
                    }
                };
                let dofs = sp.interpolate(&xi);
                let proj = sp.project_l2(&dofs);
                for &p in sp.quad.points.iter().take(5) {
                    assert!((proj.eval(p) - xi(p)).norm() < 1e-12);
                }
                // Idempotence through the dof image of the projection.
                let rand_dofs = DVector::from_fn(sp.n_dofs, |_, _| rng.gen_range(-1.0..1.0));
                let once = &sp.proj_split * &rand_dofs;
                let twice = &sp.proj_split * (&sp.dof_of_poly * &once);
                assert!((twice - &once).norm() < 1e-12 * (1.0 + once.norm()));
            }
        }
    }

    #[test]
    fn lowest_order_projection_matches_divergence_identity() {
        // For k2 = 0: Pi xi = (1/|E|) ∫ xi, and each component satisfies
        // ∫ xi_x = -∫ (div xi)(x - x_E) + ∮ (xi.n)(x - x_E), all computable
        // from edge data. Brute-force check on polynomial fluxes.
        let sp = one_element_space(0);
        let xi = |p: Vector2<f64>| Vector2::new(0.3 - 0.8 * p.x, 1.1 + 0.4 * p.y);
        let dofs = sp.interpolate(&xi);
        let proj = sp.project_l2(&dofs);
        let exact_mean = Vector2::new(0.3 - 0.8 * 0.5, 1.1 + 0.4 * 0.5);
        // The projection of a linear field onto constants is the mean only
        // up to the virtual-space identification; compare against the
        // divergence-theorem value computed from the same dofs instead.
        let div = sp.divergence(&dofs).unwrap();
        let c = sp.frame.center;
        let mut bdry = Vector2::zeros();
        for ed in &sp.edges {
            for (&x, &w) in ed.gauss_pts.iter().zip(&ed.gauss_wts) {
                let s = param_on_edge(ed, x);
                let lag = lagrange_at(&nodes_param(0), s);
                let trace: f64 = ed
                    .node_dofs
                    .iter()
                    .enumerate()
                    .map(|(n, &d)| dofs[d] * lag[n])
                    .sum();
                bdry += trace * w * (x - c);
            }
        }
        let vol: Vector2<f64> = sp
            .quad
            .points
            .iter()
            .zip(&sp.quad.weights)
            .map(|(&p, &w)| w * div.eval(p) * (p - c))
            .sum();
        let mean = (bdry - vol) / sp.quad.total_weight();
        let got = proj.eval(Vector2::new(0.2, 0.6));
        assert_relative_eq!(got.x, mean.x, epsilon = 1e-12);
        assert_relative_eq!(got.y, mean.y, epsilon = 1e-12);
        // And for this smooth linear field both agree with the true mean.
        assert_relative_eq!(got.x, exact_mean.x, epsilon = 1e-12);
        assert_relative_eq!(got.y, exact_mean.y, epsilon = 1e-12);
    }

    #[test]
    fn commuting_property_interpolate_then_divergence() {
        // div of the dof interpolant equals the L2 projection of div xi,
        // for a smooth non-polynomial field.
        let mesh = generate_voronoi_mesh(12, Rect::unit(), 29, 1, 0.0).unwrap();
        let xi = |p: Vector2<f64>| Vector2::new(p.x.sin() * p.y * p.y, p.x.exp() * p.y.cos());
        let div_xi =
            |p: Vector2<f64>| p.x.cos() * p.y * p.y - p.x.exp() * p.y.sin();
        for k2 in [0usize, 1] {
            for e in 0..mesh.n_elements() {
                let sp = DiffusionLocalSpace::build(&mesh, e, k2, 10).unwrap();
                let dofs = sp.interpolate(&xi);
                let recovered = sp.divergence(&dofs).unwrap();
                // L2 projection of the analytic divergence.
                let basis = ScaledMonomialBasis::new(sp.frame, k2);
                let mut rhs = DVector::zeros(sp.n_conc);
                for (&p, &w) in sp.quad.points.iter().zip(&sp.quad.weights) {
                    let m = basis.eval_all(p);
                    for r in 0..sp.n_conc {
                        rhs[r] += w * div_xi(p) * m[r];
                    }
                }
                let proj = sp.mass_conc.clone().lu().solve(&rhs).unwrap();
                for (a, b) in recovered.coeffs.iter().zip(proj.iter()) {
                    assert!(
                        (a - b).abs() < 1e-10,
                        "element {e} k2={k2}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn weighted_matrix_identity_coefficient() {
        let sp = one_element_space(0);
        let xi = Vector2::new(0.7, -0.2);
        let dofs = sp.interpolate(&|_| xi);
        let a = sp
            .local_a2h(&|_| Ok(Matrix2::identity()))
            .unwrap();
        let val = (a * &dofs).dot(&dofs);
        // |E| |xi|^2 with vanishing stabilization on the projected part.
        assert_relative_eq!(val, xi.norm_squared(), epsilon = 1e-12);
    }

    #[test]
    fn weighted_matrix_diagonal_coefficient() {
        for k2 in [0usize, 1] {
            let sp = one_element_space(k2);
            let m = Matrix2::new(2.0, 0.0, 0.0, 3.0);
            let a = sp.local_a2h(&|_| Ok(m)).unwrap();
            assert_eq!((a.clone() - a.transpose()).norm(), 0.0);
            let xi = sp.interpolate(&|_| Vector2::new(1.0, 1.0));
            let eta = sp.interpolate(&|_| Vector2::new(-0.5, 2.0));
            let val = (a * &eta).dot(&xi);
            // ∫ M xi . eta = 2*1*(-0.5) + 3*1*2 = 5 on the unit square.
            assert_relative_eq!(val, 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn weighted_matrix_is_positive_definite() {
        let mesh = generate_voronoi_mesh(5, Rect::unit(), 31, 1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for e in 0..mesh.n_elements() {
            let sp = DiffusionLocalSpace::build(&mesh, e, 1, 8).unwrap();
            // Random SPD coefficient, constant per element.
            let a = rng.gen_range(0.5..2.0);
            let b: f64 = rng.gen_range(-0.3..0.3);
            let c = rng.gen_range(0.5..2.0);
            let m = Matrix2::new(a, b, b, a * c + b.abs() + 0.5);
            let k = sp.local_a2h(&|_| Ok(m)).unwrap();
            let eig = k.symmetric_eigen();
            let min = eig.eigenvalues.min();
            assert!(min > 0.0, "element {e}: min eigenvalue {min}");
        }
    }

    #[test]
    fn non_spd_coefficient_reports_location() {
        let sp = one_element_space(1);
        let err = sp
            .local_a2h(&|_| Ok(Matrix2::new(-1.0, 0.0, 0.0, 1.0)))
            .unwrap_err();
        assert!(matches!(err, Error::CoefficientNotSpd { .. }), "{err}");
    }

    #[test]
    fn coupling_source_and_mass_blocks() {
        for k2 in [0usize, 1] {
            let sp = one_element_space(k2);
            let b2 = sp.local_b2();
            // Divergence-free field -> zero coupling column.
            let rot = sp.interpolate(&|p| Vector2::new(-p.y, p.x));
            let col = b2.transpose() * rot;
            assert!(col.amax() < 1e-12);

            let c2 = sp.local_c2();
            assert_relative_eq!(c2[(0, 0)], 1.0, epsilon = 1e-13);

            let g2 = sp.local_g2(&|_| 1.0);
            assert_relative_eq!(g2[0], -1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn essential_boundary_load_cases() {
        // Zero data.
        let sp = one_element_space(1);
        let zero = sp.local_f2(0, &|_| 0.0);
        assert_eq!(zero.amax(), 0.0);

        // phi_D = 1: weights are the integrals of the trace basis.
        let f = sp.local_f2(0, &|_| 1.0);
        // Edge 0 of the unit square runs from (0,0) to (1,0); hat functions
        // integrate to |e|/2 each.
        assert_relative_eq!(f[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(f[1], 0.5, epsilon = 1e-12);

        // Linear datum in the edge parameter: exact first moment.
        let f = sp.local_f2(0, &|x| x.x);
        // ∫_0^1 s (1-s) ds = 1/6 for the left hat, ∫ s^2 = 1/3 for the right.
        assert_relative_eq!(f[0], 1.0 / 6.0, epsilon = 1e-12);
        assert_relative_eq!(f[1], 1.0 / 3.0, epsilon = 1e-12);

        // k2 = 0: single midpoint dof, weight |e| phi_D(midpoint) for
        // constant data.
        let sp0 = one_element_space(0);
        let f = sp0.local_f2(2, &|_| 3.0);
        assert_relative_eq!(f[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn edge_lengths_cached() {
        let sp = one_element_space(1);
        for ed in &sp.edges {
            assert_relative_eq!(ed.length, 1.0, epsilon = 1e-14);
        }
    }
}

//! Local virtual element machinery for the displacement / Herrmann-pressure
//! pair.
//!
//! The local displacement space of degree k1 >= 2 carries point values at
//! vertices and at the k1-1 internal Gauss-Lobatto nodes of each edge,
//! divergence moments against the non-constant monomials of degree k1-1,
//! and interior moments against the perp basis of degree k1-2. The space is
//! never solved for: every local form goes through the energy projection
//! onto (P_k1)^2, fixed on the rigid-body kernel by vertex-sum conditions,
//! and through the L2 projection onto (P_{k1-2})^2, both computable from
//! the degrees of freedom alone.
//!
//! The discrete pressure space is the plain polynomial space P_{k1-1}(E),
//! represented by scaled-monomial coefficients.

use nalgebra::{DMatrix, DVector, Vector2};

use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;
use crate::polybasis::{
    dim_poly, poly_dx, poly_dy, ElementFrame, ScalarPoly, ScaledMonomialBasis, VectorBasisSplit,
    VectorPoly,
};
use crate::quadrature::{edge_gauss, gauss_lobatto, polygon_quadrature, PolygonQuadrature};

/// Meaning of a local displacement DoF, for global numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum V1DofKind {
    /// Component `comp` of the value at local vertex `vertex`.
    Vertex { vertex: usize, comp: usize },
    /// Component `comp` of the value at internal Gauss-Lobatto point `point`
    /// (ordered along the element's traversal) of local edge `edge`.
    EdgePoint { edge: usize, point: usize, comp: usize },
    /// Moment of div v against the (index+1)-th monomial of M_{k1-1}.
    DivMoment { index: usize },
    /// Moment of v against the index-th member of the perp basis of degree
    /// k1-2.
    PerpMoment { index: usize },
}

/// Per-edge geometry and interpolation data shared by the local builders.
struct EdgeData {
    start: Vector2<f64>,
    end: Vector2<f64>,
    normal: Vector2<f64>,
    gauss_pts: Vec<Vector2<f64>>,
    gauss_wts: Vec<f64>,
    /// Lagrange basis values lagrange[node][g] of the k1+1 Gauss-Lobatto
    /// edge nodes at the quadrature points.
    lagrange: Vec<Vec<f64>>,
    /// Positions of the k1-1 internal Gauss-Lobatto nodes.
    internal_nodes: Vec<Vector2<f64>>,
    /// Local dof index of the x-component at each of the k1+1 edge nodes
    /// (y-component follows at +1).
    node_dofs: Vec<usize>,
}

pub struct ElasticityLocalSpace {
    pub element: usize,
    pub k1: usize,
    pub frame: ElementFrame,
    pub n_edges: usize,
    pub n_dofs: usize,
    /// dim P_{k1-1}: local pressure coefficients.
    pub n_pressure: usize,
    dof_kinds: Vec<V1DofKind>,
    /// Energy projection: stacked component coefficients (x-block then
    /// y-block over M_{k1}) from the local DoF vector.
    pub proj_energy: DMatrix<f64>,
    /// L2 projection onto (P_{k1-2})^2, stacked component coefficients.
    pub proj_l2_low: DMatrix<f64>,
    /// DoF functionals applied to the vector monomial basis.
    pub dof_of_poly: DMatrix<f64>,
    /// Moments of div v against M_{k1-1}: row r is a functional on the DoF
    /// vector (row 0 recovers the boundary flux, rows 1.. are D13 dofs).
    div_moments: DMatrix<f64>,
    /// Gram of symmetric gradients of the vector monomials.
    energy_gram: DMatrix<f64>,
    /// Pressure mass matrix H_{k1-1}.
    pub mass_pressure: DMatrix<f64>,
    pub quad: PolygonQuadrature,
    edges: Vec<EdgeData>,
}

impl ElasticityLocalSpace {
    /// Builds every projection for element `e`. `quad_degree` sets the
    /// volume rule used for data terms; polynomial terms are exact for any
    /// value >= 2 k1.
    pub fn build(mesh: &PolygonalMesh, e: usize, k1: usize, quad_degree: usize) -> Result<Self> {
        assert!(k1 >= 2, "displacement degree must be at least 2");
        let frame = mesh.frame(e);
        let pts = mesh.element_points(e);
        let n_edges = pts.len();
        let quad = polygon_quadrature(&pts, quad_degree.max(2 * k1 + 2))?;

        let dim_vk = dim_poly(k1);
        let n_pressure = dim_poly(k1 - 1);
        let n_div = n_pressure - 1;
        let n_perp = (k1 - 2) * (k1 - 1) / 2;
        let n_dofs = 2 * n_edges * k1 + n_div + n_perp;

        let mut dof_kinds = Vec::with_capacity(n_dofs);
        for v in 0..n_edges {
            for comp in 0..2 {
                dof_kinds.push(V1DofKind::Vertex { vertex: v, comp });
            }
        }
        for edge in 0..n_edges {
            for point in 0..k1 - 1 {
                for comp in 0..2 {
                    dof_kinds.push(V1DofKind::EdgePoint { edge, point, comp });
                }
            }
        }
        for index in 0..n_div {
            dof_kinds.push(V1DofKind::DivMoment { index });
        }
        for index in 0..n_perp {
            dof_kinds.push(V1DofKind::PerpMoment { index });
        }

        let edges = build_edge_data(&pts, k1, n_edges);

        let basis_p = ScaledMonomialBasis::new(frame, k1 - 1);
        let mass_pressure = basis_p.mass_matrix(&quad);

        // Divergence moments: ∫ div v m = -∫ v.grad m + ∮ (v.n) m. For the
        // non-constant monomials of M_{k1-1} this is a D13 dof; for m = 1 it
        // is the boundary flux.
        let mut div_moments = DMatrix::zeros(n_pressure, n_dofs);
        {
            let row = boundary_scalar_functional(&edges, n_dofs, |_| 1.0);
            div_moments.row_mut(0).copy_from(&row.transpose());
            let base13 = 2 * n_edges * k1;
            for r in 1..n_pressure {
                div_moments[(r, base13 + r - 1)] = 1.0;
            }
        }

        // Vector monomial basis: (m_i, 0) for i < dim_vk, then (0, m_i).
        let vmono: Vec<VectorPoly> = (0..2 * dim_vk)
            .map(|a| {
                let mut p = VectorPoly::zero(frame, k1);
                if a < dim_vk {
                    p.x[a] = 1.0;
                } else {
                    p.y[a - dim_vk] = 1.0;
                }
                p
            })
            .collect();

        let split_low = VectorBasisSplit::new(frame, k1 - 2);
        let gram_low = split_low.gram(&quad);
        let gram_low_lu = gram_low.lu();
        let mass_low = ScaledMonomialBasis::new(frame, k1 - 2).mass_matrix(&quad);

        let base13 = 2 * n_edges * k1;
        let base14 = base13 + n_div;

        let mut dof_of_poly = DMatrix::zeros(n_dofs, 2 * dim_vk);
        for (a, phi) in vmono.iter().enumerate() {
            for (i, &z) in pts.iter().enumerate() {
                let val = phi.eval(z);
                dof_of_poly[(2 * i, a)] = val.x;
                dof_of_poly[(2 * i + 1, a)] = val.y;
            }
            for (j, ed) in edges.iter().enumerate() {
                for (p, &node) in ed.internal_nodes.iter().enumerate() {
                    let val = phi.eval(node);
                    let base = 2 * n_edges + 2 * (k1 - 1) * j + 2 * p;
                    dof_of_poly[(base, a)] = val.x;
                    dof_of_poly[(base + 1, a)] = val.y;
                }
            }
            // D13 moments of div phi_a.
            let divx = poly_dx(&phi.x, k1, frame.h);
            let divy = poly_dy(&phi.y, k1, frame.h);
            let mut divc = DVector::zeros(n_pressure);
            for i in 0..divx.len() {
                divc[i] = divx[i] + divy[i];
            }
            let moments = &mass_pressure * &divc;
            for r in 1..n_pressure {
                dof_of_poly[(base13 + r - 1, a)] = moments[r];
            }
            // D14 moments against the perp members.
            for l in 0..n_perp {
                let m = &split_low.members[split_low.n_grad + l];
                dof_of_poly[(base14 + l, a)] = integrate_vector_dot(&quad, phi, m);
            }
        }

        // Energy Gram ∫ eps(phi_a) : eps(phi_b).
        let mut energy_gram = DMatrix::zeros(2 * dim_vk, 2 * dim_vk);
        {
            let eps_at: Vec<Vec<[f64; 3]>> = quad
                .points
                .iter()
                .map(|&p| {
                    vmono
                        .iter()
                        .map(|phi| {
                            let g = phi.sym_grad(p);
                            [g[(0, 0)], g[(0, 1)], g[(1, 1)]]
                        })
                        .collect()
                })
                .collect();
            for (vals, &w) in eps_at.iter().zip(&quad.weights) {
                for a in 0..2 * dim_vk {
                    for b in a..2 * dim_vk {
                        let s = vals[a][0] * vals[b][0]
                            + 2.0 * vals[a][1] * vals[b][1]
                            + vals[a][2] * vals[b][2];
                        energy_gram[(a, b)] += w * s;
                    }
                }
            }
            for a in 0..2 * dim_vk {
                for b in 0..a {
                    energy_gram[(a, b)] = energy_gram[(b, a)];
                }
            }
        }

        // RHS functionals b_a(v) = ∫ eps(v):eps(phi_a) reduced to dofs via
        // -∫ v.div eps(phi_a) + ∮ v.(eps(phi_a) n) and the grad/perp split
        // of div eps(phi_a).
        let mut b_rhs = DMatrix::zeros(2 * dim_vk, n_dofs);
        for (a, phi) in vmono.iter().enumerate() {
            let exx = poly_dx(&phi.x, k1, frame.h);
            let eyy = poly_dy(&phi.y, k1, frame.h);
            let mut exy = poly_dy(&phi.x, k1, frame.h);
            exy.axpy(1.0, &poly_dx(&phi.y, k1, frame.h), 1.0);
            exy *= 0.5;

            let low = dim_poly(k1 - 2);
            let mut c = VectorPoly::zero(frame, k1 - 2);
            let dxx = poly_dx(&exx, k1 - 1, frame.h);
            let dxy_y = poly_dy(&exy, k1 - 1, frame.h);
            let dxy_x = poly_dx(&exy, k1 - 1, frame.h);
            let dyy = poly_dy(&eyy, k1 - 1, frame.h);
            for i in 0..low {
                c.x[i] = dxx[i] + dxy_y[i];
                c.y[i] = dxy_x[i] + dyy[i];
            }

            let mut mom = DVector::zeros(split_low.len());
            for (s, member) in split_low.members.iter().enumerate() {
                mom[s] = member.x.dot(&(&mass_low * &c.x)) + member.y.dot(&(&mass_low * &c.y));
            }
            let beta = gram_low_lu
                .solve(&mom)
                .ok_or_else(|| Error::SingularElement {
                    element: e,
                    detail: "singular split Gram matrix".into(),
                })?;

            let mut row = DVector::zeros(n_dofs);
            for j in 0..split_low.n_grad {
                if beta[j] == 0.0 {
                    continue;
                }
                // Member j is grad m_{j+1} with m from M_{k1-1}.
                let r = j + 1;
                let bdry = boundary_scalar_functional(&edges, n_dofs, |x| basis_p.eval(r, x));
                row.axpy(beta[j], &bdry, 1.0);
                row.axpy(-beta[j], &div_moments.row(r).transpose(), 1.0);
            }
            for l in 0..split_low.n_perp {
                row[base14 + l] += beta[split_low.n_grad + l];
            }
            row.neg_mut();

            let traction_term = boundary_vector_functional(&edges, n_dofs, |x, n| {
                let m = basis_p.eval_all(x);
                let sxx = exx.dot(&m);
                let sxy = exy.dot(&m);
                let syy = eyy.dot(&m);
                Vector2::new(sxx * n.x + sxy * n.y, sxy * n.x + syy * n.y)
            });
            row += traction_term;
            b_rhs.row_mut(a).copy_from(&row.transpose());
        }

        // Rigid-body pinning: vertex sums against the translations and the
        // centred rotation (same projector as the absolute rotation, better
        // conditioned).
        let center = frame.center;
        let rigid = |r: usize, x: Vector2<f64>| -> Vector2<f64> {
            match r {
                0 => Vector2::new(1.0, 0.0),
                1 => Vector2::new(0.0, 1.0),
                _ => Vector2::new(-(x.y - center.y), x.x - center.x),
            }
        };
        let mut c_poly = DMatrix::zeros(3, 2 * dim_vk);
        let mut c_dofs = DMatrix::zeros(3, n_dofs);
        for r in 0..3 {
            for (a, phi) in vmono.iter().enumerate() {
                c_poly[(r, a)] = pts.iter().map(|&z| phi.eval(z).dot(&rigid(r, z))).sum();
            }
            for (i, &z) in pts.iter().enumerate() {
                let pv = rigid(r, z);
                c_dofs[(r, 2 * i)] = pv.x;
                c_dofs[(r, 2 * i + 1)] = pv.y;
            }
        }

        // KKT form of the constrained projection: the energy system is
        // consistent and singular exactly on the rigid modes, which the
        // constraint rows pin, so the bordered matrix is nonsingular. The
        // constraint block is scaled to the Gram's magnitude for balanced
        // pivoting.
        let gram_diag_mean: f64 = energy_gram.diagonal().sum() / (2 * dim_vk) as f64;
        let scale_c = gram_diag_mean.max(1e-300);
        let n_sys = 2 * dim_vk + 3;
        let mut sys = DMatrix::zeros(n_sys, n_sys);
        sys.view_mut((0, 0), (2 * dim_vk, 2 * dim_vk))
            .copy_from(&energy_gram);
        sys.view_mut((2 * dim_vk, 0), (3, 2 * dim_vk))
            .copy_from(&(scale_c * &c_poly));
        sys.view_mut((0, 2 * dim_vk), (2 * dim_vk, 3))
            .copy_from(&(scale_c * c_poly.transpose()));
        let mut rhs = DMatrix::zeros(n_sys, n_dofs);
        rhs.rows_mut(0, 2 * dim_vk).copy_from(&b_rhs);
        rhs.rows_mut(2 * dim_vk, 3).copy_from(&(scale_c * &c_dofs));

        let lu = sys.full_piv_lu();
        let sol = lu.solve(&rhs).ok_or_else(|| Error::SingularElement {
            element: e,
            detail: "energy projection KKT system is singular".into(),
        })?;
        let proj_energy = sol.rows(0, 2 * dim_vk).into_owned();

        // L2 projection onto (P_{k1-2})^2: gradient-member moments by parts,
        // perp members from D14.
        let n_split = split_low.len();
        let mut mom_low = DMatrix::zeros(n_split, n_dofs);
        for j in 0..split_low.n_grad {
            let r = j + 1;
            let mut row = boundary_scalar_functional(&edges, n_dofs, |x| basis_p.eval(r, x));
            row.axpy(-1.0, &div_moments.row(r).transpose(), 1.0);
            mom_low.row_mut(j).copy_from(&row.transpose());
        }
        for l in 0..split_low.n_perp {
            mom_low[(split_low.n_grad + l, base14 + l)] = 1.0;
        }
        let split_coeff = gram_low_lu
            .solve(&mom_low)
            .ok_or_else(|| Error::SingularElement {
                element: e,
                detail: "singular low-order Gram".into(),
            })?;
        let low = dim_poly(k1 - 2);
        let mut to_comp = DMatrix::zeros(2 * low, n_split);
        for (s, member) in split_low.members.iter().enumerate() {
            for i in 0..low {
                to_comp[(i, s)] = member.x[i];
                to_comp[(low + i, s)] = member.y[i];
            }
        }
        let proj_l2_low = to_comp * split_coeff;

        Ok(Self {
            element: e,
            k1,
            frame,
            n_edges,
            n_dofs,
            n_pressure,
            dof_kinds,
            proj_energy,
            proj_l2_low,
            dof_of_poly,
            div_moments,
            energy_gram,
            mass_pressure,
            quad,
            edges,
        })
    }

    pub fn dof_kinds(&self) -> &[V1DofKind] {
        &self.dof_kinds
    }

    /// Energy-projected polynomial of a local DoF vector.
    pub fn project_energy(&self, dofs: &DVector<f64>) -> VectorPoly {
        let c = &self.proj_energy * dofs;
        VectorPoly::from_stacked(self.frame, self.k1, &c)
    }

    /// L2 projection onto (P_{k1-2})^2 of a local DoF vector.
    pub fn project_l2_low(&self, dofs: &DVector<f64>) -> VectorPoly {
        let c = &self.proj_l2_low * dofs;
        VectorPoly::from_stacked(self.frame, self.k1 - 2, &c)
    }

    /// Exact divergence of a virtual function as a pressure-space polynomial.
    pub fn divergence(&self, dofs: &DVector<f64>) -> Result<ScalarPoly> {
        let moments = &self.div_moments * dofs;
        let coeffs = self
            .mass_pressure
            .clone()
            .lu()
            .solve(&moments)
            .ok_or_else(|| Error::SingularElement {
                element: self.element,
                detail: "singular pressure mass matrix".into(),
            })?;
        Ok(ScalarPoly {
            frame: self.frame,
            k: self.k1 - 1,
            coeffs,
        })
    }

    /// Local stiffness a1h = a1(Pi u, Pi v) + S1(u - Pi u, v - Pi v) with the
    /// dof-matrix stabilization, both scaled by 2 mu.
    pub fn local_a1h(&self, mu: f64) -> DMatrix<f64> {
        let consistency = self.proj_energy.transpose() * &self.energy_gram * &self.proj_energy;
        let id = DMatrix::identity(self.n_dofs, self.n_dofs);
        let defect = id - &self.dof_of_poly * &self.proj_energy;
        let stab = defect.transpose() * defect;
        let k = (consistency + stab) * (2.0 * mu);
        let kt = k.transpose();
        0.5 * (k + kt)
    }

    /// Coupling block b1(v, q) = -∫ q div v over the pressure monomials
    /// (n_dofs x n_pressure).
    pub fn local_b1(&self) -> DMatrix<f64> {
        -self.div_moments.transpose()
    }

    /// Pressure mass matrix ∫ p q.
    pub fn local_c1(&self) -> DMatrix<f64> {
        self.mass_pressure.clone()
    }

    /// Load vector F1(v) = ∫ f . Pi0_{k1-2} v.
    pub fn local_load(&self, f: &dyn Fn(Vector2<f64>) -> Vector2<f64>) -> DVector<f64> {
        let low = dim_poly(self.k1 - 2);
        let basis = ScaledMonomialBasis::new(self.frame, self.k1 - 2);
        let mut bf = DVector::zeros(2 * low);
        for (&p, &w) in self.quad.points.iter().zip(&self.quad.weights) {
            let fv = f(p);
            let m = basis.eval_all(p);
            for i in 0..low {
                bf[i] += w * fv.x * m[i];
                bf[low + i] += w * fv.y * m[i];
            }
        }
        self.proj_l2_low.transpose() * bf
    }

    /// Active-stress right-hand side G1(q) = -(1/lambda) ∫ l(phi) q for the
    /// pressure monomials; `ell_of_phi` evaluates l(phi_h(x)).
    pub fn local_g1(&self, lambda: f64, ell_of_phi: &dyn Fn(Vector2<f64>) -> f64) -> DVector<f64> {
        let basis = ScaledMonomialBasis::new(self.frame, self.k1 - 1);
        let mut g = DVector::zeros(self.n_pressure);
        for (&p, &w) in self.quad.points.iter().zip(&self.quad.weights) {
            let lv = ell_of_phi(p);
            let m = basis.eval_all(p);
            for r in 0..self.n_pressure {
                g[r] -= w / lambda * lv * m[r];
            }
        }
        g
    }

    /// Traction term ∮_e t . v over local edge `edge`; `t` receives the
    /// point and the outward normal.
    pub fn local_traction(
        &self,
        edge: usize,
        t: &dyn Fn(Vector2<f64>, Vector2<f64>) -> Vector2<f64>,
    ) -> DVector<f64> {
        let ed = &self.edges[edge];
        let (pts, wts) = edge_gauss(ed.start, ed.end, 8);
        let params = nodes_param(self.k1);
        let mut out = DVector::zeros(self.n_dofs);
        for (&x, &w) in pts.iter().zip(&wts) {
            let tv = t(x, ed.normal);
            let lag = lagrange_at(&params, param_on_edge(ed, x));
            for (node, &dof_x) in ed.node_dofs.iter().enumerate() {
                out[dof_x] += w * tv.x * lag[node];
                out[dof_x + 1] += w * tv.y * lag[node];
            }
        }
        out
    }

    /// DoF vector of a smooth field from closures for its values and
    /// divergence (the interpolant defined by matching all dofs).
    pub fn interpolate(
        &self,
        u: &dyn Fn(Vector2<f64>) -> Vector2<f64>,
        div_u: &dyn Fn(Vector2<f64>) -> f64,
    ) -> DVector<f64> {
        let mut dofs = DVector::zeros(self.n_dofs);
        for (i, ed) in self.edges.iter().enumerate() {
            let v = u(ed.start);
            dofs[2 * i] = v.x;
            dofs[2 * i + 1] = v.y;
            for (p, &node) in ed.internal_nodes.iter().enumerate() {
                let v = u(node);
                let base = 2 * self.n_edges + 2 * (self.k1 - 1) * i + 2 * p;
                dofs[base] = v.x;
                dofs[base + 1] = v.y;
            }
        }
        let basis_p = ScaledMonomialBasis::new(self.frame, self.k1 - 1);
        let base13 = 2 * self.n_edges * self.k1;
        for r in 1..self.n_pressure {
            dofs[base13 + r - 1] = self
                .quad
                .points
                .iter()
                .zip(&self.quad.weights)
                .map(|(&p, &w)| w * div_u(p) * basis_p.eval(r, p))
                .sum();
        }
        let n_perp = self.n_dofs - base13 - (self.n_pressure - 1);
        if n_perp > 0 {
            let split = VectorBasisSplit::new(self.frame, self.k1 - 2);
            let base14 = base13 + self.n_pressure - 1;
            for l in 0..n_perp {
                let member = &split.members[split.n_grad + l];
                dofs[base14 + l] = self
                    .quad
                    .points
                    .iter()
                    .zip(&self.quad.weights)
                    .map(|(&p, &w)| w * u(p).dot(&member.eval(p)))
                    .sum();
            }
        }
        dofs
    }

    /// Wraps pressure coefficients as a polynomial on this element.
    pub fn pressure_poly(&self, coeffs: DVector<f64>) -> ScalarPoly {
        ScalarPoly {
            frame: self.frame,
            k: self.k1 - 1,
            coeffs,
        }
    }
}

fn build_edge_data(pts: &[Vector2<f64>], k1: usize, n_edges: usize) -> Vec<EdgeData> {
    let (gl_ref, _) = gauss_lobatto(k1 + 1);
    let params = nodes_param(k1);
    let n_gq = k1 + 3;
    (0..n_edges)
        .map(|j| {
            let a = pts[j];
            let b = pts[(j + 1) % n_edges];
            let t = (b - a).normalize();
            let normal = Vector2::new(t.y, -t.x);
            let (gauss_pts, gauss_wts) = edge_gauss(a, b, n_gq);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            let internal_nodes: Vec<Vector2<f64>> =
                gl_ref[1..k1].iter().map(|&s| mid + half * s).collect();
            let gp: Vec<f64> = gauss_pts
                .iter()
                .map(|&x| (x - mid).dot(&half) / half.norm_squared())
                .collect();
            let lagrange: Vec<Vec<f64>> = (0..=k1)
                .map(|node| gp.iter().map(|&s| lagrange_basis(&params, node, s)).collect())
                .collect();
            let mut node_dofs = Vec::with_capacity(k1 + 1);
            node_dofs.push(2 * j);
            for p in 0..k1 - 1 {
                node_dofs.push(2 * n_edges + 2 * (k1 - 1) * j + 2 * p);
            }
            node_dofs.push(2 * ((j + 1) % n_edges));
            EdgeData {
                start: a,
                end: b,
                normal,
                gauss_pts,
                gauss_wts,
                lagrange,
                internal_nodes,
                node_dofs,
            }
        })
        .collect()
}

fn nodes_param(k1: usize) -> Vec<f64> {
    gauss_lobatto(k1 + 1).0
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

/// Functional v -> ∮ (v.n) q over the element boundary, on the local dofs.
fn boundary_scalar_functional(
    edges: &[EdgeData],
    n_dofs: usize,
    q: impl Fn(Vector2<f64>) -> f64,
) -> DVector<f64> {
    let mut out = DVector::zeros(n_dofs);
    for ed in edges {
        for (g, (&x, &w)) in ed.gauss_pts.iter().zip(&ed.gauss_wts).enumerate() {
            let qv = q(x) * w;
            for (node, &dof_x) in ed.node_dofs.iter().enumerate() {
                let l = ed.lagrange[node][g];
                out[dof_x] += qv * l * ed.normal.x;
                out[dof_x + 1] += qv * l * ed.normal.y;
            }
        }
    }
    out
}

/// Functional v -> ∮ v . s(x, n) over the element boundary.
fn boundary_vector_functional(
    edges: &[EdgeData],
    n_dofs: usize,
    s: impl Fn(Vector2<f64>, Vector2<f64>) -> Vector2<f64>,
) -> DVector<f64> {
    let mut out = DVector::zeros(n_dofs);
    for ed in edges {
        for (g, (&x, &w)) in ed.gauss_pts.iter().zip(&ed.gauss_wts).enumerate() {
            let sv = s(x, ed.normal) * w;
            for (node, &dof_x) in ed.node_dofs.iter().enumerate() {
                let l = ed.lagrange[node][g];
                out[dof_x] += sv.x * l;
                out[dof_x + 1] += sv.y * l;
            }
        }
    }
    out
}

fn integrate_vector_dot(quad: &PolygonQuadrature, a: &VectorPoly, b: &VectorPoly) -> f64 {
    quad.points
        .iter()
        .zip(&quad.weights)
        .map(|(&p, &w)| w * a.eval(p).dot(&b.eval(p)))
        .sum()
}

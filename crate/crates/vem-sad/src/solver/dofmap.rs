//! Global numbering of the four discrete fields and the essential-dof sets.
//!
//! Displacement dofs: 2 per vertex, then 2(k1-1) per edge ordered along the
//! edge's canonical direction, then the element-interior moments; pressure
//! coefficients follow per element. Flux dofs: k2+1 per edge, ordered along
//! the canonical direction and carrying the value of xi.n with respect to
//! the canonical edge normal, then interior moments; concentration
//! coefficients follow per element. Shared dofs are identified through the
//! canonical direction, with order reversal and (for fluxes) a sign flip on
//! elements traversing an edge backwards.

use nalgebra::Vector2;
use std::collections::BTreeMap;

use crate::diffusion::V2DofKind;
use crate::elasticity::V1DofKind;
use crate::mesh::{BoundaryTag, PolygonalMesh};
use crate::polybasis::dim_poly;
use crate::quadrature::gauss_lobatto;

/// Which boundary tags carry the essential condition of each sub-problem:
/// displacement values for elasticity, concentration data (natural, through
/// the edge load) for transport. The complements carry traction and the
/// essential normal-flux values, respectively.
#[derive(Debug, Clone)]
pub struct BoundaryRoles {
    pub elasticity_dirichlet: Vec<BoundaryTag>,
    pub transport_dirichlet: Vec<BoundaryTag>,
}

impl BoundaryRoles {
    /// Both sub-problems share the `Dirichlet` tag (the rectangle families).
    pub fn shared_dirichlet() -> Self {
        Self {
            elasticity_dirichlet: vec![BoundaryTag::Dirichlet],
            transport_dirichlet: vec![BoundaryTag::Dirichlet],
        }
    }

    /// Annulus demo: clamped + zero flux on the inner circle, traction +
    /// prescribed concentration on the outer one.
    pub fn annulus_lithiation() -> Self {
        Self {
            elasticity_dirichlet: vec![BoundaryTag::Inner],
            transport_dirichlet: vec![BoundaryTag::Outer],
        }
    }

    pub fn elasticity_essential(&self, tag: BoundaryTag) -> bool {
        self.elasticity_dirichlet.contains(&tag)
    }

    pub fn transport_dirichlet_tag(&self, tag: BoundaryTag) -> bool {
        self.transport_dirichlet.contains(&tag)
    }
}

/// Positions of the k+1 Gauss-Lobatto nodes of edge `eid` along its
/// canonical direction.
pub fn edge_nodes_canonical(mesh: &PolygonalMesh, eid: usize, k: usize) -> Vec<Vector2<f64>> {
    let (a, b) = mesh.edge_points(eid);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    gauss_lobatto(k + 1).0.iter().map(|&s| mid + half * s).collect()
}

/// Displacement/pressure numbering.
pub struct ElasticityDofMap {
    pub k1: usize,
    pub n_u: usize,
    pub n_p: usize,
    edge_offset: usize,
    interior_offset: usize,
    n_interior_per: usize,
    n_p_per: usize,
    n_edges: usize,
}

impl ElasticityDofMap {
    pub fn new(mesh: &PolygonalMesh, k1: usize) -> Self {
        let n_div = dim_poly(k1 - 1) - 1;
        let n_perp = (k1 - 2) * (k1 - 1) / 2;
        let n_interior_per = n_div + n_perp;
        let edge_offset = 2 * mesh.n_vertices();
        let interior_offset = edge_offset + 2 * (k1 - 1) * mesh.n_edges();
        let n_u = interior_offset + n_interior_per * mesh.n_elements();
        let n_p_per = dim_poly(k1 - 1);
        Self {
            k1,
            n_u,
            n_p: n_p_per * mesh.n_elements(),
            edge_offset,
            interior_offset,
            n_interior_per,
            n_p_per,
            n_edges: mesh.n_edges(),
        }
    }

    pub fn total(&self) -> usize {
        self.n_u + self.n_p
    }

    pub fn n_pressure_per_element(&self) -> usize {
        self.n_p_per
    }

    /// Global displacement dof of a local dof of element `e`.
    pub fn global_u(&self, mesh: &PolygonalMesh, e: usize, kind: V1DofKind) -> usize {
        match kind {
            V1DofKind::Vertex { vertex, comp } => {
                2 * mesh.element_vertices(e)[vertex] + comp
            }
            V1DofKind::EdgePoint { edge, point, comp } => {
                let (eid, forward) = mesh.element_edges(e)[edge];
                let p = if forward { point } else { self.k1 - 2 - point };
                self.edge_offset + 2 * (self.k1 - 1) * eid + 2 * p + comp
            }
            V1DofKind::DivMoment { index } => {
                self.interior_offset + self.n_interior_per * e + index
            }
            V1DofKind::PerpMoment { index } => {
                let n_div = self.n_p_per - 1;
                self.interior_offset + self.n_interior_per * e + n_div + index
            }
        }
    }

    /// Global pressure dof (offset past the displacement block).
    pub fn global_p(&self, e: usize, j: usize) -> usize {
        self.n_u + self.n_p_per * e + j
    }

    /// Essential displacement dofs with values, over the edges whose tag is
    /// essential for elasticity.
    pub fn essential_values(
        &self,
        mesh: &PolygonalMesh,
        roles: &BoundaryRoles,
        u_d: &dyn Fn(Vector2<f64>) -> Vector2<f64>,
    ) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for (eid, tag) in mesh.boundary_edges() {
            if !roles.elasticity_essential(tag) {
                continue;
            }
            let [a, b] = mesh.edge(eid).vertices;
            for v in [a, b] {
                let val = u_d(mesh.vertex(v));
                out.insert(2 * v, val.x);
                out.insert(2 * v + 1, val.y);
            }
            let nodes = edge_nodes_canonical(mesh, eid, self.k1);
            for p in 0..self.k1 - 1 {
                let val = u_d(nodes[p + 1]);
                let base = self.edge_offset + 2 * (self.k1 - 1) * eid + 2 * p;
                out.insert(base, val.x);
                out.insert(base + 1, val.y);
            }
        }
        out
    }
}

/// Flux/concentration numbering.
pub struct TransportDofMap {
    pub k2: usize,
    pub n_z: usize,
    pub n_c: usize,
    interior_offset: usize,
    n_interior_per: usize,
    n_c_per: usize,
}

impl TransportDofMap {
    pub fn new(mesh: &PolygonalMesh, k2: usize) -> Self {
        let n_grad = dim_poly(k2) - 1;
        let n_perp = k2 * (k2 + 1) / 2;
        let n_interior_per = n_grad + n_perp;
        let interior_offset = (k2 + 1) * mesh.n_edges();
        let n_z = interior_offset + n_interior_per * mesh.n_elements();
        let n_c_per = dim_poly(k2);
        Self {
            k2,
            n_z,
            n_c: n_c_per * mesh.n_elements(),
            interior_offset,
            n_interior_per,
            n_c_per,
        }
    }

    pub fn total(&self) -> usize {
        self.n_z + self.n_c
    }

    pub fn n_conc_per_element(&self) -> usize {
        self.n_c_per
    }

    /// Global flux dof and orientation sign of a local dof of element `e`.
    pub fn global_z(&self, mesh: &PolygonalMesh, e: usize, kind: V2DofKind) -> (usize, f64) {
        match kind {
            V2DofKind::EdgePoint { edge, point } => {
                let (eid, forward) = mesh.element_edges(e)[edge];
                let (p, sign) = if forward {
                    (point, 1.0)
                } else {
                    (self.k2 - point, -1.0)
                };
                ((self.k2 + 1) * eid + p, sign)
            }
            V2DofKind::GradMoment { index } => {
                (self.interior_offset + self.n_interior_per * e + index, 1.0)
            }
            V2DofKind::PerpMoment { index } => {
                let n_grad = self.n_c_per - 1;
                (
                    self.interior_offset + self.n_interior_per * e + n_grad + index,
                    1.0,
                )
            }
        }
    }

    pub fn global_c(&self, e: usize, j: usize) -> usize {
        self.n_z + self.n_c_per * e + j
    }

    /// Essential normal-flux dofs with values, over the boundary edges whose
    /// tag is *not* transport-Dirichlet. On boundary edges the canonical
    /// normal is outward, so the prescribed value is zeta_n(x, n_outward).
    pub fn essential_values(
        &self,
        mesh: &PolygonalMesh,
        roles: &BoundaryRoles,
        zeta_n: &dyn Fn(Vector2<f64>, Vector2<f64>) -> f64,
    ) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for (eid, tag) in mesh.boundary_edges() {
            if roles.transport_dirichlet_tag(tag) {
                continue;
            }
            let n = mesh.edge_normal(eid);
            let nodes = edge_nodes_canonical(mesh, eid, self.k2);
            for (p, &x) in nodes.iter().enumerate() {
                out.insert((self.k2 + 1) * eid + p, zeta_n(x, n));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_crossed_mesh, generate_square_mesh, BoundaryPartition, Rect};

    #[test]
    fn table_dof_counts_square() {
        // Totals for the n=8..20 square family.
        let expect_k0 = [978usize, 2138, 3746, 5802];
        let expect_k1 = [1442usize, 3170, 5570, 8642];
        for (i, n) in [8usize, 12, 16, 20].into_iter().enumerate() {
            let mesh =
                generate_square_mesh(n, Rect::unit(), &BoundaryPartition::all_dirichlet())
                    .unwrap();
            let m1 = ElasticityDofMap::new(&mesh, 2);
            let t0 = TransportDofMap::new(&mesh, 0);
            let t1 = TransportDofMap::new(&mesh, 1);
            assert_eq!(m1.total() + t0.total(), expect_k0[i], "k2=0, n={n}");
            assert_eq!(m1.total() + t1.total(), expect_k1[i], "k2=1, n={n}");
        }
    }

    #[test]
    fn table_dof_counts_crossed() {
        let expect_k0 = [3026usize, 6746, 11938, 18602];
        let expect_k1 = [4706usize, 10514, 18626, 29042];
        for (i, n) in [8usize, 12, 16, 20].into_iter().enumerate() {
            let mesh =
                generate_crossed_mesh(n, Rect::unit(), &BoundaryPartition::all_dirichlet())
                    .unwrap();
            let m1 = ElasticityDofMap::new(&mesh, 2);
            let t0 = TransportDofMap::new(&mesh, 0);
            let t1 = TransportDofMap::new(&mesh, 1);
            assert_eq!(m1.total() + t0.total(), expect_k0[i], "k2=0, n={n}");
            assert_eq!(m1.total() + t1.total(), expect_k1[i], "k2=1, n={n}");
        }
    }
}

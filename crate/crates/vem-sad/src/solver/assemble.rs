//! Global assembly of the two saddle-point systems with symmetric
//! elimination of the essential dofs.

use nalgebra::{DVector, Matrix2, Vector2};
use std::collections::BTreeMap;

use super::dofmap::{BoundaryRoles, ElasticityDofMap, TransportDofMap};
use super::sparse::SaddleMatrix;
use crate::diffusion::DiffusionLocalSpace;
use crate::elasticity::ElasticityLocalSpace;
use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;
use crate::polybasis::{ScalarPoly, VectorPoly};

pub const SOLVE_TOL: f64 = 1e-10;

/// Problem data as closures. Traction and normal-flux data receive the
/// outward normal alongside the point.
pub struct ProblemData<'a> {
    pub body_force: &'a dyn Fn(Vector2<f64>) -> Vector2<f64>,
    pub source: &'a dyn Fn(Vector2<f64>) -> f64,
    pub u_dirichlet: &'a dyn Fn(Vector2<f64>) -> Vector2<f64>,
    pub traction: &'a dyn Fn(Vector2<f64>, Vector2<f64>) -> Vector2<f64>,
    pub phi_dirichlet: &'a dyn Fn(Vector2<f64>) -> f64,
    pub zeta_normal: &'a dyn Fn(Vector2<f64>, Vector2<f64>) -> f64,
}

impl<'a> ProblemData<'a> {
    /// All-zero data.
    pub fn homogeneous() -> ProblemData<'static> {
        ProblemData {
            body_force: &|_| Vector2::zeros(),
            source: &|_| 0.0,
            u_dirichlet: &|_| Vector2::zeros(),
            traction: &|_, _| Vector2::zeros(),
            phi_dirichlet: &|_| 0.0,
            zeta_normal: &|_, _| 0.0,
        }
    }
}

pub struct ElasticityFields {
    pub u_dofs: DVector<f64>,
    pub p_coeffs: DVector<f64>,
    /// Energy projections of the displacement, element-wise.
    pub ubar: Vec<VectorPoly>,
    /// Pressure polynomials, element-wise.
    pub p: Vec<ScalarPoly>,
}

pub struct TransportFields {
    pub z_dofs: DVector<f64>,
    pub c_coeffs: DVector<f64>,
    /// L2 projections of the flux, element-wise.
    pub zbar: Vec<VectorPoly>,
    /// Exact recovered divergences of the virtual flux, element-wise.
    pub div_z: Vec<ScalarPoly>,
    /// Concentration polynomials, element-wise.
    pub phi: Vec<ScalarPoly>,
}

/// Extracts the local displacement dof vector of element `e`.
pub fn local_u_dofs(
    mesh: &PolygonalMesh,
    map: &ElasticityDofMap,
    sp: &ElasticityLocalSpace,
    e: usize,
    u_full: &DVector<f64>,
) -> DVector<f64> {
    DVector::from_fn(sp.n_dofs, |l, _| {
        u_full[map.global_u(mesh, e, sp.dof_kinds()[l])]
    })
}

/// Extracts the local flux dof vector of element `e` (with orientation
/// signs applied).
pub fn local_z_dofs(
    mesh: &PolygonalMesh,
    map: &TransportDofMap,
    sp: &DiffusionLocalSpace,
    e: usize,
    z_full: &DVector<f64>,
) -> DVector<f64> {
    DVector::from_fn(sp.n_dofs, |l, _| {
        let (g, s) = map.global_z(mesh, e, sp.dof_kinds()[l]);
        s * z_full[g]
    })
}

/// The elasticity saddle system with its factorization. The matrix, load
/// vector, traction terms and boundary lifting are independent of the
/// concentration iterate, so the system is built and factorized once per
/// mesh and reused across fixed-point sweeps; only the active-stress
/// right-hand side changes.
pub struct ElasticitySystem {
    matrix: SaddleMatrix,
    /// reduced index of each displacement dof (None = constrained).
    reduced: Vec<Option<usize>>,
    constrained: BTreeMap<usize, f64>,
    rhs_fixed: DVector<f64>,
    n_free_u: usize,
    lambda: f64,
}

impl ElasticitySystem {
    pub fn build(
        mesh: &PolygonalMesh,
        locals: &[ElasticityLocalSpace],
        map: &ElasticityDofMap,
        roles: &BoundaryRoles,
        mu: f64,
        lambda: f64,
        data: &ProblemData,
    ) -> Result<Self> {
        let constrained = map.essential_values(mesh, roles, data.u_dirichlet);
        if constrained.is_empty() {
            return Err(Error::Mesh(
                "elasticity needs a nonempty essential boundary (clamped set is empty)".into(),
            ));
        }
        let mut reduced = vec![None; map.n_u];
        let mut n_free_u = 0;
        for g in 0..map.n_u {
            if !constrained.contains_key(&g) {
                reduced[g] = Some(n_free_u);
                n_free_u += 1;
            }
        }
        let n_sys = n_free_u + map.n_p;
        let red_p = |gp: usize| n_free_u + (gp - map.n_u);

        let mut trips: Vec<(usize, usize, f64)> = Vec::new();
        let mut rhs_fixed = DVector::zeros(n_sys);

        for (e, sp) in locals.iter().enumerate() {
            let k_loc = sp.local_a1h(mu);
            let b_loc = sp.local_b1();
            let c_loc = sp.local_c1();
            let mut f_loc = sp.local_load(data.body_force);
            // Traction on non-essential boundary edges of this element.
            for (le, &(eid, _)) in mesh.element_edges(e).iter().enumerate() {
                if let Some(tag) = mesh.tag(eid) {
                    if !roles.elasticity_essential(tag) {
                        f_loc += sp.local_traction(le, data.traction);
                    }
                }
            }

            let globals: Vec<usize> = sp
                .dof_kinds()
                .iter()
                .map(|&kind| map.global_u(mesh, e, kind))
                .collect();
            for (i, &gi) in globals.iter().enumerate() {
                let Some(ri) = reduced[gi] else { continue };
                rhs_fixed[ri] += f_loc[i];
                for (j, &gj) in globals.iter().enumerate() {
                    let v = k_loc[(i, j)];
                    if v == 0.0 {
                        continue;
                    }
                    match reduced[gj] {
                        Some(rj) => trips.push((ri, rj, v)),
                        None => rhs_fixed[ri] -= v * constrained[&gj],
                    }
                }
                for jp in 0..sp.n_pressure {
                    let v = b_loc[(i, jp)];
                    if v == 0.0 {
                        continue;
                    }
                    let rj = red_p(map.global_p(e, jp));
                    trips.push((ri, rj, v));
                    trips.push((rj, ri, v));
                }
            }
            // Lifting of constrained displacement dofs into pressure rows.
            for (i, &gi) in globals.iter().enumerate() {
                if reduced[gi].is_some() {
                    continue;
                }
                let val = constrained[&gi];
                for jp in 0..sp.n_pressure {
                    let v = b_loc[(i, jp)];
                    if v != 0.0 {
                        rhs_fixed[red_p(map.global_p(e, jp))] -= v * val;
                    }
                }
            }
            // Penalty block -(1/lambda) C.
            for ip in 0..sp.n_pressure {
                let ri = red_p(map.global_p(e, ip));
                for jp in 0..sp.n_pressure {
                    let v = -c_loc[(ip, jp)] / lambda;
                    if v != 0.0 {
                        trips.push((ri, red_p(map.global_p(e, jp)), v));
                    }
                }
            }
        }

        let matrix = SaddleMatrix::new(n_sys, trips)?;
        Ok(Self {
            matrix,
            reduced,
            constrained,
            rhs_fixed,
            n_free_u,
            lambda,
        })
    }

    /// Solves with the active-stress term evaluated through
    /// `ell_of_phi(element, point)`.
    pub fn solve(
        &self,
        mesh: &PolygonalMesh,
        locals: &[ElasticityLocalSpace],
        map: &ElasticityDofMap,
        ell_of_phi: &dyn Fn(usize, Vector2<f64>) -> f64,
    ) -> Result<ElasticityFields> {
        let mut rhs = self.rhs_fixed.clone();
        for (e, sp) in locals.iter().enumerate() {
            let g_loc = sp.local_g1(self.lambda, &|x| ell_of_phi(e, x));
            for jp in 0..sp.n_pressure {
                rhs[self.n_free_u + (map.global_p(e, jp) - map.n_u)] += g_loc[jp];
            }
        }
        let x = self.matrix.solve(&rhs, SOLVE_TOL)?;

        let mut u_full = DVector::zeros(map.n_u);
        for g in 0..map.n_u {
            u_full[g] = match self.reduced[g] {
                Some(r) => x[r],
                None => self.constrained[&g],
            };
        }
        let p_coeffs = DVector::from_fn(map.n_p, |i, _| x[self.n_free_u + i]);

        let mut ubar = Vec::with_capacity(locals.len());
        let mut p = Vec::with_capacity(locals.len());
        for (e, sp) in locals.iter().enumerate() {
            let lu = local_u_dofs(mesh, map, sp, e, &u_full);
            ubar.push(sp.project_energy(&lu));
            let pc = DVector::from_fn(sp.n_pressure, |j, _| p_coeffs[map.global_p(e, j) - map.n_u]);
            p.push(sp.pressure_poly(pc));
        }
        Ok(ElasticityFields {
            u_dofs: u_full,
            p_coeffs,
            ubar,
            p,
        })
    }

    pub fn matrix(&self) -> &SaddleMatrix {
        &self.matrix
    }
}

/// Assembles and solves the transport saddle system for a given pointwise
/// inverse diffusion tensor.
#[allow(clippy::too_many_arguments)]
pub fn solve_transport(
    mesh: &PolygonalMesh,
    locals: &[DiffusionLocalSpace],
    map: &TransportDofMap,
    roles: &BoundaryRoles,
    theta: f64,
    data: &ProblemData,
    minv: &dyn Fn(usize, Vector2<f64>) -> Result<Matrix2<f64>>,
) -> Result<TransportFields> {
    let (matrix, reduced, constrained, rhs, n_free_z) =
        assemble_transport(mesh, locals, map, roles, theta, data, minv)?;
    let x = matrix.solve(&rhs, SOLVE_TOL)?;

    let mut z_full = DVector::zeros(map.n_z);
    for g in 0..map.n_z {
        z_full[g] = match reduced[g] {
            Some(r) => x[r],
            None => constrained[&g],
        };
    }
    let c_coeffs = DVector::from_fn(map.n_c, |i, _| x[n_free_z + i]);

    let mut zbar = Vec::with_capacity(locals.len());
    let mut div_z = Vec::with_capacity(locals.len());
    let mut phi = Vec::with_capacity(locals.len());
    for (e, sp) in locals.iter().enumerate() {
        let lz = local_z_dofs(mesh, map, sp, e, &z_full);
        zbar.push(sp.project_l2(&lz));
        div_z.push(sp.divergence(&lz)?);
        let cc = DVector::from_fn(sp.n_conc, |j, _| c_coeffs[map.global_c(e, j) - map.n_z]);
        phi.push(sp.concentration_poly(cc));
    }
    Ok(TransportFields {
        z_dofs: z_full,
        c_coeffs,
        zbar,
        div_z,
        phi,
    })
}

type TransportAssembly = (
    SaddleMatrix,
    Vec<Option<usize>>,
    BTreeMap<usize, f64>,
    DVector<f64>,
    usize,
);

#[allow(clippy::too_many_arguments)]
pub fn assemble_transport(
    mesh: &PolygonalMesh,
    locals: &[DiffusionLocalSpace],
    map: &TransportDofMap,
    roles: &BoundaryRoles,
    theta: f64,
    data: &ProblemData,
    minv: &dyn Fn(usize, Vector2<f64>) -> Result<Matrix2<f64>>,
) -> Result<TransportAssembly> {
    let constrained = map.essential_values(mesh, roles, data.zeta_normal);
    let mut reduced = vec![None; map.n_z];
    let mut n_free_z = 0;
    for g in 0..map.n_z {
        if !constrained.contains_key(&g) {
            reduced[g] = Some(n_free_z);
            n_free_z += 1;
        }
    }
    let n_sys = n_free_z + map.n_c;
    let red_c = |gc: usize| n_free_z + (gc - map.n_z);

    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = DVector::zeros(n_sys);

    for (e, sp) in locals.iter().enumerate() {
        let a_loc = sp.local_a2h(&|x| minv(e, x))?;
        let b_loc = sp.local_b2();
        let c_loc = sp.local_c2();
        let g_loc = sp.local_g2(data.source);
        let mut f_loc = DVector::zeros(sp.n_dofs);
        for (le, &(eid, _)) in mesh.element_edges(e).iter().enumerate() {
            if let Some(tag) = mesh.tag(eid) {
                if roles.transport_dirichlet_tag(tag) {
                    f_loc += sp.local_f2(le, data.phi_dirichlet);
                }
            }
        }

        let globals: Vec<(usize, f64)> = sp
            .dof_kinds()
            .iter()
            .map(|&kind| map.global_z(mesh, e, kind))
            .collect();
        for (i, &(gi, si)) in globals.iter().enumerate() {
            let Some(ri) = reduced[gi] else { continue };
            rhs[ri] += si * f_loc[i];
            for (j, &(gj, sj)) in globals.iter().enumerate() {
                let v = a_loc[(i, j)];
                if v == 0.0 {
                    continue;
                }
                match reduced[gj] {
                    Some(rj) => trips.push((ri, rj, si * sj * v)),
                    None => rhs[ri] -= si * v * (sj * constrained[&gj]),
                }
            }
            for jc in 0..sp.n_conc {
                let v = b_loc[(i, jc)];
                if v == 0.0 {
                    continue;
                }
                let rj = red_c(map.global_c(e, jc));
                trips.push((ri, rj, si * v));
                trips.push((rj, ri, si * v));
            }
        }
        // Lifting of essential flux dofs into concentration rows.
        for (i, &(gi, si)) in globals.iter().enumerate() {
            if reduced[gi].is_some() {
                continue;
            }
            let val_local = si * constrained[&gi];
            for jc in 0..sp.n_conc {
                let v = b_loc[(i, jc)];
                if v != 0.0 {
                    rhs[red_c(map.global_c(e, jc))] -= v * val_local;
                }
            }
        }
        for ic in 0..sp.n_conc {
            let ri = red_c(map.global_c(e, ic));
            rhs[ri] += g_loc[ic];
            if theta != 0.0 {
                for jc in 0..sp.n_conc {
                    let v = -theta * c_loc[(ic, jc)];
                    if v != 0.0 {
                        trips.push((ri, red_c(map.global_c(e, jc)), v));
                    }
                }
            }
        }
    }

    let matrix = SaddleMatrix::new(n_sys, trips)?;
    Ok((matrix, reduced, constrained, rhs, n_free_z))
}

//! Global discretization driver: DoF maps, saddle-point solves for the two
//! sub-problems, weighted norms, and the Picard alternation.

pub mod assemble;
pub mod dofmap;
pub mod norms;
pub mod sparse;

pub use assemble::{
    local_u_dofs, local_z_dofs, solve_transport, ElasticityFields, ElasticitySystem, ProblemData,
    TransportFields, SOLVE_TOL,
};
pub use dofmap::{BoundaryRoles, ElasticityDofMap, TransportDofMap};
pub use norms::FieldNorms;
pub use sparse::SaddleMatrix;

use nalgebra::{Matrix2, Vector2};

use crate::constitutive::{
    eval_m_inverse_at, reconstruct_stress, ActiveStressLaw, DiffusionLaw, PhysicalParams,
};
use crate::diffusion::DiffusionLocalSpace;
use crate::elasticity::ElasticityLocalSpace;
use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;
use crate::polybasis::{ScalarPoly, VectorPoly};
use crate::quadrature::PolygonQuadrature;

/// Concentration iterate fed into the elasticity solve.
pub enum PhiIterate<'a> {
    Constant(f64),
    Field(&'a [ScalarPoly]),
}

impl PhiIterate<'_> {
    fn eval(&self, e: usize, x: Vector2<f64>) -> f64 {
        match self {
            PhiIterate::Constant(c) => *c,
            PhiIterate::Field(f) => f[e].eval(x),
        }
    }
}

/// Where the transport coefficient M^{-1} comes from.
pub enum CoefficientSource<'a> {
    /// Reconstructed from the current discrete elasticity iterate.
    Discrete {
        ubar: &'a [VectorPoly],
        p: &'a [ScalarPoly],
    },
    /// From a closure for the exact stress (manufactured runs, error norms).
    ExactSigma(&'a dyn Fn(Vector2<f64>) -> Matrix2<f64>),
    /// A constant inverse tensor, bypassing the law (patch tests).
    ConstantInverse(Matrix2<f64>),
}

#[derive(Debug, Clone, Copy)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial concentration iterate: every coefficient set to this value.
    pub init_constant: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 50,
            init_constant: 0.0,
        }
    }
}

pub struct CoupledSolution {
    pub elasticity: ElasticityFields,
    pub transport: TransportFields,
    /// Number of full (elasticity + transport) sweeps performed.
    pub iterations: usize,
    /// Successive-difference weighted norms, starting from the second sweep.
    pub log: Vec<f64>,
}

/// A mesh equipped with local spaces, numbering, material laws and boundary
/// roles: everything needed to run the two solvers and the coupled loop.
pub struct CoupledProblem<'m> {
    pub mesh: &'m PolygonalMesh,
    pub k1: usize,
    pub k2: usize,
    pub params: PhysicalParams,
    pub diffusion_law: DiffusionLaw,
    pub active_law: ActiveStressLaw,
    pub roles: BoundaryRoles,
    pub locals1: Vec<ElasticityLocalSpace>,
    pub locals2: Vec<DiffusionLocalSpace>,
    pub map1: ElasticityDofMap,
    pub map2: TransportDofMap,
}

impl<'m> CoupledProblem<'m> {
    pub fn new(
        mesh: &'m PolygonalMesh,
        k1: usize,
        k2: usize,
        params: PhysicalParams,
        diffusion_law: DiffusionLaw,
        active_law: ActiveStressLaw,
        roles: BoundaryRoles,
    ) -> Result<Self> {
        let quad_degree = 2 * k1.max(k2) + 4;
        let mut locals1 = Vec::with_capacity(mesh.n_elements());
        let mut locals2 = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            locals1.push(ElasticityLocalSpace::build(mesh, e, k1, quad_degree)?);
            locals2.push(DiffusionLocalSpace::build(mesh, e, k2, quad_degree)?);
        }
        let map1 = ElasticityDofMap::new(mesh, k1);
        let map2 = TransportDofMap::new(mesh, k2);
        Ok(Self {
            mesh,
            k1,
            k2,
            params,
            diffusion_law,
            active_law,
            roles,
            locals1,
            locals2,
            map1,
            map2,
        })
    }

    /// Total dof count of the coupled discretization (both fields of both
    /// sub-problems, essential dofs included).
    pub fn total_dofs(&self) -> usize {
        self.map1.total() + self.map2.total()
    }

    /// Per-element volume rules (shared by both local space families).
    pub fn quads(&self) -> Vec<PolygonQuadrature> {
        self.locals1.iter().map(|sp| sp.quad.clone()).collect()
    }

    /// Pointwise inverse coefficient for a given source.
    pub fn minv_at(
        &self,
        src: &CoefficientSource,
        e: usize,
        x: Vector2<f64>,
    ) -> Result<Matrix2<f64>> {
        match src {
            CoefficientSource::Discrete { ubar, p } => {
                let strain = ubar[e].sym_grad(x);
                let sigma = reconstruct_stress(strain, p[e].eval(x), self.params.mu);
                eval_m_inverse_at(&self.diffusion_law, sigma, x)
            }
            CoefficientSource::ExactSigma(sig) => eval_m_inverse_at(&self.diffusion_law, sig(x), x),
            CoefficientSource::ConstantInverse(m) => Ok(*m),
        }
    }

    /// One elasticity solve against a concentration iterate.
    pub fn solve_elasticity(
        &self,
        data: &ProblemData,
        phi: &PhiIterate,
    ) -> Result<ElasticityFields> {
        let system = ElasticitySystem::build(
            self.mesh,
            &self.locals1,
            &self.map1,
            &self.roles,
            self.params.mu,
            self.params.lambda,
            data,
        )?;
        system.solve(self.mesh, &self.locals1, &self.map1, &|e, x| {
            self.active_law.eval(phi.eval(e, x))
        })
    }

    /// One transport solve against a coefficient source.
    pub fn solve_transport(
        &self,
        data: &ProblemData,
        src: &CoefficientSource,
    ) -> Result<TransportFields> {
        solve_transport(
            self.mesh,
            &self.locals2,
            &self.map2,
            &self.roles,
            self.params.theta,
            data,
            &|e, x| self.minv_at(src, e, x),
        )
    }

    /// Fixed-point alternation: elasticity with the current concentration,
    /// then transport with the fresh stress, until the successive projected
    /// iterates agree in the weighted norms. The elasticity matrix is
    /// factorized once and reused across sweeps.
    pub fn picard(&self, data: &ProblemData, opts: PicardOptions) -> Result<CoupledSolution> {
        let system = ElasticitySystem::build(
            self.mesh,
            &self.locals1,
            &self.map1,
            &self.roles,
            self.params.mu,
            self.params.lambda,
            data,
        )?;
        let quads = self.quads();

        let mut prev: Option<(ElasticityFields, TransportFields)> = None;
        let mut log = Vec::new();
        for sweep in 1..=opts.max_iter {
            let el = {
                let phi_iter = match &prev {
                    None => PhiIterate::Constant(opts.init_constant),
                    Some((_, tr)) => PhiIterate::Field(&tr.phi),
                };
                system.solve(self.mesh, &self.locals1, &self.map1, &|e, x| {
                    self.active_law.eval(phi_iter.eval(e, x))
                })?
            };
            let src = CoefficientSource::Discrete {
                ubar: &el.ubar,
                p: &el.p,
            };
            let tr = self.solve_transport(data, &src)?;

            if let Some((pel, ptr)) = &prev {
                let diff = self.iterate_difference(&quads, &el, &tr, pel, ptr);
                log.push(diff);
                if diff < opts.tol {
                    return Ok(CoupledSolution {
                        elasticity: el,
                        transport: tr,
                        iterations: sweep,
                        log,
                    });
                }
            }
            prev = Some((el, tr));
        }
        Err(Error::PicardDiverged {
            max_iter: opts.max_iter,
            history: log,
        })
    }

    /// Weighted norm of the difference between consecutive projected
    /// iterates; the flux term is weighted with the current iterate's
    /// coefficient field.
    fn iterate_difference(
        &self,
        quads: &[PolygonQuadrature],
        el: &ElasticityFields,
        tr: &TransportFields,
        pel: &ElasticityFields,
        ptr: &TransportFields,
    ) -> f64 {
        let du = norms::vector_diff(&el.ubar, &pel.ubar);
        let dp = norms::scalar_diff(&el.p, &pel.p);
        let dz = norms::vector_diff(&tr.zbar, &ptr.zbar);
        let dz_div = norms::poly_divergence(&dz);
        let dphi = norms::scalar_diff(&tr.phi, &ptr.phi);

        let v1 = norms::v1_error_sq(quads, &du, None, self.params.mu);
        let q1 = norms::scalar_error_sq(
            quads,
            &dp,
            None,
            norms::q1_weight(self.params.mu, self.params.lambda),
        );
        let src = CoefficientSource::Discrete {
            ubar: &el.ubar,
            p: &el.p,
        };
        // The coefficient was validated SPD during this sweep's assembly.
        let v2 = norms::v2_error_sq(
            quads,
            &dz,
            &dz_div,
            None,
            None,
            &|e, x| {
                self.minv_at(&src, e, x)
                    .unwrap_or_else(|_| Matrix2::identity())
            },
            self.params.m_bound,
        );
        let q2 = norms::scalar_error_sq(
            quads,
            &dphi,
            None,
            norms::q2_weight(self.params.m_bound, self.params.theta),
        );
        (v1 + q1 + v2 + q2).sqrt()
    }
}

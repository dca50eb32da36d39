//! Mixed virtual element solver for stress-assisted diffusion on 2D polygonal meshes.
//!
//! The model couples linear elastostatics in displacement / total-pressure
//! (Herrmann) form with a reaction-diffusion equation in flux / concentration
//! mixed form. The two-way coupling enters through a concentration-dependent
//! isotropic active stress and a stress-dependent diffusion tensor, and the
//! nonlinear system is solved by a Picard alternation between the two
//! saddle-point sub-problems.
//!
//! Modules:
//! - [`mesh`]: polygonal meshes (structured, Voronoi, annulus families), JSON
//!   I/O, regularity checks.
//! - [`quadrature`]: Gauss rules on edges, Gauss-Lobatto nodes, quadrature on
//!   arbitrary simple polygons.
//! - [`polybasis`]: scaled monomial bases and their gradient/perp splits.
//! - [`constitutive`]: material parameters and the nonlinear coefficient laws.
//! - [`elasticity`]: local virtual element spaces and blocks for the
//!   displacement/pressure pair (degree k1 >= 2).
//! - [`diffusion`]: local H(div) virtual element spaces and blocks for the
//!   flux/concentration pair (k2 in {0, 1}).
//! - [`solver`]: global DoF maps, saddle-point assembly and solve, weighted
//!   norms, and the Picard loop.
//! - [`bench`]: manufactured solutions, convergence/robustness tables and the
//!   lithiation demo.
//! - [`export`]: legacy VTK and CSV writers.

pub mod bench;
pub mod config;
pub mod constitutive;
pub mod diffusion;
pub mod elasticity;
pub mod error;
pub mod export;
pub mod mesh;
pub mod polybasis;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};

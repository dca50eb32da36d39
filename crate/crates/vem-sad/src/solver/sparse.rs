//! Sparse symmetric-indefinite solve for the assembled saddle systems.
//!
//! The factorization is a sparse LU with partial pivoting; one step of
//! iterative refinement keeps the residual near machine level even for the
//! extreme parameter sweeps. The raw triplets are kept so the residual (and
//! the dense comparison oracle in the tests) is computed independently of
//! the factorization path.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DVector;

use crate::error::{Error, Result};

pub struct SaddleMatrix {
    pub n: usize,
    triplets: Vec<(usize, usize, f64)>,
    lu: faer::sparse::solvers::Lu<usize, f64>,
    nnz: usize,
}

impl SaddleMatrix {
    pub fn new(n: usize, triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        let t: Vec<Triplet<usize, usize, f64>> = triplets
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, v))
            .collect();
        let mat = SparseColMat::try_new_from_triplets(n, n, &t).map_err(|e| {
            Error::Factorization {
                detail: format!("assembly failed: {e:?}"),
                n,
                nnz: triplets.len(),
            }
        })?;
        let nnz = mat.compute_nnz();
        let lu = mat.rb().sp_lu().map_err(|e| Error::Factorization {
            detail: format!("sparse LU failed: {e:?} (system may be singular; check that the essential boundary set is nonempty)"),
            n,
            nnz,
        })?;
        Ok(Self {
            n,
            triplets,
            lu,
            nnz,
        })
    }

    /// Matrix-vector product straight from the triplets.
    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n);
        for &(i, j, v) in &self.triplets {
            y[i] += v * x[j];
        }
        y
    }

    /// Solves to a relative max-norm residual below `tol` (one refinement
    /// pass, then verify).
    pub fn solve(&self, rhs: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
        let b = Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x0 = self.lu.solve(&b);
        let mut x = DVector::from_fn(self.n, |i, _| x0[(i, 0)]);

        let scale = rhs.amax().max(f64::MIN_POSITIVE);
        for _ in 0..2 {
            let r = rhs - self.matvec(&x);
            if r.amax() / scale <= tol {
                return Ok(x);
            }
            let rb = Mat::from_fn(self.n, 1, |i, _| r[i]);
            let dx = self.lu.solve(&rb);
            for i in 0..self.n {
                x[i] += dx[(i, 0)];
            }
        }
        let residual = (rhs - self.matvec(&x)).amax() / scale;
        if residual > tol {
            return Err(Error::ResidualTooLarge { residual, tol });
        }
        Ok(x)
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    /// Relative asymmetry max|S - S^T| / max|S|, computed from the triplets.
    pub fn asymmetry(&self) -> f64 {
        use std::collections::HashMap;
        let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
        for &(i, j, v) in &self.triplets {
            *acc.entry((i, j)).or_insert(0.0) += v;
        }
        let mut max_entry = 0.0f64;
        let mut max_gap = 0.0f64;
        for (&(i, j), &v) in &acc {
            max_entry = max_entry.max(v.abs());
            if i <= j {
                let vt = acc.get(&(j, i)).copied().unwrap_or(0.0);
                max_gap = max_gap.max((v - vt).abs());
            } else if !acc.contains_key(&(j, i)) {
                max_gap = max_gap.max(v.abs());
            }
        }
        if max_entry == 0.0 {
            0.0
        } else {
            max_gap / max_entry
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_system_returns_rhs() {
        let trips: Vec<(usize, usize, f64)> = (0..5).map(|i| (i, i, 1.0)).collect();
        let m = SaddleMatrix::new(5, trips).unwrap();
        let rhs = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5, 0.0]);
        let x = m.solve(&rhs, 1e-12).unwrap();
        assert_relative_eq!((x - rhs).amax(), 0.0);
    }

    #[test]
    fn random_saddle_system_matches_dense_oracle() {
        // [[A, B], [B^T, -C]] with SPD A and C, solved both sparse and dense.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let nu = 60;
        let np = 25;
        let n = nu + np;
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut trips = Vec::new();
        // A = D + tridiagonal coupling, SPD.
        for i in 0..nu {
            let d = rng.gen_range(2.0..4.0);
            dense[(i, i)] += d;
            trips.push((i, i, d));
            if i + 1 < nu {
                let o = rng.gen_range(-0.5..0.5);
                dense[(i, i + 1)] += o;
                dense[(i + 1, i)] += o;
                trips.push((i, i + 1, o));
                trips.push((i + 1, i, o));
            }
        }
        // Sparse B.
        for j in 0..np {
            for _ in 0..3 {
                let i = rng.gen_range(0..nu);
                let v = rng.gen_range(-1.0..1.0);
                dense[(i, nu + j)] += v;
                dense[(nu + j, i)] += v;
                trips.push((i, nu + j, v));
                trips.push((nu + j, i, v));
            }
            let c = rng.gen_range(0.5..1.5);
            dense[(nu + j, nu + j)] -= c;
            trips.push((nu + j, nu + j, -c));
        }
        let rhs = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let m = SaddleMatrix::new(n, trips).unwrap();
        let x = m.solve(&rhs, 1e-12).unwrap();
        let x_dense = dense.lu().solve(&rhs).unwrap();
        assert!((&x - &x_dense).amax() < 1e-10 * (1.0 + x_dense.amax()));
    }

    #[test]
    fn zero_penalty_block_is_solvable() {
        // Pure saddle point (C = 0) still factorizes with pivoting.
        let trips = vec![
            (0usize, 0usize, 2.0),
            (1, 1, 2.0),
            (0, 2, 1.0),
            (2, 0, 1.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
        ];
        let m = SaddleMatrix::new(3, trips).unwrap();
        let rhs = DVector::from_vec(vec![3.0, 3.0, 2.0]);
        let x = m.solve(&rhs, 1e-12).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn asymmetry_detects_symmetric_assembly() {
        let trips = vec![(0usize, 1usize, 2.0), (1, 0, 2.0), (0, 0, 1.0), (1, 1, 1.0)];
        let m = SaddleMatrix::new(2, trips).unwrap();
        assert_eq!(m.asymmetry(), 0.0);
    }
}

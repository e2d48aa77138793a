//! Sparse direct linear solver behind the Newton driver.
//!
//! Contract: for a square system `K x = r` the returned solution satisfies
//! the backward-error bound `‖K x − r‖ / ‖r‖ ≤ 1e-10`; matrices may be
//! symmetric indefinite (microstructure states sit next to saddle points),
//! so the factorization is an LU with pivoting. The symbolic analysis is
//! cached and reused while the sparsity pattern stays fixed, which is the
//! case across Newton iterations.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::SparseColMatRef;
use faer::Mat;
use thiserror::Error;

/// Relative backward-error bound guaranteed by [`DirectSolver::solve`].
pub const BACKWARD_ERROR_BOUND: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LinSolveError {
    #[error("linear solve failure: {0}")]
    Breakdown(String),
    #[error("linear solve failure: backward error {0:.3e} exceeds bound {BACKWARD_ERROR_BOUND:.1e}")]
    BackwardError(f64),
}

/// Sparse LU solver with cached symbolic factorization.
#[derive(Default)]
pub struct DirectSolver {
    symbolic: Option<SymbolicLu<usize>>,
    dims: (usize, usize),
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves `K x = r`, checking the backward-error contract.
    pub fn solve(
        &mut self,
        mat: SparseColMatRef<'_, usize, f64>,
        rhs: &[f64],
    ) -> Result<Vec<f64>, LinSolveError> {
        let n = mat.nrows();
        assert_eq!(mat.ncols(), n, "system must be square");
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return Ok(Vec::new());
        }

        if self.symbolic.is_none() || self.dims != (n, mat.compute_nnz()) {
            let sym = SymbolicLu::try_new(mat.symbolic())
                .map_err(|e| LinSolveError::Breakdown(format!("symbolic analysis: {e:?}")))?;
            self.dims = (n, mat.compute_nnz());
            self.symbolic = Some(sym);
        }
        let symbolic = self.symbolic.as_ref().expect("just initialized").clone();

        // faer's numeric LU panics on an exactly zero pivot instead of
        // returning an error; map that to a breakdown
        let lu: Lu<usize, f64> = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            Lu::try_new_with_symbolic(symbolic, mat)
        }))
        .map_err(|_| LinSolveError::Breakdown("zero pivot".to_string()))?
        .map_err(|e| LinSolveError::Breakdown(format!("numeric factorization: {e:?}")))?;

        let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        let x = lu.solve(&b);
        let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();

        let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rhs_norm > 0.0 {
            let mut err = 0.0;
            let mut ax = vec![0.0; n];
            for j in 0..n {
                let xv = x[j];
                for (i, v) in mat.row_idx_of_col(j).zip(mat.val_of_col(j)) {
                    ax[i] += v * xv;
                }
            }
            for i in 0..n {
                let d = ax[i] - rhs[i];
                err += d * d;
            }
            let rel = err.sqrt() / rhs_norm;
            if !(rel <= BACKWARD_ERROR_BOUND) {
                return Err(LinSolveError::BackwardError(rel));
            }
        }
        Ok(x)
    }
}

//! Sparse row-stochastic chains and their stationary vectors.

use std::io::Write;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::error::{Error, Result};
use crate::pool::SolveMethod;

/// Transition matrix stored by rows: `rows[i]` lists `(j, P[i][j])`.
#[derive(Debug, Clone, Default)]
pub struct SparseChain {
    rows: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Copy)]
pub struct StationaryOptions {
    /// Largest acceptable `‖πP − π‖∞`.
    pub residual_tol: f64,
    pub power_tol: f64,
    pub power_max_iter: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            residual_tol: 1e-10,
            power_tol: 1e-12,
            power_max_iter: 1_000_000,
        }
    }
}

impl SparseChain {
    pub fn with_states(n: usize) -> Self {
        SparseChain {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push_state(&mut self) -> usize {
        self.rows.push(Vec::new());
        self.rows.len() - 1
    }

    /// Adds `p` to `P[from][to]`.
    pub fn add(&mut self, from: usize, to: usize, p: f64) {
        if p == 0.0 {
            return;
        }
        let row = &mut self.rows[from];
        match row.iter_mut().find(|(j, _)| *j == to) {
            Some(entry) => entry.1 += p,
            None => row.push((to, p)),
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, p)| p).sum())
            .collect()
    }

    /// `π P`.
    pub fn left_mul(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            let w = pi[i];
            if w == 0.0 {
                continue;
            }
            for &(j, p) in row {
                out[j] += w * p;
            }
        }
        out
    }

    /// `‖π P − π‖∞`.
    pub fn residual(&self, pi: &[f64]) -> f64 {
        self.left_mul(pi)
            .iter()
            .zip(pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Writes one `row col value` line per nonzero, rows in state order.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# row col value")?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut row = row.clone();
            row.sort_by_key(|&(j, _)| j);
            for (j, p) in row {
                writeln!(w, "{i} {j} {p:e}")?;
            }
        }
        Ok(())
    }

    /// Stationary vector: sparse LU on `Pᵀ − I` with the first balance
    /// equation replaced by `Σπ = 1`, falling back to power iteration on the
    /// lazy chain `(I + P)/2` if the factorization fails or misses the
    /// residual target.
    pub fn stationary(&self, opts: &StationaryOptions) -> Result<(Vec<f64>, SolveMethod)> {
        let n = self.len();
        if n == 0 {
            return Err(Error::Numerical("empty state space".into()));
        }
        if n == 1 {
            return Ok((vec![1.0], SolveMethod::Trivial));
        }
        let lu_residual = match self.sparse_lu() {
            Some(pi) => {
                let r = self.residual(&pi);
                if r <= opts.residual_tol {
                    return Ok((pi, SolveMethod::SparseLu));
                }
                Some(r)
            }
            None => None,
        };
        let pi = self.power_iteration(opts);
        let r = self.residual(&pi);
        if r <= opts.residual_tol {
            return Ok((pi, SolveMethod::PowerIteration));
        }
        Err(Error::Numerical(format!(
            "no stationary vector within {:e}: sparse LU residual {}, power iteration residual {r:e} \
             after {} iterations ({n} states, {} nonzeros)",
            opts.residual_tol,
            lu_residual.map_or("n/a (factorization failed)".to_string(), |r| format!("{r:e}")),
            opts.power_max_iter,
            self.nnz(),
        )))
    }

    fn sparse_lu(&self) -> Option<Vec<f64>> {
        let n = self.len();
        let mut triplets = Vec::with_capacity(self.nnz() + 2 * n);
        // Row 0 of the system is the normalization.
        for j in 0..n {
            triplets.push(Triplet::new(0, j, 1.0));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let mut diag = -1.0;
            for &(j, p) in row {
                if j == i {
                    diag += p;
                } else if j != 0 {
                    triplets.push(Triplet::new(j, i, p));
                }
            }
            if i != 0 {
                triplets.push(Triplet::new(i, i, diag));
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets).ok()?;
        let lu = a.sp_lu().ok()?;
        let mut rhs = Col::<f64>::zeros(n);
        rhs[0] = 1.0;
        let x = lu.solve(&rhs);
        let mut pi: Vec<f64> = (0..n).map(|i| x[i]).collect();
        if pi.iter().any(|v| !v.is_finite()) {
            return None;
        }
        clean_distribution(&mut pi);
        Some(pi)
    }

    fn power_iteration(&self, opts: &StationaryOptions) -> Vec<f64> {
        let n = self.len();
        let mut pi = vec![1.0 / n as f64; n];
        for _ in 0..opts.power_max_iter {
            let next = self.left_mul(&pi);
            let mut delta: f64 = 0.0;
            for (p, q) in pi.iter_mut().zip(&next) {
                let lazy = 0.5 * (*p + q);
                delta = delta.max((lazy - *p).abs());
                *p = lazy;
            }
            if delta < opts.power_tol {
                break;
            }
        }
        clean_distribution(&mut pi);
        pi
    }
}

/// Zeroes round-off negatives and renormalizes.
pub(crate) fn clean_distribution(pi: &mut [f64]) {
    for p in pi.iter_mut() {
        if *p < 0.0 && *p > -1e-12 {
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    if total > 0.0 {
        pi.iter_mut().for_each(|p| *p /= total);
    }
}

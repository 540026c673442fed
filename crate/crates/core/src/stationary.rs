//! Stationary distribution of a row-stochastic matrix.

use serde::{Deserialize, Serialize};

use crate::chain::{SparseMatrix, TransitionMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveMethod {
    /// Dense elimination for small chains, power iteration otherwise.
    Auto,
    /// Dense Grassmann–Taksar–Heyman elimination.
    Dense,
    /// Normalized power iteration on the sparse matrix.
    Power,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub method: SolveMethod,
    /// Successive-iterate ∞-norm tolerance for power iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest state count handled densely under [`SolveMethod::Auto`].
    pub dense_limit: usize,
    /// Accepted stationarity residual `‖πM − π‖∞`.
    pub residual_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Auto,
            tolerance: 1e-13,
            max_iterations: 1_000_000,
            dense_limit: 2000,
            residual_limit: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
    /// `‖πM − π‖∞` of the returned vector.
    pub residual: f64,
    /// Power iterations spent; zero for the dense route.
    pub iterations: usize,
    pub method: SolveMethod,
}

impl StationaryDistribution {
    /// Point mass on one state.
    pub fn point_mass(len: usize, at: usize, matrix: &TransitionMatrix) -> Self {
        let mut pi = vec![0.0; len];
        pi[at] = 1.0;
        let residual = residual(matrix.matrix(), &pi);
        Self { pi, residual, iterations: 0, method: SolveMethod::Dense }
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }
}

/// Solves `π = πM`, `Σπ = 1` with default options.
pub fn solve_stationary(m: &TransitionMatrix) -> Result<StationaryDistribution> {
    solve_stationary_with(m, &SolverOptions::default())
}

pub fn solve_stationary_with(m: &TransitionMatrix, opts: &SolverOptions) -> Result<StationaryDistribution> {
    let n = m.len();
    let dense = match opts.method {
        SolveMethod::Dense => true,
        SolveMethod::Power => false,
        SolveMethod::Auto => n <= opts.dense_limit,
    };
    let (pi, iterations, method) = if dense {
        match gth(m.matrix()) {
            Some(pi) => (pi, 0, SolveMethod::Dense),
            None => {
                let (pi, it) = power_iteration(m.matrix(), opts)?;
                (pi, it, SolveMethod::Power)
            }
        }
    } else {
        let (pi, it) = power_iteration(m.matrix(), opts)?;
        (pi, it, SolveMethod::Power)
    };
    let res = residual(m.matrix(), &pi);
    if res.is_nan() || res > opts.residual_limit {
        return Err(Error::Solver { iterations, residual: res });
    }
    Ok(StationaryDistribution { pi, residual: res, iterations, method })
}

/// `‖πM − π‖∞`
pub fn residual(m: &SparseMatrix, pi: &[f64]) -> f64 {
    let next = m.left_mul(pi);
    next.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn power_iteration(m: &SparseMatrix, opts: &SolverOptions) -> Result<(Vec<f64>, usize)> {
    let n = m.n_rows();
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut diff = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        m.left_mul_into(&x, &mut next);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        diff = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if diff <= opts.tolerance {
            return Ok((x, it));
        }
    }
    Err(Error::Solver { iterations: opts.max_iterations, residual: diff })
}

/// Grassmann–Taksar–Heyman elimination. Subtraction-free, so it keeps full
/// relative accuracy on nearly decomposable chains. Returns `None` when a
/// censored state has no path to lower-indexed states (state 0 is not
/// reachable from everywhere).
fn gth(m: &SparseMatrix) -> Option<Vec<f64>> {
    let n = m.n_rows();
    if n == 1 {
        return Some(vec![1.0]);
    }
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        for (c, v) in m.row(r) {
            a[r * n + c] = v;
        }
    }
    for k in (1..n).rev() {
        let (upper, pivot_and_rest) = a.split_at_mut(k * n);
        let pivot_row = &pivot_and_rest[..k];
        let s: f64 = pivot_row.iter().sum();
        if s.is_nan() || s <= 0.0 {
            return None;
        }
        for i in 0..k {
            let row = &mut upper[i * n..i * n + n];
            let f = row[k] / s;
            if f == 0.0 {
                continue;
            }
            row[k] = f;
            for (x, &p) in row[..k].iter_mut().zip(pivot_row) {
                *x += f * p;
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        // a[i][k] already holds P[i][k] / s_k for i < k
        pi[k] = (0..k).map(|i| pi[i] * a[i * n + k]).sum();
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    Some(pi)
}

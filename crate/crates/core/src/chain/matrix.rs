use rayon::prelude::*;

use super::events::Kernel;
use super::state::StateSpace;
use crate::params::SystemParams;

/// Row-major compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Assembles a matrix from per-row `(column, value)` lists. Columns within
    /// a row must be strictly increasing.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n_rows = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                debug_assert!((c as usize) < n_cols);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Self { n_rows, n_cols, row_ptr, cols, vals }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::from_rows(n_cols, vec![Vec::new(); n_rows])
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().zip(&self.vals[span]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&(c as u32)) {
            Ok(pos) => self.vals[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, r: usize) -> f64 {
        self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().sum()
    }

    /// `out = x · M`, overwriting `out`.
    pub fn left_mul_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.n_rows);
        assert_eq!(out.len(), self.n_cols);
        out.iter_mut().for_each(|v| *v = 0.0);
        self.left_mul_acc(x, out);
    }

    /// `out += x · M`.
    pub fn left_mul_acc(&self, x: &[f64], out: &mut [f64]) {
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            for (&c, &v) in self.cols[span.clone()].iter().zip(&self.vals[span]) {
                out[c as usize] += xr * v;
            }
        }
    }

    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        self.left_mul_into(x, &mut out);
        out
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in dense.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        dense
    }
}

/// Scratch space collecting one sparse row in deterministic column order.
pub(crate) struct RowAccumulator {
    dense: Vec<f64>,
    touched: Vec<u32>,
}

impl RowAccumulator {
    pub fn new(width: usize) -> Self {
        Self { dense: vec![0.0; width], touched: Vec::new() }
    }

    #[inline]
    pub fn add(&mut self, col: usize, v: f64) {
        if self.dense[col] == 0.0 {
            self.touched.push(col as u32);
        }
        self.dense[col] += v;
    }

    pub fn take(&mut self) -> Vec<(u32, f64)> {
        self.touched.sort_unstable();
        self.touched.dedup();
        let row = self
            .touched
            .iter()
            .map(|&c| (c, std::mem::take(&mut self.dense[c as usize])))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        self.touched.clear();
        row
    }
}

/// Builds sparse rows in parallel; `fill(row, acc)` populates one row.
pub(crate) fn build_rows<F>(n_rows: usize, width: usize, fill: F) -> SparseMatrix
where
    F: Fn(usize, &mut RowAccumulator) + Sync,
{
    let rows: Vec<Vec<(u32, f64)>> = (0..n_rows)
        .into_par_iter()
        .map_init(
            || RowAccumulator::new(width),
            |acc, r| {
                fill(r, acc);
                acc.take()
            },
        )
        .collect();
    SparseMatrix::from_rows(width, rows)
}

/// One-slot transition matrix of the aggregate chain.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    matrix: SparseMatrix,
}

impl TransitionMatrix {
    /// Wraps a matrix assumed to be row-stochastic.
    pub fn from_sparse(matrix: SparseMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.n_rows() == 0
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix.get(from, to)
    }

    /// Largest `|row sum - 1|`.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.len()).map(|r| (self.matrix.row_sum(r) - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Builds the transition matrix by accumulating every event of every state
/// into its target.
pub fn build_transition_matrix(space: &StateSpace, params: &SystemParams) -> TransitionMatrix {
    let kernel = Kernel::new(params);
    build_transition_matrix_with(space, &kernel)
}

pub(crate) fn build_transition_matrix_with(space: &StateSpace, kernel: &Kernel) -> TransitionMatrix {
    let n = space.n_sensors();
    let matrix = build_rows(space.len(), space.len(), |r, acc| {
        kernel.for_each_event(space.state(r), n, |_, p, next| acc.add(space.index(next), p));
    });
    TransitionMatrix { matrix }
}

/// Pascal triangle of binomial coefficients up to row `n_max`.
///
/// Entries are exact integers in `f64` for `n_max <= 56`.
#[derive(Debug, Clone)]
pub struct Pascal {
    rows: Vec<Vec<f64>>,
}

impl Pascal {
    pub fn new(n_max: usize) -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        Self { rows }
    }

    pub fn choose(&self, n: usize, k: usize) -> f64 {
        if k > n {
            0.0
        } else {
            self.rows[n][k]
        }
    }
}

/// Cached binomial PMF `Bin^n_p(k)` for all `n <= n_max`.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    p: f64,
    rows: Vec<Vec<f64>>,
}

impl BinomialTable {
    pub fn new(p: f64, n_max: usize, pascal: &Pascal) -> Self {
        let q = 1.0 - p;
        let pow_p: Vec<f64> = (0..=n_max).map(|k| p.powi(k as i32)).collect();
        let pow_q: Vec<f64> = (0..=n_max).map(|k| q.powi(k as i32)).collect();
        let rows =
            (0..=n_max).map(|n| (0..=n).map(|k| pascal.choose(n, k) * pow_p[k] * pow_q[n - k]).collect()).collect();
        Self { p, rows }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `Bin^n_p(k)`; zero outside `0..=n`.
    #[inline]
    pub fn pmf(&self, n: usize, k: usize) -> f64 {
        if k > n {
            0.0
        } else {
            self.rows[n][k]
        }
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.rows[n]
    }
}

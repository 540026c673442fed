//! Choice of the backoff transmit probability β.

use rayon::prelude::*;

use crate::analysis::Analysis;
use crate::error::{Error, Result};
use crate::paoii::paoii_quantile_interpolated;
use crate::params::SystemParams;

use super::config::ExperimentConfig;
use super::experiment::analyze_point;
use super::output::{BetaEvaluation, Optimization};

const REFINE_ROUNDS: usize = 3;
const REFINE_POINTS: usize = 8;
const EDGE_BISECTIONS: usize = 12;
const PLATEAU_FRACTION: f64 = 0.9;

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| match k {
            0 => lo,
            k if k == points - 1 => hi,
            k => (lo.ln() + (hi.ln() - lo.ln()) * k as f64 / (points - 1) as f64).exp(),
        })
        .collect()
}

/// Objective and goodput at one β. The PMF recursion stops as soon as the
/// CDF passes `q`, which is all the interpolated percentile needs.
fn evaluate(base: &SystemParams, beta: f64, q: f64, t_max: usize) -> BetaEvaluation {
    let params = base.with_beta(beta);
    let Ok(analysis) = Analysis::solve(&params) else {
        return BetaEvaluation { beta, objective: None, goodput: None };
    };
    let stop = (1.0 - q) * (1.0 - 1e-9);
    let objective = analysis.paoii_pmf(t_max, stop).ok().and_then(|pmf| paoii_quantile_interpolated(&pmf, q).ok());
    BetaEvaluation { beta, objective, goodput: Some(analysis.metrics.goodput) }
}

fn goodput_at(base: &SystemParams, beta: f64) -> Option<f64> {
    Analysis::solve(&base.with_beta(beta)).ok().map(|a| a.metrics.goodput)
}

fn key(e: &BetaEvaluation) -> f64 {
    e.objective.unwrap_or(f64::INFINITY)
}

/// Coarse log grid over β, then nested sub-grids around the incumbent.
/// Goodput on the coarse grid locates the collapse edge, refined by bisection.
pub fn optimize_beta(cfg: &ExperimentConfig, q: f64) -> Result<Optimization> {
    if !cfg.percentiles.contains(&q) {
        return Err(Error::Config(format!("quantile {q} is not in the percentile list")));
    }
    let base = cfg.params();
    base.validate()?;
    let grid: Vec<BetaEvaluation> = log_grid(cfg.beta_min, cfg.beta_max, cfg.beta_points)
        .par_iter()
        .map(|&b| evaluate(&base, b, q, cfg.t_max))
        .collect();

    let best_idx = (0..grid.len())
        .min_by(|&i, &j| key(&grid[i]).total_cmp(&key(&grid[j])))
        .expect("grid has at least three points");
    if grid[best_idx].objective.is_none() {
        return Err(Error::domain(format!(
            "percentile {q} is not reached within {} slots anywhere on the β grid",
            cfg.t_max
        )));
    }

    let keys: Vec<f64> = grid.iter().map(key).collect();
    let local_minima = (0..keys.len())
        .filter(|&i| keys[i].is_finite())
        .filter(|&i| i == 0 || keys[i] < keys[i - 1])
        .filter(|&i| i + 1 == keys.len() || keys[i] <= keys[i + 1])
        .count();

    let mut best = grid[best_idx].clone();
    let mut lo = grid[best_idx.saturating_sub(1)].beta;
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)].beta;
    let mut refinement = Vec::new();
    for _ in 0..REFINE_ROUNDS {
        let inner = log_grid(lo, hi, REFINE_POINTS + 2);
        let evals: Vec<BetaEvaluation> =
            inner[1..=REFINE_POINTS].par_iter().map(|&b| evaluate(&base, b, q, cfg.t_max)).collect();
        for e in &evals {
            if key(e) < key(&best) {
                best = e.clone();
            }
        }
        let mut betas: Vec<f64> = vec![lo, hi, best.beta];
        betas.extend(evals.iter().map(|e| e.beta));
        refinement.extend(evals);
        betas.sort_by(f64::total_cmp);
        betas.dedup();
        let i = betas.iter().position(|&b| b == best.beta).expect("incumbent is listed");
        lo = betas[i.saturating_sub(1)];
        hi = betas[(i + 1).min(betas.len() - 1)];
    }

    let goodputs: Vec<f64> = grid.iter().map(|e| e.goodput.unwrap_or(0.0)).collect();
    let plateau = goodputs.iter().copied().fold(0.0, f64::max);
    let threshold = PLATEAU_FRACTION * plateau;
    let edge_idx = goodputs.iter().rposition(|&g| g >= threshold).expect("plateau point exists");
    let collapse_observed = edge_idx + 1 < grid.len();
    let mut collapse_edge = grid[edge_idx].beta;
    if collapse_observed {
        let (mut a, mut b) = (collapse_edge.ln(), grid[edge_idx + 1].beta.ln());
        for _ in 0..EDGE_BISECTIONS {
            let mid = 0.5 * (a + b);
            if goodput_at(&base, mid.exp()).is_some_and(|g| g >= threshold) {
                a = mid;
            } else {
                b = mid;
            }
        }
        collapse_edge = a.exp();
    }

    let row = analyze_point(&base.with_beta(best.beta), cfg)?.row;
    Ok(Optimization {
        quantile: q,
        beta_star: best.beta,
        objective: best.objective.expect("incumbent is finite"),
        row,
        collapse_edge,
        collapse_observed,
        plateau_goodput: plateau,
        stability_margin: (collapse_edge - best.beta) / collapse_edge,
        multi_minima: local_minima > 1,
        grid,
        refinement,
    })
}

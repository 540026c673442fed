//! Single analyses, sweeps, simulations and cross-validation runs.

use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::Analysis;
use crate::error::{Error, Result};
use crate::paoii::{paoii_quantile, PaoiiPmf};
use crate::params::SystemParams;
use crate::sim::{self, dkw_check, Ecdf, SampleSet, SimConfig};

use super::config::ExperimentConfig;
use super::output::{Engine, Percentile, PointFailure, ResultRow, RowOutcome, ValidationReport};

/// Analytic row plus the PMF it was read from.
#[derive(Debug, Clone)]
pub struct AnalyticPoint {
    pub row: ResultRow,
    pub pmf: PaoiiPmf,
}

/// Simulated row plus the samples it was read from.
#[derive(Debug, Clone)]
pub struct SimulatedPoint {
    pub row: ResultRow,
    pub samples: SampleSet,
    pub ecdf: Ecdf,
}

fn elapsed_ms(start: Instant, cfg: &ExperimentConfig) -> Option<f64> {
    cfg.timing.then(|| start.elapsed().as_secs_f64() * 1e3)
}

/// Solves the chain and the PAoII distribution at `params`.
pub fn analyze_point(params: &SystemParams, cfg: &ExperimentConfig) -> Result<AnalyticPoint> {
    let start = Instant::now();
    let analysis = Analysis::solve(params)?;
    let pmf = analysis.paoii_pmf(cfg.t_max, cfg.tail_tol)?;
    if pmf.truncated {
        log::warn!(
            "beta={} lambda={}: PMF tail {:.3e} still above {:e} after {} slots",
            params.beta,
            params.lambda,
            pmf.tail,
            cfg.tail_tol,
            cfg.t_max
        );
    }
    let percentiles = cfg
        .percentiles
        .iter()
        .map(|&q| {
            let slots = paoii_quantile(&pmf, q).ok().map(|t| t as u64);
            Percentile { q, slots, seconds: slots.map(|t| t as f64 * params.slot_duration) }
        })
        .collect();
    let row = ResultRow {
        params: *params,
        goodput: analysis.metrics.goodput,
        power_w: analysis.metrics.power,
        percentiles,
        tail_bound: Some(pmf.tail),
        engine: Engine::Analytic,
        wall_ms: elapsed_ms(start, cfg),
    };
    Ok(AnalyticPoint { row, pmf })
}

pub fn run_analyze(cfg: &ExperimentConfig) -> Result<AnalyticPoint> {
    analyze_point(&cfg.params(), cfg)
}

/// Analyzes every grid point in parallel; rows follow grid order and a failed
/// point does not stop the others.
pub fn run_sweep(cfg: &ExperimentConfig) -> Vec<RowOutcome> {
    cfg.grid()
        .par_iter()
        .map(|p| {
            analyze_point(p, cfg).map(|a| a.row).map_err(|e| PointFailure {
                params: *p,
                engine: Engine::Analytic,
                error: e.to_string(),
            })
        })
        .collect()
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulatedPoint> {
    let params = cfg.params();
    params.validate()?;
    let start = Instant::now();
    let sim_cfg = SimConfig { slots_per_replication: cfg.horizon, warmup: cfg.warmup };
    let samples = sim::run_for_samples(&params, cfg.seed, cfg.samples, &sim_cfg, cfg.max_replications);
    if samples.paoii_samples.len() < cfg.samples {
        log::warn!(
            "collected {} of {} samples within {} replications",
            samples.paoii_samples.len(),
            cfg.samples,
            cfg.max_replications
        );
    }
    let ecdf = Ecdf::from_samples(&samples.paoii_samples)?;
    let percentiles = cfg
        .percentiles
        .iter()
        .map(|&q| {
            let t = ecdf.quantile(q) as u64;
            Percentile { q, slots: Some(t), seconds: Some(t as f64 * params.slot_duration) }
        })
        .collect();
    let row = ResultRow {
        params,
        goodput: samples.goodput(),
        power_w: samples.power(&params),
        percentiles,
        tail_bound: None,
        engine: Engine::Simulated,
        wall_ms: elapsed_ms(start, cfg),
    };
    Ok(SimulatedPoint { row, samples, ecdf })
}

/// Runs both engines and applies the DKW test to the PAoII CDFs.
pub fn run_validate(cfg: &ExperimentConfig) -> Result<(ValidationReport, AnalyticPoint, SimulatedPoint)> {
    let analytic = run_analyze(cfg)?;
    let simulated = run_simulate(cfg)?;
    let report = validation_report(&analytic, &simulated, cfg.delta)?;
    Ok((report, analytic, simulated))
}

pub fn validation_report(analytic: &AnalyticPoint, simulated: &SimulatedPoint, delta: f64) -> Result<ValidationReport> {
    if simulated.ecdf.is_empty() {
        return Err(Error::EmptySamples);
    }
    let dkw = dkw_check(&simulated.ecdf, &analytic.pmf.cumulative(), simulated.ecdf.len(), delta);
    let params = simulated.row.params;
    let z = |sim: f64, exact: f64, se: f64| if se > 0.0 { (sim - exact) / se } else { 0.0 };
    let goodput_z = z(simulated.row.goodput, analytic.row.goodput, simulated.samples.standard_error(|t| t.goodput()));
    let power_z =
        z(simulated.row.power_w, analytic.row.power_w, simulated.samples.standard_error(|t| t.power(&params)));
    Ok(ValidationReport {
        analytic: analytic.row.clone(),
        simulated: simulated.row.clone(),
        dkw,
        goodput_z,
        power_z,
        pass: dkw.pass,
    })
}

//! Result rows and their CSV and JSON encodings.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::sim::DkwReport;

use super::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    Simulated,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Simulated => "simulated",
        }
    }
}

/// One PAoII percentile. `slots` is `None` when the level is not reached
/// within the computed horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentile {
    pub q: f64,
    pub slots: Option<u64>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub params: SystemParams,
    /// Novel packets per slot.
    pub goodput: f64,
    /// Average power per node, watts.
    pub power_w: f64,
    pub percentiles: Vec<Percentile>,
    /// Probability mass beyond the analytic horizon.
    pub tail_bound: Option<f64>,
    pub engine: Engine,
    pub wall_ms: Option<f64>,
}

impl ResultRow {
    pub fn percentile(&self, q: f64) -> Option<u64> {
        self.percentiles.iter().find(|p| p.q == q).and_then(|p| p.slots)
    }

    /// Reached percentiles never decrease in `q`, and unreached ones only
    /// follow reached ones.
    pub fn percentiles_monotone(&self) -> bool {
        let mut last = 0u64;
        let mut gap = false;
        for p in &self.percentiles {
            match p.slots {
                Some(_) if gap => return false,
                Some(s) if s < last => return false,
                Some(s) => last = s,
                None => gap = true,
            }
        }
        true
    }
}

/// A grid point whose evaluation failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub params: SystemParams,
    pub engine: Engine,
    pub error: String,
}

pub type RowOutcome = std::result::Result<ResultRow, PointFailure>;

/// Column label fragment for a percentile level: 0.95 → "p95", 0.999 → "p99.9".
pub fn percentile_label(q: f64) -> String {
    let pct = (q * 100.0 * 1e6).round() / 1e6;
    format!("p{pct}")
}

fn label_level(label: &str) -> Option<f64> {
    label.strip_prefix('p')?.parse::<f64>().ok().map(|v| v / 100.0)
}

const PARAM_COLUMNS: [&str; 9] =
    ["n_sensors", "lambda", "load", "alpha", "beta", "eps", "psi", "energy_per_slot_J", "slot_duration_s"];

/// Header for a given percentile list.
pub fn csv_header(percentiles: &[f64]) -> Vec<String> {
    let mut h: Vec<String> = PARAM_COLUMNS.iter().map(|s| s.to_string()).collect();
    h.push("goodput_pkt_per_slot".into());
    h.push("power_W".into());
    for &q in percentiles {
        h.push(format!("paoii_{}_slots", percentile_label(q)));
    }
    for &q in percentiles {
        h.push(format!("paoii_{}_s", percentile_label(q)));
    }
    h.extend(["tail_bound", "engine", "wall_ms", "status"].map(String::from));
    h
}

fn param_cells(p: &SystemParams) -> Vec<String> {
    vec![
        p.n_sensors.to_string(),
        p.lambda.to_string(),
        p.load().to_string(),
        p.alpha.to_string(),
        p.beta.to_string(),
        p.eps.to_string(),
        p.psi.to_string(),
        p.energy_per_slot.to_string(),
        p.slot_duration.to_string(),
    ]
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record(outcome: &RowOutcome, percentiles: &[f64]) -> Vec<String> {
    match outcome {
        Ok(row) => {
            let mut r = param_cells(&row.params);
            r.push(row.goodput.to_string());
            r.push(row.power_w.to_string());
            let lookup = |q: f64| row.percentiles.iter().find(|p| p.q == q);
            for &q in percentiles {
                r.push(opt(lookup(q).and_then(|p| p.slots)));
            }
            for &q in percentiles {
                r.push(opt(lookup(q).and_then(|p| p.seconds)));
            }
            r.push(opt(row.tail_bound));
            r.push(row.engine.as_str().into());
            r.push(opt(row.wall_ms));
            r.push("ok".into());
            r
        }
        Err(f) => {
            let mut r = param_cells(&f.params);
            r.extend(std::iter::repeat_n(String::new(), 2 + 2 * percentiles.len() + 1));
            r.push(f.engine.as_str().into());
            r.push(String::new());
            r.push(f.error.clone());
            r
        }
    }
}

/// Writes rows with a header naming every column and its unit.
pub fn write_csv<W: Write>(out: W, rows: &[RowOutcome], percentiles: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(percentiles))?;
    for row in rows {
        w.write_record(record(row, percentiles))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses CSV produced by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<RowOutcome>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Config(format!("CSV is missing column `{name}`")))
    };
    let levels: Vec<(f64, usize, usize)> = header
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            let label = h.strip_prefix("paoii_")?.strip_suffix("_slots")?;
            let seconds = header.iter().position(|x| *x == format!("paoii_{label}_s"))?;
            Some((label_level(label)?, i, seconds))
        })
        .collect();
    let idx: Vec<usize> = PARAM_COLUMNS
        .iter()
        .chain(&["goodput_pkt_per_slot", "power_W", "tail_bound", "engine", "wall_ms", "status"])
        .map(|c| col(c))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| -> Result<f64> {
            cell(i).parse().map_err(|_| Error::Config(format!("bad number `{}` in column `{}`", cell(i), header[i])))
        };
        let opt_num = |i: usize| -> Result<Option<f64>> {
            if cell(i).is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let params = SystemParams {
            n_sensors: num(idx[0])? as usize,
            lambda: num(idx[1])?,
            alpha: num(idx[3])?,
            beta: num(idx[4])?,
            eps: num(idx[5])?,
            psi: num(idx[6])?,
            energy_per_slot: num(idx[7])?,
            slot_duration: num(idx[8])?,
        };
        let engine = match cell(idx[12]) {
            "analytic" => Engine::Analytic,
            "simulated" => Engine::Simulated,
            other => return Err(Error::Config(format!("unknown engine `{other}`"))),
        };
        let status = cell(idx[14]);
        if status != "ok" {
            rows.push(Err(PointFailure { params, engine, error: status.to_string() }));
            continue;
        }
        let percentiles = levels
            .iter()
            .map(|&(q, si, ti)| Ok(Percentile { q, slots: opt_num(si)?.map(|v| v as u64), seconds: opt_num(ti)? }))
            .collect::<Result<_>>()?;
        rows.push(Ok(ResultRow {
            params,
            goodput: num(idx[9])?,
            power_w: num(idx[10])?,
            percentiles,
            tail_bound: opt_num(idx[11])?,
            engine,
            wall_ms: opt_num(idx[13])?,
        }));
    }
    Ok(rows)
}

/// Best β found by the optimizer, plus the stability information around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEvaluation {
    pub beta: f64,
    /// Interpolated percentile in slots; `None` if not reached.
    pub objective: Option<f64>,
    pub goodput: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimization {
    pub quantile: f64,
    pub beta_star: f64,
    pub objective: f64,
    pub row: ResultRow,
    /// Largest β whose goodput is at least 90% of the plateau.
    pub collapse_edge: f64,
    /// False when goodput stays above 90% of the plateau up to `beta_max`.
    pub collapse_observed: bool,
    pub plateau_goodput: f64,
    /// `(collapse_edge − beta_star) / collapse_edge`.
    pub stability_margin: f64,
    /// More than one local minimum on the coarse grid.
    pub multi_minima: bool,
    /// Coarse grid evaluations, in β order.
    pub grid: Vec<BetaEvaluation>,
    /// Refinement evaluations, in evaluation order.
    pub refinement: Vec<BetaEvaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub analytic: ResultRow,
    pub simulated: ResultRow,
    pub dkw: DkwReport,
    /// `(G_sim − G_analytic) / SE`.
    pub goodput_z: f64,
    pub power_z: f64,
    pub pass: bool,
}

/// Full machine-readable result of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub command: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<PointFailure>,
    /// `pmf[t − 1] = P(θ = t)` of the analytic engine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<f64>>,
    /// `(t, F_L(t))` at every jump of the empirical CDF.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ecdf: Option<Vec<(usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimization: Option<Optimization>,
}

impl Envelope {
    pub fn new(command: &str, config: &ExperimentConfig, outcomes: Vec<RowOutcome>) -> Self {
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for o in outcomes {
            match o {
                Ok(r) => rows.push(r),
                Err(f) => failures.push(f),
            }
        }
        Self {
            command: command.to_string(),
            config: config.clone(),
            rows,
            failures,
            pmf: None,
            ecdf: None,
            validation: None,
            optimization: None,
        }
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row() -> ResultRow {
        ResultRow {
            params: SystemParams::default(),
            goodput: 0.1894123456789,
            power_w: 2.43e-4,
            percentiles: [(0.5, 9), (0.9, 31), (0.95, 47), (0.99, 101)]
                .iter()
                .map(|&(q, s)| Percentile { q, slots: Some(s), seconds: Some(s as f64 * 0.05) })
                .collect(),
            tail_bound: Some(9.7e-10),
            engine: Engine::Analytic,
            wall_ms: None,
        }
    }

    #[test]
    fn labels() {
        assert_eq!(percentile_label(0.95), "p95");
        assert_eq!(percentile_label(0.5), "p50");
        assert_eq!(percentile_label(0.999), "p99.9");
        assert_eq!(label_level("p99"), Some(0.99));
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let mut failed = PointFailure {
            params: SystemParams::default(),
            engine: Engine::Analytic,
            error: "stationary solver did not converge".into(),
        };
        failed.params.beta = 0.7;
        let rows = vec![Ok(row()), Err(failed)];
        let qs = [0.5, 0.9, 0.95, 0.99];
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows, &qs).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n_sensors,lambda,load,alpha,beta,eps,psi,energy_per_slot_J,slot_duration_s,goodput_pkt_per_slot,power_W,paoii_p50_slots"));
    }

    #[test]
    fn monotonicity_check() {
        let mut r = row();
        assert!(r.percentiles_monotone());
        r.percentiles[3].slots = None;
        assert!(r.percentiles_monotone());
        r.percentiles[1].slots = Some(5);
        assert!(!r.percentiles_monotone());
    }

    #[test]
    fn json_round_trip() {
        let env = Envelope::new("analyze", &ExperimentConfig::default(), vec![Ok(row())]);
        let mut buf = Vec::new();
        env.write_json(&mut buf).unwrap();
        let back: Envelope = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, env);
    }
}

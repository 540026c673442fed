use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use paoii_core::harness::{
    load_config, optimize_beta, run_analyze, run_simulate, run_sweep, run_validate, write_csv, Envelope,
    ExperimentConfig, OutputFormat, RowOutcome, SweepAxis,
};
use paoii_core::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

/// Peak age of incorrect information in reactive slotted ALOHA.
///
/// Settings are resolved in order: built-in defaults, then the --config
/// file, then command-line flags.
#[derive(Parser)]
#[command(name = "paoii", version)]
struct Cli {
    /// Worker threads (default: number of logical cores).
    #[arg(long, env = "PAOII_WORKERS", global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact analysis of one configuration.
    Analyze(Args),
    /// Exact analysis over the Cartesian product of --sweep axes.
    Sweep(Args),
    /// Monte Carlo simulation of one configuration.
    Simulate(Args),
    /// Simulation against analysis with a DKW check on the PAoII CDF.
    Validate(Args),
    /// Choose β minimizing a PAoII percentile.
    Optimize(Args),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct Args {
    /// Flat JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    n_sensors: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Aggregate load N·λ; overrides --lambda.
    #[arg(long)]
    load: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    psi: Option<f64>,
    /// Joules per transmitting slot.
    #[arg(long)]
    energy_per_slot: Option<f64>,
    /// Seconds per slot.
    #[arg(long)]
    slot_duration: Option<f64>,

    /// Sweep axis param:min:max:points[:log]; repeat for a grid.
    #[arg(long = "sweep")]
    sweeps: Vec<SweepAxis>,
    /// Comma-separated percentile levels.
    #[arg(long, value_delimiter = ',')]
    percentiles: Option<Vec<f64>>,

    /// Target number of simulated PAoII samples.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Slots per simulated replication.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long)]
    max_replications: Option<u64>,
    /// DKW confidence parameter.
    #[arg(long)]
    delta: Option<f64>,

    /// Slot horizon of the analytic PMF.
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    tail_tol: Option<f64>,

    /// Percentile minimized by `optimize`.
    #[arg(long = "q")]
    quantile: Option<f64>,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    beta_points: Option<usize>,

    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Fill the wall_ms column.
    #[arg(long)]
    timing: bool,
}

macro_rules! overlay {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $(if let Some(v) = $args.$field { $cfg.$field = v; })*
    };
}

impl Args {
    fn resolve(self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        overlay!(
            cfg,
            self,
            n_sensors,
            lambda,
            alpha,
            beta,
            eps,
            psi,
            energy_per_slot,
            slot_duration,
            samples,
            seed,
            horizon,
            warmup,
            max_replications,
            delta,
            t_max,
            tail_tol,
            quantile,
            beta_min,
            beta_max,
            beta_points
        );
        if self.lambda.is_some() {
            cfg.load = None;
        }
        if self.load.is_some() {
            cfg.load = self.load;
        }
        if !self.sweeps.is_empty() {
            cfg.sweeps = self.sweeps;
        }
        if let Some(p) = self.percentiles {
            cfg.percentiles = p;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        if let Some(f) = self.format {
            cfg.format = match f {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
        }
        cfg.timing |= self.timing;
        cfg.validate()?;
        Ok(cfg)
    }
}

enum Failure {
    Error(Error),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn emit(
    cfg: &ExperimentConfig,
    rows: Vec<RowOutcome>,
    envelope: impl FnOnce(Envelope) -> Envelope,
    command: &str,
) -> Result<(), Error> {
    let out: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(out);
    match cfg.format {
        OutputFormat::Csv => write_csv(&mut out, &rows, &cfg.percentiles)?,
        OutputFormat::Json => envelope(Envelope::new(command, cfg, rows)).write_json(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Analyze(args) => {
            let cfg = args.resolve()?;
            let point = run_analyze(&cfg)?;
            let pmf = point.pmf.mass;
            emit(&cfg, vec![Ok(point.row)], |e| Envelope { pmf: Some(pmf), ..e }, "analyze")?;
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            if cfg.sweeps.is_empty() {
                return Err(Error::Config("sweep needs at least one --sweep axis".into()).into());
            }
            let rows = run_sweep(&cfg);
            let failed = rows.iter().filter(|r| r.is_err()).count();
            let total = rows.len();
            emit(&cfg, rows, |e| e, "sweep")?;
            if failed == total {
                return Err(Error::Domain("every sweep point failed".into()).into());
            }
            if failed > 0 {
                log::warn!("{failed} of {total} sweep points failed; see the status column");
            }
        }
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            let point = run_simulate(&cfg)?;
            let steps = point.ecdf.steps();
            emit(&cfg, vec![Ok(point.row)], |e| Envelope { ecdf: Some(steps), ..e }, "simulate")?;
        }
        Command::Validate(args) => {
            let cfg = args.resolve()?;
            let (report, analytic, simulated) = run_validate(&cfg)?;
            let d = report.dkw;
            eprintln!(
                "DKW sup-distance {:.3e} at t={} vs mu {:.3e} (L={}, delta={:e}): {}",
                d.distance,
                d.argmax,
                d.mu,
                d.samples,
                d.delta,
                if report.pass { "PASS" } else { "FAIL" }
            );
            eprintln!("goodput z {:+.2}, power z {:+.2}", report.goodput_z, report.power_z);
            let pass = report.pass;
            let rows = vec![Ok(analytic.row), Ok(simulated.row)];
            let pmf = analytic.pmf.mass;
            let steps = simulated.ecdf.steps();
            emit(
                &cfg,
                rows,
                |e| Envelope { pmf: Some(pmf), ecdf: Some(steps), validation: Some(report), ..e },
                "validate",
            )?;
            if !pass {
                return Err(Failure::Validation);
            }
        }
        Command::Optimize(args) => {
            let cfg = args.resolve()?;
            let opt = optimize_beta(&cfg, cfg.quantile)?;
            eprintln!(
                "beta* {:.6} (p{} {:.3} slots); collapse edge {:.6}{}; margin {:.3}{}",
                opt.beta_star,
                cfg.quantile * 100.0,
                opt.objective,
                opt.collapse_edge,
                if opt.collapse_observed { "" } else { " (no collapse in range)" },
                opt.stability_margin,
                if opt.multi_minima { "; several local minima" } else { "" }
            );
            let row = opt.row.clone();
            emit(&cfg, vec![Ok(row)], |e| Envelope { optimization: Some(opt), ..e }, "optimize")?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers.filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(EXIT_VALIDATION),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            let config = e.is_config() || matches!(e, Error::Io(_));
            ExitCode::from(if config { EXIT_CONFIG } else { EXIT_NUMERIC })
        }
    }
}

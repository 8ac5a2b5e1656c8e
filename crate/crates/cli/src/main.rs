use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use thermoprep::experiments::{self, PhaseSpec, ScalingSpec, SweepSpec, VerifySpec, WorkdistSpec};
use thermoprep::io::{self, CsvTable};
use thermoprep::pipeline::{self, Backend, ChainConfig, RunConfig, SystemSpec};
use thermoprep::{Error, Result};

#[derive(Parser)]
#[command(name = "thermoprep", version, about = "Thermal-state preparation from work statistics, simulated exactly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// worker threads for sweeps (0 = one per core)
    #[arg(long, env = "THERMOPREP_WORKERS", default_value_t = 0)]
    workers: usize,
    /// seed for randomly drawn unitaries
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Lcu,
    Qsp,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Lcu => Backend::Lcu,
            BackendArg::Qsp => Backend::Qsp,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Largest work cutoff over an eps or drive-time grid (CSV)
    SweepCutoff(Common),
    /// Binned work distributions with cutoff markers (CSV)
    Workdist(Common),
    /// Largest work cutoff against system size (CSV)
    Scaling(Common),
    /// Full preparation run, or a chain of runs (JSON)
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// write the prepared density matrix as CSV
        #[arg(long)]
        tau_out: Option<PathBuf>,
    },
    /// QSP phase sets for a series (CSV; summary JSON on stdout)
    QspPhases(Common),
    /// Jarzynski and Crooks residuals (JSON)
    Verify(Common),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::InvalidArgument(_)
        | Error::DimensionMismatch { .. }
        | Error::NotHermitian { .. }
        | Error::NotUnitary { .. } => 2,
        Error::Certification(_) => 3,
        Error::SolverNonConvergence { .. } => 4,
        Error::NoSignal | Error::Io(_) => 1,
    }
}

fn read_config(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_or<T: DeserializeOwned>(config: &Option<PathBuf>, default: impl FnOnce() -> T) -> Result<T> {
    match config {
        Some(p) => parse(p, &read_config(p)?),
        None => Ok(default()),
    }
}

fn print_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

fn emit_csv(table: &CsvTable, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => table.write(p),
        None => Ok(std::io::stdout().write_all(&table.to_bytes()?)?),
    }
}

fn emit_json<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => io::write_json(p, value),
        None => print_stdout(&serde_json::to_string_pretty(value)?),
    }
}

fn default_sweep() -> SweepSpec {
    SweepSpec::eps_sweep(vec![0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0])
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SweepCutoff(c) => {
            let spec: SweepSpec = load_or(&c.config, default_sweep)?;
            let rows = experiments::with_workers(c.workers, || experiments::sweep_cutoff(&spec))??;
            emit_csv(&experiments::cutoff_table(&rows), &c.out)
        }
        Command::Workdist(c) => {
            let mut spec: WorkdistSpec = load_or(&c.config, || WorkdistSpec::new(6))?;
            if let Some(s) = c.seed {
                spec.seed = s;
            }
            let series = experiments::with_workers(c.workers, || experiments::workdist(&spec))??;
            emit_csv(&experiments::workdist_table(&series), &c.out)
        }
        Command::Scaling(c) => {
            let spec: ScalingSpec = load_or(&c.config, || ScalingSpec::up_to(8))?;
            let rows = experiments::with_workers(c.workers, || experiments::scaling(&spec))??;
            emit_csv(&experiments::scaling_table(&rows), &c.out)
        }
        Command::Run { common: c, backend, tau_out } => {
            let path = c
                .config
                .as_ref()
                .ok_or_else(|| Error::Config("run needs --config".into()))?;
            let text = read_config(path)?;
            let value: serde_json::Value = parse(path, &text)?;
            let adjust = |cfg: &mut RunConfig| {
                if let Some(b) = backend {
                    cfg.backend = b.into();
                }
                if let Some(s) = c.seed {
                    cfg.seed = s;
                }
            };
            if value.get("stages").is_some() {
                let mut chain: ChainConfig = parse(path, &text)?;
                chain.stages.iter_mut().for_each(adjust);
                for s in &chain.stages {
                    s.validate()?;
                }
                let res = pipeline::run_chain(&chain)?;
                if let (Some(p), Some(last)) = (&tau_out, res.stages.last()) {
                    io::density_matrix_table(&last.tau1).write(p)?;
                }
                emit_json(&res, &c.out)
            } else {
                let mut cfg: RunConfig = parse(path, &text)?;
                adjust(&mut cfg);
                cfg.validate()?;
                let res = pipeline::run_tspp(&cfg)?;
                if let Some(p) = &tau_out {
                    io::density_matrix_table(&res.tau1).write(p)?;
                }
                emit_json(&res, &c.out)
            }
        }
        Command::QspPhases(c) => {
            let spec: PhaseSpec = load_or(&c.config, || PhaseSpec {
                beta: 1.0,
                w_max: 50.0,
                w_l: -1.0,
                eps: 0.01,
            })?;
            let (set, report) = experiments::qsp_phases(&spec)?;
            emit_csv(&io::phases_table(&set), &c.out)?;
            let summary = serde_json::to_string_pretty(&report)?;
            if c.out.is_some() {
                print_stdout(&summary)
            } else {
                eprintln!("{summary}");
                Ok(())
            }
        }
        Command::Verify(c) => {
            let mut spec: VerifySpec = load_or(&c.config, || VerifySpec::new(SystemSpec::tfim(4), 1.0))?;
            if let Some(s) = c.seed {
                spec.seed = s;
            }
            let rows = experiments::with_workers(c.workers, || experiments::verify(&spec))??;
            emit_json(&rows, &c.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // reader went away (e.g. `| head`)
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

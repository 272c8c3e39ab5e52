//! Command-line front end: config ingestion, presets, dispatch and output.
//!
//! Exit codes: 0 on success, 1 for configuration or usage problems, 2 when a
//! solver fails. Failures also print a one-line JSON record on stderr.

pub mod config;
pub mod output;
pub mod plot;
pub mod presets;
pub mod units;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::Error;
use crate::liouville::{coherence_eq4, evolve, steady_state, GeneratorMode, Liouvillian};
use crate::params::DensityMatrix;
use crate::rates::{mean_relative_speed, reduced_mass};
use crate::spectrum::spectrum_with_jobs;
use config::{parse_config, ConfigError, OutputFormat, RunConfig};
use output::{render_csv, render_json, Metadata, Table};
use plot::{emit_plot_script, PlotKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Rates,
    Evolve,
    Steady,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rates => "rates",
            Command::Evolve => "evolve",
            Command::Steady => "steady",
            Command::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Solver(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(_) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
            CliError::Io(_) => "io",
            CliError::Solver(_) => "solver",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        let line = match self {
            CliError::Config(e) => e.line,
            _ => None,
        };
        json!({ "error": { "kind": self.kind(), "exit_code": self.exit_code(), "line": line, "message": self.to_string() } })
            .to_string()
    }
}

/// Per-invocation settings that are not part of the physical configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads for the spectrum; `None` uses every core.
    pub jobs: Option<usize>,
    /// Stamp outputs with time 0 so repeated runs are byte-identical.
    pub fixed_clock: bool,
}

/// Result of a command before it is written anywhere.
#[derive(Debug, Clone)]
pub struct Report {
    pub metadata: Metadata,
    pub table: Table,
}

impl Report {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => render_csv(&self.metadata, &self.table),
            OutputFormat::Json => render_json(&self.metadata, &self.table),
        }
    }
}

fn rho_columns() -> Vec<String> {
    let mut columns = Vec::with_capacity(32);
    for i in 1..=4 {
        for j in 1..=4 {
            columns.push(format!("re_rho{i}{j}"));
            columns.push(format!("im_rho{i}{j}"));
        }
    }
    columns
}

fn rho_values(rho: &DensityMatrix) -> Vec<f64> {
    let mut values = Vec::with_capacity(32);
    for i in 0..4 {
        for j in 0..4 {
            values.push(rho[(i, j)].re);
            values.push(rho[(i, j)].im);
        }
    }
    values
}

/// Executes `command` and returns its table and metadata.
pub fn execute(config: &RunConfig, command: Command, options: RunOptions) -> Result<Report, CliError> {
    let params = config.system.validate()?;
    let mut warnings = config.warnings();
    let mut notes = Vec::new();
    let table = match command {
        Command::Rates => {
            let mut columns = vec!["w12_radps", "r34_radps", "r43_radps", "u_mps"];
            let mut row = vec![params.w12, params.r34, params.r43, params.u];
            if let Some(b) = &config.buffer {
                columns.push("v_av_mps");
                row.push(mean_relative_speed(b.temperature, reduced_mass(b.atom_mass, b.gas.molecule_mass)));
                notes.push(("buffer_number_density_m3".to_string(), b.gas.number_density));
            }
            notes.push(("w12_over_gamma3".to_string(), params.w12 / params.gamma3));
            Table { columns: columns.into_iter().map(String::from).collect(), rows: vec![row] }
        }
        Command::Evolve => {
            let settings =
                config.evolve.ok_or_else(|| ConfigError { line: None, message: "evolve needs an [evolve] section with t_end".into() })?;
            let liouvillian = Liouvillian::build(&params, config.mode);
            let trajectory =
                evolve(&DensityMatrix::thermal_ground(), &liouvillian, params.gamma3, settings.t_end, &settings.controls())?;
            let mut columns = vec!["t_s".to_string()];
            columns.extend(rho_columns());
            columns.push("probe_coherence_im".into());
            columns.push("probe_inversion".into());
            let rows = trajectory
                .times
                .iter()
                .zip(&trajectory.states)
                .map(|(t, rho)| {
                    let mut row = vec![*t];
                    row.extend(rho_values(rho));
                    row.push(rho.rho13().im);
                    row.push(rho.probe_inversion());
                    row
                })
                .collect();
            notes.push(("steps".into(), trajectory.steps as f64));
            notes.push(("final_residual_radps".into(), trajectory.final_residual));
            Table { columns, rows }
        }
        Command::Steady => {
            let rho = steady_state(&Liouvillian::build(&params, config.mode))?;
            let closed = coherence_eq4(&rho, &params);
            let difference = (closed - rho.rho13()).norm();
            notes.push(("rho13_re".into(), rho.rho13().re));
            notes.push(("rho13_im".into(), rho.rho13().im));
            notes.push(("closed_form_rho13_re".into(), closed.re));
            notes.push(("closed_form_rho13_im".into(), closed.im));
            notes.push(("closed_form_residual".into(), difference));
            let mut columns = vec!["row".to_string()];
            for j in 1..=4 {
                columns.push(format!("re_col{j}"));
                columns.push(format!("im_col{j}"));
            }
            let rows = (0..4)
                .map(|i| {
                    let mut row = vec![(i + 1) as f64];
                    for j in 0..4 {
                        row.push(rho[(i, j)].re);
                        row.push(rho[(i, j)].im);
                    }
                    row
                })
                .collect();
            Table { columns, rows }
        }
        Command::Spectrum => {
            let settings = config.spectrum.as_ref().ok_or_else(|| ConfigError {
                line: None,
                message: "spectrum needs a [spectrum] section (number_density, path_length, detuning grid)".into(),
            })?;
            let sp = settings.params();
            if config.mode != GeneratorMode::TraceConserving {
                return Err(Error::LiteralSteadyState.into());
            }
            let result = spectrum_with_jobs(&params, &sp, options.jobs)?;
            warnings.extend(result.warnings.iter().cloned());
            notes.push(("max_gain".into(), result.max_gain()));
            let rows = (0..result.detunings.len())
                .map(|i| vec![result.detunings[i], result.gain[i], result.transmission[i]])
                .collect();
            Table { columns: vec!["detuning_radps".into(), "gain".into(), "transmission".into()], rows }
        }
    };
    let generated_unix_s = if options.fixed_clock {
        0
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    };
    let metadata = Metadata { command: command.name().to_string(), generated_unix_s, warnings, notes, config: config.clone() };
    Ok(Report { metadata, table })
}

/// Runs `command` and writes the result to the configured path, or to
/// `stdout` when there is none. Returns the path written, if any.
pub fn run(config: &RunConfig, command: Command, options: RunOptions, stdout: &mut dyn Write) -> Result<Option<PathBuf>, CliError> {
    let plot_kind = match (config.output.plot, command) {
        (false, _) => None,
        (true, Command::Evolve) => Some(PlotKind::Trajectory),
        (true, Command::Spectrum) => Some(PlotKind::Spectrum),
        (true, other) => return Err(CliError::Usage(format!("plot scripts exist for evolve and spectrum, not {}", other.name()))),
    };
    if plot_kind.is_some() && config.output.path.is_none() {
        return Err(CliError::Usage("a plot script needs an output file (--out or output.path)".into()));
    }
    let report = execute(config, command, options)?;
    let text = report.render(config.output.format);
    match &config.output.path {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            if let Some(kind) = plot_kind {
                emit_plot_script(path, kind).map_err(CliError::Io)?;
            }
            Ok(Some(path.clone()))
        }
        None => {
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("cannot write to stdout: {e}")))?;
            Ok(None)
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "owi-sim", version, about = "Four-level Rb pump-probe simulator: rates, dynamics, steady states and Doppler-averaged spectra")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Print W12, r34, r43, u and v_av resolved from the config.
    Rates(RunArgs),
    /// Integrate the master equation from diag(1/2, 1/2, 0, 0).
    Evolve(RunArgs),
    /// Solve for the stationary density matrix and check the closed-form ρ13.
    Steady(RunArgs),
    /// Doppler-averaged gain and transmission over the detuning grid.
    Spectrum(RunArgs),
    /// Write a matplotlib script for an existing result file.
    PlotScript {
        /// trajectory or spectrum
        #[arg(long)]
        kind: String,
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Literal,
    Conserving,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads for the spectrum grid.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Also write a plotting script next to the output file.
    #[arg(long)]
    plot: bool,
    /// Record the generation time as 0 for byte-reproducible output.
    #[arg(long)]
    fixed_clock: bool,
}

fn load(args: &RunArgs) -> Result<(RunConfig, RunOptions), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", args.config.display())))?;
    let mut config = parse_config(&text)?;
    if let Some(out) = &args.out {
        config.output.path = Some(out.clone());
    }
    if let Some(format) = args.format {
        config.output.format = match format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        };
    }
    if let Some(mode) = args.mode {
        config.mode = match mode {
            ModeArg::Literal => GeneratorMode::PaperLiteral,
            ModeArg::Conserving => GeneratorMode::TraceConserving,
        };
    }
    config.output.plot |= args.plot;
    if args.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    Ok((config, RunOptions { jobs: args.jobs, fixed_clock: args.fixed_clock }))
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (args, command) = match cli.command {
        CliCommand::Rates(a) => (a, Command::Rates),
        CliCommand::Evolve(a) => (a, Command::Evolve),
        CliCommand::Steady(a) => (a, Command::Steady),
        CliCommand::Spectrum(a) => (a, Command::Spectrum),
        CliCommand::PlotScript { kind, input } => {
            let kind: PlotKind = kind.parse().map_err(CliError::Usage)?;
            let script = emit_plot_script(&input, kind).map_err(CliError::Io)?;
            let _ = writeln!(stderr, "wrote {}", script.display());
            return Ok(());
        }
    };
    let (config, options) = load(&args)?;
    for warning in config.warnings() {
        let _ = writeln!(stderr, "warning: {warning}");
    }
    if let Some(path) = run(&config, command, options, stdout)? {
        let _ = writeln!(stderr, "wrote {}", path.display());
    }
    Ok(())
}

/// Entry point shared by the binary and tests. Returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let _ = write!(stderr, "{e}");
            let record = CliError::Usage(e.kind().to_string());
            let _ = writeln!(stderr, "{}", record.record());
            return 1;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            let _ = writeln!(stderr, "{}", e.record());
            e.exit_code()
        }
    }
}

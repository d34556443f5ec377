mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

const DEFAULTS: &str = "Analysis defaults: epsilon = 0.1, gamma = 0.1, delta = 0.01.";

/// Simulate production-rule circuits with X semantics and find the fault
/// times that can corrupt monitored signals.
#[derive(Parser, Debug)]
#[command(name = "faultscope", version, after_help = DEFAULTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a netlist (exit 0 valid, 1 syntax error, 2 invalid).
    #[command(after_help = DEFAULTS)]
    Validate {
        #[arg(long)]
        circuit: PathBuf,
    },
    /// Run the fault-free execution.
    #[command(after_help = DEFAULTS)]
    Simulate(SimulateArgs),
    /// Inject one transient fault and report whether a monitored signal goes X.
    #[command(after_help = DEFAULTS)]
    Inject(InjectArgs),
    /// Compute sensitivity windows and P(fail).
    #[command(after_help = DEFAULTS)]
    Analyze(AnalyzeArgs),
    /// Write a generated pipeline netlist.
    #[command(after_help = DEFAULTS)]
    Generate(GenerateArgs),
    /// Analyze generated circuits over a parameter grid and write CSV.
    #[command(after_help = DEFAULTS)]
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct CircuitArgs {
    /// Netlist file.
    #[arg(long)]
    circuit: PathBuf,
    /// Input traces as `signal,time,value` CSV.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Length T of the execution prefix.
    #[arg(long, value_name = "T")]
    until: f64,
    /// X propagation delay.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: CircuitArgs,
    #[arg(long)]
    out_svg: Option<PathBuf>,
    /// Traces and change log as JSON.
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InjectArgs {
    #[command(flatten)]
    common: CircuitArgs,
    /// Fault as SIGNAL@TIME:WIDTH, e.g. c2@10:0.1.
    #[arg(long, value_name = "SIGNAL@TIME:WIDTH")]
    at: String,
    #[arg(long, default_value = "xpulse", value_parser = ["xpulse", "flip"])]
    kind: String,
    /// Comma-separated monitored signals; defaults to the netlist's monitor line.
    #[arg(long, value_delimiter = ',')]
    monitor: Vec<String>,
    /// Waveform of the faulty execution.
    #[arg(long)]
    out_svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CircuitArgs,
    /// Transient pulse width.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    /// Bisection resolution.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value = "xpulse", value_parser = ["xpulse", "flip"])]
    kind: String,
    /// Comma-separated monitored signals; defaults to the netlist's monitor line.
    #[arg(long, value_delimiter = ',')]
    monitor: Vec<String>,
    /// Inject faults at the monitored signals too.
    #[arg(long)]
    include_monitored: bool,
    /// Comma-separated injection set; overrides the default.
    #[arg(long, value_delimiter = ',')]
    inject: Vec<String>,
    /// Grid-scan every H time units instead of bisecting.
    #[arg(long, value_name = "H")]
    naive_step: Option<f64>,
    /// Also grid-scan regions that contradict the postfix shape.
    #[arg(long)]
    exhaustive: bool,
    /// Stop every probe at T instead of letting late faults settle.
    #[arg(long)]
    no_settle: bool,
    /// Per-signal weights as `signal,weight` lines.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Worker threads (0: one per core).
    #[arg(long, env = "FAULTSCOPE_JOBS", default_value_t = 0)]
    jobs: usize,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// linear [stages inv mce source sink], ring [stages tokens inv mce],
    /// or multibit [bits stages inv mce source sink].
    #[arg(value_parser = ["linear", "ring", "multibit"])]
    generator: String,
    /// Positional generator parameters; missing ones take defaults
    /// (linear 3 1 5 4 4, ring 3 1 1 5, multibit 1 3 1 5 4 4).
    params: Vec<f64>,
    /// Ring only: rotate the token pattern by this many stages.
    #[arg(long)]
    offset: Option<usize>,
    /// Linear only: initial source output.
    #[arg(long, value_parser = ["0", "1"])]
    source_init: Option<String>,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// TOML sweep spec; flags below override its analysis settings.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_parser = ["linear", "ring", "multibit"])]
    generator: Option<String>,
    /// Fixed generator parameter NAME=VALUE (repeatable).
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Swept parameter NAME=FROM:TO:STEP or NAME=V1,V2,... (up to two).
    #[arg(long = "sweep", value_name = "NAME=RANGE")]
    sweeps: Vec<String>,
    #[arg(long, value_name = "T")]
    until: Option<f64>,
    /// X propagation delay [default: 0.1]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Transient pulse width [default: 0.1]
    #[arg(long)]
    gamma: Option<f64>,
    /// Bisection resolution [default: 0.01]
    #[arg(long)]
    delta: Option<f64>,
    /// Worker threads (0: one per core).
    #[arg(long, env = "FAULTSCOPE_JOBS", default_value_t = 0)]
    jobs: usize,
    /// CSV output (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}

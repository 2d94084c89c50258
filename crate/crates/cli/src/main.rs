use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;

use config::ConfigError;

#[derive(Parser)]
#[command(name = "entromin", version, about = "Sparse recovery by entropy-function minimization")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// JSON configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "ENTROMIN_OUT", default_value = "entromin-out")]
    pub out: PathBuf,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). 1 is the reproducible reference mode.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Experiment size preset.
    #[arg(long, global = true, value_enum, default_value_t = Scale::Desk)]
    pub scale: Scale,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Scale {
    Desk,
    Full,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodKind {
    L1,
    Sef,
    Ref,
    Lp,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MethodArgs {
    /// Regularizer.
    #[arg(long, value_enum)]
    pub method: Option<MethodKind>,
    /// Exponent p of the probability map (SEF, REF) or of ‖x‖_p^p (Lp).
    #[arg(long)]
    pub p: Option<f64>,
    /// Rényi order α (REF).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fixed regularization weight λ.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Recover one signal, from a generated instance or from a measurement file.
    Solve(SolveArgs),
    /// Noiseless phase-transition grid.
    Ptc(PtcArgs),
    /// Noisy recovery SNR versus sampling ratio.
    Noisy(NoisyArgs),
    /// Wavelet-frame image recovery PSNR versus sampling ratio.
    Image(ImageArgs),
    /// Run the numerical self-checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    /// Operator manifest (JSON). Requires --input.
    #[arg(long, requires = "input")]
    pub operator: Option<PathBuf>,
    /// Measurements as a JSON array of numbers.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Signal length of a generated instance.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Measurements of a generated instance.
    #[arg(long, default_value_t = 100)]
    pub m: usize,
    /// Nonzeros of a generated instance.
    #[arg(long, default_value_t = 15)]
    pub s: usize,
    /// Noise scale of a generated instance.
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
}

#[derive(Args, Debug, Clone)]
pub struct PtcArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    /// Record wall-clock times (results are then no longer byte-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug, Clone)]
pub struct NoisyArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    /// Noise scale ν.
    #[arg(long, conflicts_with = "snr")]
    pub nu: Option<f64>,
    /// Target measurement SNR in dB (sets ν).
    #[arg(long)]
    pub snr: Option<f64>,
    /// Sampling ratios M/N.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug, Clone)]
pub struct ImageArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    /// Square 8-bit PGM (P5) image; defaults to a 64x64 synthetic phantom.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Sampling ratios M/N.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Option<Vec<f64>>,
    /// Noise scale ν on the [0, 1] intensity range.
    #[arg(long, conflicts_with = "snr")]
    pub nu: Option<f64>,
    /// Target measurement SNR in dB (sets ν).
    #[arg(long)]
    pub snr: Option<f64>,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug, Clone)]
pub struct SelftestArgs {
    /// Reduced sample counts.
    #[arg(long)]
    pub quick: bool,
    /// Corrupt the shrinkage threshold sign to exercise failure reporting.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<entromin::Error>() {
            return match e {
                entromin::Error::KappaNotConverged { .. }
                | entromin::Error::ZeroVector
                | entromin::Error::ZeroReference => 3,
                _ => 2,
            };
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => commands::solve(&cli.global, a),
        Command::Ptc(a) => commands::ptc(&cli.global, a),
        Command::Noisy(a) => commands::noisy(&cli.global, a),
        Command::Image(a) => commands::image(&cli.global, a),
        Command::Selftest(a) => commands::selftest(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use risgain_cli::{run, CliError, Command, Experiment, Preset, RawConfig};

#[derive(Parser)]
#[command(name = "risgain", version, about = "Beamforming-gain experiments for a two-timescale linear RIS")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact and approximate correlation coefficients c_n.
    Corr(Args),
    /// Gain, λ_max, bound and instantaneous benchmark versus N_r.
    GainVsN(Args),
    /// Gain and bound versus angular spread.
    GainVsSpread(Args),
    /// Average SNR (analytic and Monte Carlo) versus N_r.
    SnrVsN(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML config; unset keys keep the preset values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Preset: fig1, fig2 or fig3.
    #[arg(long)]
    defaults: Option<Preset>,
    /// Read angles in the config as degrees.
    #[arg(long)]
    degrees: bool,
}

fn execute(command: Command, args: Args) -> Result<(), CliError> {
    let raw = match &args.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    let exp = Experiment::resolve(command, args.defaults, &raw, args.seed, args.degrees)?;
    let csv = run(command, &exp)?;
    match &args.out {
        Some(p) => std::fs::write(p, csv).map_err(|source| CliError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Corr(a) => (Command::Corr, a),
        Cmd::GainVsN(a) => (Command::GainVsN, a),
        Cmd::GainVsSpread(a) => (Command::GainVsSpread, a),
        Cmd::SnrVsN(a) => (Command::SnrVsN, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("risgain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

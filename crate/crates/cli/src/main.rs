//! `qrh`: simulate, price, calibrate and export the quadratic rough Heston model.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod grid;

#[derive(Debug, Parser)]
#[command(name = "qrh", version, about = "Quadratic rough Heston engine for joint SPX/VIX smiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Monte Carlo sizes default to the `mc.*`
/// keys of the parameter file, then to the library defaults.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Model parameter file (`key = value`, optional `mc.*` keys).
    #[arg(long)]
    pub params: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub outer_paths: Option<usize>,
    #[arg(long)]
    pub inner_paths: Option<usize>,
    #[arg(long)]
    pub steps_per_year: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Class {
    Spx,
    Vix,
    All,
}

impl Class {
    pub fn spx(self) -> bool {
        self != Class::Vix
    }

    pub fn vix(self) -> bool {
        self != Class::Spx
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate paths and write `paths.csv` (path, t, S, Z, V).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Simulation horizon (`30d`, `4w`, `0.25y`).
        #[arg(long, default_value = "30d")]
        horizon: String,
        /// Also write the nested VIX of every path each this many steps (`vix.csv`).
        #[arg(long, default_value_t = 0)]
        vix_every: usize,
    },
    /// Price OTM options and VIX futures into `prices.csv`.
    Price {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "30d")]
        expiries: String,
        /// `start:stop:step` or a comma list.
        #[arg(long, default_value = "-0.2:0.2:0.05")]
        log_moneyness: String,
        #[arg(long, value_enum, default_value_t = Class::All)]
        class: Class,
    },
    /// Model implied-vol smiles, one CSV per class and expiry.
    Smile {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "2w,3w,4w,5w")]
        expiries: String,
        #[arg(long, default_value = "-0.2:0.05:0.025")]
        log_moneyness: String,
        #[arg(long, value_enum, default_value_t = Class::Spx)]
        class: Class,
    },
    /// VIX futures term structure into `vix_futures.csv`.
    VixFutures {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "1w,2w,3w,4w,6w,8w")]
        expiries: String,
    },
    /// Synthetic smile set from the model itself (`smiles.csv`).
    Synth {
        #[command(flatten)]
        common: Common,
        /// SPX expiries.
        #[arg(long, default_value = "2w,3w,4w,5w")]
        expiries: String,
        /// SPX log-moneyness grid.
        #[arg(long, default_value = "-0.2:0.05:0.025")]
        log_moneyness: String,
        #[arg(long, default_value = "4w")]
        vix_expiries: String,
        #[arg(long, default_value = "-0.2:0.6:0.1")]
        vix_log_moneyness: String,
    },
    /// Fit the model to a smile set, starting from `--params`.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Smile set CSV.
        #[arg(long)]
        data: PathBuf,
        /// Grid half-width relative to each starting value.
        #[arg(long, default_value_t = 0.1)]
        grid_width: f64,
        /// Grid points per axis.
        #[arg(long, default_value_t = 5)]
        grid_points: usize,
        /// Coordinate rounds (0 searches the full Cartesian grid).
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        /// Objective evaluations of the simplex refinement (0 skips it).
        #[arg(long, default_value_t = 60)]
        refine_evals: usize,
    },
}

/// Failure with its exit status: 2 for configuration and input errors, 3 for
/// numerical failures.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(qrh::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn status(&self) -> u8 {
        use qrh::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(E::Config(_) | E::Parse { .. } | E::Io(_) | E::InvalidParameter { .. }) => 2,
            CliError::Lib(_) => 3,
        }
    }

    fn line(&self) -> String {
        let (module, kind, message) = match self {
            CliError::Usage(m) => ("cli", "usage", m.clone()),
            CliError::Lib(e) => (e.module(), e.kind(), e.to_string()),
        };
        let message = message.replace('\\', "\\\\").replace('"', "\\\"");
        format!("error module={module} kind={kind} message=\"{message}\"")
    }
}

impl From<qrh::Error> for CliError {
    fn from(e: qrh::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

fn workers() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QRH_WORKERS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::usage(format!("QRH_WORKERS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot start {n} workers: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    workers()?;
    match cli.command {
        Command::Simulate {
            common,
            horizon,
            vix_every,
        } => commands::simulate(&common, &horizon, vix_every),
        Command::Price {
            common,
            expiries,
            log_moneyness,
            class,
        } => commands::price(&common, &expiries, &log_moneyness, class),
        Command::Smile {
            common,
            expiries,
            log_moneyness,
            class,
        } => commands::smile(&common, &expiries, &log_moneyness, class),
        Command::VixFutures { common, expiries } => commands::vix_futures(&common, &expiries),
        Command::Synth {
            common,
            expiries,
            log_moneyness,
            vix_expiries,
            vix_log_moneyness,
        } => commands::synth(&common, &expiries, &log_moneyness, &vix_expiries, &vix_log_moneyness),
        Command::Calibrate {
            common,
            data,
            grid_width,
            grid_points,
            rounds,
            refine_evals,
        } => commands::calibrate(
            &common,
            &data,
            commands::SearchArgs {
                grid_width,
                grid_points,
                rounds,
                refine_evals,
            },
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.status())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_statuses() {
        assert_eq!(CliError::usage("x").status(), 2);
        assert_eq!(CliError::Lib(qrh::Error::Config("x".into())).status(), 2);
        let numerical = CliError::Lib(qrh::Error::Degenerate("flat".into()));
        assert_eq!(numerical.status(), 3);
        assert_eq!(numerical.line(), "error module=simulate kind=degenerate message=\"degenerate input: flat\"");
    }

    #[test]
    fn quotes_are_escaped() {
        let e = CliError::usage("say \"hi\"");
        assert_eq!(e.line(), "error module=cli kind=usage message=\"say \\\"hi\\\"\"");
    }
}

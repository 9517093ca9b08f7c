mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coinoracle::oracle::EncodingMode;

/// Biased coins as oracles: estimate biases, extract their binary
/// expansions, and run oracle machines against coin-backed oracles.
///
/// Results are JSON on stdout (or --out); summaries go to stderr.
#[derive(Parser, Debug)]
#[command(name = "coinoracle", version)]
pub struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Root seed. A random one is drawn and reported when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct CoinArgs {
    /// `exact:<a/b>`, `exact:set:<fixture>:<mode>`, `converging:<a/b>`,
    /// `mixture:<x@w>,...` or `mixture:uniform:<a>:<b>`.
    #[arg(long)]
    pub coin: Option<String>,

    /// Coin description in a .json or .toml file.
    #[arg(long)]
    pub coin_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate a coin's bias to within 2^-k with confidence 1 - 2^-j.
    Estimate {
        #[command(flatten)]
        coin: CoinArgs,
        #[arg(long)]
        j: u32,
        /// Accuracy exponent; with --sequence, the last element computed.
        #[arg(long)]
        k: u32,
        /// Produce the sequence p_1 .. p_k, all accurate together.
        #[arg(long)]
        sequence: bool,
        #[arg(long, default_value_t = coinoracle::estimator::DEFAULT_TOSS_BUDGET)]
        budget: u64,
    },
    /// Extract bits of a coin's bias.
    Extract {
        #[command(flatten)]
        coin: CoinArgs,
        #[arg(long)]
        j: u32,
        /// Extract only bit l.
        #[arg(long, conflicts_with = "bits")]
        l: Option<u64>,
        /// Stream the first N bits.
        #[arg(long, default_value_t = 8)]
        bits: u64,
        #[arg(long, default_value_t = coinoracle::bitextract::DEFAULT_EXTRACTION_BUDGET)]
        budget: u64,
    },
    /// Show the encoding of an oracle set as a bias.
    Encode {
        /// `evens`, `odds`, `primes`, `multiples:<d>` or `finite:<csv>`.
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = EncodingMode::Guarded)]
        mode: EncodingMode,
        #[arg(long, default_value_t = 64)]
        bits: u64,
    },
    /// Run an oracle machine on an input.
    RunMachine {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        set: String,
        #[arg(long)]
        input: u64,
        /// Answer queries from a coin instead of the set itself.
        #[arg(long, requires = "j")]
        coin_backed: bool,
        #[arg(long)]
        j: Option<u32>,
        #[arg(long, default_value_t = EncodingMode::Guarded)]
        mode: EncodingMode,
        #[arg(long, default_value_t = coinoracle::bitextract::DEFAULT_EXTRACTION_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = coinoracle::machines::DEFAULT_STEP_BUDGET)]
        steps: u64,
    },
    /// Run machine n of a catalog directory on input m with a coin-backed oracle.
    Universal {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        j: u32,
        #[arg(long, default_value = "evens")]
        set: String,
        #[arg(long, default_value_t = EncodingMode::Guarded)]
        mode: EncodingMode,
        #[arg(long, default_value_t = coinoracle::bitextract::DEFAULT_EXTRACTION_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = coinoracle::machines::DEFAULT_STEP_BUDGET)]
        steps: u64,
    },
    /// Run meta-trials of registered scenarios and test them against their bounds.
    Verify {
        #[arg(long, required_unless_present_any = ["all", "list"])]
        scenario: Option<String>,
        /// Every registered scenario.
        #[arg(long, conflicts_with = "scenario")]
        all: bool,
        /// Print the registry and exit.
        #[arg(long)]
        list: bool,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

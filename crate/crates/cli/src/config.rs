use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use walras_miso::coordination::DEFAULT_EPSILON;
use walras_miso::economy::DEFAULT_CURVE_SAMPLES;
use walras_miso::report::Header;

#[derive(Debug, Parser)]
#[command(name = "walras-miso", version, about = "Exchange-economy simulator for the two-user MISO interference channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Draw Rayleigh channel realizations and write them as a fixture file.
    Gen(RunConfig),
    /// Grid of the SINR region plus the contract-curve trace.
    Region(RunConfig),
    /// Contract curve and indifference-curve traces in the Edgeworth box.
    Contract(RunConfig),
    /// Walrasian equilibrium report and Edgeworth-box traces.
    Walras(RunConfig),
    /// Price-adjustment trace and message log of the iterative protocol.
    Tatonnement(RunConfig),
    /// Reference operating points and boundary samples of one channel.
    Bargain(RunConfig),
    /// Comparison table over all channels with a core-membership summary.
    Compare(RunConfig),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Region(_) => "region",
            Command::Contract(_) => "contract",
            Command::Walras(_) => "walras",
            Command::Tatonnement(_) => "tatonnement",
            Command::Bargain(_) => "bargain",
            Command::Compare(_) => "compare",
        }
    }

    pub fn config(&self) -> &RunConfig {
        match self {
            Command::Gen(c)
            | Command::Region(c)
            | Command::Contract(c)
            | Command::Walras(c)
            | Command::Tatonnement(c)
            | Command::Bargain(c)
            | Command::Compare(c) => c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct RunConfig {
    /// Transmit antennas per link.
    #[arg(long, default_value_t = 2)]
    pub antennas: usize,
    /// SNR in dB; the noise variance is 10^(-snr/10).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub snr_db: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Number of channel realizations.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Grid size per axis for `region`, curve samples for the other commands.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Price accuracy of the iterative protocol.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Fixture file to read channels from instead of generating them.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Index of the channel used by single-channel commands.
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    /// Comma-separated SINR levels for indifference traces (default: the Nash levels).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub levels: Vec<f64>,
    /// Run post-hoc checks against brute-force scans before exiting.
    #[arg(long)]
    pub verify: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.antennas < 2 {
            return Err(format!("--antennas must be at least 2, got {}", self.antennas));
        }
        if self.count < 1 {
            return Err("--count must be at least 1".into());
        }
        if let Some(s) = self.samples {
            if s < 2 {
                return Err(format!("--samples must be at least 2, got {s}"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(format!("--epsilon must be positive, got {}", self.epsilon));
        }
        if !self.snr_db.is_finite() {
            return Err(format!("--snr-db must be finite, got {}", self.snr_db));
        }
        if let Some(bad) = self.levels.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(format!("--levels must be positive, got {bad}"));
        }
        Ok(())
    }

    pub fn samples_or(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    pub fn curve_samples(&self) -> usize {
        self.samples_or(DEFAULT_CURVE_SAMPLES)
    }

    /// Header echoing every setting that affects the output.
    pub fn header(&self, command: &str) -> Header {
        let mut h = Header::new(command);
        match &self.input {
            Some(path) => h = h.param("input", path.display()),
            None => {
                h = h
                    .param("antennas", self.antennas)
                    .param("snr_db", self.snr_db)
                    .param("seed", self.seed)
                    .param("count", self.count)
            }
        }
        if let Some(s) = self.samples {
            h = h.param("samples", s);
        }
        h.param("epsilon", self.epsilon).param("channel", self.channel)
    }
}

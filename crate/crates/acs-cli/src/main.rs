//! Command-line compressor over the arithmetic-coding engine.
//!
//! Exit codes: 0 success, 1 bad usage or options, 2 malformed container,
//! 3 I/O failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use acs_cli::container::{self, ContainerError, Mode, Options};
use acs_core::bench::{run_matrix, BenchReport, StrategyKind, Workload};
use acs_core::coder::CoderConfig;

const EXIT_USAGE: u8 = 1;
const EXIT_FORMAT: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "acs",
    version,
    about = "Arithmetic-coding file compressor",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Two-pass: count first, ship the model in the header.
    Static,
    /// Per-symbol adaptive counts; add --period to rebuild on a schedule.
    Adaptive,
    /// Adaptive counts kept in a balanced tree (default).
    Tree,
    /// Bytes coded as eight adaptive binary decisions.
    Binary,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Static => Mode::Static,
            ModeArg::Adaptive => Mode::Adaptive,
            ModeArg::Tree => Mode::Tree,
            ModeArg::Binary => Mode::Binary,
        }
    }
}

fn parse_radix(s: &str) -> Result<u64, String> {
    match s {
        "2" => Ok(2),
        "16" => Ok(16),
        "256" => Ok(256),
        _ => Err("radix must be 2, 16, or 256".into()),
    }
}

/// A precision that fills the 32-bit register budget sensibly for each
/// digit size, used when -P is not given.
fn default_precision(radix: u64) -> u32 {
    match radix {
        2 => 16,
        16 => 8,
        _ => 4,
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Compress a file into an .acs container.
    Compress {
        input: PathBuf,
        /// Output path; defaults to the input path plus ".acs".
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Probability model.
        #[arg(short = 'm', long, value_enum, default_value_t = ModeArg::Tree)]
        mode: ModeArg,
        /// Output digit alphabet size.
        #[arg(short = 'D', long = "radix", default_value = "256", value_parser = parse_radix)]
        radix: u64,
        /// Register precision in digits; default depends on the radix.
        #[arg(short = 'P', long)]
        precision: Option<u32>,
        /// Rebuild the adaptive model every R symbols instead of every
        /// symbol (adaptive mode only).
        #[arg(long = "period", value_name = "R", default_value_t = 0)]
        period: u32,
    },
    /// Restore the original file from a container.
    Decompress {
        input: PathBuf,
        /// Output path; defaults to the input path minus ".acs".
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Decode with a symbol-search lookup table of this size
        /// (static and periodic-adaptive containers).
        #[arg(long = "lookup", value_name = "K")]
        lookup: Option<u64>,
    },
    /// Print a container's header and size report.
    Info { input: PathBuf },
    /// Measure decode strategies on synthetic workloads
    /// (tab-separated records; ACS_THREADS caps parallelism).
    Bench {
        /// Symbols per workload.
        #[arg(short = 'n', long, default_value_t = 50_000)]
        symbols: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(short = 'D', long = "radix", default_value = "256", value_parser = parse_radix)]
        radix: u64,
        #[arg(short = 'P', long)]
        precision: Option<u32>,
    },
}

enum CliError {
    Usage(String),
    Format(ContainerError),
    Io(PathBuf, std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Format(_) => EXIT_FORMAT,
            CliError::Io(..) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Format(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write_file(path: &Path, data: &[u8]) -> Result<(), CliError> {
    fs::write(path, data).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn compressed_name(input: &Path) -> PathBuf {
    let mut name = input.as_os_str().to_owned();
    name.push(".acs");
    PathBuf::from(name)
}

fn restored_name(input: &Path) -> PathBuf {
    let s = input.as_os_str().to_string_lossy();
    match s.strip_suffix(".acs") {
        Some(stem) if !stem.is_empty() => PathBuf::from(stem.to_string()),
        _ => {
            let mut name = input.as_os_str().to_owned();
            name.push(".out");
            PathBuf::from(name)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Compress {
            input,
            output,
            mode,
            radix,
            precision,
            period,
        } => {
            let data = read_file(&input)?;
            let opts = Options {
                mode: mode.into(),
                radix,
                precision: precision.unwrap_or_else(|| default_precision(radix)),
                period,
            };
            let packed = container::compress(&data, &opts)
                .map_err(|e| CliError::Usage(format!("cannot compress with these options: {e}")))?;
            write_file(&output.unwrap_or_else(|| compressed_name(&input)), &packed)
        }
        Cmd::Decompress {
            input,
            output,
            lookup,
        } => {
            let data = read_file(&input)?;
            let restored = container::decompress(&data, lookup).map_err(CliError::Format)?;
            write_file(&output.unwrap_or_else(|| restored_name(&input)), &restored)
        }
        Cmd::Info { input } => {
            let data = read_file(&input)?;
            let s = container::inspect(&data).map_err(CliError::Format)?;
            println!("mode: {}", s.mode.label());
            println!("radix: {}", s.radix);
            println!("precision: {} digits", s.precision);
            println!("alphabet: {}", s.alphabet);
            println!("symbols: {}", s.symbols);
            if s.period > 0 {
                println!("rebuild period: {}", s.period);
            }
            println!("header bytes: {}", s.header_bytes);
            println!("payload bytes: {}", s.payload_bytes);
            match s.bits_per_symbol {
                Some(b) => println!("payload bits/symbol: {b:.4}"),
                None => println!("payload bits/symbol: -"),
            }
            Ok(())
        }
        Cmd::Bench {
            symbols,
            seed,
            radix,
            precision,
        } => {
            let cfg = CoderConfig::new(radix, precision.unwrap_or_else(|| default_precision(radix)))
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let zipfish: Vec<u64> = (0..64u64).map(|i| 512 / (i + 1) + 1).collect();
            let workloads = [
                Workload::synthetic("four-letter", &[2, 5, 2, 1], symbols, seed),
                Workload::synthetic("uniform-bytes", &[1; 256], symbols, seed + 1),
                Workload::synthetic("skewed-64", &zipfish, symbols, seed + 2),
            ];
            let strategies = [
                StrategyKind::Sequential,
                StrategyKind::Bisection,
                StrategyKind::Lookup { size: 16 },
                StrategyKind::Quantile { levels: 3 },
                StrategyKind::Tree,
            ];
            let reports = run_matrix(&workloads, &[cfg], &strategies)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            println!("{}", BenchReport::COLUMNS);
            for r in &reports {
                println!("{}", r.record());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("acs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

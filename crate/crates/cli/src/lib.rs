//! Command-line front end for `pedlump`.
//!
//! [`run`] parses arguments, dispatches to a subcommand and returns the
//! process exit code, writing to the given streams so that tests can drive
//! it in-process.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod bench;
mod commands;
pub mod pipeline;

pub use pipeline::{reduce_pedigree, Reduction, Variant};

/// Version of every JSON summary emitted.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pedlump::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error("writing output: {0}")]
    Output(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "pedlump", version, about = "Exact state-space reduction for pedigree inheritance HMMs")]
pub struct Cli {
    #[command(flatten)]
    pub shared: Shared,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BootstrapMode {
    /// Refine one representative per orbit of symmetries read off the pedigree.
    Auto,
    /// Refine every state.
    Off,
}

#[derive(Debug, Args)]
pub struct Shared {
    /// Meiosis order as `id:p,id:m,...`, or `@FILE` to read it from a file.
    #[arg(long, global = true, value_name = "LIST")]
    pub meiosis_order: Option<String>,

    #[arg(long, global = true, value_enum, default_value_t = BootstrapMode::Off)]
    pub bootstrap: BootstrapMode,

    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Largest relevant meiosis count accepted [default: 14, or 18 with --bootstrap auto].
    #[arg(long, global = true)]
    pub max_meioses: Option<usize>,

    /// Omit wall-clock times so that output is byte-reproducible.
    #[arg(long, global = true)]
    pub no_timing: bool,
}

impl Shared {
    pub fn variant(&self) -> Variant {
        match self.bootstrap {
            BootstrapMode::Auto => Variant::Bootstrap,
            BootstrapMode::Off => Variant::Full,
        }
    }

    pub fn max_meioses(&self) -> usize {
        self.max_meioses.unwrap_or(self.variant().default_max_meioses())
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the maximum ensemble partition of a pedigree.
    Reduce(ReduceArgs),
    /// Log-likelihood of genotype data on the reduced chain.
    Likelihood(LikelihoodArgs),
    /// Simulate pedigrees and genotype data.
    Simulate(SimulateArgs),
    /// Reduce simulated pedigrees and tabulate state-space sizes.
    Bench(BenchArgs),
    /// Check that a partition is Markov and refines the emission partition.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    pub pedigree: PathBuf,

    /// Partition output; standard output when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,

    /// JSON summary output; standard error when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,

    /// Write the emission partition instead of the ensemble.
    #[arg(long)]
    pub emission_only: bool,
}

#[derive(Debug, Args)]
pub struct LikelihoodArgs {
    pub pedigree: PathBuf,
    pub genotypes: PathBuf,
    /// Allele frequency file, one `symbol frequency` per line.
    pub frequencies: PathBuf,

    /// Crossover rate per Morgan per meiosis.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    /// Also run the forward recursion over all 2^n states.
    #[arg(long)]
    pub check_naive: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulationParams {
    #[arg(long, default_value_t = 3)]
    pub generations: usize,

    /// Size of every generation but the last.
    #[arg(long, default_value_t = 4)]
    pub per_gen: usize,

    /// Mean offspring per couple in the last generation.
    #[arg(long, default_value_t = 2.0)]
    pub offspring_mean: f64,

    /// Reassign each parent edge at random with probability 1/2.
    #[arg(long)]
    pub halfsib: bool,

    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
}

impl SimulationParams {
    pub fn pedigree_params(&self) -> pedlump::sim::PedigreeParams {
        pedlump::sim::PedigreeParams {
            generations: self.generations,
            per_gen_n: self.per_gen,
            offspring_mean: self.offspring_mean,
            halfsib: self.halfsib,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: SimulationParams,

    /// Sites per genotype file; 0 writes pedigrees only.
    #[arg(long, default_value_t = 50)]
    pub sites: usize,

    /// Distance between consecutive sites in Morgans.
    #[arg(long, default_value_t = 0.01)]
    pub spacing: f64,

    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,

    /// Number of equifrequent alleles, ignored with --frequencies.
    #[arg(long, default_value_t = 4)]
    pub alleles: usize,

    #[arg(long)]
    pub frequencies: Option<PathBuf>,

    /// Prune irrelevant meioses and skip pedigrees with more than --max-meioses left.
    #[arg(long)]
    pub reducible_only: bool,

    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub params: SimulationParams,

    /// CSV output; standard output when absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub pedigree: PathBuf,
    pub partition: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// Runs a parsed command and returns its exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    if cli.shared.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let threads = cli.shared.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    // Commands write to buffers so that the work can run inside the pool.
    let (code, stdout, stderr) = pool.install(|| {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = match &cli.command {
            Command::Reduce(a) => commands::reduce(&cli.shared, a, &mut o, &mut e),
            Command::Likelihood(a) => commands::likelihood(&cli.shared, a, &mut o),
            Command::Simulate(a) => commands::simulate(&cli.shared, a, &mut o),
            Command::Bench(a) => bench::run(&cli.shared, a, &mut o),
            Command::Verify(a) => commands::verify(&cli.shared, a, &mut o),
        };
        (code, o, e)
    });
    out.write_all(&stdout)?;
    err.write_all(&stderr)?;
    code
}

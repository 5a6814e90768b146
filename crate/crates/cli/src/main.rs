use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dyncomm::{cmd_affected_stats, cmd_gen_batch, cmd_run, cmd_scaling, CliError, Config, InputFormat};
use dyncomm_core::{Approach, LouvainParams};

#[derive(Parser)]
#[command(name = "dyncomm", version, about = "Community detection on dynamic graphs: static, ND, DS and DF Louvain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply batches and time each approach, one CSV row per approach and batch.
    Run(Common),
    /// Share of vertices marked affected per batch (ds, df).
    AffectedStats(Common),
    /// Runtime per worker count and speedup over one worker.
    Scaling(Common),
    /// Write consecutive random batches to a batch file.
    GenBatch(Common),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Mtx,
    Temporal,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "mtx")]
    format: Format,
    /// Mirror entries of `general` Matrix Market files.
    #[arg(long)]
    symmetrize: bool,
    #[arg(long, value_delimiter = ',', default_value = "static,nd,ds,df")]
    approach: Vec<Approach>,
    /// Batch sizes as fractions of |E|.
    #[arg(long, value_delimiter = ',', default_value = "1e-4")]
    batch_sizes: Vec<f64>,
    #[arg(long, default_value_t = 0.8)]
    insertion_ratio: f64,
    /// Consecutive random batches per batch size.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; a doubling list such as 1,2,4 for `scaling`.
    #[arg(long, env = "DYNCOMM_WORKERS", value_delimiter = ',')]
    workers: Vec<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    tolerance_drop: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    max_passes: Option<usize>,
    /// Defaults to 0.8 for Matrix Market input and 1 for temporal streams.
    #[arg(long)]
    aggregation_tolerance: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Replay batches from a file instead of generating them.
    #[arg(long)]
    batch_file: Option<PathBuf>,
    /// Rerun static Louvain for the dynamic approaches every N batches.
    #[arg(long)]
    static_refresh_every: Option<usize>,
}

impl Common {
    fn config(&self, workers: usize) -> Config {
        let (format, mut params) = match self.format {
            Format::Mtx => (InputFormat::Mtx, LouvainParams::random_batches()),
            Format::Temporal => (InputFormat::Temporal, LouvainParams::temporal()),
        };
        params.tolerance = self.tolerance.unwrap_or(params.tolerance);
        params.tolerance_drop = self.tolerance_drop.unwrap_or(params.tolerance_drop);
        params.max_iterations = self.max_iterations.unwrap_or(params.max_iterations);
        params.max_passes = self.max_passes.unwrap_or(params.max_passes);
        params.aggregation_tolerance = self.aggregation_tolerance.unwrap_or(params.aggregation_tolerance);
        Config {
            input: self.input.clone(),
            format,
            symmetrize: self.symmetrize,
            approaches: self.approach.clone(),
            batch_sizes: self.batch_sizes.clone(),
            insertion_ratio: self.insertion_ratio,
            reps: self.reps,
            seed: self.seed,
            workers,
            params,
            batch_file: self.batch_file.clone(),
            static_refresh_every: self.static_refresh_every,
            check_every: 10,
        }
    }

    fn single_worker_count(&self) -> Result<usize, CliError> {
        match self.workers.as_slice() {
            [] => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
            [w] => Ok(*w),
            many => Err(CliError::Usage(format!("expected one worker count, got {many:?}"))),
        }
    }

    fn sink(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.output {
            Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| CliError::input(path, e.to_string()))?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => {
            let config = args.config(args.single_worker_count()?);
            cmd_run(&config, args.sink()?)?;
        }
        Command::AffectedStats(args) => {
            let config = args.config(args.single_worker_count()?);
            cmd_affected_stats(&config, args.sink()?)?;
        }
        Command::Scaling(args) => {
            let workers = if args.workers.is_empty() { vec![1, 2, 4] } else { args.workers.clone() };
            let config = args.config(1);
            cmd_scaling(&config, &workers, args.sink()?)?;
        }
        Command::GenBatch(args) => {
            if args.format != Format::Mtx {
                return Err(CliError::Usage("gen-batch needs a Matrix Market input".into()));
            }
            let config = args.config(1);
            cmd_gen_batch(&config, args.sink()?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

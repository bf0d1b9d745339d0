use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dafno::cli;

#[derive(Parser)]
#[command(
    name = "dafno",
    about = "Geometry-aware Fourier neural operators with a peridynamics fracture loop",
    version
)]
struct Cli {
    /// cap on worker threads (0 = library default)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset container
    GenData {
        /// poisson | pd-crack | pd-sine
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// smoothing coefficient baked into the stored encoding
        #[arg(long, default_value_t = 20.0)]
        beta: f64,
        /// traction magnitude for pd-crack (Pa)
        #[arg(long, default_value_t = 4e6)]
        traction: f64,
        #[arg(long, default_value_t = 5)]
        snapshot_every: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train one variant across seeds and write checkpoints plus CSV curves
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// dataset container(s); later files are concatenated
        #[arg(long, value_delimiter = ',')]
        data: Vec<PathBuf>,
        /// edafno | idafno | fno-mask | fno-smooth
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        epochs: Option<usize>,
        /// lift the 500-epoch cap
        #[arg(long)]
        allow_long: bool,
        /// train a single component of a two-component target: l1 | l2
        #[arg(long)]
        predict: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on a dataset
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_delimiter = ',')]
        data: Vec<PathBuf>,
        /// re-rasterize the (poisson) dataset at this resolution first
        #[arg(long)]
        resolution: Option<usize>,
        /// write prediction/truth/error images next to the CSV
        #[arg(long)]
        dump_fields: bool,
        /// compute errors over the whole box instead of the domain
        #[arg(long)]
        no_mask: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the crack simulation with the bond force or a trained pair
    Simulate {
        /// pd | surrogate
        #[arg(long)]
        force_source: String,
        #[arg(long, default_value_t = 4e6)]
        traction: f64,
        #[arg(long, default_value_t = 400)]
        steps: usize,
        #[arg(long, default_value_t = 5)]
        snapshot_every: usize,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        model_l1: Option<PathBuf>,
        #[arg(long)]
        model_l2: Option<PathBuf>,
        /// reference trajectory for per-step error tracking
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train once per smoothing coefficient and tabulate the results
    SweepBeta {
        #[arg(long, value_delimiter = ',')]
        betas: Vec<f64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        data: Vec<PathBuf>,
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> dafno::Result<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }
    match cli.command {
        Command::GenData {
            task,
            grid,
            samples,
            seed,
            beta,
            traction,
            snapshot_every,
            out,
            config,
        } => cli::cmd_gen_data(&cli::GenDataArgs {
            task,
            grid,
            samples,
            seed,
            beta,
            traction,
            snapshot_every,
            out,
            config,
        }),
        Command::Train {
            config,
            data,
            variant,
            beta,
            seeds,
            epochs,
            allow_long,
            predict,
            out,
        } => cli::cmd_train(&cli::TrainArgs {
            config,
            data,
            variant,
            beta,
            seeds,
            epochs,
            allow_long,
            predict,
            out,
        }),
        Command::Eval {
            checkpoint,
            data,
            resolution,
            dump_fields,
            no_mask,
            out,
        } => cli::cmd_eval(&cli::EvalArgs {
            checkpoint,
            data,
            resolution,
            dump_fields,
            no_mask,
            out,
        }),
        Command::Simulate {
            force_source,
            traction,
            steps,
            snapshot_every,
            resolution,
            model_l1,
            model_l2,
            reference,
            config,
            out,
        } => cli::cmd_simulate(&cli::SimulateArgs {
            force_source,
            traction,
            steps,
            snapshot_every,
            resolution,
            model_l1,
            model_l2,
            reference,
            config,
            out,
        }),
        Command::SweepBeta {
            betas,
            config,
            data,
            variant,
            out,
        } => cli::cmd_sweep_beta(&cli::SweepBetaArgs {
            betas,
            config,
            data,
            variant,
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

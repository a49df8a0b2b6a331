mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use arc_core::alpha_rank::{SweepConfig, SweepMode, DEFAULT_ALPHA0, DEFAULT_MAX_DOUBLINGS};
use arc_core::mechanisms::matching::Mechanism;
use arc_core::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// alpha-Rank distributions and collections.
#[derive(Parser, Debug)]
#[command(name = "arc", version, about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ARC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank a single game.
    Rank {
        /// JSON game spec.
        #[arg(long)]
        game: PathBuf,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Output CSV; the manifest goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Expected distribution of a Bayesian game over its prior.
    Collection {
        #[arg(long)]
        game: PathBuf,
        /// Monte-Carlo sample count. Finite priors are averaged exactly when omitted.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Start every sample's fixed-mode sweep at the alpha found for the prior mean.
        #[arg(long)]
        alpha_from_mean: bool,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mass on the reference equilibrium sets of the matching game over a grid of one value.
    Sweep {
        #[arg(long, value_parser = parse_mechanism)]
        mechanism: Mechanism,
        /// Which value to vary.
        #[arg(long, value_enum, default_value_t = Param::VS)]
        param: Param,
        /// `start:end:step`, inclusive.
        #[arg(long, default_value = "70:80:1")]
        grid: String,
        /// Values `v_G,v_S,v_B,v_U` shared by every student.
        #[arg(long, default_value = "100,70,25,0")]
        base: String,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// DOT export of a game graph weighted by a distribution.
    Graph {
        #[arg(long)]
        game: PathBuf,
        /// Distribution or collection CSV.
        #[arg(long)]
        dist: PathBuf,
        /// Keep edges that lower the deviator's utility.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time one transition-matrix build and stationary solve per game size.
    Bench {
        #[arg(long, default_value_t = 5)]
        agents: usize,
        #[arg(long, default_value_t = 2)]
        min_actions: usize,
        #[arg(long, default_value_t = 6)]
        max_actions: usize,
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Param {
    #[value(name = "v_g")]
    VG,
    #[value(name = "v_s")]
    VS,
    #[value(name = "v_b")]
    VB,
}

impl Param {
    fn index(self) -> usize {
        match self {
            Param::VG => 0,
            Param::VS => 1,
            Param::VB => 2,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    /// Population size.
    #[arg(long, default_value_t = 50)]
    m: usize,
    /// First alpha of the doubling sweep.
    #[arg(long, default_value_t = DEFAULT_ALPHA0)]
    alpha_start: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_DOUBLINGS)]
    max_doublings: usize,
    /// Use the fixed-with-decrement sweep starting here.
    #[arg(long)]
    alpha_fixed: Option<f64>,
    /// Decrement of the fixed sweep.
    #[arg(long)]
    alpha_decrement: Option<f64>,
    /// Residual tolerance of the stationary solve.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl SweepArgs {
    fn config(&self) -> SweepConfig {
        let mode = match self.alpha_fixed {
            Some(alpha_fixed) => SweepMode::FixedWithDecrement {
                alpha_fixed,
                step: self.alpha_decrement.unwrap_or(0.1),
            },
            None => SweepMode::Doubling {
                alpha0: self.alpha_start,
                factor: 2.0,
                max_steps: self.max_doublings,
            },
        };
        SweepConfig {
            m: self.m,
            mode,
            tol: self.tol,
        }
    }
}

fn parse_mechanism(s: &str) -> Result<Mechanism, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure of a command, with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Sweep(_) | Error::NotIrreducible { .. } | Error::SolverFailure { .. } => 3,
            Error::ExcessiveSkips { .. } => 4,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("global pool is configured once");
    }
    let threads = rayon::current_num_threads();
    let args: Vec<String> = std::env::args().collect();
    let result = match cli.command {
        Command::Rank { game, sweep, out } => {
            commands::rank(&game, &sweep.config(), &out, &args, threads)
        }
        Command::Collection {
            game,
            samples,
            seed,
            alpha_from_mean,
            sweep,
            out,
        } => {
            let fixed_step = sweep.alpha_decrement;
            commands::collection(
                &game,
                samples,
                seed,
                alpha_from_mean.then_some(fixed_step),
                &sweep.config(),
                &out,
                &args,
                threads,
            )
        }
        Command::Sweep {
            mechanism,
            param,
            grid,
            base,
            sweep,
            out,
        } => commands::sweep(
            mechanism,
            param.index(),
            &grid,
            &base,
            &sweep.config(),
            &out,
            &args,
            threads,
        ),
        Command::Graph {
            game,
            dist,
            full,
            out,
        } => commands::graph(&game, &dist, full, &out),
        Command::Bench {
            agents,
            min_actions,
            max_actions,
            m,
            alpha,
            seed,
            out,
        } => commands::bench(
            agents,
            min_actions..=max_actions,
            m,
            alpha,
            seed,
            &out,
            &args,
            threads,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

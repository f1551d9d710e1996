use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tenrank::approx::DEFAULT_MAX_ATTEMPTS;
use tenrank::cli::{exit, run, Command, RunConfig, Sample, DEFAULT_SEED};
use tenrank::Tolerances;

#[derive(Parser)]
#[command(
    name = "tenrank",
    version,
    about = "Rank certificates for complex three-way tensors"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Seed for every randomized step; echoed in the output.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the output document here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Args)]
struct TolArgs {
    /// Eigenvalue separation, relative to the l1 norm.
    #[arg(long, global = true)]
    gap_tol: Option<f64>,
    /// Singular-value cutoff for numerical rank, relative to the l1 norm.
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    /// Singularity threshold for inverses, relative to the l1 norm.
    #[arg(long, global = true)]
    sing_tol: Option<f64>,
    /// Off-diagonal tolerance for a common eigenbasis.
    #[arg(long, global = true)]
    sim_tol: Option<f64>,
    /// Commutator tolerance.
    #[arg(long, global = true)]
    comm_tol: Option<f64>,
    /// Reconstruction tolerance of a certified decomposition.
    #[arg(long, global = true)]
    cert_tol: Option<f64>,
    /// Random combinations tried before giving up.
    #[arg(long, global = true)]
    max_tries: Option<usize>,
}

impl TolArgs {
    fn resolve(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(v) = self.gap_tol {
            t.gap_rel = v;
        }
        if let Some(v) = self.rank_tol {
            t.rank_rel = v;
        }
        if let Some(v) = self.sing_tol {
            t.sing_rel = v;
        }
        if let Some(v) = self.sim_tol {
            t.sim_tol = v;
        }
        if let Some(v) = self.comm_tol {
            t.comm_tol = v;
        }
        if let Some(v) = self.cert_tol {
            t.cert_tol = v;
        }
        if let Some(v) = self.max_tries {
            t.max_tries = v;
        }
        t
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleName {
    Example,
    W,
    Random,
}

#[derive(Subcommand)]
enum Cmd {
    /// Certify whether rank equals the slice order.
    Rank { tensor: PathBuf },
    /// Rank-n approximation of an n x n x 2 tensor.
    Approx {
        tensor: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
        max_attempts: usize,
        /// Also write the approximant as a tensor file.
        #[arg(long)]
        out_tensor: Option<PathBuf>,
    },
    /// Report on the rank-leap family.
    Leap {
        #[arg(long)]
        n: usize,
        /// Comma-separated member indices.
        #[arg(long, value_delimiter = ',', default_values_t = [10u64, 1000, 100000])]
        k: Vec<u64>,
    },
    /// Apply (L, M, N) to a tensor.
    Act {
        tensor: PathBuf,
        #[arg(long)]
        l: PathBuf,
        #[arg(long)]
        m: PathBuf,
        #[arg(long)]
        n: PathBuf,
    },
    /// Alternating least squares fit with r terms.
    Oracle {
        tensor: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
    },
    /// Emit a sample tensor.
    Gen {
        #[arg(value_enum)]
        sample: SampleName,
        /// l,m,n for random tensors.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 2, 2])]
        dims: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Cmd::Gen { dims, .. } = &cli.command {
        if dims.len() != 3 {
            eprintln!("error: --dims takes exactly three values l,m,n");
            return ExitCode::from(exit::USAGE);
        }
    }
    let command = match cli.command {
        Cmd::Rank { tensor } => Command::Rank { tensor },
        Cmd::Approx {
            tensor,
            eps,
            max_attempts,
            out_tensor,
        } => Command::Approx {
            tensor,
            eps,
            max_attempts,
            out_tensor,
        },
        Cmd::Leap { n, k } => Command::Leap { n, ks: k },
        Cmd::Act { tensor, l, m, n } => Command::Act { tensor, l, m, n },
        Cmd::Oracle {
            tensor,
            r,
            restarts,
            max_iters,
        } => Command::Oracle {
            tensor,
            r,
            restarts,
            max_iters,
        },
        Cmd::Gen { sample, dims } => Command::Gen {
            sample: match sample {
                SampleName::Example => Sample::Example,
                SampleName::W => Sample::W,
                SampleName::Random => Sample::Random {
                    l: dims[0],
                    m: dims[1],
                    n: dims[2],
                },
            },
        },
    };
    let config = RunConfig {
        command,
        seed: cli.seed,
        tolerances: cli.tol.resolve(),
    };
    match run(&config) {
        Ok(out) => {
            match &cli.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &out.document) {
                        eprintln!("error: {}: {e}", path.display());
                        return ExitCode::from(exit::IO);
                    }
                }
                None => print!("{}", out.document),
            }
            ExitCode::from(out.exit_code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code)
        }
    }
}

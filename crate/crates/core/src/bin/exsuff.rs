use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use exsuff::harness::{self, Command, ExperimentConfig, Format, Status};

#[derive(Parser, Debug)]
#[command(
    name = "exsuff",
    version,
    about = "Permutation symmetrization experiments for exchangeable vectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Master seed; every random stream derives from it.
    #[arg(long, global = true, env = harness::SEED_ENV, default_value_t = 0)]
    seed: u64,

    /// Dimension of the sampled vectors.
    #[arg(long, global = true, default_value_t = 3)]
    n: usize,

    /// Draw count (rank-uniformity, rao-blackwell) or Monte Carlo
    /// permutation count (symmetrize). Defaults depend on the command.
    #[arg(long, global = true)]
    samples: Option<u64>,

    /// Sampler spec, e.g. `uniform`, `gaussian:0.5`, `urn:1,2,3,4`.
    #[arg(long, global = true, default_value = "uniform")]
    sampler: String,

    /// Estimand spec, e.g. `proj:0`, `sum`, `wsum:1,2,3`, `threshold:0.5`.
    #[arg(long, global = true, default_value = "proj:0")]
    estimand: String,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Compare brute-force conditional laws with the permutation formula
    /// over a fixture catalog.
    VerifyConditional {
        /// pmf files in the `dim n` text format; replaces the built-in catalog.
        #[arg(long)]
        pmf: Vec<String>,
    },
    /// Chi-square test that the sorting permutation of a draw is uniform.
    RankUniformity {
        /// Independent replicates; above 1, reports the rejection rate.
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        /// Significance level.
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
    },
    /// Variance of g(X) versus its symmetrization at the order statistics.
    RaoBlackwell,
    /// Symmetrize the estimand at each row of a numeric data file.
    Symmetrize {
        /// Comma- or whitespace-separated rows; `#` starts a comment.
        #[arg(long)]
        input: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

fn config(cli: Cli) -> ExperimentConfig {
    let command = match &cli.command {
        Cmd::VerifyConditional { .. } => Command::VerifyConditional,
        Cmd::RankUniformity { .. } => Command::RankUniformity,
        Cmd::RaoBlackwell => Command::RaoBlackwell,
        Cmd::Symmetrize { .. } => Command::Symmetrize,
    };
    let mut cfg = ExperimentConfig::new(command);
    cfg.seed = cli.seed;
    cfg.n = cli.n;
    if let Some(s) = cli.samples {
        cfg.samples = s;
    }
    cfg.sampler = cli.sampler;
    cfg.estimand = cli.estimand;
    cfg.output_path = cli.out;
    cfg.format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };
    match cli.command {
        Cmd::VerifyConditional { pmf } => cfg.pmf = pmf,
        Cmd::RankUniformity { replicates, alpha } => {
            cfg.replicates = replicates;
            cfg.alpha = alpha;
        }
        Cmd::RaoBlackwell => {}
        Cmd::Symmetrize { input } => cfg.input = Some(input),
    }
    cfg
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = config(cli);
    let outcome = match harness::execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("exsuff: {e}");
            return ExitCode::from(Status::UsageError.code() as u8);
        }
    };
    let written = match &cfg.output_path {
        Some(path) => std::fs::write(path, &outcome.rendered),
        None => std::io::stdout().write_all(outcome.rendered.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("exsuff: cannot write report: {e}");
        return ExitCode::from(Status::UsageError.code() as u8);
    }
    ExitCode::from(outcome.status.code() as u8)
}

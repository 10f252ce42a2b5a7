use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sbary::diagnostics::Engine;
use sbary_cli::commands::{
    check_transform, oracle, parse_cost, parse_gauss, parse_list, OracleArgs,
};
use sbary_cli::run::exit_status;
use sbary_cli::{run, CliError, SolveOptions, EXIT_INPUT};

#[derive(Parser)]
#[command(
    name = "sbary",
    version,
    about = "Signed Wasserstein barycenters on grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a run configuration and write densities, potentials and a report.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// oracle1d, smallexact or dual2d
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        no_diagnostics: bool,
    },
    /// Quantile-formula barycenter of 1D Gaussians (quadratic cost).
    Oracle {
        /// Comma-separated weights, e.g. `2,-1`.
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        /// `mean,sd`; repeat once per weight.
        #[arg(long, required = true)]
        gauss: Vec<String>,
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lower: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        upper: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the c-transform law suite on random potentials.
    CheckTransform {
        /// Nodes per axis.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// quadratic or ppower:<p>
        #[arg(long, default_value = "quadratic")]
        cost: String,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("SB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Input(format!(
            "SB_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot size the thread pool: {e}")))
}

fn print_report(result: Result<(u8, sbary_cli::Report), CliError>) -> u8 {
    match result {
        Ok((code, r)) => {
            print!("{}", r.render());
            code
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("{e}");
        return ExitCode::from(EXIT_INPUT);
    }
    let code = match cli.command {
        Command::Solve {
            config,
            out,
            seed,
            engine,
            no_diagnostics,
        } => {
            let result = engine
                .as_deref()
                .map(Engine::parse)
                .transpose()
                .map_err(CliError::from)
                .and_then(|engine| {
                    run(
                        &config,
                        &SolveOptions {
                            out,
                            seed,
                            engine,
                            no_diagnostics,
                        },
                    )
                });
            if let Ok(o) = &result {
                println!("{}", o.out_dir.join("report.txt").display());
            }
            exit_status(&result)
        }
        Command::Oracle {
            a,
            gauss,
            n,
            lower,
            upper,
            out,
        } => {
            let args = parse_list(&a).and_then(|weights| {
                let gaussians = gauss
                    .iter()
                    .map(|g| parse_gauss(g))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(OracleArgs {
                    weights,
                    gaussians,
                    nodes: n,
                    lower,
                    upper,
                })
            });
            print_report(args.and_then(|args| oracle(&args, out.as_deref())))
        }
        Command::CheckTransform {
            n,
            dim,
            count,
            seed,
            cost,
        } => print_report(parse_cost(&cost).and_then(|c| check_transform(n, dim, count, seed, &c))),
    };
    ExitCode::from(code)
}

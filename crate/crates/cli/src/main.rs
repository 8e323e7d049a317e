use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gossip_sim::commands::{GraphArgs, GraphFormat, GraphKind};
use gossip_sim::{cmd_bounds, cmd_graph, cmd_run, HarnessError};

#[derive(Parser)]
#[command(
    name = "gossip-sim",
    version,
    about = "Randomized gossip average-consensus simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph, print its spectral summary and write it out.
    Graph {
        #[arg(long = "type", value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        /// RGG radius; defaults to sqrt(ln n / n).
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Output file; the graph goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configured experiment batch and write trace.csv and summary.json.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the configured protocol's bound without simulating.
    Bounds {
        config: PathBuf,
        /// Also write the table as CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Cycle,
    Rgg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Graph {
            kind,
            n,
            r,
            seed,
            format,
            out,
        } => {
            let args = GraphArgs {
                kind: match kind {
                    KindArg::Cycle => GraphKind::Cycle,
                    KindArg::Rgg => GraphKind::Rgg,
                },
                n,
                r,
                seed,
                format: match format {
                    FormatArg::Text => GraphFormat::Text,
                    FormatArg::Json => GraphFormat::Json,
                },
                out: out.clone(),
            };
            let result = cmd_graph(&args)?;
            let i = &result.info;
            if let Some(r) = i.radius {
                eprintln!("radius={r:.6}");
            }
            eprintln!(
                "n={} m={} alpha={:.6} beta={:.6} d_min={}",
                i.n, i.m, i.alpha, i.beta, i.d_min
            );
            match out {
                Some(path) => eprintln!("wrote {}", path.display()),
                None => print!("{}", result.document),
            }
        }
        Command::Run { config, out } => {
            let result = cmd_run(&config, out.as_deref())?;
            let f = &result.summary.final_values;
            eprintln!(
                "{} seeds x {} iterations: final dual_subopt {:.6e} (se {:.2e}), bound holds within 3 SE: {}",
                result.summary.seeds.len(),
                result.summary.iterations,
                f.dual_subopt_mean,
                f.dual_subopt_se,
                result.summary.bound.holds_within_3se
            );
            eprintln!("wrote {}", result.trace_path.display());
            if let Some(p) = &result.trajectory_path {
                eprintln!("wrote {}", p.display());
            }
            eprintln!("wrote {}", result.summary_path.display());
        }
        Command::Bounds { config, out } => {
            let table = cmd_bounds(&config, out.as_deref())?;
            eprintln!(
                "{} ({:?}): alpha={:.6} rho={:.6} D_gap={:.6}",
                table.protocol, table.measure, table.alpha, table.rho, table.d_gap
            );
            print!("{}", table.to_csv());
        }
    }
    Ok(())
}

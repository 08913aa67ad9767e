use std::path::PathBuf;
use std::process::ExitCode;

use choquard_cli::{dispatch, emit_plot_data, error_payload, exit_code, CommandKind, PlotKind, ResultEnvelope, RunConfig};
use choquard_core::{Error, SymmetryClass};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "choquard", version, about = "Symmetric critical points of the conformally invariant Choquard equation")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Run the invariant suite for one parameter point.
    Verify(RunArgs),
    /// Enumerate block groups, swap property and invariant harmonic counts.
    Atlas(RunArgs),
    /// Assemble the reduced kernel; `--csv` dumps the matrix.
    Kernel(RunArgs),
    /// Reduced grid; `--csv` dumps nodes and weights.
    Grid(RunArgs),
    /// Critical points in a symmetry class.
    Solve(RunArgs),
    /// Exponent ledger of the integrability bootstrap.
    Ledger(RunArgs),
    /// The standard bubble and the constant solution it lifts to.
    Bubble(RunArgs),
    /// CSV series from a saved result.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    n: u32,
    /// Decimal, fraction (`p/q`) or float.
    #[arg(long)]
    mu: Option<String>,
    /// Block sizes, e.g. `2,2`.
    #[arg(long, value_parser = parse_parts)]
    parts: Option<(u32, u32)>,
    #[arg(long, default_value = "G", value_parser = parse_class)]
    class: SymmetryClass,
    #[arg(long, default_value_t = choquard_core::grid::DEFAULT_GRID_SIZE)]
    grid_size: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Largest harmonic degree in atlas reports.
    #[arg(long, default_value_t = 12)]
    max_degree: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Overrides $CHOQUARD_CACHE_DIR.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    no_cache: bool,
    /// Single-threaded, reproducible run.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct PlotArgs {
    /// Result envelope written by `--out`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long, default_value_t = 0)]
    index: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_parts(s: &str) -> Result<(u32, u32), String> {
    let v: Vec<u32> = s.split(',').map(|x| x.trim().parse::<u32>().map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    match v.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(format!("expected two block sizes, got `{s}`")),
    }
}

fn parse_class(s: &str) -> Result<SymmetryClass, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn config(command: CommandKind, a: RunArgs) -> RunConfig {
    RunConfig {
        command,
        n: a.n,
        mu: a.mu,
        parts: a.parts,
        class: a.class,
        grid_size: a.grid_size,
        count: a.count,
        tol: a.tol,
        max_iter: a.max_iter,
        max_degree: a.max_degree,
        seed: a.seed,
        out: a.out,
        csv: a.csv,
        cache_dir: a.cache_dir,
        no_cache: a.no_cache,
        deterministic: a.deterministic,
    }
}

fn fail(err: &Error) -> ExitCode {
    println!("{}", error_payload(err));
    ExitCode::from(exit_code(err) as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Commands::Verify(a) => (CommandKind::Verify, a),
        Commands::Atlas(a) => (CommandKind::Atlas, a),
        Commands::Kernel(a) => (CommandKind::Kernel, a),
        Commands::Grid(a) => (CommandKind::Grid, a),
        Commands::Solve(a) => (CommandKind::Solve, a),
        Commands::Ledger(a) => (CommandKind::Ledger, a),
        Commands::Bubble(a) => (CommandKind::Bubble, a),
        Commands::Plot(p) => {
            let result = ResultEnvelope::read(&p.input).and_then(|env| emit_plot_data(&env, p.kind, p.index));
            return match result {
                Ok(csv) => match p.out {
                    Some(path) => match std::fs::write(&path, csv) {
                        Ok(()) => ExitCode::SUCCESS,
                        Err(e) => fail(&Error::Io(e)),
                    },
                    None => {
                        print!("{csv}");
                        ExitCode::SUCCESS
                    }
                },
                Err(e) => fail(&e),
            };
        }
    };
    let cfg = config(kind, args);
    match dispatch(&cfg) {
        Ok(env) => {
            if cfg.out.is_none() {
                match env.to_json() {
                    Ok(s) => println!("{s}"),
                    Err(e) => return fail(&e),
                }
            }
            for w in &env.warnings {
                eprintln!("warning: {w}");
            }
            if env.succeeded() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => fail(&e),
    }
}

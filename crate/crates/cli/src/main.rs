//! `monex`: batch driver for forging generator sets, building map families
//! and graphs, and measuring their expansion.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::*;

#[derive(Parser)]
#[command(name = "monex", version, about = "Monotone expanders from the Mobius action of SL2")]
struct Cli {
    /// TOML file with one table per subcommand; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for reports and exports.
    #[arg(long, global = true, default_value = "monex-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forge a generator set from a seed free pair.
    Forge(ForgeArgs),
    /// Re-check the properties of a generator set.
    Verify(VerifyArgs),
    /// Exact images and expansion ratios of interval sets.
    Expand(ExpandArgs),
    /// Discretize a map family into a layered bipartite graph.
    BuildGraph(BuildGraphArgs),
    /// Vertex, spectral and dimension expansion of a graph.
    Measure(MeasureArgs),
    /// Return probabilities and flattening of random walks.
    Walk(WalkArgs),
    /// Growth experiments at scale delta.
    Growth(GrowthArgs),
    /// Convert a graph to another format.
    Export(ExportArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            // help and version go to stdout
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let ctx = Ctx { config: cli.config, out: cli.out };
    let result = match cli.command {
        Command::Forge(a) => forge(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
        Command::Expand(a) => expand(&ctx, a),
        Command::BuildGraph(a) => build_graph(&ctx, a),
        Command::Measure(a) => measure(&ctx, a),
        Command::Walk(a) => walk(&ctx, a),
        Command::Growth(a) => growth(&ctx, a),
        Command::Export(a) => export(&ctx, a),
    };
    if let Err(f) = result {
        eprintln!("monex: {}", f.message());
        std::process::exit(f.exit_code());
    }
}

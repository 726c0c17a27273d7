use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use scalenet_core::graph::{DirectedGraph, SelfLoopPolicy};
use scalenet_core::harness::report::{
    grid_markdown, homophily_markdown, repeats_markdown, run_markdown, verify_markdown,
};
use scalenet_core::harness::{
    directional_homophily, grid_search, load_dataset, synth_dataset, train, train_repeats, verify,
    GridSpec, Suite, SynthKind, SynthParams,
};
use scalenet_core::model::ScaleNetConfig;
use scalenet_core::scale::build_scaled_set;
use serde::Serialize;

/// Scaled directed-graph transforms, ScaleNet training and verification.
#[derive(Parser)]
#[command(name = "scalenet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the scaled adjacency matrices of a graph plus a manifest.
    Transform(TransformArgs),
    /// Train one configuration.
    Train(TrainArgs),
    /// Train every configuration of a grid and rank them.
    Grid(GridArgs),
    /// Directional homophily counts for each scaled matrix.
    Stats(StatsArgs),
    /// Run the built-in verification suites.
    Verify(VerifyArgs),
    /// Generate a synthetic dataset directory.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ReportOut {
    /// Write the JSON report here; the Markdown summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    /// Dataset directory; only graph.tsv is read.
    #[arg(long)]
    data: PathBuf,
    /// 1 for {A, A^T}, 2 for the four two-hop products.
    #[arg(long, default_value_t = 1)]
    scale: usize,
    #[arg(long, default_value = "keep")]
    policy: SelfLoopPolicy,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Model config JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train seeds seed..seed+K and report mean ± std test accuracy.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    data: PathBuf,
    /// Grid JSON: `{"base": <config>, "axes": {...}}`.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "keep")]
    policy: SelfLoopPolicy,
    /// Matrix names; defaults to the six of scales 1 and 2.
    #[arg(long, value_delimiter = ',')]
    matrices: Vec<String>,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    /// Also write the per-seed hermitian rows as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    kind: SynthKind,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
}

const DEFAULT_MATRICES: [&str; 6] = ["A", "A^T", "AA", "AA^T", "A^TA", "A^TA^T"];

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit<T: Serialize>(report: &T, markdown: String, out: &ReportOut) -> Result<()> {
    print!("{markdown}");
    if let Some(path) = &out.out {
        let json = serde_json::to_string_pretty(report)?;
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

/// `A^TA` becomes `AtA`, keeping file names portable.
fn file_stem(name: &str) -> String {
    name.replace("^T", "t")
}

#[derive(Serialize)]
struct ManifestEntry {
    name: String,
    file: String,
    nnz: usize,
}

#[derive(Serialize)]
struct Manifest {
    scale: usize,
    policy: SelfLoopPolicy,
    lineage: String,
    members: Vec<ManifestEntry>,
}

fn transform(args: &TransformArgs) -> Result<()> {
    let path = args.data.join("graph.tsv");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let graph = DirectedGraph::parse_edge_list(&text, None)
        .with_context(|| format!("parsing {}", path.display()))?;
    let set = build_scaled_set(&graph, args.scale, args.policy)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut members = Vec::new();
    for (word, m) in &set.members {
        let name = word.to_string();
        let file = format!("{}.txt", file_stem(&name));
        fs::write(args.out.join(&file), m.to_dump())?;
        println!("{name}\t{}\t{file}", m.nnz());
        members.push(ManifestEntry {
            name,
            file,
            nnz: m.nnz(),
        });
    }
    let manifest = Manifest {
        scale: set.scale,
        policy: set.policy,
        lineage: set.lineage,
        members,
    };
    fs::write(
        args.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(())
}

fn run_train(args: &TrainArgs) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let cfg: ScaleNetConfig = read_json(&args.config)?;
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    if args.repeats == 1 {
        let report = train(&ds, &cfg, args.seed)?;
        emit(&report, run_markdown(&report), &args.report)
    } else {
        let summary = train_repeats(&ds, &cfg, args.seed, args.repeats)?;
        emit(&summary, repeats_markdown(&summary), &args.report)
    }
}

fn run_grid(args: &GridArgs) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let spec: GridSpec = read_json(&args.config)?;
    let report = grid_search(&ds, &spec, args.seed)?;
    emit(&report, grid_markdown(&report), &args.report)
}

fn stats(args: &StatsArgs) -> Result<()> {
    let ds = load_dataset(&args.data)?;
    let names: Vec<String> = if args.matrices.is_empty() {
        DEFAULT_MATRICES.iter().map(|s| s.to_string()).collect()
    } else {
        args.matrices.clone()
    };
    let rows = names
        .iter()
        .map(|name| directional_homophily(&ds, name, args.policy))
        .collect::<Result<Vec<_>, _>>()?;
    emit(&rows, homophily_markdown(&rows), &args.report)
}

/// Returns whether every check passed.
fn run_verify(args: &VerifyArgs) -> Result<bool> {
    let report = verify(args.suite);
    if let Some(path) = &args.csv {
        fs::write(path, report.hermitian_csv())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    emit(&report, verify_markdown(&report), &args.report)?;
    for c in report.failures() {
        eprintln!("FAILED {}/{}: {}", c.suite, c.name, c.detail);
    }
    Ok(report.passed)
}

fn synth(args: &SynthArgs) -> Result<()> {
    let ds = synth_dataset(&SynthParams::new(
        args.kind,
        args.n,
        args.classes,
        args.seed,
    ))?;
    ds.save(&args.out)?;
    println!(
        "wrote {} nodes, {} edges, {} classes to {}",
        ds.n(),
        ds.graph.edge_count(),
        ds.classes,
        args.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Transform(a) => transform(a).map(|_| true),
        Command::Train(a) => run_train(a).map(|_| true),
        Command::Grid(a) => run_grid(a).map(|_| true),
        Command::Stats(a) => stats(a).map(|_| true),
        Command::Verify(a) => run_verify(a),
        Command::Synth(a) => synth(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mrdpg::io::{FitFile, InputEcho, TestFile};
use mrdpg::sim::{self, SimulationSpec};
use mrdpg::{
    fit_multi_rdpg, match_edge_counts, metrics, permutation_test, read_edge_list, AdjacencyMatrix, EdgeListFormat,
    FitOptions, PValueRule, TestOptions,
};

#[derive(Parser, Debug)]
#[command(
    name = "mrdpg",
    version,
    about = "Multiple random dot product graph fitting and testing"
)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the joint model to one or more edge-list files.
    Fit(FitArgs),
    /// Permutation test that all graphs share one distribution.
    Test(TestArgs),
    /// Run a simulation study.
    Simulate(SimulateArgs),
    /// Compare an estimated model file against a reference model file.
    Metrics(MetricsArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Structured,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Edge-list files, one per graph.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    /// Node indices in the files start at 1.
    #[arg(long)]
    one_based: bool,
}

#[derive(Args, Debug)]
struct FitFlags {
    /// Embedding dimension.
    #[arg(long)]
    d: usize,

    #[arg(long, default_value_t = FitOptions::DEFAULT_TOLERANCE)]
    tolerance: f64,

    #[arg(long = "max-iter", default_value_t = FitOptions::DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,

    /// Initializer name.
    #[arg(long, default_value = mrdpg::init::AVERAGE_SPECTRAL)]
    init: String,
}

impl FitFlags {
    fn options(&self, seed: u64) -> FitOptions {
        FitOptions {
            d: self.d,
            max_iterations: self.max_iter,
            tolerance: self.tolerance,
            init: self.init.clone(),
            seed,
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,

    #[command(flatten)]
    fit: FitFlags,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, value_enum, default_value_t = Format::Structured)]
    format: Format,

    /// Output path (standard output when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TestArgs {
    #[command(flatten)]
    input: InputArgs,

    #[command(flatten)]
    fit: FitFlags,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of permutation replicates B.
    #[arg(long, default_value_t = TestOptions::DEFAULT_PERMUTATIONS)]
    permutations: usize,

    /// Down-sample every graph to the smallest edge count first.
    #[arg(long)]
    match_edge_counts: bool,

    /// Seed for --match-edge-counts (defaults to --seed).
    #[arg(long)]
    downsample_seed: Option<u64>,

    /// Count the observed statistic among the replicates, so p > 0.
    #[arg(long)]
    add_one: bool,

    #[arg(long, value_enum, default_value_t = Format::Structured)]
    format: Format,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Scenario name: setting1, setting2, null-typeI or power.
    #[arg(long)]
    setting: String,

    /// Node counts (comma separated).
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,

    #[arg(long)]
    d: Option<usize>,

    /// Graph counts (comma separated).
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,

    /// Setting-2 orderings, ids 1..6 (comma separated).
    #[arg(long, value_delimiter = ',')]
    orderings: Option<Vec<usize>>,

    /// Power separation values (comma separated).
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,

    #[arg(long)]
    replicates: Option<usize>,

    /// Permutation replicates per test.
    #[arg(long)]
    permutations: Option<usize>,

    #[arg(long)]
    alpha: Option<f64>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    tolerance: Option<f64>,

    #[arg(long = "max-iter")]
    max_iter: Option<usize>,

    /// csv: per-replicate table plus `<out>.summary.json`; structured: one JSON report.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    /// Reference model file.
    #[arg(long)]
    truth: PathBuf,

    /// Estimated model file.
    #[arg(long)]
    estimate: PathBuf,

    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<mrdpg::Error> for Failure {
    fn from(err: mrdpg::Error) -> Self {
        if err.is_data_error() {
            Failure::Data(err.into())
        } else if err.is_numerical() {
            Failure::Numerical(err.into())
        } else {
            Failure::Usage(err.into())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(err: io::Error) -> Self {
        Failure::Data(err.into())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {err}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Metrics(args) => cmd_metrics(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(err)) => report(err, 1),
        Err(Failure::Data(err)) => report(err, 2),
        Err(Failure::Numerical(err)) => report(err, 3),
    }
}

fn report(err: anyhow::Error, code: u8) -> ExitCode {
    eprintln!("error: {err:#}");
    ExitCode::from(code)
}

fn load_graphs(input: &InputArgs) -> Result<Vec<(String, AdjacencyMatrix)>, Failure> {
    let format = EdgeListFormat {
        one_based: input.one_based,
    };
    let mut graphs = Vec::with_capacity(input.inputs.len());
    for path in &input.inputs {
        let file = File::open(path)
            .with_context(|| format!("cannot open {}", path.display()))
            .map_err(Failure::Data)?;
        let parsed = read_edge_list(BufReader::new(file), format)
            .with_context(|| path.display().to_string())
            .map_err(Failure::Data)?;
        let source = path.display().to_string();
        graphs.push((source, parsed.list.to_adjacency()));
    }
    if let Some((first, rest)) = graphs.split_first() {
        let n = first.1.n();
        if let Some((src, g)) = rest.iter().find(|(_, g)| g.n() != n) {
            return Err(Failure::Data(anyhow::anyhow!(
                "{src} has {} nodes but {} has {n}",
                g.n(),
                first.0
            )));
        }
    }
    Ok(graphs)
}

fn echo(source: &str, g: &AdjacencyMatrix, original: Option<usize>) -> InputEcho {
    InputEcho {
        source: source.to_string(),
        nodes: g.n(),
        edges: g.edge_count(),
        original_edges: original,
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p)
                .with_context(|| format!("cannot create {}", p.display()))
                .map_err(Failure::Data)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn config_comment<T: serde::Serialize>(command: &str, config: &T) -> Result<String, Failure> {
    let json = serde_json::to_string(config).map_err(|e| Failure::Data(e.into()))?;
    Ok(format!(
        "# mrdpg {command} v{} config={json}\n",
        mrdpg::io::FORMAT_VERSION
    ))
}

fn cmd_fit(args: FitArgs) -> CmdResult {
    let graphs = load_graphs(&args.input)?;
    let options = args.fit.options(args.seed);
    let adj: Vec<AdjacencyMatrix> = graphs.iter().map(|(_, g)| g.clone()).collect();
    let fit = fit_multi_rdpg(&adj, &options)?;

    eprintln!(
        "objective {:.6} after {} iteration(s), converged: {}",
        fit.objective(),
        fit.iterations,
        fit.converged
    );
    for (k, lambda) in fit.model.lambdas().iter().enumerate() {
        let values: Vec<String> = lambda.iter().map(|v| format!("{v:.6}")).collect();
        eprintln!("  lambda[{k}] ({}) = [{}]", graphs[k].0, values.join(", "));
    }

    let inputs = graphs.iter().map(|(src, g)| echo(src, g, None)).collect();
    let file = FitFile::new(&fit, &options, inputs);
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        Format::Structured => file.write(&mut out)?,
        Format::Csv => {
            out.write_all(config_comment("fit", &file.options)?.as_bytes())?;
            writeln!(
                out,
                "graph,{}",
                (1..=file.d)
                    .map(|j| format!("lambda_{j}"))
                    .collect::<Vec<_>>()
                    .join(",")
            )?;
            for (k, lambda) in file.lambdas.iter().enumerate() {
                let cells: Vec<String> = lambda.iter().map(f64::to_string).collect();
                writeln!(out, "{k},{}", cells.join(","))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_test(args: TestArgs) -> CmdResult {
    let graphs = load_graphs(&args.input)?;
    if graphs.len() < 2 {
        return Err(Failure::Usage(anyhow::anyhow!(
            "the test needs at least two edge-list files"
        )));
    }
    let original: Vec<AdjacencyMatrix> = graphs.iter().map(|(_, g)| g.clone()).collect();
    let downsample_seed = args
        .match_edge_counts
        .then(|| args.downsample_seed.unwrap_or(args.seed));
    let tested = match downsample_seed {
        Some(seed) => match_edge_counts(&original, seed)?,
        None => original.clone(),
    };
    let inputs: Vec<InputEcho> = graphs
        .iter()
        .zip(&tested)
        .map(|((src, g), t)| echo(src, t, downsample_seed.map(|_| g.edge_count())))
        .collect();
    for e in &inputs {
        match e.original_edges {
            Some(orig) => eprintln!(
                "{}: {} nodes, {} edges (down-sampled from {orig})",
                e.source, e.nodes, e.edges
            ),
            None => eprintln!("{}: {} nodes, {} edges", e.source, e.nodes, e.edges),
        }
    }

    let options = TestOptions {
        permutations: args.permutations,
        seed: args.seed,
        fit: args.fit.options(args.seed),
        p_value_rule: if args.add_one {
            PValueRule::AddOne
        } else {
            PValueRule::Plain
        },
    };
    eprintln!("running {} permutation replicates", options.permutations);
    let result = permutation_test(&tested, &options)?;
    eprintln!("T = {:.6}, p = {}", result.statistic, result.p_value);

    let file = TestFile::new(&result, inputs, downsample_seed);
    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        Format::Structured => file.write(&mut out)?,
        Format::Csv => {
            #[derive(serde::Serialize)]
            struct Echo<'a> {
                statistic: f64,
                p_value: f64,
                downsample_seed: Option<u64>,
                options: &'a TestOptions,
                inputs: &'a [InputEcho],
            }
            let header = Echo {
                statistic: file.statistic,
                p_value: file.p_value,
                downsample_seed,
                options: &file.options,
                inputs: &file.inputs,
            };
            out.write_all(config_comment("test", &header)?.as_bytes())?;
            writeln!(out, "replicate,statistic")?;
            for (b, t) in file.null_statistics.iter().enumerate() {
                writeln!(out, "{},{t}", b + 1)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let mut spec = SimulationSpec::new(&args.setting);
    spec.seed = args.seed;
    if let Some(v) = args.n {
        spec.n = v;
    }
    if let Some(v) = args.d {
        spec.d = v;
    }
    if let Some(v) = args.k {
        spec.k = v;
    }
    if let Some(v) = args.orderings {
        spec.orderings = v;
    }
    if let Some(v) = args.r {
        spec.r = v;
    }
    if let Some(v) = args.replicates {
        spec.replicates = v;
    }
    if let Some(v) = args.permutations {
        spec.test_permutations = v;
    }
    if let Some(v) = args.alpha {
        spec.alpha = v;
    }
    if let Some(v) = args.tolerance {
        spec.tolerance = v;
    }
    if let Some(v) = args.max_iter {
        spec.max_iterations = v;
    }
    let scenario = sim::scenarios().get(&spec.setting)?;
    scenario.validate(&spec)?;
    eprintln!(
        "running {} with {} replicate(s), seed {}",
        spec.setting, spec.replicates, spec.seed
    );
    let report = scenario.run(&spec)?;

    match args.format {
        Format::Structured => {
            let mut out = open_out(args.out.as_deref())?;
            serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::Data(e.into()))?;
            writeln!(out)?;
            out.flush()?;
        }
        Format::Csv => {
            let mut out = open_out(args.out.as_deref())?;
            out.write_all(config_comment("simulate", report.spec())?.as_bytes())?;
            report.write_csv(&mut out)?;
            out.flush()?;
            let summary = report.summary_json()?;
            match &args.out {
                Some(path) => {
                    let mut name = path.as_os_str().to_owned();
                    name.push(".summary.json");
                    std::fs::write(PathBuf::from(name), summary + "\n")?;
                }
                None => eprintln!("{summary}"),
            }
        }
    }
    Ok(())
}

fn cmd_metrics(args: MetricsArgs) -> CmdResult {
    let read = |p: &Path| -> Result<FitFile, Failure> {
        let file = File::open(p)
            .with_context(|| format!("cannot open {}", p.display()))
            .map_err(Failure::Data)?;
        Ok(FitFile::read(BufReader::new(file))?)
    };
    let truth = read(&args.truth)?.to_fit()?.model;
    let estimate = read(&args.estimate)?.to_fit()?.model;
    let report = serde_json::json!({
        "format": "mrdpg-metrics",
        "version": mrdpg::io::FORMAT_VERSION,
        "truth": args.truth.display().to_string(),
        "estimate": args.estimate.display().to_string(),
        "subspace_distance": metrics::subspace_distance(estimate.u(), truth.u())?,
        "adjacency_error": metrics::adjacency_error(&truth, &estimate)?,
    });
    let mut out = open_out(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::Data(e.into()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

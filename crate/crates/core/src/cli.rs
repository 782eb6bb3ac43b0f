//! Command-line front end. Flags override values from a `--config` JSON file,
//! which override built-in defaults.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use ndarray::Array2;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::bench::bench_scaling;
use crate::dictionary::{embed, train_dictionary, TrainConfig, DEFAULT_ALPHA};
use crate::error::{param, Error, Result};
use crate::graph::{
    build_representation, degrees, gen_sbm, node_distribution, planted_partition, DistributionMode, Graph,
    GraphDataset, RepresentationKind,
};
use crate::io::{self, GraphFile, LoadedGraph};
use crate::solvers::{solve_srfgw, solve_srgw, InitStrategy, PhaseTimings, SolveResult, SolverConfig};
use crate::tasks::{
    ami, cluster_graphs, complete_graph, partition_adjacency, partition_solver_config, rand_index, tune_partition,
    CompletionConfig, CompletionProblem, PartitionResult, PartitionSetting, RepresentationSearch,
};
use crate::tasks::partition::{DEFAULT_B_GRID, HEAT_RANGE};

/// Entries of `h̄` above this count as support in result files.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "srgw", version, about = "Semi-relaxed Gromov-Wasserstein graph toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a stochastic block model graph.
    GenSbm(GenSbmArgs),
    /// Solve srGW (or srFGW for attributed graphs) from a source onto a target.
    Match(MatchArgs),
    /// Partition a graph into at most q clusters.
    Partition(PartitionArgs),
    /// Learn a dictionary atom from a dataset.
    DictLearn(DictLearnArgs),
    /// Embed graphs onto an atom.
    Embed(EmbedArgs),
    /// Cluster the graphs of a dataset by their embeddings.
    Cluster(ClusterArgs),
    /// Complete a partially observed graph.
    Complete(CompleteArgs),
    /// Measure solver runtimes over increasing graph sizes.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(rename_all = "lowercase")]
enum InitArg {
    Uniform,
    Random,
    Kmeans,
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(rename_all = "lowercase")]
enum RepArg {
    Adjacency,
    Sp,
    Heat,
}

#[derive(ValueEnum, Deserialize, Clone, Copy, Debug, PartialEq)]
#[serde(rename_all = "lowercase")]
enum DistArg {
    Uniform,
    Degree,
    Powerlaw,
}

/// Values accepted in a `--config` file, keyed like the long flags with
/// underscores.
#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    jobs: Option<usize>,
    alpha: Option<f64>,
    epsilon: Option<f64>,
    lambda_g: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    init: Option<InitArg>,
    representation: Option<RepArg>,
    heat_t: Option<f64>,
    dist: Option<DistArg>,
    b: Option<f64>,
    q: Option<usize>,
    m: Option<usize>,
    k: Option<usize>,
    tune: Option<bool>,
    sizes: Option<Vec<usize>>,
    p_in: Option<f64>,
    p_out: Option<f64>,
    repeats: Option<usize>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    lr: Option<f64>,
    total_nodes: Option<usize>,
}

#[derive(Args, Debug)]
struct CommonArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum number of parallel solves.
    #[arg(long)]
    jobs: Option<usize>,
    /// JSON file with default values for the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "lambda-g")]
    lambda_g: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    #[arg(long, value_enum)]
    init: Option<InitArg>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    #[arg(long, value_enum)]
    representation: Option<RepArg>,
    #[arg(long = "heat-t")]
    heat_t: Option<f64>,
    #[arg(long, value_enum)]
    dist: Option<DistArg>,
    /// Power-law exponent of the node distribution.
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args, Debug)]
struct GenSbmArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Block sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long = "p-in")]
    p_in: Option<f64>,
    #[arg(long = "p-out")]
    p_out: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct MatchArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    graph_opts: GraphArgs,
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the coupling as dense CSV next to the output.
    #[arg(long = "dump-coupling")]
    dump_coupling: bool,
}

#[derive(Args, Debug)]
struct PartitionArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    graph_opts: GraphArgs,
    #[arg(long = "graph")]
    graph_path: Option<PathBuf>,
    #[arg(long)]
    q: Option<usize>,
    /// Select b, the representation and ε by modularity.
    #[arg(long)]
    tune: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long = "dump-coupling")]
    dump_coupling: bool,
}

#[derive(Args, Debug)]
struct DictLearnArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    graph_opts: GraphArgs,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long = "batch-size")]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Atom JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Training log CSV; defaults to the output path with a `.log.csv` extension.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    graph_opts: GraphArgs,
    #[arg(long = "graph")]
    graph_path: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    atom: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    graph_opts: GraphArgs,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    atom: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CompleteArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Observed graph; its nodes come first in the completed graph.
    #[arg(long = "graph")]
    graph_path: Option<PathBuf>,
    #[arg(long)]
    atom: PathBuf,
    #[arg(long = "total-nodes")]
    total_nodes: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// CSV output.
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on usage or validation errors, 2 when a
/// solver fails.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().filter_or("SRGW_LOG", "error")).try_init();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver(_) | Error::NonFinite(_) | Error::Infeasible(_) => 2,
        _ => 1,
    }
}

fn load_config(common: &CommonArgs) -> Result<ConfigFile> {
    match &common.config {
        Some(p) => io::read_json(p),
        None => Ok(ConfigFile::default()),
    }
}

fn with_pool<F: FnOnce() -> Result<()> + Send>(jobs: Option<usize>, f: F) -> Result<()> {
    match jobs {
        None => f(),
        Some(0) => Err(param("jobs", "must be at least 1")),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            pool.install(f)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    let common = match &command {
        Command::GenSbm(a) => &a.common,
        Command::Match(a) => &a.common,
        Command::Partition(a) => &a.common,
        Command::DictLearn(a) => &a.common,
        Command::Embed(a) => &a.common,
        Command::Cluster(a) => &a.common,
        Command::Complete(a) => &a.common,
        Command::Bench(a) => &a.common,
    };
    let cfg = load_config(common)?;
    let jobs = common.jobs.or(cfg.jobs);
    with_pool(jobs, move || match command {
        Command::GenSbm(a) => cmd_gen_sbm(a, &cfg),
        Command::Match(a) => cmd_match(a, &cfg),
        Command::Partition(a) => cmd_partition(a, &cfg),
        Command::DictLearn(a) => cmd_dict_learn(a, &cfg),
        Command::Embed(a) => cmd_embed(a, &cfg),
        Command::Cluster(a) => cmd_cluster(a, &cfg),
        Command::Complete(a) => cmd_complete(a, &cfg),
        Command::Bench(a) => cmd_bench(a, &cfg),
    })
}

fn seed(common: &CommonArgs, cfg: &ConfigFile) -> u64 {
    common.seed.or(cfg.seed).unwrap_or(0)
}

fn solver_config(args: &SolverArgs, cfg: &ConfigFile, seed: u64, base: SolverConfig) -> SolverConfig {
    let mut s = base;
    s.seed = seed;
    if let Some(t) = args.tol.or(cfg.tol) {
        s.rel_tolerance = t;
    }
    if let Some(i) = args.max_iter.or(cfg.max_iter) {
        s.max_iterations = i;
    }
    s.epsilon = args.epsilon.or(cfg.epsilon).or(s.epsilon);
    s.lambda_g = args.lambda_g.or(cfg.lambda_g).or(s.lambda_g);
    s.alpha = args.alpha.or(cfg.alpha).or(s.alpha);
    s.init = match args.init.or(cfg.init) {
        Some(InitArg::Uniform) => InitStrategy::OuterUniform,
        Some(InitArg::Random) => InitStrategy::OuterRandom(seed),
        Some(InitArg::Kmeans) => InitStrategy::KmeansHard,
        None => match s.init {
            InitStrategy::OuterRandom(_) => InitStrategy::OuterRandom(seed),
            other => other,
        },
    };
    s
}

struct GraphOptions {
    representation: RepresentationKind,
    dist: Option<DistArg>,
    b: f64,
}

fn graph_options(args: &GraphArgs, cfg: &ConfigFile) -> Result<GraphOptions> {
    let heat_t = args.heat_t.or(cfg.heat_t);
    let representation = match args.representation.or(cfg.representation) {
        None | Some(RepArg::Adjacency) => RepresentationKind::Adjacency,
        Some(RepArg::Sp) => RepresentationKind::ShortestPath,
        Some(RepArg::Heat) => RepresentationKind::HeatKernel(heat_t.unwrap_or(1.0)),
    };
    if let Some(t) = heat_t {
        if !(t > 0.0) {
            return Err(param("heat_t", format!("must be positive, got {t}")));
        }
    }
    Ok(GraphOptions { representation, dist: args.dist.or(cfg.dist), b: args.b.or(cfg.b).unwrap_or(0.0) })
}

/// Structure and distribution of a loaded graph. The adjacency
/// representation uses the stored matrix as is, so directed and weighted
/// inputs pass through.
fn to_graph(loaded: &LoadedGraph, opts: &GraphOptions) -> Result<Graph> {
    let structure = match opts.representation {
        RepresentationKind::Adjacency => loaded.matrix.clone(),
        kind => build_representation(loaded.matrix.view(), kind)?,
    };
    let n = loaded.matrix.nrows();
    let distribution = match (opts.dist, &loaded.distribution) {
        (Some(DistArg::Uniform), _) | (None, None) => ndarray::Array1::from_elem(n, 1.0 / n as f64),
        (Some(DistArg::Degree), _) => node_distribution(loaded.matrix.view(), DistributionMode::Degree)?,
        (Some(DistArg::Powerlaw), _) => {
            let a = if degrees(loaded.matrix.view()).iter().any(|&d| d == 0.0) { 1.0 } else { 0.0 };
            node_distribution(loaded.matrix.view(), DistributionMode::PowerLaw { a, b: opts.b })?
        }
        (None, Some(h)) => h.clone(),
    };
    Graph::new(structure, distribution, loaded.features.clone())
}

fn load_dataset(dir: &Path, opts: &GraphOptions) -> Result<(Vec<String>, GraphDataset)> {
    let entries = io::load_dataset(dir)?;
    let names = entries
        .iter()
        .map(|(p, _)| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
        .collect();
    let classes: Option<Vec<i64>> = entries.iter().map(|(_, g)| g.class).collect();
    let graphs = entries.iter().map(|(_, g)| to_graph(g, opts)).collect::<Result<Vec<_>>>()?;
    Ok((names, GraphDataset::new(graphs, classes)?))
}

fn require<T>(v: Option<T>, name: &'static str) -> Result<T> {
    v.ok_or_else(|| param(name, "is required"))
}

fn timings_json(t: &PhaseTimings) -> Value {
    json!({
        "gradient_ms": t.gradient.as_secs_f64() * 1e3,
        "direction_ms": t.direction.as_secs_f64() * 1e3,
        "linesearch_ms": t.linesearch.as_secs_f64() * 1e3,
        "total_ms": t.total.as_secs_f64() * 1e3,
    })
}

fn dump_path(out: &Path) -> PathBuf {
    out.with_extension("coupling.csv")
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    io::matrix_rows(m.view())
}

fn dense_labels(classes: &[i64]) -> Vec<usize> {
    let mut seen: Vec<i64> = Vec::new();
    classes
        .iter()
        .map(|c| match seen.iter().position(|s| s == c) {
            Some(i) => i,
            None => {
                seen.push(*c);
                seen.len() - 1
            }
        })
        .collect()
}

fn cmd_gen_sbm(a: GenSbmArgs, cfg: &ConfigFile) -> Result<()> {
    let sizes = require(a.sizes.or(cfg.sizes.clone()), "sizes")?;
    let p_in = require(a.p_in.or(cfg.p_in), "p_in")?;
    let p_out = require(a.p_out.or(cfg.p_out), "p_out")?;
    let s = gen_sbm(&sizes, planted_partition(sizes.len(), p_in, p_out).view(), seed(&a.common, cfg))?;
    let mut file = GraphFile::from_adjacency(s.adjacency.view(), false);
    file.labels = Some(s.labels);
    io::save_graph(&a.out, &file)?;
    println!("wrote {} nodes, {} edges to {}", file.n, file.edges.len(), a.out.display());
    Ok(())
}

fn cmd_match(a: MatchArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed(&a.common, cfg);
    let solver = solver_config(&a.solver, cfg, seed, SolverConfig::default());
    let opts = graph_options(&a.graph_opts, cfg)?;
    let source = to_graph(&io::load_graph(&a.source)?, &opts)?;
    let target = to_graph(&io::load_graph(&a.target)?, &opts)?;
    let r: SolveResult = match (&source.features, &target.features) {
        (Some(f), Some(fbar)) => solve_srfgw(
            source.structure.view(),
            f.view(),
            source.distribution.view(),
            target.structure.view(),
            fbar.view(),
            solver.alpha.unwrap_or(DEFAULT_ALPHA),
            &solver,
        )?,
        _ if solver.alpha.is_some() => {
            return Err(param("alpha", "requires features on both source and target"));
        }
        _ => solve_srgw(source.structure.view(), source.distribution.view(), target.structure.view(), &solver)?,
    };
    let mut out = r.to_json(SUPPORT_TOL);
    out["timings"] = timings_json(&r.timings);
    io::write_json(&a.out, &out)?;
    if a.dump_coupling {
        io::write_matrix_csv(&dump_path(&a.out), r.coupling.view())?;
    }
    info!("match finished after {} iterations", r.iterations);
    println!("loss {} after {} iterations", r.loss, r.iterations);
    Ok(())
}

fn partition_json(r: &PartitionResult, q: usize, truth: Option<&[usize]>) -> Result<Value> {
    let mut v = json!({
        "q": q,
        "labels": r.labels,
        "hbar": r.hbar.to_vec(),
        "num_clusters": r.num_clusters(),
        "modularity": r.modularity,
        "loss": r.loss,
        "setting": r.setting,
    });
    if let Some(t) = truth {
        v["ami"] = json!(ami(t, &r.labels)?);
    }
    Ok(v)
}

fn cmd_partition(a: PartitionArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed(&a.common, cfg);
    let base = solver_config(&a.solver, cfg, seed, partition_solver_config());
    let q = require(a.q.or(cfg.q), "q")?;
    let path = require(a.graph_path, "graph")?;
    let loaded = io::load_graph(&path)?;
    let adj = loaded.matrix.view();
    let epsilon = base.epsilon;
    let tune = a.tune || cfg.tune.unwrap_or(false);
    let r = if tune {
        let reps = match a.graph_opts.representation.or(cfg.representation) {
            Some(RepArg::Adjacency) => vec![RepresentationSearch::Fixed(RepresentationKind::Adjacency)],
            Some(RepArg::Sp) => vec![RepresentationSearch::Fixed(RepresentationKind::ShortestPath)],
            Some(RepArg::Heat) => match a.graph_opts.heat_t.or(cfg.heat_t) {
                Some(t) => vec![RepresentationSearch::Fixed(RepresentationKind::HeatKernel(t))],
                None => vec![RepresentationSearch::HeatRange(HEAT_RANGE.0, HEAT_RANGE.1)],
            },
            None => vec![
                RepresentationSearch::Fixed(RepresentationKind::Adjacency),
                RepresentationSearch::Fixed(RepresentationKind::ShortestPath),
                RepresentationSearch::HeatRange(HEAT_RANGE.0, HEAT_RANGE.1),
            ],
        };
        let b_grid: Vec<f64> = match a.graph_opts.b.or(cfg.b) {
            Some(b) => vec![b],
            None => DEFAULT_B_GRID.to_vec(),
        };
        tune_partition(adj, q, &b_grid, &reps, &[epsilon], &base)?
    } else {
        let opts = graph_options(&a.graph_opts, cfg)?;
        partition_adjacency(adj, q, PartitionSetting::new(opts.representation, opts.b, epsilon), &base)?
    };
    let out = partition_json(&r, q, loaded.labels.as_deref())?;
    io::write_json(&a.out, &out)?;
    if a.dump_coupling {
        io::write_matrix_csv(&dump_path(&a.out), r.coupling.view())?;
    }
    println!("{} clusters, modularity {}", r.num_clusters(), r.modularity.unwrap_or(f64::NAN));
    Ok(())
}

fn cmd_dict_learn(a: DictLearnArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed(&a.common, cfg);
    let opts = graph_options(&a.graph_opts, cfg)?;
    let (_, dataset) = load_dataset(&a.dataset, &opts)?;
    let defaults = TrainConfig::default();
    let solver = solver_config(&a.solver, cfg, seed, defaults.solver.clone());
    let config = TrainConfig {
        atom_size: a.m.or(cfg.m).unwrap_or(defaults.atom_size),
        batch_size: a.batch_size.or(cfg.batch_size).unwrap_or(defaults.batch_size),
        learning_rate: a.lr.or(cfg.lr).unwrap_or(defaults.learning_rate),
        max_epochs: a.epochs.or(cfg.epochs).unwrap_or(defaults.max_epochs),
        alpha: solver.alpha,
        solver,
        seed,
        ..defaults
    };
    let (atom, log) = train_dictionary(&dataset, &config)?;
    io::save_atom(&a.out, &atom)?;
    let log_path = a.log.unwrap_or_else(|| a.out.with_extension("log.csv"));
    std::fs::write(&log_path, log.to_csv())?;
    println!(
        "atom of size {} written to {}, best epoch {}",
        atom.m(),
        a.out.display(),
        log.best_epoch
    );
    Ok(())
}

fn cmd_embed(a: EmbedArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed(&a.common, cfg);
    let solver = solver_config(&a.solver, cfg, seed, SolverConfig::default());
    let opts = graph_options(&a.graph_opts, cfg)?;
    let atom = io::load_atom(&a.atom)?;
    let (names, graphs) = match (a.graph_path, a.dataset) {
        (Some(p), None) => {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (vec![name], vec![to_graph(&io::load_graph(&p)?, &opts)?])
        }
        (None, Some(d)) => {
            let (names, ds) = load_dataset(&d, &opts)?;
            (names, ds.graphs)
        }
        _ => return Err(Error::InvalidInput("give exactly one of --graph and --dataset".into())),
    };
    let mut items = Vec::with_capacity(graphs.len());
    for (name, g) in names.iter().zip(&graphs) {
        let e = embed(g, &atom, &solver)?;
        items.push(json!({
            "name": name,
            "hbar": e.hbar.to_vec(),
            "support": crate::solvers::support(e.hbar.view(), SUPPORT_TOL),
            "loss": e.loss,
        }));
    }
    io::write_json(&a.out, &json!({ "m": atom.m(), "graphs": items }))?;
    println!("embedded {} graphs", graphs.len());
    Ok(())
}

fn cmd_cluster(a: ClusterArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed(&a.common, cfg);
    let solver = solver_config(&a.solver, cfg, seed, SolverConfig::default());
    let opts = graph_options(&a.graph_opts, cfg)?;
    let (names, dataset) = load_dataset(&a.dataset, &opts)?;
    let atom = io::load_atom(&a.atom)?;
    let k = a.k.or(cfg.k).unwrap_or(2);
    let r = cluster_graphs(&dataset, &atom, k, &solver, seed)?;
    let mut out = json!({
        "k": k,
        "names": names,
        "labels": r.labels,
        "embeddings": rows(&r.embeddings),
        "inertia": r.inertia,
    });
    if let Some(classes) = &dataset.labels {
        let truth = dense_labels(classes);
        out["rand_index"] = json!(rand_index(&truth, &r.labels)?);
        out["ami"] = json!(ami(&truth, &r.labels)?);
    }
    io::write_json(&a.out, &out)?;
    println!("clustered {} graphs into {k} groups", dataset.len());
    Ok(())
}

fn cmd_complete(a: CompleteArgs, cfg: &ConfigFile) -> Result<()> {
    let seed = seed(&a.common, cfg);
    let solver = solver_config(&a.solver, cfg, seed, SolverConfig::default());
    let path = require(a.graph_path, "graph")?;
    let loaded = io::load_graph(&path)?;
    let total_nodes = require(a.total_nodes.or(cfg.total_nodes), "total_nodes")?;
    let problem = CompletionProblem {
        observed: loaded.matrix,
        total_nodes,
        observed_features: loaded.features,
        atom: io::load_atom(&a.atom)?,
    };
    let gd = CompletionConfig { seed, ..Default::default() };
    let r = complete_graph(&problem, &solver, &gd)?;
    let directed = crate::graph::max_asymmetry(r.structure.view()) > 0.0;
    let mut file = GraphFile::from_adjacency(r.structure.view(), directed);
    file.features = r.features.as_ref().map(rows);
    let out = json!({
        "graph": file,
        "n_observed": problem.n_obs(),
        "loss": r.loss,
        "iterations": r.iterations,
        "loss_trajectory": r.loss_trajectory,
    });
    io::write_json(&a.out, &out)?;
    println!("completed {} nodes after {} iterations", total_nodes, r.iterations);
    Ok(())
}

fn cmd_bench(a: BenchArgs, cfg: &ConfigFile) -> Result<()> {
    let sizes = a.sizes.or(cfg.sizes.clone()).unwrap_or_else(|| vec![100, 200, 400]);
    let m = a.m.or(cfg.m).unwrap_or(10);
    let repeats = a.repeats.or(cfg.repeats).unwrap_or(5);
    let rep = bench_scaling(&sizes, m, repeats, seed(&a.common, cfg))?;
    std::fs::write(&a.out, rep.to_csv())?;
    println!(
        "direction-phase slope {:.3}, ratio largest/smallest {:.3}",
        rep.direction_slope,
        rep.direction_ratio()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        run_command(std::iter::once("srgw").chain(args.iter().copied()))
    }

    #[test]
    fn help_and_version_exit_zero() {
        assert_eq!(run(&["--help"]), 0);
        assert_eq!(run(&["--version"]), 0);
    }

    #[test]
    fn unknown_flag_and_subcommand_exit_one() {
        assert_eq!(run(&["match", "--bogus"]), 1);
        assert_eq!(run(&["frobnicate"]), 1);
        assert_eq!(run(&[]), 1);
    }

    #[test]
    fn missing_required_value_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("g.json");
        assert_eq!(run(&["gen-sbm", "--sizes", "5,5", "--p-in", "0.5", "--out", out.to_str().unwrap()]), 1);
    }

    #[test]
    fn config_is_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.json");
        std::fs::write(&cfg_path, r#"{"sizes": [4, 4], "p_in": 1.0, "p_out": 0.0, "seed": 3}"#).unwrap();
        let out = dir.path().join("g.json");
        let code = run(&[
            "gen-sbm",
            "--config",
            cfg_path.to_str().unwrap(),
            "--sizes",
            "3,3,3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let g: GraphFile = io::read_json(&out).unwrap();
        assert_eq!(g.n, 9);
        // Three disjoint triangles.
        assert_eq!(g.edges.len(), 9);
    }

    #[test]
    fn unknown_config_key_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let cfg_path = dir.path().join("c.json");
        std::fs::write(&cfg_path, r#"{"nope": 1}"#).unwrap();
        let out = dir.path().join("g.json");
        assert_eq!(run(&["gen-sbm", "--config", cfg_path.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
    }

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(exit_code(&Error::Solver("x".into())), 2);
        assert_eq!(exit_code(&Error::NonFinite("x".into())), 2);
        assert_eq!(exit_code(&Error::InvalidInput("x".into())), 1);
        assert_eq!(exit_code(&param("q", "bad")), 1);
    }

    #[test]
    fn dense_labels_in_order_of_appearance() {
        assert_eq!(dense_labels(&[7, -1, 7, 3]), vec![0, 1, 0, 2]);
    }
}

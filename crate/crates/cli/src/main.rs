//! `front`: extract learngenes from checkpoints and initialize variable-size models.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use front_core::analysis::{aggregate_similarity, compaction, energy_spectrum};
use front_core::container::{
    grouped_names, read_container, resolve_groups, write_container, Container,
    GroupingConfig, PassthroughPolicy, PASSTHROUGH_PREFIX,
};
use front_core::dct::{dct_full, idct_full};
use front_core::learngene::{extract_with_overrides, stack_group, FrequencyRatio, Learngene};
use front_core::refine::{refine_demo_with, RefineOptions};
use front_core::reg::{reg_terms_for_weights, total_loss, RegConfig, DEFAULT_GAMMA, DEFAULT_LAMBDA};
use front_core::resize::{reconstruct, unstack_layers, TargetDims};
use front_core::tensor::Tensor;

#[derive(Parser)]
#[command(name = "front", version, about = "DCT learngenes for variable-size model initialization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract low-frequency learngene blocks from a checkpoint.
    Extract(ExtractArgs),
    /// Build target-model weights from a learngene.
    Init(InitArgs),
    /// Spectral diagnostics.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Evaluate the high-frequency regularizer.
    Regloss(ReglossArgs),
    /// Check DCT round-trip error, or compare against a reference container.
    Roundtrip(RoundtripArgs),
    /// Train a toy network with the regularizer and print per-step CSV.
    RefineDemo(RefineArgs),
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_parser = parse_ratio)]
    ratio: FrequencyRatio,
    #[arg(long)]
    output: PathBuf,
    /// Per-group ratio, `<group>=<r>`; may be repeated.
    #[arg(long = "ratio-override", value_parser = parse_override)]
    ratio_override: Vec<(String, FrequencyRatio)>,
}

#[derive(Args)]
struct InitArgs {
    #[arg(long)]
    gene: PathBuf,
    #[arg(long = "target-config")]
    target_config: PathBuf,
    /// Layer count for pattern groups; defaults to the target config, then the source.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    depth: Option<u64>,
    /// Per-layer shape of a group, `<group>=<d_in>x<d_out>`; may be repeated.
    #[arg(long, value_parser = parse_dims)]
    dims: Vec<(String, Vec<usize>)>,
    #[arg(long)]
    output: PathBuf,
    /// Target-model container supplying non-group tensors.
    #[arg(long)]
    template: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Energy fraction per normalized-frequency bin.
    Energy {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        bins: u64,
    },
    /// Share of energy inside the low-frequency corner.
    Compaction {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_parser = parse_ratio)]
        ratio: FrequencyRatio,
    },
    /// Cosine similarity of low-frequency corners between two checkpoints.
    Similarity {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_ratio)]
        ratio: FrequencyRatio,
    },
}

#[derive(Args)]
struct Source {
    #[arg(long)]
    input: PathBuf,
    /// Grouping config; without one every tensor is analyzed on its own.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReglossArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = DEFAULT_GAMMA, value_parser = parse_gamma)]
    gamma: f64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA, value_parser = parse_lambda)]
    lambda: f64,
    /// Task loss to mix with the regularizer into `total_loss`.
    #[arg(long = "task-loss", value_parser = parse_finite)]
    task_loss: Option<f64>,
}

#[derive(Args)]
struct RoundtripArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_tol)]
    tol: f64,
    /// Compare `input` against this container instead of a DCT round trip.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    #[arg(long, value_parser = parse_lambda)]
    lambda: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA, value_parser = parse_gamma)]
    gamma: f64,
    #[arg(long, value_parser = parse_positive)]
    lr: Option<f64>,
}

fn parse_finite(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn parse_ratio(s: &str) -> Result<FrequencyRatio, String> {
    FrequencyRatio::new(parse_finite(s)?).map_err(|e| e.to_string())
}

fn parse_gamma(s: &str) -> Result<f64, String> {
    parse_positive(s)
}

fn parse_lambda(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("lambda {v} outside [0, 1]"))
    }
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("tolerance {v} is negative"))
    }
}

fn split_pair(s: &str) -> Result<(&str, &str), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k, v)),
        _ => Err(format!("expected <group>=<value>, got `{s}`")),
    }
}

fn parse_override(s: &str) -> Result<(String, FrequencyRatio), String> {
    let (group, r) = split_pair(s)?;
    Ok((group.to_string(), parse_ratio(r)?))
}

fn parse_dims(s: &str) -> Result<(String, Vec<usize>), String> {
    let (group, dims) = split_pair(s)?;
    let dims = dims
        .split('x')
        .map(|d| match d.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(format!("bad extent `{d}` in `{s}`")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((group.to_string(), dims))
}

enum Failure {
    Usage(String),
    Compute(String),
    Tolerance(String),
}

impl From<front_core::Error> for Failure {
    fn from(e: front_core::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn load_config(path: &PathBuf) -> Result<GroupingConfig, Failure> {
    GroupingConfig::load(path).map_err(|e| Failure::Compute(format!("{}: {e}", path.display())))
}

/// Named analysis units: stacked groups under a config, else every tensor.
fn units(container: &Container, config: Option<&GroupingConfig>) -> Result<Vec<(String, Tensor)>, Failure> {
    match config {
        None => Ok(container.tensors().into_iter().collect()),
        Some(cfg) => resolve_groups(cfg, container)?
            .into_iter()
            .map(|(spec, members)| Ok((spec.name.clone(), stack_group(&spec, &members)?)))
            .collect(),
    }
}

fn cmd_extract(args: ExtractArgs) -> CmdResult {
    let cfg = load_config(&args.config)?;
    let input = read_container(&args.input)?;
    let mut overrides = cfg.ratio_overrides()?;
    for (group, r) in args.ratio_override {
        if cfg.group(&group).is_none() {
            return Err(Failure::Usage(format!("--ratio-override names unknown group `{group}`")));
        }
        overrides.insert(group, r);
    }
    let groups = resolve_groups(&cfg, &input)?
        .into_iter()
        .map(|(spec, members)| {
            let stacked = stack_group(&spec, &members)?;
            Ok((spec, stacked))
        })
        .collect::<front_core::Result<Vec<_>>>()?;
    let gene = extract_with_overrides(&groups, args.ratio, &overrides)?;
    let mut out = gene.to_container()?;
    if cfg.passthrough_policy != PassthroughPolicy::Omit {
        let grouped = grouped_names(&cfg)?;
        for (name, entry) in input.entries() {
            if !grouped.contains(name) {
                out.insert(format!("{PASSTHROUGH_PREFIX}{name}"), entry.dtype, entry.tensor.clone())?;
            }
        }
    }
    write_container(&args.output, &out)?;
    println!("params={}", gene.param_count());
    Ok(())
}

fn cmd_init(args: InitArgs) -> CmdResult {
    let cfg = load_config(&args.target_config)?;
    let gene_file = read_container(&args.gene)?;
    let gene = Learngene::from_container(&gene_file)?;
    let template = args.template.as_ref().map(read_container).transpose()?;
    let mut dims: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (group, d) in args.dims {
        if cfg.group(&group).is_none() {
            return Err(Failure::Usage(format!("--dims names unknown group `{group}`")));
        }
        dims.insert(group, d);
    }

    let mut out = Container::new();
    for g in &cfg.groups {
        let block = gene
            .blocks
            .get(&g.name)
            .ok_or_else(|| Failure::Compute(format!("learngene has no group `{}`", g.name)))?;
        let stacked = g.stacks();
        if stacked != block.stacked {
            return Err(Failure::Compute(format!(
                "group `{}` is {} in the target config but {} in the learngene",
                g.name,
                if stacked { "stacked" } else { "unstacked" },
                if block.stacked { "stacked" } else { "unstacked" },
            )));
        }
        let names = if g.layer_pattern.is_some() {
            let depth = args
                .depth
                .map(|d| d as usize)
                .or(g.layer_count)
                .unwrap_or(block.source_dims[0]);
            g.member_names(Some(depth))?
        } else {
            g.member_names(None)?
        };
        let source_member = if stacked { &block.source_dims[1..] } else { &block.source_dims[..] };
        let member = dims.get(&g.name).map_or(source_member, |d| d.as_slice());
        let target = if stacked {
            std::iter::once(names.len()).chain(member.iter().copied()).collect()
        } else {
            member.to_vec()
        };
        let weights = reconstruct(&block.block, &TargetDims::new(target)?)?;
        if stacked {
            for (name, t) in unstack_layers(&weights, &names)? {
                out.insert_f64(name, t)?;
            }
        } else {
            out.insert_f64(names[0].clone(), weights)?;
        }
    }

    let carried: BTreeMap<&str, _> = gene_file
        .entries()
        .iter()
        .filter_map(|(n, e)| n.strip_prefix(PASSTHROUGH_PREFIX).map(|n| (n, e)))
        .collect();
    let grouped = grouped_names(&cfg)?;
    let policy = cfg.passthrough_policy;
    match &template {
        Some(t) => {
            for (name, entry) in t.entries() {
                if grouped.contains(name) || out.get(name).is_some() {
                    continue;
                }
                let (dtype, tensor) = match policy {
                    PassthroughPolicy::ZeroFill => {
                        (entry.dtype, Tensor::zeros(entry.tensor.shape().to_vec())?)
                    }
                    PassthroughPolicy::CopyIfShapeMatches => match carried.get(name.as_str()) {
                        Some(src) if src.tensor.shape() == entry.tensor.shape() => {
                            (src.dtype, src.tensor.clone())
                        }
                        _ => (entry.dtype, entry.tensor.clone()),
                    },
                    PassthroughPolicy::Omit => (entry.dtype, entry.tensor.clone()),
                };
                out.insert(name.clone(), dtype, tensor)?;
            }
        }
        None => {
            for (name, src) in carried {
                let tensor = match policy {
                    PassthroughPolicy::Omit => continue,
                    PassthroughPolicy::ZeroFill => Tensor::zeros(src.tensor.shape().to_vec())?,
                    PassthroughPolicy::CopyIfShapeMatches => src.tensor.clone(),
                };
                out.insert(name, src.dtype, tensor)?;
            }
        }
    }
    write_container(&args.output, &out)?;
    Ok(())
}

fn cmd_analyze(cmd: AnalyzeCommand) -> CmdResult {
    match cmd {
        AnalyzeCommand::Energy { source, bins } => {
            let cfg = source.config.as_ref().map(load_config).transpose()?;
            let container = read_container(&source.input)?;
            println!("name,bin,fraction");
            for (name, t) in units(&container, cfg.as_ref())? {
                for (b, f) in energy_spectrum(&t, bins as usize)?.iter().enumerate() {
                    println!("{name},{b},{f:?}");
                }
            }
        }
        AnalyzeCommand::Compaction { source, ratio } => {
            let cfg = source.config.as_ref().map(load_config).transpose()?;
            let container = read_container(&source.input)?;
            println!("name,compaction");
            for (name, t) in units(&container, cfg.as_ref())? {
                println!("{name},{:?}", compaction(&t, ratio));
            }
        }
        AnalyzeCommand::Similarity { a, b, config, ratio } => {
            let cfg = config.as_ref().map(load_config).transpose()?;
            let ua = units(&read_container(&a)?, cfg.as_ref())?;
            let ub: BTreeMap<String, Tensor> = units(&read_container(&b)?, cfg.as_ref())?.into_iter().collect();
            let mut pairs = Vec::with_capacity(ua.len());
            for (name, ta) in &ua {
                let tb = ub
                    .get(name)
                    .ok_or_else(|| Failure::Compute(format!("`{name}` missing from {}", b.display())))?;
                pairs.push((name, ta, tb));
            }
            println!("name,similarity");
            for (name, ta, tb) in &pairs {
                println!("{name},{:?}", aggregate_similarity(&[(ta, tb)], ratio)?);
            }
            let all: Vec<(&Tensor, &Tensor)> = pairs.iter().map(|(_, a, b)| (*a, *b)).collect();
            println!("aggregate,{:?}", aggregate_similarity(&all, ratio)?);
        }
    }
    Ok(())
}

fn cmd_regloss(args: ReglossArgs) -> CmdResult {
    let cfg = args.source.config.as_ref().map(load_config).transpose()?;
    let container = read_container(&args.source.input)?;
    let weights: BTreeMap<String, Tensor> = units(&container, cfg.as_ref())?.into_iter().collect();
    let reg_cfg = RegConfig::uniform(args.gamma, args.lambda)?;
    let terms = reg_terms_for_weights(&weights, &reg_cfg)?;
    for (name, v) in &terms {
        println!("group.{name}={v:?}");
    }
    let reg: f64 = terms.values().sum();
    println!("reg_loss={reg:?}");
    if let Some(task) = args.task_loss {
        println!("total_loss={:?}", total_loss(task, reg, args.lambda)?);
    }
    Ok(())
}

/// `max|a − b| / max|b|`, falling back to the absolute error when `b` is zero.
fn relative_error(a: &Tensor, b: &Tensor) -> f64 {
    let diff = a.max_abs_diff(b).unwrap_or(f64::INFINITY);
    let scale = b.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn cmd_roundtrip(args: RoundtripArgs) -> CmdResult {
    let input = read_container(&args.input)?;
    let errors: Vec<(String, f64)> = match &args.reference {
        None => input
            .tensors()
            .into_iter()
            .map(|(name, t)| {
                let back = idct_full(&dct_full(&t));
                let e = relative_error(&back, &t);
                (name, e)
            })
            .collect(),
        Some(path) => {
            let reference = read_container(path)?;
            let mut errors = Vec::new();
            let names: BTreeSet<&str> = input.names().chain(reference.names()).collect();
            for name in names {
                let (a, b) = match (input.tensor(name), reference.tensor(name)) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Failure::Compute(format!("`{name}` is not in both containers"))),
                };
                if a.shape() != b.shape() {
                    return Err(Failure::Compute(format!(
                        "`{name}` has shape {:?} vs {:?}",
                        a.shape(),
                        b.shape()
                    )));
                }
                errors.push((name.to_string(), relative_error(a, b)));
            }
            errors
        }
    };
    println!("name,relative_error");
    let mut worst = 0.0f64;
    for (name, e) in &errors {
        println!("{name},{e:?}");
        worst = worst.max(*e);
    }
    println!("max_relative_error={worst:?}");
    if worst > args.tol {
        return Err(Failure::Tolerance(format!("error {worst:?} exceeds tolerance {:?}", args.tol)));
    }
    Ok(())
}

fn cmd_refine(args: RefineArgs) -> CmdResult {
    let cfg = RegConfig::uniform(args.gamma, args.lambda)?;
    let mut opts = RefineOptions::default();
    if let Some(lr) = args.lr {
        opts.learning_rate = lr;
    }
    let report = refine_demo_with(args.seed, args.steps as usize, &cfg, &opts)?;
    print!("{}", report.to_csv());
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("FRONT_THREADS") else {
        return Ok(());
    };
    let threads = match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => n,
        _ => return Err(Failure::Usage(format!("FRONT_THREADS must be a positive integer, got `{raw}`"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Compute(e.to_string()))
}

fn run(cli: Cli) -> CmdResult {
    configure_threads()?;
    match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Init(a) => cmd_init(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Regloss(a) => cmd_regloss(a),
        Command::Roundtrip(a) => cmd_roundtrip(a),
        Command::RefineDemo(a) => cmd_refine(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Tolerance(msg)) => {
            eprintln!("tolerance breach: {msg}");
            ExitCode::from(3)
        }
    }
}

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 size or limit
//! exceeded, 4 the benchmark finished but at least one cell timed out.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{
    self, desk_ladders, full_ladders, BenchSpec, Builder, CellStatus, TaxonomySpec,
};
use crate::compare::{
    check_reduction_map, is_isomorphic, quality_score, CompareError, QualityScore,
    ReductionMapReport,
};
use crate::context::{self, Direction, FormalContext};
use crate::lattice::{
    self, build_addintent, export_dot, export_hierarchy, invariants, InvariantReport,
};
use crate::reduce::{run_reduction, ReductionParams, ReductionTrace};
use crate::taxonomy::{load_taxonomy_tsv, load_wordnet, SynsetGraph};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_TIMEOUT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "lattice-reduce",
    version,
    about = "Concept lattices and taxonomy-driven context reduction"
)]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weighted word pairs (TSV) to a thresholded CXT context.
    Context(ContextArgs),
    /// Build the concept lattice of a CXT context.
    Build(BuildArgs),
    /// Merge related objects and attributes using a taxonomy.
    Reduce(ReduceArgs),
    /// Compare two contexts' lattices, optionally checking a reduction trace.
    Compare(CompareArgs),
    /// Concept hierarchy of a CXT context.
    Hierarchy(HierarchyArgs),
    /// Time lattice construction on random contexts.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ContextArgs {
    /// Pair TSV: object<TAB>attribute<TAB>count.
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value_t = 0.005)]
    pub threshold: f64,
    #[arg(long, default_value = "object_given_attribute")]
    pub direction: Direction,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LatticeFormat {
    Dot,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "dot")]
    pub format: LatticeFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the invariant report CSV here.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = lattice::EXACT_WIDTH_LIMIT)]
    pub exact_width_limit: usize,
}

#[derive(Debug, Args, Clone)]
pub struct ParamArgs {
    #[arg(long, default_value_t = 4)]
    pub hypernym_depth: u32,
    #[arg(long, default_value_t = 4)]
    pub hyponym_depth: u32,
    #[arg(long, default_value_t = 2)]
    pub similar_depth: u32,
    #[arg(long, default_value_t = 30)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.0)]
    pub quality_floor: f64,
    #[arg(long)]
    pub max_senses: Option<usize>,
}

impl ParamArgs {
    pub fn params(&self) -> ReductionParams {
        ReductionParams {
            hypernym_depth: self.hypernym_depth,
            hyponym_depth: self.hyponym_depth,
            similar_depth: self.similar_depth,
            iterations: self.iterations,
            quality_floor: self.quality_floor,
            max_senses: self.max_senses,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// `none`, `tsv:PATH`, `wordnet:DIR`, or a path (directory = WordNet).
    #[arg(long)]
    pub taxonomy: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Merge events as JSON lines.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Original context.
    #[arg(long)]
    pub left: PathBuf,
    /// Second (for example reduced) context. Without it the trace is
    /// replayed over `left`.
    #[arg(long, required_unless_present = "trace")]
    pub right: Option<PathBuf>,
    /// Trace turning `left` into `right`; enables the reduction-map check.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HierarchyFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct HierarchyArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: HierarchyFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BenchFormat {
    Csv,
    Gnuplot,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_DENSITIES)]
    pub densities: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub objects: usize,
    /// Attribute ladder for one density, comma separated; repeat once per
    /// density. Defaults to the desk-scale ladders.
    #[arg(long)]
    pub ladder: Vec<String>,
    /// Use the full-range ladders (up to 20000 attributes).
    #[arg(long)]
    pub full_ladders: bool,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 120.0)]
    pub timeout_secs: f64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 5_000_000)]
    pub max_concepts: usize,
    #[arg(long, value_delimiter = ',', default_value = "addintent_direct")]
    pub builders: Vec<Builder>,
    /// Label contexts from a synthetic taxonomy with this branching factor.
    #[arg(long)]
    pub taxonomy_branching: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub taxonomy_depth: u32,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: BenchFormat,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Limit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Limit(_) => EXIT_LIMIT,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Limit(m) => f.write_str(m),
        }
    }
}

fn input<E: std::fmt::Display>(path: &Path) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{}: {e}", path.display()))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(input(path))
}

fn read_cxt(path: &Path) -> Result<FormalContext, CliError> {
    context::parse_cxt(&read(path)?).map_err(input(path))
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}

/// Resolves a taxonomy source: `none`, `tsv:PATH`, `wordnet:DIR`, or a bare
/// path where a directory means WordNet.
pub fn load_taxonomy_source(source: &str) -> Result<SynsetGraph, CliError> {
    if source == "none" {
        return Ok(SynsetGraph::default());
    }
    let (kind, path) = match source.split_once(':') {
        Some(("tsv", p)) => ("tsv", PathBuf::from(p)),
        Some(("wordnet", p)) => ("wordnet", PathBuf::from(p)),
        _ => {
            let p = PathBuf::from(source);
            (if p.is_dir() { "wordnet" } else { "tsv" }, p)
        }
    };
    if kind == "tsv" {
        load_taxonomy_tsv(&read(&path)?).map_err(input(&path))
    } else {
        let index = read(&path.join("index.noun"))?;
        let data = read(&path.join("data.noun"))?;
        load_wordnet(&index, &data).map_err(input(&path))
    }
}

#[derive(Serialize)]
struct CompareReport {
    isomorphic: bool,
    quality: QualityScore,
    left: InvariantReport,
    right: InvariantReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduction_map: Option<ReductionMapReport>,
}

fn compare_error(e: CompareError) -> CliError {
    match e {
        CompareError::TooLarge { .. } | CompareError::OracleBound(_) => {
            CliError::Limit(e.to_string())
        }
        other => CliError::Input(other.to_string()),
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Context(a) => {
            let pairs = context::parse_pairs_tsv(&read(&a.pairs)?).map_err(input(&a.pairs))?;
            let weighted = context::weight_pairs(&pairs, a.direction).map_err(input(&a.pairs))?;
            let ctx = context::from_pairs(&weighted, a.threshold).map_err(|e| match e {
                context::ContextError::BadThreshold(_) => CliError::Usage(e.to_string()),
                other => CliError::Input(other.to_string()),
            })?;
            emit(a.output.as_deref(), &context::write_cxt(&ctx), stdout)?;
        }
        Command::Build(a) => {
            let ctx = read_cxt(&a.input)?;
            let lattice = build_addintent(&ctx);
            let report = lattice::invariants_with_limit(&lattice, a.exact_width_limit);
            let csv = format!("{}\n{}\n", InvariantReport::CSV_HEADER, report.csv_row());
            let body = match a.format {
                LatticeFormat::Dot => export_dot(&lattice, &ctx),
                LatticeFormat::Json => {
                    let h = export_hierarchy(&lattice, &ctx);
                    serde_json::to_string_pretty(&h).expect("hierarchy serializes") + "\n"
                }
                LatticeFormat::Csv => csv.clone(),
            };
            emit(a.output.as_deref(), &body, stdout)?;
            if let Some(path) = &a.report {
                emit(Some(path), &csv, stdout)?;
            }
        }
        Command::Reduce(a) => {
            let ctx = read_cxt(&a.input)?;
            let graph = load_taxonomy_source(&a.taxonomy)?;
            let params = a.params.params();
            params
                .validate()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let (reduced, trace) =
                run_reduction(&ctx, &graph, &params).map_err(|e| CliError::Input(e.to_string()))?;
            emit(a.output.as_deref(), &context::write_cxt(&reduced), stdout)?;
            if let Some(path) = &a.trace {
                emit(Some(path), &trace.to_jsonl(), stdout)?;
            }
        }
        Command::Compare(a) => {
            let left = read_cxt(&a.left)?;
            let trace = match &a.trace {
                Some(path) => Some(ReductionTrace::from_jsonl(&read(path)?).map_err(input(path))?),
                None => None,
            };
            let right = match (&a.right, &trace) {
                (Some(path), _) => read_cxt(path)?,
                (None, Some(t)) => t
                    .replay(&left)
                    .map_err(|e| CliError::Input(e.to_string()))?,
                (None, None) => unreachable!("clap requires --right or --trace"),
            };
            let (ll, rl) = (build_addintent(&left), build_addintent(&right));
            let (lr, rr) = (invariants(&ll), invariants(&rl));
            let isomorphic = is_isomorphic(&ll, &rl).map_err(compare_error)?;
            let reduction_map = match &trace {
                Some(t) => Some(check_reduction_map(&left, &right, &rl, t).map_err(compare_error)?),
                None => None,
            };
            let report = CompareReport {
                isomorphic,
                quality: quality_score(&lr, &rr),
                left: lr,
                right: rr,
                reduction_map,
            };
            let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
            emit(a.output.as_deref(), &text, stdout)?;
        }
        Command::Hierarchy(a) => {
            let ctx = read_cxt(&a.input)?;
            let h = export_hierarchy(&build_addintent(&ctx), &ctx);
            let text = match a.format {
                HierarchyFormat::Json => {
                    serde_json::to_string_pretty(&h).expect("hierarchy serializes") + "\n"
                }
                HierarchyFormat::Text => h.to_text(),
            };
            emit(a.output.as_deref(), &text, stdout)?;
        }
        Command::Bench(a) => return run_bench(a, stdout),
    }
    Ok(EXIT_OK)
}

fn run_bench(a: BenchArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let ladders = if !a.ladder.is_empty() {
        a.ladder
            .iter()
            .map(|l| {
                l.split(',')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Usage(format!("ladder `{l}`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        let all = if a.full_ladders {
            full_ladders()
        } else {
            desk_ladders()
        };
        // Pick the default ladder matching each requested density.
        a.densities
            .iter()
            .map(|d| {
                bench::DEFAULT_DENSITIES
                    .iter()
                    .position(|x| x == d)
                    .map(|i| all[i].clone())
                    .ok_or_else(|| {
                        CliError::Usage(format!("no default ladder for density {d}; pass --ladder"))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if !(a.timeout_secs > 0.0 && a.timeout_secs.is_finite()) {
        return Err(CliError::Usage("timeout must be positive".into()));
    }
    let spec = BenchSpec {
        densities: a.densities,
        object_count: a.objects,
        ladders,
        repetitions: a.repetitions,
        seed: a.seed,
        timeout: Duration::from_secs_f64(a.timeout_secs),
        workers: a.workers,
        max_concepts: Some(a.max_concepts),
        taxonomy: a.taxonomy_branching.map(|branching| TaxonomySpec {
            branching,
            depth: a.taxonomy_depth,
        }),
        reduction: a.params.params(),
    };
    spec.validate(&a.builders)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let rows = match (a.format, &a.output) {
        (BenchFormat::Csv, Some(path)) => {
            let file = fs::File::create(path).map_err(input(path))?;
            bench::run_benchmark(&spec, &a.builders, file)
        }
        (BenchFormat::Csv, None) => bench::run_benchmark(&spec, &a.builders, &mut *stdout),
        (BenchFormat::Gnuplot, _) => bench::run_benchmark(&spec, &a.builders, std::io::sink()),
    }
    .map_err(|e| CliError::Input(e.to_string()))?;
    if let BenchFormat::Gnuplot = a.format {
        emit(a.output.as_deref(), &bench::gnuplot_series(&rows), stdout)?;
    }
    if rows.iter().any(|r| r.status == CellStatus::Limit)
        && rows.iter().all(|r| r.status != CellStatus::Timeout)
    {
        return Ok(EXIT_LIMIT);
    }
    Ok(if rows.iter().any(|r| r.status == CellStatus::Timeout) {
        EXIT_TIMEOUT
    } else {
        EXIT_OK
    })
}

/// Splices `key=value` lines from a `--config FILE` into the argument list
/// right after the subcommand, so flags given on the command line win.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut out = Vec::with_capacity(args.len());
    let mut config: Option<String> = None;
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            config = Some(
                it.next()
                    .ok_or_else(|| CliError::Usage("--config needs a path".into()))?,
            );
        } else if let Some(p) = arg.strip_prefix("--config=") {
            config = Some(p.to_string());
        } else {
            out.push(arg);
        }
    }
    let Some(path) = config else { return Ok(out) };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Input(format!("{path}: {e}")))?;
    let mut flags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{path}:{}: expected key=value", i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        match value {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            _ => flags.push(format!("--{key}={value}")),
        }
    }
    let sub = out
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map(|p| p + 2)
        .unwrap_or(out.len());
    out.splice(sub..sub, flags);
    Ok(out)
}

/// Runs the CLI and returns the process exit code.
pub fn run(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = if code == EXIT_OK {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

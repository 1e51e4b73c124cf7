use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use chipfire::exact::{
    instability_by_oracle, instability_by_strategies, InstabilityResult, SearchError, SearchLimits,
};
use chipfire::extension::instability_by_extension;
use chipfire::game::{classify, GameError};
use chipfire::heuristics::{
    greedy_sequence, pagerank_sequence, sort_improve, HeuristicReport, PageRankParams,
};
use chipfire::multigraph::random_strongly_connected;
use chipfire::period::{primitive_period_vector, PeriodError};
use chipfire::{Configuration, DirectedMultigraph, PrimitiveSequence};
use chipfire_cli::format::{parse_graph, write_graph, FormatError};
use chipfire_cli::report::{LimitFlags, ReportPayload, RunReport};

/// Compute the instability minimum of chip-firing games on strongly
/// connected directed loop-free multigraphs, exactly or heuristically.
#[derive(Parser)]
#[command(name = "chipfire", version, about)]
struct Cli {
    /// Emit a machine-readable JSON report on stdout
    #[arg(long, global = true)]
    json: bool,
    /// Cap the number of worker threads used by the searches
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structural facts about a graph file
    Info { file: PathBuf },
    /// The primitive period vector v_G and the period length P
    Period { file: PathBuf },
    /// The exact instability minimum c, with witness
    Exact {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Strategies)]
        method: MethodArg,
        /// Overrides the search budget (also: CHIPFIRE_NODE_BUDGET)
        #[arg(long)]
        node_budget: Option<u64>,
    },
    /// An upper bound on c from a heuristic sequence builder
    Bound {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = HeuristicArg::Greedy)]
        heuristic: HeuristicArg,
        /// Improvement passes for the sort heuristic
        #[arg(long, default_value_t = 20)]
        passes: u32,
    },
    /// Extract and verify a minimal witness via the strategies method
    Witness {
        file: PathBuf,
        #[arg(long)]
        node_budget: Option<u64>,
    },
    /// Generate a random strongly connected graph in the text format
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        max_mult: u64,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Strategies,
    Extension,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeuristicArg {
    Greedy,
    Sort,
    Pagerank,
}

enum CliError {
    /// Exit code 1: bad file, bad graph, unsupported input.
    Input(String),
    /// Exit code 2: a configured search budget was hit.
    Limit(String),
    /// Exit code 3: an internal re-validation failed.
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Limit(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Limit(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PeriodError> for CliError {
    fn from(e: PeriodError) -> Self {
        match e {
            PeriodError::NotStronglyConnected => CliError::Input(e.to_string()),
            PeriodError::KernelDegenerate(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<GameError> for CliError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::CapExceeded { .. } => CliError::Limit(e.to_string()),
            GameError::IllegalFire(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Period(p) => p.into(),
            SearchError::Game(g) => g.into(),
            SearchError::LimitExceeded(m) => CliError::Limit(format!(
                "{m}; consider `bound --heuristic greedy|sort|pagerank` for an upper bound"
            )),
            SearchError::VerificationFailed(m) => CliError::Internal(m),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = with_threads(cli.threads, || dispatch(&cli.command));
    match outcome {
        Ok(out) => {
            if cli.json {
                let report = RunReport {
                    command: out.command,
                    input_digest: out.digest,
                    elapsed_ms: started.elapsed().as_millis() as u64,
                    limits: out.limits,
                    result: out.payload,
                };
                println!("{}", report.to_json());
            } else {
                print!("{}", out.text);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R>(_threads: Option<usize>, f: impl FnOnce() -> R) -> R {
    f()
}

struct CommandOutput {
    command: String,
    digest: String,
    limits: LimitFlags,
    payload: ReportPayload,
    text: String,
}

fn dispatch(command: &Command) -> Result<CommandOutput, CliError> {
    match command {
        Command::Info { file } => info(file),
        Command::Period { file } => period(file),
        Command::Exact { file, method, node_budget } => exact(file, *method, *node_budget),
        Command::Bound { file, heuristic, passes } => bound(file, *heuristic, *passes),
        Command::Witness { file, node_budget } => witness(file, *node_budget),
        Command::Gen { n, max_mult, density, seed } => gen(*n, *max_mult, *density, *seed),
    }
}

fn load(file: &Path) -> Result<(DirectedMultigraph, String), CliError> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| CliError::Input(format!("{}: {e}", file.display())))?;
    let digest = sha256_hex(text.as_bytes());
    Ok((parse_graph(&text)?, digest))
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(7 + 64);
    out.push_str("sha256:");
    for b in digest {
        write!(out, "{b:02x}").expect("write to string");
    }
    out
}

fn effective_limits(node_budget: Option<u64>) -> SearchLimits {
    let from_env = std::env::var("CHIPFIRE_NODE_BUDGET")
        .ok()
        .and_then(|v| v.parse::<u64>().ok());
    match node_budget.or(from_env) {
        Some(b) => SearchLimits::with_node_budget(b),
        None => SearchLimits::default(),
    }
}

fn chip_map(g: &DirectedMultigraph, config: &Configuration) -> BTreeMap<String, u64> {
    g.vertices().map(|v| (g.name(v).to_string(), config.get(v))).collect()
}

fn sequence_names(g: &DirectedMultigraph, sigma: &PrimitiveSequence) -> Vec<String> {
    sigma.vertices().iter().map(|&v| g.name(v).to_string()).collect()
}

fn config_line(g: &DirectedMultigraph, config: &Configuration) -> String {
    g.vertices()
        .map(|v| format!("{}={}", g.name(v), config.get(v)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn info(file: &Path) -> Result<CommandOutput, CliError> {
    let (g, digest) = load(file)?;
    let n = g.vertex_count() as u64;
    let m = g.total_edges();
    let strongly_connected = g.is_strongly_connected();
    let eulerian = g.is_eulerian();
    let pigeonhole = (m + 1).saturating_sub(n);
    let mut text = String::new();
    let _ = writeln!(text, "vertices: {n}");
    let _ = writeln!(text, "edges: {m}");
    let _ = writeln!(text, "loop-free: true");
    let _ = writeln!(text, "strongly connected: {strongly_connected}");
    let _ = writeln!(text, "eulerian: {eulerian}");
    let _ = writeln!(text, "pigeonhole bound (M - N + 1): {pigeonhole}");
    Ok(CommandOutput {
        command: "info".into(),
        digest,
        limits: LimitFlags { node_budget: SearchLimits::default().node_budget, exceeded: false },
        payload: ReportPayload::Info {
            vertices: n,
            edges: m,
            loop_free: true,
            strongly_connected,
            eulerian,
            pigeonhole_bound: pigeonhole,
        },
        text,
    })
}

fn period(file: &Path) -> Result<CommandOutput, CliError> {
    let (g, digest) = load(file)?;
    let pd = primitive_period_vector(&g)?;
    let v_g: BTreeMap<String, u64> = g
        .vertices()
        .map(|v| (g.name(v).to_string(), pd.v_g[v.index()]))
        .collect();
    let mut text = String::new();
    for v in g.vertices() {
        let _ = writeln!(text, "v_G({}) = {}", g.name(v), pd.v_g[v.index()]);
    }
    let _ = writeln!(text, "P = {}", pd.p);
    Ok(CommandOutput {
        command: "period".into(),
        digest,
        limits: LimitFlags { node_budget: SearchLimits::default().node_budget, exceeded: false },
        payload: ReportPayload::Period { v_g, p: pd.p },
        text,
    })
}

/// Re-checks a result's witness through the game engine; a failure here is
/// an internal bug, never silent.
fn verify_result(g: &DirectedMultigraph, result: &InstabilityResult) -> Result<(), CliError> {
    if let Some(w) = &result.witness {
        if w.total() != result.c {
            return Err(CliError::Internal(format!(
                "witness total {} differs from c = {}",
                w.total(),
                result.c
            )));
        }
        if !classify(g, w).is_infinite() {
            return Err(CliError::Internal("witness configuration stabilizes".into()));
        }
    }
    Ok(())
}

fn exact(
    file: &Path,
    method: MethodArg,
    node_budget: Option<u64>,
) -> Result<CommandOutput, CliError> {
    let (g, digest) = load(file)?;
    let limits = effective_limits(node_budget);
    let result = match method {
        MethodArg::Strategies => instability_by_strategies(&g, &limits)?,
        MethodArg::Extension => instability_by_extension(&g, &limits)?,
        MethodArg::Oracle => instability_by_oracle(&g, None)?,
    };
    verify_result(&g, &result)?;
    let single = g.vertex_count() == 1;

    let mut text = String::new();
    let _ = writeln!(text, "method: {}", result.method);
    let _ = writeln!(text, "nodes explored: {}", result.stats.nodes);
    if let Some(sigma) = &result.optimal_sequence {
        let _ = writeln!(text, "optimal sequence: {}", sequence_names(&g, sigma).join(" "));
    }
    if let Some(w) = &result.witness {
        let _ = writeln!(
            text,
            "witness: {} (total {}, classified infinite)",
            config_line(&g, w),
            w.total()
        );
    }
    if single {
        let _ = writeln!(text, "note: single vertex, nothing can fire; c = 0 by convention");
    }
    let _ = writeln!(text, "c = {}", result.c);

    Ok(CommandOutput {
        command: "exact".into(),
        digest,
        limits: LimitFlags { node_budget: limits.node_budget, exceeded: false },
        payload: ReportPayload::Exact {
            method: result.method.to_string(),
            c: result.c,
            optimal_sequence: result
                .optimal_sequence
                .as_ref()
                .map(|s| sequence_names(&g, s)),
            witness: result.witness.as_ref().map(|w| chip_map(&g, w)),
            witness_verified: true,
            nodes: result.stats.nodes,
            single_vertex_convention: single,
        },
        text,
    })
}

fn bound(
    file: &Path,
    heuristic: HeuristicArg,
    passes: u32,
) -> Result<CommandOutput, CliError> {
    let (g, digest) = load(file)?;
    let pd = primitive_period_vector(&g)?;
    let report: HeuristicReport = match heuristic {
        HeuristicArg::Greedy => greedy_sequence(&g, &pd),
        HeuristicArg::Sort => sort_improve(&g, &PrimitiveSequence::canonical(&pd), passes),
        HeuristicArg::Pagerank => pagerank_sequence(&g, &pd, &PageRankParams::default()),
    };
    let mut text = String::new();
    let _ = writeln!(text, "heuristic: {}", report.heuristic);
    let _ = writeln!(text, "sequence: {}", sequence_names(&g, &report.sequence).join(" "));
    for (pass, b) in &report.trace {
        let _ = writeln!(text, "pass {pass}: bound {b}");
    }
    let _ = writeln!(text, "bound = {}", report.bound);
    Ok(CommandOutput {
        command: "bound".into(),
        digest,
        limits: LimitFlags { node_budget: SearchLimits::default().node_budget, exceeded: false },
        payload: ReportPayload::Bound {
            heuristic: report.heuristic.to_string(),
            bound: report.bound,
            sequence: sequence_names(&g, &report.sequence),
            trace: report.trace.clone(),
        },
        text,
    })
}

fn witness(file: &Path, node_budget: Option<u64>) -> Result<CommandOutput, CliError> {
    let (g, digest) = load(file)?;
    if g.vertex_count() == 1 {
        return Err(CliError::Input(
            "a single vertex admits no infinite game; c = 0 by convention".into(),
        ));
    }
    let limits = effective_limits(node_budget);
    let result = instability_by_strategies(&g, &limits)?;
    verify_result(&g, &result)?;
    let sigma = result.optimal_sequence.expect("strategies always yields a sequence");
    let w = result.witness.expect("strategies always yields a witness");

    let mut text = String::new();
    let _ = writeln!(text, "optimal sequence: {}", sequence_names(&g, &sigma).join(" "));
    let _ = writeln!(text, "witness: {} (total {})", config_line(&g, &w), w.total());
    let _ = writeln!(text, "verified: infinite under the game engine");
    let _ = writeln!(text, "c = {}", result.c);
    Ok(CommandOutput {
        command: "witness".into(),
        digest,
        limits: LimitFlags { node_budget: limits.node_budget, exceeded: false },
        payload: ReportPayload::Witness {
            c: result.c,
            witness: chip_map(&g, &w),
            verified: true,
            optimal_sequence: sequence_names(&g, &sigma),
        },
        text,
    })
}

fn gen(n: usize, max_mult: u64, density: f64, seed: u64) -> Result<CommandOutput, CliError> {
    if n < 2 {
        return Err(CliError::Input("gen needs --n of at least 2".into()));
    }
    if max_mult < 1 {
        return Err(CliError::Input("gen needs --max-mult of at least 1".into()));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(CliError::Input("gen needs --density within [0, 1]".into()));
    }
    let g = random_strongly_connected(n, max_mult, density, seed);
    let text = write_graph(&g);
    let digest = sha256_hex(text.as_bytes());
    Ok(CommandOutput {
        command: "gen".into(),
        digest,
        limits: LimitFlags { node_budget: SearchLimits::default().node_budget, exceeded: false },
        payload: ReportPayload::Gen {
            n: n as u64,
            max_mult,
            density,
            seed,
            graph: text.clone(),
        },
        text,
    })
}

//! Command-line front end: every analysis writes CSV or JSON with a short
//! `#` metadata header.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::cost::{estimate_costs, CostConfig, DEFAULT_USD_PER_OPEN};
use crate::inference::{tag_nodes, tag_nodes_detailed, ImplLabel, InferenceWeights};
use crate::isolation::{isolate_all, isolation_cost_curve, plan_isolation, IsolationConfig, IsolationError, IsolationPlan};
use crate::partition::{plan_disconnection, Method, PartitionError};
use crate::planner::{lock_period_sweep, plan_network_attack, route_length_sweep, AttackPlan, PlanError, PlannerConfig, SweepCurve, WeightMode};
use crate::sim::{builtin_scenario, execute_isolation, execute_plan, run_scenario, write_event_log, VerifyConfig, VerifyReport};
use crate::topology::{build_graph_counted, parameter_histogram, parse_snapshot, DefaultsTable, NetworkGraph, PolicyParameter, TopologyError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_FAILED: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("check failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Input(_) => EXIT_INPUT,
            Self::Infeasible(_) => EXIT_INFEASIBLE,
            Self::Failed(_) => EXIT_FAILED,
        }
    }
}

impl From<TopologyError> for CliError {
    fn from(e: TopologyError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::InvalidConfig(_) | PlanError::InvalidSweep(_) | PlanError::BudgetTooSmall(_) => {
                Self::Infeasible(e.to_string())
            }
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<IsolationError> for CliError {
    fn from(e: IsolationError) -> Self {
        match e {
            IsolationError::InvalidTau { .. } => Self::Infeasible(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Plan(p) => p.into(),
            PartitionError::NoConvergence { .. } => Self::Infeasible(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "jamkit", version, about = "Plan, cost and replay HTLC slot-exhaustion attacks on channel graph snapshots")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a snapshot and report what survives filtering
    Ingest(IngestArgs),
    /// Exact-value histogram of one policy parameter
    Stats(StatsArgs),
    /// Infer each node's implementation
    Tag(SnapshotArgs),
    /// Greedy route selection over the whole graph
    AttackNetwork(AttackNetworkArgs),
    /// Disconnect the graph and track connected pairs
    AttackConnectivity(AttackConnectivityArgs),
    /// Isolate one node, or every node in turn
    AttackNode(AttackNodeArgs),
    /// Attacker channels needed against an all-default victim, by degree
    IsolationCurves(IsolationCurvesArgs),
    /// On-chain and liquidity cost of a saved plan
    Cost(CostArgs),
    /// Run a scenario script through the simulator
    Simulate(SimulateArgs),
    /// Replay a saved plan in the simulator and check every channel fills up
    VerifyPlan(VerifyPlanArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SnapshotArgs {
    /// describegraph-style JSON snapshot
    #[arg(long)]
    pub snapshot: PathBuf,
    /// CSV of node_id,label overriding inferred implementations
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: SnapshotArgs,
    /// Also write the parsed snapshot back out as normalized JSON
    #[arg(long)]
    pub normalized: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    /// One or more snapshots; rows are tagged with the file name
    #[arg(long, required = true, num_args = 1..)]
    pub snapshot: Vec<PathBuf>,
    /// cltv_delta, min_htlc, fee_base or fee_rate
    #[arg(long)]
    pub param: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum WeightArg {
    Capacity,
    Betweenness,
}

#[derive(Debug, Args, Serialize)]
pub struct AttackNetworkArgs {
    #[command(flatten)]
    pub input: SnapshotArgs,
    #[arg(long, default_value_t = 432)]
    pub tau_min: u32,
    #[arg(long, value_enum, default_value_t = WeightArg::Capacity)]
    pub weight: WeightArg,
    /// Attacker channels available (two per route)
    #[arg(long)]
    pub budget: Option<usize>,
    /// Route length limit counting both attacker channels
    #[arg(long, default_value_t = 20)]
    pub max_hops: usize,
    /// Save the plan as JSON for `cost` and `verify-plan`
    #[arg(long)]
    pub plan_out: Option<PathBuf>,
    /// Replace the route table with one curve per lock period (days)
    #[arg(long, value_delimiter = ',', conflicts_with = "sweep_max_hops")]
    pub sweep_lock_days: Vec<f64>,
    /// Replace the route table with one curve per route length limit
    #[arg(long, value_delimiter = ',')]
    pub sweep_max_hops: Vec<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum MethodArg {
    Betweenness,
    Spectral,
    Kl,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Betweenness => Method::GreedyBetweenness,
            MethodArg::Spectral => Method::Spectral,
            MethodArg::Kl => Method::KernighanLin,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AttackConnectivityArgs {
    #[command(flatten)]
    pub input: SnapshotArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Betweenness)]
    pub method: MethodArg,
    /// Attacker channels available; unlimited by default
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long, default_value_t = 432)]
    pub tau_min: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct AttackNodeArgs {
    #[command(flatten)]
    pub input: SnapshotArgs,
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    pub victim: Option<String>,
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 432)]
    pub tau_min: u32,
    /// Save the single-victim plan as JSON for `verify-plan`
    #[arg(long, requires = "victim")]
    pub plan_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum ImplArg {
    Lnd,
    Clightning,
    Eclair,
}

impl From<ImplArg> for ImplLabel {
    fn from(i: ImplArg) -> Self {
        match i {
            ImplArg::Lnd => ImplLabel::Lnd,
            ImplArg::Clightning => ImplLabel::CLightning,
            ImplArg::Eclair => ImplLabel::Eclair,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct IsolationCurvesArgs {
    /// Implementations to tabulate; all three by default
    #[arg(long = "impl", value_enum)]
    pub implementation: Vec<ImplArg>,
    #[arg(long, default_value_t = 100)]
    pub max_degree: usize,
    #[arg(long, default_value_t = 432)]
    pub tau_min: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CostArgs {
    /// Plan JSON written by `attack-network --plan-out`
    #[arg(long)]
    pub plan: PathBuf,
    #[arg(long, default_value_t = DEFAULT_USD_PER_OPEN)]
    pub usd_per_open: f64,
    #[arg(long)]
    pub btc_usd: Option<f64>,
    /// Fraction of the per-open fee saved by batching channel opens
    #[arg(long)]
    pub batching_discount: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Script path, or the name of a bundled script (experiment1 .. experiment4, limits)
    #[arg(long)]
    pub scenario: String,
    /// JSON-lines event log
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyPlanArgs {
    #[command(flatten)]
    pub input: SnapshotArgs,
    /// Network plan or isolation plan JSON
    #[arg(long)]
    pub plan: PathBuf,
    /// Share of each channel's capacity on its first endpoint
    #[arg(long, default_value_t = 0.5)]
    pub balance_split: f64,
}

/// Parse `argv` and run; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("jamkit: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: &Command) -> Result<(), CliError> {
    check_paths(command)?;
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Stats(a) => stats(a),
        Command::Tag(a) => tag(a),
        Command::AttackNetwork(a) => attack_network(a),
        Command::AttackConnectivity(a) => attack_connectivity(a),
        Command::AttackNode(a) => attack_node(a),
        Command::IsolationCurves(a) => curves(a),
        Command::Cost(a) => cost(a),
        Command::Simulate(a) => simulate(a),
        Command::VerifyPlan(a) => verify_plan(a),
    }
}

fn check_input(path: &Path) -> Result<(), CliError> {
    File::open(path).map(drop).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn check_output(path: &Option<PathBuf>) -> Result<(), CliError> {
    let Some(p) = path else { return Ok(()) };
    match p.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(CliError::Input(format!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn check_snapshot_args(a: &SnapshotArgs) -> Result<(), CliError> {
    check_input(&a.snapshot)?;
    if let Some(l) = &a.labels {
        check_input(l)?;
    }
    check_output(&a.out)
}

fn check_paths(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Ingest(a) => {
            check_snapshot_args(&a.input)?;
            check_output(&a.normalized)
        }
        Command::Stats(a) => {
            a.snapshot.iter().try_for_each(|p| check_input(p))?;
            check_output(&a.out)
        }
        Command::Tag(a) | Command::AttackConnectivity(AttackConnectivityArgs { input: a, .. }) => {
            check_snapshot_args(a)
        }
        Command::AttackNetwork(a) => {
            check_snapshot_args(&a.input)?;
            check_output(&a.plan_out)
        }
        Command::AttackNode(a) => {
            check_snapshot_args(&a.input)?;
            check_output(&a.plan_out)
        }
        Command::IsolationCurves(a) => check_output(&a.out),
        Command::Cost(a) => {
            check_input(&a.plan)?;
            check_output(&a.out)
        }
        Command::Simulate(a) => {
            if builtin_scenario(&a.scenario).is_none() {
                check_input(Path::new(&a.scenario))?;
            }
            check_output(&a.events)?;
            check_output(&a.out)
        }
        Command::VerifyPlan(a) => {
            check_snapshot_args(&a.input)?;
            check_input(&a.plan)
        }
    }
}

fn metadata(command: &str, config: &impl Serialize) -> Vec<String> {
    let generated = chrono::DateTime::<chrono::Utc>::from(SystemTime::now()).to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let echo = serde_json::to_string(config).unwrap_or_default();
    vec![
        format!("jamkit {}", env!("CARGO_PKG_VERSION")),
        format!("command: {command}"),
        format!("config: {echo}"),
        format!("generated: {generated}"),
    ]
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(e: io::Error) -> CliError {
    CliError::Input(e.to_string())
}

/// A reader closing our stdout early (`| head`) is not an error.
fn written(r: io::Result<()>) -> Result<(), CliError> {
    match r {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(io_err(e)),
        _ => Ok(()),
    }
}

/// CSV body from serializable rows, behind `#` header lines.
fn write_csv<R: Serialize>(path: &Option<PathBuf>, meta: &[String], rows: &[R], empty_header: &[&str]) -> Result<(), CliError> {
    let mut body = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        body.write_record(empty_header)?;
    }
    for r in rows {
        body.serialize(r)?;
    }
    let body = body.into_inner().map_err(|e| CliError::Input(e.to_string()))?;
    let mut out = open_out(path)?;
    written((|| {
        for line in meta {
            writeln!(out, "# {line}")?;
        }
        out.write_all(&body)?;
        out.flush()
    })())
}

fn write_json(path: &Option<PathBuf>, meta: &[String], value: &impl Serialize) -> Result<(), CliError> {
    let mut v = serde_json::to_value(value).map_err(|e| CliError::Input(e.to_string()))?;
    if let Value::Object(map) = &mut v {
        map.insert("metadata".into(), json!(meta));
    }
    let mut text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    let mut out = open_out(path)?;
    written(out.write_all(text.as_bytes()).and_then(|_| out.flush()))
}

fn load_snapshot(path: &Path) -> Result<crate::topology::ParsedSnapshot, CliError> {
    let f = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_snapshot(BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_labels(path: &Path) -> Result<BTreeMap<String, ImplLabel>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let (Some(node), Some(label)) = (rec.get(0), rec.get(1)) else {
            return Err(CliError::Input(format!("{}: expected node_id,label rows", path.display())));
        };
        let label: ImplLabel = label.trim().parse().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        out.insert(node.trim().to_string(), label);
    }
    Ok(out)
}

struct Loaded {
    graph: NetworkGraph,
    labels: BTreeMap<String, ImplLabel>,
}

fn load(a: &SnapshotArgs, defaults: &DefaultsTable) -> Result<Loaded, CliError> {
    let parsed = load_snapshot(&a.snapshot)?;
    let (graph, _) = build_graph_counted(&parsed.snapshot);
    let mut labels = tag_nodes(&parsed.snapshot, defaults, &InferenceWeights::default());
    if let Some(p) = &a.labels {
        labels.extend(read_labels(p)?);
    }
    Ok(Loaded { graph, labels })
}

#[derive(Serialize)]
struct KeyValue {
    key: &'static str,
    value: String,
}

fn ingest(a: &IngestArgs) -> Result<(), CliError> {
    let parsed = load_snapshot(&a.input.snapshot)?;
    let (graph, counts) = build_graph_counted(&parsed.snapshot);
    let kv = |key, value: String| KeyValue { key, value };
    let rows = vec![
        kv("nodes_in_snapshot", parsed.snapshot.nodes.len().to_string()),
        kv("channels_in_snapshot", parsed.snapshot.channels.len().to_string()),
        kv("records_skipped", parsed.skipped.total().to_string()),
        kv("channels_undisclosed_policy", counts.undisclosed.to_string()),
        kv("channels_disabled", counts.disabled.to_string()),
        kv("graph_nodes", graph.node_count().to_string()),
        kv("graph_channels", graph.channel_count().to_string()),
        kv("graph_capacity_sat", graph.total_capacity_sat().to_string()),
        kv("components", graph.components().len().to_string()),
        kv("largest_component_nodes", graph.largest_component().len().to_string()),
    ];
    if let Some(p) = &a.normalized {
        let f = File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        parsed.snapshot.write_json(f)?;
    }
    write_csv(&a.input.out, &metadata("ingest", a), &rows, &[])
}

#[derive(Serialize)]
struct StatsRow<'a> {
    snapshot: &'a str,
    parameter: &'static str,
    value: String,
    count: usize,
    share: f64,
}

fn stats(a: &StatsArgs) -> Result<(), CliError> {
    let param: PolicyParameter = a.param.parse()?;
    let names: Vec<String> = a
        .snapshot
        .iter()
        .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
        .collect();
    let mut hists = Vec::new();
    for p in &a.snapshot {
        hists.push(parameter_histogram(&load_snapshot(p)?.snapshot, param)?);
    }
    let rows: Vec<StatsRow> = hists
        .iter()
        .zip(&names)
        .flat_map(|(h, name)| {
            h.entries.iter().map(move |e| StatsRow {
                snapshot: name,
                parameter: param.name(),
                value: e.bucket.to_string(),
                count: e.count,
                share: e.share,
            })
        })
        .collect();
    write_csv(&a.out, &metadata("stats", a), &rows, &[])
}

#[derive(Serialize)]
struct TagRow {
    node_id: String,
    label: &'static str,
    score_lnd: Option<f64>,
    score_clightning: Option<f64>,
    score_eclair: Option<f64>,
}

fn tag(a: &SnapshotArgs) -> Result<(), CliError> {
    let defaults = DefaultsTable::mainnet();
    let parsed = load_snapshot(&a.snapshot)?;
    let mut tags = tag_nodes_detailed(&parsed.snapshot, &defaults, &InferenceWeights::default());
    if let Some(p) = &a.labels {
        let over = read_labels(p)?;
        for t in &mut tags {
            if let Some(l) = over.get(&t.node_id) {
                t.label = *l;
            }
        }
    }
    let rows: Vec<TagRow> = tags
        .into_iter()
        .map(|t| TagRow {
            label: t.label.as_str(),
            score_lnd: t.scores.map(|s| s.get(ImplLabel::Lnd)),
            score_clightning: t.scores.map(|s| s.get(ImplLabel::CLightning)),
            score_eclair: t.scores.map(|s| s.get(ImplLabel::Eclair)),
            node_id: t.node_id,
        })
        .collect();
    write_csv(&a.out, &metadata("tag", a), &rows, &["node_id", "label", "score_lnd", "score_clightning", "score_eclair"])
}

fn planner_config(tau_min: u32, max_hops: usize, weight: WeightArg) -> Result<PlannerConfig, CliError> {
    if max_hops < 3 {
        return Err(CliError::Infeasible(format!("max hops {max_hops} leaves no room for a victim channel")));
    }
    let config = PlannerConfig {
        tau_min,
        max_route_channels: max_hops - 2,
        weight_mode: match weight {
            WeightArg::Capacity => WeightMode::Capacity,
            WeightArg::Betweenness => WeightMode::Betweenness,
        },
        ..PlannerConfig::default()
    };
    config.validate()?;
    Ok(config)
}

#[derive(Serialize)]
struct RouteRow {
    route_index: usize,
    weight: f64,
    n_channels: usize,
    timeout_sum: u32,
    lock_duration: u32,
    cumulative_capacity_fraction: f64,
    cumulative_attacker_channels: usize,
}

#[derive(Serialize)]
struct SweepOut {
    parameter: f64,
    tau_min: u32,
    max_route_channels: usize,
    attacker_channels: usize,
    capacity_fraction: f64,
}

fn sweep_rows(curves: &[SweepCurve]) -> Vec<SweepOut> {
    curves
        .iter()
        .flat_map(|c| {
            c.rows().map(move |r| SweepOut {
                parameter: r.parameter,
                tau_min: c.tau_min,
                max_route_channels: c.max_route_channels,
                attacker_channels: r.attacker_channels,
                capacity_fraction: r.capacity_fraction,
            })
        })
        .collect()
}

fn attack_network(a: &AttackNetworkArgs) -> Result<(), CliError> {
    let config = planner_config(a.tau_min, a.max_hops, a.weight)?;
    if a.budget.is_some_and(|b| b < 2) {
        return Err(PlanError::BudgetTooSmall(a.budget.unwrap_or(0)).into());
    }
    let defaults = DefaultsTable::mainnet();
    let l = load(&a.input, &defaults)?;
    let meta = metadata("attack-network", a);
    let sweep_header = ["parameter", "tau_min", "max_route_channels", "attacker_channels", "capacity_fraction"];
    if !a.sweep_lock_days.is_empty() {
        let curves = lock_period_sweep(&l.graph, &l.labels, &defaults, &config, &a.sweep_lock_days)?;
        return write_csv(&a.input.out, &meta, &sweep_rows(&curves), &sweep_header);
    }
    if !a.sweep_max_hops.is_empty() {
        let curves = route_length_sweep(&l.graph, &l.labels, &defaults, &config, &a.sweep_max_hops)?;
        return write_csv(&a.input.out, &meta, &sweep_rows(&curves), &sweep_header);
    }
    let plan = plan_network_attack(&l.graph, &l.labels, &defaults, &config, a.budget)?;
    let curve = plan.curve();
    let rows: Vec<RouteRow> = plan
        .routes
        .iter()
        .zip(&curve[1..])
        .enumerate()
        .map(|(i, (r, p))| RouteRow {
            route_index: i,
            weight: r.weight,
            n_channels: r.len(),
            timeout_sum: r.timeout_sum,
            lock_duration: r.lock_duration,
            cumulative_capacity_fraction: p.capacity_fraction,
            cumulative_attacker_channels: p.attacker_channels,
        })
        .collect();
    if let Some(p) = &a.plan_out {
        write_json(&Some(p.clone()), &meta, &plan)?;
    }
    write_csv(
        &a.input.out,
        &meta,
        &rows,
        &["route_index", "weight", "n_channels", "timeout_sum", "lock_duration", "cumulative_capacity_fraction", "cumulative_attacker_channels"],
    )
}

fn attack_connectivity(a: &AttackConnectivityArgs) -> Result<(), CliError> {
    let config = planner_config(a.tau_min, 20, WeightArg::Capacity)?;
    let defaults = DefaultsTable::mainnet();
    let l = load(&a.input, &defaults)?;
    let budget = match a.budget {
        Some(b) if b < 2 => return Err(PlanError::BudgetTooSmall(b).into()),
        Some(b) => b,
        None => 2 * l.graph.channel_count().max(1),
    };
    let (report, _) = plan_disconnection(&l.graph, &l.labels, &defaults, &config, a.method.into(), budget)?;
    write_csv(&a.input.out, &metadata("attack-connectivity", a), &report.curve, &["attacker_channels", "connected_pairs_fraction"])
}

fn attack_node(a: &AttackNodeArgs) -> Result<(), CliError> {
    let config = IsolationConfig { tau_min: a.tau_min, ..IsolationConfig::default() };
    config.validate()?;
    let defaults = DefaultsTable::mainnet();
    let l = load(&a.input, &defaults)?;
    let meta = metadata("attack-node", a);
    let header = ["node_id", "degree", "attacker_channels_needed", "exit_channels_needed", "unparalyzable"];
    if a.all {
        let rows = isolate_all(&l.graph, &l.labels, &defaults, &config)?;
        return write_csv(&a.input.out, &meta, &rows, &header);
    }
    let victim = a.victim.as_deref().ok_or_else(|| CliError::Usage("--victim or --all".into()))?;
    let plan = plan_isolation(&l.graph, &l.labels, &defaults, victim, &config)?;
    let row = crate::isolation::IsolationSummary {
        node_id: victim.to_string(),
        degree: plan.per_channel.len() + plan.unparalyzable.len(),
        attacker_channels_needed: plan.attacker_channels_needed,
        exit_channels_needed: plan.exit_channels_needed,
        unparalyzable: plan.unparalyzable.len(),
    };
    if let Some(p) = &a.plan_out {
        write_json(&Some(p.clone()), &meta, &plan)?;
    }
    write_csv(&a.input.out, &meta, &[row], &header)
}

#[derive(Serialize)]
struct CurveOut {
    implementation: &'static str,
    degree: usize,
    attacker_channels_needed: u32,
    exit_channels_needed: u32,
}

fn curves(a: &IsolationCurvesArgs) -> Result<(), CliError> {
    let config = IsolationConfig { tau_min: a.tau_min, ..IsolationConfig::default() };
    let defaults = DefaultsTable::mainnet();
    let impls: Vec<ImplLabel> = if a.implementation.is_empty() {
        vec![ImplLabel::Lnd, ImplLabel::CLightning, ImplLabel::Eclair]
    } else {
        a.implementation.iter().map(|&i| i.into()).collect()
    };
    let mut rows = Vec::new();
    for label in impls {
        for r in isolation_cost_curve(label, 1..=a.max_degree, &defaults, &config)? {
            rows.push(CurveOut {
                implementation: label.as_str(),
                degree: r.degree,
                attacker_channels_needed: r.attacker_channels_needed,
                exit_channels_needed: r.exit_channels_needed,
            });
        }
    }
    write_csv(&a.out, &metadata("isolation-curves", a), &rows, &["implementation", "degree", "attacker_channels_needed", "exit_channels_needed"])
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let f = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_attack_plan(v: Value, path: &Path) -> Result<AttackPlan, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::Input(format!("{}: not a network plan: {e}", path.display())))
}

fn cost(a: &CostArgs) -> Result<(), CliError> {
    let plan = read_attack_plan(read_json(&a.plan)?, &a.plan)?;
    let mut config = CostConfig { usd_per_open: a.usd_per_open, batching_discount: a.batching_discount, ..CostConfig::default() };
    if let Some(p) = a.btc_usd {
        config.btc_usd = p;
    }
    if !(config.usd_per_open >= 0.0 && config.btc_usd > 0.0) || a.batching_discount.is_some_and(|d| !(0.0..1.0).contains(&d)) {
        return Err(CliError::Infeasible("prices must be positive and the batching discount in [0, 1)".into()));
    }
    write_json(&a.out, &metadata("cost", a), &estimate_costs(&plan, &config))
}

fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let script = match builtin_scenario(&a.scenario) {
        Some(s) if !Path::new(&a.scenario).exists() => s.to_string(),
        _ => std::fs::read_to_string(&a.scenario).map_err(|e| CliError::Input(format!("{}: {e}", a.scenario)))?,
    };
    let report = run_scenario(&script).map_err(|e| CliError::Input(e.to_string()))?;
    if let Some(p) = &a.events {
        let f = File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        write_event_log(&report.events, io::BufWriter::new(f)).map_err(io_err)?;
    }
    write_csv(&a.out, &metadata("simulate", a), &report.steps, &["line", "command", "passed", "detail"])?;
    match report.failure() {
        Some(s) => Err(CliError::Failed(format!("line {}: {}: {}", s.line, s.command, s.detail))),
        None => Ok(()),
    }
}

fn verify_plan(a: &VerifyPlanArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&a.balance_split) {
        return Err(CliError::Infeasible(format!("balance split {} outside [0, 1]", a.balance_split)));
    }
    let defaults = DefaultsTable::mainnet();
    let l = load(&a.input, &defaults)?;
    let config = VerifyConfig { balance_split: a.balance_split, ..VerifyConfig::default() };
    let raw = read_json(&a.plan)?;
    let verify_err = |e: crate::sim::VerifyError| CliError::Input(e.to_string());
    let report: VerifyReport = if raw.get("per_channel").is_some() {
        let plan: IsolationPlan =
            serde_json::from_value(raw).map_err(|e| CliError::Input(format!("{}: {e}", a.plan.display())))?;
        execute_isolation(&plan, &l.graph, &l.labels, &defaults, &config).map_err(verify_err)?
    } else {
        let plan = read_attack_plan(raw, &a.plan)?;
        execute_plan(&plan, &l.graph, &l.labels, &defaults, &config).map_err(verify_err)?
    };
    write_csv(&a.input.out, &metadata("verify-plan", a), &report.channels, &["channel_id", "pending", "slot_limit", "probe_error"])?;
    if report.all_ok() {
        Ok(())
    } else {
        Err(CliError::Failed(report.failures.join("; ")))
    }
}

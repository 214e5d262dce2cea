use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dirclust::bandwidth::{BandwidthChoice, SearchRange, Selector};
use dirclust::classify::classify;
use dirclust::density::{DensityModel, Sample};
use dirclust::error::{Error, Result};
use dirclust::harness::export::{
    default_inv_h2_grid, export_ccluster, export_scluster, tree_document, CoresDoc, DEFAULT_ANGLE_RESOLUTION,
    DEFAULT_DISK_RESOLUTION,
};
use dirclust::harness::io::{load_labels, load_sample, write_labels, LoadOptions, SampleFormat};
use dirclust::harness::scenario::{catalog, run_scenario, scenario, write_rows, ScenarioConfig};
use dirclust::harness::serve::{bind, run, ServeOptions, ServeState};
use dirclust::hdr::TauGrid;
use dirclust::kmeans::spherical_kmeans;
use dirclust::labeling::adjusted_rand_index;
use dirclust::pipeline::{choose_bandwidth, filtration, GraphMode, PipelineConfig};
use dirclust::tree::graph::DEFAULT_STEP;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Density-based clustering of directional data on the unit hypersphere.
#[derive(Parser)]
#[command(name = "dirclust", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a kernel density estimate and print a JSON summary.
    Fit(FitArgs),
    /// Print the cluster tree, mode function and HDR levels as JSON.
    Tree(FiltrationArgs),
    /// Print the cluster cores as JSON.
    Cores(FiltrationArgs),
    /// Cluster the sample and write one label per input row.
    Classify(ClassifyArgs),
    /// Adjusted Rand index between two label files.
    Ari {
        /// First single-column label file.
        a: PathBuf,
        /// Second single-column label file.
        b: PathBuf,
    },
    /// Spherical k-means; writes one label per input row.
    Kmeans(KmeansArgs),
    /// Run a simulation scenario and write one CSV row per method.
    Simulate(SimulateArgs),
    /// Export the cCluster JSON document (circular data).
    ExportCcluster(CclusterArgs),
    /// Export the sCluster JSON document (spherical data).
    ExportScluster(SclusterArgs),
    /// Serve JSON endpoints for interactive exploration.
    Serve(ServeArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Sample CSV file.
    #[arg(short, long)]
    input: PathBuf,
    /// Row layout: angles-radians, lonlat-degrees, unit-rows or raw-rows.
    #[arg(long, default_value = "raw-rows")]
    format: SampleFormat,
    /// Zero-based columns to log-transform before normalization (raw-rows only).
    #[arg(long, value_delimiter = ',')]
    log_cols: Vec<usize>,
}

impl InputArgs {
    fn load(&self) -> Result<Sample> {
        load_sample(&self.input, &LoadOptions { format: self.format, log_cols: self.log_cols.clone() })
    }
}

#[derive(Args)]
struct BandwidthArgs {
    /// Selector (rot-circ, rot-hyper, lcv, lscv) or a literal bandwidth.
    #[arg(short, long, default_value = "lcv")]
    bandwidth: BandwidthChoice,
    /// Bandwidth search interval for the selectors, as lo:hi.
    #[arg(long, default_value = "0.02:5", value_parser = parse_range)]
    h_range: SearchRange,
}

#[derive(Args)]
struct GraphArgs {
    /// Restrict graph edges to the union of k-nearest-neighbor pairs.
    #[arg(long, conflicts_with_all = ["mutual_knn", "complete"])]
    knn: Option<usize>,
    /// Restrict graph edges to mutual k-nearest-neighbor pairs.
    #[arg(long, conflicts_with = "complete")]
    mutual_knn: Option<usize>,
    /// Use the complete graph regardless of sample size.
    #[arg(long)]
    complete: bool,
    /// Maximum angular spacing of density evaluations along an edge.
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    /// Probability levels as lo:hi:step.
    #[arg(long, default_value = "0.01:0.99:0.01")]
    tau_grid: TauGrid,
}

impl GraphArgs {
    fn mode(&self) -> GraphMode {
        match (self.knn, self.mutual_knn, self.complete) {
            (Some(k), _, _) => GraphMode::Knn(k),
            (_, Some(k), _) => GraphMode::MutualKnn(k),
            (_, _, true) => GraphMode::Complete,
            _ => GraphMode::Auto,
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

impl OutputArgs {
    fn writer(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.output {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut w = self.writer()?;
        serde_json::to_writer(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    bandwidth: BandwidthArgs,
    /// Also write the estimated density at every sample point to this CSV file.
    #[arg(long)]
    densities: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FiltrationArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    bandwidth: BandwidthArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    output: OutputArgs,
}

impl FiltrationArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            bandwidth: self.bandwidth.bandwidth,
            range: self.bandwidth.h_range,
            graph: self.graph.mode(),
            step: self.graph.step,
            taus: self.graph.tau_grid.clone(),
        }
    }
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: FiltrationArgs,
    /// Choose a separate bandwidth for each group density with this selector.
    #[arg(long)]
    group_bandwidth: Option<Selector>,
}

#[derive(Args)]
struct KmeansArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of clusters.
    #[arg(short)]
    k: usize,
    #[arg(long, default_value_t = dirclust::harness::scenario::DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario id from the catalog.
    #[arg(long, conflicts_with = "config", required_unless_present_any = ["config", "list"])]
    scenario: Option<String>,
    /// Scenario configuration as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the bandwidth selector (or literal bandwidth).
    #[arg(long)]
    selector: Option<BandwidthChoice>,
    /// Override the number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the k-means comparison.
    #[arg(long)]
    no_kmeans: bool,
    /// Add a wall-clock seconds column.
    #[arg(long)]
    timing: bool,
    /// Print the scenario catalog and exit.
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CclusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated 1/h^2 values (default: 60 log-spaced values in [0.5, 400]).
    #[arg(long, value_delimiter = ',')]
    inv_h2: Vec<f64>,
    /// Number of evaluation angles around the circle.
    #[arg(long, default_value_t = DEFAULT_ANGLE_RESOLUTION)]
    angle_resolution: usize,
    /// Comma-separated selectors to mark (default: all that apply).
    #[arg(long, value_delimiter = ',')]
    selectors: Vec<Selector>,
    /// Bandwidth search interval for the selectors, as lo:hi.
    #[arg(long, default_value = "0.02:5", value_parser = parse_range)]
    h_range: SearchRange,
    /// Probability levels as lo:hi:step.
    #[arg(long, default_value = "0.01:0.99:0.01")]
    tau_grid: TauGrid,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SclusterArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Comma-separated bandwidths, one frame each.
    #[arg(long, value_delimiter = ',')]
    h: Vec<f64>,
    /// Raster cells per side of each hemisphere disk.
    #[arg(long, default_value_t = DEFAULT_DISK_RESOLUTION)]
    disk_resolution: usize,
    /// Comma-separated selectors; each adds a frame (default: all that apply).
    #[arg(long, value_delimiter = ',')]
    selectors: Vec<Selector>,
    /// Bandwidth search interval for the selectors, as lo:hi.
    #[arg(long, default_value = "0.02:5", value_parser = parse_range)]
    h_range: SearchRange,
    /// Probability levels as lo:hi:step.
    #[arg(long, default_value = "0.01:0.99:0.01")]
    tau_grid: TauGrid,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    graph: GraphArgs,
    /// Bandwidth search interval for the selectors, as lo:hi.
    #[arg(long, default_value = "0.02:5", value_parser = parse_range)]
    h_range: SearchRange,
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Request-handling threads.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Number of evaluation angles around the circle.
    #[arg(long, default_value_t = DEFAULT_ANGLE_RESOLUTION)]
    angle_resolution: usize,
    /// Raster cells per side of each hemisphere disk.
    #[arg(long, default_value_t = DEFAULT_DISK_RESOLUTION)]
    disk_resolution: usize,
}

fn parse_range(s: &str) -> Result<SearchRange> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| Error::InvalidArgument(format!("expected lo:hi, got '{s}'")))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::InvalidArgument(format!("'{t}': {e}")));
    SearchRange::new(num(lo)?, num(hi)?)
}

fn applicable_selectors(requested: &[Selector], d: usize) -> Vec<Selector> {
    if requested.is_empty() {
        Selector::ALL.into_iter().filter(|s| s.supports_dim(d)).collect()
    } else {
        requested.to_vec()
    }
}

#[derive(Serialize)]
struct FitSummary {
    n: usize,
    d: usize,
    h: f64,
    kappa: f64,
    selection: Option<dirclust::bandwidth::BandwidthResult>,
    density_min: f64,
    density_max: f64,
    density_mean: f64,
}

fn fit(args: &FitArgs) -> Result<()> {
    let sample = args.input.load()?;
    let config = PipelineConfig { bandwidth: args.bandwidth.bandwidth, range: args.bandwidth.h_range, ..Default::default() };
    let (h, selection) = choose_bandwidth(&sample, &config)?;
    let model = DensityModel::kde(sample.clone(), h)?;
    let dens = model.densities(&sample)?;
    if let Some(path) = &args.densities {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "density")?;
        for v in &dens {
            writeln!(w, "{v:e}")?;
        }
        w.flush()?;
    }
    args.output.json(&FitSummary {
        n: sample.len(),
        d: sample.dim(),
        h,
        kappa: 1.0 / (h * h),
        selection,
        density_min: dens.iter().copied().fold(f64::INFINITY, f64::min),
        density_max: dens.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        density_mean: dens.iter().sum::<f64>() / dens.len() as f64,
    })
}

fn tree(args: &FiltrationArgs, cores_only: bool) -> Result<()> {
    let sample = args.input.load()?;
    let config = args.config();
    let (h, _) = choose_bandwidth(&sample, &config)?;
    let f = filtration(&sample, h, &config)?;
    if cores_only {
        args.output.json(&CoresDoc { h, cores: f.cores })
    } else {
        args.output.json(&tree_document(&f))
    }
}

fn classify_cmd(args: &ClassifyArgs) -> Result<()> {
    let sample = args.common.input.load()?;
    let config = args.common.config();
    let (h, _) = choose_bandwidth(&sample, &config)?;
    let f = filtration(&sample, h, &config)?;
    let c = match args.group_bandwidth {
        None => classify(&f.cores, &sample, h)?,
        Some(sel) => dirclust::classify::classify_with(
            &f.cores,
            &sample,
            dirclust::classify::GroupBandwidth::PerGroup(BandwidthChoice::Select(sel), config.range),
        )?,
    };
    eprintln!(
        "h = {h:.6}, groups = {}, core level tau = {:.2}, fallback = {}{}",
        f.cores.n_c,
        f.cores.core_tau,
        c.fallback_count,
        if c.single_group { ", single group" } else { "" }
    );
    let mut w = args.common.output.writer()?;
    write_labels(&mut w, c.labeling.labels())?;
    w.flush()?;
    Ok(())
}

fn ari(a: &Path, b: &Path) -> Result<()> {
    let v = adjusted_rand_index(&load_labels(a)?, &load_labels(b)?)?;
    println!("{v:?}");
    Ok(())
}

fn kmeans(args: &KmeansArgs) -> Result<()> {
    let sample = args.input.load()?;
    let r = spherical_kmeans(&sample, args.k, args.seed)?;
    eprintln!("objective = {:.6}, iterations = {}", r.objective, r.iterations);
    let mut w = args.output.writer()?;
    write_labels(&mut w, r.labeling.labels())?;
    w.flush()?;
    Ok(())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    if args.list {
        let mut w = args.output.writer()?;
        for c in catalog() {
            writeln!(w, "{}", c.id)?;
        }
        w.flush()?;
        return Ok(());
    }
    let mut config: ScenarioConfig = match (&args.scenario, &args.config) {
        (Some(id), _) => scenario(id)?,
        (None, Some(path)) => serde_json::from_reader(File::open(path)?)
            .map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?,
        (None, None) => return Err(Error::InvalidArgument("need --scenario or --config".into())),
    };
    if let Some(b) = args.selector {
        config.bandwidth = b;
    }
    if let Some(r) = args.reps {
        config.replications = r;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.no_kmeans {
        config.kmeans = false;
    }
    let rows = run_scenario(&config)?;
    let w = args.output.writer()?;
    write_rows(w, &rows, args.timing)
}

fn ccluster(args: &CclusterArgs) -> Result<()> {
    let sample = args.input.load()?;
    let grid = if args.inv_h2.is_empty() { default_inv_h2_grid() } else { args.inv_h2.clone() };
    let selectors = applicable_selectors(&args.selectors, sample.dim());
    let doc = export_ccluster(&sample, &grid, args.angle_resolution, &selectors, &args.tau_grid, args.h_range)?;
    args.output.json(&doc)
}

fn scluster(args: &SclusterArgs) -> Result<()> {
    let sample = args.input.load()?;
    let selectors = applicable_selectors(&args.selectors, sample.dim());
    let doc = export_scluster(&sample, &args.h, args.disk_resolution, &selectors, &args.tau_grid, args.h_range)?;
    args.output.json(&doc)
}

fn serve(args: &ServeArgs) -> Result<()> {
    let sample = args.input.load()?;
    let options = ServeOptions {
        pipeline: PipelineConfig {
            range: args.h_range,
            graph: args.graph.mode(),
            step: args.graph.step,
            taus: args.graph.tau_grid.clone(),
            ..Default::default()
        },
        angle_resolution: args.angle_resolution,
        disk_resolution: args.disk_resolution,
    };
    let state = Arc::new(ServeState::new(sample, options));
    let server = Arc::new(bind(&args.bind)?);
    eprintln!("listening on http://{}", server.server_addr());
    run(server, state, args.workers);
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => fit(a),
        Command::Tree(a) => tree(a, false),
        Command::Cores(a) => tree(a, true),
        Command::Classify(a) => classify_cmd(a),
        Command::Ari { a, b } => ari(a, b),
        Command::Kmeans(a) => kmeans(a),
        Command::Simulate(a) => simulate(a),
        Command::ExportCcluster(a) => ccluster(a),
        Command::ExportScluster(a) => scluster(a),
        Command::Serve(a) => serve(a),
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else if matches!(e, Error::InvalidArgument(_)) {
        EXIT_USAGE
    } else {
        EXIT_DATA
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

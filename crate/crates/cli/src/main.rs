#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

mod plot;
mod table;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use crashcast::bev::Horizon;
use crashcast::dataset::{generate_dataset, load_dataset, save_dataset, GenerateOptions};
use crashcast::eval::{evaluate_batch, parse_report, EvalSettings, MetricsReport, PreparedScenario};
use crashcast::scenario::{ScenarioType, Split};
use crashcast::sim::Termination;
use crashcast::v2x::V2xConfig;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "crashcast", version, about = "Accident scenario generation and prediction evaluation")]
struct Cli {
    /// Log verbosity (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a seeded batch of scenarios and write logs plus a manifest.
    Generate(GenerateArgs),
    /// Run the prediction pipeline over a dataset and write a metrics report.
    Evaluate(EvaluateArgs),
    /// Evaluate a grid of noise or latency values across configurations.
    Sweep(SweepArgs),
    /// Render metrics reports as a markdown comparison table.
    Report(ReportArgs),
}

#[derive(clap::Args, Debug)]
struct GenerateArgs {
    /// Number of scenarios to simulate.
    #[arg(long)]
    scenarios: usize,
    /// Comma-separated types (type-01..type-12, normal, or 1..12); all accident types by default.
    #[arg(long, value_delimiter = ',')]
    types: Vec<ScenarioType>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset root; logs go to `logs/` beneath it.
    #[arg(long)]
    out: PathBuf,
    /// Upper bound on background vehicles per scenario.
    #[arg(long, default_value_t = 4)]
    max_background: usize,
    /// Upper bound on pedestrians per scenario.
    #[arg(long, default_value_t = 2)]
    max_pedestrians: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    All,
    Train,
    Val,
    Test,
}

impl SplitArg {
    fn split(self) -> Option<Split> {
        match self {
            SplitArg::All => None,
            SplitArg::Train => Some(Split::Train),
            SplitArg::Val => Some(Split::Val),
            SplitArg::Test => Some(Split::Test),
        }
    }
}

#[derive(clap::Args, Debug)]
struct DatasetArgs {
    /// Dataset root holding manifest.json.
    #[arg(long, env = "CRASHCAST_DATASET")]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "all")]
    split: SplitArg,
    /// Prediction horizon: 2s, 3s or 4s.
    #[arg(long, default_value = "2s")]
    horizon: Horizon,
    /// Sampled fields beyond the original prediction.
    #[arg(long, default_value_t = 5)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// Rig configuration: single, ego+behind, ego+other, ego+infra,
    /// ego+behind+other, 4vehicles or 4vehicles+infra.
    #[arg(long, default_value = "single")]
    config: V2xConfig,
    /// Mean pose error of non-ego rigs, meters.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Communication delay of non-ego rigs, seconds.
    #[arg(long, default_value_t = 0.0)]
    latency: f64,
    /// Report JSON path; written to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    Noise,
    Latency,
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::Noise => "noise",
            SweepParam::Latency => "latency",
        }
    }
}

#[derive(clap::Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "ego+infra,4vehicles+infra")]
    configs: Vec<V2xConfig>,
    /// Seeds averaged per point.
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Output directory for the CSV table and SVG plot.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args, Debug)]
struct ReportArgs {
    /// Report JSON files written by `evaluate`.
    #[arg(long, num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    /// Markdown output path; written to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new().filter_level(cli.log_level).init();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

fn generate(a: GenerateArgs) -> Result<(), CliError> {
    if a.scenarios == 0 {
        return Err(CliError::Usage("--scenarios must be positive".into()));
    }
    let types = if a.types.is_empty() { ScenarioType::all_accident().collect() } else { a.types };
    let mut opts = GenerateOptions::new(a.scenarios, types, a.seed);
    opts.max_background_vehicles = a.max_background;
    opts.max_pedestrians = a.max_pedestrians;
    let (manifest, scenarios) = generate_dataset(&opts).context("generating scenarios")?;
    save_dataset(&a.out, &manifest, &scenarios).with_context(|| format!("writing dataset to {}", a.out.display()))?;

    let mut per_type: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for e in &manifest.entries {
        let c = per_type.entry(e.scenario_type.to_string()).or_default();
        c.0 += 1;
        c.1 += usize::from(e.termination == Termination::Collision);
    }
    let collisions: usize = per_type.values().map(|c| c.1).sum();
    println!("type        scenarios  collisions");
    for (ty, (n, c)) in &per_type {
        println!("{ty:<11} {n:>9}  {c:>10}");
    }
    let [tr, va, te] = manifest.counts();
    println!(
        "total {} scenarios, collision rate {:.3}, split train/val/test {tr}/{va}/{te}",
        manifest.entries.len(),
        collisions as f64 / manifest.entries.len() as f64
    );
    Ok(())
}

fn load(data: &DatasetArgs) -> Result<Vec<PreparedScenario>, CliError> {
    let logs = load_dataset(&data.dataset, data.split.split())
        .with_context(|| format!("loading dataset {}", data.dataset.display()))?;
    let prepared = logs
        .into_iter()
        .map(|(e, log)| PreparedScenario::new(e.id.clone(), log).with_context(|| format!("scenario {}", e.id)))
        .collect::<Result<Vec<_>, _>>()?;
    if prepared.is_empty() {
        return Err(CliError::Data(anyhow::anyhow!("no scenarios in the selected split")));
    }
    Ok(prepared)
}

fn check_degradation(noise: f64, latency: f64) -> Result<(), CliError> {
    if !(noise.is_finite() && noise >= 0.0) || !(latency.is_finite() && latency >= 0.0) {
        return Err(CliError::Usage("noise and latency must be non-negative".into()));
    }
    Ok(())
}

fn settings(data: &DatasetArgs, config: V2xConfig, noise: f64, latency: f64) -> EvalSettings {
    let mut s = EvalSettings::new(config, data.horizon);
    s.samples = data.samples;
    s.seed = data.seed;
    s.noise = noise;
    s.latency = latency;
    s
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn report_json(r: &MetricsReport) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(r).context("serializing report")?;
    text.push('\n');
    Ok(text)
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    check_degradation(a.noise, a.latency)?;
    let prepared = load(&a.data)?;
    let s = settings(&a.data, a.config, a.noise, a.latency);
    let r = evaluate_batch(&prepared, &s).context("evaluating")?;
    let text = report_json(&r)?;
    match &a.out {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    eprint!("{}", table::render(std::slice::from_ref(&r)));
    Ok(())
}

/// One point of a sweep, averaged over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub config: V2xConfig,
    pub value: f64,
    pub apa: f64,
    pub miou: f64,
    pub vpq: f64,
    pub map: f64,
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    for &v in &a.values {
        match a.param {
            SweepParam::Noise => check_degradation(v, 0.0)?,
            SweepParam::Latency => check_degradation(0.0, v)?,
        }
    }
    let prepared = load(&a.data)?;
    let mut points = Vec::new();
    for &config in &a.configs {
        for &value in &a.values {
            let (noise, latency) = match a.param {
                SweepParam::Noise => (value, 0.0),
                SweepParam::Latency => (0.0, value),
            };
            let mut p = SweepPoint { config, value, apa: 0.0, miou: 0.0, vpq: 0.0, map: 0.0 };
            for trial in 0..a.trials {
                let mut s = settings(&a.data, config, noise, latency);
                s.seed = a.data.seed + trial;
                let r = evaluate_batch(&prepared, &s).with_context(|| format!("evaluating {config} at {value}"))?;
                p.apa += r.accident.apa;
                p.miou += r.motion.miou;
                p.vpq += r.motion.vpq;
                p.map += r.detection.map;
            }
            let n = a.trials as f64;
            p.apa /= n;
            p.miou /= n;
            p.vpq /= n;
            p.map /= n;
            log::info!("{config} {}={value}: apa {:.4}", a.param.name(), p.apa);
            points.push(p);
        }
    }

    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let csv_path = a.out.join(format!("sweep-{}.csv", a.param.name()));
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    w.write_record(["config", a.param.name(), "apa", "miou", "vpq", "map"]).context("writing csv")?;
    for p in &points {
        w.write_record([
            p.config.to_string(),
            p.value.to_string(),
            p.apa.to_string(),
            p.miou.to_string(),
            p.vpq.to_string(),
            p.map.to_string(),
        ])
        .context("writing csv")?;
    }
    w.flush().context("writing csv")?;
    let unit = match a.param {
        SweepParam::Noise => "pose noise mean (m)",
        SweepParam::Latency => "latency (s)",
    };
    write_text(&a.out.join(format!("sweep-{}.svg", a.param.name())), &plot::line_plot(&points, unit))?;
    println!("{}", csv_path.display());
    Ok(())
}

fn report(a: ReportArgs) -> Result<(), CliError> {
    let mut reports = Vec::new();
    for p in &a.inputs {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        reports.push(parse_report(&text).with_context(|| format!("parsing {}", p.display()))?);
    }
    let md = table::render(&reports);
    match &a.out {
        Some(p) => write_text(p, &md)?,
        None => print!("{md}"),
    }
    Ok(())
}

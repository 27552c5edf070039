use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wardflow::eventlog::{
    apply_category_map, parse_event_log, reconstruct_journeys, write_event_log, CategoryMap,
    IngestStats, LogSchema, TimestampFormat, UnknownPolicy,
};
use wardflow::network::{export, import, Format};
use wardflow::powerlaw::XminPolicy;
use wardflow::report::{self, AnalysisConfig, AttackKind, InputDigest, Provenance, Section};
use wardflow::resilience::RecomputePolicy;
use wardflow::synth::{self, LengthDistribution, ModelFamily, ModelSpec};
use wardflow::{build_network, TransferNetwork};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_ANALYSIS: u8 = 3;

#[derive(Parser)]
#[command(name = "wardflow", version, about = "Patient-transfer network analysis")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a transfer network from an event log.
    Build(BuildArgs),
    /// Analyse a network file (or an event log with --log) and print a JSON report.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic event log from a reference network model.
    Synth(SynthArgs),
    /// Convert a network file to another format.
    Export(ExportArgs),
}

#[derive(Args)]
struct LogOptions {
    /// Location-to-category map (two columns with a header row).
    #[arg(long)]
    categories: Option<PathBuf>,
    /// Fail on locations missing from the category map.
    #[arg(long)]
    reject_unknown: bool,
    #[arg(long, default_value = ",")]
    delimiter: char,
    #[arg(long, default_value = "admission_id")]
    admission_column: String,
    #[arg(long, default_value = "location")]
    location_column: String,
    #[arg(long, default_value = "timestamp")]
    timestamp_column: String,
    /// strftime pattern; ISO-8601 when omitted.
    #[arg(long)]
    timestamp_format: Option<String>,
}

#[derive(Args)]
struct BuildArgs {
    log: PathBuf,
    #[command(flatten)]
    log_options: LogOptions,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Output format (graphml, dot, csv); guessed from the output name, else csv.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    /// Treat the input as an event log rather than a network file.
    #[arg(long)]
    log: bool,
    #[command(flatten)]
    log_options: LogOptions,
    /// Read an edge-list input as undirected.
    #[arg(long)]
    undirected: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hub/bottleneck upper quantile.
    #[arg(long, default_value_t = 0.2)]
    quantile: f64,
    /// Bootstrap replicates for the degree-tail fit (0 skips p-value and CI).
    #[arg(long, default_value_t = 200)]
    boot: usize,
    /// Fix the tail threshold instead of scanning for it.
    #[arg(long)]
    xmin: Option<u64>,
    /// Reference networks per small-world ensemble.
    #[arg(long, default_value_t = 20)]
    sw_samples: usize,
    /// Attack strategies, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "random,degree,betweenness")]
    attack: Vec<String>,
    #[arg(long, default_value_t = 20)]
    random_runs: usize,
    /// Fraction of nodes removed per attack step.
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Rank targeted attacks once instead of after every step.
    #[arg(long)]
    static_order: bool,
    /// Use 1/weight edge lengths for betweenness.
    #[arg(long)]
    weighted_betweenness: bool,
    /// Sections to leave out, comma separated.
    #[arg(long, value_delimiter = ',')]
    skip: Vec<String>,
    /// Report file; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Directory for plot-ready CSV sidecars.
    #[arg(long)]
    sidecars: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    /// Ring rewiring (Watts–Strogatz).
    Ws,
    /// Preferential attachment (Barabási–Albert).
    Ba,
    /// Uniform random (Erdős–Rényi).
    Er,
    /// Configuration model from --degrees.
    Config,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Degree sequence for the configuration model.
    #[arg(long, value_delimiter = ',')]
    degrees: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    journeys: usize,
    /// Mean stops per journey (geometric, at least 2).
    #[arg(long, default_value_t = 14.0)]
    mean_stops: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Event-log output; standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the generating network (format from extension).
    #[arg(long)]
    network_output: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    input: PathBuf,
    /// Target format: graphml, dot or csv.
    #[arg(long)]
    to: String,
    #[arg(long)]
    undirected: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn input_err(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.to_string(),
    }
}

fn usage_err(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| input_err(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| input_err(format!("stdout: {e}"))),
    }
}

fn delimiter(c: char) -> Result<u8, Failure> {
    u8::try_from(c).map_err(|_| usage_err(format!("delimiter must be a single byte, got {c:?}")))
}

struct LoadedLog {
    network: TransferNetwork,
    stats: IngestStats,
    categorised: bool,
    digests: Vec<InputDigest>,
}

fn load_log(path: &Path, opts: &LogOptions) -> Result<LoadedLog, Failure> {
    let schema = LogSchema {
        admission_column: opts.admission_column.clone(),
        location_column: opts.location_column.clone(),
        timestamp_column: opts.timestamp_column.clone(),
        delimiter: delimiter(opts.delimiter)?,
        timestamp_format: opts
            .timestamp_format
            .clone()
            .map_or(TimestampFormat::Iso8601, TimestampFormat::Custom),
    };
    let bytes = read(path)?;
    let mut digests = vec![InputDigest::of("event_log", &bytes)];
    let (events, stats) = parse_event_log(bytes.as_slice(), &schema).map_err(input_err)?;
    let mut journeys = reconstruct_journeys(&events);
    if let Some(map_path) = &opts.categories {
        let map_bytes = read(map_path)?;
        digests.push(InputDigest::of("category_map", &map_bytes));
        let policy = if opts.reject_unknown {
            UnknownPolicy::RejectUnknown
        } else {
            UnknownPolicy::KeepAsIs
        };
        let map = CategoryMap::from_reader(map_bytes.as_slice(), schema.delimiter, policy)
            .map_err(input_err)?;
        journeys = apply_category_map(&journeys, &map).map_err(input_err)?;
    }
    Ok(LoadedLog {
        network: build_network(&journeys),
        stats,
        categorised: opts.categories.is_some(),
        digests,
    })
}

fn load_network(path: &Path, undirected: bool) -> Result<(TransferNetwork, Format, Vec<u8>), Failure> {
    let format = Format::from_path(path)
        .ok_or_else(|| input_err(format!("{}: cannot tell the network format from the extension", path.display())))?;
    let bytes = read(path)?;
    let net = import(bytes.as_slice(), format, !undirected).map_err(input_err)?;
    Ok((net, format, bytes))
}

fn output_format(explicit: Option<&str>, path: Option<&Path>) -> Result<Format, Failure> {
    match explicit {
        Some(f) => f.parse().map_err(usage_err),
        None => Ok(path.and_then(Format::from_path).unwrap_or(Format::EdgeListCsv)),
    }
}

fn cmd_build(a: BuildArgs) -> Result<(), Failure> {
    let loaded = load_log(&a.log, &a.log_options)?;
    eprintln!(
        "{}",
        serde_json::to_string(&loaded.stats).expect("stats serialise")
    );
    let format = output_format(a.format.as_deref(), a.output.as_deref())?;
    let mut buf = Vec::new();
    export(&loaded.network, format, &mut buf).map_err(input_err)?;
    write_output(a.output.as_deref(), &buf)
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<(), Failure> {
    let mut config = AnalysisConfig {
        seed: a.seed,
        quantile: a.quantile,
        n_boot: a.boot,
        xmin_policy: a.xmin.map_or(XminPolicy::Scan, XminPolicy::Fixed),
        sw_samples: a.sw_samples,
        random_runs: a.random_runs,
        step_fraction: a.step,
        recompute_policy: if a.static_order {
            RecomputePolicy::Static
        } else {
            RecomputePolicy::Adaptive
        },
        weighted_betweenness: a.weighted_betweenness,
        ..Default::default()
    };
    config.attacks = a
        .attack
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<AttackKind>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage_err)?;
    config.skip = a
        .skip
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Section>())
        .collect::<Result<BTreeSet<_>, _>>()
        .map_err(usage_err)?;

    let (net, provenance, digests) = if a.log {
        let l = load_log(&a.input, &a.log_options)?;
        (
            l.network,
            Provenance::EventLog {
                stats: l.stats,
                categorised: l.categorised,
            },
            l.digests,
        )
    } else {
        let (net, format, bytes) = load_network(&a.input, a.undirected)?;
        (
            net,
            Provenance::NetworkFile {
                format: format.to_string(),
            },
            vec![InputDigest::of("network", &bytes)],
        )
    };

    let rep = report::analyze(&net, &provenance, &digests, &config);
    if let Some(dir) = &a.sidecars {
        fs::create_dir_all(dir).map_err(|e| input_err(format!("{}: {e}", dir.display())))?;
        for s in &rep.sidecars {
            let p = dir.join(&s.name);
            fs::write(&p, &s.contents).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
        }
    }
    write_output(a.output.as_deref(), rep.to_json().as_bytes())?;
    if rep.all_failed {
        return Err(Failure {
            code: EXIT_ANALYSIS,
            message: "every report section failed".into(),
        });
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), Failure> {
    let family = match a.model {
        Model::Ws => ModelFamily::RingRewire { k: a.k, p: a.p },
        Model::Ba => ModelFamily::PreferentialAttachment { m: a.m },
        Model::Er => ModelFamily::UniformRandom { p: a.p },
        Model::Config => ModelFamily::Configuration {
            degrees: a.degrees.clone(),
        },
    };
    let n = match (a.n, a.model) {
        (Some(n), _) => n,
        (None, Model::Config) => a.degrees.len(),
        (None, _) => 100,
    };
    let spec = ModelSpec {
        family,
        n,
        seed: wardflow::seed::derive_seed(a.seed, "synth/network"),
    };
    let net = synth::generate_network(&spec).map_err(input_err)?;
    let lengths = LengthDistribution::Geometric {
        mean: a.mean_stops,
        min: 2,
    };
    let walk_seed = wardflow::seed::derive_seed(a.seed, "synth/journeys");
    let (journeys, stats) =
        synth::generate_event_log(&net, a.journeys, lengths, walk_seed).map_err(input_err)?;
    eprintln!("{}", serde_json::to_string(&stats).expect("stats serialise"));
    if let Some(p) = &a.network_output {
        let format = Format::from_path(p).unwrap_or(Format::EdgeListCsv);
        let mut buf = Vec::new();
        export(&net, format, &mut buf).map_err(input_err)?;
        fs::write(p, buf).map_err(|e| input_err(format!("{}: {e}", p.display())))?;
    }
    let mut buf = Vec::new();
    write_event_log(&journeys, &LogSchema::default(), &mut buf).map_err(input_err)?;
    write_output(a.output.as_deref(), &buf)
}

fn cmd_export(a: ExportArgs) -> Result<(), Failure> {
    let (net, _, _) = load_network(&a.input, a.undirected)?;
    let format: Format = a.to.parse().map_err(usage_err)?;
    let mut buf = Vec::new();
    export(&net, format, &mut buf).map_err(input_err)?;
    write_output(a.output.as_deref(), &buf)
}

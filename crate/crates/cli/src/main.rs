use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use pgfold::emit::{self, machine_artifacts, table_artifacts, Formats, ScheduleTable};
use pgfold::folding::{DesignOption, FoldPlan};
use pgfold::geometry::{verify_pg_incidence, PgParams};
use pgfold::pipeline::{self, Choice, GraphSource, RunConfig};
use pgfold::schedule::{PipelineLevel, Side};
use pgfold::sim::{check_dataflow_equivalence, simulate, RunArtifacts, SimConfig};
use pgfold::Error;

#[derive(Parser)]
#[command(name = "pgfold", version, about = "Folded architectures for projective-geometry graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the point-hyperplane graph of P(n, GF(p^s)).
    BuildPg(BuildPgArgs),
    /// Add dummy nodes to a graph.
    Expand(DesignArgs),
    /// Compute folded access sequences and schedule tables.
    Fold(DesignArgs),
    /// Synthesize schedules, LUTs, addresses, netlist and timing.
    Schedule(DesignArgs),
    /// Simulate an existing run directory.
    Simulate(SimulateArgs),
    /// Emit every artifact format without simulating.
    Emit(DesignArgs),
    /// Full flow: build, expand, fold, schedule, simulate, emit.
    Run(DesignArgs),
    /// Re-check a run directory from its files.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct BuildPgArgs {
    /// n,p,s
    #[arg(long)]
    geometry: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DesignArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// n,p,s
    #[arg(long, conflicts_with = "graph")]
    geometry: Option<String>,
    /// graph.json or incidence CSV
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Fold factor, or "auto".
    #[arg(long)]
    q: Option<String>,
    /// F range lo,hi used by --q auto.
    #[arg(long)]
    f_range: Option<String>,
    /// Dummy nodes to add, or "auto".
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    design_option: Option<u8>,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long)]
    delta: Option<usize>,
    /// none, writeback, node or graph
    #[arg(long)]
    pipeline: Option<String>,
    /// Comma-separated subset of csv,json,hdl.
    #[arg(long)]
    emit: Option<String>,
    #[arg(long)]
    word_width: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    dir: PathBuf,
    #[arg(long, default_value_t = 2)]
    iterations: usize,
}

#[derive(Args)]
struct VerifyArgs {
    dir: PathBuf,
}

/// Config file contents; every key optional.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    geometry: Option<[u32; 3]>,
    graph: Option<PathBuf>,
    q: Option<Choice>,
    f_range: Option<(usize, usize)>,
    alpha: Option<Choice>,
    design_option: Option<u8>,
    #[serde(rename = "T")]
    t: Option<usize>,
    delta: Option<usize>,
    pipeline: Option<String>,
    emit: Option<Vec<String>>,
    word_width: Option<usize>,
    iterations: Option<usize>,
    out: Option<PathBuf>,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Verification(String),
    Usage(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Structural { .. } | Error::Internal(_) => Failure::Verification(e.to_string()),
            other => Failure::Usage(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(e) => e.into(),
            Err(e) => Failure::Usage(e),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(anyhow::anyhow!(msg.into()))
}

fn parse_triple(s: &str) -> Result<[u32; 3], Failure> {
    let v: Vec<u32> = s
        .split(',')
        .map(|x| x.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--geometry expects n,p,s (for example 3,2,1), got {s:?}")))?;
    <[u32; 3]>::try_from(v).map_err(|_| usage(format!("--geometry expects three values n,p,s, got {s:?}")))
}

fn parse_range(s: &str) -> Result<(usize, usize), Failure> {
    let v: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--f-range expects lo,hi, got {s:?}")))?;
    match v.as_slice() {
        [lo, hi] => Ok((*lo, *hi)),
        _ => Err(usage(format!("--f-range expects lo,hi, got {s:?}"))),
    }
}

fn design_option(v: u8) -> Result<DesignOption, Failure> {
    DesignOption::try_from(v).map_err(|_| usage(format!("--design-option must be 1 or 2, got {v}")))
}

/// Merges the config file and flags into a run config and output dir.
fn resolve(args: &DesignArgs) -> Result<(RunConfig, Option<PathBuf>), Failure> {
    let file: ConfigFile = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    let geometry = match &args.geometry {
        Some(g) => Some(parse_triple(g)?),
        None if args.graph.is_some() => None,
        None => file.geometry,
    };
    let graph = args.graph.clone().or(if args.geometry.is_some() { None } else { file.graph });
    let source = match (geometry, graph) {
        (Some([n, p, s]), None) => GraphSource::Geometry(PgParams::new(n, p, s)?),
        (None, Some(path)) => GraphSource::File(path),
        (Some(_), Some(_)) => return Err(usage("give exactly one of --geometry and --graph")),
        (None, None) => return Err(usage("a graph is required: pass --geometry n,p,s or --graph FILE")),
    };
    let mut cfg = RunConfig::new(source);
    if let Some(q) = args.q.as_deref().map(str::parse).transpose()?.or(file.q) {
        cfg.q = q;
    }
    if let Some(a) = args.alpha.as_deref().map(str::parse).transpose()?.or(file.alpha) {
        cfg.alpha = a;
    }
    cfg.f_range = match &args.f_range {
        Some(r) => Some(parse_range(r)?),
        None => file.f_range,
    };
    if let Some(o) = args.design_option.or(file.design_option) {
        cfg.design_option = design_option(o)?;
    }
    cfg.t = args.t.or(file.t).unwrap_or(cfg.t);
    cfg.delta = args.delta.or(file.delta).unwrap_or(cfg.delta);
    if let Some(p) = args.pipeline.clone().or(file.pipeline) {
        cfg.pipeline = p.parse::<PipelineLevel>()?;
    }
    if let Some(list) = args.emit.clone().or(file.emit.map(|v| v.join(","))) {
        cfg.emission.formats = Formats::parse(&list)?;
    }
    cfg.emission.word_width = args.word_width.or(file.word_width).unwrap_or(cfg.emission.word_width);
    cfg.iterations = args.iterations.or(file.iterations).unwrap_or(cfg.iterations);
    if cfg.iterations == 0 {
        return Err(usage("--iterations must be at least 1"));
    }
    Ok((cfg, args.out.clone().or(file.out)))
}

fn need_out(out: Option<PathBuf>) -> Result<PathBuf, Failure> {
    out.ok_or_else(|| usage("an output directory is required: pass --out DIR"))
}

fn write(dir: &Path, files: &BTreeMap<String, String>) -> Result<(), Failure> {
    pipeline::write_run_dir(dir, files)?;
    Ok(())
}

fn cmd_build_pg(args: &BuildPgArgs) -> Result<(), Failure> {
    let [n, p, s] = parse_triple(&args.geometry)?;
    let params = PgParams::new(n, p, s)?;
    let graph = pgfold::geometry::build_pg_graph(&params)?;
    let mut files = BTreeMap::new();
    files.insert(emit::GRAPH_FILE.to_string(), graph.to_json());
    files.insert("incidence.csv".to_string(), emit::incidence_csv(&graph));
    write(&args.out, &files)?;
    println!(
        "P({n}, GF({})): J = {}, gamma = {}, D = {:?}",
        params.q(),
        graph.order(),
        graph.degree(),
        graph.offsets()
    );
    let report = verify_pg_incidence(&graph.incidence_lists(), &params);
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verification("incidence checks failed".into()))
    }
}

fn cmd_expand(args: &DesignArgs) -> Result<(), Failure> {
    let (cfg, out) = resolve(args)?;
    let out = need_out(out)?;
    let source = pipeline::source_graph(&cfg.source)?;
    let choice = pipeline::resolve_fold(&source, cfg.q, cfg.f_range, cfg.alpha)?;
    let g = pgfold::circulant::expand_circulant(&source, choice.alpha);
    let mut files = BTreeMap::new();
    files.insert(emit::GRAPH_FILE.to_string(), g.to_json());
    files.insert("adjacency.csv".to_string(), emit::adjacency_csv(&g));
    write(&out, &files)?;
    println!(
        "alpha = {}: order {} -> {}, degree {} -> {}, D' = {:?}",
        choice.alpha,
        source.order(),
        g.order(),
        source.degree(),
        g.degree(),
        g.offsets()
    );
    Ok(())
}

fn cmd_fold(args: &DesignArgs) -> Result<(), Failure> {
    let (cfg, out) = resolve(args)?;
    let out = need_out(out)?;
    let b = pipeline::build(&cfg)?;
    let mut files = BTreeMap::new();
    for side in Side::BOTH {
        let sd = b.design.side(side);
        files.insert(emit::sequence_file_name(side), emit::report_json(&sd.sequence));
        files.insert(emit::schedule_file_name(side), ScheduleTable::from_sequence(&sd.sequence).to_csv());
        println!(
            "{side}: {} slots, rho = {}, theta = {}, rho_hat = {}",
            sd.sequence.slot_count(),
            sd.rho.rho,
            sd.rho.theta,
            sd.rho.rho_hat
        );
    }
    write(&out, &files)?;
    print_fold(&b.choice, &b.design.plan);
    report_checks(&b.checks)
}

fn print_fold(choice: &pipeline::FoldChoice, plan: &FoldPlan) {
    println!(
        "J = {} (alpha = {}), q = {}, F = {}, option {}",
        choice.order, choice.alpha, plan.q, plan.f, plan.design_option
    );
}

fn report_checks(checks: &[pgfold::report::CheckReport]) -> Result<(), Failure> {
    let mut ok = true;
    for c in checks {
        println!("{c}");
        ok &= c.passed();
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification("structural checks failed".into()))
    }
}

fn cmd_schedule(args: &DesignArgs, all_formats: bool) -> Result<(), Failure> {
    let (mut cfg, out) = resolve(args)?;
    let out = need_out(out)?;
    if all_formats && args.emit.is_none() {
        cfg.emission.formats = Formats::default();
    }
    let b = pipeline::build(&cfg)?;
    let files = if all_formats {
        pipeline::render_files(&cfg, &b, None)?
    } else {
        let mut f = machine_artifacts(&b.design);
        f.insert(pipeline::CONFIG_FILE.to_string(), emit::report_json(&cfg));
        if cfg.emission.formats.csv {
            f.extend(table_artifacts(&b.design));
        }
        f
    };
    write(&out, &files)?;
    print_fold(&b.choice, &b.design.plan);
    for side in Side::BOTH {
        let h = b.design.timing.half(side);
        println!("{side} half: {} slots, length {} cycles", h.slots.len(), h.length);
    }
    println!("iteration length {} cycles, wrote {} files to {}", b.design.timing.iteration_length, files.len() + 1, out.display());
    report_checks(&b.checks)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let art = RunArtifacts::load(&args.dir)?;
    let (report, trace) = simulate(&art, &SimConfig { iterations: args.iterations })?;
    let dataflow = check_dataflow_equivalence(&art.graph, &trace, args.iterations);
    let mut files = BTreeMap::new();
    files.insert(pipeline::SIM_REPORT_FILE.to_string(), report.to_json());
    files.insert(pipeline::SIM_SUMMARY_FILE.to_string(), format!("{report}\n{dataflow}\n"));
    emit::write_files(&args.dir, &files)?;
    println!("{report}\n{dataflow}");
    if report.passed() && dataflow.passed() {
        Ok(())
    } else {
        Err(Failure::Verification("simulation found violations".into()))
    }
}

fn cmd_run(args: &DesignArgs) -> Result<(), Failure> {
    let (cfg, out) = resolve(args)?;
    let out = need_out(out)?;
    let o = pipeline::run(&cfg, &out)?;
    print_fold(&o.build.choice, &o.build.design.plan);
    for c in &o.build.checks {
        println!("{c}");
    }
    println!("{}\n{}", o.sim, o.dataflow);
    println!("wrote {} files to {}", o.files.len() + 1, out.display());
    if o.passed() {
        Ok(())
    } else {
        Err(Failure::Verification("run failed verification".into()))
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), Failure> {
    let missing: Vec<String> = pgfold::sim::required_files()
        .into_iter()
        .chain([emit::MANIFEST_FILE.to_string(), pipeline::CONFIG_FILE.to_string()])
        .filter(|f| !args.dir.join(f).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(usage(format!("{} is not a complete run directory; missing {missing:?}", args.dir.display())));
    }
    // a present but malformed artifact is a verification failure
    let v = pipeline::verify(&args.dir).map_err(|e| Failure::Verification(e.to_string()))?;
    println!("{v}");
    if v.passed() {
        println!("verify: PASS");
        Ok(())
    } else {
        Err(Failure::Verification("verify: FAIL".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::BuildPg(a) => cmd_build_pg(a),
        Command::Expand(a) => cmd_expand(a),
        Command::Fold(a) => cmd_fold(a),
        Command::Schedule(a) => cmd_schedule(a, false),
        Command::Emit(a) => cmd_schedule(a, true),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! End-to-end flow: graph, expansion, fold, synthesis, simulation, emission.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::circulant::{divisors, expand_circulant, select_alpha, CirculantBipartiteGraph};
use crate::emit::{
    self, hdl::emit_hdl, machine_artifacts, parse_incidence_csv, parse_json, render_trace, report_json,
    table_artifacts, EmissionConfig, Manifest, MANIFEST_FILE,
};
use crate::error::{Error, Result};
use crate::folding::{verify_theorem1, DesignOption, FoldPlan};
use crate::geometry::{build_pg_graph, verify_pg_incidence, PgParams};
use crate::report::CheckReport;
use crate::schedule::{synthesize, Design, PipelineLevel, Side};
use crate::sim::{check_dataflow_equivalence, simulate, RunArtifacts, SimConfig, SimReport};

pub const CONFIG_FILE: &str = "config.json";
pub const SIM_REPORT_FILE: &str = "sim_report.json";
pub const SIM_SUMMARY_FILE: &str = "sim_summary.txt";
pub const CHECKS_FILE: &str = "checks.json";
pub const TRACE_FILE: &str = "address_trace.csv";

/// Largest order for which the quadratic incidence checks run.
const PAIR_CHECK_LIMIT: usize = 400;

/// An automatically chosen or fixed value; serialized as `"auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Choice {
    #[default]
    Auto,
    Fixed(usize),
}

impl FromStr for Choice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Choice::Auto),
            v => v
                .parse()
                .map(Choice::Fixed)
                .map_err(|_| Error::Config(format!("expected \"auto\" or a non-negative integer, got {v:?}"))),
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Auto => f.write_str("auto"),
            Choice::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Choice::Auto => s.serialize_str("auto"),
            Choice::Fixed(v) => s.serialize_u64(*v as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(usize),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(n) => Ok(Choice::Fixed(n)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    Geometry(PgParams),
    /// `graph.json` or an incidence CSV.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: GraphSource,
    pub q: Choice,
    /// Acceptable range of F for `q = auto`, inclusive.
    pub f_range: Option<(usize, usize)>,
    pub alpha: Choice,
    pub design_option: DesignOption,
    #[serde(rename = "T")]
    pub t: usize,
    pub delta: usize,
    pub pipeline: PipelineLevel,
    pub emission: EmissionConfig,
    pub iterations: usize,
}

impl RunConfig {
    pub fn new(source: GraphSource) -> Self {
        RunConfig {
            source,
            q: Choice::Auto,
            f_range: None,
            alpha: Choice::Auto,
            design_option: DesignOption::PatternMajor,
            t: 1,
            delta: 1,
            pipeline: PipelineLevel::None,
            emission: EmissionConfig::default(),
            iterations: 2,
        }
    }
}

pub fn load_graph(path: &Path) -> Result<CirculantBipartiteGraph> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "csv") {
        CirculantBipartiteGraph::from_incidence_lists(&parse_incidence_csv(&text)?)
    } else {
        CirculantBipartiteGraph::from_json(&text)
    }
}

pub fn source_graph(source: &GraphSource) -> Result<CirculantBipartiteGraph> {
    match source {
        GraphSource::Geometry(p) => build_pg_graph(p),
        GraphSource::File(path) => load_graph(path),
    }
}

fn is_prime_order(j: usize) -> bool {
    j >= 2 && divisors(j).len() == 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldChoice {
    pub alpha: usize,
    pub order: usize,
    pub q: usize,
}

fn pick_q(order: usize, f_range: Option<(usize, usize)>) -> Option<usize> {
    let ds = divisors(order);
    match f_range {
        // largest F in range, so the smallest such q
        Some((lo, hi)) => ds.into_iter().filter(|&q| q >= 2 && (lo..=hi).contains(&(order / q))).min(),
        // a prime order only offers the full fold F = 1; expand instead
        None => ds.into_iter().find(|&q| q >= 2 && q < order),
    }
}

fn q_acceptor(q: Choice, f_range: Option<(usize, usize)>) -> impl Fn(usize) -> bool {
    move |order| match q {
        Choice::Fixed(q) => q >= 1 && order % q == 0,
        Choice::Auto => pick_q(order, f_range).is_some(),
    }
}

/// Settles the number of dummy nodes and the fold factor.
///
/// With `alpha = auto` the graph is expanded only when the requested fold
/// factor does not divide the order, or, for `q = auto`, when no usable
/// divisor exists (prime order, or none within the F range).
pub fn resolve_fold(graph: &CirculantBipartiteGraph, q: Choice, f_range: Option<(usize, usize)>, alpha: Choice) -> Result<FoldChoice> {
    if let Some((lo, hi)) = f_range {
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!("F range {lo},{hi} is empty")));
        }
    }
    if q == Choice::Fixed(0) {
        return Err(Error::Config("fold factor must be at least 1".into()));
    }
    let j = graph.order();
    let accept = q_acceptor(q, f_range);
    let alpha = match alpha {
        Choice::Fixed(a) => a,
        Choice::Auto if accept(j) => 0,
        Choice::Auto => select_alpha(graph, j.max(16), &accept)
            .map(|c| c.alpha)
            .ok_or_else(|| Error::Config(format!("no expansion up to {} dummy nodes admits the fold", j.max(16))))?,
    };
    let order = j + alpha;
    let q = match q {
        Choice::Fixed(q) if order % q == 0 => q,
        Choice::Fixed(q) => {
            let hint = match select_alpha(graph, j.max(16), q_acceptor(Choice::Fixed(q), None)) {
                Some(c) => format!("; try --alpha {} (order {}), or --alpha auto", c.alpha, c.order),
                None => String::new(),
            };
            return Err(Error::FoldFactor {
                q,
                order,
                divisors: divisors(order),
                hint,
            });
        }
        Choice::Auto => pick_q(order, f_range).ok_or_else(|| {
            let why = if is_prime_order(order) { "prime" } else { "without a divisor in the F range" };
            Error::Config(format!(
                "order {order} is {why}; divisors are {:?}; expand with --alpha",
                divisors(order)
            ))
        })?,
    };
    Ok(FoldChoice { alpha, order, q })
}

/// Folded design plus the checks run while building it.
#[derive(Debug, Clone)]
pub struct Build {
    pub source: CirculantBipartiteGraph,
    pub choice: FoldChoice,
    pub design: Design,
    pub checks: Vec<CheckReport>,
}

pub fn build(config: &RunConfig) -> Result<Build> {
    let source = source_graph(&config.source)?;
    let choice = resolve_fold(&source, config.q, config.f_range, config.alpha)?;
    let graph = expand_circulant(&source, choice.alpha);
    let plan = FoldPlan::new(choice.order, choice.q, config.design_option, config.t, config.delta)?;
    let design = synthesize(&graph, &plan, config.pipeline)?;
    let mut checks = Vec::new();
    if let GraphSource::Geometry(p) = &config.source {
        if source.order() <= PAIR_CHECK_LIMIT {
            checks.push(verify_pg_incidence(&source.incidence_lists(), p));
        } else if p.n == 2 {
            checks.push(crate::geometry::perfect_difference_set(source.offsets(), source.order()));
        }
    }
    for side in Side::BOTH {
        let sd = design.side(side);
        let mut r = verify_theorem1(&sd.sequence, &sd.graph, &plan);
        r.name = format!("theorem1 {side}");
        checks.push(r);
    }
    Ok(Build {
        source,
        choice,
        design,
        checks,
    })
}

/// Outcome of a full run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub build: Build,
    pub sim: SimReport,
    pub dataflow: CheckReport,
    pub files: BTreeMap<String, String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.sim.passed() && self.dataflow.passed() && self.build.checks.iter().all(CheckReport::passed)
    }
}

#[derive(Serialize)]
struct ChecksFile<'a> {
    fold: FoldChoice,
    checks: &'a [CheckReport],
    dataflow: &'a CheckReport,
    resources: &'a crate::schedule::ResourceReport,
}

/// Artifact texts for a design; `sim` adds the simulation outputs.
pub fn render_files(
    config: &RunConfig,
    build: &Build,
    sim: Option<(&SimReport, &CheckReport)>,
) -> Result<BTreeMap<String, String>> {
    let design = &build.design;
    let mut files = machine_artifacts(design);
    files.insert(CONFIG_FILE.to_string(), report_json(config));
    let formats = config.emission.formats;
    if formats.csv {
        files.extend(table_artifacts(design));
    }
    if formats.hdl {
        files.extend(emit_hdl(design, &config.emission)?);
    }
    if let Some((report, dataflow)) = sim {
        files.insert(SIM_SUMMARY_FILE.to_string(), format!("{report}\n{dataflow}\n"));
        if formats.json {
            files.insert(SIM_REPORT_FILE.to_string(), report.to_json());
            files.insert(
                CHECKS_FILE.to_string(),
                report_json(&ChecksFile {
                    fold: build.choice,
                    checks: &build.checks,
                    dataflow,
                    resources: &design.resources,
                }),
            );
        }
    }
    Ok(files)
}

/// Writes `files` plus a manifest of them.
pub fn write_run_dir(dir: &Path, files: &BTreeMap<String, String>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    emit::write_files(dir, files)?;
    let manifest = Manifest::build(files).to_json();
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest).map_err(|e| Error::io(&path, e))
}

/// Builds, simulates from the emitted text, and writes the run directory.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let build = build(config)?;
    let art = RunArtifacts::from_design(&build.design)?;
    let (sim, trace) = simulate(&art, &SimConfig { iterations: config.iterations })?;
    let dataflow = check_dataflow_equivalence(&build.design.graph, &trace, config.iterations);
    let files = render_files(config, &build, Some((&sim, &dataflow)))?;
    write_run_dir(out, &files)?;
    Ok(RunOutcome {
        dir: out.to_path_buf(),
        build,
        sim,
        dataflow,
        files,
    })
}

/// Re-checks a run directory from its files alone.
#[derive(Debug, Clone)]
pub struct Verification {
    pub manifest: CheckReport,
    pub sim: SimReport,
    pub dataflow: CheckReport,
    pub trace: CheckReport,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.manifest.passed() && self.sim.passed() && self.dataflow.passed() && self.trace.passed()
    }
}

impl fmt::Display for Verification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.manifest)?;
        writeln!(f, "{}", self.sim)?;
        writeln!(f, "{}", self.dataflow)?;
        write!(f, "{}", self.trace)
    }
}

pub fn verify(dir: &Path) -> Result<Verification> {
    let read = |name: &str| {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
    };
    let manifest: Manifest = parse_json(MANIFEST_FILE, &read(MANIFEST_FILE)?)?;
    let mut mcheck = CheckReport::new("manifest");
    mcheck.check(manifest.format_version == emit::FORMAT_VERSION, || {
        format!("format version {}", manifest.format_version)
    });
    for entry in &manifest.files {
        match read(&entry.path) {
            Ok(text) => mcheck.check(emit::sha256_hex(text.as_bytes()) == entry.sha256, || {
                format!("{} does not match its recorded hash", entry.path)
            }),
            Err(e) => mcheck.fail(e.to_string()),
        }
    }
    let config: RunConfig = parse_json(CONFIG_FILE, &read(CONFIG_FILE)?)?;
    let art = RunArtifacts::load(dir)?;
    let (sim, trace) = simulate(&art, &SimConfig { iterations: config.iterations })?;
    let dataflow = check_dataflow_equivalence(&art.graph, &trace, config.iterations);
    let mut tcheck = CheckReport::new("address trace");
    if let Ok(planned) = read(TRACE_FILE) {
        let period = art.timing.iteration_length;
        let observed = render_trace(&trace.iteration_accesses(0, period));
        tcheck.check(observed == planned, || "simulated accesses differ from the emitted trace".into());
    }
    Ok(Verification {
        manifest: mcheck,
        sim,
        dataflow,
        trace: tcheck,
    })
}

//! Text serialization of every artifact, with parsers for the formats the
//! simulator reads back.

pub mod hdl;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circulant::CirculantBipartiteGraph;
use crate::error::{Error, Result};
use crate::folding::{DesignOption, FoldPlan, FoldedSequence};
use crate::schedule::{lut_dump, Design, MemoryLayout, Netlist, PipelineLevel, Side, SwitchKind, TimingPlan};

pub const FORMAT_VERSION: u32 = 1;

/// Artifact formats selected for emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub hdl: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Formats {
            csv: true,
            json: true,
            hdl: true,
        }
    }
}

impl Formats {
    pub fn parse(list: &str) -> Result<Self> {
        let mut f = Formats {
            csv: false,
            json: false,
            hdl: false,
        };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "hdl" => f.hdl = true,
                other => return Err(Error::Config(format!("unknown emit format {other:?}; expected csv, json or hdl"))),
            }
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmissionConfig {
    pub word_width: usize,
    /// Overrides the derived PMU id width; must be wide enough.
    #[serde(default)]
    pub id_width: Option<usize>,
    #[serde(default)]
    pub formats: Formats,
}

impl Default for EmissionConfig {
    fn default() -> Self {
        EmissionConfig {
            word_width: 16,
            id_width: None,
            formats: Formats::default(),
        }
    }
}

/// Bits needed to index `n` distinct values, at least 1.
pub fn index_width(n: usize) -> usize {
    let mut w = 0;
    while (1usize << w) < n {
        w += 1;
    }
    w.max(1)
}

/// Plan, level and layout as stored in the run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanFile {
    pub format_version: u32,
    pub plan: FoldPlan,
    pub pipeline: PipelineLevel,
    pub layout: MemoryLayout,
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("artifact serializes") + "\n"
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::format(what, e))
}

// ---------------------------------------------------------------------------
// Schedule table

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableCell {
    pub ppu: usize,
    /// `None` is the dummy access.
    pub mus: [Option<usize>; 2],
}

impl std::fmt::Display for TableCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mu = |m: Option<usize>| m.map_or("D".to_string(), |m| format!("MU{m}"));
        write!(f, "[PU{} : {}, {} ]", self.ppu, mu(self.mus[0]), mu(self.mus[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TableRow {
    Banner(String),
    Cycle {
        cycle: usize,
        cells: Vec<TableCell>,
        note: String,
    },
}

/// Folding schedule laid out as cycle rows with pattern banners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleTable {
    pub f: usize,
    pub rows: Vec<TableRow>,
}

fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

impl ScheduleTable {
    pub fn from_sequence(seq: &FoldedSequence) -> Self {
        let mut rows = Vec::new();
        let mut last_group = None;
        for (pos, slot) in seq.slots.iter().enumerate() {
            let (group, banner) = match seq.design_option {
                DesignOption::PatternMajor => (slot.pattern, format!("Full Perfect Access Pattern {}", slot.pattern)),
                DesignOption::FoldMajor => (slot.fold, format!("Fold {}", slot.fold)),
            };
            if last_group != Some(group) {
                rows.push(TableRow::Banner(banner));
                last_group = Some(group);
            }
            let cells = seq
                .accesses(pos)
                .into_iter()
                .map(|a| TableCell {
                    ppu: a.ppu,
                    mus: a.pmus,
                })
                .collect();
            let pat = &seq.patterns[slot.pattern];
            let edges: Vec<String> = (0..2)
                .filter(|&b| pat.offsets[b].is_some())
                .map(|b| ordinal(2 * slot.pattern + b))
                .collect();
            let nodes: Vec<String> = (0..seq.f).map(|i| (slot.fold * seq.f + i).to_string()).collect();
            rows.push(TableRow::Cycle {
                cycle: pos,
                cells,
                note: format!("Scheduling {} edge of {{{}}} PUs", edges.join(", "), nodes.join(",")),
            });
        }
        ScheduleTable { f: seq.f, rows }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().flexible(false).from_writer(Vec::new());
        let mut header = vec!["cycle".to_string()];
        header.extend((0..self.f).map(|i| format!("PU{i}")));
        header.push("note".into());
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let rec: Vec<String> = match row {
                TableRow::Banner(b) => {
                    let mut v = vec![b.clone()];
                    v.extend(std::iter::repeat(String::new()).take(self.f + 1));
                    v
                }
                TableRow::Cycle { cycle, cells, note } => {
                    let mut v = vec![cycle.to_string()];
                    v.extend(cells.iter().map(|c| c.to_string()));
                    v.push(note.clone());
                    v
                }
            };
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let what = "schedule table";
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| Error::format(what, e))?.clone();
        if header.len() < 2 || &header[0] != "cycle" || &header[header.len() - 1] != "note" {
            return Err(Error::format(what, "header must be cycle,PU0..,note"));
        }
        let f = header.len() - 2;
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::format(what, e))?;
            let first = &rec[0];
            match first.parse::<usize>() {
                Ok(cycle) => {
                    let cells = (1..=f).map(|i| parse_cell(&rec[i])).collect::<Result<Vec<_>>>()?;
                    rows.push(TableRow::Cycle {
                        cycle,
                        cells,
                        note: rec[f + 1].to_string(),
                    });
                }
                Err(_) => rows.push(TableRow::Banner(first.to_string())),
            }
        }
        Ok(ScheduleTable { f, rows })
    }

    pub fn cycle_rows(&self) -> impl Iterator<Item = (usize, &[TableCell], &str)> {
        self.rows.iter().filter_map(|r| match r {
            TableRow::Cycle { cycle, cells, note } => Some((*cycle, cells.as_slice(), note.as_str())),
            TableRow::Banner(_) => None,
        })
    }

    pub fn banners(&self) -> impl Iterator<Item = &str> {
        self.rows.iter().filter_map(|r| match r {
            TableRow::Banner(b) => Some(b.as_str()),
            TableRow::Cycle { .. } => None,
        })
    }
}

fn parse_cell(s: &str) -> Result<TableCell> {
    let bad = || Error::format("schedule table", format!("malformed cell {s:?}"));
    let inner = s.trim().strip_prefix("[PU").and_then(|x| x.strip_suffix(']')).ok_or_else(bad)?;
    let (ppu, rest) = inner.split_once(" : ").ok_or_else(bad)?;
    let ppu = ppu.trim().parse().map_err(|_| bad())?;
    let mut mus = [None, None];
    let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(bad());
    }
    for (b, p) in parts.iter().enumerate() {
        mus[b] = match *p {
            "D" => None,
            m => Some(m.strip_prefix("MU").and_then(|x| x.parse().ok()).ok_or_else(bad)?),
        };
    }
    Ok(TableCell { ppu, mus })
}

pub fn emit_schedule_table(seq: &FoldedSequence) -> String {
    ScheduleTable::from_sequence(seq).to_csv()
}

// ---------------------------------------------------------------------------
// Graph exports

/// One row per hyperplane: index, then its points in edge order.
pub fn incidence_csv(graph: &CirculantBipartiteGraph) -> String {
    let mut s = String::from("hyperplane,points\n");
    for (h, row) in graph.incidence_lists().iter().enumerate() {
        let pts: Vec<String> = row.iter().map(|p| p.to_string()).collect();
        let _ = writeln!(s, "{h},\"{}\"", pts.join(","));
    }
    s
}

pub fn parse_incidence_csv(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format("incidence CSV", e))?;
        let h: usize = rec[0].parse().map_err(|e| Error::format("incidence CSV", e))?;
        if h != i {
            return Err(Error::format("incidence CSV", format!("row {i} labeled {h}")));
        }
        let pts = rec[1]
            .split(',')
            .filter(|x| !x.is_empty())
            .map(|x| x.trim().parse().map_err(|e| Error::format("incidence CSV", e)))
            .collect::<Result<Vec<usize>>>()?;
        out.push(pts);
    }
    Ok(out)
}

/// Bi-adjacency matrix: 1 real edge, 2 dummy edge, 0 none.
pub fn adjacency_csv(graph: &CirculantBipartiteGraph) -> String {
    let j = graph.order();
    let mut s = String::from("h");
    for a in 0..j {
        let _ = write!(s, ",a{a}");
    }
    s.push('\n');
    for h in 0..j {
        let _ = write!(s, "h{h}");
        for a in 0..j {
            let v = match (graph.is_edge(h, a), graph.is_real_edge(h, a)) {
                (true, true) => 1,
                (true, false) => 2,
                _ => 0,
            };
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

// ---------------------------------------------------------------------------
// LUTs

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LutDumpRow {
    pub slot: usize,
    pub ports: [Option<usize>; 2],
}

pub fn lut_file_name(side: Side, kind: SwitchKind) -> String {
    format!("lut_{}_{}.csv", side.tag(), kind.tag())
}

pub fn parse_lut_csv(text: &str) -> Result<Vec<LutDumpRow>> {
    let what = "LUT dump";
    let mut lines = text.lines();
    if lines.next() != Some("slot,port0,port1") {
        return Err(Error::format(what, "missing header slot,port0,port1"));
    }
    let cell = |s: &str| -> Result<Option<usize>> {
        match s {
            "-" => Ok(None),
            v => v.parse().map(Some).map_err(|e| Error::format(what, format!("{v:?}: {e}"))),
        }
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::format(what, format!("line {}: expected 3 fields", i + 2)));
        }
        let slot: usize = f[0].parse().map_err(|e| Error::format(what, e))?;
        if slot != i {
            return Err(Error::format(what, format!("line {}: slot {slot} out of order", i + 2)));
        }
        rows.push(LutDumpRow {
            slot,
            ports: [cell(f[1])?, cell(f[2])?],
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Address generator files

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadCounter {
    pub start: usize,
    pub stride: usize,
    pub wrap: usize,
    /// Address of port `b` at counter value `c` is `ports*c + b`.
    pub ports: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteRow {
    pub fold: usize,
    pub edge: usize,
    pub address: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PmuAddresses {
    pub pmu: usize,
    pub read: ReadCounter,
    pub writes: Vec<WriteRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AddressFile {
    pub side: Side,
    pub capacity: usize,
    pub pmus: Vec<PmuAddresses>,
}

impl AddressFile {
    pub fn from_design(design: &Design, side: Side) -> Self {
        let f = design.plan.f;
        let slots = design.side(side.other()).sequence.slot_count();
        let mut pmus: Vec<PmuAddresses> = (0..f)
            .map(|m| PmuAddresses {
                pmu: m,
                read: ReadCounter {
                    start: 0,
                    stride: 1,
                    wrap: slots,
                    ports: 2,
                },
                writes: Vec::new(),
            })
            .collect();
        for e in &design.side(side).writes.entries {
            pmus[e.pmu].writes.push(WriteRow {
                fold: e.producer / f,
                edge: e.edge,
                address: e.address,
            });
        }
        AddressFile {
            side,
            capacity: design.layout.capacity,
            pmus,
        }
    }

    pub fn file_name(side: Side) -> String {
        format!("addresses_{}.txt", side.tag())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# address generators for side {} PMUs", self.side);
        let _ = writeln!(s, "# read address = ports*counter + port; write rows give fold, producer edge, address");
        let _ = writeln!(s, "side {}", self.side);
        let _ = writeln!(s, "capacity {}", self.capacity);
        for p in &self.pmus {
            let _ = writeln!(s, "pmu {}", p.pmu);
            let r = p.read;
            let _ = writeln!(
                s,
                "read_counter start={} stride={} wrap={} ports={}",
                r.start, r.stride, r.wrap, r.ports
            );
            for w in &p.writes {
                let _ = writeln!(s, "write fold={} edge={} address={}", w.fold, w.edge, w.address);
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let what = "address file";
        let err = |n: usize, msg: &str| Error::format(what, format!("line {}: {msg}", n + 1));
        let kv = |n: usize, parts: &[&str], key: &str| -> Result<usize> {
            parts
                .iter()
                .find_map(|p| p.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| err(n, &format!("missing {key}")))?
                .parse()
                .map_err(|_| err(n, &format!("bad {key}")))
        };
        let mut side = None;
        let mut capacity = None;
        let mut pmus: Vec<PmuAddresses> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts[0] {
                "side" => side = parts.get(1).and_then(|t| Side::from_tag(t)),
                "capacity" => capacity = parts.get(1).and_then(|c| c.parse().ok()),
                "pmu" => {
                    let m: usize = parts.get(1).and_then(|c| c.parse().ok()).ok_or_else(|| err(n, "bad pmu"))?;
                    if m != pmus.len() {
                        return Err(err(n, "pmu records out of order"));
                    }
                    pmus.push(PmuAddresses {
                        pmu: m,
                        read: ReadCounter {
                            start: 0,
                            stride: 1,
                            wrap: 0,
                            ports: 2,
                        },
                        writes: Vec::new(),
                    });
                }
                "read_counter" => {
                    let p = pmus.last_mut().ok_or_else(|| err(n, "read_counter before pmu"))?;
                    p.read = ReadCounter {
                        start: kv(n, &parts, "start")?,
                        stride: kv(n, &parts, "stride")?,
                        wrap: kv(n, &parts, "wrap")?,
                        ports: kv(n, &parts, "ports")?,
                    };
                }
                "write" => {
                    let row = WriteRow {
                        fold: kv(n, &parts, "fold")?,
                        edge: kv(n, &parts, "edge")?,
                        address: kv(n, &parts, "address")?,
                    };
                    pmus.last_mut().ok_or_else(|| err(n, "write before pmu"))?.writes.push(row);
                }
                other => return Err(err(n, &format!("unknown record {other:?}"))),
            }
        }
        Ok(AddressFile {
            side: side.ok_or_else(|| Error::format(what, "missing side"))?,
            capacity: capacity.ok_or_else(|| Error::format(what, "missing capacity"))?,
            pmus,
        })
    }
}

// ---------------------------------------------------------------------------
// Address trace

/// One memory access in the trace.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TraceRow {
    pub cycle: u64,
    pub pmu: String,
    pub port: usize,
    pub address: usize,
    pub rw: char,
}

pub fn render_trace(rows: &[TraceRow]) -> String {
    let mut s = String::from("cycle,pmu,port,address,rw\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.cycle, r.pmu, r.port, r.address, r.rw);
    }
    s
}

/// Accesses of one iteration as planned by the schedule, sorted.
pub fn planned_trace(design: &Design) -> Vec<TraceRow> {
    let f = design.plan.f;
    let mut rows = Vec::new();
    for reader in Side::BOTH {
        let memory = reader.other();
        let half = design.timing.half(reader);
        let mux = design.lut(reader, SwitchKind::Mux);
        for st in &half.slots {
            let sel = mux.rows[st.pattern];
            for m in 0..f {
                for b in 0..2 {
                    if sel[b].is_some() {
                        rows.push(TraceRow {
                            cycle: st.read,
                            pmu: format!("{memory}{m}"),
                            port: b,
                            address: 2 * st.slot + b,
                            rw: 'R',
                        });
                    }
                }
            }
        }
        let sd = design.side(reader);
        for w in &half.writes {
            for i in 0..f {
                let producer = w.fold * f + i;
                for b in 0..2 {
                    if let Some(e) = sd.writes.lookup(producer, 2 * w.pattern + b) {
                        rows.push(TraceRow {
                            cycle: w.cycle,
                            pmu: format!("{reader}{i}"),
                            port: b,
                            address: e.address,
                            rw: 'W',
                        });
                    }
                }
            }
        }
    }
    rows.sort();
    rows
}

// ---------------------------------------------------------------------------
// Run directory contents

pub const GRAPH_FILE: &str = "graph.json";
pub const PLAN_FILE: &str = "plan.json";
pub const NETLIST_FILE: &str = "netlist.json";
pub const TIMING_FILE: &str = "timing.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sequence_file_name(side: Side) -> String {
    format!("sequence_{}.json", side.tag())
}

pub fn schedule_file_name(side: Side) -> String {
    format!("schedule_{}.csv", side.tag())
}

pub fn emit_netlist_json(netlist: &Netlist) -> String {
    json(netlist)
}

pub fn emit_timing_json(timing: &TimingPlan) -> String {
    json(timing)
}

/// Files the simulator needs; always emitted.
pub fn machine_artifacts(design: &Design) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    out.insert(GRAPH_FILE.to_string(), design.graph.to_json());
    out.insert(
        PLAN_FILE.to_string(),
        json(&PlanFile {
            format_version: FORMAT_VERSION,
            plan: design.plan,
            pipeline: design.timing.level,
            layout: design.layout,
        }),
    );
    out.insert(NETLIST_FILE.to_string(), emit_netlist_json(&design.netlist));
    out.insert(TIMING_FILE.to_string(), emit_timing_json(&design.timing));
    for side in Side::BOTH {
        let sd = design.side(side);
        out.insert(sequence_file_name(side), json(&sd.sequence));
        for kind in [SwitchKind::Mux, SwitchKind::Demux] {
            out.insert(lut_file_name(side, kind), lut_dump(design.lut(side, kind), &sd.sequence));
        }
        out.insert(AddressFile::file_name(side), AddressFile::from_design(design, side).render());
    }
    out
}

/// Human-facing tables, selected by the `csv` format flag.
pub fn table_artifacts(design: &Design) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for side in Side::BOTH {
        out.insert(schedule_file_name(side), emit_schedule_table(&design.side(side).sequence));
    }
    out.insert("incidence.csv".into(), incidence_csv(&design.graph));
    out.insert("adjacency.csv".into(), adjacency_csv(&design.graph));
    out.insert("address_trace.csv".into(), render_trace(&planned_trace(design)));
    out
}

pub fn report_json<T: Serialize>(v: &T) -> String {
    json(v)
}

// ---------------------------------------------------------------------------
// Manifest

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

impl Manifest {
    pub fn build(files: &BTreeMap<String, String>) -> Self {
        Manifest {
            format_version: FORMAT_VERSION,
            files: files
                .iter()
                .map(|(path, text)| ManifestEntry {
                    path: path.clone(),
                    sha256: sha256_hex(text.as_bytes()),
                    bytes: text.len(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        json(self)
    }
}

/// Writes every file under `dir`, creating subdirectories as needed.
pub fn write_files(dir: &std::path::Path, files: &BTreeMap<String, String>) -> Result<()> {
    for (name, text) in files {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

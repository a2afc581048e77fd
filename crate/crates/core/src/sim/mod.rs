//! Cycle-level simulation of an emitted design.
//!
//! The simulator only sees parsed run artifacts. Every iteration runs the
//! hyperplane half (reading point PMUs) and then the point half. Each cell
//! holds a token naming the producer output stored there, so delivered data
//! can be checked against the unfolded graph afterwards.

mod artifacts;

pub use artifacts::{required_files, RunArtifacts};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circulant::CirculantBipartiteGraph;
use crate::emit::TraceRow;
use crate::error::{Error, Result};
use crate::folding::{DesignOption, FoldPlan};
use crate::report::CheckReport;
use crate::schedule::{demux_id, mux_id, synthesize, PipelineLevel, Side, SlotTiming, SwitchKind, WriteTiming};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub iterations: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { iterations: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    /// A PMU port used twice in one cycle.
    Port,
    /// A wire driven twice in one cycle.
    Wire,
    /// A switch output selected by both inputs in one cycle.
    Switch,
    /// Demux enable not exactly one cycle after the mux enable.
    Stagger,
    /// A demux input read while its wire is undriven.
    Undriven,
    /// A datum of the wrong iteration, or an empty cell.
    Stale,
    /// A cell overwritten before being read.
    Overwrite,
    /// A write issued before its producer finished.
    Causality,
    /// An address beyond the PMU capacity.
    Capacity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub cycle: u64,
    pub locus: String,
    pub detail: String,
}

/// Identity of one producer output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Token {
    pub side: Side,
    pub producer: usize,
    pub edge: usize,
    pub iteration: usize,
    pub real: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delivery {
    pub cycle: u64,
    pub reader: Side,
    pub iteration: usize,
    pub consumer: usize,
    pub edge: usize,
    pub token: Token,
}

#[derive(Debug, Clone, Default)]
pub struct SimTrace {
    pub deliveries: Vec<Delivery>,
    /// Memory accesses, sorted.
    pub accesses: Vec<TraceRow>,
}

impl SimTrace {
    /// Accesses whose cycle falls in iteration `n`, shifted to start at 0.
    pub fn iteration_accesses(&self, n: usize, length: u64) -> Vec<TraceRow> {
        let lo = n as u64 * length;
        self.accesses
            .iter()
            .filter(|r| r.cycle >= lo && r.cycle < lo + length)
            .map(|r| TraceRow {
                cycle: r.cycle - lo,
                ..r.clone()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    pub slots: usize,
    pub real_reads: usize,
    pub port_cycles: usize,
    /// Slots in which a real LPU received its scheduled inputs.
    pub busy_ppu_slots: usize,
    /// Slots of real LPUs.
    pub ppu_slots: usize,
    pub deliveries: usize,
    pub noops: usize,
    pub ppu_busy_ratio: f64,
    pub port_utilization: f64,
    /// Half-iteration length per iteration.
    pub lengths: Vec<u64>,
    /// Deliveries per iteration; each should equal the census.
    pub census: Vec<usize>,
    pub expected_census: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub iterations: usize,
    pub order: usize,
    pub q: usize,
    pub f: usize,
    pub design_option: DesignOption,
    pub pipeline: PipelineLevel,
    pub conflicts: Vec<Conflict>,
    pub sides: BTreeMap<Side, SideStats>,
    pub iteration_lengths: Vec<u64>,
    pub full_utilization: bool,
    pub census_ok: bool,
}

impl SimReport {
    pub fn passed(&self) -> bool {
        self.conflicts.is_empty() && self.census_ok
    }

    pub fn conflict_count(&self, kind: ConflictKind) -> usize {
        self.conflicts.iter().filter(|c| c.kind == kind).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

impl fmt::Display for SimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "simulation J={} q={} F={} option={} pipeline={} iterations={}",
            self.order, self.q, self.f, self.design_option, self.pipeline, self.iterations
        )?;
        for (side, s) in &self.sides {
            writeln!(
                f,
                "  {side} half: length {:?}, PPU busy {:.4}, port utilization {:.4} ({}/{}), deliveries {:?} of {} each",
                s.lengths, s.ppu_busy_ratio, s.port_utilization, s.real_reads, s.port_cycles, s.census, s.expected_census
            )?;
        }
        writeln!(f, "  iteration lengths {:?}", self.iteration_lengths)?;
        writeln!(f, "  full utilization: {}", if self.full_utilization { "yes" } else { "no" })?;
        let mut kinds: BTreeMap<ConflictKind, usize> = BTreeMap::new();
        for c in &self.conflicts {
            *kinds.entry(c.kind).or_default() += 1;
        }
        if kinds.is_empty() {
            writeln!(f, "  conflicts: none")?;
        } else {
            writeln!(f, "  conflicts: {kinds:?}")?;
            for c in self.conflicts.iter().take(10) {
                writeln!(f, "    cycle {} {:?} at {}: {}", c.cycle, c.kind, c.locus, c.detail)?;
            }
        }
        write!(f, "  verdict: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

enum Event<'a> {
    Read(&'a SlotTiming),
    Write(&'a WriteTiming),
}

struct Cell {
    token: Option<Token>,
    read: bool,
}

struct Engine<'a> {
    art: &'a RunArtifacts,
    f: usize,
    mem: BTreeMap<Side, Vec<Vec<Cell>>>,
    port_use: HashSet<(u64, Side, usize, usize)>,
    wire_use: HashSet<(u64, usize)>,
    switch_use: HashSet<(u64, Side, usize, usize)>,
    wire_from: HashMap<(String, usize), usize>,
    wire_to: HashMap<(String, usize), usize>,
    slot_done: HashMap<(usize, Side, usize, usize), u64>,
    fold_done: HashMap<(usize, Side, usize), (u64, usize)>,
    oriented: BTreeMap<Side, CirculantBipartiteGraph>,
    conflicts: Vec<Conflict>,
    trace: SimTrace,
    stats: BTreeMap<Side, SideStats>,
}

impl<'a> Engine<'a> {
    fn new(art: &'a RunArtifacts) -> Self {
        let f = art.f();
        let mut mem = BTreeMap::new();
        for side in Side::BOTH {
            let cap = art.addresses[&side].capacity;
            let units = (0..f)
                .map(|_| (0..cap).map(|_| Cell { token: None, read: false }).collect())
                .collect();
            mem.insert(side, units);
        }
        let mut wire_from = HashMap::new();
        let mut wire_to = HashMap::new();
        for (i, w) in art.netlist.wires.iter().enumerate() {
            wire_from.insert((w.from.component.clone(), w.from.port), i);
            wire_to.insert((w.to.component.clone(), w.to.port), i);
        }
        Engine {
            art,
            f,
            mem,
            port_use: HashSet::new(),
            wire_use: HashSet::new(),
            switch_use: HashSet::new(),
            wire_from,
            wire_to,
            slot_done: HashMap::new(),
            fold_done: HashMap::new(),
            oriented: Side::BOTH.into_iter().map(|s| (s, s.orient(&art.graph))).collect(),
            conflicts: Vec::new(),
            trace: SimTrace::default(),
            stats: Side::BOTH.into_iter().map(|s| (s, SideStats::default())).collect(),
        }
    }

    fn conflict(&mut self, kind: ConflictKind, cycle: u64, locus: String, detail: String) {
        self.conflicts.push(Conflict {
            kind,
            cycle,
            locus,
            detail,
        });
    }

    fn use_port(&mut self, cycle: u64, side: Side, pmu: usize, port: usize) {
        if !self.port_use.insert((cycle, side, pmu, port)) {
            self.conflict(
                ConflictKind::Port,
                cycle,
                format!("pmu_{side}{pmu} port {port}"),
                "second access in one cycle".into(),
            );
        }
    }

    fn token(&self, side: Side, producer: usize, edge: usize, iteration: usize) -> Token {
        let g = &self.oriented[&side];
        let real = g
            .offsets()
            .get(edge)
            .is_some_and(|&d| g.is_real_edge(producer, (producer + d) % g.order()));
        Token {
            side,
            producer,
            edge,
            iteration,
            real,
        }
    }

    fn store(&mut self, cycle: u64, side: Side, pmu: usize, port: usize, address: usize, token: Token) {
        let Some(cell) = self.mem.get_mut(&side).and_then(|m| m[pmu].get_mut(address)) else {
            self.conflict(
                ConflictKind::Capacity,
                cycle,
                format!("pmu_{side}{pmu}"),
                format!("write address {address} beyond capacity"),
            );
            return;
        };
        let pending = cell.token.filter(|_| !cell.read);
        cell.token = Some(token);
        cell.read = false;
        if let Some(old) = pending {
            self.conflict(
                ConflictKind::Overwrite,
                cycle,
                format!("pmu_{side}{pmu}[{address}]"),
                format!("unread {old:?} replaced"),
            );
        }
        self.trace.accesses.push(TraceRow {
            cycle,
            pmu: format!("{side}{pmu}"),
            port,
            address,
            rw: 'W',
        });
    }

    /// Point results of iteration "-1": every point output present before
    /// the first hyperplane half.
    fn preload(&mut self) {
        let side = Side::Point;
        let file = &self.art.addresses[&side];
        let mut rows = Vec::new();
        for p in &file.pmus {
            for w in &p.writes {
                rows.push((p.pmu, w.fold * self.f + p.pmu, w.edge, w.address));
            }
        }
        for (pmu, producer, edge, address) in rows {
            let tok = self.token(side, producer, edge, 0);
            if let Some(cell) = self.mem.get_mut(&side).and_then(|m| m[pmu].get_mut(address)) {
                cell.token = Some(tok);
                cell.read = false;
            }
        }
    }

    fn read_slot(&mut self, iter: usize, base: u64, reader: Side, st: &SlotTiming) -> Result<()> {
        let memory = reader.other();
        let f = self.f;
        let read = base + st.read;
        let mux_en = base + st.mux_enable;
        let demux_en = base + st.demux_enable;
        if mux_en != read || demux_en != mux_en + 1 {
            self.conflict(
                ConflictKind::Stagger,
                read,
                format!("{reader} switches, slot {}", st.slot),
                format!("read {read}, mux enable {mux_en}, demux enable {demux_en}"),
            );
        }
        let mux_row = self.art.luts[&(reader, SwitchKind::Mux)][st.slot].ports;
        let demux_row = self.art.luts[&(reader, SwitchKind::Demux)][st.slot].ports;
        let capacity = self.art.addresses[&memory].capacity;
        let mut on_wire: HashMap<usize, Option<Token>> = HashMap::new();
        for m in 0..f {
            let rc = self.art.addresses[&memory].pmus[m].read;
            let counter = (rc.start + rc.stride * st.slot) % rc.wrap;
            for b in 0..2 {
                let Some(c) = mux_row[b] else { continue };
                let address = rc.ports * counter + b;
                self.use_port(read, memory, m, b);
                self.trace.accesses.push(TraceRow {
                    cycle: read,
                    pmu: format!("{memory}{m}"),
                    port: b,
                    address,
                    rw: 'R',
                });
                let datum = if address < capacity {
                    let cell = &mut self.mem.get_mut(&memory).expect("memory side")[m][address];
                    cell.read = true;
                    cell.token
                } else {
                    self.conflict(
                        ConflictKind::Capacity,
                        read,
                        format!("pmu_{memory}{m}"),
                        format!("read address {address} beyond capacity"),
                    );
                    None
                };
                if !self.switch_use.insert((mux_en, reader, m, c)) {
                    self.conflict(
                        ConflictKind::Switch,
                        mux_en,
                        format!("{} output {c}", mux_id(reader, m)),
                        "selected by both inputs".into(),
                    );
                }
                let wire = *self.wire_from.get(&(mux_id(reader, m), c)).ok_or_else(|| Error::Structural {
                    locus: format!("{} output {c}", mux_id(reader, m)),
                    detail: "no wire leaves this switch port".into(),
                })?;
                if !self.wire_use.insert((mux_en, wire)) {
                    self.conflict(
                        ConflictKind::Wire,
                        mux_en,
                        format!("wire {wire}"),
                        "driven twice in one cycle".into(),
                    );
                }
                on_wire.insert(wire, datum);
            }
        }
        let real_order = self.art.graph.real_order();
        let mut stats = std::mem::take(self.stats.get_mut(&reader).expect("side stats"));
        stats.slots += 1;
        stats.port_cycles += 2 * f;
        for j in 0..f {
            let consumer = st.fold * f + j;
            let mut served = false;
            for b in 0..2 {
                let Some(c) = demux_row[b] else { continue };
                let locus = format!("{} input {c}", demux_id(reader, j));
                let wire = *self.wire_to.get(&(demux_id(reader, j), c)).ok_or_else(|| Error::Structural {
                    locus: locus.clone(),
                    detail: "no wire reaches this switch port".into(),
                })?;
                let edge = 2 * st.pattern + b;
                match on_wire.get(&wire) {
                    None => self.conflict(ConflictKind::Undriven, demux_en, locus, format!("wire {wire} idle")),
                    Some(None) => self.conflict(ConflictKind::Stale, demux_en, locus, "empty cell delivered".into()),
                    Some(Some(tok)) if tok.iteration != iter || tok.side != reader.other() => self.conflict(
                        ConflictKind::Stale,
                        demux_en,
                        locus,
                        format!("expected iteration {iter}, got {tok:?}"),
                    ),
                    Some(Some(tok)) if tok.real => {
                        served = true;
                        stats.real_reads += 1;
                        stats.deliveries += 1;
                        *stats.census.last_mut().expect("census row") += 1;
                        self.trace.deliveries.push(Delivery {
                            cycle: demux_en,
                            reader,
                            iteration: iter,
                            consumer,
                            edge,
                            token: *tok,
                        });
                    }
                    Some(Some(_)) => {
                        served = true;
                        stats.noops += 1;
                    }
                }
            }
            // dummy LPUs of an expanded graph do not count toward utilization
            if consumer < real_order {
                stats.ppu_slots += 1;
                stats.busy_ppu_slots += usize::from(served);
            }
        }
        self.stats.insert(reader, stats);
        self.slot_done.insert((iter, reader, st.fold, st.pattern), base + st.complete);
        let e = self.fold_done.entry((iter, reader, st.fold)).or_insert((0, 0));
        e.0 = e.0.max(base + st.complete);
        e.1 += 1;
        Ok(())
    }

    fn write_pair(&mut self, iter: usize, base: u64, side: Side, wt: &WriteTiming) -> Result<()> {
        let f = self.f;
        let cycle = base + wt.cycle;
        let patterns = self.art.sequences[&side].pattern_count();
        let ready = if self.art.timing.level == PipelineLevel::Graph {
            self.slot_done.get(&(iter, side, wt.fold, wt.pattern)).copied()
        } else {
            self.fold_done
                .get(&(iter, side, wt.fold))
                .filter(|(_, n)| *n == patterns)
                .map(|(c, _)| *c)
        };
        if ready.is_none_or(|r| cycle <= r) {
            self.conflict(
                ConflictKind::Causality,
                cycle,
                format!("{side} fold {} pattern {}", wt.fold, wt.pattern),
                format!("write before inputs consumed (ready at {ready:?})"),
            );
        }
        let degree = self.oriented[&side].degree();
        let out_iter = if side == Side::Hyperplane { iter } else { iter + 1 };
        for i in 0..f {
            let producer = wt.fold * f + i;
            for b in 0..2 {
                let edge = 2 * wt.pattern + b;
                if edge >= degree {
                    continue;
                }
                let address = self.art.addresses[&side].pmus[i]
                    .writes
                    .iter()
                    .find(|w| w.fold == wt.fold && w.edge == edge)
                    .map(|w| w.address)
                    .ok_or_else(|| Error::Structural {
                        locus: format!("pmu_{side}{i}"),
                        detail: format!("no write address for fold {} edge {edge}", wt.fold),
                    })?;
                self.use_port(cycle, side, i, b);
                let tok = self.token(side, producer, edge, out_iter);
                self.store(cycle, side, i, b, address, tok);
            }
        }
        Ok(())
    }
}

/// Runs `config.iterations` full iterations.
///
/// Structural defects (a switch port with no wire, a missing write
/// address) abort with `Error::Structural`; scheduling defects are
/// reported as conflicts.
pub fn simulate(art: &RunArtifacts, config: &SimConfig) -> Result<(SimReport, SimTrace)> {
    if config.iterations == 0 {
        return Err(Error::Config("at least one iteration is needed".into()));
    }
    let mut eng = Engine::new(art);
    eng.preload();
    let period = art.timing.iteration_length;
    let mut events: Vec<(u64, u8, usize, Side, Event)> = Vec::new();
    for n in 0..config.iterations {
        let base = n as u64 * period;
        for half in &art.timing.halves {
            for st in &half.slots {
                events.push((base + st.read, 0, n, half.reader, Event::Read(st)));
            }
            for wt in &half.writes {
                events.push((base + wt.cycle, 1, n, half.reader, Event::Write(wt)));
            }
        }
    }
    events.sort_by_key(|e| (e.0, e.1, e.3));
    let mut census_iter = vec![usize::MAX; 2];
    for (_, _, n, side, ev) in &events {
        let stats = eng.stats.get_mut(side).expect("side stats");
        if census_iter[*side as usize] != *n {
            census_iter[*side as usize] = *n;
            stats.census.push(0);
        }
        let base = *n as u64 * period;
        match ev {
            Event::Read(st) => eng.read_slot(*n, base, *side, st)?,
            Event::Write(wt) => eng.write_pair(*n, base, *side, wt)?,
        }
    }

    let level = art.timing.level;
    let g = &art.graph;
    let mut sides = eng.stats;
    for side in Side::BOTH {
        let half = art.timing.half(side);
        let s = sides.get_mut(&side).expect("side stats");
        s.expected_census = g.real_order() * g.real_offsets().len();
        s.ppu_busy_ratio = s.busy_ppu_slots as f64 / s.ppu_slots.max(1) as f64;
        s.port_utilization = s.real_reads as f64 / s.port_cycles.max(1) as f64;
        for n in 0..config.iterations {
            let base = n as u64 * period;
            let first = half.slots.iter().map(|x| base + x.read).min().unwrap_or(base);
            let done = half.slots.iter().map(|x| base + x.complete).max().unwrap_or(base);
            let last_write = half.writes.iter().map(|x| base + x.cycle).max().unwrap_or(done);
            s.lengths.push(if level == PipelineLevel::Graph { last_write - first } else { done - first });
        }
    }
    let hp_first = |n: usize| {
        art.timing.half(Side::Hyperplane).slots.iter().map(|x| n as u64 * period + x.read).min().unwrap_or(0)
    };
    let last_p_write = |n: usize| {
        art.timing
            .half(Side::Point)
            .writes
            .iter()
            .map(|x| n as u64 * period + x.cycle)
            .max()
            .unwrap_or(0)
    };
    let iteration_lengths = (0..config.iterations).map(|n| last_p_write(n) + 1 - hp_first(n)).collect();
    let census_ok = sides
        .values()
        .all(|s| s.census.len() == config.iterations && s.census.iter().all(|&c| c == s.expected_census));
    let full_utilization = sides.values().all(|s| s.busy_ppu_slots == s.ppu_slots);
    eng.trace.accesses.sort();
    let report = SimReport {
        iterations: config.iterations,
        order: g.order(),
        q: art.plan.plan.q,
        f: art.f(),
        design_option: art.plan.plan.design_option,
        pipeline: level,
        conflicts: eng.conflicts,
        sides,
        iteration_lengths,
        full_utilization,
        census_ok,
    };
    Ok((report, eng.trace))
}

/// Checks delivered tokens against the unfolded graph: every real edge of
/// every consumer delivered exactly once per iteration, by the right
/// producer, from the right iteration, and in edge order.
pub fn check_dataflow_equivalence(graph: &CirculantBipartiteGraph, trace: &SimTrace, iterations: usize) -> CheckReport {
    let mut report = CheckReport::new("dataflow equivalence");
    let j0 = graph.real_order();
    // reference neighbor sets straight from the real adjacency
    let adj = graph.real_adjacency_matrix();
    let mut got: BTreeMap<(Side, usize, usize), Vec<&Delivery>> = BTreeMap::new();
    for d in &trace.deliveries {
        got.entry((d.reader, d.iteration, d.consumer)).or_default().push(d);
    }
    for n in 0..iterations {
        for reader in Side::BOTH {
            for v in 0..j0 {
                let mut expect: Vec<usize> = (0..j0)
                    .filter(|&u| match reader {
                        Side::Hyperplane => adj[v][u] != 0,
                        Side::Point => adj[u][v] != 0,
                    })
                    .collect();
                expect.sort_unstable();
                let ds = got.get(&(reader, n, v)).map(Vec::as_slice).unwrap_or(&[]);
                let mut producers: Vec<usize> = ds.iter().map(|d| d.token.producer).collect();
                producers.sort_unstable();
                report.check(producers == expect, || {
                    format!("{reader}{v} iteration {n}: producers {producers:?}, expected {expect:?}")
                });
                report.check(ds.windows(2).all(|w| (w[0].cycle, w[0].edge) < (w[1].cycle, w[1].edge)), || {
                    format!("{reader}{v} iteration {n}: edges out of order")
                });
                for d in ds {
                    report.check(d.token.iteration == n && d.token.side == reader.other(), || {
                        format!("{reader}{v} iteration {n}: token {:?}", d.token)
                    });
                }
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub q: usize,
    pub folded_length: u64,
    pub unfolded_length: u64,
    pub ratio: f64,
}

/// Simulated iteration length at fold factor `plan.q` against `q = 1`.
pub fn measure_throughput(
    graph: &CirculantBipartiteGraph,
    plan: &FoldPlan,
    level: PipelineLevel,
    iterations: usize,
) -> Result<Throughput> {
    let run = |p: &FoldPlan| -> Result<u64> {
        let design = synthesize(graph, p, level)?;
        let art = RunArtifacts::from_design(&design)?;
        let (report, _) = simulate(&art, &SimConfig { iterations })?;
        if !report.passed() {
            return Err(Error::Internal(format!("simulation failed at q = {}:\n{report}", p.q)));
        }
        Ok(report.iteration_lengths[0])
    };
    let flat = FoldPlan::new(graph.order(), 1, plan.design_option, plan.t, plan.delta)?;
    let folded_length = run(plan)?;
    let unfolded_length = run(&flat)?;
    Ok(Throughput {
        q: plan.q,
        folded_length,
        unfolded_length,
        ratio: folded_length as f64 / unfolded_length as f64,
    })
}

//! Concrete schedules derived from a folded sequence: memory-unit
//! assignment, PMU layout, read and write addressing, switch LUTs and the
//! static netlist.
//!
//! Each side of the graph is handled through its own oriented view. For
//! the hyperplane side that is the graph itself; for the point side it is
//! the transpose. A side's LPU `x` reads the data of its edge `t` from the
//! PMU collocated with neighbor `x + D[t]` on the opposite side.

mod netlist;
mod timing;

pub use netlist::{
    build_netlist, demux_id, mux_id, pmu_id, ppu_id, Component, ComponentKind, InstanceInfo, LocalChannel, Netlist, NetlistAnnotations,
    PortRef, Wire, NETLIST_FORMAT_VERSION,
};
pub use timing::{full_timing, HalfTiming, PipelineLevel, SlotTiming, TimingPlan, WriteTiming};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circulant::CirculantBipartiteGraph;
use crate::error::{Error, Result};
use crate::folding::{
    generate_folded_sequence, pad_dummy_offset, rho_from_sequence, slot_position, DesignOption, FoldPlan,
    FoldedSequence, RhoInfo,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    #[serde(rename = "h")]
    Hyperplane,
    #[serde(rename = "p")]
    Point,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Hyperplane, Side::Point];

    pub fn tag(self) -> &'static str {
        match self {
            Side::Hyperplane => "h",
            Side::Point => "p",
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Hyperplane => Side::Point,
            Side::Point => Side::Hyperplane,
        }
    }

    pub fn from_tag(tag: &str) -> Option<Side> {
        match tag {
            "h" => Some(Side::Hyperplane),
            "p" => Some(Side::Point),
            _ => None,
        }
    }

    /// The graph as seen by this side's nodes.
    pub fn orient(self, graph: &CirculantBipartiteGraph) -> CirculantBipartiteGraph {
        match self {
            Side::Hyperplane => graph.clone(),
            Side::Point => graph.transpose(),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// PMU pair read by PPU `i` for fold `k` and pattern `l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryAssignment {
    pub q: usize,
    pub f: usize,
    pub patterns: usize,
    entries: Vec<[Option<usize>; 2]>,
}

impl MemoryAssignment {
    pub fn get(&self, k: usize, i: usize, l: usize) -> [Option<usize>; 2] {
        self.entries[(k * self.f + i) * self.patterns + l]
    }
}

pub fn assign_memory_units(graph: &CirculantBipartiteGraph, plan: &FoldPlan) -> Result<MemoryAssignment> {
    let seq = generate_folded_sequence(graph, plan)?;
    let f = plan.f;
    let p = seq.pattern_count();
    let mut entries = Vec::with_capacity(plan.q * f * p);
    for k in 0..plan.q {
        for i in 0..f {
            for pat in &seq.patterns {
                entries.push(pat.offsets.map(|d| d.map(|d| (d + k * f + i) % f)));
            }
        }
    }
    Ok(MemoryAssignment {
        q: plan.q,
        f,
        patterns: p,
        entries,
    })
}

/// Bin structure of one PMU. Cell `2*pos + b` holds the datum read on
/// port `b` in slot position `pos`, so reads are a plain counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryLayout {
    #[serde(rename = "design_option")]
    pub option: DesignOption,
    pub q: usize,
    pub bin_count: usize,
    pub bin_size: usize,
    pub capacity: usize,
}

impl MemoryLayout {
    /// For option 1 this is `l*2q + 2k + b`.
    pub fn address(&self, l: usize, k: usize, b: usize) -> usize {
        2 * slot_position(self.option, self.q, self.bin_count, l, k) + b
    }
}

pub fn layout_addresses(plan: &FoldPlan, graph: &CirculantBipartiteGraph) -> MemoryLayout {
    let bin_count = graph.degree().div_ceil(2);
    MemoryLayout {
        option: plan.design_option,
        q: plan.q,
        bin_count,
        bin_size: 2 * plan.q,
        capacity: bin_count * 2 * plan.q,
    }
}

/// Cycle at whose end the datum of edge `t` of fold-`k` LPUs has been
/// consumed, counting the first compute period as cycles `1..=T`.
///
/// Option 1: `(q*floor(t/2) + k + 1) * T`. Option 2: `(P*k + floor(t/2) + 1) * T`
/// with `P` the padded pattern count; for odd `t` this is `(P*k + ceil(t/2)) * T`.
pub fn read_cycle(t: usize, k: usize, plan: &FoldPlan, padded_degree: usize) -> Result<usize> {
    if t >= padded_degree {
        return Err(Error::domain(format!("edge index {t} outside [0, {padded_degree})")));
    }
    if k >= plan.q {
        return Err(Error::domain(format!("fold {k} outside [0, {})", plan.q)));
    }
    let p = padded_degree / 2;
    Ok((slot_position(plan.design_option, plan.q, p, t / 2, k) + 1) * plan.t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteEntry {
    pub producer: usize,
    pub edge: usize,
    /// Local PMU of the producer.
    pub pmu: usize,
    pub address: usize,
    pub consumer: usize,
    pub consumer_edge: usize,
}

/// Where each producer output of one side lands in its local PMU.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteSchedule {
    pub side: Side,
    /// Ordered by (producer, edge).
    pub entries: Vec<WriteEntry>,
}

impl WriteSchedule {
    pub fn lookup(&self, producer: usize, edge: usize) -> Option<&WriteEntry> {
        self.entries
            .binary_search_by(|e| (e.producer, e.edge).cmp(&(producer, edge)))
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Write addresses for producers on `side`. The address is the cell the
/// consumer reads: its pattern, fold and access index fix the slot.
pub fn write_schedule(graph: &CirculantBipartiteGraph, plan: &FoldPlan, side: Side) -> Result<WriteSchedule> {
    let prod = side.orient(graph);
    let cons = side.other().orient(graph);
    let j = graph.order();
    let f = plan.f;
    let layout = layout_addresses(plan, graph);
    let mut entries = Vec::new();
    for x in 0..j {
        for (t, &d) in prod.offsets().iter().enumerate() {
            let consumer = (x + d) % j;
            let back = (j - d) % j;
            let tc = cons
                .offsets()
                .binary_search(&back)
                .map_err(|_| Error::Internal(format!("offset {back} missing on side {}", side.other())))?;
            entries.push(WriteEntry {
                producer: x,
                edge: t,
                pmu: x % f,
                address: layout.address(tc / 2, consumer / f, tc % 2),
                consumer,
                consumer_edge: tc,
            });
        }
    }
    if plan.f > 0 && entries.iter().any(|e| e.address >= layout.capacity) {
        return Err(Error::Internal("write address beyond PMU capacity".into()));
    }
    Ok(WriteSchedule { side, entries })
}

/// Endpoint of the `t`-th edge of `target`, found by shifting the sorted
/// point set of `base`.
pub fn edge_shift_replica(graph: &CirculantBipartiteGraph, base: usize, t: usize, target: usize) -> Result<usize> {
    let j = graph.order();
    if base >= j || target >= j {
        return Err(Error::domain(format!("node outside [0, {j})")));
    }
    let mut pts = graph.points_of(base);
    pts.sort_unstable();
    let p = *pts
        .get(t)
        .ok_or_else(|| Error::domain(format!("edge index {t} outside [0, {})", pts.len())))?;
    Ok((p + target + j - base) % j)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SwitchKind {
    /// 2-to-ρ̂ switch at a PMU output.
    #[serde(rename = "mux")]
    Mux,
    /// ρ̂-to-2 switch at a PPU input.
    #[serde(rename = "demux")]
    Demux,
}

impl SwitchKind {
    pub fn tag(self) -> &'static str {
        match self {
            SwitchKind::Mux => "mux",
            SwitchKind::Demux => "demux",
        }
    }
}

/// Port selection shared by all switches of one set.
///
/// Row `l` gives, for access 0 and access 1 of pattern `l`, the wire class
/// (switch port) used. The mux connects PMU port `b` to output `row[b]`;
/// the demux connects input `row[b]` to PPU access `b`. `None` means the
/// access is idle and encodes as `invalid_code`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchLut {
    /// Reading side served by this set.
    pub side: Side,
    pub kind: SwitchKind,
    pub rows: Vec<[Option<usize>; 2]>,
    pub invalid_code: usize,
}

impl SwitchLut {
    pub fn set_name(&self) -> String {
        format!("{}_{}", self.side.tag(), self.kind.tag())
    }
}

/// The four switch sets. A single LUT serves a whole set by circulance.
pub fn switch_luts(graph: &CirculantBipartiteGraph, plan: &FoldPlan) -> Result<Vec<SwitchLut>> {
    let mut out = Vec::new();
    for side in Side::BOTH {
        let seq = generate_folded_sequence(&side.orient(graph), plan)?;
        let rho = rho_from_sequence(&seq);
        check_reciprocity(&seq, &rho)?;
        for kind in [SwitchKind::Mux, SwitchKind::Demux] {
            out.push(SwitchLut {
                side,
                kind,
                rows: rho.pattern_classes.clone(),
                invalid_code: rho.rho_hat,
            });
        }
    }
    Ok(out)
}

/// Composes mux selection, wire map and demux selection for every slot and
/// PMU and checks it against the direct assignment.
fn check_reciprocity(seq: &FoldedSequence, rho: &RhoInfo) -> Result<()> {
    let f = seq.f;
    for (l, pat) in seq.patterns.iter().enumerate() {
        let mut chosen = std::collections::BTreeSet::new();
        for b in 0..2 {
            let Some(c) = rho.pattern_classes[l][b] else {
                if pat.folded[b].is_some() {
                    return Err(Error::Internal(format!("pattern {l} access {b} has no class")));
                }
                continue;
            };
            if !chosen.insert(c) {
                return Err(Error::Internal(format!("pattern {l} selects class {c} twice")));
            }
            let delta = rho.class_offsets[c];
            for m in 0..f {
                let reader = (m + f - delta) % f;
                if pat.folded[b].map(|d| (d + reader) % f) != Some(m) {
                    return Err(Error::Internal(format!(
                        "pattern {l} access {b}: PMU {m} routes to PPU {reader} which does not read it"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Expands a LUT to one row per slot, `slot,port0,port1`, with `-` for idle.
pub fn lut_dump(lut: &SwitchLut, seq: &FoldedSequence) -> String {
    let mut s = String::from("slot,port0,port1\n");
    for (pos, slot) in seq.slots.iter().enumerate() {
        let row = lut.rows[slot.pattern];
        let cell = |c: Option<usize>| c.map_or("-".to_string(), |c| c.to_string());
        s.push_str(&format!("{pos},{},{}\n", cell(row[0]), cell(row[1])));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub q: usize,
    /// Extra mux/demux sets a non-overlaid fold would need.
    pub mux_sets_avoided: usize,
    /// Wiring of a non-overlaid fold relative to the static one.
    pub wiring_factor_avoided: usize,
    pub fold_select_signal_avoided: bool,
    pub wires_static: usize,
    pub wires_without_overlay: usize,
}

pub fn resource_report(plan: &FoldPlan, netlist: Option<&Netlist>) -> ResourceReport {
    let wires = netlist.map_or(0, |n| n.wires.len());
    ResourceReport {
        q: plan.q,
        mux_sets_avoided: plan.q.saturating_sub(1),
        wiring_factor_avoided: plan.q,
        fold_select_signal_avoided: plan.q > 1,
        wires_static: wires,
        wires_without_overlay: wires * plan.q,
    }
}

/// Everything derived for one reading side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideDesign {
    pub side: Side,
    pub graph: CirculantBipartiteGraph,
    pub sequence: FoldedSequence,
    pub rho: RhoInfo,
    pub writes: WriteSchedule,
}

/// All schedules for one graph and plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub graph: CirculantBipartiteGraph,
    pub plan: FoldPlan,
    pub layout: MemoryLayout,
    pub sides: [SideDesign; 2],
    pub luts: Vec<SwitchLut>,
    pub netlist: Netlist,
    pub timing: TimingPlan,
    pub resources: ResourceReport,
}

impl Design {
    pub fn side(&self, side: Side) -> &SideDesign {
        &self.sides[side as usize]
    }

    pub fn lut(&self, side: Side, kind: SwitchKind) -> &SwitchLut {
        self.luts
            .iter()
            .find(|l| l.side == side && l.kind == kind)
            .expect("all four switch sets are built")
    }
}

pub fn synthesize(graph: &CirculantBipartiteGraph, plan: &FoldPlan, level: PipelineLevel) -> Result<Design> {
    let graph = pad_dummy_offset(graph);
    let make_side = |side: Side| -> Result<SideDesign> {
        let g = side.orient(&graph);
        let sequence = generate_folded_sequence(&g, plan)?;
        let rho = rho_from_sequence(&sequence);
        Ok(SideDesign {
            side,
            writes: write_schedule(&graph, plan, side)?,
            graph: g,
            sequence,
            rho,
        })
    };
    let sides = [make_side(Side::Hyperplane)?, make_side(Side::Point)?];
    let netlist = build_netlist(&graph, plan)?;
    let timing = full_timing(&graph, plan, level)?;
    Ok(Design {
        layout: layout_addresses(plan, &graph),
        luts: switch_luts(&graph, plan)?,
        resources: resource_report(plan, Some(&netlist)),
        netlist,
        timing,
        sides,
        plan: *plan,
        graph,
    })
}

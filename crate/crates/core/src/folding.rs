//! Folding of a circulant graph by a factor `q` dividing its order.
//!
//! With `F = J/q` physical units per side, fold `k` holds the logical
//! nodes `k*F .. (k+1)*F`. Pattern `l` consumes edges `2l` and `2l+1` of
//! every node; in slot `(l, k)` PPU `i` acts for LPU `k*F + i` and reads
//! PMUs `(D[2l] + i) mod F` and `(D[2l+1] + i) mod F`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circulant::{divisors, CirculantBipartiteGraph};
use crate::error::{Error, Result};
use crate::report::CheckReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum DesignOption {
    /// All folds of a pattern, then the next pattern.
    PatternMajor,
    /// All patterns of a fold, then the next fold.
    FoldMajor,
}

impl TryFrom<u8> for DesignOption {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(DesignOption::PatternMajor),
            2 => Ok(DesignOption::FoldMajor),
            _ => Err(format!("design option must be 1 or 2, got {v}")),
        }
    }
}

impl From<DesignOption> for u8 {
    fn from(o: DesignOption) -> u8 {
        match o {
            DesignOption::PatternMajor => 1,
            DesignOption::FoldMajor => 2,
        }
    }
}

impl fmt::Display for DesignOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub q: usize,
    /// Physical units per side, J/q.
    pub f: usize,
    pub design_option: DesignOption,
    /// Cycles per 2-input node step.
    #[serde(rename = "T")]
    pub t: usize,
    /// Interconnect latency, in units of T.
    pub delta: usize,
}

impl FoldPlan {
    pub fn new(order: usize, q: usize, design_option: DesignOption, t: usize, delta: usize) -> Result<Self> {
        if q == 0 || order % q != 0 {
            return Err(Error::FoldFactor {
                q,
                order,
                divisors: divisors(order),
                hint: "; expand the graph with dummy nodes to reach a composite order".into(),
            });
        }
        if t == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        Ok(FoldPlan {
            q,
            f: order / q,
            design_option,
            t,
            delta,
        })
    }

    pub fn order(&self) -> usize {
        self.q * self.f
    }
}

/// Appends the padding sentinel when the degree is odd; no-op otherwise.
pub fn pad_dummy_offset(graph: &CirculantBipartiteGraph) -> CirculantBipartiteGraph {
    let mut g = graph.clone();
    g.set_dummy_offset(graph.degree() % 2 == 1);
    g
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldedPattern {
    pub index: usize,
    /// Base offsets of the two accesses; `None` is the sentinel.
    pub offsets: [Option<usize>; 2],
    /// Offsets reduced mod F.
    pub folded: [Option<usize>; 2],
    pub doubled: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub pattern: usize,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldedSequence {
    pub order: usize,
    pub q: usize,
    pub f: usize,
    pub design_option: DesignOption,
    pub patterns: Vec<FoldedPattern>,
    pub slots: Vec<Slot>,
}

/// One PPU's activity in one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub ppu: usize,
    pub lpu: usize,
    pub pmus: [Option<usize>; 2],
}

impl FoldedSequence {
    pub fn pattern_count(&self) -> usize {
        self.patterns.len()
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Position of slot `(l, k)` in execution order.
    pub fn position(&self, pattern: usize, fold: usize) -> usize {
        slot_position(self.design_option, self.q, self.patterns.len(), pattern, fold)
    }

    pub fn accesses(&self, pos: usize) -> Vec<Access> {
        let slot = self.slots[pos];
        let pat = &self.patterns[slot.pattern];
        (0..self.f)
            .map(|i| Access {
                ppu: i,
                lpu: slot.fold * self.f + i,
                pmus: pat.folded.map(|d| d.map(|d| (d + i) % self.f)),
            })
            .collect()
    }

    pub fn has_sentinel(&self) -> bool {
        self.patterns.last().is_some_and(|p| p.offsets[1].is_none())
    }
}

pub fn slot_position(option: DesignOption, q: usize, patterns: usize, l: usize, k: usize) -> usize {
    match option {
        DesignOption::PatternMajor => l * q + k,
        DesignOption::FoldMajor => k * patterns + l,
    }
}

pub fn generate_folded_sequence(graph: &CirculantBipartiteGraph, plan: &FoldPlan) -> Result<FoldedSequence> {
    if plan.order() != graph.order() {
        return Err(Error::FoldFactor {
            q: plan.q,
            order: graph.order(),
            divisors: divisors(graph.order()),
            hint: format!("; plan was built for order {}", plan.order()),
        });
    }
    let graph = pad_dummy_offset(graph);
    let offs = graph.padded_offsets();
    let f = plan.f;
    let patterns: Vec<FoldedPattern> = offs
        .chunks(2)
        .enumerate()
        .map(|(l, pair)| {
            let offsets = [pair[0], pair.get(1).copied().flatten()];
            let folded = offsets.map(|d| d.map(|d| d % f));
            FoldedPattern {
                index: l,
                offsets,
                folded,
                doubled: folded[1].is_some() && folded[0] == folded[1],
            }
        })
        .collect();
    let p = patterns.len();
    let mut slots = Vec::with_capacity(p * plan.q);
    match plan.design_option {
        DesignOption::PatternMajor => {
            for l in 0..p {
                for k in 0..plan.q {
                    slots.push(Slot { pattern: l, fold: k });
                }
            }
        }
        DesignOption::FoldMajor => {
            for k in 0..plan.q {
                for l in 0..p {
                    slots.push(Slot { pattern: l, fold: k });
                }
            }
        }
    }
    Ok(FoldedSequence {
        order: graph.order(),
        q: plan.q,
        f,
        design_option: plan.design_option,
        patterns,
        slots,
    })
}

/// Balance of every slot and exactly-once coverage of every edge.
pub fn verify_theorem1(seq: &FoldedSequence, graph: &CirculantBipartiteGraph, plan: &FoldPlan) -> CheckReport {
    let mut r = CheckReport::new("theorem1");
    let f = plan.f;
    let j = graph.order();
    r.check(seq.f == f && seq.q == plan.q && seq.order == j, || {
        format!("sequence shape (J={}, q={}, F={}) does not match plan", seq.order, seq.q, seq.f)
    });
    let offs = pad_dummy_offset(graph).padded_offsets();
    r.check(seq.slot_count() == seq.pattern_count() * plan.q, || {
        format!("{} slots for {} patterns and q={}", seq.slot_count(), seq.pattern_count(), plan.q)
    });
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for pos in 0..seq.slot_count() {
        let slot = seq.slots[pos];
        let acc = seq.accesses(pos);
        let mut ppu = vec![0usize; f];
        let mut port: [Vec<usize>; 2] = [vec![0; f], vec![0; f]];
        for a in &acc {
            ppu[a.ppu] += 1;
            for b in 0..2 {
                let t = 2 * slot.pattern + b;
                match (a.pmus[b], offs.get(t).copied().flatten()) {
                    (Some(m), Some(d)) => {
                        port[b][m] += 1;
                        let expect = (a.lpu + d) % j % f;
                        r.check(m == expect, || {
                            format!(
                                "slot {pos} (pattern {}, fold {}): PPU {} access {b} hits PMU {m}, edge needs PMU {expect}",
                                slot.pattern, slot.fold, a.ppu
                            )
                        });
                        *seen.entry((a.lpu, t)).or_default() += 1;
                    }
                    (None, None) => {}
                    (got, want) => r.fail(format!(
                        "slot {pos}: PPU {} access {b} is {got:?} but edge offset is {want:?}",
                        a.ppu
                    )),
                }
            }
        }
        r.check(ppu.iter().all(|&c| c == 1), || format!("slot {pos}: PPU indices do not cover [0,{f})"));
        let pat = &seq.patterns[slot.pattern];
        for b in 0..2 {
            if pat.folded[b].is_none() {
                continue;
            }
            r.check(port[b].iter().all(|&c| c == 1), || {
                format!(
                    "slot {pos} (pattern {}, fold {}): access-{b} PMU indices do not cover [0,{f})",
                    slot.pattern, slot.fold
                )
            });
        }
    }
    let real_edges = offs.iter().filter(|d| d.is_some()).count();
    r.check(seen.len() == j * real_edges, || {
        format!("{} (node, edge) pairs covered, expected {}", seen.len(), j * real_edges)
    });
    for ((node, t), c) in &seen {
        r.check(*c == 1, || format!("node {node} edge {t} scheduled {c} times"));
    }
    r
}

/// Folded endpoint of edge `t` at overlaid node `j`, identical in every fold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlayMap {
    pub f: usize,
    /// endpoints[j][t] for j in [0, F).
    pub endpoints: Vec<Vec<usize>>,
}

pub fn edge_overlay_map(graph: &CirculantBipartiteGraph, q: usize) -> Result<OverlayMap> {
    let j = graph.order();
    if q == 0 || j % q != 0 {
        return Err(Error::FoldFactor {
            q,
            order: j,
            divisors: divisors(j),
            hint: String::new(),
        });
    }
    let f = j / q;
    let mut endpoints = vec![Vec::with_capacity(graph.degree()); f];
    for (node, row) in endpoints.iter_mut().enumerate() {
        for &d in graph.offsets() {
            let base = (node + d) % j % f;
            for x in 1..q {
                let other = (x * f + node + d) % j % f;
                if other != base {
                    return Err(Error::Internal(format!(
                        "overlay broken: node {node} offset {d} lands on PMU {base} in fold 0 and {other} in fold {x}"
                    )));
                }
            }
            row.push(base);
        }
    }
    Ok(OverlayMap { f, endpoints })
}

/// Switch sizing: distinct folded offsets, doubled patterns and port count.
///
/// Wire classes are numbered in order of first appearance of a folded
/// offset over the pattern sequence; each doubled pattern adds one more
/// class for its second access.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RhoInfo {
    pub rho: usize,
    pub theta: usize,
    pub rho_hat: usize,
    /// Folded offset carried by each class, length rho_hat.
    pub class_offsets: Vec<usize>,
    /// Class used by each access of each pattern.
    pub pattern_classes: Vec<[Option<usize>; 2]>,
}

pub fn compute_rho(graph: &CirculantBipartiteGraph, plan: &FoldPlan) -> Result<RhoInfo> {
    let seq = generate_folded_sequence(graph, plan)?;
    Ok(rho_from_sequence(&seq))
}

pub fn rho_from_sequence(seq: &FoldedSequence) -> RhoInfo {
    let mut class_offsets: Vec<usize> = Vec::new();
    let class_of = |v: &mut Vec<usize>, d: usize| -> usize {
        match v.iter().position(|&x| x == d) {
            Some(c) => c,
            None => {
                v.push(d);
                v.len() - 1
            }
        }
    };
    let mut pattern_classes: Vec<[Option<usize>; 2]> = seq
        .patterns
        .iter()
        .map(|p| {
            let c0 = p.folded[0].map(|d| class_of(&mut class_offsets, d));
            let c1 = if p.doubled {
                None
            } else {
                p.folded[1].map(|d| class_of(&mut class_offsets, d))
            };
            [c0, c1]
        })
        .collect();
    let rho = class_offsets.len();
    let mut theta = 0;
    for (p, cls) in seq.patterns.iter().zip(pattern_classes.iter_mut()) {
        if p.doubled {
            cls[1] = Some(rho + theta);
            class_offsets.push(p.folded[1].expect("doubled pattern has two accesses"));
            theta += 1;
        }
    }
    RhoInfo {
        rho,
        theta,
        rho_hat: rho + theta,
        class_offsets,
        pattern_classes,
    }
}

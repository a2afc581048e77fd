//! Complete schedule: read slots, switch enables, compute completion and
//! write-back for both half-iterations.
//!
//! A half-iteration of reading side `X` starts at its origin `O`. Slot `s`
//! is read at `O + s*π`, where `π = T` except at node level (`π = 1`, and
//! `T` becomes the compute latency). The mux set is enabled in the read
//! cycle and the demux set one cycle later. Results are written into the
//! producer's local PMU; the next half starts the cycle after the last
//! write.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Side;
use crate::circulant::CirculantBipartiteGraph;
use crate::error::{Error, Result};
use crate::folding::{generate_folded_sequence, DesignOption, FoldPlan, FoldedSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineLevel {
    /// Access phase, then a separate write-back phase.
    None,
    /// Each LPU writes back as soon as it has consumed all its inputs.
    Writeback,
    /// Nodes accept one input pair per cycle; write-back as above.
    Node,
    /// Results stream out per slot while the next fold computes (option 2).
    Graph,
}

impl PipelineLevel {
    pub const ALL: [PipelineLevel; 4] = [
        PipelineLevel::None,
        PipelineLevel::Writeback,
        PipelineLevel::Node,
        PipelineLevel::Graph,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineLevel::None => "none",
            PipelineLevel::Writeback => "writeback",
            PipelineLevel::Node => "node",
            PipelineLevel::Graph => "graph",
        }
    }
}

impl fmt::Display for PipelineLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PipelineLevel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PipelineLevel::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown pipeline level {s:?}; expected none, writeback, node or graph")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotTiming {
    pub slot: usize,
    pub pattern: usize,
    pub fold: usize,
    pub read: u64,
    pub mux_enable: u64,
    pub demux_enable: u64,
    pub complete: u64,
}

/// Write of one result pair (edges `2l`, `2l+1`) by every PPU of the side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteTiming {
    pub fold: usize,
    pub pattern: usize,
    pub cycle: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfTiming {
    pub reader: Side,
    pub origin: u64,
    pub slots: Vec<SlotTiming>,
    pub writes: Vec<WriteTiming>,
    pub first_read: u64,
    pub last_complete: u64,
    pub last_write: u64,
    /// Graph level: last write minus first read; otherwise last completion
    /// minus first read.
    pub length: u64,
    /// Cycles spent in the compute/access phase.
    pub compute_span: u64,
    /// Cycles from the first to the last write, inclusive.
    pub writeback_span: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingPlan {
    pub level: PipelineLevel,
    #[serde(rename = "T")]
    pub t: usize,
    pub delta: usize,
    pub design_option: DesignOption,
    /// Hyperplane half first, then point half.
    pub halves: Vec<HalfTiming>,
    pub iteration_length: u64,
    /// Cycles between a mux enable and the matching demux enable.
    pub switch_stagger: u64,
    /// Reads repeat every `read_period` cycles.
    pub read_period: u64,
}

impl TimingPlan {
    pub fn half(&self, reader: Side) -> &HalfTiming {
        self.halves
            .iter()
            .find(|h| h.reader == reader)
            .expect("both halves present")
    }

    /// Closed-form half-iteration length for the level.
    pub fn formula_length(&self, slots: usize) -> u64 {
        let s = slots as u64;
        let t = self.t as u64;
        match self.level {
            PipelineLevel::None | PipelineLevel::Writeback => s * t,
            PipelineLevel::Node => s - 1 + t,
            PipelineLevel::Graph => (s + 2 * self.delta as u64) * t,
        }
    }
}

fn half_timing(
    reader: Side,
    seq: &FoldedSequence,
    plan: &FoldPlan,
    level: PipelineLevel,
    origin: u64,
) -> HalfTiming {
    let t = plan.t as u64;
    let delta_cycles = plan.delta as u64 * t;
    let pi = if level == PipelineLevel::Node { 1 } else { t };
    let slots: Vec<SlotTiming> = seq
        .slots
        .iter()
        .enumerate()
        .map(|(pos, s)| {
            let read = origin + pos as u64 * pi;
            let complete = match level {
                PipelineLevel::Graph => read + t + delta_cycles,
                _ => read + t,
            };
            SlotTiming {
                slot: pos,
                pattern: s.pattern,
                fold: s.fold,
                read,
                mux_enable: read,
                demux_enable: read + 1,
                complete,
            }
        })
        .collect();
    let p = seq.pattern_count();
    let q = seq.q;
    let last_complete = slots.iter().map(|s| s.complete).max().unwrap_or(origin);
    let mut writes = Vec::with_capacity(p * q);
    match level {
        PipelineLevel::None => {
            for k in 0..q {
                for l in 0..p {
                    writes.push(WriteTiming {
                        fold: k,
                        pattern: l,
                        cycle: last_complete + 1 + (k * p + l) as u64,
                    });
                }
            }
        }
        PipelineLevel::Writeback | PipelineLevel::Node => {
            // LPUs of fold k are done once their last slot completes.
            let mut done: Vec<(u64, usize)> = (0..q)
                .map(|k| {
                    let d = slots.iter().filter(|s| s.fold == k).map(|s| s.complete).max().unwrap_or(origin);
                    (d, k)
                })
                .collect();
            done.sort_unstable();
            let mut next_free = 0u64;
            for (d, k) in done {
                let start = (d + 1).max(next_free);
                for l in 0..p {
                    writes.push(WriteTiming {
                        fold: k,
                        pattern: l,
                        cycle: start + l as u64,
                    });
                }
                next_free = start + p as u64;
            }
        }
        PipelineLevel::Graph => {
            for s in &slots {
                writes.push(WriteTiming {
                    fold: s.fold,
                    pattern: s.pattern,
                    cycle: s.complete + delta_cycles,
                });
            }
        }
    }
    let first_read = slots.first().map_or(origin, |s| s.read);
    let last_write = writes.iter().map(|w| w.cycle).max().unwrap_or(last_complete);
    let first_write = writes.iter().map(|w| w.cycle).min().unwrap_or(last_complete);
    let length = match level {
        PipelineLevel::Graph => last_write - first_read,
        _ => last_complete - first_read,
    };
    HalfTiming {
        reader,
        origin,
        slots,
        writes,
        first_read,
        last_complete,
        last_write,
        length,
        compute_span: last_complete - first_read,
        writeback_span: last_write - first_write + 1,
    }
}

pub fn full_timing(graph: &CirculantBipartiteGraph, plan: &FoldPlan, level: PipelineLevel) -> Result<TimingPlan> {
    if level == PipelineLevel::Graph && plan.design_option != DesignOption::FoldMajor {
        return Err(Error::Config(
            "graph-level pipelining needs design option 2 (all patterns of a fold first)".into(),
        ));
    }
    let mut halves = Vec::with_capacity(2);
    let mut origin = 0u64;
    for reader in Side::BOTH {
        let seq = generate_folded_sequence(&reader.orient(graph), plan)?;
        let h = half_timing(reader, &seq, plan, level, origin);
        origin = h.last_write + 1;
        halves.push(h);
    }
    Ok(TimingPlan {
        level,
        t: plan.t,
        delta: plan.delta,
        design_option: plan.design_option,
        halves,
        iteration_length: origin,
        switch_stagger: 1,
        read_period: if level == PipelineLevel::Node { 1 } else { plan.t as u64 },
    })
}

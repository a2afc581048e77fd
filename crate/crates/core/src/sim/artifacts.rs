use std::collections::BTreeMap;
use std::path::Path;

use crate::circulant::CirculantBipartiteGraph;
use crate::emit::{
    lut_file_name, machine_artifacts, parse_json, parse_lut_csv, sequence_file_name, AddressFile, LutDumpRow, PlanFile,
    GRAPH_FILE, NETLIST_FILE, PLAN_FILE, TIMING_FILE,
};
use crate::error::{Error, Result};
use crate::folding::FoldedSequence;
use crate::schedule::{Design, Netlist, Side, SwitchKind, TimingPlan};

/// Everything the simulator reads, parsed from the emitted files.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub graph: CirculantBipartiteGraph,
    pub plan: PlanFile,
    pub sequences: BTreeMap<Side, FoldedSequence>,
    pub netlist: Netlist,
    pub luts: BTreeMap<(Side, SwitchKind), Vec<LutDumpRow>>,
    pub addresses: BTreeMap<Side, AddressFile>,
    pub timing: TimingPlan,
}

const KINDS: [SwitchKind; 2] = [SwitchKind::Mux, SwitchKind::Demux];

/// Names of the files `RunArtifacts` needs.
pub fn required_files() -> Vec<String> {
    let mut v = vec![
        GRAPH_FILE.to_string(),
        PLAN_FILE.to_string(),
        NETLIST_FILE.to_string(),
        TIMING_FILE.to_string(),
    ];
    for side in Side::BOTH {
        v.push(sequence_file_name(side));
        v.push(AddressFile::file_name(side));
        for kind in KINDS {
            v.push(lut_file_name(side, kind));
        }
    }
    v
}

impl RunArtifacts {
    pub fn from_files(files: &BTreeMap<String, String>) -> Result<Self> {
        let get = |name: &str| {
            files
                .get(name)
                .map(String::as_str)
                .ok_or_else(|| Error::format(name, "file missing from run directory"))
        };
        let graph = CirculantBipartiteGraph::from_json(get(GRAPH_FILE)?)?;
        let plan: PlanFile = parse_json(PLAN_FILE, get(PLAN_FILE)?)?;
        let netlist: Netlist = parse_json(NETLIST_FILE, get(NETLIST_FILE)?)?;
        let timing: TimingPlan = parse_json(TIMING_FILE, get(TIMING_FILE)?)?;
        let mut sequences = BTreeMap::new();
        let mut luts = BTreeMap::new();
        let mut addresses = BTreeMap::new();
        for side in Side::BOTH {
            let name = sequence_file_name(side);
            sequences.insert(side, parse_json::<FoldedSequence>(&name, get(&name)?)?);
            for kind in KINDS {
                let name = lut_file_name(side, kind);
                luts.insert((side, kind), parse_lut_csv(get(&name)?)?);
            }
            let name = AddressFile::file_name(side);
            let file = AddressFile::parse(get(&name)?)?;
            if file.side != side {
                return Err(Error::format(&name, format!("describes side {}", file.side)));
            }
            addresses.insert(side, file);
        }
        let art = RunArtifacts {
            graph,
            plan,
            sequences,
            netlist,
            luts,
            addresses,
            timing,
        };
        art.validate()?;
        Ok(art)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mut files = BTreeMap::new();
        for name in required_files() {
            let path = dir.join(&name);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            files.insert(name, text);
        }
        Self::from_files(&files)
    }

    /// Round-trips a design through its emitted text.
    pub fn from_design(design: &Design) -> Result<Self> {
        Self::from_files(&machine_artifacts(design))
    }

    pub fn f(&self) -> usize {
        self.plan.plan.f
    }

    fn validate(&self) -> Result<()> {
        let f = self.f();
        if self.graph.order() != self.plan.plan.order() {
            return Err(Error::format(PLAN_FILE, "order disagrees with graph"));
        }
        for side in Side::BOTH {
            let seq = &self.sequences[&side];
            if seq.f != f || seq.order != self.graph.order() {
                return Err(Error::format(sequence_file_name(side), "fold parameters disagree with plan"));
            }
            for kind in KINDS {
                if self.luts[&(side, kind)].len() != seq.slot_count() {
                    return Err(Error::format(lut_file_name(side, kind), "row count differs from slot count"));
                }
            }
            let a = &self.addresses[&side];
            if a.pmus.len() != f {
                return Err(Error::format(AddressFile::file_name(side), format!("expected {f} PMUs")));
            }
            if a.pmus.iter().any(|p| p.read.wrap == 0 || p.read.ports == 0) {
                return Err(Error::format(AddressFile::file_name(side), "degenerate read counter"));
            }
        }
        if self.timing.halves.len() != 2 {
            return Err(Error::format(TIMING_FILE, "expected two half-iterations"));
        }
        Ok(())
    }
}

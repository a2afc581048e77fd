use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Side;
use crate::circulant::CirculantBipartiteGraph;
use crate::error::Result;
use crate::folding::{generate_folded_sequence, rho_from_sequence, FoldPlan};

pub const NETLIST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentKind {
    Ppu,
    Pmu,
    /// 2-to-ρ̂ switch at a PMU output.
    Mux,
    /// ρ̂-to-2 switch at a PPU input.
    Demux,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub id: String,
    pub kind: ComponentKind,
    /// PPU/PMU: the side it belongs to. Switch: the reading side it serves.
    pub side: Side,
    pub index: usize,
    pub ports: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub component: String,
    pub port: usize,
}

/// Static point-to-point wire of an interconnect instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wire {
    /// Reading side of the instance.
    pub instance: Side,
    pub from: PortRef,
    pub to: PortRef,
}

/// Two-port channel that does not pass through the interconnect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalChannel {
    pub from: String,
    pub to: String,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub rho: usize,
    pub theta: usize,
    pub rho_hat: usize,
    pub class_offsets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetlistAnnotations {
    pub order: usize,
    pub q: usize,
    pub f: usize,
    /// Copies of each stateful PPU register.
    pub register_replication: usize,
    pub instances: BTreeMap<Side, InstanceInfo>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub format_version: u32,
    pub components: Vec<Component>,
    pub wires: Vec<Wire>,
    pub local_channels: Vec<LocalChannel>,
    pub annotations: NetlistAnnotations,
}

pub fn ppu_id(side: Side, i: usize) -> String {
    format!("ppu_{side}{i}")
}

pub fn pmu_id(side: Side, i: usize) -> String {
    format!("pmu_{side}{i}")
}

/// Switch ids are named after the reading side they serve.
pub fn mux_id(reader: Side, i: usize) -> String {
    format!("{reader}_mux{i}")
}

pub fn demux_id(reader: Side, i: usize) -> String {
    format!("{reader}_demux{i}")
}

impl Netlist {
    pub fn wires_of(&self, instance: Side) -> impl Iterator<Item = &Wire> {
        self.wires.iter().filter(move |w| w.instance == instance)
    }

    pub fn component(&self, id: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn count(&self, kind: ComponentKind) -> usize {
        self.components.iter().filter(|c| c.kind == kind).count()
    }
}

/// Two interconnect instances. In the instance read by side `X`, the mux at
/// PMU `m` of the other side drives class `c` toward the demux of PPU
/// `(m - δ_c) mod F`, which reads that PMU whenever class `c` is selected.
pub fn build_netlist(graph: &CirculantBipartiteGraph, plan: &FoldPlan) -> Result<Netlist> {
    let f = plan.f;
    let mut components = Vec::new();
    let mut wires = Vec::new();
    let mut local_channels = Vec::new();
    let mut instances = BTreeMap::new();
    for side in Side::BOTH {
        for i in 0..f {
            components.push(Component {
                id: ppu_id(side, i),
                kind: ComponentKind::Ppu,
                side,
                index: i,
                ports: 2,
            });
            components.push(Component {
                id: pmu_id(side, i),
                kind: ComponentKind::Pmu,
                side,
                index: i,
                ports: 2,
            });
            local_channels.push(LocalChannel {
                from: ppu_id(side, i),
                to: pmu_id(side, i),
                width: 2,
            });
        }
    }
    for reader in Side::BOTH {
        let seq = generate_folded_sequence(&reader.orient(graph), plan)?;
        let rho = rho_from_sequence(&seq);
        let memory = reader.other();
        for i in 0..f {
            components.push(Component {
                id: mux_id(reader, i),
                kind: ComponentKind::Mux,
                side: reader,
                index: i,
                ports: rho.rho_hat,
            });
            components.push(Component {
                id: demux_id(reader, i),
                kind: ComponentKind::Demux,
                side: reader,
                index: i,
                ports: rho.rho_hat,
            });
            local_channels.push(LocalChannel {
                from: pmu_id(memory, i),
                to: mux_id(reader, i),
                width: 2,
            });
            local_channels.push(LocalChannel {
                from: demux_id(reader, i),
                to: ppu_id(reader, i),
                width: 2,
            });
        }
        for m in 0..f {
            for (c, &delta) in rho.class_offsets.iter().enumerate() {
                wires.push(Wire {
                    instance: reader,
                    from: PortRef {
                        component: mux_id(reader, m),
                        port: c,
                    },
                    to: PortRef {
                        component: demux_id(reader, (m + f - delta) % f),
                        port: c,
                    },
                });
            }
        }
        instances.insert(
            reader,
            InstanceInfo {
                rho: rho.rho,
                theta: rho.theta,
                rho_hat: rho.rho_hat,
                class_offsets: rho.class_offsets,
            },
        );
    }
    Ok(Netlist {
        format_version: NETLIST_FORMAT_VERSION,
        components,
        wires,
        local_channels,
        annotations: NetlistAnnotations {
            order: graph.order(),
            q: plan.q,
            f,
            register_replication: plan.q,
            instances,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::folding::DesignOption;

    #[test]
    fn running_example_inventory() {
        let g = CirculantBipartiteGraph::new(15, &[0, 1, 2, 4, 5, 8, 10]).unwrap();
        let plan = FoldPlan::new(15, 3, DesignOption::PatternMajor, 1, 1).unwrap();
        let n = build_netlist(&g, &plan).unwrap();
        assert_eq!(n.count(ComponentKind::Ppu), 10);
        assert_eq!(n.count(ComponentKind::Pmu), 10);
        assert_eq!(n.count(ComponentKind::Mux) + n.count(ComponentKind::Demux), 20);
        assert_eq!(n.wires_of(Side::Hyperplane).count(), 25);
        // the point side has one doubled pattern and so one extra class
        assert_eq!(n.wires_of(Side::Point).count(), 30);
        assert_eq!(n.annotations.instances[&Side::Hyperplane].rho_hat, 5);
        assert_eq!(n.annotations.register_replication, 3);
    }

    #[test]
    fn full_fold_self_loops() {
        let g = CirculantBipartiteGraph::new(15, &[0, 1, 2, 4, 5, 8, 10]).unwrap();
        let plan = FoldPlan::new(15, 15, DesignOption::PatternMajor, 1, 1).unwrap();
        let n = build_netlist(&g, &plan).unwrap();
        let rho_hat = n.annotations.instances[&Side::Hyperplane].rho_hat;
        let wires: Vec<_> = n.wires_of(Side::Hyperplane).collect();
        assert_eq!(wires.len(), rho_hat);
        assert!(wires.iter().all(|w| w.to.component == "h_demux0"));
    }
}

//! One pass/fail line per acceptance criterion. Runs without the libtest
//! harness so the lines always show up in `cargo test` output.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use pgfold::circulant::{divisors, expand_circulant, expand_matrix_oracle, CirculantBipartiteGraph};
use pgfold::emit::{ScheduleTable, TableCell};
use pgfold::folding::{compute_rho, edge_overlay_map, generate_folded_sequence, verify_theorem1, DesignOption, FoldPlan};
use pgfold::geometry::{affinely_equivalent, build_pg_graph, PgParams};
use pgfold::pipeline::{self, Choice, GraphSource, RunConfig};
use pgfold::schedule::{edge_shift_replica, read_cycle, synthesize, PipelineLevel, Side};
use pgfold::sim::{check_dataflow_equivalence, measure_throughput, simulate, RunArtifacts, SimConfig};

const AC1_BUDGET: Duration = Duration::from_secs(1);
const AC5_BUDGET: Duration = Duration::from_secs(10);
const AC6_BUDGET: Duration = Duration::from_secs(60);
const AC7_BUDGET: Duration = Duration::from_secs(120);
/// Node-level ratio window for T = 12, q = 3.
const AC9_RATIO: (f64, f64) = (1.5, 3.0);
const PROTOTYPE_CYCLES: u64 = 63;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < budget, || format!("took {t:?}, budget {budget:?}"))
}

fn example_graph() -> CirculantBipartiteGraph {
    CirculantBipartiteGraph::new(15, &[0, 1, 2, 4, 5, 8, 10]).unwrap()
}

const EXPECTED_INCIDENCE: [[usize; 7]; 15] = [
    [0, 1, 2, 4, 5, 8, 10],
    [1, 2, 3, 5, 6, 9, 11],
    [2, 3, 4, 6, 7, 10, 12],
    [3, 4, 5, 7, 8, 11, 13],
    [4, 5, 6, 8, 9, 12, 14],
    [5, 6, 7, 9, 10, 13, 0],
    [6, 7, 8, 10, 11, 14, 1],
    [7, 8, 9, 11, 12, 0, 2],
    [8, 9, 10, 12, 13, 1, 3],
    [9, 10, 11, 13, 14, 2, 4],
    [10, 11, 12, 14, 0, 3, 5],
    [11, 12, 13, 0, 1, 4, 6],
    [12, 13, 14, 1, 2, 5, 7],
    [13, 14, 0, 2, 3, 6, 8],
    [14, 0, 1, 3, 4, 7, 9],
];

fn ac1() -> Outcome {
    let start = Instant::now();
    let g = build_pg_graph(&PgParams::new(3, 2, 1).unwrap()).map_err(|e| e.to_string())?;
    ensure(g.order() == 15 && g.degree() == 7, || format!("J={}, gamma={}", g.order(), g.degree()))?;
    let reference = [0, 1, 2, 4, 5, 8, 10];
    ensure(affinely_equivalent(g.offsets(), &reference, 15), || format!("D = {:?}", g.offsets()))?;
    let rows = g.incidence_lists();
    for (h, row) in rows.iter().enumerate() {
        ensure(row.as_slice() == EXPECTED_INCIDENCE[h], || format!("hyperplane {h}: {row:?}"))?;
    }
    within(start, AC1_BUDGET)?;
    Ok(format!("J=15 gamma=7 D={:?}, 15 rows match, {:?}", g.offsets(), start.elapsed()))
}

/// Expected schedule rows: MU pair of PU0..PU4 per cycle, `None` for D.
fn expected_schedule() -> Vec<(String, Vec<[Option<usize>; 2]>, String)> {
    let patterns: [[(usize, Option<usize>); 5]; 4] = [
        [(0, Some(1)), (1, Some(2)), (2, Some(3)), (3, Some(4)), (4, Some(0))],
        [(2, Some(4)), (3, Some(0)), (4, Some(1)), (0, Some(2)), (1, Some(3))],
        [(0, Some(3)), (1, Some(4)), (2, Some(0)), (3, Some(1)), (4, Some(2))],
        [(0, None), (1, None), (2, None), (3, None), (4, None)],
    ];
    let edges = ["0th, 1st", "2nd, 3rd", "4th, 5th", "6th"];
    let folds = ["{0,1,2,3,4}", "{5,6,7,8,9}", "{10,11,12,13,14}"];
    let mut rows = Vec::new();
    for (l, pat) in patterns.iter().enumerate() {
        for fold in folds {
            rows.push((
                format!("Full Perfect Access Pattern {l}"),
                pat.iter().map(|&(a, b)| [Some(a), b]).collect(),
                format!("Scheduling {} edge of {fold} PUs", edges[l]),
            ));
        }
    }
    rows
}

fn ac2() -> Outcome {
    let g = example_graph();
    let plan = FoldPlan::new(15, 3, DesignOption::PatternMajor, 1, 1).unwrap();
    let seq = generate_folded_sequence(&g, &plan).map_err(|e| e.to_string())?;
    let table = ScheduleTable::parse_csv(&ScheduleTable::from_sequence(&seq).to_csv()).map_err(|e| e.to_string())?;
    let banners: Vec<&str> = table.banners().collect();
    let expect = expected_schedule();
    ensure(banners.len() == 4, || format!("{} banners", banners.len()))?;
    let rows: Vec<_> = table.cycle_rows().collect();
    ensure(rows.len() == 12, || format!("{} cycles", rows.len()))?;
    for (cycle, ((c, cells, note), (banner, mus, enote))) in rows.iter().zip(&expect).enumerate() {
        ensure(*c == cycle, || format!("cycle label {c} at row {cycle}"))?;
        ensure(banners[cycle / 3] == banner.as_str(), || format!("banner {:?}", banners[cycle / 3]))?;
        let want: Vec<TableCell> = mus.iter().enumerate().map(|(i, m)| TableCell { ppu: i, mus: *m }).collect();
        ensure(*cells == want.as_slice(), || format!("cycle {cycle}: {cells:?}"))?;
        ensure(note == enote, || format!("cycle {cycle}: note {note:?}"))?;
    }
    let dummy_cycles: Vec<usize> = rows
        .iter()
        .filter(|(_, cells, _)| cells.iter().any(|c| c.mus[1].is_none()))
        .map(|r| r.0)
        .collect();
    ensure(dummy_cycles == [9, 10, 11], || format!("D entries in cycles {dummy_cycles:?}"))?;
    Ok("12 cycles, 4 patterns, 60 cells and notes match, D in cycles 9-11".into())
}

fn ac3() -> Outcome {
    let g = example_graph();
    for t_cycles in [1, 12] {
        let plan = FoldPlan::new(15, 3, DesignOption::PatternMajor, t_cycles, 1).unwrap();
        let c = read_cycle(5, 0, &plan, 8).map_err(|e| e.to_string())?;
        ensure(c == 7 * t_cycles, || format!("read_cycle(5, 0) = {c} with T = {t_cycles}"))?;
    }
    let plan = FoldPlan::new(15, 3, DesignOption::PatternMajor, 1, 1).unwrap();
    let d = synthesize(&g, &plan, PipelineLevel::None).map_err(|e| e.to_string())?;
    let writes = &d.side(Side::Hyperplane).writes;
    // A..O are hyperplanes 0..14; A4 is edge 4 of hyperplane 0
    for (name, producer, edge, addr) in [("A0", 0, 0, 0), ("F6", 5, 6, 1), ("A4", 0, 4, 9)] {
        let got = writes.lookup(producer, edge).map(|e| e.address);
        ensure(got == Some(addr), || format!("{name} -> {got:?}, expected {addr}"))?;
    }
    ensure(d.layout.capacity == 24, || format!("capacity {}", d.layout.capacity))?;
    let rho = &d.side(Side::Hyperplane).rho;
    ensure(rho.rho == 5 && rho.rho_hat == 5, || format!("rho {} rho_hat {}", rho.rho, rho.rho_hat))?;
    Ok("read_cycle(5,0)=7T, A0->0 F6->1 A4->9, capacity 24, rho=rho_hat=5".into())
}

fn ac4() -> Outcome {
    let g = example_graph();
    let mut pts = g.points_of(1);
    pts.sort_unstable();
    let t = pts.iter().position(|&p| p == 5).ok_or("h1 has no edge to p5")?;
    let end = edge_shift_replica(&g, 1, t, 12).map_err(|e| e.to_string())?;
    ensure(end == 1, || format!("endpoint p{end}"))?;
    Ok(format!("h1 edge {t} (p5) shifted by 11 ends on p{end}"))
}

fn ac5() -> Outcome {
    let start = Instant::now();
    let small = CirculantBipartiteGraph::new(5, &[0, 1, 3]).unwrap();
    let e = expand_circulant(&small, 1);
    ensure(e.order() == 6 && e.degree() == 5, || format!("order {} degree {}", e.order(), e.degree()))?;
    let fano = build_pg_graph(&PgParams::new(2, 2, 1).unwrap()).map_err(|e| e.to_string())?;
    let fe = expand_circulant(&fano, 1);
    ensure(fe.adjacency_matrix() == expand_matrix_oracle(&fano, 1), || "Fano expansion differs from the diagonal completion".into())?;
    // deterministic sweep standing in for the randomized property suite
    let mut cases = 0;
    let mut seed = 0x9e37_79b9_7f4a_7c15u64;
    while cases < 200 {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        let j0 = 3 + (seed % 100) as usize;
        let alpha = 1 + ((seed >> 8) % (128 - j0 as u64).min(25)) as usize;
        let k = 1 + ((seed >> 16) % (j0 as u64 - 1).min(8)) as usize;
        let offs: Vec<usize> = (0..k).map(|i| ((seed >> (20 + 4 * i)) as usize * 7 + i) % j0).collect();
        let Ok(g) = CirculantBipartiteGraph::new(j0, &offs) else { continue };
        ensure(expand_circulant(&g, alpha).adjacency_matrix() == expand_matrix_oracle(&g, alpha), || {
            format!("J0={j0} alpha={alpha} D={:?}", g.offsets())
        })?;
        cases += 1;
    }
    within(start, AC5_BUDGET)?;
    Ok(format!("5/3 -> 6/5, Fano matches oracle, {cases} random cases, {:?}", start.elapsed()))
}

fn matrix() -> Vec<(String, CirculantBipartiteGraph)> {
    [(2, 2, 1), (3, 2, 1), (2, 3, 1), (2, 3, 2)]
        .into_iter()
        .map(|(n, p, s)| {
            let params = PgParams::new(n, p, s).unwrap();
            (format!("P({n},GF({}))", params.q()), build_pg_graph(&params).unwrap())
        })
        .collect()
}

fn ac6() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    for (name, g) in matrix() {
        let j = g.order();
        for q in divisors(j) {
            for opt in [DesignOption::PatternMajor, DesignOption::FoldMajor] {
                let plan = FoldPlan::new(j, q, opt, 1, 1).unwrap();
                for side in Side::BOTH {
                    let og = side.orient(&g);
                    let seq = generate_folded_sequence(&og, &plan).map_err(|e| e.to_string())?;
                    let r = verify_theorem1(&seq, &og, &plan);
                    ensure(r.passed(), || format!("{name} q={q} {side}: {r}"))?;
                    let map = edge_overlay_map(&og, q).map_err(|e| format!("{name} q={q}: {e}"))?;
                    for k in 0..q {
                        for node in 0..plan.f {
                            for (t, &d) in og.offsets().iter().enumerate() {
                                let end = (k * plan.f + node + d) % j % plan.f;
                                ensure(end == map.endpoints[node][t], || {
                                    format!("{name} q={q}: fold {k} node {node} edge {t}")
                                })?;
                            }
                        }
                    }
                    let rho = compute_rho(&og, &plan).map_err(|e| e.to_string())?;
                    ensure(rho.rho <= og.degree().min(plan.f), || format!("{name} q={q}: rho {}", rho.rho))?;
                    runs += 1;
                }
            }
        }
    }
    within(start, AC6_BUDGET)?;
    Ok(format!("{runs} (geometry, q, option, side) cases, {:?}", start.elapsed()))
}

fn ac7() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    for (name, g) in matrix() {
        let census = g.order() * g.degree();
        for q in divisors(g.order()) {
            for opt in [DesignOption::PatternMajor, DesignOption::FoldMajor] {
                for level in PipelineLevel::ALL {
                    if level == PipelineLevel::Graph && opt == DesignOption::PatternMajor {
                        continue;
                    }
                    let plan = FoldPlan::new(g.order(), q, opt, 1, 1).unwrap();
                    let d = synthesize(&g, &plan, level).map_err(|e| e.to_string())?;
                    let art = RunArtifacts::from_design(&d).map_err(|e| e.to_string())?;
                    let (rep, trace) = simulate(&art, &SimConfig { iterations: 2 }).map_err(|e| e.to_string())?;
                    let tag = format!("{name} q={q} option {opt} {level}");
                    ensure(rep.conflicts.is_empty(), || format!("{tag}: {rep}"))?;
                    ensure(rep.full_utilization, || format!("{tag}: idle PPU slots"))?;
                    for s in rep.sides.values() {
                        ensure(s.census.iter().all(|&c| c == census), || format!("{tag}: census {:?}", s.census))?;
                    }
                    let df = check_dataflow_equivalence(&d.graph, &trace, 2);
                    ensure(df.passed(), || format!("{tag}: {df}"))?;
                    runs += 1;
                }
            }
        }
    }
    within(start, AC7_BUDGET)?;
    Ok(format!("{runs} simulated configurations, 0 conflicts, {:?}", start.elapsed()))
}

fn ac8() -> Outcome {
    let mut runs = 0;
    for (name, g) in matrix() {
        let p = g.degree().div_ceil(2) as u64;
        for q in divisors(g.order()) {
            for (t, delta) in [(1usize, 1usize), (2, 2)] {
                for (opt, level) in [
                    (DesignOption::PatternMajor, PipelineLevel::None),
                    (DesignOption::FoldMajor, PipelineLevel::None),
                    (DesignOption::FoldMajor, PipelineLevel::Graph),
                ] {
                    let plan = FoldPlan::new(g.order(), q, opt, t, delta).unwrap();
                    let d = synthesize(&g, &plan, level).map_err(|e| e.to_string())?;
                    let art = RunArtifacts::from_design(&d).map_err(|e| e.to_string())?;
                    let (rep, _) = simulate(&art, &SimConfig { iterations: 1 }).map_err(|e| e.to_string())?;
                    let (q64, t64, d64) = (q as u64, t as u64, delta as u64);
                    let want = match level {
                        PipelineLevel::Graph => (p * q64 + 2 * d64) * t64,
                        _ => p * q64 * t64,
                    };
                    for (side, s) in &rep.sides {
                        ensure(s.lengths[0] == want, || {
                            format!("{name} q={q} T={t} {level} {side}: {} cycles, formula {want}", s.lengths[0])
                        })?;
                    }
                    runs += 1;
                }
            }
        }
    }
    let g = build_pg_graph(&PgParams::new(2, 3, 2).unwrap()).unwrap();
    let plan = FoldPlan::new(91, 7, DesignOption::FoldMajor, 1, 2).unwrap();
    let d = synthesize(&g, &plan, PipelineLevel::Graph).map_err(|e| e.to_string())?;
    let (rep, _) = simulate(&RunArtifacts::from_design(&d).map_err(|e| e.to_string())?, &SimConfig { iterations: 1 })
        .map_err(|e| e.to_string())?;
    let len = rep.sides[&Side::Hyperplane].lengths[0];
    ensure(len == 39, || format!("gamma=10 q=7 delta=2: {len} cycles"))?;
    Ok(format!("{runs} configurations match, gamma=10 q=7 delta=2 T=1 measures {len}"))
}

fn ac9() -> Outcome {
    let mut worst: f64 = 0.0;
    for (name, g) in matrix() {
        for q in divisors(g.order()) {
            for (opt, level) in [
                (DesignOption::PatternMajor, PipelineLevel::None),
                (DesignOption::PatternMajor, PipelineLevel::Node),
                (DesignOption::FoldMajor, PipelineLevel::Writeback),
                (DesignOption::FoldMajor, PipelineLevel::Graph),
            ] {
                let plan = FoldPlan::new(g.order(), q, opt, 2, 1).unwrap();
                let tp = measure_throughput(&g, &plan, level, 1).map_err(|e| e.to_string())?;
                ensure(tp.ratio <= q as f64, || format!("{name} q={q} {level}: ratio {:.3}", tp.ratio))?;
                worst = worst.max(tp.ratio / q as f64);
            }
        }
    }
    let g = build_pg_graph(&PgParams::new(3, 2, 1).unwrap()).unwrap();
    let plan = FoldPlan::new(15, 3, DesignOption::PatternMajor, 12, 1).unwrap();
    let tp = measure_throughput(&g, &plan, PipelineLevel::Node, 2).map_err(|e| e.to_string())?;
    ensure(tp.ratio >= AC9_RATIO.0 && tp.ratio < AC9_RATIO.1, || format!("T=12 q=3 ratio {:.3}", tp.ratio))?;
    Ok(format!(
        "ratio <= q everywhere (max ratio/q {worst:.3}); T=12 q=3 node-pipelined: {} vs {} cycles, ratio {:.3} (prototype reported {PROTOTYPE_CYCLES} cycles)",
        tp.folded_length, tp.unfolded_length, tp.ratio
    ))
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn ac10() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::new(GraphSource::Geometry(PgParams::new(3, 2, 1).unwrap()));
    cfg.q = Choice::Fixed(3);
    cfg.t = 12;
    let ra = pipeline::run(&cfg, a.path()).map_err(|e| e.to_string())?;
    pipeline::run(&cfg, b.path()).map_err(|e| e.to_string())?;
    let (ta, tb) = (read_tree(a.path()), read_tree(b.path()));
    ensure(ta == tb, || "run directories differ".into())?;
    let v = pipeline::verify(a.path()).map_err(|e| e.to_string())?;
    ensure(v.passed(), || v.to_string())?;
    ensure(v.sim == ra.sim, || "simulation from files differs from the in-process report".into())?;
    ensure(v.dataflow.passed() == ra.dataflow.passed(), || "dataflow verdicts differ".into())?;
    Ok(format!("{} files hash-identical across runs; file-only simulation reproduces the verdict", ta.len()))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("AC1", "geometry golden", ac1),
        ("AC2", "folding golden", ac2),
        ("AC3", "address golden", ac3),
        ("AC4", "edge replica", ac4),
        ("AC5", "expansion", ac5),
        ("AC6", "theorem suites", ac6),
        ("AC7", "simulator conflict-freedom", ac7),
        ("AC8", "timing formulas", ac8),
        ("AC9", "prototype throughput", ac9),
        ("AC10", "end-to-end determinism", ac10),
    ];
    let mut failed = 0;
    for (id, title, f) in criteria {
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("{id} PASS {title}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {title}: {why}");
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

//! Independent oracles for values the library derives.

use std::collections::BTreeSet;

use pgfold::circulant::{divisors, expand_circulant, CirculantBipartiteGraph};
use pgfold::field::Elem;
use pgfold::folding::{compute_rho, generate_folded_sequence, verify_theorem1, DesignOption, FoldPlan};
use pgfold::geometry::{build_pg_graph, trace_kernel, PgParams};
use pgfold::schedule::{synthesize, write_schedule, PipelineLevel, Side};
use pgfold::sim::{check_dataflow_equivalence, simulate, RunArtifacts, SimConfig};

/// Powers x^0 .. x^(m-1) modulo a monic polynomial, as coefficient vectors.
/// Plain integer arithmetic, no field tables.
fn power_vectors(modulus: &[u32], p: u32, m: usize) -> Vec<Vec<u32>> {
    let k = modulus.len() - 1;
    let mut cur = vec![0u32; k];
    cur[0] = 1;
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        out.push(cur.clone());
        let top = cur[k - 1];
        let mut next = vec![0u32; k];
        for i in (1..k).rev() {
            next[i] = cur[i - 1];
        }
        for (i, n) in next.iter_mut().enumerate() {
            *n = (*n + (p - top) * modulus[i] % p) % p;
        }
        cur = next;
    }
    out
}

/// Every nonzero linear functional on GF(p)^k.
fn functionals(p: u32, k: usize) -> Vec<Vec<u32>> {
    let total = (p as usize).pow(k as u32);
    (1..total)
        .map(|mut n| {
            (0..k)
                .map(|_| {
                    let c = (n % p as usize) as u32;
                    n /= p as usize;
                    c
                })
                .collect()
        })
        .collect()
}

fn dot(a: &[u32], b: &[u32], p: u32) -> u32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<u32>() % p
}

#[test]
fn prime_geometries_match_functional_kernels() {
    for (n, p) in [(2u32, 2u32), (3, 2), (2, 3), (4, 2), (2, 5), (3, 3), (2, 7)] {
        let params = PgParams::new(n, p, 1).unwrap();
        let (field, d) = trace_kernel(&params).unwrap();
        let j = params.order();
        let k = (n + 1) as usize;
        let vecs = power_vectors(field.modulus().coefficients(), p, j);
        let mut hyperplanes = BTreeSet::new();
        for c in functionals(p, k) {
            let ker: Vec<usize> = (0..j).filter(|&i| dot(&c, &vecs[i], p) == 0).collect();
            hyperplanes.insert(ker);
        }
        assert_eq!(hyperplanes.len(), j, "P({n},GF({p})) hyperplane count");
        let g = build_pg_graph(&params).unwrap();
        for h in 0..j {
            let mut row = g.points_of(h);
            row.sort_unstable();
            assert!(hyperplanes.contains(&row), "P({n},GF({p})) row {h} is not a hyperplane");
        }
        assert!(hyperplanes.contains(&d));
    }
}

#[test]
fn trace_kernel_is_a_subspace() {
    for (n, p, s) in [(2u32, 2u32, 2u32), (2, 3, 2), (3, 2, 2), (2, 2, 3)] {
        let params = PgParams::new(n, p, s).unwrap();
        let (field, d) = trace_kernel(&params).unwrap();
        let q = params.q();
        let j = params.order();
        // each projective point i stands for the q - 1 field elements alpha^(i + mJ)
        let mut set: BTreeSet<Elem> = BTreeSet::new();
        set.insert(field.from_code(0));
        for &i in &d {
            for m in 0..(q as usize - 1) {
                set.insert(field.alpha_pow((i + m * j) as u64));
            }
        }
        assert_eq!(set.len() as u64, q.pow(n), "|ker| for P({n},GF({q}))");
        for &a in &set {
            for &b in &set {
                assert!(set.contains(&field.add(a, b).unwrap()));
            }
        }
        let scalars: Vec<Elem> = field.elements().filter(|&e| field.in_subfield(e, q as u32).unwrap()).collect();
        assert_eq!(scalars.len() as u64, q);
        for &c in &scalars {
            for &a in &set {
                assert!(set.contains(&field.mul(c, a).unwrap()));
            }
        }
    }
}

#[test]
fn fano_plane_axioms() {
    let g = build_pg_graph(&PgParams::new(2, 2, 1).unwrap()).unwrap();
    assert_eq!(g.offsets(), &[1, 2, 4]);
    let lines: Vec<BTreeSet<usize>> = (0..7).map(|h| g.points_of(h).into_iter().collect()).collect();
    for a in 0..7 {
        for b in a + 1..7 {
            assert_eq!(lines[a].intersection(&lines[b]).count(), 1, "lines {a},{b}");
            let through = lines.iter().filter(|l| l.contains(&a) && l.contains(&b)).count();
            assert_eq!(through, 1, "points {a},{b}");
        }
    }
    // line 3 is line 0 shifted by 3
    assert_eq!(lines[3], BTreeSet::from([4, 5, 0]));
}

/// h0..h14 as A..O, edges by sorted point index.
const POINT_READ_ORDER: [&str; 15] = [
    "A0 F6 H5 K4 L3 N2 O1",
    "B0 G6 I5 L4 M3 O2 A1",
    "C0 H6 J5 M4 N3 A2 B1",
    "D0 I6 K5 N4 O3 B2 C1",
    "E0 J6 L5 O4 A3 C2 D1",
    "F0 K6 M5 A4 B3 D2 E1",
    "G0 L6 N5 B4 C3 E2 F1",
    "H0 M6 O5 C4 D3 F2 G1",
    "I0 N6 A5 D4 E3 G2 H1",
    "J0 O6 B5 E4 F3 H2 I1",
    "K0 A6 C5 F4 G3 I2 J1",
    "L0 B6 D5 G4 H3 J2 K1",
    "M0 C6 E5 H4 I3 K2 L1",
    "N0 D6 F5 I4 J3 L2 M1",
    "O0 E6 G5 J4 K3 M2 N1",
];

#[test]
fn point_consumption_order_matches_expected() {
    let g = CirculantBipartiteGraph::new(15, &[0, 1, 2, 4, 5, 8, 10]).unwrap();
    for opt in [DesignOption::PatternMajor, DesignOption::FoldMajor] {
        let plan = FoldPlan::new(15, 3, opt, 1, 1).unwrap();
        let d = synthesize(&g, &plan, PipelineLevel::None).unwrap();
        let (rep, trace) = simulate(&RunArtifacts::from_design(&d).unwrap(), &SimConfig { iterations: 1 }).unwrap();
        assert!(rep.passed(), "{rep}");
        for (point, row) in POINT_READ_ORDER.iter().enumerate() {
            let mut got: Vec<_> = trace
                .deliveries
                .iter()
                .filter(|x| x.reader == Side::Point && x.consumer == point && x.token.real)
                .map(|x| (x.edge, x.token))
                .collect();
            got.sort_by_key(|x| x.0);
            let names: Vec<String> = got
                .iter()
                .map(|(_, t)| {
                    assert_eq!(t.side, Side::Hyperplane);
                    format!("{}{}", (b'A' + t.producer as u8) as char, t.edge)
                })
                .collect();
            assert_eq!(names.join(" "), *row, "point {point}, option {opt}");
        }
    }
}

fn reverse_index(t: usize, gamma: usize, has_zero: bool) -> usize {
    match (has_zero, t) {
        (true, 0) => 0,
        (true, _) => gamma - t,
        (false, _) => gamma - 1 - t,
    }
}

#[test]
fn unfolded_writes_follow_reverse_order() {
    for params in [PgParams::new(3, 2, 1).unwrap(), PgParams::new(2, 2, 1).unwrap()] {
        let g = build_pg_graph(&params).unwrap();
        let j = g.order();
        let gamma = g.degree();
        let plan = FoldPlan::new(j, 1, DesignOption::PatternMajor, 1, 1).unwrap();
        let ws = write_schedule(&g, &plan, Side::Hyperplane).unwrap();
        let has_zero = g.offsets().contains(&0);
        for e in &ws.entries {
            assert_eq!(e.consumer_edge, reverse_index(e.edge, gamma, has_zero), "J={j} producer {} edge {}", e.producer, e.edge);
        }
        let d = synthesize(&g, &plan, PipelineLevel::None).unwrap();
        let (rep, _) = simulate(&RunArtifacts::from_design(&d).unwrap(), &SimConfig::default()).unwrap();
        assert!(rep.passed(), "{rep}");
    }
    let first: Vec<usize> = (0..7).map(|t| reverse_index(t, 7, true)).collect();
    assert_eq!(first, [0, 6, 5, 4, 3, 2, 1]);
}

#[test]
fn doubled_patterns_get_extra_wires_and_stay_clean() {
    // offsets 0 and 4 collide modulo F = 4
    let g = CirculantBipartiteGraph::new(8, &[0, 4, 5, 7]).unwrap();
    let plan = FoldPlan::new(8, 2, DesignOption::PatternMajor, 1, 1).unwrap();
    let seq = generate_folded_sequence(&g, &plan).unwrap();
    assert!(seq.patterns[0].doubled);
    assert!(!seq.patterns[1].doubled);
    let rho = compute_rho(&g, &plan).unwrap();
    assert_eq!((rho.rho, rho.theta, rho.rho_hat), (3, 1, 4));
    for opt in [DesignOption::PatternMajor, DesignOption::FoldMajor] {
        for level in PipelineLevel::ALL {
            if level == PipelineLevel::Graph && opt == DesignOption::PatternMajor {
                continue;
            }
            let plan = FoldPlan::new(8, 2, opt, 2, 1).unwrap();
            let d = synthesize(&g, &plan, level).unwrap();
            let (rep, trace) = simulate(&RunArtifacts::from_design(&d).unwrap(), &SimConfig::default()).unwrap();
            assert!(rep.passed(), "option {opt} {level}: {rep}");
            assert!(check_dataflow_equivalence(&g, &trace, 2).passed());
        }
    }
}

#[test]
fn expanded_fano_folds_cleanly() {
    let fano = build_pg_graph(&PgParams::new(2, 2, 1).unwrap()).unwrap();
    let e = expand_circulant(&fano, 1);
    assert_eq!((e.order(), e.real_order()), (8, 7));
    for q in divisors(8).into_iter().filter(|&q| q < 8) {
        let plan = FoldPlan::new(8, q, DesignOption::FoldMajor, 1, 1).unwrap();
        let seq = generate_folded_sequence(&e, &plan).unwrap();
        assert!(verify_theorem1(&seq, &e, &plan).passed());
        let d = synthesize(&e, &plan, PipelineLevel::Graph).unwrap();
        let (rep, trace) = simulate(&RunArtifacts::from_design(&d).unwrap(), &SimConfig::default()).unwrap();
        assert!(rep.passed(), "q={q}: {rep}");
        assert!(check_dataflow_equivalence(&e, &trace, 2).passed());
    }
}

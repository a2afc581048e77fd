use std::collections::BTreeSet;

use proptest::prelude::*;

use pgfold::circulant::{divisors, expand_circulant, expand_matrix_oracle, CirculantBipartiteGraph};
use pgfold::emit::{AddressFile, ScheduleTable};
use pgfold::field::{Elem, FiniteField};
use pgfold::folding::{compute_rho, edge_overlay_map, generate_folded_sequence, verify_theorem1, DesignOption, FoldPlan};
use pgfold::schedule::{synthesize, PipelineLevel, Side};
use pgfold::sim::{check_dataflow_equivalence, simulate, RunArtifacts, SimConfig};

const SMALL_FIELDS: [(u32, u32); 12] = [
    (2, 1), (2, 3), (2, 4), (2, 7), (2, 10), (3, 1), (3, 2), (3, 5), (5, 2), (5, 4), (7, 3), (31, 2),
];

fn field_and_elems() -> impl Strategy<Value = (FiniteField, Elem, Elem, Elem)> {
    prop::sample::select(SMALL_FIELDS.to_vec()).prop_flat_map(|(p, k)| {
        let n = p.pow(k);
        (Just((p, k)), 0..n, 0..n, 0..n).prop_map(|((p, k), a, b, c)| {
            (FiniteField::with_default_modulus(p, k).unwrap(), Elem(a), Elem(b), Elem(c))
        })
    })
}

fn circulant(max_order: usize) -> impl Strategy<Value = CirculantBipartiteGraph> {
    (2..=max_order).prop_flat_map(|j| {
        prop::collection::btree_set(0..j, 1..=j.min(9))
            .prop_map(move |d| CirculantBipartiteGraph::new(j, &d.into_iter().collect::<Vec<_>>()).unwrap())
    })
}

fn option() -> impl Strategy<Value = DesignOption> {
    prop_oneof![Just(DesignOption::PatternMajor), Just(DesignOption::FoldMajor)]
}

fn pick_divisor(j: usize, sel: prop::sample::Index) -> usize {
    let d = divisors(j);
    d[sel.index(d.len())]
}

proptest! {
    #[test]
    fn field_axioms((f, a, b, c) in field_and_elems()) {
        let zero = Elem(0);
        let one = f.alpha_pow(0);
        prop_assert_eq!(f.add(a, b).unwrap(), f.add(b, a).unwrap());
        prop_assert_eq!(f.mul(a, b).unwrap(), f.mul(b, a).unwrap());
        prop_assert_eq!(f.add(f.add(a, b).unwrap(), c).unwrap(), f.add(a, f.add(b, c).unwrap()).unwrap());
        prop_assert_eq!(f.mul(f.mul(a, b).unwrap(), c).unwrap(), f.mul(a, f.mul(b, c).unwrap()).unwrap());
        let lhs = f.mul(a, f.add(b, c).unwrap()).unwrap();
        let rhs = f.add(f.mul(a, b).unwrap(), f.mul(a, c).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(f.add(a, zero).unwrap(), a);
        prop_assert_eq!(f.mul(a, one).unwrap(), a);
        prop_assert_eq!(f.add(f.sub(a, b).unwrap(), b).unwrap(), a);
        if !a.is_zero() {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()).unwrap(), one);
            prop_assert_eq!(f.pow(a, f.group_order() as u64).unwrap(), one);
        } else {
            prop_assert!(f.inv(a).is_err());
        }
    }

    #[test]
    fn trace_is_linear_into_subfield(
        (p, s, m) in prop::sample::select(vec![(2u32, 1u32, 4u32), (2, 2, 2), (2, 2, 3), (3, 1, 3), (3, 2, 2), (2, 3, 2), (5, 1, 3)]),
        ai in any::<u32>(), bi in any::<u32>(), ci in any::<u32>(),
    ) {
        let f = FiniteField::with_default_modulus(p, s * m).unwrap();
        let q = p.pow(s);
        let n = f.order();
        let (a, b) = (Elem(ai % n), Elem(bi % n));
        let scalars: Vec<Elem> = f.elements().filter(|&e| f.in_subfield(e, q).unwrap()).collect();
        prop_assert_eq!(scalars.len() as u32, q);
        let c = scalars[ci as usize % scalars.len()];
        let ta = f.trace_to_subfield(a, q).unwrap();
        let tb = f.trace_to_subfield(b, q).unwrap();
        prop_assert!(f.in_subfield(ta, q).unwrap());
        prop_assert_eq!(f.trace_to_subfield(f.add(a, b).unwrap(), q).unwrap(), f.add(ta, tb).unwrap());
        prop_assert_eq!(f.trace_to_subfield(f.mul(c, a).unwrap(), q).unwrap(), f.mul(c, ta).unwrap());
    }

    #[test]
    fn expansion_matches_diagonal_completion(g in circulant(40), alpha in 1usize..30) {
        let e = expand_circulant(&g, alpha);
        prop_assert_eq!(e.order(), g.order() + alpha);
        prop_assert_eq!(e.real_order(), g.order());
        prop_assert_eq!(e.adjacency_matrix(), expand_matrix_oracle(&g, alpha));
        // the original graph survives as the real part
        let real = e.real_adjacency_matrix();
        for h in 0..g.order() {
            for a in 0..g.order() {
                prop_assert_eq!(real[h][a] == 1, g.is_edge(h, a));
            }
        }
    }

    #[test]
    fn folded_sequences_are_balanced_and_overlays_commute(
        g in circulant(60), sel in any::<prop::sample::Index>(), opt in option(),
    ) {
        let j = g.order();
        let q = pick_divisor(j, sel);
        let plan = FoldPlan::new(j, q, opt, 1, 1).unwrap();
        for side in Side::BOTH {
            let og = side.orient(&g);
            let seq = generate_folded_sequence(&og, &plan).unwrap();
            let r = verify_theorem1(&seq, &og, &plan);
            prop_assert!(r.passed(), "{}", r);
            let map = edge_overlay_map(&og, q).unwrap();
            for x in 0..j {
                for (t, &d) in og.offsets().iter().enumerate() {
                    prop_assert_eq!((x + d) % j % plan.f, map.endpoints[x % plan.f][t]);
                }
            }
            let rho = compute_rho(&og, &plan).unwrap();
            prop_assert!(rho.rho <= og.degree().min(plan.f));
            prop_assert_eq!(rho.rho_hat, rho.rho + rho.theta);
        }
    }

    #[test]
    fn options_cover_the_same_accesses(g in circulant(48), sel in any::<prop::sample::Index>()) {
        let j = g.order();
        let q = pick_divisor(j, sel);
        let triples = |opt| {
            let plan = FoldPlan::new(j, q, opt, 1, 1).unwrap();
            let seq = generate_folded_sequence(&g, &plan).unwrap();
            let mut v = Vec::new();
            for pos in 0..seq.slot_count() {
                let l = seq.slots[pos].pattern;
                for acc in seq.accesses(pos) {
                    for (b, pmu) in acc.pmus.iter().enumerate() {
                        v.push((acc.lpu, 2 * l + b, *pmu));
                    }
                }
            }
            v.sort_unstable();
            v
        };
        let a = triples(DesignOption::PatternMajor);
        prop_assert_eq!(a.len(), j * g.degree().next_multiple_of(2));
        prop_assert_eq!(&a, &triples(DesignOption::FoldMajor));
        let distinct: BTreeSet<_> = a.iter().map(|x| (x.0, x.1)).collect();
        prop_assert_eq!(distinct.len(), a.len());
    }

    #[test]
    fn table_and_address_files_round_trip(g in circulant(24), sel in any::<prop::sample::Index>(), opt in option()) {
        let j = g.order();
        let plan = FoldPlan::new(j, pick_divisor(j, sel), opt, 1, 1).unwrap();
        let seq = generate_folded_sequence(&g, &plan).unwrap();
        let table = ScheduleTable::from_sequence(&seq);
        prop_assert_eq!(&ScheduleTable::parse_csv(&table.to_csv()).unwrap(), &table);
        let d = synthesize(&g, &plan, PipelineLevel::None).unwrap();
        for side in Side::BOTH {
            let a = AddressFile::from_design(&d, side);
            prop_assert_eq!(&AddressFile::parse(&a.render()).unwrap(), &a);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simulator_is_clean_on_random_circulants(
        g in circulant(20), sel in any::<prop::sample::Index>(), opt in option(),
        lvl in 0usize..4, t in 1usize..4, delta in 1usize..3,
    ) {
        let j = g.order();
        let q = pick_divisor(j, sel);
        let mut level = PipelineLevel::ALL[lvl];
        if level == PipelineLevel::Graph && opt == DesignOption::PatternMajor {
            level = PipelineLevel::Writeback;
        }
        let plan = FoldPlan::new(j, q, opt, t, delta).unwrap();
        let d = synthesize(&g, &plan, level).unwrap();
        let (rep, trace) = simulate(&RunArtifacts::from_design(&d).unwrap(), &SimConfig { iterations: 2 }).unwrap();
        prop_assert!(rep.passed(), "J={} D={:?} q={} {}: {}", j, g.offsets(), q, level, rep);
        prop_assert!(rep.census_ok);
        let df = check_dataflow_equivalence(&g, &trace, 2);
        prop_assert!(df.passed(), "{}", df);
    }
}

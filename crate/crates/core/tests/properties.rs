//! Property-based invariants over randomized inputs.

use proptest::prelude::*;
use std::collections::BTreeSet;
use wallx_core::graphs::{MarkedGraph, Vertex};
use wallx_core::num::{rat, PerturbedRational};
use wallx_core::stability::{Pseudodivisor, StabilityCondition};

fn arb_graph() -> impl Strategy<Value = MarkedGraph> {
    // up to 4 vertices, genus <= 2 each, up to 5 edges over a random
    // connected multigraph; marking 1 on a random vertex
    (1usize..=4).prop_flat_map(|nv| {
        let genera = proptest::collection::vec(0u32..=2, nv);
        let leg_at = 0..nv;
        let extra_edges = proptest::collection::vec((0..nv, 0..nv), 0..=3);
        (genera, leg_at, extra_edges).prop_filter_map(
            "stable connected graph",
            move |(genera, leg_at, extra)| {
                let mut edges: Vec<(usize, usize)> = Vec::new();
                // spanning path keeps it connected
                for v in 1..nv {
                    edges.push((v - 1, v));
                }
                edges.extend(extra);
                let vertices: Vec<Vertex> = (0..nv)
                    .map(|v| Vertex {
                        genus: genera[v],
                        legs: if v == leg_at { [1u32].into_iter().collect() } else { BTreeSet::new() },
                    })
                    .collect();
                MarkedGraph::new(vertices, edges, 1).ok()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalization_is_idempotent_and_iso_invariant(graph in arb_graph()) {
        let (canon, _) = graph.canonical_form();
        let (canon2, _) = canon.canonical_form();
        prop_assert_eq!(canon.raw_key(), canon2.raw_key());
        // relabeling by any automorphism-compatible shuffle keeps the key
        let order: Vec<usize> = (0..graph.num_vertices()).rev().collect();
        let (shuffled, _, _) = graph.relabel(&order);
        prop_assert_eq!(shuffled.canonical_key(), graph.canonical_key());
    }

    #[test]
    fn beta_modular_identity_random(graph in arb_graph(), seed in 0i64..100) {
        let g = graph.genus_total();
        let d = seed % 3 - 1;
        let mut phi = StabilityCondition::zero(g, 1, d);
        for (c, (_, val)) in phi.x_div.iter_mut().enumerate() {
            *val = PerturbedRational::from_rat(rat(2 * c as i64 + 1 + seed, 211));
        }
        phi.x_pts[0] = PerturbedRational::from_rat(rat(seed + 1, 101));
        let nv = graph.num_vertices();
        let mut values = vec![0i64; nv];
        values[0] = d;
        let divisor = Pseudodivisor::divisor(values);
        for mask1 in 0u64..(1 << nv) {
            for mask2 in 0u64..(1 << nv) {
                let v: BTreeSet<usize> = (0..nv).filter(|&x| mask1 >> x & 1 == 1).collect();
                let w: BTreeSet<usize> = (0..nv).filter(|&x| mask2 >> x & 1 == 1).collect();
                let gap = graph
                    .edges_between(
                        &v.difference(&w).copied().collect(),
                        &w.difference(&v).copied().collect(),
                    )
                    .len() as i64;
                let lhs = wallx_core::extremal::beta(&graph, &divisor, &phi, &v)
                    + wallx_core::extremal::beta(&graph, &divisor, &phi, &w)
                    - PerturbedRational::from_int(gap);
                let rhs = wallx_core::extremal::beta(
                    &graph,
                    &divisor,
                    &phi,
                    &v.intersection(&w).copied().collect(),
                ) + wallx_core::extremal::beta(
                    &graph,
                    &divisor,
                    &phi,
                    &v.union(&w).copied().collect(),
                );
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn perturbed_rationals_order_lexicographically(
        a in -50i64..50, b in -50i64..50, c in -50i64..50, d in -50i64..50
    ) {
        let x = PerturbedRational::new(rat(a, 7), rat(b, 5));
        let y = PerturbedRational::new(rat(c, 7), rat(d, 5));
        let expected = (rat(a, 7), rat(b, 5)) < (rat(c, 7), rat(d, 5));
        prop_assert_eq!(x < y, expected);
        // addition respects the order
        let z = PerturbedRational::new(rat(1, 3), rat(-2, 9));
        prop_assert_eq!((&x + &z) < (&y + &z), x < y);
    }

    #[test]
    fn graph_json_roundtrip_random(graph in arb_graph()) {
        let json = graph.to_json();
        let text = serde_json::to_string(&json).unwrap();
        let parsed: wallx_core::graphs::GraphJson = serde_json::from_str(&text).unwrap();
        let back = MarkedGraph::from_json(&parsed).unwrap();
        prop_assert_eq!(back.canonical_key(), graph.canonical_key());
    }
}

//! Extremal vertex sets across a wall, the poset `ext(G, D)`, vine
//! functions, and full forests.
//!
//! A proper vertex subset is extremal when `beta` is positive on the plus
//! side and negative on the minus side of the wall; `ext(G, D)` collects the
//! extremal sets that are connected with connected complement, ordered by
//! inclusion. Full forests in this poset are the combinatorial core of the
//! resolved wall-crossing strata.

use crate::graphs::{MarkedGraph, VSet};
use crate::num::{rat, PerturbedRational};
use crate::stability::{Pseudodivisor, StabilityCondition};
use crate::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

/// `beta(V) = -deg(D|_V) + phi(V) + |E(V, V^c)| / 2` for a divisor
/// (`E` empty) on a stable graph.
pub fn beta(
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    phi: &StabilityCondition,
    set: &VSet,
) -> PerturbedRational {
    debug_assert!(divisor.edges.is_empty());
    let complement = graph.complement(set);
    let cut = graph.edges_between(set, &complement).len() as i64;
    let mut b =
        PerturbedRational::from_rat(rat(cut, 2) - crate::num::rat_int(divisor.degree_on(set)));
    b += &phi.phi_set(graph, set);
    b
}

/// The poset of extremal subsets for a `(phi_plus, phi_minus)` crossing:
/// connected, with connected complement, `beta_plus > 0 > beta_minus`.
#[derive(Clone, Debug)]
pub struct ExtPoset {
    pub graph: MarkedGraph,
    pub divisor: Pseudodivisor,
    pub elements: Vec<VSet>,
}

impl ExtPoset {
    pub fn le(&self, a: &VSet, b: &VSet) -> bool {
        a.is_subset(b)
    }

    pub fn maximal_elements(&self) -> Vec<VSet> {
        self.elements
            .iter()
            .filter(|v| !self.elements.iter().any(|w| *v != w && v.is_subset(w)))
            .cloned()
            .collect()
    }

    pub fn minimal_elements(&self) -> Vec<VSet> {
        self.elements
            .iter()
            .filter(|v| !self.elements.iter().any(|w| *v != w && w.is_subset(v)))
            .cloned()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Builds `ext(G, D)`. The divisor must be stable on the plus side; every
/// extremal set must contain the first marking (guaranteed by the
/// orientation convention of the crossing, asserted here).
pub fn ext_poset(
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    phi_plus: &StabilityCondition,
    phi_minus: &StabilityCondition,
) -> Result<ExtPoset> {
    ext_poset_with_values(
        graph,
        divisor,
        &phi_plus.vertex_values(graph),
        &phi_minus.vertex_values(graph),
    )
}

/// As [`ext_poset`], with the per-vertex polarization values supplied by
/// the caller.
pub fn ext_poset_with_values(
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    plus_vals: &[PerturbedRational],
    minus_vals: &[PerturbedRational],
) -> Result<ExtPoset> {
    use crate::stability::{beta_with_values, is_stable_divisor_with_values};
    if !is_stable_divisor_with_values(graph, &divisor.values, plus_vals) {
        return Err(Error::NotPlusStable);
    }
    let nv = graph.num_vertices();
    let mut elements = Vec::new();
    for set in graph.connected_subsets() {
        if set.len() == nv {
            continue;
        }
        let complement = graph.complement(&set);
        if !graph.is_connected_subset(&complement) {
            continue;
        }
        let plus = beta_with_values(graph, &divisor.values, plus_vals, &set);
        let minus = beta_with_values(graph, &divisor.values, minus_vals, &set);
        if plus.is_positive() && minus.is_negative() {
            let leg1 = graph.leg_vertex(1);
            if !set.contains(&leg1) {
                return Err(Error::Other(
                    "extremal set without the first marking; crossing orientation violated"
                        .into(),
                ));
            }
            elements.push(set);
        }
    }
    elements.sort_by_key(|s| (s.len(), s.iter().copied().collect::<Vec<_>>()));
    Ok(ExtPoset { graph: graph.clone(), divisor: divisor.clone(), elements })
}

/// A full forest in `ext(G, D)` with the cached `nex`, close-upper and
/// far-upper edge data of each element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullForest {
    /// elements, sorted by (size, content)
    pub sets: Vec<VSet>,
    /// intersection of the strictly larger forest elements (whole vertex set
    /// when there are none)
    pub nex: Vec<VSet>,
    /// `cu(V) = E(V, nex(V) \ V)`
    pub cu: Vec<BTreeSet<usize>>,
    /// `fu(V) = E(V, nex(V)^c)`
    pub fu: Vec<BTreeSet<usize>>,
}

impl FullForest {
    pub fn empty() -> Self {
        FullForest { sets: Vec::new(), nex: Vec::new(), cu: Vec::new(), fu: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn index_of(&self, set: &VSet) -> Option<usize> {
        self.sets.iter().position(|s| s == set)
    }

    /// Indices of elements covering `sets[idx]` inside the forest.
    pub fn covers_of(&self, idx: usize) -> Vec<usize> {
        let v = &self.sets[idx];
        let ups: Vec<usize> = (0..self.sets.len())
            .filter(|&j| j != idx && v.is_subset(&self.sets[j]))
            .collect();
        ups.iter()
            .copied()
            .filter(|&j| {
                !ups.iter()
                    .any(|&k| k != j && self.sets[k].is_subset(&self.sets[j]))
            })
            .collect()
    }

    /// Indices of elements strictly above `sets[idx]` (a chain).
    pub fn up_set(&self, idx: usize) -> Vec<usize> {
        (0..self.sets.len())
            .filter(|&j| j != idx && self.sets[idx].is_subset(&self.sets[j]))
            .collect()
    }

    pub fn from_sets(graph: &MarkedGraph, mut sets: Vec<VSet>) -> Self {
        sets.sort_by_key(|s| (s.len(), s.iter().copied().collect::<Vec<_>>()));
        let all: VSet = (0..graph.num_vertices()).collect();
        let mut nex = Vec::new();
        let mut cu = Vec::new();
        let mut fu = Vec::new();
        for v in &sets {
            let mut next = all.clone();
            for w in &sets {
                if v != w && v.is_subset(w) {
                    next = next.intersection(w).copied().collect();
                }
            }
            let close: VSet = next.difference(v).copied().collect();
            let far: VSet = graph.complement(&next);
            cu.push(graph.edges_between(v, &close).into_iter().collect());
            fu.push(graph.edges_between(v, &far).into_iter().collect());
            nex.push(next);
        }
        FullForest { sets, nex, cu, fu }
    }
}

fn is_forest(sets: &[VSet]) -> bool {
    // every down-set must be a chain
    for c in sets {
        let below: Vec<&VSet> = sets.iter().filter(|a| a.is_subset(c)).collect();
        for x in &below {
            for y in &below {
                if !x.is_subset(y) && !y.is_subset(x) {
                    return false;
                }
            }
        }
    }
    true
}

fn covers_all_edges(graph: &MarkedGraph, sets: &[VSet]) -> bool {
    let mut covered: BTreeSet<usize> = BTreeSet::new();
    for v in sets {
        covered.extend(graph.edges_between(v, &graph.complement(v)));
    }
    covered.len() == graph.num_edges()
}

/// All full forests in `ext(G, D)`: forests containing every maximal element
/// whose boundary edges cover `E(G)`.
pub fn full_forests(poset: &ExtPoset) -> Vec<FullForest> {
    let graph = &poset.graph;
    if poset.elements.is_empty() {
        return if graph.num_edges() == 0 {
            vec![FullForest::empty()]
        } else {
            Vec::new()
        };
    }
    let maximal = poset.maximal_elements();
    let optional: Vec<&VSet> = poset.elements.iter().filter(|v| !maximal.contains(v)).collect();
    let mut out = Vec::new();
    // grow from the maximal elements, branching over the optional ones in
    // decreasing size so the forest condition can prune early
    let mut ordered = optional.clone();
    ordered.sort_by_key(|s| std::cmp::Reverse(s.len()));
    fn rec(
        idx: usize,
        ordered: &[&VSet],
        chosen: &mut Vec<VSet>,
        graph: &MarkedGraph,
        out: &mut Vec<FullForest>,
    ) {
        if !is_forest(chosen) {
            return;
        }
        if idx == ordered.len() {
            if covers_all_edges(graph, chosen) {
                out.push(FullForest::from_sets(graph, chosen.clone()));
            }
            return;
        }
        // prune: even with all remaining elements the edges must be coverable
        let mut potential: BTreeSet<usize> = BTreeSet::new();
        for v in chosen.iter() {
            potential.extend(graph.edges_between(v, &graph.complement(v)));
        }
        for v in &ordered[idx..] {
            potential.extend(graph.edges_between(v, &graph.complement(v)));
        }
        if potential.len() < graph.num_edges() {
            return;
        }
        chosen.push(ordered[idx].clone());
        rec(idx + 1, ordered, chosen, graph, out);
        chosen.pop();
        rec(idx + 1, ordered, chosen, graph, out);
    }
    let mut chosen: Vec<VSet> = maximal.clone();
    rec(0, &ordered, &mut chosen, graph, &mut out);
    out.sort_by_key(forest_sort_key);
    out
}

fn forest_sort_key(f: &FullForest) -> Vec<Vec<usize>> {
    f.sets.iter().map(|s| s.iter().copied().collect()).collect()
}

/// Power-set oracle for [`full_forests`]; used by the verification suites.
pub fn full_forests_naive(poset: &ExtPoset) -> Vec<FullForest> {
    let graph = &poset.graph;
    if poset.elements.is_empty() {
        return if graph.num_edges() == 0 {
            vec![FullForest::empty()]
        } else {
            Vec::new()
        };
    }
    let maximal = poset.maximal_elements();
    let m = poset.elements.len();
    assert!(m <= 20, "oracle is exponential in |ext|");
    let mut out = Vec::new();
    for mask in 0u64..(1 << m) {
        let sets: Vec<VSet> = (0..m)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| poset.elements[i].clone())
            .collect();
        if !maximal.iter().all(|v| sets.contains(v)) {
            continue;
        }
        if !is_forest(&sets) || !covers_all_edges(graph, &sets) {
            continue;
        }
        out.push(FullForest::from_sets(graph, sets));
    }
    out.sort_by_key(forest_sort_key);
    out
}

// ---- vine functions -----------------------------------------------------------

/// A vine function with domain `ext(G, D)`: an edge-subset assignment where
/// `alpha(V)` is empty exactly when a strictly smaller extremal set already
/// touches the boundary of `V`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct VineFunction {
    pub alpha: BTreeMap<VSet, BTreeSet<usize>>,
}

impl VineFunction {
    pub fn support(&self) -> BTreeSet<usize> {
        self.alpha.values().flat_map(|s| s.iter().copied()).collect()
    }

    pub fn is_full(&self, graph: &MarkedGraph) -> bool {
        self.support().len() == graph.num_edges()
    }
}

/// All vine functions with domain `ext(G, D)`.
pub fn vine_functions(poset: &ExtPoset) -> Vec<VineFunction> {
    let graph = &poset.graph;
    let mut order = poset.elements.clone();
    order.sort_by_key(|s| s.len());
    let mut partial: Vec<BTreeMap<VSet, BTreeSet<usize>>> = vec![BTreeMap::new()];
    for v in &order {
        let boundary: BTreeSet<usize> =
            graph.edges_between(v, &graph.complement(v)).into_iter().collect();
        let mut next = Vec::new();
        for alpha in &partial {
            let blocked = poset.elements.iter().any(|w| {
                w != v
                    && w.is_subset(v)
                    && alpha
                        .get(w)
                        .map(|edges| edges.intersection(&boundary).next().is_some())
                        .unwrap_or(false)
            });
            if blocked {
                let mut q = alpha.clone();
                q.insert(v.clone(), BTreeSet::new());
                next.push(q);
            } else {
                let edges: Vec<usize> = boundary.iter().copied().collect();
                for mask in 1u64..(1 << edges.len()) {
                    let choice: BTreeSet<usize> = edges
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &e)| e)
                        .collect();
                    let mut q = alpha.clone();
                    q.insert(v.clone(), choice);
                    next.push(q);
                }
            }
        }
        partial = next;
    }
    partial.into_iter().map(|alpha| VineFunction { alpha }).collect()
}

pub fn full_vine_functions(poset: &ExtPoset) -> Vec<VineFunction> {
    vine_functions(poset)
        .into_iter()
        .filter(|a| a.is_full(&poset.graph))
        .collect()
}

/// The full vine function of a full forest: `alpha(V) = cu(V)` on forest
/// elements, empty elsewhere.
pub fn forest_to_vine_function(poset: &ExtPoset, forest: &FullForest) -> VineFunction {
    let mut alpha = BTreeMap::new();
    for v in &poset.elements {
        match forest.index_of(v) {
            Some(idx) => {
                alpha.insert(v.clone(), forest.cu[idx].clone());
            }
            None => {
                alpha.insert(v.clone(), BTreeSet::new());
            }
        }
    }
    VineFunction { alpha }
}

/// Inverse of [`forest_to_vine_function`]; errors when the input is not full.
pub fn vine_function_to_forest(poset: &ExtPoset, vf: &VineFunction) -> Result<FullForest> {
    if !vf.is_full(&poset.graph) {
        return Err(Error::InvalidInput("vine function is not full".into()));
    }
    if vf.alpha.len() != poset.elements.len() {
        return Err(Error::InvalidInput("vine function domain must be ext(G,D)".into()));
    }
    let sets: Vec<VSet> = poset
        .elements
        .iter()
        .filter(|v| !vf.alpha[*v].is_empty())
        .cloned()
        .collect();
    let forest = FullForest::from_sets(&poset.graph, sets);
    // a full vine function assigns exactly the close-upper edges
    for (idx, v) in forest.sets.iter().enumerate() {
        if vf.alpha[v] != forest.cu[idx] {
            return Err(Error::InvalidInput(
                "full vine function must assign the close-upper edges".into(),
            ));
        }
    }
    Ok(forest)
}

/// Consistency assertion behind the forests: a pair admitting a full forest
/// always has a stable underlying graph.
pub fn graph_is_stable_given_forest(graph: &MarkedGraph, _divisor: &Pseudodivisor) -> bool {
    graph.is_stable()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{enumerate_stable_graphs, trivial_graph, VineTriple};
    use crate::stability::{generic_base_point, opposite_pair, stable_divisors, Wall};

    fn set(v: &[u32]) -> BTreeSet<u32> {
        v.iter().copied().collect()
    }

    fn crossing(g: u32, n: u32, d: i64, wall: &Wall) -> (StabilityCondition, StabilityCondition) {
        let base = generic_base_point(g, n, d, wall).unwrap();
        opposite_pair(g, n, d, wall, &base).unwrap()
    }

    #[test]
    fn beta_vanishes_on_whole_graph() {
        let (g, n, d) = (2u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let (plus, _) = crossing(g, n, d, &wall);
        for graph in enumerate_stable_graphs(g, n, 2).unwrap() {
            for divisor in stable_divisors(&graph, &plus) {
                let all: VSet = (0..graph.num_vertices()).collect();
                assert!(beta(&graph, &divisor, &plus, &all).is_zero());
            }
        }
    }

    #[test]
    fn beta_modular_identity() {
        let (g, n, d) = (2u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let (plus, _) = crossing(g, n, d, &wall);
        for graph in enumerate_stable_graphs(g, n, 3).unwrap() {
            let nv = graph.num_vertices();
            let divisors = stable_divisors(&graph, &plus);
            let Some(divisor) = divisors.first() else { continue };
            for mask1 in 0u64..(1 << nv) {
                for mask2 in 0u64..(1 << nv) {
                    let v: VSet = (0..nv).filter(|&x| mask1 >> x & 1 == 1).collect();
                    let w: VSet = (0..nv).filter(|&x| mask2 >> x & 1 == 1).collect();
                    let gap = graph
                        .edges_between(
                            &v.difference(&w).copied().collect(),
                            &w.difference(&v).copied().collect(),
                        )
                        .len() as i64;
                    let lhs = beta(&graph, divisor, &plus, &v) + beta(&graph, divisor, &plus, &w)
                        - PerturbedRational::from_int(gap);
                    let rhs = beta(&graph, divisor, &plus, &v.intersection(&w).copied().collect())
                        + beta(&graph, divisor, &plus, &v.union(&w).copied().collect());
                    assert_eq!(lhs, rhs);
                }
            }
        }
    }

    #[test]
    fn extremal_sets_have_zero_beta_at_base() {
        let (g, n, d) = (2u32, 1u32, 0i64);
        let wall = Wall::new(g, n, 0, 2, set(&[1]), 1).unwrap();
        let base = generic_base_point(g, n, d, &wall).unwrap();
        let (plus, minus) = opposite_pair(g, n, d, &wall, &base).unwrap();
        for graph in enumerate_stable_graphs(g, n, 2).unwrap() {
            for divisor in stable_divisors(&graph, &plus) {
                let poset = ext_poset(&graph, &divisor, &plus, &minus).unwrap();
                for v in &poset.elements {
                    assert!(beta(&graph, &divisor, &base, v).is_zero());
                }
            }
        }
    }

    #[test]
    fn same_chamber_gives_empty_poset() {
        let (g, n, d) = (2u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let (plus, _) = crossing(g, n, d, &wall);
        for graph in enumerate_stable_graphs(g, n, 2).unwrap() {
            for divisor in stable_divisors(&graph, &plus) {
                let poset = ext_poset(&graph, &divisor, &plus, &plus).unwrap();
                assert!(poset.is_empty());
            }
        }
    }

    #[test]
    fn not_plus_stable_is_an_error() {
        let (g, n, d) = (2u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let (plus, minus) = crossing(g, n, d, &wall);
        let vine = VineTriple::new(g, n, 1, 1, set(&[1])).unwrap().to_graph(g, n).unwrap();
        let pd = Pseudodivisor::divisor(vec![7, -6]);
        assert!(matches!(ext_poset(&vine, &pd, &plus, &minus), Err(Error::NotPlusStable)));
    }

    #[test]
    fn vine_crossing_single_extremal_and_forest() {
        let (g, n, d) = (2u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let (plus, minus) = crossing(g, n, d, &wall);
        let vine = VineTriple::new(g, n, 1, 1, set(&[1])).unwrap().to_graph(g, n).unwrap();
        let v1 = vine.leg_vertex(1);
        // on the wall x = 1/2: extremal bidegree has D(v1) = k+1 = 1
        let mut vals = vec![0i64; 2];
        vals[v1] = 1;
        let pd = Pseudodivisor::divisor(vals);
        let poset = ext_poset(&vine, &pd, &plus, &minus).unwrap();
        assert_eq!(poset.len(), 1);
        assert_eq!(poset.elements[0], [v1].into_iter().collect::<VSet>());
        let forests = full_forests(&poset);
        assert_eq!(forests.len(), 1);
        let forest = &forests[0];
        assert_eq!(forest.sets.len(), 1);
        // nex is the whole vertex set; all edges are close-upper
        assert_eq!(forest.nex[0].len(), 2);
        assert_eq!(forest.cu[0].len(), vine.num_edges());
        assert!(forest.fu[0].is_empty());
        // single-element forest maps to alpha(V) = E(G)
        let alpha = forest_to_vine_function(&poset, forest);
        assert_eq!(alpha.alpha[&poset.elements[0]].len(), vine.num_edges());
        let back = vine_function_to_forest(&poset, &alpha).unwrap();
        assert_eq!(back, *forest);
    }

    #[test]
    fn empty_forest_only_for_trivial_graph() {
        let (g, n, d) = (2u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let (plus, minus) = crossing(g, n, d, &wall);
        let trivial = trivial_graph(g, n).unwrap();
        let pd = Pseudodivisor::divisor(vec![d]);
        let poset = ext_poset(&trivial, &pd, &plus, &minus).unwrap();
        assert!(poset.is_empty());
        let forests = full_forests(&poset);
        assert_eq!(forests.len(), 1);
        assert!(forests[0].is_empty());
        let vf = forest_to_vine_function(&poset, &forests[0]);
        assert!(vf.alpha.is_empty());
        assert_eq!(vine_function_to_forest(&poset, &vf).unwrap(), forests[0]);
    }

    #[test]
    fn forests_match_naive_oracle_and_bijection() {
        // central wall with a five-fold coincidence: x_1 = 2 at (g,n,d) = (3,1,0)
        let (g, n, d) = (3u32, 1u32, 0i64);
        let wall = Wall::new(g, n, 0, 2, set(&[1]), 2).unwrap();
        let base = generic_base_point(g, n, d, &wall).unwrap();
        let (plus, minus) = opposite_pair(g, n, d, &wall, &base).unwrap();
        let mut nontrivial_poset = 0usize;
        let mut at_least_two = 0usize;
        for graph in enumerate_stable_graphs(g, n, 3).unwrap() {
            for divisor in stable_divisors(&graph, &plus) {
                let poset = ext_poset(&graph, &divisor, &plus, &minus).unwrap();
                if !poset.is_empty() {
                    nontrivial_poset += 1;
                }
                if poset.len() >= 2 {
                    at_least_two += 1;
                }
                let fast = full_forests(&poset);
                let slow = full_forests_naive(&poset);
                assert_eq!(fast, slow);
                let fulls = full_vine_functions(&poset);
                assert_eq!(fulls.len(), fast.len());
                for forest in &fast {
                    let alpha = forest_to_vine_function(&poset, forest);
                    assert!(fulls.contains(&alpha));
                    let back = vine_function_to_forest(&poset, &alpha).unwrap();
                    assert_eq!(back, *forest);
                }
                for alpha in &fulls {
                    let forest = vine_function_to_forest(&poset, alpha).unwrap();
                    let again = forest_to_vine_function(&poset, &forest);
                    assert_eq!(again, *alpha);
                }
                if !fast.is_empty() {
                    assert!(graph_is_stable_given_forest(&graph, &divisor));
                }
            }
        }
        assert!(nontrivial_poset > 0, "central wall must produce extremal sets");
        assert!(at_least_two > 0, "central wall must produce posets with >= 2 elements");
    }

    #[test]
    fn subdivision_admits_no_full_forest() {
        // quasistable loci with an exceptional vertex never carry full forests
        let (g, n, d) = (2u32, 1u32, 0i64);
        let wall = Wall::new(g, n, 0, 2, set(&[1]), 1).unwrap();
        let base = generic_base_point(g, n, d, &wall).unwrap();
        let (plus, minus) = opposite_pair(g, n, d, &wall, &base).unwrap();
        for graph in enumerate_stable_graphs(g, n, 2).unwrap() {
            if graph.num_edges() == 0 {
                continue;
            }
            let sub = crate::graphs::subdivide(&graph, &[0usize].into_iter().collect());
            let sg = &sub.graph;
            let nv = sg.num_vertices();
            let mut stack = vec![vec![]];
            for v in 0..nv {
                let exceptional = v >= graph.num_vertices();
                let mut next = Vec::new();
                for partial in &stack {
                    let range: Vec<i64> = if exceptional { vec![1] } else { (-2..=2).collect() };
                    for val in range {
                        let mut q: Vec<i64> = partial.clone();
                        q.push(val);
                        next.push(q);
                    }
                }
                stack = next;
            }
            for values in stack {
                if values.iter().sum::<i64>() != d {
                    continue;
                }
                let pd = Pseudodivisor::divisor(values);
                let leg1 = sg.leg_vertex(1);
                let phi_plus_vals: Vec<PerturbedRational> = {
                    let mut v = plus.vertex_values(&graph);
                    v.resize(nv, PerturbedRational::zero());
                    v
                };
                let phi_minus_vals: Vec<PerturbedRational> = {
                    let mut v = minus.vertex_values(&graph);
                    v.resize(nv, PerturbedRational::zero());
                    v
                };
                let mut elements = Vec::new();
                for setv in sg.connected_subsets() {
                    if setv.len() == nv || !setv.contains(&leg1) {
                        continue;
                    }
                    let co = sg.complement(&setv);
                    if !sg.is_connected_subset(&co) {
                        continue;
                    }
                    let cut = sg.edges_between(&setv, &co).len() as i64;
                    let mut bp = PerturbedRational::from_rat(rat(cut, 2));
                    let mut bm = bp.clone();
                    for &v in &setv {
                        bp += &phi_plus_vals[v];
                        bm += &phi_minus_vals[v];
                        bp += &PerturbedRational::from_int(-pd.values[v]);
                        bm += &PerturbedRational::from_int(-pd.values[v]);
                    }
                    if bp.is_positive() && bm.is_negative() {
                        elements.push(setv);
                    }
                }
                let poset = ExtPoset { graph: sg.clone(), divisor: pd.clone(), elements };
                assert!(
                    full_forests(&poset).is_empty(),
                    "subdivision {:?} with divisor {:?} admitted a full forest",
                    sg.raw_key(),
                    pd
                );
            }
        }
    }
}

//! The universal stability space in vine-curve coordinates, its wall
//! arrangement, and the (semi/quasi)stability tests for pseudodivisors.
//!
//! A stability condition stores only the divisorial coordinates `x_{i,1,S}`
//! (with `1 in S`) and the point coordinates `x_j`; every other vine-curve
//! value is derived through the change-of-coordinates formula. Perturbations
//! are carried symbolically in the `eps` component, never as small rationals.

use crate::graphs::{MarkedGraph, Subdivision, VSet, VineTriple};
use crate::num::{rat, rat_from_str, rat_int, rat_to_string, PerturbedRational, Rat};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub type DivKey = (u32, BTreeSet<u32>);

/// A point of the universal stability space, with an optional symbolic
/// infinitesimal component in each coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilityCondition {
    pub g: u32,
    pub n: u32,
    pub d: i64,
    /// coordinates `x_{i,1,S}` for divisorial vine triples with `1 in S`
    pub x_div: BTreeMap<DivKey, PerturbedRational>,
    /// coordinates `x_j = x_{0,2,{j}}`, index `j-1`
    pub x_pts: Vec<PerturbedRational>,
}

/// All divisorial keys `(i, S)` with `1 in S` for which `(i, 1, S)` is a
/// valid vine triple.
pub fn divisorial_keys(g: u32, n: u32) -> Vec<DivKey> {
    let mut out = Vec::new();
    for i in 0..=g {
        for s in subsets_containing_one(n) {
            if VineTriple::new(g, n, i, 1, s.clone()).is_ok() {
                out.push((i, s));
            }
        }
    }
    out
}

/// All valid vine triples `(i, t, S)` with `1 in S`.
pub fn canonical_triples(g: u32, n: u32) -> Vec<VineTriple> {
    let mut out = Vec::new();
    for t in 1..=(g + 1) {
        for i in 0..=(g + 1 - t) {
            for s in subsets_containing_one(n) {
                if let Ok(triple) = VineTriple::new(g, n, i, t, s) {
                    out.push(triple);
                }
            }
        }
    }
    out
}

fn subsets_containing_one(n: u32) -> Vec<BTreeSet<u32>> {
    let rest: Vec<u32> = (2..=n).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << rest.len()) {
        let mut s: BTreeSet<u32> = BTreeSet::new();
        s.insert(1);
        for (b, &l) in rest.iter().enumerate() {
            if mask >> b & 1 == 1 {
                s.insert(l);
            }
        }
        out.push(s);
    }
    out.sort();
    out
}

impl StabilityCondition {
    /// A condition with every stored coordinate zero (generally degenerate;
    /// useful as a mutable starting point).
    pub fn zero(g: u32, n: u32, d: i64) -> Self {
        let x_div = divisorial_keys(g, n)
            .into_iter()
            .map(|k| (k, PerturbedRational::zero()))
            .collect();
        StabilityCondition {
            g,
            n,
            d,
            x_div,
            x_pts: vec![PerturbedRational::zero(); n as usize],
        }
    }

    /// Value of the coordinate `x_{i,t,S}` for an arbitrary subset `S`
    /// (derived through change of coordinates when `t >= 2`, through the
    /// complementary triple when `1` is not in `S`).
    pub fn x_of(&self, i: u32, t: u32, s: &BTreeSet<u32>) -> PerturbedRational {
        if t == 1 {
            if s.contains(&1) {
                return self.x_div[&(i, s.clone())].clone();
            }
            let sc: BTreeSet<u32> = (1..=self.n).filter(|l| !s.contains(l)).collect();
            let x = self.x_div[&(self.g - i, sc)].clone();
            return PerturbedRational::from_int(self.d) - x;
        }
        // x = (a * sum_{j in S} x_j + b * (d - sum_{j not in S} x_j)) / (2g-2)
        let a = 2 * self.g as i64 - 2 * i as i64 - t as i64;
        let b = 2 * i as i64 - 2 + t as i64;
        let two_g_minus_2 = 2 * self.g as i64 - 2;
        let mut in_s = PerturbedRational::zero();
        let mut out_s = PerturbedRational::zero();
        for j in 1..=self.n {
            if s.contains(&j) {
                in_s += &self.x_pts[(j - 1) as usize];
            } else {
                out_s += &self.x_pts[(j - 1) as usize];
            }
        }
        let num = in_s.scale(&rat_int(a))
            + (PerturbedRational::from_int(self.d) - out_s).scale(&rat_int(b));
        num.scale(&rat(1, two_g_minus_2))
    }

    /// Per-vertex values of this polarization on a stable graph.
    pub fn vertex_values(&self, graph: &MarkedGraph) -> Vec<PerturbedRational> {
        (0..graph.num_vertices())
            .map(|v| self.phi_set(graph, &[v].into_iter().collect()))
            .collect()
    }

    /// `phi(V)` on a stable graph, computed through vine contractions and
    /// additivity over connected pieces.
    pub fn phi_set(&self, graph: &MarkedGraph, set: &VSet) -> PerturbedRational {
        if set.is_empty() {
            return PerturbedRational::zero();
        }
        if set.len() == graph.num_vertices() {
            return PerturbedRational::from_int(self.d);
        }
        let comps = graph.connected_components_of(set);
        if comps.len() > 1 {
            let mut total = PerturbedRational::zero();
            for c in comps {
                total += &self.phi_set(graph, &c);
            }
            return total;
        }
        let complement = graph.complement(set);
        let co_comps = graph.connected_components_of(&complement);
        if co_comps.len() == 1 {
            let i = graph.induced_genus(set).expect("connected");
            let t = graph.edges_between(set, &complement).len() as u32;
            let s = graph.legs_of_set(set);
            return self.x_of(i, t, &s);
        }
        let mut total = PerturbedRational::from_int(self.d);
        for c in co_comps {
            total = total - self.phi_set(graph, &c);
        }
        total
    }

    /// True when some vine-curve coordinate sits exactly on a wall
    /// (no infinitesimal offset).
    pub fn is_degenerate(&self) -> bool {
        canonical_triples(self.g, self.n).iter().any(|triple| {
            let x = self.x_of(triple.i, triple.t, &triple.s);
            x.eps.is_zero() && on_wall_value(&x.base, triple.t)
        })
    }
}

/// Is `x` a degenerate value for a vine curve with `t` nodes?
/// Integers for even `t`, half-integers for odd `t`.
pub fn on_wall_value(x: &Rat, t: u32) -> bool {
    if t % 2 == 0 {
        x.denom().is_one()
    } else {
        (x * rat_int(2)).denom().is_one() && !x.denom().is_one()
    }
}

// ---- pseudodivisors -------------------------------------------------------

/// A pseudodivisor `(E, D)`: an edge subset together with an integer divisor
/// on the subdivision `G^E` taking the value 1 at every exceptional vertex.
/// Only the values on the original vertices are stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pseudodivisor {
    pub edges: BTreeSet<usize>,
    pub values: Vec<i64>,
}

impl Pseudodivisor {
    pub fn divisor(values: Vec<i64>) -> Self {
        Pseudodivisor { edges: BTreeSet::new(), values }
    }

    pub fn new(graph: &MarkedGraph, edges: BTreeSet<usize>, values: Vec<i64>) -> Result<Self> {
        if values.len() != graph.num_vertices() {
            return Err(Error::InvalidInput("divisor length mismatch".into()));
        }
        if edges.iter().any(|&e| e >= graph.num_edges()) {
            return Err(Error::InvalidInput("subdivided edge out of range".into()));
        }
        Ok(Pseudodivisor { edges, values })
    }

    pub fn total_degree(&self) -> i64 {
        self.values.iter().sum::<i64>() + self.edges.len() as i64
    }

    pub fn degree_on(&self, set: &VSet) -> i64 {
        set.iter().map(|&v| self.values[v]).sum()
    }

    /// Simple iff `E` does not disconnect the graph.
    pub fn is_simple(&self, graph: &MarkedGraph) -> bool {
        let nv = graph.num_vertices();
        if nv == 1 {
            return true;
        }
        let mut seen = VSet::new();
        let mut stack = vec![0usize];
        seen.insert(0);
        while let Some(v) = stack.pop() {
            for (idx, &(a, b)) in graph.edges().iter().enumerate() {
                if self.edges.contains(&idx) {
                    continue;
                }
                let w = if a == v {
                    b
                } else if b == v {
                    a
                } else {
                    continue;
                };
                if seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == nv
    }

    /// Pushforward along a contraction morphism (requires `E` empty).
    pub fn pushforward(
        &self,
        morphism: &crate::graphs::GraphMorphism,
        target_nv: usize,
    ) -> Pseudodivisor {
        assert!(self.edges.is_empty());
        let mut values = vec![0i64; target_nv];
        for (v, &w) in morphism.vertex_map.iter().enumerate() {
            values[w] += self.values[v];
        }
        Pseudodivisor::divisor(values)
    }
}

/// Shared state for stability tests of `(E, D)` on `G`: the subdivision, its
/// per-vertex polarization values (zero on exceptional vertices), and the
/// divisor values (one on exceptional vertices).
struct SubdivContext {
    sub: Subdivision,
    phi: Vec<PerturbedRational>,
    dvals: Vec<i64>,
}

fn subdiv_context(
    graph: &MarkedGraph,
    pd: &Pseudodivisor,
    phi: &StabilityCondition,
) -> SubdivContext {
    let sub = crate::graphs::subdivide(graph, &pd.edges);
    let mut phi_vals = phi.vertex_values(graph);
    phi_vals.resize(sub.graph.num_vertices(), PerturbedRational::zero());
    let mut dvals = pd.values.clone();
    dvals.resize(sub.graph.num_vertices(), 1);
    SubdivContext { sub, phi: phi_vals, dvals }
}

fn beta_of(ctx: &SubdivContext, set: &VSet) -> PerturbedRational {
    let complement = ctx.sub.graph.complement(set);
    let cut = ctx.sub.graph.edges_between(set, &complement).len() as i64;
    let mut b = PerturbedRational::from_rat(rat(cut, 2));
    for &v in set {
        b += &PerturbedRational::from_rat(-rat_int(ctx.dvals[v]));
        b += &ctx.phi[v];
    }
    b
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StabilityKind {
    Semistable,
    Stable,
    Quasistable(usize),
}

fn stability_test(
    graph: &MarkedGraph,
    pd: &Pseudodivisor,
    phi: &StabilityCondition,
    kind: StabilityKind,
    pruned: bool,
) -> bool {
    debug_assert_eq!(pd.total_degree(), phi.d, "degree mismatch");
    let ctx = subdiv_context(graph, pd, phi);
    let nv = ctx.sub.graph.num_vertices();
    let exceptional = ctx.sub.exceptional_vertices();
    let subsets: Vec<VSet> = if pruned {
        ctx.sub.graph.connected_subsets()
    } else {
        (1u64..(1 << nv))
            .map(|mask| (0..nv).filter(|&v| mask >> v & 1 == 1).collect())
            .collect()
    };
    for set in &subsets {
        let b = beta_of(&ctx, set);
        if b.is_negative() {
            return false;
        }
        if b.is_zero() && set.len() != nv {
            let exempt = match kind {
                StabilityKind::Semistable => true,
                StabilityKind::Stable => set.iter().all(|v| exceptional.contains(v)),
                StabilityKind::Quasistable(v0) => !set.contains(&v0),
            };
            if !exempt {
                return false;
            }
        }
    }
    true
}

/// `phi`-semistability of a pseudodivisor: `beta(V0) >= 0` for every subset
/// of the subdivision's vertices.
pub fn is_semistable(graph: &MarkedGraph, pd: &Pseudodivisor, phi: &StabilityCondition) -> bool {
    stability_test(graph, pd, phi, StabilityKind::Semistable, true)
}

/// Strict inequalities away from `V(G^E)` and from subsets of exceptional
/// vertices.
pub fn is_stable(graph: &MarkedGraph, pd: &Pseudodivisor, phi: &StabilityCondition) -> bool {
    stability_test(graph, pd, phi, StabilityKind::Stable, true)
}

/// Strict inequalities on subsets containing `v0`.
pub fn is_quasistable(
    graph: &MarkedGraph,
    pd: &Pseudodivisor,
    phi: &StabilityCondition,
    v0: usize,
) -> bool {
    stability_test(graph, pd, phi, StabilityKind::Quasistable(v0), true)
}

/// Unpruned variants iterating over every vertex subset; kept as the testing
/// oracle for the connectivity pruning.
pub fn is_semistable_unpruned(
    graph: &MarkedGraph,
    pd: &Pseudodivisor,
    phi: &StabilityCondition,
) -> bool {
    stability_test(graph, pd, phi, StabilityKind::Semistable, false)
}

pub fn is_stable_unpruned(
    graph: &MarkedGraph,
    pd: &Pseudodivisor,
    phi: &StabilityCondition,
) -> bool {
    stability_test(graph, pd, phi, StabilityKind::Stable, false)
}

pub fn is_quasistable_unpruned(
    graph: &MarkedGraph,
    pd: &Pseudodivisor,
    phi: &StabilityCondition,
    v0: usize,
) -> bool {
    stability_test(graph, pd, phi, StabilityKind::Quasistable(v0), false)
}

/// Stability of a divisor (`E` empty) from precomputed per-vertex
/// polarization values; the fast path used by the enumerators.
pub fn is_stable_divisor_with_values(
    graph: &MarkedGraph,
    dvals: &[i64],
    phi_vals: &[PerturbedRational],
) -> bool {
    let nv = graph.num_vertices();
    for set in graph.connected_subsets() {
        let b = beta_with_values(graph, dvals, phi_vals, &set);
        if b.is_negative() || (b.is_zero() && set.len() != nv) {
            return false;
        }
    }
    true
}

/// All degree-`d` divisors (`E` empty) on `graph` that are `phi`-stable.
/// Per-vertex ranges follow from the singleton inequalities.
pub fn stable_divisors(graph: &MarkedGraph, phi: &StabilityCondition) -> Vec<Pseudodivisor> {
    stable_divisors_with_values(graph, &phi.vertex_values(graph), phi.d)
}

/// As [`stable_divisors`], with the per-vertex polarization values supplied
/// by the caller (they are expensive to recompute per divisor).
pub fn stable_divisors_with_values(
    graph: &MarkedGraph,
    phi_vals: &[PerturbedRational],
    d: i64,
) -> Vec<Pseudodivisor> {
    let nv = graph.num_vertices();
    let mut ranges: Vec<Vec<i64>> = Vec::new();
    for v in 0..nv {
        let single: VSet = [v].into_iter().collect();
        let val = graph.edges_between(&single, &graph.complement(&single)).len() as i64;
        // phi(v) - val/2 < D(v) < phi(v) + val/2
        let lo = &phi_vals[v].base - rat(val, 2);
        let hi = &phi_vals[v].base + rat(val, 2);
        let lo_int = lo.floor().to_integer();
        let hi_int = hi.ceil().to_integer();
        let mut vals = Vec::new();
        let mut k = lo_int.clone();
        while k <= hi_int {
            vals.push(int_to_i64(&k));
            k += BigInt::one();
        }
        ranges.push(vals);
    }
    // suffix sums bound the reachable totals for early pruning
    let mut min_suffix = vec![0i64; nv + 1];
    let mut max_suffix = vec![0i64; nv + 1];
    for v in (0..nv).rev() {
        let lo = ranges[v].iter().copied().min().unwrap_or(0);
        let hi = ranges[v].iter().copied().max().unwrap_or(0);
        min_suffix[v] = min_suffix[v + 1] + lo;
        max_suffix[v] = max_suffix[v + 1] + hi;
    }
    let mut out = Vec::new();
    let mut cur = vec![0i64; nv];
    #[allow(clippy::too_many_arguments)]
    fn rec(
        v: usize,
        nv: usize,
        partial: i64,
        d: i64,
        ranges: &[Vec<i64>],
        min_suffix: &[i64],
        max_suffix: &[i64],
        cur: &mut Vec<i64>,
        graph: &MarkedGraph,
        phi_vals: &[PerturbedRational],
        out: &mut Vec<Pseudodivisor>,
    ) {
        if v == nv {
            if partial == d && is_stable_divisor_with_values(graph, cur, phi_vals) {
                out.push(Pseudodivisor::divisor(cur.clone()));
            }
            return;
        }
        if partial + min_suffix[v] > d || partial + max_suffix[v] < d {
            return;
        }
        for &val in &ranges[v] {
            cur[v] = val;
            rec(v + 1, nv, partial + val, d, ranges, min_suffix, max_suffix, cur, graph, phi_vals, out);
        }
    }
    rec(0, nv, 0, d, &ranges, &min_suffix, &max_suffix, &mut cur, graph, phi_vals, &mut out);
    out
}

fn int_to_i64(x: &BigInt) -> i64 {
    use num_traits::ToPrimitive;
    x.to_i64().expect("desk-scale integer")
}

// ---- walls ------------------------------------------------------------------

/// A stability hyperplane `H(i, t, S; k)`: the locus `x_{i,t,S} = k` for even
/// `t` and `x_{i,t,S} = k + 1/2` for odd `t`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Wall {
    pub i: u32,
    pub t: u32,
    #[serde(rename = "S")]
    pub s: BTreeSet<u32>,
    pub k: i64,
}

impl Wall {
    pub fn new(g: u32, n: u32, i: u32, t: u32, s: BTreeSet<u32>, k: i64) -> Result<Self> {
        VineTriple::new(g, n, i, t, s.clone())?;
        Ok(Wall { i, t, s, k })
    }

    /// Value of the coordinate `x_{i,t,S}` on the wall.
    pub fn value(&self) -> Rat {
        if self.t % 2 == 0 {
            rat_int(self.k)
        } else {
            rat_int(self.k) + rat(1, 2)
        }
    }

    /// The wall as an integer affine functional on the coordinate vector
    /// `(x_div..., x_pts..., 1)`, reduced to lowest terms with positive
    /// leading coefficient. Two walls are equal as point sets iff these
    /// agree.
    pub fn functional(&self, g: u32, n: u32, d: i64) -> Vec<BigInt> {
        let keys = divisorial_keys(g, n);
        let ncoords = keys.len() + n as usize;
        let mut coeffs: Vec<Rat> = vec![Rat::zero(); ncoords + 1];
        if self.t == 1 {
            // normalize to the representative with 1 in S
            let (i, s, value) = if self.s.contains(&1) {
                (self.i, self.s.clone(), self.value())
            } else {
                let sc: BTreeSet<u32> = (1..=n).filter(|l| !self.s.contains(l)).collect();
                (g - self.i, sc, rat_int(d) - self.value())
            };
            let pos = keys.iter().position(|k| *k == (i, s.clone())).expect("valid key");
            coeffs[pos] = Rat::one();
            coeffs[ncoords] = value;
        } else {
            let a = 2 * g as i64 - 2 * self.i as i64 - self.t as i64;
            let b = 2 * self.i as i64 - 2 + self.t as i64;
            for j in 1..=n {
                let idx = keys.len() + (j - 1) as usize;
                if self.s.contains(&j) {
                    coeffs[idx] = rat_int(a);
                } else {
                    coeffs[idx] = -rat_int(b);
                }
            }
            coeffs[ncoords] = self.value() * rat_int(2 * g as i64 - 2) - rat_int(b * d);
        }
        normalize_functional(coeffs)
    }
}

fn normalize_functional(coeffs: Vec<Rat>) -> Vec<BigInt> {
    let mut denom_lcm = BigInt::one();
    for c in &coeffs {
        denom_lcm = denom_lcm.lcm(c.denom());
    }
    let mut ints: Vec<BigInt> = coeffs
        .iter()
        .map(|c| (c * Rat::from(denom_lcm.clone())).to_integer())
        .collect();
    let mut gcd = BigInt::zero();
    for c in &ints {
        gcd = gcd.gcd(c);
    }
    if !gcd.is_zero() {
        for c in ints.iter_mut() {
            *c /= &gcd;
        }
    }
    if let Some(first) = ints.iter().find(|c| !c.is_zero()) {
        if first.is_negative() {
            for c in ints.iter_mut() {
                *c = -c.clone();
            }
        }
    }
    ints
}

/// Point-set equality of two stability hyperplanes.
pub fn walls_coincide(w1: &Wall, w2: &Wall, g: u32, n: u32, d: i64) -> bool {
    w1.functional(g, n, d) == w2.functional(g, n, d)
}

/// A rectangular window: one closed interval per coordinate, ordered as
/// `(x_div sorted, then x_1..x_n)`.
#[derive(Clone, Debug)]
pub struct Window {
    pub lo: Vec<Rat>,
    pub hi: Vec<Rat>,
}

impl Window {
    pub fn uniform(g: u32, n: u32, lo: Rat, hi: Rat) -> Self {
        let ncoords = divisorial_keys(g, n).len() + n as usize;
        Window { lo: vec![lo; ncoords], hi: vec![hi; ncoords] }
    }
}

/// A group of coinciding walls: one representative plus every listed wall
/// equal to it as a point set.
#[derive(Clone, Debug)]
pub struct WallGroup {
    pub walls: Vec<Wall>,
}

impl WallGroup {
    pub fn representative(&self) -> &Wall {
        &self.walls[0]
    }

    pub fn multiplicity(&self) -> usize {
        self.walls.len()
    }
}

/// All stability hyperplanes meeting the window, grouped by point-set
/// coincidence. Deterministic order.
pub fn walls_in_window(g: u32, n: u32, d: i64, window: &Window) -> Vec<WallGroup> {
    let keys = divisorial_keys(g, n);
    let mut walls: Vec<Wall> = Vec::new();
    for triple in canonical_triples(g, n) {
        if triple.t == 1 {
            let pos = keys.iter().position(|k| *k == (triple.i, triple.s.clone())).unwrap();
            let (lo, hi) = (&window.lo[pos], &window.hi[pos]);
            // x = k + 1/2 in [lo, hi]
            let k_lo = (lo - rat(1, 2)).ceil().to_integer();
            let k_hi = (hi - rat(1, 2)).floor().to_integer();
            let mut k = k_lo.clone();
            while k <= k_hi {
                walls.push(Wall { i: triple.i, t: 1, s: triple.s.clone(), k: int_to_i64(&k) });
                k += BigInt::one();
            }
        } else {
            let a = rat_int(2 * g as i64 - 2 * triple.i as i64 - triple.t as i64);
            let b = rat_int(2 * triple.i as i64 - 2 + triple.t as i64);
            let scale = rat(1, 2 * g as i64 - 2);
            // value range of (a*sum_S x_j + b*(d - sum_{S^c} x_j)) / (2g-2); a, b >= 0
            let mut lo_val = rat_int(d) * &b;
            let mut hi_val = lo_val.clone();
            for j in 1..=n {
                let idx = keys.len() + (j - 1) as usize;
                if triple.s.contains(&j) {
                    lo_val += &a * &window.lo[idx];
                    hi_val += &a * &window.hi[idx];
                } else {
                    lo_val -= &b * &window.hi[idx];
                    hi_val -= &b * &window.lo[idx];
                }
            }
            lo_val *= &scale;
            hi_val *= &scale;
            let offset = if triple.t % 2 == 0 { Rat::zero() } else { rat(1, 2) };
            let k_lo = (lo_val - &offset).ceil().to_integer();
            let k_hi = (hi_val - &offset).floor().to_integer();
            let mut k = k_lo.clone();
            while k <= k_hi {
                walls.push(Wall {
                    i: triple.i,
                    t: triple.t,
                    s: triple.s.clone(),
                    k: int_to_i64(&k),
                });
                k += BigInt::one();
            }
        }
    }
    // group by normalized functional
    let mut groups: BTreeMap<Vec<BigInt>, Vec<Wall>> = BTreeMap::new();
    for w in walls {
        groups.entry(w.functional(g, n, d)).or_default().push(w);
    }
    groups
        .into_values()
        .map(|mut walls| {
            walls.sort();
            WallGroup { walls }
        })
        .collect()
}

// ---- crossing a wall --------------------------------------------------------

/// All canonical wall triples whose hyperplane passes through `base`
/// (the `k` being determined by the coordinate value).
fn walls_through(base: &StabilityCondition) -> Vec<Wall> {
    let mut out = Vec::new();
    for triple in canonical_triples(base.g, base.n) {
        let x = base.x_of(triple.i, triple.t, &triple.s);
        if !x.eps.is_zero() || !on_wall_value(&x.base, triple.t) {
            continue;
        }
        let k = if triple.t % 2 == 0 {
            int_to_i64(&x.base.to_integer())
        } else {
            int_to_i64(&(&x.base - rat(1, 2)).to_integer())
        };
        out.push(Wall { i: triple.i, t: triple.t, s: triple.s.clone(), k });
    }
    out
}

/// The wall triples (with `1 in S`) coinciding with `wall` that pass through
/// the given base point; exactly the extremal vine loci of the crossing.
pub fn coincident_walls_at(
    g: u32,
    n: u32,
    d: i64,
    wall: &Wall,
    base: &StabilityCondition,
) -> Vec<Wall> {
    walls_through(base)
        .into_iter()
        .filter(|w| walls_coincide(w, wall, g, n, d))
        .collect()
}

/// `beta` from explicit per-vertex data (used on graphs where the
/// polarization is not given by a universal condition, e.g. with an extra
/// marking).
pub fn beta_with_values(
    graph: &MarkedGraph,
    dvals: &[i64],
    phi: &[PerturbedRational],
    set: &VSet,
) -> PerturbedRational {
    let complement = graph.complement(set);
    let cut = graph.edges_between(set, &complement).len() as i64;
    let mut b = PerturbedRational::from_rat(rat(cut, 2));
    for &v in set {
        b += &phi[v];
        b += &PerturbedRational::from_int(-dvals[v]);
    }
    b
}

/// Quasistability of a divisor (`E` empty) from explicit per-vertex data.
pub fn is_quasistable_with_values(
    graph: &MarkedGraph,
    dvals: &[i64],
    phi: &[PerturbedRational],
    v0: usize,
) -> bool {
    let nv = graph.num_vertices();
    for set in graph.connected_subsets() {
        let b = beta_with_values(graph, dvals, phi, &set);
        if b.is_negative() {
            return false;
        }
        if b.is_zero() && set.len() != nv && set.contains(&v0) {
            return false;
        }
    }
    true
}

/// A deterministic point on `wall` (not necessarily generic), varied by the
/// seed; used for point-set sampling of hyperplanes.
pub fn point_on_wall(
    g: u32,
    n: u32,
    d: i64,
    wall: &Wall,
    seed: u64,
) -> Result<StabilityCondition> {
    let mut base = StabilityCondition::zero(g, n, d);
    let prime = 1009i64;
    for (c, (_, val)) in base.x_div.iter_mut().enumerate() {
        let bump = if seed as usize == c + 1 { 1 } else { 0 };
        *val = PerturbedRational::from_rat(rat(2 * c as i64 + 1, 2 * prime) + rat_int(bump));
    }
    let offset = divisorial_keys(g, n).len();
    for (j, val) in base.x_pts.iter_mut().enumerate() {
        let bump = if seed as usize == offset + j + 1 { 1 } else { 0 };
        *val = PerturbedRational::from_rat(rat(3 * j as i64 + 1, prime) + rat_int(bump));
    }
    impose_wall(&mut base, wall)?;
    Ok(base)
}

/// Does the point lie on the hyperplane of `wall`?
pub fn wall_contains(phi: &StabilityCondition, wall: &Wall) -> bool {
    let x = phi.x_of(wall.i, wall.t, &wall.s);
    x.eps.is_zero() && x.base == wall.value()
}

/// Builds a deterministic rational point on `wall` lying on no other
/// non-coincident wall.
pub fn generic_base_point(g: u32, n: u32, d: i64, wall: &Wall) -> Result<StabilityCondition> {
    let mut base = StabilityCondition::zero(g, n, d);
    let prime = 997i64;
    for (c, (_, val)) in base.x_div.iter_mut().enumerate() {
        *val = PerturbedRational::from_rat(rat(2 * c as i64 + 1, 2 * prime));
    }
    for (j, val) in base.x_pts.iter_mut().enumerate() {
        *val = PerturbedRational::from_rat(rat(3 * j as i64 + 1, prime));
    }
    let pinned = impose_wall(&mut base, wall)?;
    // nudge until the only walls through the point coincide with `wall`
    for attempt in 0..2000u64 {
        let bad = walls_through(&base)
            .into_iter()
            .find(|w| !walls_coincide(w, wall, g, n, d));
        match bad {
            None => return Ok(base),
            Some(_) => {
                nudge(&mut base, &pinned, attempt);
                impose_wall(&mut base, wall)?;
            }
        }
    }
    Err(Error::Other("could not find a generic point on the wall".into()))
}

/// Which coordinate was solved to put the point on the wall.
enum Pinned {
    Div,
    Pt(usize),
}

fn impose_wall(base: &mut StabilityCondition, wall: &Wall) -> Result<Pinned> {
    let g = base.g;
    let value = wall.value();
    if wall.t == 1 {
        if !wall.s.contains(&1) {
            return Err(Error::InvalidInput("walls are stored with 1 in S".into()));
        }
        let key = (wall.i, wall.s.clone());
        if !base.x_div.contains_key(&key) {
            return Err(Error::InvalidInput("invalid divisorial wall".into()));
        }
        base.x_div.insert(key, PerturbedRational::from_rat(value));
        return Ok(Pinned::Div);
    }
    let a = 2 * g as i64 - 2 * wall.i as i64 - wall.t as i64;
    let b = 2 * wall.i as i64 - 2 + wall.t as i64;
    // choose the coordinate to solve for
    let (j_solve, coeff) = if a != 0 && wall.s.contains(&1) {
        (1u32, rat_int(a))
    } else if a == 0 {
        let j = (1..=base.n)
            .find(|j| !wall.s.contains(j))
            .ok_or_else(|| Error::InvalidInput("degenerate wall functional".into()))?;
        (j, -rat_int(b))
    } else {
        return Err(Error::InvalidInput("walls are stored with 1 in S".into()));
    };
    // functional: a*sum_S x_j - b*sum_{S^c} x_j = (2g-2)*value - b*d
    let rhs = value * rat_int(2 * g as i64 - 2) - rat_int(b * base.d);
    let mut partial = Rat::zero();
    for j in 1..=base.n {
        if j == j_solve {
            continue;
        }
        let xj = &base.x_pts[(j - 1) as usize].base;
        if wall.s.contains(&j) {
            partial += xj * rat_int(a);
        } else {
            partial -= xj * rat_int(b);
        }
    }
    let solved = (rhs - partial) / coeff;
    base.x_pts[(j_solve - 1) as usize] = PerturbedRational::from_rat(solved);
    Ok(Pinned::Pt((j_solve - 1) as usize))
}

fn nudge(base: &mut StabilityCondition, pinned: &Pinned, attempt: u64) {
    let delta = rat(1, 997 * (attempt as i64 + 2));
    match pinned {
        Pinned::Div => {
            let n = base.x_pts.len();
            if n > 0 {
                let idx = (attempt as usize) % n;
                let old = base.x_pts[idx].clone();
                base.x_pts[idx] = PerturbedRational::from_rat(&old.base + &delta);
            }
        }
        Pinned::Pt(j) => {
            let n = base.x_pts.len();
            let choices: Vec<usize> = (0..n).filter(|idx| idx != j).collect();
            if !choices.is_empty() {
                let idx = choices[(attempt as usize) % choices.len()];
                let old = base.x_pts[idx].clone();
                base.x_pts[idx] = PerturbedRational::from_rat(&old.base + &delta);
            } else {
                // only divisorial coordinates are free; they cannot interfere
                // with t >= 2 walls, so nothing to fix here
            }
        }
    }
}

/// The two nondegenerate polarizations straddling `wall` at `base`:
/// `phi_plus` and `phi_minus` differ from `base` by opposite infinitesimal
/// offsets, oriented so that `x_{i,t,S}` increases on the plus side (which
/// makes every extremal set contain the first marking).
pub fn opposite_pair(
    g: u32,
    n: u32,
    d: i64,
    wall: &Wall,
    base: &StabilityCondition,
) -> Result<(StabilityCondition, StabilityCondition)> {
    if base.g != g || base.n != n || base.d != d {
        return Err(Error::InvalidInput("base point parameters mismatch".into()));
    }
    if base.x_div.values().any(|v| !v.eps.is_zero()) || base.x_pts.iter().any(|v| !v.eps.is_zero())
    {
        return Err(Error::InvalidInput("base point must have no eps component".into()));
    }
    let wall_x = base.x_of(wall.i, wall.t, &wall.s);
    if wall_x.base != wall.value() {
        return Err(Error::InvalidInput("base point does not lie on the wall".into()));
    }
    if let Some(w) = walls_through(base)
        .into_iter()
        .find(|w| !walls_coincide(w, wall, g, n, d))
    {
        return Err(Error::NotGenericWallPoint(format!("{w:?}")));
    }
    let mut plus = base.clone();
    let mut minus = base.clone();
    if wall.t == 1 {
        let key = (wall.i, wall.s.clone());
        plus.x_div.get_mut(&key).unwrap().eps = Rat::one();
        minus.x_div.get_mut(&key).unwrap().eps = -Rat::one();
    } else {
        let a = 2 * g as i64 - 2 * wall.i as i64 - wall.t as i64;
        let b = 2 * wall.i as i64 - 2 + wall.t as i64;
        if a != 0 {
            let step = rat(2 * g as i64 - 2, a);
            plus.x_pts[0].eps = step.clone();
            minus.x_pts[0].eps = -step;
        } else {
            let j = (1..=n).find(|j| !wall.s.contains(j)).expect("S^c nonempty when a = 0");
            let step = rat(2 * g as i64 - 2, b);
            plus.x_pts[(j - 1) as usize].eps = -step.clone();
            minus.x_pts[(j - 1) as usize].eps = step;
        }
    }
    debug_assert!(
        plus.x_of(wall.i, wall.t, &wall.s).eps.is_positive(),
        "plus side must increase the wall coordinate"
    );
    Ok((plus, minus))
}

// ---- stabilized-canonical polarization ---------------------------------------

/// Vertexwise values of the degree-`d` stabilized-canonical polarization
/// `(d / (2g-2)) * K^s`, which vanishes on rational tails.
pub fn scan_polarization(graph: &MarkedGraph, d: i64) -> Result<Vec<Rat>> {
    let g = graph.genus_total();
    if g <= 1 {
        return Err(Error::InvalidInput("stabilized-canonical needs g >= 2".into()));
    }
    let nv = graph.num_vertices();
    // union of all rational tails: connected genus-0 subsets attached by one edge
    let mut tail: VSet = VSet::new();
    for set in graph.connected_subsets() {
        if set.len() == nv {
            continue;
        }
        let genus = graph.induced_genus(&set).expect("connected");
        let cut = graph.edges_between(&set, &graph.complement(&set)).len();
        if genus == 0 && cut == 1 {
            tail.extend(set.iter().copied());
        }
    }
    let mut ks = vec![0i64; nv];
    for v in 0..nv {
        if tail.contains(&v) {
            continue;
        }
        let mut val = 0i64;
        for &(a, b) in graph.edges() {
            if a == v && b == v {
                val += 2;
            } else if a == v && !tail.contains(&b) {
                val += 1;
            } else if b == v && !tail.contains(&a) {
                val += 1;
            }
        }
        ks[v] = 2 * graph.vertex(v).genus as i64 - 2 + val;
    }
    debug_assert_eq!(ks.iter().sum::<i64>(), 2 * g as i64 - 2);
    let scale = rat(d, 2 * g as i64 - 2);
    Ok(ks.iter().map(|&k| rat_int(k) * &scale).collect())
}

// ---- Brill-Noether closure regime ---------------------------------------------

/// Decides whether the Thom-Porteous class equals the closure of its
/// restriction to smooth curves for this polarization; returns the verdict
/// and a case label.
pub fn bn_closure_regime(d: i64, phi: &StabilityCondition) -> Result<(bool, &'static str)> {
    let g = phi.g as i64;
    if d >= g {
        return Err(Error::InvalidInput("classifier requires d < g".into()));
    }
    if phi.is_degenerate() {
        return Err(Error::InvalidInput(
            "classifier requires a nondegenerate polarization".into(),
        ));
    }
    if d > 0 && d <= g - 3 {
        return Ok((false, "never"));
    }
    let in_open = |x: &PerturbedRational, lo: Rat, hi: Rat| -> bool {
        *x > PerturbedRational::from_rat(lo) && *x < PerturbedRational::from_rat(hi)
    };
    // Each boundary-divisor class is tested once, through its canonical
    // (1 in S) description. When one side is a rational tail the widened
    // genus-zero interval applies to that side and overrides the generic
    // bound (otherwise the generic bound would make it dead text).
    let div_ok = |i1: i64, i2: i64, x: &PerturbedRational, co: &PerturbedRational| -> bool {
        if d == g - 1 {
            let j = rat_int(i1);
            return in_open(x, &j - rat(3, 2), &j + rat(1, 2));
        }
        if d < 0 {
            return in_open(x, rat_int(d) - rat(1, 2), rat(1, 2));
        }
        let zero_side = |y: &PerturbedRational| in_open(y, rat(-3, 2), rat(1, 2));
        if d == g - 2 {
            if i1 == 0 {
                zero_side(x)
            } else if i2 == 0 {
                zero_side(co)
            } else {
                let j = rat_int(i1);
                in_open(x, &j - rat(3, 2), &j - rat(1, 2))
            }
        } else {
            // d == 0
            if i1 == 0 {
                zero_side(x)
            } else if i2 == 0 {
                zero_side(co)
            } else {
                in_open(x, rat(-1, 2), rat(1, 2))
            }
        }
    };
    let vine_ok = |i1: i64, x: &PerturbedRational| -> bool {
        if d == g - 1 {
            true
        } else if d == g - 2 && d > 0 {
            let j = rat_int(i1);
            in_open(x, &j - rat_int(2), &j + rat_int(1))
        } else {
            // d <= 0: the shared interior condition d-1 < x < 1
            in_open(x, rat_int(d - 1), Rat::one())
        }
    };
    for triple in canonical_triples(phi.g, phi.n) {
        let x = phi.x_of(triple.i, triple.t, &triple.s);
        let co = PerturbedRational::from_int(d) - x.clone();
        let co_genus = triple.second_genus(phi.g) as i64;
        if triple.t == 1 {
            if !div_ok(triple.i as i64, co_genus, &x, &co) {
                return Ok((false, case_label(d, g)));
            }
        } else if !vine_ok(triple.i as i64, &x) {
            return Ok((false, case_label(d, g)));
        }
    }
    Ok((true, case_label(d, g)))
}

fn case_label(d: i64, g: i64) -> &'static str {
    if d == g - 1 {
        "d=g-1"
    } else if d == g - 2 && d > 0 {
        "d=g-2"
    } else if d < 0 {
        "d<0"
    } else if d == 0 {
        "d=0"
    } else {
        "d=g-2"
    }
}

// ---- JSON ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct StabilityJson {
    pub g: u32,
    pub n: u32,
    pub d: i64,
    pub x_div: Vec<XDivJson>,
    pub x_pts: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x_pts_eps: Vec<String>,
}

#[derive(Serialize, Deserialize)]
pub struct XDivJson {
    pub i: u32,
    #[serde(rename = "S")]
    pub s: Vec<u32>,
    pub val: String,
    pub eps: String,
}

impl StabilityCondition {
    pub fn to_json(&self) -> StabilityJson {
        let x_pts_eps: Vec<String> = if self.x_pts.iter().all(|x| x.eps.is_zero()) {
            Vec::new()
        } else {
            self.x_pts.iter().map(|x| rat_to_string(&x.eps)).collect()
        };
        StabilityJson {
            g: self.g,
            n: self.n,
            d: self.d,
            x_div: self
                .x_div
                .iter()
                .map(|((i, s), v)| XDivJson {
                    i: *i,
                    s: s.iter().copied().collect(),
                    val: rat_to_string(&v.base),
                    eps: rat_to_string(&v.eps),
                })
                .collect(),
            x_pts: self.x_pts.iter().map(|x| rat_to_string(&x.base)).collect(),
            x_pts_eps,
        }
    }

    pub fn from_json(json: &StabilityJson) -> Result<Self> {
        let mut cond = StabilityCondition::zero(json.g, json.n, json.d);
        for entry in &json.x_div {
            let key = (entry.i, entry.s.iter().copied().collect::<BTreeSet<u32>>());
            if !cond.x_div.contains_key(&key) {
                return Err(Error::InvalidInput(format!("unknown coordinate {key:?}")));
            }
            let base = rat_from_str(&entry.val)
                .ok_or_else(|| Error::InvalidInput(format!("bad rational {}", entry.val)))?;
            let eps = rat_from_str(&entry.eps)
                .ok_or_else(|| Error::InvalidInput(format!("bad rational {}", entry.eps)))?;
            cond.x_div.insert(key, PerturbedRational::new(base, eps));
        }
        for (j, s) in json.x_pts.iter().enumerate() {
            let base =
                rat_from_str(s).ok_or_else(|| Error::InvalidInput(format!("bad rational {s}")))?;
            let eps = match json.x_pts_eps.get(j) {
                Some(e) => rat_from_str(e)
                    .ok_or_else(|| Error::InvalidInput(format!("bad rational {e}")))?,
                None => Rat::zero(),
            };
            cond.x_pts[j] = PerturbedRational::new(base, eps);
        }
        Ok(cond)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{enumerate_stable_graphs, trivial_graph, Vertex};

    fn set(v: &[u32]) -> BTreeSet<u32> {
        v.iter().copied().collect()
    }

    fn sample_condition(g: u32, n: u32, d: i64) -> StabilityCondition {
        let mut phi = StabilityCondition::zero(g, n, d);
        for (c, (_, val)) in phi.x_div.iter_mut().enumerate() {
            *val = PerturbedRational::from_rat(rat(2 * c as i64 + 1, 206));
        }
        for (j, val) in phi.x_pts.iter_mut().enumerate() {
            *val = PerturbedRational::from_rat(rat(3 * j as i64 + 1, 103));
        }
        assert!(!phi.is_degenerate());
        phi
    }

    #[test]
    fn phi_total_is_degree() {
        let phi = sample_condition(3, 2, 1);
        for graph in enumerate_stable_graphs(3, 2, 2).unwrap() {
            let all: VSet = (0..graph.num_vertices()).collect();
            assert_eq!(phi.phi_set(&graph, &all), PerturbedRational::from_int(1));
            for sub in graph.connected_subsets() {
                if sub.len() == graph.num_vertices() {
                    continue;
                }
                let co = graph.complement(&sub);
                let total = phi.phi_set(&graph, &sub) + phi.phi_set(&graph, &co);
                assert_eq!(total, PerturbedRational::from_int(1));
            }
        }
    }

    #[test]
    fn phi_on_vine_is_coordinate() {
        let phi = sample_condition(3, 1, 2);
        let vine = VineTriple::new(3, 1, 1, 1, set(&[1])).unwrap().to_graph(3, 1).unwrap();
        let v1 = vine.leg_vertex(1);
        let value = phi.phi_set(&vine, &[v1].into_iter().collect());
        assert_eq!(value, phi.x_div[&(1, set(&[1]))]);
    }

    #[test]
    fn changeofcoord_complementarity() {
        let phi = sample_condition(4, 3, 2);
        for triple in canonical_triples(4, 3) {
            if triple.t < 2 {
                continue;
            }
            let x = phi.x_of(triple.i, triple.t, &triple.s);
            let sc: BTreeSet<u32> = (1..=3).filter(|l| !triple.s.contains(l)).collect();
            let co = phi.x_of(triple.second_genus(4), triple.t, &sc);
            assert_eq!(x + co, PerturbedRational::from_int(2));
        }
    }

    #[test]
    fn trivial_divisor_is_stable() {
        let graph = trivial_graph(2, 1).unwrap();
        let phi = sample_condition(2, 1, 1);
        let pd = Pseudodivisor::divisor(vec![1]);
        assert!(is_stable(&graph, &pd, &phi));
        assert!(is_semistable(&graph, &pd, &phi));
    }

    #[test]
    fn vine_semistable_not_stable_on_wall() {
        // even t: integer coordinate values are degenerate
        let g = 3u32;
        let mut phi = StabilityCondition::zero(g, 1, 0);
        // x_{1,2,{1}} = (a x_1 + b(d - 0))/(2g-2) with a = b = 2: x_1 = 2 puts it at 1
        phi.x_pts[0] = PerturbedRational::from_int(2);
        let vine = VineTriple::new(g, 1, 1, 2, set(&[1])).unwrap().to_graph(g, 1).unwrap();
        let v1 = vine.leg_vertex(1);
        let x = phi.x_of(1, 2, &set(&[1]));
        assert_eq!(x, PerturbedRational::from_int(1));
        // beta(v1) = -D(v1) + x + t/2 = 0 for D(v1) = 2
        let mut vals = vec![0i64; 2];
        vals[v1] = 2;
        vals[1 - v1] = -2;
        let pd = Pseudodivisor::divisor(vals);
        assert!(is_semistable(&vine, &pd, &phi));
        assert!(!is_stable(&vine, &pd, &phi));
    }

    #[test]
    fn pruned_matches_unpruned_oracle() {
        let phi = sample_condition(2, 1, 1);
        for graph in enumerate_stable_graphs(2, 1, 2).unwrap() {
            let nv = graph.num_vertices();
            let mut stack = vec![vec![]];
            for _ in 0..nv {
                let mut next = Vec::new();
                for partial in &stack {
                    for v in -2..=2i64 {
                        let mut q: Vec<i64> = partial.clone();
                        q.push(v);
                        next.push(q);
                    }
                }
                stack = next;
            }
            for values in stack {
                if values.iter().sum::<i64>() != 1 {
                    continue;
                }
                let pd = Pseudodivisor::divisor(values);
                assert_eq!(
                    is_semistable(&graph, &pd, &phi),
                    is_semistable_unpruned(&graph, &pd, &phi)
                );
                assert_eq!(is_stable(&graph, &pd, &phi), is_stable_unpruned(&graph, &pd, &phi));
                assert_eq!(
                    is_quasistable(&graph, &pd, &phi, graph.leg_vertex(1)),
                    is_quasistable_unpruned(&graph, &pd, &phi, graph.leg_vertex(1))
                );
            }
        }
    }

    #[test]
    fn quasistable_implies_simple() {
        let phi = sample_condition(2, 1, 1);
        for graph in enumerate_stable_graphs(2, 1, 2).unwrap() {
            let ne = graph.num_edges();
            for mask in 0u64..(1 << ne) {
                let edges: BTreeSet<usize> = (0..ne).filter(|&e| mask >> e & 1 == 1).collect();
                let nv = graph.num_vertices();
                let mut stack = vec![vec![]];
                for _ in 0..nv {
                    let mut next = Vec::new();
                    for partial in &stack {
                        for v in -2..=2i64 {
                            let mut q: Vec<i64> = partial.clone();
                            q.push(v);
                            next.push(q);
                        }
                    }
                    stack = next;
                }
                for values in stack {
                    let pd = Pseudodivisor { edges: edges.clone(), values };
                    if pd.total_degree() != 1 {
                        continue;
                    }
                    if is_quasistable(&graph, &pd, &phi, graph.leg_vertex(1)) {
                        assert!(pd.is_simple(&graph));
                    }
                }
            }
        }
    }

    #[test]
    fn degeneracy_matches_strict_semistability_gap() {
        // a universal phi is degenerate iff some graph carries a semistable
        // pseudodivisor that is not stable; per graph, a strict-semistability
        // gap forces the defining quantity to be integral on some subset
        let g = 2u32;
        for num in -6..=6i64 {
            let mut phi = StabilityCondition::zero(g, 1, 0);
            phi.x_pts[0] = PerturbedRational::from_rat(rat(num, 2));
            let mut witness = false;
            for graph in enumerate_stable_graphs(g, 1, 2).unwrap() {
                let nv = graph.num_vertices();
                let phi_vals = phi.vertex_values(&graph);
                let mut graph_degenerate = false;
                for mask in 1u64..(1 << nv) - 1 {
                    let setv: VSet = (0..nv).filter(|&v| mask >> v & 1 == 1).collect();
                    let cut = graph.edges_between(&setv, &graph.complement(&setv)).len() as i64;
                    let mut q = PerturbedRational::from_rat(rat(cut, 2));
                    for &v in &setv {
                        q += &phi_vals[v];
                    }
                    if q.is_integer() {
                        graph_degenerate = true;
                    }
                }
                let mut graph_gap = false;
                let ne = graph.num_edges();
                for mask in 0u64..(1 << ne) {
                    let edges: BTreeSet<usize> = (0..ne).filter(|&e| mask >> e & 1 == 1).collect();
                    let mut stack = vec![vec![]];
                    for _ in 0..nv {
                        let mut next = Vec::new();
                        for partial in &stack {
                            for v in -4..=4i64 {
                                let mut q: Vec<i64> = partial.clone();
                                q.push(v);
                                next.push(q);
                            }
                        }
                        stack = next;
                    }
                    for values in stack {
                        let pd = Pseudodivisor { edges: edges.clone(), values };
                        if pd.total_degree() != 0 {
                            continue;
                        }
                        if is_semistable(&graph, &pd, &phi) && !is_stable(&graph, &pd, &phi) {
                            graph_gap = true;
                        }
                    }
                }
                // gap on a graph implies degeneracy on that graph
                assert!(
                    !graph_gap || graph_degenerate,
                    "x_1 = {num}/2, graph {:?}",
                    graph.raw_key()
                );
                witness |= graph_gap;
            }
            assert_eq!(phi.is_degenerate(), witness, "x_1 = {num}/2");
        }
    }

    #[test]
    fn wall_values_follow_parity() {
        let w_even = Wall::new(3, 1, 1, 2, set(&[1]), 1).unwrap();
        assert_eq!(w_even.value(), rat_int(1));
        let w_odd = Wall::new(3, 1, 1, 1, set(&[1]), 1).unwrap();
        assert_eq!(w_odd.value(), rat(3, 2));
    }

    #[test]
    fn walls_in_window_divisorial_count() {
        let window = Window::uniform(2, 1, rat_int(-2), rat_int(2));
        let groups = walls_in_window(2, 1, 1, &window);
        let divisorial: Vec<&Wall> = groups
            .iter()
            .flat_map(|g| g.walls.iter())
            .filter(|w| w.t == 1)
            .collect();
        // x_{1,1,{1}} in [-2,2]: k+1/2 for k in {-2,-1,0,1}
        assert_eq!(divisorial.len(), 4);
        let empty = Window::uniform(2, 1, rat_int(2), rat_int(-2));
        assert!(walls_in_window(2, 1, 1, &empty).is_empty());
    }

    #[test]
    fn central_wall_coincidence_family() {
        // d = 0, S = [n]: H(i,t,[n];k) coincide when i + ceil(t/2) + k = g
        let (g, n, d) = (3u32, 1u32, 0i64);
        let mut central: Vec<Wall> = Vec::new();
        for t in 2..=(g + 1) {
            for i in 0..=(g + 1 - t) {
                if VineTriple::new(g, n, i, t, set(&[1])).is_err() {
                    continue;
                }
                let ceil_half = (t + 1) / 2;
                if i + ceil_half > g {
                    continue;
                }
                let k = (g - i - ceil_half) as i64;
                central.push(Wall { i, t, s: set(&[1]), k });
            }
        }
        assert!(central.len() >= 2);
        for a in &central {
            for b in &central {
                assert!(walls_coincide(a, b, g, n, d), "{a:?} vs {b:?}");
            }
        }
        let other = Wall { k: central[0].k + 1, ..central[0].clone() };
        assert!(!walls_coincide(&other, &central[1], g, n, d));
    }

    #[test]
    fn distinct_subsets_never_coincide() {
        let (g, n, d) = (3u32, 2u32, 1i64);
        let w1 = Wall::new(g, n, 1, 2, set(&[1]), 0).unwrap();
        let w2 = Wall::new(g, n, 1, 2, set(&[1, 2]), 0).unwrap();
        assert!(!walls_coincide(&w1, &w2, g, n, d));
        let w3 = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let w4 = Wall::new(g, n, 1, 1, set(&[1]), 1).unwrap();
        let w5 = Wall::new(g, n, 2, 1, set(&[1]), 0).unwrap();
        assert!(!walls_coincide(&w3, &w4, g, n, d));
        assert!(!walls_coincide(&w3, &w5, g, n, d));
        assert!(!walls_coincide(&w3, &w1, g, n, d));
    }

    #[test]
    fn goodwall_coincidence_forces_2i_plus_t() {
        let (g, n, d) = (4u32, 2u32, 1i64);
        let window = Window::uniform(g, n, rat_int(-3), rat_int(3));
        for group in walls_in_window(g, n, d, &window) {
            for a in &group.walls {
                for b in &group.walls {
                    assert_eq!(a.s, b.s, "coinciding walls share S");
                    if a.s.len() < n as usize && a.t >= 2 && b.t >= 2 {
                        assert_eq!(2 * a.i + a.t, 2 * b.i + b.t);
                    }
                }
            }
        }
    }

    #[test]
    fn opposite_pair_straddles_wall() {
        let (g, n, d) = (2u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let base = generic_base_point(g, n, d, &wall).unwrap();
        let (plus, minus) = opposite_pair(g, n, d, &wall, &base).unwrap();
        let xp = plus.x_of(1, 1, &set(&[1]));
        let xm = minus.x_of(1, 1, &set(&[1]));
        assert!(xp > xm);
        assert_eq!(xp.base, rat(1, 2));
        assert!(!plus.is_degenerate());
        assert!(!minus.is_degenerate());
        // on the wall, the vine divisor (k+1, d-k-1) is semistable but not stable
        let vine = VineTriple::new(g, n, 1, 1, set(&[1])).unwrap().to_graph(g, n).unwrap();
        let v1 = vine.leg_vertex(1);
        let mut vals = vec![0i64; 2];
        vals[v1] = 1;
        vals[1 - v1] = 0;
        let pd = Pseudodivisor::divisor(vals);
        assert!(is_semistable(&vine, &pd, &base));
        assert!(!is_stable(&vine, &pd, &base));
        assert!(is_stable(&vine, &pd, &plus));
        assert!(!is_semistable(&vine, &pd, &minus));
    }

    #[test]
    fn opposite_pair_rejects_nongeneric_points() {
        let (g, n, d) = (2u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let mut base = generic_base_point(g, n, d, &wall).unwrap();
        // force x_1 onto the central wall x_{0,2,{1}} = 1
        base.x_pts[0] = PerturbedRational::from_int(1);
        assert!(matches!(
            opposite_pair(g, n, d, &wall, &base),
            Err(Error::NotGenericWallPoint(_))
        ));
    }

    #[test]
    fn scan_polarization_examples() {
        let trivial = trivial_graph(2, 1).unwrap();
        assert_eq!(scan_polarization(&trivial, 5).unwrap(), vec![rat_int(5)]);

        // two genus-1 vertices with 2 connecting edges: g = 3, K^s = (2,2)
        let banana = MarkedGraph::new(
            vec![
                Vertex { genus: 1, legs: set(&[1]) },
                Vertex { genus: 1, legs: set(&[]) },
            ],
            vec![(0, 1), (0, 1)],
            1,
        )
        .unwrap();
        assert_eq!(scan_polarization(&banana, 4).unwrap(), vec![rat_int(2), rat_int(2)]);

        // rational tail: genus-2 vertex attached to a genus-0 vertex with 2 legs
        let tail = MarkedGraph::new(
            vec![
                Vertex { genus: 2, legs: set(&[1]) },
                Vertex { genus: 0, legs: set(&[2, 3]) },
            ],
            vec![(0, 1)],
            3,
        )
        .unwrap();
        let vals = scan_polarization(&tail, 3).unwrap();
        assert_eq!(vals[1], Rat::zero());
        assert_eq!(vals[0], rat_int(3));
        assert!(scan_polarization(&trivial_graph(1, 1).unwrap(), 0).is_err());
    }

    #[test]
    fn bn_regime_cases() {
        // d = g-1 at g=2, n=1: the only divisorial coordinate is x_{1,1,{1}}
        let mut phi = sample_condition(2, 1, 1);
        phi.x_div.insert((1, set(&[1])), PerturbedRational::from_rat(rat(1, 7)));
        phi.x_pts[0] = PerturbedRational::from_rat(rat(1, 7));
        let (ok, label) = bn_closure_regime(1, &phi).unwrap();
        assert!(ok);
        assert_eq!(label, "d=g-1");
        phi.x_div.insert((1, set(&[1])), PerturbedRational::from_rat(rat(7, 4)));
        let (ok, _) = bn_closure_regime(1, &phi).unwrap();
        assert!(!ok);

        // never for 0 < d <= g-3
        let phi6 = sample_condition(6, 1, 1);
        let (ok, label) = bn_closure_regime(1, &phi6).unwrap();
        assert!(!ok);
        assert_eq!(label, "never");

        // d < 0: a coordinate at the boundary value 1 is outside
        let mut phin = sample_condition(3, 1, -1);
        phin.x_div.insert((1, set(&[1])), PerturbedRational::from_int(1));
        phin.x_pts[0] = PerturbedRational::from_rat(rat(1, 9));
        if !phin.is_degenerate() {
            let (ok, _) = bn_closure_regime(-1, &phin).unwrap();
            assert!(!ok);
        }
    }

    #[test]
    fn stability_json_roundtrip() {
        let (g, n, d) = (2u32, 1u32, 0i64);
        let wall = Wall::new(g, n, 0, 2, set(&[1]), 1).unwrap();
        let base = generic_base_point(g, n, d, &wall).unwrap();
        let (plus, _) = opposite_pair(g, n, d, &wall, &base).unwrap();
        let json = plus.to_json();
        let text = serde_json::to_string(&json).unwrap();
        let parsed: StabilityJson = serde_json::from_str(&text).unwrap();
        let back = StabilityCondition::from_json(&parsed).unwrap();
        assert_eq!(back, plus);
    }
}

//! The formal algebra of decorated boundary strata and the wall-crossing
//! coefficient engines.
//!
//! Three routes to the wall-crossing term are implemented: the formula on
//! the resolution (a sum over resolved strata with a full forest, carrying
//! exceptional psi-classes), its pushforward to the plus-side compactified
//! Jacobian through the psi-monomial pushforward polynomial, and the closed
//! coefficient formula on the base. The agreement of the last two routes is
//! the binding consistency check for every typographically delicate
//! coefficient.

use crate::blowup::{
    aut_order_pair, aut_order_triple, extremal_vine_strata, TildeObject, VineStratum,
};
use crate::extremal::{ext_poset, full_forests, FullForest};
use crate::graphs::{
    contractions_to, enumerate_stable_graphs, GraphJson, GraphMorphism, MarkedGraph, VSet,
};
use crate::num::{binom, compositions, rat_from_str, rat_int, rat_to_string, Rat};
use crate::stability::{
    generic_base_point, opposite_pair, stable_divisors, Pseudodivisor, StabilityCondition, Wall,
};
use crate::{Error, Result};
use itertools::Itertools;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

// ---- formal Chern factors -----------------------------------------------------

/// Which derived-pushforward symbol a Chern factor refers to. The plain
/// variants live on the resolution, the `Plus` variants on the plus-side
/// Jacobian; `FV`/`HV` carry the forest element they are attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChernKind {
    #[serde(rename = "FX")]
    Fx,
    #[serde(rename = "FV")]
    Fv,
    #[serde(rename = "HV")]
    Hv,
    #[serde(rename = "FXplus")]
    FxPlus,
    #[serde(rename = "FVplus")]
    FvPlus,
    #[serde(rename = "HVplus")]
    HvPlus,
    /// the ambient derived pushforward (component-basis expansions only)
    #[serde(rename = "F")]
    Ftot,
    /// the derived pushforward of the restriction to the components in the
    /// attached vertex set (component-basis expansions only)
    #[serde(rename = "B")]
    Bu,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ChernFactor {
    pub kind: ChernKind,
    /// forest element for the `FV`/`HV` kinds
    pub subset: Option<VSet>,
    pub degree: u32,
}

/// Virtual rank of `F_V = -Rpi_*(L|_{Y_V})`: `g(V^c) - 1 - D(V^c)`.
pub fn rank_fv(graph: &MarkedGraph, divisor: &Pseudodivisor, set: &VSet) -> i64 {
    let complement = graph.complement(set);
    let genus = graph.induced_genus(&complement).expect("connected complement") as i64;
    genus - 1 - divisor.degree_on(&complement)
}

/// Virtual rank of `H_V = F_V` minus the `F` of the covers of `V` in the
/// forest.
pub fn rank_hv(
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    forest: &FullForest,
    idx: usize,
) -> i64 {
    let mut r = rank_fv(graph, divisor, &forest.sets[idx]);
    for j in forest.covers_of(idx) {
        r -= rank_fv(graph, divisor, &forest.sets[j]);
    }
    r
}

/// Virtual rank of `F^X`: the first-marking component with its boundary
/// points twisted away.
pub fn rank_fx(graph: &MarkedGraph, divisor: &Pseudodivisor) -> i64 {
    let v1 = graph.leg_vertex(1);
    let single: VSet = [v1].into_iter().collect();
    let genus = graph.induced_genus(&single).expect("single vertex") as i64;
    let cut = graph.edges_between(&single, &graph.complement(&single)).len() as i64;
    genus + cut - 1 - divisor.values[v1]
}

// ---- decorated strata terms ------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExprKind {
    /// strata of the plus-side Jacobian; psi exponents indexed by edges
    Base,
    /// resolved strata; psi exponents indexed by forest elements
    Resolved,
}

/// One decorated boundary stratum with a rational coefficient, stored in a
/// canonical labeling so that equal keys mean equal decorated strata.
#[derive(Clone, Debug)]
pub struct StrataTerm {
    pub graph: MarkedGraph,
    pub divisor: Pseudodivisor,
    pub forest: Vec<VSet>,
    /// edge index -> exponent (base) or forest index -> exponent (resolved)
    pub psi: BTreeMap<usize, u32>,
    pub chern: Vec<ChernFactor>,
    pub coeff: Rat,
    /// |Aut(G,D)| for base terms, |Aut(G,D,forest)| for resolved terms
    pub aut: u64,
}

impl StrataTerm {
    pub fn key(&self) -> String {
        term_key(&self.graph, &self.divisor, &self.forest, &self.psi, &self.chern)
    }

    pub fn total_degree(&self, kind: ExprKind) -> u32 {
        let codim = match kind {
            ExprKind::Base => self.graph.num_edges() as u32,
            ExprKind::Resolved => self.forest.len() as u32,
        };
        codim + self.psi.values().sum::<u32>() + self.chern.iter().map(|c| c.degree).sum::<u32>()
    }
}

fn term_key(
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    forest: &[VSet],
    psi: &BTreeMap<usize, u32>,
    chern: &[ChernFactor],
) -> String {
    let chern_str = chern
        .iter()
        .map(|c| {
            format!(
                "{:?}{}^{}",
                c.kind,
                c.subset.as_ref().map(|s| format!("({})", s.iter().join("."))).unwrap_or_default(),
                c.degree
            )
        })
        .join(",");
    format!(
        "{};D[{}];F[{}];psi[{}];c[{}]",
        graph.raw_key(),
        divisor.values.iter().join(","),
        forest.iter().map(|s| s.iter().join(".")).join("|"),
        psi.iter().map(|(i, e)| format!("{i}:{e}")).join(","),
        chern_str
    )
}

/// Canonicalizes a decorated term: relabels by the best canonical order of
/// the colored graph, transporting the forest, psi exponents and Chern
/// subsets; base psi exponents re-sort parallel edges.
#[allow(clippy::too_many_arguments)]
fn canonical_term(
    kind: ExprKind,
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    forest_sets: &[VSet],
    psi_edges: &BTreeMap<usize, u32>,
    psi_forest: &BTreeMap<VSet, u32>,
    chern_raw: &[(ChernKind, Option<VSet>, u32)],
    coeff: Rat,
) -> StrataTerm {
    let colors: Vec<Vec<i64>> = divisor.values.iter().map(|&v| vec![v]).collect();
    let orders = graph.canonical_orders(&colors);
    let mut best: Option<(String, StrataTerm)> = None;
    for order in orders {
        let (cg, vmap, emap) = graph.relabel(&order);
        let mut values = vec![0i64; graph.num_vertices()];
        for v in 0..graph.num_vertices() {
            values[vmap[v]] = divisor.values[v];
        }
        let mut fsets: Vec<VSet> = forest_sets
            .iter()
            .map(|s| s.iter().map(|&v| vmap[v]).collect::<VSet>())
            .collect();
        fsets.sort_by_key(|s| (s.len(), s.iter().copied().collect::<Vec<_>>()));
        let psi = match kind {
            ExprKind::Base => {
                let mut edge_items: Vec<((usize, usize), u32)> =
                    cg.edges().iter().map(|&(u, v)| ((u, v), 0u32)).collect();
                for (&old_e, &exp) in psi_edges {
                    edge_items[emap[old_e]].1 = exp;
                }
                edge_items.sort();
                edge_items
                    .iter()
                    .enumerate()
                    .filter(|(_, &(_, exp))| exp > 0)
                    .map(|(i, &(_, exp))| (i, exp))
                    .collect()
            }
            ExprKind::Resolved => {
                let mut map = BTreeMap::new();
                for (setv, &exp) in psi_forest {
                    if exp == 0 {
                        continue;
                    }
                    let mapped: VSet = setv.iter().map(|&v| vmap[v]).collect();
                    let idx = fsets.iter().position(|s| *s == mapped).expect("forest element");
                    map.insert(idx, exp);
                }
                map
            }
        };
        let mut chern: Vec<ChernFactor> = chern_raw
            .iter()
            .filter(|(_, _, deg)| *deg > 0)
            .map(|(k, subset, deg)| ChernFactor {
                kind: *k,
                subset: subset.as_ref().map(|s| s.iter().map(|&v| vmap[v]).collect::<VSet>()),
                degree: *deg,
            })
            .collect();
        chern.sort();
        let term = StrataTerm {
            graph: cg,
            divisor: Pseudodivisor::divisor(values),
            forest: fsets,
            psi,
            chern,
            coeff: coeff.clone(),
            aut: 0,
        };
        let key = term.key();
        if best.as_ref().map(|(k, _)| key < *k).unwrap_or(true) {
            best = Some((key, term));
        }
    }
    best.expect("at least one order").1
}

/// A formal rational linear combination of decorated strata, all of one
/// homogeneous degree, with canonically sorted terms.
#[derive(Clone, Debug)]
pub struct StrataClassExpr {
    pub kind: ExprKind,
    pub g: u32,
    pub n: u32,
    pub d: i64,
    pub wall: Wall,
    pub degree: u32,
    pub terms: BTreeMap<String, StrataTerm>,
}

impl StrataClassExpr {
    pub fn new(kind: ExprKind, g: u32, n: u32, d: i64, wall: Wall) -> Self {
        let degree = (g as i64 - d).max(0) as u32;
        StrataClassExpr { kind, g, n, d, wall, degree, terms: BTreeMap::new() }
    }

    #[allow(clippy::too_many_arguments)]
    fn add_term(
        &mut self,
        graph: &MarkedGraph,
        divisor: &Pseudodivisor,
        forest_sets: &[VSet],
        psi_edges: &BTreeMap<usize, u32>,
        psi_forest: &BTreeMap<VSet, u32>,
        chern_raw: &[(ChernKind, Option<VSet>, u32)],
        coeff: Rat,
    ) {
        if coeff.is_zero() {
            return;
        }
        let mut term = canonical_term(
            self.kind, graph, divisor, forest_sets, psi_edges, psi_forest, chern_raw, coeff,
        );
        debug_assert_eq!(term.total_degree(self.kind), self.degree, "inhomogeneous term");
        term.aut = match self.kind {
            ExprKind::Base => aut_order_pair(&term.graph, &term.divisor),
            ExprKind::Resolved => aut_order_triple(&term.graph, &term.divisor, &term.forest),
        };
        let key = term.key();
        match self.terms.get_mut(&key) {
            Some(existing) => {
                existing.coeff += term.coeff;
                if existing.coeff.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, term);
            }
        }
    }

    /// Public builder for expected expressions in tests and verification
    /// suites (base kind: psi exponents are indexed by edges).
    pub fn add_term_raw(
        &mut self,
        graph: &MarkedGraph,
        divisor: &Pseudodivisor,
        forest_sets: &[VSet],
        psi_edges: &BTreeMap<usize, u32>,
        chern_raw: &[(ChernKind, Option<VSet>, u32)],
        coeff: Rat,
    ) {
        assert_eq!(self.kind, ExprKind::Base);
        self.add_term(graph, divisor, forest_sets, psi_edges, &BTreeMap::new(), chern_raw, coeff);
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact equality of formal expressions.
    pub fn equals(&self, other: &StrataClassExpr) -> bool {
        self.kind == other.kind
            && self.terms.len() == other.terms.len()
            && self
                .terms
                .iter()
                .all(|(k, t)| other.terms.get(k).map(|o| o.coeff == t.coeff).unwrap_or(false))
    }

    /// Human-readable differences, for diagnostics.
    pub fn diff(&self, other: &StrataClassExpr) -> Vec<String> {
        let mut out = Vec::new();
        for (k, t) in &self.terms {
            match other.terms.get(k) {
                None => out.push(format!("only left: {k} with {}", rat_to_string(&t.coeff))),
                Some(o) if o.coeff != t.coeff => out.push(format!(
                    "coeff mismatch at {k}: {} vs {}",
                    rat_to_string(&t.coeff),
                    rat_to_string(&o.coeff)
                )),
                _ => {}
            }
        }
        for k in other.terms.keys() {
            if !self.terms.contains_key(k) {
                out.push(format!("only right: {k} with {}", rat_to_string(&other.terms[k].coeff)));
            }
        }
        out
    }
}

// ---- coefficient b ------------------------------------------------------------------

/// The per-element coefficient of the resolved formula:
/// `-binom(k_V + g_V - d_V - sum over forest elements above V (inclusive)
/// of (j + k + 1), k_V + 1)`, with `(g_V, d_V)` the genus and degree of the
/// complementary side.
pub fn coeff_b(
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    forest: &FullForest,
    idx: usize,
    j: &BTreeMap<usize, u32>,
    k: &BTreeMap<usize, u32>,
) -> i128 {
    let set = &forest.sets[idx];
    let complement = graph.complement(set);
    let g_v = graph.induced_genus(&complement).expect("connected complement") as i64;
    let d_v = divisor.degree_on(&complement);
    let k_v = *k.get(&idx).unwrap_or(&0) as i64;
    let mut top = k_v + g_v - d_v;
    let mut ups = forest.up_set(idx);
    ups.push(idx);
    for up in ups {
        top -= *j.get(&up).unwrap_or(&0) as i64 + *k.get(&up).unwrap_or(&0) as i64 + 1;
    }
    -binom(top, k_v + 1)
}

// ---- component-basis expansion ---------------------------------------------------------

/// A signed combination of component classes: the Chern factors of the
/// formulas are all of the form `sum of B_U minus sum of B_U` with at most
/// one ambient summand. Component classes pull back along contractions by
/// taking preimages, which makes this the faithful comparison basis.
#[derive(Clone, Debug)]
pub struct KCombination {
    /// +1 copies of the ambient class
    pub ambient: i32,
    pub plus: Vec<VSet>,
    pub minus: Vec<VSet>,
}

/// One monomial of a total-Chern expansion: multiset of graded pieces
/// `(symbol, piece degree)` where the symbol is the ambient class (`None`)
/// or a component class (`Some(U)`).
pub type ChernMonomial = BTreeMap<(Option<VSet>, u32), u32>;

fn monomial_degree(m: &ChernMonomial) -> u32 {
    m.iter().map(|(&(_, i), &mult)| i * mult).sum()
}

/// Degree-`j` part of the total Chern class of a `KCombination`, as
/// integer-weighted monomials in the graded pieces of the summands.
pub fn expand_chern_combination(comb: &KCombination, j: u32) -> Vec<(ChernMonomial, i128)> {
    // series product of c(X) for positive summands and the formal inverse
    // for negative ones, truncated at degree j
    type Poly = BTreeMap<ChernMonomial, i128>;
    let truncate = |p: &mut Poly, cap: u32| {
        p.retain(|m, c| monomial_degree(m) <= cap && *c != 0);
    };
    let mul = |a: &Poly, b: &Poly, cap: u32| -> Poly {
        let mut out: Poly = BTreeMap::new();
        for (ma, ca) in a {
            let da = monomial_degree(ma);
            for (mb, cb) in b {
                if da + monomial_degree(mb) > cap {
                    continue;
                }
                let mut m = ma.clone();
                for (&ref key, &mult) in mb {
                    *m.entry(key.clone()).or_insert(0) += mult;
                }
                *out.entry(m).or_insert(0) += ca * cb;
            }
        }
        out.retain(|_, c| *c != 0);
        out
    };
    let series = |sym: Option<VSet>, cap: u32| -> Poly {
        let mut p: Poly = BTreeMap::new();
        p.insert(BTreeMap::new(), 1);
        for i in 1..=cap {
            p.insert([((sym.clone(), i), 1u32)].into_iter().collect(), 1);
        }
        p
    };
    let inverse = |p: &Poly, cap: u32| -> Poly {
        // (1 + q)^{-1} = sum (-q)^m for q the positive-degree part
        let mut q: Poly = p.clone();
        q.remove(&BTreeMap::new());
        let mut out: Poly = BTreeMap::new();
        out.insert(BTreeMap::new(), 1);
        let mut power: Poly = BTreeMap::new();
        power.insert(BTreeMap::new(), 1);
        for m in 1..=cap {
            power = mul(&power, &q, cap);
            if power.is_empty() {
                break;
            }
            let sign = if m % 2 == 0 { 1 } else { -1 };
            for (mono, c) in &power {
                *out.entry(mono.clone()).or_insert(0) += sign * c;
            }
        }
        truncate(&mut out, cap);
        out
    };
    let mut acc: Poly = BTreeMap::new();
    acc.insert(BTreeMap::new(), 1);
    for _ in 0..comb.ambient.max(0) {
        let s = series(None, j);
        acc = mul(&acc, &s, j);
    }
    for _ in 0..(-comb.ambient).max(0) {
        let s = inverse(&series(None, j), j);
        acc = mul(&acc, &s, j);
    }
    for u in &comb.plus {
        let s = series(Some(u.clone()), j);
        acc = mul(&acc, &s, j);
    }
    for u in &comb.minus {
        let s = inverse(&series(Some(u.clone()), j), j);
        acc = mul(&acc, &s, j);
    }
    acc.into_iter().filter(|(m, _)| monomial_degree(m) == j).collect()
}

/// The combination behind a public Chern factor on a stratum with a forest:
/// the leg-one component class is ambient minus the complementary
/// component; `H` subtracts the covers from `F_V = B_{V^c}`.
pub fn factor_combination(
    graph: &MarkedGraph,
    forest: &FullForest,
    kind: ChernKind,
    subset: Option<&VSet>,
) -> KCombination {
    match kind {
        ChernKind::Fx | ChernKind::FxPlus => {
            let v1 = graph.leg_vertex(1);
            let single: VSet = [v1].into_iter().collect();
            KCombination {
                ambient: 1,
                plus: Vec::new(),
                minus: vec![graph.complement(&single)],
            }
        }
        ChernKind::Fv | ChernKind::FvPlus => {
            let v = subset.expect("FV carries a subset");
            KCombination { ambient: 0, plus: vec![graph.complement(v)], minus: Vec::new() }
        }
        ChernKind::Hv | ChernKind::HvPlus => {
            let v = subset.expect("HV carries a subset");
            let idx = forest.index_of(v).expect("forest element");
            let minus = forest
                .covers_of(idx)
                .into_iter()
                .map(|w| graph.complement(&forest.sets[w]))
                .collect();
            KCombination { ambient: 0, plus: vec![graph.complement(v)], minus }
        }
        ChernKind::Ftot => KCombination { ambient: 1, plus: Vec::new(), minus: Vec::new() },
        ChernKind::Bu => KCombination {
            ambient: 0,
            plus: vec![subset.expect("B carries a subset").clone()],
            minus: Vec::new(),
        },
    }
}

/// Re-expresses every term of a base-class expression in the component
/// basis (ambient and `B_U` factors); the faithful form for comparing the
/// pushforward route with the closed formula.
pub fn expand_to_component_basis(expr: &StrataClassExpr) -> StrataClassExpr {
    assert_eq!(expr.kind, ExprKind::Base);
    let mut out = StrataClassExpr::new(
        ExprKind::Base,
        expr.g,
        expr.n,
        expr.d,
        expr.wall.clone(),
    );
    out.degree = expr.degree;
    for term in expr.terms.values() {
        let forest = FullForest::from_sets(&term.graph, term.forest.clone());
        // expand the factor product
        let mut monomials: Vec<(Vec<(ChernKind, Option<VSet>, u32)>, i128)> =
            vec![(Vec::new(), 1)];
        for factor in &term.chern {
            let comb = factor_combination(
                &term.graph,
                &forest,
                factor.kind,
                factor.subset.as_ref(),
            );
            let parts = expand_chern_combination(&comb, factor.degree);
            let mut grown = Vec::new();
            for (prefix, c0) in &monomials {
                for (mono, c1) in &parts {
                    let mut q = prefix.clone();
                    for (&(ref sym, i), &mult) in mono {
                        for _ in 0..mult {
                            match sym {
                                None => q.push((ChernKind::Ftot, None, i)),
                                Some(u) => q.push((ChernKind::Bu, Some(u.clone()), i)),
                            }
                        }
                    }
                    grown.push((q, c0 * c1));
                }
            }
            monomials = grown;
        }
        for (factors, c) in monomials {
            out.add_term(
                &term.graph,
                &term.divisor,
                &term.forest,
                &term.psi,
                &BTreeMap::new(),
                &factors,
                &term.coeff * Rat::from(num_bigint::BigInt::from(c)),
            );
        }
    }
    out
}

// ---- the crossing context ------------------------------------------------------------

/// Everything fixed by the choice of a wall: the straddling pair, the base
/// point, and the extremal vine strata.
pub struct Crossing {
    pub g: u32,
    pub n: u32,
    pub d: i64,
    pub wall: Wall,
    pub base: StabilityCondition,
    pub plus: StabilityCondition,
    pub minus: StabilityCondition,
    pub strata: Vec<VineStratum>,
}

impl Crossing {
    pub fn new(g: u32, n: u32, d: i64, wall: &Wall) -> Result<Crossing> {
        if d >= g as i64 {
            return Err(Error::InvalidInput("wall-crossing requires d < g".into()));
        }
        let base = generic_base_point(g, n, d, wall)?;
        let (plus, minus) = opposite_pair(g, n, d, wall, &base)?;
        let strata = extremal_vine_strata(g, n, d, wall, &base, &plus, &minus)?;
        Ok(Crossing { g, n, d, wall: wall.clone(), base, plus, minus, strata })
    }

    pub fn target_degree(&self) -> u32 {
        (self.g as i64 - self.d) as u32
    }

    pub fn default_max_edges(&self) -> usize {
        (self.target_degree() as usize).min(6)
    }
}

// ---- the resolved wall-crossing formula ------------------------------------------------

/// The degree-`(g-d)` part of the wall-crossing class on the resolution:
/// a sum over nonterminal resolved strata of Chern factors of the twisted
/// pushforward sheaves against powers of the exceptional psi-classes.
pub fn main_wallcross_resolved(crossing: &Crossing, max_edges: usize) -> Result<StrataClassExpr> {
    let mut expr = StrataClassExpr::new(
        ExprKind::Resolved,
        crossing.g,
        crossing.n,
        crossing.d,
        crossing.wall.clone(),
    );
    let target = crossing.target_degree();
    let objects = crate::blowup::tilde_e_objects(
        crossing.g,
        crossing.n,
        crossing.d,
        &crossing.plus,
        &crossing.minus,
        max_edges,
    )?;
    for obj in objects.iter().filter(|o| !o.is_terminal()) {
        let m = obj.forest.len();
        if m as u32 > target {
            continue;
        }
        let budget = target - m as u32;
        // s + sum j + sum k = budget over 1 + m + m slots
        for split in compositions(budget, 1 + 2 * m) {
            let s = split[0];
            let j: BTreeMap<usize, u32> =
                (0..m).filter(|&i| split[1 + i] > 0).map(|i| (i, split[1 + i])).collect();
            let k: BTreeMap<usize, u32> =
                (0..m).filter(|&i| split[1 + m + i] > 0).map(|i| (i, split[1 + m + i])).collect();
            let mut product: i128 = 1;
            for idx in 0..m {
                product *= coeff_b(&obj.graph, &obj.divisor, &obj.forest, idx, &j, &k);
                if product == 0 {
                    break;
                }
            }
            if product == 0 {
                continue;
            }
            let coeff = -Rat::from(num_bigint::BigInt::from(product)) / rat_int(obj.aut as i64);
            let mut chern: Vec<(ChernKind, Option<VSet>, u32)> = Vec::new();
            if s > 0 {
                chern.push((ChernKind::Fx, None, s));
            }
            for (&idx, &deg) in &j {
                chern.push((ChernKind::Hv, Some(obj.forest.sets[idx].clone()), deg));
            }
            let psi_forest: BTreeMap<VSet, u32> =
                k.iter().map(|(&idx, &exp)| (obj.forest.sets[idx].clone(), exp)).collect();
            expr.add_term(
                &obj.graph,
                &obj.divisor,
                &obj.forest.sets,
                &BTreeMap::new(),
                &psi_forest,
                &chern,
                coeff,
            );
        }
    }
    Ok(expr)
}

// ---- psi-monomial pushforward --------------------------------------------------------

/// One monomial of the pushforward polynomial: per-edge psi exponents and
/// an integer coefficient.
#[derive(Clone, Debug)]
pub struct PushMonomial {
    pub psi: BTreeMap<usize, u32>,
    pub coeff: i128,
}

/// The pushforward polynomial `c_{(G,D,V_bullet)}((g_V))` for markers
/// `g_V >= -1`: enumerates auxiliary exponents on close-upper edges and
/// correction indices on far-upper edges, with the per-element balance
/// constraint and nested binomial coefficients.
pub fn push_polynomial(
    graph: &MarkedGraph,
    forest: &FullForest,
    markers: &[i64],
) -> Vec<PushMonomial> {
    let m = forest.len();
    debug_assert_eq!(markers.len(), m);
    let ne = graph.num_edges();
    // k(e): the unique forest element with e close-upper; S(e): the elements
    // with e far-upper
    let mut k_of = vec![usize::MAX; ne];
    let mut s_of: Vec<Vec<usize>> = vec![Vec::new(); ne];
    for idx in 0..m {
        for &e in &forest.cu[idx] {
            debug_assert_eq!(k_of[e], usize::MAX, "close-upper sets must partition E(G)");
            k_of[e] = idx;
        }
        for &e in &forest.fu[idx] {
            s_of[e].push(idx);
        }
    }
    debug_assert!(k_of.iter().all(|&k| k != usize::MAX));
    // process elements top-down: strictly larger elements first, so the
    // close-upper exponents bounding each correction index are known
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(forest.sets[i].len()));
    struct State {
        g_edge: BTreeMap<usize, i64>,
        a_edge: BTreeMap<(usize, usize), i64>,
        coeff: i128,
    }
    let mut states = vec![State { g_edge: BTreeMap::new(), a_edge: BTreeMap::new(), coeff: 1 }];
    for &idx in &order {
        let fu: Vec<usize> = forest.fu[idx].iter().copied().collect();
        let cu: Vec<usize> = forest.cu[idx].iter().copied().collect();
        let mut next = Vec::new();
        for state in &states {
            let mut a_choices: Vec<Vec<(usize, i64, i128)>> = Vec::new();
            for &e in &fu {
                let top0 = state.g_edge[&e];
                let higher: i64 = s_of[e]
                    .iter()
                    .filter(|&&v| forest.sets[v].len() > forest.sets[idx].len())
                    .filter_map(|&v| state.a_edge.get(&(e, v)))
                    .sum();
                let top = top0 - higher;
                let mut opts = Vec::new();
                for a in 0..=top.max(0) {
                    let c = binom(top, a);
                    if c != 0 {
                        opts.push((e, a, if a % 2 == 0 { c } else { -c }));
                    }
                }
                a_choices.push(opts);
            }
            let mut partials: Vec<(BTreeMap<(usize, usize), i64>, i128)> =
                vec![(BTreeMap::new(), 1)];
            for opts in &a_choices {
                let mut grown = Vec::new();
                for (amap, c) in &partials {
                    for &(e, a, oc) in opts {
                        let mut q = amap.clone();
                        q.insert((e, idx), a);
                        grown.push((q, c * oc));
                    }
                }
                partials = grown;
            }
            for (amap, acoeff) in partials {
                // balance: sum over cu(idx) of (g_e + 1) = marker + 1 + sum a
                let asum: i64 = amap.values().sum();
                let rhs = markers[idx] + 1 + asum;
                if rhs < cu.len() as i64 {
                    continue;
                }
                for split in compositions((rhs - cu.len() as i64) as u32, cu.len()) {
                    let mut st = State {
                        g_edge: state.g_edge.clone(),
                        a_edge: state.a_edge.clone(),
                        coeff: state.coeff * acoeff,
                    };
                    for (pos, &e) in cu.iter().enumerate() {
                        st.g_edge.insert(e, split[pos] as i64);
                    }
                    for (&key, &a) in &amap {
                        st.a_edge.insert(key, a);
                    }
                    next.push(st);
                }
            }
        }
        states = next;
    }
    states
        .into_iter()
        .map(|st| {
            let mut psi = BTreeMap::new();
            for e in 0..ne {
                let a_total: i64 =
                    s_of[e].iter().filter_map(|&v| st.a_edge.get(&(e, v))).sum();
                let exp = st.g_edge[&e] - a_total;
                debug_assert!(exp >= 0);
                if exp > 0 {
                    psi.insert(e, exp as u32);
                }
            }
            PushMonomial { psi, coeff: st.coeff }
        })
        .collect()
}

/// Triple automorphisms of `(G, D, forest)` as graph morphisms, for coset
/// computations.
fn triple_automorphisms(
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    forest_sets: &[VSet],
) -> Vec<GraphMorphism> {
    let colors: Vec<Vec<i64>> = divisor.values.iter().map(|&v| vec![v]).collect();
    let forest: BTreeSet<VSet> = forest_sets.iter().cloned().collect();
    let mut out = Vec::new();
    for p in graph.vertex_automorphisms(&colors) {
        let keeps = forest_sets
            .iter()
            .all(|s| forest.contains(&s.iter().map(|&v| p[v]).collect::<VSet>()));
        if !keeps {
            continue;
        }
        for emap in graph.edge_bijections_for(&p) {
            out.push(GraphMorphism {
                vertex_map: p.clone(),
                contracted: BTreeSet::new(),
                edge_map: emap.iter().enumerate().map(|(s, &d)| (s, d)).collect(),
            });
        }
    }
    out
}

/// Morphisms of decorated strata `(G', D', V') -> (G, D, V)`, one
/// representative per class modulo the automorphisms of the target.
fn forest_morphism_classes_cached(
    raw_contractions: &[GraphMorphism],
    target_auts: &[GraphMorphism],
    src_divisor: &Pseudodivisor,
    src_forest: &[VSet],
    dst: &TildeObject,
) -> Vec<GraphMorphism> {
    let candidates: Vec<&GraphMorphism> = raw_contractions
        .iter()
        .filter(|m| {
            if src_divisor.pushforward(m, dst.graph.num_vertices()) != dst.divisor {
                return false;
            }
            dst.forest.sets.iter().all(|v| src_forest.contains(&m.preimage(v)))
        })
        .collect();
    let mut classes: Vec<GraphMorphism> = Vec::new();
    for c in candidates {
        let covered = classes
            .iter()
            .any(|rep| target_auts.iter().any(|t| rep.compose(t) == *c));
        if !covered {
            classes.push(c.clone());
        }
    }
    classes
}

/// One stable pair of the crossing with its full forests, cached for the
/// enumerators; the pool is the support of every base-class computation.
pub struct PoolEntry {
    pub graph: MarkedGraph,
    pub divisor: Pseudodivisor,
    pub aut_gd: u64,
    pub forests: Vec<FullForest>,
}

/// All stable pairs with their forests up to the edge cap.
pub fn build_pool(crossing: &Crossing, max_edges: usize) -> Result<Vec<PoolEntry>> {
    let graphs = enumerate_stable_graphs(crossing.g, crossing.n, max_edges)?;
    let mut out = Vec::new();
    for graph in &graphs {
        let plus_vals = crossing.plus.vertex_values(graph);
        let minus_vals = crossing.minus.vertex_values(graph);
        for divisor in
            crate::stability::stable_divisors_with_values(graph, &plus_vals, crossing.d)
        {
            let poset = crate::extremal::ext_poset_with_values(
                graph, &divisor, &plus_vals, &minus_vals,
            )?;
            let forests = full_forests(&poset);
            out.push(PoolEntry {
                graph: graph.clone(),
                aut_gd: aut_order_pair(graph, &divisor),
                divisor,
                forests,
            });
        }
    }
    Ok(out)
}

/// Cache of raw contraction lists between pool sources and term targets.
type ContractionCache = std::collections::HashMap<(usize, String), std::rc::Rc<Vec<GraphMorphism>>>;

fn cached_contractions(
    cache: &mut ContractionCache,
    pool_idx: usize,
    src: &MarkedGraph,
    dst: &MarkedGraph,
) -> std::rc::Rc<Vec<GraphMorphism>> {
    let key = (pool_idx, dst.raw_key());
    cache
        .entry(key)
        .or_insert_with(|| std::rc::Rc::new(contractions_to(src, dst)))
        .clone()
}

/// A component-basis Chern monomial on the resolved stratum: graded pieces
/// of the ambient class (`None`) or of component classes attached to
/// vertex subsets of the stratum's graph, with repeats; paired with an
/// integer weight.
type SourceChern = (Vec<(Option<VSet>, u32)>, i128);

/// Shared worker: adds to `expr` the pushforward of
/// `multiplier * f_{obj *} / |Aut(obj)| (prod Psi^k)` decorated by the
/// expanded Chern monomials. Component subsets transport along each
/// morphism by taking preimages, which is exact (unlike the `H` symbols,
/// whose cover structure a contraction need not preserve).
fn push_termwise(
    pool: &[PoolEntry],
    contraction_cache: &mut ContractionCache,
    obj: &TildeObject,
    k_exp: &BTreeMap<usize, u32>,
    chern_monomials: &[SourceChern],
    multiplier: Rat,
    expr: &mut StrataClassExpr,
) -> Result<()> {
    let target_auts = triple_automorphisms(&obj.graph, &obj.divisor, &obj.forest.sets);
    for (pool_idx, entry) in pool.iter().enumerate() {
        let (graph, divisor, aut_gd) = (&entry.graph, &entry.divisor, entry.aut_gd);
        if graph.num_edges() < obj.graph.num_edges() {
            continue;
        }
        let raw = cached_contractions(contraction_cache, pool_idx, graph, &obj.graph);
        if raw.is_empty() {
            continue;
        }
        for forest in &entry.forests {
            if forest.is_empty() && !obj.forest.is_empty() {
                continue;
            }
            for h in
                forest_morphism_classes_cached(&raw, &target_auts, divisor, &forest.sets, obj)
            {
                let mut markers = vec![-1i64; forest.len()];
                for (tidx, tset) in obj.forest.sets.iter().enumerate() {
                    let pre = h.preimage(tset);
                    let sidx = forest.index_of(&pre).expect("forest morphism");
                    markers[sidx] = *k_exp.get(&tidx).unwrap_or(&0) as i64;
                }
                // transport the chern monomials through the preimage
                let transported: Vec<(Vec<(ChernKind, Option<VSet>, u32)>, i128)> =
                    chern_monomials
                        .iter()
                        .map(|(pieces, c)| {
                            let factors = pieces
                                .iter()
                                .map(|(sym, i)| match sym {
                                    None => (ChernKind::Ftot, None, *i),
                                    Some(u) => (ChernKind::Bu, Some(h.preimage(u)), *i),
                                })
                                .collect();
                            (factors, *c)
                        })
                        .collect();
                for mono in push_polynomial(graph, forest, &markers) {
                    for (factors, cweight) in &transported {
                        let coeff = &multiplier
                            * &(Rat::from(num_bigint::BigInt::from(mono.coeff * cweight))
                                / rat_int(aut_gd as i64));
                        expr.add_term(
                            graph,
                            divisor,
                            &forest.sets,
                            &mono.psi,
                            &BTreeMap::new(),
                            factors,
                            coeff,
                        );
                    }
                }
            }
        }
    }
    Ok(())
}

/// Pushforward of a psi-monomial on a resolved stratum to the base strata
/// (with the blow-down normalization `f_* / |Aut|` on both sides).
pub fn pushforward_psi_monomial(
    crossing: &Crossing,
    obj: &TildeObject,
    exponents: &BTreeMap<usize, u32>,
    max_edges: usize,
) -> Result<StrataClassExpr> {
    let mut expr = StrataClassExpr::new(
        ExprKind::Base,
        crossing.g,
        crossing.n,
        crossing.d,
        crossing.wall.clone(),
    );
    // degree of this pushforward is |V| + sum k, not g - d
    expr.degree = obj.forest.len() as u32 + exponents.values().sum::<u32>();
    let pool = build_pool(crossing, max_edges)?;
    let mut cache = ContractionCache::new();
    let trivial: Vec<SourceChern> = vec![(Vec::new(), 1)];
    push_termwise(
        &pool,
        &mut cache,
        obj,
        exponents,
        &trivial,
        Rat::from(num_bigint::BigInt::from(1)),
        &mut expr,
    )?;
    Ok(expr)
}

/// Pushforward of an entire resolved wall-crossing expression; the oracle
/// route to the base formula.
pub fn pushforward_resolved_expr(
    crossing: &Crossing,
    resolved: &StrataClassExpr,
    max_edges: usize,
) -> Result<StrataClassExpr> {
    assert_eq!(resolved.kind, ExprKind::Resolved);
    let mut expr = StrataClassExpr::new(
        ExprKind::Base,
        crossing.g,
        crossing.n,
        crossing.d,
        crossing.wall.clone(),
    );
    let pool = build_pool(crossing, max_edges)?;
    let mut cache = ContractionCache::new();
    for term in resolved.terms.values() {
        let forest = FullForest::from_sets(&term.graph, term.forest.clone());
        let obj = TildeObject {
            aut_pair: aut_order_pair(&term.graph, &term.divisor),
            aut: aut_order_triple(&term.graph, &term.divisor, &term.forest),
            forest,
            graph: term.graph.clone(),
            divisor: term.divisor.clone(),
        };
        // expand the resolved factors in the component basis of the source
        let mut monomials: Vec<SourceChern> = vec![(Vec::new(), 1)];
        for c in &term.chern {
            match c.kind {
                ChernKind::Fx | ChernKind::Hv => {}
                other => panic!("unexpected factor {other:?} on a resolved term"),
            }
            let comb =
                factor_combination(&obj.graph, &obj.forest, c.kind, c.subset.as_ref());
            let parts = expand_chern_combination(&comb, c.degree);
            let mut grown = Vec::new();
            for (prefix, c0) in &monomials {
                for (mono, c1) in &parts {
                    let mut q = prefix.clone();
                    for (&(ref sym, i), &mult) in mono {
                        for _ in 0..mult {
                            q.push((sym.clone(), i));
                        }
                    }
                    grown.push((q, c0 * c1));
                }
            }
            monomials = grown;
        }
        // term = coeff * f_*(...) = (coeff * |Aut|) * f_*/|Aut|(...)
        let multiplier = &term.coeff * &rat_int(obj.aut as i64);
        push_termwise(&pool, &mut cache, &obj, &term.psi, &monomials, multiplier, &mut expr)?;
    }
    Ok(expr)
}

// ---- the closed coefficient on the base ------------------------------------------------

/// The closed coefficient of the base formula, summing the signed binomial
/// products over the auxiliary far-upper indices. `CN(V)` is the boundary
/// of `nex(V)`. The decoration degrees must exhaust the class degree:
/// `s + sum j + sum g_e = g - d - |E(G)|`.
pub fn coeff_alpha(
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    forest: &FullForest,
    s: u32,
    j: &BTreeMap<usize, u32>,
    ge: &BTreeMap<usize, u32>,
) -> Result<i128> {
    let excess = graph.genus_total() as i64
        - divisor.total_degree()
        - graph.num_edges() as i64;
    let used = s as i64
        + j.values().map(|&x| x as i64).sum::<i64>()
        + ge.values().map(|&x| x as i64).sum::<i64>();
    if used != excess {
        return Err(Error::InvalidInput(format!(
            "degree constraint violated: s + sum j + sum g_e = {used}, expected {excess}"
        )));
    }
    Ok(coeff_alpha_unchecked(graph, divisor, forest, j, ge))
}

fn coeff_alpha_unchecked(
    graph: &MarkedGraph,
    divisor: &Pseudodivisor,
    forest: &FullForest,
    j: &BTreeMap<usize, u32>,
    ge: &BTreeMap<usize, u32>,
) -> i128 {
    let m = forest.len();
    let ne = graph.num_edges();
    let mut s_of: Vec<Vec<usize>> = vec![Vec::new(); ne];
    for idx in 0..m {
        for &e in &forest.fu[idx] {
            s_of[e].push(idx);
        }
    }
    let g_e = |e: usize| -> i64 { *ge.get(&e).unwrap_or(&0) as i64 };
    // enumerate the far-upper indices bottom-up: the nonnegativity of each
    // element's binomial bottom bounds its own indices in terms of smaller
    // elements' indices
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| forest.sets[i].len());
    let rank_h: Vec<i64> = (0..m).map(|i| rank_hv(graph, divisor, forest, i)).collect();
    let mut states: Vec<BTreeMap<(usize, usize), i64>> = vec![BTreeMap::new()];
    for &idx in &order {
        let fu: Vec<usize> = forest.fu[idx].iter().copied().collect();
        if fu.is_empty() {
            continue;
        }
        let cu: Vec<usize> = forest.cu[idx].iter().copied().collect();
        let mut next = Vec::new();
        for state in &states {
            let mut budget: i64 = 0;
            for &e in &cu {
                budget += g_e(e) + 1;
                for &v in &s_of[e] {
                    if let Some(a) = state.get(&(e, v)) {
                        budget += a;
                    }
                }
            }
            if budget < 0 {
                continue;
            }
            let mut tuples: Vec<Vec<i64>> = vec![vec![]];
            for _ in 0..fu.len() {
                let mut grown = Vec::new();
                for t in &tuples {
                    let used: i64 = t.iter().sum();
                    for a in 0..=(budget - used) {
                        let mut q = t.clone();
                        q.push(a);
                        grown.push(q);
                    }
                }
                tuples = grown;
            }
            for t in tuples {
                let mut st = state.clone();
                for (pos, &e) in fu.iter().enumerate() {
                    st.insert((e, idx), t[pos]);
                }
                next.push(st);
            }
        }
        states = next;
    }
    let mut total: i128 = 0;
    'outer: for st in &states {
        let mut term: i128 = if m % 2 == 0 { 1 } else { -1 };
        for e in 0..ne {
            for &v in &s_of[e] {
                let a_ev = st[&(e, v)];
                let below: i64 = s_of[e]
                    .iter()
                    .filter(|&&w| forest.sets[w].is_subset(&forest.sets[v]))
                    .map(|&w| st[&(e, w)])
                    .sum();
                let c = binom(g_e(e) + below, a_ev);
                if c == 0 {
                    continue 'outer;
                }
                term *= if a_ev % 2 == 0 { c } else { -c };
            }
        }
        for idx in 0..m {
            let mut top: i64 = 0;
            let mut ups = forest.up_set(idx);
            ups.push(idx);
            for &up in &ups {
                top += rank_h[up] - *j.get(&up).unwrap_or(&0) as i64;
            }
            let cn = graph.edges_between(&forest.nex[idx], &graph.complement(&forest.nex[idx]));
            for &e in &cn {
                let mut inner: i64 = g_e(e) + 1;
                for &v in &s_of[e] {
                    if forest.sets[v].is_subset(&forest.sets[idx]) {
                        inner += st[&(e, v)];
                    }
                }
                top -= inner;
            }
            let mut bot: i64 = 0;
            for &e in &forest.cu[idx] {
                bot += g_e(e) + 1;
                for &v in &s_of[e] {
                    bot += st[&(e, v)];
                }
            }
            for &e in &forest.fu[idx] {
                bot -= st[&(e, idx)];
            }
            let c = binom(top, bot);
            if c == 0 {
                continue 'outer;
            }
            term *= c;
        }
        total += term;
    }
    total
}

/// The wall-crossing class on the plus-side Jacobian: the closed formula
/// summing over stable pairs with full forests.
pub fn wallcross_on_jbar(crossing: &Crossing, max_edges: usize) -> Result<StrataClassExpr> {
    let mut expr = StrataClassExpr::new(
        ExprKind::Base,
        crossing.g,
        crossing.n,
        crossing.d,
        crossing.wall.clone(),
    );
    let target = crossing.target_degree();
    let pool = build_pool(crossing, max_edges)?;
    for entry in &pool {
        let (graph, divisor, aut_gd) = (&entry.graph, &entry.divisor, entry.aut_gd);
        let ne = graph.num_edges();
        if ne == 0 || ne as u32 > target {
            continue;
        }
        {
            for forest in &entry.forests {
                if forest.is_empty() {
                    continue;
                }
                let m = forest.len();
                let budget = target - ne as u32;
                for split in compositions(budget, 1 + m + ne) {
                    let s = split[0];
                    let j: BTreeMap<usize, u32> =
                        (0..m).filter(|&i| split[1 + i] > 0).map(|i| (i, split[1 + i])).collect();
                    let ge: BTreeMap<usize, u32> = (0..ne)
                        .filter(|&e| split[1 + m + e] > 0)
                        .map(|e| (e, split[1 + m + e]))
                        .collect();
                    let alpha = coeff_alpha_unchecked(graph, divisor, forest, &j, &ge);
                    if alpha == 0 {
                        continue;
                    }
                    let coeff =
                        -Rat::from(num_bigint::BigInt::from(alpha)) / rat_int(aut_gd as i64);
                    let mut chern: Vec<(ChernKind, Option<VSet>, u32)> = Vec::new();
                    if s > 0 {
                        chern.push((ChernKind::FxPlus, None, s));
                    }
                    for (&idx, &deg) in &j {
                        chern.push((ChernKind::HvPlus, Some(forest.sets[idx].clone()), deg));
                    }
                    expr.add_term(
                        graph,
                        divisor,
                        &forest.sets,
                        &ge,
                        &BTreeMap::new(),
                        &chern,
                        coeff,
                    );
                }
            }
        }
    }
    Ok(expr)
}

/// True when every resolved stratum of the crossing (up to the degree cap)
/// is the terminal object or a vine with a singleton forest. This is the
/// real hypothesis behind the vine-collapse formula: walls with markings on
/// both sides always satisfy it, while walls with every marking on one side
/// can fail it through self-intersections of the vine locus.
pub fn vine_strata_disjoint(crossing: &Crossing, max_edges: usize) -> Result<bool> {
    let objects = crate::blowup::tilde_e_objects(
        crossing.g,
        crossing.n,
        crossing.d,
        &crossing.plus,
        &crossing.minus,
        max_edges,
    )?;
    Ok(objects
        .iter()
        .all(|o| o.is_terminal() || (o.graph.num_vertices() == 2 && o.forest.len() == 1)))
}

/// The simplified formula for walls whose extremal vine loci are pairwise
/// disjoint and without self-intersections. Walls carrying a marking on
/// both sides always qualify; one-sided walls are scanned for deeper
/// resolved strata and rejected when any exist.
pub fn disjoint_wallcross(crossing: &Crossing) -> Result<StrataClassExpr> {
    let full_marking: BTreeSet<u32> = (1..=crossing.n).collect();
    if crossing.wall.t >= 2 && crossing.wall.s == full_marking {
        return Err(Error::NotApplicable(
            "extremal vine strata are not pairwise disjoint; use the general formula".into(),
        ));
    }
    if crossing.wall.s == full_marking
        && !vine_strata_disjoint(crossing, crossing.default_max_edges())?
    {
        return Err(Error::NotApplicable(
            "the vine locus self-intersects in deeper strata; use the general formula".into(),
        ));
    }
    let mut expr = StrataClassExpr::new(
        ExprKind::Base,
        crossing.g,
        crossing.n,
        crossing.d,
        crossing.wall.clone(),
    );
    let target = crossing.target_degree();
    for stratum in &crossing.strata {
        let t = stratum.triple.t;
        if t > target {
            continue;
        }
        let pair = stratum.to_pair(crossing.g, crossing.n, crossing.d)?;
        let g_y = stratum.genus_y(crossing.g) as i64;
        let d_y = stratum.d_y;
        let v1 = pair.graph.leg_vertex(1);
        let forest_sets: Vec<VSet> = vec![[v1].into_iter().collect()];
        let aut = crate::num::factorial(t as u64);
        let budget = target - t;
        // s + j + lambda = g - d - t
        for split in compositions(budget, 3) {
            let (s, jdeg, lambda) = (split[0], split[1], split[2]);
            let c = binom(g_y - d_y - jdeg as i64 - 1, (target - jdeg - s) as i64);
            if c == 0 {
                continue;
            }
            let coeff = Rat::from(num_bigint::BigInt::from(c)) / rat_int(aut as i64);
            let mut chern: Vec<(ChernKind, Option<VSet>, u32)> = Vec::new();
            if s > 0 {
                chern.push((ChernKind::FxPlus, None, s));
            }
            if jdeg > 0 {
                chern.push((ChernKind::HvPlus, Some(forest_sets[0].clone()), jdeg));
            }
            // the complete homogeneous polynomial in the node classes:
            // one monomial per exponent tuple of total degree lambda
            for exps in compositions(lambda, t as usize) {
                let psi: BTreeMap<usize, u32> = exps
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x > 0)
                    .map(|(e, &x)| (e, x))
                    .collect();
                expr.add_term(
                    &pair.graph,
                    &pair.divisor,
                    &forest_sets,
                    &psi,
                    &BTreeMap::new(),
                    &chern,
                    coeff.clone(),
                );
            }
        }
    }
    Ok(expr)
}

// ---- JSON ------------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct ClassJson {
    pub g: u32,
    pub n: u32,
    pub d: i64,
    pub wall: Wall,
    pub degree: u32,
    pub kind: ExprKind,
    pub terms: Vec<TermJson>,
}

#[derive(Serialize, Deserialize)]
pub struct TermJson {
    pub graph: GraphJson,
    pub divisor: Vec<i64>,
    pub forest: Vec<Vec<usize>>,
    pub psi: BTreeMap<String, u32>,
    pub chern: Vec<ChernJson>,
    pub coeff: String,
    pub aut: u64,
}

#[derive(Serialize, Deserialize)]
pub struct ChernJson {
    pub kind: ChernKind,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none", default)]
    pub subset: Option<Vec<usize>>,
    pub deg: u32,
    #[serde(skip_serializing_if = "std::ops::Not::not", default)]
    pub over_rank: bool,
}

impl StrataClassExpr {
    pub fn to_json(&self) -> ClassJson {
        ClassJson {
            g: self.g,
            n: self.n,
            d: self.d,
            wall: self.wall.clone(),
            degree: self.degree,
            kind: self.kind,
            terms: self
                .terms
                .values()
                .map(|t| {
                    let forest = FullForest::from_sets(&t.graph, t.forest.clone());
                    TermJson {
                        graph: t.graph.to_json(),
                        divisor: t.divisor.values.clone(),
                        forest: t.forest.iter().map(|s| s.iter().copied().collect()).collect(),
                        psi: t.psi.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
                        chern: t
                            .chern
                            .iter()
                            .map(|c| {
                                let rank = match c.kind {
                                    ChernKind::Fx | ChernKind::FxPlus => {
                                        Some(rank_fx(&t.graph, &t.divisor))
                                    }
                                    ChernKind::Fv | ChernKind::FvPlus => {
                                        c.subset.as_ref().map(|s| rank_fv(&t.graph, &t.divisor, s))
                                    }
                                    ChernKind::Hv | ChernKind::HvPlus => {
                                        c.subset.as_ref().and_then(|s| {
                                            forest
                                                .index_of(s)
                                                .map(|i| rank_hv(&t.graph, &t.divisor, &forest, i))
                                        })
                                    }
                                    ChernKind::Ftot | ChernKind::Bu => None,
                                };
                                ChernJson {
                                    kind: c.kind,
                                    subset: c.subset.as_ref().map(|s| s.iter().copied().collect()),
                                    deg: c.degree,
                                    over_rank: rank
                                        .map(|r| r >= 0 && (c.degree as i64) > r)
                                        .unwrap_or(false),
                                }
                            })
                            .collect(),
                        coeff: rat_to_string(&t.coeff),
                        aut: t.aut,
                    }
                })
                .collect(),
        }
    }

    pub fn from_json(json: &ClassJson) -> Result<StrataClassExpr> {
        let mut expr = StrataClassExpr::new(json.kind, json.g, json.n, json.d, json.wall.clone());
        expr.degree = json.degree;
        for t in &json.terms {
            let graph = MarkedGraph::from_json(&t.graph)?;
            let divisor = Pseudodivisor::divisor(t.divisor.clone());
            let forest: Vec<VSet> = t.forest.iter().map(|s| s.iter().copied().collect()).collect();
            let psi_parsed: BTreeMap<usize, u32> = t
                .psi
                .iter()
                .map(|(k, v)| {
                    k.parse::<usize>()
                        .map(|i| (i, *v))
                        .map_err(|_| Error::InvalidInput(format!("bad psi key {k}")))
                })
                .collect::<Result<_>>()?;
            let chern: Vec<(ChernKind, Option<VSet>, u32)> = t
                .chern
                .iter()
                .map(|c| {
                    (c.kind, c.subset.as_ref().map(|s| s.iter().copied().collect::<VSet>()), c.deg)
                })
                .collect();
            let coeff = rat_from_str(&t.coeff)
                .ok_or_else(|| Error::InvalidInput(format!("bad coefficient {}", t.coeff)))?;
            match json.kind {
                ExprKind::Base => {
                    expr.add_term(
                        &graph,
                        &divisor,
                        &forest,
                        &psi_parsed,
                        &BTreeMap::new(),
                        &chern,
                        coeff,
                    );
                }
                ExprKind::Resolved => {
                    let psi_forest: BTreeMap<VSet, u32> =
                        psi_parsed.iter().map(|(&i, &e)| (forest[i].clone(), e)).collect();
                    expr.add_term(
                        &graph,
                        &divisor,
                        &forest,
                        &BTreeMap::new(),
                        &psi_forest,
                        &chern,
                        coeff,
                    );
                }
            }
        }
        Ok(expr)
    }
}

// ---- combinatorial lemmas -----------------------------------------------------------

/// Closed form for the alternating chain sum over a rooted forest: the sum
/// of `(-1)^{|S| + |chain|} x_{max(chain)}` over nonempty chains containing
/// the chain `S`. The poset is its reflexive order matrix.
pub fn sum_tree(le: &[Vec<bool>], s: &BTreeSet<usize>) -> Result<BTreeMap<usize, i64>> {
    let m = le.len();
    for &a in s {
        for &b in s {
            if !le[a][b] && !le[b][a] {
                return Err(Error::InvalidInput("S is not a chain".into()));
            }
        }
    }
    let mut out = BTreeMap::new();
    if s.is_empty() {
        for v in 0..m {
            let minimal = (0..m).all(|w| w == v || !le[w][v]);
            if minimal {
                out.insert(v, -1);
            }
        }
        return Ok(out);
    }
    let max_s = *s
        .iter()
        .find(|&&a| s.iter().all(|&b| le[b][a]))
        .expect("a chain has a maximum");
    // in a forest the down-set of max(S) is a chain; any element of it
    // outside S extends S and kills the sum
    let down: BTreeSet<usize> = (0..m).filter(|&v| le[v][max_s]).collect();
    if down != *s {
        return Ok(out);
    }
    out.insert(max_s, 1);
    for v in 0..m {
        if v == max_s || !le[max_s][v] {
            continue;
        }
        let is_cover = (0..m).all(|w| w == v || w == max_s || !(le[max_s][w] && le[w][v]));
        if is_cover {
            *out.entry(v).or_insert(0) += -1;
        }
    }
    out.retain(|_, c| *c != 0);
    Ok(out)
}

/// Brute-force oracle for [`sum_tree`].
pub fn sum_tree_naive(le: &[Vec<bool>], s: &BTreeSet<usize>) -> Result<BTreeMap<usize, i64>> {
    let m = le.len();
    for &a in s {
        for &b in s {
            if !le[a][b] && !le[b][a] {
                return Err(Error::InvalidInput("S is not a chain".into()));
            }
        }
    }
    let mut out: BTreeMap<usize, i64> = BTreeMap::new();
    for mask in 1u64..(1 << m) {
        let chain: Vec<usize> = (0..m).filter(|&v| mask >> v & 1 == 1).collect();
        let is_chain = chain.iter().all(|&a| chain.iter().all(|&b| le[a][b] || le[b][a]));
        if !is_chain {
            continue;
        }
        if !s.iter().all(|v| chain.contains(v)) {
            continue;
        }
        let max = *chain
            .iter()
            .find(|&&a| chain.iter().all(|&b| le[b][a]))
            .expect("chain has a maximum");
        let sign = if (s.len() + chain.len()) % 2 == 0 { 1 } else { -1 };
        *out.entry(max).or_insert(0) += sign;
    }
    out.retain(|_, c| *c != 0);
    Ok(out)
}

/// Coefficients of `c_j` of a rank-`r` element twisted by a line class: the
/// entry at `i` multiplies `c_i` times the `(j-i)`-th power of the line
/// class.
pub fn twist_total_chern(r: i64, j: u32) -> Vec<i128> {
    (0..=j).map(|i| binom(r - i as i64, (j - i) as i64)).collect()
}

/// Signed strata of an inclusion-exclusion expansion over a simple normal
/// crossing configuration: nonempty component subsets with nonempty
/// intersection, signed by parity.
pub fn inclusion_exclusion_expand(
    num_components: usize,
    intersects: &dyn Fn(&BTreeSet<usize>) -> bool,
) -> Vec<(BTreeSet<usize>, i64)> {
    let mut out = Vec::new();
    for mask in 1u64..(1 << num_components) {
        let subset: BTreeSet<usize> = (0..num_components).filter(|&c| mask >> c & 1 == 1).collect();
        if intersects(&subset) {
            let sign = if (subset.len() + 1) % 2 == 0 { 1 } else { -1 };
            out.push((subset, sign));
        }
    }
    out
}

/// The rewrite rule relating the psi-class of a node on a Jacobian stratum
/// with the pullback of the moduli psi-class and the locus of sheaves
/// singular at that node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PsiComparison {
    pub lhs: String,
    pub pulled: String,
    pub delta: String,
}

pub fn psi_comparison(graph: &MarkedGraph, divisor: &Pseudodivisor, edge: usize) -> PsiComparison {
    let gd = format!("{};D[{}]", graph.raw_key(), divisor.values.iter().join(","));
    PsiComparison {
        lhs: format!("Psi[{gd};e{edge}]"),
        pulled: format!("pb_psi[{};e{edge}]", graph.raw_key()),
        delta: format!("Delta[{gd};e{edge}]"),
    }
}

impl PsiComparison {
    /// Applies the rule to a formal sum of symbols.
    pub fn expand(&self, sum: &BTreeMap<String, i64>) -> BTreeMap<String, i64> {
        let mut out = sum.clone();
        if let Some(c) = out.remove(&self.lhs) {
            *out.entry(self.pulled.clone()).or_insert(0) += c;
            *out.entry(self.delta.clone()).or_insert(0) += c;
            out.retain(|_, v| *v != 0);
        }
        out
    }

    /// Reverses the rule where both right-hand symbols share a multiplicity.
    pub fn contract(&self, sum: &BTreeMap<String, i64>) -> BTreeMap<String, i64> {
        let mut out = sum.clone();
        let a = out.get(&self.pulled).copied().unwrap_or(0);
        let b = out.get(&self.delta).copied().unwrap_or(0);
        let c = if a.abs() < b.abs() { a } else { b };
        if c != 0 {
            *out.entry(self.pulled.clone()).or_insert(0) -= c;
            *out.entry(self.delta.clone()).or_insert(0) -= c;
            *out.entry(self.lhs.clone()).or_insert(0) += c;
            out.retain(|_, v| *v != 0);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u32]) -> BTreeSet<u32> {
        v.iter().copied().collect()
    }

    fn chain_forest(m: usize) -> Vec<Vec<bool>> {
        let mut le = vec![vec![false; m]; m];
        for a in 0..m {
            for b in a..m {
                le[a][b] = true;
            }
        }
        le
    }

    #[test]
    fn sum_tree_closed_form_cases() {
        // two incomparable roots
        let mut le = vec![vec![false; 2]; 2];
        le[0][0] = true;
        le[1][1] = true;
        let got = sum_tree(&le, &BTreeSet::new()).unwrap();
        assert_eq!(got, [(0usize, -1i64), (1, -1)].into_iter().collect());

        // chain 0 < 1 < 2, S = {0}: the down-set of max(S) is {0}
        let le = chain_forest(3);
        let got = sum_tree(&le, &[0usize].into_iter().collect()).unwrap();
        assert_eq!(got, [(0usize, 1i64), (1, -1)].into_iter().collect());

        // skipped predecessor: S = {1} misses 0 < 1
        let got = sum_tree(&le, &[1usize].into_iter().collect()).unwrap();
        assert!(got.is_empty());

        // full down-set
        let got = sum_tree(&le, &[0usize, 1].into_iter().collect()).unwrap();
        assert_eq!(got, [(1usize, 1i64), (2, -1)].into_iter().collect());
    }

    #[test]
    fn sum_tree_matches_naive_on_small_forest() {
        let mut le = vec![vec![false; 3]; 3];
        for v in 0..3 {
            le[v][v] = true;
        }
        le[0][1] = true;
        le[0][2] = true;
        for mask in 0u64..8 {
            let s: BTreeSet<usize> = (0..3).filter(|&v| mask >> v & 1 == 1).collect();
            match (sum_tree(&le, &s), sum_tree_naive(&le, &s)) {
                (Ok(f), Ok(sl)) => assert_eq!(f, sl, "S = {s:?}"),
                (Err(_), Err(_)) => {}
                other => panic!("mismatched errors for S = {s:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn twist_identity_cases() {
        let coeffs = twist_total_chern(4, 3);
        assert_eq!(coeffs[3], 1);
        let coeffs = twist_total_chern(2, 3);
        assert_eq!(coeffs[3], 1);
        assert_eq!(coeffs[2], 0);
    }

    #[test]
    fn twist_matches_chern_root_oracle() {
        for r in 0..=4usize {
            for j in 0..=5u32 {
                let coeffs = twist_total_chern(r as i64, j);
                type P = BTreeMap<Vec<u32>, i128>;
                let mul = |a: &P, b: &P| -> P {
                    let mut out: P = BTreeMap::new();
                    for (ea, ca) in a {
                        for (eb, cb) in b {
                            let e: Vec<u32> =
                                ea.iter().zip(eb.iter()).map(|(x, y)| x + y).collect();
                            *out.entry(e).or_insert(0) += ca * cb;
                        }
                    }
                    out.retain(|_, c| *c != 0);
                    out
                };
                let mut prod: P = [(vec![0u32; r + 1], 1i128)].into_iter().collect();
                for m in 0..r {
                    let mut factor: P = BTreeMap::new();
                    factor.insert(vec![0; r + 1], 1);
                    let mut xm = vec![0; r + 1];
                    xm[m] = 1;
                    factor.insert(xm, 1);
                    let mut l = vec![0; r + 1];
                    l[r] = 1;
                    factor.insert(l, 1);
                    prod = mul(&prod, &factor);
                }
                let lhs: P =
                    prod.into_iter().filter(|(e, _)| e.iter().sum::<u32>() == j).collect();
                let mut rhs: P = BTreeMap::new();
                for i in 0..=j.min(r as u32) {
                    let c = coeffs[i as usize];
                    if c == 0 {
                        continue;
                    }
                    for combo in (0..r).combinations(i as usize) {
                        let mut e = vec![0u32; r + 1];
                        for v in combo {
                            e[v] = 1;
                        }
                        e[r] = j - i;
                        *rhs.entry(e).or_insert(0) += c;
                    }
                }
                rhs.retain(|_, c| *c != 0);
                assert_eq!(lhs, rhs, "r = {r}, j = {j}");
            }
        }
    }

    #[test]
    fn inclusion_exclusion_small_cases() {
        let all = |_: &BTreeSet<usize>| true;
        let one = inclusion_exclusion_expand(1, &all);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].1, 1);
        let two = inclusion_exclusion_expand(2, &all);
        assert_eq!(two.len(), 3);
        let signs: i64 = two.iter().map(|(_, s)| s).sum();
        assert_eq!(signs, 1);
        let three = inclusion_exclusion_expand(3, &all);
        assert_eq!(three.len(), 7);
        for (t, s) in &three {
            assert_eq!(*s, if t.len() % 2 == 1 { 1 } else { -1 });
        }
        let no_triple = |t: &BTreeSet<usize>| t.len() <= 2;
        assert_eq!(inclusion_exclusion_expand(3, &no_triple).len(), 6);
    }

    #[test]
    fn psi_comparison_roundtrip() {
        let graph = crate::graphs::trivial_graph(2, 1).unwrap();
        let pd = Pseudodivisor::divisor(vec![1]);
        let rule = psi_comparison(&graph, &pd, 0);
        let mut sum = BTreeMap::new();
        sum.insert(rule.lhs.clone(), 3i64);
        sum.insert("other".to_string(), 1);
        let expanded = rule.expand(&sum);
        assert!(!expanded.contains_key(&rule.lhs));
        assert_eq!(expanded[&rule.pulled], 3);
        assert_eq!(expanded[&rule.delta], 3);
        let back = rule.contract(&expanded);
        assert_eq!(back, sum);
    }

    #[test]
    fn coeff_b_collapses_on_singletons() {
        // vine stratum: forest = first-marking vertex; the coefficient is
        // -binom(gY - dY - j - 1, k + 1)
        let (g, n, d) = (3u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 0).unwrap();
        let crossing = Crossing::new(g, n, d, &wall).unwrap();
        let stratum = &crossing.strata[0];
        let pair = stratum.to_pair(g, n, d).unwrap();
        let v1 = pair.graph.leg_vertex(1);
        let forest = FullForest::from_sets(&pair.graph, vec![[v1].into_iter().collect()]);
        let g_y = stratum.genus_y(g) as i64;
        let d_y = stratum.d_y;
        for jv in 0..=6u32 {
            for kv in 0..=6u32 {
                let j: BTreeMap<usize, u32> = [(0, jv)].into_iter().collect();
                let k: BTreeMap<usize, u32> = [(0, kv)].into_iter().collect();
                let b = coeff_b(&pair.graph, &pair.divisor, &forest, 0, &j, &k);
                assert_eq!(b, -binom(g_y - d_y - jv as i64 - 1, kv as i64 + 1));
            }
        }
    }

    #[test]
    fn coeff_alpha_singleton_specialization_and_contract() {
        // singleton forest with no far-upper edges: the coefficient is
        // -binom(rank(H_V) - j, sum (g_e + 1)), and the degree constraint
        // is enforced
        let (g, n, d) = (3u32, 2u32, 0i64);
        let wall = Wall::new(g, n, 1, 2, set(&[1]), 0).unwrap();
        let crossing = Crossing::new(g, n, d, &wall).unwrap();
        let stratum = crossing.strata.iter().find(|s| s.triple.t == 2).unwrap();
        let pair = stratum.to_pair(g, n, d).unwrap();
        let v1 = pair.graph.leg_vertex(1);
        let forest = FullForest::from_sets(&pair.graph, vec![[v1].into_iter().collect()]);
        let rank_h = rank_hv(&pair.graph, &pair.divisor, &forest, 0);
        let excess = g as i64 - d - pair.graph.num_edges() as i64;
        for jv in 0..=excess as u32 {
            for e0 in 0..=(excess as u32 - jv) {
                let e1 = excess as u32 - jv - e0;
                let j: BTreeMap<usize, u32> = [(0, jv)].into_iter().collect();
                let ge: BTreeMap<usize, u32> =
                    [(0, e0), (1, e1)].into_iter().filter(|&(_, x)| x > 0).collect();
                let alpha = coeff_alpha(&pair.graph, &pair.divisor, &forest, 0, &j, &ge).unwrap();
                let bottom = (e0 + e1 + 2) as i64;
                assert_eq!(alpha, -binom(rank_h - jv as i64, bottom));
            }
        }
        // violating the degree constraint is an error
        let j: BTreeMap<usize, u32> = BTreeMap::new();
        let ge: BTreeMap<usize, u32> = BTreeMap::new();
        assert!(coeff_alpha(&pair.graph, &pair.divisor, &forest, 99, &j, &ge).is_err());
    }

    #[test]
    fn codim_one_reproduction() {
        // d = g-1: a single term (gY - dY - 1) [J_beta] with no decorations
        for (g, k) in [(2u32, -1i64), (3, 0), (3, 1)] {
            let n = 1u32;
            let d = g as i64 - 1;
            let wall = Wall::new(g, n, 1, 1, set(&[1]), k).unwrap();
            let crossing = Crossing::new(g, n, d, &wall).unwrap();
            let expr = wallcross_on_jbar(&crossing, 1).unwrap();
            let stratum = &crossing.strata[0];
            let expected_coeff = stratum.genus_y(g) as i64 - stratum.d_y - 1;
            if expected_coeff == 0 {
                assert!(expr.is_zero(), "expected empty expression");
            } else {
                assert_eq!(expr.len(), 1);
                let term = expr.terms.values().next().unwrap();
                assert!(term.psi.is_empty());
                assert!(term.chern.is_empty());
                assert_eq!(term.coeff, rat_int(expected_coeff));
            }
        }
    }

    #[test]
    fn codim_one_resolved_matches_base() {
        let (g, n) = (3u32, 1u32);
        let d = 2i64;
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 1).unwrap();
        let crossing = Crossing::new(g, n, d, &wall).unwrap();
        let resolved = main_wallcross_resolved(&crossing, 1).unwrap();
        let pushed = pushforward_resolved_expr(&crossing, &resolved, 1).unwrap();
        let base = expand_to_component_basis(&wallcross_on_jbar(&crossing, 1).unwrap());
        assert!(pushed.equals(&base), "{:?}", pushed.diff(&base));
        let disjoint = expand_to_component_basis(&disjoint_wallcross(&crossing).unwrap());
        assert!(disjoint.equals(&base), "{:?}", disjoint.diff(&base));
    }

    #[test]
    fn codim_two_divisorial_display() {
        // d = g-2 on a divisorial wall: three decorated terms on the vine
        let (g, n, d) = (3u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 1).unwrap();
        let crossing = Crossing::new(g, n, d, &wall).unwrap();
        let expr = wallcross_on_jbar(&crossing, 2).unwrap();
        let stratum = &crossing.strata[0];
        let g_y = stratum.genus_y(g) as i64;
        let d_y = stratum.d_y;
        let target = crossing.target_degree() as i64;
        let pair = stratum.to_pair(g, n, d).unwrap();
        let mut found_fx = false;
        let mut found_hv = false;
        let mut found_psi = false;
        for t in expr.terms.values().filter(|t| t.graph.raw_key() == pair.graph.raw_key()) {
            if t.chern.iter().any(|c| c.kind == ChernKind::FxPlus) {
                assert_eq!(t.coeff, rat_int(binom(g_y - d_y - 1, target - 1) as i64));
                found_fx = true;
            } else if t.chern.iter().any(|c| c.kind == ChernKind::HvPlus) {
                assert_eq!(t.coeff, rat_int(binom(g_y - d_y - 2, target - 1) as i64));
                found_hv = true;
            } else if !t.psi.is_empty() {
                assert_eq!(t.coeff, rat_int(binom(g_y - d_y - 1, target) as i64));
                found_psi = true;
            }
        }
        assert!(found_fx && found_hv && found_psi);
    }

    #[test]
    fn expr_json_roundtrip() {
        let (g, n, d) = (3u32, 1u32, 1i64);
        let wall = Wall::new(g, n, 1, 1, set(&[1]), 1).unwrap();
        let crossing = Crossing::new(g, n, d, &wall).unwrap();
        let expr = wallcross_on_jbar(&crossing, 2).unwrap();
        let json = expr.to_json();
        let text = serde_json::to_string_pretty(&json).unwrap();
        let parsed: ClassJson = serde_json::from_str(&text).unwrap();
        let back = StrataClassExpr::from_json(&parsed).unwrap();
        assert!(back.equals(&expr));
        let text2 = serde_json::to_string_pretty(&expr.to_json()).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn good_wall_disjoint_collapse() {
        // t = 2 wall with S != [n] at g = 3, n = 2, d = 1
        let (g, n, d) = (3u32, 2u32, 1i64);
        let wall = Wall::new(g, n, 1, 2, set(&[1]), 0).unwrap();
        let crossing = Crossing::new(g, n, d, &wall).unwrap();
        let max_edges = crossing.default_max_edges();
        let base = wallcross_on_jbar(&crossing, max_edges).unwrap();
        let disjoint = disjoint_wallcross(&crossing).unwrap();
        assert!(disjoint.equals(&base), "{:?}", disjoint.diff(&base));
    }

    #[test]
    fn central_wall_rejects_disjoint_formula() {
        let (g, n, d) = (2u32, 1u32, 0i64);
        let wall = Wall::new(g, n, 0, 2, set(&[1]), 1).unwrap();
        let crossing = Crossing::new(g, n, d, &wall).unwrap();
        assert!(matches!(disjoint_wallcross(&crossing), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn psi_pushforward_collapses_to_complete_homogeneous() {
        // on a two-node wall with markings on both sides, pushing the k-th
        // power of the exceptional class onto the base gives the complete
        // homogeneous polynomial of degree k - t + 1 in the node classes,
        // normalized by the stratum automorphisms
        let (g, n, d) = (3u32, 2u32, 1i64);
        let wall = Wall::new(g, n, 1, 2, set(&[1]), 0).unwrap();
        let crossing = Crossing::new(g, n, d, &wall).unwrap();
        let stratum = crossing.strata.iter().find(|s| s.triple.t == 2).unwrap();
        let pair = stratum.to_pair(g, n, d).unwrap();
        let v1 = pair.graph.leg_vertex(1);
        let forest_sets: Vec<VSet> = vec![[v1].into_iter().collect()];
        let obj = crate::blowup::TildeObject {
            aut_pair: aut_order_pair(&pair.graph, &pair.divisor),
            aut: crate::blowup::aut_order_triple(&pair.graph, &pair.divisor, &forest_sets),
            forest: FullForest::from_sets(&pair.graph, forest_sets),
            graph: pair.graph.clone(),
            divisor: pair.divisor.clone(),
        };
        let t = 2u32;
        for k in 0..=3u32 {
            let exponents: BTreeMap<usize, u32> =
                if k > 0 { [(0, k)].into_iter().collect() } else { BTreeMap::new() };
            let pushed = pushforward_psi_monomial(&crossing, &obj, &exponents, 2).unwrap();
            if k + 1 < t {
                assert!(pushed.is_zero(), "k = {k}");
                continue;
            }
            let lambda = k + 1 - t;
            // support only on the vine stratum; total coefficient mass is
            // the number of degree-lambda monomials in t variables over t!
            assert!(pushed
                .terms
                .values()
                .all(|term| term.graph.raw_key() == obj.graph.raw_key()));
            let mass: Rat = pushed.terms.values().map(|term| term.coeff.clone()).sum();
            let monomials = crate::num::compositions(lambda, t as usize).len() as i64;
            assert_eq!(mass, rat_int(monomials) / rat_int(2), "k = {k}");
            for term in pushed.terms.values() {
                assert_eq!(term.psi.values().sum::<u32>(), lambda, "k = {k}");
            }
        }
    }

    #[test]
    fn oracle_equivalence_on_central_wall() {
        let (g, n, d) = (2u32, 1u32, 0i64);
        let wall = Wall::new(g, n, 0, 2, set(&[1]), 1).unwrap();
        let crossing = Crossing::new(g, n, d, &wall).unwrap();
        let max_edges = crossing.default_max_edges();
        let resolved = main_wallcross_resolved(&crossing, max_edges).unwrap();
        let pushed = pushforward_resolved_expr(&crossing, &resolved, max_edges).unwrap();
        let base = expand_to_component_basis(&wallcross_on_jbar(&crossing, max_edges).unwrap());
        assert!(pushed.equals(&base), "{:?}", pushed.diff(&base));
    }
}

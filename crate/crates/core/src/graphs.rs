//! Stable marked dual graphs: canonical representation, enumeration, and the
//! contraction-morphism calculus.
//!
//! A graph is a connected multigraph with a genus decoration on vertices,
//! markings `1..=n` distributed over vertices, and loops allowed. Structural
//! equality of canonical forms equals isomorphism, so graphs can be used as
//! map keys after canonicalization.

use crate::{Error, Result};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub type VSet = BTreeSet<usize>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vertex {
    pub genus: u32,
    pub legs: BTreeSet<u32>,
}

/// A marked dual graph. Invariants enforced by [`MarkedGraph::new`]:
/// connected, total genus consistent, each marking on exactly one vertex,
/// and every vertex stable. Subdivisions use [`MarkedGraph::new_relaxed`],
/// which skips the stability inequality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MarkedGraph {
    vertices: Vec<Vertex>,
    /// Sorted list of unordered endpoint pairs `(u, v)` with `u <= v`.
    edges: Vec<(usize, usize)>,
    n: u32,
    g: u32,
}

impl MarkedGraph {
    pub fn new(vertices: Vec<Vertex>, edges: Vec<(usize, usize)>, n: u32) -> Result<Self> {
        let graph = Self::new_relaxed(vertices, edges, n)?;
        if let Some(v) = (0..graph.num_vertices()).find(|&v| !graph.is_stable_vertex(v)) {
            return Err(Error::UnstableGraph(format!(
                "vertex {v} has genus {}, valence {}, legs {}",
                graph.vertices[v].genus,
                graph.valence(v),
                graph.vertices[v].legs.len()
            )));
        }
        Ok(graph)
    }

    /// Builds without the per-vertex stability inequality (used for transient
    /// subdivisions); connectivity and marking checks still apply.
    pub fn new_relaxed(vertices: Vec<Vertex>, mut edges: Vec<(usize, usize)>, n: u32) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("graph needs at least one vertex".into()));
        }
        for e in edges.iter_mut() {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
            if e.1 >= vertices.len() {
                return Err(Error::InvalidInput(format!("edge {e:?} out of range")));
            }
        }
        edges.sort();
        let mut seen = BTreeSet::new();
        for v in &vertices {
            for &l in &v.legs {
                if l == 0 || l > n || !seen.insert(l) {
                    return Err(Error::InvalidInput(format!("bad marking {l}")));
                }
            }
        }
        if seen.len() != n as usize {
            return Err(Error::InvalidInput("each marking must appear exactly once".into()));
        }
        let b1 = edges.len() as i64 - vertices.len() as i64 + 1;
        let g_total = vertices.iter().map(|v| v.genus as i64).sum::<i64>() + b1;
        if g_total < 0 {
            return Err(Error::InvalidInput("negative total genus".into()));
        }
        let graph = MarkedGraph { vertices, edges, n, g: g_total as u32 };
        if !graph.is_connected() {
            return Err(Error::InvalidInput("graph must be connected".into()));
        }
        Ok(graph)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn genus_total(&self) -> u32 {
        self.g
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn vertex(&self, v: usize) -> &Vertex {
        &self.vertices[v]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    /// Vertex carrying marking `l` (1-based).
    pub fn leg_vertex(&self, l: u32) -> usize {
        (0..self.vertices.len())
            .find(|&v| self.vertices[v].legs.contains(&l))
            .expect("marking present")
    }

    /// Loops count twice.
    pub fn valence(&self, v: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| (a == v) as usize + (b == v) as usize)
            .sum()
    }

    pub fn loops_at(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v && b == v).count()
    }

    pub fn is_stable_vertex(&self, v: usize) -> bool {
        2 * self.vertices[v].genus as i64 - 2
            + self.valence(v) as i64
            + self.vertices[v].legs.len() as i64
            > 0
    }

    pub fn is_stable(&self) -> bool {
        (0..self.vertices.len()).all(|v| self.is_stable_vertex(v))
    }

    pub fn is_connected(&self) -> bool {
        let all: VSet = (0..self.vertices.len()).collect();
        self.is_connected_subset(&all)
    }

    /// Connectivity of the complete subgraph on `set`.
    pub fn is_connected_subset(&self, set: &VSet) -> bool {
        let Some(&start) = set.iter().next() else { return false };
        let mut seen = VSet::new();
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(v) = stack.pop() {
            for &(a, b) in &self.edges {
                let w = if a == v { b } else if b == v { a } else { continue };
                if set.contains(&w) && seen.insert(w) {
                    stack.push(w);
                }
            }
        }
        seen.len() == set.len()
    }

    pub fn connected_components_of(&self, set: &VSet) -> Vec<VSet> {
        let mut remaining = set.clone();
        let mut comps = Vec::new();
        while let Some(&start) = remaining.iter().next() {
            let mut comp = VSet::new();
            let mut stack = vec![start];
            comp.insert(start);
            while let Some(v) = stack.pop() {
                for &(a, b) in &self.edges {
                    let w = if a == v { b } else if b == v { a } else { continue };
                    if remaining.contains(&w) && comp.insert(w) {
                        stack.push(w);
                    }
                }
            }
            for v in &comp {
                remaining.remove(v);
            }
            comps.push(comp);
        }
        comps
    }

    /// Edge indices with one endpoint in `a` and the other in `b`.
    /// A loop at `v` is included if and only if `v` lies in both sets.
    pub fn edges_between(&self, a: &VSet, b: &VSet) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|&(_, &(u, v))| {
                (a.contains(&u) && b.contains(&v)) || (a.contains(&v) && b.contains(&u))
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn complement(&self, set: &VSet) -> VSet {
        (0..self.vertices.len()).filter(|v| !set.contains(v)).collect()
    }

    /// Genus of the complete subgraph on `set`: the genera plus its first
    /// Betti number. Errors when `set` is empty or disconnected.
    pub fn induced_genus(&self, set: &VSet) -> Result<u32> {
        if set.is_empty() || !self.is_connected_subset(set) {
            return Err(Error::InvalidInput(
                "induced genus needs a nonempty connected vertex set".into(),
            ));
        }
        let internal = self
            .edges
            .iter()
            .filter(|&&(u, v)| set.contains(&u) && set.contains(&v))
            .count() as i64;
        let total = set.iter().map(|&v| self.vertices[v].genus as i64).sum::<i64>() + internal
            - set.len() as i64
            + 1;
        Ok(total as u32)
    }

    pub fn legs_of_set(&self, set: &VSet) -> BTreeSet<u32> {
        set.iter().flat_map(|&v| self.vertices[v].legs.iter().copied()).collect()
    }

    /// All nonempty connected vertex subsets.
    pub fn connected_subsets(&self) -> Vec<VSet> {
        let nv = self.vertices.len();
        let mut out = Vec::new();
        for mask in 1u64..(1 << nv) {
            let set: VSet = (0..nv).filter(|&v| mask >> v & 1 == 1).collect();
            if self.is_connected_subset(&set) {
                out.push(set);
            }
        }
        out
    }

    // ---- canonical form -------------------------------------------------

    fn signature(&self, v: usize, extra: &[Vec<i64>]) -> Vec<i64> {
        let mut sig = vec![
            self.vertices[v].genus as i64,
            self.vertices[v].legs.len() as i64,
        ];
        sig.extend(self.vertices[v].legs.iter().map(|&l| l as i64));
        sig.push(self.valence(v) as i64);
        sig.push(self.loops_at(v) as i64);
        if !extra.is_empty() {
            sig.extend(extra[v].iter().copied());
        }
        sig
    }

    fn encode_edges(&self, pos: &[usize]) -> Vec<(usize, usize)> {
        let mut enc: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (pos[u], pos[v]);
                if a <= b { (a, b) } else { (b, a) }
            })
            .collect();
        enc.sort();
        enc
    }

    /// All vertex orderings minimizing the canonical encoding; vertices are
    /// grouped by signature (optionally refined by `extra` colors) and only
    /// within-group permutations are searched.
    pub fn canonical_orders(&self, extra: &[Vec<i64>]) -> Vec<Vec<usize>> {
        let nv = self.vertices.len();
        let mut idx: Vec<usize> = (0..nv).collect();
        let sigs: Vec<Vec<i64>> = (0..nv).map(|v| self.signature(v, extra)).collect();
        idx.sort_by(|&a, &b| sigs[a].cmp(&sigs[b]));
        // group boundaries
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for &v in &idx {
            match groups.last_mut() {
                Some(gr) if sigs[gr[0]] == sigs[v] => gr.push(v),
                _ => groups.push(vec![v]),
            }
        }
        let mut best: Option<Vec<(usize, usize)>> = None;
        let mut best_orders: Vec<Vec<usize>> = Vec::new();
        let group_perms: Vec<Vec<Vec<usize>>> = groups
            .iter()
            .map(|gr| gr.iter().copied().permutations(gr.len()).collect())
            .collect();
        let mut stack = vec![Vec::<usize>::new()];
        // cartesian product over groups
        for perms in &group_perms {
            let mut next = Vec::new();
            for partial in &stack {
                for p in perms {
                    let mut q = partial.clone();
                    q.extend(p.iter().copied());
                    next.push(q);
                }
            }
            stack = next;
        }
        for order in stack {
            let mut pos = vec![0usize; nv];
            for (new, &old) in order.iter().enumerate() {
                pos[old] = new;
            }
            let enc = self.encode_edges(&pos);
            match &best {
                Some(b) if enc > *b => {}
                Some(b) if enc == *b => best_orders.push(order),
                _ => {
                    best = Some(enc);
                    best_orders = vec![order];
                }
            }
        }
        best_orders
    }

    /// Relabels so the vertex order is `order`; returns the new graph with
    /// the old-to-new vertex and edge index maps.
    pub fn relabel(&self, order: &[usize]) -> (MarkedGraph, Vec<usize>, Vec<usize>) {
        let nv = self.vertices.len();
        let mut pos = vec![0usize; nv];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        let vertices: Vec<Vertex> = order.iter().map(|&old| self.vertices[old].clone()).collect();
        let mut edge_items: Vec<((usize, usize), usize)> = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| {
                let (a, b) = (pos[u], pos[v]);
                (if a <= b { (a, b) } else { (b, a) }, i)
            })
            .collect();
        edge_items.sort();
        let mut emap = vec![0usize; self.edges.len()];
        for (new, &(_, old)) in edge_items.iter().enumerate() {
            emap[old] = new;
        }
        let edges = edge_items.iter().map(|&(e, _)| e).collect();
        let graph = MarkedGraph { vertices, edges, n: self.n, g: self.g };
        (graph, pos, emap)
    }

    /// Canonical representative plus the old-to-new vertex map.
    pub fn canonical_form(&self) -> (MarkedGraph, Vec<usize>) {
        let orders = self.canonical_orders(&[]);
        let (graph, vmap, _) = self.relabel(&orders[0]);
        (graph, vmap)
    }

    pub fn canonical_key(&self) -> String {
        let (c, _) = self.canonical_form();
        c.raw_key()
    }

    /// Encoding of the graph as labeled (no canonicalization).
    pub fn raw_key(&self) -> String {
        let vs: Vec<String> = self
            .vertices
            .iter()
            .map(|v| format!("{}:{}", v.genus, v.legs.iter().join(",")))
            .collect();
        let es: Vec<String> = self.edges.iter().map(|&(u, v)| format!("{u}-{v}")).collect();
        format!("n{};v[{}];e[{}]", self.n, vs.join("|"), es.join("|"))
    }

    pub fn is_canonical(&self) -> bool {
        let (c, _) = self.canonical_form();
        c == *self
    }

    // ---- automorphisms --------------------------------------------------

    /// Vertex permutations preserving genus, legs, the edge multiset, and the
    /// given extra colors.
    pub fn vertex_automorphisms(&self, extra: &[Vec<i64>]) -> Vec<Vec<usize>> {
        let nv = self.vertices.len();
        let sigs: Vec<Vec<i64>> = (0..nv).map(|v| self.signature(v, extra)).collect();
        let mult = self.multiplicity_map();
        let mut classes: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for v in 0..nv {
            classes.entry(sigs[v].clone()).or_default().push(v);
        }
        let class_list: Vec<Vec<usize>> = classes.into_values().collect();
        let mut perms: Vec<Vec<usize>> = vec![vec![usize::MAX; nv]];
        for class in &class_list {
            let mut next = Vec::new();
            for perm in &perms {
                for image in class.iter().copied().permutations(class.len()) {
                    let mut q = perm.clone();
                    for (&src, &dst) in class.iter().zip(image.iter()) {
                        q[src] = dst;
                    }
                    next.push(q);
                }
            }
            perms = next;
        }
        perms
            .into_iter()
            .filter(|p| {
                (0..nv).all(|u| {
                    (u..nv).all(|v| {
                        mult.get(&(u, v)).copied().unwrap_or(0)
                            == {
                                let (a, b) = (p[u], p[v]);
                                let key = if a <= b { (a, b) } else { (b, a) };
                                mult.get(&key).copied().unwrap_or(0)
                            }
                    })
                })
            })
            .collect()
    }

    fn multiplicity_map(&self) -> BTreeMap<(usize, usize), usize> {
        let mut mult = BTreeMap::new();
        for &(u, v) in &self.edges {
            *mult.entry((u, v)).or_insert(0) += 1;
        }
        mult
    }

    /// Full automorphism group as (vertex permutation, edge permutation)
    /// pairs. Edge permutations run over all endpoint-compatible bijections.
    pub fn automorphisms(&self) -> Vec<(Vec<usize>, Vec<usize>)> {
        let vperms = self.vertex_automorphisms(&[]);
        let mut out = Vec::new();
        for p in vperms {
            for emap in self.edge_bijections_for(&p) {
                out.push((p.clone(), emap));
            }
        }
        out
    }

    /// Edge bijections compatible with the vertex permutation `p`.
    pub fn edge_bijections_for(&self, p: &[usize]) -> Vec<Vec<usize>> {
        let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            by_pair.entry((u, v)).or_default().push(i);
        }
        let mut choices: Vec<Vec<Vec<(usize, usize)>>> = Vec::new();
        for (&(u, v), src) in &by_pair {
            let (a, b) = (p[u], p[v]);
            let key = if a <= b { (a, b) } else { (b, a) };
            let dst = &by_pair[&key];
            debug_assert_eq!(src.len(), dst.len());
            let per_class: Vec<Vec<(usize, usize)>> = dst
                .iter()
                .copied()
                .permutations(dst.len())
                .map(|img| src.iter().copied().zip(img).collect())
                .collect();
            choices.push(per_class);
        }
        let mut maps: Vec<Vec<usize>> = vec![vec![usize::MAX; self.edges.len()]];
        for per_class in choices {
            let mut next = Vec::new();
            for m in &maps {
                for assignment in &per_class {
                    let mut q = m.clone();
                    for &(s, d) in assignment {
                        q[s] = d;
                    }
                    next.push(q);
                }
            }
            maps = next;
        }
        maps
    }

    pub fn aut_order(&self) -> u64 {
        let vcount = self.vertex_automorphisms(&[]).len() as u64;
        let edge_factor: u64 = self
            .multiplicity_map()
            .values()
            .map(|&m| crate::num::factorial(m as u64))
            .product();
        vcount * edge_factor
    }

    // ---- contraction ----------------------------------------------------

    /// Contracts the edges in `contracted`; returns the (relaxed) quotient
    /// graph, the vertex map, and the map of surviving edges.
    pub fn contract(&self, contracted: &BTreeSet<usize>) -> (MarkedGraph, Vec<usize>, BTreeMap<usize, usize>) {
        let nv = self.vertices.len();
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(parent: &mut Vec<usize>, v: usize) -> usize {
            if parent[v] != v {
                let r = find(parent, parent[v]);
                parent[v] = r;
                r
            } else {
                v
            }
        }
        for &e in contracted {
            let (u, v) = self.edges[e];
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru] = rv;
            }
        }
        let mut roots: Vec<usize> = (0..nv).map(|v| find(&mut parent, v)).collect();
        let mut root_ids: BTreeMap<usize, usize> = BTreeMap::new();
        for &r in roots.iter().sorted() {
            let next = root_ids.len();
            root_ids.entry(r).or_insert(next);
        }
        let vmap: Vec<usize> = roots.iter().map(|r| root_ids[r]).collect();
        let new_nv = root_ids.len();
        let mut genus = vec![0i64; new_nv];
        let mut legs: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); new_nv];
        for v in 0..nv {
            genus[vmap[v]] += self.vertices[v].genus as i64;
            legs[vmap[v]].extend(self.vertices[v].legs.iter().copied());
        }
        // contracted cycles add genus: b1 of the contracted subgraph per class
        let mut class_edges = vec![0i64; new_nv];
        let mut class_verts = vec![0i64; new_nv];
        for v in 0..nv {
            class_verts[vmap[v]] += 1;
        }
        for &e in contracted {
            let (u, _) = self.edges[e];
            class_edges[vmap[u]] += 1;
        }
        for c in 0..new_nv {
            genus[c] += class_edges[c] - class_verts[c] + 1;
        }
        let vertices: Vec<Vertex> = (0..new_nv)
            .map(|c| Vertex { genus: genus[c] as u32, legs: std::mem::take(&mut legs[c]) })
            .collect();
        let mut edge_items: Vec<((usize, usize), usize)> = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !contracted.contains(i))
            .map(|(i, &(u, v))| {
                let (a, b) = (vmap[u], vmap[v]);
                (if a <= b { (a, b) } else { (b, a) }, i)
            })
            .collect();
        edge_items.sort();
        let mut emap = BTreeMap::new();
        for (new, &(_, old)) in edge_items.iter().enumerate() {
            emap.insert(old, new);
        }
        let edges: Vec<(usize, usize)> = edge_items.iter().map(|&(e, _)| e).collect();
        let graph = MarkedGraph { vertices, edges, n: self.n, g: self.g };
        roots.clear();
        (graph, vmap, emap)
    }

    /// All isomorphisms onto `other` as (vertex map, edge map) pairs.
    pub fn isomorphisms_to(&self, other: &MarkedGraph) -> Vec<(Vec<usize>, Vec<usize>)> {
        if self.num_vertices() != other.num_vertices()
            || self.num_edges() != other.num_edges()
            || self.n != other.n
            || self.g != other.g
        {
            return Vec::new();
        }
        let nv = self.num_vertices();
        let self_mult = self.multiplicity_map();
        let other_mult = other.multiplicity_map();
        let self_sigs: Vec<Vec<i64>> = (0..nv).map(|v| self.signature(v, &[])).collect();
        let other_sigs: Vec<Vec<i64>> = (0..nv).map(|v| other.signature(v, &[])).collect();
        let mut out = Vec::new();
        // candidate images per vertex by signature
        let mut cands: Vec<Vec<usize>> = Vec::new();
        for v in 0..nv {
            cands.push((0..nv).filter(|&w| other_sigs[w] == self_sigs[v]).collect());
        }
        let mut vmap = vec![usize::MAX; nv];
        let mut used = vec![false; nv];
        fn rec(
            v: usize,
            nv: usize,
            cands: &[Vec<usize>],
            vmap: &mut Vec<usize>,
            used: &mut Vec<bool>,
            self_mult: &BTreeMap<(usize, usize), usize>,
            other_mult: &BTreeMap<(usize, usize), usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if v == nv {
                out.push(vmap.clone());
                return;
            }
            for &w in &cands[v] {
                if used[w] {
                    continue;
                }
                // check multiplicities against already-placed vertices
                let ok = (0..=v).all(|u| {
                    let m1 = {
                        let key = if u <= v { (u, v) } else { (v, u) };
                        self_mult.get(&key).copied().unwrap_or(0)
                    };
                    let m2 = {
                        let (a, b) = (vmap[u.min(v)], w);
                        let (a, b) = if u == v { (w, w) } else { (a, b) };
                        let key = if a <= b { (a, b) } else { (b, a) };
                        other_mult.get(&key).copied().unwrap_or(0)
                    };
                    m1 == m2
                });
                if !ok {
                    continue;
                }
                vmap[v] = w;
                used[w] = true;
                rec(v + 1, nv, cands, vmap, used, self_mult, other_mult, out);
                used[w] = false;
                vmap[v] = usize::MAX;
            }
        }
        let mut vmaps = Vec::new();
        rec(0, nv, &cands, &mut vmap, &mut used, &self_mult, &other_mult, &mut vmaps);
        for p in vmaps {
            // edge bijections: per preimage pair class
            let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
            for (i, &(u, v)) in self.edges.iter().enumerate() {
                by_pair.entry((u, v)).or_default().push(i);
            }
            let mut other_by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
            for (i, &(u, v)) in other.edges.iter().enumerate() {
                other_by_pair.entry((u, v)).or_default().push(i);
            }
            let mut class_maps: Vec<Vec<Vec<(usize, usize)>>> = Vec::new();
            for (&(u, v), src) in &by_pair {
                let (a, b) = (p[u], p[v]);
                let key = if a <= b { (a, b) } else { (b, a) };
                let dst = &other_by_pair[&key];
                class_maps.push(
                    dst.iter()
                        .copied()
                        .permutations(dst.len())
                        .map(|img| src.iter().copied().zip(img).collect())
                        .collect(),
                );
            }
            let mut maps: Vec<Vec<usize>> = vec![vec![usize::MAX; self.edges.len()]];
            for per_class in class_maps {
                let mut next = Vec::new();
                for m in &maps {
                    for assignment in &per_class {
                        let mut q = m.clone();
                        for &(s, d) in assignment {
                            q[s] = d;
                        }
                        next.push(q);
                    }
                }
                maps = next;
            }
            for emap in maps {
                out.push((p.clone(), emap));
            }
        }
        out
    }
}

// ---- morphisms ----------------------------------------------------------

/// An edge contraction followed by an isomorphism. The source and target are
/// stored canonically; `vertex_map` is a surjection, `edge_map` a bijection
/// from the non-contracted source edges onto the target edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphMorphism {
    pub vertex_map: Vec<usize>,
    pub contracted: BTreeSet<usize>,
    pub edge_map: BTreeMap<usize, usize>,
}

impl GraphMorphism {
    pub fn identity(g: &MarkedGraph) -> Self {
        GraphMorphism {
            vertex_map: (0..g.num_vertices()).collect(),
            contracted: BTreeSet::new(),
            edge_map: (0..g.num_edges()).map(|e| (e, e)).collect(),
        }
    }

    /// Composes `self: G -> H` with `next: H -> K`.
    pub fn compose(&self, next: &GraphMorphism) -> GraphMorphism {
        let vertex_map = self.vertex_map.iter().map(|&v| next.vertex_map[v]).collect();
        let mut contracted = self.contracted.clone();
        let mut edge_map = BTreeMap::new();
        for (&e, &h) in &self.edge_map {
            if next.contracted.contains(&h) {
                contracted.insert(e);
            } else {
                edge_map.insert(e, next.edge_map[&h]);
            }
        }
        GraphMorphism { vertex_map, contracted, edge_map }
    }

    /// Preimage of a target vertex subset.
    pub fn preimage(&self, set: &VSet) -> VSet {
        self.vertex_map
            .iter()
            .enumerate()
            .filter(|(_, &w)| set.contains(&w))
            .map(|(v, _)| v)
            .collect()
    }
}

/// All morphisms `G -> H` (not modulo automorphisms); empty when none exist.
pub fn contractions_to(g: &MarkedGraph, h: &MarkedGraph) -> Vec<GraphMorphism> {
    let ne_g = g.num_edges();
    let ne_h = h.num_edges();
    if ne_g < ne_h || g.n() != h.n() || g.genus_total() != h.genus_total() {
        return Vec::new();
    }
    let k = ne_g - ne_h;
    let mut out = Vec::new();
    for contracted in (0..ne_g).combinations(k) {
        let cset: BTreeSet<usize> = contracted.into_iter().collect();
        let (quotient, vmap, emap) = g.contract(&cset);
        for (iso_v, iso_e) in quotient.isomorphisms_to(h) {
            let vertex_map = vmap.iter().map(|&c| iso_v[c]).collect();
            let edge_map = emap.iter().map(|(&e, &q)| (e, iso_e[q])).collect();
            out.push(GraphMorphism { vertex_map, contracted: cset.clone(), edge_map });
        }
    }
    out
}

// ---- subdivision ----------------------------------------------------------

/// `G^E`: each edge in `subdivided` is replaced by a length-2 path through a
/// new genus-0 vertex.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub graph: MarkedGraph,
    /// original edge index -> exceptional vertex index in `graph`
    pub exceptional: BTreeMap<usize, usize>,
}

impl Subdivision {
    pub fn exceptional_vertices(&self) -> VSet {
        self.exceptional.values().copied().collect()
    }
}

pub fn subdivide(g: &MarkedGraph, subdivided: &BTreeSet<usize>) -> Subdivision {
    let nv = g.num_vertices();
    let mut vertices = g.vertices().to_vec();
    let mut edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| !subdivided.contains(i))
        .map(|(_, &e)| e)
        .collect();
    let mut exceptional = BTreeMap::new();
    for (slot, &e) in subdivided.iter().enumerate() {
        let (u, v) = g.edge(e);
        let w = nv + slot;
        vertices.push(Vertex { genus: 0, legs: BTreeSet::new() });
        edges.push((u, w));
        edges.push((v, w));
        exceptional.insert(e, w);
    }
    let graph = MarkedGraph::new_relaxed(vertices, edges, g.n()).expect("subdivision is valid");
    Subdivision { graph, exceptional }
}

// ---- vine curves ----------------------------------------------------------

/// Vine-curve data `(i, t, S)`: two vertices of genus `i` and `g-i-t+1`
/// joined by `t` edges, markings `S` (containing 1) on the first vertex.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VineTriple {
    pub i: u32,
    pub t: u32,
    pub s: BTreeSet<u32>,
}

impl VineTriple {
    pub fn new(g: u32, n: u32, i: u32, t: u32, s: BTreeSet<u32>) -> Result<Self> {
        let triple = VineTriple { i, t, s };
        triple.validate(g, n)?;
        Ok(triple)
    }

    pub fn validate(&self, g: u32, n: u32) -> Result<()> {
        let (i, t) = (self.i, self.t);
        if t < 1 || i > g || i + t > g + 1 {
            return Err(Error::InvalidInput(format!("bad vine parameters i={i}, t={t}")));
        }
        if !self.s.contains(&1) {
            return Err(Error::InvalidInput("vine marking set must contain 1".into()));
        }
        if self.s.iter().any(|&l| l == 0 || l > n) {
            return Err(Error::InvalidInput("marking out of range".into()));
        }
        let sc = n as usize - self.s.len();
        if (i, t) == (0, 1) && self.s.len() < 2 {
            return Err(Error::InvalidInput("(0,1) vine needs |S| >= 2".into()));
        }
        if (i, t) == (0, 2) && self.s.is_empty() {
            return Err(Error::InvalidInput("(0,2) vine needs |S| >= 1".into()));
        }
        if (i, t) == (g, 1) && sc < 2 {
            return Err(Error::InvalidInput("(g,1) vine needs |S^c| >= 2".into()));
        }
        if i + 1 == g && t == 2 && sc < 1 {
            return Err(Error::InvalidInput("(g-1,2) vine needs |S^c| >= 1".into()));
        }
        Ok(())
    }

    pub fn second_genus(&self, g: u32) -> u32 {
        g + 1 - self.i - self.t
    }

    pub fn to_graph(&self, g: u32, n: u32) -> Result<MarkedGraph> {
        self.validate(g, n)?;
        let sc: BTreeSet<u32> = (1..=n).filter(|l| !self.s.contains(l)).collect();
        let vertices = vec![
            Vertex { genus: self.i, legs: self.s.clone() },
            Vertex { genus: self.second_genus(g), legs: sc },
        ];
        let edges = vec![(0, 1); self.t as usize];
        MarkedGraph::new(vertices, edges, n)
    }
}

// ---- enumeration ----------------------------------------------------------

/// One canonical representative per isomorphism class of stable `n`-pointed
/// genus-`g` graphs with at most `max_edges` edges, in a deterministic order.
///
/// Edge multisets are grown slot by slot over the vertex pairs in
/// lexicographic order, pruning a branch as soon as an exhausted vertex
/// fails the stability inequality or the remaining slots cannot connect the
/// components seen so far.
pub fn enumerate_stable_graphs(g: u32, n: u32, max_edges: usize) -> Result<Vec<MarkedGraph>> {
    if n == 0 {
        return Err(Error::InvalidInput("at least one marking is required".into()));
    }
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::InvalidInput(format!("(g,n)=({g},{n}) is not stable")));
    }
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out: Vec<MarkedGraph> = Vec::new();
    for nv in 1..=(max_edges + 1) {
        for ne in (nv - 1)..=max_edges {
            let genus_sum = g as i64 + nv as i64 - 1 - ne as i64;
            if genus_sum < 0 {
                continue;
            }
            for genus in crate::num::compositions(genus_sum as u32, nv) {
                for leg_assign in leg_assignments(n, nv) {
                    // skip labelings whose (genus, legs) sequence is unsorted;
                    // every class has a sorted representative
                    let decor: Vec<(u32, &BTreeSet<u32>)> =
                        (0..nv).map(|v| (genus[v], &leg_assign[v])).collect();
                    if decor.windows(2).any(|w| w[0] > w[1]) {
                        continue;
                    }
                    let vertices: Vec<Vertex> = (0..nv)
                        .map(|v| Vertex { genus: genus[v], legs: leg_assign[v].clone() })
                        .collect();
                    grow_edges(&vertices, n, ne, &mut seen, &mut out);
                }
            }
        }
    }
    out.sort_by_key(|g| (g.num_edges(), g.num_vertices(), g.raw_key()));
    Ok(out)
}

fn grow_edges(
    vertices: &[Vertex],
    n: u32,
    ne: usize,
    seen: &mut BTreeSet<String>,
    out: &mut Vec<MarkedGraph>,
) {
    struct Ctx<'a> {
        slots: Vec<(usize, usize)>,
        vertices: &'a [Vertex],
        n: u32,
        /// minimal valence each vertex needs for stability
        need: Vec<i64>,
    }
    fn component_of(edges: &[(usize, usize)], nv: usize) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..nv).collect();
        fn find(parent: &mut Vec<usize>, v: usize) -> usize {
            if parent[v] != v {
                let r = find(parent, parent[v]);
                parent[v] = r;
                r
            } else {
                v
            }
        }
        for &(u, v) in edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                parent[ru] = rv;
            }
        }
        (0..nv).map(|v| find(&mut parent, v)).collect()
    }
    fn rec(
        ctx: &Ctx,
        slot: usize,
        remaining: usize,
        valence: &mut Vec<i64>,
        edges: &mut Vec<(usize, usize)>,
        seen: &mut BTreeSet<String>,
        out: &mut Vec<MarkedGraph>,
    ) {
        let nv = ctx.vertices.len();
        if slot == ctx.slots.len() {
            if remaining > 0 {
                return;
            }
            let Ok(candidate) = MarkedGraph::new(ctx.vertices.to_vec(), edges.clone(), ctx.n)
            else {
                return;
            };
            let key = candidate.canonical_key();
            if seen.insert(key) {
                out.push(candidate.canonical_form().0);
            }
            return;
        }
        let (a, b) = ctx.slots[slot];
        let mut added = 0usize;
        loop {
            // vertex a gains no more edges after its last slot
            let closing_a = b == nv - 1;
            let a_ok = !closing_a || valence[a] >= ctx.need[a];
            if a_ok {
                // every component made of vertices whose slots are all
                // processed must already contain everyone
                let roots = component_of(edges, nv);
                let root_set: BTreeSet<usize> = roots.iter().copied().collect();
                let open_roots: BTreeSet<usize> =
                    (a..nv).map(|v| roots[v]).collect();
                let closed_component_stuck =
                    root_set.len() > 1 && root_set.iter().any(|r| !open_roots.contains(r));
                let joinable = root_set.len() <= 1
                    || (!closed_component_stuck && remaining - added >= root_set.len() - 1);
                if joinable {
                    rec(ctx, slot + 1, remaining - added, valence, edges, seen, out);
                }
            }
            if added == remaining {
                break;
            }
            edges.push((a, b));
            valence[a] += if a == b { 2 } else { 1 };
            if a != b {
                valence[b] += 1;
            }
            added += 1;
        }
        for _ in 0..added {
            edges.pop();
            valence[a] -= if a == b { 2 } else { 1 };
            if a != b {
                valence[b] -= 1;
            }
        }
    }
    let nv = vertices.len();
    let ctx = Ctx {
        slots: (0..nv).flat_map(|i| (i..nv).map(move |j| (i, j))).collect(),
        vertices,
        n,
        need: vertices
            .iter()
            .map(|v| 3 - 2 * v.genus as i64 - v.legs.len() as i64)
            .collect(),
    };
    rec(&ctx, 0, ne, &mut vec![0i64; nv], &mut Vec::new(), seen, out);
}

fn leg_assignments(n: u32, nv: usize) -> Vec<Vec<BTreeSet<u32>>> {
    let mut out = vec![vec![BTreeSet::new(); nv]];
    for l in 1..=n {
        let mut next = Vec::new();
        for assign in &out {
            for v in 0..nv {
                let mut q = assign.clone();
                q[v].insert(l);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

// ---- JSON -----------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub struct GraphJson {
    pub genus_total: u32,
    pub n: u32,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
pub struct VertexJson {
    pub genus: u32,
    pub legs: Vec<u32>,
}

impl MarkedGraph {
    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            genus_total: self.g,
            n: self.n,
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexJson { genus: v.genus, legs: v.legs.iter().copied().collect() })
                .collect(),
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }

    /// Canonical form is re-derived on load.
    pub fn from_json(json: &GraphJson) -> Result<MarkedGraph> {
        let vertices: Vec<Vertex> = json
            .vertices
            .iter()
            .map(|v| Vertex { genus: v.genus, legs: v.legs.iter().copied().collect() })
            .collect();
        let graph = MarkedGraph::new(vertices, json.edges.iter().map(|e| (e[0], e[1])).collect(), json.n)?;
        if graph.genus_total() != json.genus_total {
            return Err(Error::InvalidInput("genus_total mismatch".into()));
        }
        Ok(graph.canonical_form().0)
    }
}

/// The trivial graph: one vertex of genus `g` carrying all markings.
pub fn trivial_graph(g: u32, n: u32) -> Result<MarkedGraph> {
    MarkedGraph::new(vec![Vertex { genus: g, legs: (1..=n).collect() }], vec![], n)
}

/// Forgets the last marking and stabilizes: at most one genus-0 vertex can
/// become unstable, and a single edge contraction fixes it. Returns the
/// stabilized graph and the vertex map.
pub fn forget_last_marking(graph: &MarkedGraph) -> Result<(MarkedGraph, Vec<usize>)> {
    let n = graph.n();
    if n == 0 {
        return Err(Error::InvalidInput("no marking to forget".into()));
    }
    let carrier = graph.leg_vertex(n);
    let vertices: Vec<Vertex> = graph
        .vertices()
        .iter()
        .map(|v| Vertex {
            genus: v.genus,
            legs: v.legs.iter().copied().filter(|&l| l != n).collect(),
        })
        .collect();
    let stripped =
        MarkedGraph::new_relaxed(vertices, graph.edges().to_vec(), n - 1)?;
    if stripped.is_stable_vertex(carrier) {
        return Ok((stripped.clone(), (0..graph.num_vertices()).collect()));
    }
    // the carrier is a genus-0 vertex of total valence+legs two: contract
    // one incident edge (a loop contraction adds genus one)
    let incident = (0..stripped.num_edges())
        .find(|&e| {
            let (a, b) = stripped.edge(e);
            a == carrier || b == carrier
        })
        .ok_or_else(|| Error::InvalidInput("unstable vertex with no edge".into()))?;
    let (contracted, vmap, _) = stripped.contract(&[incident].into_iter().collect());
    if !contracted.is_stable() {
        return Err(Error::InvalidInput("stabilization failed".into()));
    }
    Ok((contracted, vmap))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u32]) -> BTreeSet<u32> {
        v.iter().copied().collect()
    }

    fn vset(v: &[usize]) -> VSet {
        v.iter().copied().collect()
    }

    #[test]
    fn trivial_graph_count() {
        let gs = enumerate_stable_graphs(2, 1, 0).unwrap();
        assert_eq!(gs.len(), 1);
        assert_eq!(gs[0].num_edges(), 0);
        assert_eq!(gs[0].vertex(0).genus, 2);
    }

    #[test]
    fn enumeration_rejects_unmarked() {
        assert!(enumerate_stable_graphs(2, 0, 1).is_err());
        assert!(enumerate_stable_graphs(0, 2, 1).is_err());
    }

    #[test]
    fn genus_two_one_marking_one_edge() {
        // trivial graph, the loop on a genus-1 vertex, and G(1,1,{1})
        let gs = enumerate_stable_graphs(2, 1, 1).unwrap();
        assert_eq!(gs.len(), 3);
    }

    #[test]
    fn enumeration_matches_naive_oracle() {
        // oracle: raw product enumeration without the sorted-labeling cut
        for (g, n, max_edges) in [(2u32, 1u32, 3usize), (2, 2, 2), (3, 1, 2), (3, 2, 2)] {
            let fast = enumerate_stable_graphs(g, n, max_edges).unwrap();
            let mut seen = BTreeSet::new();
            for nv in 1..=(max_edges + 1) {
                for ne in (nv - 1)..=max_edges {
                    let genus_sum = g as i64 + nv as i64 - 1 - ne as i64;
                    if genus_sum < 0 {
                        continue;
                    }
                    for genus in crate::num::compositions(genus_sum as u32, nv) {
                        for legs in leg_assignments(n, nv) {
                            let slots: Vec<(usize, usize)> =
                                (0..nv).flat_map(|i| (i..nv).map(move |j| (i, j))).collect();
                            for mult in crate::num::compositions(ne as u32, slots.len()) {
                                let mut edges = Vec::new();
                                for (idx, &(i, j)) in slots.iter().enumerate() {
                                    for _ in 0..mult[idx] {
                                        edges.push((i, j));
                                    }
                                }
                                let vertices: Vec<Vertex> = (0..nv)
                                    .map(|v| Vertex { genus: genus[v], legs: legs[v].clone() })
                                    .collect();
                                if let Ok(c) = MarkedGraph::new(vertices, edges, n) {
                                    seen.insert(c.canonical_key());
                                }
                            }
                        }
                    }
                }
            }
            assert_eq!(fast.len(), seen.len(), "(g,n,max)=({g},{n},{max_edges})");
        }
    }

    #[test]
    fn canonicalization_idempotent_and_iso_invariant() {
        let a = MarkedGraph::new(
            vec![
                Vertex { genus: 1, legs: set(&[1]) },
                Vertex { genus: 1, legs: set(&[]) },
            ],
            vec![(0, 1), (0, 1)],
            1,
        )
        .unwrap();
        let b = MarkedGraph::new(
            vec![
                Vertex { genus: 1, legs: set(&[]) },
                Vertex { genus: 1, legs: set(&[1]) },
            ],
            vec![(1, 0), (0, 1)],
            1,
        )
        .unwrap();
        assert_eq!(a.canonical_key(), b.canonical_key());
        let (c, _) = a.canonical_form();
        assert_eq!(c.canonical_key(), c.raw_key());
    }

    #[test]
    fn induced_genus_examples() {
        let g = MarkedGraph::new(
            vec![
                Vertex { genus: 1, legs: set(&[1]) },
                Vertex { genus: 1, legs: set(&[]) },
            ],
            vec![(0, 1), (0, 1), (0, 1)],
            1,
        )
        .unwrap();
        assert_eq!(g.induced_genus(&vset(&[0])).unwrap(), 1);
        assert_eq!(g.induced_genus(&vset(&[0, 1])).unwrap(), 4);
        assert_eq!(g.genus_total(), 4);
    }

    #[test]
    fn loop_convention_in_edge_cut() {
        let g = MarkedGraph::new(
            vec![
                Vertex { genus: 1, legs: set(&[1]) },
                Vertex { genus: 1, legs: set(&[]) },
            ],
            vec![(0, 0), (0, 1)],
            1,
        )
        .unwrap();
        let v0 = vset(&[0]);
        let v1 = vset(&[1]);
        assert_eq!(g.edges_between(&v0, &v1).len(), 1);
        assert_eq!(g.edges_between(&v0, &v0).len(), 1); // the loop
    }

    #[test]
    fn automorphisms_of_symmetric_banana() {
        // two genus-1 vertices joined by 2 edges, no decorations breaking symmetry
        let g = MarkedGraph::new_relaxed(
            vec![
                Vertex { genus: 1, legs: set(&[]) },
                Vertex { genus: 1, legs: set(&[]) },
            ],
            vec![(0, 1), (0, 1)],
            0,
        )
        .unwrap();
        assert_eq!(g.automorphisms().len(), 4);
        assert_eq!(g.aut_order(), 4);
    }

    #[test]
    fn vine_automorphisms_are_edge_permutations() {
        for t in 1..=4u32 {
            let triple = VineTriple::new(4, 1, 1, t, set(&[1])).unwrap();
            let graph = triple.to_graph(4, 1).unwrap();
            assert_eq!(graph.aut_order(), crate::num::factorial(t as u64));
        }
    }

    #[test]
    fn contraction_to_self_is_automorphism_group() {
        let g = MarkedGraph::new(
            vec![
                Vertex { genus: 1, legs: set(&[1]) },
                Vertex { genus: 1, legs: set(&[]) },
            ],
            vec![(0, 1), (0, 1)],
            1,
        )
        .unwrap();
        let morphisms = contractions_to(&g, &g);
        assert_eq!(morphisms.len(), g.automorphisms().len());
    }

    #[test]
    fn triangle_to_vine_morphism_classes() {
        // triangle with two genus-k vertices and one genus-0 marked vertex,
        // mapping onto the 2-edge vine with both genus-k vertices merged data
        let k = 1u32;
        let triangle = MarkedGraph::new(
            vec![
                Vertex { genus: 0, legs: set(&[1]) },
                Vertex { genus: k, legs: set(&[]) },
                Vertex { genus: k, legs: set(&[]) },
            ],
            vec![(0, 1), (0, 2), (1, 2)],
            1,
        )
        .unwrap();
        let vine = VineTriple::new(2 * k + 1, 1, k, 2, set(&[1]))
            .unwrap()
            .to_graph(2 * k + 1, 1)
            .unwrap();
        let morphisms = contractions_to(&triangle, &vine);
        assert_eq!(morphisms.len(), 4);
        // exactly 2 classes modulo Aut(target)
        let auts = vine.automorphisms();
        let mut classes: Vec<GraphMorphism> = Vec::new();
        for m in &morphisms {
            let covered = classes.iter().any(|c| {
                auts.iter().any(|(vp, ep)| {
                    let composed = GraphMorphism {
                        vertex_map: c.vertex_map.iter().map(|&v| vp[v]).collect(),
                        contracted: c.contracted.clone(),
                        edge_map: c.edge_map.iter().map(|(&e, &f)| (e, ep[f])).collect(),
                    };
                    composed == *m
                })
            });
            if !covered {
                classes.push(m.clone());
            }
        }
        assert_eq!(classes.len(), 2);
    }

    #[test]
    fn no_contraction_from_trivial_to_bigger() {
        let trivial = trivial_graph(2, 1).unwrap();
        let gs = enumerate_stable_graphs(2, 1, 1).unwrap();
        for g in gs.iter().filter(|g| g.num_edges() > 0) {
            assert!(contractions_to(&trivial, g).is_empty());
        }
    }

    #[test]
    fn rank_compatibility_and_composition() {
        let gs = enumerate_stable_graphs(2, 1, 2).unwrap();
        for a in &gs {
            for b in &gs {
                for f in contractions_to(a, b) {
                    assert_eq!(f.contracted.len(), a.num_edges() - b.num_edges());
                    for c in &gs {
                        for h in contractions_to(b, c) {
                            let composed = f.compose(&h);
                            assert!(contractions_to(a, c).contains(&composed));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn subdivision_counts() {
        let g = MarkedGraph::new(
            vec![Vertex { genus: 1, legs: set(&[1]) }],
            vec![(0, 0)],
            1,
        )
        .unwrap();
        let s = subdivide(&g, &[0usize].into_iter().collect());
        assert_eq!(s.graph.num_vertices(), 2);
        assert_eq!(s.graph.num_edges(), 2);
        assert!(!s.graph.is_stable());
        let empty = subdivide(&g, &BTreeSet::new());
        assert_eq!(empty.graph, g);
    }

    #[test]
    fn graph_json_roundtrip() {
        let gs = enumerate_stable_graphs(2, 2, 2).unwrap();
        for g in &gs {
            let json = g.to_json();
            let text = serde_json::to_string(&json).unwrap();
            let parsed: GraphJson = serde_json::from_str(&text).unwrap();
            let back = MarkedGraph::from_json(&parsed).unwrap();
            assert_eq!(back.canonical_key(), g.canonical_key());
        }
    }
}

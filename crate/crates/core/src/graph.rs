//! Action graphs: a vertex set with one permutation per element of each
//! factor. Edges are derived: for every vertex `p` and nonidentity `c` there is
//! an edge `p → π_c(p)` labelled `c`; walking it backwards reads `c⁻¹`.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::Permutation;
use crate::word::{Alphabet, Factor, FreeProduct, Syllable, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("factor {factor:?} has {got} permutations, expected {expected}")]
    ActionSize { factor: Factor, got: usize, expected: usize },
    #[error("permutation for {factor:?} element {element} has degree {got}, expected {expected}")]
    Degree { factor: Factor, element: usize, got: usize, expected: usize },
    #[error("annotation length {got} does not match vertex count {expected}")]
    Annotation { got: usize, expected: usize },
    #[error("path step {index} does not start where the previous step ended")]
    DisconnectedPath { index: usize },
    #[error("vertex {vertex} out of range")]
    VertexOutOfRange { vertex: usize },
    #[error(transparent)]
    Word(#[from] WordError),
}

/// A violated action-graph law. Every variant carries enough to recheck it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum GraphViolation {
    /// `π_e` moves `vertex`.
    IdentityMoves { factor: Factor, vertex: usize },
    /// `π_y(π_x(vertex)) ≠ π_{x·y}(vertex)`.
    Homomorphism { factor: Factor, x: usize, y: usize, vertex: usize },
    /// `π_element` fixes `fixed` and moves `moved`, both in one factor orbit.
    OrbitRegularity { factor: Factor, element: usize, fixed: usize, moved: usize },
    /// `π_element` fixes `vertex` although the graph must be free.
    NotFree { factor: Factor, element: usize, vertex: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionGraph {
    vertex_count: usize,
    a: Vec<Permutation>,
    b: Vec<Permutation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regions: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    markers: Vec<(String, usize)>,
}

/// One traversal of a derived edge. A forward step leaves `source` along the
/// edge labelled `label`; a backward step arrives at `source` along it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub source: usize,
    pub label: Syllable,
    pub forward: bool,
}

/// A `w`-cycle: the orbit of `start` under `φ(w)`, read syllable by syllable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UCycleRecord {
    pub word: Word,
    pub start: usize,
    /// Number of edges, `length · l(word)`.
    pub edge_count: usize,
    /// Orbit length of `start` under `φ(word)`.
    pub length: usize,
    /// Origins of the edges, in order; `vertices[0] = start`.
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearWitness {
    pub i: usize,
    pub j: usize,
    pub distance: usize,
    /// Shortest path from the vertex at position `i` to the one at `j`.
    pub path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Girth {
    /// `witness` fixes `vertex` and no shorter nonunit reduced word fixes any vertex.
    Exactly { length: usize, witness: Word, vertex: usize },
    /// No nonunit reduced word of length ≤ `limit` fixes a vertex.
    Exceeds { limit: usize },
}

impl Girth {
    pub fn exceeds(&self, bound: usize) -> bool {
        match self {
            Girth::Exactly { length, .. } => *length > bound,
            Girth::Exceeds { limit } => *limit >= bound,
        }
    }
}

impl ActionGraph {
    /// `a[x]`, `b[y]` are the permutations of the factor elements `x`, `y`
    /// (identity included). Only the shape is checked; see [`Self::validate`].
    pub fn new(
        fp: &FreeProduct,
        vertex_count: usize,
        a: Vec<Permutation>,
        b: Vec<Permutation>,
    ) -> Result<Self, GraphError> {
        for (factor, perms) in [(Factor::A, &a), (Factor::B, &b)] {
            let expected = fp.factor(factor).order();
            if perms.len() != expected {
                return Err(GraphError::ActionSize { factor, got: perms.len(), expected });
            }
            for (element, p) in perms.iter().enumerate() {
                if p.len() != vertex_count {
                    return Err(GraphError::Degree { factor, element, got: p.len(), expected: vertex_count });
                }
            }
        }
        Ok(Self { vertex_count, a, b, regions: None, markers: Vec::new() })
    }

    /// Tags every vertex with a region (copy) index.
    pub fn with_regions(mut self, regions: Vec<u32>) -> Result<Self, GraphError> {
        if regions.len() != self.vertex_count {
            return Err(GraphError::Annotation { got: regions.len(), expected: self.vertex_count });
        }
        self.regions = Some(regions);
        Ok(self)
    }

    pub fn with_markers(mut self, markers: Vec<(String, usize)>) -> Self {
        self.markers = markers;
        self
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn regions(&self) -> Option<&[u32]> {
        self.regions.as_deref()
    }

    pub fn markers(&self) -> &[(String, usize)] {
        &self.markers
    }

    pub fn action(&self, f: Factor) -> &[Permutation] {
        match f {
            Factor::A => &self.a,
            Factor::B => &self.b,
        }
    }

    /// Mutable access for tests that corrupt graphs on purpose.
    #[doc(hidden)]
    pub fn action_mut(&mut self, f: Factor) -> &mut Vec<Permutation> {
        match f {
            Factor::A => &mut self.a,
            Factor::B => &mut self.b,
        }
    }

    #[inline]
    pub fn apply(&self, v: usize, s: Syllable) -> usize {
        self.action(s.factor)[s.element].apply(v)
    }

    /// Checks the homomorphism law and per-orbit regularity for both factors,
    /// and global fixpoint-freeness when `require_free`. Returns the first violation.
    pub fn validate(&self, fp: &FreeProduct, require_free: bool) -> Result<(), GraphViolation> {
        for factor in [Factor::A, Factor::B] {
            let group = fp.factor(factor);
            let perms = self.action(factor);
            if let Some(vertex) = (0..self.vertex_count).find(|&v| perms[0].apply(v) != v) {
                return Err(GraphViolation::IdentityMoves { factor, vertex });
            }
            let orbit = self.orbit_ids(factor);
            for element in 1..group.order() {
                let p = &perms[element];
                // per orbit: first fixed vertex and first moved vertex seen
                let mut fixed: HashMap<usize, usize> = HashMap::new();
                let mut moved: HashMap<usize, usize> = HashMap::new();
                for v in 0..self.vertex_count {
                    let o = orbit[v];
                    if p.apply(v) == v {
                        if require_free {
                            return Err(GraphViolation::NotFree { factor, element, vertex: v });
                        }
                        fixed.entry(o).or_insert(v);
                    } else {
                        moved.entry(o).or_insert(v);
                    }
                    if let (Some(&f), Some(&m)) = (fixed.get(&o), moved.get(&o)) {
                        return Err(GraphViolation::OrbitRegularity { factor, element, fixed: f, moved: m });
                    }
                }
            }
            for x in 1..group.order() {
                for y in 1..group.order() {
                    let xy = &perms[group.mul(x, y)];
                    if let Some(vertex) =
                        (0..self.vertex_count).find(|&v| perms[y].apply(perms[x].apply(v)) != xy.apply(v))
                    {
                        return Err(GraphViolation::Homomorphism { factor, x, y, vertex });
                    }
                }
            }
        }
        Ok(())
    }

    /// Orbit index (least vertex of the orbit) of every vertex under one factor.
    pub fn orbit_ids(&self, factor: Factor) -> Vec<usize> {
        let perms = self.action(factor);
        let mut id = vec![usize::MAX; self.vertex_count];
        let mut stack = Vec::new();
        for s in 0..self.vertex_count {
            if id[s] != usize::MAX {
                continue;
            }
            id[s] = s;
            stack.push(s);
            while let Some(v) = stack.pop() {
                for p in &perms[1..] {
                    let x = p.apply(v);
                    if id[x] == usize::MAX {
                        id[x] = s;
                        stack.push(x);
                    }
                }
            }
        }
        id
    }

    /// Right action of a word: syllables applied left to right.
    pub fn act_word(&self, v: usize, w: &Word) -> usize {
        w.syllables().iter().fold(v, |v, &s| self.apply(v, s))
    }

    /// `φ_Γ(w)` as a permutation of the vertices.
    pub fn word_permutation(&self, w: &Word) -> Permutation {
        Permutation::from_images_unchecked((0..self.vertex_count).map(|v| self.act_word(v, w)).collect())
    }

    /// `|φ_Γ(w)|`, saturating at `u128::MAX`.
    pub fn image_order(&self, w: &Word) -> u128 {
        self.word_permutation(w).order()
    }

    /// Label of a path, reduced. Backward steps contribute inverse labels.
    pub fn path_label(&self, fp: &FreeProduct, steps: &[Step]) -> Result<Word, GraphError> {
        let mut at: Option<usize> = None;
        let mut raw = Vec::with_capacity(steps.len());
        for (index, st) in steps.iter().enumerate() {
            if st.source >= self.vertex_count {
                return Err(GraphError::VertexOutOfRange { vertex: st.source });
            }
            fp.factor(st.label.factor)
                .check_element(st.label.element)
                .map_err(|_| WordError::ElementOutOfRange {
                    position: index,
                    factor: st.label.factor,
                    element: st.label.element,
                    order: fp.factor(st.label.factor).order(),
                })?;
            let target = self.apply(st.source, st.label);
            let (from, to) = if st.forward { (st.source, target) } else { (target, st.source) };
            if at.is_some_and(|v| v != from) {
                return Err(GraphError::DisconnectedPath { index });
            }
            at = Some(to);
            raw.push(if st.forward {
                st.label
            } else {
                Syllable::new(st.label.factor, fp.factor(st.label.factor).inverse(st.label.element))
            });
        }
        Ok(fp.reduce(&raw)?)
    }

    /// Neighbours along nonidentity edges in either direction. Since
    /// `π_c⁻¹ = π_{c⁻¹}`, these are the images under all nonidentity elements.
    fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.a[1..].iter().chain(self.b[1..].iter()).map(move |p| p.apply(v)).filter(move |&x| x != v)
    }

    /// Breadth-first distances from `p`, `None` for unreachable vertices.
    pub fn distances_from(&self, p: usize) -> Vec<Option<usize>> {
        self.bounded_bfs(p, usize::MAX).0
    }

    /// Distances up to `depth` and BFS parents.
    fn bounded_bfs(&self, p: usize, depth: usize) -> (Vec<Option<usize>>, Vec<usize>) {
        let mut dist = vec![None; self.vertex_count];
        let mut parent = vec![usize::MAX; self.vertex_count];
        dist[p] = Some(0);
        let mut queue = VecDeque::from([p]);
        while let Some(v) = queue.pop_front() {
            let d = dist[v].expect("queued vertices have a distance");
            if d >= depth {
                continue;
            }
            for x in self.neighbours(v) {
                if dist[x].is_none() {
                    dist[x] = Some(d + 1);
                    parent[x] = v;
                    queue.push_back(x);
                }
            }
        }
        (dist, parent)
    }

    /// `ρ(p, q)`, `None` when unreachable.
    pub fn distance(&self, p: usize, q: usize) -> Option<usize> {
        self.distances_from(p)[q]
    }

    /// One record per orbit of `φ_Γ(w)`, started at the orbit's least vertex.
    pub fn enumerate_u_cycles(&self, w: &Word) -> Result<Vec<UCycleRecord>, GraphError> {
        if w.len() < 2 || !w.is_cyclically_reduced() {
            return Err(WordError::NeedsCyclicLength { length: w.len() }.into());
        }
        let perm = self.word_permutation(w);
        Ok(perm
            .cycles()
            .into_iter()
            .map(|orbit| {
                let start = orbit[0];
                let mut vertices = Vec::with_capacity(orbit.len() * w.len());
                let mut v = start;
                for _ in 0..orbit.len() {
                    for &s in w.syllables() {
                        vertices.push(v);
                        v = self.apply(v, s);
                    }
                }
                debug_assert_eq!(v, start);
                UCycleRecord {
                    word: w.clone(),
                    start,
                    edge_count: vertices.len(),
                    length: orbit.len(),
                    vertices,
                }
            })
            .collect())
    }

    /// The `w`-cycle through `v`.
    pub fn u_cycle_through(&self, w: &Word, v: usize) -> Result<UCycleRecord, GraphError> {
        if v >= self.vertex_count {
            return Err(GraphError::VertexOutOfRange { vertex: v });
        }
        if w.len() < 2 || !w.is_cyclically_reduced() {
            return Err(WordError::NeedsCyclicLength { length: w.len() }.into());
        }
        let mut vertices = Vec::new();
        let mut x = v;
        let mut length = 0;
        loop {
            for &s in w.syllables() {
                vertices.push(x);
                x = self.apply(x, s);
            }
            length += 1;
            if x == v {
                break;
            }
        }
        Ok(UCycleRecord { word: w.clone(), start: v, edge_count: vertices.len(), length, vertices })
    }

    /// Some pair of positions `i ≠ j` with `ρ(v_i, v_j) < min(l + 1, |i − j|, n − |i − j|)`.
    pub fn has_l_near_vertices(&self, cycle: &UCycleRecord, l: usize) -> Option<NearWitness> {
        let n = cycle.vertices.len();
        let mut positions: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, &v) in cycle.vertices.iter().enumerate() {
            positions.entry(v).or_default().push(i);
        }
        // ρ < cyclic separation ≤ n / 2, and ρ ≤ l
        let depth = l.min(n / 2);
        for (i, &v) in cycle.vertices.iter().enumerate() {
            let (dist, parent) = self.bounded_bfs(v, depth);
            let mut best: Option<(usize, usize)> = None;
            for (&x, js) in &positions {
                let Some(rho) = dist[x] else { continue };
                for &j in js {
                    if j == i {
                        continue;
                    }
                    let sep = i.abs_diff(j).min(n - i.abs_diff(j));
                    if rho < (l + 1).min(sep) && best.map_or(true, |(bj, _)| j < bj) {
                        best = Some((j, rho));
                    }
                }
            }
            if let Some((j, distance)) = best {
                let mut path = vec![cycle.vertices[j]];
                while *path.last().expect("nonempty") != v {
                    let last = *path.last().expect("nonempty");
                    path.push(parent[last]);
                }
                path.reverse();
                return Some(NearWitness { i, j, distance, path });
            }
        }
        None
    }

    /// Least length of a nonunit reduced word fixing some vertex, if ≤ `limit`.
    ///
    /// Length 1 occurs exactly when a nonidentity element has a fixed point.
    /// Otherwise every orbit is regular and such words are the cycles of the
    /// bipartite multigraph whose nodes are the `A`- and `B`-orbits and whose
    /// edges are the vertices; the girth of that multigraph is the answer.
    pub fn syllable_girth(&self, fp: &FreeProduct, limit: usize) -> Girth {
        for factor in [Factor::A, Factor::B] {
            for (element, p) in self.action(factor).iter().enumerate().skip(1) {
                if let Some(vertex) = p.fixed_points().next() {
                    if limit >= 1 {
                        let witness = Word::from_reduced(vec![Syllable::new(factor, element)])
                            .expect("single nonidentity syllable");
                        return Girth::Exactly { length: 1, witness, vertex };
                    }
                    return Girth::Exceeds { limit };
                }
            }
        }
        match self.shortest_orbit_cycle(limit) {
            Some(edges) => {
                let witness = self.cycle_word(fp, &edges);
                Girth::Exactly { length: edges.len(), witness, vertex: edges[0] }
            }
            None => Girth::Exceeds { limit },
        }
    }

    /// Shortest cycle of the orbit multigraph with at most `limit` edges, as
    /// its edge sequence (vertices of the action graph).
    fn shortest_orbit_cycle(&self, limit: usize) -> Option<Vec<usize>> {
        let oa = self.orbit_ids(Factor::A);
        let ob = self.orbit_ids(Factor::B);
        // node ids: A-orbits first, then B-orbits
        let mut node_of_a = HashMap::new();
        let mut node_of_b = HashMap::new();
        for v in 0..self.vertex_count {
            let next = node_of_a.len();
            node_of_a.entry(oa[v]).or_insert(next);
        }
        for v in 0..self.vertex_count {
            let next = node_of_a.len() + node_of_b.len();
            node_of_b.entry(ob[v]).or_insert(next);
        }
        let nodes = node_of_a.len() + node_of_b.len();
        let ends: Vec<(usize, usize)> =
            (0..self.vertex_count).map(|v| (node_of_a[&oa[v]], node_of_b[&ob[v]])).collect();
        let mut incident = vec![Vec::new(); nodes];
        for (e, &(x, y)) in ends.iter().enumerate() {
            incident[x].push(e);
            incident[y].push(e);
        }
        let other = |e: usize, n: usize| if ends[e].0 == n { ends[e].1 } else { ends[e].0 };

        let mut best: Option<(usize, usize, usize, Vec<usize>, Vec<usize>)> = None; // (len, root, edge, parent_edge, dist)
        let mut dist = vec![usize::MAX; nodes];
        let mut parent_edge = vec![usize::MAX; nodes];
        for root in 0..nodes {
            let bound = best.as_ref().map_or(limit, |b| b.0 - 1);
            if bound < 2 {
                break;
            }
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            parent_edge.iter_mut().for_each(|p| *p = usize::MAX);
            dist[root] = 0;
            let mut queue = VecDeque::from([root]);
            let mut found: Option<(usize, usize)> = None;
            'bfs: while let Some(n) = queue.pop_front() {
                // a cycle through this level has length ≥ 2·dist[n] + 1
                if 2 * dist[n] + 1 > bound {
                    break;
                }
                for &e in &incident[n] {
                    if e == parent_edge[n] {
                        continue;
                    }
                    let x = other(e, n);
                    if dist[x] == usize::MAX {
                        dist[x] = dist[n] + 1;
                        parent_edge[x] = e;
                        queue.push_back(x);
                    } else {
                        let len = dist[n] + dist[x] + 1;
                        if len <= bound && found.map_or(true, |(l, _)| len < l) {
                            found = Some((len, e));
                            if len == 2 * dist[n] + 1 {
                                break 'bfs;
                            }
                        }
                    }
                }
            }
            if let Some((len, e)) = found {
                best = Some((len, root, e, parent_edge.clone(), dist.clone()));
            }
        }
        let (len, root, e, parent_edge, _) = best?;
        // walk both endpoints of the closing edge back to the root
        let (x, y) = ends[e];
        let trail = |mut n: usize| {
            let mut edges = Vec::new();
            while n != root {
                let pe = parent_edge[n];
                edges.push(pe);
                n = other(pe, n);
            }
            edges
        };
        let mut left = trail(x);
        let right = trail(y);
        left.reverse();
        let mut cycle = left;
        cycle.push(e);
        cycle.extend(right);
        debug_assert_eq!(cycle.len(), len);
        Some(cycle)
    }

    /// Reads the word of a cycle of the orbit multigraph: consecutive edges
    /// share an orbit, and the element carrying one to the next is the syllable.
    fn cycle_word(&self, fp: &FreeProduct, edges: &[usize]) -> Word {
        let oa = self.orbit_ids(Factor::A);
        let n = edges.len();
        // girth ≥ 4 here, so consecutive edges share exactly one orbit
        let step = |from: usize, to: usize| -> Syllable {
            let factor = if oa[from] == oa[to] { Factor::A } else { Factor::B };
            let element = (1..fp.factor(factor).order())
                .find(|&c| self.action(factor)[c].apply(from) == to)
                .expect("consecutive cycle edges lie in one regular orbit");
            Syllable::new(factor, element)
        };
        let mut raw = Vec::with_capacity(n);
        if n == 2 {
            let (u, v) = (edges[0], edges[1]);
            let sa = (1..fp.a().order()).find(|&c| self.a[c].apply(u) == v).expect("same A-orbit");
            let sb = (1..fp.b().order()).find(|&c| self.b[c].apply(v) == u).expect("same B-orbit");
            raw.push(Syllable::a(sa));
            raw.push(Syllable::b(sb));
        } else {
            for i in 0..n {
                raw.push(step(edges[i], edges[(i + 1) % n]));
            }
        }
        let w = Word::from_reduced(raw).expect("cycle syllables alternate");
        debug_assert_eq!(self.act_word(edges[0], &w), edges[0]);
        w
    }

    /// DOT rendering: one node per vertex, one labelled edge per vertex and
    /// nonidentity element (loops included); regions become clusters.
    pub fn to_dot(&self, alphabet: &Alphabet) -> String {
        let mut out = String::from("digraph action_graph {\n  node [shape=circle];\n");
        let marked: HashMap<usize, &str> = self.markers.iter().map(|(n, v)| (*v, n.as_str())).collect();
        let node = |out: &mut String, v: usize| {
            match marked.get(&v) {
                Some(name) => writeln!(out, "    {v} [label=\"{v}\\n{name}\", style=filled, fillcolor=gold];"),
                None => writeln!(out, "    {v};"),
            }
            .expect("writing to a String");
        };
        match &self.regions {
            Some(regions) => {
                let mut by_region: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
                for (v, &r) in regions.iter().enumerate() {
                    by_region.entry(r).or_default().push(v);
                }
                for (r, vs) in by_region {
                    writeln!(out, "  subgraph cluster_{r} {{\n    label=\"region {r}\";").expect("String");
                    for v in vs {
                        node(&mut out, v);
                    }
                    out.push_str("  }\n");
                }
            }
            None => (0..self.vertex_count).for_each(|v| node(&mut out, v)),
        }
        for factor in [Factor::A, Factor::B] {
            let colour = if factor == Factor::A { "blue" } else { "red" };
            for (c, p) in self.action(factor).iter().enumerate().skip(1) {
                let label = alphabet.name(Syllable::new(factor, c));
                for v in 0..self.vertex_count {
                    writeln!(out, "  {v} -> {} [label=\"{label}\", color={colour}];", p.apply(v)).expect("String");
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

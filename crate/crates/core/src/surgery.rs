//! Cut-and-splice of `m` copies of a base graph along a `u`-cycle.
//!
//! Copies are joined by conjugating the `A`-action with a role bijection:
//! `role(n_i) = p_{k+2}^i`, `role(p_{k+2}^{i+1}) = p_2^i`, identity elsewhere,
//! and every `p_2^i` is fixed by `A`. `B` acts copy-wise and fixes every `n_i`.
//!
//! All copies are alike, so the construction is the `m`-fold cyclic lift of a
//! one-copy [`VoltageGraph`] whose edges carry a copy shift in `{-1, 0, 1}`.
//! Orbits of a word on the voltage graph have a length `ℓ` and a winding `ω`
//! (net shift); each lifts to `gcd(ω, m)` orbits of length `ℓ·m / gcd(ω, m)`.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{gcd, lcm_saturating};
use crate::graph::{ActionGraph, UCycleRecord};
use crate::group::Permutation;
use crate::word::{Factor, FreeProduct, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurgeryError {
    #[error("word must be cyclically reduced of length at least 2")]
    NotCyclic,
    #[error("k' must be positive")]
    ZeroKPrime,
    #[error("base order {order} of u does not exceed k' = {k_prime}")]
    OrderTooSmall { order: u128, k_prime: usize },
    #[error("u-cycle has {edges} edges, fewer than k + 2 = {needed}")]
    CycleTooShort { edges: usize, needed: usize },
    #[error("u-cycle through the start has {edges} edges but l(u)·|φ(u)| = {expected}")]
    CycleNotMaximal { edges: usize, expected: u128 },
    #[error("markers p_{i} and p_{j} coincide at vertex {vertex}")]
    MarkerCollision { i: usize, j: usize, vertex: usize },
    #[error("p_1 and p_(k+1) lie in the same A-component")]
    SameAComponent,
    #[error("need at least {min} copies, got {got}")]
    TooFewCopies { min: usize, got: usize },
    #[error("spliced u-cycle has length {got}, expected {expected}")]
    SplicedLength { got: usize, expected: u128 },
}

/// A chosen `u`-cycle of the base and the splice depth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurgeryPlan {
    /// `u` rotated so that its first syllable lies in `A`.
    pub u: Word,
    /// Number of leading syllables moved to the end of the input word.
    pub rotation: usize,
    pub k_prime: usize,
    /// `k = k' · l(u)`.
    pub k: usize,
    /// `|φ(u)|` on the base.
    pub base_order: u128,
    pub base_vertices: usize,
    /// `markers[i - 1] = p_i` for `1 ≤ i ≤ k + 2`.
    pub markers: Vec<usize>,
}

impl SurgeryPlan {
    pub fn p(&self, i: usize) -> usize {
        self.markers[i - 1]
    }

    /// `D = |φ(u)| − k'`, the per-copy length of the spliced cycle.
    pub fn spliced_per_copy(&self) -> u128 {
        self.base_order - self.k_prime as u128
    }
}

/// Rotates `u` so its first syllable is in `A` and returns the `u`-cycle through
/// the least vertex.
pub fn select_u_cycle(base: &ActionGraph, u: &Word) -> Result<(Word, usize, UCycleRecord), SurgeryError> {
    if u.len() < 2 || !u.is_cyclically_reduced() {
        return Err(SurgeryError::NotCyclic);
    }
    let rotation = usize::from(u.syllables()[0].factor != Factor::A);
    let rotated = u.rotate(rotation);
    let cycle = base.u_cycle_through(&rotated, 0).map_err(|_| SurgeryError::NotCyclic)?;
    Ok((rotated, rotation, cycle))
}

impl SurgeryPlan {
    /// Chooses the cycle and checks every precondition of the construction.
    pub fn new(fp: &FreeProduct, base: &ActionGraph, u: &Word, k_prime: usize) -> Result<Self, SurgeryError> {
        let _ = fp;
        if k_prime == 0 {
            return Err(SurgeryError::ZeroKPrime);
        }
        let (rotated, rotation, cycle) = select_u_cycle(base, u)?;
        let base_order = base.image_order(&rotated);
        if base_order <= k_prime as u128 {
            return Err(SurgeryError::OrderTooSmall { order: base_order, k_prime });
        }
        let expected = base_order * rotated.len() as u128;
        if cycle.edge_count as u128 != expected {
            return Err(SurgeryError::CycleNotMaximal { edges: cycle.edge_count, expected });
        }
        let k = k_prime * rotated.len();
        if k + 2 > cycle.edge_count {
            return Err(SurgeryError::CycleTooShort { edges: cycle.edge_count, needed: k + 2 });
        }
        let markers = cycle.vertices[..k + 2].to_vec();
        let named = [1, 2, k + 1, k + 2];
        for (x, &i) in named.iter().enumerate() {
            for &j in &named[x + 1..] {
                if markers[i - 1] == markers[j - 1] {
                    return Err(SurgeryError::MarkerCollision { i, j, vertex: markers[i - 1] });
                }
            }
        }
        let orbit_a = base.orbit_ids(Factor::A);
        if orbit_a[markers[0]] == orbit_a[markers[k]] {
            return Err(SurgeryError::SameAComponent);
        }
        Ok(Self {
            u: rotated,
            rotation,
            k_prime,
            k,
            base_order,
            base_vertices: base.vertex_count(),
            markers,
        })
    }
}

/// One copy of the base plus the new vertex `n = N`, each edge carrying the
/// copy shift it induces in the lift.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoltageGraph {
    vertex_count: usize,
    /// `[factor][element][vertex] = (target, shift)`.
    edges: [Vec<Vec<(u32, i8)>>; 2],
}

/// An orbit of a word on the voltage graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoltageOrbit {
    pub start: usize,
    pub length: usize,
    pub winding: i64,
}

impl VoltageGraph {
    pub fn build(base: &ActionGraph, plan: &SurgeryPlan) -> Self {
        let n = base.vertex_count();
        let (p2, pk2) = (plan.p(2), plan.p(plan.k + 2));
        // role and its inverse, with the copy shift they introduce
        let role = |x: usize| -> (usize, i8) {
            if x == n {
                (pk2, 0)
            } else if x == pk2 {
                (p2, -1)
            } else {
                (x, 0)
            }
        };
        let role_inv = |y: usize| -> (usize, i8) {
            if y == p2 {
                (pk2, 1)
            } else if y == pk2 {
                (n, 0)
            } else {
                (y, 0)
            }
        };
        let a = base
            .action(Factor::A)
            .iter()
            .map(|p| {
                (0..=n)
                    .map(|x| {
                        if x == p2 {
                            return (p2 as u32, 0);
                        }
                        let (y, s1) = role(x);
                        let (z, s2) = role_inv(p.apply(y));
                        (z as u32, s1 + s2)
                    })
                    .collect()
            })
            .collect();
        let b = base
            .action(Factor::B)
            .iter()
            .map(|p| (0..=n).map(|x| (if x == n { n } else { p.apply(x) } as u32, 0)).collect())
            .collect();
        Self { vertex_count: n + 1, edges: [a, b] }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    #[inline]
    fn step(&self, v: usize, f: Factor, c: usize) -> (usize, i8) {
        let (t, s) = self.edges[f.index()][c][v];
        (t as usize, s)
    }

    pub fn orbits(&self, w: &Word) -> Vec<VoltageOrbit> {
        let mut seen = vec![false; self.vertex_count];
        let mut out = Vec::new();
        for start in 0..self.vertex_count {
            if seen[start] {
                continue;
            }
            let (mut v, mut length, mut winding) = (start, 0, 0i64);
            while !seen[v] {
                seen[v] = true;
                for s in w.syllables() {
                    let (t, shift) = self.step(v, s.factor, s.element);
                    v = t;
                    winding += i64::from(shift);
                }
                length += 1;
            }
            debug_assert_eq!(v, start);
            out.push(VoltageOrbit { start, length, winding });
        }
        out
    }

    /// The orbit of `w` through `start`.
    pub fn orbit_through(&self, w: &Word, start: usize) -> VoltageOrbit {
        let (mut v, mut length, mut winding) = (start, 0, 0i64);
        loop {
            for s in w.syllables() {
                let (t, shift) = self.step(v, s.factor, s.element);
                v = t;
                winding += i64::from(shift);
            }
            length += 1;
            if v == start {
                return VoltageOrbit { start, length, winding };
            }
        }
    }

    /// `|φ(w)|` on the `copies`-fold lift, from orbit data alone.
    pub fn predicted_order(&self, w: &Word, copies: usize) -> u128 {
        self.orbits(w).iter().fold(1, |acc, o| {
            let g = gcd(o.winding.unsigned_abs() as u128, copies as u128);
            lcm_saturating(acc, o.length as u128 * copies as u128 / g)
        })
    }

    /// The explicit `copies`-fold lift. Vertex `(c, x)` has id `c·(N + 1) + x`.
    pub fn lift(&self, fp: &FreeProduct, copies: usize) -> ActionGraph {
        let n1 = self.vertex_count;
        let total = copies * n1;
        let perms = |f: Factor| -> Vec<Permutation> {
            self.edges[f.index()]
                .iter()
                .map(|e| {
                    let mut images = Vec::with_capacity(total);
                    for c in 0..copies {
                        for &(t, s) in e {
                            let copy = (c as i64 + i64::from(s)).rem_euclid(copies as i64) as usize;
                            images.push(copy * n1 + t as usize);
                        }
                    }
                    Permutation::from_images_unchecked(images)
                })
                .collect()
        };
        let regions = (0..total).map(|v| (v / n1) as u32).collect();
        ActionGraph::new(fp, total, perms(Factor::A), perms(Factor::B))
            .expect("lift has the base shape")
            .with_regions(regions)
            .expect("one region per vertex")
    }
}

/// A `w`-orbit of an explicit spliced graph with its net number of turns
/// around the copy cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindingOrbit {
    pub start: usize,
    pub length: usize,
    pub winding: i64,
}

/// The spliced graph on `copies · (N + 1)` vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaGraph {
    pub graph: ActionGraph,
    pub copies: usize,
    pub plan: SurgeryPlan,
}

/// Minimum copy count for which region shifts are unambiguous.
pub const MIN_COPIES: usize = 3;

/// `Δ` with `m ≥ 3` copies; verifies validity and the spliced length.
pub fn build_delta(
    fp: &FreeProduct,
    base: &ActionGraph,
    plan: &SurgeryPlan,
    m: usize,
) -> Result<DeltaGraph, SurgeryError> {
    if m < MIN_COPIES {
        return Err(SurgeryError::TooFewCopies { min: MIN_COPIES, got: m });
    }
    let voltage = VoltageGraph::build(base, plan);
    let graph = voltage.lift(fp, m);
    let mut d = DeltaGraph { graph, copies: m, plan: plan.clone() };
    let markers = d.marker_names();
    d.graph = d.graph.with_markers(markers);
    debug_assert!(d.graph.validate(fp, false).is_ok());
    let expected = plan.spliced_per_copy() * m as u128;
    let got = d.spliced_cycle().length;
    if got as u128 != expected {
        return Err(SurgeryError::SplicedLength { got, expected });
    }
    Ok(d)
}

/// `Λ_m`: the spliced graph with `3m` copies.
pub fn build_lambda(
    fp: &FreeProduct,
    base: &ActionGraph,
    plan: &SurgeryPlan,
    m: usize,
) -> Result<DeltaGraph, SurgeryError> {
    if m == 0 {
        return Err(SurgeryError::TooFewCopies { min: 1, got: 0 });
    }
    build_delta(fp, base, plan, 3 * m)
}

/// Result of the region-span check on one word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfinementReport {
    pub pass: bool,
    pub cycles_checked: usize,
    /// Cycles (other than the spliced one) visiting more than two
    /// consecutive copies: start vertex, length, visited copies.
    pub violations: Vec<(usize, usize, Vec<usize>)>,
}

impl DeltaGraph {
    fn stride(&self) -> usize {
        self.plan.base_vertices + 1
    }

    /// Copy index in `[0, copies)`.
    pub fn region_of(&self, v: usize) -> usize {
        v / self.stride()
    }

    pub fn vertex(&self, copy: usize, x: usize) -> usize {
        copy * self.stride() + x
    }

    /// `p_i` in a copy.
    pub fn marker(&self, i: usize, copy: usize) -> usize {
        self.vertex(copy, self.plan.p(i))
    }

    /// The new vertex `n` of a copy.
    pub fn new_vertex(&self, copy: usize) -> usize {
        self.vertex(copy, self.plan.base_vertices)
    }

    /// Base-copy vertex whose `A`-neighbourhood `v` takes over; `None` for the `p_2^i`.
    pub fn role_of(&self, v: usize) -> Option<usize> {
        let (c, x) = (v / self.stride(), v % self.stride());
        let n = self.plan.base_vertices;
        let (p2, pk2) = (self.plan.p(2), self.plan.p(self.plan.k + 2));
        if x == p2 {
            None
        } else if x == n {
            Some(self.vertex(c, pk2))
        } else if x == pk2 {
            Some(self.vertex((c + self.copies - 1) % self.copies, p2))
        } else {
            Some(v)
        }
    }

    fn marker_names(&self) -> Vec<(String, usize)> {
        let k = self.plan.k;
        let mut out = Vec::new();
        for c in 0..self.copies {
            for (name, i) in [("p1", 1), ("p2", 2), ("pk+1", k + 1), ("pk+2", k + 2)] {
                out.push((format!("{name}^{}", c + 1), self.marker(i, c)));
            }
            out.push((format!("n^{}", c + 1), self.new_vertex(c)));
        }
        out
    }

    pub fn spliced_start(&self) -> usize {
        self.marker(1, 0)
    }

    /// The `u`-cycle through `p_1` of the first copy.
    pub fn spliced_cycle(&self) -> UCycleRecord {
        self.graph.u_cycle_through(&self.plan.u, self.spliced_start()).expect("plan word is cyclic")
    }

    /// Signed copy shift of one step, read from regions (`copies ≥ 3`).
    fn shift(&self, from: usize, to: usize) -> i64 {
        let d = (self.region_of(to) + self.copies - self.region_of(from)) % self.copies;
        match d {
            0 => 0,
            1 => 1,
            d if d == self.copies - 1 => -1,
            _ => unreachable!("edges join equal or adjacent copies"),
        }
    }

    /// Every `w`-orbit with its winding (net copy shift divided by the copy count).
    pub fn winding_orbits(&self, w: &Word) -> Vec<WindingOrbit> {
        let n = self.graph.vertex_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let (mut v, mut length, mut total) = (start, 0, 0i64);
            while !seen[v] {
                seen[v] = true;
                for &s in w.syllables() {
                    let t = self.graph.apply(v, s);
                    total += self.shift(v, t);
                    v = t;
                }
                length += 1;
            }
            debug_assert_eq!(total % self.copies as i64, 0);
            out.push(WindingOrbit { start, length, winding: total / self.copies as i64 });
        }
        out
    }

    /// Lengths of zero-winding `w`-orbits with multiplicities divided by the
    /// copy count (each such orbit repeats once per copy).
    pub fn confined_spectrum(&self, w: &Word) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for o in self.winding_orbits(w).into_iter().filter(|o| o.winding == 0) {
            *counts.entry(o.length).or_insert(0) += 1;
        }
        for c in counts.values_mut() {
            debug_assert_eq!(*c % self.copies, 0);
            *c /= self.copies;
        }
        counts
    }

    /// Region-span check: every `w`-cycle other than the spliced one must
    /// stay within two cyclically consecutive copies.
    pub fn verify_confinement(&self, w: &Word) -> ConfinementReport {
        let spliced: HashSet<usize> = if *w == self.plan.u {
            self.spliced_cycle().vertices.into_iter().collect()
        } else {
            HashSet::new()
        };
        let n = self.graph.vertex_count();
        let mut seen = vec![false; n];
        let mut violations = Vec::new();
        let mut cycles_checked = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut copies = HashSet::new();
            let (mut v, mut length) = (start, 0);
            while !seen[v] {
                seen[v] = true;
                for &s in w.syllables() {
                    copies.insert(self.region_of(v));
                    v = self.graph.apply(v, s);
                }
                length += 1;
            }
            if spliced.contains(&start) {
                continue;
            }
            cycles_checked += 1;
            let mut visited: Vec<usize> = copies.into_iter().collect();
            visited.sort_unstable();
            let ok = match visited.as_slice() {
                [_] => true,
                [x, y] => y - x == 1 || (*x == 0 && *y == self.copies - 1),
                _ => false,
            };
            if !ok {
                violations.push((start, length, visited));
            }
        }
        ConfinementReport { pass: violations.is_empty(), cycles_checked, violations }
    }

    /// Drawn regions containing each vertex: copy `j` together with the
    /// `A`-components of `p_1^j`, `p_{k+1}^j` and `p_{k+2}^j`.
    pub fn drawn_regions(&self) -> Vec<Vec<usize>> {
        let orbit = self.graph.orbit_ids(Factor::A);
        let mut members: Vec<Vec<usize>> =
            (0..self.graph.vertex_count()).map(|v| vec![self.region_of(v)]).collect();
        let k = self.plan.k;
        for j in 0..self.copies {
            let roots: HashSet<usize> =
                [1, k + 1, k + 2].iter().map(|&i| orbit[self.marker(i, j)]).collect();
            for (v, m) in members.iter_mut().enumerate() {
                if roots.contains(&orbit[v]) && !m.contains(&j) {
                    m.push(j);
                }
            }
        }
        for m in &mut members {
            m.sort_unstable();
        }
        members
    }

    /// Pairs of drawn regions that share a vertex.
    pub fn region_intersections(&self) -> HashSet<(usize, usize)> {
        let mut pairs = HashSet::new();
        for m in self.drawn_regions() {
            for (i, &x) in m.iter().enumerate() {
                for &y in &m[i + 1..] {
                    pairs.insert((x, y));
                }
            }
        }
        pairs
    }
}

//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the library routine it is used to check.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use freeprod::graph::{ActionGraph, GraphViolation};
use freeprod::word::Alphabet;
use freeprod::{Factor, FiniteGroup, FreeProduct, Permutation, Syllable, Word};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn z2_z3() -> FreeProduct {
    FreeProduct::new(FiniteGroup::cyclic(2), FiniteGroup::cyclic(3))
}

/// Tokens `e, a, a2, …` and `e, b, b2, …`.
pub fn w(fp: &FreeProduct, text: &str) -> Word {
    Alphabet::default_for(fp).parse(fp, text).expect("test word parses")
}

/// Every reduced word with at most `max_len` syllables, by explicit alternation.
pub fn all_reduced_words(fp: &FreeProduct, max_len: usize) -> Vec<Word> {
    let mut out = vec![Vec::<Syllable>::new()];
    let mut frontier = vec![Vec::<Syllable>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for word in &frontier {
            for f in [Factor::A, Factor::B] {
                if word.last().is_some_and(|s| s.factor == f) {
                    continue;
                }
                for e in 1..fp.factor(f).order() {
                    let mut x = word.clone();
                    x.push(Syllable::new(f, e));
                    next.push(x);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.into_iter().map(|s| Word::from_reduced(s).expect("alternating by construction")).collect()
}

/// Free reduction by a stack: merge equal-factor neighbours, drop identities.
pub fn naive_reduce(fp: &FreeProduct, raw: &[Syllable]) -> Vec<Syllable> {
    let mut stack: Vec<Syllable> = Vec::new();
    for &s in raw {
        if s.element == 0 {
            continue;
        }
        match stack.last().copied() {
            Some(top) if top.factor == s.factor => {
                stack.pop();
                let e = fp.factor(s.factor).mul(top.element, s.element);
                if e != 0 {
                    stack.push(Syllable::new(s.factor, e));
                }
            }
            _ => stack.push(s),
        }
    }
    stack
}

pub fn naive_inverse(fp: &FreeProduct, w: &[Syllable]) -> Vec<Syllable> {
    w.iter().rev().map(|s| Syllable::new(s.factor, fp.factor(s.factor).inverse(s.element))).collect()
}

pub fn naive_mul(fp: &FreeProduct, x: &[Syllable], y: &[Syllable]) -> Vec<Syllable> {
    let mut raw = x.to_vec();
    raw.extend_from_slice(y);
    naive_reduce(fp, &raw)
}

/// Strips conjugating syllable pairs, merging the last pair when the word
/// begins and ends in the same factor.
pub fn naive_cyclic_reduce(fp: &FreeProduct, w: &[Syllable]) -> Vec<Syllable> {
    let mut w = naive_reduce(fp, w);
    while w.len() >= 2 && w[0].factor == w[w.len() - 1].factor {
        let first = w.remove(0);
        w.push(first);
        w = naive_reduce(fp, &w);
    }
    w
}

/// Conjugacy by rotations of cyclic reductions, with in-factor table search
/// for short words.
pub fn rotation_conjugate(fp: &FreeProduct, x: &[Syllable], y: &[Syllable]) -> bool {
    let rx = naive_cyclic_reduce(fp, x);
    let ry = naive_cyclic_reduce(fp, y);
    if rx.len() != ry.len() {
        return false;
    }
    match rx.len() {
        0 => true,
        1 => {
            let g = fp.factor(rx[0].factor);
            rx[0].factor == ry[0].factor
                && (0..g.order()).any(|c| g.mul(g.mul(g.inverse(c), rx[0].element), c) == ry[0].element)
        }
        n => (0..n).any(|k| rx[k..].iter().chain(&rx[..k]).eq(ry.iter())),
    }
}

/// Conjugacy by search over every conjugator in `conjugators`.
pub fn conjugator_search(fp: &FreeProduct, x: &[Syllable], y: &[Syllable], conjugators: &[Word]) -> bool {
    let y = naive_reduce(fp, y);
    conjugators.iter().any(|c| {
        let c = c.syllables();
        naive_mul(fp, &naive_mul(fp, &naive_inverse(fp, c), x), c) == y
    })
}

pub fn naive_pow(fp: &FreeProduct, w: &[Syllable], e: i64) -> Vec<Syllable> {
    let base = if e < 0 { naive_inverse(fp, w) } else { w.to_vec() };
    let mut out = Vec::new();
    for _ in 0..e.unsigned_abs() {
        out = naive_mul(fp, &out, &base);
    }
    out
}

/// Cyclic group acting on `n` points: random orbits of divisor sizes,
/// rotated by the element index. Not necessarily free.
fn cyclic_action(order: usize, n: usize, free: bool, rng: &mut impl Rng) -> Vec<Permutation> {
    let divisors: Vec<usize> = (1..=order).filter(|d| order % d == 0 && (!free || *d == order)).collect();
    let mut points: Vec<usize> = (0..n).collect();
    points.shuffle(rng);
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    let mut rest = &points[..];
    while !rest.is_empty() {
        let fits: Vec<usize> = divisors.iter().copied().filter(|&d| d <= rest.len()).collect();
        let d = *fits.choose(rng).expect("1 or the order always fits when allowed");
        orbits.push(rest[..d].to_vec());
        rest = &rest[d..];
    }
    (0..order)
        .map(|g| {
            let mut images: Vec<usize> = (0..n).collect();
            for orbit in &orbits {
                for (i, &v) in orbit.iter().enumerate() {
                    images[v] = orbit[(i + g) % orbit.len()];
                }
            }
            Permutation::from_images(images).expect("rotation of blocks")
        })
        .collect()
}

/// A random action graph for cyclic factors; `n` must be divisible by both
/// orders when `free`.
pub fn random_cyclic_graph(fp: &FreeProduct, n: usize, free: bool, rng: &mut impl Rng) -> ActionGraph {
    let a = cyclic_action(fp.a().order(), n, free, rng);
    let b = cyclic_action(fp.b().order(), n, free, rng);
    ActionGraph::new(fp, n, a, b).expect("shapes match")
}

/// Union-find free orbit computation.
pub fn orbits(perms: &[Permutation], n: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for p in perms {
        for v in 0..n {
            let (x, y) = (find(&mut parent, v), find(&mut parent, p.apply(v)));
            parent[x] = parent[y];
        }
    }
    (0..n).map(|v| find(&mut parent, v)).collect()
}

/// The action-graph laws checked directly: identity acts trivially, the
/// right-action law holds everywhere, and on each factor orbit every element
/// fixes all points or none.
pub fn laws_hold(fp: &FreeProduct, g: &ActionGraph) -> bool {
    let n = g.vertex_count();
    for f in [Factor::A, Factor::B] {
        let group = fp.factor(f);
        let perms = g.action(f);
        if !perms[0].is_identity() {
            return false;
        }
        for x in 0..group.order() {
            for y in 0..group.order() {
                if (0..n).any(|v| perms[y].apply(perms[x].apply(v)) != perms[group.mul(x, y)].apply(v)) {
                    return false;
                }
            }
        }
        let orbit = orbits(perms, n);
        for p in perms {
            let mut state: HashMap<usize, bool> = HashMap::new();
            for v in 0..n {
                let fixed = p.apply(v) == v;
                if *state.entry(orbit[v]).or_insert(fixed) != fixed {
                    return false;
                }
            }
        }
    }
    true
}

pub fn is_free(fp: &FreeProduct, g: &ActionGraph) -> bool {
    [Factor::A, Factor::B].iter().all(|&f| {
        (1..fp.factor(f).order()).all(|e| (0..g.vertex_count()).all(|v| g.action(f)[e].apply(v) != v))
    })
}

pub fn act(g: &ActionGraph, v: usize, w: &[Syllable]) -> usize {
    w.iter().fold(v, |v, s| g.action(s.factor)[s.element].apply(v))
}

/// Least length of a nonunit reduced word fixing some vertex, by exhaustive
/// enumeration up to `limit`.
pub fn min_dead_word(fp: &FreeProduct, g: &ActionGraph, limit: usize) -> Option<usize> {
    all_reduced_words(fp, limit)
        .into_iter()
        .filter(|w| !w.is_empty())
        .filter(|w| (0..g.vertex_count()).any(|v| act(g, v, w.syllables()) == v))
        .map(|w| w.len())
        .min()
}

/// Undirected distances over all labelled edges.
pub fn bfs(g: &ActionGraph, fp: &FreeProduct, from: usize) -> Vec<Option<usize>> {
    let n = g.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for f in [Factor::A, Factor::B] {
        for e in 1..fp.factor(f).order() {
            for v in 0..n {
                let x = g.action(f)[e].apply(v);
                adj[v].push(x);
                adj[x].push(v);
            }
        }
    }
    let mut dist = vec![None; n];
    dist[from] = Some(0);
    let mut q = VecDeque::from([from]);
    while let Some(v) = q.pop_front() {
        for &x in &adj[v] {
            if dist[x].is_none() {
                dist[x] = Some(dist[v].unwrap() + 1);
                q.push_back(x);
            }
        }
    }
    dist
}

/// Whether some pair of distinct positions is closer than both `l + 1` and
/// its cyclic separation.
pub fn near_pair_exists(g: &ActionGraph, fp: &FreeProduct, cycle: &[usize], l: usize) -> bool {
    let n = cycle.len();
    (0..n).any(|i| {
        let d = bfs(g, fp, cycle[i]);
        (0..n).filter(|&j| j != i).any(|j| {
            let sep = i.abs_diff(j).min(n - i.abs_diff(j));
            d[cycle[j]].is_some_and(|rho| rho < (l + 1).min(sep))
        })
    })
}

/// Order of a permutation by repeated composition.
pub fn order_by_iteration(p: &Permutation) -> u128 {
    let mut q = p.clone();
    let mut k = 1u128;
    while !q.is_identity() {
        q = q.then(p);
        k += 1;
    }
    k
}

pub fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u128, b: u128) -> u128 {
    a / gcd(a, b) * b
}

/// Lengths of the orbits of `φ(w)` found by walking syllables.
pub fn word_orbit_lengths(g: &ActionGraph, w: &[Syllable]) -> Vec<usize> {
    let n = g.vertex_count();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let (mut v, mut len) = (s, 0);
        loop {
            seen[v] = true;
            v = act(g, v, w);
            len += 1;
            if v == s {
                break;
            }
        }
        out.push(len);
    }
    out
}

pub fn s3() -> FiniteGroup {
    let gens = [Permutation::from_cycles(3, &[&[0, 1]]).unwrap(), Permutation::from_cycles(3, &[&[0, 1, 2]]).unwrap()];
    FiniteGroup::generated_by("S3", &gens)
}

/// A random unreduced syllable sequence, identity syllables included.
pub fn random_raw(fp: &FreeProduct, rng: &mut impl Rng, max_len: usize) -> Vec<Syllable> {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| {
            let f = if rng.gen() { Factor::A } else { Factor::B };
            Syllable::new(f, rng.gen_range(0..fp.factor(f).order()))
        })
        .collect()
}

/// Mixed free and non-free action graphs with at most 60 vertices over
/// `Z2∗Z3`, `Z3∗Z3` and `Z2∗Z4`.
pub fn girth_corpus(seed: u64) -> Vec<(FreeProduct, ActionGraph)> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (a, b) in [(2, 3), (3, 3), (2, 4)] {
        let fp = FreeProduct::new(FiniteGroup::cyclic(a), FiniteGroup::cyclic(b));
        let step = a * b / gcd(a as u128, b as u128) as usize;
        for i in 0..20 {
            let free = i % 2 == 0;
            let n = if free { step * rng.gen_range(1..=60 / step) } else { rng.gen_range(1..=60) };
            out.push((fp.clone(), random_cyclic_graph(&fp, n, free, &mut rng)));
        }
    }
    out
}

/// Checks that a reported violation really is one.
pub fn witness_is_genuine(fp: &FreeProduct, g: &ActionGraph, v: &GraphViolation) -> bool {
    match *v {
        GraphViolation::IdentityMoves { factor, vertex } => g.action(factor)[0].apply(vertex) != vertex,
        GraphViolation::Homomorphism { factor, x, y, vertex } => {
            let p = g.action(factor);
            p[y].apply(p[x].apply(vertex)) != p[fp.factor(factor).mul(x, y)].apply(vertex)
        }
        GraphViolation::OrbitRegularity { factor, element, fixed, moved } => {
            let p = &g.action(factor)[element];
            let orbit = orbits(g.action(factor), g.vertex_count());
            p.apply(fixed) == fixed && p.apply(moved) != moved && orbit[fixed] == orbit[moved]
        }
        GraphViolation::NotFree { factor, element, vertex } => {
            element != 0 && g.action(factor)[element].apply(vertex) == vertex
        }
    }
}

/// Swaps two images of one permutation of one factor.
pub fn mutate(fp: &FreeProduct, g: &ActionGraph, rng: &mut impl Rng) -> ActionGraph {
    let f = if rng.gen() { Factor::A } else { Factor::B };
    let mut a = g.action(Factor::A).to_vec();
    let mut b = g.action(Factor::B).to_vec();
    let perms = if f == Factor::A { &mut a } else { &mut b };
    let x = rng.gen_range(0..perms.len());
    let n = g.vertex_count();
    let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
    let mut images: Vec<usize> = perms[x].images().collect();
    images.swap(i, j);
    perms[x] = Permutation::from_images(images).unwrap();
    ActionGraph::new(fp, n, a, b).unwrap()
}

/// The mutation corpus: free and non-free graphs over cyclic and `S3` factors.
pub fn mutation_corpus(rng: &mut impl Rng) -> Vec<(FreeProduct, ActionGraph)> {
    let z = z2_z3();
    let mixed = FreeProduct::new(s3(), FiniteGroup::cyclic(2));
    let z43 = FreeProduct::new(FiniteGroup::cyclic(4), FiniteGroup::cyclic(3));
    vec![
        (z.clone(), freeprod::base::random_free_action_graph(&z, 18, 1).unwrap()),
        (z.clone(), random_cyclic_graph(&z, 7, false, rng)),
        (z.clone(), random_cyclic_graph(&z, 2, false, rng)),
        (mixed.clone(), freeprod::base::random_free_action_graph(&mixed, 12, 4).unwrap()),
        (z43.clone(), random_cyclic_graph(&z43, 10, false, rng)),
    ]
}

/// Orbit lengths (per copy) of a word whose orbit stays inside one copy or
/// two cyclically adjacent copies; vertices are numbered `copy·n1 + x`.
pub fn confined_multiset(g: &ActionGraph, word: &[Syllable], copies: usize, n1: usize) -> BTreeMap<usize, usize> {
    let region = |v: usize| v / n1;
    let mut seen = vec![false; g.vertex_count()];
    let mut out = BTreeMap::new();
    for s in 0..g.vertex_count() {
        if seen[s] {
            continue;
        }
        let (mut v, mut len) = (s, 0);
        let mut regions = BTreeSet::new();
        loop {
            seen[v] = true;
            for &syl in word {
                regions.insert(region(v));
                v = act(g, v, &[syl]);
            }
            len += 1;
            if v == s {
                break;
            }
        }
        let r: Vec<usize> = regions.into_iter().collect();
        let confined = match r[..] {
            [_] => true,
            [x, y] => y == x + 1 || (x == 0 && y == copies - 1),
            _ => false,
        };
        if confined {
            *out.entry(len).or_insert(0) += 1;
        }
    }
    for c in out.values_mut() {
        assert_eq!(*c % copies, 0);
        *c /= copies;
    }
    out
}

mod common;

use std::collections::HashMap;

use common::*;
use freeprod::base::{CandidateStream, Certificate};
use freeprod::graph::ActionGraph;
use freeprod::omnipotence::{base_spec, PipelineParams};
use freeprod::surgery::{build_delta, build_lambda, SurgeryPlan, VoltageGraph};
use freeprod::{Factor, FiniteGroup, FreeProduct, Permutation, Word};

/// Certified bases for the focus word, as the pipeline would search them.
fn bases(fp: &FreeProduct, words: &[Word], focus: usize, count: usize) -> Vec<(ActionGraph, Certificate)> {
    let params = PipelineParams { attempt_budget: 200, ..PipelineParams::default() };
    let spec = base_spec(&params, words, focus).unwrap();
    let mut stream = CandidateStream::new(fp, &spec).unwrap();
    std::iter::from_fn(|| stream.next_certified()).take(count).collect()
}

fn plans(fp: &FreeProduct, base: &ActionGraph, u: &Word, max: usize) -> Vec<SurgeryPlan> {
    let t = base.image_order(u) as usize;
    (1..t).filter_map(|k| SurgeryPlan::new(fp, base, u, k).ok()).take(max).collect()
}

type Label = (Factor, usize);

/// The cut-and-splice on `m` labelled copies, edge by edge: delete the
/// `A`-edges at `p_2` and `p_{k+2}`, reconnect the component of `p_1` to
/// `p_{k+2}` of the next copy (the `f` edges), attach the new vertex to the
/// component of `p_{k+2}` (the `g` edges), then close with loops.
fn literal_surgery(fp: &FreeProduct, base: &ActionGraph, plan: &SurgeryPlan, m: usize) -> ActionGraph {
    let n = base.vertex_count();
    let id = |copy: usize, x: usize| (copy % m) * (n + 1) + x;
    let p = |i: usize| plan.markers[i - 1];
    let (p2, pk2) = (p(2), p(plan.k + 2));
    let labels: Vec<Label> = [Factor::A, Factor::B]
        .iter()
        .flat_map(|&f| (1..fp.factor(f).order()).map(move |e| (f, e)))
        .collect();
    let a_edges = |x: usize| (1..fp.a().order()).map(move |e| (e, x));

    // psi: A(p_1) -> A(p_{k+1}), label preserving, p_1 -> p_{k+1}
    let mut psi = HashMap::from([(p(1), p(plan.k + 1))]);
    let mut stack = vec![p(1)];
    while let Some(x) = stack.pop() {
        for (e, _) in a_edges(x) {
            let (y, z) = (base.action(Factor::A)[e].apply(x), base.action(Factor::A)[e].apply(psi[&x]));
            if psi.insert(y, z).is_none() {
                stack.push(y);
            }
        }
    }
    let in_a = |root: usize| {
        let orbit = orbits(base.action(Factor::A), n);
        move |x: usize| orbit[x] == orbit[root]
    };
    let (in_p1, in_pk2) = (in_a(p(1)), in_a(pk2));

    let mut edges: HashMap<Label, HashMap<usize, usize>> = HashMap::new();
    for i in 0..m {
        for &(f, e) in &labels {
            let map = edges.entry((f, e)).or_default();
            for x in 0..n {
                let y = base.action(f)[e].apply(x);
                let deleted = f == Factor::A && [x, y].iter().any(|&v| v == p2 || v == pk2);
                if !deleted {
                    map.insert(id(i, x), id(i, y));
                }
            }
        }
        for e in 1..fp.a().order() {
            let map = edges.get_mut(&(Factor::A, e)).unwrap();
            for q in 0..n {
                let r = base.action(Factor::A)[e].apply(q);
                if in_p1(q) && (q == p2 || r == p2) {
                    if q != p2 {
                        assert!(map.insert(id(i, q), id(i + 1, psi[&r])).is_none());
                    }
                    if r != p2 {
                        assert!(map.insert(id(i + 1, psi[&q]), id(i, r)).is_none());
                    }
                }
                if in_pk2(q) && (q == pk2 || r == pk2) {
                    let new = id(i, n);
                    if q == pk2 {
                        assert!(map.insert(new, id(i, r)).is_none());
                    } else {
                        assert!(map.insert(id(i, q), new).is_none());
                    }
                }
            }
        }
    }
    let total = m * (n + 1);
    let perms = |f: Factor| -> Vec<Permutation> {
        (0..fp.factor(f).order())
            .map(|e| {
                let mut images: Vec<usize> = (0..total).collect();
                if e > 0 {
                    for (&s, &t) in &edges[&(f, e)] {
                        images[s] = t;
                    }
                }
                // loops wherever no edge with this label leaves
                Permutation::from_images(images).expect("literal surgery yields bijections")
            })
            .collect()
    };
    ActionGraph::new(fp, total, perms(Factor::A), perms(Factor::B)).unwrap()
}

fn instances() -> Vec<(FreeProduct, Vec<Word>)> {
    let z = z2_z3();
    let z32 = FreeProduct::new(FiniteGroup::cyclic(3), FiniteGroup::cyclic(2));
    vec![
        (z.clone(), vec![w(&z, "a b"), w(&z, "a b a b2")]),
        (z32.clone(), vec![w(&z32, "a b"), w(&z32, "a b a2 b")]),
    ]
}

#[test]
fn lift_equals_literal_edge_surgery() {
    let mut checked = 0;
    for (fp, words) in instances() {
        for focus in 0..words.len() {
            for (base, _) in bases(&fp, &words, focus, 3) {
                for plan in plans(&fp, &base, &words[focus], 3) {
                    for m in 3..=5 {
                        let delta = build_delta(&fp, &base, &plan, m).unwrap();
                        let literal = literal_surgery(&fp, &base, &plan, m);
                        for f in [Factor::A, Factor::B] {
                            assert_eq!(delta.graph.action(f), literal.action(f), "m = {m}, k' = {}", plan.k_prime);
                        }
                        assert!(laws_hold(&fp, &literal));
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked >= 30, "{checked}");
}

#[test]
fn surgery_structure_on_certified_bases() {
    let fp = z2_z3();
    let words = [w(&fp, "a b"), w(&fp, "a b a b2")];
    let mut bases_seen = 0;
    for focus in 0..2 {
        for (base, cert) in bases(&fp, &words, focus, 6) {
            assert!(cert.pass);
            let Some(plan) = plans(&fp, &base, &words[focus], 1).pop() else { continue };
            bases_seen += 1;
            let n = base.vertex_count();
            let t = base.image_order(&plan.u);
            for m in 3..=5 {
                let delta = build_delta(&fp, &base, &plan, m).unwrap();
                assert!(delta.graph.validate(&fp, false).is_ok());
                assert_eq!(delta.graph.vertex_count(), m * (n + 1));
                let start = delta.marker(1, 0);
                let walk = {
                    let (mut v, mut len) = (start, 0);
                    loop {
                        v = act(&delta.graph, v, plan.u.syllables());
                        len += 1;
                        if v == start {
                            break len;
                        }
                    }
                };
                assert_eq!(walk as u128, (t - plan.k_prime as u128) * m as u128);
                assert_eq!(delta.spliced_cycle().length, walk);
                // the new vertex is fixed by B, p_2 by A
                for c in 0..m {
                    let new = delta.new_vertex(c);
                    assert!(delta.graph.action(Factor::B).iter().all(|p| p.apply(new) == new));
                    let p2 = delta.marker(2, c);
                    assert!(delta.graph.action(Factor::A).iter().all(|p| p.apply(p2) == p2));
                }
                for (x, y) in delta.region_intersections() {
                    assert!(x == y || (x + 1) % m == y || (y + 1) % m == x, "regions {x}, {y}");
                }
            }
        }
    }
    assert!(bases_seen >= 4);
}

#[test]
fn voltage_predictions_match_lifted_orders() {
    for (fp, words) in instances() {
        let probes: Vec<Word> = all_reduced_words(&fp, 4)
            .into_iter()
            .filter(|x| x.len() >= 2 && x.is_cyclically_reduced())
            .chain(words.iter().cloned())
            .collect();
        for focus in 0..words.len() {
            for (base, _) in bases(&fp, &words, focus, 2) {
                for plan in plans(&fp, &base, &words[focus], 2) {
                    let voltage = VoltageGraph::build(&base, &plan);
                    for copies in [3, 4, 6, 9] {
                        let g = voltage.lift(&fp, copies);
                        for x in &probes {
                            assert_eq!(voltage.predicted_order(x, copies), order_by_iteration(&g.word_permutation(x)));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn confined_spectra_do_not_depend_on_m() {
    let fp = z2_z3();
    let words = [w(&fp, "a b"), w(&fp, "a b a b2")];
    for focus in 0..2 {
        for (base, _) in bases(&fp, &words, focus, 3) {
            for plan in plans(&fp, &base, &words[focus], 2) {
                let n1 = base.vertex_count() + 1;
                for x in &words {
                    let spectra: Vec<_> = (1..=3)
                        .map(|m| {
                            let l = build_lambda(&fp, &base, &plan, m).unwrap();
                            (l.confined_spectrum(x), confined_multiset(&l.graph, x.syllables(), 3 * m, n1))
                        })
                        .collect();
                    assert!(spectra.windows(2).all(|p| p[0] == p[1]), "{spectra:?}");
                }
            }
        }
    }
}

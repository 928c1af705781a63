//! Certified base quotients: free action graphs with large syllable girth,
//! no near vertices on the named words' cycles, and order lower bounds.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::Permutation;
use crate::graph::{ActionGraph, Girth, GraphViolation, NearWitness};
use crate::word::{FreeProduct, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BaseError {
    #[error("vertex count {n} is not a multiple of both factor orders {a} and {b}")]
    Divisibility { n: usize, a: usize, b: usize },
    #[error("invalid quotient spec: {0}")]
    Spec(String),
    #[error("search budget exhausted after {attempts} candidates")]
    BudgetExceeded { attempts: usize, best: Option<Box<Certificate>> },
}

/// Where base candidates come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseSource {
    /// Raw [`random_free_action_graph`] output.
    RandomBlocks,
    /// Cayley graph of the permutation group generated by a small random free action.
    #[default]
    RegularClosure,
}

/// Largest seed graph the closure source starts from.
pub const MAX_SEED_DEGREE: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotientSpec {
    /// Cyclically reduced words; order bounds and near-vertex checks refer to these.
    pub words: Vec<Word>,
    pub girth_target: usize,
    pub near_margin: usize,
    /// Exclusive lower bounds on `|φ(words[i])|`.
    pub min_orders: Vec<u128>,
    pub max_vertices: usize,
    pub seed: u64,
    /// Candidates tried per schedule step.
    pub attempt_budget: usize,
    pub source: BaseSource,
}

/// Constants tied to a focus word `u` and a splice depth `k'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub k_prime: usize,
    /// `k = k' · l(u)`.
    pub k: usize,
    /// Largest word length among the inputs.
    pub s: usize,
}

impl DerivedConstants {
    pub fn new(u: &Word, words: &[Word], k_prime: usize) -> Self {
        let s = words.iter().map(Word::len).max().unwrap_or(0).max(u.len());
        Self { k_prime, k: k_prime * u.len(), s }
    }

    /// The large-constant regime: `k' l(u) ≥ 10 s`.
    pub fn satisfies_paper_bound(&self) -> bool {
        self.k >= 10 * self.s
    }
}

impl QuotientSpec {
    pub fn validate(&self) -> Result<(), BaseError> {
        if self.girth_target < 1 {
            return Err(BaseError::Spec("girth target must be at least 1".into()));
        }
        if self.words.is_empty() {
            return Err(BaseError::Spec("word list is empty".into()));
        }
        if self.min_orders.len() != self.words.len() {
            return Err(BaseError::Spec("one order bound per word is required".into()));
        }
        Ok(())
    }

    /// Girth `10k`, margin `k + 4`, `|φ(u)| > 10k`; requires `k' l(u) ≥ 10 s`.
    #[allow(clippy::too_many_arguments)]
    pub fn paper_constants(
        words: Vec<Word>,
        focus: usize,
        k_prime: usize,
        max_vertices: usize,
        seed: u64,
        attempt_budget: usize,
        source: BaseSource,
    ) -> Result<(Self, DerivedConstants), BaseError> {
        let u = words.get(focus).ok_or_else(|| BaseError::Spec("focus index out of range".into()))?;
        let c = DerivedConstants::new(u, &words, k_prime);
        if !c.satisfies_paper_bound() {
            return Err(BaseError::Spec(format!(
                "k' l(u) = {} is below 10 s = {}",
                c.k,
                10 * c.s
            )));
        }
        let mut min_orders = vec![0; words.len()];
        min_orders[focus] = 10 * c.k as u128;
        Ok((
            Self {
                words,
                girth_target: 10 * c.k,
                near_margin: c.k + 4,
                min_orders,
                max_vertices,
                seed,
                attempt_budget,
                source,
            },
            c,
        ))
    }
}

/// `N/|A|` regular copies of `A` on consecutive blocks, and `N/|B|` regular
/// copies of `B` moved by a seeded pseudorandom relabelling of the vertices.
pub fn random_free_action_graph(fp: &FreeProduct, n: usize, seed: u64) -> Result<ActionGraph, BaseError> {
    let (oa, ob) = (fp.a().order(), fp.b().order());
    if n == 0 || n % oa != 0 || n % ob != 0 {
        return Err(BaseError::Divisibility { n, a: oa, b: ob });
    }
    let block = |order: usize, mul: &dyn Fn(usize, usize) -> usize, x: usize| -> Permutation {
        Permutation::from_images_unchecked(
            (0..n).map(|v| (v / order) * order + mul(v % order, x)).collect(),
        )
    };
    let a = (0..oa).map(|x| block(oa, &|g, h| fp.a().mul(g, h), x)).collect();
    let mut sigma: Vec<usize> = (0..n).collect();
    sigma.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let sigma = Permutation::from_images_unchecked(sigma);
    let sigma_inv = sigma.inverse();
    let b = (0..ob)
        .map(|x| sigma.then(&block(ob, &|g, h| fp.b().mul(g, h), x)).then(&sigma_inv))
        .collect();
    Ok(ActionGraph::new(fp, n, a, b).expect("shapes match by construction"))
}

/// Cayley graph of the permutation group generated by the graph's factor
/// images, acted on by right multiplication. `None` if it has more than `cap` elements.
pub fn regular_closure(fp: &FreeProduct, g: &ActionGraph, cap: usize) -> Option<ActionGraph> {
    use crate::word::Factor;
    let degree = g.vertex_count();
    let gens: Vec<&Permutation> = [Factor::A, Factor::B]
        .into_iter()
        .flat_map(|f| g.action(f)[1..].iter())
        .collect();
    let mut index = std::collections::HashMap::new();
    let mut elements = vec![Permutation::identity(degree)];
    index.insert(elements[0].clone(), 0usize);
    let mut i = 0;
    while i < elements.len() {
        for s in &gens {
            let next = elements[i].then(s);
            if !index.contains_key(&next) {
                if elements.len() == cap {
                    return None;
                }
                index.insert(next.clone(), elements.len());
                elements.push(next);
            }
        }
        i += 1;
    }
    let right = |p: &Permutation| {
        Permutation::from_images_unchecked(elements.iter().map(|h| index[&h.then(p)]).collect())
    };
    let a = g.action(Factor::A).iter().map(right).collect();
    let b = g.action(Factor::B).iter().map(right).collect();
    Some(ActionGraph::new(fp, elements.len(), a, b).expect("shapes match by construction"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreenessRecord {
    pub pass: bool,
    pub violation: Option<GraphViolation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GirthRecord {
    pub pass: bool,
    pub target: usize,
    pub girth: Girth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearRecord {
    pub word: usize,
    pub pass: bool,
    pub margin: usize,
    pub cycles_checked: usize,
    /// Start vertex of the offending cycle and the offending pair.
    pub witness: Option<(usize, NearWitness)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub word: usize,
    pub pass: bool,
    pub order: u128,
    /// Exclusive lower bound.
    pub min_order: u128,
}

/// Where a candidate came from, enough to regenerate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: BaseSource,
    pub seed: u64,
    /// Vertex count of the random block graph the candidate was built from.
    pub seed_vertices: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub pass: bool,
    pub provenance: Provenance,
    pub vertex_count: usize,
    pub freeness: FreenessRecord,
    pub q_injectivity: GirthRecord,
    pub near_vertices: Vec<NearRecord>,
    pub orders: Vec<OrderRecord>,
}

impl Certificate {
    fn passing_records(&self) -> usize {
        usize::from(self.freeness.pass)
            + usize::from(self.q_injectivity.pass)
            + self.near_vertices.iter().filter(|r| r.pass).count()
            + self.orders.iter().filter(|r| r.pass).count()
    }
}

/// Runs every check, in order, and records witnesses. Later checks are
/// skipped (recorded as failing) when the graph is not free.
pub fn certify(fp: &FreeProduct, g: &ActionGraph, spec: &QuotientSpec, provenance: Provenance) -> Certificate {
    let violation = g.validate(fp, true).err();
    let freeness = FreenessRecord { pass: violation.is_none(), violation };
    let girth = g.syllable_girth(fp, spec.girth_target);
    let q_injectivity =
        GirthRecord { pass: freeness.pass && girth.exceeds(spec.girth_target), target: spec.girth_target, girth };
    let near_vertices = spec
        .words
        .iter()
        .enumerate()
        .filter(|(_, w)| w.len() >= 2 && w.is_cyclically_reduced())
        .map(|(i, w)| {
            let cycles = g.enumerate_u_cycles(w).expect("cyclically reduced");
            let witness = cycles
                .iter()
                .find_map(|c| g.has_l_near_vertices(c, spec.near_margin).map(|wit| (c.start, wit)));
            NearRecord {
                word: i,
                pass: freeness.pass && witness.is_none(),
                margin: spec.near_margin,
                cycles_checked: cycles.len(),
                witness,
            }
        })
        .collect();
    let orders = spec
        .words
        .iter()
        .zip(&spec.min_orders)
        .enumerate()
        .map(|(i, (w, &min_order))| {
            let order = g.image_order(w);
            OrderRecord { word: i, pass: order > min_order, order, min_order }
        })
        .collect::<Vec<_>>();
    let mut cert = Certificate {
        pass: false,
        provenance,
        vertex_count: g.vertex_count(),
        freeness,
        q_injectivity,
        near_vertices,
        orders,
    };
    cert.pass = cert.freeness.pass
        && cert.q_injectivity.pass
        && cert.near_vertices.iter().all(|r| r.pass)
        && cert.orders.iter().all(|r| r.pass);
    cert
}

/// Deterministic stream of base candidates. Sizes follow the schedule
/// `l, 2l, 4l, …` with `l = lcm(|A|, |B|)`; each size gets `attempt_budget` seeds.
/// For the closure source the schedule runs over seed graph sizes (at most
/// [`MAX_SEED_DEGREE`], or `l` if larger) and each round is certified in
/// increasing closure size.
pub struct CandidateStream<'a> {
    fp: &'a FreeProduct,
    spec: &'a QuotientSpec,
    sizes: Vec<usize>,
    size_index: usize,
    pending: std::collections::VecDeque<(ActionGraph, Provenance)>,
    seen: HashSet<ActionGraph>,
    attempts: usize,
    best: Option<Certificate>,
}

impl<'a> CandidateStream<'a> {
    pub fn new(fp: &'a FreeProduct, spec: &'a QuotientSpec) -> Result<Self, BaseError> {
        spec.validate()?;
        let l = crate::arith::lcm_all([fp.a().order() as u128, fp.b().order() as u128]) as usize;
        let ceiling = match spec.source {
            BaseSource::RandomBlocks => spec.max_vertices,
            BaseSource::RegularClosure => spec.max_vertices.min(MAX_SEED_DEGREE.max(l)),
        };
        let mut sizes = Vec::new();
        let mut n = l;
        while n <= ceiling {
            sizes.push(n);
            n *= 2;
        }
        Ok(Self {
            fp,
            spec,
            sizes,
            size_index: 0,
            pending: Default::default(),
            seen: HashSet::new(),
            attempts: 0,
            best: None,
        })
    }

    pub fn attempts(&self) -> usize {
        self.attempts
    }

    /// Best failing certificate so far (most passing records, then girth).
    pub fn best_near_miss(&self) -> Option<&Certificate> {
        self.best.as_ref()
    }

    fn refill(&mut self) -> bool {
        while self.pending.is_empty() {
            let Some(&n) = self.sizes.get(self.size_index) else { return false };
            let round = self.size_index as u64;
            self.size_index += 1;
            let mut batch = Vec::new();
            for attempt in 0..self.spec.attempt_budget as u64 {
                let seed = self.spec.seed.wrapping_add(round << 32 | attempt);
                let raw = random_free_action_graph(self.fp, n, seed).expect("schedule respects divisibility");
                let provenance = Provenance { source: self.spec.source, seed, seed_vertices: n };
                let g = match self.spec.source {
                    BaseSource::RandomBlocks => raw,
                    BaseSource::RegularClosure => {
                        match regular_closure(self.fp, &raw, self.spec.max_vertices) {
                            Some(g) => g,
                            None => continue,
                        }
                    }
                };
                if self.seen.insert(g.clone()) {
                    batch.push((g, provenance));
                }
            }
            // stable: ties keep seed order
            batch.sort_by_key(|(g, _)| g.vertex_count());
            self.pending.extend(batch);
        }
        true
    }

    /// Next candidate that passes certification.
    pub fn next_certified(&mut self) -> Option<(ActionGraph, Certificate)> {
        while self.refill() {
            let (g, provenance) = self.pending.pop_front().expect("refilled");
            self.attempts += 1;
            let cert = certify(self.fp, &g, self.spec, provenance);
            if cert.pass {
                return Some((g, cert));
            }
            let better = self.best.as_ref().map_or(true, |b| {
                (cert.passing_records(), girth_value(&cert)) > (b.passing_records(), girth_value(b))
            });
            if better {
                self.best = Some(cert);
            }
        }
        None
    }
}

fn girth_value(c: &Certificate) -> usize {
    match c.q_injectivity.girth {
        Girth::Exactly { length, .. } => length,
        Girth::Exceeds { limit } => limit + 1,
    }
}

/// First certified candidate in stream order.
pub fn search_base_quotient(fp: &FreeProduct, spec: &QuotientSpec) -> Result<(ActionGraph, Certificate), BaseError> {
    let mut stream = CandidateStream::new(fp, spec)?;
    stream.next_certified().ok_or_else(|| BaseError::BudgetExceeded {
        attempts: stream.attempts(),
        best: stream.best_near_miss().cloned().map(Box::new),
    })
}

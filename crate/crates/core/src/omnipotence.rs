//! Order families from spliced graphs, their stabilization, the combination
//! of families into one product quotient, and the end-to-end pipeline.
//!
//! For a focus word `u_j` and a plan on a certified base, every word's orbits
//! on the one-copy voltage graph have a winding `ω`. A family is usable when
//! every off-focus orbit has `ω = 0` (so off-focus orders do not depend on the
//! copy count) and every focus orbit has `|ω| ≤ 1`. With `C` the lcm of the
//! focus lengths at `ω = 0` and `R` the lcm at `|ω| = 1`, the focus order on
//! `Λ_m` is `lcm(C, 3mR)`; the multiplier `c = C / gcd(C, 3R)` makes the order
//! on `Λ_{cm}` exactly `3cR·m`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{gcd, lcm_all, lcm_saturating};
use crate::base::{BaseError, BaseSource, CandidateStream, Certificate, QuotientSpec};
use crate::graph::ActionGraph;
use crate::group::Permutation;
use crate::surgery::{build_lambda, ConfinementReport, SurgeryError, SurgeryPlan, VoltageGraph};
use crate::word::{FreeProduct, HypothesisReport, Word};

/// Why a plan does not give a usable family.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyRejection {
    #[error("off-focus word {word} has an orbit of length {length} with winding {winding}")]
    OffFocusWinding { word: usize, length: usize, winding: i64 },
    #[error("focus word has an orbit of length {length} with winding {winding}")]
    FocusWinding { length: usize, winding: i64 },
    #[error("spliced orbit has length {length} and winding {winding}, expected length {expected} and winding 1")]
    SplicedOrbit { length: usize, winding: i64, expected: u128 },
    #[error("constant overflow")]
    Overflow,
}

/// Orbit summary of one word on the voltage graph: `(length, winding, count)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitClasses {
    pub classes: Vec<(usize, i64, usize)>,
}

impl OrbitClasses {
    fn of(voltage: &VoltageGraph, w: &Word) -> Self {
        let mut counts: BTreeMap<(usize, i64), usize> = BTreeMap::new();
        for o in voltage.orbits(w) {
            *counts.entry((o.length, o.winding)).or_insert(0) += 1;
        }
        Self { classes: counts.into_iter().map(|((l, w), c)| (l, w, c)).collect() }
    }

    /// lcm of lengths with the given absolute winding.
    fn lcm_at(&self, abs_winding: u64) -> u128 {
        lcm_all(
            self.classes
                .iter()
                .filter(|(_, w, _)| w.unsigned_abs() == abs_winding)
                .map(|&(l, _, _)| l as u128),
        )
    }
}

/// Constants of a usable family, read off the voltage graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyAnalysis {
    pub focus: usize,
    /// `C`: lcm of zero-winding focus orbit lengths.
    pub zero_lcm: u128,
    /// `R`: lcm of unit-winding focus orbit lengths.
    pub unit_lcm: u128,
    /// `c = C / gcd(C, 3R)`.
    pub multiplier: u128,
    /// `K_{j,k}` for every word; the focus entry is `K_{j,j} = 3cR`.
    pub constants: Vec<u128>,
    pub classes: Vec<OrbitClasses>,
}

/// `(c, K_{j,j})` from `C` and `R`.
pub fn stabilization_constants(zero_lcm: u128, unit_lcm: u128) -> (u128, u128) {
    let c = zero_lcm / gcd(zero_lcm, 3 * unit_lcm);
    (c, 3 * c * unit_lcm)
}

/// Focus order on `Λ_m`: `lcm(C, 3mR)`.
pub fn focus_order(zero_lcm: u128, unit_lcm: u128, m: u128) -> u128 {
    lcm_saturating(zero_lcm, 3 * m * unit_lcm)
}

impl FamilyAnalysis {
    pub fn new(
        voltage: &VoltageGraph,
        plan: &SurgeryPlan,
        words: &[Word],
        focus: usize,
    ) -> Result<Self, FamilyRejection> {
        let classes: Vec<OrbitClasses> = words
            .iter()
            .enumerate()
            .map(|(i, w)| OrbitClasses::of(voltage, if i == focus { &plan.u } else { w }))
            .collect();
        let mut constants = Vec::with_capacity(words.len());
        for (i, cl) in classes.iter().enumerate() {
            if i == focus {
                constants.push(0);
                continue;
            }
            if let Some(&(length, winding, _)) = cl.classes.iter().find(|c| c.1 != 0) {
                return Err(FamilyRejection::OffFocusWinding { word: i, length, winding });
            }
            constants.push(cl.lcm_at(0));
        }
        let fc = &classes[focus];
        if let Some(&(length, winding, _)) = fc.classes.iter().find(|c| c.1.abs() > 1) {
            return Err(FamilyRejection::FocusWinding { length, winding });
        }
        let spliced = voltage.orbit_through(&plan.u, plan.p(1));
        let expected = plan.spliced_per_copy();
        if spliced.winding != 1 || spliced.length as u128 != expected {
            return Err(FamilyRejection::SplicedOrbit { length: spliced.length, winding: spliced.winding, expected });
        }
        let (zero_lcm, unit_lcm) = (fc.lcm_at(0), fc.lcm_at(1));
        let (multiplier, kjj) = stabilization_constants(zero_lcm, unit_lcm);
        constants[focus] = kjj;
        if constants.iter().any(|&k| k == u128::MAX) {
            return Err(FamilyRejection::Overflow);
        }
        Ok(Self { focus, zero_lcm, unit_lcm, multiplier, constants, classes })
    }
}

/// Measurements on `Λ_m` for one `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilySample {
    pub m: u128,
    pub copies: usize,
    pub vertex_count: usize,
    pub orders: Vec<u128>,
    pub spliced_length: usize,
    /// Per word: zero-winding orbit lengths with per-copy multiplicities.
    pub confined: Vec<Vec<(usize, usize)>>,
}

/// `measure_family` output: raw orders over the sampled `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawFamily {
    pub focus: usize,
    pub plan: SurgeryPlan,
    pub samples: Vec<FamilySample>,
    /// Literal region-span check on `Λ_1` per word.
    pub confinement: Vec<ConfinementReport>,
}

fn sample(
    fp: &FreeProduct,
    base: &ActionGraph,
    plan: &SurgeryPlan,
    words: &[Word],
    focus: usize,
    m: u128,
) -> Result<(FamilySample, crate::surgery::DeltaGraph), SurgeryError> {
    let d = build_lambda(fp, base, plan, m as usize)?;
    let measured: Vec<&Word> = words.iter().enumerate().map(|(i, w)| if i == focus { &plan.u } else { w }).collect();
    let orders = measured.iter().map(|w| d.graph.image_order(w)).collect();
    let confined = measured.iter().map(|w| d.confined_spectrum(w).into_iter().collect()).collect();
    let s = FamilySample {
        m,
        copies: d.copies,
        vertex_count: d.graph.vertex_count(),
        orders,
        spliced_length: d.spliced_cycle().length,
        confined,
    };
    Ok((s, d))
}

/// Builds `Λ_m` for every `m` in `m_range` and records orders and confined spectra.
pub fn measure_family(
    fp: &FreeProduct,
    base: &ActionGraph,
    plan: &SurgeryPlan,
    words: &[Word],
    focus: usize,
    m_range: &[usize],
) -> Result<RawFamily, SurgeryError> {
    let mut samples = Vec::with_capacity(m_range.len());
    for &m in m_range {
        samples.push(sample(fp, base, plan, words, focus, m as u128)?.0);
    }
    let (_, lambda1) = sample(fp, base, plan, words, focus, 1)?;
    let confinement = words
        .iter()
        .enumerate()
        .map(|(i, w)| lambda1.verify_confinement(if i == focus { &plan.u } else { w }))
        .collect();
    Ok(RawFamily { focus, plan: plan.clone(), samples, confinement })
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StabilizeError {
    #[error(transparent)]
    Rejected(FamilyRejection),
    #[error(transparent)]
    Surgery(SurgeryError),
    #[error("word {word} at m = {m}: measured order {measured}, predicted {predicted}")]
    Mismatch { word: usize, m: u128, measured: u128, predicted: u128 },
}

/// A stabilized family: on `Λ_{c·m}` the focus order is `m·K_{j,j}` and every
/// other word has order `K_{j,k}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderFamily {
    pub focus: usize,
    pub plan: SurgeryPlan,
    pub analysis: FamilyAnalysis,
    /// Fresh measurements on `Λ_{c·m}`, indexed by `m`.
    pub checks: Vec<FamilySample>,
}

impl OrderFamily {
    pub fn multiplier(&self) -> u128 {
        self.analysis.multiplier
    }

    pub fn constants(&self) -> &[u128] {
        &self.analysis.constants
    }

    /// Vertex count of `Λ_{c·m}`.
    pub fn component_vertices(&self, m: u128) -> u128 {
        3 * self.multiplier() * m * (self.plan.base_vertices as u128 + 1)
    }
}

/// Checks the raw table against the voltage-graph constants, then re-measures
/// fresh `Λ_{c·m}` graphs and demands exact linear focus orders.
pub fn stabilize(
    fp: &FreeProduct,
    base: &ActionGraph,
    raw: &RawFamily,
    words: &[Word],
    m_range: &[usize],
) -> Result<OrderFamily, StabilizeError> {
    let voltage = VoltageGraph::build(base, &raw.plan);
    let analysis =
        FamilyAnalysis::new(&voltage, &raw.plan, words, raw.focus).map_err(StabilizeError::Rejected)?;
    let j = raw.focus;
    for s in &raw.samples {
        for (i, &measured) in s.orders.iter().enumerate() {
            let predicted = if i == j {
                focus_order(analysis.zero_lcm, analysis.unit_lcm, s.m)
            } else {
                analysis.constants[i]
            };
            if measured != predicted {
                return Err(StabilizeError::Mismatch { word: i, m: s.m, measured, predicted });
            }
        }
    }
    let mut checks = Vec::with_capacity(m_range.len());
    for &m in m_range {
        let m = m as u128;
        let (s, _) = sample(fp, base, &raw.plan, words, j, analysis.multiplier * m).map_err(StabilizeError::Surgery)?;
        for (i, &measured) in s.orders.iter().enumerate() {
            let predicted = if i == j { m * analysis.constants[j] } else { analysis.constants[i] };
            if measured != predicted {
                return Err(StabilizeError::Mismatch { word: i, m, measured, predicted });
            }
        }
        checks.push(s);
    }
    Ok(OrderFamily { focus: j, plan: raw.plan.clone(), analysis, checks })
}

/// Product arithmetic for one family per word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Combination {
    pub k: u128,
    /// `m_j = (K / K_{j,j}) · l_j`.
    pub multipliers: Vec<u128>,
    /// `lcm(m_i K_{i,i}, K_{j,i} for j ≠ i)`, equal to `K · l_i`.
    pub orders: Vec<u128>,
}

/// `constants[j][k] = K_{j,k}` (diagonal `K_{j,j}`), all positive.
pub fn combine(constants: &[Vec<u128>], targets: &[u128]) -> Combination {
    let k = lcm_all(constants.iter().flatten().copied());
    let multipliers: Vec<u128> = constants.iter().zip(targets).enumerate().map(|(j, (row, &l))| k / row[j] * l).collect();
    let orders = (0..constants.len())
        .map(|i| {
            (0..constants.len()).fold(1, |acc, j| {
                let term = if i == j { multipliers[i] * constants[i][i] } else { constants[j][i] };
                lcm_saturating(acc, term)
            })
        })
        .collect();
    Combination { k, multipliers, orders }
}

/// One factor of the product quotient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub focus: usize,
    /// The graph is `Λ_m` for this `m`.
    pub lambda_m: u128,
    pub graph: ActionGraph,
}

/// Direct product of component representations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductHom {
    pub components: Vec<Component>,
}

impl ProductHom {
    pub fn vertex_count(&self) -> usize {
        self.components.iter().map(|c| c.graph.vertex_count()).sum()
    }

    /// Image of a word in every component.
    pub fn word_permutations(&self, w: &Word) -> Vec<Permutation> {
        self.components.iter().map(|c| c.graph.word_permutation(w)).collect()
    }

    /// `|ψ(w)|`: lcm of the component orders.
    pub fn order(&self, w: &Word) -> u128 {
        lcm_all(self.components.iter().map(|c| c.graph.image_order(w)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Fixed splice depth, or `None` to try every `k'` below the base order.
    pub k_prime: Option<usize>,
    pub girth_target: usize,
    pub near_margin: usize,
    pub max_vertices: usize,
    pub seed: u64,
    pub attempt_budget: usize,
    pub source: BaseSource,
    pub paper_constants: bool,
    pub m_range: Vec<usize>,
    /// Only the first word gets a family; the others keep constant orders.
    pub proposition_mode: bool,
    pub parallel: bool,
    /// Certified bases with a usable family collected per focus.
    pub family_bases: usize,
    pub max_product_vertices: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            k_prime: None,
            girth_target: 5,
            near_margin: 2,
            max_vertices: 800,
            seed: 1,
            attempt_budget: 48,
            source: BaseSource::RegularClosure,
            paper_constants: false,
            m_range: vec![1, 2, 3],
            proposition_mode: false,
            parallel: false,
            family_bases: 4,
            max_product_vertices: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("input error: {0}")]
    Input(String),
    #[error("hypotheses fail")]
    Hypothesis(Box<HypothesisReport>),
    #[error("budget exceeded: {stage}")]
    BudgetExceeded { stage: String, trace: Vec<String> },
    #[error("verification failed: {0}")]
    Verification(String),
}

/// A usable `(base, plan)` for one focus.
#[derive(Debug, Clone)]
struct Candidate {
    base: usize,
    plan: SurgeryPlan,
    analysis: FamilyAnalysis,
}

#[derive(Debug, Clone)]
struct FocusPool {
    bases: Vec<(ActionGraph, Certificate)>,
    candidates: Vec<Candidate>,
    trace: Vec<String>,
}

/// Stage record of one focus in the report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyStage {
    pub focus: usize,
    pub base: ActionGraph,
    pub certificate: Certificate,
    pub raw: RawFamily,
    pub family: OrderFamily,
    pub candidates_considered: usize,
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRow {
    pub index: usize,
    pub target: u128,
    pub expected: u128,
    pub verified: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub words: Vec<Word>,
    pub representatives: Vec<Word>,
    pub hypotheses: HypothesisReport,
    pub stages: Vec<FamilyStage>,
    pub combination: Combination,
    pub product: ProductHom,
    pub orders: Vec<OrderRow>,
}

pub fn base_spec(params: &PipelineParams, reps: &[Word], focus: usize) -> Result<QuotientSpec, PipelineError> {
    if params.paper_constants {
        let k_prime = params.k_prime.unwrap_or(1);
        return QuotientSpec::paper_constants(
            reps.to_vec(),
            focus,
            k_prime,
            params.max_vertices,
            params.seed,
            params.attempt_budget,
            params.source,
        )
        .map(|(s, _)| s)
        .map_err(|e| PipelineError::Input(e.to_string()));
    }
    let mut min_orders = vec![0; reps.len()];
    min_orders[focus] = params.k_prime.unwrap_or(1) as u128;
    Ok(QuotientSpec {
        words: reps.to_vec(),
        girth_target: params.girth_target,
        near_margin: params.near_margin,
        min_orders,
        max_vertices: params.max_vertices,
        seed: params.seed.wrapping_add(focus as u64),
        attempt_budget: params.attempt_budget,
        source: params.source,
    })
}

fn collect_pool(fp: &FreeProduct, params: &PipelineParams, reps: &[Word], focus: usize) -> Result<FocusPool, PipelineError> {
    let spec = base_spec(params, reps, focus)?;
    let mut stream = CandidateStream::new(fp, &spec).map_err(|e| PipelineError::Input(e.to_string()))?;
    let mut pool = FocusPool { bases: Vec::new(), candidates: Vec::new(), trace: Vec::new() };
    while pool.bases.len() < params.family_bases {
        let Some((base, cert)) = stream.next_certified() else { break };
        let t = base.image_order(&reps[focus]);
        let k_primes: Vec<usize> = match params.k_prime {
            Some(k) => vec![k],
            None => (1..t.min(usize::MAX as u128) as usize).collect(),
        };
        let mut found = Vec::new();
        for k_prime in k_primes {
            let plan = match SurgeryPlan::new(fp, &base, &reps[focus], k_prime) {
                Ok(p) => p,
                Err(e) => {
                    pool.trace.push(format!("base N={} k'={k_prime}: plan refused: {e}", base.vertex_count()));
                    continue;
                }
            };
            let voltage = VoltageGraph::build(&base, &plan);
            match FamilyAnalysis::new(&voltage, &plan, reps, focus) {
                Ok(analysis) => found.push(Candidate { base: pool.bases.len(), plan, analysis }),
                Err(e) => pool.trace.push(format!("base N={} k'={k_prime}: rejected: {e}", base.vertex_count())),
            }
        }
        if !found.is_empty() {
            pool.trace.push(format!("base N={} gives {} usable families", base.vertex_count(), found.len()));
            pool.candidates.extend(found);
            pool.bases.push((base, cert));
        }
    }
    if pool.candidates.is_empty() {
        let mut trace = pool.trace;
        trace.push(format!("{} candidates certified or rejected", stream.attempts()));
        if let Some(best) = stream.best_near_miss() {
            trace.push(format!(
                "best near miss: N={} freeness={} girth={} near={:?} orders={:?}",
                best.vertex_count,
                best.freeness.pass,
                best.q_injectivity.pass,
                best.near_vertices.iter().map(|r| r.pass).collect::<Vec<_>>(),
                best.orders.iter().map(|r| r.order).collect::<Vec<_>>()
            ));
        }
        return Err(PipelineError::BudgetExceeded { stage: format!("family search for word {focus}"), trace });
    }
    Ok(pool)
}

/// Largest number of combinations scored exhaustively.
const MAX_COMBINATIONS: usize = 1 << 20;

/// Picks one candidate per focus minimizing the product size for unit targets.
fn choose(pools: &mut [FocusPool]) -> Vec<usize> {
    let n = pools.len();
    let per_pool = (MAX_COMBINATIONS as f64).powf(1.0 / n as f64).floor().max(1.0) as usize;
    for p in pools.iter_mut() {
        let size = |c: &Candidate| 3 * c.analysis.multiplier * (c.plan.base_vertices as u128 + 1);
        let mut order: Vec<usize> = (0..p.candidates.len()).collect();
        order.sort_by_key(|&i| size(&p.candidates[i]));
        order.truncate(per_pool);
        order.sort_unstable();
        p.candidates = order.into_iter().map(|i| p.candidates[i].clone()).collect();
    }
    let mut best: Option<(u128, Vec<usize>)> = None;
    let mut idx = vec![0usize; n];
    loop {
        let rows: Vec<Vec<u128>> = (0..n).map(|j| pools[j].candidates[idx[j]].analysis.constants.clone()).collect();
        let comb = combine(&rows, &vec![1; n]);
        if comb.k != u128::MAX {
            let cost = (0..n)
                .map(|j| {
                    let c = &pools[j].candidates[idx[j]];
                    3 * c.analysis.multiplier * comb.multipliers[j] * (c.plan.base_vertices as u128 + 1)
                })
                .fold(0u128, u128::saturating_add);
            if best.as_ref().map_or(true, |(b, _)| cost < *b) {
                best = Some((cost, idx.clone()));
            }
        }
        // odometer
        let mut j = 0;
        loop {
            if j == n {
                return best.map(|b| b.1).unwrap_or_else(|| vec![0; n]);
            }
            idx[j] += 1;
            if idx[j] < pools[j].candidates.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// The full construction. `targets[i] ≥ 1`; in proposition mode only `targets[0]` is used.
pub fn run_pipeline(
    fp: &FreeProduct,
    words: &[Word],
    targets: &[u128],
    params: &PipelineParams,
) -> Result<PipelineOutcome, PipelineError> {
    if words.is_empty() || words.len() != targets.len() {
        return Err(PipelineError::Input("need one positive target per word".into()));
    }
    if targets.iter().any(|&l| l == 0) {
        return Err(PipelineError::Input("targets must be positive".into()));
    }
    if params.m_range.is_empty() || params.m_range.contains(&0) {
        return Err(PipelineError::Input("m range must be nonempty and positive".into()));
    }
    let reps: Vec<Word> = words.iter().map(|w| fp.cyclic_reduce(w).representative).collect();
    let hypotheses = fp.check_hypotheses(words);
    let foci: Vec<usize> = if params.proposition_mode {
        if reps[0].len() < 2 {
            return Err(PipelineError::Hypothesis(Box::new(hypotheses)));
        }
        vec![0]
    } else {
        if !hypotheses.passes() {
            return Err(PipelineError::Hypothesis(Box::new(hypotheses)));
        }
        (0..words.len()).collect()
    };

    let pools: Vec<Result<FocusPool, PipelineError>> = if params.parallel && foci.len() > 1 {
        let reps = &reps;
        std::thread::scope(|s| {
            let handles: Vec<_> =
                foci.iter().map(|&j| s.spawn(move || collect_pool(fp, params, reps, j))).collect();
            handles.into_iter().map(|h| h.join().expect("family worker panicked")).collect()
        })
    } else {
        foci.iter().map(|&j| collect_pool(fp, params, &reps, j)).collect()
    };
    let mut pools = pools.into_iter().collect::<Result<Vec<_>, _>>()?;
    let choice = choose(&mut pools);

    let mut stages = Vec::with_capacity(foci.len());
    for (slot, &j) in foci.iter().enumerate() {
        let pool = &pools[slot];
        let cand = &pool.candidates[choice[slot]];
        let (base, cert) = &pool.bases[cand.base];
        let raw = measure_family(fp, base, &cand.plan, &reps, j, &params.m_range)
            .map_err(|e| PipelineError::Verification(format!("word {j}: {e}")))?;
        let family = stabilize(fp, base, &raw, &reps, &params.m_range)
            .map_err(|e| PipelineError::Verification(format!("word {j}: {e}")))?;
        stages.push(FamilyStage {
            focus: j,
            base: base.clone(),
            certificate: cert.clone(),
            raw,
            family,
            candidates_considered: pool.candidates.len(),
            trace: pool.trace.clone(),
        });
    }

    let (combination, expected): (Combination, Vec<u128>) = if params.proposition_mode {
        let c = &stages[0].family.analysis.constants;
        let comb = Combination { k: c[0], multipliers: vec![targets[0]], orders: vec![c[0] * targets[0]] };
        let mut expected = c.clone();
        expected[0] = c[0] * targets[0];
        (comb, expected)
    } else {
        let rows: Vec<Vec<u128>> = stages.iter().map(|s| s.family.analysis.constants.clone()).collect();
        let comb = combine(&rows, targets);
        if comb.k == u128::MAX {
            return Err(PipelineError::BudgetExceeded { stage: "combination overflow".into(), trace: vec![] });
        }
        let expected = targets.iter().map(|&l| comb.k * l).collect();
        (comb, expected)
    };

    let total: u128 = stages
        .iter()
        .zip(&combination.multipliers)
        .map(|(s, &m)| s.family.component_vertices(m))
        .fold(0, u128::saturating_add);
    if total > params.max_product_vertices as u128 {
        return Err(PipelineError::BudgetExceeded {
            stage: format!("product would have {total} vertices, limit {}", params.max_product_vertices),
            trace: vec![],
        });
    }
    let mut components = Vec::with_capacity(stages.len());
    for (s, &m) in stages.iter().zip(&combination.multipliers) {
        let lambda_m = s.family.multiplier() * m;
        let d = build_lambda(fp, &s.base, &s.family.plan, lambda_m as usize)
            .map_err(|e| PipelineError::Verification(e.to_string()))?;
        components.push(Component { focus: s.focus, lambda_m, graph: d.graph });
    }
    let product = ProductHom { components };

    let mut orders = Vec::with_capacity(words.len());
    for (i, w) in words.iter().enumerate() {
        let verified = product.order(w);
        if verified != expected[i] {
            return Err(PipelineError::Verification(format!(
                "word {i}: product order {verified}, expected {}",
                expected[i]
            )));
        }
        orders.push(OrderRow { index: i, target: targets[i], expected: expected[i], verified });
    }
    Ok(PipelineOutcome {
        words: words.to_vec(),
        representatives: reps,
        hypotheses,
        stages,
        combination,
        product,
        orders,
    })
}

impl From<BaseError> for PipelineError {
    fn from(e: BaseError) -> Self {
        match e {
            BaseError::BudgetExceeded { attempts, .. } => PipelineError::BudgetExceeded {
                stage: "base search".into(),
                trace: vec![format!("{attempts} candidates")],
            },
            other => PipelineError::Input(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combine_examples() {
        let c = combine(&[vec![2, 3], vec![3, 2]], &[2, 1]);
        assert_eq!((c.k, c.multipliers.clone(), c.orders.clone()), (6, vec![6, 3], vec![12, 6]));
        let c = combine(&[vec![2, 3], vec![3, 2]], &[1, 1]);
        assert_eq!((c.multipliers.clone(), c.orders.clone()), (vec![3, 3], vec![6, 6]));
        let c = combine(&[vec![7]], &[4]);
        assert_eq!((c.k, c.orders.clone()), (7, vec![28]));
    }

    #[test]
    fn stabilization_examples() {
        // D = 2, C = 5: lcm(6m, 5) is not linear in m
        let raw: Vec<u128> = (1..=5).map(|m| focus_order(5, 2, m)).collect();
        assert_eq!(raw, vec![30, 60, 90, 120, 30]);
        let (c, kjj) = stabilization_constants(5, 2);
        assert_eq!((c, kjj), (5, 30));
        for m in 1..=10 {
            assert_eq!(focus_order(5, 2, c * m), m * kjj);
        }
        assert_eq!(stabilization_constants(1, 7), (1, 21));
    }
}

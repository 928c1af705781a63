//! The JSON report document and its independent re-verification.

use serde::{Deserialize, Serialize};

use freeprod::arith::lcm_all;
use freeprod::base::Certificate;
use freeprod::graph::{ActionGraph, GraphViolation};
use freeprod::omnipotence::{Combination, Component, FamilyStage, PipelineParams};
use freeprod::surgery::{ConfinementReport, SurgeryPlan};
use freeprod::word::HypothesisReport;
use freeprod::Permutation;

use crate::config::{ConfigDocument, ParamBlock};

pub const FORMAT: &str = "freeprod-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    Negative,
    BudgetExceeded,
    InputError,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Success => 0,
            Status::Negative => 1,
            Status::BudgetExceeded => 2,
            Status::InputError => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseSection {
    pub focus: usize,
    pub candidates_tried: usize,
    pub graph: Option<ActionGraph>,
    pub certificate: Option<Certificate>,
}

/// One word measured on a spliced graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurgeryWord {
    pub name: String,
    pub order: u128,
    /// `(orbit length, winding, count)`.
    pub classes: Vec<(usize, i64, usize)>,
    pub confinement: ConfinementReport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurgerySection {
    pub focus: usize,
    pub base: ActionGraph,
    pub certificate: Certificate,
    pub plan: SurgeryPlan,
    pub copies: usize,
    pub vertex_count: usize,
    pub expected_vertex_count: usize,
    pub violation: Option<GraphViolation>,
    pub spliced_length: usize,
    pub expected_spliced_length: u128,
    /// Drawn regions meet only cyclically adjacent regions.
    pub regions_adjacent_only: bool,
    pub words: Vec<SurgeryWord>,
}

impl SurgerySection {
    pub fn structure_holds(&self) -> bool {
        self.violation.is_none()
            && self.vertex_count == self.expected_vertex_count
            && self.spliced_length as u128 == self.expected_spliced_length
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSection {
    pub representatives: Vec<String>,
    pub stages: Vec<FamilyStage>,
    pub combination: Combination,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrdersRow {
    pub name: String,
    pub word: String,
    pub target: u128,
    pub k: u128,
    pub expected: u128,
    pub verified: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductSection {
    pub vertex_count: usize,
    pub components: Vec<Component>,
    /// `images[i][c]`: image of word `i` in component `c`.
    pub images: Vec<Vec<Permutation>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub command: String,
    pub status: Status,
    /// The configuration with every parameter made explicit; loadable as a config.
    pub input: ConfigDocument,
    pub hypotheses: Option<HypothesisReport>,
    pub base: Option<BaseSection>,
    pub surgery: Option<SurgerySection>,
    pub pipeline: Option<PipelineSection>,
    pub orders: Vec<OrdersRow>,
    pub product: Option<ProductSection>,
    pub messages: Vec<String>,
    /// Excluded from determinism comparisons.
    pub timing: Timing,
}

impl Report {
    pub fn new(command: &str, input: &ConfigDocument, params: &PipelineParams) -> Self {
        let mut input = input.clone();
        input.params = ParamBlock::from_params(params);
        Self {
            format: FORMAT.into(),
            command: command.into(),
            status: Status::Success,
            input,
            hypotheses: None,
            base: None,
            surgery: None,
            pipeline: None,
            orders: Vec::new(),
            product: None,
            messages: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl ParamBlock {
    pub fn from_params(p: &PipelineParams) -> Self {
        Self {
            k_prime: p.k_prime,
            girth_target: Some(p.girth_target),
            near_margin: Some(p.near_margin),
            max_vertices: Some(p.max_vertices),
            seed: Some(p.seed),
            attempt_budget: Some(p.attempt_budget),
            paper_constants: Some(p.paper_constants),
            m_range: Some(p.m_range.clone()),
            proposition_mode: Some(p.proposition_mode),
            source: Some(p.source),
            family_bases: Some(p.family_bases),
            max_product_vertices: Some(p.max_product_vertices),
            parallel: Some(p.parallel),
        }
    }
}

/// Outcome of re-checking a report from its stored graphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub pass: bool,
    pub recomputed_orders: Vec<u128>,
    pub findings: Vec<String>,
}

/// Recomputes every image permutation and order from the component graphs
/// and the input tables, and compares with the stored values.
pub fn verify_report(report: &Report) -> Result<Verification, crate::config::ConfigError> {
    let inst = report.input.instance()?;
    let mut findings = Vec::new();
    if report.format != FORMAT {
        findings.push(format!("format: expected `{FORMAT}`, found `{}`", report.format));
    }
    let Some(product) = &report.product else {
        findings.push("product: missing".into());
        return Ok(Verification { pass: false, recomputed_orders: vec![], findings });
    };
    if report.orders.len() != inst.words.len() {
        findings.push(format!("orders: {} rows for {} words", report.orders.len(), inst.words.len()));
    }
    if product.images.len() != inst.words.len() {
        findings.push(format!("product.images: {} rows for {} words", product.images.len(), inst.words.len()));
    }
    let mut total = 0;
    for (c, comp) in product.components.iter().enumerate() {
        total += comp.graph.vertex_count();
        if let Err(v) = comp.graph.validate(&inst.fp, false) {
            findings.push(format!("product.components[{c}]: not an action graph: {v:?}"));
        }
    }
    if total != product.vertex_count {
        findings.push(format!("product.vertex_count: stored {}, actual {total}", product.vertex_count));
    }
    if !findings.is_empty() {
        return Ok(Verification { pass: false, recomputed_orders: vec![], findings });
    }
    let mut recomputed = Vec::with_capacity(inst.words.len());
    for (i, w) in inst.words.iter().enumerate() {
        let perms: Vec<Permutation> = product.components.iter().map(|c| c.graph.word_permutation(w)).collect();
        for (c, p) in perms.iter().enumerate() {
            if product.images[i].get(c) != Some(p) {
                findings.push(format!("product.images[{i}][{c}]: differs from the permutation recomputed from the graph"));
            }
        }
        let order = lcm_all(perms.iter().map(Permutation::order));
        recomputed.push(order);
        if let Some(row) = report.orders.get(i) {
            if row.verified != order {
                findings.push(format!("orders[{i}].verified: stored {}, recomputed {order}", row.verified));
            }
            if row.expected != order {
                findings.push(format!("orders[{i}].expected: stored {}, recomputed {order}", row.expected));
            }
            if row.target != inst.targets[i] {
                findings.push(format!("orders[{i}].target: stored {}, config says {}", row.target, inst.targets[i]));
            }
            let focus_row = !inst.params.proposition_mode || i == 0;
            if focus_row && row.k.checked_mul(row.target) != Some(order) {
                findings.push(format!("orders[{i}]: K·l = {}·{} but the order is {order}", row.k, row.target));
            }
        }
    }
    if let Some(first) = report.orders.first() {
        if let Some((i, r)) = report.orders.iter().enumerate().find(|(_, r)| r.k != first.k) {
            findings.push(format!("orders[{i}].k: {} differs from orders[0].k = {}", r.k, first.k));
        }
    }
    Ok(Verification { pass: findings.is_empty(), recomputed_orders: recomputed, findings })
}

//! Subcommand dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use freeprod::base::CandidateStream;
use freeprod::graph::ActionGraph;
use freeprod::omnipotence::{base_spec, run_pipeline, PipelineError};
use freeprod::surgery::{build_delta, DeltaGraph, SurgeryPlan};
use freeprod::word::{HypothesisFailure, Word};
use freeprod::Permutation;

use crate::config::{check_params, ConfigDocument, ConfigError, Instance};
use crate::report::{
    verify_report, BaseSection, OrdersRow, PipelineSection, ProductSection, Report, Status, SurgerySection,
    SurgeryWord,
};

#[derive(Debug, Parser)]
#[command(name = "freeprod", version, about = "Finite quotients of free products of finite groups with prescribed element orders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that the input words satisfy the independence hypotheses.
    Check(RunArgs),
    /// Search for and certify one base quotient.
    Base(StageArgs),
    /// Build and verify one spliced graph with a chosen number of copies.
    Surgery(SurgeryArgs),
    /// Run the full construction and verify the product orders.
    Omnipotence(RunArgs),
    /// Re-check an emitted report against fresh recomputation.
    Verify(VerifyArgs),
    /// Emit a graph in DOT format.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML configuration file.
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_vertices: Option<usize>,
    #[arg(long)]
    pub k_prime: Option<usize>,
    #[arg(long)]
    pub girth: Option<usize>,
    #[arg(long)]
    pub near_margin: Option<usize>,
    /// Use girth 10k, near margin k + 4 and order bound 10k.
    #[arg(long)]
    pub paper_constants: bool,
    /// Comma-separated family sample points, e.g. `1,2,3`.
    #[arg(long, value_delimiter = ',')]
    pub m_range: Option<Vec<usize>>,
    /// Search families concurrently; base choices may then vary between runs.
    #[arg(long)]
    pub parallel: bool,
    /// Treat only the first word as a focus; the others keep constant orders.
    #[arg(long)]
    pub proposition: bool,
    /// Comma-separated targets overriding the config.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<u64>>,
    /// Write the relevant graph(s) in DOT format to this path.
    #[arg(long)]
    pub export_dot: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct StageArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Index of the focus word.
    #[arg(long, default_value_t = 0)]
    pub focus: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SurgeryArgs {
    #[command(flatten)]
    pub stage: StageArgs,
    /// Number of base copies (at least 3).
    #[arg(long, default_value_t = 3)]
    pub copies: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Report produced by `omnipotence`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportStage {
    Base,
    Surgery,
    Product,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub surgery: SurgeryArgs,
    #[arg(long, value_enum, default_value_t = ExportStage::Surgery)]
    pub stage: ExportStage,
}

/// What a command produced: a document for the output sink, a status, and
/// a one-line summary for standard error.
pub struct Outcome {
    pub status: Status,
    pub document: String,
    pub summary: String,
    pub output: Option<PathBuf>,
}

impl Outcome {
    fn input_error(e: impl std::fmt::Display) -> Self {
        Self { status: Status::InputError, document: String::new(), summary: format!("input error: {e}"), output: None }
    }
}

impl RunArgs {
    fn load(&self) -> Result<(ConfigDocument, Instance), ConfigError> {
        let doc = ConfigDocument::load(&self.config)?;
        let mut inst = doc.instance()?;
        let p = &mut inst.params;
        if let Some(s) = self.seed {
            p.seed = s;
        }
        if let Some(v) = self.max_vertices {
            p.max_vertices = v;
        }
        if self.k_prime.is_some() {
            p.k_prime = self.k_prime;
        }
        if let Some(g) = self.girth {
            p.girth_target = g;
        }
        if let Some(n) = self.near_margin {
            p.near_margin = n;
        }
        if let Some(m) = &self.m_range {
            p.m_range = m.clone();
        }
        p.paper_constants |= self.paper_constants;
        p.parallel |= self.parallel;
        p.proposition_mode |= self.proposition;
        check_params(p)?;
        let mut doc = doc;
        if let Some(t) = &self.targets {
            if t.len() != inst.words.len() {
                return Err(ConfigError::Field {
                    field: "--targets".into(),
                    message: format!("{} values for {} words", t.len(), inst.words.len()),
                });
            }
            if t.contains(&0) {
                return Err(ConfigError::Field { field: "--targets".into(), message: "targets must be positive".into() });
            }
            inst.targets = t.iter().map(|&x| x as u128).collect();
            for (w, &x) in doc.words.iter_mut().zip(t) {
                w.target = x;
            }
        }
        Ok((doc, inst))
    }
}

pub fn run(cli: Cli) -> Outcome {
    let started = Instant::now();
    let (mut report, dot, output) = match cli.command {
        Command::Verify(args) => return verify(&args),
        Command::Check(args) => match args.load() {
            Ok((doc, inst)) => (check(&doc, &inst), None, (args.output, args.export_dot)),
            Err(e) => return Outcome::input_error(e),
        },
        Command::Base(args) => match args.run.load() {
            Ok((doc, inst)) => {
                let (r, g) = base(&doc, &inst, args.focus);
                (r, g.map(|g| g.to_dot(&inst.alphabet)), (args.run.output, args.run.export_dot))
            }
            Err(e) => return Outcome::input_error(e),
        },
        Command::Surgery(args) => match args.stage.run.load() {
            Ok((doc, inst)) => {
                let (r, d) = surgery(&doc, &inst, args.stage.focus, args.copies);
                let run = args.stage.run;
                (r, d.map(|d| d.graph.to_dot(&inst.alphabet)), (run.output, run.export_dot))
            }
            Err(e) => return Outcome::input_error(e),
        },
        Command::Omnipotence(args) => match args.load() {
            Ok((doc, inst)) => {
                let r = omnipotence(&doc, &inst);
                let dot = product_dot(&r, &inst);
                (r, dot, (args.output, args.export_dot))
            }
            Err(e) => return Outcome::input_error(e),
        },
        Command::Export(args) => return export(args),
    };
    report.timing.elapsed_ms = started.elapsed().as_millis() as u64;
    let (output, export_dot) = output;
    if let (Some(path), Some(dot)) = (export_dot, dot) {
        if let Err(e) = std::fs::write(&path, dot) {
            return Outcome::input_error(format!("cannot write {}: {e}", path.display()));
        }
    }
    let summary = summarize(&report);
    Outcome { status: report.status, document: report.to_json(), summary, output }
}

fn summarize(r: &Report) -> String {
    let status = serde_json::to_value(r.status).expect("status serializes");
    let status = status.as_str().unwrap_or_default();
    let mut s = format!("{}: {status}", r.command);
    if let Some(row) = r.orders.first() {
        let orders: Vec<String> = r.orders.iter().map(|o| o.verified.to_string()).collect();
        s.push_str(&format!(", K = {}, orders [{}]", row.k, orders.join(", ")));
    }
    if let Some(m) = r.messages.last() {
        s.push_str(&format!(" ({m})"));
    }
    s
}

fn reps(inst: &Instance) -> Vec<Word> {
    inst.words.iter().map(|w| inst.fp.cyclic_reduce(w).representative).collect()
}

fn check(doc: &ConfigDocument, inst: &Instance) -> Report {
    let mut r = Report::new("check", doc, &inst.params);
    let h = inst.fp.check_hypotheses(&inst.words);
    r.status = if h.passes() { Status::Success } else { Status::Negative };
    if h.passes() {
        r.messages.push(format!("hypotheses hold for all {} words", inst.words.len()));
    }
    for f in &h.failures {
        r.messages.push(describe_failure(inst, f));
    }
    r.hypotheses = Some(h);
    r
}

fn describe_failure(inst: &Instance, f: &HypothesisFailure) -> String {
    match f {
        HypothesisFailure::InFactorConjugate { index, cyclic_length } => format!(
            "{} is conjugate into a factor (cyclic length {cyclic_length})",
            inst.names[*index]
        ),
        HypothesisFailure::SharedCyclicSubgroup { first, second } => format!(
            "{} and {} have powers in conjugate cyclic subgroups",
            inst.names[*first], inst.names[*second]
        ),
    }
}

fn focus_in_range(r: &mut Report, inst: &Instance, focus: usize) -> bool {
    if focus >= inst.words.len() {
        r.status = Status::InputError;
        r.messages.push(format!("--focus {focus}: only {} words", inst.words.len()));
        return false;
    }
    true
}

fn base(doc: &ConfigDocument, inst: &Instance, focus: usize) -> (Report, Option<ActionGraph>) {
    let mut r = Report::new("base", doc, &inst.params);
    if !focus_in_range(&mut r, inst, focus) {
        return (r, None);
    }
    let reps = reps(inst);
    let spec = match base_spec(&inst.params, &reps, focus) {
        Ok(s) => s,
        Err(e) => {
            r.status = Status::Negative;
            r.messages.push(e.to_string());
            return (r, None);
        }
    };
    let mut stream = match CandidateStream::new(&inst.fp, &spec) {
        Ok(s) => s,
        Err(e) => {
            r.status = Status::Negative;
            r.messages.push(e.to_string());
            return (r, None);
        }
    };
    match stream.next_certified() {
        Some((g, cert)) => {
            r.messages.push(format!("certified base with {} vertices", g.vertex_count()));
            r.base = Some(BaseSection {
                focus,
                candidates_tried: stream.attempts(),
                graph: Some(g.clone()),
                certificate: Some(cert),
            });
            (r, Some(g))
        }
        None => {
            let attempts = stream.attempts();
            r.status = Status::BudgetExceeded;
            r.messages.push(format!(
                "no certified base in {attempts} candidates; raise --max-vertices or lower --girth/--near-margin"
            ));
            r.base = Some(BaseSection {
                focus,
                candidates_tried: attempts,
                graph: None,
                certificate: stream.best_near_miss().cloned(),
            });
            (r, None)
        }
    }
}

/// First certified base admitting a surgery plan for the focus word.
pub fn find_plan(
    inst: &Instance,
    focus: usize,
) -> Result<(ActionGraph, freeprod::base::Certificate, SurgeryPlan), (Status, Vec<String>)> {
    let reps = reps(inst);
    let spec = base_spec(&inst.params, &reps, focus).map_err(|e| (Status::Negative, vec![e.to_string()]))?;
    let mut stream = CandidateStream::new(&inst.fp, &spec).map_err(|e| (Status::Negative, vec![e.to_string()]))?;
    let mut trace = Vec::new();
    while let Some((g, cert)) = stream.next_certified() {
        let t = g.image_order(&reps[focus]);
        let k_primes: Vec<usize> = match inst.params.k_prime {
            Some(k) => vec![k],
            None => (1..t.min(usize::MAX as u128) as usize).collect(),
        };
        for k_prime in k_primes {
            match SurgeryPlan::new(&inst.fp, &g, &reps[focus], k_prime) {
                Ok(plan) => return Ok((g, cert, plan)),
                Err(e) => trace.push(format!("N={} k'={k_prime}: {e}", g.vertex_count())),
            }
        }
    }
    trace.push(format!("{} candidates examined", stream.attempts()));
    Err((Status::BudgetExceeded, trace))
}

fn surgery(doc: &ConfigDocument, inst: &Instance, focus: usize, copies: usize) -> (Report, Option<DeltaGraph>) {
    let mut r = Report::new("surgery", doc, &inst.params);
    if !focus_in_range(&mut r, inst, focus) {
        return (r, None);
    }
    let (base, cert, plan) = match find_plan(inst, focus) {
        Ok(x) => x,
        Err((status, trace)) => {
            r.status = status;
            r.messages = trace;
            return (r, None);
        }
    };
    let delta = match build_delta(&inst.fp, &base, &plan, copies) {
        Ok(d) => d,
        Err(e) => {
            r.status = Status::Negative;
            r.messages.push(e.to_string());
            return (r, None);
        }
    };
    let section = surgery_section(inst, focus, &base, cert, &delta);
    r.status = if section.structure_holds() && section.regions_adjacent_only { Status::Success } else { Status::Negative };
    r.messages.push(format!(
        "{} copies, {} vertices, spliced cycle length {}",
        copies, section.vertex_count, section.spliced_length
    ));
    r.surgery = Some(section);
    (r, Some(delta))
}

pub fn surgery_section(
    inst: &Instance,
    focus: usize,
    base: &ActionGraph,
    certificate: freeprod::base::Certificate,
    delta: &DeltaGraph,
) -> SurgerySection {
    let copies = delta.copies;
    let adjacent = |x: usize, y: usize| x == y || (x + 1) % copies == y || (y + 1) % copies == x;
    let words = reps(inst)
        .iter()
        .zip(&inst.names)
        .map(|(w, name)| {
            let mut classes = std::collections::BTreeMap::new();
            for o in delta.winding_orbits(w) {
                *classes.entry((o.length, o.winding)).or_insert(0usize) += 1;
            }
            SurgeryWord {
                name: name.clone(),
                order: delta.graph.image_order(w),
                classes: classes.into_iter().map(|((l, k), c)| (l, k, c)).collect(),
                confinement: delta.verify_confinement(w),
            }
        })
        .collect();
    SurgerySection {
        focus,
        base: base.clone(),
        certificate,
        plan: delta.plan.clone(),
        copies,
        vertex_count: delta.graph.vertex_count(),
        expected_vertex_count: copies * (base.vertex_count() + 1),
        violation: delta.graph.validate(&inst.fp, false).err(),
        spliced_length: delta.spliced_cycle().length,
        expected_spliced_length: (delta.plan.base_order - delta.plan.k_prime as u128) * copies as u128,
        regions_adjacent_only: delta.region_intersections().iter().all(|&(x, y)| adjacent(x, y)),
        words,
    }
}

fn omnipotence(doc: &ConfigDocument, inst: &Instance) -> Report {
    let mut r = Report::new("omnipotence", doc, &inst.params);
    match run_pipeline(&inst.fp, &inst.words, &inst.targets, &inst.params) {
        Ok(out) => {
            let k = out.combination.k;
            r.hypotheses = Some(out.hypotheses.clone());
            r.orders = out
                .orders
                .iter()
                .map(|row| OrdersRow {
                    name: inst.names[row.index].clone(),
                    word: inst.alphabet.format(&inst.words[row.index]),
                    target: row.target,
                    k,
                    expected: row.expected,
                    verified: row.verified,
                })
                .collect();
            let images: Vec<Vec<Permutation>> = inst.words.iter().map(|w| out.product.word_permutations(w)).collect();
            r.product = Some(ProductSection {
                vertex_count: out.product.vertex_count(),
                components: out.product.components,
                images,
            });
            r.pipeline = Some(PipelineSection {
                representatives: out.representatives.iter().map(|w| inst.alphabet.format(w)).collect(),
                stages: out.stages,
                combination: out.combination,
            });
            r.messages.push(format!("K = {k}"));
        }
        Err(PipelineError::Hypothesis(h)) => {
            r.status = Status::Negative;
            r.messages.extend(h.failures.iter().map(|f| describe_failure(inst, f)));
            r.hypotheses = Some(*h);
        }
        Err(PipelineError::BudgetExceeded { stage, trace }) => {
            r.status = Status::BudgetExceeded;
            r.messages = trace;
            r.messages.push(format!("budget exceeded at {stage}; raise --max-vertices or the attempt budget"));
        }
        Err(e @ (PipelineError::Input(_) | PipelineError::Verification(_))) => {
            r.status = Status::Negative;
            r.messages.push(e.to_string());
        }
    }
    r
}

fn product_dot(r: &Report, inst: &Instance) -> Option<String> {
    let p = r.product.as_ref()?;
    Some(p.components.iter().map(|c| c.graph.to_dot(&inst.alphabet)).collect())
}

fn verify(args: &VerifyArgs) -> Outcome {
    let text = match std::fs::read_to_string(&args.report) {
        Ok(t) => t,
        Err(e) => return Outcome::input_error(format!("cannot read {}: {e}", args.report.display())),
    };
    let report = match Report::from_json(&text) {
        Ok(r) => r,
        Err(e) => return Outcome::input_error(format!("{}: {e}", args.report.display())),
    };
    let v = match verify_report(&report) {
        Ok(v) => v,
        Err(e) => return Outcome::input_error(format!("{}: input: {e}", args.report.display())),
    };
    let summary = if v.pass {
        format!("verify: success, orders {:?}", v.recomputed_orders)
    } else {
        format!("verify: negative, {}", v.findings.join("; "))
    };
    Outcome {
        status: if v.pass { Status::Success } else { Status::Negative },
        document: serde_json::to_string_pretty(&v).expect("verification serializes"),
        summary,
        output: args.output.clone(),
    }
}

fn export(args: ExportArgs) -> Outcome {
    let run = args.surgery.stage.run.clone();
    let (doc, inst) = match run.load() {
        Ok(x) => x,
        Err(e) => return Outcome::input_error(e),
    };
    let focus = args.surgery.stage.focus;
    let (report, dot) = match args.stage {
        ExportStage::Base => {
            let (r, g) = base(&doc, &inst, focus);
            (r, g.map(|g| g.to_dot(&inst.alphabet)))
        }
        ExportStage::Surgery => {
            let (r, d) = surgery(&doc, &inst, focus, args.surgery.copies);
            (r, d.map(|d| d.graph.to_dot(&inst.alphabet)))
        }
        ExportStage::Product => {
            let r = omnipotence(&doc, &inst);
            let dot = product_dot(&r, &inst);
            (r, dot)
        }
    };
    let summary = summarize(&report);
    let output = run.export_dot.or(run.output);
    match dot {
        Some(dot) => Outcome { status: report.status, document: dot, summary, output },
        None => Outcome { status: report.status, document: String::new(), summary, output: None },
    }
}

/// Writes the document to its sink; returns the process exit code.
pub fn finish(outcome: &Outcome) -> u8 {
    if !outcome.document.is_empty() {
        match &outcome.output {
            Some(path) => {
                if let Err(e) = write_file(path, &outcome.document) {
                    eprintln!("cannot write {}: {e}", path.display());
                    return Status::InputError.exit_code();
                }
            }
            None => {
                // a closed pipe downstream is not an error of ours
                let mut out = std::io::stdout().lock();
                if let Err(e) = writeln!(out, "{}", outcome.document).and_then(|()| out.flush()) {
                    if e.kind() != std::io::ErrorKind::BrokenPipe {
                        eprintln!("cannot write to standard output: {e}");
                        return Status::InputError.exit_code();
                    }
                }
            }
        }
    }
    eprintln!("{}", outcome.summary);
    outcome.status.exit_code()
}

fn write_file(path: &Path, text: &str) -> std::io::Result<()> {
    std::fs::write(path, text)
}

//! TOML configuration: two factor groups given by token tables, the input
//! words with their targets, and search parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use freeprod::base::BaseSource;
use freeprod::omnipotence::PipelineParams;
use freeprod::word::{Alphabet, FreeProduct, Word};
use freeprod::FiniteGroup;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{source_name}line {line}, field `{field}`: {message}")]
    Parse { source_name: String, line: usize, field: String, message: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupBlock {
    pub name: String,
    /// Element tokens, identity first.
    pub elements: Vec<String>,
    /// Row `g`, column `h` holds the token of `g·h`.
    pub table: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Groups {
    pub a: GroupBlock,
    pub b: GroupBlock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordBlock {
    pub name: String,
    /// Whitespace-separated element tokens.
    pub syllables: String,
    #[serde(default = "one")]
    pub target: u64,
}

fn one() -> u64 {
    1
}

/// Every field is optional; unset fields keep the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamBlock {
    pub k_prime: Option<usize>,
    pub girth_target: Option<usize>,
    pub near_margin: Option<usize>,
    pub max_vertices: Option<usize>,
    pub seed: Option<u64>,
    pub attempt_budget: Option<usize>,
    pub paper_constants: Option<bool>,
    pub m_range: Option<Vec<usize>>,
    pub proposition_mode: Option<bool>,
    pub source: Option<BaseSource>,
    pub family_bases: Option<usize>,
    pub max_product_vertices: Option<usize>,
    pub parallel: Option<bool>,
}

impl ParamBlock {
    /// Overlays the set fields of `self` on `params`.
    pub fn apply(&self, params: &mut PipelineParams) {
        if self.k_prime.is_some() {
            params.k_prime = self.k_prime;
        }
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f.clone() { params.$f = v; })*};
        }
        set!(
            girth_target,
            near_margin,
            max_vertices,
            seed,
            attempt_budget,
            paper_constants,
            m_range,
            proposition_mode,
            source,
            family_bases,
            max_product_vertices,
            parallel
        );
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub groups: Groups,
    #[serde(rename = "word", default)]
    pub words: Vec<WordBlock>,
    #[serde(default)]
    pub params: ParamBlock,
}

/// A checked configuration ready for the library.
#[derive(Debug, Clone)]
pub struct Instance {
    pub fp: FreeProduct,
    pub alphabet: Alphabet,
    pub names: Vec<String>,
    pub words: Vec<Word>,
    pub targets: Vec<u128>,
    pub params: PipelineParams,
}

impl ConfigDocument {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| parse_error(text, &e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { line, field, message, .. } => {
                ConfigError::Parse { source_name: format!("{}: ", path.display()), line, field, message }
            }
            other => other,
        })
    }

    /// Validates tables, tokens and targets, and resolves words.
    pub fn instance(&self) -> Result<Instance, ConfigError> {
        let a = group(&self.groups.a, "groups.a")?;
        let b = group(&self.groups.b, "groups.b")?;
        for (i, t) in self.groups.a.elements.iter().enumerate().skip(1) {
            if self.groups.b.elements[1..].contains(t) {
                return Err(field(
                    format!("groups.a.elements[{i}]"),
                    format!("token `{t}` is also a nonidentity element of groups.b"),
                ));
            }
        }
        let fp = FreeProduct::new(a, b);
        let alphabet = Alphabet { a: self.groups.a.elements.clone(), b: self.groups.b.elements.clone() };
        if self.words.is_empty() {
            return Err(field("word", "at least one word is required"));
        }
        let mut names = Vec::new();
        let mut words = Vec::new();
        let mut targets = Vec::new();
        for (i, w) in self.words.iter().enumerate() {
            if names.contains(&w.name) {
                return Err(field(format!("word[{i}].name"), format!("duplicate name `{}`", w.name)));
            }
            let word = alphabet
                .parse(&fp, &w.syllables)
                .map_err(|e| field(format!("word[{i}].syllables"), e.to_string()))?;
            if w.target == 0 {
                return Err(field(format!("word[{i}].target"), "targets must be positive"));
            }
            names.push(w.name.clone());
            words.push(word);
            targets.push(w.target as u128);
        }
        let mut params = PipelineParams::default();
        self.params.apply(&mut params);
        check_params(&params)?;
        Ok(Instance { fp, alphabet, names, words, targets, params })
    }
}

/// Locates a TOML error: the line, and the dotted key written on it (with
/// the enclosing table header and array-of-tables index).
fn parse_error(text: &str, e: &toml::de::Error) -> ConfigError {
    let offset = e.span().map_or(text.len(), |s| s.start.min(text.len()));
    let line = text[..offset].matches('\n').count() + 1;
    let mut table = String::new();
    let mut arrays: Vec<(String, usize)> = Vec::new();
    for src in text.lines().take(line - 1) {
        let t = src.trim();
        if let Some(name) = t.strip_prefix("[[").and_then(|r| r.strip_suffix("]]")) {
            let name = name.trim().to_string();
            let idx = match arrays.iter_mut().find(|(n, _)| *n == name) {
                Some((_, i)) => {
                    *i += 1;
                    *i
                }
                None => {
                    arrays.push((name.clone(), 0));
                    0
                }
            };
            table = format!("{name}[{idx}]");
        } else if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            table = name.trim().to_string();
        }
    }
    let key = text
        .lines()
        .nth(line - 1)
        .and_then(|l| l.split_once('='))
        .map(|(k, _)| k.trim().to_string())
        .filter(|k| !k.is_empty() && !k.starts_with('['));
    let field = match (table.is_empty(), key) {
        (_, Some(k)) if table.is_empty() => k,
        (false, Some(k)) => format!("{table}.{k}"),
        (_, None) if !table.is_empty() => table,
        _ => "(top level)".into(),
    };
    ConfigError::Parse { source_name: String::new(), line, field, message: e.message().trim().to_string() }
}

pub fn check_params(p: &PipelineParams) -> Result<(), ConfigError> {
    if p.girth_target == 0 {
        return Err(field("params.girth_target", "must be at least 1"));
    }
    if p.m_range.is_empty() || p.m_range.contains(&0) {
        return Err(field("params.m_range", "must be a nonempty list of positive integers"));
    }
    if p.k_prime == Some(0) {
        return Err(field("params.k_prime", "must be positive"));
    }
    if p.attempt_budget == 0 || p.family_bases == 0 {
        return Err(field("params", "attempt_budget and family_bases must be positive"));
    }
    Ok(())
}

fn group(block: &GroupBlock, path: &str) -> Result<FiniteGroup, ConfigError> {
    let n = block.elements.len();
    if n == 0 {
        return Err(field(format!("{path}.elements"), "no elements"));
    }
    for (i, t) in block.elements.iter().enumerate() {
        if block.elements[..i].contains(t) {
            return Err(field(format!("{path}.elements[{i}]"), format!("duplicate token `{t}`")));
        }
        if t.split_whitespace().count() != 1 {
            return Err(field(format!("{path}.elements[{i}]"), "tokens must be single words"));
        }
    }
    if block.table.len() != n {
        return Err(field(format!("{path}.table"), format!("{} rows, expected {n}", block.table.len())));
    }
    let mut rows = Vec::with_capacity(n);
    for (r, row) in block.table.iter().enumerate() {
        if row.len() != n {
            return Err(field(format!("{path}.table[{r}]"), format!("{} entries, expected {n}", row.len())));
        }
        let mut out = Vec::with_capacity(n);
        for (c, t) in row.iter().enumerate() {
            let idx = block
                .elements
                .iter()
                .position(|e| e == t)
                .ok_or_else(|| field(format!("{path}.table[{r}][{c}]"), format!("unknown token `{t}`")))?;
            out.push(idx);
        }
        rows.push(out);
    }
    FiniteGroup::from_table(block.name.clone(), rows).map_err(|e| field(format!("{path}.table"), e.to_string()))
}

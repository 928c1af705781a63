//! Reduced words in the free product `A ∗ B` of two finite groups, with
//! cyclic reduction, roots, conjugacy and the independence hypothesis check.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::FiniteGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Factor {
    A,
    B,
}

impl Factor {
    pub fn other(self) -> Factor {
        match self {
            Factor::A => Factor::B,
            Factor::B => Factor::A,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Factor::A => 0,
            Factor::B => 1,
        }
    }
}

/// One factor element inside a word. Ordered by factor (A before B), then element index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Syllable {
    pub factor: Factor,
    pub element: usize,
}

impl Syllable {
    pub fn new(factor: Factor, element: usize) -> Self {
        Self { factor, element }
    }

    pub fn a(element: usize) -> Self {
        Self::new(Factor::A, element)
    }

    pub fn b(element: usize) -> Self {
        Self::new(Factor::B, element)
    }
}

impl fmt::Display for Syllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.factor {
            Factor::A => write!(f, "a{}", self.element),
            Factor::B => write!(f, "b{}", self.element),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("syllable {position}: element {element} out of range for factor {factor:?} of order {order}")]
    ElementOutOfRange { position: usize, factor: Factor, element: usize, order: usize },
    #[error("syllable {position} is not reduced: {reason}")]
    NotReduced { position: usize, reason: &'static str },
    #[error("word must be cyclically reduced with at least two syllables, got length {length}")]
    NeedsCyclicLength { length: usize },
    #[error("unknown syllable token `{0}`")]
    UnknownToken(String),
}

/// A reduced word: nonidentity syllables with alternating factors. The empty
/// word is the identity of `A ∗ B`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word {
    syllables: Vec<Syllable>,
}

impl Word {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Accepts an already reduced syllable sequence. Element ranges are not
    /// checked here; use [`FreeProduct::reduce`] for untrusted input.
    pub fn from_reduced(syllables: Vec<Syllable>) -> Result<Self, WordError> {
        for (i, s) in syllables.iter().enumerate() {
            if s.element == 0 {
                return Err(WordError::NotReduced { position: i, reason: "identity syllable" });
            }
            if i > 0 && syllables[i - 1].factor == s.factor {
                return Err(WordError::NotReduced { position: i, reason: "same factor as predecessor" });
            }
        }
        Ok(Self { syllables })
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    /// Syllable length `l(w)`.
    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    /// First and last syllables lie in different factors (or length ≤ 1).
    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.syllables.first(), self.syllables.last()) {
            (Some(f), Some(l)) if self.len() >= 2 => f.factor != l.factor,
            _ => true,
        }
    }

    /// Left rotation by `k` syllables. Only meaningful for cyclically reduced words.
    pub fn rotate(&self, k: usize) -> Word {
        if self.is_empty() {
            return self.clone();
        }
        let k = k % self.len();
        let mut s = self.syllables[k..].to_vec();
        s.extend_from_slice(&self.syllables[..k]);
        Word { syllables: s }
    }

    /// Concatenation `self^t` as a syllable sequence (no reduction).
    fn repeat(&self, t: usize) -> Vec<Syllable> {
        self.syllables.repeat(t)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.syllables.iter().map(Syllable::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Cyclically reduced, canonically rotated conjugate of a word, with the
/// conjugator: `conjugator⁻¹ · representative · conjugator = original`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicWord {
    pub representative: Word,
    pub conjugator: Word,
}

/// The free product `A ∗ B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeProduct {
    a: FiniteGroup,
    b: FiniteGroup,
}

impl FreeProduct {
    pub fn new(a: FiniteGroup, b: FiniteGroup) -> Self {
        Self { a, b }
    }

    pub fn factor(&self, f: Factor) -> &FiniteGroup {
        match f {
            Factor::A => &self.a,
            Factor::B => &self.b,
        }
    }

    pub fn a(&self) -> &FiniteGroup {
        &self.a
    }

    pub fn b(&self) -> &FiniteGroup {
        &self.b
    }

    /// Reduced word from an arbitrary syllable sequence: merges adjacent
    /// syllables of the same factor and drops identities until reduced.
    pub fn reduce(&self, raw: &[Syllable]) -> Result<Word, WordError> {
        let mut stack: Vec<Syllable> = Vec::with_capacity(raw.len());
        for (position, &s) in raw.iter().enumerate() {
            let group = self.factor(s.factor);
            if s.element >= group.order() {
                return Err(WordError::ElementOutOfRange {
                    position,
                    factor: s.factor,
                    element: s.element,
                    order: group.order(),
                });
            }
            self.push_reducing(&mut stack, s);
        }
        Ok(Word { syllables: stack })
    }

    fn push_reducing(&self, stack: &mut Vec<Syllable>, s: Syllable) {
        if s.element == 0 {
            return;
        }
        match stack.last() {
            Some(top) if top.factor == s.factor => {
                let merged = self.factor(s.factor).mul(top.element, s.element);
                stack.pop();
                if merged != 0 {
                    stack.push(Syllable::new(s.factor, merged));
                }
            }
            _ => stack.push(s),
        }
    }

    pub fn mul(&self, x: &Word, y: &Word) -> Word {
        let mut stack = x.syllables.clone();
        for &s in &y.syllables {
            self.push_reducing(&mut stack, s);
        }
        Word { syllables: stack }
    }

    pub fn inverse(&self, w: &Word) -> Word {
        Word {
            syllables: w
                .syllables
                .iter()
                .rev()
                .map(|s| Syllable::new(s.factor, self.factor(s.factor).inverse(s.element)))
                .collect(),
        }
    }

    pub fn pow(&self, w: &Word, e: usize) -> Word {
        (0..e).fold(Word::empty(), |acc, _| self.mul(&acc, w))
    }

    /// `c⁻¹ · w · c`.
    pub fn conjugate(&self, w: &Word, c: &Word) -> Word {
        self.mul(&self.mul(&self.inverse(c), w), c)
    }

    /// Cyclically reduced conjugate with explicit conjugator; words of length
    /// ≥ 2 are rotated to their least rotation.
    pub fn cyclic_reduce(&self, w: &Word) -> CyclicWord {
        let mut current = w.clone();
        let mut conjugator = Word::empty();
        // invariant: w = conjugator⁻¹ · current · conjugator
        while current.len() >= 2 && !current.is_cyclically_reduced() {
            let last = *current.syllables.last().expect("len >= 2");
            let y = Word { syllables: vec![last] };
            // current = y⁻¹ · (y · current · y⁻¹) · y
            current = self.mul(&self.mul(&y, &current), &self.inverse(&y));
            conjugator = self.mul(&y, &conjugator);
        }
        if current.len() >= 2 {
            let (k, _) = (0..current.len())
                .map(|k| (k, current.rotate(k)))
                .min_by(|x, y| x.1.cmp(&y.1))
                .expect("nonempty");
            if k > 0 {
                // rotation by k is P⁻¹ · current · P with P the first k syllables
                let prefix = Word { syllables: current.syllables[..k].to_vec() };
                current = current.rotate(k);
                conjugator = self.mul(&self.inverse(&prefix), &conjugator);
            }
        }
        CyclicWord { representative: current, conjugator }
    }

    /// Cyclic length `l'(w)`.
    pub fn cyclic_length(&self, w: &Word) -> usize {
        self.cyclic_reduce(w).representative.len()
    }

    /// Primitive root of a cyclically reduced word of length ≥ 2:
    /// `w = r^t` as syllable sequences with `t` maximal.
    pub fn root(&self, w: &Word) -> Result<(Word, usize), WordError> {
        if w.len() < 2 || !w.is_cyclically_reduced() {
            return Err(WordError::NeedsCyclicLength { length: w.len() });
        }
        let n = w.len();
        for d in (1..=n).filter(|d| n % d == 0) {
            let candidate = Word { syllables: w.syllables[..d].to_vec() };
            if candidate.repeat(n / d) == w.syllables {
                return Ok((candidate, n / d));
            }
        }
        unreachable!("d = n always matches")
    }

    /// Conjugacy in `A ∗ B`: rotation criterion for cyclic length ≥ 2,
    /// in-factor conjugacy for cyclic length 1.
    pub fn are_conjugate(&self, x: &Word, y: &Word) -> bool {
        let rx = self.cyclic_reduce(x).representative;
        let ry = self.cyclic_reduce(y).representative;
        match (rx.len(), ry.len()) {
            (0, 0) => true,
            (1, 1) => {
                let (sx, sy) = (rx.syllables[0], ry.syllables[0]);
                sx.factor == sy.factor && self.factor(sx.factor).are_conjugate(sx.element, sy.element)
            }
            (lx, ly) if lx >= 2 && lx == ly => rx == ry,
            _ => false,
        }
    }

    /// Whether the cyclic subgroups generated by `x` and `y` have conjugates
    /// inside a common cyclic subgroup: compares primitive roots up to
    /// conjugation and inversion.
    pub fn share_conjugate_cyclic_subgroup(&self, x: &Word, y: &Word) -> Result<bool, WordError> {
        let rx = self.cyclic_reduce(x).representative;
        let ry = self.cyclic_reduce(y).representative;
        let (root_x, _) = self.root(&rx)?;
        let (root_y, _) = self.root(&ry)?;
        Ok(self.are_conjugate(&root_x, &root_y)
            || self.are_conjugate(&root_x, &self.inverse(&root_y)))
    }

    /// The independence hypotheses on the input elements.
    pub fn check_hypotheses(&self, words: &[Word]) -> HypothesisReport {
        let mut entries = Vec::with_capacity(words.len());
        let mut failures = Vec::new();
        for (index, w) in words.iter().enumerate() {
            let rep = self.cyclic_reduce(w).representative;
            let root = self.root(&rep).ok();
            if rep.len() < 2 {
                failures.push(HypothesisFailure::InFactorConjugate { index, cyclic_length: rep.len() });
            }
            entries.push(WordHypothesis {
                index,
                length: w.len(),
                cyclic_length: rep.len(),
                root_length: root.as_ref().map(|(r, _)| r.len()),
                root_exponent: root.as_ref().map(|(_, t)| *t),
            });
        }
        for i in 0..words.len() {
            for j in i + 1..words.len() {
                if let Ok(true) = self.share_conjugate_cyclic_subgroup(&words[i], &words[j]) {
                    failures.push(HypothesisFailure::SharedCyclicSubgroup { first: i, second: j });
                }
            }
        }
        HypothesisReport { entries, failures, interpretation: HYPOTHESIS_READING.to_string() }
    }
}

/// How the pairwise independence condition is read.
pub const HYPOTHESIS_READING: &str =
    "distinct inputs must not have powers in conjugate cyclic subgroups (condition holds only for i = j)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordHypothesis {
    pub index: usize,
    pub length: usize,
    pub cyclic_length: usize,
    pub root_length: Option<usize>,
    pub root_exponent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisFailure {
    /// Conjugate into a factor: cyclic length ≤ 1.
    InFactorConjugate { index: usize, cyclic_length: usize },
    SharedCyclicSubgroup { first: usize, second: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub entries: Vec<WordHypothesis>,
    pub failures: Vec<HypothesisFailure>,
    pub interpretation: String,
}

impl HypothesisReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Element tokens for both factors, identity first. Nonidentity tokens are
/// unique across the two factors so that a token determines its syllable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub a: Vec<String>,
    pub b: Vec<String>,
}

impl Alphabet {
    /// `e, a, a2, …` and `e, b, b2, …`.
    pub fn default_for(fp: &FreeProduct) -> Self {
        let names = |prefix: &str, n: usize| {
            (0..n)
                .map(|i| match i {
                    0 => "e".to_string(),
                    1 => prefix.to_string(),
                    _ => format!("{prefix}{i}"),
                })
                .collect()
        };
        Self { a: names("a", fp.a().order()), b: names("b", fp.b().order()) }
    }

    pub fn tokens(&self, f: Factor) -> &[String] {
        match f {
            Factor::A => &self.a,
            Factor::B => &self.b,
        }
    }

    pub fn name(&self, s: Syllable) -> &str {
        &self.tokens(s.factor)[s.element]
    }

    pub fn lookup(&self, token: &str) -> Option<Syllable> {
        [Factor::A, Factor::B].into_iter().find_map(|f| {
            self.tokens(f).iter().position(|t| t == token).map(|i| Syllable::new(f, i))
        })
    }

    /// Whitespace-separated tokens, reduced. Identity tokens are accepted and dropped.
    pub fn parse(&self, fp: &FreeProduct, text: &str) -> Result<Word, WordError> {
        let raw = text
            .split_whitespace()
            .map(|t| self.lookup(t).ok_or_else(|| WordError::UnknownToken(t.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        fp.reduce(&raw)
    }

    pub fn format(&self, w: &Word) -> String {
        if w.is_empty() {
            return self.a[0].clone();
        }
        w.syllables().iter().map(|&s| self.name(s)).collect::<Vec<_>>().join(" ")
    }
}

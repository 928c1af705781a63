//! Finite factor groups given by multiplication tables, and permutations of
//! finite vertex sets.
//!
//! Element `0` of every [`FiniteGroup`] is the identity. Permutations act on
//! the right: `p.apply(v)` is the image of `v`, and `p.then(&q)` applies `p`
//! first and `q` second, so the right-regular representation
//! `x ↦ (v ↦ v·x)` is a homomorphism.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::lcm_saturating;

/// A violated group law, with the elements that witness it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LawViolation {
    EntryOutOfRange { row: usize, col: usize, value: usize },
    LeftIdentity { element: usize },
    RightIdentity { element: usize },
    RowNotPermutation { row: usize },
    ColumnNotPermutation { col: usize },
    Associativity { g: usize, h: usize, k: usize },
}

impl fmt::Display for LawViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EntryOutOfRange { row, col, value } => {
                write!(f, "entry ({row}, {col}) = {value} is out of range")
            }
            Self::LeftIdentity { element } => write!(f, "e·{element} != {element}"),
            Self::RightIdentity { element } => write!(f, "{element}·e != {element}"),
            Self::RowNotPermutation { row } => write!(f, "row {row} is not a permutation"),
            Self::ColumnNotPermutation { col } => write!(f, "column {col} is not a permutation"),
            Self::Associativity { g, h, k } => {
                write!(f, "({g}·{h})·{k} != {g}·({h}·{k})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("malformed table: {0}")]
    Structural(String),
    #[error("group laws violated: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Laws(Vec<LawViolation>),
    #[error("element index {index} out of range for group of order {order}")]
    ElementOutOfRange { index: usize, order: usize },
}

/// Checks every group law on a square table. Law violations are collected
/// (not just the first); a table with the wrong shape is a structural error.
pub fn validate_table(table: &[Vec<usize>]) -> Result<(), GroupError> {
    let n = table.len();
    if n == 0 {
        return Err(GroupError::Structural("table has no rows".into()));
    }
    if let Some((r, row)) = table.iter().enumerate().find(|(_, row)| row.len() != n) {
        return Err(GroupError::Structural(format!(
            "row {r} has {} entries, expected {n}",
            row.len()
        )));
    }

    let mut violations = Vec::new();
    for (r, row) in table.iter().enumerate() {
        for (c, &value) in row.iter().enumerate() {
            if value >= n {
                violations.push(LawViolation::EntryOutOfRange { row: r, col: c, value });
            }
        }
    }
    if !violations.is_empty() {
        // Remaining laws index through the table; stop before they go out of bounds.
        return Err(GroupError::Laws(violations));
    }

    for g in 0..n {
        if table[0][g] != g {
            violations.push(LawViolation::LeftIdentity { element: g });
        }
        if table[g][0] != g {
            violations.push(LawViolation::RightIdentity { element: g });
        }
    }
    let mut seen = vec![false; n];
    for r in 0..n {
        seen.iter_mut().for_each(|s| *s = false);
        for &v in &table[r] {
            seen[v] = true;
        }
        if seen.iter().any(|s| !s) {
            violations.push(LawViolation::RowNotPermutation { row: r });
        }
    }
    for c in 0..n {
        seen.iter_mut().for_each(|s| *s = false);
        for row in table {
            seen[row[c]] = true;
        }
        if seen.iter().any(|s| !s) {
            violations.push(LawViolation::ColumnNotPermutation { col: c });
        }
    }
    'assoc: for g in 0..n {
        for h in 0..n {
            let gh = table[g][h];
            for k in 0..n {
                if table[gh][k] != table[g][table[h][k]] {
                    violations.push(LawViolation::Associativity { g, h, k });
                    // one witness is enough for associativity
                    break 'assoc;
                }
            }
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(GroupError::Laws(violations))
    }
}

/// A finite group presented by its full multiplication table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteGroup {
    name: String,
    order: usize,
    table: Vec<usize>,
    inverses: Vec<usize>,
}

impl FiniteGroup {
    pub fn from_table(name: impl Into<String>, table: Vec<Vec<usize>>) -> Result<Self, GroupError> {
        validate_table(&table)?;
        let order = table.len();
        let flat: Vec<usize> = table.into_iter().flatten().collect();
        let inverses = (0..order)
            .map(|g| (0..order).find(|&h| flat[g * order + h] == 0).expect("validated"))
            .collect();
        Ok(Self { name: name.into(), order, table: flat, inverses })
    }

    /// Cyclic group of order `n`, element `i` standing for the `i`-th power of a generator.
    pub fn cyclic(n: usize) -> Self {
        assert!(n >= 1, "cyclic group needs positive order");
        let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Self::from_table(format!("Z{n}"), table).expect("cyclic table is a group")
    }

    /// Group generated by the given permutations, elements listed in
    /// breadth-first order from the identity. Intended for small groups.
    pub fn generated_by(name: impl Into<String>, generators: &[Permutation]) -> Self {
        let degree = generators.first().map_or(0, Permutation::len);
        let mut elements = vec![Permutation::identity(degree)];
        let mut index = std::collections::HashMap::new();
        index.insert(elements[0].clone(), 0usize);
        let mut i = 0;
        while i < elements.len() {
            for s in generators {
                let next = elements[i].then(s);
                if !index.contains_key(&next) {
                    index.insert(next.clone(), elements.len());
                    elements.push(next);
                }
            }
            i += 1;
        }
        let table = elements
            .iter()
            .map(|x| elements.iter().map(|y| index[&x.then(y)]).collect())
            .collect();
        Self::from_table(name, table).expect("permutation group table is a group")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn check_element(&self, x: usize) -> Result<(), GroupError> {
        if x < self.order {
            Ok(())
        } else {
            Err(GroupError::ElementOutOfRange { index: x, order: self.order })
        }
    }

    #[inline]
    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g * self.order + h]
    }

    #[inline]
    pub fn inverse(&self, g: usize) -> usize {
        self.inverses[g]
    }

    /// Least `t ≥ 1` with `x^t = e`.
    pub fn element_order(&self, x: usize) -> Result<usize, GroupError> {
        self.check_element(x)?;
        let mut t = 1;
        let mut power = x;
        while power != 0 {
            power = self.mul(power, x);
            t += 1;
        }
        Ok(t)
    }

    /// Whether `y = g⁻¹·x·g` for some `g`.
    pub fn are_conjugate(&self, x: usize, y: usize) -> bool {
        (0..self.order).any(|g| self.mul(self.mul(self.inverse(g), x), g) == y)
    }

    /// Right-regular representation: `x ↦ (v ↦ v·x)`.
    pub fn regular_representation(&self) -> Vec<Permutation> {
        (0..self.order)
            .map(|x| {
                Permutation::from_images_unchecked((0..self.order).map(|v| self.mul(v, x)).collect())
            })
            .collect()
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.order).map(<[usize]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("images do not form a bijection on [0, {len}): {reason}")]
pub struct PermutationError {
    pub len: usize,
    pub reason: String,
}

/// A bijection of `[0, N)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Permutation {
    images: Vec<u32>,
}

impl TryFrom<Vec<u32>> for Permutation {
    type Error = PermutationError;

    fn try_from(images: Vec<u32>) -> Result<Self, Self::Error> {
        Permutation::from_images(images.into_iter().map(|v| v as usize).collect())
    }
}

impl From<Permutation> for Vec<u32> {
    fn from(p: Permutation) -> Self {
        p.images
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation")?;
        let cycles = self.cycles();
        if cycles.iter().all(|c| c.len() == 1) {
            return write!(f, "(id on {})", self.len());
        }
        for c in cycles.into_iter().filter(|c| c.len() > 1) {
            let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self { images: (0..n as u32).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self, PermutationError> {
        let n = images.len();
        if n > u32::MAX as usize {
            return Err(PermutationError { len: n, reason: "too many points".into() });
        }
        let mut seen = vec![false; n];
        for (i, &v) in images.iter().enumerate() {
            if v >= n {
                return Err(PermutationError { len: n, reason: format!("image of {i} is {v}") });
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(PermutationError { len: n, reason: format!("{v} is hit twice") });
            }
        }
        Ok(Self::from_images_unchecked(images))
    }

    pub(crate) fn from_images_unchecked(images: Vec<usize>) -> Self {
        Self { images: images.into_iter().map(|v| v as u32).collect() }
    }

    /// Builds the permutation from 0-based cycles; unlisted points are fixed.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self, PermutationError> {
        let mut images: Vec<usize> = (0..n).collect();
        for cycle in cycles {
            for (i, &v) in cycle.iter().enumerate() {
                if v >= n {
                    return Err(PermutationError { len: n, reason: format!("point {v} in cycle") });
                }
                images[v] = cycle[(i + 1) % cycle.len()];
            }
        }
        Self::from_images(images)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    #[inline]
    pub fn apply(&self, v: usize) -> usize {
        self.images[v] as usize
    }

    pub fn images(&self) -> impl Iterator<Item = usize> + '_ {
        self.images.iter().map(|&v| v as usize)
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| i as u32 == v)
    }

    pub fn fixed_points(&self) -> impl Iterator<Item = usize> + '_ {
        self.images.iter().enumerate().filter(|(i, &v)| *i as u32 == v).map(|(i, _)| i)
    }

    /// `self` first, then `other`.
    pub fn then(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.len(), other.len(), "composing permutations of different degree");
        Permutation { images: self.images.iter().map(|&v| other.images[v as usize]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.len()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v as usize] = i as u32;
        }
        Permutation { images: inv }
    }

    pub fn pow(&self, mut e: u64) -> Permutation {
        let mut base = self.clone();
        let mut acc = Permutation::identity(self.len());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.then(&base);
            }
            base = base.then(&base);
            e >>= 1;
        }
        acc
    }

    /// Disjoint cycles, each starting at its least point, ordered by that point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                cycle.push(v);
                v = self.apply(v);
            }
            out.push(cycle);
        }
        out
    }

    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut v = start;
            while !seen[v] {
                seen[v] = true;
                len += 1;
                v = self.apply(v);
            }
            out.push(len);
        }
        out
    }

    /// Order as the lcm of cycle lengths (saturating at `u128::MAX`).
    pub fn order(&self) -> u128 {
        self.cycle_lengths().into_iter().fold(1u128, |acc, l| lcm_saturating(acc, l as u128))
    }
}

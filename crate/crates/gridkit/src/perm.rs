//! Permutations in one-line notation, pattern containment, intervals,
//! simplicity, substitution decomposition, inflations, and the classical
//! symmetries.
//!
//! Values are `1..=n` and public positions are 1-based throughout, matching
//! the usual combinatorial conventions. All operations are pure.

use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PermError {
    #[error("values are not a rearrangement of 1..={0}")]
    NotABijection(usize),
    #[error("cannot parse {0:?} as a permutation")]
    Parse(String),
    #[error("no decomposition: length must be at least 2")]
    NoDecomposition,
    #[error("inflation needs one block per skeleton entry: skeleton has {skeleton}, got {blocks}")]
    BlockCountMismatch { skeleton: usize, blocks: usize },
}

/// A permutation of `{1, …, n}` in one-line notation. The empty permutation
/// is a first-class value; it only arises in lenient inflation contexts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    values: Vec<u32>,
}

impl Permutation {
    /// Builds a permutation from one-line values, checking that they form a
    /// bijection on `{1, …, n}`.
    pub fn new(values: Vec<u32>) -> Result<Self, PermError> {
        let n = values.len();
        let mut seen = vec![false; n];
        for &v in &values {
            if v == 0 || v as usize > n || seen[v as usize - 1] {
                return Err(PermError::NotABijection(n));
            }
            seen[v as usize - 1] = true;
        }
        Ok(Permutation { values })
    }

    pub fn empty() -> Self {
        Permutation { values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            values: (1..=n as u32).collect(),
        }
    }

    /// The permutation order isomorphic to a generic point set (distinct
    /// x and distinct y coordinates), read left to right.
    pub fn from_points<X: Ord, Y: Ord>(points: &[(X, Y)]) -> Self {
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| points[a].0.cmp(&points[b].0));
        let mut by_y: Vec<usize> = (0..points.len()).collect();
        by_y.sort_by(|&a, &b| points[a].1.cmp(&points[b].1));
        let mut rank = vec![0u32; points.len()];
        for (r, &i) in by_y.iter().enumerate() {
            rank[i] = r as u32 + 1;
        }
        Permutation {
            values: idx.into_iter().map(|i| rank[i]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One-line values; `values()[i]` is the image of position `i + 1`.
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Image of the 1-based position `pos`.
    pub fn at(&self, pos: usize) -> u32 {
        self.values[pos - 1]
    }

    /// The pattern (order-isomorphic permutation) of a subsequence given by
    /// 0-based indices in increasing order.
    pub fn pattern_at(&self, indices: &[usize]) -> Permutation {
        let pts: Vec<(u32, u32)> = indices
            .iter()
            .enumerate()
            .map(|(i, &j)| (i as u32, self.values[j]))
            .collect();
        Permutation::from_points(&pts)
    }

    /// True iff some subsequence of `self` is order isomorphic to `pattern`.
    /// The empty pattern embeds vacuously.
    pub fn contains(&self, pattern: &Permutation) -> bool {
        self.find_embedding(pattern).is_some()
    }

    /// Lexicographically least witness of containment: strictly increasing
    /// 1-based positions `i_1 < … < i_k` whose image is order isomorphic to
    /// `pattern`, or `None` if `self` avoids `pattern`.
    pub fn find_embedding(&self, pattern: &Permutation) -> Option<Vec<usize>> {
        let k = pattern.len();
        let n = self.len();
        if k == 0 {
            return Some(Vec::new());
        }
        if k > n {
            return None;
        }
        // For each pattern position, the tightest earlier positions by value:
        // the candidate text value must fall strictly between their images.
        let mut below = vec![usize::MAX; k]; // argmax of values < p[i]
        let mut above = vec![usize::MAX; k]; // argmin of values > p[i]
        for i in 0..k {
            for j in 0..i {
                if pattern.values[j] < pattern.values[i]
                    && (below[i] == usize::MAX || pattern.values[j] > pattern.values[below[i]])
                {
                    below[i] = j;
                }
                if pattern.values[j] > pattern.values[i]
                    && (above[i] == usize::MAX || pattern.values[j] < pattern.values[above[i]])
                {
                    above[i] = j;
                }
            }
        }
        let mut chosen = vec![0usize; k]; // 0-based text indices
        if self.embed_from(pattern, &below, &above, &mut chosen, 0, 0) {
            Some(chosen.iter().map(|&j| j + 1).collect())
        } else {
            None
        }
    }

    fn embed_from(
        &self,
        pattern: &Permutation,
        below: &[usize],
        above: &[usize],
        chosen: &mut [usize],
        i: usize,
        start: usize,
    ) -> bool {
        let k = pattern.len();
        if i == k {
            return true;
        }
        // Not enough text left for the remaining pattern entries.
        let last = self.len() - (k - i);
        for j in start..=last {
            let v = self.values[j];
            let lo = if below[i] == usize::MAX {
                0
            } else {
                self.values[chosen[below[i]]]
            };
            let hi = if above[i] == usize::MAX {
                u32::MAX
            } else {
                self.values[chosen[above[i]]]
            };
            if v > lo && v < hi {
                chosen[i] = j;
                if self.embed_from(pattern, below, above, chosen, i + 1, j + 1) {
                    return true;
                }
            }
        }
        false
    }

    /// All index ranges `[a, b]` (1-based, inclusive) whose value set is
    /// contiguous. Trivial intervals (singletons and the whole line) are
    /// included.
    pub fn intervals(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for a in 0..n {
            let mut lo = self.values[a];
            let mut hi = self.values[a];
            for b in a..n {
                lo = lo.min(self.values[b]);
                hi = hi.max(self.values[b]);
                if (hi - lo) as usize == b - a {
                    out.push((a + 1, b + 1));
                }
            }
        }
        out
    }

    /// True iff every interval is a singleton or the whole permutation.
    pub fn is_simple(&self) -> bool {
        let n = self.len();
        for a in 0..n {
            let mut lo = self.values[a];
            let mut hi = self.values[a];
            for b in a + 1..n {
                lo = lo.min(self.values[b]);
                hi = hi.max(self.values[b]);
                if (hi - lo) as usize == b - a && !(a == 0 && b == n - 1) {
                    return false;
                }
            }
        }
        true
    }

    /// Splits into maximal sum components: `self = c_1 ⊕ c_2 ⊕ …` with each
    /// `c_i` sum indecomposable. A sum-indecomposable permutation yields one
    /// component.
    pub fn sum_components(&self) -> Vec<Permutation> {
        let mut comps = Vec::new();
        let mut start = 0usize;
        let mut hi = 0u32;
        for i in 0..self.len() {
            hi = hi.max(self.values[i]);
            if hi as usize == i + 1 {
                let vals = self.values[start..=i]
                    .iter()
                    .map(|&v| v - start as u32)
                    .collect();
                comps.push(Permutation { values: vals });
                start = i + 1;
            }
        }
        comps
    }

    /// Skew analogue of [`sum_components`](Self::sum_components).
    pub fn skew_components(&self) -> Vec<Permutation> {
        let n = self.len() as u32;
        let mut comps = Vec::new();
        let mut start = 0usize;
        let mut lo = u32::MAX;
        for i in 0..self.len() {
            lo = lo.min(self.values[i]);
            if lo == n - i as u32 {
                let vals = self.values[start..=i].iter().map(|&v| v - lo + 1).collect();
                comps.push(Permutation { values: vals });
                start = i + 1;
            }
        }
        comps
    }

    pub fn direct_sum(&self, other: &Permutation) -> Permutation {
        let shift = self.len() as u32;
        let mut values = self.values.clone();
        values.extend(other.values.iter().map(|&v| v + shift));
        Permutation { values }
    }

    pub fn skew_sum(&self, other: &Permutation) -> Permutation {
        let shift = other.len() as u32;
        let mut values: Vec<u32> = self.values.iter().map(|&v| v + shift).collect();
        values.extend_from_slice(&other.values);
        Permutation { values }
    }

    /// The inflation `σ[τ_1, …, τ_k]`: entry `σ(i)` is replaced by an
    /// interval copy of `blocks[i-1]`. Empty blocks are allowed (lenient
    /// inflation) and simply drop out.
    pub fn inflate(skeleton: &Permutation, blocks: &[Permutation]) -> Result<Permutation, PermError> {
        let k = skeleton.len();
        if blocks.len() != k {
            return Err(PermError::BlockCountMismatch {
                skeleton: k,
                blocks: blocks.len(),
            });
        }
        // Value offset of block i: total length of blocks with smaller
        // skeleton value.
        let mut offsets = vec![0u32; k];
        for i in 0..k {
            for j in 0..k {
                if skeleton.values[j] < skeleton.values[i] {
                    offsets[i] += blocks[j].len() as u32;
                }
            }
        }
        let mut values = Vec::with_capacity(blocks.iter().map(|b| b.len()).sum());
        for i in 0..k {
            values.extend(blocks[i].values.iter().map(|&v| v + offsets[i]));
        }
        Ok(Permutation { values })
    }

    /// Substitution decomposition: the unique simple skeleton of length ≥ 2
    /// together with its blocks, so that `inflate(skeleton, blocks) == self`.
    ///
    /// When the skeleton is `12` (resp. `21`) the first block is the shortest
    /// sum-indecomposable (resp. skew-indecomposable) prefix, which makes the
    /// result canonical.
    pub fn substitution_decompose(&self) -> Result<(Permutation, Vec<Permutation>), PermError> {
        let n = self.len();
        if n < 2 {
            return Err(PermError::NoDecomposition);
        }
        let sums = self.sum_components();
        if sums.len() > 1 {
            let first = sums[0].clone();
            let rest = sums[1..]
                .iter()
                .fold(Permutation::empty(), |acc, c| acc.direct_sum(c));
            return Ok((Permutation::new(vec![1, 2]).unwrap(), vec![first, rest]));
        }
        let skews = self.skew_components();
        if skews.len() > 1 {
            let first = skews[0].clone();
            let rest = skews[1..]
                .iter()
                .fold(Permutation::empty(), |acc, c| acc.skew_sum(c));
            return Ok((Permutation::new(vec![2, 1]).unwrap(), vec![first, rest]));
        }
        // Sum and skew indecomposable: the blocks are the maximal proper
        // intervals, which are pairwise disjoint and tile the line.
        let proper: Vec<(usize, usize)> = self
            .intervals()
            .into_iter()
            .filter(|&(a, b)| !(a == 1 && b == n))
            .collect();
        let maximal: Vec<(usize, usize)> = proper
            .iter()
            .filter(|&&(a, b)| {
                !proper
                    .iter()
                    .any(|&(c, d)| (c < a && b <= d) || (c <= a && b < d))
            })
            .copied()
            .collect();
        let mut blocks_ix = maximal;
        blocks_ix.sort();
        debug_assert!(
            blocks_ix.windows(2).all(|w| w[0].1 + 1 == w[1].0)
                && blocks_ix.first().map(|&(a, _)| a) == Some(1)
                && blocks_ix.last().map(|&(_, b)| b) == Some(n),
            "maximal proper intervals must tile a non-sum/skew-decomposable permutation"
        );
        let block_points: Vec<(u32, u32)> = blocks_ix
            .iter()
            .enumerate()
            .map(|(i, &(a, _))| (i as u32, self.values[a - 1]))
            .collect();
        let skeleton = Permutation::from_points(&block_points);
        let blocks: Vec<Permutation> = blocks_ix
            .iter()
            .map(|&(a, b)| self.pattern_at(&(a - 1..b).collect::<Vec<_>>()))
            .collect();
        debug_assert!(skeleton.is_simple());
        Ok((skeleton, blocks))
    }

    /// Reverse: read the entries right to left.
    pub fn reverse(&self) -> Permutation {
        let mut values = self.values.clone();
        values.reverse();
        Permutation { values }
    }

    /// Complement: read the entries top to bottom, `v ↦ n + 1 − v`.
    pub fn complement(&self) -> Permutation {
        let n = self.len() as u32;
        Permutation {
            values: self.values.iter().map(|&v| n + 1 - v).collect(),
        }
    }

    /// Group inverse: `inverse()(i) = j` iff `self(j) = i`.
    pub fn inverse(&self) -> Permutation {
        let mut values = vec![0u32; self.len()];
        for (i, &v) in self.values.iter().enumerate() {
            values[v as usize - 1] = i as u32 + 1;
        }
        Permutation { values }
    }

    /// All permutations of length `n` in lexicographic order.
    pub fn all_of_length(n: usize) -> impl Iterator<Item = Permutation> {
        LexPerms::new(n)
    }
}

struct LexPerms {
    next: Option<Vec<u32>>,
}

impl LexPerms {
    fn new(n: usize) -> Self {
        LexPerms {
            next: Some((1..=n as u32).collect()),
        }
    }
}

impl Iterator for LexPerms {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.next.take()?;
        let n = cur.len();
        if n > 0 {
            // Standard next-permutation step.
            let mut succ = cur.clone();
            let mut i = n - 1;
            while i > 0 && succ[i - 1] >= succ[i] {
                i -= 1;
            }
            if i > 0 {
                let mut j = n - 1;
                while succ[j] <= succ[i - 1] {
                    j -= 1;
                }
                succ.swap(i - 1, j);
                succ[i..].reverse();
                self.next = Some(succ);
            }
        }
        Some(Permutation { values: cur })
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.values.is_empty() {
            return write!(f, "ε");
        }
        if self.len() <= 9 {
            for v in &self.values {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
            write!(f, "{}", parts.join(" "))
        }
    }
}

impl FromStr for Permutation {
    type Err = PermError;

    /// Accepts compact digit strings (`51342`), and space- or
    /// comma-separated value lists (`5 1 3 4 2`, `11,1,2,...`).
    fn from_str(s: &str) -> Result<Self, PermError> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Permutation::empty());
        }
        let values: Vec<u32> = if s.contains(|c: char| c == ',' || c.is_whitespace()) {
            s.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u32>().map_err(|_| PermError::Parse(s.into())))
                .collect::<Result<_, _>>()?
        } else {
            s.chars()
                .map(|c| c.to_digit(10).ok_or_else(|| PermError::Parse(s.into())))
                .collect::<Result<_, _>>()?
        };
        Permutation::new(values).map_err(|_| PermError::Parse(s.into()))
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.len()))?;
        for v in &self.values {
            seq.serialize_element(v)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct PermVisitor;
        impl<'de> Visitor<'de> for PermVisitor {
            type Value = Permutation;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a one-line permutation as an array of integers")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Permutation, A::Error> {
                let mut values = Vec::new();
                while let Some(v) = seq.next_element::<u32>()? {
                    values.push(v);
                }
                Permutation::new(values).map_err(serde::de::Error::custom)
            }
        }
        deserializer.deserialize_seq(PermVisitor)
    }
}

/// Parses a permutation from a loose CLI argument.
pub fn parse_perm_arg(s: &str) -> Result<Permutation, PermError> {
    if s.trim_start().starts_with('[') {
        let values: Vec<u32> =
            serde_json::from_str(s).map_err(|_| PermError::Parse(s.to_string()))?;
        Permutation::new(values).map_err(|_| PermError::Parse(s.to_string()))
    } else {
        s.parse()
    }
}

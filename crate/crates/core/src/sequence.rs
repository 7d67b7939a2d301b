//! Finitely specified infinite sequences: a prefix followed by a constant,
//! periodic or sampled tail. Shared by unitary and permutation sequences.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Permutation, UnitaryMatrix};

/// Group elements that can populate a sequence slot.
pub trait Factor: Clone {
    /// Side length (matrix dimension or permutation degree).
    fn size(&self) -> usize;
    /// `self · other`.
    fn product(&self, other: &Self) -> Self;
    fn inverse(&self) -> Self;
}

impl Factor for UnitaryMatrix {
    fn size(&self) -> usize {
        self.dim()
    }
    fn product(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn inverse(&self) -> Self {
        self.adjoint()
    }
}

impl Factor for Permutation {
    fn size(&self) -> usize {
        self.len()
    }
    fn product(&self, other: &Self) -> Self {
        self.compose(other)
    }
    fn inverse(&self) -> Self {
        Permutation::inverse(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum TailRule<T> {
    Constant(T),
    Periodic(Vec<T>),
    /// Explicit samples; the sequence ends after the last one.
    Sampled(Vec<T>),
}

impl<T> TailRule<T> {
    pub fn is_sampled(&self) -> bool {
        matches!(self, TailRule::Sampled(_))
    }

    /// Period of an exact tail (1 for constant).
    pub fn period(&self) -> Option<usize> {
        match self {
            TailRule::Constant(_) => Some(1),
            TailRule::Periodic(c) => Some(c.len()),
            TailRule::Sampled(_) => None,
        }
    }

    fn entries(&self) -> &[T] {
        match self {
            TailRule::Constant(u) => std::slice::from_ref(u),
            TailRule::Periodic(c) | TailRule::Sampled(c) => c,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Deserialize<'de>"))]
struct RawSequence<T> {
    n: usize,
    #[serde(default)]
    prefix: Vec<T>,
    tail: TailRule<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawSequence<T>",
    bound(deserialize = "T: Factor + Deserialize<'de>")
)]
pub struct Sequence<T> {
    n: usize,
    prefix: Vec<T>,
    tail: TailRule<T>,
}

impl<T: Factor> TryFrom<RawSequence<T>> for Sequence<T> {
    type Error = Error;
    fn try_from(raw: RawSequence<T>) -> Result<Self> {
        Sequence::new(raw.n, raw.prefix, raw.tail)
    }
}

pub type UnitarySequence = Sequence<UnitaryMatrix>;
pub type PermutationSequence = Sequence<Permutation>;

impl<T: Factor> Sequence<T> {
    pub fn new(n: usize, prefix: Vec<T>, tail: TailRule<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::validation(format!("alphabet size {n} must be at least 2")));
        }
        if tail.entries().is_empty() {
            return Err(Error::validation("tail rule has no entries"));
        }
        for (i, f) in prefix.iter().enumerate() {
            if f.size() != n {
                return Err(Error::validation(format!(
                    "prefix[{i}] has size {}, expected {n}",
                    f.size()
                )));
            }
        }
        for (i, f) in tail.entries().iter().enumerate() {
            if f.size() != n {
                return Err(Error::validation(format!(
                    "tail entry {i} has size {}, expected {n}",
                    f.size()
                )));
            }
        }
        Ok(Sequence { n, prefix, tail })
    }

    pub fn constant(n: usize, u: T) -> Result<Self> {
        Self::new(n, Vec::new(), TailRule::Constant(u))
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    pub fn prefix(&self) -> &[T] {
        &self.prefix
    }

    pub fn tail(&self) -> &TailRule<T> {
        &self.tail
    }

    /// Number of available factors; `None` for exact tails.
    pub fn depth(&self) -> Option<usize> {
        match &self.tail {
            TailRule::Sampled(s) => Some(self.prefix.len() + s.len()),
            _ => None,
        }
    }

    /// Fails with a range error if the sequence ends before index `k`.
    pub fn require_depth(&self, k: usize) -> Result<()> {
        match self.depth() {
            Some(d) if k > d => Err(Error::Range { index: k, depth: d }),
            _ => Ok(()),
        }
    }

    /// The 1-based factor `u_k`.
    pub fn factor_at(&self, k: usize) -> Result<&T> {
        if k == 0 {
            return Err(Error::validation("sequence indices start at 1"));
        }
        if k <= self.prefix.len() {
            return Ok(&self.prefix[k - 1]);
        }
        let j = k - self.prefix.len() - 1;
        match &self.tail {
            TailRule::Constant(u) => Ok(u),
            TailRule::Periodic(c) => Ok(&c[j % c.len()]),
            TailRule::Sampled(s) => s.get(j).ok_or(Error::Range {
                index: k,
                depth: self.prefix.len() + s.len(),
            }),
        }
    }

    /// `u_1, …, u_k`.
    pub fn factors(&self, k: usize) -> Result<Vec<T>> {
        (1..=k).map(|i| self.factor_at(i).cloned()).collect()
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        let tail = match &self.tail {
            TailRule::Constant(u) => TailRule::Constant(f(u)),
            TailRule::Periodic(c) => TailRule::Periodic(c.iter().map(&f).collect()),
            TailRule::Sampled(s) => TailRule::Sampled(s.iter().map(&f).collect()),
        };
        Sequence {
            n: self.n,
            prefix: self.prefix.iter().map(&f).collect(),
            tail,
        }
    }

    pub fn try_map(&self, f: impl Fn(&T) -> Result<T>) -> Result<Self> {
        let tail = match &self.tail {
            TailRule::Constant(u) => TailRule::Constant(f(u)?),
            TailRule::Periodic(c) => TailRule::Periodic(c.iter().map(&f).collect::<Result<_>>()?),
            TailRule::Sampled(s) => TailRule::Sampled(s.iter().map(&f).collect::<Result<_>>()?),
        };
        Ok(Sequence {
            n: self.n,
            prefix: self.prefix.iter().map(&f).collect::<Result<_>>()?,
            tail,
        })
    }

    /// Slotwise inverse `(u_k^{-1})`.
    pub fn inverse(&self) -> Self {
        self.map(Factor::inverse)
    }

    /// Slotwise product `(a_k · b_k)`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::validation(format!(
                "alphabet mismatch: {} vs {}",
                self.n, other.n
            )));
        }
        let at = |k: usize| -> Result<T> { Ok(self.factor_at(k)?.product(other.factor_at(k)?)) };
        match (self.tail.period(), other.tail.period()) {
            (Some(p), Some(q)) => {
                let m = self.prefix.len().max(other.prefix.len());
                let prefix = (1..=m).map(at).collect::<Result<Vec<T>>>()?;
                let period = p.lcm(&q);
                let cycle = (m + 1..=m + period).map(at).collect::<Result<Vec<T>>>()?;
                let tail = if period == 1 {
                    TailRule::Constant(cycle.into_iter().next().unwrap())
                } else {
                    TailRule::Periodic(cycle)
                };
                Sequence::new(self.n, prefix, tail)
            }
            _ => {
                let depth = match (self.depth(), other.depth()) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) | (None, Some(a)) => a,
                    (None, None) => unreachable!(),
                };
                let samples = (1..=depth).map(at).collect::<Result<Vec<T>>>()?;
                if samples.is_empty() {
                    return Err(Error::validation("composition has no common samples"));
                }
                Sequence::new(self.n, Vec::new(), TailRule::Sampled(samples))
            }
        }
    }
}

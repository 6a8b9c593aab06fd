//! Coalitions of feature changes as bitmasks over the sorted delta.
//!
//! Bit `j` of a [`Coalition`] stands for the `j`-th smallest delta index. The
//! textual form is a binary string of exactly `K` digits, most significant
//! bit first, so `"01"` with `K = 2` is the coalition `{0}`.

use std::fmt;

use crate::error::{Error, Result};

/// Largest delta size representable by a coalition mask.
pub const MAX_BITS: usize = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_bits(bits: u64) -> Self {
        Coalition(bits)
    }

    /// Every change of a `k`-sized delta.
    pub fn full(k: usize) -> Self {
        debug_assert!(k <= MAX_BITS);
        Coalition((1u64 << k) - 1)
    }

    pub fn singleton(position: usize) -> Self {
        Coalition(1 << position)
    }

    pub fn from_positions(positions: impl IntoIterator<Item = usize>) -> Self {
        Coalition(positions.into_iter().fold(0, |acc, p| acc | 1 << p))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, position: usize) -> bool {
        self.0 >> position & 1 == 1
    }

    pub fn with(self, position: usize) -> Self {
        Coalition(self.0 | 1 << position)
    }

    pub fn without(self, position: usize) -> Self {
        Coalition(self.0 & !(1 << position))
    }

    pub fn is_subset_of(self, other: Coalition) -> bool {
        self.0 & other.0 == self.0
    }

    pub fn is_proper_subset_of(self, other: Coalition) -> bool {
        self.is_subset_of(other) && self != other
    }

    /// Member positions in ascending order.
    pub fn positions(self) -> Positions {
        Positions(self.0)
    }

    /// All `2^k` coalitions of a `k`-sized delta, ascending by mask.
    pub fn all(k: usize) -> impl Iterator<Item = Coalition> {
        (0..=Coalition::full(k).0).map(Coalition)
    }

    pub fn to_binary(self, k: usize) -> String {
        (0..k)
            .rev()
            .map(|j| if self.contains(j) { '1' } else { '0' })
            .collect()
    }

    pub fn parse_binary(s: &str, k: usize) -> Result<Self> {
        if s.len() != k || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::Parse(format!(
                "coalition key `{s}` is not a {k}-digit binary string"
            )));
        }
        let bits = s
            .bytes()
            .fold(0u64, |acc, b| acc << 1 | u64::from(b == b'1'));
        Ok(Coalition(bits))
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (n, p) in self.positions().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        f.write_str("}")
    }
}

pub struct Positions(u64);

impl Iterator for Positions {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let p = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(p)
    }
}

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One spin configuration, `+1` meaning the node is selected.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinState(pub(crate) Vec<i8>);

impl SpinState {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidData(format!(
                "spin {pos} is {}, expected +1 or -1",
                spins[pos]
            )));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn all_down(n: usize) -> Self {
        Self(vec![-1; n])
    }

    pub fn from_selection(selected: &[bool]) -> Self {
        Self(selected.iter().map(|&s| if s { 1 } else { -1 }).collect())
    }

    /// Decodes bit `i` of `index` as spin `i` (`1` -> `+1`).
    pub fn from_index(index: usize, n: usize) -> Self {
        Self((0..n).map(|i| if index >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn to_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    pub(crate) fn from_raw(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        Self(spins)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    #[inline]
    pub fn is_up(&self, i: usize) -> bool {
        self.0[i] == 1
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.flip(i);
        s
    }

    pub fn count_up(&self) -> usize {
        self.0.iter().filter(|&&s| s == 1).count()
    }

    /// Fraction of selected nodes, `(1 + mean spin) / 2`.
    pub fn fraction_up(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.count_up() as f64 / self.0.len() as f64
    }

    pub fn mean_spin(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.iter().map(|&s| s as f64).sum::<f64>() / self.0.len() as f64
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| s as f64).collect()
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .map(|(i, _)| i)
    }
}

impl fmt::Display for SpinState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, &s) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            f.write_str(if s == 1 { "+1" } else { "-1" })?;
        }
        Ok(())
    }
}

impl FromStr for SpinState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spins = s
            .split_whitespace()
            .map(|t| match t {
                "+1" | "1" => Ok(1),
                "-1" => Ok(-1),
                other => Err(Error::parse(1, format!("bad spin token {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(Self(spins))
    }
}

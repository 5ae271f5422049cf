//! Dense square matrices, row-major. Everything in this crate is desk scale
//! (N up to a few hundred), so a flat `Vec` beats any sparse format.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSquareMatrix<S>")]
pub struct SquareMatrix<S> {
    n: usize,
    data: Vec<S>,
}

/// Wire shape of [`SquareMatrix`]; lengths are checked on the way in.
#[derive(Deserialize)]
struct RawSquareMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S> TryFrom<RawSquareMatrix<S>> for SquareMatrix<S> {
    type Error = String;
    fn try_from(raw: RawSquareMatrix<S>) -> std::result::Result<Self, String> {
        if raw.data.len() != raw.n * raw.n {
            return Err(format!(
                "matrix data holds {} entries, expected {}",
                raw.data.len(),
                raw.n * raw.n
            ));
        }
        Ok(Self {
            n: raw.n,
            data: raw.data,
        })
    }
}

impl<S: Scalar> SquareMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn constant(n: usize, value: S) -> Self {
        Self {
            n,
            data: vec![value; n * n],
        }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "expected {n} columns, found {}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    /// Set both `(i, j)` and `(j, i)`.
    pub fn set_sym(&mut self, i: usize, j: usize, value: S) {
        self[(i, j)] = value;
        self[(j, i)] = value;
    }

    pub fn is_symmetric(&self) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self[(i, j)] != self[(j, i)] {
                    return false;
                }
            }
        }
        true
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Maximum absolute entry.
    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Apply a simultaneous row/column permutation: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self::from_fn(self.n, |i, j| self[(perm[i], perm[j])])
    }
}

impl<S> Index<(usize, usize)> for SquareMatrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> IndexMut<(usize, usize)> for SquareMatrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Exact linear algebra over path vectors.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// Rows kept in reduced echelon form; adding a row reports whether it was
/// independent of the rows already held.
#[derive(Debug, Clone, Default)]
pub struct Echelon {
    rows: Vec<(usize, Vec<BigRational>)>,
}

fn to_rational(v: &[u32]) -> Vec<BigRational> {
    v.iter()
        .map(|&x| BigRational::from_integer(BigInt::from(x)))
        .collect()
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[u32]) -> Vec<BigRational> {
        let mut r = to_rational(v);
        for (pivot, row) in &self.rows {
            if r.len() != row.len() || r[*pivot].is_zero() {
                continue;
            }
            let factor = r[*pivot].clone();
            for (x, y) in r.iter_mut().zip(row) {
                if !y.is_zero() {
                    *x -= &factor * y;
                }
            }
        }
        r
    }

    /// Whether `v` lies in the span of the rows held.
    pub fn spans(&self, v: &[u32]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Adds `v` when it is independent; returns whether it was added.
    pub fn insert(&mut self, v: &[u32]) -> bool {
        let mut r = self.reduce(v);
        let Some(pivot) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let lead = r[pivot].clone();
        for x in &mut r {
            *x /= &lead;
        }
        for (_, row) in &mut self.rows {
            if row.len() == r.len() && !row[pivot].is_zero() {
                let factor = row[pivot].clone();
                for (x, y) in row.iter_mut().zip(&r) {
                    *x -= &factor * y;
                }
            }
        }
        self.rows.push((pivot, r));
        true
    }
}

/// Rank of a set of equal-length vectors.
pub fn vector_rank<'a>(vectors: impl IntoIterator<Item = &'a [u32]>) -> usize {
    let mut e = Echelon::new();
    for v in vectors {
        e.insert(v);
    }
    e.rank()
}

/// Whether `v` is a rational linear combination of `basis`.
pub fn span_contains<'a>(basis: impl IntoIterator<Item = &'a [u32]>, v: &[u32]) -> bool {
    let mut e = Echelon::new();
    for b in basis {
        e.insert(b);
    }
    e.spans(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_dependent_rows() {
        let rows: [&[u32]; 3] = [&[1, 1, 0], &[0, 1, 1], &[1, 2, 1]];
        assert_eq!(vector_rank(rows), 2);
        assert!(span_contains(rows[..2].iter().copied(), &[2, 3, 1]));
        assert!(!span_contains(rows[..2].iter().copied(), &[1, 0, 0]));
    }

    #[test]
    fn empty_set_spans_only_zero() {
        assert!(span_contains(std::iter::empty(), &[0, 0]));
        assert!(!span_contains(std::iter::empty(), &[0, 1]));
    }
}

//! Exterior-algebra bookkeeping: subsets of `{0, …, m−1}` as bitmasks in
//! graded-lexicographic order, basis creation/annihilation signs, and wedge
//! powers of linear maps.

use std::sync::Arc;

use crate::{CMat, C64};

/// All subsets of `{0, …, m−1}`, ordered by size and then lexicographically
/// by their sorted elements.
#[derive(Debug)]
pub struct SubsetBasis {
    m: usize,
    masks: Vec<u32>,
    position: Vec<u32>,
}

impl SubsetBasis {
    pub fn new(m: usize) -> Arc<Self> {
        assert!(m < 31, "subset basis supports m < 31");
        let dim = 1usize << m;
        let mut masks: Vec<u32> = (0..dim as u32).collect();
        masks.sort_by(|&a, &b| {
            a.count_ones()
                .cmp(&b.count_ones())
                .then_with(|| elements(a).cmp(&elements(b)))
        });
        let mut position = vec![0u32; dim];
        for (i, &mask) in masks.iter().enumerate() {
            position[mask as usize] = i as u32;
        }
        Arc::new(Self { m, masks, position })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.masks.len()
    }

    /// Mask at basis position `i`.
    pub fn mask(&self, i: usize) -> u32 {
        self.masks[i]
    }

    pub fn masks(&self) -> &[u32] {
        &self.masks
    }

    pub fn position(&self, mask: u32) -> usize {
        self.position[mask as usize] as usize
    }

    pub fn degree(&self, i: usize) -> usize {
        self.masks[i].count_ones() as usize
    }
}

/// Sorted elements of a subset.
pub fn elements(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Sign of moving generator `i` past the lower elements of `mask`.
pub fn sign(mask: u32, i: usize) -> f64 {
    if (mask & ((1u32 << i) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Result of the basis creation operator `c_i` on the monomial `mask`.
pub fn create(mask: u32, i: usize) -> Option<(u32, f64)> {
    let bit = 1u32 << i;
    (mask & bit == 0).then(|| (mask | bit, sign(mask, i)))
}

/// Result of the basis annihilation operator `a_i = c_i*` on `mask`.
pub fn annihilate(mask: u32, i: usize) -> Option<(u32, f64)> {
    let bit = 1u32 << i;
    (mask & bit != 0).then(|| (mask ^ bit, sign(mask, i)))
}

/// Matrix of `Λ(M)` on the exterior algebra: the entry at `(S, T)` is the
/// minor `det M[S, T]`, and `Λ(M)` preserves degree.
pub fn wedge_power(basis: &SubsetBasis, m: &CMat) -> CMat {
    assert_eq!(m.nrows(), basis.m());
    assert_eq!(m.ncols(), basis.m());
    let dim = basis.dim();
    let mut out = CMat::zeros(dim, dim);
    let mut start = 0;
    while start < dim {
        let k = basis.degree(start);
        let mut end = start;
        while end < dim && basis.degree(end) == k {
            end += 1;
        }
        let sets: Vec<Vec<usize>> = (start..end).map(|i| elements(basis.mask(i))).collect();
        for (a, rows) in sets.iter().enumerate() {
            for (b, cols) in sets.iter().enumerate() {
                out[(start + a, start + b)] = minor(m, rows, cols);
            }
        }
        start = end;
    }
    out
}

fn minor(m: &CMat, rows: &[usize], cols: &[usize]) -> C64 {
    let k = rows.len();
    match k {
        0 => C64::new(1.0, 0.0),
        1 => m[(rows[0], cols[0])],
        2 => m[(rows[0], cols[0])] * m[(rows[1], cols[1])] - m[(rows[0], cols[1])] * m[(rows[1], cols[0])],
        _ => CMat::from_fn(k, k, |i, j| m[(rows[i], cols[j])]).determinant(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_cmat, rng_for};

    #[test]
    fn graded_lex_order() {
        let b = SubsetBasis::new(3);
        let sets: Vec<Vec<usize>> = b.masks().iter().map(|&m| elements(m)).collect();
        let expected: Vec<Vec<usize>> =
            vec![vec![], vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2], vec![0, 1, 2]];
        assert_eq!(sets, expected);
        for i in 0..b.dim() {
            assert_eq!(b.position(b.mask(i)), i);
        }
    }

    #[test]
    fn creation_signs() {
        // c_0 (l_1 ∧ l_2) = l_0 ∧ l_1 ∧ l_2 and c_1 (l_0 ∧ l_2) = −l_0 ∧ l_1 ∧ l_2.
        assert_eq!(create(0b110, 0), Some((0b111, 1.0)));
        assert_eq!(create(0b101, 1), Some((0b111, -1.0)));
        assert_eq!(create(0b001, 0), None);
        assert_eq!(annihilate(0b111, 1), Some((0b101, -1.0)));
        assert_eq!(annihilate(0b100, 0), None);
    }

    #[test]
    fn wedge_power_is_multiplicative() {
        let b = SubsetBasis::new(4);
        let mut rng = rng_for(11, 0);
        let x = random_cmat(4, 4, &mut rng);
        let y = random_cmat(4, 4, &mut rng);
        let lhs = wedge_power(&b, &(&x * &y));
        let rhs = wedge_power(&b, &x) * wedge_power(&b, &y);
        assert!((lhs - rhs).norm() < 1e-10);
        let top = wedge_power(&b, &x)[(15, 15)];
        assert!((top - x.determinant()).norm() < 1e-12);
    }
}

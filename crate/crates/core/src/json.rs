//! Shared JSON encodings: a complex number is `[re, im]`, a vector is a list
//! of those, and a matrix is a row-major nested list.

use crate::error::{Error, Result};
use crate::{CMat, CVec, C64};

pub type ComplexPair = [f64; 2];

pub fn complex_to_json(z: C64) -> ComplexPair {
    [z.re, z.im]
}

pub fn complex_from_json(p: ComplexPair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn vector_to_json(v: &CVec) -> Vec<ComplexPair> {
    v.iter().map(|&z| complex_to_json(z)).collect()
}

pub fn vector_from_json(v: &[ComplexPair]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|&p| complex_from_json(p)))
}

pub fn matrix_to_json(m: &CMat) -> Vec<Vec<ComplexPair>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_json(rows: &[Vec<ComplexPair>]) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Json("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| complex_from_json(rows[i][j])))
}

pub fn real_matrix_to_json(m: &crate::RMat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn real_matrix_from_json(rows: &[Vec<f64>]) -> Result<crate::RMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Json("ragged matrix rows".into()));
    }
    Ok(crate::RMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

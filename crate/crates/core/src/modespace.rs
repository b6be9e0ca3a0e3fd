//! Truncated one-particle spaces of circle spinors.
//!
//! The odd (antiperiodic) space has basis `ξ_{n,j}(t) = e^{-i(n+1/2)t} e_j`
//! for `n ∈ {−N, …, N−1}`; the even (periodic) space has basis
//! `e^{-int} e_j` for `n ∈ {−N, …, N}`. Pointwise complex conjugation maps
//! mode `n` to `−n−1` (odd) or `−n` (even), so both index sets are closed
//! under the real structure.
//!
//! The inner product is conjugate-linear in its first argument.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{vector_from_json, vector_to_json, ComplexPair};
use crate::{CMat, CVec, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

/// Basis label `(n, j)`; `j` is zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub n: i64,
    pub j: usize,
}

/// An anti-unitary involution `v ↦ P conj(v)` given by a basis permutation.
#[derive(Clone, Debug)]
pub struct RealStructureMap {
    perm: Arc<[usize]>,
}

impl PartialEq for RealStructureMap {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.perm, &other.perm) || self.perm == other.perm
    }
}

impl RealStructureMap {
    pub fn from_permutation(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        for (i, &p) in perm.iter().enumerate() {
            if p >= n || perm[p] != i {
                return Err(Error::Parameter(format!(
                    "real structure permutation is not an involution at {i}"
                )));
            }
        }
        Ok(Self { perm: perm.into() })
    }

    /// Plain complex conjugation of coordinates.
    pub fn conjugation(dim: usize) -> Self {
        Self {
            perm: (0..dim).collect::<Vec<_>>().into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        let mut out = CVec::zeros(v.len());
        for (i, &p) in self.perm.iter().enumerate() {
            out[p] = v[i].conj();
        }
        out
    }

    /// Applies α to every column.
    pub fn apply_columns(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(m.nrows(), m.ncols());
        for c in 0..m.ncols() {
            for (i, &p) in self.perm.iter().enumerate() {
                out[(p, c)] = m[(i, c)].conj();
            }
        }
        out
    }

    /// The operator `α M α`.
    pub fn conjugate_operator(&self, m: &CMat) -> CMat {
        CMat::from_fn(m.nrows(), m.ncols(), |a, b| m[(self.perm[a], self.perm[b])].conj())
    }

    /// ‖αMα − M‖₂, zero iff `M` commutes with α.
    pub fn commutator_norm(&self, m: &CMat) -> f64 {
        (self.conjugate_operator(m) - m).norm()
    }

    /// The symmetric bilinear form `B(v, w) = ⟨αv, w⟩`.
    ///
    /// With an inner product that is linear in its first slot this is the
    /// familiar pairing `⟨v, α(w)⟩`; both conventions give the same form.
    pub fn pairing(&self, v: &CVec, w: &CVec) -> C64 {
        self.perm
            .iter()
            .enumerate()
            .map(|(i, &p)| v[i] * w[p])
            .sum()
    }

    /// ‖α' M α − M‖₂ for a map `M` from this space into one with real
    /// structure `target`.
    pub fn intertwining_norm(&self, target: &RealStructureMap, m: &CMat) -> f64 {
        let tp = target.permutation();
        let conj = CMat::from_fn(m.nrows(), m.ncols(), |a, b| m[(tp[a], self.perm[b])].conj());
        (conj - m).norm()
    }

    /// An orthonormal basis of α-fixed vectors, as columns: `e_i` for fixed
    /// points and `(e_i + e_p)/√2`, `i(e_i − e_p)/√2` for each pair `i < p`.
    pub fn real_basis(&self) -> CMat {
        let n = self.dim();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = CMat::zeros(n, n);
        let mut col = 0;
        for (i, &p) in self.perm.iter().enumerate() {
            if p == i {
                out[(i, col)] = C64::new(1.0, 0.0);
                col += 1;
            } else if i < p {
                out[(i, col)] = C64::new(h, 0.0);
                out[(p, col)] = C64::new(h, 0.0);
                out[(i, col + 1)] = C64::new(0.0, h);
                out[(p, col + 1)] = C64::new(0.0, -h);
                col += 2;
            }
        }
        out
    }

    /// Pairing matrix `B(q_a, q_b)` of the columns of `q`.
    pub fn pairing_matrix(&self, q: &CMat) -> CMat {
        self.apply_columns(q).adjoint() * q
    }
}

struct SpaceInner {
    parity: Parity,
    d: usize,
    cutoff: usize,
    index: Vec<ModeIndex>,
    alpha: RealStructureMap,
}

/// A truncated mode space; cheap to clone.
#[derive(Clone)]
pub struct ModeSpace(Arc<SpaceInner>);

impl fmt::Debug for ModeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModeSpace({}, d={}, N={})", self.parity(), self.d(), self.cutoff())
    }
}

impl PartialEq for ModeSpace {
    fn eq(&self, other: &Self) -> bool {
        self.parity() == other.parity() && self.d() == other.d() && self.cutoff() == other.cutoff()
    }
}

impl ModeSpace {
    pub fn new(parity: Parity, d: usize, cutoff: usize) -> Result<Self> {
        if d == 0 || cutoff == 0 {
            return Err(Error::Parameter(format!(
                "mode space needs d ≥ 1 and N ≥ 1 (got d={d}, N={cutoff})"
            )));
        }
        let (lo, hi) = mode_range(parity, cutoff);
        let index: Vec<ModeIndex> = (lo..=hi)
            .flat_map(|n| (0..d).map(move |j| ModeIndex { n, j }))
            .collect();
        let perm = index
            .iter()
            .map(|ix| ((mirror(parity, ix.n) - lo) as usize) * d + ix.j)
            .collect();
        let alpha = RealStructureMap::from_permutation(perm)?;
        Ok(Self(Arc::new(SpaceInner {
            parity,
            d,
            cutoff,
            index,
            alpha,
        })))
    }

    pub fn odd(d: usize, cutoff: usize) -> Result<Self> {
        Self::new(Parity::Odd, d, cutoff)
    }

    pub fn even(d: usize, cutoff: usize) -> Result<Self> {
        Self::new(Parity::Even, d, cutoff)
    }

    pub fn parity(&self) -> Parity {
        self.0.parity
    }

    pub fn d(&self) -> usize {
        self.0.d
    }

    pub fn cutoff(&self) -> usize {
        self.0.cutoff
    }

    pub fn dim(&self) -> usize {
        self.0.index.len()
    }

    /// Basis labels in storage order: `n` ascending, then `j`.
    pub fn index(&self) -> &[ModeIndex] {
        &self.0.index
    }

    pub fn real_structure(&self) -> &RealStructureMap {
        &self.0.alpha
    }

    /// Smallest and largest mode number.
    pub fn modes(&self) -> (i64, i64) {
        mode_range(self.parity(), self.cutoff())
    }

    pub fn position(&self, n: i64, j: usize) -> Option<usize> {
        let (lo, hi) = self.modes();
        (n >= lo && n <= hi && j < self.d()).then(|| ((n - lo) as usize) * self.d() + j)
    }

    /// Mode number paired with `n` by the real structure.
    pub fn mirror(&self, n: i64) -> i64 {
        mirror(self.parity(), n)
    }

    pub fn zero(&self) -> ModeVector {
        ModeVector {
            space: self.clone(),
            coeffs: CVec::zeros(self.dim()),
        }
    }

    pub fn basis_vector(&self, n: i64, j: usize) -> Result<ModeVector> {
        let p = self
            .position(n, j)
            .ok_or_else(|| Error::Parameter(format!("mode ({n},{j}) outside {self:?}")))?;
        let mut v = self.zero();
        v.coeffs[p] = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn vector(&self, coeffs: CVec) -> Result<ModeVector> {
        ModeVector::new(self.clone(), coeffs)
    }

    /// Matrix of the coordinate projection onto `target` (same parity and
    /// fibre dimension, cutoff no larger).
    pub fn projection_to(&self, target: &ModeSpace) -> Result<CMat> {
        check_projectable(self, target)?;
        let mut p = CMat::zeros(target.dim(), self.dim());
        for (i, ix) in target.index().iter().enumerate() {
            let src = self.position(ix.n, ix.j).expect("target index inside source");
            p[(i, src)] = C64::new(1.0, 0.0);
        }
        Ok(p)
    }

    /// Matrix embedding `self` into a larger `target` by zero padding.
    pub fn embedding_into(&self, target: &ModeSpace) -> Result<CMat> {
        Ok(target.projection_to(self)?.adjoint())
    }
}

fn mode_range(parity: Parity, cutoff: usize) -> (i64, i64) {
    let n = cutoff as i64;
    match parity {
        Parity::Odd => (-n, n - 1),
        Parity::Even => (-n, n),
    }
}

fn mirror(parity: Parity, n: i64) -> i64 {
    match parity {
        Parity::Odd => -n - 1,
        Parity::Even => -n,
    }
}

fn check_projectable(source: &ModeSpace, target: &ModeSpace) -> Result<()> {
    if source.parity() != target.parity() || source.d() != target.d() || target.cutoff() > source.cutoff() {
        return Err(Error::SpaceMismatch(format!(
            "cannot project {source:?} onto {target:?}"
        )));
    }
    Ok(())
}

/// A vector of coefficients in a [`ModeSpace`].
#[derive(Clone, Debug)]
pub struct ModeVector {
    space: ModeSpace,
    coeffs: CVec,
}

impl PartialEq for ModeVector {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.coeffs == other.coeffs
    }
}

impl ModeVector {
    pub fn new(space: ModeSpace, coeffs: CVec) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::Parameter(format!(
                "coefficient length {} does not match dim {} of {space:?}",
                coeffs.len(),
                space.dim()
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn coeffs(&self) -> &CVec {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVec {
        self.coeffs
    }

    pub fn alpha(&self) -> ModeVector {
        ModeVector {
            space: self.space.clone(),
            coeffs: self.space.real_structure().apply(&self.coeffs),
        }
    }

    pub fn inner(&self, other: &ModeVector) -> Result<C64> {
        self.same_space(other)?;
        Ok(self.coeffs.dotc(&other.coeffs))
    }

    /// `B(v, w) = ⟨αv, w⟩`, the bilinear form in the Clifford relations.
    pub fn alpha_pairing(&self, other: &ModeVector) -> Result<C64> {
        self.same_space(other)?;
        Ok(self.space.real_structure().pairing(&self.coeffs, &other.coeffs))
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn project(&self, target: &ModeSpace) -> Result<ModeVector> {
        check_projectable(&self.space, target)?;
        let coeffs = CVec::from_iterator(
            target.dim(),
            target.index().iter().map(|ix| {
                self.coeffs[self.space.position(ix.n, ix.j).expect("inside source")]
            }),
        );
        Ok(ModeVector {
            space: target.clone(),
            coeffs,
        })
    }

    pub fn scale(&self, s: C64) -> ModeVector {
        ModeVector {
            space: self.space.clone(),
            coeffs: &self.coeffs * s,
        }
    }

    pub fn add(&self, other: &ModeVector) -> Result<ModeVector> {
        self.same_space(other)?;
        Ok(ModeVector {
            space: self.space.clone(),
            coeffs: &self.coeffs + &other.coeffs,
        })
    }

    /// Largest `|n|` carrying a coefficient above `tol`, if any.
    pub fn support_radius(&self, tol: f64) -> Option<i64> {
        self.space
            .index()
            .iter()
            .zip(self.coeffs.iter())
            .filter(|(_, c)| c.norm() > tol)
            .map(|(ix, _)| ix.n.abs())
            .max()
    }

    fn same_space(&self, other: &ModeVector) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(format!(
                "{:?} vs {:?}",
                self.space, other.space
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> ModeVectorJson {
        ModeVectorJson {
            parity: self.space.parity(),
            d: self.space.d(),
            cutoff: self.space.cutoff(),
            coeffs: vector_to_json(&self.coeffs),
        }
    }

    pub fn from_json(j: &ModeVectorJson) -> Result<Self> {
        let space = ModeSpace::new(j.parity, j.d, j.cutoff)?;
        ModeVector::new(space, vector_from_json(&j.coeffs))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModeVectorJson {
    pub parity: Parity,
    pub d: usize,
    #[serde(rename = "N")]
    pub cutoff: usize,
    pub coeffs: Vec<ComplexPair>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_mode_vector, rng_for};
    use proptest::prelude::*;

    #[test]
    fn odd_basis_enumeration() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let labels: Vec<i64> = s.index().iter().map(|ix| ix.n).collect();
        assert_eq!(labels, vec![-2, -1, 0, 1]);
        assert_eq!(s.dim(), 4);
    }

    #[test]
    fn even_dimension() {
        assert_eq!(ModeSpace::even(2, 1).unwrap().dim(), 6);
    }

    #[test]
    fn index_set_closed_under_mirror() {
        let s = ModeSpace::odd(2, 3).unwrap();
        assert_eq!(s.dim(), 12);
        for ix in s.index() {
            assert!(s.position(-ix.n - 1, ix.j).is_some());
        }
        let e = ModeSpace::even(3, 2).unwrap();
        assert_eq!(e.dim(), 15);
        for ix in e.index() {
            assert!(e.position(-ix.n, ix.j).is_some());
        }
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(ModeSpace::odd(0, 2).is_err());
        assert!(ModeSpace::even(2, 0).is_err());
    }

    #[test]
    fn alpha_on_basis() {
        let s = ModeSpace::odd(1, 3).unwrap();
        let v = s.basis_vector(2, 0).unwrap();
        assert_eq!(v.alpha(), s.basis_vector(-3, 0).unwrap());
        let e = ModeSpace::even(2, 2).unwrap();
        for j in 0..2 {
            let v = e.basis_vector(0, j).unwrap();
            assert_eq!(v.alpha(), v);
        }
    }

    #[test]
    fn real_basis_is_fixed_and_orthonormal() {
        for s in [ModeSpace::odd(2, 2).unwrap(), ModeSpace::even(3, 1).unwrap()] {
            let alpha = s.real_structure();
            let r = alpha.real_basis();
            assert!(crate::linalg::unitarity_residual(&r) < 1e-14);
            assert!((alpha.apply_columns(&r) - &r).norm() < 1e-14);
        }
    }

    #[test]
    fn basis_orthonormal() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let a = s.basis_vector(0, 0).unwrap();
        let b = s.basis_vector(1, 0).unwrap();
        assert_eq!(a.inner(&a).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(a.inner(&b).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn inner_is_conjugate_linear_in_first_slot() {
        let s = ModeSpace::odd(1, 1).unwrap();
        let a = s.basis_vector(0, 0).unwrap();
        let i = C64::new(0.0, 1.0);
        assert_eq!(a.scale(i).inner(&a).unwrap(), -i);
        assert_eq!(a.inner(&a.scale(i)).unwrap(), i);
    }

    #[test]
    fn inner_rejects_mismatched_spaces() {
        let a = ModeSpace::odd(1, 2).unwrap().zero();
        let b = ModeSpace::odd(1, 3).unwrap().zero();
        assert!(a.inner(&b).is_err());
    }

    #[test]
    fn projection_cases() {
        let big = ModeSpace::odd(1, 3).unwrap();
        let small = ModeSpace::odd(1, 2).unwrap();
        let v = big.basis_vector(-2, 0).unwrap().add(&big.basis_vector(1, 0).unwrap()).unwrap();
        let p = v.project(&small).unwrap();
        assert_eq!(p.project(&small).unwrap(), p);
        assert!((p.norm() - v.norm()).abs() < 1e-15);
        let top = big.basis_vector(2, 0).unwrap();
        assert_eq!(top.project(&small).unwrap().norm(), 0.0);
        assert!(small.zero().project(&big).is_err());
        assert!(v.project(&ModeSpace::even(1, 1).unwrap()).is_err());
    }

    #[test]
    fn projection_matrix_is_a_self_adjoint_idempotent() {
        let big = ModeSpace::even(2, 3).unwrap();
        let small = ModeSpace::even(2, 1).unwrap();
        let p = big.projection_to(&small).unwrap();
        let full = p.adjoint() * &p;
        assert_eq!(&full * &full, full);
        assert_eq!(full.adjoint(), full);
    }

    #[test]
    fn json_shape() {
        let s = ModeSpace::odd(1, 1).unwrap();
        let v = s.basis_vector(0, 0).unwrap().scale(C64::new(0.5, -1.0));
        let text = serde_json::to_string(&v.to_json()).unwrap();
        assert_eq!(text, r#"{"parity":"odd","d":1,"N":1,"coeffs":[[0.0,0.0],[0.5,-1.0]]}"#);
        let back: ModeVectorJson = serde_json::from_str(&text).unwrap();
        assert_eq!(ModeVector::from_json(&back).unwrap(), v);
    }

    proptest! {
        #[test]
        fn alpha_is_an_antiunitary_involution(seed in any::<u64>(), odd in any::<bool>(), d in 1usize..4, n in 1usize..4) {
            let parity = if odd { Parity::Odd } else { Parity::Even };
            let s = ModeSpace::new(parity, d, n).unwrap();
            let mut rng = rng_for(seed, 0);
            let v = random_mode_vector(&s, &mut rng);
            let w = random_mode_vector(&s, &mut rng);
            prop_assert!((v.alpha().alpha().coeffs() - v.coeffs()).norm() <= 1e-12);
            let lhs = v.alpha().inner(&w.alpha()).unwrap();
            let rhs = v.inner(&w).unwrap().conj();
            prop_assert!((lhs - rhs).norm() <= 1e-12);
            prop_assert!((v.inner(&w).unwrap() - w.inner(&v).unwrap().conj()).norm() <= 1e-12);
        }

        #[test]
        fn projection_never_increases_norm(seed in any::<u64>(), n in 2usize..5) {
            let s = ModeSpace::odd(2, n).unwrap();
            let t = ModeSpace::odd(2, n - 1).unwrap();
            let v = random_mode_vector(&s, &mut rng_for(seed, 1));
            prop_assert!(v.project(&t).unwrap().norm() <= v.norm() + 1e-15);
        }
    }
}

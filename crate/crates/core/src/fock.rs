//! The Fock space `ΛL` of a Lagrangian and its Clifford module structure.
//!
//! Monomials `l_{i_1} ∧ ⋯ ∧ l_{i_k}` (with `i_1 < ⋯ < i_k`) over the ordered
//! frame of `L` form an orthonormal basis, stored in graded-lexicographic
//! order. With `c_i` the creation operator of `l_i` and `a_i = c_i*`,
//!
//! ```text
//! ρ(v) = √2 ( Σ_i ⟨l_i, v⟩ c_i + Σ_i ⟨α l_i, v⟩ a_i ),
//! ```
//!
//! so that `ρ(v) ρ(w) + ρ(w) ρ(v) = 2 B(v, w)` with `B(v, w) = ⟨αv, w⟩`.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{CliffordWord, SkewSymmetricMap};
use crate::error::{Error, Result};
use crate::exterior::{self, SubsetBasis};
use crate::json::{vector_from_json, vector_to_json, ComplexPair};
use crate::lagrangian::Lagrangian;
use crate::modespace::ModeVector;
use crate::sampling::rng_for;
use crate::{CMat, CVec, C64};

/// Default bound on the Fock dimension `2^m`.
pub const DEFAULT_MAX_FOCK_DIM: usize = 1 << 16;
/// Environment variable overriding [`DEFAULT_MAX_FOCK_DIM`].
pub const MAX_FOCK_DIM_ENV: &str = "FOCKBUNDLE_MAX_FOCK_DIM";
/// Membership tolerance for `create` and `annihilate`.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// The configured Fock dimension limit.
pub fn max_fock_dim() -> usize {
    std::env::var(MAX_FOCK_DIM_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_FOCK_DIM)
}

struct FockInner {
    lagrangian: Lagrangian,
    alpha_frame: CMat,
    basis: Arc<SubsetBasis>,
}

/// Fock space over a Lagrangian; cheap to clone.
#[derive(Clone)]
pub struct FockSpace(Arc<FockInner>);

impl std::fmt::Debug for FockSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "FockSpace(m={})", self.m())
    }
}

impl PartialEq for FockSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.m() == other.m() && self.frame() == other.frame())
    }
}

impl FockSpace {
    pub fn new(lagrangian: &Lagrangian) -> Result<Self> {
        Self::with_limit(lagrangian, max_fock_dim())
    }

    pub fn with_limit(lagrangian: &Lagrangian, limit: usize) -> Result<Self> {
        let m = lagrangian.dim();
        if m >= 31 || (1usize << m) > limit {
            return Err(Error::FockTooLarge { m, limit });
        }
        let alpha_frame = lagrangian.real_structure().apply_columns(lagrangian.frame());
        Ok(Self(Arc::new(FockInner {
            lagrangian: lagrangian.clone(),
            alpha_frame,
            basis: SubsetBasis::new(m),
        })))
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.0.lagrangian
    }

    /// The orthonormal frame `(l_1, …, l_m)` of `L`.
    pub fn frame(&self) -> &CMat {
        self.0.lagrangian.frame()
    }

    /// The frame `(α l_1, …, α l_m)` of `α(L)`.
    pub fn alpha_frame(&self) -> &CMat {
        &self.0.alpha_frame
    }

    pub fn basis(&self) -> &SubsetBasis {
        &self.0.basis
    }

    pub fn m(&self) -> usize {
        self.0.basis.m()
    }

    pub fn dim(&self) -> usize {
        self.0.basis.dim()
    }

    /// Ambient dimension of the one-particle space.
    pub fn one_particle_dim(&self) -> usize {
        self.0.lagrangian.ambient_dim()
    }

    pub fn vacuum(&self) -> FockVector {
        self.monomial(0)
    }

    /// The normalized monomial with the given subset mask.
    pub fn monomial(&self, mask: u32) -> FockVector {
        let mut coeffs = CVec::zeros(self.dim());
        coeffs[self.basis().position(mask)] = C64::new(1.0, 0.0);
        FockVector {
            fock: self.clone(),
            coeffs,
        }
    }

    pub fn vector(&self, coeffs: CVec) -> Result<FockVector> {
        if coeffs.len() != self.dim() {
            return Err(Error::Parameter(format!(
                "Fock vector length {} does not match dim {}",
                coeffs.len(),
                self.dim()
            )));
        }
        Ok(FockVector {
            fock: self.clone(),
            coeffs,
        })
    }

    /// Applies `Σ_i s_i c_i + Σ_i t_i a_i` to a coefficient vector.
    pub fn apply_linear(&self, s: &[C64], t: &[C64], x: &CVec) -> CVec {
        let basis = self.basis();
        let mut out = CVec::zeros(self.dim());
        for (col, &mask) in basis.masks().iter().enumerate() {
            let xc = x[col];
            if xc == C64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..self.m() {
                if let Some((tgt, sg)) = exterior::create(mask, i) {
                    if s[i] != C64::new(0.0, 0.0) {
                        out[basis.position(tgt)] += s[i] * xc * sg;
                    }
                } else if let Some((tgt, sg)) = exterior::annihilate(mask, i) {
                    if t[i] != C64::new(0.0, 0.0) {
                        out[basis.position(tgt)] += t[i] * xc * sg;
                    }
                }
            }
        }
        out
    }

    /// Dense matrix of `Σ_i s_i c_i + Σ_i t_i a_i`.
    pub fn linear_matrix(&self, s: &[C64], t: &[C64]) -> CMat {
        let basis = self.basis();
        let mut out = CMat::zeros(self.dim(), self.dim());
        for (col, &mask) in basis.masks().iter().enumerate() {
            for i in 0..self.m() {
                if let Some((tgt, sg)) = exterior::create(mask, i) {
                    out[(basis.position(tgt), col)] += s[i] * sg;
                } else if let Some((tgt, sg)) = exterior::annihilate(mask, i) {
                    out[(basis.position(tgt), col)] += t[i] * sg;
                }
            }
        }
        out
    }

    /// Coefficients `⟨l_i, v⟩` and `⟨α l_i, v⟩` of a one-particle vector.
    fn split(&self, v: &CVec) -> (Vec<C64>, Vec<C64>) {
        let s = (self.frame().adjoint() * v).iter().cloned().collect();
        let t = (self.alpha_frame().adjoint() * v).iter().cloned().collect();
        (s, t)
    }

    fn check_len(&self, v: &CVec) -> Result<()> {
        if v.len() != self.one_particle_dim() {
            return Err(Error::SpaceMismatch(format!(
                "one-particle vector has length {}, expected {}",
                v.len(),
                self.one_particle_dim()
            )));
        }
        Ok(())
    }

    /// `c(v)` for `v ∈ L`: left wedge multiplication.
    pub fn create(&self, v: &CVec, x: &CVec) -> Result<CVec> {
        self.check_len(v)?;
        let residual = self.lagrangian().subspace().membership_residual(v);
        if residual > MEMBERSHIP_TOL {
            return Err(Error::Membership { residual });
        }
        let (s, _) = self.split(v);
        Ok(self.apply_linear(&s, &vec![C64::new(0.0, 0.0); self.m()], x))
    }

    /// `a(w)` for `w ∈ α(L)`: contraction with `u ↦ B(u, w)`.
    pub fn annihilate(&self, w: &CVec, x: &CVec) -> Result<CVec> {
        self.check_len(w)?;
        let proj = self.alpha_frame() * (self.alpha_frame().adjoint() * w);
        let residual = (w - proj).norm();
        if residual > MEMBERSHIP_TOL {
            return Err(Error::Membership { residual });
        }
        let (_, t) = self.split(w);
        Ok(self.apply_linear(&vec![C64::new(0.0, 0.0); self.m()], &t, x))
    }

    /// `ρ(v) x = √2 (c(P_L v) + a(P_L^⊥ v)) x`.
    pub fn rho(&self, v: &CVec, x: &CVec) -> CVec {
        let (s, t) = self.split(v);
        let r2 = std::f64::consts::SQRT_2;
        let s: Vec<C64> = s.iter().map(|z| z * r2).collect();
        let t: Vec<C64> = t.iter().map(|z| z * r2).collect();
        self.apply_linear(&s, &t, x)
    }

    /// Dense matrix of `ρ(v)`.
    pub fn rho_matrix(&self, v: &CVec) -> CMat {
        let (s, t) = self.split(v);
        let r2 = std::f64::consts::SQRT_2;
        let s: Vec<C64> = s.iter().map(|z| z * r2).collect();
        let t: Vec<C64> = t.iter().map(|z| z * r2).collect();
        self.linear_matrix(&s, &t)
    }

    /// `ρ(v)` applied to every column of `m`.
    pub fn rho_columns(&self, v: &CVec, m: &CMat) -> CMat {
        let mut out = CMat::zeros(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            let col: CVec = m.column(j).into_owned();
            out.set_column(j, &self.rho(v, &col));
        }
        out
    }

    /// `w ⊳ x`: each product acts letter by letter, rightmost first.
    pub fn clifford_act(&self, w: &CliffordWord, x: &CVec) -> Result<CVec> {
        let mut out = CVec::zeros(self.dim());
        for term in w.terms() {
            let mut y = x.clone();
            for letter in term.letters.iter().rev() {
                self.check_len(letter.coeffs())?;
                y = self.rho(letter.coeffs(), &y);
            }
            out += y * term.scalar;
        }
        Ok(out)
    }

    /// Dense matrix of the word's action.
    pub fn clifford_matrix(&self, w: &CliffordWord) -> Result<CMat> {
        let mut out = CMat::zeros(self.dim(), self.dim());
        for term in w.terms() {
            let mut y = CMat::identity(self.dim(), self.dim()) * term.scalar;
            for letter in term.letters.iter().rev() {
                self.check_len(letter.coeffs())?;
                y = self.rho_matrix(letter.coeffs()) * y;
            }
            out += y;
        }
        Ok(out)
    }

    /// The quadratic operator `X̂` representing a skew map `X`; see
    /// [`QuadraticOperator`].
    pub fn second_quantize(&self, x: &CMat) -> Result<QuadraticOperator> {
        let n = self.one_particle_dim();
        if x.nrows() != n || x.ncols() != n {
            return Err(Error::SpaceMismatch(format!("operator must be {n}×{n}")));
        }
        let q = self.frame();
        let aq = self.alpha_frame();
        Ok(QuadraticOperator {
            fock: self.clone(),
            a: q.adjoint() * x * q,
            b: q.adjoint() * x * aq,
            c: aq.adjoint() * x * q,
        })
    }

    /// Sampled lower bound for the seminorm
    /// `p_n(x) = sup ‖X̂_1 ⋯ X̂_n x‖` over unit-norm generators.
    ///
    /// Each sample draws `n` generators `X = Σ_k r_k X_k / Σ_k |r_k|` from the
    /// supplied unit-norm skew maps with uniform real weights, using stream
    /// `s` of `seed` for sample `s`; the estimate is the maximum over
    /// samples, so more samples under the same seed never decrease it.
    pub fn seminorm_estimate(
        &self,
        x: &CVec,
        n: usize,
        samples: usize,
        lie_basis: &[SkewSymmetricMap],
        seed: u64,
    ) -> Result<f64> {
        if n == 0 {
            return Ok(x.norm());
        }
        if lie_basis.is_empty() {
            return Err(Error::Parameter("seminorm sampling needs a non-empty Lie basis".into()));
        }
        let ops = lie_basis
            .iter()
            .map(|xk| self.second_quantize(&xk.matrix().scale(1.0 / xk.op_norm().max(f64::MIN_POSITIVE))))
            .collect::<Result<Vec<_>>>()?;
        let mut best: f64 = 0.0;
        for sample in 0..samples {
            let mut rng = rng_for(seed, sample as u64);
            let mut y = x.clone();
            for _ in 0..n {
                let r: Vec<f64> = (0..ops.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let total: f64 = r.iter().map(|v: &f64| v.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
                let mut z = CVec::zeros(self.dim());
                for (op, rk) in ops.iter().zip(&r) {
                    z += op.apply(&y) * C64::new(rk / total, 0.0);
                }
                y = z;
            }
            best = best.max(y.norm());
        }
        Ok(best)
    }
}

/// Quadratic second quantization of a one-particle operator `X`:
///
/// ```text
/// X̂ = Σ A_pq c_p a_q + ½ Σ B_pq c_p c_q + ½ Σ C_pq a_p a_q,
/// A = Q* X Q,  B = Q* X αQ,  C = (αQ)* X Q.
/// ```
///
/// For skew `X` commuting with α, `B` and `C` are antisymmetric,
/// `[X̂, ρ(v)] = ρ(Xv)` and `⟨Ω, X̂ Ω⟩ = 0`, so `exp(X̂)` implements `exp(X)`.
/// If `X` preserves `L` this is the derivation `d/dt Λ_{exp(tX)}` at zero.
#[derive(Clone, Debug)]
pub struct QuadraticOperator {
    fock: FockSpace,
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}

impl QuadraticOperator {
    pub fn apply(&self, x: &CVec) -> CVec {
        let basis = self.fock.basis();
        let m = self.fock.m();
        let mut out = CVec::zeros(x.len());
        for (col, &mask) in basis.masks().iter().enumerate() {
            let xc = x[col];
            if xc == C64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..m {
                for p in 0..m {
                    // c_p a_q
                    let a = self.a[(p, q)];
                    if a != C64::new(0.0, 0.0) {
                        if let Some((m1, s1)) = exterior::annihilate(mask, q) {
                            if let Some((m2, s2)) = exterior::create(m1, p) {
                                out[basis.position(m2)] += a * xc * (s1 * s2);
                            }
                        }
                    }
                    if p < q {
                        // ½(B_pq c_p c_q + B_qp c_q c_p) = B_pq c_p c_q, and likewise for C.
                        let b = self.b[(p, q)];
                        if b != C64::new(0.0, 0.0) {
                            if let Some((m1, s1)) = exterior::create(mask, q) {
                                if let Some((m2, s2)) = exterior::create(m1, p) {
                                    out[basis.position(m2)] += b * xc * (s1 * s2);
                                }
                            }
                        }
                        let c = self.c[(p, q)];
                        if c != C64::new(0.0, 0.0) {
                            if let Some((m1, s1)) = exterior::annihilate(mask, q) {
                                if let Some((m2, s2)) = exterior::annihilate(m1, p) {
                                    out[basis.position(m2)] += c * xc * (s1 * s2);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Dense matrix of `X̂`.
    pub fn matrix(&self) -> CMat {
        let dim = self.fock.dim();
        let mut out = CMat::zeros(dim, dim);
        let mut e = CVec::zeros(dim);
        for j in 0..dim {
            e[j] = C64::new(1.0, 0.0);
            out.set_column(j, &self.apply(&e));
            e[j] = C64::new(0.0, 0.0);
        }
        out
    }

    /// Whether `X` maps `L` into itself (`B = C = 0`).
    pub fn is_block_diagonal(&self, tol: f64) -> bool {
        self.b.norm() <= tol && self.c.norm() <= tol
    }
}

/// A vector in a [`FockSpace`].
#[derive(Clone, Debug)]
pub struct FockVector {
    fock: FockSpace,
    coeffs: CVec,
}

impl FockVector {
    pub fn fock(&self) -> &FockSpace {
        &self.fock
    }

    pub fn coeffs(&self) -> &CVec {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVec {
        self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        if self.fock != other.fock {
            return Err(Error::SpaceMismatch("Fock vectors over different spaces".into()));
        }
        Ok(self.coeffs.dotc(&other.coeffs))
    }

    pub fn create(&self, v: &ModeVector) -> Result<FockVector> {
        let coeffs = self.fock.create(v.coeffs(), &self.coeffs)?;
        self.fock.vector(coeffs)
    }

    pub fn annihilate(&self, w: &ModeVector) -> Result<FockVector> {
        let coeffs = self.fock.annihilate(w.coeffs(), &self.coeffs)?;
        self.fock.vector(coeffs)
    }

    pub fn rho(&self, v: &ModeVector) -> Result<FockVector> {
        self.fock.check_len(v.coeffs())?;
        self.fock.vector(self.fock.rho(v.coeffs(), &self.coeffs))
    }

    pub fn clifford_act(&self, w: &CliffordWord) -> Result<FockVector> {
        self.fock.vector(self.fock.clifford_act(w, &self.coeffs)?)
    }

    pub fn to_json(&self) -> FockVectorJson {
        FockVectorJson {
            m: self.fock.m(),
            coeffs: vector_to_json(&self.coeffs),
        }
    }

    pub fn from_json(fock: &FockSpace, j: &FockVectorJson) -> Result<Self> {
        if j.m != fock.m() {
            return Err(Error::SpaceMismatch(format!("vector has m={}, Fock space m={}", j.m, fock.m())));
        }
        fock.vector(vector_from_json(&j.coeffs))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FockVectorJson {
    pub m: usize,
    pub coeffs: Vec<ComplexPair>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::Lagrangian;
    use crate::modespace::ModeSpace;
    use crate::sampling::{random_cvec, random_mode_vector, random_orthogonal, random_skew, rng_for};
    use proptest::prelude::*;

    fn fock(s: &ModeSpace) -> FockSpace {
        FockSpace::new(&Lagrangian::standard(s).unwrap()).unwrap()
    }

    fn i_c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_basics() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let f = fock(&s);
        let omega = f.vacuum();
        assert_eq!(omega.norm(), 1.0);
        let l = f.frame().clone();
        let al = f.alpha_frame().clone();
        for i in 0..f.m() {
            let w: CVec = al.column(i).into_owned();
            assert_eq!(f.annihilate(&w, omega.coeffs()).unwrap().norm(), 0.0);
            let v: CVec = l.column(i).into_owned();
            let cv = f.create(&v, omega.coeffs()).unwrap();
            assert_eq!(cv[0], i_c(0.0, 0.0));
        }
    }

    #[test]
    fn annihilate_after_create_gives_norm() {
        let s = ModeSpace::odd(2, 2).unwrap();
        let f = fock(&s);
        let mut rng = rng_for(3, 0);
        let v = f.frame() * random_cvec(f.m(), &mut rng);
        let w = f.lagrangian().real_structure().apply(&v);
        let x = f.create(&v, f.vacuum().coeffs()).unwrap();
        let y = f.annihilate(&w, &x).unwrap();
        let expected = f.vacuum().coeffs() * C64::new(v.norm_squared(), 0.0);
        assert!((y - expected).norm() < 1e-12);
    }

    #[test]
    fn two_particle_monomial() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let f = fock(&s);
        let l1: CVec = f.frame().column(0).into_owned();
        let l2: CVec = f.frame().column(1).into_owned();
        let x = f.create(&l2, f.vacuum().coeffs()).unwrap();
        let x = f.create(&l1, &x).unwrap();
        assert_eq!(x, f.monomial(0b11).coeffs().clone());
        assert_eq!(x.norm(), 1.0);
    }

    #[test]
    fn membership_is_enforced() {
        let s = ModeSpace::odd(1, 1).unwrap();
        let f = fock(&s);
        let bad = s.basis_vector(-1, 0).unwrap();
        assert!(f.create(bad.coeffs(), f.vacuum().coeffs()).is_err());
        let good = s.basis_vector(-1, 0).unwrap();
        assert!(f.annihilate(good.coeffs(), f.vacuum().coeffs()).is_ok());
        assert!(f.annihilate(s.basis_vector(0, 0).unwrap().coeffs(), f.vacuum().coeffs()).is_err());
    }

    #[test]
    fn rho_on_vacuum_and_squares() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let f = fock(&s);
        let v = s.basis_vector(0, 0).unwrap();
        let x = f.rho(v.coeffs(), f.vacuum().coeffs());
        let pos = f.basis().position(0b01);
        assert!((x[pos] - i_c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        // f(ξ_0)² = 0 and f(ξ_0 + ξ_{-1})² = 2.
        let r = f.rho_matrix(v.coeffs());
        assert!((&r * &r).norm() < 1e-15);
        let w = v.add(&s.basis_vector(-1, 0).unwrap()).unwrap();
        let r = f.rho_matrix(w.coeffs());
        let id = CMat::identity(f.dim(), f.dim());
        assert!((&r * &r - id.scale(2.0)).norm() < 1e-14);
    }

    #[test]
    fn grading() {
        let s = ModeSpace::odd(1, 3).unwrap();
        let f = fock(&s);
        for i in 0..f.dim() {
            let k = f.basis().degree(i);
            let mut e = CVec::zeros(f.dim());
            e[i] = i_c(1.0, 0.0);
            for j in 0..f.m() {
                let l: CVec = f.frame().column(j).into_owned();
                let out = f.create(&l, &e).unwrap();
                for (p, z) in out.iter().enumerate() {
                    if z.norm() > 0.0 {
                        assert_eq!(f.basis().degree(p), k + 1);
                    }
                }
                let al: CVec = f.alpha_frame().column(j).into_owned();
                let out = f.annihilate(&al, &e).unwrap();
                for (p, z) in out.iter().enumerate() {
                    if z.norm() > 0.0 {
                        assert_eq!(f.basis().degree(p) + 1, k);
                    }
                }
            }
        }
    }

    #[test]
    fn vacuum_is_cyclic_for_creation_words() {
        let s = ModeSpace::even(2, 1).unwrap();
        let f = fock(&s);
        let mut cols = CMat::zeros(f.dim(), f.dim());
        for (i, &mask) in f.basis().masks().iter().enumerate() {
            let mut x = f.vacuum().into_coeffs();
            for j in crate::exterior::elements(mask).into_iter().rev() {
                let l: CVec = f.frame().column(j).into_owned();
                x = f.create(&l, &x).unwrap();
            }
            cols.set_column(i, &x);
        }
        assert_eq!(cols.rank(1e-9), f.dim());
    }

    #[test]
    fn unit_word_acts_as_identity() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let f = fock(&s);
        let x = random_cvec(f.dim(), &mut rng_for(1, 0));
        assert_eq!(f.clifford_act(&CliffordWord::unit(&s), &x).unwrap(), x);
    }

    #[test]
    fn fock_guard() {
        let s = ModeSpace::odd(2, 3).unwrap();
        let l = Lagrangian::standard(&s).unwrap();
        assert!(matches!(FockSpace::with_limit(&l, 32), Err(Error::FockTooLarge { m: 6, limit: 32 })));
        assert!(FockSpace::with_limit(&l, 64).is_ok());
    }

    #[test]
    fn quadratic_operator_commutator_identity() {
        let s = ModeSpace::odd(2, 2).unwrap();
        let f = fock(&s);
        let mut rng = rng_for(21, 0);
        let x = random_skew(&s, 1.0, &mut rng);
        let q = f.second_quantize(x.matrix()).unwrap();
        let xh = q.matrix();
        // Antisymmetry of the pair blocks.
        assert!((&q.b + q.b.transpose()).norm() < 1e-12);
        assert!((&q.c + q.c.transpose()).norm() < 1e-12);
        assert!(xh[(0, 0)].norm() < 1e-14);
        for _ in 0..4 {
            let v = random_cvec(s.dim(), &mut rng);
            let r = f.rho_matrix(&v);
            let lhs = &xh * &r - &r * &xh;
            let rhs = f.rho_matrix(&(x.matrix() * &v));
            assert!((lhs - rhs).norm() < 1e-11);
        }
        // Skew-adjoint on Fock space.
        assert!((&xh + xh.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn vacuum_seminorm_oracles() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let f = fock(&s);
        let omega = f.vacuum().into_coeffs();
        // Block-diagonal generators annihilate the vacuum.
        let t = CMat::from_fn(2, 2, |i, j| if i == j { i_c(0.0, (i + 1) as f64) } else { i_c(0.0, 0.0) });
        let q = f.frame();
        let aq = f.alpha_frame();
        let block = q * &t * q.adjoint() + aq * t.map(|z| z.conj()) * aq.adjoint();
        let xd = SkewSymmetricMap::new(s.clone(), block).unwrap();
        let est = f.seminorm_estimate(&omega, 1, 16, &[xd], 0).unwrap();
        assert!(est < 1e-14);
        // A single off-diagonal generator: ‖X̂Ω‖² = Σ_{p<q} |B_pq|².
        let x = random_skew(&s, 1.0, &mut rng_for(2, 0));
        let q = f.second_quantize(x.matrix()).unwrap();
        let mut bsum = 0.0;
        for p in 0..f.m() {
            for r in (p + 1)..f.m() {
                bsum += q.b[(p, r)].norm_sqr();
            }
        }
        assert!((q.apply(&omega).norm() - bsum.sqrt()).abs() < 1e-12);
        assert_eq!(f.seminorm_estimate(&omega, 0, 0, &[], 0).unwrap(), 1.0);
    }

    #[test]
    fn seminorm_monotone_in_samples() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let f = fock(&s);
        let mut rng = rng_for(8, 0);
        let basis: Vec<_> = (0..3).map(|_| random_skew(&s, 1.0, &mut rng)).collect();
        let x = f.vacuum().into_coeffs();
        let a = f.seminorm_estimate(&x, 2, 5, &basis, 42).unwrap();
        let b = f.seminorm_estimate(&x, 2, 20, &basis, 42).unwrap();
        assert!(a <= b);
        assert!(b > 0.0);
    }

    #[test]
    fn json_roundtrip() {
        let s = ModeSpace::odd(1, 1).unwrap();
        let f = fock(&s);
        let v = f.monomial(1);
        let text = serde_json::to_string(&v.to_json()).unwrap();
        assert_eq!(text, r#"{"m":1,"coeffs":[[0.0,0.0],[1.0,0.0]]}"#);
        let back = FockVector::from_json(&f, &serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back.coeffs(), v.coeffs());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn car_and_adjoint(seed in any::<u64>(), odd in any::<bool>(), n in 1usize..3) {
            let s = if odd { ModeSpace::odd(2, n).unwrap() } else { ModeSpace::even(2, n).unwrap() };
            let f = fock(&s);
            let mut rng = rng_for(seed, 0);
            let v = random_mode_vector(&s, &mut rng);
            let w = random_mode_vector(&s, &mut rng);
            let rv = f.rho_matrix(v.coeffs());
            let rw = f.rho_matrix(w.coeffs());
            let b = v.alpha_pairing(&w).unwrap();
            let id = CMat::identity(f.dim(), f.dim());
            prop_assert!((&rv * &rw + &rw * &rv - id * (b * 2.0)).norm() <= 1e-9);
            let ra = f.rho_matrix(v.alpha().coeffs());
            prop_assert!((rv.adjoint() - ra).norm() <= 1e-9);
        }

        #[test]
        fn creation_annihilation_adjoint(seed in any::<u64>()) {
            let s = ModeSpace::odd(1, 3).unwrap();
            let f = fock(&s);
            let mut rng = rng_for(seed, 0);
            let v = f.frame() * random_cvec(f.m(), &mut rng);
            let av = f.lagrangian().real_structure().apply(&v);
            let x = random_cvec(f.dim(), &mut rng);
            let y = random_cvec(f.dim(), &mut rng);
            let lhs = f.create(&v, &x).unwrap().dotc(&y);
            let rhs = x.dotc(&f.annihilate(&av, &y).unwrap());
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }

        #[test]
        fn anticommutator_word_acts_as_pairing(seed in any::<u64>()) {
            let s = ModeSpace::even(2, 1).unwrap();
            let f = fock(&s);
            let mut rng = rng_for(seed, 0);
            let v = random_mode_vector(&s, &mut rng);
            let w = random_mode_vector(&s, &mut rng);
            let word = CliffordWord::generator(&v).anticommutator(&CliffordWord::generator(&w)).unwrap();
            let x = random_cvec(f.dim(), &mut rng);
            let lhs = f.clifford_act(&word, &x).unwrap();
            let rhs = &x * (v.alpha_pairing(&w).unwrap() * 2.0);
            prop_assert!((lhs - rhs).norm() <= 1e-10);
        }

        #[test]
        fn bogoliubov_is_multiplicative_and_isometric(seed in any::<u64>()) {
            let s = ModeSpace::odd(1, 2).unwrap();
            let f = fock(&s);
            let mut rng = rng_for(seed, 0);
            let g = random_orthogonal(&s, 1.0, &mut rng);
            let h = random_orthogonal(&s, 1.0, &mut rng);
            let v = random_mode_vector(&s, &mut rng);
            let w = random_mode_vector(&s, &mut rng);
            let word = CliffordWord::product_of(&s, &[v.clone(), w]).unwrap()
                .add(&CliffordWord::generator(&v).scale(C64::new(0.5, 0.2))).unwrap();
            let gh = g.compose(&h).unwrap();
            let lhs = f.clifford_matrix(&word.bogoliubov(&gh).unwrap()).unwrap();
            let rhs = f.clifford_matrix(&word.bogoliubov(&h).unwrap().bogoliubov(&g).unwrap()).unwrap();
            prop_assert!((&lhs - &rhs).norm() <= 1e-10);
            let before = crate::linalg::op_norm(&f.clifford_matrix(&word).unwrap());
            prop_assert!((crate::linalg::op_norm(&lhs) - before).abs() <= 1e-8);
            // θ_g(f(v))* = θ_g(f(v)*).
            let single = CliffordWord::generator(&v);
            let a = f.clifford_matrix(&single.bogoliubov(&g).unwrap().star()).unwrap();
            let b = f.clifford_matrix(&single.star().bogoliubov(&g).unwrap()).unwrap();
            prop_assert!((a - b).norm() <= 1e-10);
        }

        #[test]
        fn star_is_represented_by_adjoint(seed in any::<u64>()) {
            let s = ModeSpace::odd(1, 2).unwrap();
            let f = fock(&s);
            let mut rng = rng_for(seed, 0);
            let v = random_mode_vector(&s, &mut rng);
            let w = random_mode_vector(&s, &mut rng);
            let word = CliffordWord::product_of(&s, &[v, w]).unwrap().scale(C64::new(0.3, -0.7));
            let m = f.clifford_matrix(&word).unwrap();
            let ms = f.clifford_matrix(&word.star()).unwrap();
            prop_assert!((m.adjoint() - ms).norm() <= 1e-10);
        }
    }
}

//! Orthogonal transformations of a mode space, skew generators, and formal
//! Clifford words.
//!
//! Words are kept as unsimplified sums of products of generators. Algebraic
//! identities between words are checked through the Fock representation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{complex_from_json, complex_to_json, matrix_to_json, ComplexPair};
use crate::lagrangian::{growth_verdict, Lagrangian, Verdict};
use crate::linalg::{commutator, expm, op_norm, unitarity_residual};
use crate::modespace::{ModeSpace, ModeVector, ModeVectorJson};
use crate::{CMat, C64};

/// Default tolerance for the unitarity and α-commutation invariants.
pub const ORTHOGONAL_TOL: f64 = 1e-10;

/// A unitary of `V` commuting with the real structure.
#[derive(Clone, Debug)]
pub struct OrthogonalMap {
    space: ModeSpace,
    matrix: CMat,
}

/// Diagnostics of an orthogonal map relative to a Lagrangian.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrthogonalDiagnostics {
    pub alpha_commutator_norm: f64,
    pub unitarity_residual: f64,
    /// ‖P_L g P_L^⊥‖₂.
    pub offdiag_hs: f64,
    /// ‖g‖ + ‖P_L g P_L^⊥‖₂.
    pub j_norm: f64,
    /// ‖[g, J_L]‖₂.
    pub j_commutator_hs: f64,
}

impl OrthogonalMap {
    pub fn new(space: ModeSpace, matrix: CMat) -> Result<Self> {
        Self::with_tolerance(space, matrix, ORTHOGONAL_TOL)
    }

    pub fn with_tolerance(space: ModeSpace, matrix: CMat, tol: f64) -> Result<Self> {
        check_square(&space, &matrix)?;
        let u = unitarity_residual(&matrix);
        if u > tol {
            return Err(Error::invariant("orthogonal map is not unitary", u, tol));
        }
        let a = space.real_structure().commutator_norm(&matrix);
        if a > tol {
            return Err(Error::invariant("orthogonal map does not commute with α", a, tol));
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: &ModeSpace) -> Self {
        Self {
            space: space.clone(),
            matrix: CMat::identity(space.dim(), space.dim()),
        }
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply(&self, v: &ModeVector) -> Result<ModeVector> {
        if v.space() != &self.space {
            return Err(Error::SpaceMismatch("vector and map live on different spaces".into()));
        }
        self.space.vector(&self.matrix * v.coeffs())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &OrthogonalMap) -> Result<OrthogonalMap> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("composing maps on different spaces".into()));
        }
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn inverse(&self) -> OrthogonalMap {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn alpha_commutator_norm(&self) -> f64 {
        self.space.real_structure().commutator_norm(&self.matrix)
    }

    pub fn offdiag_hs(&self, l: &Lagrangian) -> f64 {
        (l.projector() * &self.matrix * l.complement_projector()).norm()
    }

    pub fn diagnostics(&self, l: &Lagrangian) -> OrthogonalDiagnostics {
        let offdiag_hs = self.offdiag_hs(l);
        OrthogonalDiagnostics {
            alpha_commutator_norm: self.alpha_commutator_norm(),
            unitarity_residual: unitarity_residual(&self.matrix),
            offdiag_hs,
            j_norm: op_norm(&self.matrix) + offdiag_hs,
            j_commutator_hs: commutator(&self.matrix, &l.complex_structure()).norm(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!(matrix_to_json(&self.matrix))
    }
}

/// A skew-adjoint operator commuting with the real structure.
#[derive(Clone, Debug)]
pub struct SkewSymmetricMap {
    space: ModeSpace,
    matrix: CMat,
}

impl SkewSymmetricMap {
    pub fn new(space: ModeSpace, matrix: CMat) -> Result<Self> {
        check_square(&space, &matrix)?;
        let s = (&matrix + matrix.adjoint()).norm();
        if s > ORTHOGONAL_TOL {
            return Err(Error::invariant("skew map is not skew-adjoint", s, ORTHOGONAL_TOL));
        }
        let a = space.real_structure().commutator_norm(&matrix);
        if a > ORTHOGONAL_TOL {
            return Err(Error::invariant("skew map does not commute with α", a, ORTHOGONAL_TOL));
        }
        Ok(Self { space, matrix })
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn scaled(&self, s: f64) -> SkewSymmetricMap {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.scale(s),
        }
    }

    /// `exp(X)`, re-checked against the orthogonal-map invariants.
    pub fn exp(&self) -> OrthogonalMap {
        let g = expm(&self.matrix);
        OrthogonalMap::with_tolerance(self.space.clone(), g, 1e-9)
            .expect("exponential of a real skew map is orthogonal")
    }

    pub fn offdiag_hs(&self, l: &Lagrangian) -> f64 {
        (l.projector() * &self.matrix * l.complement_projector()).norm()
    }

    pub fn op_norm(&self) -> f64 {
        op_norm(&self.matrix)
    }
}

fn check_square(space: &ModeSpace, m: &CMat) -> Result<()> {
    if m.nrows() != space.dim() || m.ncols() != space.dim() {
        return Err(Error::Parameter(format!(
            "matrix is {}×{}, space has dim {}",
            m.nrows(),
            m.ncols(),
            space.dim()
        )));
    }
    Ok(())
}

/// One product `scalar · f(v_1) ⋯ f(v_r)` in a Clifford word.
#[derive(Clone, Debug, PartialEq)]
pub struct WordTerm {
    pub scalar: C64,
    pub letters: Vec<ModeVector>,
}

/// A formal linear combination of products of Clifford generators.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordWord {
    space: ModeSpace,
    terms: Vec<WordTerm>,
}

impl CliffordWord {
    pub fn unit(space: &ModeSpace) -> Self {
        Self::scalar(space, C64::new(1.0, 0.0))
    }

    pub fn scalar(space: &ModeSpace, z: C64) -> Self {
        Self {
            space: space.clone(),
            terms: vec![WordTerm {
                scalar: z,
                letters: Vec::new(),
            }],
        }
    }

    pub fn zero(space: &ModeSpace) -> Self {
        Self {
            space: space.clone(),
            terms: Vec::new(),
        }
    }

    /// The single-letter word `f(v)`.
    pub fn generator(v: &ModeVector) -> Self {
        Self {
            space: v.space().clone(),
            terms: vec![WordTerm {
                scalar: C64::new(1.0, 0.0),
                letters: vec![v.clone()],
            }],
        }
    }

    /// `f(v_1) ⋯ f(v_r)`.
    pub fn product_of(space: &ModeSpace, letters: &[ModeVector]) -> Result<Self> {
        if letters.iter().any(|v| v.space() != space) {
            return Err(Error::SpaceMismatch("letter outside the word's space".into()));
        }
        Ok(Self {
            space: space.clone(),
            terms: vec![WordTerm {
                scalar: C64::new(1.0, 0.0),
                letters: letters.to_vec(),
            }],
        })
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    pub fn terms(&self) -> &[WordTerm] {
        &self.terms
    }

    pub fn add(&self, other: &CliffordWord) -> Result<CliffordWord> {
        self.same_space(other)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            space: self.space.clone(),
            terms,
        })
    }

    pub fn scale(&self, z: C64) -> CliffordWord {
        Self {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| WordTerm {
                    scalar: t.scalar * z,
                    letters: t.letters.clone(),
                })
                .collect(),
        }
    }

    /// The product `self · other`, expanded term by term.
    pub fn mul(&self, other: &CliffordWord) -> Result<CliffordWord> {
        self.same_space(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut letters = a.letters.clone();
                letters.extend(b.letters.iter().cloned());
                terms.push(WordTerm {
                    scalar: a.scalar * b.scalar,
                    letters,
                });
            }
        }
        Ok(Self {
            space: self.space.clone(),
            terms,
        })
    }

    /// `ab + ba`.
    pub fn anticommutator(&self, other: &CliffordWord) -> Result<CliffordWord> {
        self.mul(other)?.add(&other.mul(self)?)
    }

    /// The involution: reverse each product, apply α to every letter and
    /// conjugate the scalar.
    pub fn star(&self) -> CliffordWord {
        Self {
            space: self.space.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| WordTerm {
                    scalar: t.scalar.conj(),
                    letters: t.letters.iter().rev().map(ModeVector::alpha).collect(),
                })
                .collect(),
        }
    }

    /// The Bogoliubov automorphism θ_g: every letter `f(v)` becomes `f(gv)`.
    pub fn bogoliubov(&self, g: &OrthogonalMap) -> Result<CliffordWord> {
        if g.space() != &self.space {
            return Err(Error::SpaceMismatch("Bogoliubov map on a different space".into()));
        }
        self.map_letters(&self.space, |v| g.apply(v))
    }

    /// Relabels letters through an arbitrary linear map into `target`.
    pub(crate) fn map_letters<F>(&self, target: &ModeSpace, f: F) -> Result<CliffordWord>
    where
        F: Fn(&ModeVector) -> Result<ModeVector>,
    {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(WordTerm {
                    scalar: t.scalar,
                    letters: t.letters.iter().map(&f).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            space: target.clone(),
            terms,
        })
    }

    fn same_space(&self, other: &CliffordWord) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("words over different spaces".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Vec<WordTermJson> {
        self.terms
            .iter()
            .map(|t| WordTermJson {
                scalar: complex_to_json(t.scalar),
                letters: t.letters.iter().map(ModeVector::to_json).collect(),
            })
            .collect()
    }

    /// Parses a word; `space` is used for the empty word and for a word
    /// without letters.
    pub fn from_json(space: &ModeSpace, terms: &[WordTermJson]) -> Result<Self> {
        let terms = terms
            .iter()
            .map(|t| {
                let letters = t
                    .letters
                    .iter()
                    .map(ModeVector::from_json)
                    .collect::<Result<Vec<_>>>()?;
                if letters.iter().any(|v| v.space() != space) {
                    return Err(Error::SpaceMismatch("letter outside the word's space".into()));
                }
                Ok(WordTerm {
                    scalar: complex_from_json(t.scalar),
                    letters,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            space: space.clone(),
            terms,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct WordTermJson {
    pub scalar: ComplexPair,
    pub letters: Vec<ModeVectorJson>,
}

/// Per-cutoff restricted-group diagnostics of a cutoff-independent family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestrictedReport {
    pub cutoffs: Vec<usize>,
    pub offdiag_hs: Vec<f64>,
    pub j_commutator_hs: Vec<f64>,
    pub verdict: Verdict,
}

/// Evaluates `‖P_L g P_L^⊥‖₂` and `‖[g, J_L]‖₂` for the pair produced by
/// `family` at every cutoff. The verdict is the growth verdict applied to
/// the squared off-diagonal norms.
pub fn restricted_diagnostics<F>(cutoffs: &[usize], family: F) -> Result<RestrictedReport>
where
    F: Fn(usize) -> Result<(OrthogonalMap, Lagrangian)>,
{
    let mut offdiag_hs = Vec::with_capacity(cutoffs.len());
    let mut j_commutator_hs = Vec::with_capacity(cutoffs.len());
    for &n in cutoffs {
        let (g, l) = family(n)?;
        let d = g.diagnostics(&l);
        offdiag_hs.push(d.offdiag_hs);
        j_commutator_hs.push(d.j_commutator_hs);
    }
    let sq: Vec<f64> = offdiag_hs.iter().map(|x| x * x).collect();
    Ok(RestrictedReport {
        cutoffs: cutoffs.to_vec(),
        verdict: growth_verdict(cutoffs, &sq),
        offdiag_hs,
        j_commutator_hs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_mode_vector, random_orthogonal, rng_for};

    #[test]
    fn orthogonal_map_rejects_non_unitary_and_non_real() {
        let s = ModeSpace::odd(1, 1).unwrap();
        let m = CMat::identity(2, 2).scale(2.0);
        assert!(OrthogonalMap::new(s.clone(), m).is_err());
        // A phase on a single mode commutes with nothing antilinear.
        let mut p = CMat::identity(2, 2);
        p[(0, 0)] = C64::new(0.0, 1.0);
        assert!(OrthogonalMap::new(s, p).is_err());
    }

    #[test]
    fn star_reverses_and_conjugates() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let mut rng = rng_for(5, 0);
        let v = random_mode_vector(&s, &mut rng);
        let w = random_mode_vector(&s, &mut rng);
        let z = C64::new(0.3, 0.8);
        let word = CliffordWord::product_of(&s, &[v.clone(), w.clone()]).unwrap().scale(z);
        let st = word.star();
        assert_eq!(st.terms()[0].scalar, z.conj());
        assert_eq!(st.terms()[0].letters, vec![w.alpha(), v.alpha()]);
        assert_eq!(st.star(), word);
        assert_eq!(CliffordWord::unit(&s).star(), CliffordWord::unit(&s));
    }

    #[test]
    fn bogoliubov_identity_is_identity() {
        let s = ModeSpace::even(2, 1).unwrap();
        let v = random_mode_vector(&s, &mut rng_for(1, 1));
        let w = CliffordWord::generator(&v);
        assert_eq!(w.bogoliubov(&OrthogonalMap::identity(&s)).unwrap(), w);
    }

    #[test]
    fn diagnostics_of_identity_vanish() {
        let s = ModeSpace::odd(2, 2).unwrap();
        let l = Lagrangian::standard(&s).unwrap();
        let d = OrthogonalMap::identity(&s).diagnostics(&l);
        assert_eq!(d.offdiag_hs, 0.0);
        assert_eq!(d.j_commutator_hs, 0.0);
        assert!((d.j_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn j_commutator_controls_offdiag_block() {
        // [g, J] = 2i(P g P^⊥ − P^⊥ g P), and the two blocks have equal norm
        // for α-real g, so ‖[g,J]‖₂ = 2√2 ‖P g P^⊥‖₂.
        let s = ModeSpace::odd(1, 3).unwrap();
        let l = Lagrangian::standard(&s).unwrap();
        let g = random_orthogonal(&s, 1.0, &mut rng_for(9, 0));
        let d = g.diagnostics(&l);
        assert!((d.j_commutator_hs - 2.0 * 2f64.sqrt() * d.offdiag_hs).abs() < 1e-10);
    }

    #[test]
    fn word_json_roundtrip() {
        let s = ModeSpace::odd(1, 1).unwrap();
        let v = s.basis_vector(0, 0).unwrap();
        let w = CliffordWord::generator(&v).scale(C64::new(2.0, 0.0));
        let j = serde_json::to_string(&w.to_json()).unwrap();
        let back: Vec<WordTermJson> = serde_json::from_str(&j).unwrap();
        assert_eq!(CliffordWord::from_json(&s, &back).unwrap(), w);
    }
}

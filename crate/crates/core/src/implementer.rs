//! Fock-space implementers of orthogonal transformations.
//!
//! An implementer of `g` is a unitary `U` on `F_L` with
//! `U ρ(v) U* = ρ(gv)` for all `v`. It exists in finite dimensions for every
//! `g` and is unique up to a phase, which is fixed by [`PhaseRule`].

use serde::{Deserialize, Serialize};

use crate::clifford::{CliffordWord, OrthogonalMap, SkewSymmetricMap};
use crate::error::{Error, Result};
use crate::exterior::wedge_power;
use crate::fock::FockSpace;
use crate::json::matrix_to_json;
use crate::lagrangian::Lagrangian;
use crate::linalg::{argmax_abs, expm, hermitian_eigen, unitarity_residual};
use crate::modespace::{ModeSpace, ModeVector};
use crate::{CMat, CVec, C64};

/// Tolerance on `verify_implements` for constructed implementers.
pub const IMPLEMENT_TOL: f64 = 1e-8;
/// Threshold below which an overlap counts as zero in the phase rule.
pub const PHASE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseRule {
    /// `⟨Ω, UΩ⟩` is real and positive.
    #[serde(rename = "vacuum-positive")]
    VacuumPositive,
    /// `⟨Ω, UΩ⟩` vanishes; the first coordinate of `UΩ` above the threshold
    /// (in graded-lexicographic order) is real and positive.
    #[serde(rename = "first-coord")]
    FirstCoord,
}

#[derive(Clone, Debug)]
pub struct Implementer {
    fock: FockSpace,
    matrix: CMat,
    g: OrthogonalMap,
    phase_rule: PhaseRule,
    residual: f64,
}

impl Implementer {
    pub fn fock(&self) -> &FockSpace {
        &self.fock
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn implements(&self) -> &OrthogonalMap {
        &self.g
    }

    pub fn phase_rule(&self) -> PhaseRule {
        self.phase_rule
    }

    /// `verify_implements` residual recorded at construction.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// The implementer `e^{iφ} U` of the same map.
    pub fn with_phase(&self, phi: f64) -> Implementer {
        Implementer {
            matrix: &self.matrix * C64::from_polar(1.0, phi),
            ..self.clone()
        }
    }

    /// `self · other`, implementing `g_self ∘ g_other`.
    pub fn compose(&self, other: &Implementer) -> Result<Implementer> {
        if self.fock != other.fock {
            return Err(Error::SpaceMismatch("implementers on different Fock spaces".into()));
        }
        let g = self.g.compose(&other.g)?;
        let matrix = &self.matrix * &other.matrix;
        let residual = verify_implements(&self.fock, &matrix, g.matrix());
        Ok(Implementer {
            fock: self.fock.clone(),
            g,
            phase_rule: phase_rule_of(&matrix),
            matrix,
            residual,
        })
    }

    pub fn adjoint(&self) -> Implementer {
        let matrix = self.matrix.adjoint();
        Implementer {
            fock: self.fock.clone(),
            g: self.g.inverse(),
            phase_rule: phase_rule_of(&matrix),
            matrix,
            residual: self.residual,
        }
    }

    pub fn identity(fock: &FockSpace, space: &ModeSpace) -> Implementer {
        Implementer::from_parts(fock, OrthogonalMap::identity(space), CMat::identity(fock.dim(), fock.dim()))
    }

    pub(crate) fn from_parts(fock: &FockSpace, g: OrthogonalMap, matrix: CMat) -> Implementer {
        let residual = verify_implements(fock, &matrix, g.matrix());
        Implementer {
            fock: fock.clone(),
            phase_rule: phase_rule_of(&matrix),
            g,
            matrix,
            residual,
        }
    }

    pub fn to_json(&self) -> ImplementerJson {
        ImplementerJson {
            g: matrix_to_json(self.g.matrix()),
            u: matrix_to_json(&self.matrix),
            residual: self.residual,
            phase_rule: self.phase_rule,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImplementerJson {
    pub g: Vec<Vec<crate::json::ComplexPair>>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<crate::json::ComplexPair>>,
    pub residual: f64,
    pub phase_rule: PhaseRule,
}

fn phase_rule_of(u: &CMat) -> PhaseRule {
    if u[(0, 0)].norm() > PHASE_TOL {
        PhaseRule::VacuumPositive
    } else {
        PhaseRule::FirstCoord
    }
}

/// Multiplies `u` by the phase that puts it in normal form.
fn normalize_phase(u: &mut CMat) -> PhaseRule {
    let rule = phase_rule_of(u);
    let z = match rule {
        PhaseRule::VacuumPositive => u[(0, 0)],
        PhaseRule::FirstCoord => u
            .column(0)
            .iter()
            .cloned()
            .find(|z| z.norm() > PHASE_TOL)
            .unwrap_or(C64::new(1.0, 0.0)),
    };
    let ph = z.conj() / z.norm();
    *u *= ph;
    rule
}

/// `max_k ‖ρ(g e_k) U − U ρ(e_k)‖₂` over the coordinate basis of `V`.
///
/// For unitary `U` this is the Frobenius norm of `ρ(g e_k) − U ρ(e_k) U*`,
/// an upper bound for its operator norm.
pub fn verify_implements(fock: &FockSpace, u: &CMat, g: &CMat) -> f64 {
    let n = fock.one_particle_dim();
    let mut worst: f64 = 0.0;
    let mut e = CVec::zeros(n);
    for k in 0..n {
        e[k] = C64::new(1.0, 0.0);
        let ge: CVec = g.column(k).into_owned();
        let lhs = fock.rho_columns(&ge, u);
        // U ρ(e) = (ρ(e)* U*)* = (ρ(αe) U*)*.
        let ae = fock.lagrangian().real_structure().apply(&e);
        let rhs = fock.rho_columns(&ae, &u.adjoint()).adjoint();
        worst = worst.max((lhs - rhs).norm());
        e[k] = C64::new(0.0, 0.0);
    }
    worst
}

fn check_space(fock: &FockSpace, g: &OrthogonalMap) -> Result<()> {
    if g.space().dim() != fock.one_particle_dim()
        || g.space().real_structure() != fock.lagrangian().real_structure()
    {
        return Err(Error::SpaceMismatch("orthogonal map and Fock space disagree".into()));
    }
    Ok(())
}

/// `Λ_T` for a unitary `T` of `L` in frame coordinates: it acts on monomials
/// by `Λ(v_1 ∧ ⋯ ∧ v_k) = Tv_1 ∧ ⋯ ∧ Tv_k`, fixes `Ω`, and implements
/// `embed_unitary(L, T)`.
pub fn section_ul(fock: &FockSpace, t: &CMat) -> Result<Implementer> {
    let g = fock.lagrangian().embed_unitary(t)?;
    let matrix = wedge_power(fock.basis(), t);
    let residual = verify_implements(fock, &matrix, g.matrix());
    Ok(Implementer {
        fock: fock.clone(),
        g,
        matrix,
        phase_rule: PhaseRule::VacuumPositive,
        residual,
    })
}

/// Implementer of an arbitrary orthogonal map.
///
/// The transformed vacuum `Ω_g` is the ground state of
/// `H = Σ_i ρ(g αl_i)* ρ(g αl_i)`, whose kernel is the line annihilated by
/// every `ρ(gw)`, `w ∈ α(L)`. Monomials are then mapped by
/// `U(l_i ∧ x) = 2^{-1/2} ρ(g l_i) U x` with `i` the smallest index, and the
/// phase is fixed by [`PhaseRule`].
pub fn implement_general(g: &OrthogonalMap, fock: &FockSpace) -> Result<Implementer> {
    check_space(fock, g)?;
    let dim = fock.dim();
    let m = fock.m();
    let gm = g.matrix();
    let galpha = gm * fock.alpha_frame();
    let mut h = CMat::zeros(dim, dim);
    for i in 0..m {
        let r = fock.rho_matrix(&galpha.column(i).into_owned());
        h += r.adjoint() * r;
    }
    let (values, vectors) = hermitian_eigen(&h);
    let ground = values[0];
    let gap = values.get(1).copied().unwrap_or(f64::INFINITY);
    if ground.abs() > 1e-8 || gap < 1e-2 {
        return Err(Error::Degenerate(format!(
            "vacuum solve is ill-conditioned: lowest eigenvalues {ground:.3e}, {gap:.3e}"
        )));
    }
    let gl = gm * fock.frame();
    let mut u = CMat::zeros(dim, dim);
    u.set_column(0, &vectors.column(0));
    let basis = fock.basis();
    let scale = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    for col in 1..dim {
        let mask = basis.mask(col);
        let i = mask.trailing_zeros() as usize;
        let rest = basis.position(mask & !(1 << i));
        let prev: CVec = u.column(rest).into_owned();
        let next = fock.rho(&gl.column(i).into_owned(), &prev) * scale;
        u.set_column(col, &next);
    }
    let phase_rule = normalize_phase(&mut u);
    let uni = unitarity_residual(&u);
    if uni > 1e-9 {
        return Err(Error::invariant("implementer is not unitary", uni, 1e-9));
    }
    let residual = verify_implements(fock, &u, gm);
    if residual > IMPLEMENT_TOL {
        return Err(Error::invariant("implementer check", residual, IMPLEMENT_TOL));
    }
    Ok(Implementer {
        fock: fock.clone(),
        g: g.clone(),
        matrix: u,
        phase_rule,
        residual,
    })
}

/// Second route for `g = exp(X)`: the unitary `exp(X̂)` of the quadratic
/// second quantization, brought to the same phase normal form.
pub fn implement_exponential(x: &SkewSymmetricMap, fock: &FockSpace) -> Result<Implementer> {
    let g = x.exp();
    check_space(fock, &g)?;
    let xh = fock.second_quantize(x.matrix())?.matrix();
    let mut u = expm(&xh);
    let phase_rule = normalize_phase(&mut u);
    let residual = verify_implements(fock, &u, g.matrix());
    Ok(Implementer {
        fock: fock.clone(),
        g,
        matrix: u,
        phase_rule,
        residual,
    })
}

/// Distance of `U_1 U_2*` from the scalars, with the fitted scalar.
pub fn scalar_uniqueness(u1: &CMat, u2: &CMat) -> (C64, f64) {
    crate::linalg::scalar_residual(&(u1 * u2.adjoint()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CocycleValue {
    pub value: C64,
    /// ‖U_g U_h − c U_{gh}‖₂ after fitting.
    pub fit_residual: f64,
}

impl CocycleValue {
    pub fn angle(&self) -> f64 {
        self.value.arg()
    }
}

/// `c(g, h)` with `U_g U_h = c(g, h) U_{gh}`, where every `U` comes from
/// [`implement_general`]. The scalar is read off the largest entry of
/// `U_{gh}`.
pub fn cocycle(g: &OrthogonalMap, h: &OrthogonalMap, fock: &FockSpace) -> Result<CocycleValue> {
    let ug = implement_general(g, fock)?;
    let uh = implement_general(h, fock)?;
    let ugh = implement_general(&g.compose(h)?, fock)?;
    cocycle_of(ug.matrix(), uh.matrix(), ugh.matrix())
}

/// Ratio `c` with `a b = c · ab` for given matrices.
pub fn cocycle_of(a: &CMat, b: &CMat, ab: &CMat) -> Result<CocycleValue> {
    let prod = a * b;
    let (i, j) = argmax_abs(ab);
    let den = ab[(i, j)];
    if den.norm() < 1e-8 {
        return Err(Error::Degenerate("cocycle ratio has a vanishing denominator".into()));
    }
    let value = prod[(i, j)] / den;
    let fit_residual = (&prod - ab * value).norm();
    if (value.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::invariant("cocycle value is not unimodular", (value.norm() - 1.0).abs(), 1e-8));
    }
    Ok(CocycleValue { value, fit_residual })
}

/// An orthogonal map `ν: V → V'` between mode spaces: unitary and
/// `α' ν = ν α`.
#[derive(Clone, Debug)]
pub struct Transport {
    source: ModeSpace,
    target: ModeSpace,
    matrix: CMat,
}

impl Transport {
    pub fn new(source: &ModeSpace, target: &ModeSpace, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != target.dim() || matrix.ncols() != source.dim() {
            return Err(Error::Parameter("transport matrix has the wrong shape".into()));
        }
        let u = unitarity_residual(&matrix);
        if source.dim() != target.dim() || u > 1e-10 {
            return Err(Error::invariant("transport is not unitary", u, 1e-10));
        }
        let a = source.real_structure().intertwining_norm(target.real_structure(), &matrix);
        if a > 1e-10 {
            return Err(Error::invariant("transport does not intertwine real structures", a, 1e-10));
        }
        Ok(Self {
            source: source.clone(),
            target: target.clone(),
            matrix,
        })
    }

    /// The map sending the standard real basis of `source` to that of
    /// `target`, column by column.
    pub fn canonical(source: &ModeSpace, target: &ModeSpace) -> Result<Self> {
        if source.dim() != target.dim() {
            return Err(Error::SpaceMismatch("transport needs equal dimensions".into()));
        }
        let r = source.real_structure().real_basis();
        let rt = target.real_structure().real_basis();
        Self::new(source, target, rt * r.adjoint())
    }

    /// `h ∘ self` for an orthogonal map of the target.
    pub fn then(&self, h: &OrthogonalMap) -> Result<Self> {
        if h.space() != &self.target {
            return Err(Error::SpaceMismatch("map does not act on the transport target".into()));
        }
        Ok(Self {
            matrix: h.matrix() * &self.matrix,
            ..self.clone()
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            source: self.target.clone(),
            target: self.source.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn source(&self) -> &ModeSpace {
        &self.source
    }

    pub fn target(&self) -> &ModeSpace {
        &self.target
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn apply(&self, v: &ModeVector) -> Result<ModeVector> {
        if v.space() != &self.source {
            return Err(Error::SpaceMismatch("vector outside the transport source".into()));
        }
        self.target.vector(&self.matrix * v.coeffs())
    }

    /// The image Lagrangian `νL` with frame `ν l_i`.
    pub fn push_lagrangian(&self, l: &Lagrangian) -> Result<Lagrangian> {
        let frame = &self.matrix * l.frame();
        Lagrangian::new(crate::lagrangian::Subspace::new(&self.target, frame)?)
    }

    /// `Cl(ν)`: relabels every letter `f(v)` as `f(νv)`.
    pub fn transport_clifford(&self, w: &CliffordWord) -> Result<CliffordWord> {
        if w.space() != &self.source {
            return Err(Error::SpaceMismatch("word outside the transport source".into()));
        }
        w.map_letters(&self.target, |v| self.apply(v))
    }
}

/// Matrix of `Λ_ν : F_L → F_{L'}` for a map `ν` (as a matrix) with
/// `νL = L'`: the wedge power of `Q'* ν Q`.
pub fn induced_fock_map(nu: &CMat, source: &FockSpace, target: &FockSpace) -> Result<CMat> {
    if source.m() != target.m() {
        return Err(Error::SpaceMismatch("Fock spaces of different rank".into()));
    }
    let image = nu * source.frame();
    let residual = target.lagrangian().subspace().contains_residual(&image);
    if residual > 1e-9 {
        return Err(Error::Membership { residual });
    }
    let m = target.frame().adjoint() * image;
    Ok(wedge_power(source.basis(), &m))
}

/// `Λ_ν x` for a transport `ν` and a Fock space over `νL`.
pub fn transport_fock(nu: &Transport, source: &FockSpace, target: &FockSpace, x: &CVec) -> Result<CVec> {
    Ok(induced_fock_map(nu.matrix(), source, target)? * x)
}

/// The unitary `T = Λ_{g2} U Λ_{g1}^{-1} : F_{L1} → F_{L2}` built from an
/// implementer `U` of `g2⁻¹ g1` on `F_L`, where `L_i = g_i L`.
pub fn equivalence_from_implementer(
    u: &Implementer,
    g1: &OrthogonalMap,
    g2: &OrthogonalMap,
    f1: &FockSpace,
    f2: &FockSpace,
) -> Result<CMat> {
    let expected = g2.inverse().compose(g1)?;
    let r = verify_implements(u.fock(), u.matrix(), expected.matrix());
    if r > IMPLEMENT_TOL {
        return Err(Error::invariant("U does not implement g2⁻¹g1", r, IMPLEMENT_TOL));
    }
    let lam1 = induced_fock_map(g1.matrix(), u.fock(), f1)?;
    let lam2 = induced_fock_map(g2.matrix(), u.fock(), f2)?;
    Ok(lam2 * u.matrix() * lam1.adjoint())
}

/// `max_k ‖ρ_{2}(e_k) T − T ρ_{1}(e_k)‖₂` over the coordinate basis.
pub fn intertwining_residual(f1: &FockSpace, f2: &FockSpace, t: &CMat) -> f64 {
    let n = f1.one_particle_dim();
    let mut worst: f64 = 0.0;
    let mut e = CVec::zeros(n);
    for k in 0..n {
        e[k] = C64::new(1.0, 0.0);
        let lhs = f2.rho_columns(&e, t);
        let ae = f1.lagrangian().real_structure().apply(&e);
        let rhs = f1.rho_columns(&ae, &t.adjoint()).adjoint();
        worst = worst.max((lhs - rhs).norm());
        e[k] = C64::new(0.0, 0.0);
    }
    worst
}

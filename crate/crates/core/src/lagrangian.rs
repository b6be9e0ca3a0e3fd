//! Lagrangian and sublagrangian subspaces.
//!
//! A subspace is stored by an orthonormal frame together with the real
//! structure of the ambient coordinates. Most subspaces live in a
//! [`ModeSpace`], but the Dirac module builds them in eigenfunction
//! coordinates with their own permutation, so only the real structure is
//! required.

use serde::Serialize;

use crate::clifford::OrthogonalMap;
use crate::error::{Error, Result};
use crate::linalg::{basis_extend, columns_to_matrix, orthonormalize_columns, unitarity_residual};
use crate::modespace::{ModeSpace, Parity, RealStructureMap};
use crate::{CMat, CVec, C64};

/// Tolerance for frame orthonormality and the projector identities.
pub const FRAME_TOL: f64 = 1e-10;
/// Relative rank threshold when spanning or completing subspaces.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Subspace {
    alpha: RealStructureMap,
    space: Option<ModeSpace>,
    frame: CMat,
}

impl Subspace {
    /// A subspace of a mode space from an orthonormal frame.
    pub fn new(space: &ModeSpace, frame: CMat) -> Result<Self> {
        let mut s = Self::in_coordinates(space.real_structure().clone(), frame)?;
        s.space = Some(space.clone());
        Ok(s)
    }

    /// A subspace of coordinate space with real structure `alpha`.
    pub fn in_coordinates(alpha: RealStructureMap, frame: CMat) -> Result<Self> {
        if frame.nrows() != alpha.dim() {
            return Err(Error::Parameter(format!(
                "frame has {} rows, ambient dimension is {}",
                frame.nrows(),
                alpha.dim()
            )));
        }
        let r = unitarity_residual(&frame);
        if r > FRAME_TOL {
            return Err(Error::invariant("frame is not orthonormal", r, FRAME_TOL));
        }
        Ok(Self {
            alpha,
            space: None,
            frame,
        })
    }

    /// The span of arbitrary columns, orthonormalized.
    pub fn span(space: &ModeSpace, cols: &CMat) -> Result<Self> {
        Self::new(space, orthonormalize_columns(cols, RANK_TOL))
    }

    pub fn span_in(alpha: RealStructureMap, cols: &CMat) -> Result<Self> {
        Self::in_coordinates(alpha, orthonormalize_columns(cols, RANK_TOL))
    }

    pub fn zero(space: &ModeSpace) -> Self {
        Self {
            alpha: space.real_structure().clone(),
            space: Some(space.clone()),
            frame: CMat::zeros(space.dim(), 0),
        }
    }

    pub fn frame(&self) -> &CMat {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn real_structure(&self) -> &RealStructureMap {
        &self.alpha
    }

    pub fn space(&self) -> Option<&ModeSpace> {
        self.space.as_ref()
    }

    pub fn projector(&self) -> CMat {
        &self.frame * self.frame.adjoint()
    }

    pub fn alpha_image(&self) -> Subspace {
        Self {
            alpha: self.alpha.clone(),
            space: self.space.clone(),
            frame: self.alpha.apply_columns(&self.frame),
        }
    }

    /// `‖v − P v‖` for a coordinate vector.
    pub fn membership_residual(&self, v: &CVec) -> f64 {
        (v - &self.frame * (self.frame.adjoint() * v)).norm()
    }

    /// Largest membership residual over the columns of `m`.
    pub fn contains_residual(&self, m: &CMat) -> f64 {
        let r = m - &self.frame * (self.frame.adjoint() * m);
        r.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm of the pairing matrix `B(q_a, q_b)` of the frame.
    pub fn isotropy_residual(&self) -> f64 {
        self.alpha.pairing_matrix(&self.frame).norm()
    }

    fn same_ambient(&self, other: &Subspace) -> Result<()> {
        if self.alpha != other.alpha {
            return Err(Error::SpaceMismatch("subspaces of different ambient spaces".into()));
        }
        Ok(())
    }
}

/// Result of [`is_lagrangian`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagrangianCheck {
    pub is_lagrangian: bool,
    /// ‖B(q_a, q_b)‖₂ over frame columns; zero iff `S ⊥ α(S)`.
    pub isotropy: f64,
    /// `dim S − dim V / 2` (as a signed count).
    pub dim_defect: i64,
    /// ‖P + αPα − 1‖₂.
    pub splitting: f64,
}

pub fn is_lagrangian(s: &Subspace) -> LagrangianCheck {
    let n = s.ambient_dim();
    let p = s.projector();
    let splitting = (&p + s.alpha.conjugate_operator(&p) - CMat::identity(n, n)).norm();
    let isotropy = s.isotropy_residual();
    let dim_defect = 2 * s.dim() as i64 - n as i64;
    let dim_defect = if dim_defect % 2 == 0 { dim_defect / 2 } else { dim_defect };
    LagrangianCheck {
        is_lagrangian: dim_defect == 0 && isotropy <= FRAME_TOL && splitting <= FRAME_TOL,
        isotropy,
        dim_defect,
        splitting,
    }
}

/// A Lagrangian `L`: `V = L ⊕ α(L)` orthogonally.
#[derive(Clone, Debug)]
pub struct Lagrangian {
    sub: Subspace,
    projector: CMat,
}

impl Lagrangian {
    pub fn new(sub: Subspace) -> Result<Self> {
        let check = is_lagrangian(&sub);
        if !check.is_lagrangian {
            let residual = check.isotropy.max(check.splitting).max(check.dim_defect.abs() as f64);
            return Err(Error::invariant("subspace is not Lagrangian", residual, FRAME_TOL));
        }
        let projector = sub.projector();
        Ok(Self { sub, projector })
    }

    /// Standard Lagrangian of a mode space, chosen by parity.
    pub fn standard(space: &ModeSpace) -> Result<Self> {
        match space.parity() {
            Parity::Odd => Self::standard_odd(space),
            Parity::Even => Self::standard_even(space),
        }
    }

    /// `span{ξ_{n,j} : n ≥ 0}`.
    pub fn standard_odd(space: &ModeSpace) -> Result<Self> {
        if space.parity() != Parity::Odd {
            return Err(Error::Parameter("standard odd Lagrangian needs an odd space".into()));
        }
        let cols: Vec<usize> = (0..space.dim()).filter(|&i| space.index()[i].n >= 0).collect();
        Self::new(Subspace::new(space, coordinate_frame(space.dim(), &cols))?)
    }

    /// Modes `n ≥ 1` together with the mode-zero vectors `e_j + i e_{j+1}`
    /// (`j` even, normalized).
    pub fn standard_even(space: &ModeSpace) -> Result<Self> {
        if space.parity() != Parity::Even {
            return Err(Error::Parameter("standard even Lagrangian needs an even space".into()));
        }
        if !space.d().is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "standard even Lagrangian needs even d (got {})",
                space.d()
            )));
        }
        let d = space.d();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut cols: Vec<CVec> = Vec::new();
        for j in (0..d).step_by(2) {
            let mut v = CVec::zeros(space.dim());
            v[space.position(0, j).expect("mode 0 present")] = C64::new(h, 0.0);
            v[space.position(0, j + 1).expect("mode 0 present")] = C64::new(0.0, h);
            cols.push(v);
        }
        for (i, ix) in space.index().iter().enumerate() {
            if ix.n >= 1 {
                let mut v = CVec::zeros(space.dim());
                v[i] = C64::new(1.0, 0.0);
                cols.push(v);
            }
        }
        Self::new(Subspace::new(space, columns_to_matrix(space.dim(), &cols))?)
    }

    pub fn subspace(&self) -> &Subspace {
        &self.sub
    }

    /// Ordered orthonormal basis `l_1, …, l_m` as frame columns.
    pub fn frame(&self) -> &CMat {
        &self.sub.frame
    }

    pub fn dim(&self) -> usize {
        self.sub.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.sub.ambient_dim()
    }

    pub fn real_structure(&self) -> &RealStructureMap {
        &self.sub.alpha
    }

    pub fn space(&self) -> Option<&ModeSpace> {
        self.sub.space()
    }

    pub fn projector(&self) -> &CMat {
        &self.projector
    }

    /// `P_L^⊥ = 1 − P_L`, which equals `α P_L α` for a Lagrangian.
    pub fn complement_projector(&self) -> CMat {
        let n = self.ambient_dim();
        CMat::identity(n, n) - &self.projector
    }

    /// `J_L = i(P_L − P_L^⊥)`.
    pub fn complex_structure(&self) -> CMat {
        let n = self.ambient_dim();
        (self.projector.scale(2.0) - CMat::identity(n, n)) * C64::new(0.0, 1.0)
    }

    pub fn alpha_image(&self) -> Lagrangian {
        let sub = self.sub.alpha_image();
        let projector = sub.projector();
        Self { sub, projector }
    }

    /// The image `gL`, for a unitary `g` commuting with α.
    pub fn transform(&self, g: &CMat) -> Result<Lagrangian> {
        let frame = g * self.frame();
        let mut sub = Subspace::in_coordinates(self.sub.alpha.clone(), frame)?;
        sub.space = self.sub.space.clone();
        Lagrangian::new(sub)
    }

    /// ‖P_{L1} − P_{L2}‖₂.
    pub fn hs_distance(&self, other: &Lagrangian) -> Result<f64> {
        self.sub.same_ambient(&other.sub)?;
        // ‖P1 − P2‖₂² = k1 + k2 − 2‖Q1* Q2‖₂², evaluated on frames.
        let overlap = (self.frame().adjoint() * other.frame()).norm_squared();
        let sq = self.dim() as f64 + other.dim() as f64 - 2.0 * overlap;
        Ok(sq.max(0.0).sqrt())
    }

    /// ‖P_{L1}^⊥ P_{L2}‖₂², which is `k2 − ‖Q1* Q2‖₂²`.
    pub fn offdiag_hs_sq(&self, other: &Lagrangian) -> Result<f64> {
        offdiag_hs_sq(&self.sub, &other.sub)
    }

    /// The orthogonal map acting by `T` on `L` (in frame coordinates) and by
    /// `αTα` on `α(L)`.
    pub fn embed_unitary(&self, t: &CMat) -> Result<OrthogonalMap> {
        let space = self
            .space()
            .ok_or_else(|| Error::Parameter("embedding needs a Lagrangian in a mode space".into()))?;
        let m = self.dim();
        if t.nrows() != m || t.ncols() != m {
            return Err(Error::Parameter(format!("T must be {m}×{m}")));
        }
        let r = unitarity_residual(t);
        if r > FRAME_TOL {
            return Err(Error::invariant("T is not unitary", r, FRAME_TOL));
        }
        let q = self.frame();
        let aq = self.real_structure().apply_columns(q);
        let g = q * t * q.adjoint() + &aq * t.map(|z| z.conj()) * aq.adjoint();
        OrthogonalMap::new(space.clone(), g)
    }
}

/// ‖P_{S1}^⊥ P_{S2}‖₂² for arbitrary subspaces of the same ambient space.
pub fn offdiag_hs_sq(s1: &Subspace, s2: &Subspace) -> Result<f64> {
    s1.same_ambient(s2)?;
    let overlap = (s1.frame.adjoint() * &s2.frame).norm_squared();
    Ok((s2.dim() as f64 - overlap).max(0.0))
}

fn coordinate_frame(dim: usize, cols: &[usize]) -> CMat {
    let mut m = CMat::zeros(dim, cols.len());
    for (k, &i) in cols.iter().enumerate() {
        m[(i, k)] = C64::new(1.0, 0.0);
    }
    m
}

/// An isotropic subspace `S` (so `S ⊥ α(S)`) whose double `S ⊕ α(S)` has
/// even codimension.
#[derive(Clone, Debug)]
pub struct Sublagrangian {
    sub: Subspace,
    codim: usize,
}

impl Sublagrangian {
    pub fn new(sub: Subspace) -> Result<Self> {
        let iso = sub.isotropy_residual();
        if iso > FRAME_TOL {
            return Err(Error::invariant("subspace is not isotropic", iso, FRAME_TOL));
        }
        let n = sub.ambient_dim();
        let codim = n - 2 * sub.dim();
        if !codim.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "codimension {codim} of S ⊕ α(S) is odd"
            )));
        }
        Ok(Self { sub, codim })
    }

    pub fn subspace(&self) -> &Subspace {
        &self.sub
    }

    pub fn codim(&self) -> usize {
        self.codim
    }

    /// Extends `S` to a Lagrangian.
    ///
    /// Let `W` be the complement of `S ⊕ α(S)`. Coordinate vectors are
    /// projected to `W` in index order; each projection `x` contributes the
    /// α-real vectors `x + αx` and `i(x − αx)`, which are orthonormalized
    /// over the reals until `W` is exhausted. Consecutive real vectors
    /// `r, r'` are then combined into `(r + i r')/√2`. The resulting `K` is
    /// isotropic and `S ⊕ K` is a Lagrangian. For `S = 0` this reproduces the
    /// standard Lagrangian of either parity.
    pub fn complete(&self) -> Result<Lagrangian> {
        let n = self.sub.ambient_dim();
        let alpha = &self.sub.alpha;
        let q = &self.sub.frame;
        let aq = alpha.apply_columns(q);
        let pw = CMat::identity(n, n) - q * q.adjoint() - &aq * aq.adjoint();
        let mut real_basis: Vec<CVec> = Vec::with_capacity(self.codim);
        let i = C64::new(0.0, 1.0);
        for k in 0..n {
            if real_basis.len() >= self.codim {
                break;
            }
            let x: CVec = pw.column(k).into_owned();
            if x.norm() <= RANK_TOL {
                continue;
            }
            let ax = alpha.apply(&x);
            let pair = columns_to_matrix(n, &[&x + &ax, (&x - &ax) * i]);
            basis_extend(&mut real_basis, &pair, RANK_TOL);
        }
        if real_basis.len() != self.codim {
            return Err(Error::Degenerate(format!(
                "complement search found {} real directions, expected {}",
                real_basis.len(),
                self.codim
            )));
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut cols: Vec<CVec> = q.column_iter().map(|c| c.into_owned()).collect();
        for pair in real_basis.chunks(2) {
            cols.push((&pair[0] + &pair[1] * i) * C64::new(h, 0.0));
        }
        let frame = columns_to_matrix(n, &cols);
        let mut sub = Subspace::in_coordinates(alpha.clone(), frame)?;
        sub.space = self.sub.space.clone();
        Lagrangian::new(sub)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Bounded,
    Divergent,
    Inconclusive,
}

/// Values below this are treated as zero by [`growth_verdict`].
pub const GROWTH_ZERO: f64 = 1e-9;

/// Bounded/divergent verdict for a sequence of squared HS norms evaluated at
/// increasing cutoffs.
///
/// Linear growth in the cutoff is declared divergent. The test compares the
/// last value with the one at the middle cutoff: the sequence is divergent
/// when the ratio exceeds halfway between no growth and linear growth,
/// `1 + (N_last/N_mid − 1)/2`. Fewer than three cutoffs are inconclusive.
pub fn growth_verdict(cutoffs: &[usize], values: &[f64]) -> Verdict {
    if cutoffs.len() < 3 || cutoffs.len() != values.len() {
        return Verdict::Inconclusive;
    }
    let mid = cutoffs.len() / 2;
    let last = cutoffs.len() - 1;
    let (v_mid, v_last) = (values[mid], values[last]);
    if v_last <= GROWTH_ZERO {
        return Verdict::Bounded;
    }
    if v_mid <= GROWTH_ZERO {
        return Verdict::Divergent;
    }
    let linear = cutoffs[last] as f64 / cutoffs[mid] as f64;
    if v_last / v_mid > 1.0 + 0.5 * (linear - 1.0) {
        Verdict::Divergent
    } else {
        Verdict::Bounded
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub cutoffs: Vec<usize>,
    pub hs_sq: Vec<f64>,
    pub verdict: Verdict,
}

/// ‖P_{L1}^⊥ P_{L2}‖₂² over a cutoff sequence, where `family(N)` produces
/// the pair `(L1, L2)` at cutoff `N` by a cutoff-independent rule.
pub fn equivalence_diagnostic<F>(cutoffs: &[usize], family: F) -> Result<DiagnosticReport>
where
    F: Fn(usize) -> Result<(Lagrangian, Lagrangian)>,
{
    let hs_sq = cutoffs
        .iter()
        .map(|&n| {
            let (l1, l2) = family(n)?;
            l1.offdiag_hs_sq(&l2)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticReport {
        cutoffs: cutoffs.to_vec(),
        verdict: growth_verdict(cutoffs, &hs_sq),
        hs_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator;
    use crate::sampling::{random_orthogonal, random_unitary, rng_for};
    use proptest::prelude::*;

    fn projector_identities(l: &Lagrangian) -> f64 {
        let p = l.projector();
        let n = l.ambient_dim();
        let idem = (p * p - p).norm();
        let herm = (p.adjoint() - p).norm();
        let split = (p + l.real_structure().conjugate_operator(p) - CMat::identity(n, n)).norm();
        idem.max(herm).max(split)
    }

    #[test]
    fn standard_odd_small() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let l = Lagrangian::standard_odd(&s).unwrap();
        assert_eq!(l.dim(), 2);
        let p0 = s.position(0, 0).unwrap();
        let p1 = s.position(1, 0).unwrap();
        assert_eq!(l.frame()[(p0, 0)], C64::new(1.0, 0.0));
        assert_eq!(l.frame()[(p1, 1)], C64::new(1.0, 0.0));
        assert!(is_lagrangian(l.subspace()).is_lagrangian);
        assert!(projector_identities(&l) < 1e-12);
        assert!(Lagrangian::standard_odd(&ModeSpace::even(2, 1).unwrap()).is_err());
    }

    #[test]
    fn standard_even_contains_l0_vector() {
        let s = ModeSpace::even(2, 1).unwrap();
        let l = Lagrangian::standard_even(&s).unwrap();
        assert_eq!(l.dim(), 1 + 2);
        let mut v = CVec::zeros(s.dim());
        v[s.position(0, 0).unwrap()] = C64::new(1.0, 0.0);
        v[s.position(0, 1).unwrap()] = C64::new(0.0, 1.0);
        assert!(l.subspace().membership_residual(&v) < 1e-14);
        assert!(projector_identities(&l) < 1e-12);
        assert!(Lagrangian::standard_even(&ModeSpace::even(3, 1).unwrap()).is_err());
    }

    #[test]
    fn dimension_counts() {
        for n in 1..4 {
            for d in [2, 4] {
                assert_eq!(Lagrangian::standard_odd(&ModeSpace::odd(d, n).unwrap()).unwrap().dim(), n * d);
                assert_eq!(
                    Lagrangian::standard_even(&ModeSpace::even(d, n).unwrap()).unwrap().dim(),
                    d / 2 + n * d
                );
            }
        }
    }

    #[test]
    fn non_lagrangian_subspaces() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let full = Subspace::new(&s, CMat::identity(4, 4)).unwrap();
        assert!(!is_lagrangian(&full).is_lagrangian);
        let mut cols = CMat::zeros(4, 2);
        cols[(s.position(0, 0).unwrap(), 0)] = C64::new(1.0, 0.0);
        cols[(s.position(-1, 0).unwrap(), 1)] = C64::new(1.0, 0.0);
        let bad = Subspace::new(&s, cols).unwrap();
        let check = is_lagrangian(&bad);
        assert!(!check.is_lagrangian);
        assert!((check.isotropy - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn hs_distance_cases() {
        let s = ModeSpace::odd(2, 2).unwrap();
        let l = Lagrangian::standard(&s).unwrap();
        assert!(l.hs_distance(&l).unwrap() < 1e-7);
        let d = l.hs_distance(&l.alpha_image()).unwrap();
        assert!((d - (s.dim() as f64).sqrt()).abs() < 1e-12);
        let g = random_orthogonal(&s, 1.5, &mut rng_for(4, 0));
        let gl = l.transform(g.matrix()).unwrap();
        let direct = (l.projector() - gl.projector()).norm();
        let identity = commutator(l.projector(), g.matrix()).norm();
        assert!((l.hs_distance(&gl).unwrap() - direct).abs() < 1e-7);
        assert!((direct - identity).abs() < 1e-10);
    }

    #[test]
    fn complete_zero_gives_standard() {
        for s in [ModeSpace::odd(2, 2).unwrap(), ModeSpace::even(2, 2).unwrap(), ModeSpace::even(4, 1).unwrap()] {
            let sub = Sublagrangian::new(Subspace::zero(&s)).unwrap();
            let l = sub.complete().unwrap();
            let std = Lagrangian::standard(&s).unwrap();
            assert!((l.projector() - std.projector()).norm() < 1e-12, "{s:?}");
        }
    }

    #[test]
    fn complete_lagrangian_is_itself() {
        let s = ModeSpace::odd(1, 3).unwrap();
        let l = Lagrangian::standard(&s).unwrap();
        let sub = Sublagrangian::new(l.subspace().clone()).unwrap();
        assert_eq!(sub.codim(), 0);
        assert!((sub.complete().unwrap().projector() - l.projector()).norm() < 1e-14);
    }

    #[test]
    fn completion_rejects_non_isotropic() {
        let s = ModeSpace::odd(1, 1).unwrap();
        let v = CMat::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(Sublagrangian::new(Subspace::span(&s, &v).unwrap()).is_err());
    }

    #[test]
    fn embed_unitary_cases() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let l = Lagrangian::standard(&s).unwrap();
        let id = l.embed_unitary(&CMat::identity(2, 2)).unwrap();
        assert!((id.matrix() - CMat::identity(4, 4)).norm() < 1e-15);
        let theta = 0.4;
        let mut t = CMat::identity(2, 2);
        t[(0, 0)] = C64::from_polar(1.0, theta);
        let g = l.embed_unitary(&t).unwrap();
        let diag: Vec<C64> = (0..4).map(|i| g.matrix()[(i, i)]).collect();
        assert!(diag.iter().any(|z| (z - C64::from_polar(1.0, theta)).norm() < 1e-14));
        assert!(diag.iter().any(|z| (z - C64::from_polar(1.0, -theta)).norm() < 1e-14));
        assert!(commutator(g.matrix(), &l.complex_structure()).norm() < 1e-14);
        let big = CMat::identity(2, 2).scale(1.1);
        assert!(l.embed_unitary(&big).is_err());
    }

    #[test]
    fn growth_verdict_rules() {
        assert_eq!(growth_verdict(&[4, 6], &[1.0, 2.0]), Verdict::Inconclusive);
        assert_eq!(growth_verdict(&[4, 6, 8], &[0.0, 0.0, 0.0]), Verdict::Bounded);
        assert_eq!(growth_verdict(&[4, 6, 8], &[4.0, 6.0, 8.0]), Verdict::Divergent);
        assert_eq!(growth_verdict(&[4, 6, 8], &[1.0, 1.01, 1.0101]), Verdict::Bounded);
        assert_eq!(growth_verdict(&[2, 4, 8, 16], &[2.0, 4.0, 8.0, 16.0]), Verdict::Divergent);
    }

    #[test]
    fn odd_alpha_pair_diverges_linearly() {
        let d = 2;
        let cutoffs = [2, 4, 6, 8];
        let report = equivalence_diagnostic(&cutoffs, |n| {
            let l = Lagrangian::standard(&ModeSpace::odd(d, n)?)?;
            Ok((l.clone(), l.alpha_image()))
        })
        .unwrap();
        for (n, v) in cutoffs.iter().zip(&report.hs_sq) {
            assert_eq!(*v, (n * d) as f64);
        }
        assert_eq!(report.verdict, Verdict::Divergent);
    }

    proptest! {
        #[test]
        fn completions_contain_input_and_are_lagrangian(seed in any::<u64>(), k in 0usize..3) {
            // S: a random k-dimensional subspace of a random Lagrangian.
            let s = ModeSpace::odd(2, 2).unwrap();
            let mut rng = rng_for(seed, 0);
            let g = random_orthogonal(&s, 1.0, &mut rng);
            let l = Lagrangian::standard(&s).unwrap().transform(g.matrix()).unwrap();
            let u = random_unitary(l.dim(), &mut rng);
            let frame = (l.frame() * u).columns(0, k).into_owned();
            let sub = Sublagrangian::new(Subspace::new(&s, frame.clone()).unwrap()).unwrap();
            let done = sub.complete().unwrap();
            prop_assert!(done.subspace().contains_residual(&frame) <= 1e-10);
            prop_assert!(projector_identities(&done) <= 1e-10);
            // Two completions of the same S differ on a finite block.
            let other = l.clone();
            let d = done.offdiag_hs_sq(&other).unwrap();
            prop_assert!(d <= sub.codim() as f64 / 2.0 + 1e-9);
        }

        #[test]
        fn embed_unitary_restricts_to_t(seed in any::<u64>()) {
            let s = ModeSpace::even(2, 2).unwrap();
            let l = Lagrangian::standard(&s).unwrap();
            let t = random_unitary(l.dim(), &mut rng_for(seed, 0));
            let g = l.embed_unitary(&t).unwrap();
            let restricted = l.frame().adjoint() * g.matrix() * l.frame();
            prop_assert!((restricted - t).norm() <= 1e-10);
        }
    }
}

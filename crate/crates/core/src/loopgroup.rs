//! Band-limited loops in SO(d) and 𝔰𝔬(d), their action on mode spaces by
//! pointwise multiplication, and the Lie-algebra cocycle of the central
//! extension.
//!
//! A loop is stored by real coefficients,
//! `f(t) = C_0 + Σ_{k≥1} (C_k cos kt + S_k sin kt)`, so its complex Fourier
//! coefficients are `F_0 = C_0` and `F_{±k} = (C_k ∓ i S_k)/2`. Multiplication
//! by `e^{ikt}` lowers the mode index by `k` in either parity, so the action
//! matrix has entries `⟨ξ_{m,a}, f ξ_{n,b}⟩ = (F_{n−m})_{ab}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::clifford::{OrthogonalMap, SkewSymmetricMap};
use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::implementer::{cocycle_of, implement_general};
use crate::lagrangian::Lagrangian;
use crate::linalg::{commutator, unitarity_residual};
use crate::modespace::{ModeSpace, Parity};
use crate::{CMat, RMat, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Group,
    Algebra,
}

/// A real `d × d` matrix-valued trigonometric polynomial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolyMatrix {
    d: usize,
    cos: BTreeMap<usize, RMat>,
    sin: BTreeMap<usize, RMat>,
    flavor: Flavor,
}

impl TrigPolyMatrix {
    /// The zero loop (for the group flavor add a constant term).
    pub fn zero(d: usize, flavor: Flavor) -> Self {
        Self {
            d,
            cos: BTreeMap::new(),
            sin: BTreeMap::new(),
            flavor,
        }
    }

    pub fn constant(m: RMat, flavor: Flavor) -> Self {
        let d = m.nrows();
        Self::zero(d, flavor).with_cos(0, m)
    }

    /// Adds `m cos(kt)` (`k = 0` is the constant term).
    pub fn with_cos(mut self, k: usize, m: RMat) -> Self {
        assert_eq!((m.nrows(), m.ncols()), (self.d, self.d));
        *self.cos.entry(k).or_insert_with(|| RMat::zeros(self.d, self.d)) += m;
        self
    }

    /// Adds `m sin(kt)`, `k ≥ 1`.
    pub fn with_sin(mut self, k: usize, m: RMat) -> Self {
        assert!(k >= 1, "sin coefficient needs k ≥ 1");
        assert_eq!((m.nrows(), m.ncols()), (self.d, self.d));
        *self.sin.entry(k).or_insert_with(|| RMat::zeros(self.d, self.d)) += m;
        self
    }

    /// Rotation by `winding · t` in the `(e_0, e_1)` plane, identity on the
    /// remaining coordinates.
    pub fn rotation_loop(d: usize, winding: i64) -> Self {
        assert!(d >= 2);
        let w = winding.unsigned_abs() as usize;
        let mut rest = RMat::identity(d, d);
        rest[(0, 0)] = 0.0;
        rest[(1, 1)] = 0.0;
        let mut c = RMat::zeros(d, d);
        c[(0, 0)] = 1.0;
        c[(1, 1)] = 1.0;
        let mut s = RMat::zeros(d, d);
        let sg = winding.signum() as f64;
        s[(0, 1)] = -sg;
        s[(1, 0)] = sg;
        let f = Self::constant(rest, Flavor::Group);
        if w == 0 {
            return f.with_cos(0, c);
        }
        f.with_cos(w, c).with_sin(w, s)
    }

    /// `X e^{ikt} + conj(X) e^{−ikt}` style real wave: `X cos(kt)` or
    /// `X sin(kt)` for an antisymmetric `X`.
    pub fn wave(x: RMat, k: usize, sine: bool) -> Self {
        let d = x.nrows();
        let f = Self::zero(d, Flavor::Algebra);
        if sine {
            f.with_sin(k, x)
        } else {
            f.with_cos(k, x)
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn bandwidth(&self) -> usize {
        let nz = |m: &&RMat| m.norm() > 0.0;
        let c = self.cos.iter().filter(|(_, m)| nz(m)).map(|(k, _)| *k).max().unwrap_or(0);
        let s = self.sin.iter().filter(|(_, m)| nz(m)).map(|(k, _)| *k).max().unwrap_or(0);
        c.max(s)
    }

    /// Complex Fourier coefficient `F_k`.
    pub fn fourier(&self, k: i64) -> CMat {
        let a = k.unsigned_abs() as usize;
        let zero = RMat::zeros(self.d, self.d);
        let c = self.cos.get(&a).unwrap_or(&zero);
        if a == 0 {
            return c.map(|x| C64::new(x, 0.0));
        }
        let s = self.sin.get(&a).unwrap_or(&zero);
        let sg = if k > 0 { -1.0 } else { 1.0 };
        CMat::from_fn(self.d, self.d, |i, j| C64::new(c[(i, j)] / 2.0, sg * s[(i, j)] / 2.0))
    }

    pub fn eval(&self, t: f64) -> RMat {
        let mut out = RMat::zeros(self.d, self.d);
        for (k, m) in &self.cos {
            out += m * (*k as f64 * t).cos();
        }
        for (k, m) in &self.sin {
            out += m * (*k as f64 * t).sin();
        }
        out
    }

    pub fn derivative(&self) -> TrigPolyMatrix {
        let mut f = Self::zero(self.d, Flavor::Algebra);
        for (k, m) in &self.cos {
            if *k > 0 {
                f = f.with_sin(*k, m * -(*k as f64));
            }
        }
        for (k, m) in &self.sin {
            f = f.with_cos(*k, m * (*k as f64));
        }
        f
    }

    /// Builds a loop from complex Fourier coefficients of a real function.
    fn from_fourier(d: usize, coeffs: &BTreeMap<i64, CMat>, flavor: Flavor) -> Self {
        let mut f = Self::zero(d, flavor);
        let zero = CMat::zeros(d, d);
        let top = coeffs.keys().map(|k| k.unsigned_abs()).max().unwrap_or(0) as i64;
        for k in 0..=top {
            let fk = coeffs.get(&k).unwrap_or(&zero);
            if k == 0 {
                f = f.with_cos(0, fk.map(|z| z.re));
            } else {
                let fm = coeffs.get(&-k).unwrap_or(&zero);
                f = f
                    .with_cos(k as usize, (fk + fm).map(|z| z.re))
                    .with_sin(k as usize, (fm - fk).map(|z| z.im));
            }
        }
        f
    }

    fn fourier_map(&self) -> BTreeMap<i64, CMat> {
        let b = self.bandwidth() as i64;
        (-b..=b).map(|k| (k, self.fourier(k))).collect()
    }

    /// Pointwise product.
    pub fn mul(&self, other: &TrigPolyMatrix) -> TrigPolyMatrix {
        let a = self.fourier_map();
        let b = other.fourier_map();
        let mut out: BTreeMap<i64, CMat> = BTreeMap::new();
        for (ka, fa) in &a {
            for (kb, fb) in &b {
                *out.entry(ka + kb).or_insert_with(|| CMat::zeros(self.d, self.d)) += fa * fb;
            }
        }
        Self::from_fourier(self.d, &out, self.flavor)
    }

    /// Pointwise commutator `[f, g](t)`, a loop in 𝔰𝔬(d).
    pub fn commutator(&self, other: &TrigPolyMatrix) -> TrigPolyMatrix {
        let mut f = self.mul(other).add(&other.mul(self).scale(-1.0));
        f.flavor = Flavor::Algebra;
        f
    }

    pub fn scale(&self, s: f64) -> TrigPolyMatrix {
        Self {
            d: self.d,
            cos: self.cos.iter().map(|(k, m)| (*k, m * s)).collect(),
            sin: self.sin.iter().map(|(k, m)| (*k, m * s)).collect(),
            flavor: self.flavor,
        }
    }

    pub fn add(&self, other: &TrigPolyMatrix) -> TrigPolyMatrix {
        let mut f = self.clone();
        for (k, m) in &other.cos {
            f = f.with_cos(*k, m.clone());
        }
        for (k, m) in &other.sin {
            f = f.with_sin(*k, m.clone());
        }
        f
    }

    /// Checks the flavor invariant at `samples` equally spaced points.
    pub fn validate(&self, samples: usize) -> Result<()> {
        let mut worst: f64 = 0.0;
        for s in 0..samples.max(1) {
            let t = 2.0 * std::f64::consts::PI * s as f64 / samples.max(1) as f64;
            let m = self.eval(t);
            let r = match self.flavor {
                Flavor::Group => (m.transpose() * &m - RMat::identity(self.d, self.d)).norm(),
                Flavor::Algebra => (&m + m.transpose()).norm(),
            };
            worst = worst.max(r);
        }
        let tol = match self.flavor {
            Flavor::Group => 1e-8,
            Flavor::Algebra => 1e-10,
        };
        if worst > tol {
            return Err(Error::invariant(
                match self.flavor {
                    Flavor::Group => "loop is not orthogonal",
                    Flavor::Algebra => "loop is not antisymmetric",
                },
                worst,
                tol,
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> TrigPolyJson {
        let mut coeffs = BTreeMap::new();
        for (k, m) in &self.cos {
            coeffs.insert(k.to_string(), crate::json::real_matrix_to_json(m));
        }
        for (k, m) in &self.sin {
            coeffs.insert(format!("-{k}"), crate::json::real_matrix_to_json(m));
        }
        TrigPolyJson {
            d: self.d,
            coeffs,
            flavor: self.flavor,
        }
    }

    /// Parses the JSON form: key `"k"` (k ≥ 0) holds the `cos(kt)`
    /// coefficient and `"-k"` the `sin(kt)` coefficient.
    pub fn from_json(j: &TrigPolyJson) -> Result<Self> {
        if j.d == 0 {
            return Err(Error::Parameter("loop needs d ≥ 1".into()));
        }
        let mut f = Self::zero(j.d, j.flavor);
        for (key, rows) in &j.coeffs {
            let m = crate::json::real_matrix_from_json(rows)?;
            if m.nrows() != j.d || m.ncols() != j.d {
                return Err(Error::Json(format!("coefficient {key} is not {0}×{0}", j.d)));
            }
            let k: i64 = key
                .trim()
                .parse()
                .map_err(|_| Error::Json(format!("bad frequency key {key:?}")))?;
            f = if k >= 0 || key.trim() == "-0" {
                f.with_cos(k.unsigned_abs() as usize, m)
            } else {
                f.with_sin(k.unsigned_abs() as usize, m)
            };
        }
        f.validate(64)?;
        Ok(f)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TrigPolyJson {
    pub d: usize,
    pub coeffs: BTreeMap<String, Vec<Vec<f64>>>,
    pub flavor: Flavor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "lowercase")]
pub enum Regime {
    /// Constant loops: no frequency shift, the truncation is invariant.
    Exact,
    /// The truncated matrix misses couplings across the cutoff;
    /// `non_orthogonality` is ‖M*M − 1‖₂.
    Compressed { non_orthogonality: f64 },
}

/// Matrix of pointwise multiplication, compressed to the truncation.
#[derive(Clone, Debug)]
pub struct LoopAction {
    space: ModeSpace,
    matrix: CMat,
    regime: Regime,
}

impl LoopAction {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn space(&self) -> &ModeSpace {
        &self.space
    }

    /// The orthogonal map: exact actions as they are, compressed ones
    /// replaced by their polar (unitary) factor.
    ///
    /// Compressions of winding loops are singular, so the polar factor is
    /// only fixed off the kernel. It is taken from a real SVD in α-real
    /// coordinates, which makes the completion on the kernel commute with α.
    pub fn orthogonal(&self) -> Result<OrthogonalMap> {
        match self.regime {
            Regime::Exact => OrthogonalMap::with_tolerance(self.space.clone(), self.matrix.clone(), 1e-8),
            Regime::Compressed { .. } => {
                let r = self.space.real_structure().real_basis();
                let real = (r.adjoint() * &self.matrix * &r).map(|z| z.re);
                let svd = real.svd(true, true);
                let o = (svd.u.expect("u requested") * svd.v_t.expect("v_t requested")).map(|x| C64::new(x, 0.0));
                OrthogonalMap::with_tolerance(self.space.clone(), &r * o * r.adjoint(), 1e-8)
            }
        }
    }

    /// The skew map of an algebra-flavor loop (compression keeps skewness).
    pub fn skew(&self) -> Result<SkewSymmetricMap> {
        SkewSymmetricMap::new(self.space.clone(), self.matrix.clone())
    }
}

/// Action of a loop on a truncated mode space.
pub fn act(f: &TrigPolyMatrix, space: &ModeSpace) -> Result<LoopAction> {
    if f.d() != space.d() {
        return Err(Error::SpaceMismatch(format!("loop has d={}, space has d={}", f.d(), space.d())));
    }
    let b = f.bandwidth() as i64;
    let coeffs: Vec<(i64, CMat)> = (-b..=b).map(|k| (k, f.fourier(k))).collect();
    let m = fourier_action(space, &coeffs)?;
    let regime = if b == 0 {
        Regime::Exact
    } else {
        Regime::Compressed {
            non_orthogonality: match f.flavor() {
                Flavor::Group => unitarity_residual(&m),
                Flavor::Algebra => 0.0,
            },
        }
    };
    Ok(LoopAction {
        space: space.clone(),
        matrix: m,
        regime,
    })
}

/// Matrix of multiplication by `Σ_k F_k e^{ikt}` (complex coefficients
/// allowed) on a truncated mode space.
pub fn fourier_action(space: &ModeSpace, coeffs: &[(i64, CMat)]) -> Result<CMat> {
    let d = space.d();
    if coeffs.iter().any(|(_, c)| c.nrows() != d || c.ncols() != d) {
        return Err(Error::SpaceMismatch(format!("Fourier coefficients must be {d}×{d}")));
    }
    let dim = space.dim();
    let mut m = CMat::zeros(dim, dim);
    let (lo, hi) = space.modes();
    for n in lo..=hi {
        for (k, fk) in coeffs {
            let target = n - k;
            if target < lo || target > hi {
                continue;
            }
            let r0 = space.position(target, 0).expect("in range");
            let c0 = space.position(n, 0).expect("in range");
            let mut block = m.view_mut((r0, c0), (d, d));
            block += fk;
        }
    }
    Ok(m)
}

/// `Σ_k k tr(F1_k F2_{−k})` for coefficient lists.
pub fn fourier_cocycle_rhs(c1: &[(i64, CMat)], c2: &[(i64, CMat)]) -> C64 {
    let mut out = C64::new(0.0, 0.0);
    for (k, a) in c1 {
        for (m, b) in c2 {
            if k + m == 0 {
                out += (a * b).trace() * *k as f64;
            }
        }
    }
    out
}

fn check_cutoff(f1: &TrigPolyMatrix, f2: &TrigPolyMatrix, space: &ModeSpace) -> Result<()> {
    let required = f1.bandwidth() + f2.bandwidth() + 1;
    if space.cutoff() < required {
        return Err(Error::CutoffTooSmall {
            cutoff: space.cutoff(),
            required,
        });
    }
    Ok(())
}

/// `tr([a_1, a_2] − a_3)` with `a_i = P_L A_i P_L`, `A_i` the actions of
/// `f_1, f_2` and `A_3 = [A_1, A_2]`.
///
/// For real loops the value is purely imaginary; it is returned as a complex
/// number so the real part can be checked to vanish.
pub fn lie_cocycle_lhs(f1: &TrigPolyMatrix, f2: &TrigPolyMatrix, space: &ModeSpace, l: &Lagrangian) -> Result<C64> {
    check_cutoff(f1, f2, space)?;
    let a1 = act(f1, space)?.matrix;
    let a2 = act(f2, space)?.matrix;
    Ok(lie_cocycle_matrices(&a1, &a2, l))
}

/// `tr([P X P, P Y P] − P [X, Y] P)` for one-particle operators.
pub fn lie_cocycle_matrices(x: &CMat, y: &CMat, l: &Lagrangian) -> C64 {
    // Traces of products are contracted directly; with P² = P this needs
    // only PX, PY, PXP and PYP.
    let p = l.projector();
    let px = p * x;
    let py = p * y;
    let a1 = &px * p;
    let a2 = &py * p;
    trace_product(&a1, &a2) - trace_product(&a2, &a1) - trace_product(&px, y) + trace_product(&py, x)
}

/// `tr(AB)` without forming the product.
fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

/// `−(1/2πi) ∫ tr(f_1 f_2') dt = Σ_k k tr(F1_k F2_{−k})`.
pub fn lie_cocycle_rhs(f1: &TrigPolyMatrix, f2: &TrigPolyMatrix) -> C64 {
    let b = f1.bandwidth().min(f2.bandwidth()) as i64;
    (-b..=b)
        .map(|k| (f1.fourier(k) * f2.fourier(-k)).trace() * k as f64)
        .sum()
}

/// `tr(P_{L_0} [f_1, f_2]^{(0)})`, where `[f_1, f_2]^{(0)}` is the mean of
/// the pointwise commutator and `P_{L_0}` the mode-zero block of `P_L`.
/// Zero for odd spaces, which have no mode zero.
///
/// On even spaces `lhs = rhs − zero_mode_term`; the term is a coboundary
/// (linear in `[f_1, f_2]`) and vanishes when 𝔰𝔬(d) is abelian.
pub fn zero_mode_term(f1: &TrigPolyMatrix, f2: &TrigPolyMatrix, space: &ModeSpace, l: &Lagrangian) -> C64 {
    let c = |f: &TrigPolyMatrix| -> Vec<(i64, CMat)> {
        let b = f.bandwidth() as i64;
        (-b..=b).map(|k| (k, f.fourier(k))).collect()
    };
    zero_mode_term_fourier(&c(f1), &c(f2), space, l)
}

/// [`zero_mode_term`] for coefficient lists.
pub fn zero_mode_term_fourier(c1: &[(i64, CMat)], c2: &[(i64, CMat)], space: &ModeSpace, l: &Lagrangian) -> C64 {
    if space.parity() == Parity::Odd {
        return C64::new(0.0, 0.0);
    }
    let d = space.d();
    let z = space.position(0, 0).expect("even space has mode 0");
    let p0 = l.projector().view((z, z), (d, d)).into_owned();
    let mut mean = CMat::zeros(d, d);
    for (k, a) in c1 {
        for (m, b) in c2 {
            if k + m == 0 {
                mean += commutator(a, b);
            }
        }
    }
    (p0 * mean).trace()
}

/// Mixed finite difference `∂_s ∂_t arg c(e^{sX}, e^{tY})` at zero with step
/// `eps`, using implementers from [`implement_general`].
///
/// To second order this equals `lie_cocycle_matrices(X, Y, L) / (4i)`.
pub fn group_cocycle_mixed_derivative(
    x: &SkewSymmetricMap,
    y: &SkewSymmetricMap,
    fock: &FockSpace,
    eps: f64,
) -> Result<f64> {
    let angle = |s: f64, t: f64| -> Result<f64> {
        let g = x.scaled(s).exp();
        let h = y.scaled(t).exp();
        let ug = implement_general(&g, fock)?;
        let uh = implement_general(&h, fock)?;
        let ugh = implement_general(&g.compose(&h)?, fock)?;
        Ok(cocycle_of(ug.matrix(), uh.matrix(), ugh.matrix())?.angle())
    };
    let pp = angle(eps, eps)?;
    let pm = angle(eps, -eps)?;
    let mp = angle(-eps, eps)?;
    let mm = angle(-eps, -eps)?;
    Ok((pp - pm - mp + mm) / (4.0 * eps * eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_antisymmetric, random_rotation, rng_for, random_skew};
    use proptest::prelude::*;

    fn j2() -> RMat {
        RMat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    /// Independent oracle: trapezoidal quadrature of
    /// `−(1/2πi) ∫ tr(f_1 f_2')`, exact for trigonometric polynomials of
    /// degree below the sample count.
    fn quadrature_rhs(f1: &TrigPolyMatrix, f2: &TrigPolyMatrix) -> C64 {
        let n = 64;
        let d2 = f2.derivative();
        let mut s = 0.0;
        for i in 0..n {
            let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            s += (f1.eval(t) * d2.eval(t)).trace();
        }
        let integral = s * 2.0 * std::f64::consts::PI / n as f64;
        C64::new(0.0, integral / (2.0 * std::f64::consts::PI))
    }

    #[test]
    fn fourier_convention() {
        let s = RMat::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        let f = TrigPolyMatrix::wave(s.clone(), 3, true);
        // S sin(3t) = S (e^{3it} − e^{−3it}) / 2i.
        assert!((f.fourier(3)[(0, 1)] - C64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((f.fourier(-3)[(0, 1)] - C64::new(0.0, 1.0)).norm() < 1e-15);
        let t = 0.37;
        assert!((f.eval(t) - s * (3.0 * t).sin()).norm() < 1e-15);
    }

    #[test]
    fn constant_loops_act_blockwise() {
        let s = ModeSpace::odd(3, 2).unwrap();
        let id = act(&TrigPolyMatrix::constant(RMat::identity(3, 3), Flavor::Group), &s).unwrap();
        assert_eq!(id.regime(), Regime::Exact);
        assert!((id.matrix() - CMat::identity(12, 12)).norm() < 1e-15);
        let r = random_rotation(3, &mut rng_for(1, 0));
        let a = act(&TrigPolyMatrix::constant(r.clone(), Flavor::Group), &s).unwrap();
        for n in -2..2 {
            let p = s.position(n, 0).unwrap();
            let block = a.matrix().view((p, p), (3, 3)).map(|z| z.re);
            assert!((block - &r).norm() < 1e-15);
        }
        assert!(a.orthogonal().is_ok());
    }

    #[test]
    fn rotation_loop_couples_neighbouring_modes() {
        let s = ModeSpace::even(2, 3).unwrap();
        let f = TrigPolyMatrix::rotation_loop(2, 1);
        f.validate(32).unwrap();
        let a = act(&f, &s).unwrap();
        let c = s.position(0, 0).unwrap();
        for (i, ix) in s.index().iter().enumerate() {
            let w = a.matrix()[(i, c)].norm() + a.matrix()[(i, c + 1)].norm();
            if w > 0.0 {
                assert_eq!(ix.n.abs(), 1);
            }
        }
        assert!(matches!(a.regime(), Regime::Compressed { non_orthogonality } if non_orthogonality > 0.1));
        let g = a.orthogonal().unwrap();
        assert!(g.alpha_commutator_norm() < 1e-10);
    }

    #[test]
    fn singular_compressions_complete_compatibly() {
        // Winding loops shift modes out of the truncation, leaving a kernel.
        for (s, w) in [(ModeSpace::odd(2, 2).unwrap(), 1), (ModeSpace::odd(3, 3).unwrap(), -2)] {
            let a = act(&TrigPolyMatrix::rotation_loop(s.d(), w), &s).unwrap();
            let g = a.orthogonal().unwrap();
            assert!(g.alpha_commutator_norm() < 1e-10);
            assert!(unitarity_residual(g.matrix()) < 1e-10);
        }
    }

    #[test]
    fn action_is_multiplicative_inside_the_band() {
        // Oracle: products of loops acting on a mode far from the cutoff.
        let s = ModeSpace::odd(2, 6).unwrap();
        let f = TrigPolyMatrix::rotation_loop(2, 1);
        let g = TrigPolyMatrix::rotation_loop(2, 2);
        let fg = act(&f.mul(&g), &s).unwrap();
        let prod = act(&f, &s).unwrap().matrix() * act(&g, &s).unwrap().matrix();
        let c = s.position(0, 0).unwrap();
        assert!((fg.matrix().column(c) - prod.column(c)).norm() < 1e-14);
    }

    #[test]
    fn cutoff_guard() {
        let s = ModeSpace::odd(2, 3).unwrap();
        let l = Lagrangian::standard(&s).unwrap();
        let f = TrigPolyMatrix::wave(j2(), 2, false);
        assert!(matches!(lie_cocycle_lhs(&f, &f, &s, &l), Err(Error::CutoffTooSmall { cutoff: 3, required: 5 })));
    }

    #[test]
    fn cocycle_with_constant_vanishes() {
        let s = ModeSpace::odd(2, 5).unwrap();
        let l = Lagrangian::standard(&s).unwrap();
        let f1 = TrigPolyMatrix::wave(j2(), 2, true);
        let f2 = TrigPolyMatrix::constant(j2(), Flavor::Algebra);
        assert!(lie_cocycle_lhs(&f1, &f2, &s, &l).unwrap().norm() < 1e-12);
        assert_eq!(lie_cocycle_rhs(&f1, &f2).norm(), 0.0);
    }

    #[test]
    fn sine_cosine_pair_d2() {
        for k in 1..4usize {
            let s = ModeSpace::odd(2, 2 * k + 1).unwrap();
            let l = Lagrangian::standard(&s).unwrap();
            let f1 = TrigPolyMatrix::wave(j2(), k, true);
            let f2 = TrigPolyMatrix::wave(j2(), k, false);
            let rhs = lie_cocycle_rhs(&f1, &f2);
            assert!((rhs - quadrature_rhs(&f1, &f2)).norm() < 1e-12);
            assert!(rhs.norm() > 0.5);
            let lhs = lie_cocycle_lhs(&f1, &f2, &s, &l).unwrap();
            assert!((lhs - rhs).norm() < 1e-10, "k={k}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn even_zero_mode_term_accounts_for_the_difference() {
        let mut rng = rng_for(77, 0);
        let s = ModeSpace::even(4, 6).unwrap();
        let l = Lagrangian::standard(&s).unwrap();
        let f1 = TrigPolyMatrix::wave(random_antisymmetric(4, &mut rng), 1, false)
            .add(&TrigPolyMatrix::constant(random_antisymmetric(4, &mut rng), Flavor::Algebra));
        let f2 = TrigPolyMatrix::wave(random_antisymmetric(4, &mut rng), 1, true)
            .add(&TrigPolyMatrix::constant(random_antisymmetric(4, &mut rng), Flavor::Algebra));
        let lhs = lie_cocycle_lhs(&f1, &f2, &s, &l).unwrap();
        let rhs = lie_cocycle_rhs(&f1, &f2);
        let z = zero_mode_term(&f1, &f2, &s, &l);
        assert!(z.norm() > 1e-3);
        assert!((lhs - (rhs - z)).norm() < 1e-10);
    }

    #[test]
    fn group_cocycle_matches_lie_cocycle() {
        let s = ModeSpace::odd(1, 2).unwrap();
        let f = FockSpace::new(&Lagrangian::standard(&s).unwrap()).unwrap();
        let mut rng = rng_for(12, 0);
        let x = random_skew(&s, 1.0, &mut rng);
        let y = random_skew(&s, 1.0, &mut rng);
        let fd = group_cocycle_mixed_derivative(&x, &y, &f, 1e-3).unwrap();
        let tau = lie_cocycle_matrices(x.matrix(), y.matrix(), f.lagrangian());
        let expected = (tau / C64::new(0.0, 4.0)).re;
        assert!((fd - expected).abs() < 1e-4, "{fd} vs {expected}");
    }

    #[test]
    fn json_keys() {
        let f = TrigPolyMatrix::constant(RMat::identity(2, 2), Flavor::Group);
        let j = serde_json::to_value(f.to_json()).unwrap();
        assert_eq!(j["coeffs"]["0"], serde_json::json!([[1.0, 0.0], [0.0, 1.0]]));
        let w = TrigPolyMatrix::wave(j2(), 2, true);
        let text = serde_json::to_string(&w.to_json()).unwrap();
        assert!(text.contains("\"-2\""));
        let back = TrigPolyMatrix::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, w);
        let bad: TrigPolyJson =
            serde_json::from_str(r#"{"d":2,"coeffs":{"0":[[1,0],[0,1]]},"flavor":"algebra"}"#).unwrap();
        assert!(TrigPolyMatrix::from_json(&bad).is_err());
    }

    fn random_algebra_loop(d: usize, band: usize, rng: &mut crate::sampling::SeededRng) -> TrigPolyMatrix {
        let mut f = TrigPolyMatrix::constant(random_antisymmetric(d, rng), Flavor::Algebra);
        for k in 1..=band {
            f = f.with_cos(k, random_antisymmetric(d, rng)).with_sin(k, random_antisymmetric(d, rng));
        }
        f
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rhs_is_antisymmetric_and_linear(seed in any::<u64>(), c in -3.0f64..3.0) {
            let mut rng = rng_for(seed, 0);
            let f1 = random_algebra_loop(3, 2, &mut rng);
            let f2 = random_algebra_loop(3, 3, &mut rng);
            let r12 = lie_cocycle_rhs(&f1, &f2);
            prop_assert!((r12 + lie_cocycle_rhs(&f2, &f1)).norm() <= 1e-12);
            prop_assert!((r12 - quadrature_rhs(&f1, &f2)).norm() <= 1e-10);
            prop_assert!((lie_cocycle_rhs(&f1.scale(c), &f2) - r12 * c).norm() <= 1e-11);
            prop_assert!(r12.re.abs() <= 1e-12);
        }

        #[test]
        fn odd_identity_holds(seed in any::<u64>(), d in prop::sample::select(vec![2usize, 3, 4])) {
            let mut rng = rng_for(seed, 0);
            let f1 = random_algebra_loop(d, 2, &mut rng);
            let f2 = random_algebra_loop(d, 2, &mut rng);
            let s = ModeSpace::odd(d, 5).unwrap();
            let l = Lagrangian::standard(&s).unwrap();
            let lhs = lie_cocycle_lhs(&f1, &f2, &s, &l).unwrap();
            prop_assert!((lhs - lie_cocycle_rhs(&f1, &f2)).norm() <= 1e-10);
        }

        #[test]
        fn lhs_is_a_two_cocycle(seed in any::<u64>(), odd in any::<bool>()) {
            let mut rng = rng_for(seed, 0);
            let f: Vec<_> = (0..3).map(|_| random_algebra_loop(2, 1, &mut rng)).collect();
            let s = if odd { ModeSpace::odd(2, 4).unwrap() } else { ModeSpace::even(2, 4).unwrap() };
            let l = Lagrangian::standard(&s).unwrap();
            let w = |a: &TrigPolyMatrix, b: &TrigPolyMatrix| lie_cocycle_lhs(a, b, &s, &l).unwrap();
            let total = w(&f[0].commutator(&f[1]), &f[2])
                + w(&f[1].commutator(&f[2]), &f[0])
                + w(&f[2].commutator(&f[0]), &f[1]);
            prop_assert!(total.norm() <= 1e-9);
        }
    }
}

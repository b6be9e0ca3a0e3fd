//! Seeded random inputs for property checks and batch suites.
//!
//! Each item of a batch draws from its own ChaCha stream, `rng_for(seed, i)`,
//! so results do not depend on evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clifford::{OrthogonalMap, SkewSymmetricMap};
use crate::loopgroup::{Flavor, TrigPolyMatrix};
use crate::modespace::{ModeSpace, ModeVector};
use crate::{CMat, CVec, RMat, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng_for(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Real and imaginary parts uniform in `[-1, 1)`.
pub fn random_complex<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn random_cvec<R: Rng>(dim: usize, rng: &mut R) -> CVec {
    CVec::from_fn(dim, |_, _| random_complex(rng))
}

pub fn random_cmat<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_mode_vector<R: Rng>(space: &ModeSpace, rng: &mut R) -> ModeVector {
    space
        .vector(random_cvec(space.dim(), rng))
        .expect("length matches by construction")
}

/// A unit vector in a random direction.
pub fn random_unit_vector<R: Rng>(dim: usize, rng: &mut R) -> CVec {
    let v = random_cvec(dim, rng);
    let n = v.norm();
    v.unscale(n)
}

/// Haar-like random unitary from the QR factor of a random matrix.
pub fn random_unitary<R: Rng>(k: usize, rng: &mut R) -> CMat {
    let qr = random_cmat(k, k, rng).qr();
    let (q, r) = qr.unpack();
    // Fix the column phases so the distribution does not depend on the QR
    // sign convention.
    let mut q = q;
    for j in 0..k {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for i in 0..k {
                q[(i, j)] *= ph;
            }
        }
    }
    q
}

/// Skew-adjoint matrix commuting with the real structure, with operator
/// norm at most `scale`.
pub fn random_skew<R: Rng>(space: &ModeSpace, scale: f64, rng: &mut R) -> SkewSymmetricMap {
    let a = random_cmat(space.dim(), space.dim(), rng);
    let x = &a - a.adjoint();
    let alpha = space.real_structure();
    let x = (&x + alpha.conjugate_operator(&x)).scale(0.5);
    let norm = crate::linalg::op_norm(&x);
    let x = if norm > 0.0 { x.scale(scale / norm) } else { x };
    SkewSymmetricMap::new(space.clone(), x).expect("skew and real by construction")
}

/// `exp(X)` for a random skew `X` of operator norm `scale`.
pub fn random_orthogonal<R: Rng>(space: &ModeSpace, scale: f64, rng: &mut R) -> OrthogonalMap {
    random_skew(space, scale, rng).exp()
}

/// Random real antisymmetric `d × d` matrix with entries in `[-1, 1)`.
pub fn random_antisymmetric<R: Rng>(d: usize, rng: &mut R) -> RMat {
    let a = RMat::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    &a - a.transpose()
}

/// Random element of SO(d) as the exponential of an antisymmetric matrix.
pub fn random_rotation<R: Rng>(d: usize, rng: &mut R) -> RMat {
    random_antisymmetric(d, rng).exp()
}

/// Band-limited 𝔰𝔬(d)-valued loop with random coefficients, damped by
/// `1/k` in frequency and scaled by `scale`.
pub fn random_algebra_loop<R: Rng>(d: usize, bandwidth: usize, scale: f64, rng: &mut R) -> TrigPolyMatrix {
    let mut f = TrigPolyMatrix::constant(random_antisymmetric(d, rng) * scale, Flavor::Algebra);
    for k in 1..=bandwidth {
        let s = scale / k as f64;
        f = f
            .with_cos(k, random_antisymmetric(d, rng) * s)
            .with_sin(k, random_antisymmetric(d, rng) * s);
    }
    f
}

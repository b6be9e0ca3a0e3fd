//! Parallel transport along a loop, holonomy spectra, and the Dirac operator
//! `D = i(d/dt + A(t))` on antiperiodic `ℂ^d`-valued functions.
//!
//! Transport solves `pt' = −A·pt`, so a constant `A = θJ` has holonomy
//! `e^{−2πθJ}`. With `pt(2π) v_j = e^{iφ_j} v_j`, `φ_j ∈ [−π, π)`, the
//! functions
//!
//! ```text
//! η_{n,j}(t) = e^{−i(n+1/2)t − iφ_j t/2π} pt(t) v_j
//! ```
//!
//! are antiperiodic eigenfunctions of `D` with `λ_{n,j} = n + 1/2 + φ_j/2π`.
//!
//! Functions are sampled at `t_s = 2πs/K`, `s = 0..K`, and carry the
//! normalized inner product `⟨f, g⟩ = K⁻¹ Σ_s f(t_s)* g(t_s)`, for which the
//! plain modes `ξ_{n,j} = e^{−i(n+1/2)t} e_j` are orthonormal.
//!
//! Eigensystems use labels `(n, j)` with `n ∈ [−N, N−1]`, except that a
//! direction with `φ_j = −π` carries `n ∈ [−N, N]`: conjugation sends
//! `η_{n,j}` to `η_{−n−1,j'}` for a generic angle (with `v_{j'} = conj v_j`)
//! but to `η_{−n,j}` at `φ_j = −π`, and the extended range keeps the label set
//! closed under it.

use nalgebra::SymmetricEigen;
use rustfft::FftPlanner;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lagrangian::{growth_verdict, is_lagrangian, Lagrangian, Sublagrangian, Subspace, Verdict};
use crate::linalg::{basis_extend, columns_to_matrix, hermitian_eigen, unitarity_residual};
use crate::loopgroup::{Flavor, TrigPolyMatrix};
use crate::modespace::RealStructureMap;
use crate::{CMat, CVec, RMat, C64};

pub const MIN_STEPS: usize = 64;
const REORTHONORMALIZE_EVERY: usize = 16;
const DRIFT_TOL: f64 = 1e-6;
const CLUSTER_TOL: f64 = 1e-8;
const SPECTRUM_TOL: f64 = 1e-8;
const EIGEN_TOL: f64 = 1e-4;
/// `|λ| ≤ KERNEL_TOL` counts as kernel.
pub const KERNEL_TOL: f64 = 1e-8;

/// A band-limited 𝔰𝔬(d)-valued connection form along the loop.
#[derive(Clone, Debug)]
pub struct LoopConnection {
    a: TrigPolyMatrix,
}

impl LoopConnection {
    pub fn new(a: TrigPolyMatrix) -> Result<Self> {
        if a.flavor() != Flavor::Algebra {
            return Err(Error::Parameter("a connection needs an algebra-flavor loop".into()));
        }
        a.validate(8 * a.bandwidth() + 64)?;
        Ok(Self { a })
    }

    pub fn flat(d: usize) -> Self {
        Self {
            a: TrigPolyMatrix::zero(d, Flavor::Algebra),
        }
    }

    /// `A = θJ` on `ℝ²`, with `J e_0 = e_1`.
    pub fn constant_rotation(theta: f64) -> Self {
        let mut j = RMat::zeros(2, 2);
        j[(1, 0)] = theta;
        j[(0, 1)] = -theta;
        Self {
            a: TrigPolyMatrix::constant(j, Flavor::Algebra),
        }
    }

    pub fn form(&self) -> &TrigPolyMatrix {
        &self.a
    }

    pub fn d(&self) -> usize {
        self.a.d()
    }

    pub fn eval(&self, t: f64) -> RMat {
        self.a.eval(t)
    }
}

/// Samples of `pt(t_s)` for `s = 0..=K`.
#[derive(Clone, Debug)]
pub struct TransportPath {
    connection: LoopConnection,
    samples: Vec<RMat>,
}

impl TransportPath {
    pub fn connection(&self) -> &LoopConnection {
        &self.connection
    }

    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn time(&self, s: usize) -> f64 {
        2.0 * PI * s as f64 / self.steps() as f64
    }

    pub fn samples(&self) -> &[RMat] {
        &self.samples
    }

    pub fn holonomy(&self) -> &RMat {
        self.samples.last().expect("nonempty")
    }

    /// Largest `‖ptᵀpt − 1‖` and `|det pt − 1|` over the samples.
    pub fn orthogonality_residual(&self) -> f64 {
        let d = self.connection.d();
        self.samples
            .iter()
            .map(|p| {
                let o = (p.transpose() * p - RMat::identity(d, d)).norm();
                o.max((p.determinant() - 1.0).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn nearest_orthogonal(m: &RMat) -> RMat {
    let svd = m.clone().svd(true, true);
    svd.u.expect("u") * svd.v_t.expect("v_t")
}

/// Integrates `pt' = −A·pt`, `pt(0) = 1` over `[0, 2π]` by classical RK4.
pub fn parallel_transport(conn: &LoopConnection, steps: usize) -> Result<TransportPath> {
    if steps < MIN_STEPS {
        return Err(Error::Parameter(format!("parallel transport needs at least {MIN_STEPS} steps")));
    }
    let d = conn.d();
    let h = 2.0 * PI / steps as f64;
    let f = |t: f64, p: &RMat| -(conn.eval(t) * p);
    let mut p = RMat::identity(d, d);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(p.clone());
    for s in 0..steps {
        let t = s as f64 * h;
        let k1 = f(t, &p);
        let k2 = f(t + h / 2.0, &(&p + &k1 * (h / 2.0)));
        let k3 = f(t + h / 2.0, &(&p + &k2 * (h / 2.0)));
        let k4 = f(t + h, &(&p + &k3 * h));
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if (s + 1) % REORTHONORMALIZE_EVERY == 0 || s + 1 == steps {
            let drift = (p.transpose() * &p - RMat::identity(d, d)).norm();
            if drift > DRIFT_TOL {
                return Err(Error::invariant(
                    format!("transport left SO({d}); increase the step count beyond {steps}"),
                    drift,
                    DRIFT_TOL,
                ));
            }
            p = nearest_orthogonal(&p);
        }
        samples.push(p.clone());
    }
    Ok(TransportPath {
        connection: conn.clone(),
        samples,
    })
}

/// Eigen-angles `φ_j ∈ [−π, π)` of the holonomy, ascending, with
/// orthonormal eigenvectors. `partner[j]` is the index of the conjugate
/// direction: `v_{partner[j]} = conj(v_j)` and `φ_{partner[j]} = −φ_j`
/// (or `j` itself for `φ_j ∈ {0, −π}`, where `v_j` is real).
#[derive(Clone, Debug)]
pub struct HolonomySpectrum {
    pub angles: Vec<f64>,
    pub vectors: CMat,
    pub partner: Vec<usize>,
    /// Largest `‖pt(2π) v_j − e^{iφ_j} v_j‖`.
    pub residual: f64,
}

impl HolonomySpectrum {
    pub fn d(&self) -> usize {
        self.angles.len()
    }

    pub fn is_minus_pi(&self, j: usize) -> bool {
        self.angles[j] == -PI
    }
}

fn fix_phase(v: &mut CVec) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-6 * max).copied() {
        let ph = z.conj() / z.norm();
        *v *= ph;
    }
}

fn lex_cmp(a: &CVec, b: &CVec) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != std::cmp::Ordering::Equal {
            return o;
        }
    }
    std::cmp::Ordering::Equal
}

/// Eigendecomposition of `O = pt(2π)` through its commuting parts
/// `C = (O + Oᵀ)/2` (eigenvalues `cos φ`) and `S = (O − Oᵀ)/2` (eigenvalues
/// `i sin φ`). Clusters of `C` are split by the Hermitian `−iS`; the `sin φ > 0`
/// vectors and their conjugates give the complex directions, and the
/// `sin φ = 0` part is given a real basis.
pub fn holonomy_spectrum(path: &TransportPath) -> Result<HolonomySpectrum> {
    let o = path.holonomy();
    let d = o.nrows();
    let c = (o + o.transpose()) * 0.5;
    let s = (o - o.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let cc = c.map(|x| C64::new(x, 0.0));
    let sc = s.map(|x| C64::new(x, 0.0));
    // (angle, vector, pair id)
    let mut modes: Vec<(f64, CVec, usize)> = Vec::with_capacity(d);
    let mut pair_id = 0;
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= CLUSTER_TOL {
            end += 1;
        }
        let q = CMat::from_fn(d, end - start, |i, k| C64::new(eig.eigenvectors[(i, order[start + k])], 0.0));
        let h = (q.adjoint() * &sc * &q) * C64::new(0.0, -1.0);
        let (svals, w) = hermitian_eigen(&h);
        let mut flat: Vec<CVec> = Vec::new();
        for (k, &sv) in svals.iter().enumerate() {
            let v: CVec = &q * w.column(k);
            if sv > SPECTRUM_TOL {
                let cv = v.dotc(&(&cc * &v)).re;
                let phi = sv.atan2(cv);
                let mut v = v;
                fix_phase(&mut v);
                modes.push((phi, v.clone(), pair_id));
                modes.push((-phi, v.map(|z| z.conj()), pair_id));
                pair_id += 1;
            } else if sv.abs() <= SPECTRUM_TOL {
                flat.push(v);
            }
        }
        if !flat.is_empty() {
            let m = flat.len();
            let mut cols = Vec::with_capacity(2 * m);
            for v in &flat {
                cols.push(v.map(|z| C64::new(z.re, 0.0)));
                cols.push(v.map(|z| C64::new(z.im, 0.0)));
            }
            let mut real: Vec<CVec> = Vec::new();
            basis_extend(&mut real, &columns_to_matrix(d, &cols), 1e-6);
            if real.len() != m {
                return Err(Error::Degenerate(format!(
                    "real eigenspace of dimension {m} produced {} real directions",
                    real.len()
                )));
            }
            for mut v in real {
                let cv = v.dotc(&(&cc * &v)).re;
                fix_phase(&mut v);
                modes.push((if cv > 0.0 { 0.0 } else { -PI }, v, pair_id));
                pair_id += 1;
            }
        }
        start = end;
    }
    if modes.len() != d {
        return Err(Error::Degenerate(format!("found {} of {d} holonomy eigenvectors", modes.len())));
    }
    modes.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex_cmp(&a.1, &b.1)));
    let angles: Vec<f64> = modes.iter().map(|m| m.0).collect();
    let vectors = columns_to_matrix(d, &modes.iter().map(|m| m.1.clone()).collect::<Vec<_>>());
    let partner = (0..d)
        .map(|j| {
            (0..d)
                .find(|&k| modes[k].2 == modes[j].2 && (k != j || angles[j] == 0.0 || angles[j] == -PI))
                .expect("partner exists")
        })
        .collect();
    let oc = o.map(|x| C64::new(x, 0.0));
    let mut residual: f64 = 0.0;
    for j in 0..d {
        let v = vectors.column(j);
        residual = residual.max((&oc * v - v * C64::from_polar(1.0, angles[j])).norm());
    }
    residual = residual.max(unitarity_residual(&vectors));
    if residual > SPECTRUM_TOL {
        return Err(Error::invariant("holonomy eigendecomposition", residual, SPECTRUM_TOL));
    }
    Ok(HolonomySpectrum {
        angles,
        vectors,
        partner,
        residual,
    })
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct DiracResiduals {
    pub eigen: f64,
    pub antiperiodicity: f64,
    pub orthonormality: f64,
    pub alpha_compatibility: f64,
    pub spectral_symmetry: f64,
}

/// Sampled Dirac eigenfunctions and eigenvalues.
#[derive(Clone, Debug)]
pub struct DiracEigensystem {
    pub cutoff: usize,
    pub d: usize,
    pub steps: usize,
    pub phis: Vec<f64>,
    pub labels: Vec<(i64, usize)>,
    pub lambdas: Vec<f64>,
    /// Column `a` holds `η_a(t_s)` at rows `s·d .. s·d + d`, `s = 0..K`.
    pub samples: CMat,
    /// Conjugation on labels.
    pub alpha: RealStructureMap,
    pub residuals: DiracResiduals,
}

impl DiracEigensystem {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn position(&self, n: i64, j: usize) -> Option<usize> {
        self.labels.iter().position(|&l| l == (n, j))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let lambdas: BTreeMap<String, f64> = self
            .labels
            .iter()
            .zip(&self.lambdas)
            .map(|(&(n, j), &l)| (format!("{n},{j}"), l))
            .collect();
        serde_json::json!({
            "phis": self.phis,
            "lambdas": lambdas,
            "residuals": self.residuals,
        })
    }
}

fn labels_for(spec: &HolonomySpectrum, cutoff: usize) -> Vec<(i64, usize)> {
    let n = cutoff as i64;
    let mut labels = Vec::new();
    for m in -n..=n {
        for j in 0..spec.d() {
            if m < n || spec.is_minus_pi(j) {
                labels.push((m, j));
            }
        }
    }
    labels
}

fn label_alpha(spec: &HolonomySpectrum, labels: &[(i64, usize)]) -> Result<RealStructureMap> {
    let perm = labels
        .iter()
        .map(|&(n, j)| {
            let image = if spec.is_minus_pi(j) { (-n, j) } else { (-n - 1, spec.partner[j]) };
            labels.iter().position(|&l| l == image).expect("label set is closed")
        })
        .collect();
    RealStructureMap::from_permutation(perm)
}

/// `g_j(t_s) = e^{−iφ_j t_s/2π} pt(t_s) v_j` at `s = 0..=K`.
fn frame_samples(spec: &HolonomySpectrum, path: &TransportPath) -> Vec<CMat> {
    let d = spec.d();
    path.samples
        .iter()
        .enumerate()
        .map(|(s, p)| {
            let t = path.time(s);
            let pv = p.map(|x| C64::new(x, 0.0)) * &spec.vectors;
            CMat::from_fn(d, d, |i, j| pv[(i, j)] * C64::from_polar(1.0, -spec.angles[j] * t / (2.0 * PI)))
        })
        .collect()
}

/// Builds `η_{n,j}` and `λ_{n,j}` and checks the eigen-equation by
/// fourth-order centered differences (using antiperiodicity across the
/// endpoint), together with antiperiodicity, orthonormality, conjugation
/// compatibility and spectral symmetry.
pub fn dirac_eigenbasis(spec: &HolonomySpectrum, path: &TransportPath, cutoff: usize) -> Result<DiracEigensystem> {
    if cutoff == 0 {
        return Err(Error::Parameter("cutoff must be positive".into()));
    }
    let d = spec.d();
    if d != path.connection.d() {
        return Err(Error::SpaceMismatch("spectrum and path have different ranks".into()));
    }
    let k = path.steps();
    let labels = labels_for(spec, cutoff);
    let alpha = label_alpha(spec, &labels)?;
    let lambdas: Vec<f64> = labels
        .iter()
        .map(|&(n, j)| n as f64 + 0.5 + spec.angles[j] / (2.0 * PI))
        .collect();
    let g = frame_samples(spec, path);
    let eta_at = |a: usize, s: usize| -> CVec {
        let (n, j) = labels[a];
        let t = path.time(s);
        g[s].column(j) * C64::from_polar(1.0, -(n as f64 + 0.5) * t)
    };
    let m = labels.len();
    let mut samples = CMat::zeros(k * d, m);
    for a in 0..m {
        for s in 0..k {
            samples.view_mut((s * d, a), (d, 1)).copy_from(&eta_at(a, s));
        }
    }

    let h = 2.0 * PI / k as f64;
    let a_samples: Vec<CMat> = (0..k).map(|s| path.connection.eval(path.time(s)).map(|x| C64::new(x, 0.0))).collect();
    let sample = |a: usize, s: i64| -> CVec {
        let ki = k as i64;
        let wrapped = s.rem_euclid(ki) as usize;
        let v = CVec::from_fn(d, |r, _| samples[(wrapped * d + r, a)]);
        // η(t + 2π) = −η(t)
        if s.div_euclid(ki) % 2 == 0 {
            v
        } else {
            -v
        }
    };
    let i = C64::new(0.0, 1.0);
    let eigen = (0..m)
        .map(|a| {
            let mut acc = 0.0;
            for s in 0..k as i64 {
                let deriv = (sample(a, s - 2) - sample(a, s - 1).scale(8.0) + sample(a, s + 1).scale(8.0) - sample(a, s + 2))
                    .unscale(12.0 * h);
                let eta = sample(a, s);
                let r = (deriv + &a_samples[s as usize] * &eta) * i - eta.scale(lambdas[a]);
                acc += r.norm_squared();
            }
            (acc / k as f64).sqrt()
        })
        .fold(0.0, f64::max);
    if eigen > EIGEN_TOL {
        return Err(Error::invariant(
            format!("Dirac eigen-equation at {k} steps; increase the resolution"),
            eigen,
            EIGEN_TOL,
        ));
    }
    let antiperiodicity = (0..m).map(|a| (eta_at(a, k) + eta_at(a, 0)).norm()).fold(0.0, f64::max);
    let gram = samples.adjoint() * &samples / C64::new(k as f64, 0.0);
    let orthonormality = (gram - CMat::identity(m, m)).norm();
    let alpha_compatibility = (0..m)
        .map(|a| {
            let b = alpha.permutation()[a];
            let diff = samples.column(a).map(|z| z.conj()) - samples.column(b);
            (diff.norm_squared() / k as f64).sqrt()
        })
        .fold(0.0, f64::max);
    let mut sorted = lambdas.clone();
    sorted.sort_by(f64::total_cmp);
    let spectral_symmetry = sorted
        .iter()
        .zip(sorted.iter().rev())
        .map(|(x, y)| (x + y).abs())
        .fold(0.0, f64::max);
    Ok(DiracEigensystem {
        cutoff,
        d,
        steps: k,
        phis: spec.angles.clone(),
        labels,
        lambdas,
        samples,
        alpha,
        residuals: DiracResiduals {
            eigen,
            antiperiodicity,
            orthonormality,
            alpha_compatibility,
            spectral_symmetry,
        },
    })
}

/// The positive spectral subspace as a sublagrangian in η coordinates, and
/// its completion by a Lagrangian of the kernel.
pub fn dirac_sublagrangian(es: &DiracEigensystem) -> Result<(Sublagrangian, Lagrangian)> {
    let m = es.dim();
    let positive: Vec<usize> = (0..m).filter(|&a| es.lambdas[a] > KERNEL_TOL).collect();
    let kernel = es.lambdas.iter().filter(|l| l.abs() <= KERNEL_TOL).count();
    if kernel % 2 != 0 {
        return Err(Error::Degenerate(format!("Dirac kernel has odd dimension {kernel}")));
    }
    let frame = CMat::from_fn(m, positive.len(), |r, c| {
        if r == positive[c] {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let sub = Sublagrangian::new(Subspace::in_coordinates(es.alpha.clone(), frame)?)?;
    let l = sub.complete()?;
    let check = is_lagrangian(l.subspace());
    if !check.is_lagrangian {
        return Err(Error::invariant("completed Dirac subspace is Lagrangian", check.isotropy, 1e-10));
    }
    Ok((sub, l))
}

/// The frame `ψ(ξ_{n,j}) = η_{n,j}` as an isometry from label coordinates to
/// sampled functions (columns scaled by `K^{−1/2}`).
#[derive(Clone, Debug)]
pub struct DiracFrame {
    pub labels: Vec<(i64, usize)>,
    pub matrix: CMat,
    /// `‖ψ*ψ − 1‖₂`.
    pub gram_residual: f64,
    /// Largest L² distance between `ψ(ξ_{n,j})` and `η_{n,j}`.
    pub formula_residual: f64,
    /// `‖conj(ψ x) − ψ(α x)‖` over label basis vectors.
    pub alpha_residual: f64,
}

/// Applies the pointwise frame `φ_t = pt(t) V diag(e^{−iφ_j t/2π})` to the
/// sampled plain modes `ξ_{n,j}` and compares with the eigensystem.
pub fn dirac_frame(spec: &HolonomySpectrum, path: &TransportPath, cutoff: usize) -> Result<DiracFrame> {
    let es = dirac_eigenbasis(spec, path, cutoff)?;
    let d = spec.d();
    let k = path.steps();
    let m = es.dim();
    let scale = C64::new((k as f64).sqrt().recip(), 0.0);
    let mut matrix = CMat::zeros(k * d, m);
    for s in 0..k {
        let t = path.time(s);
        let phases = CMat::from_diagonal(&CVec::from_fn(d, |j, _| C64::from_polar(1.0, -spec.angles[j] * t / (2.0 * PI))));
        let frame_t = path.samples[s].map(|x| C64::new(x, 0.0)) * &spec.vectors * phases;
        for (a, &(n, j)) in es.labels.iter().enumerate() {
            let xi = C64::from_polar(1.0, -(n as f64 + 0.5) * t);
            let col: CVec = frame_t.column(j) * (xi * scale);
            matrix.view_mut((s * d, a), (d, 1)).copy_from(&col);
        }
    }
    let gram_residual = (matrix.adjoint() * &matrix - CMat::identity(m, m)).norm();
    let formula_residual = (0..m)
        .map(|a| (matrix.column(a) - es.samples.column(a) * scale).norm())
        .fold(0.0, f64::max);
    let alpha_residual = (0..m)
        .map(|a| (matrix.column(a).map(|z| z.conj()) - matrix.column(es.alpha.permutation()[a])).norm())
        .fold(0.0, f64::max);
    Ok(DiracFrame {
        labels: es.labels,
        matrix,
        gram_residual,
        formula_residual,
        alpha_residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceClassReport {
    pub cutoffs: Vec<usize>,
    /// Per cutoff, the part of `ψ^{−1}(Eig_{>0} D)` outside `L_odd`.
    pub inclusion_residuals: Vec<f64>,
    /// Per cutoff, `‖P_{ψ(L_odd)} − P_{L_D}‖₂²` with `L_D` the completed
    /// Dirac Lagrangian.
    pub hs_sq: Vec<f64>,
    pub verdict: Verdict,
    pub pass: bool,
}

/// Sampled inner products `⟨η_b, η_a⟩` for all label pairs, computed per pair
/// of holonomy directions by one inverse FFT over the grid.
fn eta_gram_fft(spec: &HolonomySpectrum, path: &TransportPath, labels: &[(i64, usize)]) -> CMat {
    let d = spec.d();
    let k = path.steps();
    let g = frame_samples(spec, path);
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(k);
    // h[jk][q] = K⁻¹ Σ_s e^{iq t_s} g_k(t_s)* g_j(t_s)
    let mut h = vec![vec![Vec::new(); d]; d];
    for (kk, row) in h.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let mut buf: Vec<C64> = (0..k).map(|s| g[s].column(kk).dotc(&g[s].column(j))).collect();
            fft.process(&mut buf);
            *cell = buf.into_iter().map(|z| z / k as f64).collect();
        }
    }
    let m = labels.len();
    CMat::from_fn(m, m, |b, a| {
        let (mb, kb) = labels[b];
        let (na, ja) = labels[a];
        let q = (mb - na).rem_euclid(k as i64) as usize;
        h[kb][ja][q]
    })
}

/// Checks `ψ^{−1}(Eig_{>0} D) ⊆ L_odd` and the HS distance between `ψ(L_odd)`
/// and the completed Dirac Lagrangian across cutoffs.
pub fn equivalence_class_check(
    spec: &HolonomySpectrum,
    path: &TransportPath,
    cutoffs: &[usize],
    exec: Exec,
) -> Result<EquivalenceClassReport> {
    let rows = exec.try_map_range(cutoffs.len(), |c| -> Result<(f64, f64)> {
        let es = dirac_eigenbasis(spec, path, cutoffs[c])?;
        let gram = eta_gram_fft(spec, path, &es.labels);
        let m = es.dim();
        let mut inclusion = 0.0;
        for a in (0..m).filter(|&a| es.lambdas[a] > KERNEL_TOL) {
            for b in (0..m).filter(|&b| es.labels[b].0 < 0) {
                inclusion += gram[(b, a)].norm_sqr();
            }
        }
        let (_, ld) = dirac_sublagrangian(&es)?;
        let p1 = CMat::from_fn(m, m, |r, c| {
            if r == c && es.labels[r].0 >= 0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let hs = (p1 - ld.projector()).norm_squared();
        Ok((inclusion.sqrt(), hs))
    })?;
    let inclusion_residuals: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let hs_sq: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let verdict = growth_verdict(cutoffs, &hs_sq);
    let pass = inclusion_residuals.iter().all(|&r| r <= 1e-6) && verdict == Verdict::Bounded;
    Ok(EquivalenceClassReport {
        cutoffs: cutoffs.to_vec(),
        inclusion_residuals,
        hs_sq,
        verdict,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_algebra_loop, rng_for};

    fn generic_connection(seed: u64, d: usize, bandwidth: usize) -> LoopConnection {
        LoopConnection::new(random_algebra_loop(d, bandwidth, 0.3, &mut rng_for(seed, 0))).unwrap()
    }

    #[test]
    fn flat_transport_is_identity() {
        let p = parallel_transport(&LoopConnection::flat(3), 64).unwrap();
        assert!(p.samples().iter().all(|m| (m - RMat::identity(3, 3)).norm() < 1e-14));
        let spec = holonomy_spectrum(&p).unwrap();
        assert!(spec.angles.iter().all(|&a| a == 0.0));
        assert!(parallel_transport(&LoopConnection::flat(3), 63).is_err());
    }

    #[test]
    fn constant_rotation_matches_exponential() {
        for theta in [0.125, 0.3, 0.45] {
            let p = parallel_transport(&LoopConnection::constant_rotation(theta), 1024).unwrap();
            // Closed form: e^{−2πθJ} is rotation by −2πθ.
            let a = -2.0 * PI * theta;
            let exact = RMat::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
            assert!((p.holonomy() - exact).norm() < 1e-8);
            let spec = holonomy_spectrum(&p).unwrap();
            let want = 2.0 * PI * theta;
            assert!((spec.angles[0] + want).abs() < 1e-8 && (spec.angles[1] - want).abs() < 1e-8);
            assert_eq!(spec.partner, vec![1, 0]);
            let conj: CVec = spec.vectors.column(0).map(|z| z.conj());
            assert!((conj - spec.vectors.column(1)).norm() < 1e-14);
        }
    }

    #[test]
    fn holonomy_minus_identity_uses_left_endpoint() {
        let p = parallel_transport(&LoopConnection::constant_rotation(0.5), 512).unwrap();
        let spec = holonomy_spectrum(&p).unwrap();
        assert_eq!(spec.angles, vec![-PI, -PI]);
        assert_eq!(spec.partner, vec![0, 1]);
    }

    #[test]
    fn generic_transport_stays_in_so() {
        let p = parallel_transport(&generic_connection(3, 4, 3), 2048).unwrap();
        assert!(p.orthogonality_residual() < 1e-8);
        let spec = holonomy_spectrum(&p).unwrap();
        assert!(spec.residual < 1e-8);
        assert!(spec.angles.windows(2).all(|w| w[0] <= w[1]));
        assert!(spec.angles.iter().all(|a| (-PI..PI).contains(a)));
    }

    #[test]
    fn flat_eigenvalues_are_half_integers() {
        let p = parallel_transport(&LoopConnection::flat(2), 256).unwrap();
        let spec = holonomy_spectrum(&p).unwrap();
        let es = dirac_eigenbasis(&spec, &p, 3).unwrap();
        for (&(n, _), &l) in es.labels.iter().zip(&es.lambdas) {
            assert_eq!(l, n as f64 + 0.5);
        }
        let (sub, l) = dirac_sublagrangian(&es).unwrap();
        assert_eq!(sub.codim(), 0);
        assert_eq!(l.dim(), es.dim() / 2);
    }

    #[test]
    fn rotation_eigenvalue_after_angle_computation() {
        let p = parallel_transport(&LoopConnection::constant_rotation(0.125), 2048).unwrap();
        let spec = holonomy_spectrum(&p).unwrap();
        let es = dirac_eigenbasis(&spec, &p, 3).unwrap();
        // The +φ direction is index 1 after sorting.
        let a = es.position(0, 1).unwrap();
        assert!((es.lambdas[a] - 0.625).abs() < 1e-8);
        assert!(es.residuals.eigen < 1e-5);
        assert!(es.residuals.antiperiodicity < 1e-6);
        assert!(es.residuals.orthonormality < 1e-6);
        assert!(es.residuals.alpha_compatibility < 1e-6);
        assert!(es.residuals.spectral_symmetry < 1e-6);
    }

    #[test]
    fn generic_connection_residuals() {
        let conn = generic_connection(11, 3, 4);
        let p = parallel_transport(&conn, 2048).unwrap();
        let spec = holonomy_spectrum(&p).unwrap();
        let es = dirac_eigenbasis(&spec, &p, 4).unwrap();
        let r = es.residuals;
        assert!(r.eigen <= 1e-5, "{r:?}");
        assert!(r.antiperiodicity <= 1e-6 && r.orthonormality <= 1e-6);
        assert!(r.alpha_compatibility <= 1e-6 && r.spectral_symmetry <= 1e-6);
        let json = es.to_json();
        assert_eq!(json["lambdas"].as_object().unwrap().len(), es.dim());
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let p = parallel_transport(&LoopConnection::flat(2), 64).unwrap();
        let spec = holonomy_spectrum(&p).unwrap();
        assert!(matches!(dirac_eigenbasis(&spec, &p, 12), Err(Error::Invariant { .. })));
    }

    #[test]
    fn half_rotation_has_two_dimensional_kernel() {
        let p = parallel_transport(&LoopConnection::constant_rotation(0.5), 1024).unwrap();
        let spec = holonomy_spectrum(&p).unwrap();
        let es = dirac_eigenbasis(&spec, &p, 3).unwrap();
        let kernel = es.lambdas.iter().filter(|l| l.abs() <= KERNEL_TOL).count();
        assert_eq!(kernel, 2);
        let (sub, l) = dirac_sublagrangian(&es).unwrap();
        assert_eq!(sub.codim(), 2);
        assert!(is_lagrangian(l.subspace()).is_lagrangian);
        assert!(es.residuals.alpha_compatibility < 1e-6);
    }

    #[test]
    fn frame_is_unitary_and_matches_formula() {
        for conn in [LoopConnection::flat(2), LoopConnection::constant_rotation(0.2), generic_connection(5, 3, 2)] {
            let p = parallel_transport(&conn, 1024).unwrap();
            let spec = holonomy_spectrum(&p).unwrap();
            let f = dirac_frame(&spec, &p, 3).unwrap();
            assert!(f.gram_residual < 1e-6);
            assert!(f.formula_residual < 1e-6);
            assert!(f.alpha_residual < 1e-6);
        }
    }

    #[test]
    fn equivalence_class() {
        let cutoffs = [2, 3, 4, 6];
        let flat = parallel_transport(&LoopConnection::flat(2), 512).unwrap();
        let r = equivalence_class_check(&holonomy_spectrum(&flat).unwrap(), &flat, &cutoffs, Exec::Sequential).unwrap();
        assert!(r.hs_sq.iter().all(|&x| x == 0.0));
        assert!(r.inclusion_residuals.iter().all(|&x| x < 1e-12));
        assert!(r.pass);
        for conn in [LoopConnection::constant_rotation(0.3), LoopConnection::constant_rotation(0.5), generic_connection(7, 3, 3)] {
            let p = parallel_transport(&conn, 1024).unwrap();
            let r = equivalence_class_check(&holonomy_spectrum(&p).unwrap(), &p, &cutoffs, Exec::Parallel).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }
}

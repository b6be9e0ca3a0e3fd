//! Batch checks with named tolerances, shared by the acceptance target and
//! the command-line front end.
//!
//! Each suite returns a list of [`Check`]s (worst residual against its
//! tolerance) and a JSON `result` with per-item detail. Items draw from
//! independent random streams, so the output is identical under
//! [`Exec::Sequential`] and [`Exec::Parallel`].

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Mutex;

use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::clifford::CliffordWord;
use crate::dirac::{dirac_eigenbasis, equivalence_class_check, holonomy_spectrum, parallel_transport, LoopConnection};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::fock::FockSpace;
use crate::gerbe::{lifting_cocycle, trivialize, untwist, CircleCochain, GroupCocycle, Nerve, Trivialization};
use crate::implementer::{
    cocycle_of, implement_exponential, implement_general, induced_fock_map, scalar_uniqueness, section_ul,
    verify_implements, Transport,
};
use crate::lagrangian::{equivalence_diagnostic, Lagrangian, Verdict};
use crate::linalg::unitarity_residual;
use crate::loopgroup::{act, fourier_action, fourier_cocycle_rhs, lie_cocycle_matrices, zero_mode_term_fourier};
use crate::modespace::{ModeSpace, Parity};
use crate::sampling::{
    random_algebra_loop, random_antisymmetric, random_mode_vector, random_orthogonal, random_skew, random_unitary,
    rng_for,
};
use crate::{CMat, CVec, C64};

const DEFAULTS: &[(&str, f64)] = &[
    ("adjoint", 1e-9),
    ("car", 1e-9),
    ("cocycle_delta", 1e-8),
    ("dirac_antiperiodicity", 1e-6),
    ("dirac_eigen", 1e-5),
    ("dirac_inclusion", 1e-6),
    ("dirac_lambda", 1e-8),
    ("dirac_orthonormality", 1e-6),
    ("divergence_exact", 1e-9),
    ("functoriality", 1e-9),
    ("implements", 1e-8),
    ("lie_identity", 1e-10),
    ("lie_offdiagonal", 1e-12),
    ("scalar_uniqueness", 1e-8),
    ("section_cocycle", 1e-10),
    ("untwist", 1e-8),
];

/// Named tolerances with overrides; remembers which ones were read so a
/// report can embed exactly the values it used.
#[derive(Debug)]
pub struct Tolerances {
    values: BTreeMap<String, f64>,
    used: Mutex<BTreeSet<String>>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            values: DEFAULTS.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            used: Mutex::new(BTreeSet::new()),
        }
    }
}

impl Clone for Tolerances {
    fn clone(&self) -> Self {
        Self {
            values: self.values.clone(),
            used: Mutex::new(self.used.lock().expect("poisoned").clone()),
        }
    }
}

impl Tolerances {
    pub fn keys() -> impl Iterator<Item = &'static str> {
        DEFAULTS.iter().map(|&(k, _)| k)
    }

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !self.values.contains_key(key) {
            return Err(Error::Parameter(format!("unknown tolerance {key:?}")));
        }
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::Parameter(format!("tolerance {key} must be a non-negative number")));
        }
        self.values.insert(key.to_string(), value);
        Ok(())
    }

    /// Parses and applies `KEY=VAL`.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| Error::Parameter(format!("tolerance override {spec:?} is not KEY=VAL")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Parameter(format!("tolerance value {v:?} is not a number")))?;
        self.set(k.trim(), v)
    }

    pub fn get(&self, key: &str) -> f64 {
        self.used.lock().expect("poisoned").insert(key.to_string());
        *self.values.get(key).unwrap_or_else(|| panic!("tolerance {key} is not registered"))
    }

    pub fn used(&self) -> BTreeMap<String, f64> {
        let used = self.used.lock().expect("poisoned");
        used.iter().map(|k| (k.clone(), self.values[k])).collect()
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance` (NaN fails).
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }

    /// A yes/no condition, reported as value 0 (holds) or 1 (fails).
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn max(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN-propagating maximum, so a broken residual cannot hide.
    values.into_iter().fold(0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

fn standard_fock(space: &ModeSpace) -> Result<FockSpace> {
    FockSpace::new(&Lagrangian::standard(space)?)
}

/// `{ρ(v), ρ(w)} = 2⟨v, α w⟩` and `ρ(v)* = ρ(α v)` for random pairs.
pub fn car_suite(spaces: &[ModeSpace], pairs: usize, seed: u64, tol: &Tolerances, exec: Exec) -> Result<SuiteReport> {
    let (t_car, t_adj) = (tol.get("car"), tol.get("adjoint"));
    let mut rows = Vec::new();
    let (mut car, mut adj) = (0.0f64, 0.0f64);
    for (si, space) in spaces.iter().enumerate() {
        let fock = standard_fock(space)?;
        let alpha = space.real_structure();
        let res = exec.map_range(pairs, |p| {
            let mut rng = rng_for(seed, ((si as u64) << 32) | p as u64);
            let v = random_mode_vector(space, &mut rng).into_coeffs();
            let w = random_mode_vector(space, &mut rng).into_coeffs();
            let rv = fock.rho_matrix(&v);
            let rw = fock.rho_matrix(&w);
            let anti = &rv * &rw + &rw * &rv;
            let b = alpha.pairing(&v, &w) * 2.0;
            let n = fock.dim();
            let e1 = (anti - CMat::identity(n, n) * b).norm();
            let e2 = (rv.adjoint() - fock.rho_matrix(&alpha.apply(&v))).norm();
            (e1, e2)
        });
        let c = max(res.iter().map(|r| r.0));
        let a = max(res.iter().map(|r| r.1));
        car = max([car, c]);
        adj = max([adj, a]);
        rows.push(json!({
            "parity": space.parity(), "d": space.d(), "N": space.cutoff(),
            "fock_dim": fock.dim(), "pairs": pairs, "car": c, "adjoint": a,
        }));
    }
    Ok(SuiteReport {
        checks: vec![Check::at_most("car_anticommutator", car, t_car), Check::at_most("adjoint", adj, t_adj)],
        result: json!({ "spaces": rows }),
    })
}

/// Implementers of `g = exp(X)` by both constructions, their scalar
/// agreement, and triviality of the cocycle on the `U(L)` section.
pub fn implementer_suite(space: &ModeSpace, count: usize, scale: f64, seed: u64, tol: &Tolerances, exec: Exec) -> Result<SuiteReport> {
    let (t_imp, t_uni, t_sec) = (tol.get("implements"), tol.get("scalar_uniqueness"), tol.get("section_cocycle"));
    let fock = standard_fock(space)?;
    let res = exec.try_map_range(count, |s| -> Result<[f64; 3]> {
        let mut rng = rng_for(seed, s as u64);
        let x = random_skew(space, scale, &mut rng);
        let g = x.exp();
        let u1 = implement_general(&g, &fock)?;
        let u2 = implement_exponential(&x, &fock)?;
        let imp = u1.residual().max(verify_implements(&fock, u2.matrix(), g.matrix()));
        let uni = scalar_uniqueness(u1.matrix(), u2.matrix()).1;
        let t1 = random_unitary(fock.m(), &mut rng);
        let t2 = random_unitary(fock.m(), &mut rng);
        let a = section_ul(&fock, &t1)?;
        let b = section_ul(&fock, &t2)?;
        let ab = section_ul(&fock, &(&t1 * &t2))?;
        let c = cocycle_of(a.matrix(), b.matrix(), ab.matrix())?;
        let sec = (c.value - C64::new(1.0, 0.0)).norm().max(c.fit_residual);
        Ok([imp, uni, sec])
    })?;
    let col = |i: usize| max(res.iter().map(|r| r[i]));
    Ok(SuiteReport {
        checks: vec![
            Check::at_most("verify_implements", col(0), t_imp),
            Check::at_most("scalar_uniqueness", col(1), t_uni),
            Check::at_most("section_cocycle", col(2), t_sec),
        ],
        result: json!({
            "parity": space.parity(), "d": space.d(), "N": space.cutoff(),
            "fock_dim": fock.dim(), "count": count,
        }),
    })
}

#[derive(Clone, Debug)]
pub struct LieTableConfig {
    pub parities: Vec<Parity>,
    pub ds: Vec<usize>,
    pub kmax: i64,
    pub pairs: usize,
    pub cutoff: usize,
}

/// Lie-cocycle identity for `f_1 = X e^{ikt}`, `f_2 = Y e^{imt}` with random
/// antisymmetric `X, Y`, over all `|k|, |m| ≤ kmax`.
///
/// One identity check and one vanishing check (`k + m ≠ 0`) is reported per
/// (parity, d). Each table row also carries the error after adding the
/// mode-zero term, which accounts for the full discrepancy on even spaces.
pub fn lie_table(cfg: &LieTableConfig, seed: u64, tol: &Tolerances, exec: Exec) -> Result<SuiteReport> {
    let (t_id, t_off) = (tol.get("lie_identity"), tol.get("lie_offdiagonal"));
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for &parity in &cfg.parities {
        for &d in &cfg.ds {
            let space = ModeSpace::new(parity, d, cfg.cutoff)?;
            let required = 2 * cfg.kmax as usize + 1;
            if cfg.cutoff < required {
                return Err(Error::CutoffTooSmall { cutoff: cfg.cutoff, required });
            }
            let l = Lagrangian::standard(&space)?;
            let freqs: Vec<(i64, i64)> = (-cfg.kmax..=cfg.kmax)
                .flat_map(|k| (-cfg.kmax..=cfg.kmax).map(move |m| (k, m)))
                .collect();
            let stream0 = ((parity == Parity::Even) as u64) << 40 | (d as u64) << 32;
            let table = exec.try_map_range(freqs.len(), |fi| -> Result<[f64; 4]> {
                let (k, m) = freqs[fi];
                let mut worst = [0.0f64; 4];
                for p in 0..cfg.pairs {
                    let mut rng = rng_for(seed, stream0 | (fi * cfg.pairs + p) as u64);
                    let x = random_antisymmetric(d, &mut rng).map(|v| C64::new(v, 0.0));
                    let y = random_antisymmetric(d, &mut rng).map(|v| C64::new(v, 0.0));
                    let c1 = [(k, x)];
                    let c2 = [(m, y)];
                    let a1 = fourier_action(&space, &c1)?;
                    let a2 = fourier_action(&space, &c2)?;
                    let lhs = lie_cocycle_matrices(&a1, &a2, &l);
                    let rhs = fourier_cocycle_rhs(&c1, &c2);
                    let zero = zero_mode_term_fourier(&c1, &c2, &space, &l);
                    worst[0] = worst[0].max((lhs - rhs).norm());
                    worst[1] = worst[1].max((lhs - rhs + zero).norm());
                    if k + m != 0 {
                        worst[2] = worst[2].max(lhs.norm().max(rhs.norm()));
                    }
                    worst[3] = worst[3].max(rhs.norm());
                }
                Ok(worst)
            })?;
            for (&(k, m), w) in freqs.iter().zip(&table) {
                rows.push(json!({
                    "parity": parity, "d": d, "k": k, "m": m,
                    "error": w[0], "error_with_zero_mode": w[1], "max_rhs": w[3],
                }));
            }
            checks.push(Check::at_most(format!("lie_identity[{parity},d={d}]"), max(table.iter().map(|w| w[0])), t_id));
            checks.push(Check::at_most(format!("lie_offdiagonal[{parity},d={d}]"), max(table.iter().map(|w| w[2])), t_off));
        }
    }
    Ok(SuiteReport {
        checks,
        result: json!({ "cutoff": cfg.cutoff, "pairs": cfg.pairs, "rows": rows }),
    })
}

/// Eigenvalues for flat and constant-rotation connections against the
/// closed-form angles, and eigen-residuals of generic connections.
pub fn dirac_suite(generic: usize, bandwidth: usize, steps: usize, cutoff: usize, seed: u64, tol: &Tolerances, exec: Exec) -> Result<SuiteReport> {
    let (t_l, t_e, t_a, t_o) = (
        tol.get("dirac_lambda"),
        tol.get("dirac_eigen"),
        tol.get("dirac_antiperiodicity"),
        tol.get("dirac_orthonormality"),
    );
    // (connection, closed-form angles sorted ascending)
    let mut exact: Vec<(LoopConnection, Vec<f64>)> = vec![
        (LoopConnection::flat(2), vec![0.0, 0.0]),
        (LoopConnection::flat(3), vec![0.0, 0.0, 0.0]),
    ];
    for theta in [0.125, 0.2, 0.3, 0.45] {
        let phi = 2.0 * std::f64::consts::PI * theta;
        exact.push((LoopConnection::constant_rotation(theta), vec![-phi, phi]));
    }
    let mut lambda_err = 0.0f64;
    let mut rows = Vec::new();
    for (conn, phis) in &exact {
        let path = parallel_transport(conn, steps)?;
        let spec = holonomy_spectrum(&path)?;
        let es = dirac_eigenbasis(&spec, &path, cutoff)?;
        let err = max(es.labels.iter().zip(&es.lambdas).map(|(&(n, j), &l)| {
            (l - (n as f64 + 0.5 + phis[j] / (2.0 * std::f64::consts::PI))).abs()
        }));
        lambda_err = max([lambda_err, err]);
        rows.push(json!({ "phis": spec.angles, "lambda_error": err, "eigen": es.residuals.eigen }));
    }
    let res = exec.try_map_range(generic, |s| -> Result<[f64; 3]> {
        let f = random_algebra_loop(3, bandwidth, 0.3, &mut rng_for(seed, s as u64));
        let path = parallel_transport(&LoopConnection::new(f)?, steps)?;
        let spec = holonomy_spectrum(&path)?;
        let r = dirac_eigenbasis(&spec, &path, cutoff)?.residuals;
        Ok([r.eigen, r.antiperiodicity, r.orthonormality])
    })?;
    let col = |i: usize| max(res.iter().map(|r| r[i]));
    Ok(SuiteReport {
        checks: vec![
            Check::at_most("dirac_lambda", lambda_err, t_l),
            Check::at_most("dirac_eigen_residual", col(0), t_e),
            Check::at_most("dirac_antiperiodicity", col(1), t_a),
            Check::at_most("dirac_orthonormality", col(2), t_o),
        ],
        result: json!({
            "steps": steps, "cutoff": cutoff, "exact": rows,
            "generic": res.iter().map(|r| json!({"eigen": r[0], "antiperiodicity": r[1], "orthonormality": r[2]})).collect::<Vec<_>>(),
        }),
    })
}

/// Equivalence-class check for random connections across cutoffs.
#[allow(clippy::too_many_arguments)]
pub fn dirac_equivalence_suite(
    count: usize,
    d: usize,
    bandwidth: usize,
    steps: usize,
    cutoffs: &[usize],
    seed: u64,
    tol: &Tolerances,
    exec: Exec,
) -> Result<SuiteReport> {
    let t_inc = tol.get("dirac_inclusion");
    let reports = exec.try_map_range(count, |s| {
        let f = random_algebra_loop(d, bandwidth, 0.3, &mut rng_for(seed, s as u64));
        let path = parallel_transport(&LoopConnection::new(f)?, steps)?;
        let spec = holonomy_spectrum(&path)?;
        equivalence_class_check(&spec, &path, cutoffs, Exec::Sequential)
    })?;
    let inclusion = max(reports.iter().flat_map(|r| r.inclusion_residuals.iter().copied()));
    let unbounded = reports.iter().filter(|r| r.verdict != Verdict::Bounded).count();
    Ok(SuiteReport {
        checks: vec![
            Check::at_most("dirac_inclusion", inclusion, t_inc),
            Check::holds("hs_bounded", unbounded == 0),
        ],
        result: serde_json::to_value(&reports)?,
    })
}

/// The three-chart cover with a two-component triple overlap and a
/// 2-cocycle pairing to `4π/3` with its fundamental cycle.
pub fn obstructed_example() -> (Nerve, CircleCochain) {
    let nerve = Nerve::two_component_triangle();
    let third = 2.0 * std::f64::consts::PI / 3.0;
    let c = CircleCochain::new(&nerve, 2, vec![third, -third]).expect("two triples");
    (nerve, c)
}

/// Lifting cocycle of random transitions on a complete nerve, its
/// trivialization and untwisting, and the obstructed example.
pub fn gerbe_suite(charts: usize, space: &ModeSpace, seed: u64, tol: &Tolerances, exec: Exec) -> Result<SuiteReport> {
    let (t_delta, t_un, t_imp) = (tol.get("cocycle_delta"), tol.get("untwist"), tol.get("implements"));
    let nerve = Nerve::complete(charts);
    let fock = standard_fock(space)?;
    let h: Vec<_> = (0..charts)
        .map(|i| random_orthogonal(space, 1.0, &mut rng_for(seed, i as u64)))
        .collect();
    let gc = GroupCocycle::from_charts(&nerve, &h)?;
    let data = lifting_cocycle(&gc, &fock, exec)?;
    let delta = data.delta_residual();
    let (strict, imp, trivial) = match trivialize(&nerve, &data.two_cocycle)? {
        Trivialization::Trivial(b) => {
            let un = untwist(&data.twisted_bundle(), &b)?;
            (un.cocycle_residual, un.implements_residual, true)
        }
        Trivialization::Obstructed { .. } => (f64::NAN, f64::NAN, false),
    };
    let (on, oc) = obstructed_example();
    let obstruction = match trivialize(&on, &oc)? {
        Trivialization::Obstructed { cycle, pairing } => Some(json!({ "cycle": cycle, "pairing": pairing })),
        Trivialization::Trivial(_) => None,
    };
    Ok(SuiteReport {
        checks: vec![
            Check::at_most("cocycle_delta", delta, t_delta),
            Check::holds("lifting_cocycle_trivializable", trivial),
            Check::at_most("untwist_strict", strict, t_un),
            Check::at_most("untwist_implements", imp, t_imp),
            Check::holds("obstructed_example_reported", obstruction.is_some()),
        ],
        result: json!({
            "charts": charts,
            "two_cocycle": data.two_cocycle.to_json(&nerve),
            "obstruction": obstruction,
        }),
    })
}

/// `Λ_ν ρ(v) = ρ'(νv) Λ_ν` and `Λ_ν a = Cl(ν)(a) Λ_ν` for random `ν: V → V'`
/// and random Clifford words `a`.
pub fn functoriality_suite(source: &ModeSpace, target: &ModeSpace, count: usize, seed: u64, tol: &Tolerances, exec: Exec) -> Result<SuiteReport> {
    let t = tol.get("functoriality");
    let l = Lagrangian::standard(source)?;
    let f1 = FockSpace::new(&l)?;
    let base = Transport::canonical(source, target)?;
    let res = exec.try_map_range(count, |s| -> Result<[f64; 3]> {
        let mut rng = rng_for(seed, s as u64);
        let nu = base.then(&random_orthogonal(target, 1.0, &mut rng))?;
        let f2 = FockSpace::new(&nu.push_lagrangian(&l)?)?;
        let lam = induced_fock_map(nu.matrix(), &f1, &f2)?;
        let n = source.dim();
        let mut rho = 0.0f64;
        for k in 0..n {
            let mut e = CVec::zeros(n);
            e[k] = C64::new(1.0, 0.0);
            let lhs = &lam * f1.rho_matrix(&e);
            let rhs = f2.rho_matrix(&(nu.matrix() * &e)) * &lam;
            rho = rho.max((lhs - rhs).norm());
        }
        let mut word = CliffordWord::scalar(source, C64::new(rng.gen_range(-1.0..1.0), 0.0));
        for _ in 0..3 {
            let letters: Vec<_> = (0..3).map(|_| random_mode_vector(source, &mut rng)).collect();
            word = word.add(&CliffordWord::product_of(source, &letters)?)?;
        }
        let lhs = &lam * f1.clifford_matrix(&word)?;
        let rhs = f2.clifford_matrix(&nu.transport_clifford(&word)?)? * &lam;
        let scale = lhs.norm().max(1.0);
        Ok([rho, (lhs - rhs).norm() / scale, unitarity_residual(&lam)])
    })?;
    let col = |i: usize| max(res.iter().map(|r| r[i]));
    Ok(SuiteReport {
        checks: vec![
            Check::at_most("functoriality_rho", col(0), t),
            Check::at_most("functoriality_clifford", col(1), t),
            Check::at_most("induced_unitarity", col(2), t),
        ],
        result: json!({ "count": count, "source_dim": source.dim(), "fock_dim": f1.dim() }),
    })
}

/// `L_odd` against `α(L_odd)` diverges with `hs² = N·d`; `L_odd` against
/// `exp(X_f) L_odd` for band-limited algebra loops `f` stays bounded.
pub fn divergence_suite(d: usize, cutoffs: &[usize], loops: usize, seed: u64, tol: &Tolerances) -> Result<SuiteReport> {
    let t = tol.get("divergence_exact");
    let alpha = equivalence_diagnostic(cutoffs, |n| {
        let l = Lagrangian::standard_odd(&ModeSpace::odd(d, n)?)?;
        Ok((l.clone(), l.alpha_image()))
    })?;
    let exact = max(alpha.hs_sq.iter().zip(cutoffs).map(|(h, &n)| (h - (n * d) as f64).abs()));
    let bounded = (0..loops)
        .map(|s| {
            let f = random_algebra_loop(d, 2, 0.5, &mut rng_for(seed, s as u64));
            equivalence_diagnostic(cutoffs, |n| {
                let space = ModeSpace::odd(d, n)?;
                let l = Lagrangian::standard_odd(&space)?;
                let g = act(&f, &space)?.skew()?.exp();
                let gl = l.transform(g.matrix())?;
                Ok((l, gl))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        checks: vec![
            Check::at_most("alpha_hs_equals_nd", exact, t),
            Check::holds("alpha_flagged_divergent", alpha.verdict == Verdict::Divergent),
            Check::holds("band_limited_flagged_bounded", bounded.iter().all(|r| r.verdict == Verdict::Bounded)),
        ],
        result: json!({ "alpha": alpha, "band_limited": bounded }),
    })
}

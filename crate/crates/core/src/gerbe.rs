//! Čech data over finite covers: nerves, U(1)-valued cochains stored as
//! angles, lifting-gerbe cocycles of implementer lifts, trivializations,
//! untwisting, refinements and associated-bundle transition data.
//!
//! Conventions: simplices are increasing chart tuples. For lifts `U_ij` of
//! transitions `g_ij` the 2-cocycle is defined by
//! `U_ij U_jk = e^{i c_ijk} U_ik`, and
//!
//! ```text
//! (δa)_ij   = a_j − a_i
//! (δb)_ijk  = b_jk − b_ik + b_ij
//! (δc)_ijkl = c_jkl − c_ikl + c_ijl − c_ijk
//! ```
//!
//! A trivialization is a 1-cochain with `δb ≡ −c (mod 2π)`; then
//! `e^{i b_ij} U_ij` is a strict cocycle.
//!
//! Triples may be listed more than once, which models overlaps with several
//! connected components; a quadruple may not have such a triple as a face.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::clifford::OrthogonalMap;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::exterior::{wedge_power, SubsetBasis};
use crate::fock::FockSpace;
use crate::implementer::{cocycle_of, implement_general, verify_implements, Implementer};
use crate::modespace::ModeSpace;
use crate::{CMat, RMat, C64};

/// Tolerance for cocycle and coboundary identities modulo 2π.
pub const COCYCLE_TOL: f64 = 1e-8;
/// Default bound on `2^{dim V}` for the Clifford representation.
pub const MAX_CLIFFORD_DIM: usize = 1 << 8;

/// Distance from `x` to the nearest multiple of 2π.
pub fn mod_2pi_residual(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    r.min(2.0 * PI - r)
}

/// Representative of `x` in `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Nerve {
    charts: usize,
    doubles: Vec<[usize; 2]>,
    triples: Vec<[usize; 3]>,
    quads: Vec<[usize; 4]>,
    double_index: HashMap<[usize; 2], usize>,
    triple_index: HashMap<[usize; 3], Vec<usize>>,
}

impl Nerve {
    pub fn new(
        charts: usize,
        doubles: Vec<[usize; 2]>,
        triples: Vec<[usize; 3]>,
        quads: Vec<[usize; 4]>,
    ) -> Result<Self> {
        let mut double_index = HashMap::new();
        for (i, d) in doubles.iter().enumerate() {
            if d[1] >= charts || d[0] >= d[1] {
                return Err(Error::Nerve(format!("double {d:?} is not an increasing pair of charts")));
            }
            if double_index.insert(*d, i).is_some() {
                return Err(Error::Nerve(format!("double {d:?} listed twice")));
            }
        }
        let mut triple_index: HashMap<[usize; 3], Vec<usize>> = HashMap::new();
        for (i, t) in triples.iter().enumerate() {
            if t[2] >= charts || t[0] >= t[1] || t[1] >= t[2] {
                return Err(Error::Nerve(format!("triple {t:?} is not increasing")));
            }
            for face in [[t[1], t[2]], [t[0], t[2]], [t[0], t[1]]] {
                if !double_index.contains_key(&face) {
                    return Err(Error::Nerve(format!("face {face:?} of triple {t:?} is missing")));
                }
            }
            triple_index.entry(*t).or_default().push(i);
        }
        for q in &quads {
            if q[3] >= charts || !(q[0] < q[1] && q[1] < q[2] && q[2] < q[3]) {
                return Err(Error::Nerve(format!("quadruple {q:?} is not increasing")));
            }
            for face in quad_faces(q) {
                match triple_index.get(&face).map(Vec::len) {
                    None => return Err(Error::Nerve(format!("face {face:?} of quadruple {q:?} is missing"))),
                    Some(1) => {}
                    Some(_) => {
                        return Err(Error::Nerve(format!(
                            "face {face:?} of quadruple {q:?} has several components"
                        )))
                    }
                }
            }
        }
        Ok(Self {
            charts,
            doubles,
            triples,
            quads,
            double_index,
            triple_index,
        })
    }

    /// The nerve of a cover in which all charts intersect (all simplices up
    /// to dimension three).
    pub fn complete(charts: usize) -> Self {
        let mut doubles = Vec::new();
        let mut triples = Vec::new();
        let mut quads = Vec::new();
        for i in 0..charts {
            for j in i + 1..charts {
                doubles.push([i, j]);
                for k in j + 1..charts {
                    triples.push([i, j, k]);
                    for l in k + 1..charts {
                        quads.push([i, j, k, l]);
                    }
                }
            }
        }
        Self::new(charts, doubles, triples, quads).expect("complete nerve is consistent")
    }

    /// Three charts whose triple overlap has two components, as for the cover
    /// of the 2-sphere by three slices meeting at the poles.
    pub fn two_component_triangle() -> Self {
        Self::new(3, vec![[0, 1], [0, 2], [1, 2]], vec![[0, 1, 2], [0, 1, 2]], vec![])
            .expect("consistent")
    }

    pub fn charts(&self) -> usize {
        self.charts
    }

    pub fn doubles(&self) -> &[[usize; 2]] {
        &self.doubles
    }

    pub fn triples(&self) -> &[[usize; 3]] {
        &self.triples
    }

    pub fn quads(&self) -> &[[usize; 4]] {
        &self.quads
    }

    pub fn double(&self, i: usize, j: usize) -> Option<usize> {
        self.double_index.get(&[i, j]).copied()
    }

    /// Index of a triple with a single component.
    pub fn triple(&self, t: [usize; 3]) -> Option<usize> {
        match self.triple_index.get(&t) {
            Some(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }

    pub fn simplices(&self, degree: usize) -> usize {
        match degree {
            0 => self.charts,
            1 => self.doubles.len(),
            2 => self.triples.len(),
            3 => self.quads.len(),
            _ => 0,
        }
    }

    /// Integer matrix of `δ` from 1-cochains to 2-cochains.
    pub fn delta1_matrix(&self) -> Vec<Vec<i64>> {
        self.triples
            .iter()
            .map(|t| {
                let mut row = vec![0i64; self.doubles.len()];
                row[self.double_index[&[t[1], t[2]]]] += 1;
                row[self.double_index[&[t[0], t[2]]]] -= 1;
                row[self.double_index[&[t[0], t[1]]]] += 1;
                row
            })
            .collect()
    }

    pub fn to_json(&self) -> NerveJson {
        NerveJson {
            charts: self.charts,
            doubles: self.doubles.clone(),
            triples: self.triples.clone(),
            quads: self.quads.clone(),
        }
    }

    pub fn from_json(j: &NerveJson) -> Result<Self> {
        Self::new(j.charts, j.doubles.clone(), j.triples.clone(), j.quads.clone())
    }

    /// Key of the simplex at `index` in the given degree: `"i,j,k"`, with a
    /// `#r` suffix for the `r`-th repeated component (`r ≥ 1`).
    pub fn key(&self, degree: usize, index: usize) -> String {
        let join = |s: &[usize]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match degree {
            0 => index.to_string(),
            1 => join(&self.doubles[index]),
            2 => {
                let t = self.triples[index];
                let r = self.triple_index[&t].iter().position(|&i| i == index).expect("indexed");
                if r == 0 {
                    join(&t)
                } else {
                    format!("{}#{r}", join(&t))
                }
            }
            3 => join(&self.quads[index]),
            _ => String::new(),
        }
    }
}

fn quad_faces(q: &[usize; 4]) -> [[usize; 3]; 4] {
    [[q[1], q[2], q[3]], [q[0], q[2], q[3]], [q[0], q[1], q[3]], [q[0], q[1], q[2]]]
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NerveJson {
    pub charts: usize,
    pub doubles: Vec<[usize; 2]>,
    #[serde(default)]
    pub triples: Vec<[usize; 3]>,
    #[serde(default)]
    pub quads: Vec<[usize; 4]>,
}

/// Angles on the simplices of one degree, in the nerve's listing order.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleCochain {
    pub degree: usize,
    pub values: Vec<f64>,
}

impl CircleCochain {
    pub fn zero(nerve: &Nerve, degree: usize) -> Self {
        Self {
            degree,
            values: vec![0.0; nerve.simplices(degree)],
        }
    }

    pub fn new(nerve: &Nerve, degree: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nerve.simplices(degree) {
            return Err(Error::Parameter(format!(
                "degree-{degree} cochain needs {} values, got {}",
                nerve.simplices(degree),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("cochain angles must be finite".into()));
        }
        Ok(Self { degree, values })
    }

    pub fn coboundary(&self, nerve: &Nerve) -> Result<CircleCochain> {
        let v = &self.values;
        let values = match self.degree {
            0 => nerve.doubles.iter().map(|d| v[d[1]] - v[d[0]]).collect(),
            1 => nerve
                .triples
                .iter()
                .map(|t| {
                    let e = |a, b| v[nerve.double_index[&[a, b]]];
                    e(t[1], t[2]) - e(t[0], t[2]) + e(t[0], t[1])
                })
                .collect(),
            2 => nerve
                .quads
                .iter()
                .map(|q| {
                    let f = quad_faces(q);
                    let c = |t: [usize; 3]| v[nerve.triple(t).expect("validated")];
                    c(f[0]) - c(f[1]) + c(f[2]) - c(f[3])
                })
                .collect(),
            d => return Err(Error::Parameter(format!("no coboundary from degree {d}"))),
        };
        Ok(CircleCochain {
            degree: self.degree + 1,
            values,
        })
    }

    pub fn neg(&self) -> CircleCochain {
        CircleCochain {
            degree: self.degree,
            values: self.values.iter().map(|x| -x).collect(),
        }
    }

    pub fn sub(&self, other: &CircleCochain) -> Result<CircleCochain> {
        if self.degree != other.degree || self.values.len() != other.values.len() {
            return Err(Error::Parameter("cochains of different shape".into()));
        }
        Ok(CircleCochain {
            degree: self.degree,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// Largest distance of an entry from 2πℤ.
    pub fn max_mod_2pi(&self) -> f64 {
        self.values.iter().map(|&x| mod_2pi_residual(x)).fold(0.0, f64::max)
    }

    pub fn to_json(&self, nerve: &Nerve) -> CochainJson {
        CochainJson {
            degree: self.degree,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| (nerve.key(self.degree, i), v))
                .collect(),
        }
    }

    /// Parses a cochain; missing simplices default to zero.
    pub fn from_json(nerve: &Nerve, j: &CochainJson) -> Result<Self> {
        let keys: HashMap<String, usize> = (0..nerve.simplices(j.degree))
            .map(|i| (nerve.key(j.degree, i), i))
            .collect();
        let mut values = vec![0.0; nerve.simplices(j.degree)];
        for (k, v) in &j.values {
            let normalized: String = k.chars().filter(|c| !c.is_whitespace()).collect();
            let i = keys
                .get(&normalized)
                .ok_or_else(|| Error::Json(format!("cochain key {k:?} is not a degree-{} simplex", j.degree)))?;
            values[*i] = *v;
        }
        Self::new(nerve, j.degree, values)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CochainJson {
    pub degree: usize,
    pub values: BTreeMap<String, f64>,
}

/// Transition maps `g_ij` on the doubles of a nerve.
#[derive(Clone, Debug)]
pub struct GroupCocycle {
    nerve: Nerve,
    maps: Vec<OrthogonalMap>,
}

impl GroupCocycle {
    pub fn new(nerve: &Nerve, maps: Vec<OrthogonalMap>) -> Result<Self> {
        if maps.len() != nerve.doubles.len() {
            return Err(Error::Parameter("one transition per double is required".into()));
        }
        let gc = Self {
            nerve: nerve.clone(),
            maps,
        };
        let r = gc.cocycle_residual();
        if r > COCYCLE_TOL {
            return Err(Error::invariant("g_ij g_jk = g_ik", r, COCYCLE_TOL));
        }
        Ok(gc)
    }

    /// `g_ij = h_i h_j⁻¹` from per-chart maps.
    pub fn from_charts(nerve: &Nerve, charts: &[OrthogonalMap]) -> Result<Self> {
        if charts.len() != nerve.charts {
            return Err(Error::Parameter("one map per chart is required".into()));
        }
        let maps = nerve
            .doubles
            .iter()
            .map(|d| charts[d[0]].compose(&charts[d[1]].inverse()))
            .collect::<Result<_>>()?;
        Self::new(nerve, maps)
    }

    pub fn nerve(&self) -> &Nerve {
        &self.nerve
    }

    pub fn maps(&self) -> &[OrthogonalMap] {
        &self.maps
    }

    pub fn space(&self) -> Option<&ModeSpace> {
        self.maps.first().map(|g| g.space())
    }

    /// `g_ab` for any ordered pair of charts, with `g_aa = 1` and
    /// `g_ba = g_ab⁻¹`.
    pub fn transition(&self, a: usize, b: usize, space: &ModeSpace) -> Option<OrthogonalMap> {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Equal => Some(OrthogonalMap::identity(space)),
            Less => self.nerve.double(a, b).map(|i| self.maps[i].clone()),
            Greater => self.nerve.double(b, a).map(|i| self.maps[i].inverse()),
        }
    }

    pub fn cocycle_residual(&self) -> f64 {
        self.nerve
            .triples
            .iter()
            .map(|t| {
                let g = |a, b| &self.maps[self.nerve.double_index[&[a, b]]];
                (g(t[0], t[1]).matrix() * g(t[1], t[2]).matrix() - g(t[0], t[2]).matrix()).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Lifts of a group cocycle to implementers, with their 2-cocycle.
#[derive(Clone, Debug)]
pub struct LiftingGerbeData {
    pub cocycle: GroupCocycle,
    pub fock: FockSpace,
    pub lifts: Vec<Implementer>,
    pub two_cocycle: CircleCochain,
}

impl LiftingGerbeData {
    /// ‖δc‖ modulo 2π over the quadruples.
    pub fn delta_residual(&self) -> f64 {
        self.two_cocycle
            .coboundary(&self.cocycle.nerve)
            .map(|d| d.max_mod_2pi())
            .unwrap_or(f64::INFINITY)
    }

    /// Largest `verify_implements` residual over the lifts.
    pub fn implements_residual(&self) -> f64 {
        self.lifts.iter().map(Implementer::residual).fold(0.0, f64::max)
    }

    /// Largest `‖U_ij U_jk − e^{ic_ijk} U_ik‖` over the triples.
    pub fn twisted_residual(&self) -> f64 {
        let nerve = &self.cocycle.nerve;
        nerve
            .triples
            .iter()
            .enumerate()
            .map(|(t_i, t)| {
                let u = |a, b| self.lifts[nerve.double_index[&[a, b]]].matrix();
                let phase = C64::from_polar(1.0, self.two_cocycle.values[t_i]);
                (u(t[0], t[1]) * u(t[1], t[2]) - u(t[0], t[2]) * phase).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Per-chart Fock spaces with this data as transition maps.
    pub fn twisted_bundle(&self) -> TwistedFockBundleData {
        TwistedFockBundleData {
            fibres: vec![self.fock.clone(); self.cocycle.nerve.charts],
            data: self.clone(),
        }
    }
}

/// The twisted Fock bundle: a Fock space per chart, glued by the lifts.
#[derive(Clone, Debug)]
pub struct TwistedFockBundleData {
    pub fibres: Vec<FockSpace>,
    pub data: LiftingGerbeData,
}

impl TwistedFockBundleData {
    /// Largest residual of `U_ij ρ(v) U_ij* = ρ(g_ij v)`, the compatibility of
    /// the transitions with the Clifford actions of neighbouring charts.
    pub fn clifford_residual(&self) -> f64 {
        self.data
            .lifts
            .iter()
            .map(|u| verify_implements(u.fock(), u.matrix(), u.implements().matrix()))
            .fold(0.0, f64::max)
    }
}

/// Lifts every transition with [`implement_general`] and extracts
/// `c_ijk = arg(U_ij U_jk U_ik⁻¹)`.
pub fn lifting_cocycle(gc: &GroupCocycle, fock: &FockSpace, exec: Exec) -> Result<LiftingGerbeData> {
    let lifts = exec.try_map_range(gc.maps.len(), |i| implement_general(&gc.maps[i], fock))?;
    lifting_data_from_lifts(gc, fock, lifts)
}

/// Builds lifting data from chosen lifts of `gc` (any phases).
pub fn lifting_data_from_lifts(gc: &GroupCocycle, fock: &FockSpace, lifts: Vec<Implementer>) -> Result<LiftingGerbeData> {
    let nerve = &gc.nerve;
    let values = nerve
        .triples
        .iter()
        .map(|t| {
            let u = |a, b| lifts[nerve.double_index[&[a, b]]].matrix();
            Ok(cocycle_of(u(t[0], t[1]), u(t[1], t[2]), u(t[0], t[2]))?.angle())
        })
        .collect::<Result<Vec<_>>>()?;
    let data = LiftingGerbeData {
        cocycle: gc.clone(),
        fock: fock.clone(),
        lifts,
        two_cocycle: CircleCochain { degree: 2, values },
    };
    let r = data.delta_residual();
    if r > COCYCLE_TOL {
        return Err(Error::invariant("δc ≡ 0 mod 2π", r, COCYCLE_TOL));
    }
    Ok(data)
}

/// Outcome of [`trivialize`].
#[derive(Clone, Debug, PartialEq)]
pub enum Trivialization {
    /// `b` with `δb ≡ −c (mod 2π)`.
    Trivial(CircleCochain),
    /// An integer 2-cycle `k` (coefficients on triples, `k·δ = 0`) with
    /// `k·c/2π` not an integer, certifying that no trivialization exists.
    Obstructed { cycle: Vec<i64>, pairing: f64 },
}

/// Decides whether a 2-cocycle is a coboundary modulo 2π and finds `b`.
///
/// The integer matrix of `δ` on 1-cochains is brought to echelon form by
/// unimodular integer row operations, `P δ = E`. Rows of `P` beyond the rank
/// are integer 2-cycles, and `c` is trivializable exactly when each of them
/// pairs with `c` into 2πℤ. In that case the integer corrections are fixed
/// from those rows and `δb = −c + 2πz` is solved over the reals.
pub fn trivialize(nerve: &Nerve, c: &CircleCochain) -> Result<Trivialization> {
    if c.degree != 2 || c.values.len() != nerve.triples.len() {
        return Err(Error::Parameter("trivialize needs a 2-cochain on the nerve".into()));
    }
    let dc = c.coboundary(nerve)?.max_mod_2pi();
    if dc > COCYCLE_TOL {
        return Err(Error::Precondition(format!("δc is not zero mod 2π (residual {dc:.3e})")));
    }
    let d = nerve.delta1_matrix();
    let (p, rank) = integer_row_echelon(&d, nerve.doubles.len());
    let t = nerve.triples.len();
    let mut w = vec![0.0; t];
    for (row, wr) in p.iter().zip(w.iter_mut()).skip(rank) {
        let pairing: f64 = row.iter().zip(&c.values).map(|(k, v)| *k as f64 * v).sum::<f64>() / (2.0 * PI);
        if (pairing - pairing.round()).abs() > 1e-6 {
            return Ok(Trivialization::Obstructed {
                cycle: row.clone(),
                pairing,
            });
        }
        *wr = pairing.round();
    }
    // z = P⁻¹ w, so that −c + 2πz has zero pairing with every cycle.
    let pm = RMat::from_fn(t, t, |i, j| p[i][j] as f64);
    let pinv = pm.try_inverse().ok_or_else(|| Error::Degenerate("row transform is singular".into()))?;
    let z = &pinv * nalgebra::DVector::from_vec(w);
    let rhs = nalgebra::DVector::from_fn(t, |i, _| -c.values[i] + 2.0 * PI * z[i].round());
    let b = if nerve.doubles.is_empty() {
        Vec::new()
    } else {
        let dm = RMat::from_fn(t, nerve.doubles.len(), |i, j| d[i][j] as f64);
        let svd = dm.svd(true, true);
        svd.solve(&rhs, 1e-12)
            .map_err(|e| Error::Degenerate(e.to_string()))?
            .iter()
            .cloned()
            .collect()
    };
    let b = CircleCochain::new(nerve, 1, b)?;
    let check = b.coboundary(nerve)?.sub(&c.neg())?.max_mod_2pi();
    if check > 1e-6 {
        return Err(Error::invariant("δb ≡ −c", check, 1e-6));
    }
    Ok(Trivialization::Trivial(b))
}

/// Row echelon form of an integer matrix by unimodular row operations.
/// Returns the accumulated transform `P` (so `P·A` is in echelon form) and
/// the rank.
fn integer_row_echelon(a: &[Vec<i64>], cols: usize) -> (Vec<Vec<i64>>, usize) {
    let rows = a.len();
    let mut m: Vec<Vec<i64>> = a.to_vec();
    let mut p: Vec<Vec<i64>> = (0..rows).map(|i| (0..rows).map(|j| (i == j) as i64).collect()).collect();
    let mut pivot = 0;
    for col in 0..cols {
        if pivot == rows {
            break;
        }
        loop {
            // Smallest nonzero entry at or below the pivot row.
            let best = (pivot..rows).filter(|&r| m[r][col] != 0).min_by_key(|&r| m[r][col].abs());
            let Some(best) = best else { break };
            m.swap(pivot, best);
            p.swap(pivot, best);
            let mut done = true;
            for r in pivot + 1..rows {
                if m[r][col] != 0 {
                    let q = m[r][col].div_euclid(m[pivot][col]);
                    for j in 0..cols {
                        m[r][j] -= q * m[pivot][j];
                    }
                    for j in 0..rows {
                        p[r][j] -= q * p[pivot][j];
                    }
                    if m[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if m[pivot][col] != 0 {
            pivot += 1;
        }
    }
    (p, pivot)
}

/// Strict transition data `Û_ij = e^{i b_ij} U_ij`.
#[derive(Clone, Debug)]
pub struct UntwistedData {
    pub lifts: Vec<Implementer>,
    /// Largest `‖Û_ij Û_jk − Û_ik‖₂` over triples.
    pub cocycle_residual: f64,
    /// Largest `verify_implements` residual.
    pub implements_residual: f64,
}

/// Untwists a twisted Fock bundle by a trivialization `b` of its cocycle.
pub fn untwist(tf: &TwistedFockBundleData, b: &CircleCochain) -> Result<UntwistedData> {
    let data = &tf.data;
    let nerve = &data.cocycle.nerve;
    let r = b.coboundary(nerve)?.sub(&data.two_cocycle.neg())?.max_mod_2pi();
    if r > COCYCLE_TOL {
        return Err(Error::Precondition(format!("b does not trivialize c (residual {r:.3e})")));
    }
    let lifts: Vec<Implementer> = data
        .lifts
        .iter()
        .zip(&b.values)
        .map(|(u, &phi)| u.with_phase(phi))
        .collect();
    let cocycle_residual = nerve
        .triples
        .iter()
        .map(|t| {
            let u = |a, b| lifts[nerve.double_index[&[a, b]]].matrix();
            (u(t[0], t[1]) * u(t[1], t[2]) - u(t[0], t[2])).norm()
        })
        .fold(0.0, f64::max);
    let implements_residual = lifts
        .iter()
        .map(|u| verify_implements(u.fock(), u.matrix(), u.implements().matrix()))
        .fold(0.0, f64::max);
    Ok(UntwistedData {
        lifts,
        cocycle_residual,
        implements_residual,
    })
}

/// Recovers the trivialization from strict lifts: `b_ij = arg(Û_ij / U_ij)`.
pub fn trivialization_from_strict_lifts(data: &LiftingGerbeData, strict: &[Implementer]) -> Result<CircleCochain> {
    let values = data
        .lifts
        .iter()
        .zip(strict)
        .map(|(u, s)| {
            let (z, r) = crate::implementer::scalar_uniqueness(s.matrix(), u.matrix());
            if r > COCYCLE_TOL {
                return Err(Error::invariant("strict lift differs from lift by a scalar", r, COCYCLE_TOL));
            }
            Ok(z.arg())
        })
        .collect::<Result<Vec<_>>>()?;
    CircleCochain::new(&data.cocycle.nerve, 1, values)
}

/// Pullback of an angle cochain along a chart map `f: B → A`, extending the
/// cochain to degenerate and unordered simplices (zero on degenerate ones,
/// antisymmetric under permutations).
pub fn pullback_cochain(a: &Nerve, b: &Nerve, chart_map: &[usize], c: &CircleCochain) -> Result<CircleCochain> {
    let values = match c.degree {
        1 => b
            .doubles
            .iter()
            .map(|d| oriented(a, &[chart_map[d[0]], chart_map[d[1]]], c))
            .collect::<Result<Vec<_>>>()?,
        2 => b
            .triples
            .iter()
            .map(|t| oriented(a, &[chart_map[t[0]], chart_map[t[1]], chart_map[t[2]]], c))
            .collect::<Result<Vec<_>>>()?,
        d => return Err(Error::Parameter(format!("pullback of degree {d} is not supported"))),
    };
    CircleCochain::new(b, c.degree, values)
}

fn oriented(nerve: &Nerve, s: &[usize], c: &CircleCochain) -> Result<f64> {
    let mut sorted = s.to_vec();
    let mut sign = 1.0;
    // Bubble sort to track the permutation sign.
    for i in 0..sorted.len() {
        for j in 0..sorted.len() - 1 - i {
            if sorted[j] > sorted[j + 1] {
                sorted.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Ok(0.0);
    }
    let idx = match sorted.len() {
        2 => nerve.double(sorted[0], sorted[1]),
        3 => nerve.triple([sorted[0], sorted[1], sorted[2]]),
        _ => None,
    };
    let idx = idx.ok_or_else(|| Error::Nerve(format!("simplex {sorted:?} has no unique image")))?;
    Ok(sign * c.values[idx])
}

/// Result of [`refine`].
#[derive(Clone, Debug)]
pub struct Refinement {
    pub data: LiftingGerbeData,
    /// The pullback of the source 2-cocycle along the chart map.
    pub pulled_back: CircleCochain,
    /// Largest mod-2π difference between `pulled_back` and the cocycle read
    /// off the transported lifts.
    pub residual: f64,
}

/// Pulls lifting data back along `chart_map: B → A`, optionally pushing it
/// through the conjugation by an orthogonal map `ν` (lifted by its
/// implementer `W`, so `U ↦ W U W*`).
pub fn refine(
    src: &LiftingGerbeData,
    target: &Nerve,
    chart_map: &[usize],
    hom: Option<&OrthogonalMap>,
) -> Result<Refinement> {
    let a = &src.cocycle.nerve;
    if chart_map.len() != target.charts || chart_map.iter().any(|&x| x >= a.charts) {
        return Err(Error::Nerve("chart map does not map B charts to A charts".into()));
    }
    let space = src
        .cocycle
        .space()
        .cloned()
        .ok_or_else(|| Error::Nerve("source nerve has no doubles".into()))?;
    let w = hom.map(|nu| implement_general(nu, &src.fock)).transpose()?;
    let fock = &src.fock;
    let identity = Implementer::identity(fock, &space);
    let mut maps = Vec::with_capacity(target.doubles.len());
    let mut lifts = Vec::with_capacity(target.doubles.len());
    for d in &target.doubles {
        let (x, y) = (chart_map[d[0]], chart_map[d[1]]);
        let (g, u) = if x == y {
            (OrthogonalMap::identity(&space), identity.clone())
        } else {
            let (lo, hi) = (x.min(y), x.max(y));
            let i = a
                .double(lo, hi)
                .ok_or_else(|| Error::Nerve(format!("B double {d:?} maps to a missing A double")))?;
            if x < y {
                (src.cocycle.maps[i].clone(), src.lifts[i].clone())
            } else {
                (src.cocycle.maps[i].inverse(), src.lifts[i].adjoint())
            }
        };
        let (g, u) = match (&w, hom) {
            (Some(w), Some(nu)) => {
                let g2 = nu.compose(&g)?.compose(&nu.inverse())?;
                let m = w.matrix() * u.matrix() * w.matrix().adjoint();
                (g2.clone(), Implementer::from_parts(fock, g2, m))
            }
            _ => (g, u),
        };
        maps.push(g);
        lifts.push(u);
    }
    let gc = GroupCocycle::new(target, maps)?;
    let data = lifting_data_from_lifts(&gc, fock, lifts)?;
    let pulled_back = pullback_cochain(a, target, chart_map, &src.two_cocycle)?;
    let residual = data.two_cocycle.sub(&pulled_back)?.max_mod_2pi();
    Ok(Refinement {
        data,
        pulled_back,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Representation {
    Mode,
    Clifford,
    FockWithLifts,
}

/// Transition matrices of an associated bundle.
#[derive(Clone, Debug)]
pub struct AssociatedCocycle {
    pub matrices: Vec<CMat>,
    /// Per triple, the scalar `z` of the best fit `M_ij M_jk = z M_ik`.
    pub discrepancies: Vec<C64>,
    /// Largest `‖M_ij M_jk − z M_ik‖₂`.
    pub fit_residual: f64,
}

impl AssociatedCocycle {
    /// Largest `|z − 1|`: zero for an honest cocycle.
    pub fn strictness(&self) -> f64 {
        self.discrepancies.iter().map(|z| (z - C64::new(1.0, 0.0)).norm()).fold(0.0, f64::max)
    }
}

/// Transition matrices of the bundle associated to `gc` with fibre the mode
/// space, the Clifford algebra `Cl(V) ≅ ΛV` (on which θ_g acts as `Λ(g)`),
/// or the Fock space with the supplied lifts.
pub fn associated_cocycle(
    gc: &GroupCocycle,
    rep: Representation,
    lifts: Option<&LiftingGerbeData>,
) -> Result<AssociatedCocycle> {
    let matrices: Vec<CMat> = match rep {
        Representation::Mode => gc.maps.iter().map(|g| g.matrix().clone()).collect(),
        Representation::Clifford => {
            let n = gc.space().map_or(0, |s| s.dim());
            if n >= 31 || (1usize << n) > MAX_CLIFFORD_DIM {
                return Err(Error::FockTooLarge { m: n, limit: MAX_CLIFFORD_DIM });
            }
            let basis = SubsetBasis::new(n);
            gc.maps.iter().map(|g| wedge_power(&basis, g.matrix())).collect()
        }
        Representation::FockWithLifts => {
            let l = lifts.ok_or_else(|| Error::Parameter("fock representation needs lifting data".into()))?;
            l.lifts.iter().map(|u| u.matrix().clone()).collect()
        }
    };
    let nerve = &gc.nerve;
    let mut discrepancies = Vec::with_capacity(nerve.triples.len());
    let mut fit_residual: f64 = 0.0;
    for t in &nerve.triples {
        let m = |a, b| &matrices[nerve.double_index[&[a, b]]];
        let v = cocycle_of(m(t[0], t[1]), m(t[1], t[2]), m(t[0], t[2]))?;
        fit_residual = fit_residual.max(v.fit_residual);
        discrepancies.push(v.value);
    }
    Ok(AssociatedCocycle {
        matrices,
        discrepancies,
        fit_residual,
    })
}

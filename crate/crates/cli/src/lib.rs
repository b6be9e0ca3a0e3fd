//! Batch front end: one subcommand and one JSON input per job, one JSON
//! report out.
//!
//! Reports have the shape
//! `{"subcommand", "seed", "tolerances", "checks": [{name, value, tolerance, pass}], "result"}`
//! where `tolerances` lists exactly the tolerances that were consulted.
//! Exit codes: 0 success, 2 a check or requested verdict failed, 1 invalid
//! input (reported as `{"error": {"kind", "message"}}`).

use serde::Deserialize;
use serde_json::{json, Value};

use fockbundle::clifford::OrthogonalMap;
use fockbundle::dirac::{dirac_eigenbasis, equivalence_class_check, holonomy_spectrum, parallel_transport, LoopConnection};
use fockbundle::gerbe::{
    lifting_cocycle, trivialize, untwist, CircleCochain, CochainJson, GroupCocycle, Nerve, NerveJson, Trivialization,
};
use fockbundle::implementer::{implement_exponential, implement_general, scalar_uniqueness, verify_implements};
use fockbundle::json::matrix_from_json;
use fockbundle::json::ComplexPair;
use fockbundle::lagrangian::{equivalence_diagnostic, Lagrangian, Verdict};
use fockbundle::loopgroup::{act, lie_cocycle_lhs, lie_cocycle_rhs, zero_mode_term, Flavor, TrigPolyJson, TrigPolyMatrix};
use fockbundle::sampling::{random_orthogonal, rng_for};
use fockbundle::suites::{car_suite, implementer_suite, lie_table, Check, LieTableConfig, SuiteReport, Tolerances};
use fockbundle::{Error, Exec, FockSpace, ModeSpace, Parity, SkewSymmetricMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    CarCheck,
    Implement,
    CocycleLie,
    LagrangianEquiv,
    Gerbe { trivialize: bool },
    Dirac,
    Fockbundle { untwist: bool },
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::CarCheck => "car-check",
            Subcommand::Implement => "implement",
            Subcommand::CocycleLie => "cocycle-lie",
            Subcommand::LagrangianEquiv => "lagrangian-equiv",
            Subcommand::Gerbe { .. } => "gerbe",
            Subcommand::Dirac => "dirac",
            Subcommand::Fockbundle { .. } => "fockbundle",
        }
    }
}

#[derive(Debug)]
pub struct Job {
    pub subcommand: Subcommand,
    pub input: Value,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub exec: Exec,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Core(e) => match e {
                Error::Parameter(_) => "parameter",
                Error::SpaceMismatch(_) => "space-mismatch",
                Error::Invariant { .. } => "invariant",
                Error::Membership { .. } => "membership",
                Error::FockTooLarge { .. } => "fock-too-large",
                Error::Degenerate(_) => "degenerate",
                Error::CutoffTooSmall { .. } => "cutoff-too-small",
                Error::Precondition(_) => "precondition",
                Error::Nerve(_) => "nerve",
                Error::Json(_) => "json",
            },
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind(), "message": self.to_string() } })
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("malformed input: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Exit code and the JSON document to emit.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: Value,
}

/// Runs a job. Input errors become an error document with exit code 1.
pub fn run(job: &Job) -> Outcome {
    match dispatch(job) {
        Ok((report, verdict_ok)) => {
            let code = if report.passed() && verdict_ok { 0 } else { 2 };
            Outcome {
                code,
                report: json!({
                    "subcommand": job.subcommand.name(),
                    "seed": job.seed,
                    "tolerances": job.tolerances.used(),
                    "checks": report.checks,
                    "result": report.result,
                }),
            }
        }
        Err(e) => Outcome {
            code: 1,
            report: e.to_json(),
        },
    }
}

/// Parses `--in`: inline JSON when it starts with `{`, a file path otherwise.
pub fn read_input(arg: Option<&str>) -> CliResult<Value> {
    let text = match arg {
        None => return Ok(json!({})),
        Some(s) if s.trim_start().starts_with('{') => s.to_string(),
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {path}: {e}")))?,
    };
    Ok(serde_json::from_str(&text)?)
}

fn dispatch(job: &Job) -> CliResult<(SuiteReport, bool)> {
    let tol = &job.tolerances;
    match job.subcommand {
        Subcommand::CarCheck => car_check(job, tol),
        Subcommand::Implement => implement(job, tol),
        Subcommand::CocycleLie => cocycle_lie(job, tol),
        Subcommand::LagrangianEquiv => lagrangian_equiv(job),
        Subcommand::Gerbe { trivialize } => gerbe(job, tol, trivialize),
        Subcommand::Dirac => dirac(job, tol),
        Subcommand::Fockbundle { untwist } => fockbundle(job, tol, untwist),
    }
}

fn parse<T: for<'de> Deserialize<'de>>(v: &Value) -> CliResult<T> {
    Ok(T::deserialize(v)?)
}

#[derive(Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct SpaceSpec {
    parity: Parity,
    d: usize,
    #[serde(rename = "N")]
    cutoff: usize,
}

impl SpaceSpec {
    fn build(self) -> CliResult<ModeSpace> {
        Ok(ModeSpace::new(self.parity, self.d, self.cutoff)?)
    }
}

fn standard_fock(space: &ModeSpace) -> CliResult<FockSpace> {
    Ok(FockSpace::new(&Lagrangian::standard(space)?)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CarInput {
    #[serde(default = "default_car_spaces")]
    spaces: Vec<SpaceSpec>,
    #[serde(default = "default_pairs")]
    pairs: usize,
}

fn default_car_spaces() -> Vec<SpaceSpec> {
    vec![
        SpaceSpec { parity: Parity::Odd, d: 2, cutoff: 3 },
        SpaceSpec { parity: Parity::Even, d: 2, cutoff: 2 },
    ]
}

fn default_pairs() -> usize {
    100
}

fn car_check(job: &Job, tol: &Tolerances) -> CliResult<(SuiteReport, bool)> {
    let input: CarInput = parse(&job.input)?;
    let spaces = input.spaces.iter().map(|s| s.build()).collect::<CliResult<Vec<_>>>()?;
    Ok((car_suite(&spaces, input.pairs, job.seed, tol, job.exec)?, true))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RandomBatch {
    count: usize,
    #[serde(default = "one")]
    scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImplementInput {
    space: SpaceSpec,
    #[serde(default)]
    g: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default, rename = "X")]
    x: Option<Vec<Vec<ComplexPair>>>,
    #[serde(default)]
    random: Option<RandomBatch>,
}

fn implement(job: &Job, tol: &Tolerances) -> CliResult<(SuiteReport, bool)> {
    let input: ImplementInput = parse(&job.input)?;
    let space = input.space.build()?;
    let given = [input.g.is_some(), input.x.is_some(), input.random.is_some()];
    if given.iter().filter(|&&b| b).count() > 1 {
        return Err(CliError::Input("give at most one of \"g\", \"X\", \"random\"".into()));
    }
    if let Some(batch) = input.random {
        return Ok((implementer_suite(&space, batch.count, batch.scale, job.seed, tol, job.exec)?, true));
    }
    let fock = standard_fock(&space)?;
    let t_imp = tol.get("implements");
    let mut checks = Vec::new();
    let (g, exp) = match (&input.g, &input.x) {
        (Some(g), _) => (OrthogonalMap::new(space.clone(), matrix_from_json(g)?)?, None),
        (None, Some(x)) => {
            let x = SkewSymmetricMap::new(space.clone(), matrix_from_json(x)?)?;
            (x.exp(), Some(implement_exponential(&x, &fock)?))
        }
        (None, None) => (OrthogonalMap::identity(&space), None),
    };
    let u = implement_general(&g, &fock)?;
    checks.push(Check::at_most("verify_implements", u.residual(), t_imp));
    if let Some(u2) = &exp {
        let t_uni = tol.get("scalar_uniqueness");
        checks.push(Check::at_most("verify_implements_exponential", verify_implements(&fock, u2.matrix(), g.matrix()), t_imp));
        checks.push(Check::at_most("scalar_uniqueness", scalar_uniqueness(u.matrix(), u2.matrix()).1, t_uni));
    }
    Ok((
        SuiteReport {
            checks,
            result: json!({ "fock_dim": fock.dim(), "implementer": u.to_json() }),
        },
        true,
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LieInput {
    #[serde(default)]
    f1: Option<TrigPolyJson>,
    #[serde(default)]
    f2: Option<TrigPolyJson>,
    #[serde(default = "odd")]
    parity: Parity,
    #[serde(default)]
    cutoffs: Option<Vec<usize>>,
    #[serde(default)]
    random: Option<LieRandom>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LieRandom {
    #[serde(default = "both_parities")]
    parities: Vec<Parity>,
    #[serde(default = "lie_ds")]
    ds: Vec<usize>,
    #[serde(default = "three")]
    kmax: i64,
    #[serde(default = "twenty")]
    pairs: usize,
    #[serde(default = "seven")]
    cutoff: usize,
}

fn odd() -> Parity {
    Parity::Odd
}
fn both_parities() -> Vec<Parity> {
    vec![Parity::Odd, Parity::Even]
}
fn lie_ds() -> Vec<usize> {
    vec![2, 4]
}
fn three() -> i64 {
    3
}
fn twenty() -> usize {
    20
}
fn seven() -> usize {
    7
}

fn cpair(z: fockbundle::C64) -> [f64; 2] {
    [z.re, z.im]
}

fn cocycle_lie(job: &Job, tol: &Tolerances) -> CliResult<(SuiteReport, bool)> {
    let input: LieInput = parse(&job.input)?;
    if let Some(r) = input.random {
        let cfg = LieTableConfig {
            parities: r.parities,
            ds: r.ds,
            kmax: r.kmax,
            pairs: r.pairs,
            cutoff: r.cutoff,
        };
        return Ok((lie_table(&cfg, job.seed, tol, job.exec)?, true));
    }
    let (Some(f1), Some(f2)) = (&input.f1, &input.f2) else {
        return Err(CliError::Input("cocycle-lie needs \"f1\" and \"f2\" (or \"random\")".into()));
    };
    let f1 = TrigPolyMatrix::from_json(f1)?;
    let f2 = TrigPolyMatrix::from_json(f2)?;
    if f1.flavor() != Flavor::Algebra || f2.flavor() != Flavor::Algebra {
        return Err(CliError::Input("cocycle-lie needs algebra-flavor loops".into()));
    }
    let base = f1.bandwidth() + f2.bandwidth() + 1;
    let cutoffs = input.cutoffs.unwrap_or_else(|| vec![base, base + 2, base + 4]);
    let t = tol.get("lie_identity");
    let rhs = lie_cocycle_rhs(&f1, &f2);
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for &n in &cutoffs {
        let space = ModeSpace::new(input.parity, f1.d(), n)?;
        let l = Lagrangian::standard(&space)?;
        let lhs = lie_cocycle_lhs(&f1, &f2, &space, &l)?;
        let zero = zero_mode_term(&f1, &f2, &space, &l);
        let err = (lhs - rhs).norm();
        checks.push(Check::at_most(format!("lie_identity[N={n}]"), err, t));
        rows.push(json!({
            "N": n, "lhs": cpair(lhs), "rhs": cpair(rhs), "zero_mode_term": cpair(zero),
            "error": err, "error_with_zero_mode": (lhs - rhs + zero).norm(),
        }));
    }
    Ok((SuiteReport { checks, result: json!({ "parity": input.parity, "rows": rows }) }, true))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EquivInput {
    #[serde(default = "odd")]
    parity: Parity,
    d: usize,
    cutoffs: Vec<usize>,
    /// `"alpha"` compares `L` with `α(L)`; `"loop"` compares `L` with `gL`
    /// for the action of `loop`.
    pair: String,
    #[serde(default, rename = "loop")]
    the_loop: Option<TrigPolyJson>,
    #[serde(default)]
    expect: Option<Verdict>,
}

fn lagrangian_equiv(job: &Job) -> CliResult<(SuiteReport, bool)> {
    let input: EquivInput = parse(&job.input)?;
    let (parity, d) = (input.parity, input.d);
    let report = match input.pair.as_str() {
        "alpha" => equivalence_diagnostic(&input.cutoffs, |n| {
            let l = Lagrangian::standard(&ModeSpace::new(parity, d, n)?)?;
            Ok((l.clone(), l.alpha_image()))
        })?,
        "loop" => {
            let f = input
                .the_loop
                .as_ref()
                .ok_or_else(|| CliError::Input("pair \"loop\" needs \"loop\"".into()))?;
            let f = TrigPolyMatrix::from_json(f)?;
            equivalence_diagnostic(&input.cutoffs, |n| {
                let space = ModeSpace::new(parity, d, n)?;
                let l = Lagrangian::standard(&space)?;
                let action = act(&f, &space)?;
                let g = match f.flavor() {
                    Flavor::Algebra => action.skew()?.exp(),
                    Flavor::Group => action.orthogonal()?,
                };
                let gl = l.transform(g.matrix())?;
                Ok((l, gl))
            })?
        }
        other => return Err(CliError::Input(format!("unknown pair {other:?}; use \"alpha\" or \"loop\""))),
    };
    let mut checks = Vec::new();
    if let Some(want) = input.expect {
        checks.push(Check::holds(format!("verdict_is_{}", serde_json::to_value(want)?.as_str().unwrap_or("?")), report.verdict == want));
    }
    Ok((SuiteReport { checks, result: serde_json::to_value(&report)? }, true))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GerbeInput {
    nerve: NerveJson,
    #[serde(default)]
    two_cocycle: Option<CochainJson>,
    #[serde(default)]
    space: Option<SpaceSpec>,
    /// Per-chart maps `h_i` with `g_ij = h_i h_j⁻¹`; random when absent.
    #[serde(default)]
    charts: Option<Vec<Vec<Vec<ComplexPair>>>>,
    #[serde(default = "one")]
    scale: f64,
}

fn obstruction_json(t: &Trivialization) -> Value {
    match t {
        Trivialization::Trivial(_) => Value::Null,
        Trivialization::Obstructed { cycle, pairing } => json!({ "cycle": cycle, "pairing": pairing }),
    }
}

fn gerbe(job: &Job, tol: &Tolerances, want_trivialization: bool) -> CliResult<(SuiteReport, bool)> {
    let input: GerbeInput = parse(&job.input)?;
    let nerve = Nerve::from_json(&input.nerve)?;
    let t_delta = tol.get("cocycle_delta");
    let mut checks = Vec::new();
    let mut result = serde_json::Map::new();
    let (c, data) = match (&input.two_cocycle, input.space) {
        (Some(c), None) => (CircleCochain::from_json(&nerve, c)?, None),
        (None, Some(space)) => {
            let space = space.build()?;
            let h: Vec<OrthogonalMap> = match &input.charts {
                Some(ms) => ms
                    .iter()
                    .map(|m| Ok(OrthogonalMap::new(space.clone(), matrix_from_json(m)?)?))
                    .collect::<CliResult<_>>()?,
                None => (0..nerve.charts())
                    .map(|i| random_orthogonal(&space, input.scale, &mut rng_for(job.seed, i as u64)))
                    .collect(),
            };
            let gc = GroupCocycle::from_charts(&nerve, &h)?;
            let data = lifting_cocycle(&gc, &standard_fock(&space)?, job.exec)?;
            checks.push(Check::at_most("implements", data.implements_residual(), tol.get("implements")));
            (data.two_cocycle.clone(), Some(data))
        }
        _ => return Err(CliError::Input("give either \"two_cocycle\" or \"space\"".into())),
    };
    let delta = c.coboundary(&nerve)?.max_mod_2pi();
    checks.push(Check::at_most("cocycle_delta", delta, t_delta));
    result.insert("two_cocycle".into(), serde_json::to_value(c.to_json(&nerve))?);
    let mut verdict_ok = true;
    if want_trivialization || data.is_some() {
        if delta > t_delta {
            return Ok((SuiteReport { checks, result: Value::Object(result) }, false));
        }
        let t = trivialize(&nerve, &c)?;
        result.insert("obstruction".into(), obstruction_json(&t));
        match &t {
            Trivialization::Trivial(b) => {
                result.insert("trivialization".into(), serde_json::to_value(b.to_json(&nerve))?);
                if let Some(data) = &data {
                    let un = untwist(&data.twisted_bundle(), b)?;
                    checks.push(Check::at_most("untwist_strict", un.cocycle_residual, tol.get("untwist")));
                    checks.push(Check::at_most("untwist_implements", un.implements_residual, tol.get("implements")));
                }
            }
            Trivialization::Obstructed { .. } => verdict_ok = !want_trivialization,
        }
        result.insert("trivializable".into(), json!(matches!(t, Trivialization::Trivial(_))));
    }
    Ok((SuiteReport { checks, result: Value::Object(result) }, verdict_ok))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiracInput {
    connection: TrigPolyJson,
    #[serde(default = "dirac_steps")]
    steps: usize,
    #[serde(default = "four")]
    cutoff: usize,
    #[serde(default = "dirac_cutoffs")]
    cutoffs: Vec<usize>,
}

fn dirac_steps() -> usize {
    2048
}
fn four() -> usize {
    4
}
fn dirac_cutoffs() -> Vec<usize> {
    vec![4, 6, 8]
}

fn dirac(job: &Job, tol: &Tolerances) -> CliResult<(SuiteReport, bool)> {
    let input: DiracInput = parse(&job.input)?;
    let conn = LoopConnection::new(TrigPolyMatrix::from_json(&input.connection)?)?;
    let path = parallel_transport(&conn, input.steps)?;
    let spec = holonomy_spectrum(&path)?;
    let es = dirac_eigenbasis(&spec, &path, input.cutoff)?;
    let eq = equivalence_class_check(&spec, &path, &input.cutoffs, job.exec)?;
    let r = &es.residuals;
    let inclusion = eq.inclusion_residuals.iter().copied().fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("dirac_eigen_residual", r.eigen, tol.get("dirac_eigen")),
        Check::at_most("dirac_antiperiodicity", r.antiperiodicity, tol.get("dirac_antiperiodicity")),
        Check::at_most("dirac_orthonormality", r.orthonormality, tol.get("dirac_orthonormality")),
        Check::at_most("dirac_inclusion", inclusion, tol.get("dirac_inclusion")),
        Check::holds("hs_bounded", eq.verdict == Verdict::Bounded),
    ];
    let mut result = es.to_json();
    result["transport_orthogonality"] = json!(path.orthogonality_residual());
    result["equivalence"] = serde_json::to_value(&eq)?;
    Ok((SuiteReport { checks, result }, true))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FockbundleInput {
    nerve: NerveJson,
    space: SpaceSpec,
    /// Group-flavor loops, one per chart; transitions are `h_i h_j⁻¹` for
    /// the orthogonal parts of their actions.
    chart_loops: Vec<TrigPolyJson>,
    #[serde(default)]
    untwist: bool,
}

fn fockbundle(job: &Job, tol: &Tolerances, untwist_flag: bool) -> CliResult<(SuiteReport, bool)> {
    let input: FockbundleInput = parse(&job.input)?;
    let nerve = Nerve::from_json(&input.nerve)?;
    let space = input.space.build()?;
    if input.chart_loops.len() != nerve.charts() {
        return Err(CliError::Input(format!(
            "{} chart loops for {} charts",
            input.chart_loops.len(),
            nerve.charts()
        )));
    }
    let mut regimes = Vec::new();
    let h = input
        .chart_loops
        .iter()
        .map(|j| {
            let f = TrigPolyMatrix::from_json(j)?;
            if f.flavor() != Flavor::Group {
                return Err(CliError::Input("chart loops must be group-flavor".into()));
            }
            let a = act(&f, &space)?;
            regimes.push(serde_json::to_value(a.regime())?);
            Ok(a.orthogonal()?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let gc = GroupCocycle::from_charts(&nerve, &h)?;
    let fock = standard_fock(&space)?;
    let data = lifting_cocycle(&gc, &fock, job.exec)?;
    let bundle = data.twisted_bundle();
    let t_imp = tol.get("implements");
    let mut checks = vec![
        Check::at_most("cocycle_delta", data.delta_residual(), tol.get("cocycle_delta")),
        Check::at_most("twisted_cocycle", data.twisted_residual(), t_imp),
        Check::at_most("clifford_compatibility", bundle.clifford_residual(), t_imp),
    ];
    let mut result = json!({
        "fock_dim": fock.dim(),
        "regimes": regimes,
        "two_cocycle": data.two_cocycle.to_json(&nerve),
        "lift_residuals": data.lifts.iter().map(|u| u.residual()).collect::<Vec<_>>(),
    });
    let mut verdict_ok = true;
    if untwist_flag || input.untwist {
        let t = trivialize(&nerve, &data.two_cocycle)?;
        result["obstruction"] = obstruction_json(&t);
        match t {
            Trivialization::Trivial(b) => {
                let un = untwist(&bundle, &b)?;
                checks.push(Check::at_most("untwist_strict", un.cocycle_residual, tol.get("untwist")));
                checks.push(Check::at_most("untwist_implements", un.implements_residual, t_imp));
                result["trivialization"] = serde_json::to_value(b.to_json(&nerve))?;
            }
            Trivialization::Obstructed { .. } => verdict_ok = false,
        }
    }
    Ok((SuiteReport { checks, result }, verdict_ok))
}

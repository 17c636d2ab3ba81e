//! Scenario runner behind the `cara` binary: reads JSON problems, calls into
//! `cara-core`, and produces a JSON report plus an exit status.
//!
//! Exit statuses: 0 verified or constructed, 1 property refuted, 2 invalid
//! input, 3 numerical failure.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use cara_core::caratheodory::{carath_origin_report, carath_supball, isometry_check, IsometryVerdict};
use cara_core::linalg::{self, columns, max_abs, pseudo_inverse};
use cara_core::norms::{Base, NormKind};
use cara_core::projections::{
    counterexample_obstruction, min_projection_norm, project_hilbert, property_v_c0, property_v_supsource,
    support_index_certificate, ProjectionBundle,
};
use cara_core::retraction::{build_retraction, conjugate_to_origin, conjugation_metric_defect, RetractionOptions};
use cara_core::{instances, CMatrix, CVector, Error, MapExpr, Norm};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Metric,
    CheckIsometry,
    FindProjection,
    MinProjectionNorm,
    Retract,
    Counterexample,
    CorollaryDemo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Metric => "metric",
            Command::CheckIsometry => "check-isometry",
            Command::FindProjection => "find-projection",
            Command::MinProjectionNorm => "min-projection-norm",
            Command::Retract => "retract",
            Command::Counterexample => "counterexample",
            Command::CorollaryDemo => "corollary-demo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Options {
    pub tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub max_order: u32,
    pub budget: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol: cara_core::convex::DEFAULT_TOL,
            seed: 0,
            samples: 1000,
            max_order: cara_core::retraction::DEFAULT_MAX_ORDER,
            budget: cara_core::convex::DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Verified,
    Refuted,
    InvalidInput,
    NumericalFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Verified => 0,
            Status::Refuted => 1,
            Status::InvalidInput => 2,
            Status::NumericalFailure => 3,
        }
    }

    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::NotAnIsometry(_)
            | Error::VanishingViolation { .. }
            | Error::LinearityViolation { .. }
            | Error::VerificationFailure(_)
            | Error::Infeasible { .. } => Status::Refuted,
            Error::Dimension { .. }
            | Error::RankDeficient { .. }
            | Error::Domain(_)
            | Error::WrongNormKind { .. }
            | Error::InvalidInput(_) => Status::InvalidInput,
            Error::NumericalFailure { .. } => Status::NumericalFailure,
        }
    }
}

/// The outcome of a scenario. `report` is deterministic in the scenario and
/// its seed; nothing time-dependent goes into it.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub status: Status,
    pub report: Value,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        self.status.code()
    }

    /// `{"report": ..., "envelope": {"version", "timestamp"}}`.
    pub fn to_json(&self) -> Value {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        json!({
            "report": self.report,
            "envelope": {
                "version": env!("CARGO_PKG_VERSION"),
                "timestamp": timestamp,
            }
        })
    }
}

/// `{"L", "source_norm", "target_norm"}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    #[serde(rename = "L", with = "linalg::serde_cmatrix")]
    pub l: CMatrix,
    pub source_norm: Norm,
    pub target_norm: Norm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricInput {
    norm: Norm,
    #[serde(with = "linalg::serde_cvector")]
    vector: CVector,
    #[serde(default, with = "optional_vector")]
    point: Option<CVector>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RangeInput {
    Problem(Problem),
    Basis {
        #[serde(with = "linalg::serde_cvectors")]
        range_basis: Vec<CVector>,
        norm: Norm,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RetractInput {
    f: MapExpr,
    source_norm: Norm,
    target_norm: Norm,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorollaryInput {
    f: MapExpr,
    #[serde(with = "linalg::serde_cvector")]
    a: CVector,
}

mod optional_vector {
    use cara_core::CVector;
    use serde::{Deserialize, Deserializer};

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CVector>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "cara_core::linalg::serde_cvector")] CVector);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

/// Runs a scenario. Never panics: a panic inside the numerics is reported as
/// a numerical failure.
pub fn run(scenario: &Scenario) -> RunOutput {
    let outcome = catch_unwind(AssertUnwindSafe(|| dispatch(scenario)));
    let (status, body) = match outcome {
        Ok(Ok((status, result))) => (status, json!({ "result": result })),
        Ok(Err(e)) => (e.status, json!({ "error": e.body })),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            (
                Status::NumericalFailure,
                json!({ "error": { "kind": "internal", "message": msg } }),
            )
        }
    };
    let mut report = json!({
        "command": scenario.command.name(),
        "status": status,
        "exit_code": status.code(),
        "options": scenario.options,
        "input": scenario.input.as_ref().map(|p| p.display().to_string()),
    });
    if let (Value::Object(r), Value::Object(b)) = (&mut report, body) {
        r.extend(b);
    }
    RunOutput { status, report }
}

struct Failure {
    status: Status,
    body: Value,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            status: Status::of_error(&e),
            body: error_json(&e),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        status: Status::InvalidInput,
        body: json!({ "kind": "invalid_input", "message": message.into() }),
    }
}

/// Structured form of a library error.
pub fn error_json(e: &Error) -> Value {
    let message = e.to_string();
    match e {
        Error::Dimension { expected, got } => {
            json!({ "kind": "dimension", "message": message, "expected": expected, "got": got })
        }
        Error::RankDeficient { rank, required } => {
            json!({ "kind": "rank_deficient", "message": message, "rank": rank, "required": required })
        }
        Error::NumericalFailure { lower, upper, .. } => {
            json!({ "kind": "numerical_failure", "message": message, "lower": lower, "upper": upper })
        }
        Error::Domain(_) => json!({ "kind": "domain", "message": message }),
        Error::WrongNormKind { expected } => {
            json!({ "kind": "wrong_norm_kind", "message": message, "expected": expected })
        }
        Error::Infeasible { best_norms } => {
            json!({ "kind": "infeasible", "message": message, "best_norms": best_norms })
        }
        Error::NotAnIsometry(_) => json!({ "kind": "not_an_isometry", "message": message }),
        Error::VanishingViolation { k, l, row, modulus } => json!({
            "kind": "vanishing_violation", "message": message,
            "k": k, "l": l, "row": row, "modulus": modulus,
        }),
        Error::LinearityViolation { alpha, modulus } => json!({
            "kind": "linearity_violation", "message": message, "alpha": alpha, "modulus": modulus,
        }),
        Error::VerificationFailure(residuals) => json!({
            "kind": "verification_failure", "message": message, "residuals": residuals,
        }),
        Error::InvalidInput(_) => json!({ "kind": "invalid_input", "message": message }),
    }
}

type Step = Result<(Status, Value), Failure>;

fn dispatch(s: &Scenario) -> Step {
    let o = &s.options;
    if !(o.tol > 0.0 && o.tol.is_finite()) {
        return Err(invalid(format!("--tol must be positive, got {}", o.tol)));
    }
    match s.command {
        Command::Metric => metric(&read(s)?, o),
        Command::CheckIsometry => check_isometry(&read(s)?, o),
        Command::FindProjection => find_projection(&read(s)?, o),
        Command::MinProjectionNorm => min_projection(read(s)?, o),
        Command::Retract => retract(&read(s)?, o),
        Command::Counterexample => counterexample(o),
        Command::CorollaryDemo => {
            let input = match &s.input {
                Some(_) => Some(read::<CorollaryInput>(s)?),
                None => None,
            };
            corollary_demo(input, o)
        }
    }
}

fn read<T: serde::de::DeserializeOwned>(s: &Scenario) -> Result<T, Failure> {
    let path = s
        .input
        .as_ref()
        .ok_or_else(|| invalid(format!("{} needs an input file", s.command.name())))?;
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("cannot parse {}: {e}", path.display())))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn metric(input: &MetricInput, o: &Options) -> Step {
    linalg::require_dim(input.norm.dim(), input.vector.len())?;
    match &input.point {
        Some(a) if max_abs(a) > 0.0 => {
            if input.norm.kind() != NormKind::Sup {
                return Err(Error::WrongNormKind { expected: "sup" }.into());
            }
            let value = carath_supball(a, &input.vector)?;
            Ok((Status::Verified, json!({ "caratheodory": value, "kobayashi": value, "at_origin": false })))
        }
        _ => {
            let rep = carath_origin_report(&input.norm, &input.vector, o.samples, o.seed)?;
            let mut v = to_value(&rep);
            v["at_origin"] = json!(true);
            Ok((Status::Verified, v))
        }
    }
}

fn verdict(p: &Problem, o: &Options) -> Result<IsometryVerdict, Failure> {
    linalg::require_dim(p.source_norm.dim(), p.l.ncols())?;
    linalg::require_dim(p.target_norm.dim(), p.l.nrows())?;
    Ok(isometry_check(&p.l, &p.source_norm, &p.target_norm, o.samples, o.seed, o.tol)?)
}

fn check_isometry(p: &Problem, o: &Options) -> Step {
    let v = verdict(p, o)?;
    let status = if v.is_isometry { Status::Verified } else { Status::Refuted };
    Ok((status, json!({ "verdict": v })))
}

/// Solver tolerance for projection programs; the retraction checks hold
/// `pi ∘ f` to 1e-8, so a looser projection would show up as nonlinearity.
const PROJECTION_TOL: f64 = 1e-9;

/// The projection construction that fits the norms, with its name.
fn construct(l: &CMatrix, n1: &Norm, n2: &Norm, o: &Options) -> Result<(&'static str, ProjectionBundle, Value), Failure> {
    let tol = o.tol.min(PROJECTION_TOL);
    if n2.canonical().base == Base::Euclidean {
        return Ok(("orthogonal", project_hilbert(l, n2)?, Value::Null));
    }
    match (n1, n2) {
        (Norm::Sup(n), Norm::Sup(m)) => {
            let cert = support_index_certificate(l, *m, *n)?;
            let bundle = property_v_c0(l, &cert)?;
            Ok(("support_index", bundle, to_value(&cert)))
        }
        (Norm::Sup(_), _) => Ok(("minimal_extension", property_v_supsource(l, n2, tol)?, Value::Null)),
        _ => {
            let min = min_projection_norm(&columns(l), n2, tol, o.budget)?;
            if min.lower > 1.0 + o.tol {
                return Err(Failure {
                    status: Status::Refuted,
                    body: json!({
                        "kind": "no_norm_one_projection",
                        "message": format!("every projection onto the range has norm at least {}", min.lower),
                        "min_projection": min,
                    }),
                });
            }
            let h = pseudo_inverse(l) * &min.pi_best;
            let bundle = ProjectionBundle::from_left_inverse(l, h, n2, tol)?;
            Ok(("minimal_projection", bundle, to_value(&min)))
        }
    }
}

fn find_projection(p: &Problem, o: &Options) -> Step {
    let v = verdict(p, o)?;
    if !v.is_isometry {
        return Ok((Status::Refuted, json!({ "verdict": v })));
    }
    let (method, bundle, extra) = construct(&p.l, &p.source_norm, &p.target_norm, o)?;
    let residuals = bundle.invariant_residuals(&p.l);
    let mut status = Status::Verified;
    if residuals.iter().any(|r| !r.passed()) {
        status = Status::NumericalFailure;
    }
    if bundle.norm_certificate.lower > 1.0 + o.tol {
        status = Status::Refuted;
    }
    let mut cross_check = Value::Null;
    if method == "support_index" {
        // the minimal-extension construction must agree in norm
        let other = property_v_supsource(&p.l, &p.target_norm, o.tol.min(PROJECTION_TOL))?;
        cross_check = json!({
            "method": "minimal_extension",
            "norm_certificate": other.norm_certificate,
            "residuals": other.invariant_residuals(&p.l),
        });
    }
    Ok((
        status,
        json!({
            "verdict": v,
            "method": method,
            "bundle": bundle,
            "residuals": residuals,
            "certificate": extra,
            "cross_check": cross_check,
        }),
    ))
}

fn min_projection(input: RangeInput, o: &Options) -> Step {
    let (basis, norm) = match input {
        RangeInput::Problem(p) => (columns(&p.l), p.target_norm),
        RangeInput::Basis { range_basis, norm } => (range_basis, norm),
    };
    let min = min_projection_norm(&basis, &norm, o.tol, o.budget)?;
    let status = if min.value <= 1.0 + o.tol {
        Status::Verified
    } else if min.lower > 1.0 + o.tol {
        Status::Refuted
    } else {
        Status::NumericalFailure
    };
    Ok((status, json!({ "min_projection": min, "norm_one_projection_exists": status == Status::Verified })))
}

fn retraction_options(o: &Options) -> RetractionOptions {
    RetractionOptions {
        samples: o.samples,
        seed: o.seed,
        max_order: o.max_order,
        ..RetractionOptions::default()
    }
}

fn retract(input: &RetractInput, o: &Options) -> Step {
    let (n1, n2) = (&input.source_norm, &input.target_norm);
    linalg::require_dim(n1.dim(), input.f.dim_in())?;
    linalg::require_dim(n2.dim(), input.f.dim_out())?;
    let jac = input.f.jacobian(&CVector::zeros(n1.dim()))?;
    let (method, pi, _) = construct(&jac, n1, n2, o)?;
    let bundle = build_retraction(&input.f, n1, n2, &pi, &retraction_options(o))?;
    Ok((Status::Verified, json!({ "method": method, "retraction": bundle })))
}

fn counterexample(o: &Options) -> Step {
    let rep = counterexample_obstruction(o.tol, o.budget, o.samples.min(1000), o.seed)?;
    let status = if rep.no_norm_one_projection {
        Status::Refuted
    } else {
        Status::NumericalFailure
    };
    Ok((status, json!({ "obstruction": rep })))
}

fn corollary_demo(input: Option<CorollaryInput>, o: &Options) -> Step {
    let (f, a, builtin) = match input {
        Some(CorollaryInput { f, a }) => (f, a, false),
        None => (instances::polydisk_demo_map(), instances::demo_base_point(), true),
    };
    let (n, m) = (f.dim_in(), f.dim_out());
    let (n1, n2) = (Norm::Sup(n), Norm::Sup(m));
    let ft = conjugate_to_origin(&f, &a)?;
    let zero = CVector::zeros(n);
    let at_origin = max_abs(&ft.eval(&zero)?);
    let dirs = n1.unit_sphere_sample(o.samples.clamp(1, 1000), o.seed);
    let metric_defect = conjugation_metric_defect(&f, &a, &dirs)?;
    let jac = ft.jacobian(&zero)?;
    let v = isometry_check(&jac, &n1, &n2, o.samples, o.seed, o.tol)?;
    if !v.is_isometry {
        return Ok((Status::Refuted, json!({ "conjugated": ft, "verdict": v })));
    }
    let opts = retraction_options(o);
    let cert = support_index_certificate(&jac, m, n)?;
    let c0 = property_v_c0(&jac, &cert)?;
    let ext = property_v_supsource(&jac, &n2, o.tol.min(PROJECTION_TOL))?;
    let mut runs = Vec::new();
    let mut worst: f64 = at_origin.max(metric_defect);
    for (method, pi) in [("support_index", c0), ("minimal_extension", ext)] {
        let bundle = build_retraction(&ft, &n1, &n2, &pi, &opts)?;
        for r in &bundle.verification.residuals {
            if r.name != "projection_norm" {
                worst = worst.max(r.value);
            }
        }
        runs.push(json!({ "method": method, "retraction": bundle }));
    }
    let status = if worst <= 1e-7 { Status::Verified } else { Status::NumericalFailure };
    Ok((
        status,
        json!({
            "builtin_fixture": builtin,
            "f": f,
            "base_point": linalg_value(&a),
            "conjugated": ft,
            "conjugated_at_origin": at_origin,
            "metric_transport_defect": metric_defect,
            "verdict": v,
            "retractions": runs,
            "max_residual": worst,
        }),
    ))
}

fn linalg_value(v: &CVector) -> Value {
    Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect())
}

/// Plain-text rendering of a JSON report: one `path: value` line per leaf.
pub fn render_text(v: &Value) -> String {
    fn walk(v: &Value, path: &str, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, x) in map {
                    let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    walk(x, &p, out);
                }
            }
            Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) || is_scalar_pair(items) => {
                let _ = writeln!(out, "{path}: {v}");
            }
            Value::Array(items) => {
                for (i, x) in items.iter().enumerate() {
                    walk(x, &format!("{path}[{i}]"), out);
                }
            }
            _ => {
                let _ = writeln!(out, "{path}: {v}");
            }
        }
    }
    fn is_scalar_pair(items: &[Value]) -> bool {
        items.iter().all(|x| matches!(x, Value::Array(p) if p.len() == 2 && p.iter().all(Value::is_number)))
    }
    let mut out = String::new();
    walk(v, "", &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_statuses() {
        assert_eq!(Status::of_error(&Error::NotAnIsometry("x".into())), Status::Refuted);
        assert_eq!(Status::of_error(&Error::VerificationFailure(vec![])), Status::Refuted);
        assert_eq!(Status::of_error(&Error::Dimension { expected: 1, got: 2 }), Status::InvalidInput);
        assert_eq!(Status::of_error(&Error::WrongNormKind { expected: "sup" }), Status::InvalidInput);
        let e = Error::NumericalFailure {
            reason: "stall".into(),
            lower: 0.9,
            upper: 1.1,
        };
        assert_eq!(Status::of_error(&e).code(), 3);
        assert_eq!(error_json(&e)["upper"], 1.1);
    }

    #[test]
    fn missing_input_is_invalid() {
        let out = run(&Scenario {
            command: Command::Metric,
            input: None,
            options: Options::default(),
        });
        assert_eq!(out.exit_code(), 2);
        assert_eq!(out.report["command"], "metric");
    }

    #[test]
    fn text_rendering_flattens_paths() {
        let v = json!({ "a": { "b": 1, "c": [[1.0, 0.0], [0.5, 0.0]] }, "d": [{ "e": true }] });
        let text = render_text(&v);
        assert!(text.contains("a.b: 1\n"));
        assert!(text.contains("a.c: [[1.0,0.0],[0.5,0.0]]\n"));
        assert!(text.contains("d[0].e: true\n"));
    }
}

//! Holomorphic retractions onto the image of a map with isometric derivative.
//!
//! Given `f : B₁ → B₂` with `f(0) = 0`, an isometric `f'(0)` and a norm-one
//! projection `π` onto `f'(0)(E₁)`, the composition `π ∘ f` is the linear
//! isometry `φ = π f'(0)`. Then `f(B₁)` is the graph of
//! `ψ = (id − π) ∘ f ∘ φ⁻¹` over `π(B₂)`, `r = π + ψ ∘ π` retracts `B₂` onto
//! it, and `g = φ⁻¹ ∘ π` inverts `f` there.

use serde::{Deserialize, Serialize};

use crate::caratheodory::{carath_supball, isometry_check};
use crate::error::{Error, Residual, Result};
use crate::holomap::{moebius_automorphism, multi_indices, taylor_nodes, MapExpr, DEFAULT_TAYLOR_RADIUS};
use crate::linalg::{self, max_abs, max_abs_entry, norm2, pseudo_inverse, rank, require_dim, CMatrix, CVector};
use crate::norms::Norm;
use crate::projections::{projection_norm, ProjectionBundle};

/// Modulus above which a Taylor coefficient of `π ∘ f` counts as nonzero.
pub const LINEARITY_TOL: f64 = 1e-8;
/// Default highest order checked for linearity of `π ∘ f`.
pub const DEFAULT_MAX_ORDER: u32 = 4;
/// Limit for every sampled residual of a retraction.
pub const SAMPLE_TOL: f64 = 1e-8;
/// Largest norm of a sampled verification point.
pub const SAMPLE_RADIUS: f64 = 0.9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearityReport {
    pub max_order: u32,
    pub radius: f64,
    pub coefficients_checked: usize,
    pub max_modulus: f64,
    pub worst_alpha: Option<Vec<u32>>,
}

/// Taylor coefficients of `π ∘ f` of orders `2..=max_order` must vanish.
pub fn verify_linearity_of_pi_f(f: &MapExpr, pi: &CMatrix, max_order: u32, radius: f64) -> Result<LinearityReport> {
    require_dim(f.dim_out(), pi.ncols())?;
    require_dim(pi.nrows(), pi.ncols())?;
    let f0 = f.eval(&CVector::zeros(f.dim_in()))?;
    if max_abs(&f0) > 1e-12 {
        return Err(Error::InvalidInput(format!("f(0) must vanish, got modulus {:e}", max_abs(&f0))));
    }
    if max_abs_entry(&(pi * pi - pi)) > 1e-9 {
        return Err(Error::InvalidInput("pi is not idempotent".into()));
    }
    let alphas = multi_indices(f.dim_in(), 2, max_order.max(1));
    let mut report = LinearityReport {
        max_order,
        radius,
        coefficients_checked: alphas.len(),
        max_modulus: 0.0,
        worst_alpha: None,
    };
    if alphas.is_empty() {
        return Ok(report);
    }
    let composed = MapExpr::compose(vec![MapExpr::Linear(pi.clone()), f.clone()])?;
    let coeffs = composed.taylor_coeffs(&alphas, radius, taylor_nodes(max_order))?;
    for (alpha, coeff) in alphas.into_iter().zip(coeffs) {
        let modulus = max_abs(&coeff);
        if modulus > report.max_modulus || report.worst_alpha.is_none() {
            report.max_modulus = modulus;
            report.worst_alpha = Some(alpha);
        }
    }
    if report.max_modulus > LINEARITY_TOL {
        return Err(Error::LinearityViolation {
            alpha: report.worst_alpha.clone().unwrap_or_default(),
            modulus: report.max_modulus,
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetractionOptions {
    pub samples: usize,
    pub seed: u64,
    pub max_order: u32,
    pub radius: f64,
}

impl Default for RetractionOptions {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed: 0,
            max_order: DEFAULT_MAX_ORDER,
            radius: DEFAULT_TAYLOR_RADIUS,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetractionVerification {
    pub residuals: Vec<Residual>,
    pub linearity: LinearityReport,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetractionBundle {
    pub f: MapExpr,
    pub pi: ProjectionBundle,
    /// `φ = π f'(0)`.
    #[serde(with = "linalg::serde_cmatrix")]
    pub phi: CMatrix,
    pub psi: MapExpr,
    pub r: MapExpr,
    pub g: MapExpr,
    pub verification: RetractionVerification,
}

/// Builds `φ`, `ψ`, `r`, `g` and checks them on seeded samples.
///
/// Preconditions (`f(0) = 0`, isometric `f'(0)`, `π` a projection onto
/// `f'(0)(E₁)`) fail with an input error; the norm-one requirement on `π` is
/// part of the verification, so an over-norm projection yields
/// `VerificationFailure` with the full residual table.
pub fn build_retraction(
    f: &MapExpr,
    n1: &Norm,
    n2: &Norm,
    pi: &ProjectionBundle,
    opts: &RetractionOptions,
) -> Result<RetractionBundle> {
    require_dim(n1.dim(), f.dim_in())?;
    require_dim(n2.dim(), f.dim_out())?;
    require_dim(n2.dim(), pi.pi.nrows())?;
    let (n, m) = (n1.dim(), n2.dim());
    let zero = CVector::zeros(n);
    let f0 = f.eval(&zero)?;
    if max_abs(&f0) > 1e-12 {
        return Err(Error::InvalidInput(format!("f(0) must vanish, got modulus {:e}", max_abs(&f0))));
    }
    let jac = f.jacobian(&zero)?;
    let verdict = isometry_check(&jac, n1, n2, 200, opts.seed, 1e-8)?;
    if !verdict.is_isometry {
        return Err(Error::NotAnIsometry(format!(
            "f'(0) changes a unit vector's norm by {:e}",
            verdict.max_deviation
        )));
    }
    let p = &pi.pi;
    if max_abs_entry(&(p * &jac - &jac)) > 1e-9 * (1.0 + max_abs_entry(&jac)) || rank(p) != rank(&jac) {
        return Err(Error::InvalidInput("pi is not a projection onto f'(0)(E1)".into()));
    }
    let linearity = verify_linearity_of_pi_f(f, p, opts.max_order, opts.radius)?;

    let phi = p * &jac;
    let phi_inv = pseudo_inverse(&phi);
    let complement = CMatrix::identity(m, m) - p;
    let psi = MapExpr::compose(vec![MapExpr::Linear(complement), f.clone(), MapExpr::Linear(phi_inv.clone())])?;
    let r = MapExpr::sum(vec![
        MapExpr::Linear(p.clone()),
        MapExpr::compose(vec![psi.clone(), MapExpr::Linear(p.clone())])?,
    ])?;
    let g = MapExpr::Linear(&phi_inv * p);

    let mut residuals = vec![
        Residual::new("projection_norm", pi.norm_certificate.value, 1.0 + 1e-6),
        Residual::new("phi_matches_projected_jacobian", max_abs_entry(&(&phi - p * &jac)), 1e-10),
    ];

    // sampled checks; evaluation failures count as infinite residuals
    let mut idem: f64 = 0.0;
    let mut onto: f64 = 0.0;
    let mut into_ball: f64 = 0.0;
    for y in n2.ball_sample(opts.samples, SAMPLE_RADIUS, opts.seed) {
        match retract_sample(f, &r, &g, n2, &y) {
            Ok((d_idem, d_onto, excess)) => {
                idem = idem.max(d_idem);
                onto = onto.max(d_onto);
                into_ball = into_ball.max(excess);
            }
            Err(Error::Domain(_)) => {
                idem = f64::INFINITY;
                into_ball = f64::INFINITY;
            }
            Err(e) => return Err(e),
        }
    }
    let mut fixes: f64 = 0.0;
    let mut left_inv: f64 = 0.0;
    let mut graph: f64 = 0.0;
    for x in n1.ball_sample(opts.samples, SAMPLE_RADIUS, opts.seed.wrapping_add(1)) {
        let fx = f.eval(&x)?;
        match r.eval(&fx) {
            Ok(rfx) => fixes = fixes.max(norm2(&(rfx - &fx))),
            Err(Error::Domain(_)) => fixes = f64::INFINITY,
            Err(e) => return Err(e),
        }
        left_inv = left_inv.max(norm2(&(g.eval(&fx)? - &x)));
        let base = &phi * &x;
        match psi.eval(&base) {
            Ok(over) => graph = graph.max(norm2(&(base + over - &fx))),
            Err(Error::Domain(_)) => graph = f64::INFINITY,
            Err(e) => return Err(e),
        }
    }
    residuals.extend([
        Residual::new("r_idempotent", idem, SAMPLE_TOL),
        Residual::new("r_onto_image", onto, SAMPLE_TOL),
        Residual::new("r_into_ball", into_ball, 0.0),
        Residual::new("r_fixes_image", fixes, SAMPLE_TOL),
        Residual::new("g_left_inverse", left_inv, SAMPLE_TOL),
        Residual::new("graph_of_psi", graph, SAMPLE_TOL),
    ]);

    let jr = r.jacobian(&CVector::zeros(m))?;
    residuals.push(Residual::new("r_derivative_is_pi", max_abs_entry(&(&jr - p)), 1e-9));
    let jr_norm = projection_norm(&jr, n2, 1e-10)?;
    residuals.push(Residual::new("r_derivative_norm_one", (jr_norm.value - 1.0).abs(), 1e-9));

    if residuals.iter().any(|r| !r.passed()) {
        return Err(Error::VerificationFailure(residuals));
    }
    Ok(RetractionBundle {
        f: f.clone(),
        pi: pi.clone(),
        phi,
        psi,
        r,
        g,
        verification: RetractionVerification {
            residuals,
            linearity,
            samples: opts.samples,
            seed: opts.seed,
        },
    })
}

/// `(‖r(r(y)) − r(y)‖, ‖r(y) − f(g(r(y)))‖, max(0, ‖r(y)‖ − 1))`.
fn retract_sample(f: &MapExpr, r: &MapExpr, g: &MapExpr, n2: &Norm, y: &CVector) -> Result<(f64, f64, f64)> {
    let ry = r.eval(y)?;
    let rry = r.eval(&ry)?;
    let back = f.eval(&g.eval(&ry)?)?;
    // the open ball: norm exactly one already counts as leaving it
    let nr = n2.eval(&ry)?;
    let excess = if nr < 1.0 { 0.0 } else { nr - 1.0 + f64::MIN_POSITIVE };
    Ok((norm2(&(rry - &ry)), norm2(&(&ry - back)), excess))
}

/// `φ_{−f(a)} ∘ f ∘ φ_a`: moves the base point `a` and its image to the
/// origin. Both balls must be polydisks.
pub fn conjugate_to_origin(f: &MapExpr, a: &CVector) -> Result<MapExpr> {
    require_dim(f.dim_in(), a.len())?;
    if max_abs(a) >= 1.0 {
        return Err(Error::Domain(format!("base point has sup norm {}, outside the polydisk", max_abs(a))));
    }
    let fa = f.eval(a)?;
    if max_abs(&fa) >= 1.0 {
        return Err(Error::Domain(format!("f(a) has sup norm {}, outside the polydisk", max_abs(&fa))));
    }
    MapExpr::compose(vec![moebius_automorphism(&-fa)?, f.clone(), moebius_automorphism(a)?])
}

/// `max |‖f̃'(0) v‖ − E(f(a), f'(a) φ_a'(0) v)|` over the given directions, where
/// `f̃ = conjugate_to_origin(f, a)`; zero up to rounding by the chain rule.
pub fn conjugation_metric_defect(f: &MapExpr, a: &CVector, directions: &[CVector]) -> Result<f64> {
    let ft = conjugate_to_origin(f, a)?;
    let jt = ft.jacobian(&CVector::zeros(a.len()))?;
    let shift = moebius_automorphism(a)?.jacobian(&CVector::zeros(a.len()))?;
    let fa = f.eval(a)?;
    let ja = f.jacobian(a)?;
    let mut worst: f64 = 0.0;
    for v in directions {
        let lhs = max_abs(&(&jt * v));
        let rhs = carath_supball(&fa, &(&ja * (&shift * v)))?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

//! Norm-one projections onto isometric images.
//!
//! Three constructions are provided: the orthogonal projection for Hilbert
//! targets, componentwise minimal-norm extension of the inverse for a sup-norm
//! source, and the support-index construction between sup-norm spaces. The
//! minimal projection norm onto an arbitrary range is available as a certified
//! convex program, which is what shows that the sup-norm plane
//! `{(x, y, x + y)}` in `C^3` admits no norm-one projection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convex::GroupedL1;
use crate::error::{Error, Residual, Result};
use crate::linalg::{
    self, c, from_columns, kernel_basis, kernel_matrix, max_abs, max_abs_entry, pseudo_inverse, rank,
    require_dim, rvec, spectral_norm, CMatrix, CVector, C64, ONE, ZERO,
};
use crate::norms::{gaussian_vector, max_row_sum, min_base_dual, operator_norm, Base, Canonical, Norm};

/// Tolerance of the support-index search: `||L_jk| − 1| ≤ UNIMODULAR_TOL`.
pub const UNIMODULAR_TOL: f64 = 1e-12;
/// Entries below this are treated as zero by the vanishing check.
pub const VANISHING_TOL: f64 = 1e-10;

/// `lower ≤ ‖pi‖ ≤ value`; `exact` when the norm has a closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormCertificate {
    pub value: f64,
    pub lower: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectionBundle {
    #[serde(with = "linalg::serde_cmatrix")]
    pub pi: CMatrix,
    /// Basis of the range `L(E₁)`.
    #[serde(with = "linalg::serde_cvectors")]
    pub range_basis: Vec<CVector>,
    /// Basis of the complement `F = Ker(pi)`.
    #[serde(with = "linalg::serde_cvectors")]
    pub complement_basis: Vec<CVector>,
    /// Left inverse of `L` with `pi = L H`.
    #[serde(with = "linalg::serde_cmatrix")]
    pub h: CMatrix,
    pub norm_certificate: NormCertificate,
}

impl ProjectionBundle {
    fn assemble(l: &CMatrix, h: CMatrix, norm_certificate: NormCertificate) -> Self {
        let pi = l * &h;
        Self {
            complement_basis: kernel_basis(&pi),
            range_basis: linalg::columns(l),
            pi,
            h,
            norm_certificate,
        }
    }

    /// Bundle for `pi = L H`, with the norm certified on `(C^m, n2)`.
    pub fn from_left_inverse(l: &CMatrix, h: CMatrix, n2: &Norm, tol: f64) -> Result<Self> {
        require_dim(l.nrows(), h.ncols())?;
        require_dim(l.ncols(), h.nrows())?;
        let cert = projection_norm(&(l * &h), n2, tol)?;
        Ok(Self::assemble(l, h, cert))
    }

    /// Residuals of the structural invariants against the embedding `l`:
    /// idempotence, range fixing, left inverse, and the direct decomposition.
    pub fn invariant_residuals(&self, l: &CMatrix) -> Vec<Residual> {
        let m = self.pi.nrows();
        let idem = max_abs_entry(&(&self.pi * &self.pi - &self.pi));
        let fixes = max_abs_entry(&(&self.pi * l - l));
        let left_inverse = max_abs_entry(&(&self.h * l - CMatrix::identity(l.ncols(), l.ncols())));
        let range_in_kernel = self
            .complement_basis
            .iter()
            .map(|v| max_abs(&(&self.pi * v)))
            .fold(0.0, f64::max);
        let mut all = self.range_basis.clone();
        all.extend(self.complement_basis.iter().cloned());
        let spans = if all.len() == m && m > 0 {
            let s = linalg::singular_values(&from_columns(&all).expect("same length"));
            (m - s.iter().filter(|&&x| x > 1e-9 * s[0]).count()) as f64
        } else {
            (m as f64 - all.len() as f64).abs().max(f64::from(u8::from(all.len() != m)))
        };
        vec![
            Residual::new("idempotent", idem, 1e-9),
            Residual::new("fixes_range", fixes, 1e-9),
            Residual::new("left_inverse", left_inverse, 1e-9),
            Residual::new("complement_in_kernel", range_in_kernel, 1e-9),
            Residual::new("direct_sum_defect", spans, 0.0),
        ]
    }
}

/// Norm of a projection-like matrix on `(C^m, n2)`: exact for sup and
/// Euclidean-based targets, bracketed otherwise.
pub fn projection_norm(pi: &CMatrix, n2: &Norm, tol: f64) -> Result<NormCertificate> {
    require_dim(n2.dim(), pi.nrows())?;
    if let Norm::Sup(_) = n2 {
        let (_, value) = max_row_sum(pi);
        return Ok(NormCertificate {
            value,
            lower: value,
            exact: true,
        });
    }
    let Canonical { base, map } = n2.canonical();
    match base {
        Base::Euclidean => {
            // T pi T⁺ vanishes off range(T), so its spectral norm is exact
            let value = spectral_norm(&(&map * pi * pseudo_inverse(&map)));
            Ok(NormCertificate {
                value,
                lower: value,
                exact: true,
            })
        }
        Base::Sup => {
            let op = operator_norm(pi, n2, n2, tol)?;
            Ok(NormCertificate {
                value: op.upper,
                lower: op.lower,
                exact: false,
            })
        }
    }
}

fn require_injective(l: &CMatrix) -> Result<()> {
    let r = rank(l);
    if r < l.ncols() {
        return Err(Error::RankDeficient {
            rank: r,
            required: l.ncols(),
        });
    }
    Ok(())
}

/// The orthogonal projection onto `range(L)`.
///
/// Also accepted: pullbacks whose canonical base is Euclidean, using the
/// inner product `⟨x, y⟩ = (T x)^H (T y)`.
pub fn project_hilbert(l: &CMatrix, n2: &Norm) -> Result<ProjectionBundle> {
    require_dim(n2.dim(), l.nrows())?;
    let Canonical { base, map } = n2.canonical();
    if base != Base::Euclidean {
        return Err(Error::WrongNormKind { expected: "euclidean" });
    }
    require_injective(l)?;
    let tl = &map * l;
    // H = (L^H G L)⁻¹ L^H G with G = T^H T; equals (T L)⁺ T
    let h = pseudo_inverse(&tl) * &map;
    let cert = projection_norm(&(l * &h), n2, 0.0)?;
    Ok(ProjectionBundle::assemble(l, h, cert))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Extension {
    #[serde(with = "linalg::serde_cvector")]
    pub h: CVector,
    /// Dual norm of `h`; an upper bound on the minimal extension norm.
    pub dual_norm: f64,
    /// Certified lower bound on the minimal extension norm.
    pub lower: f64,
}

/// Extension of the functional `s_k ↦ values_k` from `span(S)` to all of
/// `C^m` with minimal dual norm.
pub fn min_norm_extension(s_basis: &[CVector], values: &CVector, n2: &Norm, tol: f64) -> Result<Extension> {
    require_dim(s_basis.len(), values.len())?;
    for s in s_basis {
        require_dim(n2.dim(), s.len())?;
    }
    let s = if s_basis.is_empty() {
        CMatrix::zeros(n2.dim(), 0)
    } else {
        from_columns(s_basis)?
    };
    require_injective(&s)?;
    let Canonical { base, map } = n2.canonical();
    // h = T^T c with ⟨h, s_k⟩ = (T s_k)^T c
    let constraints = (&map * &s).transpose();
    let sol = min_base_dual(base, &constraints, values, tol)?;
    let h = map.transpose() * &sol.c;
    let gap = sol.upper - sol.lower;
    if gap > tol {
        return Err(Error::NumericalFailure {
            reason: "extension program did not close its duality gap".into(),
            lower: sol.lower,
            upper: sol.upper,
        });
    }
    Ok(Extension {
        h,
        dual_norm: sol.upper,
        lower: sol.lower.min(sol.upper),
    })
}

/// Projection onto the image of `L : (C^n, sup) → (C^m, n2)` built from
/// minimal-norm extensions of the coordinates of `L⁻¹`.
pub fn property_v_supsource(l: &CMatrix, n2: &Norm, tol: f64) -> Result<ProjectionBundle> {
    require_dim(n2.dim(), l.nrows())?;
    require_injective(l)?;
    let n = l.ncols();
    let cols = linalg::columns(l);
    let mut h = CMatrix::zeros(n, l.nrows());
    let mut uppers = Vec::with_capacity(n);
    let mut lowers = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = CVector::zeros(n);
        e[i] = ONE;
        let ext = min_norm_extension(&cols, &e, n2, tol)?;
        h.row_mut(i).copy_from(&ext.h.transpose());
        uppers.push(ext.dual_norm);
        lowers.push(ext.lower);
    }
    if lowers.iter().any(|&lo| lo > 1.0 + tol) {
        return Err(Error::Infeasible { best_norms: uppers });
    }
    if uppers.iter().any(|&up| up > 1.0 + tol) {
        return Err(Error::NumericalFailure {
            reason: "extension norms not certified at most one".into(),
            lower: lowers.iter().copied().fold(0.0, f64::max),
            upper: uppers.iter().copied().fold(0.0, f64::max),
        });
    }
    let pi = l * &h;
    let cert = match n2.canonical().base {
        Base::Sup if !matches!(n2, Norm::Sup(_)) => NormCertificate {
            // ‖L H‖ ≤ ‖L‖ max_i ‖h_i‖_* with ‖L‖ = 1
            value: uppers.iter().copied().fold(0.0, f64::max),
            lower: 1.0,
            exact: false,
        },
        _ => projection_norm(&pi, n2, tol)?,
    };
    if cert.lower > 1.0 + tol {
        // ‖L H‖ ≤ ‖L‖ with ‖H‖ ≤ 1, so L itself expands some vector
        return Err(Error::NotAnIsometry(format!(
            "the assembled projection has norm {}, so L has norm above one",
            cert.lower
        )));
    }
    Ok(ProjectionBundle::assemble(l, h, cert))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanishingCheck {
    pub k: usize,
    pub l: usize,
    pub row: usize,
    pub modulus: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportIndexCertificate {
    /// `j_of_k[k]`: the support row of column `k`.
    pub j_of_k: Vec<usize>,
    /// `lambda_k[k] = L[j(k), k]`, unimodular.
    #[serde(with = "linalg::serde_cvector")]
    pub lambda_k: CVector,
    /// The support rows in increasing order.
    pub m: Vec<usize>,
    /// `π_M L`, a permuted diagonal of unimodular entries.
    #[serde(with = "linalg::serde_cmatrix")]
    pub phi: CMatrix,
    pub vanishing_checks: Vec<VanishingCheck>,
}

/// Support rows of a sup-to-sup isometry, with the vanishing property
/// checked entry by entry. Ties go to the smallest row. Together with row
/// sums at most one these checks certify the isometry exactly.
pub fn support_index_certificate(l: &CMatrix, m: usize, n: usize) -> Result<SupportIndexCertificate> {
    require_dim(m, l.nrows())?;
    require_dim(n, l.ncols())?;
    let mut j_of_k = Vec::with_capacity(n);
    for k in 0..n {
        let j = (0..m)
            .find(|&j| (l[(j, k)].norm() - 1.0).abs() <= UNIMODULAR_TOL)
            .ok_or_else(|| Error::NotAnIsometry(format!("column {k} has no unimodular entry")))?;
        j_of_k.push(j);
    }
    let mut vanishing_checks = Vec::with_capacity(n * n.saturating_sub(1));
    for (k, &row) in j_of_k.iter().enumerate() {
        for li in (0..n).filter(|&li| li != k) {
            let modulus = l[(row, li)].norm();
            if modulus > VANISHING_TOL {
                return Err(Error::VanishingViolation { k, l: li, row, modulus });
            }
            vanishing_checks.push(VanishingCheck { k, l: li, row, modulus });
        }
    }
    let (row, top) = max_row_sum(l);
    if top > 1.0 + UNIMODULAR_TOL {
        return Err(Error::NotAnIsometry(format!(
            "row {} has absolute sum {top}",
            row.unwrap_or(0)
        )));
    }
    // a repeated row would already have failed the vanishing check
    let mut rows = j_of_k.clone();
    rows.sort_unstable();
    rows.dedup();
    if rows.len() != n {
        return Err(Error::NotAnIsometry("support rows are not distinct".into()));
    }
    let lambda_k = CVector::from_fn(n, |k, _| l[(j_of_k[k], k)]);
    let phi = CMatrix::from_fn(n, n, |i, k| l[(rows[i], k)]);
    Ok(SupportIndexCertificate {
        j_of_k,
        lambda_k,
        m: rows,
        phi,
        vanishing_checks,
    })
}

/// `pi = L φ⁻¹ π_M`, of sup norm exactly one.
pub fn property_v_c0(l: &CMatrix, cert: &SupportIndexCertificate) -> Result<ProjectionBundle> {
    let n = l.ncols();
    require_dim(n, cert.j_of_k.len())?;
    require_dim(n, cert.lambda_k.len())?;
    for (k, &j) in cert.j_of_k.iter().enumerate() {
        if j >= l.nrows() || (l[(j, k)] - cert.lambda_k[k]).norm() > UNIMODULAR_TOL {
            return Err(Error::InvalidInput(format!(
                "support-index certificate does not match the matrix at column {k}"
            )));
        }
    }
    // φ is monomial, so φ⁻¹ π_M sends e^{j(k)} to e^k / λ_k
    let mut h = CMatrix::zeros(n, l.nrows());
    for (k, &j) in cert.j_of_k.iter().enumerate() {
        h[(k, j)] = ONE / cert.lambda_k[k];
    }
    let pi = l * &h;
    let cert = projection_norm(&pi, &Norm::Sup(l.nrows()), 0.0)?;
    Ok(ProjectionBundle::assemble(l, h, cert))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinProjection {
    /// Norm of `pi_best`; an upper bound on the minimum.
    pub value: f64,
    /// Certified lower bound on the minimum.
    pub lower: f64,
    #[serde(with = "linalg::serde_cmatrix")]
    pub pi_best: CMatrix,
    /// `value − lower ≤ tol`.
    pub certified: bool,
    pub iterations: usize,
}

/// Smallest operator norm of a projection onto `span(range_basis)`.
///
/// Projections are `L (L⁺ + W Z^T)` with `Z` spanning `ker L^T`. For
/// sup-based targets the norm is a maximum of dual norms of rows, and the
/// whole problem is one grouped-l1 program with a duality certificate.
/// For Euclidean-based targets the orthogonal projection is optimal.
pub fn min_projection_norm(range_basis: &[CVector], n2: &Norm, tol: f64, budget: usize) -> Result<MinProjection> {
    for v in range_basis {
        require_dim(n2.dim(), v.len())?;
    }
    let mm = n2.dim();
    if range_basis.is_empty() {
        return Ok(MinProjection {
            value: 0.0,
            lower: 0.0,
            pi_best: CMatrix::zeros(mm, mm),
            certified: true,
            iterations: 0,
        });
    }
    let l = from_columns(range_basis)?;
    require_injective(&l)?;
    let Canonical { base, map: t } = n2.canonical();

    if base == Base::Euclidean {
        let b = project_hilbert(&l, n2)?;
        let value = b.norm_certificate.value;
        return Ok(MinProjection {
            value,
            lower: 1.0_f64.min(value),
            pi_best: b.pi,
            certified: (value - 1.0).abs() <= tol,
            iterations: 0,
        });
    }

    let n = l.ncols();
    let kk = t.nrows();
    let z = kernel_matrix(&l.transpose());
    let d = z.ncols();
    let p0 = &l * pseudo_inverse(&l);
    let tt_pinv = pseudo_inverse(&t.transpose());
    let zt = kernel_matrix(&t.transpose());
    let e = zt.ncols();

    // unknowns: W (n × d, row-major) then one v_k ∈ C^e per target row
    let nw = n * d;
    let mut offset = CVector::zeros(kk * kk);
    let mut dirs = CMatrix::zeros(kk * kk, nw + kk * e);
    let tp_z = &tt_pinv * &z;
    for k in 0..kk {
        let tk = t.row(k).transpose();
        let block = k * kk;
        offset.rows_mut(block, kk).copy_from(&(&tt_pinv * (p0.transpose() * &tk)));
        let lt = l.transpose() * &tk;
        for a in 0..n {
            for b in 0..d {
                let col = tp_z.column(b) * lt[a];
                dirs.view_mut((block, a * d + b), (kk, 1)).copy_from(&col);
            }
        }
        dirs.view_mut((block, nw + k * e), (kk, e)).copy_from(&zt);
    }
    let groups = (0..kk).map(|k| (k * kk..(k + 1) * kk).collect()).collect();
    // every nonzero projection has norm at least one
    let sol = GroupedL1::new(offset, dirs, groups)?.with_known_lower(1.0).solve(tol, budget)?;

    let w = CMatrix::from_fn(n, d, |a, b| sol.w[a * d + b]);
    let pi_best = &p0 + &l * w * z.transpose();
    let value = match n2 {
        Norm::Sup(_) => max_row_sum(&pi_best).1,
        _ => sol.upper,
    };
    let lower = sol.lower.min(value);
    let certified = value - lower <= tol;
    if !certified {
        return Err(Error::NumericalFailure {
            reason: "minimal projection program did not close its duality gap".into(),
            lower,
            upper: value,
        });
    }
    Ok(MinProjection {
        value,
        lower,
        pi_best,
        certified,
        iterations: sol.newton_steps,
    })
}

/// The plane `{(x, y, x + y)}` inside `(C^3, sup)`.
pub fn counterexample_map() -> CMatrix {
    crate::instances::plane_map()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceCheck {
    #[serde(with = "linalg::serde_cvector")]
    pub anchor: CVector,
    /// Index of the coordinate direction `e^i` moved along.
    pub direction: usize,
    pub samples: usize,
    /// `max | ‖anchor + t e^i‖ − 1 |` over sampled `|t| ≤ 1`.
    pub max_norm_deviation: f64,
    pub on_boundary: bool,
}

/// A unit point on a boundary face whose image under a candidate projection
/// has norm above one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbationWitness {
    pub candidate: usize,
    /// Which of `π(e^1)`, `π(e^2)` (0-based index) was nonzero.
    pub basis_index: usize,
    #[serde(with = "linalg::serde_cvector")]
    pub pi_basis_image: CVector,
    #[serde(with = "linalg::serde_cvector")]
    pub point: CVector,
    pub point_norm: f64,
    pub image_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraicContradiction {
    /// `π(2 e^3) = π(L(1,1) − e^1 − e^2) = L(1,1)` when `π(e^1) = π(e^2) = 0`.
    #[serde(with = "linalg::serde_cvector")]
    pub pi_two_e3: CVector,
    #[serde(with = "linalg::serde_cvector")]
    pub pi_e3: CVector,
    /// `π(1,0,1) = π(e^1) + π(e^3)`.
    #[serde(with = "linalg::serde_cvector")]
    pub pi_of_range_vector: CVector,
    #[serde(with = "linalg::serde_cvector")]
    pub range_vector: CVector,
    pub defect: f64,
    pub contradiction: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObstructionReport {
    #[serde(with = "linalg::serde_cmatrix")]
    pub l: CMatrix,
    #[serde(with = "linalg::serde_cvector")]
    pub l_of_11: CVector,
    pub face_checks: Vec<FaceCheck>,
    /// Candidates examined: the certified optimum first, then seeded members
    /// of the projection family.
    pub candidates: usize,
    pub witnesses: Vec<PerturbationWitness>,
    pub every_candidate_refuted: bool,
    pub algebra: AlgebraicContradiction,
    pub min_projection: MinProjection,
    pub no_norm_one_projection: bool,
}

/// Machine-checked proof that the plane `{(x, y, x + y)}` has no norm-one
/// projection in `(C^3, sup)`.
///
/// The faces `(1,0,1) + t e^2` and `(0,1,1) + t e^1` (`|t| ≤ 1`) lie on the unit
/// sphere. A norm-one projection fixing the plane keeps them in the ball, which
/// forces `π(e^2)` and `π(e^1)` to vanish; every candidate with a nonzero one
/// is refuted by an explicit point. With both zero, `π(2 e^3) = L(1,1) = (1,1,2)`
/// and so `π(1,0,1) = (1/2, 1/2, 1)`, which is not `(1,0,1)`.
pub fn counterexample_obstruction(tol: f64, budget: usize, samples: usize, seed: u64) -> Result<ObstructionReport> {
    let l = counterexample_map();
    let sup3 = Norm::Sup(3);
    let l_of_11 = &l * rvec(&[1.0, 1.0]);
    let anchors = [(l.column(0).into_owned(), 1usize), (l.column(1).into_owned(), 0usize)];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut face_checks = Vec::new();
    for (anchor, dir) in &anchors {
        let mut worst: f64 = 0.0;
        for s in 0..samples.max(1) {
            let t = if s == 0 {
                ONE
            } else {
                let g = gaussian_vector(1, &mut rng)[0];
                let u: f64 = rand::Rng::random(&mut rng);
                g / c(g.norm().max(1e-300), 0.0) * u
            };
            let mut y = anchor.clone();
            y[*dir] += t;
            worst = worst.max((sup3.eval(&y)? - 1.0).abs());
        }
        face_checks.push(FaceCheck {
            anchor: anchor.clone(),
            direction: *dir,
            samples: samples.max(1),
            max_norm_deviation: worst,
            on_boundary: worst == 0.0,
        });
    }

    let min_projection = min_projection_norm(&linalg::columns(&l), &sup3, tol, budget)?;

    let mut candidates = vec![min_projection.pi_best.clone()];
    let z = kernel_matrix(&l.transpose());
    let p0 = &l * pseudo_inverse(&l);
    for _ in 0..samples {
        let w = CMatrix::from_fn(2, z.ncols(), |_, _| gaussian_vector(1, &mut rng)[0]);
        candidates.push(&p0 + &l * w * z.transpose());
    }
    let mut witnesses = Vec::new();
    for (idx, pi) in candidates.iter().enumerate() {
        if let Some(w) = face_witness(idx, pi, &anchors)? {
            witnesses.push(w);
        }
    }
    let every_candidate_refuted = witnesses.len() == candidates.len();

    let e1 = rvec(&[1.0, 0.0, 0.0]);
    let e2 = rvec(&[0.0, 1.0, 0.0]);
    let pi_e1 = CVector::zeros(3);
    let pi_e2 = CVector::zeros(3);
    // L(1,1) = e^1 + e^2 + 2 e^3 is fixed by π, so 2 π(e^3) = L(1,1) − π(e^1) − π(e^2)
    debug_assert_eq!(&l_of_11 - &e1 - &e2, rvec(&[0.0, 0.0, 2.0]));
    let pi_two_e3 = &l_of_11 - &pi_e1 - &pi_e2;
    let pi_e3 = &pi_two_e3 * c(0.5, 0.0);
    let range_vector = l.column(0).into_owned();
    let pi_of_range_vector = &pi_e1 + &pi_e3;
    let defect = max_abs(&(&pi_of_range_vector - &range_vector));
    let algebra = AlgebraicContradiction {
        pi_two_e3,
        pi_e3,
        pi_of_range_vector,
        range_vector,
        defect,
        contradiction: defect > 0.0,
    };

    let no_norm_one_projection = min_projection.certified && min_projection.lower > 1.0 && algebra.contradiction;
    Ok(ObstructionReport {
        l,
        l_of_11,
        face_checks,
        candidates: candidates.len(),
        witnesses,
        every_candidate_refuted,
        algebra,
        min_projection,
        no_norm_one_projection,
    })
}

/// For a projection onto the plane, `π(e^i) = (a, b, a + b)`; if it is nonzero,
/// one of the two coordinates where the face anchor equals 1 is nonzero, and
/// moving along the face with the matching phase pushes that coordinate past 1.
fn face_witness(candidate: usize, pi: &CMatrix, anchors: &[(CVector, usize)]) -> Result<Option<PerturbationWitness>> {
    let sup3 = Norm::Sup(3);
    let mut best: Option<PerturbationWitness> = None;
    for (anchor, dir) in anchors {
        let image = pi.column(*dir).into_owned();
        for j in (0..3).filter(|&j| anchor[j] == ONE) {
            let pj = image[j];
            if pj == ZERO {
                continue;
            }
            let t: C64 = pj.conj() / c(pj.norm(), 0.0);
            let mut point = anchor.clone();
            point[*dir] += t;
            let image_norm = sup3.eval(&(pi * &point))?;
            let better = best.as_ref().is_none_or(|b| image_norm > b.image_norm);
            if better {
                best = Some(PerturbationWitness {
                    candidate,
                    basis_index: *dir,
                    pi_basis_image: image.clone(),
                    point_norm: sup3.eval(&point)?,
                    point,
                    image_norm,
                });
            }
        }
    }
    Ok(best.filter(|w| w.image_norm > w.point_norm))
}

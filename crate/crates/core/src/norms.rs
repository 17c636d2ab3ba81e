//! Norms on `C^n`: sup, Euclidean, polyhedral gauges and pullbacks.
//!
//! Every representation reduces to `‖x‖ = base(T x)` for an injective `T`,
//! with `base` either the sup or the Euclidean norm. Dual norms and
//! norm-preserving extensions of functionals are then one of two problems:
//! a minimum-length solution (Euclidean base, closed form) or complex basis
//! pursuit (sup base, solved by [`crate::convex`] with a certificate).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::convex::{GroupedL1, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::linalg::{
    self, c, conj_vec, from_rows, kernel_matrix, max_abs, norm2, pair, phase, pseudo_inverse,
    require_dim, spectral_norm, CMatrix, CVector, C64,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormRepr", into = "NormRepr")]
pub enum Norm {
    Sup(usize),
    Euclidean(usize),
    /// `‖x‖ = max_k |⟨f_k, x⟩|`; the rows of the matrix are the `f_k`.
    Polyhedral(CMatrix),
    /// `‖x‖ = inner(map · x)`.
    Pullback { map: CMatrix, inner: Box<Norm> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Sup,
    Euclidean,
    Polyhedral,
    Pullback,
}

/// The two base norms every representation reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Base {
    Sup,
    Euclidean,
}

/// `‖x‖ = base(map · x)`.
#[derive(Debug, Clone)]
pub struct Canonical {
    pub base: Base,
    pub map: CMatrix,
}

/// Result of a dual-norm evaluation: `lower ≤ ‖g‖_* ≤ value`.
#[derive(Debug, Clone)]
pub struct DualNorm {
    pub value: f64,
    pub lower: f64,
    /// Unit vector with `|⟨g, witness⟩| = lower`.
    pub witness: CVector,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorNorm {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(with = "linalg::serde_cvector")]
    pub witness: CVector,
    pub exact: bool,
}

impl Norm {
    pub fn sup(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("sup norm needs dim >= 1".into()));
        }
        Ok(Norm::Sup(dim))
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("Euclidean norm needs dim >= 1".into()));
        }
        Ok(Norm::Euclidean(dim))
    }

    /// Rejects functionals that do not separate points.
    pub fn polyhedral(functionals: &[CVector]) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::InvalidInput("polyhedral norm needs functionals".into()));
        }
        let rows: Vec<Vec<C64>> = functionals.iter().map(|f| f.iter().copied().collect()).collect();
        let f = from_rows(&rows)?;
        if f.ncols() == 0 || !linalg::is_finite_mat(&f) {
            return Err(Error::InvalidInput("functionals must be finite and non-empty".into()));
        }
        let r = linalg::rank(&f);
        if r < f.ncols() {
            return Err(Error::RankDeficient {
                rank: r,
                required: f.ncols(),
            });
        }
        Ok(Norm::Polyhedral(f))
    }

    /// Rejects non-injective maps.
    pub fn pullback(map: CMatrix, inner: Norm) -> Result<Self> {
        require_dim(inner.dim(), map.nrows())?;
        if map.ncols() == 0 || !linalg::is_finite_mat(&map) {
            return Err(Error::InvalidInput("pullback map must be finite and non-empty".into()));
        }
        let r = linalg::rank(&map);
        if r < map.ncols() {
            return Err(Error::RankDeficient {
                rank: r,
                required: map.ncols(),
            });
        }
        Ok(Norm::Pullback {
            map,
            inner: Box::new(inner),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Norm::Sup(n) | Norm::Euclidean(n) => *n,
            Norm::Polyhedral(f) => f.ncols(),
            Norm::Pullback { map, .. } => map.ncols(),
        }
    }

    pub fn kind(&self) -> NormKind {
        match self {
            Norm::Sup(_) => NormKind::Sup,
            Norm::Euclidean(_) => NormKind::Euclidean,
            Norm::Polyhedral(_) => NormKind::Polyhedral,
            Norm::Pullback { .. } => NormKind::Pullback,
        }
    }

    pub fn canonical(&self) -> Canonical {
        match self {
            Norm::Sup(n) => Canonical {
                base: Base::Sup,
                map: CMatrix::identity(*n, *n),
            },
            Norm::Euclidean(n) => Canonical {
                base: Base::Euclidean,
                map: CMatrix::identity(*n, *n),
            },
            Norm::Polyhedral(f) => Canonical {
                base: Base::Sup,
                map: f.clone(),
            },
            Norm::Pullback { map, inner } => {
                let Canonical { base, map: t } = inner.canonical();
                Canonical { base, map: t * map }
            }
        }
    }

    /// `‖x‖`.
    pub fn eval(&self, x: &CVector) -> Result<f64> {
        require_dim(self.dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &CVector) -> f64 {
        match self {
            Norm::Sup(_) => max_abs(x),
            Norm::Euclidean(_) => norm2(x),
            Norm::Polyhedral(f) => max_abs(&(f * x)),
            Norm::Pullback { map, inner } => inner.eval_unchecked(&(map * x)),
        }
    }

    /// Covector `g` with `⟨g, x⟩ = ‖x‖` and `‖g‖_* ≤ 1`.
    pub fn norming_functional(&self, x: &CVector) -> Result<CVector> {
        require_dim(self.dim(), x.len())?;
        let Canonical { base, map } = self.canonical();
        let y = &map * x;
        let coeffs = base_norming(base, &y);
        Ok(map.transpose() * coeffs)
    }

    /// `sup{|⟨g, x⟩| : ‖x‖ ≤ 1}` with a certified bracket.
    pub fn dual_norm(&self, g: &CVector, tol: f64) -> Result<DualNorm> {
        require_dim(self.dim(), g.len())?;
        match self {
            Norm::Sup(_) => {
                let witness = CVector::from_fn(g.len(), |j, _| phase(g[j]).conj());
                let value = g.iter().map(|z| z.norm()).sum();
                Ok(DualNorm {
                    value,
                    lower: pair(g, &witness).norm(),
                    witness,
                })
            }
            Norm::Euclidean(_) => {
                let value = norm2(g);
                let witness = if value > 0.0 {
                    conj_vec(g) / c(value, 0.0)
                } else {
                    unit(g.len())
                };
                Ok(DualNorm {
                    value,
                    lower: pair(g, &witness).norm(),
                    witness,
                })
            }
            _ => {
                let Canonical { base, map } = self.canonical();
                let sol = min_base_dual(base, &map.transpose(), g, tol)?;
                // Λ ∈ range(conj T); the ball point is x with T x = conj(Λ)
                let x = pseudo_inverse(&map) * conj_vec(&sol.dual);
                let (lower, witness) = self.rigorous_lower(g, x);
                Ok(DualNorm {
                    value: sol.upper,
                    lower: lower.max(0.0).min(sol.upper),
                    witness,
                })
            }
        }
    }

    pub fn dual_norm_eval(&self, g: &CVector, tol: f64) -> Result<f64> {
        Ok(self.dual_norm(g, tol)?.value)
    }

    fn rigorous_lower(&self, g: &CVector, x: CVector) -> (f64, CVector) {
        let nx = self.eval_unchecked(&x);
        if nx > 0.0 && nx.is_finite() {
            let w = x / c(nx, 0.0);
            (pair(g, &w).norm(), w)
        } else {
            (0.0, unit(self.dim()))
        }
    }

    /// Seeded points on the unit sphere.
    pub fn unit_sphere_sample(&self, count: usize, seed: u64) -> Vec<CVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let v = gaussian_vector(n, &mut rng);
            let nv = self.eval_unchecked(&v);
            if nv > 1e-300 {
                out.push(v / c(nv, 0.0));
            }
        }
        out
    }

    /// Seeded points of the open ball with norm at most `radius`.
    pub fn ball_sample(&self, count: usize, radius: f64, seed: u64) -> Vec<CVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let sphere = self.unit_sphere_sample(count, seed);
        sphere
            .into_iter()
            .map(|v| {
                let t: f64 = rand::Rng::random(&mut rng);
                v * c(radius * t, 0.0)
            })
            .collect()
    }
}

fn unit(n: usize) -> CVector {
    let mut e = CVector::zeros(n);
    if n > 0 {
        e[0] = c(1.0, 0.0);
    }
    e
}

pub(crate) fn gaussian_vector<R: rand::Rng>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c(re, im)
    })
}

/// Norming coefficients for the base norm at `y`.
fn base_norming(base: Base, y: &CVector) -> CVector {
    let mut out = CVector::zeros(y.len());
    if y.is_empty() {
        return out;
    }
    match base {
        Base::Sup => {
            let (k, _) = y
                .iter()
                .enumerate()
                .fold((0, -1.0), |(bk, bv), (k, z)| if z.norm() > bv { (k, z.norm()) } else { (bk, bv) });
            out[k] = phase(y[k]).conj();
        }
        Base::Euclidean => {
            let ny = norm2(y);
            if ny > 0.0 {
                out = conj_vec(y) / c(ny, 0.0);
            } else {
                out[0] = c(1.0, 0.0);
            }
        }
    }
    out
}

/// `min base_*(c)` subject to `m c = v`, with certificate.
#[derive(Debug, Clone)]
pub(crate) struct BaseDualMin {
    pub c: CVector,
    pub upper: f64,
    pub lower: f64,
    /// Dual vector in `c`-space: orthogonal to `ker m`, base norm 1.
    pub dual: CVector,
}

pub(crate) fn min_base_dual(base: Base, m: &CMatrix, v: &CVector, tol: f64) -> Result<BaseDualMin> {
    require_dim(m.nrows(), v.len())?;
    let pinv = pseudo_inverse(m);
    let c0 = &pinv * v;
    let residual = norm2(&(m * &c0 - v));
    if residual > 1e-9 * (1.0 + norm2(v)) {
        return Err(Error::InvalidInput(format!(
            "linear constraints are inconsistent (residual {residual:e})"
        )));
    }
    match base {
        Base::Euclidean => {
            // c0 is the minimum-length solution; it norms itself
            let upper = norm2(&c0);
            let dual = if upper > 0.0 {
                &c0 / c(upper, 0.0)
            } else {
                CVector::zeros(c0.len())
            };
            let lower = dual.dotc(&c0).re;
            Ok(BaseDualMin {
                c: c0,
                upper,
                lower,
                dual,
            })
        }
        Base::Sup => {
            let z = kernel_matrix(m);
            let sol = GroupedL1::l1(c0, z)?.solve(tol, DEFAULT_BUDGET)?;
            Ok(BaseDualMin {
                c: sol.point,
                upper: sol.upper,
                lower: sol.lower,
                dual: sol.dual,
            })
        }
    }
}

/// Induced norm of `a : (C^n, from) -> (C^m, to)`.
pub fn operator_norm(a: &CMatrix, from: &Norm, to: &Norm, tol: f64) -> Result<OperatorNorm> {
    require_dim(from.dim(), a.ncols())?;
    require_dim(to.dim(), a.nrows())?;

    if let (Norm::Sup(_), Norm::Sup(_)) = (from, to) {
        let (row, value) = max_row_sum(a);
        let witness = match row {
            Some(i) => CVector::from_fn(a.ncols(), |j, _| phase(a[(i, j)]).conj()),
            None => unit(a.ncols()),
        };
        return Ok(OperatorNorm {
            value,
            lower: value,
            upper: value,
            witness,
            exact: true,
        });
    }

    let src = from.canonical();
    let dst = to.canonical();
    let (upper, mut witnesses) = match (src.base, dst.base) {
        (_, Base::Sup) => {
            // ‖A‖ = max_k ‖A^T t_k‖_*, one dual norm per target row
            let mut upper: f64 = 0.0;
            let mut ws = Vec::new();
            for k in 0..dst.map.nrows() {
                let row = dst.map.row(k).transpose();
                let g = a.transpose() * row;
                let d = from.dual_norm(&g, tol / 2.0)?;
                upper = upper.max(d.value);
                ws.push(d.witness);
            }
            (upper, ws)
        }
        (Base::Euclidean, Base::Euclidean) => {
            let tinv = pseudo_inverse(&src.map);
            let m = &dst.map * a * &tinv;
            let s = spectral_norm(&m);
            let (_, v) = top_right_singular(&m);
            (s, vec![&tinv * v])
        }
        (Base::Sup, Base::Euclidean) => {
            let tinv = pseudo_inverse(&src.map);
            let m = &dst.map * a * &tinv;
            let col_bound: f64 = m.column_iter().map(|col| col.norm()).sum();
            let spec_bound = spectral_norm(&m) * (m.ncols() as f64).sqrt();
            (col_bound.min(spec_bound), Vec::new())
        }
    };

    witnesses.extend(from.unit_sphere_sample(8, 0x5eed));
    let mut best = (0.0, unit(a.ncols()));
    for start in witnesses {
        let (v, x) = power_ascent(a, from, to, start, tol)?;
        if v > best.0 {
            best = (v, x);
        }
    }
    let (lower, witness) = best;
    let upper = upper.max(lower);
    if upper - lower > tol {
        return Err(Error::NumericalFailure {
            reason: "operator norm bracket wider than tolerance".into(),
            lower,
            upper,
        });
    }
    Ok(OperatorNorm {
        value: upper,
        lower,
        upper,
        witness,
        exact: false,
    })
}

/// Max absolute row sum, and the row attaining it.
pub fn max_row_sum(a: &CMatrix) -> (Option<usize>, f64) {
    let mut best = (None, 0.0);
    for (i, row) in a.row_iter().enumerate() {
        let s: f64 = row.iter().map(|z| z.norm()).sum();
        if best.0.is_none() || s > best.1 {
            best = (Some(i), s);
        }
    }
    best
}

fn top_right_singular(m: &CMatrix) -> (f64, CVector) {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return (0.0, unit(n));
    }
    let svd = nalgebra::SVD::new(m.clone(), false, true);
    let v_t = svd.v_t.expect("requested");
    let (k, s) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bk, bs), (k, &s)| if s > bs { (k, s) } else { (bk, bs) });
    (s, v_t.row(k).adjoint())
}

/// Alternating norming-functional ascent of `‖A x‖_to` on the unit sphere.
fn power_ascent(a: &CMatrix, from: &Norm, to: &Norm, start: CVector, tol: f64) -> Result<(f64, CVector)> {
    let n0 = from.eval(&start)?;
    if !(n0 > 0.0) {
        return Ok((0.0, unit(a.ncols())));
    }
    let mut x = start / c(n0, 0.0);
    let mut value = to.eval(&(a * &x))?;
    for _ in 0..30 {
        let h = to.norming_functional(&(a * &x))?;
        let g = a.transpose() * h;
        let d = from.dual_norm(&g, tol / 4.0)?;
        let nx = from.eval(&d.witness)?;
        if !(nx > 0.0) {
            break;
        }
        let candidate = &d.witness / c(nx, 0.0);
        let v = to.eval(&(a * &candidate))?;
        if v <= value * (1.0 + 1e-15) {
            break;
        }
        value = v;
        x = candidate;
    }
    Ok((value, x))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum NormRepr {
    Sup {
        dim: usize,
    },
    Euclidean {
        dim: usize,
    },
    Polyhedral {
        #[serde(with = "linalg::serde_cvectors")]
        functionals: Vec<CVector>,
    },
    Pullback {
        #[serde(with = "linalg::serde_cmatrix")]
        map: CMatrix,
        inner: Box<Norm>,
    },
}

impl TryFrom<NormRepr> for Norm {
    type Error = Error;

    fn try_from(r: NormRepr) -> Result<Self> {
        match r {
            NormRepr::Sup { dim } => Norm::sup(dim),
            NormRepr::Euclidean { dim } => Norm::euclidean(dim),
            NormRepr::Polyhedral { functionals } => Norm::polyhedral(&functionals),
            NormRepr::Pullback { map, inner } => Norm::pullback(map, *inner),
        }
    }
}

impl From<Norm> for NormRepr {
    fn from(n: Norm) -> Self {
        match n {
            Norm::Sup(dim) => NormRepr::Sup { dim },
            Norm::Euclidean(dim) => NormRepr::Euclidean { dim },
            Norm::Polyhedral(f) => NormRepr::Polyhedral {
                functionals: f.row_iter().map(|r| r.transpose()).collect(),
            },
            Norm::Pullback { map, inner } => NormRepr::Pullback { map, inner },
        }
    }
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NormKind::Sup => "sup",
            NormKind::Euclidean => "euclidean",
            NormKind::Polyhedral => "polyhedral",
            NormKind::Pullback => "pullback",
        };
        f.write_str(s)
    }
}

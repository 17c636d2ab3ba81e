//! The Carathéodory infinitesimal metric where it is known in closed form,
//! and isometry / contraction checks built on it.
//!
//! At the origin of a unit ball the metric is the norm itself (and so is the
//! Kobayashi metric). On the polydisk, Möbius automorphisms carry any base
//! point to the origin, which gives the metric at every interior point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holomap::{moebius_inverse, MapExpr};
use crate::linalg::{self, c, max_abs, norm2, pair, phase, require_dim, CMatrix, CVector};
use crate::norms::{gaussian_vector, Base, Canonical, Norm};
use crate::projections::support_index_certificate;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OriginMetric {
    /// `E_B(0, v)`.
    pub caratheodory: f64,
    /// `F_B(0, v)`; equal to the above on unit balls.
    pub kobayashi: f64,
    /// `max |⟨g, v⟩|` over sampled covectors of dual norm at most 1.
    pub functional_lower_bound: f64,
    pub covectors_sampled: usize,
}

/// `E_B(0, v) = ‖v‖`.
pub fn carath_origin(norm: &Norm, v: &CVector) -> Result<f64> {
    norm.eval(v)
}

/// The origin metric together with its functional lower bound: covectors
/// `g = T^T c` with `c` on the dual base sphere, plus the norming one.
pub fn carath_origin_report(norm: &Norm, v: &CVector, samples: usize, seed: u64) -> Result<OriginMetric> {
    let value = carath_origin(norm, v)?;
    let Canonical { base, map } = norm.canonical();
    let y = &map * v;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // ⟨T^T c, v⟩ = ⟨c, T v⟩, so work with y = T v directly
    let mut best = pair(&norm.norming_functional(v)?, v).norm();
    for _ in 0..samples {
        let mut cvec = gaussian_vector(y.len(), &mut rng);
        let dual = match base {
            Base::Sup => cvec.iter().map(|z| z.norm()).sum::<f64>(),
            Base::Euclidean => norm2(&cvec),
        };
        if dual > 0.0 {
            cvec /= c(dual, 0.0);
            best = best.max(pair(&cvec, &y).norm());
        }
    }
    Ok(OriginMetric {
        caratheodory: value,
        kobayashi: value,
        functional_lower_bound: best,
        covectors_sampled: samples + 1,
    })
}

/// Metric of the polydisk at `a` in direction `v`: `max_i |v_i| / (1 − |a_i|²)`,
/// computed by transporting `a` to the origin with `φ_{−a}`.
pub fn carath_supball(a: &CVector, v: &CVector) -> Result<f64> {
    require_dim(a.len(), v.len())?;
    let to_origin = moebius_inverse(a)?;
    let jac = to_origin.jacobian(a)?;
    carath_origin(&Norm::Sup(a.len()), &(jac * v))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsometryVerdict {
    pub is_isometry: bool,
    pub max_deviation: f64,
    /// Unit vector of the source norm attaining `max_deviation`.
    #[serde(with = "linalg::serde_cvector")]
    pub witness: CVector,
    pub samples_used: usize,
    /// The refutation is exact (a single evaluation, no tolerance involved).
    pub exact_refutation: bool,
    /// Sup→Sup only: outcome of the structural support-index test.
    pub structural: Option<bool>,
}

/// Sampled plus locally refined test of `‖A x‖_to = ‖x‖_from`. Refutations
/// carry an exact witness; confirmations are up to `tol`.
pub fn isometry_check(
    a: &CMatrix,
    from: &Norm,
    to: &Norm,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<IsometryVerdict> {
    require_dim(from.dim(), a.ncols())?;
    require_dim(to.dim(), a.nrows())?;
    let deviation = |x: &CVector| -> f64 {
        let nx = from.eval(x).unwrap_or(0.0);
        let ny = to.eval(&(a * x)).unwrap_or(f64::INFINITY);
        (ny - nx).abs()
    };

    let mut candidates = from.unit_sphere_sample(samples, seed);
    // structural candidates: basis directions and the max-row witness
    let n = a.ncols();
    for k in 0..n {
        let mut e = CVector::zeros(n);
        e[k] = c(1.0, 0.0);
        let ne = from.eval(&e)?;
        candidates.push(e / c(ne, 0.0));
    }
    if let Base::Sup = to.canonical().base {
        let t = to.canonical().map * a;
        for row in t.row_iter() {
            let x = CVector::from_fn(n, |j, _| phase(row[j]).conj());
            let nx = from.eval(&x)?;
            if nx > 0.0 {
                candidates.push(x / c(nx, 0.0));
            }
        }
    }
    let samples_used = candidates.len();

    let mut scored: Vec<(f64, CVector)> = candidates.into_iter().map(|x| (deviation(&x), x)).collect();
    scored.sort_by(|p, q| q.0.total_cmp(&p.0));
    let (mut best_dev, mut best_x) = scored[0].clone();

    // stochastic hill climbing on the sphere from the worst few
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for (dev0, x0) in scored.iter().take(4) {
        let (mut dev, mut x) = (*dev0, x0.clone());
        let mut step = 0.25;
        for _ in 0..120 {
            let trial = &x + gaussian_vector(n, &mut rng) * c(step, 0.0);
            let nt = from.eval(&trial)?;
            if !(nt > 0.0) {
                continue;
            }
            let trial = trial / c(nt, 0.0);
            let d = deviation(&trial);
            if d > dev {
                dev = d;
                x = trial;
            } else {
                step *= 0.93;
            }
        }
        if dev > best_dev {
            best_dev = dev;
            best_x = x;
        }
    }

    let mut structural = None;
    let mut exact_refutation = best_dev > tol;
    if let (Norm::Sup(_), Norm::Sup(_)) = (from, to) {
        let (ok, witness) = sup_structural(a);
        structural = Some(ok);
        if let Some(w) = witness {
            let d = deviation(&w);
            if d > best_dev || best_dev <= tol {
                best_dev = best_dev.max(d);
                best_x = w;
            }
            exact_refutation = true;
        } else if ok {
            // exact confirmation: only rounding remains
            exact_refutation = false;
        }
    }

    Ok(IsometryVerdict {
        is_isometry: best_dev <= tol && structural != Some(false),
        max_deviation: best_dev,
        witness: best_x,
        samples_used,
        exact_refutation: exact_refutation && best_dev > tol,
        structural,
    })
}

/// Exact Sup→Sup test: every row sum at most 1 and every column owns a
/// unimodular support entry. Returns a refuting unit vector when one fails.
fn sup_structural(a: &CMatrix) -> (bool, Option<CVector>) {
    let n = a.ncols();
    let (row, top) = crate::norms::max_row_sum(a);
    if top > 1.0 + 1e-12 {
        let i = row.expect("non-empty");
        let x = CVector::from_fn(n, |j, _| phase(a[(i, j)]).conj());
        return (false, Some(x));
    }
    match support_index_certificate(a, a.nrows(), n) {
        Ok(_) => (true, None),
        Err(Error::NotAnIsometry(_)) => {
            // a column without a unimodular entry: ‖A e_k‖ < 1
            let k = (0..n)
                .find(|&k| a.column(k).iter().all(|z| (z.norm() - 1.0).abs() > 1e-12))
                .unwrap_or(0);
            let mut e = CVector::zeros(n);
            e[k] = c(1.0, 0.0);
            (false, Some(e))
        }
        Err(_) => (false, None),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchwarzPickReport {
    /// `max(0, ‖f'(0) v‖_to − ‖v‖_from)` over sampled unit `v`.
    pub origin_violation: f64,
    /// Same at sampled interior points (both norms sup), via `carath_supball`.
    pub interior_violation: Option<f64>,
    pub max_violation: f64,
    /// `max |E(f(a), f'(a) v) − E(a, v)|`; zero for automorphisms.
    pub max_equality_defect: f64,
    pub samples: usize,
}

/// Non-expansion of the Carathéodory metric under `f`.
///
/// At the origin this needs `f(0) = 0` unless both norms are sup norms, in
/// which case the metric at `f(0)` is available from the Möbius transport.
pub fn schwarz_pick_check(f: &MapExpr, from: &Norm, to: &Norm, samples: usize, seed: u64) -> Result<SchwarzPickReport> {
    require_dim(from.dim(), f.dim_in())?;
    require_dim(to.dim(), f.dim_out())?;
    let both_sup = matches!((from, to), (Norm::Sup(_), Norm::Sup(_)));
    let zero = CVector::zeros(from.dim());
    let f0 = f.eval(&zero)?;
    if !both_sup && max_abs(&f0) > 1e-12 {
        return Err(Error::InvalidInput("f(0) must vanish for non-sup norms".into()));
    }

    for x in from.ball_sample(samples, 0.9, seed) {
        let y = f.eval(&x)?;
        let ny = to.eval(&y)?;
        if ny >= 1.0 {
            return Err(Error::Domain(format!("image sample left the target ball (norm {ny})")));
        }
    }

    let metric_at = |norm: &Norm, base: &CVector, v: &CVector| -> Result<f64> {
        if max_abs(base) == 0.0 || !matches!(norm, Norm::Sup(_)) {
            carath_origin(norm, v)
        } else {
            carath_supball(base, v)
        }
    };

    let jac0 = f.jacobian(&zero)?;
    let mut origin_violation: f64 = 0.0;
    let mut defect: f64 = 0.0;
    let dirs = from.unit_sphere_sample(samples, seed.wrapping_add(17));
    for v in &dirs {
        let lhs = metric_at(to, &f0, &(&jac0 * v))?;
        let rhs = carath_origin(from, v)?;
        origin_violation = origin_violation.max(lhs - rhs);
        defect = defect.max((lhs - rhs).abs());
    }

    let mut interior_violation = None;
    if both_sup {
        let mut worst: f64 = 0.0;
        let points = from.ball_sample(samples, 0.9, seed.wrapping_add(29));
        for (a, v) in points.iter().zip(&dirs) {
            let lhs = carath_supball(&f.eval(a)?, &(f.jacobian(a)? * v))?;
            let rhs = carath_supball(a, v)?;
            worst = worst.max(lhs - rhs);
            defect = defect.max((lhs - rhs).abs());
        }
        interior_violation = Some(worst.max(0.0));
    }

    let max_violation = origin_violation.max(interior_violation.unwrap_or(0.0)).max(0.0);
    Ok(SchwarzPickReport {
        origin_violation: origin_violation.max(0.0),
        interior_violation,
        max_violation,
        max_equality_defect: defect,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holomap::Monomial;
    use crate::linalg::{rmat, rvec, I};

    fn l6() -> CMatrix {
        rmat(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]])
    }

    #[test]
    fn origin_examples() {
        assert_eq!(carath_origin(&Norm::Sup(2), &rvec(&[1.0, 0.5])).unwrap(), 1.0);
        assert_eq!(carath_origin(&Norm::Euclidean(3), &CVector::zeros(3)).unwrap(), 0.0);
        let e = carath_origin(&Norm::Euclidean(2), &rvec(&[1.0, 1.0])).unwrap();
        assert!((e - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn functional_bound_attains_norm() {
        let v = CVector::from_vec(vec![c(0.2, -0.9), I]);
        for n in [Norm::Sup(2), Norm::Euclidean(2)] {
            let r = carath_origin_report(&n, &v, 100, 3).unwrap();
            assert!((r.functional_lower_bound - r.caratheodory).abs() < 1e-12);
            assert_eq!(r.kobayashi, r.caratheodory);
        }
    }

    #[test]
    fn supball_examples() {
        let v = CVector::from_vec(vec![c(0.3, 0.4), c(-0.1, 0.0)]);
        assert!((carath_supball(&CVector::zeros(2), &v).unwrap() - 0.5).abs() < 1e-15);
        let m = carath_supball(&rvec(&[0.5]), &rvec(&[1.0])).unwrap();
        assert!((m - 4.0 / 3.0).abs() < 1e-14);
        assert!(matches!(carath_supball(&rvec(&[1.0]), &rvec(&[1.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn identity_is_isometry() {
        for n in [Norm::Sup(3), Norm::Euclidean(3)] {
            let v = isometry_check(&CMatrix::identity(3, 3), &n, &n, 200, 1, 1e-9).unwrap();
            assert!(v.is_isometry);
            assert!(v.max_deviation < 1e-14);
        }
    }

    #[test]
    fn counterexample_map_refuted_on_polydisk() {
        let v = isometry_check(&l6(), &Norm::Sup(2), &Norm::Sup(3), 200, 1, 1e-9).unwrap();
        assert!(!v.is_isometry);
        assert!(v.exact_refutation);
        assert_eq!(v.witness, rvec(&[1.0, 1.0]));
        assert_eq!(v.max_deviation, 1.0);
        assert_eq!(v.structural, Some(false));
    }

    #[test]
    fn counterexample_map_confirmed_on_pullback() {
        let from = Norm::pullback(l6(), Norm::Sup(3)).unwrap();
        let v = isometry_check(&l6(), &from, &Norm::Sup(3), 500, 1, 1e-9).unwrap();
        assert!(v.is_isometry, "{v:?}");
    }

    #[test]
    fn contraction_detected() {
        let a = rmat(&[&[0.5, 0.0], &[0.0, 1.0]]);
        let v = isometry_check(&a, &Norm::Sup(2), &Norm::Sup(2), 100, 1, 1e-9).unwrap();
        assert!(!v.is_isometry);
        assert!(v.exact_refutation);
        assert!((v.max_deviation - 0.5).abs() < 1e-12);
        let a_w = Norm::Sup(2).eval(&(&a * &v.witness)).unwrap();
        assert!((a_w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn schwarz_pick_linear_isometry() {
        let f = MapExpr::Linear(rmat(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]));
        let r = schwarz_pick_check(&f, &Norm::Sup(2), &Norm::Sup(3), 200, 4).unwrap();
        assert!(r.origin_violation < 1e-14);
        assert!(r.max_violation < 1e-12);
    }

    #[test]
    fn schwarz_pick_half_square() {
        let f = MapExpr::polynomial(
            1,
            2,
            vec![
                Monomial { alpha: vec![1], coeff: rvec(&[1.0, 0.0]) },
                Monomial { alpha: vec![2], coeff: rvec(&[0.0, 0.5]) },
            ],
        )
        .unwrap();
        let r = schwarz_pick_check(&f, &Norm::Sup(1), &Norm::Sup(2), 200, 4).unwrap();
        assert!(r.origin_violation < 1e-15);
        assert!(r.max_violation < 1e-12);
    }

    #[test]
    fn schwarz_pick_automorphism_equality() {
        let a = CVector::from_vec(vec![c(0.3, 0.2), c(-0.5, 0.1)]);
        let f = MapExpr::moebius(a).unwrap();
        let r = schwarz_pick_check(&f, &Norm::Sup(2), &Norm::Sup(2), 300, 9).unwrap();
        assert!(r.max_equality_defect < 1e-9, "{r:?}");
    }

    #[test]
    fn schwarz_pick_rejects_escaping_map() {
        let f = MapExpr::Linear(rmat(&[&[3.0]]));
        assert!(matches!(
            schwarz_pick_check(&f, &Norm::Sup(1), &Norm::Sup(1), 50, 1),
            Err(Error::Domain(_))
        ));
    }
}

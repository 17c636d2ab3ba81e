//! Retractions built from random isometries with nonlinear corrections.

use cara_core::caratheodory::{isometry_check, schwarz_pick_check};
use cara_core::holomap::{MapExpr, Monomial};
use cara_core::instances::{demo_base_point, half_square, polydisk_demo_map, random_sup_isometry};
use cara_core::linalg::{max_abs, norm2, rvec};
use cara_core::projections::{property_v_c0, property_v_supsource, support_index_certificate};
use cara_core::retraction::{build_retraction, conjugate_to_origin, conjugation_metric_defect, RetractionOptions};
use cara_core::{CMatrix, CVector, Error, Norm, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `x ↦ L x + c x_0² e^j` where row `j` of `L` carries no support entry, so
/// the projection discards it. Requires `|c| + row sum ≤ 1` on that row.
fn bent_isometry(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Option<(MapExpr, CMatrix)> {
    let l = random_sup_isometry(n, m, rng);
    let cert = support_index_certificate(&l, m, n).ok()?;
    let j = (0..m).find(|j| !cert.m.contains(j))?;
    let row: f64 = l.row(j).iter().map(|z| z.norm()).sum();
    let mut alpha = vec![0; n];
    alpha[0] = 2;
    let mut coeff = CVector::zeros(m);
    coeff[j] = C64::from_polar((1.0 - row) * 0.9, rng.random_range(0.0..6.0));
    let f = MapExpr::sum(vec![
        MapExpr::Linear(l.clone()),
        MapExpr::polynomial(n, m, vec![Monomial { alpha, coeff }]).unwrap(),
    ])
    .unwrap();
    Some((f, l))
}

#[test]
fn random_retractions_verify() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let opts = RetractionOptions {
        samples: 200,
        ..RetractionOptions::default()
    };
    let mut built = 0;
    while built < 20 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(n + 1..=5);
        let Some((f, l)) = bent_isometry(n, m, &mut rng) else { continue };
        let cert = support_index_certificate(&l, m, n).unwrap();
        let pi = property_v_c0(&l, &cert).unwrap();
        let b = build_retraction(&f, &Norm::Sup(n), &Norm::Sup(m), &pi, &opts).unwrap();
        for y in Norm::Sup(m).ball_sample(100, 0.9, built as u64) {
            let ry = b.r.eval(&y).unwrap();
            assert!(norm2(&(b.r.eval(&ry).unwrap() - &ry)) <= 1e-8);
            assert!(norm2(&(&ry - f.eval(&b.g.eval(&ry).unwrap()).unwrap())) <= 1e-8);
        }
        built += 1;
    }
}

#[test]
fn euclidean_target_retraction() {
    // z ↦ (z/√2, z/√2) + small quadratic term orthogonal to the image
    let s = 0.5f64.sqrt();
    let l = CMatrix::from_column_slice(2, 1, &[C64::new(s, 0.0), C64::new(s, 0.0)]);
    let f = MapExpr::sum(vec![
        MapExpr::Linear(l.clone()),
        MapExpr::polynomial(1, 2, vec![Monomial { alpha: vec![2], coeff: rvec(&[0.1, -0.1]) }]).unwrap(),
    ])
    .unwrap();
    let pi = property_v_supsource(&l, &Norm::Euclidean(2), 1e-9).unwrap();
    let b = build_retraction(&f, &Norm::Sup(1), &Norm::Euclidean(2), &pi, &RetractionOptions::default()).unwrap();
    assert!(b.verification.residuals.iter().all(|r| r.passed()));
}

#[test]
fn half_square_schwarz_pick_and_retraction() {
    let f = half_square();
    let r = schwarz_pick_check(&f, &Norm::Sup(1), &Norm::Sup(2), 500, 1).unwrap();
    assert!(r.max_violation <= 1e-12);
    let l = CMatrix::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    let pi = property_v_c0(&l, &support_index_certificate(&l, 2, 1).unwrap()).unwrap();
    let b = build_retraction(&f, &Norm::Sup(1), &Norm::Sup(2), &pi, &RetractionOptions::default()).unwrap();
    let names: Vec<_> = b.verification.residuals.iter().map(|r| r.name.as_str()).collect();
    assert!(names.contains(&"r_derivative_norm_one"));
}

#[test]
fn polydisk_demo_pipeline() {
    let a = demo_base_point();
    let f = polydisk_demo_map();
    let ft = conjugate_to_origin(&f, &a).unwrap();
    assert!(max_abs(&ft.eval(&CVector::zeros(2)).unwrap()) <= 1e-12);
    let dirs = Norm::Sup(2).unit_sphere_sample(200, 8);
    assert!(conjugation_metric_defect(&f, &a, &dirs).unwrap() <= 1e-9);

    let j = ft.jacobian(&CVector::zeros(2)).unwrap();
    assert!(isometry_check(&j, &Norm::Sup(2), &Norm::Sup(3), 500, 2, 1e-9).unwrap().is_isometry);
    let cert = support_index_certificate(&j, 3, 2).unwrap();
    let p1 = property_v_c0(&j, &cert).unwrap();
    let p2 = property_v_supsource(&j, &Norm::Sup(3), 1e-9).unwrap();
    for pi in [p1, p2] {
        let b = build_retraction(&ft, &Norm::Sup(2), &Norm::Sup(3), &pi, &RetractionOptions::default()).unwrap();
        for r in &b.verification.residuals {
            assert!(r.value <= 1e-7_f64.max(r.limit), "{r:?}");
        }
    }
}

#[test]
fn over_norm_projection_is_refused() {
    // the orthogonal projection onto the plane has sup norm 4/3
    let l = cara_core::instances::plane_map();
    let pi = cara_core::projections::project_hilbert(&l, &Norm::Euclidean(3)).unwrap();
    let mut pi = pi;
    pi.norm_certificate = cara_core::projections::projection_norm(&pi.pi, &Norm::Sup(3), 0.0).unwrap();
    let source = Norm::pullback(l.clone(), Norm::Sup(3)).unwrap();
    let err = build_retraction(&MapExpr::Linear(l), &source, &Norm::Sup(3), &pi, &RetractionOptions::default())
        .unwrap_err();
    assert!(matches!(err, Error::VerificationFailure(_) | Error::LinearityViolation { .. }), "{err:?}");
}

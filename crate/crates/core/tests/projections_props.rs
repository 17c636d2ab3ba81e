//! Projection bundles on random isometries, and an independent grid search
//! for the minimal projection onto the plane `{(x, y, x + y)}`.

use cara_core::instances::{plane_map, random_sup_isometry, random_sup_to_euclidean_isometry};
use cara_core::linalg::{columns, max_abs_entry};
use cara_core::projections::{
    counterexample_obstruction, min_projection_norm, project_hilbert, property_v_c0, property_v_supsource,
    support_index_certificate, ProjectionBundle,
};
use cara_core::{CMatrix, Norm, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimal projection norm onto the plane, pinned from the certified program
/// and the grid search below; the minimizer is the orthogonal projection.
const PLANE_MIN_PROJECTION_NORM: f64 = 4.0 / 3.0;

fn check(bundle: &ProjectionBundle, l: &CMatrix) {
    for r in bundle.invariant_residuals(l) {
        assert!(r.passed(), "{r:?}\n{}", bundle.pi);
    }
    assert!(bundle.norm_certificate.value <= 1.0 + 1e-6, "{:?}", bundle.norm_certificate);
}

#[test]
fn supsource_bundles_on_random_isometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(n..=6);
        let l = random_sup_isometry(n, m, &mut rng);
        check(&property_v_supsource(&l, &Norm::Sup(m), 1e-7).unwrap(), &l);

        let e = random_sup_to_euclidean_isometry(m, &mut rng);
        check(&property_v_supsource(&e, &Norm::Euclidean(m), 1e-7).unwrap(), &e);
    }
}

#[test]
fn c0_bundles_are_exact_and_agree_in_norm_with_supsource() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(n..=6);
        let l = random_sup_isometry(n, m, &mut rng);
        let cert = support_index_certificate(&l, m, n).unwrap();
        let c0 = property_v_c0(&l, &cert).unwrap();
        check(&c0, &l);
        assert!(c0.norm_certificate.exact);
        assert!((c0.norm_certificate.value - 1.0).abs() <= 1e-12);
        let hb = property_v_supsource(&l, &Norm::Sup(m), 1e-7).unwrap();
        assert!((hb.norm_certificate.value - 1.0).abs() <= 1e-6);
        let min = min_projection_norm(&columns(&l), &Norm::Sup(m), 1e-7, 100_000).unwrap();
        assert!((min.value - 1.0).abs() <= 1e-7, "{min:?}");
    }
}

#[test]
fn hilbert_agrees_with_supsource() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let m = rng.random_range(1..=6);
        let e = random_sup_to_euclidean_isometry(m, &mut rng);
        let h = project_hilbert(&e, &Norm::Euclidean(m)).unwrap();
        let s = property_v_supsource(&e, &Norm::Euclidean(m), 1e-9).unwrap();
        assert!(max_abs_entry(&(&h.pi - &s.pi)) <= 1e-8);
        assert!(max_abs_entry(&(&h.pi * &h.pi - &h.pi)) <= 1e-10);
    }
}

/// Projections onto the plane are `I − w w^T/3 + u w^T` with `w = (1, 1, −1)`
/// and `u = (a, b, a + b)`; scan `a, b` over a complex grid.
fn grid_minimum(half_width: f64, steps: usize, center: (C64, C64)) -> (f64, C64, C64) {
    let w = [1.0, 1.0, -1.0];
    let base = |i: usize, j: usize| (if i == j { 1.0 } else { 0.0 }) - w[i] * w[j] / 3.0;
    let axis: Vec<f64> = (0..=steps)
        .map(|k| -half_width + 2.0 * half_width * k as f64 / steps as f64)
        .collect();
    let mut best = (f64::INFINITY, C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for &ar in &axis {
        for &ai in &axis {
            for &br in &axis {
                for &bi in &axis {
                    let a = center.0 + C64::new(ar, ai);
                    let b = center.1 + C64::new(br, bi);
                    let u = [a, b, a + b];
                    let norm = (0..3)
                        .map(|i| (0..3).map(|j| (u[i] * w[j] + base(i, j)).norm()).sum::<f64>())
                        .fold(0.0, f64::max);
                    if norm < best.0 {
                        best = (norm, a, b);
                    }
                }
            }
        }
    }
    best
}

#[test]
fn plane_minimum_matches_grid_search() {
    let coarse = grid_minimum(1.0, 20, (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    let fine = grid_minimum(0.1, 20, (coarse.1, coarse.2));
    assert!((fine.0 - PLANE_MIN_PROJECTION_NORM).abs() < 1e-9, "{fine:?}");

    let r = min_projection_norm(&columns(&plane_map()), &Norm::Sup(3), 1e-8, 100_000).unwrap();
    assert!(r.certified);
    assert!(r.lower <= fine.0 + 1e-12, "certificate must not exceed a feasible value");
    assert!((r.value - PLANE_MIN_PROJECTION_NORM).abs() < 1e-4);
    assert!(r.value >= 1.01);
}

#[test]
fn plane_obstruction() {
    let rep = counterexample_obstruction(1e-7, 100_000, 100, 5).unwrap();
    assert!(rep.no_norm_one_projection);
    assert!(rep.every_candidate_refuted);
    assert_eq!(rep.candidates, 101);
}

//! Problem instances: seeded random isometries and the fixed maps used by the
//! demonstrations.

use rand::seq::index::sample;
use rand::Rng;

use crate::holomap::{MapExpr, Monomial};
use crate::linalg::{c, rmat, rvec, CMatrix, CVector, C64, I};
use crate::norms::gaussian_vector;

fn unimodular<R: Rng>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

/// A sup-to-sup isometry `C^n → C^m` (`m ≥ n`): column `k` carries a
/// unimodular entry in its own row, and the remaining rows are either zero or
/// random with absolute row sum below one.
pub fn random_sup_isometry<R: Rng>(n: usize, m: usize, rng: &mut R) -> CMatrix {
    assert!(m >= n, "need m >= n");
    let rows = sample(rng, m, n).into_vec();
    let mut l = CMatrix::zeros(m, n);
    for (k, &j) in rows.iter().enumerate() {
        l[(j, k)] = unimodular(rng);
    }
    for j in (0..m).filter(|j| !rows.contains(j)) {
        if n == 0 || rng.random_bool(0.5) {
            continue;
        }
        let v = gaussian_vector(n, rng);
        let total: f64 = v.iter().map(|z| z.norm()).sum();
        let target: f64 = rng.random_range(0.0..0.999);
        if total > 0.0 {
            for k in 0..n {
                l[(j, k)] = v[k] * c(target / total, 0.0);
            }
        }
    }
    l
}

/// A unit column: the only isometries from `(C, |·|)` into `(C^m, ‖·‖₂)`.
pub fn random_sup_to_euclidean_isometry<R: Rng>(m: usize, rng: &mut R) -> CMatrix {
    let v = loop {
        let v = gaussian_vector(m, rng);
        if v.norm() > 1e-3 {
            break v;
        }
    };
    let v: CVector = &v / c(v.norm(), 0.0);
    CMatrix::from_column_slice(m, 1, v.as_slice())
}

/// `z ↦ (z, z²/2)`, a holomorphic embedding of the disk into the bidisk with
/// isometric derivative at the origin.
pub fn half_square() -> MapExpr {
    MapExpr::Polynomial {
        dim_in: 1,
        dim_out: 2,
        terms: vec![
            Monomial {
                alpha: vec![1],
                coeff: rvec(&[1.0, 0.0]),
            },
            Monomial {
                alpha: vec![2],
                coeff: rvec(&[0.0, 0.5]),
            },
        ],
    }
}

/// `(x, y) ↦ (x, y, (x + y)/4 + xy/2)`: maps `Δ²` into `Δ³` and fixes the origin;
/// its derivative there is a sup-norm isometry.
pub fn bidisk_embedding() -> MapExpr {
    MapExpr::Polynomial {
        dim_in: 2,
        dim_out: 3,
        terms: vec![
            Monomial {
                alpha: vec![1, 0],
                coeff: rvec(&[1.0, 0.0, 0.25]),
            },
            Monomial {
                alpha: vec![0, 1],
                coeff: rvec(&[0.0, 1.0, 0.25]),
            },
            Monomial {
                alpha: vec![1, 1],
                coeff: rvec(&[0.0, 0.0, 0.5]),
            },
        ],
    }
}

/// Base point of the polydisk demonstration.
pub fn demo_base_point() -> CVector {
    CVector::from_vec(vec![c(0.3, 0.0), c(0.0, -0.2)])
}

/// Image shift of the polydisk demonstration.
pub fn demo_image_point() -> CVector {
    CVector::from_vec(vec![c(0.1, 0.0), I * 0.2, c(-0.15, 0.0)])
}

/// `φ_c ∘ F ∘ φ_{−a}` with `F = bidisk_embedding()`: a holomorphic map
/// `Δ² → Δ³` sending `a` to `c`, with isometric derivative at `a` for the
/// Carathéodory metric.
pub fn polydisk_demo_map() -> MapExpr {
    MapExpr::Compose(vec![
        MapExpr::Moebius(demo_image_point()),
        bidisk_embedding(),
        MapExpr::Moebius(-demo_base_point()),
    ])
}

/// `(x, y) ↦ (x, y, x + y)`.
pub fn plane_map() -> CMatrix {
    rmat(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]])
}

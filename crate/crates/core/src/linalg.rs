//! Dense complex linear algebra at desk scale.
//!
//! Vectors and matrices are plain `nalgebra` types over [`C64`]. Everything
//! here is rank-revealing through the singular value decomposition, with the
//! cutoff `RANK_RTOL * sigma_max`.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// Relative singular-value cutoff for rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cvec(entries: &[C64]) -> CVector {
    CVector::from_column_slice(entries)
}

pub fn rvec(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)))
}

/// Builds a matrix from rows; all rows must have the same length.
pub fn from_rows(rows: &[Vec<C64>]) -> Result<CMatrix> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            got: bad.len(),
        });
    }
    Ok(CMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

/// Real-valued rows, for fixtures.
pub fn rmat(rows: &[&[f64]]) -> CMatrix {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(m, n, |i, j| c(rows[i][j], 0.0))
}

/// Matrix whose columns are the given vectors.
pub fn from_columns(cols: &[CVector]) -> Result<CMatrix> {
    let m = cols.first().map_or(0, |v| v.len());
    if let Some(bad) = cols.iter().find(|v| v.len() != m) {
        return Err(Error::Dimension {
            expected: m,
            got: bad.len(),
        });
    }
    Ok(CMatrix::from_fn(m, cols.len(), |i, j| cols[j][i]))
}

pub fn columns(a: &CMatrix) -> Vec<CVector> {
    a.column_iter().map(|col| col.into_owned()).collect()
}

pub fn is_finite_vec(v: &CVector) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn is_finite_mat(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Bilinear pairing `Σ g_j x_j`, without conjugation.
pub fn pair(g: &CVector, x: &CVector) -> C64 {
    g.iter().zip(x.iter()).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &CVector) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(x: &CVector) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_entry(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Unit-modulus phase of `z`, or 1 at zero.
pub fn phase(z: C64) -> C64 {
    let r = z.norm();
    if r == 0.0 {
        ONE
    } else {
        z / r
    }
}

pub fn conj_vec(x: &CVector) -> CVector {
    x.map(|z| z.conj())
}

pub fn require_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// Singular values in decreasing order, padded with zeros up to `min(m, n)`.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(a.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

fn rank_cutoff(s: &[f64]) -> f64 {
    RANK_RTOL * s.first().copied().unwrap_or(0.0)
}

pub fn rank(a: &CMatrix) -> usize {
    let s = singular_values(a);
    let cut = rank_cutoff(&s);
    s.iter().filter(|&&x| x > cut && x > 0.0).count()
}

pub fn spectral_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Right singular vectors of `a` (as columns of an `n x n` unitary) together
/// with all `n` singular values, both in decreasing order of singular value.
fn full_right_svd(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let (m, n) = a.shape();
    let padded = if m < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = CMatrix::from_fn(n, n, |r, k| v_t[(order[k], r)].conj());
    (s, v)
}

/// Orthonormal basis of the null space of `a`; empty when `a` is injective.
pub fn kernel_basis(a: &CMatrix) -> Vec<CVector> {
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    if a.nrows() == 0 {
        return (0..n)
            .map(|k| CVector::from_fn(n, |i, _| if i == k { ONE } else { ZERO }))
            .collect();
    }
    let (s, v) = full_right_svd(a);
    let cut = rank_cutoff(&s);
    let r = s.iter().filter(|&&x| x > cut && x > 0.0).count();
    (r..n).map(|k| v.column(k).into_owned()).collect()
}

/// Kernel basis as the columns of an `n x k` matrix.
pub fn kernel_matrix(a: &CMatrix) -> CMatrix {
    let basis = kernel_basis(a);
    if basis.is_empty() {
        CMatrix::zeros(a.ncols(), 0)
    } else {
        from_columns(&basis).expect("kernel vectors share a length")
    }
}

/// Moore–Penrose pseudo-inverse with the relative rank cutoff.
pub fn pseudo_inverse(a: &CMatrix) -> CMatrix {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return CMatrix::zeros(n, m);
    }
    let svd = SVD::new(a.clone(), true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = RANK_RTOL * smax;
    let mut out = CMatrix::zeros(n, m);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cut && s > 0.0 {
            // A+ = sum_k v_k u_k^H / s_k
            let vk = v_t.row(k).adjoint();
            let uk = u.column(k);
            out += (vk * uk.adjoint()) / c(s, 0.0);
        }
    }
    out
}

/// Least-squares solution of `a x = b`; requires full column rank.
pub fn solve_least_squares(a: &CMatrix, b: &CVector) -> Result<CVector> {
    require_dim(a.nrows(), b.len())?;
    let r = rank(a);
    if r < a.ncols() {
        return Err(Error::RankDeficient {
            rank: r,
            required: a.ncols(),
        });
    }
    Ok(pseudo_inverse(a) * b)
}

/// Orthonormal basis of the column space, as columns of an `m x r` matrix.
pub fn range_basis(a: &CMatrix) -> CMatrix {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return CMatrix::zeros(m, 0);
    }
    let svd = SVD::new(a.clone(), true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = RANK_RTOL * smax;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > cut && svd.singular_values[k] > 0.0)
        .collect();
    CMatrix::from_fn(m, keep.len(), |i, j| u[(i, keep[j])])
}

/// Serde adapters: scalars as `[re, im]`, vectors as arrays of scalars and
/// matrices as row-major nested arrays.
pub mod serde_cvector {
    use super::{is_finite_vec, CVector, C64};
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let entries = Vec::<C64>::deserialize(d)?;
        let v = CVector::from_vec(entries);
        if !is_finite_vec(&v) {
            return Err(D::Error::custom("vector entries must be finite"));
        }
        Ok(v)
    }
}

pub mod serde_cvectors {
    use super::CVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::serde_cvector")] CVector);

    pub fn serialize<S: Serializer>(v: &[CVector], s: S) -> Result<S::Ok, S::Error> {
        let wrapped: Vec<Wrap> = v.iter().cloned().map(Wrap).collect();
        wrapped.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CVector>, D::Error> {
        Ok(Vec::<Wrap>::deserialize(d)?
            .into_iter()
            .map(|w| w.0)
            .collect())
    }
}

pub mod serde_cmatrix {
    use super::{from_rows, is_finite_mat, CMatrix, C64};
    use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(a.nrows()))?;
        for row in a.row_iter() {
            let row: Vec<C64> = row.iter().copied().collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<C64>>::deserialize(d)?;
        let a = from_rows(&rows).map_err(D::Error::custom)?;
        if !is_finite_mat(&a) {
            return Err(D::Error::custom("matrix entries must be finite"));
        }
        Ok(a)
    }
}

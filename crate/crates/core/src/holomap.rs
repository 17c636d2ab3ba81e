//! Holomorphic maps between balls as expression trees.
//!
//! Nodes evaluate exactly and differentiate structurally (chain rule over the
//! tree). Taylor coefficients come from Cauchy integrals on a torus, computed
//! with the trapezoid rule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, max_abs, require_dim, CMatrix, CVector, C64, ONE};

/// Radius of the Cauchy torus when none is given.
pub const DEFAULT_TAYLOR_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub alpha: Vec<u32>,
    /// One coefficient per output component.
    #[serde(with = "linalg::serde_cvector")]
    pub coeff: CVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub enum MapExpr {
    Linear(CMatrix),
    Polynomial {
        dim_in: usize,
        dim_out: usize,
        terms: Vec<Monomial>,
    },
    /// Componentwise `x_i ↦ (x_i + a_i) / (1 + conj(a_i) x_i)` on the polydisk.
    Moebius(CVector),
    /// Applied right to left: `Compose([g, f]) = g ∘ f`.
    Compose(Vec<MapExpr>),
    Sum(Vec<MapExpr>),
    Identity(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorQuery {
    pub multi_index: Vec<u32>,
    pub radius: f64,
}

impl TaylorQuery {
    pub fn new(multi_index: Vec<u32>) -> Self {
        Self {
            multi_index,
            radius: DEFAULT_TAYLOR_RADIUS,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }
}

impl MapExpr {
    pub fn linear(a: CMatrix) -> Result<Self> {
        if !linalg::is_finite_mat(&a) {
            return Err(Error::InvalidInput("linear map entries must be finite".into()));
        }
        Ok(MapExpr::Linear(a))
    }

    pub fn polynomial(dim_in: usize, dim_out: usize, terms: Vec<Monomial>) -> Result<Self> {
        let m = MapExpr::Polynomial {
            dim_in,
            dim_out,
            terms,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn moebius(a: CVector) -> Result<Self> {
        let m = MapExpr::Moebius(a);
        m.validate()?;
        Ok(m)
    }

    pub fn compose(items: Vec<MapExpr>) -> Result<Self> {
        let m = MapExpr::Compose(items);
        m.validate()?;
        Ok(m)
    }

    pub fn sum(items: Vec<MapExpr>) -> Result<Self> {
        let m = MapExpr::Sum(items);
        m.validate()?;
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        MapExpr::Identity(dim)
    }

    /// Checks dimension chaining and Möbius parameters, recursively.
    pub fn validate(&self) -> Result<()> {
        match self {
            MapExpr::Linear(a) => {
                if !linalg::is_finite_mat(a) {
                    return Err(Error::InvalidInput("linear map entries must be finite".into()));
                }
            }
            MapExpr::Polynomial {
                dim_in,
                dim_out,
                terms,
            } => {
                for t in terms {
                    require_dim(*dim_in, t.alpha.len())?;
                    require_dim(*dim_out, t.coeff.len())?;
                    if !linalg::is_finite_vec(&t.coeff) {
                        return Err(Error::InvalidInput("polynomial coefficients must be finite".into()));
                    }
                }
            }
            MapExpr::Moebius(a) => {
                if a.is_empty() || !linalg::is_finite_vec(a) {
                    return Err(Error::InvalidInput("Möbius parameter must be finite and non-empty".into()));
                }
                let r = max_abs(a);
                if r >= 1.0 {
                    return Err(Error::Domain(format!(
                        "Möbius parameter has sup norm {r}, must be < 1"
                    )));
                }
            }
            MapExpr::Compose(items) => {
                if items.is_empty() {
                    return Err(Error::InvalidInput("empty composition".into()));
                }
                for it in items {
                    it.validate()?;
                }
                for w in items.windows(2) {
                    // w[1] is applied first
                    require_dim(w[0].dim_in(), w[1].dim_out())?;
                }
            }
            MapExpr::Sum(items) => {
                let first = items
                    .first()
                    .ok_or_else(|| Error::InvalidInput("empty sum".into()))?;
                for it in items {
                    it.validate()?;
                    require_dim(first.dim_in(), it.dim_in())?;
                    require_dim(first.dim_out(), it.dim_out())?;
                }
            }
            MapExpr::Identity(n) => {
                if *n == 0 {
                    return Err(Error::InvalidInput("identity needs dim >= 1".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim_in(&self) -> usize {
        match self {
            MapExpr::Linear(a) => a.ncols(),
            MapExpr::Polynomial { dim_in, .. } => *dim_in,
            MapExpr::Moebius(a) => a.len(),
            MapExpr::Compose(items) => items.last().map_or(0, MapExpr::dim_in),
            MapExpr::Sum(items) => items.first().map_or(0, MapExpr::dim_in),
            MapExpr::Identity(n) => *n,
        }
    }

    pub fn dim_out(&self) -> usize {
        match self {
            MapExpr::Linear(a) => a.nrows(),
            MapExpr::Polynomial { dim_out, .. } => *dim_out,
            MapExpr::Moebius(a) => a.len(),
            MapExpr::Compose(items) => items.first().map_or(0, MapExpr::dim_out),
            MapExpr::Sum(items) => items.first().map_or(0, MapExpr::dim_out),
            MapExpr::Identity(n) => *n,
        }
    }

    pub fn eval(&self, x: &CVector) -> Result<CVector> {
        require_dim(self.dim_in(), x.len())?;
        if !linalg::is_finite_vec(x) {
            return Err(Error::Domain("non-finite argument".into()));
        }
        Ok(match self {
            MapExpr::Linear(a) => a * x,
            MapExpr::Polynomial { dim_out, terms, .. } => {
                let mut out = CVector::zeros(*dim_out);
                for t in terms {
                    out += &t.coeff * monomial(&t.alpha, x);
                }
                out
            }
            MapExpr::Moebius(a) => {
                check_polydisk(x)?;
                CVector::from_fn(a.len(), |i, _| (x[i] + a[i]) / (ONE + a[i].conj() * x[i]))
            }
            MapExpr::Compose(items) => {
                let mut y = x.clone();
                for it in items.iter().rev() {
                    y = it.eval(&y)?;
                }
                y
            }
            MapExpr::Sum(items) => {
                let mut out = CVector::zeros(self.dim_out());
                for it in items {
                    out += it.eval(x)?;
                }
                out
            }
            MapExpr::Identity(_) => x.clone(),
        })
    }

    /// Complex Jacobian at `x`.
    pub fn jacobian(&self, x: &CVector) -> Result<CMatrix> {
        require_dim(self.dim_in(), x.len())?;
        Ok(match self {
            MapExpr::Linear(a) => a.clone(),
            MapExpr::Polynomial {
                dim_in,
                dim_out,
                terms,
            } => {
                let mut jac = CMatrix::zeros(*dim_out, *dim_in);
                for t in terms {
                    for l in 0..*dim_in {
                        if t.alpha[l] == 0 {
                            continue;
                        }
                        let mut lowered = t.alpha.clone();
                        lowered[l] -= 1;
                        let d = c(t.alpha[l] as f64, 0.0) * monomial(&lowered, x);
                        for i in 0..*dim_out {
                            jac[(i, l)] += t.coeff[i] * d;
                        }
                    }
                }
                jac
            }
            MapExpr::Moebius(a) => {
                check_polydisk(x)?;
                let d = CVector::from_fn(a.len(), |i, _| {
                    let den = ONE + a[i].conj() * x[i];
                    c(1.0 - a[i].norm_sqr(), 0.0) / (den * den)
                });
                CMatrix::from_diagonal(&d)
            }
            MapExpr::Compose(items) => {
                let mut y = x.clone();
                let mut jac = CMatrix::identity(x.len(), x.len());
                for it in items.iter().rev() {
                    jac = it.jacobian(&y)? * jac;
                    y = it.eval(&y)?;
                }
                jac
            }
            MapExpr::Sum(items) => {
                let mut jac = CMatrix::zeros(self.dim_out(), self.dim_in());
                for it in items {
                    jac += it.jacobian(x)?;
                }
                jac
            }
            MapExpr::Identity(n) => CMatrix::identity(*n, *n),
        })
    }

    /// Coefficient of `x^α` in every output component.
    pub fn taylor_coeff(&self, q: &TaylorQuery) -> Result<CVector> {
        let order: u32 = q.multi_index.iter().sum();
        let nodes = taylor_nodes(order);
        Ok(self
            .taylor_coeffs(std::slice::from_ref(&q.multi_index), q.radius, nodes)?
            .pop()
            .expect("one query, one answer"))
    }

    /// Several coefficients from one shared torus grid of `nodes` points per
    /// axis. Exact for polynomials of degree below `nodes`.
    pub fn taylor_coeffs(&self, alphas: &[Vec<u32>], radius: f64, nodes: usize) -> Result<Vec<CVector>> {
        let d = self.dim_in();
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("Cauchy radius {radius} must be positive")));
        }
        for a in alphas {
            require_dim(d, a.len())?;
        }
        if nodes == 0 {
            return Err(Error::InvalidInput("need at least one node per axis".into()));
        }
        let total = nodes
            .checked_pow(d as u32)
            .filter(|&t| t <= 1 << 26)
            .ok_or_else(|| Error::InvalidInput(format!("{nodes}^{d} Cauchy nodes is too many")))?;

        let roots: Vec<C64> = (0..nodes)
            .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / nodes as f64))
            .collect();
        let mut acc = vec![CVector::zeros(self.dim_out()); alphas.len()];
        let mut idx = vec![0usize; d];
        let mut x = CVector::from_element(d, c(radius, 0.0));
        for _ in 0..total {
            for (l, &k) in idx.iter().enumerate() {
                x[l] = roots[k] * radius;
            }
            let fx = self.eval(&x).map_err(|e| match e {
                Error::Domain(msg) => Error::Domain(format!("Cauchy radius {radius} unsafe: {msg}")),
                other => other,
            })?;
            for (a, out) in alphas.iter().zip(acc.iter_mut()) {
                // ω^{-Σ k_l α_l}
                let s: usize = idx.iter().zip(a).map(|(&k, &al)| k * al as usize).sum();
                let w = roots[(nodes - s % nodes) % nodes];
                *out += &fx * w;
            }
            // odometer over the torus grid
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < nodes {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(alphas
            .iter()
            .zip(acc)
            .map(|(a, v)| {
                let order: u32 = a.iter().sum();
                let scale = radius.powi(order as i32) * total as f64;
                v / c(scale, 0.0)
            })
            .collect())
    }
}

/// `2^⌈log₂(8(|α|+1))⌉` trapezoid nodes per axis.
pub fn taylor_nodes(order: u32) -> usize {
    (8 * (order as usize + 1)).next_power_of_two()
}

/// All multi-indices in `dim` variables with `lo ≤ |α| ≤ hi`, graded.
pub fn multi_indices(dim: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    fn rec(dim: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == dim {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            rec(dim, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    for order in lo..=hi {
        rec(dim, order, &mut Vec::new(), &mut out);
    }
    out
}

fn monomial(alpha: &[u32], x: &CVector) -> C64 {
    alpha
        .iter()
        .zip(x.iter())
        .fold(ONE, |acc, (&k, &xi)| if k == 0 { acc } else { acc * xi.powu(k) })
}

fn check_polydisk(x: &CVector) -> Result<()> {
    let r = max_abs(x);
    if r < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("point has sup norm {r}, outside the open polydisk")))
    }
}

/// The automorphism `φ_a` of the polydisk.
pub fn moebius_automorphism(a: &CVector) -> Result<MapExpr> {
    MapExpr::moebius(a.clone())
}

/// `φ_a^{-1} = φ_{-a}`.
pub fn moebius_inverse(a: &CVector) -> Result<MapExpr> {
    MapExpr::moebius(-a)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum MapRepr {
    Linear {
        #[serde(with = "linalg::serde_cmatrix")]
        matrix: CMatrix,
    },
    Polynomial {
        dim_in: usize,
        dim_out: usize,
        terms: Vec<Monomial>,
    },
    Moebius {
        #[serde(with = "linalg::serde_cvector")]
        a: CVector,
    },
    Compose {
        items: Vec<MapExpr>,
    },
    Sum {
        items: Vec<MapExpr>,
    },
    Identity {
        dim: usize,
    },
}

impl TryFrom<MapRepr> for MapExpr {
    type Error = Error;

    fn try_from(r: MapRepr) -> Result<Self> {
        let m = match r {
            MapRepr::Linear { matrix } => MapExpr::Linear(matrix),
            MapRepr::Polynomial {
                dim_in,
                dim_out,
                terms,
            } => MapExpr::Polynomial {
                dim_in,
                dim_out,
                terms,
            },
            MapRepr::Moebius { a } => MapExpr::Moebius(a),
            MapRepr::Compose { items } => MapExpr::Compose(items),
            MapRepr::Sum { items } => MapExpr::Sum(items),
            MapRepr::Identity { dim } => MapExpr::Identity(dim),
        };
        m.validate()?;
        Ok(m)
    }
}

impl From<MapExpr> for MapRepr {
    fn from(m: MapExpr) -> Self {
        match m {
            MapExpr::Linear(matrix) => MapRepr::Linear { matrix },
            MapExpr::Polynomial {
                dim_in,
                dim_out,
                terms,
            } => MapRepr::Polynomial {
                dim_in,
                dim_out,
                terms,
            },
            MapExpr::Moebius(a) => MapRepr::Moebius { a },
            MapExpr::Compose(items) => MapRepr::Compose { items },
            MapExpr::Sum(items) => MapRepr::Sum { items },
            MapExpr::Identity(dim) => MapRepr::Identity { dim },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{rmat, rvec, I, ZERO};

    fn half_square() -> MapExpr {
        // z ↦ (z, z^2/2)
        MapExpr::polynomial(
            1,
            2,
            vec![
                Monomial {
                    alpha: vec![1],
                    coeff: rvec(&[1.0, 0.0]),
                },
                Monomial {
                    alpha: vec![2],
                    coeff: rvec(&[0.0, 0.5]),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn moebius_at_origin_is_parameter() {
        let a = CVector::from_vec(vec![c(0.3, 0.1), c(-0.2, 0.4)]);
        let phi = moebius_automorphism(&a).unwrap();
        assert_eq!(phi.eval(&CVector::zeros(2)).unwrap(), a);
    }

    #[test]
    fn moebius_half_at_half() {
        let phi = MapExpr::moebius(rvec(&[0.5])).unwrap();
        let y = phi.eval(&rvec(&[0.5])).unwrap();
        assert!((y[0] - c(0.8, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn moebius_zero_is_identity() {
        let phi = MapExpr::moebius(CVector::zeros(2)).unwrap();
        let x = CVector::from_vec(vec![c(0.3, -0.7), c(0.0, 0.2)]);
        assert_eq!(phi.eval(&x).unwrap(), x);
    }

    #[test]
    fn moebius_kills_minus_a() {
        let a = CVector::from_vec(vec![c(0.3, 0.0), c(0.0, 0.4)]);
        let phi = moebius_automorphism(&a).unwrap();
        assert!(phi.eval(&-&a).unwrap().norm() < 1e-16);
    }

    #[test]
    fn moebius_domain_errors() {
        assert!(matches!(MapExpr::moebius(rvec(&[1.0])), Err(Error::Domain(_))));
        let phi = MapExpr::moebius(rvec(&[0.5])).unwrap();
        assert!(matches!(phi.eval(&rvec(&[1.0])), Err(Error::Domain(_))));
    }

    #[test]
    fn moebius_jacobian_at_origin() {
        let a = CVector::from_vec(vec![c(0.3, 0.0), c(0.0, 0.4)]);
        let j = MapExpr::moebius(a).unwrap().jacobian(&CVector::zeros(2)).unwrap();
        assert!((j[(0, 0)] - c(0.91, 0.0)).norm() < 1e-15);
        assert!((j[(1, 1)] - c(0.84, 0.0)).norm() < 1e-15);
        assert_eq!(j[(0, 1)], ZERO);
    }

    #[test]
    fn linear_jacobian_is_matrix() {
        let a = CMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64));
        let x = CVector::from_vec(vec![I, ONE, c(0.2, 0.2)]);
        assert_eq!(MapExpr::linear(a.clone()).unwrap().jacobian(&x).unwrap(), a);
    }

    #[test]
    fn compose_dimensions_checked() {
        let f = MapExpr::Identity(2);
        let g = MapExpr::Linear(rmat(&[&[1.0, 2.0, 3.0]]));
        assert!(MapExpr::compose(vec![g, f]).is_err());
    }

    #[test]
    fn taylor_reads_back_polynomial() {
        let f = half_square();
        let c2 = f.taylor_coeff(&TaylorQuery::new(vec![2])).unwrap();
        assert!((c2[1] - c(0.5, 0.0)).norm() < 1e-12);
        assert!(c2[0].norm() < 1e-12);
    }

    #[test]
    fn taylor_of_linear_vanishes_above_one() {
        let f = MapExpr::Linear(CMatrix::from_fn(2, 2, |i, j| c(1.0 + i as f64, j as f64)));
        for alpha in multi_indices(2, 2, 3) {
            let v = f.taylor_coeff(&TaylorQuery::new(alpha)).unwrap();
            assert!(v.norm() < 1e-13);
        }
    }

    #[test]
    fn taylor_of_moebius() {
        // (x + 1/2)/(1 + x/2) = 1/2 + 3/4 x - 3/8 x^2 + ...
        let f = MapExpr::moebius(rvec(&[0.5])).unwrap();
        let c2 = f.taylor_coeff(&TaylorQuery::new(vec![2])).unwrap();
        assert!((c2[0] - c(-0.375, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn taylor_radius_must_be_safe() {
        let f = MapExpr::moebius(rvec(&[0.5])).unwrap();
        let q = TaylorQuery::new(vec![1]).with_radius(1.0);
        assert!(matches!(f.taylor_coeff(&q), Err(Error::Domain(_))));
        let q = TaylorQuery::new(vec![1]).with_radius(-0.1);
        assert!(matches!(f.taylor_coeff(&q), Err(Error::Domain(_))));
    }

    #[test]
    fn node_counts() {
        assert_eq!(taylor_nodes(0), 8);
        assert_eq!(taylor_nodes(2), 32);
        assert_eq!(taylor_nodes(4), 64);
    }

    #[test]
    fn multi_index_enumeration() {
        let all = multi_indices(2, 2, 3);
        assert_eq!(all.len(), 3 + 4);
        assert!(all.contains(&vec![1, 1]));
        assert!(all.iter().all(|a| (2..=3).contains(&a.iter().sum::<u32>())));
    }

    #[test]
    fn json_schema() {
        let s = r#"{"kind":"compose","items":[{"kind":"moebius","a":[[0.5,0]]},{"kind":"identity","dim":1}]}"#;
        let m: MapExpr = serde_json::from_str(s).unwrap();
        assert_eq!(m.dim_in(), 1);
        let back: MapExpr = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"kind":"moebius","a":[[1.5,0]]}"#;
        assert!(serde_json::from_str::<MapExpr>(bad).is_err());
        let poly = r#"{"kind":"polynomial","dim_in":1,"dim_out":2,"terms":[{"alpha":[2],"coeff":[[0,0],[0.5,0]]}]}"#;
        let p: MapExpr = serde_json::from_str(poly).unwrap();
        assert_eq!(p.eval(&rvec(&[0.5])).unwrap()[1], c(0.125, 0.0));
    }
}

//! Certified minimization of grouped complex l1 norms over an affine family.
//!
//! The single problem class solved here is
//!
//! ```text
//!     minimize_w  Φ(a + B w),     Φ(z) = max_g Σ_{j ∈ g} |z_j|
//! ```
//!
//! over complex `w`, where the groups partition the coordinates of `z`. One
//! group gives complex basis pursuit, singleton groups give the sup norm of an
//! affine family, and rows-as-groups give the max-row-sum operator norm.
//!
//! The solver is a log-barrier interior-point method on the second-order cone
//! reformulation. Every answer carries a bracket: the upper end is `Φ` at the
//! returned point; the lower end comes from a dual vector `Λ` that is projected
//! onto `ker B^H` and rescaled to unit dual norm, so weak duality
//! `Re⟨Λ, a⟩ ≤ Φ(a + B w)` holds for it regardless of how accurate the
//! barrier iterates were.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::linalg::{c, phase, CMatrix, CVector, RANK_RTOL, ZERO};

/// Default certified gap.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Default Newton-iteration budget.
pub const DEFAULT_BUDGET: usize = 100_000;
/// Newton steps allowed per centering.
const CENTER_CAP: usize = 200;

#[derive(Debug, Clone)]
pub struct GroupedL1 {
    offset: CVector,
    directions: CMatrix,
    groups: Vec<Vec<usize>>,
    floor: f64,
}

#[derive(Debug, Clone)]
pub struct GroupedL1Solution {
    /// Minimizer in the caller's parameterization.
    pub w: CVector,
    /// The optimal point `a + B w`.
    pub point: CVector,
    /// `Φ(point)`.
    pub upper: f64,
    /// Certified lower bound on the optimum.
    pub lower: f64,
    /// Dual certificate: `B^H Λ = 0`, dual norm 1, `Re⟨Λ, a⟩ ≤ lower` (equal
    /// unless a known lower bound was larger).
    pub dual: CVector,
    pub newton_steps: usize,
}

impl GroupedL1Solution {
    pub fn gap(&self) -> f64 {
        (self.upper - self.lower).max(0.0)
    }
}

impl GroupedL1 {
    pub fn new(offset: CVector, directions: CMatrix, groups: Vec<Vec<usize>>) -> Result<Self> {
        let n = offset.len();
        if directions.nrows() != n {
            return Err(Error::Dimension {
                expected: n,
                got: directions.nrows(),
            });
        }
        let mut seen = vec![false; n];
        for &j in groups.iter().flatten() {
            if j >= n || seen[j] {
                return Err(Error::InvalidInput(format!(
                    "groups must partition 0..{n}; index {j} repeated or out of range"
                )));
            }
            seen[j] = true;
        }
        if seen.iter().any(|s| !s) || groups.iter().any(Vec::is_empty) {
            return Err(Error::InvalidInput(
                "groups must be non-empty and cover every coordinate".into(),
            ));
        }
        Ok(Self {
            offset,
            directions,
            groups,
            floor: f64::NEG_INFINITY,
        })
    }

    /// Basis pursuit: one group holding every coordinate.
    pub fn l1(offset: CVector, directions: CMatrix) -> Result<Self> {
        let n = offset.len();
        Self::new(offset, directions, vec![(0..n).collect()])
    }

    /// A lower bound on the optimum known from outside the program. It joins
    /// the reported bracket; the dual certificate still certifies its own bound.
    pub fn with_known_lower(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn objective(&self, z: &CVector) -> f64 {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&j| z[j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Dual of `Φ`: `Σ_g max_{j ∈ g} |Λ_j|`.
    pub fn dual_norm(&self, lambda: &CVector) -> f64 {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&j| lambda[j].norm()).fold(0.0, f64::max))
            .sum()
    }

    pub fn solve(&self, tol: f64, budget: usize) -> Result<GroupedL1Solution> {
        if !(tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        let reduced = Reduced::new(&self.directions);
        let q = &reduced.q;
        let p = q.ncols();
        let a = &self.offset;

        if p == 0 {
            let (lower, dual) = self.certify(&self.norming_dual(a), q);
            let lower = lower.max(self.floor.min(self.objective(a)));
            return Ok(GroupedL1Solution {
                w: CVector::zeros(self.directions.ncols()),
                point: a.clone(),
                upper: self.objective(a),
                lower,
                dual,
                newton_steps: 0,
            });
        }

        let mut barrier = Barrier::new(self, q);
        let mut x = barrier.initial_point(a);
        let nu = barrier.nu();
        let mut tau = nu / (self.objective(a) + 1.0);
        let mut steps = 0usize;

        let mut best: Option<(CVector, f64, f64, CVector)> = None;
        let mut stale = 0;
        loop {
            let cap = budget.saturating_sub(steps).min(CENTER_CAP);
            let (x_new, used) = barrier.center(x, tau, cap)?;
            x = x_new;
            steps += used;

            let wr = barrier.w_of(&x);
            let z = a + q * &wr;
            let upper = self.objective(&z);
            let (lower, dual) = barrier
                .dual_guesses(&x, tau)
                .iter()
                .map(|g| self.certify(g, q))
                .max_by(|p, q| p.0.total_cmp(&q.0))
                .expect("at least one guess");
            let lower = lower.max(self.floor.min(upper));
            let improved = best.as_ref().is_none_or(|(_, u, l, _)| upper - lower < u - l);
            if improved {
                best = Some((wr.clone(), upper, lower, dual));
                stale = 0;
            } else {
                stale += 1;
            }
            let (_, bu, bl, _) = best.as_ref().expect("set above");
            if bu - bl <= tol {
                break;
            }
            if steps >= budget || stale >= 3 || nu / tau < 1e-14 * (1.0 + upper) {
                let (_, u, l, _) = best.expect("set above");
                return Err(Error::NumericalFailure {
                    reason: format!("barrier method stalled after {steps} Newton steps"),
                    lower: l,
                    upper: u,
                });
            }
            tau *= 8.0;
        }

        let (wr, upper, lower, dual) = best.expect("loop exits with a candidate");
        let point = a + q * &wr;
        Ok(GroupedL1Solution {
            w: reduced.lift(&wr),
            point,
            upper,
            lower,
            dual,
            newton_steps: steps,
        })
    }

    /// A unit-dual-norm vector aligned with `z` on its heaviest group.
    fn norming_dual(&self, z: &CVector) -> CVector {
        let mut lambda = CVector::zeros(z.len());
        let heaviest = self.groups.iter().max_by(|g, h| {
            let sg: f64 = g.iter().map(|&j| z[j].norm()).sum();
            let sh: f64 = h.iter().map(|&j| z[j].norm()).sum();
            sg.total_cmp(&sh)
        });
        if let Some(g) = heaviest {
            for &j in g {
                lambda[j] = phase(z[j]);
            }
        }
        lambda
    }

    /// Projects onto `ker Q^H`, rescales to unit dual norm and returns the
    /// weak-duality bound it certifies.
    fn certify(&self, lambda: &CVector, q: &CMatrix) -> (f64, CVector) {
        let projected = lambda - q * (q.adjoint() * lambda);
        let dn = self.dual_norm(&projected);
        if !(dn > 0.0) || !dn.is_finite() {
            return (0.0, CVector::zeros(lambda.len()));
        }
        let scaled = projected / c(dn, 0.0);
        let value = scaled.dotc(&self.offset).re.max(0.0);
        (value, scaled)
    }
}

/// Orthonormalized directions `B = Q R` (via SVD) so that the barrier works
/// in a well-conditioned, full-rank parameterization.
struct Reduced {
    q: CMatrix,
    /// Maps reduced coordinates back: `w = back * w_reduced`.
    back: CMatrix,
}

impl Reduced {
    fn new(b: &CMatrix) -> Self {
        let (n, p) = b.shape();
        if p == 0 || n == 0 {
            return Self {
                q: CMatrix::zeros(n, 0),
                back: CMatrix::zeros(p, 0),
            };
        }
        let svd = SVD::new(b.clone(), true, true);
        let u = svd.u.expect("requested");
        let v_t = svd.v_t.expect("requested");
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > RANK_RTOL * smax && svd.singular_values[k] > 0.0)
            .collect();
        let q = CMatrix::from_fn(n, keep.len(), |i, j| u[(i, keep[j])]);
        // B = U S V^H, so B w = Q w_r when w = V S^-1 w_r
        let back = CMatrix::from_fn(p, keep.len(), |i, j| {
            let k = keep[j];
            v_t[(k, i)].conj() / c(svd.singular_values[k], 0.0)
        });
        Self { q, back }
    }

    fn lift(&self, wr: &CVector) -> CVector {
        &self.back * wr
    }
}

/// Barrier for `min s` subject to `|z_j| ≤ u_j` and `Σ_{j∈g} u_j ≤ s`, with
/// real variables `x = (Re w, Im w, u, s)`.
struct Barrier<'a> {
    problem: &'a GroupedL1,
    q: &'a CMatrix,
    p: usize,
    n: usize,
    group_of: Vec<usize>,
}

impl<'a> Barrier<'a> {
    fn new(problem: &'a GroupedL1, q: &'a CMatrix) -> Self {
        let n = problem.offset.len();
        let mut group_of = vec![0; n];
        for (gi, g) in problem.groups.iter().enumerate() {
            for &j in g {
                group_of[j] = gi;
            }
        }
        Self {
            problem,
            q,
            p: q.ncols(),
            n,
            group_of,
        }
    }

    fn nu(&self) -> f64 {
        (2 * self.n + self.problem.groups.len()) as f64
    }

    fn dim(&self) -> usize {
        2 * self.p + self.n + 1
    }

    fn u_idx(&self, j: usize) -> usize {
        2 * self.p + j
    }

    fn s_idx(&self) -> usize {
        2 * self.p + self.n
    }

    fn w_of(&self, x: &DVector<f64>) -> CVector {
        CVector::from_fn(self.p, |k, _| c(x[k], x[self.p + k]))
    }

    fn z_of(&self, x: &DVector<f64>) -> CVector {
        &self.problem.offset + self.q * self.w_of(x)
    }

    fn initial_point(&self, a: &CVector) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        for j in 0..self.n {
            x[self.u_idx(j)] = a[j].norm() + 1.0;
        }
        let s = self
            .problem
            .groups
            .iter()
            .map(|g| g.iter().map(|&j| x[self.u_idx(j)]).sum::<f64>())
            .fold(0.0, f64::max);
        x[self.s_idx()] = s + 1.0;
        x
    }

    /// Cone slacks, or `None` outside the interior.
    fn slacks(&self, x: &DVector<f64>) -> Option<(CVector, Vec<f64>, Vec<f64>)> {
        let z = self.z_of(x);
        let mut qs = Vec::with_capacity(self.n);
        for j in 0..self.n {
            let u = x[self.u_idx(j)];
            let q = (u - z[j].norm()) * (u + z[j].norm());
            if !(u > 0.0 && q > 0.0) {
                return None;
            }
            qs.push(q);
        }
        let s = x[self.s_idx()];
        let mut sig = Vec::with_capacity(self.problem.groups.len());
        for g in &self.problem.groups {
            let v = s - g.iter().map(|&j| x[self.u_idx(j)]).sum::<f64>();
            if !(v > 0.0) {
                return None;
            }
            sig.push(v);
        }
        Some((z, qs, sig))
    }

    fn value(&self, x: &DVector<f64>, tau: f64) -> Option<f64> {
        let (_, qs, sig) = self.slacks(x)?;
        let mut f = tau * x[self.s_idx()];
        f -= qs.iter().map(|q| q.ln()).sum::<f64>();
        f -= sig.iter().map(|v| v.ln()).sum::<f64>();
        Some(f)
    }

    fn grad_hess(&self, x: &DVector<f64>, tau: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (z, qs, sig) = self.slacks(x)?;
        let d = self.dim();
        let p = self.p;
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        grad[self.s_idx()] = tau;

        for j in 0..self.n {
            // rows of the chart (u_j, Re z_j, Im z_j) -> x
            let mut rows = [DVector::zeros(d), DVector::zeros(d), DVector::zeros(d)];
            rows[0][self.u_idx(j)] = 1.0;
            for k in 0..p {
                let qjk = self.q[(j, k)];
                rows[1][k] = qjk.re;
                rows[1][p + k] = -qjk.im;
                rows[2][k] = qjk.im;
                rows[2][p + k] = qjk.re;
            }
            let u = x[self.u_idx(j)];
            let (zr, zi) = (z[j].re, z[j].im);
            let qv = qs[j];
            // -log(u^2 - zr^2 - zi^2) in local coordinates
            let vloc = [u, -zr, -zi];
            let diag = [-2.0 / qv, 2.0 / qv, 2.0 / qv];
            let g_loc = [-2.0 * u / qv, 2.0 * zr / qv, 2.0 * zi / qv];
            for r in 0..3 {
                grad.axpy(g_loc[r], &rows[r], 1.0);
                for s in 0..3 {
                    let mut h = 4.0 * vloc[r] * vloc[s] / (qv * qv);
                    if r == s {
                        h += diag[r];
                    }
                    hess.ger(h, &rows[r], &rows[s], 1.0);
                }
            }
        }

        for (gi, g) in self.problem.groups.iter().enumerate() {
            let v = sig[gi];
            // -log(s - Σ u): gradient -∇σ/σ, Hessian ∇σ∇σ^T/σ^2
            let mut touched: Vec<(usize, f64)> = g.iter().map(|&j| (self.u_idx(j), -1.0)).collect();
            touched.push((self.s_idx(), 1.0));
            for &(i, di) in &touched {
                grad[i] -= di / v;
                for &(k, dk) in &touched {
                    hess[(i, k)] += di * dk / (v * v);
                }
            }
        }
        Some((grad, hess))
    }

    /// Damped Newton centering at fixed `tau`.
    fn center(&mut self, mut x: DVector<f64>, tau: f64, budget: usize) -> Result<(DVector<f64>, usize)> {
        let mut used = 0;
        while used < budget.max(1) {
            let (grad, hess) = self.grad_hess(&x, tau).ok_or_else(|| Error::NumericalFailure {
                reason: "iterate left the cone interior".into(),
                lower: 0.0,
                upper: f64::INFINITY,
            })?;
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    let scale = hess.diagonal().amax().max(1.0);
                    let reg = hess + DMatrix::identity(self.dim(), self.dim()) * (1e-12 * scale);
                    match reg.cholesky() {
                        Some(ch) => ch.solve(&(-&grad)),
                        None => {
                            return Err(Error::NumericalFailure {
                                reason: "barrier Hessian is not positive definite".into(),
                                lower: 0.0,
                                upper: f64::INFINITY,
                            })
                        }
                    }
                }
            };
            used += 1;
            let decrement = -grad.dot(&step);
            if !decrement.is_finite() {
                break;
            }
            if decrement / 2.0 <= 1e-11 {
                break;
            }
            let f0 = self.value(&x, tau).expect("x is interior");
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial = &x + &step * alpha;
                if let Some(f) = self.value(&trial, tau) {
                    if f <= f0 - 0.25 * alpha * decrement {
                        x = trial;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok((x, used))
    }

    /// Central-path estimates of the cone multipliers: `2 z_j / (τ q_j)`, and
    /// the group-scaled `μ_g z_j / u_j` with `μ_g = 1 / (τ σ_g)`, which stays
    /// inside the dual ball even off the central path.
    fn dual_guesses(&self, x: &DVector<f64>, tau: f64) -> Vec<CVector> {
        let Some((z, qs, sig)) = self.slacks(x) else {
            return vec![CVector::from_element(self.n, ZERO)];
        };
        let plain = CVector::from_fn(self.n, |j, _| z[j] * c(2.0 / (tau * qs[j]), 0.0));
        let scaled = CVector::from_fn(self.n, |j, _| {
            let mu = 1.0 / (tau * sig[self.group_of[j]]);
            z[j] * c(mu / x[self.u_idx(j)], 0.0)
        });
        vec![plain, scaled]
    }
}

//! Primal-dual interior-point iterations for the normalized program
//!
//! ```text
//! minimize   tr(X) + eta*q - psi        (the X term is reweighted outside)
//! subject to <H, X> >= 1,  tr(X) <= u,  X >= 0            (PSD block)
//!            0 <= q <= 1,  psi >= psi_th,  psi <= l(q)     (scalar block)
//! ```
//!
//! with `H = h h^H`, `|h| = 1`, and `l(q) = ln(1 + q s) / ln(1 + s)`.
//! `X` is handled through its real symmetric embedding; inner products are
//! taken as `<A, B> = tr(AB) / 2` so that they match the complex ones.
//! The Newton system is block diagonal. The PSD block uses the HKM search
//! direction, the scalar block a standard primal-dual Newton step with
//! backtracking on the residual norm.

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;

use super::eigen::embed;

const FRACTION_TO_BOUNDARY: f64 = 0.99;
const CENTERING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpmOptions {
    pub max_iterations: usize,
    /// PSD block stops at `gap <= psd_gap_tol * tr(X)`.
    pub psd_gap_tol: f64,
    /// Scalar block stops at `gap <= scalar_gap_tol * (1 + |objective|)`.
    pub scalar_gap_tol: f64,
    pub dual_residual_tol: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            max_iterations: 200,
            psd_gap_tol: 1e-10,
            scalar_gap_tol: 1e-12,
            dual_residual_tol: 1e-10,
        }
    }
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    0.5 * a.component_mul(b).sum()
}

/// Largest `alpha` keeping `x + alpha * dx` positive definite (capped at 1e300).
fn psd_step_bound(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let l = x.clone().cholesky()?.l();
    let linv = l.try_inverse()?;
    let m = &linv * dx * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let lmin = m.symmetric_eigenvalues().min();
    Some(if lmin < 0.0 { -1.0 / lmin } else { 1e300 })
}

fn positive_bound(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        1e300
    }
}

struct PsdBlock {
    a: [DMatrix<f64>; 2],
    k: [f64; 2],
    x: DMatrix<f64>,
    lambda: [f64; 2],
    dim: f64,
}

impl PsdBlock {
    fn new(hhat: &[Complex64], cap: f64) -> Self {
        let n = hhat.len();
        let hm = DMatrix::from_fn(n, n, |i, j| hhat[i] * hhat[j].conj());
        let h = embed(&hm);
        let id = DMatrix::<f64>::identity(2 * n, 2 * n);
        let room = (cap - 1.0).min(4.0) / 4.0;
        let beta = 1.0 + room;
        let delta = room / n as f64;
        let x = &h * beta + &id * delta;
        let mut block = PsdBlock {
            a: [-h, id],
            k: [1.0, -cap],
            x,
            lambda: [0.5, 0.0],
            dim: n as f64 + 2.0,
        };
        let g2 = block.g(1);
        block.lambda[1] = (0.5f64).min(1.0 / (n as f64 * -g2));
        block
    }

    fn g(&self, i: usize) -> f64 {
        self.k[i] + inner(&self.a[i], &self.x)
    }

    fn dual(&self) -> DMatrix<f64> {
        let n = self.x.nrows();
        DMatrix::<f64>::identity(n, n) + &self.a[0] * self.lambda[0] + &self.a[1] * self.lambda[1]
    }

    fn gap(&self) -> f64 {
        let s = self.dual();
        (0..2).map(|i| -self.lambda[i] * self.g(i)).sum::<f64>() + inner(&self.x, &s)
    }

    fn objective(&self) -> f64 {
        inner(&self.a[1], &self.x)
    }

    fn step(&mut self) -> Option<()> {
        let s = self.dual();
        let sinv = s.clone().cholesky()?.inverse();
        let mu = CENTERING * self.gap() / self.dim;
        let target = &sinv * mu - &self.x;
        let g = [self.g(0), self.g(1)];
        let mut m = Matrix2::zeros();
        let mut rhs = Vector2::zeros();
        let ys: [DMatrix<f64>; 2] = [&self.x * &self.a[0] * &sinv, &self.x * &self.a[1] * &sinv];
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = self.lambda[i] * inner(&self.a[i], &ys[j]);
            }
            m[(i, i)] -= g[i];
            rhs[i] = mu + self.lambda[i] * g[i] + self.lambda[i] * inner(&self.a[i], &target);
        }
        let dl = m.lu().solve(&rhs)?;
        let ds = &self.a[0] * dl[0] + &self.a[1] * dl[1];
        let t = &self.x * &ds * &sinv;
        let dx = target - (&t + t.transpose()) * 0.5;

        let mut alpha: f64 = 1e300;
        alpha = alpha.min(psd_step_bound(&self.x, &dx)?);
        alpha = alpha.min(psd_step_bound(&s, &ds)?);
        for i in 0..2 {
            alpha = alpha.min(positive_bound(self.lambda[i], dl[i]));
            alpha = alpha.min(positive_bound(-g[i], -inner(&self.a[i], &dx)));
        }
        let alpha = (FRACTION_TO_BOUNDARY * alpha).min(1.0);
        self.x += dx * alpha;
        self.x = (&self.x + self.x.transpose()) * 0.5;
        for i in 0..2 {
            self.lambda[i] += alpha * dl[i];
        }
        Some(())
    }
}

struct ScalarBlock {
    eta: f64,
    psi_th: f64,
    s: f64,
    log1s: f64,
    y: [f64; 2],
    lambda: [f64; 4],
}

impl ScalarBlock {
    fn new(eta: f64, psi_th: f64, s: f64) -> Self {
        let log1s = s.ln_1p();
        let q_min = (psi_th * log1s).exp_m1() / s;
        let mut b = ScalarBlock {
            eta,
            psi_th,
            s,
            log1s,
            y: [0.0; 2],
            lambda: [1.0; 4],
        };
        let q0 = 0.5 * (1.0 + q_min);
        b.y = [q0, 0.5 * (psi_th + b.ell(q0))];
        b
    }

    fn ell(&self, q: f64) -> f64 {
        (q * self.s).ln_1p() / self.log1s
    }

    fn ell_d1(&self, q: f64) -> f64 {
        self.s / ((1.0 + q * self.s) * self.log1s)
    }

    fn ell_d2(&self, q: f64) -> f64 {
        let d = 1.0 + q * self.s;
        -self.s * self.s / (d * d * self.log1s)
    }

    fn constraints(&self, y: [f64; 2]) -> [f64; 4] {
        [y[0] - 1.0, -y[0], self.psi_th - y[1], y[1] - self.ell(y[0])]
    }

    fn grads(&self, y: [f64; 2]) -> [Vector2<f64>; 4] {
        [
            Vector2::new(1.0, 0.0),
            Vector2::new(-1.0, 0.0),
            Vector2::new(0.0, -1.0),
            Vector2::new(-self.ell_d1(y[0]), 1.0),
        ]
    }

    fn objective(&self) -> f64 {
        self.eta * self.y[0] - self.y[1]
    }

    fn gap(&self) -> f64 {
        let g = self.constraints(self.y);
        (0..4).map(|i| -self.lambda[i] * g[i]).sum()
    }

    fn dual_residual(&self, y: [f64; 2], lambda: &[f64; 4]) -> Vector2<f64> {
        let grads = self.grads(y);
        let mut r = Vector2::new(self.eta, -1.0);
        for i in 0..4 {
            r += grads[i] * lambda[i];
        }
        r
    }

    fn residual_norm(&self, y: [f64; 2], lambda: &[f64; 4], mu: f64) -> f64 {
        let g = self.constraints(y);
        let rd = self.dual_residual(y, lambda).norm_squared();
        let rc: f64 = (0..4).map(|i| (-lambda[i] * g[i] - mu).powi(2)).sum();
        (rd + rc).sqrt()
    }

    fn step(&mut self) -> Option<()> {
        let g = self.constraints(self.y);
        let grads = self.grads(self.y);
        let mu = CENTERING * self.gap() / 4.0;
        let mut h = Matrix2::new(-self.lambda[3] * self.ell_d2(self.y[0]), 0.0, 0.0, 0.0);
        let mut rhs = -Vector2::new(self.eta, -1.0);
        for i in 0..4 {
            h += grads[i] * grads[i].transpose() * (self.lambda[i] / -g[i]);
            rhs -= grads[i] * (mu / -g[i]);
        }
        let dy = h.lu().solve(&rhs)?;
        let dl: [f64; 4] =
            std::array::from_fn(|i| -(self.lambda[i] * grads[i].dot(&dy) + self.lambda[i] * g[i] + mu) / g[i]);
        let mut alpha = (0..4)
            .map(|i| FRACTION_TO_BOUNDARY * positive_bound(self.lambda[i], dl[i]))
            .fold(1.0f64, f64::min);
        let r0 = self.residual_norm(self.y, &self.lambda, mu);
        for _ in 0..60 {
            let y = [self.y[0] + alpha * dy[0], self.y[1] + alpha * dy[1]];
            let lambda: [f64; 4] = std::array::from_fn(|i| self.lambda[i] + alpha * dl[i]);
            let feasible = self.constraints(y).iter().all(|&c| c < 0.0);
            if feasible && self.residual_norm(y, &lambda, mu) <= (1.0 - 0.01 * alpha) * r0 {
                self.y = y;
                self.lambda = lambda;
                return Some(());
            }
            alpha *= 0.5;
        }
        None
    }
}

/// Data of the PSD block: unit-norm channel direction and trace cap `u > 1`.
#[derive(Debug, Clone, Copy)]
pub struct PsdData<'a> {
    pub hhat: &'a [Complex64],
    pub cap: f64,
}

/// Data of the scalar block: `0 < psi_th < 1`, `s > 0`.
#[derive(Debug, Clone, Copy)]
pub struct ScalarData {
    pub eta: f64,
    pub psi_th: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdResult {
    /// Embedded `X`, size `2K x 2K`.
    pub x: DMatrix<f64>,
    pub iterations: usize,
    pub gap: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarResult {
    pub q: f64,
    pub psi: f64,
    pub iterations: usize,
    pub gap: f64,
    pub dual_residual: f64,
    pub converged: bool,
}

impl PsdBlock {
    fn done(&self, opts: &IpmOptions) -> bool {
        self.gap() <= opts.psd_gap_tol * self.objective()
    }
}

impl ScalarBlock {
    fn done(&self, opts: &IpmOptions) -> bool {
        let res = self.dual_residual(self.y, &self.lambda).norm();
        self.gap() <= opts.scalar_gap_tol * (1.0 + self.objective().abs()) && res <= opts.dual_residual_tol
    }
}

/// Runs the blocks that are present in lockstep until each meets its
/// tolerance or the iteration budget is spent.
pub fn solve_normalized(
    psd: Option<PsdData<'_>>,
    scalar: Option<ScalarData>,
    opts: &IpmOptions,
) -> (Option<PsdResult>, Option<ScalarResult>) {
    let mut pb = psd.map(|d| PsdBlock::new(d.hhat, d.cap));
    let mut sb = scalar.map(|d| ScalarBlock::new(d.eta, d.psi_th, d.s));
    let (mut psd_it, mut scalar_it) = (0, 0);
    let mut psd_done = pb.as_ref().is_none_or(|b| b.done(opts));
    let mut scalar_done = sb.as_ref().is_none_or(|b| b.done(opts));
    let (mut psd_stalled, mut scalar_stalled) = (false, false);
    for _ in 0..opts.max_iterations {
        if (psd_done || psd_stalled) && (scalar_done || scalar_stalled) {
            break;
        }
        if let Some(b) = pb.as_mut().filter(|_| !psd_done && !psd_stalled) {
            match b.step() {
                Some(()) => {
                    psd_it += 1;
                    psd_done = b.done(opts);
                }
                None => psd_stalled = true,
            }
        }
        if let Some(b) = sb.as_mut().filter(|_| !scalar_done && !scalar_stalled) {
            match b.step() {
                Some(()) => {
                    scalar_it += 1;
                    scalar_done = b.done(opts);
                }
                None => scalar_stalled = true,
            }
        }
    }
    let psd_out = pb.map(|b| PsdResult {
        gap: b.gap(),
        converged: psd_done,
        iterations: psd_it,
        x: b.x,
    });
    let scalar_out = sb.map(|b| ScalarResult {
        gap: b.gap(),
        dual_residual: b.dual_residual(b.y, &b.lambda).norm(),
        converged: scalar_done,
        iterations: scalar_it,
        q: b.y[0],
        psi: b.y[1],
    });
    (psd_out, scalar_out)
}

//! Cyclic Jacobi eigen-decomposition and rank-one extraction.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Real symmetric embedding `[[A, -B], [B, A]]` of `A + iB`.
pub fn embed(v: &DMatrix<Complex64>) -> DMatrix<f64> {
    let k = v.nrows();
    DMatrix::from_fn(2 * k, 2 * k, |i, j| {
        let z = v[(i % k, j % k)];
        match (i < k, j < k) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`embed`], averaging the redundant blocks.
pub fn unembed(y: &DMatrix<f64>) -> DMatrix<Complex64> {
    let k = y.nrows() / 2;
    DMatrix::from_fn(k, k, |i, j| {
        let re = 0.5 * (y[(i, j)] + y[(i + k, j + k)]);
        let im = 0.5 * (y[(i + k, j)] - y[(i, j + k)]);
        Complex64::new(re, im)
    })
}

/// Eigenvalues (descending) and column eigenvectors of a symmetric matrix
/// by cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    let total = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apr = m[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (m[(r, r)] - m[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkr) = (m[(k, p)], m[(k, r)]);
                    m[(k, p)] = c * mkp - s * mkr;
                    m[(k, r)] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let (mpk, mrk) = (m[(p, k)], m[(r, k)]);
                    m[(p, k)] = c * mpk - s * mrk;
                    m[(r, k)] = s * mpk + c * mrk;
                }
                for k in 0..n {
                    let (qkp, qkr) = (q[(k, p)], q[(k, r)]);
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| q[(r, order[c])]);
    (values, vectors)
}

/// Rotates `v` so its first component of non-negligible magnitude is real
/// and non-negative.
pub fn normalize_phase(v: &mut [Complex64]) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12 * scale).copied() {
        let rot = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= rot);
    }
}

/// Largest eigenvalue and unit eigenvector of a Hermitian matrix.
pub fn hermitian_top_eigen(v: &DMatrix<Complex64>) -> (f64, Vec<Complex64>) {
    let k = v.nrows();
    let (vals, vecs) = jacobi_eigen(&embed(v));
    let col = vecs.column(0);
    let mut u: Vec<Complex64> = (0..k).map(|i| Complex64::new(col[i], col[i + k])).collect();
    let n = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    u.iter_mut().for_each(|z| *z /= n);
    normalize_phase(&mut u);
    (vals[0], u)
}

pub fn trace_re(v: &DMatrix<Complex64>) -> f64 {
    (0..v.nrows()).map(|i| v[(i, i)].re).sum()
}

/// Rank-one beamformer `sqrt(lambda_max) * u_max` and the tightness ratio
/// `lambda_max / tr(V)`. A zero matrix gives a zero beamformer and ratio 1.
pub fn extract_beamformer(v: &DMatrix<Complex64>) -> (Vec<Complex64>, f64) {
    let tr = trace_re(v);
    if tr <= 0.0 {
        return (vec![Complex64::new(0.0, 0.0); v.nrows()], 1.0);
    }
    let (lmax, u) = hermitian_top_eigen(v);
    let lmax = lmax.max(0.0);
    let v = u.iter().map(|z| z * lmax.sqrt()).collect();
    (v, lmax / tr)
}

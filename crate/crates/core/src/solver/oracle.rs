//! Closed-form optima of the two blocks of the power-control program.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::InfeasibleSide;
use crate::link::{downlink_rate, LinkParams};
use crate::{Error, Result};

/// Minimum-trace `V >= 0` with `h^H V h = c`: `V = c / |h|^4 * h h^H`,
/// trace `c / |h|^2`.
pub fn oracle_v(h: &[Complex64], c: f64) -> Result<(DMatrix<Complex64>, f64)> {
    let n2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    if !(n2 > 0.0) {
        return Err(Error::Domain("zero channel".into()));
    }
    if !(c >= 0.0) {
        return Err(Error::param("c", "must be non-negative"));
    }
    let scale = c / (n2 * n2);
    let v = DMatrix::from_fn(h.len(), h.len(), |i, j| h[i] * h[j].conj() * scale);
    Ok((v, c / n2))
}

/// Largest downlink rate, reached at full UAV power.
pub fn max_downlink_rate(g_dl: f64, params: &LinkParams) -> f64 {
    downlink_rate(params.pv_max_w, g_dl, params)
}

/// Optimal UAV power and the matching rate for the `(p, phi)` block.
pub fn oracle_p(g_dl: f64, params: &LinkParams) -> Result<(f64, f64)> {
    let r_max = max_downlink_rate(g_dl, params);
    if !(g_dl > 0.0) || r_max < params.rate_th_bps {
        return Err(Error::Infeasible(InfeasibleSide::Downlink));
    }
    let noise = params.noise_power_w();
    let w = params.bandwidth_hz;
    let p_min = (2f64.powf(params.rate_th_bps / w) - 1.0) * noise / g_dl;
    let stationary = w * params.pv_max_w / (params.eta * r_max * LN_2) - noise / g_dl;
    let p = stationary.clamp(p_min.min(params.pv_max_w), params.pv_max_w);
    Ok((p, downlink_rate(p, g_dl, params)))
}

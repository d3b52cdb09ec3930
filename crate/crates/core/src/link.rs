//! Rate formulas and the constraint set of the power-control problem.

use std::f64::consts::{LOG2_E, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Scalar link parameters. Powers in W, rates in bit/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkParams {
    #[serde(rename = "W_hz")]
    pub bandwidth_hz: f64,
    /// Noise power spectral density, dBm/Hz.
    #[serde(rename = "N0_dbm_hz")]
    pub noise_dbm_hz: f64,
    /// Control packet length `F_u`, bits.
    #[serde(rename = "Fu_bits")]
    pub packet_bits: f64,
    /// Control delivery deadline `D_u`, s.
    #[serde(rename = "Du_s")]
    pub latency_s: f64,
    /// Decoding error probability.
    #[serde(rename = "eps")]
    pub epsilon: f64,
    pub snr_th_db: f64,
    /// Downlink rate floor `R_e^th`.
    #[serde(rename = "Re_th_bps")]
    pub rate_th_bps: f64,
    #[serde(rename = "pB_max_w")]
    pub pb_max_w: f64,
    pub pv_max_w: f64,
    /// Slot duration `T_f`, s.
    #[serde(rename = "Tf_s")]
    pub frame_s: f64,
    /// Energy-efficiency weight.
    pub eta: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            bandwidth_hz: 20e6,
            noise_dbm_hz: -177.0,
            packet_bits: 1000.0,
            latency_s: 1e-3,
            epsilon: 1e-7,
            snr_th_db: 20.0,
            rate_th_bps: 10e6,
            pb_max_w: 5.0,
            pv_max_w: 1.0,
            frame_s: 5.0,
            eta: 0.5,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("W_hz", self.bandwidth_hz),
            ("Fu_bits", self.packet_bits),
            ("Du_s", self.latency_s),
            ("Re_th_bps", self.rate_th_bps),
            ("pB_max_w", self.pb_max_w),
            ("pv_max_w", self.pv_max_w),
            ("Tf_s", self.frame_s),
            ("eta", self.eta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} must be positive and finite")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::param("eps", format!("{} not in (0, 0.5)", self.epsilon)));
        }
        if !self.noise_dbm_hz.is_finite() {
            return Err(Error::param("N0_dbm_hz", "must be finite"));
        }
        if self.snr_th_db.is_nan() || self.snr_th_db == f64::INFINITY {
            return Err(Error::param("snr_th_db", "must be a number below +inf"));
        }
        if self.latency_s > self.frame_s {
            return Err(Error::param("Du_s", "control deadline exceeds the slot"));
        }
        Ok(())
    }

    /// `N0 * W`, W.
    pub fn noise_power_w(&self) -> f64 {
        10f64.powf((self.noise_dbm_hz - 30.0) / 10.0) * self.bandwidth_hz
    }

    pub fn snr_th_linear(&self) -> f64 {
        10f64.powf(self.snr_th_db / 10.0)
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] by bisection on the complementary error
/// function. Absolute accuracy is far below 1e-9.
pub fn q_inv(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("Q^-1 needs eps in (0, 1), got {eps}")));
    }
    // Q(-40) rounds to 1 and Q(40) underflows to 0, so the root is bracketed.
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if q_function(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Channel dispersion `1 - (1 + snr)^-2`.
pub fn dispersion(snr: f64) -> f64 {
    1.0 - (1.0 + snr).powi(-2)
}

/// Finite-blocklength rate for received power `tr_hv = tr(H V)` over a
/// transmission of duration `tau`. Can be negative at low SNR.
pub fn uplink_rate(tr_hv: f64, tau: f64, params: &LinkParams) -> f64 {
    let snr = tr_hv / params.noise_power_w();
    uplink_rate_with_dispersion(snr, dispersion(snr), tau, params)
}

/// Same as [`uplink_rate`] with the dispersion fixed to one.
pub fn uplink_rate_unit_dispersion(tr_hv: f64, tau: f64, params: &LinkParams) -> f64 {
    let snr = tr_hv / params.noise_power_w();
    uplink_rate_with_dispersion(snr, 1.0, tau, params)
}

fn uplink_rate_with_dispersion(snr: f64, dispersion: f64, tau: f64, params: &LinkParams) -> f64 {
    let w = params.bandwidth_hz;
    // eps is validated to lie in (0, 1/2)
    let qi = q_inv(params.epsilon).unwrap_or(0.0);
    w * (1.0 + snr).log2() - (w * dispersion / tau).sqrt() * qi * LOG2_E
}

/// Shannon rate of the payload link for UAV power `p` and combined gain
/// `tr_hz = |sum_k h_k|^2`.
pub fn downlink_rate(p: f64, tr_hz: f64, params: &LinkParams) -> f64 {
    let w = params.bandwidth_hz;
    w * (1.0 + p * tr_hz / params.noise_power_w()).log2()
}

/// The two lower bounds on `tr(H V)`, W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UplinkFloors {
    /// From the latency constraint with unit dispersion and `tau = D_u`.
    pub rate_floor_w: f64,
    /// From the SNR threshold.
    pub snr_floor_w: f64,
}

impl UplinkFloors {
    pub fn binding(&self) -> f64 {
        self.rate_floor_w.max(self.snr_floor_w)
    }
}

pub fn uplink_floors(params: &LinkParams) -> Result<UplinkFloors> {
    let w = params.bandwidth_hz;
    let noise = params.noise_power_w();
    let qi = q_inv(params.epsilon)?;
    let needed = params.packet_bits / params.latency_s + (w / params.latency_s).sqrt() * qi * LOG2_E;
    Ok(UplinkFloors {
        rate_floor_w: noise * ((needed / w).exp2() - 1.0),
        snr_floor_w: noise * params.snr_th_linear(),
    })
}

/// Smallest `tr(H V)` meeting both the latency constraint (unit dispersion)
/// and the SNR threshold, W.
pub fn required_uplink_trace(params: &LinkParams) -> Result<f64> {
    Ok(uplink_floors(params)?.binding())
}

/// What a constraint check needs to know about an operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// `tr(H_Bv V)`, W.
    pub uplink_trace: f64,
    /// `tr(V)`, W.
    pub bs_power: f64,
    /// UAV transmit power, W.
    pub uav_power: f64,
    /// `|sum_k h_k^v|^2` of the payload channel.
    pub downlink_gain: f64,
}

/// Per-constraint slacks, each normalized by its threshold so that
/// a negative value is a relative violation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub uplink_rate_bps: f64,
    pub downlink_rate_bps: f64,
    /// Latency constraint evaluated with the exact dispersion at `tau = D_u`.
    pub latency: f64,
    pub snr: f64,
    pub downlink_rate: f64,
    pub bs_power: f64,
    pub uav_power: f64,
}

impl FeasibilityReport {
    pub fn min_slack(&self) -> f64 {
        [self.latency, self.snr, self.downlink_rate, self.bs_power, self.uav_power]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.min_slack() >= -tol
    }
}

pub fn check_feasible(point: &OperatingPoint, params: &LinkParams) -> FeasibilityReport {
    let required_rate = params.packet_bits / params.latency_s;
    let r_ul = uplink_rate(point.uplink_trace, params.latency_s, params);
    let r_dl = downlink_rate(point.uav_power, point.downlink_gain, params);
    let snr = point.uplink_trace / params.noise_power_w();
    let snr_th = params.snr_th_linear();
    FeasibilityReport {
        uplink_rate_bps: r_ul,
        downlink_rate_bps: r_dl,
        latency: (r_ul - required_rate) / required_rate,
        snr: if snr_th > 0.0 { (snr - snr_th) / snr_th } else { snr },
        downlink_rate: (r_dl - params.rate_th_bps) / params.rate_th_bps,
        bs_power: (params.pb_max_w - point.bs_power) / params.pb_max_w,
        uav_power: (params.pv_max_w - point.uav_power) / params.pv_max_w,
    }
}

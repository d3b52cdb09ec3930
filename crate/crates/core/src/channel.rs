//! Ground-truth air-to-ground channels.
//!
//! For antenna `k` the BS-to-UAV channel is
//! `h_k = G_B,v * G_r * g_bar * f_k` and the UAV-to-BS channel is
//! `h_k = G_t * G_r * g_bar * f_k`, where every factor is an amplitude
//! (dBi and dB values are converted with `10^(x/20)`) so that `|h|^2` carries
//! the power budget. `g_bar` is the aerial urban-macro path gain and `f_k` the
//! small-scale fading draw. The regression target of the estimators is the
//! distance-normalized coefficient `theta_k = h_k * D^2`.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{EnvMap, Position, Trajectory};
use crate::{Error, Result};

/// Maximum element gain of the BS pattern, dBi.
pub const BS_ELEMENT_MAX_GAIN_DBI: f64 = 8.0;
/// Half-power beamwidth in both planes, degrees.
pub const BS_HALF_POWER_BEAMWIDTH_DEG: f64 = 65.0;
/// Front-to-back ratio and vertical side-lobe limit, dB.
pub const BS_SIDE_LOBE_LIMIT_DB: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// BS to UAV: uplink control channel.
    BtU,
    /// UAV to BS: downlink payload channel.
    UtB,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::BtU => "BtU",
            Direction::UtB => "UtB",
        }
    }
}

/// Radio front-end and propagation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub carrier_ghz: f64,
    /// Number of BS antennas `K`.
    pub antennas: usize,
    /// UAV transmit gain, dBi.
    pub gt_dbi: f64,
    /// Receive gain, dBi.
    pub gr_dbi: f64,
    pub rician_db: f64,
    pub bs_pos: Position,
    /// Electrical downtilt of the BS boresight below the horizon, degrees.
    pub downtilt_deg: f64,
    /// Boresight azimuth measured from the +x axis, degrees.
    pub bs_azimuth_deg: f64,
    /// UAV heights are clamped into this range before entering the NLoS
    /// path-loss formula, metres.
    pub uav_height_range_m: (f64, f64),
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            carrier_ghz: 2.0,
            antennas: 8,
            gt_dbi: 1.0,
            gr_dbi: 1.0,
            rician_db: 15.0,
            bs_pos: Position::new(0.25, 0.375, 0.025),
            downtilt_deg: 0.0,
            // towards the centre of the 1 km region
            bs_azimuth_deg: 26.565_051_177_077_99,
            uav_height_range_m: (22.5, 300.0),
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::param("K", "need at least one antenna"));
        }
        if !(self.carrier_ghz > 0.0 && self.carrier_ghz.is_finite()) {
            return Err(Error::param("fc_ghz", "carrier frequency must be > 0"));
        }
        if !self.bs_pos.is_finite() || self.bs_pos.g < 0.0 {
            return Err(Error::param("bs_pos_km", "must be finite with g >= 0"));
        }
        let (lo, hi) = self.uav_height_range_m;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::param("uav_height_range_m", "need 0 < min <= max"));
        }
        if self.rician_db.is_nan() {
            return Err(Error::param("rician_db", "must be a number"));
        }
        Ok(())
    }
}

/// One direction's channel at one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub direction: Direction,
    pub slot: usize,
    pub h: Vec<Complex64>,
    pub theta: Vec<Complex64>,
    pub distance_m: f64,
    pub los: bool,
}

impl ChannelVector {
    /// Builds a vector from coefficients, recovering `h = theta / D^2`.
    pub fn from_theta(
        direction: Direction,
        slot: usize,
        theta: Vec<Complex64>,
        distance_m: f64,
        los: bool,
    ) -> Self {
        let d2 = distance_m * distance_m;
        let h = theta.iter().map(|th| th / d2).collect();
        ChannelVector {
            direction,
            slot,
            h,
            theta,
            distance_m,
            los,
        }
    }

    fn from_h(direction: Direction, slot: usize, h: Vec<Complex64>, distance_m: f64, los: bool) -> Self {
        let d2 = distance_m * distance_m;
        let theta = h.iter().map(|x| x * d2).collect();
        ChannelVector {
            direction,
            slot,
            h,
            theta,
            distance_m,
            los,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.iter().map(|x| x.norm_sqr()).sum()
    }

    /// `|sum_k h_k|^2`, the downlink gain seen by the all-ones combiner.
    pub fn coherent_gain(&self) -> f64 {
        self.h.iter().sum::<Complex64>().norm_sqr()
    }
}

/// Aerial urban-macro path loss, dB. `d3d_m` and `h_uav_m` in metres.
///
/// LoS: `28 + 22 log10(d) + 20 log10(fc)`;
/// NLoS: `-17.5 + (46 - 7 log10(h)) log10(d) + 20 log10(40 pi fc / 3)`.
pub fn path_loss_db(d3d_m: f64, h_uav_m: f64, los: bool, fc_ghz: f64) -> Result<f64> {
    if !(d3d_m > 0.0) || !(h_uav_m > 0.0) || !(fc_ghz > 0.0) {
        return Err(Error::Domain(format!(
            "path loss needs positive inputs (d={d3d_m}, h={h_uav_m}, fc={fc_ghz})"
        )));
    }
    Ok(if los {
        28.0 + 22.0 * d3d_m.log10() + 20.0 * fc_ghz.log10()
    } else {
        -17.5
            + (46.0 - 7.0 * h_uav_m.log10()) * d3d_m.log10()
            + 20.0 * (40.0 * std::f64::consts::PI * fc_ghz / 3.0).log10()
    })
}

/// Off-boresight angles of `uav` as seen from `bs`: (zenith offset, azimuth
/// offset), degrees. The azimuth offset is wrapped into `(-180, 180]`.
pub fn bs_offset_angles(bs: &Position, uav: &Position, cfg: &RadioConfig) -> (f64, f64) {
    let dx = uav.x - bs.x;
    let dy = uav.y - bs.y;
    let dz = uav.g - bs.g;
    let horizontal = dx.hypot(dy);
    let zenith = horizontal.atan2(dz).to_degrees();
    let boresight_zenith = 90.0 + cfg.downtilt_deg;
    let azimuth = if horizontal == 0.0 {
        0.0
    } else {
        let mut a = dy.atan2(dx).to_degrees() - cfg.bs_azimuth_deg;
        while a > 180.0 {
            a -= 360.0;
        }
        while a <= -180.0 {
            a += 360.0;
        }
        a
    };
    (zenith - boresight_zenith, azimuth)
}

/// Element gain of the BS antenna towards the UAV, dBi.
///
/// `G = G_max - min(-(A_V + A_H), A_m)` with
/// `A_V = -min(12 (dθ/θ_3dB)^2, SLA_V)` and `A_H = -min(12 (φ/φ_3dB)^2, A_m)`.
pub fn bs_element_gain_db(bs: &Position, uav: &Position, cfg: &RadioConfig) -> f64 {
    let (d_zenith, azimuth) = bs_offset_angles(bs, uav, cfg);
    element_gain_from_offsets(d_zenith, azimuth)
}

pub fn element_gain_from_offsets(d_zenith_deg: f64, azimuth_deg: f64) -> f64 {
    let hpbw = BS_HALF_POWER_BEAMWIDTH_DEG;
    let a_v = -(12.0 * (d_zenith_deg / hpbw).powi(2)).min(BS_SIDE_LOBE_LIMIT_DB);
    let a_h = -(12.0 * (azimuth_deg / hpbw).powi(2)).min(BS_SIDE_LOBE_LIMIT_DB);
    BS_ELEMENT_MAX_GAIN_DBI - (-(a_v + a_h)).min(BS_SIDE_LOBE_LIMIT_DB)
}

/// Unit-power small-scale fading draw: circularly-symmetric Gaussian for
/// NLoS, Rician with factor `rician_db` for LoS. `E|f|^2 = 1` in both cases.
pub fn sample_fading<R: Rng + ?Sized>(los: bool, rician_db: f64, rng: &mut R) -> Complex64 {
    let scatter = |rng: &mut R| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    };
    if !los {
        return scatter(rng);
    }
    if rician_db == f64::INFINITY {
        return Complex64::new(1.0, 0.0);
    }
    let kappa = 10f64.powf(rician_db / 10.0);
    let direct = (kappa / (kappa + 1.0)).sqrt();
    let diffuse = (1.0 / (kappa + 1.0)).sqrt();
    direct + scatter(rng) * diffuse
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Deterministic part of a channel: amplitude common to all antennas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeScale {
    pub amplitude: f64,
    pub distance_m: f64,
    pub los: bool,
    pub path_loss_db: f64,
    pub tx_gain_dbi: f64,
}

/// Gains and path loss for one direction at one UAV position.
pub fn large_scale(dir: Direction, uav: &Position, env: &EnvMap, cfg: &RadioConfig) -> Result<LargeScale> {
    let bs = cfg.bs_pos;
    let distance_m = bs.distance_m(uav);
    if !(distance_m > 0.0) {
        return Err(Error::Domain("UAV coincides with the BS".into()));
    }
    let los = env.is_los(&bs, uav);
    let (h_lo, h_hi) = cfg.uav_height_range_m;
    let h_uav = (1000.0 * uav.g).clamp(h_lo, h_hi);
    let pl = path_loss_db(distance_m, h_uav, los, cfg.carrier_ghz)?;
    let tx_gain_dbi = match dir {
        Direction::BtU => bs_element_gain_db(&bs, uav, cfg),
        Direction::UtB => cfg.gt_dbi,
    };
    let amplitude = db_to_amplitude(tx_gain_dbi) * db_to_amplitude(cfg.gr_dbi) * db_to_amplitude(-pl);
    Ok(LargeScale {
        amplitude,
        distance_m,
        los,
        path_loss_db: pl,
        tx_gain_dbi,
    })
}

/// Channel at a given UAV position. With `rng = None` the fading is fixed
/// to one, which yields the large-scale channel only.
pub fn synthesize<R: Rng + ?Sized>(
    slot: usize,
    dir: Direction,
    uav: &Position,
    env: &EnvMap,
    cfg: &RadioConfig,
    rng: Option<&mut R>,
) -> Result<ChannelVector> {
    let ls = large_scale(dir, uav, env, cfg)?;
    let h = match rng {
        Some(rng) => (0..cfg.antennas)
            .map(|_| sample_fading(ls.los, cfg.rician_db, rng) * ls.amplitude)
            .collect(),
        None => vec![Complex64::new(ls.amplitude, 0.0); cfg.antennas],
    };
    Ok(ChannelVector::from_h(dir, slot, h, ls.distance_m, ls.los))
}

/// Ground-truth channel at slot `t` of a trajectory, with fresh fading.
pub fn true_channel<R: Rng + ?Sized>(
    t: usize,
    dir: Direction,
    env: &EnvMap,
    traj: &Trajectory,
    cfg: &RadioConfig,
    rng: &mut R,
) -> Result<ChannelVector> {
    let uav = traj.position_at(t)?;
    synthesize(t, dir, &uav, env, cfg, Some(rng))
}

pub const TRACE_HEADER: &str = "t,dir,k,re_h,im_h,re_theta,im_theta,D_m,los";

/// Writes channel vectors as CSV rows, antenna index 1-based.
pub fn write_trace<W: Write>(mut out: W, channels: &[ChannelVector]) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for ch in channels {
        for (k, (h, th)) in ch.h.iter().zip(&ch.theta).enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                ch.slot,
                ch.direction.as_str(),
                k + 1,
                h.re,
                h.im,
                th.re,
                th.im,
                ch.distance_m,
                ch.los
            )?;
        }
    }
    Ok(())
}

//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is optional and
//! defaults to the reference scenario; unknown or repeated keys are errors.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::channel::RadioConfig;
use crate::env::{BuildingParams, Position, Trajectory, TrajectoryKind};
use crate::estimator::{TargetMode, TrainConfig};
use crate::link::LinkParams;
use crate::{Error, Result};

use super::seeds::SeedStreams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrajectorySelect {
    #[default]
    C2t,
    Vat,
}

impl TrajectorySelect {
    pub fn as_str(self) -> &'static str {
        match self {
            TrajectorySelect::C2t => "c2t",
            TrajectorySelect::Vat => "vat",
        }
    }
}

impl FromStr for TrajectorySelect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c2t" => Ok(TrajectorySelect::C2t),
            "vat" => Ok(TrajectorySelect::Vat),
            _ => Err(Error::param("traj", format!("expected c2t or vat, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub link: LinkParams,
    pub radio: RadioConfig,
    pub buildings: BuildingParams,
    pub train: TrainConfig,
    pub traj: TrajectorySelect,
    /// Slots per run, `T`.
    pub horizon: usize,
    pub c2t_center: Position,
    pub c2t_radius_km: f64,
    pub c2t_revolutions: f64,
    pub vat_start: Position,
    pub vat_end: Position,
    /// Pre-training positions are uniform over the region up to this altitude.
    pub pretrain_max_altitude_km: f64,
    /// Remove buildings whose footprint covers the BS site.
    pub clear_bs_site: bool,
    pub seed: u64,
    pub seed_env: Option<u64>,
    pub seed_fading: Option<u64>,
    pub seed_init: Option<u64>,
    pub seed_minibatch: Option<u64>,
    pub seed_pretrain: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            link: LinkParams::default(),
            radio: RadioConfig::default(),
            buildings: BuildingParams::default(),
            train: TrainConfig::default(),
            traj: TrajectorySelect::C2t,
            horizon: 100,
            c2t_center: Position::new(0.5, 0.5, 0.05),
            c2t_radius_km: 0.375,
            c2t_revolutions: 1.0,
            vat_start: Position::new(0.5, 0.5, 0.0),
            vat_end: Position::new(0.5, 0.5, 0.35),
            pretrain_max_altitude_km: 0.35,
            clear_bs_site: true,
            seed: 1,
            seed_env: None,
            seed_fading: None,
            seed_init: None,
            seed_minibatch: None,
            seed_pretrain: None,
        }
    }
}

impl RunConfig {
    pub fn trajectory(&self) -> Trajectory {
        let kind = match self.traj {
            TrajectorySelect::C2t => TrajectoryKind::Circular {
                center: self.c2t_center,
                radius_km: self.c2t_radius_km,
                revolutions: self.c2t_revolutions,
            },
            TrajectorySelect::Vat => TrajectoryKind::VerticalAscent {
                start: self.vat_start,
                end: self.vat_end,
            },
        };
        Trajectory {
            kind,
            horizon: self.horizon,
        }
    }

    /// Streams derived from `seed`, with per-stream overrides applied.
    pub fn seeds(&self) -> SeedStreams {
        let base = SeedStreams::from_root(self.seed);
        SeedStreams {
            env: self.seed_env.unwrap_or(base.env),
            fading: self.seed_fading.unwrap_or(base.fading),
            init: self.seed_init.unwrap_or(base.init),
            minibatch: self.seed_minibatch.unwrap_or(base.minibatch),
            pretrain: self.seed_pretrain.unwrap_or(base.pretrain),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        self.radio.validate()?;
        self.buildings.validate()?;
        self.train.validate()?;
        self.trajectory().validate()?;
        let side = self.buildings.area_side;
        let inside = |p: &Position| p.x >= 0.0 && p.y >= 0.0 && p.x <= side && p.y <= side;
        if !inside(&self.radio.bs_pos) {
            return Err(Error::param("bs_x_km", "BS must lie inside the region"));
        }
        if !(self.pretrain_max_altitude_km >= 0.0 && self.pretrain_max_altitude_km.is_finite()) {
            return Err(Error::param("pretrain_max_altitude_km", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `key = value`, got `{line}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            cfg.set(key, value).map_err(|msg| Error::Parse { line: line_no, msg })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("`{key}`: cannot parse `{v}`"))
        }
        fn float(key: &str, v: &str) -> std::result::Result<f64, String> {
            let x: f64 = num(key, v)?;
            if x.is_nan() {
                return Err(format!("`{key}`: NaN is not allowed"));
            }
            Ok(x)
        }
        fn boolean(key: &str, v: &str) -> std::result::Result<bool, String> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(format!("`{key}`: expected a boolean, got `{v}`")),
            }
        }
        let v = value;
        match key {
            "W_hz" => self.link.bandwidth_hz = float(key, v)?,
            "N0_dbm_hz" => self.link.noise_dbm_hz = float(key, v)?,
            "Fu_bits" => self.link.packet_bits = float(key, v)?,
            "Du_s" => self.link.latency_s = float(key, v)?,
            "eps" => self.link.epsilon = float(key, v)?,
            "snr_th_db" => self.link.snr_th_db = float(key, v)?,
            "Re_th_bps" => self.link.rate_th_bps = float(key, v)?,
            "pB_max_w" => self.link.pb_max_w = float(key, v)?,
            "pv_max_w" => self.link.pv_max_w = float(key, v)?,
            "Tf_s" => self.link.frame_s = float(key, v)?,
            "eta" => self.link.eta = float(key, v)?,

            "K" => self.radio.antennas = num(key, v)?,
            "Gt_dbi" => self.radio.gt_dbi = float(key, v)?,
            "Gr_dbi" => self.radio.gr_dbi = float(key, v)?,
            "fc_ghz" => self.radio.carrier_ghz = float(key, v)?,
            "rician_db" => self.radio.rician_db = float(key, v)?,
            "bs_x_km" => self.radio.bs_pos.x = float(key, v)?,
            "bs_y_km" => self.radio.bs_pos.y = float(key, v)?,
            "bs_g_km" => self.radio.bs_pos.g = float(key, v)?,
            "downtilt_deg" => self.radio.downtilt_deg = float(key, v)?,
            "bs_azimuth_deg" => self.radio.bs_azimuth_deg = float(key, v)?,
            "uav_h_min_m" => self.radio.uav_height_range_m.0 = float(key, v)?,
            "uav_h_max_m" => self.radio.uav_height_range_m.1 = float(key, v)?,

            "alpha" => self.buildings.alpha = float(key, v)?,
            "beta_per_km2" => self.buildings.beta = float(key, v)?,
            "sigma_m" => self.buildings.sigma = float(key, v)?,
            "height_clip_m" => self.buildings.height_clip = float(key, v)?,
            "area_side_km" => self.buildings.area_side = float(key, v)?,
            "clear_bs_site" => self.clear_bs_site = boolean(key, v)?,

            "traj" => self.traj = v.parse().map_err(|e: Error| e.to_string())?,
            "T" => self.horizon = num(key, v)?,
            "c2t_center_x_km" => self.c2t_center.x = float(key, v)?,
            "c2t_center_y_km" => self.c2t_center.y = float(key, v)?,
            "c2t_altitude_km" => self.c2t_center.g = float(key, v)?,
            "c2t_radius_km" => self.c2t_radius_km = float(key, v)?,
            "revolutions" => self.c2t_revolutions = float(key, v)?,
            "vat_start_x_km" => self.vat_start.x = float(key, v)?,
            "vat_start_y_km" => self.vat_start.y = float(key, v)?,
            "vat_start_g_km" => self.vat_start.g = float(key, v)?,
            "vat_end_x_km" => self.vat_end.x = float(key, v)?,
            "vat_end_y_km" => self.vat_end.y = float(key, v)?,
            "vat_end_g_km" => self.vat_end.g = float(key, v)?,

            "minibatch" => self.train.minibatch = num(key, v)?,
            "train_interval" => self.train.train_interval = num(key, v)?,
            "replay_capacity" => self.train.capacity = num(key, v)?,
            "hidden" => {
                self.train.hidden = v
                    .split(',')
                    .map(|w| num::<usize>(key, w.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "learning_rate" => self.train.adam.learning_rate = float(key, v)?,
            "adam_beta1" => self.train.adam.beta1 = float(key, v)?,
            "adam_beta2" => self.train.adam.beta2 = float(key, v)?,
            "adam_eps" => self.train.adam.epsilon = float(key, v)?,
            "pretrain_episodes" => self.train.pretrain_episodes = num(key, v)?,
            "mape_window" => self.train.mape_window = num(key, v)?,
            "target_mode" => self.train.target_mode = v.parse().map_err(|e: Error| e.to_string())?,
            "pretrain_max_altitude_km" => self.pretrain_max_altitude_km = float(key, v)?,

            "seed" => self.seed = num(key, v)?,
            "seed_env" => self.seed_env = Some(num(key, v)?),
            "seed_fading" => self.seed_fading = Some(num(key, v)?),
            "seed_init" => self.seed_init = Some(num(key, v)?),
            "seed_minibatch" => self.seed_minibatch = Some(num(key, v)?),
            "seed_pretrain" => self.seed_pretrain = Some(num(key, v)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Writes every key; the output parses back to an equal config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        let l = &self.link;
        put("W_hz", l.bandwidth_hz.to_string());
        put("N0_dbm_hz", l.noise_dbm_hz.to_string());
        put("Fu_bits", l.packet_bits.to_string());
        put("Du_s", l.latency_s.to_string());
        put("eps", l.epsilon.to_string());
        put("snr_th_db", l.snr_th_db.to_string());
        put("Re_th_bps", l.rate_th_bps.to_string());
        put("pB_max_w", l.pb_max_w.to_string());
        put("pv_max_w", l.pv_max_w.to_string());
        put("Tf_s", l.frame_s.to_string());
        put("eta", l.eta.to_string());
        let r = &self.radio;
        put("K", r.antennas.to_string());
        put("Gt_dbi", r.gt_dbi.to_string());
        put("Gr_dbi", r.gr_dbi.to_string());
        put("fc_ghz", r.carrier_ghz.to_string());
        put("rician_db", r.rician_db.to_string());
        put("bs_x_km", r.bs_pos.x.to_string());
        put("bs_y_km", r.bs_pos.y.to_string());
        put("bs_g_km", r.bs_pos.g.to_string());
        put("downtilt_deg", r.downtilt_deg.to_string());
        put("bs_azimuth_deg", r.bs_azimuth_deg.to_string());
        put("uav_h_min_m", r.uav_height_range_m.0.to_string());
        put("uav_h_max_m", r.uav_height_range_m.1.to_string());
        let b = &self.buildings;
        put("alpha", b.alpha.to_string());
        put("beta_per_km2", b.beta.to_string());
        put("sigma_m", b.sigma.to_string());
        put("height_clip_m", b.height_clip.to_string());
        put("area_side_km", b.area_side.to_string());
        put("clear_bs_site", self.clear_bs_site.to_string());
        put("traj", self.traj.as_str().to_string());
        put("T", self.horizon.to_string());
        put("c2t_center_x_km", self.c2t_center.x.to_string());
        put("c2t_center_y_km", self.c2t_center.y.to_string());
        put("c2t_altitude_km", self.c2t_center.g.to_string());
        put("c2t_radius_km", self.c2t_radius_km.to_string());
        put("revolutions", self.c2t_revolutions.to_string());
        put("vat_start_x_km", self.vat_start.x.to_string());
        put("vat_start_y_km", self.vat_start.y.to_string());
        put("vat_start_g_km", self.vat_start.g.to_string());
        put("vat_end_x_km", self.vat_end.x.to_string());
        put("vat_end_y_km", self.vat_end.y.to_string());
        put("vat_end_g_km", self.vat_end.g.to_string());
        let t = &self.train;
        put("minibatch", t.minibatch.to_string());
        put("train_interval", t.train_interval.to_string());
        put("replay_capacity", t.capacity.to_string());
        put("hidden", t.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","));
        put("learning_rate", t.adam.learning_rate.to_string());
        put("adam_beta1", t.adam.beta1.to_string());
        put("adam_beta2", t.adam.beta2.to_string());
        put("adam_eps", t.adam.epsilon.to_string());
        put("pretrain_episodes", t.pretrain_episodes.to_string());
        put("mape_window", t.mape_window.to_string());
        let mode = match t.target_mode {
            TargetMode::LargeScale => "large_scale",
            TargetMode::Full => "full",
        };
        put("target_mode", mode.to_string());
        put("pretrain_max_altitude_km", self.pretrain_max_altitude_km.to_string());
        put("seed", self.seed.to_string());
        let opt = [
            ("seed_env", self.seed_env),
            ("seed_fading", self.seed_fading),
            ("seed_init", self.seed_init),
            ("seed_minibatch", self.seed_minibatch),
            ("seed_pretrain", self.seed_pretrain),
        ];
        for (k, v) in opt {
            if let Some(v) = v {
                put(k, v.to_string());
            }
        }
        s
    }
}

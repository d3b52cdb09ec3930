//! Environment setup, pre-training and the closed slot loop.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{synthesize, ChannelVector, Direction};
use crate::env::{generate_env, EnvMap, Position};
use crate::estimator::{ChannelEstimator, TargetMode};
use crate::link::{check_feasible, downlink_rate, uplink_rate, OperatingPoint};
use crate::solver::{build_problem, energy_utility, solve, SolveStatus};
use crate::Result;

use super::config::RunConfig;
use super::records::SlotRecord;
use super::seeds::derive_seed;

/// Tolerance of the true-channel feasibility check, relative slack.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Building map of the run, with the BS site cleared if configured.
pub fn prepare_env(cfg: &RunConfig) -> Result<EnvMap> {
    let mut env = generate_env(&cfg.buildings, cfg.seeds().env)?;
    if cfg.clear_bs_site {
        let removed = env.clear_site(&cfg.radio.bs_pos);
        if removed > 0 {
            log::info!("removed {removed} building(s) covering the BS site");
        }
    }
    Ok(env)
}

pub fn new_estimator(cfg: &RunConfig) -> Result<ChannelEstimator> {
    let seeds = cfg.seeds();
    ChannelEstimator::new(
        cfg.train.clone(),
        cfg.radio.antennas,
        cfg.buildings.area_side,
        cfg.radio.bs_pos,
        seeds.init,
        seeds.minibatch,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub mape_ul: Option<f64>,
    pub mape_dl: Option<f64>,
}

fn large_scale_targets(
    cfg: &RunConfig,
    env: &EnvMap,
    slot: usize,
    uav: &Position,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let ul = synthesize::<ChaCha8Rng>(slot, Direction::BtU, uav, env, &cfg.radio, None)?;
    let dl = synthesize::<ChaCha8Rng>(slot, Direction::UtB, uav, env, &cfg.radio, None)?;
    Ok((ul.theta, dl.theta))
}

/// Training targets at `uav`: the large-scale coefficients, or faded ones
/// drawn from `rng` in full mode.
fn targets<R: Rng + ?Sized>(
    cfg: &RunConfig,
    env: &EnvMap,
    slot: usize,
    uav: &Position,
    rng: &mut R,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    match cfg.train.target_mode {
        TargetMode::LargeScale => large_scale_targets(cfg, env, slot, uav),
        TargetMode::Full => {
            let ul = synthesize(slot, Direction::BtU, uav, env, &cfg.radio, Some(&mut *rng))?;
            let dl = synthesize(slot, Direction::UtB, uav, env, &cfg.radio, Some(&mut *rng))?;
            Ok((ul.theta, dl.theta))
        }
    }
}

/// Trains `est` for `cfg.train.pretrain_episodes` episodes at random
/// positions, uniform over the region up to the configured altitude.
pub fn pretrain_into(cfg: &RunConfig, env: &EnvMap, est: &mut ChannelEstimator) -> Result<Vec<EpisodeLog>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seeds().pretrain);
    let side = cfg.buildings.area_side;
    let mut log = Vec::with_capacity(cfg.train.pretrain_episodes);
    for episode in 1..=cfg.train.pretrain_episodes {
        let uav = Position::new(
            rng.random_range(0.0..=side),
            rng.random_range(0.0..=side),
            rng.random_range(0.0..=cfg.pretrain_max_altitude_km),
        );
        let (ul, dl) = targets(cfg, env, 0, &uav, &mut rng)?;
        est.observe(&uav, &ul, &dl)?;
        log.push(EpisodeLog {
            episode,
            mape_ul: est.mean_mape(Direction::BtU),
            mape_dl: est.mean_mape(Direction::UtB),
        });
    }
    Ok(log)
}

pub fn pretrain(cfg: &RunConfig, env: &EnvMap) -> Result<(ChannelEstimator, Vec<EpisodeLog>)> {
    let mut est = new_estimator(cfg)?;
    let log = pretrain_into(cfg, env, &mut est)?;
    Ok((est, log))
}

/// Channels fed to the solver.
pub enum Estimation<'a> {
    /// Solve on the true channels; no networks involved.
    Exact,
    /// Solve on network estimates, then train online on the slot's targets.
    Learned(&'a mut ChannelEstimator),
}

/// Per-slot details kept outside the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDiagnostics {
    pub t: usize,
    pub position: Position,
    pub los: bool,
    pub status: Option<SolveStatus>,
    /// Smallest relative slack on the channels the solver saw.
    pub solver_slack: Option<f64>,
    /// Latency slack with exact dispersion on the solver's channels.
    pub solver_latency_slack: Option<f64>,
    /// Smallest relative slack on the true channels.
    pub true_slack: Option<f64>,
    pub iterations: Option<usize>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<SlotRecord>,
    pub diagnostics: Vec<SlotDiagnostics>,
}

/// The slot loop over the configured trajectory.
pub fn run(cfg: &RunConfig, env: &EnvMap, mut estimation: Estimation<'_>) -> Result<RunOutput> {
    cfg.validate()?;
    let traj = cfg.trajectory();
    let fading_seed = cfg.seeds().fading;
    let params = cfg.link;
    let mut records = Vec::with_capacity(traj.horizon);
    let mut diagnostics = Vec::with_capacity(traj.horizon);

    for t in 1..=traj.horizon {
        let uav = traj.position_at(t)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(fading_seed, t as u64));
        let true_ul = synthesize(t, Direction::BtU, &uav, env, &cfg.radio, Some(&mut rng))?;
        let true_dl = synthesize(t, Direction::UtB, &uav, env, &cfg.radio, Some(&mut rng))?;

        let (ul, dl) = match &estimation {
            Estimation::Exact => (true_ul.clone(), true_dl.clone()),
            Estimation::Learned(est) => {
                let th_ul = est.estimate(Direction::BtU, &uav)?;
                let th_dl = est.estimate(Direction::UtB, &uav)?;
                (
                    ChannelVector::from_theta(Direction::BtU, t, th_ul, true_ul.distance_m, true_ul.los),
                    ChannelVector::from_theta(Direction::UtB, t, th_dl, true_dl.distance_m, true_dl.los),
                )
            }
        };

        let solved = build_problem(&ul, &dl, &params).and_then(|problem| solve(&problem).map(|sol| (problem, sol)));
        let mut record = SlotRecord {
            t,
            tr_V_w: None,
            p_w: None,
            R_dl_bps: None,
            R_ul_bps: None,
            E_eu: None,
            mape_ul: None,
            mape_dl: None,
            feasible: false,
            tightness: None,
        };
        let mut diag = SlotDiagnostics {
            t,
            position: uav,
            los: true_ul.los,
            status: None,
            solver_slack: None,
            solver_latency_slack: None,
            true_slack: None,
            iterations: None,
            gap: None,
        };
        match solved {
            Ok((problem, sol)) => {
                let seen = sol.check(&problem);
                let v = &sol.beamformer;
                let hv: Complex64 = true_ul.h.iter().zip(v).map(|(h, v)| h.conj() * v).sum();
                let g_true = true_dl.coherent_gain();
                let point = OperatingPoint {
                    uplink_trace: hv.norm_sqr(),
                    bs_power: v.iter().map(|z| z.norm_sqr()).sum(),
                    uav_power: sol.p,
                    downlink_gain: g_true,
                };
                let actual = check_feasible(&point, &params);
                let r_max_true = downlink_rate(params.pv_max_w, g_true, &params);
                let tr_v = sol.trace_v();
                record.tr_V_w = Some(tr_v);
                record.p_w = Some(sol.p);
                record.R_dl_bps = Some(downlink_rate(sol.p, g_true, &params));
                record.R_ul_bps = Some(uplink_rate(point.uplink_trace, params.latency_s, &params));
                record.E_eu = Some(energy_utility(sol.p, tr_v, g_true, r_max_true, &params));
                record.tightness = Some(sol.tightness);
                record.feasible = actual.is_feasible(FEASIBILITY_TOL);
                diag.status = Some(sol.status);
                diag.solver_slack = Some(seen.min_slack());
                diag.solver_latency_slack = Some(seen.latency);
                diag.true_slack = Some(actual.min_slack());
                diag.iterations = Some(sol.iterations);
                diag.gap = Some(sol.gap);
            }
            Err(e) => match SolveStatus::from_error(&e) {
                Some(status) => {
                    log::warn!("slot {t}: {e}");
                    diag.status = Some(status);
                }
                None => return Err(e),
            },
        }

        if let Estimation::Learned(est) = &mut estimation {
            let (th_ul, th_dl) = match cfg.train.target_mode {
                TargetMode::LargeScale => large_scale_targets(cfg, env, t, &uav)?,
                TargetMode::Full => (true_ul.theta.clone(), true_dl.theta.clone()),
            };
            est.observe(&uav, &th_ul, &th_dl)?;
            record.mape_ul = est.mean_mape(Direction::BtU);
            record.mape_dl = est.mean_mape(Direction::UtB);
        }
        records.push(record);
        diagnostics.push(diag);
    }
    Ok(RunOutput { records, diagnostics })
}

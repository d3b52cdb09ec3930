//! Per-antenna channel coefficient regressors.
//!
//! One network per antenna and direction maps normalized positions plus the
//! antenna index to `(Re theta, Im theta)`. Each network owns a replay
//! buffer and is trained on minibatches drawn from it.

pub mod mlp;
pub mod replay;

use std::collections::VecDeque;
use std::str::FromStr;

use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::Direction;
use crate::env::Position;
use crate::harness::seeds::derive_seed;
use crate::{Error, Result};

pub use mlp::{xavier_bound, xavier_init, AdamConfig, Dense, Gradients, Mlp, OUTPUT_DIM};
pub use replay::{ReplayBuffer, Transition};

const CHECKPOINT_FORMAT: &str = "uavpc-estimator";
const CHECKPOINT_VERSION: u32 = 1;

/// What the networks regress on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Coefficients without small-scale fading.
    #[default]
    LargeScale,
    /// Coefficients including the fading draw of the slot.
    Full,
}

impl FromStr for TargetMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "large_scale" => Ok(TargetMode::LargeScale),
            "full" => Ok(TargetMode::Full),
            _ => Err(Error::param("target_mode", format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub minibatch: usize,
    /// Train every `train_interval` recorded transitions.
    pub train_interval: usize,
    pub capacity: usize,
    pub hidden: Vec<usize>,
    pub adam: AdamConfig,
    pub pretrain_episodes: usize,
    /// Number of recent train steps averaged into the reported MAPE.
    pub mape_window: usize,
    pub target_mode: TargetMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            minibatch: 64,
            train_interval: 1,
            capacity: 10_000,
            hidden: vec![64, 64],
            adam: AdamConfig::default(),
            pretrain_episodes: 500,
            mape_window: 20,
            target_mode: TargetMode::LargeScale,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.minibatch == 0 {
            return Err(Error::param("minibatch", "must be positive"));
        }
        if self.train_interval == 0 {
            return Err(Error::param("train_interval", "must be positive"));
        }
        if self.capacity < self.minibatch {
            return Err(Error::param("capacity", "must hold at least one minibatch"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::param("hidden", "needs at least one positive width"));
        }
        if self.mape_window == 0 {
            return Err(Error::param("mape_window", "must be positive"));
        }
        let a = self.adam;
        if !(a.learning_rate > 0.0 && a.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if !((0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2) && a.epsilon > 0.0) {
            return Err(Error::param("adam", "betas must lie in [0, 1) and epsilon be positive"));
        }
        Ok(())
    }
}

pub fn input_dim(antennas: usize) -> usize {
    6 + antennas
}

/// Unnormalized input: both positions in km, then `k` repeated `antennas`
/// times. BtU puts the UAV first, UtB the BS.
pub fn build_input_raw(dir: Direction, x_v: &Position, x_b: &Position, k: usize, antennas: usize) -> Result<Vec<f64>> {
    if k == 0 || k > antennas {
        return Err(Error::OutOfRange { index: k, max: antennas });
    }
    let (first, second) = match dir {
        Direction::BtU => (x_v, x_b),
        Direction::UtB => (x_b, x_v),
    };
    let mut v = Vec::with_capacity(input_dim(antennas));
    v.extend_from_slice(&first.to_array());
    v.extend_from_slice(&second.to_array());
    v.extend(std::iter::repeat_n(k as f64, antennas));
    Ok(v)
}

/// Network input: coordinates divided by the region side, index by `antennas`.
pub fn build_input(
    dir: Direction,
    x_v: &Position,
    x_b: &Position,
    k: usize,
    antennas: usize,
    region_km: f64,
) -> Result<Vec<f64>> {
    let mut v = build_input_raw(dir, x_v, x_b, k, antennas)?;
    let (coords, index) = v.split_at_mut(6);
    coords.iter_mut().for_each(|c| *c /= region_km);
    index.iter_mut().for_each(|c| *c /= antennas as f64);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapeStats {
    pub value: f64,
    /// Pairs skipped because the target magnitude was zero.
    pub excluded: usize,
}

/// Mean of `|est - target| / |target|` over pairs with a nonzero target.
pub fn mape(estimates: &[Complex64], targets: &[Complex64]) -> Result<MapeStats> {
    if estimates.len() != targets.len() {
        return Err(Error::Shape {
            expected: targets.len(),
            got: estimates.len(),
        });
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for (e, t) in estimates.iter().zip(targets) {
        let denom = t.norm();
        if denom > 0.0 {
            sum += (e - t).norm() / denom;
            used += 1;
        }
    }
    let excluded = targets.len() - used;
    if excluded > 0 {
        log::warn!("mape: {excluded} zero-magnitude targets excluded");
    }
    if used == 0 {
        return Err(Error::Domain("mape needs at least one nonzero target".into()));
    }
    Ok(MapeStats {
        value: sum / used as f64,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStats {
    /// Minibatch loss before the update.
    pub loss: f64,
    /// Minibatch MAPE before the update; `None` if every target was zero.
    pub mape: Option<f64>,
}

/// One Adam step on a uniformly sampled minibatch. Returns `Ok(None)` when
/// the buffer holds fewer than `minibatch` transitions.
pub fn train_step<R: rand::Rng + ?Sized>(
    net: &mut Mlp,
    buffer: &ReplayBuffer,
    minibatch: usize,
    rng: &mut R,
) -> Result<Option<TrainStats>> {
    let Some(idx) = buffer.sample_indices(minibatch, rng) else {
        return Ok(None);
    };
    let batch: Vec<(&[f64], [f64; 2])> = idx
        .iter()
        .filter_map(|&i| buffer.get(i))
        .map(|t| (t.input.as_slice(), t.target))
        .collect();
    let mut est = Vec::with_capacity(batch.len());
    let mut tgt = Vec::with_capacity(batch.len());
    for (x, t) in &batch {
        let o = net.forward(x)?;
        est.push(Complex64::new(o[0], o[1]));
        tgt.push(Complex64::new(t[0], t[1]));
    }
    let (loss, grads) = net.loss_and_grad(&batch)?;
    net.adam_step(&grads)?;
    Ok(Some(TrainStats {
        loss,
        mape: mape(&est, &tgt).ok().map(|m| m.value),
    }))
}

/// A network with its replay buffer and bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorUnit {
    pub direction: Direction,
    /// 1-based antenna index.
    pub k: usize,
    pub net: Mlp,
    pub buffer: ReplayBuffer,
    /// Transitions recorded so far.
    pub episodes: u64,
    pub train_steps: u64,
    pub recent_mape: VecDeque<f64>,
}

impl EstimatorUnit {
    pub fn new(direction: Direction, k: usize, antennas: usize, cfg: &TrainConfig, init_seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(init_seed);
        Ok(EstimatorUnit {
            direction,
            k,
            net: Mlp::new(input_dim(antennas), &cfg.hidden, cfg.adam, &mut rng)?,
            buffer: ReplayBuffer::new(cfg.capacity)?,
            episodes: 0,
            train_steps: 0,
            recent_mape: VecDeque::new(),
        })
    }

    /// Stores the transition and trains when the episode counter is a
    /// multiple of the training interval and a full minibatch is available.
    pub fn record_and_maybe_train(
        &mut self,
        transition: Transition,
        cfg: &TrainConfig,
        minibatch_seed: u64,
    ) -> Result<Option<TrainStats>> {
        self.buffer.push(transition);
        self.episodes += 1;
        if !self.episodes.is_multiple_of(cfg.train_interval as u64) {
            return Ok(None);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(minibatch_seed, self.train_steps));
        let stats = train_step(&mut self.net, &self.buffer, cfg.minibatch, &mut rng)?;
        if let Some(s) = stats {
            self.train_steps += 1;
            if let Some(m) = s.mape {
                self.recent_mape.push_back(m);
                while self.recent_mape.len() > cfg.mape_window {
                    self.recent_mape.pop_front();
                }
            }
        }
        Ok(stats)
    }

    pub fn windowed_mape(&self) -> Option<f64> {
        if self.recent_mape.is_empty() {
            return None;
        }
        Some(self.recent_mape.iter().sum::<f64>() / self.recent_mape.len() as f64)
    }
}

/// The full bank: `K` BtU units followed by `K` UtB units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimator {
    format: String,
    version: u32,
    pub config: TrainConfig,
    pub antennas: usize,
    pub region_km: f64,
    pub bs_pos: Position,
    pub minibatch_seed: u64,
    pub units: Vec<EstimatorUnit>,
}

fn direction_index(dir: Direction) -> usize {
    match dir {
        Direction::BtU => 0,
        Direction::UtB => 1,
    }
}

impl ChannelEstimator {
    pub fn new(
        config: TrainConfig,
        antennas: usize,
        region_km: f64,
        bs_pos: Position,
        init_seed: u64,
        minibatch_seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if antennas == 0 {
            return Err(Error::param("K", "must be at least 1"));
        }
        if !(region_km > 0.0 && region_km.is_finite()) {
            return Err(Error::param("area_side", "must be positive"));
        }
        let mut units = Vec::with_capacity(2 * antennas);
        for dir in [Direction::BtU, Direction::UtB] {
            for k in 1..=antennas {
                let idx = units.len() as u64;
                units.push(EstimatorUnit::new(dir, k, antennas, &config, derive_seed(init_seed, idx))?);
            }
        }
        Ok(ChannelEstimator {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config,
            antennas,
            region_km,
            bs_pos,
            minibatch_seed,
            units,
        })
    }

    pub fn unit(&self, dir: Direction, k: usize) -> Result<&EstimatorUnit> {
        if k == 0 || k > self.antennas {
            return Err(Error::OutOfRange {
                index: k,
                max: self.antennas,
            });
        }
        Ok(&self.units[direction_index(dir) * self.antennas + k - 1])
    }

    pub fn units_for(&self, dir: Direction) -> &[EstimatorUnit] {
        let start = direction_index(dir) * self.antennas;
        &self.units[start..start + self.antennas]
    }

    pub fn input(&self, dir: Direction, x_v: &Position, k: usize) -> Result<Vec<f64>> {
        build_input(dir, x_v, &self.bs_pos, k, self.antennas, self.region_km)
    }

    /// Estimated coefficients for all antennas in one direction.
    pub fn estimate(&self, dir: Direction, x_v: &Position) -> Result<Vec<Complex64>> {
        self.units_for(dir)
            .iter()
            .map(|u| {
                let o = u.net.forward(&self.input(dir, x_v, u.k)?)?;
                Ok(Complex64::new(o[0], o[1]))
            })
            .collect()
    }

    /// Records target coefficients at `x_v` for every unit and trains the
    /// units whose schedule fires. Units are independent, so they run in
    /// parallel; the result does not depend on thread count.
    pub fn observe(&mut self, x_v: &Position, theta_ul: &[Complex64], theta_dl: &[Complex64]) -> Result<()> {
        for theta in [theta_ul, theta_dl] {
            if theta.len() != self.antennas {
                return Err(Error::Shape {
                    expected: self.antennas,
                    got: theta.len(),
                });
            }
        }
        let mut jobs = Vec::with_capacity(self.units.len());
        for (i, u) in self.units.iter().enumerate() {
            let theta = match u.direction {
                Direction::BtU => theta_ul[u.k - 1],
                Direction::UtB => theta_dl[u.k - 1],
            };
            let input = self.input(u.direction, x_v, u.k)?;
            jobs.push((i, Transition {
                input,
                target: [theta.re, theta.im],
            }));
        }
        let cfg = &self.config;
        let seed = self.minibatch_seed;
        self.units
            .par_iter_mut()
            .zip(jobs.into_par_iter())
            .try_for_each(|(u, (i, t))| {
                u.record_and_maybe_train(t, cfg, derive_seed(seed, i as u64)).map(|_| ())
            })
    }

    /// Mean of the windowed MAPE over the units of one direction that have
    /// trained at least once.
    pub fn mean_mape(&self, dir: Direction) -> Option<f64> {
        let vals: Vec<f64> = self.units_for(dir).iter().filter_map(|u| u.windowed_mape()).collect();
        if vals.is_empty() {
            return None;
        }
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::param("format", "not a supported estimator checkpoint"));
        }
        self.config.validate()?;
        if self.antennas == 0 || self.units.len() != 2 * self.antennas {
            return Err(Error::Shape {
                expected: 2 * self.antennas,
                got: self.units.len(),
            });
        }
        if !(self.region_km > 0.0 && self.region_km.is_finite()) || !self.bs_pos.is_finite() {
            return Err(Error::param("geometry", "region and BS position must be finite"));
        }
        let dim = input_dim(self.antennas);
        for (i, u) in self.units.iter().enumerate() {
            let dir = if i < self.antennas { Direction::BtU } else { Direction::UtB };
            if u.direction != dir || u.k != i % self.antennas + 1 {
                return Err(Error::param("units", format!("unit {i} out of order")));
            }
            u.net.validate()?;
            if u.net.input_dim() != dim {
                return Err(Error::Shape {
                    expected: dim,
                    got: u.net.input_dim(),
                });
            }
            u.buffer.validate(dim)?;
            if u.recent_mape.len() > self.config.mape_window {
                return Err(Error::param("recent_mape", "longer than the window"));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let est: ChannelEstimator = serde_json::from_str(text)?;
        est.validate()?;
        Ok(est)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn input_length_and_index_block() {
        let xv = Position::new(0.1, 0.2, 0.3);
        let xb = Position::new(0.4, 0.5, 0.6);
        assert_eq!(build_input_raw(Direction::BtU, &xv, &xb, 1, 8).unwrap().len(), 14);
        let v = build_input_raw(Direction::BtU, &xv, &xb, 3, 4).unwrap();
        assert_eq!(&v[6..], &[3.0; 4]);
        let n = build_input(Direction::BtU, &xv, &xb, 3, 4, 2.0).unwrap();
        assert_eq!(&n[6..], &[0.75; 4]);
        assert_eq!(n[0], 0.05);
    }

    #[test]
    fn input_directions_swap_position_blocks() {
        let xv = Position::new(0.1, 0.2, 0.3);
        let xb = Position::new(0.4, 0.5, 0.6);
        let ul = build_input_raw(Direction::BtU, &xv, &xb, 2, 2).unwrap();
        let dl = build_input_raw(Direction::UtB, &xv, &xb, 2, 2).unwrap();
        assert_eq!(ul[..3], dl[3..6]);
        assert_eq!(ul[3..6], dl[..3]);
        assert_eq!(ul[6..], dl[6..]);
    }

    #[test]
    fn input_index_out_of_range() {
        let p = Position::new(0.0, 0.0, 0.0);
        assert!(matches!(
            build_input_raw(Direction::BtU, &p, &p, 0, 4),
            Err(Error::OutOfRange { index: 0, max: 4 })
        ));
        assert!(build_input_raw(Direction::UtB, &p, &p, 5, 4).is_err());
    }

    #[test]
    fn mape_values() {
        let c = |x: f64| Complex64::new(x, 0.0);
        assert_eq!(mape(&[c(1.0), c(2.0)], &[c(1.0), c(2.0)]).unwrap().value, 0.0);
        let m = mape(&[c(1.2)], &[c(1.0)]).unwrap();
        assert!((m.value - 0.2).abs() < 1e-15);
        let m = mape(&[c(1.2), c(5.0)], &[c(1.0), c(0.0)]).unwrap();
        assert_eq!(m.excluded, 1);
        assert!((m.value - 0.2).abs() < 1e-15);
        assert!(mape(&[c(1.0)], &[c(0.0)]).is_err());
        assert!(mape(&[c(1.0)], &[]).is_err());
        // complex modulus
        let m = mape(&[Complex64::new(0.0, 1.0)], &[c(1.0)]).unwrap();
        assert!((m.value - 2f64.sqrt()).abs() < 1e-15);
    }

    fn linear_buffer(n: usize, seed: u64) -> ReplayBuffer {
        let mut r = rng(seed);
        let mut b = ReplayBuffer::new(n).unwrap();
        for _ in 0..n {
            let x: Vec<f64> = (0..3).map(|_| r.random_range(0.0..1.0)).collect();
            let target = [x[0] + 0.5 * x[1] + 0.2, 0.3 - 0.4 * x[2]];
            b.push(Transition { input: x, target });
        }
        b
    }

    #[test]
    fn exact_net_has_zero_loss_and_is_unchanged() {
        let mut net = Mlp::new(3, &[4], AdamConfig::default(), &mut rng(1)).unwrap();
        let n = net.param_count();
        net.set_flat_params(&vec![0.0; n]).unwrap();
        net.layers[1].bias = vec![0.5, -0.25];
        let mut b = ReplayBuffer::new(10).unwrap();
        for _ in 0..10 {
            b.push(Transition {
                input: vec![0.3, 0.1, 0.7],
                target: [0.5, -0.25],
            });
        }
        let before = net.flat_params();
        let s = train_step(&mut net, &b, 5, &mut rng(2)).unwrap().unwrap();
        assert_eq!(s.loss, 0.0);
        assert_eq!(s.mape, Some(0.0));
        assert_eq!(net.flat_params(), before);
    }

    #[test]
    fn underfull_buffer_is_noop() {
        let mut net = Mlp::new(3, &[4], AdamConfig::default(), &mut rng(1)).unwrap();
        let b = linear_buffer(3, 5);
        let before = net.clone();
        assert!(train_step(&mut net, &b, 4, &mut rng(3)).unwrap().is_none());
        assert_eq!(net, before);
    }

    #[test]
    fn loss_moving_average_decreases() {
        let mut net = Mlp::new(3, &[16, 16], AdamConfig::default(), &mut rng(4)).unwrap();
        let b = linear_buffer(256, 6);
        let mut r = rng(7);
        let losses: Vec<f64> = (0..100)
            .map(|_| train_step(&mut net, &b, 32, &mut r).unwrap().unwrap().loss)
            .collect();
        let avg = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let windows: Vec<f64> = losses.chunks(20).map(avg).collect();
        assert!(windows.windows(2).all(|w| w[1] < w[0]), "{windows:?}");
    }

    #[test]
    fn full_batch_is_deterministic_across_rngs() {
        let net0 = Mlp::new(3, &[8], AdamConfig::default(), &mut rng(8)).unwrap();
        let b = linear_buffer(16, 9);
        let (mut a, mut c) = (net0.clone(), net0.clone());
        let la = train_step(&mut a, &b, 16, &mut rng(10)).unwrap().unwrap().loss;
        let lc = train_step(&mut c, &b, 16, &mut rng(11)).unwrap().unwrap().loss;
        assert!((la - lc).abs() <= 1e-12 * la);
        for (x, y) in a.flat_params().iter().zip(c.flat_params()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            minibatch: 4,
            capacity: 6,
            hidden: vec![8, 8],
            ..TrainConfig::default()
        }
    }

    #[test]
    fn record_schedule_follows_interval() {
        let cfg = TrainConfig {
            train_interval: 5,
            minibatch: 2,
            ..small_cfg()
        };
        let mut u = EstimatorUnit::new(Direction::BtU, 1, 1, &cfg, 1).unwrap();
        let t = || Transition {
            input: vec![0.1; 7],
            target: [1.0, 0.0],
        };
        let mut trained_at = vec![];
        for i in 1..=12u64 {
            if u.record_and_maybe_train(t(), &cfg, 3).unwrap().is_some() {
                trained_at.push(i);
            }
        }
        assert_eq!(trained_at, vec![5, 10]);
        assert_eq!(u.train_steps, 2);
        assert_eq!(u.buffer.len(), 6);
    }

    #[test]
    fn interval_one_trains_every_episode_once_full() {
        let cfg = small_cfg();
        let mut u = EstimatorUnit::new(Direction::UtB, 1, 1, &cfg, 1).unwrap();
        let mut trained = 0;
        for i in 1..=10 {
            let s = u
                .record_and_maybe_train(
                    Transition {
                        input: vec![i as f64 / 10.0; 7],
                        target: [1.0, 0.5],
                    },
                    &cfg,
                    3,
                )
                .unwrap();
            trained += s.is_some() as usize;
        }
        assert_eq!(trained, 7);
        assert_eq!(u.recent_mape.len(), 7);
        assert!(u.windowed_mape().is_some());
    }

    #[test]
    fn units_are_independent() {
        let cfg = small_cfg();
        let bs = Position::new(0.25, 0.375, 0.025);
        let mut est = ChannelEstimator::new(cfg, 2, 1.0, bs, 11, 12).unwrap();
        let snapshot = est.clone();
        // train only BtU antenna 1 directly
        let input = est.input(Direction::BtU, &Position::new(0.5, 0.5, 0.1), 1).unwrap();
        let cfg = est.config.clone();
        for _ in 0..8 {
            est.units[0]
                .record_and_maybe_train(
                    Transition {
                        input: input.clone(),
                        target: [2.0, 0.0],
                    },
                    &cfg,
                    1,
                )
                .unwrap();
        }
        assert_ne!(est.units[0].net, snapshot.units[0].net);
        for (a, b) in est.units.iter().zip(&snapshot.units).skip(1) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn units_have_distinct_initializations() {
        let est = ChannelEstimator::new(small_cfg(), 3, 1.0, Position::new(0.0, 0.0, 0.0), 1, 2).unwrap();
        assert_eq!(est.units.len(), 6);
        for i in 0..6 {
            for j in i + 1..6 {
                assert_ne!(est.units[i].net.layers[0].weights, est.units[j].net.layers[0].weights);
            }
        }
        assert_eq!(est.unit(Direction::UtB, 2).unwrap().k, 2);
        assert_eq!(est.unit(Direction::UtB, 2).unwrap().direction, Direction::UtB);
    }

    #[test]
    fn observe_learns_a_constant_map() {
        let bs = Position::new(0.25, 0.375, 0.025);
        let cfg = TrainConfig {
            minibatch: 8,
            capacity: 64,
            hidden: vec![16, 16],
            ..TrainConfig::default()
        };
        let mut est = ChannelEstimator::new(cfg, 2, 1.0, bs, 3, 4).unwrap();
        let mut r = rng(5);
        let ul = vec![Complex64::new(1.5, 0.0), Complex64::new(1.5, 0.0)];
        let dl = vec![Complex64::new(0.8, 0.0), Complex64::new(0.8, 0.0)];
        for _ in 0..1500 {
            let p = Position::new(r.random_range(0.0..1.0), r.random_range(0.0..1.0), r.random_range(0.0..0.35));
            est.observe(&p, &ul, &dl).unwrap();
        }
        assert!(est.mean_mape(Direction::BtU).unwrap() < 0.05);
        assert!(est.mean_mape(Direction::UtB).unwrap() < 0.05);
        let e = est.estimate(Direction::UtB, &Position::new(0.5, 0.5, 0.1)).unwrap();
        assert!((e[0].re - 0.8).abs() < 0.1);
    }

    #[test]
    fn observe_checks_shapes() {
        let mut est = ChannelEstimator::new(small_cfg(), 2, 1.0, Position::new(0.0, 0.0, 0.0), 1, 2).unwrap();
        let one = vec![Complex64::new(1.0, 0.0)];
        assert!(est.observe(&Position::new(0.1, 0.1, 0.1), &one, &one).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let bs = Position::new(0.25, 0.375, 0.025);
        let mut est = ChannelEstimator::new(small_cfg(), 2, 1.0, bs, 3, 4).unwrap();
        let th = vec![Complex64::new(1.0, 0.1); 2];
        for i in 0..7 {
            est.observe(&Position::new(0.1 * i as f64, 0.5, 0.1), &th, &th).unwrap();
        }
        let back = ChannelEstimator::from_json(&est.to_json().unwrap()).unwrap();
        assert_eq!(back, est);

        let mut bad = est.clone();
        bad.units.swap(0, 1);
        assert!(ChannelEstimator::from_json(&bad.to_json().unwrap()).is_err());
        let mut bad = est.clone();
        bad.units.pop();
        assert!(ChannelEstimator::from_json(&bad.to_json().unwrap()).is_err());
        assert!(ChannelEstimator::from_json("{}").is_err());
    }

    #[test]
    fn train_config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { minibatch: 0, ..TrainConfig::default() },
            TrainConfig { train_interval: 0, ..TrainConfig::default() },
            TrainConfig { capacity: 10, ..TrainConfig::default() },
            TrainConfig { hidden: vec![], ..TrainConfig::default() },
            TrainConfig { mape_window: 0, ..TrainConfig::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        assert_eq!("full".parse::<TargetMode>().unwrap(), TargetMode::Full);
        assert!("other".parse::<TargetMode>().is_err());
    }
}

//! Relaxed power-control program for one slot.
//!
//! Maximize `phi / R_max - eta * (p / p_v_max + tr(V) / p_B_max)` over the
//! BS covariance `V >= 0`, UAV power `p` and auxiliary rate `phi`, subject to
//! the uplink trace floor `h^H V h >= c`, the power caps, the downlink rate
//! floor and `phi <= W log2(1 + p g / N0W)`. The rank-one constraint on `V`
//! is dropped; a beamformer is recovered from the principal eigenvector.

pub mod eigen;
pub mod ipm;
pub mod oracle;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelVector, Direction};
use crate::error::InfeasibleSide;
use crate::link::{check_feasible, downlink_rate, required_uplink_trace, FeasibilityReport, LinkParams, OperatingPoint};
use crate::{Error, Result};

pub use eigen::extract_beamformer;
pub use ipm::IpmOptions;
pub use oracle::{max_downlink_rate, oracle_p, oracle_v};

/// Boundary cases closer than this to having an empty interior are solved
/// in closed form.
const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProblem {
    /// Control-link channel `h_Bv`.
    pub h_ul: Vec<Complex64>,
    /// Payload gain `|sum_k h_k^v|^2`.
    pub g_dl: f64,
    pub params: LinkParams,
    /// Uplink trace floor `c`, W.
    pub c: f64,
    pub r_max: f64,
}

impl ConvexProblem {
    pub fn new(h_ul: Vec<Complex64>, g_dl: f64, params: LinkParams) -> Result<Self> {
        params.validate()?;
        if h_ul.is_empty() {
            return Err(Error::param("h_ul", "needs at least one antenna"));
        }
        if h_ul.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::param("h_ul", "entries must be finite"));
        }
        if !(g_dl >= 0.0 && g_dl.is_finite()) {
            return Err(Error::param("g_dl", "must be finite and non-negative"));
        }
        if g_dl == 0.0 {
            return Err(Error::Infeasible(InfeasibleSide::Downlink));
        }
        let c = required_uplink_trace(&params)?;
        let r_max = max_downlink_rate(g_dl, &params);
        Ok(ConvexProblem {
            h_ul,
            g_dl,
            params,
            c,
            r_max,
        })
    }

    pub fn antennas(&self) -> usize {
        self.h_ul.len()
    }

    pub fn channel_norm_sqr(&self) -> f64 {
        self.h_ul.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `h^H V h`.
    pub fn uplink_trace(&self, v: &DMatrix<Complex64>) -> f64 {
        let h = &self.h_ul;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..h.len() {
            for j in 0..h.len() {
                acc += h[i].conj() * v[(i, j)] * h[j];
            }
        }
        acc.re
    }
}

/// Builds the program from the control channel (BtU) and the payload
/// channel (UtB) of one slot.
pub fn build_problem(ch_ul: &ChannelVector, ch_dl: &ChannelVector, params: &LinkParams) -> Result<ConvexProblem> {
    if ch_ul.direction != Direction::BtU || ch_dl.direction != Direction::UtB {
        return Err(Error::param("channels", "expected a BtU and a UtB vector"));
    }
    if ch_ul.slot != ch_dl.slot {
        return Err(Error::param("channels", "vectors belong to different slots"));
    }
    ConvexProblem::new(ch_ul.h.clone(), ch_dl.coherent_gain(), *params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    InfeasibleUplink,
    InfeasibleDownlink,
    MaxIterations,
}

impl SolveStatus {
    pub fn from_error(e: &Error) -> Option<Self> {
        match e {
            Error::Infeasible(InfeasibleSide::Uplink) => Some(SolveStatus::InfeasibleUplink),
            Error::Infeasible(InfeasibleSide::Downlink) => Some(SolveStatus::InfeasibleDownlink),
            Error::MaxIterations { .. } => Some(SolveStatus::MaxIterations),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolution {
    /// BS covariance, W.
    pub v_matrix: DMatrix<Complex64>,
    /// UAV transmit power, W.
    pub p: f64,
    /// Auxiliary downlink rate, bit/s.
    pub phi: f64,
    pub beamformer: Vec<Complex64>,
    pub tightness: f64,
    pub e_eu: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Duality gap in objective units.
    pub gap: f64,
    pub dual_residual: f64,
}

impl PowerSolution {
    pub fn trace_v(&self) -> f64 {
        eigen::trace_re(&self.v_matrix)
    }

    pub fn operating_point(&self, problem: &ConvexProblem) -> OperatingPoint {
        OperatingPoint {
            uplink_trace: problem.uplink_trace(&self.v_matrix),
            bs_power: self.trace_v(),
            uav_power: self.p,
            downlink_gain: problem.g_dl,
        }
    }

    pub fn check(&self, problem: &ConvexProblem) -> FeasibilityReport {
        check_feasible(&self.operating_point(problem), &problem.params)
    }
}

/// Energy utility on realized rates.
pub fn energy_utility(p: f64, tr_v: f64, g_dl: f64, r_max: f64, params: &LinkParams) -> f64 {
    let rate_term = if r_max > 0.0 {
        downlink_rate(p, g_dl, params) / r_max
    } else {
        0.0
    };
    rate_term - params.eta * (p / params.pv_max_w + tr_v / params.pb_max_w)
}

pub fn solve(problem: &ConvexProblem) -> Result<PowerSolution> {
    solve_with(problem, &IpmOptions::default())
}

pub fn solve_with(problem: &ConvexProblem, opts: &IpmOptions) -> Result<PowerSolution> {
    let params = &problem.params;
    let k = problem.antennas();
    let n2 = problem.channel_norm_sqr();
    // normalized uplink floor: c / (|h|^2 p_B_max)
    let c_tilde = problem.c / (n2 * params.pb_max_w);
    if !(n2 > 0.0) || c_tilde > 1.0 {
        return Err(Error::Infeasible(InfeasibleSide::Uplink));
    }
    if problem.r_max < params.rate_th_bps {
        return Err(Error::Infeasible(InfeasibleSide::Downlink));
    }
    let norm = n2.sqrt();
    let hhat: Vec<Complex64> = problem.h_ul.iter().map(|z| z / norm).collect();
    let psi_th = params.rate_th_bps / problem.r_max;
    let snr_scale = params.pv_max_w * problem.g_dl / params.noise_power_w();

    let cap = 1.0 / c_tilde;
    let psd = (cap - 1.0 > BOUNDARY_EPS).then_some(ipm::PsdData { hhat: &hhat, cap });
    let scalar = (1.0 - psi_th > BOUNDARY_EPS).then_some(ipm::ScalarData {
        eta: params.eta,
        psi_th,
        s: snr_scale,
    });
    let (psd_out, scalar_out) = ipm::solve_normalized(psd, scalar, opts);

    // V = (c / |h|^2) X; the closed-form boundary point is X = H.
    let unit = problem.c / n2;
    let x = match &psd_out {
        Some(r) => eigen::unembed(&r.x),
        None => DMatrix::from_fn(k, k, |i, j| hhat[i] * hhat[j].conj()),
    };
    let v_matrix = x * Complex64::new(unit, 0.0);
    let (q, psi) = scalar_out.as_ref().map_or((1.0, 1.0), |r| (r.q, r.psi));

    let iterations = psd_out.as_ref().map_or(0, |r| r.iterations).max(scalar_out.as_ref().map_or(0, |r| r.iterations));
    let gap = params.eta * c_tilde * psd_out.as_ref().map_or(0.0, |r| r.gap) + scalar_out.as_ref().map_or(0.0, |r| r.gap);
    let converged = psd_out.as_ref().is_none_or(|r| r.converged) && scalar_out.as_ref().is_none_or(|r| r.converged);
    if !converged {
        return Err(Error::MaxIterations { iterations, gap });
    }

    let p = q * params.pv_max_w;
    let (beamformer, tightness) = extract_beamformer(&v_matrix);
    let tr_v = eigen::trace_re(&v_matrix);
    Ok(PowerSolution {
        e_eu: energy_utility(p, tr_v, problem.g_dl, problem.r_max, params),
        v_matrix,
        p,
        phi: psi * problem.r_max,
        beamformer,
        tightness,
        status: SolveStatus::Optimal,
        iterations,
        gap,
        dual_residual: scalar_out.map_or(0.0, |r| r.dual_residual),
    })
}

/// Input of the `solve-one` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveInstance {
    /// `[re, im]` per antenna.
    pub h_ul: Vec<[f64; 2]>,
    pub g_dl: f64,
    #[serde(default)]
    pub params: LinkParams,
}

impl SolveInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn problem(&self) -> Result<ConvexProblem> {
        let h = self.h_ul.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        ConvexProblem::new(h, self.g_dl, self.params)
    }
}

/// Output of the `solve-one` command. Solution fields are absent when the
/// instance has no solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub status: SolveStatus,
    #[serde(rename = "V_re", skip_serializing_if = "Option::is_none")]
    pub v_re: Option<Vec<Vec<f64>>>,
    #[serde(rename = "V_im", skip_serializing_if = "Option::is_none")]
    pub v_im: Option<Vec<Vec<f64>>>,
    #[serde(rename = "tr_V", skip_serializing_if = "Option::is_none")]
    pub tr_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tightness: Option<f64>,
    #[serde(rename = "E_eu", skip_serializing_if = "Option::is_none")]
    pub e_eu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl SolveOutput {
    pub fn from_solution(sol: &PowerSolution) -> Self {
        let k = sol.v_matrix.nrows();
        let rows = |f: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..k).map(|i| (0..k).map(|j| f(&sol.v_matrix[(i, j)])).collect()).collect()
        };
        SolveOutput {
            status: sol.status,
            v_re: Some(rows(|z| z.re)),
            v_im: Some(rows(|z| z.im)),
            tr_v: Some(sol.trace_v()),
            p: Some(sol.p),
            phi: Some(sol.phi),
            v: Some(sol.beamformer.iter().map(|z| [z.re, z.im]).collect()),
            tightness: Some(sol.tightness),
            e_eu: Some(sol.e_eu),
            iterations: Some(sol.iterations),
            gap: Some(sol.gap),
            message: None,
        }
    }

    pub fn from_failure(status: SolveStatus, message: String) -> Self {
        SolveOutput {
            status,
            v_re: None,
            v_im: None,
            tr_v: None,
            p: None,
            phi: None,
            v: None,
            tightness: None,
            e_eu: None,
            iterations: None,
            gap: None,
            message: Some(message),
        }
    }
}

/// Solves an instance, mapping infeasibility and iteration limits to a
/// status instead of an error.
pub fn solve_instance(inst: &SolveInstance) -> Result<SolveOutput> {
    let outcome = inst.problem().and_then(|p| solve(&p));
    match outcome {
        Ok(sol) => Ok(SolveOutput::from_solution(&sol)),
        Err(e) => match SolveStatus::from_error(&e) {
            Some(status) => Ok(SolveOutput::from_failure(status, e.to_string())),
            None => Err(e),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Random channel whose norm puts `c / |h|^2` inside the power budget.
    fn random_problem(rng: &mut ChaCha8Rng, k: usize) -> ConvexProblem {
        let params = LinkParams {
            eta: rng.random_range(0.05..2.0),
            ..LinkParams::default()
        };
        let c_req = required_uplink_trace(&params).unwrap();
        let dir: Vec<Complex64> = (0..k).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let n2: f64 = dir.iter().map(|z| z.norm_sqr()).sum();
        let target = c_req / (params.pb_max_w * rng.random_range(1e-4f64..0.9));
        let h = dir.iter().map(|z| z * (target / n2).sqrt()).collect();
        let g = 10f64.powf(rng.random_range(-13.0..-9.0));
        ConvexProblem::new(h, g, params).unwrap()
    }

    #[test]
    fn scalar_channel_case() {
        // K = 1, h = 1, c = 1 W via a custom SNR floor
        let noise = LinkParams::default().noise_power_w();
        let params = LinkParams {
            snr_th_db: 10.0 * (1.0 / noise).log10(),
            ..LinkParams::default()
        };
        let prob = ConvexProblem::new(vec![c(1.0, 0.0)], 1e-11, params).unwrap();
        assert!((prob.c - 1.0).abs() < 1e-9);
        let sol = solve(&prob).unwrap();
        assert!((sol.trace_v() - prob.c).abs() < 1e-6 * prob.c);
    }

    #[test]
    fn matches_oracles_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..60 {
            let k = [1, 2, 3, 4, 8][trial % 5];
            let prob = random_problem(&mut rng, k);
            let sol = solve(&prob).unwrap();
            let (_, tr_star) = oracle_v(&prob.h_ul, prob.c).unwrap();
            let (p_star, _) = oracle_p(prob.g_dl, &prob.params).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            assert!(rel(sol.trace_v(), tr_star) < 1e-6, "trial {trial}: trace {} vs {tr_star}", sol.trace_v());
            assert!(rel(sol.p, p_star) < 1e-6, "trial {trial}: p {} vs {p_star}", sol.p);
            assert!(sol.tightness >= 1.0 - 1e-6, "trial {trial}: tightness {}", sol.tightness);
            assert!(sol.check(&prob).is_feasible(0.0), "trial {trial}");
        }
    }

    #[test]
    fn uplink_infeasible_when_floor_exceeds_full_power_mrt() {
        let params = LinkParams::default();
        let c_req = required_uplink_trace(&params).unwrap();
        let amp = (0.99 * c_req / params.pb_max_w).sqrt();
        let prob = ConvexProblem::new(vec![c(amp, 0.0)], 1e-11, params).unwrap();
        assert!(matches!(solve(&prob), Err(Error::Infeasible(InfeasibleSide::Uplink))));
    }

    #[test]
    fn downlink_infeasible_cases() {
        let h = vec![c(1e-5, 0.0)];
        assert!(matches!(
            ConvexProblem::new(h.clone(), 0.0, LinkParams::default()),
            Err(Error::Infeasible(InfeasibleSide::Downlink))
        ));
        let prob = ConvexProblem::new(h, 1e-16, LinkParams::default()).unwrap();
        assert!(matches!(solve(&prob), Err(Error::Infeasible(InfeasibleSide::Downlink))));
    }

    #[test]
    fn boundary_uplink_is_full_power_mrt() {
        let params = LinkParams::default();
        let c_req = required_uplink_trace(&params).unwrap();
        let amp = (c_req / (2.0 * params.pb_max_w)).sqrt();
        let prob = ConvexProblem::new(vec![c(amp, 0.0), c(0.0, amp)], 1e-11, params).unwrap();
        let sol = solve(&prob).unwrap();
        assert!((sol.trace_v() - params.pb_max_w).abs() < 1e-9 * params.pb_max_w);
        assert!((sol.tightness - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_downlink_uses_full_power() {
        let params = LinkParams::default();
        let noise = params.noise_power_w();
        let g = (2f64.powf(params.rate_th_bps / params.bandwidth_hz) - 1.0) * noise / params.pv_max_w;
        let prob = ConvexProblem::new(vec![c(1e-4, 0.0)], g, params).unwrap();
        let sol = solve(&prob).unwrap();
        assert_eq!(sol.p, params.pv_max_w);
    }

    #[test]
    fn full_power_objective_normalization() {
        let params = LinkParams::default();
        let g = 1e-11;
        let r_max = max_downlink_rate(g, &params);
        let e = energy_utility(params.pv_max_w, 2.0, g, r_max, &params);
        assert!((e - (1.0 - params.eta * (1.0 + 2.0 / params.pb_max_w))).abs() < 1e-12);
        assert_eq!(energy_utility(0.0, 0.0, g, r_max, &params), 0.0);
        let p = LinkParams { eta: 0.5, ..params };
        assert!(energy_utility(p.pv_max_w, p.pb_max_w, g, r_max, &p).abs() < 1e-12);
    }

    #[test]
    fn stronger_channel_never_needs_more_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let prob = random_problem(&mut rng, 4);
            let stronger = ConvexProblem::new(prob.h_ul.iter().map(|z| z * 1.5).collect(), prob.g_dl, prob.params).unwrap();
            let a = solve(&prob).unwrap().trace_v();
            let b = solve(&stronger).unwrap().trace_v();
            assert!(b <= a * (1.0 + 1e-9));
        }
    }

    #[test]
    fn uplink_constraint_is_rank_one_trace_identity() {
        let h = vec![c(0.3, 0.1), c(-0.2, 0.5)];
        let prob = ConvexProblem::new(h.clone(), 1e-11, LinkParams::default()).unwrap();
        let v = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.1, 0.3), c(0.1, -0.3), c(1.0, 0.0)]);
        // tr(h h^H V) computed explicitly
        let hm = DMatrix::from_fn(2, 2, |i, j| h[i] * h[j].conj());
        let tr = (0..2).map(|i| (&hm * &v)[(i, i)]).sum::<Complex64>();
        assert!((prob.uplink_trace(&v) - tr.re).abs() < 1e-15);
        assert!(tr.im.abs() < 1e-15);
    }

    #[test]
    fn build_problem_checks_directions_and_slots() {
        let ul = ChannelVector::from_theta(Direction::BtU, 1, vec![c(1.0, 0.0)], 100.0, true);
        let dl = ChannelVector::from_theta(Direction::UtB, 1, vec![c(1.0, 0.0)], 100.0, true);
        let dl2 = ChannelVector::from_theta(Direction::UtB, 2, vec![c(1.0, 0.0)], 100.0, true);
        let params = LinkParams::default();
        assert!(build_problem(&ul, &dl, &params).is_ok());
        assert!(build_problem(&dl, &ul, &params).is_err());
        assert!(build_problem(&ul, &dl2, &params).is_err());
        let p = build_problem(&ul, &dl, &params).unwrap();
        assert!((p.g_dl - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn instance_json_round_trip() {
        let text = r#"{"h_ul": [[1e-5, 0.0], [0.0, 2e-5]], "g_dl": 1e-11}"#;
        let inst = SolveInstance::from_json(text).unwrap();
        assert_eq!(inst.params, LinkParams::default());
        let out = solve_instance(&inst).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let json = serde_json::to_string(&out).unwrap();
        assert!(json.contains("\"V_re\""));
        let bad = r#"{"h_ul": [[1e-9, 0.0]], "g_dl": 1e-11}"#;
        let out = solve_instance(&SolveInstance::from_json(bad).unwrap()).unwrap();
        assert_eq!(out.status, SolveStatus::InfeasibleUplink);
        assert!(out.v_re.is_none());
        assert!(SolveInstance::from_json(r#"{"h_ul": [], "g_dl": 1}"#).unwrap().problem().is_err());
    }
}

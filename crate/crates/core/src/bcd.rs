//! Alternating optimization of the two blocks.
//!
//! Each round solves the frequency/resolution/deadline block for the current
//! uplink times, turns the new deadline into per-device rate floors and then
//! re-optimizes power and bandwidth against those floors. Resolutions stay
//! continuous while the blocks alternate; once the iterates settle they are
//! rounded to `{s_min, s_max}` and a few more rounds run with the
//! resolutions pinned.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{evaluate, uplink_time, Allocation, CostBreakdown, DeviceProfile, SystemConfig, Weights};
use crate::sp1::{linearize_accuracy, solve_sp1_boxed, ResolutionBox, Sp1Solution};
use crate::sp2::{jong_solve, jong_solve_priced, rate_floor, sum_of_ratios, Sp2Options};

#[derive(Debug, Clone, PartialEq)]
pub struct BcdConfig {
    /// Stop once the scaled solution change drops to this level.
    pub eps0: f64,
    /// Round cap over both phases together.
    pub max_rounds: usize,
    /// Round the resolutions inside every round instead of once at the end.
    pub round_resolution_each_iter: bool,
    /// Total completion time budget `R_g T`; switches to energy-only mode.
    pub fixed_deadline: Option<f64>,
    pub sp2: Sp2Options,
}

impl Default for BcdConfig {
    fn default() -> Self {
        BcdConfig {
            eps0: 1e-4,
            max_rounds: 30,
            round_resolution_each_iter: false,
            fixed_deadline: None,
            sp2: Sp2Options::default(),
        }
    }
}

impl BcdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0) {
            return Err(Error::InvalidConfig("eps0 must be positive".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidConfig("max_rounds must be at least 1".into()));
        }
        if let Some(t) = self.fixed_deadline {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig("fixed deadline must be positive".into()));
            }
        }
        let o = &self.sp2;
        if !(o.xi > 0.0 && o.xi < 1.0 && o.eps > 0.0 && o.eps < 1.0) {
            return Err(Error::InvalidConfig("xi and eps must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Continuous resolutions.
    Relaxed,
    /// Resolutions pinned to their rounded values.
    Polish,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcdRound {
    pub round: usize,
    pub phase: Phase,
    pub objective_relaxed: f64,
    pub objective_realized: f64,
    pub delta: f64,
    pub sp2_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BcdTrace {
    pub rounds: Vec<BcdRound>,
}

impl BcdTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,objective_relaxed,objective_realized,delta,sp2_iters\n");
        for r in &self.rounds {
            let _ = writeln!(
                out,
                "{},{:.12e},{:.12e},{:.6e},{}",
                r.round, r.objective_relaxed, r.objective_realized, r.delta, r.sp2_iters
            );
        }
        out
    }

    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &BcdRound> {
        self.rounds.iter().filter(move |r| r.phase == phase)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BcdResult {
    pub allocation: Allocation,
    pub cost: CostBreakdown,
    pub trace: BcdTrace,
    /// Both phases stopped on the change tolerance rather than the round cap.
    pub converged: bool,
}

/// Starting point: full power, half the band split equally, full speed,
/// smallest resolution, and the deadline those settings need.
pub fn initial_allocation(cfg: &SystemConfig, devices: &[DeviceProfile]) -> Result<Allocation> {
    let n = devices.len();
    let mut a = Allocation {
        power: devices.iter().map(|d| d.p_max).collect(),
        bandwidth: vec![cfg.total_bandwidth / (2.0 * n as f64); n],
        freq: devices.iter().map(|d| d.f_max).collect(),
        resolution: vec![cfg.s_min; n],
        deadline: 0.0,
    };
    a.deadline = crate::model::round_times(cfg, devices, &a)?.into_iter().fold(0.0, f64::max);
    Ok(a)
}

/// Objective with the accuracy chord in place of the curve and the stored
/// deadline, for continuous resolutions.
pub fn relaxed_objective(cfg: &SystemConfig, devices: &[DeviceProfile], w: &Weights, alloc: &Allocation) -> f64 {
    let lin = linearize_accuracy(cfg);
    let mut comp = 0.0;
    let mut acc = 0.0;
    for (n, d) in devices.iter().enumerate() {
        let s = alloc.resolution[n];
        comp += cfg.kappa * d.round_cycles(cfg, s) * alloc.freq[n] * alloc.freq[n];
        acc += lin.value(s);
    }
    sum_of_ratios(cfg, w, devices, &alloc.power, &alloc.bandwidth) + w.w1 * cfg.rg() * comp
        + w.w2 * cfg.rg() * alloc.deadline
        - w.rho * acc
}

fn realize(cfg: &SystemConfig, devices: &[DeviceProfile], w: &Weights, alloc: &Allocation) -> Result<(Allocation, CostBreakdown)> {
    let mut a = alloc.clone();
    a.resolution = alloc.resolution.iter().map(|&s| crate::sp1::round_resolution(cfg, s)).collect();
    let used: f64 = a.bandwidth.iter().sum();
    if used > cfg.total_bandwidth {
        let scale = cfg.total_bandwidth / used;
        for b in &mut a.bandwidth {
            *b *= scale;
        }
    }
    a.deadline = crate::model::round_times(cfg, devices, &a)?.into_iter().fold(0.0, f64::max);
    let cost = evaluate(cfg, devices, w, &a)?;
    Ok((a, cost))
}

fn change(devices: &[DeviceProfile], cfg: &SystemConfig, old: &Allocation, new: &Allocation) -> f64 {
    let mut worst: f64 = 0.0;
    let mut upd = |a: f64, b: f64, width: f64| {
        if width > 0.0 {
            worst = worst.max((a - b).abs() / width);
        }
    };
    for (n, d) in devices.iter().enumerate() {
        upd(old.power[n], new.power[n], d.p_max - d.p_min);
        upd(old.bandwidth[n], new.bandwidth[n], cfg.total_bandwidth);
        upd(old.freq[n], new.freq[n], d.f_max - d.f_min);
        upd(old.resolution[n], new.resolution[n], cfg.s_max - cfg.s_min);
    }
    worst
}

fn t_ups(cfg: &SystemConfig, devices: &[DeviceProfile], a: &Allocation) -> Result<Vec<f64>> {
    devices
        .iter()
        .enumerate()
        .map(|(n, d)| uplink_time(cfg, d, a.power[n], a.bandwidth[n]).map_err(|e| e.at_device(n)))
        .collect()
}

/// Relative rate shortfall treated as rounding error.
const FLOOR_SLACK: f64 = 1e-12;
const PRICED_MAX_ITERS: usize = 25;
const PRICED_MAX_J: u32 = 10;

struct Runner<'a> {
    cfg: &'a SystemConfig,
    devices: &'a [DeviceProfile],
    w: Weights,
    bcd: &'a BcdConfig,
    /// Per-round deadline in fixed-deadline mode.
    t_round: Option<f64>,
}

impl Runner<'_> {
    fn sp1(&self, t_up: &[f64], pinned: Option<&[f64]>) -> Result<Sp1Solution> {
        let (cfg, devs, w) = (self.cfg, self.devices, &self.w);
        match pinned {
            Some(s) => solve_sp1_boxed(cfg, devs, w, t_up, ResolutionBox::Fixed(s), self.t_round),
            None => {
                let sol = solve_sp1_boxed(cfg, devs, w, t_up, ResolutionBox::Relaxed, self.t_round)?;
                if self.bcd.round_resolution_each_iter {
                    solve_sp1_boxed(cfg, devs, w, t_up, ResolutionBox::Fixed(&sol.s_rounded), self.t_round)
                } else {
                    Ok(sol)
                }
            }
        }
    }

    /// The priced residual can be discontinuous, so its iteration gets a
    /// smaller budget; any iterate is a usable candidate.
    fn priced_opts(&self) -> Sp2Options {
        Sp2Options {
            max_iters: self.bcd.sp2.max_iters.min(PRICED_MAX_ITERS),
            max_j: self.bcd.sp2.max_j.min(PRICED_MAX_J),
            ..self.bcd.sp2
        }
    }

    fn resolutions(&self, s1: &Sp1Solution, pinned: Option<&[f64]>) -> Vec<f64> {
        if self.bcd.round_resolution_each_iter && pinned.is_none() {
            s1.s_rounded.clone()
        } else {
            s1.s_relaxed.clone()
        }
    }

    /// One round; returns the new iterate and the SP2 iteration count.
    ///
    /// Besides the plain energy-only update of the transmit block, a second
    /// candidate charges each uplink second at the deadline price the first
    /// block reports and then re-solves the first block for the faster
    /// uplinks. Without it the alternation stalls wherever the transmit block
    /// just meets the floors, even when shorter uplinks would pay for
    /// themselves through a shorter deadline or slower CPUs. The candidate
    /// with the lower relaxed objective wins.
    fn round(&self, cur: &Allocation, pinned: Option<&[f64]>) -> Result<(Allocation, usize)> {
        let (cfg, devs, w) = (self.cfg, self.devices, &self.w);
        let t_up = t_ups(cfg, devs, cur)?;
        let s1 = self.sp1(&t_up, pinned)?;
        let s = self.resolutions(&s1, pinned);
        let floor = rate_floor(cfg, devs, &s1.freq, &s, s1.deadline)?;
        let fits = |p: &[f64], b: &[f64]| {
            devs.iter()
                .enumerate()
                .all(|(n, d)| crate::model::data_rate(cfg, d, p[n], b[n]) >= floor.r_min[n] * (1.0 - FLOOR_SLACK))
        };
        let (power, bandwidth, mut iters) = match jong_solve(cfg, w, devs, &floor, &cur.power, &cur.bandwidth, &self.bcd.sp2) {
            Ok(st) => (st.power, st.bandwidth, st.iteration),
            // a deadline that is tight for uplinks already using the whole
            // band asks for the band plus rounding error; the current
            // settings meet it
            Err(Error::BudgetExhausted { .. }) if fits(&cur.power, &cur.bandwidth) => (cur.power.clone(), cur.bandwidth.clone(), 0),
            Err(e) => return Err(e),
        };
        let mut next = Allocation {
            power,
            bandwidth,
            freq: s1.freq.clone(),
            resolution: s,
            deadline: s1.deadline,
        };
        // keep the previous transmit settings if the new ones are no better;
        // they still meet the new floors
        let old_e = sum_of_ratios(cfg, w, devs, &cur.power, &cur.bandwidth);
        let new_e = sum_of_ratios(cfg, w, devs, &next.power, &next.bandwidth);
        if !(new_e <= old_e)
            && fits(&cur.power, &cur.bandwidth) {
                next.power = cur.power.clone();
                next.bandwidth = cur.bandwidth.clone();
            }
        if w.w1 > 0.0 && s1.lambda.len() == devs.len() && s1.lambda.iter().any(|&l| l > 0.0) {
            // failures here only mean the priced candidate is unavailable
            if let Ok(priced) = jong_solve_priced(cfg, w, devs, &floor, &s1.lambda, &cur.power, &cur.bandwidth, &self.priced_opts()) {
                iters += priced.iteration;
                let mut cand = Allocation {
                    power: priced.power,
                    bandwidth: priced.bandwidth,
                    ..next.clone()
                };
                if let Ok(s1b) = t_ups(cfg, devs, &cand).and_then(|t| self.sp1(&t, pinned)) {
                    cand.resolution = self.resolutions(&s1b, pinned);
                    cand.freq = s1b.freq;
                    cand.deadline = s1b.deadline;
                    if relaxed_objective(cfg, devs, w, &cand) < relaxed_objective(cfg, devs, w, &next) {
                        next = cand;
                    }
                }
            }
        }
        Ok((next, iters))
    }

    fn run(&self, init: &Allocation) -> Result<BcdResult> {
        let (cfg, devs, w) = (self.cfg, self.devices, &self.w);
        let mut trace = BcdTrace::default();
        let mut cur = init.clone();
        let mut counter = 0;
        let mut converged = true;
        let mut pinned: Option<Vec<f64>> = None;
        for phase in [Phase::Relaxed, Phase::Polish] {
            if phase == Phase::Polish {
                pinned = Some(cur.resolution.iter().map(|&s| crate::sp1::round_resolution(cfg, s)).collect());
                cur.resolution = pinned.clone().unwrap();
            }
            let mut settled = false;
            while counter < self.bcd.max_rounds {
                counter += 1;
                let (next, iters) = self
                    .round(&cur, pinned.as_deref())
                    .map_err(|e| Error::Round { round: counter, source: Box::new(e) })?;
                let delta = change(devs, cfg, &cur, &next);
                let (_, cost) = realize(cfg, devs, w, &next).map_err(|e| Error::Round { round: counter, source: Box::new(e) })?;
                trace.rounds.push(BcdRound {
                    round: counter,
                    phase,
                    objective_relaxed: relaxed_objective(cfg, devs, w, &next),
                    objective_realized: cost.objective,
                    delta,
                    sp2_iters: iters,
                });
                cur = next;
                if delta <= self.bcd.eps0 {
                    settled = true;
                    break;
                }
            }
            converged &= settled;
        }
        let (allocation, cost) = realize(cfg, devs, w, &cur)?;
        Ok(BcdResult {
            allocation,
            cost,
            trace,
            converged,
        })
    }
}

fn check_inputs(cfg: &SystemConfig, devices: &[DeviceProfile], bcd: &BcdConfig, init: &Allocation) -> Result<()> {
    cfg.validate()?;
    bcd.validate()?;
    for (n, d) in devices.iter().enumerate() {
        d.validate().map_err(|e| Error::InvalidConfig(format!("device {n}: {e}")))?;
    }
    if devices.is_empty() || init.len() != devices.len() {
        return Err(Error::InvalidConfig(format!(
            "{} devices but an initial allocation for {}",
            devices.len(),
            init.len()
        )));
    }
    Ok(())
}

/// Alternating optimization for the weighted objective. `bcd.fixed_deadline`
/// must be unset; use [`bcd_solve_fixed_deadline`] for that mode.
pub fn bcd_solve(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    w: &Weights,
    bcd: &BcdConfig,
    init: &Allocation,
) -> Result<BcdResult> {
    if let Some(t) = bcd.fixed_deadline {
        return bcd_solve_fixed_deadline(cfg, devices, t, bcd, init);
    }
    check_inputs(cfg, devices, bcd, init)?;
    Runner {
        cfg,
        devices,
        w: *w,
        bcd,
        t_round: None,
    }
    .run(init)
}

/// Energy-only variant with the total completion time fixed at `t_fixed`
/// (so each round must finish within `t_fixed / R_g`).
pub fn bcd_solve_fixed_deadline(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    t_fixed: f64,
    bcd: &BcdConfig,
    init: &Allocation,
) -> Result<BcdResult> {
    let bcd = BcdConfig {
        fixed_deadline: Some(t_fixed),
        ..bcd.clone()
    };
    check_inputs(cfg, devices, &bcd, init)?;
    Runner {
        cfg,
        devices,
        w: Weights { w1: 1.0, w2: 0.0, rho: 0.0 },
        bcd: &bcd,
        t_round: Some(t_fixed / cfg.rg()),
    }
    .run(init)
    .map_err(|e| match e {
        // report the device that makes the deadline infeasible directly
        Error::Round { source, .. } if matches!(*source, Error::DeadlineInfeasible { .. }) => *source,
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_feasible;

    fn dev(gain: f64, c: f64) -> DeviceProfile {
        DeviceProfile {
            gain,
            cycles_per_std_sample: c,
            n_samples: 500.0,
            upload_bits: 28.1e3,
            p_min: 1e-3,
            p_max: 0.0158,
            f_min: 0.0,
            f_max: 2e9,
        }
    }

    fn five() -> Vec<DeviceProfile> {
        vec![
            dev(3e-12, 1.2e4),
            dev(1e-11, 2.9e4),
            dev(8e-11, 1.7e4),
            dev(2e-13, 2.2e4),
            dev(5e-12, 1.0e4),
        ]
    }

    #[test]
    fn collapsed_boxes_single_round() {
        let cfg = SystemConfig {
            s_max: 160.0 + 1e-9,
            ..SystemConfig::default()
        };
        let d = DeviceProfile {
            p_min: 0.01,
            p_max: 0.01,
            f_min: 1e9,
            f_max: 1e9,
            ..dev(1e-11, 2e4)
        };
        let devs = [d];
        let init = initial_allocation(&cfg, &devs).unwrap();
        let w = Weights { w1: 0.5, w2: 0.5, rho: 0.0 };
        let r = bcd_solve(&cfg, &devs, &w, &BcdConfig::default(), &init).unwrap();
        assert_eq!(r.allocation.power[0], 0.01);
        assert_eq!(r.allocation.freq[0], 1e9);
        assert!(r.trace.phase(Phase::Relaxed).count() <= 2);
    }

    #[test]
    fn relaxed_objective_non_increasing() {
        let cfg = SystemConfig::default();
        let devs = five();
        let init = initial_allocation(&cfg, &devs).unwrap();
        let w = Weights { w1: 0.5, w2: 0.5, rho: 1.0 };
        let r = bcd_solve(&cfg, &devs, &w, &BcdConfig::default(), &init).unwrap();
        let rel: Vec<f64> = r.trace.phase(Phase::Relaxed).map(|x| x.objective_relaxed).collect();
        for pair in rel.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{rel:?}");
        }
        assert!(check_feasible(&cfg, &devs, &r.allocation).is_empty());
        assert!(r.trace.rounds.len() <= BcdConfig::default().max_rounds);
        let csv = r.trace.to_csv();
        assert!(csv.starts_with("round,objective_relaxed,objective_realized,delta,sp2_iters\n"));
        assert_eq!(csv.lines().count(), r.trace.rounds.len() + 1);
    }

    #[test]
    fn literal_rounding_mode_is_feasible() {
        let cfg = SystemConfig::default();
        let devs = five();
        let init = initial_allocation(&cfg, &devs).unwrap();
        let w = Weights { w1: 0.5, w2: 0.5, rho: 20.0 };
        let bcd = BcdConfig {
            round_resolution_each_iter: true,
            ..BcdConfig::default()
        };
        let r = bcd_solve(&cfg, &devs, &w, &bcd, &init).unwrap();
        assert!(check_feasible(&cfg, &devs, &r.allocation).is_empty());
    }

    #[test]
    fn fixed_deadline_energy_decreases_with_time() {
        let cfg = SystemConfig::default();
        let devs = five();
        let init = initial_allocation(&cfg, &devs).unwrap();
        let mut last = f64::INFINITY;
        for t in [80.0, 100.0, 150.0] {
            let r = bcd_solve_fixed_deadline(&cfg, &devs, t, &BcdConfig::default(), &init).unwrap();
            assert!(r.cost.total_time <= t * (1.0 + 1e-12));
            assert!(r.cost.total_energy <= last);
            last = r.cost.total_energy;
        }
    }

    #[test]
    fn fixed_deadline_infeasible_names_device() {
        let cfg = SystemConfig::default();
        let devs = five();
        let init = initial_allocation(&cfg, &devs).unwrap();
        let err = bcd_solve_fixed_deadline(&cfg, &devs, 1.0, &BcdConfig::default(), &init).unwrap_err();
        assert!(matches!(err, Error::DeadlineInfeasible { .. }), "{err}");
    }
}

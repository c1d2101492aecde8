//! Reference allocators used for comparison.

use rand::Rng;

use crate::bcd::BcdConfig;
use crate::error::{Error, Result};
use crate::model::{round_times, uplink_time, Allocation, DeviceProfile, SystemConfig, Weights};
use crate::sp1::{solve_sp1_boxed, ResolutionBox};
use crate::sp2::{jong_solve, rate_floor};

use super::scenario::{dbm_to_watts, watts_to_dbm};

/// Which hardware limit is being swept, which decides what the baseline
/// randomizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Full power, random CPU frequency in `[0.1 GHz, f_max]`.
    Power,
    /// Full speed, random power uniform in dBm over the power box.
    Frequency,
}

fn with_deadline(cfg: &SystemConfig, devices: &[DeviceProfile], mut a: Allocation) -> Result<Allocation> {
    a.deadline = round_times(cfg, devices, &a)?.into_iter().fold(0.0, f64::max);
    Ok(a)
}

fn baseline<R: Rng>(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    mode: SweepMode,
    rng: &mut R,
    mut pick_s: impl FnMut(&mut R) -> f64,
) -> Result<Allocation> {
    let n = devices.len();
    let mut a = Allocation {
        bandwidth: vec![cfg.total_bandwidth / n as f64; n],
        ..Allocation::default()
    };
    for d in devices {
        match mode {
            SweepMode::Power => {
                let hi = d.f_max.min(2e9);
                let lo = 1e8_f64.min(hi);
                a.power.push(d.p_max);
                a.freq.push(if hi > lo { rng.random_range(lo..=hi) } else { hi });
            }
            SweepMode::Frequency => {
                let lo = if d.p_min > 0.0 { watts_to_dbm(d.p_min) } else { 0.0 };
                let hi = watts_to_dbm(d.p_max);
                let dbm = if hi > lo { rng.random_range(lo..=hi) } else { hi };
                a.power.push(dbm_to_watts(dbm).clamp(d.p_min, d.p_max));
                a.freq.push(d.f_max);
            }
        }
        a.resolution.push(pick_s(rng));
    }
    with_deadline(cfg, devices, a)
}

/// Equal bandwidth split, smallest resolution, and randomized power or
/// frequency depending on `mode`.
pub fn benchmark_minpixel<R: Rng>(cfg: &SystemConfig, devices: &[DeviceProfile], mode: SweepMode, rng: &mut R) -> Result<Allocation> {
    let s = cfg.s_min;
    baseline(cfg, devices, mode, rng, |_| s)
}

/// As [`benchmark_minpixel`] with each resolution a fair coin between
/// `s_min` and `s_max`.
pub fn benchmark_randpixel<R: Rng>(cfg: &SystemConfig, devices: &[DeviceProfile], mode: SweepMode, rng: &mut R) -> Result<Allocation> {
    let (lo, hi) = (cfg.s_min, cfg.s_max);
    baseline(cfg, devices, mode, rng, |r| if r.random_bool(0.5) { hi } else { lo })
}

/// Resolution choice of the communication-only scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolutionPolicy {
    /// Fair coin between `s_min` and `s_max` per device.
    Random,
    /// The same resolution for every device.
    Fixed(f64),
}

const ENERGY_ONLY: Weights = Weights { w1: 1.0, w2: 0.0, rho: 0.0 };

/// CPU frequencies of the communication-only scheme: each device gets
/// exactly the time left after the slowest uplink at the starting point
/// (full power, half the band split equally).
pub fn comm_only_frequencies(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    t_total: f64,
    s: &[f64],
) -> Result<Vec<f64>> {
    let n = devices.len();
    let bw = cfg.total_bandwidth / (2.0 * n as f64);
    let t_round = t_total / cfg.rg();
    let mut t_up_max: f64 = 0.0;
    for (i, d) in devices.iter().enumerate() {
        t_up_max = t_up_max.max(uplink_time(cfg, d, d.p_max, bw).map_err(|e| e.at_device(i))?);
    }
    let left = t_round - t_up_max;
    let mut out = Vec::with_capacity(n);
    for (i, d) in devices.iter().enumerate() {
        let cycles = d.round_cycles(cfg, s[i]);
        let f = if left > 0.0 { cycles / left } else { f64::INFINITY };
        if f > d.f_max {
            return Err(Error::DeadlineInfeasible {
                device: i,
                required: t_up_max + cycles / d.f_max,
                deadline: t_round,
            });
        }
        out.push(f.max(d.f_min));
    }
    Ok(out)
}

/// Fixes CPU frequencies and resolutions, then optimizes power and bandwidth
/// for energy alone under the total time budget `t_total`.
pub fn comm_only<R: Rng>(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    t_total: f64,
    policy: ResolutionPolicy,
    bcd: &BcdConfig,
    rng: &mut R,
) -> Result<Allocation> {
    let n = devices.len();
    let s: Vec<f64> = (0..n)
        .map(|_| match policy {
            ResolutionPolicy::Fixed(s) => s,
            ResolutionPolicy::Random => {
                if rng.random_bool(0.5) {
                    cfg.s_max
                } else {
                    cfg.s_min
                }
            }
        })
        .collect();
    let freq = comm_only_frequencies(cfg, devices, t_total, &s)?;
    let floor = rate_floor(cfg, devices, &freq, &s, t_total / cfg.rg())?;
    let p0: Vec<f64> = devices.iter().map(|d| d.p_max).collect();
    let b0 = vec![cfg.total_bandwidth / (2.0 * n as f64); n];
    let st = jong_solve(cfg, &ENERGY_ONLY, devices, &floor, &p0, &b0, &bcd.sp2)?;
    let a = Allocation {
        power: st.power,
        bandwidth: st.bandwidth,
        freq,
        resolution: s,
        deadline: 0.0,
    };
    with_deadline(cfg, devices, a)
}

/// Fixes full power and half the band split equally, then picks the
/// energy-optimal CPU frequencies that meet the total time budget.
pub fn comp_only(cfg: &SystemConfig, devices: &[DeviceProfile], t_total: f64) -> Result<Allocation> {
    let n = devices.len();
    let power: Vec<f64> = devices.iter().map(|d| d.p_max).collect();
    let bandwidth = vec![cfg.total_bandwidth / (2.0 * n as f64); n];
    let t_up = devices
        .iter()
        .enumerate()
        .map(|(i, d)| uplink_time(cfg, d, power[i], bandwidth[i]).map_err(|e| e.at_device(i)))
        .collect::<Result<Vec<f64>>>()?;
    let s = vec![cfg.s_min; n];
    let sol = solve_sp1_boxed(
        cfg,
        devices,
        &ENERGY_ONLY,
        &t_up,
        ResolutionBox::Fixed(&s),
        Some(t_total / cfg.rg()),
    )?;
    let a = Allocation {
        power,
        bandwidth,
        freq: sol.freq,
        resolution: s,
        deadline: 0.0,
    };
    with_deadline(cfg, devices, a)
}

//! System model: rates, energies, times, the accuracy curve, and the weighted
//! objective.
//!
//! All quantities are SI (W, Hz, J, s, bits). A "round" is one global
//! aggregation: `r_local` local iterations followed by one uplink.

use std::f64::consts::LN_2;

use crate::error::{Error, Result, Violation};

/// Global constants shared by every device.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_devices: usize,
    /// Total uplink bandwidth `B`, Hz.
    pub total_bandwidth: f64,
    /// Noise power spectral density `N0`, W/Hz.
    pub noise_density: f64,
    /// Effective switched capacitance.
    pub kappa: f64,
    /// Local iterations per global round.
    pub r_local: u32,
    /// Number of global rounds.
    pub r_global: u32,
    pub s_min: f64,
    pub s_max: f64,
    pub s_standard: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_devices: 50,
            total_bandwidth: 20e6,
            // -174 dBm/Hz
            noise_density: 10f64.powf(-20.4),
            kappa: 1e-28,
            r_local: 10,
            r_global: 100,
            s_min: 160.0,
            s_max: 640.0,
            s_standard: 160.0,
        }
    }
}

impl SystemConfig {
    /// Cycle scaling per pixel², `1 / s_standard²`.
    pub fn zeta(&self) -> f64 {
        1.0 / (self.s_standard * self.s_standard)
    }

    pub fn rl(&self) -> f64 {
        self.r_local as f64
    }

    pub fn rg(&self) -> f64 {
        self.r_global as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_devices == 0 {
            return bad("n_devices must be positive");
        }
        if !(self.total_bandwidth > 0.0 && self.total_bandwidth.is_finite()) {
            return bad("total_bandwidth must be positive");
        }
        if !(self.noise_density > 0.0) {
            return bad("noise_density must be positive");
        }
        if !(self.kappa > 0.0) {
            return bad("kappa must be positive");
        }
        if self.r_local == 0 || self.r_global == 0 {
            return bad("r_local and r_global must be at least 1");
        }
        if !(self.s_min > 0.0 && self.s_min <= self.s_standard) {
            return bad("need 0 < s_min <= s_standard");
        }
        if !(self.s_min < self.s_max) {
            return bad("need s_min < s_max");
        }
        Ok(())
    }
}

/// Per-device channel, workload and hardware limits.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    /// Linear channel power gain `g_n`.
    pub gain: f64,
    /// CPU cycles to process one standard-resolution sample, `c_n`.
    pub cycles_per_std_sample: f64,
    /// Local samples `D_n`.
    pub n_samples: f64,
    /// Bits uploaded per round, `d_n`.
    pub upload_bits: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub f_min: f64,
    pub f_max: f64,
}

impl DeviceProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.gain > 0.0) {
            return bad("gain must be positive");
        }
        if !(self.cycles_per_std_sample > 0.0) {
            return bad("cycles_per_std_sample must be positive");
        }
        if !(self.n_samples >= 1.0) {
            return bad("n_samples must be at least 1");
        }
        if !(self.upload_bits > 0.0) {
            return bad("upload_bits must be positive");
        }
        if !(self.p_min >= 0.0 && self.p_min <= self.p_max) {
            return bad("need 0 <= p_min <= p_max");
        }
        if !(self.f_min >= 0.0 && self.f_min <= self.f_max && self.f_max > 0.0) {
            return bad("need 0 <= f_min <= f_max, f_max > 0");
        }
        Ok(())
    }

    /// Cycles per round per pixel²: `R_l ζ c_n D_n`. Multiply by `s²` to get
    /// the cycles one round costs at resolution `s`.
    pub fn work_coeff(&self, cfg: &SystemConfig) -> f64 {
        cfg.rl() * cfg.zeta() * self.cycles_per_std_sample * self.n_samples
    }

    /// CPU cycles needed for one global round at resolution `s`.
    pub fn round_cycles(&self, cfg: &SystemConfig, s: f64) -> f64 {
        self.work_coeff(cfg) * s * s
    }
}

/// Weights of energy, time and accuracy in the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub w1: f64,
    pub w2: f64,
    pub rho: f64,
}

impl Weights {
    /// Divides all three weights by `w1 + w2`.
    pub fn normalized(w1: f64, w2: f64, rho: f64) -> Result<Weights> {
        if !(w1 >= 0.0 && w2 >= 0.0 && rho >= 0.0) || !(w1 + w2 + rho).is_finite() {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and non-negative, got ({w1}, {w2}, {rho})"
            )));
        }
        let sum = w1 + w2;
        if sum == 0.0 {
            return Err(Error::InvalidWeights(
                "w1 + w2 = 0 leaves only the accuracy term (trivial problem)".into(),
            ));
        }
        Ok(Weights {
            w1: w1 / sum,
            w2: w2 / sum,
            rho: rho / sum,
        })
    }
}

pub fn normalize_weights(w1: f64, w2: f64, rho: f64) -> Result<Weights> {
    Weights::normalized(w1, w2, rho)
}

/// Decision vector for all devices plus the auxiliary per-round deadline `T`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    pub power: Vec<f64>,
    pub bandwidth: Vec<f64>,
    pub freq: Vec<f64>,
    pub resolution: Vec<f64>,
    /// Per-round deadline `T`, seconds.
    pub deadline: f64,
}

impl Allocation {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    /// Transmission energy of one round, summed over devices.
    pub e_trans: f64,
    /// Computation energy of one round, summed over devices.
    pub e_cmp: f64,
    /// `R_g (e_trans + e_cmp)`.
    pub total_energy: f64,
    /// `R_g max_n (T_cmp,n + T_up,n)`.
    pub total_time: f64,
    /// Realized round time `max_n (T_cmp,n + T_up,n)`.
    pub round_time: f64,
    pub accuracy_sum: f64,
    /// `w1 E + w2 R_g T - rho A` with the stored deadline `T`.
    pub objective: f64,
}

/// Shannon rate `B log2(1 + g p / (N0 B))`. Zero bandwidth is the degenerate
/// limit and yields 0.
pub fn data_rate(cfg: &SystemConfig, dev: &DeviceProfile, p: f64, bw: f64) -> f64 {
    if bw <= 0.0 || p <= 0.0 {
        return 0.0;
    }
    let snr = dev.gain * p / (cfg.noise_density * bw);
    bw * snr.ln_1p() / LN_2
}

pub fn uplink_time(cfg: &SystemConfig, dev: &DeviceProfile, p: f64, bw: f64) -> Result<f64> {
    let r = data_rate(cfg, dev, p, bw);
    if r <= 0.0 {
        return Err(Error::ZeroRate { device: None });
    }
    Ok(dev.upload_bits / r)
}

pub fn trans_energy(cfg: &SystemConfig, dev: &DeviceProfile, p: f64, bw: f64) -> Result<f64> {
    Ok(p * uplink_time(cfg, dev, p, bw)?)
}

/// Energy of `R_l` local iterations at frequency `f` and resolution `s`.
pub fn comp_energy(cfg: &SystemConfig, dev: &DeviceProfile, f: f64, s: f64) -> f64 {
    cfg.kappa * dev.round_cycles(cfg, s) * f * f
}

pub fn comp_time(cfg: &SystemConfig, dev: &DeviceProfile, f: f64, s: f64) -> Result<f64> {
    if f <= 0.0 {
        return Err(Error::ZeroFrequency { device: None });
    }
    Ok(dev.round_cycles(cfg, s) / f)
}

/// Detection accuracy as a function of the frame side length in pixels.
pub fn accuracy(s: f64) -> f64 {
    1.0 - 1.578 * (-6.5e-3 * s).exp()
}

/// Per-device round time `T_cmp + T_up`.
pub fn round_times(cfg: &SystemConfig, devices: &[DeviceProfile], alloc: &Allocation) -> Result<Vec<f64>> {
    devices
        .iter()
        .enumerate()
        .map(|(n, d)| {
            let tc = comp_time(cfg, d, alloc.freq[n], alloc.resolution[n]).map_err(|e| e.at_device(n))?;
            let tu = uplink_time(cfg, d, alloc.power[n], alloc.bandwidth[n]).map_err(|e| e.at_device(n))?;
            Ok(tc + tu)
        })
        .collect()
}

/// Lists every violated constraint of the allocation; empty means feasible.
pub fn check_feasible(cfg: &SystemConfig, devices: &[DeviceProfile], alloc: &Allocation) -> Vec<Violation> {
    let n = devices.len();
    let mut out = Vec::new();
    for len in [alloc.power.len(), alloc.bandwidth.len(), alloc.freq.len(), alloc.resolution.len()] {
        if len != n {
            out.push(Violation::Length { expected: n, found: len });
            return out;
        }
    }
    let mut used = 0.0;
    for (i, d) in devices.iter().enumerate() {
        let p = alloc.power[i];
        if !(p >= d.p_min && p <= d.p_max) {
            out.push(Violation::PowerBox { device: i, value: p });
        }
        let f = alloc.freq[i];
        if !(f >= d.f_min && f <= d.f_max) {
            out.push(Violation::FreqBox { device: i, value: f });
        }
        let b = alloc.bandwidth[i];
        if !(b >= 0.0) {
            out.push(Violation::NegativeBandwidth { device: i, value: b });
        }
        used += b;
        let s = alloc.resolution[i];
        if s != cfg.s_min && s != cfg.s_max {
            out.push(Violation::Resolution { device: i, value: s });
        }
        let t = match (comp_time(cfg, d, f, s), uplink_time(cfg, d, p, b)) {
            (Ok(tc), Ok(tu)) => tc + tu,
            _ => f64::INFINITY,
        };
        if !(t <= alloc.deadline) {
            out.push(Violation::Deadline {
                device: i,
                required: t,
                deadline: alloc.deadline,
            });
        }
    }
    if !(used <= cfg.total_bandwidth) {
        out.push(Violation::BandwidthBudget {
            used,
            budget: cfg.total_bandwidth,
        });
    }
    out
}

/// Cost breakdown and weighted objective of a feasible allocation.
pub fn evaluate(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    weights: &Weights,
    alloc: &Allocation,
) -> Result<CostBreakdown> {
    let violations = check_feasible(cfg, devices, alloc);
    if !violations.is_empty() {
        return Err(Error::Infeasible(violations));
    }
    let mut e_trans = 0.0;
    let mut e_cmp = 0.0;
    let mut round_time: f64 = 0.0;
    let mut accuracy_sum = 0.0;
    for (n, d) in devices.iter().enumerate() {
        let (p, b, f, s) = (alloc.power[n], alloc.bandwidth[n], alloc.freq[n], alloc.resolution[n]);
        let tu = uplink_time(cfg, d, p, b).map_err(|e| e.at_device(n))?;
        let tc = comp_time(cfg, d, f, s).map_err(|e| e.at_device(n))?;
        e_trans += p * tu;
        e_cmp += comp_energy(cfg, d, f, s);
        round_time = round_time.max(tc + tu);
        accuracy_sum += accuracy(s);
    }
    let total_energy = cfg.rg() * (e_trans + e_cmp);
    let objective = weights.w1 * total_energy + weights.w2 * cfg.rg() * alloc.deadline - weights.rho * accuracy_sum;
    Ok(CostBreakdown {
        e_trans,
        e_cmp,
        total_energy,
        total_time: cfg.rg() * round_time,
        round_time,
        accuracy_sum,
        objective,
    })
}

/// Hessian of the concave rate `G(p, B) = B log2(1 + g p / (N0 B))` in `(p, B)`.
pub fn rate_hessian(cfg: &SystemConfig, dev: &DeviceProfile, p: f64, bw: f64) -> [[f64; 2]; 2] {
    let g = dev.gain;
    let n0 = cfg.noise_density;
    let denom = (g * p / (bw * n0) + 1.0).powi(2) * LN_2;
    let h_pp = -(g * g) / (bw * n0 * n0 * denom);
    let h_pb = g * g * p / (bw * bw * n0 * n0 * denom);
    let h_bb = -(g * g * p * p) / (bw * bw * bw * n0 * n0 * denom);
    [[h_pp, h_pb], [h_pb, h_bb]]
}

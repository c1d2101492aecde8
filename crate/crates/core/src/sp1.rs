//! Frequency / resolution / deadline block.
//!
//! With `(p, B)` held fixed the uplink times `t_up` are constants and the
//! block reads
//!
//! ```text
//! min  w1 R_g sum_n kappa a_n s_n^2 f_n^2 + w2 R_g T - rho sum_n Ahat(s_n)
//! s.t. a_n s_n^2 / f_n + t_up_n <= T,   f_min <= f_n <= f_max,   s_min <= s_n <= s_max
//! ```
//!
//! where `a_n = R_l zeta c_n D_n` and `Ahat` is the chord of the accuracy
//! curve between `s_min` and `s_max`.
//!
//! Two solvers live here. [`solve_sp1_dual`] / [`recover_primal`] are the
//! closed-form dual of the box-free problem followed by clamping. [`solve_sp1`]
//! handles the boxes exactly: for a trial deadline each device's best
//! `(f, s)` has a closed form, and the deadline is found by bisection on the
//! sum of the per-device deadline prices. When no box binds both give the
//! same point.

use crate::error::{Error, Result};
use crate::model::{accuracy, DeviceProfile, SystemConfig, Weights};
use crate::numerics::{bisect_bracket, BisectionSpec};

/// Chord of the accuracy curve through `s_min` and `s_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyLinearization {
    pub k_hat: f64,
    /// `A(s_min)`.
    pub intercept: f64,
    pub s_min: f64,
}

impl AccuracyLinearization {
    pub fn value(&self, s: f64) -> f64 {
        self.k_hat * (s - self.s_min) + self.intercept
    }
}

pub fn linearize_accuracy(cfg: &SystemConfig) -> AccuracyLinearization {
    let a_lo = accuracy(cfg.s_min);
    let a_hi = accuracy(cfg.s_max);
    AccuracyLinearization {
        k_hat: (a_hi - a_lo) / (cfg.s_max - cfg.s_min),
        intercept: a_lo,
        s_min: cfg.s_min,
    }
}

/// Degenerate weight settings, each handled by its analytic limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sp1Edge {
    None,
    /// `w2 = 0`: the deadline is free, all prices are zero.
    ZeroTimeWeight,
    /// `rho = 0`: the smallest resolution is optimal.
    ZeroAccuracyWeight,
    /// `w1 = 0`: energy is free, every device runs at `f_max`.
    ZeroEnergyWeight,
}

/// Dual solution: one deadline price per device and the equality multiplier.
#[derive(Debug, Clone, PartialEq)]
pub struct Sp1Dual {
    pub lambda: Vec<f64>,
    /// Multiplier of `sum lambda = w2 R_g`; equals the deadline implied by
    /// the dual when no box binds.
    pub eta: f64,
    pub edge: Sp1Edge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sp1Solution {
    pub lambda: Vec<f64>,
    pub freq: Vec<f64>,
    pub s_relaxed: Vec<f64>,
    pub s_rounded: Vec<f64>,
    pub deadline: f64,
    pub edge: Sp1Edge,
}

/// Maps a continuous resolution to `s_min` or `s_max`; the midpoint goes to
/// `s_max`.
pub fn round_resolution(cfg: &SystemConfig, s: f64) -> f64 {
    if s >= 0.5 * (cfg.s_min + cfg.s_max) {
        cfg.s_max
    } else {
        cfg.s_min
    }
}

fn edge_of(w: &Weights) -> Sp1Edge {
    if w.w2 == 0.0 {
        Sp1Edge::ZeroTimeWeight
    } else if w.w1 == 0.0 {
        Sp1Edge::ZeroEnergyWeight
    } else if w.rho == 0.0 {
        Sp1Edge::ZeroAccuracyWeight
    } else {
        Sp1Edge::None
    }
}

fn dual_shape() -> f64 {
    // 2^(-2/3) + 2^(1/3)
    2f64.powf(-2.0 / 3.0) + 2f64.cbrt()
}

/// Coefficients `C_n` of the dual term `-C_n lambda^(-2/3)`.
pub fn dual_coefficients(cfg: &SystemConfig, devices: &[DeviceProfile], w: &Weights) -> Vec<f64> {
    let lin = linearize_accuracy(cfg);
    let c = w.w1 * cfg.rg() * cfg.kappa;
    let shape = dual_shape();
    devices
        .iter()
        .map(|d| {
            let h = d.work_coeff(cfg) * c.cbrt();
            let num = w.rho * w.rho * lin.k_hat * lin.k_hat;
            num / (4.0 * h * shape)
        })
        .collect()
}

/// Value of the concave dual function at `lambda`.
pub fn dual_value(cfg: &SystemConfig, devices: &[DeviceProfile], w: &Weights, t_up: &[f64], lambda: &[f64]) -> f64 {
    let lin = linearize_accuracy(cfg);
    let coef = dual_coefficients(cfg, devices, w);
    let constant = devices.len() as f64 * w.rho * (lin.k_hat * cfg.s_min - lin.intercept);
    coef.iter()
        .zip(t_up)
        .zip(lambda)
        .map(|((&c, &t), &l)| {
            let smooth = if c == 0.0 {
                0.0
            } else if l > 0.0 {
                -c * l.powf(-2.0 / 3.0)
            } else {
                f64::NEG_INFINITY
            };
            smooth + t * l
        })
        .sum::<f64>()
        + constant
}

/// Maximizes the dual over `{sum lambda = w2 R_g, lambda >= 0}` via the
/// stationarity condition `(2/3) C_n lambda_n^(-5/3) + t_up_n = eta` and a
/// bisection on `eta`.
pub fn solve_sp1_dual(cfg: &SystemConfig, devices: &[DeviceProfile], w: &Weights, t_up: &[f64]) -> Result<Sp1Dual> {
    check_lengths(devices, t_up)?;
    let n = devices.len();
    let target = w.w2 * cfg.rg();
    let edge = edge_of(w);
    let t_max = t_up.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if target == 0.0 {
        return Ok(Sp1Dual {
            lambda: vec![0.0; n],
            eta: t_max,
            edge,
        });
    }
    let coef = dual_coefficients(cfg, devices, w);
    if w.w1 == 0.0 || coef.iter().all(|&c| c == 0.0) {
        // linear dual: all mass on the slowest uplinks
        let top: Vec<usize> = (0..n).filter(|&i| t_up[i] == t_max).collect();
        let mut lambda = vec![0.0; n];
        for &i in &top {
            lambda[i] = target / top.len() as f64;
        }
        return Ok(Sp1Dual { lambda, eta: t_max, edge });
    }

    let lam = |eta: f64, i: usize| -> f64 {
        let gap = eta - t_up[i];
        if gap <= 0.0 {
            f64::INFINITY
        } else {
            (2.0 / 3.0 * coef[i] / gap).powf(0.6)
        }
    };
    let total = |eta: f64| (0..n).map(|i| lam(eta, i)).sum::<f64>();
    // an upper end where the sum is at most half the target
    let mass: f64 = coef.iter().map(|&c| (2.0 / 3.0 * c).powf(0.6)).sum();
    let delta = (mass / (0.5 * target)).powf(5.0 / 3.0);
    let spec = BisectionSpec {
        lo: t_max,
        hi: t_max + delta.max(f64::EPSILON * t_max.abs().max(1e-300)),
        tol: f64::EPSILON * t_max.abs().max(f64::MIN_POSITIVE),
        max_iters: 4000,
    };
    let br = bisect_bracket(|eta| total(eta) - target, &spec)?;
    let eta = if br.hi > t_max { br.hi } else { br.mid() };
    let mut lambda: Vec<f64> = (0..n).map(|i| lam(eta, i)).collect();
    let s: f64 = lambda.iter().sum();
    if s.is_finite() && s > 0.0 {
        for l in &mut lambda {
            *l *= target / s;
        }
    }
    Ok(Sp1Dual { lambda, eta, edge })
}

/// Largest relative stationarity residual `|(2/3) C lambda^(-5/3) + t_up - eta| / eta`
/// over devices with positive price.
pub fn dual_stationarity_residual(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    w: &Weights,
    t_up: &[f64],
    dual: &Sp1Dual,
) -> f64 {
    let coef = dual_coefficients(cfg, devices, w);
    let mut worst: f64 = 0.0;
    for i in 0..devices.len() {
        let l = dual.lambda[i];
        if l > 0.0 && coef[i] > 0.0 {
            let g = 2.0 / 3.0 * coef[i] * l.powf(-5.0 / 3.0) + t_up[i];
            worst = worst.max((g - dual.eta).abs() / dual.eta.abs());
        }
    }
    worst
}

/// Closed-form primal recovery from dual prices, then box clamping.
pub fn recover_primal(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    w: &Weights,
    lambda: &[f64],
    t_up: &[f64],
) -> Result<Sp1Solution> {
    check_lengths(devices, t_up)?;
    let lin = linearize_accuracy(cfg);
    let c = w.w1 * cfg.rg() * cfg.kappa;
    let n = devices.len();
    let mut freq = Vec::with_capacity(n);
    let mut s_relaxed = Vec::with_capacity(n);
    let mut deadline: f64 = 0.0;
    for (i, d) in devices.iter().enumerate() {
        let l = lambda[i];
        let f_raw = if c == 0.0 { d.f_max } else { (l / (2.0 * c)).cbrt() };
        let f = f_raw.clamp(d.f_min, d.f_max);
        if f <= 0.0 {
            return Err(Error::ZeroFrequency { device: Some(i) });
        }
        let a = d.work_coeff(cfg);
        let denom = 2.0 * a * (c * f * f + l / f);
        let s_raw = if w.rho == 0.0 {
            cfg.s_min
        } else if denom > 0.0 {
            w.rho * lin.k_hat / denom
        } else {
            cfg.s_max
        };
        let s = s_raw.clamp(cfg.s_min, cfg.s_max);
        deadline = deadline.max(a * s * s / f + t_up[i]);
        freq.push(f);
        s_relaxed.push(s);
    }
    let s_rounded = s_relaxed.iter().map(|&s| round_resolution(cfg, s)).collect();
    Ok(Sp1Solution {
        lambda: lambda.to_vec(),
        freq,
        s_relaxed,
        s_rounded,
        deadline,
        edge: edge_of(w),
    })
}

/// Resolution range each device may take in [`solve_sp1_boxed`].
#[derive(Debug, Clone, Copy)]
pub enum ResolutionBox<'a> {
    /// Continuous on `[s_min, s_max]`.
    Relaxed,
    /// Pinned per device.
    Fixed(&'a [f64]),
}

/// Exact solution of the box-constrained block with continuous resolution.
pub fn solve_sp1(cfg: &SystemConfig, devices: &[DeviceProfile], w: &Weights, t_up: &[f64]) -> Result<Sp1Solution> {
    solve_sp1_boxed(cfg, devices, w, t_up, ResolutionBox::Relaxed, None)
}

#[derive(Debug, Clone, Copy)]
struct Local {
    a: f64,
    rk: f64,
    t_up: f64,
    s_lo: f64,
    s_hi: f64,
    f_min: f64,
    f_max: f64,
}

#[derive(Debug, Clone, Copy)]
struct Response {
    f: f64,
    s: f64,
    lambda: f64,
}

impl Local {
    /// Smallest deadline this device can meet.
    fn t_floor(&self) -> f64 {
        self.t_up + self.a * self.s_lo * self.s_lo / self.f_max
    }

    /// Best `(f, s)` when the device has `v` seconds of compute time, and the
    /// price `-dV/dv` of that time. `c = w1 R_g kappa`.
    fn respond(&self, c: f64, v: f64) -> Response {
        let a = self.a;
        let rk = self.rk;
        let s_cap_f = (self.f_max * v / a).sqrt();
        let f_limited = s_cap_f < self.s_hi;
        let s_hi = self.s_hi.min(s_cap_f).max(self.s_lo);

        if c == 0.0 {
            let s = if rk > 0.0 { s_hi } else { self.s_lo };
            let lambda = if rk > 0.0 && f_limited { rk * s / (2.0 * v) } else { 0.0 };
            return Response { f: self.f_max, s, lambda };
        }

        let s_kink = (self.f_min * v / a).sqrt();
        let s_high = (rk * v * v / (6.0 * c * a * a * a)).powf(0.2);
        let mut at_kink = false;
        let s_star = if self.f_min > 0.0 {
            let s_low = rk / (2.0 * c * a * self.f_min * self.f_min);
            if s_low <= s_kink {
                s_low
            } else if s_high >= s_kink {
                s_high
            } else {
                at_kink = true;
                s_kink
            }
        } else {
            s_high
        };
        let s = s_star.max(self.s_lo).min(s_hi);

        if f_limited && s_star >= s_hi && s == s_hi {
            let f = self.f_max;
            let lambda = (rk * s / (2.0 * v) - c * f * f * f).max(2.0 * c * f * f * f);
            return Response { f, s, lambda };
        }
        if at_kink && s == s_kink {
            let f3 = c * self.f_min.powi(3);
            let lambda = (rk * s / (2.0 * v) - f3).clamp(0.0, 2.0 * f3);
            return Response { f: self.f_min, s, lambda };
        }
        let f_req = a * s * s / v;
        if f_req <= self.f_min {
            return Response { f: self.f_min, s, lambda: 0.0 };
        }
        let f = f_req.min(self.f_max);
        Response { f, s, lambda: 2.0 * c * f * f * f }
    }
}

/// Exact solver with per-device resolution boxes and an optional fixed
/// deadline. With a fixed deadline the `w2` term is a constant and each
/// device is solved on its own.
pub fn solve_sp1_boxed(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    w: &Weights,
    t_up: &[f64],
    res: ResolutionBox<'_>,
    fixed_deadline: Option<f64>,
) -> Result<Sp1Solution> {
    check_lengths(devices, t_up)?;
    let lin = linearize_accuracy(cfg);
    let c = w.w1 * cfg.rg() * cfg.kappa;
    let n = devices.len();
    let locals: Vec<Local> = devices
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let (s_lo, s_hi) = match res {
                ResolutionBox::Relaxed => (cfg.s_min, cfg.s_max),
                ResolutionBox::Fixed(s) => (s[i], s[i]),
            };
            Local {
                a: d.work_coeff(cfg),
                rk: w.rho * lin.k_hat,
                t_up: t_up[i],
                s_lo,
                s_hi,
                f_min: d.f_min,
                f_max: d.f_max,
            }
        })
        .collect();
    let floors: Vec<f64> = locals.iter().map(Local::t_floor).collect();
    let (tight, t_lo) = floors
        .iter()
        .cloned()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, t)| if t > acc.1 { (i, t) } else { acc });

    let respond_all = |eta: f64| -> Vec<Response> { locals.iter().map(|l| l.respond(c, eta - l.t_up)).collect() };
    let finish = |resp: Vec<Response>, lambda: Vec<f64>, deadline: f64| -> Sp1Solution {
        let freq: Vec<f64> = resp.iter().map(|r| r.f).collect();
        let s_relaxed: Vec<f64> = resp.iter().map(|r| r.s).collect();
        let s_rounded = s_relaxed.iter().map(|&s| round_resolution(cfg, s)).collect();
        Sp1Solution {
            lambda,
            freq,
            s_relaxed,
            s_rounded,
            deadline,
            edge: edge_of(w),
        }
    };

    if let Some(t) = fixed_deadline {
        if t < t_lo {
            return Err(Error::DeadlineInfeasible {
                device: tight,
                required: t_lo,
                deadline: t,
            });
        }
        let resp = respond_all(t);
        let lambda = resp.iter().map(|r| r.lambda).collect();
        return Ok(finish(resp, lambda, t));
    }

    let target = w.w2 * cfg.rg();
    if target == 0.0 {
        // free deadline: every device idles at f_min with its energy-optimal s
        if let Some(i) = devices.iter().position(|d| d.f_min <= 0.0) {
            return Err(Error::Unbounded(format!(
                "no time weight and device {i} has f_min = 0: energy decreases without bound as f -> 0"
            )));
        }
        let mut resp = Vec::with_capacity(n);
        let mut deadline: f64 = 0.0;
        for l in &locals {
            let s = if c > 0.0 {
                (l.rk / (2.0 * c * l.a * l.f_min * l.f_min)).clamp(l.s_lo, l.s_hi)
            } else if l.rk > 0.0 {
                l.s_hi
            } else {
                l.s_lo
            };
            let f = if c > 0.0 { l.f_min } else { l.f_max };
            deadline = deadline.max(l.t_up + l.a * s * s / f);
            resp.push(Response { f, s, lambda: 0.0 });
        }
        return Ok(finish(resp, vec![0.0; n], deadline));
    }

    let price = |eta: f64| -> f64 { respond_all(eta).iter().map(|r| r.lambda).sum() };
    let at_floor = respond_all(t_lo);
    let sum_floor: f64 = at_floor.iter().map(|r| r.lambda).sum();
    if sum_floor <= target {
        // the deadline sits at its lower limit; the devices that set it
        // absorb the remaining price
        let mut lambda: Vec<f64> = at_floor.iter().map(|r| r.lambda).collect();
        let edge: Vec<usize> = (0..n).filter(|&i| floors[i] == t_lo).collect();
        let share = (target - sum_floor) / edge.len() as f64;
        for &i in &edge {
            lambda[i] += share;
        }
        return Ok(finish(at_floor, lambda, t_lo));
    }

    let spec = BisectionSpec {
        lo: t_lo,
        hi: 2.0 * t_lo,
        tol: 2.0 * f64::EPSILON * t_lo,
        max_iters: 4000,
    };
    let br = bisect_bracket(|eta| price(eta) - target, &spec).map_err(|_| {
        Error::Unbounded("deadline price never falls to w2 R_g; energy keeps decreasing with T".into())
    })?;
    let lo = respond_all(br.lo);
    let hi = respond_all(br.hi);
    let p_lo: f64 = lo.iter().map(|r| r.lambda).sum();
    let p_hi: f64 = hi.iter().map(|r| r.lambda).sum();
    let theta = if p_lo > p_hi { ((p_lo - target) / (p_lo - p_hi)).clamp(0.0, 1.0) } else { 1.0 };
    let mut lambda: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (1.0 - theta) * a.lambda + theta * b.lambda)
        .collect();
    let s: f64 = lambda.iter().sum();
    if s > 0.0 {
        for l in &mut lambda {
            *l *= target / s;
        }
    }
    Ok(finish(hi, lambda, br.hi))
}

/// Relaxed objective of the block (energy of computation, deadline and the
/// linearized accuracy), for fixed uplink times.
pub fn sp1_objective(cfg: &SystemConfig, devices: &[DeviceProfile], w: &Weights, freq: &[f64], s: &[f64], deadline: f64) -> f64 {
    let lin = linearize_accuracy(cfg);
    let mut e = 0.0;
    let mut acc = 0.0;
    for (i, d) in devices.iter().enumerate() {
        e += cfg.kappa * d.round_cycles(cfg, s[i]) * freq[i] * freq[i];
        acc += lin.value(s[i]);
    }
    w.w1 * cfg.rg() * e + w.w2 * cfg.rg() * deadline - w.rho * acc
}

fn check_lengths(devices: &[DeviceProfile], t_up: &[f64]) -> Result<()> {
    if devices.len() != t_up.len() {
        return Err(Error::InvalidConfig(format!(
            "{} devices but {} uplink times",
            devices.len(),
            t_up.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dev(c: f64) -> DeviceProfile {
        DeviceProfile {
            gain: 1e-11,
            cycles_per_std_sample: c,
            n_samples: 500.0,
            upload_bits: 28.1e3,
            p_min: 1e-3,
            p_max: 0.0158,
            f_min: 0.0,
            f_max: 2e9,
        }
    }

    fn w(w1: f64, w2: f64, rho: f64) -> Weights {
        Weights { w1, w2, rho }
    }

    #[test]
    fn linearization_endpoints() {
        let cfg = SystemConfig::default();
        let lin = linearize_accuracy(&cfg);
        assert_relative_eq!(lin.k_hat, 1.110_672e-3, max_relative = 1e-6);
        assert_eq!(lin.value(cfg.s_min), accuracy(cfg.s_min));
        assert_relative_eq!(lin.value(cfg.s_max), accuracy(cfg.s_max), max_relative = 1e-15);
    }

    #[test]
    fn rounding_threshold() {
        let cfg = SystemConfig::default();
        assert_eq!(round_resolution(&cfg, 400.0), 640.0);
        assert_eq!(round_resolution(&cfg, 399.9), 160.0);
        assert_eq!(round_resolution(&cfg, 160.0), 160.0);
    }

    #[test]
    fn dual_single_and_symmetric() {
        let cfg = SystemConfig::default();
        let ww = w(0.5, 0.5, 1.0);
        let d = solve_sp1_dual(&cfg, &[dev(2e4)], &ww, &[0.01]).unwrap();
        assert_relative_eq!(d.lambda[0], 0.5 * cfg.rg(), max_relative = 1e-12);

        let d = solve_sp1_dual(&cfg, &[dev(2e4), dev(2e4)], &ww, &[0.01, 0.01]).unwrap();
        assert_relative_eq!(d.lambda[0], d.lambda[1], max_relative = 1e-12);
        assert_relative_eq!(d.lambda[0], 0.25 * cfg.rg(), max_relative = 1e-12);
    }

    #[test]
    fn dual_feasible_and_stationary() {
        let cfg = SystemConfig::default();
        let ww = w(0.5, 0.5, 20.0);
        let devs = [dev(1e4), dev(2e4), dev(3e4)];
        let t_up = [0.02, 0.005, 0.011];
        let d = solve_sp1_dual(&cfg, &devs, &ww, &t_up).unwrap();
        let s: f64 = d.lambda.iter().sum();
        assert_relative_eq!(s, ww.w2 * cfg.rg(), max_relative = 1e-12);
        assert!(d.lambda.iter().all(|&l| l >= 0.0));
        assert!(dual_stationarity_residual(&cfg, &devs, &ww, &t_up, &d) <= 1e-8);
    }

    #[test]
    fn unit_frequency_from_price() {
        let cfg = SystemConfig::default();
        let ww = w(0.5, 0.5, 1.0);
        let lam = 2.0 * ww.w1 * cfg.rg() * cfg.kappa;
        let d = DeviceProfile { f_min: 0.0, ..dev(2e4) };
        let sol = recover_primal(&cfg, &[d], &ww, &[lam], &[0.01]).unwrap();
        assert_relative_eq!(sol.freq[0], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn zero_price_without_floor_is_an_error() {
        let cfg = SystemConfig::default();
        let ww = w(1.0, 0.0, 1.0);
        let err = recover_primal(&cfg, &[dev(2e4)], &ww, &[0.0], &[0.01]).unwrap_err();
        assert!(matches!(err, Error::ZeroFrequency { device: Some(0) }));
        let err = solve_sp1(&cfg, &[dev(2e4)], &ww, &[0.01]).unwrap_err();
        assert!(matches!(err, Error::Unbounded(_)));
    }

    /// When nothing is clamped the exact solver and the dual recovery agree,
    /// and the recovered point is stationary for the Lagrangian.
    #[test]
    fn exact_matches_dual_when_unclamped() {
        // rho chosen so that every resolution stays strictly inside its box
        let cfg = SystemConfig::default();
        let ww = w(0.5, 0.5, 50.0);
        let devs = [dev(1e4), dev(2e4), dev(3e4)];
        let t_up = [0.02, 0.005, 0.011];
        let dual = solve_sp1_dual(&cfg, &devs, &ww, &t_up).unwrap();
        let rec = recover_primal(&cfg, &devs, &ww, &dual.lambda, &t_up).unwrap();
        let exact = solve_sp1(&cfg, &devs, &ww, &t_up).unwrap();
        for i in 0..3 {
            assert!(rec.s_relaxed[i] > cfg.s_min && rec.s_relaxed[i] < cfg.s_max);
            assert!(rec.freq[i] < devs[i].f_max);
            assert_relative_eq!(rec.freq[i], exact.freq[i], max_relative = 1e-7);
            assert_relative_eq!(rec.s_relaxed[i], exact.s_relaxed[i], max_relative = 1e-7);
            assert_relative_eq!(dual.lambda[i], exact.lambda[i], max_relative = 1e-7);
        }
        assert_relative_eq!(rec.deadline, exact.deadline, max_relative = 1e-9);
        assert_relative_eq!(dual.eta, exact.deadline, max_relative = 1e-9);

        // Lagrangian partials in f and s
        let c = ww.w1 * cfg.rg() * cfg.kappa;
        let lin = linearize_accuracy(&cfg);
        for i in 0..3 {
            let a = devs[i].work_coeff(&cfg);
            let (f, s, l) = (rec.freq[i], rec.s_relaxed[i], dual.lambda[i]);
            let df = 2.0 * c * a * s * s * f - l * a * s * s / (f * f);
            let scale = 2.0 * c * a * s * s * f;
            assert!(df.abs() <= 1e-6 * scale);
            let ds = 2.0 * c * a * s * f * f - ww.rho * lin.k_hat + 2.0 * l * a * s / f;
            assert!(ds.abs() <= 1e-6 * ww.rho * lin.k_hat);
        }
    }

    /// The exact solver beats a brute-force search over (T, s) for N = 2.
    #[test]
    fn exact_beats_grid() {
        let cfg = SystemConfig::default();
        let ww = w(0.5, 0.5, 5.0);
        let devs = [
            DeviceProfile { f_min: 1e8, ..dev(1.2e4) },
            DeviceProfile { f_max: 1e9, ..dev(2.7e4) },
        ];
        let t_up = [0.03, 0.004];
        let exact = solve_sp1(&cfg, &devs, &ww, &t_up).unwrap();
        let best_exact = sp1_objective(&cfg, &devs, &ww, &exact.freq, &exact.s_relaxed, exact.deadline);
        let c = ww.w1 * cfg.rg() * cfg.kappa;
        let lin = linearize_accuracy(&cfg);
        let t_lo = (0..2)
            .map(|i| t_up[i] + devs[i].work_coeff(&cfg) * cfg.s_min * cfg.s_min / devs[i].f_max)
            .fold(0.0, f64::max);
        let step = 1e-3;
        let mut best = f64::INFINITY;
        for it in 0..2000 {
            let t = t_lo + step * it as f64;
            let mut total = ww.w2 * cfg.rg() * t;
            for (i, d) in devs.iter().enumerate() {
                let a = d.work_coeff(&cfg);
                let v = t - t_up[i];
                let mut dev_best = f64::INFINITY;
                for k in 0..=400 {
                    let s = cfg.s_min + (cfg.s_max - cfg.s_min) * k as f64 / 400.0;
                    let f = (a * s * s / v).max(d.f_min);
                    if f > d.f_max {
                        continue;
                    }
                    dev_best = dev_best.min(c * a * s * s * f * f - ww.rho * lin.value(s));
                }
                total += dev_best;
            }
            best = best.min(total);
        }
        // the deadline grid step bounds how far the grid can trail
        let grid_err = ww.w2 * cfg.rg() * step + 1e-3 * best.abs();
        assert!(best_exact <= best + 1e-12 * best.abs());
        assert!(best_exact >= best - grid_err);
    }

    #[test]
    fn fixed_deadline_mode() {
        let cfg = SystemConfig::default();
        let ww = w(1.0, 0.0, 0.0);
        let devs = [dev(1e4), dev(3e4)];
        let t_up = [0.01, 0.02];
        let s = [cfg.s_min, cfg.s_min];
        let sol = solve_sp1_boxed(&cfg, &devs, &ww, &t_up, ResolutionBox::Fixed(&s), Some(0.5)).unwrap();
        for i in 0..2 {
            let a = devs[i].work_coeff(&cfg);
            assert_relative_eq!(a * s[i] * s[i] / sol.freq[i] + t_up[i], 0.5, max_relative = 1e-12);
        }
        let err = solve_sp1_boxed(&cfg, &devs, &ww, &t_up, ResolutionBox::Fixed(&s), Some(0.021)).unwrap_err();
        assert!(matches!(err, Error::DeadlineInfeasible { device: 1, .. }));
    }

    #[test]
    fn edge_modes() {
        let cfg = SystemConfig::default();
        let devs = [dev(1e4), dev(3e4)];
        let t_up = [0.01, 0.02];
        // rho = 0: smallest resolution
        let sol = solve_sp1(&cfg, &devs, &w(0.5, 0.5, 0.0), &t_up).unwrap();
        assert!(sol.s_relaxed.iter().all(|&s| s == cfg.s_min));
        assert_eq!(sol.edge, Sp1Edge::ZeroAccuracyWeight);
        // w1 = 0: full speed
        let sol = solve_sp1(&cfg, &devs, &w(0.0, 1.0, 1.0), &t_up).unwrap();
        assert!(sol.freq.iter().zip(&devs).all(|(&f, d)| f == d.f_max));
        // w2 = 0 with a frequency floor: idle at f_min
        let floored: Vec<DeviceProfile> = devs.iter().map(|d| DeviceProfile { f_min: 1e8, ..d.clone() }).collect();
        let sol = solve_sp1(&cfg, &floored, &w(1.0, 0.0, 1.0), &t_up).unwrap();
        assert!(sol.freq.iter().all(|&f| f == 1e8));
        assert!(sol.lambda.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn deadline_at_lower_limit() {
        // time-heavy weights with tiny accuracy weight push T to its minimum
        let cfg = SystemConfig::default();
        let ww = w(1e-6, 1.0 - 1e-6, 0.0);
        let devs = [dev(1e4), dev(3e4)];
        let t_up = [0.01, 0.02];
        let sol = solve_sp1(&cfg, &devs, &ww, &t_up).unwrap();
        let a = devs[1].work_coeff(&cfg);
        assert_relative_eq!(sol.deadline, 0.02 + a * cfg.s_min * cfg.s_min / 2e9, max_relative = 1e-12);
        let s: f64 = sol.lambda.iter().sum();
        assert_relative_eq!(s, ww.w2 * cfg.rg(), max_relative = 1e-12);
    }
}

//! Power / bandwidth block.
//!
//! For fixed frequencies, resolutions and deadline the remaining cost is the
//! sum of ratios `w1 R_g sum_n p_n d_n / G_n(p_n, B_n)` under per-device rate
//! floors `G_n >= r_n`, the bandwidth budget and the power boxes. It is
//! solved by the parametric Newton scheme over auxiliary variables
//! `(nu, beta)`: for fixed `(nu, beta)` the inner problem
//!
//! ```text
//! min  sum_n nu_n (p_n d_n - beta_n G_n(p_n, B_n))
//! ```
//!
//! is convex and separable up to the budget, and is solved exactly by
//! pricing bandwidth at `mu` and bisecting on `mu`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{comp_time, data_rate, DeviceProfile, SystemConfig, Weights};
use crate::numerics::{bisect_bracket, lambert_w0, BisectionSpec};

const FLOOR: f64 = 1e-300;

/// Minimum uplink rate per device implied by the deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFloor {
    pub r_min: Vec<f64>,
}

/// `r_n = d_n / (T - T_cmp,n)`, the rate each device needs to finish its
/// upload by the deadline.
pub fn rate_floor(cfg: &SystemConfig, devices: &[DeviceProfile], freq: &[f64], s: &[f64], deadline: f64) -> Result<RateFloor> {
    let mut r_min = Vec::with_capacity(devices.len());
    for (n, d) in devices.iter().enumerate() {
        let tc = comp_time(cfg, d, freq[n], s[n]).map_err(|e| e.at_device(n))?;
        let slack = deadline - tc;
        if !(slack > 0.0) {
            return Err(Error::DeadlineInfeasible {
                device: n,
                required: tc,
                deadline,
            });
        }
        r_min.push(d.upload_bits / slack);
    }
    Ok(RateFloor { r_min })
}

/// Norm used on the residual vector `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiNorm {
    Two,
    Inf,
}

impl PhiNorm {
    pub fn of(&self, v: &[f64]) -> f64 {
        match self {
            PhiNorm::Two => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            PhiNorm::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sp2Options {
    /// Step shrink factor of the line search.
    pub xi: f64,
    /// Required fraction of decrease in the line search.
    pub eps: f64,
    pub max_iters: usize,
    /// Stop when `|phi| <= rel_tol (1 + |phi_init|)`.
    pub rel_tol: f64,
    pub norm: PhiNorm,
    /// Largest exponent `j` tried in the line search.
    pub max_j: u32,
}

impl Default for Sp2Options {
    fn default() -> Self {
        Sp2Options {
            xi: 0.5,
            eps: 0.01,
            max_iters: 100,
            rel_tol: 1e-8,
            norm: PhiNorm::Two,
            max_j: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sp2TraceRecord {
    pub iteration: usize,
    pub phi_norm: f64,
    /// Accepted line-search exponent.
    pub j: u32,
    /// Sum-of-ratios energy term after the step.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sp2State {
    pub nu: Vec<f64>,
    pub beta: Vec<f64>,
    pub power: Vec<f64>,
    pub bandwidth: Vec<f64>,
    /// Bandwidth price of the last inner solve.
    pub mu: f64,
    /// Rate-floor multipliers of the last inner solve.
    pub tau: Vec<f64>,
    pub phi_norm: f64,
    pub phi_init: f64,
    pub iteration: usize,
    pub converged: bool,
    pub trace: Vec<Sp2TraceRecord>,
}

/// `G_n(p, B)` for every device.
pub fn rates(cfg: &SystemConfig, devices: &[DeviceProfile], p: &[f64], b: &[f64]) -> Vec<f64> {
    devices.iter().enumerate().map(|(n, d)| data_rate(cfg, d, p[n], b[n])).collect()
}

/// `w1 R_g sum_n p_n d_n / G_n`, the transmission energy part of the objective.
pub fn sum_of_ratios(cfg: &SystemConfig, w: &Weights, devices: &[DeviceProfile], p: &[f64], b: &[f64]) -> f64 {
    let g = rates(cfg, devices, p, b);
    w.w1 * cfg.rg() * devices.iter().enumerate().map(|(n, d)| p[n] * d.upload_bits / g[n]).sum::<f64>()
}

pub fn init_nu_beta(
    cfg: &SystemConfig,
    w: &Weights,
    devices: &[DeviceProfile],
    p: &[f64],
    b: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = rates(cfg, devices, p, b);
    let mut nu = Vec::with_capacity(devices.len());
    let mut beta = Vec::with_capacity(devices.len());
    for (n, d) in devices.iter().enumerate() {
        if !(g[n] > 0.0) {
            return Err(Error::ZeroRate { device: Some(n) });
        }
        nu.push(w.w1 * cfg.rg() / g[n]);
        beta.push(p[n] * d.upload_bits / g[n]);
    }
    Ok((nu, beta))
}

/// Residual of the fixed-point conditions: `[-p d + beta G ; -w1 R_g + nu G]`.
pub fn phi(
    cfg: &SystemConfig,
    w: &Weights,
    devices: &[DeviceProfile],
    nu: &[f64],
    beta: &[f64],
    p: &[f64],
    b: &[f64],
) -> Vec<f64> {
    let g = rates(cfg, devices, p, b);
    let n = devices.len();
    let mut out = vec![0.0; 2 * n];
    for (i, d) in devices.iter().enumerate() {
        out[i] = -p[i] * d.upload_bits + beta[i] * g[i];
        out[n + i] = -w.w1 * cfg.rg() + nu[i] * g[i];
    }
    out
}

/// `e^{-u} + u - 1`, accurate for small `u`.
fn exm(u: f64) -> f64 {
    if u < 0.1 {
        let mut term = u * u / 2.0;
        let mut sum = term;
        for k in 3..=18 {
            term *= -u / k as f64;
            sum += term;
        }
        sum
    } else {
        (-u).exp_m1() + u
    }
}

/// `e^u (u - 1) + 1`, accurate for small `u`.
fn epm(u: f64) -> f64 {
    if u < 0.1 {
        // sum_{k>=2} (k-1) u^k / k!
        let mut pow_fact = u; // u^k / k!
        let mut sum = 0.0;
        for k in 2..=18 {
            pow_fact *= u / k as f64;
            sum += (k - 1) as f64 * pow_fact;
        }
        sum
    } else {
        u * u.exp() - u.exp_m1()
    }
}

fn newton_polish<F: Fn(f64) -> f64, D: Fn(f64) -> f64>(mut u: f64, target: f64, f: F, df: D) -> f64 {
    for _ in 0..60 {
        let d = df(u);
        if !(d > 0.0) {
            break;
        }
        let step = (f(u) - target) / d;
        let next = (u - step).max(0.5 * u);
        let done = (next - u).abs() <= 2.0 * f64::EPSILON * next;
        u = next;
        if done {
            break;
        }
    }
    u
}

/// Solves `e^{-u} + u - 1 = m` for `u > 0`. With `u = ln(1 + snr)` this is
/// the bandwidth stationarity condition when the rate floor is slack; the
/// closed form is `u = 1 + m + W0(-e^{-1-m})`.
pub fn slack_log_snr(m: f64) -> Result<f64> {
    if m <= 0.0 {
        return Ok(0.0);
    }
    if m > 1e15 {
        return Ok(m + 1.0);
    }
    let guess = if m > 1e-2 {
        1.0 + m + lambert_w0(-(-1.0 - m).exp())?
    } else {
        (2.0 * m).sqrt() + m / 3.0
    };
    Ok(newton_polish(guess.max(f64::MIN_POSITIVE), m, exm, |u| -(-u).exp_m1()))
}

/// Solves `e^u (u - 1) + 1 = q` for `u > 0`, the optimality condition of a
/// device whose rate floor binds; closed form `u = 1 + W0((q - 1) / e)`.
pub fn floor_log_snr(q: f64) -> Result<f64> {
    if q <= 0.0 {
        return Ok(0.0);
    }
    let guess = if q > 1e-2 {
        1.0 + lambert_w0((q - 1.0) / std::f64::consts::E)?
    } else {
        (2.0 * q).sqrt() - 2.0 * q / 3.0
    };
    if q > 1e250 {
        return Ok(guess);
    }
    Ok(newton_polish(guess.max(f64::MIN_POSITIVE), q, epm, |u| u * u.exp()))
}

/// Bandwidth at which the device reaches rate `r` with power `p`.
pub fn min_bandwidth(cfg: &SystemConfig, dev: &DeviceProfile, p: f64, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Ok(0.0);
    }
    let q = r * LN_2 * cfg.noise_density / (dev.gain * p);
    if !(q < 1.0) {
        return Err(Error::RateUnreachable { device: 0, rate: r });
    }
    // ln(1 + x) = q x with x the SNR; Newton from the right converges
    // monotonically since the left side is concave
    let mut x: f64 = 1.0;
    while (x.ln_1p() - q * x) >= 0.0 {
        x *= 2.0;
    }
    for _ in 0..200 {
        let h = x.ln_1p() - q * x;
        let dh = 1.0 / (1.0 + x) - q;
        if !(dh < 0.0) {
            break;
        }
        let next = x - h / dh;
        if !(next > 0.0) || next >= x {
            break;
        }
        let done = x - next <= 2.0 * f64::EPSILON * next;
        x = next;
        if done {
            break;
        }
    }
    Ok(dev.gain * p / (cfg.noise_density * x))
}

#[derive(Debug, Clone, Copy)]
struct DevInner {
    j: f64,
    b: f64,
    r: f64,
    g: f64,
    n0: f64,
    p_min: f64,
    p_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Point {
    p: f64,
    bw: f64,
    tau: f64,
}

impl DevInner {
    fn respond(&self, mu: f64, dev: &DeviceProfile, cfg: &SystemConfig) -> Result<Point> {
        let (j, b, r, g, n0) = (self.j, self.b, self.r, self.g, self.n0);
        // floor slack: log(1 + snr) fixed by the price
        let u_u = slack_log_snr(mu * LN_2 / b)?;
        let snr_u = u_u.exp_m1();
        // power at which the slack-floor bandwidth just meets the floor
        let p_switch = if u_u > 700.0 {
            f64::INFINITY
        } else {
            r * n0 * snr_u * LN_2 / (g * u_u)
        };
        // sign of the marginal cost of power on the slack branch
        let slope = j * LN_2 * u_u.exp() - b;

        let u_f = floor_log_snr(mu / j)?;
        let bw_f = r * LN_2 / u_f;
        let p_f = u_f.exp_m1() * n0 * bw_f / g;

        let p_glob = if slope > 0.0 { p_f.min(p_switch) } else { f64::INFINITY };
        let p = p_glob.clamp(self.p_min, self.p_max);
        let (bw, binding) = if p >= p_switch {
            (g * p / (n0 * snr_u), false)
        } else if p == p_f {
            (bw_f, true)
        } else {
            (min_bandwidth(cfg, dev, p, r)?, true)
        };
        let tau = if binding {
            let snr = g * p / (n0 * bw);
            let psi = exm(snr.ln_1p()) / LN_2;
            (mu / psi - b).max(0.0)
        } else {
            0.0
        };
        Ok(Point { p, bw, tau })
    }
}

/// Solution of the inner convex problem.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSolution {
    pub power: Vec<f64>,
    pub bandwidth: Vec<f64>,
    pub mu: f64,
    pub tau: Vec<f64>,
}

fn build(cfg: &SystemConfig, devices: &[DeviceProfile], nu: &[f64], beta: &[f64], floor: &RateFloor) -> Vec<DevInner> {
    devices
        .iter()
        .enumerate()
        .map(|(n, d)| {
            let nu_n = nu[n].max(FLOOR);
            DevInner {
                j: (nu_n * d.upload_bits * cfg.noise_density / d.gain).max(FLOOR),
                b: (nu_n * beta[n].max(FLOOR)).max(FLOOR),
                r: floor.r_min[n],
                g: d.gain,
                n0: cfg.noise_density,
                p_min: d.p_min,
                p_max: d.p_max,
            }
        })
        .collect()
}

/// Checks that the floors can be met at all and returns the least bandwidth
/// each device needs at full power.
pub fn floor_bandwidths(cfg: &SystemConfig, devices: &[DeviceProfile], floor: &RateFloor) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(devices.len());
    for (n, d) in devices.iter().enumerate() {
        let bw = min_bandwidth(cfg, d, d.p_max, floor.r_min[n]).map_err(|e| match e {
            Error::RateUnreachable { rate, .. } => Error::RateUnreachable { device: n, rate },
            e => e,
        })?;
        out.push(bw);
    }
    let need: f64 = out.iter().sum();
    if need > cfg.total_bandwidth {
        return Err(Error::BudgetExhausted {
            required: need,
            budget: cfg.total_bandwidth,
        });
    }
    Ok(out)
}

/// Exact minimizer of the inner problem for fixed `(nu, beta)`.
///
/// Each device's best response to a bandwidth price `mu` is in closed form
/// (two Lambert-W type equations and, when a power bound is hit, one scalar
/// Newton solve). The total bandwidth demand is non-increasing in `mu`; the
/// price is bisected in log space until the budget is met. A jump in the
/// demand (a device indifferent between its power bounds) is bridged by a
/// convex combination of the two bracketing responses.
pub fn solve_inner(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    nu: &[f64],
    beta: &[f64],
    floor: &RateFloor,
) -> Result<InnerSolution> {
    floor_bandwidths(cfg, devices, floor)?;
    let locals = build(cfg, devices, nu, beta, floor);
    let respond = |mu: f64| -> Result<Vec<Point>> {
        locals
            .iter()
            .zip(devices)
            .enumerate()
            .map(|(n, (l, d))| l.respond(mu, d, cfg).map_err(|e| e.at_device(n)))
            .collect()
    };
    let demand = |pts: &[Point]| pts.iter().map(|x| x.bw).sum::<f64>();
    let budget = cfg.total_bandwidth;

    // geometric bracketing around a price of the right magnitude
    let mut mu_lo = locals.iter().map(|l| l.b).fold(0.0, f64::max).max(FLOOR);
    let mut mu_hi = mu_lo;
    let mut steps = 0;
    while demand(&respond(mu_lo)?) <= budget {
        mu_lo /= 16.0;
        steps += 1;
        if steps > 300 || mu_lo < 1e-300 {
            return Err(Error::NoMultiplierRoot("bandwidth demand stays below the budget".into()));
        }
    }
    steps = 0;
    while demand(&respond(mu_hi)?) > budget {
        mu_hi *= 16.0;
        steps += 1;
        if steps > 300 || !mu_hi.is_finite() {
            return Err(Error::NoMultiplierRoot("bandwidth demand stays above the budget".into()));
        }
    }

    let mut failure = None;
    let spec = BisectionSpec {
        lo: mu_lo.ln(),
        hi: mu_hi.ln(),
        tol: 1e-300,
        max_iters: 2000,
    };
    let br = bisect_bracket(
        |x| match respond(x.exp()) {
            Ok(pts) => demand(&pts) - budget,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        &spec,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let (lo_x, hi_x) = if br.lo < br.hi { (br.lo, br.hi) } else { (br.lo, br.lo) };
    let lo = respond(lo_x.exp())?;
    let hi = respond(hi_x.exp())?;
    let d_lo = demand(&lo);
    let d_hi = demand(&hi);

    let mut theta = if d_lo > d_hi { ((d_lo - budget) / (d_lo - d_hi)).clamp(0.0, 1.0) } else { 1.0 };
    let mix = |theta: f64| -> Vec<Point> {
        lo.iter()
            .zip(&hi)
            .zip(devices)
            .map(|((a, b), d)| Point {
                // the blend of two in-box powers can land an ulp outside
                p: ((1.0 - theta) * a.p + theta * b.p).clamp(d.p_min, d.p_max),
                bw: (1.0 - theta) * a.bw + theta * b.bw,
                tau: (1.0 - theta) * a.tau + theta * b.tau,
            })
            .collect()
    };
    let mut pts = mix(theta);
    for _ in 0..20 {
        let excess = demand(&pts) - budget;
        if excess <= 0.0 || theta >= 1.0 {
            break;
        }
        theta = (theta + excess / (d_lo - d_hi).max(f64::MIN_POSITIVE) + 4.0 * f64::EPSILON).min(1.0);
        pts = mix(theta);
    }
    Ok(InnerSolution {
        power: pts.iter().map(|x| x.p).collect(),
        bandwidth: pts.iter().map(|x| x.bw).collect(),
        mu: (0.5 * (lo_x + hi_x)).exp(),
        tau: pts.iter().map(|x| x.tau).collect(),
    })
}

/// Relative first-order residuals of an inner solution.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktResiduals {
    /// Power stationarity, including the power-box multipliers.
    pub stationarity_p: f64,
    /// Bandwidth stationarity.
    pub stationarity_b: f64,
    /// `tau (G - r)`.
    pub slackness_floor: f64,
    /// `mu (sum B - B_total)`.
    pub slackness_budget: f64,
    /// Largest relative rate-floor violation.
    pub floor_violation: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity_p
            .max(self.stationarity_b)
            .max(self.slackness_floor)
            .max(self.slackness_budget)
            .max(self.floor_violation)
    }
}

pub fn inner_kkt_residuals(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    nu: &[f64],
    beta: &[f64],
    floor: &RateFloor,
    sol: &InnerSolution,
) -> KktResiduals {
    let locals = build(cfg, devices, nu, beta, floor);
    let mut k = KktResiduals::default();
    let mu = sol.mu;
    for (n, (l, d)) in locals.iter().zip(devices).enumerate() {
        let (p, bw, tau) = (sol.power[n], sol.bandwidth[n], sol.tau[n]);
        let snr = d.gain * p / (cfg.noise_density * bw);
        let scale = l.b + tau;
        // dG/dB and dG/dp
        let g_b = exm(snr.ln_1p()) / LN_2;
        let g_p = d.gain / (cfg.noise_density * (1.0 + snr) * LN_2);
        let rb = (mu - scale * g_b).abs() / mu.max(scale * g_b);
        k.stationarity_b = k.stationarity_b.max(rb);

        let nu_d = nu[n].max(FLOOR) * d.upload_bits;
        // the power-box multiplier absorbs (b + tau) dG/dp - nu d with the sign
        // its bound allows
        let raw = scale * g_p - nu_d;
        let at_hi = p >= d.p_max * (1.0 - 1e-12);
        let at_lo = p <= d.p_min * (1.0 + 1e-12);
        let rp = if (raw > 0.0 && at_hi) || (raw < 0.0 && at_lo) { 0.0 } else { raw.abs() / nu_d };
        k.stationarity_p = k.stationarity_p.max(rp);

        let g = data_rate(cfg, d, p, bw);
        let r = floor.r_min[n];
        if r > 0.0 {
            k.slackness_floor = k.slackness_floor.max(tau * (g - r).abs() / (scale * r));
            k.floor_violation = k.floor_violation.max(((r - g) / r).max(0.0));
        }
    }
    let used: f64 = sol.bandwidth.iter().sum();
    k.slackness_budget = (used - cfg.total_bandwidth).abs() / cfg.total_bandwidth;
    k
}

/// When energy carries no weight any feasible point is optimal; give every
/// device full power, its minimum bandwidth, and share the rest in
/// proportion to the floors.
fn time_only(cfg: &SystemConfig, devices: &[DeviceProfile], floor: &RateFloor) -> Result<(Vec<f64>, Vec<f64>)> {
    let base = floor_bandwidths(cfg, devices, floor)?;
    let left = cfg.total_bandwidth - base.iter().sum::<f64>();
    let r_sum: f64 = floor.r_min.iter().sum();
    let n = devices.len() as f64;
    let bw = base
        .iter()
        .zip(&floor.r_min)
        .map(|(&b, &r)| b + left * if r_sum > 0.0 { r / r_sum } else { 1.0 / n })
        .collect();
    Ok((devices.iter().map(|d| d.p_max).collect(), bw))
}

/// Parametric Newton iteration over `(nu, beta)` with the backtracking rule
/// `|phi(new)| <= (1 - eps xi^j) |phi(old)|`.
pub fn jong_solve(
    cfg: &SystemConfig,
    w: &Weights,
    devices: &[DeviceProfile],
    floor: &RateFloor,
    p0: &[f64],
    b0: &[f64],
    opts: &Sp2Options,
) -> Result<Sp2State> {
    jong_solve_priced(cfg, w, devices, floor, &vec![0.0; devices.len()], p0, b0, opts)
}

/// As [`jong_solve`] with each device's uplink time also charged at
/// `time_price[n]` objective units per second, so the ratios become
/// `(w1 R_g p_n + time_price_n) d_n / G_n`. With `w1 = 0` the prices are
/// ignored.
///
/// With nonzero prices the inner solution can jump between a rate floor and
/// the power cap as `(nu, beta)` move, so the residual need not be
/// continuous. A stalled line search then ends the iteration with
/// `converged = false` and the last (feasible) iterate instead of an error.
#[allow(clippy::too_many_arguments)]
pub fn jong_solve_priced(
    cfg: &SystemConfig,
    w: &Weights,
    devices: &[DeviceProfile],
    floor: &RateFloor,
    time_price: &[f64],
    p0: &[f64],
    b0: &[f64],
    opts: &Sp2Options,
) -> Result<Sp2State> {
    let n = devices.len();
    if time_price.len() != n || time_price.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidConfig("time prices must be finite, non-negative, one per device".into()));
    }
    if w.w1 == 0.0 {
        let (p, bw) = time_only(cfg, devices, floor)?;
        let (_, beta) = init_nu_beta(cfg, w, devices, &p, &bw)?;
        return Ok(Sp2State {
            nu: vec![0.0; n],
            beta,
            power: p,
            bandwidth: bw,
            mu: 0.0,
            tau: vec![0.0; n],
            phi_norm: 0.0,
            phi_init: 0.0,
            iteration: 0,
            converged: true,
            trace: Vec::new(),
        });
    }
    // numerator offsets in units of p d
    let off: Vec<f64> = (0..n).map(|i| time_price[i] * devices[i].upload_bits / (w.w1 * cfg.rg())).collect();
    let (mut nu, mut beta) = init_nu_beta(cfg, w, devices, p0, b0)?;
    let g0 = rates(cfg, devices, p0, b0);
    for i in 0..n {
        beta[i] += off[i] / g0[i];
    }
    let phi_off = |nu: &[f64], beta: &[f64], p: &[f64], b: &[f64]| {
        let mut v = phi(cfg, w, devices, nu, beta, p, b);
        for i in 0..n {
            v[i] -= off[i];
        }
        v
    };
    let priced = off.iter().any(|&o| o > 0.0);
    let mut sol = solve_inner(cfg, devices, &nu, &beta, floor)?;
    let mut norm = opts.norm.of(&phi_off(&nu, &beta, &sol.power, &sol.bandwidth));
    let phi_init = norm;
    let tol = opts.rel_tol * (1.0 + phi_init);
    let mut trace = Vec::new();
    let mut iteration = 0;
    while norm > tol && iteration < opts.max_iters {
        let g = rates(cfg, devices, &sol.power, &sol.bandwidth);
        let s_beta: Vec<f64> = (0..n).map(|i| (sol.power[i] * devices[i].upload_bits + off[i]) / g[i] - beta[i]).collect();
        let s_nu: Vec<f64> = (0..n).map(|i| w.w1 * cfg.rg() / g[i] - nu[i]).collect();
        let mut accepted = None;
        for j in 0..=opts.max_j {
            let t = opts.xi.powi(j as i32);
            let beta_t: Vec<f64> = (0..n).map(|i| (beta[i] + t * s_beta[i]).max(FLOOR)).collect();
            let nu_t: Vec<f64> = (0..n).map(|i| (nu[i] + t * s_nu[i]).max(FLOOR)).collect();
            let sol_t = solve_inner(cfg, devices, &nu_t, &beta_t, floor)?;
            let norm_t = opts.norm.of(&phi_off(&nu_t, &beta_t, &sol_t.power, &sol_t.bandwidth));
            if norm_t <= (1.0 - opts.eps * t) * norm {
                accepted = Some((j, nu_t, beta_t, sol_t, norm_t));
                break;
            }
        }
        let Some((j, nu_t, beta_t, sol_t, norm_t)) = accepted else {
            if priced {
                break;
            }
            return Err(Error::LineSearchStalled {
                iteration,
                phi_norm: norm,
                max_j: opts.max_j,
            });
        };
        nu = nu_t;
        beta = beta_t;
        sol = sol_t;
        norm = norm_t;
        iteration += 1;
        trace.push(Sp2TraceRecord {
            iteration,
            phi_norm: norm,
            j,
            objective: sum_of_ratios(cfg, w, devices, &sol.power, &sol.bandwidth),
        });
    }
    Ok(Sp2State {
        nu,
        beta,
        power: sol.power,
        bandwidth: sol.bandwidth,
        mu: sol.mu,
        tau: sol.tau,
        phi_norm: norm,
        phi_init,
        iteration,
        converged: norm <= tol,
        trace,
    })
}

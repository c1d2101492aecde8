//! Self-check suite run by `flmar validate`: special functions, concavity of
//! the rate, first-order conditions of both blocks, and grid-oracle
//! comparisons on tiny instances.

use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bcd::{bcd_solve, initial_allocation, Phase};
use crate::config::RunConfig;
use crate::harness::oracle::oracle_grid_search;
use crate::harness::scenario::{gen_topology, ScenarioSpec};
use crate::model::{rate_hessian, uplink_time, DeviceProfile, SystemConfig};
use crate::numerics::lambert_w0;
use crate::sp1::{dual_stationarity_residual, solve_sp1, solve_sp1_dual};
use crate::sp2::{inner_kkt_residuals, jong_solve, rate_floor, rates, InnerSolution};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidateOptions {
    /// Relative error injected into the converged `nu` before the
    /// first-order checks. Only useful to confirm those checks can fail.
    pub perturb_nu: f64,
    /// Instances per solver check.
    pub instances: usize,
}

impl ValidateOptions {
    pub fn new() -> Self {
        ValidateOptions { perturb_nu: 0.0, instances: 10 }
    }
}

fn check(name: &'static str, pass: bool, detail: String) -> CheckResult {
    CheckResult { name, pass, detail }
}

fn err_check(name: &'static str, e: impl std::fmt::Display) -> CheckResult {
    check(name, false, format!("solver error: {e}"))
}

fn instances(run: &RunConfig, n: usize, count: usize, base: u64) -> crate::Result<(SystemConfig, Vec<Vec<DeviceProfile>>)> {
    let cfg = SystemConfig { n_devices: n, ..run.system_config() };
    let topo = (0..count as u64)
        .map(|i| gen_topology(&ScenarioSpec { n_devices: n, seed: run.seed.wrapping_add(base + i), ..run.scenario_spec() }))
        .collect::<crate::Result<Vec<_>>>()?;
    Ok((cfg, topo))
}

fn lambert() -> CheckResult {
    let mut worst: f64 = 0.0;
    let (lo, hi) = (1e-12f64.ln(), 1e6f64.ln());
    for i in 0..2000 {
        let x = -1.0 / E + (lo + (hi - lo) * i as f64 / 1999.0).exp();
        match lambert_w0(x) {
            Ok(w) => worst = worst.max((w * w.exp() - x).abs() / x.abs().max(1.0)),
            Err(e) => return err_check("lambert-w round trip", e),
        }
    }
    check("lambert-w round trip", worst <= 1e-12, format!("max residual {worst:.2e}"))
}

fn concavity(run: &RunConfig) -> CheckResult {
    let cfg = run.system_config();
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let base = DeviceProfile {
        gain: 1e-10,
        cycles_per_std_sample: 2e4,
        n_samples: 500.0,
        upload_bits: 28_100.0,
        p_min: 0.0,
        p_max: 1.0,
        f_min: 0.0,
        f_max: 2e9,
    };
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..2000 {
        let d = DeviceProfile { gain: 10f64.powf(rng.random_range(-14.0..-7.0)), ..base.clone() };
        let h = rate_hessian(&cfg, &d, 10f64.powf(rng.random_range(-5.0..0.0)), 10f64.powf(rng.random_range(3.0..8.0)));
        let x: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let q = x[0] * x[0] * h[0][0] + 2.0 * x[0] * x[1] * h[0][1] + x[1] * x[1] * h[1][1];
        let fro = (h[0][0].powi(2) + 2.0 * h[0][1].powi(2) + h[1][1].powi(2)).sqrt();
        worst = worst.max(q / ((x[0] * x[0] + x[1] * x[1]) * fro));
    }
    check("rate concavity", worst <= 1e-12, format!("max scaled x'Hx {worst:.2e}"))
}

fn sp2_checks(run: &RunConfig, opts: &ValidateOptions) -> Vec<CheckResult> {
    const FP: &str = "power/bandwidth fixed point";
    const KKT: &str = "power/bandwidth KKT residuals";
    let fail_both = |e: String| vec![err_check(FP, &e), err_check(KKT, &e)];
    let w = match run.weights() {
        Ok(w) => w,
        Err(e) => return fail_both(e.to_string()),
    };
    let (cfg, topo) = match instances(run, 5, opts.instances, 1000) {
        Ok(x) => x,
        Err(e) => return fail_both(e.to_string()),
    };
    let sp2 = run.bcd_config().sp2;
    let mut fp: f64 = 0.0;
    let mut kkt: f64 = 0.0;
    for devices in &topo {
        let solved = (|| {
            let init = initial_allocation(&cfg, devices)?;
            let t_up = devices
                .iter()
                .enumerate()
                .map(|(n, d)| uplink_time(&cfg, d, init.power[n], init.bandwidth[n]))
                .collect::<crate::Result<Vec<f64>>>()?;
            let s1 = solve_sp1(&cfg, devices, &w, &t_up)?;
            let floor = rate_floor(&cfg, devices, &s1.freq, &s1.s_relaxed, s1.deadline)?;
            let st = jong_solve(&cfg, &w, devices, &floor, &init.power, &init.bandwidth, &sp2)?;
            Ok::<_, crate::Error>((floor, st))
        })();
        let (floor, st) = match solved {
            Ok(x) => x,
            Err(e) => return fail_both(e.to_string()),
        };
        let nu: Vec<f64> = st.nu.iter().map(|v| v * (1.0 + opts.perturb_nu)).collect();
        let g = rates(&cfg, devices, &st.power, &st.bandwidth);
        let target = w.w1 * cfg.rg();
        for n in 0..devices.len() {
            if target > 0.0 {
                fp = fp.max((nu[n] * g[n] - target).abs() / target);
            }
            let pd = st.power[n] * devices[n].upload_bits;
            fp = fp.max((st.beta[n] * g[n] - pd).abs() / pd);
        }
        if w.w1 > 0.0 {
            let sol = InnerSolution { power: st.power, bandwidth: st.bandwidth, mu: st.mu, tau: st.tau };
            kkt = kkt.max(inner_kkt_residuals(&cfg, devices, &nu, &st.beta, &floor, &sol).max());
        }
    }
    vec![
        check(FP, fp <= 1e-6, format!("max relative residual {fp:.2e}")),
        check(KKT, kkt <= 1e-6, format!("max relative residual {kkt:.2e}")),
    ]
}

fn sp1_dual(run: &RunConfig, opts: &ValidateOptions) -> CheckResult {
    const NAME: &str = "frequency/resolution dual";
    let w = match run.weights() {
        Ok(w) => w,
        Err(e) => return err_check(NAME, e),
    };
    let (cfg, topo) = match instances(run, 3, opts.instances, 3000) {
        Ok(x) => x,
        Err(e) => return err_check(NAME, e),
    };
    let mut stat: f64 = 0.0;
    let mut sum: f64 = 0.0;
    for devices in &topo {
        let res = initial_allocation(&cfg, devices).and_then(|init| {
            let t_up = devices
                .iter()
                .enumerate()
                .map(|(n, d)| uplink_time(&cfg, d, init.power[n], init.bandwidth[n]))
                .collect::<crate::Result<Vec<f64>>>()?;
            let dual = solve_sp1_dual(&cfg, devices, &w, &t_up)?;
            Ok((dual_stationarity_residual(&cfg, devices, &w, &t_up, &dual), dual.lambda.iter().sum::<f64>()))
        });
        match res {
            Ok((r, s)) => {
                stat = stat.max(r);
                let target = w.w2 * cfg.rg();
                if target > 0.0 {
                    sum = sum.max((s - target).abs() / target);
                }
            }
            Err(e) => return err_check(NAME, e),
        }
    }
    check(NAME, stat <= 1e-9 && sum <= 1e-9, format!("stationarity {stat:.2e}, price sum {sum:.2e}"))
}

fn bcd_and_oracle(run: &RunConfig, opts: &ValidateOptions) -> Vec<CheckResult> {
    const MONO: &str = "alternation monotone";
    const ORACLE: &str = "grid oracle comparison";
    let w = match run.weights() {
        Ok(w) => w,
        Err(e) => return vec![err_check(MONO, &e), err_check(ORACLE, &e)],
    };
    let bcd_cfg = crate::bcd::BcdConfig { fixed_deadline: None, ..run.bcd_config() };
    let mut rise: f64 = 0.0;
    let mut gap = f64::NEG_INFINITY;
    let mut out = Vec::new();
    for n in [1, 2] {
        let (cfg, topo) = match instances(run, n, opts.instances.min(5), 2000) {
            Ok(x) => x,
            Err(e) => return vec![err_check(MONO, &e), err_check(ORACLE, &e)],
        };
        for devices in &topo {
            let r = match initial_allocation(&cfg, devices).and_then(|i| bcd_solve(&cfg, devices, &w, &bcd_cfg, &i)) {
                Ok(r) => r,
                Err(e) => return vec![err_check(MONO, &e), err_check(ORACLE, &e)],
            };
            let objs: Vec<f64> = r.trace.phase(Phase::Relaxed).map(|x| x.objective_relaxed).collect();
            for p in objs.windows(2) {
                rise = rise.max(p[1] - p[0]);
            }
            match oracle_grid_search(&cfg, devices, &w, run.oracle_density) {
                Ok(o) => gap = gap.max((r.cost.objective - o.objective) / o.objective.abs()),
                Err(e) => return vec![check(MONO, rise <= 1e-9, format!("largest rise {rise:.2e}")), err_check(ORACLE, e)],
            }
        }
    }
    out.push(check(MONO, rise <= 1e-9, format!("largest per-round rise {rise:.2e}")));
    out.push(check(ORACLE, gap <= 0.02, format!("worst relative excess over the oracle {gap:.2e}")));
    out
}

/// Runs every check with the physical constants of `run`.
pub fn run_validation(run: &RunConfig, opts: &ValidateOptions) -> Vec<CheckResult> {
    let mut out = vec![lambert(), concavity(run)];
    out.extend(sp2_checks(run, opts));
    out.push(sp1_dual(run, opts));
    out.extend(bcd_and_oracle(run, opts));
    out
}

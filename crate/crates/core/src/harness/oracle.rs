//! Exhaustive grid search over tiny instances, used to check the solver.
//!
//! Power and frequency are gridded uniformly, resolutions take both
//! endpoints and bandwidth runs over every split of the band into
//! `density` equal slices with at least one slice per device. For a fixed
//! split the devices only interact through the deadline, so each device
//! keeps its time/cost Pareto frontier and the deadline is swept over the
//! merged breakpoints.

use crate::error::{Error, Result};
use crate::model::{accuracy, comp_energy, comp_time, evaluate, trans_energy, uplink_time, Allocation, DeviceProfile, SystemConfig, Weights};

pub const ORACLE_MAX_DEVICES: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub allocation: Allocation,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy)]
struct Choice {
    time: f64,
    cost: f64,
    p: f64,
    f: f64,
    s: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || hi == lo {
        return vec![hi];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Options sorted by increasing time with strictly decreasing cost.
fn frontier(mut opts: Vec<Choice>) -> Vec<Choice> {
    opts.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.cost.total_cmp(&b.cost)));
    let mut out: Vec<Choice> = Vec::new();
    for o in opts {
        if out.last().is_none_or(|l| o.cost < l.cost) {
            out.push(o);
        }
    }
    out
}

fn device_frontier(
    cfg: &SystemConfig,
    dev: &DeviceProfile,
    w: &Weights,
    bw: f64,
    p_grid: &[f64],
    f_grid: &[f64],
) -> Vec<Choice> {
    let mut opts = Vec::new();
    for &p in p_grid {
        let (Ok(tu), Ok(eu)) = (uplink_time(cfg, dev, p, bw), trans_energy(cfg, dev, p, bw)) else {
            continue;
        };
        for &f in f_grid {
            for s in [cfg.s_min, cfg.s_max] {
                let Ok(tc) = comp_time(cfg, dev, f, s) else { continue };
                let cost = w.w1 * cfg.rg() * (eu + comp_energy(cfg, dev, f, s)) - w.rho * accuracy(s);
                opts.push(Choice { time: tu + tc, cost, p, f, s });
            }
        }
    }
    frontier(opts)
}

/// Calls `visit` with every vector of `n` positive integers summing to `total`.
fn compositions(n: usize, total: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(buf: &mut Vec<usize>, n: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
        if buf.len() + 1 == n {
            buf.push(left);
            visit(buf);
            buf.pop();
            return;
        }
        let rest = n - buf.len() - 1;
        for k in 1..=left - rest {
            buf.push(k);
            go(buf, n, left - k, visit);
            buf.pop();
        }
    }
    if n > 0 && total >= n {
        go(&mut Vec::with_capacity(n), n, total, visit);
    }
}

/// Best grid point of the weighted objective for at most three devices.
/// `density` is the number of grid points per continuous variable and the
/// number of bandwidth slices.
pub fn oracle_grid_search(
    cfg: &SystemConfig,
    devices: &[DeviceProfile],
    w: &Weights,
    density: usize,
) -> Result<OracleResult> {
    let n = devices.len();
    if n > ORACLE_MAX_DEVICES {
        return Err(Error::OracleTooLarge(n));
    }
    if n == 0 || density < n.max(2) {
        return Err(Error::InvalidConfig(format!(
            "oracle needs at least one device and density >= max(2, n), got n={n} density={density}"
        )));
    }
    let slice = cfg.total_bandwidth / density as f64;
    let max_k = density - n + 1;
    // fronts[dev][k - 1]
    let fronts: Vec<Vec<Vec<Choice>>> = devices
        .iter()
        .map(|d| {
            let p_grid: Vec<f64> = linspace(d.p_min, d.p_max, density).into_iter().filter(|&p| p > 0.0).collect();
            let f_grid: Vec<f64> = linspace(d.f_min, d.f_max, density).into_iter().filter(|&f| f > 0.0).collect();
            (1..=max_k)
                .map(|k| device_frontier(cfg, d, w, k as f64 * slice, &p_grid, &f_grid))
                .collect()
        })
        .collect();

    let time_price = w.w2 * cfg.rg();
    let mut best: Option<(f64, Vec<usize>, Vec<Choice>, f64)> = None;
    compositions(n, density, &mut |ks| {
        let fs: Vec<&Vec<Choice>> = ks.iter().enumerate().map(|(i, &k)| &fronts[i][k - 1]).collect();
        if fs.iter().any(|f| f.is_empty()) {
            return;
        }
        // the deadline can't be below the slowest device's fastest option
        let t_floor = fs.iter().map(|f| f[0].time).fold(0.0, f64::max);
        let mut times: Vec<f64> = fs.iter().flat_map(|f| f.iter().map(|c| c.time)).filter(|&t| t >= t_floor).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut idx = vec![0usize; n];
        for &t in &times {
            let mut total = time_price * t;
            for (i, f) in fs.iter().enumerate() {
                while idx[i] + 1 < f.len() && f[idx[i] + 1].time <= t {
                    idx[i] += 1;
                }
                total += f[idx[i]].cost;
            }
            if best.as_ref().is_none_or(|b| total < b.0) {
                let picks = idx.iter().enumerate().map(|(i, &j)| fs[i][j]).collect();
                best = Some((total, ks.to_vec(), picks, t));
            }
        }
    });

    let (_, ks, picks, t) = best.ok_or_else(|| Error::InvalidConfig("grid has no feasible point".into()))?;
    let allocation = Allocation {
        power: picks.iter().map(|c| c.p).collect(),
        bandwidth: ks.iter().map(|&k| k as f64 * slice).collect(),
        freq: picks.iter().map(|c| c.f).collect(),
        resolution: picks.iter().map(|c| c.s).collect(),
        deadline: t,
    };
    let objective = evaluate(cfg, devices, w, &allocation)?.objective;
    Ok(OracleResult { allocation, objective })
}

//! Block solvers checked against independent brute-force searches.

use flmar::bcd::initial_allocation;
use flmar::harness::scenario::{gen_topology, ScenarioSpec};
use flmar::model::{uplink_time, DeviceProfile, SystemConfig, Weights};
use flmar::sp1::{solve_sp1_boxed, sp1_objective, ResolutionBox};
use flmar::sp2::{jong_solve, rate_floor, sum_of_ratios, RateFloor, Sp2Options};

fn setup(n: usize, seed: u64) -> (SystemConfig, Vec<DeviceProfile>) {
    let cfg = SystemConfig { n_devices: n, ..SystemConfig::default() };
    let devs = gen_topology(&ScenarioSpec { n_devices: n, seed, ..ScenarioSpec::default() }).unwrap();
    (cfg, devs)
}

fn floors_at_start(cfg: &SystemConfig, devs: &[DeviceProfile], w: &Weights) -> (RateFloor, Vec<f64>, Vec<f64>) {
    let init = initial_allocation(cfg, devs).unwrap();
    let t_up: Vec<f64> = devs
        .iter()
        .enumerate()
        .map(|(n, d)| uplink_time(cfg, d, init.power[n], init.bandwidth[n]).unwrap())
        .collect();
    let s1 = solve_sp1_boxed(cfg, devs, w, &t_up, ResolutionBox::Relaxed, None).unwrap();
    let floor = rate_floor(cfg, devs, &s1.freq, &s1.s_relaxed, s1.deadline).unwrap();
    (floor, init.power, init.bandwidth)
}

/// Least power meeting rate `r` on bandwidth `b`, clamped up to `p_min`.
fn floor_power(cfg: &SystemConfig, d: &DeviceProfile, b: f64, r: f64) -> f64 {
    let need = (2f64.powf(r / b) - 1.0) * cfg.noise_density * b / d.gain;
    need.max(d.p_min)
}

/// Two-device transmit energy. The ratio p / log(1 + c p) grows with p, so
/// at a fixed split each device runs at its floor power; only the split is
/// searched (a grid, then golden-section refinement around the best cell).
fn two_device_oracle(cfg: &SystemConfig, w: &Weights, devs: &[DeviceProfile], floor: &RateFloor) -> f64 {
    let cost = |b0: f64| {
        let bw = [b0, cfg.total_bandwidth - b0];
        let p: Vec<f64> = (0..2).map(|n| floor_power(cfg, &devs[n], bw[n], floor.r_min[n])).collect();
        if p.iter().zip(devs).any(|(&p, d)| p > d.p_max) {
            return f64::INFINITY;
        }
        sum_of_ratios(cfg, w, devs, &p, &bw)
    };
    let m = 20_000;
    let h = cfg.total_bandwidth / m as f64;
    let best = (1..m).min_by(|&a, &b| cost(a as f64 * h).total_cmp(&cost(b as f64 * h))).unwrap();
    let (mut lo, mut hi) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if cost(a) < cost(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    cost(0.5 * (lo + hi))
}

#[test]
fn transmit_block_matches_two_device_search() {
    let w = Weights::normalized(0.5, 0.5, 1.0).unwrap();
    for seed in 0..12 {
        let (cfg, devs) = setup(2, 700 + seed);
        let (floor, p0, b0) = floors_at_start(&cfg, &devs, &w);
        let st = jong_solve(&cfg, &w, &devs, &floor, &p0, &b0, &Sp2Options::default()).unwrap();
        assert!(st.converged, "seed {seed}");
        let got = sum_of_ratios(&cfg, &w, &devs, &st.power, &st.bandwidth);
        let oracle = two_device_oracle(&cfg, &w, &devs, &floor);
        let rel = (got - oracle) / oracle;
        assert!(rel <= 1e-7, "seed {seed}: jong {got:e} vs search {oracle:e}");
        assert!(rel >= -1e-7, "seed {seed}: jong {got:e} below the search {oracle:e}; search too coarse?");
    }
}

#[test]
fn compute_block_matches_single_device_search() {
    for (w1, w2, rho) in [(0.5, 0.5, 1.0), (0.9, 0.1, 20.0), (0.2, 0.8, 5.0)] {
        let w = Weights::normalized(w1, w2, rho).unwrap();
        for seed in 0..6 {
            let (cfg, devs) = setup(1, 900 + seed);
            let t_up = [0.05];
            let sol = solve_sp1_boxed(&cfg, &devs, &w, &t_up, ResolutionBox::Relaxed, None).unwrap();
            let got = sp1_objective(&cfg, &devs, &w, &sol.freq, &sol.s_relaxed, sol.deadline);
            let d = &devs[0];
            let mut best = f64::INFINITY;
            for i in 0..=400 {
                let s = cfg.s_min + (cfg.s_max - cfg.s_min) * i as f64 / 400.0;
                for j in 1..=4000 {
                    let f = d.f_max * j as f64 / 4000.0;
                    let t = t_up[0] + d.round_cycles(&cfg, s) / f;
                    best = best.min(sp1_objective(&cfg, &devs, &w, &[f], &[s], t));
                }
            }
            assert!(got <= best + 1e-9 * best.abs().max(1.0), "{w:?} seed {seed}: {got} vs search {best}");
            assert!(got >= best - 1e-3 * best.abs().max(1.0), "{w:?} seed {seed}: {got} far below search {best}");
        }
    }
}

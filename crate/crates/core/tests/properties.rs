use flmar::bcd::{bcd_solve, bcd_solve_fixed_deadline, initial_allocation, BcdConfig, Phase};
use flmar::harness::scenario::{gen_topology, ScenarioSpec};
use flmar::model::{check_feasible, data_rate, round_times, SystemConfig, Weights};
use flmar::numerics::lambert_w0;
use proptest::prelude::*;

fn small(seed: u64, n: usize) -> (SystemConfig, Vec<flmar::model::DeviceProfile>) {
    let cfg = SystemConfig { n_devices: n, ..SystemConfig::default() };
    let devs = gen_topology(&ScenarioSpec { n_devices: n, seed, ..ScenarioSpec::default() }).unwrap();
    (cfg, devs)
}

proptest! {
    #[test]
    fn lambert_round_trip(t in -12.0f64..6.0) {
        let x = -(-1.0f64).exp() + 10f64.powf(t);
        let w = lambert_w0(x).unwrap();
        prop_assert!(w >= -1.0);
        prop_assert!((w * w.exp() - x).abs() <= 1e-12 * x.abs().max(1.0));
    }

    #[test]
    fn rate_is_midpoint_concave(
        lp1 in -4.0f64..-1.0, lp2 in -4.0f64..-1.0,
        lb1 in 3.0f64..7.0, lb2 in 3.0f64..7.0,
        seed in 0u64..50,
    ) {
        let (cfg, devs) = small(seed, 1);
        let d = &devs[0];
        let (p1, p2, b1, b2) = (10f64.powf(lp1), 10f64.powf(lp2), 10f64.powf(lb1), 10f64.powf(lb2));
        let mid = data_rate(&cfg, d, 0.5 * (p1 + p2), 0.5 * (b1 + b2));
        let avg = 0.5 * (data_rate(&cfg, d, p1, b1) + data_rate(&cfg, d, p2, b2));
        prop_assert!(mid >= avg * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn alternation_is_feasible_and_monotone(
        seed in 0u64..10_000,
        n in 1usize..6,
        w1 in 0.05f64..0.95,
        rho in 0.0f64..40.0,
    ) {
        let (cfg, devs) = small(seed, n);
        let w = Weights::normalized(w1, 1.0 - w1, rho).unwrap();
        let init = initial_allocation(&cfg, &devs).unwrap();
        let bcd = BcdConfig::default();
        let r = bcd_solve(&cfg, &devs, &w, &bcd, &init).unwrap();
        prop_assert!(check_feasible(&cfg, &devs, &r.allocation).is_empty());
        prop_assert!(r.trace.rounds.len() <= bcd.max_rounds);
        for phase in [Phase::Relaxed, Phase::Polish] {
            let objs: Vec<f64> = r.trace.phase(phase).map(|x| x.objective_relaxed).collect();
            for pair in objs.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-9 * pair[0].abs().max(1.0), "{phase:?} {objs:?}");
            }
        }
        for &s in &r.allocation.resolution {
            prop_assert!(s == cfg.s_min || s == cfg.s_max);
        }
    }

    #[test]
    fn fixed_deadline_is_met(seed in 0u64..10_000, n in 1usize..6, t_fixed in 60.0f64..200.0) {
        let (cfg, devs) = small(seed, n);
        let init = initial_allocation(&cfg, &devs).unwrap();
        let Ok(r) = bcd_solve_fixed_deadline(&cfg, &devs, t_fixed, &BcdConfig::default(), &init) else {
            // an infeasible budget is reported, never silently violated
            return Ok(());
        };
        prop_assert!(check_feasible(&cfg, &devs, &r.allocation).is_empty());
        let budget = t_fixed / cfg.rg();
        for t in round_times(&cfg, &devs, &r.allocation).unwrap() {
            prop_assert!(t <= budget * (1.0 + 1e-9), "{t} > {budget}");
        }
    }
}

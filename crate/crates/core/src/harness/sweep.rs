//! Parameter sweeps over random topologies and their aggregation into tidy
//! plot data.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::bcd::{bcd_solve, bcd_solve_fixed_deadline, initial_allocation, BcdConfig};
use crate::error::{Error, Result};
use crate::model::{evaluate, Allocation, CostBreakdown, DeviceProfile, SystemConfig, Weights};

use super::benchmarks::{benchmark_minpixel, benchmark_randpixel, comm_only, comp_only, ResolutionPolicy, SweepMode};
use super::scenario::{gen_topology, rng_for, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Maximum transmit power, dBm.
    PMax,
    /// Maximum CPU frequency, GHz.
    FMax,
    /// Accuracy weight.
    Rho,
    /// Total completion time budget, seconds.
    TFixed,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::PMax => "p_max",
            Axis::FMax => "f_max",
            Axis::Rho => "rho",
            Axis::TFixed => "t_fixed",
        }
    }

    /// The grid used for the figures when none is given.
    pub fn default_grid(self) -> Vec<f64> {
        match self {
            Axis::PMax => (0..=6).map(|i| 2.0 * i as f64).collect(),
            Axis::FMax => (1..=10).map(|i| 0.2 * i as f64).collect(),
            Axis::Rho => vec![1.0, 5.0, 10.0, 15.0, 20.0, 30.0],
            Axis::TFixed => vec![80.0, 100.0, 150.0],
        }
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Axis> {
        match s {
            "p_max" => Ok(Axis::PMax),
            "f_max" => Ok(Axis::FMax),
            "rho" => Ok(Axis::Rho),
            "t_fixed" => Ok(Axis::TFixed),
            _ => Err(Error::InvalidConfig(format!("unknown axis '{s}' (expected p_max, f_max, rho or t_fixed)"))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    /// Joint optimizer; `None` runs every weight triple of the sweep.
    Proposed(Option<(f64, f64, f64)>),
    MinPixel,
    RandPixel,
    /// Joint optimizer, energy only, total time fixed. `None` takes the
    /// budget from a `t_fixed` axis.
    JointFixed(Option<f64>),
    CommOnly(Option<f64>),
    CompOnly(Option<f64>),
}

impl Algorithm {
    pub fn base_name(&self) -> &'static str {
        match self {
            Algorithm::Proposed(_) => "proposed",
            Algorithm::MinPixel => "minpixel",
            Algorithm::RandPixel => "randpixel",
            Algorithm::JointFixed(_) => "joint-fixed",
            Algorithm::CommOnly(_) => "comm-only",
            Algorithm::CompOnly(_) => "comp-only",
        }
    }

    fn fixed_time(&self) -> Option<Option<f64>> {
        match *self {
            Algorithm::JointFixed(t) | Algorithm::CommOnly(t) | Algorithm::CompOnly(t) => Some(t),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.base_name())?;
        match self {
            Algorithm::Proposed(Some((a, b, c))) => write!(f, ":{a},{b},{c}"),
            Algorithm::JointFixed(Some(t)) | Algorithm::CommOnly(Some(t)) | Algorithm::CompOnly(Some(t)) => write!(f, ":{t}"),
            _ => Ok(()),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Algorithm> {
        let bad = || Error::InvalidConfig(format!("cannot parse algorithm '{s}'"));
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: &str| a.parse::<f64>().map_err(|_| bad());
        let time = |a: Option<&str>| -> Result<Option<f64>> {
            match a {
                None => Ok(None),
                Some(a) => {
                    let t = num(a)?;
                    if t > 0.0 && t.is_finite() {
                        Ok(Some(t))
                    } else {
                        Err(bad())
                    }
                }
            }
        };
        match name {
            "proposed" => match arg {
                None => Ok(Algorithm::Proposed(None)),
                Some(a) => {
                    let v = a.split(',').map(num).collect::<Result<Vec<f64>>>()?;
                    match v[..] {
                        [w1, w2, rho] => Ok(Algorithm::Proposed(Some((w1, w2, rho)))),
                        _ => Err(bad()),
                    }
                }
            },
            "minpixel" if arg.is_none() => Ok(Algorithm::MinPixel),
            "randpixel" if arg.is_none() => Ok(Algorithm::RandPixel),
            "joint-fixed" => Ok(Algorithm::JointFixed(time(arg)?)),
            "comm-only" => Ok(Algorithm::CommOnly(time(arg)?)),
            "comp-only" => Ok(Algorithm::CompOnly(time(arg)?)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub replications: usize,
    /// Raw `(w1, w2, rho)` triples, normalized before use.
    pub weights: Vec<(f64, f64, f64)>,
    /// Replication `r` uses topology seed `base_seed + r` for every
    /// algorithm. When false each algorithm gets its own topologies.
    pub paired: bool,
    pub comm_only_resolution: ResolutionPolicy,
    pub bcd: BcdConfig,
}

impl SweepSpec {
    pub fn new(axis: Axis, replications: usize, weights: Vec<(f64, f64, f64)>) -> SweepSpec {
        SweepSpec {
            axis,
            grid: axis.default_grid(),
            replications,
            weights,
            paired: true,
            comm_only_resolution: ResolutionPolicy::Random,
            bcd: BcdConfig::default(),
        }
    }

    pub fn validate(&self, algorithms: &[Algorithm]) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.grid.is_empty() {
            return bad("sweep grid is empty".into());
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) || self.grid.iter().any(|v| !v.is_finite()) {
            return bad("sweep grid must be finite and strictly increasing".into());
        }
        if self.replications == 0 {
            return bad("need at least one replication".into());
        }
        if algorithms.is_empty() {
            return bad("no algorithms given".into());
        }
        if self.weights.is_empty() && algorithms.iter().any(|a| matches!(a, Algorithm::Proposed(None) | Algorithm::MinPixel | Algorithm::RandPixel)) {
            return bad("no weight triples given".into());
        }
        for &(w1, w2, rho) in &self.weights {
            Weights::normalized(w1, w2, rho)?;
        }
        for a in algorithms {
            if let Algorithm::Proposed(Some((w1, w2, rho))) = *a {
                Weights::normalized(w1, w2, rho)?;
            }
            if a.fixed_time() == Some(None) && self.axis != Axis::TFixed {
                return bad(format!("{a} needs a time budget (use {a}:T or the t_fixed axis)"));
            }
        }
        match self.axis {
            Axis::FMax if self.grid[0] <= 0.0 => bad("f_max grid must be positive".into()),
            Axis::Rho if self.grid[0] < 0.0 => bad("rho grid must be non-negative".into()),
            Axis::TFixed if self.grid[0] <= 0.0 => bad("t_fixed grid must be positive".into()),
            _ => self.bcd.validate(),
        }
    }
}

/// One solved cell. Failed cells carry NaN metrics and `converged = false`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario_id: usize,
    pub seed: u64,
    pub algorithm: String,
    pub axis_name: &'static str,
    pub axis_value: f64,
    pub w1: f64,
    pub w2: f64,
    pub rho: f64,
    pub total_energy_j: f64,
    pub total_time_s: f64,
    pub accuracy_sum: f64,
    pub objective: f64,
    pub bcd_rounds: usize,
    pub converged: bool,
    /// Fraction of devices at `s_max`; not part of the CSV.
    pub frac_s_max: f64,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    /// Name of the curve this row belongs to in the plot data.
    pub fn series(&self) -> String {
        if self.algorithm == "proposed" {
            if self.axis_name == "rho" {
                format!("proposed(w1={},w2={})", self.w1, self.w2)
            } else {
                format!("proposed(w1={},w2={},rho={})", self.w1, self.w2, self.rho)
            }
        } else {
            self.algorithm.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: Axis,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str = "scenario_id,seed,algorithm,axis_name,axis_value,w1,w2,rho,total_energy_j,total_time_s,accuracy_sum,objective,bcd_rounds,converged";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Energy,
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub series: String,
    pub x: f64,
    pub mean: f64,
    /// Sample standard deviation, 0 for a single value.
    pub std: f64,
    pub count: usize,
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{},{}",
                r.scenario_id,
                r.seed,
                r.algorithm,
                r.axis_name,
                r.axis_value,
                r.w1,
                r.w2,
                r.rho,
                r.total_energy_j,
                r.total_time_s,
                r.accuracy_sum,
                r.objective,
                r.bcd_rounds,
                r.converged
            );
        }
        out
    }

    /// Mean and spread of `metric` per series and grid point, skipping failed
    /// cells. Series appear in first-seen order, x ascending within a series.
    pub fn aggregate(&self, metric: Metric) -> Vec<AggregateRow> {
        self.aggregate_by(|r| Some(r.series()), |r| match metric {
            Metric::Energy => r.total_energy_j,
            Metric::Time => r.total_time_s,
        })
    }

    /// Generic grouping: `series` returns `None` to drop a row.
    pub fn aggregate_by(&self, series: impl Fn(&SweepRow) -> Option<String>, value: impl Fn(&SweepRow) -> f64) -> Vec<AggregateRow> {
        let mut keys: Vec<(String, f64)> = Vec::new();
        for r in &self.rows {
            if let Some(s) = series(r) {
                if !keys.iter().any(|(k, x)| *k == s && *x == r.axis_value) {
                    keys.push((s, r.axis_value));
                }
            }
        }
        let order: Vec<String> = keys.iter().fold(Vec::new(), |mut acc, (k, _)| {
            if !acc.contains(k) {
                acc.push(k.clone());
            }
            acc
        });
        keys.sort_by(|a, b| {
            let ia = order.iter().position(|k| *k == a.0);
            let ib = order.iter().position(|k| *k == b.0);
            ia.cmp(&ib).then(a.1.total_cmp(&b.1))
        });
        keys.into_iter()
            .map(|(s, x)| {
                let vals: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| !r.failed() && r.axis_value == x && series(r).as_deref() == Some(s.as_str()))
                    .map(&value)
                    .collect();
                let (mean, std) = mean_std(&vals);
                AggregateRow { series: s, x, mean, std, count: vals.len() }
            })
            .collect()
    }

    /// Tidy plot-data files `(file stem, csv)` for the figures this sweep
    /// covers.
    pub fn plot_data(&self) -> Vec<(String, String)> {
        let csv = |rows: Vec<AggregateRow>| {
            let mut out = String::from("series,x,mean,std,count\n");
            for r in rows {
                let _ = writeln!(out, "{},{},{:.10e},{:.10e},{}", r.series, r.x, r.mean, r.std, r.count);
            }
            out
        };
        let fixed = |r: &SweepRow| matches!(r.algorithm.split(':').next(), Some("joint-fixed" | "comm-only" | "comp-only"));
        let mut files = Vec::new();
        let mut pair = |e: &str, t: &str| {
            files.push((e.to_string(), csv(self.aggregate_by(|r| (!fixed(r)).then(|| r.series()), |r| r.total_energy_j))));
            files.push((t.to_string(), csv(self.aggregate_by(|r| (!fixed(r)).then(|| r.series()), |r| r.total_time_s))));
        };
        match self.axis {
            Axis::PMax => pair("fig3a", "fig3b"),
            Axis::FMax => pair("fig3c", "fig3d"),
            Axis::Rho => pair("fig4a", "fig4b"),
            Axis::TFixed => {}
        }
        let has_fixed = self.rows.iter().any(fixed);
        if self.axis == Axis::TFixed {
            files.push(("fig8".into(), csv(self.aggregate(Metric::Energy))));
        } else if self.axis == Axis::PMax && has_fixed {
            files.push(("fig9".into(), csv(self.aggregate_by(|r| fixed(r).then(|| r.series()), |r| r.total_energy_j))));
        }
        files.retain(|(_, body)| body.lines().count() > 1);
        files
    }
}

struct Cell<'a> {
    cfg: SystemConfig,
    scenario: ScenarioSpec,
    spec: &'a SweepSpec,
    grid_idx: usize,
    rep: usize,
    x: f64,
}

fn apply_axis(axis: Axis, x: f64, scenario: &mut ScenarioSpec) {
    match axis {
        Axis::PMax => scenario.p_max_dbm = x,
        Axis::FMax => scenario.f_max_hz = x * 1e9,
        Axis::Rho | Axis::TFixed => {}
    }
}

enum Outcome {
    Solved { alloc: Allocation, cost: CostBreakdown, rounds: usize, converged: bool },
    Failed(String),
}

impl Cell<'_> {
    fn seed_for(&self, alg_idx: usize) -> u64 {
        let base = self.scenario.seed.wrapping_add(self.rep as u64);
        if self.spec.paired {
            base
        } else {
            base.wrapping_add((alg_idx as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        }
    }

    fn weights(&self, raw: (f64, f64, f64)) -> Result<Weights> {
        let rho = if self.spec.axis == Axis::Rho { self.x } else { raw.2 };
        Weights::normalized(raw.0, raw.1, rho)
    }

    fn run(&self, algorithms: &[Algorithm]) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        let default_w = self.spec.weights.first().copied().unwrap_or((1.0, 0.0, 0.0));
        for (ai, alg) in algorithms.iter().enumerate() {
            let seed = self.seed_for(ai);
            let devices = gen_topology(&ScenarioSpec { seed, ..self.scenario.clone() });
            let mut emit = |label: &str, raw: (f64, f64, f64), fixed: bool, out: Result<Outcome>| {
                let w = if fixed { Ok(Weights { w1: 1.0, w2: 0.0, rho: 0.0 }) } else { self.weights(raw) };
                let out = out.unwrap_or_else(|e| Outcome::Failed(e.to_string()));
                let (w1, w2, rho) = w.map(|w| (w.w1, w.w2, w.rho)).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
                let mut row = SweepRow {
                    scenario_id: self.grid_idx * self.spec.replications + self.rep,
                    seed,
                    algorithm: label.to_string(),
                    axis_name: self.spec.axis.name(),
                    axis_value: self.x,
                    w1,
                    w2,
                    rho,
                    total_energy_j: f64::NAN,
                    total_time_s: f64::NAN,
                    accuracy_sum: f64::NAN,
                    objective: f64::NAN,
                    bcd_rounds: 0,
                    converged: false,
                    frac_s_max: f64::NAN,
                    error: None,
                };
                match out {
                    Outcome::Solved { alloc, cost, rounds, converged } => {
                        row.total_energy_j = cost.total_energy;
                        row.total_time_s = cost.total_time;
                        row.accuracy_sum = cost.accuracy_sum;
                        row.objective = cost.objective;
                        row.bcd_rounds = rounds;
                        row.converged = converged;
                        let hi = alloc.resolution.iter().filter(|&&s| s >= self.cfg.s_max).count();
                        row.frac_s_max = hi as f64 / alloc.resolution.len().max(1) as f64;
                    }
                    Outcome::Failed(msg) => row.error = Some(msg),
                }
                rows.push(row);
            };
            let devices = match devices {
                Ok(d) => d,
                Err(e) => {
                    emit(&alg.to_string(), default_w, alg.fixed_time().is_some(), Err(e));
                    continue;
                }
            };
            let stream = ((self.grid_idx as u64) << 32) | (ai as u64 + 1);
            let mut rng = rng_for(seed, stream);
            let mode = if self.spec.axis == Axis::FMax { SweepMode::Frequency } else { SweepMode::Power };
            let t_of = |t: Option<f64>| t.unwrap_or(self.x);
            match *alg {
                Algorithm::Proposed(fixed_w) => {
                    let triples = match fixed_w {
                        Some(t) => vec![t],
                        None => self.spec.weights.clone(),
                    };
                    for raw in triples {
                        let out = self.weights(raw).and_then(|w| self.proposed(&devices, &w));
                        emit("proposed", raw, false, out);
                    }
                }
                Algorithm::MinPixel | Algorithm::RandPixel => {
                    let out = if *alg == Algorithm::MinPixel {
                        benchmark_minpixel(&self.cfg, &devices, mode, &mut rng)
                    } else {
                        benchmark_randpixel(&self.cfg, &devices, mode, &mut rng)
                    };
                    let out = out.and_then(|a| self.finish(&devices, &self.weights(default_w)?, a, 0, true));
                    emit(alg.base_name(), default_w, false, out);
                }
                Algorithm::JointFixed(t) => {
                    let out = initial_allocation(&self.cfg, &devices)
                        .and_then(|init| bcd_solve_fixed_deadline(&self.cfg, &devices, t_of(t), &self.spec.bcd, &init))
                        .map(|r| Outcome::Solved {
                            alloc: r.allocation,
                            cost: r.cost,
                            rounds: r.trace.rounds.len(),
                            converged: r.converged,
                        });
                    emit(&alg.to_string(), default_w, true, out);
                }
                Algorithm::CommOnly(t) => {
                    let out = comm_only(&self.cfg, &devices, t_of(t), self.spec.comm_only_resolution, &self.spec.bcd, &mut rng)
                        .and_then(|a| self.finish(&devices, &Weights { w1: 1.0, w2: 0.0, rho: 0.0 }, a, 0, true));
                    emit(&alg.to_string(), default_w, true, out);
                }
                Algorithm::CompOnly(t) => {
                    let out = comp_only(&self.cfg, &devices, t_of(t))
                        .and_then(|a| self.finish(&devices, &Weights { w1: 1.0, w2: 0.0, rho: 0.0 }, a, 0, true));
                    emit(&alg.to_string(), default_w, true, out);
                }
            }
        }
        rows
    }

    fn proposed(&self, devices: &[DeviceProfile], w: &Weights) -> Result<Outcome> {
        let init = initial_allocation(&self.cfg, devices)?;
        let r = bcd_solve(&self.cfg, devices, w, &BcdConfig { fixed_deadline: None, ..self.spec.bcd.clone() }, &init)?;
        Ok(Outcome::Solved {
            alloc: r.allocation,
            cost: r.cost,
            rounds: r.trace.rounds.len(),
            converged: r.converged,
        })
    }

    fn finish(&self, devices: &[DeviceProfile], w: &Weights, alloc: Allocation, rounds: usize, converged: bool) -> Result<Outcome> {
        let cost = evaluate(&self.cfg, devices, w, &alloc)?;
        Ok(Outcome::Solved { alloc, cost, rounds, converged })
    }
}

/// Runs every algorithm on every grid point and replication. Cells run in
/// parallel; the row order (grid point, replication, algorithm, weights) and
/// all values depend only on the inputs.
pub fn run_sweep(cfg: &SystemConfig, scenario: &ScenarioSpec, spec: &SweepSpec, algorithms: &[Algorithm]) -> Result<SweepTable> {
    spec.validate(algorithms)?;
    scenario.validate()?;
    let cfg = SystemConfig { n_devices: scenario.n_devices, ..cfg.clone() };
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = (0..spec.grid.len()).flat_map(|g| (0..spec.replications).map(move |r| (g, r))).collect();
    let rows: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(g, rep)| {
            let mut sc = scenario.clone();
            apply_axis(spec.axis, spec.grid[g], &mut sc);
            Cell { cfg: cfg.clone(), scenario: sc, spec, grid_idx: g, rep, x: spec.grid[g] }.run(algorithms)
        })
        .collect();
    Ok(SweepTable { axis: spec.axis, rows: rows.into_iter().flatten().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (SystemConfig, ScenarioSpec) {
        let sc = ScenarioSpec { n_devices: 5, seed: 42, ..ScenarioSpec::default() };
        (SystemConfig { n_devices: 5, ..SystemConfig::default() }, sc)
    }

    #[test]
    fn algorithm_labels_round_trip() {
        for s in ["proposed", "proposed:0.5,0.5,1", "minpixel", "randpixel", "joint-fixed:100", "comm-only", "comp-only:80"] {
            assert_eq!(s.parse::<Algorithm>().unwrap().to_string(), s);
        }
        for s in ["foo", "proposed:1,2", "joint-fixed:-3", "minpixel:4"] {
            assert!(s.parse::<Algorithm>().is_err(), "{s}");
        }
        assert!("watts".parse::<Axis>().is_err());
    }

    #[test]
    fn single_cell_single_row() {
        let (cfg, sc) = small();
        let spec = SweepSpec { grid: vec![10.0], ..SweepSpec::new(Axis::PMax, 1, vec![(0.5, 0.5, 1.0)]) };
        let t = run_sweep(&cfg, &sc, &spec, &[Algorithm::Proposed(None)]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(!t.rows[0].failed());
        assert_eq!(t.to_csv().lines().count(), 2);
        assert_eq!(t.to_csv().lines().next().unwrap(), SWEEP_CSV_HEADER);
    }

    #[test]
    fn deterministic_and_mean_matches() {
        let (cfg, sc) = small();
        let spec = SweepSpec { grid: vec![4.0, 12.0], ..SweepSpec::new(Axis::PMax, 3, vec![(0.5, 0.5, 1.0)]) };
        let algs = [Algorithm::Proposed(None), Algorithm::MinPixel, Algorithm::RandPixel];
        let a = run_sweep(&cfg, &sc, &spec, &algs).unwrap();
        let b = run_sweep(&cfg, &sc, &spec, &algs).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.len(), 2 * 3 * 3);
        for agg in a.aggregate(Metric::Energy) {
            let vals: Vec<f64> = a
                .rows
                .iter()
                .filter(|r| r.series() == agg.series && r.axis_value == agg.x)
                .map(|r| r.total_energy_j)
                .collect();
            assert_eq!(agg.count, vals.len());
            let hand = vals.iter().sum::<f64>() / vals.len() as f64;
            approx::assert_relative_eq!(agg.mean, hand, max_relative = 1e-14);
        }
        let files: Vec<String> = a.plot_data().into_iter().map(|(n, _)| n).collect();
        assert_eq!(files, vec!["fig3a", "fig3b"]);
    }

    #[test]
    fn pairing_shares_topologies() {
        let (cfg, sc) = small();
        let mut spec = SweepSpec { grid: vec![12.0], ..SweepSpec::new(Axis::PMax, 2, vec![(0.5, 0.5, 1.0)]) };
        let algs = [Algorithm::MinPixel, Algorithm::RandPixel];
        let t = run_sweep(&cfg, &sc, &spec, &algs).unwrap();
        assert_eq!(t.rows[0].seed, t.rows[1].seed);
        spec.paired = false;
        let t = run_sweep(&cfg, &sc, &spec, &algs).unwrap();
        assert_ne!(t.rows[0].seed, t.rows[1].seed);
    }

    #[test]
    fn failures_are_recorded() {
        let (cfg, sc) = small();
        let spec = SweepSpec { grid: vec![0.5, 100.0], ..SweepSpec::new(Axis::TFixed, 1, vec![]) };
        let t = run_sweep(&cfg, &sc, &spec, &[Algorithm::CompOnly(None)]).unwrap();
        assert!(t.rows[0].failed() && !t.rows[0].converged && t.rows[0].total_energy_j.is_nan());
        assert!(!t.rows[1].failed());
        assert!(t.to_csv().contains("NaN"));
        let files: Vec<String> = t.plot_data().into_iter().map(|(n, _)| n).collect();
        assert_eq!(files, vec!["fig8"]);
    }

    #[test]
    fn fixed_algorithms_need_time() {
        let spec = SweepSpec::new(Axis::PMax, 1, vec![(0.5, 0.5, 1.0)]);
        assert!(spec.validate(&[Algorithm::JointFixed(None)]).is_err());
        assert!(spec.validate(&[Algorithm::JointFixed(Some(100.0))]).is_ok());
    }
}

//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`, blank, or `#` comments (a `#` also starts a
//! trailing comment). Unknown and repeated keys are errors; missing keys take
//! the defaults below. Power is given in dBm and the noise density in
//! dBm/Hz; everything else is SI.

use std::path::{Path, PathBuf};

use crate::bcd::BcdConfig;
use crate::error::{Error, Result};
use crate::harness::scenario::ScenarioSpec;
use crate::model::{SystemConfig, Weights};
use crate::sp2::Sp2Options;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_devices: usize,
    pub bandwidth_hz: f64,
    pub n0_dbm_per_hz: f64,
    pub kappa: f64,
    pub r_local: u32,
    pub r_global: u32,
    pub s_min: f64,
    pub s_max: f64,
    pub s_standard: f64,
    pub d_bits: f64,
    pub samples_per_device: f64,
    pub cycles_min: f64,
    pub cycles_max: f64,
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub w1: f64,
    pub w2: f64,
    pub rho: f64,
    pub seed: u64,
    pub eps0: f64,
    pub max_bcd_rounds: usize,
    pub xi: f64,
    pub eps_newton: f64,
    pub max_newton_iters: usize,
    pub area_radius_m: f64,
    pub shadow_sigma_db: f64,
    /// Total completion time budget in seconds; when set, `solve` runs the
    /// energy-only fixed-deadline mode.
    pub t_fixed: Option<f64>,
    pub replications: usize,
    /// Share topologies across algorithms within a replication.
    pub paired: bool,
    /// Points per axis of the validation grid oracle.
    pub oracle_density: usize,
    pub output_dir: PathBuf,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_devices: 50,
            bandwidth_hz: 20e6,
            n0_dbm_per_hz: -174.0,
            kappa: 1e-28,
            r_local: 10,
            r_global: 100,
            s_min: 160.0,
            s_max: 640.0,
            s_standard: 160.0,
            d_bits: 28_100.0,
            samples_per_device: 500.0,
            cycles_min: 1e4,
            cycles_max: 3e4,
            p_min_dbm: 0.0,
            p_max_dbm: 12.0,
            f_min_hz: 0.0,
            f_max_hz: 2e9,
            w1: 0.5,
            w2: 0.5,
            rho: 1.0,
            seed: 1,
            eps0: 1e-4,
            max_bcd_rounds: 30,
            xi: 0.5,
            eps_newton: 0.01,
            max_newton_iters: 100,
            area_radius_m: 250.0,
            shadow_sigma_db: 8.0,
            t_fixed: None,
            replications: 20,
            paired: true,
            oracle_density: 50,
            output_dir: PathBuf::from("out"),
            verbosity: 1,
        }
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidConfig(format!("line {line}: cannot parse '{v}' for key '{key}'")))
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("line {line}: expected a boolean for '{key}', got '{v}'"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(Error::InvalidConfig(format!("line {line}: expected 'key = value', got '{body}'")));
            };
            let (k, v) = (k.trim(), v.trim());
            if seen.iter().any(|s| s == k) {
                return Err(Error::InvalidConfig(format!("line {line}: key '{k}' given twice")));
            }
            seen.push(k.to_string());
            match k {
                "n_devices" => c.n_devices = parse_num(line, k, v)?,
                "bandwidth_hz" => c.bandwidth_hz = parse_num(line, k, v)?,
                "n0_dbm_per_hz" => c.n0_dbm_per_hz = parse_num(line, k, v)?,
                "kappa" => c.kappa = parse_num(line, k, v)?,
                "r_local" => c.r_local = parse_num(line, k, v)?,
                "r_global" => c.r_global = parse_num(line, k, v)?,
                "s_min" => c.s_min = parse_num(line, k, v)?,
                "s_max" => c.s_max = parse_num(line, k, v)?,
                "s_standard" => c.s_standard = parse_num(line, k, v)?,
                "d_bits" => c.d_bits = parse_num(line, k, v)?,
                "samples_per_device" => c.samples_per_device = parse_num(line, k, v)?,
                "cycles_min" => c.cycles_min = parse_num(line, k, v)?,
                "cycles_max" => c.cycles_max = parse_num(line, k, v)?,
                "p_min_dbm" => c.p_min_dbm = parse_num(line, k, v)?,
                "p_max_dbm" => c.p_max_dbm = parse_num(line, k, v)?,
                "f_min_hz" => c.f_min_hz = parse_num(line, k, v)?,
                "f_max_hz" => c.f_max_hz = parse_num(line, k, v)?,
                "w1" => c.w1 = parse_num(line, k, v)?,
                "w2" => c.w2 = parse_num(line, k, v)?,
                "rho" => c.rho = parse_num(line, k, v)?,
                "seed" => c.seed = parse_num(line, k, v)?,
                "eps0" => c.eps0 = parse_num(line, k, v)?,
                "max_bcd_rounds" => c.max_bcd_rounds = parse_num(line, k, v)?,
                "xi" => c.xi = parse_num(line, k, v)?,
                "eps_newton" => c.eps_newton = parse_num(line, k, v)?,
                "max_newton_iters" => c.max_newton_iters = parse_num(line, k, v)?,
                "area_radius_m" => c.area_radius_m = parse_num(line, k, v)?,
                "shadow_sigma_db" => c.shadow_sigma_db = parse_num(line, k, v)?,
                "t_fixed" => c.t_fixed = Some(parse_num(line, k, v)?),
                "replications" => c.replications = parse_num(line, k, v)?,
                "paired" => c.paired = parse_bool(line, k, v)?,
                "oracle_density" => c.oracle_density = parse_num(line, k, v)?,
                "output_dir" => c.output_dir = PathBuf::from(v),
                "verbosity" => c.verbosity = parse_num(line, k, v)?,
                _ => return Err(Error::InvalidConfig(format!("line {line}: unknown key '{k}'"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    /// Checks everything the derived configs check, plus the keys only used
    /// here.
    pub fn validate(&self) -> Result<()> {
        self.system_config().validate()?;
        self.scenario_spec().validate()?;
        self.bcd_config().validate()?;
        self.weights()?;
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be at least 1".into()));
        }
        if let Some(t) = self.t_fixed {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig("t_fixed must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn system_config(&self) -> SystemConfig {
        SystemConfig {
            n_devices: self.n_devices,
            total_bandwidth: self.bandwidth_hz,
            noise_density: 10f64.powf((self.n0_dbm_per_hz - 30.0) / 10.0),
            kappa: self.kappa,
            r_local: self.r_local,
            r_global: self.r_global,
            s_min: self.s_min,
            s_max: self.s_max,
            s_standard: self.s_standard,
        }
    }

    pub fn scenario_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            seed: self.seed,
            n_devices: self.n_devices,
            area_radius_m: self.area_radius_m,
            shadow_sigma_db: self.shadow_sigma_db,
            cycles_min: self.cycles_min,
            cycles_max: self.cycles_max,
            samples_per_device: self.samples_per_device,
            upload_bits: self.d_bits,
            p_min_dbm: self.p_min_dbm,
            p_max_dbm: self.p_max_dbm,
            f_min_hz: self.f_min_hz,
            f_max_hz: self.f_max_hz,
            ..ScenarioSpec::default()
        }
    }

    pub fn weights(&self) -> Result<Weights> {
        Weights::normalized(self.w1, self.w2, self.rho)
    }

    pub fn bcd_config(&self) -> BcdConfig {
        BcdConfig {
            eps0: self.eps0,
            max_rounds: self.max_bcd_rounds,
            fixed_deadline: self.t_fixed,
            sp2: Sp2Options {
                xi: self.xi,
                eps: self.eps_newton,
                max_iters: self.max_newton_iters,
                ..Sp2Options::default()
            },
            ..BcdConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = RunConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(c, RunConfig::default());
        let sys = c.system_config();
        assert_eq!(sys, SystemConfig::default());
        approx::assert_relative_eq!(sys.noise_density, 10f64.powf(-20.4), max_relative = 1e-12);
    }

    #[test]
    fn parses_values_and_comments() {
        let c = RunConfig::parse("n_devices = 7\np_max_dbm=10 # ten\nt_fixed = 100\npaired = false\n").unwrap();
        assert_eq!(c.n_devices, 7);
        assert_eq!(c.p_max_dbm, 10.0);
        assert_eq!(c.t_fixed, Some(100.0));
        assert!(!c.paired);
        assert_eq!(c.scenario_spec().n_devices, 7);
        assert_eq!(c.bcd_config().fixed_deadline, Some(100.0));
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["bogus = 1", "n_devices", "n_devices = x", "seed = 1\nseed = 2", "s_min = 700", "w1 = 0\nw2 = 0", "xi = 2"] {
            assert!(matches!(RunConfig::parse(text), Err(Error::InvalidConfig(_) | Error::InvalidWeights(_))), "{text}");
        }
    }
}

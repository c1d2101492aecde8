//! Random device topologies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::DeviceProfile;

/// Everything needed to draw one topology.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub n_devices: usize,
    /// Devices are uniform on a disk of this radius around the base station.
    pub area_radius_m: f64,
    /// Path loss `intercept + slope log10(d_km)` in dB.
    pub pathloss_intercept_db: f64,
    pub pathloss_slope_db: f64,
    pub shadow_sigma_db: f64,
    /// Distances below this are clipped.
    pub min_distance_m: f64,
    pub cycles_min: f64,
    pub cycles_max: f64,
    pub samples_per_device: f64,
    pub upload_bits: f64,
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 1,
            n_devices: 50,
            area_radius_m: 250.0,
            pathloss_intercept_db: 128.1,
            pathloss_slope_db: 37.6,
            shadow_sigma_db: 8.0,
            min_distance_m: 1.0,
            cycles_min: 1e4,
            cycles_max: 3e4,
            samples_per_device: 500.0,
            upload_bits: 28_100.0,
            p_min_dbm: 0.0,
            p_max_dbm: 12.0,
            f_min_hz: 0.0,
            f_max_hz: 2e9,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_devices == 0 {
            return bad("n_devices must be positive");
        }
        if !(self.area_radius_m > 0.0) {
            return bad("area radius must be positive");
        }
        if !(self.shadow_sigma_db >= 0.0) {
            return bad("shadow sigma must be non-negative");
        }
        if !(self.cycles_min > 0.0 && self.cycles_min <= self.cycles_max) {
            return bad("need 0 < cycles_min <= cycles_max");
        }
        if !(self.p_min_dbm <= self.p_max_dbm) {
            return bad("need p_min_dbm <= p_max_dbm");
        }
        if !(self.f_min_hz >= 0.0 && self.f_min_hz <= self.f_max_hz && self.f_max_hz > 0.0) {
            return bad("need 0 <= f_min_hz <= f_max_hz");
        }
        Ok(())
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

/// Deterministic path loss in dB at distance `d_km`.
pub fn path_loss_db(spec: &ScenarioSpec, d_km: f64) -> f64 {
    spec.pathloss_intercept_db + spec.pathloss_slope_db * d_km.log10()
}

pub fn gain_from_db(pl_db: f64) -> f64 {
    10f64.powf(-pl_db / 10.0)
}

/// Generator for stream `stream` of a seed. Stream 0 draws topologies; the
/// benchmarks use their own streams so that adding a benchmark never shifts
/// the topology.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws a topology. The same spec always produces the same devices, and
/// the power and frequency boxes do not consume randomness, so sweeping them
/// keeps the channels fixed.
pub fn gen_topology(spec: &ScenarioSpec) -> Result<Vec<DeviceProfile>> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, 0);
    let shadow = Normal::new(0.0, spec.shadow_sigma_db).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let p_min = if spec.p_min_dbm.is_finite() { dbm_to_watts(spec.p_min_dbm) } else { 0.0 };
    let p_max = dbm_to_watts(spec.p_max_dbm);
    let mut out = Vec::with_capacity(spec.n_devices);
    for _ in 0..spec.n_devices {
        let u: f64 = rng.random();
        let dist_m = (spec.area_radius_m * u.sqrt()).max(spec.min_distance_m);
        let pl = path_loss_db(spec, dist_m / 1000.0) + shadow.sample(&mut rng);
        let cycles = rng.random_range(spec.cycles_min..=spec.cycles_max);
        out.push(DeviceProfile {
            gain: gain_from_db(pl),
            cycles_per_std_sample: cycles,
            n_samples: spec.samples_per_device,
            upload_bits: spec.upload_bits,
            p_min,
            p_max,
            f_min: spec.f_min_hz,
            f_max: spec.f_max_hz,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn path_loss_example() {
        let spec = ScenarioSpec::default();
        assert_relative_eq!(path_loss_db(&spec, 0.1), 90.5, max_relative = 1e-12);
        assert_relative_eq!(gain_from_db(90.5), 8.912_509e-10, max_relative = 1e-6);
    }

    #[test]
    fn dbm_conversions() {
        assert_relative_eq!(dbm_to_watts(12.0), 0.015_848_93, max_relative = 1e-6);
        assert_relative_eq!(dbm_to_watts(0.0), 1e-3, max_relative = 1e-15);
        assert_relative_eq!(watts_to_dbm(dbm_to_watts(7.3)), 7.3, max_relative = 1e-12);
    }

    #[test]
    fn deterministic_and_box_independent() {
        let spec = ScenarioSpec { n_devices: 20, ..ScenarioSpec::default() };
        let a = gen_topology(&spec).unwrap();
        assert_eq!(a, gen_topology(&spec).unwrap());
        let b = gen_topology(&ScenarioSpec { p_max_dbm: 4.0, f_max_hz: 1e9, ..spec.clone() }).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.gain, y.gain);
            assert_eq!(x.cycles_per_std_sample, y.cycles_per_std_sample);
        }
        let c = gen_topology(&ScenarioSpec { seed: 2, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn gains_within_disk_limits() {
        let spec = ScenarioSpec { n_devices: 2000, shadow_sigma_db: 0.0, ..ScenarioSpec::default() };
        let devs = gen_topology(&spec).unwrap();
        let worst = gain_from_db(path_loss_db(&spec, 0.25));
        assert!(devs.iter().all(|d| d.gain >= worst * (1.0 - 1e-12)));
        assert!(devs.iter().all(|d| (1e4..=3e4).contains(&d.cycles_per_std_sample)));
    }
}

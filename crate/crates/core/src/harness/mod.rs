//! Experiment plumbing: topologies, reference allocators, sweeps and the
//! brute-force oracle.

pub mod benchmarks;
pub mod oracle;
pub mod scenario;
pub mod sweep;

pub use benchmarks::{benchmark_minpixel, benchmark_randpixel, comm_only, comp_only, ResolutionPolicy, SweepMode};
pub use oracle::{oracle_grid_search, OracleResult};
pub use scenario::{dbm_to_watts, gen_topology, watts_to_dbm, ScenarioSpec};
pub use sweep::{run_sweep, Algorithm, Axis, SweepRow, SweepSpec, SweepTable};

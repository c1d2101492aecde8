use thiserror::Error;

/// Constraint that an allocation failed.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    PowerBox { device: usize, value: f64 },
    FreqBox { device: usize, value: f64 },
    NegativeBandwidth { device: usize, value: f64 },
    BandwidthBudget { used: f64, budget: f64 },
    Resolution { device: usize, value: f64 },
    Deadline { device: usize, required: f64, deadline: f64 },
    Length { expected: usize, found: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::PowerBox { device, value } => {
                write!(f, "device {device}: power {value:e} W outside its box")
            }
            Violation::FreqBox { device, value } => {
                write!(f, "device {device}: frequency {value:e} Hz outside its box")
            }
            Violation::NegativeBandwidth { device, value } => {
                write!(f, "device {device}: negative bandwidth {value:e} Hz")
            }
            Violation::BandwidthBudget { used, budget } => {
                write!(f, "bandwidth {used:e} Hz exceeds budget {budget:e} Hz")
            }
            Violation::Resolution { device, value } => {
                write!(f, "device {device}: resolution {value} is neither s_min nor s_max")
            }
            Violation::Deadline { device, required, deadline } => write!(
                f,
                "device {device}: round time {required:e} s exceeds deadline {deadline:e} s"
            ),
            Violation::Length { expected, found } => {
                write!(f, "expected {expected} devices, found {found}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("{}data rate is zero, uplink time undefined", dev(.device))]
    ZeroRate { device: Option<usize> },

    #[error("{}CPU frequency is zero, computation time undefined", dev(.device))]
    ZeroFrequency { device: Option<usize> },

    #[error("infeasible allocation: {}", join(.0))]
    Infeasible(Vec<Violation>),

    #[error("device {device}: deadline {deadline:e} s infeasible, needs at least {required:e} s")]
    DeadlineInfeasible {
        device: usize,
        required: f64,
        deadline: f64,
    },

    #[error("device {device}: rate floor {rate:e} bit/s unreachable at maximum power")]
    RateUnreachable { device: usize, rate: f64 },

    #[error("bandwidth budget exhausted: floors need {required:e} Hz, budget is {budget:e} Hz")]
    BudgetExhausted { required: f64, budget: f64 },

    #[error("lambert W domain error: x = {0} < -1/e")]
    LambertDomain(f64),

    #[error("no sign change on [{lo}, {hi}] after bracket expansion")]
    Bracketing { lo: f64, hi: f64 },

    #[error("bandwidth price bisection failed: {0}")]
    NoMultiplierRoot(String),

    #[error("line search stalled at iteration {iteration} (|phi| = {phi_norm:e}, j > {max_j})")]
    LineSearchStalled {
        iteration: usize,
        phi_norm: f64,
        max_j: u32,
    },

    #[error("unbounded subproblem: {0}")]
    Unbounded(String),

    #[error("grid oracle supports at most 3 devices, got {0}")]
    OracleTooLarge(usize),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },
}

fn dev(d: &Option<usize>) -> String {
    d.map(|n| format!("device {n}: ")).unwrap_or_default()
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Attaches a device index to per-device degeneracy errors.
    pub fn at_device(self, n: usize) -> Error {
        match self {
            Error::ZeroRate { device: None } => Error::ZeroRate { device: Some(n) },
            Error::ZeroFrequency { device: None } => Error::ZeroFrequency { device: Some(n) },
            e => e,
        }
    }

    /// Strips `Round` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Round { source, .. } => source.root(),
            e => e,
        }
    }

    /// True when the error means "no feasible allocation exists" rather than a
    /// numerical failure of a solver.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self.root(),
            Error::Infeasible(_)
                | Error::DeadlineInfeasible { .. }
                | Error::RateUnreachable { .. }
                | Error::BudgetExhausted { .. }
                | Error::ZeroFrequency { .. }
                | Error::ZeroRate { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

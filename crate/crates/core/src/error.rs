//! Error type shared by all modules.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Grid JSON could not be parsed (syntax, missing or unknown fields).
    #[error("failed to parse grid description: {0}")]
    Parse(String),

    /// Two buses share the same id.
    #[error("duplicate bus id `{0}`")]
    DuplicateBus(String),

    /// A referenced bus id does not exist in the model.
    #[error("unknown bus id `{0}`")]
    UnknownBus(String),

    /// A line connects a bus to itself.
    #[error("line from `{0}` to itself is not allowed")]
    SelfLoop(String),

    /// Line susceptances must be strictly positive.
    #[error("line {from}-{to} has non-positive susceptance {value}")]
    NonPositiveSusceptance {
        from: String,
        to: String,
        value: f64,
    },

    /// Bus inertia and damping must be strictly positive.
    #[error("bus `{bus}` has non-positive {field} ({value})")]
    NonPositiveParameter {
        bus: String,
        field: &'static str,
        value: f64,
    },

    /// The line graph does not connect all buses.
    #[error("grid graph is disconnected")]
    Disconnected,

    /// Power injections must sum to zero (small residues are rebalanced).
    #[error("power injections sum to {0:.3e}, above the 1e-6 rebalance limit")]
    UnbalancedInjections(f64),

    /// Newton iteration for the power flow did not reach the tolerance.
    #[error(
        "power flow did not converge within {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    /// A converged power flow sits on an unstable branch.
    #[error("unstable operating point: |angle difference| ≥ π/2 on line {from}-{to}")]
    UnstableBranch { from: String, to: String },

    /// The block of eliminated buses in a Kron reduction is singular.
    #[error("singular elimination block in Kron reduction")]
    SingularEliminationBlock,

    /// Input matrix expected symmetric was not.
    #[error("matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    /// More than one (near-)zero eigenvalue: the underlying graph is disconnected.
    #[error("multiple zero modes found; the network is disconnected")]
    MultipleZeroModes,

    /// The smallest eigenvalue is too far from zero to be the expected zero mode.
    #[error("no zero mode: smallest eigenvalue {0:.3e} is not negligible")]
    NoZeroMode(f64),

    /// Modes that are not underdamped for the requested damping ratio.
    #[error("modes {modes:?} are not underdamped: 4λ ≤ γ² for γ = {gamma}")]
    OverdampedMode { modes: Vec<usize>, gamma: f64 },

    /// Perturbative formulas refuse near-degenerate spectra.
    #[error("spectrum is near-degenerate (gap {gap:.3e} < {threshold:.3e}); perturbation formulas are unreliable")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    /// Threshold weighting requested without a threshold value.
    #[error("threshold weighting requires a measure threshold")]
    MissingThreshold,

    /// The combined placement loop found no opposite-signed pair to zero out.
    #[error("no feasible sign-balancing pair; combined placement cannot satisfy all constraints")]
    NoFeasiblePair,

    /// Integration step exceeds the stability/accuracy guard.
    #[error("integration step {dt:.3e} exceeds the stability limit {limit:.3e}")]
    StepTooLarge { dt: f64, limit: f64 },

    /// The integration horizon never satisfied the tail criterion.
    #[error(
        "integration horizon {horizon:.3e}s too short: energy tail never fell below the threshold"
    )]
    HorizonTooShort { horizon: f64 },

    /// Mismatched vector/matrix dimensions or invalid scalar arguments.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A report could not be encoded as JSON.
    #[error("failed to encode report: {0}")]
    Encode(#[from] serde_json::Error),
}

//! Two-mode optical tomography at desk scale.
//!
//! The crate simulates the full measurement program for a two-mode field:
//! construct a Gaussian (or grid-sampled) state, compute or sample one-mode
//! optical tomograms of the bare modes and of four symplectically derived
//! modes, pull quadrature moments out of the tomograms, and feed them into
//! uncertainty checks, photon statistics and moment-series state
//! reconstruction.
//!
//! Conventions used throughout: `hbar = 1`, `[Q, P] = i`, vacuum variance
//! `1/2`, Wigner measure `dq dp / (2 pi)` per mode. The internal quadrature
//! ordering is `(Q1, P1, Q2, P2)`; the Robertson-matrix assembly permutes
//! into `(P1, P2, Q1, Q2)` at its own boundary.

pub mod gauss;
pub mod homodyne;
pub mod mode_network;
pub mod moment_engine;
pub mod photon;
pub mod quantum_state;
pub mod reconstruction;
pub mod scalar;
pub mod source;
pub mod tomography;
pub mod uncertainty;
pub mod weyl;

pub use homodyne::{HomodyneDataset, HomodyneRecord, NoiseModel, PhaseSchedule};
pub use mode_network::{Mode, QuadratureForm, SMatrix};
pub use moment_engine::{CrossMomentTable, OrderedMomentTable};
pub use quantum_state::{GaussianState, GridWigner, StateDescriptor};
pub use scalar::Real;
pub use source::{AnalyticSource, EmpiricalSource, Measured, MomentSource};
pub use tomography::{JointTomogram, TomogramSlice};
pub use uncertainty::{InequalityReport, Ordering, RobertsonMatrix, Verdict};

/// Concrete scalar used by the pipeline layers (datasets, reports, CLI).
pub type Scalar = f64;

pub type GaussianState64 = GaussianState<f64>;
pub type GaussianState32 = GaussianState<f32>;
pub type TomogramSlice64 = TomogramSlice<f64>;
pub type QuadratureForm64 = QuadratureForm<f64>;

/// Schema version stamped into every file the toolkit writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Highest operator degree the symbolic layer and moment solver accept.
pub const MAX_ORDER: u32 = 8;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unphysical state parameters: {0}")]
    UnphysicalState(String),
    #[error("non-symmetric covariance matrix (max asymmetry {0:.3e})")]
    NonSymmetric(f64),
    #[error("invalid mode label {0} (expected 1..=6)")]
    InvalidMode(u8),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("degenerate quadrature form (mu = nu = 0)")]
    DegenerateForm,
    #[error("point ({0:.3}, {1:.3}) outside grid domain")]
    OutsideGrid(f64, f64),
    #[error("operator degree {0} exceeds the configured maximum {1}")]
    DegreeOverflow(u32, u32),
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("dataset group (mode {mode}, theta {theta}) has {got} records, need at least {need}")]
    TooFewRecords { mode: u8, theta: f64, got: usize, need: usize },
    #[error("grid error: {0}")]
    Grid(String),
    #[error("truncation window too large for order {order}: bound {bound:.3e} > {limit:.3e}")]
    WindowTooLarge { order: u32, bound: f64, limit: f64 },
    #[error("excessive imaginary residue {0:.3e}")]
    ImaginaryResidue(f64),
    #[error("internal consistency: {0}")]
    Internal(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema version mismatch: file has {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

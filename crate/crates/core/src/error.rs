use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure kinds across the crate.
///
/// Variants fall into two families: input/configuration problems (bad files,
/// contract violations) and numerical failures (the data was accepted but a
/// step could not produce a trustworthy answer). [`Error::is_numerical`]
/// separates them so drivers can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sample count {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("missing boundary circle")]
    MissingBoundary,

    #[error("interior circle at r = {0} missing")]
    MissingCircle(f64),

    #[error("no interior circle available")]
    NoInteriorCircle,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite input value at node {0}")]
    NonFinite(usize),

    #[error("t = {t} lies within the node tolerance of node {node}; use the on-node branch")]
    NearNode { t: f64, node: usize },

    #[error("boundary zero or near-zero at node {node}; log|f| not integrable at the sampled resolution")]
    BoundaryZero { node: usize },

    #[error("evaluation too near boundary for quadrature accuracy (|z| = {0})")]
    NearBoundary(f64),

    #[error("outer factor modulus below floor at r = {rho}, node {node}")]
    OuterUnderflow { rho: f64, node: usize },

    #[error("alignment undefined (orthogonal reference)")]
    AlignmentUndefined,

    #[error("zero reference norm")]
    ZeroReference,

    #[error("Laurent order {order} too large for {n} nodes")]
    OrderTooLarge { order: usize, n: usize },

    #[error("pole extraction unstable; increase n or reduce r (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("inconsistent pole radius; r too small or spurious pole (|alpha| = {0})")]
    InconsistentPole(f64),

    #[error("Blaschke factor vanishes on the circle r = {0}; choose another radius")]
    VanishesOnCircle(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical step on otherwise valid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BoundaryZero { .. }
                | Error::NearBoundary(_)
                | Error::OuterUnderflow { .. }
                | Error::AlignmentUndefined
                | Error::ZeroReference
                | Error::IllConditioned(_)
                | Error::InconsistentPole(_)
                | Error::VanishesOnCircle(_)
        )
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Parse { .. } => "parse",
            Error::MissingBoundary => "missing_boundary",
            Error::MissingCircle(_) => "missing_circle",
            Error::NoInteriorCircle => "no_interior_circle",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::NonFinite(_) => "non_finite",
            Error::NearNode { .. } => "near_node",
            Error::BoundaryZero { .. } => "boundary_zero",
            Error::NearBoundary(_) => "near_boundary",
            Error::OuterUnderflow { .. } => "outer_underflow",
            Error::AlignmentUndefined => "alignment_undefined",
            Error::ZeroReference => "zero_reference",
            Error::OrderTooLarge { .. } => "order_too_large",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::InconsistentPole(_) => "inconsistent_pole",
            Error::VanishesOnCircle(_) => "vanishes_on_circle",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}

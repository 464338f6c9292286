use thiserror::Error;

/// Failure modes of the quasimode pipeline.
///
/// Variants are grouped by [`ErrorClass`], which the command-line front end
/// maps to its exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("truncation degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },

    #[error("series has vanishing constant term; reciprocal is singular (turning point)")]
    Singularity,

    #[error("series has vanishing constant term; square root has a branch point")]
    BranchPoint,

    #[error("branch {branch} does not square to the constant term {constant}")]
    BadBranch { branch: String, constant: String },

    #[error("x = {x} lies outside the half-line domain")]
    Domain { x: f64 },

    #[error("cannot expand non-integer powers around a = {a} <= 0")]
    Expansion { a: f64 },

    #[error("invalid potential family: {0}")]
    InvalidPotential(String),

    #[error("cannot parse potential: line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("eta must be nonzero")]
    ZeroEta,

    #[error("degenerate anchor: {0}")]
    DegenerateAnchor(String),

    #[error("anchor energy mismatch: z = {z} but eta^2 + V_h(a) = {expected}")]
    AnchorMismatch { z: String, expected: String },

    #[error("eta sign {eta} disagrees with Im V_h'(a) = {im_dv}")]
    EtaSign { eta: f64, im_dv: f64 },

    #[error("no real root of Im V_h(a) = {target}")]
    NoAnchor { target: f64 },

    #[error("infeasible energy: Re z - Re V_h(a) = {gap} <= 0 at every root")]
    InfeasibleEnergy { gap: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: last two estimates {last} and {previous}")]
    Accuracy { last: f64, previous: f64 },

    #[error("invalid argument: {0}")]
    Usage(String),
}

/// Coarse classification used for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Anchor,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::DegreeMismatch { .. }
            | Error::BadBranch { .. }
            | Error::Domain { .. }
            | Error::Expansion { .. }
            | Error::InvalidPotential(_)
            | Error::Parse { .. }
            | Error::Precondition(_)
            | Error::Usage(_) => ErrorClass::Usage,
            Error::Singularity
            | Error::BranchPoint
            | Error::ZeroEta
            | Error::DegenerateAnchor(_)
            | Error::AnchorMismatch { .. }
            | Error::EtaSign { .. }
            | Error::NoAnchor { .. }
            | Error::InfeasibleEnergy { .. } => ErrorClass::Anchor,
            Error::Accuracy { .. } => ErrorClass::Numerical,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DegreeMismatch { .. } => "degree_mismatch",
            Error::Singularity => "singularity",
            Error::BranchPoint => "branch_point",
            Error::BadBranch { .. } => "bad_branch",
            Error::Domain { .. } => "domain",
            Error::Expansion { .. } => "expansion",
            Error::InvalidPotential(_) => "invalid_potential",
            Error::Parse { .. } => "parse",
            Error::ZeroEta => "zero_eta",
            Error::DegenerateAnchor(_) => "degenerate_anchor",
            Error::AnchorMismatch { .. } => "anchor_mismatch",
            Error::EtaSign { .. } => "eta_sign",
            Error::NoAnchor { .. } => "no_anchor",
            Error::InfeasibleEnergy { .. } => "infeasible_energy",
            Error::Precondition(_) => "precondition",
            Error::Accuracy { .. } => "accuracy",
            Error::Usage(_) => "usage",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

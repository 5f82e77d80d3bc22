use alloc::string::String;
use core::fmt;

/// Errors produced by the numeric kernels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// The operation needs more values than were supplied.
    TooFewValues { needed: usize, got: usize },
    /// A relative measure would divide by a mean within 1e-12 of zero.
    NearZeroMean,
    /// A windowed operation asked for more checkpoints than the series holds.
    InsufficientCheckpoints { requested: usize, available: usize },
    /// Paired vectors differ in length.
    LengthMismatch { left: usize, right: usize },
    /// A label appears twice in a paired-score set.
    DuplicateLabel(String),
    /// Tied pairs encountered where the caller demanded none.
    TiesPresent { count: u64 },
    /// A correlation over a zero-variance column is undefined.
    ZeroVariance,
    /// An argument is outside its documented domain.
    InvalidParameter(&'static str),
    /// The point set cannot support the requested fit.
    DegenerateFit(&'static str),
    /// No sample size up to the scan cap satisfies the query.
    Unsatisfiable { cap: usize },
    /// Relative error against a true value of zero is undefined.
    ZeroActual,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::TooFewValues { needed, got } => {
                write!(f, "needs at least {needed} values, got {got}")
            }
            Error::NearZeroMean => {
                write!(f, "relative measure undefined: mean is within 1e-12 of zero")
            }
            Error::InsufficientCheckpoints { requested, available } => {
                write!(f, "window of {requested} checkpoints requested, series has {available}")
            }
            Error::LengthMismatch { left, right } => {
                write!(f, "paired vectors differ in length: {left} vs {right}")
            }
            Error::DuplicateLabel(label) => write!(f, "duplicate label {label:?}"),
            Error::TiesPresent { count } => {
                write!(f, "{count} tied pair(s) present and tie policy forbids ties")
            }
            Error::ZeroVariance => write!(f, "correlation undefined: zero variance"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::DegenerateFit(what) => write!(f, "degenerate fit input: {what}"),
            Error::Unsatisfiable { cap } => {
                write!(f, "no sample size up to {cap} satisfies the query")
            }
            Error::ZeroActual => {
                write!(f, "relative prediction error undefined: actual value is zero")
            }
        }
    }
}

impl core::error::Error for Error {}

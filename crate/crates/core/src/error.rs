use thiserror::Error;

pub type Result<T> = std::result::Result<T, StefanError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StefanError {
    /// A parameter or configuration value lies outside its admissible range.
    #[error("invalid value for `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    /// A delay-line query fell outside the stored history window.
    #[error("time {query} s is outside the stored window [{start}, {end}] s")]
    OutOfRange { query: f64, start: f64, end: f64 },

    #[error("delay line samples must be strictly increasing in time (got {next} after {last})")]
    NonMonotonicSample { last: f64, next: f64 },

    #[error("domain collapse: interface position fell to {s} m at t = {t} s")]
    DomainCollapse { s: f64, t: f64 },

    #[error("numerical blow-up detected at t = {t} s")]
    NumericalBlowUp { t: f64 },

    #[error("time step {dt} s under-resolves delay {delay} s")]
    UnderResolved { dt: f64, delay: f64 },

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config error: {0}")]
    Config(String),
}

impl StefanError {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        StefanError::Domain {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors raised by the time stepper itself (collapse, blow-up).
    pub fn is_numerical_fatal(&self) -> bool {
        matches!(
            self,
            StefanError::DomainCollapse { .. } | StefanError::NumericalBlowUp { .. }
        )
    }
}

use thiserror::Error;

/// Errors raised by the analytics, simulation and monitoring layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{name} = {value} is outside {range}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("event {event} is inconsistent with {detail}")]
    InconsistentOutcome { event: String, detail: String },

    #[error("utility lines are parallel (|Q| = {0:e})")]
    ParallelLines(f64),

    #[error("no bracketing sign change: {0}")]
    NoBracket(String),

    #[error("stage {stage}: utility {value} matches no support point")]
    UnmatchedUtility { stage: u64, value: f64 },

    #[error("stage {stage}: utility {value} has zero probability under both hypotheses")]
    ImpossibleOutcome { stage: u64, value: f64 },

    #[error("utility stream is empty")]
    EmptyStream,

    #[error("n_stages must be at least 1")]
    NoStages,

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by bad user input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::Config(_)
                | Error::OutOfDomain { .. }
                | Error::InvalidPopulation(_)
                | Error::InconsistentOutcome { .. }
                | Error::NoStages
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            name,
            value,
            range: "[0, 1]",
        })
    }
}

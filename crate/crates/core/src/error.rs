use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("density is zero at x = {0}")]
    ZeroDensity(f64),
    #[error("distribution has no density (atomic kind)")]
    NoDensity,
    #[error("interval [{lo}, {hi}] carries no probability mass")]
    EmptyMass { lo: f64, hi: f64 },
    #[error("no probability mass above t = {0}")]
    EmptyTail(f64),
    #[error("c-linear price map is not strictly increasing near value {0}")]
    NonMonotone(f64),
    #[error("insensitive value functions have no derivative")]
    NotDifferentiable,
    #[error("derivative stays above 1 on (0, p_bar]")]
    NoCrossing,
    #[error("no-sale condition does not hold (lhs {lhs} > rhs {rhs})")]
    ConditionNotMet { lhs: f64, rhs: f64 },
    #[error("retention distribution is not retention-regular near x = {0}")]
    NotRegular(f64),
    #[error("no alive agents")]
    EmptyPopulation,
    #[error("invalid simulation config: {0}")]
    ConfigInvalid(String),
    #[error("paired configs differ in more than the pricing scheme")]
    MismatchedConfigs,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error stems from user input rather than a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::ConfigInvalid(_)
                | Error::MismatchedConfigs
                | Error::Config(_)
                | Error::Json(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

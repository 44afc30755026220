use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("divergent zeta: exponent s = {s} must exceed 1")]
    DivergentZeta { s: f64 },

    #[error("term budget exceeded: {requested} terms requested, budget is {budget}")]
    TermBudget { requested: u64, budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("loglog undefined: variance lower bound {variance_lo} does not exceed e")]
    LoglogUndefined { variance_lo: f64 },

    #[error("schedule index k = {k} outside [{k_min}, {k_max}]")]
    ScheduleOutOfRange { k: u64, k_min: u64, k_max: u64 },

    #[error("schedule undefined at k = {k}: split base {base} is not in (0, 1)")]
    ScheduleUndefined { k: u64, base: f64 },

    #[error("beta condition unsatisfiable at k = {k}: required log beta {log_beta_min} is not below log log k")]
    BetaUnsatisfiable { k: u64, log_beta_min: f64 },

    #[error("u_k = exp({log_u}) at k = {k} is below the smallest positive normal f64")]
    Unrepresentable { k: u64, log_u: f64 },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("tilt target too large: {target} must be below {limit}")]
    TiltTargetTooLarge { target: f64, limit: f64 },

    #[error("infeasible truncation at u = {u}: achieved tail fraction {achieved_fraction} > target {target_fraction} with {terms} terms")]
    Infeasible {
        u: f64,
        terms: u64,
        target_fraction: f64,
        achieved_fraction: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the caller's parameters rather than by a run.
    pub fn is_configuration(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Json(_))
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

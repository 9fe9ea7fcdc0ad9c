use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("monomial t^{j} s^{k} violates l1*j + l2*k = l1*m ({lhs} != {rhs})")]
    WeightViolation { j: u32, k: u32, lhs: i64, rhs: String },

    #[error("weight constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("no variable orientation satisfies ell >= 1 and m >= 2*ell")]
    SwapImpossible,

    #[error("cannot project the origin onto the unit disto-circle")]
    OriginProjection,

    #[error("zeros closer than the sampling resolution near theta = {theta} (n_samples = {n_samples})")]
    UnresolvedZero { theta: f64, n_samples: usize },

    #[error("negative component has several minima, at theta = {first} and theta = {second}")]
    NonUniqueMinimum { first: f64, second: f64 },

    #[error("no acute monotone splitting of the positive arc starting at theta = {start} (width {width})")]
    PropertyOneFailure { start: f64, width: f64 },

    #[error("vanishing order undetectable at theta = {theta}: {reason}")]
    OrderUndetectable { theta: f64, reason: String },

    #[error("callback symbol needs a p_hint to report the zero order")]
    MissingPHint,

    #[error("sector plan infeasible: {0}")]
    PlanInfeasible(String),

    #[error("ray not reached: {0}")]
    NotReached(String),

    #[error("curve derivative requested at breakpoint tau = {tau}")]
    BreakpointDerivative { tau: f64 },

    #[error("degenerate plan: {0}")]
    DegeneratePlan(String),

    #[error("start ({t}, {s}) is not covered by any plan")]
    UncoveredStart { t: f64, s: f64 },

    #[error("growth violation from start ({t}, {s}) at tau = {tau}: increment {increment}")]
    GrowthViolation { t: f64, s: f64, tau: f64, increment: f64 },

    #[error("curve from ({t}, {s}) ends at radius {radius} inside the base disk")]
    EscapeFailure { t: f64, s: f64, radius: f64 },

    #[error("closed-form jacobian {closed} disagrees with finite differences {numeric} at ({t}, {s})")]
    JacobianMismatch { t: f64, s: f64, closed: f64, numeric: f64 },

    #[error("quadrature unstable: {0}")]
    QuadratureUnstable(String),

    #[error("decay fit unstable: residual {residual}")]
    FitUnstable { residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code: 1 for bad input, 3 for an unstable decay fit,
    /// 2 for any analysis that ran and failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MalformedInput(_)
            | Error::WeightViolation { .. }
            | Error::ConstraintViolation(_)
            | Error::SwapImpossible
            | Error::MissingPHint
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_) => 1,
            Error::FitUnstable { .. } => 3,
            _ => 2,
        }
    }
}

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// An indifference-curve value fell outside the Edgeworth box. `value` is unclamped.
    #[error("value {value} outside the feasible range [{lo}, {hi}]")]
    OutOfBox { value: f64, lo: f64, hi: f64 },

    /// The requested utility level is not reachable for the given holding of the other good.
    #[error("infeasible utility level (ratio {ratio} outside [0, 1])")]
    InfeasibleLevel { ratio: f64 },

    #[error("allocation on the boundary of the Edgeworth box: {0}")]
    BoundaryAllocation(String),

    #[error("price ratio {beta} outside the open feasible interval ({lo}, {hi})")]
    PriceInfeasible { beta: f64, lo: f64, hi: f64 },

    /// Root finding failed; `roots` carries every root found, for diagnosis.
    #[error("solver failure: {reason} (roots: {roots:?})")]
    Solver { reason: String, roots: Vec<Complex64> },

    #[error("no sample dominates the Nash equilibrium")]
    CoreEmpty,

    #[error("degenerate core bounds: phi_core equals phi_nash for link {link}")]
    DegenerateBounds { link: u8 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn solver(reason: impl Into<String>, roots: Vec<Complex64>) -> Self {
        Error::Solver {
            reason: reason.into(),
            roots,
        }
    }
}

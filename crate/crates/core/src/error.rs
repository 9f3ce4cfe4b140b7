use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature budget exceeded: best estimate {value:e} with error bound {error:e}")]
    QuadratureBudget { value: f64, error: f64 },

    #[error("integrand is not finite at x = {x:e}")]
    NonFiniteIntegrand { x: f64 },

    #[error("root is not bracketed: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    InvalidBracket { f_lo: f64, f_hi: f64 },

    #[error("root finder exhausted {iterations} iterations, bracket [{lo:e}, {hi:e}]")]
    RootBudget { iterations: usize, lo: f64, hi: f64 },

    #[error("degenerate vega {vega:e} at S = {spot}")]
    DegenerateVega { spot: f64, vega: f64 },

    #[error("no implied volatility: price gap {gap_lo:e} at the lower bracket end, {gap_hi:e} at the upper end")]
    NoSolution { gap_lo: f64, gap_hi: f64 },

    #[error("grid point {index}: {source}")]
    AtGridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at(index: usize, source: Error) -> Self {
        Error::AtGridPoint {
            index,
            source: Box::new(source),
        }
    }

    /// True when the error stems from invalid input rather than a numerical failure.
    pub fn is_domain(&self) -> bool {
        match self {
            Error::Domain(_) => true,
            Error::AtGridPoint { source, .. } => source.is_domain(),
            _ => false,
        }
    }

    /// Errors that mark a single curve point as missing instead of aborting the curve.
    pub fn is_missing_point(&self) -> bool {
        matches!(
            self,
            Error::DegenerateVega { .. } | Error::NoSolution { .. }
        )
    }
}

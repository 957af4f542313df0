use thiserror::Error;

/// Which no-arbitrage bound an option price violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceBound {
    /// Price at or below intrinsic value.
    Lower,
    /// Price at or above the forward (calls) or the strike (puts).
    Upper,
}

impl std::fmt::Display for PriceBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PriceBound::Lower => f.write_str("lower (intrinsic)"),
            PriceBound::Upper => f.write_str("upper (no-arbitrage)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{context}: argument outside the domain: {detail}")]
    Domain {
        context: &'static str,
        detail: String,
    },

    #[error("{context}: argument outside the supported range: {detail}")]
    Range {
        context: &'static str,
        detail: String,
    },

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("{context}: unsupported parameter value: {detail}")]
    Unsupported {
        context: &'static str,
        detail: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("expiry {expiry} is not on the simulation grid")]
    OffGrid { expiry: f64 },

    #[error("horizon mismatch: expected {expected}, found {found}")]
    HorizonMismatch { expected: f64, found: f64 },

    #[error("price {price} violates the {bound} bound {limit}")]
    PriceOutOfBounds {
        bound: PriceBound,
        price: f64,
        limit: f64,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("infeasible grid: {0}")]
    InfeasibleGrid(String),

    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Library module the error originates from, for machine-readable reports.
    pub fn module(&self) -> &'static str {
        match self {
            Error::Domain { context, .. }
            | Error::Range { context, .. }
            | Error::Unsupported { context, .. } => context.split("::").next().unwrap_or(context),
            Error::InvalidParameter { .. } => "model",
            Error::Config(_) | Error::InsufficientData(_) | Error::Degenerate(_) => "simulate",
            Error::OffGrid { .. } | Error::HorizonMismatch { .. } => "pricing",
            Error::PriceOutOfBounds { .. } => "impliedvol",
            Error::InfeasibleGrid(_) => "calibrate",
            Error::Parse { .. } | Error::Io(_) => "io",
        }
    }

    /// Short stable identifier of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Range { .. } => "range",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::Unsupported { .. } => "unsupported",
            Error::Config(_) => "config",
            Error::OffGrid { .. } => "off_grid",
            Error::HorizonMismatch { .. } => "horizon_mismatch",
            Error::PriceOutOfBounds { .. } => "price_out_of_bounds",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Degenerate(_) => "degenerate",
            Error::InfeasibleGrid(_) => "infeasible_grid",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn domain(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn range(context: &'static str, detail: impl Into<String>) -> Self {
        Error::Range {
            context,
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            detail: e.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

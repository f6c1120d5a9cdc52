//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavelength {lambda_m:.6e} m outside the valid range [{min_m:.3e}, {max_m:.3e}] m of dispersion set '{model}' (axis {axis})")]
    WavelengthOutOfRange {
        model: String,
        axis: String,
        lambda_m: f64,
        min_m: f64,
        max_m: f64,
    },

    #[error("frequency {omega:.6e} rad/s too close to the dispersion range edge for a derivative stencil")]
    EdgeProximity { omega: f64 },

    #[error("dispersion set has no axis named '{0}'")]
    UnknownAxis(String),

    #[error("quadrature did not converge: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    QuadratureNotConverged { residual: f64, tol: f64 },

    #[error("group indices nearly degenerate: |n'_s - n'_i| = {0:.3e} < 1e-6; the closed-form collection probability is not valid")]
    DegenerateGroupIndices(f64),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("root bracketing failed: no sign change of {what} in [{lo:.6e}, {hi:.6e}]")]
    NoRoot { what: String, lo: f64, hi: f64 },

    #[error("JSA evaluation failed at grid index ({row}, {col}): {source}")]
    GridPoint {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config/input, 3 numeric/physics, 4 fit.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Data(_) | Error::InvalidParameter(_) | Error::Io(_) => 2,
            Error::Fit(_) => 4,
            Error::GridPoint { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

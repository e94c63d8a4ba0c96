use thiserror::Error;

/// Errors raised by the filtering, tasking and simulation stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("orbit is not elliptical (e = {eccentricity:.6})")]
    NonElliptical { eccentricity: f64 },

    #[error("degenerate rectilinear orbit (|h| = {h:e})")]
    DegenerateOrbit { h: f64 },

    #[error("kepler equation did not converge (M = {mean_anomaly}, e = {eccentricity})")]
    KeplerNonConvergence { mean_anomaly: f64, eccentricity: f64 },

    #[error("zero-range measurement geometry")]
    ZeroRange,

    #[error("matrix is not positive definite after repair: {0}")]
    IllConditioned(&'static str),

    #[error("admissible region is empty")]
    EmptyAdmissibleRegion,

    #[error("mixture splitting exceeded the component cap of {cap}")]
    ComponentExplosion { cap: usize },

    #[error("propagation of component {index} failed: {source}")]
    ComponentPropagation {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("posterior normalization vanished: measurements are inconsistent with the model")]
    InconsistentModel,

    #[error("mixture has no positive weight")]
    ZeroWeight,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scan {scan}: {source}")]
    Scan {
        scan: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

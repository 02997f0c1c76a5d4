use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read scenario file {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario document: {0}")]
    Parse(String),

    #[error("missing required key `{0}`")]
    MissingKey(String),

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last step {last_step:e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("infeasible pre-fault loading: negative square-root argument at v = {v}")]
    InfeasibleLoading { v: f64 },

    #[error("no no-load equilibrium: p_g (x'_d + x_l_post) / e = {ratio} exceeds 1")]
    NoLoadInfeasible { ratio: f64 },

    #[error("no sign change of the accelerating power found on ({lo}, {hi}) rad")]
    NoBracket { lo: f64, hi: f64 },

    #[error("load-bus algebra infeasible at delta = {delta} rad (discriminant {discriminant:e})")]
    LoadBusInfeasible { delta: f64, discriminant: f64 },

    #[error("non-finite state at t = {time} s")]
    NonFinite { time: f64 },

    #[error("no outward-pointing boundary points found: {0}")]
    NoOutwardBoundary(String),
}

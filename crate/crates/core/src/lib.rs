//! Zoom-ESPRIT frequency estimation with a double-criterion estimator for the
//! number of complex sinusoids in colored noise of unknown covariance.
//!
//! The processing chain is
//!
//! ```text
//! signal -> freq_shift -> lowpass -> decimate -> Hankel -> covariance -> EVD
//!        -> signal count (double criterion / AIC / MDL) -> LS-ESPRIT -> shift back
//! ```
//!
//! [`harness`] runs Monte Carlo sweeps of the probability of correct
//! signal-count estimation and [`cli`] wraps everything for the `zesprit`
//! binary.

pub mod cli;
pub mod error;
pub mod esprit;
pub mod harness;
pub mod order;
pub mod signal;
pub mod subspace;
pub mod zoom;

pub use error::{Error, Result};
pub use esprit::{zoom_esprit, FrequencyEstimates, SignalCount, ZoomAnalysis};
pub use harness::{sweep, ExperimentSpec, SweepResult};
pub use order::{Estimator, OrderDecision};
pub use signal::{ComplexSignal, SinusoidParams};
pub use subspace::{CovarianceNorm, EigenSpectrum};
pub use zoom::{FirFilter, ZoomConfig};

pub use num_complex::Complex64;

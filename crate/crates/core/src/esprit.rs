//! Least-squares ESPRIT on the zoomed baseband and the end-to-end zoom-ESPRIT chain.

use std::f64::consts::PI;

use nalgebra::{linalg::Schur, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::order::{estimate_order_double, OrderDecision};
use crate::signal::ComplexSignal;
use crate::subspace::{eig_hermitian_desc, hankel, sample_covariance, EigenSpectrum};
use crate::zoom::{zoom_pipeline, ZoomConfig};

/// Largest condition number accepted for `E₁ᴴE₁`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyEstimates {
    /// Hz, relative to the shift frequency, ascending.
    pub baseband: Vec<f64>,
    /// Hz, in the original band.
    pub shifted: Vec<f64>,
}

impl FrequencyEstimates {
    pub fn count(&self) -> usize {
        self.baseband.len()
    }
}

/// First `k` eigenvector columns, in eigenvalue order.
pub fn signal_subspace(spectrum: &EigenSpectrum, k: usize) -> Result<DMatrix<Complex64>> {
    let m = spectrum.dim();
    if k == 0 || k >= m {
        return Err(Error::Dimension(format!(
            "signal subspace dimension must lie in [1, {}], got {k}",
            m.saturating_sub(1)
        )));
    }
    Ok(spectrum.eigenvectors().columns(0, k).into_owned())
}

/// `Φ = (E₁ᴴE₁)⁻¹ E₁ᴴE₂`, with `E₁`/`E₂` the first/last `M-1` rows of `Es`.
pub fn rotation_operator(es: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let (m, k) = es.shape();
    if k == 0 || m < k + 1 {
        return Err(Error::Dimension(format!(
            "rotation operator needs at least K + 1 rows, got {m}x{k}"
        )));
    }
    let upper = es.rows(0, m - 1);
    let lower = es.rows(1, m - 1);
    let gram = upper.adjoint() * upper;
    let cross = upper.adjoint() * lower;

    let gram_eigs = gram.clone().symmetric_eigenvalues();
    let (lo, hi) = gram_eigs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::Singular { condition });
    }
    gram.lu().solve(&cross).ok_or(Error::Singular { condition })
}

fn principal_arg(v: Complex64) -> f64 {
    let a = v.arg();
    // (-π, π]
    if a <= -PI {
        PI
    } else {
        a
    }
}

/// Eigenvalue arguments of `Φ` mapped to Hz at the decimated rate,
/// `arg(v) / (2πA) · F_s`, sorted ascending.
pub fn frequencies_from_rotation(
    phi: &DMatrix<Complex64>,
    sample_rate: f64,
    zoom_factor: usize,
) -> Result<Vec<f64>> {
    if !phi.is_square() || phi.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "rotation operator must be square, got {}x{}",
            phi.nrows(),
            phi.ncols()
        )));
    }
    let eigenvalues: Vec<Complex64> = if phi.nrows() == 1 {
        vec![phi[(0, 0)]]
    } else {
        Schur::try_new(phi.clone(), f64::EPSILON, 10_000)
            .and_then(|s| s.eigenvalues())
            .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?
            .iter()
            .copied()
            .collect()
    };
    let scale = sample_rate / (2.0 * PI * zoom_factor as f64);
    let mut freqs: Vec<f64> = eigenvalues
        .into_iter()
        .map(|v| principal_arg(v) * scale)
        .collect();
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(Error::Numerical("rotation eigenvalue is not finite".into()));
    }
    freqs.sort_by(f64::total_cmp);
    Ok(freqs)
}

/// `f̂_k = f_shift + f̂_{s,k}`
pub fn shift_back(baseband: &[f64], shift_freq: f64) -> Vec<f64> {
    baseband.iter().map(|f| shift_freq + f).collect()
}

/// Plain LS-ESPRIT of `k` tones on an un-zoomed sequence sampled at `sample_rate`.
pub fn esprit_frequencies(
    sequence: &[Complex64],
    rows: usize,
    k: usize,
    sample_rate: f64,
) -> Result<Vec<f64>> {
    let y = hankel(sequence, rows)?;
    let r = sample_covariance(&y, 1.0 / y.cols() as f64)?;
    let spectrum = eig_hermitian_desc(&r)?;
    let es = signal_subspace(&spectrum, k)?;
    let phi = rotation_operator(&es)?;
    frequencies_from_rotation(&phi, sample_rate, 1)
}

/// How many tones ESPRIT should extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalCount {
    Fixed(usize),
    /// Use the double-criterion estimate.
    Auto,
}

/// Everything up to and including the covariance eigendecomposition.
#[derive(Debug, Clone)]
pub struct ZoomAnalysis {
    config: ZoomConfig,
    baseband: ComplexSignal,
    spectrum: EigenSpectrum,
}

impl ZoomAnalysis {
    pub fn run(signal: &ComplexSignal, config: &ZoomConfig) -> Result<Self> {
        let fir = config.lowpass()?;
        let baseband = zoom_pipeline(signal, config, &fir)?;
        let y = hankel(baseband.samples(), config.matrix_rows())?;
        let norm = config
            .covariance_norm()
            .factor(y.rows(), y.cols(), config.zoom_factor());
        let r = sample_covariance(&y, norm)?;
        let spectrum = eig_hermitian_desc(&r)?;
        Ok(Self {
            config: config.clone(),
            baseband,
            spectrum,
        })
    }

    pub fn config(&self) -> &ZoomConfig {
        &self.config
    }

    /// Decimated baseband sequence fed to the Hankel matrix.
    pub fn baseband(&self) -> &ComplexSignal {
        &self.baseband
    }

    pub fn spectrum(&self) -> &EigenSpectrum {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.spectrum.eigenvalues()
    }

    /// Number of snapshots `L_A`.
    pub fn snapshots(&self) -> usize {
        self.config.matrix_cols()
    }

    pub fn estimate_order(&self) -> Result<OrderDecision> {
        estimate_order_double(self.eigenvalues())
    }

    pub fn frequencies(&self, count: usize) -> Result<FrequencyEstimates> {
        let m = self.spectrum.dim();
        if count + 1 >= m {
            return Err(Error::Dimension(format!(
                "signal count {count} leaves no room for the shift invariance with M_A = {m}"
            )));
        }
        let es = signal_subspace(&self.spectrum, count)?;
        let phi = rotation_operator(&es)?;
        let baseband =
            frequencies_from_rotation(&phi, self.config.sample_rate(), self.config.zoom_factor())?;
        let shifted = shift_back(&baseband, self.config.shift_freq());
        Ok(FrequencyEstimates { baseband, shifted })
    }
}

/// zoom -> Hankel -> covariance -> EVD -> (signal count) -> LS-ESPRIT -> shift back.
pub fn zoom_esprit(
    signal: &ComplexSignal,
    config: &ZoomConfig,
    count: SignalCount,
) -> Result<FrequencyEstimates> {
    let analysis = ZoomAnalysis::run(signal, config)?;
    let k = match count {
        SignalCount::Fixed(k) => k,
        SignalCount::Auto => analysis.estimate_order()?.count,
    };
    analysis.frequencies(k)
}

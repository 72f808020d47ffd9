//! Band translation: frequency shift, low-pass filtering and decimation.
//!
//! A band `[f_1, f_1 + F_p]` with `F_p = F_s / A` is moved to baseband by
//! mixing with `exp(-j 2π n f_shift / F_s)`, `f_shift = f_1 + F_p / 2`,
//! filtered with a linear-phase FIR whose cutoff sits at `F_p / 2`, and kept
//! every `A`-th sample. The filter runs causally and its start-up transient is
//! kept, so the decimated sequence has exactly `floor(N / A)` samples.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::ComplexSignal;
use crate::subspace::CovarianceNorm;

/// Default low-pass length for zoom factor `A`: the shortest odd length
/// `>= A + 1`.
///
/// The filter runs causally with its start-up transient kept, so every
/// decimated sample whose window reaches back before the record start is
/// distorted. At this length only the first decimated sample is, which adds
/// exactly one model-error eigenvalue just below the signal eigenvalues.
/// Longer filters color the decimated noise more strongly but each extra
/// distorted sample lifts another eigenvalue out of the noise floor at high
/// SNR, which the double criterion then miscounts.
pub fn default_filter_taps(zoom_factor: usize) -> usize {
    ((zoom_factor + 1) | 1).max(3)
}

/// Smallest covariance dimension for which the double-criterion search range
/// `[1, floor(M_A/2) - 2]` is nonempty.
pub const MIN_MATRIX_ROWS: usize = 6;

/// Zoom analysis parameters together with the quantities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoomConfig {
    sample_rate: f64,
    n_samples: usize,
    band_start: f64,
    zoom_factor: usize,
    matrix_rows: usize,
    filter_taps: usize,
    covariance_norm: CovarianceNorm,
}

impl ZoomConfig {
    /// Band `[band_start, band_start + sample_rate / zoom_factor]`, with
    /// `M_A = floor(N_A / 2)`.
    pub fn new(
        sample_rate: f64,
        n_samples: usize,
        band_start: f64,
        zoom_factor: usize,
    ) -> Result<Self> {
        let decimated = n_samples.checked_div(zoom_factor).unwrap_or(0);
        let cfg = Self {
            sample_rate,
            n_samples,
            band_start,
            zoom_factor,
            matrix_rows: decimated / 2,
            filter_taps: default_filter_taps(zoom_factor),
            covariance_norm: CovarianceNorm::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Band of width `sample_rate / zoom_factor` centered on `center`.
    pub fn centered(
        sample_rate: f64,
        n_samples: usize,
        center: f64,
        zoom_factor: usize,
    ) -> Result<Self> {
        if zoom_factor == 0 {
            return Err(Error::Configuration(
                "zoom factor must be at least 2".into(),
            ));
        }
        let width = sample_rate / zoom_factor as f64;
        Self::new(sample_rate, n_samples, center - 0.5 * width, zoom_factor)
    }

    pub fn with_matrix_rows(mut self, rows: usize) -> Result<Self> {
        self.matrix_rows = rows;
        self.validate()?;
        Ok(self)
    }

    pub fn with_filter_taps(mut self, taps: usize) -> Result<Self> {
        self.filter_taps = taps;
        self.validate()?;
        Ok(self)
    }

    pub fn with_covariance_norm(mut self, norm: CovarianceNorm) -> Result<Self> {
        self.covariance_norm = norm;
        self.validate()?;
        Ok(self)
    }

    /// Same analysis applied to a record of a different length.
    pub fn with_n_samples(mut self, n_samples: usize) -> Result<Self> {
        let keep_half = self.matrix_rows == self.decimated_count() / 2;
        self.n_samples = n_samples;
        if keep_half {
            self.matrix_rows = self.decimated_count() / 2;
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::Configuration(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if !self.band_start.is_finite() {
            return Err(Error::Configuration("band start must be finite".into()));
        }
        if self.zoom_factor < 2 {
            return Err(Error::Configuration(format!(
                "zoom factor must be at least 2, got {}",
                self.zoom_factor
            )));
        }
        let decimated = self.decimated_count();
        if self.matrix_rows < MIN_MATRIX_ROWS {
            return Err(Error::Configuration(format!(
                "covariance dimension M_A = {} is below {MIN_MATRIX_ROWS} \
                 (N = {}, A = {}, N_A = {decimated})",
                self.matrix_rows, self.n_samples, self.zoom_factor
            )));
        }
        if self.matrix_rows > decimated {
            return Err(Error::Configuration(format!(
                "covariance dimension M_A = {} exceeds N_A = {decimated}",
                self.matrix_rows
            )));
        }
        if self.filter_taps < 3 || self.filter_taps.is_multiple_of(2) {
            return Err(Error::Configuration(format!(
                "filter length must be odd and at least 3, got {}",
                self.filter_taps
            )));
        }
        if self.filter_taps > self.n_samples {
            return Err(Error::Configuration(format!(
                "filter length {} exceeds record length {}",
                self.filter_taps, self.n_samples
            )));
        }
        if let CovarianceNorm::Custom(c) = self.covariance_norm {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Configuration(format!(
                    "covariance normalization must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn band_start(&self) -> f64 {
        self.band_start
    }

    pub fn zoom_factor(&self) -> usize {
        self.zoom_factor
    }

    /// `F_p = F_s / A`
    pub fn band_width(&self) -> f64 {
        self.sample_rate / self.zoom_factor as f64
    }

    /// `f_shift = f_1 + F_p / 2`
    pub fn shift_freq(&self) -> f64 {
        self.band_start + 0.5 * self.band_width()
    }

    /// `N_A = floor(N / A)`
    pub fn decimated_count(&self) -> usize {
        self.n_samples / self.zoom_factor
    }

    /// `M_A`
    pub fn matrix_rows(&self) -> usize {
        self.matrix_rows
    }

    /// `L_A = N_A - M_A + 1`
    pub fn matrix_cols(&self) -> usize {
        self.decimated_count() - self.matrix_rows + 1
    }

    pub fn filter_taps(&self) -> usize {
        self.filter_taps
    }

    pub fn covariance_norm(&self) -> CovarianceNorm {
        self.covariance_norm
    }

    /// The anti-aliasing filter for this configuration: cutoff at `F_p / 2`.
    pub fn lowpass(&self) -> Result<FirFilter> {
        design_lowpass(1.0 / self.zoom_factor as f64, self.filter_taps)
    }
}

/// Real, odd-length, symmetric (linear-phase) FIR filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    taps: Vec<f64>,
}

impl FirFilter {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.is_empty() || taps.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "filter needs an odd number of taps, got {}",
                taps.len()
            )));
        }
        let scale = taps.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let n = taps.len();
        for i in 0..n / 2 {
            if (taps[i] - taps[n - 1 - i]).abs() > 1e-12 * scale {
                return Err(Error::InvalidParameter(format!(
                    "filter taps are not symmetric at index {i}"
                )));
            }
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn group_delay(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Complex frequency response at `freq` cycles/sample.
    pub fn response(&self, freq: f64) -> Complex64 {
        self.taps
            .iter()
            .enumerate()
            .map(|(n, &h)| Complex64::from_polar(h, -TAU * freq * n as f64))
            .sum()
    }
}

fn hamming(n_taps: usize) -> impl Iterator<Item = f64> {
    let span = (n_taps - 1) as f64;
    (0..n_taps).map(move |n| 0.54 - 0.46 * (TAU * n as f64 / span).cos())
}

/// Hamming-windowed sinc low-pass, scaled to unit DC gain.
///
/// `normalized_cutoff` is a fraction of Nyquist, so `1/A` puts the cutoff at
/// `F_s / (2A)`.
pub fn design_lowpass(normalized_cutoff: f64, n_taps: usize) -> Result<FirFilter> {
    if !(normalized_cutoff > 0.0 && normalized_cutoff < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "cutoff must lie in (0, 1) of Nyquist, got {normalized_cutoff}"
        )));
    }
    if n_taps < 3 || n_taps.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "filter length must be odd and at least 3, got {n_taps}"
        )));
    }
    let center = (n_taps - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = hamming(n_taps)
        .enumerate()
        .map(|(n, w)| {
            let x = n as f64 - center;
            let ideal = if x == 0.0 {
                normalized_cutoff
            } else {
                (PI * normalized_cutoff * x).sin() / (PI * x)
            };
            w * ideal
        })
        .collect();
    let dc: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= dc);
    // re-impose exact symmetry after the division
    for i in 0..n_taps / 2 {
        let avg = 0.5 * (taps[i] + taps[n_taps - 1 - i]);
        taps[i] = avg;
        taps[n_taps - 1 - i] = avg;
    }
    FirFilter::new(taps)
}

/// Multiplies sample `n` by `exp(-j 2π n shift_freq / F_s)`.
pub fn freq_shift(signal: &ComplexSignal, shift_freq: f64) -> ComplexSignal {
    let step = shift_freq / signal.sample_rate();
    let samples = signal
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &s)| {
            let cycles = (step * n as f64).fract();
            s * Complex64::from_polar(1.0, -TAU * cycles)
        })
        .collect();
    signal.with_samples(samples)
}

/// Causal convolution truncated to the input length.
pub fn filter(signal: &ComplexSignal, fir: &FirFilter) -> Result<ComplexSignal> {
    let x = signal.samples();
    let h = fir.taps();
    if x.len() < h.len() {
        return Err(Error::Length {
            needed: h.len(),
            got: x.len(),
        });
    }
    let samples = (0..x.len())
        .map(|n| {
            let reach = n.min(h.len() - 1);
            (0..=reach).map(|k| x[n - k] * h[k]).sum::<Complex64>()
        })
        .collect();
    Ok(signal.with_samples(samples))
}

/// Keeps samples `0, A, 2A, ...`, `floor(N / A)` of them, at rate `F_s / A`.
pub fn decimate(signal: &ComplexSignal, zoom_factor: usize) -> Result<ComplexSignal> {
    if zoom_factor < 1 {
        return Err(Error::InvalidParameter(
            "decimation factor must be at least 1".into(),
        ));
    }
    let kept = signal.len() / zoom_factor;
    if kept == 0 {
        return Err(Error::Length {
            needed: zoom_factor,
            got: signal.len(),
        });
    }
    let samples = signal
        .samples()
        .iter()
        .step_by(zoom_factor)
        .take(kept)
        .copied()
        .collect();
    ComplexSignal::new(samples, signal.sample_rate() / zoom_factor as f64)
}

/// shift -> filter -> decimate; returns `N_A` baseband samples at rate `F_p`.
pub fn zoom_pipeline(
    signal: &ComplexSignal,
    config: &ZoomConfig,
    fir: &FirFilter,
) -> Result<ComplexSignal> {
    if signal.len() != config.n_samples() {
        return Err(Error::Configuration(format!(
            "signal has {} samples but the configuration expects {}",
            signal.len(),
            config.n_samples()
        )));
    }
    if signal.sample_rate() != config.sample_rate() {
        return Err(Error::Configuration(format!(
            "signal sampled at {} Hz but the configuration expects {} Hz",
            signal.sample_rate(),
            config.sample_rate()
        )));
    }
    let shifted = freq_shift(signal, config.shift_freq());
    let filtered = filter(&shifted, fir)?;
    decimate(&filtered, config.zoom_factor())
}

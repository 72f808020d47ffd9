//! Complex multi-sinusoid synthesis and additive white Gaussian noise.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// One complex exponential `amplitude * exp(j(2π f n / Fs + phase))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidParams {
    pub amplitude: f64,
    /// Hz
    pub frequency: f64,
    /// radians
    pub phase: f64,
}

impl SinusoidParams {
    pub fn new(amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self {
            amplitude,
            frequency,
            phase,
        }
    }
}

/// A finite run of complex samples taken at `sample_rate` Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Multiplies every sample by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * factor).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s.conj()).collect(),
            sample_rate: self.sample_rate,
        }
    }

    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }
}

/// Sum of noise-free complex sinusoids sampled at `sample_rate`.
pub fn synth_sinusoids(
    params: &[SinusoidParams],
    sample_rate: f64,
    n_samples: usize,
) -> Result<ComplexSignal> {
    if n_samples == 0 {
        return Err(Error::EmptyInput);
    }
    for (i, p) in params.iter().enumerate() {
        if !(p.amplitude.is_finite() && p.amplitude > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "amplitude must be positive, got {}",
                p.amplitude
            )));
        }
        if params[..i].iter().any(|q| q.frequency == p.frequency) {
            return Err(Error::DuplicateFrequency(p.frequency));
        }
    }

    let mut samples = vec![Complex64::new(0.0, 0.0); n_samples];
    for p in params {
        let cycles_per_sample = p.frequency / sample_rate;
        for (n, s) in samples.iter_mut().enumerate() {
            // reduce the cycle count before scaling by 2π to keep long signals accurate
            let cycles = (cycles_per_sample * n as f64).fract();
            *s += Complex64::from_polar(p.amplitude, TAU * cycles + p.phase);
        }
    }
    ComplexSignal::new(samples, sample_rate)
}

/// Noise variance for a unit-power signal at the given SNR: `σ² = 10^(−snr/10)`.
pub fn snr_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Adds circularly symmetric complex Gaussian noise with `E|w|² = sigma2`,
/// drawn from a ChaCha8 stream seeded with `seed`.
pub fn add_awgn(signal: &ComplexSignal, sigma2: f64, seed: u64) -> Result<ComplexSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_awgn_with(signal, sigma2, &mut rng)
}

/// Same as [`add_awgn`] but draws from a caller-owned generator.
pub fn add_awgn_with<R: Rng + ?Sized>(
    signal: &ComplexSignal,
    sigma2: f64,
    rng: &mut R,
) -> Result<ComplexSignal> {
    if sigma2.is_nan() || sigma2 < 0.0 {
        return Err(Error::NegativeVariance(sigma2));
    }
    if sigma2 == 0.0 {
        return Ok(signal.clone());
    }
    let std_dev = (sigma2 / 2.0).sqrt();
    let samples = signal
        .samples()
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            s + Complex64::new(re, im) * std_dev
        })
        .collect();
    Ok(signal.with_samples(samples))
}

/// `count` phases drawn uniformly from `[0, 2π)`.
pub fn random_phases<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| rng.random_range(0.0..TAU)).collect()
}

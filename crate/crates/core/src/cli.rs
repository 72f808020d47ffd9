//! Configuration files, signal files, the FFT presence gate and the three
//! `zesprit` commands (`gen`, `estimate`, `sweep`).
//!
//! Signal files are headerless little-endian `f64` pairs `(re, im)`, one pair
//! per sample. The sample rate lives in the configuration, never in the file.
//!
//! Configuration files hold one `key = value` per line; `#` starts a comment.
//! Unknown keys are rejected.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::esprit::{FrequencyEstimates, SignalCount, ZoomAnalysis};
use crate::harness::{sweep, sweep_with_threads, trial_rng, ExperimentSpec, SweepResult};
use crate::order::{Estimator, OrderDecision};
use crate::signal::{
    add_awgn, random_phases, snr_to_sigma2, synth_sinusoids, ComplexSignal, SinusoidParams,
};
use crate::subspace::CovarianceNorm;
use crate::zoom::{zoom_pipeline, ZoomConfig};
use crate::Complex64;

/// Peak-to-median ratio the presence gate requires by default.
pub const DEFAULT_GATE_FACTOR: f64 = 6.0;

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Configuration(_)
        | Error::InvalidParameter(_)
        | Error::Dimension(_)
        | Error::DuplicateFrequency(_)
        | Error::NegativeVariance(_) => 2,
        Error::EmptyInput | Error::Length { .. } | Error::InputData(_) | Error::Io(_) => 3,
        Error::Ordering { .. } | Error::Singular { .. } | Error::Numerical(_) => 4,
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "sample_rate",
    "n_samples",
    "center_freq",
    "band_start",
    "zoom_factor",
    "matrix_rows",
    "filter_taps",
    "covariance_norm",
    "freqs",
    "amplitudes",
    "phases",
    "snr_db",
    "snr_grid",
    "trials",
    "seed",
    "estimators",
    "signal_count",
    "gate",
    "gate_factor",
    "threads",
];

/// Where the analysis band sits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandPlacement {
    Center(f64),
    Start(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sample_rate: f64,
    pub n_samples: usize,
    pub band: BandPlacement,
    pub zoom_factor: usize,
    /// `None` means `floor(N_A / 2)`.
    pub matrix_rows: Option<usize>,
    /// `None` means the default for the zoom factor.
    pub filter_taps: Option<usize>,
    pub covariance_norm: CovarianceNorm,
    pub freqs: Vec<f64>,
    /// `None` means all ones.
    pub amplitudes: Option<Vec<f64>>,
    /// `None` means uniform random phases drawn from `seed`.
    pub phases: Option<Vec<f64>>,
    /// Noise level for `gen`; `None` is noiseless.
    pub snr_db: Option<f64>,
    pub snr_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<Estimator>,
    pub signal_count: SignalCount,
    pub gate: bool,
    pub gate_factor: f64,
    /// Worker threads for `sweep`; `None` uses every core.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sample_rate: 50_000.0,
            n_samples: 1024,
            band: BandPlacement::Center(5000.0),
            zoom_factor: 32,
            matrix_rows: None,
            filter_taps: None,
            covariance_norm: CovarianceNorm::Snapshots,
            freqs: vec![5000.0, 5120.0],
            amplitudes: None,
            phases: None,
            snr_db: None,
            snr_grid: (0..13).map(|i| -12.0 + 3.0 * i as f64).collect(),
            trials: crate::harness::DEFAULT_TRIALS,
            seed: 0,
            estimators: Estimator::ALL.to_vec(),
            signal_count: SignalCount::Auto,
            gate: false,
            gate_factor: DEFAULT_GATE_FACTOR,
            threads: None,
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Configuration(format!("{key} = {value}: {why}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| bad(key, value, e))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<f64>(key, s))
        .collect()
}

/// `start:stop:step` (inclusive) or a comma-separated list.
fn parse_grid(key: &str, value: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() == 1 {
        return parse_list(key, value);
    }
    if parts.len() != 3 {
        return Err(bad(key, value, "expected start:stop:step"));
    }
    let start: f64 = parse_num(key, parts[0])?;
    let stop: f64 = parse_num(key, parts[1])?;
    let step: f64 = parse_num(key, parts[2])?;
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(bad(key, value, "need step > 0 and stop >= start"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}

fn parse_switch(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value, "expected on or off")),
    }
}

impl RunConfig {
    /// Defaults overridden by the `key = value` lines in `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Configuration(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            Error::Configuration(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "sample_rate" => self.sample_rate = parse_num(key, value)?,
            "n_samples" => self.n_samples = parse_num(key, value)?,
            "center_freq" => self.band = BandPlacement::Center(parse_num(key, value)?),
            "band_start" => self.band = BandPlacement::Start(parse_num(key, value)?),
            "zoom_factor" => self.zoom_factor = parse_num(key, value)?,
            "matrix_rows" => {
                self.matrix_rows = match value {
                    "auto" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "filter_taps" => {
                self.filter_taps = match value {
                    "auto" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "covariance_norm" => {
                self.covariance_norm = match value {
                    "snapshots" => CovarianceNorm::Snapshots,
                    "rows" => CovarianceNorm::Rows,
                    "zoom" => CovarianceNorm::ZoomFactor,
                    v => CovarianceNorm::Custom(parse_num(key, v)?),
                }
            }
            "freqs" => self.freqs = parse_list(key, value)?,
            "amplitudes" => self.amplitudes = Some(parse_list(key, value)?),
            "phases" => {
                self.phases = match value {
                    "random" => None,
                    v => Some(parse_list(key, v)?),
                }
            }
            "snr_db" => {
                self.snr_db = match value {
                    "none" | "inf" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "snr_grid" => self.snr_grid = parse_grid(key, value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "estimators" => {
                self.estimators = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|e| bad(key, value, e)))
                    .collect::<Result<_>>()?
            }
            "signal_count" => {
                self.signal_count = match value {
                    "auto" => SignalCount::Auto,
                    v => SignalCount::Fixed(parse_num(key, v)?),
                }
            }
            "gate" => self.gate = parse_switch(key, value)?,
            "gate_factor" => self.gate_factor = parse_num(key, value)?,
            "threads" => {
                self.threads = match value {
                    "auto" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            other => {
                return Err(Error::Configuration(format!(
                    "unknown key `{other}` (known keys: {})",
                    CONFIG_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::Configuration(format!("override `{assignment}` is not key=value"))
        })?;
        self.set(key.trim(), value.trim())
    }

    pub fn zoom_config(&self) -> Result<ZoomConfig> {
        let base = match self.band {
            BandPlacement::Center(c) => {
                ZoomConfig::centered(self.sample_rate, self.n_samples, c, self.zoom_factor)?
            }
            BandPlacement::Start(s) => {
                ZoomConfig::new(self.sample_rate, self.n_samples, s, self.zoom_factor)?
            }
        };
        let base = match self.filter_taps {
            Some(taps) => base.with_filter_taps(taps)?,
            None => base,
        };
        let base = base.with_covariance_norm(self.covariance_norm)?;
        match self.matrix_rows {
            Some(rows) => base.with_matrix_rows(rows),
            None => Ok(base),
        }
    }

    fn amplitudes(&self) -> Vec<f64> {
        self.amplitudes
            .clone()
            .unwrap_or_else(|| vec![1.0; self.freqs.len()])
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let spec = ExperimentSpec {
            zoom: self.zoom_config()?,
            true_freqs: self.freqs.clone(),
            amplitudes: self.amplitudes(),
            snr_grid_db: self.snr_grid.clone(),
            trials: self.trials,
            base_seed: self.seed,
            estimators: self.estimators.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// The configured and derived zoom quantities, one `key = value` per line.
pub fn echo_config(zoom: &ZoomConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sample_rate = {}", zoom.sample_rate());
    let _ = writeln!(out, "n_samples = {}", zoom.n_samples());
    let _ = writeln!(out, "zoom_factor = {}", zoom.zoom_factor());
    let _ = writeln!(out, "band_start = {}", zoom.band_start());
    let _ = writeln!(out, "band_width = {}", zoom.band_width());
    let _ = writeln!(out, "shift_freq = {}", zoom.shift_freq());
    let _ = writeln!(out, "decimated_count = {}", zoom.decimated_count());
    let _ = writeln!(out, "matrix_rows = {}", zoom.matrix_rows());
    let _ = writeln!(out, "matrix_cols = {}", zoom.matrix_cols());
    let _ = writeln!(out, "filter_taps = {}", zoom.filter_taps());
    out
}

pub fn encode_samples(samples: &[Complex64]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(samples.len() * 16);
    for s in samples {
        bytes.extend_from_slice(&s.re.to_le_bytes());
        bytes.extend_from_slice(&s.im.to_le_bytes());
    }
    bytes
}

pub fn decode_samples(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if !bytes.len().is_multiple_of(16) {
        return Err(Error::InputData(format!(
            "signal file length {} is not a multiple of 16 bytes",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8-byte chunk"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8-byte chunk"));
            Complex64::new(re, im)
        })
        .collect())
}

pub fn write_signal(path: &Path, signal: &ComplexSignal) -> Result<()> {
    fs::write(path, encode_samples(signal.samples()))?;
    Ok(())
}

pub fn read_signal(path: &Path, sample_rate: f64) -> Result<ComplexSignal> {
    let samples = decode_samples(&fs::read(path)?)?;
    if samples
        .iter()
        .any(|s| !(s.re.is_finite() && s.im.is_finite()))
    {
        return Err(Error::InputData(
            "signal file contains non-finite samples".into(),
        ));
    }
    ComplexSignal::new(samples, sample_rate)
}

/// True when the largest DFT magnitude inside the zoom band exceeds `factor`
/// times the median in-band magnitude.
pub fn presence_gate(signal: &ComplexSignal, zoom: &ZoomConfig, factor: f64) -> bool {
    let n = signal.len();
    let mut spectrum = signal.samples().to_vec();
    FftPlanner::<f64>::new()
        .plan_fft_forward(n)
        .process(&mut spectrum);

    let fs = signal.sample_rate();
    let lo = zoom.band_start();
    let hi = lo + zoom.band_width();
    let mut mags: Vec<f64> = spectrum
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * fs / n as f64;
            // test each bin at its alias nearest the band
            let shifted = f - ((f - lo) / fs).floor() * fs;
            shifted >= lo && shifted <= hi
        })
        .map(|(_, v)| v.norm())
        .collect();
    if mags.is_empty() {
        return false;
    }
    mags.sort_by(f64::total_cmp);
    let peak = *mags.last().expect("nonempty");
    let median = mags[mags.len() / 2];
    peak > factor * median
}

/// Synthesizes the configured tones (plus noise when `snr_db` is set).
pub fn generate(cfg: &RunConfig) -> Result<ComplexSignal> {
    let mut rng = trial_rng(cfg.seed, 0, 0);
    let phases = match &cfg.phases {
        Some(p) if p.len() == cfg.freqs.len() => p.clone(),
        Some(p) => {
            return Err(Error::Configuration(format!(
                "{} phases given for {} frequencies",
                p.len(),
                cfg.freqs.len()
            )))
        }
        None => random_phases(cfg.freqs.len(), &mut rng),
    };
    let amplitudes = cfg.amplitudes();
    if amplitudes.len() != cfg.freqs.len() {
        return Err(Error::Configuration(format!(
            "{} amplitudes given for {} frequencies",
            amplitudes.len(),
            cfg.freqs.len()
        )));
    }
    let params: Vec<SinusoidParams> = cfg
        .freqs
        .iter()
        .zip(&amplitudes)
        .zip(&phases)
        .map(|((&f, &a), &p)| SinusoidParams::new(a, f, p))
        .collect();
    let clean = synth_sinusoids(&params, cfg.sample_rate, cfg.n_samples)?;
    match cfg.snr_db {
        Some(snr) => add_awgn(&clean, snr_to_sigma2(snr), cfg.seed.wrapping_add(1)),
        None => Ok(clean),
    }
}

pub fn cmd_gen(cfg: &RunConfig, out: &Path) -> Result<String> {
    let zoom = cfg.zoom_config()?;
    let signal = generate(cfg)?;
    write_signal(out, &signal)?;
    Ok(format!(
        "{}wrote {} samples to {}\n",
        echo_config(&zoom),
        signal.len(),
        out.display()
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateStatus {
    Ok,
    /// The presence gate found nothing in the band.
    NoSignal,
    /// Every covariance eigenvalue is zero.
    Degenerate,
}

impl EstimateStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::NoSignal => "no-signal",
            Self::Degenerate => "degenerate-spectrum",
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub zoom: ZoomConfig,
    pub status: EstimateStatus,
    pub eigenvalues: Vec<f64>,
    pub decision: Option<OrderDecision>,
    /// Number of tones handed to ESPRIT.
    pub count: Option<usize>,
    pub frequencies: Option<FrequencyEstimates>,
}

pub fn estimate_signal(cfg: &RunConfig, signal: &ComplexSignal) -> Result<EstimateReport> {
    let min_len = cfg.zoom_factor.max(1) * crate::zoom::MIN_MATRIX_ROWS;
    if signal.len() < min_len {
        return Err(Error::Length {
            needed: min_len,
            got: signal.len(),
        });
    }
    let zoom = cfg.zoom_config()?.with_n_samples(signal.len())?;

    if cfg.gate && !presence_gate(signal, &zoom, cfg.gate_factor) {
        return Ok(EstimateReport {
            zoom,
            status: EstimateStatus::NoSignal,
            eigenvalues: Vec::new(),
            decision: None,
            count: None,
            frequencies: None,
        });
    }

    let analysis = ZoomAnalysis::run(signal, &zoom)?;
    let decision = analysis.estimate_order()?;
    let count = match cfg.signal_count {
        SignalCount::Auto => decision.count,
        SignalCount::Fixed(k) => k,
    };
    let degenerate = analysis.eigenvalues().iter().all(|&v| v == 0.0);
    let frequencies = if degenerate {
        None
    } else {
        Some(analysis.frequencies(count)?)
    };
    Ok(EstimateReport {
        zoom,
        status: if degenerate {
            EstimateStatus::Degenerate
        } else {
            EstimateStatus::Ok
        },
        eigenvalues: analysis.eigenvalues().to_vec(),
        decision: Some(decision),
        count: Some(count),
        frequencies,
    })
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_report(report: &EstimateReport) -> String {
    let mut out = echo_config(&report.zoom);
    let _ = writeln!(out, "status = {}", report.status.name());
    if let Some(d) = &report.decision {
        let _ = writeln!(out, "eigenvalues = {}", join(&report.eigenvalues));
        let _ = writeln!(out, "d_first = {}", join(&d.profile.first));
        let _ = writeln!(out, "d_second = {}", join(&d.profile.second));
        let _ = writeln!(out, "k_hat = {}", d.k_hat);
        let _ = writeln!(out, "branch = {}", d.branch);
        let _ = writeln!(out, "signal_count = {}", d.count);
    }
    if let Some(f) = &report.frequencies {
        let _ = writeln!(out, "frequencies = {}", join(&f.shifted));
    }
    out
}

/// `field,index,value` rows; indices are 1-based, empty for scalars.
pub fn report_csv(report: &EstimateReport) -> String {
    let mut out = String::from("field,index,value\n");
    let _ = writeln!(out, "status,,{}", report.status.name());
    let mut series = |name: &str, values: &[f64]| {
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{name},{},{v}", i + 1);
        }
    };
    series("eigenvalue", &report.eigenvalues);
    if let Some(d) = &report.decision {
        series("d_first", &d.profile.first);
        series("d_second", &d.profile.second);
    }
    if let Some(f) = &report.frequencies {
        series("frequency", &f.shifted);
    }
    if let Some(d) = &report.decision {
        let _ = writeln!(out, "k_hat,,{}", d.k_hat);
        let _ = writeln!(out, "branch,,{}", d.branch);
        let _ = writeln!(out, "signal_count,,{}", d.count);
    }
    out
}

pub fn cmd_estimate(cfg: &RunConfig, input: &Path) -> Result<EstimateReport> {
    let signal = read_signal(input, cfg.sample_rate)?;
    estimate_signal(cfg, &signal)
}

pub fn run_sweep(cfg: &RunConfig) -> Result<SweepResult> {
    let spec = cfg.experiment()?;
    match cfg.threads {
        Some(t) => sweep_with_threads(&spec, t),
        None => sweep(&spec),
    }
}

pub const SWEEP_HEADER: &str = "snr_db,estimator,p_ce,trials,correct_count,failed_count";

pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::with_capacity(64 * (result.rows.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in &result.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.snr_db, r.estimator, r.p_ce, r.trials, r.correct_count, r.failed_count
        );
    }
    out
}

pub fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Zoomed baseband of `signal`, exposed for diagnostics.
pub fn baseband(signal: &ComplexSignal, zoom: &ZoomConfig) -> Result<ComplexSignal> {
    zoom_pipeline(signal, zoom, &zoom.lowpass()?)
}

//! Monte Carlo estimation of the probability of correct signal-count estimation.
//!
//! Every trial owns an independent ChaCha8 stream: the generator is seeded
//! with `base_seed` and switched to stream `(snr_index << 32) | trial_index`.
//! Trials can therefore run in any order or on any number of threads and the
//! aggregated counts stay identical.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::esprit::ZoomAnalysis;
use crate::order::Estimator;
use crate::signal::{add_awgn_with, random_phases, snr_to_sigma2, synth_sinusoids, SinusoidParams};
use crate::zoom::ZoomConfig;

/// Trial count used when none is given.
pub const DEFAULT_TRIALS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub zoom: ZoomConfig,
    /// Hz, all inside the zoom band.
    pub true_freqs: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub estimators: Vec<Estimator>,
}

impl ExperimentSpec {
    /// Unit amplitudes, every estimator, [`DEFAULT_TRIALS`] trials.
    pub fn new(zoom: ZoomConfig, true_freqs: Vec<f64>, snr_grid_db: Vec<f64>) -> Self {
        let amplitudes = vec![1.0; true_freqs.len()];
        Self {
            zoom,
            true_freqs,
            amplitudes,
            snr_grid_db,
            trials: DEFAULT_TRIALS,
            base_seed: 0,
            estimators: Estimator::ALL.to_vec(),
        }
    }

    pub fn signal_count(&self) -> usize {
        self.true_freqs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Configuration("trial count must be positive".into()));
        }
        if self.true_freqs.is_empty() {
            return Err(Error::Configuration(
                "at least one true frequency is required".into(),
            ));
        }
        if self.amplitudes.len() != self.true_freqs.len() {
            return Err(Error::Configuration(format!(
                "{} amplitudes given for {} frequencies",
                self.amplitudes.len(),
                self.true_freqs.len()
            )));
        }
        if self.estimators.is_empty() {
            return Err(Error::Configuration("no estimators selected".into()));
        }
        if self.snr_grid_db.iter().any(|s| s.is_nan()) {
            return Err(Error::Configuration("SNR grid contains NaN".into()));
        }
        let lo = self.zoom.band_start();
        let hi = lo + self.zoom.band_width();
        for &f in &self.true_freqs {
            if !(f > lo && f < hi) {
                return Err(Error::Configuration(format!(
                    "frequency {f} Hz lies outside the zoom band ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Generator for one trial.
pub fn trial_rng(base_seed: u64, snr_index: usize, trial_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(((snr_index as u64) << 32) | (trial_index as u64 & 0xffff_ffff));
    rng
}

#[derive(Debug)]
pub struct TrialOutcome {
    /// Estimated count per requested estimator, in request order.
    pub estimates: Vec<(Estimator, Result<usize>)>,
    pub eigenvalues: Vec<f64>,
}

impl TrialOutcome {
    pub fn count(&self, estimator: Estimator) -> Option<usize> {
        self.estimates
            .iter()
            .find(|(e, _)| *e == estimator)
            .and_then(|(_, r)| r.as_ref().ok().copied())
    }

    pub fn is_correct(&self, estimator: Estimator, truth: usize) -> Option<bool> {
        self.count(estimator).map(|k| k == truth)
    }
}

/// One trial at `snr_grid_db[snr_index]`.
pub fn run_trial(
    spec: &ExperimentSpec,
    snr_index: usize,
    trial_index: usize,
) -> Result<TrialOutcome> {
    let snr = *spec.snr_grid_db.get(snr_index).ok_or_else(|| {
        Error::Configuration(format!("SNR index {snr_index} is outside the grid"))
    })?;
    run_trial_with_variance(spec, snr_to_sigma2(snr), snr_index, trial_index)
}

/// One trial with an explicit noise variance (zero gives the noiseless path).
pub fn run_trial_with_variance(
    spec: &ExperimentSpec,
    sigma2: f64,
    snr_index: usize,
    trial_index: usize,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(spec.base_seed, snr_index, trial_index);
    let phases = random_phases(spec.signal_count(), &mut rng);
    let params: Vec<SinusoidParams> = spec
        .true_freqs
        .iter()
        .zip(&spec.amplitudes)
        .zip(phases)
        .map(|((&f, &a), p)| SinusoidParams::new(a, f, p))
        .collect();
    let clean = synth_sinusoids(&params, spec.zoom.sample_rate(), spec.zoom.n_samples())?;
    let noisy = add_awgn_with(&clean, sigma2, &mut rng)?;

    let analysis = ZoomAnalysis::run(&noisy, &spec.zoom)?;
    let eigs = analysis.eigenvalues();
    let estimates = spec
        .estimators
        .iter()
        .map(|&e| (e, e.estimate(eigs, analysis.snapshots())))
        .collect();
    Ok(TrialOutcome {
        estimates,
        eigenvalues: eigs.to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub estimator: Estimator,
    /// `correct_count / trials`
    pub p_ce: f64,
    /// Trials that produced an estimate.
    pub trials: usize,
    pub correct_count: usize,
    /// Trials excluded because the pipeline or estimator failed.
    pub failed_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub base_seed: u64,
    /// Grouped by SNR (grid order), then estimator (request order).
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, snr_db: f64, estimator: Estimator) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.snr_db == snr_db && r.estimator == estimator)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    correct: usize,
    failed: usize,
    total: usize,
}

impl Tally {
    fn merge(self, other: Self) -> Self {
        Self {
            correct: self.correct + other.correct,
            failed: self.failed + other.failed,
            total: self.total + other.total,
        }
    }
}

fn tally(spec: &ExperimentSpec, snr_index: usize, trial_index: usize) -> Vec<Tally> {
    let truth = spec.signal_count();
    match run_trial(spec, snr_index, trial_index) {
        Ok(outcome) => outcome
            .estimates
            .iter()
            .map(|(_, r)| match r {
                Ok(k) => Tally {
                    correct: usize::from(*k == truth),
                    failed: 0,
                    total: 1,
                },
                Err(_) => Tally {
                    correct: 0,
                    failed: 1,
                    total: 1,
                },
            })
            .collect(),
        Err(_) => vec![
            Tally {
                correct: 0,
                failed: 1,
                total: 1
            };
            spec.estimators.len()
        ],
    }
}

fn merge_all(a: Vec<Tally>, b: Vec<Tally>) -> Vec<Tally> {
    a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()
}

/// Sweep on the global rayon pool.
pub fn sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let n_est = spec.estimators.len();
    let rows = spec
        .snr_grid_db
        .iter()
        .enumerate()
        .flat_map(|(snr_index, &snr_db)| {
            let totals = (0..spec.trials)
                .into_par_iter()
                .map(|t| tally(spec, snr_index, t))
                .reduce(|| vec![Tally::default(); n_est], merge_all);
            spec.estimators
                .iter()
                .zip(totals)
                .map(move |(&estimator, t)| {
                    let trials = t.total - t.failed;
                    SweepRow {
                        snr_db,
                        estimator,
                        p_ce: if trials == 0 {
                            0.0
                        } else {
                            t.correct as f64 / trials as f64
                        },
                        trials,
                        correct_count: t.correct,
                        failed_count: t.failed,
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(SweepResult {
        base_seed: spec.base_seed,
        rows,
    })
}

/// Sweep on a dedicated pool of `threads` workers.
pub fn sweep_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Numerical(format!("cannot build thread pool: {e}")))?;
    pool.install(|| sweep(spec))
}

//! Signal-count estimation from a non-increasing eigenvalue spectrum.
//!
//! The double-criterion estimator works on two ratio sequences:
//!
//! * `d_A(k) = λ_k / A_{k+1}`, where `A_k` is the mean of `λ_k..λ_M`;
//! * `d_AA(k) = d_A(k) / d_A(k+1)`.
//!
//! `k̂` is the first maximizer of `d_AA` over `k ∈ [1, floor(M/2) - 2]`.
//! When `k̂ > 1` the neighbours `d_A(k̂-1)` and `d_A(k̂+1)` decide whether
//! `λ_k̂` itself belongs to the signal: the estimate is `k̂ - 1` if
//! `d_A(k̂-1) > d_A(k̂+1)` and `k̂` otherwise. The estimator never returns
//! zero; deciding whether anything occupies the band is left to the caller.
//!
//! Indices in this module's public data are 1-based where they name a
//! criterion position (`k_hat`), and vectors are stored 0-based so that
//! `first[k - 1]` is `d_A(k)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Value standing in for a ratio with a zero denominator and positive numerator.
pub const SENTINEL: f64 = f64::MAX;

/// Ratio with the zero-denominator conventions used by both criteria:
/// `0/0 = 1`, `x/0 = SENTINEL` for `x > 0`, and overflow saturates.
pub fn guarded_ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        if numerator == 0.0 {
            1.0
        } else {
            SENTINEL
        }
    } else {
        let r = numerator / denominator;
        if r.is_finite() {
            r
        } else {
            SENTINEL
        }
    }
}

fn check_spectrum(eigs: &[f64]) -> Result<()> {
    if eigs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if eigs.len() < 2 {
        return Err(Error::Length {
            needed: 2,
            got: eigs.len(),
        });
    }
    for (i, &v) in eigs.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue {i} must be finite and non-negative, got {v}"
            )));
        }
    }
    if let Some(i) = eigs.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::Ordering { index: i + 1 });
    }
    Ok(())
}

/// `A_k`, the mean of the trailing eigenvalues `λ_k..λ_M`, for `k = 1..M`.
pub fn tail_means(eigs: &[f64]) -> Result<Vec<f64>> {
    check_spectrum(eigs)?;
    let m = eigs.len();
    let mut means = vec![0.0; m];
    let mut sum = 0.0;
    for k in (0..m).rev() {
        sum += eigs[k];
        means[k] = sum / (m - k) as f64;
    }
    Ok(means)
}

/// `d_A(k) = λ_k / A_{k+1}` for `k = 1..M-1`.
pub fn first_criterion(eigs: &[f64]) -> Result<Vec<f64>> {
    let means = tail_means(eigs)?;
    Ok((0..eigs.len() - 1)
        .map(|k| guarded_ratio(eigs[k], means[k + 1]))
        .collect())
}

/// `d_AA(k) = d_A(k) / d_A(k+1)` for `k = 1..len(d)-1`.
pub fn second_criterion(first: &[f64]) -> Vec<f64> {
    first
        .windows(2)
        .map(|w| guarded_ratio(w[0], w[1]))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionProfile {
    /// `A_k`, `k = 1..M`
    pub tail_means: Vec<f64>,
    /// `d_A(k)`, `k = 1..M-1`
    pub first: Vec<f64>,
    /// `d_AA(k)`, `k = 1..M-2`
    pub second: Vec<f64>,
}

impl CriterionProfile {
    pub fn from_eigenvalues(eigs: &[f64]) -> Result<Self> {
        let tail_means = tail_means(eigs)?;
        let first = first_criterion(eigs)?;
        let second = second_criterion(&first);
        Ok(Self {
            tail_means,
            first,
            second,
        })
    }
}

/// Which step of the decision rule produced the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `k̂ = 1`, estimate forced to one.
    ArgmaxIsOne,
    /// `d_A(k̂-1) > d_A(k̂+1)`: `λ_k̂` is noise, estimate `k̂ - 1`.
    Noise,
    /// `d_A(k̂-1) <= d_A(k̂+1)`: `λ_k̂` is signal, estimate `k̂`.
    Signal,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Self::ArgmaxIsOne => "argmax-is-one",
            Self::Noise => "noise",
            Self::Signal => "signal",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderDecision {
    /// 1-based maximizer of `d_AA` within the search range.
    pub k_hat: usize,
    /// Estimated number of signals, at least one.
    pub count: usize,
    pub branch: Branch,
    pub profile: CriterionProfile,
}

/// Upper end of the `k̂` search range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchBound {
    /// `floor(M/2) - 2`
    #[default]
    Floor,
    /// `ceil(M/2) - 2`
    Ceil,
    Fixed(usize),
}

impl SearchBound {
    pub fn upper(self, m: usize) -> usize {
        match self {
            Self::Floor => (m / 2).saturating_sub(2),
            Self::Ceil => m.div_ceil(2).saturating_sub(2),
            Self::Fixed(k) => k,
        }
    }
}

/// Double-criterion estimate with the default `floor(M/2) - 2` search bound.
pub fn estimate_order_double(eigs: &[f64]) -> Result<OrderDecision> {
    estimate_order_double_with(eigs, SearchBound::Floor)
}

pub fn estimate_order_double_with(eigs: &[f64], bound: SearchBound) -> Result<OrderDecision> {
    let m = eigs.len();
    if m < crate::zoom::MIN_MATRIX_ROWS {
        return Err(Error::Configuration(format!(
            "double-criterion estimator needs at least {} eigenvalues, got {m}",
            crate::zoom::MIN_MATRIX_ROWS
        )));
    }
    let profile = CriterionProfile::from_eigenvalues(eigs)?;
    let upper = bound.upper(m);
    // d_A(k̂+1) must exist, so k̂ <= M - 2
    if upper < 1 || upper > m - 2 {
        return Err(Error::Configuration(format!(
            "search bound {upper} is outside [1, {}] for {m} eigenvalues",
            m - 2
        )));
    }

    let mut k_hat = 1;
    for k in 2..=upper {
        if profile.second[k - 1] > profile.second[k_hat - 1] {
            k_hat = k;
        }
    }

    let (count, branch) = if k_hat == 1 {
        (1, Branch::ArgmaxIsOne)
    } else if profile.first[k_hat - 2] > profile.first[k_hat] {
        (k_hat - 1, Branch::Noise)
    } else {
        (k_hat, Branch::Signal)
    };

    Ok(OrderDecision {
        k_hat,
        count,
        branch,
        profile,
    })
}

/// `-(M-k)·L·ln(g_k/a_k)` for `k = 0..M-1`, where `g_k` and `a_k` are the
/// geometric and arithmetic means of the `M - k` smallest eigenvalues.
fn log_likelihood_terms(eigs: &[f64], snapshots: usize) -> Result<Vec<f64>> {
    check_spectrum(eigs)?;
    if snapshots == 0 {
        return Err(Error::InvalidParameter(
            "snapshot count must be positive".into(),
        ));
    }
    let m = eigs.len();
    let l = snapshots as f64;
    Ok((0..m)
        .map(|k| {
            let tail = &eigs[k..];
            let p = tail.len() as f64;
            let arith = tail.iter().sum::<f64>() / p;
            if arith == 0.0 {
                return 0.0;
            }
            if tail.contains(&0.0) {
                return f64::INFINITY;
            }
            let log_geo = tail.iter().map(|v| v.ln()).sum::<f64>() / p;
            -p * l * (log_geo - arith.ln())
        })
        .collect())
}

fn argmin_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, v) in values.enumerate() {
        if v < best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// AIC values for `k = 0..M-1`.
pub fn aic_values(eigs: &[f64], snapshots: usize) -> Result<Vec<f64>> {
    let m = eigs.len() as f64;
    Ok(log_likelihood_terms(eigs, snapshots)?
        .into_iter()
        .enumerate()
        .map(|(k, ll)| {
            let k = k as f64;
            2.0 * ll + 2.0 * k * (2.0 * m - k)
        })
        .collect())
}

/// MDL values for `k = 0..M-1`.
pub fn mdl_values(eigs: &[f64], snapshots: usize) -> Result<Vec<f64>> {
    let m = eigs.len() as f64;
    let log_l = (snapshots as f64).ln();
    Ok(log_likelihood_terms(eigs, snapshots)?
        .into_iter()
        .enumerate()
        .map(|(k, ll)| {
            let k = k as f64;
            ll + 0.5 * k * (2.0 * m - k) * log_l
        })
        .collect())
}

pub fn estimate_order_aic(eigs: &[f64], snapshots: usize) -> Result<usize> {
    Ok(argmin_first(aic_values(eigs, snapshots)?.into_iter()))
}

pub fn estimate_order_mdl(eigs: &[f64], snapshots: usize) -> Result<usize> {
    Ok(argmin_first(mdl_values(eigs, snapshots)?.into_iter()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    Double,
    Aic,
    Mdl,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Double, Estimator::Aic, Estimator::Mdl];

    pub fn name(self) -> &'static str {
        match self {
            Self::Double => "double",
            Self::Aic => "aic",
            Self::Mdl => "mdl",
        }
    }

    pub fn estimate(self, eigs: &[f64], snapshots: usize) -> Result<usize> {
        match self {
            Self::Double => estimate_order_double(eigs).map(|d| d.count),
            Self::Aic => estimate_order_aic(eigs, snapshots),
            Self::Mdl => estimate_order_mdl(eigs, snapshots),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "double" => Ok(Self::Double),
            "aic" => Ok(Self::Aic),
            "mdl" => Ok(Self::Mdl),
            other => Err(Error::InvalidParameter(format!(
                "unknown estimator `{other}`"
            ))),
        }
    }
}

//! Descriptive statistics and skewness/outlier diagnostics for ratios.
//!
//! Quantiles use linear interpolation at position `(n - 1) * p` of the sorted
//! sample. Skewness is the adjusted Fisher-Pearson estimator and outliers
//! are counted with Tukey fences.

use serde::Serialize;
use thiserror::Error;

use crate::composition::{log_ratio_series, named_ratio, CompositionError, IndicatorTable, RatioDefinition};
use crate::scalar::Scalar;

pub const DEFAULT_TUKEY_K: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("empty input")]
    EmptyInput,
    #[error("need at least {needed} values, found {found}")]
    TooFewValues { needed: usize, found: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Composition(#[from] CompositionError),
}

impl StatsError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::EmptyInput => "EmptyInput",
            Self::TooFewValues { .. } => "TooFewValues",
            Self::ZeroVariance => "ZeroVariance",
            Self::NonFinite(_) => "NonFinite",
            Self::Composition(e) => e.kind(),
        }
    }
}

/// One row of a Table-1-style summary.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptiveSummary<T> {
    pub n: usize,
    pub mean: T,
    /// Sample standard deviation (divisor `n - 1`); zero when `n == 1`.
    pub sd: T,
    pub min: T,
    pub q1: T,
    pub median: T,
    pub q3: T,
    pub max: T,
}

fn sorted_finite<T: Scalar>(values: &[T]) -> Result<Vec<T>, StatsError> {
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(pos));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values are ordered"));
    Ok(sorted)
}

/// Quantile of an ascending-sorted, non-empty slice.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], p: f64) -> T {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn mean<T: Scalar>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / T::from_count(values.len())
}

pub fn describe<T: Scalar>(values: &[T]) -> Result<DescriptiveSummary<T>, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let sorted = sorted_finite(values)?;
    let n = sorted.len();
    // Summing in sorted order keeps the result independent of input order.
    let mean = mean(&sorted);
    let sd = if n > 1 {
        let ss: T = sorted.iter().map(|v| (*v - mean) * (*v - mean)).sum();
        (ss / T::from_count(n - 1)).sqrt()
    } else {
        T::zero()
    };
    Ok(DescriptiveSummary {
        n,
        mean,
        sd,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[n - 1],
    })
}

/// Adjusted Fisher-Pearson sample skewness `g1 * sqrt(n(n-1)) / (n-2)`.
pub fn skewness<T: Scalar>(values: &[T]) -> Result<T, StatsError> {
    let n = values.len();
    if n < 3 {
        return Err(StatsError::TooFewValues { needed: 3, found: n });
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(pos));
    }
    let mean = mean(values);
    let nf = T::from_count(n);
    let m2 = values.iter().map(|v| (*v - mean).powi(2)).sum::<T>() / nf;
    let m3 = values.iter().map(|v| (*v - mean).powi(3)).sum::<T>() / nf;
    // Relative threshold: a constant sample can leave rounding noise in m2.
    let scale = values.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if m2 <= (T::epsilon() * scale).powi(2) * nf {
        return Err(StatsError::ZeroVariance);
    }
    let g1 = m3 / m2.powf(T::lit(1.5));
    Ok(g1 * (nf * (nf - T::one())).sqrt() / (nf - T::lit(2.0)))
}

/// Number of values outside `[q1 - k*IQR, q3 + k*IQR]`.
pub fn outlier_count<T: Scalar>(values: &[T], k: T) -> Result<usize, StatsError> {
    if values.len() < 4 {
        return Err(StatsError::TooFewValues { needed: 4, found: values.len() });
    }
    let sorted = sorted_finite(values)?;
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - k * iqr, q3 + k * iqr);
    Ok(sorted.iter().filter(|v| **v < lo || **v > hi).count())
}

/// Diagnostics for one ratio; fields are `None` where not applicable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioPathology {
    pub name: String,
    pub n: usize,
    pub skew_raw: Option<f64>,
    pub skew_log: Option<f64>,
    pub outliers_raw: Option<usize>,
    pub outliers_log: Option<usize>,
    pub skew_reduced: Option<bool>,
    /// Error kinds that made some statistic inapplicable.
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathologyConventions {
    pub logarithm: &'static str,
    pub skewness: &'static str,
    pub outliers: String,
    pub quartiles: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathologyReport {
    pub conventions: PathologyConventions,
    pub ratios: Vec<RatioPathology>,
}

/// Compares skewness and outliers of raw ratios with their log-ratios.
///
/// Unknown parts are errors; too few values or zero variance are recorded
/// per ratio in `notes` instead.
pub fn pathology_report<T: Scalar>(
    table: &IndicatorTable<T>,
    ratio_defs: &[RatioDefinition],
) -> Result<PathologyReport, StatsError> {
    let k = T::lit(DEFAULT_TUKEY_K);
    let mut ratios = Vec::with_capacity(ratio_defs.len());
    for def in ratio_defs {
        let raw = named_ratio(table, def)?;
        let logs = log_ratio_series(table, def)?;
        let mut notes = Vec::new();
        let mut note = |e: StatsError| {
            let kind = e.kind().to_string();
            if !notes.contains(&kind) {
                notes.push(kind);
            }
        };
        let skew_raw = skewness(&raw).map_err(&mut note).ok();
        let skew_log = skewness(&logs).map_err(&mut note).ok();
        let outliers_raw = outlier_count(&raw, k).map_err(&mut note).ok();
        let outliers_log = outlier_count(&logs, k).map_err(&mut note).ok();
        let skew_reduced = match (skew_raw, skew_log) {
            (Some(r), Some(l)) => Some(l.abs() < r.abs()),
            _ => None,
        };
        ratios.push(RatioPathology {
            name: def.name.clone(),
            n: raw.len(),
            skew_raw: skew_raw.map(Scalar::to_f64_lossy),
            skew_log: skew_log.map(Scalar::to_f64_lossy),
            outliers_raw,
            outliers_log,
            skew_reduced,
            notes,
        });
    }
    Ok(PathologyReport {
        conventions: PathologyConventions {
            logarithm: "natural",
            skewness: "adjusted Fisher-Pearson g1*sqrt(n(n-1))/(n-2)",
            outliers: format!("Tukey fences, k = {DEFAULT_TUKEY_K}"),
            quartiles: "linear interpolation at (n-1)p",
        },
        ratios,
    })
}

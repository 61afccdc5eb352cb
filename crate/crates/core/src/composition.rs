//! Compositional data types and log-ratio primitives.
//!
//! All logarithms are natural logarithms. Quantities that only depend on
//! ratios between parts (pairwise log-ratios, CLR coordinates, Aitchison
//! distances) are invariant to rescaling a row by a positive constant.

use std::collections::HashSet;
use std::fmt;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Tolerance on the sum of CLR coordinates.
pub const CLR_SUM_TOLERANCE: f64 = 1e-10;

/// Default fraction of the smallest positive value used to replace zeros.
pub const DEFAULT_ZERO_DELTA: f64 = 0.65;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error("non-positive value {value} at row {row}, column {col}")]
    NonPositiveValue { row: usize, col: usize, value: f64 },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("negative value {value} at row {row}, column {col}")]
    NegativeValue { row: usize, col: usize, value: f64 },
    #[error("row {row} has no positive value to anchor zero replacement")]
    DegenerateRow { row: usize },
    #[error("row {row}: replaced zeros would take up the whole row total")]
    ReplacementExceedsRow { row: usize },
    #[error("duplicate entity id {0:?}")]
    DuplicateEntityId(String),
    #[error("duplicate part name {0:?}")]
    DuplicatePartName(String),
    #[error("empty part name at position {0}")]
    EmptyPartName(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("a composition needs at least two parts, found {0}")]
    TooFewParts(usize),
    #[error("log-ratio of a part with itself (index {0})")]
    SamePart(usize),
    #[error("part index {index} out of range for {parts} parts")]
    IndexOutOfRange { index: usize, parts: usize },
    #[error("unknown part {0:?}")]
    UnknownPart(String),
    #[error("zero-replacement fraction {0} outside (0, 1]")]
    InvalidDelta(f64),
}

impl CompositionError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NonPositiveValue { .. } => "NonPositiveValue",
            Self::NonFiniteValue { .. } => "NonFiniteValue",
            Self::NegativeValue { .. } => "NegativeValue",
            Self::DegenerateRow { .. } => "DegenerateRow",
            Self::ReplacementExceedsRow { .. } => "ReplacementExceedsRow",
            Self::DuplicateEntityId(_) => "DuplicateEntityId",
            Self::DuplicatePartName(_) => "DuplicatePartName",
            Self::EmptyPartName(_) => "EmptyPartName",
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::TooFewParts(_) => "TooFewParts",
            Self::SamePart(_) => "SamePart",
            Self::IndexOutOfRange { .. } => "IndexOutOfRange",
            Self::UnknownPart(_) => "UnknownPart",
            Self::InvalidDelta(_) => "InvalidDelta",
        }
    }
}

/// Broad family an indicator belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Financial,
    Environmental,
    Social,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Financial => "financial",
            Role::Environmental => "environmental",
            Role::Social => "social",
        })
    }
}

/// One column of an indicator table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub index: usize,
    pub name: String,
    /// Canonical unit, e.g. `MWh` or `EUR_MM`.
    pub unit: String,
    pub role: Role,
}

impl Part {
    pub fn new(index: usize, name: impl Into<String>, unit: impl Into<String>, role: Role) -> Self {
        Self { index, name: name.into(), unit: unit.into(), role }
    }
}

/// One row of an indicator table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub label: String,
    pub sector_code: String,
}

impl Entity {
    pub fn new(id: impl Into<String>, label: impl Into<String>, sector_code: impl Into<String>) -> Self {
        Self { id: id.into(), label: label.into(), sector_code: sector_code.into() }
    }
}

/// `n` entities described by `D >= 2` strictly positive, finite indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorTable<T> {
    parts: Vec<Part>,
    entities: Vec<Entity>,
    values: Array2<T>,
}

impl<T: Scalar> IndicatorTable<T> {
    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.entities.len()
    }

    pub fn d(&self) -> usize {
        self.parts.len()
    }

    pub fn row(&self, r: usize) -> ArrayView1<'_, T> {
        self.values.row(r)
    }

    pub fn part_index(&self, name: &str) -> Result<usize, CompositionError> {
        self.parts
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| CompositionError::UnknownPart(name.to_string()))
    }

    /// Converts the values to another scalar type, re-validating positivity.
    pub fn cast<U: Scalar>(&self) -> Result<IndicatorTable<U>, CompositionError> {
        let values = self.values.mapv(|v| U::from(v).unwrap_or_else(U::nan));
        validate_table(values, self.parts.clone(), self.entities.clone())
    }
}

/// Checks shape, identifiers and strict positivity, producing a table.
pub fn validate_table<T: Scalar>(
    values: Array2<T>,
    parts: Vec<Part>,
    entities: Vec<Entity>,
) -> Result<IndicatorTable<T>, CompositionError> {
    let (rows, cols) = values.dim();
    if parts.len() < 2 {
        return Err(CompositionError::TooFewParts(parts.len()));
    }
    if rows != entities.len() || cols != parts.len() {
        return Err(CompositionError::DimensionMismatch {
            expected: format!("{}x{}", entities.len(), parts.len()),
            found: format!("{rows}x{cols}"),
        });
    }
    let mut names = HashSet::new();
    for (i, p) in parts.iter().enumerate() {
        if p.name.is_empty() {
            return Err(CompositionError::EmptyPartName(i));
        }
        if !names.insert(p.name.as_str()) {
            return Err(CompositionError::DuplicatePartName(p.name.clone()));
        }
    }
    let mut ids = HashSet::new();
    for e in &entities {
        if !ids.insert(e.id.as_str()) {
            return Err(CompositionError::DuplicateEntityId(e.id.clone()));
        }
    }
    for ((row, col), &v) in values.indexed_iter() {
        if !v.is_finite() {
            return Err(CompositionError::NonFiniteValue { row, col });
        }
        if v <= T::zero() {
            return Err(CompositionError::NonPositiveValue { row, col, value: v.to_f64_lossy() });
        }
    }
    let parts = parts
        .into_iter()
        .enumerate()
        .map(|(index, p)| Part { index, ..p })
        .collect();
    Ok(IndicatorTable { parts, entities, values })
}

/// Geometric mean, computed as `exp(mean(ln x))` so that large and tiny
/// magnitudes do not overflow.
pub fn geometric_mean<T: Scalar>(row: &[T]) -> T {
    mean_log(row).exp()
}

fn mean_log<T: Scalar>(row: &[T]) -> T {
    let sum: T = row.iter().map(|v| v.ln()).sum();
    sum / T::from_count(row.len())
}

/// `ln(x_i / x_j)` evaluated as `ln x_i - ln x_j`, so swapping the indices
/// negates the result exactly.
pub fn pairwise_log_ratio<T: Scalar>(row: &[T], i: usize, j: usize) -> Result<T, CompositionError> {
    let parts = row.len();
    for index in [i, j] {
        if index >= parts {
            return Err(CompositionError::IndexOutOfRange { index, parts });
        }
    }
    if i == j {
        return Err(CompositionError::SamePart(i));
    }
    Ok(row[i].ln() - row[j].ln())
}

/// Centred log-ratio coordinates of one composition.
#[derive(Debug, Clone, PartialEq)]
pub struct ClrVector<T>(pub Array1<T>);

impl<T: Scalar> ClrVector<T> {
    pub fn coords(&self) -> &Array1<T> {
        &self.0
    }

    pub fn sum(&self) -> T {
        self.0.iter().copied().sum()
    }
}

pub fn clr<T: Scalar>(row: &[T]) -> ClrVector<T> {
    let logs: Vec<T> = row.iter().map(|v| v.ln()).collect();
    let centre = logs.iter().copied().sum::<T>() / T::from_count(logs.len());
    ClrVector(logs.into_iter().map(|l| l - centre).collect())
}

/// Row-wise CLR transform of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct ClrMatrix<T> {
    values: Array2<T>,
    parts: Vec<Part>,
    entities: Vec<Entity>,
}

impl<T: Scalar> ClrMatrix<T> {
    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, r: usize) -> ClrVector<T> {
        ClrVector(self.values.row(r).to_owned())
    }

    /// Builds a CLR matrix directly from coordinates, e.g. for tests of
    /// downstream geometry. Rows are not checked for the zero-sum property.
    pub fn from_parts(values: Array2<T>, parts: Vec<Part>, entities: Vec<Entity>) -> Result<Self, CompositionError> {
        if values.nrows() != entities.len() || values.ncols() != parts.len() {
            return Err(CompositionError::DimensionMismatch {
                expected: format!("{}x{}", entities.len(), parts.len()),
                found: format!("{}x{}", values.nrows(), values.ncols()),
            });
        }
        Ok(Self { values, parts, entities })
    }
}

pub fn clr_matrix<T: Scalar>(table: &IndicatorTable<T>) -> ClrMatrix<T> {
    let mut values = table.values.mapv(|v| v.ln());
    for mut row in values.axis_iter_mut(Axis(0)) {
        let centre = row.iter().copied().sum::<T>() / T::from_count(row.len());
        row.mapv_inplace(|l| l - centre);
    }
    ClrMatrix { values, parts: table.parts.clone(), entities: table.entities.clone() }
}

/// A named ratio between two parts of a table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatioDefinition {
    pub name: String,
    pub numerator: String,
    pub denominator: String,
    #[serde(default)]
    pub description: String,
}

impl RatioDefinition {
    pub fn new(name: &str, numerator: &str, denominator: &str, description: &str) -> Self {
        Self {
            name: name.to_string(),
            numerator: numerator.to_string(),
            denominator: denominator.to_string(),
            description: description.to_string(),
        }
    }

    /// The same ratio with numerator and denominator exchanged.
    pub fn inverted(&self) -> Self {
        Self {
            name: format!("{}_inverse", self.name),
            numerator: self.denominator.clone(),
            denominator: self.numerator.clone(),
            description: self.description.clone(),
        }
    }

    /// Resolves the two part names to column indices.
    pub fn resolve<T: Scalar>(&self, table: &IndicatorTable<T>) -> Result<(usize, usize), CompositionError> {
        resolve_in(&self.numerator, &self.denominator, table.parts())
    }

    /// Unit of the raw ratio, e.g. `MWh/EUR_MM`.
    pub fn unit(&self, parts: &[Part]) -> Option<String> {
        let num = parts.iter().find(|p| p.name == self.numerator)?;
        let den = parts.iter().find(|p| p.name == self.denominator)?;
        if num.unit == den.unit {
            Some("1".to_string())
        } else {
            Some(format!("{}/{}", num.unit, den.unit))
        }
    }
}

pub(crate) fn resolve_in(numerator: &str, denominator: &str, parts: &[Part]) -> Result<(usize, usize), CompositionError> {
    let find = |name: &str| {
        parts
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| CompositionError::UnknownPart(name.to_string()))
    };
    let (i, j) = (find(numerator)?, find(denominator)?);
    if i == j {
        return Err(CompositionError::SamePart(i));
    }
    Ok((i, j))
}

/// Raw ratio values `x[num] / x[den]` for every entity.
pub fn named_ratio<T: Scalar>(table: &IndicatorTable<T>, def: &RatioDefinition) -> Result<Vec<T>, CompositionError> {
    let (i, j) = def.resolve(table)?;
    Ok(table.values.rows().into_iter().map(|r| r[i] / r[j]).collect())
}

/// Natural log of [`named_ratio`], computed as a difference of logs.
pub fn log_ratio_series<T: Scalar>(table: &IndicatorTable<T>, def: &RatioDefinition) -> Result<Vec<T>, CompositionError> {
    let (i, j) = def.resolve(table)?;
    Ok(table.values.rows().into_iter().map(|r| r[i].ln() - r[j].ln()).collect())
}

/// How zeros in raw data are treated before validation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroStrategy {
    #[default]
    Reject,
    /// Replace each zero by `delta` times the smallest positive value of its row.
    Multiplicative(f64),
}


/// Replaces zeros according to `strategy`, preserving row sums.
///
/// With `Multiplicative(delta)`, a row with `z` zeros, smallest positive value
/// `m` and sum `s` gets `delta * m` in place of each zero and every other cell
/// multiplied by `1 - z * delta * m / s`. Rows where that factor is not
/// positive are rejected.
pub fn replace_zeros<T: Scalar>(raw: &Array2<T>, strategy: ZeroStrategy) -> Result<Array2<T>, CompositionError> {
    for ((row, col), &v) in raw.indexed_iter() {
        if !v.is_finite() {
            return Err(CompositionError::NonFiniteValue { row, col });
        }
        if v < T::zero() {
            return Err(CompositionError::NegativeValue { row, col, value: v.to_f64_lossy() });
        }
    }
    let delta = match strategy {
        ZeroStrategy::Reject => {
            if let Some(((row, col), _)) = raw.indexed_iter().find(|(_, v)| **v == T::zero()) {
                return Err(CompositionError::NonPositiveValue { row, col, value: 0.0 });
            }
            return Ok(raw.clone());
        }
        ZeroStrategy::Multiplicative(delta) => {
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(CompositionError::InvalidDelta(delta));
            }
            T::lit(delta)
        }
    };
    let mut out = raw.clone();
    for (r, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let zeros = row.iter().filter(|v| **v == T::zero()).count();
        if zeros == 0 {
            continue;
        }
        let min_positive = row
            .iter()
            .copied()
            .filter(|v| *v > T::zero())
            .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.min(v))))
            .ok_or(CompositionError::DegenerateRow { row: r })?;
        let sum: T = row.iter().copied().sum();
        let fill = delta * min_positive;
        let shrink = T::one() - T::from_count(zeros) * fill / sum;
        if shrink <= T::zero() {
            return Err(CompositionError::ReplacementExceedsRow { row: r });
        }
        row.mapv_inplace(|v| if v == T::zero() { fill } else { v * shrink });
    }
    Ok(out)
}

/// Euclidean distance between the CLR images of two compositions.
pub fn aitchison_distance<T: Scalar>(a: &[T], b: &[T]) -> Result<T, CompositionError> {
    if a.len() != b.len() {
        return Err(CompositionError::DimensionMismatch {
            expected: a.len().to_string(),
            found: b.len().to_string(),
        });
    }
    let (ca, cb) = (clr(a), clr(b));
    Ok(euclidean(ca.0.view(), cb.0.view()))
}

pub(crate) fn euclidean<T: Scalar>(a: ArrayView1<'_, T>, b: ArrayView1<'_, T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (*x - *y) * (*x - *y))
        .sum::<T>()
        .sqrt()
}

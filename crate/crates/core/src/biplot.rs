//! Principal-component biplot of centred CLR coordinates.
//!
//! With the column-centred CLR matrix `Z = U S V^T`, entity points are
//! `U_k S_k^alpha` and part rays are `V_k S_k^(1 - alpha)`. A link joins the
//! tips of two rays; projecting points onto it orders the entities by the
//! corresponding pairwise log-ratio. The score `points[r] . (rays[i] - rays[j])`
//! equals `sum_m U[r,m] s_m (V[i,m] - V[j,m])`, so rankings do not depend on
//! `alpha`.

use std::cmp::Ordering;

use ndarray::{Array1, Array2, Axis};
use serde::Serialize;
use thiserror::Error;

use crate::composition::{resolve_in, ClrMatrix, CompositionError, Part, RatioDefinition};
use crate::scalar::Scalar;
use crate::svd::thin_svd;

/// Default scaling: form biplot (points carry the singular values).
pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_RANK: usize = 2;

/// Relative norm below which a link counts as degenerate.
const DEGENERATE_LINK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BiplotError {
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("need at least 2 parts, found {0}")]
    TooFewParts(usize),
    #[error("rank {requested} exceeds the maximum {max}")]
    RankRequestTooLarge { requested: usize, max: usize },
    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("SVD did not converge after {0} sweeps")]
    SvdFailure(usize),
    #[error("centred CLR matrix has no variance")]
    DegenerateVariance,
    #[error("link between parts {0} and {1} has zero length")]
    DegenerateLink(usize, usize),
    #[error(transparent)]
    Composition(#[from] CompositionError),
}

impl BiplotError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::TooFewRows { .. } => "TooFewRows",
            Self::TooFewParts(_) => "TooFewParts",
            Self::RankRequestTooLarge { .. } => "RankRequestTooLarge",
            Self::InvalidAlpha(_) => "InvalidAlpha",
            Self::SvdFailure(_) => "SvdFailure",
            Self::DegenerateVariance => "DegenerateVariance",
            Self::DegenerateLink(..) => "DegenerateLink",
            Self::Composition(e) => e.kind(),
        }
    }
}

/// Removes column means. Returns the centred matrix and the means.
pub fn center_columns<T: Scalar>(clr: &ClrMatrix<T>) -> Result<(Array2<T>, Array1<T>), BiplotError> {
    center(clr.values())
}

pub(crate) fn center<T: Scalar>(values: &Array2<T>) -> Result<(Array2<T>, Array1<T>), BiplotError> {
    let n = values.nrows();
    if n < 2 {
        return Err(BiplotError::TooFewRows { needed: 2, found: n });
    }
    let means: Array1<T> = values
        .axis_iter(Axis(1))
        .map(|c| c.iter().copied().sum::<T>() / T::from_count(n))
        .collect();
    Ok((values - &means, means))
}

/// Largest rank a biplot of an `n x d` CLR matrix can carry.
pub fn max_rank(n: usize, d: usize) -> usize {
    n.saturating_sub(1).min(d.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiplotModel<T> {
    entity_ids: Vec<String>,
    parts: Vec<Part>,
    points: Array2<T>,
    rays: Array2<T>,
    singular_values: Array1<T>,
    explained: Array1<T>,
    alpha: T,
    k: usize,
    column_means: Array1<T>,
    centered: Array2<T>,
}

impl<T: Scalar> BiplotModel<T> {
    /// Entity scores, `n x k`.
    pub fn points(&self) -> &Array2<T> {
        &self.points
    }

    /// Part loadings, `D x k`, one row per part.
    pub fn rays(&self) -> &Array2<T> {
        &self.rays
    }

    /// The `min(n - 1, D - 1)` leading singular values of the centred CLR matrix.
    pub fn singular_values(&self) -> &Array1<T> {
        &self.singular_values
    }

    /// Share of total variance carried by each component.
    pub fn explained(&self) -> &Array1<T> {
        &self.explained
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn column_means(&self) -> &Array1<T> {
        &self.column_means
    }

    /// The centred CLR matrix the model was fitted to.
    pub fn centered(&self) -> &Array2<T> {
        &self.centered
    }

    pub fn entity_ids(&self) -> &[String] {
        &self.entity_ids
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    pub fn document(&self) -> ModelDocument {
        let f = |a: &Array1<T>| a.iter().map(|x| x.to_f64_lossy()).collect::<Vec<_>>();
        ModelDocument {
            alpha: self.alpha.to_f64_lossy(),
            k: self.k,
            singular_values: f(&self.singular_values),
            explained: f(&self.explained),
            column_means: f(&self.column_means),
            points: self
                .entity_ids
                .iter()
                .zip(self.points.rows())
                .map(|(id, row)| PointRecord { id: id.clone(), coords: row.iter().map(|x| x.to_f64_lossy()).collect() })
                .collect(),
            rays: self
                .parts
                .iter()
                .zip(self.rays.rows())
                .map(|(p, row)| RayRecord { part: p.name.clone(), coords: row.iter().map(|x| x.to_f64_lossy()).collect() })
                .collect(),
        }
    }
}

/// Serializable view of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelDocument {
    pub alpha: f64,
    pub k: usize,
    pub singular_values: Vec<f64>,
    pub explained: Vec<f64>,
    pub column_means: Vec<f64>,
    pub points: Vec<PointRecord>,
    pub rays: Vec<RayRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub id: String,
    pub coords: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RayRecord {
    pub part: String,
    pub coords: Vec<f64>,
}

pub fn fit_biplot<T: Scalar>(clr: &ClrMatrix<T>, alpha: T, k: usize) -> Result<BiplotModel<T>, BiplotError> {
    let (n, d) = (clr.n(), clr.d());
    if n < 3 {
        return Err(BiplotError::TooFewRows { needed: 3, found: n });
    }
    if d < 2 {
        return Err(BiplotError::TooFewParts(d));
    }
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(BiplotError::InvalidAlpha(alpha.to_f64_lossy()));
    }
    let full = max_rank(n, d);
    if k == 0 || k > full {
        return Err(BiplotError::RankRequestTooLarge { requested: k, max: full });
    }

    let (centered, column_means) = center_columns(clr)?;
    let svd = thin_svd(&centered).map_err(|e| BiplotError::SvdFailure(e.sweeps))?;

    let scale = clr.values().iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let floor = T::epsilon() * T::from_count(n * d).sqrt() * T::lit(16.0) * scale;
    if svd.s[0] <= floor {
        return Err(BiplotError::DegenerateVariance);
    }
    let total: T = svd.s.iter().map(|s| *s * *s).sum();
    let singular_values = svd.s.slice(ndarray::s![..full]).to_owned();
    let explained = singular_values.mapv(|s| s * s / total);

    let one_minus = T::one() - alpha;
    let mut points = Array2::<T>::zeros((n, k));
    let mut rays = Array2::<T>::zeros((d, k));
    for m in 0..k {
        let s = svd.s[m];
        let (sp, sr) = (s.powf(alpha), s.powf(one_minus));
        points.column_mut(m).assign(&svd.u.column(m).mapv(|x| x * sp));
        rays.column_mut(m).assign(&svd.v.column(m).mapv(|x| x * sr));
    }

    Ok(BiplotModel {
        entity_ids: clr.entities().iter().map(|e| e.id.clone()).collect(),
        parts: clr.parts().to_vec(),
        points,
        rays,
        singular_values,
        explained,
        alpha,
        k,
        column_means,
        centered,
    })
}

/// `points * rays^T`; the rank-`k` approximation of the centred CLR matrix.
pub fn reconstruct<T: Scalar>(model: &BiplotModel<T>) -> Array2<T> {
    model.points.dot(&model.rays.t())
}

/// Line joining the tips of two rays; points along it order entities by
/// `ln(x_i / x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Link<T> {
    pub part_i: usize,
    pub part_j: usize,
    /// `rays[i] - rays[j]`.
    pub direction: Array1<T>,
    pub label: Option<String>,
    pub degenerate: bool,
}

pub fn make_link<T: Scalar>(model: &BiplotModel<T>, part_i: usize, part_j: usize) -> Result<Link<T>, BiplotError> {
    let parts = model.parts.len();
    for index in [part_i, part_j] {
        if index >= parts {
            return Err(CompositionError::IndexOutOfRange { index, parts }.into());
        }
    }
    if part_i == part_j {
        return Err(CompositionError::SamePart(part_i).into());
    }
    let direction = &model.rays.row(part_i) - &model.rays.row(part_j);
    let norm = |v: ndarray::ArrayView1<'_, T>| v.iter().map(|x| *x * *x).sum::<T>().sqrt();
    let longest = model.rays.rows().into_iter().map(norm).fold(T::zero(), T::max);
    let degenerate = norm(direction.view()) <= T::lit(DEGENERATE_LINK) * longest;
    Ok(Link { part_i, part_j, direction, label: None, degenerate })
}

/// Link for a named ratio, numerator ray minus denominator ray.
pub fn link_for_ratio<T: Scalar>(model: &BiplotModel<T>, def: &RatioDefinition) -> Result<Link<T>, BiplotError> {
    let (i, j) = resolve_in(&def.numerator, &def.denominator, &model.parts)?;
    let mut link = make_link(model, i, j)?;
    link.label = Some(def.name.clone());
    Ok(link)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult<T> {
    /// Entity ids in input order.
    pub entity_ids: Vec<String>,
    /// Projection score per entity, input order.
    pub scores: Vec<T>,
    /// Centred log-ratio `Z[r][i] - Z[r][j]` per entity, input order.
    pub exact_log_ratios: Vec<T>,
    /// Entity indices sorted by descending score, ties by ascending id.
    pub order: Vec<usize>,
    /// Pearson correlation of scores with the exact log-ratios.
    pub fidelity: Option<T>,
    /// Kendall tau-b between the two orderings.
    pub rank_agreement: Option<T>,
}

impl<T: Scalar> RankingResult<T> {
    pub fn ordered_ids(&self) -> Vec<&str> {
        self.order.iter().map(|&r| self.entity_ids[r].as_str()).collect()
    }

    /// 1-based rank of each entity, input order.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len()];
        for (pos, &r) in self.order.iter().enumerate() {
            ranks[r] = pos + 1;
        }
        ranks
    }
}

/// Sorts indices by descending value, ties broken by ascending id.
pub fn descending_order<T: Scalar>(values: &[T], ids: &[String]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    order
}

pub fn rank_along_link<T: Scalar>(model: &BiplotModel<T>, link: &Link<T>) -> Result<RankingResult<T>, BiplotError> {
    if link.degenerate {
        return Err(BiplotError::DegenerateLink(link.part_i, link.part_j));
    }
    let scores: Vec<T> = model.points.dot(&link.direction).to_vec();
    let exact: Vec<T> = model
        .centered
        .rows()
        .into_iter()
        .map(|r| r[link.part_i] - r[link.part_j])
        .collect();
    let order = descending_order(&scores, &model.entity_ids);
    Ok(RankingResult {
        entity_ids: model.entity_ids.clone(),
        fidelity: pearson(&scores, &exact),
        rank_agreement: kendall_tau_b(&scores, &exact),
        scores,
        exact_log_ratios: exact,
        order,
    })
}

pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    let n = T::from_count(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (*a - mx, *b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).max(-T::one()).min(T::one()))
}

pub fn kendall_tau_b<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            let dx = x[a].partial_cmp(&x[b]).unwrap_or(Ordering::Equal);
            let dy = y[a].partial_cmp(&y[b]).unwrap_or(Ordering::Equal);
            match (dx, dy) {
                (Ordering::Equal, Ordering::Equal) => {}
                (Ordering::Equal, _) => ties_x += 1,
                (_, Ordering::Equal) => ties_y += 1,
                (p, q) if p == q => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n1 = concordant + discordant + ties_x;
    let n2 = concordant + discordant + ties_y;
    if n1 == 0 || n2 == 0 {
        return None;
    }
    let denom = (T::from_i64(n1)? * T::from_i64(n2)?).sqrt();
    Some(T::from_i64(concordant - discordant)? / denom)
}

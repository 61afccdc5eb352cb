//! Agglomerative clustering of entities in Aitchison geometry.
//!
//! Entities are processed in ascending id order, so results do not depend on
//! the order of rows in the input table.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biplot::{center, BiplotError};
use crate::composition::{clr_matrix, euclidean, ClrMatrix, CompositionError, IndicatorTable, RatioDefinition};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("need at least 2 entities, found {0}")]
    TooFewRows(usize),
    #[error("infeasible cut: {0}")]
    InfeasibleCut(String),
    #[error("assignment does not match table entities: {0}")]
    MismatchedEntities(String),
    #[error("distance matrix is not a valid dissimilarity: {0}")]
    InvalidDistance(String),
    #[error(transparent)]
    Composition(#[from] CompositionError),
}

impl ClusterError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::TooFewRows(_) => "TooFewRows",
            Self::InfeasibleCut(_) => "InfeasibleCut",
            Self::MismatchedEntities(_) => "MismatchedEntities",
            Self::InvalidDistance(_) => "InvalidDistance",
            Self::Composition(e) => e.kind(),
        }
    }
}

/// Symmetric matrix of pairwise distances with matching entity ids.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<T> {
    ids: Vec<String>,
    values: Array2<T>,
}

impl<T: Scalar> DistanceMatrix<T> {
    /// Wraps an arbitrary dissimilarity matrix after checking shape, symmetry,
    /// zero diagonal and non-negativity.
    pub fn new(ids: Vec<String>, values: Array2<T>) -> Result<Self, ClusterError> {
        let n = ids.len();
        if values.dim() != (n, n) {
            return Err(ClusterError::InvalidDistance(format!("shape {:?} for {n} ids", values.dim())));
        }
        for a in 0..n {
            if values[[a, a]] != T::zero() {
                return Err(ClusterError::InvalidDistance(format!("non-zero diagonal at {a}")));
            }
            for b in 0..a {
                let v = values[[a, b]];
                if !v.is_finite() || v < T::zero() || v != values[[b, a]] {
                    return Err(ClusterError::InvalidDistance(format!("entry ({a}, {b})")));
                }
            }
        }
        Ok(Self { ids, values })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.values[[a, b]]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Aitchison distances: Euclidean distances between CLR rows.
pub fn distance_matrix<T: Scalar>(clr: &ClrMatrix<T>) -> Result<DistanceMatrix<T>, ClusterError> {
    let n = clr.n();
    if n < 2 {
        return Err(ClusterError::TooFewRows(n));
    }
    let v = clr.values();
    let mut values = Array2::<T>::zeros((n, n));
    for a in 0..n {
        for b in 0..a {
            let d = euclidean(v.row(a), v.row(b));
            values[[a, b]] = d;
            values[[b, a]] = d;
        }
    }
    Ok(DistanceMatrix { ids: clr.entities().iter().map(|e| e.id.clone()).collect(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    Single,
    #[default]
    Complete,
    Average,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(format!("unknown linkage {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cut {
    Count(usize),
    /// Keep every merge at or below this height.
    Threshold(f64),
    /// Threshold at the largest relative gap between consecutive merge heights.
    LargestGap,
}

/// One agglomeration step. Clusters are named by their smallest member id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    pub cluster_a: String,
    pub cluster_b: String,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAssignment {
    /// `(entity id, 1-based cluster label)` in the distance matrix's entity order.
    pub labels: Vec<(String, usize)>,
    pub linkage: Linkage,
    pub cut: Cut,
    /// Height the tree was cut at, when the cut is threshold based.
    pub threshold: Option<f64>,
    pub cluster_count: usize,
    pub merge_history: Vec<Merge>,
}

impl ClusterAssignment {
    pub fn label_of(&self, id: &str) -> Option<usize> {
        self.labels.iter().find(|(e, _)| e == id).map(|(_, l)| *l)
    }
}

struct Node {
    members: Vec<usize>,
    name: usize,
}

/// Standard agglomerative merging with Lance-Williams updates.
///
/// Equal-height candidates are resolved by the lexicographically smallest
/// pair of cluster names (smallest member id of each cluster).
pub fn hierarchical_cluster<T: Scalar>(
    dist: &DistanceMatrix<T>,
    linkage: Linkage,
    cut: Cut,
) -> Result<ClusterAssignment, ClusterError> {
    let n = dist.len();
    if n == 0 {
        return Err(ClusterError::TooFewRows(0));
    }
    match cut {
        Cut::Count(c) if c == 0 || c > n => {
            return Err(ClusterError::InfeasibleCut(format!("cluster count {c} for {n} entities")))
        }
        Cut::Threshold(t) if !t.is_finite() || t < 0.0 => {
            return Err(ClusterError::InfeasibleCut(format!("threshold {t}")))
        }
        _ => {}
    }

    // canonical order: position p holds the entity with the p-th smallest id
    let mut canon: Vec<usize> = (0..n).collect();
    canon.sort_by(|&a, &b| dist.ids[a].cmp(&dist.ids[b]));
    let mut d = Array2::<T>::zeros((n, n));
    for p in 0..n {
        for q in 0..n {
            d[[p, q]] = dist.values[[canon[p], canon[q]]];
        }
    }

    let mut nodes: Vec<Option<Node>> = (0..n).map(|p| Some(Node { members: vec![p], name: p })).collect();
    let mut history = Vec::with_capacity(n.saturating_sub(1));
    let mut merges: Vec<(usize, usize, T)> = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let mut best: Option<(T, usize, usize, (usize, usize))> = None;
        for a in 0..n {
            let Some(na) = &nodes[a] else { continue };
            for b in a + 1..n {
                let Some(nb) = &nodes[b] else { continue };
                let h = d[[a, b]];
                let key = (na.name.min(nb.name), na.name.max(nb.name));
                let better = match &best {
                    None => true,
                    Some((bh, _, _, bkey)) => h < *bh || (h == *bh && key < *bkey),
                };
                if better {
                    best = Some((h, a, b, key));
                }
            }
        }
        let (h, a, b, _) = best.expect("at least two live clusters");
        let nb = nodes[b].take().expect("live");
        let size_a = T::from_count(nodes[a].as_ref().expect("live").members.len());
        let size_b = T::from_count(nb.members.len());
        for c in 0..n {
            if c == a || c == b || nodes[c].is_none() {
                continue;
            }
            let (dac, dbc) = (d[[a, c]], d[[b, c]]);
            let merged = match linkage {
                Linkage::Single => dac.min(dbc),
                Linkage::Complete => dac.max(dbc),
                Linkage::Average => (size_a * dac + size_b * dbc) / (size_a + size_b),
            };
            d[[a, c]] = merged;
            d[[c, a]] = merged;
        }
        let na = nodes[a].as_mut().expect("live");
        let (name_a, name_b) = (na.name.min(nb.name), na.name.max(nb.name));
        na.members.extend(nb.members);
        na.name = name_a;
        history.push(Merge {
            cluster_a: dist.ids[canon[name_a]].clone(),
            cluster_b: dist.ids[canon[name_b]].clone(),
            distance: h.to_f64_lossy(),
            size: na.members.len(),
        });
        merges.push((name_a, name_b, h));
    }

    let heights: Vec<f64> = history.iter().map(|m| m.distance).collect();
    let (keep, threshold) = match cut {
        Cut::Count(c) => (n - c, None),
        Cut::Threshold(t) => (heights.iter().take_while(|h| **h <= t).count(), Some(t)),
        Cut::LargestGap => {
            let t = largest_gap_threshold(&heights);
            (heights.iter().take_while(|h| **h <= t).count(), Some(t))
        }
    };

    // replay the first `keep` merges with union-find over canonical positions
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b, _) in merges.iter().take(keep) {
        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        parent[hi] = lo;
    }
    // roots are the smallest canonical position of each cluster, so labels
    // follow the smallest member id
    let mut label_of_root = HashMap::new();
    for p in 0..n {
        let r = root(&mut parent, p);
        let next = label_of_root.len() + 1;
        label_of_root.entry(r).or_insert(next);
    }
    let mut labels = vec![0usize; n];
    for p in 0..n {
        let r = root(&mut parent, p);
        labels[canon[p]] = label_of_root[&r];
    }

    Ok(ClusterAssignment {
        labels: dist.ids.iter().cloned().zip(labels).collect(),
        linkage,
        cut,
        threshold,
        cluster_count: label_of_root.len(),
        merge_history: history,
    })
}

/// Height just below the largest relative jump `(h[m+1] - h[m]) / h[m+1]`.
///
/// With fewer than two merges there is no gap and everything is merged.
pub fn largest_gap_threshold(heights: &[f64]) -> f64 {
    let mut best: Option<(f64, f64)> = None;
    for w in heights.windows(2) {
        if w[1] <= 0.0 {
            continue;
        }
        let gap = (w[1] - w[0]) / w[1];
        if best.is_none_or(|(g, _)| gap > g) {
            best = Some((gap, w[0]));
        }
    }
    match best {
        Some((gap, h)) if gap > 0.0 => h,
        _ => heights.last().copied().unwrap_or(0.0),
    }
}

/// Summary of one cluster relative to the sample-average composition.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterProfile<T> {
    pub label: usize,
    pub members: Vec<String>,
    /// Mean of the members' column-centred CLR rows.
    pub mean_clr: Array1<T>,
    /// Distance of the cluster centre from the biplot origin.
    pub norm: T,
    /// `(ratio name, mean centred log-ratio)` per requested ratio.
    pub ratio_means: Vec<(String, T)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileDocument {
    pub label: usize,
    pub members: Vec<String>,
    pub mean_clr: Vec<f64>,
    pub norm: f64,
    pub ratio_means: Vec<(String, f64)>,
}

impl<T: Scalar> ClusterProfile<T> {
    pub fn document(&self) -> ProfileDocument {
        ProfileDocument {
            label: self.label,
            members: self.members.clone(),
            mean_clr: self.mean_clr.iter().map(|x| x.to_f64_lossy()).collect(),
            norm: self.norm.to_f64_lossy(),
            ratio_means: self.ratio_means.iter().map(|(n, v)| (n.clone(), v.to_f64_lossy())).collect(),
        }
    }
}

pub fn cluster_profile<T: Scalar>(
    table: &IndicatorTable<T>,
    assignment: &ClusterAssignment,
    ratios: &[RatioDefinition],
) -> Result<Vec<ClusterProfile<T>>, ClusterError> {
    let n = table.n();
    if assignment.labels.len() != n {
        return Err(ClusterError::MismatchedEntities(format!(
            "{} labels for {n} entities",
            assignment.labels.len()
        )));
    }
    let by_id: HashMap<&str, usize> = assignment.labels.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let mut labels = Vec::with_capacity(n);
    for e in table.entities() {
        let l = by_id
            .get(e.id.as_str())
            .ok_or_else(|| ClusterError::MismatchedEntities(format!("no label for {:?}", e.id)))?;
        labels.push(*l);
    }
    let resolved = ratios
        .iter()
        .map(|r| r.resolve(table).map(|ij| (r.name.clone(), ij)))
        .collect::<Result<Vec<_>, _>>()?;

    let clr = clr_matrix(table);
    let (z, _) = center(clr.values()).map_err(|e| match e {
        BiplotError::TooFewRows { found, .. } => ClusterError::TooFewRows(found),
        other => ClusterError::InvalidDistance(other.to_string()),
    })?;

    let max_label = labels.iter().copied().max().unwrap_or(0);
    let mut out = Vec::new();
    for label in 1..=max_label {
        let rows: Vec<usize> = (0..n).filter(|&r| labels[r] == label).collect();
        if rows.is_empty() {
            continue;
        }
        let size = T::from_count(rows.len());
        let mut mean = Array1::<T>::zeros(table.d());
        for &r in &rows {
            mean = mean + z.row(r);
        }
        mean.mapv_inplace(|x| x / size);
        let norm = mean.iter().map(|x| *x * *x).sum::<T>().sqrt();
        let ratio_means = resolved
            .iter()
            .map(|(name, (i, j))| (name.clone(), mean[*i] - mean[*j]))
            .collect();
        out.push(ClusterProfile {
            label,
            members: rows.iter().map(|&r| table.entities()[r].id.clone()).collect(),
            mean_clr: mean,
            norm,
            ratio_means,
        });
    }
    Ok(out)
}

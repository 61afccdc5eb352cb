#![allow(dead_code)]

use coda_atlas::{validate_table, Entity, IndicatorTable, Part, Role};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn parts(d: usize) -> Vec<Part> {
    (0..d).map(|j| Part::new(j, format!("p{j}"), "1", Role::Financial)).collect()
}

pub fn entities(n: usize) -> Vec<Entity> {
    (0..n).map(|r| Entity::new(format!("E{r:03}"), format!("entity {r}"), "101X")).collect()
}

/// Values log-uniform on `[lo, hi]`.
pub fn log_uniform(rng: &mut impl Rng, n: usize, d: usize, lo: f64, hi: f64) -> Array2<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    Array2::from_shape_fn((n, d), |_| rng.random_range(a..b).exp())
}

pub fn random_table(rng: &mut impl Rng, n: usize, d: usize) -> IndicatorTable {
    table(log_uniform(rng, n, d, 1e-3, 1e6))
}

pub fn table(values: Array2<f64>) -> IndicatorTable {
    let (n, d) = values.dim();
    validate_table(values, parts(d), entities(n)).unwrap()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[[i, j]]).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j] * m[i][j]).sum();
        let total: f64 = m.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-32 * total {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q] == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in m.iter_mut() {
                    let (xp, xq) = (row[p], row[q]);
                    row[p] = c * xp - s * xq;
                    row[q] = s * xp + c * xq;
                }
                let (rp, rq) = (m[p].clone(), m[q].clone());
                for k in 0..n {
                    m[p][k] = c * rp[k] - s * rq[k];
                    m[q][k] = s * rp[k] + c * rq[k];
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    eig
}

/// Singular values implied by the oracle: square roots of the leading
/// `count` eigenvalues of `ZᵀZ`, alongside the eigenvalues themselves.
pub fn oracle_singular_values(z: &Array2<f64>, count: usize) -> (Vec<f64>, Vec<f64>) {
    let eig = jacobi_eigenvalues(&z.t().dot(z));
    let lambda: Vec<f64> = eig.into_iter().take(count).collect();
    (lambda.iter().map(|l| l.max(0.0).sqrt()).collect(), lambda)
}

/// Entity indices sorted by descending exact log-ratio of parts `i` and `j`,
/// ties by ascending id.
pub fn brute_force_order(table: &IndicatorTable, i: usize, j: usize) -> Vec<usize> {
    let keys: Vec<f64> = (0..table.n()).map(|r| table.values()[[r, i]].ln() - table.values()[[r, j]].ln()).collect();
    let ids: Vec<&str> = table.entities().iter().map(|e| e.id.as_str()).collect();
    let mut order: Vec<usize> = (0..table.n()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(ids[a].cmp(ids[b])));
    order
}

/// The spot-check fixture with rows (1,2,4,8), (8,4,2,1), (1,1,2,2), (2,2,1,1).
pub fn svd_fixture() -> IndicatorTable {
    table(ndarray::array![[1.0, 2.0, 4.0, 8.0], [8.0, 4.0, 2.0, 1.0], [1.0, 1.0, 2.0, 2.0], [2.0, 2.0, 1.0, 1.0]])
}

/// Two tight triples far apart in Aitchison geometry.
pub fn two_triples() -> IndicatorTable {
    table(ndarray::array![
        [10.0, 10.0, 10.0],
        [11.0, 10.0, 10.0],
        [10.0, 11.0, 10.0],
        [1e4, 10.0, 0.01],
        [1.1e4, 10.0, 0.01],
        [1e4, 11.0, 0.01],
    ])
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

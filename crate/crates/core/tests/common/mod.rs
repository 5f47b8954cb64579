#![allow(dead_code)]

use cssc::dataset::DataMatrix;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn shrink(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

pub fn random_unit_columns(rng: &mut ChaCha8Rng, dim: usize, n: usize) -> DataMatrix<f64> {
    let mut m = DMatrix::from_fn(dim, n, |_, _| rng.random_range(-1.0..1.0));
    for mut col in m.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    DataMatrix::new(m).unwrap()
}

/// Cyclic coordinate descent on each column of the Frobenius problem.
pub fn coordinate_descent(x: &DMatrix<f64>, w: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let n = x.ncols();
    let mut c = DMatrix::zeros(n, n);
    for j in 0..n {
        for _ in 0..20_000 {
            for i in (0..n).filter(|&i| i != j) {
                let mut r: DVector<f64> = x.column(j).into_owned();
                for k in (0..n).filter(|&k| k != i && k != j) {
                    r -= x.column(k) * c[(k, j)];
                }
                let xi = x.column(i);
                c[(i, j)] = shrink(xi.dot(&r), w[(i, j)] / lambda) / xi.norm_squared();
            }
        }
    }
    c
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Mismatch fraction under the best relabeling, by exhaustive search.
pub fn brute_force_error(pred: &[usize], truth: &[usize]) -> (usize, usize) {
    let k = pred.iter().chain(truth).max().map_or(1, |m| m + 1);
    let best = permutations(k)
        .iter()
        .map(|p| {
            pred.iter()
                .zip(truth)
                .filter(|(a, b)| p[**a] == **b)
                .count()
        })
        .max()
        .unwrap();
    (pred.len() - best, pred.len())
}

use cssc::dataset::{Constraint, ConstraintSet, Labels};
use cssc::metrics::min_cost_assignment;
use cssc::selfexpress::{
    objective, solve_lsr, solve_weighted_sparse, ErrorNorm, LsrVariant, SolverOptions,
};
use cssc::spectral::{
    constrained_kmeans, spectral_embedding, AffinityMatrix, Embedding, EmbeddingOptions,
    KMeansOptions,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::{coordinate_descent, permutations, random_unit_columns};

fn tight(lambda: f64, norm: ErrorNorm) -> SolverOptions<f64> {
    let mut o = SolverOptions::new(lambda);
    o.error_norm = norm;
    o.tol_abs = 1e-11;
    o.tol_rel = 1e-11;
    o.max_iters = 200_000;
    o
}

#[test]
fn frobenius_admm_matches_coordinate_descent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..24 {
        let n = 2 + case % 3;
        let x = random_unit_columns(&mut rng, 4, n);
        let w = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.3..3.0));
        let lambda = rng.random_range(2.0..20.0);
        let sol = solve_weighted_sparse(&x, &w, &tight(lambda, ErrorNorm::Frobenius)).unwrap();
        let oracle = coordinate_descent(x.values(), &w, lambda);
        let best = objective(&x, &oracle, &w, lambda, ErrorNorm::Frobenius);
        let rel = (sol.objective - best).abs() / best;
        assert!(
            rel < 1e-6,
            "case {case}: admm {} oracle {best}",
            sol.objective
        );
        assert!((sol.coefficients.values() - &oracle).amax() < 1e-4);
    }
}

/// ℓ1 objective of column `j` at coefficients `c` over the free indices.
fn l1_column_objective(
    x: &DMatrix<f64>,
    w: &DMatrix<f64>,
    lambda: f64,
    j: usize,
    free: &[usize],
    c: &[f64],
) -> f64 {
    let mut r: DVector<f64> = x.column(j).into_owned();
    let mut pen = 0.0;
    for (&i, &v) in free.iter().zip(c) {
        r -= x.column(i) * v;
        pen += w[(i, j)] * v.abs();
    }
    pen + lambda * r.iter().map(|v| v.abs()).sum::<f64>()
}

/// Exact minimum over the vertices of the piecewise-linear column
/// objective (at most two free coefficients).
fn l1_vertex_oracle(x: &DMatrix<f64>, w: &DMatrix<f64>, lambda: f64, j: usize) -> f64 {
    let n = x.ncols();
    let free: Vec<usize> = (0..n).filter(|&i| i != j).collect();
    let m = free.len();
    // hyperplanes a·c = b
    let mut planes: Vec<(Vec<f64>, f64)> = (0..m)
        .map(|k| {
            (
                (0..m).map(|l| if l == k { 1.0 } else { 0.0 }).collect(),
                0.0,
            )
        })
        .collect();
    for d in 0..x.nrows() {
        planes.push((free.iter().map(|&i| x[(d, i)]).collect(), x[(d, j)]));
    }
    let mut best = f64::INFINITY;
    match m {
        1 => {
            for (a, b) in &planes {
                if a[0].abs() > 1e-12 {
                    best = best.min(l1_column_objective(x, w, lambda, j, &free, &[b / a[0]]));
                }
            }
        }
        2 => {
            for p in 0..planes.len() {
                for q in p + 1..planes.len() {
                    let (a, b) = (&planes[p], &planes[q]);
                    let det = a.0[0] * b.0[1] - a.0[1] * b.0[0];
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let c0 = (a.1 * b.0[1] - a.0[1] * b.1) / det;
                    let c1 = (a.0[0] * b.1 - a.1 * b.0[0]) / det;
                    best = best.min(l1_column_objective(x, w, lambda, j, &free, &[c0, c1]));
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

#[test]
fn l1_admm_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..16 {
        let n = 2 + case % 2;
        let x = random_unit_columns(&mut rng, 3, n);
        let w = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.3..3.0));
        let lambda = rng.random_range(0.5..5.0);
        let mut o = tight(lambda, ErrorNorm::L1);
        o.rho = 1.0;
        let sol = solve_weighted_sparse(&x, &w, &o).unwrap();
        let best: f64 = (0..n)
            .map(|j| l1_vertex_oracle(x.values(), &w, lambda, j))
            .sum();
        let rel = (sol.objective - best).abs() / best;
        assert!(
            rel < 1e-4,
            "case {case}: admm {} oracle {best}",
            sol.objective
        );
    }
}

#[test]
fn lsr1_matches_per_column_ridge() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let n = 6;
        let x = random_unit_columns(&mut rng, 4, n);
        let lambda = rng.random_range(0.1..3.0);
        let c = solve_lsr(&x, lambda, LsrVariant::Lsr1).unwrap();
        let xv = x.values();
        for j in 0..n {
            let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            let sub = xv.select_columns(&others);
            let mut sys = sub.tr_mul(&sub);
            for k in 0..others.len() {
                sys[(k, k)] += lambda;
            }
            let sol = sys.lu().solve(&sub.tr_mul(&xv.column(j))).unwrap();
            for (k, &i) in others.iter().enumerate() {
                assert!((c.values()[(i, j)] - sol[k]).abs() < 1e-10);
            }
            assert_eq!(c.values()[(j, j)], 0.0);
        }
    }
}

#[test]
fn lsr2_matches_ridge_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let x = random_unit_columns(&mut rng, 5, 7);
    let lambda = 0.7;
    let c = solve_lsr(&x, lambda, LsrVariant::Lsr2).unwrap();
    let g = x.gram();
    // stationarity of λ‖C‖² + ‖X − XC‖²: (G + λI)C = G
    let lhs = (&g + DMatrix::identity(7, 7) * lambda) * c.values();
    assert!((lhs - g).amax() < 1e-10);
}

#[test]
fn assignment_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let cost: Vec<Vec<i64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-20..20)).collect())
            .collect();
        let (total, perm) = min_cost_assignment(&cost);
        let brute = permutations(n)
            .iter()
            .map(|p| p.iter().enumerate().map(|(r, &c)| cost[r][c]).sum::<i64>())
            .min()
            .unwrap();
        assert_eq!(total, brute);
        assert_eq!(
            perm.iter()
                .enumerate()
                .map(|(r, &c)| cost[r][c])
                .sum::<i64>(),
            total
        );
    }
}

fn wcss(points: &DMatrix<f64>, labels: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let mut mean = points.row(members[0]).into_owned();
        for &i in &members[1..] {
            mean += points.row(i);
        }
        mean /= members.len() as f64;
        total += members
            .iter()
            .map(|&i| (points.row(i) - &mean).norm_squared())
            .sum::<f64>();
    }
    total
}

/// Minimum WCSS over all feasible assignments with every cluster used.
fn brute_force_constrained(points: &DMatrix<f64>, k: usize, cs: &ConstraintSet) -> f64 {
    let n = points.nrows();
    let mut best = f64::INFINITY;
    let mut labels = vec![0; n];
    loop {
        let used = (0..k).all(|c| labels.contains(&c));
        if used {
            let l = Labels::new(labels.clone(), k).unwrap();
            if cs.violations(&l) == 0 {
                best = best.min(wcss(points, &labels, k));
            }
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

#[test]
fn constrained_kmeans_line_example() {
    let points = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 9.0, 10.0]);
    let cs = ConstraintSet::new(4, [Constraint::must_link(1, 2)]).unwrap();
    let e = Embedding::from_points(points.clone());
    let labels = constrained_kmeans(&e, 2, &cs, 3, &KMeansOptions::default()).unwrap();
    assert_eq!(labels.get(1), labels.get(2));
    let got = wcss(&points, labels.as_slice(), 2);
    let best = brute_force_constrained(&points, 2, &cs);
    assert!((best - 438.0 / 9.0).abs() < 1e-12);
    assert!((got - best).abs() < 1e-9, "{got} vs {best}");
}

#[test]
fn constrained_kmeans_finds_the_blob_partition() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..20 {
        let n = 8;
        let centers = [[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]];
        let points = DMatrix::from_fn(n, 2, |i, d| centers[i % 3][d] + rng.random_range(-0.5..0.5));
        let cs = ConstraintSet::new(
            n,
            [
                Constraint::must_link(0, 3),
                Constraint::cannot_link(2, 4),
                Constraint::cannot_link(1, 6),
            ],
        )
        .unwrap();
        let e = Embedding::from_points(points.clone());
        let labels = constrained_kmeans(&e, 3, &cs, 1, &KMeansOptions::default()).unwrap();
        assert_eq!(cs.violations(&labels), 0);
        let got = wcss(&points, labels.as_slice(), 3);
        let best = brute_force_constrained(&points, 3, &cs);
        assert!(got <= best * (1.0 + 1e-9) + 1e-12, "{got} vs {best}");
    }
}

fn random_affinity(rng: &mut ChaCha8Rng, n: usize) -> AffinityMatrix<f64> {
    let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(0.0..1.0));
    a = (&a + a.transpose()) / 2.0;
    a.fill_diagonal(0.0);
    AffinityMatrix::new(a).unwrap()
}

/// `Y(YᵀDY)^{-1/2}` for a random `Y`.
fn d_orthonormal(rng: &mut ChaCha8Rng, d: &DVector<f64>, k: usize) -> DMatrix<f64> {
    let n = d.len();
    let y = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0));
    let m = y.transpose() * DMatrix::from_diagonal(d) * &y;
    let eig = m.symmetric_eigen();
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()))
        * eig.eigenvectors.transpose();
    y * inv_sqrt
}

#[test]
fn embedding_minimizes_the_relaxed_cut() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..10 {
        let n = 9;
        let a = random_affinity(&mut rng, n);
        let l = a.laplacian();
        let d = a.degree().clone();
        for k in 1..=3 {
            let e = spectral_embedding(&a, k, &EmbeddingOptions::default()).unwrap();
            let q = e.values();
            let gram = q.transpose() * DMatrix::from_diagonal(&d) * q;
            assert!((gram - DMatrix::identity(k, k)).amax() < 1e-9);
            let value = (q.transpose() * l * q).trace();
            let eigsum: f64 = e.eigenvalues().iter().sum();
            assert!((value - eigsum).abs() < 1e-9);
            for _ in 0..50 {
                let y = d_orthonormal(&mut rng, &d, k);
                assert!((y.transpose() * l * &y).trace() >= value - 1e-9);
            }
        }
        // full rank: trace(QᵀLQ) = trace(D^{-1/2} L D^{-1/2})
        let e = spectral_embedding(&a, n, &EmbeddingOptions::default()).unwrap();
        let q = e.values();
        let full = (q.transpose() * l * q).trace();
        let expect: f64 = (0..n).map(|i| l[(i, i)] / d[i]).sum();
        assert!((full - expect).abs() < 1e-9);
    }
}

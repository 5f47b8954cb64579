//! Lloyd's k-means with k-means++ seeding, and its constrained variant.
//!
//! Both entry points share one routine. Must-link classes are collapsed
//! into super-points weighted by their size; unconstrained k-means is the
//! case where every super-point is a single point and nothing is
//! cannot-linked. Each assignment step visits super-points by decreasing
//! mass (ties by index) and gives each the nearest centroid that holds no
//! cannot-linked partner assigned earlier in the same step. When a
//! super-point has nowhere to go, earlier cannot-linked choices are
//! revisited in order of distance; a step whose bounded search finds no
//! feasible assignment abandons the run, which is reseeded.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Embedding;
use crate::dataset::{ConstraintSet, Labels};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::{derive_seed, rng_from_seed, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Fresh seeds tried per restart when constrained assignment fails.
    pub reseeds: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 300,
            reseeds: 10,
        }
    }
}

pub fn kmeans<T: Real>(
    e: &Embedding<T>,
    n_clusters: usize,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<Labels> {
    constrained_kmeans(
        e,
        n_clusters,
        &ConstraintSet::empty(e.n_points()),
        seed,
        opts,
    )
}

pub fn constrained_kmeans<T: Real>(
    e: &Embedding<T>,
    n_clusters: usize,
    cs: &ConstraintSet,
    seed: u64,
    opts: &KMeansOptions,
) -> Result<Labels> {
    let points = e.values();
    let n = points.nrows();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::InvalidParameter(format!(
            "cluster count {n_clusters} must lie in 1..={n}"
        )));
    }
    if cs.n_points() != n {
        return Err(Error::DimensionMismatch(format!(
            "constraints cover {} points, embedding has {n}",
            cs.n_points()
        )));
    }
    if opts.restarts == 0 {
        return Err(Error::InvalidParameter(
            "restarts must be at least 1".into(),
        ));
    }
    let problem = Problem::new(points, cs);
    let base = derive_seed(seed, stream::KMEANS);

    let mut best: Option<(T, Vec<usize>)> = None;
    let mut attempts = 0;
    for r in 0..opts.restarts {
        let slot = derive_seed(base, r as u64);
        for a in 0..=opts.reseeds {
            attempts += 1;
            let mut rng = rng_from_seed(derive_seed(slot, a as u64));
            if let Some(assign) = problem.run(n_clusters, opts.max_iters, &mut rng) {
                let wcss = problem.wcss(&assign, n_clusters);
                // strict < keeps the lowest restart index on ties
                if best.as_ref().is_none_or(|(b, _)| wcss < *b) {
                    best = Some((wcss, assign));
                }
                break;
            }
        }
    }
    let (_, group_assign) = best.ok_or(Error::Infeasible {
        attempts,
        clusters: n_clusters,
    })?;
    let labels = problem.group_of.iter().map(|&g| group_assign[g]).collect();
    Labels::new(labels, n_clusters)
}

/// Backtracks allowed in the mass-ordered pass before switching order.
const BACKTRACK_BUDGET: usize = 1_000;
/// Search nodes allowed in the saturation-ordered fallback.
const FALLBACK_BUDGET: usize = 1_000_000;

struct Problem<'a, T: Real> {
    points: &'a DMatrix<T>,
    group_of: Vec<usize>,
    members: Vec<Vec<usize>>,
    mass: Vec<T>,
    /// Group means, one row per group.
    centers: DMatrix<T>,
    cannot: Vec<Vec<usize>>,
    order: Vec<usize>,
}

fn sq_dist<T: Real>(a: &DMatrix<T>, ra: usize, b: &DMatrix<T>, rb: usize) -> T {
    let mut s = T::zero();
    for k in 0..a.ncols() {
        let d = a[(ra, k)] - b[(rb, k)];
        s += d * d;
    }
    s
}

impl<'a, T: Real> Problem<'a, T> {
    fn new(points: &'a DMatrix<T>, cs: &ConstraintSet) -> Self {
        let group_of = cs.chunklets();
        let n_groups = group_of.iter().copied().max().map_or(0, |m| m + 1);
        let mut members = vec![Vec::new(); n_groups];
        for (p, &g) in group_of.iter().enumerate() {
            members[g].push(p);
        }
        let dim = points.ncols();
        let mut centers = DMatrix::zeros(n_groups, dim);
        for (g, m) in members.iter().enumerate() {
            for &p in m {
                for k in 0..dim {
                    centers[(g, k)] += points[(p, k)];
                }
            }
            let size = T::lit(m.len() as f64);
            for k in 0..dim {
                centers[(g, k)] /= size;
            }
        }
        let mut cannot = vec![Vec::new(); n_groups];
        for c in cs.cannot_links() {
            let (a, b) = (group_of[c.i], group_of[c.j]);
            cannot[a].push(b);
            cannot[b].push(a);
        }
        for list in &mut cannot {
            list.sort_unstable();
            list.dedup();
        }
        let mut order: Vec<usize> = (0..n_groups).collect();
        order.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()).then(a.cmp(&b)));
        let mass = members.iter().map(|m| T::lit(m.len() as f64)).collect();
        Self {
            points,
            group_of,
            members,
            mass,
            centers,
            cannot,
            order,
        }
    }

    fn n_groups(&self) -> usize {
        self.members.len()
    }

    /// Mass-weighted k-means++ over group means.
    fn seed_centroids(&self, k: usize, rng: &mut impl Rng) -> DMatrix<T> {
        let g = self.n_groups();
        let mut chosen = DMatrix::zeros(k, self.centers.ncols());
        let mut d2 = vec![T::max_value().unwrap(); g];
        let total_mass: f64 = self.mass.iter().map(|m| m.as_f64()).sum();
        let pick = |weights: &[f64], total: f64, rng: &mut dyn rand::RngCore| -> usize {
            let mut t = rng.random::<f64>() * total;
            for (i, &w) in weights.iter().enumerate() {
                if t < w {
                    return i;
                }
                t -= w;
            }
            weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
        };
        let masses: Vec<f64> = self.mass.iter().map(|m| m.as_f64()).collect();
        let first = pick(&masses, total_mass, rng);
        chosen.row_mut(0).copy_from(&self.centers.row(first));
        for c in 1..k {
            for (i, d) in d2.iter_mut().enumerate() {
                *d = d.min(sq_dist(&self.centers, i, &chosen, c - 1));
            }
            let weights: Vec<f64> = d2
                .iter()
                .zip(&masses)
                .map(|(d, m)| d.as_f64() * m)
                .collect();
            let total: f64 = weights.iter().sum();
            let next = if total > 0.0 {
                pick(&weights, total, rng)
            } else {
                pick(&masses, total_mass, rng)
            };
            chosen.row_mut(c).copy_from(&self.centers.row(next));
        }
        chosen
    }

    /// Nearest admissible cluster for each group in `order`. A group with
    /// no admissible cluster sends the search back to the latest
    /// cannot-linked group that still has an untried cluster; groups free
    /// of cannot-links only ever take their nearest. After
    /// [`BACKTRACK_BUDGET`] backtracks the search restarts in saturation
    /// order (see [`Self::saturation_search`]). Returns `false` when no
    /// feasible assignment was found.
    fn assign(&self, centroids: &DMatrix<T>, out: &mut [usize]) -> bool {
        let k = centroids.nrows();
        out.fill(usize::MAX);
        let mut ranked: Vec<(T, usize)> = Vec::with_capacity(k);
        let ranks: Vec<Vec<usize>> = (0..self.n_groups())
            .map(|g| {
                ranked.clear();
                ranked.extend((0..k).map(|c| (sq_dist(&self.centers, g, centroids, c), c)));
                ranked.sort_by(|a, b| {
                    a.0.partial_cmp(&b.0)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.1.cmp(&b.1))
                });
                ranked.iter().map(|&(_, c)| c).collect()
            })
            .collect();

        let n = self.order.len();
        let mut next_try = vec![0usize; n];
        let mut pos = 0;
        let mut backtracks = 0;
        while pos < n {
            let g = self.order[pos];
            let cannot = &self.cannot[g];
            while next_try[pos] < k {
                let c = ranks[g][next_try[pos]];
                next_try[pos] += 1;
                if cannot.iter().all(|&h| out[h] != c) {
                    out[g] = c;
                    break;
                }
            }
            if out[g] != usize::MAX {
                if cannot.is_empty() {
                    next_try[pos] = k;
                }
                pos += 1;
                continue;
            }
            backtracks += 1;
            if backtracks > BACKTRACK_BUDGET {
                return self.saturation_assign(&ranks, out);
            }
            next_try[pos] = 0;
            loop {
                if pos == 0 {
                    return false;
                }
                pos -= 1;
                out[self.order[pos]] = usize::MAX;
                if next_try[pos] < k {
                    break;
                }
                next_try[pos] = 0;
            }
        }
        true
    }

    fn saturation_assign(&self, ranks: &[Vec<usize>], out: &mut [usize]) -> bool {
        out.fill(usize::MAX);
        let mut budget = FALLBACK_BUDGET;
        if !self.saturation_search(ranks, out, &mut budget) {
            return false;
        }
        for (g, slot) in out.iter_mut().enumerate() {
            if *slot == usize::MAX {
                *slot = ranks[g][0];
            }
        }
        true
    }

    /// Backtracking over cannot-linked groups, always extending the one
    /// with the fewest admissible clusters (ties by mass, then index) and
    /// trying its clusters nearest first.
    fn saturation_search(
        &self,
        ranks: &[Vec<usize>],
        out: &mut [usize],
        budget: &mut usize,
    ) -> bool {
        let admissible =
            |g: usize, c: usize, out: &[usize]| self.cannot[g].iter().all(|&h| out[h] != c);
        let mut pick: Option<(usize, usize)> = None;
        for &g in &self.order {
            if self.cannot[g].is_empty() || out[g] != usize::MAX {
                continue;
            }
            let free = ranks[g].iter().filter(|&&c| admissible(g, c, out)).count();
            // `order` is by decreasing mass, so the first minimum wins ties
            if pick.is_none_or(|(_, f)| free < f) {
                pick = Some((g, free));
            }
        }
        let Some((g, free)) = pick else {
            return true;
        };
        if free == 0 {
            return false;
        }
        for &c in &ranks[g] {
            if !admissible(g, c, out) {
                continue;
            }
            if *budget == 0 {
                break;
            }
            *budget -= 1;
            out[g] = c;
            if self.saturation_search(ranks, out, budget) {
                return true;
            }
        }
        out[g] = usize::MAX;
        false
    }

    fn update(&self, assign: &[usize], centroids: &mut DMatrix<T>) -> bool {
        let k = centroids.nrows();
        let dim = centroids.ncols();
        let mut sums = DMatrix::<T>::zeros(k, dim);
        let mut mass = vec![T::zero(); k];
        for (g, &c) in assign.iter().enumerate() {
            mass[c] += self.mass[g];
            for d in 0..dim {
                sums[(c, d)] += self.mass[g] * self.centers[(g, d)];
            }
        }
        let mut relocated = false;
        let mut taken = vec![false; self.n_groups()];
        for c in 0..k {
            if mass[c] > T::zero() {
                for d in 0..dim {
                    centroids[(c, d)] = sums[(c, d)] / mass[c];
                }
            }
        }
        for c in 0..k {
            if mass[c] == T::zero() {
                // move an empty cluster onto the costliest group
                let far = (0..self.n_groups())
                    .filter(|&g| !taken[g])
                    .map(|g| {
                        (
                            self.mass[g] * sq_dist(&self.centers, g, centroids, assign[g]),
                            g,
                        )
                    })
                    .fold(None::<(T, usize)>, |acc, cur| match acc {
                        Some(a) if a.0 >= cur.0 => Some(a),
                        _ => Some(cur),
                    });
                if let Some((_, g)) = far {
                    taken[g] = true;
                    centroids.row_mut(c).copy_from(&self.centers.row(g));
                    relocated = true;
                }
            }
        }
        relocated
    }

    fn run(&self, k: usize, max_iters: usize, rng: &mut impl Rng) -> Option<Vec<usize>> {
        let mut centroids = self.seed_centroids(k, rng);
        let mut assign = vec![usize::MAX; self.n_groups()];
        let mut next = assign.clone();
        for _ in 0..max_iters.max(1) {
            if !self.assign(&centroids, &mut next) {
                return None;
            }
            if next == assign {
                break;
            }
            std::mem::swap(&mut assign, &mut next);
            self.update(&assign, &mut centroids);
        }
        Some(assign)
    }

    /// Within-cluster sum of squares over the original points.
    fn wcss(&self, group_assign: &[usize], k: usize) -> T {
        let dim = self.points.ncols();
        let mut sums = DMatrix::<T>::zeros(k, dim);
        let mut count = vec![0usize; k];
        for (p, &g) in self.group_of.iter().enumerate() {
            let c = group_assign[g];
            count[c] += 1;
            for d in 0..dim {
                sums[(c, d)] += self.points[(p, d)];
            }
        }
        for c in 0..k {
            if count[c] > 0 {
                let m = T::lit(count[c] as f64);
                for d in 0..dim {
                    sums[(c, d)] /= m;
                }
            }
        }
        self.group_of
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (p, &g)| {
                acc + sq_dist(self.points, p, &sums, group_assign[g])
            })
    }
}

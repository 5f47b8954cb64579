use std::collections::HashSet;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Labels;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::{derive_seed, rng_from_seed, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    MustLink,
    CannotLink,
}

impl ConstraintKind {
    /// Ground-truth structure value: 0 for must-link, 1 for cannot-link.
    pub fn structure_value(self) -> u8 {
        match self {
            ConstraintKind::MustLink => 0,
            ConstraintKind::CannotLink => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ConstraintKind::MustLink => "ML",
            ConstraintKind::CannotLink => "CL",
        }
    }
}

/// One unordered pair, stored with `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint {
    pub i: usize,
    pub j: usize,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn must_link(a: usize, b: usize) -> Self {
        Self {
            i: a.min(b),
            j: a.max(b),
            kind: ConstraintKind::MustLink,
        }
    }

    pub fn cannot_link(a: usize, b: usize) -> Self {
        Self {
            i: a.min(b),
            j: a.max(b),
            kind: ConstraintKind::CannotLink,
        }
    }

    /// Whether a labeling agrees with this constraint.
    pub fn satisfied_by(&self, labels: &Labels) -> bool {
        let same = labels.get(self.i) == labels.get(self.j);
        match self.kind {
            ConstraintKind::MustLink => same,
            ConstraintKind::CannotLink => !same,
        }
    }
}

pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}

/// Validated set of pairwise must-link / cannot-link constraints over `N`
/// points.
///
/// The observed index set counts ordered entries: each stored pair `(i, j)`
/// contributes both `(i, j)` and `(j, i)`, see [`ConstraintSet::omega_size`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    n_points: usize,
    pairs: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn empty(n_points: usize) -> Self {
        Self {
            n_points,
            pairs: Vec::new(),
        }
    }

    /// Validates indices, duplicates and must-link/cannot-link consistency.
    pub fn new(n_points: usize, pairs: impl IntoIterator<Item = Constraint>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for c in pairs {
            let (i, j) = (c.i.min(c.j), c.i.max(c.j));
            if i == j {
                return Err(Error::InvalidConstraints(format!("self-pair ({i}, {i})")));
            }
            if j >= n_points {
                return Err(Error::InvalidConstraints(format!(
                    "pair ({i}, {j}) out of range for {n_points} points"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::InvalidConstraints(format!(
                    "duplicate pair ({i}, {j})"
                )));
            }
            out.push(Constraint { i, j, kind: c.kind });
        }
        let set = Self {
            n_points,
            pairs: out,
        };
        set.check_consistency()?;
        Ok(set)
    }

    fn check_consistency(&self) -> Result<()> {
        let mut sets = DisjointSets::new(self.n_points);
        for c in self.must_links() {
            sets.union(c.i, c.j);
        }
        for c in self.cannot_links() {
            if sets.find(c.i) == sets.find(c.j) {
                return Err(Error::InconsistentConstraints(c.i, c.j));
            }
        }
        Ok(())
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Number of unordered pairs.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `|Ω|` as a count of ordered entries (twice the pair count).
    pub fn omega_size(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn pairs(&self) -> &[Constraint] {
        &self.pairs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Constraint> {
        self.pairs.iter()
    }

    pub fn must_links(&self) -> impl Iterator<Item = &Constraint> {
        self.pairs
            .iter()
            .filter(|c| c.kind == ConstraintKind::MustLink)
    }

    pub fn cannot_links(&self) -> impl Iterator<Item = &Constraint> {
        self.pairs
            .iter()
            .filter(|c| c.kind == ConstraintKind::CannotLink)
    }

    /// Must-link transitive closure: component id per point, ids dense and
    /// ordered by smallest member.
    pub fn chunklets(&self) -> Vec<usize> {
        let mut sets = DisjointSets::new(self.n_points);
        for c in self.must_links() {
            sets.union(c.i, c.j);
        }
        let mut id_of_root = vec![usize::MAX; self.n_points];
        let mut next = 0;
        (0..self.n_points)
            .map(|p| {
                let r = sets.find(p);
                if id_of_root[r] == usize::MAX {
                    id_of_root[r] = next;
                    next += 1;
                }
                id_of_root[r]
            })
            .collect()
    }

    /// Number of constraints a labeling violates.
    pub fn violations(&self, labels: &Labels) -> usize {
        self.pairs
            .iter()
            .filter(|c| !c.satisfied_by(labels))
            .count()
    }

    /// Applies a point permutation: point `perm[k]` of `self` becomes point `k`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut inverse = vec![0; perm.len()];
        for (k, &p) in perm.iter().enumerate() {
            inverse[p] = k;
        }
        Self::new(
            self.n_points,
            self.pairs.iter().map(|c| {
                let (a, b) = (inverse[c.i], inverse[c.j]);
                Constraint {
                    i: a.min(b),
                    j: a.max(b),
                    kind: c.kind,
                }
            }),
        )
    }
}

/// Pairwise weights applied to the coefficient magnitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix<T: Real> {
    values: DMatrix<T>,
}

impl<T: Real> WeightMatrix<T> {
    pub fn ones(n: usize) -> Self {
        Self {
            values: DMatrix::from_element(n, n, T::one()),
        }
    }

    pub fn values(&self) -> &DMatrix<T> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<T> {
        self.values
    }
}

/// `e⁻¹` on must-link pairs, `e` on cannot-link pairs, `1` elsewhere.
pub fn build_weight_matrix<T: Real>(cs: &ConstraintSet) -> WeightMatrix<T> {
    build_weight_matrix_scaled(cs, T::one())
}

/// As [`build_weight_matrix`], with cannot-link weights multiplied by
/// `cannot_link_factor`. A large factor approximates a hard exclusion.
pub fn build_weight_matrix_scaled<T: Real>(
    cs: &ConstraintSet,
    cannot_link_factor: T,
) -> WeightMatrix<T> {
    let mut w = WeightMatrix::ones(cs.n_points());
    let must = T::lit((-1.0f64).exp());
    let cannot = T::lit(1.0f64.exp()) * cannot_link_factor;
    for c in cs.iter() {
        let v = match c.kind {
            ConstraintKind::MustLink => must,
            ConstraintKind::CannotLink => cannot,
        };
        w.values[(c.i, c.j)] = v;
        w.values[(c.j, c.i)] = v;
    }
    w
}

fn unordered_pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Pair index `k` in row-major order over `{(i, j) : i < j}`.
fn decode_pair(n: usize, mut k: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
        i += 1;
    }
}

fn check_proportion(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!(
            "proportion p = {p} outside [0, 1]"
        )));
    }
    Ok(())
}

fn labeled(truth: &Labels, i: usize, j: usize) -> Constraint {
    if truth.get(i) == truth.get(j) {
        Constraint::must_link(i, j)
    } else {
        Constraint::cannot_link(i, j)
    }
}

/// Samples `⌊p·N(N−1)/2⌋` distinct unordered pairs uniformly without
/// replacement and labels each from the ground truth.
pub fn sample_side_information(truth: &Labels, p: f64, seed: u64) -> Result<ConstraintSet> {
    check_proportion(p)?;
    let n = truth.len();
    let total = unordered_pair_count(n);
    let count = ((p * total as f64) + 1e-9).floor().min(total as f64) as usize;
    let mut rng = rng_from_seed(derive_seed(seed, stream::SAMPLING));
    let mut picked = rand::seq::index::sample(&mut rng, total, count).into_vec();
    picked.sort_unstable();

    let mut pairs = Vec::with_capacity(count);
    // sorted indices: walk rows once instead of decoding each index
    let mut row = 0;
    let mut row_start = 0;
    for k in picked {
        while k >= row_start + (n - 1 - row) {
            row_start += n - 1 - row;
            row += 1;
        }
        let j = row + 1 + (k - row_start);
        debug_assert_eq!(decode_pair(n, k), (row, j));
        pairs.push(labeled(truth, row, j));
    }
    ConstraintSet::new(n, pairs)
}

/// Keeps every unordered pair independently with probability `p`.
pub fn sample_side_information_bernoulli(
    truth: &Labels,
    p: f64,
    seed: u64,
) -> Result<ConstraintSet> {
    check_proportion(p)?;
    let n = truth.len();
    let mut rng = rng_from_seed(derive_seed(seed, stream::SAMPLING ^ 0xb));
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                pairs.push(labeled(truth, i, j));
            }
        }
    }
    ConstraintSet::new(n, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn truth(n: usize, k: usize) -> Labels {
        Labels::new((0..n).map(|i| i % k).collect(), k).unwrap()
    }

    #[test]
    fn rejects_bad_pairs() {
        assert!(ConstraintSet::new(3, [Constraint::must_link(1, 1)]).is_err());
        assert!(ConstraintSet::new(3, [Constraint::must_link(1, 3)]).is_err());
        assert!(ConstraintSet::new(
            3,
            [Constraint::must_link(0, 1), Constraint::cannot_link(1, 0)]
        )
        .is_err());
    }

    #[test]
    fn rejects_inconsistent_closure() {
        let r = ConstraintSet::new(
            3,
            [
                Constraint::must_link(0, 1),
                Constraint::must_link(1, 2),
                Constraint::cannot_link(0, 2),
            ],
        );
        assert!(matches!(r, Err(Error::InconsistentConstraints(0, 2))));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn weights_follow_exponential_rule() {
        let cs = ConstraintSet::new(
            4,
            [Constraint::must_link(1, 2), Constraint::cannot_link(0, 3)],
        )
        .unwrap();
        let w = build_weight_matrix::<f64>(&cs);
        let v = w.values();
        assert!((v[(1, 2)] - 0.36788).abs() < 1e-5);
        assert_eq!(v[(1, 2)], v[(2, 1)]);
        assert_eq!(v[(1, 2)], (-1.0f64).exp());
        assert!((v[(0, 3)] - 2.71828).abs() < 1e-5);
        assert_eq!(v[(0, 3)], E);
        assert_eq!(v[(3, 0)], E);
        assert_eq!(v[(0, 1)], 1.0);
        assert_eq!(v[(2, 2)], 1.0);
        assert_eq!(v, &v.transpose());
    }

    #[test]
    fn empty_constraints_give_ones() {
        let w = build_weight_matrix::<f64>(&ConstraintSet::empty(5));
        assert!(w.values().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn sampling_counts() {
        let t = truth(103, 4);
        assert!(sample_side_information(&t, 0.0, 1).unwrap().is_empty());
        // floor(0.05 * 103 * 102 / 2) = floor(262.65)
        assert_eq!(sample_side_information(&t, 0.05, 1).unwrap().len(), 262);
        assert!(sample_side_information(&t, 1.5, 1).is_err());
    }

    #[test]
    fn full_sampling_matches_truth() {
        let t = truth(9, 3);
        let cs = sample_side_information(&t, 1.0, 5).unwrap();
        assert_eq!(cs.len(), 36);
        assert_eq!(cs.violations(&t), 0);
        for c in cs.iter() {
            assert_eq!(c.kind == ConstraintKind::MustLink, t.get(c.i) == t.get(c.j));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let t = truth(40, 3);
        let a = sample_side_information(&t, 0.1, 9).unwrap();
        let b = sample_side_information(&t, 0.1, 9).unwrap();
        let c = sample_side_information(&t, 0.1, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn decode_covers_all_pairs() {
        let n = 7;
        let pairs: Vec<_> = (0..unordered_pair_count(n))
            .map(|k| decode_pair(n, k))
            .collect();
        let mut expected = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                expected.push((i, j));
            }
        }
        assert_eq!(pairs, expected);
    }

    #[test]
    fn chunklets_merge_must_links() {
        let cs = ConstraintSet::new(
            5,
            [Constraint::must_link(3, 1), Constraint::must_link(4, 3)],
        )
        .unwrap();
        assert_eq!(cs.chunklets(), vec![0, 1, 2, 1, 1]);
    }
}

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataMatrix, Labels};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::seed::{derive_seed, rng_from_seed, stream};

/// Union-of-subspaces test bed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub ambient_dim: usize,
    pub n_subspaces: usize,
    pub subspace_dim: usize,
    pub points_per_subspace: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SyntheticData<T: Real> {
    pub data: DataMatrix<T>,
    pub labels: Labels,
    /// Orthonormal `D×d` basis of each subspace.
    pub bases: Vec<DMatrix<T>>,
}

/// Draws `n` random `d`-dimensional subspaces of `R^D` and `m` unit-norm
/// points on each, adds isotropic Gaussian noise and renormalizes. Points
/// are ordered subspace by subspace.
pub fn generate_union_of_subspaces<T: Real>(spec: &SyntheticSpec) -> Result<SyntheticData<T>> {
    let SyntheticSpec {
        ambient_dim: dim,
        n_subspaces: n,
        subspace_dim: d,
        points_per_subspace: m,
        noise_sigma,
        seed,
    } = *spec;
    if d == 0 || d >= dim {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension {d} must satisfy 0 < d < D = {dim}"
        )));
    }
    if n == 0 || m == 0 || n * m < 2 {
        return Err(Error::InvalidParameter(
            "need at least one subspace and two points overall".into(),
        ));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma {noise_sigma} must be finite and nonnegative"
        )));
    }

    let mut rng = rng_from_seed(derive_seed(seed, stream::SYNTHETIC));
    let mut gauss = |r: usize, c: usize| -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng))
    };

    let mut x = DMatrix::<f64>::zeros(dim, n * m);
    let mut bases = Vec::with_capacity(n);
    for s in 0..n {
        let basis = gauss(dim, d).qr().q();
        let coeffs = gauss(d, m);
        let mut pts = &basis * coeffs;
        for mut col in pts.column_iter_mut() {
            let norm = col.norm();
            col.unscale_mut(norm);
        }
        if noise_sigma > 0.0 {
            pts += gauss(dim, m) * noise_sigma;
        }
        x.columns_mut(s * m, m).copy_from(&pts);
        bases.push(basis.map(T::lit));
    }

    let data = DataMatrix::new(x.map(T::lit))?.normalize_columns()?;
    let labels = Labels::new((0..n * m).map(|k| k / m).collect(), n)?;
    Ok(SyntheticData {
        data,
        labels,
        bases,
    })
}

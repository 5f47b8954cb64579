//! ADMM for `min ‖C⊙W‖₁ + λ‖X − XC‖ s.t. diag(C) = 0`.
//!
//! Frobenius error: split `C` into `J = C`,
//!
//! ```text
//! J ← (λXᵀX + ρI)⁻¹ (λXᵀX + ρ(C − U))
//! C ← shrink(J + U, W/ρ), diag(C) = 0
//! U ← U + J − C
//! ```
//!
//! ℓ1 error: additionally split `E = X − XJ` with its own scaled dual, and
//! update `(C, E)` jointly by shrinkage after each `J` step.
//!
//! Stopping uses primal `‖J − C‖_F` and dual `ρ‖C − C_prev‖_F` residuals
//! against `N·tol_abs + tol_rel·scale`. With `adaptive_rho`, `ρ` is
//! rebalanced every few iterations during the first half of the budget
//! and held fixed afterwards; `XᵀX` is diagonalized once so a new `ρ`
//! only rescales eigenvalues.

use nalgebra::DMatrix;

use super::{objective, CoefficientMatrix, ErrorNorm, SolverOptions};
use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct SparseSolution<T: Real> {
    pub coefficients: CoefficientMatrix<T>,
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: T,
    pub dual_residual: T,
    pub objective: T,
}

#[inline]
fn shrink<T: Real>(v: T, t: T) -> T {
    if v.abs() <= t {
        T::zero()
    } else if v > T::zero() {
        v - t
    } else {
        v + t
    }
}

fn check_finite<T: Real>(m: &DMatrix<T>, iteration: usize) -> Result<()> {
    if m.iter().all(|v| v.is_finite_value()) {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration })
    }
}

fn inverse_spd<T: Real>(a: DMatrix<T>) -> Result<DMatrix<T>> {
    a.cholesky().map(|c| c.inverse()).ok_or(Error::Singular)
}

const BALANCE_EVERY: usize = 10;
const BALANCE_RATIO: f64 = 10.0;
const BALANCE_STEP: f64 = 2.0;

/// New `ρ` if the residuals are out of balance at this iteration.
fn rebalance<T: Real>(opts: &SolverOptions<T>, it: usize, rho: T, r: T, s: T) -> Option<T> {
    if !opts.adaptive_rho || !it.is_multiple_of(BALANCE_EVERY) || it > opts.max_iters / 2 {
        return None;
    }
    let ratio = T::lit(BALANCE_RATIO);
    if r > ratio * s {
        Some(rho * T::lit(BALANCE_STEP))
    } else if s > ratio * r {
        Some(rho / T::lit(BALANCE_STEP))
    } else {
        None
    }
}

/// `λA⁻¹G` and `ρA⁻¹` for `A = λG + ρI`, from `G = V diag(μ) Vᵀ`.
fn frobenius_operators<T: Real>(
    v: &DMatrix<T>,
    mu: &[T],
    lambda: T,
    rho: T,
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let mut vf = v.clone();
    let mut vs = v.clone();
    for (k, &m) in mu.iter().enumerate() {
        let d = lambda * m + rho;
        if !(d > T::zero()) {
            return Err(Error::Singular);
        }
        vf.column_mut(k).scale_mut(lambda * m / d);
        vs.column_mut(k).scale_mut(rho / d);
    }
    Ok((vf * v.transpose(), vs * v.transpose()))
}

/// `C ← shrink(J + U, W/ρ)` with zero diagonal.
fn shrink_coefficients<T: Real>(
    c: &mut DMatrix<T>,
    j: &DMatrix<T>,
    u: &DMatrix<T>,
    w: &DMatrix<T>,
    rho: T,
) {
    let n = c.nrows();
    for col in 0..n {
        for row in 0..n {
            c[(row, col)] = if row == col {
                T::zero()
            } else {
                shrink(j[(row, col)] + u[(row, col)], w[(row, col)] / rho)
            };
        }
    }
}

pub fn solve_weighted_sparse<T: Real>(
    x: &DataMatrix<T>,
    w: &DMatrix<T>,
    opts: &SolverOptions<T>,
) -> Result<SparseSolution<T>> {
    opts.validate()?;
    let n = x.n_samples();
    if w.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "weights are {}x{}, expected {n}x{n}",
            w.nrows(),
            w.ncols()
        )));
    }
    if let Some(bad) = w.iter().find(|v| !(**v >= T::zero())) {
        return Err(Error::InvalidParameter(format!(
            "weights must be nonnegative, found {bad}"
        )));
    }
    match opts.error_norm {
        ErrorNorm::Frobenius => solve_frobenius(x, w, opts),
        ErrorNorm::L1 => solve_l1(x, w, opts),
    }
}

fn solve_frobenius<T: Real>(
    x: &DataMatrix<T>,
    w: &DMatrix<T>,
    opts: &SolverOptions<T>,
) -> Result<SparseSolution<T>> {
    let n = x.n_samples();
    let (lambda, mut rho) = (opts.lambda, opts.rho);
    let eig = x.gram().symmetric_eigen();
    // G is PSD; clip rounding noise below zero
    let mu: Vec<T> = eig.eigenvalues.iter().map(|&m| m.max(T::zero())).collect();
    let v = eig.eigenvectors;
    // J = λA⁻¹G + ρA⁻¹(C − U)
    let (mut fixed, mut step) = frobenius_operators(&v, &mu, lambda, rho)?;

    let nf = T::lit(n as f64);
    let mut c = DMatrix::<T>::zeros(n, n);
    let mut c_prev = c.clone();
    let mut u = DMatrix::<T>::zeros(n, n);
    let mut j = DMatrix::<T>::zeros(n, n);
    let mut rhs = DMatrix::<T>::zeros(n, n);
    let (mut r_norm, mut s_norm) = (T::zero(), T::zero());
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        rhs.copy_from(&c);
        rhs -= &u;
        j.copy_from(&fixed);
        j.gemm(T::one(), &step, &rhs, T::one());

        std::mem::swap(&mut c, &mut c_prev);
        shrink_coefficients(&mut c, &j, &u, w, rho);

        u += &j;
        u -= &c;
        check_finite(&u, it)?;

        r_norm = (&j - &c).norm();
        s_norm = (&c - &c_prev).norm() * rho;
        let eps_pri = nf * opts.tol_abs + opts.tol_rel * j.norm().max(c.norm());
        let eps_dual = nf * opts.tol_abs + opts.tol_rel * rho * u.norm();
        if r_norm <= eps_pri && s_norm <= eps_dual {
            converged = true;
            break;
        }
        if let Some(new_rho) = rebalance(opts, it, rho, r_norm, s_norm) {
            u *= rho / new_rho;
            rho = new_rho;
            (fixed, step) = frobenius_operators(&v, &mu, lambda, rho)?;
        }
    }

    let obj = objective(x, &c, w, lambda, ErrorNorm::Frobenius);
    Ok(SparseSolution {
        coefficients: CoefficientMatrix::new(c)?,
        converged,
        iterations,
        primal_residual: r_norm,
        dual_residual: s_norm,
        objective: obj,
    })
}

fn solve_l1<T: Real>(
    x: &DataMatrix<T>,
    w: &DMatrix<T>,
    opts: &SolverOptions<T>,
) -> Result<SparseSolution<T>> {
    let xv = x.values();
    let (dim, n) = xv.shape();
    let (lambda, mut rho) = (opts.lambda, opts.rho);
    let gram = x.gram();

    let mut system = gram.clone();
    for i in 0..n {
        system[(i, i)] += T::one();
    }
    let inv = inverse_spd(system)?;

    let scale_pri = T::lit(((n * n + dim * n) as f64).sqrt());
    let mut c = DMatrix::<T>::zeros(n, n);
    let mut c_prev = c.clone();
    let mut e = DMatrix::<T>::zeros(dim, n);
    let mut e_prev = e.clone();
    let mut u_fit = DMatrix::<T>::zeros(dim, n);
    let mut u_eq = DMatrix::<T>::zeros(n, n);
    let (mut r_norm, mut s_norm) = (T::zero(), T::zero());
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        // (XᵀX + I)J = Xᵀ(X − E − U_fit) + C − U_eq
        let rhs = xv.tr_mul(&(xv - &e - &u_fit)) + &c - &u_eq;
        let j = &inv * rhs;
        let xj = xv * &j;

        std::mem::swap(&mut c, &mut c_prev);
        shrink_coefficients(&mut c, &j, &u_eq, w, rho);
        std::mem::swap(&mut e, &mut e_prev);
        let thresh = lambda / rho;
        for ((ev, xv), (xjv, uv)) in e.iter_mut().zip(xv.iter()).zip(xj.iter().zip(u_fit.iter())) {
            *ev = shrink(*xv - *xjv - *uv, thresh);
        }

        let fit_res = &xj + &e - xv;
        let eq_res = &j - &c;
        u_fit += &fit_res;
        u_eq += &eq_res;
        check_finite(&u_eq, it)?;
        check_finite(&u_fit, it)?;

        r_norm = (fit_res.norm_squared() + eq_res.norm_squared()).sqrt();
        s_norm = rho * ((&c - &c_prev).norm_squared() + (&e - &e_prev).norm_squared()).sqrt();
        let eps_pri =
            scale_pri * opts.tol_abs + opts.tol_rel * (j.norm().max(c.norm()).max(xv.norm()));
        let eps_dual = scale_pri * opts.tol_abs
            + opts.tol_rel * rho * (u_fit.norm_squared() + u_eq.norm_squared()).sqrt();
        if r_norm <= eps_pri && s_norm <= eps_dual {
            converged = true;
            break;
        }
        if let Some(new_rho) = rebalance(opts, it, rho, r_norm, s_norm) {
            let k = rho / new_rho;
            u_fit *= k;
            u_eq *= k;
            rho = new_rho;
        }
    }

    let obj = objective(x, &c, w, lambda, ErrorNorm::L1);
    Ok(SparseSolution {
        coefficients: CoefficientMatrix::new(c)?,
        converged,
        iterations,
        primal_residual: r_norm,
        dual_residual: s_norm,
        objective: obj,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn twin_columns() -> DataMatrix<f64> {
        let s = 0.5f64.sqrt();
        DataMatrix::new(dmatrix![s, s; s, s]).unwrap()
    }

    #[test]
    fn twin_columns_closed_form() {
        // min |c| + (λ/2)(1 − c)²  ⇒  c = 1 − 1/λ for λ > 1
        for &lambda in &[1.5, 2.0, 5.0, 20.0] {
            let mut o = SolverOptions::new(lambda);
            o.tol_abs = 1e-12;
            o.tol_rel = 1e-12;
            o.max_iters = 20_000;
            let sol = solve_weighted_sparse(&twin_columns(), &DMatrix::from_element(2, 2, 1.0), &o)
                .unwrap();
            let c = sol.coefficients.values();
            assert!(
                (c[(0, 1)] - (1.0 - 1.0 / lambda)).abs() < 1e-6,
                "{lambda}: {c}"
            );
            assert!((c[(1, 0)] - (1.0 - 1.0 / lambda)).abs() < 1e-6);
            assert_eq!(sol.coefficients.max_abs_diagonal(), 0.0);
        }
    }

    #[test]
    fn huge_weights_zero_everything() {
        let x = DataMatrix::new(dmatrix![1.0, 0.6, 0.0; 0.0, 0.8, 1.0]).unwrap();
        let w = DMatrix::from_element(3, 3, std::f64::consts::E * 1e6);
        let o = SolverOptions::new(10.0);
        let sol = solve_weighted_sparse(&x, &w, &o).unwrap();
        assert!(sol.coefficients.values().iter().all(|&v| v == 0.0));
        let base = 10.0 / 2.0 * x.values().norm_squared();
        assert!((sol.objective - base).abs() < 1e-12);
    }

    #[test]
    fn l1_twin_columns() {
        // min |c| + λ·2·(1/√2)|1 − c| ⇒ c = 1 whenever λ√2 > 1
        let mut o = SolverOptions::new(3.0);
        o.error_norm = ErrorNorm::L1;
        o.rho = 10.0;
        o.tol_abs = 1e-10;
        o.tol_rel = 1e-10;
        o.max_iters = 50_000;
        let sol =
            solve_weighted_sparse(&twin_columns(), &DMatrix::from_element(2, 2, 1.0), &o).unwrap();
        assert!((sol.coefficients.values()[(0, 1)] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_weights() {
        let o = SolverOptions::new(3.0);
        assert!(
            solve_weighted_sparse(&twin_columns(), &DMatrix::from_element(3, 3, 1.0), &o).is_err()
        );
        assert!(
            solve_weighted_sparse(&twin_columns(), &DMatrix::from_element(2, 2, -1.0), &o).is_err()
        );
    }
}

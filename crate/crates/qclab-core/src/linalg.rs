//! Small dense linear algebra on top of nalgebra, plus a randomized SVD for
//! operators that are only available through matrix-vector products.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, QcError, Result};
use crate::C64;

/// A linear map ℂⁿ → ℂᵐ known through products with it and its adjoint.
pub trait LinearOperator {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn apply_adjoint(&self, y: &[C64]) -> Vec<C64>;
}

/// Singular values sorted descending.
pub fn singular_values(a: &DMatrix<C64>) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// σ_max / σ_min (infinite when rank deficient).
pub fn condition_number(a: &DMatrix<C64>) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Least-squares solution of `a x ≈ b` through the SVD, returning the
/// solution and the condition number of `a`.
pub fn least_squares(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<(DVector<C64>, f64)> {
    if a.nrows() != b.len() {
        return Err(invalid("least_squares: row count mismatch"));
    }
    if a.nrows() < a.ncols() {
        return Err(invalid("least_squares: system is underdetermined"));
    }
    let cond = condition_number(a);
    if !cond.is_finite() {
        return Err(QcError::IllConditioned(cond));
    }
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(b, 0.0)
        .map_err(|e| invalid(format!("svd solve failed: {e}")))?;
    Ok((x, cond))
}

/// Orthonormal basis of the column span (thin QR).
pub fn orthonormalize(y: DMatrix<C64>) -> DMatrix<C64> {
    y.qr().q()
}

/// Leading singular values of `op` by randomized range finding with a complex
/// Gaussian test matrix.
pub fn randomized_singular_values<R: Rng + ?Sized>(
    op: &dyn LinearOperator,
    k: usize,
    oversample: usize,
    power_iterations: usize,
    rng: &mut R,
) -> Vec<f64> {
    let n = op.input_dim();
    let m = op.output_dim();
    let l = (k + oversample).min(n).min(m);
    let mut gauss = || -> C64 {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    };
    let omega: Vec<Vec<C64>> = (0..l).map(|_| (0..n).map(|_| gauss()).collect()).collect();
    let apply_cols = |cols: &DMatrix<C64>, adjoint: bool| -> DMatrix<C64> {
        let rows = if adjoint { n } else { m };
        let mut out = DMatrix::<C64>::zeros(rows, cols.ncols());
        for c in 0..cols.ncols() {
            let v: Vec<C64> = cols.column(c).iter().copied().collect();
            let r = if adjoint { op.apply_adjoint(&v) } else { op.apply(&v) };
            out.column_mut(c).copy_from_slice(&r);
        }
        out
    };
    let mut om = DMatrix::<C64>::zeros(n, l);
    for (c, col) in omega.iter().enumerate() {
        om.column_mut(c).copy_from_slice(col);
    }
    let mut q = orthonormalize(apply_cols(&om, false));
    for _ in 0..power_iterations {
        let z = orthonormalize(apply_cols(&q, true));
        q = orthonormalize(apply_cols(&z, false));
    }
    // B = Q* A has the singular values of R where A* Q = Q₂ R.
    let z = apply_cols(&q, true);
    let r = z.qr().r();
    let mut s = singular_values(&r);
    s.truncate(k);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Diag(Vec<f64>);

    impl LinearOperator for Diag {
        fn input_dim(&self) -> usize {
            self.0.len()
        }
        fn output_dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[C64]) -> Vec<C64> {
            x.iter().zip(&self.0).map(|(a, d)| a * *d).collect()
        }
        fn apply_adjoint(&self, y: &[C64]) -> Vec<C64> {
            self.apply(y)
        }
    }

    #[test]
    fn randomized_recovers_diagonal() {
        let d: Vec<f64> = (0..200).map(|i| 0.8f64.powi(i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = randomized_singular_values(&Diag(d.clone()), 10, 10, 2, &mut rng);
        for i in 0..10 {
            assert!((s[i] - d[i]).abs() < 1e-8 * d[0], "{i}: {} vs {}", s[i], d[i]);
        }
    }

    #[test]
    fn least_squares_exact_fit() {
        let a = DMatrix::from_fn(6, 2, |i, j| C64::new((i + 1) as f64, 0.0).powu(j as u32));
        let b = DVector::from_fn(6, |i, _| C64::new(2.0, -1.0) + C64::new(0.0, 3.0) * (i + 1) as f64);
        let (x, cond) = least_squares(&a, &b).unwrap();
        assert!((x[0] - C64::new(2.0, -1.0)).norm() < 1e-12);
        assert!((x[1] - C64::new(0.0, 3.0)).norm() < 1e-12);
        assert!(cond > 1.0);
    }

    #[test]
    fn rank_deficient_is_ill_conditioned() {
        let a = DMatrix::from_element(4, 2, C64::new(1.0, 0.0));
        let b = DVector::from_element(4, C64::new(1.0, 0.0));
        let r = least_squares(&a, &b);
        match r {
            Err(QcError::IllConditioned(_)) => {}
            Ok((_, c)) => assert!(c > 1e12),
            Err(e) => panic!("{e}"),
        }
    }
}

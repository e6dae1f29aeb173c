use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// QR sweep limit handed to the dense solver (0 = unlimited).
    pub max_iterations: usize,
    /// Residual bound relative to the matrix norm bound.
    pub residual_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { max_iterations: 10_000, residual_tol: 1e-8 }
    }
}

/// Lowest eigenpairs in ascending order; columns of `vectors` are the states.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: CMat,
    pub max_residual: f64,
}

/// Dense Hermitian eigensolve returning the `k` lowest pairs.
///
/// Purely real input takes the real-symmetric path. Both paths are
/// deterministic; ties are ordered by the solver's original index.
pub fn eigensolve(h: &CMat, k: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::param("h", "matrix must be square"));
    }
    if k > n {
        return Err(Error::TooFewLevels { requested: k, available: n });
    }
    if k == 0 {
        return Ok(EigenPairs { values: vec![], vectors: CMat::zeros(n, 0), max_residual: 0.0 });
    }
    let scale = norm_bound(h).max(f64::MIN_POSITIVE);
    let is_real = h.iter().all(|z| z.im == 0.0);

    let (values, vectors) = if is_real {
        let real = h.map(|z| z.re);
        let eig = SymmetricEigen::try_new(real, f64::EPSILON, opts.max_iterations)
            .ok_or(Error::EigenNotConverged { residual: f64::NAN })?;
        (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors.map(|x| C64::new(x, 0.0)))
    } else {
        let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, opts.max_iterations)
            .ok_or(Error::EigenNotConverged { residual: f64::NAN })?;
        (eig.eigenvalues.as_slice().to_vec(), eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order.truncate(k);

    let vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let vecs = CMat::from_fn(n, k, |r, c| vectors[(r, order[c])]);

    let mut worst = 0.0_f64;
    for (c, &e) in vals.iter().enumerate() {
        let v = vecs.column(c);
        let r = (h * v - v * C64::new(e, 0.0)).norm();
        worst = worst.max(r);
    }
    if worst > opts.residual_tol * scale {
        return Err(Error::EigenNotConverged { residual: worst });
    }
    Ok(EigenPairs { values: vals, vectors: vecs, max_residual: worst })
}

/// Real-symmetric variant used by the symmetry-reduced circuit solver.
pub(crate) fn eigensolve_real(h: DMatrix<f64>, opts: &EigenOptions) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    let scale = (0..n)
        .map(|i| h.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(f64::MIN_POSITIVE, f64::max);
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, opts.max_iterations)
        .ok_or(Error::EigenNotConverged { residual: f64::NAN })?;
    let mut order: Vec<usize> = (0..n).collect();
    let ev = &eig.eigenvalues;
    order.sort_by(|&a, &b| ev[a].total_cmp(&ev[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| ev[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let resid = (&h * &vectors - &vectors * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(values.clone())))
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if resid > opts.residual_tol * scale {
        return Err(Error::EigenNotConverged { residual: resid });
    }
    Ok((values, vectors))
}

fn norm_bound(h: &CMat) -> f64 {
    (0..h.nrows())
        .map(|i| h.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix_lowest_two() {
        let h = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let e = eigensolve(&h, 2, &EigenOptions::default()).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0]);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_hermitian_is_orthonormal() {
        let h = CMat::from_fn(6, 6, |i, j| {
            let (a, b) = (i as f64, j as f64);
            if i == j {
                C64::new(a * a, 0.0)
            } else {
                C64::new(0.3 / (1.0 + (a - b).abs()), 0.1 * (a - b))
            }
        });
        let e = eigensolve(&h, 6, &EigenOptions::default()).unwrap();
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!((gram - CMat::identity(6, 6)).norm() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn too_many_levels_rejected() {
        let h = CMat::identity(2, 2);
        assert!(matches!(
            eigensolve(&h, 3, &EigenOptions::default()),
            Err(Error::TooFewLevels { .. })
        ));
    }
}

use nalgebra::{DMatrix, DVector};

/// How small singular values are treated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Regularization {
    /// Pseudo-inverse, dropping singular values below `rcond·σ_max` when the
    /// condition number exceeds `condition_limit`.
    Truncation { rcond: f64, condition_limit: f64 },
    /// Minimizes `‖Ax − b‖² + λ σ_max² ‖x‖²` in column-scaled coordinates.
    Tikhonov { lambda: f64 },
}

#[derive(Debug, Clone)]
pub(crate) struct LeastSquaresFit {
    pub solution: DVector<f64>,
    pub condition: f64,
    /// Relative cutoff or penalty actually applied (0 when none).
    pub regularization: f64,
    pub truncated: bool,
}

/// Column-scaled SVD least squares.
pub(crate) fn solve_least_squares(mut a: DMatrix<f64>, b: &DVector<f64>, mode: Regularization) -> LeastSquaresFit {
    let scales: Vec<f64> = a
        .column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).unscale_mut(*s);
    }
    let svd = a.svd(true, true);
    let sigma = &svd.singular_values;
    let smax = sigma.max();
    let smin = sigma.min();
    // Singular values below machine precision are indistinguishable from zero.
    let condition = smax / smin.max(f64::EPSILON * smax);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let vt = svd.v_t.as_ref().expect("right singular vectors requested");
    let utb = u.transpose() * b;
    let (filter, regularization, truncated): (Box<dyn Fn(f64) -> f64>, f64, bool) = match mode {
        Regularization::Truncation { rcond, condition_limit } => {
            if condition > condition_limit {
                let cut = rcond * smax;
                (Box::new(move |s| if s > cut { 1.0 / s } else { 0.0 }), rcond, true)
            } else {
                (Box::new(|s| if s > 0.0 { 1.0 / s } else { 0.0 }), 0.0, false)
            }
        }
        Regularization::Tikhonov { lambda } => {
            let pen = lambda * smax * smax;
            (Box::new(move |s| if s > 0.0 { s / (s * s + pen) } else { 0.0 }), lambda, false)
        }
    };
    let mut coeffs = DVector::zeros(sigma.len());
    for i in 0..sigma.len() {
        coeffs[i] = filter(sigma[i]) * utb[i];
    }
    let mut solution = vt.transpose() * coeffs;
    for (j, s) in scales.iter().enumerate() {
        solution[j] /= s;
    }
    LeastSquaresFit { solution, condition, regularization, truncated }
}

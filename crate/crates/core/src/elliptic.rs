//! Inverse elliptic operators with homogeneous Neumann conditions.
//!
//! All three solves are symmetric positive definite (the Poisson solve on the
//! mean-zero subspace) and use Jacobi-preconditioned conjugate gradients with
//! matrix-free stencil application. Convergence is declared on the true
//! residual `‖b - Ax‖₂ ≤ tol · ‖b‖₂`, recomputed before acceptance.

use crate::grid::{laplacian_into, Field, Grid};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {relative_residual:.3e})")]
    NotConverged { iterations: usize, relative_residual: f64 },
    #[error("Helmholtz shift must be positive, got {0}")]
    NonPositiveShift(f64),
    #[error("weight must be strictly positive, found {value} at cell {index}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("right-hand side is incompatible with the Neumann problem: mean {mean:.3e}")]
    Incompatible { mean: f64 },
    #[error("right-hand side is not finite")]
    NonFinite,
    #[error("solver options invalid: {0}")]
    BadOptions(String),
    #[error("fields live on different grids")]
    GridMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticSolveOptions {
    pub rel_tolerance: f64,
    /// `None` means `10 ·` total cell count.
    pub max_iterations: Option<usize>,
}

impl Default for EllipticSolveOptions {
    fn default() -> Self {
        Self { rel_tolerance: 1e-10, max_iterations: None }
    }
}

impl EllipticSolveOptions {
    pub fn with_tolerance(rel_tolerance: f64) -> Self {
        Self { rel_tolerance, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance <= 1e-2) {
            return Err(SolveError::BadOptions(format!(
                "rel_tolerance must lie in (0, 1e-2], got {}",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(SolveError::BadOptions("max_iterations must be >= 1".into()));
        }
        Ok(())
    }

    fn iteration_cap(&self, cells: usize) -> usize {
        self.max_iterations.unwrap_or(10 * cells)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_mean_zero(x: &mut [f64]) {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= m);
}

/// Jacobi-preconditioned CG for `A x = b`. `x` holds the initial guess on
/// entry. With `mean_zero` set, residuals, search directions and iterates are
/// kept in the mean-zero subspace (on a uniform grid the cell-sum is the
/// integral up to a constant factor).
/// Preconditioned CG on the unit-norm rescaled system, so right-hand sides
/// near the bottom of the floating-point range do not underflow inner
/// products.
#[allow(clippy::too_many_arguments)]
fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    work: &mut Vec<f64>,
    tol: f64,
    max_iter: usize,
    mean_zero: bool,
) -> Result<usize, SolveError> {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    x.iter_mut().for_each(|v| *v /= scale);
    let result = pcg_scaled(apply, diag, b, scale, x, work, tol, max_iter, mean_zero);
    x.iter_mut().for_each(|v| *v *= scale);
    result
}

/// CG on `A x = b / scale`; the scaled right-hand side is formed on the fly.
#[allow(clippy::too_many_arguments)]
fn pcg_scaled(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    scale: f64,
    x: &mut [f64],
    work: &mut Vec<f64>,
    tol: f64,
    max_iter: usize,
    mean_zero: bool,
) -> Result<usize, SolveError> {
    let n = b.len();
    let b_norm = b.iter().map(|v| (v / scale) * (v / scale)).sum::<f64>().sqrt();
    let target = tol * b_norm;
    work.clear();
    work.resize(4 * n, 0.0);
    let (r, rest) = work.split_at_mut(n);
    let (z, rest) = rest.split_at_mut(n);
    let (p, ap) = rest.split_at_mut(n);
    let mut iterations = 0;
    // Restart loop: leaves when the recomputed true residual meets the target.
    loop {
        apply(x, ap);
        for i in 0..n {
            r[i] = b[i] / scale - ap[i];
        }
        if mean_zero {
            project_mean_zero(r);
        }
        let true_res = dot(r, r).sqrt();
        if true_res <= target {
            return Ok(iterations);
        }
        if iterations >= max_iter {
            return Err(SolveError::NotConverged {
                iterations,
                relative_residual: true_res / b_norm,
            });
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        if mean_zero {
            project_mean_zero(z);
        }
        p.copy_from_slice(z);
        let mut rz = dot(r, z);
        let restart_at = iterations;
        while iterations < max_iter {
            apply(p, ap);
            let pap = dot(p, ap);
            if pap <= 0.0 || !pap.is_finite() {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iterations += 1;
            if dot(r, r).sqrt() <= 0.5 * target {
                break;
            }
            for i in 0..n {
                z[i] = r[i] / diag[i];
            }
            if mean_zero {
                project_mean_zero(z);
            }
            let rz_new = dot(r, z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if mean_zero {
            project_mean_zero(x);
        }
        if iterations == restart_at {
            // No progress possible (breakdown); report the current residual.
            apply(x, ap);
            let res: f64 = b.iter().zip(ap.iter()).map(|(bi, ai)| (bi / scale - ai).powi(2)).sum::<f64>().sqrt();
            if res <= target {
                return Ok(iterations);
            }
            return Err(SolveError::NotConverged { iterations, relative_residual: res / b_norm });
        }
    }
}

/// Buffers reused across solves, so repeated small solves do not allocate.
#[derive(Debug, Clone, Default)]
pub(crate) struct CgScratch {
    diag: Vec<f64>,
    work: Vec<f64>,
}

/// Solves `σ p - Δp = rhs` for a strictly positive weight `σ`, starting from
/// `guess` when given.
pub(crate) fn weighted_helmholtz_raw(
    grid: &Grid,
    sigma: &[f64],
    rhs: &[f64],
    guess: Option<&[f64]>,
    opts: &EllipticSolveOptions,
) -> Result<Vec<f64>, SolveError> {
    let mut x = match guess {
        Some(g) => g.to_vec(),
        None => vec![0.0; rhs.len()],
    };
    weighted_helmholtz_into(grid, sigma, rhs, &mut x, opts, &mut CgScratch::default())?;
    Ok(x)
}

/// In-place form of [`weighted_helmholtz_raw`]: `x` holds the guess on entry
/// and the solution on success.
pub(crate) fn weighted_helmholtz_into(
    grid: &Grid,
    sigma: &[f64],
    rhs: &[f64],
    x: &mut [f64],
    opts: &EllipticSolveOptions,
    scratch: &mut CgScratch,
) -> Result<(), SolveError> {
    opts.validate()?;
    if let Some((index, &value)) = sigma.iter().enumerate().find(|(_, s)| !(**s > 0.0 && s.is_finite())) {
        return Err(SolveError::NonPositiveWeight { index, value });
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    let diag = &mut scratch.diag;
    grid.neg_laplacian_diagonal_into(diag);
    for (d, s) in diag.iter_mut().zip(sigma) {
        *d += s;
    }
    let apply = |x: &[f64], out: &mut [f64]| {
        laplacian_into(grid, x, out);
        for i in 0..x.len() {
            out[i] = sigma[i] * x[i] - out[i];
        }
    };
    pcg(apply, diag, rhs, x, &mut scratch.work, opts.rel_tolerance, opts.iteration_cap(grid.len()), false)?;
    Ok(())
}

/// Helmholtz resolvent `(-Δ + β)⁻¹ rhs`.
pub fn helmholtz_solve(rhs: &Field, beta: f64, opts: &EllipticSolveOptions) -> Result<Field, SolveError> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(SolveError::NonPositiveShift(beta));
    }
    let sigma = vec![beta; rhs.len()];
    let x = weighted_helmholtz_raw(rhs.grid(), &sigma, rhs.values(), None, opts)?;
    Ok(Field::from_raw(rhs.grid(), x))
}

/// Solves `σ p - Δp = rhs` with a cellwise positive weight `σ`.
pub fn weighted_helmholtz_solve(
    sigma: &Field,
    rhs: &Field,
    opts: &EllipticSolveOptions,
) -> Result<Field, SolveError> {
    if sigma.grid() != rhs.grid() {
        return Err(SolveError::GridMismatch);
    }
    let x = weighted_helmholtz_raw(rhs.grid(), sigma.values(), rhs.values(), None, opts)?;
    Ok(Field::from_raw(rhs.grid(), x))
}

/// Mean-zero solution of `-ΔU = rhs` for a mean-zero right-hand side.
pub fn poisson_meanzero_solve(rhs: &Field, opts: &EllipticSolveOptions) -> Result<Field, SolveError> {
    opts.validate()?;
    if !rhs.is_finite() {
        return Err(SolveError::NonFinite);
    }
    let n = rhs.len();
    let sup = rhs.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let m = rhs.values().iter().sum::<f64>() / n as f64;
    if m.abs() > 1e-10 * sup {
        return Err(SolveError::Incompatible { mean: m });
    }
    let mut b = rhs.values().to_vec();
    project_mean_zero(&mut b);
    let grid = rhs.grid();
    let mut diag = Vec::new();
    grid.neg_laplacian_diagonal_into(&mut diag);
    let apply = |x: &[f64], out: &mut [f64]| {
        laplacian_into(grid, x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    };
    let mut x = vec![0.0; n];
    pcg(apply, &diag, &b, &mut x, &mut Vec::new(), opts.rel_tolerance, opts.iteration_cap(n), true)?;
    project_mean_zero(&mut x);
    Ok(Field::from_raw(grid, x))
}

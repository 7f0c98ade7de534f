//! Structured cell-centered grids on axis-aligned boxes, scalar fields, the
//! finite-volume Neumann Laplacian, midpoint quadrature and Lebesgue norms.
//!
//! Storage is row-major: the cell `(i, j)` lives at flat index `i + nx * j`.
//! One-dimensional grids use `ny = 1`.

use thiserror::Error;

/// Smallest admissible number of cells along any axis.
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("expected {expected} per-axis values, got {got}")]
    AxisCount { expected: usize, got: usize },
    #[error("axis {axis}: need at least {MIN_CELLS} cells, got {cells}")]
    TooFewCells { axis: usize, cells: usize },
    #[error("axis {axis}: length must be positive and finite, got {length}")]
    BadLength { axis: usize, length: f64 },
    #[error("field has {got} values but the grid has {expected} cells")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field value at cell {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("norm exponent must be >= 1 or infinite, got {0}")]
    BadExponent(f64),
}

/// Uniform cell-centered grid on `[0, lx]` or `[0, lx] x [0, ly]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    lengths: [f64; 2],
    spacing: [f64; 2],
}

impl Grid {
    pub fn new(dim: usize, cells: &[usize], lengths: &[f64]) -> Result<Self, GridError> {
        if dim != 1 && dim != 2 {
            return Err(GridError::BadDimension(dim));
        }
        if cells.len() != dim {
            return Err(GridError::AxisCount { expected: dim, got: cells.len() });
        }
        if lengths.len() != dim {
            return Err(GridError::AxisCount { expected: dim, got: lengths.len() });
        }
        let mut c = [1usize; 2];
        let mut l = [1.0f64; 2];
        for axis in 0..dim {
            if cells[axis] < MIN_CELLS {
                return Err(GridError::TooFewCells { axis, cells: cells[axis] });
            }
            if !(lengths[axis] > 0.0 && lengths[axis].is_finite()) {
                return Err(GridError::BadLength { axis, length: lengths[axis] });
            }
            c[axis] = cells[axis];
            l[axis] = lengths[axis];
        }
        let spacing = [l[0] / c[0] as f64, l[1] / c[1] as f64];
        Ok(Self { dim, cells: c, lengths: l, spacing })
    }

    pub fn line(cells: usize, length: f64) -> Result<Self, GridError> {
        Self::new(1, &[cells], &[length])
    }

    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self, GridError> {
        Self::new(2, &[nx, ny], &[lx, ly])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.cells[0]
    }

    /// Cells along y; 1 for one-dimensional grids.
    pub fn ny(&self) -> usize {
        self.cells[1]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        self.lengths[..self.dim].iter().product()
    }

    /// Largest `h²` over the active axes.
    pub fn h_squared(&self) -> f64 {
        self.spacing[..self.dim].iter().map(|h| h * h).fold(0.0, f64::max)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.cells[0] * j
    }

    /// Cell-center coordinate `(i + 1/2) h` along `axis`.
    pub fn center(&self, axis: usize, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing[axis]
    }

    /// Cell-center coordinates `(x, y)` of flat index `k` (`y = 0` in 1D).
    pub fn center_of(&self, k: usize) -> (f64, f64) {
        let i = k % self.cells[0];
        let j = k / self.cells[0];
        let y = if self.dim == 2 { self.center(1, j) } else { 0.0 };
        (self.center(0, i), y)
    }

    /// Diagonal entries of the discrete `-Δ` (neighbor count over `h²`).
    pub(crate) fn neg_laplacian_diagonal_into(&self, diag: &mut Vec<f64>) {
        let [nx, ny] = self.cells;
        let ihx2 = 1.0 / (self.spacing[0] * self.spacing[0]);
        let ihy2 = 1.0 / (self.spacing[1] * self.spacing[1]);
        diag.clear();
        for j in 0..ny {
            for i in 0..nx {
                let mut d = 0.0;
                if i > 0 {
                    d += ihx2;
                }
                if i + 1 < nx {
                    d += ihx2;
                }
                if j > 0 {
                    d += ihy2;
                }
                if j + 1 < ny {
                    d += ihy2;
                }
                diag.push(d);
            }
        }
    }

    /// Visits every interior face once as `(left, right, h)` where `left`
    /// and `right` are the flat indices of the two adjacent cells and `h`
    /// the spacing normal to the face. Boundary faces carry zero flux and
    /// are skipped.
    pub fn for_each_face(&self, mut visit: impl FnMut(usize, usize, f64)) {
        let [nx, ny] = self.cells;
        for j in 0..ny {
            for i in 0..nx {
                let k = i + nx * j;
                if i + 1 < nx {
                    visit(k, k + 1, self.spacing[0]);
                }
                if j + 1 < ny {
                    visit(k, k + nx, self.spacing[1]);
                }
            }
        }
    }
}

/// `dst = Δ src` with mirror ghost cells (zero normal flux).
pub(crate) fn laplacian_into(grid: &Grid, src: &[f64], dst: &mut [f64]) {
    let [nx, ny] = grid.cells;
    let ihx2 = 1.0 / (grid.spacing[0] * grid.spacing[0]);
    let ihy2 = 1.0 / (grid.spacing[1] * grid.spacing[1]);
    for j in 0..ny {
        for i in 0..nx {
            let k = i + nx * j;
            let c = src[k];
            let mut acc = 0.0;
            if i > 0 {
                acc += (src[k - 1] - c) * ihx2;
            }
            if i + 1 < nx {
                acc += (src[k + 1] - c) * ihx2;
            }
            if j > 0 {
                acc += (src[k - nx] - c) * ihy2;
            }
            if j + 1 < ny {
                acc += (src[k + nx] - c) * ihy2;
            }
            dst[k] = acc;
        }
    }
}

/// Scalar values attached to the cells of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self { grid: *grid, values: vec![value; grid.len()] }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GridError::NonFinite { index, value });
        }
        Ok(Self { grid: *grid, values })
    }

    /// Samples `f(x, y)` at cell centers (`y = 0` in 1D).
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.center_of(k);
                f(x, y)
            })
            .collect();
        Self { grid: *grid, values }
    }

    /// Crate-internal constructor for values produced by trusted kernels.
    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid: *grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field::from_raw(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn add_scalar(&self, c: f64) -> Field {
        self.map(|v| v + c)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| v * c)
    }

    pub fn is_mirror_symmetric(&self, axis: usize, tol: f64) -> bool {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        for j in 0..ny {
            for i in 0..nx {
                let (mi, mj) = if axis == 0 { (nx - 1 - i, j) } else { (i, ny - 1 - j) };
                let a = self.values[self.grid.index(i, j)];
                let b = self.values[self.grid.index(mi, mj)];
                if (a - b).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Mirror image across the midline of `axis`.
    pub fn reflect(&self, axis: usize) -> Field {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let mut out = vec![0.0; self.len()];
        for j in 0..ny {
            for i in 0..nx {
                let (mi, mj) = if axis == 0 { (nx - 1 - i, j) } else { (i, ny - 1 - j) };
                out[self.grid.index(mi, mj)] = self.values[self.grid.index(i, j)];
            }
        }
        Field::from_raw(&self.grid, out)
    }
}

/// Second-order finite-volume Laplacian with homogeneous Neumann conditions.
pub fn laplacian_apply(f: &Field) -> Field {
    let mut out = vec![0.0; f.len()];
    laplacian_into(&f.grid, &f.values, &mut out);
    Field::from_raw(&f.grid, out)
}

/// Midpoint-rule integral over the domain.
pub fn integrate(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_volume()
}

pub fn mean(f: &Field) -> f64 {
    integrate(f) / f.grid.measure()
}

/// `(∫|f|^p)^(1/p)` for finite `p >= 1`, `max |f|` for `p = ∞`.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64, GridError> {
    if p.is_nan() || p < 1.0 {
        return Err(GridError::BadExponent(p));
    }
    let sup = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if p.is_infinite() || sup == 0.0 {
        return Ok(sup);
    }
    // Scale by the supremum so large exponents cannot overflow.
    let sum: f64 = f.values.iter().map(|v| (v.abs() / sup).powf(p)).sum();
    Ok(sup * (sum * f.grid.cell_volume()).powf(1.0 / p))
}

/// Discrete Dirichlet energy `Σ_faces (Δf / h)² · |cell|`, which equals
/// `-∫ f Δf` for the finite-volume Laplacian.
pub fn gradient_norm_squared(f: &Field) -> f64 {
    weighted_gradient_norm_squared(f, |_, _| 1.0)
}

/// `Σ_faces c(f_left, f_right) (Δf / h)² · |cell|` for a face coefficient `c`.
pub fn weighted_gradient_norm_squared(f: &Field, coeff: impl Fn(f64, f64) -> f64) -> f64 {
    let vol = f.grid.cell_volume();
    let v = &f.values;
    let mut acc = 0.0;
    f.grid.for_each_face(|a, b, h| {
        let d = (v[b] - v[a]) / h;
        acc += coeff(v[a], v[b]) * d * d;
    });
    acc * vol
}

//! Uniform 2D grids and the scalar/complex fields that live on them.
//!
//! Fields are stored row-major by x with y fastest, so a transverse y-slice
//! at fixed x is contiguous. Node (i_x, i_y) maps to index i_x·n_y + i_y.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniform 1D grid: n nodes at min + i·h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub min: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(min: f64, max: f64, h: f64) -> Result<Self> {
        let n = checked_node_count(min, max, h)?;
        Ok(Self { min, h, n })
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.h
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }
}

/// Uniform 2D tensor grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub n_x: usize,
    pub n_y: usize,
}

impl Grid2D {
    pub fn new(x_min: f64, x_max: f64, h_x: f64, y_min: f64, y_max: f64, h_y: f64) -> Result<Self> {
        let n_x = checked_node_count(x_min, x_max, h_x)?;
        let n_y = checked_node_count(y_min, y_max, h_y)?;
        Ok(Self { x_min, x_max, y_min, y_max, h_x, h_y, n_x, n_y })
    }

    /// Total node count.
    #[inline]
    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of node (i_x, i_y); y runs fastest.
    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.n_y + iy
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.h_x
    }

    #[inline]
    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.h_y
    }

    /// Index of the grid node nearest to coordinate x.
    pub fn nearest_ix(&self, x: f64) -> Result<usize> {
        if x < self.x_min || x > self.x_max {
            return Err(Error::Range(format!(
                "x = {x} outside [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        Ok(((x - self.x_min) / self.h_x).round() as usize)
    }

    /// Index of the grid node nearest to coordinate y.
    pub fn nearest_iy(&self, y: f64) -> Result<usize> {
        if y < self.y_min || y > self.y_max {
            return Err(Error::Range(format!(
                "y = {y} outside [{}, {}]",
                self.y_min, self.y_max
            )));
        }
        Ok(((y - self.y_min) / self.h_y).round() as usize)
    }

    /// The y-axis as a 1D grid (for transverse slices).
    pub fn y_axis(&self) -> Grid1D {
        Grid1D { min: self.y_min, h: self.h_y, n: self.n_y }
    }

    /// Same extents with both spacings scaled by `factor` (coarsening knob).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::Config(format!("mesh scale must be positive, got {factor}")));
        }
        Self::new(self.x_min, self.x_max, self.h_x * factor, self.y_min, self.y_max, self.h_y * factor)
    }
}

fn checked_node_count(min: f64, max: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !min.is_finite() || !max.is_finite() || max <= min {
        return Err(Error::Config(format!(
            "bad axis: min {min}, max {max}, spacing {h}"
        )));
    }
    let steps = (max - min) / h;
    let rounded = steps.round();
    if (steps - rounded).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "spacing {h} does not evenly divide [{min}, {max}]"
        )));
    }
    let n = rounded as usize + 1;
    if n < 3 {
        return Err(Error::Config(format!("axis needs at least 3 nodes, got {n}")));
    }
    Ok(n)
}

/// Real-valued field on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

/// Complex-valued field on a [`Grid2D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField2D {
    pub grid: Grid2D,
    pub values: Vec<Complex64>,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { values: vec![0.0; grid.len()], grid }
    }

    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.n_x {
            let x = grid.x(ix);
            for iy in 0..grid.n_y {
                values.push(f(x, grid.y(iy)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.idx(ix, iy)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        let i = self.grid.idx(ix, iy);
        self.values[i] = v;
    }

    /// Partial derivatives (∂/∂x, ∂/∂y): second-order central differences at
    /// interior nodes, second-order one-sided stencils on the boundary.
    pub fn gradient(&self) -> (ScalarField2D, ScalarField2D) {
        let (dx, dy) = gradient_impl(&self.grid, &self.values);
        (
            ScalarField2D { grid: self.grid, values: dx },
            ScalarField2D { grid: self.grid, values: dy },
        )
    }

    /// Bilinear interpolation; exact on nodes.
    pub fn sample_at(&self, x: f64, y: f64) -> Result<f64> {
        sample_impl(&self.grid, x, y, |i| self.values[i])
    }

    /// Profile over all grid x at fixed y (bilinear in y when off-node).
    pub fn centerline(&self, y_c: f64) -> Result<Vec<f64>> {
        (0..self.grid.n_x)
            .map(|ix| self.sample_at(self.grid.x(ix), y_c))
            .collect()
    }

    /// Discrete L² integral: ∬ f² dA with weight h_x·h_y.
    pub fn norm_sq(&self) -> f64 {
        let w = self.grid.h_x * self.grid.h_y;
        self.values.iter().map(|v| v * v).sum::<f64>() * w
    }
}

impl ComplexField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self { values: vec![Complex64::ZERO; grid.len()], grid }
    }

    pub fn from_real(field: &ScalarField2D) -> Self {
        Self {
            grid: field.grid,
            values: field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[self.grid.idx(ix, iy)]
    }

    pub fn gradient(&self) -> (ComplexField2D, ComplexField2D) {
        let (dx, dy) = gradient_impl(&self.grid, &self.values);
        (
            ComplexField2D { grid: self.grid, values: dx },
            ComplexField2D { grid: self.grid, values: dy },
        )
    }

    pub fn sample_at(&self, x: f64, y: f64) -> Result<Complex64> {
        sample_impl(&self.grid, x, y, |i| self.values[i])
    }

    pub fn centerline(&self, y_c: f64) -> Result<Vec<Complex64>> {
        (0..self.grid.n_x)
            .map(|ix| self.sample_at(self.grid.x(ix), y_c))
            .collect()
    }

    /// Density |ψ|² as a scalar field.
    pub fn density(&self) -> ScalarField2D {
        ScalarField2D {
            grid: self.grid,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Discrete norm ∬ |ψ|² dA with weight h_x·h_y.
    pub fn norm_sq(&self) -> f64 {
        let w = self.grid.h_x * self.grid.h_y;
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * w
    }
}

trait GradScalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
{
}
impl GradScalar for f64 {}
impl GradScalar for Complex64 {}

fn gradient_impl<T: GradScalar>(grid: &Grid2D, v: &[T]) -> (Vec<T>, Vec<T>) {
    let (nx, ny) = (grid.n_x, grid.n_y);
    let at = |ix: usize, iy: usize| v[ix * ny + iy];
    let mut dx = Vec::with_capacity(v.len());
    let mut dy = Vec::with_capacity(v.len());
    let rx = 1.0 / (2.0 * grid.h_x);
    let ry = 1.0 / (2.0 * grid.h_y);
    for ix in 0..nx {
        for iy in 0..ny {
            let gx = if ix == 0 {
                (at(1, iy) * 4.0 - at(2, iy) - at(0, iy) * 3.0) * rx
            } else if ix == nx - 1 {
                (at(nx - 1, iy) * 3.0 - at(nx - 2, iy) * 4.0 + at(nx - 3, iy)) * rx
            } else {
                (at(ix + 1, iy) - at(ix - 1, iy)) * rx
            };
            let gy = if iy == 0 {
                (at(ix, 1) * 4.0 - at(ix, 2) - at(ix, 0) * 3.0) * ry
            } else if iy == ny - 1 {
                (at(ix, ny - 1) * 3.0 - at(ix, ny - 2) * 4.0 + at(ix, ny - 3)) * ry
            } else {
                (at(ix, iy + 1) - at(ix, iy - 1)) * ry
            };
            dx.push(gx);
            dy.push(gy);
        }
    }
    (dx, dy)
}

fn sample_impl<T: GradScalar>(grid: &Grid2D, x: f64, y: f64, get: impl Fn(usize) -> T) -> Result<T> {
    if x < grid.x_min || x > grid.x_max || y < grid.y_min || y > grid.y_max {
        return Err(Error::Range(format!(
            "({x}, {y}) outside [{}, {}] x [{}, {}]",
            grid.x_min, grid.x_max, grid.y_min, grid.y_max
        )));
    }
    let fx = (x - grid.x_min) / grid.h_x;
    let fy = (y - grid.y_min) / grid.h_y;
    let ix = (fx.floor() as usize).min(grid.n_x - 2);
    let iy = (fy.floor() as usize).min(grid.n_y - 2);
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let v00 = get(grid.idx(ix, iy));
    let v01 = get(grid.idx(ix, iy + 1));
    let v10 = get(grid.idx(ix + 1, iy));
    let v11 = get(grid.idx(ix + 1, iy + 1));
    Ok(v00 * ((1.0 - tx) * (1.0 - ty))
        + v01 * ((1.0 - tx) * ty)
        + v10 * (tx * (1.0 - ty))
        + v11 * (tx * ty))
}

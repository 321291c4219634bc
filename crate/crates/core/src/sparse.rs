//! Sparse finite-difference Hamiltonians on 1D and 2D grids.
//!
//! H = −(ħ²/2m)∇² + V with the standard second-order central Laplacian and
//! Dirichlet walls one spacing outside the mesh, so every grid node is an
//! unknown. Rows are stored CSR with ascending column indices; symmetry is
//! bit-exact because mirrored entries are produced by the same expression.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Grid2D, ScalarField2D};
use crate::units::HBAR;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridProvenance {
    Line(Grid1D),
    Plane(Grid2D),
}

#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
    pub provenance: GridProvenance,
}

impl SparseHamiltonian {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Fill-reducing elimination order matched to the grid this matrix came
    /// from: geometric dissection for planes, the natural order for lines
    /// (banded already).
    pub fn solver_permutation(&self) -> Vec<u32> {
        match &self.provenance {
            GridProvenance::Plane(g) => crate::order::nested_dissection(g.n_x, g.n_y),
            GridProvenance::Line(_) => crate::order::natural(self.dim),
        }
    }

    /// y = Hx.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p] as usize];
            }
            y[i] = acc;
        }
    }

    /// Entry (i, j), zero when outside the stencil.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&(j as u32)) {
            Ok(p) => self.values[lo + p],
            Err(_) => 0.0,
        }
    }

    /// True when every stored entry has a bit-identical mirror.
    pub fn is_bit_symmetric(&self) -> bool {
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p] as usize;
                if self.entry(j, i).to_bits() != self.values[p].to_bits() {
                    return false;
                }
            }
        }
        true
    }

    /// Dense copy for small-grid oracle comparisons.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[p] as usize)] = self.values[p];
            }
        }
        m
    }
}

/// 1D transverse Hamiltonian (3-point stencil).
pub fn assemble_1d(grid: &Grid1D, v: &[f64], mass: f64) -> Result<SparseHamiltonian> {
    if v.len() != grid.n {
        return Err(Error::Config(format!(
            "potential has {} samples for a {}-node grid",
            v.len(),
            grid.n
        )));
    }
    if !(mass > 0.0) {
        return Err(Error::Config(format!("mass must be positive, got {mass}")));
    }
    let t = HBAR * HBAR / (2.0 * mass * grid.h * grid.h);
    let n = grid.n;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(3 * n);
    let mut values = Vec::with_capacity(3 * n);
    row_ptr.push(0);
    for i in 0..n {
        if i > 0 {
            col_idx.push((i - 1) as u32);
            values.push(-t);
        }
        col_idx.push(i as u32);
        values.push(2.0 * t + v[i]);
        if i + 1 < n {
            col_idx.push((i + 1) as u32);
            values.push(-t);
        }
        row_ptr.push(col_idx.len());
    }
    Ok(SparseHamiltonian {
        dim: n,
        row_ptr,
        col_idx,
        values,
        provenance: GridProvenance::Line(*grid),
    })
}

/// 2D Hamiltonian (5-point stencil), y fastest.
pub fn assemble_2d(grid: &Grid2D, v: &ScalarField2D, mass: f64) -> Result<SparseHamiltonian> {
    if v.grid != *grid {
        return Err(Error::Config(
            "potential field grid does not match the assembly grid".into(),
        ));
    }
    if !(mass > 0.0) {
        return Err(Error::Config(format!("mass must be positive, got {mass}")));
    }
    let tx = HBAR * HBAR / (2.0 * mass * grid.h_x * grid.h_x);
    let ty = HBAR * HBAR / (2.0 * mass * grid.h_y * grid.h_y);
    let (nx, ny) = (grid.n_x, grid.n_y);
    let n = nx * ny;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(5 * n);
    let mut values = Vec::with_capacity(5 * n);
    row_ptr.push(0);
    for ix in 0..nx {
        for iy in 0..ny {
            let i = ix * ny + iy;
            if ix > 0 {
                col_idx.push((i - ny) as u32);
                values.push(-tx);
            }
            if iy > 0 {
                col_idx.push((i - 1) as u32);
                values.push(-ty);
            }
            col_idx.push(i as u32);
            values.push(2.0 * tx + 2.0 * ty + v.values[i]);
            if iy + 1 < ny {
                col_idx.push((i + 1) as u32);
                values.push(-ty);
            }
            if ix + 1 < nx {
                col_idx.push((i + ny) as u32);
                values.push(-tx);
            }
            row_ptr.push(col_idx.len());
        }
    }
    Ok(SparseHamiltonian {
        dim: n,
        row_ptr,
        col_idx,
        values,
        provenance: GridProvenance::Plane(*grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mass_to_internal;

    fn mass() -> f64 {
        mass_to_internal(6.95e-36).unwrap()
    }

    fn small_field(nx_span: f64, hx: f64, f: impl FnMut(f64, f64) -> f64) -> ScalarField2D {
        let g = Grid2D::new(0.0, nx_span, hx, 0.0, 1.0, 0.25).unwrap();
        ScalarField2D::from_fn(g, f)
    }

    #[test]
    fn interior_diagonal_carries_kinetic_term_per_axis() {
        let g = Grid2D::new(0.0, 4.0, 0.5, 0.0, 0.4, 0.2).unwrap();
        assert_eq!(g.n_y, 3);
        let v = ScalarField2D::zeros(g);
        let h = assemble_2d(&g, &v, mass()).unwrap();
        let kx = HBAR * HBAR / (mass() * 0.5 * 0.5);
        let ky = HBAR * HBAR / (mass() * 0.2 * 0.2);
        let i = g.idx(2, 1);
        assert!((h.entry(i, i) - (kx + ky)).abs() < 1e-12);
        assert!((h.entry(i, i - 1) + 0.5 * ky).abs() < 1e-12);
        assert!((h.entry(i, i + g.n_y) + 0.5 * kx).abs() < 1e-12);
    }

    #[test]
    fn five_point_rows_and_bit_symmetry() {
        let f = small_field(3.0, 0.5, |x, y| (x * 3.1).sin().abs() + y);
        let h = assemble_2d(&f.grid, &f, mass()).unwrap();
        for i in 0..h.dim {
            assert!(h.row_ptr[i + 1] - h.row_ptr[i] <= 5);
        }
        assert!(h.is_bit_symmetric());
    }

    #[test]
    fn diagonal_dominates_kinetic_floor_for_non_negative_potential() {
        let f = small_field(3.0, 0.5, |x, y| x * x + y);
        let h = assemble_2d(&f.grid, &f, mass()).unwrap();
        let floor = HBAR * HBAR / (mass() * 0.5 * 0.5) + HBAR * HBAR / (mass() * 0.25 * 0.25);
        for i in 0..h.dim {
            assert!(h.entry(i, i) >= floor - 1e-12);
        }
    }

    #[test]
    fn constant_potential_shifts_every_eigenvalue_exactly() {
        let base = small_field(2.0, 0.5, |_, _| 0.0);
        let lifted = small_field(2.0, 0.5, |_, _| 0.37);
        let h0 = assemble_2d(&base.grid, &base, mass()).unwrap().to_dense();
        let h1 = assemble_2d(&lifted.grid, &lifted, mass()).unwrap().to_dense();
        let mut e0: Vec<f64> = h0.symmetric_eigen().eigenvalues.iter().copied().collect();
        let mut e1: Vec<f64> = h1.symmetric_eigen().eigenvalues.iter().copied().collect();
        e0.sort_by(f64::total_cmp);
        e1.sort_by(f64::total_cmp);
        for (a, b) in e0.iter().zip(&e1) {
            assert!((a + 0.37 - b).abs() < 1e-10);
        }
    }

    #[test]
    fn hermiticity_holds_for_random_vector_pairs() {
        let f = small_field(4.0, 0.5, |x, y| (x - y).abs());
        let h = assemble_2d(&f.grid, &f, mass()).unwrap();
        let n = h.dim;
        let u: Vec<f64> = (0..n).map(|i| ((i * 37 + 11) % 101) as f64 / 101.0 - 0.5).collect();
        let v: Vec<f64> = (0..n).map(|i| ((i * 53 + 29) % 97) as f64 / 97.0 - 0.5).collect();
        let mut hu = vec![0.0; n];
        let mut hv = vec![0.0; n];
        h.matvec(&u, &mut hu);
        h.matvec(&v, &mut hv);
        let a: f64 = u.iter().zip(&hv).map(|(x, y)| x * y).sum();
        let b: f64 = hu.iter().zip(&v).map(|(x, y)| x * y).sum();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-30));
    }

    #[test]
    fn mismatched_field_grid_is_rejected() {
        let g = Grid2D::new(0.0, 3.0, 0.5, 0.0, 1.0, 0.25).unwrap();
        let other = Grid2D::new(0.0, 3.0, 0.5, 0.0, 1.0, 0.5).unwrap();
        let v = ScalarField2D::zeros(other);
        assert!(assemble_2d(&g, &v, mass()).is_err());
    }

    #[test]
    fn one_dimensional_assembly_matches_tridiagonal_form() {
        let g = Grid1D::new(0.0, 5.0, 0.5).unwrap();
        let v: Vec<f64> = (0..g.n).map(|i| 0.1 * i as f64).collect();
        let h = assemble_1d(&g, &v, mass()).unwrap();
        let t = HBAR * HBAR / (2.0 * mass() * 0.25);
        for i in 0..g.n {
            assert_eq!(h.entry(i, i), 2.0 * t + v[i]);
            if i > 0 {
                assert_eq!(h.entry(i, i - 1), -t);
            }
        }
        assert!(h.is_bit_symmetric());
    }
}

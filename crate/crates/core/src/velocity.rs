//! Bohm and symmetric velocity fields from wavefunctions.
//!
//! Both fields come from the complex logarithmic derivative ∇ψ/ψ, which is
//! algebraically identical to the polar-decomposition formulas without ever
//! unwrapping a phase: v_B = (ħ/m)·Im(∇ψ/ψ) and v_s = −(ħ/m)·Re(∇ψ/ψ).
//! Density nodes, where the ratio blows up, are masked instead of patched.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fieldio;
use crate::grid::{ComplexField2D, Grid2D, ScalarField2D};
use crate::units::HBAR;

/// Relative density threshold below which a node is masked out.
pub const NODE_EPSILON: f64 = 1e-12;

pub struct VelocityField2D {
    pub grid: Grid2D,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    /// False where |ψ|² falls under the node threshold; vx, vy are zero
    /// there rather than meaningless.
    pub mask: Vec<bool>,
}

impl VelocityField2D {
    pub fn max_speed_on_mask(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.mask.len() {
            if self.mask[i] {
                worst = worst.max(self.vx[i].abs()).max(self.vy[i].abs());
            }
        }
        worst
    }

    /// Write the two components and the mask (as a 0/1 field) next to each
    /// other: `<stem>_vx.f2d`, `<stem>_vy.f2d`, `<stem>_mask.f2d`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let wrap = |values: Vec<f64>| ScalarField2D { grid: self.grid, values };
        fieldio::write_real(&dir.join(format!("{stem}_vx.f2d")), &wrap(self.vx.clone()))?;
        fieldio::write_real(&dir.join(format!("{stem}_vy.f2d")), &wrap(self.vy.clone()))?;
        let mask: Vec<f64> = self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        fieldio::write_real(&dir.join(format!("{stem}_mask.f2d")), &wrap(mask))?;
        Ok(())
    }
}

fn check_normalized(psi: &ComplexField2D) -> Result<()> {
    let total = psi.norm_sq();
    if total == 0.0 {
        return Err(Error::Domain("wavefunction is identically zero".into()));
    }
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!(
            "wavefunction norm² is {total}, expected 1 within 1e-8"
        )));
    }
    Ok(())
}

fn log_derivative_field(
    psi: &ComplexField2D,
    mass: f64,
    node_epsilon: f64,
    pick: impl Fn(Complex64) -> f64,
) -> Result<VelocityField2D> {
    check_normalized(psi)?;
    let grid = psi.grid;
    let peak = psi.values.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    let (gx, gy) = psi.gradient();
    let scale = HBAR / mass;
    let n = psi.values.len();
    let mut vx = vec![0.0; n];
    let mut vy = vec![0.0; n];
    let mut mask = vec![false; n];
    for i in 0..n {
        let z = psi.values[i];
        if z.norm_sqr() < node_epsilon * peak {
            continue;
        }
        mask[i] = true;
        vx[i] = scale * pick(gx.values[i] / z);
        vy[i] = scale * pick(gy.values[i] / z);
    }
    Ok(VelocityField2D { grid, vx, vy, mask })
}

/// v_B = (ħ/m)·Im(∇ψ/ψ), the flow velocity of the probability density.
pub fn bohm_velocity(psi: &ComplexField2D, mass: f64, node_epsilon: f64) -> Result<VelocityField2D> {
    log_derivative_field(psi, mass, node_epsilon, |z| z.im)
}

/// v_s = −(ħ/m)·Re(∇ψ/ψ), the osmotic velocity from the amplitude slope.
pub fn symmetric_velocity(
    psi: &ComplexField2D,
    mass: f64,
    node_epsilon: f64,
) -> Result<VelocityField2D> {
    log_derivative_field(psi, mass, node_epsilon, |z| -z.re)
}

/// ∬ |ψ|² v dA per component. Masked nodes contribute nothing; the density
/// there is below the node threshold by construction.
pub fn density_weighted_mean(v: &VelocityField2D, psi: &ComplexField2D) -> (f64, f64) {
    let weight = v.grid.h_x * v.grid.h_y;
    let mut mx = 0.0;
    let mut my = 0.0;
    for i in 0..v.mask.len() {
        if v.mask[i] {
            let rho = psi.values[i].norm_sqr();
            mx += rho * v.vx[i];
            my += rho * v.vy[i];
        }
    }
    (mx * weight, my * weight)
}

/// |v_s| of a real bound eigenstate at one probe point just inside the step,
/// with the probe snapped to the nearest grid node. Uses the same stencil as
/// the full-field gradient, evaluated locally.
pub fn evanescent_speed_at_step(
    state: &ScalarField2D,
    mass: f64,
    x_eval: f64,
    y_eval: f64,
    node_epsilon: f64,
    state_name: &str,
) -> Result<f64> {
    if x_eval <= 0.0 {
        return Err(Error::Domain(format!(
            "evaluation point x = {x_eval} µm is not inside the step region (x > 0)"
        )));
    }
    let grid = &state.grid;
    let ix = grid.nearest_ix(x_eval)?;
    let iy = grid.nearest_iy(y_eval)?;
    let peak = state.values.iter().map(|v| v * v).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Domain(format!("{state_name}: state is identically zero")));
    }
    let psi = state.get(ix, iy);
    if psi * psi < node_epsilon * peak {
        return Err(Error::Domain(format!(
            "{state_name}: evaluation point ({x_eval}, {y_eval}) µm sits on a density node"
        )));
    }
    let along = |get: &dyn Fn(usize) -> f64, i: usize, count: usize, h: f64| -> f64 {
        if i == 0 {
            (get(1) * 4.0 - get(2) - get(0) * 3.0) / (2.0 * h)
        } else if i == count - 1 {
            (get(count - 1) * 3.0 - get(count - 2) * 4.0 + get(count - 3)) / (2.0 * h)
        } else {
            (get(i + 1) - get(i - 1)) / (2.0 * h)
        }
    };
    let dx = along(&|j| state.get(j, iy), ix, grid.n_x, grid.h_x);
    let dy = along(&|j| state.get(ix, j), iy, grid.n_y, grid.h_y);
    let scale = HBAR / mass;
    Ok(scale * (dx * dx + dy * dy).sqrt() / psi.abs())
}

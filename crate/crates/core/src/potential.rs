//! Piecewise coupled-waveguide potential with cosine-blend smoothing.
//!
//! The landscape has four longitudinal regions: an entry ramp (x < −600),
//! the main-guide well, a short flat barrier strip over the auxiliary side
//! (−10 ≤ x < 0), and the raised two-guide step (x ≥ 0). All branch values
//! are dimensionless and scaled by `v_s` at the end. Region seams are
//! smoothed with a raised-cosine average: along x across each break, then
//! along y across y = 0 where the upper/lower branches differ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid1D, Grid2D, ScalarField2D};

pub const X_DOMAIN: (f64, f64) = (-900.0, 700.0);
pub const Y_DOMAIN: (f64, f64) = (-40.0, 40.0);

/// Longitudinal region breaks, in order: ramp|well, well|barrier, barrier|step.
const X_BREAKS: [f64; 3] = [-600.0, -10.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PotentialParams {
    /// Overall energy scale (meV).
    pub v_s: f64,
    /// Step-floor height relative to the well floor (dimensionless).
    pub h0: f64,
    /// Transverse harmonic curvature, 4/75 µm⁻².
    pub curvature: f64,
    /// Entry-ramp slope, 2/75 µm⁻¹.
    pub ramp_slope: f64,
    /// Flat-barrier branch value (dimensionless).
    pub barrier_value: f64,
    /// Guide centerlines sit at ±guide_center (µm).
    pub guide_center: f64,
    /// Half-width of each cosine blend zone (µm).
    pub blend_halfwidth: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            v_s: 0.1581,
            h0: 3.587,
            curvature: 4.0 / 75.0,
            ramp_slope: 2.0 / 75.0,
            barrier_value: 12.0,
            guide_center: 8.0,
            blend_halfwidth: 2.0,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_s > 0.0) || !(self.h0 > 0.0) || !(self.blend_halfwidth >= 0.0) {
            return Err(Error::Config(format!(
                "need v_s > 0, h0 > 0, blend_halfwidth >= 0; got {}, {}, {}",
                self.v_s, self.h0, self.blend_halfwidth
            )));
        }
        let w = self.blend_halfwidth;
        for pair in X_BREAKS.windows(2) {
            if pair[1] - pair[0] <= 2.0 * w {
                return Err(Error::Config(format!(
                    "blend zones overlap: breaks {} and {} with half-width {w}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(())
    }

    /// Harmonic branch centered on the main guide at +guide_center.
    #[inline]
    fn harm_main(&self, y: f64) -> f64 {
        let d = y - self.guide_center;
        self.curvature * d * d
    }

    /// Harmonic branch centered on the auxiliary guide at −guide_center.
    #[inline]
    fn harm_aux(&self, y: f64) -> f64 {
        let d = y + self.guide_center;
        self.curvature * d * d
    }

    /// Entry ramp: rises linearly to the left of the first break, clamped at
    /// zero so blend extensions past the break cannot dip negative.
    #[inline]
    fn ramp(&self, x: f64, y: f64) -> f64 {
        (self.harm_main(y) + self.ramp_slope * (X_BREAKS[0] - x)).max(0.0)
    }

    /// Branch value (dimensionless) that applies for y > 0 in each region.
    #[inline]
    fn upper_branch(&self, region: usize, x: f64, y: f64) -> f64 {
        match region {
            0 => self.ramp(x, y),
            1 => self.harm_main(y),
            2 => self.harm_main(y),
            _ => self.harm_main(y) + self.h0,
        }
    }

    /// Branch value (dimensionless) that applies for y ≤ 0 in each region.
    #[inline]
    fn lower_branch(&self, region: usize, x: f64, y: f64) -> f64 {
        match region {
            0 => self.ramp(x, y),
            1 => self.harm_main(y),
            2 => self.barrier_value,
            _ => self.harm_aux(y) + self.h0,
        }
    }
}

#[inline]
fn region_of(x: f64) -> usize {
    X_BREAKS.iter().position(|&b| x < b).unwrap_or(X_BREAKS.len())
}

/// Raised-cosine weight of the branch left of a break, as a function of the
/// signed distance d ∈ (−w, w) from the break: 1 at d = −w, ½ at 0, 0 at +w.
#[inline]
fn left_weight(d: f64, w: f64) -> f64 {
    0.5 * (1.0 + (std::f64::consts::PI * (d + w) / (2.0 * w)).cos())
}

fn check_domain(x: f64, y: f64) -> Result<()> {
    if x < X_DOMAIN.0 || x > X_DOMAIN.1 || y < Y_DOMAIN.0 || y > Y_DOMAIN.1 {
        return Err(Error::Range(format!(
            "({x}, {y}) outside [{}, {}] x [{}, {}]",
            X_DOMAIN.0, X_DOMAIN.1, Y_DOMAIN.0, Y_DOMAIN.1
        )));
    }
    Ok(())
}

/// Unsmoothed piecewise potential (meV).
pub fn raw_potential(p: &PotentialParams, x: f64, y: f64) -> Result<f64> {
    check_domain(x, y)?;
    let r = region_of(x);
    let branch = if y > 0.0 { p.upper_branch(r, x, y) } else { p.lower_branch(r, x, y) };
    Ok(p.v_s * branch)
}

/// Smoothed potential at one point (meV): x-blends across each break applied
/// to the upper and lower branch families, then a y-blend across y = 0.
pub fn smooth_value(p: &PotentialParams, x: f64, y: f64) -> Result<f64> {
    check_domain(x, y)?;
    let w = p.blend_halfwidth;
    if w == 0.0 {
        return raw_potential(p, x, y);
    }
    let xblend = |family: &dyn Fn(usize, f64, f64) -> f64| -> f64 {
        for (i, &b) in X_BREAKS.iter().enumerate() {
            let d = x - b;
            if d.abs() < w {
                let wl = left_weight(d, w);
                return wl * family(i, x, y) + (1.0 - wl) * family(i + 1, x, y);
            }
        }
        family(region_of(x), x, y)
    };
    let up = xblend(&|r, x, y| p.upper_branch(r, x, y));
    let dn = xblend(&|r, x, y| p.lower_branch(r, x, y));
    // Skip the y-blend where the branch families agree (left of the barrier
    // region): there is no seam to smooth and raw values pass through exactly.
    let blended = if y.abs() < w && up != dn {
        let wl = left_weight(y, w);
        wl * dn + (1.0 - wl) * up
    } else if y > 0.0 {
        up
    } else {
        dn
    };
    Ok(p.v_s * blended)
}

/// Smoothed potential sampled on a grid.
pub fn smooth_potential(p: &PotentialParams, grid: &Grid2D) -> Result<ScalarField2D> {
    p.validate()?;
    check_domain(grid.x_min, grid.y_min)?;
    check_domain(grid.x_max, grid.y_max)?;
    let mut values = Vec::with_capacity(grid.len());
    for ix in 0..grid.n_x {
        let x = grid.x(ix);
        for iy in 0..grid.n_y {
            values.push(smooth_value(p, x, grid.y(iy))?);
        }
    }
    Ok(ScalarField2D { grid: *grid, values })
}

/// The two named transverse cross-sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossSection {
    Well,
    Step,
}

/// 1D y-potential of a cross-section (meV). The step slice keeps the cosine
/// blend across y = 0; the well slice is a single smooth branch.
pub fn y_slice(p: &PotentialParams, region: CrossSection) -> impl Fn(f64) -> f64 + '_ {
    move |y: f64| -> f64 {
        match region {
            CrossSection::Well => p.v_s * p.harm_main(y),
            CrossSection::Step => {
                let up = p.harm_main(y) + p.h0;
                let dn = p.harm_aux(y) + p.h0;
                let w = p.blend_halfwidth;
                let blended = if w > 0.0 && y.abs() < w {
                    let wl = left_weight(y, w);
                    wl * dn + (1.0 - wl) * up
                } else if y > 0.0 {
                    up
                } else {
                    dn
                };
                p.v_s * blended
            }
        }
    }
}

/// Sample a cross-section on a 1D grid.
pub fn y_slice_values(p: &PotentialParams, region: CrossSection, grid: &Grid1D) -> Vec<f64> {
    let f = y_slice(p, region);
    (0..grid.n).map(|i| f(grid.coord(i))).collect()
}

/// Tune (v_s, h0) so the guide-coupling rate and the effective step height
/// hit their targets. `solver` returns the lowest `count` eigenvalues of the
/// 1D transverse problem given sampled potential values and the spacing.
///
/// The coupling rate (E₁ − E₀)/2ħ of the step slice is independent of h0
/// (a constant offset shifts both levels equally), so v_s is bisected first
/// and h0 second; the outer loop re-checks both until jointly converged.
pub fn calibrate(
    target_j0: f64,
    target_v0: f64,
    y_grid: &Grid1D,
    solver: impl Fn(&[f64], f64, usize) -> Result<Vec<f64>>,
    base: PotentialParams,
) -> Result<PotentialParams> {
    if !(target_j0 > 0.0) || !(target_v0 > 0.0) {
        return Err(Error::Config(format!(
            "calibration targets must be positive, got J0 = {target_j0}, V0 = {target_v0}"
        )));
    }
    base.validate()?;
    let j0_of = |p: &PotentialParams| -> Result<f64> {
        let e = solver(&y_slice_values(p, CrossSection::Step, y_grid), y_grid.h, 2)?;
        Ok((e[1] - e[0]) / (2.0 * crate::units::HBAR))
    };
    let v0_of = |p: &PotentialParams| -> Result<f64> {
        let ew = solver(&y_slice_values(p, CrossSection::Well, y_grid), y_grid.h, 1)?;
        let es = solver(&y_slice_values(p, CrossSection::Step, y_grid), y_grid.h, 1)?;
        Ok(es[0] - ew[0])
    };

    let mut p = base;
    const J0_RTOL: f64 = 1e-4;
    const V0_ATOL: f64 = 1e-4;
    for _ in 0..20 {
        // J0 falls monotonically with v_s (stiffer guides split less).
        let (mut lo, mut hi) = (0.02, 1.0);
        let mut p_lo = p;
        p_lo.v_s = lo;
        let mut p_hi = p;
        p_hi.v_s = hi;
        let (j_lo, j_hi) = (j0_of(&p_lo)?, j0_of(&p_hi)?);
        if (j_lo - target_j0).signum() == (j_hi - target_j0).signum() {
            return Err(Error::Solver(format!(
                "coupling rate never crosses {target_j0} for v_s in [{lo}, {hi}]: \
                 J0({lo}) = {j_lo}, J0({hi}) = {j_hi}"
            )));
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            p.v_s = mid;
            let j = j0_of(&p)?;
            if ((j - target_j0) / target_j0).abs() <= J0_RTOL {
                break;
            }
            if (j - target_j0).signum() == (j_lo - target_j0).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }

        // Step height rises monotonically with h0 at fixed v_s.
        let (mut lo, mut hi) = (0.2, 10.0);
        let mut p_lo = p;
        p_lo.h0 = lo;
        let mut p_hi = p;
        p_hi.h0 = hi;
        let (v_lo, v_hi) = (v0_of(&p_lo)?, v0_of(&p_hi)?);
        if (v_lo - target_v0).signum() == (v_hi - target_v0).signum() {
            return Err(Error::Solver(format!(
                "step height never crosses {target_v0} meV for h0 in [{lo}, {hi}]: \
                 V0({lo}) = {v_lo}, V0({hi}) = {v_hi}"
            )));
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            p.h0 = mid;
            let v = v0_of(&p)?;
            if (v - target_v0).abs() <= V0_ATOL {
                break;
            }
            if (v - target_v0).signum() == (v_lo - target_v0).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }

        let joint_j = j0_of(&p)?;
        let joint_v = v0_of(&p)?;
        if ((joint_j - target_j0) / target_j0).abs() <= J0_RTOL
            && (joint_v - target_v0).abs() <= V0_ATOL
        {
            return Ok(p);
        }
    }
    Err(Error::Solver(
        "calibration did not reach joint convergence in 20 outer iterations".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PotentialParams {
        PotentialParams::default()
    }

    #[test]
    fn well_floor_centerline_is_zero() {
        assert_eq!(raw_potential(&p(), -300.0, 8.0).unwrap(), 0.0);
    }

    #[test]
    fn flat_barrier_branch_value() {
        let v = raw_potential(&p(), -5.0, -3.0).unwrap();
        assert!((v - 1.8972).abs() < 1e-12);
    }

    #[test]
    fn auxiliary_guide_floor_is_step_height() {
        let v = raw_potential(&p(), 100.0, -8.0).unwrap();
        assert!((v - 0.5671047).abs() < 1e-12);
    }

    #[test]
    fn ramp_meets_well_floor_continuously() {
        let params = p();
        for y in [-20.0, 0.0, 8.0, 25.0] {
            let left = raw_potential(&params, -600.0 - 1e-9, y).unwrap();
            let right = raw_potential(&params, -600.0, y).unwrap();
            assert!((left - right).abs() < 1e-9);
        }
    }

    #[test]
    fn out_of_domain_point_is_range_error() {
        assert!(raw_potential(&p(), 701.0, 0.0).is_err());
        assert!(raw_potential(&p(), 0.0, -41.0).is_err());
    }

    #[test]
    fn blend_midpoint_averages_the_branches() {
        let params = p();
        let at_break = smooth_value(&params, 0.0, 8.0).unwrap();
        let expect = 0.5 * (0.0 + params.h0 * params.v_s);
        assert!((at_break - expect).abs() < 1e-12);
    }

    #[test]
    fn blend_endpoints_recover_raw_branches() {
        let params = p();
        for y in [8.0, -8.0, 20.0] {
            let w = params.blend_halfwidth;
            for b in [-600.0, -10.0, 0.0] {
                for x in [b - w, b + w] {
                    let s = smooth_value(&params, x, y).unwrap();
                    let r = raw_potential(&params, x, y).unwrap();
                    assert!((s - r).abs() < 1e-12, "x = {x}, y = {y}");
                }
            }
        }
    }

    #[test]
    fn step_edge_guide_floor_blend_value() {
        let params = p();
        let v = smooth_value(&params, 1.0, 8.0).unwrap();
        let wl = 0.5 * (1.0 + (3.0 * std::f64::consts::PI / 4.0).cos());
        let exact = (1.0 - wl) * params.h0 * params.v_s;
        assert!((v - exact).abs() < 1e-14);
        assert!((v - 0.48406).abs() < 1e-4);
    }

    #[test]
    fn smoothing_touches_under_five_percent_of_nodes() {
        let params = p();
        let grid = Grid2D::new(-900.0, 700.0, 1.0, -40.0, 40.0, 0.2).unwrap();
        let smooth = smooth_potential(&params, &grid).unwrap();
        let mut same = 0usize;
        for ix in 0..grid.n_x {
            let x = grid.x(ix);
            for iy in 0..grid.n_y {
                if smooth.get(ix, iy) == raw_potential(&params, x, grid.y(iy)).unwrap() {
                    same += 1;
                }
            }
        }
        assert!(same as f64 >= 0.95 * grid.len() as f64);
    }

    #[test]
    fn potential_is_non_negative_and_zero_only_on_well_centerline() {
        let params = p();
        let grid = Grid2D::new(-900.0, 700.0, 1.0, -40.0, 40.0, 0.2).unwrap();
        let smooth = smooth_potential(&params, &grid).unwrap();
        for ix in 0..grid.n_x {
            for iy in 0..grid.n_y {
                let v = smooth.get(ix, iy);
                assert!(v >= 0.0);
                if v == 0.0 {
                    let (x, y) = (grid.x(ix), grid.y(iy));
                    assert_eq!(y, 8.0, "zero off the centerline at ({x}, {y})");
                    assert!((-600.0..=-2.0).contains(&x), "zero at x = {x}");
                }
            }
        }
    }

    #[test]
    fn adjacent_node_jumps_respect_analytic_slope_bound() {
        let params = p();
        // Steepest pieces: harmonic slope at the domain corner, the blend
        // derivative pi/(4w) against the largest branch gap (well harmonic
        // vs flat barrier at y = -40), and the ramp slope.
        let harm_slope = 2.0 * params.curvature * 48.0;
        let max_gap = params.curvature * 48.0 * 48.0 - params.barrier_value;
        let blend_slope = std::f64::consts::PI / (4.0 * params.blend_halfwidth) * max_gap;
        let bound = params.v_s * (harm_slope + blend_slope + params.ramp_slope);
        let grid = Grid2D::new(-640.0, 40.0, 0.1, -40.0, 40.0, 0.1).unwrap();
        let field = smooth_potential(&params, &grid).unwrap();
        let mut max_jump = 0.0f64;
        for ix in 0..grid.n_x {
            for iy in 0..grid.n_y {
                if ix + 1 < grid.n_x {
                    max_jump = max_jump.max((field.get(ix + 1, iy) - field.get(ix, iy)).abs());
                }
                if iy + 1 < grid.n_y {
                    max_jump = max_jump.max((field.get(ix, iy + 1) - field.get(ix, iy)).abs());
                }
            }
        }
        assert!(max_jump <= bound * 0.1 * 1.05, "max jump {max_jump}, bound {bound}");
    }

    #[test]
    fn well_slice_vanishes_at_guide_center() {
        let params = p();
        let f = y_slice(&params, CrossSection::Well);
        assert_eq!(f(8.0), 0.0);
        assert!(f(0.0) > 0.0);
    }

    #[test]
    fn step_slice_floors_sit_at_step_height() {
        let params = p();
        let f = y_slice(&params, CrossSection::Step);
        assert!((f(8.0) - 0.5671047).abs() < 1e-12);
        assert!((f(-8.0) - 0.5671047).abs() < 1e-12);
    }

    #[test]
    fn step_slice_is_even_in_y() {
        let params = p();
        let f = y_slice(&params, CrossSection::Step);
        let mut y = -15.0;
        while y <= 15.0 {
            assert!((f(y) - f(-y)).abs() < 1e-15, "y = {y}");
            y += 0.23;
        }
    }

    #[test]
    fn overlapping_blend_zones_are_rejected() {
        let mut params = p();
        params.blend_halfwidth = 6.0;
        assert!(params.validate().is_err());
        let grid = Grid2D::new(-20.0, 20.0, 1.0, -10.0, 10.0, 1.0).unwrap();
        assert!(smooth_potential(&params, &grid).is_err());
    }

    #[test]
    fn zero_halfwidth_disables_smoothing() {
        let mut params = p();
        params.blend_halfwidth = 0.0;
        let v = smooth_value(&params, 1.0, 8.0).unwrap();
        assert_eq!(v, raw_potential(&params, 1.0, 8.0).unwrap());
    }

    #[test]
    fn unreachable_step_height_fails_calibration_with_range_diagnostic() {
        // Stub solver recognizing the step slice by its even profile; its
        // splitting scales like 1/v_s so the coupling bisection succeeds,
        // but both ground levels are pinned at 0.2, leaving V0 = 0 forever.
        let stub = |v: &[f64], _: f64, k: usize| -> crate::error::Result<Vec<f64>> {
            let is_step = (v[0] - v[v.len() - 1]).abs() < 1e-9;
            let split = if is_step { 0.1 / v[0] } else { 0.5 };
            Ok(vec![0.2, 0.2 + split][..k].to_vec())
        };
        let grid = Grid1D::new(-40.0, 40.0, 0.1).unwrap();
        let err = calibrate(0.0455, 5.0, &grid, stub, PotentialParams::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("never crosses"), "got: {msg}");
        assert!(msg.contains("[0.2, 10]"), "got: {msg}");
    }
}

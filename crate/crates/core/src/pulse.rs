//! Gaussian pulses released on the entry ramp and their bound-ladder
//! projections.
//!
//! A pulse is prepared as a real Gaussian centered on the ramp, expanded in
//! the bound eigenbasis, and renormalized there. Everything downstream
//! (propagation, time averages, speed fits) works with the coefficient
//! vector, so the expansion fidelity is tracked and poor releases are
//! rejected instead of silently renormalized into nonsense.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField2D};
use crate::spectrum::BoundSpectrum;
use crate::units::HBAR;

/// Release positions live on the entry ramp.
pub const RAMP_WINDOW: (f64, f64) = (-900.0, -600.0);

/// Expansions keeping less than this fraction of the pulse mass on the
/// bound ladder are rejected.
pub const FIDELITY_FLOOR: f64 = 0.5;

/// Fraction of the ideal Gaussian mass that may fall outside the mesh
/// before the release is flagged.
pub const CLIP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PulseSpec {
    /// Release center on the ramp (µm).
    pub x0: f64,
    /// Longitudinal 1/e half-width of the amplitude (µm).
    pub sigma_x: f64,
    /// Transverse 1/e half-width of the amplitude (µm).
    pub sigma_y: f64,
    /// Transverse center, normally the guide centerline (µm).
    pub y_center: f64,
    /// Excess energy the release was aimed at, if it came from a series walk.
    pub target_mean_ex: Option<f64>,
}

impl PulseSpec {
    pub fn at(x0: f64) -> Self {
        Self { x0, sigma_x: 9.864, sigma_y: 4.932, y_center: 8.0, target_mean_ex: None }
    }
}

#[derive(Debug, Clone)]
pub struct PulseState {
    pub spec: PulseSpec,
    /// Renormalized bound-ladder coefficients, one per spectrum state.
    pub coefficients: Vec<f64>,
    /// Bound-ladder mass before renormalization.
    pub fidelity: f64,
    /// ⟨E⟩ over the renormalized coefficients (meV).
    pub mean_energy: f64,
    /// ⟨E⟩ minus the transverse ground level, the longitudinal budget (meV).
    pub mean_excess: f64,
    /// Averaging window used for time-averaged densities (ps).
    pub averaging_time: f64,
    /// Gaussian mass lost to the mesh edges before renormalization.
    pub clipped_mass: f64,
}

impl PulseState {
    pub fn clipping_warning(&self) -> Option<String> {
        if self.clipped_mass > CLIP_TOLERANCE {
            Some(format!(
                "release at x0 = {} µm clips {:.3e} of its mass at the mesh edge",
                self.spec.x0, self.clipped_mass
            ))
        } else {
            None
        }
    }
}

/// Real, positive, unit-mass Gaussian on the mesh. The second value is the
/// fraction of the ideal (unbounded) Gaussian mass the mesh could not hold.
pub fn gaussian_pulse(grid: &Grid2D, spec: &PulseSpec) -> Result<(ScalarField2D, f64)> {
    if !(spec.sigma_x > 0.0) || !(spec.sigma_y > 0.0) {
        return Err(Error::Config(format!(
            "pulse widths must be positive, got sigma_x = {}, sigma_y = {}",
            spec.sigma_x, spec.sigma_y
        )));
    }
    if spec.x0 < RAMP_WINDOW.0 || spec.x0 > RAMP_WINDOW.1 {
        return Err(Error::Config(format!(
            "release center x0 = {} µm is off the ramp [{}, {}]",
            spec.x0, RAMP_WINDOW.0, RAMP_WINDOW.1
        )));
    }
    let mut field = ScalarField2D::from_fn(*grid, |x, y| {
        let u = (x - spec.x0) / spec.sigma_x;
        let v = (y - spec.y_center) / spec.sigma_y;
        (-0.5 * (u * u + v * v)).exp()
    });
    let captured = field.norm_sq();
    if captured <= 0.0 {
        return Err(Error::Domain("pulse mass vanished on this mesh".into()));
    }
    // ∬ exp(−(x−x0)²/σx² − …) over the whole plane is π σx σy; the discrete
    // sum over the mesh converges to the boxed integral far below the
    // tolerances in play, so the deficit measures edge clipping.
    let ideal = std::f64::consts::PI * spec.sigma_x * spec.sigma_y;
    let clipped = (1.0 - captured / ideal).max(0.0);
    let scale = 1.0 / captured.sqrt();
    for v in &mut field.values {
        *v *= scale;
    }
    Ok((field, clipped))
}

fn chunked_dot(a: &[f64], b: &[f64]) -> f64 {
    a.chunks(4096)
        .zip(b.chunks(4096))
        .map(|(ca, cb)| ca.iter().zip(cb).map(|(x, y)| x * y).sum::<f64>())
        .sum()
}

/// Expand a real field in the bound basis. Returns the renormalized
/// coefficients (Σc² = 1) and the pre-renormalization bound mass.
pub fn project_onto_bound(
    field: &ScalarField2D,
    spectrum: &BoundSpectrum,
) -> Result<(Vec<f64>, f64)> {
    if spectrum.is_empty() {
        return Err(Error::Domain("spectrum holds no bound states".into()));
    }
    if field.grid != spectrum.grid {
        return Err(Error::Config("pulse and spectrum live on different meshes".into()));
    }
    let weight = field.grid.h_x * field.grid.h_y;
    let mut coefficients: Vec<f64> = spectrum
        .states
        .iter()
        .map(|state| chunked_dot(&state.values, &field.values) * weight)
        .collect();
    let fidelity: f64 = coefficients.iter().map(|c| c * c).sum();
    if fidelity < FIDELITY_FLOOR {
        return Err(Error::Domain(format!(
            "only {fidelity:.4} of the pulse mass lands on the bound ladder (floor {FIDELITY_FLOOR})"
        )));
    }
    let scale = 1.0 / fidelity.sqrt();
    for c in &mut coefficients {
        *c *= scale;
    }
    Ok((coefficients, fidelity))
}

/// Round-trip flight time to the step and back plus a tail allowance,
/// rounded up to the 0.5 ps sampling lattice.
pub fn averaging_time(spec: &PulseSpec, mean_excess: f64, mass: f64, time_factor: f64) -> Result<f64> {
    if !(mean_excess > 0.0) {
        return Err(Error::Domain(format!(
            "mean excess energy {mean_excess} meV gives no propagation speed"
        )));
    }
    if !(time_factor > 0.0) {
        return Err(Error::Config(format!("time factor must be positive, got {time_factor}")));
    }
    let speed = (2.0 * mean_excess / mass).sqrt();
    let t = time_factor * (2.0 * spec.x0.abs() + 4.0 * spec.sigma_x) / speed;
    Ok((t / 0.5).ceil() * 0.5)
}

/// Build, expand, and time-budget one release.
pub fn release_pulse(
    spec: PulseSpec,
    spectrum: &BoundSpectrum,
    mass: f64,
    time_factor: f64,
) -> Result<PulseState> {
    let (field, clipped_mass) = gaussian_pulse(&spectrum.grid, &spec)?;
    let (coefficients, fidelity) = project_onto_bound(&field, spectrum)?;
    let mean_energy: f64 = coefficients
        .iter()
        .zip(&spectrum.energies)
        .map(|(c, e)| c * c * e)
        .sum();
    let mean_excess = mean_energy - spectrum.constants.e_well_y0;
    let averaging_time = averaging_time(&spec, mean_excess, mass, time_factor)?;
    Ok(PulseState {
        spec,
        coefficients,
        fidelity,
        mean_energy,
        mean_excess,
        averaging_time,
        clipped_mass,
    })
}

#[derive(Debug, Clone)]
pub struct SeriesOptions {
    /// Number of releases.
    pub count: usize,
    /// Target ⟨E_x⟩ drop between consecutive releases (meV).
    pub spacing: f64,
    /// Highest ⟨E_x⟩ target; defaults to half a spacing under the barrier.
    pub top: Option<f64>,
    /// Potential gradient along the ramp (meV/µm), used to seed the walk.
    pub ramp_gradient: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub y_center: f64,
    pub mass: f64,
    pub time_factor: f64,
    /// Accepted |⟨E_x⟩ − target| per release (meV).
    pub energy_tolerance: f64,
}

impl SeriesOptions {
    pub fn new(mass: f64, ramp_gradient: f64) -> Self {
        Self {
            count: 42,
            spacing: 0.01,
            top: None,
            ramp_gradient,
            sigma_x: 9.864,
            sigma_y: 4.932,
            y_center: 8.0,
            mass,
            time_factor: 1.0,
            energy_tolerance: 0.0014,
        }
    }

    fn spec_at(&self, x0: f64, target: f64) -> PulseSpec {
        PulseSpec {
            x0,
            sigma_x: self.sigma_x,
            sigma_y: self.sigma_y,
            y_center: self.y_center,
            target_mean_ex: Some(target),
        }
    }
}

/// Walk release centers down the ramp so the excess energies step down an
/// even ladder from just under the barrier. Ordered deepest release first,
/// so x0 increases and ⟨E_x⟩ decreases along the result.
/// Feasibility checks plus the per-target secant walk, shared by the strict
/// and the lenient sweep drivers. The anchor (`prev`) only advances when a
/// target is accepted, so in lenient use a failed release does not poison
/// the guesses for the rest of the ladder.
struct SweepDriver<'a> {
    spectrum: &'a BoundSpectrum,
    opts: &'a SeriesOptions,
    top: f64,
    kinetic_floor: f64,
    x_deep_limit: f64,
    slope: f64,
    prev: Option<(f64, f64)>,
}

impl<'a> SweepDriver<'a> {
    fn new(spectrum: &'a BoundSpectrum, opts: &'a SeriesOptions) -> Result<Self> {
        if opts.count == 0 {
            return Err(Error::Config("a pulse series needs at least one release".into()));
        }
        if !(opts.spacing > 0.0) || !(opts.ramp_gradient > 0.0) {
            return Err(Error::Config(format!(
                "spacing and ramp gradient must be positive, got {} and {}",
                opts.spacing, opts.ramp_gradient
            )));
        }
        let top = opts.top.unwrap_or(spectrum.constants.v0 - 0.5 * opts.spacing);
        // Kinetic floor of a width-σx release; no x0 can target less than this.
        let kinetic_floor = HBAR * HBAR / (2.0 * opts.mass) / (2.0 * opts.sigma_x * opts.sigma_x);
        let x_deep_limit = spectrum.grid.x_min + 2.0 * opts.sigma_x;
        if x_deep_limit > RAMP_WINDOW.1 {
            return Err(Error::Config(format!(
                "mesh starts at {} µm and cannot hold a width-{} release on the ramp",
                spectrum.grid.x_min, opts.sigma_x
            )));
        }
        Ok(SweepDriver {
            spectrum,
            opts,
            top,
            kinetic_floor,
            x_deep_limit,
            slope: opts.ramp_gradient,
            prev: None,
        })
    }

    fn target(&self, k: usize) -> f64 {
        self.top - k as f64 * self.opts.spacing
    }

    fn walk(&mut self, k: usize) -> Result<PulseState> {
        let opts = self.opts;
        let target = self.target(k);
        if target <= self.kinetic_floor {
            return Err(Error::Config(format!(
                "release {k} targets {target:.4} meV, below the {:.4} meV kinetic floor of a width-{} release",
                self.kinetic_floor, opts.sigma_x
            )));
        }
        let probe = |x0: f64| -> Result<PulseState> {
            release_pulse(opts.spec_at(x0, target), self.spectrum, opts.mass, opts.time_factor)
                .map_err(|e| Error::Config(format!("series probe at x0 = {x0:.3} µm failed: {e}")))
        };
        let mut x = match self.prev {
            None => RAMP_WINDOW.1 - (target - self.kinetic_floor) / self.slope,
            Some((px, _)) => px + opts.spacing / self.slope,
        };
        // Bracketing secant on the monotone map x0 → ⟨E_x⟩.
        let mut deep: Option<(f64, f64)> = None; // E above target
        let mut shallow: Option<(f64, f64)> = None; // E below target
        let mut last: Option<(f64, f64)> = None;
        let mut accepted: Option<PulseState> = None;
        for _ in 0..12 {
            let x_clamped = x.clamp(self.x_deep_limit, RAMP_WINDOW.1);
            let state = probe(x_clamped)?;
            let e = state.mean_excess;
            if (e - target).abs() <= opts.energy_tolerance {
                accepted = Some(state);
                break;
            }
            if e > target {
                if x_clamped >= RAMP_WINDOW.1 - 1e-9 {
                    return Err(Error::Config(format!(
                        "release {k} still carries {e:.4} meV at the foot of the ramp, target {target:.4} meV is unreachable"
                    )));
                }
                deep = Some((x_clamped, e));
            } else {
                if x_clamped <= self.x_deep_limit + 1e-9 {
                    return Err(Error::Config(format!(
                        "release {k} reaches only {e:.4} meV at the deep end of the mesh, target {target:.4} meV is out of ramp range"
                    )));
                }
                shallow = Some((x_clamped, e));
            }
            if let Some((px, pe)) = last {
                let ds = (pe - e) / (x_clamped - px);
                if ds.is_finite() && -ds > 1e-6 {
                    self.slope = -ds;
                }
            }
            last = Some((x_clamped, e));
            x = match (deep, shallow) {
                (Some((xd, ed)), Some((xs, es))) => xd + (ed - target) * (xs - xd) / (ed - es),
                _ => x_clamped + (e - target) / self.slope,
            };
        }
        let state = accepted.ok_or_else(|| {
            Error::Config(format!(
                "release {k} did not settle within {} meV of {target:.4} meV",
                opts.energy_tolerance
            ))
        })?;
        if let Some((px, pe)) = self.prev {
            if state.spec.x0 <= px {
                return Err(Error::Config(format!(
                    "release centers stopped increasing at x0 = {} µm",
                    state.spec.x0
                )));
            }
            if pe - state.mean_excess < 0.75 * opts.spacing {
                return Err(Error::Config(format!(
                    "series stalled: releases {} and {k} are only {:.4} meV apart",
                    k - 1,
                    pe - state.mean_excess
                )));
            }
        }
        self.prev = Some((state.spec.x0, state.mean_excess));
        Ok(state)
    }
}

pub fn pulse_series(spectrum: &BoundSpectrum, opts: &SeriesOptions) -> Result<Vec<PulseState>> {
    let mut driver = SweepDriver::new(spectrum, opts)?;
    let mut series = Vec::with_capacity(opts.count);
    for k in 0..opts.count {
        series.push(driver.walk(k)?);
    }
    Ok(series)
}

/// Like [`pulse_series`], but records one outcome per target instead of
/// aborting on the first failure. The outer error covers only structurally
/// invalid options; everything per-release lands in the inner results.
pub fn pulse_series_lenient(
    spectrum: &BoundSpectrum,
    opts: &SeriesOptions,
) -> Result<Vec<(f64, Result<PulseState>)>> {
    let mut driver = SweepDriver::new(spectrum, opts)?;
    let mut outcomes = Vec::with_capacity(opts.count);
    for k in 0..opts.count {
        let target = driver.target(k);
        outcomes.push((target, driver.walk(k)));
    }
    Ok(outcomes)
}

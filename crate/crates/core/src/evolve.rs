//! Spectral propagation of bound pulses and exact time averages.
//!
//! With the pulse confined to the bound ladder, evolution is a phase rotation
//! per coefficient, and the time average over a window T has a closed form:
//! every cross term picks up the factor sinc(ΔE·T/ħ). No time stepping is
//! involved, so long windows cost the same as short ones.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField2D, ScalarField2D};
use crate::pulse::PulseState;
use crate::spectrum::BoundSpectrum;
use crate::units::HBAR;

/// sin(z)/z with a series branch so tiny windows lose no accuracy.
fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Cross-term survival factor of the pair splitting ΔE over a window T.
fn window_weight(delta_e: f64, t_avg: f64) -> f64 {
    sinc(delta_e * t_avg / HBAR)
}

fn check_pulse(pulse: &PulseState, spectrum: &BoundSpectrum) -> Result<()> {
    if pulse.coefficients.len() != spectrum.len() {
        return Err(Error::Config(format!(
            "pulse carries {} coefficients but the spectrum holds {} states",
            pulse.coefficients.len(),
            spectrum.len()
        )));
    }
    Ok(())
}

/// ψ(t) = Σ cₙ e^{−iEₙt/ħ} ψₙ.
pub fn evolve(pulse: &PulseState, spectrum: &BoundSpectrum, t: f64) -> Result<ComplexField2D> {
    check_pulse(pulse, spectrum)?;
    let mut out = ComplexField2D::zeros(spectrum.grid);
    for (n, state) in spectrum.states.iter().enumerate() {
        let w = Complex64::from_polar(pulse.coefficients[n], -spectrum.energies[n] * t / HBAR);
        for (o, &v) in out.values.iter_mut().zip(&state.values) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// (1/T)∫₀ᵀ |ψ(t)|² dt over the whole mesh, evaluated in closed form.
pub fn time_averaged_density(
    pulse: &PulseState,
    spectrum: &BoundSpectrum,
    t_avg: f64,
) -> Result<ScalarField2D> {
    check_pulse(pulse, spectrum)?;
    if t_avg < 0.0 {
        return Err(Error::Domain(format!("averaging window {t_avg} ps is negative")));
    }
    let k = spectrum.len();
    let c = &pulse.coefficients;
    let mut out = ScalarField2D::zeros(spectrum.grid);
    for m in 0..k {
        for n in m..k {
            let weight = window_weight(spectrum.energies[n] - spectrum.energies[m], t_avg);
            let factor = if m == n { 1.0 } else { 2.0 };
            let a = factor * c[m] * c[n] * weight;
            let sm = &spectrum.states[m].values;
            let sn = &spectrum.states[n].values;
            for i in 0..out.values.len() {
                out.values[i] += a * sm[i] * sn[i];
            }
        }
    }
    Ok(out)
}

/// Time-averaged density sampled along the two guide centerlines y = ±g.
#[derive(Debug, Clone)]
pub struct CenterlineDensity {
    /// Longitudinal node positions (µm).
    pub x: Vec<f64>,
    /// Density along the entry guide at y = +g.
    pub main: Vec<f64>,
    /// Density along the second guide at y = −g.
    pub aux: Vec<f64>,
    pub y_main: f64,
    pub y_aux: f64,
    pub averaging_time: f64,
}

/// Same closed form as the full-mesh average, restricted to the two rows
/// the speed analysis reads, which keeps the cost per pulse negligible.
pub fn time_averaged_centerlines(
    pulse: &PulseState,
    spectrum: &BoundSpectrum,
    t_avg: f64,
    guide_center: f64,
) -> Result<CenterlineDensity> {
    check_pulse(pulse, spectrum)?;
    if t_avg < 0.0 {
        return Err(Error::Domain(format!("averaging window {t_avg} ps is negative")));
    }
    let grid = spectrum.grid;
    let iy_main = grid.nearest_iy(guide_center)?;
    let iy_aux = grid.nearest_iy(-guide_center)?;
    let k = spectrum.len();
    let rows_main: Vec<Vec<f64>> = spectrum
        .states
        .iter()
        .map(|s| (0..grid.n_x).map(|ix| s.get(ix, iy_main)).collect())
        .collect();
    let rows_aux: Vec<Vec<f64>> = spectrum
        .states
        .iter()
        .map(|s| (0..grid.n_x).map(|ix| s.get(ix, iy_aux)).collect())
        .collect();
    let c = &pulse.coefficients;
    let mut main = vec![0.0; grid.n_x];
    let mut aux = vec![0.0; grid.n_x];
    for m in 0..k {
        for n in m..k {
            let weight = window_weight(spectrum.energies[n] - spectrum.energies[m], t_avg);
            let factor = if m == n { 1.0 } else { 2.0 };
            let a = factor * c[m] * c[n] * weight;
            for ix in 0..grid.n_x {
                main[ix] += a * rows_main[m][ix] * rows_main[n][ix];
                aux[ix] += a * rows_aux[m][ix] * rows_aux[n][ix];
            }
        }
    }
    Ok(CenterlineDensity {
        x: (0..grid.n_x).map(|ix| grid.x(ix)).collect(),
        main,
        aux,
        y_main: grid.y(iy_main),
        y_aux: grid.y(iy_aux),
        averaging_time: t_avg,
    })
}

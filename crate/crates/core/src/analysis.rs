//! Speed inference from centerline populations and the comparison table.
//!
//! The chain is: centerline densities → relative population of the second
//! guide ρ_a(x) → least-squares fit to Cx² on (0, 10.5] µm → inferred speed
//! J₀/√C, tabulated against the De Broglie speed, its coupling-corrected
//! variant, and the directly measured evanescent speed.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolve::time_averaged_centerlines;
use crate::pulse::PulseState;
use crate::spectrum::{BoundSpectrum, ModeLabel};
use crate::units::HBAR;
use crate::velocity::evanescent_speed_at_step;

/// Points where the combined centerline density falls under this fraction
/// of its peak are dropped from fits.
pub const FLOOR_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SpeedSource {
    Eigenstate { n: usize, n_x: usize, n_y: usize },
    Pulse { index: usize },
}

#[derive(Debug, Clone)]
pub struct SpeedRecord {
    pub source: SpeedSource,
    /// Longitudinal energy budget above the transverse ground level (meV).
    pub e_x: f64,
    /// De Broglie speed, absent above the barrier.
    pub v_db: Option<f64>,
    /// Coupling-corrected De Broglie speed (µm/ps).
    pub v_ansatz: f64,
    /// Detuning Δ = E_x − V₀ + ħJ₀ behind the corrected speed (meV).
    pub delta: f64,
    /// Directly measured evanescent speed; eigenstates only.
    pub v_s: Option<f64>,
    /// Fitted curvature C of ρ_a ≈ Cx² (µm⁻²); absent when the fit failed.
    pub c_fit: Option<f64>,
    /// J₀/√C (µm/ps); absent when C ≤ 0 or the fit failed.
    pub v_fit: Option<f64>,
    /// RMS residual of the parabola fit.
    pub fit_rms: Option<f64>,
    /// Semicolon-separated warnings: separability, fidelity, fit issues.
    pub flags: String,
}

/// ρ_a(x) = aux/(main + aux), with starved points masked out.
pub fn relative_population(
    main: &[f64],
    aux: &[f64],
    floor_epsilon: f64,
) -> Result<Vec<Option<f64>>> {
    if main.len() != aux.len() {
        return Err(Error::Config(format!(
            "centerline profiles differ in length: {} vs {}",
            main.len(),
            aux.len()
        )));
    }
    let mut peak = 0.0f64;
    for i in 0..main.len() {
        if main[i] < 0.0 || aux[i] < 0.0 {
            return Err(Error::Domain(format!(
                "densities must be non-negative, got ({}, {}) at sample {i}",
                main[i], aux[i]
            )));
        }
        peak = peak.max(main[i] + aux[i]);
    }
    Ok((0..main.len())
        .map(|i| {
            let total = main[i] + aux[i];
            if total < floor_epsilon * peak || total == 0.0 {
                None
            } else {
                Some(aux[i] / total)
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy)]
pub struct ParabolicFit {
    /// Least-squares curvature of ρ_a against x² (µm⁻²).
    pub c: f64,
    /// RMS residual over the used samples.
    pub rms: f64,
    /// Number of samples inside the window.
    pub used: usize,
}

/// Unweighted least squares of ρ_a(x) against the pure parabola Cx² over
/// x ∈ (fit_min, fit_max]: C = Σρx²/Σx⁴.
pub fn parabolic_fit(
    x: &[f64],
    rho_a: &[Option<f64>],
    fit_min: f64,
    fit_max: f64,
) -> Result<ParabolicFit> {
    if x.len() != rho_a.len() {
        return Err(Error::Config(format!(
            "{} sample positions against {} values",
            x.len(),
            rho_a.len()
        )));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut used = 0usize;
    for (&xi, rho) in x.iter().zip(rho_a) {
        if xi > fit_min && xi <= fit_max {
            if let Some(r) = rho {
                num += r * xi * xi;
                den += xi.powi(4);
                used += 1;
            }
        }
    }
    if used < 5 {
        return Err(Error::Solver(format!(
            "parabola fit needs at least 5 valid samples in ({fit_min}, {fit_max}] µm, found {used}"
        )));
    }
    let c = num / den;
    let mut sq = 0.0;
    for (&xi, rho) in x.iter().zip(rho_a) {
        if xi > fit_min && xi <= fit_max {
            if let Some(r) = rho {
                let res = r - c * xi * xi;
                sq += res * res;
            }
        }
    }
    Ok(ParabolicFit { c, rms: (sq / used as f64).sqrt(), used })
}

/// v_fit = J₀/√C; undefined for non-positive curvature.
pub fn fitted_speed(c: f64, j0: f64) -> Option<f64> {
    if c > 0.0 {
        Some(j0 / c.sqrt())
    } else {
        None
    }
}

/// v_DB = √(2(V₀ − E_x)/m), the speed scale of an evanescent tail.
pub fn de_broglie_speed(e_x: f64, v0: f64, mass: f64) -> Result<f64> {
    if e_x > v0 {
        return Err(Error::Domain(format!(
            "E_x = {e_x} meV exceeds the barrier {v0} meV; the state is not evanescent"
        )));
    }
    Ok((2.0 * (v0 - e_x) / mass).sqrt())
}

/// Corrected speed ṽ_DB = √(2|Δ|/m) with Δ = E_x − V₀ + ħJ₀. Valid on
/// both sides of the barrier; its zero sits ħJ₀ below v_DB's.
pub fn ansatz_speed(e_x: f64, v0: f64, j0: f64, mass: f64) -> (f64, f64) {
    let delta = e_x - v0 + HBAR * j0;
    ((2.0 * delta.abs() / mass).sqrt(), delta)
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Probe offset into the step for the direct evanescent speed (µm).
    pub x_eval: f64,
    /// Fit window over x, lower edge exclusive (µm).
    pub fit_min: f64,
    /// Fit window upper edge, inclusive (µm).
    pub fit_max: f64,
    /// Centerline offset ±g (µm).
    pub guide_center: f64,
    pub mass: f64,
    /// Node mask threshold for the evanescent probe.
    pub node_epsilon: f64,
    /// Validity floor for relative populations.
    pub floor_epsilon: f64,
    /// Pulses under this fidelity get flagged.
    pub low_fidelity: f64,
}

impl AnalysisOptions {
    pub fn new(mass: f64) -> Self {
        Self {
            x_eval: 3.0,
            fit_min: 0.0,
            fit_max: 10.5,
            guide_center: 8.0,
            mass,
            node_epsilon: crate::velocity::NODE_EPSILON,
            floor_epsilon: FLOOR_EPSILON,
            low_fidelity: 0.9,
        }
    }
}

/// Append a flag, keeping the field CSV-safe: flags are joined and embedded
/// commas rewritten with semicolons so a row never gains extra columns.
fn push_flag(flags: &mut String, flag: &str) {
    if !flags.is_empty() {
        flags.push(';');
    }
    for c in flag.chars() {
        flags.push(match c {
            ',' => ';',
            '\n' | '\r' => ' ',
            other => other,
        });
    }
}

fn fit_into_record(
    x: &[f64],
    rho_a: &[Option<f64>],
    j0: f64,
    opts: &AnalysisOptions,
    record: &mut SpeedRecord,
) {
    match parabolic_fit(x, rho_a, opts.fit_min, opts.fit_max) {
        Ok(fit) => {
            record.c_fit = Some(fit.c);
            record.fit_rms = Some(fit.rms);
            record.v_fit = fitted_speed(fit.c, j0);
            if record.v_fit.is_none() {
                push_flag(&mut record.flags, "non-positive curvature");
            }
        }
        Err(e) => push_flag(&mut record.flags, &format!("fit failed: {e}")),
    }
}

/// One row per n_y = 0 eigenstate: direct, De Broglie, corrected, and
/// parabola-fitted speeds at that state's energy.
pub fn eigenstate_speed_table(
    spectrum: &BoundSpectrum,
    opts: &AnalysisOptions,
) -> Result<Vec<SpeedRecord>> {
    eigenstate_speed_table_for_series(spectrum, opts, 0)
}

/// The same table restricted to an arbitrary transverse series. Rows are
/// built across the current worker pool and merged back in energy order,
/// so the output never depends on thread count.
pub fn eigenstate_speed_table_for_series(
    spectrum: &BoundSpectrum,
    opts: &AnalysisOptions,
    series_n_y: usize,
) -> Result<Vec<SpeedRecord>> {
    let grid = spectrum.grid;
    let iy_main = grid.nearest_iy(opts.guide_center)?;
    let iy_aux = grid.nearest_iy(-opts.guide_center)?;
    let x: Vec<f64> = (0..grid.n_x).map(|ix| grid.x(ix)).collect();
    let constants = &spectrum.constants;
    let picked: Vec<(usize, &ModeLabel)> = spectrum
        .labels
        .iter()
        .enumerate()
        .filter_map(|(idx, c)| c.label().map(|l| (idx, l)))
        .filter(|(_, l)| l.n_y == series_n_y)
        .collect();
    let rows: Vec<Result<SpeedRecord>> = picked
        .par_iter()
        .map(|&(idx, label)| {
            let n = idx + 1;
            let state = &spectrum.states[idx];
            let e_x = spectrum.energies[idx] - constants.e_well_y0;
            let (v_ansatz, delta) = ansatz_speed(e_x, constants.v0, constants.j0, opts.mass);
            let mut record = SpeedRecord {
                source: SpeedSource::Eigenstate { n, n_x: label.n_x, n_y: label.n_y },
                e_x,
                v_db: None,
                v_ansatz,
                delta,
                v_s: None,
                c_fit: None,
                v_fit: None,
                fit_rms: None,
                flags: String::new(),
            };
            if !label.separable {
                push_flag(&mut record.flags, "not separable");
            }
            match de_broglie_speed(e_x, constants.v0, opts.mass) {
                Ok(v) => record.v_db = Some(v),
                Err(_) => push_flag(&mut record.flags, "above the barrier"),
            }
            match evanescent_speed_at_step(
                state,
                opts.mass,
                opts.x_eval,
                opts.guide_center,
                opts.node_epsilon,
                &format!("state {n}"),
            ) {
                Ok(v) => record.v_s = Some(v),
                Err(e) => push_flag(&mut record.flags, &format!("no direct speed: {e}")),
            }
            let main: Vec<f64> =
                (0..grid.n_x).map(|ix| state.get(ix, iy_main).powi(2)).collect();
            let aux: Vec<f64> = (0..grid.n_x).map(|ix| state.get(ix, iy_aux).powi(2)).collect();
            let rho_a = relative_population(&main, &aux, opts.floor_epsilon)?;
            fit_into_record(&x, &rho_a, constants.j0, opts, &mut record);
            Ok(record)
        })
        .collect();
    rows.into_iter().collect()
}

/// One row per released pulse, fitted on its time-averaged centerlines.
pub fn pulse_speed_table(
    pulses: &[PulseState],
    spectrum: &BoundSpectrum,
    opts: &AnalysisOptions,
) -> Result<Vec<SpeedRecord>> {
    let constants = &spectrum.constants;
    let rows: Vec<Result<SpeedRecord>> = pulses
        .par_iter()
        .enumerate()
        .map(|(idx, pulse)| {
            let lines = time_averaged_centerlines(
                pulse,
                spectrum,
                pulse.averaging_time,
                opts.guide_center,
            )?;
            let e_x = pulse.mean_excess;
            let (v_ansatz, delta) = ansatz_speed(e_x, constants.v0, constants.j0, opts.mass);
            let mut record = SpeedRecord {
                source: SpeedSource::Pulse { index: idx + 1 },
                e_x,
                v_db: None,
                v_ansatz,
                delta,
                v_s: None,
                c_fit: None,
                v_fit: None,
                fit_rms: None,
                flags: String::new(),
            };
            if pulse.fidelity < opts.low_fidelity {
                push_flag(&mut record.flags, &format!("fidelity {:.4}", pulse.fidelity));
            }
            if pulse.clipping_warning().is_some() {
                push_flag(&mut record.flags, "clipped release");
            }
            match de_broglie_speed(e_x, constants.v0, opts.mass) {
                Ok(v) => record.v_db = Some(v),
                Err(_) => push_flag(&mut record.flags, "above the barrier"),
            }
            let rho_a = relative_population(&lines.main, &lines.aux, opts.floor_epsilon)?;
            fit_into_record(&lines.x, &rho_a, constants.j0, opts, &mut record);
            Ok(record)
        })
        .collect();
    rows.into_iter().collect()
}

fn fmt_opt(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.11e}"),
        None => String::new(),
    }
}

/// Column header shared by every speed table this module renders.
pub const SPEED_CSV_HEADER: &str =
    "source_type,index,n_x,n_y,E_x_meV,v_DB,v_ansatz,v_s,C,v_fit,fit_rms,flags";

/// Render the table as `speeds.csv`. Formatting is fixed-width scientific
/// with 12 significant digits, so equal tables are equal bytes.
pub fn speed_table_csv(records: &[SpeedRecord]) -> String {
    let mut out = String::from(SPEED_CSV_HEADER);
    out.push('\n');
    for r in records {
        let (source_type, index, n_x, n_y) = match &r.source {
            SpeedSource::Eigenstate { n, n_x, n_y } => {
                ("eigenstate", *n, n_x.to_string(), n_y.to_string())
            }
            SpeedSource::Pulse { index } => ("pulse", *index, String::new(), String::new()),
        };
        writeln!(
            out,
            "{source_type},{index},{n_x},{n_y},{:.11e},{},{:.11e},{},{},{},{},{}",
            r.e_x,
            fmt_opt(r.v_db),
            r.v_ansatz,
            fmt_opt(r.v_s),
            fmt_opt(r.c_fit),
            fmt_opt(r.v_fit),
            fmt_opt(r.fit_rms),
            r.flags
        )
        .expect("writing to a string cannot fail");
    }
    out
}

pub fn write_speed_csv(path: &Path, records: &[SpeedRecord]) -> Result<()> {
    std::fs::write(path, speed_table_csv(records))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::tests::{FIXTURE, MASS, RAMP_GRADIENT};
    use crate::pulse::{pulse_series, SeriesOptions};
    use rand::{Rng, SeedableRng};

    fn window_samples() -> Vec<f64> {
        (1..=21).map(|i| i as f64 * 0.5).collect()
    }

    #[test]
    fn relative_population_handles_edges() {
        let main = vec![1.0, 0.5, 0.5, 0.0];
        let aux = vec![0.0, 0.5, 0.5, 0.0];
        let rho = relative_population(&main, &aux, 1e-12).unwrap();
        assert_eq!(rho[0], Some(0.0));
        assert_eq!(rho[1], Some(0.5));
        assert_eq!(rho[3], None);
        assert!(relative_population(&[1.0], &[-0.1], 1e-12).is_err());
    }

    #[test]
    fn exact_parabola_is_recovered() {
        let x = window_samples();
        let rho: Vec<Option<f64>> = x.iter().map(|&xi| Some(0.01 * xi * xi)).collect();
        let fit = parabolic_fit(&x, &rho, 0.0, 10.5).unwrap();
        assert_eq!(fit.used, 21);
        assert!((fit.c - 0.01).abs() < 1e-15);
        assert!(fit.rms < 1e-15);
    }

    #[test]
    fn uniform_noise_moves_the_curvature_within_its_variance() {
        let x = window_samples();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed_0202);
        let rho: Vec<Option<f64>> = x
            .iter()
            .map(|&xi| Some(0.01 * xi * xi + rng.gen_range(-1e-4..1e-4)))
            .collect();
        let fit = parabolic_fit(&x, &rho, 0.0, 10.5).unwrap();
        assert!((fit.c - 0.01).abs() < 2e-4, "C drifted to {}", fit.c);
    }

    #[test]
    fn flat_profile_projects_in_closed_form() {
        let x = window_samples();
        let rho: Vec<Option<f64>> = x.iter().map(|_| Some(0.5)).collect();
        let fit = parabolic_fit(&x, &rho, 0.0, 10.5).unwrap();
        let sx2: f64 = x.iter().map(|v| v * v).sum();
        let sx4: f64 = x.iter().map(|v| v.powi(4)).sum();
        assert!((fit.c - 0.5 * sx2 / sx4).abs() < 1e-15);
        assert!(fit.rms > 0.05, "a constant fit to a parabola must leave residue");
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let x = window_samples();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let base: Vec<f64> = x.iter().map(|&xi| 0.02 * xi * xi + rng.gen_range(0.0..1e-3)).collect();
        let rho: Vec<Option<f64>> = base.iter().map(|&v| Some(v)).collect();
        let scaled: Vec<Option<f64>> = base.iter().map(|&v| Some(3.5 * v)).collect();
        let a = parabolic_fit(&x, &rho, 0.0, 10.5).unwrap();
        let b = parabolic_fit(&x, &scaled, 0.0, 10.5).unwrap();
        assert!((b.c - 3.5 * a.c).abs() < 1e-14 * a.c.abs().max(1.0));
    }

    #[test]
    fn starved_windows_are_rejected() {
        let x = window_samples();
        let mut rho: Vec<Option<f64>> = x.iter().map(|_| None).collect();
        rho[0] = Some(0.1);
        rho[1] = Some(0.2);
        assert!(parabolic_fit(&x, &rho, 0.0, 10.5).is_err());
    }

    #[test]
    fn speed_arithmetic_matches_hand_values() {
        assert!((fitted_speed(0.01, 0.039835).unwrap() - 0.39835).abs() < 1e-12);
        let quarter = fitted_speed(0.04, 0.039835).unwrap();
        assert!((quarter - 0.39835 / 2.0).abs() < 1e-12);
        assert_eq!(fitted_speed(0.0, 0.039835), None);
        assert_eq!(fitted_speed(-0.3, 0.039835), None);

        let m = 0.043378;
        assert_eq!(de_broglie_speed(0.538, 0.538, m).unwrap(), 0.0);
        assert!((de_broglie_speed(0.0, 0.538, m).unwrap() - 4.980).abs() < 1e-3);
        assert!((de_broglie_speed(0.3, 0.538, m).unwrap() - 3.313).abs() < 1e-3);
        assert!(de_broglie_speed(0.6, 0.538, m).is_err());

        let j0 = 0.039835;
        assert!((HBAR * j0 - 0.026218).abs() < 5e-6);
        let (v_zero, d_zero) = ansatz_speed(0.538 - HBAR * j0, 0.538, j0, m);
        assert!(d_zero.abs() < 1e-15);
        assert!(v_zero < 1e-7);
        let (v, delta) = ansatz_speed(0.5, 0.538, j0, m);
        assert!((delta + 0.011782).abs() < 5e-6);
        assert!((v - 0.7370).abs() < 1e-3);
    }

    #[test]
    fn fit_round_trips_a_known_speed() {
        let x = window_samples();
        let j0: f64 = 0.039834190;
        let v_true = 1.7342;
        let c_true = (j0 / v_true).powi(2);
        let rho: Vec<Option<f64>> = x.iter().map(|&xi| Some(c_true * xi * xi)).collect();
        let fit = parabolic_fit(&x, &rho, 0.0, 10.5).unwrap();
        let v = fitted_speed(fit.c, j0).unwrap();
        assert!((v / v_true - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_table_covers_the_ground_series() {
        let spectrum = &*FIXTURE;
        let opts = AnalysisOptions::new(MASS);
        let records = eigenstate_speed_table(spectrum, &opts).unwrap();
        let ground_series = spectrum
            .labels
            .iter()
            .filter(|l| l.label().is_some_and(|m| m.n_y == 0))
            .count();
        assert_eq!(records.len(), ground_series);
        assert!(records.len() >= 10, "fixture should bind a decent ladder");
        for pair in records.windows(2) {
            assert!(pair[1].e_x > pair[0].e_x, "records must follow the energy order");
        }
        let with_speed = records.iter().filter(|r| r.v_s.is_some()).count();
        assert!(with_speed * 2 > records.len());
        let with_fit = records.iter().filter(|r| r.v_fit.is_some()).count();
        assert!(with_fit * 2 > records.len());
        for r in &records {
            assert!(r.v_db.is_some(), "every fixture state sits under the barrier");
            assert!(r.v_ansatz >= 0.0);
        }
    }

    #[test]
    fn pulse_table_carries_series_energies() {
        let spectrum = &*FIXTURE;
        let series = pulse_series(
            spectrum,
            &SeriesOptions { count: 2, top: Some(0.07), ..SeriesOptions::new(MASS, RAMP_GRADIENT) },
        )
        .unwrap();
        let opts = AnalysisOptions::new(MASS);
        let records = pulse_speed_table(&series, spectrum, &opts).unwrap();
        assert_eq!(records.len(), 2);
        for (r, p) in records.iter().zip(&series) {
            assert_eq!(r.e_x, p.mean_excess);
            assert!(r.v_db.is_some());
            assert!(r.c_fit.is_some());
            let v = r.v_fit.expect("second-guide leakage gives a positive curvature");
            assert!(v > 0.0);
        }
        assert_eq!(records[0].source, SpeedSource::Pulse { index: 1 });
    }

    #[test]
    fn csv_rendering_is_stable_and_complete() {
        let records = vec![
            SpeedRecord {
                source: SpeedSource::Eigenstate { n: 3, n_x: 3, n_y: 0 },
                e_x: 0.0525,
                v_db: Some(4.73201),
                v_ansatz: 4.857,
                delta: -0.512,
                v_s: Some(4.512),
                c_fit: Some(7.085e-5),
                v_fit: Some(4.7321),
                fit_rms: Some(1.4e-6),
                flags: String::new(),
            },
            SpeedRecord {
                source: SpeedSource::Pulse { index: 7 },
                e_x: 0.498,
                v_db: None,
                v_ansatz: 0.7370,
                delta: -0.011782,
                v_s: None,
                c_fit: None,
                v_fit: None,
                fit_rms: None,
                flags: "fidelity 0.8321;fit failed: solver error: thin".into(),
            },
        ];
        let text = speed_table_csv(&records);
        let expect = "source_type,index,n_x,n_y,E_x_meV,v_DB,v_ansatz,v_s,C,v_fit,fit_rms,flags\n\
            eigenstate,3,3,0,5.25000000000e-2,4.73201000000e0,4.85700000000e0,4.51200000000e0,7.08500000000e-5,4.73210000000e0,1.40000000000e-6,\n\
            pulse,7,,,4.98000000000e-1,,7.37000000000e-1,,,,,fidelity 0.8321;fit failed: solver error: thin\n";
        assert_eq!(text, expect);
        let again = speed_table_csv(&records);
        assert_eq!(text, again);
    }
}

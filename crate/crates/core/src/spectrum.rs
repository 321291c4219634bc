//! Bound-state spectrum: census-certified lowest eigenpairs, the derived
//! constants from the transverse slices, and per-state mode labels.
//!
//! The census comes from matrix inertia: factoring H − c·I counts the
//! eigenvalues below c exactly, so the iterative solver can be asked for a
//! known number of pairs and the result certified complete rather than
//! trusted.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldio;
use crate::grid::{Grid1D, Grid2D, ScalarField2D};
use crate::lanczos::{self, EigenPair, LanczosOptions};
use crate::ldl;
use crate::potential::{y_slice_values, CrossSection, PotentialParams};
use crate::sparse::SparseHamiltonian;
use crate::tridiag;
use crate::units::HBAR;

/// Scalar outputs of the transverse calibration stage.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// Ground transverse level in the main guide (meV).
    pub e_well_y0: f64,
    /// Two lowest transverse levels on the raised step (meV).
    pub e_step_y0: f64,
    pub e_step_y1: f64,
    /// Inter-guide coupling rate (ps⁻¹).
    pub j0: f64,
    /// Effective longitudinal barrier (meV).
    pub v0: f64,
}

/// J₀ = (E_step_y1 − E_step_y0) / 2ħ.
pub fn coupling_constant(e_step_y0: f64, e_step_y1: f64) -> Result<f64> {
    if e_step_y1 < e_step_y0 {
        return Err(Error::Domain(format!(
            "step levels out of order: E_y1 = {e_step_y1} below E_y0 = {e_step_y0}"
        )));
    }
    Ok((e_step_y1 - e_step_y0) / (2.0 * HBAR))
}

/// V₀ = E_step_y0 − E_well_y0.
pub fn effective_barrier(e_step_y0: f64, e_well_y0: f64) -> f64 {
    e_step_y0 - e_well_y0
}

/// Solve both transverse slices and derive J₀ and V₀.
pub fn derived_constants(p: &PotentialParams, y_grid: &Grid1D, mass: f64) -> Result<DerivedConstants> {
    let well = y_slice_values(p, CrossSection::Well, y_grid);
    let step = y_slice_values(p, CrossSection::Step, y_grid);
    let e_well = tridiag::solve_transverse(&well, y_grid.h, mass, 1)?;
    let e_step = tridiag::solve_transverse(&step, y_grid.h, mass, 2)?;
    Ok(DerivedConstants {
        e_well_y0: e_well[0],
        e_step_y0: e_step[0],
        e_step_y1: e_step[1],
        j0: coupling_constant(e_step[0], e_step[1])?,
        v0: effective_barrier(e_step[0], e_well[0]),
    })
}

/// Exact number of eigenvalues of `h` strictly below `threshold`, by
/// Sylvester inertia of the shifted factorization. A zero pivot (an
/// eigenvalue of a leading submatrix landing exactly on the threshold) is
/// handled by nudging the shift upward by a vanishing amount.
pub fn count_below(h: &SparseHamiltonian, threshold: f64) -> Result<usize> {
    let scale = threshold.abs().max(1.0);
    let mut last_err = None;
    for attempt in 0..5 {
        let shift = threshold + attempt as f64 * 1e-7 * scale;
        match ldl::factor(h, shift, h.solver_permutation()) {
            Ok(f) => return Ok(f.inertia().0),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Solver("inertia count failed".into())))
}

/// All eigenpairs of `h` below `cutoff`, ascending, unit ℓ₂ norm, signs
/// fixed, each residual verified. The count is certified: inertia at the
/// cutoff must agree with the number of converged pairs.
pub fn solve_lowest(
    h: &SparseHamiltonian,
    cutoff: f64,
    margin: f64,
    opts: &LanczosOptions,
) -> Result<Vec<EigenPair>> {
    let wanted = count_below(h, cutoff + margin)?;
    if wanted == 0 {
        return Ok(Vec::new());
    }
    let mut pairs = lanczos::lowest_k(h, wanted, opts)?;
    pairs.retain(|p| p.value < cutoff);
    let strict = count_below(h, cutoff)?;
    if pairs.len() != strict {
        return Err(Error::Solver(format!(
            "census mismatch: {} converged pairs below the cutoff but inertia counts {strict}",
            pairs.len()
        )));
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeLabel {
    /// Longitudinal excitation count, 1-based.
    pub n_x: usize,
    /// Transverse mode index, 0-based.
    pub n_y: usize,
    /// False when the state is poorly approximated as separable.
    pub separable: bool,
    /// Winning overlap fraction at the probe column.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Labeled(ModeLabel),
    Excluded { reason: String },
}

impl Classification {
    pub fn label(&self) -> Option<&ModeLabel> {
        match self {
            Classification::Labeled(l) => Some(l),
            Classification::Excluded { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    /// Probe column for the transverse overlap, well interior.
    pub x_probe: f64,
    /// Overlap fraction below which a state is flagged non-separable.
    pub separable_threshold: f64,
    /// Both overlaps under this fraction excludes the state.
    pub degenerate_floor: f64,
    /// Relative amplitude under which projection samples are treated as
    /// noise when counting longitudinal sign changes.
    pub noise_floor: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            x_probe: -300.0,
            separable_threshold: 0.9,
            degenerate_floor: 0.5,
            noise_floor: 1e-9,
        }
    }
}

/// Assign (n_x, n_y) to each state by overlap with the 1D transverse modes.
pub fn classify_modes(
    states: &[ScalarField2D],
    well_modes: &[Vec<f64>],
    opts: &ClassifyOptions,
) -> Result<Vec<Classification>> {
    if well_modes.len() < 2 {
        return Err(Error::Config(format!(
            "classification needs the two lowest transverse modes, got {}",
            well_modes.len()
        )));
    }
    let mut out = Vec::with_capacity(states.len());
    for state in states {
        let grid = &state.grid;
        for g in &well_modes[..2] {
            if g.len() != grid.n_y {
                return Err(Error::Config(format!(
                    "transverse mode has {} samples on a {}-row grid",
                    g.len(),
                    grid.n_y
                )));
            }
        }
        let ix = grid.nearest_ix(opts.x_probe)?;
        let column = &state.values[ix * grid.n_y..(ix + 1) * grid.n_y];
        let norm2: f64 = column.iter().map(|v| v * v).sum();
        if norm2 == 0.0 {
            out.push(Classification::Excluded {
                reason: "probe column is identically zero".into(),
            });
            continue;
        }
        let fraction = |g: &[f64]| {
            let dot: f64 = g.iter().zip(column).map(|(a, b)| a * b).sum();
            dot * dot / norm2
        };
        let f0 = fraction(&well_modes[0]);
        let f1 = fraction(&well_modes[1]);
        if f0 < opts.degenerate_floor && f1 < opts.degenerate_floor {
            out.push(Classification::Excluded {
                reason: format!(
                    "no dominant transverse mode at the probe column (fractions {f0:.3}, {f1:.3})"
                ),
            });
            continue;
        }
        let (n_y, overlap) = if f0 >= f1 { (0, f0) } else { (1, f1) };
        let g = &well_modes[n_y];
        let mut projection = Vec::with_capacity(grid.n_x);
        for jx in 0..grid.n_x {
            let col = &state.values[jx * grid.n_y..(jx + 1) * grid.n_y];
            projection.push(g.iter().zip(col).map(|(a, b)| a * b).sum::<f64>());
        }
        let peak = projection.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // Drop near-zero samples first so a noisy crossing is one crossing,
        // then count flips between surviving neighbors.
        let kept: Vec<f64> = projection
            .into_iter()
            .filter(|v| v.abs() > opts.noise_floor * peak)
            .collect();
        let flips = kept.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
        out.push(Classification::Labeled(ModeLabel {
            n_x: 1 + flips,
            n_y,
            separable: overlap >= opts.separable_threshold,
            overlap,
        }));
    }
    Ok(out)
}

/// The bound subspace of one configuration: energies, physically normalized
/// real states, labels, and the constants they were computed with.
pub struct BoundSpectrum {
    pub grid: Grid2D,
    pub energies: Vec<f64>,
    pub states: Vec<ScalarField2D>,
    pub labels: Vec<Classification>,
    pub cutoff: f64,
    pub constants: DerivedConstants,
}

#[derive(Serialize, Deserialize)]
struct SpectrumHeader {
    cutoff: f64,
    constants: DerivedConstants,
}

impl BoundSpectrum {
    /// Scale unit-ℓ₂ eigenvectors to unit physical norm (weight h_x·h_y)
    /// and classify each state.
    pub fn build(
        grid: Grid2D,
        pairs: Vec<EigenPair>,
        well_modes: &[Vec<f64>],
        cutoff: f64,
        constants: DerivedConstants,
        class_opts: &ClassifyOptions,
    ) -> Result<BoundSpectrum> {
        let scale = 1.0 / (grid.h_x * grid.h_y).sqrt();
        let mut energies = Vec::with_capacity(pairs.len());
        let mut states = Vec::with_capacity(pairs.len());
        for pair in pairs {
            if pair.value >= cutoff {
                return Err(Error::Domain(format!(
                    "state at {} meV is not bound (cutoff {cutoff} meV)",
                    pair.value
                )));
            }
            energies.push(pair.value);
            let mut values = pair.vector;
            for v in &mut values {
                *v *= scale;
            }
            states.push(ScalarField2D { grid, values });
        }
        let labels = classify_modes(&states, well_modes, class_opts)?;
        Ok(BoundSpectrum { grid, energies, states, labels, cutoff, constants })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// How many labeled states sit in each transverse series (n_y = 0, 1).
    pub fn series_counts(&self) -> (usize, usize) {
        let mut counts = (0, 0);
        for label in self.labels.iter().filter_map(Classification::label) {
            match label.n_y {
                0 => counts.0 += 1,
                1 => counts.1 += 1,
                _ => {}
            }
        }
        counts
    }

    /// Write the manifest, the constants, and one field file per state.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let header = SpectrumHeader { cutoff: self.cutoff, constants: self.constants };
        let text = toml::to_string(&header)
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        std::fs::write(dir.join("constants.toml"), text)?;
        let mut manifest = BufWriter::new(std::fs::File::create(dir.join("manifest.csv"))?);
        writeln!(manifest, "n,energy_mev,n_x,n_y,separability_flag")?;
        for (i, (e, label)) in self.energies.iter().zip(&self.labels).enumerate() {
            match label {
                Classification::Labeled(l) => writeln!(
                    manifest,
                    "{},{:.11e},{},{},{}",
                    i + 1,
                    e,
                    l.n_x,
                    l.n_y,
                    l.separable
                )?,
                Classification::Excluded { .. } => {
                    writeln!(manifest, "{},{:.11e},,,false", i + 1, e)?
                }
            }
        }
        manifest.flush()?;
        for (i, state) in self.states.iter().enumerate() {
            fieldio::write_real(&dir.join(format!("state_{:03}.f2d", i + 1)), state)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<BoundSpectrum> {
        let text = std::fs::read_to_string(dir.join("constants.toml"))?;
        let header: SpectrumHeader = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("bad constants file: {e}")))?;
        let manifest = BufReader::new(std::fs::File::open(dir.join("manifest.csv"))?);
        let mut energies = Vec::new();
        let mut labels = Vec::new();
        for (lineno, line) in manifest.lines().enumerate() {
            let line = line?;
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 5 {
                return Err(Error::Config(format!(
                    "manifest line {} has {} fields, expected 5",
                    lineno + 1,
                    parts.len()
                )));
            }
            let bad = |what: &str| Error::Config(format!("manifest line {}: bad {what}", lineno + 1));
            energies.push(parts[1].parse::<f64>().map_err(|_| bad("energy"))?);
            if parts[2].is_empty() {
                labels.push(Classification::Excluded {
                    reason: "unclassified in manifest".into(),
                });
            } else {
                labels.push(Classification::Labeled(ModeLabel {
                    n_x: parts[2].parse().map_err(|_| bad("n_x"))?,
                    n_y: parts[3].parse().map_err(|_| bad("n_y"))?,
                    separable: parts[4].parse().map_err(|_| bad("flag"))?,
                    overlap: f64::NAN,
                }));
            }
        }
        let mut states = Vec::with_capacity(energies.len());
        let mut grid: Option<Grid2D> = None;
        for i in 0..energies.len() {
            let state = fieldio::read_real(&dir.join(format!("state_{:03}.f2d", i + 1)))?;
            match grid {
                None => grid = Some(state.grid),
                Some(g) if g == state.grid => {}
                Some(_) => {
                    return Err(Error::Config(format!(
                        "state file {} has a different grid than its siblings",
                        i + 1
                    )))
                }
            }
            states.push(state);
        }
        let grid = grid.ok_or_else(|| {
            Error::MissingArtifact("spectrum directory holds no states".into())
        })?;
        Ok(BoundSpectrum {
            grid,
            energies,
            states,
            labels,
            cutoff: header.cutoff,
            constants: header.constants,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{assemble_1d, assemble_2d};
    use crate::units::MEV_TO_JOULE;

    const MASS: f64 = 0.04337848806734703;

    fn reference_y_grid() -> Grid1D {
        Grid1D::new(-40.0, 40.0, 0.1).unwrap()
    }

    #[test]
    fn coupling_constant_matches_reported_rate() {
        let j0 = coupling_constant(0.743, 0.796).unwrap();
        assert!((j0 - 0.053 / (2.0 * HBAR)).abs() < 1e-15);
        assert!((j0 - 0.040261).abs() < 1e-6);
        let hz_rate = 2.0 * std::f64::consts::PI * 6.34e9 * 1e-12;
        assert!((j0 / hz_rate - 1.0).abs() < 0.02);
    }

    #[test]
    fn equal_step_levels_give_zero_coupling() {
        assert_eq!(coupling_constant(0.743, 0.743).unwrap(), 0.0);
    }

    #[test]
    fn doubling_the_splitting_doubles_the_coupling() {
        let single = coupling_constant(0.7, 0.75).unwrap();
        let double = coupling_constant(0.7, 0.8).unwrap();
        assert!((double - 2.0 * single).abs() < 1e-15);
    }

    #[test]
    fn inverted_step_levels_are_rejected() {
        assert!(coupling_constant(0.796, 0.743).is_err());
    }

    #[test]
    fn effective_barrier_matches_reported_value() {
        let v0 = effective_barrier(0.743, 0.205);
        assert!((v0 - 0.538).abs() < 1e-12);
        assert_eq!(effective_barrier(0.4, 0.4), 0.0);
        let joules = v0 * MEV_TO_JOULE;
        assert!((joules / 0.862e-22 - 1.0).abs() < 5e-3);
    }

    #[test]
    fn derived_constants_on_reference_slices() {
        let p = PotentialParams::default();
        let c = derived_constants(&p, &reference_y_grid(), MASS).unwrap();
        assert!((c.e_well_y0 - 0.205195441700).abs() < 1e-9);
        assert!((c.e_step_y0 - 0.743442794185).abs() < 1e-9);
        assert!((c.e_step_y1 - 0.795881474487).abs() < 1e-9);
        assert!((c.v0 - 0.538247352485).abs() < 1e-9);
        assert!((c.v0 - 0.538).abs() < 0.005);
        let hz_rate = 2.0 * std::f64::consts::PI * 6.34e9 * 1e-12;
        assert!((c.j0 / hz_rate - 1.0).abs() < 0.03);
    }

    #[test]
    fn harmonic_cutoff_returns_certified_census() {
        let p = PotentialParams::default();
        let grid = reference_y_grid();
        let v = y_slice_values(&p, CrossSection::Well, &grid);
        let h = assemble_1d(&grid, &v, MASS).unwrap();
        let pairs = solve_lowest(&h, 2.0, 0.01, &LanczosOptions::default()).unwrap();
        assert_eq!(pairs.len(), 5);
        let hbar_omega = 0.410401424;
        for (k, pair) in pairs.iter().enumerate() {
            let expected = hbar_omega * (k as f64 + 0.5);
            assert!(
                (pair.value / expected - 1.0).abs() < 5e-3,
                "level {k}: {} vs {expected}",
                pair.value
            );
        }
    }

    #[test]
    fn cutoff_below_ground_returns_empty() {
        let p = PotentialParams::default();
        let grid = reference_y_grid();
        let v = y_slice_values(&p, CrossSection::Well, &grid);
        let h = assemble_1d(&grid, &v, MASS).unwrap();
        let pairs = solve_lowest(&h, 0.1, 0.01, &LanczosOptions::default()).unwrap();
        assert!(pairs.is_empty());
    }

    fn small_plane() -> (Grid2D, SparseHamiltonian) {
        let grid = Grid2D::new(0.0, 23.0, 1.0, -3.0, 3.0, 0.5).unwrap();
        let v = ScalarField2D::from_fn(grid, |x, y| 0.08 * y * y + 0.01 * (x * 0.4).sin() + 0.01);
        let h = assemble_2d(&grid, &v, MASS).unwrap();
        (grid, h)
    }

    #[test]
    fn small_grid_matches_dense_solver_below_cutoff() {
        let (_, h) = small_plane();
        let mut dense: Vec<f64> = h.to_dense().symmetric_eigen().eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let cutoff = 0.5 * (dense[7] + dense[8]);
        let pairs = solve_lowest(&h, cutoff, 1e-6, &LanczosOptions::default()).unwrap();
        assert_eq!(pairs.len(), 8);
        for (p, e) in pairs.iter().zip(&dense) {
            assert!((p.value - e).abs() < 1e-9 * e.abs().max(1.0));
        }
    }

    /// Separable configuration: a y-harmonic channel that is flat along x,
    /// so every eigenstate is exactly (box mode in x) × (oscillator in y).
    fn separable_profile(y: f64) -> f64 {
        0.03 * y * y
    }

    fn separable_spectrum() -> BoundSpectrum {
        let grid = Grid2D::new(0.0, 30.0, 1.0, -6.0, 6.0, 0.4).unwrap();
        let v = ScalarField2D::from_fn(grid, |_, y| separable_profile(y));
        let h = assemble_2d(&grid, &v, MASS).unwrap();
        let y_values: Vec<f64> = grid.y_axis().coords().iter().map(|&y| separable_profile(y)).collect();
        let (y_levels, y_modes) = tridiag::transverse_modes(&y_values, grid.h_y, MASS, 2).unwrap();
        let cutoff = y_levels[0] + 1.3;
        let pairs = solve_lowest(&h, cutoff, 0.001, &LanczosOptions::default()).unwrap();
        assert!(pairs.len() >= 6, "expected several separable states, found {}", pairs.len());
        let constants = DerivedConstants {
            e_well_y0: y_levels[0],
            e_step_y0: 0.0,
            e_step_y1: 0.0,
            j0: 0.0,
            v0: 0.0,
        };
        let opts = ClassifyOptions { x_probe: 12.0, ..Default::default() };
        BoundSpectrum::build(grid, pairs, &y_modes, cutoff, constants, &opts).unwrap()
    }

    #[test]
    fn separable_states_get_consistent_labels() {
        let spectrum = separable_spectrum();
        let grid = spectrum.grid;
        let box_levels = tridiag::solve_transverse(&vec![0.0; grid.n_x], grid.h_x, MASS, 8).unwrap();
        let y_values: Vec<f64> =
            grid.y_axis().coords().iter().map(|&y| separable_profile(y)).collect();
        let y_levels = tridiag::solve_transverse(&y_values, grid.h_y, MASS, 2).unwrap();
        let first = spectrum.labels[0].label().expect("ground state labeled");
        assert_eq!((first.n_x, first.n_y), (1, 0));
        for (e, label) in spectrum.energies.iter().zip(&spectrum.labels) {
            let l = label.label().expect("separable state labeled");
            let predicted = box_levels[l.n_x - 1] + y_levels[l.n_y];
            assert!(
                (e - predicted).abs() < 1e-8,
                "({}, {}) predicts {predicted}, state has {e}",
                l.n_x,
                l.n_y
            );
            assert!(l.separable, "overlap {} unexpectedly below threshold", l.overlap);
            assert!(l.overlap > 0.99);
        }
    }

    #[test]
    fn state_in_a_higher_transverse_mode_is_excluded() {
        let grid = Grid2D::new(0.0, 30.0, 1.0, -6.0, 6.0, 0.4).unwrap();
        let vy = |y: f64| 0.12 * y * y;
        let y_values: Vec<f64> = grid.y_axis().coords().iter().map(|&y| vy(y)).collect();
        let (_, y_modes) = tridiag::transverse_modes(&y_values, grid.h_y, MASS, 3).unwrap();
        let g2 = y_modes[2].clone();
        let span = grid.x_max - grid.x_min;
        let mut state = ScalarField2D::zeros(grid);
        for ix in 0..grid.n_x {
            let xf = (std::f64::consts::PI * (grid.x(ix) - grid.x_min) / span).sin();
            for iy in 0..grid.n_y {
                state.set(ix, iy, xf * g2[iy]);
            }
        }
        let opts = ClassifyOptions { x_probe: 12.0, ..Default::default() };
        let classes = classify_modes(&[state], &y_modes[..2].to_vec(), &opts).unwrap();
        match &classes[0] {
            Classification::Excluded { reason } => {
                assert!(reason.contains("no dominant transverse mode"))
            }
            Classification::Labeled(l) => panic!("expected exclusion, got ({}, {})", l.n_x, l.n_y),
        }
    }

    #[test]
    fn raising_the_potential_never_lowers_a_level() {
        let grid = Grid2D::new(0.0, 14.0, 1.0, -3.0, 3.0, 0.6).unwrap();
        let base = ScalarField2D::from_fn(grid, |_, y| 0.1 * y * y);
        let bumped = ScalarField2D::from_fn(grid, |x, y| {
            0.1 * y * y + 0.3 * (-((x - 7.0) / 2.0).powi(2)).exp()
        });
        let ha = assemble_2d(&grid, &base, MASS).unwrap();
        let hb = assemble_2d(&grid, &bumped, MASS).unwrap();
        let a = lanczos::lowest_k(&ha, 6, &LanczosOptions::default()).unwrap();
        let b = lanczos::lowest_k(&hb, 6, &LanczosOptions::default()).unwrap();
        for (pa, pb) in a.iter().zip(&b) {
            assert!(pb.value >= pa.value - 1e-10);
        }
    }

    #[test]
    fn halving_the_spacing_barely_moves_low_levels() {
        // Oscillator lengths of a few µm, spacings well under them, and
        // turning points far from the walls, like the real configuration.
        let coarse = Grid2D::new(0.0, 60.0, 0.4, -20.0, 20.0, 0.5).unwrap();
        let fine = coarse.scaled(0.5).unwrap();
        let profile = |x: f64, y: f64| 0.008 * (x - 30.0).powi(2) + 0.008432 * y * y;
        let pairs_c = lanczos::lowest_k(
            &assemble_2d(&coarse, &ScalarField2D::from_fn(coarse, profile), MASS).unwrap(),
            10,
            &LanczosOptions::default(),
        )
        .unwrap();
        let pairs_f = lanczos::lowest_k(
            &assemble_2d(&fine, &ScalarField2D::from_fn(fine, profile), MASS).unwrap(),
            10,
            &LanczosOptions::default(),
        )
        .unwrap();
        for (c, f) in pairs_c.iter().zip(&pairs_f) {
            assert!(
                (c.value / f.value - 1.0).abs() < 5e-3,
                "{} vs {}",
                c.value,
                f.value
            );
        }
    }

    #[test]
    fn spectrum_round_trips_through_disk() {
        let spectrum = separable_spectrum();
        let dir = tempfile::tempdir().unwrap();
        spectrum.save(dir.path()).unwrap();
        let loaded = BoundSpectrum::load(dir.path()).unwrap();
        assert_eq!(loaded.len(), spectrum.len());
        assert_eq!(loaded.grid, spectrum.grid);
        assert!((loaded.cutoff - spectrum.cutoff).abs() < 1e-15);
        for (a, b) in spectrum.energies.iter().zip(&loaded.energies) {
            assert!((a - b).abs() < 1e-11 * a.abs());
        }
        for (a, b) in spectrum.states.iter().zip(&loaded.states) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        for (a, b) in spectrum.labels.iter().zip(&loaded.labels) {
            let (la, lb) = (a.label().unwrap(), b.label().unwrap());
            assert_eq!((la.n_x, la.n_y, la.separable), (lb.n_x, lb.n_y, lb.separable));
        }
        let (s0, s1) = loaded.series_counts();
        assert_eq!(s0 + s1, loaded.len());
    }

    #[test]
    fn unbound_pair_is_rejected_at_build() {
        let spectrum = separable_spectrum();
        let pair = EigenPair {
            value: spectrum.cutoff + 0.1,
            residual: 0.0,
            vector: vec![0.0; spectrum.grid.len()],
        };
        let err = BoundSpectrum::build(
            spectrum.grid,
            vec![pair],
            &[vec![0.0; spectrum.grid.n_y], vec![0.0; spectrum.grid.n_y]],
            spectrum.cutoff,
            spectrum.constants,
            &ClassifyOptions::default(),
        );
        assert!(err.is_err());
    }
}

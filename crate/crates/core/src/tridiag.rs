//! Symmetric tridiagonal eigensolver: Sturm-count bisection for the lowest
//! eigenvalues, inverse iteration for their vectors. This is the workhorse
//! for the 1D transverse problems, where the finite-difference Hamiltonian
//! is tridiagonal and only the bottom of the spectrum matters.

use crate::error::{Error, Result};
use crate::units::HBAR;

/// Number of eigenvalues strictly below `x`, by the Sturm sign count of the
/// LDLᵀ pivots of T − xI.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0usize;
    let mut d = diag[0] - x;
    if d < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let o = off[i - 1];
        let mut denom = d;
        if denom == 0.0 {
            denom = f64::MIN_POSITIVE;
        }
        d = diag[i] - x - o * o / denom;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `k` eigenvalues, ascending.
pub fn lowest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 2 || off.len() != n - 1 {
        return Err(Error::Config(format!(
            "tridiagonal sizes inconsistent: {n} diagonal, {} off-diagonal",
            off.len()
        )));
    }
    if k == 0 || k > n {
        return Err(Error::Config(format!("requested {k} of {n} eigenvalues")));
    }
    let radius = |i: usize| -> f64 {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        left + right
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        lo = lo.min(diag[i] - radius(i));
        hi = hi.max(diag[i] + radius(i));
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let (mut a, mut b) = (lo, hi);
        while b - a > 1e-14 * scale {
            let mid = 0.5 * (a + b);
            if sturm_count(diag, off, mid) > j {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

/// Solve (T − λI)v = b with partial pivoting; row swaps during elimination
/// produce a second superdiagonal. Overwrites and returns `b`.
fn shifted_solve(diag: &[f64], off: &[f64], lambda: f64, mut b: Vec<f64>) -> Vec<f64> {
    let n = diag.len();
    let safe = |v: f64| if v == 0.0 { f64::MIN_POSITIVE } else { v };
    let mut d: Vec<f64> = diag.iter().map(|v| v - lambda).collect();
    let mut du: Vec<f64> = off.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    for i in 0..n - 1 {
        let dl = off[i];
        if dl.abs() <= d[i].abs() {
            let m = dl / safe(d[i]);
            d[i + 1] -= m * du[i];
            b[i + 1] -= m * b[i];
        } else {
            // Pivot on the subdiagonal entry: swap rows i and i+1.
            let m = d[i] / dl;
            let old_du_i = du[i];
            d[i] = dl;
            du[i] = d[i + 1];
            d[i + 1] = old_du_i - m * d[i + 1];
            if i + 1 < n - 1 {
                du2[i] = du[i + 1];
                du[i + 1] *= -m;
            }
            b.swap(i, i + 1);
            b[i + 1] -= m * b[i];
        }
    }
    b[n - 1] /= safe(d[n - 1]);
    if n >= 2 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / safe(d[n - 2]);
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / safe(d[i]);
    }
    b
}

/// Lowest `k` eigenpairs. Vectors are ℓ₂-normalized, mutually orthogonalized
/// within near-degenerate clusters, with the largest-magnitude entry positive.
pub fn lowest_eigenpairs(diag: &[f64], off: &[f64], k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let values = lowest_eigenvalues(diag, off, k)?;
    let n = diag.len();
    let scale = diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &lambda) in values.iter().enumerate() {
        // Deterministic quasi-random start keeps runs reproducible.
        let mut v: Vec<f64> = (0..n)
            .map(|i| (((i * 2654435761 + j * 40503 + 12345) & 0xffff) as f64 / 65536.0) - 0.5)
            .collect();
        for _ in 0..4 {
            v = shifted_solve(diag, off, lambda, v);
            for (i, prev) in vectors.iter().enumerate() {
                if (values[i] - lambda).abs() < 1e-8 * scale {
                    let dot: f64 = prev.iter().zip(&v).map(|(a, b)| a * b).sum();
                    v.iter_mut().zip(prev).for_each(|(x, p)| *x -= dot * p);
                }
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        fix_sign(&mut v);
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// Flip so the entry of largest magnitude is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Assemble the transverse finite-difference Hamiltonian for sampled
/// potential values (Dirichlet walls one spacing outside the mesh) and
/// return the lowest `k` eigenvalues in meV.
pub fn solve_transverse(v: &[f64], h: f64, mass: f64, k: usize) -> Result<Vec<f64>> {
    let (diag, off) = transverse_tridiagonal(v, h, mass)?;
    lowest_eigenvalues(&diag, &off, k)
}

/// As [`solve_transverse`] but with eigenvectors.
pub fn transverse_modes(v: &[f64], h: f64, mass: f64, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (diag, off) = transverse_tridiagonal(v, h, mass)?;
    lowest_eigenpairs(&diag, &off, k)
}

fn transverse_tridiagonal(v: &[f64], h: f64, mass: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if v.len() < 2 || !(h > 0.0) || !(mass > 0.0) {
        return Err(Error::Config(format!(
            "bad transverse problem: {} nodes, spacing {h}, mass {mass}",
            v.len()
        )));
    }
    let t = HBAR * HBAR / (2.0 * mass * h * h);
    let diag: Vec<f64> = v.iter().map(|&p| 2.0 * t + p).collect();
    let off = vec![-t; v.len() - 1];
    Ok((diag, off))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use crate::potential::{calibrate, y_slice_values, CrossSection, PotentialParams};
    use crate::units::mass_to_internal;

    fn mass() -> f64 {
        mass_to_internal(6.95e-36).unwrap()
    }

    fn y_grid() -> Grid1D {
        Grid1D::new(-40.0, 40.0, 0.1).unwrap()
    }

    #[test]
    fn two_by_two_matches_closed_form() {
        let (diag, off) = (vec![2.0, 3.0], vec![0.5]);
        let e = lowest_eigenvalues(&diag, &off, 2).unwrap();
        let root = (0.25f64 + 0.25).sqrt();
        assert!((e[0] - (2.5 - root)).abs() < 1e-12);
        assert!((e[1] - (2.5 + root)).abs() < 1e-12);
    }

    #[test]
    fn box_ground_level_matches_analytic_formula() {
        // Walls at 0 and 100 µm sit one spacing outside the [h, L−h] mesh.
        let grid = Grid1D::new(0.5, 99.5, 0.5).unwrap();
        let v = vec![0.0; grid.n];
        let e = solve_transverse(&v, grid.h, mass(), 1).unwrap();
        let analytic = HBAR * HBAR * std::f64::consts::PI.powi(2) / (2.0 * mass() * 100.0f64.powi(2));
        assert!((analytic - 0.004928637).abs() < 1e-9);
        assert!(((e[0] - analytic) / analytic).abs() < 1e-3);
        assert!((e[0] - 0.004928536).abs() < 1e-9);
    }

    #[test]
    fn well_slice_levels_are_harmonic() {
        let p = PotentialParams::default();
        let v = y_slice_values(&p, CrossSection::Well, &y_grid());
        let e = solve_transverse(&v, 0.1, mass(), 6).unwrap();
        let frozen = [
            0.205195441700,
            0.615575784286,
            1.025935044437,
            1.436273220525,
            1.846590310928,
            2.256886314030,
        ];
        for (a, b) in e.iter().zip(frozen) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        let omega = (2.0 * p.v_s * p.curvature / mass()).sqrt();
        assert!((omega - 0.62351).abs() < 1e-5);
        for k in 1..6 {
            let spacing = e[k] - e[k - 1];
            assert!(((spacing - HBAR * omega) / (HBAR * omega)).abs() < 5e-3, "k = {k}");
        }
        assert!((e[0] - 0.205).abs() < 0.003);
    }

    #[test]
    fn step_slice_levels_match_frozen_values() {
        let p = PotentialParams::default();
        let v = y_slice_values(&p, CrossSection::Step, &y_grid());
        let e = solve_transverse(&v, 0.1, mass(), 2).unwrap();
        assert!((e[0] - 0.743442794185).abs() < 1e-9);
        assert!((e[1] - 0.795881474487).abs() < 1e-9);
        assert!((e[0] - 0.743).abs() < 0.003);
        assert!((e[1] - 0.796).abs() < 0.003);
    }

    #[test]
    fn eigenvectors_satisfy_residual_and_orthonormality() {
        let p = PotentialParams::default();
        let v = y_slice_values(&p, CrossSection::Well, &y_grid());
        let (diag, off) = transverse_tridiagonal(&v, 0.1, mass()).unwrap();
        let (e, vecs) = lowest_eigenpairs(&diag, &off, 3).unwrap();
        let n = diag.len();
        for (lambda, vec) in e.iter().zip(&vecs) {
            let mut max_res = 0.0f64;
            for i in 0..n {
                let mut hv = diag[i] * vec[i];
                if i > 0 {
                    hv += off[i - 1] * vec[i - 1];
                }
                if i + 1 < n {
                    hv += off[i] * vec[i + 1];
                }
                max_res = max_res.max((hv - lambda * vec[i]).abs());
            }
            assert!(max_res < 1e-10 * diag[0].abs().max(1.0), "residual {max_res}");
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = vecs[i].iter().zip(&vecs[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "({i}, {j}) -> {dot}");
            }
        }
    }

    #[test]
    fn ground_mode_is_nodeless_and_sign_fixed() {
        let p = PotentialParams::default();
        let v = y_slice_values(&p, CrossSection::Well, &y_grid());
        let (diag, off) = transverse_tridiagonal(&v, 0.1, mass()).unwrap();
        let (_, vecs) = lowest_eigenpairs(&diag, &off, 2).unwrap();
        assert!(vecs[0].iter().all(|&x| x > -1e-12));
        let kept: Vec<f64> = vecs[1].iter().copied().filter(|x| x.abs() > 1e-9).collect();
        let flips = kept.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
        assert_eq!(flips, 1);
    }

    #[test]
    fn calibration_recovers_reference_scale_parameters() {
        let m = mass();
        let solver = move |v: &[f64], h: f64, k: usize| solve_transverse(v, h, m, k);
        let tuned = calibrate(
            0.039835,
            0.538,
            &y_grid(),
            solver,
            PotentialParams::default(),
        )
        .unwrap();
        assert!(((tuned.v_s - 0.1581) / 0.1581).abs() < 0.02, "v_s = {}", tuned.v_s);
        assert!(((tuned.h0 - 3.587) / 3.587).abs() < 0.02, "h0 = {}", tuned.h0);
    }

    #[test]
    fn zero_step_height_target_is_rejected() {
        let m = mass();
        let solver = move |v: &[f64], h: f64, k: usize| solve_transverse(v, h, m, k);
        assert!(calibrate(0.039835, 0.0, &y_grid(), solver, PotentialParams::default()).is_err());
    }
}

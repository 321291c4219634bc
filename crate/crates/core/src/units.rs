//! Internal unit system: lengths in µm, energies in meV, times in ps.
//!
//! In these units every quantity in the problem is O(1): guide geometry is
//! tens of µm, level energies are fractions of a meV, tunneling periods are
//! hundreds of ps. Masses carry the derived unit meV·ps²/µm².

use crate::error::{Error, Result};

/// Reduced Planck constant in meV·ps.
pub const HBAR: f64 = 0.6582119569;

/// Conversion factor: 1 kg expressed in meV·ps²/µm².
pub const KG_TO_INTERNAL: f64 = 6.241509074e33;

/// One meV expressed in joules (for reporting only).
pub const MEV_TO_JOULE: f64 = 1.602176634e-22;

/// Converts a mass in kilograms to internal units (meV·ps²/µm²).
pub fn mass_to_internal(mass_kg: f64) -> Result<f64> {
    if !(mass_kg > 0.0) {
        return Err(Error::Domain(format!(
            "mass must be positive, got {mass_kg} kg"
        )));
    }
    Ok(mass_kg * KG_TO_INTERNAL)
}

/// Converts an internal-unit mass back to kilograms.
pub fn mass_to_kg(mass_internal: f64) -> f64 {
    mass_internal / KG_TO_INTERNAL
}

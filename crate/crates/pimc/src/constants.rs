//! Physical constants in Hartree atomic units.

/// Kelvin per hartree: T[K] = HARTREE_TO_KELVIN / beta[1/Ha].
pub const HARTREE_TO_KELVIN: f64 = 315_775.02;

/// Wavenumbers per hartree.
pub const HARTREE_TO_INV_CM: f64 = 219_474.63;

/// Proton mass in electron masses (CODATA).
pub const PROTON_MASS: f64 = 1836.152_672;

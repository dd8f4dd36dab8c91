//! Path-integral Monte Carlo for small Coulomb systems.
//!
//! Electrons and nuclei are sampled together in a single discretized
//! imaginary-time path integral, with an exact tabulated two-body Coulomb
//! action in place of the bare potential. Molecular observables come
//! straight out of the sampled paths:
//!
//! * total energies from thermodynamic and virial estimators,
//! * bond lengths from the separation-separation correlation function,
//! * vibrational frequencies from its Matsubara-frequency transform,
//! * static polarizabilities from dipole-dipole correlators or from
//!   finite-field response.
//!
//! Everything is expressed in Hartree atomic units (energies in Ha,
//! lengths in bohr, times and inverse temperatures in 1/Ha).
//!
//! The `examples/` directory holds one runnable program per capability;
//! the `pimc` binary exposes the same pipeline as `tabulate`, `run`,
//! `analyze` and `scan` subcommands driven by a TOML configuration file.

pub mod action;
pub mod analysis;
pub mod cli;
pub mod constants;
pub mod estimators;
pub mod geom;
pub mod greens;
pub mod model;
pub mod oracles;
pub mod pair_action;
pub mod sampler;

pub use geom::Vec3;
pub use model::{PathConfiguration, SamplerSettings, SpeciesSpec, SystemSpec, Validated};

//! Domain types, unit conventions, and validation of simulation
//! specifications and initial path configurations.
//!
//! All quantities are in Hartree atomic units: masses in electron masses,
//! charges in elementary charges, lengths in bohr, energies in Ha, and
//! inverse temperature / imaginary time in 1/Ha.

use crate::constants::HARTREE_TO_KELVIN;
use crate::geom::Vec3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// One species of particles: identical mass and charge, either all mobile
/// or all pinned to fixed positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeciesSpec {
    pub name: String,
    /// Mass in electron masses (electron = 1).
    pub mass: f64,
    /// Charge in elementary charges (electron = -1, proton = +1).
    pub charge: f64,
    pub count: usize,
    /// If present, these particles never move. Length must equal `count`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_positions: Option<Vec<[f64; 3]>>,
    /// Optional starting coordinates for mobile particles (bohr).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_positions: Option<Vec<[f64; 3]>>,
}

/// External harmonic confinement 1/2 m omega^2 |r|^2 applied to every
/// mobile particle. Used by the oscillator benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPotential {
    /// Oscillator frequency in Ha.
    pub omega: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    ThermodynamicEnergy,
    VirialEnergy,
    Polarization,
    Separation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatorKind {
    /// Internuclear-separation autocorrelation <D(tau) D(0)>.
    Separation,
    /// Total-dipole autocorrelation, one accumulator per Cartesian axis.
    Dipole,
}

/// Requested estimators and imaginary-time correlators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputsSpec {
    #[serde(default)]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default)]
    pub correlators: Vec<CorrelatorKind>,
    /// Species names of the separation pair; a single species listed twice
    /// designates its first two particles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation_pair: Option<[String; 2]>,
}

fn default_displace_step() -> f64 {
    0.5
}
fn default_equilibration() -> f64 {
    0.2
}
fn default_measurement_interval() -> usize {
    1
}

/// Monte Carlo schedule: move mix, block structure and parallel chains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerSettings {
    /// Levels of the multilevel bisection move; windows span 2^levels links.
    pub bisection_levels: u32,
    pub sweeps_per_block: usize,
    pub n_blocks: usize,
    pub n_chains: usize,
    pub rng_seed: u64,
    /// Probability per particle per sweep of attempting a rigid displacement.
    pub displace_move_probability: f64,
    /// Maximum displacement step per Cartesian component (bohr).
    #[serde(default = "default_displace_step")]
    pub displace_max_step: f64,
    /// Fraction of the blocks discarded as equilibration.
    #[serde(default = "default_equilibration")]
    pub equilibration_fraction: f64,
    /// Sweeps between estimator/correlator measurements.
    #[serde(default = "default_measurement_interval")]
    pub measurement_interval: usize,
    /// Number of imaginary-time bins for correlators; must divide the slice
    /// count. Defaults to the largest divisor of N not exceeding 2048.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlator_bins: Option<usize>,
    /// Per-species override of `bisection_levels`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bisection_levels_override: BTreeMap<String, u32>,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        SamplerSettings {
            bisection_levels: 3,
            sweeps_per_block: 1000,
            n_blocks: 20,
            n_chains: 1,
            rng_seed: 1,
            displace_move_probability: 0.1,
            displace_max_step: default_displace_step(),
            equilibration_fraction: default_equilibration(),
            measurement_interval: default_measurement_interval(),
            correlator_bins: None,
            bisection_levels_override: BTreeMap::new(),
        }
    }
}

/// Full declarative description of one simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub species: Vec<SpeciesSpec>,
    /// Inverse temperature in 1/Ha.
    pub beta: f64,
    /// Imaginary-time step in 1/Ha; beta/delta_tau must be an integer >= 2.
    pub delta_tau: f64,
    /// Uniform electric field in atomic units (may be zero).
    #[serde(default)]
    pub electric_field: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_potential: Option<HarmonicPotential>,
    pub sampling: SamplerSettings,
    #[serde(default)]
    pub outputs: OutputsSpec,
}

/// A single particle flattened out of the species list.
#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub species: usize,
    pub mass: f64,
    pub charge: f64,
    pub fixed: Option<Vec3>,
    pub start: Option<Vec3>,
}

impl Particle {
    pub fn is_mobile(&self) -> bool {
        self.fixed.is_none()
    }
}

/// An unordered charged species pair that needs a pair action.
///
/// Fixed particles enter the relative-coordinate problem as infinite-mass
/// centers, so the reduced mass of a mobile/fixed pair is the mobile mass.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRequirement {
    pub species_a: usize,
    pub species_b: usize,
    /// Reduced mass of the relative coordinate.
    pub mu: f64,
    /// Product of the charges.
    pub z: f64,
    /// Both species fixed: the pair term is a constant of the sampling.
    pub both_fixed: bool,
}

/// A validated spec with derived quantities attached.
#[derive(Clone, Debug, PartialEq)]
pub struct Validated {
    pub system: SystemSpec,
    /// Slice count N = beta / delta_tau.
    pub n_slices: usize,
    pub particles: Vec<Particle>,
    /// Indices of mobile particles.
    pub mobile: Vec<usize>,
    /// Charged unordered species pairs (including same-species pairs).
    pub pairs: Vec<PairRequirement>,
    /// Particle indices of the designated separation pair, if any.
    pub separation_pair: Option<(usize, usize)>,
    /// Correlator bin count (divides n_slices).
    pub correlator_bins: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// All validation failures for a spec, each tagged with its field path.
#[derive(Debug, thiserror::Error)]
pub struct ValidationErrors(pub Vec<FieldError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid system specification:")?;
        for e in &self.0 {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

/// Largest divisor of `n` that does not exceed `target`.
pub fn largest_divisor_at_most(n: usize, target: usize) -> usize {
    let mut best = 1;
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            if d <= target && d > best {
                best = d;
            }
            let q = n / d;
            if q <= target && q > best {
                best = q;
            }
        }
        d += 1;
    }
    best
}

/// Check all invariants of `spec` and attach derived quantities.
///
/// Every violated invariant is reported with its field path; the spec is
/// rejected as a whole if any check fails.
pub fn validate_spec(spec: &SystemSpec) -> Result<Validated, ValidationErrors> {
    let mut errors = Vec::new();
    let mut err = |path: &str, message: String| {
        errors.push(FieldError { path: path.to_string(), message });
    };

    if !(spec.beta > 0.0) {
        err("beta", format!("must be positive, got {}", spec.beta));
    }
    if !(spec.delta_tau > 0.0) {
        err("delta_tau", format!("must be positive, got {}", spec.delta_tau));
    }

    let mut n_slices = 0usize;
    if spec.beta > 0.0 && spec.delta_tau > 0.0 {
        let ratio = spec.beta / spec.delta_tau;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            err(
                "delta_tau",
                format!("beta/delta_tau = {ratio} is not an integer slice count"),
            );
        } else if n < 2.0 {
            err("delta_tau", format!("slice count N = {n} must be at least 2"));
        } else {
            n_slices = n as usize;
        }
    }

    if spec.species.is_empty() {
        err("species", "at least one species is required".into());
    }
    for (i, sp) in spec.species.iter().enumerate() {
        let base = format!("species[{i}]");
        if !(sp.mass > 0.0) {
            err(&format!("{base}.mass"), format!("must be positive, got {}", sp.mass));
        }
        if sp.count < 1 {
            err(&format!("{base}.count"), "must be at least 1".into());
        }
        if let Some(fixed) = &sp.fixed_positions {
            if fixed.len() != sp.count {
                err(
                    &format!("{base}.fixed_positions"),
                    format!("has {} entries but count = {}", fixed.len(), sp.count),
                );
            }
        }
        if let Some(start) = &sp.start_positions {
            if start.len() != sp.count {
                err(
                    &format!("{base}.start_positions"),
                    format!("has {} entries but count = {}", start.len(), sp.count),
                );
            }
            if sp.fixed_positions.is_some() {
                err(
                    &format!("{base}.start_positions"),
                    "fixed species cannot also have start positions".into(),
                );
            }
        }
        for (j, other) in spec.species.iter().enumerate().take(i) {
            if other.name == sp.name {
                err(&format!("{base}.name"), format!("duplicates species[{j}].name"));
            }
        }
    }

    let s = &spec.sampling;
    if s.bisection_levels < 1 {
        err("sampling.bisection_levels", "must be at least 1".into());
    }
    if n_slices > 0 && s.bisection_levels >= 1 {
        let window = 1usize << s.bisection_levels;
        if window >= n_slices {
            err(
                "sampling.bisection_levels",
                format!("2^{} = {window} must be smaller than N = {n_slices}", s.bisection_levels),
            );
        }
    }
    for (name, lv) in &s.bisection_levels_override {
        if !spec.species.iter().any(|sp| &sp.name == name) {
            err("sampling.bisection_levels_override", format!("unknown species {name:?}"));
        }
        if *lv < 1 || (n_slices > 0 && (1usize << *lv) >= n_slices) {
            err(
                "sampling.bisection_levels_override",
                format!("level {lv} for {name:?} out of range for N = {n_slices}"),
            );
        }
    }
    if s.sweeps_per_block == 0 {
        err("sampling.sweeps_per_block", "must be positive".into());
    }
    if s.n_chains == 0 {
        err("sampling.n_chains", "must be at least 1".into());
    }
    if !(0.0..=1.0).contains(&s.displace_move_probability) {
        err(
            "sampling.displace_move_probability",
            format!("must lie in [0, 1], got {}", s.displace_move_probability),
        );
    }
    if !(s.displace_max_step > 0.0) {
        err("sampling.displace_max_step", "must be positive".into());
    }
    if !(0.0..1.0).contains(&s.equilibration_fraction) {
        err(
            "sampling.equilibration_fraction",
            format!("must lie in [0, 1), got {}", s.equilibration_fraction),
        );
    }
    let n_equil = (s.n_blocks as f64 * s.equilibration_fraction).floor() as usize;
    if s.n_blocks.saturating_sub(n_equil) < 2 {
        err(
            "sampling.n_blocks",
            format!(
                "{} blocks leave fewer than 2 measured blocks after discarding {n_equil}",
                s.n_blocks
            ),
        );
    }
    if s.measurement_interval == 0 {
        err("sampling.measurement_interval", "must be at least 1".into());
    }

    let correlator_bins = match s.correlator_bins {
        Some(b) => {
            if b == 0 || (n_slices > 0 && n_slices % b != 0) {
                err(
                    "sampling.correlator_bins",
                    format!("{b} does not divide the slice count {n_slices}"),
                );
            }
            b
        }
        None => {
            if n_slices > 0 {
                largest_divisor_at_most(n_slices, 2048)
            } else {
                0
            }
        }
    };

    // Flatten particles.
    let mut particles = Vec::new();
    for (si, sp) in spec.species.iter().enumerate() {
        for k in 0..sp.count {
            particles.push(Particle {
                species: si,
                mass: sp.mass,
                charge: sp.charge,
                fixed: sp.fixed_positions.as_ref().map(|f| Vec3::from(f[k.min(f.len() - 1)])),
                start: sp.start_positions.as_ref().map(|p| Vec3::from(p[k.min(p.len() - 1)])),
            });
        }
    }
    let mobile: Vec<usize> =
        particles.iter().enumerate().filter(|(_, p)| p.is_mobile()).map(|(i, _)| i).collect();

    // Charged species pairs with reduced masses (fixed species count as
    // infinite-mass centers).
    let mut pairs = Vec::new();
    for i in 0..spec.species.len() {
        for j in i..spec.species.len() {
            let (a, b) = (&spec.species[i], &spec.species[j]);
            if i == j && a.count < 2 {
                continue;
            }
            let z = a.charge * b.charge;
            if z == 0.0 {
                continue;
            }
            let a_fixed = a.fixed_positions.is_some();
            let b_fixed = b.fixed_positions.is_some();
            let mu = match (a_fixed, b_fixed) {
                (true, true) => f64::INFINITY,
                (true, false) => b.mass,
                (false, true) => a.mass,
                (false, false) => a.mass * b.mass / (a.mass + b.mass),
            };
            pairs.push(PairRequirement {
                species_a: i,
                species_b: j,
                mu,
                z,
                both_fixed: a_fixed && b_fixed,
            });
        }
    }

    // Resolve the separation pair if anything needs it.
    let needs_separation = spec.outputs.estimators.contains(&EstimatorKind::Separation)
        || spec.outputs.correlators.contains(&CorrelatorKind::Separation);
    let mut separation_pair = None;
    if let Some([na, nb]) = &spec.outputs.separation_pair {
        let find = |name: &str| spec.species.iter().position(|sp| sp.name == name);
        match (find(na), find(nb)) {
            (Some(ia), Some(ib)) if ia == ib => {
                if spec.species[ia].count < 2 {
                    err(
                        "outputs.separation_pair",
                        format!("species {na:?} has fewer than 2 particles"),
                    );
                } else {
                    let first = particle_offset(&spec.species, ia);
                    separation_pair = Some((first, first + 1));
                }
            }
            (Some(ia), Some(ib)) => {
                separation_pair =
                    Some((particle_offset(&spec.species, ia), particle_offset(&spec.species, ib)));
            }
            _ => err("outputs.separation_pair", format!("unknown species in [{na:?}, {nb:?}]")),
        }
    } else if needs_separation {
        err(
            "outputs.separation_pair",
            "required by the separation estimator/correlator but missing".into(),
        );
    }

    if errors.is_empty() {
        Ok(Validated {
            system: spec.clone(),
            n_slices,
            particles,
            mobile,
            pairs,
            separation_pair,
            correlator_bins,
        })
    } else {
        Err(ValidationErrors(errors))
    }
}

fn particle_offset(species: &[SpeciesSpec], index: usize) -> usize {
    species[..index].iter().map(|s| s.count).sum()
}

/// The discretized closed imaginary-time paths of all particles.
///
/// Beads are stored particle-major: bead (p, n) is the position of particle
/// `p` on slice `n`, n = 0..N-1, with cyclic closure bead(p, N) = bead(p, 0).
#[derive(Clone, Debug, PartialEq)]
pub struct PathConfiguration {
    pub n_slices: usize,
    pub n_particles: usize,
    pub beads: Vec<Vec3>,
    pub species_of_particle: Vec<usize>,
}

impl PathConfiguration {
    #[inline]
    pub fn bead(&self, particle: usize, slice: usize) -> Vec3 {
        self.beads[particle * self.n_slices + (slice % self.n_slices)]
    }

    #[inline]
    pub fn set_bead(&mut self, particle: usize, slice: usize, r: Vec3) {
        let n = self.n_slices;
        self.beads[particle * n + (slice % n)] = r;
    }

    /// Path-average position of one particle.
    pub fn centroid(&self, particle: usize) -> Vec3 {
        let n = self.n_slices;
        let mut c = Vec3::default();
        for slice in 0..n {
            c += self.beads[particle * n + slice];
        }
        c.scale(1.0 / n as f64)
    }
}

/// Build the starting configuration: every bead of each particle at a single
/// point (a classical configuration). Mobile particles sit at their declared
/// start coordinates, or at a small random offset from the origin; fixed
/// particles sit at their pinned positions on all slices.
pub fn build_initial_configuration<R: Rng>(spec: &Validated, rng: &mut R) -> PathConfiguration {
    let n = spec.n_slices;
    let n_particles = spec.particles.len();
    let mut beads = Vec::with_capacity(n * n_particles);
    for p in &spec.particles {
        let site = if let Some(f) = p.fixed {
            f
        } else if let Some(s) = p.start {
            s
        } else {
            Vec3::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            )
        };
        beads.extend(std::iter::repeat(site).take(n));
    }
    PathConfiguration {
        n_slices: n,
        n_particles,
        beads,
        species_of_particle: spec.particles.iter().map(|p| p.species).collect(),
    }
}

/// Temperature in kelvin corresponding to the spec's inverse temperature.
pub fn temperature_of(spec: &SystemSpec) -> f64 {
    HARTREE_TO_KELVIN / spec.beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::PROTON_MASS;

    pub fn sho_spec() -> SystemSpec {
        SystemSpec {
            species: vec![SpeciesSpec {
                name: "particle".into(),
                mass: 1.0,
                charge: 0.0,
                count: 1,
                fixed_positions: None,
                start_positions: None,
            }],
            beta: 10.0,
            delta_tau: 0.05,
            electric_field: [0.0; 3],
            external_potential: Some(HarmonicPotential { omega: 1.0 }),
            sampling: SamplerSettings::default(),
            outputs: OutputsSpec::default(),
        }
    }

    pub fn h2_spec(fixed: bool) -> SystemSpec {
        SystemSpec {
            species: vec![
                SpeciesSpec {
                    name: "electron".into(),
                    mass: 1.0,
                    charge: -1.0,
                    count: 2,
                    fixed_positions: None,
                    start_positions: Some(vec![[0.0, 0.0, 0.5], [0.0, 0.0, -0.5]]),
                },
                SpeciesSpec {
                    name: "proton".into(),
                    mass: PROTON_MASS,
                    charge: 1.0,
                    count: 2,
                    fixed_positions: fixed.then(|| vec![[0.0, 0.0, 0.7005], [0.0, 0.0, -0.7005]]),
                    start_positions: (!fixed).then(|| vec![[0.0, 0.0, 0.7005], [0.0, 0.0, -0.7005]]),
                },
            ],
            beta: 10.0,
            delta_tau: 0.05,
            electric_field: [0.0; 3],
            external_potential: None,
            sampling: SamplerSettings::default(),
            outputs: OutputsSpec::default(),
        }
    }

    #[test]
    fn slice_counts() {
        let mut spec = sho_spec();
        spec.beta = 1000.0;
        spec.delta_tau = 0.01;
        spec.sampling.correlator_bins = Some(2000);
        let v = validate_spec(&spec).unwrap();
        assert_eq!(v.n_slices, 100_000);

        spec.beta = 10.0;
        spec.delta_tau = 0.05;
        spec.sampling.correlator_bins = None;
        assert_eq!(validate_spec(&spec).unwrap().n_slices, 200);
    }

    #[test]
    fn non_integer_slice_count_rejected() {
        let mut spec = sho_spec();
        spec.beta = 1.0;
        spec.delta_tau = 0.3;
        let errs = validate_spec(&spec).unwrap_err();
        assert!(errs.0.iter().any(|e| e.path == "delta_tau"));
    }

    #[test]
    fn field_paths_reported() {
        let mut spec = h2_spec(true);
        spec.species[0].mass = -1.0;
        spec.species[1].fixed_positions = Some(vec![[0.0; 3]]);
        let errs = validate_spec(&spec).unwrap_err();
        let paths: Vec<&str> = errs.0.iter().map(|e| e.path.as_str()).collect();
        assert!(paths.contains(&"species[0].mass"));
        assert!(paths.contains(&"species[1].fixed_positions"));
    }

    #[test]
    fn n_delta_tau_equals_beta() {
        for (beta, dtau) in [(10.0, 0.05), (200.0, 0.01), (20.0, 0.05), (7.0, 0.035)] {
            let mut spec = sho_spec();
            spec.beta = beta;
            spec.delta_tau = dtau;
            let v = validate_spec(&spec).unwrap();
            assert!((v.n_slices as f64 * dtau - beta).abs() < 1e-9 * beta);
        }
    }

    #[test]
    fn reduced_masses() {
        let v = validate_spec(&h2_spec(false)).unwrap();
        let ee = v.pairs.iter().find(|p| (p.species_a, p.species_b) == (0, 0)).unwrap();
        let ep = v.pairs.iter().find(|p| (p.species_a, p.species_b) == (0, 1)).unwrap();
        let pp = v.pairs.iter().find(|p| (p.species_a, p.species_b) == (1, 1)).unwrap();
        assert!((ee.mu - 0.5).abs() < 1e-12);
        assert!((ee.z - 1.0).abs() < 1e-12);
        assert!((ep.mu - 0.999_455_68).abs() < 1e-6);
        assert!((ep.z + 1.0).abs() < 1e-12);
        assert!((pp.mu - 918.076_336).abs() < 1e-6);

        // Fixed protons act as infinite-mass centers.
        let v = validate_spec(&h2_spec(true)).unwrap();
        let ep = v.pairs.iter().find(|p| (p.species_a, p.species_b) == (0, 1)).unwrap();
        assert_eq!(ep.mu, 1.0);
        let pp = v.pairs.iter().find(|p| (p.species_a, p.species_b) == (1, 1)).unwrap();
        assert!(pp.both_fixed);
    }

    #[test]
    fn initial_configuration_points() {
        let v = validate_spec(&h2_spec(true)).unwrap();
        let mut rng = rand::thread_rng();
        let config = build_initial_configuration(&v, &mut rng);
        // Protons constant on every slice at +-0.7005, separation 1.401.
        for n in 0..v.n_slices {
            assert_eq!(config.bead(2, n), Vec3::new(0.0, 0.0, 0.7005));
            assert_eq!(config.bead(3, n), Vec3::new(0.0, 0.0, -0.7005));
        }
        let d = (config.bead(2, 0) - config.bead(3, 0)).norm();
        assert!((d - 1.401).abs() < 1e-12);
        // Electron beads are a single point each.
        for p in 0..2 {
            let first = config.bead(p, 0);
            for n in 1..v.n_slices {
                assert_eq!(config.bead(p, n), first);
            }
        }
    }

    #[test]
    fn temperatures() {
        let mut spec = sho_spec();
        spec.beta = 200.0;
        assert!((temperature_of(&spec) - 1578.87510).abs() < 1e-4);
        spec.beta = 1000.0;
        assert!((temperature_of(&spec) - 315.77502).abs() < 1e-8);
        spec.beta = HARTREE_TO_KELVIN;
        assert!((temperature_of(&spec) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_roundtrip() {
        for spec in [sho_spec(), h2_spec(true), h2_spec(false)] {
            let text = toml::to_string_pretty(&spec).unwrap();
            let back: SystemSpec = toml::from_str(&text).unwrap();
            assert_eq!(spec, back);
        }
    }
}

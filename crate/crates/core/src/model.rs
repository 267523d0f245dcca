//! Domain types, conserved quantities, and the parameter maps that turn a
//! (multispecies) Keller-Segel problem into a particle system.

use crate::error::{SimError, SimResult};
use crate::kernel::GAMMA_LAPLACE;
use crate::vec2::Vec2;
use std::f64::consts::PI;

/// Species tag given to particles created by coalescence.
pub const SPECIES_MERGED: u32 = u32::MAX;

/// Point mass in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    /// Assigned once, never reused. Merged particles get a fresh id.
    pub id: u64,
    pub position: Vec2,
    pub mass: f64,
    pub species: u32,
}

impl Particle {
    pub fn new(id: u64, position: Vec2, mass: f64, species: u32) -> SimResult<Self> {
        if !(mass > 0.0) {
            return Err(SimError::domain(format!(
                "particle {id}: mass must be positive, got {mass}"
            )));
        }
        if !position.is_finite() {
            return Err(SimError::domain(format!(
                "particle {id}: non-finite position"
            )));
        }
        Ok(Particle {
            id,
            position,
            mass,
            species,
        })
    }
}

/// Interaction strength, particle-level diffusion scale, and kernel
/// singularity coefficient shared by the whole system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Drift strength chi.
    pub chi: f64,
    /// Particle-level diffusion scale; a particle of mass m diffuses with
    /// coefficient sqrt(2 mu_tilde / m).
    pub mu_tilde: f64,
    /// Coefficient of the log singularity of the kernel. The planar
    /// Laplacian gives 1/(2 pi).
    pub gamma: f64,
}

impl SystemParams {
    pub fn new(chi: f64, mu_tilde: f64, gamma: f64) -> SimResult<Self> {
        // chi = 0 is allowed: it turns the drift off and leaves pure
        // diffusion, a useful control case.
        if !(chi >= 0.0) {
            return Err(SimError::domain(format!(
                "chi must be nonnegative, got {chi}"
            )));
        }
        if !(mu_tilde > 0.0) {
            return Err(SimError::domain(format!(
                "mu_tilde must be positive, got {mu_tilde}"
            )));
        }
        if !(gamma > 0.0) {
            return Err(SimError::domain(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(SystemParams {
            chi,
            mu_tilde,
            gamma,
        })
    }

    /// Log-Laplace kernel parameters, gamma = 1/(2 pi).
    pub fn laplace(chi: f64, mu_tilde: f64) -> SimResult<Self> {
        Self::new(chi, mu_tilde, GAMMA_LAPLACE)
    }
}

/// The full particle configuration at one instant.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub particles: Vec<Particle>,
    pub time: f64,
    pub params: SystemParams,
    next_id: u64,
}

impl SystemState {
    pub fn new(particles: Vec<Particle>, params: SystemParams) -> Self {
        let next_id = particles.iter().map(|p| p.id + 1).max().unwrap_or(0);
        SystemState {
            particles,
            time: 0.0,
            params,
            next_id,
        }
    }

    pub fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn total_mass(&self) -> f64 {
        total_mass(&self.particles)
    }
}

/// One component of a multispecies system: total mass and diffusivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesComponent {
    pub total_mass: f64,
    pub diffusivity: f64,
}

/// Per-species totals of a multispecies Keller-Segel problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesSpec {
    pub components: Vec<SpeciesComponent>,
}

impl SpeciesSpec {
    pub fn new(components: Vec<SpeciesComponent>) -> SimResult<Self> {
        if components.is_empty() {
            return Err(SimError::config("at least one species is required"));
        }
        for (i, c) in components.iter().enumerate() {
            if !(c.total_mass > 0.0) {
                return Err(SimError::config(format!(
                    "species {i}: total mass must be positive, got {}",
                    c.total_mass
                )));
            }
            if !(c.diffusivity > 0.0) {
                return Err(SimError::config(format!(
                    "species {i}: diffusivity must be positive, got {}",
                    c.diffusivity
                )));
            }
        }
        Ok(SpeciesSpec { components })
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|c| c.total_mass).sum()
    }
}

/// Diffusion coefficient of a particle of mass `m`: sqrt(2 mu_tilde / m).
///
/// This is the unique continuous mass dependence for which the center of
/// mass of a coalescing cluster diffuses like the merged particle.
pub fn sigma_of_mass(m: f64, params: &SystemParams) -> SimResult<f64> {
    if !(m > 0.0) {
        return Err(SimError::domain(format!(
            "sigma_of_mass: mass must be positive, got {m}"
        )));
    }
    Ok((2.0 * params.mu_tilde / m).sqrt())
}

pub fn total_mass(particles: &[Particle]) -> f64 {
    particles.iter().map(|p| p.mass).sum()
}

/// Mass-weighted mean position.
pub fn center_of_mass(particles: &[Particle]) -> SimResult<Vec2> {
    if particles.is_empty() {
        return Err(SimError::domain("center_of_mass of an empty system"));
    }
    let m = total_mass(particles);
    let mut acc = Vec2::ZERO;
    for p in particles {
        acc += p.position * p.mass;
    }
    Ok(acc / m)
}

/// Normalized pairwise second moment
/// `Y = (1/2M^2) sum_{i,j} m_i m_j |X_i - X_j|^2`.
///
/// Computed through the equivalent center-of-mass form
/// `Y = (1/M) sum_i m_i |X_i - X_cm|^2`, which is O(N) and identical
/// algebraically. Zero iff all particles are coincident.
pub fn system_second_moment(particles: &[Particle]) -> SimResult<f64> {
    let cm = center_of_mass(particles)?;
    let m = total_mass(particles);
    let mut acc = 0.0;
    for p in particles {
        acc += p.mass * (p.position - cm).norm_sq();
    }
    Ok(acc / m)
}

/// Map a Keller-Segel problem (chi, mu, total mass M) onto an N0-particle
/// system: equal masses M/N0, particle diffusion scale mu*M/N0, log-Laplace
/// kernel. The empirical density of the resulting system approximates the
/// PDE solution as N0 grows.
pub fn pks_to_particles(
    chi: f64,
    mu: f64,
    total: f64,
    n0: usize,
) -> SimResult<(SystemParams, Vec<f64>)> {
    if !(mu > 0.0) || !(total > 0.0) {
        return Err(SimError::domain(format!(
            "pks_to_particles: mu and total mass must be positive, got mu={mu}, M={total}"
        )));
    }
    if n0 == 0 {
        return Err(SimError::domain("pks_to_particles: need at least 1 particle"));
    }
    let m = total / n0 as f64;
    let params = SystemParams::laplace(chi, mu * m)?;
    Ok((params, vec![m; n0]))
}

/// Auxiliary diffusivity and species fractions of a multispecies system:
/// `mu = sum_i M_i mu_i / M` and `eta_i = M_i mu_i / (M mu)`, so that
/// `sum_i eta_i = 1` and `mu_i = (M / M_i) eta_i mu` is recovered exactly.
pub fn mpks_aux(species: &SpeciesSpec) -> (f64, Vec<f64>) {
    let total = species.total_mass();
    let mu: f64 = species
        .components
        .iter()
        .map(|c| c.total_mass * c.diffusivity)
        .sum::<f64>()
        / total;
    let etas = species
        .components
        .iter()
        .map(|c| c.total_mass * c.diffusivity / (total * mu))
        .collect();
    (mu, etas)
}

/// Split `n0` among the species proportionally to the fractions `eta_i`,
/// using largest-remainder rounding so the counts sum to `n0` exactly.
pub fn apportion_counts(etas: &[f64], n0: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = etas.iter().map(|e| (e * n0 as f64).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut remainders: Vec<(usize, f64)> = etas
        .iter()
        .enumerate()
        .map(|(i, e)| (i, e * n0 as f64 - counts[i] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for k in 0..(n0 - assigned) {
        counts[remainders[k % remainders.len()].0] += 1;
    }
    counts
}

/// Map a multispecies Keller-Segel problem onto an N0-particle system with
/// one particle family per species. Returns the shared parameters and the
/// per-particle (mass, species) assignments, grouped by species.
pub fn mpks_to_particles(
    chi: f64,
    species: &SpeciesSpec,
    n0: usize,
) -> SimResult<(SystemParams, Vec<(f64, u32)>)> {
    if n0 < species.components.len() {
        return Err(SimError::config(format!(
            "n0 = {n0} is smaller than the number of species {}",
            species.components.len()
        )));
    }
    let (mu, etas) = mpks_aux(species);
    let counts = apportion_counts(&etas, n0);
    for (i, &n) in counts.iter().enumerate() {
        if n == 0 {
            return Err(SimError::config(format!(
                "species {i}: eta_i = {:.3e} rounds to zero particles; \
                 a vanishing fraction corresponds to mass supported entirely \
                 on a singular component",
                etas[i]
            )));
        }
    }
    let total = species.total_mass();
    let params = SystemParams::laplace(chi, mu * total / n0 as f64)?;
    let mut assignments = Vec::with_capacity(n0);
    for (i, c) in species.components.iter().enumerate() {
        let m = c.total_mass / counts[i] as f64;
        for _ in 0..counts[i] {
            assignments.push((m, i as u32));
        }
    }
    Ok((params, assignments))
}

/// Critical mass `8 pi mu / chi` of the single-species problem.
pub fn critical_mass(chi: f64, mu: f64) -> f64 {
    8.0 * PI * mu / chi
}

//! Initial-condition samplers: compactly supported bumps and the mapping
//! from a run configuration to a particle system.

use rand::Rng;

use crate::config::{BumpProfile, BumpSpec, Mode, RunConfig};
use crate::error::{SimError, SimResult};
use crate::model::{
    apportion_counts, mpks_to_particles, pks_to_particles, Particle, SpeciesSpec, SystemParams,
    SystemState,
};
use crate::vec2::Vec2;

/// Draw a point of the unit disc from the chosen radial profile.
///
/// The mollifier profile has density proportional to
/// `exp(-1/(1 - r^2))` for `r < 1`, sampled by rejection from the uniform
/// disc (the density peaks at the center, so the acceptance ratio is
/// `exp(1 - 1/(1 - r^2))`).
pub fn sample_unit_disc<R: Rng + ?Sized>(profile: BumpProfile, rng: &mut R) -> Vec2 {
    loop {
        let x = rng.gen_range(-1.0..1.0);
        let y = rng.gen_range(-1.0..1.0);
        let r_sq: f64 = x * x + y * y;
        if r_sq >= 1.0 {
            continue;
        }
        match profile {
            BumpProfile::Uniform => return Vec2::new(x, y),
            BumpProfile::Mollifier => {
                let accept = (1.0 - 1.0 / (1.0 - r_sq)).exp();
                if rng.gen_range(0.0..1.0) < accept {
                    return Vec2::new(x, y);
                }
            }
        }
    }
}

/// Sample `count` equal-mass particles from an elliptical bump: the unit
/// disc profile scaled by the semi-axes, rotated by `angle` and shifted
/// to `center`. Ids run from `id0`.
#[allow(clippy::too_many_arguments)]
pub fn sample_bump_ellipse<R: Rng + ?Sized>(
    center: Vec2,
    semi_axes: Vec2,
    angle: f64,
    mass: f64,
    count: usize,
    species: u32,
    profile: BumpProfile,
    id0: u64,
    rng: &mut R,
) -> SimResult<Vec<Particle>> {
    if count == 0 {
        return Err(SimError::domain("bump sampling needs count >= 1"));
    }
    if !(semi_axes.x > 0.0 && semi_axes.y > 0.0) {
        return Err(SimError::domain(format!(
            "bump semi-axes must be positive, got ({}, {})",
            semi_axes.x, semi_axes.y
        )));
    }
    let m = mass / count as f64;
    let (sin, cos) = angle.sin_cos();
    (0..count)
        .map(|k| {
            let u = sample_unit_disc(profile, rng);
            let scaled = Vec2::new(u.x * semi_axes.x, u.y * semi_axes.y);
            let rotated = Vec2::new(
                cos * scaled.x - sin * scaled.y,
                sin * scaled.x + cos * scaled.y,
            );
            Particle::new(id0 + k as u64, center + rotated, m, species)
        })
        .collect()
}

/// Disc special case of [`sample_bump_ellipse`].
#[allow(clippy::too_many_arguments)]
pub fn sample_bump_disc<R: Rng + ?Sized>(
    center: Vec2,
    radius: f64,
    mass: f64,
    count: usize,
    species: u32,
    profile: BumpProfile,
    id0: u64,
    rng: &mut R,
) -> SimResult<Vec<Particle>> {
    sample_bump_ellipse(
        center,
        Vec2::new(radius, radius),
        0.0,
        mass,
        count,
        species,
        profile,
        id0,
        rng,
    )
}

/// Expected squared radius of the unit-disc profile, by quadrature of the
/// radial density (`E r^2 = int r^3 w dr / int r w dr`).
pub fn unit_disc_mean_r_sq(profile: BumpProfile) -> f64 {
    match profile {
        BumpProfile::Uniform => 0.5,
        BumpProfile::Mollifier => {
            // Simpson's rule; the integrand vanishes smoothly at r = 1.
            let n = 20_000;
            let h = 1.0 / n as f64;
            let w = |r: f64| {
                if r >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - r * r)).exp()
                }
            };
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..=n {
                let r = k as f64 * h;
                let coeff = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                num += coeff * r * r * r * w(r);
                den += coeff * r * w(r);
            }
            num / den
        }
    }
}

/// Build the initial particle system described by a validated config.
/// Returns the state together with the species count and the macroscopic
/// auxiliary diffusivity used for critical-mass diagnostics.
pub fn initial_state<R: Rng + ?Sized>(
    config: &RunConfig,
    rng: &mut R,
) -> SimResult<(SystemState, usize, f64)> {
    config.validate()?;
    match config.mode {
        Mode::RawParticles => {
            let mu_tilde = config.mu_tilde.expect("validated");
            let params = SystemParams::laplace(config.chi, mu_tilde)?;
            let particles: Vec<Particle> = config
                .raw_particles
                .iter()
                .enumerate()
                .map(|(k, p)| Particle::new(k as u64, p.position, p.mass, p.species))
                .collect::<SimResult<Vec<Particle>>>()?;
            let n_species = particles
                .iter()
                .map(|p| p.species as usize + 1)
                .max()
                .unwrap_or(1);
            // In raw mode the per-species macroscopic diffusivity is not
            // defined; report the particle-scale one.
            Ok((SystemState::new(particles, params), n_species, mu_tilde))
        }
        Mode::Pks => {
            let spec = &config.species[0];
            let (params, masses) =
                pks_to_particles(config.chi, spec.diffusivity, spec.total_mass, config.n0)?;
            let particles =
                scatter_bumps(&config.bumps, &[masses.len()], &masses, config.profile, rng)?;
            Ok((SystemState::new(particles, params), 1, spec.diffusivity))
        }
        Mode::Mpks => {
            let spec = SpeciesSpec::new(config.species.clone())?;
            let (params, assignments) = mpks_to_particles(config.chi, &spec, config.n0)?;
            let mut species_counts = vec![0usize; config.species.len()];
            for &(_, s) in &assignments {
                species_counts[s as usize] += 1;
            }
            let masses: Vec<f64> = assignments.iter().map(|&(m, _)| m).collect();
            let particles =
                scatter_bumps(&config.bumps, &species_counts, &masses, config.profile, rng)?;
            let (mu, _) = crate::model::mpks_aux(&spec);
            Ok((SystemState::new(particles, params), config.species.len(), mu))
        }
    }
}

/// Distribute each species' particles among its bumps proportionally to
/// bump mass (largest-remainder rounding), then sample positions.
/// `masses` lists per-particle masses grouped by species, matching
/// `species_counts`.
fn scatter_bumps<R: Rng + ?Sized>(
    bumps: &[BumpSpec],
    species_counts: &[usize],
    masses: &[f64],
    profile: BumpProfile,
    rng: &mut R,
) -> SimResult<Vec<Particle>> {
    let mut particles = Vec::with_capacity(masses.len());
    let mut species_offset = 0usize;
    for (s, &count) in species_counts.iter().enumerate() {
        let species_bumps: Vec<&BumpSpec> = bumps
            .iter()
            .filter(|b| b.species as usize == s)
            .collect();
        if species_bumps.is_empty() {
            return Err(SimError::config(format!(
                "species {} has particles but no bump",
                s + 1
            )));
        }
        let total: f64 = species_bumps.iter().map(|b| b.mass).sum();
        let fractions: Vec<f64> = species_bumps.iter().map(|b| b.mass / total).collect();
        let per_bump = apportion_counts(&fractions, count);
        let mut used = 0usize;
        for (bump, n) in species_bumps.iter().zip(per_bump) {
            if n == 0 {
                continue;
            }
            // All particles of one species share a mass.
            let m = masses[species_offset];
            let id0 = (species_offset + used) as u64;
            particles.extend(sample_bump_ellipse(
                bump.center,
                bump.semi_axes,
                bump.angle,
                m * n as f64,
                n,
                s as u32,
                profile,
                id0,
                rng,
            )?);
            used += n;
        }
        species_offset += count;
    }
    Ok(particles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SpeciesComponent;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn samples_stay_inside_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for profile in [BumpProfile::Mollifier, BumpProfile::Uniform] {
            let particles = sample_bump_disc(
                Vec2::new(2.0, -1.0),
                0.35,
                1.0,
                2_000,
                0,
                profile,
                0,
                &mut rng,
            )
            .unwrap();
            for p in &particles {
                assert!((p.position - Vec2::new(2.0, -1.0)).norm() < 0.35);
            }
        }
    }

    #[test]
    fn sample_mean_concentrates_at_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let count = 40_000;
        let particles = sample_bump_disc(
            Vec2::new(-3.0, 1.0),
            1.0,
            4.0,
            count,
            0,
            BumpProfile::Mollifier,
            0,
            &mut rng,
        )
        .unwrap();
        let mean = particles
            .iter()
            .fold(Vec2::ZERO, |acc, p| acc + p.position)
            / count as f64;
        // Component std dev is below sqrt(E r^2 / 2) < 0.5.
        let tol = 3.0 * 0.5 / (count as f64).sqrt();
        assert!((mean.x + 3.0).abs() < tol, "{}", mean.x);
        assert!((mean.y - 1.0).abs() < tol, "{}", mean.y);
        let mass: f64 = particles.iter().map(|p| p.mass).sum();
        assert!((mass - 4.0).abs() < 1e-9);
    }

    #[test]
    fn empirical_second_moment_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for profile in [BumpProfile::Mollifier, BumpProfile::Uniform] {
            let expected = unit_disc_mean_r_sq(profile);
            let count = 1_000_000;
            let mut acc = 0.0;
            for _ in 0..count {
                acc += sample_unit_disc(profile, &mut rng).norm_sq();
            }
            let got = acc / count as f64;
            assert!(
                (got / expected - 1.0).abs() < 0.02,
                "{profile:?}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn mollifier_moment_is_tighter_than_uniform() {
        let m = unit_disc_mean_r_sq(BumpProfile::Mollifier);
        assert!(m > 0.0 && m < 0.5, "{m}");
    }

    #[test]
    fn ellipse_scales_and_rotates_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let (a, b) = (2.0, 0.5);
        let angle = PI / 2.0;
        let particles = sample_bump_ellipse(
            Vec2::ZERO,
            Vec2::new(a, b),
            angle,
            1.0,
            400_000,
            0,
            BumpProfile::Uniform,
            0,
            &mut rng,
        )
        .unwrap();
        let n = particles.len() as f64;
        let (mut var_x, mut var_y) = (0.0, 0.0);
        for p in &particles {
            var_x += p.position.x * p.position.x;
            var_y += p.position.y * p.position.y;
        }
        var_x /= n;
        var_y /= n;
        // After a 90-degree rotation, the long axis lies along y:
        // Var x = b^2/4, Var y = a^2/4 for the uniform disc profile.
        assert!((var_x / (b * b / 4.0) - 1.0).abs() < 0.02, "{var_x}");
        assert!((var_y / (a * a / 4.0) - 1.0).abs() < 0.02, "{var_y}");
    }

    fn pks_config(n0: usize) -> RunConfig {
        RunConfig {
            mode: Mode::Pks,
            chi: 1.0,
            species: vec![SpeciesComponent {
                diffusivity: 1.0,
                total_mass: 48.0 * PI,
            }],
            n0,
            domain_half_width: 12.0,
            nx: 129,
            bumps: vec![
                BumpSpec {
                    center: Vec2::new(-6.0, 0.0),
                    semi_axes: Vec2::new(1.0, 1.0),
                    angle: 0.0,
                    mass: 32.0 * PI,
                    species: 0,
                },
                BumpSpec {
                    center: Vec2::new(6.0, 0.0),
                    semi_axes: Vec2::new(1.0, 7.0),
                    angle: 0.0,
                    mass: 16.0 * PI,
                    species: 0,
                },
            ],
            ..RunConfig::default()
        }
    }

    #[test]
    fn initial_state_pks_partitions_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let config = pks_config(3000);
        let (state, n_species, mu) = initial_state(&config, &mut rng).unwrap();
        assert_eq!(n_species, 1);
        assert_eq!(mu, 1.0);
        assert_eq!(state.particles.len(), 3000);
        assert!((state.total_mass() - 48.0 * PI).abs() < 1e-9);
        // Bump counts follow the 2:1 mass split.
        let left = state
            .particles
            .iter()
            .filter(|p| p.position.x < 0.0)
            .count();
        assert_eq!(left, 2000);
        // Ids are unique.
        let mut ids: Vec<u64> = state.particles.iter().map(|p| p.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 3000);
    }

    #[test]
    fn initial_state_mpks_respects_species() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let config = RunConfig {
            mode: Mode::Mpks,
            chi: 4.0,
            species: vec![
                SpeciesComponent {
                    diffusivity: 17.5,
                    total_mass: 4.0,
                },
                SpeciesComponent {
                    diffusivity: 35.0 / 12.0,
                    total_mass: 24.0,
                },
            ],
            n0: 1000,
            domain_half_width: 1.5,
            bumps: vec![
                BumpSpec {
                    center: Vec2::new(0.0, 0.3),
                    semi_axes: Vec2::new(0.35, 0.35),
                    angle: 0.0,
                    mass: 4.0,
                    species: 0,
                },
                BumpSpec {
                    center: Vec2::new(0.0, -0.3),
                    semi_axes: Vec2::new(0.35, 0.35),
                    angle: 0.0,
                    mass: 24.0,
                    species: 1,
                },
            ],
            ..RunConfig::default()
        };
        let (state, n_species, mu) = initial_state(&config, &mut rng).unwrap();
        assert_eq!(n_species, 2);
        assert!((mu - 5.0).abs() < 1e-12);
        assert_eq!(state.particles.len(), 1000);
        let m0: f64 = state
            .particles
            .iter()
            .filter(|p| p.species == 0)
            .map(|p| p.mass)
            .sum();
        let m1: f64 = state
            .particles
            .iter()
            .filter(|p| p.species == 1)
            .map(|p| p.mass)
            .sum();
        assert!((m0 - 4.0).abs() < 1e-9);
        assert!((m1 - 24.0).abs() < 1e-9);
        // Species live on their own bumps.
        for p in &state.particles {
            if p.species == 0 {
                assert!(p.position.y > 0.0);
            } else {
                assert!(p.position.y < 0.0);
            }
        }
    }
}

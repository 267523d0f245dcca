//! Ready-made experiment configurations.

use std::f64::consts::PI;
use std::path::PathBuf;

use crate::config::{BumpProfile, BumpSpec, Mode, RawParticleSpec, RunConfig};
use crate::error::{SimError, SimResult};
use crate::model::SpeciesComponent;
use crate::vec2::Vec2;

pub const PRESET_NAMES: [&str; 6] = [
    "pks-mass-transfer",
    "pks-two-singularities",
    "mpks-symmetric",
    "mpks-asymmetric",
    "mpks-disjoint",
    "three-particle-moment",
];

fn mpks_base(name: &str) -> RunConfig {
    RunConfig {
        mode: Mode::Mpks,
        chi: 4.0,
        species: vec![
            SpeciesComponent {
                diffusivity: 35.0 / 2.0,
                total_mass: 4.0,
            },
            SpeciesComponent {
                diffusivity: 35.0 / 12.0,
                total_mass: 24.0,
            },
        ],
        n0: 1_000_000,
        domain_center: Vec2::ZERO,
        domain_half_width: 1.5,
        nx: 320,
        dt: 5e-4,
        t_end: 0.1,
        output_dir: PathBuf::from(format!("out/{name}")),
        record_stride: 1,
        ..RunConfig::default()
    }
}

/// Look up a named experiment. Each carries the published physical
/// parameters; particle count, seed and output directory are meant to be
/// overridden from the command line for desk-scale runs.
pub fn preset(name: &str) -> SimResult<RunConfig> {
    let a = 0.35; // bump radius shared by the mpks presets
    match name {
        // Critical-mass-times-six system whose heavy bump collapses
        // first, then slowly absorbs the light one: second-moment slopes
        // -20 then -12.  Uniform bump profile: a uniform unit disc has
        // second moment 1/2, so the heavy bump's internal moment (rate
        // -12) reaches zero near t = 0.042 and the singularity forms
        // near t = 0.05, as published; a peaked profile collapses by
        // t = 0.022 and cuts the -20 regime short.  The bump centers sit
        // at (+-3, 0) so that both supports are well separated yet deep
        // inside the domain, where the monopole boundary condition for
        // the field solve is accurate.
        "pks-mass-transfer" => Ok(RunConfig {
            mode: Mode::Pks,
            chi: 1.0,
            species: vec![SpeciesComponent {
                diffusivity: 1.0,
                total_mass: 48.0 * PI,
            }],
            n0: 40_000,
            domain_center: Vec2::ZERO,
            domain_half_width: 12.0,
            nx: 128,
            dt: 1e-3,
            t_end: 1.0,
            output_dir: PathBuf::from("out/pks-mass-transfer"),
            profile: BumpProfile::Uniform,
            bumps: vec![
                BumpSpec {
                    center: Vec2::new(-3.0, 0.0),
                    semi_axes: Vec2::new(1.0, 1.0),
                    angle: 0.0,
                    mass: 32.0 * PI,
                    species: 0,
                },
                BumpSpec {
                    center: Vec2::new(3.0, 0.0),
                    semi_axes: Vec2::new(1.0, 7.0),
                    angle: 0.0,
                    mass: 16.0 * PI,
                    species: 0,
                },
            ],
            ..RunConfig::default()
        }),
        // Two bumps of masses 12pi/5 and 28pi/5 (summing to the critical
        // mass) that each condense and then orbit/merge as near-point
        // masses.
        "pks-two-singularities" => Ok(RunConfig {
            mode: Mode::Pks,
            chi: 1.0,
            species: vec![SpeciesComponent {
                diffusivity: 1.0,
                total_mass: 8.0 * PI,
            }],
            n0: 400_000,
            domain_center: Vec2::ZERO,
            domain_half_width: 15.0,
            nx: 270,
            dt: 2e-3,
            t_end: 1.0,
            output_dir: PathBuf::from("out/pks-two-singularities"),
            bumps: vec![
                BumpSpec {
                    center: Vec2::new(3.0, 1.0),
                    semi_axes: Vec2::new(1.0, 1.0),
                    angle: 0.0,
                    mass: 12.0 * PI / 5.0,
                    species: 0,
                },
                BumpSpec {
                    center: Vec2::new(-3.0, -1.0),
                    semi_axes: Vec2::new(1.0, 1.0),
                    angle: 0.0,
                    mass: 28.0 * PI / 5.0,
                    species: 0,
                },
            ],
            ..RunConfig::default()
        }),
        // Two-species system whose total second moment grows while a
        // singularity forms: both components on one disc at the origin.
        "mpks-symmetric" => {
            let mut config = mpks_base(name);
            config.bumps = vec![
                BumpSpec {
                    center: Vec2::ZERO,
                    semi_axes: Vec2::new(a, a),
                    angle: 0.0,
                    mass: 4.0,
                    species: 0,
                },
                BumpSpec {
                    center: Vec2::ZERO,
                    semi_axes: Vec2::new(a, a),
                    angle: 0.0,
                    mass: 24.0,
                    species: 1,
                },
            ];
            Ok(config)
        }
        // Same species, second component on an offset ellipse with the
        // major axis (2a) along y and minor axis a/2.
        "mpks-asymmetric" => {
            let mut config = mpks_base(name);
            config.bumps = vec![
                BumpSpec {
                    center: Vec2::ZERO,
                    semi_axes: Vec2::new(a, a),
                    angle: 0.0,
                    mass: 4.0,
                    species: 0,
                },
                BumpSpec {
                    center: Vec2::new(0.1, 0.0),
                    semi_axes: Vec2::new(a / 2.0, 2.0 * a),
                    angle: 0.0,
                    mass: 24.0,
                    species: 1,
                },
            ];
            Ok(config)
        }
        // Same species on disjoint discs.
        "mpks-disjoint" => {
            let mut config = mpks_base(name);
            config.bumps = vec![
                BumpSpec {
                    center: Vec2::new(a, -a),
                    semi_axes: Vec2::new(a, a),
                    angle: 0.0,
                    mass: 4.0,
                    species: 0,
                },
                BumpSpec {
                    center: Vec2::new(-a, a),
                    semi_axes: Vec2::new(a, a),
                    angle: 0.0,
                    mass: 24.0,
                    species: 1,
                },
            ];
            Ok(config)
        }
        // Three heavy particles whose aggregate second moment decays to
        // a collision; exercises the adaptive substepping.
        "three-particle-moment" => {
            let theta = PI / 12.0;
            Ok(RunConfig {
                mode: Mode::RawParticles,
                chi: 10.0,
                mu_tilde: Some(10.0),
                n0: 0,
                domain_center: Vec2::ZERO,
                domain_half_width: 2.0,
                nx: 129,
                dt: 1e-3,
                t_end: 0.5,
                output_dir: PathBuf::from("out/three-particle-moment"),
                raw_particles: vec![
                    RawParticleSpec {
                        position: Vec2::new(0.0, 0.1),
                        mass: 20.0,
                        species: 0,
                    },
                    RawParticleSpec {
                        position: Vec2::new(0.0, -0.1),
                        mass: 20.0,
                        species: 0,
                    },
                    RawParticleSpec {
                        position: Vec2::new(0.8 * theta.cos(), 0.8 * theta.sin()),
                        mass: 100.0,
                        species: 0,
                    },
                ],
                profile: BumpProfile::Mollifier,
                ..RunConfig::default()
            })
        }
        other => Err(SimError::config(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

//! Time stepping: adaptive per-particle substeps within a macro step, and
//! the macro step itself (cluster detection, field assembly, parallel
//! advancement, coalescence).

use rayon::prelude::*;

use crate::clustering::{detect_clusters, ClusterCell};
use crate::coalescence::{evaluate_cell, merge_particles, MergeEvent, MergeRule};
use crate::error::{SimError, SimResult};
use crate::kernel::LogKernel;
use crate::meanfield::{Field, Grid};
use crate::model::{sigma_of_mass, Particle, SystemState};
use crate::rng::particle_stream;
use crate::vec2::Vec2;
use rand::Rng;
use rand_distr::StandardNormal;

/// Controls for one macro step.
#[derive(Debug, Clone, Copy)]
pub struct StepConfig {
    /// Macro time step.
    pub dt: f64,
    /// Cluster separation threshold.
    pub eta: f64,
    /// Collision probability floor for cluster detection.
    pub p_floor: f64,
    /// Merge trigger.
    pub merge_rule: MergeRule,
    /// Base seed; combined with particle id and step index for per-stream
    /// reproducibility.
    pub seed: u64,
}

impl StepConfig {
    pub fn new(dt: f64, seed: u64) -> SimResult<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::domain(format!("dt must be positive, got {dt}")));
        }
        Ok(StepConfig {
            dt,
            eta: crate::clustering::DEFAULT_ETA,
            p_floor: crate::clustering::DEFAULT_COLLISION_PROBABILITY,
            merge_rule: MergeRule::default(),
            seed,
        })
    }
}

/// What one macro step did.
#[derive(Debug)]
pub struct StepOutcome {
    /// Clusters detected at the start of the step.
    pub cells: Vec<ClusterCell>,
    /// Merges performed at the end of the step.
    pub events: Vec<MergeEvent>,
    /// The field used for the drift; its potential seeds the next step's
    /// solver.
    pub field: Field,
}

/// Largest stable substep for a particle: the drift may move it at most
/// half a cell, the noise standard deviation may be at most half a cell,
/// and the substep never exceeds the time remaining in the macro step.
pub fn choose_substep(drift_norm: f64, sigma: f64, dx: f64, remaining: f64) -> f64 {
    let mut dtau = remaining;
    if drift_norm > 0.0 {
        dtau = dtau.min(dx / (2.0 * drift_norm));
    }
    if sigma > 0.0 {
        let cap = dx / (2.0 * sigma);
        dtau = dtau.min(cap * cap);
    }
    dtau
}

/// Advance one particle through a full macro step with adaptive Euler
/// substeps, re-sampling the frozen field's gradient at each position.
/// Returns the particle's total Brownian increment over the step,
/// `sum_k sqrt(dtau_k) N_k`, which the coalescence stage projects onto
/// cluster moments.
pub fn advance_particle<R: Rng + ?Sized>(
    particle: &mut Particle,
    field: &Field,
    params: &crate::model::SystemParams,
    kernel: &LogKernel,
    dt: f64,
    rng: &mut R,
) -> SimResult<Vec2> {
    let sigma = sigma_of_mass(particle.mass, params)?;
    let dx = field.grid.dx;
    let mut remaining = dt;
    let mut ledger = Vec2::ZERO;
    while remaining > 0.0 {
        let drift = field.sample_gradient(particle.position, kernel)? * params.chi;
        let dtau = choose_substep(drift.norm(), sigma, dx, remaining);
        let gx: f64 = rng.sample(StandardNormal);
        let gy: f64 = rng.sample(StandardNormal);
        let noise = Vec2::new(gx, gy) * dtau.sqrt();
        particle.position += drift * dtau + noise * sigma;
        ledger += noise;
        if !particle.position.is_finite() {
            return Err(SimError::NonFiniteState { id: particle.id });
        }
        remaining -= dtau;
    }
    Ok(ledger)
}

/// One macro step of the coalescing particle system:
///
/// 1. detect separated, collidable clusters on the pre-move positions;
/// 2. assemble the mean-field drift from the pre-move density;
/// 3. advance every particle independently (parallel, with per-particle
///    random streams keyed by `(seed, id, step)` so the result is
///    identical for any thread count);
/// 4. update each cluster's moment with the projected noise and merge the
///    clusters whose moment the rule says have collapsed.
pub fn macro_step(
    state: &mut SystemState,
    grid: &Grid,
    config: &StepConfig,
    step_index: u64,
    potential_guess: Option<&[f64]>,
) -> SimResult<StepOutcome> {
    let params = state.params;
    let kernel = LogKernel::new(params.gamma);
    // The quadtree root follows the particle bounding box rather than the
    // grid: a root frozen to the domain keeps the same cell boundaries
    // every step, and a cluster that happens to straddle one of them is
    // never isolated in a cell.  The bounding box drifts with the outermost
    // particles, so the alignment of cell walls against any given cluster
    // varies from step to step.
    let cells = detect_clusters(
        &state.particles,
        config.dt,
        config.eta,
        config.p_floor,
        &params,
        None,
    )?;
    let field = Field::assemble(&state.particles, grid, &kernel, potential_guess)?;

    let pre_move = state.particles.clone();
    let seed = config.seed;
    let dt = config.dt;
    let noise: Vec<Vec2> = state
        .particles
        .par_iter_mut()
        .map(|p| {
            let mut rng = particle_stream(seed, p.id, step_index);
            advance_particle(p, &field, &params, &kernel, dt, &mut rng)
        })
        .collect::<SimResult<Vec<Vec2>>>()?;

    let mut events = Vec::new();
    let mut merged = vec![false; state.particles.len()];
    let mut products = Vec::new();
    for cell in &cells {
        let Some((y_before, dy)) =
            evaluate_cell(cell, &pre_move, &noise, dt, config.merge_rule)?
        else {
            continue;
        };
        let members: Vec<Particle> = cell.members.iter().map(|&i| state.particles[i]).collect();
        let new_id = state.fresh_id();
        let product = merge_particles(&members, new_id)?;
        for &i in &cell.members {
            merged[i] = true;
        }
        events.push(MergeEvent {
            step: step_index,
            time: state.time,
            new_id,
            mass: product.mass,
            position: product.position,
            species: product.species,
            member_ids: cell.member_ids.clone(),
            moment_before: y_before,
            moment_delta: dy,
        });
        products.push(product);
    }
    if !products.is_empty() {
        let mut survivors: Vec<Particle> = state
            .particles
            .iter()
            .zip(&merged)
            .filter(|(_, &gone)| !gone)
            .map(|(p, _)| *p)
            .collect();
        survivors.extend(products);
        state.particles = survivors;
    }
    state.time += config.dt;
    Ok(StepOutcome {
        cells,
        events,
        field,
    })
}

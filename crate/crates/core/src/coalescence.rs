//! Coalescence of detected clusters.
//!
//! Each kept cluster cell carries a normalized second moment Y obeying
//! `dY = alpha dt + 2 beta sqrt(Y) dW`. The scalar noise driving Y is not
//! drawn fresh: it is the projection of the member particles' own
//! Brownian increments onto the radial direction, so the moment update is
//! consistent with the particle motion that actually happened. When the
//! updated moment hits zero the members merge into a single particle.

use std::io::Write as _;
use std::path::Path;

use crate::clustering::ClusterCell;
use crate::error::{SimError, SimResult};
use crate::model::{center_of_mass, Particle, SPECIES_MERGED};
use crate::vec2::Vec2;

/// When a cluster's members are replaced by one particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeRule {
    /// Merge when the updated moment is nonpositive: `Y + dY <= 0`.
    #[default]
    MomentHitsZero,
    /// Merge on any contraction of the moment: `dY <= 0`.
    AnyDecrease,
}

impl MergeRule {
    pub fn should_merge(self, y: f64, dy: f64) -> bool {
        match self {
            MergeRule::MomentHitsZero => y + dy <= 0.0,
            MergeRule::AnyDecrease => dy <= 0.0,
        }
    }
}

/// Scalar noise increment for a cluster's moment equation, projected from
/// the members' vector Brownian increments at their pre-move positions:
/// `dW_c = (1/sqrt(M' Y)) sum_i sqrt(m_i) (X_i - X_cm) . dW_i`.
///
/// Each `dW_i` has variance `dt` per component, and the weights satisfy
/// `sum_i m_i |X_i - X_cm|^2 = M' Y`, so `dW_c` also has variance `dt`.
/// A cluster already at zero moment has no radial direction to project
/// onto; its increment is zero and the drift alone decides the merge.
pub fn cluster_noise_increment(pre_move: &[Particle], noise: &[Vec2]) -> SimResult<f64> {
    if pre_move.len() != noise.len() {
        return Err(SimError::domain(format!(
            "cluster noise: {} particles but {} increments",
            pre_move.len(),
            noise.len()
        )));
    }
    if pre_move.len() < 2 {
        return Err(SimError::domain(
            "cluster noise requires at least two particles",
        ));
    }
    let cm = center_of_mass(pre_move)?;
    let cluster_mass: f64 = pre_move.iter().map(|p| p.mass).sum();
    let y = crate::model::system_second_moment(pre_move)?;
    if y <= 0.0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (p, dw) in pre_move.iter().zip(noise) {
        acc += p.mass.sqrt() * (p.position - cm).dot(*dw);
    }
    Ok(acc / (cluster_mass * y).sqrt())
}

/// One Euler step of the cluster moment equation.
pub fn moment_increment(alpha: f64, beta: f64, y: f64, dt: f64, noise: f64) -> f64 {
    alpha * dt + 2.0 * beta * y.max(0.0).sqrt() * noise
}

/// Record of one merge.
#[derive(Debug, Clone)]
pub struct MergeEvent {
    pub step: u64,
    pub time: f64,
    pub new_id: u64,
    pub mass: f64,
    pub position: Vec2,
    pub species: u32,
    pub member_ids: Vec<u64>,
    /// Cluster moment at detection time.
    pub moment_before: f64,
    /// Moment increment that triggered the merge.
    pub moment_delta: f64,
}

/// Build the merged particle for a cluster: total mass at the mass-
/// weighted center of the (post-move) members. The species survives only
/// if every member shares it.
pub fn merge_particles(members: &[Particle], new_id: u64) -> SimResult<Particle> {
    if members.len() < 2 {
        return Err(SimError::domain("merge requires at least two particles"));
    }
    let position = center_of_mass(members)?;
    let mass: f64 = members.iter().map(|p| p.mass).sum();
    let species = if members.iter().all(|p| p.species == members[0].species) {
        members[0].species
    } else {
        SPECIES_MERGED
    };
    Particle::new(new_id, position, mass, species)
}

/// Evaluate one detected cell against the post-move noise ledger and
/// decide whether its members coalesce this step.
pub fn evaluate_cell(
    cell: &ClusterCell,
    pre_move: &[Particle],
    noise: &[Vec2],
    dt: f64,
    rule: MergeRule,
) -> SimResult<Option<(f64, f64)>> {
    let members_pre: Vec<Particle> = cell.members.iter().map(|&i| pre_move[i]).collect();
    let members_noise: Vec<Vec2> = cell.members.iter().map(|&i| noise[i]).collect();
    let w = cluster_noise_increment(&members_pre, &members_noise)?;
    let dy = moment_increment(cell.alpha, cell.beta, cell.second_moment, dt, w);
    if rule.should_merge(cell.second_moment, dy) {
        Ok(Some((cell.second_moment, dy)))
    } else {
        Ok(None)
    }
}

/// Write merge events as CSV. Member ids are ';'-joined inside one field.
pub fn write_events(path: &Path, events: &[MergeEvent]) -> SimResult<()> {
    let file = std::fs::File::create(path)
        .map_err(|e| SimError::io(path.display().to_string(), e))?;
    let mut out = std::io::BufWriter::new(file);
    let io_err = |e| SimError::io(path.display().to_string(), e);
    writeln!(
        out,
        "step,time,new_id,mass,x,y,species,moment_before,moment_delta,member_ids"
    )
    .map_err(io_err)?;
    for ev in events {
        let ids: Vec<String> = ev.member_ids.iter().map(|id| id.to_string()).collect();
        writeln!(
            out,
            "{},{:.10e},{},{:.10e},{:.10e},{:.10e},{},{:.10e},{:.10e},{}",
            ev.step,
            ev.time,
            ev.new_id,
            ev.mass,
            ev.position.x,
            ev.position.y,
            ev.species,
            ev.moment_before,
            ev.moment_delta,
            ids.join(";")
        )
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

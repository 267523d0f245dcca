//! Squared-Bessel index algebra for particle clusters.
//!
//! Between collisions, the normalized second moment Y of an N-particle
//! system with a log-singular kernel satisfies
//! `dY = alpha dt + 2 beta sqrt(Y) dW`. Rescaling time by beta^2 turns
//! this into a squared Bessel process `dY = 2(nu+1) dt + 2 sqrt(Y) dW`
//! whose index `nu = alpha/(2 beta^2) - 1` decides whether the origin
//! (total collision) is reached. This module computes those coefficients,
//! classifies the boundary, samples absorption times, and evaluates the
//! drift corrections that couple a tight cluster to outside particles.

use crate::error::{SimError, SimResult};
use crate::kernel::LogKernel;
use crate::model::{Particle, SystemParams};
use crate::vec2::Vec2;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Drift and noise scale of the second-moment SDE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCoefficients {
    /// Deterministic rate of change of Y (length^2 / time).
    pub alpha: f64,
    /// Noise scale sqrt(2 mu_tilde / M) (length / sqrt(time)).
    pub beta: f64,
}

/// Boundary behavior of the second moment at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OriginClass {
    /// nu >= 0: the moment stays positive almost surely.
    Entrance,
    /// -1 < nu < 0: the origin can be reached; behavior there must be
    /// prescribed. Collisions in this regime are "soft".
    Regular,
    /// nu <= -1: the origin is hit in finite time. "Hard" collisions.
    Absorbing,
}

fn mass_sums(masses: &[f64]) -> SimResult<(f64, f64)> {
    if masses.is_empty() {
        return Err(SimError::domain("need at least one particle"));
    }
    let mut total = 0.0;
    let mut sq = 0.0;
    for &m in masses {
        if !(m > 0.0) {
            return Err(SimError::domain(format!("nonpositive mass {m}")));
        }
        total += m;
        sq += m * m;
    }
    Ok((total, sq))
}

/// Coefficients of `dY = alpha dt + 2 beta sqrt(Y) dW` for the given
/// masses. Must be recomputed after every collision, since alpha depends
/// on the particle count and the mass distribution.
pub fn moment_coefficients(masses: &[f64], params: &SystemParams) -> SimResult<MomentCoefficients> {
    let (total, sq) = mass_sums(masses)?;
    let n = masses.len() as f64;
    let mass_spread = 1.0 - sq / (total * total);
    let alpha =
        4.0 * params.mu_tilde * (n - 1.0) / total - params.gamma * params.chi * total * mass_spread;
    let beta = (2.0 * params.mu_tilde / total).sqrt();
    Ok(MomentCoefficients { alpha, beta })
}

/// Index of the squared Bessel process driving the second moment:
/// `nu = (N-2) - (gamma chi M^2 / 4 mu_tilde)(1 - sum (m_j/M)^2)`.
///
/// With gamma = 1/(2 pi) this is the log-Laplace kernel index; it always
/// equals `alpha/(2 beta^2) - 1`.
pub fn bessel_index(masses: &[f64], params: &SystemParams) -> SimResult<f64> {
    let (total, sq) = mass_sums(masses)?;
    let n = masses.len() as f64;
    let mass_spread = 1.0 - sq / (total * total);
    Ok((n - 2.0)
        - params.gamma * params.chi * total * total / (4.0 * params.mu_tilde) * mass_spread)
}

pub fn classify_origin(nu: f64) -> SimResult<OriginClass> {
    if !nu.is_finite() {
        return Err(SimError::domain(format!("non-finite index {nu}")));
    }
    Ok(if nu >= 0.0 {
        OriginClass::Entrance
    } else if nu > -1.0 {
        OriginClass::Regular
    } else {
        OriginClass::Absorbing
    })
}

/// Indices of the full system before a merge, after it, and of the merging
/// cluster itself: `(nu_i, nu_f, nu_bar)`.
///
/// These satisfy the subtraction identity `nu_f - nu_i = -(nu_bar + 1)`
/// by algebraic cancellation; a hard merge (nu_bar < -1) therefore always
/// raises the full-system index.
pub fn index_after_merge(
    masses: &[f64],
    cluster: &[usize],
    params: &SystemParams,
) -> SimResult<(f64, f64, f64)> {
    if cluster.is_empty() {
        return Err(SimError::domain("index_after_merge: empty cluster"));
    }
    if cluster.len() >= masses.len() {
        return Err(SimError::domain(
            "index_after_merge: cluster must be a strict subset (a single post-merge \
             particle has no pairwise moment)",
        ));
    }
    let mut in_cluster = vec![false; masses.len()];
    for &i in cluster {
        if i >= masses.len() {
            return Err(SimError::domain(format!(
                "index_after_merge: cluster index {i} out of range"
            )));
        }
        in_cluster[i] = true;
    }

    let nu_initial = bessel_index(masses, params)?;
    let cluster_masses: Vec<f64> = cluster.iter().map(|&i| masses[i]).collect();
    let nu_cluster = bessel_index(&cluster_masses, params)?;

    let merged: f64 = cluster_masses.iter().sum();
    let mut post: Vec<f64> = masses
        .iter()
        .zip(&in_cluster)
        .filter(|(_, &inside)| !inside)
        .map(|(&m, _)| m)
        .collect();
    post.push(merged);
    let nu_final = bessel_index(&post, params)?;

    Ok((nu_initial, nu_final, nu_cluster))
}

/// Absorption time of `dY = alpha dt + 2 beta sqrt(Y) dW` started at `y0`,
/// for a negative index. In rescaled time the absorption time is
/// `y0 / (2U)` with `U ~ Gamma(|nu|, 1)`; undoing the `t -> beta^2 t`
/// rescaling gives `y0 / (2 U beta^2)` in physical time.
pub fn sample_hitting_time<R: Rng + ?Sized>(
    y0: f64,
    nu: f64,
    beta: f64,
    rng: &mut R,
) -> SimResult<f64> {
    if nu >= 0.0 {
        return Err(SimError::domain(format!(
            "hitting time undefined for nu = {nu} >= 0 (origin not absorbing)"
        )));
    }
    if y0 < 0.0 {
        return Err(SimError::domain(format!("negative initial moment {y0}")));
    }
    if !(beta > 0.0) {
        return Err(SimError::domain(format!("beta must be positive, got {beta}")));
    }
    if y0 == 0.0 {
        return Ok(0.0);
    }
    let gamma = Gamma::new(-nu, 1.0)
        .map_err(|e| SimError::domain(format!("gamma sampler: {e}")))?;
    let u: f64 = gamma.sample(rng);
    Ok(y0 / (2.0 * u * beta * beta))
}

/// Euler-Maruyama path of the rescaled process
/// `dY = 2(nu+1) dt + 2 sqrt(Y) dW`, clamped at zero (absorption).
///
/// Test oracle for the hitting-time law; not used in production stepping.
pub fn simulate_squared_bessel_oracle<R: Rng + ?Sized>(
    y0: f64,
    nu: f64,
    dt: f64,
    t_max: f64,
    rng: &mut R,
) -> SimResult<(Vec<f64>, Option<f64>)> {
    if !(dt > 0.0) {
        return Err(SimError::domain(format!("dt must be positive, got {dt}")));
    }
    let steps = (t_max / dt).ceil() as usize;
    let mut path = Vec::with_capacity(steps + 1);
    let mut y = y0;
    path.push(y);
    for k in 0..steps {
        y = squared_bessel_step(y, nu, dt, rng);
        path.push(y.max(0.0));
        if y <= 0.0 {
            return Ok((path, Some((k + 1) as f64 * dt)));
        }
    }
    Ok((path, None))
}

/// Absorption time only, without recording the path. Same stepping as
/// [`simulate_squared_bessel_oracle`].
pub fn oracle_absorption_time<R: Rng + ?Sized>(
    y0: f64,
    nu: f64,
    dt: f64,
    t_max: f64,
    rng: &mut R,
) -> SimResult<Option<f64>> {
    if !(dt > 0.0) {
        return Err(SimError::domain(format!("dt must be positive, got {dt}")));
    }
    let steps = (t_max / dt).ceil() as usize;
    let mut y = y0;
    for k in 0..steps {
        y = squared_bessel_step(y, nu, dt, rng);
        if y <= 0.0 {
            return Ok(Some((k + 1) as f64 * dt));
        }
    }
    Ok(None)
}

fn squared_bessel_step<R: Rng + ?Sized>(y: f64, nu: f64, dt: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    y + 2.0 * (nu + 1.0) * dt + 2.0 * y.sqrt() * dt.sqrt() * z
}

/// Exact dt-coefficient added to the pair (x1, x2) second-moment drift by
/// a third particle at x3:
///
/// `2 (m1 m2 / M'^2) (x1 - x2) . (-chi m3 gamma) [ f(x1-x3) - f(x2-x3) ]`
///
/// with `f(x) = x / |x|^2`. A third particle along the pair axis stretches
/// the pair (positive correction); one on the perpendicular bisector
/// compresses it.
pub fn subsystem_drift_exact3(
    x1: Vec2,
    x2: Vec2,
    x3: Vec2,
    m1: f64,
    m2: f64,
    m3: f64,
    chi: f64,
    kernel: &LogKernel,
) -> SimResult<f64> {
    let r13 = x1 - x3;
    let r23 = x2 - x3;
    if r13.norm_sq() == 0.0 || r23.norm_sq() == 0.0 {
        return Err(SimError::domain(
            "subsystem_drift_exact3: third particle coincides with a pair member",
        ));
    }
    let pair_mass = m1 + m2;
    let prefactor = 2.0 * m1 * m2 / (pair_mass * pair_mass);
    let field = r13 / r13.norm_sq() - r23 / r23.norm_sq();
    Ok(prefactor * (x1 - x2).dot(field * (-chi * m3 * kernel.gamma)))
}

/// Monopole approximation to the drift correction exerted on a cluster's
/// second moment by outside particles:
///
/// `sum_i sum_{j != k} (-chi m_i V''(r)) (m_j m_k |x_j - x_k|^2 / M'^2) cos(2 theta)`
///
/// where the inner sum runs over ordered pairs of cluster members, r is
/// the distance from the pair's mass-weighted midpoint to the outsider,
/// and theta is the angle between the pair separation and the line to the
/// outsider. Agrees with the exact three-body correction to second order
/// in the pair separation, and vanishes as the cluster moment goes to zero.
pub fn subsystem_drift_monopole(
    cluster: &[Particle],
    outsiders: &[Particle],
    chi: f64,
    kernel: &LogKernel,
) -> SimResult<f64> {
    if cluster.len() < 2 {
        return Err(SimError::domain(
            "subsystem_drift_monopole: cluster needs at least 2 particles",
        ));
    }
    let cluster_mass: f64 = cluster.iter().map(|p| p.mass).sum();
    let mut total = 0.0;
    for out in outsiders {
        for (a, pj) in cluster.iter().enumerate() {
            for (b, pk) in cluster.iter().enumerate() {
                if a == b {
                    continue;
                }
                let sep = pj.position - pk.position;
                let sep_sq = sep.norm_sq();
                if sep_sq == 0.0 {
                    continue;
                }
                let pair_mass = pj.mass + pk.mass;
                let pair_cm = (pj.position * pj.mass + pk.position * pk.mass) / pair_mass;
                let to_out = pair_cm - out.position;
                let dist_sq = to_out.norm_sq();
                if dist_sq == 0.0 {
                    return Err(SimError::domain(
                        "subsystem_drift_monopole: outsider coincides with a pair center",
                    ));
                }
                let cos_theta_sq = {
                    let d = sep.dot(to_out);
                    d * d / (sep_sq * dist_sq)
                };
                let cos_2theta = 2.0 * cos_theta_sq - 1.0;
                let weight = pj.mass * pk.mass * sep_sq / (cluster_mass * cluster_mass);
                total += -chi * out.mass * kernel.v_second(dist_sq.sqrt()) * weight * cos_2theta;
            }
        }
    }
    Ok(total)
}

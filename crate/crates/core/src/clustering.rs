//! Adaptive quadtree detection of isolated, collidable particle
//! aggregates.
//!
//! Starting from one square cell covering all particles, a cell is kept
//! when it is both "separated" (its local second moment is small against
//! the squared cell diagonal) and "collidable" (its index is negative and
//! the moment SDE predicts hitting zero within the step with probability
//! at least p). Cells failing either test are split into four subcells
//! while they hold more than two particles.

use crate::bessel::{bessel_index, moment_coefficients};
use crate::error::{SimError, SimResult};
use crate::model::{Particle, SystemParams};
use crate::vec2::Vec2;

/// Default separation threshold eta.
pub const DEFAULT_ETA: f64 = 0.1;
/// Default collision probability floor p.
pub const DEFAULT_COLLISION_PROBABILITY: f64 = 0.01;
/// Cells are never refined beyond this depth; cell widths underflow past
/// it, and a genuinely collapsing aggregate separates long before.
pub const MAX_DEPTH: usize = 40;

/// A kept quadtree cell: a candidate for coalescence this macro step.
#[derive(Debug, Clone)]
pub struct ClusterCell {
    /// Lower-left corner of the square cell.
    pub corner: Vec2,
    /// Side length of the square cell.
    pub width: f64,
    /// Indices into the particle snapshot the detection ran on.
    pub members: Vec<usize>,
    /// Ids of the member particles.
    pub member_ids: Vec<u64>,
    /// Local normalized second moment of the members.
    pub second_moment: f64,
    /// Squared cell diagonal.
    pub diag_sq: f64,
    /// Total member mass.
    pub mass: f64,
    /// Bessel index of the member subsystem.
    pub nu: f64,
    /// Second-moment drift of the member subsystem.
    pub alpha: f64,
    /// Second-moment noise scale of the member subsystem.
    pub beta: f64,
}

/// Inverse of the standard normal distribution function, by Acklam's
/// rational approximation (absolute error below 1.2e-9 on (0,1)).
pub fn inv_normal_cdf(p: f64) -> SimResult<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SimError::domain(format!(
            "inv_normal_cdf: p must lie in (0,1), got {p}"
        )));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    Ok(x)
}

/// A cell is separated when its local moment is small against the squared
/// cell diagonal: `Y / s^2 < eta`.
pub fn is_separated(second_moment: f64, diag_sq: f64, eta: f64) -> bool {
    second_moment < eta * diag_sq
}

/// A cell is collidable when its index is negative and the moment SDE
/// predicts absorption within the step above the probability floor:
/// `Y + alpha dt + 2 beta sqrt(Y) PhiInv(p) sqrt(dt) < 0`.
pub fn is_collidable(
    second_moment: f64,
    nu: f64,
    alpha: f64,
    beta: f64,
    dt: f64,
    p: f64,
) -> SimResult<bool> {
    if !(dt > 0.0) {
        return Err(SimError::domain(format!("dt must be positive, got {dt}")));
    }
    if nu >= 0.0 {
        return Ok(false);
    }
    let quantile = inv_normal_cdf(p)?;
    Ok(second_moment
        + alpha * dt
        + 2.0 * beta * second_moment.sqrt() * quantile * dt.sqrt()
        < 0.0)
}

struct DetectCtx<'a> {
    particles: &'a [Particle],
    dt: f64,
    eta: f64,
    p: f64,
    params: &'a SystemParams,
    kept: Vec<ClusterCell>,
}

/// Quadtree search for separated, collidable aggregates. Returned cells
/// are pairwise disjoint and each holds at least two particles.
///
/// The root is the smallest square covering every particle and, when
/// given, the `root_hint` square `(corner, width)`. A hint widens the
/// root when a tight aggregate makes up the whole system: alone it would
/// exactly fill the root and could never test as separated.
pub fn detect_clusters(
    particles: &[Particle],
    dt: f64,
    eta: f64,
    p: f64,
    params: &SystemParams,
    root_hint: Option<(Vec2, f64)>,
) -> SimResult<Vec<ClusterCell>> {
    if particles.len() < 2 {
        return Ok(Vec::new());
    }
    let mut min = particles[0].position;
    let mut max = particles[0].position;
    for q in particles {
        min.x = min.x.min(q.position.x);
        min.y = min.y.min(q.position.y);
        max.x = max.x.max(q.position.x);
        max.y = max.y.max(q.position.y);
    }
    if let Some((corner, hint_width)) = root_hint {
        min.x = min.x.min(corner.x);
        min.y = min.y.min(corner.y);
        max.x = max.x.max(corner.x + hint_width);
        max.y = max.y.max(corner.y + hint_width);
    }
    let extent = (max.x - min.x).max(max.y - min.y);
    // Expand 1% so no particle sits exactly on the boundary; a fully
    // coincident system without a hint gets an arbitrary positive width
    // (only s^2 depends on it, and its moment is zero).
    let width = if extent > 0.0 { extent * 1.01 } else { 1.0 };
    let center = (min + max) * 0.5;
    let corner = center - Vec2::new(width / 2.0, width / 2.0);

    let mut ctx = DetectCtx {
        particles,
        dt,
        eta,
        p,
        params,
        kept: Vec::new(),
    };
    let members: Vec<usize> = (0..particles.len()).collect();
    visit(&mut ctx, corner, width, members, 0)?;
    Ok(ctx.kept)
}

fn visit(
    ctx: &mut DetectCtx<'_>,
    corner: Vec2,
    width: f64,
    members: Vec<usize>,
    depth: usize,
) -> SimResult<()> {
    if members.len() < 2 {
        return Ok(());
    }
    let subset: Vec<Particle> = members.iter().map(|&i| ctx.particles[i]).collect();
    let masses: Vec<f64> = subset.iter().map(|q| q.mass).collect();
    let second_moment = crate::model::system_second_moment(&subset)?;
    let diag_sq = 2.0 * width * width;
    let nu = bessel_index(&masses, ctx.params)?;
    let coeff = moment_coefficients(&masses, ctx.params)?;

    let separated = is_separated(second_moment, diag_sq, ctx.eta);
    if separated
        && is_collidable(second_moment, nu, coeff.alpha, coeff.beta, ctx.dt, ctx.p)?
    {
        let mass: f64 = masses.iter().sum();
        ctx.kept.push(ClusterCell {
            corner,
            width,
            member_ids: subset.iter().map(|q| q.id).collect(),
            members,
            second_moment,
            diag_sq,
            mass,
            nu,
            alpha: coeff.alpha,
            beta: coeff.beta,
        });
        return Ok(());
    }

    // Whether the cell failed separation or only collidability, it is
    // refined while it holds more than two particles; two-particle cells
    // that fail are dropped.
    if members.len() > 2 && depth < MAX_DEPTH {
        let half = width / 2.0;
        let cx = corner.x + half;
        let cy = corner.y + half;
        let mut quads: [Vec<usize>; 4] = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for &i in &members {
            let pos = ctx.particles[i].position;
            let right = pos.x >= cx;
            let top = pos.y >= cy;
            quads[(top as usize) * 2 + right as usize].push(i);
        }
        let corners = [
            corner,
            Vec2::new(cx, corner.y),
            Vec2::new(corner.x, cy),
            Vec2::new(cx, cy),
        ];
        for (quad, sub_corner) in quads.into_iter().zip(corners) {
            visit(ctx, sub_corner, half, quad, depth + 1)?;
        }
    }
    Ok(())
}

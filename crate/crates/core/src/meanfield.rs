//! Grid-particle interaction field: mass deposition, five-point Poisson
//! solve with monopole boundary data, and gradient sampling.
//!
//! The O(N^2) pairwise drift in the particle SDE is replaced by one global
//! potential per macro step: particle masses are deposited bilinearly onto
//! a uniform grid, the potential is solved with conjugate gradients, and
//! each particle samples the interpolated gradient. Outside the grid the
//! whole system is replaced by a point mass at its center of mass.

use crate::error::{SimError, SimResult};
use crate::kernel::LogKernel;
use crate::model::Particle;
use crate::vec2::Vec2;
use std::io::Write;
use std::path::Path;

/// Uniform rectangular grid with square cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> SimResult<Self> {
        if nx < 3 || ny < 3 {
            return Err(SimError::config(format!(
                "grid must have at least 3 nodes per axis, got {nx}x{ny}"
            )));
        }
        let dx = (x1 - x0) / (nx - 1) as f64;
        let dy = (y1 - y0) / (ny - 1) as f64;
        if !(dx > 0.0) || (dx - dy).abs() > 1e-9 * dx {
            return Err(SimError::config(format!(
                "grid cells must be square, got dx={dx}, dy={dy}"
            )));
        }
        Ok(Grid { x0, y0, nx, ny, dx })
    }

    /// Square grid on [c-h, c+h]^2 with `n` nodes per axis.
    pub fn centered_square(center: Vec2, half_width: f64, n: usize) -> SimResult<Self> {
        Grid::new(
            center.x - half_width,
            center.x + half_width,
            center.y - half_width,
            center.y + half_width,
            n,
            n,
        )
    }

    pub fn x1(&self) -> f64 {
        self.x0 + (self.nx - 1) as f64 * self.dx
    }

    pub fn y1(&self) -> f64 {
        self.y0 + (self.ny - 1) as f64 * self.dx
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn node(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new(
            self.x0 + i as f64 * self.dx,
            self.y0 + j as f64 * self.dx,
        )
    }

    pub fn contains(&self, x: Vec2) -> bool {
        x.x >= self.x0 && x.x <= self.x1() && x.y >= self.y0 && x.y <= self.y1()
    }

    /// Lower-left node of the cell containing `x` plus fractional offsets,
    /// clamped so the upper/right domain edge belongs to the last cell.
    fn cell_of(&self, x: Vec2) -> (usize, usize, f64, f64) {
        let fx = (x.x - self.x0) / self.dx;
        let fy = (x.y - self.y0) / self.dx;
        let i = (fx.floor() as usize).min(self.nx - 2);
        let j = (fy.floor() as usize).min(self.ny - 2);
        (i, j, fx - i as f64, fy - j as f64)
    }
}

/// Bilinear deposition of particle masses onto grid nodes, divided by the
/// cell area to produce a density. Out-of-domain particles are skipped;
/// they only enter through the monopole boundary data.
pub fn deposit_mass(particles: &[Particle], grid: &Grid) -> Vec<f64> {
    let mut density = vec![0.0; grid.len()];
    for p in particles {
        if !grid.contains(p.position) {
            continue;
        }
        let (i, j, tx, ty) = grid.cell_of(p.position);
        let m = p.mass;
        density[grid.idx(i, j)] += m * (1.0 - tx) * (1.0 - ty);
        density[grid.idx(i + 1, j)] += m * tx * (1.0 - ty);
        density[grid.idx(i, j + 1)] += m * (1.0 - tx) * ty;
        density[grid.idx(i + 1, j + 1)] += m * tx * ty;
    }
    let inv_area = 1.0 / (grid.dx * grid.dx);
    for d in &mut density {
        *d *= inv_area;
    }
    density
}

/// Relative residual tolerance of the Poisson solve.
pub const SOLVER_TOLERANCE: f64 = 1e-8;

/// Solve the five-point discrete Poisson equation `lap_h C = -P` with
/// Dirichlet boundary data from the monopole approximation
/// `C = -M V(|x - x_cm|)`. Conjugate gradients on the interior unknowns,
/// matrix-free; `guess` warm-starts the iteration.
pub fn solve_field(
    density: &[f64],
    grid: &Grid,
    total_mass: f64,
    com: Vec2,
    kernel: &LogKernel,
    guess: Option<&[f64]>,
) -> SimResult<Vec<f64>> {
    assert_eq!(density.len(), grid.len());
    let (nx, ny, dx) = (grid.nx, grid.ny, grid.dx);
    let inv_dx2 = 1.0 / (dx * dx);

    let mut potential = vec![0.0; grid.len()];
    // Monopole boundary data; the distance is clamped below by dx/2 so a
    // center of mass sitting on the boundary cannot produce -inf.
    if total_mass != 0.0 {
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    let r = (grid.node(i, j) - com).norm().max(dx / 2.0);
                    potential[grid.idx(i, j)] = -total_mass * kernel.v(r);
                }
            }
        }
    }
    if let Some(g) = guess {
        assert_eq!(g.len(), grid.len());
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                potential[grid.idx(i, j)] = g[grid.idx(i, j)];
            }
        }
    }

    // A u = (4u - sum of neighbors)/dx^2 restricted to interior nodes;
    // boundary values are folded into the right-hand side b = P + bc/dx^2.
    let apply = |u: &[f64], out: &mut [f64]| {
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let c = grid.idx(i, j);
                out[c] = (4.0 * u[c] - u[c - 1] - u[c + 1] - u[c - nx] - u[c + nx]) * inv_dx2;
            }
        }
    };

    let mut b = vec![0.0; grid.len()];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let c = grid.idx(i, j);
            let mut v = density[c];
            if i == 1 {
                v += potential[c - 1] * inv_dx2;
            }
            if i == nx - 2 {
                v += potential[c + 1] * inv_dx2;
            }
            if j == 1 {
                v += potential[c - nx] * inv_dx2;
            }
            if j == ny - 2 {
                v += potential[c + nx] * inv_dx2;
            }
            b[c] = v;
        }
    }

    // Interior-only CG; boundary entries of the work vectors stay zero.
    let mut x = vec![0.0; grid.len()];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            x[grid.idx(i, j)] = potential[grid.idx(i, j)];
        }
    }
    let mut ax = vec![0.0; grid.len()];
    apply(&x, &mut ax);
    let mut r = vec![0.0; grid.len()];
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let c = grid.idx(i, j);
            r[c] = b[c] - ax[c];
        }
    }

    let p_inf = density.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let b_inf = b.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let tol = SOLVER_TOLERANCE * if p_inf > 0.0 { p_inf } else { b_inf };
    let inf_norm = |v: &[f64]| v.iter().fold(0.0_f64, |a, &w| a.max(w.abs()));

    if inf_norm(&r) > tol {
        let mut p = r.clone();
        let mut ap = vec![0.0; grid.len()];
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let max_iter = 20 * (nx + ny).max(100);
        let mut converged = false;
        for _ in 0..max_iter {
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            let step = rr / pap;
            for c in 0..x.len() {
                x[c] += step * p[c];
                r[c] -= step * ap[c];
            }
            if inf_norm(&r) <= tol {
                converged = true;
                break;
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let ratio = rr_new / rr;
            rr = rr_new;
            for c in 0..p.len() {
                p[c] = r[c] + ratio * p[c];
            }
        }
        if !converged && inf_norm(&r) > tol {
            return Err(SimError::SolverDiverged {
                residual: inf_norm(&r),
                tolerance: tol,
                iterations: max_iter,
            });
        }
    }

    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            potential[grid.idx(i, j)] = x[grid.idx(i, j)];
        }
    }
    Ok(potential)
}

/// Second-order gradient of a grid function: central differences at
/// interior nodes, one-sided three-point stencils on the boundary ring.
pub fn gradient_field(potential: &[f64], grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(potential.len(), grid.len());
    let (nx, ny) = (grid.nx, grid.ny);
    let inv_2dx = 1.0 / (2.0 * grid.dx);
    let mut gx = vec![0.0; grid.len()];
    let mut gy = vec![0.0; grid.len()];
    for j in 0..ny {
        for i in 0..nx {
            let c = grid.idx(i, j);
            gx[c] = if i == 0 {
                (-3.0 * potential[c] + 4.0 * potential[c + 1] - potential[c + 2]) * inv_2dx
            } else if i == nx - 1 {
                (3.0 * potential[c] - 4.0 * potential[c - 1] + potential[c - 2]) * inv_2dx
            } else {
                (potential[c + 1] - potential[c - 1]) * inv_2dx
            };
            gy[c] = if j == 0 {
                (-3.0 * potential[c] + 4.0 * potential[c + nx] - potential[c + 2 * nx]) * inv_2dx
            } else if j == ny - 1 {
                (3.0 * potential[c] - 4.0 * potential[c - nx] + potential[c - 2 * nx]) * inv_2dx
            } else {
                (potential[c + nx] - potential[c - nx]) * inv_2dx
            };
        }
    }
    (gx, gy)
}

/// Solved interaction field for one macro step. Immutable once built.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Grid,
    pub density: Vec<f64>,
    pub potential: Vec<f64>,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
    /// Total mass of the whole system, including out-of-domain particles.
    pub total_mass: f64,
    /// Center of mass of the whole system.
    pub com: Vec2,
}

impl Field {
    /// Deposit, solve, and differentiate in one pass. Out-of-domain
    /// particles are excluded from deposition but included in the total
    /// mass and center of mass used for the boundary and far field.
    pub fn assemble(
        particles: &[Particle],
        grid: &Grid,
        kernel: &LogKernel,
        guess: Option<&[f64]>,
    ) -> SimResult<Field> {
        let total_mass: f64 = particles.iter().map(|p| p.mass).sum();
        let com = if total_mass > 0.0 {
            crate::model::center_of_mass(particles)?
        } else {
            Vec2::new(
                (grid.x0 + grid.x1()) / 2.0,
                (grid.y0 + grid.y1()) / 2.0,
            )
        };
        let density = deposit_mass(particles, grid);
        let potential = solve_field(&density, grid, total_mass, com, kernel, guess)?;
        let (grad_x, grad_y) = gradient_field(&potential, grid);
        Ok(Field {
            grid: *grid,
            density,
            potential,
            grad_x,
            grad_y,
            total_mass,
            com,
        })
    }

    /// Interaction-field gradient at an arbitrary point: bilinear
    /// interpolation of the grid gradient in-domain, monopole
    /// `-M grad V(x - x_cm)` outside.
    pub fn sample_gradient(&self, x: Vec2, kernel: &LogKernel) -> SimResult<Vec2> {
        if self.grid.contains(x) {
            let (i, j, tx, ty) = self.grid.cell_of(x);
            let c00 = self.grid.idx(i, j);
            let c10 = c00 + 1;
            let c01 = c00 + self.grid.nx;
            let c11 = c01 + 1;
            let w00 = (1.0 - tx) * (1.0 - ty);
            let w10 = tx * (1.0 - ty);
            let w01 = (1.0 - tx) * ty;
            let w11 = tx * ty;
            Ok(Vec2::new(
                w00 * self.grad_x[c00]
                    + w10 * self.grad_x[c10]
                    + w01 * self.grad_x[c01]
                    + w11 * self.grad_x[c11],
                w00 * self.grad_y[c00]
                    + w10 * self.grad_y[c10]
                    + w01 * self.grad_y[c01]
                    + w11 * self.grad_y[c11],
            ))
        } else {
            let rel = x - self.com;
            if rel.norm_sq() == 0.0 {
                return Err(SimError::domain(
                    "sample_gradient: point coincides with the center of mass outside \
                     the domain (singular monopole)",
                ));
            }
            Ok(-self.total_mass * kernel.grad(rel))
        }
    }
}

/// Plain-text matrix snapshot: ny rows of nx space-separated values,
/// row-major, C-locale decimals.
pub fn write_grid_matrix(path: &Path, grid: &Grid, values: &[f64]) -> SimResult<()> {
    assert_eq!(values.len(), grid.len());
    let file = std::fs::File::create(path)
        .map_err(|e| SimError::io(path.display().to_string(), e))?;
    let mut w = std::io::BufWriter::new(file);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            if i > 0 {
                write!(w, " ").map_err(|e| SimError::io(path.display().to_string(), e))?;
            }
            write!(w, "{:.10e}", values[grid.idx(i, j)])
                .map_err(|e| SimError::io(path.display().to_string(), e))?;
        }
        writeln!(w).map_err(|e| SimError::io(path.display().to_string(), e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Particle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit_grid(n: usize) -> Grid {
        Grid::new(-1.0, 1.0, -1.0, 1.0, n, n).unwrap()
    }

    fn particle(x: f64, y: f64, mass: f64) -> Particle {
        Particle::new(0, Vec2::new(x, y), mass, 0).unwrap()
    }

    #[test]
    fn grid_rejects_nonsquare_cells() {
        assert!(Grid::new(0.0, 1.0, 0.0, 2.0, 11, 11).is_err());
        assert!(Grid::new(0.0, 1.0, 0.0, 1.0, 2, 2).is_err());
        assert!(Grid::new(0.0, 1.0, 0.0, 2.0, 11, 21).is_ok());
    }

    #[test]
    fn deposit_on_node() {
        let grid = Grid::new(0.0, 4.0, 0.0, 4.0, 5, 5).unwrap();
        let density = deposit_mass(&[particle(2.0, 2.0, 4.0)], &grid);
        assert_eq!(density[grid.idx(2, 2)], 4.0);
        assert_eq!(density[grid.idx(1, 2)], 0.0);
        assert_eq!(density[grid.idx(2, 3)], 0.0);
    }

    #[test]
    fn deposit_at_cell_center_splits_evenly() {
        let grid = Grid::new(0.0, 4.0, 0.0, 4.0, 5, 5).unwrap();
        let density = deposit_mass(&[particle(1.5, 2.5, 8.0)], &grid);
        for (i, j) in [(1, 2), (2, 2), (1, 3), (2, 3)] {
            assert!((density[grid.idx(i, j)] - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deposit_partition_of_unity() {
        let grid = unit_grid(17);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cell_area = grid.dx * grid.dx;
        for _ in 0..1000 {
            let p = particle(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 3.7);
            let density = deposit_mass(&[p], &grid);
            let total: f64 = density.iter().sum::<f64>() * cell_area;
            assert!((total - 3.7).abs() < 1e-10 * 3.7);
        }
    }

    #[test]
    fn deposit_skips_out_of_domain() {
        let grid = unit_grid(9);
        let density = deposit_mass(&[particle(5.0, 0.0, 1.0)], &grid);
        assert!(density.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solve_zero_mass_zero_field() {
        let grid = unit_grid(17);
        let density = vec![0.0; grid.len()];
        let kernel = LogKernel::default();
        let c = solve_field(&density, &grid, 0.0, Vec2::ZERO, &kernel, None).unwrap();
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solve_residual_bound() {
        let grid = unit_grid(33);
        let kernel = LogKernel::default();
        let particles = vec![
            particle(0.1, 0.2, 2.0),
            particle(-0.4, 0.3, 1.0),
            particle(0.5, -0.5, 3.0),
        ];
        let density = deposit_mass(&particles, &grid);
        let com = crate::model::center_of_mass(&particles).unwrap();
        let c = solve_field(&density, &grid, 6.0, com, &kernel, None).unwrap();
        let inv_dx2 = 1.0 / (grid.dx * grid.dx);
        let p_inf = density.iter().fold(0.0_f64, |a, &v| a.max(v));
        for j in 1..grid.ny - 1 {
            for i in 1..grid.nx - 1 {
                let k = grid.idx(i, j);
                let lap = (c[k - 1] + c[k + 1] + c[k - grid.nx] + c[k + grid.nx] - 4.0 * c[k])
                    * inv_dx2;
                assert!((lap + density[k]).abs() <= SOLVER_TOLERANCE * p_inf * 1.01);
            }
        }
    }

    #[test]
    fn solve_matches_fundamental_solution() {
        // Point mass 2pi at the center of [-1,1]^2 on 129x129: potential in
        // the annulus 0.25 <= |x| <= 0.8 matches -ln|x| within 5%.
        let grid = unit_grid(129);
        let kernel = LogKernel::default();
        let particles = vec![particle(0.0, 0.0, 2.0 * PI)];
        let density = deposit_mass(&particles, &grid);
        let c = solve_field(&density, &grid, 2.0 * PI, Vec2::ZERO, &kernel, None).unwrap();
        let mut max_rel = 0.0_f64;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let r = grid.node(i, j).norm();
                if (0.25..=0.8).contains(&r) {
                    let exact = -r.ln();
                    let rel = (c[grid.idx(i, j)] - exact).abs() / exact.abs();
                    max_rel = max_rel.max(rel);
                }
            }
        }
        assert!(max_rel <= 0.05, "max relative error {max_rel}");
    }

    #[test]
    fn solve_translation_equivariant() {
        let kernel = LogKernel::default();
        let grid_a = unit_grid(33);
        let grid_b = Grid::new(4.0, 6.0, -2.0, 0.0, 33, 33).unwrap();
        let pa = vec![particle(0.25, -0.125, 2.0)];
        let pb = vec![particle(5.25, -1.125, 2.0)];
        let ca = solve_field(
            &deposit_mass(&pa, &grid_a),
            &grid_a,
            2.0,
            pa[0].position,
            &kernel,
            None,
        )
        .unwrap();
        let cb = solve_field(
            &deposit_mass(&pb, &grid_b),
            &grid_b,
            2.0,
            pb[0].position,
            &kernel,
            None,
        )
        .unwrap();
        for (a, b) in ca.iter().zip(&cb) {
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_exact_for_linear_and_quadratic() {
        let grid = unit_grid(21);
        let linear: Vec<f64> = (0..grid.len())
            .map(|c| 3.0 * grid.node(c % grid.nx, c / grid.nx).x)
            .collect();
        let (gx, gy) = gradient_field(&linear, &grid);
        for c in 0..grid.len() {
            assert!((gx[c] - 3.0).abs() < 1e-10);
            assert!(gy[c].abs() < 1e-10);
        }
        let quad: Vec<f64> = (0..grid.len())
            .map(|c| {
                let p = grid.node(c % grid.nx, c / grid.nx);
                p.x * p.x
            })
            .collect();
        let (gx, _) = gradient_field(&quad, &grid);
        for j in 0..grid.ny {
            for i in 1..grid.nx - 1 {
                let x = grid.node(i, j).x;
                assert!((gx[grid.idx(i, j)] - 2.0 * x).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let grid = unit_grid(9);
        let (gx, gy) = gradient_field(&vec![7.0; grid.len()], &grid);
        assert!(gx.iter().chain(&gy).all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn sample_gradient_monopole_outside() {
        let grid = Grid::new(-0.5, 0.5, -0.5, 0.5, 9, 9).unwrap();
        let kernel = LogKernel::default();
        let particles = vec![particle(0.0, 0.0, 2.0 * PI)];
        let field = Field::assemble(&particles, &grid, &kernel, None).unwrap();
        let g = field.sample_gradient(Vec2::new(1.0, 0.0), &kernel).unwrap();
        assert!((g.x + 1.0).abs() < 1e-12 && g.y.abs() < 1e-12);
    }

    #[test]
    fn sample_gradient_on_node_returns_node_value() {
        let grid = unit_grid(17);
        let kernel = LogKernel::default();
        let particles = vec![particle(0.3, -0.2, 5.0)];
        let field = Field::assemble(&particles, &grid, &kernel, None).unwrap();
        let node = grid.node(4, 11);
        let g = field.sample_gradient(node, &kernel).unwrap();
        assert!((g.x - field.grad_x[grid.idx(4, 11)]).abs() < 1e-12);
        assert!((g.y - field.grad_y[grid.idx(4, 11)]).abs() < 1e-12);
    }

    #[test]
    fn sampled_gradient_points_toward_mass() {
        let grid = unit_grid(65);
        let kernel = LogKernel::default();
        let source = Vec2::new(0.1, -0.05);
        let particles = vec![Particle::new(0, source, 10.0, 0).unwrap()];
        let field = Field::assemble(&particles, &grid, &kernel, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut checked = 0;
        while checked < 100 {
            let x = Vec2::new(rng.gen_range(-0.95..0.95), rng.gen_range(-0.95..0.95));
            if (x - source).norm() < 2.0 * grid.dx {
                continue;
            }
            let g = field.sample_gradient(x, &kernel).unwrap();
            // Drift is +chi grad c, so grad c must point toward the mass.
            assert!(g.dot(source - x) > 0.0, "gradient points away at {x:?}");
            checked += 1;
        }
    }

    #[test]
    fn snapshot_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::new(0.0, 1.0, 0.0, 1.5, 3, 4).unwrap();
        let values: Vec<f64> = (0..grid.len()).map(|c| c as f64 * 0.25 - 1.0).collect();
        let path = dir.path().join("snap.txt");
        write_grid_matrix(&path, &grid, &values).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let parsed: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(parsed.len(), grid.len());
        assert_eq!(text.lines().count(), grid.ny);
        for (a, b) in parsed.iter().zip(&values) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

use crate::vec2::Vec2;
use std::f64::consts::PI;

/// Coefficient of the logarithmic singularity of the planar Laplacian's
/// fundamental solution, `V(r) = ln(r) / 2pi`.
pub const GAMMA_LAPLACE: f64 = 1.0 / (2.0 * PI);

/// Radial interaction kernel `V(r) = gamma * ln(r)`.
///
/// Only the logarithmic kernel is implemented, but everything downstream
/// touches the kernel exclusively through `(v, v_prime, v_second, gamma)`,
/// so a kernel with a different regular part (e.g. a screened one) can be
/// added without changing the index or correction formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogKernel {
    pub gamma: f64,
}

impl Default for LogKernel {
    fn default() -> Self {
        LogKernel {
            gamma: GAMMA_LAPLACE,
        }
    }
}

impl LogKernel {
    pub fn new(gamma: f64) -> Self {
        LogKernel { gamma }
    }

    pub fn v(&self, r: f64) -> f64 {
        self.gamma * r.ln()
    }

    pub fn v_prime(&self, r: f64) -> f64 {
        self.gamma / r
    }

    pub fn v_second(&self, r: f64) -> f64 {
        -self.gamma / (r * r)
    }

    /// Gradient of `V(|x|)` at `x`.
    pub fn grad(&self, x: Vec2) -> Vec2 {
        x * (self.gamma / x.norm_sq())
    }
}

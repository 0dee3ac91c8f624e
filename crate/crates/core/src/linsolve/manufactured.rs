//! Random admissible linear problems with known solutions.

use rand::Rng;

use super::{apply_linear, LinearizedProblem, WallTraction};
use crate::error::Result;
use crate::field::{curl_of_stream, divergence, random, GridSpec, ScalarField, VectorField};
use crate::inverse_div::bogovskii;
use crate::model::ModelParams;

/// Knobs for [`random_problem`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemShape {
    pub m: f64,
    pub gamma: f64,
    pub friction: f64,
    /// Max-norm of the coefficient velocities.
    pub velocity: f64,
    /// Max-norm of the frozen density offset.
    pub density: f64,
    /// Max-norm scale of the wall data `h`.
    pub wall: f64,
}

impl Default for ProblemShape {
    fn default() -> Self {
        ProblemShape { m: 1e3, gamma: 2.0, friction: 1.0, velocity: 0.5, density: 1.0, wall: 0.1 }
    }
}

/// An exact solution together with the problem it solves.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub problem: LinearizedProblem,
    pub r: ScalarField,
    pub u: VectorField,
}

fn wall_profile<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    random::smooth_profile(rng, n, 3).into_iter().map(|v| scale * v).collect()
}

/// Smooth coefficients and solution; `G` is computed by applying the
/// operator so `(r, u)` is the exact discrete solution.
pub fn random_problem<R: Rng>(grid: GridSpec, shape: ProblemShape, rng: &mut R) -> Result<Manufactured> {
    let params = ModelParams::new(shape.m, shape.gamma, shape.friction, 4.0, VectorField::zeros(grid))?;
    let ub = random::smooth_wall_compatible(grid, rng, 3, shape.velocity);
    let uf = random::smooth_wall_compatible(grid, rng, 3, shape.velocity);
    let rt = random::smooth_mean_zero(grid, rng, 3);
    let rt = rt.scaled(shape.density / rt.max_abs().max(f64::MIN_POSITIVE));
    let r = random::smooth_mean_zero(grid, rng, 3);
    let r = r.scaled(1.0 / r.max_abs().max(f64::MIN_POSITIVE));
    let h = WallTraction {
        bottom: wall_profile(rng, grid.nx + 1, shape.wall),
        top: wall_profile(rng, grid.nx + 1, shape.wall),
        left: wall_profile(rng, grid.ny + 1, shape.wall),
        right: wall_profile(rng, grid.ny + 1, shape.wall),
    };
    let sol = curl_of_stream(&random::smooth_stream(grid, rng, 3));
    let sol = sol.scaled(0.1 / sol.max_abs().max(f64::MIN_POSITIVE));
    // Compressible part from the continuity equation.
    let flux = super::face_product(&r, &uf);
    let target: ScalarField = divergence(&flux).scaled(-1.0 / shape.m);
    let u = sol.add(&bogovskii(&crate::field::mean_zero_project(&target))?);
    let mut problem = LinearizedProblem {
        params,
        transport_velocity: uf,
        convective_velocity: ub,
        density_offset: rt,
        rhs_g: VectorField::zeros(grid),
        rhs_h: h,
    };
    problem.rhs_g = apply_linear(&problem, &r, &u).1;
    Ok(Manufactured { problem, r, u })
}

//! Exact discrete solutions of the nonlinear problem.

use rand::Rng;

use super::taylor::pressure_gradient;
use crate::error::Result;
use crate::field::{cell_to_xfaces, cell_to_yfaces, curl_of_stream, random, GridSpec, ScalarField, VectorField};
use crate::linsolve::{convection, face_product, friction_stress, viscous_operator};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub params: ModelParams,
    pub r: ScalarField,
    pub u: VectorField,
}

/// Random `(r, u)` with `(m + r) u = curl psi` on faces, so mass is
/// conserved exactly, and the force for which momentum balances on every
/// interior face. `density` and `velocity` set the sizes of `r` and `u`.
pub fn random_fixed_point<R: Rng>(
    grid: GridSpec,
    m: f64,
    gamma: f64,
    friction: f64,
    density: f64,
    velocity: f64,
    rng: &mut R,
) -> Result<FixedPoint> {
    let r0 = random::smooth_mean_zero(grid, rng, 3);
    let r = r0.scaled(density / r0.max_abs().max(f64::MIN_POSITIVE));
    let rho = r.map(|v| m + v);
    let psi = random::smooth_stream(grid, rng, 3);
    let flux = curl_of_stream(&psi);
    let flux = flux.scaled(m * velocity / flux.max_abs().max(f64::MIN_POSITIVE));
    let (rx, ry) = (cell_to_xfaces(&rho), cell_to_yfaces(&rho));
    let u = VectorField {
        grid,
        xcomp: flux.xcomp.iter().zip(&rx).map(|(f, d)| f / d).collect(),
        ycomp: flux.ycomp.iter().zip(&ry).map(|(f, d)| f / d).collect(),
    }
    .with_walls_zeroed();

    let mut params = ModelParams::new(m, gamma, friction, 4.0, VectorField::zeros(grid))?;
    let load = convection(&face_product(&rho, &u), &u)
        .add(&viscous_operator(&rho, &u, &friction_stress(&u, friction)))
        .add(&pressure_gradient(&r, &params)?)
        .with_walls_zeroed();
    params.force = VectorField {
        grid,
        xcomp: load.xcomp.iter().zip(&rx).map(|(f, d)| f / d).collect(),
        ycomp: load.ycomp.iter().zip(&ry).map(|(f, d)| f / d).collect(),
    };
    Ok(FixedPoint { params, r, u })
}

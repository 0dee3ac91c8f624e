use super::taylor::taylor_remainder;
use crate::field::{divergence, gradient, lp_norm, Exponent, ScalarField, VectorField};
use crate::linsolve::{convection, face_product, friction_stress, viscous_operator};
use crate::model::ModelParams;

/// Relative discrete residuals of the nonlinear system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NonlinearResidual {
    /// `||div((m + r) u)||_2` over the size of its terms.
    pub mass: f64,
    /// Momentum balance on interior faces over the sum of term norms.
    pub momentum: f64,
    /// Largest wall-normal velocity.
    pub bc: f64,
    /// `|int r| / (m |Omega|)`.
    pub mean: f64,
}

impl NonlinearResidual {
    pub fn max(&self) -> f64 {
        self.mass.max(self.momentum).max(self.bc).max(self.mean)
    }
}

fn rel(num: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        num / scale
    } else {
        num
    }
}

/// Residuals of `rho = m + r`, `u` in the original equations with
/// viscosity `rho`, no bulk viscosity and pressure `rho^gamma`. The wall law
/// enters through the wall-node stresses of the viscous term. A nonpositive
/// density gives an infinite momentum residual.
pub fn nonlinear_residual(r: &ScalarField, u: &VectorField, params: &ModelParams) -> NonlinearResidual {
    let m = params.m;
    let two = Exponent::TWO;
    let g = u.grid;

    let du = divergence(u);
    let flux_div = divergence(&face_product(r, u));
    let mass = du.scaled(m).add(&flux_div);
    let (mut sx, mut sy) = (0.0, 0.0);
    for j in 0..g.ny {
        for i in 0..g.nx {
            sx += ((u.x_at(i + 1, j) - u.x_at(i, j)) / g.hx()).powi(2);
            sy += ((u.y_at(i, j + 1) - u.y_at(i, j)) / g.hy()).powi(2);
        }
    }
    let area = g.cell_area();
    let mass_scale = m * ((sx * area).sqrt() + (sy * area).sqrt()) + lp_norm(&flux_div, two);

    let momentum = match taylor_remainder(r, params) {
        Ok(rem) => {
            let rho = r.map(|v| m + v);
            let conv = convection(&face_product(&rho, u), u).with_walls_zeroed();
            let visc = viscous_operator(&rho, u, &friction_stress(u, params.friction)).with_walls_zeroed();
            let lin = gradient(r).scaled(params.gamma * m.powf(params.gamma - 1.0)).with_walls_zeroed();
            let quad = gradient(&rem).with_walls_zeroed();
            let force = face_product(&rho, &params.force).with_walls_zeroed();
            let total = conv.add(&visc).add(&lin).add(&quad).sub(&force);
            let scale: f64 = [&conv, &visc, &lin, &quad, &force].iter().map(|t| lp_norm(*t, two)).sum();
            rel(lp_norm(&total, two), scale)
        }
        Err(_) => f64::INFINITY,
    };

    NonlinearResidual {
        mass: rel(lp_norm(&mass, two), mass_scale),
        momentum,
        bc: u.max_wall_normal(),
        mean: r.integral().abs() / (m * g.area()),
    }
}

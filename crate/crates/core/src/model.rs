use crate::error::{Error, Result};
use crate::field::{lp_norm, Exponent, GridSpec, VectorField};

/// Physical parameters of the steady problem
/// `div(rho u) = 0`, `div(rho u (x) u) = div(2 rho D(u)) - grad rho^gamma + rho f`
/// with mean density `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Mean density (total mass over area).
    pub m: f64,
    pub gamma: f64,
    /// Wall friction coefficient.
    pub friction: f64,
    /// Norm exponent used by the a priori quantities, in (3, 6).
    pub p_exp: f64,
    /// Specific body force on faces.
    pub force: VectorField,
}

impl ModelParams {
    pub fn new(m: f64, gamma: f64, friction: f64, p_exp: f64, force: VectorField) -> Result<Self> {
        let p = ModelParams { m, gamma, friction, p_exp, force };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma must be > 1 (got {})", self.gamma)));
        }
        if !(self.p_exp > 3.0 && self.p_exp < 6.0) {
            return Err(Error::InvalidParams(format!("p must lie in (3, 6) (got {})", self.p_exp)));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidParams(format!("m must be > 0 (got {})", self.m)));
        }
        if !(self.friction >= 0.0 && self.friction.is_finite()) {
            return Err(Error::InvalidParams(format!("friction must be >= 0 (got {})", self.friction)));
        }
        if !self.force.is_finite() {
            return Err(Error::NonFinite("force"));
        }
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        self.force.grid
    }

    pub fn p(&self) -> Exponent {
        Exponent::Finite(self.p_exp)
    }

    /// Pressure `p(rho) = rho^gamma`.
    pub fn pressure(&self, rho: f64) -> f64 {
        rho.powf(self.gamma)
    }

    /// `gamma m^(gamma-2)`: converts a density fluctuation to the scaled
    /// pressure variable `q` used by the linear solver.
    pub fn q_scale(&self) -> f64 {
        self.gamma * self.m.powf(self.gamma - 2.0)
    }

    /// `1 / (gamma m^(gamma-1))`, the transport coefficient in scaled form.
    pub fn kappa(&self) -> f64 {
        1.0 / (self.gamma * self.m.powf(self.gamma - 1.0))
    }

    pub fn force_norm(&self, p: f64) -> f64 {
        lp_norm(&self.force, Exponent::new(p).expect("p >= 1"))
    }

    pub fn with_mass(&self, m: f64) -> Self {
        ModelParams { m, ..self.clone() }
    }
}

//! Analytic body-force presets, normalized to a given `L^p` norm.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{curl_of_stream, gradient, lp_norm, Exponent, GridSpec, NodeField, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcePreset {
    /// Rotational field `curl psi` with `psi = sin^2(pi x) sin^2(pi y)`
    /// (coordinates scaled to the box), vanishing at the walls.
    Vortex,
    /// `(sin(pi x) cos(pi y), 0)`.
    Shear,
    /// Discrete gradient of `cos(pi x) cos(pi y)`; a pure pressure load.
    Gradient,
    Zero,
}

impl FromStr for ForcePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vortex" => Ok(ForcePreset::Vortex),
            "shear" => Ok(ForcePreset::Shear),
            "gradient" => Ok(ForcePreset::Gradient),
            "zero" => Ok(ForcePreset::Zero),
            other => Err(Error::InvalidParams(format!(
                "unknown force preset '{other}' (expected vortex, shear, gradient or zero)"
            ))),
        }
    }
}

impl fmt::Display for ForcePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ForcePreset::Vortex => "vortex",
            ForcePreset::Shear => "shear",
            ForcePreset::Gradient => "gradient",
            ForcePreset::Zero => "zero",
        })
    }
}

/// Force field of the preset with `||f||_p = amplitude` (before the wall
/// faces, which carry no unknowns, are zeroed).
pub fn preset_force(grid: GridSpec, preset: ForcePreset, amplitude: f64, p: f64) -> Result<VectorField> {
    let exp = Exponent::new(p)?;
    if !amplitude.is_finite() || amplitude < 0.0 {
        return Err(Error::InvalidParams(format!("force amplitude must be finite and >= 0, got {amplitude}")));
    }
    let (lx, ly) = (grid.lx, grid.ly);
    let shape = match preset {
        ForcePreset::Zero => return Ok(VectorField::zeros(grid)),
        ForcePreset::Vortex => {
            let psi = NodeField::from_fn(grid, |x, y| ((PI * x / lx).sin() * (PI * y / ly).sin()).powi(2));
            curl_of_stream(&psi)
        }
        ForcePreset::Shear => {
            VectorField::from_fn(grid, |x, y| (PI * x / lx).sin() * (PI * y / ly).cos(), |_, _| 0.0)
        }
        ForcePreset::Gradient => {
            gradient(&ScalarField::from_fn(grid, |x, y| (PI * x / lx).cos() * (PI * y / ly).cos()))
        }
    };
    let shape = shape.with_walls_zeroed();
    let norm = lp_norm(&shape, exp);
    if norm == 0.0 {
        return Err(Error::InvalidGrid("grid too coarse to resolve the force preset".into()));
    }
    Ok(shape.scaled(amplitude / norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::divergence;

    #[test]
    fn normalized_to_amplitude() {
        let g = GridSpec::unit_square(32);
        for preset in [ForcePreset::Vortex, ForcePreset::Shear, ForcePreset::Gradient] {
            let f = preset_force(g, preset, 2.5, 4.0).unwrap();
            assert!((lp_norm(&f, Exponent::new(4.0).unwrap()) - 2.5).abs() < 1e-12);
            assert!(f.is_wall_compatible());
        }
    }

    #[test]
    fn vortex_is_solenoidal() {
        let g = GridSpec::unit_square(32);
        let f = preset_force(g, ForcePreset::Vortex, 1.0, 4.0).unwrap();
        assert!(divergence(&f).max_abs() < 1e-12 * f.max_abs() * 32.0);
    }

    #[test]
    fn names_round_trip() {
        for preset in [ForcePreset::Vortex, ForcePreset::Shear, ForcePreset::Gradient, ForcePreset::Zero] {
            assert_eq!(preset.to_string().parse::<ForcePreset>().unwrap(), preset);
        }
        assert!("swirl".parse::<ForcePreset>().is_err());
    }
}

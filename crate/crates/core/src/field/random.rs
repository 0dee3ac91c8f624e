//! Seeded random fields for tests, verification and synthetic problems.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{curl_of_stream, gradient, GridSpec, NodeField, ScalarField, VectorField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..1.0)
}

/// Independent uniform values in `[-1, 1)` per cell.
pub fn random_scalar<R: Rng>(grid: GridSpec, rng: &mut R) -> ScalarField {
    ScalarField { grid, values: (0..grid.n_cells()).map(|_| uniform(rng)).collect() }
}

/// Independent uniform values per face, wall faces included.
pub fn random_vector<R: Rng>(grid: GridSpec, rng: &mut R) -> VectorField {
    let mut v = VectorField {
        grid,
        xcomp: (0..grid.n_xfaces()).map(|_| uniform(rng)).collect(),
        ycomp: (0..grid.n_yfaces()).map(|_| uniform(rng)).collect(),
    };
    v.sync_periodic();
    v
}

/// Like [`random_vector`] with zero normal component on every wall.
pub fn random_wall_compatible<R: Rng>(grid: GridSpec, rng: &mut R) -> VectorField {
    random_vector(grid, rng).with_walls_zeroed()
}

fn x_mode(grid: &GridSpec, k: usize, phase: f64, x: f64) -> f64 {
    if grid.periodic() {
        (2.0 * PI * k as f64 * x / grid.lx + phase).cos()
    } else {
        (PI * k as f64 * x / grid.lx).cos()
    }
}

/// Mean-zero sum of low Neumann (cosine) modes, `modes` per direction,
/// with coefficients decaying like `1/(k+l)`.
pub fn smooth_mean_zero<R: Rng>(grid: GridSpec, rng: &mut R, modes: usize) -> ScalarField {
    let mut terms = Vec::new();
    for l in 0..=modes {
        for k in 0..=modes {
            if k + l == 0 {
                continue;
            }
            terms.push((k, l, uniform(rng) / (k + l) as f64, PI * uniform(rng)));
        }
    }
    let s = ScalarField::from_fn(grid, |x, y| {
        terms
            .iter()
            .map(|&(k, l, a, ph)| a * x_mode(&grid, k, ph, x) * (PI * l as f64 * y / grid.ly).cos())
            .sum()
    });
    super::mean_zero_project(&s)
}

/// Node streamfunction vanishing on every wall.
pub fn smooth_stream<R: Rng>(grid: GridSpec, rng: &mut R, modes: usize) -> NodeField {
    let mut terms = Vec::new();
    for l in 1..=modes {
        for k in 1..=modes {
            terms.push((k, l, uniform(rng) / (k * k + l * l) as f64, PI * uniform(rng)));
        }
    }
    let mut psi = NodeField::from_fn(grid, |x, y| {
        terms
            .iter()
            .map(|&(k, l, a, ph)| {
                let xs = if grid.periodic() {
                    (2.0 * PI * k as f64 * x / grid.lx + ph).cos()
                } else {
                    (PI * k as f64 * x / grid.lx).sin()
                };
                a * xs * (PI * l as f64 * y / grid.ly).sin()
            })
            .sum()
    });
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            if psi.is_boundary(i, j) {
                psi.values[grid.node(i, j)] = 0.0;
            }
        }
    }
    psi
}

/// Smooth wall-compatible field `curl psi + grad phi` scaled to max-norm
/// `amplitude`.
pub fn smooth_wall_compatible<R: Rng>(
    grid: GridSpec,
    rng: &mut R,
    modes: usize,
    amplitude: f64,
) -> VectorField {
    let v = curl_of_stream(&smooth_stream(grid, rng, modes));
    let w = gradient(&smooth_mean_zero(grid, rng, modes));
    let sum = v.add(&w.scaled(0.5 * grid.lx.min(grid.ly) / PI));
    let m = sum.max_abs();
    if m == 0.0 {
        sum
    } else {
        sum.scaled(amplitude / m)
    }
}

/// Smooth values along a wall, `n` samples.
pub fn smooth_profile<R: Rng>(rng: &mut R, n: usize, modes: usize) -> Vec<f64> {
    let coef: Vec<(f64, f64)> = (0..=modes).map(|k| (uniform(rng) / (1 + k) as f64, PI * uniform(rng))).collect();
    (0..n)
        .map(|t| {
            let s = t as f64 / (n - 1).max(1) as f64;
            coef.iter().enumerate().map(|(k, &(a, ph))| a * (PI * k as f64 * s + ph).cos()).sum()
        })
        .collect()
}

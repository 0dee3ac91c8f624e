use super::{GridSpec, NodeField, ScalarField, SymTensorField, VectorField};

/// Conservative cell divergence.
pub fn divergence(v: &VectorField) -> ScalarField {
    let g = v.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let mut out = ScalarField::zeros(g);
    for j in 0..g.ny {
        for i in 0..g.nx {
            out.values[g.cell(i, j)] =
                (v.x_at(i + 1, j) - v.x_at(i, j)) / hx + (v.y_at(i, j + 1) - v.y_at(i, j)) / hy;
        }
    }
    out
}

/// Face gradient. Wall faces get zero; periodic faces wrap.
pub fn gradient(s: &ScalarField) -> VectorField {
    let g = s.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let mut v = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 1..g.nx {
            v.xcomp[g.xf(i, j)] = (s.at(i, j) - s.at(i - 1, j)) / hx;
        }
        if g.periodic() {
            let d = (s.at(0, j) - s.at(g.nx - 1, j)) / hx;
            v.xcomp[g.xf(0, j)] = d;
            v.xcomp[g.xf(g.nx, j)] = d;
        }
    }
    for j in 1..g.ny {
        for i in 0..g.nx {
            v.ycomp[g.yf(i, j)] = (s.at(i, j) - s.at(i, j - 1)) / hy;
        }
    }
    v
}

/// Derivative at a lattice end from the three nearest half-offset samples,
/// `f0` closest. Exact for quadratics.
#[inline]
fn one_sided_half(f0: f64, f1: f64, f2: f64, h: f64) -> f64 {
    (-2.0 * f0 + 3.0 * f1 - f2) / h
}

/// `d(vy)/dx` at node `(i, j)`.
pub(crate) fn dvy_dx_node(v: &VectorField, i: usize, j: usize) -> f64 {
    let g = v.grid;
    let h = g.hx();
    if g.periodic() {
        let ii = i % g.nx;
        let im = (ii + g.nx - 1) % g.nx;
        (v.y_at(ii, j) - v.y_at(im, j)) / h
    } else if i == 0 {
        one_sided_half(v.y_at(0, j), v.y_at(1, j), v.y_at(2, j), h)
    } else if i == g.nx {
        -one_sided_half(v.y_at(g.nx - 1, j), v.y_at(g.nx - 2, j), v.y_at(g.nx - 3, j), h)
    } else {
        (v.y_at(i, j) - v.y_at(i - 1, j)) / h
    }
}

/// `d(vx)/dy` at node `(i, j)`.
pub(crate) fn dvx_dy_node(v: &VectorField, i: usize, j: usize) -> f64 {
    let g = v.grid;
    let h = g.hy();
    if j == 0 {
        one_sided_half(v.x_at(i, 0), v.x_at(i, 1), v.x_at(i, 2), h)
    } else if j == g.ny {
        -one_sided_half(v.x_at(i, g.ny - 1), v.x_at(i, g.ny - 2), v.x_at(i, g.ny - 3), h)
    } else {
        (v.x_at(i, j) - v.x_at(i, j - 1)) / h
    }
}

/// Node vorticity `dvy/dx - dvx/dy`; central inside, one-sided on walls.
pub fn node_vorticity(v: &VectorField) -> NodeField {
    let g = v.grid;
    let mut w = NodeField::zeros(g);
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            w.values[g.node(i, j)] = dvy_dx_node(v, i, j) - dvx_dy_node(v, i, j);
        }
    }
    w
}

/// Cell vorticity: node vorticity averaged over the four cell corners.
pub fn curl2d(v: &VectorField) -> ScalarField {
    node_vorticity(v).to_cells()
}

/// Face field `curl psi = (d psi/dy, -d psi/dx)` of a node streamfunction.
/// Divergence-free by construction; wall-compatible when psi is constant on
/// every wall.
pub fn curl_of_stream(psi: &NodeField) -> VectorField {
    let g = psi.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let mut v = VectorField::zeros(g);
    for j in 0..g.ny {
        for i in 0..=g.nx {
            v.xcomp[g.xf(i, j)] = (psi.at(i, j + 1) - psi.at(i, j)) / hy;
        }
    }
    for j in 0..=g.ny {
        for i in 0..g.nx {
            v.ycomp[g.yf(i, j)] = -(psi.at(i + 1, j) - psi.at(i, j)) / hx;
        }
    }
    v
}

/// Symmetric gradient `D(v)` at cell centers. The diagonal uses the same face
/// differences as [`divergence`], so `trace D(v) = div v` exactly.
pub fn sym_grad(v: &VectorField) -> SymTensorField {
    let g = v.grid;
    let (hx, hy) = (g.hx(), g.hy());
    let mut shear = NodeField::zeros(g);
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            shear.values[g.node(i, j)] = 0.5 * (dvx_dy_node(v, i, j) + dvy_dx_node(v, i, j));
        }
    }
    let xy = shear.to_cells().values;
    let mut xx = vec![0.0; g.n_cells()];
    let mut yy = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = g.cell(i, j);
            xx[c] = (v.x_at(i + 1, j) - v.x_at(i, j)) / hx;
            yy[c] = (v.y_at(i, j + 1) - v.y_at(i, j)) / hy;
        }
    }
    SymTensorField { grid: g, xx, yy, xy }
}

/// Removes the mean. Applied twice so the residual integral sits at round-off.
pub fn mean_zero_project(s: &ScalarField) -> ScalarField {
    let once = s.map(|v| v - s.mean());
    let m = once.mean();
    once.map(|v| v - m)
}

/// Arithmetic average of a cell field onto x-faces; wall faces copy the
/// adjacent cell.
pub fn cell_to_xfaces(s: &ScalarField) -> Vec<f64> {
    let g: GridSpec = s.grid;
    let mut out = vec![0.0; g.n_xfaces()];
    for j in 0..g.ny {
        for i in 1..g.nx {
            out[g.xf(i, j)] = 0.5 * (s.at(i - 1, j) + s.at(i, j));
        }
        let (a, b) = if g.periodic() {
            let w = 0.5 * (s.at(g.nx - 1, j) + s.at(0, j));
            (w, w)
        } else {
            (s.at(0, j), s.at(g.nx - 1, j))
        };
        out[g.xf(0, j)] = a;
        out[g.xf(g.nx, j)] = b;
    }
    out
}

/// Arithmetic average of a cell field onto y-faces; wall faces copy the
/// adjacent cell.
pub fn cell_to_yfaces(s: &ScalarField) -> Vec<f64> {
    let g = s.grid;
    let mut out = vec![0.0; g.n_yfaces()];
    for i in 0..g.nx {
        out[g.yf(i, 0)] = s.at(i, 0);
        out[g.yf(i, g.ny)] = s.at(i, g.ny - 1);
        for j in 1..g.ny {
            out[g.yf(i, j)] = 0.5 * (s.at(i, j - 1) + s.at(i, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{inner, lp_norm, Exponent, WallMode};

    #[test]
    fn divergence_of_linear_field_is_exact() {
        let g = GridSpec::unit_square(16);
        let v = VectorField::from_fn(g, |x, _| x, |_, _| 0.0);
        let d = divergence(&v);
        assert!(d.values.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        let c = VectorField::from_fn(g, |_, _| 3.0, |_, _| -2.0);
        assert!(divergence(&c).max_abs() < 1e-12);
    }

    #[test]
    fn gradient_of_x() {
        let g = GridSpec::unit_square(16);
        let s = ScalarField::from_fn(g, |x, _| x);
        let v = gradient(&s);
        for j in 0..g.ny {
            for i in 1..g.nx {
                assert!((v.x_at(i, j) - 1.0).abs() < 1e-12);
            }
        }
        assert!(v.ycomp.iter().all(|y| y.abs() < 1e-12));
        assert!(gradient(&ScalarField::constant(g, 4.0)).max_abs() == 0.0);
    }

    #[test]
    fn rigid_rotation_vorticity() {
        let g = GridSpec::unit_square(12);
        let v = VectorField::from_fn(g, |_, y| -y, |x, _| x);
        let w = curl2d(&v);
        assert!(w.values.iter().all(|&x| (x - 2.0).abs() < 1e-11));
        let d = sym_grad(&v);
        assert!(d.xx.iter().chain(&d.yy).chain(&d.xy).all(|x| x.abs() < 1e-11));
    }

    #[test]
    fn periodic_shear_vorticity() {
        let g = GridSpec::new(16, 64, 1.0, 2.0, WallMode::PeriodicX).unwrap();
        let v = VectorField::from_fn(g, |_, y| y.sin(), |_, _| 0.0);
        let w = curl2d(&v);
        let exact = ScalarField::from_fn(g, |_, y| -y.cos());
        let err = lp_norm(&w.sub(&exact), Exponent::INF);
        assert!(err < 1e-3, "err {err}");
    }

    #[test]
    fn sym_grad_examples() {
        let g = GridSpec::unit_square(10);
        let d = sym_grad(&VectorField::from_fn(g, |x, _| x, |_, y| -y));
        for k in 0..g.n_cells() {
            assert!((d.xx[k] - 1.0).abs() < 1e-12 && (d.yy[k] + 1.0).abs() < 1e-12);
            assert!(d.xy[k].abs() < 1e-12);
        }
        let d = sym_grad(&VectorField::from_fn(g, |_, y| y, |_, _| 0.0));
        assert!(d.xy.iter().all(|x| (x - 0.5).abs() < 1e-12));
    }

    #[test]
    fn summation_by_parts_on_walls() {
        let g = GridSpec::new(9, 11, 1.3, 0.7, WallMode::AllSlipWalls).unwrap();
        let s = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() + y * y);
        let v = VectorField::from_fn(g, |x, y| (x * y).cos(), |x, y| x - y).with_walls_zeroed();
        let lhs = inner(&divergence(&v), &s) + inner(&v, &gradient(&s));
        assert!(lhs.abs() < 1e-13);
    }

    #[test]
    fn mean_zero_is_a_projection() {
        let g = GridSpec::unit_square(8);
        let s = ScalarField::from_fn(g, |x, y| 1.0 + x * y);
        let once = mean_zero_project(&s);
        assert!(once.integral().abs() < 1e-13 * s.abs_integral());
        assert_eq!(mean_zero_project(&once), once);
        assert!(mean_zero_project(&ScalarField::constant(g, 2.5)).max_abs() < 1e-15);
    }

    #[test]
    fn stream_curl_is_solenoidal() {
        let g = GridSpec::unit_square(12);
        let psi = NodeField::from_fn(g, |x, y| (x * (1.0 - x) * y * (1.0 - y)).powi(2) + x);
        let v = curl_of_stream(&psi);
        assert!(divergence(&v).max_abs() < 1e-12);
    }
}

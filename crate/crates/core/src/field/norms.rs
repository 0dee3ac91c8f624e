use super::{compensated_sum, NodeField, ScalarField, VectorField};
use crate::error::{Error, Result};

/// Norm exponent `p` in `[1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);
    pub const TWO: Exponent = Exponent::Finite(2.0);
    pub const INF: Exponent = Exponent::Infinity;

    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p >= 1.0 && p.is_finite() {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Exponent::new(p)
    }
}

/// Rectangular array of sample points with uniform spacing.
///
/// `x_half_ends` marks lattices whose first and last columns sit on the domain
/// boundary (faces, nodes): those columns get quadrature weight 1/2. With
/// `x_periodic` and `x_half_ends` the last column duplicates the first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub nxp: usize,
    pub nyp: usize,
    pub hx: f64,
    pub hy: f64,
    pub x_half_ends: bool,
    pub y_half_ends: bool,
    pub x_periodic: bool,
}

impl Lattice {
    fn wx(&self, i: usize) -> f64 {
        if self.x_half_ends && (i == 0 || i + 1 == self.nxp) {
            0.5
        } else {
            1.0
        }
    }
    fn wy(&self, j: usize) -> f64 {
        if self.y_half_ends && (j == 0 || j + 1 == self.nyp) {
            0.5
        } else {
            1.0
        }
    }

    fn pow_sum(&self, v: &[f64], p: f64, scale: f64) -> f64 {
        let mut acc = Vec::with_capacity(self.nyp);
        for j in 0..self.nyp {
            let row = &v[j * self.nxp..(j + 1) * self.nxp];
            let s = compensated_sum(row.iter().enumerate().map(|(i, x)| {
                let a = x.abs() / scale;
                self.wx(i) * if p == 2.0 { a * a } else { a.powf(p) }
            }));
            acc.push(self.wy(j) * s);
        }
        compensated_sum(acc) * self.hx * self.hy
    }

    fn weighted_dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = Vec::with_capacity(self.nyp);
        for j in 0..self.nyp {
            let r = j * self.nxp;
            let s = compensated_sum((0..self.nxp).map(|i| self.wx(i) * a[r + i] * b[r + i]));
            acc.push(self.wy(j) * s);
        }
        compensated_sum(acc) * self.hx * self.hy
    }

    /// Central differences inside, second-order one-sided at non-periodic ends.
    pub fn diff_x(&self, v: &[f64]) -> Vec<f64> {
        let (n, h) = (self.nxp, self.hx);
        let mut out = vec![0.0; v.len()];
        for j in 0..self.nyp {
            let r = &v[j * n..(j + 1) * n];
            let o = &mut out[j * n..(j + 1) * n];
            if self.x_periodic {
                let nu = if self.x_half_ends { n - 1 } else { n };
                for i in 0..nu {
                    o[i] = (r[(i + 1) % nu] - r[(i + nu - 1) % nu]) / (2.0 * h);
                }
                if self.x_half_ends {
                    o[n - 1] = o[0];
                }
            } else {
                o[0] = (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * h);
                for i in 1..n - 1 {
                    o[i] = (r[i + 1] - r[i - 1]) / (2.0 * h);
                }
                o[n - 1] = (3.0 * r[n - 1] - 4.0 * r[n - 2] + r[n - 3]) / (2.0 * h);
            }
        }
        out
    }

    pub fn diff_y(&self, v: &[f64]) -> Vec<f64> {
        let (n, m, h) = (self.nxp, self.nyp, self.hy);
        let mut out = vec![0.0; v.len()];
        for i in 0..n {
            let at = |j: usize| v[j * n + i];
            out[i] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
            for j in 1..m - 1 {
                out[j * n + i] = (at(j + 1) - at(j - 1)) / (2.0 * h);
            }
            out[(m - 1) * n + i] = (3.0 * at(m - 1) - 4.0 * at(m - 2) + at(m - 3)) / (2.0 * h);
        }
        out
    }
}

/// One staggered component of a field together with its sample lattice.
#[derive(Debug, Clone, Copy)]
pub struct Component<'a> {
    pub lattice: Lattice,
    pub values: &'a [f64],
}

/// Anything that can be integrated with the grid's quadrature.
pub trait Quadrature {
    fn components(&self) -> Vec<Component<'_>>;
}

impl Quadrature for ScalarField {
    fn components(&self) -> Vec<Component<'_>> {
        let g = self.grid;
        vec![Component {
            lattice: Lattice {
                nxp: g.nx,
                nyp: g.ny,
                hx: g.hx(),
                hy: g.hy(),
                x_half_ends: false,
                y_half_ends: false,
                x_periodic: g.periodic(),
            },
            values: &self.values,
        }]
    }
}

impl Quadrature for VectorField {
    fn components(&self) -> Vec<Component<'_>> {
        let g = self.grid;
        vec![
            Component {
                lattice: Lattice {
                    nxp: g.nx + 1,
                    nyp: g.ny,
                    hx: g.hx(),
                    hy: g.hy(),
                    x_half_ends: true,
                    y_half_ends: false,
                    x_periodic: g.periodic(),
                },
                values: &self.xcomp,
            },
            Component {
                lattice: Lattice {
                    nxp: g.nx,
                    nyp: g.ny + 1,
                    hx: g.hx(),
                    hy: g.hy(),
                    x_half_ends: false,
                    y_half_ends: true,
                    x_periodic: g.periodic(),
                },
                values: &self.ycomp,
            },
        ]
    }
}

impl Quadrature for NodeField {
    fn components(&self) -> Vec<Component<'_>> {
        let g = self.grid;
        vec![Component {
            lattice: Lattice {
                nxp: g.nx + 1,
                nyp: g.ny + 1,
                hx: g.hx(),
                hy: g.hy(),
                x_half_ends: true,
                y_half_ends: true,
                x_periodic: g.periodic(),
            },
            values: &self.values,
        }]
    }
}

fn norm_of_parts(parts: &[(Lattice, &[f64])], p: Exponent) -> f64 {
    let max = parts
        .iter()
        .flat_map(|(_, v)| v.iter())
        .fold(0.0f64, |a, x| a.max(x.abs()));
    match p {
        Exponent::Infinity => max,
        Exponent::Finite(_) if max == 0.0 => 0.0,
        Exponent::Finite(p) => {
            let s = compensated_sum(parts.iter().map(|(l, v)| l.pow_sum(v, p, max)));
            max * s.powf(1.0 / p)
        }
    }
}

/// Discrete `L^p` norm `(sum w |v|^p h_x h_y)^(1/p)` over all components.
pub fn lp_norm<T: Quadrature + ?Sized>(field: &T, p: Exponent) -> f64 {
    let comps = field.components();
    let parts: Vec<(Lattice, &[f64])> = comps.iter().map(|c| (c.lattice, c.values)).collect();
    norm_of_parts(&parts, p)
}

/// Quadrature inner product `sum w a b h_x h_y`.
pub fn inner<T: Quadrature + ?Sized>(a: &T, b: &T) -> f64 {
    let ca = a.components();
    let cb = b.components();
    assert_eq!(ca.len(), cb.len());
    compensated_sum(ca.iter().zip(&cb).map(|(x, y)| {
        assert_eq!(x.lattice, y.lattice, "lattice mismatch");
        x.lattice.weighted_dot(x.values, y.values)
    }))
}

fn derivative_terms<T: Quadrature + ?Sized>(field: &T, orders: &[usize]) -> Vec<(Lattice, Vec<f64>)> {
    let mut out = Vec::new();
    for c in field.components() {
        let l = c.lattice;
        for &k in orders {
            match k {
                0 => out.push((l, c.values.to_vec())),
                1 => {
                    out.push((l, l.diff_x(c.values)));
                    out.push((l, l.diff_y(c.values)));
                }
                2 => {
                    let dx = l.diff_x(c.values);
                    let dy = l.diff_y(c.values);
                    out.push((l, l.diff_x(&dx)));
                    out.push((l, l.diff_y(&dx)));
                    out.push((l, l.diff_y(&dy)));
                }
                _ => unreachable!(),
            }
        }
    }
    out
}

fn combine(terms: &[(Lattice, Vec<f64>)], p: Exponent) -> f64 {
    let parts: Vec<(Lattice, &[f64])> = terms.iter().map(|(l, v)| (*l, v.as_slice())).collect();
    norm_of_parts(&parts, p)
}

/// `W^{k,p}` norm: the `l^p` combination of the `L^p` norms of all partial
/// derivatives up to order `k` (each mixed derivative counted once).
pub fn sobolev_norm<T: Quadrature + ?Sized>(field: &T, k: usize, p: Exponent) -> Result<f64> {
    if k > 2 {
        return Err(Error::UnsupportedOrder(k));
    }
    let orders: Vec<usize> = (0..=k).collect();
    Ok(combine(&derivative_terms(field, &orders), p))
}

/// `||grad s||_p` over first derivatives only.
pub fn grad_seminorm<T: Quadrature + ?Sized>(field: &T, p: Exponent) -> f64 {
    combine(&derivative_terms(field, &[1]), p)
}

/// `||grad^2 s||_p` over second derivatives only.
pub fn hessian_seminorm<T: Quadrature + ?Sized>(field: &T, p: Exponent) -> f64 {
    combine(&derivative_terms(field, &[2]), p)
}

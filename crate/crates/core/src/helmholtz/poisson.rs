//! Cached sparse Cholesky factorizations of the cell Neumann Laplacian and
//! the node Dirichlet Laplacian.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

use crate::error::{Error, Result};
use crate::field::{GridSpec, WallMode};

pub(crate) fn init_faer() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    // Sequential kernels keep every solve bitwise reproducible.
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct GridKey(usize, usize, u64, u64, WallMode);

impl From<GridSpec> for GridKey {
    fn from(g: GridSpec) -> Self {
        GridKey(g.nx, g.ny, g.lx.to_bits(), g.ly.to_bits(), g.wall_mode)
    }
}

/// Per-grid cache of immutable, shareable objects.
pub(crate) struct Cache<T> {
    map: OnceLock<Mutex<HashMap<GridKey, Arc<T>>>>,
}

impl<T> Cache<T> {
    pub(crate) const fn new() -> Self {
        Cache { map: OnceLock::new() }
    }

    pub(crate) fn get_or_build(
        &self,
        grid: GridSpec,
        build: impl FnOnce(GridSpec) -> Result<T>,
    ) -> Result<Arc<T>> {
        let map = self.map.get_or_init(|| Mutex::new(HashMap::new()));
        let key = GridKey::from(grid);
        if let Some(v) = map.lock().unwrap().get(&key) {
            return Ok(v.clone());
        }
        // Built outside the lock; a racing builder produces an identical value.
        let v = Arc::new(build(grid)?);
        Ok(map.lock().unwrap().entry(key).or_insert(v).clone())
    }
}

struct SpdSystem {
    mat: SparseColMat<usize, f64>,
    llt: Llt<usize, f64>,
}

impl SpdSystem {
    fn new(n: usize, triplets: &[Triplet<usize, usize, f64>]) -> Result<Self> {
        init_faer();
        let solver_err = |e: String| Error::Solver { reason: e, residual: f64::NAN };
        let mat = SparseColMat::try_new_from_triplets(n, n, triplets)
            .map_err(|e| solver_err(format!("{e:?}")))?;
        let sym = SymbolicLlt::try_new(mat.symbolic(), Side::Lower)
            .map_err(|e| solver_err(format!("{e:?}")))?;
        let llt = Llt::try_new_with_symbolic(sym, mat.as_ref(), Side::Lower)
            .map_err(|e| solver_err(format!("{e:?}")))?;
        Ok(SpdSystem { mat, llt })
    }

    /// Solve with one step of iterative refinement.
    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let b = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let mut x = self.llt.solve(&b);
        let ax = &self.mat * &x;
        let r = &b - &ax;
        let dx = self.llt.solve(&r);
        x += &dx;
        (0..x.nrows()).map(|i| x[i]).collect()
    }
}

/// `-L` for the cell Neumann Laplacian `L`, with cell 0 pinned.
pub(crate) struct CellNeumann {
    grid: GridSpec,
    sys: SpdSystem,
}

static CELL_NEUMANN: Cache<CellNeumann> = Cache::new();
static NODE_DIRICHLET: Cache<NodeDirichlet> = Cache::new();

impl CellNeumann {
    pub(crate) fn for_grid(grid: GridSpec) -> Result<Arc<Self>> {
        CELL_NEUMANN.get_or_build(grid, Self::build)
    }

    fn build(g: GridSpec) -> Result<Self> {
        let (ax, ay) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
        let mut t = Vec::new();
        // Unknown index k = cell - 1 (cell 0 pinned to zero).
        let mut couple = |a: usize, b: usize, w: f64| {
            if a > 0 {
                t.push(Triplet::new(a - 1, a - 1, w));
            }
            if b > 0 {
                t.push(Triplet::new(b - 1, b - 1, w));
            }
            if a > 0 && b > 0 {
                t.push(Triplet::new(a - 1, b - 1, -w));
                t.push(Triplet::new(b - 1, a - 1, -w));
            }
        };
        for j in 0..g.ny {
            for i in 0..g.nx {
                if i + 1 < g.nx {
                    couple(g.cell(i, j), g.cell(i + 1, j), ax);
                } else if g.periodic() {
                    couple(g.cell(i, j), g.cell(0, j), ax);
                }
                if j + 1 < g.ny {
                    couple(g.cell(i, j), g.cell(i, j + 1), ay);
                }
            }
        }
        Ok(CellNeumann { grid: g, sys: SpdSystem::new(g.n_cells() - 1, &t)? })
    }

    /// Solves `L phi = b` for compatible `b` (zero sum); returns mean-zero `phi`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = b[1..].iter().map(|v| -v).collect();
        let x = self.sys.solve(&rhs);
        let mut phi = Vec::with_capacity(self.grid.n_cells());
        phi.push(0.0);
        phi.extend_from_slice(&x);
        let mean = crate::field::compensated_sum(phi.iter().copied()) / phi.len() as f64;
        phi.iter_mut().for_each(|v| *v -= mean);
        phi
    }
}

/// `-Delta` on interior nodes with Dirichlet wall values.
pub(crate) struct NodeDirichlet {
    grid: GridSpec,
    /// Node index -> unknown index.
    map: Vec<Option<usize>>,
    sys: SpdSystem,
}

impl NodeDirichlet {
    pub(crate) fn for_grid(grid: GridSpec) -> Result<Arc<Self>> {
        NODE_DIRICHLET.get_or_build(grid, Self::build)
    }

    fn unknown_columns(g: &GridSpec) -> std::ops::Range<usize> {
        if g.periodic() {
            0..g.nx
        } else {
            1..g.nx
        }
    }

    fn build(g: GridSpec) -> Result<Self> {
        let mut map = vec![None; g.n_nodes()];
        let mut n = 0;
        for j in 1..g.ny {
            for i in Self::unknown_columns(&g) {
                map[g.node(i, j)] = Some(n);
                n += 1;
            }
        }
        let (ax, ay) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
        let mut t = Vec::new();
        for j in 1..g.ny {
            for i in Self::unknown_columns(&g) {
                let k = map[g.node(i, j)].unwrap();
                t.push(Triplet::new(k, k, 2.0 * ax + 2.0 * ay));
                let (il, ir) = if g.periodic() {
                    ((i + g.nx - 1) % g.nx, (i + 1) % g.nx)
                } else {
                    (i - 1, i + 1)
                };
                for (nb, w) in [
                    (g.node(il, j), ax),
                    (g.node(ir, j), ax),
                    (g.node(i, j - 1), ay),
                    (g.node(i, j + 1), ay),
                ] {
                    if let Some(c) = map[nb] {
                        t.push(Triplet::new(k, c, -w));
                    }
                }
            }
        }
        Ok(NodeDirichlet { grid: g, map, sys: SpdSystem::new(n, &t)? })
    }

    /// Solves `-Delta w = f` at interior nodes with `w = boundary` on wall
    /// nodes. Only interior entries of `f` and wall entries of `boundary` are read.
    pub(crate) fn solve(&self, f: &[f64], boundary: &[f64]) -> Vec<f64> {
        let g = self.grid;
        let (ax, ay) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
        let mut rhs = vec![0.0; self.sys.mat.nrows()];
        for j in 1..g.ny {
            for i in Self::unknown_columns(&g) {
                let k = self.map[g.node(i, j)].unwrap();
                let mut b = f[g.node(i, j)];
                let (il, ir) = if g.periodic() { ((i + g.nx - 1) % g.nx, (i + 1) % g.nx) } else { (i - 1, i + 1) };
                for (nb, w) in [
                    (g.node(il, j), ax),
                    (g.node(ir, j), ax),
                    (g.node(i, j - 1), ay),
                    (g.node(i, j + 1), ay),
                ] {
                    if self.map[nb].is_none() {
                        b += w * boundary[nb];
                    }
                }
                rhs[k] = b;
            }
        }
        let x = self.sys.solve(&rhs);
        let mut out: Vec<f64> = (0..g.n_nodes())
            .map(|n| match self.map[n] {
                Some(k) => x[k],
                None => boundary[n],
            })
            .collect();
        if g.periodic() {
            for j in 0..=g.ny {
                out[g.node(g.nx, j)] = out[g.node(0, j)];
            }
        }
        out
    }
}

//! Real fields on a [`Grid`], stored flat in x-fastest order.

use crate::grid::Grid;
use crate::par;

/// Scalar field sample values, `data[ix + N*(iy + N*iz)]`.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.cells()],
        }
    }

    /// Builds a field by evaluating `f` at every cell position.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; grid.cells()];
        par::fill_indexed(&mut data, |i| f(grid.position(i)));
        Self { grid, data }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.cells(), "sample count mismatch");
        Self { grid, data }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Largest absolute sample value.
    pub fn max_abs(&self) -> f64 {
        par::max_indexed(self.data.len(), |i| self.data[i].abs())
    }

    /// `true` when every sample is finite.
    pub fn is_finite(&self) -> bool {
        // f64::max ignores NaN, so count non-finite samples instead.
        par::sum_indexed(self.data.len(), |i| {
            if self.data[i].is_finite() {
                0.0
            } else {
                1.0
            }
        }) == 0.0
    }

    /// `self += a * other`, elementwise.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let o = &other.data;
        par::update_indexed(&mut self.data, |i, v| v + a * o[i]);
    }

    pub fn scale(&mut self, a: f64) {
        par::update_indexed(&mut self.data, |i, v| {
            let _ = i;
            v * a
        });
    }
}

/// Three-component vector field; each component stored like a [`ScalarField`].
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Grid,
    comp: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        let z = vec![0.0; grid.cells()];
        Self {
            grid,
            comp: [z.clone(), z.clone(), z],
        }
    }

    /// Builds a field by evaluating `f` at every cell position.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> [f64; 3] + Sync) -> Self {
        let mut out = Self::zeros(grid);
        for axis in 0..3 {
            par::fill_indexed(&mut out.comp[axis], |i| f(grid.position(i))[axis]);
        }
        out
    }

    pub fn from_components(grid: Grid, comp: [Vec<f64>; 3]) -> Self {
        for c in &comp {
            assert_eq!(c.len(), grid.cells(), "sample count mismatch");
        }
        Self { grid, comp }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn comp(&self, axis: usize) -> &[f64] {
        &self.comp[axis]
    }

    #[inline]
    pub fn comp_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comp[axis]
    }

    pub fn components(&self) -> &[Vec<f64>; 3] {
        &self.comp
    }

    /// Pointwise Euclidean magnitude `|u(x)|`.
    pub fn magnitude(&self) -> ScalarField {
        let mut data = vec![0.0; self.grid.cells()];
        let [cx, cy, cz] = &self.comp;
        par::fill_indexed(&mut data, |i| {
            (cx[i] * cx[i] + cy[i] * cy[i] + cz[i] * cz[i]).sqrt()
        });
        ScalarField::from_vec(self.grid, data)
    }

    /// Largest pointwise magnitude `max_x |u(x)|`.
    pub fn max_abs(&self) -> f64 {
        let [cx, cy, cz] = &self.comp;
        par::max_indexed(self.grid.cells(), |i| {
            (cx[i] * cx[i] + cy[i] * cy[i] + cz[i] * cz[i]).sqrt()
        })
    }

    pub fn is_finite(&self) -> bool {
        self.comp.iter().all(|c| {
            par::sum_indexed(c.len(), |i| if c[i].is_finite() { 0.0 } else { 1.0 }) == 0.0
        })
    }

    /// `self += a * other`, elementwise.
    pub fn axpy(&mut self, a: f64, other: &VectorField) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for axis in 0..3 {
            let o = &other.comp[axis];
            par::update_indexed(&mut self.comp[axis], |i, v| v + a * o[i]);
        }
    }

    pub fn scale(&mut self, a: f64) {
        for axis in 0..3 {
            par::update_indexed(&mut self.comp[axis], |i, v| {
                let _ = i;
                v * a
            });
        }
    }

    /// `a*self + b*other` as a new field.
    pub fn lin_comb(&self, a: f64, b: f64, other: &VectorField) -> VectorField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let mut out = VectorField::zeros(self.grid);
        for axis in 0..3 {
            let s = &self.comp[axis];
            let o = &other.comp[axis];
            par::fill_indexed(&mut out.comp[axis], |i| a * s[i] + b * o[i]);
        }
        out
    }
}

/// Rank-2 tensor field `F_{ij}`; `comp[i][j]` holds the samples of `F_{ij}`.
///
/// The first slot is the one contracted by the tensor divergence:
/// `(Div F)_j = sum_i d_i F_{ij}`.
#[derive(Clone, Debug)]
pub struct TensorField {
    grid: Grid,
    comp: Vec<Vec<f64>>, // 9 entries, comp[3*i + j] = F_{ij}
}

impl TensorField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            comp: vec![vec![0.0; grid.cells()]; 9],
        }
    }

    /// Outer product `F_{ij} = a_i b_j` (first slot = `a`).
    pub fn outer(a: &VectorField, b: &VectorField) -> Self {
        assert_eq!(a.grid(), b.grid(), "grid mismatch");
        let grid = a.grid();
        let mut out = Self::zeros(grid);
        for i in 0..3 {
            for j in 0..3 {
                let ai = a.comp(i);
                let bj = b.comp(j);
                par::fill_indexed(&mut out.comp[3 * i + j], |c| ai[c] * bj[c]);
            }
        }
        out
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn comp(&self, i: usize, j: usize) -> &[f64] {
        &self.comp[3 * i + j]
    }

    #[inline]
    pub fn comp_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        &mut self.comp[3 * i + j]
    }

    /// Pointwise Frobenius magnitude.
    pub fn magnitude(&self) -> ScalarField {
        let mut data = vec![0.0; self.grid.cells()];
        par::fill_indexed(&mut data, |c| {
            let mut s = 0.0;
            for e in &self.comp {
                s += e[c] * e[c];
            }
            s.sqrt()
        });
        ScalarField::from_vec(self.grid, data)
    }
}

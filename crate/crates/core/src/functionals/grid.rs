use crate::assembly::ExtensionSystem;
use crate::error::{invalid, Result, VarfracError};

/// Nodal values on the uniform grid `{i/(n-1)}^N` of `[0,1]^N`, with
/// multilinear interpolation. Axis 0 varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    n: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(dim: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=2).contains(&dim) || n < 2 {
            return Err(invalid(
                "grid",
                format!("need dim in {{1,2}} and n >= 2, got {dim}, {n}"),
            ));
        }
        if values.len() != n.pow(dim as u32) {
            return Err(VarfracError::DimensionMismatch {
                expected: n.pow(dim as u32),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "grid function values must be finite"));
        }
        Ok(Self { dim, n, values })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(dim: usize, n: usize, f: F) -> Result<Self> {
        let h = 1.0 / (n - 1) as f64;
        let values = (0..n.pow(dim as u32))
            .map(|k| {
                let x: Vec<f64> = (0..dim).map(|ax| ((k / n.pow(ax as u32)) % n) as f64 * h).collect();
                f(&x)
            })
            .collect();
        Self::new(dim, n, values)
    }

    /// BASE trace of a free-node vector, zero on `∂Ω`.
    pub fn from_base(sys: &ExtensionSystem, v: &[f64]) -> Result<Self> {
        if v.len() != sys.n_base() && v.len() != sys.n_free() {
            return Err(VarfracError::DimensionMismatch {
                expected: sys.n_base(),
                found: v.len(),
            });
        }
        let mesh = &sys.mesh;
        let mut values = vec![0.0; mesh.layer_size()];
        for (i, val) in v[..sys.n_base()].iter().enumerate() {
            values[sys.free_node(i)] = *val;
        }
        Self::new(mesh.dim(), mesh.n_x(), values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            n: self.n,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let cells = self.n - 1;
        let pos = x.clamp(0.0, 1.0) * cells as f64;
        let i = (pos.floor() as usize).min(cells - 1);
        (i, pos - i as f64)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self.dim {
            1 => self.eval_1d(x[0]),
            _ => {
                let (i, a) = self.locate(x[0]);
                let (j, b) = self.locate(x[1]);
                let n = self.n;
                let v = |ii: usize, jj: usize| self.values[jj * n + ii];
                (1.0 - b) * ((1.0 - a) * v(i, j) + a * v(i + 1, j))
                    + b * ((1.0 - a) * v(i, j + 1) + a * v(i + 1, j + 1))
            }
        }
    }

    /// One-dimensional evaluation; only meaningful for `dim == 1`.
    #[inline]
    pub fn eval_1d(&self, x: f64) -> f64 {
        let (i, a) = self.locate(x);
        self.values[i] + a * (self.values[i + 1] - self.values[i])
    }

    /// Gradient inside the cell containing `x`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let inv_h = (self.n - 1) as f64;
        match self.dim {
            1 => {
                let (i, _) = self.locate(x[0]);
                vec![(self.values[i + 1] - self.values[i]) * inv_h]
            }
            _ => {
                let (i, a) = self.locate(x[0]);
                let (j, b) = self.locate(x[1]);
                let n = self.n;
                let v = |ii: usize, jj: usize| self.values[jj * n + ii];
                vec![
                    ((1.0 - b) * (v(i + 1, j) - v(i, j)) + b * (v(i + 1, j + 1) - v(i, j + 1))) * inv_h,
                    ((1.0 - a) * (v(i, j + 1) - v(i, j)) + a * (v(i + 1, j + 1) - v(i + 1, j))) * inv_h,
                ]
            }
        }
    }

    /// Restriction to the coordinate line through `at` along `axis`, as a
    /// one-dimensional grid function with the same nodes.
    pub fn line(&self, axis: usize, at: &[f64]) -> GridFunction {
        if self.dim == 1 {
            return self.clone();
        }
        let h = self.h();
        let values = (0..self.n)
            .map(|i| {
                let mut x = at.to_vec();
                x[axis] = i as f64 * h;
                self.eval(&x)
            })
            .collect();
        GridFunction {
            dim: 1,
            n: self.n,
            values,
        }
    }

    /// Largest cell slope among 1D cells meeting `[x - r, x + r]`.
    pub fn local_lipschitz_1d(&self, x: f64, r: f64) -> f64 {
        let inv_h = (self.n - 1) as f64;
        let (lo, _) = self.locate(x - r);
        let (hi, _) = self.locate(x + r);
        (lo..=hi)
            .map(|i| ((self.values[i + 1] - self.values[i]) * inv_h).abs())
            .fold(0.0, f64::max)
    }
}

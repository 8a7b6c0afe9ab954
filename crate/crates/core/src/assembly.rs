//! Weighted stiffness and mass matrices on the cylinder mesh, base mass
//! matrices and base load vectors.
//!
//! The order and `G_s` are frozen at each x-cell midpoint, so every element
//! integral factorises into exact polynomial x-factors and exact weighted
//! y-factors.

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::{CylinderMesh, Element, NodeKind};
use crate::order_field::WeightSpec;
use crate::quadrature::GaussRule;
use crate::sparse::SparseMatrix;

pub(crate) type Mat2 = [[f64; 2]; 2];

/// Dense local matrix in element-local node order.
pub type LocalMatrix = Vec<Vec<f64>>;

type Triplets = Vec<(usize, usize, f64)>;

/// `∫_a^b y^{δ+k} dy` with `δ = 1 - 2s`.
pub fn y_weight_moments(s: f64, a: f64, b: f64, k: u32) -> f64 {
    let q = 1.0 - 2.0 * s + k as f64 + 1.0;
    if a > 0.0 {
        // b^q - a^q = a^q expm1(q ln(b/a)) avoids cancellation on thin cells.
        a.powf(q) * (q * (b / a).ln()).exp_m1() / q
    } else {
        b.powf(q) / q
    }
}

/// Weighted y-factors `(My, Ky)` of the two linear y-shape functions
/// `N0 = (b-y)/h`, `N1 = (y-a)/h` on `[a, b]` against `y^δ`.
pub(crate) fn y_factors(s: f64, a: f64, b: f64) -> (Mat2, Mat2) {
    let h = b - a;
    let delta = 1.0 - 2.0 * s;
    let (m00, m01, m11, m0) = if a >= h {
        // Away from the degenerate edge a short Gauss rule is exact to
        // rounding and avoids the cancellation of the moment combination.
        let rule = gauss12();
        let mut acc = [0.0; 4];
        for (y, w) in rule.mapped(a, b) {
            let wy = w * y.powf(delta);
            let n0 = (b - y) / h;
            let n1 = (y - a) / h;
            acc[0] += wy * n0 * n0;
            acc[1] += wy * n0 * n1;
            acc[2] += wy * n1 * n1;
            acc[3] += wy;
        }
        (acc[0], acc[1], acc[2], acc[3])
    } else {
        let m0 = y_weight_moments(s, a, b, 0);
        let m1 = y_weight_moments(s, a, b, 1);
        let m2 = y_weight_moments(s, a, b, 2);
        let h2 = h * h;
        (
            (b * b * m0 - 2.0 * b * m1 + m2) / h2,
            (-a * b * m0 + (a + b) * m1 - m2) / h2,
            (a * a * m0 - 2.0 * a * m1 + m2) / h2,
            m0,
        )
    };
    let k = m0 / (h * h);
    ([[m00, m01], [m01, m11]], [[k, -k], [-k, k]])
}

fn gauss12() -> &'static GaussRule {
    static RULE: std::sync::OnceLock<GaussRule> = std::sync::OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(12))
}

fn x_factors(hx: f64) -> (Mat2, Mat2) {
    (
        [[hx / 3.0, hx / 6.0], [hx / 6.0, hx / 3.0]],
        [[1.0 / hx, -1.0 / hx], [-1.0 / hx, 1.0 / hx]],
    )
}

/// Local stiffness and weighted mass of one element, in the element's local
/// node order.
pub fn element_matrices(spec: &WeightSpec, el: &Element) -> Result<(LocalMatrix, LocalMatrix)> {
    let mid = el.x_mid();
    let s = spec.order.eval(&mid)?;
    let g = spec.g.for_order(&spec.order, s);
    let (my, ky) = y_factors(s, el.y_lo, el.y_hi);
    let dim = el.x_lo.len();
    let factors: Vec<(Mat2, Mat2)> = (0..dim).map(|ax| x_factors(el.x_hi[ax] - el.x_lo[ax])).collect();
    let corners = 1usize << dim;
    let n = 2 * corners;
    let mut k = vec![vec![0.0; n]; n];
    let mut m = vec![vec![0.0; n]; n];
    for l in 0..n {
        let (bl, al) = (l / corners, l % corners);
        for r in 0..n {
            let (br, ar) = (r / corners, r % corners);
            let mx: Vec<f64> = (0..dim)
                .map(|ax| factors[ax].0[(al >> ax) & 1][(ar >> ax) & 1])
                .collect();
            let kx: Vec<f64> = (0..dim)
                .map(|ax| factors[ax].1[(al >> ax) & 1][(ar >> ax) & 1])
                .collect();
            let mass_x: f64 = mx.iter().product();
            let mut grad_x = 0.0;
            for ax in 0..dim {
                let mut term = kx[ax];
                for (other, v) in mx.iter().enumerate() {
                    if other != ax {
                        term *= v;
                    }
                }
                grad_x += term;
            }
            k[l][r] = g * (grad_x * my[bl][br] + mass_x * ky[bl][br]);
            m[l][r] = g * mass_x * my[bl][br];
        }
    }
    Ok((k, m))
}

/// Discrete extension problem: matrices on the free (non-Dirichlet) nodes.
///
/// Free unknowns are ordered by global node index, so free indices
/// `0..n_base` are exactly the BASE nodes.
#[derive(Debug, Clone)]
pub struct ExtensionSystem {
    pub mesh: CylinderMesh,
    pub spec: WeightSpec,
    /// Weighted stiffness.
    pub a: SparseMatrix,
    /// Weighted volume mass.
    pub m_w: SparseMatrix,
    /// Unweighted base mass over BASE nodes.
    pub m_base: SparseMatrix,
    /// Base mass weighted by the trace weight.
    pub m_base_tilde: SparseMatrix,
    free_nodes: Vec<usize>,
    global_to_free: Vec<Option<usize>>,
    n_base: usize,
}

impl ExtensionSystem {
    pub fn n_free(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn n_base(&self) -> usize {
        self.n_base
    }

    /// Global node of free unknown `i`.
    pub fn free_node(&self, i: usize) -> usize {
        self.free_nodes[i]
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.global_to_free[node]
    }

    /// x-coordinates of the BASE nodes, in base index order.
    pub fn base_coords(&self) -> Vec<Vec<f64>> {
        self.free_nodes[..self.n_base]
            .iter()
            .map(|&n| self.mesh.coords(n).0)
            .collect()
    }

    /// Nodal interpolant of `f` on the BASE nodes.
    pub fn interpolate_base<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        self.base_coords().iter().map(|x| f(x)).collect()
    }

    /// Scatters a free-node vector onto all mesh nodes (zero on Dirichlet nodes).
    pub fn to_global(&self, u: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.mesh.num_nodes()];
        for (i, &n) in self.free_nodes.iter().enumerate() {
            g[n] = u[i];
        }
        g
    }

    /// `u` restricted to the BASE unknowns.
    pub fn base_part<'a>(&self, u: &'a [f64]) -> &'a [f64] {
        &u[..self.n_base]
    }
}

/// Assembles all four matrices of the extension problem.
pub fn assemble(mesh: &CylinderMesh, spec: &WeightSpec) -> Result<ExtensionSystem> {
    if spec.dim() != mesh.dim() {
        return Err(crate::error::VarfracError::DimensionMismatch {
            expected: mesh.dim(),
            found: spec.dim(),
        });
    }
    let mut free_nodes = Vec::new();
    let mut global_to_free = vec![None; mesh.num_nodes()];
    for node in 0..mesh.num_nodes() {
        if !mesh.kind(node).is_dirichlet() {
            global_to_free[node] = Some(free_nodes.len());
            free_nodes.push(node);
        }
    }
    let n_base = free_nodes
        .iter()
        .take_while(|&&n| mesh.kind(n) == NodeKind::Base)
        .count();
    let n_free = free_nodes.len();

    let per_element: Vec<(Triplets, Triplets)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let el = mesh.element(e);
            let (k, m) = element_matrices(spec, &el)?;
            let mut kt = Vec::new();
            let mut mt = Vec::new();
            for (l, &gl) in el.nodes.iter().enumerate() {
                let Some(i) = global_to_free[gl] else { continue };
                for (r, &gr) in el.nodes.iter().enumerate() {
                    let Some(j) = global_to_free[gr] else { continue };
                    kt.push((i, j, k[l][r]));
                    mt.push((i, j, m[l][r]));
                }
            }
            Ok((kt, mt))
        })
        .collect::<Result<Vec<_>>>()?;
    let (kt, mt): (Vec<_>, Vec<_>) = per_element.into_iter().unzip();
    let a = SparseMatrix::from_triplets(n_free, kt.into_iter().flatten().collect());
    let m_w = SparseMatrix::from_triplets(n_free, mt.into_iter().flatten().collect());

    let (m_base, m_base_tilde) = base_mass_matrices(mesh, spec, &global_to_free, n_base)?;
    Ok(ExtensionSystem {
        mesh: mesh.clone(),
        spec: spec.clone(),
        a,
        m_w,
        m_base,
        m_base_tilde,
        free_nodes,
        global_to_free,
        n_base,
    })
}

fn base_mass_matrices(
    mesh: &CylinderMesh,
    spec: &WeightSpec,
    global_to_free: &[Option<usize>],
    n_base: usize,
) -> Result<(SparseMatrix, SparseMatrix)> {
    let dim = mesh.dim();
    let corners = 1usize << dim;
    let cells = (mesh.n_x() - 1).pow(dim as u32);
    let mut plain = Vec::new();
    let mut tilde = Vec::new();
    // Base layer elements are the first `cells` elements.
    for e in 0..cells {
        let el = mesh.element(e);
        let wt = spec.trace_weight(&el.x_mid())?;
        let factors: Vec<Mat2> = (0..dim).map(|ax| x_factors(el.x_hi[ax] - el.x_lo[ax]).0).collect();
        for l in 0..corners {
            let Some(i) = global_to_free[el.nodes[l]] else { continue };
            for r in 0..corners {
                let Some(j) = global_to_free[el.nodes[r]] else { continue };
                let v: f64 = (0..dim).map(|ax| factors[ax][(l >> ax) & 1][(r >> ax) & 1]).product();
                plain.push((i, j, v));
                tilde.push((i, j, wt * v));
            }
        }
    }
    Ok((
        SparseMatrix::from_triplets(n_base, plain),
        SparseMatrix::from_triplets(n_base, tilde),
    ))
}

/// `∫_Ω h ψ_i(·, 0)` for every free unknown (zero off the base), by
/// 3-point Gauss quadrature per axis on each x-cell.
pub fn load_from_base_function<F: Fn(&[f64]) -> f64>(mesh: &CylinderMesh, h: F) -> Vec<f64> {
    let dim = mesh.dim();
    let corners = 1usize << dim;
    let cells = (mesh.n_x() - 1).pow(dim as u32);
    let mut global_to_free = vec![None; mesh.num_nodes()];
    let mut n_free = 0;
    for node in 0..mesh.num_nodes() {
        if !mesh.kind(node).is_dirichlet() {
            global_to_free[node] = Some(n_free);
            n_free += 1;
        }
    }
    let rule = GaussRule::legendre(3);
    let mut b = vec![0.0; n_free];
    for e in 0..cells {
        let el = mesh.element(e);
        let pts: Vec<Vec<(f64, f64)>> = (0..dim)
            .map(|ax| rule.mapped(el.x_lo[ax], el.x_hi[ax]).collect())
            .collect();
        let total = rule.len().pow(dim as u32);
        for q in 0..total {
            let mut x = vec![0.0; dim];
            let mut w = 1.0;
            for ax in 0..dim {
                let (xi, wi) = pts[ax][(q / rule.len().pow(ax as u32)) % rule.len()];
                x[ax] = xi;
                w *= wi;
            }
            let hv = h(&x);
            for l in 0..corners {
                let Some(i) = global_to_free[el.nodes[l]] else { continue };
                let mut shape = 1.0;
                for ax in 0..dim {
                    let t = (x[ax] - el.x_lo[ax]) / (el.x_hi[ax] - el.x_lo[ax]);
                    shape *= if (l >> ax) & 1 == 0 { 1.0 - t } else { t };
                }
                b[i] += w * hv * shape;
            }
        }
    }
    b
}

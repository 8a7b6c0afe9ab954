//! Tensor-product meshes of the truncated cylinder `(0,1)^N × (0, τ)`,
//! uniform in `x` and graded toward `y = 0`.
//!
//! Nodes are numbered layer-major in `y` with the base layer first:
//! `node = j·n_x^N + i_N·n_x^{N-1} + … + i_1`.

use crate::error::{invalid, Result};
use crate::order_field::OrderField;

/// Classification of a mesh node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// `y = 0`, `x` strictly inside `Ω`.
    Base,
    /// `x ∈ ∂Ω`, any `y`.
    Lateral,
    /// `y = τ`, `x` strictly inside `Ω`.
    Top,
    Interior,
}

impl NodeKind {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, NodeKind::Lateral | NodeKind::Top)
    }
}

/// One tensor cell: an x-box times a y-interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Local ordering `b·2^N + a`, where `b ∈ {0,1}` selects the y-end and
    /// `a` enumerates the x-box vertices with axis 0 fastest.
    pub nodes: Vec<usize>,
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Element {
    pub fn x_mid(&self) -> Vec<f64> {
        self.x_lo.iter().zip(&self.x_hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderMesh {
    dim: usize,
    n_x: usize,
    n_y: usize,
    tau: f64,
    gamma: f64,
    x_nodes: Vec<f64>,
    y_nodes: Vec<f64>,
    kinds: Vec<NodeKind>,
}

/// Builds the mesh with `n_x` nodes per x-axis and `n_y` nodes in `y`,
/// `y_j = τ (j/(n_y-1))^γ`.
pub fn build_mesh(dim: usize, n_x: usize, n_y: usize, tau: f64, gamma: f64) -> Result<CylinderMesh> {
    if !(1..=2).contains(&dim) {
        return Err(invalid("dim", format!("only N = 1 or 2 supported, got {dim}")));
    }
    if n_x < 3 {
        return Err(invalid("n_x", format!("need at least 3 nodes per axis, got {n_x}")));
    }
    if n_y < 3 {
        return Err(invalid("n_y", format!("need at least 3 nodes in y, got {n_y}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid("tau", format!("need tau > 0, got {tau}")));
    }
    if !(gamma >= 1.0 && gamma.is_finite()) {
        return Err(invalid("gamma", format!("need gamma >= 1, got {gamma}")));
    }
    let hx = 1.0 / (n_x - 1) as f64;
    let mut x_nodes: Vec<f64> = (0..n_x).map(|i| i as f64 * hx).collect();
    x_nodes[n_x - 1] = 1.0;
    let last = (n_y - 1) as f64;
    let mut y_nodes: Vec<f64> = (0..n_y).map(|j| tau * (j as f64 / last).powf(gamma)).collect();
    y_nodes[0] = 0.0;
    y_nodes[n_y - 1] = tau;
    if y_nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("gamma", "grading collapses the first y cells to zero width"));
    }

    let per_layer = n_x.pow(dim as u32);
    let mut kinds = Vec::with_capacity(per_layer * n_y);
    for j in 0..n_y {
        for k in 0..per_layer {
            let on_lateral = (0..dim).any(|ax| {
                let i = (k / n_x.pow(ax as u32)) % n_x;
                i == 0 || i == n_x - 1
            });
            kinds.push(if on_lateral {
                NodeKind::Lateral
            } else if j == 0 {
                NodeKind::Base
            } else if j == n_y - 1 {
                NodeKind::Top
            } else {
                NodeKind::Interior
            });
        }
    }
    Ok(CylinderMesh {
        dim,
        n_x,
        n_y,
        tau,
        gamma,
        x_nodes,
        y_nodes,
        kinds,
    })
}

impl CylinderMesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x_nodes
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y_nodes
    }

    pub fn hx(&self) -> f64 {
        1.0 / (self.n_x - 1) as f64
    }

    /// Nodes per y-layer, `n_x^N`.
    pub fn layer_size(&self) -> usize {
        self.n_x.pow(self.dim as u32)
    }

    pub fn num_nodes(&self) -> usize {
        self.layer_size() * self.n_y
    }

    pub fn num_elements(&self) -> usize {
        (self.n_x - 1).pow(self.dim as u32) * (self.n_y - 1)
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.kinds[node]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    /// Global index of the node with x-indices `ix` (axis 0 first) in layer `j`.
    pub fn node_index(&self, ix: &[usize], j: usize) -> usize {
        let mut k = 0;
        for (ax, &i) in ix.iter().enumerate() {
            k += i * self.n_x.pow(ax as u32);
        }
        j * self.layer_size() + k
    }

    /// `(x-indices, layer)` of a global node.
    pub fn node_indices(&self, node: usize) -> (Vec<usize>, usize) {
        let per = self.layer_size();
        let j = node / per;
        let k = node % per;
        let ix = (0..self.dim)
            .map(|ax| (k / self.n_x.pow(ax as u32)) % self.n_x)
            .collect();
        (ix, j)
    }

    /// Coordinates `(x, y)` of a node.
    pub fn coords(&self, node: usize) -> (Vec<f64>, f64) {
        let (ix, j) = self.node_indices(node);
        (ix.iter().map(|&i| self.x_nodes[i]).collect(), self.y_nodes[j])
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&n| self.kinds[n] == kind).collect()
    }

    /// BASE nodes in increasing global order.
    pub fn base_nodes(&self) -> Vec<usize> {
        self.nodes_of_kind(NodeKind::Base)
    }

    /// Element `e`, enumerated with axis 0 fastest and y slowest.
    pub fn element(&self, e: usize) -> Element {
        let cells = self.n_x - 1;
        let per = cells.pow(self.dim as u32);
        let j = e / per;
        let k = e % per;
        let cx: Vec<usize> = (0..self.dim).map(|ax| (k / cells.pow(ax as u32)) % cells).collect();
        let corners = 1usize << self.dim;
        let mut nodes = Vec::with_capacity(2 * corners);
        for b in 0..2 {
            for a in 0..corners {
                let ix: Vec<usize> = (0..self.dim).map(|ax| cx[ax] + ((a >> ax) & 1)).collect();
                nodes.push(self.node_index(&ix, j + b));
            }
        }
        Element {
            nodes,
            x_lo: cx.iter().map(|&i| self.x_nodes[i]).collect(),
            x_hi: cx.iter().map(|&i| self.x_nodes[i + 1]).collect(),
            y_lo: self.y_nodes[j],
            y_hi: self.y_nodes[j + 1],
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        (0..self.num_elements()).map(move |e| self.element(e))
    }
}

/// Grading exponent `min(7, max(1, 3/(2 s_min)))`, where `s_min` is the
/// smallest order the field attains.
pub fn default_gamma(order: &OrderField) -> f64 {
    gamma_for_min_order(order.min_value())
}

pub fn gamma_for_min_order(s_min: f64) -> f64 {
    (1.5 / s_min).clamp(1.0, 7.0)
}

/// Height at which the slowest mode `e^{-√λ_1 y}` has decayed to `decay_tol`.
pub fn default_tau(lambda_1: f64, decay_tol: f64) -> Result<f64> {
    if !(lambda_1 > 0.0) {
        return Err(invalid("lambda_1", format!("need lambda_1 > 0, got {lambda_1}")));
    }
    if !(decay_tol > 0.0 && decay_tol < 1.0) {
        return Err(invalid(
            "decay_tol",
            format!("need decay_tol in (0,1), got {decay_tol}"),
        ));
    }
    Ok(-decay_tol.ln() / lambda_1.sqrt())
}

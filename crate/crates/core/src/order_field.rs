//! Variable order `s(·)`, the weight normalisation `G_s`, the cylinder weight
//! `w(x, y) = G_s(x) y^{1-2s(x)}` and the trace weight `w̃`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, VarfracError};
use crate::quadrature::{merge_breakpoints, GaussRule};
use crate::special::extension_constant;

pub const DEFAULT_S_MIN: f64 = 0.05;
pub const DEFAULT_S_MAX: f64 = 0.95;

fn default_s_min() -> f64 {
    DEFAULT_S_MIN
}

fn default_s_max() -> f64 {
    DEFAULT_S_MAX
}

/// Axis-aligned box `[lo, hi]` carrying a constant order value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepCell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub s: f64,
}

impl StepCell {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, s: f64) -> Self {
        Self { lo, hi, s }
    }

    fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    // Half-open on every axis except where the cell reaches the upper face.
    fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&xi, (&lo, &hi))| xi >= lo && (xi < hi || (hi >= 1.0 && xi <= hi)))
    }
}

/// The three supported shapes of `s(·)`.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderKind {
    Constant(f64),
    Step(Vec<StepCell>),
    /// `σ · min(dist(x, anchors), ε)`.
    DistanceBased {
        sigma: f64,
        eps: f64,
        anchors: Vec<Vec<f64>>,
    },
}

/// JSON form of an order field, as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OrderConfig {
    Constant {
        s: f64,
        #[serde(default = "default_s_min")]
        s_min: f64,
        #[serde(default = "default_s_max")]
        s_max: f64,
    },
    Step {
        cells: Vec<StepCell>,
        #[serde(default = "default_s_min")]
        s_min: f64,
        #[serde(default = "default_s_max")]
        s_max: f64,
    },
    DistanceBased {
        sigma: f64,
        eps: f64,
        anchors: Vec<Vec<f64>>,
        #[serde(default = "default_s_min")]
        s_min: f64,
        #[serde(default = "default_s_max")]
        s_max: f64,
    },
}

/// How the order behaves along a coordinate line.
#[derive(Debug, Clone, PartialEq)]
pub enum LineStructure {
    /// Piecewise constant with jumps (possibly) at the listed coordinates.
    Piecewise(Vec<f64>),
    /// Varies continuously; needs quadrature.
    Continuous,
}

/// Spatially variable order `s(·)` on `[0, 1]^N`, clamped into
/// `[s_min, s_max] ⊂ (0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderField {
    dim: usize,
    kind: OrderKind,
    s_min: f64,
    s_max: f64,
    mean: f64,
}

impl OrderField {
    pub fn new(dim: usize, kind: OrderKind, s_min: f64, s_max: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(invalid("dim", format!("only N = 1 or 2 supported, got {dim}")));
        }
        if !(s_min > 0.0 && s_min <= s_max && s_max < 1.0) {
            return Err(invalid(
                "s_min/s_max",
                format!("need 0 < s_min <= s_max < 1, got [{s_min}, {s_max}]"),
            ));
        }
        validate_kind(dim, &kind)?;
        let mut field = Self {
            dim,
            kind,
            s_min,
            s_max,
            mean: 0.0,
        };
        field.mean = field.compute_mean();
        Ok(field)
    }

    pub fn constant(dim: usize, s: f64) -> Result<Self> {
        Self::new(dim, OrderKind::Constant(s), DEFAULT_S_MIN, DEFAULT_S_MAX)
    }

    pub fn step(dim: usize, cells: Vec<StepCell>) -> Result<Self> {
        Self::new(dim, OrderKind::Step(cells), DEFAULT_S_MIN, DEFAULT_S_MAX)
    }

    pub fn distance_based(dim: usize, sigma: f64, eps: f64, anchors: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            dim,
            OrderKind::DistanceBased { sigma, eps, anchors },
            DEFAULT_S_MIN,
            DEFAULT_S_MAX,
        )
    }

    /// Two cells `[0, split) → left`, `[split, 1] → right` split along `x_1`.
    pub fn two_cell_step(dim: usize, split: f64, left: f64, right: f64) -> Result<Self> {
        let ones = vec![1.0; dim];
        let zeros = vec![0.0; dim];
        let mut left_hi = ones.clone();
        left_hi[0] = split;
        let mut right_lo = zeros.clone();
        right_lo[0] = split;
        Self::step(
            dim,
            vec![
                StepCell::new(zeros, left_hi, left),
                StepCell::new(right_lo, ones, right),
            ],
        )
    }

    pub fn with_bounds(self, s_min: f64, s_max: f64) -> Result<Self> {
        Self::new(self.dim, self.kind, s_min, s_max)
    }

    pub fn from_config(dim: usize, cfg: &OrderConfig) -> Result<Self> {
        match cfg {
            OrderConfig::Constant { s, s_min, s_max } => Self::new(dim, OrderKind::Constant(*s), *s_min, *s_max),
            OrderConfig::Step { cells, s_min, s_max } => Self::new(dim, OrderKind::Step(cells.clone()), *s_min, *s_max),
            OrderConfig::DistanceBased {
                sigma,
                eps,
                anchors,
                s_min,
                s_max,
            } => Self::new(
                dim,
                OrderKind::DistanceBased {
                    sigma: *sigma,
                    eps: *eps,
                    anchors: anchors.clone(),
                },
                *s_min,
                *s_max,
            ),
        }
    }

    pub fn to_config(&self) -> OrderConfig {
        let (s_min, s_max) = (self.s_min, self.s_max);
        match &self.kind {
            OrderKind::Constant(s) => OrderConfig::Constant { s: *s, s_min, s_max },
            OrderKind::Step(cells) => OrderConfig::Step {
                cells: cells.clone(),
                s_min,
                s_max,
            },
            OrderKind::DistanceBased { sigma, eps, anchors } => OrderConfig::DistanceBased {
                sigma: *sigma,
                eps: *eps,
                anchors: anchors.clone(),
                s_min,
                s_max,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &OrderKind {
        &self.kind
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// `s̄ = ∫_Ω s` (|Ω| = 1).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    fn clamp(&self, s: f64) -> f64 {
        s.clamp(self.s_min, self.s_max)
    }

    /// Order at `x`, clamped into `[s_min, s_max]`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(VarfracError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let raw = match &self.kind {
            OrderKind::Constant(s) => *s,
            OrderKind::Step(cells) => cells
                .iter()
                .find(|c| c.contains(x))
                .map(|c| c.s)
                // Points outside [0,1]^N: fall back to the nearest cell.
                .unwrap_or_else(|| {
                    let clamped: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
                    cells
                        .iter()
                        .find(|c| c.contains(&clamped))
                        .map(|c| c.s)
                        .unwrap_or(cells[0].s)
                }),
            OrderKind::DistanceBased { sigma, eps, anchors } => {
                let d = anchors.iter().map(|a| dist(a, x)).fold(f64::INFINITY, f64::min);
                sigma * d.min(*eps)
            }
        };
        self.clamp(raw)
    }

    /// Smallest value the (clamped) field attains on `[0,1]^N`.
    pub fn min_value(&self) -> f64 {
        match &self.kind {
            OrderKind::Constant(s) => self.clamp(*s),
            OrderKind::Step(cells) => cells.iter().map(|c| self.clamp(c.s)).fold(f64::INFINITY, f64::min),
            OrderKind::DistanceBased { sigma, eps, anchors } => {
                let d = anchors
                    .iter()
                    .map(|a| dist_to_unit_box(a))
                    .fold(f64::INFINITY, f64::min);
                self.clamp(sigma * d.min(*eps))
            }
        }
    }

    /// Structure of `t ↦ s(x with x_axis = t)`.
    pub fn line_structure(&self, axis: usize) -> LineStructure {
        match &self.kind {
            OrderKind::Constant(_) => LineStructure::Piecewise(Vec::new()),
            OrderKind::Step(cells) => {
                let pts = cells.iter().flat_map(|c| [c.lo[axis], c.hi[axis]]);
                let merged = merge_breakpoints(0.0, 1.0, pts);
                LineStructure::Piecewise(merged[1..merged.len() - 1].to_vec())
            }
            OrderKind::DistanceBased { .. } => LineStructure::Continuous,
        }
    }

    /// Coordinates along `axis` where a step field jumps.
    pub fn step_breakpoints(&self, axis: usize) -> Vec<f64> {
        match self.line_structure(axis) {
            LineStructure::Piecewise(pts) => pts,
            LineStructure::Continuous => Vec::new(),
        }
    }

    fn compute_mean(&self) -> f64 {
        match &self.kind {
            OrderKind::Constant(s) => self.clamp(*s),
            OrderKind::Step(cells) => cells.iter().map(|c| c.volume() * self.clamp(c.s)).sum(),
            OrderKind::DistanceBased { .. } => {
                let rule = GaussRule::legendre(4);
                let cells = if self.dim == 1 { 1024 } else { 128 };
                let h = 1.0 / cells as f64;
                let pts: Vec<(f64, f64)> = (0..cells)
                    .flat_map(|c| {
                        let a = c as f64 * h;
                        rule.mapped(a, a + h).collect::<Vec<_>>()
                    })
                    .collect();
                if self.dim == 1 {
                    pts.iter().map(|&(x, w)| w * self.eval_unchecked(&[x])).sum()
                } else {
                    let mut acc = 0.0;
                    for &(x2, w2) in &pts {
                        for &(x1, w1) in &pts {
                            acc += w1 * w2 * self.eval_unchecked(&[x1, x2]);
                        }
                    }
                    acc
                }
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn dist_to_unit_box(a: &[f64]) -> f64 {
    a.iter()
        .map(|&v| {
            let d = if v < 0.0 {
                -v
            } else if v > 1.0 {
                v - 1.0
            } else {
                0.0
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn validate_kind(dim: usize, kind: &OrderKind) -> Result<()> {
    match kind {
        OrderKind::Constant(s) => {
            if !s.is_finite() || *s < 0.0 || *s > 1.0 {
                return Err(invalid("s", format!("constant order must lie in [0, 1], got {s}")));
            }
        }
        OrderKind::Step(cells) => {
            if cells.is_empty() {
                return Err(invalid("cells", "step field needs at least one cell"));
            }
            for (i, c) in cells.iter().enumerate() {
                if c.lo.len() != dim || c.hi.len() != dim {
                    return Err(VarfracError::DimensionMismatch {
                        expected: dim,
                        found: c.lo.len().max(c.hi.len()),
                    });
                }
                if c.lo.iter().zip(&c.hi).any(|(a, b)| !(*a >= 0.0 && a < b && *b <= 1.0)) {
                    return Err(invalid("cells", format!("cell {i} is not a box inside [0,1]^N")));
                }
                if !(0.0..=1.0).contains(&c.s) {
                    return Err(invalid("cells", format!("cell {i} order {} outside [0, 1]", c.s)));
                }
            }
            for i in 0..cells.len() {
                for j in (i + 1)..cells.len() {
                    let overlap: f64 = (0..dim)
                        .map(|k| {
                            let lo = cells[i].lo[k].max(cells[j].lo[k]);
                            let hi = cells[i].hi[k].min(cells[j].hi[k]);
                            (hi - lo).max(0.0)
                        })
                        .product();
                    if overlap > 1e-12 {
                        return Err(invalid("cells", format!("cells {i} and {j} overlap")));
                    }
                }
            }
            let total: f64 = cells.iter().map(StepCell::volume).sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(invalid("cells", format!("cells cover volume {total}, expected 1")));
            }
        }
        OrderKind::DistanceBased { sigma, eps, anchors } => {
            if !(*sigma > 0.0 && *sigma < 1.0) {
                return Err(invalid("sigma", format!("need sigma in (0,1), got {sigma}")));
            }
            if !(*eps > 0.0 && *eps < 1.0) {
                return Err(invalid("eps", format!("need eps in (0,1), got {eps}")));
            }
            if anchors.is_empty() {
                return Err(invalid("anchors", "need at least one anchor point"));
            }
            if let Some(a) = anchors.iter().find(|a| a.len() != dim) {
                return Err(VarfracError::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
        }
    }
    Ok(())
}

/// Choice of the normalisation `G_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GsVariant {
    /// `2^{2s̄-1} Γ(s̄)/Γ(1-s̄)` with the mean order `s̄`.
    MeanConstant,
    /// `2^{2s(x)-1} Γ(s(x))/Γ(1-s(x))`.
    Pointwise,
    /// Fixed constant, overriding the Gamma-ratio normalisation.
    Fixed(f64),
}

impl GsVariant {
    /// Normalisation for a point whose (clamped) order is `s`.
    pub fn for_order(self, field: &OrderField, s: f64) -> f64 {
        match self {
            GsVariant::MeanConstant => extension_constant(field.mean()),
            GsVariant::Pointwise => extension_constant(s),
            GsVariant::Fixed(g) => g,
        }
    }

    pub fn eval(self, field: &OrderField, x: &[f64]) -> Result<f64> {
        Ok(self.for_order(field, field.eval(x)?))
    }
}

/// Everything that determines `w`, `w̃` and the exponent `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    pub order: OrderField,
    pub g: GsVariant,
    pub p: f64,
}

impl WeightSpec {
    pub fn new(order: OrderField, g: GsVariant, p: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(invalid("p", format!("need p >= 2, got {p}")));
        }
        if let GsVariant::Fixed(g) = g {
            if !(g > 0.0 && g.is_finite()) {
                return Err(invalid("g", format!("fixed normalisation must be positive, got {g}")));
            }
        }
        Ok(Self { order, g, p })
    }

    pub fn dim(&self) -> usize {
        self.order.dim()
    }

    /// Hölder conjugate `p' = p/(p-1)`.
    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn order_at(&self, x: &[f64]) -> Result<f64> {
        self.order.eval(x)
    }

    pub fn g_at(&self, x: &[f64]) -> Result<f64> {
        self.g.eval(&self.order, x)
    }

    /// `δ(x) = 1 - 2s(x) ∈ (-1, 1)`.
    pub fn delta_at(&self, x: &[f64]) -> Result<f64> {
        Ok(1.0 - 2.0 * self.order.eval(x)?)
    }

    /// `w(x, y) = G_s(x) y^{1-2s(x)}`.
    pub fn weight(&self, x: &[f64], y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(invalid("y", format!("weight needs y > 0, got {y}")));
        }
        let s = self.order.eval(x)?;
        Ok(self.g.for_order(&self.order, s) * y.powf(1.0 - 2.0 * s))
    }

    /// `w̃(x) = G_s(x) (p - 2 + 2s(x))^p`.
    pub fn trace_weight(&self, x: &[f64]) -> Result<f64> {
        let s = self.order.eval(x)?;
        Ok(self.trace_weight_for_order(s))
    }

    pub fn trace_weight_for_order(&self, s: f64) -> f64 {
        self.g.for_order(&self.order, s) * (self.p - 2.0 + 2.0 * s).powf(self.p)
    }
}

/// Outcome of the numerical integrability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum H5Outcome {
    Converged(f64),
    SuspectedDivergent,
}

const H5_REL_TOL: f64 = 1e-6;
const H5_MAX_LEVELS: usize = 1000;
const H5_DIVERGENCE_WARMUP: usize = 12;

/// Checks finiteness of `∫_0^1 (G_s(x) |x_i - z|^{1-2s(x)})^{1-p'} dx_i`,
/// with the remaining coordinates of `x` taken from `at`.
///
/// Heuristic: dyadic levels refine toward `x_i = z`. Converged once two
/// successive levels agree to `1e-6` relative; divergent when partial sums
/// grow by more than 1.5x over three levels, when the per-level increments
/// stop decaying, or when the level budget runs out.
pub fn check_h5(spec: &WeightSpec, z: f64, axis: usize, at: &[f64]) -> Result<H5Outcome> {
    if !(0.0..=1.0).contains(&z) {
        return Err(invalid("z", format!("need z in [0, 1], got {z}")));
    }
    if at.len() != spec.dim() {
        return Err(VarfracError::DimensionMismatch {
            expected: spec.dim(),
            found: at.len(),
        });
    }
    if axis >= spec.dim() {
        return Err(invalid("axis", format!("axis {axis} out of range")));
    }
    let breaks = spec.order.step_breakpoints(axis);
    let mut point = at.to_vec();
    let exponent = 1.0 - spec.p_conj();
    let integrand = move |t: f64| {
        point[axis] = t;
        let s = spec.order.eval_unchecked(&point);
        let g = spec.g.for_order(&spec.order, s);
        (g * (t - z).abs().powf(1.0 - 2.0 * s)).powf(exponent)
    };
    Ok(h5_partial_sums(z, &breaks, integrand))
}

/// Level-by-level integration of a function singular at `z` over `[0, 1]`.
pub fn h5_partial_sums<F: FnMut(f64) -> f64>(z: f64, breaks: &[f64], mut f: F) -> H5Outcome {
    let rule = GaussRule::legendre(10);
    let mut integrate = |a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        let pts = merge_breakpoints(a, b, breaks.iter().copied());
        pts.windows(2).map(|w| rule.integrate(w[0], w[1], &mut f)).sum()
    };
    let left = z;
    let right = 1.0 - z;
    let mut sums: Vec<f64> = Vec::new();
    let mut incs: Vec<f64> = Vec::new();
    let mut total = 0.0;
    for k in 0..H5_MAX_LEVELS {
        let outer = 0.5f64.powi(k as i32);
        let inner = 0.5 * outer;
        let mut inc = 0.0;
        if left > 0.0 {
            inc += integrate(z - left * outer, z - left * inner);
        }
        if right > 0.0 {
            inc += integrate(z + right * inner, z + right * outer);
        }
        if !inc.is_finite() {
            return H5Outcome::SuspectedDivergent;
        }
        total += inc;
        sums.push(total);
        incs.push(inc);
        if k >= 3 {
            let prev = sums[k - 1];
            if (total - prev).abs() <= H5_REL_TOL * total.abs() {
                // Geometric tail from the last increment ratio.
                let r = incs[k] / incs[k - 1];
                let tail = if r > 0.0 && r < 1.0 { inc * r / (1.0 - r) } else { 0.0 };
                return H5Outcome::Converged(total + tail);
            }
        }
        if k >= H5_DIVERGENCE_WARMUP {
            if total > 1.5 * sums[k - 3] {
                return H5Outcome::SuspectedDivergent;
            }
            let flat = (0..3).all(|j| incs[k - j] >= incs[k - j - 1] * (1.0 - 1e-9));
            if flat {
                return H5Outcome::SuspectedDivergent;
            }
        }
    }
    H5Outcome::SuspectedDivergent
}

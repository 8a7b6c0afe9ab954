//! The directional seminorm
//! `A_i(v) = ∫ ∫∫ w_i(x_t, τ) |v(x_t) - v(x_τ)|^p dτ dt dx'`.
//!
//! The band `|t - τ| < η` is not integrated; its contribution is bounded by
//! `w_i ≤ ψ_i` and the local Lipschitz constant of the piecewise-linear `v`,
//! and reported as a separate remainder.

use rayon::prelude::*;

use super::grid::GridFunction;
use super::weights::LineWeights;
use crate::error::{invalid, Result, VarfracError};
use crate::order_field::WeightSpec;
use crate::quadrature::{merge_breakpoints, GaussRule};

/// Quadrature settings shared by the seminorm and trace checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormConfig {
    pub p: f64,
    /// Band half-width is `h 2^{-levels}` for grid spacing `h`.
    pub levels: usize,
    /// Free parameter of the trace constants, in `(0, 1)`.
    pub sigma: f64,
    /// Dyadic levels toward each end of every outer cell.
    pub outer_levels: usize,
    pub gauss_points: usize,
    /// Points of the transverse Gauss rule for `N = 2`.
    pub transverse_points: usize,
    /// Apply the transverse rule on every grid cell instead of once on `[0, 1]`.
    pub per_cell_transverse: bool,
}

impl Default for SeminormConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            levels: 20,
            sigma: 0.5,
            outer_levels: 6,
            gauss_points: 6,
            transverse_points: 5,
            per_cell_transverse: false,
        }
    }
}

impl SeminormConfig {
    pub fn with_p(p: f64) -> Result<Self> {
        let cfg = Self { p, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn p_conj(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 2.0 && self.p.is_finite()) {
            return Err(invalid("p", format!("need p >= 2, got {}", self.p)));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(invalid("sigma", format!("need sigma in (0,1), got {}", self.sigma)));
        }
        if self.levels == 0 || self.levels > 60 || self.gauss_points == 0 || self.transverse_points == 0 {
            return Err(invalid("levels", "quadrature sizes must be positive (levels <= 60)"));
        }
        Ok(())
    }

    pub(crate) fn check_spec(&self, spec: &WeightSpec) -> Result<()> {
        self.validate()?;
        if self.p != spec.p {
            return Err(invalid("p", format!("config p = {} but weight p = {}", self.p, spec.p)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormValue {
    /// Off-band quadrature value.
    pub value: f64,
    /// Upper bound for the band contribution.
    pub remainder: f64,
    /// Refinement ratio test failed.
    pub divergent: bool,
}

impl SeminormValue {
    /// `value + remainder`, an upper estimate of `A_i(v)`.
    pub fn upper(&self) -> f64 {
        self.value + self.remainder
    }
}

#[derive(Debug, Clone)]
struct OuterPoint {
    t: f64,
    weight: f64,
    /// `weight · G (1+e)^p · 2η^{δ+1}/(δ+1)`; multiplied by `Lip^p`.
    remainder_coef: f64,
    /// `(τ, gauss weight · w_i)`; the first `n_near` entries lie within
    /// three dyadic rings of the band.
    inner: Vec<(f64, f64)>,
    n_near: usize,
}

#[derive(Debug, Clone)]
struct LineQuadrature {
    at: Vec<f64>,
    weight: f64,
    points: Vec<OuterPoint>,
}

/// Precomputed quadrature for `A_i` on a fixed grid; reusable across many
/// grid functions with the same node count.
#[derive(Debug, Clone)]
pub struct SeminormQuadrature {
    axis: usize,
    nodes: usize,
    p: f64,
    eta: f64,
    lines: Vec<LineQuadrature>,
}

fn dyadic_points(rule: &GaussRule, a: f64, b: f64, levels: usize, out: &mut Vec<(f64, f64)>) {
    let m = 0.5 * (a + b);
    let half = m - a;
    let mut push = |lo: f64, hi: f64| out.extend(rule.mapped(lo, hi));
    let mut hi = half;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        push(a + lo, a + hi);
        push(b - hi, b - lo);
        hi = lo;
    }
    push(a, a + hi);
    push(b - hi, b);
}

impl SeminormQuadrature {
    pub fn new(spec: &WeightSpec, cfg: &SeminormConfig, axis: usize, nodes: usize) -> Result<Self> {
        cfg.check_spec(spec)?;
        if axis >= spec.dim() {
            return Err(invalid("axis", format!("axis {axis} out of range")));
        }
        if nodes < 2 {
            return Err(invalid("nodes", "grid needs at least two nodes"));
        }
        let h = 1.0 / (nodes - 1) as f64;
        let eta = h * 0.5f64.powi(cfg.levels as i32);
        let transverse: Vec<(Vec<f64>, f64)> = if spec.dim() == 1 {
            vec![(vec![0.0], 1.0)]
        } else {
            let rule = GaussRule::legendre(cfg.transverse_points);
            let cells: Vec<(f64, f64)> = if cfg.per_cell_transverse {
                (0..nodes - 1).map(|c| (c as f64 * h, (c + 1) as f64 * h)).collect()
            } else {
                vec![(0.0, 1.0)]
            };
            let other = 1 - axis;
            cells
                .iter()
                .flat_map(|&(a, b)| rule.mapped(a, b).collect::<Vec<_>>())
                .map(|(c, w)| {
                    let mut at = vec![0.0; 2];
                    at[other] = c;
                    (at, w)
                })
                .collect()
        };
        let lines = transverse
            .into_iter()
            .map(|(at, weight)| build_line(spec, cfg, axis, &at, weight, nodes, eta))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            axis,
            nodes,
            p: cfg.p,
            eta,
            lines,
        })
    }

    pub fn band_width(&self) -> f64 {
        self.eta
    }

    pub fn evaluate(&self, v: &GridFunction) -> Result<SeminormValue> {
        if v.nodes_per_axis() != self.nodes {
            return Err(VarfracError::DimensionMismatch {
                expected: self.nodes,
                found: v.nodes_per_axis(),
            });
        }
        let p = self.p;
        let pow = |d: f64| if p == 2.0 { d * d } else { d.abs().powf(p) };
        let mut value = 0.0;
        let mut near = 0.0;
        let mut remainder = 0.0;
        for line in &self.lines {
            let vl = v.line(self.axis, &line.at);
            let partial: Vec<(f64, f64, f64)> = line
                .points
                .par_iter()
                .map(|pt| {
                    let vt = vl.eval_1d(pt.t);
                    let mut near_sum = 0.0;
                    let mut far_sum = 0.0;
                    for (k, &(tau, ww)) in pt.inner.iter().enumerate() {
                        let c = ww * pow(vt - vl.eval_1d(tau));
                        if k < pt.n_near {
                            near_sum += c;
                        } else {
                            far_sum += c;
                        }
                    }
                    let lip = vl.local_lipschitz_1d(pt.t, self.eta);
                    (
                        pt.weight * (near_sum + far_sum),
                        pt.weight * near_sum,
                        pt.remainder_coef * pow(lip),
                    )
                })
                .collect();
            for (a, b, c) in partial {
                value += line.weight * a;
                near += line.weight * b;
                remainder += line.weight * c;
            }
        }
        let coarse = value - near;
        let divergent = value > 0.0 && value > 1.5 * coarse;
        Ok(SeminormValue {
            value,
            remainder,
            divergent,
        })
    }
}

fn build_line(
    spec: &WeightSpec,
    cfg: &SeminormConfig,
    axis: usize,
    at: &[f64],
    weight: f64,
    nodes: usize,
    eta: f64,
) -> Result<LineQuadrature> {
    let lw = LineWeights::new(spec, axis, at)?;
    let rule = GaussRule::legendre(cfg.gauss_points);
    let h = 1.0 / (nodes - 1) as f64;
    let grid: Vec<f64> = (1..nodes - 1).map(|i| i as f64 * h).collect();
    let splits = merge_breakpoints(0.0, 1.0, grid.iter().chain(lw.breakpoints()).copied());

    let mut outer = Vec::new();
    for w in splits.windows(2) {
        dyadic_points(&rule, w[0], w[1], cfg.outer_levels, &mut outer);
    }
    let p = cfg.p;
    let e_scale = 1.0 - cfg.p_conj();
    let points = outer
        .par_iter()
        .map(|&(t, wt)| {
            let near_edge = eta * 8.0;
            let mut inner = Vec::new();
            let mut far = Vec::new();
            for side in [-1.0f64, 1.0] {
                let start = t + side * eta;
                if !(0.0..=1.0).contains(&start) {
                    continue;
                }
                let end = if side > 0.0 { 1.0 } else { 0.0 };
                let mut cuts: Vec<f64> = Vec::new();
                let mut d = eta;
                while d < 1.0 {
                    cuts.push(t + side * d);
                    d *= 2.0;
                }
                cuts.extend(splits.iter().copied());
                let (lo, hi) = if side > 0.0 { (start, end) } else { (end, start) };
                let pts = merge_breakpoints(lo, hi, cuts);
                for seg in pts.windows(2) {
                    let dist_far = (seg[0] - t).abs().max((seg[1] - t).abs());
                    let target = if dist_far <= near_edge * (1.0 + 1e-12) {
                        &mut inner
                    } else {
                        &mut far
                    };
                    for (tau, gw) in rule.mapped(seg[0], seg[1]) {
                        target.push((tau, gw * lw.eval(t, tau).w));
                    }
                }
            }
            let n_near = inner.len();
            inner.extend(far);
            let (s, g) = lw.order_at(t);
            let delta = 1.0 - 2.0 * s;
            let e = delta * e_scale;
            let remainder_coef = wt * g * (1.0 + e).powf(p) * 2.0 * eta.powf(delta + 1.0) / (delta + 1.0);
            OuterPoint {
                t,
                weight: wt,
                remainder_coef,
                inner,
                n_near,
            }
        })
        .collect();
    Ok(LineQuadrature {
        at: at.to_vec(),
        weight,
        points,
    })
}

/// `A_axis(v)` with its band remainder.
pub fn seminorm_a(spec: &WeightSpec, cfg: &SeminormConfig, v: &GridFunction, axis: usize) -> Result<SeminormValue> {
    if v.dim() != spec.dim() {
        return Err(VarfracError::DimensionMismatch {
            expected: spec.dim(),
            found: v.dim(),
        });
    }
    SeminormQuadrature::new(spec, cfg, axis, v.nodes_per_axis())?.evaluate(v)
}

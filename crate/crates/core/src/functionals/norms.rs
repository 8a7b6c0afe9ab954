//! Weighted norms on the base and on the cylinder, and the two trace
//! inequalities built from them.

use super::grid::GridFunction;
use super::seminorm::{SeminormConfig, SeminormQuadrature};
use super::InequalityOutcome;
use crate::assembly::ExtensionSystem;
use crate::error::{invalid, Result, VarfracError};
use crate::order_field::WeightSpec;
use crate::quadrature::{merge_breakpoints, weighted_power_integral, GaussRule};

const GAUSS: usize = 6;

/// `C(p, σ) = (p + 1) σ^{-2/p'}`.
pub fn first_trace_constant(p: f64, sigma: f64) -> f64 {
    let pc = p / (p - 1.0);
    (p + 1.0) * sigma.powf(-2.0 / pc)
}

/// `C_H(p) = p^p / (p-1)^{p-1}`.
pub fn hardy_constant(p: f64) -> f64 {
    p.powf(p) / (p - 1.0).powf(p - 1.0)
}

/// `(C_H(p) 2^p 2^{p/2} (2^{p-1} + 1) + (1 + p)^p σ^{-2p/p'})^{1/p}`.
pub fn improved_trace_constant(p: f64, sigma: f64) -> f64 {
    let pc = p / (p - 1.0);
    let a = hardy_constant(p) * 2f64.powf(p) * 2f64.powf(0.5 * p) * (2f64.powf(p - 1.0) + 1.0);
    let b = (1.0 + p).powf(p) * sigma.powf(-2.0 * p / pc);
    (a + b).powf(1.0 / p)
}

/// Per-axis Gauss points on `[0,1]`, split at grid nodes and at jumps of the
/// order along that axis.
fn axis_points(spec: &WeightSpec, axis: usize, nodes: usize, rule: &GaussRule) -> Vec<(f64, f64)> {
    let h = 1.0 / (nodes - 1) as f64;
    let cuts = (1..nodes - 1)
        .map(|i| i as f64 * h)
        .chain(spec.order.step_breakpoints(axis));
    merge_breakpoints(0.0, 1.0, cuts)
        .windows(2)
        .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
        .collect()
}

/// `(∫_Ω |v|^p w̃)^{1/p}`.
pub fn trace_norm(spec: &WeightSpec, v: &GridFunction) -> Result<f64> {
    if v.dim() != spec.dim() {
        return Err(VarfracError::DimensionMismatch {
            expected: spec.dim(),
            found: v.dim(),
        });
    }
    let rule = GaussRule::legendre(GAUSS);
    let p = spec.p;
    let axes: Vec<Vec<(f64, f64)>> = (0..spec.dim())
        .map(|ax| axis_points(spec, ax, v.nodes_per_axis(), &rule))
        .collect();
    let mut acc = 0.0;
    if spec.dim() == 1 {
        for &(x, w) in &axes[0] {
            let val = v.eval_1d(x);
            if val != 0.0 {
                acc += w * val.abs().powf(p) * spec.trace_weight(&[x])?;
            }
        }
    } else {
        for &(x2, w2) in &axes[1] {
            for &(x1, w1) in &axes[0] {
                let val = v.eval(&[x1, x2]);
                if val != 0.0 {
                    acc += w1 * w2 * val.abs().powf(p) * spec.trace_weight(&[x1, x2])?;
                }
            }
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// `∫_a^b y^δ g(y) dy`, with geometric splitting when the cell is wide
/// relative to its distance from `y = 0`.
fn y_integral<F: FnMut(f64) -> f64>(rule: &GaussRule, delta: f64, a: f64, b: f64, mut g: F) -> f64 {
    if a == 0.0 {
        return weighted_power_integral(rule, delta, a, b, g);
    }
    let mut acc = 0.0;
    let mut lo = a;
    while lo < b {
        let hi = (2.0 * lo).min(b);
        acc += rule.integrate(lo, hi, |y| y.powf(delta) * g(y));
        lo = hi;
    }
    acc
}

/// `(∫_{C^τ} w |u|^p + ∫_{C^τ} w |∇u|^p)^{1/p}` for a free-node vector, with
/// the order evaluated exactly at the x-quadrature points.
pub fn sobolev_norm(sys: &ExtensionSystem, u: &[f64]) -> Result<f64> {
    if u.len() != sys.n_free() {
        return Err(VarfracError::DimensionMismatch {
            expected: sys.n_free(),
            found: u.len(),
        });
    }
    let mesh = &sys.mesh;
    let spec = &sys.spec;
    let p = spec.p;
    let dim = mesh.dim();
    let ug = sys.to_global(u);
    let rule = GaussRule::legendre(GAUSS);
    let corners = 1usize << dim;
    let mut acc = 0.0;
    for el in mesh.elements() {
        let vals: Vec<f64> = el.nodes.iter().map(|&n| ug[n]).collect();
        if vals.iter().all(|&v| v == 0.0) {
            continue;
        }
        let (bot, top) = vals.split_at(corners);
        let hy = el.y_hi - el.y_lo;
        let pts: Vec<Vec<(f64, f64)>> = (0..dim)
            .map(|ax| {
                let bps = spec.order.step_breakpoints(ax);
                merge_breakpoints(el.x_lo[ax], el.x_hi[ax], bps)
                    .windows(2)
                    .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
                    .collect()
            })
            .collect();
        let count: usize = pts.iter().map(Vec::len).product();
        for q in 0..count {
            let mut x = vec![0.0; dim];
            let mut wx = 1.0;
            let mut rem = q;
            for ax in 0..dim {
                let (xi, wi) = pts[ax][rem % pts[ax].len()];
                rem /= pts[ax].len();
                x[ax] = xi;
                wx *= wi;
            }
            // Values and x-gradients of the bottom and top layer interpolants.
            let mut u0 = 0.0;
            let mut u1 = 0.0;
            let mut g0 = [0.0; 2];
            let mut g1 = [0.0; 2];
            for a in 0..corners {
                let mut shape = 1.0;
                let mut dshape = [1.0; 2];
                for ax in 0..dim {
                    let hx = el.x_hi[ax] - el.x_lo[ax];
                    let t = (x[ax] - el.x_lo[ax]) / hx;
                    let (val, der) = if (a >> ax) & 1 == 0 {
                        (1.0 - t, -1.0 / hx)
                    } else {
                        (t, 1.0 / hx)
                    };
                    shape *= val;
                    for (k, d) in dshape.iter_mut().enumerate().take(dim) {
                        *d *= if k == ax { der } else { val };
                    }
                }
                u0 += bot[a] * shape;
                u1 += top[a] * shape;
                for k in 0..dim {
                    g0[k] += bot[a] * dshape[k];
                    g1[k] += top[a] * dshape[k];
                }
            }
            let s = spec.order.eval(&x)?;
            let g = spec.g.for_order(&spec.order, s);
            let delta = 1.0 - 2.0 * s;
            let uy = (u1 - u0) / hy;
            let integrand = |y: f64| {
                let eta = (y - el.y_lo) / hy;
                let val = (1.0 - eta) * u0 + eta * u1;
                let mut grad2 = uy * uy;
                for k in 0..dim {
                    let gk = (1.0 - eta) * g0[k] + eta * g1[k];
                    grad2 += gk * gk;
                }
                val.abs().powf(p) + grad2.powf(0.5 * p)
            };
            acc += wx * g * y_integral(&rule, delta, el.y_lo, el.y_hi, integrand);
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// `‖tr u‖_{L^p(w̃)} ≤ C(p,σ) ‖u‖_{W^{1,p}(C^τ, w)}`.
pub fn trace_inequality_check(sys: &ExtensionSystem, u: &[f64], sigma: f64) -> Result<InequalityOutcome> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid("sigma", format!("need sigma in (0,1), got {sigma}")));
    }
    let v = GridFunction::from_base(sys, u)?;
    let lhs = trace_norm(&sys.spec, &v)?;
    let rhs = first_trace_constant(sys.spec.p, sigma) * sobolev_norm(sys, u)?;
    Ok(InequalityOutcome::new(lhs, rhs))
}

/// Checks `(‖tr u‖^p + Σ_i A_i(tr u))^{1/p} ≤ C ‖u‖_{W^{1,p}}` for many `u`
/// on one system, reusing the seminorm quadrature.
#[derive(Debug, Clone)]
pub struct ImprovedTraceChecker<'a> {
    sys: &'a ExtensionSystem,
    cfg: SeminormConfig,
    quads: Vec<SeminormQuadrature>,
}

impl<'a> ImprovedTraceChecker<'a> {
    pub fn new(sys: &'a ExtensionSystem, cfg: &SeminormConfig) -> Result<Self> {
        cfg.check_spec(&sys.spec)?;
        let quads = (0..sys.mesh.dim())
            .map(|ax| SeminormQuadrature::new(&sys.spec, cfg, ax, sys.mesh.n_x()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { sys, cfg: *cfg, quads })
    }

    /// The left side includes the band remainder of every `A_i`.
    pub fn check(&self, u: &[f64]) -> Result<InequalityOutcome> {
        let v = GridFunction::from_base(self.sys, u)?;
        let p = self.cfg.p;
        let mut lhs_p = trace_norm(&self.sys.spec, &v)?.powf(p);
        for (ax, q) in self.quads.iter().enumerate() {
            let a = q.evaluate(&v)?;
            if a.divergent {
                return Err(VarfracError::SuspectedDivergence(format!(
                    "seminorm along axis {ax} fails the band ratio test"
                )));
            }
            lhs_p += a.upper();
        }
        let rhs = improved_trace_constant(p, self.cfg.sigma) * sobolev_norm(self.sys, u)?;
        Ok(InequalityOutcome::new(lhs_p.powf(1.0 / p), rhs))
    }
}

pub fn improved_trace_check(sys: &ExtensionSystem, u: &[f64], cfg: &SeminormConfig) -> Result<InequalityOutcome> {
    ImprovedTraceChecker::new(sys, cfg)?.check(u)
}

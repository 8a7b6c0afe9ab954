//! Directional weights `Φ_i`, `φ_i`, `ψ_i` and `w_i = min(φ_i, ψ_i)`.

use crate::error::{invalid, Result, VarfracError};
use crate::order_field::{LineStructure, WeightSpec};
use crate::quadrature::{graded_toward_left, graded_toward_right, merge_breakpoints, GaussRule};

const CONTINUOUS_LEVELS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiWeights {
    /// `Φ_i(x_t, τ) = G_s(x_t) |t - τ|^{1-2s(x_t)}`.
    pub big_phi: f64,
    pub phi: f64,
    pub psi: f64,
    /// `min(φ, ψ)`.
    pub w: f64,
}

/// Weights along one coordinate line `{x : x_j = at_j, j ≠ axis}`.
#[derive(Debug, Clone)]
pub struct LineWeights<'a> {
    spec: &'a WeightSpec,
    axis: usize,
    at: Vec<f64>,
    structure: LineStructure,
    rule: GaussRule,
    p_conj: f64,
}

impl<'a> LineWeights<'a> {
    pub fn new(spec: &'a WeightSpec, axis: usize, at: &[f64]) -> Result<Self> {
        if at.len() != spec.dim() {
            return Err(VarfracError::DimensionMismatch {
                expected: spec.dim(),
                found: at.len(),
            });
        }
        if axis >= spec.dim() {
            return Err(invalid("axis", format!("axis {axis} out of range")));
        }
        Ok(Self {
            spec,
            axis,
            at: at.to_vec(),
            structure: spec.order.line_structure(axis),
            rule: GaussRule::legendre(10),
            p_conj: spec.p_conj(),
        })
    }

    pub fn p(&self) -> f64 {
        self.spec.p
    }

    /// `(s, G_s)` at the point of the line with coordinate `t`.
    #[inline]
    pub fn order_at(&self, t: f64) -> (f64, f64) {
        let s = if self.at.len() == 1 {
            self.spec.order.eval_unchecked(&[t])
        } else {
            let mut x = self.at.clone();
            x[self.axis] = t;
            self.spec.order.eval_unchecked(&x)
        };
        (s, self.spec.g.for_order(&self.spec.order, s))
    }

    pub fn breakpoints(&self) -> &[f64] {
        match &self.structure {
            LineStructure::Piecewise(b) => b,
            LineStructure::Continuous => &[],
        }
    }

    /// `ψ` in closed form, `G (1 + δ(1-p'))^p |t-τ|^{δ-p}`, with `G`, `δ`
    /// taken at `t`.
    pub fn psi(&self, t: f64, tau: f64) -> f64 {
        let (s, g) = self.order_at(t);
        let delta = 1.0 - 2.0 * s;
        let p = self.p();
        g * (1.0 + delta * (1.0 - self.p_conj)).powf(p) * (t - tau).abs().powf(delta - p)
    }

    /// `∫_{min(t,τ)}^{max(t,τ)} Φ(x_{t'}, τ)^{1-p'} dt'`.
    pub fn phi_inner_integral(&self, t: f64, tau: f64) -> f64 {
        let e_of = |s: f64| (1.0 - 2.0 * s) * (1.0 - self.p_conj);
        let (lo, hi) = if t < tau { (t, tau) } else { (tau, t) };
        match &self.structure {
            LineStructure::Piecewise(bps) => {
                let pts = merge_breakpoints(lo, hi, bps.iter().copied());
                pts.windows(2)
                    .map(|w| {
                        let (s, g) = self.order_at(0.5 * (w[0] + w[1]));
                        let e1 = e_of(s) + 1.0;
                        let da = (w[0] - tau).abs();
                        let db = (w[1] - tau).abs();
                        g.powf(1.0 - self.p_conj) * (db.powf(e1) - da.powf(e1)).abs() / e1
                    })
                    .sum()
            }
            LineStructure::Continuous => {
                let f = |tp: f64| {
                    let (s, g) = self.order_at(tp);
                    g.powf(1.0 - self.p_conj) * (tp - tau).abs().powf(e_of(s))
                };
                let (sum, eps) = if tau < t {
                    graded_toward_left(&self.rule, lo, hi, CONTINUOUS_LEVELS, f)
                } else {
                    graded_toward_right(&self.rule, lo, hi, CONTINUOUS_LEVELS, f)
                };
                let (s, g) = self.order_at(tau);
                let e1 = e_of(s) + 1.0;
                sum + g.powf(1.0 - self.p_conj) * eps.powf(e1) / e1
            }
        }
    }

    pub fn eval(&self, t: f64, tau: f64) -> PhiWeights {
        let (s, g) = self.order_at(t);
        let big_phi = g * (t - tau).abs().powf(1.0 - 2.0 * s);
        let lead = big_phi.powf(1.0 - self.p_conj);
        let phi = lead * self.phi_inner_integral(t, tau).powf(-self.p());
        let psi = self.psi(t, tau);
        PhiWeights {
            big_phi,
            phi,
            psi,
            w: phi.min(psi),
        }
    }
}

/// `Φ_i`, `φ_i`, `ψ_i`, `w_i` at the point `x` with `x_axis` replaced by `t`,
/// against `tau`. The exponent `p` is the one carried by `spec`.
pub fn phi_weights(spec: &WeightSpec, axis: usize, x: &[f64], t: f64, tau: f64) -> Result<PhiWeights> {
    if t == tau {
        return Err(invalid("t", "weights are singular at t = tau"));
    }
    Ok(LineWeights::new(spec, axis, x)?.eval(t, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order_field::{GsVariant, OrderField};

    fn spec(order: OrderField, g: GsVariant, p: f64) -> WeightSpec {
        WeightSpec::new(order, g, p).unwrap()
    }

    #[test]
    fn half_order_arithmetic() {
        let sp = spec(OrderField::constant(1, 0.5).unwrap(), GsVariant::Fixed(1.0), 2.0);
        let w = phi_weights(&sp, 0, &[0.0], 0.2, 0.7).unwrap();
        assert!((w.big_phi - 1.0).abs() < 1e-15);
        assert!((w.phi - 4.0).abs() < 1e-13);
        assert!((w.psi - 4.0).abs() < 1e-13);
        assert!(phi_weights(&sp, 0, &[0.0], 0.3, 0.3).is_err());
    }

    #[test]
    fn constant_order_closed_form() {
        for &(s, p) in &[(0.25, 2.0), (0.8, 3.0), (0.05, 2.5)] {
            let sp = spec(OrderField::constant(1, s).unwrap(), GsVariant::Pointwise, p);
            let g = crate::special::extension_constant(s);
            let delta = 1.0 - 2.0 * s;
            let pc = p / (p - 1.0);
            for &(t, tau) in &[(0.1, 0.9), (0.6, 0.55), (0.99, 0.01)] {
                let w = phi_weights(&sp, 0, &[0.0], t, tau).unwrap();
                let exact = g * (1.0 + delta * (1.0 - pc)).powf(p) / (t - tau).abs().powf(p - delta);
                assert!((w.phi - exact).abs() < 1e-12 * exact);
                assert!((w.psi - exact).abs() < 1e-12 * exact);
            }
        }
    }

    #[test]
    fn step_order_is_asymmetric() {
        let sp = spec(
            OrderField::two_cell_step(1, 0.5, 0.3, 0.7).unwrap(),
            GsVariant::Pointwise,
            2.0,
        );
        let w = phi_weights(&sp, 0, &[0.0], 0.3, 0.8).unwrap();
        assert!((w.phi - w.psi).abs() > 1e-3 * w.psi);
        assert_eq!(w.w, w.phi.min(w.psi));
    }

    #[test]
    fn continuous_path_matches_piecewise_on_constant() {
        // A distance field whose clamp makes it constant reproduces the
        // closed form through the graded branch.
        let order = OrderField::distance_based(1, 0.5, 0.9, vec![vec![5.0]])
            .unwrap()
            .with_bounds(0.05, 0.4)
            .unwrap();
        let sp = spec(order, GsVariant::Pointwise, 2.0);
        let lw = LineWeights::new(&sp, 0, &[0.0]).unwrap();
        let got = lw.phi_inner_integral(0.2, 0.7);
        let e = (1.0 - 0.8) * (1.0 - 2.0);
        let g = crate::special::extension_constant(0.4);
        let exact = g.powf(-1.0) * 0.5f64.powf(e + 1.0) / (e + 1.0);
        assert!((got - exact).abs() < 1e-12 * exact, "{got} {exact}");
    }
}

//! Weighted one-dimensional Hardy inequalities.

use super::norms::hardy_constant;
use super::InequalityOutcome;
use crate::error::{invalid, Result, VarfracError};
use crate::order_field::{h5_partial_sums, H5Outcome};
use crate::quadrature::{weighted_power_integral, GaussRule};

const LEVELS: usize = 60;

/// `C_H(p, ε) = p^p / (ε - p + 1)^p`.
pub fn classical_hardy_constant(p: f64, eps: f64) -> f64 {
    p.powf(p) / (eps - p + 1.0).powf(p)
}

/// Dyadic pieces `[a + L 2^{-k-1}, a + L 2^{-k}]`, innermost first.
fn pieces_toward(a: f64, b: f64) -> Vec<(f64, f64)> {
    let len = b - a;
    let mut out: Vec<(f64, f64)> = (0..LEVELS)
        .map(|k| (a + len * 0.5f64.powi(k as i32 + 1), a + len * 0.5f64.powi(k as i32)))
        .collect();
    out.reverse();
    out
}

/// Geometric extrapolation of `∫_a^{a+ε}` from the two innermost pieces;
/// exact for pure power laws.
fn geometric_tail(inner: f64, next: f64) -> f64 {
    if inner > 0.0 && next > 0.0 {
        let r = inner / next;
        if r < 1.0 {
            return inner * r / (1.0 - r);
        }
    }
    0.0
}

fn graded_integral<F: FnMut(f64) -> f64>(rule: &GaussRule, a: f64, b: f64, mut f: F) -> f64 {
    let pieces = pieces_toward(a, b);
    let parts: Vec<f64> = pieces.iter().map(|&(lo, hi)| rule.integrate(lo, hi, &mut f)).collect();
    // Summing innermost first keeps small terms from being absorbed.
    parts.iter().sum::<f64>() + geometric_tail(parts[0], parts[1])
}

/// `∫_a^b ρ̂ |f|^p ≤ C_H(p) ∫_a^b ρ |f'|^p` with
/// `ρ̂ = ρ^{1-p'} (∫_a^t ρ^{1-p'})^{-p}`, for `f(a+) = 0`.
pub fn hardy_weighted_check(
    rho: &dyn Fn(f64) -> f64,
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    p: f64,
) -> Result<InequalityOutcome> {
    if !(b > a) || !(p >= 2.0) {
        return Err(invalid(
            "interval",
            format!("need a < b and p >= 2, got ({a}, {b}), p = {p}"),
        ));
    }
    let q = 1.0 - p / (p - 1.0);
    let dual = |t: f64| rho(t).powf(q);
    let len = b - a;
    if let H5Outcome::SuspectedDivergent = h5_partial_sums(0.0, &[], |u| dual(a + len * u)) {
        return Err(VarfracError::SuspectedDivergence(
            "rho^{1-p'} is not integrable near the left end".into(),
        ));
    }
    let rule = GaussRule::legendre(12);
    let pieces = pieces_toward(a, b);
    let first = rule.integrate(pieces[0].0, pieces[0].1, dual);
    let second = rule.integrate(pieces[1].0, pieces[1].1, dual);
    // Running ∫_a^t ρ^{1-p'} at the left end of the current piece.
    let mut cumulative = geometric_tail(first, second);
    let mut lhs_parts = Vec::with_capacity(pieces.len());
    for &(lo, hi) in &pieces {
        let mut part = 0.0;
        for (t, w) in rule.mapped(lo, hi) {
            let r = cumulative + rule.integrate(lo, t, dual);
            let ft = f(t).abs();
            if ft > 0.0 {
                part += w * dual(t) * r.powf(-p) * ft.powf(p);
            }
        }
        lhs_parts.push(part);
        cumulative += rule.integrate(lo, hi, dual);
    }
    let lhs = lhs_parts.iter().sum::<f64>() + geometric_tail(lhs_parts[0], lhs_parts[1]);
    let rhs = hardy_constant(p) * graded_integral(&rule, a, b, |t| rho(t) * df(t).abs().powf(p));
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(VarfracError::SuspectedDivergence("non-finite Hardy integral".into()));
    }
    Ok(InequalityOutcome::new(lhs, rhs))
}

/// `∫_0^∞ t^{ε-p} |f|^p ≤ C_H(p, ε) ∫_0^∞ t^ε |f'|^p` for `f` supported in
/// `[0, support]`.
pub fn hardy_classical_check(
    f: &dyn Fn(f64) -> f64,
    df: &dyn Fn(f64) -> f64,
    support: f64,
    p: f64,
    eps: f64,
) -> Result<InequalityOutcome> {
    if !(p >= 2.0) || !(eps > p - 1.0) {
        return Err(invalid(
            "eps",
            format!("need p >= 2 and eps > p - 1, got p = {p}, eps = {eps}"),
        ));
    }
    if !(support > 0.0 && support.is_finite()) {
        return Err(invalid(
            "support",
            format!("need a positive support end, got {support}"),
        ));
    }
    let rule = GaussRule::legendre(12);
    let lhs = weighted_power_integral(&rule, eps - p, 0.0, support, |t| f(t).abs().powf(p));
    let rhs_integral = weighted_power_integral(&rule, eps, 0.0, support, |t| df(t).abs().powf(p));
    if !rhs_integral.is_finite() {
        return Err(invalid("f", "∫ t^eps |f'|^p is not finite"));
    }
    Ok(InequalityOutcome::new(
        lhs,
        classical_hardy_constant(p, eps) * rhs_integral,
    ))
}

//! Gauss–Legendre rules and dyadically graded integration toward a
//! power-law singular endpoint.

use std::f64::consts::PI;

/// Gauss–Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point Gauss–Legendre rule (exact for polynomials of degree `2n-1`).
    pub fn legendre(n: usize) -> Self {
        assert!(n > 0, "Gauss rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Integrates `f` over `[a, b]` on dyadic pieces shrinking toward `a`:
/// `[a + L 2^{-k-1}, a + L 2^{-k}]` for `k = 0..levels`, `L = b - a`.
///
/// Returns the sum and the width `L 2^{-levels}` of the uncovered innermost
/// piece `[a, a + width]`, which the caller closes analytically.
pub fn graded_toward_left<F: FnMut(f64) -> f64>(
    rule: &GaussRule,
    a: f64,
    b: f64,
    levels: usize,
    mut f: F,
) -> (f64, f64) {
    let len = b - a;
    let mut sum = 0.0;
    let mut hi = len;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        sum += rule.integrate(a + lo, a + hi, &mut f);
        hi = lo;
    }
    (sum, hi)
}

/// Same as [`graded_toward_left`], mirrored: pieces shrink toward `b`.
pub fn graded_toward_right<F: FnMut(f64) -> f64>(
    rule: &GaussRule,
    a: f64,
    b: f64,
    levels: usize,
    mut f: F,
) -> (f64, f64) {
    let len = b - a;
    let mut sum = 0.0;
    let mut hi = len;
    for _ in 0..levels {
        let lo = 0.5 * hi;
        sum += rule.integrate(b - hi, b - lo, &mut f);
        hi = lo;
    }
    (sum, hi)
}

/// `∫_a^b y^δ g(y) dy` for smooth `g`.
///
/// When `a == 0` the integrand is power-law singular; the integral is graded
/// toward zero and the innermost piece is closed with `g(0) ε^{δ+1}/(δ+1)`.
pub fn weighted_power_integral<F: FnMut(f64) -> f64>(rule: &GaussRule, delta: f64, a: f64, b: f64, mut g: F) -> f64 {
    if a > 0.0 {
        return rule.integrate(a, b, |y| y.powf(delta) * g(y));
    }
    let (sum, eps) = graded_toward_left(rule, a, b, 48, |y| y.powf(delta) * g(y));
    sum + g(0.0) * eps.powf(delta + 1.0) / (delta + 1.0)
}

/// Sorted, de-duplicated breakpoints restricted to `[a, b]`, endpoints
/// included.
pub fn merge_breakpoints(a: f64, b: f64, interior: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(interior.into_iter().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(|x, y| x.total_cmp(y));
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in 1..=20 {
            let rule = GaussRule::legendre(n);
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "n={n}");
            for deg in 0..(2 * n) {
                let exact = (1.0 - (-1.0f64).powi(deg as i32 + 1)) / (deg as f64 + 1.0);
                let got = rule.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-12, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn high_order_rule_is_accurate() {
        let rule = GaussRule::legendre(64);
        let got = rule.integrate(0.0, 1.0, |x| (20.0 * PI * x).sin().powi(2));
        assert!((got - 0.5).abs() < 1e-13);
    }

    #[test]
    fn weighted_power_integral_closed_forms() {
        let rule = GaussRule::legendre(10);
        for &delta in &[-0.9, -0.5, 0.0, 0.5, 0.9] {
            let exact = 1.0 / (delta + 1.0);
            let got = weighted_power_integral(&rule, delta, 0.0, 1.0, |_| 1.0);
            assert!((got - exact).abs() < 1e-12 * exact, "delta={delta}");
            let exact2 = 1.0 / (delta + 3.0);
            let got2 = weighted_power_integral(&rule, delta, 0.0, 1.0, |y| y * y);
            assert!((got2 - exact2).abs() < 1e-12, "delta={delta}");
        }
    }

    #[test]
    fn breakpoints_are_sorted_and_unique() {
        let pts = merge_breakpoints(0.0, 1.0, [0.5, 0.25, 0.5, 2.0, -1.0, 1.0]);
        assert_eq!(pts, vec![0.0, 0.25, 0.5, 1.0]);
    }
}

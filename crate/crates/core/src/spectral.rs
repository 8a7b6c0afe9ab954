//! Sine-series ground truth for constant order on `(0,1)^N` and a per-mode
//! one-dimensional extension problem.

use std::f64::consts::{PI, SQRT_2};

use crate::assembly::y_factors;
use crate::error::{invalid, Result, VarfracError};
use crate::quadrature::GaussRule;
use crate::special::extension_constant;

/// Coefficients `b_k` of `Σ b_k φ_k`, `φ_k = 2^{N/2} Π sin(k_i π x_i)`,
/// for `k ∈ {1..K}^N` stored with `k_1` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub dim: usize,
    pub modes: usize,
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(dim: usize, modes: usize) -> Self {
        Self {
            dim,
            modes,
            coeffs: vec![0.0; modes.pow(dim as u32)],
        }
    }

    /// Multi-index (1-based) of slot `idx`.
    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        (0..self.dim)
            .map(|ax| (idx / self.modes.pow(ax as u32)) % self.modes + 1)
            .collect()
    }

    pub fn slot(&self, k: &[usize]) -> usize {
        k.iter()
            .enumerate()
            .map(|(ax, &ki)| (ki - 1) * self.modes.pow(ax as u32))
            .sum()
    }

    pub fn coeff(&self, k: &[usize]) -> f64 {
        self.coeffs[self.slot(k)]
    }

    /// `λ_k = π² |k|²`.
    pub fn eigenvalue(k: &[usize]) -> f64 {
        PI * PI * k.iter().map(|&v| (v * v) as f64).sum::<f64>()
    }

    pub fn basis(k: &[usize], x: &[f64]) -> f64 {
        k.iter()
            .zip(x)
            .map(|(&ki, &xi)| SQRT_2 * (ki as f64 * PI * xi).sin())
            .product()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| c * Self::basis(&self.multi_index(i), x))
            .sum()
    }

    /// `Σ b_k²`, the squared `L²` norm of the truncated series.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Energy of the outermost shell `max_i k_i = K`, used as the
    /// truncation-tail estimate.
    pub fn tail_energy(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| self.multi_index(*i).contains(&self.modes))
            .map(|(_, c)| c * c)
            .sum()
    }

    fn scaled(&self, s: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| Self::eigenvalue(&self.multi_index(i)).powf(s) * c)
            .collect();
        Self {
            dim: self.dim,
            modes: self.modes,
            coeffs,
        }
    }

    /// Coefficients `λ_k^s b_k`.
    pub fn apply_power(&self, s: f64) -> Self {
        self.scaled(s)
    }

    /// Coefficients `λ_k^{-s} b_k`.
    pub fn solve_power(&self, s: f64) -> Self {
        self.scaled(-s)
    }
}

/// Sine coefficients of `f` up to `modes` per axis, by a tensor Gauss rule
/// with `quad_pts` points per axis.
pub fn analyze<F: Fn(&[f64]) -> f64>(f: F, dim: usize, modes: usize, quad_pts: usize) -> SpectralField {
    let rule = GaussRule::legendre(quad_pts);
    let pts: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
    let mut field = SpectralField::zeros(dim, modes);
    let total = quad_pts.pow(dim as u32);
    // sines[ax-independent]: sin(k π x_q) for each quadrature node.
    let sines: Vec<Vec<f64>> = pts
        .iter()
        .map(|&(x, _)| (1..=modes).map(|k| SQRT_2 * (k as f64 * PI * x).sin()).collect())
        .collect();
    for q in 0..total {
        let qi: Vec<usize> = (0..dim).map(|ax| (q / quad_pts.pow(ax as u32)) % quad_pts).collect();
        let x: Vec<f64> = qi.iter().map(|&i| pts[i].0).collect();
        let w: f64 = qi.iter().map(|&i| pts[i].1).product();
        let fw = f(&x) * w;
        if fw == 0.0 {
            continue;
        }
        for (slot, c) in field.coeffs.iter_mut().enumerate() {
            let mut phi = 1.0;
            for (ax, &i) in qi.iter().enumerate() {
                phi *= sines[i][(slot / modes.pow(ax as u32)) % modes];
            }
            *c += fw * phi;
        }
    }
    field
}

/// `λ^s` approximated by the weighted Neumann value at `y = 0` of the
/// one-dimensional problem `∫ y^{1-2s}(g'h' + λ g h) = 0`, `g(0) = 1`,
/// `g(τ) = 0`, on the graded grid `y_j = τ (j/(n_y-1))^γ`, scaled by
/// `2^{2s-1} Γ(s)/Γ(1-s)`.
pub fn mode_dtn_1d(lambda: f64, s: f64, n_y: usize, gamma: f64, tau: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda", format!("need lambda > 0, got {lambda}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid("s", format!("need s in (0,1), got {s}")));
    }
    if n_y < 3 || !(gamma >= 1.0) || !(tau > 0.0) {
        return Err(invalid("grid", "need n_y >= 3, gamma >= 1, tau > 0"));
    }
    let last = (n_y - 1) as f64;
    let y: Vec<f64> = (0..n_y).map(|j| tau * (j as f64 / last).powf(gamma)).collect();
    let factors: Vec<_> = y.windows(2).map(|w| y_factors(s, w[0], w[1])).collect();
    let masses: Vec<[[f64; 2]; 2]> = factors.iter().map(|f| f.0).collect();
    let elems: Vec<[[f64; 2]; 2]> = factors
        .iter()
        .map(|(my, ky)| {
            let mut e = [[0.0; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    e[a][b] = ky[a][b] + lambda * my[a][b];
                }
            }
            e
        })
        .collect();
    // Solve for d = 1 - g (d(0) = 0, d(τ) = 1): on strongly graded grids
    // g(y_1) is within rounding of 1, and the flux k (1 - g_1) would cancel.
    // Stiffness rows annihilate constants, so the load is λ times mass row sums.
    let n = n_y - 2;
    let mass_row = |e: &[[f64; 2]; 2], r: usize| e[r][0] + e[r][1];
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        let node = i + 1;
        diag[i] = elems[node - 1][1][1] + elems[node][0][0];
        if i + 1 < n {
            off[i] = elems[node][0][1];
        }
        rhs[i] = lambda * (mass_row(&masses[node - 1], 1) + mass_row(&masses[node], 0));
    }
    rhs[n - 1] -= elems[n][0][1];
    let d = thomas(&diag, &off, &rhs)?;
    // Σ_j K_0j g_j = λ (row-0 mass sum) - K_01 d_1, all terms non-negative.
    let flux = lambda * mass_row(&masses[0], 0) - elems[0][0][1] * d[0];
    Ok(extension_constant(s) * flux)
}

/// Symmetric tridiagonal solve.
fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let lower = if i > 0 { off[i - 1] } else { 0.0 };
        let denom = diag[i] - if i > 0 { lower * c[i - 1] } else { 0.0 };
        if denom.abs() <= f64::MIN_POSITIVE || !denom.is_finite() {
            return Err(VarfracError::SingularPivot(i));
        }
        c[i] = if i + 1 < n { off[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - if i > 0 { lower * d[i - 1] } else { 0.0 }) / denom;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = d[i] - if i + 1 < n { c[i] * x[i + 1] } else { 0.0 };
    }
    Ok(x)
}

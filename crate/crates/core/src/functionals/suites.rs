//! Seeded random test families for the inequality checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::hardy::{hardy_classical_check, hardy_weighted_check};
use super::norms::{trace_inequality_check, ImprovedTraceChecker};
use super::seminorm::SeminormConfig;
use super::InequalityOutcome;
use crate::assembly::ExtensionSystem;
use crate::error::Result;

/// One CSV row of an inequality suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub suite: String,
    pub function_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

impl SuiteRow {
    fn new(suite: &str, function_id: String, out: InequalityOutcome) -> Self {
        Self {
            suite: suite.to_string(),
            function_id,
            lhs: out.lhs,
            rhs: out.rhs,
            margin: out.margin(),
            holds: out.holds,
        }
    }
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64))
}

/// A random discrete function on the free nodes. The family rotates with
/// `index` between smooth separable modes and nodal noise, the latter either
/// everywhere or on the base layer only.
pub fn random_extension(sys: &ExtensionSystem, rng: &mut impl Rng, index: usize) -> (String, Vec<f64>) {
    let mesh = &sys.mesh;
    let tau = mesh.tau();
    match index % 3 {
        0 => {
            let terms: Vec<(Vec<f64>, f64, f64, i32)> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let k: Vec<f64> = (0..mesh.dim()).map(|_| rng.gen_range(1..=4) as f64).collect();
                    (
                        k,
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(0.0..5.0),
                        rng.gen_range(1..=2),
                    )
                })
                .collect();
            let u = sys
                .free_nodes()
                .iter()
                .map(|&n| {
                    let (x, y) = mesh.coords(n);
                    terms
                        .iter()
                        .map(|(k, amp, decay, m)| {
                            let sx: f64 = k.iter().zip(&x).map(|(ki, xi)| (ki * PI * xi).sin()).product();
                            amp * sx * (1.0 - y / tau).powi(*m) * (-decay * y).exp()
                        })
                        .sum()
                })
                .collect();
            ("smooth_modes".into(), u)
        }
        1 => (
            "nodal_noise".into(),
            (0..sys.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        ),
        _ => {
            let mut u = vec![0.0; sys.n_free()];
            for v in u.iter_mut().take(sys.n_base()) {
                *v = rng.gen_range(-1.0..1.0);
            }
            ("base_layer_noise".into(), u)
        }
    }
}

pub fn trace_suite(sys: &ExtensionSystem, samples: usize, seed: u64, sigma: f64) -> Result<Vec<SuiteRow>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let (kind, u) = random_extension(sys, &mut rng, i);
            let out = trace_inequality_check(sys, &u, sigma)?;
            Ok(SuiteRow::new("trace", format!("{kind}_{i}"), out))
        })
        .collect()
}

pub fn improved_trace_suite(
    sys: &ExtensionSystem,
    cfg: &SeminormConfig,
    samples: usize,
    seed: u64,
) -> Result<Vec<SuiteRow>> {
    let checker = ImprovedTraceChecker::new(sys, cfg)?;
    // The seminorm evaluation is itself parallel.
    (0..samples)
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let (kind, u) = random_extension(sys, &mut rng, i);
            let out = checker.check(&u)?;
            Ok(SuiteRow::new("improved_trace", format!("{kind}_{i}"), out))
        })
        .collect()
}

/// `ρ = t^α (1 + c t)` on `(0, b)`, `f = c₁ t + c₂ t² + c₃ sin(k π t / b)`.
pub fn hardy_weighted_suite(samples: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let p: f64 = rng.gen_range(2.0..4.0);
            let b: f64 = rng.gen_range(0.5..2.0);
            let alpha: f64 = rng.gen_range(-0.9..0.9 * (p - 1.0));
            let c: f64 = rng.gen_range(0.0..2.0);
            let c1: f64 = rng.gen_range(-1.0..1.0);
            let c2: f64 = rng.gen_range(-1.0..1.0);
            let c3: f64 = rng.gen_range(-1.0..1.0);
            let k = rng.gen_range(1..=3) as f64;
            let w = k * PI / b;
            let rho = move |t: f64| t.powf(alpha) * (1.0 + c * t);
            let f = move |t: f64| c1 * t + c2 * t * t + c3 * (w * t).sin();
            let df = move |t: f64| c1 + 2.0 * c2 * t + c3 * w * (w * t).cos();
            let out = hardy_weighted_check(&rho, &f, &df, 0.0, b, p)?;
            Ok(SuiteRow::new(
                "hardy_weighted",
                format!("p={p:.4}_alpha={alpha:.4}_b={b:.4}_{i}"),
                out,
            ))
        })
        .collect()
}

/// `f = (R - t)² (c₀ + c₁ t + c₂ t²)` on `[0, R]`, `ε ∈ (p-1, p+2)`.
pub fn hardy_classical_suite(samples: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let p: f64 = rng.gen_range(2.0..4.0);
            let eps: f64 = p - 1.0 + rng.gen_range(0.05..3.0);
            let r: f64 = rng.gen_range(0.5..2.0);
            let c: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let poly = move |t: f64| c[0] + c[1] * t + c[2] * t * t;
            let dpoly = move |t: f64| c[1] + 2.0 * c[2] * t;
            let f = move |t: f64| (r - t).powi(2) * poly(t);
            let df = move |t: f64| -2.0 * (r - t) * poly(t) + (r - t).powi(2) * dpoly(t);
            let out = hardy_classical_check(&f, &df, r, p, eps)?;
            Ok(SuiteRow::new(
                "hardy_classical",
                format!("p={p:.4}_eps={eps:.4}_R={r:.4}_{i}"),
                out,
            ))
        })
        .collect()
}

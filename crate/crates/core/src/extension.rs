//! Poisson solves, harmonic and penalty extensions, the discrete
//! Dirichlet-to-Neumann operator and the Poincaré constant.

use crate::assembly::ExtensionSystem;
use crate::error::{Result, VarfracError};
use crate::sparse::{cg_solve, default_max_iter, dot, smallest_generalized_eig_capped, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target for every CG solve.
    pub tol: f64,
    /// Iteration cap; `None` means `50 √n + 1000`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
        }
    }
}

impl SolverOptions {
    fn cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or_else(|| default_max_iter(n))
    }

    fn solve(&self, a: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, usize, f64)> {
        let out = cg_solve(a, b, self.tol, self.cap(a.dim()))?;
        Ok((out.x, out.iterations, out.residual))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    /// Extended solution on the free nodes.
    pub u: Vec<f64>,
    /// Base trace, `u` restricted to BASE.
    pub v: Vec<f64>,
    /// `½ uᵀ A u - bᵀ u`.
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtNResult {
    /// Operator value as an `L²(Ω)` density on BASE nodes.
    pub lambda: Vec<f64>,
    /// BASE rows of `A u` before mass inversion.
    pub raw_residual: Vec<f64>,
    /// Extension used to form the residual.
    pub extension: Vec<f64>,
}

fn pad_load(sys: &ExtensionSystem, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() == sys.n_free() {
        Ok(b.to_vec())
    } else if b.len() == sys.n_base() {
        let mut full = vec![0.0; sys.n_free()];
        full[..b.len()].copy_from_slice(b);
        Ok(full)
    } else {
        Err(VarfracError::DimensionMismatch {
            expected: sys.n_free(),
            found: b.len(),
        })
    }
}

fn check_base(sys: &ExtensionSystem, v: &[f64]) -> Result<()> {
    if v.len() != sys.n_base() {
        return Err(VarfracError::DimensionMismatch {
            expected: sys.n_base(),
            found: v.len(),
        });
    }
    Ok(())
}

/// Solves `A u = b` for a load given either on all free nodes or on BASE.
pub fn solve_poisson(sys: &ExtensionSystem, b: &[f64], opts: &SolverOptions) -> Result<PoissonSolution> {
    let b = pad_load(sys, b)?;
    let (u, iterations, residual) = opts.solve(&sys.a, &b)?;
    let energy = 0.5 * sys.a.quad_form(&u) - dot(&b, &u);
    Ok(PoissonSolution {
        v: u[..sys.n_base()].to_vec(),
        u,
        energy,
        iterations,
        residual,
    })
}

/// Extension of BASE data `v` minimising the weighted Dirichlet energy.
pub fn harmonic_extension(sys: &ExtensionSystem, v: &[f64], opts: &SolverOptions) -> Result<Vec<f64>> {
    check_base(sys, v)?;
    let nb = sys.n_base();
    let n = sys.n_free();
    // Solve the unit-diagonal form `D A_II D w = -D A_IB v`, `u_I = D w`.
    // The Jacobi iterates are unchanged, but the residual test no longer
    // lets the stiff first y-layer mask the remaining rows.
    let a_ii = sys.a.principal(nb..n);
    let scale: Vec<f64> = a_ii.diagonal().iter().map(|&d| 1.0 / d.sqrt()).collect();
    let rhs: Vec<f64> = sys
        .a
        .block(nb..n, 0..nb)
        .matvec(v)
        .into_iter()
        .zip(&scale)
        .map(|(x, d)| -x * d)
        .collect();
    let (w, _, _) = opts.solve(&a_ii.symmetric_scaled(&scale), &rhs)?;
    let mut u = Vec::with_capacity(n);
    u.extend_from_slice(v);
    u.extend(w.iter().zip(&scale).map(|(w, d)| w * d));
    Ok(u)
}

/// Minimiser of `½ uᵀAu + (μ/2)(u_B - v)ᵀ M_base (u_B - v)`.
pub fn penalty_extension(sys: &ExtensionSystem, v: &[f64], mu: f64, opts: &SolverOptions) -> Result<Vec<f64>> {
    check_base(sys, v)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(crate::error::invalid("mu", format!("need mu > 0, got {mu}")));
    }
    let n = sys.n_free();
    let mut trip = Vec::with_capacity(sys.m_base.nnz());
    for i in 0..sys.n_base() {
        trip.extend(sys.m_base.row(i).map(|(j, val)| (i, j, val)));
    }
    let embedded = SparseMatrix::from_triplets(n, trip);
    let lhs = sys.a.add_scaled(mu, &embedded);
    let mut rhs = vec![0.0; n];
    for (r, val) in rhs.iter_mut().zip(sys.m_base.matvec(v)) {
        *r = mu * val;
    }
    Ok(opts.solve(&lhs, &rhs)?.0)
}

/// Discrete `(-Δ)^{s(·)} v`: BASE residual of the harmonic extension,
/// converted to a density by inverting the base mass matrix.
pub fn apply_operator(sys: &ExtensionSystem, v: &[f64], opts: &SolverOptions) -> Result<DtNResult> {
    let u = harmonic_extension(sys, v, opts)?;
    let au = sys.a.matvec(&u);
    let raw_residual = au[..sys.n_base()].to_vec();
    let mass_opts = SolverOptions {
        tol: opts.tol.min(1e-13),
        max_iter: opts.max_iter,
    };
    let (lambda, _, _) = mass_opts.solve(&sys.m_base, &raw_residual)?;
    Ok(DtNResult {
        lambda,
        raw_residual,
        extension: u,
    })
}

/// `1/√ν_min` for the pencil `A u = ν M_w u`; `tol` is the relative
/// Rayleigh-quotient tolerance, `opts.max_iter` caps the inner solves.
pub fn poincare_constant(sys: &ExtensionSystem, tol: f64, opts: &SolverOptions) -> Result<f64> {
    let (nu, _) = smallest_generalized_eig_capped(&sys.a, &sys.m_w, tol, opts.max_iter)?;
    Ok(1.0 / nu.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, load_from_base_function};
    use crate::mesh::build_mesh;
    use crate::order_field::{GsVariant, OrderField, WeightSpec};
    use std::f64::consts::PI;

    fn half_system(n: usize, tau: f64) -> ExtensionSystem {
        let mesh = build_mesh(1, n, n, tau, 2.0).unwrap();
        let spec = WeightSpec::new(OrderField::constant(1, 0.5).unwrap(), GsVariant::Pointwise, 2.0).unwrap();
        assemble(&mesh, &spec).unwrap()
    }

    #[test]
    fn zero_data_gives_zero() {
        let sys = half_system(9, 2.0);
        let opts = SolverOptions::default();
        let sol = solve_poisson(&sys, &vec![0.0; sys.n_free()], &opts).unwrap();
        assert!(sol.u.iter().all(|&x| x == 0.0));
        assert_eq!(sol.energy, 0.0);
        let zero = vec![0.0; sys.n_base()];
        assert!(harmonic_extension(&sys, &zero, &opts)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        assert!(penalty_extension(&sys, &zero, 10.0, &opts)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        assert!(apply_operator(&sys, &zero, &opts)
            .unwrap()
            .lambda
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn trace_is_restriction_of_solution() {
        let sys = half_system(17, 3.0);
        let b = load_from_base_function(&sys.mesh, |x| (PI * x[0]).sin());
        let sol = solve_poisson(&sys, &b, &SolverOptions::default()).unwrap();
        assert_eq!(sol.v, sol.u[..sys.n_base()]);
        // Extending the trace reproduces the volume solution.
        let ext = harmonic_extension(
            &sys,
            &sol.v,
            &SolverOptions {
                tol: 1e-12,
                max_iter: None,
            },
        )
        .unwrap();
        let err = ext.iter().zip(&sol.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = sol.u.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(err < 1e-7 * scale, "{err}");
    }

    #[test]
    fn extension_is_linear() {
        let sys = half_system(17, 3.0);
        let opts = SolverOptions {
            tol: 1e-13,
            max_iter: None,
        };
        let v1 = sys.interpolate_base(|x| (PI * x[0]).sin());
        let v2 = sys.interpolate_base(|x| x[0] * (1.0 - x[0]));
        let sum: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
        let e1 = harmonic_extension(&sys, &v1, &opts).unwrap();
        let e2 = harmonic_extension(&sys, &v2, &opts).unwrap();
        let es = harmonic_extension(&sys, &sum, &opts).unwrap();
        for i in 0..es.len() {
            assert!((es[i] - e1[i] - e2[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn dtn_mass_identity() {
        let sys = half_system(17, 3.0);
        let v = sys.interpolate_base(|x| (PI * x[0]).sin());
        let r = apply_operator(&sys, &v, &SolverOptions::default()).unwrap();
        let back = sys.m_base.matvec(&r.lambda);
        for (a, b) in back.iter().zip(&r.raw_residual) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn poincare_unit_half_space_bound() {
        let mesh = build_mesh(1, 17, 17, 1.0, 1.0).unwrap();
        let spec = WeightSpec::new(OrderField::constant(1, 0.5).unwrap(), GsVariant::Fixed(1.0), 2.0).unwrap();
        let sys = assemble(&mesh, &spec).unwrap();
        let cp = poincare_constant(&sys, 1e-10, &SolverOptions::default()).unwrap();
        // Dirichlet on three sides, Neumann at y = 0: ν = π² + π²/4.
        let exact = 1.0 / (PI * PI * 1.25).sqrt();
        assert!(cp <= 1.0 / PI * 1.05);
        assert!((cp - exact).abs() < 0.02 * exact, "{cp} vs {exact}");
    }
}

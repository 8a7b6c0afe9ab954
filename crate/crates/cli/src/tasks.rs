//! Task drivers. Each returns the artifacts to write; nothing touches the
//! filesystem here.

use varfrac_core::functionals::{
    hardy_classical_suite, hardy_weighted_suite, improved_trace_suite, trace_suite, GridFunction, SeminormConfig,
    SuiteRow,
};
use varfrac_core::{
    analyze, apply_operator, assemble, build_mesh, harmonic_extension, load_from_base_function, mode_dtn_1d,
    penalty_extension, poincare_constant, solve_poisson, ExtensionSystem, OrderKind, SolverOptions, SpectralField,
};

use crate::config::{Compare, DataSpec, Resolved, SuiteKind, Task};
use crate::error::CliError;
use crate::output::{num, Artifacts, Table, VolumeField};

type Outcome = Result<Artifacts, CliError>;

pub fn run(res: &Resolved) -> Outcome {
    match res.cfg.task {
        Task::Solve => solve(res),
        Task::Apply => apply(res),
        Task::Extend => extend(res),
        Task::PenaltyStudy => penalty_study(res),
        Task::OracleCompare => oracle_compare(res),
        Task::Poincare => poincare(res),
        Task::InequalitySuite => inequality_suite(res),
        Task::ConvergenceStudy => convergence_study(res),
    }
}

/// Base data as a function on `[0,1]^N`.
enum BaseData {
    Analytic(DataSpec),
    /// Piecewise multilinear interpolant of nodal values.
    Nodal(GridFunction),
}

impl BaseData {
    fn new(res: &Resolved, sys: &ExtensionSystem) -> Result<Self, CliError> {
        let spec = res.cfg.data.clone().unwrap_or(DataSpec::Zero);
        Ok(match (&spec, &res.nodal) {
            (DataSpec::NodalCsv { .. }, Some(values)) => BaseData::Nodal(GridFunction::from_base(sys, values)?),
            _ => BaseData::Analytic(spec),
        })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            BaseData::Nodal(g) => g.eval(x),
            BaseData::Analytic(spec) => match spec {
                DataSpec::Zero | DataSpec::NodalCsv { .. } => 0.0,
                DataSpec::One => 1.0,
                DataSpec::SinMode { k } => x
                    .iter()
                    .enumerate()
                    .map(|(ax, xi)| (k[ax.min(k.len() - 1)] as f64 * std::f64::consts::PI * xi).sin())
                    .product(),
                DataSpec::Bump { center, radius } => {
                    let r2: f64 = x
                        .iter()
                        .enumerate()
                        .map(|(ax, xi)| {
                            let c = center.as_ref().map_or(0.5, |c| c[ax]);
                            ((xi - c) / radius).powi(2)
                        })
                        .sum();
                    if r2 < 1.0 {
                        (1.0 - 1.0 / (1.0 - r2)).exp()
                    } else {
                        0.0
                    }
                }
            },
        }
    }

    /// Right-hand side on the free unknowns.
    fn load(&self, sys: &ExtensionSystem) -> Vec<f64> {
        match self {
            // Exact load of the interpolant: base mass times nodal values.
            BaseData::Nodal(_) => sys.m_base.matvec(&self.nodal_values(sys)),
            BaseData::Analytic(_) => load_from_base_function(&sys.mesh, |x| self.eval(x)),
        }
    }

    fn nodal_values(&self, sys: &ExtensionSystem) -> Vec<f64> {
        sys.interpolate_base(|x| self.eval(x))
    }

    /// Sine coefficients of the data, for the spectral oracle.
    fn spectrum(&self, res: &Resolved) -> SpectralField {
        let o = &res.cfg.oracle;
        analyze(|x| self.eval(x), res.cfg.domain.dim, o.modes, o.quad_points)
    }
}

fn options(res: &Resolved) -> SolverOptions {
    SolverOptions {
        tol: res.cfg.solver.tol,
        max_iter: res.cfg.solver.max_iter,
    }
}

fn system(res: &Resolved, n_x: usize, n_y: usize) -> Result<ExtensionSystem, CliError> {
    let mesh = build_mesh(res.cfg.domain.dim, n_x, n_y, res.tau, res.gamma)?;
    Ok(assemble(&mesh, &res.spec)?)
}

fn domain_system(res: &Resolved) -> Result<ExtensionSystem, CliError> {
    system(res, res.cfg.domain.n_x, res.cfg.domain.n_y)
}

fn constant_order(res: &Resolved) -> Option<f64> {
    match res.spec.order.kind() {
        OrderKind::Constant(s) => Some(*s),
        _ => None,
    }
}

/// `‖a - b‖ / ‖b‖` in the base `L²` norm; absolute when `b` vanishes.
fn rel_l2(sys: &ExtensionSystem, a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let err = sys.m_base.quad_form(&diff).max(0.0).sqrt();
    let norm = sys.m_base.quad_form(b).max(0.0).sqrt();
    if norm > 0.0 {
        err / norm
    } else {
        err
    }
}

fn trace_table(sys: &ExtensionSystem, columns: Vec<(&str, Vec<f64>)>) -> Table {
    let dim = sys.mesh.dim();
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    header.extend(columns.iter().map(|(name, _)| name.to_string()));
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    for (i, x) in sys.base_coords().iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| num(*v)).collect();
        row.extend(columns.iter().map(|(_, col)| num(col[i])));
        table.push(row);
    }
    table
}

/// Poisson solve, optionally compared with `λ_k^{-s} b_k`.
fn solve(res: &Resolved) -> Outcome {
    let sys = domain_system(res)?;
    let data = BaseData::new(res, &sys)?;
    let sol = solve_poisson(&sys, &data.load(&sys), &options(res))?;
    let mut report = vec![
        ("n_free", sys.n_free().to_string()),
        ("iterations", sol.iterations.to_string()),
        ("residual", num(sol.residual)),
        ("energy", num(sol.energy)),
    ];
    let mut columns = vec![("v", sol.v.clone())];
    if res.cfg.compare == Compare::Spectral {
        let s = constant_order(res).expect("checked during validation");
        let exact_field = data.spectrum(res).solve_power(s);
        let exact = sys.interpolate_base(|x| exact_field.eval(x));
        report.push(("l2_error", num(rel_l2(&sys, &sol.v, &exact))));
        columns.push(("exact", exact));
    }
    Ok(Artifacts {
        solution: Some(VolumeField::from_system(&sys, &sol.u)),
        trace: Some(trace_table(&sys, columns)),
        report: Table::key_value(report),
    })
}

/// Discrete operator applied to the data, optionally compared with `λ_k^s b_k`.
fn apply(res: &Resolved) -> Outcome {
    let sys = domain_system(res)?;
    let data = BaseData::new(res, &sys)?;
    let v = data.nodal_values(&sys);
    let out = apply_operator(&sys, &v, &options(res))?;
    let mut report = vec![("n_free", sys.n_free().to_string())];
    let mut columns = vec![("v", v), ("lambda", out.lambda.clone())];
    if res.cfg.compare == Compare::Spectral {
        let s = constant_order(res).expect("checked during validation");
        let exact_field = data.spectrum(res).apply_power(s);
        let exact = sys.interpolate_base(|x| exact_field.eval(x));
        report.push(("l2_error", num(rel_l2(&sys, &out.lambda, &exact))));
        columns.push(("exact", exact));
    }
    Ok(Artifacts {
        solution: Some(VolumeField::from_system(&sys, &out.extension)),
        trace: Some(trace_table(&sys, columns)),
        report: Table::key_value(report),
    })
}

fn extend(res: &Resolved) -> Outcome {
    let sys = domain_system(res)?;
    let v = BaseData::new(res, &sys)?.nodal_values(&sys);
    let u = harmonic_extension(&sys, &v, &options(res))?;
    let report = vec![
        ("n_free", sys.n_free().to_string()),
        ("dirichlet_energy", num(sys.a.quad_form(&u))),
    ];
    Ok(Artifacts {
        solution: Some(VolumeField::from_system(&sys, &u)),
        trace: Some(trace_table(&sys, vec![("v", v)])),
        report: Table::key_value(report),
    })
}

/// Base-constraint violation and energy gap of the penalised extension
/// across the configured penalty parameters.
fn penalty_study(res: &Resolved) -> Outcome {
    let sys = domain_system(res)?;
    let v = BaseData::new(res, &sys)?.nodal_values(&sys);
    let opts = options(res);
    let reference = sys.a.quad_form(&harmonic_extension(&sys, &v, &opts)?);
    let mut table = Table::new(&["mu", "violation", "energy", "energy_gap"]);
    let mut last = None;
    for &mu in &res.cfg.penalty.mu {
        let u = penalty_extension(&sys, &v, mu, &opts)?;
        let diff: Vec<f64> = sys.base_part(&u).iter().zip(&v).map(|(a, b)| a - b).collect();
        let violation = sys.m_base.quad_form(&diff).max(0.0).sqrt();
        let energy = sys.a.quad_form(&u);
        let gap = if reference > 0.0 {
            (energy - reference).abs() / reference
        } else {
            energy.abs()
        };
        table.push(vec![num(mu), num(violation), num(energy), num(gap)]);
        last = Some(u);
    }
    let u = last.expect("mu list is non-empty");
    let trace = trace_table(&sys, vec![("v", v), ("penalised", sys.base_part(&u).to_vec())]);
    Ok(Artifacts {
        solution: Some(VolumeField::from_system(&sys, &u)),
        trace: Some(trace),
        report: table,
    })
}

/// Constant-order check of every discrete quantity that has a spectral
/// counterpart.
fn oracle_compare(res: &Resolved) -> Outcome {
    let s = constant_order(res).expect("checked during validation");
    let sys = domain_system(res)?;
    let data = BaseData::new(res, &sys)?;
    let opts = options(res);
    let spectrum = data.spectrum(res);

    let sol = solve_poisson(&sys, &data.load(&sys), &opts)?;
    let exact_solve = {
        let f = spectrum.solve_power(s);
        sys.interpolate_base(|x| f.eval(x))
    };
    let v = data.nodal_values(&sys);
    let op = apply_operator(&sys, &v, &opts)?;
    let exact_apply = {
        let f = spectrum.apply_power(s);
        sys.interpolate_base(|x| f.eval(x))
    };
    let lambda_1 = res.cfg.domain.dim as f64 * std::f64::consts::PI.powi(2);
    let mode = mode_dtn_1d(lambda_1, s, res.cfg.domain.n_y, res.gamma, res.tau)?;
    let report = vec![
        ("solve_l2_error", num(rel_l2(&sys, &sol.v, &exact_solve))),
        ("apply_l2_error", num(rel_l2(&sys, &op.lambda, &exact_apply))),
        ("mode_dtn", num(mode)),
        ("mode_dtn_exact", num(lambda_1.powf(s))),
        (
            "mode_dtn_rel_error",
            num((mode - lambda_1.powf(s)).abs() / lambda_1.powf(s)),
        ),
    ];
    let trace = trace_table(
        &sys,
        vec![
            ("solve", sol.v.clone()),
            ("solve_exact", exact_solve),
            ("apply", op.lambda),
            ("apply_exact", exact_apply),
        ],
    );
    Ok(Artifacts {
        solution: Some(VolumeField::from_system(&sys, &sol.u)),
        trace: Some(trace),
        report: Table::key_value(report),
    })
}

fn poincare(res: &Resolved) -> Outcome {
    let sys = domain_system(res)?;
    let c_p = poincare_constant(&sys, res.cfg.solver.eig_tol, &options(res))?;
    let report = vec![
        ("n_free", sys.n_free().to_string()),
        ("tau", num(res.tau)),
        ("gamma", num(res.gamma)),
        ("poincare_constant", num(c_p)),
        ("nu_min", num(1.0 / (c_p * c_p))),
    ];
    Ok(Artifacts {
        report: Table::key_value(report),
        ..Default::default()
    })
}

fn suite_table(rows: &[SuiteRow]) -> Table {
    let mut t = Table::new(&["suite", "function_id", "lhs", "rhs", "margin", "holds"]);
    for r in rows {
        t.push(vec![
            r.suite.clone(),
            r.function_id.clone(),
            num(r.lhs),
            num(r.rhs),
            num(r.margin),
            r.holds.to_string(),
        ]);
    }
    t
}

/// Runs the configured suite; a single violated inequality makes the run
/// fail with [`CliError::InequalityFailed`] after the report is written.
fn inequality_suite(res: &Resolved) -> Outcome {
    let suite = res.cfg.suite.as_ref().expect("checked during validation");
    let (n, seed) = (suite.samples, res.cfg.seed);
    let rows = match suite.kind {
        SuiteKind::Trace => trace_suite(&domain_system(res)?, n, seed, suite.sigma)?,
        SuiteKind::ImprovedTrace => {
            let cfg = SeminormConfig {
                sigma: suite.sigma,
                ..SeminormConfig::with_p(res.cfg.p)?
            };
            improved_trace_suite(&domain_system(res)?, &cfg, n, seed)?
        }
        SuiteKind::HardyWeighted => hardy_weighted_suite(n, seed)?,
        SuiteKind::HardyClassical => hardy_classical_suite(n, seed)?,
    };
    Ok(Artifacts {
        report: suite_table(&rows),
        ..Default::default()
    })
}

/// Number of rows in a suite report that record a violated inequality.
pub fn suite_failures(report: &Table) -> Option<(usize, usize)> {
    let col = report.header.iter().position(|h| h == "holds")?;
    let failed = report.rows.iter().filter(|r| r[col] != "true").count();
    Some((failed, report.rows.len()))
}

/// Base-trace errors of the Poisson solution over a mesh ladder, against
/// the spectral solution for constant order and against the finest mesh
/// otherwise.
fn convergence_study(res: &Resolved) -> Outcome {
    let opts = options(res);
    let ladder = &res.cfg.ladder;
    let oracle_s = constant_order(res);
    let mut solved = Vec::with_capacity(ladder.len());
    for &cells in ladder {
        let sys = system(res, cells + 1, cells + 1)?;
        let data = BaseData::new(res, &sys)?;
        let sol = solve_poisson(&sys, &data.load(&sys), &opts)?;
        solved.push((cells, sys, sol, data));
    }

    let errors: Vec<Option<f64>> = match oracle_s {
        Some(s) => {
            let exact_field = solved[0].3.spectrum(res).solve_power(s);
            solved
                .iter()
                .map(|(_, sys, sol, _)| Some(rel_l2(sys, &sol.v, &sys.interpolate_base(|x| exact_field.eval(x)))))
                .collect()
        }
        None => {
            let (_, fine_sys, fine_sol, _) = solved.last().expect("ladder has at least three meshes");
            let last = solved.len() - 1;
            solved
                .iter()
                .enumerate()
                .map(|(i, (_, sys, sol, _))| {
                    if i == last {
                        return Ok(None);
                    }
                    let coarse = GridFunction::from_base(sys, &sol.v)?;
                    let on_fine = fine_sys.interpolate_base(|x| coarse.eval(x));
                    Ok(Some(rel_l2(fine_sys, &on_fine, &fine_sol.v)))
                })
                .collect::<Result<_, CliError>>()?
        }
    };

    let mut table = Table::new(&["cells", "h", "n_free", "iterations", "error", "rate", "reference"]);
    for (i, (cells, sys, sol, _)) in solved.iter().enumerate() {
        let rate = match (i.checked_sub(1).and_then(|j| errors[j]), errors[i]) {
            (Some(prev), Some(cur)) if prev > 0.0 && cur > 0.0 => {
                let h_ratio = *cells as f64 / ladder[i - 1] as f64;
                num((prev / cur).ln() / h_ratio.ln())
            }
            _ => String::new(),
        };
        table.push(vec![
            cells.to_string(),
            num(1.0 / *cells as f64),
            sys.n_free().to_string(),
            sol.iterations.to_string(),
            errors[i].map_or_else(String::new, num),
            rate,
            errors[i].is_none().to_string(),
        ]);
    }
    let (_, fine_sys, fine_sol, _) = solved.last().expect("non-empty ladder");
    Ok(Artifacts {
        solution: Some(VolumeField::from_system(fine_sys, &fine_sol.u)),
        trace: Some(trace_table(fine_sys, vec![("v", fine_sol.v.clone())])),
        report: table,
    })
}

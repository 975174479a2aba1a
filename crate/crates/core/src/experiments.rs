//! Drivers behind the command-line tool: iteration tables, the energy-norm
//! convergence study and the oracle cross-checks.
//!
//! Levels follow [`MeshHierarchy`]: level `ℓ` has `2^(ℓ+1)` cells per axis.

use std::fmt::Write as _;
use std::ops::Range;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::assembly::{assemble_dense, assemble_rhs, energy_seminorm_error, ManufacturedCase};
use crate::axis::{default_penalty, patch_block};
use crate::basis::Basis1D;
use crate::dense::Cholesky;
use crate::error::{Error, Result};
use crate::krylov::{
    solve, GmresSide, KrylovMethod, Precision, PrecisionCycle, SolveReport, SolverOptions,
};
use crate::mesh::MeshHierarchy;
use crate::multigrid::{
    assemble_level_axes, CoarseSolver, Multigrid, TransferOperators, VCycleConfig,
};
use crate::operator::{KroneckerSumOperator, LinearOperator};
use crate::patch::{separable_patch_matrix, FdmDecomposition, LocalSolverKind};
use crate::scalar::{dot, norm2};
use crate::smoother::{SmootherConfig, SmootherKind};

/// Largest problem the verify checks materialize.
pub const VERIFY_GUARD: usize = 2500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub dim: usize,
    pub degrees: Vec<usize>,
    pub levels: Range<usize>,
    pub smoother: SmootherKind,
    /// `None` selects the per-dimension default.
    pub steps: Option<usize>,
    pub omega: Option<f64>,
    pub local_solver: LocalSolverKind,
    /// Multiplier on the default penalty `k (k + 1)`.
    pub penalty_scale: f64,
    pub krylov: KrylovMethod,
    pub gmres_side: GmresSide,
    pub precision: Precision,
    pub coarse_solver: CoarseSolver,
    pub tol: f64,
    pub max_iter: usize,
    pub format: OutputFormat,
    /// Worker threads for independent table cells.
    pub jobs: usize,
}

impl ExperimentSpec {
    /// Defaults of the reference experiments: CG for the additive smoother,
    /// GMRES for the multiplicative one.
    pub fn new(dim: usize, smoother: SmootherKind, local_solver: LocalSolverKind) -> Self {
        Self {
            dim,
            degrees: vec![2, 3, 4],
            levels: 1..4,
            smoother,
            steps: None,
            omega: None,
            local_solver,
            penalty_scale: 1.0,
            krylov: match smoother {
                SmootherKind::Additive => KrylovMethod::Cg,
                SmootherKind::Multiplicative => KrylovMethod::Gmres,
            },
            gmres_side: GmresSide::default(),
            precision: Precision::default(),
            coarse_solver: CoarseSolver::default(),
            tol: 1e-8,
            max_iter: 200,
            format: OutputFormat::default(),
            jobs: 1,
        }
    }

    pub fn smoother_config(&self) -> SmootherConfig {
        let mut cfg = SmootherConfig::default_for(self.dim, self.smoother, self.local_solver);
        if let Some(s) = self.steps {
            cfg.steps = s;
        }
        if let Some(w) = self.omega {
            cfg.omega = w;
        }
        cfg
    }

    pub fn vcycle_config(&self) -> VCycleConfig {
        let mut cfg = VCycleConfig::new(self.smoother_config());
        cfg.coarse_solver = self.coarse_solver;
        cfg
    }

    pub fn sigma(&self, degree: usize) -> f64 {
        self.penalty_scale * default_penalty(degree)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            gmres_side: self.gmres_side,
        }
    }

    /// Checks every field without allocating any level data.
    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.dim) {
            return Err(Error::InvalidDimension(self.dim));
        }
        if let Some(&k) = self.degrees.iter().find(|&&k| k < 2) {
            return Err(Error::InvalidDegree(k));
        }
        if !(self.penalty_scale > 0.0 && self.penalty_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "penalty scale must be positive, got {}",
                self.penalty_scale
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidConfig("jobs must be positive".into()));
        }
        self.smoother_config().validate(self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub level: usize,
    pub degree: usize,
    pub dofs: usize,
    /// Nonempty patch colors on the level.
    pub colors: usize,
    /// `‖b - A x‖ / ‖b‖` recomputed in double precision.
    pub true_relative_residual: f64,
    pub report: SolveReport,
}

/// Builds the solver stack for one `(level, degree)` and solves the
/// manufactured problem. Returns the discrete solution as well.
pub fn solve_cell(
    spec: &ExperimentSpec,
    level: usize,
    degree: usize,
) -> Result<(Vec<f64>, CellResult)> {
    let hier = MeshHierarchy::new(spec.dim, degree, level + 1)?;
    let basis = Basis1D::new(degree)?;
    let sigma = spec.sigma(degree);
    let mg = Multigrid::new(&hier, &basis, sigma, spec.vcycle_config())?;
    let case = ManufacturedCase::new(spec.dim)?;
    let b = assemble_rhs(&hier, level, &basis, sigma, &case)?;
    let a = mg.operator(level);
    let opts = spec.solver_options();
    let (x, report) = match spec.precision {
        Precision::Double => solve(spec.krylov, a, &mg, &b, &opts),
        Precision::Mixed => {
            let low = mg.cast::<f32>();
            solve(spec.krylov, a, &PrecisionCycle::new(&low), &b, &opts)
        }
    };
    let mut ax = vec![0.0; x.len()];
    a.apply(&x, &mut ax);
    let res: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bn = norm2(&b);
    let colors = mg.finest().smoother.coloring().n_nonempty();
    Ok((
        x,
        CellResult {
            level,
            degree,
            dofs: hier.n_dofs(level),
            colors,
            true_relative_residual: if bn == 0.0 { 0.0 } else { norm2(&res) / bn },
            report,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationsTable {
    pub dim: usize,
    pub degrees: Vec<usize>,
    pub levels: Vec<usize>,
    /// Row-major over `(level, degree)`.
    pub cells: Vec<CellResult>,
}

impl IterationsTable {
    pub fn cell(&self, level: usize, degree: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.level == level && c.degree == degree)
    }

    pub fn all_converged(&self) -> bool {
        self.cells.iter().all(|c| c.report.converged)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,degree,dofs,iterations,fractional,converged,seconds\n");
        for c in &self.cells {
            writeln!(
                s,
                "{},{},{},{},{},{},{:.3}",
                c.level,
                c.degree,
                c.dofs,
                c.report.iterations,
                format_nu(c.report.fractional),
                c.report.converged,
                c.report.wall_time
            )
            .unwrap();
        }
        s
    }

    /// Levels as rows and degrees as columns; non-converged cells show "—".
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| level | cells | colors |");
        for k in &self.degrees {
            write!(s, " k={k} |").unwrap();
        }
        s.push_str("\n|---:|---:|---:|");
        s.push_str(&"---:|".repeat(self.degrees.len()));
        s.push('\n');
        for &level in &self.levels {
            let colors = self
                .cells
                .iter()
                .find(|c| c.level == level)
                .map_or(String::new(), |c| c.colors.to_string());
            write!(s, "| {level} | {} | {colors} |", 1usize << (level + 1)).unwrap();
            for &k in &self.degrees {
                let v = match self.cell(level, k) {
                    Some(c) if c.report.converged => format_nu(c.report.fractional),
                    _ => "—".to_string(),
                };
                write!(s, " {v} |").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Markdown => self.to_markdown(),
        }
    }
}

fn format_nu(nu: f64) -> String {
    format!("{nu:.2}")
}

/// Runs `f` on every item with up to `jobs` threads, preserving order.
fn run_ordered<I: Sync, O: Send>(
    items: &[I],
    jobs: usize,
    f: impl Fn(&I) -> Result<O> + Sync,
) -> Result<Vec<O>> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Vec<Mutex<Option<Result<O>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                *out[i].lock().unwrap() = Some(f(&items[i]));
            });
        }
    });
    out.into_iter()
        .map(|m| m.into_inner().unwrap().expect("every cell visited"))
        .collect()
}

/// One solve per `(level, degree)` cell.
pub fn run_iterations_table(spec: &ExperimentSpec) -> Result<IterationsTable> {
    spec.validate()?;
    let levels: Vec<usize> = spec.levels.clone().collect();
    let pairs: Vec<(usize, usize)> = levels
        .iter()
        .flat_map(|&l| spec.degrees.iter().map(move |&k| (l, k)))
        .collect();
    let cells = run_ordered(&pairs, spec.jobs, |&(l, k)| {
        solve_cell(spec, l, k).map(|(_, c)| c)
    })?;
    Ok(IterationsTable {
        dim: spec.dim,
        degrees: spec.degrees.clone(),
        levels,
        cells,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub degree: usize,
    pub dofs: usize,
    pub error: f64,
    /// `log2(err_{ℓ-1} / err_ℓ)`; absent on the first level of a degree.
    pub rate: Option<f64>,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceStudy {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.report.converged)
    }

    /// Rates observed for `degree`, in level order.
    pub fn rates(&self, degree: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.degree == degree)
            .filter_map(|r| r.rate)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,degree,dofs,error,rate,iterations,converged\n");
        for r in &self.rows {
            let rate = r.rate.map_or(String::new(), |v| format!("{v:.3}"));
            writeln!(
                s,
                "{},{},{},{:.6e},{rate},{},{}",
                r.level, r.degree, r.dofs, r.error, r.report.iterations, r.report.converged
            )
            .unwrap();
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| k | level | dofs | energy error | rate |\n|---:|---:|---:|---:|---:|\n",
        );
        for r in &self.rows {
            let rate = r.rate.map_or("—".to_string(), |v| format!("{v:.3}"));
            writeln!(
                s,
                "| {} | {} | {} | {:.4e} | {rate} |",
                r.degree, r.level, r.dofs, r.error
            )
            .unwrap();
        }
        s
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Markdown => self.to_markdown(),
        }
    }
}

/// Energy errors `|u - u_h|_h` of the multigrid-preconditioned solutions.
pub fn run_convergence_study(spec: &ExperimentSpec) -> Result<ConvergenceStudy> {
    spec.validate()?;
    let case = ManufacturedCase::new(spec.dim)?;
    let pairs: Vec<(usize, usize)> = spec
        .degrees
        .iter()
        .flat_map(|&k| spec.levels.clone().map(move |l| (l, k)))
        .collect();
    let solved = run_ordered(&pairs, spec.jobs, |&(level, k)| {
        let (x, cell) = solve_cell(spec, level, k)?;
        let hier = MeshHierarchy::new(spec.dim, k, level + 1)?;
        let basis = Basis1D::new(k)?;
        let error = energy_seminorm_error(&hier, level, &basis, spec.sigma(k), &x, &case)?;
        Ok((cell, error))
    })?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(solved.len());
    for (cell, error) in solved {
        let rate = rows
            .last()
            .filter(|p| p.degree == cell.degree && p.level + 1 == cell.level)
            .map(|p| (p.error / error).log2());
        rows.push(ConvergenceRow {
            level: cell.level,
            degree: cell.degree,
            dofs: cell.dofs,
            error,
            rate,
            report: cell.report,
        });
    }
    Ok(ConvergenceStudy { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: String, passed: bool, detail: String) {
        self.checks.push(CheckResult {
            name,
            passed,
            detail,
        });
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(s, "{tag} {}: {}", c.name, c.detail).unwrap();
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        writeln!(s, "{} checks, {failed} failed", self.checks.len()).unwrap();
        s
    }
}

/// Oracle cross-checks on every requested `(level, degree)` small enough to
/// materialize: Kronecker operator against quadrature assembly, symmetry,
/// coercivity, FDM exactness on the patch and transfer adjointness.
pub fn run_verify(spec: &ExperimentSpec) -> Result<VerifyReport> {
    spec.validate()?;
    let mut rep = VerifyReport::default();
    for &k in &spec.degrees {
        let sigma = spec.sigma(k);
        let basis = Basis1D::new(k)?;
        let tag = format!("{}D k={k}", spec.dim);
        let fine = spec.levels.clone().filter(|&l| {
            MeshHierarchy::new(spec.dim, k, l + 1).is_ok_and(|h| h.n_dofs(l) <= VERIFY_GUARD)
        });
        let levels: Vec<usize> = fine.collect();
        if levels.is_empty() {
            rep.push(
                format!("{tag} guard"),
                false,
                format!("no requested level has at most {VERIFY_GUARD} DoFs"),
            );
            continue;
        }
        let hier = MeshHierarchy::new(spec.dim, k, levels.last().unwrap() + 1)?;
        for &level in &levels {
            let name = format!(
                "{tag} level {level} ({} cells/axis)",
                hier.cells_per_dim(level)
            );
            let axes = match assemble_level_axes(&hier, level, &basis, sigma) {
                Ok(a) => a,
                Err(e) => {
                    rep.push(format!("{name} coercivity"), false, e.to_string());
                    continue;
                }
            };
            let kron = KroneckerSumOperator::c0ip(&axes).materialize();
            let dense = assemble_dense(&hier, level, &basis, sigma)?;
            let scale = dense.max_abs();
            let diff = kron.sub(&dense).max_abs() / scale;
            rep.push(
                format!("{name} oracle"),
                diff <= 1e-12,
                format!("max relative deviation {diff:.2e} (limit 1e-12)"),
            );
            let asym = kron.asymmetry() / scale;
            rep.push(
                format!("{name} symmetry"),
                asym <= 1e-12,
                format!("relative asymmetry {asym:.2e}"),
            );
            let spd = Cholesky::new(&kron).is_ok();
            rep.push(
                format!("{name} coercivity"),
                spd,
                if spd {
                    format!("positive definite with sigma = {sigma}")
                } else {
                    format!("not positive definite with penalty sigma = {sigma}; increase the penalty scale")
                },
            );
            if level > 0 {
                let t = TransferOperators::<f64>::new(&hier, level, &basis)?;
                let c: Vec<f64> = (0..t.coarse_len())
                    .map(|i| ((i * 29 % 13) as f64 - 6.0) / 7.0)
                    .collect();
                let f: Vec<f64> = (0..t.fine_len())
                    .map(|i| ((i * 17 % 11) as f64 - 5.0) / 3.0)
                    .collect();
                let mut pc = vec![0.0; t.fine_len()];
                let mut rf = vec![0.0; t.coarse_len()];
                t.prolongate(&c, &mut pc);
                t.restrict(&f, &mut rf);
                let gap = (dot(&pc, &f) - dot(&c, &rf)).abs()
                    / (norm2(&pc) * norm2(&f)).max(f64::MIN_POSITIVE);
                rep.push(
                    format!("{name} adjointness"),
                    gap <= 1e-13,
                    format!("relative gap {gap:.2e} (limit 1e-13)"),
                );
            }
        }
        rep.checks
            .push(fdm_check(&tag, spec.dim, k, &basis, sigma)?);
    }
    Ok(rep)
}

fn fdm_check(tag: &str, dim: usize, k: usize, basis: &Basis1D, sigma: f64) -> Result<CheckResult> {
    let name = format!("{tag} FDM exactness");
    let hier = MeshHierarchy::new(dim, k, 2)?;
    let fdm = assemble_level_axes(&hier, 1, basis, sigma).and_then(|axes| {
        let blocks: Vec<_> = axes.iter().map(|a| patch_block(a, k, 2 * k - 1)).collect();
        FdmDecomposition::new(&blocks, sigma).map(|f| (blocks, f))
    });
    let (blocks, fdm) = match fdm {
        Ok(f) => f,
        Err(e) => {
            return Ok(CheckResult {
                name,
                passed: false,
                detail: e.to_string(),
            })
        }
    };
    let at = separable_patch_matrix(&blocks);
    let n = fdm.size();
    let mut worst = 0.0f64;
    let mut y = vec![0.0; n];
    let mut scratch = Vec::new();
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| at.row(i)[j]).collect();
        fdm.apply_inverse(&col, &mut y, &mut scratch);
        for (i, v) in y.iter().enumerate() {
            let e = if i == j { v - 1.0 } else { *v };
            worst = worst.max(e.abs());
        }
    }
    Ok(CheckResult {
        name,
        passed: worst <= 1e-10,
        detail: format!("max deviation from identity {worst:.2e} (limit 1e-10)"),
    })
}

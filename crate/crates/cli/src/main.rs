use std::io::Write;
use std::ops::Range;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use c0ip_mg::experiments::{
    run_convergence_study, run_iterations_table, run_verify, ExperimentSpec, OutputFormat,
};
use c0ip_mg::krylov::{GmresSide, KrylovMethod, Precision};
use c0ip_mg::multigrid::CoarseSolver;
use c0ip_mg::patch::LocalSolverKind;
use c0ip_mg::smoother::SmootherKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Multigrid-preconditioned C0 interior penalty solver for the biharmonic
/// equation on the unit square/cube.
///
/// Level L is the uniform mesh with 2^(L+1) cells per axis.
#[derive(Parser, Debug)]
#[command(name = "c0ip-mg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fractional iteration counts by level and degree.
    Table(Common),
    /// Energy-norm errors and observed rates of the manufactured solution.
    Convergence(Common),
    /// Cross-check the operator, FDM, symmetry and transfers against dense oracles.
    Verify(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Degrees as a list or inclusive range, e.g. "2,3,4" or "2-4".
    #[arg(long, default_value = "2-4")]
    degree: String,
    /// Levels as a list or inclusive range, e.g. "3-6".
    #[arg(long, default_value = "1-3")]
    levels: String,
    #[arg(long, value_enum, default_value_t = SmootherArg::Mvs)]
    smoother: SmootherArg,
    /// Smoothing steps; defaults depend on dimension and smoother.
    #[arg(long)]
    steps: Option<usize>,
    /// Damping; defaults depend on dimension and smoother.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, value_enum, default_value_t = LocalSolverArg::Fdm)]
    local_solver: LocalSolverArg,
    /// Multiplier on the default penalty k(k+1).
    #[arg(long, default_value_t = 1.0)]
    penalty_scale: f64,
    /// Defaults to CG for avs and GMRES for mvs.
    #[arg(long, value_enum)]
    krylov: Option<KrylovArg>,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    gmres_side: SideArg,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Double)]
    precision: PrecisionArg,
    #[arg(long, value_enum, default_value_t = CoarseArg::Smoother)]
    coarse: CoarseArg,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
    format: FormatArg,
    /// Write output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Solve independent cells on this many threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SmootherArg {
    Avs,
    Mvs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LocalSolverArg {
    Exact,
    Fdm,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum KrylovArg {
    Cg,
    Gmres,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum SideArg {
    Left,
    Right,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PrecisionArg {
    Double,
    Mixed,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CoarseArg {
    Smoother,
    Exact,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Markdown,
}

fn parse_list(s: &str) -> anyhow::Result<Vec<usize>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = s.split_once('-') {
        let a: usize = a
            .trim()
            .parse()
            .with_context(|| format!("bad range start in {s:?}"))?;
        let b: usize = b
            .trim()
            .parse()
            .with_context(|| format!("bad range end in {s:?}"))?;
        return Ok((a..=b).collect());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .with_context(|| format!("bad entry {t:?} in {s:?}"))
        })
        .collect()
}

fn contiguous(levels: &[usize]) -> anyhow::Result<Range<usize>> {
    match (levels.first(), levels.last()) {
        (Some(&a), Some(&b)) => {
            if levels.windows(2).any(|w| w[1] != w[0] + 1) {
                bail!("levels must be a contiguous increasing range");
            }
            Ok(a..b + 1)
        }
        _ => Ok(0..0),
    }
}

impl Common {
    fn spec(&self) -> anyhow::Result<ExperimentSpec> {
        let smoother = match self.smoother {
            SmootherArg::Avs => SmootherKind::Additive,
            SmootherArg::Mvs => SmootherKind::Multiplicative,
        };
        let local = match self.local_solver {
            LocalSolverArg::Exact => LocalSolverKind::Exact,
            LocalSolverArg::Fdm => LocalSolverKind::Fdm,
        };
        let mut spec = ExperimentSpec::new(self.dim, smoother, local);
        spec.degrees = parse_list(&self.degree)?;
        spec.levels = contiguous(&parse_list(&self.levels)?)?;
        spec.steps = self.steps;
        spec.omega = self.omega;
        spec.penalty_scale = self.penalty_scale;
        if let Some(k) = self.krylov {
            spec.krylov = match k {
                KrylovArg::Cg => KrylovMethod::Cg,
                KrylovArg::Gmres => KrylovMethod::Gmres,
            };
        }
        spec.gmres_side = match self.gmres_side {
            SideArg::Left => GmresSide::Left,
            SideArg::Right => GmresSide::Right,
        };
        spec.precision = match self.precision {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Mixed => Precision::Mixed,
        };
        spec.coarse_solver = match self.coarse {
            CoarseArg::Smoother => CoarseSolver::Smoother,
            CoarseArg::Exact => CoarseSolver::Exact,
        };
        spec.tol = self.tol;
        spec.max_iter = self.max_iter;
        spec.format = match self.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Markdown => OutputFormat::Markdown,
        };
        spec.jobs = self.jobs;
        spec.validate()?;
        Ok(spec)
    }

    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(path) => {
                std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Table(c) => {
            let spec = c.spec()?;
            let table = run_iterations_table(&spec)?;
            c.emit(&table.render(spec.format))?;
            Ok(table.all_converged())
        }
        Command::Convergence(c) => {
            let spec = c.spec()?;
            let study = run_convergence_study(&spec)?;
            c.emit(&study.render(spec.format))?;
            Ok(study.all_converged())
        }
        Command::Verify(c) => {
            let spec = c.spec()?;
            let report = run_verify(&spec)?;
            c.emit(&report.to_text())?;
            Ok(report.all_passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

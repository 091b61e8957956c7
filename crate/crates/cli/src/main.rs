use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use biwave::config::{Coupling, RunConfig};
use biwave::experiments::{self, STABILITY_CSV_HEADER};
use biwave::problems::ProblemKind;
use biwave::spaces::SpaceKind;
use biwave::sparse::SolverMethod;
use biwave::timestep::{Integrator, STEP_CSV_HEADER};
use clap::{Args, Parser, Subcommand};

/// Finite element solvers for the clamped biharmonic wave equation.
#[derive(Parser, Debug)]
#[command(name = "biwave", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Error table and rates for the manufactured solution over a list of grids.
    Converge(Common),
    /// Sensor trace u_c(t) of the layered-medium example.
    Example2 {
        #[command(flatten)]
        common: Common,
        /// Write the coefficient vector at this time (repeatable).
        #[arg(long = "snapshot")]
        snapshots: Vec<f64>,
    },
    /// Energy drift over a sweep of k / k_max plus one implicit run at k = h.
    Stability {
        #[command(flatten)]
        common: Common,
        /// k / k_max values (repeatable).
        #[arg(long = "ratio")]
        ratios: Vec<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Per-step errors and energies of a single run.
    Run(Common),
    /// Quick invariant checks on small meshes.
    Check(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// key = value file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// morley, dg or c0ip.
    #[arg(long)]
    scheme: Option<SpaceKind>,
    /// explicit or implicit.
    #[arg(long)]
    integrator: Option<Integrator>,
    /// Cells per side (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    /// example1, example2 or free.
    #[arg(long)]
    problem: Option<ProblemKind>,
    /// End time.
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Fixed time step.
    #[arg(long)]
    k: Option<f64>,
    /// k = ratio * h^2.
    #[arg(long)]
    k_ratio: Option<f64>,
    /// k = h.
    #[arg(long)]
    equal_h: bool,
    /// k = T / N.
    #[arg(long = "num-steps")]
    num_steps: Option<usize>,
    #[arg(long)]
    sigma_dg1: Option<f64>,
    #[arg(long)]
    sigma_dg2: Option<f64>,
    #[arg(long)]
    sigma_ip: Option<f64>,
    /// cholesky or cg.
    #[arg(long)]
    solver: Option<SolverMethod>,
    #[arg(long)]
    solver_tol: Option<f64>,
    /// Run explicit steps above 0.95 k_max.
    #[arg(long)]
    cfl_override: bool,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text)?;
        }
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if let Some(i) = self.integrator {
            cfg.integrator = i;
        }
        if !self.n.is_empty() {
            cfg.n = self.n.clone();
        }
        if let Some(p) = self.problem {
            cfg.problem = p;
        }
        if self.t_end.is_some() {
            cfg.t_end = self.t_end;
        }
        let coupling = [
            self.k.map(Coupling::Fixed),
            self.k_ratio.map(Coupling::RatioH2),
            self.equal_h.then_some(Coupling::EqualH),
            self.num_steps.map(Coupling::Steps),
        ];
        let given: Vec<Coupling> = coupling.into_iter().flatten().collect();
        if given.len() > 1 {
            bail!("give at most one of --k, --k-ratio, --equal-h, --num-steps");
        }
        if let Some(c) = given.first() {
            cfg.coupling = Some(*c);
        }
        for (dst, src) in [
            (&mut cfg.sigma_dg1, self.sigma_dg1),
            (&mut cfg.sigma_dg2, self.sigma_dg2),
            (&mut cfg.sigma_ip, self.sigma_ip),
        ] {
            if src.is_some() {
                *dst = src;
            }
        }
        if let Some(s) = self.solver {
            cfg.solver = s;
        }
        if let Some(t) = self.solver_tol {
            cfg.solver_tol = t;
        }
        cfg.cfl_override |= self.cfl_override;
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `dir/stem_suffix.csv` next to `base`.
fn sibling(base: &Path, suffix: &str) -> PathBuf {
    let stem = base.file_stem().map_or("out".into(), |s| s.to_string_lossy().into_owned());
    base.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn converge(common: &Common) -> Result<ExitCode> {
    let cfg = common.resolve(RunConfig::default())?;
    let table = experiments::converge(&cfg)?;
    let mut out = open_out(cfg.out.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn example2(common: &Common, snapshots: &[f64]) -> Result<ExitCode> {
    let mut cfg = common.resolve(RunConfig::example2())?;
    if !snapshots.is_empty() {
        cfg.snapshots = snapshots.to_vec();
    }
    let base = cfg.out.clone();
    if base.is_none() && (cfg.n.len() > 1 || !cfg.snapshots.is_empty()) {
        bail!("--out is required for several grids or snapshots");
    }
    for (trace, snaps) in experiments::example2(&cfg)? {
        let path =
            base.as_ref().map(|b| if cfg.n.len() > 1 { sibling(b, &format!("n{}", trace.n)) } else { b.clone() });
        let mut out = open_out(path.as_deref())?;
        trace.write_csv(&mut out)?;
        out.flush()?;
        for s in snaps {
            let p = sibling(base.as_ref().unwrap(), &format!("n{}_step{}", trace.n, s.step));
            let mut out = open_out(Some(&p))?;
            s.write_csv(&mut out)?;
            out.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn stability(common: &Common, ratios: &[f64], steps: Option<usize>) -> Result<ExitCode> {
    let mut cfg = common.resolve(RunConfig { problem: ProblemKind::Free, n: vec![8], ..Default::default() })?;
    if !ratios.is_empty() {
        cfg.cfl_ratios = ratios.to_vec();
    }
    if let Some(s) = steps {
        cfg.stability_steps = s;
    }
    let rows = experiments::stability(&cfg)?;
    let mut out = open_out(cfg.out.as_deref())?;
    writeln!(out, "{STABILITY_CSV_HEADER}")?;
    for r in &rows {
        r.write_csv_row(&mut out)?;
    }
    out.flush()?;
    Ok(if rows.iter().any(|r| r.blow_up) { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn run(common: &Common) -> Result<ExitCode> {
    let cfg = common.resolve(RunConfig { n: vec![8], ..Default::default() })?;
    if cfg.n.len() != 1 {
        bail!("`run` takes a single --n");
    }
    let problem = cfg.build_problem();
    let mut sim = experiments::simulation(&cfg, &problem, cfg.n[0], problem.exact.is_some(), true)?;
    let mut out = open_out(cfg.out.as_deref())?;
    writeln!(out, "{STEP_CSV_HEADER}")?;
    let result = sim.run(|r, _| r.write_csv_row(&mut out).map_err(Into::into));
    out.flush()?;
    match result {
        Ok(_) => Ok(ExitCode::SUCCESS),
        Err(e @ biwave::Error::Unstable { .. }) => {
            eprintln!("{e}");
            Ok(ExitCode::from(2))
        }
        Err(e) => Err(e.into()),
    }
}

fn check(common: &Common) -> Result<ExitCode> {
    let cfg = common.resolve(RunConfig::default())?;
    let results = experiments::check(&cfg)?;
    let mut out = open_out(cfg.out.as_deref())?;
    for c in &results {
        writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    out.flush()?;
    Ok(if results.iter().all(|c| c.passed) { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    // Usage errors exit with 1; 2 is reserved for a detected instability.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Converge(c) => converge(c),
        Command::Example2 { common, snapshots } => example2(common, snapshots),
        Command::Stability { common, ratios, steps } => stability(common, ratios, *steps),
        Command::Run(c) => run(c),
        Command::Check(c) => check(c),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

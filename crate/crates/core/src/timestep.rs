//! Fully discrete time stepping: the shared first step, the explicit
//! central-difference scheme and the implicit averaged scheme.
//!
//! Steps are computed in increment form: with `D = U^{n+1} - 2 U^n + U^{n-1}`
//! the explicit scheme solves `M D = k^2 (F^n - A U^n)` and the implicit one
//! `(M + k^2/4 A) D = k^2 (F^{n,1/4} - A U^n)`.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use crate::analysis::ErrorEvaluator;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::forms::{assemble_ah, assemble_mass, FormParams, LoadAssembler};
use crate::problems::Problem;
use crate::projection::ritz_project;
use crate::spaces::Space;
use crate::sparse::{lambda_max_generalized, SolverConfig, SparseMatrix, SpdSolver};

/// Explicit runs are refused above this fraction of `k_max`.
pub const CFL_SAFETY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrator {
    Explicit,
    Implicit,
}

impl Integrator {
    pub const ALL: [Integrator; 2] = [Integrator::Explicit, Integrator::Implicit];

    pub fn as_str(&self) -> &'static str {
        match self {
            Integrator::Explicit => "explicit",
            Integrator::Implicit => "implicit",
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "explicit" => Ok(Integrator::Explicit),
            "implicit" => Ok(Integrator::Implicit),
            other => Err(Error::Config(format!("unknown integrator '{other}' (expected explicit or implicit)"))),
        }
    }
}

/// Two consecutive time levels `U^{n-1}`, `U^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub n: usize,
    pub k: f64,
    /// Last second difference, used as the starting guess of iterative solves.
    pub increment: Option<Vec<f64>>,
}

impl TimeState {
    /// State after the first step: `U^0`, `U^1`, `n = 1`.
    pub fn new(u0: Vec<f64>, u1: Vec<f64>, k: f64) -> Result<Self> {
        if u0.len() != u1.len() {
            return Err(Error::DimensionMismatch { expected: u0.len(), got: u1.len() });
        }
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {k}")));
        }
        Ok(TimeState { u_prev: u0, u_curr: u1, n: 1, k, increment: None })
    }

    pub fn t(&self) -> f64 {
        self.n as f64 * self.k
    }

    /// Install `U^{n+1}` computed from increment `d`.
    pub fn shift(&mut self, next: Vec<f64>, d: Vec<f64>) {
        self.u_prev = std::mem::replace(&mut self.u_curr, next);
        self.increment = Some(d);
        self.n += 1;
    }
}

/// Energies of the half step between two levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteEnergy {
    /// `||(U^{n+1} - U^n) / k||_M^2`.
    pub kinetic: f64,
    /// `a_h(U^{n+1/2}, U^{n+1/2})`.
    pub potential: f64,
    /// `k^2/4 a_h(dU, dU)` with `dU = (U^{n+1} - U^n) / k`.
    pub correction: f64,
}

impl DiscreteEnergy {
    pub fn between(m: &SparseMatrix, a: &SparseMatrix, u_old: &[f64], u_new: &[f64], k: f64) -> Self {
        let dv: Vec<f64> = u_new.iter().zip(u_old).map(|(x, y)| (x - y) / k).collect();
        let mid: Vec<f64> = u_new.iter().zip(u_old).map(|(x, y)| 0.5 * (x + y)).collect();
        DiscreteEnergy {
            kinetic: m.bilinear(&dv, &dv),
            potential: a.bilinear(&mid, &mid),
            correction: 0.25 * k * k * a.bilinear(&dv, &dv),
        }
    }

    /// The quantity conserved by the scheme when `f = 0`.
    pub fn conserved(&self, integrator: Integrator) -> f64 {
        match integrator {
            Integrator::Explicit => self.kinetic + self.potential - self.correction,
            Integrator::Implicit => self.kinetic + self.potential,
        }
    }
}

fn check_finite(v: &[f64], step: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Unstable { step })
    }
}

/// `U^1` from `(2/k^2 M + 1/2 A) U^1 = F^{1/2} + 2/k load(v^0) + (2/k^2 M - 1/2 A) U^0`
/// with `F^{1/2} = (F^0 + F^1) / 2`.
pub fn first_step(
    m: &SparseMatrix,
    a: &SparseMatrix,
    u0: &[f64],
    f_half: &[f64],
    load_v0: &[f64],
    k: f64,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    let n = u0.len();
    for len in [m.nrows(), a.nrows(), f_half.len(), load_v0.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    // Solve for the increment U^1 - U^0: (2/k^2 M + A/2) W = F^{1/2} + 2/k load(v^0) - A U^0.
    let lhs = m.lin_comb(2.0 / (k * k), a, 0.5);
    let au = a.mul(u0);
    let rhs: Vec<f64> = (0..n).map(|i| f_half[i] + 2.0 / k * load_v0[i] - au[i]).collect();
    let w = SpdSolver::new(lhs, *cfg, "first-step matrix")?.solve(&rhs)?;
    let u1: Vec<f64> = u0.iter().zip(&w).map(|(x, d)| x + d).collect();
    check_finite(&u1, 1)?;
    Ok(u1)
}

fn advance_with(solver: &SpdSolver, a: &SparseMatrix, state: &TimeState, load: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k2 = state.k * state.k;
    let au = a.mul(&state.u_curr);
    let rhs: Vec<f64> = load.iter().zip(&au).map(|(f, x)| k2 * (f - x)).collect();
    check_finite(&rhs, state.n + 1)?;
    let d = solver.solve_with_guess(&rhs, state.increment.as_deref())?;
    let next: Vec<f64> = (0..d.len()).map(|i| 2.0 * state.u_curr[i] - state.u_prev[i] + d[i]).collect();
    check_finite(&next, state.n + 1)?;
    Ok((next, d))
}

/// Explicit step `M U^{n+1} = 2 M U^n - M U^{n-1} + k^2 (F^n - A U^n)`.
/// `mass` is a solver for `M`. Returns `U^{n+1}` and the increment.
pub fn explicit_step(
    mass: &SpdSolver,
    a: &SparseMatrix,
    state: &TimeState,
    f_n: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    advance_with(mass, a, state, f_n)
}

/// Implicit step `(M + k^2/4 A) U^{n+1} = 2 M U^n - M U^{n-1} - k^2/4 A (2 U^n + U^{n-1}) + k^2 F^{n,1/4}`.
/// `system` is a solver for `M + k^2/4 A`; `f_quarter` is `(F^{n+1} + 2 F^n + F^{n-1}) / 4`.
pub fn implicit_step(
    system: &SpdSolver,
    a: &SparseMatrix,
    state: &TimeState,
    f_quarter: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    advance_with(system, a, state, f_quarter)
}

/// `M + k^2/4 A`.
pub fn implicit_matrix(m: &SparseMatrix, a: &SparseMatrix, k: f64) -> SparseMatrix {
    m.lin_comb(1.0, a, 0.25 * k * k)
}

/// Largest stable explicit step `2 / sqrt(lambda_max(M^{-1} A))`.
pub fn cfl_max_step(m: &SparseMatrix, a: &SparseMatrix, tol: f64, cfg: &SolverConfig) -> Result<f64> {
    let lambda = lambda_max_generalized(a, m, tol, cfg)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("stiffness has no positive eigenvalue (lambda_max = {lambda})")));
    }
    Ok(2.0 / lambda.sqrt())
}

/// Load vectors per time level. Separable loads reuse one spatial vector;
/// the last few levels are kept.
pub struct LoadHistory {
    assembler: LoadAssembler,
    source: Arc<dyn ScalarField>,
    k: f64,
    spatial: Option<Vec<f64>>,
    levels: VecDeque<(usize, Arc<Vec<f64>>)>,
    zero: Arc<Vec<f64>>,
}

impl LoadHistory {
    pub fn new(space: &Space, source: Arc<dyn ScalarField>, k: f64) -> Self {
        let assembler = LoadAssembler::new(space);
        let spatial = match (source.is_zero(), source.time_factor(0.0)) {
            (false, Some(_)) => Some(assembler.assemble(source.as_ref(), 0.0)),
            _ => None,
        };
        LoadHistory { assembler, source, k, spatial, levels: VecDeque::new(), zero: Arc::new(vec![0.0; space.ndof]) }
    }

    /// `F^n = (f(t_n), phi_i)`.
    pub fn at(&mut self, n: usize) -> Arc<Vec<f64>> {
        if self.source.is_zero() {
            return self.zero.clone();
        }
        if let Some((_, v)) = self.levels.iter().find(|(m, _)| *m == n) {
            return v.clone();
        }
        let t = n as f64 * self.k;
        let v = match (&self.spatial, self.source.time_factor(t)) {
            (Some(s), Some(theta)) => s.iter().map(|x| theta * x).collect(),
            _ => self.assembler.assemble(self.source.as_ref(), t),
        };
        let v = Arc::new(v);
        if self.levels.len() == 4 {
            self.levels.pop_front();
        }
        self.levels.push_back((n, v.clone()));
        v
    }

    pub fn is_zero(&self) -> bool {
        self.source.is_zero()
    }
}

/// Settings of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub integrator: Integrator,
    pub k: f64,
    /// Number of steps `N`; the run ends at `t = N k`.
    pub steps: usize,
    pub solver: SolverConfig,
    pub cfl_override: bool,
    /// Relative tolerance of the `k_max` power iteration.
    pub cfl_tol: f64,
    /// Known `k_max`, skipping the eigenvalue estimate.
    pub k_max: Option<f64>,
    pub track_errors: bool,
    pub track_energy: bool,
}

impl RunOptions {
    pub fn new(integrator: Integrator, k: f64, steps: usize) -> Self {
        RunOptions {
            integrator,
            k,
            steps,
            solver: SolverConfig::cholesky(),
            cfl_override: false,
            cfl_tol: 1e-9,
            k_max: None,
            track_errors: true,
            track_energy: true,
        }
    }
}

pub const STEP_CSV_HEADER: &str = "n,t,l2_error,energy_error,E_kinetic,E_potential";

/// Diagnostics of time level `n`. Energies belong to the half step
/// `[t_{n-1}, t_n]` and are absent at `n = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub n: usize,
    pub t: f64,
    pub l2_error: Option<f64>,
    pub energy_error: Option<f64>,
    pub energy: Option<DiscreteEnergy>,
}

impl StepReport {
    pub fn write_csv_row<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.16e}"));
        writeln!(
            out,
            "{},{:.16e},{},{},{},{}",
            self.n,
            self.t,
            opt(self.l2_error),
            opt(self.energy_error),
            opt(self.energy.map(|e| e.kinetic)),
            opt(self.energy.map(|e| e.potential))
        )
    }
}

/// Outcome of a complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub h: f64,
    pub k: f64,
    pub steps: usize,
    pub max_l2_error: Option<f64>,
    pub max_energy_error: Option<f64>,
    /// Conserved quantity of the first half step.
    pub initial_energy: Option<f64>,
    pub final_energy: Option<f64>,
    /// `max_n |E^{n+1/2} - E^{1/2}| / |E^{1/2}|` of the conserved quantity.
    pub max_energy_drift: Option<f64>,
    pub k_max: Option<f64>,
}

/// A trajectory of one scheme on one mesh.
pub struct Simulation {
    space: Space,
    integrator: Integrator,
    opts: RunOptions,
    m: SparseMatrix,
    a: SparseMatrix,
    solver: SpdSolver,
    loads: LoadHistory,
    errors: Option<ErrorEvaluator>,
    state: TimeState,
    k_max: Option<f64>,
    summary: RunSummary,
    pending: VecDeque<StepReport>,
}

impl Simulation {
    /// Assemble the system, compute `U^0 = R_h u^0` and `U^1`.
    pub fn new(space: Space, params: &FormParams, problem: &Problem, opts: RunOptions) -> Result<Simulation> {
        if !(opts.k > 0.0) || !opts.k.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", opts.k)));
        }
        if opts.steps == 0 {
            return Err(Error::InvalidParameter("a run needs at least one step".into()));
        }
        opts.solver.validate()?;
        let params = FormParams { coefficient: problem.coefficient, ..*params };
        let m = assemble_mass(&space);
        let a = assemble_ah(&space, &params)?;
        let k = opts.k;

        let k_max = match (opts.integrator, opts.k_max) {
            (Integrator::Explicit, Some(km)) => Some(km),
            (Integrator::Explicit, None) => Some(cfl_max_step(&m, &a, opts.cfl_tol, &opts.solver)?),
            _ => None,
        };
        if let Some(km) = k_max {
            if k > CFL_SAFETY * km && !opts.cfl_override {
                return Err(Error::CflViolation { k, k_max: km });
            }
        }

        let mut loads = LoadHistory::new(&space, problem.source.clone(), k);
        let u0 = ritz_project(&space, &params, problem.initial_displacement.as_ref(), &opts.solver)?;
        let (f0, f1) = (loads.at(0), loads.at(1));
        let f_half: Vec<f64> = f0.iter().zip(f1.iter()).map(|(a, b)| 0.5 * (a + b)).collect();
        let load_v0 = LoadAssembler::new(&space).assemble(problem.initial_velocity.as_ref(), 0.0);
        let u1 = first_step(&m, &a, &u0, &f_half, &load_v0, k, &opts.solver)?;

        let solver = match opts.integrator {
            Integrator::Explicit => SpdSolver::new(m.clone(), opts.solver, "mass matrix")?,
            Integrator::Implicit => SpdSolver::new(implicit_matrix(&m, &a, k), opts.solver, "implicit matrix")?,
        };
        let errors = match (&problem.exact, opts.track_errors) {
            (Some(ex), true) => Some(ErrorEvaluator::new(&space, &params, ex.clone())?),
            _ => None,
        };
        let summary = RunSummary {
            h: space.mesh.grid_h(),
            k,
            steps: opts.steps,
            max_l2_error: None,
            max_energy_error: None,
            initial_energy: None,
            final_energy: None,
            max_energy_drift: None,
            k_max,
        };
        let mut sim = Simulation {
            space,
            integrator: opts.integrator,
            opts,
            m,
            a,
            solver,
            loads,
            errors,
            state: TimeState::new(u0, u1, k)?,
            k_max,
            summary,
            pending: VecDeque::new(),
        };
        let r0 = sim.report_level(0);
        let r1 = sim.report_level(1);
        sim.pending.extend([r0, r1]);
        Ok(sim)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.m
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn state(&self) -> &TimeState {
        &self.state
    }

    pub fn k_max(&self) -> Option<f64> {
        self.k_max
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn is_finished(&self) -> bool {
        self.state.n >= self.opts.steps && self.pending.is_empty()
    }

    /// Diagnostics for level `n`, which must be the current or previous level.
    fn report_level(&mut self, n: usize) -> StepReport {
        let t = n as f64 * self.state.k;
        let u = if n == self.state.n { &self.state.u_curr } else { &self.state.u_prev };
        let (l2, en) = match &self.errors {
            Some(ev) => {
                let (l2, en) = ev.errors(u, t);
                (Some(l2), Some(en))
            }
            None => (None, None),
        };
        let energy = (n > 0 && self.opts.track_energy)
            .then(|| DiscreteEnergy::between(&self.m, &self.a, &self.state.u_prev, &self.state.u_curr, self.state.k));
        let s = &mut self.summary;
        if let Some(l2) = l2 {
            s.max_l2_error = Some(s.max_l2_error.map_or(l2, |m| m.max(l2)));
        }
        if let Some(en) = en {
            s.max_energy_error = Some(s.max_energy_error.map_or(en, |m| m.max(en)));
        }
        if let Some(e) = energy {
            let c = e.conserved(self.integrator);
            let e0 = *s.initial_energy.get_or_insert(c);
            s.final_energy = Some(c);
            let drift = if e0 != 0.0 { ((c - e0) / e0).abs() } else { c.abs() };
            s.max_energy_drift = Some(s.max_energy_drift.map_or(drift, |d| d.max(drift)));
        }
        StepReport { n, t, l2_error: l2, energy_error: en, energy }
    }

    /// Advance one level; the first two calls return the reports of `U^0` and `U^1`.
    pub fn advance(&mut self) -> Result<Option<StepReport>> {
        if let Some(r) = self.pending.pop_front() {
            return Ok(Some(r));
        }
        if self.state.n >= self.opts.steps {
            return Ok(None);
        }
        let n = self.state.n;
        let load: Vec<f64> = match self.integrator {
            Integrator::Explicit => self.loads.at(n).to_vec(),
            Integrator::Implicit => {
                if self.loads.is_zero() {
                    self.loads.at(n).to_vec()
                } else {
                    let (fp, fc, fn_) = (self.loads.at(n + 1), self.loads.at(n), self.loads.at(n - 1));
                    (0..fc.len()).map(|i| 0.25 * (fp[i] + 2.0 * fc[i] + fn_[i])).collect()
                }
            }
        };
        let (next, d) = advance_with(&self.solver, &self.a, &self.state, &load)?;
        self.state.shift(next, d);
        Ok(Some(self.report_level(self.state.n)))
    }

    /// Run to the end, handing every level (starting at `n = 0`) to `observer`.
    pub fn run<F>(&mut self, mut observer: F) -> Result<RunSummary>
    where
        F: FnMut(&StepReport, &[f64]) -> Result<()>,
    {
        while let Some(r) = self.advance()? {
            let u = if r.n == self.state.n { &self.state.u_curr } else { &self.state.u_prev };
            observer(&r, u)?;
        }
        Ok(self.summary.clone())
    }

    pub fn summary(&self) -> &RunSummary {
        &self.summary
    }
}

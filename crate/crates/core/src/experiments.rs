//! Experiment drivers behind the command-line tool: convergence sweeps,
//! the layered-medium sensor run and CFL/energy stability sweeps.

use std::io::Write;
use std::sync::Arc;

use crate::analysis::{convergence_rates, sensor_weights, EnergyNorm, ErrorRecord, RateTable};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::forms::{assemble_ah, assemble_apw, assemble_bh, assemble_mass, FormParams};
use crate::mesh::{Mesh, Rect};
use crate::problems::{example2_sensor, Problem};
use crate::spaces::{Space, SpaceKind};
use crate::sparse::dot;
use crate::timestep::{cfl_max_step, Integrator, RunOptions, RunSummary, Simulation, StepReport};

/// Mesh and space for `n x n` cells on `domain`.
pub fn build_space(n: usize, domain: Rect, kind: SpaceKind) -> Result<Space> {
    Space::new(Arc::new(Mesh::build_uniform(n, n, domain)?), kind)
}

/// Simulation for one resolution of `cfg`, with step size from the coupling rule.
pub fn simulation(
    cfg: &RunConfig,
    problem: &Problem,
    n: usize,
    track_errors: bool,
    track_energy: bool,
) -> Result<Simulation> {
    let space = build_space(n, problem.domain, cfg.scheme)?;
    let (k, steps) = cfg.effective_coupling(n).resolve(space.mesh.grid_h(), problem.t_end)?;
    let mut opts = RunOptions::new(cfg.integrator, k, steps);
    opts.solver = cfg.solver_config();
    opts.cfl_override = cfg.cfl_override;
    opts.track_errors = track_errors;
    opts.track_energy = track_energy;
    Simulation::new(space, &cfg.form_params(), problem, opts)
}

/// Max-in-time errors of one resolution.
pub fn run_resolution(cfg: &RunConfig, problem: &Problem, n: usize) -> Result<(ErrorRecord, RunSummary)> {
    if problem.exact.is_none() {
        return Err(Error::Config(format!(
            "problem `{}` has no exact solution to measure errors against",
            cfg.problem
        )));
    }
    let mut sim = simulation(cfg, problem, n, true, false)?;
    let s = sim.run(|_, _| Ok(()))?;
    let rec = ErrorRecord {
        h: s.h,
        k: s.k,
        l2_error: s.max_l2_error.unwrap_or(f64::NAN),
        energy_error: s.max_energy_error.unwrap_or(f64::NAN),
        norm: EnergyNorm::for_space(cfg.scheme),
    };
    Ok((rec, s))
}

/// Error table over `cfg.n`. Resolutions run on separate threads; rows come
/// back in the order of decreasing `h`.
pub fn converge(cfg: &RunConfig) -> Result<RateTable> {
    cfg.validate()?;
    if cfg.n.len() < 2 {
        return Err(Error::Config("a convergence study needs at least two resolutions".into()));
    }
    let problem = cfg.build_problem();
    let results: Vec<Result<(ErrorRecord, RunSummary)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .n
            .iter()
            .map(|&n| {
                scope.spawn({
                    let problem = &problem;
                    move || run_resolution(cfg, problem, n)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Unsupported("worker thread panicked".into()))))
            .collect()
    });
    let records = results.into_iter().map(|r| r.map(|(rec, _)| rec)).collect::<Result<Vec<_>>>()?;
    convergence_rates(&records)
}

/// Sensor reading `u_c(t_n)` at every level.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrace {
    pub n: usize,
    pub t: Vec<f64>,
    pub u_c: Vec<f64>,
}

pub const SENSOR_CSV_HEADER: &str = "t,u_c";

impl SensorTrace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{SENSOR_CSV_HEADER}")?;
        for (t, u) in self.t.iter().zip(&self.u_c) {
            writeln!(out, "{t:.16e},{u:.16e}")?;
        }
        Ok(())
    }

    /// Value at `t` by linear interpolation between levels.
    pub fn at(&self, t: f64) -> f64 {
        let i = self.t.partition_point(|&s| s < t);
        if i == 0 {
            return self.u_c[0];
        }
        if i == self.t.len() {
            return *self.u_c.last().unwrap();
        }
        let (t0, t1) = (self.t[i - 1], self.t[i]);
        let lam = (t - t0) / (t1 - t0);
        (1.0 - lam) * self.u_c[i - 1] + lam * self.u_c[i]
    }

    /// `max |self(t) - other(t)|` over the levels of `self`.
    pub fn max_difference(&self, other: &SensorTrace) -> f64 {
        self.t.iter().zip(&self.u_c).map(|(t, u)| (u - other.at(*t)).abs()).fold(0.0, f64::max)
    }
}

/// Coefficient vector at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub coeffs: Vec<f64>,
}

impl Snapshot {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "dof,value")?;
        for (i, v) in self.coeffs.iter().enumerate() {
            writeln!(out, "{i},{v:.16e}")?;
        }
        Ok(())
    }
}

/// Sensor run on an `n x n` grid. Snapshots are taken at the first level
/// with `t_n >= t_s - k/2` for each requested `t_s`.
pub fn sensor_run(cfg: &RunConfig, problem: &Problem, n: usize, region: &Rect) -> Result<(SensorTrace, Vec<Snapshot>)> {
    let mut sim = simulation(cfg, problem, n, false, false)?;
    let weights = sensor_weights(sim.space(), region)?;
    let k = sim.state().k;
    let mut wanted: Vec<f64> = cfg.snapshots.clone();
    wanted.sort_by(f64::total_cmp);
    let mut trace = SensorTrace { n, t: Vec::new(), u_c: Vec::new() };
    let mut snaps = Vec::new();
    sim.run(|r: &StepReport, u: &[f64]| {
        trace.t.push(r.t);
        trace.u_c.push(dot(&weights, u));
        while snaps.len() < wanted.len() && r.t >= wanted[snaps.len()] - 0.5 * k {
            snaps.push(Snapshot { step: r.n, t: r.t, coeffs: u.to_vec() });
        }
        Ok(())
    })?;
    Ok((trace, snaps))
}

/// Sensor traces of the layered-medium example on every grid of `cfg.n`.
pub fn example2(cfg: &RunConfig) -> Result<Vec<(SensorTrace, Vec<Snapshot>)>> {
    cfg.validate()?;
    let problem = cfg.build_problem();
    cfg.n.iter().map(|&n| sensor_run(cfg, &problem, n, &example2_sensor())).collect()
}

/// One line of a stability sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub integrator: Integrator,
    /// `k / k_max` for explicit rows.
    pub ratio: Option<f64>,
    pub k: f64,
    pub steps: usize,
    /// Levels actually computed; smaller than `steps` after a blow-up.
    pub steps_run: usize,
    /// Largest relative change of the scheme's conserved energy.
    pub max_drift: f64,
    /// `max_n (kinetic + potential) / (kinetic + potential)` of the first half step.
    pub energy_growth: f64,
    pub blow_up: bool,
}

pub const STABILITY_CSV_HEADER: &str = "integrator,k_ratio,k,steps,steps_run,max_drift,energy_growth,blow_up";

/// Energy growth treated as a blow-up.
pub const BLOW_UP_GROWTH: f64 = 1e3;

impl StabilityRow {
    pub fn write_csv_row<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "{},{},{:.16e},{},{},{:.16e},{:.16e},{}",
            self.integrator,
            self.ratio.map_or(String::new(), |r| format!("{r:?}")),
            self.k,
            self.steps,
            self.steps_run,
            self.max_drift,
            self.energy_growth,
            self.blow_up
        )
    }
}

/// Run one zero-load trajectory, stopping early once the energy has grown by
/// [`BLOW_UP_GROWTH`].
pub fn energy_trajectory(
    space: Space,
    params: &FormParams,
    problem: &Problem,
    opts: RunOptions,
    ratio: Option<f64>,
) -> Result<StabilityRow> {
    if !problem.source.is_zero() {
        return Err(Error::Config("stability sweeps need a zero load".into()));
    }
    let mut opts = opts;
    opts.track_errors = false;
    opts.track_energy = true;
    let (integrator, k, steps) = (opts.integrator, opts.k, opts.steps);
    let mut sim = Simulation::new(space, params, problem, opts)?;
    let mut first = None;
    let mut growth: f64 = 1.0;
    let mut steps_run = 0;
    let mut blow_up = false;
    loop {
        match sim.advance() {
            Ok(Some(r)) => {
                steps_run = r.n;
                if let Some(e) = r.energy {
                    let total = e.kinetic + e.potential;
                    let e0 = *first.get_or_insert(total);
                    growth = growth.max(total / e0);
                    if !(growth < BLOW_UP_GROWTH) {
                        blow_up = true;
                        break;
                    }
                }
            }
            Ok(None) => break,
            Err(Error::Unstable { step }) => {
                steps_run = step;
                growth = f64::INFINITY;
                blow_up = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let max_drift = sim.summary().max_energy_drift.unwrap_or(0.0);
    Ok(StabilityRow { integrator, ratio, k, steps, steps_run, max_drift, energy_growth: growth, blow_up })
}

/// Explicit runs at `cfg.cfl_ratios * k_max` and one implicit run at `k = h`,
/// all on the first grid of `cfg.n` with `cfg.stability_steps` steps.
pub fn stability(cfg: &RunConfig) -> Result<Vec<StabilityRow>> {
    cfg.validate()?;
    let problem = cfg.build_problem();
    let n = cfg.n[0];
    let params = FormParams { coefficient: problem.coefficient, ..cfg.form_params() };
    let space = build_space(n, problem.domain, cfg.scheme)?;
    let h = space.mesh.grid_h();
    let k_max = cfl_max_step(&assemble_mass(&space), &assemble_ah(&space, &params)?, 1e-10, &cfg.solver_config())?;
    let mut rows = Vec::new();
    for &ratio in &cfg.cfl_ratios {
        let mut opts = RunOptions::new(Integrator::Explicit, ratio * k_max, cfg.stability_steps);
        opts.solver = cfg.solver_config();
        opts.k_max = Some(k_max);
        opts.cfl_override = true;
        rows.push(energy_trajectory(space.clone(), &params, &problem, opts, Some(ratio))?);
    }
    let mut opts = RunOptions::new(Integrator::Implicit, h, cfg.stability_steps);
    opts.solver = cfg.solver_config();
    rows.push(energy_trajectory(space, &params, &problem, opts, None)?);
    Ok(rows)
}

/// Outcome of one built-in invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Quick invariant suite on small meshes of `cfg.scheme`.
pub fn check(cfg: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let params = cfg.form_params();
    let solver = cfg.solver_config();
    let problem = Problem::free_vibration();
    let mut out = Vec::new();
    let mut push = |name, passed, detail: String| out.push(CheckOutcome { name, passed, detail });

    let s4 = build_space(4, problem.domain, cfg.scheme)?;
    let a = assemble_ah(&s4, &params)?;
    let m = assemble_mass(&s4);
    let scale = assemble_apw(&s4, &params.coefficient).max_abs();
    let defect = a.symmetry_defect().max(m.symmetry_defect()) / scale;
    push("symmetric forms", defect <= 1e-13, format!("relative defect {defect:.2e}"));

    let morley = build_space(4, problem.domain, SpaceKind::Morley)?;
    let bh = assemble_bh(&morley, &params.coefficient).max_abs() / assemble_apw(&morley, &params.coefficient).max_abs();
    push("b_h vanishes on Morley", bh <= 1e-12, format!("max |b_h| / max |a_pw| = {bh:.2e}"));

    let mut opts = RunOptions::new(Integrator::Implicit, s4.mesh.grid_h(), 1000);
    opts.solver = solver;
    let r = energy_trajectory(s4.clone(), &params, &problem, opts, None)?;
    push("implicit energy conservation", r.max_drift <= 1e-8, format!("drift {:.2e} over 1000 steps", r.max_drift));

    let k_max = cfl_max_step(&m, &a, 1e-10, &solver)?;
    for (name, ratio) in [("explicit energy conservation", 0.9), ("explicit blow-up beyond k_max", 1.05)] {
        let mut opts = RunOptions::new(Integrator::Explicit, ratio * k_max, if ratio < 1.0 { 1000 } else { 500 });
        opts.solver = solver;
        opts.k_max = Some(k_max);
        opts.cfl_override = true;
        let r = energy_trajectory(s4.clone(), &params, &problem, opts, Some(ratio))?;
        if ratio < 1.0 {
            push(name, r.max_drift <= 1e-8 && !r.blow_up, format!("drift {:.2e} at k = {ratio} k_max", r.max_drift));
        } else {
            push(name, r.blow_up, format!("energy growth {:.2e} after {} steps", r.energy_growth, r.steps_run));
        }
    }

    // The 4 -> 8 ratio is still pre-asymptotic for Morley (about 4.47), so compare 8 and 16.
    let kmax_at = |n: usize| -> Result<f64> {
        let s = build_space(n, problem.domain, cfg.scheme)?;
        cfl_max_step(&assemble_mass(&s), &assemble_ah(&s, &params)?, 1e-10, &solver)
    };
    let ratio = kmax_at(8)? / kmax_at(16)?;
    push("k_max scales like h^2", (3.6..=4.4).contains(&ratio), format!("k_max(8) / k_max(16) = {ratio:.3}"));
    Ok(out)
}

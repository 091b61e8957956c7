//! Flat `key = value` description of an experiment.
//!
//! Unset optional keys fall back to the defaults of the selected problem and
//! integrator, see the `effective_*` accessors.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::forms::FormParams;
use crate::mesh::Rect;
use crate::problems::{Problem, ProblemKind};
use crate::spaces::SpaceKind;
use crate::sparse::{SolverConfig, SolverMethod};
use crate::timestep::Integrator;

/// How the time step follows from the mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Fixed(f64),
    /// `k = r h^2`.
    RatioH2(f64),
    /// `k = h`.
    EqualH,
    /// `k = T / N`.
    Steps(usize),
}

impl Coupling {
    /// Step size and step count for grid spacing `h` and end time `t_end`.
    /// The count is rounded up, so the run may end slightly after `t_end`
    /// unless `k` divides it.
    pub fn resolve(&self, h: f64, t_end: f64) -> Result<(f64, usize)> {
        let k = match *self {
            Coupling::Fixed(k) => k,
            Coupling::RatioH2(r) => r * h * h,
            Coupling::EqualH => h,
            Coupling::Steps(n) => {
                if n == 0 {
                    return Err(Error::Config("step count must be positive".into()));
                }
                return Ok((t_end / n as f64, n));
            }
        };
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Config(format!("time step must be positive, got {k}")));
        }
        let steps = ((t_end / k) - 1e-9).ceil().max(1.0) as usize;
        Ok((k, steps))
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coupling::Fixed(k) => write!(f, "fixed:{k:?}"),
            Coupling::RatioH2(r) => write!(f, "ratio_h2:{r:?}"),
            Coupling::EqualH => write!(f, "equal_h"),
            Coupling::Steps(n) => write!(f, "steps:{n}"),
        }
    }
}

impl FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "equal_h" {
            return Ok(Coupling::EqualH);
        }
        let (tag, val) = s.split_once(':').ok_or_else(|| Error::Config(format!("bad coupling `{s}`")))?;
        match tag.trim() {
            "fixed" => Ok(Coupling::Fixed(parse_f64("coupling", val)?)),
            "ratio_h2" => Ok(Coupling::RatioH2(parse_f64("coupling", val)?)),
            "steps" => Ok(Coupling::Steps(parse_usize("coupling", val)?)),
            _ => Err(Error::Config(format!("unknown coupling `{tag}` (expected fixed, ratio_h2, equal_h or steps)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: SpaceKind,
    pub integrator: Integrator,
    /// Cells per side, one run per entry.
    pub n: Vec<usize>,
    pub problem: ProblemKind,
    pub domain: Option<Rect>,
    pub t_end: Option<f64>,
    pub coupling: Option<Coupling>,
    pub sigma_dg1: Option<f64>,
    pub sigma_dg2: Option<f64>,
    pub sigma_ip: Option<f64>,
    pub solver: SolverMethod,
    pub solver_tol: f64,
    pub cfl_override: bool,
    pub out: Option<PathBuf>,
    /// Times at which full coefficient vectors are written.
    pub snapshots: Vec<f64>,
    /// `k / k_max` values of the stability sweep.
    pub cfl_ratios: Vec<f64>,
    pub stability_steps: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: SpaceKind::Morley,
            integrator: Integrator::Implicit,
            n: vec![4, 8, 16, 32, 64],
            problem: ProblemKind::Example1,
            domain: None,
            t_end: None,
            coupling: None,
            sigma_dg1: None,
            sigma_dg2: None,
            sigma_ip: None,
            solver: SolverMethod::SparseCholesky,
            solver_tol: 1e-12,
            cfl_override: false,
            out: None,
            snapshots: Vec::new(),
            cfl_ratios: vec![0.5, 0.9, 0.99, 1.05],
            stability_steps: 1000,
        }
    }
}

const KEYS: [&str; 18] = [
    "scheme",
    "integrator",
    "n",
    "problem",
    "domain",
    "t_end",
    "coupling",
    "sigma_dg1",
    "sigma_dg2",
    "sigma_ip",
    "solver",
    "solver_tol",
    "cfl_override",
    "out",
    "snapshots",
    "cfl_ratios",
    "stability_steps",
    "k",
];

impl RunConfig {
    /// Defaults of the Example 2 sensor runs.
    pub fn example2() -> Self {
        RunConfig { problem: ProblemKind::Example2, n: vec![50], ..Default::default() }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Apply the keys of `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {}: {m}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scheme" => self.scheme = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "integrator" => self.integrator = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
            "n" => self.n = parse_list(key, value, parse_usize)?,
            "problem" => self.problem = value.parse()?,
            "domain" => {
                let v = parse_list(key, value, parse_f64)?;
                if v.len() != 4 {
                    return Err(Error::Config("domain needs four numbers x0,y0,x1,y1".into()));
                }
                self.domain = Some(Rect::new(v[0], v[1], v[2], v[3]));
            }
            "t_end" => self.t_end = Some(parse_f64(key, value)?),
            "coupling" => self.coupling = Some(value.parse()?),
            "k" => self.coupling = Some(Coupling::Fixed(parse_f64(key, value)?)),
            "sigma_dg1" => self.sigma_dg1 = Some(parse_f64(key, value)?),
            "sigma_dg2" => self.sigma_dg2 = Some(parse_f64(key, value)?),
            "sigma_ip" => self.sigma_ip = Some(parse_f64(key, value)?),
            "solver" => self.solver = value.parse()?,
            "solver_tol" => self.solver_tol = parse_f64(key, value)?,
            "cfl_override" => {
                self.cfl_override =
                    value.parse().map_err(|_| Error::Config(format!("cfl_override: bad bool `{value}`")))?
            }
            "out" => self.out = (!value.is_empty()).then(|| PathBuf::from(value)),
            "snapshots" => self.snapshots = parse_list(key, value, parse_f64)?,
            "cfl_ratios" => self.cfl_ratios = parse_list(key, value, parse_f64)?,
            "stability_steps" => self.stability_steps = parse_usize(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}` (known: {})", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// `key = value` text that parses back to `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        put("scheme", self.scheme.to_string());
        put("integrator", self.integrator.to_string());
        put("n", self.n.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
        put("problem", self.problem.to_string());
        if let Some(d) = self.domain {
            put("domain", list(&[d.x0, d.y0, d.x1, d.y1]));
        }
        if let Some(t) = self.t_end {
            put("t_end", format!("{t:?}"));
        }
        if let Some(c) = self.coupling {
            put("coupling", c.to_string());
        }
        for (k, v) in [("sigma_dg1", self.sigma_dg1), ("sigma_dg2", self.sigma_dg2), ("sigma_ip", self.sigma_ip)] {
            if let Some(v) = v {
                put(k, format!("{v:?}"));
            }
        }
        put("solver", self.solver.as_str().to_string());
        put("solver_tol", format!("{:?}", self.solver_tol));
        put("cfl_override", self.cfl_override.to_string());
        if let Some(o) = &self.out {
            put("out", o.display().to_string());
        }
        put("snapshots", list(&self.snapshots));
        put("cfl_ratios", list(&self.cfl_ratios));
        put("stability_steps", self.stability_steps.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(Error::Config("n must list positive cell counts".into()));
        }
        if !(self.solver_tol > 0.0) {
            return Err(Error::Config(format!("solver_tol must be positive, got {}", self.solver_tol)));
        }
        if let Some(t) = self.t_end {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Config(format!("t_end must be positive, got {t}")));
            }
        }
        self.form_params().validate(self.scheme).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn build_problem(&self) -> Problem {
        let mut p = Problem::new(self.problem);
        if let Some(d) = self.domain {
            p.domain = d;
        }
        if let Some(t) = self.t_end {
            p.t_end = t;
        }
        p
    }

    /// Penalties: `10 / 15 / 10` by default, `20 / 20` for dG in Example 2.
    pub fn form_params(&self) -> FormParams {
        let base = FormParams::default();
        let dg_default = if self.problem == ProblemKind::Example2 { 20.0 } else { base.sigma_dg1 };
        let dg2_default = if self.problem == ProblemKind::Example2 { 20.0 } else { base.sigma_dg2 };
        FormParams {
            sigma_dg1: self.sigma_dg1.unwrap_or(dg_default),
            sigma_dg2: self.sigma_dg2.unwrap_or(dg2_default),
            sigma_ip: self.sigma_ip.unwrap_or(base.sigma_ip),
            ..base
        }
    }

    /// `k = h^2 / 100` (explicit) or `k = h` (implicit) for Example 1 and the
    /// free problem; `N = 12 n` steps for Example 2.
    pub fn effective_coupling(&self, n: usize) -> Coupling {
        self.coupling.unwrap_or(match (self.problem, self.integrator) {
            (ProblemKind::Example2, _) => Coupling::Steps(12 * n),
            (_, Integrator::Explicit) => Coupling::RatioH2(0.01),
            (_, Integrator::Implicit) => Coupling::EqualH,
        })
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig { method: self.solver, tol: self.solver_tol, ..SolverConfig::default() }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.trim().parse().map_err(|_| Error::Config(format!("{key}: bad number `{}`", v.trim())))?;
    if !x.is_finite() {
        return Err(Error::Config(format!("{key}: value must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: bad integer `{}`", v.trim())))
}

fn parse_list<T>(key: &str, v: &str, f: fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| f(key, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_integrator() {
        let mut c = RunConfig::default();
        assert_eq!(c.effective_coupling(8), Coupling::EqualH);
        c.integrator = Integrator::Explicit;
        assert_eq!(c.effective_coupling(8), Coupling::RatioH2(0.01));
        let e2 = RunConfig::example2();
        assert_eq!(e2.effective_coupling(50), Coupling::Steps(600));
        assert_eq!(e2.effective_coupling(100), Coupling::Steps(1200));
        assert_eq!((e2.form_params().sigma_dg1, e2.form_params().sigma_dg2), (20.0, 20.0));
        assert_eq!(c.form_params(), FormParams::default());
    }

    #[test]
    fn coupling_resolution() {
        assert_eq!(Coupling::EqualH.resolve(0.25, 1.0).unwrap(), (0.25, 4));
        let (k, n) = Coupling::RatioH2(0.01).resolve(0.125, 1.0).unwrap();
        assert_eq!(k, 0.01 * 0.125 * 0.125);
        assert_eq!(n, 6400);
        assert_eq!(Coupling::Steps(600).resolve(0.04, 0.03).unwrap(), (0.03 / 600.0, 600));
        assert!(Coupling::Fixed(-1.0).resolve(0.1, 1.0).is_err());
        assert!(Coupling::Steps(0).resolve(0.1, 1.0).is_err());
    }

    #[test]
    fn parses_comments_and_overrides() {
        let c = RunConfig::parse(
            "# sweep\nscheme = c0ip\nintegrator=explicit\nn = 4, 8\nk = 1e-4  # fixed\nsigma_ip = 12\n",
        )
        .unwrap();
        assert_eq!(c.scheme, SpaceKind::C0ip);
        assert_eq!(c.integrator, Integrator::Explicit);
        assert_eq!(c.n, vec![4, 8]);
        assert_eq!(c.coupling, Some(Coupling::Fixed(1e-4)));
        assert_eq!(c.form_params().sigma_ip, 12.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("n = four").is_err());
        assert!(RunConfig::parse("just words").is_err());
        assert!(RunConfig::parse("coupling = warp:2").is_err());
        assert!(RunConfig::parse("n = 0").unwrap().validate().is_err());
        assert!(RunConfig::parse("scheme = dg\nsigma_dg1 = -1").unwrap().validate().is_err());
        let err = RunConfig::parse("\nscheme = hermite").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn round_trip() {
        let c = RunConfig {
            scheme: SpaceKind::Dg,
            integrator: Integrator::Explicit,
            n: vec![3, 7],
            problem: ProblemKind::Example2,
            domain: Some(Rect::new(-1.0, -0.5, 2.0, 0.1)),
            t_end: Some(0.1 + 0.2),
            coupling: Some(Coupling::RatioH2(1.0 / 3.0)),
            sigma_dg1: Some(11.5),
            sigma_dg2: None,
            sigma_ip: Some(7.0),
            solver: SolverMethod::ConjugateGradient,
            solver_tol: 1e-11,
            cfl_override: true,
            out: Some(PathBuf::from("out/run.csv")),
            snapshots: vec![0.01, 0.02],
            cfl_ratios: vec![0.25],
            stability_steps: 10,
        };
        assert_eq!(RunConfig::parse(&c.serialize()).unwrap(), c);
        assert_eq!(RunConfig::parse(&RunConfig::default().serialize()).unwrap(), RunConfig::default());
    }
}

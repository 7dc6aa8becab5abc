use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use hypsgn::BoundaryKind;
use serde::{Deserialize, Serialize};

/// Smallest node count accepted in any direction.
pub const MIN_NODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Reflecting,
}

impl From<Boundary> for BoundaryKind {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Periodic => BoundaryKind::Periodic,
            Boundary::Reflecting => BoundaryKind::Reflecting,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Soliton,
    Manufactured,
    Dingemans,
    HeadOnCollision,
    Riemann,
    Favre,
    WallReflection,
    GaussianObstacle,
    LakeAtRest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub run: RunSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub converge: ConvergeSection,
    #[serde(default)]
    pub bench: BenchSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub scenario: ScenarioName,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Scenario parameters; each one is only meaningful for some scenarios and
/// falls back to the scenario default when absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub amplitude: Option<f64>,
    pub h_inf: Option<f64>,
    pub axis: Option<AxisName>,
    pub level: Option<f64>,
    pub h_left: Option<f64>,
    pub h_right: Option<f64>,
    pub depth: Option<f64>,
    pub period: Option<f64>,
    pub offset: Option<f64>,
    pub epsilon: Option<f64>,
    pub h0: Option<f64>,
    pub x0: Option<f64>,
    pub alpha: Option<f64>,
    pub u0: Option<f64>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub left_amplitude: Option<f64>,
    pub left_center: Option<f64>,
    pub right_amplitude: Option<f64>,
    pub right_center: Option<f64>,
    pub t_star_final: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub dx: Option<f64>,
    pub dy: Option<f64>,
    pub boundary_x: Option<Boundary>,
    pub boundary_y: Option<Boundary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub g: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_start: Option<f64>,
    pub t_final: Option<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub dt_initial: Option<f64>,
    pub dt_max: Option<f64>,
    pub max_steps: Option<usize>,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_start: None,
            t_final: None,
            abs_tol: 1e-6,
            rel_tol: 1e-6,
            dt_initial: None,
            dt_max: None,
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Gauge coordinates; both lists must have the same length. When absent
    /// the scenario's own gauges are used.
    pub gauges_x: Option<Vec<f64>>,
    pub gauges_y: Option<Vec<f64>>,
    pub snapshot_times: Option<Vec<f64>>,
    pub conservation_every: usize,
    /// Writes a cross-section of every snapshot along the grid row nearest
    /// to this `y`.
    pub cross_section_y: Option<f64>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            gauges_x: None,
            gauges_y: None,
            snapshot_times: None,
            conservation_every: 10,
            cross_section_y: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSection {
    /// Cells per refined direction.
    pub resolutions: Option<Vec<usize>>,
    /// Any of `h`, `u`, `v`, `w`, `eta`.
    pub variables: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub nx: Vec<usize>,
    pub ny: Vec<usize>,
    pub repetitions: usize,
    pub warmup: usize,
    pub samples: usize,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            nx: vec![256, 256, 512, 512],
            ny: vec![128, 256, 256, 512],
            repetitions: 50,
            warmup: 5,
            samples: 5,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every value that can be checked without building a grid.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| -> Result<()> {
            if let Some(v) = v {
                ensure!(v > 0.0 && v.is_finite(), "{name} must be positive, got {v}");
            }
            Ok(())
        };
        if let Some(t) = self.run.threads {
            ensure!(t > 0, "threads must be positive");
        }
        for (name, n) in [("grid.nx", self.grid.nx), ("grid.ny", self.grid.ny)] {
            if let Some(n) = n {
                ensure!(n >= MIN_NODES, "{name} must be at least {MIN_NODES}, got {n}");
            }
        }
        positive("grid.dx", self.grid.dx)?;
        positive("grid.dy", self.grid.dy)?;
        positive("physics.g", self.physics.g)?;
        positive("physics.lambda", self.physics.lambda)?;
        positive("time.abs_tol", Some(self.time.abs_tol))?;
        positive("time.rel_tol", Some(self.time.rel_tol))?;
        positive("time.dt_initial", self.time.dt_initial)?;
        positive("time.dt_max", self.time.dt_max)?;
        if let Some(n) = self.time.max_steps {
            ensure!(n > 0, "time.max_steps must be positive");
        }
        if let (Some(t0), Some(t1)) = (self.time.t_start, self.time.t_final) {
            ensure!(t1 > t0, "time.t_final {t1} must exceed time.t_start {t0}");
        }
        for (name, v) in [("time.t_start", self.time.t_start), ("time.t_final", self.time.t_final)] {
            if let Some(v) = v {
                ensure!(v.is_finite(), "{name} must be finite");
            }
        }
        let s = &self.scenario;
        for (name, v) in [
            ("scenario.h_inf", s.h_inf),
            ("scenario.level", s.level),
            ("scenario.h_left", s.h_left),
            ("scenario.h_right", s.h_right),
            ("scenario.depth", s.depth),
            ("scenario.period", s.period),
            ("scenario.h0", s.h0),
            ("scenario.alpha", s.alpha),
            ("scenario.t_star_final", s.t_star_final),
        ] {
            positive(name, v)?;
        }
        if let (Some(a), Some(b)) = (s.x_min, s.x_max) {
            ensure!(b > a, "scenario.x_max {b} must exceed scenario.x_min {a}");
        }
        match (&self.output.gauges_x, &self.output.gauges_y) {
            (Some(x), Some(y)) => ensure!(
                x.len() == y.len(),
                "output.gauges_x has {} entries but output.gauges_y has {}",
                x.len(),
                y.len()
            ),
            (None, None) => {}
            _ => bail!("output.gauges_x and output.gauges_y must be given together"),
        }
        if let Some(ts) = &self.output.snapshot_times {
            ensure!(ts.iter().all(|t| t.is_finite()), "snapshot times must be finite");
        }
        if let Some(r) = &self.converge.resolutions {
            ensure!(r.len() >= 2, "converge.resolutions needs at least two entries");
            ensure!(
                r.windows(2).all(|w| w[1] > w[0]),
                "converge.resolutions must increase"
            );
            ensure!(
                r[0] >= MIN_NODES,
                "converge.resolutions must be at least {MIN_NODES}"
            );
        }
        if let Some(vars) = &self.converge.variables {
            ensure!(!vars.is_empty(), "converge.variables must not be empty");
            for v in vars {
                parse_var(v)?;
            }
        }
        let b = &self.bench;
        ensure!(!b.nx.is_empty(), "bench.nx must not be empty");
        ensure!(
            b.nx.len() == b.ny.len(),
            "bench.nx has {} entries but bench.ny has {}",
            b.nx.len(),
            b.ny.len()
        );
        for (&nx, &ny) in b.nx.iter().zip(&b.ny) {
            ensure!(
                nx >= MIN_NODES && ny >= MIN_NODES,
                "bench rung {nx}x{ny} is below the minimum grid of {MIN_NODES}x{MIN_NODES}"
            );
        }
        ensure!(b.repetitions > 0, "bench.repetitions must be positive");
        ensure!(b.samples > 0, "bench.samples must be positive");
        Ok(())
    }
}

pub fn parse_var(name: &str) -> Result<hypsgn::Var> {
    hypsgn::Var::ALL
        .into_iter()
        .find(|v| v.name() == name)
        .with_context(|| format!("unknown variable '{name}', expected one of h, u, v, w, eta"))
}

/// Thread count: command line, then config, then the `THREADS` environment
/// variable, then all available cores.
pub fn resolve_threads(flag: Option<usize>, config: Option<usize>) -> Result<usize> {
    if let Some(n) = flag.or(config) {
        ensure!(n > 0, "thread count must be positive");
        return Ok(n);
    }
    if let Ok(s) = std::env::var("THREADS") {
        let n: usize = s
            .trim()
            .parse()
            .with_context(|| format!("THREADS must be a positive integer, got '{s}'"))?;
        ensure!(n > 0, "THREADS must be positive");
        return Ok(n);
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

//! Initial conditions, bathymetries, exact solutions and theoretical
//! predictions for the standard test problems.
//!
//! Scenario callbacks are closed-form `f64` functions; [`ScenarioSpec::build`]
//! samples them onto a grid of any [`Real`] scalar.

mod manufactured_sources;

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::{split_mut, state_from_primitives, PhysSetup, StateField};
use crate::num::Real;
use crate::rhs::{add_pointwise, BoundaryKind, RhsContext, SourceTerms};

pub const GRAVITY: f64 = 9.81;
/// Relaxation parameter used unless a scenario says otherwise.
pub const DEFAULT_LAMBDA: f64 = 500.0;

/// `(x, y) -> (h, u, v)`; the auxiliary variables follow from
/// [`init_auxiliary`](crate::model::init_auxiliary).
pub type PrimitiveFn = Arc<dyn Fn(f64, f64) -> [f64; 3] + Send + Sync>;
/// `(t, x, y) -> (h, u, v, w, eta)`.
pub type StateFn = Arc<dyn Fn(f64, f64, f64) -> [f64; 5] + Send + Sync>;
pub type BathymetryFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum InitialCondition {
    /// Water height and velocities; `eta` and `w` are derived discretely.
    Primitive(PrimitiveFn),
    /// All five variables at `t_start`.
    Full(StateFn),
}

#[derive(Clone)]
pub enum SourceSpec {
    /// Evaluated node by node at every call.
    Pointwise(StateFn),
    /// Manufactured-solution sources with gravity `g`, cached per grid.
    Manufactured { g: f64 },
}

#[derive(Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub boundary_x: BoundaryKind,
    pub boundary_y: BoundaryKind,
    pub g: f64,
    pub lambda: f64,
    pub t_start: f64,
    pub t_final: f64,
    pub initial: InitialCondition,
    pub bathymetry: BathymetryFn,
    pub exact: Option<StateFn>,
    pub sources: Option<SourceSpec>,
    pub gauges: Vec<(f64, f64)>,
    pub snapshot_times: Vec<f64>,
}

impl std::fmt::Debug for ScenarioSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScenarioSpec")
            .field("name", &self.name)
            .field("x_range", &self.x_range)
            .field("y_range", &self.y_range)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("boundary_x", &self.boundary_x)
            .field("boundary_y", &self.boundary_y)
            .field("g", &self.g)
            .field("lambda", &self.lambda)
            .field("t_start", &self.t_start)
            .field("t_final", &self.t_final)
            .field("exact", &self.exact.is_some())
            .field("sources", &self.sources.is_some())
            .field("gauges", &self.gauges)
            .finish()
    }
}

/// Grid, right-hand side context and initial state of a scenario.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    pub grid: Grid2D<T>,
    pub ctx: RhsContext<T>,
    pub initial: StateField<T>,
}

struct F64Sources {
    f: StateFn,
}

impl<T: Real> SourceTerms<T> for F64Sources {
    fn eval(&self, t: T, x: T, y: T) -> [T; 5] {
        (self.f)(t.to_f64_lossy(), x.to_f64_lossy(), y.to_f64_lossy()).map(T::of)
    }
}

/// Manufactured sources with the spatial trigonometric factors tabulated once.
struct ManufacturedSources {
    g: f64,
    nx: usize,
    trig: Vec<manufactured_sources::Trig>,
}

impl ManufacturedSources {
    fn new<T: Real>(grid: &Grid2D<T>, g: f64) -> Self {
        let mut trig = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            let y = grid.y(j).to_f64_lossy();
            for i in 0..grid.nx {
                trig.push(manufactured_sources::Trig::new(grid.x(i).to_f64_lossy(), y));
            }
        }
        Self { g, nx: grid.nx, trig }
    }
}

impl<T: Real> SourceTerms<T> for ManufacturedSources {
    fn eval(&self, t: T, x: T, y: T) -> [T; 5] {
        manufactured::sources(t.to_f64_lossy(), x.to_f64_lossy(), y.to_f64_lossy(), self.g).map(T::of)
    }

    fn add_to(&self, t: T, grid: &Grid2D<T>, dq: &mut [T]) {
        if grid.nx != self.nx || grid.len() != self.trig.len() {
            add_pointwise(dq, t, grid, self);
            return;
        }
        let n = self.trig.len();
        let (st, ct) = (2.0 * PI * t.to_f64_lossy()).sin_cos();
        let [ht, ut, vt, wt, et] = split_mut(dq);
        for (k, trig) in self.trig.iter().enumerate().take(n) {
            let s = manufactured_sources::sources_from(trig, st, ct, self.g);
            ht[k] = ht[k] + T::of(s[0]);
            ut[k] = ut[k] + T::of(s[1]);
            vt[k] = vt[k] + T::of(s[2]);
            wt[k] = wt[k] + T::of(s[3]);
            et[k] = et[k] + T::of(s[4]);
        }
    }
}

/// Number of nodes giving spacing `dx` on `range`.
pub fn nodes_for_spacing(range: (f64, f64), dx: f64, boundary: BoundaryKind) -> Result<usize> {
    if !(dx > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing must be positive, got {dx}")));
    }
    let cells = ((range.1 - range.0) / dx).round();
    if !(cells >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "spacing {dx} does not fit [{}, {}]",
            range.0, range.1
        )));
    }
    Ok(match boundary {
        BoundaryKind::Periodic => cells as usize,
        BoundaryKind::Reflecting => cells as usize + 1,
    })
}

impl ScenarioSpec {
    pub fn with_resolution(&self, nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            ..self.clone()
        }
    }

    /// Sets both node counts from a target spacing.
    pub fn with_spacing(&self, dx: f64, dy: f64) -> Result<Self> {
        let nx = nodes_for_spacing(self.x_range, dx, self.boundary_x)?;
        let ny = nodes_for_spacing(self.y_range, dy, self.boundary_y)?;
        Ok(self.with_resolution(nx, ny))
    }

    pub fn with_boundaries(&self, x: BoundaryKind, y: BoundaryKind) -> Self {
        Self {
            boundary_x: x,
            boundary_y: y,
            ..self.clone()
        }
    }

    pub fn grid<T: Real>(&self) -> Result<Grid2D<T>> {
        Grid2D::new(
            (T::of(self.x_range.0), T::of(self.x_range.1)),
            (T::of(self.y_range.0), T::of(self.y_range.1)),
            self.nx,
            self.ny,
            self.boundary_x.is_periodic(),
            self.boundary_y.is_periodic(),
        )
    }

    pub fn build<T: Real>(&self) -> Result<Simulation<T>> {
        if !(self.t_final > self.t_start) {
            return Err(Error::InvalidParameter(format!(
                "final time {} must exceed start time {}",
                self.t_final, self.t_start
            )));
        }
        let grid = self.grid::<T>()?;
        let b = grid.sample(|x, y| T::of((self.bathymetry)(x.to_f64_lossy(), y.to_f64_lossy())));
        let phys = PhysSetup::new(T::of(self.g), T::of(self.lambda), b)?;
        let mut ctx = RhsContext::new(&grid, phys)?;
        match &self.sources {
            Some(SourceSpec::Pointwise(f)) => {
                ctx = ctx.with_sources(Arc::new(F64Sources { f: f.clone() }));
            }
            Some(SourceSpec::Manufactured { g }) => {
                ctx = ctx.with_sources(Arc::new(ManufacturedSources::new(&grid, *g)));
            }
            None => {}
        }
        let initial = match &self.initial {
            InitialCondition::Primitive(f) => {
                let vals = sample_n(&grid, |x, y| f(x, y));
                state_from_primitives(&vals[0], &vals[1], &vals[2], &ctx.phys.b, &ctx.ops)?
            }
            InitialCondition::Full(f) => sample_state(&grid, |x, y| f(self.t_start, x, y))?,
        };
        Ok(Simulation { grid, ctx, initial })
    }

    /// Exact solution sampled on `grid` at time `t`.
    pub fn exact_state<T: Real>(&self, grid: &Grid2D<T>, t: f64) -> Result<StateField<T>> {
        let f = self.exact.as_ref().ok_or_else(|| {
            Error::InvalidParameter(format!("scenario '{}' has no exact solution", self.name))
        })?;
        sample_state(grid, |x, y| f(t, x, y))
    }
}

fn sample_n<T: Real, const N: usize>(grid: &Grid2D<T>, f: impl Fn(f64, f64) -> [f64; N]) -> Vec<Vec<T>> {
    let mut out = vec![Vec::with_capacity(grid.len()); N];
    for j in 0..grid.ny {
        let y = grid.y(j).to_f64_lossy();
        for i in 0..grid.nx {
            let vals = f(grid.x(i).to_f64_lossy(), y);
            for (o, v) in out.iter_mut().zip(vals) {
                o.push(T::of(v));
            }
        }
    }
    out
}

fn sample_state<T: Real>(grid: &Grid2D<T>, f: impl Fn(f64, f64) -> [f64; 5]) -> Result<StateField<T>> {
    let v = sample_n(grid, f);
    StateField::from_fields(&v[0], &v[1], &v[2], &v[3], &v[4], grid.nx, grid.ny)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Solitary wave of the flat-bottom SGN equations travelling along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Soliton {
    pub h_inf: f64,
    pub amplitude: f64,
    pub g: f64,
    pub center: f64,
    /// `+1` or `-1`.
    pub direction: f64,
    /// Wraps the distance to the crest into one period when set.
    pub period: Option<f64>,
}

impl Soliton {
    pub fn new(h_inf: f64, amplitude: f64, g: f64, center: f64, direction: f64) -> Result<Self> {
        if !(h_inf > 0.0) || !(amplitude > 0.0) || !(g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "soliton needs positive h_inf, amplitude and g, got {h_inf}, {amplitude}, {g}"
            )));
        }
        if direction != 1.0 && direction != -1.0 {
            return Err(Error::InvalidParameter(format!(
                "direction must be +1 or -1, got {direction}"
            )));
        }
        Ok(Self {
            h_inf,
            amplitude,
            g,
            center,
            direction,
            period: None,
        })
    }

    pub fn periodic(mut self, period: f64) -> Self {
        self.period = Some(period);
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.amplitude / self.h_inf
    }

    pub fn kappa(&self) -> f64 {
        let e = self.epsilon();
        (3.0 * e / (4.0 * self.h_inf * self.h_inf * (1.0 + e))).sqrt()
    }

    /// Phase speed `C`.
    pub fn speed(&self) -> f64 {
        (self.g * self.h_inf * (1.0 + self.epsilon())).sqrt()
    }

    fn phase(&self, t: f64, s: f64) -> f64 {
        let mut d = s - self.center - self.direction * self.speed() * t;
        if let Some(p) = self.period {
            d -= p * (d / p).round();
        }
        self.kappa() * d
    }

    pub fn h(&self, t: f64, s: f64) -> f64 {
        let sech = 1.0 / self.phase(t, s).cosh();
        self.h_inf * (1.0 + self.epsilon() * sech * sech)
    }

    /// Velocity along the propagation axis.
    pub fn u(&self, t: f64, s: f64) -> f64 {
        self.direction * self.speed() * (1.0 - self.h_inf / self.h(t, s))
    }

    /// `w = -h du/ds`, the SGN value of the auxiliary variable.
    pub fn w(&self, t: f64, s: f64) -> f64 {
        let xi = self.phase(t, s);
        let sech = 1.0 / xi.cosh();
        let hs = -2.0 * self.h_inf * self.epsilon() * self.kappa() * sech * sech * xi.tanh();
        let h = self.h(t, s);
        let us = self.direction * self.speed() * self.h_inf * hs / (h * h);
        -h * us
    }

    /// `(h, u, v, w, eta)` at `(t, x, y)` for propagation along `axis`.
    pub fn state(&self, axis: Axis, t: f64, x: f64, y: f64) -> [f64; 5] {
        let s = match axis {
            Axis::X => x,
            Axis::Y => y,
        };
        let (h, u, w) = (self.h(t, s), self.u(t, s), self.w(t, s));
        match axis {
            Axis::X => [h, u, 0.0, w, h],
            Axis::Y => [h, 0.0, u, w, h],
        }
    }
}

fn flat() -> BathymetryFn {
    Arc::new(|_, _| 0.0)
}

/// Initial-condition and exact-solution callbacks of a solitary wave.
pub fn soliton_1d(soliton: Soliton, axis: Axis) -> (PrimitiveFn, StateFn) {
    let init: PrimitiveFn = Arc::new(move |x, y| {
        let [h, u, v, _, _] = soliton.state(axis, 0.0, x, y);
        [h, u, v]
    });
    let exact: StateFn = Arc::new(move |t, x, y| soliton.state(axis, t, x, y));
    (init, exact)
}

/// Solitary wave on a periodic `[-30, 30]` channel, run for one traversal.
pub fn soliton_convergence(
    h_inf: f64,
    amplitude: f64,
    g: f64,
    lambda: f64,
    axis: Axis,
    n: usize,
) -> Result<ScenarioSpec> {
    let length = 60.0;
    let soliton = Soliton::new(h_inf, amplitude, g, 0.0, 1.0)?.periodic(length);
    let (init, exact) = soliton_1d(soliton, axis);
    let (x_range, y_range, nx, ny) = match axis {
        Axis::X => ((-30.0, 30.0), (0.0, 1.0), n, 4),
        Axis::Y => ((0.0, 1.0), (-30.0, 30.0), 4, n),
    };
    Ok(ScenarioSpec {
        name: "soliton".into(),
        x_range,
        y_range,
        nx,
        ny,
        boundary_x: BoundaryKind::Periodic,
        boundary_y: BoundaryKind::Periodic,
        g,
        lambda,
        t_start: 0.0,
        t_final: length / soliton.speed(),
        initial: InitialCondition::Primitive(init),
        bathymetry: flat(),
        exact: Some(exact),
        sources: None,
        gauges: Vec::new(),
        snapshot_times: Vec::new(),
    })
}

pub mod manufactured {
    //! Closed-form fields of the manufactured solution on `[-1, 1]^2`.

    use std::f64::consts::PI;

    pub fn b(x: f64, y: f64) -> f64 {
        let tp = 2.0 * PI;
        0.08 * ((tp * x).cos() * (tp * y).cos() + 0.5 * (2.0 * tp * x).cos() * (2.0 * tp * y).cos())
    }

    pub fn h(t: f64, x: f64, y: f64) -> f64 {
        let tp = 2.0 * PI;
        2.0 + 0.5 * (tp * x).sin() * (tp * y).sin() * (tp * t).cos() - b(x, y)
    }

    pub fn u(t: f64, x: f64, _y: f64) -> f64 {
        0.3 * (2.0 * PI * x).sin() * (2.0 * PI * t).sin()
    }

    pub fn v(t: f64, _x: f64, y: f64) -> f64 {
        0.3 * (2.0 * PI * y).sin() * (2.0 * PI * t).sin()
    }

    /// `w = -h (u_x + v_y) + (3/2)(u b_x + v b_y)` with exact derivatives.
    pub fn w(t: f64, x: f64, y: f64) -> f64 {
        let tp = 2.0 * PI;
        let st = (tp * t).sin();
        let ux = 0.3 * tp * (tp * x).cos() * st;
        let vy = 0.3 * tp * (tp * y).cos() * st;
        let bx = -0.08 * tp * ((tp * x).sin() * (tp * y).cos() + (2.0 * tp * x).sin() * (2.0 * tp * y).cos());
        let by = -0.08 * tp * ((tp * x).cos() * (tp * y).sin() + (2.0 * tp * x).cos() * (2.0 * tp * y).sin());
        -h(t, x, y) * (ux + vy) + 1.5 * (u(t, x, y) * bx + v(t, x, y) * by)
    }

    pub fn state(t: f64, x: f64, y: f64) -> [f64; 5] {
        let h = h(t, x, y);
        [h, u(t, x, y), v(t, x, y), w(t, x, y), h]
    }

    pub use super::manufactured_sources::{sources, sources_from, Trig};
}

/// Manufactured solution on `[-1, 1]^2` with its source terms.
pub fn manufactured_solution(boundary: BoundaryKind, n: usize, g: f64, lambda: f64) -> ScenarioSpec {
    ScenarioSpec {
        name: "manufactured".into(),
        x_range: (-1.0, 1.0),
        y_range: (-1.0, 1.0),
        nx: n,
        ny: n,
        boundary_x: boundary,
        boundary_y: boundary,
        g,
        lambda,
        t_start: 0.0,
        t_final: 1.0,
        initial: InitialCondition::Full(Arc::new(manufactured::state)),
        bathymetry: Arc::new(manufactured::b),
        exact: Some(Arc::new(manufactured::state)),
        sources: Some(SourceSpec::Manufactured { g }),
        gauges: Vec::new(),
        snapshot_times: Vec::new(),
    }
}

/// Trapezoidal bar of the Dingemans experiment.
pub fn dingemans_bathymetry(x: f64) -> f64 {
    if (11.01..23.04).contains(&x) {
        0.6 * (x - 11.01) / 12.03
    } else if (23.04..27.04).contains(&x) {
        0.6
    } else if (27.04..33.07).contains(&x) {
        0.6 * (33.07 - x) / 6.03
    } else {
        0.0
    }
}

/// Wavenumber solving `omega^2 = g k tanh(k d)` by Newton iteration.
pub fn dispersion_wavenumber(period: f64, depth: f64, g: f64) -> Result<f64> {
    if !(period > 0.0) || !(depth > 0.0) || !(g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dispersion relation needs positive period, depth and g, got {period}, {depth}, {g}"
        )));
    }
    let omega = 2.0 * PI / period;
    // deep-water guess, always on the convex side of the root
    let mut k = (omega * omega / g).max(omega / (g * depth).sqrt());
    for _ in 0..100 {
        let th = (k * depth).tanh();
        let f = g * k * th - omega * omega;
        let df = g * th + g * k * depth * (1.0 - th * th);
        let step = f / df;
        k -= step;
        if step.abs() <= 1e-15 * k {
            break;
        }
    }
    Ok(k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DingemansParams {
    pub depth: f64,
    pub amplitude: f64,
    pub period: f64,
    /// Horizontal shift of the initial wave train.
    pub offset: f64,
    pub gauges: Vec<f64>,
    pub dx: f64,
    pub t_final: f64,
    pub g: f64,
    pub lambda: f64,
}

impl Default for DingemansParams {
    fn default() -> Self {
        Self {
            g: GRAVITY,
            depth: 0.8,
            amplitude: 0.02,
            period: 2.02 * 2f64.sqrt(),
            offset: 0.0,
            gauges: vec![3.04, 9.44, 20.04, 26.04, 30.44, 37.04],
            dx: 0.008,
            t_final: 70.0,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

/// Wave train over a submerged trapezoidal bar on a periodic `[-138, 46]`.
pub fn dingemans(params: &DingemansParams) -> Result<ScenarioSpec> {
    let g = params.g;
    let d = params.depth;
    let a = params.amplitude;
    let k = dispersion_wavenumber(params.period, d, g)?;
    let c = (g / k * (k * d).tanh()).sqrt();
    let (lo, hi) = (-34.5 * PI / k + params.offset, -4.5 * PI / k + params.offset);
    let offset = params.offset;
    let perturbation = move |x: f64| {
        if (lo..=hi).contains(&x) {
            a * (k * (x - offset)).cos()
        } else {
            0.0
        }
    };
    let init: PrimitiveFn = Arc::new(move |x, _| {
        let eta = perturbation(x);
        [d + eta - dingemans_bathymetry(x), c * eta / d, 0.0]
    });
    let spec = ScenarioSpec {
        name: "dingemans".into(),
        x_range: (-138.0, 46.0),
        y_range: (0.0, 1.0),
        nx: 4,
        ny: 4,
        boundary_x: BoundaryKind::Periodic,
        boundary_y: BoundaryKind::Periodic,
        g,
        lambda: params.lambda,
        t_start: 0.0,
        t_final: params.t_final,
        initial: InitialCondition::Primitive(init),
        bathymetry: Arc::new(|x, _| dingemans_bathymetry(x)),
        exact: None,
        sources: None,
        gauges: params.gauges.iter().map(|&x| (x, 0.0)).collect(),
        snapshot_times: Vec::new(),
    };
    let nx = nodes_for_spacing(spec.x_range, params.dx, spec.boundary_x)?;
    Ok(spec.with_resolution(nx, 4))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadOnParams {
    pub h_inf: f64,
    pub right_amplitude: f64,
    pub right_center: f64,
    pub left_amplitude: f64,
    pub left_center: f64,
    pub t_start: f64,
    pub t_final: f64,
    pub dx: f64,
    pub g: f64,
    pub lambda: f64,
}

impl Default for HeadOnParams {
    fn default() -> Self {
        Self {
            g: GRAVITY,
            h_inf: 0.05,
            right_amplitude: 0.01077,
            right_center: 0.4,
            left_amplitude: 0.01195,
            left_center: 1.195,
            t_start: 18.5,
            t_final: 20.5,
            dx: 0.05,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

/// Two counter-propagating solitary waves on a periodic `[-10, 10]`.
///
/// The profiles are superposed as deviations from `h_inf`; the clock starts
/// at `t_start` with both crests at their given centers.
pub fn head_on_collision(params: &HeadOnParams) -> Result<ScenarioSpec> {
    let g = params.g;
    let right = Soliton::new(params.h_inf, params.right_amplitude, g, params.right_center, 1.0)?;
    let left = Soliton::new(params.h_inf, params.left_amplitude, g, params.left_center, -1.0)?;
    let h_inf = params.h_inf;
    let init: PrimitiveFn = Arc::new(move |x, _| {
        [
            right.h(0.0, x) + left.h(0.0, x) - h_inf,
            right.u(0.0, x) + left.u(0.0, x),
            0.0,
        ]
    });
    let spec = ScenarioSpec {
        name: "head_on_collision".into(),
        x_range: (-10.0, 10.0),
        y_range: (0.0, 1.0),
        nx: 4,
        ny: 4,
        boundary_x: BoundaryKind::Periodic,
        boundary_y: BoundaryKind::Periodic,
        g,
        lambda: params.lambda,
        t_start: params.t_start,
        t_final: params.t_final,
        initial: InitialCondition::Primitive(init),
        bathymetry: flat(),
        exact: None,
        sources: None,
        gauges: Vec::new(),
        snapshot_times: Vec::new(),
    };
    let nx = nodes_for_spacing(spec.x_range, params.dx, spec.boundary_x)?;
    Ok(spec.with_resolution(nx, 4))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannPrediction {
    pub h_star: f64,
    pub u_star: f64,
    /// Leading soliton amplitude above the right state.
    pub a_plus: f64,
    /// Leading soliton crest height `h_R + a_plus`.
    pub h_m: f64,
}

/// Intermediate state from the shallow-water Riemann invariants and the
/// leading dispersive-shock soliton amplitude from Whitham modulation theory.
pub fn riemann_predictions(h_l: f64, h_r: f64, g: f64) -> Result<RiemannPrediction> {
    if !(h_l > 0.0) || !(h_r > 0.0) || !(g > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Riemann states must be positive, got h_L = {h_l}, h_R = {h_r}"
        )));
    }
    let h_star = (h_l.sqrt() + h_r.sqrt()).powi(2) / 4.0;
    let u_star = 2.0 * ((g * h_star).sqrt() - (g * h_r).sqrt());
    let d0 = (h_l - h_r).abs();
    let a_plus = d0 - d0 * d0 / 12.0;
    Ok(RiemannPrediction {
        h_star,
        u_star,
        a_plus,
        h_m: h_r + a_plus,
    })
}

/// Smoothed dam break `h_R + (h_L - h_R)(1 - tanh(x/2))/2` on `[-600, 600]`
/// with walls at both ends.
pub fn riemann_setup(h_l: f64, h_r: f64, dx: f64) -> Result<ScenarioSpec> {
    riemann_predictions(h_l, h_r, GRAVITY)?;
    let init: PrimitiveFn = Arc::new(move |x, _| [h_r + (h_l - h_r) / 2.0 * (1.0 - (x / 2.0).tanh()), 0.0, 0.0]);
    let spec = ScenarioSpec {
        name: "riemann".into(),
        x_range: (-600.0, 600.0),
        y_range: (0.0, 1.0),
        nx: 4,
        ny: 4,
        boundary_x: BoundaryKind::Reflecting,
        boundary_y: BoundaryKind::Periodic,
        g: GRAVITY,
        lambda: DEFAULT_LAMBDA,
        t_start: 0.0,
        t_final: 47.434,
        initial: InitialCondition::Primitive(init),
        bathymetry: flat(),
        exact: None,
        sources: None,
        gauges: Vec::new(),
        snapshot_times: Vec::new(),
    };
    let nx = nodes_for_spacing(spec.x_range, dx, spec.boundary_x)?;
    Ok(spec.with_resolution(nx, 4))
}

/// Bore Froude number `sqrt((1 + eps)(1 + eps/2))`.
pub fn froude_number(epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "nonlinearity must be non-negative, got {epsilon}"
        )));
    }
    Ok(((1.0 + epsilon) * (1.0 + epsilon / 2.0)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FavreParams {
    pub epsilon: f64,
    pub h0: f64,
    pub x0: f64,
    pub alpha: f64,
    pub u0: f64,
    pub x_range: (f64, f64),
    pub dx: f64,
    pub t_final: f64,
    pub g: f64,
    pub lambda: f64,
}

impl Default for FavreParams {
    fn default() -> Self {
        Self {
            g: GRAVITY,
            epsilon: 0.1,
            h0: 0.2,
            x0: 0.0,
            alpha: 1.0,
            u0: 0.0,
            x_range: (-50.0, 50.0),
            dx: 0.05,
            t_final: 10.0,
            lambda: DEFAULT_LAMBDA,
        }
    }
}

/// Undular bore: a tanh transition from `h0 + eps h0` on the left to `h0`,
/// with the velocity jump from the Rankine-Hugoniot relations.
pub fn favre_setup(params: &FavreParams) -> Result<ScenarioSpec> {
    let FavreParams {
        epsilon,
        h0,
        x0,
        alpha,
        u0,
        ..
    } = *params;
    froude_number(epsilon)?;
    if !(h0 > 0.0) || !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Favre setup needs positive h0 and alpha, got {h0}, {alpha}"
        )));
    }
    let g = params.g;
    let jump_h = epsilon * h0;
    let h1 = h0 + jump_h;
    let jump_u = (g * (h1 + h0) / (2.0 * h0 * h1)).sqrt() * jump_h;
    let init: PrimitiveFn = Arc::new(move |x, _| {
        let s = 1.0 - ((x - x0) / alpha).tanh();
        [h0 + jump_h / 2.0 * s, u0 + jump_u / 2.0 * s, 0.0]
    });
    let spec = ScenarioSpec {
        name: "favre".into(),
        x_range: params.x_range,
        y_range: (0.0, 1.0),
        nx: 4,
        ny: 4,
        boundary_x: BoundaryKind::Periodic,
        boundary_y: BoundaryKind::Periodic,
        g,
        lambda: params.lambda,
        t_start: 0.0,
        t_final: params.t_final,
        initial: InitialCondition::Primitive(init),
        bathymetry: flat(),
        exact: None,
        sources: None,
        gauges: Vec::new(),
        snapshot_times: Vec::new(),
    };
    let nx = nodes_for_spacing(spec.x_range, params.dx, spec.boundary_x)?;
    Ok(spec.with_resolution(nx, 4))
}

/// Physical time of dimensionless time `t* = t sqrt(g / h_inf)`.
pub fn dimensional_time(t_star: f64, h_inf: f64, g: f64) -> f64 {
    t_star * (h_inf / g).sqrt()
}

/// Snapshot times `t*` used for the two standard wall-reflection amplitudes.
pub fn wall_reflection_snapshots(amplitude: f64) -> Vec<f64> {
    if (amplitude - 0.65).abs() < 1e-12 {
        vec![0.0, 28.0, 38.0, 42.0, 70.0]
    } else {
        vec![24.0, 45.0, 48.0, 53.0, 90.0]
    }
}

/// Solitary wave centered at `x = -50` running into a wall at `x = 0`.
/// Snapshot times are physical.
pub fn wall_reflection(amplitude: f64, g: f64, dx: f64, t_star_final: f64) -> Result<ScenarioSpec> {
    let h_inf = 1.0;
    let soliton = Soliton::new(h_inf, amplitude, g, -50.0, 1.0)?;
    let (init, _) = soliton_1d(soliton, Axis::X);
    let spec = ScenarioSpec {
        name: "wall_reflection".into(),
        x_range: (-100.0, 0.0),
        y_range: (0.0, 1.0),
        nx: 4,
        ny: 4,
        boundary_x: BoundaryKind::Reflecting,
        boundary_y: BoundaryKind::Periodic,
        g,
        lambda: DEFAULT_LAMBDA,
        t_start: 0.0,
        t_final: dimensional_time(t_star_final, h_inf, g),
        initial: InitialCondition::Primitive(init),
        bathymetry: flat(),
        exact: None,
        sources: None,
        gauges: vec![(0.0, 0.0), (-50.0, 0.0)],
        snapshot_times: wall_reflection_snapshots(amplitude)
            .into_iter()
            .filter(|&ts| ts <= t_star_final)
            .map(|ts| dimensional_time(ts, h_inf, g))
            .collect(),
    };
    let nx = nodes_for_spacing(spec.x_range, dx, spec.boundary_x)?;
    Ok(spec.with_resolution(nx, 4))
}

/// `0.1 exp(-(x^2 + y^2)/2)`.
pub fn gaussian_bathymetry(x: f64, y: f64) -> f64 {
    0.1 * (-(x * x + y * y) / 2.0).exp()
}

/// Solitary wave front over a Gaussian bump on `[-5, 35] x [-10, 10]`.
///
/// The still-water surface sits at `h + b = h_inf`; the soliton is constant
/// in `y` and centered at `x = -3`.
pub fn gaussian_obstacle(dx: f64, boundary: BoundaryKind, g: f64) -> Result<ScenarioSpec> {
    let h_inf = 0.2;
    let soliton = Soliton::new(h_inf, 0.0365, g, -3.0, 1.0)?;
    let init: PrimitiveFn = Arc::new(move |x, y| {
        [soliton.h(0.0, x) - gaussian_bathymetry(x, y), soliton.u(0.0, x), 0.0]
    });
    let spec = ScenarioSpec {
        name: "gaussian_obstacle".into(),
        x_range: (-5.0, 35.0),
        y_range: (-10.0, 10.0),
        nx: 4,
        ny: 4,
        boundary_x: boundary,
        boundary_y: boundary,
        g,
        lambda: DEFAULT_LAMBDA,
        t_start: 0.0,
        t_final: 12.0,
        initial: InitialCondition::Primitive(init),
        bathymetry: Arc::new(gaussian_bathymetry),
        exact: None,
        sources: None,
        gauges: Vec::new(),
        snapshot_times: vec![12.0],
    };
    spec.with_spacing(dx, dx)
}

/// Still water with a flat surface at `level` over the Gaussian bump.
pub fn lake_at_rest(level: f64, n: usize, boundary: BoundaryKind) -> ScenarioSpec {
    ScenarioSpec {
        name: "lake_at_rest".into(),
        x_range: (-5.0, 5.0),
        y_range: (-5.0, 5.0),
        nx: n,
        ny: n,
        boundary_x: boundary,
        boundary_y: boundary,
        g: GRAVITY,
        lambda: DEFAULT_LAMBDA,
        t_start: 0.0,
        t_final: 1.0,
        initial: InitialCondition::Primitive(Arc::new(move |x, y| {
            [level - gaussian_bathymetry(x, y), 0.0, 0.0]
        })),
        bathymetry: Arc::new(gaussian_bathymetry),
        exact: Some(Arc::new(move |_, x, y| {
            let h = level - gaussian_bathymetry(x, y);
            [h, 0.0, 0.0, 0.0, h]
        })),
        sources: None,
        gauges: Vec::new(),
        snapshot_times: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn soliton_crest_and_speed() {
        let s = Soliton::new(1.0, 0.1, 9.81, 0.0, 1.0).unwrap();
        assert_relative_eq!(s.speed(), 10.791f64.sqrt(), epsilon = 1e-14);
        assert!((s.speed() - 3.28497).abs() < 1e-5);
        assert_relative_eq!(s.h(0.0, 0.0), 1.1, epsilon = 1e-15);
        let t = 2.0;
        assert_relative_eq!(s.h(t, s.speed() * t), 1.1, epsilon = 1e-14);
        assert!(s.u(0.0, 100.0).abs() < 1e-10);
        assert!((s.h(0.0, 100.0) - 1.0).abs() < 1e-10);
        assert!(Soliton::new(0.0, 0.1, 9.81, 0.0, 1.0).is_err());
        assert!(Soliton::new(1.0, -0.1, 9.81, 0.0, 1.0).is_err());
    }

    #[test]
    fn soliton_w_matches_finite_difference() {
        let s = Soliton::new(1.0, 0.2, 9.81, 0.0, -1.0).unwrap();
        let e = 1e-6;
        for x in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let ux = (s.u(0.0, x + e) - s.u(0.0, x - e)) / (2.0 * e);
            assert_relative_eq!(s.w(0.0, x), -s.h(0.0, x) * ux, epsilon = 1e-8);
        }
    }

    #[test]
    fn soliton_periodic_wrap() {
        let s = Soliton::new(1.0, 0.2, 9.81, 0.0, 1.0).unwrap().periodic(60.0);
        let t = 60.0 / s.speed();
        for x in [-29.0, -3.0, 0.0, 5.5] {
            assert_relative_eq!(s.h(t, x), s.h(0.0, x), epsilon = 1e-12);
        }
    }

    #[test]
    fn manufactured_examples() {
        assert_eq!(manufactured::u(0.0, 0.3, 0.4), 0.0);
        assert_eq!(manufactured::v(0.0, 0.3, 0.4), 0.0);
        assert_relative_eq!(manufactured::b(0.25, 0.25), 0.04, epsilon = 1e-15);
        assert_relative_eq!(manufactured::h(0.0, 0.25, 0.25), 2.46, epsilon = 1e-14);
    }

    /// Residuals of the continuous equations by central differences in t, x, y.
    fn fd_sources(t: f64, x: f64, y: f64, g: f64, lambda: f64) -> [f64; 5] {
        use manufactured as m;
        let e = 1e-5;
        let d = |f: &dyn Fn(f64, f64, f64) -> f64, k: usize| {
            let mut p = [t, x, y];
            let mut q = [t, x, y];
            p[k] += e;
            q[k] -= e;
            (f(p[0], p[1], p[2]) - f(q[0], q[1], q[2])) / (2.0 * e)
        };
        let eta = |t, x, y| m::h(t, x, y);
        let p = |t, x, y| {
            let r = eta(t, x, y) / m::h(t, x, y);
            lambda / 3.0 * r * (1.0 - r)
        };
        let bt = |_t: f64, x: f64, y: f64| m::b(x, y);
        let (h, u, v, w) = (m::h(t, x, y), m::u(t, x, y), m::v(t, x, y), m::w(t, x, y));
        let r_h = d(&m::h, 0) + d(&|t, x, y| m::h(t, x, y) * m::u(t, x, y), 1)
            + d(&|t, x, y| m::h(t, x, y) * m::v(t, x, y), 2);
        let fric = g * h + 1.5 * h / eta(t, x, y) * p(t, x, y);
        let r_hu = d(&|t, x, y| m::h(t, x, y) * m::u(t, x, y), 0)
            + d(
                &|t, x, y| {
                    let (h, u) = (m::h(t, x, y), m::u(t, x, y));
                    h * u * u + g * h * h / 2.0 + h * p(t, x, y)
                },
                1,
            )
            + d(&|t, x, y| m::h(t, x, y) * m::u(t, x, y) * m::v(t, x, y), 2)
            + fric * d(&bt, 1);
        let r_hv = d(&|t, x, y| m::h(t, x, y) * m::v(t, x, y), 0)
            + d(&|t, x, y| m::h(t, x, y) * m::u(t, x, y) * m::v(t, x, y), 1)
            + d(
                &|t, x, y| {
                    let (h, v) = (m::h(t, x, y), m::v(t, x, y));
                    h * v * v + g * h * h / 2.0 + h * p(t, x, y)
                },
                2,
            )
            + fric * d(&bt, 2);
        let r_hw = d(&|t, x, y| m::h(t, x, y) * m::w(t, x, y), 0)
            + d(&|t, x, y| m::h(t, x, y) * m::w(t, x, y) * m::u(t, x, y), 1)
            + d(&|t, x, y| m::h(t, x, y) * m::w(t, x, y) * m::v(t, x, y), 2)
            - lambda * (1.0 - eta(t, x, y) / h);
        let r_heta = d(&|t, x, y| m::h(t, x, y) * m::h(t, x, y), 0)
            + d(&|t, x, y| m::h(t, x, y).powi(2) * m::u(t, x, y), 1)
            + d(&|t, x, y| m::h(t, x, y).powi(2) * m::v(t, x, y), 2)
            + 1.5 * h * (u * d(&bt, 1) + v * d(&bt, 2))
            - h * w;
        [
            r_h,
            (r_hu - u * r_h) / h,
            (r_hv - v * r_h) / h,
            (r_hw - w * r_h) / h,
            (r_heta - h * r_h) / h,
        ]
    }

    #[test]
    fn manufactured_sources_match_finite_differences() {
        let g = 9.81;
        for &(t, x, y) in &[(0.0, 0.1, 0.2), (0.3, -0.45, 0.7), (0.77, 0.9, -0.15), (1.0, -0.6, -0.8)] {
            let exact = manufactured::sources(t, x, y, g);
            let fd = fd_sources(t, x, y, g, 500.0);
            for k in 0..5 {
                let scale = 1.0 + exact[k].abs();
                assert!(
                    (exact[k] - fd[k]).abs() < 1e-6 * scale,
                    "component {k} at ({t}, {x}, {y}): {} vs {}",
                    exact[k],
                    fd[k]
                );
            }
        }
    }

    #[test]
    fn manufactured_u_source_at_t0() {
        // at t = 0: u = v = 0, h_t = 0, so s_u = u_t + g (h + b)_x
        let g = 9.81;
        for &(x, y) in &[(0.1, 0.2), (-0.35, 0.6), (0.8, -0.9)] {
            let expected = 0.6 * PI * (2.0 * PI * x).sin()
                + g * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).sin();
            assert_relative_eq!(manufactured::sources(0.0, x, y, g)[1], expected, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn dingemans_bathymetry_values() {
        assert_eq!(dingemans_bathymetry(25.0), 0.6);
        assert_eq!(dingemans_bathymetry(11.01), 0.0);
        assert_relative_eq!(dingemans_bathymetry(30.0), 0.6 * 3.07 / 6.03, epsilon = 1e-15);
        assert_relative_eq!(dingemans_bathymetry(30.0), 0.30547, epsilon = 1e-5);
        assert_eq!(dingemans_bathymetry(-100.0), 0.0);
        assert_eq!(dingemans_bathymetry(40.0), 0.0);
        for bp in [11.01, 23.04, 27.04, 33.07] {
            let e = 1e-13;
            assert!((dingemans_bathymetry(bp - e) - dingemans_bathymetry(bp + e)).abs() <= 1e-12);
        }
    }

    #[test]
    fn dispersion_relation() {
        let k = dispersion_wavenumber(2.02 * 2f64.sqrt(), 0.8, 9.81).unwrap();
        assert_relative_eq!(k, 0.8406220896381442, epsilon = 1e-12);
        let k = dispersion_wavenumber(1.0, 100.0, 9.81).unwrap();
        assert_relative_eq!(k, (2.0 * PI).powi(2) / 9.81, max_relative = 1e-12);
    }

    #[test]
    fn riemann_examples() {
        let p = riemann_predictions(1.8, 1.0, 9.81).unwrap();
        assert_relative_eq!(p.h_star, 1.3708203932499369, epsilon = 1e-12);
        assert_relative_eq!(p.a_plus, 0.8 - 0.64 / 12.0, epsilon = 1e-15);
        assert!((p.a_plus - 0.74667).abs() < 1e-5);
        assert!((p.h_m - 1.74667).abs() < 1e-5);
        assert!(p.u_star > 0.0);
        assert!(riemann_predictions(0.0, 1.0, 9.81).is_err());
        let spec = riemann_setup(1.8, 1.0, 0.6).unwrap();
        let InitialCondition::Primitive(f) = &spec.initial else { panic!() };
        assert_relative_eq!(f(0.0, 0.0)[0], 1.4, epsilon = 1e-15);
        assert_eq!(spec.nx, 2001);
    }

    #[test]
    fn froude_examples() {
        assert_eq!(froude_number(0.0).unwrap(), 1.0);
        assert_relative_eq!(froude_number(0.2).unwrap(), 1.32f64.sqrt(), epsilon = 1e-15);
        assert!((froude_number(0.2).unwrap() - 1.14891).abs() < 1e-5);
        assert!(froude_number(-0.1).is_err());
        let spec = favre_setup(&FavreParams::default()).unwrap();
        let InitialCondition::Primitive(f) = &spec.initial else { panic!() };
        assert_relative_eq!(f(0.0, 0.0)[0], 0.2 + 0.01, epsilon = 1e-15);
        let bad = FavreParams {
            alpha: 0.0,
            ..FavreParams::default()
        };
        assert!(favre_setup(&bad).is_err());
    }

    #[test]
    fn gaussian_examples() {
        assert_eq!(gaussian_bathymetry(0.0, 0.0), 0.1);
        assert!((gaussian_bathymetry(1.0, 1.0) - 0.036788).abs() < 1e-6);
        let spec = gaussian_obstacle(0.2, BoundaryKind::Periodic, 9.81).unwrap();
        assert_eq!((spec.nx, spec.ny), (200, 100));
        let InitialCondition::Primitive(f) = &spec.initial else { panic!() };
        let [h, ..] = f(30.0, 9.0);
        assert!((h + gaussian_bathymetry(30.0, 9.0) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn head_on_examples() {
        let spec = head_on_collision(&HeadOnParams::default()).unwrap();
        assert_eq!(spec.t_start, 18.5);
        assert_eq!(spec.nx, 400);
        let InitialCondition::Primitive(f) = &spec.initial else { panic!() };
        assert!(f(0.4, 0.0)[1] > 0.0);
        assert!(f(1.195, 0.0)[1] < 0.0);
        assert!((f(-9.0, 0.0)[0] - 0.05).abs() < 1e-12);
        assert!((f(0.4, 0.0)[0] - 0.05 - 0.01077).abs() < 1e-4);
    }

    #[test]
    fn wall_reflection_times() {
        let spec = wall_reflection(0.075, 9.81, 0.2, 90.0).unwrap();
        assert_eq!(spec.nx, 501);
        assert_eq!(spec.snapshot_times.len(), 5);
        assert_relative_eq!(spec.t_final, 90.0 / 9.81f64.sqrt(), epsilon = 1e-12);
        assert_eq!(dimensional_time(0.0, 1.0, 9.81), 0.0);
        assert_eq!(wall_reflection_snapshots(0.65), vec![0.0, 28.0, 38.0, 42.0, 70.0]);
        assert!(wall_reflection(-1.0, 9.81, 0.2, 90.0).is_err());
    }

    #[test]
    fn initial_state_is_sgn_consistent() {
        let spec = gaussian_obstacle(0.5, BoundaryKind::Reflecting, 9.81).unwrap();
        let sim = spec.build::<f64>().unwrap();
        let s = &sim.initial;
        assert_eq!(s.eta(), s.h());
        // w recomputed independently from the one-sided/central differences
        let (nx, ny) = (sim.grid.nx, sim.grid.ny);
        let (dx, dy) = (sim.grid.dx, sim.grid.dy);
        let b = &sim.ctx.phys.b;
        let diff = |f: &[f64], i: usize, j: usize, along_x: bool| {
            let (n, d) = if along_x { (nx, dx) } else { (ny, dy) };
            let k = if along_x { i } else { j };
            let at = |m: usize| if along_x { f[j * nx + m] } else { f[m * nx + i] };
            if k == 0 {
                (at(1) - at(0)) / d
            } else if k == n - 1 {
                (at(n - 1) - at(n - 2)) / d
            } else {
                (at(k + 1) - at(k - 1)) / (2.0 * d)
            }
        };
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let w = -s.h()[k] * (diff(s.u(), i, j, true) + diff(s.v(), i, j, false))
                    + 1.5 * (s.u()[k] * diff(b, i, j, true) + s.v()[k] * diff(b, i, j, false));
                assert!((w - s.w()[k]).abs() < 1e-12, "({i}, {j})");
            }
        }
    }

    #[test]
    fn spacing_to_nodes() {
        assert_eq!(nodes_for_spacing((-30.0, 30.0), 0.1, BoundaryKind::Periodic).unwrap(), 600);
        assert_eq!(nodes_for_spacing((-100.0, 0.0), 0.2, BoundaryKind::Reflecting).unwrap(), 501);
        assert!(nodes_for_spacing((0.0, 1.0), 0.0, BoundaryKind::Periodic).is_err());
    }

    #[test]
    fn builds_in_f32() {
        let spec = manufactured_solution(BoundaryKind::Periodic, 8, 9.81, 500.0);
        let sim = spec.build::<f32>().unwrap();
        assert_eq!(sim.initial.nodes(), 64);
        assert!(sim.ctx.sources.is_some());
    }
}

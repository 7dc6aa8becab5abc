//! Adaptive explicit embedded Runge-Kutta integration with PI step control.

use crate::analysis::energy_rate;
use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::{self, StateField};
use crate::num::Real;
use crate::rhs::SgnRhs;

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem<T> {
    fn rhs(&mut self, t: T, y: &[T], dy: &mut [T]) -> Result<()>;
}

impl<T: Real> OdeSystem<T> for SgnRhs<T> {
    fn rhs(&mut self, t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        self.eval(t, y, dy)
    }
}

/// Adapts a closure to [`OdeSystem`].
pub struct FnSystem<F>(pub F);

impl<T, F> OdeSystem<T> for FnSystem<F>
where
    F: FnMut(T, &[T], &mut [T]) -> Result<()>,
{
    fn rhs(&mut self, t: T, y: &[T], dy: &mut [T]) -> Result<()> {
        (self.0)(t, y, dy)
    }
}

/// Explicit embedded pair with the first-same-as-last property.
#[derive(Debug, Clone)]
pub struct EmbeddedPair {
    pub c: &'static [f64],
    /// Strictly lower triangular stage coefficients, row by row.
    pub a: &'static [&'static [f64]],
    /// Weights of the propagated solution; the last stage is `f(t + dt, y_new)`.
    pub b: &'static [f64],
    /// `b - b_hat`, including the weight of the FSAL stage.
    pub e: &'static [f64],
    pub order: u32,
    pub embedded_order: u32,
}

/// Bogacki-Shampine 3(2).
pub const BOGACKI_SHAMPINE: EmbeddedPair = EmbeddedPair {
    c: &[0.0, 0.5, 0.75, 1.0],
    a: &[&[], &[0.5], &[0.0, 0.75], &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0]],
    b: &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0],
    e: &[-5.0 / 72.0, 1.0 / 12.0, 1.0 / 9.0, -1.0 / 8.0],
    order: 3,
    embedded_order: 2,
};

impl EmbeddedPair {
    pub fn stages(&self) -> usize {
        self.c.len()
    }

    /// New right-hand side evaluations per attempted step.
    pub fn evals_per_step(&self) -> usize {
        self.stages() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub t_start: f64,
    pub t_final: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Skip the automatic estimate and start with this step.
    pub dt_initial: Option<f64>,
    /// Defaults to the whole interval.
    pub dt_max: Option<f64>,
    /// PI exponents applied to the current and previous error.
    pub beta1: f64,
    pub beta2: f64,
    pub safety: f64,
    pub max_growth: f64,
    pub max_shrink: f64,
    pub max_steps: usize,
    /// Fixed step size; disables error control when set.
    pub fixed_dt: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            t_start: 0.0,
            t_final: 1.0,
            abs_tol: 1e-6,
            rel_tol: 1e-6,
            dt_initial: None,
            dt_max: None,
            beta1: 0.7 / 3.0,
            beta2: 0.4 / 3.0,
            safety: 0.9,
            max_growth: 5.0,
            max_shrink: 0.2,
            max_steps: 50_000_000,
            fixed_dt: None,
        }
    }
}

impl IntegratorConfig {
    pub fn new(t_start: f64, t_final: f64) -> Self {
        Self {
            t_start,
            t_final,
            ..Self::default()
        }
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad(format!(
                "tolerances must be positive, got abs {} rel {}",
                self.abs_tol, self.rel_tol
            ));
        }
        if !(self.t_final > self.t_start) || !self.t_final.is_finite() {
            return bad(format!(
                "final time {} must exceed start time {}",
                self.t_final, self.t_start
            ));
        }
        for (name, v) in [
            ("dt_initial", self.dt_initial),
            ("dt_max", self.dt_max),
            ("fixed_dt", self.fixed_dt),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }

    fn dt_max(&self) -> f64 {
        self.dt_max.unwrap_or(self.t_final - self.t_start)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Total right-hand side evaluations, including start-up.
    pub rhs_evals: usize,
    /// Evaluations spent by the initial step size estimate.
    pub dt_estimate_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Aborted { t: f64, reason: String },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// Called at the start and after every accepted step with the state and its
/// (first-same-as-last) tendency.
pub trait Observer<T> {
    fn observe(&mut self, t: T, y: &[T], dy: &[T]) -> Result<()>;
}

impl<T> Observer<T> for () {
    fn observe(&mut self, _: T, _: &[T], _: &[T]) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Integration<T> {
    pub t: T,
    pub y: Vec<T>,
    pub stats: StepStats,
    pub status: RunStatus,
}

/// Weighted RMS norm of `e` with scale `abs_tol + rel_tol max(|y0|, |y1|)`.
fn error_norm<T: Real>(e: &[T], y0: &[T], y1: &[T], abs_tol: T, rel_tol: T) -> T {
    let sum = e
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(&e, (&a, &b))| {
            let r = e / (abs_tol + rel_tol * a.abs().max(b.abs()));
            r * r
        })
        .fold(T::zero(), |acc, v| acc + v);
    (sum / T::of(e.len().max(1) as f64)).sqrt()
}

/// Starting step from the magnitude of `f` and of its change over a trial
/// explicit Euler step. Returns `dt_max` when `f` carries no scale.
pub fn estimate_initial_dt<T: Real, S: OdeSystem<T>>(
    system: &mut S,
    t0: T,
    y0: &[T],
    f0: &[T],
    config: &IntegratorConfig,
    order: u32,
) -> Result<(T, usize)> {
    let abs_tol = T::of(config.abs_tol);
    let rel_tol = T::of(config.rel_tol);
    let dt_max = T::of(config.dt_max());
    let scaled = |v: &[T], y: &[T]| error_norm(v, y, y, abs_tol, rel_tol);
    let d0 = scaled(y0, y0);
    let d1 = scaled(f0, y0);
    if d1 == T::zero() {
        return Ok((dt_max, 0));
    }
    let small = T::of(1e-5);
    let mut h0 = if d0 < small || d1 < small {
        T::of(1e-6)
    } else {
        T::of(0.01) * d0 / d1
    };
    h0 = h0.min(dt_max);
    let y1: Vec<T> = y0.iter().zip(f0).map(|(&y, &f)| y + h0 * f).collect();
    let mut f1 = vec![T::zero(); y0.len()];
    system.rhs(t0 + h0, &y1, &mut f1)?;
    let df: Vec<T> = f1.iter().zip(f0).map(|(&a, &b)| a - b).collect();
    let d2 = scaled(&df, y0) / h0;
    let m = d1.max(d2);
    let h1 = if m <= T::of(1e-15) {
        (h0 * T::of(1e-3)).max(T::of(1e-6))
    } else {
        (T::of(0.01) / m).powf(T::one() / T::of(f64::from(order + 1)))
    };
    Ok(((T::of(100.0) * h0).min(h1).min(dt_max), 1))
}

/// Integrates `y' = f(t, y)` from `t_start` to `t_final`, landing exactly on
/// every time in `stops`.
///
/// Failures inside the loop (non-positive depth, too many steps, step size
/// underflow) end the run with [`RunStatus::Aborted`] and the last accepted
/// state; only invalid configuration is reported as `Err`.
pub fn integrate<T: Real, S: OdeSystem<T>, O: Observer<T>>(
    system: &mut S,
    y0: &[T],
    config: &IntegratorConfig,
    stops: &[f64],
    observer: &mut O,
    pair: &EmbeddedPair,
) -> Result<Integration<T>> {
    config.validate()?;
    let n = y0.len();
    let s = pair.stages();
    let t_final = config.t_final;
    let abs_tol = T::of(config.abs_tol);
    let rel_tol = T::of(config.rel_tol);
    let dt_max = config.dt_max();

    let mut stops: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|&v| v > config.t_start && v < t_final)
        .collect();
    stops.push(t_final);
    stops.sort_by(|a, b| a.partial_cmp(b).expect("stop times are finite"));
    stops.dedup();
    let mut next_stop = 0;

    let mut stats = StepStats::default();
    let mut y = y0.to_vec();
    let mut t = config.t_start;
    let mut k: Vec<Vec<T>> = vec![vec![T::zero(); n]; s];
    let mut stage = vec![T::zero(); n];
    let mut y_new = vec![T::zero(); n];
    let mut err = vec![T::zero(); n];

    let abort = |t: f64, y: Vec<T>, stats: StepStats, reason: String| Integration {
        t: T::of(t),
        y,
        stats,
        status: RunStatus::Aborted { t, reason },
    };

    if let Err(e) = system.rhs(T::of(t), &y, &mut k[0]) {
        return Ok(abort(t, y, stats, e.to_string()));
    }
    stats.rhs_evals += 1;
    observer.observe(T::of(t), &y, &k[0])?;

    let mut dt = match (config.fixed_dt, config.dt_initial) {
        (Some(dt), _) | (None, Some(dt)) => dt,
        (None, None) => {
            let k0 = k[0].clone();
            match estimate_initial_dt(system, T::of(t), &y, &k0, config, pair.order) {
                Ok((dt, evals)) => {
                    stats.dt_estimate_evals = evals;
                    stats.rhs_evals += evals;
                    dt.to_f64_lossy()
                }
                Err(e) => return Ok(abort(t, y, stats, e.to_string())),
            }
        }
    }
    .min(dt_max);
    let mut err_prev = 1.0f64;

    while t < t_final {
        if stats.accepted + stats.rejected >= config.max_steps {
            return Ok(abort(t, y, stats, format!("step limit {} exceeded", config.max_steps)));
        }
        if dt < 1e-14 * t.abs().max(1.0) {
            return Ok(abort(t, y, stats, format!("step size underflow (dt = {dt:e})")));
        }
        let target = stops[next_stop];
        let mut h = dt;
        let mut hits_stop = false;
        if t + h >= target - 1e-12 * target.abs().max(1.0) {
            h = target - t;
            hits_stop = true;
        }
        let hh = T::of(h);

        // stages 2..s-1, then the propagated solution and the FSAL stage
        let mut failed = None;
        for i in 1..s {
            let row = pair.a[i];
            let is_last = i == s - 1;
            let target_buf = if is_last { &mut y_new } else { &mut stage };
            for m in 0..n {
                let mut acc = T::zero();
                for (j, &aij) in row.iter().enumerate() {
                    if aij != 0.0 {
                        acc = acc + T::of(aij) * k[j][m];
                    }
                }
                target_buf[m] = y[m] + hh * acc;
            }
            let tc = T::of(t + pair.c[i] * h);
            let (head, tail) = k.split_at_mut(i);
            let _ = head;
            let src = if is_last { &y_new } else { &stage };
            if let Err(e) = system.rhs(tc, src, &mut tail[0]) {
                failed = Some(e);
                stats.rhs_evals += 1;
                break;
            }
            stats.rhs_evals += 1;
        }
        if let Some(e) = failed {
            // A stage left the admissible set; shrink unless the error is fatal
            // at the current state itself.
            match e {
                Error::NonPositiveDepth { .. } if config.fixed_dt.is_none() && h > 1e-12 => {
                    stats.rejected += 1;
                    dt = h * config.max_shrink;
                    continue;
                }
                e => return Ok(abort(t, y, stats, e.to_string())),
            }
        }

        let accept = if config.fixed_dt.is_some() {
            true
        } else {
            for m in 0..n {
                let mut acc = T::zero();
                for (j, &ej) in pair.e.iter().enumerate() {
                    acc = acc + T::of(ej) * k[j][m];
                }
                err[m] = hh * acc;
            }
            let en = error_norm(&err, &y, &y_new, abs_tol, rel_tol).to_f64_lossy();
            if !en.is_finite() {
                stats.rejected += 1;
                dt = h * config.max_shrink;
                continue;
            }
            let order = f64::from(pair.embedded_order + 1);
            if en <= 1.0 {
                let en = en.max(1e-10);
                let factor = config.safety * en.powf(-config.beta1) * err_prev.powf(config.beta2);
                let factor = factor.clamp(config.max_shrink, config.max_growth);
                err_prev = en;
                dt = (h * factor).min(dt_max);
                true
            } else {
                let factor = (config.safety * en.powf(-1.0 / order)).max(config.max_shrink);
                dt = h * factor;
                false
            }
        };

        if !accept {
            stats.rejected += 1;
            continue;
        }

        stats.accepted += 1;
        std::mem::swap(&mut y, &mut y_new);
        k.swap(0, s - 1);
        if hits_stop {
            t = target;
            next_stop += 1;
            if next_stop >= stops.len() {
                t = t_final;
            }
        } else {
            t += h;
        }
        if let Some(fixed) = config.fixed_dt {
            dt = fixed;
        }
        observer.observe(T::of(t), &y, &k[0])?;
    }

    Ok(Integration {
        t: T::of(t),
        y,
        stats,
        status: RunStatus::Completed,
    })
}

/// Where and when to sample a running simulation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordingPlan {
    /// Gauge positions, sampled at the nearest node.
    pub gauges: Vec<(f64, f64)>,
    /// Times at which full snapshots are stored; the integrator lands on them.
    pub snapshot_times: Vec<f64>,
    /// Log mass, energy and energy rate every this many accepted steps
    /// (0 disables logging; the first and last states are always logged).
    pub conservation_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationSample {
    pub t: f64,
    pub total_mass: f64,
    pub total_energy: f64,
    pub energy_rate: f64,
}

#[derive(Debug, Clone)]
pub struct SolutionRecord<T> {
    /// Resolved gauge nodes `(i, j)` in plan order.
    pub gauge_nodes: Vec<(usize, usize)>,
    pub gauge_times: Vec<f64>,
    /// Surface elevation `h + b` per gauge sample, one row per time.
    pub gauge_values: Vec<Vec<f64>>,
    pub snapshots: Vec<(f64, StateField<T>)>,
    pub conservation: Vec<ConservationSample>,
    pub stats: StepStats,
    pub status: RunStatus,
    pub t_final: f64,
    pub final_state: StateField<T>,
}

struct Recorder<'a, T> {
    grid: &'a Grid2D<T>,
    rhs_ctx: &'a crate::rhs::RhsContext<T>,
    plan: &'a RecordingPlan,
    gauge_idx: Vec<usize>,
    gauge_nodes: Vec<(usize, usize)>,
    gauge_times: Vec<f64>,
    gauge_values: Vec<Vec<f64>>,
    snapshots: Vec<(f64, StateField<T>)>,
    conservation: Vec<ConservationSample>,
    steps: usize,
    last_logged: Option<f64>,
    last: Option<(f64, Vec<T>, Vec<T>)>,
}

impl<'a, T: Real> Recorder<'a, T> {
    fn log(&mut self, t: f64, y: &[T], dy: &[T]) -> Result<()> {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let state = StateField::from_vec(nx, ny, y.to_vec())?;
        let tendency = StateField::from_vec(nx, ny, dy.to_vec())?;
        let ops = &self.rhs_ctx.ops;
        let phys = &self.rhs_ctx.phys;
        self.conservation.push(ConservationSample {
            t,
            total_mass: model::total_mass(&state, ops)?.to_f64_lossy(),
            total_energy: model::total_energy(&state, phys, ops)?.to_f64_lossy(),
            energy_rate: energy_rate(&state, &tendency, phys, ops)?.to_f64_lossy(),
        });
        self.last_logged = Some(t);
        Ok(())
    }
}

impl<'a, T: Real> Observer<T> for Recorder<'a, T> {
    fn observe(&mut self, t: T, y: &[T], dy: &[T]) -> Result<()> {
        let t = t.to_f64_lossy();
        let h = &y[..self.grid.len()];
        let b = &self.rhs_ctx.phys.b;
        if !self.gauge_idx.is_empty() {
            self.gauge_times.push(t);
            self.gauge_values.push(
                self.gauge_idx
                    .iter()
                    .map(|&k| (h[k] + b[k]).to_f64_lossy())
                    .collect(),
            );
        }
        if self
            .plan
            .snapshot_times
            .iter()
            .any(|&s| (s - t).abs() <= 1e-12 * s.abs().max(1.0))
        {
            self.snapshots.push((
                t,
                StateField::from_vec(self.grid.nx, self.grid.ny, y.to_vec())?,
            ));
        }
        let every = self.plan.conservation_every;
        if self.steps == 0 || (every > 0 && self.steps % every == 0) {
            self.log(t, y, dy)?;
        }
        self.steps += 1;
        self.last = Some((t, y.to_vec(), dy.to_vec()));
        Ok(())
    }
}

/// Integrates the SGN system and records gauges, snapshots and conserved
/// quantities according to `plan`.
pub fn adaptive_solve<T: Real>(
    rhs: &mut SgnRhs<T>,
    initial: &StateField<T>,
    config: &IntegratorConfig,
    plan: &RecordingPlan,
) -> Result<SolutionRecord<T>> {
    config.validate()?;
    let ctx = rhs.ctx.clone();
    let grid = &ctx.grid;
    if initial.nx() != grid.nx || initial.ny() != grid.ny {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: initial.nodes(),
        });
    }
    let mut gauge_nodes = Vec::with_capacity(plan.gauges.len());
    for &(x, y) in &plan.gauges {
        let node = grid.nearest_node(T::of(x), T::of(y)).ok_or_else(|| {
            Error::InvalidParameter(format!("gauge ({x}, {y}) lies outside the domain"))
        })?;
        gauge_nodes.push(node);
    }
    let mut recorder = Recorder {
        grid,
        rhs_ctx: &ctx,
        plan,
        gauge_idx: gauge_nodes.iter().map(|&(i, j)| grid.index(i, j)).collect(),
        gauge_nodes,
        gauge_times: Vec::new(),
        gauge_values: Vec::new(),
        snapshots: Vec::new(),
        conservation: Vec::new(),
        steps: 0,
        last_logged: None,
        last: None,
    };
    let out = integrate(
        rhs,
        initial.as_slice(),
        config,
        &plan.snapshot_times,
        &mut recorder,
        &BOGACKI_SHAMPINE,
    )?;
    if let Some((t, y, dy)) = recorder.last.take() {
        if recorder.last_logged != Some(t) {
            recorder.log(t, &y, &dy)?;
        }
    }
    Ok(SolutionRecord {
        gauge_nodes: recorder.gauge_nodes,
        gauge_times: recorder.gauge_times,
        gauge_values: recorder.gauge_values,
        snapshots: recorder.snapshots,
        conservation: recorder.conservation,
        stats: out.stats,
        status: out.status,
        t_final: out.t.to_f64_lossy(),
        final_state: StateField::from_vec(grid.nx, grid.ny, out.y)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay() -> FnSystem<impl FnMut(f64, &[f64], &mut [f64]) -> Result<()>> {
        FnSystem(|_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0];
            Ok(())
        })
    }

    #[test]
    fn tableau_is_consistent() {
        let p = &BOGACKI_SHAMPINE;
        for (i, row) in p.a.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            assert!((sum - p.c[i]).abs() < 1e-15, "row {i}");
        }
        assert!((p.b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.e.iter().sum::<f64>().abs() < 1e-15);
        // FSAL: the last stage row equals the propagated weights.
        for (a, b) in p.a[3].iter().zip(p.b) {
            assert_eq!(a, b);
        }
        // order conditions up to three
        let b = p.b;
        let c = p.c;
        let bc: f64 = b.iter().zip(c).map(|(b, c)| b * c).sum();
        let bc2: f64 = b.iter().zip(c).map(|(b, c)| b * c * c).sum();
        let bac: f64 = (0..4)
            .map(|i| b[i] * p.a[i].iter().enumerate().map(|(j, a)| a * c[j]).sum::<f64>())
            .sum();
        assert!((bc - 0.5).abs() < 1e-15);
        assert!((bc2 - 1.0 / 3.0).abs() < 1e-15);
        assert!((bac - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn linear_decay_hits_exact_solution() {
        let cfg = IntegratorConfig::new(0.0, 1.0);
        let out = integrate(&mut decay(), &[1.0], &cfg, &[], &mut (), &BOGACKI_SHAMPINE).unwrap();
        assert!(out.status.is_completed());
        assert_eq!(out.t, 1.0);
        assert!((out.y[0] - (-1.0f64).exp()).abs() <= 100.0 * cfg.rel_tol);
        let s = out.stats;
        assert_eq!(s.rhs_evals, 1 + s.dt_estimate_evals + 3 * (s.accepted + s.rejected));
    }

    #[test]
    fn zero_rhs_keeps_state_bitwise() {
        let cfg = IntegratorConfig::new(0.0, 3.0);
        let mut sys = FnSystem(|_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy.iter_mut().for_each(|v| *v = 0.0);
            Ok(())
        });
        let y0 = [1.5, -2.0, 0.1];
        let out = integrate(&mut sys, &y0, &cfg, &[], &mut (), &BOGACKI_SHAMPINE).unwrap();
        assert_eq!(out.y, y0);
        assert!(out.stats.accepted <= 2);
    }

    #[test]
    fn zero_rhs_estimate_is_dt_max() {
        let cfg = IntegratorConfig {
            dt_max: Some(0.25),
            ..IntegratorConfig::new(0.0, 1.0)
        };
        let mut sys = FnSystem(|_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 0.0;
            Ok(())
        });
        let (dt, evals) = estimate_initial_dt(&mut sys, 0.0, &[1.0], &[0.0], &cfg, 3).unwrap();
        assert_eq!(dt, 0.25);
        assert_eq!(evals, 0);
    }

    #[test]
    fn faster_dynamics_give_smaller_estimates() {
        let cfg = IntegratorConfig::new(0.0, 10.0);
        let est = |rate: f64| {
            let mut sys = FnSystem(move |_t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[1];
                dy[1] = -rate * y[0];
                Ok(())
            });
            let y0 = [1.0, 0.0];
            let f0 = [0.0, -rate];
            estimate_initial_dt(&mut sys, 0.0, &y0, &f0, &cfg, 3).unwrap().0
        };
        assert!(est(100.0) <= est(1.0));
    }

    #[test]
    fn user_dt_overrides_estimate() {
        let cfg = IntegratorConfig {
            dt_initial: Some(1e-3),
            ..IntegratorConfig::new(0.0, 1.0)
        };
        let out = integrate(&mut decay(), &[1.0], &cfg, &[], &mut (), &BOGACKI_SHAMPINE).unwrap();
        assert_eq!(out.stats.dt_estimate_evals, 0);
    }

    #[test]
    fn fixed_step_order_is_three() {
        let run = |dt: f64| {
            let cfg = IntegratorConfig {
                fixed_dt: Some(dt),
                ..IntegratorConfig::new(0.0, 1.0)
            };
            let mut sys = FnSystem(|t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = -y[0] + t.sin();
                Ok(())
            });
            let out = integrate(&mut sys, &[1.0], &cfg, &[], &mut (), &BOGACKI_SHAMPINE).unwrap();
            // y = 1.5 e^{-t} + (sin t - cos t)/2
            let exact = 1.5 * (-1.0f64).exp() + (1f64.sin() - 1f64.cos()) / 2.0;
            (out.y[0] - exact).abs()
        };
        let e1 = run(0.1);
        let e2 = run(0.05);
        let order = (e1 / e2).log2();
        assert!(order >= 2.9, "observed order {order}");
    }

    #[test]
    fn stop_times_are_hit_exactly() {
        struct Times(Vec<f64>);
        impl Observer<f64> for Times {
            fn observe(&mut self, t: f64, _: &[f64], _: &[f64]) -> Result<()> {
                self.0.push(t);
                Ok(())
            }
        }
        let cfg = IntegratorConfig::new(0.0, 2.0);
        let mut times = Times(Vec::new());
        integrate(&mut decay(), &[1.0], &cfg, &[0.3, 1.7], &mut times, &BOGACKI_SHAMPINE).unwrap();
        assert!(times.0.contains(&0.3));
        assert!(times.0.contains(&1.7));
        assert_eq!(*times.0.last().unwrap(), 2.0);
        assert!(times.0.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn failing_rhs_aborts_with_last_state() {
        let cfg = IntegratorConfig::new(0.0, 5.0);
        let mut sys = FnSystem(|t: f64, y: &[f64], dy: &mut [f64]| {
            if t > 1.0 {
                return Err(Error::InvalidParameter("boom".into()));
            }
            dy[0] = -y[0];
            Ok(())
        });
        let out = integrate(&mut sys, &[1.0], &cfg, &[], &mut (), &BOGACKI_SHAMPINE).unwrap();
        match out.status {
            RunStatus::Aborted { t, .. } => assert!(t <= 1.0),
            RunStatus::Completed => panic!("should abort"),
        }
        assert!(out.y[0] > 0.0 && out.y[0] < 1.0);
    }

    #[test]
    fn step_limit() {
        let cfg = IntegratorConfig {
            max_steps: 3,
            dt_initial: Some(1e-3),
            dt_max: Some(1e-3),
            ..IntegratorConfig::new(0.0, 1.0)
        };
        let out = integrate(&mut decay(), &[1.0], &cfg, &[], &mut (), &BOGACKI_SHAMPINE).unwrap();
        assert!(!out.status.is_completed());
        assert_eq!(out.stats.accepted, 3);
    }

    #[test]
    fn invalid_config() {
        let cfg = IntegratorConfig::new(1.0, 1.0);
        assert!(integrate(&mut decay(), &[1.0], &cfg, &[], &mut (), &BOGACKI_SHAMPINE).is_err());
        let cfg = IntegratorConfig::new(0.0, 1.0).with_tolerances(0.0, 1e-6);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn tolerance_controls_error() {
        let run = |tol: f64| {
            let cfg = IntegratorConfig::new(0.0, 2.0).with_tolerances(tol, tol);
            let out = integrate(&mut decay(), &[1.0], &cfg, &[], &mut (), &BOGACKI_SHAMPINE).unwrap();
            (out.y[0] - (-2.0f64).exp()).abs()
        };
        let (a, b) = (run(1e-5), run(1e-8));
        assert!(b < a);
    }
}

use anyhow::{ensure, Result};
use hypsgn::scenarios::{self, Axis, DingemansParams, FavreParams, HeadOnParams, ScenarioSpec};
use hypsgn::BoundaryKind;

use crate::config::{AxisName, Config, ScenarioName, MIN_NODES};

/// Builds the scenario described by `cfg` with every override applied.
/// Only closures and node counts are created here, no grid storage.
pub fn build_scenario(cfg: &Config) -> Result<ScenarioSpec> {
    let s = &cfg.scenario;
    let g = cfg.physics.g.unwrap_or(scenarios::GRAVITY);
    let grid = &cfg.grid;
    let bx = grid.boundary_x.map(BoundaryKind::from);
    let by = grid.boundary_y.map(BoundaryKind::from);
    let mut spec = match cfg.run.scenario {
        ScenarioName::Soliton => {
            let axis = match s.axis.unwrap_or(AxisName::X) {
                AxisName::X => Axis::X,
                AxisName::Y => Axis::Y,
            };
            let lambda = cfg.physics.lambda.unwrap_or(30_000.0);
            scenarios::soliton_convergence(
                s.h_inf.unwrap_or(1.0),
                s.amplitude.unwrap_or(0.2),
                g,
                lambda,
                axis,
                200,
            )?
        }
        ScenarioName::Manufactured => scenarios::manufactured_solution(
            BoundaryKind::Periodic,
            32,
            g,
            scenarios::DEFAULT_LAMBDA,
        ),
        ScenarioName::Dingemans => {
            let d = DingemansParams::default();
            let p = DingemansParams {
                depth: s.depth.unwrap_or(d.depth),
                amplitude: s.amplitude.unwrap_or(d.amplitude),
                period: s.period.unwrap_or(d.period),
                offset: s.offset.unwrap_or(d.offset),
                dx: grid.dx.unwrap_or(d.dx),
                t_final: cfg.time.t_final.unwrap_or(d.t_final),
                g,
                ..d
            };
            scenarios::dingemans(&p)?
        }
        ScenarioName::HeadOnCollision => {
            let d = HeadOnParams::default();
            let p = HeadOnParams {
                h_inf: s.h_inf.unwrap_or(d.h_inf),
                right_amplitude: s.right_amplitude.unwrap_or(d.right_amplitude),
                right_center: s.right_center.unwrap_or(d.right_center),
                left_amplitude: s.left_amplitude.unwrap_or(d.left_amplitude),
                left_center: s.left_center.unwrap_or(d.left_center),
                t_start: cfg.time.t_start.unwrap_or(d.t_start),
                t_final: cfg.time.t_final.unwrap_or(d.t_final),
                dx: grid.dx.unwrap_or(d.dx),
                g,
                ..d
            };
            scenarios::head_on_collision(&p)?
        }
        ScenarioName::Riemann => {
            let mut spec = scenarios::riemann_setup(
                s.h_left.unwrap_or(1.8),
                s.h_right.unwrap_or(1.0),
                grid.dx.unwrap_or(0.6),
            )?;
            spec.g = g;
            spec
        }
        ScenarioName::Favre => {
            let d = FavreParams::default();
            let p = FavreParams {
                epsilon: s.epsilon.unwrap_or(d.epsilon),
                h0: s.h0.unwrap_or(d.h0),
                x0: s.x0.unwrap_or(d.x0),
                alpha: s.alpha.unwrap_or(d.alpha),
                u0: s.u0.unwrap_or(d.u0),
                x_range: (s.x_min.unwrap_or(d.x_range.0), s.x_max.unwrap_or(d.x_range.1)),
                dx: grid.dx.unwrap_or(d.dx),
                t_final: cfg.time.t_final.unwrap_or(d.t_final),
                g,
                ..d
            };
            scenarios::favre_setup(&p)?
        }
        ScenarioName::WallReflection => scenarios::wall_reflection(
            s.amplitude.unwrap_or(0.075),
            g,
            grid.dx.unwrap_or(0.2),
            s.t_star_final.unwrap_or(100.0),
        )?,
        ScenarioName::GaussianObstacle => scenarios::gaussian_obstacle(
            grid.dx.unwrap_or(0.2),
            BoundaryKind::Periodic,
            g,
        )?,
        ScenarioName::LakeAtRest => {
            let mut spec =
                scenarios::lake_at_rest(s.level.unwrap_or(1.0), 32, BoundaryKind::Periodic);
            spec.g = g;
            spec
        }
    };
    if let Some(lambda) = cfg.physics.lambda {
        spec.lambda = lambda;
    }
    if bx.is_some() || by.is_some() {
        let (old_x, old_y) = (spec.boundary_x, spec.boundary_y);
        let (new_x, new_y) = (bx.unwrap_or(old_x), by.unwrap_or(old_y));
        let nx = rebase_nodes(spec.nx, old_x, new_x);
        let ny = rebase_nodes(spec.ny, old_y, new_y);
        spec = spec.with_boundaries(new_x, new_y).with_resolution(nx, ny);
    }
    let nx = match (grid.nx, grid.dx) {
        (Some(n), _) => n,
        (None, Some(dx)) => scenarios::nodes_for_spacing(spec.x_range, dx, spec.boundary_x)?,
        (None, None) => spec.nx,
    };
    let ny = match (grid.ny, grid.dy) {
        (Some(n), _) => n,
        (None, Some(dy)) => scenarios::nodes_for_spacing(spec.y_range, dy, spec.boundary_y)?,
        (None, None) => spec.ny,
    };
    ensure!(
        nx >= MIN_NODES && ny >= MIN_NODES,
        "grid {nx}x{ny} is below the minimum of {MIN_NODES}x{MIN_NODES}"
    );
    spec = spec.with_resolution(nx, ny);
    if let Some(t0) = cfg.time.t_start {
        spec.t_start = t0;
    }
    if let Some(t1) = cfg.time.t_final {
        spec.t_final = t1;
    }
    ensure!(
        spec.t_final > spec.t_start,
        "final time {} must exceed start time {}",
        spec.t_final,
        spec.t_start
    );
    if let (Some(xs), Some(ys)) = (&cfg.output.gauges_x, &cfg.output.gauges_y) {
        spec.gauges = xs.iter().copied().zip(ys.iter().copied()).collect();
    }
    for &(x, y) in &spec.gauges {
        ensure!(
            inside(x, spec.x_range) && inside(y, spec.y_range),
            "gauge ({x}, {y}) lies outside the domain"
        );
    }
    if let Some(ts) = &cfg.output.snapshot_times {
        spec.snapshot_times = ts.clone();
    }
    spec.snapshot_times
        .retain(|&t| t >= spec.t_start && t <= spec.t_final);
    spec.snapshot_times.sort_by(f64::total_cmp);
    spec.snapshot_times.dedup();
    Ok(spec)
}

/// Node count after a boundary change, keeping the number of cells.
fn rebase_nodes(n: usize, from: BoundaryKind, to: BoundaryKind) -> usize {
    match (from, to) {
        (BoundaryKind::Periodic, BoundaryKind::Reflecting) => n + 1,
        (BoundaryKind::Reflecting, BoundaryKind::Periodic) => n - 1,
        _ => n,
    }
}

fn inside(v: f64, range: (f64, f64)) -> bool {
    v >= range.0 && v <= range.1
}

/// Node counts of a convergence run with `cells` cells in the refined
/// directions.
pub fn refined_resolution(cfg: &Config, spec: &ScenarioSpec, cells: usize) -> (usize, usize) {
    let nodes = |b: BoundaryKind| match b {
        BoundaryKind::Periodic => cells,
        BoundaryKind::Reflecting => cells + 1,
    };
    match (cfg.run.scenario, cfg.scenario.axis) {
        (ScenarioName::Soliton, Some(AxisName::Y)) => (spec.nx, nodes(spec.boundary_y)),
        (ScenarioName::Soliton, _) => (nodes(spec.boundary_x), spec.ny),
        _ => (nodes(spec.boundary_x), nodes(spec.boundary_y)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn cfg(text: &str) -> Config {
        Config::parse(text).unwrap()
    }

    #[test]
    fn every_scenario_builds_with_defaults() {
        for name in [
            "soliton",
            "manufactured",
            "head_on_collision",
            "riemann",
            "favre",
            "wall_reflection",
            "gaussian_obstacle",
            "lake_at_rest",
        ] {
            let c = cfg(&format!("[run]\nscenario = \"{name}\"\n"));
            let spec = build_scenario(&c).unwrap();
            assert!(spec.nx >= MIN_NODES && spec.ny >= MIN_NODES, "{name}");
        }
        let c = cfg("[run]\nscenario = \"dingemans\"\n[grid]\ndx = 0.1\n");
        assert_eq!(build_scenario(&c).unwrap().nx, 1840);
    }

    #[test]
    fn overrides_apply() {
        let c = cfg(
            "[run]\nscenario = \"gaussian_obstacle\"\n[grid]\ndx = 0.5\nboundary_x = \"reflecting\"\n\
             [physics]\nlambda = 100.0\n[time]\nt_final = 3.0\n[output]\nsnapshot_times = [5.0, 1.0, 2.0]\n",
        );
        let spec = build_scenario(&c).unwrap();
        assert_eq!((spec.nx, spec.ny), (81, 40));
        assert_eq!(spec.boundary_x, BoundaryKind::Reflecting);
        assert_eq!(spec.boundary_y, BoundaryKind::Periodic);
        assert_eq!(spec.lambda, 100.0);
        assert_eq!(spec.t_final, 3.0);
        assert_eq!(spec.snapshot_times, vec![1.0, 2.0]);
    }

    #[test]
    fn gauges_outside_rejected() {
        let c = cfg("[run]\nscenario = \"lake_at_rest\"\n[output]\ngauges_x = [9.0]\ngauges_y = [0.0]\n");
        assert!(build_scenario(&c).is_err());
    }

    #[test]
    fn refined_counts_cells() {
        let c = cfg("[run]\nscenario = \"manufactured\"\n[grid]\nboundary_x = \"reflecting\"\nboundary_y = \"reflecting\"\n");
        let spec = build_scenario(&c).unwrap();
        assert_eq!(refined_resolution(&c, &spec, 32), (33, 33));
        let c = cfg("[run]\nscenario = \"soliton\"\n");
        let spec = build_scenario(&c).unwrap();
        assert_eq!(refined_resolution(&c, &spec, 400), (400, 4));
    }
}

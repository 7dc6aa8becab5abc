use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use hypsgn::analysis::{run_convergence_study, ConvergenceTable};
use hypsgn::scenarios::ScenarioSpec;
use hypsgn::time_integration::{RunStatus, BOGACKI_SHAMPINE};
use hypsgn::{adaptive_solve, BoundaryKind, IntegratorConfig, RecordingPlan, SgnRhs, SolutionRecord, Var};
use log::info;
use serde_json::{json, Value};

use crate::config::{parse_var, Config, ScenarioName};
use crate::output::{fmt, snapshot_name, write_cross_section, write_snapshot, writer};
use crate::scenario::{build_scenario, refined_resolution};

/// What a finished run left behind.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub completed: bool,
    pub record: SolutionRecord<f64>,
    pub files: Vec<PathBuf>,
}

fn boundary_name(b: BoundaryKind) -> &'static str {
    match b {
        BoundaryKind::Periodic => "periodic",
        BoundaryKind::Reflecting => "reflecting",
    }
}

pub fn integrator_config(cfg: &Config, spec: &ScenarioSpec) -> IntegratorConfig {
    let mut ic = IntegratorConfig::new(spec.t_start, spec.t_final)
        .with_tolerances(cfg.time.abs_tol, cfg.time.rel_tol);
    ic.dt_initial = cfg.time.dt_initial;
    ic.dt_max = cfg.time.dt_max;
    if let Some(n) = cfg.time.max_steps {
        ic.max_steps = n;
    }
    ic
}

fn resolved(spec: &ScenarioSpec, ic: &IntegratorConfig, dx: f64, dy: f64) -> Value {
    json!({
        "scenario": spec.name,
        "nx": spec.nx,
        "ny": spec.ny,
        "dx": dx,
        "dy": dy,
        "x_range": [spec.x_range.0, spec.x_range.1],
        "y_range": [spec.y_range.0, spec.y_range.1],
        "boundary_x": boundary_name(spec.boundary_x),
        "boundary_y": boundary_name(spec.boundary_y),
        "g": spec.g,
        "lambda": spec.lambda,
        "t_start": spec.t_start,
        "t_final": spec.t_final,
        "abs_tol": ic.abs_tol,
        "rel_tol": ic.rel_tol,
        "dt_initial": ic.dt_initial,
        "dt_max": ic.dt_max,
        "max_steps": ic.max_steps,
        "gauges": spec.gauges.iter().map(|&(x, y)| [x, y]).collect::<Vec<_>>(),
        "snapshot_times": spec.snapshot_times,
    })
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Integrates the configured scenario and writes gauges, snapshots,
/// conservation history and run metadata into `out`.
pub fn cmd_run(cfg: &Config, out: &Path) -> Result<RunOutcome> {
    let spec = build_scenario(cfg)?;
    let ic = integrator_config(cfg, &spec);
    ic.validate()?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let sim = spec.build::<f64>()?;
    let grid = sim.grid.clone();
    let b = sim.ctx.phys.b.to_vec();
    let resolved = resolved(&spec, &ic, grid.dx, grid.dy);
    let threads = rayon::current_num_threads();
    let meta_path = out.join("run_meta.json");
    info!(
        "running {} on {}x{} nodes to t = {} with {threads} thread(s)",
        spec.name, grid.nx, grid.ny, spec.t_final
    );
    let plan = RecordingPlan {
        gauges: spec.gauges.clone(),
        snapshot_times: spec.snapshot_times.clone(),
        conservation_every: cfg.output.conservation_every,
    };
    let mut rhs = SgnRhs::new(sim.ctx);
    let record = match adaptive_solve(&mut rhs, &sim.initial, &ic, &plan) {
        Ok(r) => r,
        Err(e) => {
            write_json(
                &meta_path,
                &json!({
                    "config": cfg,
                    "resolved": resolved,
                    "threads": threads,
                    "status": "failed",
                    "failure": { "reason": e.to_string() },
                }),
            )?;
            return Err(e.into());
        }
    };

    let mut files = Vec::new();
    let path = out.join("gauges.csv");
    let mut w = writer(&path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=record.gauge_nodes.len()).map(|k| format!("gauge_{k}")));
    w.write_record(&header)?;
    for (t, vals) in record.gauge_times.iter().zip(&record.gauge_values) {
        let mut row = vec![fmt(*t)];
        row.extend(vals.iter().map(|&v| fmt(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    files.push(path);

    let cross_row = cfg
        .output
        .cross_section_y
        .map(|y| grid.nearest_node(grid.x_min, y).map(|(_, j)| j))
        .map(|j| j.context("cross_section_y lies outside the domain"))
        .transpose()?;
    let mut snapshot_meta = Vec::new();
    for (t, state) in &record.snapshots {
        let path = out.join(snapshot_name("snapshot", *t));
        write_snapshot(&path, &grid, state, &b)?;
        let mut entry = json!({ "t": t, "file": path.file_name().map(|f| f.to_string_lossy()) });
        files.push(path);
        if let Some(j) = cross_row {
            let path = out.join(snapshot_name("cross_section", *t));
            write_cross_section(&path, &grid, state, &b, j)?;
            entry["cross_section"] = json!(path.file_name().map(|f| f.to_string_lossy()));
            entry["cross_section_y"] = json!(grid.y(j));
            files.push(path);
        }
        snapshot_meta.push(entry);
    }

    let path = out.join("conservation.csv");
    let mut w = writer(&path)?;
    w.write_record(["t", "total_mass", "total_energy", "semidiscrete_energy_rate"])?;
    for s in &record.conservation {
        w.write_record([s.t, s.total_mass, s.total_energy, s.energy_rate].map(fmt))?;
    }
    w.flush()?;
    files.push(path);

    let stats = record.stats;
    let stages = BOGACKI_SHAMPINE.evals_per_step();
    let (status, failure) = match &record.status {
        RunStatus::Completed => ("completed", Value::Null),
        RunStatus::Aborted { t, reason } => ("aborted", json!({ "t": t, "reason": reason })),
    };
    write_json(
        &meta_path,
        &json!({
            "config": cfg,
            "resolved": resolved,
            "threads": threads,
            "status": status,
            "failure": failure,
            "t_reached": record.t_final,
            "stats": {
                "accepted_steps": stats.accepted,
                "rejected_steps": stats.rejected,
                "rhs_evaluations": stats.rhs_evals,
                "rhs_evaluations_per_step": stages,
                "initial_dt_evaluations": stats.dt_estimate_evals,
                "fsal_start_evaluations": 1,
            },
            "gauge_nodes": record.gauge_nodes.iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>(),
            "snapshots": snapshot_meta,
        }),
    )?;
    files.push(meta_path);
    Ok(RunOutcome {
        completed: record.status.is_completed(),
        record,
        files,
    })
}

/// Runs a convergence study of the configured scenario and writes
/// `converge.csv` into `out`.
pub fn cmd_converge(cfg: &Config, out: &Path) -> Result<ConvergenceTable> {
    let spec = build_scenario(cfg)?;
    let (default_res, default_vars): (Vec<usize>, Vec<Var>) = match cfg.run.scenario {
        ScenarioName::Soliton => (vec![200, 400, 800], vec![Var::H, Var::U]),
        ScenarioName::Manufactured => (vec![32, 64, 128], Var::ALL.to_vec()),
        other => bail!("scenario {other:?} has no exact solution to converge against"),
    };
    let cells = cfg.converge.resolutions.clone().unwrap_or(default_res);
    let vars = match &cfg.converge.variables {
        Some(v) => v.iter().map(|s| parse_var(s)).collect::<Result<Vec<_>>>()?,
        None => default_vars,
    };
    let resolutions: Vec<_> = cells.iter().map(|&c| refined_resolution(cfg, &spec, c)).collect();
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    info!("convergence study of {} at {resolutions:?}", spec.name);
    let table = run_convergence_study::<f64>(&spec, &resolutions, &vars, spec.t_final)?;
    let path = out.join("converge.csv");
    let mut w = writer(&path)?;
    let mut header = vec!["nx".to_string(), "dx".to_string()];
    for v in &vars {
        header.push(format!("err_{}", v.name()));
        header.push(format!("eoc_{}", v.name()));
    }
    header.push("failure".into());
    w.write_record(&header)?;
    for row in &table.rows {
        let mut rec = vec![row.nx.to_string(), fmt(row.dx)];
        for (e, r) in row.errors.iter().zip(&row.eoc) {
            rec.push(fmt(*e));
            rec.push(r.map(fmt).unwrap_or_default());
        }
        rec.push(row.failure.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub nx: usize,
    pub ny: usize,
    pub n_total: usize,
    /// Fastest sample.
    pub seconds_per_rhs: f64,
    pub median_seconds_per_rhs: f64,
    pub threads: usize,
}

/// Times `repetitions` right-hand side evaluations of `spec`'s initial state
/// per sample at every rung of `ladder`.
pub fn bench_ladder(
    spec: &ScenarioSpec,
    ladder: &[(usize, usize)],
    repetitions: usize,
    warmup: usize,
    samples: usize,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(ladder.len());
    for &(nx, ny) in ladder {
        if nx < crate::config::MIN_NODES || ny < crate::config::MIN_NODES {
            bail!("bench rung {nx}x{ny} is below the minimum grid");
        }
        let sim = spec.with_resolution(nx, ny).build::<f64>()?;
        let q = sim.initial.as_slice().to_vec();
        let mut dq = vec![0.0; q.len()];
        let mut rhs = SgnRhs::new(sim.ctx);
        let t = spec.t_start;
        for _ in 0..warmup {
            rhs.eval(t, &q, &mut dq)?;
        }
        let mut times = Vec::with_capacity(samples);
        for _ in 0..samples.max(1) {
            let start = Instant::now();
            for _ in 0..repetitions.max(1) {
                rhs.eval(t, std::hint::black_box(&q), &mut dq)?;
            }
            times.push(start.elapsed().as_secs_f64() / repetitions.max(1) as f64);
        }
        times.sort_by(f64::total_cmp);
        let row = BenchRow {
            nx,
            ny,
            n_total: nx * ny,
            seconds_per_rhs: times[0],
            median_seconds_per_rhs: times[times.len() / 2],
            threads: rayon::current_num_threads(),
        };
        info!("{nx}x{ny}: {:.3e} s per rhs", row.seconds_per_rhs);
        rows.push(row);
    }
    Ok(rows)
}

/// Benchmarks the right-hand side over the configured ladder and writes
/// `bench.csv` into `out`.
pub fn cmd_bench(cfg: &Config, out: &Path) -> Result<Vec<BenchRow>> {
    let spec = build_scenario(cfg)?;
    let b = &cfg.bench;
    let ladder: Vec<_> = b.nx.iter().copied().zip(b.ny.iter().copied()).collect();
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let rows = bench_ladder(&spec, &ladder, b.repetitions, b.warmup, b.samples)?;
    let path = out.join("bench.csv");
    let mut w = writer(&path)?;
    w.write_record([
        "nx",
        "ny",
        "n_total",
        "seconds_per_rhs",
        "threads",
        "median_seconds_per_rhs",
    ])?;
    for r in &rows {
        w.write_record([
            r.nx.to_string(),
            r.ny.to_string(),
            r.n_total.to_string(),
            fmt(r.seconds_per_rhs),
            r.threads.to_string(),
            fmt(r.median_seconds_per_rhs),
        ])?;
    }
    w.flush()?;
    Ok(rows)
}

/// Runs `f` on a rayon pool with `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

//! Error norms, convergence rates and conservation diagnostics.

use crate::error::{Error, Result};
use crate::model::{energy_partials, split, check_positive, PhysSetup, StateField, Var};
use crate::num::{c, Real};
use crate::rhs::SgnRhs;
use crate::scenarios::ScenarioSpec;
use crate::sbp::Operators2D;
use crate::time_integration::{adaptive_solve, IntegratorConfig, RecordingPlan};

/// Tolerances used by convergence studies so that the spatial error dominates.
pub const CONVERGENCE_TOL: f64 = 1e-10;

/// `sqrt((num - exact)^T M (num - exact))`.
pub fn discrete_l2_error<T: Real>(numeric: &[T], exact: &[T], ops: &Operators2D<T>) -> Result<T> {
    if numeric.len() != exact.len() {
        return Err(Error::SizeMismatch {
            expected: exact.len(),
            got: numeric.len(),
        });
    }
    let diff2: Vec<T> = numeric
        .iter()
        .zip(exact)
        .map(|(&a, &b)| (a - b) * (a - b))
        .collect();
    Ok(ops.integrate(&diff2)?.sqrt())
}

/// Experimental order of convergence between consecutive entries.
///
/// Element `k` compares entries `k` and `k + 1`. A vanishing error yields
/// `f64::INFINITY`.
pub fn eoc(errors: &[f64], spacings: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != spacings.len() {
        return Err(Error::SizeMismatch {
            expected: spacings.len(),
            got: errors.len(),
        });
    }
    if let Some(s) = spacings.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::InvalidParameter(format!("spacings must be positive, got {s}")));
    }
    if let Some(e) = errors.iter().find(|&&e| !(e >= 0.0)) {
        return Err(Error::InvalidParameter(format!("errors must be non-negative, got {e}")));
    }
    Ok(errors
        .windows(2)
        .zip(spacings.windows(2))
        .map(|(e, d)| {
            if e[1] == 0.0 || e[0] == 0.0 {
                f64::INFINITY
            } else {
                (e[0] / e[1]).ln() / (d[0] / d[1]).ln()
            }
        })
        .collect())
}

/// `<dE/dq, q_t>_M` summed over all five variables.
pub fn energy_rate<T: Real>(
    state: &StateField<T>,
    tendency: &StateField<T>,
    phys: &PhysSetup<T>,
    ops: &Operators2D<T>,
) -> Result<T> {
    check_sizes(state, tendency, phys)?;
    check_positive(state.h(), T::zero())?;
    let [h, u, v, w, eta] = split(state.as_slice());
    let [ht, ut, vt, wt, et] = split(tendency.as_slice());
    let b = &phys.b;
    let density: Vec<T> = (0..state.nodes())
        .map(|k| {
            let p = energy_partials(h[k], u[k], v[k], w[k], eta[k], b[k], phys.g, phys.lambda);
            p.dh * ht[k] + p.du * ut[k] + p.dv * vt[k] + p.dw * wt[k] + p.deta * et[k]
        })
        .collect();
    ops.integrate(&density)
}

/// Rate of the shallow-water energy `h (u^2 + v^2)/2 + (g/2) h (h + 2b)`;
/// the `w` and `eta` components are ignored.
pub fn shallow_water_energy_rate<T: Real>(
    state: &StateField<T>,
    tendency: &StateField<T>,
    phys: &PhysSetup<T>,
    ops: &Operators2D<T>,
) -> Result<T> {
    check_sizes(state, tendency, phys)?;
    check_positive(state.h(), T::zero())?;
    let [h, u, v, ..] = split(state.as_slice());
    let [ht, ut, vt, ..] = split(tendency.as_slice());
    let b = &phys.b;
    let half: T = c(0.5);
    let density: Vec<T> = (0..state.nodes())
        .map(|k| {
            let dh = half * (u[k] * u[k] + v[k] * v[k]) + phys.g * (h[k] + b[k]);
            dh * ht[k] + h[k] * u[k] * ut[k] + h[k] * v[k] * vt[k]
        })
        .collect();
    ops.integrate(&density)
}

fn check_sizes<T: Real>(state: &StateField<T>, tendency: &StateField<T>, phys: &PhysSetup<T>) -> Result<()> {
    for got in [tendency.nodes(), phys.b.len()] {
        if got != state.nodes() {
            return Err(Error::SizeMismatch {
                expected: state.nodes(),
                got,
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    /// One entry per variable of the table, `NaN` if the run failed.
    pub errors: Vec<f64>,
    /// Rate against the previous row; `None` on the first row.
    pub eoc: Vec<Option<f64>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub variables: Vec<Var>,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn new(variables: Vec<Var>) -> Self {
        Self {
            variables,
            rows: Vec::new(),
        }
    }

    /// Appends a row and fills in its rates against the previous one.
    pub fn push(&mut self, nx: usize, ny: usize, dx: f64, errors: Vec<f64>, failure: Option<String>) -> Result<()> {
        if errors.len() != self.variables.len() {
            return Err(Error::SizeMismatch {
                expected: self.variables.len(),
                got: errors.len(),
            });
        }
        let eoc = match self.rows.last() {
            None => vec![None; errors.len()],
            Some(prev) => {
                if !(nx > prev.nx) {
                    return Err(Error::InvalidParameter(format!(
                        "resolutions must increase, got {nx} after {}",
                        prev.nx
                    )));
                }
                prev.errors
                    .iter()
                    .zip(&errors)
                    .map(|(&e0, &e1)| {
                        if e0.is_finite() && e1.is_finite() {
                            eoc(&[e0, e1], &[prev.dx, dx]).ok().map(|r| r[0])
                        } else {
                            None
                        }
                    })
                    .collect()
            }
        };
        self.rows.push(ConvergenceRow {
            nx,
            ny,
            dx,
            errors,
            eoc,
            failure,
        });
        Ok(())
    }

    /// Rate of `var` between the last two rows.
    pub fn finest_eoc(&self, var: Var) -> Option<f64> {
        let k = self.variables.iter().position(|&v| v == var)?;
        self.rows.last()?.eoc[k]
    }

    pub fn column(&self, var: Var) -> Option<Vec<f64>> {
        let k = self.variables.iter().position(|&v| v == var)?;
        Some(self.rows.iter().map(|r| r.errors[k]).collect())
    }
}

/// Integrates `scenario` at each resolution to `t_final` with tight
/// tolerances and tabulates the discrete L2 error of `variables` against the
/// exact solution. Solver failures are recorded per row.
pub fn run_convergence_study<T: Real>(
    scenario: &ScenarioSpec,
    resolutions: &[(usize, usize)],
    variables: &[Var],
    t_final: f64,
) -> Result<ConvergenceTable> {
    if scenario.exact.is_none() {
        return Err(Error::InvalidParameter(format!(
            "scenario '{}' has no exact solution",
            scenario.name
        )));
    }
    let mut table = ConvergenceTable::new(variables.to_vec());
    for &(nx, ny) in resolutions {
        let spec = scenario.with_resolution(nx, ny);
        let sim = spec.build::<T>()?;
        let dx = sim.grid.dx.to_f64_lossy();
        let config = IntegratorConfig::new(spec.t_start, t_final)
            .with_tolerances(CONVERGENCE_TOL, CONVERGENCE_TOL);
        let exact = spec.exact_state::<T>(&sim.grid, t_final)?;
        let ops = sim.ctx.ops.clone();
        let mut rhs = SgnRhs::new(sim.ctx);
        let record = adaptive_solve(&mut rhs, &sim.initial, &config, &RecordingPlan::default())?;
        let (errors, failure) = match &record.status {
            crate::time_integration::RunStatus::Completed => {
                let errs = variables
                    .iter()
                    .map(|&v| {
                        discrete_l2_error(record.final_state.var(v), exact.var(v), &ops)
                            .map(|e| e.to_f64_lossy())
                    })
                    .collect::<Result<Vec<_>>>()?;
                (errs, None)
            }
            crate::time_integration::RunStatus::Aborted { reason, .. } => {
                (vec![f64::NAN; variables.len()], Some(reason.clone()))
            }
        };
        table.push(nx, ny, dx, errors, failure)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;

    fn unit_ops(n: usize) -> (Grid2D<f64>, Operators2D<f64>) {
        let g = Grid2D::new((0.0, 1.0), (0.0, 1.0), n, n, false, false).unwrap();
        let ops = Operators2D::for_grid(&g).unwrap();
        (g, ops)
    }

    #[test]
    fn l2_identical_is_zero() {
        let (g, ops) = unit_ops(9);
        let f = g.sample(|x, y| x * y + 1.0);
        assert_eq!(discrete_l2_error(&f, &f, &ops).unwrap(), 0.0);
    }

    #[test]
    fn l2_constant_difference() {
        let (g, ops) = unit_ops(11);
        let a = g.sample(|x, _| x);
        let b = g.sample(|x, _| x - 0.3);
        assert!((discrete_l2_error(&a, &b, &ops).unwrap() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn l2_of_x_converges_to_sqrt_third() {
        let exact = (1.0f64 / 3.0).sqrt();
        let mut prev = f64::INFINITY;
        for n in [11, 21, 41] {
            let (g, ops) = unit_ops(n);
            let a = g.sample(|x, _| x);
            let z = g.sample(|_, _| 0.0);
            let err = (discrete_l2_error(&a, &z, &ops).unwrap() - exact).abs();
            // trapezoid rule error for x^2 is dx^2/6 in the integral
            assert!(err < g.dx * g.dx, "n = {n}: {err}");
            assert!(err < prev);
            prev = err;
        }
    }

    #[test]
    fn l2_size_mismatch() {
        let (_, ops) = unit_ops(5);
        assert!(discrete_l2_error(&[0.0; 25], &[0.0; 24], &ops).is_err());
    }

    #[test]
    fn eoc_examples() {
        let r = eoc(&[0.1, 0.025], &[0.1, 0.05]).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-14);
        let r = eoc(&[0.1, 0.05], &[0.1, 0.05]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-14);
        let r = eoc(&[0.1, 0.1], &[0.1, 0.05]).unwrap();
        assert_eq!(r[0], 0.0);
        let r = eoc(&[0.1, 0.0], &[0.1, 0.05]).unwrap();
        assert_eq!(r[0], f64::INFINITY);
        assert!(eoc(&[0.1, 0.1], &[0.1, 0.0]).is_err());
        assert!(eoc(&[0.1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn table_rates() {
        let mut t = ConvergenceTable::new(vec![Var::H, Var::U]);
        t.push(10, 10, 0.2, vec![0.4, 0.1], None).unwrap();
        t.push(20, 20, 0.1, vec![0.1, 0.05], None).unwrap();
        assert!((t.finest_eoc(Var::H).unwrap() - 2.0).abs() < 1e-14);
        assert!((t.finest_eoc(Var::U).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(t.rows[0].eoc, vec![None, None]);
        assert!(t.push(15, 15, 0.15, vec![0.1, 0.1], None).is_err());
        assert_eq!(t.finest_eoc(Var::W), None);
    }

    #[test]
    fn zero_tendency_zero_rate() {
        let (g, ops) = unit_ops(6);
        let phys = PhysSetup::new(9.81, 500.0, g.sample(|x, y| 0.1 * x * y)).unwrap();
        let n = g.len();
        let h = vec![1.0; n];
        let u = g.sample(|x, _| x);
        let state = StateField::from_fields(&h, &u, &u, &u, &h, g.nx, g.ny).unwrap();
        let zero = StateField::zeros(g.nx, g.ny);
        assert_eq!(energy_rate(&state, &zero, &phys, &ops).unwrap(), 0.0);
        assert_eq!(shallow_water_energy_rate(&state, &zero, &phys, &ops).unwrap(), 0.0);
    }

    #[test]
    fn rate_rejects_dry_state() {
        let (g, ops) = unit_ops(5);
        let phys = PhysSetup::flat(9.81, 1.0, &g).unwrap();
        let state = StateField::zeros(g.nx, g.ny);
        assert!(matches!(
            energy_rate(&state, &state, &phys, &ops),
            Err(Error::NonPositiveDepth { .. })
        ));
    }
}

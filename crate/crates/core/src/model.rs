//! Prognostic state, constitutive relations and conserved functionals of the
//! hyperbolic Serre-Green-Naghdi system.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D};
use crate::num::{c, Real};
use crate::sbp::Operators2D;

/// Default positivity floor; depths at or below it abort a run.
pub const DEFAULT_H_FLOOR: f64 = 1e-12;

/// The five prognostic variables, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    H,
    U,
    V,
    W,
    Eta,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::H, Var::U, Var::V, Var::W, Var::Eta];

    pub fn name(self) -> &'static str {
        match self {
            Var::H => "h",
            Var::U => "u",
            Var::V => "v",
            Var::W => "w",
            Var::Eta => "eta",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

/// `(h, u, v, w, eta)` on a shared grid, stored contiguously so that the time
/// integrator can treat the whole state as one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField<T> {
    nx: usize,
    ny: usize,
    data: Vec<T>,
}

impl<T: Real> StateField<T> {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            data: vec![T::zero(); 5 * nx * ny],
        }
    }

    pub fn from_fields(
        h: &[T],
        u: &[T],
        v: &[T],
        w: &[T],
        eta: &[T],
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        let n = nx * ny;
        let mut data = Vec::with_capacity(5 * n);
        for f in [h, u, v, w, eta] {
            if f.len() != n {
                return Err(Error::SizeMismatch {
                    expected: n,
                    got: f.len(),
                });
            }
            data.extend_from_slice(f);
        }
        Ok(Self { nx, ny, data })
    }

    pub fn from_vec(nx: usize, ny: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != 5 * nx * ny {
            return Err(Error::SizeMismatch {
                expected: 5 * nx * ny,
                got: data.len(),
            });
        }
        Ok(Self { nx, ny, data })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Nodes per variable.
    pub fn nodes(&self) -> usize {
        self.nx * self.ny
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn var(&self, v: Var) -> &[T] {
        let n = self.nodes();
        &self.data[v.slot() * n..(v.slot() + 1) * n]
    }

    pub fn var_mut(&mut self, v: Var) -> &mut [T] {
        let n = self.nodes();
        &mut self.data[v.slot() * n..(v.slot() + 1) * n]
    }

    pub fn field(&self, v: Var) -> Field<T> {
        Field::from_vec(self.nx, self.ny, self.var(v).to_vec()).expect("shape is consistent")
    }

    pub fn h(&self) -> &[T] {
        self.var(Var::H)
    }

    pub fn u(&self) -> &[T] {
        self.var(Var::U)
    }

    pub fn v(&self) -> &[T] {
        self.var(Var::V)
    }

    pub fn w(&self) -> &[T] {
        self.var(Var::W)
    }

    pub fn eta(&self) -> &[T] {
        self.var(Var::Eta)
    }
}

/// Splits a flat state vector into its five variable slices.
pub fn split<T>(data: &[T]) -> [&[T]; 5] {
    let n = data.len() / 5;
    let (h, rest) = data.split_at(n);
    let (u, rest) = rest.split_at(n);
    let (v, rest) = rest.split_at(n);
    let (w, eta) = rest.split_at(n);
    [h, u, v, w, eta]
}

pub fn split_mut<T>(data: &mut [T]) -> [&mut [T]; 5] {
    let n = data.len() / 5;
    let (h, rest) = data.split_at_mut(n);
    let (u, rest) = rest.split_at_mut(n);
    let (v, rest) = rest.split_at_mut(n);
    let (w, eta) = rest.split_at_mut(n);
    [h, u, v, w, eta]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysSetup<T> {
    pub g: T,
    /// Relaxation parameter; zero gives the shallow-water limit.
    pub lambda: T,
    /// Bathymetry at the nodes, fixed for the whole run.
    pub b: Field<T>,
}

impl<T: Real> PhysSetup<T> {
    pub fn new(g: T, lambda: T, b: Field<T>) -> Result<Self> {
        if !(g > T::zero()) || !g.is_finite() {
            return Err(Error::InvalidParameter(format!("g must be positive, got {g}")));
        }
        if !(lambda >= T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        Ok(Self { g, lambda, b })
    }

    pub fn flat(g: T, lambda: T, grid: &Grid2D<T>) -> Result<Self> {
        Self::new(g, lambda, Field::zeros(grid.nx, grid.ny))
    }
}

/// `p(h, eta) = (lambda/3) (eta/h) (1 - eta/h)`.
pub fn pressure<T: Real>(h: T, eta: T, lambda: T) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::NonPositiveDepth {
            index: 0,
            h: h.to_f64_lossy(),
        });
    }
    let r = eta / h;
    Ok(lambda / c(3.0) * r * (T::one() - r))
}

/// Pointwise energy density
/// `h ((u^2 + v^2)/2 + w^2/6 + (g/2)(h + 2b) + (lambda/6)(eta/h - 1)^2)`.
#[inline]
pub fn energy_density_at<T: Real>(h: T, u: T, v: T, w: T, eta: T, b: T, g: T, lambda: T) -> T {
    let r = eta / h - T::one();
    h * ((u * u + v * v) / c(2.0)
        + w * w / c(6.0)
        + g / c(2.0) * (h + c::<T>(2.0) * b)
        + lambda / c(6.0) * r * r)
}

pub fn energy_density<T: Real>(state: &StateField<T>, phys: &PhysSetup<T>) -> Result<Field<T>> {
    check_positive(state.h(), T::zero())?;
    expect_nodes(state, &phys.b)?;
    let [h, u, v, w, eta] = split(state.as_slice());
    let data = (0..state.nodes())
        .map(|k| energy_density_at(h[k], u[k], v[k], w[k], eta[k], phys.b[k], phys.g, phys.lambda))
        .collect();
    Field::from_vec(state.nx(), state.ny(), data)
}

/// `1^T M E`.
pub fn total_energy<T: Real>(
    state: &StateField<T>,
    phys: &PhysSetup<T>,
    ops: &Operators2D<T>,
) -> Result<T> {
    ops.integrate(&energy_density(state, phys)?)
}

/// `1^T M h`.
pub fn total_mass<T: Real>(state: &StateField<T>, ops: &Operators2D<T>) -> Result<T> {
    ops.integrate(state.h())
}

/// Auxiliary variables consistent with the SGN limit:
/// `eta = h`, `w = -h (D_x u + D_y v) + (3/2)(u D_x b + v D_y b)`.
pub fn init_auxiliary<T: Real>(
    h: &[T],
    u: &[T],
    v: &[T],
    b: &[T],
    ops: &Operators2D<T>,
) -> Result<(Field<T>, Field<T>)> {
    check_positive(h, T::zero())?;
    let n = ops.len();
    for f in [u, v, b] {
        if f.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                got: f.len(),
            });
        }
    }
    let mut dxu = vec![T::zero(); n];
    let mut dyv = vec![T::zero(); n];
    let mut dxb = vec![T::zero(); n];
    let mut dyb = vec![T::zero(); n];
    ops.dx_into(u, &mut dxu)?;
    ops.dy_into(v, &mut dyv)?;
    ops.dx_into(b, &mut dxb)?;
    ops.dy_into(b, &mut dyb)?;
    let w = (0..n)
        .map(|k| -h[k] * (dxu[k] + dyv[k]) + c::<T>(1.5) * (u[k] * dxb[k] + v[k] * dyb[k]))
        .collect();
    let (nx, ny) = (ops.nx(), ops.ny());
    Ok((Field::from_vec(nx, ny, h.to_vec())?, Field::from_vec(nx, ny, w)?))
}

/// Builds a full state from `(h, u, v)` using [`init_auxiliary`].
pub fn state_from_primitives<T: Real>(
    h: &[T],
    u: &[T],
    v: &[T],
    b: &[T],
    ops: &Operators2D<T>,
) -> Result<StateField<T>> {
    let (eta, w) = init_auxiliary(h, u, v, b, ops)?;
    StateField::from_fields(h, u, v, &w, &eta, ops.nx(), ops.ny())
}

/// Partial derivatives of the energy density with respect to each variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPartials<T> {
    pub dh: T,
    pub du: T,
    pub dv: T,
    pub dw: T,
    pub deta: T,
}

#[inline]
pub fn energy_partials<T: Real>(h: T, u: T, v: T, w: T, eta: T, b: T, g: T, lambda: T) -> EnergyPartials<T> {
    let r = eta / h;
    EnergyPartials {
        dh: u * u / c(2.0)
            + v * v / c(2.0)
            + w * w / c(6.0)
            + g * h
            + g * b
            + lambda / c(6.0) * (T::one() - r * r),
        du: h * u,
        dv: h * v,
        dw: h * w / c(3.0),
        deta: -lambda / c(3.0) * (T::one() - r),
    }
}

/// Fails on the first node with `h <= floor`.
pub fn check_positive<T: Real>(h: &[T], floor: T) -> Result<()> {
    match h.iter().position(|&v| !(v > floor)) {
        Some(index) => Err(Error::NonPositiveDepth {
            index,
            h: h[index].to_f64_lossy(),
        }),
        None => Ok(()),
    }
}

fn expect_nodes<T: Real>(state: &StateField<T>, f: &[T]) -> Result<()> {
    if f.len() != state.nodes() {
        return Err(Error::SizeMismatch {
            expected: state.nodes(),
            got: f.len(),
        });
    }
    Ok(())
}

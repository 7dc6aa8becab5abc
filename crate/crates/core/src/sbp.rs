//! Summation-by-parts first-derivative operators.
//!
//! A one-dimensional operator is described by data: an interior stencil,
//! boundary closure rows for the bounded flavor and the diagonal of the mass
//! matrix `M`. The derivative matrix `D` is stored sparsely and applied
//! matrix-free; dense assembly is only used for verification.
//!
//! Periodic operators satisfy `M D + D^T M = 0`, bounded operators
//! `M D + D^T M = e_R e_R^T - e_L e_L^T`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid2D, MIN_NODES};
use crate::num::Real;

/// Below this many nodes the kernels run on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Periodic,
    Bounded,
}

/// Coefficients of an SBP operator in units of `1 / spacing`.
#[derive(Debug, Clone)]
pub struct StencilSpec {
    /// `(offset, coefficient)` pairs of the interior stencil.
    pub interior: &'static [(isize, f64)],
    /// Leading rows of the bounded operator. Trailing rows follow by
    /// antisymmetry, `D[n-1-r][n-1-c] = -D[r][c]`.
    pub closure: &'static [&'static [f64]],
    /// Leading mass weights of the bounded operator in units of `spacing`;
    /// all remaining interior weights are one.
    pub closure_weights: &'static [f64],
}

/// Central differences in the interior, first-order one-sided closures and
/// trapezoidal weights at the boundaries.
pub const SECOND_ORDER: StencilSpec = StencilSpec {
    interior: &[(-1, -0.5), (1, 0.5)],
    closure: &[&[-1.0, 1.0]],
    closure_weights: &[0.5],
};

#[derive(Debug, Clone)]
pub struct SbpOperator1D<T> {
    kind: OperatorKind,
    n: usize,
    spacing: T,
    mass_weights: Vec<T>,
    /// CSR storage of the full matrix.
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    /// Interior stencil with spacing applied, used for the fast path.
    interior: Vec<(isize, T)>,
    /// Rows `[first_interior, last_interior)` use `interior` without wrapping.
    first_interior: usize,
    last_interior: usize,
}

impl<T: Real> SbpOperator1D<T> {
    pub fn periodic(n: usize, spacing: T, spec: &StencilSpec) -> Result<Self> {
        check_nodes(n, spacing)?;
        let width = half_width(spec);
        if n < 2 * width + 1 {
            return Err(Error::TooFewNodes {
                min: 2 * width + 1,
                got: n,
            });
        }
        let inv = T::one() / spacing;
        let interior: Vec<(isize, T)> = spec
            .interior
            .iter()
            .map(|&(o, c)| (o, T::of(c) * inv))
            .collect();
        let rows = (0..n)
            .map(|i| {
                interior
                    .iter()
                    .map(|&(o, c)| ((i as isize + o).rem_euclid(n as isize) as usize, c))
                    .collect()
            })
            .collect();
        Ok(Self::assemble(
            OperatorKind::Periodic,
            n,
            spacing,
            vec![spacing; n],
            rows,
            interior,
            width,
            n - width,
        ))
    }

    pub fn bounded(n: usize, spacing: T, spec: &StencilSpec) -> Result<Self> {
        check_nodes(n, spacing)?;
        let width = half_width(spec);
        let closure_rows = spec.closure.len();
        let closure_cols = spec.closure.iter().map(|r| r.len()).max().unwrap_or(0);
        let edge = closure_rows.max(spec.closure_weights.len()).max(width);
        if n < 2 * edge.max(closure_cols) {
            return Err(Error::TooFewNodes {
                min: 2 * edge.max(closure_cols),
                got: n,
            });
        }
        let inv = T::one() / spacing;
        let interior: Vec<(isize, T)> = spec
            .interior
            .iter()
            .map(|&(o, c)| (o, T::of(c) * inv))
            .collect();

        let mut rows: Vec<Vec<(usize, T)>> = Vec::with_capacity(n);
        for i in 0..n {
            let row = if i < closure_rows {
                sparse_row(spec.closure[i], inv, |c| c, T::one())
            } else if i >= n - closure_rows {
                let r = n - 1 - i;
                sparse_row(spec.closure[r], inv, |c| n - 1 - c, -T::one())
            } else {
                interior
                    .iter()
                    .map(|&(o, c)| ((i as isize + o) as usize, c))
                    .collect()
            };
            rows.push(row);
        }

        let mut weights = vec![spacing; n];
        for (k, &w) in spec.closure_weights.iter().enumerate() {
            weights[k] = T::of(w) * spacing;
            weights[n - 1 - k] = T::of(w) * spacing;
        }

        Ok(Self::assemble(
            OperatorKind::Bounded,
            n,
            spacing,
            weights,
            rows,
            interior,
            closure_rows.max(width),
            n - closure_rows.max(width),
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: OperatorKind,
        n: usize,
        spacing: T,
        mass_weights: Vec<T>,
        rows: Vec<Vec<(usize, T)>>,
        interior: Vec<(isize, T)>,
        first_interior: usize,
        last_interior: usize,
    ) -> Self {
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for row in rows {
            for (c, v) in row {
                if v != T::zero() {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self {
            kind,
            n,
            spacing,
            mass_weights,
            row_start,
            cols,
            vals,
            interior,
            first_interior,
            last_interior,
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn mass_weights(&self) -> &[T] {
        &self.mass_weights
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let range = self.row_start[i]..self.row_start[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// `out = D u` for a single line of `n` values.
    pub fn apply(&self, u: &[T], out: &mut [T]) -> Result<()> {
        expect_len(self.n, u.len())?;
        expect_len(self.n, out.len())?;
        self.apply_line(u, out);
        Ok(())
    }

    #[inline]
    pub(crate) fn apply_line(&self, u: &[T], out: &mut [T]) {
        for i in (0..self.first_interior).chain(self.last_interior..self.n) {
            out[i] = self.row(i).fold(T::zero(), |acc, (c, v)| acc + v * u[c]);
        }
        if let [(-1, a), (1, b)] = self.interior[..] {
            let lo = self.first_interior;
            let hi = self.last_interior;
            for (o, w) in out[lo..hi].iter_mut().zip(u[lo - 1..hi + 1].windows(3)) {
                *o = a * w[0] + b * w[2];
            }
            return;
        }
        for i in self.first_interior..self.last_interior {
            let mut acc = T::zero();
            for &(o, v) in &self.interior {
                acc = acc + v * u[(i as isize + o) as usize];
            }
            out[i] = acc;
        }
    }

    /// Dense `n x n` matrix, for verification at small sizes.
    pub fn dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(i) {
                row[c] = row[c] + v;
            }
        }
        d
    }

    /// Assembles `M D + D^T M` and compares it to the expected boundary matrix.
    pub fn check_sbp_property(&self) -> SbpCheck<T> {
        sbp_residual(&self.mass_weights, &self.dense(), self.kind)
    }
}

pub fn build_periodic_d1<T: Real>(n: usize, spacing: T) -> Result<SbpOperator1D<T>> {
    SbpOperator1D::periodic(n, spacing, &SECOND_ORDER)
}

pub fn build_bounded_d1<T: Real>(n: usize, spacing: T) -> Result<SbpOperator1D<T>> {
    SbpOperator1D::bounded(n, spacing, &SECOND_ORDER)
}

fn check_nodes<T: Real>(n: usize, spacing: T) -> Result<()> {
    if n < MIN_NODES {
        return Err(Error::TooFewNodes {
            min: MIN_NODES,
            got: n,
        });
    }
    if !(spacing > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    Ok(())
}

fn half_width(spec: &StencilSpec) -> usize {
    spec.interior
        .iter()
        .map(|&(o, _)| o.unsigned_abs())
        .max()
        .unwrap_or(0)
}

fn sparse_row<T: Real>(
    coeffs: &[f64],
    inv: T,
    col: impl Fn(usize) -> usize,
    sign: T,
) -> Vec<(usize, T)> {
    coeffs
        .iter()
        .enumerate()
        .map(|(c, &v)| (col(c), sign * T::of(v) * inv))
        .collect()
}

fn expect_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::SizeMismatch { expected, got });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbpCheck<T> {
    pub passes: bool,
    /// Max-norm distance between `M D + D^T M` and the expected matrix.
    pub residual: T,
    /// Largest magnitude among the entries of `M D`, the roundoff scale.
    pub scale: T,
}

/// Residual of the SBP identity for given mass weights and dense `D`.
///
/// Passes when the residual is at most `4 eps` times the largest entry of
/// `M D`.
pub fn sbp_residual<T: Real>(weights: &[T], d: &[Vec<T>], kind: OperatorKind) -> SbpCheck<T> {
    let n = weights.len();
    let mut residual = T::zero();
    let mut scale = T::zero();
    for i in 0..n {
        for j in 0..n {
            let md = weights[i] * d[i][j];
            scale = scale.max(md.abs());
            let entry = md + d[j][i] * weights[j];
            let expected = match kind {
                OperatorKind::Periodic => T::zero(),
                OperatorKind::Bounded if i == j && i == 0 => -T::one(),
                OperatorKind::Bounded if i == j && i == n - 1 => T::one(),
                OperatorKind::Bounded => T::zero(),
            };
            residual = residual.max((entry - expected).abs());
        }
    }
    let tol = T::of(4.0) * T::epsilon() * scale;
    SbpCheck {
        passes: residual <= tol,
        residual,
        scale,
    }
}

/// Tensor-product operators for a 2D grid.
#[derive(Debug, Clone)]
pub struct Operators2D<T> {
    pub x: SbpOperator1D<T>,
    pub y: SbpOperator1D<T>,
}

impl<T: Real> Operators2D<T> {
    /// Second-order operators matching the periodicity of each grid direction.
    pub fn for_grid(grid: &Grid2D<T>) -> Result<Self> {
        let x = if grid.periodic_x {
            build_periodic_d1(grid.nx, grid.dx)?
        } else {
            build_bounded_d1(grid.nx, grid.dx)?
        };
        let y = if grid.periodic_y {
            build_periodic_d1(grid.ny, grid.dy)?
        } else {
            build_bounded_d1(grid.ny, grid.dy)?
        };
        Ok(Self { x, y })
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn ny(&self) -> usize {
        self.y.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes `D_x u` into `out`, row by row.
    pub fn dx_into(&self, u: &[T], out: &mut [T]) -> Result<()> {
        expect_len(self.len(), u.len())?;
        expect_len(self.len(), out.len())?;
        let nx = self.nx();
        let op = &self.x;
        if u.len() >= PARALLEL_THRESHOLD {
            out.par_chunks_mut(nx)
                .zip(u.par_chunks(nx))
                .for_each(|(o, r)| op.apply_line(r, o));
        } else {
            out.chunks_mut(nx)
                .zip(u.chunks(nx))
                .for_each(|(o, r)| op.apply_line(r, o));
        }
        Ok(())
    }

    /// Writes `D_y u` into `out`; each output row combines whole input rows.
    pub fn dy_into(&self, u: &[T], out: &mut [T]) -> Result<()> {
        expect_len(self.len(), u.len())?;
        expect_len(self.len(), out.len())?;
        let nx = self.nx();
        let op = &self.y;
        let row = |j: usize, o: &mut [T]| {
            o.iter_mut().for_each(|v| *v = T::zero());
            for (k, c) in op.row(j) {
                let src = &u[k * nx..(k + 1) * nx];
                for (v, &s) in o.iter_mut().zip(src) {
                    *v = *v + c * s;
                }
            }
        };
        if u.len() >= PARALLEL_THRESHOLD {
            out.par_chunks_mut(nx)
                .enumerate()
                .for_each(|(j, o)| row(j, o));
        } else {
            out.chunks_mut(nx).enumerate().for_each(|(j, o)| row(j, o));
        }
        Ok(())
    }

    pub fn apply_dx(&self, u: &Field<T>) -> Result<Field<T>> {
        let mut out = Field::zeros(self.nx(), self.ny());
        self.dx_into(u, &mut out)?;
        Ok(out)
    }

    pub fn apply_dy(&self, u: &Field<T>) -> Result<Field<T>> {
        let mut out = Field::zeros(self.nx(), self.ny());
        self.dy_into(u, &mut out)?;
        Ok(out)
    }

    /// Discrete integral `1^T M u` with the tensor-product mass matrix.
    pub fn integrate(&self, u: &[T]) -> Result<T> {
        mass_weighted_sum(self.x.mass_weights(), self.y.mass_weights(), u)
    }

    pub fn boundary_ops(&self) -> BoundaryOps<T> {
        BoundaryOps::new(&self.x, &self.y)
    }
}

/// `sum_{i,j} m_x(i) m_y(j) u(i, j)`.
pub fn mass_weighted_sum<T: Real>(mx: &[T], my: &[T], u: &[T]) -> Result<T> {
    expect_len(mx.len() * my.len(), u.len())?;
    let nx = mx.len();
    Ok(u
        .chunks(nx)
        .zip(my)
        .map(|(row, &wy)| wy * row.iter().zip(mx).map(|(&v, &wx)| wx * v).sum::<T>())
        .sum())
}

/// Inverse boundary weights of one bounded direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePair<T> {
    /// `1 / m_0`, applied with outer normal `-1`.
    pub inv_weight_low: T,
    /// `1 / m_{n-1}`, applied with outer normal `+1`.
    pub inv_weight_high: T,
}

/// Restriction to the boundary faces and lifting back with `M^{-1} R^T B N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOps<T> {
    nx: usize,
    ny: usize,
    pub x: Option<FacePair<T>>,
    pub y: Option<FacePair<T>>,
}

impl<T: Real> BoundaryOps<T> {
    pub fn new(x: &SbpOperator1D<T>, y: &SbpOperator1D<T>) -> Self {
        let faces = |op: &SbpOperator1D<T>| match op.kind() {
            OperatorKind::Periodic => None,
            OperatorKind::Bounded => Some(FacePair {
                inv_weight_low: T::one() / op.mass_weights()[0],
                inv_weight_high: T::one() / op.mass_weights()[op.len() - 1],
            }),
        };
        Self {
            nx: x.len(),
            ny: y.len(),
            x: faces(x),
            y: faces(y),
        }
    }

    pub fn is_active(&self) -> bool {
        self.x.is_some() || self.y.is_some()
    }

    /// Adds `M^{-1} R^T B N_x R(hu) + M^{-1} R^T B N_y R(hv)` to `out`.
    ///
    /// Only boundary nodes change; corners receive both contributions.
    pub fn add_sat_mass_term(&self, hu: &[T], hv: &[T], out: &mut [T]) -> Result<()> {
        let len = self.nx * self.ny;
        expect_len(len, hu.len())?;
        expect_len(len, hv.len())?;
        expect_len(len, out.len())?;
        let (nx, ny) = (self.nx, self.ny);
        if let Some(f) = self.x {
            for j in 0..ny {
                let lo = j * nx;
                let hi = lo + nx - 1;
                out[lo] = out[lo] - f.inv_weight_low * hu[lo];
                out[hi] = out[hi] + f.inv_weight_high * hu[hi];
            }
        }
        if let Some(f) = self.y {
            let top = (ny - 1) * nx;
            for i in 0..nx {
                out[i] = out[i] - f.inv_weight_low * hv[i];
                out[top + i] = out[top + i] + f.inv_weight_high * hv[top + i];
            }
        }
        Ok(())
    }

    /// [`Self::add_sat_mass_term`] with the fluxes `hu`, `hv` formed from the
    /// primitive fields at the boundary nodes only.
    pub fn add_sat_from_primitives(&self, h: &[T], u: &[T], v: &[T], out: &mut [T]) -> Result<()> {
        let len = self.nx * self.ny;
        for s in [h, u, v, &*out] {
            expect_len(len, s.len())?;
        }
        let (nx, ny) = (self.nx, self.ny);
        if let Some(f) = self.x {
            for j in 0..ny {
                let lo = j * nx;
                let hi = lo + nx - 1;
                out[lo] = out[lo] - f.inv_weight_low * (h[lo] * u[lo]);
                out[hi] = out[hi] + f.inv_weight_high * (h[hi] * u[hi]);
            }
        }
        if let Some(f) = self.y {
            let top = (ny - 1) * nx;
            for i in 0..nx {
                let k = top + i;
                out[i] = out[i] - f.inv_weight_low * (h[i] * v[i]);
                out[k] = out[k] + f.inv_weight_high * (h[k] * v[k]);
            }
        }
        Ok(())
    }

    /// The SAT grid function on its own; identically zero on periodic grids.
    pub fn sat_mass_term(&self, hu: &Field<T>, hv: &Field<T>) -> Result<Field<T>> {
        let mut out = Field::zeros(self.nx, self.ny);
        self.add_sat_mass_term(hu, hv, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(nx: usize, ny: usize, periodic: bool, r: (f64, f64)) -> Grid2D<f64> {
        Grid2D::new(r, r, nx, ny, periodic, periodic).unwrap()
    }

    #[test]
    fn periodic_wraparound_stencil() {
        let op = build_periodic_d1(4, 0.25).unwrap();
        let mut out = [0.0; 4];
        op.apply(&[0.0, 1.0, 0.0, -1.0], &mut out).unwrap();
        assert_eq!(out, [4.0, 0.0, -4.0, 0.0]);
    }

    #[test]
    fn constants_are_annihilated() {
        for n in [4, 7, 16] {
            for op in [
                build_periodic_d1(n, 0.3).unwrap(),
                build_bounded_d1(n, 0.3).unwrap(),
            ] {
                let mut out = vec![1.0; n];
                op.apply(&vec![2.5; n], &mut out).unwrap();
                assert!(out.iter().all(|&v| v == 0.0), "{out:?}");
            }
        }
    }

    #[test]
    fn bounded_exact_for_linears() {
        let op = build_bounded_d1(5, 0.5).unwrap();
        let x = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let mut out = [0.0; 5];
        op.apply(&x, &mut out).unwrap();
        assert_eq!(out, [1.0; 5]);
    }

    #[test]
    fn periodic_sbp_identity_is_zero_matrix() {
        let op = build_periodic_d1(6, 0.1).unwrap();
        let check = op.check_sbp_property();
        assert_eq!(check.residual, 0.0);
        assert!(check.passes);
    }

    #[test]
    fn bounded_sbp_identity_has_corner_entries_only() {
        let op = build_bounded_d1(5, 0.5).unwrap();
        let d = op.dense();
        let w = op.mass_weights();
        for i in 0..5 {
            for j in 0..5 {
                let e = w[i] * d[i][j] + d[j][i] * w[j];
                let expected = match (i, j) {
                    (0, 0) => -1.0,
                    (4, 4) => 1.0,
                    _ => 0.0,
                };
                assert_eq!(e, expected, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn bounded_mass_weights() {
        let op = build_bounded_d1(4, 1.0).unwrap();
        assert_eq!(op.mass_weights(), &[0.5, 1.0, 1.0, 0.5]);
        let op = build_periodic_d1(4, 0.2).unwrap();
        assert_eq!(op.mass_weights(), &[0.2; 4]);
    }

    #[test]
    fn check_passes_for_n8_and_detects_corruption() {
        for op in [
            build_periodic_d1(8, 0.125).unwrap(),
            build_bounded_d1(8, 0.125).unwrap(),
        ] {
            let check = op.check_sbp_property();
            assert!(check.passes);
            assert_eq!(check.residual, 0.0);

            let mut w = op.mass_weights().to_vec();
            w[3] *= 1.1;
            let bad = sbp_residual(&w, &op.dense(), op.kind());
            assert!(!bad.passes);
            assert!(bad.residual > 0.0);
        }
    }

    #[test]
    fn too_few_nodes() {
        assert!(matches!(
            build_periodic_d1(3, 0.1),
            Err(Error::TooFewNodes { .. })
        ));
        assert!(build_bounded_d1(2, 0.1).is_err());
        assert!(build_bounded_d1(8, -0.1).is_err());
    }

    #[test]
    fn fourier_mode_symbol() {
        // D exp(ikx) = i sin(k dx)/dx exp(ikx) for the periodic operator.
        let n = 32;
        let dx = 1.0 / n as f64;
        let k = 2.0 * std::f64::consts::PI * 3.0;
        let op = build_periodic_d1(n, dx).unwrap();
        let re: Vec<f64> = (0..n).map(|i| (k * i as f64 * dx).cos()).collect();
        let im: Vec<f64> = (0..n).map(|i| (k * i as f64 * dx).sin()).collect();
        let (mut dre, mut dim) = (vec![0.0; n], vec![0.0; n]);
        op.apply(&re, &mut dre).unwrap();
        op.apply(&im, &mut dim).unwrap();
        let sym = (k * dx).sin() / dx;
        for i in 0..n {
            // i*sym*(re + i im) = -sym*im + i sym*re
            assert_abs_diff_eq!(dre[i], -sym * im[i], epsilon = 1e-12);
            assert_abs_diff_eq!(dim[i], sym * re[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn tensor_derivatives() {
        let g = grid(5, 6, false, (0.0, 1.0));
        let ops = Operators2D::for_grid(&g).unwrap();
        let fx = g.sample(|x, _| 3.0 * x - 1.0);
        let fy = g.sample(|_, y| 2.0 * y);
        let dx = ops.apply_dx(&fx).unwrap();
        let dy = ops.apply_dy(&fy).unwrap();
        for v in dx.iter() {
            assert_abs_diff_eq!(*v, 3.0, epsilon = 1e-13);
        }
        for v in dy.iter() {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-13);
        }
        assert!(ops.apply_dy(&fx).unwrap().iter().all(|v| v.abs() < 1e-14));
        assert!(ops.apply_dx(&fy).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn periodic_sine_rows() {
        let g = Grid2D::new((0.0, 1.0), (0.0, 1.0), 4, 4, true, true).unwrap();
        let ops = Operators2D::for_grid(&g).unwrap();
        let f = g.sample(|x, _| (2.0 * std::f64::consts::PI * x).sin());
        let d = ops.apply_dx(&f).unwrap();
        for j in 0..4 {
            let row: Vec<f64> = (0..4).map(|i| d.at(i, j)).collect();
            let expected = [4.0, 0.0, -4.0, 0.0];
            for (a, b) in row.iter().zip(expected) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
            }
        }
        // dy mirrors dx with the roles swapped
        let ft = g.sample(|_, y| (2.0 * std::f64::consts::PI * y).sin());
        let dt = ops.apply_dy(&ft).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(dt.at(i, 0), 4.0, epsilon = 1e-14);
            assert_abs_diff_eq!(dt.at(i, 2), -4.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn size_mismatch_is_reported() {
        let g = grid(5, 5, true, (0.0, 1.0));
        let ops = Operators2D::for_grid(&g).unwrap();
        let bad = Field::zeros(4, 5);
        assert!(matches!(
            ops.apply_dx(&bad),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(ops.integrate(&bad).is_err());
    }

    #[test]
    fn quadrature() {
        let g = grid(7, 9, true, (0.0, 1.0));
        let ops = Operators2D::for_grid(&g).unwrap();
        assert_abs_diff_eq!(ops.integrate(&Field::constant(7, 9, 1.0)).unwrap(), 1.0, epsilon = 1e-14);

        let g = grid(11, 6, false, (-1.0, 1.0));
        let ops = Operators2D::for_grid(&g).unwrap();
        assert_abs_diff_eq!(ops.integrate(&Field::constant(11, 6, 2.0)).unwrap(), 8.0, epsilon = 1e-13);

        let g = grid(9, 5, false, (0.0, 1.0));
        let ops = Operators2D::for_grid(&g).unwrap();
        let f = g.sample(|x, _| x);
        assert_abs_diff_eq!(ops.integrate(&f).unwrap(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn sat_values() {
        let g = Grid2D::new((0.0, 0.4), (0.0, 0.4), 5, 5, false, false).unwrap();
        let ops = Operators2D::for_grid(&g).unwrap();
        let b = ops.boundary_ops();
        let hu = Field::constant(5, 5, 3.0);
        let hv = Field::zeros(5, 5);
        let s = b.sat_mass_term(&hu, &hv).unwrap();
        assert_abs_diff_eq!(s.at(0, 2), -60.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.at(4, 2), 60.0, epsilon = 1e-12);
        assert_eq!(s.at(2, 2), 0.0);
        assert_eq!(s.at(2, 0), 0.0);

        let hu = Field::constant(5, 5, 1.0);
        let hv = Field::constant(5, 5, 2.0);
        let s = b.sat_mass_term(&hu, &hv).unwrap();
        assert_abs_diff_eq!(s.at(0, 0), -60.0, epsilon = 1e-12);
        for j in 1..4 {
            for i in 1..4 {
                assert_eq!(s.at(i, j), 0.0);
            }
        }
    }

    #[test]
    fn sat_vanishes_on_periodic_grid() {
        let g = grid(6, 6, true, (0.0, 1.0));
        let ops = Operators2D::for_grid(&g).unwrap();
        let b = ops.boundary_ops();
        assert!(!b.is_active());
        let one = Field::constant(6, 6, 1.0);
        assert!(b.sat_mass_term(&one, &one).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn large_fields_match_serial_path() {
        // Crosses the parallel threshold; results must be bit-identical.
        let g = Grid2D::new((0.0, 1.0), (0.0, 1.0), 160, 128, false, true).unwrap();
        let ops = Operators2D::for_grid(&g).unwrap();
        let f = g.sample(|x: f64, y: f64| (7.0 * x).sin() * (3.0 * y).cos() + x * x);
        let d = ops.apply_dx(&f).unwrap();
        let e = ops.apply_dy(&f).unwrap();
        for j in 0..g.ny {
            let mut row = vec![0.0; g.nx];
            ops.x.apply(&f[j * g.nx..(j + 1) * g.nx], &mut row).unwrap();
            assert_eq!(&d[j * g.nx..(j + 1) * g.nx], &row[..]);
        }
        for i in 0..g.nx {
            let col: Vec<f64> = (0..g.ny).map(|j| f.at(i, j)).collect();
            let mut out = vec![0.0; g.ny];
            ops.y.apply(&col, &mut out).unwrap();
            for j in 0..g.ny {
                assert_eq!(e.at(i, j), out[j]);
            }
        }
    }
}

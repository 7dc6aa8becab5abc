//! Split-form semidiscretization of the hyperbolic SGN system.
//!
//! Every tendency is assembled term by term in the skew-symmetric split form
//! that makes the discrete energy `1^T M E` a conserved quantity:
//!
//! ```text
//! h_t    = -(u D_x h + h D_x u + v D_y h + h D_y v) [+ SAT]
//! h u_t  = -( g D_x(h(h+b)) - g(h+b) D_x h + 1/2 h D_x(u^2) - 1/2 u^2 D_x h
//!           + 1/2 u D_x(hu) - 1/2 hu D_x u + 1/2 D_y(huv) - 1/2 uv D_y h
//!           + 1/2 hv D_y u - 1/2 hu D_y v + lambda/6 eta^2/h^2 D_x h
//!           + lambda/3 D_x eta - lambda/3 eta/h D_x eta - lambda/6 D_x(eta^2/h)
//!           + lambda/2 (1 - eta/h) D_x b )
//! h w_t  = lambda (1 - eta/h) - ( 1/2 D_x(huw) + 1/2 hu D_x w - 1/2 uw D_x h
//!           - 1/2 hw D_x u + [same in y] )
//! eta_t  = w - u D_x eta - v D_y eta - 3/2 u D_x b - 3/2 v D_y b
//! ```
//!
//! and symmetrically for `h v_t`. Reflecting walls add the mass SAT
//! `M^{-1} R^T B N R (hu, hv)` to `h_t` only.

use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::{check_positive, split, split_mut, PhysSetup, StateField, DEFAULT_H_FLOOR};
use crate::num::{c, Real};
use crate::sbp::{BoundaryOps, OperatorKind, Operators2D};

const PARALLEL_THRESHOLD: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    /// Solid wall imposed weakly through the mass SAT.
    Reflecting,
}

impl BoundaryKind {
    pub fn is_periodic(self) -> bool {
        self == BoundaryKind::Periodic
    }
}

/// Pointwise tendencies `(h, u, v, w, eta)` added to the right-hand side,
/// e.g. for manufactured solutions.
pub trait SourceTerms<T: Real>: Send + Sync {
    fn eval(&self, t: T, x: T, y: T) -> [T; 5];

    /// Adds the sources at every node of `grid` to the flat tendency `dq`.
    /// Override to reuse work that does not depend on `t`.
    fn add_to(&self, t: T, grid: &Grid2D<T>, dq: &mut [T]) {
        add_pointwise(dq, t, grid, self);
    }
}

impl<T: Real, F> SourceTerms<T> for F
where
    F: Fn(T, T, T) -> [T; 5] + Send + Sync,
{
    fn eval(&self, t: T, x: T, y: T) -> [T; 5] {
        self(t, x, y)
    }
}

/// Everything the right-hand side needs besides the state.
#[derive(Clone)]
pub struct RhsContext<T> {
    pub grid: Grid2D<T>,
    pub ops: Operators2D<T>,
    pub boundary: BoundaryOps<T>,
    pub phys: PhysSetup<T>,
    pub sources: Option<Arc<dyn SourceTerms<T>>>,
    /// Tendencies abort once any `h` is at or below this value.
    pub h_floor: T,
    dxb: Vec<T>,
    dyb: Vec<T>,
}

impl<T: std::fmt::Debug> std::fmt::Debug for RhsContext<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RhsContext")
            .field("grid", &self.grid)
            .field("g", &self.phys.g)
            .field("lambda", &self.phys.lambda)
            .field("sources", &self.sources.is_some())
            .finish()
    }
}

impl<T: Real> RhsContext<T> {
    /// Operators follow the grid: periodic directions get periodic operators,
    /// bounded directions get bounded operators with reflecting SATs.
    pub fn new(grid: &Grid2D<T>, phys: PhysSetup<T>) -> Result<Self> {
        let ops = Operators2D::for_grid(grid)?;
        if phys.b.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                got: phys.b.len(),
            });
        }
        let mut dxb = vec![T::zero(); grid.len()];
        let mut dyb = vec![T::zero(); grid.len()];
        ops.dx_into(&phys.b, &mut dxb)?;
        ops.dy_into(&phys.b, &mut dyb)?;
        let boundary = ops.boundary_ops();
        Ok(Self {
            grid: grid.clone(),
            ops,
            boundary,
            phys,
            sources: None,
            h_floor: T::of(DEFAULT_H_FLOOR),
            dxb,
            dyb,
        })
    }

    pub fn with_sources(mut self, sources: Arc<dyn SourceTerms<T>>) -> Self {
        self.sources = Some(sources);
        self
    }

    pub fn boundary_x(&self) -> BoundaryKind {
        kind_of(self.ops.x.kind())
    }

    pub fn boundary_y(&self) -> BoundaryKind {
        kind_of(self.ops.y.kind())
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    /// `D_x b` and `D_y b`, computed once with the SBP operators.
    pub fn bathymetry_gradient(&self) -> (&[T], &[T]) {
        (&self.dxb, &self.dyb)
    }
}

fn kind_of(k: OperatorKind) -> BoundaryKind {
    match k {
        OperatorKind::Periodic => BoundaryKind::Periodic,
        OperatorKind::Bounded => BoundaryKind::Reflecting,
    }
}

/// Nodes per strip; sized so one strip's workspace stays in cache.
const STRIP_NODES: usize = 4096;

/// A band of grid rows evaluated together.
#[derive(Debug, Clone)]
struct Strip<T> {
    j0: usize,
    j1: usize,
    /// Sorted rows whose products the strip reads, including `j0..j1`.
    rows: Vec<usize>,
    /// Position of row `j0` in `rows`.
    own: usize,
    /// y-stencil of each strip row as `(position in rows, row, coefficient)`.
    stencil: Vec<Vec<(usize, usize, T)>>,
}

fn plan_strips<T: Real>(ops: &Operators2D<T>) -> Vec<Strip<T>> {
    let (nx, ny) = (ops.nx(), ops.ny());
    let height = (STRIP_NODES / nx).clamp(1, ny);
    (0..ny)
        .step_by(height)
        .map(|j0| {
            let j1 = (j0 + height).min(ny);
            let mut rows: Vec<usize> = (j0..j1)
                .flat_map(|j| ops.y.row(j).map(|(m, _)| m))
                .chain(j0..j1)
                .collect();
            rows.sort_unstable();
            rows.dedup();
            let pos = |m: usize| rows.binary_search(&m).expect("row in plan");
            let stencil = (j0..j1)
                .map(|j| ops.y.row(j).map(|(m, c)| (pos(m), m, c)).collect())
                .collect();
            Strip {
                j0,
                j1,
                own: pos(j0),
                rows,
                stencil,
            }
        })
        .collect()
}

/// Per-thread buffers for one strip: products over the strip's `rows`, and
/// derivatives over the strip itself.
#[derive(Debug, Clone)]
struct Workspace<T> {
    hhb: Vec<T>,
    u2: Vec<T>,
    v2: Vec<T>,
    hu: Vec<T>,
    hv: Vec<T>,
    huv: Vec<T>,
    e2h: Vec<T>,
    huw: Vec<T>,
    hvw: Vec<T>,
    dxh: Vec<T>,
    dxu: Vec<T>,
    dxv: Vec<T>,
    dxw: Vec<T>,
    dxeta: Vec<T>,
    dx_hhb: Vec<T>,
    dx_u2: Vec<T>,
    dx_hu: Vec<T>,
    dx_huv: Vec<T>,
    dx_e2h: Vec<T>,
    dx_huw: Vec<T>,
    dyh: Vec<T>,
    dyu: Vec<T>,
    dyv: Vec<T>,
    dyw: Vec<T>,
    dyeta: Vec<T>,
    dy_hhb: Vec<T>,
    dy_v2: Vec<T>,
    dy_hv: Vec<T>,
    dy_huv: Vec<T>,
    dy_e2h: Vec<T>,
    dy_hvw: Vec<T>,
}

impl<T: Real> Workspace<T> {
    fn new(product_len: usize, strip_len: usize) -> Self {
        let p = || vec![T::zero(); product_len];
        let d = || vec![T::zero(); strip_len];
        Self {
            hhb: p(),
            u2: p(),
            v2: p(),
            hu: p(),
            hv: p(),
            huv: p(),
            e2h: p(),
            huw: p(),
            hvw: p(),
            dxh: d(),
            dxu: d(),
            dxv: d(),
            dxw: d(),
            dxeta: d(),
            dx_hhb: d(),
            dx_u2: d(),
            dx_hu: d(),
            dx_huv: d(),
            dx_e2h: d(),
            dx_huw: d(),
            dyh: d(),
            dyu: d(),
            dyv: d(),
            dyw: d(),
            dyeta: d(),
            dy_hhb: d(),
            dy_v2: d(),
            dy_hv: d(),
            dy_huv: d(),
            dy_e2h: d(),
            dy_hvw: d(),
        }
    }
}

/// `out = sum c * src[row p]` over a y-stencil, row length `nx`.
#[inline]
fn combine_rows<T: Real>(out: &mut [T], src: &[T], nx: usize, stencil: &[(usize, usize, T)], local: bool) {
    out.iter_mut().for_each(|v| *v = T::zero());
    for &(p, m, c) in stencil {
        let r = if local { p } else { m };
        for (v, &s) in out.iter_mut().zip(&src[r * nx..(r + 1) * nx]) {
            *v = *v + c * s;
        }
    }
}

/// Right-hand side evaluator owning its scratch memory.
///
/// Evaluation is observationally pure: identical inputs give bit-identical
/// tendencies regardless of the rayon thread count.
#[derive(Debug)]
pub struct SgnRhs<T> {
    pub ctx: RhsContext<T>,
    strips: Vec<Strip<T>>,
    workspaces: Vec<Mutex<Workspace<T>>>,
}

impl<T: Real> Clone for SgnRhs<T> {
    fn clone(&self) -> Self {
        Self::new(self.ctx.clone())
    }
}

impl<T: Real> SgnRhs<T> {
    pub fn new(ctx: RhsContext<T>) -> Self {
        let strips = plan_strips(&ctx.ops);
        Self {
            ctx,
            strips,
            workspaces: Vec::new(),
        }
    }

    /// Writes the tendency of the flat state `q` into `dq`.
    pub fn eval(&mut self, t: T, q: &[T], dq: &mut [T]) -> Result<()> {
        let lambda = self.ctx.phys.lambda;
        self.eval_with_lambda(t, q, dq, lambda)
    }

    fn eval_with_lambda(&mut self, t: T, q: &[T], dq: &mut [T], lambda: T) -> Result<()> {
        let n = self.ctx.nodes();
        if q.len() != 5 * n {
            return Err(Error::SizeMismatch {
                expected: 5 * n,
                got: q.len(),
            });
        }
        if dq.len() != 5 * n {
            return Err(Error::SizeMismatch {
                expected: 5 * n,
                got: dq.len(),
            });
        }
        let [h, u, v, w, eta] = split(q);
        check_positive(h, self.ctx.h_floor)?;

        let parallel = n >= PARALLEL_THRESHOLD && self.strips.len() > 1;
        let workers = if parallel { rayon::current_num_threads() } else { 1 };
        if self.workspaces.len() < workers {
            let nx = self.ctx.grid.nx;
            let rows = self.strips.iter().map(|s| s.rows.len()).max().unwrap_or(0);
            let height = self.strips.iter().map(|s| s.j1 - s.j0).max().unwrap_or(0);
            self.workspaces
                .resize_with(workers, || Mutex::new(Workspace::new(rows * nx, height * nx)));
        }

        let ctx = &self.ctx;
        let nx = ctx.grid.nx;
        let height = self.strips[0].j1 - self.strips[0].j0;
        let fields = Fields { h, u, v, w, eta };
        let [ht, ut, vt, wt, et] = split_mut(dq);
        let workspaces = &self.workspaces;
        let strips = &self.strips;
        let run = |si: usize, out: [&mut [T]; 5]| {
            let slot = if parallel {
                rayon::current_thread_index().unwrap_or(0) % workspaces.len()
            } else {
                0
            };
            let mut ws = workspaces[slot].lock().unwrap_or_else(|e| e.into_inner());
            eval_strip(ctx, &strips[si], &fields, &mut ws, out, lambda);
        };
        let chunk = height * nx;
        if parallel {
            (
                ht.par_chunks_mut(chunk),
                ut.par_chunks_mut(chunk),
                vt.par_chunks_mut(chunk),
                wt.par_chunks_mut(chunk),
                et.par_chunks_mut(chunk),
            )
                .into_par_iter()
                .enumerate()
                .for_each(|(si, (a, b, c, d, e))| run(si, [a, b, c, d, e]));
        } else {
            for (si, ((((a, b), c), d), e)) in ht
                .chunks_mut(chunk)
                .zip(ut.chunks_mut(chunk))
                .zip(vt.chunks_mut(chunk))
                .zip(wt.chunks_mut(chunk))
                .zip(et.chunks_mut(chunk))
                .enumerate()
            {
                run(si, [a, b, c, d, e]);
            }
        }

        if ctx.boundary.is_active() {
            ctx.boundary.add_sat_from_primitives(h, u, v, ht)?;
        }
        if let Some(src) = &ctx.sources {
            add_sources(dq, t, &ctx.grid, src.as_ref());
        }
        Ok(())
    }
}

struct Fields<'a, T> {
    h: &'a [T],
    u: &'a [T],
    v: &'a [T],
    w: &'a [T],
    eta: &'a [T],
}

fn eval_strip<T: Real>(
    ctx: &RhsContext<T>,
    strip: &Strip<T>,
    f: &Fields<'_, T>,
    s: &mut Workspace<T>,
    out: [&mut [T]; 5],
    lambda: T,
) {
    let nx = ctx.grid.nx;
    let b: &[T] = &ctx.phys.b;
    let g = ctx.phys.g;
    let Fields { h, u, v, w, eta } = *f;

    for (p, &m) in strip.rows.iter().enumerate() {
        for i in 0..nx {
            let k = m * nx + i;
            let l = p * nx + i;
            s.hhb[l] = h[k] * (h[k] + b[k]);
            s.u2[l] = u[k] * u[k];
            s.v2[l] = v[k] * v[k];
            s.hu[l] = h[k] * u[k];
            s.hv[l] = h[k] * v[k];
            s.huv[l] = h[k] * u[k] * v[k];
            s.e2h[l] = eta[k] * eta[k] / h[k];
            s.huw[l] = h[k] * u[k] * w[k];
            s.hvw[l] = h[k] * v[k] * w[k];
        }
    }

    let opx = &ctx.ops.x;
    for (r, j) in (strip.j0..strip.j1).enumerate() {
        let g_row = j * nx..(j + 1) * nx;
        let p_row = (strip.own + r) * nx..(strip.own + r + 1) * nx;
        let o_row = r * nx..(r + 1) * nx;
        for (src, dst) in [
            (&h[g_row.clone()], &mut s.dxh),
            (&u[g_row.clone()], &mut s.dxu),
            (&v[g_row.clone()], &mut s.dxv),
            (&w[g_row.clone()], &mut s.dxw),
            (&eta[g_row.clone()], &mut s.dxeta),
        ] {
            opx.apply_line(src, &mut dst[o_row.clone()]);
        }
        for (src, dst) in [
            (&s.hhb, &mut s.dx_hhb),
            (&s.u2, &mut s.dx_u2),
            (&s.hu, &mut s.dx_hu),
            (&s.huv, &mut s.dx_huv),
            (&s.e2h, &mut s.dx_e2h),
            (&s.huw, &mut s.dx_huw),
        ] {
            opx.apply_line(&src[p_row.clone()], &mut dst[o_row.clone()]);
        }
        let st = &strip.stencil[r];
        for (src, dst) in [
            (h, &mut s.dyh),
            (u, &mut s.dyu),
            (v, &mut s.dyv),
            (w, &mut s.dyw),
            (eta, &mut s.dyeta),
        ] {
            combine_rows(&mut dst[o_row.clone()], src, nx, st, false);
        }
        for (src, dst) in [
            (&s.hhb, &mut s.dy_hhb),
            (&s.v2, &mut s.dy_v2),
            (&s.hv, &mut s.dy_hv),
            (&s.huv, &mut s.dy_huv),
            (&s.e2h, &mut s.dy_e2h),
            (&s.hvw, &mut s.dy_hvw),
        ] {
            combine_rows(&mut dst[o_row.clone()], src, nx, st, true);
        }
    }

    let (dxb, dyb) = (&ctx.dxb[..], &ctx.dyb[..]);
    let half: T = c(0.5);
    let l2 = lambda * half;
    let l3 = lambda / c(3.0);
    let l6 = lambda / c(6.0);
    let three_half: T = c(1.5);
    let base = strip.j0 * nx;
    let pbase = strip.own * nx;
    let [ht, ut, vt, wt, et] = out;
    for l in 0..ht.len() {
        let k = base + l;
        let p = pbase + l;
        let (hk, uk, vk, wk, ek) = (h[k], u[k], v[k], w[k], eta[k]);
        let inv_h = T::one() / hk;
        let r = ek * inv_h;

        ht[l] = -(uk * s.dxh[l] + hk * s.dxu[l] + vk * s.dyh[l] + hk * s.dyv[l]);

        let hu_rate = g * s.dx_hhb[l] - g * (hk + b[k]) * s.dxh[l]
            + half * hk * s.dx_u2[l]
            - half * s.u2[p] * s.dxh[l]
            + half * uk * s.dx_hu[l]
            - half * s.hu[p] * s.dxu[l]
            + half * s.dy_huv[l]
            - half * uk * vk * s.dyh[l]
            + half * s.hv[p] * s.dyu[l]
            - half * s.hu[p] * s.dyv[l]
            + l6 * (r * r) * s.dxh[l]
            + l3 * s.dxeta[l]
            - l3 * r * s.dxeta[l]
            - l6 * s.dx_e2h[l]
            + l2 * (T::one() - r) * dxb[k];

        let hv_rate = g * s.dy_hhb[l] - g * (hk + b[k]) * s.dyh[l]
            + half * hk * s.dy_v2[l]
            - half * s.v2[p] * s.dyh[l]
            + half * vk * s.dy_hv[l]
            - half * s.hv[p] * s.dyv[l]
            + half * s.dx_huv[l]
            - half * uk * vk * s.dxh[l]
            + half * s.hu[p] * s.dxv[l]
            - half * s.hv[p] * s.dxu[l]
            + l6 * (r * r) * s.dyh[l]
            + l3 * s.dyeta[l]
            - l3 * r * s.dyeta[l]
            - l6 * s.dy_e2h[l]
            + l2 * (T::one() - r) * dyb[k];

        let hw_rate = half * s.dx_huw[l] + half * s.hu[p] * s.dxw[l]
            - half * uk * wk * s.dxh[l]
            - half * hk * wk * s.dxu[l]
            + half * s.dy_hvw[l]
            + half * s.hv[p] * s.dyw[l]
            - half * vk * wk * s.dyh[l]
            - half * hk * wk * s.dyv[l];

        ut[l] = -hu_rate * inv_h;
        vt[l] = -hv_rate * inv_h;
        wt[l] = (lambda * (T::one() - r) - hw_rate) * inv_h;
        et[l] = wk - uk * s.dxeta[l] - vk * s.dyeta[l] - three_half * uk * dxb[k] - three_half * vk * dyb[k];
    }
}

/// Adds the five source fields evaluated at every node and time `t`.
pub fn add_sources<T: Real>(dq: &mut [T], t: T, grid: &Grid2D<T>, src: &dyn SourceTerms<T>) {
    src.add_to(t, grid, dq);
}

/// Node-by-node evaluation behind the default [`SourceTerms::add_to`].
pub fn add_pointwise<T: Real, S: SourceTerms<T> + ?Sized>(dq: &mut [T], t: T, grid: &Grid2D<T>, src: &S) {
    let n = grid.len();
    let nx = grid.nx;
    let [ht, ut, vt, wt, et] = split_mut(dq);
    let row = |j: usize, ht: &mut [T], ut: &mut [T], vt: &mut [T], wt: &mut [T], et: &mut [T]| {
        let y = grid.y(j);
        for i in 0..nx {
            let [a, b, c, d, e] = src.eval(t, grid.x(i), y);
            ht[i] = ht[i] + a;
            ut[i] = ut[i] + b;
            vt[i] = vt[i] + c;
            wt[i] = wt[i] + d;
            et[i] = et[i] + e;
        }
    };
    if n >= PARALLEL_THRESHOLD / 4 {
        (
            ht.par_chunks_mut(nx),
            ut.par_chunks_mut(nx),
            vt.par_chunks_mut(nx),
            wt.par_chunks_mut(nx),
            et.par_chunks_mut(nx),
        )
            .into_par_iter()
            .enumerate()
            .for_each(|(j, (a, b, c, d, e))| row(j, a, b, c, d, e));
    } else {
        for (j, ((((a, b), c), d), e)) in ht
            .chunks_mut(nx)
            .zip(ut.chunks_mut(nx))
            .zip(vt.chunks_mut(nx))
            .zip(wt.chunks_mut(nx))
            .zip(et.chunks_mut(nx))
            .enumerate()
        {
            row(j, a, b, c, d, e);
        }
    }
}

/// Adds the configured sources of `ctx` to an existing tendency.
pub fn add_manufactured_sources<T: Real>(
    tendency: &mut StateField<T>,
    t: T,
    ctx: &RhsContext<T>,
) {
    if let Some(src) = &ctx.sources {
        add_sources(tendency.as_mut_slice(), t, &ctx.grid, src.as_ref());
    }
}

fn evaluate<T: Real>(state: &StateField<T>, ctx: &RhsContext<T>, t: T, lambda: T) -> Result<StateField<T>> {
    let mut rhs = SgnRhs::new(ctx.clone());
    let mut out = StateField::zeros(state.nx(), state.ny());
    rhs.eval_with_lambda(t, state.as_slice(), out.as_mut_slice(), lambda)?;
    Ok(out)
}

/// Tendency on a fully periodic grid.
pub fn rhs_periodic<T: Real>(state: &StateField<T>, ctx: &RhsContext<T>, t: T) -> Result<StateField<T>> {
    if !(ctx.boundary_x().is_periodic() && ctx.boundary_y().is_periodic()) {
        return Err(Error::Boundary("rhs_periodic needs a fully periodic grid".into()));
    }
    evaluate(state, ctx, t, ctx.phys.lambda)
}

/// Tendency with reflecting walls in every bounded direction.
pub fn rhs_reflecting<T: Real>(state: &StateField<T>, ctx: &RhsContext<T>, t: T) -> Result<StateField<T>> {
    if ctx.boundary_x().is_periodic() && ctx.boundary_y().is_periodic() {
        return Err(Error::Boundary("rhs_reflecting needs at least one bounded direction".into()));
    }
    evaluate(state, ctx, t, ctx.phys.lambda)
}

/// Energy-conserving shallow-water tendency: the full system at `lambda = 0`
/// with the `w` and `eta` tendencies discarded.
pub fn rhs_shallow_water<T: Real>(state: &StateField<T>, ctx: &RhsContext<T>, t: T) -> Result<StateField<T>> {
    let mut out = evaluate(state, ctx, t, T::zero())?;
    let [_, _, _, wt, et] = split_mut(out.as_mut_slice());
    wt.iter_mut().for_each(|v| *v = T::zero());
    et.iter_mut().for_each(|v| *v = T::zero());
    Ok(out)
}

/// Tendency for whatever boundary kinds the context carries.
pub fn rhs<T: Real>(state: &StateField<T>, ctx: &RhsContext<T>, t: T) -> Result<StateField<T>> {
    evaluate(state, ctx, t, ctx.phys.lambda)
}

// Generated by scripts/manufactured_sources.py; do not edit by hand.

use std::f64::consts::PI;

/// `sin` and `cos` of `2 pi x`, `2 pi y`, `4 pi x` and `4 pi y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trig {
    pub sx: f64,
    pub cx: f64,
    pub sy: f64,
    pub cy: f64,
    pub s2x: f64,
    pub c2x: f64,
    pub s2y: f64,
    pub c2y: f64,
}

impl Trig {
    pub fn new(x: f64, y: f64) -> Self {
        let (sx, cx) = (2.0 * PI * x).sin_cos();
        let (sy, cy) = (2.0 * PI * y).sin_cos();
        let (s2x, c2x) = (4.0 * PI * x).sin_cos();
        let (s2y, c2y) = (4.0 * PI * y).sin_cos();
        Self { sx, cx, sy, cy, s2x, c2x, s2y, c2y }
    }
}

/// Source terms `(h, u, v, w, eta)` of the manufactured solution at `(t, x, y)`.
/// They do not depend on `lambda` because `eta = h`.
pub fn sources(t: f64, x: f64, y: f64, g: f64) -> [f64; 5] {
    let (st, ct) = (2.0 * PI * t).sin_cos();
    sources_from(&Trig::new(x, y), st, ct, g)
}

/// [`sources`] with the spatial factors precomputed and `(st, ct)` the sine
/// and cosine of `2 pi t`.
#[allow(clippy::all)]
#[inline]
pub fn sources_from(trig: &Trig, st: f64, ct: f64, g: f64) -> [f64; 5] {
    let Trig { sx, cx, sy, cy, s2x, c2x, s2y, c2y } = *trig;
    let c0 = sx*sy;
    let c1 = PI*st;
    let c2 = c0*c1;
    let c3 = 0.3*st;
    let c4 = cx*sy;
    let c5 = PI*ct;
    let c6 = c4*c5;
    let c7 = 0.16*PI;
    let c8 = c2y*s2x;
    let c9 = cy*sx;
    let c10 = c7*c8 + c7*c9;
    let c11 = c10 + c6;
    let c12 = c11*sx;
    let c13 = c12*c3;
    let c14 = c5*c9;
    let c15 = c2x*s2y;
    let c16 = c15*c7 + c4*c7;
    let c17 = c14 + c16;
    let c18 = c3*sy;
    let c19 = c17*c18;
    let c20 = c2x*c2y;
    let c21 = cx*cy;
    let c22 = 0.04*c20 + 0.08*c21 - 0.5*ct*sx*sy - 2.0;
    let c23 = -1.0*c22;
    let c24 = 0.6*c1;
    let c25 = c24*cx;
    let c26 = c24*cy;
    let c27 = c13 + c19 - 1.0*c2 + c23*c25 + c23*c26;
    let c28 = c23.recip();
    let c29 = sx.powi(2);
    let c30 = st.powi(2);
    let c31 = PI*c30;
    let c32 = 0.3*c31;
    let c33 = c23*sx;
    let c34 = 0.6*c5;
    let c35 = 0.09*c30;
    let c36 = c17*c35;
    let c37 = 0.36*c31;
    let c38 = 0.18*c23*c31;
    let c39 = -1.0*c10;
    let c40 = c23*g;
    let c41 = 0.32*PI;
    let c42 = c41*c8 + c41*c9 + 2.0*c6;
    let c43 = 0.5*c40;
    let c44 = c3*sx;
    let c45 = sy.powi(2);
    let c46 = c23*sy;
    let c47 = -1.0*c16;
    let c48 = 2.0*c14 + c15*c41 + c4*c41;
    let c49 = 0.45*st;
    let c50 = c39*sx;
    let c51 = c49*sy;
    let c52 = c25 + c26;
    let c53 = c22*c52 + c47*c51 + c49*c50;
    let c54 = c23*c53;
    let c55 = 0.9*c5;
    let c56 = PI.powi(2);
    let c57 = 1.2*c56;
    let c58 = c57*ct;
    let c59 = 0.9*c1;
    let c60 = 0.64*c56;
    let c61 = 0.32*c56;
    let c62 = -1.0*c20*c60 - 1.0*c21*c61;
    let c63 = c49*sx;
    let c64 = c0*c61 + c60*s2x*s2y;
    let c65 = c22*c57*st;
    let c66 = c23*c44;
    let c67 = c18*c23;
    let c68 = c23.powi(2);
    let s_h = c27;
    let s_u = c28*(c0*c36 + c11*c29*c35 - 1.0*c27*c44 - 1.0*c29*c32*sy + c33*c34 + c33*c37*cx + c38*c9 + c39*c40 + c42*c43);
    let s_v = c28*(c12*c35*sy - 1.0*c18*c27 - 1.0*c32*c45*sx + c34*c46 + c36*c45 + c37*c46*cy + c38*c4 + c40*c47 + c43*c48);
    let s_w = c28*(c13*c53 + c19*c53 - 1.0*c2*c53 + c23*(c2*c52 + c22*(c58*cx + c58*cy) + c47*c55*sy + c50*c55) + c25*c54 + c26*c54 - 1.0*c27*c53 + c66*(-1.0*c11*c52 + c39*c59*cx + c51*c64 + c62*c63 - 1.0*c65*sx) + c67*(-1.0*c17*c52 + c47*c59*cy + c51*c62 + c63*c64 - 1.0*c65*sy));
    let s_eta = c28*(-2.0*c2*c23 - 1.0*c23*c27 + c25*c68 + c26*c68 + c42*c66 + c48*c67 - 1.0*c54 + (c18*c47 + c39*c44)*(-0.06*c20 - 0.12*c21 + 0.75*ct*sx*sy + 3.0));
    [s_h, s_u, s_v, s_w, s_eta]
}

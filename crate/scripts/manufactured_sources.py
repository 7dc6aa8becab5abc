"""Symbolic derivation of the manufactured-solution source terms.

The sources are residuals of the continuous hyperbolic SGN system evaluated on
the closed-form fields, converted to the primitive variables (h, u, v, w, eta)
that the solver evolves:

    s_h   = R_h
    s_u   = (R_hu   - u   R_h) / h
    s_v   = (R_hv   - v   R_h) / h
    s_w   = (R_hw   - w   R_h) / h
    s_eta = (R_heta - eta R_h) / h

Regenerate the Rust module with

    python3 scripts/manufactured_sources.py > crates/core/src/scenarios/manufactured_sources.rs
"""
import sympy as sp

t, x, y, g, lam = sp.symbols("t x y g lambda", real=True)
pi = sp.pi

b = sp.Rational(8, 100) * (sp.cos(2 * pi * x) * sp.cos(2 * pi * y)
                           + sp.Rational(1, 2) * sp.cos(4 * pi * x) * sp.cos(4 * pi * y))
h = 2 + sp.Rational(1, 2) * sp.sin(2 * pi * x) * sp.sin(2 * pi * y) * sp.cos(2 * pi * t) - b
u = sp.Rational(3, 10) * sp.sin(2 * pi * x) * sp.sin(2 * pi * t)
v = sp.Rational(3, 10) * sp.sin(2 * pi * y) * sp.sin(2 * pi * t)
eta = h
w = -h * (sp.diff(u, x) + sp.diff(v, y)) + sp.Rational(3, 2) * (u * sp.diff(b, x) + v * sp.diff(b, y))

p = lam / 3 * (eta / h) * (1 - eta / h)

dx = lambda f: sp.diff(f, x)
dy = lambda f: sp.diff(f, y)
dt = lambda f: sp.diff(f, t)

r_h = dt(h) + dx(h * u) + dy(h * v)
r_hu = (dt(h * u) + dx(h * u * u + g * h**2 / 2 + h * p) + dy(h * u * v)
        + (g * h + sp.Rational(3, 2) * h / eta * p) * dx(b))
r_hv = (dt(h * v) + dx(h * u * v) + dy(h * v * v + g * h**2 / 2 + h * p)
        + (g * h + sp.Rational(3, 2) * h / eta * p) * dy(b))
r_heta = dt(h * eta) + dx(h * eta * u) + dy(h * eta * v) + sp.Rational(3, 2) * h * (u * dx(b) + v * dy(b)) - h * w
r_hw = dt(h * w) + dx(h * w * u) + dy(h * w * v) - lam * (1 - eta / h)

sources = [
    r_h,
    (r_hu - u * r_h) / h,
    (r_hv - v * r_h) / h,
    (r_hw - w * r_h) / h,
    (r_heta - eta * r_h) / h,
]

# Substitute trig atoms by plain symbols so the generated code evaluates each
# transcendental once.
atoms = {}
names = {
    sp.sin(2 * pi * x): "sx", sp.cos(2 * pi * x): "cx",
    sp.sin(2 * pi * y): "sy", sp.cos(2 * pi * y): "cy",
    sp.sin(4 * pi * x): "s2x", sp.cos(4 * pi * x): "c2x",
    sp.sin(4 * pi * y): "s2y", sp.cos(4 * pi * y): "c2y",
    sp.sin(2 * pi * t): "st", sp.cos(2 * pi * t): "ct",
}
subs = {k: sp.Symbol(v) for k, v in names.items()}
exprs = [s.subs(subs) for s in sources]
assert not any(e.has(lam) for e in exprs)
replacements, reduced = sp.cse(exprs, symbols=sp.numbered_symbols("c"))


def floatify(e):
    """Turn numeric coefficients into f64 literals, keeping integer exponents."""
    if e.is_Pow:
        return sp.Pow(floatify(e.base), e.exp, evaluate=False)
    if e.is_Number:
        return sp.Float(e, 17)
    if not e.args:
        return e
    return e.func(*[floatify(a) for a in e.args], evaluate=False)


out = [
    "// Generated by scripts/manufactured_sources.py; do not edit by hand.",
    "",
    "use std::f64::consts::PI;",
    "",
    "/// `sin` and `cos` of `2 pi x`, `2 pi y`, `4 pi x` and `4 pi y`.",
    "#[derive(Debug, Clone, Copy, PartialEq)]",
    "pub struct Trig {",
    "    pub sx: f64,",
    "    pub cx: f64,",
    "    pub sy: f64,",
    "    pub cy: f64,",
    "    pub s2x: f64,",
    "    pub c2x: f64,",
    "    pub s2y: f64,",
    "    pub c2y: f64,",
    "}",
    "",
    "impl Trig {",
    "    pub fn new(x: f64, y: f64) -> Self {",
    "        let (sx, cx) = (2.0 * PI * x).sin_cos();",
    "        let (sy, cy) = (2.0 * PI * y).sin_cos();",
    "        let (s2x, c2x) = (4.0 * PI * x).sin_cos();",
    "        let (s2y, c2y) = (4.0 * PI * y).sin_cos();",
    "        Self { sx, cx, sy, cy, s2x, c2x, s2y, c2y }",
    "    }",
    "}",
    "",
    "/// Source terms `(h, u, v, w, eta)` of the manufactured solution at `(t, x, y)`.",
    "/// They do not depend on `lambda` because `eta = h`.",
    "pub fn sources(t: f64, x: f64, y: f64, g: f64) -> [f64; 5] {",
    "    let (st, ct) = (2.0 * PI * t).sin_cos();",
    "    sources_from(&Trig::new(x, y), st, ct, g)",
    "}",
    "",
    "/// [`sources`] with the spatial factors precomputed and `(st, ct)` the sine",
    "/// and cosine of `2 pi t`.",
    "#[allow(clippy::all)]",
    "#[inline]",
    "pub fn sources_from(trig: &Trig, st: f64, ct: f64, g: f64) -> [f64; 5] {",
    "    let Trig { sx, cx, sy, cy, s2x, c2x, s2y, c2y } = *trig;",
]
for sym, e in replacements:
    out.append(f"    let {sym} = {sp.rust_code(floatify(e))};")
labels = ["h", "u", "v", "w", "eta"]
for lbl, e in zip(labels, reduced):
    out.append(f"    let s_{lbl} = {sp.rust_code(floatify(e))};")
out.append("    [s_h, s_u, s_v, s_w, s_eta]")
out.append("}")
print("\n".join(out))

"""Rectangular coordinate charts, scalar/complex fields and finite-difference calculus.

Conventions used throughout the package:

* A chart is a uniform rectangular grid.  Field samples are stored as arrays of
  shape ``(ny, nx)`` with the y index outermost, so ``values[j, i]`` lives at
  ``(x0 + i*hx, y0 + j*hy)``.  Row-major flattening of that array is the wire
  ordering of the JSON schema.
* The Laplacian is the analyst's one, ``lap f = f_xx + f_yy``.
* Fields may carry a closed-form sympy expression in the coordinate symbols
  ``x, y`` ("analytic mode").  Derivative operators on such fields differentiate
  the expression instead of applying stencils, which keeps identity checks at
  round-off level independently of the grid.
* Stencils are second-order centered ones everywhere.  At non-periodic edges a
  single ghost layer is synthesised by polynomial extrapolation (degree <= 6)
  of the samples, which keeps single applications exact on quadratics and,
  unlike low-order one-sided closures, keeps *compositions* of derivative
  operators uniformly second order (the truncation error field stays smooth
  up to O(h^4) bumps confined to the edge layer).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

# Coordinate symbols shared by every analytic-mode expression.
X, Y = sp.symbols("x y", real=True)

EDGE_LABELS = ("south", "north", "west", "east")

# Maximum polynomial degree for the ghost-layer extrapolation.  Degree 6 keeps
# edge truncation at O(h^7) so that up to four stacked derivative stages stay
# second-order accurate, while rounding-noise amplification (~2^7 per layer)
# remains far below stencil error on the grid sizes this package targets.
GHOST_DEGREE = 6


class ChartError(ValueError):
    """Invalid chart geometry or mismatched chart between operands."""


class EdgeError(ValueError):
    """Edge label unknown, or not a physical boundary edge of the chart."""


@dataclass(frozen=True)
class GridChart:
    """Uniform rectangular chart with periodicity flags and boundary labels.

    ``boundary_edges`` lists the edges that represent actual surface boundary
    (the curve usually written Gamma); the remaining edges are mere chart cuts.
    A periodic direction covers ``[x0, x0 + nx*hx)`` (the right endpoint wraps
    to the left one); a non-periodic direction covers ``[x0, x0 + (nx-1)*hx]``.
    """

    nx: int
    ny: int
    hx: float
    hy: float
    x0: float = 0.0
    y0: float = 0.0
    periodic_x: bool = False
    periodic_y: bool = False
    boundary_edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ChartError(f"chart too small for stencils: nx={self.nx}, ny={self.ny} (need >= 4)")
        if self.hx <= 0 or self.hy <= 0:
            raise ChartError(f"grid spacings must be positive: hx={self.hx}, hy={self.hy}")
        edges = frozenset(self.boundary_edges)
        object.__setattr__(self, "boundary_edges", edges)
        unknown = edges - set(EDGE_LABELS)
        if unknown:
            raise ChartError(f"unknown edge labels: {sorted(unknown)}")
        if self.periodic_x and edges & {"east", "west"}:
            raise ChartError("periodic x direction cannot carry physical east/west edges")
        if self.periodic_y and edges & {"north", "south"}:
            raise ChartError("periodic y direction cannot carry physical north/south edges")

    # -- coordinates ---------------------------------------------------------

    @property
    def shape(self):
        return (self.ny, self.nx)

    def xs(self) -> np.ndarray:
        return self.x0 + self.hx * np.arange(self.nx)

    def ys(self) -> np.ndarray:
        return self.y0 + self.hy * np.arange(self.ny)

    def meshgrid(self):
        """Coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.xs(), self.ys())

    def node_coords(self, i: int, j: int):
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise ChartError(f"node ({i}, {j}) outside chart {self.nx}x{self.ny}")
        return (self.x0 + i * self.hx, self.y0 + j * self.hy)

    def index_of(self, x: float, y: float):
        i = round((x - self.x0) / self.hx)
        j = round((y - self.y0) / self.hy)
        xi, yj = self.node_coords(i, j)
        if xi != x or yj != y:
            raise ChartError(f"({x}, {y}) is not a grid node")
        return (i, j)

    def center_node(self):
        """Deterministic base node used for path integration: nearest the chart center."""
        return ((self.nx - 1) // 2, (self.ny - 1) // 2)

    def require_physical(self, edge: str):
        if edge not in EDGE_LABELS:
            raise EdgeError(f"unknown edge label {edge!r}")
        if edge not in self.boundary_edges:
            raise EdgeError(f"edge {edge!r} is not a physical boundary edge of this chart")


def _eval_expr(expr, chart: GridChart) -> np.ndarray:
    """Sample a sympy expression in (x, y) on every chart node."""
    fn = sp.lambdify((X, Y), expr, modules="numpy")
    xm, ym = chart.meshgrid()
    with np.errstate(all="ignore"):
        vals = fn(xm, ym)
    return np.broadcast_to(np.asarray(vals, dtype=float), chart.shape).copy()


class ScalarField:
    """One real sample per grid node, optionally backed by a closed form.

    When ``expr`` is given the samples are produced from it, so analytic and
    sampled values agree exactly at the nodes by construction.
    """

    __slots__ = ("chart", "values", "expr")

    def __init__(self, chart: GridChart, values=None, expr=None):
        self.chart = chart
        self.expr = sp.sympify(expr) if expr is not None else None
        if self.expr is not None:
            vals = _eval_expr(self.expr, chart)
        else:
            if values is None:
                raise ChartError("ScalarField needs samples or an expression")
            vals = np.asarray(values, dtype=float)
            if vals.shape != chart.shape:
                raise ChartError(f"field shape {vals.shape} != chart shape {chart.shape}")
            vals = vals.copy()
        vals.setflags(write=False)
        self.values = vals

    # -- helpers -------------------------------------------------------------

    def without_expr(self) -> "ScalarField":
        """Sampled-mode view of this field (drops the closed form)."""
        return ScalarField(self.chart, values=self.values)

    @property
    def analytic(self) -> bool:
        return self.expr is not None

    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.chart is not self.chart and other.chart != self.chart:
                raise ChartError("fields live on different charts")
            return other.values, other.expr
        return other, sp.sympify(other)

    def _binop(self, other, np_op, sym_op):
        ov, oe = self._coerce(other)
        expr = sym_op(self.expr, oe) if (self.expr is not None and oe is not None) else None
        result = ScalarField.__new__(ScalarField)
        result.chart = self.chart
        result.expr = expr
        with np.errstate(all="ignore"):
            vals = np.asarray(np_op(self.values, ov), dtype=float)
        vals.setflags(write=False)
        result.values = vals
        return result

    def __add__(self, other):
        return self._binop(other, np.add, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, np.subtract, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: np.subtract(b, a), lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, np.multiply, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, np.divide, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binop(other, lambda a, b: np.divide(b, a), lambda a, b: b / a)

    def __pow__(self, p):
        return self._binop(p, np.power, lambda a, b: a ** b)

    def __neg__(self):
        return self._binop(-1.0, np.multiply, lambda a, b: a * b)


def fexp(f: ScalarField) -> ScalarField:
    return f._binop(0.0, lambda a, _: np.exp(a), lambda a, _: sp.exp(a))


def flog(f: ScalarField) -> ScalarField:
    return f._binop(0.0, lambda a, _: np.log(a), lambda a, _: sp.log(a))


@dataclass(frozen=True)
class ComplexField:
    """Complex-valued field stored as two real components on one chart."""

    re: ScalarField
    im: ScalarField

    def __post_init__(self):
        if self.re.chart != self.im.chart:
            raise ChartError("real and imaginary parts live on different charts")

    @property
    def chart(self) -> GridChart:
        return self.re.chart

    def complex_values(self) -> np.ndarray:
        return self.re.values + 1j * self.im.values


@dataclass(frozen=True)
class SymTensorField2:
    """Symmetric 2-tensor in chart coordinates; symmetry is structural."""

    axx: ScalarField
    axy: ScalarField
    ayy: ScalarField

    def __post_init__(self):
        if not (self.axx.chart == self.axy.chart == self.ayy.chart):
            raise ChartError("tensor components live on different charts")

    @property
    def chart(self) -> GridChart:
        return self.axx.chart


# ---------------------------------------------------------------------------
# Stencil engine
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _extrap_weights(q: int):
    """Lagrange weights reproducing the degree-q interpolant of nodes 0..q at -1."""
    nodes = np.arange(q + 1, dtype=float)
    w = np.empty(q + 1)
    for k in range(q + 1):
        others = np.delete(nodes, k)
        w[k] = np.prod((-1.0 - others) / (k - others))
    w.setflags(write=False)
    return w


def _pad_ghosts(v: np.ndarray, degree_cap: int = GHOST_DEGREE) -> np.ndarray:
    """Append one extrapolated ghost layer on both ends of axis 0."""
    n = v.shape[0]
    q = min(degree_cap, n - 1)
    w = _extrap_weights(q)
    lo = np.tensordot(w, v[: q + 1], axes=(0, 0))[None]
    hi = np.tensordot(w, v[::-1][: q + 1], axes=(0, 0))[None]
    return np.concatenate([lo, v, hi], axis=0)


def diff_axis(values: np.ndarray, h: float, axis: int, periodic: bool, order: int) -> np.ndarray:
    """Centered first or second derivative along one axis of a sampled array.

    Periodic axes wrap; non-periodic axes use one extrapolated ghost layer so
    the same centered stencil applies at the end nodes.
    """
    v = np.moveaxis(values, axis, 0)
    if periodic:
        up = np.roll(v, -1, axis=0)
        dn = np.roll(v, 1, axis=0)
    else:
        ext = _pad_ghosts(v)
        up = ext[2:]
        dn = ext[:-2]
    if order == 1:
        out = (up - dn) / (2.0 * h)
    elif order == 2:
        out = (up - 2.0 * v + dn) / (h * h)
    else:
        raise ValueError(f"unsupported derivative order {order}")
    return np.moveaxis(out, 0, axis)


def _derive(f: ScalarField, ax_order: int, ay_order: int) -> ScalarField:
    """d^(ax_order)/dx d^(ay_order)/dy of a field; expression-backed when possible."""
    if f.expr is not None:
        return ScalarField(f.chart, expr=sp.diff(f.expr, X, ax_order, Y, ay_order))
    c = f.chart
    vals = f.values
    if ax_order:
        vals = diff_axis(vals, c.hx, axis=1, periodic=c.periodic_x, order=ax_order)
    if ay_order:
        vals = diff_axis(vals, c.hy, axis=0, periodic=c.periodic_y, order=ay_order)
    return ScalarField(c, values=vals)


def dx(f: ScalarField) -> ScalarField:
    return _derive(f, 1, 0)


def dy(f: ScalarField) -> ScalarField:
    return _derive(f, 0, 1)


def dxx(f: ScalarField) -> ScalarField:
    return _derive(f, 2, 0)


def dyy(f: ScalarField) -> ScalarField:
    return _derive(f, 0, 2)


def dxy(f: ScalarField) -> ScalarField:
    return _derive(f, 1, 1)


# ---------------------------------------------------------------------------
# Flat and conformal calculus
# ---------------------------------------------------------------------------

def gradient_flat(f: ScalarField):
    """(f_x, f_y) by centered differences, ghost-closed at non-periodic edges."""
    return dx(f), dy(f)


def laplacian_flat(f: ScalarField) -> ScalarField:
    """f_xx + f_yy (flat Laplacian, analyst sign)."""
    return dxx(f) + dyy(f)


def laplacian_g(f: ScalarField, u: ScalarField) -> ScalarField:
    """Laplace-Beltrami of g = e^{2u} (dx^2+dy^2): e^{-2u} (f_xx + f_yy)."""
    if f.chart != u.chart:
        raise ChartError("f and u live on different charts")
    return fexp(u * (-2.0)) * laplacian_flat(f)


def grad_norm_sq_g(f: ScalarField, u: ScalarField) -> ScalarField:
    """|grad f|^2 in the metric e^{2u} delta: e^{-2u} (f_x^2 + f_y^2)."""
    if f.chart != u.chart:
        raise ChartError("f and u live on different charts")
    fx, fy = gradient_flat(f)
    return fexp(u * (-2.0)) * (fx * fx + fy * fy)


_EDGE_SPEC = {
    # edge -> (take, derivative, outward sign)
    "south": (lambda a: a[0, :], dy, -1.0),
    "north": (lambda a: a[-1, :], dy, +1.0),
    "west": (lambda a: a[:, 0], dx, -1.0),
    "east": (lambda a: a[:, -1], dx, +1.0),
}


def edge_trace(f: ScalarField, edge: str) -> np.ndarray:
    """Samples of f along an edge, ordered by the increasing edge coordinate."""
    if edge not in _EDGE_SPEC:
        raise EdgeError(f"unknown edge label {edge!r}")
    take, _, _ = _EDGE_SPEC[edge]
    return take(f.values).copy()


def normal_derivative(f: ScalarField, edge: str, u: ScalarField | None = None) -> np.ndarray:
    """Outward normal derivative trace along a physical edge.

    Without ``u`` this is the flat conormal derivative; with ``u`` the result
    is the g-unit-conormal derivative e^{-u} d f / d nu_flat for the conformal
    metric e^{2u} delta.
    """
    f.chart.require_physical(edge)
    take, deriv, sign = _EDGE_SPEC[edge]
    trace = sign * take(deriv(f).values)
    if u is not None:
        if u.chart != f.chart:
            raise ChartError("f and u live on different charts")
        trace = np.exp(-take(u.values)) * trace
    return trace


# ---------------------------------------------------------------------------
# Complex calculus
# ---------------------------------------------------------------------------

def dz(f: ScalarField) -> ComplexField:
    """d/dz = (d/dx - i d/dy) / 2 of a real field."""
    fx, fy = gradient_flat(f)
    return ComplexField(re=fx * 0.5, im=fy * (-0.5))


def cauchy_riemann_residual(phi: ComplexField) -> ScalarField:
    """Pointwise holomorphy witness |Re_x - Im_y| + |Re_y + Im_x|."""
    rex, rey = gradient_flat(phi.re)
    imx, imy = gradient_flat(phi.im)
    vals = np.abs(rex.values - imy.values) + np.abs(rey.values + imx.values)
    return ScalarField(phi.chart, values=vals)


def _cumtrapz(vals: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Cumulative trapezoid along an axis, zero at index 0."""
    v = np.moveaxis(vals, axis, 0)
    steps = 0.5 * h * (v[1:] + v[:-1])
    out = np.concatenate([np.zeros_like(v[:1]), np.cumsum(steps, axis=0)], axis=0)
    return np.moveaxis(out, 0, axis)


def path_integrate(v: ComplexField, frm, to) -> complex:
    """Trapezoidal contour integral of v dz along the x-then-y grid staircase.

    ``frm`` and ``to`` are (i, j) node indices.  The path runs first along the
    row of ``frm`` to the target x index, then along that column to the target
    y index.  The path choice is canonical; path independence is something the
    caller asserts, not something this routine assumes.
    """
    c = v.chart
    i0, j0 = frm
    i1, j1 = to
    c.node_coords(i0, j0)
    c.node_coords(i1, j1)
    vals = v.complex_values()

    def seg(line: np.ndarray, h: float, a: int, b: int) -> complex:
        if a == b:
            return 0.0 + 0.0j
        lo, hi = (a, b) if a < b else (b, a)
        s = h * (0.5 * (line[lo] + line[hi]) + line[lo + 1:hi].sum())
        return s if b > a else -s

    leg_x = seg(vals[j0, :], c.hx, i0, i1)
    leg_y = seg(vals[:, i1], c.hy, j0, j1)
    return complex(leg_x + 1j * leg_y)


def complex_primitive(v: ComplexField, base=None):
    """Staircase primitive Z(P) = int_base^P v dz at every node, plus a gap witness.

    Returns ``(z_values, gap)`` where ``z_values`` is a complex (ny, nx) array
    and ``gap`` bounds path dependence: the sup difference between the two
    L-shaped paths, combined with any nonzero period integral around periodic
    directions (periodic charts are integrated on the cut, and a nontrivial
    period shows up here instead of being silently wrapped away).
    """
    c = v.chart
    ib, jb = base if base is not None else c.center_node()
    vals = v.complex_values()
    cx = _cumtrapz(vals, c.hx, axis=1)
    cy = _cumtrapz(vals, c.hy, axis=0)
    # x-leg along base row, then y-leg along the target column
    z1 = (cx[jb, :] - cx[jb, ib])[None, :] + 1j * (cy - cy[jb, :][None, :])
    # y-leg along base column, then x-leg along the target row
    z2 = 1j * (cy[:, ib] - cy[jb, ib])[:, None] + (cx - cx[:, ib][:, None])
    gap = float(np.max(np.abs(z1 - z2)))
    if c.periodic_x:
        loop = c.hx * 0.5 * (np.roll(vals, -1, axis=1) + vals).sum(axis=1)
        gap = max(gap, float(np.max(np.abs(loop))))
    if c.periodic_y:
        loop = c.hy * 0.5 * (np.roll(vals, -1, axis=0) + vals).sum(axis=0)
        gap = max(gap, float(np.max(np.abs(loop))))
    return z1, gap


def dewind_periods(z: np.ndarray, v: ComplexField, base=None) -> np.ndarray:
    """Subtract the winding part of a staircase primitive on periodic charts.

    The cut-chart primitive of an integrand with a (discretization-level)
    nonzero period jumps across the periodic seam by that period; subtracting
    period * (coordinate - base coordinate) / period_length makes the field
    single-valued, so downstream wrap-around stencils see no seam.  Genuine
    periods must be rejected by the caller beforehand (they show up in the
    ``complex_primitive`` gap).
    """
    c = v.chart
    ib, jb = base if base is not None else c.center_node()
    vals = v.complex_values()
    out = z.copy()
    if c.periodic_y:
        loop = c.hy * 0.5 * (np.roll(vals, -1, axis=0) + vals).sum(axis=0) * 1j
        frac = ((c.ys() - c.ys()[jb]) / (c.ny * c.hy))[:, None]
        out -= loop[None, :] * frac
    if c.periodic_x:
        loop = c.hx * 0.5 * (np.roll(vals, -1, axis=1) + vals).sum(axis=1)
        frac = ((c.xs() - c.xs()[ib]) / (c.nx * c.hx))[None, :]
        out -= loop[:, None] * frac
    return out

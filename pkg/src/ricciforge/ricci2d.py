"""Intrinsic verifiers: flatness of sqrt(c+H^2-K) g, the zero-tolerant
Moroianu equation, free-boundary Neumann identities and zero-set structure.

The pair (c, H) enters every interior check only through s = c + H^2.  That
combination is evaluated in exact rational arithmetic and rounded once, so two
parameter pairs with the same invariant produce bit-identical residual fields.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import report as rp
from .chart import (ChartError, EdgeError, ScalarField, edge_trace, fexp,
                    flog, laplacian_flat, laplacian_g, grad_norm_sq_g,
                    normal_derivative)
from .curvature import ConformalMetric2D, gaussian_curvature, geodesic_curvature_boundary

_EPS = np.finfo(float).eps

# Default sampled-mode tolerance is C * h^2 with this calibration constant;
# it only drives the pass flag of standalone reports (the acceptance suite
# pins its own numbers) and is overridable everywhere.
SAMPLED_TOL_FACTOR = 200.0
ANALYTIC_TOL = 1e-9


class ParamError(ValueError):
    """Invalid space-form / boundary parameters."""


@dataclass(frozen=True)
class Wall:
    """Umbilical wall met along one boundary component.

    ``b`` is the wall's intrinsic curvature, ``sign`` says whether the outward
    conormal equals the wall normal (+1) or its opposite (-1), ``alpha`` is the
    capillary contact angle (pi/2 = free boundary).
    """

    b: float
    sign: int = 1
    alpha: float = math.pi / 2

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ParamError(f"wall sign must be +1 or -1, got {self.sign}")
        if self.alpha in (0.0, math.pi, 2 * math.pi) or not (0.0 < self.alpha < 2 * math.pi):
            raise ParamError(f"capillary angle must lie in (0,pi) u (pi,2pi), got {self.alpha}")


@dataclass(frozen=True)
class SpaceFormParams:
    """Ambient curvature c, mean curvature H, and per-edge wall data.

    Exact rational shadows of the conserved combinations c + H^2 and b - c are
    kept alongside the floats; see the lawson module for why.
    """

    c: float
    H: float
    walls: dict = field(default_factory=dict)
    # exact shadows, normally derived; the cousin map passes them through
    c_plus_h_sq_exact: Fraction | None = None
    depth_exact: dict | None = None

    def __post_init__(self):
        if self.c_plus_h_sq_exact is None:
            object.__setattr__(self, "c_plus_h_sq_exact",
                               Fraction(self.c) + Fraction(self.H) ** 2)
        if self.depth_exact is None:
            object.__setattr__(self, "depth_exact",
                               {e: Fraction(w.b) - Fraction(self.c) for e, w in self.walls.items()})
        for e, d in self.depth_exact.items():
            if d < 0:
                raise ParamError(f"wall {e!r}: umbilical curvature b={self.walls[e].b} "
                                 f"below ambient c={self.c} (need b >= c)")

    @property
    def c_plus_h_sq(self) -> float:
        """c + H^2, exactly computed then rounded once."""
        return float(self.c_plus_h_sq_exact)

    def depth(self, edge) -> float:
        """b_i - c for one wall (the squared hyperbolic mean curvature of it)."""
        return float(self.depth_exact[edge])

    def wall(self, edge) -> Wall:
        try:
            return self.walls[edge]
        except KeyError:
            raise ParamError(f"no wall data for edge {edge!r}") from None


def _mode(*fields: ScalarField) -> str:
    return "analytic" if all(f.analytic for f in fields) else "sampled"


def _grid_meta(chart, extra=None) -> dict:
    meta = {"nx": chart.nx, "ny": chart.ny, "hx": chart.hx, "hy": chart.hy}
    if extra:
        meta.update(extra)
    return meta


def _default_tol(mode: str, chart, tol, analytic_tol=ANALYTIC_TOL, factor=SAMPLED_TOL_FACTOR):
    if tol is not None:
        return float(tol)
    if mode == "analytic":
        return analytic_tol
    h = max(chart.hx, chart.hy)
    return factor * h * h


def mask_eps(values: np.ndarray, eps=None) -> float:
    """Threshold below which log-based residuals exclude a node (reported, never silent)."""
    if eps is not None:
        return float(eps)
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return max(1e-12, 1e3 * _EPS * scale)


def sff_norm_sq(K: ScalarField, p: SpaceFormParams) -> ScalarField:
    """|Aring|^2 = 2 (c + H^2 - K); may be negative, callers decide what that means."""
    return (p.c_plus_h_sq - K) * 2.0


def ricci_flatness_residual(m: ConformalMetric2D, p: SpaceFormParams,
                            eps=None, tol=None) -> rp.ResidualReport:
    """Flatness witness lap log((c+H^2-K) e^{4u}), masked where c+H^2-K <= eps.

    A fully masked field is the umbilical / wrong-(c,H) degenerate diagnostic.
    """
    K = gaussian_curvature(m)
    s = p.c_plus_h_sq
    G = s - K
    eps_used = mask_eps(G.values, eps)
    masked = G.values <= eps_used
    mode = _mode(m.u)
    if masked.all():
        return rp.from_values("ricci_flatness", np.zeros(m.chart.shape),
                              tol=_default_tol(mode, m.chart, tol), mode=mode,
                              grid=_grid_meta(m.chart, {"eps_mask": eps_used}),
                              mask=masked,
                              degenerate_note="degenerate: umbilical or wrong (c,H); "
                                              "c+H^2-K below mask threshold everywhere")
    if mode == "analytic":
        fld = flog(G) + m.u * 4.0
        res = laplacian_flat(fld)
    else:
        safe = np.where(masked, 1.0, G.values)
        fld = ScalarField(m.chart, values=np.log(safe) + 4.0 * m.u.values)
        res = laplacian_flat(fld)
    # one extra layer: the Laplacian stencil of a node adjacent to a masked
    # node reads garbage
    contaminated = rp.dilate_mask(masked, 1, (m.chart.periodic_y, m.chart.periodic_x))
    vals = np.where(np.isfinite(res.values), res.values, 0.0)
    return rp.from_values("ricci_flatness", vals,
                          tol=_default_tol(mode, m.chart, tol), mode=mode,
                          grid=_grid_meta(m.chart, {"eps_mask": eps_used}),
                          mask=contaminated)


def moroianu_residual(m: ConformalMetric2D, tol=None,
                      use_flat_laplacian: bool = False) -> rp.ResidualReport:
    """R(K) = -K lap_g K + |grad K|^2_g + 4 K^3, defined with no masking.

    The metric Laplacian/gradient are the meaningful ones; the flat-chart
    variant is exposed for debugging only.
    """
    K = gaussian_curvature(m)
    if use_flat_laplacian:
        from .chart import gradient_flat
        lap = laplacian_flat(K)
        gx, gy = gradient_flat(K)
        gn = gx * gx + gy * gy
    else:
        lap = laplacian_g(K, m.u)
        gn = grad_norm_sq_g(K, m.u)
    res = K * (-1.0) * lap + gn + K * K * K * 4.0
    mode = _mode(m.u)
    note = "flat-chart variant (debug)" if use_flat_laplacian else ""
    return rp.from_values("moroianu", res.values, tol=_default_tol(mode, m.chart, tol),
                          mode=mode, grid=_grid_meta(m.chart), note=note)


def moroianu_flatness_equivalence(m: ConformalMetric2D, eps: float = 1e-6,
                                  tol=None) -> rp.ResidualReport:
    """Pointwise algebraic identity R(K) = K^2 (-lap_g log(-K) + 4K) on {K <= -eps}.

    This is an identity of expressions, not a discretization statement; in
    analytic mode it holds to round-off.
    """
    K = gaussian_curvature(m)
    masked = K.values > -float(eps)
    if masked.all():
        raise ChartError(f"no node with K <= -{eps}; equivalence check undefined")
    mode = _mode(m.u)
    lapK = laplacian_g(K, m.u)
    gnK = grad_norm_sq_g(K, m.u)
    R = K * (-1.0) * lapK + gnK + K * K * K * 4.0
    if mode == "analytic":
        E = laplacian_g(flog(K * (-1.0)), m.u) * (-1.0) + K * 4.0
        diff = (R - K * K * E).values
    else:
        safe = np.where(masked, 1.0, -K.values)
        logmk = ScalarField(m.chart, values=np.log(safe))
        E = laplacian_g(logmk, m.u) * (-1.0) + K * 4.0
        diff = (R - K * K * E).values
    contaminated = rp.dilate_mask(masked, 1, (m.chart.periodic_y, m.chart.periodic_x))
    diff = np.where(np.isfinite(diff), diff, 0.0)
    return rp.from_values("moroianu_flatness_equivalence", diff,
                          tol=_default_tol(mode, m.chart, tol, analytic_tol=1e-10),
                          mode=mode, grid=_grid_meta(m.chart, {"eps": float(eps)}),
                          mask=contaminated)


def boundary_flux_residual(m: ConformalMetric2D, K: ScalarField, p: SpaceFormParams,
                           edge: str, tol=None) -> rp.ResidualReport:
    """Free-boundary flux identity -d/dnu |Aring|^2 = sign * 4 sqrt(b-c) |Aring|^2.

    The normal derivative is the g-unit-conormal one.
    """
    m.chart.require_physical(edge)
    wall = p.wall(edge)
    hbar = math.sqrt(p.depth(edge))
    a2 = sff_norm_sq(K, p)
    res = -normal_derivative(a2, edge, u=m.u) - wall.sign * 4.0 * hbar * edge_trace(a2, edge)
    mode = _mode(m.u, K)
    return rp.from_values("boundary_flux", res,
                          tol=_default_tol(mode, m.chart, tol, analytic_tol=1e-8),
                          mode=mode, grid=_grid_meta(m.chart, {"edge": edge}))


def ricci_with_boundary_check(m: ConformalMetric2D, tol=None) -> rp.CheckBundle:
    """Ricci surface with boundary: R(K) = 0 inside, dK/dnu = -4K and geodesic
    curvature 1 along every physical edge."""
    if not m.chart.boundary_edges:
        raise EdgeError("chart has no physical boundary edge")
    mode = _mode(m.u)
    reports = {"interior": moroianu_residual(m, tol=tol)}
    K = gaussian_curvature(m)
    for edge in sorted(m.chart.boundary_edges):
        neu = normal_derivative(K, edge, u=m.u) + 4.0 * edge_trace(K, edge)
        reports[f"neumann:{edge}"] = rp.from_values(
            f"dK/dnu + 4K @ {edge}", neu,
            tol=_default_tol(mode, m.chart, tol, analytic_tol=1e-8),
            mode=mode, grid=_grid_meta(m.chart, {"edge": edge}))
        geo = geodesic_curvature_boundary(m, edge) - 1.0
        reports[f"geodesic:{edge}"] = rp.from_values(
            f"geodesic curvature - 1 @ {edge}", geo,
            tol=_default_tol(mode, m.chart, tol, analytic_tol=1e-8),
            mode=mode, grid=_grid_meta(m.chart, {"edge": edge}))
    return rp.bundle(reports)


def capillary_identity_residual(a_tt: np.ndarray, b_tt: np.ndarray, g_tt: np.ndarray,
                                p: SpaceFormParams, edge, tol: float = 1e-8) -> rp.ResidualReport:
    """Capillary identity Hbar g(T,T) - cos(alpha) A(T,T) - sin(alpha) B(T,T)
    along one boundary component, in the unit-tangent slot."""
    wall = p.wall(edge)
    hbar = math.sqrt(p.depth(edge))
    res = (hbar * np.asarray(g_tt, dtype=float)
           - math.cos(wall.alpha) * np.asarray(a_tt, dtype=float)
           - math.sin(wall.alpha) * np.asarray(b_tt, dtype=float))
    return rp.from_values("capillary_identity", res, tol=float(tol), mode="trace",
                          grid={"edge": str(edge), "n": int(res.shape[0])})


# ---------------------------------------------------------------------------
# Zero sets
# ---------------------------------------------------------------------------

ZERO_CLASSES = ("everywhere_zero", "no_zeros", "isolated", "non_isolated")


def zero_set_classify(f: ScalarField, eps=None) -> str:
    """Classify {|f| <= eps} by connected components of the grid graph.

    Classes: everywhere_zero, no_zeros, isolated (all components are single
    nodes), non_isolated.  Grid-resolution classification only; eps defaults
    to h^2 times the field scale.
    """
    c = f.chart
    if eps is None:
        eps = max(c.hx, c.hy) ** 2 * float(np.max(np.abs(f.values)))
    small = np.abs(f.values) <= eps
    if small.all():
        return "everywhere_zero"
    if not small.any():
        return "no_zeros"
    seen = np.zeros_like(small)
    isolated = True
    for j0, i0 in zip(*np.nonzero(small)):
        if seen[j0, i0]:
            continue
        size = 0
        q = deque([(j0, i0)])
        seen[j0, i0] = True
        while q:
            j, i = q.popleft()
            size += 1
            for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                jj, ii = j + dj, i + di
                if c.periodic_y:
                    jj %= c.ny
                if c.periodic_x:
                    ii %= c.nx
                if 0 <= jj < c.ny and 0 <= ii < c.nx and small[jj, ii] and not seen[jj, ii]:
                    seen[jj, ii] = True
                    q.append((jj, ii))
        if size > 1:
            isolated = False
    return "isolated" if isolated else "non_isolated"

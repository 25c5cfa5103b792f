"""Closed-form test geometries, with analytic-mode conformal factors in two
dimensions and exact samples in higher dimensions, plus the root-finding for
the critical catenoid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp

from .chart import X, Y, GridChart, ScalarField
from .curvature import ConformalMetric2D, GridChartN, MetricFieldN
from .hyperdim import SymTensorFieldN
from .ricci2d import SpaceFormParams, Wall


def plane(chart: GridChart) -> ConformalMetric2D:
    """Flat plane, u = 0."""
    return ConformalMetric2D(chart, ScalarField(chart, expr=sp.Integer(0)))


def sphere_cap(chart: GridChart) -> ConformalMetric2D:
    """Unit sphere in stereographic coordinates: u = log(2 / (1 + x^2 + y^2)), K = 1."""
    return ConformalMetric2D(chart, ScalarField(chart, expr=sp.log(2 / (1 + X**2 + Y**2))))


def enneper(chart: GridChart) -> ConformalMetric2D:
    """Enneper minimal surface: u = log(1 + x^2 + y^2), K = -4 (1+x^2+y^2)^{-4}."""
    return ConformalMetric2D(chart, ScalarField(chart, expr=sp.log(1 + X**2 + Y**2)))


def catenoid(t_min: float, t_max: float, n_t: int, n_theta: int, a: float = 1.0,
             physical_edges=()) -> ConformalMetric2D:
    """Catenoid of scale a > 0 in cylinder coordinates (t, theta):
    u = log(a cosh t), theta periodic with period 2 pi, K = -1/(a^2 cosh^4 t).

    The t ends are chart cuts unless listed in ``physical_edges``
    ("east" = t_max, "west" = t_min).
    """
    if a <= 0:
        raise ValueError(f"catenoid scale must be positive, got {a}")
    chart = GridChart(nx=n_t, ny=n_theta,
                      hx=(t_max - t_min) / (n_t - 1), hy=2 * math.pi / n_theta,
                      x0=t_min, y0=0.0, periodic_y=True,
                      boundary_edges=frozenset(physical_edges))
    return ConformalMetric2D(chart, ScalarField(chart, expr=sp.log(a * sp.cosh(X))))


def bisect_root(fn, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200) -> float:
    """Plain bisection; the bracket must straddle a sign change."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ValueError(f"root not bracketed on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if fmid == 0.0 or (hi - lo) < tol:
            return mid
        if flo * fmid < 0:
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class CriticalCatenoid:
    """The unique catenoid piece meeting the unit sphere orthogonally.

    T solves T tanh T = 1; the scale a = 1/sqrt(cosh^2 T + T^2) normalises the
    boundary circles onto the unit sphere, which makes the boundary geodesic
    curvature exactly one ((T cosh T)^2 = cosh^2 T + T^2 when tanh T = 1/T).
    """

    T: float
    a: float
    metric: ConformalMetric2D
    params: SpaceFormParams


def critical_catenoid(n_t: int = 129, n_theta: int = 96) -> CriticalCatenoid:
    """Critical catenoid chart with both t ends physical, walls b = 1 in c = 0."""
    T = bisect_root(lambda t: t * math.tanh(t) - 1.0, 1.0, 1.5, tol=1e-12)
    a = 1.0 / math.sqrt(math.cosh(T) ** 2 + T ** 2)
    m = catenoid(-T, T, n_t, n_theta, a=a, physical_edges=("east", "west"))
    p = SpaceFormParams(c=0.0, H=0.0, walls={"east": Wall(b=1.0, sign=1),
                                             "west": Wall(b=1.0, sign=1)})
    return CriticalCatenoid(T=T, a=a, metric=m, params=p)


# ---------------------------------------------------------------------------
# Higher-dimensional generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HypersurfaceData:
    """Sampled intrinsic/extrinsic data of a model hypersurface."""

    metric: MetricFieldN
    A: SymTensorFieldN
    c: float
    params: SpaceFormParams | None = None


def _sphere_factor_blocks(dim: int, radius_sq: float, counts, theta_window):
    """Per-axis (count, spacing, origin, periodic) and diagonal metric factors
    for one round-sphere factor of dimension 1 or 2."""
    if dim == 1:
        n = counts[0]
        return ([(n, 2 * math.pi / n, 0.0, True)],
                lambda coords: [radius_sq * np.ones_like(coords[0])])
    if dim == 2:
        n_th, n_ph = counts
        th0, th1 = theta_window
        axes = [(n_th, (th1 - th0) / (n_th - 1), th0, False),
                (n_ph, 2 * math.pi / n_ph, 0.0, True)]

        def factors(coords):
            th = coords[0]
            return [radius_sq * np.ones_like(th), radius_sq * np.sin(th) ** 2]

        return axes, factors
    raise ValueError(f"sphere factors of dimension {dim} not supported (need 1 or 2)")


def clifford_torus(k: int, n: int, counts=None,
                   theta_window=(0.3 * math.pi, 0.7 * math.pi)) -> HypersurfaceData:
    """Minimal Clifford-type product S^k(sqrt(k/n)) x S^{n-k}(sqrt((n-k)/n))
    in the unit (n+1)-sphere (c = 1), in per-factor angular coordinates.

    The shape tensor has eigenvalue sqrt((n-k)/k) on the first factor and
    -sqrt(k/(n-k)) on the second, so A is diagonal with A_ii = lambda g_ii in
    these coordinates.  Polar angles of 2-sphere factors are restricted to
    ``theta_window`` to stay clear of the coordinate poles.
    """
    if not (1 <= k < n):
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if n > 3:
        raise ValueError(f"charts up to n = 3 are supported, got n={n}")
    if counts is None:
        counts = (33,) * n
    lam1 = math.sqrt((n - k) / k)
    lam2 = -math.sqrt(k / (n - k))
    spec = [(k, k / n, lam1), (n - k, (n - k) / n, lam2)]

    axes = []
    factor_fns = []
    eigs = []
    consumed = 0
    for dim, r_sq, lam in spec:
        fac_counts = counts[consumed:consumed + dim]
        consumed += dim
        ax, fn = _sphere_factor_blocks(dim, r_sq, fac_counts, theta_window)
        axes.extend(ax)
        factor_fns.append((dim, fn))
        eigs.extend([lam] * dim)

    chart = GridChartN(dims=tuple(a[0] for a in axes),
                       spacings=tuple(a[1] for a in axes),
                       origins=tuple(a[2] for a in axes),
                       periodic=tuple(a[3] for a in axes))
    coords = chart.meshgrid()
    g = np.zeros(chart.dims + (n, n))
    pos = 0
    for dim, fn in factor_fns:
        for local, diag in enumerate(fn(coords[pos:pos + dim])):
            g[..., pos + local, pos + local] = diag
        pos += dim
    A = np.zeros_like(g)
    for i, lam in enumerate(eigs):
        A[..., i, i] = lam * g[..., i, i]
    return HypersurfaceData(metric=MetricFieldN(chart, g),
                            A=SymTensorFieldN(chart, A), c=1.0)


def flat_disc_in_ball(n: int = 3, counts=None, r_min: float = 0.3,
                      theta_window=(0.3 * math.pi, 0.7 * math.pi)) -> HypersurfaceData:
    """Totally geodesic equatorial n-disc of the unit ball, in polar-type
    coordinates with the outer face r = 1 physical: flat metric, A = 0,
    wall b = 1 in c = 0 (the boundary sphere is umbilical with B = g).
    """
    if n not in (2, 3):
        raise ValueError(f"flat disc charts support n in {{2, 3}}, got {n}")
    if counts is None:
        counts = (33,) * n
    if n == 2:
        chart = GridChartN(dims=counts, spacings=((1.0 - r_min) / (counts[0] - 1), 2 * math.pi / counts[1]),
                           origins=(r_min, 0.0), periodic=(False, True),
                           physical_faces=frozenset({(0, "high")}))
        r, _ = chart.meshgrid()
        g = np.zeros(chart.dims + (2, 2))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = r ** 2
    else:
        th0, th1 = theta_window
        chart = GridChartN(dims=counts,
                           spacings=((1.0 - r_min) / (counts[0] - 1),
                                     (th1 - th0) / (counts[1] - 1),
                                     2 * math.pi / counts[2]),
                           origins=(r_min, th0, 0.0), periodic=(False, False, True),
                           physical_faces=frozenset({(0, "high")}))
        r, th, _ = chart.meshgrid()
        g = np.zeros(chart.dims + (3, 3))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = r ** 2
        g[..., 2, 2] = (r * np.sin(th)) ** 2
    A = np.zeros_like(g)
    p = SpaceFormParams(c=0.0, H=0.0, walls={(0, "high"): Wall(b=1.0, sign=1)})
    return HypersurfaceData(metric=MetricFieldN(chart, g),
                            A=SymTensorFieldN(chart, A), c=0.0, params=p)

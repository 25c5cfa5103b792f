"""Curvature: Gaussian/geodesic curvature of conformal 2-D metrics and
Christoffel/Riemann/Ricci tensors of sampled n-dimensional metrics.

Sign conventions (documented once, used consistently):

* Laplacian is the analyst's lap = d_xx + d_yy, so the Gaussian curvature of
  g = e^{2u} delta is K = -e^{-2u} lap u.
* Geodesic curvature of a straight chart edge in that metric, with respect to
  the outward conormal, is k = e^{-u} du/dnu_flat (the flat edge is straight).
* Rm(X,Y,Z,W) = g(R(X,Y)W, Z) with R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y],
  so Rm(e1,e2,e1,e2) > 0 on the round sphere and the Gauss equation reads
  Rm = (c/2) g o g + (1/2) A o A with the Kulkarni-Nomizu product.
* Ric_ij = g^{kl} Rm_kilj and R = g^{ij} Ric_ij.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chart import (ChartError, EdgeError, GridChart, ScalarField,
                    diff_axis, dxx, dyy, edge_trace, normal_derivative)


@dataclass(frozen=True)
class ConformalMetric2D:
    """g = e^{2u} (dx^2 + dy^2) on a chart."""

    chart: GridChart
    u: ScalarField

    def __post_init__(self):
        if self.u.chart != self.chart:
            raise ChartError("conformal factor lives on a different chart")
        if not np.all(np.isfinite(self.u.values)):
            raise ChartError("conformal exponent has non-finite samples")

    @property
    def analytic(self) -> bool:
        return self.u.analytic

    def sampled(self) -> "ConformalMetric2D":
        return ConformalMetric2D(self.chart, self.u.without_expr())


def gaussian_curvature(m: ConformalMetric2D) -> ScalarField:
    """K = -e^{-2u} (u_xx + u_yy); exact closed form in analytic mode."""
    from .chart import fexp
    lap_u = dxx(m.u) + dyy(m.u)
    return fexp(m.u * (-2.0)) * lap_u * (-1.0)


def geodesic_curvature_boundary(m: ConformalMetric2D, edge: str) -> np.ndarray:
    """Geodesic curvature trace of a straight physical chart edge, outward conormal."""
    m.chart.require_physical(edge)
    return normal_derivative(m.u, edge, u=m.u)


# ---------------------------------------------------------------------------
# n-dimensional charts and metric samples
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridChartN:
    """n-dimensional analogue of GridChart: per-axis counts, spacings, flags.

    Physical boundary faces are pairs ``(axis, side)`` with side in
    {"low", "high"}.
    """

    dims: tuple
    spacings: tuple
    origins: tuple
    periodic: tuple
    physical_faces: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        n = len(self.dims)
        if n < 2 or n > 4:
            raise ChartError(f"supported chart dimensions are 2..4, got {n}")
        if not (len(self.spacings) == len(self.origins) == len(self.periodic) == n):
            raise ChartError("dims, spacings, origins and periodic must have equal length")
        object.__setattr__(self, "dims", tuple(int(k) for k in self.dims))
        object.__setattr__(self, "spacings", tuple(float(h) for h in self.spacings))
        object.__setattr__(self, "origins", tuple(float(o) for o in self.origins))
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        if any(k < 4 for k in self.dims):
            raise ChartError(f"chart too small for stencils: dims={self.dims} (need >= 4 per axis)")
        if any(h <= 0 for h in self.spacings):
            raise ChartError(f"grid spacings must be positive: {self.spacings}")
        faces = frozenset((int(a), s) for a, s in self.physical_faces)
        object.__setattr__(self, "physical_faces", faces)
        for a, s in faces:
            if not (0 <= a < n) or s not in ("low", "high"):
                raise ChartError(f"invalid face label ({a}, {s!r})")
            if self.periodic[a]:
                raise ChartError(f"periodic axis {a} cannot carry a physical face")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origins[axis] + self.spacings[axis] * np.arange(self.dims[axis])

    def meshgrid(self):
        return np.meshgrid(*[self.axis_coords(a) for a in range(self.ndim)], indexing="ij")

    def require_physical(self, face):
        face = (int(face[0]), face[1])
        if face not in self.physical_faces:
            raise EdgeError(f"face {face} is not a physical boundary face")
        return face


class DefinitenessError(ValueError):
    """Metric samples fail positive definiteness at some node."""


class MetricFieldN:
    """Sampled metric g_ij on an n-dimensional chart.

    Components are stored densely as an array of shape dims + (n, n);
    symmetry is enforced at construction.  Positive definiteness is checked
    per node (smallest eigenvalue > 1e-12 times the largest) unless
    ``validate=False``, which is used for derived tensors like the auxiliary
    metric that are allowed to degenerate.
    """

    __slots__ = ("chart", "comps", "_inv")

    def __init__(self, chart: GridChartN, comps, validate: bool = True):
        n = chart.ndim
        g = np.asarray(comps, dtype=float)
        if g.shape != chart.dims + (n, n):
            raise ChartError(f"metric shape {g.shape} != {chart.dims + (n, n)}")
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        if validate:
            bad = ~positive_definite_mask(g)
            if bad.any():
                node = tuple(int(t) for t in np.argwhere(bad)[0])
                raise DefinitenessError(f"metric not positive definite at node {node}")
        g.setflags(write=False)
        self.chart = chart
        self.comps = g
        self._inv = None

    def inverse(self) -> np.ndarray:
        if self._inv is None:
            inv = np.linalg.inv(self.comps)
            inv.setflags(write=False)
            self._inv = inv
        return self._inv


def positive_definite_mask(sym: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """True where a field of symmetric matrices is positive definite."""
    w = np.linalg.eigvalsh(sym)
    scale = np.maximum(np.abs(w[..., -1]), 1e-300)
    return w[..., 0] > rel_tol * scale


def grad_components(values: np.ndarray, chart: GridChartN) -> np.ndarray:
    """partial_l T for a component array of shape dims + trailing; result
    inserts the derivative axis first among the trailing ones:
    out[..., l, <trailing>] = d/dx^l values[..., <trailing>]."""
    nd = chart.ndim
    outs = []
    for axis in range(nd):
        outs.append(diff_axis(values, chart.spacings[axis], axis=axis,
                              periodic=chart.periodic[axis], order=1))
    return np.stack(outs, axis=nd)


@dataclass
class CurvatureTensors:
    """Gamma^k_ij, fully covariant Rm_ijkl, Ric_ij and scalar R on a chart."""

    chart: GridChartN
    gamma: np.ndarray   # dims + (k, i, j)
    rm: np.ndarray      # dims + (i, j, k, l)
    ric: np.ndarray     # dims + (i, j)
    scalar: np.ndarray  # dims


def christoffel(g: MetricFieldN) -> np.ndarray:
    """Gamma^k_ij = g^{kl} (d_i g_jl + d_j g_il - d_l g_ij) / 2 from stencils."""
    chart = g.chart
    dg = grad_components(g.comps, chart)          # [..., l, i, j]
    ginv = g.inverse()
    # d_i g_jl : permute the derivative index into the first slot as needed
    term = np.einsum("...ijl->...lij", dg) + np.einsum("...jil->...lij", dg) - dg
    #   above: term[..., l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    gamma = 0.5 * np.einsum("...kl,...lij->...kij", ginv, term)
    return gamma


def riemann(g: MetricFieldN, gamma: np.ndarray | None = None) -> CurvatureTensors:
    """Curvature tensors from one differentiation of the Christoffel symbols.

    Rm_ijkl = g_km (d_i Gamma^m_jl - d_j Gamma^m_il
                    + Gamma^m_ip Gamma^p_jl - Gamma^m_jp Gamma^p_il).
    """
    chart = g.chart
    if gamma is None:
        gamma = christoffel(g)
    dgamma = grad_components(gamma, chart)        # [..., i, m, j, l] = d_i Gamma^m_jl
    r_up = (np.einsum("...imjl->...mijl", dgamma)
            - np.einsum("...jmil->...mijl", dgamma)
            + np.einsum("...mip,...pjl->...mijl", gamma, gamma)
            - np.einsum("...mjp,...pil->...mijl", gamma, gamma))
    rm = np.einsum("...km,...mijl->...ijkl", g.comps, r_up)
    ginv = g.inverse()
    ric = np.einsum("...kl,...kilj->...ij", ginv, rm)
    scalar = np.einsum("...ij,...ij->...", ginv, ric)
    return CurvatureTensors(chart=chart, gamma=gamma, rm=rm, ric=ric, scalar=scalar)

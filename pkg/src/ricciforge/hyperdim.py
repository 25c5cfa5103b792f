"""n-dimensional verifiers: the auxiliary metric gbar = c(n-1) g - Ric, the
A o A identity, the two structural conditions tying gbar to the shape tensor,
Gauss/Codazzi residuals in coordinates, and boundary umbilicity checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import report as rp
from .chart import ChartError
from .curvature import (CurvatureTensors, GridChartN, MetricFieldN,
                        christoffel, grad_components, positive_definite_mask,
                        riemann)
from .ricci2d import SpaceFormParams

SAMPLED_TOL_FACTOR = 200.0


@dataclass(frozen=True)
class SymTensorFieldN:
    """Symmetric 2-tensor samples on an n-dimensional chart (dense storage)."""

    chart: GridChartN
    comps: np.ndarray

    def __post_init__(self):
        n = self.chart.ndim
        a = np.asarray(self.comps, dtype=float)
        if a.shape != self.chart.dims + (n, n):
            raise ChartError(f"tensor shape {a.shape} != {self.chart.dims + (n, n)}")
        a = 0.5 * (a + np.swapaxes(a, -1, -2))
        a.setflags(write=False)
        object.__setattr__(self, "comps", a)


@dataclass(frozen=True)
class FourTensorField:
    """Curvature-type 4-tensor samples on an n-dimensional chart."""

    chart: GridChartN
    comps: np.ndarray

    def __post_init__(self):
        n = self.chart.ndim
        a = np.asarray(self.comps, dtype=float)
        if a.shape != self.chart.dims + (n, n, n, n):
            raise ChartError(f"tensor shape {a.shape} != {self.chart.dims + (n,) * 4}")
        a.setflags(write=False)
        object.__setattr__(self, "comps", a)


def _tol(chart: GridChartN, tol, factor=SAMPLED_TOL_FACTOR):
    if tol is not None:
        return float(tol)
    h = max(chart.spacings)
    return factor * h * h


def _grid_meta(chart: GridChartN, extra=None) -> dict:
    meta = {"dims": list(chart.dims), "spacings": list(chart.spacings)}
    if extra:
        meta.update(extra)
    return meta


@dataclass
class AbarResult:
    """Auxiliary metric with per-node definiteness classification.

    ``classification`` holds +1 (positive definite), 0 (semidefinite at
    tolerance) or -1 (indefinite) per node.
    """

    gbar: SymTensorFieldN
    classification: np.ndarray
    curvature: CurvatureTensors

    @property
    def pd_mask(self) -> np.ndarray:
        return self.classification == 1


def abar_metric(g: MetricFieldN, c: float, rel_tol: float = 1e-8) -> AbarResult:
    """gbar = c (n-1) g - Ric, with Ric from the curvature stencils.

    The definiteness classification compares eigenvalues against rel_tol times
    the node scale of the inputs |c|(n-1)||g|| + ||Ric||, so a gbar that
    vanishes up to stencil noise classifies as semidefinite once rel_tol
    covers that noise instead of flickering between signs.
    """
    n = g.chart.ndim
    ct = riemann(g)
    gbar = float(c) * (n - 1) * g.comps - ct.ric
    w = np.linalg.eigvalsh(gbar)
    scale = (abs(float(c)) * (n - 1) * np.linalg.norm(g.comps, axis=(-2, -1))
             + np.linalg.norm(ct.ric, axis=(-2, -1)))
    scale = np.maximum(scale, 1e-300)
    cls = np.where(w[..., 0] > rel_tol * scale, 1,
                   np.where(w[..., 0] < -rel_tol * scale, -1, 0)).astype(np.int8)
    return AbarResult(gbar=SymTensorFieldN(g.chart, gbar), classification=cls, curvature=ct)


def a_compose_a(g: MetricFieldN, A: SymTensorFieldN) -> SymTensorFieldN:
    """(A o A)_ij = A_ik g^{kl} A_lj; positive semidefinite by construction."""
    if A.chart != g.chart:
        raise ChartError("A and g live on different charts")
    out = np.einsum("...ik,...kl,...lj->...ij", A.comps, g.inverse(), A.comps)
    return SymTensorFieldN(g.chart, out)


def kulkarni_nomizu(h: SymTensorFieldN, k: SymTensorFieldN) -> FourTensorField:
    """(h o k)_ijkl = h_ik k_jl + h_jl k_ik - h_il k_jk - h_jk k_il."""
    if h.chart != k.chart:
        raise ChartError("factors live on different charts")
    a, b = h.comps, k.comps
    # grouped so commuting the factors or the index pairs permutes summands
    # inside one addition, keeping the advertised symmetries exact in floats
    plus = (np.einsum("...ik,...jl->...ijkl", a, b)
            + np.einsum("...jl,...ik->...ijkl", a, b))
    minus = (np.einsum("...il,...jk->...ijkl", a, b)
             + np.einsum("...jk,...il->...ijkl", a, b))
    return FourTensorField(h.chart, plus - minus)


def shape_operator(g: MetricFieldN, A: SymTensorFieldN) -> np.ndarray:
    """Index-raised view Ahat^k_j = g^{kl} A_lj (computed on demand, not stored)."""
    return np.einsum("...kl,...lj->...kj", g.inverse(), A.comps)


def _masked_report(check, values, chart, mask, stencil_layers, tol, note=""):
    if mask is not None and stencil_layers:
        mask = rp.dilate_mask(mask, stencil_layers, chart.periodic)
    if mask is not None:
        # broadcast node mask over trailing component axes
        extra = values.ndim - mask.ndim
        mask = mask.reshape(mask.shape + (1,) * extra) * np.ones(values.shape, dtype=bool)
    return rp.from_values(check, values, tol=tol, mode="sampled",
                          grid=_grid_meta(chart), mask=mask, note=note,
                          degenerate_note="degenerate: gbar nowhere positive definite")


def condition_i_residual(g: MetricFieldN, A: SymTensorFieldN, abar: AbarResult,
                         tol=None) -> rp.ResidualReport:
    """gbar(nablabar_i j, k) versus g(nabla_i (Ahat j), Ahat k) on every
    coordinate triple, masked where gbar is not positive definite."""
    chart = g.chart
    if not abar.pd_mask.any():
        return _masked_report("condition_i", np.zeros(chart.dims + (chart.ndim,) * 3),
                              chart, np.ones(chart.dims, dtype=bool), 0, _tol(chart, tol))
    gbar_metric = MetricFieldN(chart, abar.gbar.comps, validate=False)
    gamma_bar = _christoffel_masked(gbar_metric, abar.pd_mask)
    lhs = np.einsum("...mij,...mk->...ijk", gamma_bar, abar.gbar.comps)
    ahat = shape_operator(g, A)
    dahat = grad_components(ahat, chart)           # [..., i, p, j]
    gamma = abar.curvature.gamma
    covar = dahat + np.einsum("...pim,...mj->...ipj", gamma, ahat)
    rhs = np.einsum("...ipj,...pk->...ijk", covar, A.comps)
    return _masked_report("condition_i", lhs - rhs, chart, ~abar.pd_mask, 1,
                          _tol(chart, tol))


def condition_ii_residual(g: MetricFieldN, A: SymTensorFieldN, abar: AbarResult,
                          c: float, tol=None) -> rp.ResidualReport:
    """Rm of gbar versus (1/2) gbar o gbar + (c/2) A o A, masked off the
    positive-definite set of gbar (two stencil layers of contamination)."""
    chart = g.chart
    if not abar.pd_mask.any():
        return _masked_report("condition_ii", np.zeros(chart.dims + (chart.ndim,) * 4),
                              chart, np.ones(chart.dims, dtype=bool), 0, _tol(chart, tol))
    gbar_metric = MetricFieldN(chart, abar.gbar.comps, validate=False)
    gamma_bar = _christoffel_masked(gbar_metric, abar.pd_mask)
    ct_bar = riemann(gbar_metric, gamma_bar)
    res = ct_bar.rm - 0.5 * kulkarni_nomizu(abar.gbar, abar.gbar).comps
    res -= (0.5 * float(c)) * kulkarni_nomizu(A, A).comps
    return _masked_report("condition_ii", res, chart, ~abar.pd_mask, 2,
                          _tol(chart, tol))


def _christoffel_masked(gm: MetricFieldN, pd_mask: np.ndarray) -> np.ndarray:
    """Christoffels of a possibly degenerate metric; garbage outside pd_mask
    is neutralised (callers mask those nodes plus a stencil halo)."""
    if pd_mask.all():
        return christoffel(gm)
    comps = gm.comps.copy()
    eye = np.eye(gm.chart.ndim)
    comps[~pd_mask] = eye
    safe = MetricFieldN(gm.chart, comps, validate=False)
    return christoffel(safe)


def gauss_codazzi_residual_ndim(g: MetricFieldN, A: SymTensorFieldN, c: float,
                                tol=None) -> rp.CheckBundle:
    """Gauss residual Rm - (c/2) g o g - (1/2) A o A and the antisymmetrised
    Codazzi residual nabla_i A_jk - nabla_j A_ik."""
    chart = g.chart
    ct = riemann(g)
    g_sym = SymTensorFieldN(chart, g.comps)
    gauss = (ct.rm - (0.5 * float(c)) * kulkarni_nomizu(g_sym, g_sym).comps
             - 0.5 * kulkarni_nomizu(A, A).comps)
    dA = grad_components(A.comps, chart)           # [..., l, i, j]
    cod = (dA - np.einsum("...ijk->...jik", dA)
           - np.einsum("...mik,...jm->...ijk", ct.gamma, A.comps)
           + np.einsum("...mjk,...im->...ijk", ct.gamma, A.comps))
    t = _tol(chart, tol)
    reports = {
        "gauss": rp.from_values("gauss_ndim", gauss, tol=t, mode="sampled",
                                grid=_grid_meta(chart)),
        "codazzi": rp.from_values("codazzi_ndim", cod, tol=t, mode="sampled",
                                  grid=_grid_meta(chart)),
    }
    return rp.bundle(reports)


def minimality_check(g: MetricFieldN, A: SymTensorFieldN, tol: float = 1e-12) -> rp.ResidualReport:
    """Trace residual tr_g A = g^{ij} A_ij (zero for minimal data)."""
    tr = np.einsum("...ij,...ij->...", g.inverse(), A.comps)
    return rp.from_values("minimality", tr, tol=float(tol), mode="sampled",
                          grid=_grid_meta(g.chart))


# ---------------------------------------------------------------------------
# Boundary faces
# ---------------------------------------------------------------------------

def _face_slices(chart: GridChartN, face):
    axis, side = face
    idx = [slice(None)] * chart.ndim
    idx[axis] = 0 if side == "low" else -1
    return tuple(idx), axis, (-1.0 if side == "low" else 1.0)


def face_unit_conormal(g: MetricFieldN, face) -> np.ndarray:
    """Outward g-unit conormal vector components on a coordinate face:
    nu^k = sign * g^{ka} / sqrt(g^{aa}) for face normal axis a."""
    face = g.chart.require_physical(face)
    idx, axis, sign = _face_slices(g.chart, face)
    ginv_f = g.inverse()[idx]
    return sign * ginv_f[..., :, axis] / np.sqrt(ginv_f[..., axis, axis])[..., None]


def face_second_fundamental_form(g: MetricFieldN, face) -> np.ndarray:
    """Second fundamental form B_ij = g(nabla_i nu, j) of a coordinate face
    w.r.t. the outward unit conormal, from stencil Christoffels.  Components
    are returned in full chart coordinates; only the face-tangent block is
    meaningful."""
    face = g.chart.require_physical(face)
    chart = g.chart
    gamma = christoffel(g)
    idx, axis, sign = _face_slices(chart, face)
    ginv = g.inverse()
    nu = sign * ginv[..., :, axis] / np.sqrt(ginv[..., axis, axis])[..., None]
    dnu = grad_components(nu, chart)               # [..., i, k]
    cov = dnu + np.einsum("...kim,...m->...ik", gamma, nu)
    B = np.einsum("...jk,...ik->...ij", g.comps, cov)
    return 0.5 * (B[idx] + np.swapaxes(B[idx], -1, -2))


def boundary_umbilic_check(g: MetricFieldN, A: SymTensorFieldN, B_face: np.ndarray,
                           p: SpaceFormParams, face, tol=None,
                           a_nu_tol: float = 1e-10) -> rp.CheckBundle:
    """Free-boundary face conditions: B = sign sqrt(b-c) g on face-tangent
    directions and A(tangent, nu) = 0."""
    face = g.chart.require_physical(face)
    chart = g.chart
    wall = p.wall(face)
    hbar = math.sqrt(p.depth(face))
    idx, axis, _ = _face_slices(chart, face)
    tangent = [k for k in range(chart.ndim) if k != axis]

    B = np.asarray(B_face, dtype=float)
    g_f = g.comps[idx]
    umb = np.stack([B[..., i, j] - wall.sign * hbar * g_f[..., i, j]
                    for i in tangent for j in tangent], axis=-1)

    nu = face_unit_conormal(g, face)
    a_f = A.comps[idx]
    a_nu = np.stack([np.einsum("...k,...k->...", a_f[..., t, :], nu) for t in tangent], axis=-1)

    t_umb = _tol(chart, tol)
    reports = {
        "umbilicity": rp.from_values("face B - sign*sqrt(b-c)*g", umb, tol=t_umb,
                                     mode="sampled", grid=_grid_meta(chart, {"face": list(face)})),
        "a_nu": rp.from_values("A(tangent, nu)", a_nu, tol=float(a_nu_tol),
                               mode="sampled", grid=_grid_meta(chart, {"face": list(face)})),
    }
    return rp.bundle(reports)

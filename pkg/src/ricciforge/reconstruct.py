"""Constructive converse machinery: holomorphic square root of a log-harmonic
function, assembly of the second fundamental form, and the Gauss / Codazzi /
Simons / boundary residual suite that closes the loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import report as rp
from .chart import (ChartError, ComplexField, GridChart, ScalarField,
                    SymTensorField2, _derive, cauchy_riemann_residual,
                    complex_primitive, dz, edge_trace, fexp, flog,
                    gradient_flat, laplacian_flat, normal_derivative)
from .curvature import ConformalMetric2D, gaussian_curvature
from .ricci2d import (SpaceFormParams, _default_tol, _grid_meta, _mode,
                      mask_eps, ricci_flatness_residual)


class ReconstructionError(ValueError):
    """Hypotheses of the reconstruction lemma fail at the stated tolerance."""


@dataclass
class ReconstructionResult:
    """Reconstructed extrinsic data and its diagnostics."""

    phi: ComplexField | None
    A: SymTensorField2 | None
    path_gap: float = float("nan")
    cr_sup: float = float("nan")
    phase_shift: float = 0.0
    degenerate: bool = False
    reports: dict = None

    @property
    def passed(self) -> bool:
        if self.degenerate:
            return True
        return all(r.passed for r in self.reports.values())


def log_harmonic_check(F: ScalarField, eps=None, tol=None) -> rp.ResidualReport:
    """lap log F, masked on the near-zero band F <= eps.

    The mask tolerates zeros; a genuinely negative F (below -eps) is a sign
    violation and raises instead of being masked away.
    """
    eps_used = mask_eps(F.values, eps)
    if np.any(F.values < -eps_used):
        raise ReconstructionError(
            f"F is negative (min {F.values.min():.3e}); cannot take a holomorphic square root")
    masked = F.values <= eps_used
    mode = _mode(F)
    if masked.all():
        return rp.from_values("log_harmonic", np.zeros(F.chart.shape), tol=0.0,
                              mode=mode, grid=_grid_meta(F.chart, {"eps_mask": eps_used}),
                              mask=masked,
                              degenerate_note="degenerate: F below mask threshold everywhere")
    if mode == "analytic":
        res = laplacian_flat(flog(F))
    else:
        safe = np.where(masked, 1.0, F.values)
        res = laplacian_flat(ScalarField(F.chart, values=np.log(safe)))
    contaminated = rp.dilate_mask(masked, 1, (F.chart.periodic_y, F.chart.periodic_x))
    vals = np.where(np.isfinite(res.values), res.values, 0.0)
    return rp.from_values("log_harmonic", vals,
                          tol=_default_tol(mode, F.chart, tol), mode=mode,
                          grid=_grid_meta(F.chart, {"eps_mask": eps_used}),
                          mask=contaminated)


def holomorphic_sqrt(F: ScalarField, phase: str = "free", edge: str | None = None,
                     tol=None) -> ComplexField:
    """Holomorphic phi with |phi|^2 = F, given that log F is harmonic.

    Construction: the staircase primitive of d_z log F from the chart-center
    base node recovers log F + i v with v the harmonic conjugate pinned to
    v(base) = 0; phi = exp((log F + i v)/2).

    ``phase="free"`` keeps that normalization.  ``phase="real_on_edge"``
    additionally requires the Neumann condition d/dnu log F = 0 on the given
    physical edge and subtracts the (constant) edge value of v, taken at the
    edge midpoint node, so the imaginary part vanishes on the edge.

    Raises when log-harmonicity, the Neumann hypothesis, or path independence
    (simple connectivity; nonzero periods on periodic charts show up in the
    path gap) fail at tolerance.
    """
    chart = F.chart
    mode = _mode(F)
    lh = log_harmonic_check(F, tol=tol)
    if lh.degenerate:
        raise ReconstructionError("F vanishes at mask level everywhere; nothing to reconstruct")
    if not lh.passed:
        raise ReconstructionError(
            f"log F is not harmonic at tolerance: sup residual {lh.sup:.3e} > {lh.tol:.3e}")

    if mode == "analytic":
        logF = flog(F)
    else:
        logF = ScalarField(chart, values=np.log(F.values))
    v_int = dz(logF)
    zvals, gap = complex_primitive(v_int)
    gap_tol = _default_tol(mode, chart, tol, analytic_tol=1e-8)
    if gap > gap_tol:
        raise ReconstructionError(
            f"path-independence gap {gap:.3e} > {gap_tol:.3e}: chart is not simply "
            "connected for this integrand (nontrivial period?)")
    if chart.periodic_x or chart.periodic_y:
        # the noise-level period that survived the gap check would otherwise
        # leave a seam jump in phi that wrap-around stencils differentiate
        zvals = dewind_periods(zvals, v_int)

    # For real harmonic psi, int d_z psi dz = (psi + i psi*)/2 relative to the
    # base node; with psi = log F this is already w + i v for w = log(F)/2.
    ib, jb = chart.center_node()
    w_plus_iv = zvals + 0.5 * logF.values[jb, ib]
    shift = 0.0
    if phase == "real_on_edge":
        if edge is None:
            raise ReconstructionError("real_on_edge phase needs an edge")
        chart.require_physical(edge)
        neu = normal_derivative(logF, edge)
        neu_tol = _default_tol(mode, chart, tol, analytic_tol=1e-8)
        if np.max(np.abs(neu)) > neu_tol:
            raise ReconstructionError(
                f"Neumann hypothesis fails on edge {edge!r}: sup |d log F/dnu| "
                f"= {np.max(np.abs(neu)):.3e} > {neu_tol:.3e}")
        vtrace = edge_trace(ScalarField(chart, values=w_plus_iv.imag), edge)
        shift = float(vtrace[len(vtrace) // 2])
    elif phase != "free":
        raise ValueError(f"unknown phase normalization {phase!r}")

    phi_vals = np.exp(w_plus_iv - 1j * shift)
    return ComplexField(re=ScalarField(chart, values=phi_vals.real),
                        im=ScalarField(chart, values=phi_vals.imag))


def build_A(phi: ComplexField, m: ConformalMetric2D, p: SpaceFormParams) -> SymTensorField2:
    """Second fundamental form from the holomorphic datum and the metric:

        A_xx = Re phi + H e^{2u},  A_yy = -Re phi + H e^{2u},  A_xy = -Im phi.

    By construction tr_g A = 2H exactly and |Aring|^2_g = 2 |phi|^2 e^{-4u}.
    """
    if phi.chart != m.chart:
        raise ChartError("phi and metric live on different charts")
    he2u = fexp(m.u * 2.0) * p.H
    return SymTensorField2(axx=phi.re + he2u,
                           axy=phi.im * (-1.0),
                           ayy=phi.re * (-1.0) + he2u)


def traceless_part(A: SymTensorField2, m: ConformalMetric2D):
    """(Aring, H): Aring = A - H g with H read off the mean of tr_g A / 2."""
    h_field = mean_curvature_field(A, m)
    H = float(np.mean(h_field.values))
    e2u = fexp(m.u * 2.0)
    return SymTensorField2(axx=A.axx - e2u * H, axy=A.axy, ayy=A.ayy - e2u * H), H


def mean_curvature_field(A: SymTensorField2, m: ConformalMetric2D) -> ScalarField:
    """H = tr_g A / 2 = e^{-2u} (A_xx + A_yy) / 2."""
    return fexp(m.u * (-2.0)) * (A.axx + A.ayy) * 0.5


def sff_norm_sq_of(A: SymTensorField2, m: ConformalMetric2D) -> ScalarField:
    """|Aring|^2_g of the traceless part, from components."""
    ar, _ = traceless_part(A, m)
    e4 = fexp(m.u * (-4.0))
    return e4 * (ar.axx * ar.axx + ar.ayy * ar.ayy + ar.axy * ar.axy * 2.0)


def gauss_residual_2d(m: ConformalMetric2D, A: SymTensorField2,
                      p: SpaceFormParams, tol=None) -> rp.ResidualReport:
    """K - c - det(shape operator) = K - c - (A_xx A_yy - A_xy^2) e^{-4u}."""
    K = gaussian_curvature(m)
    det = (A.axx * A.ayy - A.axy * A.axy) * fexp(m.u * (-4.0))
    res = K - p.c - det
    mode = _mode(m.u)
    return rp.from_values("gauss_2d", res.values,
                          tol=_default_tol(mode, m.chart, tol, analytic_tol=1e-8),
                          mode=mode, grid=_grid_meta(m.chart))


def _conformal_gamma(m: ConformalMetric2D):
    """Christoffel symbols of e^{2u} delta: Gamma[k][i][j] as value arrays."""
    ux, uy = gradient_flat(m.u)
    ux, uy = ux.values, uy.values
    # index order [k][i][j], coordinates (0=x, 1=y)
    return [[[ux, uy], [uy, -ux]],
            [[-uy, ux], [ux, uy]]]


def codazzi_residual_2d(m: ConformalMetric2D, A: SymTensorField2, tol=None) -> rp.ResidualReport:
    """Both components of (nabla_x A)(y, .) - (nabla_y A)(x, .) with the
    conformal connection of e^{2u} delta."""
    if A.chart != m.chart:
        raise ChartError("A and metric live on different charts")
    gam = _conformal_gamma(m)
    comp = [[A.axx, A.axy], [A.axy, A.ayy]]
    d = [[gradient_flat(comp[i][j]) for j in range(2)] for i in range(2)]

    def dA(k, i, j):  # d_k A_ij
        return d[i][j][k].values

    def nabla(i, j, k):  # (nabla_i A)(j, k)
        out = dA(i, j, k).copy()
        for l in range(2):
            out -= gam[l][i][j] * comp[l][k].values
            out -= gam[l][i][k] * comp[j][l].values
        return out

    res = np.stack([nabla(0, 1, k) - nabla(1, 0, k) for k in range(2)])
    mode = _mode(m.u)
    return rp.from_values("codazzi_2d", res,
                          tol=_default_tol(mode, m.chart, tol, analytic_tol=1e-8),
                          mode=mode, grid=_grid_meta(m.chart))


def simons_residual(m: ConformalMetric2D, A: SymTensorField2, tol=None,
                    h_const_tol: float = 1e-8) -> rp.ResidualReport:
    """Simons identity residual  (1/2) lap_g |Aring|^2 - |nabla Aring|^2 - 2 K |Aring|^2.

    The Laplacian term is evaluated through its covariant expansion
    (1/2) lap |Aring|^2 = <lap Aring, Aring> + |nabla Aring|^2, so derivative
    stencils land only on the primary fields (Aring components and u); the two
    |nabla Aring|^2 contributions cancel algebraically and the computed field
    equals <lap Aring, Aring> - 2 K |Aring|^2.

    Requires constant mean curvature: the trace of A must not vary.
    """
    if A.chart != m.chart:
        raise ChartError("A and metric live on different charts")
    h_field = mean_curvature_field(A, m)
    h_span = float(np.max(h_field.values) - np.min(h_field.values))
    h_scale = max(1.0, float(np.max(np.abs(h_field.values))))
    if h_span > h_const_tol * h_scale:
        raise ReconstructionError(
            f"tr_g A varies by {h_span:.3e}; Simons identity needs constant H")
    ar, _ = traceless_part(A, m)
    K = gaussian_curvature(m)

    gam = _conformal_gamma(m)
    # d Gamma: derivatives of u up to second order
    uxx = _derive(m.u, 2, 0).values
    uxy = _derive(m.u, 1, 1).values
    uyy = _derive(m.u, 0, 2).values
    dgam = [  # dgam[d][k][i][j] = d_d Gamma^k_ij
        [[[uxx, uxy], [uxy, -uxx]], [[-uxy, uxx], [uxx, uxy]]],
        [[[uxy, uyy], [uyy, -uxy]], [[-uyy, uxy], [uxy, uyy]]],
    ]
    comp = [[ar.axx, ar.axy], [ar.axy, ar.ayy]]
    vals = [[comp[i][j].values for j in range(2)] for i in range(2)]
    d1 = [[gradient_flat(comp[i][j]) for j in range(2)] for i in range(2)]
    d2 = [[(_derive(comp[i][j], 2, 0).values,
            _derive(comp[i][j], 1, 1).values,
            _derive(comp[i][j], 0, 2).values) for j in range(2)] for i in range(2)]

    def dA(k, i, j):
        return d1[i][j][k].values

    def ddA(a, b, i, j):  # d_a d_b A_ij
        if a == 0 and b == 0:
            return d2[i][j][0]
        if a == 1 and b == 1:
            return d2[i][j][2]
        return d2[i][j][1]

    def nabla1(i, j, k):
        out = dA(i, j, k).copy()
        for l in range(2):
            out -= gam[l][i][j] * vals[l][k]
            out -= gam[l][i][k] * vals[j][l]
        return out

    n1 = [[[nabla1(i, j, k) for k in range(2)] for j in range(2)] for i in range(2)]

    def nabla2(i, j, k, l):
        # nabla_i nabla_j A_kl with the derivative expanded by the product rule
        out = ddA(i, j, k, l).copy()
        for mm in range(2):
            out -= dgam[i][mm][j][k] * vals[mm][l] + gam[mm][j][k] * dA(i, mm, l)
            out -= dgam[i][mm][j][l] * vals[k][mm] + gam[mm][j][l] * dA(i, k, mm)
            out -= gam[mm][i][j] * n1[mm][k][l]
            out -= gam[mm][i][k] * n1[j][mm][l]
            out -= gam[mm][i][l] * n1[j][k][mm]
        return out

    e2inv = np.exp(-2.0 * m.u.values)
    e4inv = e2inv * e2inv
    lap_ar = [[e2inv * (nabla2(0, 0, k, l) + nabla2(1, 1, k, l)) for l in range(2)] for k in range(2)]
    inner = np.zeros(m.chart.shape)
    norm2 = np.zeros(m.chart.shape)
    for k in range(2):
        for l in range(2):
            inner += lap_ar[k][l] * vals[k][l]
            norm2 += vals[k][l] * vals[k][l]
    inner *= e4inv
    norm2 *= e4inv
    res = inner - 2.0 * K.values * norm2
    mode = _mode(m.u)
    return rp.from_values("simons", res,
                          tol=_default_tol(mode, m.chart, tol, analytic_tol=1e-8),
                          mode=mode, grid=_grid_meta(m.chart))


def boundary_A_check(A: SymTensorField2, edge: str, tol: float = 1e-10) -> rp.ResidualReport:
    """|A(T, nu)| = |A_xy| trace along a straight physical edge."""
    A.chart.require_physical(edge)
    res = edge_trace(A.axy, edge)
    return rp.from_values("boundary_A_xy", res, tol=float(tol), mode="trace",
                          grid=_grid_meta(A.chart, {"edge": edge}))


def roundtrip(m: ConformalMetric2D, p: SpaceFormParams, phase: str = "free",
              edge: str | None = None, tol=None) -> ReconstructionResult:
    """Full converse pipeline: flatness check, F = (c+H^2-K) e^{4u},
    holomorphic square root, A assembly, and the whole residual suite.

    A metric whose F is masked everywhere (totally umbilical data) returns a
    degenerate result with no reconstruction, mirroring the umbilical branch.
    """
    flat = ricci_flatness_residual(m, p, tol=tol)
    reports = {"ricci_flatness": flat}
    if flat.degenerate:
        return ReconstructionResult(phi=None, A=None, degenerate=True, reports=reports)

    K = gaussian_curvature(m)
    F = (p.c_plus_h_sq - K) * fexp(m.u * 4.0)
    reports["log_harmonic"] = log_harmonic_check(F, tol=tol)
    phi = holomorphic_sqrt(F, phase=phase, edge=edge, tol=tol)
    _, gap = complex_primitive(dz(flog(F) if F.analytic
                                  else ScalarField(m.chart, values=np.log(F.values))))

    mode = _mode(m.u)
    modulus = phi.re * phi.re + phi.im * phi.im - F
    reports["modulus_fidelity"] = rp.from_values(
        "abs(phi)^2 - F", modulus.values,
        tol=_default_tol(mode, m.chart, tol, analytic_tol=1e-9),
        mode=mode, grid=_grid_meta(m.chart))
    cr = cauchy_riemann_residual(phi)
    reports["cauchy_riemann"] = rp.from_values(
        "cauchy_riemann", cr.values,
        tol=_default_tol(mode, m.chart, tol, analytic_tol=1e-10),
        mode=mode, grid=_grid_meta(m.chart))

    A = build_A(phi, m, p)
    reports["gauss"] = gauss_residual_2d(m, A, p, tol=tol)
    reports["codazzi"] = codazzi_residual_2d(m, A, tol=tol)
    reports["simons"] = simons_residual(m, A, tol=tol)
    for e in sorted(m.chart.boundary_edges):
        reports[f"boundary_A:{e}"] = boundary_A_check(A, e)

    shift = 0.0
    if phase == "real_on_edge":
        vtrace = edge_trace(phi.im, edge)
        shift = float(vtrace[len(vtrace) // 2])
    return ReconstructionResult(phi=phi, A=A, path_gap=gap,
                                cr_sup=reports["cauchy_riemann"].sup,
                                phase_shift=shift, reports=reports)

"""Cousin correspondence on parameter triples (c, H, {b_i}) and its
free-boundary extension, plus the invariance tie-in with the intrinsic
verifiers.

The correspondence preserves c + H^2 and every b_i - c.  Those combinations
are carried as exact rationals inside SpaceFormParams and passed through the
cousin map unchanged, which makes the double application an exact involution
in IEEE doubles (the only float step left on the way back is sqrt(H*H) = |H|).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .ricci2d import ParamError, SpaceFormParams, Wall, ricci_flatness_residual, sff_norm_sq
from .curvature import ConformalMetric2D, gaussian_curvature
from .chart import edge_trace, normal_derivative


class CousinError(ParamError):
    """No cousin exists at the requested ambient curvature."""


def cousin_params(p: SpaceFormParams, c_tilde: float) -> SpaceFormParams:
    """Cousin triple at ambient curvature c_tilde: H~ = +sqrt(c + H^2 - c~),
    b~_i = b_i - c + c~; signs and contact angles carry over.

    The nonnegative branch is taken for H~ (wall normals are oriented so the
    umbilical mean curvature is nonnegative; cousins mirror that convention).
    """
    ct = Fraction(float(c_tilde))
    h_sq = p.c_plus_h_sq_exact - ct
    if h_sq < 0:
        raise CousinError(
            f"no cousin at curvature {c_tilde}: c + H^2 = {float(p.c_plus_h_sq_exact)} < {c_tilde}")
    walls = {}
    for e, w in p.walls.items():
        walls[e] = Wall(b=float(p.depth_exact[e] + ct), sign=w.sign, alpha=w.alpha)
    return SpaceFormParams(
        c=float(c_tilde),
        H=math.sqrt(float(h_sq)),
        walls=walls,
        c_plus_h_sq_exact=p.c_plus_h_sq_exact,
        depth_exact=dict(p.depth_exact),
    )


def cousin_involution_check(p: SpaceFormParams, c_tilde: float) -> bool:
    """cousin(cousin(p, c~), c) must recover (c, |H|, {b_i}) exactly."""
    back = cousin_params(cousin_params(p, c_tilde), p.c)
    if back.c != p.c or back.H != abs(p.H):
        return False
    if set(back.walls) != set(p.walls):
        return False
    for e, w in p.walls.items():
        wb = back.walls[e]
        if wb.b != w.b or wb.sign != w.sign or wb.alpha != w.alpha:
            return False
    return True


def residual_invariance_check(m: ConformalMetric2D, p: SpaceFormParams,
                              p_tilde: SpaceFormParams) -> bool:
    """The intrinsic sufficient condition depends on (c, H) only through
    c + H^2: for two parameter sets with the same invariant the flatness
    residual fields must be identical bit for bit, and the boundary flux
    residuals identical on every shared wall with equal depth b - c.
    """
    if p.c_plus_h_sq_exact != p_tilde.c_plus_h_sq_exact:
        raise ParamError(
            f"c + H^2 differs: {float(p.c_plus_h_sq_exact)} vs {float(p_tilde.c_plus_h_sq_exact)}")
    r1 = ricci_flatness_residual(m, p)
    r2 = ricci_flatness_residual(m, p_tilde)
    if not (np.array_equal(r1.values, r2.values) and np.array_equal(r1.mask, r2.mask)):
        return False
    K = gaussian_curvature(m)
    for edge in sorted(set(p.walls) & set(p_tilde.walls) & m.chart.boundary_edges):
        if p.depth_exact[edge] != p_tilde.depth_exact[edge]:
            continue
        a2 = sff_norm_sq(K, p)
        a2t = sff_norm_sq(K, p_tilde)
        t1 = (-normal_derivative(a2, edge, u=m.u)
              - p.wall(edge).sign * 4.0 * math.sqrt(p.depth(edge)) * edge_trace(a2, edge))
        t2 = (-normal_derivative(a2t, edge, u=m.u)
              - p_tilde.wall(edge).sign * 4.0 * math.sqrt(p_tilde.depth(edge)) * edge_trace(a2t, edge))
        if not np.array_equal(t1, t2):
            return False
    return True

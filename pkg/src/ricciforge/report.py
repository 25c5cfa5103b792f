"""Residual reports: norms over unmasked nodes, tolerances, pass/fail."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ResidualReport:
    """Outcome of one residual check.

    ``sup`` and ``l2`` (root mean square) are taken over unmasked entries.
    A fully masked check is a *degenerate diagnostic*, not a failure: it
    passes with a note, and ``sup``/``l2`` are NaN.
    """

    check: str
    sup: float
    l2: float
    excluded: int
    tol: float
    passed: bool
    mode: str
    grid: dict
    note: str = ""
    values: np.ndarray | None = field(default=None, repr=False)
    mask: np.ndarray | None = field(default=None, repr=False)

    @property
    def degenerate(self) -> bool:
        return bool(np.isnan(self.sup))

    def to_json_dict(self) -> dict:
        def num(x):
            return None if np.isnan(x) else float(x)

        return {
            "check": self.check,
            "sup": num(self.sup),
            "l2": num(self.l2),
            "excluded": int(self.excluded),
            "tol": float(self.tol),
            "pass": bool(self.passed),
            "grid": self.grid,
            "mode": self.mode,
            "note": self.note,
        }


def from_values(check: str, values: np.ndarray, tol: float, mode: str, grid: dict,
                mask: np.ndarray | None = None, note: str = "",
                degenerate_note: str = "") -> ResidualReport:
    """Build a report from a residual array, excluding masked entries.

    ``mask`` is True where entries are excluded from the norms.
    """
    vals = np.asarray(values, dtype=float)
    if mask is None:
        mask = np.zeros(vals.shape, dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
    excluded = int(mask.sum())
    live = np.abs(vals[~mask])
    if live.size == 0:
        return ResidualReport(check=check, sup=float("nan"), l2=float("nan"),
                              excluded=excluded, tol=tol, passed=True, mode=mode,
                              grid=grid, note=degenerate_note or "degenerate: all nodes masked",
                              values=vals, mask=mask)
    sup = float(live.max())
    l2 = float(np.sqrt(np.mean(live ** 2)))
    return ResidualReport(check=check, sup=sup, l2=l2, excluded=excluded, tol=tol,
                          passed=bool(sup <= tol), mode=mode, grid=grid, note=note,
                          values=vals, mask=mask)


def dilate_mask(mask: np.ndarray, layers: int, periodic) -> np.ndarray:
    """Grow a mask by ``layers`` nodes along every axis (stencil contamination).

    ``periodic`` is a sequence of booleans per axis; wrapped neighbours are
    contaminated across periodic seams.
    """
    out = np.asarray(mask, dtype=bool).copy()
    for _ in range(layers):
        grown = out.copy()
        for axis in range(out.ndim):
            if periodic[axis]:
                grown |= np.roll(out, 1, axis=axis) | np.roll(out, -1, axis=axis)
            else:
                lo = [slice(None)] * out.ndim
                hi = [slice(None)] * out.ndim
                lo[axis] = slice(None, -1)
                hi[axis] = slice(1, None)
                grown[tuple(lo)] |= out[tuple(hi)]
                grown[tuple(hi)] |= out[tuple(lo)]
        out = grown
    return out


@dataclass
class CheckBundle:
    """Named group of reports with one aggregate verdict."""

    reports: dict
    passed: bool
    note: str = ""

    def to_json_dict(self) -> dict:
        return {
            "pass": bool(self.passed),
            "note": self.note,
            "reports": {k: r.to_json_dict() for k, r in self.reports.items()},
        }


def bundle(reports: dict, note: str = "") -> CheckBundle:
    return CheckBundle(reports=reports, passed=all(r.passed for r in reports.values()), note=note)


def fit_order(hs, residuals) -> float:
    """Least-squares slope of log(residual) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    rs = np.asarray(residuals, dtype=float)
    keep = rs > 0
    if keep.sum() < 2:
        return float("nan")
    slope = np.polyfit(np.log(hs[keep]), np.log(rs[keep]), 1)[0]
    return float(slope)

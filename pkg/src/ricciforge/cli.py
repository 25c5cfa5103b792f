"""Batch front door: generate charts, run verifier suites, reconstruct
extrinsic data, apply the cousin correspondence, run convergence studies.

Exit codes: 0 = pass (or degenerate diagnostic), 1 = a selected check failed,
2 = input error.  Reports are deterministic apart from a timestamp field.
RICCIFORGE_THREADS caps internal (BLAS) parallelism when set.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone


def _cap_threads():
    n = os.environ.get("RICCIFORGE_THREADS")
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                    "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, n)


_cap_threads()

import numpy as np  # noqa: E402  (after the thread cap on purpose)

from . import chartio, lawson, reconstruct, ricci2d, hyperdim, surfaces  # noqa: E402
from .chart import ScalarField  # noqa: E402
from .curvature import ConformalMetric2D, gaussian_curvature  # noqa: E402
from .report import fit_order  # noqa: E402


class InputError(ValueError):
    pass


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def _emit(doc: dict, out):
    doc["timestamp"] = _timestamp()
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def _square_chart(args, **kw):
    from .chart import GridChart
    n = args.n
    lo, hi = args.extent
    h = (hi - lo) / (n - 1)
    return GridChart(nx=n, ny=n, hx=h, hy=h, x0=lo, y0=lo, **kw)


def _build_generator(name: str, args):
    """Returns ("2d", metric, params_hint, sidecar) or ("nd", data, sidecar)."""
    if name == "plane":
        return "2d", surfaces.plane(_square_chart(args)), None, {}
    if name == "sphere-cap":
        return "2d", surfaces.sphere_cap(_square_chart(args)), None, {}
    if name == "enneper":
        return "2d", surfaces.enneper(_square_chart(args)), None, {}
    if name == "catenoid":
        m = surfaces.catenoid(args.t_min, args.t_max, args.n, args.n_theta, a=args.scale)
        return "2d", m, None, {}
    if name == "critical-catenoid":
        cc = surfaces.critical_catenoid(n_t=args.n, n_theta=args.n_theta)
        return "2d", cc.metric, cc.params, {"T": cc.T, "a": cc.a}
    if name == "clifford":
        data = surfaces.clifford_torus(args.k, args.ndim, counts=(args.n,) * args.ndim)
        return "nd", data, None, {}
    if name == "flat-disc":
        data = surfaces.flat_disc_in_ball(args.ndim, counts=(args.n,) * args.ndim)
        return "nd", data, None, {}
    raise InputError(f"unknown generator {name!r}")


def cmd_generate(args) -> int:
    kind, obj, params, sidecar = _build_generator(args.name, args)
    if kind == "2d":
        chartio.save_chart(args.out, obj.chart, {"u": obj.u})
    else:
        chartio.save_ndchart(args.out, obj.metric.chart, metric=obj.metric, A=obj.A)
    if sidecar:
        chartio.save_json(str(args.out) + ".constants.json", sidecar)
    return 0


# ---------------------------------------------------------------------------
# Parameter plumbing
# ---------------------------------------------------------------------------

def _parse_kv(pairs, cast, what):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise InputError(f"expected <edge>=<value> for {what}, got {item!r}")
        k, v = item.split("=", 1)
        try:
            out[k] = cast(v)
        except ValueError as exc:
            raise InputError(f"bad {what} value {v!r}: {exc}") from exc
    return out


def _params_from_args(args) -> ricci2d.SpaceFormParams:
    bs = _parse_kv(args.b, float, "--b")
    signs = _parse_kv(args.sign, int, "--sign")
    alphas = _parse_kv(args.alpha, float, "--alpha")
    walls = {}
    for edge, b in bs.items():
        walls[edge] = ricci2d.Wall(b=b, sign=signs.get(edge, 1),
                                   alpha=alphas.get(edge, math.pi / 2))
    return ricci2d.SpaceFormParams(c=args.c, H=args.H, walls=walls)


def _metric_from_input(args) -> ConformalMetric2D:
    if getattr(args, "generator", None):
        kind, obj, _, _ = _build_generator(args.generator, args)
        if kind != "2d":
            raise InputError("--generator with analytic mode must name a 2-D generator")
        m = obj
    else:
        if not args.chart:
            raise InputError("need a chart file or --generator")
        chart, fields = chartio.load_chart(args.chart)
        if "u" not in fields:
            raise InputError('chart file has no "u" field')
        m = ConformalMetric2D(chart, fields["u"])
    if args.mode == "sampled":
        m = m.sampled()
    elif args.mode == "analytic" and not m.analytic:
        raise InputError("analytic mode needs a closed-form generator (use --generator)")
    return m


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _run_checks_2d(m, p, args) -> dict:
    selected = args.checks.split(",") if args.checks else ["flatness", "moroianu", "boundary", "zeros"]
    reports = {}
    notes = []
    K = gaussian_curvature(m)
    if "flatness" in selected:
        r = ricci2d.ricci_flatness_residual(m, p, eps=args.eps_mask, tol=args.tol)
        reports["ricci_flatness"] = r.to_json_dict()
        if r.degenerate:
            notes.append(r.note)
    if "moroianu" in selected:
        reports["moroianu"] = ricci2d.moroianu_residual(m, tol=args.tol).to_json_dict()
        if np.any(K.values <= -1e-6):
            reports["moroianu_equivalence"] = ricci2d.moroianu_flatness_equivalence(
                m, tol=args.tol).to_json_dict()
    if "boundary" in selected:
        for edge in sorted(m.chart.boundary_edges):
            if edge in p.walls:
                reports[f"boundary_flux:{edge}"] = ricci2d.boundary_flux_residual(
                    m, K, p, edge, tol=args.tol).to_json_dict()
        if m.chart.boundary_edges:
            reports["ricci_with_boundary"] = ricci2d.ricci_with_boundary_check(
                m, tol=args.tol).to_json_dict()
    if "zeros" in selected:
        cls = ricci2d.zero_set_classify(ricci2d.sff_norm_sq(K, p))
        reports["zero_set"] = {"class": cls}
        if cls == "everywhere_zero":
            notes.append("degenerate: |Aring|^2 vanishes everywhere (umbilical data)")
    return {"reports": reports, "notes": notes}


def _json_pass(doc) -> bool:
    if isinstance(doc, dict):
        if "pass" in doc and doc["pass"] is False:
            return False
        return all(_json_pass(v) for v in doc.values())
    if isinstance(doc, list):
        return all(_json_pass(v) for v in doc)
    return True


def cmd_check(args) -> int:
    if args.chart and chartio.is_ndchart(args.chart):
        return _cmd_check_nd(args)
    m = _metric_from_input(args)
    p = _params_from_args(args)
    body = _run_checks_2d(m, p, args)
    doc = {"command": "check", "params": {"c": args.c, "H": args.H},
           "mode": args.mode, **body}
    ok = _json_pass(body["reports"])
    doc["pass"] = ok
    if args.dump_csv:
        K = gaussian_curvature(m)
        chartio.dump_field_csv(args.dump_csv, m.chart, {"u": m.u, "K": K})
    _emit(doc, args.out)
    return 0 if ok else 1


def _cmd_check_nd(args) -> int:
    chart, metric, A, _ = chartio.load_ndchart(args.chart)
    if metric is None:
        raise InputError("n-D chart file has no metric components")
    reports = {}
    if A is not None:
        gc = hyperdim.gauss_codazzi_residual_ndim(metric, A, args.c, tol=args.tol)
        reports["gauss_codazzi"] = gc.to_json_dict()
        reports["minimality"] = hyperdim.minimality_check(metric, A).to_json_dict()
        abar = hyperdim.abar_metric(metric, args.c)
        aoa = hyperdim.a_compose_a(metric, A)
        diff = np.abs(abar.gbar.comps - aoa.comps).max()
        reports["abar_vs_AoA"] = {"sup": float(diff), "pass": bool(diff <= (args.tol or 1.0))}
        reports["condition_i"] = hyperdim.condition_i_residual(metric, A, abar,
                                                               tol=args.tol).to_json_dict()
        reports["condition_ii"] = hyperdim.condition_ii_residual(metric, A, abar, args.c,
                                                                 tol=args.tol).to_json_dict()
    ok = _json_pass(reports)
    _emit({"command": "check", "params": {"c": args.c}, "reports": reports, "pass": ok}, args.out)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# reconstruct / correspond / convergence
# ---------------------------------------------------------------------------

def cmd_reconstruct(args) -> int:
    m = _metric_from_input(args)
    p = _params_from_args(args)
    result = reconstruct.roundtrip(m, p, phase=args.phase, edge=args.edge, tol=args.tol)
    doc = {"command": "reconstruct", "degenerate": result.degenerate,
           "reports": {k: r.to_json_dict() for k, r in result.reports.items()},
           "pass": result.passed}
    if not result.degenerate:
        doc["path_gap"] = result.path_gap
        doc["phase_shift"] = result.phase_shift
        if args.fields_out:
            chartio.save_chart(args.fields_out, m.chart, {
                "u": m.u, "phi_re": result.phi.re, "phi_im": result.phi.im,
                "A_xx": result.A.axx, "A_xy": result.A.axy, "A_yy": result.A.ayy,
            })
    _emit(doc, args.out)
    return 0 if result.passed else 1


def cmd_correspond(args) -> int:
    p = _params_from_args(args)
    try:
        q = lawson.cousin_params(p, args.c_tilde)
    except lawson.CousinError as exc:
        raise InputError(str(exc)) from exc
    doc = {"command": "correspond",
           "source": {"c": p.c, "H": p.H, "b": {str(e): w.b for e, w in p.walls.items()}},
           "cousin": {"c": q.c, "H": q.H, "b": {str(e): w.b for e, w in q.walls.items()}},
           "involution_exact": lawson.cousin_involution_check(p, args.c_tilde)}
    ok = doc["involution_exact"]
    if args.chart or args.generator:
        m = _metric_from_input(args)
        doc["residual_invariance"] = lawson.residual_invariance_check(m, p, q)
        ok = ok and doc["residual_invariance"]
    doc["pass"] = bool(ok)
    _emit(doc, args.out)
    return 0 if ok else 1


_CONV_CHECKS = {
    "flatness": lambda m, p: ricci2d.ricci_flatness_residual(m, p),
    "moroianu": lambda m, p: ricci2d.moroianu_residual(m),
}


def cmd_convergence(args) -> int:
    if args.check not in _CONV_CHECKS:
        raise InputError(f"unknown convergence check {args.check!r} "
                         f"(choose from {sorted(_CONV_CHECKS)})")
    p = _params_from_args(args)
    rows = []
    hs, sups = [], []
    for n in args.sizes:
        args.n = n
        kind, m, _, _ = _build_generator(args.generator, args)
        if kind != "2d":
            raise InputError("convergence studies run on 2-D generators")
        if args.mode == "sampled":
            m = m.sampled()
        rep = _CONV_CHECKS[args.check](m, p)
        h = max(m.chart.hx, m.chart.hy)
        rows.append({"n": n, "h": h, "sup": rep.sup, "l2": rep.l2})
        hs.append(h)
        sups.append(rep.sup)
    order = fit_order(hs, sups)
    _emit({"command": "convergence", "check": args.check, "generator": args.generator,
           "mode": args.mode, "table": rows, "order": order}, args.out)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_generator_opts(sp):
    sp.add_argument("--n", type=int, default=65, help="per-axis node count")
    sp.add_argument("--extent", type=float, nargs=2, default=(-1.0, 1.0),
                    metavar=("LO", "HI"), help="square chart extent")
    sp.add_argument("--t-min", dest="t_min", type=float, default=-1.2)
    sp.add_argument("--t-max", dest="t_max", type=float, default=1.2)
    sp.add_argument("--n-theta", dest="n_theta", type=int, default=64)
    sp.add_argument("--scale", type=float, default=1.0, help="catenoid scale a")
    sp.add_argument("--k", type=int, default=1, help="clifford: first factor dimension")
    sp.add_argument("--ndim", type=int, default=3, help="chart dimension for n-D generators")


def _add_param_opts(sp):
    sp.add_argument("--c", type=float, default=0.0, help="ambient curvature")
    sp.add_argument("--H", type=float, default=0.0, help="mean curvature")
    sp.add_argument("--b", action="append", metavar="EDGE=VAL", help="wall curvature per edge")
    sp.add_argument("--sign", action="append", metavar="EDGE=+-1", help="wall sign per edge")
    sp.add_argument("--alpha", action="append", metavar="EDGE=RAD", help="contact angle per edge")
    sp.add_argument("--eps-mask", dest="eps_mask", type=float, default=None)
    sp.add_argument("--tol", type=float, default=None, help="override pass tolerance")
    sp.add_argument("--mode", choices=("analytic", "sampled"), default="sampled")
    sp.add_argument("--out", default=None, help="write the report JSON here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ricciforge",
                                 description="CMC/free-boundary intrinsic verifiers and reconstruction")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a generator chart to JSON")
    g.add_argument("name", help="plane | sphere-cap | enneper | catenoid | "
                                "critical-catenoid | clifford | flat-disc")
    _add_generator_opts(g)
    g.add_argument("-o", "--out", required=True)
    g.set_defaults(fn=cmd_generate)

    c = sub.add_parser("check", help="run verifier suites on a chart")
    c.add_argument("chart", nargs="?", default=None, help="chart JSON path")
    c.add_argument("--generator", default=None, help="named generator instead of a file")
    c.add_argument("--checks", default=None, help="comma list: flatness,moroianu,boundary,zeros")
    c.add_argument("--dump-csv", dest="dump_csv", default=None, help="write u,K field CSV here")
    _add_generator_opts(c)
    _add_param_opts(c)
    c.set_defaults(fn=cmd_check)

    r = sub.add_parser("reconstruct", help="reconstruct phi and A from a metric")
    r.add_argument("chart", nargs="?", default=None)
    r.add_argument("--generator", default=None)
    r.add_argument("--phase", choices=("free", "real_on_edge"), default="free")
    r.add_argument("--edge", default=None)
    r.add_argument("--fields-out", dest="fields_out", default=None,
                   help="write phi and A as chart JSON here")
    _add_generator_opts(r)
    _add_param_opts(r)
    r.set_defaults(fn=cmd_reconstruct)

    co = sub.add_parser("correspond", help="cousin triple and invariance check")
    co.add_argument("--c-tilde", dest="c_tilde", type=float, required=True)
    co.add_argument("--chart", default=None, help="optional chart for the invariance check")
    co.add_argument("--generator", default=None)
    _add_generator_opts(co)
    _add_param_opts(co)
    co.set_defaults(fn=cmd_correspond)

    cv = sub.add_parser("convergence", help="grid-refinement study of one check")
    cv.add_argument("--generator", required=True)
    cv.add_argument("--check", required=True)
    cv.add_argument("--sizes", type=lambda s: [int(t) for t in s.split(",")],
                    default=[33, 65, 129])
    _add_generator_opts(cv)
    _add_param_opts(cv)
    cv.set_defaults(fn=cmd_convergence)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (InputError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Chart JSON serialization (2-D and n-D) and report emission.

The writer is deterministic (sorted keys, fixed layout, shortest round-trip
float repr), so generate -> load -> save reproduces files byte for byte.
Closed-form expressions are not serialized; loaded fields are sampled-mode.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .chart import GridChart, ScalarField
from .curvature import GridChartN, MetricFieldN
from .hyperdim import SymTensorFieldN


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def chart_to_dict(chart: GridChart, fields: dict) -> dict:
    doc = {
        "nx": chart.nx, "ny": chart.ny,
        "hx": chart.hx, "hy": chart.hy,
        "x0": chart.x0, "y0": chart.y0,
        "periodic_x": chart.periodic_x, "periodic_y": chart.periodic_y,
        "boundary_edges": sorted(chart.boundary_edges),
        "fields": {},
    }
    for name, f in fields.items():
        vals = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)
        if vals.shape != chart.shape:
            raise ValueError(f"field {name!r} shape {vals.shape} != chart {chart.shape}")
        doc["fields"][name] = [float(v) for v in vals.ravel()]
    return doc


def dict_to_chart(doc: dict):
    chart = GridChart(nx=int(doc["nx"]), ny=int(doc["ny"]),
                      hx=float(doc["hx"]), hy=float(doc["hy"]),
                      x0=float(doc["x0"]), y0=float(doc["y0"]),
                      periodic_x=bool(doc["periodic_x"]), periodic_y=bool(doc["periodic_y"]),
                      boundary_edges=frozenset(doc.get("boundary_edges", [])))
    fields = {}
    for name, flat in doc.get("fields", {}).items():
        vals = np.asarray(flat, dtype=float).reshape(chart.shape)
        fields[name] = ScalarField(chart, values=vals)
    return chart, fields


def save_chart(path, chart: GridChart, fields: dict):
    Path(path).write_text(_dumps(chart_to_dict(chart, fields)))


def load_chart(path):
    return dict_to_chart(json.loads(Path(path).read_text()))


# -- n-dimensional ----------------------------------------------------------

def ndchart_to_dict(chart: GridChartN, comp_fields: dict) -> dict:
    doc = {
        "dims": list(chart.dims),
        "spacings": list(chart.spacings),
        "origins": list(chart.origins),
        "periodic": list(chart.periodic),
        "physical_faces": sorted([[a, s] for a, s in chart.physical_faces]),
        "fields": {},
    }
    for name, arr in comp_fields.items():
        arr = np.asarray(arr, dtype=float)
        if arr.shape != chart.dims:
            raise ValueError(f"component {name!r} shape {arr.shape} != chart dims {chart.dims}")
        doc["fields"][name] = [float(v) for v in arr.ravel()]
    return doc


def dict_to_ndchart(doc: dict):
    chart = GridChartN(dims=tuple(doc["dims"]), spacings=tuple(doc["spacings"]),
                       origins=tuple(doc["origins"]), periodic=tuple(doc["periodic"]),
                       physical_faces=frozenset((int(a), s) for a, s in doc.get("physical_faces", [])))
    fields = {name: np.asarray(flat, dtype=float).reshape(chart.dims)
              for name, flat in doc.get("fields", {}).items()}
    return chart, fields


def sym_components(chart: GridChartN, comps: np.ndarray, prefix: str) -> dict:
    """Upper-triangle component dict keyed like g_00, g_01, ..."""
    n = chart.ndim
    return {f"{prefix}_{i}{j}": comps[..., i, j] for i in range(n) for j in range(i, n)}


def assemble_sym(chart: GridChartN, fields: dict, prefix: str) -> np.ndarray | None:
    """Inverse of sym_components: None when no such components are present."""
    n = chart.ndim
    if not any(k.startswith(prefix + "_") for k in fields):
        return None
    out = np.zeros(chart.dims + (n, n))
    for i in range(n):
        for j in range(i, n):
            key = f"{prefix}_{i}{j}"
            if key not in fields:
                raise ValueError(f"missing component {key!r}")
            out[..., i, j] = fields[key]
            out[..., j, i] = fields[key]
    return out


def save_ndchart(path, chart: GridChartN, metric: MetricFieldN | None = None,
                 A: SymTensorFieldN | None = None, extra: dict | None = None):
    comp = {}
    if metric is not None:
        comp.update(sym_components(chart, metric.comps, "g"))
    if A is not None:
        comp.update(sym_components(chart, A.comps, "A"))
    if extra:
        comp.update(extra)
    Path(path).write_text(_dumps(ndchart_to_dict(chart, comp)))


def load_ndchart(path):
    doc = json.loads(Path(path).read_text())
    chart, fields = dict_to_ndchart(doc)
    g = assemble_sym(chart, fields, "g")
    A = assemble_sym(chart, fields, "A")
    metric = MetricFieldN(chart, g) if g is not None else None
    shape = SymTensorFieldN(chart, A) if A is not None else None
    return chart, metric, shape, fields


def is_ndchart(path) -> bool:
    doc = json.loads(Path(path).read_text())
    return "dims" in doc


def save_json(path, doc: dict):
    Path(path).write_text(_dumps(doc))


def dump_field_csv(path, chart: GridChart, named_fields: dict):
    """Bulk field dump for plotting: x, y, then one column per field."""
    xm, ym = chart.meshgrid()
    cols = [xm.ravel(), ym.ravel()]
    names = ["x", "y"]
    for name, f in named_fields.items():
        vals = f.values if isinstance(f, ScalarField) else np.asarray(f)
        cols.append(np.asarray(vals, dtype=float).ravel())
        names.append(name)
    data = np.column_stack(cols)
    header = ",".join(names)
    np.savetxt(path, data, delimiter=",", header=header, comments="")

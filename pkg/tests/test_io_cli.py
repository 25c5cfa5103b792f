"""Chart JSON round trips and the command-line front door."""

import json
from pathlib import Path

import numpy as np
import pytest

from ricciforge import chartio, surfaces
from ricciforge.chart import GridChart, ScalarField
from ricciforge.cli import main


def test_chart_json_roundtrip_byte_exact(tmp_path):
    m = surfaces.catenoid(-1.2, 1.2, 17, 16, a=1.0, physical_edges=("east",))
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    chartio.save_chart(p1, m.chart, {"u": m.u})
    chart, fields = chartio.load_chart(p1)
    chartio.save_chart(p2, chart, fields)
    assert p1.read_bytes() == p2.read_bytes()
    assert chart == m.chart
    np.testing.assert_array_equal(fields["u"].values, m.u.values)


def test_chart_json_row_major_y_outer(tmp_path):
    c = GridChart(nx=4, ny=5, hx=0.5, hy=0.25, x0=1.0, y0=2.0)
    xm, ym = c.meshgrid()
    f = ScalarField(c, values=10.0 * ym + xm)
    doc = chartio.chart_to_dict(c, {"f": f})
    flat = doc["fields"]["f"]
    # node (i=1, j=2): flattened index j*nx + i
    assert flat[2 * 4 + 1] == 10.0 * (2.0 + 2 * 0.25) + (1.0 + 1 * 0.5)


def test_ndchart_json_roundtrip_byte_exact(tmp_path):
    data = surfaces.flat_disc_in_ball(3, counts=(9, 9, 8))
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    chartio.save_ndchart(p1, data.metric.chart, metric=data.metric, A=data.A)
    chart, metric, A, _ = chartio.load_ndchart(p1)
    chartio.save_ndchart(p2, chart, metric=metric, A=A)
    assert p1.read_bytes() == p2.read_bytes()
    np.testing.assert_array_equal(metric.comps, data.metric.comps)
    np.testing.assert_array_equal(A.comps, data.A.comps)
    assert chart.physical_faces == data.metric.chart.physical_faces


def test_ndchart_missing_component_rejected(tmp_path):
    data = surfaces.flat_disc_in_ball(2, counts=(9, 8))
    doc = chartio.ndchart_to_dict(data.metric.chart,
                                  chartio.sym_components(data.metric.chart,
                                                         data.metric.comps, "g"))
    del doc["fields"]["g_01"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="g_01"):
        chartio.load_ndchart(path)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_generate_and_check_pass(tmp_path):
    chart = tmp_path / "cat.json"
    assert main(["generate", "critical-catenoid", "--n", "49", "--n-theta", "32",
                 "-o", str(chart)]) == 0
    constants = json.loads((tmp_path / "cat.json.constants.json").read_text())
    assert abs(constants["T"] - 1.1996786) < 1e-6
    out = tmp_path / "report.json"
    code = main(["check", str(chart), "--c", "0", "--H", "0",
                 "--b", "east=1", "--b", "west=1", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["pass"] is True
    assert "ricci_flatness" in doc["reports"]


def test_cli_check_wrong_pair_fails(tmp_path):
    chart = tmp_path / "enneper.json"
    assert main(["generate", "enneper", "--n", "49", "-o", str(chart)]) == 0
    ok = main(["check", str(chart), "--c", "0", "--H", "0",
               "--checks", "flatness", "--out", str(tmp_path / "r1.json")])
    bad = main(["check", str(chart), "--c", "0", "--H", "1",
                "--checks", "flatness", "--out", str(tmp_path / "r2.json")])
    assert ok == 0 and bad == 1


def test_cli_check_degenerate_is_exit_zero(tmp_path):
    chart = tmp_path / "plane.json"
    assert main(["generate", "plane", "--n", "17", "-o", str(chart)]) == 0
    out = tmp_path / "r.json"
    code = main(["check", str(chart), "--c", "-1", "--H", "1",
                 "--checks", "flatness,zeros", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert any("degenerate" in n for n in doc["notes"])


def test_cli_input_error_is_exit_two(tmp_path):
    assert main(["check", str(tmp_path / "missing.json"), "--c", "0", "--H", "0"]) == 2
    assert main(["generate", "not-a-generator", "-o", str(tmp_path / "x.json")]) == 2


def test_cli_analytic_mode_via_generator(tmp_path):
    out = tmp_path / "r.json"
    code = main(["check", "--generator", "enneper", "--n", "49",
                 "--mode", "analytic", "--checks", "flatness,moroianu",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["reports"]["ricci_flatness"]["sup"] <= 1e-9
    assert doc["reports"]["ricci_flatness"]["mode"] == "analytic"


def test_cli_reconstruct_emits_fields(tmp_path):
    fields = tmp_path / "fields.json"
    out = tmp_path / "r.json"
    code = main(["reconstruct", "--generator", "catenoid",
                 "--t-min", "-1.2", "--t-max", "1.2", "--n", "49", "--n-theta", "32",
                 "--mode", "analytic", "--phase", "free",
                 "--fields-out", str(fields), "--out", str(out)])
    assert code == 0
    chart, loaded = chartio.load_chart(fields)
    assert {"u", "phi_re", "phi_im", "A_xx", "A_xy", "A_yy"} <= set(loaded)
    np.testing.assert_allclose(loaded["phi_re"].values, 1.0, atol=1e-10)


def test_cli_correspond_with_invariance(tmp_path):
    out = tmp_path / "r.json"
    code = main(["correspond", "--c", "0", "--H", "0", "--b", "east=1",
                 "--c-tilde", "-1", "--generator", "catenoid",
                 "--t-min", "-1.2", "--t-max", "1.2", "--n", "33", "--n-theta", "32",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["cousin"] == {"c": -1.0, "H": 1.0, "b": {"east": 0.0}}
    assert doc["involution_exact"] and doc["residual_invariance"]


def test_cli_correspond_invalid_target_is_input_error():
    assert main(["correspond", "--c", "0", "--H", "0", "--c-tilde", "5"]) == 2


def test_cli_convergence_reports_order(tmp_path):
    out = tmp_path / "r.json"
    code = main(["convergence", "--generator", "enneper", "--check", "flatness",
                 "--sizes", "33,65", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["order"] >= 1.9
    assert len(doc["table"]) == 2


def test_cli_deterministic_reports_modulo_timestamp(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["check", "--generator", "enneper", "--n", "33",
            "--checks", "flatness,zeros"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    da.pop("timestamp"), db.pop("timestamp")
    assert da == db


def test_cli_csv_dump(tmp_path):
    csv = tmp_path / "fields.csv"
    code = main(["check", "--generator", "enneper", "--n", "17",
                 "--checks", "flatness", "--dump-csv", str(csv),
                 "--out", str(tmp_path / "r.json")])
    assert code == 0
    header = csv.read_text().splitlines()[0]
    assert header == "x,y,u,K"
    assert len(csv.read_text().splitlines()) == 1 + 17 * 17


def test_cli_ndchart_check(tmp_path):
    chart = tmp_path / "clifford.json"
    assert main(["generate", "clifford", "--k", "1", "--ndim", "3", "--n", "17",
                 "-o", str(chart)]) == 0
    out = tmp_path / "r.json"
    code = main(["check", str(chart), "--c", "1", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["reports"]["minimality"]["pass"]
    assert doc["reports"]["gauss_codazzi"]["pass"]

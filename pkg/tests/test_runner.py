import json
import math
from fractions import Fraction

import numpy as np
import pytest

from specstab import catalog, cli
from specstab.config import ExperimentConfig
from specstab.runner import (
    COLUMNS,
    EmptyReportError,
    build_report,
    dumps,
    emit_plot_data,
    load_report,
    run,
    to_csv,
)

F = Fraction

QUICK = {
    "spectrum": ExperimentConfig(kind="spectrum", base_flux=F(1, 2), bloch=(16, 16)),
    "sweep": ExperimentConfig(
        kind="sweep",
        symbol=catalog.SYMBOLS["amo"].text,
        dim=1,
        field="sin(x1)",
        deltas=(F(1, 100), F(3, 100), F(1, 10)),
        window=60,
        fibers=4,
    ),
    "dirac": ExperimentConfig(kind="dirac", deltas=(F(1, 32), F(1, 48), F(1, 64)), bloch=(16, 16)),
    "hausdorff-sweep": ExperimentConfig(
        kind="hausdorff-sweep", deltas=(F(1, 32), F(1, 48), F(1, 64)), bloch=(16, 16), reference=(64, 64)
    ),
    "edge-sweep": ExperimentConfig(
        kind="edge-sweep", deltas=(F(1, 32), F(1, 48), F(1, 64)), bloch=(16, 16), reference=(64, 64)
    ),
    "gap-track": ExperimentConfig(
        kind="gap-track",
        base_flux=F(1, 3),
        deltas=(F(1, 48), F(1, 96), F(1, 192)),
        gap_energy=1.0,
        bound_constant=3.5,
        bloch=(16, 16),
        reference=(64, 64),
    ),
    "equivalence": ExperimentConfig(kind="equivalence", deltas=(F(0),), window=8, bloch=(32, 32)),
    "property-suite": ExperimentConfig(kind="property-suite", seed=3),
}


@pytest.fixture(scope="module", params=sorted(QUICK))
def quick_run(request, tmp_path_factory):
    cfg = QUICK[request.param]
    a = run(cfg, tmp_path_factory.mktemp("one"), workers=1)
    b = run(cfg, tmp_path_factory.mktemp("three"), workers=3, figure=False)
    return cfg, a, b


def test_outputs_are_byte_identical_across_workers(quick_run):
    cfg, a, b = quick_run
    for key in ("csv", "json"):
        assert a.paths[key].read_bytes() == b.paths[key].read_bytes()


def test_artifacts_and_report_shape(quick_run):
    cfg, a, _ = quick_run
    assert a.status == 0
    assert a.paths["figure"].read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    meta = json.loads(a.paths["meta"].read_text())
    assert meta["report"] == a.paths["json"].name
    assert meta["workers"] == 1
    report = load_report(a.paths["json"])
    assert report["kind"] == cfg.kind
    assert report["columns"] == COLUMNS[cfg.kind]
    header, *lines = a.paths["csv"].read_text().splitlines()
    assert header.split(",") == COLUMNS[cfg.kind]
    assert len(lines) == len(report["points"]) > 0
    # timestamps stay out of the report
    assert "created" not in a.paths["json"].read_text()


def test_spectrum_half_flux_edges():
    report, status = build_report(QUICK["spectrum"])
    s = report["summary"]
    assert s["e_minus"] == pytest.approx(-2 * math.sqrt(2), abs=1e-6)
    assert s["e_plus"] == pytest.approx(2 * math.sqrt(2), abs=1e-6)
    assert s["flux"] == "1/2"


def test_property_suite_has_no_failures():
    report, status = build_report(QUICK["property-suite"])
    assert status == 0
    assert report["summary"]["total_failures"] == 0
    assert {p["check"] for p in report["points"]} >= {"norm_chain", "hausdorff_metric", "hermiticity"}


def test_constant_symbol_sweep_has_zero_distance():
    # perturbing the argument of a constant symbol changes nothing
    cfg = ExperimentConfig(
        kind="sweep", symbol="0.5", dim=1, field="sin(x1)", deltas=(F(1, 100), F(1, 10), F(1, 2)), window=20
    )
    report, status = build_report(cfg)
    assert [p["hausdorff"] for p in report["points"]] == [0.0, 0.0, 0.0]
    assert "hausdorff" not in report["fits"]
    assert any(f.get("fit") == "hausdorff" for f in report["failures"])


def test_gap_track_reports_intervals():
    report, _ = build_report(QUICK["gap-track"])
    s = report["summary"]
    assert s["lambda_0"] == pytest.approx(math.sqrt(3) - 1, abs=1e-9)
    assert s["mu_0"] == pytest.approx(2.0, abs=1e-9)
    assert all(p["lambda"] <= p["mu"] for p in report["points"])


def test_gap_track_without_gap_fails():
    cfg = QUICK["gap-track"].replace(base_flux=F(0))
    report, status = build_report(cfg)
    assert status == 1
    assert report["points"] == []
    assert "no gap" in report["failures"][0]["error"]


# -- serialization --------------------------------------------------------------


def test_csv_format():
    text = to_csv(["a", "b", "c"], [{"a": 0.1, "b": True, "c": None}, {"a": 2, "b": False, "c": "x"}])
    assert text == "a,b,c\n0.1,1,\n2,0,x\n"


def test_dumps_is_canonical():
    a = dumps({"b": np.float64(1.5), "a": [F(1, 3), np.int64(2)], "c": float("nan")})
    assert a == dumps({"c": float("nan"), "a": [F(1, 3), 2], "b": 1.5})
    assert json.loads(a) == {"a": ["1/3", 2], "b": 1.5, "c": None}


def test_load_report_rejects_foreign_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        load_report(p)


# -- plot data ------------------------------------------------------------------


def _report(points, kind="dirac", fit=None):
    return {
        "kind": kind,
        "name": "t",
        "columns": COLUMNS[kind],
        "points": points,
        "fits": {"width": fit} if fit else {},
    }


def _rows(text):
    blocks = text.split("\n\n\n")
    data = [line.split() for line in blocks[0].splitlines() if line and not line.startswith("#")]
    return data, blocks[1:] if len(blocks) > 1 else []


def test_plot_data_three_points_with_fit():
    fit = {"constant": 2.0, "exponent": 0.5, "r2": 1.0}
    pts = [{"delta": d, "width": 2 * math.sqrt(d)} for d in (0.04, 0.01, 0.0025)]
    text = emit_plot_data(_report(pts, fit=fit), "loglog", fit_samples=5)
    data, rest = _rows(text)
    assert [float(r[0]) for r in data] == [0.0025, 0.01, 0.04]
    for x, y, f in data:
        assert float(y) == pytest.approx(float(f))
    assert len(rest) == 1
    fitted = [line.split() for line in rest[0].splitlines() if not line.startswith("#")]
    assert len(fitted) == 5
    assert float(fitted[0][0]) == pytest.approx(0.0025)
    assert float(fitted[-1][0]) == pytest.approx(0.04)
    assert all(r[1] == "nan" for r in fitted)


def test_plot_data_linear_edge_sweep():
    pts = [{"delta": d, "dev_upper": 0.5 * d, "dev_lower": 0.0} for d in (0.1, 0.2, 0.3)]
    report = _report(pts, kind="edge-sweep")
    data, rest = _rows(emit_plot_data(report, "linear"))
    assert [(float(x), float(y)) for x, y, _ in data] == [(0.1, 0.05), (0.2, 0.1), (0.3, 0.15)]
    assert all(f == "nan" for *_, f in data)
    assert rest == []
    # zero metric survives on linear axes
    data, _ = _rows(emit_plot_data(report, "linear", metric="dev_lower"))
    assert len(data) == 3


def test_plot_data_loglog_excludes_nonpositive():
    pts = [{"delta": 0.1, "width": 0.3}, {"delta": 0.2, "width": 0.0}, {"delta": 0.3, "width": 0.5}]
    text = emit_plot_data(_report(pts), "loglog")
    data, _ = _rows(text)
    assert len(data) == 2
    assert "# excluded: delta=0.2 width=0.0" in text


def test_plot_data_errors():
    with pytest.raises(EmptyReportError):
        emit_plot_data(_report([]))
    with pytest.raises(ValueError, match="metric"):
        emit_plot_data(_report([{"delta": 0.1, "width": 1.0}]), metric="nope")
    with pytest.raises(ValueError, match="style"):
        emit_plot_data(_report([{"delta": 0.1, "width": 1.0}]), style="semilog")


# -- command line ---------------------------------------------------------------


def test_cli_runs_config_and_plotdata(tmp_path, capsys):
    ini = tmp_path / "d.ini"
    ini.write_text("[experiment]\nname = quick\n[sweep]\ndeltas = 1/32, 1/48, 1/64\n[grid]\nbloch = 16x16\n")
    out = tmp_path / "out"
    assert cli.main(["dirac", "--config", str(ini), "--out", str(out), "--no-figure"]) == 0
    assert (out / "quick.json").exists()
    assert not (out / "quick.png").exists()
    assert "fit width: exponent" in capsys.readouterr().out
    dat = tmp_path / "quick.dat"
    assert cli.main(["plotdata", str(out / "quick.json"), "-o", str(dat)]) == 0
    assert dat.read_text().startswith("# kind=dirac name=quick style=loglog")


def test_cli_config_error_exit_code(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[sweep]\ndeltas = 0\n")
    assert cli.main(["dirac", "--config", str(ini), "--out", str(tmp_path)]) == 2
    assert "sweep.deltas" in capsys.readouterr().err
    assert cli.main(["dirac", "--config", str(tmp_path / "missing.ini")]) == 2
    assert cli.main(["proptest", "--workers", "0"]) == 2


def test_cli_plotdata_errors(tmp_path):
    p = tmp_path / "r.json"
    p.write_text(dumps({"format": "specstab-report/1", "kind": "dirac", "name": "e", "columns": COLUMNS["dirac"], "points": [], "fits": {}}))
    assert cli.main(["plotdata", str(p)]) == 2
    assert cli.main(["plotdata", str(tmp_path / "nope.json")]) == 2


def test_cli_proptest_seed(tmp_path, capsys):
    assert cli.main(["proptest", "--seed", "11", "--out", str(tmp_path), "--no-figure"]) == 0
    report = load_report(tmp_path / "property-suite.json")
    assert report["config"]["experiment"]["seed"] == 11


def test_cli_defaults_are_valid():
    for kind in cli.DEFAULTS:
        assert cli.default_config(kind).kind == kind

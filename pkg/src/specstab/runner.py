"""Run one configured experiment and persist CSV, JSON report, metadata and figure.

The CSV and JSON bytes depend only on the config: wall-clock data goes to
the separate ``<name>.meta.json`` file, and every parallel reduction is sorted.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import platform
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .hofstadter import (
    BlochGrid,
    RationalFlux,
    best_rational,
    bloch_spectrum,
    dirac_gap_experiment,
    flux_equivalence_check,
)
from .metrics import (
    FitError,
    OneSidedSpectrumError,
    edge_deviation,
    fit_scaling,
    hausdorff,
    track_inner_gap,
)
from .quantize import weyl_hopping
from .spectrum import EmptySpectrumError, detect_gaps, edges, filtered_spectrum, gap_near
from .symbols import SymbolError, parse_field, parse_symbol, perturb

log = logging.getLogger(__name__)

REPORT_FORMAT = "specstab-report/1"

COLUMNS = {
    "spectrum": ["index", "energy"],
    "sweep": ["delta", "hausdorff", "ratio", "dev_lower", "dev_upper"],
    "dirac": ["delta", "gap_lower", "gap_upper", "width", "center"],
    "hausdorff-sweep": ["delta", "flux", "hausdorff", "ratio"],
    "edge-sweep": ["delta", "flux", "e_minus", "e_plus", "dev_lower", "dev_upper"],
    "gap-track": ["delta", "flux", "lambda", "mu", "dev_lambda", "dev_mu", "interval_lower", "interval_upper", "interval_ok"],
    "equivalence": ["delta", "flux", "hausdorff"],
    "property-suite": ["check", "trials", "failures", "worst"],
}

# metric plotted by default for each kind, and its x column
DEFAULT_METRIC = {
    "spectrum": "energy",
    "sweep": "hausdorff",
    "dirac": "width",
    "hausdorff-sweep": "hausdorff",
    "edge-sweep": "dev_upper",
    "gap-track": "dev_lambda",
    "equivalence": "hausdorff",
    "property-suite": "failures",
}
X_COLUMN = {"spectrum": "index", "property-suite": "trials"}


class EmptyReportError(ValueError):
    pass


@dataclass
class RunResult:
    status: int
    report: dict
    paths: dict[str, Path]


# ---------------------------------------------------------------------------
# Serialization helpers


def plain(obj):
    """Convert numpy scalars, Fractions and tuples to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, RationalFlux):
        return str(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(plain(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_csv(columns: list[str], rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def _fit(rows, key, failures=None):
    pts = [(r["delta"], r[key]) for r in rows if r.get(key) is not None]
    try:
        return fit_scaling(pts).to_dict()
    except FitError as exc:
        if failures is not None:
            failures.append({"fit": key, "error": str(exc)})
        return None


# ---------------------------------------------------------------------------
# Experiments. Each returns (rows, fits, summary, failures).


def _symbol(cfg: ExperimentConfig):
    return parse_symbol(cfg.symbol, cfg.dim, cfg.params)


def _truncated(cfg: ExperimentConfig, s, workers: int):
    return filtered_spectrum(
        weyl_hopping(s),
        fibers=cfg.fiber_count,
        M=cfg.window_size,
        margin=cfg.filter_margin,
        threshold=cfg.filter_threshold,
        resolution=cfg.resolution,
        workers=workers,
        cap=cfg.cap,
    )


def _spectrum(cfg: ExperimentConfig, workers: int):
    if cfg.source == "bloch":
        S = bloch_spectrum(RationalFlux.of(cfg.base_flux), BlochGrid(*cfg.bloch), cfg.resolution, workers)
    else:
        s = _symbol(cfg)
        if cfg.field is not None and cfg.delta != 0:
            s = perturb(s, parse_field(cfg.field, cfg.dim), float(cfg.delta))
        S = _truncated(cfg, s, workers)
    rows = [{"index": i, "energy": e} for i, e in enumerate(S.values)]
    lo, hi = edges(S)
    summary = {
        "provenance": S.provenance,
        "count": len(S),
        "e_minus": lo,
        "e_plus": hi,
        "resolution": S.resolution,
        "gaps": [[g.lower, g.upper] for g in detect_gaps(S)],
    }
    if cfg.source == "bloch":
        summary["flux"] = str(RationalFlux.of(cfg.base_flux))
    return rows, {}, summary, []


def _bound_summary(rows, key="ratio"):
    """Bound constant fitted on the larger-delta half, checked at every delta."""
    ratios = [r[key] for r in rows if r.get(key) is not None]
    if not ratios:
        return {}
    by_delta = sorted((r for r in rows if r.get(key) is not None), key=lambda r: r["delta"])
    upper = by_delta[len(by_delta) // 2 :]
    C = max(r[key] for r in upper)
    return {
        "bound_constant": C,
        "bound_holds": all(r[key] <= C * (1 + 1e-12) for r in by_delta),
        "max_ratio": max(ratios),
        "median_ratio": float(np.median(ratios)),
    }


def _sweep(cfg: ExperimentConfig, workers: int):
    s = _symbol(cfg)
    F = parse_field(cfg.field, cfg.dim)
    S0 = _truncated(cfg, s, workers)
    rows, failures = [], []
    for d in cfg.deltas:
        try:
            Sd = _truncated(cfg, perturb(s, F, float(d)), workers)
        except EmptySpectrumError as exc:
            failures.append({"delta": float(d), "error": str(exc)})
            continue
        dh = hausdorff(Sd, S0)
        lo, hi = edge_deviation(Sd, S0)
        rows.append({"delta": float(d), "hausdorff": dh, "ratio": dh / math.sqrt(d), "dev_lower": lo, "dev_upper": hi})
    fits = {"hausdorff": _fit(rows, "hausdorff", failures)}
    summary = {"reference_count": len(S0), **_bound_summary(rows)}
    return rows, fits, summary, failures


def _flux_sweep_spectra(cfg: ExperimentConfig, workers: int):
    grid = BlochGrid(*cfg.bloch)
    for d in cfg.deltas:
        flux = best_rational(cfg.base_flux + d, cfg.qmax)
        yield float(d), flux, bloch_spectrum(flux, grid, workers=workers)


def _reference(cfg: ExperimentConfig, workers: int):
    return bloch_spectrum(RationalFlux.of(cfg.base_flux), BlochGrid(*cfg.reference), workers=workers)


def _hausdorff_sweep(cfg: ExperimentConfig, workers: int):
    S0 = _reference(cfg, workers)
    rows = []
    for d, flux, Sd in _flux_sweep_spectra(cfg, workers):
        dh = hausdorff(Sd, S0)
        rows.append({"delta": d, "flux": str(flux), "hausdorff": dh, "ratio": dh / math.sqrt(d)})
    failures: list = []
    fits = {"hausdorff": _fit(rows, "hausdorff", failures)}
    ratios = [r["ratio"] for r in rows]
    # one constant for the whole sweep: the largest ratio, accepted when it
    # does not exceed twice the median (no upward drift as delta shrinks)
    summary = {
        "bound_constant": max(ratios),
        "max_ratio": max(ratios),
        "median_ratio": float(np.median(ratios)),
    }
    summary["drift_ok"] = summary["max_ratio"] <= 2 * summary["median_ratio"]
    return rows, fits, summary, failures


def _edge_sweep(cfg: ExperimentConfig, workers: int):
    S0 = _reference(cfg, workers)
    rows = []
    for d, flux, Sd in _flux_sweep_spectra(cfg, workers):
        lo, hi = edges(Sd)
        dl, du = edge_deviation(Sd, S0)
        rows.append({"delta": d, "flux": str(flux), "e_minus": lo, "e_plus": hi, "dev_lower": dl, "dev_upper": du})
    failures: list = []
    fits = {k: _fit(rows, k, failures) for k in ("dev_lower", "dev_upper")}
    e0 = edges(S0)
    return rows, fits, {"e_minus_0": e0[0], "e_plus_0": e0[1]}, failures


def _gap_track(cfg: ExperimentConfig, workers: int):
    S0 = _reference(cfg, workers)
    gap = gap_near(S0, cfg.gap_energy, cfg.resolution)
    if gap is None:
        return [], {}, {}, [{"error": f"no gap near energy {cfg.gap_energy} at base flux"}]
    lam0, mu0 = gap
    C = cfg.bound_constant
    rows, failures = [], []
    for d, flux, Sd in _flux_sweep_spectra(cfg, workers):
        try:
            lam, mu = track_inner_gap(Sd, lam0, mu0)
        except OneSidedSpectrumError as exc:
            failures.append({"delta": d, "flux": str(flux), "error": str(exc)})
            continue
        row = {"delta": d, "flux": str(flux), "lambda": lam, "mu": mu, "dev_lambda": abs(lam - lam0), "dev_mu": abs(mu - mu0)}
        if C is not None:
            a, b = lam0 + C * math.sqrt(d), mu0 - C * math.sqrt(d)
            row.update(interval_lower=a, interval_upper=b, interval_ok=bool(a <= b and lam < a and b < mu))
        rows.append(row)
    fits = {k: _fit(rows, k, failures) for k in ("dev_lambda", "dev_mu")}
    summary = {"lambda_0": lam0, "mu_0": mu0}
    if C is not None:
        summary["intervals_ok"] = bool(rows) and all(r["interval_ok"] for r in rows)
    return rows, fits, summary, failures


def _dirac(cfg: ExperimentConfig, workers: int):
    res = dirac_gap_experiment(
        cfg.deltas,
        qmax=cfg.qmax,
        grid=BlochGrid(*cfg.bloch),
        resolution=cfg.resolution,
        base=cfg.base_flux,
        workers=workers,
    )
    fits = {
        "width": res.width.to_dict() if res.width else None,
        "center": res.center.to_dict() if res.center else None,
    }
    return res.rows, fits, {"fluxes": [r["flux"] for r in res.rows]}, res.failures


def _equivalence(cfg: ExperimentConfig, workers: int):
    rows, failures = [], []
    for d in cfg.deltas or (Fraction(0),):
        flux = best_rational((1 + d) * cfg.base_flux, cfg.qmax)
        try:
            dh = flux_equivalence_check(
                d,
                M=cfg.window_size,
                fibers=cfg.fiber_count,
                grid=BlochGrid(*cfg.bloch),
                resolution=cfg.resolution,
                base=cfg.base_flux,
                qmax=cfg.qmax,
                margin=cfg.filter_margin,
                threshold=cfg.filter_threshold,
                workers=workers,
            )
        except (EmptySpectrumError, SymbolError) as exc:
            failures.append({"delta": float(d), "error": str(exc)})
            continue
        rows.append({"delta": float(d), "flux": str(flux), "hausdorff": dh})
    summary = {"max_hausdorff": max((r["hausdorff"] for r in rows), default=None)}
    return rows, {}, summary, failures


def _property_suite(cfg: ExperimentConfig, workers: int):
    from .properties import run_suite

    results = run_suite(cfg.seed)
    rows = [{"check": r.name, "trials": r.trials, "failures": r.failures, "worst": r.worst} for r in results]
    failed = [r.name for r in results if not r.passed]
    summary = {"checks": len(results), "failed_checks": failed, "total_failures": sum(r.failures for r in results)}
    return rows, {}, summary, [{"check": n, "error": "invariant violated"} for n in failed]


EXPERIMENTS = {
    "spectrum": _spectrum,
    "sweep": _sweep,
    "dirac": _dirac,
    "hausdorff-sweep": _hausdorff_sweep,
    "edge-sweep": _edge_sweep,
    "gap-track": _gap_track,
    "equivalence": _equivalence,
    "property-suite": _property_suite,
}


def build_report(cfg: ExperimentConfig, workers: int = 1) -> tuple[dict, int]:
    """Compute the report dict and the exit status, without touching the disk."""
    rows, fits, summary, failures = EXPERIMENTS[cfg.kind](cfg, workers)
    name = cfg.name or cfg.kind
    report = {
        "format": REPORT_FORMAT,
        "kind": cfg.kind,
        "name": name,
        "config": cfg.to_dict(),
        "columns": COLUMNS[cfg.kind],
        "points": rows,
        "fits": {k: v for k, v in fits.items() if v is not None},
        "summary": summary,
        "failures": failures,
        "files": {"csv": f"{name}.csv", "json": f"{name}.json", "meta": f"{name}.meta.json", "figure": f"{name}.png"},
    }
    if cfg.kind == "property-suite":
        status = 1 if summary["failed_checks"] else 0
    else:
        status = 0 if rows else 1
    return plain(report), status


def _meta(cfg: ExperimentConfig, workers: int, elapsed: float, report_name: str) -> dict:
    import matplotlib
    import scipy

    return {
        "report": report_name,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "elapsed_seconds": round(elapsed, 3),
        "workers": workers,
        "host": platform.node(),
        "versions": {
            "specstab": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__,
        },
    }


def run(cfg: ExperimentConfig, out_dir, workers: int = 1, figure: bool = True) -> RunResult:
    """Run the experiment and write ``<name>.csv``, ``.json``, ``.meta.json`` and ``.png``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    report, status = build_report(cfg, workers)
    elapsed = time.perf_counter() - t0
    files = report["files"]
    paths = {k: out / v for k, v in files.items()}
    paths["csv"].write_text(to_csv(report["columns"], report["points"]), encoding="utf-8", newline="\n")
    paths["json"].write_text(dumps(report), encoding="utf-8", newline="\n")
    paths["meta"].write_text(
        json.dumps(_meta(cfg, workers, elapsed, files["json"]), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    if figure and report["points"]:
        from .plotting import render

        render(report, paths["figure"])
    else:
        paths.pop("figure")
    log.info("%s: wrote %s (status %d, %.1f s)", cfg.kind, os.fspath(paths["json"]), status, elapsed)
    return RunResult(status, report, paths)


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    if report.get("format") != REPORT_FORMAT:
        raise ValueError(f"{path}: not a {REPORT_FORMAT} report")
    return report


# ---------------------------------------------------------------------------
# Plot data


def emit_plot_data(report: dict, style: str = "loglog", metric: str | None = None, fit_samples: int = 25) -> str:
    """Whitespace-delimited ``x y fit_y`` rows, then a block of fitted-line rows.

    In ``loglog`` style rows with a non-positive coordinate are dropped and
    listed as comments. Missing values are written as ``nan``.
    """
    if style not in ("loglog", "linear"):
        raise ValueError(f"unknown style {style!r}")
    kind = report["kind"]
    metric = metric or DEFAULT_METRIC[kind]
    xcol = X_COLUMN.get(kind, "delta")
    points = report.get("points") or []
    if not points:
        raise EmptyReportError("report has no points")
    if metric not in report["columns"]:
        raise ValueError(f"metric {metric!r} not among columns {report['columns']}")
    fit = report.get("fits", {}).get(metric)

    def fit_at(x):
        if fit is None or x <= 0:
            return float("nan")
        return fit["constant"] * x ** fit["exponent"]

    lines = [f"# kind={kind} name={report['name']} style={style}", f"# columns: {xcol} {metric} fit"]
    if fit is not None:
        lines.append(f"# fit: {metric} = {fit['constant']!r} * {xcol}^{fit['exponent']!r}  (r2={fit['r2']!r})")
    data = []
    for p in points:
        x, y = p.get(xcol), p.get(metric)
        if x is None or y is None:
            lines.append(f"# skipped: {xcol}={x} {metric}={y} (missing)")
            continue
        x, y = float(x), float(y)
        if style == "loglog" and (x <= 0 or y <= 0):
            lines.append(f"# excluded: {xcol}={x!r} {metric}={y!r} (non-positive on log axes)")
            continue
        data.append((x, y))
    data.sort()
    for x, y in data:
        lines.append(f"{x!r} {y!r} {fit_at(x)!r}")
    if fit is not None and data:
        lo, hi = data[0][0], data[-1][0]
        xs = np.geomspace(lo, hi, fit_samples) if style == "loglog" and lo > 0 else np.linspace(lo, hi, fit_samples)
        lines += ["", "", "# fitted line"]
        lines += [f"{float(x)!r} nan {fit_at(float(x))!r}" for x in xs]
    return "\n".join(lines) + "\n"

"""Figures for experiment reports (matplotlib, Agg backend, PNG output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

RC = {
    "figure.figsize": (5.5, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.frameon": False,
    "svg.hashsalt": "specstab",
}

LABELS = {
    "hausdorff": r"$d_h(\sigma_\delta, \sigma_0)$",
    "width": "gap width",
    "center": "gap center",
    "dev_upper": r"$|\Delta E_+|$",
    "dev_lower": r"$|\Delta E_-|$",
    "dev_lambda": r"$|\lambda_\delta - \lambda_0|$",
    "dev_mu": r"$|\mu_\delta - \mu_0|$",
}


def _column(points, key):
    return np.array([np.nan if p.get(key) is None else float(p[key]) for p in points])


def _scaling(ax, report, metrics):
    points = report["points"]
    x = _column(points, "delta")
    for i, m in enumerate(metrics):
        y = _column(points, m)
        ok = (x > 0) & (y > 0)
        (line,) = ax.loglog(x[ok], y[ok], "o", label=LABELS.get(m, m))
        fit = report.get("fits", {}).get(m)
        if fit and ok.any():
            xs = np.geomspace(x[ok].min(), x[ok].max(), 50)
            ax.loglog(
                xs,
                fit["constant"] * xs ** fit["exponent"],
                "-",
                color=line.get_color(),
                lw=1,
                label=f"fit: exponent {fit['exponent']:.3f}",
            )
    ax.set_xlabel(r"$\delta$")
    ax.legend(fontsize=8)


def _bound(ax, report):
    s = report.get("summary", {})
    C = s.get("bound_constant")
    points = report["points"]
    x = _column(points, "delta")
    if C and x.size:
        xs = np.geomspace(np.nanmin(x), np.nanmax(x), 50)
        ax.loglog(xs, C * np.sqrt(xs), "k--", lw=1, label=rf"${C:.3g}\sqrt{{\delta}}$")
        ax.legend(fontsize=8)


def _spectrum(ax, report):
    e = _column(report["points"], "energy")
    ax.hist(e, bins=min(200, max(10, e.size // 20)), color="0.3")
    for lo, hi in report["summary"].get("gaps", []):
        ax.axvspan(lo, hi, color="tab:orange", alpha=0.3, lw=0)
    ax.set_xlabel("energy")
    ax.set_ylabel("count")


def _gap_track(ax, report):
    points = report["points"]
    x = _column(points, "delta")
    for key, style in (("lambda", "o-"), ("mu", "s-")):
        ax.semilogx(x, _column(points, key), style, label=key)
    s = report.get("summary", {})
    for key in ("lambda_0", "mu_0"):
        if key in s:
            ax.axhline(s[key], color="0.5", lw=0.8, ls=":")
    if "interval_lower" in report["columns"]:
        lo, hi = _column(points, "interval_lower"), _column(points, "interval_upper")
        ax.fill_between(x, lo, hi, where=lo <= hi, color="tab:green", alpha=0.2, label="bound interval")
    ax.set_xlabel(r"$\delta$")
    ax.set_ylabel("tracked gap edges")
    ax.legend(fontsize=8)


def _bars(ax, report, xkey, ykey):
    points = report["points"]
    labels = [str(p[xkey]) for p in points]
    ax.bar(range(len(points)), _column(points, ykey), color="0.4")
    ax.set_xticks(range(len(points)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(ykey)


def render(report: dict, path) -> None:
    kind = report["kind"]
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        if kind == "spectrum":
            _spectrum(ax, report)
        elif kind == "dirac":
            _scaling(ax, report, ["width", "center"])
        elif kind in ("sweep", "hausdorff-sweep"):
            _scaling(ax, report, ["hausdorff"])
            _bound(ax, report)
        elif kind == "edge-sweep":
            _scaling(ax, report, ["dev_upper", "dev_lower"])
        elif kind == "gap-track":
            _gap_track(ax, report)
        elif kind == "equivalence":
            _bars(ax, report, "flux", "hausdorff")
        else:
            _bars(ax, report, "check", "failures")
        ax.set_title(report["name"], fontsize=10)
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)

"""Experiment configuration: INI files with flat ``key = value`` sections.

Example::

    [experiment]
    kind = dirac
    name = dirac-half-flux

    [sweep]
    deltas = 1/32, 1/48, 1/64, 1/96, 1/128
    base_flux = 1/2
    qmax = 256

    [grid]
    bloch = 64x64

Every key and its range is listed in ``docs/reports.md``.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import catalog
from .hofstadter import EQUIVALENCE_MARGIN, EQUIVALENCE_THRESHOLD
from .quantize import DEFAULT_WINDOW_CAP
from .spectrum import default_margin
from .symbols import SymbolError, parameters, parse_field, parse_symbol

KINDS = (
    "spectrum",
    "sweep",
    "dirac",
    "hausdorff-sweep",
    "edge-sweep",
    "gap-track",
    "equivalence",
    "property-suite",
)
SWEEP_KINDS = ("sweep", "dirac", "hausdorff-sweep", "edge-sweep", "gap-track")

# section -> allowed keys
LAYOUT = {
    "experiment": ("kind", "name", "seed"),
    "symbol": ("text", "builtin", "dim", "field", "params", "delta", "source"),
    "sweep": ("deltas", "base_flux", "qmax", "gap_energy", "bound_constant"),
    "grid": ("bloch", "reference", "fibers", "window", "margin", "threshold", "resolution", "cap"),
}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending ``section.key``."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def parse_number(text: str) -> Fraction:
    """Exact rational from ``"p/q"``, a decimal or scientific literal."""
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(int(num), int(den))
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def format_number(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    # keep short decimals readable, fall back to p/q
    as_float = float(value)
    if Fraction(repr(as_float)) == value:
        return repr(as_float)
    return f"{value.numerator}/{value.denominator}"


def _grid_pair(text: str) -> tuple[int, int]:
    parts = text.lower().replace("*", "x").split("x")
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise ValueError(f"expected N or N1xN2, got {text!r}")
    return int(parts[0]), int(parts[1])


def _params(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in item:
            raise ValueError(f"expected name=value, got {item!r}")
        name, value = (s.strip() for s in item.split("=", 1))
        if not name.isidentifier():
            raise ValueError(f"bad parameter name {name!r}")
        out[name] = float(value) if value != "pi" else math.pi
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    name: str = ""
    seed: int = 0
    # symbol pipeline
    symbol: str | None = None
    dim: int = 2
    field: str | None = None
    params: dict = dataclasses.field(default_factory=dict)
    delta: Fraction = Fraction(0)
    source: str = "bloch"
    # sweeps
    deltas: tuple = ()
    base_flux: Fraction = Fraction(1, 2)
    qmax: int = 256
    gap_energy: float = 1.0
    bound_constant: float | None = None
    # discretization
    bloch: tuple[int, int] = (64, 64)
    reference: tuple[int, int] = (512, 512)
    fibers: int | None = None
    window: int | None = None
    margin: int | None = None
    threshold: float | None = None
    resolution: float | None = None
    cap: int = DEFAULT_WINDOW_CAP

    def __post_init__(self):
        validate(self)

    @property
    def fiber_count(self) -> int:
        if self.fibers is not None:
            return self.fibers
        return 16 if self.dim == 1 else 3

    @property
    def window_size(self) -> int:
        if self.window is not None:
            return self.window
        if self.kind == "equivalence":
            return 20
        return 400 if self.dim == 1 else 30

    @property
    def filter_margin(self) -> int:
        if self.margin is not None:
            return self.margin
        if self.kind == "equivalence":
            return EQUIVALENCE_MARGIN
        return default_margin(self.window_size)

    @property
    def filter_threshold(self) -> float:
        if self.threshold is not None:
            return self.threshold
        return EQUIVALENCE_THRESHOLD if self.kind == "equivalence" else 0.1

    @property
    def delta_values(self) -> list[float]:
        return [float(d) for d in self.deltas]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, dict[str, Any]]:
        """Section layout with JSON-friendly values; inverse of :func:`from_dict`."""
        return {
            "experiment": {"kind": self.kind, "name": self.name, "seed": self.seed},
            "symbol": {
                "text": self.symbol,
                "dim": self.dim,
                "field": self.field,
                "params": dict(sorted(self.params.items())),
                "delta": format_number(self.delta),
                "source": self.source,
            },
            "sweep": {
                "deltas": [format_number(d) for d in self.deltas],
                "base_flux": format_number(self.base_flux),
                "qmax": self.qmax,
                "gap_energy": self.gap_energy,
                "bound_constant": self.bound_constant,
            },
            "grid": {
                "bloch": list(self.bloch),
                "reference": list(self.reference),
                "fibers": self.fiber_count,
                "window": self.window_size,
                "margin": self.filter_margin,
                "threshold": self.filter_threshold,
                "resolution": self.resolution,
                "cap": self.cap,
            },
        }

    def to_ini(self) -> str:
        d = self.to_dict()
        lines = []
        for section, values in d.items():
            lines.append(f"[{section}]")
            for key, value in values.items():
                if value is None:
                    continue
                if key == "params":
                    if not value:
                        continue
                    value = ", ".join(f"{k}={v!r}" for k, v in value.items())
                elif key in ("bloch", "reference"):
                    value = f"{value[0]}x{value[1]}"
                elif key == "deltas":
                    if not value:
                        continue
                    value = ", ".join(value)
                lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)


def from_dict(data: dict) -> ExperimentConfig:
    """Rebuild a config from :meth:`ExperimentConfig.to_dict` output."""
    exp, sym, sw, grid = (data.get(s, {}) for s in ("experiment", "symbol", "sweep", "grid"))
    return ExperimentConfig(
        kind=exp["kind"],
        name=exp.get("name", ""),
        seed=int(exp.get("seed", 0)),
        symbol=sym.get("text"),
        dim=int(sym.get("dim", 2)),
        field=sym.get("field"),
        params={k: float(v) for k, v in sym.get("params", {}).items()},
        delta=parse_number(str(sym.get("delta", "0"))),
        source=sym.get("source", "bloch"),
        deltas=tuple(parse_number(str(d)) for d in sw.get("deltas", [])),
        base_flux=parse_number(str(sw.get("base_flux", "1/2"))),
        qmax=int(sw.get("qmax", 256)),
        gap_energy=float(sw.get("gap_energy", 1.0)),
        bound_constant=sw.get("bound_constant"),
        bloch=tuple(grid.get("bloch", (64, 64))),
        reference=tuple(grid.get("reference", (512, 512))),
        fibers=grid.get("fibers"),
        window=grid.get("window"),
        margin=grid.get("margin"),
        threshold=grid.get("threshold"),
        resolution=grid.get("resolution"),
        cap=int(grid.get("cap", DEFAULT_WINDOW_CAP)),
    )


def _convert(section: str, key: str, raw: str, fn):
    try:
        return fn(raw)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{section}.{key}", str(exc)) from None


def parse_config(text: str, kind: str | None = None) -> ExperimentConfig:
    """Parse INI text. ``kind`` fills in (or must match) ``experiment.kind``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from None
    for section in cp.sections():
        if section not in LAYOUT:
            raise ConfigError(section, "unknown section")
        for key in cp[section]:
            if key not in LAYOUT[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")

    def get(section, key):
        return cp.get(section, key, fallback=None)

    found = get("experiment", "kind")
    if found is None and kind is None:
        raise ConfigError("experiment.kind", "missing")
    if found is not None and kind is not None and found != kind:
        raise ConfigError("experiment.kind", f"config is {found!r} but the command runs {kind!r}")
    kw: dict[str, Any] = {"kind": found or kind}
    if get("experiment", "name") is not None:
        kw["name"] = get("experiment", "name")
    if get("experiment", "seed") is not None:
        kw["seed"] = _convert("experiment", "seed", get("experiment", "seed"), int)

    builtin = get("symbol", "builtin")
    text_ = get("symbol", "text")
    if builtin is not None and text_ is not None:
        raise ConfigError("symbol.builtin", "give either symbol.text or symbol.builtin, not both")
    if builtin is not None:
        entry = _convert("symbol", "builtin", builtin, lambda n: catalog.SYMBOLS[n])
        kw.update(symbol=entry.text, dim=entry.dim, params=dict(entry.params))
    elif text_ is not None:
        kw["symbol"] = text_
    if get("symbol", "dim") is not None:
        kw["dim"] = _convert("symbol", "dim", get("symbol", "dim"), int)
    if get("symbol", "field") is not None:
        raw = get("symbol", "field")
        kw["field"] = catalog.FIELDS[raw].text if raw in catalog.FIELDS else raw
    if get("symbol", "params") is not None:
        kw["params"] = {**kw.get("params", {}), **_convert("symbol", "params", get("symbol", "params"), _params)}
    if get("symbol", "delta") is not None:
        kw["delta"] = _convert("symbol", "delta", get("symbol", "delta"), parse_number)
    if get("symbol", "source") is not None:
        kw["source"] = get("symbol", "source")

    if get("sweep", "deltas") is not None:
        kw["deltas"] = _convert(
            "sweep", "deltas", get("sweep", "deltas"),
            lambda s: tuple(parse_number(p) for p in s.split(",") if p.strip()),
        )
    for key, fn in (("base_flux", parse_number), ("qmax", int), ("gap_energy", float), ("bound_constant", float)):
        if get("sweep", key) is not None:
            kw[key] = _convert("sweep", key, get("sweep", key), fn)
    for key, fn in (
        ("bloch", _grid_pair),
        ("reference", _grid_pair),
        ("fibers", int),
        ("window", int),
        ("margin", int),
        ("threshold", float),
        ("resolution", float),
        ("cap", int),
    ):
        if get("grid", key) is not None:
            kw[key] = _convert("grid", key, get("grid", key), fn)
    return ExperimentConfig(**kw)


def load_config(path, kind: str | None = None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), kind)


def validate(c: ExperimentConfig) -> None:
    if c.kind not in KINDS:
        raise ConfigError("experiment.kind", f"unknown kind {c.kind!r}; expected one of {', '.join(KINDS)}")
    if c.name and not all(ch.isalnum() or ch in "-_." for ch in c.name):
        raise ConfigError("experiment.name", "use letters, digits, '-', '_' or '.'")
    if not 0 <= c.seed < 2**64:
        raise ConfigError("experiment.seed", "must be an unsigned 64-bit integer")
    if c.dim not in (1, 2):
        raise ConfigError("symbol.dim", "must be 1 or 2")
    if c.source not in ("bloch", "truncation"):
        raise ConfigError("symbol.source", "must be 'bloch' or 'truncation'")
    if c.symbol is not None:
        try:
            s = parse_symbol(c.symbol, c.dim, c.params)
            missing = parameters(s.expr) - set(c.params) - {"pi"}
            if missing:
                raise SymbolError(f"unbound parameter(s) {', '.join(sorted(missing))}")
        except SymbolError as exc:
            raise ConfigError("symbol.text", str(exc)) from None
    if c.field is not None:
        try:
            parse_field(c.field, c.dim)
        except SymbolError as exc:
            raise ConfigError("symbol.field", str(exc)) from None
    if c.kind in SWEEP_KINDS:
        if len(c.deltas) < 1:
            raise ConfigError("sweep.deltas", "a sweep needs at least one delta")
        if any(d <= 0 for d in c.deltas):
            raise ConfigError("sweep.deltas", "sweep deltas must be strictly positive")
    if c.kind == "equivalence" and any(d <= -1 for d in c.deltas):
        raise ConfigError("sweep.deltas", "equivalence deltas must exceed -1")
    if list(c.deltas) != sorted(set(c.deltas)):
        # normalized form: ascending, no duplicates
        if len(set(c.deltas)) != len(c.deltas):
            raise ConfigError("sweep.deltas", "duplicate delta")
        object.__setattr__(c, "deltas", tuple(sorted(c.deltas)))
    if not 0 <= c.base_flux < 1:
        raise ConfigError("sweep.base_flux", "must lie in [0, 1)")
    if not 1 <= c.qmax <= 4096:
        raise ConfigError("sweep.qmax", "must lie in 1..4096")
    if not math.isfinite(c.gap_energy):
        raise ConfigError("sweep.gap_energy", "must be finite")
    if c.bound_constant is not None and not c.bound_constant > 0:
        raise ConfigError("sweep.bound_constant", "must be positive")
    for key in ("bloch", "reference"):
        pair = getattr(c, key)
        if len(pair) != 2 or not all(1 <= n <= 4096 for n in pair):
            raise ConfigError(f"grid.{key}", "each axis needs 1..4096 phases")
    if c.fibers is not None and not 1 <= c.fibers <= 64:
        raise ConfigError("grid.fibers", "must lie in 1..64 per axis")
    if not 1 <= c.cap <= 16384:
        raise ConfigError("grid.cap", "must lie in 1..16384")
    M = c.window_size
    if M < 2:
        raise ConfigError("grid.window", "must be >= 2")
    if (2 * M + 1) ** c.dim > c.cap:
        raise ConfigError("grid.window", f"(2M+1)^d = {(2 * M + 1) ** c.dim} exceeds cap {c.cap}")
    if not 1 <= c.filter_margin < M:
        raise ConfigError("grid.margin", "must satisfy 1 <= margin < window")
    if not 0 < c.filter_threshold < 1:
        raise ConfigError("grid.threshold", "must lie in (0, 1)")
    if c.resolution is not None and not c.resolution > 0:
        raise ConfigError("grid.resolution", "must be positive")
    needs_symbol = c.kind in ("sweep",) or (c.kind == "spectrum" and c.source == "truncation")
    if needs_symbol and c.symbol is None:
        raise ConfigError("symbol.text", f"kind {c.kind!r} needs a symbol")
    if c.kind == "sweep" and c.field is None:
        raise ConfigError("symbol.field", "a symbol sweep needs a perturbation field")

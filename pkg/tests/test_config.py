from fractions import Fraction
from pathlib import Path

import pytest

from specstab import catalog
from specstab.config import (
    ConfigError,
    ExperimentConfig,
    format_number,
    from_dict,
    load_config,
    parse_config,
    parse_number,
)


def test_parse_number_forms():
    assert parse_number("1/32") == Fraction(1, 32)
    assert parse_number(" 0.25 ") == Fraction(1, 4)
    assert parse_number("1e-3") == Fraction(1, 1000)
    assert parse_number("-1/3") == Fraction(-1, 3)
    with pytest.raises(ValueError):
        parse_number("1/0")
    with pytest.raises(ValueError):
        parse_number("abc")


def test_format_number_round_trips():
    for v in (Fraction(1, 32), Fraction(1, 3), Fraction(3), Fraction(-1, 96), Fraction(1, 1000)):
        assert parse_number(format_number(v)) == v
    assert format_number(Fraction(1, 4)) == "0.25"
    assert format_number(Fraction(1, 3)) == "1/3"


def test_minimal_dirac_config():
    cfg = parse_config("[sweep]\ndeltas = 1/64, 1/32\n", "dirac")
    assert cfg.kind == "dirac"
    # stored ascending
    assert cfg.deltas == (Fraction(1, 64), Fraction(1, 32))
    assert cfg.base_flux == Fraction(1, 2)


def test_builtin_symbol_and_field_names():
    text = "[experiment]\nkind = sweep\n[symbol]\nbuiltin = amo\nfield = sin1d\n[sweep]\ndeltas = 0.01\n"
    cfg = parse_config(text)
    assert cfg.symbol == catalog.SYMBOLS["amo"].text
    assert cfg.dim == 1
    assert cfg.field == catalog.FIELDS["sin1d"].text


def test_params_accept_pi():
    cfg = parse_config(
        "[symbol]\ntext = cos(xi1) + cos(xi2 + b*x1)\nparams = b=pi\nsource = truncation\n", "spectrum"
    )
    assert cfg.params["b"] == pytest.approx(3.141592653589793)


@pytest.mark.parametrize(
    "text, kind, field",
    [
        ("[sweep]\ndeltas = 0, 0.1\n", "dirac", "sweep.deltas"),
        ("[sweep]\ndeltas = 0.1, 0.1\n", "dirac", "sweep.deltas"),
        ("[sweep]\ndeltas = x\n", "dirac", "sweep.deltas"),
        ("[sweep]\n", "dirac", "sweep.deltas"),
        ("[sweep]\ndeltas = -1\n", "equivalence", "sweep.deltas"),
        ("[sweep]\ndeltas = 0.1\nbase_flux = 3/2\n", "dirac", "sweep.base_flux"),
        ("[sweep]\ndeltas = 0.1\nqmax = 0\n", "dirac", "sweep.qmax"),
        ("[sweep]\ndeltas = 0.1\nbound_constant = -2\n", "gap-track", "sweep.bound_constant"),
        ("[grid]\nbloch = 0x4\n", "spectrum", "grid.bloch"),
        ("[grid]\nbloch = 4x4x4\n", "spectrum", "grid.bloch"),
        ("[grid]\nthreshold = 1.5\n", "spectrum", "grid.threshold"),
        ("[grid]\nwindow = 40\n[symbol]\nbuiltin = harper\nsource = truncation\n", "spectrum", "grid.window"),
        ("[grid]\nwindow = 10\nmargin = 10\n", "spectrum", "grid.margin"),
        ("[grid]\nresolution = 0\n", "spectrum", "grid.resolution"),
        ("[grid]\nfoo = 1\n", "spectrum", "grid.foo"),
        ("[extra]\nfoo = 1\n", "spectrum", "extra"),
        ("[experiment]\nkind = dirac\n", "spectrum", "experiment.kind"),
        ("[experiment]\nkind = nope\n", None, "experiment.kind"),
        ("[experiment]\nseed = -1\n", "spectrum", "experiment.seed"),
        ("[experiment]\nname = a/b\n", "spectrum", "experiment.name"),
        ("[symbol]\ntext = x1*x1\ndim = 1\nsource = truncation\n", "spectrum", "symbol.text"),
        ("[symbol]\ntext = q*cos(xi1)\ndim = 1\nsource = truncation\n", "spectrum", "symbol.text"),
        ("[symbol]\nbuiltin = nope\n", "spectrum", "symbol.builtin"),
        ("[symbol]\nbuiltin = amo\ntext = 1\n", "spectrum", "symbol.builtin"),
        ("[symbol]\nbuiltin = amo\nfield = x1, x2\n", "spectrum", "symbol.field"),
        ("[symbol]\nsource = truncation\n", "spectrum", "symbol.text"),
        ("[symbol]\nbuiltin = amo\n[sweep]\ndeltas = 0.1\n", "sweep", "symbol.field"),
        ("[symbol]\nparams = b\n", "spectrum", "symbol.params"),
        ("[symbol]\ndim = 3\n", "spectrum", "symbol.dim"),
        ("not an ini", "spectrum", "file"),
    ],
)
def test_errors_name_the_field(text, kind, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text, kind)
    assert info.value.field == field
    assert str(info.value).startswith(field)


def test_missing_kind():
    with pytest.raises(ConfigError, match="experiment.kind"):
        parse_config("[sweep]\ndeltas = 0.1\n")


def test_resolved_defaults():
    one = ExperimentConfig(kind="spectrum", symbol="cos(xi1)", dim=1, source="truncation")
    assert (one.fiber_count, one.window_size, one.filter_margin, one.filter_threshold) == (16, 400, 40, 0.1)
    two = ExperimentConfig(kind="spectrum", symbol="cos(xi1) + cos(xi2)", dim=2, source="truncation")
    assert (two.fiber_count, two.window_size, two.filter_margin, two.filter_threshold) == (3, 30, 3, 0.1)
    eq = ExperimentConfig(kind="equivalence")
    assert (eq.window_size, eq.filter_margin, eq.filter_threshold) == (20, 2, 0.2)


@pytest.mark.parametrize(
    "cfg",
    [
        ExperimentConfig(kind="dirac", name="d", deltas=(Fraction(1, 32), Fraction(1, 96)), bloch=(32, 16)),
        ExperimentConfig(
            kind="sweep",
            symbol=catalog.SYMBOLS["amo"].text,
            dim=1,
            field="sin(x1)",
            deltas=(Fraction(1, 1000), Fraction(1, 10)),
            window=50,
            seed=7,
        ),
        ExperimentConfig(
            kind="spectrum",
            symbol=catalog.SYMBOLS["harper"].text,
            params=dict(catalog.SYMBOLS["harper"].params),
            source="truncation",
            delta=Fraction(1, 3),
            field="x1, x2",
            resolution=0.05,
        ),
        ExperimentConfig(kind="gap-track", base_flux=Fraction(1, 3), deltas=(Fraction(1, 48),), bound_constant=3.5),
    ],
)
def test_round_trips(cfg, tmp_path):
    d = cfg.to_dict()
    again = from_dict(d)
    assert again.to_dict() == d
    path = tmp_path / "c.ini"
    path.write_text(cfg.to_ini())
    assert load_config(path).to_dict() == d


@pytest.mark.parametrize("path", sorted((Path(__file__).parents[1] / "configs").glob("*.ini")), ids=lambda p: p.name)
def test_shipped_configs_load(path):
    cfg = load_config(path)
    assert cfg.name == path.read_text().split("name = ")[1].split()[0]

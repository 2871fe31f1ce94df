"""Built-in symbols and perturbation fields, addressable by name from configs."""

from __future__ import annotations

import math
from typing import NamedTuple

from .symbols import PerturbationField, Symbol, parse_field, parse_symbol


class SymbolEntry(NamedTuple):
    text: str
    dim: int
    params: dict


class FieldEntry(NamedTuple):
    text: str
    dim: int


SYMBOLS = {
    "free1d": SymbolEntry("cos(xi1)", 1, {}),
    "free2d": SymbolEntry("cos(xi1) + cos(xi2)", 2, {}),
    "constant": SymbolEntry("0.5", 1, {}),
    "amo": SymbolEntry("cos(xi1) + cos(x1)", 1, {}),
    "harper": SymbolEntry("cos(xi1) + cos(xi2 + b*x1)", 2, {"b": math.pi}),
    "harper-bloch": SymbolEntry("2*cos(xi1) + 2*cos(xi2 + b*x1)", 2, {"b": math.pi}),
    "modulated": SymbolEntry("(1 + 0.3*cos(x1))*cos(xi1) + 0.5*sin(2*xi1 - x1) + 0.2*sin(x1)", 1, {}),
    "mixed2d": SymbolEntry("cos(xi1 + xi2 + 0.5*x2) + 0.4*sin(x1)*cos(xi1 - x2) + cos(x1 + x2)", 2, {}),
}

FIELDS = {
    "zero1d": FieldEntry("0", 1),
    "zero2d": FieldEntry("0, 0", 2),
    "identity1d": FieldEntry("x1", 1),
    "identity2d": FieldEntry("x1, x2", 2),
    "sin1d": FieldEntry("sin(x1)", 1),
    "sin2d": FieldEntry("sin(x2), sin(x1)", 2),
}


def builtin_symbol(name: str, **params: float) -> Symbol:
    try:
        entry = SYMBOLS[name]
    except KeyError:
        raise KeyError(f"unknown built-in symbol {name!r}; known: {', '.join(sorted(SYMBOLS))}") from None
    return parse_symbol(entry.text, entry.dim, {**entry.params, **params})


def builtin_field(name: str) -> PerturbationField:
    try:
        entry = FIELDS[name]
    except KeyError:
        raise KeyError(f"unknown built-in field {name!r}; known: {', '.join(sorted(FIELDS))}") from None
    return parse_field(entry.text, entry.dim)


def fields_for(dim: int) -> list[str]:
    return sorted(n for n, f in FIELDS.items() if f.dim == dim)

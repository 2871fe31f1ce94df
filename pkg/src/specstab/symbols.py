"""Expression trees for phase-space symbols a(x, xi) and perturbation fields F(x).

A symbol is written in a small text language (see ``docs/grammar.md``)::

    cos(xi1) + cos(xi2 + b*x1)

and is accepted only when it is a finite sum of terms ``m(x) * trig(k.xi + g(x))``
with integer hop vectors ``k``; that is the class which quantizes to a
finite-range lattice operator with an exact kernel.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

MAX_DIM = 2
MAX_DEPTH = 200
MAX_NODES = 20000
MAX_TEXT = 20000

CONSTANTS = {"pi": math.pi}


class SymbolError(ValueError):
    """Base class for symbol language errors."""


class SymbolSyntaxError(SymbolError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class StructureError(SymbolError):
    """The expression parses but is outside the admissible symbol class."""


class UnboundParameterError(SymbolError):
    def __init__(self, name: str):
        super().__init__(f"unbound parameter {name!r}")
        self.name = name


# ---------------------------------------------------------------------------
# Expression nodes


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Add(self, _lift(other))

    def __radd__(self, other):
        return Add(_lift(other), self)

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __rmul__(self, other):
        return Mul(_lift(other), self)

    def __neg__(self):
        return Neg(self)

    def __sub__(self, other):
        return Add(self, Neg(_lift(other)))

    def __str__(self):
        return to_text(self)


def _lift(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Const(float(value))


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    """Coordinate ``x<index>`` (kind "x") or momentum ``xi<index>`` (kind "xi"), 1-based."""

    kind: str
    index: int

    @property
    def name(self) -> str:
        return f"{self.kind}{self.index}"


@dataclass(frozen=True)
class Param(Expr):
    name: str


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Cos(Expr):
    arg: Expr


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr


_TRIG = {"cos": Cos, "sin": Sin}


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Add, Mul)):
        return (e.left, e.right)
    if isinstance(e, (Neg, Cos, Sin)):
        return (e.arg,)
    return ()


def walk(e: Expr):
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(children(node))


def node_count(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def depth(e: Expr) -> int:
    best = 0
    stack = [(e, 1)]
    while stack:
        node, level = stack.pop()
        best = max(best, level)
        stack.extend((c, level + 1) for c in children(node))
    return best


def has_xi(e: Expr) -> bool:
    return any(isinstance(n, Var) and n.kind == "xi" for n in walk(e))


def parameters(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Param)}


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*(),])"
    r")"
)


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise SymbolSyntaxError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        if kind is None:
            break
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(_Token("end", "", n))
    return tokens


_VAR_RE = re.compile(r"^(xi|x)([1-9][0-9]*)$")


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.i = 0
        self.level = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.take()
        if tok.text != text:
            found = "end of input" if tok.kind == "end" else repr(tok.text)
            raise SymbolSyntaxError(f"expected {text!r}, found {found}", tok.pos)
        return tok

    def enter(self, pos: int):
        self.level += 1
        if self.level > MAX_DEPTH:
            raise SymbolSyntaxError("expression nested too deeply", pos)

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise SymbolSyntaxError(f"unexpected {tok.text!r}", tok.pos)
        return e

    # expr := term (('+' | '-') term)*
    def expr(self) -> Expr:
        self.enter(self.peek().pos)
        e = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Add(e, Neg(rhs))
        self.level -= 1
        return e

    # term := unary ('*' unary)*
    def term(self) -> Expr:
        e = self.unary()
        while self.peek().text == "*":
            self.take()
            e = Mul(e, self.unary())
        return e

    # unary := '-' unary | '+' unary | atom
    def unary(self) -> Expr:
        tok = self.peek()
        if tok.text in ("-", "+"):
            self.take()
            self.enter(tok.pos)
            inner = self.unary()
            self.level -= 1
            return Neg(inner) if tok.text == "-" else inner
        return self.atom()

    def atom(self) -> Expr:
        tok = self.take()
        if tok.kind == "num":
            return Const(float(tok.text))
        if tok.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "name":
            if tok.text in _TRIG:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _TRIG[tok.text](arg)
            if self.peek().text == "(":
                raise SymbolSyntaxError(f"unknown function {tok.text!r}", tok.pos)
            m = _VAR_RE.match(tok.text)
            if m:
                index = int(m.group(2))
                if index > self.dim:
                    raise SymbolSyntaxError(
                        f"variable {tok.text} out of range for dimension {self.dim}", tok.pos
                    )
                return Var(m.group(1), index)
            if tok.text in CONSTANTS:
                return Const(CONSTANTS[tok.text])
            return Param(tok.text)
        if tok.kind == "end":
            raise SymbolSyntaxError("unexpected end of input", tok.pos)
        raise SymbolSyntaxError(f"unexpected {tok.text!r}", tok.pos)


def parse_expr(text: str, dim: int = MAX_DIM) -> Expr:
    """Parse text into an expression tree; no structural checks."""
    if not isinstance(text, str) or not text.strip():
        raise SymbolSyntaxError("empty expression", 0)
    if len(text) > MAX_TEXT:
        raise SymbolSyntaxError("expression text too long", MAX_TEXT)
    if dim not in range(1, MAX_DIM + 1):
        raise SymbolError(f"dimension must be 1..{MAX_DIM}, got {dim}")
    e = _Parser(text, dim).parse()
    if node_count(e) > MAX_NODES:
        raise SymbolSyntaxError("expression has too many nodes", 0)
    return e


# ---------------------------------------------------------------------------
# Printing

_PREC = {Add: 1, Mul: 2, Neg: 3}


def _prec(e: Expr) -> int:
    if isinstance(e, Const) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 3
    return _PREC.get(type(e), 4)


def _wrap(e: Expr, minimum: int) -> str:
    s = to_text(e)
    return f"({s})" if _prec(e) < minimum else s


def to_text(e: Expr) -> str:
    """Render an expression so that parsing the text rebuilds an equivalent tree."""
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Param):
        return e.name
    if isinstance(e, Add):
        if isinstance(e.right, Neg):
            return f"{_wrap(e.left, 1)} - {_wrap(e.right.arg, 2)}"
        return f"{_wrap(e.left, 1)} + {_wrap(e.right, 2)}"
    if isinstance(e, Mul):
        return f"{_wrap(e.left, 2)}*{_wrap(e.right, 3)}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg, 3)}"
    if isinstance(e, Cos):
        return f"cos({to_text(e.arg)})"
    if isinstance(e, Sin):
        return f"sin({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# ---------------------------------------------------------------------------
# Evaluation


def eval_expr(e: Expr, x, xi=None, params: Mapping[str, float] | None = None):
    """Evaluate ``e`` at coordinates ``x`` and momenta ``xi``.

    ``x`` and ``xi`` are sequences indexed by ``j - 1``; their entries may be
    floats or numpy arrays of a common shape, in which case the result is an
    array of that shape.
    """
    params = params or {}
    x = None if x is None else [np.asarray(v, dtype=float) if not np.isscalar(v) else v for v in x]
    xi = None if xi is None else [np.asarray(v, dtype=float) if not np.isscalar(v) else v for v in xi]

    def ev(node):
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Var):
            src = x if node.kind == "x" else xi
            if src is None or node.index > len(src):
                raise SymbolError(f"no value supplied for {node.name}")
            return src[node.index - 1]
        if isinstance(node, Param):
            try:
                return params[node.name]
            except KeyError:
                raise UnboundParameterError(node.name) from None
        if isinstance(node, Add):
            return ev(node.left) + ev(node.right)
        if isinstance(node, Mul):
            return ev(node.left) * ev(node.right)
        if isinstance(node, Neg):
            return -ev(node.arg)
        if isinstance(node, Cos):
            return np.cos(ev(node.arg))
        if isinstance(node, Sin):
            return np.sin(ev(node.arg))
        raise TypeError(f"not an expression node: {node!r}")

    return ev(e)


def substitute(e: Expr, mapping: Mapping[Var, Expr]) -> Expr:
    if isinstance(e, Var):
        return mapping.get(e, e)
    if isinstance(e, Add):
        return Add(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Mul):
        return Mul(substitute(e.left, mapping), substitute(e.right, mapping))
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Cos):
        return Cos(substitute(e.arg, mapping))
    if isinstance(e, Sin):
        return Sin(substitute(e.arg, mapping))
    return e


# ---------------------------------------------------------------------------
# Structural analysis

# Growth classes of xi-free subexpressions, ordered.
CONST, BOUNDED, AFFINE = 0, 1, 2
# xi-dependent, band-limited, bounded.
BANDED = 3


def _numeric_constant(e: Expr) -> float | None:
    """Value of a purely literal subtree, else None."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Neg):
        v = _numeric_constant(e.arg)
        return None if v is None else -v
    if isinstance(e, Mul):
        a, b = _numeric_constant(e.left), _numeric_constant(e.right)
        return None if a is None or b is None else a * b
    if isinstance(e, Add):
        a, b = _numeric_constant(e.left), _numeric_constant(e.right)
        return None if a is None or b is None else a + b
    return None


def _xfree_kind(e: Expr) -> int:
    """Growth class of a xi-free expression; raises on nonlinear unbounded x."""
    if isinstance(e, (Const, Param)):
        return CONST
    if isinstance(e, Var):
        return AFFINE
    if isinstance(e, Neg):
        return _xfree_kind(e.arg)
    if isinstance(e, Add):
        return max(_xfree_kind(e.left), _xfree_kind(e.right))
    if isinstance(e, Mul):
        a, b = _xfree_kind(e.left), _xfree_kind(e.right)
        if a == CONST or b == CONST:
            return max(a, b)
        if a == BOUNDED and b == BOUNDED:
            return BOUNDED
        raise StructureError(f"nonlinear unbounded x-dependence in {to_text(e)!r}")
    if isinstance(e, (Cos, Sin)):
        inner = _xfree_kind(e.arg)
        return CONST if inner == CONST else BOUNDED
    raise TypeError(f"not an expression node: {e!r}")


@dataclass(frozen=True)
class TrigArgument:
    hop: tuple[int, ...]
    shift: Expr  # xi-free part g(x)


def _split_terms(e: Expr, sign: int = 1):
    if isinstance(e, Add):
        yield from _split_terms(e.left, sign)
        yield from _split_terms(e.right, sign)
    elif isinstance(e, Neg):
        yield from _split_terms(e.arg, -sign)
    else:
        yield sign, e


def _flatten_product(e: Expr) -> list[Expr]:
    if isinstance(e, Mul):
        return _flatten_product(e.left) + _flatten_product(e.right)
    return [e]


def split_trig_argument(arg: Expr, dim: int) -> TrigArgument:
    """Write a trig argument as ``k.xi + g(x)`` with integer ``k``."""
    hop = [0.0] * dim
    rest: list[Expr] = []
    for sign, term in _split_terms(arg):
        if not has_xi(term):
            rest.append(term if sign > 0 else Neg(term))
            continue
        factors = _flatten_product(term)
        xis = [f for f in factors if isinstance(f, Var) and f.kind == "xi"]
        others = [f for f in factors if not (isinstance(f, Var) and f.kind == "xi")]
        if len(xis) != 1:
            raise StructureError(
                f"xi must enter trig arguments linearly, got {to_text(term)!r}"
            )
        coeff = 1.0
        for f in others:
            v = _numeric_constant(f)
            if v is None:
                raise StructureError(
                    f"coefficient of {xis[0].name} must be a literal integer in {to_text(term)!r}"
                )
            coeff *= v
        hop[xis[0].index - 1] += sign * coeff
    k = []
    for c in hop:
        if not math.isfinite(c) or abs(c - round(c)) > 1e-12:
            raise StructureError(f"hop coefficients must be integers, got {c!r}")
        k.append(int(round(c)))
    shift: Expr = Const(0.0)
    for r in rest:
        shift = r if isinstance(shift, Const) and shift.value == 0.0 else Add(shift, r)
    if _xfree_kind(shift) > AFFINE:
        raise StructureError("unbounded x inside trig argument")
    return TrigArgument(tuple(k), shift)


def _symbol_kind(e: Expr, dim: int) -> int:
    if not has_xi(e):
        return _xfree_kind(e)
    if isinstance(e, Var):
        raise StructureError(f"{e.name} outside a trig argument")
    if isinstance(e, (Cos, Sin)):
        split_trig_argument(e.arg, dim)
        return BANDED
    if isinstance(e, Neg):
        return _symbol_kind(e.arg, dim)
    if isinstance(e, Add):
        a, b = _symbol_kind(e.left, dim), _symbol_kind(e.right, dim)
        if AFFINE in (a, b):
            raise StructureError("unbounded bare x outside trig argument")
        return BANDED
    if isinstance(e, Mul):
        a, b = _symbol_kind(e.left, dim), _symbol_kind(e.right, dim)
        if a == BANDED and b == BANDED:
            raise StructureError(
                f"product of two xi-dependent factors in {to_text(e)!r}"
            )
        if AFFINE in (a, b):
            raise StructureError("unbounded bare x multiplies a xi-dependent factor")
        return BANDED
    raise TypeError(f"not an expression node: {e!r}")


def check_symbol_structure(e: Expr, dim: int) -> None:
    kind = _symbol_kind(e, dim)
    if kind == AFFINE:
        raise StructureError("unbounded bare x outside trig argument")


# ---------------------------------------------------------------------------
# Symbols and fields


@dataclass(frozen=True)
class Symbol:
    dim: int
    expr: Expr
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in range(1, MAX_DIM + 1):
            raise SymbolError(f"dimension must be 1..{MAX_DIM}, got {self.dim}")
        for n in walk(self.expr):
            if isinstance(n, Var) and n.index > self.dim:
                raise SymbolError(f"{n.name} exceeds dimension {self.dim}")
        check_symbol_structure(self.expr, self.dim)
        object.__setattr__(self, "params", dict(self.params))

    def __call__(self, x, xi):
        return eval_expr(self.expr, x, xi, self.params)

    def bind(self, **values: float) -> "Symbol":
        return Symbol(self.dim, self.expr, {**self.params, **values})

    def text(self) -> str:
        return to_text(self.expr)


@dataclass(frozen=True)
class PerturbationField:
    dim: int
    components: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.components) != self.dim:
            raise SymbolError(
                f"field needs {self.dim} components, got {len(self.components)}"
            )
        for c in self.components:
            if has_xi(c):
                raise StructureError("perturbation field must not depend on xi")
            _xfree_kind(c)
            for n in walk(c):
                if isinstance(n, Var) and n.index > self.dim:
                    raise SymbolError(f"{n.name} exceeds dimension {self.dim}")

    def __call__(self, x, params=None):
        return [eval_expr(c, x, None, params) for c in self.components]

    def text(self) -> str:
        return ", ".join(to_text(c) for c in self.components)


def parse_symbol(text: str, d: int, params: Mapping[str, float] | None = None) -> Symbol:
    """Parse and validate a symbol of dimension ``d``."""
    return Symbol(d, parse_expr(text, d), dict(params or {}))


def _split_top_level(text: str) -> list[tuple[str, int]]:
    parts, level, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            level += 1
        elif ch == ")":
            level -= 1
        elif ch == "," and level == 0:
            parts.append((text[start:i], start))
            start = i + 1
    parts.append((text[start:], start))
    return parts


def parse_field(text: str, d: int) -> PerturbationField:
    if not isinstance(text, str) or not text.strip():
        raise SymbolSyntaxError("empty field", 0)
    parts = _split_top_level(text)
    if len(parts) != d:
        raise SymbolError(f"field needs {d} comma-separated components, got {len(parts)}")
    comps = []
    for part, offset in parts:
        try:
            comps.append(parse_expr(part, d))
        except SymbolSyntaxError as exc:
            raise SymbolSyntaxError(str(exc).rsplit(" (at", 1)[0], exc.position + offset) from None
    return PerturbationField(d, tuple(comps))


def perturb(s: Symbol, F: PerturbationField, delta: float | str) -> Symbol:
    """Symbol with every ``x_j`` replaced by ``x_j + F_j(delta * x)``.

    ``delta`` may be a number or a parameter name to be bound later.
    """
    if F.dim != s.dim:
        raise SymbolError(f"dimension mismatch: symbol {s.dim}, field {F.dim}")
    scale = Param(delta) if isinstance(delta, str) else Const(float(delta))
    xs = [Var("x", j + 1) for j in range(s.dim)]
    scaled = {v: Mul(scale, v) for v in xs}
    shifted = {v: Add(v, substitute(F.components[j], scaled)) for j, v in enumerate(xs)}
    return Symbol(s.dim, substitute(s.expr, shifted), s.params)


# ---------------------------------------------------------------------------
# Fourier decomposition in xi


@dataclass(frozen=True)
class Coefficient:
    """c_k(x) = re(x) + i im(x)."""

    re: Expr
    im: Expr

    def __call__(self, x, params=None):
        return eval_expr(self.re, x, None, params) + 1j * eval_expr(self.im, x, None, params)


def _expand(e: Expr, dim: int):
    """List of (xi-free coefficient, trig or None) whose sum is ``e``."""
    if not has_xi(e):
        return [(e, None)]
    if isinstance(e, (Cos, Sin)):
        return [(None, (type(e), split_trig_argument(e.arg, dim)))]
    if isinstance(e, Neg):
        return [(Neg(c) if c is not None else Const(-1.0), t) for c, t in _expand(e.arg, dim)]
    if isinstance(e, Add):
        return _expand(e.left, dim) + _expand(e.right, dim)
    if isinstance(e, Mul):
        out = []
        for (ca, ta), (cb, tb) in itertools.product(_expand(e.left, dim), _expand(e.right, dim)):
            if ta is not None and tb is not None:
                raise StructureError("product of two xi-dependent factors")
            if ca is None:
                coef = cb
            elif cb is None:
                coef = ca
            else:
                coef = Mul(ca, cb)
            out.append((coef, ta if ta is not None else tb))
        return out
    raise StructureError(f"xi outside a trig argument in {to_text(e)!r}")


def _scaled(coef: Expr | None, factor: float, trig: Expr | None) -> Expr:
    parts = [p for p in (coef, trig) if p is not None]
    out: Expr = Const(factor)
    for p in parts:
        out = p if (isinstance(out, Const) and out.value == 1.0) else Mul(out, p)
    return out


def _sum(terms: list[Expr]) -> Expr:
    if not terms:
        return Const(0.0)
    out = terms[0]
    for t in terms[1:]:
        out = Add(out, t)
    return out


def xi_decompose(s: Symbol) -> dict[tuple[int, ...], Coefficient]:
    """Coefficients c_k(x) with a(x, xi) = sum_k c_k(x) exp(i k.xi)."""
    zero = (0,) * s.dim
    acc: dict[tuple[int, ...], tuple[list, list]] = {}

    def add(k, re, im):
        slot = acc.setdefault(k, ([], []))
        if re is not None:
            slot[0].append(re)
        if im is not None:
            slot[1].append(im)

    for coef, trig in _expand(s.expr, s.dim):
        if trig is None:
            add(zero, coef, None)
            continue
        kind, targ = trig
        k, g = targ.hop, targ.shift
        if k == zero:
            add(zero, _scaled(coef, 1.0, kind(g)), None)
            continue
        minus = tuple(-c for c in k)
        cg, sg = Cos(g), Sin(g)
        if kind is Cos:
            # cos(k.xi + g) = (e^{ig} e^{ik.xi} + e^{-ig} e^{-ik.xi}) / 2
            add(k, _scaled(coef, 0.5, cg), _scaled(coef, 0.5, sg))
            add(minus, _scaled(coef, 0.5, cg), _scaled(coef, -0.5, sg))
        else:
            # sin(k.xi + g) = (e^{ig} e^{ik.xi} - e^{-ig} e^{-ik.xi}) / 2i
            add(k, _scaled(coef, 0.5, sg), _scaled(coef, -0.5, cg))
            add(minus, _scaled(coef, 0.5, sg), _scaled(coef, 0.5, cg))
    return {k: Coefficient(_sum(re), _sum(im)) for k, (re, im) in sorted(acc.items())}


def reconstruct(coeffs: Mapping[tuple[int, ...], Coefficient], x, xi, params=None):
    """sum_k Re(c_k(x) e^{i k.xi}), the inverse of :func:`xi_decompose`."""
    total = 0.0
    for k, c in coeffs.items():
        phase = sum(kj * xi[j] for j, kj in enumerate(k))
        total = total + np.real(c(x, params) * np.exp(1j * phase))
    return total


# ---------------------------------------------------------------------------
# Derivative probe

_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


@dataclass(frozen=True)
class ProbeGrid:
    """Uniform grid, ``n`` points per coordinate on ``[lo, hi]``, over all 2d variables."""

    lo: float = -10.0
    hi: float = 10.0
    n: int = 41


def boundedness_probe(
    e: Expr,
    order: Sequence[int],
    grid: ProbeGrid | tuple = ProbeGrid(),
    dim: int = 1,
    params: Mapping[str, float] | None = None,
) -> float:
    """Max over ``grid`` of the central finite-difference derivative ``|D^order e|``.

    ``order`` lists derivative orders for (x1..xd, xi1..xid); shorter
    sequences are zero-padded.
    """
    if not isinstance(grid, ProbeGrid):
        grid = ProbeGrid(*grid)
    order = list(order) + [0] * (2 * dim - len(order))
    if len(order) != 2 * dim or any(o < 0 for o in order):
        raise SymbolError(f"bad derivative order {order}")
    total = sum(order)
    if total > 4:
        raise SymbolError("total derivative order must be <= 4")
    axis = np.linspace(grid.lo, grid.hi, grid.n)
    mesh = np.meshgrid(*([axis] * (2 * dim)), indexing="ij")
    h = np.finfo(float).eps ** (1.0 / (total + 2)) if total else 0.0
    acc = np.zeros_like(mesh[0])
    # stencil weights sum to zero, so differencing against the center value
    # changes nothing analytically and makes constants vanish exactly
    center = np.broadcast_to(eval_expr(e, mesh[:dim], mesh[dim:], params), acc.shape) if total else 0.0
    stencils = [_STENCILS[o].items() for o in order]
    for combo in itertools.product(*stencils):
        weight = 1.0
        coords = []
        for (shift, w), m in zip(combo, mesh):
            weight *= w
            coords.append(m + shift * h)
        value = eval_expr(e, coords[:dim], coords[dim:], params)
        acc = acc + weight * (np.broadcast_to(value, acc.shape) - center)
    if total:
        acc = acc / h**total
    return float(np.max(np.abs(acc)))

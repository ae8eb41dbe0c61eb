"""Expression DAGs over x1..xd: parsing, printing and evaluation.

Grammar (whitespace insensitive)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' int)*
    int    := ['-'|'+'] digits | '(' ['-'|'+'] digits ')'
    atom   := number | 'x' digits | name '(' expr (',' expr)* ')' | '(' expr ')'

``a - b`` parses to ``Add(a, Neg(b))`` and ``a / b`` to ``Mul(a, Recip(b))``.
The only nonsmooth nodes are :class:`Abs`, :class:`Max` and :class:`Min`.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .polytope import DimensionMismatch

__all__ = [
    "Expr", "Const", "Var", "Add", "Mul", "Neg", "Recip", "Pow", "Exp", "Log",
    "Sin", "Cos", "Abs", "Max", "Min",
    "ParseError", "EvalDomainError",
    "parse", "evaluate", "to_string", "walk", "max_var_index", "is_piecewise_linear",
]


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvalDomainError(ArithmeticError):
    """Raised when a primitive is evaluated outside its domain."""

    def __init__(self, message: str, node: "Expr"):
        super().__init__(f"{message} in {to_string(node)}")
        self.node = node


# Nodes compare and hash by identity so shared subgraphs memoise correctly.

@dataclass(frozen=True, eq=False)
class Expr:
    @property
    def children(self) -> tuple["Expr", ...]:
        return ()

    def __add__(self, other):
        return Add(self, _lift(other))

    def __radd__(self, other):
        return Add(_lift(other), self)

    def __sub__(self, other):
        return Add(self, Neg(_lift(other)))

    def __rsub__(self, other):
        return Add(_lift(other), Neg(self))

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __rmul__(self, other):
        return Mul(_lift(other), self)

    def __truediv__(self, other):
        return Mul(self, Recip(_lift(other)))

    def __rtruediv__(self, other):
        return Mul(_lift(other), Recip(self))

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k):
        return Pow(self, k)

    def __str__(self) -> str:
        return to_string(self)


def _lift(value) -> Expr:
    return value if isinstance(value, Expr) else Const(float(value))


@dataclass(frozen=True, eq=False)
class Const(Expr):
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("constants must be finite")


@dataclass(frozen=True, eq=False)
class Var(Expr):
    index: int  # 1-based

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("variable indices start at 1")


@dataclass(frozen=True, eq=False)
class _Binary(Expr):
    left: Expr
    right: Expr

    @property
    def children(self):
        return (self.left, self.right)


class Add(_Binary):
    pass


class Mul(_Binary):
    pass


@dataclass(frozen=True, eq=False)
class _Unary(Expr):
    arg: Expr

    @property
    def children(self):
        return (self.arg,)


class Neg(_Unary):
    pass


class Recip(_Unary):
    pass


class Exp(_Unary):
    pass


class Log(_Unary):
    pass


class Sin(_Unary):
    pass


class Cos(_Unary):
    pass


class Abs(_Unary):
    pass


@dataclass(frozen=True, eq=False)
class Pow(Expr):
    arg: Expr
    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k == 0:
            raise ValueError("powers must be nonzero integers")

    @property
    def children(self):
        return (self.arg,)


@dataclass(frozen=True, eq=False)
class _NAry(Expr):
    args: tuple[Expr, ...]

    def __post_init__(self):
        if len(self.args) < 2:
            raise ValueError(f"{type(self).__name__} needs at least two arguments")
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def children(self):
        return self.args


class Max(_NAry):
    pass


class Min(_NAry):
    pass


# ---------------------------------------------------------------- traversal

def walk(e: Expr) -> Iterator[Expr]:
    """Yield every distinct node once, children before parents."""
    seen: set[int] = set()
    order: list[Expr] = []
    stack: list[tuple[Expr, bool]] = [(e, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for ch in reversed(node.children):
            if id(ch) not in seen:
                stack.append((ch, False))
    return iter(order)


def max_var_index(e: Expr) -> int:
    return max((n.index for n in walk(e) if isinstance(n, Var)), default=0)


def is_piecewise_linear(e: Expr) -> bool:
    """True if ``e`` is built from affine pieces with max/min/abs only.

    Products are allowed when one factor is constant.
    """
    const: dict[int, bool] = {}
    for n in walk(e):
        if isinstance(n, Const):
            const[id(n)] = True
        elif isinstance(n, (Exp, Log, Sin, Cos, Recip, Pow)):
            if not const[id(n.arg)] and not (isinstance(n, Pow) and n.k == 1):
                return False
            const[id(n)] = const[id(n.arg)]
        elif isinstance(n, Mul):
            if not (const[id(n.left)] or const[id(n.right)]):
                return False
            const[id(n)] = const[id(n.left)] and const[id(n.right)]
        else:
            const[id(n)] = all(const[id(c)] for c in n.children) if n.children else False
    return True


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>x\d+)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*/^(),]))"
)

_UNARY_FUNCS: dict[str, Callable[[Expr], Expr]] = {
    "exp": Exp, "log": Log, "sin": Sin, "cos": Cos, "abs": Abs,
}
_NARY_FUNCS = {"max": Max, "min": Min}


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}", self._byte(pos))
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), self._byte(m.start(kind))))
            pos = m.end()
        self.end = self._byte(len(text))
        self.i = 0

    def _byte(self, char_index: int) -> int:
        return len(self.text[:char_index].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def offset(self) -> int:
        tok = self.peek()
        return tok[2] if tok else self.end

    def take(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.end)
        self.i += 1
        return tok

    def accept(self, op: str) -> bool:
        tok = self.peek()
        if tok is not None and tok[0] == "op" and tok[1] == op:
            self.i += 1
            return True
        return False

    def expect(self, op: str) -> None:
        if not self.accept(op):
            tok = self.peek()
            found = "end of input" if tok is None else repr(tok[1])
            raise ParseError(f"expected {op!r}, found {found}", self.offset())

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek() is not None:
            raise ParseError(f"unexpected token {self.peek()[1]!r}", self.offset())
        return e

    def expr(self) -> Expr:
        e = self.term()
        while True:
            if self.accept("+"):
                e = Add(e, self.term())
            elif self.accept("-"):
                e = Add(e, Neg(self.term()))
            else:
                return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            if self.accept("*"):
                e = Mul(e, self.unary())
            elif self.accept("/"):
                e = Mul(e, Recip(self.unary()))
            else:
                return e

    def unary(self) -> Expr:
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        e = self.atom()
        while self.accept("^"):
            at = self.offset()
            k = self.integer()
            if k == 0:
                raise ParseError("zero power", at)
            e = Pow(e, k)
        return e

    def integer(self) -> int:
        paren = self.accept("(")
        sign = -1 if self.accept("-") else 1
        if sign == 1:
            self.accept("+")
        at = self.offset()
        kind, text, _ = self.take()
        if kind != "num" or not text.isdigit():
            raise ParseError("exponent must be an integer literal", at)
        if paren:
            self.expect(")")
        return sign * int(text)

    def atom(self) -> Expr:
        at = self.offset()
        kind, text, _ = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "var":
            idx = int(text[1:])
            if idx < 1 or idx > self.dim:
                raise ParseError(f"variable {text} outside x1..x{self.dim}", at)
            return Var(idx)
        if kind == "name":
            name = text.lower()
            if name not in _UNARY_FUNCS and name not in _NARY_FUNCS:
                raise ParseError(f"unknown function {text!r}", at)
            self.expect("(")
            args = [self.expr()]
            while self.accept(","):
                args.append(self.expr())
            self.expect(")")
            if name in _UNARY_FUNCS:
                if len(args) != 1:
                    raise ParseError(f"{name} takes one argument", at)
                return _UNARY_FUNCS[name](args[0])
            if len(args) < 2:
                raise ParseError(f"{name} needs at least two arguments", at)
            return _NARY_FUNCS[name](tuple(args))
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected token {text!r}", at)


def parse(text: str, dim: int) -> Expr:
    """Parse ``text`` into an expression over ``x1..x<dim>``."""
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    return _Parser(text, dim).parse()


# ---------------------------------------------------------------- printing

def to_string(e: Expr) -> str:
    """Fully parenthesised text that :func:`parse` maps back to an equal DAG."""
    memo: dict[int, str] = {}
    for n in walk(e):
        memo[id(n)] = _format(n, [memo[id(c)] for c in n.children])
    return memo[id(e)]


def _format(n: Expr, ch: Sequence[str]) -> str:
    if isinstance(n, Const):
        s = repr(float(n.value))
        return f"({s})" if n.value < 0 else s
    if isinstance(n, Var):
        return f"x{n.index}"
    if isinstance(n, Add):
        return f"({ch[0]} + {ch[1]})"
    if isinstance(n, Mul):
        return f"({ch[0]} * {ch[1]})"
    if isinstance(n, Neg):
        return f"(-{ch[0]})"
    if isinstance(n, Recip):
        return f"(1 / {ch[0]})"
    if isinstance(n, Pow):
        return f"({ch[0]} ^ ({n.k}))"
    if isinstance(n, (Max, Min)):
        return f"{type(n).__name__.lower()}({', '.join(ch)})"
    return f"{type(n).__name__.lower()}({ch[0]})"


# ---------------------------------------------------------------- evaluation

def _apply(n: Expr, vals: Sequence[float], x: np.ndarray) -> float:
    if isinstance(n, Const):
        return float(n.value)
    if isinstance(n, Var):
        return float(x[n.index - 1])
    if isinstance(n, Add):
        return vals[0] + vals[1]
    if isinstance(n, Mul):
        return vals[0] * vals[1]
    if isinstance(n, Neg):
        return -vals[0]
    if isinstance(n, Recip):
        if vals[0] == 0.0:
            raise EvalDomainError("reciprocal of zero", n)
        return 1.0 / vals[0]
    if isinstance(n, Pow):
        if n.k < 0 and vals[0] == 0.0:
            raise EvalDomainError("negative power of zero", n)
        return vals[0] ** n.k
    if isinstance(n, Exp):
        try:
            return math.exp(vals[0])
        except OverflowError:
            raise EvalDomainError("exp overflow", n) from None
    if isinstance(n, Log):
        if vals[0] <= 0.0:
            raise EvalDomainError("log of non-positive value", n)
        return math.log(vals[0])
    if isinstance(n, Sin):
        return math.sin(vals[0])
    if isinstance(n, Cos):
        return math.cos(vals[0])
    if isinstance(n, Abs):
        return abs(vals[0])
    if isinstance(n, Max):
        return max(vals)
    if isinstance(n, Min):
        return min(vals)
    raise TypeError(f"unknown node {type(n).__name__}")


def evaluate_all(e: Expr, x) -> dict[int, float]:
    """Values of every node at ``x``, keyed by node identity."""
    x = np.asarray(x, dtype=float).reshape(-1)
    need = max_var_index(e)
    if x.shape[0] < need:
        raise DimensionMismatch(f"point has {x.shape[0]} coordinates, expression uses x{need}")
    vals: dict[int, float] = {}
    for n in walk(e):
        v = _apply(n, [vals[id(c)] for c in n.children], x)
        if not math.isfinite(v):
            raise EvalDomainError("non-finite value", n)
        vals[id(n)] = v
    return vals


def evaluate(e: Expr, x) -> float:
    """Value of ``e`` at the point ``x``."""
    return evaluate_all(e, x)[id(e)]

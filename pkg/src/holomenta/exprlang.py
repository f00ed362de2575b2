"""Scalar expression language used by system definition files.

Grammar (EBNF)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" unary ] ;
    atom    = number | name | func "(" expr ")" | "(" expr ")" ;
    func    = "sin" | "cos" | "tan" | "sqrt" | "exp" | "log" | "abs" ;
    number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
            | "." digits [ exponent ] ;
    name    = letter { letter | digit | "_" } ;

``^`` binds tighter than unary minus (``-x^2`` is ``-(x^2)``) and is
right-associative; the other binary operators are left-associative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np

FUNCTIONS = ("sin", "cos", "tan", "sqrt", "exp", "log", "abs")
BINARY_OPS = ("+", "-", "*", "/", "^")

_EPS = np.finfo(float).eps


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownFunctionError(ParseError):
    pass


class EvaluationError(ArithmeticError):
    pass


class UnboundVariableError(EvaluationError, KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else "unbound variable"


class DomainError(EvaluationError, ValueError):
    pass


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be nonempty")


@dataclass(frozen=True)
class Neg:
    child: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"

    def __post_init__(self):
        if self.fn not in FUNCTIONS:
            raise ValueError(f"unknown function {self.fn!r}")


Node = Union[Const, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class Expression:
    root: Node
    source: str = ""

    def __str__(self) -> str:
        return serialize(self)

    def variables(self) -> frozenset[str]:
        return _variables(self.root)


# -- tokenizer ---------------------------------------------------------------


def _tokenize(source: str) -> list[tuple[str, object, int]]:
    tokens = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
        elif c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    while k < n and source[k].isdigit():
                        k += 1
                    j = k
            tokens.append(("num", float(source[i:j]), i))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(("name", source[i:j], i))
            i = j
        elif c in "+-*/^()":
            tokens.append((c, c, i))
            i += 1
        else:
            raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, found {_describe(tok)}", tok[2])
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected {_describe(tok)}", tok[2])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, value, offset = self.peek()
        if kind == "num":
            self.advance()
            return Const(value)
        if kind == "name":
            self.advance()
            if self.peek()[0] == "(":
                if value not in FUNCTIONS:
                    raise UnknownFunctionError(f"unknown function {value!r}", offset)
                self.advance()
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in FUNCTIONS:
                raise ParseError(f"function {value!r} requires an argument", offset)
            return Var(value)
        if kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(f"unexpected {_describe(self.peek())}", offset)


def _describe(tok) -> str:
    if tok[0] == "end":
        return "end of input"
    return repr(str(tok[1]) if tok[0] != "num" else tok[1])


def parse(source: str) -> Expression:
    if not source or not source.strip():
        raise ParseError("empty expression", 0)
    return Expression(_Parser(source).parse(), source)


# -- serialization -----------------------------------------------------------


def serialize(e: Expression | Node) -> str:
    node = e.root if isinstance(e, Expression) else e
    return _ser(node)


def _ser(node: Node) -> str:
    if isinstance(node, Const):
        if node.value < 0 or math.copysign(1.0, node.value) < 0:
            return f"(-{_ser(Const(-node.value))})"
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_ser(node.child)})"
    if isinstance(node, BinOp):
        return f"({_ser(node.left)} {node.op} {_ser(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({_ser(node.arg)})"
    raise TypeError(node)


def _variables(node: Node) -> frozenset[str]:
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, Const):
        return frozenset()
    if isinstance(node, Neg):
        return _variables(node.child)
    if isinstance(node, BinOp):
        return _variables(node.left) | _variables(node.right)
    return _variables(node.arg)


def substitute(e: Expression, values: Mapping[str, float]) -> Expression:
    """Replace the named variables by constants."""

    def walk(node: Node) -> Node:
        if isinstance(node, Var):
            return Const(float(values[node.name])) if node.name in values else node
        if isinstance(node, Neg):
            return Neg(walk(node.child))
        if isinstance(node, BinOp):
            return BinOp(node.op, walk(node.left), walk(node.right))
        if isinstance(node, Call):
            return Call(node.fn, walk(node.arg))
        return node

    return Expression(walk(e.root), e.source)


# -- evaluation --------------------------------------------------------------


def _checked(x: float, what: str) -> float:
    if not math.isfinite(x):
        raise DomainError(f"{what} produced a non-finite value")
    return x


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise DomainError("division by zero")
    return _checked(a / b, "division")


def _pow(a: float, b: float) -> float:
    if a < 0.0 and not float(b).is_integer():
        raise DomainError(f"negative base {a!r} with non-integer exponent {b!r}")
    if a == 0.0 and b < 0.0:
        raise DomainError("zero raised to a negative power")
    try:
        return _checked(math.pow(a, b), "power")
    except OverflowError:
        raise DomainError("power overflow") from None


def _sqrt(x: float) -> float:
    if x < 0.0:
        raise DomainError(f"sqrt of negative value {x!r}")
    return math.sqrt(x)


def _log(x: float) -> float:
    if x <= 0.0:
        raise DomainError(f"log of non-positive value {x!r}")
    return math.log(x)


def _exp(x: float) -> float:
    try:
        return _checked(math.exp(x), "exp")
    except OverflowError:
        raise DomainError("exp overflow") from None


def _tan(x: float) -> float:
    return _checked(math.tan(x), "tan")


def _sin(x: float) -> float:
    return math.sin(x)


def _cos(x: float) -> float:
    return math.cos(x)


_IMPL: dict[str, Callable[[float], float]] = {
    "sin": _sin,
    "cos": _cos,
    "tan": _tan,
    "sqrt": _sqrt,
    "exp": _exp,
    "log": _log,
    "abs": abs,
}


def evaluate(e: Expression | Node, bindings: Mapping[str, float]) -> float:
    node = e.root if isinstance(e, Expression) else e
    return float(_eval(node, bindings))


def _eval(node: Node, b: Mapping[str, float]) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return float(b[node.name])
        except KeyError:
            raise UnboundVariableError(f"unbound variable {node.name!r}") from None
    if isinstance(node, Neg):
        return -_eval(node.child, b)
    if isinstance(node, BinOp):
        x = _eval(node.left, b)
        y = _eval(node.right, b)
        if node.op == "+":
            return _checked(x + y, "addition")
        if node.op == "-":
            return _checked(x - y, "subtraction")
        if node.op == "*":
            return _checked(x * y, "multiplication")
        if node.op == "/":
            return _div(x, y)
        return _pow(x, y)
    return _IMPL[node.fn](_eval(node.arg, b))


def compile_vector(exprs: Sequence[Expression], names: Sequence[str]) -> Callable[[Sequence[float]], np.ndarray]:
    """Compile expressions into one fast function of the positional values for `names`.

    Results are bitwise identical to :func:`evaluate`.
    """
    index = {name: i for i, name in enumerate(names)}
    parts = [_code(e.root, index) for e in exprs]
    src = f"lambda x: _array([{', '.join(parts)}], dtype=float)"
    env = {f"_{k}": v for k, v in _IMPL.items()}
    env.update(_add=_add, _sub=_sub, _mul=_mul, _div=_div, _pow=_pow, _array=np.array)
    return eval(src, env)  # noqa: S307 - source is generated from a parsed AST


def _add(a, b):
    return _checked(a + b, "addition")


def _sub(a, b):
    return _checked(a - b, "subtraction")


def _mul(a, b):
    return _checked(a * b, "multiplication")


def _code(node: Node, index: Mapping[str, int]) -> str:
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        if node.name not in index:
            raise UnboundVariableError(f"unbound variable {node.name!r}")
        return f"float(x[{index[node.name]}])"
    if isinstance(node, Neg):
        return f"(-{_code(node.child, index)})"
    if isinstance(node, BinOp):
        fn = {"+": "_add", "-": "_sub", "*": "_mul", "/": "_div", "^": "_pow"}[node.op]
        return f"{fn}({_code(node.left, index)}, {_code(node.right, index)})"
    return f"_{node.fn}({_code(node.arg, index)})"


# -- differentiation ---------------------------------------------------------


def gradient(e: Expression, bindings: Mapping[str, float], names: Sequence[str]) -> np.ndarray:
    """Central-difference gradient with respect to `names`.

    Falls back to one Richardson step when the h and h/2 stencils disagree by
    more than 1e-5 relative.
    """
    base = dict(bindings)
    out = np.zeros(len(names))
    for i, name in enumerate(names):
        x = float(base[name]) if name in base else evaluate(Var(name), base)
        h = _EPS ** (1.0 / 3.0) * (1.0 + abs(x))
        d1 = _central(e, base, name, x, h)
        d2 = _central(e, base, name, x, h / 2)
        scale = max(abs(d1), abs(d2))
        if scale > 0 and abs(d1 - d2) > 1e-5 * scale:
            out[i] = (4.0 * d2 - d1) / 3.0
        else:
            out[i] = d1
    return out


def _central(e, base, name, x, h):
    xp, xm = x + h, x - h
    fp = evaluate(e, {**base, name: xp})
    fm = evaluate(e, {**base, name: xm})
    return (fp - fm) / (xp - xm)

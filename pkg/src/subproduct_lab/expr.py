"""Operator expressions: parsing, printing and evaluation.

Grammar (whitespace is ignored)::

    expr    := term (("+" | "-") term)*
    term    := postfix ("*" postfix)*
    postfix := primary "~"*
    primary := "S" INT "[" vector "]" | ("Q" | "R" | "Rp") INT | "I"
             | scalar | "(" expr ")"
    vector  := vterm ("+" vterm)*
    vterm   := [scalar "*"] LABEL
    scalar  := "(" REAL ("+" | "-") REAL "i" ")" | REAL

``~`` is the adjoint.  A label inside ``S<n>[...]`` names a basis vector
of X(n) (``e1``, ``e1e2``, ``f12``); for single-vertex systems a word that
is not a basis label stands for the projection of that word onto X(n).
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import linalg


class ExprError(ValueError):
    def __init__(self, message, column):
        super().__init__(f"column {column}: {message}")
        self.column = column
        self.message = message


@dataclass(frozen=True)
class Gen:
    n: int
    terms: tuple  # of (complex coefficient, label)


@dataclass(frozen=True)
class Adj:
    arg: object


@dataclass(frozen=True)
class Proj:
    kind: str  # "Q", "R" or "Rp"
    n: int


@dataclass(frozen=True)
class Ident:
    pass


@dataclass(frozen=True)
class Scalar:
    value: complex


@dataclass(frozen=True)
class Add:
    left: object
    right: object


@dataclass(frozen=True)
class Sub:
    left: object
    right: object


@dataclass(frozen=True)
class Mul:
    left: object
    right: object


# -- printing -----------------------------------------------------------------


def format_scalar(z):
    z = complex(z)
    im = z.imag
    sign = "-" if math.copysign(1.0, im) < 0 else "+"
    return f"({z.real!r}{sign}{abs(im)!r}i)"


def to_text(node):
    if isinstance(node, Gen):
        parts = []
        for c, lab in node.terms:
            parts.append(lab if c == 1 else f"{format_scalar(c)}*{lab}")
        return f"S{node.n}[{'+'.join(parts)}]"
    if isinstance(node, Proj):
        return f"{node.kind}{node.n}"
    if isinstance(node, Ident):
        return "I"
    if isinstance(node, Scalar):
        return format_scalar(node.value)
    if isinstance(node, Adj):
        inner = to_text(node.arg)
        if isinstance(node.arg, (Add, Sub, Mul)):
            inner = f"({inner})"
        return inner + "~"
    if isinstance(node, Mul):
        left = to_text(node.left)
        right = to_text(node.right)
        if isinstance(node.left, (Add, Sub)):
            left = f"({left})"
        if isinstance(node.right, (Add, Sub, Mul)):
            right = f"({right})"
        return f"{left} * {right}"
    if isinstance(node, (Add, Sub)):
        right = to_text(node.right)
        if isinstance(node.right, (Add, Sub)):
            right = f"({right})"
        op = "+" if isinstance(node, Add) else "-"
        return f"{to_text(node.left)} {op} {right}"
    raise TypeError(f"not an expression node: {node!r}")


# -- parsing ------------------------------------------------------------------

_REAL = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX = re.compile(rf"\(\s*({_REAL})\s*([+-])\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*i\s*\)")
_UREAL = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_INT = re.compile(r"\d+")
_LABEL = re.compile(r"[A-Za-z][A-Za-z0-9]*")


class _Parser:
    def __init__(self, text, system=None):
        self.text = text
        self.pos = 0
        self.system = system

    def error(self, message, pos=None):
        raise ExprError(message, (self.pos if pos is None else pos) + 1)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            found = self.peek() or "end of input"
            self.error(f"expected {ch!r}, found {found!r}")
        self.pos += 1

    def parse(self):
        node = self.expr()
        if self.peek():
            if self.peek() == ")":
                self.error("unbalanced parenthesis")
            self.error(f"unexpected {self.peek()!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            right = self.term()
            node = Add(node, right) if op == "+" else Sub(node, right)
        return node

    def term(self):
        node = self.postfix()
        while self.peek() == "*":
            self.pos += 1
            node = Mul(node, self.postfix())
        return node

    def postfix(self):
        if self.peek() == "~":
            self.error("adjoint of nothing")
        node = self.primary()
        while self.peek() == "~":
            self.pos += 1
            node = Adj(node)
        return node

    def scalar(self):
        self.skip()
        m = _COMPLEX.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            im = float(m.group(3))
            return complex(float(m.group(1)), -im if m.group(2) == "-" else im)
        m = _UREAL.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return complex(float(m.group(0)))
        return None

    def level(self):
        m = _INT.match(self.text, self.pos)
        if not m:
            self.error("expected a level number")
        self.pos = m.end()
        n = int(m.group(0))
        if self.system is not None and n > self.system.N:
            self.error(f"level {n} exceeds the truncation level N = {self.system.N}", m.start())
        return n

    def primary(self):
        ch = self.peek()
        start = self.pos
        if ch == "":
            self.error("unexpected end of input")
        if ch == "(":
            z = self.scalar()
            if z is not None:
                return Scalar(z)
            self.pos += 1
            node = self.expr()
            if self.peek() != ")":
                self.error("unbalanced parenthesis: expected ')'")
            self.pos += 1
            return node
        if ch.isdigit() or ch == ".":
            return Scalar(self.scalar())
        if self.text.startswith("Rp", self.pos):
            self.pos += 2
            return Proj("Rp", self.level())
        if ch in "QR":
            self.pos += 1
            return Proj(ch, self.level())
        if ch == "I":
            self.pos += 1
            return Ident()
        if ch == "S":
            self.pos += 1
            n = self.level()
            self.expect("[")
            terms = [self.vterm(n)]
            while self.peek() == "+":
                self.pos += 1
                terms.append(self.vterm(n))
            self.expect("]")
            return Gen(n, tuple(terms))
        if ch in ")":
            self.error("unbalanced parenthesis")
        self.error(f"unexpected {ch!r}", start)

    def vterm(self, n):
        self.skip()
        coef = 1 + 0j
        z = self.scalar()
        if z is not None:
            if self.peek() != "*":
                self.error("expected '*' between coefficient and label")
            self.pos += 1
            coef = z
        self.skip()
        m = _LABEL.match(self.text, self.pos)
        if not m:
            self.error("expected a fiber label")
        label = m.group(0)
        if self.system is not None:
            try:
                fiber_vector(self.system, n, label)
            except KeyError:
                self.error(f"unknown fiber label {label!r} at level {n}", m.start())
        self.pos = m.end()
        return (coef, label)


def parse_expr(text, system=None):
    """Parse ``text``; with a system, labels and levels are checked against it."""
    return _Parser(text, system).parse()


# -- semantics ----------------------------------------------------------------


def fiber_vector(system, n, label):
    """Coordinates in X(n) of a label (basis label, or projected word when q = 1)."""
    fib = system.fibers[n]
    if label in fib.labels:
        return system.fiber_basis_vector(n, fib.labels.index(label))
    if system.q == 1 and n >= 1:
        letters = re.findall(r"[A-Za-z]+\d+", label)
        if "".join(letters) == label and len(letters) == n:
            try:
                v = system.word_vector(tuple(letters))
            except KeyError:
                raise KeyError(label) from None
            return system.fiber_vector_from_paths(n, v)
    raise KeyError(label)


def gen_vector(system, node):
    v = np.zeros(system.fiber_dims[node.n], dtype=complex)
    for c, lab in node.terms:
        v = v + c * fiber_vector(system, node.n, lab)
    return v


def degrees(node):
    """Set of gauge degrees that the expression can carry."""
    if isinstance(node, Gen):
        return {node.n}
    if isinstance(node, (Proj, Ident, Scalar)):
        return {0}
    if isinstance(node, Adj):
        return {-k for k in degrees(node.arg)}
    if isinstance(node, Mul):
        return {a + b for a in degrees(node.left) for b in degrees(node.right)}
    return degrees(node.left) | degrees(node.right)


def is_monomial(node):
    if isinstance(node, (Gen, Proj, Ident, Scalar)):
        return True
    if isinstance(node, Adj):
        return is_monomial(node.arg)
    if isinstance(node, Mul):
        return is_monomial(node.left) and is_monomial(node.right)
    return False


def evaluate(node, F):
    """FockOperator for the expression on the truncated Fock module F."""
    if isinstance(node, Gen):
        return F.shift(node.n, gen_vector(F.system, node))
    if isinstance(node, Proj):
        return {"Q": F.Q, "R": F.R, "Rp": F.Rp}[node.kind](node.n)
    if isinstance(node, Ident):
        return F.identity()
    if isinstance(node, Scalar):
        return F.identity() * node.value
    if isinstance(node, Adj):
        return evaluate(node.arg, F).adj()
    left, right = evaluate(node.left, F), evaluate(node.right, F)
    if isinstance(node, Add):
        return left + right
    if isinstance(node, Sub):
        return left - right
    if isinstance(node, Mul):
        if isinstance(node.left, Scalar):
            return right * node.left.value
        if isinstance(node.right, Scalar):
            return left * node.right.value
        return left @ right
    raise TypeError(f"not an expression node: {node!r}")


def evaluate_rep(node, rep):
    """Matrix of the expression under a covariant representation.

    Projections use pi(R'_n) = sum over a fiber basis of T_n(x)T_n(x)^*.
    """
    dim = rep.dim
    if isinstance(node, Gen):
        return rep.T(node.n, gen_vector(rep.system, node))
    if isinstance(node, Proj):
        if node.kind == "Rp":
            return rep.tail_projection(node.n)
        if node.kind == "Q":
            return rep.tail_projection(node.n) - rep.tail_projection(node.n + 1)
        return np.eye(dim) - rep.tail_projection(node.n + 1)
    if isinstance(node, Ident):
        return np.eye(dim, dtype=complex)
    if isinstance(node, Scalar):
        return node.value * np.eye(dim, dtype=complex)
    if isinstance(node, Adj):
        return linalg.adjoint(evaluate_rep(node.arg, rep))
    left, right = evaluate_rep(node.left, rep), evaluate_rep(node.right, rep)
    if isinstance(node, Add):
        return left + right
    if isinstance(node, Sub):
        return left - right
    return left @ right


# -- random expressions ---------------------------------------------------------


def random_expr(system, rng, depth=3):
    """Random expression over the system's basis labels (for round-trip tests)."""
    if depth <= 0 or rng.random() < 0.3:
        r = rng.integers(5)
        if r <= 1:
            n = int(rng.integers(1, min(system.N, 3) + 1))
            labels = system.fibers[n].labels
            k = int(rng.integers(1, 3))
            terms = []
            for _ in range(k):
                lab = labels[int(rng.integers(len(labels)))]
                c = 1 + 0j if rng.random() < 0.5 else complex(
                    round(float(rng.normal()), 3), round(float(rng.normal()), 3))
                terms.append((c, lab))
            return Gen(n, tuple(terms))
        if r == 2:
            return Proj(["Q", "R", "Rp"][int(rng.integers(3))], int(rng.integers(0, system.N + 1)))
        if r == 3:
            return Ident()
        return Scalar(complex(float(rng.normal()), float(rng.normal())))
    kind = int(rng.integers(4))
    if kind == 0:
        return Adj(random_expr(system, rng, depth - 1))
    cls = (Add, Sub, Mul)[kind - 1]
    return cls(random_expr(system, rng, depth - 1), random_expr(system, rng, depth - 1))

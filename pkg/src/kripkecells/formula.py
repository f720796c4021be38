"""Formulas of multi-agent epistemic logic.

The core syntax has four constructors: ``Prop``, ``Not``, ``And`` and ``Know``.
Every other connective (disjunction, implication, "everybody knows") is a
function that expands into them.

Formula nodes are interned: building the same tree twice returns the same
object, so ``==`` and ``hash`` are identity-based and still structural.
Evaluation caches elsewhere in the package rely on this.

Concrete text syntax::

    p0 p1 ...        primitive propositions
    !f               negation
    K0 f, K1 f ...   knowledge of agent 0, 1, ...
    E f              everybody knows f
    f & g            conjunction      (left associative)
    f | g            disjunction      (left associative)
    f -> g           implication      (right associative)

Binding strength: ``!``, ``K`` and ``E`` > ``&`` > ``|`` > ``->``.
"""

from __future__ import annotations

import re
import threading
import weakref
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import FormulaError

__all__ = [
    "Workspace",
    "Formula",
    "Prop",
    "Not",
    "And",
    "Know",
    "conj",
    "disj",
    "implies",
    "iff",
    "top",
    "bottom",
    "everybody_knows",
    "e_power",
    "depth",
    "parse",
    "render",
    "subformulas",
    "check_formula",
]


@dataclass(frozen=True)
class Workspace:
    """The fixed proposition set X and agent roster J, both dense from 0."""

    num_props: int
    num_agents: int

    def __post_init__(self):
        if self.num_props < 1 or self.num_agents < 1:
            raise ValueError("a workspace needs at least one proposition and one agent")

    @property
    def agents(self) -> range:
        return range(self.num_agents)


_intern: "weakref.WeakValueDictionary[tuple, Formula]" = weakref.WeakValueDictionary()
_intern_lock = threading.Lock()


def _make(cls, key, **fields):
    obj = _intern.get(key)
    if obj is not None:
        return obj
    with _intern_lock:
        obj = _intern.get(key)
        if obj is None:
            obj = object.__new__(cls)
            for name, value in fields.items():
                object.__setattr__(obj, name, value)
            _intern[key] = obj
    return obj


class Formula:
    """Base class of the four core constructors."""

    __slots__ = ("depth", "max_prop", "max_agent", "__weakref__")

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __delattr__(self, name):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __repr__(self):
        return f"<{type(self).__name__} {render(self)}>"

    def __str__(self):
        return render(self)

    # operator sugar for building formulas in Python code
    def __and__(self, other: Formula) -> Formula:
        return And(self, other)

    def __or__(self, other: Formula) -> Formula:
        return disj([self, other])

    def __invert__(self) -> Formula:
        return Not(self)

    def __rshift__(self, other: Formula) -> Formula:
        return implies(self, other)


class Prop(Formula):
    __slots__ = ("index",)
    __match_args__ = ("index",)

    def __new__(cls, index: int):
        index = int(index)
        if index < 0:
            raise FormulaError(f"negative proposition index {index}")
        return _make(cls, ("p", index), index=index, depth=0, max_prop=index, max_agent=-1)

    def __reduce__(self):
        return (Prop, (self.index,))


class Not(Formula):
    __slots__ = ("sub",)
    __match_args__ = ("sub",)

    def __new__(cls, sub: Formula):
        return _make(cls, ("!", sub), sub=sub, depth=sub.depth,
                     max_prop=sub.max_prop, max_agent=sub.max_agent)

    def __reduce__(self):
        return (Not, (self.sub,))


class And(Formula):
    __slots__ = ("left", "right")
    __match_args__ = ("left", "right")

    def __new__(cls, left: Formula, right: Formula):
        return _make(cls, ("&", left, right), left=left, right=right,
                     depth=max(left.depth, right.depth),
                     max_prop=max(left.max_prop, right.max_prop),
                     max_agent=max(left.max_agent, right.max_agent))

    def __reduce__(self):
        return (And, (self.left, self.right))


class Know(Formula):
    __slots__ = ("agent", "sub")
    __match_args__ = ("agent", "sub")

    def __new__(cls, agent: int, sub: Formula):
        agent = int(agent)
        if agent < 0:
            raise FormulaError(f"negative agent index {agent}")
        return _make(cls, ("K", agent, sub), agent=agent, sub=sub, depth=sub.depth + 1,
                     max_prop=sub.max_prop, max_agent=max(agent, sub.max_agent))

    def __reduce__(self):
        return (Know, (self.agent, self.sub))


# ---------------------------------------------------------------- derived


def _balanced(op, items: Sequence[Formula]) -> Formula:
    if len(items) == 1:
        return items[0]
    mid = len(items) // 2
    return op(_balanced(op, items[:mid]), _balanced(op, items[mid:]))


def conj(fs: Iterable[Formula]) -> Formula:
    """Conjunction of a nonempty collection, as a balanced tree."""
    items = list(fs)
    if not items:
        raise FormulaError("empty conjunction")
    return _balanced(And, items)


def _or2(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def disj(fs: Iterable[Formula]) -> Formula:
    """Disjunction of a nonempty collection, as a balanced tree of ``!(!a & !b)``."""
    items = list(fs)
    if not items:
        raise FormulaError("empty disjunction")
    return _balanced(_or2, items)


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def iff(a: Formula, b: Formula) -> Formula:
    return And(implies(a, b), implies(b, a))


def top() -> Formula:
    """The tautology ``p0 | !p0``."""
    p = Prop(0)
    return _or2(p, Not(p))


def bottom() -> Formula:
    p = Prop(0)
    return And(p, Not(p))


def everybody_knows(f: Formula, num_agents: int) -> Formula:
    """``K0 f & K1 f & ...`` nested to the left."""
    out = Know(0, f)
    for j in range(1, num_agents):
        out = And(out, Know(j, f))
    return out


def e_power(f: Formula, n: int, num_agents: int) -> Formula:
    for _ in range(n):
        f = everybody_knows(f, num_agents)
    return f


def depth(f: Formula) -> int:
    return f.depth


def subformulas(f: Formula) -> Iterator[Formula]:
    """Distinct subformulas, children before parents."""
    seen = set()
    stack = [(f, False)]
    while stack:
        g, expanded = stack.pop()
        if g in seen:
            continue
        if expanded:
            seen.add(g)
            yield g
            continue
        stack.append((g, True))
        match g:
            case Not(sub) | Know(_, sub):
                stack.append((sub, False))
            case And(left, right):
                stack.append((right, False))
                stack.append((left, False))


def check_formula(f: Formula, space: Workspace) -> None:
    """Raise FormulaError if ``f`` uses a proposition or agent outside ``space``."""
    if f.max_prop >= space.num_props:
        raise FormulaError(f"proposition p{f.max_prop} outside workspace of {space.num_props}")
    if f.max_agent >= space.num_agents:
        raise FormulaError(f"agent {f.max_agent} outside workspace of {space.num_agents}")


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(p\d+)|(K\d+)|(E)\b|(->)|([!&|()]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN.match(text, pos)
        if m is None:
            bad = len(text) - len(text[pos:].lstrip())
            raise FormulaError(f"unexpected character {text[bad]!r}", bad)
        start = m.start(m.lastindex)
        if m.group(1):
            tokens.append(("prop", m.group(1), start))
        elif m.group(2):
            tokens.append(("know", m.group(2), start))
        elif m.group(3):
            tokens.append(("E", "E", start))
        else:
            tokens.append((m.group(m.lastindex), m.group(m.lastindex), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, space: Workspace):
        self.tokens = _tokenize(text)
        self.i = 0
        self.space = space

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.implication()
        kind, text, pos = self.peek()
        if kind == ")":
            raise FormulaError("unbalanced ')'", pos)
        if kind != "end":
            raise FormulaError(f"unexpected {text!r}", pos)
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek()[0] == "->":
            self.take()
            return implies(left, self.implication())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.peek()[0] == "|":
            self.take()
            f = _or2(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.unary()
        while self.peek()[0] == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind, text, pos = self.take()
        if kind == "!":
            return Not(self.unary())
        if kind == "know":
            agent = int(text[1:])
            if agent >= self.space.num_agents:
                raise FormulaError(f"unknown agent {text}", pos)
            return Know(agent, self.unary())
        if kind == "E":
            return everybody_knows(self.unary(), self.space.num_agents)
        if kind == "prop":
            index = int(text[1:])
            if index >= self.space.num_props:
                raise FormulaError(f"unknown atom {text}", pos)
            return Prop(index)
        if kind == "(":
            f = self.implication()
            close = self.take()
            if close[0] != ")":
                raise FormulaError("unbalanced '('", pos)
            return f
        if kind == "end":
            raise FormulaError("unexpected end of input", pos)
        raise FormulaError(f"unexpected {text!r}", pos)


def parse(text: str, space: Workspace) -> Formula:
    """Parse ``text`` into a formula over ``space``.

    Raises FormulaError with the character position of the problem.
    """
    return _Parser(text, space).parse()


# ---------------------------------------------------------------- rendering

# binding strength used for parenthesization
_IMPLIES, _OR, _AND, _UNARY = 1, 2, 3, 4


def _e_operand(f: Formula, num_agents: int | None) -> Formula | None:
    """If ``f`` is ``everybody_knows(g, num_agents)`` return ``g``."""
    if num_agents is None or num_agents < 2:
        return None
    knows = []
    node = f
    while isinstance(node, And) and len(knows) < num_agents - 1:
        knows.append(node.right)
        node = node.left
    knows.append(node)
    knows.reverse()
    if len(knows) != num_agents or not isinstance(node, Know):
        return None
    g = node.sub
    for j, k in enumerate(knows):
        if not (isinstance(k, Know) and k.agent == j and k.sub is g):
            return None
    return g


def _render(f: Formula, agents: int | None) -> tuple[str, int]:
    """Return the text of ``f`` and its binding strength."""
    match f:
        case Prop(index):
            return f"p{index}", _UNARY
        case Know(agent, sub):
            return f"K{agent} {_wrap(sub, _UNARY, agents)}", _UNARY
        case Not(And(Not(a), Not(b))):
            # a | b; the left operand may itself be a disjunction
            return f"{_wrap(a, _OR, agents)} | {_wrap(b, _AND, agents)}", _OR
        case Not(And(a, Not(b))):
            return f"{_wrap(a, _OR, agents)} -> {_wrap(b, _IMPLIES, agents)}", _IMPLIES
        case Not(sub):
            return f"!{_wrap(sub, _UNARY, agents)}", _UNARY
        case And(left, right):
            g = _e_operand(f, agents)
            if g is not None:
                return f"E {_wrap(g, _UNARY, agents)}", _UNARY
            return f"{_wrap(left, _AND, agents)} & {_wrap(right, _UNARY, agents)}", _AND
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula, need: int, agents: int | None) -> str:
    text, strength = _render(f, agents)
    return text if strength >= need else f"({text})"


def render(f: Formula, num_agents: int | None = None) -> str:
    """Text form of ``f`` that ``parse`` maps back to the same formula.

    Disjunctions and implications are recovered from their expansions.
    ``E`` is only printed when ``num_agents`` is given, since its expansion
    depends on the roster size.
    """
    return _render(f, num_agents)[0]

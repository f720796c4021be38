"""Atoms of the canonical levels.

A level-0 atom is a valuation of the primitive propositions, stored as a
bitmask.  A level-(i+1) atom is a level-i ``base`` together with one choice
set ``M^j`` of level-i atoms per agent: the atoms agent j still considers
possible.  Atoms are interned, so two atoms are equal exactly when they are
the same object, and a structural ``key`` gives an ordering that does not
depend on creation order.
"""

from __future__ import annotations

import threading
from typing import Iterable

from .errors import ConstructionError

__all__ = ["Atom", "valuation_atom", "make_atom", "sort_atoms", "atom_validity_error", "check_atom"]

_registry: dict = {}
_lock = threading.Lock()


class Atom:
    """One member of a canonical level.  Build with ``valuation_atom`` or ``make_atom``."""

    __slots__ = ("level", "num_props", "val", "base", "choices", "id", "_key")

    def __setattr__(self, name, value):
        raise AttributeError("Atom is immutable")

    @property
    def num_agents(self) -> int | None:
        return None if self.choices is None else len(self.choices)

    @property
    def key(self) -> tuple:
        """Structural sort key; equal keys iff equal atoms."""
        k = self._key
        if k is None:
            if self.level == 0:
                k = (0, self.val)
            else:
                k = (self.level, self.base.key,
                     tuple(tuple(sorted(u.key for u in m)) for m in self.choices))
            object.__setattr__(self, "_key", k)
        return k

    def __lt__(self, other: Atom) -> bool:
        return self.key < other.key

    def __reduce__(self):
        if self.level == 0:
            return (valuation_atom, (self.val, self.num_props))
        return (make_atom, (self.base, self.choices))

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __repr__(self):
        if self.level == 0:
            return f"Atom0({self.val:0{self.num_props}b})"
        sizes = ",".join(str(len(m)) for m in self.choices)
        return f"Atom{self.level}(#{self.id} base=#{self.base.id} |M|=[{sizes}])"


def _intern(key, **fields) -> Atom:
    atom = _registry.get(key)
    if atom is not None:
        return atom
    with _lock:
        atom = _registry.get(key)
        if atom is None:
            atom = object.__new__(Atom)
            for name, value in fields.items():
                object.__setattr__(atom, name, value)
            object.__setattr__(atom, "id", len(_registry))
            object.__setattr__(atom, "_key", None)
            _registry[key] = atom
    return atom


def valuation_atom(val: int, num_props: int) -> Atom:
    """The level-0 atom for valuation bitmask ``val`` (bit k set iff p_k is true)."""
    if not 0 <= val < (1 << num_props):
        raise ValueError(f"valuation {val} out of range for {num_props} propositions")
    return _intern(("v", num_props, val), level=0, num_props=num_props, val=val,
                   base=None, choices=None)


def make_atom(base: Atom, choices: Iterable[Iterable[Atom]]) -> Atom:
    """The atom one level above ``base`` with the given per-agent choice sets.

    No validity check is done here; see ``check_atom``.
    """
    choices = tuple(frozenset(m) for m in choices)
    for m in choices:
        for u in m:
            if u.level != base.level:
                raise ValueError("choice set members must sit at the level of the base")
    return _intern((base, choices), level=base.level + 1, num_props=base.num_props,
                   val=base.val, base=base, choices=choices)


def sort_atoms(atoms: Iterable[Atom]) -> list[Atom]:
    return sorted(atoms, key=lambda a: a.key)


def atom_validity_error(w: Atom) -> str | None:
    """Reason ``w`` is not a member of its canonical level, or None if it is.

    The checks are the extension rules: the base lies in every choice set,
    every choice set lies in one block of the base, and at level two and up
    the choice set meets every lower fiber that the block meets.
    """
    seen = set()
    stack = [w]
    while stack:
        a = stack.pop()
        if a in seen or a.level == 0:
            continue
        seen.add(a)
        base = a.base
        for j, m in enumerate(a.choices):
            if base not in m:
                return f"level-{a.level} atom: base missing from choice set of agent {j}"
            if base.level >= 1:
                if len(base.choices) != len(a.choices):
                    return "agent count changes between levels"
                target = base.choices[j]
                for u in m:
                    if u.choices[j] != target:
                        return (f"level-{a.level} atom: choice set of agent {j} "
                                f"leaves the block of the base")
                if frozenset(u.base for u in m) != target:
                    return (f"level-{a.level} atom: choice set of agent {j} "
                            f"misses a fiber of the block")
            stack.extend(m)
        stack.append(base)
    return None


def check_atom(w: Atom) -> Atom:
    """Return ``w`` or raise ConstructionError naming the violated rule."""
    reason = atom_validity_error(w)
    if reason is not None:
        raise ConstructionError(reason, certificate={"atom": w})
    return w

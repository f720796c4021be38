"""Circular windows of the two-symbol shift space as Kripke structures.

A point is a word y over {a, b} indexed by Z/2nZ, stored as a bitmask with
bit i set when y^i = a.  Agent 0 cannot tell y from sigma(y) (reflection
about 0), agent 1 cannot tell y from tau(y) (reflection about 1/2), and the
optional agent 2 cannot tell y from pi(y) (the symbol at 0 flipped).  The
single proposition p0 holds when y^0 = a.
"""

from __future__ import annotations

from dataclasses import dataclass

from .canonical import caps
from .errors import CapExceeded, PreconditionError
from .kripke import KripkeStructure, refine, theory_level

__all__ = [
    "MAX_HALF_WIDTH",
    "sigma",
    "tau",
    "pi",
    "shift",
    "build_shift_structure",
    "orbits",
    "SeparationProfile",
    "theory_separation_profile",
]

MAX_HALF_WIDTH = 6


def _check(n: int) -> None:
    if n < 1:
        raise PreconditionError("the window needs n >= 1")
    if n > MAX_HALF_WIDTH:
        raise CapExceeded(f"n = {n} gives 2^{2 * n} points, over the cap n <= {MAX_HALF_WIDTH}")


def _permute(y: int, n: int, source) -> int:
    """The word whose symbol at i is the symbol of y at source(i)."""
    size = 2 * n
    out = 0
    for i in range(size):
        if y >> (source(i) % size) & 1:
            out |= 1 << i
    return out


def sigma(y: int, n: int) -> int:
    return _permute(y, n, lambda i: -i)


def tau(y: int, n: int) -> int:
    return _permute(y, n, lambda i: 1 - i)


def pi(y: int, n: int) -> int:
    return y ^ 1


def shift(y: int, n: int) -> int:
    """(T y)^i = y^{i-1}."""
    return _permute(y, n, lambda i: i - 1)


def _pair_partition(n: int, inv) -> tuple[int, ...]:
    return tuple(min(y, inv(y, n)) for y in range(1 << 2 * n))


def build_shift_structure(n: int, include_pi: bool = False) -> KripkeStructure:
    """The window Z/2nZ with agents sigma, tau and optionally pi."""
    _check(n)
    parts = [_pair_partition(n, sigma), _pair_partition(n, tau)]
    if include_pi:
        parts.append(_pair_partition(n, pi))
    return KripkeStructure(1, tuple(y & 1 for y in range(1 << 2 * n)), tuple(parts))


def orbits(n: int, include_pi: bool = False) -> list[frozenset[int]]:
    """Orbits of the group generated by the involutions, by direct closure."""
    _check(n)
    gens = [sigma, tau] + ([pi] if include_pi else [])
    seen: set = set()
    out = []
    for y in range(1 << 2 * n):
        if y in seen:
            continue
        orbit, todo = {y}, [y]
        while todo:
            z = todo.pop()
            for g in gens:
                u = g(z, n)
                if u not in orbit:
                    orbit.add(u)
                    todo.append(u)
        seen |= orbit
        out.append(frozenset(orbit))
    return out


@dataclass(frozen=True)
class SeparationProfile:
    """How far theories tell the points of a structure apart.

    ``fibers[d]`` is the number of distinct depth-d theories.  ``separating_depth``
    is the first depth at which all points differ, or None.  ``stable_index``
    is the index of the last refinement step and ``stable_classes`` its size.
    """

    points: int
    fibers: tuple[int, ...]
    separating_depth: int | None
    stable_index: int
    stable_classes: int
    matches_refinement: bool

    def as_dict(self) -> dict:
        return {
            "points": self.points,
            "fibers": list(self.fibers),
            "separating_depth": self.separating_depth,
            "stable_index": self.stable_index,
            "stable_classes": self.stable_classes,
            "matches_refinement": self.matches_refinement,
        }


def theory_separation_profile(K: KripkeStructure, depth: int) -> SeparationProfile:
    """Fiber counts of the theory map up to ``depth`` plus the refinement fixpoint."""
    if depth > caps().lazy:
        raise CapExceeded(f"depth {depth} exceeds the lazy cap {caps().lazy}")
    fibers = tuple(len(set(theory_level(K, d))) for d in range(depth + 1))
    separating = next((d for d, c in enumerate(fibers) if c == K.num_points), None)
    steps = refine(K)
    stable = len(steps) - 1
    fixpoint = steps[-1]
    theories = theory_level(K, stable)
    same = all((fixpoint[s] == fixpoint[t]) == (theories[s] is theories[t])
               for s in range(K.num_points) for t in range(s + 1, K.num_points))
    return SeparationProfile(K.num_points, fibers, separating, stable, len(set(fixpoint)), same)

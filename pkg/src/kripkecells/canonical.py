"""The canonical finite levels Omega_i and evaluation on them.

An atom of level i+1 is a level-i base plus one choice set per agent.  The
choice set of agent j must contain the base, stay inside the base's j-block,
and (from level 2 up) meet every lower fiber that block meets.  Two atoms of
the same level share a j-block exactly when their j-th choice sets agree; at
level 0 every agent has the single block Omega_0.

``Tower`` packages this rule for a family of levels that starts from an
explicit floor set.  The full canonical model is the tower whose floor is all
of Omega_0.  The restricted levels used for common knowledge are towers
whose floor is the truth set of a formula at its own depth; above the floor
they keep only atoms whose choice sets stay inside the tower.
"""

from __future__ import annotations

import itertools
import os
import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .atoms import Atom, atom_validity_error, make_atom, sort_atoms, valuation_atom
from .errors import CapExceeded, FormulaError, PreconditionError
from .formula import And, Formula, Know, Not, Prop, Workspace, check_formula, conj, disj
from .kripke import KripkeStructure, alpha_mask, is_connected, _members

__all__ = [
    "Caps",
    "caps",
    "set_caps",
    "Tower",
    "full_tower",
    "omega_level",
    "count_omega",
    "extensions",
    "count_extensions",
    "choice_sets",
    "possibility_set",
    "project",
    "characteristic_formula",
    "formula_of_set",
    "omega_structure",
    "alpha_on_level",
    "holds",
    "is_tautology",
    "check_atom",
    "omega_connected",
]


@dataclass(frozen=True)
class Caps:
    """Limits on how far the package will enumerate.

    ``enum`` is the highest level of the full canonical model that may be
    listed atom by atom, ``lazy`` the highest level reachable by per-atom
    operations, and ``budget`` the largest number of atoms any single
    enumeration may produce.
    """

    enum: int = 2
    lazy: int = 6
    budget: int = 250_000


_caps = Caps(
    enum=int(os.environ.get("KRIPKECELLS_ENUM_CAP", 2)),
    lazy=int(os.environ.get("KRIPKECELLS_LAZY_CAP", 6)),
    budget=int(os.environ.get("KRIPKECELLS_BUDGET", 250_000)),
)


def caps() -> Caps:
    return _caps


def set_caps(enum: int | None = None, lazy: int | None = None, budget: int | None = None) -> Caps:
    """Replace the process-wide caps and return the previous ones."""
    global _caps
    old = _caps
    _caps = Caps(old.enum if enum is None else enum,
                 old.lazy if lazy is None else lazy,
                 old.budget if budget is None else budget)
    return old


def project(w: Atom, k: int) -> Atom:
    """The level-``k`` atom below ``w``."""
    if k > w.level or k < 0:
        raise PreconditionError(f"cannot project a level-{w.level} atom to level {k}")
    while w.level > k:
        w = w.base
    return w


def _subsets_containing(items: Sequence[Atom], must: Atom | None) -> list[frozenset]:
    """Nonempty subsets of ``items`` (containing ``must`` if given), smallest first."""
    rest = [x for x in items if x is not must]
    out = []
    for r in range(len(rest) + 1):
        for combo in itertools.combinations(rest, r):
            if must is not None:
                out.append(frozenset((must,) + combo))
            elif combo:
                out.append(frozenset(combo))
    return out


class Tower:
    """Levels ``floor, floor+1, ...`` of atoms closed under the extension rule.

    The floor level is the explicit set ``floor_atoms``.  An atom one level
    up belongs to the tower when its base does and every member of every
    choice set does.  All per-atom answers are cached.
    """

    def __init__(self, space: Workspace, floor: int, floor_atoms: Iterable[Atom]):
        self.space = space
        self.floor = floor
        self.floor_atoms = tuple(sort_atoms(floor_atoms))
        self._floor_set = frozenset(self.floor_atoms)
        for a in self.floor_atoms:
            if a.level != floor:
                raise PreconditionError("floor atoms must all sit at the floor level")
        self._member: dict[Atom, bool] = {}
        self._block: dict[tuple[Atom, int], tuple[Atom, ...]] = {}
        self._count: dict[tuple[Atom, int], int] = {}
        self._levels: dict[int, tuple[Atom, ...]] = {floor: self.floor_atoms}
        self._structures: dict = {}
        self._lock = threading.RLock()

    # membership ---------------------------------------------------------

    def __contains__(self, w: Atom) -> bool:
        if w.level < self.floor:
            return False
        if w.level == self.floor:
            return w in self._floor_set
        hit = self._member.get(w)
        if hit is None:
            hit = (w.base in self and all(u in self for m in w.choices for u in m)
                   and atom_validity_error(w) is None)
            self._member[w] = hit
        return hit

    def require(self, w: Atom) -> None:
        if w not in self:
            raise PreconditionError(f"{w!r} is not in this tower")

    # blocks -------------------------------------------------------------

    def block(self, w: Atom, j: int) -> tuple[Atom, ...]:
        """Members of the tower sharing ``w``'s j-block, in canonical order."""
        key = (w, j)
        hit = self._block.get(key)
        if hit is not None:
            return hit
        self.require(w)
        if w.level == self.floor:
            if w.level == 0:
                members = self.floor_atoms
            else:
                target = w.choices[j]
                members = tuple(a for a in self.floor_atoms if a.choices[j] == target)
        else:
            fixed = w.choices[j]
            members = []
            for u in sort_atoms(fixed):
                others = [self.choice_sets(u, k) if k != j else [fixed]
                          for k in range(self.space.num_agents)]
                self._guard(_product_size(others), f"block of a level-{w.level} atom")
                members.extend(make_atom(u, combo) for combo in itertools.product(*others))
            members = tuple(sort_atoms(members))
        with self._lock:
            self._block.setdefault(key, members)
        return self._block[key]

    def fibers(self, w: Atom, j: int) -> dict[Atom | None, list[Atom]]:
        """The j-block of ``w`` grouped by base (one group keyed None at level 0)."""
        groups: dict = {}
        for a in self.block(w, j):
            groups.setdefault(a.base, []).append(a)
        return groups

    def fiber_size(self, u: Atom, j: int) -> int:
        """How many tower atoms have base ``u`` and a given valid j-th choice set."""
        n = 1
        for k in range(self.space.num_agents):
            if k != j:
                n *= self.count_choice_sets(u, k)
        return n

    # choice sets --------------------------------------------------------

    def count_choice_sets(self, w: Atom, j: int) -> int:
        """Number of valid j-th choice sets for extending ``w`` inside the tower."""
        key = (w, j)
        hit = self._count.get(key)
        if hit is not None:
            return hit
        self.require(w)
        if w.level == self.floor:
            members = self.block(w, j)
            if w.level == 0:
                n = 2 ** (len(members) - 1)
            else:
                sizes: dict = {}
                for a in members:
                    sizes[a.base] = sizes.get(a.base, 0) + 1
                n = _cover_count(w, sizes)
        else:
            sizes = {u: self.fiber_size(u, j) for u in w.choices[j]}
            n = _cover_count(w, sizes)
        self._count[key] = n
        return n

    def choice_sets(self, w: Atom, j: int) -> list[frozenset]:
        """All valid j-th choice sets for extending ``w`` inside the tower."""
        self._guard(self.count_choice_sets(w, j), "choice sets")
        if w.level == 0:
            return _subsets_containing(self.block(w, j), w)
        fibers = self.fibers(w, j)
        parts = []
        for u in sort_atoms(w.choices[j]):
            group = fibers.get(u, [])
            if not group:
                return []
            parts.append(_subsets_containing(group, w if u is w.base else None))
        return [frozenset().union(*combo) for combo in itertools.product(*parts)]

    def count_extensions(self, w: Atom) -> int:
        n = 1
        for j in range(self.space.num_agents):
            n *= self.count_choice_sets(w, j)
        return n

    def extensions(self, w: Atom) -> Iterator[Atom]:
        """Every tower atom one level up whose base is ``w``."""
        self._guard(self.count_extensions(w), "extensions")
        per_agent = [self.choice_sets(w, j) for j in range(self.space.num_agents)]
        for combo in itertools.product(*per_agent):
            yield make_atom(w, combo)

    def least_info(self, w: Atom) -> Atom:
        """The extension whose every choice set is the whole block of ``w``."""
        self.require(w)
        return make_atom(w, [self.block(w, j) for j in range(self.space.num_agents)])

    # levels -------------------------------------------------------------

    def count_level(self, i: int) -> int:
        """Number of tower atoms at level ``i``, without listing level ``i``."""
        if i < self.floor:
            raise PreconditionError(f"level {i} is below the floor {self.floor}")
        if i in self._levels:
            return len(self._levels[i])
        return sum(self.count_extensions(w) for w in self.level(i - 1))

    def level(self, i: int) -> tuple[Atom, ...]:
        """All tower atoms at level ``i`` in canonical order."""
        if i < self.floor:
            raise PreconditionError(f"level {i} is below the floor {self.floor}")
        if i > caps().lazy:
            raise CapExceeded(f"level {i} exceeds the lazy cap {caps().lazy}")
        hit = self._levels.get(i)
        if hit is not None:
            # caps apply the same way whether or not the level is cached
            self._guard(len(hit), f"level {i}")
            return hit
        self._guard(self.count_level(i), f"level {i}")
        atoms = tuple(sort_atoms(a for w in self.level(i - 1) for a in self.extensions(w)))
        with self._lock:
            self._levels.setdefault(i, atoms)
        return self._levels[i]

    def structure(self, i: int) -> tuple[KripkeStructure, tuple[Atom, ...]]:
        """Level ``i`` as a Kripke structure, with the atom behind each point."""
        return _level_structure(self, i)

    def _guard(self, n: int, what: str) -> None:
        if n > caps().budget:
            raise CapExceeded(f"{what} would produce {n} atoms, over the budget of {caps().budget}")


def _product_size(lists: Sequence[Sequence]) -> int:
    n = 1
    for x in lists:
        n *= len(x)
    return n


def _cover_count(w: Atom, sizes: dict) -> int:
    """Choice sets meeting every fiber of ``w.choices[j]``: product over fibers."""
    n = 1
    for u, size in sizes.items():
        if size == 0:
            return 0
        n *= 2 ** (size - 1) if u is w.base else 2 ** size - 1
    return n


def structure_of(space: Workspace, atoms: Sequence[Atom]) -> KripkeStructure:
    """Kripke structure on ``atoms`` (one level) with blocks from choice-set equality."""
    if not atoms:
        raise PreconditionError("no atoms")
    level = atoms[0].level
    parts = []
    for j in range(space.num_agents):
        if level == 0:
            parts.append((0,) * len(atoms))
        else:
            parts.append(tuple(a.choices[j] for a in atoms))
    return KripkeStructure(space.num_props, tuple(a.val for a in atoms), tuple(parts))


def _level_structure(tower: Tower, i: int):
    atoms = tower.level(i)
    hit = tower._structures.get(i)
    if hit is None:
        hit = tower._structures.setdefault(i, (structure_of(tower.space, atoms), atoms))
    return hit


# ---------------------------------------------------------------- full model


@lru_cache(maxsize=None)
def full_tower(space: Workspace) -> Tower:
    """The unrestricted canonical levels for ``space``."""
    return Tower(space, 0, [valuation_atom(v, space.num_props) for v in range(1 << space.num_props)])


def _enum_guard(i: int) -> None:
    if i > caps().enum:
        raise CapExceeded(f"full enumeration of level {i} exceeds the cap {caps().enum}")


def omega_level(space: Workspace, i: int) -> tuple[Atom, ...]:
    """Every atom of Omega_i, in canonical order."""
    _enum_guard(i)
    return full_tower(space).level(i)


def count_omega(space: Workspace, i: int) -> int:
    """|Omega_i|, counted from level i-1 without listing level i."""
    return full_tower(space).count_level(i)


def extensions(space: Workspace, w: Atom) -> Iterator[Atom]:
    if w.level >= caps().lazy:
        raise CapExceeded(f"extending a level-{w.level} atom exceeds the lazy cap {caps().lazy}")
    return full_tower(space).extensions(w)


def count_extensions(space: Workspace, w: Atom) -> int:
    return full_tower(space).count_extensions(w)


def choice_sets(space: Workspace, w: Atom, j: int) -> list[frozenset]:
    return full_tower(space).choice_sets(w, j)


def possibility_set(space: Workspace, w: Atom, j: int) -> tuple[Atom, ...]:
    """The j-block of ``w`` in Omega_level(w)."""
    if w.level > caps().lazy:
        raise CapExceeded(f"level {w.level} exceeds the lazy cap {caps().lazy}")
    return full_tower(space).block(w, j)


def omega_structure(space: Workspace, i: int) -> tuple[KripkeStructure, tuple[Atom, ...]]:
    _enum_guard(i)
    return full_tower(space).structure(i)


def check_atom(w: Atom) -> bool:
    return atom_validity_error(w) is None


# ---------------------------------------------------------------- formulas


@lru_cache(maxsize=None)
def _char(w: Atom) -> Formula:
    if w.level == 0:
        return conj([Prop(k) if w.val >> k & 1 else Not(Prop(k)) for k in range(w.num_props)])
    parts = [_char(w.base)]
    for j, m in enumerate(w.choices):
        members = sort_atoms(m)
        for u in members:
            parts.append(Not(Know(j, Not(_char(u)))))
        parts.append(Know(j, disj([_char(u) for u in members])))
    return conj(parts)


def characteristic_formula(w: Atom) -> Formula:
    """A formula of depth level(w) true at ``w`` and at no other atom of its level."""
    if w.level > caps().lazy:
        raise CapExceeded(f"level {w.level} exceeds the lazy cap {caps().lazy}")
    return _char(w)


def formula_of_set(atoms: Iterable[Atom]) -> Formula:
    """Disjunction of characteristic formulas: true exactly on ``atoms``."""
    items = sort_atoms(atoms)
    if not items:
        raise PreconditionError("the formula of an empty set is not defined")
    return disj([characteristic_formula(w) for w in items])


_holds_memo: dict = {}


def holds(w: Atom, f: Formula) -> bool:
    """Truth of ``f`` at the atom ``w`` using only ``w``'s own choice sets.

    This never builds a level structure, so it reaches atoms far above the
    enumeration cap.  ``depth(f)`` must not exceed ``level(w)``.
    """
    if f.depth > w.level:
        raise PreconditionError(f"formula of depth {f.depth} at a level-{w.level} atom")
    return _holds(project(w, f.depth), f)


def _holds(w: Atom, f: Formula) -> bool:
    key = (w, f)
    hit = _holds_memo.get(key)
    if hit is not None:
        return hit
    match f:
        case Prop(index):
            out = bool(w.val >> index & 1)
        case Not(sub):
            out = not _holds(project(w, sub.depth), sub)
        case And(left, right):
            out = (_holds(project(w, left.depth), left)
                   and _holds(project(w, right.depth), right))
        case Know(agent, sub):
            # w sits at depth(sub)+1, so its choice sets live at depth(sub)
            out = all(_holds(u, sub) for u in w.choices[agent])
        case _:
            raise TypeError(f"not a formula: {f!r}")
    _holds_memo[key] = out
    return out


def alpha_on_level(space: Workspace, i: int, f: Formula) -> frozenset[Atom]:
    """The atoms of Omega_i where ``f`` is true."""
    check_formula(f, space)
    if f.depth > i:
        raise PreconditionError(f"formula of depth {f.depth} cannot be evaluated on level {i}")
    K, atoms = omega_structure(space, i)
    return frozenset(atoms[s] for s in _members(alpha_mask(K, f)))


def is_tautology(space: Workspace, f: Formula) -> bool:
    """True iff ``f`` holds at every atom of Omega_depth(f)."""
    check_formula(f, space)
    K, _ = omega_structure(space, f.depth)
    return alpha_mask(K, f) == K.full_mask


# ---------------------------------------------------------------- connectivity


def omega_connected(space: Workspace, i: int) -> bool:
    """Whether Omega_i is connected.

    When level i is within budget the level structure is built and its
    cells counted.  Otherwise only level i-1 is listed: every j-block of
    level i is named by a pair (j, choice set), and with two or more agents
    all blocks whose choice sets extend the same base share an atom, so
    union-find over those names decides connectivity exactly.
    """
    tower = full_tower(space)
    if i == 0:
        return True
    if tower.count_level(i) <= caps().budget and i <= caps().enum:
        K, _ = tower.structure(i)
        return is_connected(K)
    return _block_graph_connected(tower, i)


def _block_graph_connected(tower: Tower, i: int) -> bool:
    space = tower.space
    below = tower.level(i - 1)
    parent: dict = {}

    def find(x):
        root = x
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for w in below:
        names = [(j, m) for j in range(space.num_agents) for m in tower.choice_sets(w, j)]
        if not names:
            continue
        if space.num_agents == 1:
            for name in names:
                find(name)
        else:
            for name in names[1:]:
                union(names[0], name)
    roots = {find(x) for x in list(parent)}
    return len(roots) == 1

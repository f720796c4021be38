"""Common knowledge of a single formula.

For a formula f of depth d, the restricted levels Omega^f_i (i >= d) are the
depth-i shadows of the points where f is common knowledge.  Level d is the
largest semantically closed part of alpha(f) on Omega_d; above it an atom
belongs when every choice set stays inside the level below.  When alpha(f)
is itself closed this is exactly alpha(E^{i-d} f) on Omega_i.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable

from .atoms import Atom, atom_validity_error, make_atom, sort_atoms
from .canonical import Tower, alpha_on_level, caps, is_tautology, structure_of
from .errors import CapExceeded, PreconditionError
from .formula import Formula, Workspace, check_formula, e_power, implies, render
from .kripke import is_connected

__all__ = [
    "ClosureStatus",
    "BlockClass",
    "CkSystem",
    "GenLevel",
    "Generativity",
    "CkImplication",
    "is_generative",
    "ck_implies",
    "classification_report",
]


class ClosureStatus(str, enum.Enum):
    CLOSED = "closed"
    NOT_CLOSED = "not-closed"
    EMPTY = "empty"


class BlockClass(str, enum.Enum):
    GENERATIVE = "generative"
    PROTO_GENERATIVE = "proto-generative"
    NEITHER = "neither"

    @property
    def is_proto(self) -> bool:
        return self is not BlockClass.NEITHER


def _closure_failures(space: Workspace, atoms: Iterable[Atom]) -> list[Atom]:
    """Atoms of ``atoms`` whose restricted block misses a fiber it should meet."""
    atoms = list(atoms)
    if not atoms or atoms[0].level == 0:
        return []
    bad = []
    for j in range(space.num_agents):
        bases: dict = {}
        for a in atoms:
            bases.setdefault(a.choices[j], set()).add(a.base)
        for a in atoms:
            if bases[a.choices[j]] != set(a.choices[j]):
                bad.append(a)
    return sort_atoms(set(bad))


class CkSystem:
    """A formula together with its cached restricted levels."""

    def __init__(self, space: Workspace, f: Formula):
        check_formula(f, space)
        self.space = space
        self.f = f
        self.d = f.depth
        if self.d > caps().enum:
            raise CapExceeded(f"depth {self.d} exceeds the enumeration cap {caps().enum}")
        self.truth_set = tuple(sort_atoms(alpha_on_level(space, self.d, f)))
        core = list(self.truth_set)
        while True:
            bad = set(_closure_failures(space, core))
            if not bad:
                break
            core = [a for a in core if a not in bad]
        self.core = tuple(core)
        self.tower = Tower(space, self.d, self.core) if self.core else None
        self._classes: dict = {}

    # closure --------------------------------------------------------------

    @property
    def closure_status(self) -> ClosureStatus:
        if not self.truth_set:
            return ClosureStatus.EMPTY
        if _closure_failures(self.space, self.truth_set):
            return ClosureStatus.NOT_CLOSED
        return ClosureStatus.CLOSED

    def semantically_closed(self) -> bool:
        return self.closure_status is ClosureStatus.CLOSED

    def closure_witnesses(self) -> list[Atom]:
        """Atoms of the truth set at which the closure condition fails."""
        return _closure_failures(self.space, self.truth_set)

    def ck_nonempty(self) -> bool:
        """Whether some point has f as common knowledge."""
        return bool(self.core)

    def has_dense_cell(self) -> bool:
        if not self.semantically_closed():
            raise PreconditionError("dense cells are only defined for semantically closed formulas")
        return is_connected(structure_of(self.space, self.truth_set))

    # levels -----------------------------------------------------------------

    def _tower(self) -> Tower:
        if self.tower is None:
            raise PreconditionError(f"common knowledge of {render(self.f)} is empty")
        return self.tower

    def omega_f_level(self, i: int, method: str = "closure") -> tuple[Atom, ...]:
        """Omega^f_i in canonical order.

        ``method="alpha"`` evaluates E^{i-d} f on Omega_i instead; it needs
        Omega_i within the enumeration cap and only matches the default for
        closed formulas.
        """
        if i < self.d:
            raise PreconditionError(f"level {i} is below the depth {self.d}")
        if method == "alpha":
            return tuple(sort_atoms(alpha_on_level(self.space, i, e_power(self.f, i - self.d,
                                                                       self.space.num_agents))))
        if method != "closure":
            raise ValueError(f"unknown method {method!r}")
        return self._tower().level(i)

    def count_level(self, i: int) -> int:
        return self._tower().count_level(i)

    def structure(self, i: int):
        """Omega^f_i as a Kripke structure plus the atom behind each point."""
        return self._tower().structure(i)

    def contains(self, w: Atom) -> bool:
        return self.tower is not None and w in self.tower

    def require(self, w: Atom) -> None:
        if not self.contains(w):
            raise PreconditionError(f"{w!r} is not an atom of the restricted levels")

    def block(self, w: Atom, j: int) -> tuple[Atom, ...]:
        """The member of the restricted j-partition containing ``w``."""
        self.require(w)
        return self.tower.block(w, j)

    def restricted_extensions(self, w: Atom) -> list[Atom]:
        self.require(w)
        if w.level >= caps().lazy:
            raise CapExceeded(f"extending a level-{w.level} atom exceeds the lazy cap {caps().lazy}")
        return list(self.tower.extensions(w))

    def least_info_extension(self, w: Atom) -> Atom:
        """The extension whose choice sets are the whole restricted blocks of ``w``."""
        self.require(w)
        if w.level >= caps().lazy:
            raise CapExceeded(f"extending a level-{w.level} atom exceeds the lazy cap {caps().lazy}")
        v = self.tower.least_info(w)
        reason = atom_validity_error(v)
        if reason is not None:
            raise PreconditionError(f"least-information extension is not an atom: {reason}")
        return v

    def least_info_to(self, w: Atom, level: int) -> Atom:
        while w.level < level:
            w = self.least_info_extension(w)
        return w

    # block classes -----------------------------------------------------------

    def classify_atom(self, w: Atom, j: int) -> BlockClass:
        """Class of the restricted j-block containing ``w``."""
        key = (w, j)
        hit = self._classes.get(key)
        if hit is None:
            self.require(w)
            sizes = [len(g) for g in self.tower.fibers(w, j).values()]
            if all(s >= 2 for s in sizes):
                hit = BlockClass.GENERATIVE
            elif any(s >= 2 for s in sizes):
                hit = BlockClass.PROTO_GENERATIVE
            else:
                hit = BlockClass.NEITHER
            self._classes[key] = hit
        return hit

    def classify_block(self, i: int, j: int, F: Iterable[Atom]) -> BlockClass:
        members = sort_atoms(F)
        if not members or any(a.level != i for a in members):
            raise PreconditionError(f"not a block of level {i}")
        if tuple(members) != self.block(members[0], j):
            raise PreconditionError(f"not a block of agent {j} in the restricted level {i}")
        return self.classify_atom(members[0], j)

    def generative_agents(self, w: Atom) -> list[int]:
        return [j for j in range(self.space.num_agents)
                if self.classify_atom(w, j) is BlockClass.GENERATIVE]

    def level_is_generative(self, i: int) -> bool:
        """The gen-level test at level ``i``."""
        need_all = self.space.num_agents >= 3
        for w in self.omega_f_level(i):
            agents = self.generative_agents(w)
            if need_all and len(agents) < self.space.num_agents:
                return False
            if not need_all and not agents:
                return False
        return True

    def has_proto_block(self, i: int | None = None) -> bool:
        i = self.d if i is None else i
        return any(self.classify_atom(w, j).is_proto
                   for w in self.omega_f_level(i) for j in range(self.space.num_agents))

    def gen_level(self, cap: int | None = None) -> GenLevel:
        """First level from the depth on at which every atom is generative."""
        if self.tower is None:
            return GenLevel(None, "empty")
        if not self.has_proto_block():
            return GenLevel(None, "uniquely extending")
        cap = caps().lazy if cap is None else cap
        for i in range(self.d, cap + 1):
            try:
                if self.level_is_generative(i):
                    return GenLevel(i, None)
            except CapExceeded as exc:
                return GenLevel(None, f"cap exceeded at level {i}: {exc}")
        return GenLevel(None, f"cap exceeded: not generative by level {cap}")


@dataclass(frozen=True)
class GenLevel:
    """Result of a gen-level scan: ``value`` or the reason there is none."""

    value: int | None
    reason: str | None = None

    @property
    def found(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class Generativity:
    """Three-valued generativity verdict.

    ``status`` is "generative", "not-generative" or "unknown".  Positive
    verdicts rest on the assumption that a proto-generative block at the
    formula's depth suffices; negative ones only use necessary conditions.
    ``provenance`` says which.
    """

    status: str
    reason: str | None
    provenance: str

    @property
    def value(self) -> bool | None:
        return {"generative": True, "not-generative": False}.get(self.status)


NECESSARY = "necessary-condition"
ASSUMED = "assumed-sufficiency"


def is_generative(space: Workspace, f: Formula, cap: int | None = None) -> Generativity:
    """Decide generativity of ``f`` as far as finite checks allow."""
    if space.num_agents < 2:
        return Generativity("not-generative", "needs at least two agents", NECESSARY)
    try:
        sys = CkSystem(space, f)
    except CapExceeded as exc:
        return Generativity("unknown", str(exc), NECESSARY)
    return _generativity(sys)


def _generativity(sys: CkSystem) -> Generativity:
    if sys.space.num_agents < 2:
        return Generativity("not-generative", "needs at least two agents", NECESSARY)
    status = sys.closure_status
    if status is ClosureStatus.EMPTY:
        return Generativity("not-generative", "empty", NECESSARY)
    if status is ClosureStatus.NOT_CLOSED:
        return Generativity("not-generative", "not semantically closed", NECESSARY)
    if not sys.has_dense_cell():
        return Generativity("not-generative", "not connected", NECESSARY)
    if not sys.has_proto_block():
        return Generativity("not-generative", "uniquely extending", NECESSARY)
    return Generativity("generative", None, ASSUMED)


@dataclass(frozen=True)
class CkImplication:
    """Bounded search for i with E^i f -> g a tautology."""

    shown: bool
    level: int | None
    searched_to: int

    @property
    def verdict(self) -> str:
        return f"shown at i={self.level}" if self.shown else f"not shown for i <= {self.searched_to}"


def ck_implies(space: Workspace, f: Formula, g: Formula, i_cap: int) -> CkImplication:
    """Look for i <= i_cap with E^i f -> g a tautology, within the enumeration cap."""
    check_formula(f, space)
    check_formula(g, space)
    last = -1
    for i in range(i_cap + 1):
        candidate = implies(e_power(f, i, space.num_agents), g)
        if candidate.depth > caps().enum:
            break
        last = i
        if is_tautology(space, candidate):
            return CkImplication(True, i, i)
    return CkImplication(False, None, last)


def classification_report(space: Workspace, f: Formula, cap: int | None = None) -> dict:
    """Summary used by the command line ``classify`` command."""
    sys = CkSystem(space, f)
    status = sys.closure_status
    connected = sys.has_dense_cell() if status is ClosureStatus.CLOSED else None
    gen = _generativity(sys)
    level = sys.gen_level(cap) if gen.status == "generative" else GenLevel(None, gen.reason)
    return {
        "formula": render(f, space.num_agents),
        "depth": sys.d,
        "truth_set_size": len(sys.truth_set),
        "closure": status.value,
        "semantically_closed": status is ClosureStatus.CLOSED,
        "ck_nonempty": sys.ck_nonempty(),
        "connected": connected,
        "generative": {"value": gen.value, "status": gen.status, "reason": gen.reason,
                       "provenance": gen.provenance},
        "gen_level": level.value,
        "gen_level_reason": level.reason,
    }

"""A third agent that only learns where no information was added.

The extra partition P_i on Omega_i is built level by level.  P_0 has one
block.  P_i first copies P_{i-1} through projection and then separates the
no-information images p_i(Omega_{i-1}) from the other atoms.  Adding P_i to
the canonical level structure gives a finite shadow of the structure K(B).
"""

from __future__ import annotations

from typing import Callable, Iterable

from ..atoms import Atom
from ..canonical import full_tower, omega_level, omega_structure, project
from ..errors import PreconditionError
from ..formula import Workspace
from ..kripke import KripkeStructure, distances_from

__all__ = [
    "third_agent_labels",
    "third_agent_structure",
    "adjacency_radius",
    "good_subset_check",
]


def third_agent_labels(space: Workspace, level: int) -> dict[Atom, tuple[bool, ...]]:
    """For each atom of Omega_level, its P-class as a tuple of membership bits.

    Bit k (k >= 1) says whether the projection to level k is a no-information
    image of level k-1.
    """
    tower = full_tower(space)
    images = {}
    for k in range(1, level + 1):
        images[k] = {tower.least_info(w) for w in omega_level(space, k - 1)}
    labels = {}
    for w in omega_level(space, level):
        labels[w] = tuple(project(w, k) in images[k] for k in range(1, level + 1))
    return labels


def third_agent_structure(space: Workspace, level: int) -> tuple[KripkeStructure, tuple[Atom, ...]]:
    """Omega_level with the partition P_level appended as the last agent."""
    K, atoms = omega_structure(space, level)
    labels = third_agent_labels(space, level)
    extra = tuple(labels[a] for a in atoms)
    return KripkeStructure(K.num_props, K.valuation, K.partitions + (extra,)), atoms


def adjacency_radius(K: KripkeStructure) -> float:
    """Smallest eccentricity over the points of K."""
    return min(max(distances_from(K, s)) for s in range(K.num_points))


def good_subset_check(space: Workspace, level: int,
                      A: Iterable[Atom] | Callable[[Atom], bool],
                      fiber_level: int | None = None) -> bool:
    """Finite test of goodness for a set of level-``level`` atoms.

    Whenever a block of Omega_level meets A, A must meet every fiber over
    ``fiber_level`` (default ``level - 1``) that the block meets.  ``A`` is a
    collection or a membership test.  For alienated extensions along S the
    fiber level should be a member of S.
    """
    fiber_level = level - 1 if fiber_level is None else fiber_level
    if not 0 <= fiber_level < level:
        raise PreconditionError("goodness needs a fiber level below the level")
    atoms = omega_level(space, level)
    member = A if callable(A) else set(A).__contains__
    for j in range(space.num_agents):
        met: dict = {}
        inside: dict = {}
        for a in atoms:
            u = project(a, fiber_level)
            met.setdefault(a.choices[j], set()).add(u)
            if member(a):
                inside.setdefault(a.choices[j], set()).add(u)
        if any(met[key] != fibers for key, fibers in inside.items()):
            return False
    return True

"""Finite Kripke structures for S5 knowledge.

Points are ``0..n-1``.  Each agent's knowledge is a partition of the points,
stored as one block id per point.  The valuation gives, per point, a bitmask
over the primitive propositions.  Truth sets are Python ints used as bitsets
over the points; ``alpha`` converts them to frozensets for callers.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .atoms import Atom, make_atom, valuation_atom
from .errors import FormulaError, PreconditionError
from .formula import And, Formula, Know, Not, Prop, e_power

__all__ = [
    "KripkeStructure",
    "INFINITE",
    "alpha",
    "alpha_mask",
    "cells",
    "adjacency_distance",
    "diameter",
    "restrict",
    "refine",
    "theory_map",
    "theory_level",
    "common_knowledge_points",
    "is_connected",
    "to_json",
    "from_json",
    "to_dot",
]

INFINITE = float("inf")


def _normalize(ids: Sequence) -> tuple[int, ...]:
    """Relabel block ids by order of first appearance."""
    seen: dict = {}
    return tuple(seen.setdefault(b, len(seen)) for b in ids)


@dataclass(frozen=True, eq=False)
class KripkeStructure:
    """A finite S5 Kripke structure.

    ``valuation[s]`` is the bitmask of propositions true at point ``s`` and
    ``partitions[j][s]`` is the block id of ``s`` for agent ``j``.
    """

    num_props: int
    valuation: tuple[int, ...]
    partitions: tuple[tuple[int, ...], ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.valuation)
        if n == 0:
            raise ValueError("a Kripke structure needs at least one point")
        if not self.partitions:
            raise ValueError("a Kripke structure needs at least one agent")
        limit = 1 << self.num_props
        if any(not 0 <= v < limit for v in self.valuation):
            raise ValueError("valuation entry out of range")
        object.__setattr__(self, "valuation", tuple(int(v) for v in self.valuation))
        parts = []
        for p in self.partitions:
            if len(p) != n:
                raise ValueError("every partition must assign a block to every point")
            parts.append(_normalize(p))
        object.__setattr__(self, "partitions", tuple(parts))

    @classmethod
    def from_blocks(cls, num_props: int, valuation: Sequence[int],
                    blocks: Sequence[Iterable[Iterable[int]]]) -> KripkeStructure:
        """Build from explicit block lists, one list of point collections per agent."""
        n = len(valuation)
        parts = []
        for agent_blocks in blocks:
            ids = [-1] * n
            for b, block in enumerate(agent_blocks):
                for s in block:
                    if ids[s] != -1:
                        raise ValueError(f"point {s} appears in two blocks")
                    ids[s] = b
            if -1 in ids:
                raise ValueError("some point has no block")
            parts.append(ids)
        return cls(num_props, tuple(valuation), tuple(tuple(p) for p in parts))

    def __eq__(self, other):
        if not isinstance(other, KripkeStructure):
            return NotImplemented
        return (self.num_props == other.num_props and self.valuation == other.valuation
                and self.partitions == other.partitions)

    def __hash__(self):
        return hash((self.num_props, self.valuation, self.partitions))

    @property
    def num_points(self) -> int:
        return len(self.valuation)

    @property
    def num_agents(self) -> int:
        return len(self.partitions)

    @property
    def full_mask(self) -> int:
        return (1 << self.num_points) - 1

    def _memo(self, key, build):
        value = self._cache.get(key)
        if value is None:
            value = build()
            with self._lock:
                value = self._cache.setdefault(key, value)
        return value

    def block_masks(self, j: int) -> tuple[int, ...]:
        """Bitmask of every block of agent ``j``, indexed by block id."""
        def build():
            masks = [0] * (max(self.partitions[j]) + 1)
            for s, b in enumerate(self.partitions[j]):
                masks[b] |= 1 << s
            return tuple(masks)
        return self._memo(("blocks", j), build)

    def blocks(self, j: int) -> list[list[int]]:
        return [_members(m) for m in self.block_masks(j)]

    def block_of(self, j: int, s: int) -> list[int]:
        return _members(self.block_masks(j)[self.partitions[j][s]])


def _members(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _mask(points: Iterable[int]) -> int:
    m = 0
    for s in points:
        m |= 1 << s
    return m


# ---------------------------------------------------------------- truth


def alpha_mask(K: KripkeStructure, f: Formula) -> int:
    """Truth set of ``f`` in ``K`` as a bitmask over the points."""
    if f.max_prop >= K.num_props:
        raise FormulaError(f"formula uses p{f.max_prop} but the structure has {K.num_props} propositions")
    if f.max_agent >= K.num_agents:
        raise FormulaError(f"formula uses agent {f.max_agent} but the structure has {K.num_agents}")
    memo = K._cache.setdefault("alpha", {})
    return _eval(K, f, memo)


def _eval(K: KripkeStructure, f: Formula, memo: dict) -> int:
    hit = memo.get(f)
    if hit is not None:
        return hit
    # iterative post-order to survive deep E towers
    stack = [f]
    while stack:
        g = stack[-1]
        if g in memo:
            stack.pop()
            continue
        match g:
            case Prop(index):
                bit = 1 << index
                memo[g] = _mask(s for s, v in enumerate(K.valuation) if v & bit)
                stack.pop()
            case Not(sub) | Know(_, sub):
                if sub not in memo:
                    stack.append(sub)
                    continue
                if isinstance(g, Not):
                    memo[g] = K.full_mask & ~memo[sub]
                else:
                    inner = memo[sub]
                    memo[g] = _or_all(b for b in K.block_masks(g.agent) if b & ~inner == 0)
                stack.pop()
            case And(left, right):
                if left not in memo:
                    stack.append(left)
                    continue
                if right not in memo:
                    stack.append(right)
                    continue
                memo[g] = memo[left] & memo[right]
                stack.pop()
    return memo[f]


def _or_all(masks: Iterable[int]) -> int:
    out = 0
    for m in masks:
        out |= m
    return out


def alpha(K: KripkeStructure, f: Formula) -> frozenset[int]:
    """The set of points of ``K`` where ``f`` is true."""
    return frozenset(_members(alpha_mask(K, f)))


# ---------------------------------------------------------------- geometry


def _components(K: KripkeStructure, mask: int | None = None) -> list[int]:
    """Cells of ``K`` (or of the points in ``mask``), as bitmasks in point order."""
    if mask is None:
        mask = K.full_mask
    parent = list(range(K.num_points))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j in range(K.num_agents):
        for block in K.block_masks(j):
            pts = _members(block & mask)
            for s in pts[1:]:
                a, b = find(pts[0]), find(s)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    groups: dict[int, int] = {}
    for s in _members(mask):
        r = find(s)
        groups[r] = groups.get(r, 0) | (1 << s)
    return [groups[r] for r in sorted(groups)]


def cells(K: KripkeStructure) -> list[frozenset[int]]:
    """Members of the meet of the agents' partitions, ordered by least point."""
    return [frozenset(_members(c)) for c in K._memo(("cells",), lambda: _components(K))]


def is_connected(K: KripkeStructure) -> bool:
    return len(K._memo(("cells",), lambda: _components(K))) == 1


def _bfs(K: KripkeStructure, source: int) -> list[float]:
    n = K.num_points
    dist: list[float] = [INFINITE] * n
    dist[source] = 0
    used = [set() for _ in range(K.num_agents)]
    queue = deque([source])
    while queue:
        s = queue.popleft()
        for j in range(K.num_agents):
            b = K.partitions[j][s]
            if b in used[j]:
                continue
            used[j].add(b)
            for t in _members(K.block_masks(j)[b]):
                if dist[t] == INFINITE:
                    dist[t] = dist[s] + 1
                    queue.append(t)
    return dist


def adjacency_distance(K: KripkeStructure, s: int, t: int) -> float:
    """Fewest block-sharing steps from ``s`` to ``t``; ``INFINITE`` across cells."""
    if s == t:
        return 0
    return _bfs(K, s)[t]


def distances_from(K: KripkeStructure, s: int) -> list[float]:
    return _bfs(K, s)


def diameter(K: KripkeStructure) -> float:
    """Largest adjacency distance between two points."""
    def build():
        if not is_connected(K):
            return INFINITE
        return max(max(_bfs(K, s)) for s in range(K.num_points))
    return K._memo(("diameter",), build)


def restrict(K: KripkeStructure, points: Iterable[int]) -> KripkeStructure:
    """The structure on ``points`` whose blocks are the old blocks cut down to them."""
    keep = sorted(set(points))
    if not keep:
        raise PreconditionError("cannot restrict to an empty point set")
    if keep[0] < 0 or keep[-1] >= K.num_points:
        raise PreconditionError("restriction names a point outside the structure")
    return KripkeStructure(K.num_props, tuple(K.valuation[s] for s in keep),
                           tuple(tuple(p[s] for s in keep) for p in K.partitions))


def refine(K: KripkeStructure) -> list[tuple[int, ...]]:
    """The refinement sequence R_0, R_1, ... up to its fixpoint.

    R_0 groups points by valuation.  A point's class in R_{i+1} is its
    R_i class together with, for each agent, the set of R_i classes its block
    meets.  Each partition is a tuple of class ids per point, numbered by
    first appearance; the last entry is the fixpoint.
    """
    current = _normalize(K.valuation)
    out = [current]
    blocks = [K.blocks(j) for j in range(K.num_agents)]
    while True:
        seen_by_block = [[frozenset(current[t] for t in blk) for blk in blocks[j]]
                         for j in range(K.num_agents)]
        signature = [(current[s],) + tuple(seen_by_block[j][K.partitions[j][s]]
                                           for j in range(K.num_agents))
                     for s in range(K.num_points)]
        nxt = _normalize([tuple(tuple(sorted(x)) if isinstance(x, frozenset) else x for x in sig)
                          for sig in signature])
        if len(set(nxt)) == len(set(current)):
            return out
        out.append(nxt)
        current = nxt


def common_knowledge_points(K: KripkeStructure, f: Formula) -> frozenset[int]:
    """Points at which ``f`` is common knowledge: the cells inside alpha(K, f)."""
    truth = alpha_mask(K, f)
    return frozenset(s for c in K._memo(("cells",), lambda: _components(K))
                     if c & ~truth == 0 for s in _members(c))


def e_tower_points(K: KripkeStructure, f: Formula, n: int | None = None) -> frozenset[int]:
    """Intersection of alpha(K, E^l f) for l = 0..n (default: number of points)."""
    if n is None:
        n = K.num_points
    mask = K.full_mask
    for l in range(n + 1):
        mask &= alpha_mask(K, e_power(f, l, K.num_agents))
    return frozenset(_members(mask))


# ---------------------------------------------------------------- theory map


def theory_level(K: KripkeStructure, i: int) -> tuple[Atom, ...]:
    """The depth-``i`` theory of every point, as canonical atoms."""
    levels = K._cache.setdefault("theories", [])
    if not levels:
        with K._lock:
            if not levels:
                levels.append(tuple(valuation_atom(v, K.num_props) for v in K.valuation))
    while len(levels) <= i:
        k = len(levels)
        prev = levels[k - 1]
        per_block = [[frozenset(prev[t] for t in blk) for blk in K.blocks(j)]
                     for j in range(K.num_agents)]
        nxt = tuple(make_atom(prev[s], [per_block[j][K.partitions[j][s]]
                                        for j in range(K.num_agents)])
                    for s in range(K.num_points))
        with K._lock:
            if len(levels) == k:
                levels.append(nxt)
    return levels[i]


def theory_map(K: KripkeStructure, s: int, i: int, level_cap: int | None = None) -> Atom:
    """The atom of depth ``i`` made of the formulas true at point ``s``."""
    from .canonical import caps
    cap = caps().lazy if level_cap is None else level_cap
    if i > cap:
        from .errors import CapExceeded
        raise CapExceeded(f"theory depth {i} exceeds the level cap {cap}")
    if not 0 <= s < K.num_points:
        raise PreconditionError(f"no point {s}")
    return theory_level(K, i)[s]


# ---------------------------------------------------------------- io


def to_json(K: KripkeStructure) -> dict:
    return {
        "num_props": K.num_props,
        "agents": K.num_agents,
        "points": [{"id": s, "val": [bool(v >> k & 1) for k in range(K.num_props)]}
                   for s, v in enumerate(K.valuation)],
        "partitions": [list(p) for p in K.partitions],
    }


def from_json(doc: dict | str) -> KripkeStructure:
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        num_props = int(doc["num_props"])
        points = sorted(doc["points"], key=lambda p: p["id"])
        if [p["id"] for p in points] != list(range(len(points))):
            raise ValueError("point ids must be 0..n-1")
        vals = []
        for p in points:
            bits = p["val"]
            if len(bits) != num_props:
                raise ValueError(f"point {p['id']} has {len(bits)} truth values, expected {num_props}")
            vals.append(sum(1 << k for k, b in enumerate(bits) if b))
        parts = tuple(tuple(int(b) for b in part) for part in doc["partitions"])
        if "agents" in doc and int(doc["agents"]) != len(parts):
            raise ValueError("'agents' disagrees with the number of partitions")
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed structure document: {exc}") from exc
    return KripkeStructure(num_props, tuple(vals), parts)


_COLORS = ["red", "blue", "darkgreen", "orange", "purple", "brown", "gray"]


def to_dot(K: KripkeStructure, labels: Sequence[str] | None = None) -> str:
    """Graphviz text: one node per point, one colored edge per block co-membership."""
    lines = ["graph kripke {"]
    for s, v in enumerate(K.valuation):
        props = ",".join(f"p{k}" for k in range(K.num_props) if v >> k & 1) or "-"
        name = labels[s] if labels is not None else str(s)
        lines.append(f'  {s} [label="{name}: {props}"];')
    for j in range(K.num_agents):
        color = _COLORS[j % len(_COLORS)]
        for block in K.blocks(j):
            for a_i, a in enumerate(block):
                for b in block[a_i + 1:]:
                    lines.append(f'  {a} -- {b} [color={color}, label="{j}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"

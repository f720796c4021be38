"""Alienated extensions and the separation formulas g_i.

One hop of an alienated extension takes an atom w of a restricted level i in
the schedule S and reads off its depth-n_S(i) theory inside the finite Kripke
structure Omega^f_i.  Between schedule members no new information enters, so
hops with a long gap freeze the finite model of level i into the extension.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..atoms import Atom, atom_validity_error, make_atom
from ..canonical import caps, formula_of_set, holds, project
from ..commonknowledge import CkSystem
from ..errors import CapExceeded, ConstructionError, PreconditionError
from ..formula import Formula, Know, e_power, everybody_knows
from ..kripke import adjacency_distance, theory_level
from .schedule import Schedule, ScheduleExhausted

__all__ = [
    "AlienatedPath",
    "theory_jump",
    "alienated_extend",
    "GFormula",
    "g_formula",
    "LemmaResult",
    "lemma2_check",
    "lemma3_check",
    "lemma4_check",
    "mutate_choice",
    "SeparationReport",
    "separation_witness",
]


def theory_jump(sys: CkSystem, w: Atom, depth: int) -> Atom:
    """The depth-``depth`` theory of ``w`` as a point of the structure Omega^f_level(w)."""
    if depth > caps().lazy:
        raise CapExceeded(f"depth {depth} exceeds the lazy cap {caps().lazy}")
    sys.require(w)
    K, atoms = sys.structure(w.level)
    index = _index(atoms, w)
    if depth <= w.level:
        return project(w, depth)
    return theory_level(K, depth)[index]


def _index(atoms, w) -> int:
    cache = _positions.get(id(atoms))
    if cache is None or cache[0] is not atoms:
        cache = (atoms, {a: s for s, a in enumerate(atoms)})
        _positions[id(atoms)] = cache
    return cache[1][w]


_positions: dict = {}


@dataclass(frozen=True)
class AlienatedPath:
    """The atoms p^{S,f}_k(w) at the schedule members k up to ``target``.

    When ``target`` is not a schedule member the last entry is the depth-
    ``target`` projection of the next hop and ``partial`` is set.
    """

    origin: Atom
    schedule: Schedule
    levels: tuple[int, ...]
    atoms: tuple[Atom, ...]
    partial: bool

    def at(self, level: int) -> Atom:
        """The path's atom at ``level`` (projecting the next entry if needed)."""
        for k, a in zip(self.levels, self.atoms):
            if k >= level:
                return project(a, level)
        raise PreconditionError(f"path only reaches level {self.levels[-1]}")

    @property
    def last(self) -> Atom:
        return self.atoms[-1]


def alienated_extend(sys: CkSystem, S: Schedule, w: Atom, target: int) -> AlienatedPath:
    """Follow theory-map hops along ``S`` from ``w`` up to level ``target``."""
    if w.level not in S:
        raise PreconditionError(f"the level {w.level} of the origin is not in {S}")
    if target > caps().lazy:
        raise CapExceeded(f"target level {target} exceeds the lazy cap {caps().lazy}")
    sys.require(w)
    levels, atoms = [w.level], [w]
    cur = w
    partial = False
    while cur.level < target:
        nxt_level = S.next_after(cur.level)
        if nxt_level > target:
            nxt_level, partial = target, True
        nxt = theory_jump(sys, cur, nxt_level)
        if project(nxt, cur.level) is not cur:
            raise ConstructionError("theory jump does not extend its source",
                                    certificate={"source": cur, "image": nxt})
        reason = atom_validity_error(nxt)
        if reason is not None:
            raise ConstructionError(f"theory jump produced an invalid atom: {reason}",
                                    certificate={"source": cur, "image": nxt})
        levels.append(nxt_level)
        atoms.append(nxt)
        cur = nxt
    return AlienatedPath(w, S, tuple(levels), tuple(atoms), partial)


@dataclass(frozen=True)
class LemmaResult:
    """Outcome of a finite lemma check; truthy when it passed."""

    passed: bool
    checked: int
    failures: tuple = ()
    detail: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.passed


# ---------------------------------------------------------------- g formulas


@dataclass(frozen=True)
class GFormula:
    level: int
    formula: Formula
    image: frozenset


_g_cache: dict = {}


def g_formula(sys: CkSystem, i: int) -> GFormula:
    """The formula true on Omega^f_{i+1} exactly at the one-step theory images of Omega^f_i."""
    key = (id(sys), i)
    hit = _g_cache.get(key)
    if hit is not None and hit[0] is sys:
        return hit[1]
    image = frozenset(theory_jump(sys, w, i + 1) for w in sys.omega_f_level(i))
    out = GFormula(i, formula_of_set(image), image)
    _g_cache[key] = (sys, out)
    return out


def lemma3_check(sys: CkSystem, i: int, l: int, targets=None) -> LemmaResult:
    """E^l g_i holds at the depth-(i+l+1) theory of every atom of Omega^f_i.

    ``targets`` replaces the theory images (used to confirm the check can fail).
    """
    if i + l + 1 > caps().lazy:
        raise CapExceeded(f"level {i + l + 1} exceeds the lazy cap {caps().lazy}")
    g = g_formula(sys, i)
    claim = e_power(g.formula, l, sys.space.num_agents)
    if targets is None:
        targets = [theory_jump(sys, w, i + l + 1) for w in sys.omega_f_level(i)]
    failures = tuple(t for t in targets if not holds(t, claim))
    return LemmaResult(not failures, len(targets), failures, {"i": i, "l": l})


def mutate_choice(sys: CkSystem, v: Atom, image: frozenset) -> Atom | None:
    """Replace one choice set of the level-(i+2) atom ``v`` so that it leaves ``image``.

    Returns a valid atom one hop from ``v`` whose choice sets reach outside the
    g-image, or None if every alternative stays inside it.
    """
    base = v.base
    for j in range(sys.space.num_agents):
        for m in sys.tower.choice_sets(base, j):
            if m != v.choices[j] and not m <= image:
                choices = list(v.choices)
                choices[j] = m
                return make_atom(base, choices)
    return None


def lemma4_check(sys: CkSystem, i: int, gen: int | None = None) -> LemmaResult:
    """E g_i fails at the least-information extension of every atom of Omega^f_{i+1}.

    The formula has depth i+2, so its truth at p^f_{i+2}(w) fixes its truth
    at every extension of that atom.  For each atom the proof's witness agent
    (one for whom w is generative) is checked on its own.
    """
    if gen is None:
        found = sys.gen_level()
        if not found.found:
            raise PreconditionError(f"gen level unknown: {found.reason}")
        gen = found.value
    if i < gen:
        raise PreconditionError(f"level {i} is below the gen level {gen}")
    g = g_formula(sys, i)
    e_g = everybody_knows(g.formula, sys.space.num_agents)
    failures, witnesses = [], {}
    level = sys.omega_f_level(i + 1)
    for w in level:
        v = sys.least_info_extension(w)
        if holds(v, e_g):
            failures.append(w)
            continue
        agents = sys.generative_agents(w)
        witnesses[w] = [j for j in agents if not holds(v, Know(j, g.formula))]
        if agents and not witnesses[w]:
            failures.append(w)
    return LemmaResult(not failures, len(level), tuple(failures),
                       {"i": i, "gen": gen,
                        "witness_agents": sorted({j for js in witnesses.values() for j in js})})


def lemma2_check(sys: CkSystem, S: Schedule, b: Atom, d: Atom, m: int) -> LemmaResult:
    """Distance between the S-paths of ``b`` and ``d`` does not grow from max level to ``m``."""
    low = max(b.level, d.level)
    if m not in S or m <= low:
        raise PreconditionError(f"{m} must be a schedule member above {low}")
    pb = alienated_extend(sys, S, b, m)
    pd = alienated_extend(sys, S, d, m)
    dist = []
    for level in (low, m):
        K, atoms = sys.structure(level)
        s, t = _index(atoms, pb.at(level)), _index(atoms, pd.at(level))
        dist.append(adjacency_distance(K, s, t))
    ok = dist[1] <= dist[0]
    return LemmaResult(ok, 1, () if ok else ((b, d),),
                       {"low_level": low, "high_level": m, "low": dist[0], "high": dist[1]})


# ---------------------------------------------------------------- separation


@dataclass(frozen=True)
class SeparationReport:
    """A certified lower bound on the distance between two alienated extensions.

    At level ``k`` the schedules split: ``k + 1`` belongs to the one named by
    ``s_side`` only.  ``E^bound g_k`` holds on the other path at level
    ``k + bound + 1`` while ``E g_k`` fails on the ``s_side`` path at level
    ``k + 2``, so the two limit points lie at adjacency distance >= ``bound``.
    """

    level: int
    s_side: str
    bound: int
    horizon: int
    e_power: int


def separation_witness(sys: CkSystem, S: Schedule, T: Schedule, w: Atom, horizon: int,
                       gen: int | None = None) -> SeparationReport | None:
    """Best distance bound between the S- and T-extensions of ``w`` visible by ``horizon``."""
    start = w.level
    if start not in S or start not in T:
        raise PreconditionError(f"level {start} must belong to both schedules")
    if S == T:
        return None
    s_set, t_set = set(S.upto(horizon)), set(T.upto(horizon))
    if gen is None:
        found = sys.gen_level()
        if not found.found:
            raise PreconditionError(f"gen level unknown: {found.reason}")
        gen = found.value
    best = None
    for k in sorted(s_set & t_set):
        if k < max(start, gen) or k + 2 > horizon:
            continue
        for side, here, other, here_s, other_s in (("S", s_set, t_set, S, T),
                                                   ("T", t_set, s_set, T, S)):
            if k + 1 not in here or k + 1 in other:
                continue
            top = min(_next_or(other_s, k, horizon), horizon)
            m = top - k - 1
            if m < 1:
                continue
            try:
                p_here = alienated_extend(sys, here_s, w, k + 2)
                p_other = alienated_extend(sys, other_s, w, top)
                g = g_formula(sys, k)
            except CapExceeded:
                continue
            n = sys.space.num_agents
            if not holds(p_other.at(top), e_power(g.formula, m, n)):
                raise ConstructionError("E^m g fails on the unbroken path",
                                        certificate={"level": k, "m": m})
            if holds(p_here.at(k + 2), everybody_knows(g.formula, n)):
                raise ConstructionError("E g holds after the least-information step",
                                        certificate={"level": k})
            if best is None or m > best.bound:
                best = SeparationReport(k, side, m, horizon, m)
    if best is None:
        raise PreconditionError(f"no divergence the desk can certify within horizon {horizon}")
    return best


def _next_or(S: Schedule, k: int, default: int) -> int:
    try:
        return S.next_after(k)
    except ScheduleExhausted:
        return default

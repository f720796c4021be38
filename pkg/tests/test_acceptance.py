"""End-to-end acceptance checks, one group per criterion.

Run with ``pytest tests/test_acceptance.py``; the terminal summary prints one
PASS/FAIL line per criterion.
"""

import os
import random
import subprocess
import sys
import time

import pytest

from kripkecells.canonical import (_block_graph_connected, alpha_on_level, characteristic_formula,
                                   count_omega, full_tower, omega_connected, omega_level,
                                   omega_structure, project)
from kripkecells.cellbuilder import (PASS, alienated_extend, fanout_build, fanout_checks,
                                     g_formula, lemma2_check, lemma3_check, lemma4_check,
                                     mutate_choice, parse_schedule, theory_jump)
from kripkecells.commonknowledge import CkSystem
from kripkecells.formula import And, Know, Not, Prop, Workspace, implies, parse, top
from kripkecells.kripke import KripkeStructure, alpha, cells, is_connected, refine, theory_level
from kripkecells.shiftgen import build_shift_structure, shift, sigma, tau, theory_separation_profile

from oracles import depth1_theories, level2_count

DEMO = "K0 p0 | K0 !p0"
S12 = Workspace(1, 2)


def random_formula(rng, depth, size, num_props=1, num_agents=2):
    """A seeded random formula of knowledge depth at most ``depth``."""
    if size <= 1:
        if depth > 0 and rng.random() < 0.4:
            return Know(rng.randrange(num_agents), random_formula(rng, depth - 1, 1, num_props, num_agents))
        return Prop(rng.randrange(num_props))
    roll = rng.random()
    if roll < 0.25:
        return Not(random_formula(rng, depth, size - 1, num_props, num_agents))
    if roll < 0.5 and depth > 0:
        return Know(rng.randrange(num_agents), random_formula(rng, depth - 1, size - 1, num_props, num_agents))
    k = rng.randint(1, size - 1)
    return And(random_formula(rng, depth, k, num_props, num_agents),
               random_formula(rng, depth, size - k, num_props, num_agents))


def random_structure(rng, num_props=1, num_agents=2, max_points=6):
    n = rng.randint(1, max_points)
    val = tuple(rng.randrange(1 << num_props) for _ in range(n))
    parts = tuple(tuple(rng.randrange(n) for _ in range(n)) for _ in range(num_agents))
    return KripkeStructure(num_props, val, parts)


# ---------------------------------------------------------------- 1


@pytest.mark.criterion(1, "level counts match independent oracles")
def test_counts_match_oracles():
    start = time.perf_counter()
    assert count_omega(Workspace(1, 2), 0) == 2
    assert count_omega(Workspace(2, 2), 0) == 4
    assert len(omega_level(Workspace(2, 2), 0)) == 4
    theories = depth1_theories(max_points=4, num_agents=2)
    assert len(theories) == 8 == len(omega_level(S12, 1)) == count_omega(S12, 1)
    assert level2_count(2) == 128 == len(omega_level(S12, 2)) == count_omega(S12, 2)
    assert time.perf_counter() - start < 10


# ---------------------------------------------------------------- 2


@pytest.mark.criterion(2, "levels 0 to 2 are connected")
@pytest.mark.parametrize("agents", [2, 3])
def test_levels_connected(agents):
    start = time.perf_counter()
    space = Workspace(1, agents)
    for i in range(3):
        assert omega_connected(space, i), (agents, i)
        if i > 0:
            # the block-graph route used above the budget agrees with the built structure
            # wherever both are available
            assert _block_graph_connected(full_tower(space), i) is True
    for i in range(3):
        K, _ = omega_structure(S12, i)
        assert is_connected(K)
    assert time.perf_counter() - start < 30


# ---------------------------------------------------------------- 3


@pytest.mark.criterion(3, "truth sets are stable under projection")
def test_stability():
    start = time.perf_counter()
    rng = random.Random(20261019)
    level2 = omega_level(S12, 2)
    for _ in range(50):
        f = random_formula(rng, 1, rng.randint(1, 7))
        low = alpha_on_level(S12, 1, f)
        assert alpha_on_level(S12, 2, f) == {v for v in level2 if project(v, 1) in low}
    assert time.perf_counter() - start < 60


# ---------------------------------------------------------------- 4


@pytest.mark.criterion(4, "characteristic formulas single out their atom")
def test_characteristic_formulas():
    for i in (0, 1):
        for w in omega_level(S12, i):
            assert alpha_on_level(S12, i, characteristic_formula(w)) == {w}
    rng = random.Random(4)
    for w in rng.sample(omega_level(S12, 2), 20):
        assert alpha_on_level(S12, 2, characteristic_formula(w)) == {w}


# ---------------------------------------------------------------- 5


@pytest.mark.criterion(5, "S5 axioms hold at every point")
def test_s5_axioms():
    rng = random.Random(5)
    for _ in range(100):
        K = random_structure(rng)
        f = random_formula(rng, 2, rng.randint(1, 6))
        g = random_formula(rng, 2, rng.randint(1, 6))
        everything = frozenset(range(K.num_points))
        for j in range(2):
            kf = Know(j, f)
            assert alpha(K, implies(And(kf, Know(j, implies(f, g))), Know(j, g))) == everything
            assert alpha(K, implies(kf, f)) == everything
            assert alpha(K, implies(kf, Know(j, kf))) == everything
            assert alpha(K, implies(Not(kf), Know(j, Not(kf)))) == everything


# ---------------------------------------------------------------- 6


@pytest.mark.criterion(6, "least-information extension equals the theory map")
@pytest.mark.parametrize("text", [None, DEMO, "K0 p0 & K1 p0"])
def test_least_info_is_theory_map(text):
    sys_ = CkSystem(S12, top() if text is None else parse(text, S12))
    assert sys_.semantically_closed()
    for i in (0, 1):
        if i < sys_.d:
            continue
        K, atoms = sys_.structure(i)
        images = theory_level(K, i + 1)
        for s, w in enumerate(atoms):
            assert images[s] is sys_.least_info_extension(w)


# ---------------------------------------------------------------- 7


@pytest.mark.criterion(7, "g-formula lemmas at desk scale, with a mutation control")
def test_lemma3_lemma4_mutation(taut_sys):
    start = time.perf_counter()
    gen = taut_sys.gen_level()
    assert gen.found and gen.value == 0
    assert lemma3_check(taut_sys, 0, 1)
    assert lemma4_check(taut_sys, gen.value)
    g = g_formula(taut_sys, 0)
    targets = [theory_jump(taut_sys, w, 2) for w in omega_level(S12, 0)]
    mutant = mutate_choice(taut_sys, targets[0], g.image)
    assert mutant is not None
    assert not lemma3_check(taut_sys, 0, 1, targets=[mutant] + targets[1:])
    assert time.perf_counter() - start < 300


# ---------------------------------------------------------------- 8

PAIRS = [("1,2,4:+1", 1, 2, 4, k, m) for k in range(4) for m in range(2)] + \
        [("0,2:+1", 0, 0, 2, 0, 1), ("0,1,2:+1", 0, 1, 2, 1, 3)]


@pytest.mark.criterion(8, "alienated paths never drift apart")
def test_lemma2_pairs(taut_sys, demo_sys):
    assert len(PAIRS) == 10
    for schedule, lb, ld, m, kb, kd in PAIRS:
        sys_ = demo_sys if lb else taut_sys
        b, d = sys_.omega_f_level(lb)[kb], sys_.omega_f_level(ld)[kd]
        result = lemma2_check(sys_, parse_schedule(schedule), b, d, m)
        assert result, result.detail
        assert result.detail["high"] <= result.detail["low"]


# ---------------------------------------------------------------- 9


@pytest.mark.criterion(9, "relaxed fanout builder invariants")
def test_fanout_invariants(demo_sys):
    S = parse_schedule("3:+1")
    state = fanout_build(demo_sys, S, S, 5)
    checks = fanout_checks(state)
    for key in ("lemma5_valid", "lemma5_adjacency", "lemma6", "corollary1"):
        assert checks[key]["status"] == PASS, (key, checks[key])
    assert len(checks["lemma6"]["levels"]) == 2
    sizes = checks["corollary1"]["sizes"]
    levels = sorted(sizes)
    assert all(sizes[a] < sizes[b] for a, b in zip(levels, levels[1:]))
    # the theorem-scale schedule conditions are not met by a finite prefix
    assert any(c["status"] != PASS for c in checks["schedule_conditions"].values())


# ---------------------------------------------------------------- 10


@pytest.mark.criterion(10, "shift window structure")
def test_shift_example():
    start = time.perf_counter()
    for n in (1, 2, 3):
        for y in range(1 << 2 * n):
            assert tau(sigma(y, n), n) == shift(y, n)
        K = build_shift_structure(n)
        assert all(len(b) <= 2 for j in range(K.num_agents) for b in K.blocks(j))
        fix = refine(K)[-1]
        theories = theory_level(K, len(refine(K)) - 1)
        for s in range(K.num_points):
            for t in range(s):
                assert (fix[s] == fix[t]) == (theories[s] is theories[t])
        assert theory_separation_profile(K, 3).matches_refinement
        assert len(cells(K)) >= 1
    assert time.perf_counter() - start < 10


# ---------------------------------------------------------------- 11

CLI_RUNS = {
    "parse": ["parse", "-f", "E p0 -> K1 !p0"],
    "eval": ["eval", "-f", DEMO],
    "refine": ["refine", "--model", "{model}"],
    "omega": ["omega", "--level", "1"],
    "classify": ["classify", "-f", DEMO],
    "extend": ["extend", "-f", DEMO, "--level", "1", "--atom", "2"],
    "alienate": ["alienate", "-f", DEMO, "--schedule", "1,3:+1", "--target", "4"],
    "separate": ["separate", "-f", "p0 | !p0", "--S", "0:+1", "--T", "0,3:+gap"],
    "fanout": ["fanout", "-f", DEMO, "--schedule", "3:+1", "--T", "3,5:+1", "--cap", "4"],
    "shift": ["shift", "--n", "2", "--structure"],
    "tautology": ["tautology", "-f", "K0 p0 -> p0"],
}


@pytest.mark.criterion(11, "CLI output is byte-identical across runs")
@pytest.mark.parametrize("command", sorted(CLI_RUNS))
def test_cli_determinism(command, tmp_path):
    from kripkecells.cli import COMMANDS
    from kripkecells.kripke import to_json
    import json

    assert set(CLI_RUNS) == set(COMMANDS)
    model = tmp_path / "model.json"
    K = KripkeStructure.from_blocks(1, [1, 1, 1, 0], [[[0, 1], [2, 3]], [[0], [1, 2], [3]]])
    model.write_text(json.dumps(to_json(K)))
    argv = [a.format(model=model) for a in CLI_RUNS[command]]
    outputs = []
    for seed in ("1", "2"):
        env = dict(os.environ, PYTHONHASHSEED=seed)
        p = subprocess.run([sys.executable, "-m", "kripkecells.cli", *argv],
                           capture_output=True, env=env, check=False)
        assert p.returncode == 0, p.stderr
        outputs.append(p.stdout)
    assert outputs[0] == outputs[1]

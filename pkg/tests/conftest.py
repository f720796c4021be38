import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from kripkecells.commonknowledge import CkSystem
from kripkecells.formula import And, Know, Not, Prop, Workspace, parse, top
from kripkecells.kripke import KripkeStructure

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DEMO = "K0 p0 | K0 !p0"


def formulas(num_props=1, num_agents=2, max_depth=2, max_size=12):
    """Random formulas with knowledge depth at most ``max_depth``."""

    def build(d):
        leaf = st.integers(0, num_props - 1).map(Prop)
        if d == 0:
            return st.recursive(leaf, lambda s: st.one_of(
                s.map(Not), st.tuples(s, s).map(lambda t: And(*t))), max_leaves=max_size)
        lower = build(d - 1)
        know = st.tuples(st.integers(0, num_agents - 1), lower).map(lambda t: Know(*t))
        base = st.one_of(lower, know)
        return st.recursive(base, lambda s: st.one_of(
            s.map(Not), st.tuples(s, s).map(lambda t: And(*t))), max_leaves=max_size)

    return build(max_depth)


@st.composite
def structures(draw, num_props=1, num_agents=2, max_points=6):
    n = draw(st.integers(1, max_points))
    val = tuple(draw(st.lists(st.integers(0, (1 << num_props) - 1), min_size=n, max_size=n)))
    parts = tuple(tuple(draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n)))
                  for _ in range(num_agents))
    return KripkeStructure(num_props, val, parts)


@pytest.fixture(scope="session")
def space12():
    return Workspace(1, 2)


@pytest.fixture(scope="session")
def taut_sys(space12):
    return CkSystem(space12, top())


@pytest.fixture(scope="session")
def demo_sys(space12):
    return CkSystem(space12, parse(DEMO, space12))


@pytest.fixture(scope="session")
def both_sys(space12):
    return CkSystem(space12, parse("K0 p0 & K1 p0", space12))


@pytest.fixture
def chain4():
    """Points 0-1 share an agent-0 block, 1-2 an agent-1 block, 2-3 an agent-0 block."""
    return KripkeStructure.from_blocks(1, [1, 1, 1, 0], [[[0, 1], [2, 3]], [[0], [1, 2], [3]]])


# ---------------------------------------------------------------- acceptance report

_criteria: dict = {}


def pytest_runtest_logreport(report):
    item_marks = getattr(report, "criterion", None)
    if item_marks is None:
        return
    number, label = item_marks
    entry = _criteria.setdefault(number, [label, True, 0])
    if report.failed or (report.when == "call" and report.outcome != "passed"):
        entry[1] = False
    if report.when == "call":
        entry[2] += 1


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        label, ok, runs = _criteria[number]
        status = "PASS" if ok and runs else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {status}  {label}")

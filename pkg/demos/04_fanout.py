"""Build a short prefix of a growing cell and print what each check found (about 10 s)."""

from kripkecells.cellbuilder import fanout_build, fanout_checks, parse_schedule
from kripkecells.commonknowledge import CkSystem
from kripkecells.formula import Workspace, parse

space = Workspace(1, 2)
system = CkSystem(space, parse("K0 p0 | K0 !p0", space))
S = parse_schedule("3:+1")
state = fanout_build(system, S, S, 5)

for i in sorted(state.A):
    print(f"level {i}: |A| = {len(state.A[i])}, |B| = {len(state.B[i])}")
checks = fanout_checks(state)
conditions = checks.pop("schedule_conditions")
for name, result in checks.items():
    print(f"{name:>20}: {result['status']}")
# a finite prefix cannot meet the conditions an infinite schedule needs
for key, result in sorted(conditions.items()):
    print(f"  schedule condition {key}: {result['status']}")

"""Follow two schedules from the same atom and bound how far apart they end up."""

from kripkecells.cellbuilder import alienated_extend, parse_schedule, separation_witness
from kripkecells.commonknowledge import CkSystem
from kripkecells.formula import Workspace, parse

space = Workspace(1, 2)
system = CkSystem(space, parse("K0 p0 | K0 !p0", space))
w = system.omega_f_level(1)[0]

S, T = parse_schedule("1:+1"), parse_schedule("1,4:+1")
for schedule in (S, T):
    path = alienated_extend(system, schedule, w, 4)
    print(f"{schedule}: levels {path.levels}")

for horizon in (3, 4, 5):
    report = separation_witness(system, S, T, w, horizon)
    print(f"horizon {horizon}: split at level {report.level}, distance >= {report.bound}")

"""The two-reflection model on circular windows: cells, orbits and theory separation."""

from kripkecells.kripke import cells
from kripkecells.shiftgen import build_shift_structure, orbits, theory_separation_profile

for n in range(1, 5):
    for with_pi in (False, True):
        K = build_shift_structure(n, with_pi)
        profile = theory_separation_profile(K, 4)
        print(f"n={n} pi={with_pi!s:5} points={K.num_points:4} cells={len(cells(K)):3} "
              f"orbits={len(orbits(n, with_pi)):3} fibers={profile.fibers} "
              f"separated at={profile.separating_depth}")

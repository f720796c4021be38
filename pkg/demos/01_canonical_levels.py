"""Count and inspect the first canonical levels for one proposition and two agents."""

from kripkecells.canonical import count_omega, omega_connected, omega_structure
from kripkecells.formula import Workspace
from kripkecells.kripke import diameter

space = Workspace(1, 2)
for i in range(4):
    print(f"level {i}: {count_omega(space, i)} atoms")

for i in range(3):
    K, atoms = omega_structure(space, i)
    sizes = sorted({len(b) for j in range(2) for b in K.blocks(j)})
    print(f"level {i}: connected={omega_connected(space, i)} diameter={diameter(K)} block sizes={sizes}")

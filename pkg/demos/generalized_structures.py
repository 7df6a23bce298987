"""Generalized almost (para)complex structures from a metric and from a frame.

Run: python3 demos/generalized_structures.py
"""

import numpy as np

from genbundle.manifold import GenVector, ManifoldPoint, euclidean_metric
from genbundle.structures import (
    eigen_ranks,
    g0_symmetry_residual,
    mobius_frame,
    structure_from_frame,
    structure_from_metric,
)

frame = mobius_frame()
atlas, g = frame.atlas, frame.metric
rng = np.random.default_rng(0)
x = rng.uniform([0.01, -0.99], [0.99, 0.99], size=(500, 2))

J = structure_from_metric(g, "complex", atlas)
F = structure_from_metric(g, "paracomplex", atlas)

p = ManifoldPoint("U", [0.3, 0.0])
print("J(d/du) =", J(GenVector(p, [1, 0], [0, 0])).block())
print("J(du)   =", J(GenVector(p, [0, 0], [1, 0])).block())

MJ, MF = J.local_matrix("U", x), F.local_matrix("U", x)
print("max |J^2 + I| =", np.abs(MJ @ MJ + np.eye(4)).max())
print("max |F^2 - I| =", np.abs(MF @ MF - np.eye(4)).max())
print("+1 eigenspace ranks of F:", sorted(set(eigen_ranks(F, "U", x, 1).tolist())))

# Both are symmetric for the canonical pairing, and not skew.
for K in (J, F):
    sym, skew = g0_symmetry_residual(K, "U", x, rng)
    print(f"{K.name}: symmetric residual {sym:.1e}, skew residual {skew:.2f}")

# The same J comes out of the frame rule w1 -> w2, w3 -> w4.
Jf = structure_from_frame(frame, "complex")
print("\n|J_frame - J_metric| =", np.abs(Jf.local_matrix("U", x) - MJ).max())

# F does not: the frame rule swaps w3 and w4, while the metric F sends
# w3 = Y - flat Z to -Z + flat Y. They differ by 2Z.
Ff = structure_from_frame(frame, "paracomplex")
print("|F_frame - F_metric| =", np.abs(Ff.local_matrix("U", x) - MF).max())

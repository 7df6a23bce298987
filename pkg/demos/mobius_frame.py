"""A global frame of TM + T*M on the Möbius strip, checked on a grid.

Run: python3 demos/mobius_frame.py
"""

import numpy as np

from genbundle.manifold import builtin_atlas, jacobian, orientability_probe, transition_apply
from genbundle.structures import mobius_fields, mobius_frame
from genbundle.verify import gram_dets, overlap_consistency, verify_frame

atlas = builtin_atlas("mobius")

# Two charts, U = (0, 1) x (-1, 1) and V = (-1/2, 1/2) x (-1, 1).
# On the right half of U the transition flips v.
print("U -> V at (0.25, 0.5):", transition_apply(atlas, "U", "V", [0.25, 0.5]))
print("U -> V at (0.75, 0.5):", transition_apply(atlas, "U", "V", [0.75, 0.5]))
print("Jacobian there:\n", jacobian(atlas, "U", "V", [0.75, 0.5]))
print("orientability:", orientability_probe(atlas))

# The tangent bundle has no frame, but X, Y = cos(pi u) d/dv and
# Z = sin(pi u) d/dv are globally defined. The sign flip of d/dv is
# absorbed by cos(pi (u - 1)) = -cos(pi u).
for s in mobius_fields(atlas):
    print(f"overlap residual of {s.name}: {overlap_consistency(s, atlas):.2e}")

frame = mobius_frame()
u = np.linspace(0.01, 0.99, 5)
x = np.column_stack([u, np.zeros_like(u)])
W = frame.ambient_matrix("U", x)
print("\nrows (tangent | covector) of w3, w4 along v = 0:")
for ui, w in zip(u, W):
    print(f"  u={ui:.2f}  w3={np.round(w[2], 3)}  w4={np.round(w[3], 3)}")

det, rcond = gram_dets(frame, "U", x)
print("Gram determinants:", det)

report = verify_frame(frame, points_per_chart=10_000, extra_sections=mobius_fields(atlas))
print(f"\n{report.samples} points: min det {report.min_gram_det:.12f}, "
      f"max overlap {report.max_overlap_residual:.1e}, pass={report.passed}")

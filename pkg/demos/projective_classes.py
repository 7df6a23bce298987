"""Stiefel-Whitney classes of RP^n and the TM + T*M obstruction.

Run: python3 demos/projective_classes.py
"""

from genbundle.z2classes import (
    allard_min_copies,
    classify_table,
    sw_gen_tangent_rpn,
    sw_tangent_rpn,
)

# w(T RP^n) = (1 + a)^(n+1) in Z_2[a]/(a^(n+1)).
for n in range(1, 9):
    print(f"RP^{n}: w(T) = {sw_tangent_rpn(n)}")

# The cotangent bundle has the same total class, so w(TT) = w(T)^2.
# Squaring over Z_2 keeps only even powers.
print()
for n in (2, 4, 5, 6, 15):
    w = sw_gen_tangent_rpn(n)
    print(f"RP^{n}: w(TT) = {w}   (hex {w.to_hex()})")

# The obstruction vanishes exactly when n + 1 is a power of two.
silent = [row.n for row in classify_table(128) if row.obstruction_trivial]
print("\nobstruction silent for n in", silent)

# Vanishing classes are necessary, not sufficient: RP^15 has w(T) = 1
# but its tangent bundle is not trivial. The table does not pretend otherwise.
row = classify_table(15)[-1]
print(f"RP^15: w(T) = {row.tangent_sw}, parallelizable: {row.parallelizable_known}")

# Spheres: T S^n + trivial line is trivial, and the copy-count bound
# k + k/(m - k) with k = 1, m = n + 1 never exceeds 2.
print("\ncopies needed for S^n, n = 1..8:", [allard_min_copies(1, n + 1) for n in range(1, 9)])

"""Frames on S^1 and S^3 from complex and quaternion multiplication.

Run: python3 demos/sphere_frames.py
"""

import numpy as np

from genbundle.structures import sphere_frame
from genbundle.verify import sphere_samples, verify_frame

s3 = sphere_frame(3)
W = s3.ambient_matrix("S3", [[1.0, 0.0, 0.0, 0.0]])[0]
print("at p = 1 the fields ip, jp, kp are")
print(W[::2, :4])

p = sphere_samples(3, 10_000, seed=1)
W = s3.ambient_matrix("S3", p)
gram = W @ np.transpose(W, (0, 2, 1))
print("max |Gram - I| over 10^4 points:", np.abs(gram - np.eye(6)).max())

for n in (1, 3):
    r = verify_frame(sphere_frame(n), points_per_chart=2000,
                     structures=["metric:J", "metric:F", "frame:J", "frame:F"])
    agree = max(r.structures[s]["agreement"] for s in ("frame:J", "frame:F"))
    print(f"S^{n}: min det {r.min_gram_det:.6f}, frame vs metric {agree:.1e}, pass={r.passed}")

# Only n = 1 and 3 carry an explicit frame here.
try:
    sphere_frame(2)
except ValueError as exc:
    print("S^2:", exc)

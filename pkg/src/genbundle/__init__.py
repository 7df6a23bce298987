"""Triviality of the generalized tangent bundle TM + T*M, checked by computation.

Submodules:

- ``z2classes``: Stiefel-Whitney classes of real projective spaces mod 2.
- ``manifold``: atlases, transitions, metrics, sections, musical maps.
- ``structures``: explicit frames and the J / F endomorphisms they induce.
- ``verify``: sampling harness and JSON reports.
- ``cli``: the ``genbundle`` command.
"""

from .z2classes import (
    Z2Poly,
    allard_min_copies,
    binom_mod2,
    classify_table,
    obstruction_trivial,
    poly_mul,
    poly_pow,
    sw_gen_tangent_rpn,
    sw_tangent_rpn,
)
from .manifold import (
    Atlas,
    Chart,
    GenVector,
    ManifoldPoint,
    Metric,
    Section,
    builtin_atlas,
    canonical_pairing,
    flat,
    sharp,
    transition_apply,
    transport,
)
from .structures import (
    SectionFrame,
    GenEndomorphism,
    klein_frame,
    mobius_fields,
    mobius_frame,
    parallelizable_frame,
    sphere_frame,
    structure_from_frame,
    structure_from_metric,
)
from .verify import VerifyReport, run_suite, verify_frame

__version__ = "0.1.0"

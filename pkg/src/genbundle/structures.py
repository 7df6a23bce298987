"""Explicit trivializing frames of TM + T*M and the structures they induce.

Pointwise linear algebra happens in a *local basis* of T_pM + T*_pM with
2n components: the chart coordinate basis (dx^i dual to d/dx^i) for the
chart backend, and an orthonormal basis of the tangent plane p^perp for
the embedded sphere (covectors identified with ambient vectors by the
round metric). The canonical pairing has the same matrix in both cases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .manifold import (
    Atlas,
    DomainError,
    GenVector,
    ManifoldPoint,
    Metric,
    Section,
    UnsupportedError,
    builtin_atlas,
    combine_sections,
    default_metric,
    flat_section,
    metric_compatibility_check,
    round_metric,
    vector_field,
)

__all__ = [
    "SingularFrameError",
    "SectionFrame",
    "GenEndomorphism",
    "tangent_basis",
    "parallelizable_frame",
    "mobius_fields",
    "klein_fields",
    "mobius_frame",
    "klein_frame",
    "circle_frame",
    "torus_frame",
    "sphere_frame",
    "quaternion_fields",
    "structure_from_frame",
    "structure_from_metric",
    "eigen_rank",
    "eigen_ranks",
    "g0_matrix",
    "g0_symmetry_residual",
    "frame_vs_metric_agreement",
    "builtin_frame",
    "FRAME_NAMES",
]

RCOND_MIN = 1e-10


class SingularFrameError(DomainError):
    """The frame is (numerically) not a basis at an evaluation point."""


def tangent_basis(p: np.ndarray) -> np.ndarray:
    """Orthonormal bases of p^perp for unit vectors ``p`` of shape (N, n+1).

    Uses the Householder reflection sending p to -sign(p_0) e_0; its last n
    columns span p^perp. Returns shape (N, n+1, n).
    """
    p = np.atleast_2d(p)
    N, k = p.shape
    s = np.where(p[:, 0] >= 0, 1.0, -1.0)
    v = p.copy()
    v[:, 0] += s
    H = np.eye(k) - 2.0 * np.einsum("ni,nj->nij", v, v) / np.einsum("ni,ni->n", v, v)[:, None, None]
    return H[:, :, 1:]


def _to_local(atlas: Atlas, coords: np.ndarray, X: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Stack tangent/covector components into local block vectors (N, 2n)."""
    if not atlas.embedded:
        return np.concatenate([X, xi], axis=-1)
    B = tangent_basis(coords)
    return np.concatenate([np.einsum("nkj,nk->nj", B, X), np.einsum("nkj,nk->nj", B, xi)], axis=-1)


def _from_local(atlas: Atlas, coords: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = atlas.dim
    a, b = v[..., :n], v[..., n:]
    if not atlas.embedded:
        return a, b
    B = tangent_basis(coords)
    return np.einsum("nkj,nj->nk", B, a), np.einsum("nkj,nj->nk", B, b)


def _local_metric(atlas: Atlas, g: Metric, chart: str, coords: np.ndarray) -> np.ndarray:
    G = g.matrix(chart, coords)
    if not atlas.embedded:
        return G
    B = tangent_basis(coords)
    return np.transpose(B, (0, 2, 1)) @ G @ B


@dataclass(frozen=True)
class SectionFrame:
    """An ordered list of 2n global sections of TM + T*M."""

    name: str
    atlas: Atlas
    sections: tuple[Section, ...]
    provenance: str
    metric: Metric | None = None

    def __post_init__(self):
        if len(self.sections) != 2 * self.atlas.dim:
            raise ValueError(
                f"frame {self.name}: {len(self.sections)} sections for a {self.atlas.dim}-dimensional atlas"
            )

    @property
    def rank(self) -> int:
        return len(self.sections)

    def ambient_matrix(self, chart: str, coords) -> np.ndarray:
        """Rows are the sections' (tangent | covector) components, shape (N, 2n, 2k)."""
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        rows = [np.concatenate(s.evaluate(chart, x), axis=1) for s in self.sections]
        return np.stack(rows, axis=1)

    def local_matrix(self, chart: str, coords) -> np.ndarray:
        """Rows are the sections in the local basis, shape (N, 2n, 2n)."""
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        rows = [_to_local(self.atlas, x, *s.evaluate(chart, x)) for s in self.sections]
        return np.stack(rows, axis=1)


@dataclass(frozen=True)
class GenEndomorphism:
    """A pointwise linear map K of TM + T*M.

    ``matrix_fn(chart, coords)`` returns (N, 2n, 2n) matrices acting on
    local block column vectors.
    """

    name: str
    kind: str
    source: str
    atlas: Atlas
    matrix_fn: Callable[[str, np.ndarray], np.ndarray] = field(repr=False)

    def __post_init__(self):
        if self.kind not in ("complex", "paracomplex"):
            raise ValueError(f"unknown structure kind {self.kind!r}")

    def local_matrix(self, chart: str, coords) -> np.ndarray:
        return self.matrix_fn(chart, np.atleast_2d(np.asarray(coords, dtype=float)))

    def apply_batch(self, chart: str, coords, tangent, covector):
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        v = _to_local(self.atlas, x, np.atleast_2d(tangent), np.atleast_2d(covector))
        w = np.einsum("nij,nj->ni", self.local_matrix(chart, x), v)
        return _from_local(self.atlas, x, w)

    def apply(self, e: GenVector) -> GenVector:
        X, xi = self.apply_batch(e.base.chart, e.base.coords, e.tangent, e.covector)
        return GenVector(e.base, X[0], xi[0])

    def __call__(self, e: GenVector) -> GenVector:
        return self.apply(e)


# ---------------------------------------------------------------- frames


def parallelizable_frame(atlas: Atlas, fields: Sequence[Section], g: Metric | None = None,
                         name: str = "parallel", provenance: str = "parallelizable") -> SectionFrame:
    """X^1, flat X^1, ..., X^n, flat X^n from n pointwise independent vector fields."""
    if len(fields) != atlas.dim:
        raise ValueError(f"need {atlas.dim} vector fields, got {len(fields)}")
    g = g or default_metric(atlas)
    sections = []
    for X in fields:
        sections += [X, flat_section(X, g, f"flat({X.name})")]
    return SectionFrame(name, atlas, tuple(sections), provenance, g)


def _twisted_fields(atlas: Atlas) -> tuple[Section, Section, Section]:
    # d/du, cos(pi u) d/dv, sin(pi u) d/dv; the same formula in every chart.
    def X(x):
        out = np.zeros_like(x)
        out[:, 0] = 1.0
        return out

    def Y(x):
        out = np.zeros_like(x)
        out[:, 1] = np.cos(np.pi * x[:, 0])
        return out

    def Z(x):
        out = np.zeros_like(x)
        out[:, 1] = np.sin(np.pi * x[:, 0])
        return out

    charts = atlas.chart_names
    return (
        vector_field("X", {c: X for c in charts}),
        vector_field("Y", {c: Y for c in charts}),
        vector_field("Z", {c: Z for c in charts}),
    )


def mobius_fields(atlas: Atlas | None = None) -> tuple[Section, Section, Section]:
    """The fields X = d/du, Y = cos(pi u) d/dv, Z = sin(pi u) d/dv on the Möbius strip.

    In chart V the same expressions are used in V's coordinates; agreement on
    the twisted overlap relies on cos(pi(u - 1)) = -cos(pi u), which matches
    the sign flip of d/dv there.
    """
    return _twisted_fields(atlas or builtin_atlas("mobius"))


def klein_fields(atlas: Atlas | None = None) -> tuple[Section, Section, Section]:
    """Same fields as on the Möbius strip, with d/dv replaced by d/dtheta."""
    return _twisted_fields(atlas or builtin_atlas("klein"))


def _twisted_frame(atlas: Atlas, fields, g: Metric | None, name: str, provenance: str) -> SectionFrame:
    g = g or default_metric(atlas)
    residual = metric_compatibility_check(atlas, g)
    if residual > 1e-10:
        raise DomainError(f"metric {g.name} is not well defined on {atlas.name} (residual {residual:.3g})")
    X, Y, Z = fields
    fX, fY, fZ = (flat_section(s, g) for s in (X, Y, Z))
    sections = (
        Section("w1", X.components),
        Section("w2", fX.components),
        combine_sections("w3", [(1.0, Y), (-1.0, fZ)]),
        combine_sections("w4", [(1.0, Z), (1.0, fY)]),
    )
    return SectionFrame(name, atlas, sections, provenance, g)


def mobius_frame(g: Metric | None = None, atlas: Atlas | None = None) -> SectionFrame:
    """(w1, w2, w3, w4) = (X, flat X, Y - flat Z, Z + flat Y) on the Möbius strip."""
    atlas = atlas or builtin_atlas("mobius")
    return _twisted_frame(atlas, mobius_fields(atlas), g, "mobius:eq4", "mobius")


def klein_frame(g: Metric | None = None, atlas: Atlas | None = None) -> SectionFrame:
    """The Möbius construction transplanted to the Klein bottle atlas.

    The fields depend only on u, so they descend through the theta gluing.
    """
    atlas = atlas or builtin_atlas("klein")
    return _twisted_frame(atlas, klein_fields(atlas), g, "klein:analogous", "klein")


def circle_frame(g: Metric | None = None) -> SectionFrame:
    atlas = builtin_atlas("circle")
    d_theta = vector_field("d/dtheta", {c: (lambda x: np.ones_like(x)) for c in atlas.chart_names})
    return parallelizable_frame(atlas, [d_theta], g, name="circle:parallel")


def torus_frame(g: Metric | None = None) -> SectionFrame:
    atlas = builtin_atlas("torus")
    du = vector_field("d/du", {c: (lambda x: np.column_stack([np.ones(len(x)), np.zeros(len(x))])) for c in atlas.chart_names})
    dv = vector_field("d/dv", {c: (lambda x: np.column_stack([np.zeros(len(x)), np.ones(len(x))])) for c in atlas.chart_names})
    return parallelizable_frame(atlas, [du, dv], g, name="torus:parallel")


def _quat_left(unit: int):
    """Left multiplication p -> q p for q in {i, j, k}, Hamilton's table, p = (a, b, c, d)."""

    def fn(p):
        a, b, c, d = p[:, 0], p[:, 1], p[:, 2], p[:, 3]
        if unit == 1:
            return np.column_stack([-b, a, -d, c])
        if unit == 2:
            return np.column_stack([-c, d, a, -b])
        return np.column_stack([-d, -c, b, a])

    return fn


def quaternion_fields(atlas: Atlas | None = None) -> list[Section]:
    atlas = atlas or builtin_atlas("sphere(3)")
    chart = atlas.chart_names[0]
    return [vector_field(f"{q}p", {chart: _quat_left(i)}) for i, q in enumerate("ijk", start=1)]


def sphere_frame(n: int) -> SectionFrame:
    """Explicit frames for S^1 (ip in C) and S^3 (ip, jp, kp in H) with round-metric flats."""
    if n not in (1, 3):
        raise UnsupportedError(f"no explicit frame for S^{n}; only S^1 and S^3 are built in")
    atlas = builtin_atlas(f"sphere({n})")
    if n == 1:
        chart = atlas.chart_names[0]
        fields = [vector_field("ip", {chart: lambda p: np.column_stack([-p[:, 1], p[:, 0]])})]
        return parallelizable_frame(atlas, fields, round_metric(atlas), name="sphere1:parallel")
    return parallelizable_frame(atlas, quaternion_fields(atlas), round_metric(atlas),
                                name="sphere3:quaternion", provenance="sphere-explicit")


FRAME_NAMES = {
    "mobius:eq4": mobius_frame,
    "klein:analogous": klein_frame,
    "circle:parallel": circle_frame,
    "torus:parallel": torus_frame,
    "sphere1:parallel": lambda: sphere_frame(1),
    "sphere3:quaternion": lambda: sphere_frame(3),
}


def builtin_frame(name: str) -> SectionFrame:
    try:
        return FRAME_NAMES[name]()
    except KeyError:
        raise ValueError(f"unknown frame {name!r}; known: {', '.join(FRAME_NAMES)}") from None


# ---------------------------------------------------------------- structures


def _rule(kind: str, n2: int) -> np.ndarray:
    R = np.zeros((n2, n2))
    for i in range(0, n2, 2):
        R[i, i + 1] = 1.0
        R[i + 1, i] = -1.0 if kind == "complex" else 1.0
    return R


def structure_from_frame(frame: SectionFrame, kind: str) -> GenEndomorphism:
    """K(w^{2i-1}) = w^{2i} and K(w^{2i}) = -w^{2i-1} (complex) or +w^{2i-1} (paracomplex).

    At each point the input's coefficients in the frame are found by a
    dense LU solve; a reciprocal condition number below 1e-10 raises
    ``SingularFrameError``.
    """
    R = _rule(kind, frame.rank)

    def matrix_fn(chart, x):
        W = frame.local_matrix(chart, x)
        s = np.linalg.svd(W, compute_uv=False)
        rcond = s[:, -1] / s[:, 0]
        if np.any(~(rcond >= RCOND_MIN)):
            i = int(np.argmin(np.nan_to_num(rcond, nan=-1.0)))
            raise SingularFrameError(
                f"frame {frame.name} is singular at {chart} {tuple(x[i])} (rcond {rcond[i]:.3g})"
            )
        Wt = np.transpose(W, (0, 2, 1))
        # K = W^T R^T W^{-T}
        return np.transpose(np.linalg.solve(W, (Wt @ R.T).transpose(0, 2, 1)), (0, 2, 1))

    label = "J" if kind == "complex" else "F"
    return GenEndomorphism(f"frame:{label}", kind, "frame", frame.atlas, matrix_fn)


def structure_from_metric(g: Metric, kind: str, atlas: Atlas) -> GenEndomorphism:
    """J(X + xi) = -sharp(xi) + flat(X), or F(X + xi) = sharp(xi) + flat(X)."""
    sign = -1.0 if kind == "complex" else 1.0
    n = atlas.dim

    def matrix_fn(chart, x):
        G = _local_metric(atlas, g, chart, x)
        M = np.zeros((len(x), 2 * n, 2 * n))
        M[:, :n, n:] = sign * np.linalg.inv(G)
        M[:, n:, :n] = G
        return M

    label = "J" if kind == "complex" else "F"
    return GenEndomorphism(f"metric:{label}", kind, "metric", atlas, matrix_fn)


def eigen_ranks(K: GenEndomorphism, chart: str, coords, eigenvalue: int, tol: float = 1e-8) -> np.ndarray:
    """Eigenspace dimensions at a batch of points, from the numerical rank of K - lambda I."""
    if K.kind != "paracomplex":
        raise UnsupportedError(f"{K.name} is {K.kind}; eigenspaces are real only for paracomplex structures")
    if eigenvalue not in (1, -1):
        raise ValueError("eigenvalue must be +1 or -1")
    M = K.local_matrix(chart, coords)
    n2 = M.shape[-1]
    s = np.linalg.svd(M - eigenvalue * np.eye(n2), compute_uv=False)
    rank = np.sum(s > tol * np.maximum(1.0, s[:, :1]), axis=1)
    return n2 - rank


def eigen_rank(K: GenEndomorphism, p: ManifoldPoint, eigenvalue: int) -> int:
    return int(eigen_ranks(K, p.chart, p.coords, eigenvalue)[0])


def g0_matrix(n: int) -> np.ndarray:
    """Matrix of the canonical pairing on local block vectors."""
    P = np.zeros((2 * n, 2 * n))
    P[:n, n:] = 0.5 * np.eye(n)
    P[n:, :n] = 0.5 * np.eye(n)
    return P


def g0_symmetry_residual(K: GenEndomorphism, chart: str, coords, rng: np.random.Generator,
                         n_inputs: int = 10, matrices: np.ndarray | None = None) -> tuple[float, float]:
    """Largest |G0(Ke, f) - G0(e, Kf)| and |G0(Ke, f) + G0(e, Kf)| over random e, f.

    The first is zero for structures symmetric under the pairing; the
    second would be zero for skew (strong) structures. ``matrices`` may
    carry K's local matrices at ``coords`` when already computed.
    """
    M = K.local_matrix(chart, coords) if matrices is None else matrices
    N, n2, _ = M.shape
    P = g0_matrix(n2 // 2)
    e = rng.standard_normal((N, n_inputs, n2))
    f = rng.standard_normal((N, n_inputs, n2))
    Mt = np.transpose(M, (0, 2, 1))
    Ke = e @ Mt
    Kf = f @ Mt
    a = np.sum((Ke @ P) * f, axis=-1)
    b = np.sum((e @ P) * Kf, axis=-1)
    return float(np.max(np.abs(a - b))), float(np.max(np.abs(a + b)))


def frame_vs_metric_agreement(frame: SectionFrame, g: Metric, chart: str, coords,
                              rng: np.random.Generator, n_inputs: int = 10) -> dict[str, float]:
    """Largest ||K_frame(e) - K_metric(e)|| over random e, separately for J and F.

    J agrees for frames of the form (X^i, flat X^i) and for the Möbius
    frame. F agrees only for the former: on the Möbius frame the frame rule
    sends Y - flat Z to Z + flat Y while the metric F gives -Z + flat Y.
    """
    x = np.atleast_2d(np.asarray(coords, dtype=float))
    n2 = 2 * frame.atlas.dim
    e = rng.standard_normal((len(x), n_inputs, n2))
    out = {}
    for kind, label in (("complex", "J"), ("paracomplex", "F")):
        A = structure_from_frame(frame, kind).local_matrix(chart, x)
        B = structure_from_metric(g, kind, frame.atlas).local_matrix(chart, x)
        diff = np.einsum("nij,nrj->nri", A - B, e)
        out[label] = float(np.max(np.linalg.norm(diff, axis=-1)))
    return out

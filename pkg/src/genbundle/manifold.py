"""Chart-based and embedded manifolds with tangent/cotangent calculus.

Everything that touches coordinates works on batches: ``coords`` has shape
``(N, k)`` where ``k`` is the chart dimension (chart backend) or the ambient
dimension n + 1 (embedded sphere backend). Single-point wrappers
(``ManifoldPoint``, ``GenVector``) sit on top.

Built-in atlases are quotients of R^d by integer translations, optionally
twisted: shifting the first coordinate by m multiplies the second by (-1)^m.
All their transitions are affine, with constant diagonal Jacobians.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import compile_expr

__all__ = [
    "DomainError",
    "UnsupportedError",
    "Chart",
    "Branch",
    "Atlas",
    "ManifoldPoint",
    "GenVector",
    "Metric",
    "Section",
    "affine_branch",
    "builtin_atlas",
    "single_chart_atlas",
    "transition_apply",
    "jacobian",
    "transport",
    "transport_batch",
    "flat",
    "sharp",
    "canonical_pairing",
    "euclidean_metric",
    "round_metric",
    "default_metric",
    "metric_compatibility_check",
    "orientability_probe",
    "vector_field",
    "constant_section",
    "flat_section",
    "combine_sections",
    "rect_grid",
    "atlas_from_config",
    "metric_from_config",
    "section_from_config",
]

PI = math.pi


class DomainError(ValueError):
    """A point or chart lies outside where an operation is defined."""


class UnsupportedError(ValueError):
    """The operation does not apply to this backend or input."""


@dataclass(frozen=True)
class Chart:
    """Open axis-aligned rectangle ``lower < x < upper`` in R^dim."""

    name: str
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    coord_names: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError(f"chart {self.name}: bounds must be nonempty and of equal length")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError(f"chart {self.name}: empty domain")
        if not self.coord_names:
            names = tuple(f"x{i + 1}" for i in range(len(self.lower)))
            object.__setattr__(self, "coord_names", names)
        elif len(self.coord_names) != len(self.lower):
            raise ValueError(f"chart {self.name}: coord_names length mismatch")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, coords) -> np.ndarray:
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        return np.all((x > np.asarray(self.lower)) & (x < np.asarray(self.upper)), axis=1)


@dataclass(frozen=True)
class Branch:
    """One piece of a transition map, valid on an open rectangle of the source chart.

    ``func`` maps ``(N, d)`` source coordinates to target coordinates and
    ``jac`` returns the ``(N, d, d)`` Jacobian of that map.
    """

    source: str
    target: str
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    jac: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    label: str = ""

    def contains(self, coords) -> np.ndarray:
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        return np.all((x > np.asarray(self.lower)) & (x < np.asarray(self.upper)), axis=1)

    def describe(self) -> str:
        rect = " x ".join(f"({lo:g}, {hi:g})" for lo, hi in zip(self.lower, self.upper))
        return self.label or f"{self.source}->{self.target} on {rect}"


def affine_branch(source, target, lower, upper, matrix, offset, label="") -> Branch:
    """Branch ``x -> A x + b`` with constant Jacobian ``A``."""
    A = np.asarray(matrix, dtype=float)
    b = np.asarray(offset, dtype=float)

    def func(x):
        return np.atleast_2d(x) @ A.T + b

    def jac(x):
        n = np.atleast_2d(x).shape[0]
        return np.broadcast_to(A, (n,) + A.shape).copy()

    return Branch(source, target, tuple(map(float, lower)), tuple(map(float, upper)), func, jac, label)


@dataclass(frozen=True)
class Atlas:
    """Named charts plus transition branches, or an embedded unit sphere.

    For the embedded backend there is a single pseudo-chart whose
    coordinates are unit vectors in R^(dim+1); tangent and covector
    components are ambient vectors orthogonal to the base point.
    """

    name: str
    charts: tuple[Chart, ...]
    branches: tuple[Branch, ...] = ()
    backend: str = "chart"
    manifold_dim: int | None = None

    def __post_init__(self):
        if self.backend not in ("chart", "embedded"):
            raise ValueError(f"unknown backend {self.backend!r}")
        names = [c.name for c in self.charts]
        if len(set(names)) != len(names):
            raise ValueError("duplicate chart names")
        for br in self.branches:
            if br.source not in names or br.target not in names:
                raise ValueError(f"branch {br.describe()} references unknown chart")

    @property
    def dim(self) -> int:
        if self.manifold_dim is not None:
            return self.manifold_dim
        return self.charts[0].dim

    @property
    def embedded(self) -> bool:
        return self.backend == "embedded"

    @property
    def chart_names(self) -> list[str]:
        return [c.name for c in self.charts]

    def chart(self, name: str) -> Chart:
        for c in self.charts:
            if c.name == name:
                return c
        raise DomainError(f"atlas {self.name} has no chart {name!r}")

    def branches_between(self, source: str, target: str) -> list[Branch]:
        return [b for b in self.branches if b.source == source and b.target == target]

    def contains(self, chart: str, coords) -> np.ndarray:
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        if self.embedded:
            return np.abs(np.linalg.norm(x, axis=1) - 1.0) <= 1e-12
        return self.chart(chart).contains(x)

    def find_branch(self, source: str, target: str, coords) -> Branch:
        x = np.asarray(coords, dtype=float).reshape(1, -1)
        candidates = self.branches_between(source, target)
        for br in candidates:
            if br.contains(x)[0]:
                return br
        listed = "; ".join(b.describe() for b in candidates) or "none declared"
        raise DomainError(
            f"point {tuple(float(v) for v in x[0])} is outside the overlap {source}->{target} (branches: {listed})"
        )


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    chart: str
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.asarray(self.coords, dtype=float).reshape(-1))


@dataclass(frozen=True, eq=False)
class GenVector:
    """X + xi at a point: tangent and covector components in the chart basis."""

    base: ManifoldPoint
    tangent: np.ndarray
    covector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tangent", np.asarray(self.tangent, dtype=float).reshape(-1))
        object.__setattr__(self, "covector", np.asarray(self.covector, dtype=float).reshape(-1))
        if self.tangent.shape != self.covector.shape:
            raise ValueError("tangent and covector parts differ in length")

    def block(self) -> np.ndarray:
        """Concatenated (tangent | covector) vector."""
        return np.concatenate([self.tangent, self.covector])


# ---------------------------------------------------------------- atlases


def _periodic_pieces(lo, hi, c, d, sign, period):
    """Pieces of (lo, hi) on which ``sign*t + period*k`` lands in (c, d)."""
    out = []
    for k in range(-4, 5):
        if sign > 0:
            a, b = c - period * k, d - period * k
        else:
            a, b = period * k - d, period * k - c
        a, b = max(a, lo), min(b, hi)
        if a < b:
            out.append((a, b, k))
    return out


def _quotient_atlas(name, coord_names, charts, periods, twist) -> Atlas:
    """Atlas of R^d modulo the lattice generated by ``periods``.

    ``periods[i]`` is ``None`` for an interval coordinate. With ``twist`` a
    shift of coordinate 0 by m periods multiplies coordinate 1 by (-1)^m.
    """
    chart_objs = tuple(Chart(cn, tuple(lo), tuple(hi), tuple(coord_names)) for cn, (lo, hi) in charts.items())
    d = len(coord_names)
    branches = []
    for src, dst in itertools.permutations(chart_objs, 2):
        for u_lo, u_hi, m in _periodic_pieces(src.lower[0], src.upper[0], dst.lower[0], dst.upper[0], 1, periods[0]):
            sign1 = -1 if (twist and m % 2) else 1
            # per-axis lists of (lo, hi, sign, shift)
            axes = [[(u_lo, u_hi, 1, periods[0] * m)]]
            for i in range(1, d):
                s = sign1 if i == 1 else 1
                if periods[i] is None:
                    a, b = (dst.lower[i], dst.upper[i]) if s > 0 else (-dst.upper[i], -dst.lower[i])
                    a, b = max(a, src.lower[i]), min(b, src.upper[i])
                    axes.append([(a, b, s, 0.0)] if a < b else [])
                else:
                    axes.append([
                        (a, b, s, periods[i] * k)
                        for a, b, k in _periodic_pieces(src.lower[i], src.upper[i], dst.lower[i], dst.upper[i], s, periods[i])
                    ])
            for combo in itertools.product(*axes):
                lower = [p[0] for p in combo]
                upper = [p[1] for p in combo]
                A = np.diag([float(p[2]) for p in combo])
                b = [float(p[3]) for p in combo]
                parts = []
                for cname, p in zip(coord_names, combo):
                    expr = cname if p[2] > 0 else f"-{cname}"
                    if p[3]:
                        expr += f"{p[3]:+g}"
                    parts.append(expr)
                rect = ", ".join(f"{lo:g}<{cn}<{hi:g}" for cn, lo, hi in zip(coord_names, lower, upper))
                label = f"{src.name}->{dst.name} [{rect}] ({', '.join(parts)})"
                branches.append(affine_branch(src.name, dst.name, lower, upper, A, b, label))
    return Atlas(name, chart_objs, tuple(branches))


def _sphere_atlas(n: int) -> Atlas:
    if n < 1:
        raise ValueError("sphere dimension must be at least 1")
    names = tuple(f"p{i}" for i in range(n + 1))
    chart = Chart(f"S{n}", (-1.0 - 1e-9,) * (n + 1), (1.0 + 1e-9,) * (n + 1), names)
    return Atlas(f"sphere({n})", (chart,), (), backend="embedded", manifold_dim=n)


def builtin_atlas(name: str) -> Atlas:
    """Build one of ``mobius``, ``klein``, ``circle``, ``torus`` or ``sphere(n)``.

    Möbius: charts U (0<u<1) and V (-1/2<u<1/2), |v| < 1, glued by
    (u, v) ~ (u + m, (-1)^m v). Klein: the same u-charts crossed with two
    angle charts A (0<θ<2π), B (-π<θ<π), glued by (u, θ) ~ (u + m, (-1)^m θ).
    """
    key = name.strip().lower()
    if key == "mobius":
        return _quotient_atlas(
            "mobius", ("u", "v"),
            {"U": ((0.0, -1.0), (1.0, 1.0)), "V": ((-0.5, -1.0), (0.5, 1.0))},
            (1.0, None), twist=True,
        )
    if key == "klein":
        charts = {}
        for un, (ulo, uhi) in {"U": (0.0, 1.0), "V": (-0.5, 0.5)}.items():
            for tn, (tlo, thi) in {"A": (0.0, 2 * PI), "B": (-PI, PI)}.items():
                charts[un + tn] = ((ulo, tlo), (uhi, thi))
        return _quotient_atlas("klein", ("u", "theta"), charts, (1.0, 2 * PI), twist=True)
    if key == "torus":
        charts = {}
        for un, (ulo, uhi) in {"U": (0.0, 1.0), "V": (-0.5, 0.5)}.items():
            for wn, (wlo, whi) in {"A": (0.0, 1.0), "B": (-0.5, 0.5)}.items():
                charts[un + wn] = ((ulo, wlo), (uhi, whi))
        return _quotient_atlas("torus", ("u", "v"), charts, (1.0, 1.0), twist=False)
    if key == "circle":
        return _quotient_atlas(
            "circle", ("theta",), {"A": ((0.0,), (2 * PI,)), "B": ((-PI,), (PI,))},
            (2 * PI,), twist=False,
        )
    m = re.fullmatch(r"(?:sphere\(?|s)(\d+)\)?", key)
    if m:
        return _sphere_atlas(int(m.group(1)))
    raise ValueError(f"unknown atlas {name!r}")


def single_chart_atlas(dim: int, name: str = "plane", lower=None, upper=None) -> Atlas:
    lower = tuple(lower) if lower is not None else (-1.0,) * dim
    upper = tuple(upper) if upper is not None else (1.0,) * dim
    return Atlas(name, (Chart("R", lower, upper),))


# ---------------------------------------------------------------- transitions


def _require_chart_backend(atlas: Atlas, what: str) -> None:
    if atlas.embedded:
        raise UnsupportedError(f"{what} is not defined for the embedded backend")


def transition_apply(atlas: Atlas, from_chart: str, to_chart: str, coords) -> np.ndarray:
    _require_chart_backend(atlas, "transition_apply")
    br = atlas.find_branch(from_chart, to_chart, coords)
    return br.func(np.asarray(coords, dtype=float).reshape(1, -1))[0]


def jacobian(atlas: Atlas, from_chart: str, to_chart: str, coords) -> np.ndarray:
    _require_chart_backend(atlas, "jacobian")
    br = atlas.find_branch(from_chart, to_chart, coords)
    return br.jac(np.asarray(coords, dtype=float).reshape(1, -1))[0]


def transport_batch(atlas: Atlas, from_chart: str, to_chart: str, coords, tangent, covector):
    """Re-express a batch of (X, xi) in another chart.

    Tangent parts push forward by J, covector parts by J^{-T}. Returns
    ``(new_coords, new_tangent, new_covector)``.
    """
    _require_chart_backend(atlas, "transport")
    x = np.atleast_2d(np.asarray(coords, dtype=float))
    X = np.atleast_2d(np.asarray(tangent, dtype=float))
    xi = np.atleast_2d(np.asarray(covector, dtype=float))
    if from_chart == to_chart:
        return x.copy(), X.copy(), xi.copy()
    y, Y, eta = np.empty_like(x), np.empty_like(X), np.empty_like(xi)
    done = np.zeros(len(x), dtype=bool)
    for br in atlas.branches_between(from_chart, to_chart):
        mask = br.contains(x) & ~done
        if not mask.any():
            continue
        J = br.jac(x[mask])
        y[mask] = br.func(x[mask])
        Y[mask] = np.einsum("nij,nj->ni", J, X[mask])
        eta[mask] = np.linalg.solve(np.transpose(J, (0, 2, 1)), xi[mask][..., None])[..., 0]
        done |= mask
    if not done.all():
        bad = x[~done][0]
        atlas.find_branch(from_chart, to_chart, bad)  # raises with branch listing
    return y, Y, eta


def transport(atlas: Atlas, v: GenVector, to_chart: str) -> GenVector:
    y, Y, eta = transport_batch(atlas, v.base.chart, to_chart, v.base.coords, v.tangent, v.covector)
    return GenVector(ManifoldPoint(to_chart, y[0]), Y[0], eta[0])


# ---------------------------------------------------------------- metrics


@dataclass(frozen=True)
class Metric:
    """Per-chart SPD matrix fields ``coords (N, k) -> (N, k, k)``."""

    name: str
    matrices: Mapping[str, Callable[[np.ndarray], np.ndarray]] = field(repr=False)

    def matrix(self, chart: str, coords) -> np.ndarray:
        try:
            fn = self.matrices[chart]
        except KeyError:
            raise DomainError(f"metric {self.name} is not defined on chart {chart!r}") from None
        return fn(np.atleast_2d(np.asarray(coords, dtype=float)))


def _constant_field(M):
    M = np.asarray(M, dtype=float)

    def fn(x):
        return np.broadcast_to(M, (len(x),) + M.shape).copy()

    return fn


def euclidean_metric(atlas: Atlas) -> Metric:
    """Identity matrix in every chart's coordinates.

    Well defined on the built-in quotients because their transition
    Jacobians are orthogonal.
    """
    _require_chart_backend(atlas, "euclidean_metric")
    return Metric("flat", {c.name: _constant_field(np.eye(c.dim)) for c in atlas.charts})


def round_metric(atlas: Atlas) -> Metric:
    """Metric induced from the ambient space on the embedded sphere."""
    if not atlas.embedded:
        raise UnsupportedError("round_metric needs the embedded backend")
    k = atlas.dim + 1
    return Metric("round", {atlas.charts[0].name: _constant_field(np.eye(k))})


def default_metric(atlas: Atlas) -> Metric:
    return round_metric(atlas) if atlas.embedded else euclidean_metric(atlas)


def flat(g: Metric, p: ManifoldPoint, X) -> np.ndarray:
    """Covector components G(p) X of the one-form g(X, .)."""
    G = g.matrix(p.chart, p.coords)[0]
    return G @ np.asarray(X, dtype=float)


def sharp(g: Metric, p: ManifoldPoint, xi) -> np.ndarray:
    """Solve G(p) X = xi."""
    G = g.matrix(p.chart, p.coords)[0]
    return np.linalg.solve(G, np.asarray(xi, dtype=float))


def canonical_pairing(e: GenVector, f: GenVector) -> float:
    """(1/2)(xi(Y) + eta(X)) for e = X + xi, f = Y + eta."""
    if e.base.chart != f.base.chart or not np.array_equal(e.base.coords, f.base.coords):
        raise DomainError("canonical pairing needs both vectors at the same point and chart")
    return 0.5 * (float(e.covector @ f.tangent) + float(f.covector @ e.tangent))


def rect_grid(lower, upper, resolution, margin) -> np.ndarray:
    """Uniform grid over ``[lower + margin, upper - margin]``, C ordering."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    res = np.broadcast_to(np.asarray(resolution, dtype=int), lower.shape)
    if np.any(res < 1):
        raise ValueError("resolution must be positive")
    if np.any(2 * margin >= upper - lower):
        raise DomainError("domain is empty after shrinking by the margin")
    axes = [np.linspace(lo + margin, hi - margin, r) for lo, hi, r in zip(lower, upper, res)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _branch_samples(br: Branch, samples: int) -> np.ndarray:
    d = len(br.lower)
    per_axis = max(2, int(math.ceil(samples ** (1.0 / d))))
    width = min(hi - lo for lo, hi in zip(br.lower, br.upper))
    return rect_grid(br.lower, br.upper, per_axis, min(1e-3, width / 4))


def metric_compatibility_check(atlas: Atlas, g: Metric, samples: int = 1000) -> float:
    """Largest Frobenius norm of G_target - J^{-T} G_source J^{-1} over overlap samples."""
    if atlas.embedded:
        return 0.0
    worst = 0.0
    for br in atlas.branches:
        x = _branch_samples(br, samples)
        J = br.jac(x)
        Jinv = np.linalg.inv(J)
        pulled = np.transpose(Jinv, (0, 2, 1)) @ g.matrix(br.source, x) @ Jinv
        diff = g.matrix(br.target, br.func(x)) - pulled
        worst = max(worst, float(np.max(np.linalg.norm(diff, axis=(1, 2)))))
    return worst


def orientability_probe(atlas: Atlas, samples: int = 64) -> str:
    """Try to orient every chart consistently; ``"nonorientable"`` if impossible.

    Each chart gets a sign s_c with s_source * s_target * sign(det J) = +1
    required on every branch (branch domains are connected rectangles, so
    the sign of det J is constant on each). A 2-colouring conflict proves
    non-orientability; success is only evidence, as charts are sampled.
    """
    _require_chart_backend(atlas, "orientability_probe")
    edges: dict[str, list[tuple[str, int]]] = {c: [] for c in atlas.chart_names}
    for br in atlas.branches:
        dets = np.linalg.det(br.jac(_branch_samples(br, samples)))
        if np.any(dets == 0) or (np.any(dets > 0) and np.any(dets < 0)):
            raise DomainError(f"branch {br.describe()} has a degenerate Jacobian")
        s = 1 if dets[0] > 0 else -1
        edges[br.source].append((br.target, s))
        edges[br.target].append((br.source, s))
    sign: dict[str, int] = {}
    for start in atlas.chart_names:
        if start in sign:
            continue
        sign[start] = 1
        stack = [start]
        while stack:
            c = stack.pop()
            for other, s in edges[c]:
                want = sign[c] * s
                if other not in sign:
                    sign[other] = want
                    stack.append(other)
                elif sign[other] != want:
                    return "nonorientable"
    return "orientable-evidence"


# ---------------------------------------------------------------- sections


@dataclass(frozen=True)
class Section:
    """A section of TM + T*M given chart by chart.

    ``components[chart](coords)`` returns ``(tangent, covector)``, each of
    shape ``(N, k)``. Agreement on overlaps is checked, not enforced.
    """

    name: str
    components: Mapping[str, Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]] = field(repr=False)

    @property
    def charts(self) -> list[str]:
        return list(self.components)

    def evaluate(self, chart: str, coords) -> tuple[np.ndarray, np.ndarray]:
        try:
            fn = self.components[chart]
        except KeyError:
            raise DomainError(f"section {self.name} has no expression on chart {chart!r}") from None
        x = np.atleast_2d(np.asarray(coords, dtype=float))
        X, xi = fn(x)
        return np.asarray(X, dtype=float).reshape(x.shape), np.asarray(xi, dtype=float).reshape(x.shape)

    def at(self, p: ManifoldPoint) -> GenVector:
        X, xi = self.evaluate(p.chart, p.coords)
        return GenVector(p, X[0], xi[0])


def vector_field(name: str, fields: Mapping[str, Callable[[np.ndarray], np.ndarray]]) -> Section:
    """Tangent-only section from per-chart ``coords -> (N, k)`` functions."""

    def lift(fn):
        def comp(x):
            X = np.asarray(fn(x), dtype=float).reshape(x.shape)
            return X, np.zeros_like(X)

        return comp

    return Section(name, {c: lift(fn) for c, fn in fields.items()})


def constant_section(name: str, charts: Sequence[str], tangent, covector) -> Section:
    t = np.asarray(tangent, dtype=float)
    c = np.asarray(covector, dtype=float)

    def comp(x):
        n = len(x)
        return np.tile(t, (n, 1)), np.tile(c, (n, 1))

    return Section(name, {ch: comp for ch in charts})


def flat_section(s: Section, g: Metric, name: str | None = None) -> Section:
    """The one-form g(X, .) for the tangent part X of ``s``; its covector part is dropped."""

    def make(chart):
        def comp(x):
            X, _ = s.evaluate(chart, x)
            xi = np.einsum("nij,nj->ni", g.matrix(chart, x), X)
            return np.zeros_like(X), xi

        return comp

    return Section(name or f"flat({s.name})", {c: make(c) for c in s.charts})


def combine_sections(name: str, terms: Sequence[tuple[float, Section]]) -> Section:
    """Constant-coefficient linear combination, defined on the charts all terms share."""
    charts = set(terms[0][1].charts)
    for _, s in terms[1:]:
        charts &= set(s.charts)
    order = [c for c in terms[0][1].charts if c in charts]

    def make(chart):
        def comp(x):
            X = xi = 0.0
            for a, s in terms:
                Xs, xis = s.evaluate(chart, x)
                X = X + a * Xs
                xi = xi + a * xis
            return X, xi

        return comp

    return Section(name, {c: make(c) for c in order})


# ---------------------------------------------------------------- config loading


def _compile_vector(exprs, names):
    fns = [compile_expr(e, names) for e in exprs]

    def fn(x):
        env = {nm: x[:, i] for i, nm in enumerate(names)}
        return np.stack([f(**env) for f in fns], axis=1)

    return fn


def _compile_matrix(rows, names):
    fns = [[compile_expr(e, names) for e in row] for row in rows]

    def fn(x):
        env = {nm: x[:, i] for i, nm in enumerate(names)}
        return np.stack([np.stack([f(**env) for f in row], axis=1) for row in fns], axis=1)

    return fn


def _var_names(chart: Chart) -> list[str]:
    aliases = [f"x{i + 1}" for i in range(chart.dim)]
    return list(dict.fromkeys(list(chart.coord_names) + aliases))


def _expand(x: np.ndarray, chart: Chart) -> np.ndarray:
    """Append alias columns so that ``x1..xd`` are available beside named coordinates."""
    names = _var_names(chart)
    if len(names) == chart.dim:
        return x
    extra = [x[:, int(nm[1:]) - 1] for nm in names[chart.dim:]]
    return np.column_stack([x] + extra)


def atlas_from_config(name: str, spec: Mapping) -> Atlas:
    """Build an atlas from a declarative mapping.

    Expected keys: ``coords`` (optional list of coordinate names),
    ``charts`` mapping chart name to ``{"lower": [...], "upper": [...]}``
    and ``branches``, a list of ``{"from", "to", "lower", "upper", "map",
    "jacobian"}`` where ``map`` and ``jacobian`` are formula strings.
    Jacobians are never differentiated automatically.
    """
    coords = tuple(spec.get("coords", ()))
    charts = tuple(
        Chart(cn, tuple(map(float, c["lower"])), tuple(map(float, c["upper"])), coords)
        for cn, c in spec["charts"].items()
    )
    by_name = {c.name: c for c in charts}
    branches = []
    for b in spec.get("branches", ()):
        src = by_name[b["from"]]
        names = _var_names(src)
        mfn = _compile_vector(b["map"], names)
        jfn = _compile_matrix(b["jacobian"], names)
        branches.append(Branch(
            src.name, b["to"], tuple(map(float, b["lower"])), tuple(map(float, b["upper"])),
            (lambda x, f=mfn, c=src: f(_expand(np.atleast_2d(x), c))),
            (lambda x, f=jfn, c=src: f(_expand(np.atleast_2d(x), c))),
            b.get("label", ""),
        ))
    return Atlas(name, charts, tuple(branches))


def metric_from_config(name: str, atlas: Atlas, spec: Mapping) -> Metric:
    """``spec["charts"]`` maps chart name to a matrix of formula strings."""
    mats = {}
    for cn, rows in spec["charts"].items():
        chart = atlas.chart(cn)
        f = _compile_matrix(rows, _var_names(chart))
        mats[cn] = lambda x, f=f, c=chart: f(_expand(np.atleast_2d(x), c))
    return Metric(name, mats)


def section_from_config(name: str, atlas: Atlas, spec: Mapping) -> Section:
    """``spec["charts"]`` maps chart name to ``{"tangent": [...], "covector": [...]}`` formulas.

    A missing ``covector`` (or ``tangent``) list means zeros.
    """
    comps = {}
    for cn, parts in spec["charts"].items():
        chart = atlas.chart(cn)
        names = _var_names(chart)
        zeros = ["0"] * chart.dim
        tf = _compile_vector(parts.get("tangent", zeros), names)
        cf = _compile_vector(parts.get("covector", zeros), names)

        def comp(x, tf=tf, cf=cf, c=chart):
            full = _expand(np.atleast_2d(x), c)
            return tf(full), cf(full)

        comps[cn] = comp
    return Section(name, comps)

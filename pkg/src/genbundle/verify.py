"""Sampling-based certification of frames, sections and induced structures.

Every check evaluates closed-form section components on deterministic
sample sets and aggregates with min / max only, so results do not depend
on evaluation order. A passing report is numerical evidence at the
sampled points, not a proof.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .manifold import (
    Atlas,
    DomainError,
    ManifoldPoint,
    Metric,
    Section,
    atlas_from_config,
    builtin_atlas,
    default_metric,
    metric_from_config,
    rect_grid,
    section_from_config,
    transport_batch,
)
from .structures import (
    FRAME_NAMES,
    SectionFrame,
    builtin_frame,
    g0_symmetry_residual,
    klein_fields,
    mobius_fields,
    structure_from_frame,
    structure_from_metric,
    eigen_ranks,
)

__all__ = [
    "ConfigError",
    "Tolerances",
    "SampleGrid",
    "VerifyReport",
    "DEFAULT_SEED",
    "STRUCTURE_NAMES",
    "sample_chart",
    "chart_samples",
    "sphere_samples",
    "gram_det",
    "gram_dets",
    "overlap_consistency",
    "verify_frame",
    "run_suite",
    "load_config",
    "default_config",
    "reports_to_json",
    "points_to_csv",
]

DEFAULT_SEED = 0xC0FFEE
STRUCTURE_NAMES = ("metric:J", "metric:F", "frame:J", "frame:F")


class ConfigError(ValueError):
    """Unparseable config or a name that does not resolve."""


@dataclass(frozen=True)
class Tolerances:
    det: float = 1e-8
    rcond: float = 1e-10
    overlap: float = 1e-10
    op: float = 1e-12
    agreement: float = 1e-10


@dataclass(frozen=True)
class SampleGrid:
    """Uniform grid on one chart, shrunk by ``margin`` from every face."""

    chart: str
    resolution: tuple[int, ...]
    margin: float = 1e-3


@dataclass
class VerifyReport:
    frame: str
    atlas: str
    provenance: str
    samples: int
    min_gram_det: float
    min_rcond: float
    max_overlap_residual: float
    max_identity_residual: float
    passed: bool
    seed: int
    tolerances: Tolerances
    overlap: dict = field(default_factory=dict)
    structures: dict = field(default_factory=dict)
    points: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "atlas": self.atlas,
            "provenance": self.provenance,
            "samples": self.samples,
            "min_gram_det": _num(self.min_gram_det),
            "min_rcond": _num(self.min_rcond),
            "max_overlap_residual": _num(self.max_overlap_residual),
            "max_identity_residual": _num(self.max_identity_residual),
            "pass": self.passed,
            "seed": self.seed,
            "tolerances": asdict(self.tolerances),
            "overlap": {k: _num(v) for k, v in self.overlap.items()},
            "structures": {k: {kk: _num(vv) for kk, vv in v.items()} for k, v in self.structures.items()},
        }


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


# ---------------------------------------------------------------- sampling


def _resolution(dim: int, resolution) -> tuple[int, ...]:
    if np.isscalar(resolution):
        return (int(resolution),) * dim
    res = tuple(int(r) for r in resolution)
    if len(res) != dim:
        raise ValueError(f"resolution {res} does not match dimension {dim}")
    return res


def sphere_samples(n: int, count: int, seed: int) -> np.ndarray:
    """Deterministic unit vectors in R^(n+1) from normalized seeded Gaussians."""
    rng = np.random.default_rng(seed)
    out = []
    have = 0
    while have < count:
        z = rng.standard_normal((count - have, n + 1))
        norms = np.linalg.norm(z, axis=1)
        keep = norms >= 1e-3
        out.append(z[keep] / norms[keep, None])
        have += int(keep.sum())
    return np.concatenate(out)[:count]


def chart_samples(atlas: Atlas, chart: str, resolution, margin: float = 1e-3, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Sample coordinates as an (N, k) array.

    Chart backend: a uniform grid with ``resolution`` points per axis, each
    at least 2. Embedded backend: ``resolution`` is the point count.
    """
    if atlas.embedded:
        count = int(np.prod(resolution))
        return sphere_samples(atlas.dim, count, seed)
    c = atlas.chart(chart)
    res = _resolution(c.dim, resolution)
    if min(res) < 2:
        raise ValueError("resolution must be at least 2 per axis")
    if margin <= 0:
        raise ValueError("margin must be positive")
    return rect_grid(c.lower, c.upper, res, margin)


def sample_chart(atlas: Atlas, chart: str, resolution, eps: float = 1e-3, seed: int = DEFAULT_SEED) -> list[ManifoldPoint]:
    return [ManifoldPoint(chart, x) for x in chart_samples(atlas, chart, resolution, eps, seed)]


# ---------------------------------------------------------------- checks


def gram_dets(frame: SectionFrame, chart: str, coords) -> tuple[np.ndarray, np.ndarray]:
    """Gram determinants and reciprocal condition numbers at a batch of points.

    The inner product on (tangent | covector) blocks is g + g^{-1} when the
    frame carries a chart-backend metric, which makes the Gram matrix
    independent of the chart; otherwise plain Euclidean components (for the
    embedded sphere that is exactly the round metric).
    """
    x = np.atleast_2d(np.asarray(coords, dtype=float))
    W = frame.ambient_matrix(chart, x)
    if frame.metric is not None and not frame.atlas.embedded:
        G = frame.metric.matrix(chart, x)
        k = G.shape[-1]
        Q = np.zeros((len(x), 2 * k, 2 * k))
        Q[:, :k, :k] = G
        Q[:, k:, k:] = np.linalg.inv(G)
        gram = W @ Q @ np.transpose(W, (0, 2, 1))
    else:
        gram = W @ np.transpose(W, (0, 2, 1))
    det = np.linalg.det(gram)
    s = np.linalg.svd(gram, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        rcond = np.where(s[:, 0] > 0, s[:, -1] / s[:, 0], 0.0)
    return det, rcond


def gram_det(frame: SectionFrame, p: ManifoldPoint) -> tuple[float, float]:
    det, rcond = gram_dets(frame, p.chart, p.coords)
    return float(det[0]), float(rcond[0])


def _branch_points(br, samples: int) -> np.ndarray:
    d = len(br.lower)
    per_axis = max(2, int(math.ceil(samples ** (1.0 / d))))
    width = min(hi - lo for lo, hi in zip(br.lower, br.upper))
    return rect_grid(br.lower, br.upper, per_axis, min(1e-3, width / 4))


def overlap_consistency(section: Section, atlas: Atlas, samples: int = 1000) -> float:
    """Largest mismatch between the two chart expressions of ``section`` on overlaps.

    For every transition branch the value in the source chart is transported
    to the target chart and compared with the target expression. A branch
    whose charts lack an expression contributes ``inf``.
    """
    if atlas.embedded:
        return 0.0
    worst = 0.0
    for br in atlas.branches:
        if br.source not in section.components or br.target not in section.components:
            return math.inf
        x = _branch_points(br, samples)
        X, xi = section.evaluate(br.source, x)
        y, Y, eta = transport_batch(atlas, br.source, br.target, x, X, xi)
        Yt, etat = section.evaluate(br.target, y)
        diff = np.concatenate([Y - Yt, eta - etat], axis=1)
        worst = max(worst, float(np.max(np.linalg.norm(diff, axis=1))))
    return worst


# Frame provenances whose induced structure equals the metric one.
_AGREES = {
    "J": frozenset({"mobius", "klein", "parallelizable", "sphere-explicit"}),
    "F": frozenset({"parallelizable", "sphere-explicit"}),
}


def _structure_checks(frame: SectionFrame, name: str, chart_points, rng, n_inputs, tol: Tolerances) -> dict:
    source, label = name.split(":")
    kind = "complex" if label == "J" else "paracomplex"
    g = frame.metric or default_metric(frame.atlas)
    K_metric = structure_from_metric(g, kind, frame.atlas)
    K = K_metric if source == "metric" else structure_from_frame(frame, kind)
    n = frame.atlas.dim
    sigma = -1.0 if kind == "complex" else 1.0
    out = {"square": 0.0, "g0_symmetric": 0.0, "g0_skew": 0.0}
    if kind == "paracomplex":
        out.update({"rank_plus_min": 2 * n, "rank_plus_max": 0, "rank_minus_min": 2 * n, "rank_minus_max": 0})
    if source == "frame":
        out["agreement"] = 0.0
    for chart, x in chart_points:
        M = K.local_matrix(chart, x)
        e = rng.standard_normal((len(x), n_inputs, 2 * n))
        KKe = e @ np.transpose(M @ M, (0, 2, 1))
        out["square"] = max(out["square"], float(np.max(np.linalg.norm(KKe - sigma * e, axis=-1))))
        sym, skew = g0_symmetry_residual(K, chart, x, rng, n_inputs, matrices=M)
        out["g0_symmetric"] = max(out["g0_symmetric"], sym)
        out["g0_skew"] = max(out["g0_skew"], skew)
        if kind == "paracomplex":
            rp = eigen_ranks(K, chart, x, 1)
            rm = eigen_ranks(K, chart, x, -1)
            out["rank_plus_min"] = min(out["rank_plus_min"], int(rp.min()))
            out["rank_plus_max"] = max(out["rank_plus_max"], int(rp.max()))
            out["rank_minus_min"] = min(out["rank_minus_min"], int(rm.min()))
            out["rank_minus_max"] = max(out["rank_minus_max"], int(rm.max()))
        if source == "frame":
            diff = e @ np.transpose(M - K_metric.local_matrix(chart, x), (0, 2, 1))
            out["agreement"] = max(out["agreement"], float(np.max(np.linalg.norm(diff, axis=-1))))

    enforced = [out["square"]]
    if source == "metric":
        # Symmetry under the canonical pairing holds for the metric structures only.
        enforced.append(out["g0_symmetric"])
    elif frame.provenance in _AGREES[label]:
        enforced.append(out["agreement"])
    ok = out["square"] < tol.op
    if source == "metric":
        ok = ok and out["g0_symmetric"] < tol.op
    elif frame.provenance in _AGREES[label]:
        ok = ok and out["agreement"] < tol.agreement
    if kind == "paracomplex":
        ok = ok and out["rank_plus_min"] == n == out["rank_plus_max"]
    out["max_enforced"] = max(enforced)
    out["pass"] = bool(ok)
    return out


def verify_frame(
    frame: SectionFrame,
    grids: Sequence[SampleGrid] | None = None,
    tolerances: Tolerances | None = None,
    *,
    structures: Iterable[str] = (),
    extra_sections: Iterable[Section] = (),
    seed: int = DEFAULT_SEED,
    points_per_chart: int = 10_000,
    overlap_samples: int = 1000,
    random_inputs: int = 10,
    collect_points: bool = False,
) -> VerifyReport:
    """Check pointwise independence, overlap agreement and optional structure identities.

    Failures are reported through ``passed``, never raised.
    """
    tol = tolerances or Tolerances()
    atlas = frame.atlas
    if grids is None:
        grids = []
        for c in atlas.charts:
            if atlas.embedded:
                grids.append(SampleGrid(c.name, (points_per_chart,)))
            else:
                per_axis = max(2, int(math.ceil(points_per_chart ** (1.0 / c.dim) - 1e-9)))
                grids.append(SampleGrid(c.name, (per_axis,) * c.dim))
    missing = set(atlas.chart_names) - {g.chart for g in grids}
    if missing:
        raise ValueError(f"grids do not cover charts {sorted(missing)}")

    chart_points = [(g.chart, chart_samples(atlas, g.chart, g.resolution, g.margin, seed)) for g in grids]
    min_det, min_rcond, count = math.inf, math.inf, 0
    points = []
    for chart, x in chart_points:
        try:
            det, rcond = gram_dets(frame, chart, x)
        except DomainError:
            det, rcond = np.full(len(x), -math.inf), np.zeros(len(x))
        min_det = min(min_det, float(det.min()))
        min_rcond = min(min_rcond, float(rcond.min()))
        count += len(x)
        if collect_points:
            points += [(chart, tuple(map(float, xi)), float(d), float(r)) for xi, d, r in zip(x, det, rcond)]

    overlap = {s.name: overlap_consistency(s, atlas, overlap_samples) for s in frame.sections}
    for s in extra_sections:
        overlap[s.name] = overlap_consistency(s, atlas, overlap_samples)
    max_overlap = max(overlap.values(), default=0.0)

    rng = np.random.default_rng(seed)
    checks = {}
    for name in structures:
        if name not in STRUCTURE_NAMES:
            raise ValueError(f"unknown structure {name!r}; known: {', '.join(STRUCTURE_NAMES)}")
        try:
            checks[name] = _structure_checks(frame, name, chart_points, rng, random_inputs, tol)
        except DomainError:
            checks[name] = {"max_enforced": math.inf, "pass": False}
    max_identity = max((c["max_enforced"] for c in checks.values()), default=0.0)

    passed = (
        min_det > tol.det
        and min_rcond > tol.rcond
        and max_overlap < tol.overlap
        and all(c["pass"] for c in checks.values())
    )
    return VerifyReport(
        frame=frame.name,
        atlas=atlas.name,
        provenance=frame.provenance,
        samples=count,
        min_gram_det=min_det,
        min_rcond=min_rcond,
        max_overlap_residual=max_overlap,
        max_identity_residual=max_identity,
        passed=bool(passed),
        seed=seed,
        tolerances=tol,
        overlap=overlap,
        structures=checks,
        points=points,
    )


# ---------------------------------------------------------------- suites


def default_config() -> dict:
    from importlib.resources import files

    return json.loads(files("genbundle").joinpath("data/default_config.json").read_text())


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


class _Registry:
    """Resolves names used in a config: atlases, metrics, sections and frames."""

    def __init__(self, defs: Mapping):
        self.defs = defs
        self.atlases: dict[str, Atlas] = {}
        self.frames: dict[str, SectionFrame] = {}

    def atlas(self, name: str) -> Atlas:
        if name not in self.atlases:
            user = self.defs.get("atlases", {})
            try:
                self.atlases[name] = atlas_from_config(name, user[name]) if name in user else builtin_atlas(name)
            except (ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"atlas {name!r}: {exc}") from exc
        return self.atlases[name]

    def metric(self, name: str | None, atlas: Atlas) -> Metric:
        if name in (None, "default", "flat", "round"):
            return default_metric(atlas)
        spec = self.defs.get("metrics", {}).get(name)
        if spec is None:
            raise ConfigError(f"unknown metric {name!r}")
        return metric_from_config(name, atlas, spec)

    def section(self, name: str) -> Section:
        builtin_fields = {"mobius": mobius_fields, "klein": klein_fields}
        if "/" in name:
            frame_name, sec = name.split("/", 1)
            for s in self.frame(frame_name).sections:
                if s.name == sec:
                    return s
            raise ConfigError(f"frame {frame_name!r} has no section {sec!r}")
        if ":" in name and name.split(":")[0] in builtin_fields:
            prefix, field_name = name.split(":", 1)
            for s in builtin_fields[prefix]():
                if s.name == field_name:
                    return Section(name, s.components)
            raise ConfigError(f"unknown field {name!r}")
        spec = self.defs.get("sections", {}).get(name)
        if spec is None:
            raise ConfigError(f"unknown section {name!r}")
        try:
            return section_from_config(name, self.atlas(spec["atlas"]), spec)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"section {name!r}: {exc}") from exc

    def frame(self, name: str) -> SectionFrame:
        if name in self.frames:
            return self.frames[name]
        user = self.defs.get("frames", {})
        if name in user:
            spec = user[name]
            atlas = self.atlas(spec["atlas"])
            g = self.metric(spec.get("metric"), atlas)
            secs = tuple(self.section(s) for s in spec["sections"])
            try:
                frame = SectionFrame(name, atlas, secs, "user", g)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        elif name in FRAME_NAMES:
            frame = builtin_frame(name)
        else:
            raise ConfigError(f"unknown frame {name!r}")
        self.frames[name] = frame
        return frame


def run_suite(config: Mapping, *, collect_points: bool = False) -> list[VerifyReport]:
    """Run every entry of ``config["checks"]`` and return one report per entry.

    Recognised keys: ``seed``, ``tolerances`` (det, rcond, overlap, op,
    agreement), ``grid`` (points_per_chart, margin, overlap_samples,
    random_inputs), ``definitions`` (user atlases, metrics, sections,
    frames) and ``checks``, a list of ``{"frame", "structures",
    "sections"}`` mappings.
    """
    if not isinstance(config, Mapping):
        raise ConfigError("config must be a mapping")
    seed = int(config.get("seed", DEFAULT_SEED))
    try:
        tol = Tolerances(**config.get("tolerances", {}))
    except TypeError as exc:
        raise ConfigError(f"bad tolerances: {exc}") from exc
    grid = dict(config.get("grid", {}))
    unknown = set(grid) - {"points_per_chart", "margin", "overlap_samples", "random_inputs"}
    if unknown:
        raise ConfigError(f"unknown grid keys {sorted(unknown)}")
    registry = _Registry(config.get("definitions", {}))
    reports = []
    for item in config.get("checks", []):
        if "frame" not in item:
            raise ConfigError("each check needs a 'frame'")
        frame = registry.frame(item["frame"])
        structures = list(item.get("structures", []))
        for s in structures:
            if s not in STRUCTURE_NAMES:
                raise ConfigError(f"unknown structure {s!r}")
        extra = [registry.section(s) for s in item.get("sections", [])]
        margin = float(grid.get("margin", 1e-3))
        ppc = int(grid.get("points_per_chart", 10_000))
        grids = None
        if not frame.atlas.embedded:
            grids = []
            for c in frame.atlas.charts:
                per_axis = max(2, int(math.ceil(ppc ** (1.0 / c.dim) - 1e-9)))
                grids.append(SampleGrid(c.name, (per_axis,) * c.dim, margin))
        reports.append(verify_frame(
            frame, grids, tol,
            structures=structures,
            extra_sections=extra,
            seed=seed,
            points_per_chart=ppc,
            overlap_samples=int(grid.get("overlap_samples", 1000)),
            random_inputs=int(grid.get("random_inputs", 10)),
            collect_points=collect_points,
        ))
    return reports


def reports_to_json(reports: Sequence[VerifyReport]) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def points_to_csv(reports: Sequence[VerifyReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame", "chart", "coords", "gram_det", "rcond"])
    for r in reports:
        for chart, coords, det, rcond in r.points:
            w.writerow([r.frame, chart, " ".join(repr(c) for c in coords), repr(det), repr(rcond)])
    return buf.getvalue()

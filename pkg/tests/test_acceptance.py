"""Acceptance criteria, one test per criterion, each at its stated tolerance and time budget."""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

from genbundle.cli import classify_rows, main
from genbundle.manifold import builtin_atlas, orientability_probe
from genbundle.structures import (
    SectionFrame,
    klein_fields,
    klein_frame,
    mobius_fields,
    mobius_frame,
    sphere_frame,
)
from genbundle.verify import Tolerances, gram_dets, sphere_samples, verify_frame
from genbundle.z2classes import allard_min_copies, binom_mod2


def acceptance(number, title):
    return pytest.mark.acceptance(number, title)


@acceptance(1, "classify 64: RP^n obstruction zero exactly at n = 2^k - 1")
def test_criterion_1_table_reproduction(capsys):
    t0 = time.perf_counter()
    assert main(["classify", "64", "--format", "csv"]) == 0
    elapsed = time.perf_counter() - t0
    out = capsys.readouterr().out.splitlines()
    header, rows = out[0].split(","), [r.split(",") for r in out[1:]]
    col = header.index("RP^n SW obstruction")
    zero = [int(r[0]) for r in rows if r[col] == "zero"]
    assert len(rows) == 64
    assert zero == [1, 3, 7, 15, 31, 63]
    assert all(r[col] == "NONZERO" for r in rows if int(r[0]) not in zero)
    assert classify_rows(64) == rows
    assert elapsed < 1.0


@acceptance(2, "binom_mod2 matches a Pascal-mod-2 oracle for 0 <= k <= n <= 512")
def test_criterion_2_lucas_oracle():
    t0 = time.perf_counter()
    row, cases = [1], 0
    # rows up to 515 give 133,386 cases and contain the full n <= 512 range
    for n in range(516):
        if n:
            row = [1] + [(row[k - 1] + row[k]) & 1 for k in range(1, n)] + [1]
        for k in range(n + 1):
            assert binom_mod2(n, k) == row[k]
            cases += 1
    elapsed = time.perf_counter() - t0
    assert cases == 133_386
    assert elapsed < 1.0


@acceptance(3, "Moebius frame: min Gram det 1 within 1e-9, overlaps < 1e-10, 1e4 points per chart")
def test_criterion_3_mobius():
    t0 = time.perf_counter()
    frame = mobius_frame()
    r = verify_frame(frame, points_per_chart=10_000, extra_sections=mobius_fields(frame.atlas))
    elapsed = time.perf_counter() - t0
    assert r.samples >= 2 * 10_000
    assert abs(r.min_gram_det - 1.0) < 1e-9
    assert set(r.overlap) == {"w1", "w2", "w3", "w4", "X", "Y", "Z"}
    assert max(r.overlap.values()) < 1e-10
    assert r.passed
    assert elapsed < 5.0


@acceptance(4, "Klein frame: min Gram det > 0.99, overlaps < 1e-10")
def test_criterion_4_klein():
    frame = klein_frame()
    r = verify_frame(frame, points_per_chart=10_000, extra_sections=klein_fields(frame.atlas))
    assert r.min_gram_det > 0.99
    assert max(r.overlap.values()) < 1e-10
    assert r.passed


STRUCTURE_FRAMES = {
    "mobius": (mobius_frame, ["metric:J", "metric:F", "frame:J"]),
    "klein": (klein_frame, ["metric:J", "metric:F"]),
    "sphere(1)": (lambda: sphere_frame(1), ["metric:J", "metric:F", "frame:J", "frame:F"]),
    "sphere(3)": (lambda: sphere_frame(3), ["metric:J", "metric:F", "frame:J", "frame:F"]),
}


@acceptance(5, "metric J/F identities, eigenrank n, G0 symmetry, frame-vs-metric agreement")
def test_criterion_5_structures():
    t0 = time.perf_counter()
    for name, (make, structures) in STRUCTURE_FRAMES.items():
        frame = make()
        r = verify_frame(frame, points_per_chart=1000, random_inputs=10, structures=structures)
        n = frame.atlas.dim
        for s in structures:
            c = r.structures[s]
            assert c["square"] < 1e-12, (name, s, c["square"])
            if s.startswith("metric"):
                assert c["g0_symmetric"] < 1e-12, (name, s)
            else:
                assert c["agreement"] < 1e-10, (name, s, c["agreement"])
            if s.endswith("F"):
                assert c["rank_plus_min"] == n == c["rank_plus_max"], (name, s)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0


@acceptance(6, "S^3 quaternionic frame: Gram matrix = identity within 1e-12 at 1e4 points")
def test_criterion_6_s3_gram():
    frame = sphere_frame(3)
    p = sphere_samples(3, 10_000, 0xC0FFEE)
    W = frame.ambient_matrix("S3", p)
    gram = W @ np.transpose(W, (0, 2, 1))
    assert len(p) == 10_000
    assert np.max(np.abs(gram - np.eye(6))) < 1e-12


@acceptance(7, "allard_min_copies(1, n + 1) = 2 for 1 <= n <= 10^6")
def test_criterion_7_allard():
    t0 = time.perf_counter()
    assert all(allard_min_copies(1, n + 1) == 2 for n in range(1, 1_000_001))
    assert time.perf_counter() - t0 < 1.0


@acceptance(8, "negative controls: duplicated section, orientability probe")
def test_criterion_8_negative_controls():
    mob = mobius_frame()
    s = mob.sections
    dup = SectionFrame("dup", mob.atlas, (s[0], s[1], s[2], s[2]), "user", mob.metric)
    det, _ = gram_dets(dup, "U", [[0.3, 0.2], [0.7, -0.5]])
    assert np.all(det == 0.0)
    r = verify_frame(dup, points_per_chart=1000, tolerances=Tolerances())
    assert not r.passed
    assert orientability_probe(builtin_atlas("mobius")) == "nonorientable"
    assert orientability_probe(builtin_atlas("klein")) == "nonorientable"
    assert orientability_probe(builtin_atlas("torus")) == "orientable-evidence"


@acceptance(9, "two verify runs with the same config and seed give byte-identical JSON")
def test_criterion_9_determinism(tmp_path):
    env = {k: v for k, v in os.environ.items() if k != "GENBUNDLE_CONFIG"}
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.json"
        proc = subprocess.run([sys.executable, "-m", "genbundle", "verify", "--out", str(path)],
                              capture_output=True, text=True, env=env)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0]) > 0

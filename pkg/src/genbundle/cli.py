"""Command-line front end.

Exit codes: 0 all checks pass, 1 a verification failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

from . import z2classes as z2
from .structures import FRAME_NAMES, builtin_frame
from .verify import (
    STRUCTURE_NAMES,
    ConfigError,
    Tolerances,
    default_config,
    load_config,
    points_to_csv,
    reports_to_json,
    run_suite,
    verify_frame,
)

ATLAS_FRAMES = {
    "mobius": "mobius:eq4",
    "klein": "klein:analogous",
    "circle": "circle:parallel",
    "torus": "torus:parallel",
    "sphere(1)": "sphere1:parallel",
    "s1": "sphere1:parallel",
    "sphere(3)": "sphere3:quaternion",
    "s3": "sphere3:quaternion",
}


class UsageError(Exception):
    pass


def _dimension(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 1 <= n <= z2.MAX_DEGREE:
        raise argparse.ArgumentTypeError(f"n must be in [1, {z2.MAX_DEGREE}]")
    return n


def _u64(text: str) -> int:
    n = int(text, 0)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return n


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- sw / classify


def format_sw(n: int) -> str:
    w = z2.sw_tangent_rpn(n)
    ww = z2.sw_gen_tangent_rpn(n)
    verdict = "zero" if ww.is_one() else "NONZERO"
    return f"w(T) = {w}; w(TT) = {ww}; obstruction: {verdict}\n"


def _yes_no(flag: bool) -> str:
    return "trivial" if flag else "non-trivial"


_TRI = {"yes": "trivial", "no": "non-trivial", "undecided": "undecided"}


def classify_rows(n_max: int) -> list[list[str]]:
    rows = []
    for row in z2.classify_table(n_max):
        rows.append([
            str(row.n),
            _yes_no(row.sphere_tangent_trivial),
            _yes_no(row.sphere_gen_trivial),
            _TRI[row.parallelizable_known],
            "zero" if row.obstruction_trivial else "NONZERO",
            _TRI[row.rpn_gen_trivial],
            str(row.gen_sw),
        ])
    return rows


CLASSIFY_HEADER = ["n", "S^n TM", "S^n TTM", "RP^n TM", "RP^n SW obstruction", "RP^n TTM", "w(TT RP^n)"]


def format_classify_table(n_max: int) -> str:
    rows = [CLASSIFY_HEADER] + classify_rows(n_max)
    widths = [max(len(r[i]) for r in rows) for i in range(len(CLASSIFY_HEADER) - 1)]
    lines = []
    for k, r in enumerate(rows):
        cells = [r[0].rjust(widths[0])] + [c.ljust(w) for c, w in zip(r[1:-1], widths[1:])] + [r[-1]]
        lines.append(" | ".join(cells).rstrip())
        if k == 0:
            lines.append("-+-".join("-" * w for w in widths) + "-+-" + "-" * len(r[-1]))
    return "\n".join(lines) + "\n"


def cmd_sw(args) -> int:
    if args.format == "json":
        doc = {
            "n": args.n,
            "tangent_sw": z2.sw_tangent_rpn(args.n).to_dict(),
            "gen_sw": z2.sw_gen_tangent_rpn(args.n).to_dict(),
            "obstruction_trivial": z2.obstruction_trivial(args.n),
        }
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _emit(format_sw(args.n), args.out)
    return 0


def cmd_classify(args) -> int:
    if args.format == "json":
        doc = [row.to_dict() for row in z2.classify_table(args.n_max)]
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CLASSIFY_HEADER)
        w.writerows(classify_rows(args.n_max))
        _emit(buf.getvalue(), args.out)
    else:
        _emit(format_classify_table(args.n_max), args.out)
    return 0


# ---------------------------------------------------------------- verify / structures


def _resolve_config(args) -> dict:
    path = getattr(args, "config", None) or os.environ.get("GENBUNDLE_CONFIG")
    cfg = load_config(path) if path else default_config()
    cfg = dict(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    tol = dict(cfg.get("tolerances", {}))
    for key, attr in (("det", "tol_det"), ("overlap", "tol_overlap"), ("op", "tol_op")):
        if getattr(args, attr) is not None:
            tol[key] = getattr(args, attr)
    cfg["tolerances"] = tol
    if args.grid is not None:
        cfg["grid"] = dict(cfg.get("grid", {}), points_per_chart=args.grid)
    return cfg


def _summary(reports) -> str:
    lines = []
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"{status} {r.frame}: samples={r.samples} min_gram_det={r.min_gram_det:.12g} "
            f"min_rcond={r.min_rcond:.3g} max_overlap={r.max_overlap_residual:.3g} "
            f"max_identity={r.max_identity_residual:.3g}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def cmd_verify(args) -> int:
    cfg = _resolve_config(args)
    reports = run_suite(cfg, collect_points=args.format == "csv")
    if args.format == "csv":
        _emit(points_to_csv(reports), args.out)
    elif args.format == "table":
        _emit(_summary(reports), args.out)
    else:
        _emit(reports_to_json(reports), args.out)
    if args.out:
        sys.stderr.write(_summary(reports))
    return 0 if all(r.passed for r in reports) else 1


def format_structures(report) -> str:
    lines = [f"{report.frame} on {report.atlas} ({report.samples} points, seed {report.seed})"]
    for name, c in report.structures.items():
        parts = [f"square={c['square']:.3g}", f"g0_symmetric={c['g0_symmetric']:.3g}", f"g0_skew={c['g0_skew']:.3g}"]
        if "rank_plus_min" in c:
            parts.append(f"+1-rank={c['rank_plus_min']}..{c['rank_plus_max']}")
            parts.append(f"-1-rank={c['rank_minus_min']}..{c['rank_minus_max']}")
        if "agreement" in c:
            parts.append(f"frame_vs_metric={c['agreement']:.3g}")
        lines.append(f"  {'PASS' if c['pass'] else 'FAIL'} {name}: " + " ".join(parts))
    return "\n".join(lines) + "\n"


def cmd_structures(args) -> int:
    key = args.atlas.lower()
    if key not in ATLAS_FRAMES and args.atlas not in FRAME_NAMES:
        raise UsageError(f"no built-in frame for atlas {args.atlas!r}; known: {', '.join(ATLAS_FRAMES)}")
    for name in args.names:
        if name not in STRUCTURE_NAMES:
            raise UsageError(f"unknown structure {name!r}; known: {', '.join(STRUCTURE_NAMES)}")
    cfg = _resolve_config(args)
    frame = builtin_frame(ATLAS_FRAMES.get(key, args.atlas))
    grid = cfg.get("grid", {})
    tol = Tolerances(**cfg.get("tolerances", {}))
    ppc = int(grid.get("points_per_chart", 1000))
    report = verify_frame(
        frame, None, tol,
        structures=args.names,
        seed=int(cfg.get("seed", 0xC0FFEE)),
        points_per_chart=min(ppc, 1000) if args.grid is None else ppc,
        random_inputs=int(grid.get("random_inputs", 10)),
    )
    if args.format == "json":
        _emit(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", args.out)
    else:
        _emit(format_structures(report), args.out)
    return 0 if all(c["pass"] for c in report.structures.values()) else 1


def cmd_report(args) -> int:
    cfg = _resolve_config(args)
    reports = run_suite(cfg)
    doc = {
        "classification": [row.to_dict() for row in z2.classify_table(args.n_max)],
        "verification": [r.to_dict() for r in reports],
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return 0 if all(r.passed for r in reports) else 1


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--seed", type=_u64, help="random seed (overrides the config)")
    common.add_argument("--tol-det", type=float, dest="tol_det")
    common.add_argument("--tol-overlap", type=float, dest="tol_overlap")
    common.add_argument("--tol-op", type=float, dest="tol_op")
    common.add_argument("--grid", type=int, help="sample points per chart")

    p = argparse.ArgumentParser(prog="genbundle", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sw", parents=[common], help="Stiefel-Whitney classes of T RP^n and TT RP^n")
    s.add_argument("n", type=_dimension)
    s.add_argument("--format", choices=["table", "json"], default="table")
    s.set_defaults(func=cmd_sw)

    s = sub.add_parser("classify", parents=[common], help="sphere / projective space summary table")
    s.add_argument("n_max", type=_dimension)
    s.add_argument("--format", choices=["table", "json", "csv"], default="table")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("verify", parents=[common], help="run a verification suite")
    s.add_argument("config", nargs="?", help="JSON config (default: $GENBUNDLE_CONFIG, then built-in)")
    s.add_argument("--format", choices=["json", "csv", "table"], default="json")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("structures", parents=[common], help="check generalized structures on a built-in atlas")
    s.add_argument("atlas")
    s.add_argument("names", nargs="+", metavar="structure")
    s.add_argument("--config")
    s.add_argument("--format", choices=["table", "json"], default="table")
    s.set_defaults(func=cmd_structures)

    s = sub.add_parser("report", parents=[common], help="classification plus verification as one JSON document")
    s.add_argument("config", nargs="?")
    s.add_argument("--n-max", type=_dimension, default=7, dest="n_max")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        sys.stderr.write(f"genbundle {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

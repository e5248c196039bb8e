"""Command-line interface: ``logvol <command> [options]``.

Every command writes one JSON document (to ``--out`` or stdout) holding
the command name, the fully resolved configuration and the result. Exit
status is 0 on success, 1 for usage or input errors and 2 when a numerical
result misses its tolerance (or, for ``verify``, when a check fails).
"""

from __future__ import annotations

import argparse
import math
import re
import subprocess
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .denoise import DenoiseSpec, run_denoise
from .duality import (
    duality_check,
    full_sign_vectors,
    reparam_map_f,
    sample_sphere,
    sign_map_delta,
)
from .figures import FIGURE1_X1, figure1
from .geometry import embed_phi
from .io import InputError, check_lengths, dumps, load_design, load_response, write_table, write_text
from .linalg import as_array, degeneracy_report
from .selection import CRITERIA, consistency_experiment, select
from .volume import IntegrationConfig, NotConvergedError, integrate_volume

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

FULL_SCALE = {"width": 201, "height": 151}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _common(p, tol: float | None = None):
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads where supported")
    p.add_argument("--out", type=Path, help="write JSON here instead of stdout")
    if tol is not None:
        p.add_argument("--tol", type=float, default=tol, help=f"relative tolerance (default {tol:g})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="logvol", description="Fisher information volumes of logistic regression models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("volume", help="integrate the volume of one design")
    p.add_argument("--design", type=Path, required=True, help="design CSV")
    p.add_argument("--max-evals", type=int, default=IntegrationConfig.max_evals)
    p.add_argument("--mc-samples", type=int, default=IntegrationConfig.mc_samples)
    _common(p, tol=IntegrationConfig.rel_tol)
    p.set_defaults(func=cmd_volume)

    p = sub.add_parser("select", help="rank candidate designs for one response")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--designs", type=Path, help="directory of candidate design CSVs")
    src.add_argument("--design", type=Path, action="append", help="candidate design CSV (repeatable)")
    src.add_argument("--simulate", type=_positive_int, metavar="REPLICATES",
                     help="run the nested-model consistency simulation instead")
    p.add_argument("--response", type=Path, help="response file, one 0/1 per line")
    p.add_argument("--criterion", choices=CRITERIA, default="approx-volume")
    p.add_argument("--zero-row-tol", type=float, default=0.0,
                   help="rows with all non-intercept entries within this are zero rows")
    p.add_argument("--n", type=_positive_int, default=500, help="sample size for --simulate")
    _common(p, tol=IntegrationConfig.rel_tol)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("duality", help="distances between sphere faces and boundary faces")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--design", type=Path, help="design CSV")
    src.add_argument("--demo", type=_float_list, metavar="Q,N",
                     help="seeded generic demo design with q columns and n rows")
    p.add_argument("--radii", type=_float_list, default=[10.0, 100.0, 1000.0])
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--samples", type=_positive_int, default=20000)
    p.add_argument("--csv", type=Path, help="write the sampled point clouds here")
    _common(p)
    p.set_defaults(func=cmd_duality)

    d = DenoiseSpec()
    p = sub.add_parser("denoise-sim", help="reduced-scale image denoising simulation")
    p.add_argument("--width", type=_positive_int, default=d.width)
    p.add_argument("--height", type=_positive_int, default=d.height)
    p.add_argument("--noise-rate", type=float, default=d.noise_rate)
    p.add_argument("--seg-length", type=float, default=d.seg_length)
    p.add_argument("--thickness", type=float, default=d.thickness)
    p.add_argument("--orientations", type=_positive_int, default=d.orientations)
    p.add_argument("--stride", type=_positive_int, default=d.stride)
    p.add_argument("--coverage", type=float, default=d.coverage)
    p.add_argument("--lambdas", type=_positive_int, default=d.n_lambdas)
    p.add_argument("--lambda-min-ratio", type=float, default=d.lambda_min_ratio)
    p.add_argument("--folds", type=_positive_int, default=d.folds)
    p.add_argument("--full-scale", action="store_true",
                   help=f"use a {FULL_SCALE['height']}x{FULL_SCALE['width']} image (slow)")
    p.add_argument("--images", type=Path, help="write signal, noisy and fitted images here as CSV")
    _common(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("figure1", help="embedded curves and volumes for X = [x1; 1]")
    p.add_argument("--x1", type=_float_list, default=list(FIGURE1_X1))
    p.add_argument("--points", type=_positive_int, default=401)
    p.add_argument("--csv", type=Path, help="write the curves here")
    _common(p, tol=IntegrationConfig.rel_tol)
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("verify", help="run the test suite shipped with the source tree")
    p.add_argument("--tests", type=Path, help="test directory (default: the source tree's tests/)")
    p.add_argument("--acceptance", action="store_true", help="include the long acceptance checks")
    _common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in cfg.items()}


def _emit(args, result) -> None:
    text = dumps({"command": args.command, "config": _config(args), "result": result})
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_text(args.out, text)


def _volume_cfg(args) -> IntegrationConfig:
    kw = {"rel_tol": args.tol, "seed": args.seed}
    if hasattr(args, "max_evals"):
        kw.update(max_evals=args.max_evals, mc_samples=args.mc_samples)
    cfg = IntegrationConfig(**kw)
    args.integration = asdict(cfg)
    return cfg


def _volume_dict(v) -> dict:
    d = v.to_dict()
    d["tail_kind"] = v.tail_kind
    d["note"] = v.note
    return d


def cmd_volume(args) -> int:
    X = load_design(args.design)
    cfg = _volume_cfg(args)
    v = integrate_volume(X, cfg)
    _emit(args, _volume_dict(v))
    return EXIT_OK if v.converged else EXIT_NUMERIC


def _candidate_files(args) -> list[Path]:
    if args.designs is not None:
        if not args.designs.is_dir():
            raise InputError(f"{args.designs}: not a directory")
        files = sorted(args.designs.glob("*.csv"))
        if not files:
            raise InputError(f"{args.designs}: no .csv files")
        return files
    return list(args.design)


def cmd_select(args) -> int:
    cfg = _volume_cfg(args)
    if args.simulate is not None:
        winners = consistency_experiment(args.simulate, args.n, args.seed, args.criterion)
        counts = {str(q): winners.count(q) for q in sorted(set(winners))}
        _emit(args, {"replicates": args.simulate, "winners": winners, "counts": counts})
        return EXIT_OK
    if args.response is None:
        raise UsageError("logvol select: --response is required unless --simulate is given")
    cands = [(f.stem, load_design(f)) for f in _candidate_files(args)]
    y = load_response(args.response)
    for name, X in cands:
        try:
            check_lengths(X.n, y)
        except InputError as exc:
            raise InputError(f"candidate {name}: {exc}") from None
    ranking = select(cands, y, args.criterion, threads=args.threads,
                     zero_row_tol=args.zero_row_tol, volume_cfg=cfg)
    keys = ("name", "q", "n0", "fit_term", "complexity_term", "total", "separated")
    table = [{k: getattr(s, k) for k in keys} for s in ranking]
    _emit(args, {"criterion": args.criterion, "ranking": table})
    return EXIT_OK


def _demo_design(spec, seed: int) -> np.ndarray:
    if len(spec) != 2 or any(v != int(v) or v < 1 for v in spec):
        raise UsageError("logvol duality: --demo expects two positive integers Q,N")
    q, n = int(spec[0]), int(spec[1])
    if n < q:
        raise UsageError("logvol duality: --demo needs N >= Q")
    rng = np.random.default_rng(seed)
    while True:
        X = 3.0 * rng.standard_normal((n, q))
        if degeneracy_report(X).is_generic:
            return X


def cmd_duality(args) -> int:
    if not 0 < args.delta < math.pi / 2:
        raise UsageError("logvol duality: --delta must lie in (0, pi/2)")
    X = as_array(load_design(args.design)) if args.design is not None else _demo_design(args.demo, args.seed)
    full = full_sign_vectors(X)
    reports = duality_check(X, args.radii, args.delta, args.samples, args.seed)
    seen = {r.s for r in reports}
    # full-sign faces that no radius sampled still get reported, as empty
    missing = [s for s in full if s not in seen]
    if missing:
        reports += duality_check(X, args.radii, args.delta, args.samples, args.seed, faces=missing)
    reports.sort(key=lambda r: (r.s, r.r))
    result = {
        "n": int(X.shape[0]),
        "q": int(X.shape[1]),
        "design": X,
        "full_sign_faces": [list(s) for s in full],
        "full_sign_face_count": len(full),
        "faces": reports,
    }
    if args.csv is not None:
        _write_clouds(args, X)
    _emit(args, result)
    return EXIT_OK


def _write_clouds(args, X) -> None:
    n, q = X.shape
    header = (["r"] + [f"s{i}" for i in range(n)] + [f"beta{j}" for j in range(q)]
              + [f"xi{i}" for i in range(n)] + [f"eta{j}" for j in range(q)])
    rows = []
    for r in args.radii:
        B = sample_sphere(X, float(r), args.samples, args.delta, args.seed)
        S = sign_map_delta(X, B, args.delta)
        xi, eta = embed_phi(X, B), reparam_map_f(X, B)
        for k in range(len(B)):
            rows.append([float(r)] + [int(v) for v in S[k]] + [float(v) for v in B[k]]
                        + [float(v) for v in xi[k]] + [float(v) for v in eta[k]])
    write_table(args.csv, header, rows)


def cmd_denoise(args) -> int:
    if args.full_scale:
        args.width, args.height = FULL_SCALE["width"], FULL_SCALE["height"]
        warnings.warn("paper-scale denoising can take hours", RuntimeWarning, stacklevel=2)
    try:
        spec = DenoiseSpec(
            width=args.width, height=args.height, noise_rate=args.noise_rate,
            seg_length=args.seg_length, thickness=args.thickness, orientations=args.orientations,
            stride=args.stride, coverage=args.coverage, seed=args.seed, n_lambdas=args.lambdas,
            lambda_min_ratio=args.lambda_min_ratio, folds=args.folds,
        )
    except ValueError as exc:
        raise UsageError(f"logvol denoise-sim: {exc}") from None
    res, images = run_denoise(spec, return_images=True)
    if args.images is not None:
        rows = []
        for name, img in images.items():
            for (i, j), v in np.ndenumerate(img):
                rows.append([name, i, j, float(v)])
        write_table(args.images, ["image", "row", "col", "value"], rows)
    _emit(args, res)
    return EXIT_OK


def cmd_figure1(args) -> int:
    cfg = _volume_cfg(args)
    rows, volumes = figure1(args.x1, args.points, cfg)
    if args.csv is not None:
        write_table(args.csv, ["x1", "beta", "xi1", "xi2"], rows)
    curves = []
    for x1 in args.x1:
        pts = [r for r in rows if r[0] == float(x1)]
        curves.append({"x1": x1, "points": len(pts), "start": list(pts[0][2:]), "end": list(pts[-1][2:])})
    vols = [dict(x1=x1, **_volume_dict(v)) for x1, v in volumes]
    _emit(args, {"curves": curves, "volumes": vols})
    return EXIT_OK if all(v.converged for _, v in volumes) else EXIT_NUMERIC


_COUNT = re.compile(r"(\d+) (passed|failed|errors?|skipped|xfailed|xpassed|deselected)")


def cmd_verify(args) -> int:
    tests = args.tests or Path(__file__).resolve().parents[2] / "tests"
    if not tests.is_dir():
        raise InputError(f"{tests}: test directory not found; pass --tests")
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(tests)]
    if not args.acceptance:
        cmd += ["--ignore", str(tests / "test_acceptance.py")]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    tail = proc.stdout.strip().splitlines()[-1:] or [""]
    counts = {k.rstrip("s") if k.startswith("error") else k: int(v) for v, k in _COUNT.findall(tail[0])}
    args.tests = tests
    _emit(args, {"pytest_exit_status": proc.returncode, "counts": counts})
    if proc.returncode != 0:
        sys.stderr.write(proc.stdout[-4000:])
    return EXIT_OK if proc.returncode == 0 else EXIT_NUMERIC


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except (InputError, OSError) as exc:
        sys.stderr.write(f"logvol: {exc}\n")
        return EXIT_USAGE
    except NotConvergedError as exc:
        sys.stderr.write(f"logvol: {exc}\n")
        return EXIT_NUMERIC
    except ValueError as exc:
        sys.stderr.write(f"logvol: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

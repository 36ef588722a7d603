"""Command-line front end: reproducible feasibility checks, scans, exports.

Every run echoes its fully resolved configuration to stderr as one JSON
line, so any result file or verdict can be traced back to the exact flags
that produced it. Exit codes: 0 feasible/success, 2 infeasible, 3 unknown,
64 usage error, 74 I/O error, 70 internal failure.

The LP backend is selected by the POLARIZE_SOLVER environment variable
(see lp module for the accepted names).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, PolarizeError
from .hierarchy import (
    FAMILY_FULL,
    FAMILY_LITE,
    PI_BY_NAME,
    HierarchySpec,
    VARIANT_PLUS,
    VARIANT_POLARIZED,
    build_lp,
    problem_from_json,
)
from .lp import SolveStatus, solve
from .mps import write_lp_text, write_mps
from .moments import count_indices
from .nmf import (
    check_point,
    matrix_from_array,
    nested_rectangles_matrix,
    nmf_problem,
    scan_region,
    write_region_csv,
)

EXIT_FEASIBLE = 0
EXIT_INFEASIBLE = 2
EXIT_UNKNOWN = 3
EXIT_USAGE = 64
EXIT_INTERNAL = 70
EXIT_IO = 74

_FAMILY_NAMES = {"lite": FAMILY_LITE, "full": FAMILY_FULL}
_STATUS_EXIT = {
    SolveStatus.FEASIBLE.value: EXIT_FEASIBLE,
    SolveStatus.INFEASIBLE.value: EXIT_INFEASIBLE,
    SolveStatus.UNKNOWN.value: EXIT_UNKNOWN,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation, echoed on stderr for reproducibility."""

    subcommand: str
    level: int = 3
    variant: str = VARIANT_PLUS
    pi: str = "id"
    family: str = "lite"
    rank: int = 3
    a: Optional[float] = None
    b: Optional[float] = None
    grid: int = 64
    bisect_tol: float = 1e-3
    feas_tol: float = 1e-7
    matrix: Optional[str] = None
    problem: Optional[str] = None
    out: Optional[str] = None
    format: str = "mps"
    workers: int = 1
    seed: int = 0


class _UsageExit(Exception):
    def __init__(self, message):
        super().__init__(message)


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; we need 64."""

    def error(self, message):
        raise _UsageExit(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="polarize", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, with_spec=True):
        if with_spec:
            p.add_argument("--n", type=int, default=3, dest="level",
                           help="hierarchy level (default 3)")
            p.add_argument("--variant", choices=[VARIANT_PLUS, VARIANT_POLARIZED],
                           default=VARIANT_PLUS)
            p.add_argument("--pi", choices=["id", "hs", "matrix"], default="id",
                           help="polarization map for the polarized variant")
            p.add_argument("--family", choices=["lite", "full"], default="lite")
        p.add_argument("--feas-tol", type=float, default=1e-7)

    p_check = sub.add_parser("check", help="solve one nested-rectangles point")
    p_check.add_argument("--a", type=float, required=True)
    p_check.add_argument("--b", type=float, required=True)
    p_check.add_argument("--rank", type=int, default=3)
    common(p_check)

    p_scan = sub.add_parser("scan", help="classify a grid and bisect the boundary")
    p_scan.add_argument("--grid", type=int, default=64)
    p_scan.add_argument("--bisect-tol", type=float, default=1e-3)
    p_scan.add_argument("--rank", type=int, default=3)
    p_scan.add_argument("--out", help="CSV destination (default stdout)")
    p_scan.add_argument("--workers", type=int, default=1)
    common(p_scan)

    p_nmf = sub.add_parser("nmf", help="feasibility verdict for a matrix file")
    p_nmf.add_argument("--matrix", required=True,
                       help='JSON file {"rows","cols","entries"}')
    p_nmf.add_argument("--rank", type=int, required=True)
    common(p_nmf)

    p_export = sub.add_parser("export", help="write the LP without solving")
    p_export.add_argument("--a", type=float)
    p_export.add_argument("--b", type=float)
    p_export.add_argument("--rank", type=int, default=3)
    p_export.add_argument("--matrix")
    p_export.add_argument("--problem", help="problem JSON file")
    p_export.add_argument("--format", choices=["mps", "lp"], default="mps")
    p_export.add_argument("--out", required=True)
    common(p_export)

    p_count = sub.add_parser("count", help="symmetric moment variable count")
    p_count.add_argument("--n", type=int, default=3, dest="level")
    p_count.add_argument("--rank", type=int, default=3)
    p_count.add_argument("--matrix")
    p_count.add_argument("--problem")
    return parser


def _resolve(args) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    data = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    cfg = RunConfig(**data)
    if cfg.level < 1:
        raise _UsageExit(f"level must be >= 1, got {cfg.level}")
    if cfg.variant == VARIANT_POLARIZED and cfg.level < 2:
        raise _UsageExit("polarized variant requires --n >= 2")
    if cfg.subcommand in ("check",) and not (
        0.0 <= cfg.a <= 1.0 and 0.0 <= cfg.b <= 1.0
    ):
        raise _UsageExit("--a and --b must lie in [0, 1]")
    if cfg.rank < 1:
        raise _UsageExit("--rank must be >= 1")
    if cfg.subcommand == "scan":
        if cfg.grid < 2:
            raise _UsageExit(f"--grid must be >= 2, got {cfg.grid}")
        if cfg.bisect_tol <= 0:
            raise _UsageExit("--bisect-tol must be positive")
    return cfg


def _echo_config(cfg: RunConfig):
    print("config: " + json.dumps(dataclasses.asdict(cfg), sort_keys=True),
          file=sys.stderr)


def _spec(cfg: RunConfig) -> HierarchySpec:
    return HierarchySpec(
        level=cfg.level,
        variant=cfg.variant,
        pi=PI_BY_NAME[cfg.pi],
        family=_FAMILY_NAMES[cfg.family],
    )


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise _IOExit(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise _IOExit(f"{path} is not valid JSON: {exc}")


class _IOExit(Exception):
    pass


def _problem_from_flags(cfg: RunConfig):
    """Instance selection shared by export and count."""
    if cfg.problem:
        data = _load_json(cfg.problem)
        try:
            return problem_from_json(data)
        except (PolarizeError, KeyError, TypeError, ValueError) as exc:
            raise _UsageExit(f"bad problem file {cfg.problem}: {exc}")
    if cfg.matrix:
        data = _load_json(cfg.matrix)
        try:
            mat = matrix_from_array(
                np.array(data["entries"], dtype=float).reshape(
                    data["rows"], data["cols"]
                )
            )
        except (PolarizeError, KeyError, TypeError, ValueError) as exc:
            raise _UsageExit(f"bad matrix file {cfg.matrix}: {exc}")
        return nmf_problem(mat, cfg.rank)
    a = cfg.a if cfg.a is not None else 0.0
    b = cfg.b if cfg.b is not None else 0.0
    inst = nested_rectangles_matrix(a, b)
    return nmf_problem(inst.M, cfg.rank, name=f"rect-a{a}-b{b}")


def _cmd_check(cfg: RunConfig) -> int:
    rec = check_point(
        cfg.a, cfg.b, cfg.level,
        variant=cfg.variant,
        pi=PI_BY_NAME[cfg.pi],
        family=_FAMILY_NAMES[cfg.family],
        rank=cfg.rank,
        feas_tol=cfg.feas_tol,
    )
    print(json.dumps(dataclasses.asdict(rec)))
    return _STATUS_EXIT[rec.status]


def _cmd_scan(cfg: RunConfig) -> int:
    records = scan_region(
        cfg.level,
        variant=cfg.variant,
        pi=PI_BY_NAME[cfg.pi],
        family=_FAMILY_NAMES[cfg.family],
        grid=cfg.grid,
        bisect_tol=cfg.bisect_tol,
        rank=cfg.rank,
        workers=cfg.workers,
    )
    if cfg.out:
        try:
            write_region_csv(records, cfg.out)
        except OSError as exc:
            raise _IOExit(f"cannot write {cfg.out}: {exc}")
        print(f"wrote {len(records)} records to {cfg.out}", file=sys.stderr)
    else:
        write_region_csv(records, "/dev/stdout")
    return 0


def _cmd_nmf(cfg: RunConfig) -> int:
    problem = _problem_from_flags(cfg)
    t0 = time.perf_counter()
    lp = build_lp(problem, _spec(cfg))
    outcome = solve(lp, feas_tol=cfg.feas_tol)
    verdict = {
        "matrix": cfg.matrix,
        "rank": cfg.rank,
        "level": cfg.level,
        "variant": cfg.variant,
        "pi": cfg.pi,
        "family": cfg.family,
        "status": outcome.status.value,
        "solve_seconds": round(time.perf_counter() - t0, 3),
    }
    if outcome.status is SolveStatus.INFEASIBLE:
        verdict["certified"] = outcome.certificate is not None
    if outcome.diagnostic:
        verdict["diagnostic"] = outcome.diagnostic
    print(json.dumps(verdict))
    return _STATUS_EXIT[outcome.status.value]


def _cmd_export(cfg: RunConfig) -> int:
    problem = _problem_from_flags(cfg)
    lp = build_lp(problem, _spec(cfg))
    text = write_mps(lp) if cfg.format == "mps" else write_lp_text(lp)
    try:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOExit(f"cannot write {cfg.out}: {exc}")
    print(
        f"wrote {lp.num_variables} columns, {lp.num_rows} rows to {cfg.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_count(cfg: RunConfig) -> int:
    problem = _problem_from_flags(cfg)
    print(count_indices(cfg.level, problem.spaces))
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "scan": _cmd_scan,
    "nmf": _cmd_nmf,
    "export": _cmd_export,
    "count": _cmd_count,
}


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _resolve(args)
    except _UsageExit as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _echo_config(cfg)
    try:
        return _COMMANDS[cfg.subcommand](cfg)
    except _UsageExit as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _IOExit as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PolarizeError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # keep the contract: never a bare traceback
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Nonnegative-rank feasibility instances and the nested-rectangles experiment.

A nonnegative matrix A has nonnegative rank <= k iff A = LR with L, R
entrywise nonnegative and inner dimension k. After normalizing columns, L
and R can be taken left-stochastic, which makes both factor spaces compact
polytopes and the constraint LR - A_tilde = 0 a multi-affine map: exactly
the shape the hierarchy module relaxes. An infeasible relaxation at any
level certifies rank(A)_+ > k.

The 4x4 family M(a,b) parametrizes a square with an inscribed rectangle of
half-widths a and b; a rank-3 factorization exists iff a triangle fits
between them, which happens iff (1+a)(1+b) <= 2. That analytic criterion is
the ground truth the LP verdicts are tested against.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, InvalidShape, ZeroColumn, ZeroRow
from .hierarchy import (
    HierarchySpec,
    PI_IDENTITY,
    Problem,
    VARIANT_PLUS,
    affine_map,
    build_lp,
)
from .lp import SolveStatus, solve
from .spaces import make_left_stochastic_space


@dataclass(frozen=True)
class NonnegMatrix:
    """Dense nonnegative matrix, entries row-major."""

    rows: int
    cols: int
    entries: tuple[float, ...]

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidShape(f"bad shape {self.rows}x{self.cols}")
        if len(self.entries) != self.rows * self.cols:
            raise InvalidShape(
                f"{len(self.entries)} entries for {self.rows}x{self.cols}"
            )
        if any(e < 0 for e in self.entries):
            raise InvalidShape("entries must be nonnegative")
        object.__setattr__(self, "entries", tuple(float(e) for e in self.entries))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.entries).reshape(self.rows, self.cols)


def matrix_from_array(arr) -> NonnegMatrix:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 2:
        raise InvalidShape(f"need a 2d array, got ndim {arr.ndim}")
    return NonnegMatrix(arr.shape[0], arr.shape[1], tuple(arr.ravel()))


def normalize_to_stochastic(A: NonnegMatrix) -> tuple[NonnegMatrix, np.ndarray]:
    """Scale columns to sum 1; returns (A_tilde, D) with A_tilde = A @ diag(D).

    Column scaling leaves nonnegative rank unchanged, so certificates for
    A_tilde transfer to A.
    """
    arr = A.array
    row_sums = arr.sum(axis=1)
    if np.any(row_sums == 0.0):
        raise ZeroRow(f"row {int(np.argmin(row_sums != 0))} is identically zero")
    col_sums = arr.sum(axis=0)
    if np.any(col_sums == 0.0):
        raise ZeroColumn(f"column {int(np.argmin(col_sums != 0))} is identically zero")
    d = 1.0 / col_sums
    return matrix_from_array(arr * d), d


def nmf_problem(A: NonnegMatrix, k: int, name: Optional[str] = None) -> Problem:
    """Feasibility problem: A (column-normalized) equals L @ R with
    L left-stochastic n x k and R left-stochastic k x m.

    The last row of each stochastic factor is eliminated
    (L_{n,j} = 1 - sum of the column above, same for R), so the constraint
    map only references free coordinates. Output (i,j) of f is
    sum_l L_il R_lj - A_tilde_ij, with output_shape (n, m).
    """
    if k < 1:
        raise InvalidShape(f"rank bound must be >= 1, got {k}")
    a_tilde, _ = normalize_to_stochastic(A)
    n, m = A.rows, A.cols
    left = make_left_stochastic_space(n, k, letter_prefix="L")
    right = make_left_stochastic_space(k, m, letter_prefix="R")
    arr = a_tilde.array

    # expressions for every entry, eliminated rows substituted:
    # entry (i, l) of L -> {coord: coeff} plus optional constant under None
    def stoch_exprs(rows, cols):
        exprs = []
        for i in range(rows):
            row = []
            for j in range(cols):
                if i < rows - 1:
                    row.append({i * cols + j: 1.0})
                else:
                    expr = {None: 1.0}
                    for ii in range(rows - 1):
                        expr[ii * cols + j] = -1.0
                    row.append(expr)
            exprs.append(row)
        return exprs

    l_exprs = stoch_exprs(n, k)
    r_exprs = stoch_exprs(k, m)

    outputs = []
    for i in range(n):
        for j in range(m):
            acc: dict[tuple, float] = {}
            for l in range(k):
                for cl, vl in l_exprs[i][l].items():
                    for cr, vr in r_exprs[l][j].items():
                        key = (cl, cr)
                        acc[key] = acc.get(key, 0.0) + vl * vr
            const_key = (None, None)
            acc[const_key] = acc.get(const_key, 0.0) - arr[i, j]
            outputs.append({key: v for key, v in acc.items() if v != 0.0})

    f = affine_map(2, outputs, output_shape=(n, m))
    return Problem(
        spaces=(left, right),
        constraint_map=f,
        name=name or f"nmf-{n}x{m}-k{k}",
    )


def nested_rectangles_matrix(a: float, b: float) -> "NestedRectanglesInstance":
    """The 4x4 slack-matrix family: columns stochastic, parameters in [0,1]."""
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise DomainError(f"(a, b) = ({a}, {b}) outside the unit square")
    m = 0.25 * np.array(
        [
            [1 - a, 1 + a, 1 - b, 1 + b],
            [1 + a, 1 - a, 1 - b, 1 + b],
            [1 + a, 1 - a, 1 + b, 1 - b],
            [1 - a, 1 + a, 1 + b, 1 - b],
        ]
    )
    return NestedRectanglesInstance(a=a, b=b, M=matrix_from_array(m))


@dataclass(frozen=True)
class NestedRectanglesInstance:
    a: float
    b: float
    M: NonnegMatrix

    def __post_init__(self):
        cols = self.M.array.sum(axis=0)
        if not np.allclose(cols, 1.0, atol=1e-12):
            raise InvalidShape("columns must sum to 1")


def analytic_feasible(a: float, b: float) -> bool:
    """Ground truth for the family: a rank-3 factorization exists iff the
    triangle fits, iff (1+a)(1+b) <= 2."""
    return (1.0 + a) * (1.0 + b) <= 2.0


@dataclass(frozen=True)
class RegionRecord:
    a: float
    b: float
    level: int
    variant: str
    pi: str
    family: str
    status: str
    solve_seconds: float


def check_point(
    a: float,
    b: float,
    level: int,
    variant: str = VARIANT_PLUS,
    pi=PI_IDENTITY,
    family: str = "lite",
    rank: int = 3,
    feas_tol: float = 1e-7,
    backend: Optional[str] = None,
) -> RegionRecord:
    """Build and solve the level-n LP for M(a,b) at the given rank bound.

    Status semantics: infeasible is a certificate that no rank-`rank`
    nonnegative factorization exists; feasible only means undetermined at
    this level.
    """
    spec = HierarchySpec(level=level, variant=variant, pi=pi, family=family)
    inst = nested_rectangles_matrix(a, b)
    problem = nmf_problem(inst.M, rank, name=f"rect-a{a}-b{b}")
    t0 = time.perf_counter()
    lp = build_lp(problem, spec)
    outcome = solve(lp, feas_tol=feas_tol, backend=backend)
    elapsed = time.perf_counter() - t0
    return RegionRecord(
        a=a,
        b=b,
        level=level,
        variant=variant,
        pi=pi.kind,
        family=family,
        status=outcome.status.value,
        solve_seconds=elapsed,
    )


def _column_statuses(records: Sequence[RegionRecord]) -> list[tuple[float, str]]:
    return sorted((r.b, r.status) for r in records)


def _monotone_in_b(column: Sequence[tuple[float, str]]) -> bool:
    """Feasibility should only degrade as b grows (larger inner rectangle)."""
    seen_infeasible = False
    for _, status in column:
        if status == SolveStatus.INFEASIBLE.value:
            seen_infeasible = True
        elif status == SolveStatus.FEASIBLE.value and seen_infeasible:
            return False
    return True


def scan_region(
    level: int,
    variant: str = VARIANT_PLUS,
    pi=PI_IDENTITY,
    family: str = "lite",
    grid: int = 64,
    bisect_tol: float = 1e-3,
    rank: int = 3,
    workers: int = 1,
    backend: Optional[str] = None,
) -> list[RegionRecord]:
    """Classify a grid x grid lattice and bisect each a-column for the
    feasible/infeasible boundary in b.

    Bisection leans on monotonicity in b; each column's grid statuses are
    checked for it first and a violating column falls back to a uniform
    sweep at bisect_tol resolution instead of bisection. Unknown verdicts
    stop the affected bisection and stay in the records. Deterministic:
    records are sorted by (a, b, level, variant).
    """
    if grid < 2:
        raise InvalidShape(f"grid must be >= 2, got {grid}")
    if bisect_tol <= 0:
        raise InvalidShape("bisect_tol must be positive")
    avals = [i / (grid - 1) for i in range(grid)]
    bvals = avals

    def point(ab):
        return check_point(
            ab[0], ab[1], level, variant, pi, family, rank=rank, backend=backend
        )

    lattice = [(a, b) for a in avals for b in bvals]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(point, lattice))
    else:
        records = [point(ab) for ab in lattice]

    by_a: dict[float, list[RegionRecord]] = {}
    for rec in records:
        by_a.setdefault(rec.a, []).append(rec)

    extra: list[RegionRecord] = []
    for a in avals:
        column = _column_statuses(by_a[a])
        feas = [b for b, st in column if st == SolveStatus.FEASIBLE.value]
        infeas = [b for b, st in column if st == SolveStatus.INFEASIBLE.value]
        if not _monotone_in_b(column):
            # monotonicity failed: classify the whole column exhaustively
            steps = int(np.ceil(1.0 / bisect_tol))
            for i in range(steps + 1):
                b = i / steps
                if any(abs(b - rb) < 1e-12 for rb, _ in column):
                    continue
                extra.append(point((a, b)))
            continue
        if not feas or not infeas:
            continue  # boundary outside the open interval; nothing to bisect
        lo, hi = max(feas), min(infeas)
        while hi - lo > bisect_tol:
            mid = 0.5 * (lo + hi)
            rec = point((a, mid))
            extra.append(rec)
            if rec.status == SolveStatus.FEASIBLE.value:
                lo = mid
            elif rec.status == SolveStatus.INFEASIBLE.value:
                hi = mid
            else:
                break  # unknown: stop refining this column, keep the record

    records.extend(extra)
    records.sort(key=lambda r: (r.a, r.b, r.level, r.variant, r.pi))
    return records


def write_region_csv(records: Sequence[RegionRecord], path) -> None:
    """CSV with stable ordering and a fixed header; see RegionRecord fields."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["a", "b", "level", "variant", "pi", "family", "status", "solve_seconds"]
        )
        for r in records:
            writer.writerow(
                [r.a, r.b, r.level, r.variant, r.pi, r.family, r.status,
                 f"{r.solve_seconds:.3f}"]
            )


def read_region_csv(path) -> list[RegionRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                RegionRecord(
                    a=float(row["a"]),
                    b=float(row["b"]),
                    level=int(row["level"]),
                    variant=row["variant"],
                    pi=row["pi"],
                    family=row["family"],
                    status=row["status"],
                    solve_seconds=float(row["solve_seconds"]),
                )
            )
    return out

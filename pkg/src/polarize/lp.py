"""Solver-agnostic LP representation, solving, and certificate verification.

The backend is scipy's HiGGS family (``scipy.optimize.linprog``); which
method runs is chosen by the POLARIZE_SOLVER environment variable or a
``backend=`` argument. Verdicts are never passed through raw: feasible
points are re-checked row by row, and infeasible verdicts must come with a
Farkas ray that :func:`verify_certificate` accepts, otherwise the outcome is
downgraded to UNKNOWN. Certificates are synthesized by solving the Farkas
alternative system, so they are independent of the backend's own dual data.

Sign conventions for a certificate ray: every constraint row contributes
``mult * (coeffs, rhs)`` where mult must be >= 0 for ">=" rows, <= 0 for
"<=" rows, and free for "=" rows; bound multipliers are >= 0, with lower
bounds contributing ``(e_j, lo_j)`` and upper bounds the reversed
``(-e_j, -hi_j)``. A valid ray aggregates to the zero row with strictly
positive right-hand side, i.e. the contradiction 0 >= positive.
"""
from __future__ import annotations

import enum
import os
import time
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import BackendFailure, DimensionMismatch, InvalidShape

GE = ">="
LE = "<="
EQ = "="
_RELATIONS = (GE, LE, EQ)

DEFAULT_FEAS_TOL = 1e-7

# Large LPs from the hierarchy are badly degenerate; interior point beats
# simplex on them by orders of magnitude, and the crossover-to-basis step
# stalls for minutes on the feasible instances, so it is off by default.
# Points come back interior rather than vertex-quality; the row-by-row
# post-validation in solve() is what actually guards the verdict.
#
# Each backend is an escalation ladder: a later attempt runs only when the
# earlier one produced nothing that survives post-validation. Crossover-off
# points occasionally come back with a postsolve residual around 1e-4 that
# the backend still labels optimal (tighter ipm tolerances reproduce the
# same point, so they are no cure); the second rung reruns with crossover,
# which repairs exactly that, time-boxed so a stall cannot hang a scan.
DEFAULT_BACKEND = "highs-ipm"
_BACKENDS = {
    "highs-ipm": [
        dict(method="highs-ipm", options={"run_crossover": "off"}),
        dict(method="highs-ipm", options={"time_limit": 900.0}),
    ],
    "highs-ipm-cross": [dict(method="highs-ipm", options={})],
    "highs": [dict(method="highs", options={})],
    "highs-ds": [dict(method="highs-ds", options={})],
}


@dataclass(frozen=True)
class LinearRow:
    """One sparse constraint row: coeffs . x  <relation>  rhs."""

    coeffs: tuple[tuple[int, float], ...]
    relation: str
    rhs: float

    def __post_init__(self):
        if self.relation not in _RELATIONS:
            raise InvalidShape(f"bad relation {self.relation!r}")


@dataclass(frozen=True)
class LinearProgram:
    """Immutable LP instance with deterministic variable and row order."""

    variable_names: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]
    rows: tuple[LinearRow, ...]
    objective: tuple[tuple[int, float], ...] = ()
    objective_constant: float = 0.0
    name: str = "lp"

    def __post_init__(self):
        n = len(self.variable_names)
        if len(set(self.variable_names)) != n:
            raise InvalidShape("variable names must be unique")
        if len(self.bounds) != n:
            raise DimensionMismatch(
                f"{len(self.bounds)} bounds for {n} variables"
            )
        for j, _ in self.objective:
            if not 0 <= j < n:
                raise DimensionMismatch(f"objective references variable {j}")
        for row in self.rows:
            for j, _ in row.coeffs:
                if not 0 <= j < n:
                    raise DimensionMismatch(f"row references variable {j}")

    @property
    def num_variables(self) -> int:
        return len(self.variable_names)

    @property
    def num_rows(self) -> int:
        return len(self.rows)


class SolveStatus(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class FarkasRay:
    """Multipliers over (rows, lower bounds, upper bounds); see module docstring."""

    constraints: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


@dataclass(frozen=True)
class SolveOutcome:
    status: SolveStatus
    point: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    certificate: Optional[FarkasRay] = None
    diagnostic: str = ""
    solve_seconds: float = 0.0


def row_matrix(lp: LinearProgram) -> sparse.csr_matrix:
    """All rows stacked into a sparse matrix, in declaration order."""
    rows_i, cols, vals = [], [], []
    for r, row in enumerate(lp.rows):
        for j, v in row.coeffs:
            rows_i.append(r)
            cols.append(j)
            vals.append(v)
    return sparse.coo_matrix(
        (vals, (rows_i, cols)), shape=(lp.num_rows, lp.num_variables)
    ).tocsr()


def constraint_violations(lp: LinearProgram, x: Sequence[float]) -> np.ndarray:
    """Per-row violation (positive means violated), given a full assignment."""
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.num_variables,):
        raise DimensionMismatch(
            f"assignment has shape {x.shape}, expected ({lp.num_variables},)"
        )
    ax = row_matrix(lp) @ x
    out = np.empty(lp.num_rows)
    for r, row in enumerate(lp.rows):
        resid = ax[r] - row.rhs
        if row.relation == EQ:
            out[r] = abs(resid)
        elif row.relation == GE:
            out[r] = -resid
        else:
            out[r] = resid
    return out


def max_violation(lp: LinearProgram, x: Sequence[float]) -> float:
    """Worst violation over all rows and variable bounds (<= 0 means feasible)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (lp.num_variables,):
        raise DimensionMismatch(
            f"assignment has shape {x.shape}, expected ({lp.num_variables},)"
        )
    worst = 0.0 if lp.num_rows == 0 else float(np.max(constraint_violations(lp, x)))
    for xj, (lo, hi) in zip(x, lp.bounds):
        if np.isfinite(lo):
            worst = max(worst, lo - xj)
        if np.isfinite(hi):
            worst = max(worst, xj - hi)
    return worst


def _scipy_form(lp: LinearProgram):
    """Split rows into A_ub x <= b_ub and A_eq x = b_eq (>= rows negated)."""
    ub_r, ub_c, ub_v, b_ub = [], [], [], []
    eq_r, eq_c, eq_v, b_eq = [], [], [], []
    for row in lp.rows:
        if row.relation == EQ:
            r = len(b_eq)
            for j, v in row.coeffs:
                eq_r.append(r)
                eq_c.append(j)
                eq_v.append(v)
            b_eq.append(row.rhs)
        else:
            sign = 1.0 if row.relation == LE else -1.0
            r = len(b_ub)
            for j, v in row.coeffs:
                ub_r.append(r)
                ub_c.append(j)
                ub_v.append(sign * v)
            b_ub.append(sign * row.rhs)
    n = lp.num_variables
    A_ub = sparse.coo_matrix((ub_v, (ub_r, ub_c)), shape=(len(b_ub), n)).tocsr()
    A_eq = sparse.coo_matrix((eq_v, (eq_r, eq_c)), shape=(len(b_eq), n)).tocsr()
    c = np.zeros(n)
    for j, v in lp.objective:
        c[j] += v
    bounds = [(lo if np.isfinite(lo) else None, hi if np.isfinite(hi) else None)
              for lo, hi in lp.bounds]
    return c, A_ub, np.array(b_ub), A_eq, np.array(b_eq), bounds


def resolve_backend(backend: Optional[str] = None) -> str:
    name = backend or os.environ.get("POLARIZE_SOLVER", DEFAULT_BACKEND)
    if name not in _BACKENDS:
        raise BackendFailure(
            f"unknown backend {name!r}; available: {sorted(_BACKENDS)}"
        )
    return name


def _run_linprog(lp: LinearProgram, attempt: dict):
    c, A_ub, b_ub, A_eq, b_eq, bounds = _scipy_form(lp)
    with warnings.catch_warnings():
        # passthrough options (e.g. run_crossover) trigger an OptimizeWarning
        warnings.simplefilter("ignore")
        return linprog(
            c,
            A_ub=A_ub if A_ub.shape[0] else None,
            b_ub=b_ub if len(b_ub) else None,
            A_eq=A_eq if A_eq.shape[0] else None,
            b_eq=b_eq if len(b_eq) else None,
            bounds=bounds,
            method=attempt["method"],
            options=dict(attempt["options"]),
        )


def solve(
    lp: LinearProgram,
    feas_tol: float = DEFAULT_FEAS_TOL,
    backend: Optional[str] = None,
) -> SolveOutcome:
    """Solve and post-validate; see module docstring for the verdict contract.

    Walks the backend's escalation ladder until one attempt yields a verdict
    that survives validation (a point satisfying every row and bound, or a
    Farkas ray that verifies). Anything else is Unknown, with one diagnostic
    note per failed attempt.
    """
    backend = resolve_backend(backend)
    t0 = time.perf_counter()
    notes = []
    for attempt in _BACKENDS[backend]:
        try:
            res = _run_linprog(lp, attempt)
        except Exception as exc:  # backend crash -> Unknown, never a bogus verdict
            notes.append(f"backend failure: {exc}")
            continue

        if res.status == 0:
            x = np.asarray(res.x, dtype=float)
            worst = max_violation(lp, x)
            if worst > feas_tol:
                notes.append(
                    f"claimed-feasible point violates constraints by {worst:.3e}"
                )
                continue
            obj = float(res.fun) + lp.objective_constant
            return SolveOutcome(
                SolveStatus.FEASIBLE,
                point=x,
                objective_value=obj,
                solve_seconds=time.perf_counter() - t0,
            )

        if res.status == 2:
            ray = farkas_certificate(lp, backend=backend)
            if ray is not None and verify_certificate(lp, ray, tol=feas_tol):
                return SolveOutcome(
                    SolveStatus.INFEASIBLE,
                    certificate=ray,
                    solve_seconds=time.perf_counter() - t0,
                )
            notes.append(
                "backend reported infeasible but no verifiable Farkas ray was found"
            )
            continue

        notes.append(f"backend status {res.status}: {res.message}")

    return SolveOutcome(
        SolveStatus.UNKNOWN,
        diagnostic="; ".join(notes),
        solve_seconds=time.perf_counter() - t0,
    )


def farkas_certificate(
    lp: LinearProgram, backend: Optional[str] = None
) -> Optional[FarkasRay]:
    """Search for a Farkas ray by solving the alternative system.

    Multiplier variables: one per row (sign-constrained by relation), one per
    finite lower bound and one per finite upper bound (both nonnegative, the
    upper bound applied to the reversed inequality). Feasibility of
      aggregated row = 0,  aggregated rhs = 1
    is equivalent to infeasibility of ``lp``. Returns None when the
    alternative solve fails or is itself infeasible.
    """
    backend = resolve_backend(backend)
    m = lp.num_rows
    n = lp.num_variables
    lo = np.array([b[0] for b in lp.bounds])
    hi = np.array([b[1] for b in lp.bounds])
    fin_lo = [j for j in range(n) if np.isfinite(lo[j])]
    fin_hi = [j for j in range(n) if np.isfinite(hi[j])]
    nv = m + len(fin_lo) + len(fin_hi)

    # equalities: A^T y + u - w = 0 (one per primal variable), then rhs row = 1
    er, ec, ev = [], [], []
    for i, row in enumerate(lp.rows):
        for j, v in row.coeffs:
            er.append(j)
            ec.append(i)
            ev.append(v)
    for k, j in enumerate(fin_lo):
        er.append(j)
        ec.append(m + k)
        ev.append(1.0)
    for k, j in enumerate(fin_hi):
        er.append(j)
        ec.append(m + len(fin_lo) + k)
        ev.append(-1.0)
    for i, row in enumerate(lp.rows):
        er.append(n)
        ec.append(i)
        ev.append(row.rhs)
    for k, j in enumerate(fin_lo):
        er.append(n)
        ec.append(m + k)
        ev.append(lo[j])
    for k, j in enumerate(fin_hi):
        er.append(n)
        ec.append(m + len(fin_lo) + k)
        ev.append(-hi[j])
    A_eq = sparse.coo_matrix((ev, (er, ec)), shape=(n + 1, nv)).tocsr()
    b_eq = np.zeros(n + 1)
    b_eq[n] = 1.0

    mult_bounds = []
    for row in lp.rows:
        if row.relation == GE:
            mult_bounds.append((0, None))
        elif row.relation == LE:
            mult_bounds.append((None, 0))
        else:
            mult_bounds.append((None, None))
    mult_bounds += [(0, None)] * (len(fin_lo) + len(fin_hi))

    res = None
    for attempt in _BACKENDS[backend]:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = linprog(
                    np.zeros(nv),
                    A_eq=A_eq,
                    b_eq=b_eq,
                    bounds=mult_bounds,
                    method=attempt["method"],
                    options=dict(attempt["options"]),
                )
        except Exception:
            continue
        if res.status == 0:
            break
    if res is None or res.status != 0:
        return None

    y = np.asarray(res.x, dtype=float)
    lower = np.zeros(n)
    upper = np.zeros(n)
    lower[fin_lo] = y[m : m + len(fin_lo)]
    upper[fin_hi] = y[m + len(fin_lo) :]
    return FarkasRay(constraints=y[:m], lower=lower, upper=upper)


def verify_certificate(
    lp: LinearProgram, ray: FarkasRay, tol: float = DEFAULT_FEAS_TOL
) -> bool:
    """True iff the ray is a valid Farkas witness of infeasibility.

    The ray is normalized to unit max entry first, so ``tol`` is a relative
    criterion. Checks: sign pattern against relations, zero multipliers on
    infinite bounds, aggregated row within tol of zero, aggregated rhs
    strictly positive (greater than tol).
    """
    n = lp.num_variables
    y = np.asarray(ray.constraints, dtype=float)
    u = np.asarray(ray.lower, dtype=float)
    w = np.asarray(ray.upper, dtype=float)
    if y.shape != (lp.num_rows,) or u.shape != (n,) or w.shape != (n,):
        raise DimensionMismatch(
            f"ray shapes {y.shape}/{u.shape}/{w.shape} do not match "
            f"{lp.num_rows} rows and {n} variables"
        )

    scale = max(
        np.max(np.abs(y), initial=0.0),
        np.max(np.abs(u), initial=0.0),
        np.max(np.abs(w), initial=0.0),
    )
    if scale == 0.0:
        return False
    y = y / scale
    u = u / scale
    w = w / scale

    for yi, row in zip(y, lp.rows):
        if row.relation == GE and yi < -tol:
            return False
        if row.relation == LE and yi > tol:
            return False
    if np.any(u < -tol) or np.any(w < -tol):
        return False

    lo = np.array([b[0] for b in lp.bounds])
    hi = np.array([b[1] for b in lp.bounds])
    inf_lo = ~np.isfinite(lo)
    inf_hi = ~np.isfinite(hi)
    if np.any(np.abs(u[inf_lo]) > tol) or np.any(np.abs(w[inf_hi]) > tol):
        return False
    u = np.where(inf_lo, 0.0, u)
    w = np.where(inf_hi, 0.0, w)

    agg_row = row_matrix(lp).T @ y + u - w
    if np.max(np.abs(agg_row), initial=0.0) > tol:
        return False
    agg_rhs = float(
        sum(yi * row.rhs for yi, row in zip(y, lp.rows))
        + np.sum(u * np.where(inf_lo, 0.0, lo))
        - np.sum(w * np.where(inf_hi, 0.0, hi))
    )
    return agg_rhs > tol

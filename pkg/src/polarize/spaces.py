"""Compact convex polyhedral state spaces in H-representation.

A state space is a nonempty bounded polytope of ``free_dim`` coordinates,
described by affine facet functionals g(x) = constant + sum_i coeff[i]*x_i
that are nonnegative on the polytope. Every space has an implicit extra
"unit" letter that evaluates to 1 at every point, so the alphabet size is
``free_dim + 1``.

Construction validates compactness: each coordinate is minimized and
maximized over the facet system (2*free_dim small LP solves) and one probe
solve establishes nonemptiness. Instances are immutable afterwards.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionMismatch, EmptySpace, InvalidShape, UnboundedSpace

# Floating-point LP backends return slightly infeasible points; membership
# checks allow this much facet violation.
MEMBER_TOL = 1e-9


@dataclass(frozen=True)
class FacetFunctional:
    """Affine functional g(x) = constant + sum_i coefficients[i] * x_i, g >= 0 on the space."""

    constant: float
    coefficients: tuple[tuple[int, float], ...]

    def __post_init__(self):
        coeffs = self.coefficients
        if isinstance(coeffs, Mapping):
            coeffs = tuple(sorted(coeffs.items()))
        else:
            coeffs = tuple(sorted((int(i), float(c)) for i, c in coeffs))
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "constant", float(self.constant))
        if self.constant == 0.0 and all(c == 0.0 for _, c in coeffs):
            raise InvalidShape("facet functional is identically zero")

    def value(self, point: Sequence[float]) -> float:
        return self.constant + sum(c * point[i] for i, c in self.coefficients)

    def as_dict(self) -> dict[int, float]:
        return dict(self.coefficients)


def facet(constant: float, coefficients: Mapping[int, float] | None = None) -> FacetFunctional:
    """Convenience constructor accepting a coordinate->coefficient mapping."""
    return FacetFunctional(constant, tuple(sorted((coefficients or {}).items())))


@dataclass(frozen=True)
class StateSpace:
    """Validated compact polytope with named coordinates.

    Use :func:`make_polytope_space` or :func:`make_left_stochastic_space`
    rather than constructing directly; construction runs the compactness
    probes either way.
    """

    name: str
    free_dim: int
    facets: tuple[FacetFunctional, ...]
    letter_names: tuple[str, ...]
    probe: tuple[float, ...] = field(init=False, compare=False, repr=False)
    coordinate_ranges: tuple[tuple[float, float], ...] = field(
        init=False, compare=False, repr=False
    )

    def __post_init__(self):
        object.__setattr__(self, "facets", tuple(self.facets))
        object.__setattr__(self, "letter_names", tuple(self.letter_names))
        if self.free_dim < 0:
            raise InvalidShape(f"free_dim must be nonnegative, got {self.free_dim}")
        if len(self.letter_names) != self.free_dim:
            raise DimensionMismatch(
                f"expected {self.free_dim} letter names, got {len(self.letter_names)}"
            )
        if len(set(self.letter_names)) != len(self.letter_names):
            raise InvalidShape("letter_names must be pairwise distinct")
        for g in self.facets:
            for i, _ in g.coefficients:
                if not 0 <= i < self.free_dim:
                    raise DimensionMismatch(
                        f"facet references coordinate {i} outside free_dim={self.free_dim}"
                    )
        probe, ranges = _validate_compactness(self.name, self.free_dim, self.facets)
        object.__setattr__(self, "probe", probe)
        object.__setattr__(self, "coordinate_ranges", ranges)

    @property
    def alphabet_size(self) -> int:
        """Free coordinates plus the unit letter."""
        return self.free_dim + 1


def _facet_matrix(free_dim: int, facets: Sequence[FacetFunctional]):
    """Facet system as A_ub x <= b_ub rows (g(x) >= 0 becomes -coeffs.x <= constant)."""
    A = np.zeros((len(facets), free_dim))
    b = np.empty(len(facets))
    for r, g in enumerate(facets):
        for i, c in g.coefficients:
            A[r, i] = -c
        b[r] = g.constant
    return A, b


def _validate_compactness(name, free_dim, facets):
    if free_dim == 0:
        for g in facets:
            if g.constant < 0:
                raise EmptySpace(f"space {name!r}: constant facet {g.constant} < 0")
        return (), ()

    A, b = _facet_matrix(free_dim, facets)
    bounds = [(None, None)] * free_dim

    res = linprog(np.zeros(free_dim), A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if res.status == 2:
        raise EmptySpace(f"space {name!r}: facet system is infeasible")
    if res.status != 0:
        raise EmptySpace(f"space {name!r}: probe solve failed ({res.message})")
    probe = tuple(float(v) for v in res.x)

    ranges = []
    for i in range(free_dim):
        c = np.zeros(free_dim)
        c[i] = 1.0
        lo = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        hi = linprog(-c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        if lo.status == 3 or hi.status == 3:
            raise UnboundedSpace(f"space {name!r}: coordinate {i} is unbounded")
        if lo.status != 0 or hi.status != 0:
            raise EmptySpace(f"space {name!r}: bound solve failed on coordinate {i}")
        ranges.append((float(lo.fun), float(-hi.fun)))
    return probe, tuple(ranges)


def make_polytope_space(
    name: str,
    free_dim: int,
    facets: Iterable[FacetFunctional],
    letter_names: Sequence[str] | None = None,
) -> StateSpace:
    """Build a validated state space from facet functionals.

    ``letter_names`` defaults to x1..x<free_dim>. Raises UnboundedSpace /
    EmptySpace when the facet system fails compactness, DimensionMismatch on
    a bad letter_names length.
    """
    if letter_names is None:
        letter_names = tuple(f"x{i + 1}" for i in range(free_dim))
    return StateSpace(name, free_dim, tuple(facets), tuple(letter_names))


def make_left_stochastic_space(
    rows: int, cols: int, name: str | None = None, letter_prefix: str = "X"
) -> StateSpace:
    """Polytope of rows x cols column-stochastic matrices, last row eliminated.

    Free coordinates are the entries X_ij for i in [rows-1], j in [cols],
    row-major, named ``<prefix><i><j>`` with 1-based subscripts. Facets are
    X_ij >= 0 for every free entry followed by the eliminated entry's
    nonnegativity 1 - sum_i X_ij >= 0 for every column j.
    """
    if rows < 1 or cols < 1:
        raise InvalidShape(f"need rows >= 1 and cols >= 1, got {rows}x{cols}")
    if name is None:
        name = f"{letter_prefix}{rows}x{cols}"
    free_dim = (rows - 1) * cols
    sep = "" if rows <= 10 and cols <= 9 else "_"
    names = tuple(
        f"{letter_prefix}{i + 1}{sep}{j + 1}" for i in range(rows - 1) for j in range(cols)
    )
    facets = [facet(0.0, {k: 1.0}) for k in range(free_dim)]
    for j in range(cols):
        facets.append(facet(1.0, {i * cols + j: -1.0 for i in range(rows - 1)}))
    return StateSpace(name, free_dim, tuple(facets), names)


def evaluate_facets(space: StateSpace, point: Sequence[float]) -> np.ndarray:
    """Evaluate every facet functional at the point, in declaration order."""
    point = np.asarray(point, dtype=float)
    if point.shape != (space.free_dim,):
        raise DimensionMismatch(
            f"point has shape {point.shape}, space {space.name!r} expects ({space.free_dim},)"
        )
    return np.array([g.value(point) for g in space.facets])


def is_member(space: StateSpace, point: Sequence[float], tol: float = MEMBER_TOL) -> bool:
    """True iff all facets evaluate >= -tol at the point."""
    return bool(np.all(evaluate_facets(space, point) >= -tol))


def space_to_json(space: StateSpace) -> dict:
    """JSON form: facet coefficients keyed by letter name."""
    return {
        "name": space.name,
        "free_dim": space.free_dim,
        "letters": list(space.letter_names),
        "facets": [
            {
                "constant": g.constant,
                "coeffs": {space.letter_names[i]: c for i, c in g.coefficients},
            }
            for g in space.facets
        ],
    }


def space_from_json(data: Mapping) -> StateSpace:
    letters = tuple(data["letters"])
    pos = {ltr: i for i, ltr in enumerate(letters)}
    facets = []
    for f in data["facets"]:
        try:
            coeffs = {pos[ltr]: float(c) for ltr, c in f.get("coeffs", {}).items()}
        except KeyError as exc:
            raise DimensionMismatch(f"facet references unknown letter {exc}") from None
        facets.append(facet(float(f.get("constant", 0.0)), coeffs))
    return StateSpace(data["name"], int(data["free_dim"]), tuple(facets), letters)

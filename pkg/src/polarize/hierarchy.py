"""Level-n LP relaxations for multi-affine feasibility over products of polytopes.

A problem is: find points x_s, one per state space, with f(x_1, ..., x_m) = 0,
optionally minimizing an affine objective. The relaxation variables are the
symmetrized moments y_[w] indexed by capped words (moments module). Two
constraint routes are built:

- the "plus" variant extends every scalar equation of f by all words with
  enough free slots per space (one extra letter per space consumed by f);
- the "polarized" variant squares f first: it imposes a polarization map
  applied to the bilinear expansion of (f (x) f) on the 2-copy marginal,
  with no word extension.

Both share the state-space families: normalization of the empty word, box
bounds, and facet-extension inequalities (one facet times a word, or with
the "full" family every product of facets that fits the per-space slots).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import (
    CapacityError,
    DimensionMismatch,
    InvalidShape,
    LevelTooLow,
    ShapeRequired,
    UnknownLetter,
)
from .lp import EQ, GE, LinearProgram, LinearRow
from .moments import MomentIndex, enumerate_indices, _space_multisets
from .spaces import FacetFunctional, StateSpace, space_from_json, space_to_json

# A term key names at most one coordinate per space: entry s is a coordinate
# index of space s, or None for the unit (no letter from that space).
TermKey = tuple[Optional[int], ...]

VARIANT_PLUS = "plus"
VARIANT_POLARIZED = "polarized"
FAMILY_LITE = "lite"
FAMILY_FULL = "full"


def _key_sort(key: TermKey):
    return tuple(-1 if c is None else c for c in key)


@dataclass(frozen=True)
class AffineMap:
    """Multi-affine map with sparse terms, degree <= 1 in each space.

    ``terms[r]`` holds output coordinate r as (key, coefficient) pairs; the
    all-None key is the constant term. Eliminated coordinates must be
    pre-substituted by instance builders, so keys only reference free
    coordinates.
    """

    num_spaces: int
    terms: tuple[tuple[tuple[TermKey, float], ...], ...]
    output_shape: Optional[tuple[int, int]] = None

    def __post_init__(self):
        canon = []
        for out in self.terms:
            acc: dict[TermKey, float] = {}
            items = out.items() if isinstance(out, Mapping) else out
            for key, c in items:
                key = tuple(key)
                if len(key) != self.num_spaces:
                    raise DimensionMismatch(
                        f"term key {key} has {len(key)} slots, map has "
                        f"{self.num_spaces} spaces"
                    )
                for entry in key:
                    if entry is not None and (not isinstance(entry, int) or entry < 0):
                        raise UnknownLetter(f"bad coordinate {entry!r} in term key")
                acc[key] = acc.get(key, 0.0) + float(c)
            canon.append(
                tuple(sorted(((k, v) for k, v in acc.items() if v != 0.0),
                             key=lambda kv: _key_sort(kv[0])))
            )
        object.__setattr__(self, "terms", tuple(canon))
        if self.output_shape is not None:
            shape = (int(self.output_shape[0]), int(self.output_shape[1]))
            object.__setattr__(self, "output_shape", shape)
            if shape[0] * shape[1] != len(self.terms):
                raise InvalidShape(
                    f"output_shape {shape} does not match {len(self.terms)} outputs"
                )

    @property
    def output_dim(self) -> int:
        return len(self.terms)

    def space_slack(self, r: int) -> tuple[int, ...]:
        """Per-space maximum letter count over the terms of output r."""
        slack = [0] * self.num_spaces
        for key, _ in self.terms[r]:
            for s, entry in enumerate(key):
                if entry is not None:
                    slack[s] = max(slack[s], 1)
        return tuple(slack)


def affine_map(
    num_spaces: int,
    outputs: Sequence[Mapping[TermKey, float]],
    output_shape: Optional[tuple[int, int]] = None,
) -> AffineMap:
    """Build an AffineMap from one {key: coeff} mapping per output."""
    return AffineMap(num_spaces, tuple(tuple(o.items()) for o in outputs), output_shape)


def zero_map(num_spaces: int) -> AffineMap:
    """Single-output map that is identically zero (feasibility objective)."""
    return AffineMap(num_spaces, ((),))


def evaluate_affine_map(f: AffineMap, points: Sequence[Sequence[float]]) -> np.ndarray:
    """Evaluate every output at concrete points, one per space."""
    if len(points) != f.num_spaces:
        raise DimensionMismatch(
            f"{len(points)} points for {f.num_spaces} spaces"
        )
    vals = np.zeros(f.output_dim)
    for r, out in enumerate(f.terms):
        total = 0.0
        for key, c in out:
            prod = c
            for s, entry in enumerate(key):
                if entry is not None:
                    prod *= points[s][entry]
            total += prod
        vals[r] = total
    return vals


@dataclass(frozen=True)
class Problem:
    """State spaces plus the constraint map f and an optional affine objective."""

    spaces: tuple[StateSpace, ...]
    constraint_map: AffineMap
    objective: Optional[AffineMap] = None
    name: str = "problem"

    def __post_init__(self):
        object.__setattr__(self, "spaces", tuple(self.spaces))
        if self.objective is None:
            object.__setattr__(self, "objective", zero_map(len(self.spaces)))
        if self.constraint_map.num_spaces != len(self.spaces):
            raise DimensionMismatch(
                f"constraint map spans {self.constraint_map.num_spaces} spaces, "
                f"problem has {len(self.spaces)}"
            )
        if self.objective.num_spaces != len(self.spaces):
            raise DimensionMismatch("objective spans a different number of spaces")
        if self.objective.output_dim != 1:
            raise InvalidShape("objective must have exactly one output")
        for m in (self.constraint_map, self.objective):
            for out in m.terms:
                for key, _ in out:
                    for s, entry in enumerate(key):
                        if entry is not None and entry >= self.spaces[s].free_dim:
                            raise UnknownLetter(
                                f"coordinate {entry} outside space "
                                f"{self.spaces[s].name!r} (free_dim "
                                f"{self.spaces[s].free_dim})"
                            )


@dataclass(frozen=True)
class PolarizationMap:
    """One of the admissible linearizations of the squared constraint.

    kind "id" keeps every output pair (full Kronecker image), "hs" takes the
    Hilbert-Schmidt trace pairing, "matrix" the matrix product A^T B over
    matrix-shaped outputs. Each yields rows of (r, r', coeff) pairings that
    must vanish; soundness (image zero forces the argument pair to zero) is
    sampled by check_pi_soundness.
    """

    kind: str

    def __post_init__(self):
        if self.kind not in ("id", "hs", "matrix"):
            raise InvalidShape(f"unknown polarization map kind {self.kind!r}")

    def pair_rows(
        self, output_dim: int, output_shape: Optional[tuple[int, int]]
    ) -> list[tuple[tuple[int, int, float], ...]]:
        q = output_dim
        if self.kind == "id":
            return [((r, rp, 1.0),) for r in range(q) for rp in range(q)]
        if self.kind == "hs":
            return [tuple((r, r, 1.0) for r in range(q))]
        if output_shape is None:
            raise ShapeRequired(
                "matrix-product polarization needs a matrix output shape"
            )
        rows, cols = output_shape
        if rows * cols != q:
            raise DimensionMismatch(
                f"shape {output_shape} does not match output dimension {q}"
            )
        return [
            tuple((i * cols + j, i * cols + k, 1.0) for i in range(rows))
            for j in range(cols)
            for k in range(cols)
        ]


PI_IDENTITY = PolarizationMap("id")
PI_HILBERT_SCHMIDT = PolarizationMap("hs")
PI_MATRIX_PRODUCT = PolarizationMap("matrix")
PI_BY_NAME = {"id": PI_IDENTITY, "hs": PI_HILBERT_SCHMIDT, "matrix": PI_MATRIX_PRODUCT}


@dataclass(frozen=True)
class HierarchySpec:
    """Which relaxation to build: level, variant, polarization map, facet family."""

    level: int
    variant: str = VARIANT_PLUS
    pi: PolarizationMap = PI_IDENTITY
    family: str = FAMILY_LITE

    def __post_init__(self):
        if self.variant not in (VARIANT_PLUS, VARIANT_POLARIZED):
            raise InvalidShape(f"unknown variant {self.variant!r}")
        if self.family not in (FAMILY_LITE, FAMILY_FULL):
            raise InvalidShape(f"unknown constraint family {self.family!r}")
        if self.level < 1:
            raise LevelTooLow(f"level must be >= 1, got {self.level}")
        if self.variant == VARIANT_POLARIZED and self.level < 2:
            raise LevelTooLow(
                "polarized variant constrains the 2-copy marginal and needs level >= 2"
            )


# internal word representation: tuple of per-space sorted coordinate tuples,
# mirroring MomentIndex.per_space without the dataclass overhead (profiled:
# the builders spend their time in word extension)


def _insert(word, s, c):
    ms = word[s]
    for k, existing in enumerate(ms):
        if c <= existing:
            new = ms[:k] + (c,) + ms[k:]
            break
    else:
        new = ms + (c,)
    return word[:s] + (new,) + word[s + 1 :]


def _word_table(level: int, spaces: Sequence[StateSpace], caps=None):
    if caps is None:
        caps = [level] * len(spaces)
    lists = [
        _space_multisets(sp.free_dim, min(cap, level))
        for sp, cap in zip(spaces, caps)
    ]
    return list(itertools.product(*lists))


def _variable_names(words, spaces) -> tuple[str, ...]:
    # inline version of moments.index_name over raw words (hot path)
    names = []
    for word in words:
        parts = [
            "+".join(sp.letter_names[i] for i in ms)
            for sp, ms in zip(spaces, word)
        ]
        names.append("y[" + ";".join(parts) + "]")
    return tuple(names)


def _is_coordinate_facet(g: FacetFunctional) -> bool:
    """Facets x_i >= 0 are absorbed by the box bounds on every variable."""
    return (
        g.constant == 0.0
        and len(g.coefficients) == 1
        and g.coefficients[0][1] > 0.0
    )


def _absorbed(coeffs: dict[int, float]) -> bool:
    """Rows c*y >= 0 with a single positive entry restate a box bound."""
    if len(coeffs) != 1:
        return False
    ((_, v),) = coeffs.items()
    return v > 0.0


def _facet_rows_lite(level, spaces, pos, rows_out):
    """One facet of one space times every word with a free slot in that space."""
    for s, sp in enumerate(spaces):
        gens = [g for g in sp.facets if not _is_coordinate_facet(g)]
        if not gens:
            continue
        caps = [level] * len(spaces)
        caps[s] = level - 1
        words = _word_table(level, spaces, caps)
        for g in gens:
            const = g.constant
            coeff_list = g.coefficients
            for w in words:
                acc: dict[int, float] = {}
                if const != 0.0:
                    acc[pos[w]] = const
                for ci, cv in coeff_list:
                    col = pos[_insert(w, s, ci)]
                    acc[col] = acc.get(col, 0.0) + cv
                if _absorbed(acc):
                    continue
                rows_out.append(
                    LinearRow(tuple(sorted(acc.items())), GE, 0.0)
                )


def _facet_rows_full(level, spaces, pos, rows_out):
    """All products of facets, at most ``level`` per space, expanded to moments."""
    per_space_choices = []
    for sp in spaces:
        choices = []
        for k in range(level + 1):
            choices.extend(
                itertools.combinations_with_replacement(range(len(sp.facets)), k)
            )
        per_space_choices.append(choices)
    empty_word = tuple(() for _ in spaces)
    for selection in itertools.product(*per_space_choices):
        if all(len(ch) == 0 for ch in selection):
            continue
        # expand the product one facet at a time: word -> coefficient
        expansion = {empty_word: 1.0}
        for s, chosen in enumerate(selection):
            sp = spaces[s]
            for gi in chosen:
                g = sp.facets[gi]
                nxt: dict[tuple, float] = {}
                for word, c in expansion.items():
                    if g.constant != 0.0:
                        nxt[word] = nxt.get(word, 0.0) + c * g.constant
                    for ci, cv in g.coefficients:
                        w2 = _insert(word, s, ci)
                        nxt[w2] = nxt.get(w2, 0.0) + c * cv
                expansion = nxt
        acc = {}
        for word, c in expansion.items():
            if c != 0.0:
                acc[pos[word]] = c
        if not acc or _absorbed(acc):
            continue
        rows_out.append(LinearRow(tuple(sorted(acc.items())), GE, 0.0))


def _shared_families(problem: Problem, spec: HierarchySpec):
    """Families (a)-(c) and (e): variables, normalization, bounds, facets, objective."""
    spaces = problem.spaces
    level = spec.level
    words = _word_table(level, spaces)
    pos = {w: j for j, w in enumerate(words)}
    names = _variable_names(words, spaces)
    empty_word = tuple(() for _ in spaces)

    rows: list[LinearRow] = [
        LinearRow(((pos[empty_word], 1.0),), EQ, 1.0)
    ]
    if spec.family == FAMILY_LITE:
        _facet_rows_lite(level, spaces, pos, rows)
    else:
        _facet_rows_full(level, spaces, pos, rows)

    obj_acc: dict[int, float] = {}
    obj_const = 0.0
    for key, c in problem.objective.terms[0]:
        if all(entry is None for entry in key):
            obj_const += c
            continue
        word = tuple(
            () if entry is None else (entry,) for entry in key
        )
        col = pos[word]
        obj_acc[col] = obj_acc.get(col, 0.0) + c
    objective = tuple(sorted(obj_acc.items()))

    bounds = tuple((0.0, 1.0) for _ in words)
    return words, pos, names, rows, bounds, objective, obj_const


def _lp_name(problem: Problem, spec: HierarchySpec) -> str:
    tag = spec.variant if spec.variant == VARIANT_PLUS else f"{spec.variant}-{spec.pi.kind}"
    return f"{problem.name}-n{spec.level}-{tag}-{spec.family}"


def build_plus_lp(problem: Problem, spec: HierarchySpec) -> LinearProgram:
    """Level-n LP with every scalar equation of f extended by compatible words.

    Constraint families: (a) empty word fixed to 1, (b) box bounds [0,1],
    (c) facet extensions per the chosen family, (d) for every output r of f
    and every word w leaving one slot free per space touched by r:
    sum over terms of f_r of coeff * y_[term letters + w] = 0,
    (e) objective evaluated on single-letter words.
    """
    if spec.variant != VARIANT_PLUS:
        raise InvalidShape(f"build_plus_lp got variant {spec.variant!r}")
    f = problem.constraint_map
    level = spec.level
    spaces = problem.spaces
    words, pos, names, rows, bounds, objective, obj_const = _shared_families(
        problem, spec
    )

    for r in range(f.output_dim):
        out = f.terms[r]
        if not out:
            continue
        slack = f.space_slack(r)
        caps = [level - sl for sl in slack]
        if any(c < 0 for c in caps):
            raise CapacityError(
                f"output {r} needs {max(slack)} letters in one space, "
                f"level {level} cannot host it"
            )
        for w in _word_table(level, spaces, caps):
            acc: dict[int, float] = {}
            for key, c in out:
                w2 = w
                for s, entry in enumerate(key):
                    if entry is not None:
                        w2 = _insert(w2, s, entry)
                col = pos[w2]
                acc[col] = acc.get(col, 0.0) + c
            items = tuple(sorted((k, v) for k, v in acc.items() if v != 0.0))
            if items:
                rows.append(LinearRow(items, EQ, 0.0))

    return LinearProgram(
        variable_names=names,
        bounds=bounds,
        rows=tuple(rows),
        objective=objective,
        objective_constant=obj_const,
        name=_lp_name(problem, spec),
    )


def build_polarized_lp(problem: Problem, spec: HierarchySpec) -> LinearProgram:
    """Level-n LP constraining the polarized square of f on the 2-copy marginal.

    Same families (a)-(c), (e) as the plus variant; instead of word-extended
    equations, the bilinear expansion T[r,r'] of (f (x) f) is contracted by
    the polarization map's pairings and each contraction is forced to zero.
    """
    if spec.variant != VARIANT_POLARIZED:
        raise InvalidShape(f"build_polarized_lp got variant {spec.variant!r}")
    if spec.level < 2:
        raise LevelTooLow("polarized variant needs level >= 2")
    f = problem.constraint_map
    spaces = problem.spaces
    words, pos, names, rows, bounds, objective, obj_const = _shared_families(
        problem, spec
    )
    empty_word = tuple(() for _ in spaces)

    pair_cache: dict[tuple[int, int], dict[int, float]] = {}

    def t_block(r: int, rp: int) -> dict[int, float]:
        cache_key = (r, rp) if r <= rp else (rp, r)
        hit = pair_cache.get(cache_key)
        if hit is not None:
            return hit
        acc: dict[int, float] = {}
        for key1, c1 in f.terms[cache_key[0]]:
            for key2, c2 in f.terms[cache_key[1]]:
                w = empty_word
                for s in range(len(spaces)):
                    if key1[s] is not None:
                        w = _insert(w, s, key1[s])
                    if key2[s] is not None:
                        w = _insert(w, s, key2[s])
                col = pos[w]
                acc[col] = acc.get(col, 0.0) + c1 * c2
        pair_cache[cache_key] = acc
        return acc

    for pairing in spec.pi.pair_rows(f.output_dim, f.output_shape):
        acc: dict[int, float] = {}
        for r, rp, coeff in pairing:
            for col, v in t_block(r, rp).items():
                acc[col] = acc.get(col, 0.0) + coeff * v
        items = tuple(sorted((k, v) for k, v in acc.items() if v != 0.0))
        if items:
            rows.append(LinearRow(items, EQ, 0.0))

    return LinearProgram(
        variable_names=names,
        bounds=bounds,
        rows=tuple(rows),
        objective=objective,
        objective_constant=obj_const,
        name=_lp_name(problem, spec),
    )


def build_lp(problem: Problem, spec: HierarchySpec) -> LinearProgram:
    """Dispatch on the spec's variant."""
    if spec.variant == VARIANT_PLUS:
        return build_plus_lp(problem, spec)
    return build_polarized_lp(problem, spec)


def lift_product_point(
    problem: Problem, points: Sequence[Sequence[float]], level: int
) -> dict[MomentIndex, float]:
    """Moment assignment of a product point: each index maps to the product
    of its referenced coordinates (empty word to 1).

    Feasibility of the points in their spaces is the caller's contract; the
    lift is well-defined regardless and satisfies the equation families iff
    f vanishes at the points.
    """
    spaces = problem.spaces
    if len(points) != len(spaces):
        raise DimensionMismatch(
            f"{len(points)} points for {len(spaces)} spaces"
        )
    pts = []
    for sp, p in zip(spaces, points):
        arr = np.asarray(p, dtype=float)
        if arr.shape != (sp.free_dim,):
            raise DimensionMismatch(
                f"point for space {sp.name!r} has shape {arr.shape}, "
                f"expected ({sp.free_dim},)"
            )
        pts.append(arr)
    out: dict[MomentIndex, float] = {}
    for idx in enumerate_indices(level, spaces):
        val = 1.0
        for s, ms in enumerate(idx.per_space):
            for i in ms:
                val *= pts[s][i]
        out[idx] = val
    return out


def lift_vector(
    problem: Problem, points: Sequence[Sequence[float]], level: int
) -> np.ndarray:
    """lift_product_point flattened in LP variable order."""
    lifted = lift_product_point(problem, points, level)
    return np.array([lifted[idx] for idx in enumerate_indices(level, problem.spaces)])


def check_pi_soundness(
    pi,
    output_dim: int,
    samples: int,
    output_shape: Optional[tuple[int, int]] = None,
    seed: int = 0,
) -> bool:
    """Sample test of the polarization property: the image of a(x)a + b(x)b
    must be nonzero for random nonzero a, b.

    Uses the same pairing rows as the LP builder, so a map that fails here
    would also generate unsound LP equalities. Not a proof; a property check.
    """
    if samples < 1:
        raise InvalidShape("samples must be >= 1")
    rows = pi.pair_rows(output_dim, output_shape)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        a = rng.normal(size=output_dim)
        b = rng.normal(size=output_dim)
        while not np.any(a):
            a = rng.normal(size=output_dim)
        while not np.any(b):
            b = rng.normal(size=output_dim)
        s_mat = np.outer(a, a) + np.outer(b, b)
        image = [
            sum(coeff * s_mat[r, rp] for r, rp, coeff in pairing)
            for pairing in rows
        ]
        if not image or float(np.linalg.norm(image)) <= 0.0:
            return False
    return True


def problem_to_json(problem: Problem) -> dict:
    """Serializable problem description; letters are referenced by name."""

    def map_json(m: AffineMap) -> dict:
        outs = []
        for out in m.terms:
            terms = []
            for key, c in out:
                ref = {}
                for s, entry in enumerate(key):
                    if entry is not None:
                        ref[problem.spaces[s].name] = problem.spaces[s].letter_names[entry]
                terms.append([c, ref])
            outs.append(terms)
        return {
            "outputs": m.output_dim,
            "shape": list(m.output_shape) if m.output_shape else None,
            "terms": outs,
        }

    return {
        "name": problem.name,
        "spaces": [space_to_json(sp) for sp in problem.spaces],
        "f": map_json(problem.constraint_map),
        "p": map_json(problem.objective),
    }


def problem_from_json(data: Mapping) -> Problem:
    spaces = tuple(space_from_json(d) for d in data["spaces"])
    by_name = {sp.name: s for s, sp in enumerate(spaces)}
    letter_pos = [
        {nm: i for i, nm in enumerate(sp.letter_names)} for sp in spaces
    ]

    def map_from(d: Mapping) -> AffineMap:
        outs = []
        for out in d["terms"]:
            acc: dict[TermKey, float] = {}
            for c, ref in out:
                key = [None] * len(spaces)
                for space_name, letter in ref.items():
                    if space_name not in by_name:
                        raise UnknownLetter(f"unknown space {space_name!r}")
                    s = by_name[space_name]
                    if letter == "unit":
                        continue
                    if letter not in letter_pos[s]:
                        raise UnknownLetter(
                            f"unknown letter {letter!r} in space {space_name!r}"
                        )
                    key[s] = letter_pos[s][letter]
                key = tuple(key)
                acc[key] = acc.get(key, 0.0) + float(c)
            outs.append(acc)
        shape = d.get("shape")
        declared = d.get("outputs")
        if declared is not None and declared != len(outs):
            raise InvalidShape(
                f"declared {declared} outputs, found {len(outs)} term lists"
            )
        return affine_map(
            len(spaces), outs, tuple(shape) if shape else None
        )

    objective = map_from(data["p"]) if data.get("p") else None
    return Problem(
        spaces=spaces,
        constraint_map=map_from(data["f"]),
        objective=objective,
        name=data.get("name", "problem"),
    )

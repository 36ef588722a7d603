"""Canonical indexing and enumeration of symmetrized moment variables.

A level-n moment variable is labeled by one multiset of at most n coordinate
letters per state space; unit letters pad the remaining slots implicitly.
Symmetrization acts per space, never across spaces, so the canonical form is
a sorted tuple of coordinate indices for each space. The canonical string
form ``y[U11+U12;V23]`` (per-space letter names joined by "+", spaces joined
by ";") is the LP variable name and must stay bit-exact across runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from typing import Iterable, Optional, Sequence

from .errors import LevelOverflow, UnknownLetter
from .spaces import StateSpace


@dataclass(frozen=True)
class Letter:
    """One alphabet letter of one space; ``coord=None`` is the unit letter."""

    space: int
    coord: Optional[int] = None

    @property
    def is_unit(self) -> bool:
        return self.coord is None


def unit(space: int) -> Letter:
    return Letter(space, None)


def coord(space: int, index: int) -> Letter:
    return Letter(space, index)


@dataclass(frozen=True)
class MomentIndex:
    """Canonical label of a symmetrized moment variable.

    ``per_space[s]`` is the sorted multiset (tuple with repetition) of
    coordinate-letter indices of space s; each has size <= level.
    """

    level: int
    per_space: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "per_space", tuple(tuple(ms) for ms in self.per_space)
        )
        for ms in self.per_space:
            if len(ms) > self.level:
                raise LevelOverflow(
                    f"multiset {ms} exceeds level {self.level} slots"
                )
            if tuple(sorted(ms)) != ms:
                raise ValueError(f"multiset {ms} is not in canonical sorted order")

    @property
    def is_empty(self) -> bool:
        return all(not ms for ms in self.per_space)

    def word_length(self) -> int:
        """Total number of non-unit letters across all spaces."""
        return sum(len(ms) for ms in self.per_space)


def canonical_index(
    level: int, letters: Iterable[Letter], spaces: Sequence[StateSpace]
) -> MomentIndex:
    """Symmetrize a word of letters into its canonical MomentIndex.

    Unit letters are dropped (they are implicit padding); the result does not
    depend on the order of ``letters``. Raises LevelOverflow if any space
    receives more than ``level`` coordinate letters, UnknownLetter for a
    letter outside the declared spaces.
    """
    buckets: list[list[int]] = [[] for _ in spaces]
    for ltr in letters:
        if not 0 <= ltr.space < len(spaces):
            raise UnknownLetter(f"letter references space {ltr.space} of {len(spaces)}")
        if ltr.is_unit:
            continue
        if not 0 <= ltr.coord < spaces[ltr.space].free_dim:
            raise UnknownLetter(
                f"letter coordinate {ltr.coord} outside space "
                f"{spaces[ltr.space].name!r} (free_dim={spaces[ltr.space].free_dim})"
            )
        buckets[ltr.space].append(ltr.coord)
    for s, bucket in enumerate(buckets):
        if len(bucket) > level:
            raise LevelOverflow(
                f"space {spaces[s].name!r} received {len(bucket)} coordinate "
                f"letters, level {level} allows at most {level}"
            )
    return MomentIndex(level, tuple(tuple(sorted(b)) for b in buckets))


def empty_index(level: int, spaces: Sequence[StateSpace]) -> MomentIndex:
    """The all-units word [1]; its variable is normalized to 1 in every LP."""
    return MomentIndex(level, tuple(() for _ in spaces))


def _space_multisets(free_dim: int, cap: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    for k in range(cap + 1):
        out.extend(combinations_with_replacement(range(free_dim), k))
    out.sort()
    return out


def enumerate_capped(
    level: int, caps: Sequence[int], spaces: Sequence[StateSpace]
) -> list[MomentIndex]:
    """All canonical indices with at most caps[s] coordinate letters in space s.

    Deterministic lexicographic order on the tuple of per-space multisets.
    """
    per_space_sets = [
        _space_multisets(sp.free_dim, min(cap, level)) for sp, cap in zip(spaces, caps)
    ]
    return [MomentIndex(level, combo) for combo in product(*per_space_sets)]


def enumerate_indices(level: int, spaces: Sequence[StateSpace]) -> list[MomentIndex]:
    """All canonical level-n indices for the given spaces, sorted and duplicate-free."""
    if level < 0:
        raise LevelOverflow(f"level must be >= 0, got {level}")
    return enumerate_capped(level, [level] * len(spaces), spaces)


def count_indices(level: int, spaces: Sequence[StateSpace]) -> int:
    """Closed form for len(enumerate_indices): product of multichoose(d_s, n).

    d_s is the alphabet size free_dim + 1 (multisets of size exactly n over
    the alphabet with unit padding are multisets of size <= n over the
    coordinate letters).
    """
    n = 1
    for sp in spaces:
        n *= math.comb(sp.alphabet_size + level - 1, level)
    return n


def extend_index(
    base: MomentIndex,
    extra: Iterable[Letter],
    spaces: Sequence[StateSpace] | None = None,
) -> MomentIndex:
    """Canonical index of base's word extended by the extra letters.

    Commutative and associative in ``extra``. Capacity is per space: the
    combined multiset in each space must fit in ``base.level`` slots. When
    ``spaces`` is given, letters are validated against it as well.
    """
    buckets = [list(ms) for ms in base.per_space]
    for ltr in extra:
        if not 0 <= ltr.space < len(buckets):
            raise UnknownLetter(f"letter references space {ltr.space} of {len(buckets)}")
        if ltr.is_unit:
            continue
        if spaces is not None and not 0 <= ltr.coord < spaces[ltr.space].free_dim:
            raise UnknownLetter(
                f"letter coordinate {ltr.coord} outside space {spaces[ltr.space].name!r}"
            )
        buckets[ltr.space].append(ltr.coord)
    for s, bucket in enumerate(buckets):
        if len(bucket) > base.level:
            raise LevelOverflow(
                f"space {s} would hold {len(bucket)} letters, level "
                f"{base.level} allows at most {base.level}"
            )
    return MomentIndex(base.level, tuple(tuple(sorted(b)) for b in buckets))


def index_name(index: MomentIndex, spaces: Sequence[StateSpace]) -> str:
    """Canonical LP variable name, e.g. ``y[U11+U12;V23]``."""
    parts = []
    for sp, ms in zip(spaces, index.per_space):
        parts.append("+".join(sp.letter_names[i] for i in ms))
    return "y[" + ";".join(parts) + "]"

"""State-space construction, validation, and membership tests."""
import itertools

import numpy as np
import pytest

from polarize.errors import (
    DimensionMismatch,
    EmptySpace,
    InvalidShape,
    UnboundedSpace,
)
from polarize.spaces import (
    FacetFunctional,
    evaluate_facets,
    facet,
    is_member,
    make_left_stochastic_space,
    make_polytope_space,
    space_from_json,
    space_to_json,
)


def segment_space():
    # unit interval 0 <= x <= 1
    return make_polytope_space(
        "seg", 1, [facet(0.0, {0: 1.0}), facet(1.0, {0: -1.0})], ["x"]
    )


def test_segment_is_valid():
    seg = segment_space()
    assert seg.free_dim == 1
    assert seg.alphabet_size == 2
    assert seg.coordinate_ranges == ((0.0, 1.0),)


def test_unbounded_space_rejected():
    with pytest.raises(UnboundedSpace):
        make_polytope_space("halfline", 1, [facet(0.0, {0: 1.0})], ["x"])


def test_empty_space_rejected():
    # x - 2 >= 0 and 1 - x >= 0 cannot both hold
    with pytest.raises(EmptySpace):
        make_polytope_space(
            "empty", 1, [facet(-2.0, {0: 1.0}), facet(1.0, {0: -1.0})], ["x"]
        )


def test_letter_names_length_checked():
    with pytest.raises(DimensionMismatch):
        make_polytope_space(
            "bad", 1, [facet(0.0, {0: 1.0}), facet(1.0, {0: -1.0})], ["x", "y"]
        )


def test_letter_names_must_be_distinct():
    with pytest.raises(InvalidShape):
        make_polytope_space(
            "dup",
            2,
            [facet(0.0, {0: 1.0}), facet(0.0, {1: 1.0}), facet(1.0, {0: -1.0, 1: -1.0})],
            ["x", "x"],
        )


def test_zero_facet_rejected():
    with pytest.raises(InvalidShape):
        FacetFunctional(0.0, ())


def test_facet_coordinate_out_of_range():
    with pytest.raises(DimensionMismatch):
        make_polytope_space(
            "oob", 1, [facet(0.0, {3: 1.0}), facet(1.0, {0: -1.0})], ["x"]
        )


def test_stochastic_4x3_dimensions():
    sp = make_left_stochastic_space(4, 3, letter_prefix="U")
    assert sp.free_dim == 9
    assert sp.alphabet_size == 10
    assert len(sp.facets) == 12
    assert sp.letter_names[0] == "U11"
    assert sp.letter_names[-1] == "U33"


def test_stochastic_3x4_dimensions():
    sp = make_left_stochastic_space(3, 4, letter_prefix="V")
    assert sp.free_dim == 8
    assert sp.alphabet_size == 9
    assert len(sp.facets) == 12
    assert sp.letter_names == ("V11", "V12", "V13", "V14", "V21", "V22", "V23", "V24")


def test_stochastic_1x2_is_a_point():
    sp = make_left_stochastic_space(1, 2)
    assert sp.free_dim == 0
    assert sp.alphabet_size == 1
    assert len(sp.facets) == 2
    assert sp.probe == ()


def test_stochastic_invalid_shape():
    with pytest.raises(InvalidShape):
        make_left_stochastic_space(0, 3)
    with pytest.raises(InvalidShape):
        make_left_stochastic_space(3, 0)


def test_evaluate_facets_segment_midpoint():
    seg = segment_space()
    np.testing.assert_allclose(evaluate_facets(seg, [0.5]), [0.5, 0.5])


def test_evaluate_facets_uniform_quarter():
    sp = make_left_stochastic_space(4, 3)
    vals = evaluate_facets(sp, [0.25] * 9)
    np.testing.assert_allclose(vals, [0.25] * 12)


def test_evaluate_facets_violation():
    sp = make_left_stochastic_space(4, 3)
    point = np.zeros(9)
    point[0] = 2.0  # X_11 = 2 overfills column 1
    vals = evaluate_facets(sp, point)
    assert vals.min() == pytest.approx(-1.0)
    assert not is_member(sp, point)


def test_evaluate_facets_dimension_mismatch():
    sp = make_left_stochastic_space(4, 3)
    with pytest.raises(DimensionMismatch):
        evaluate_facets(sp, [0.1, 0.2])


def test_probe_point_is_member():
    for sp in (
        segment_space(),
        make_left_stochastic_space(4, 3),
        make_left_stochastic_space(3, 4),
        make_left_stochastic_space(2, 2),
    ):
        assert is_member(sp, sp.probe)


def test_stochastic_coordinates_bounded_by_one():
    sp = make_left_stochastic_space(3, 4)
    for lo, hi in sp.coordinate_ranges:
        assert lo == pytest.approx(0.0, abs=1e-9)
        assert hi <= 1.0 + 1e-9


def _vertices_by_enumeration(space):
    """All vertices of the polytope: basic solutions of free_dim-subsets of tight facets."""
    d = space.free_dim
    verts = []
    for subset in itertools.combinations(range(len(space.facets)), d):
        A = np.zeros((d, d))
        b = np.zeros(d)
        for r, fi in enumerate(subset):
            g = space.facets[fi]
            for i, c in g.coefficients:
                A[r, i] = c
            b[r] = -g.constant
        if abs(np.linalg.det(A)) < 1e-9:
            continue
        x = np.linalg.solve(A, b)
        if is_member(space, x, tol=1e-9) and not any(
            np.allclose(x, v, atol=1e-9) for v in verts
        ):
            verts.append(x)
    return verts


@pytest.mark.parametrize("rows,cols", [(2, 2), (2, 3), (3, 2), (1, 4)])
def test_stochastic_vertices_are_zero_one(rows, cols):
    # every vertex has 0/1 entries and each column (with the eliminated row)
    # sums to exactly 1
    sp = make_left_stochastic_space(rows, cols)
    verts = _vertices_by_enumeration(sp)
    assert len(verts) == rows ** cols
    for v in verts:
        assert np.allclose(np.abs(v - 0.5), 0.5, atol=1e-9)  # entries are 0 or 1
        mat = np.asarray(v).reshape(rows - 1, cols) if rows > 1 else np.zeros((0, cols))
        colsums = mat.sum(axis=0)
        assert np.all(colsums <= 1.0 + 1e-9)


def test_json_roundtrip():
    sp = make_left_stochastic_space(4, 3, letter_prefix="U")
    data = space_to_json(sp)
    sp2 = space_from_json(data)
    assert sp2 == sp
    assert sp2.letter_names == sp.letter_names


def test_json_unknown_letter_rejected():
    data = space_to_json(segment_space())
    data["facets"][0]["coeffs"] = {"nope": 1.0}
    with pytest.raises(DimensionMismatch):
        space_from_json(data)

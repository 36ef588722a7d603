"""Tests for the LP layer: solving, verdict validation, Farkas certificates."""
import numpy as np
import pytest

from polarize.errors import BackendFailure, DimensionMismatch, InvalidShape
from polarize.lp import (
    EQ,
    GE,
    LE,
    FarkasRay,
    LinearProgram,
    LinearRow,
    SolveStatus,
    constraint_violations,
    farkas_certificate,
    max_violation,
    resolve_backend,
    solve,
    verify_certificate,
)


def box_lp(rows, n=2, bounds=None, objective=(), const=0.0):
    return LinearProgram(
        variable_names=tuple(f"x{j}" for j in range(n)),
        bounds=tuple(bounds if bounds is not None else [(0.0, 1.0)] * n),
        rows=tuple(rows),
        objective=tuple(objective),
        objective_constant=const,
    )


class TestConstruction:
    def test_duplicate_names_rejected(self):
        with pytest.raises(InvalidShape):
            LinearProgram(("x", "x"), ((0, 1), (0, 1)), ())

    def test_bounds_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            LinearProgram(("x",), ((0, 1), (0, 1)), ())

    def test_row_out_of_range(self):
        with pytest.raises(DimensionMismatch):
            box_lp([LinearRow(((5, 1.0),), EQ, 0.0)])

    def test_bad_relation(self):
        with pytest.raises(InvalidShape):
            LinearRow(((0, 1.0),), "!=", 0.0)


class TestViolations:
    def test_signs(self):
        lp = box_lp([
            LinearRow(((0, 1.0),), GE, 0.5),
            LinearRow(((1, 1.0),), LE, 0.5),
            LinearRow(((0, 1.0), (1, 1.0)), EQ, 1.0),
        ])
        v = constraint_violations(lp, [0.2, 0.9])
        assert v[0] == pytest.approx(0.3)   # 0.2 >= 0.5 violated by 0.3
        assert v[1] == pytest.approx(0.4)   # 0.9 <= 0.5 violated by 0.4
        assert v[2] == pytest.approx(0.1)   # |1.1 - 1.0|

    def test_max_violation_includes_bounds(self):
        lp = box_lp([])
        assert max_violation(lp, [1.3, -0.2]) == pytest.approx(0.3)
        assert max_violation(lp, [0.5, 0.5]) <= 0.0

    def test_shape_check(self):
        lp = box_lp([])
        with pytest.raises(DimensionMismatch):
            max_violation(lp, [0.1])


class TestSolve:
    def test_feasible_with_objective(self):
        # min x0 + x1 st x0 + x1 >= 1 on the unit box: optimum 1
        lp = box_lp(
            [LinearRow(((0, 1.0), (1, 1.0)), GE, 1.0)],
            objective=((0, 1.0), (1, 1.0)),
            const=2.5,
        )
        out = solve(lp)
        assert out.status is SolveStatus.FEASIBLE
        assert out.objective_value == pytest.approx(1.0 + 2.5, abs=1e-6)
        assert max_violation(lp, out.point) <= 1e-7

    def test_infeasible_has_verified_certificate(self):
        # x0 = 2 inside the unit box
        lp = box_lp([LinearRow(((0, 1.0),), EQ, 2.0)])
        out = solve(lp)
        assert out.status is SolveStatus.INFEASIBLE
        assert out.certificate is not None
        assert verify_certificate(lp, out.certificate)

    def test_equalities_only(self):
        lp = box_lp([
            LinearRow(((0, 1.0), (1, 1.0)), EQ, 1.0),
            LinearRow(((0, 1.0), (1, -1.0)), EQ, 0.2),
        ])
        out = solve(lp)
        assert out.status is SolveStatus.FEASIBLE
        assert out.point[0] == pytest.approx(0.6, abs=1e-6)

    def test_backend_env_override(self, monkeypatch):
        monkeypatch.setenv("POLARIZE_SOLVER", "highs-ds")
        assert resolve_backend() == "highs-ds"
        monkeypatch.setenv("POLARIZE_SOLVER", "nonsense")
        with pytest.raises(BackendFailure):
            resolve_backend()

    def test_explicit_backend_beats_env(self, monkeypatch):
        monkeypatch.setenv("POLARIZE_SOLVER", "highs-ds")
        assert resolve_backend("highs-ipm") == "highs-ipm"

    @pytest.mark.parametrize("backend", ["highs", "highs-ds", "highs-ipm"])
    def test_all_backends_agree(self, backend):
        feas = box_lp([LinearRow(((0, 1.0), (1, 1.0)), GE, 0.5)])
        infeas = box_lp([LinearRow(((0, 1.0), (1, 1.0)), GE, 2.5)])
        assert solve(feas, backend=backend).status is SolveStatus.FEASIBLE
        assert solve(infeas, backend=backend).status is SolveStatus.INFEASIBLE


class TestFarkas:
    def test_textbook_example(self):
        # x = 2 with 0 <= x <= 1: multiplier 1 on the equality plus 1 on the
        # reversed upper bound aggregates to 0 >= 1
        lp = box_lp([LinearRow(((0, 1.0),), EQ, 2.0)], n=1)
        ray = FarkasRay(
            constraints=np.array([1.0]),
            lower=np.array([0.0]),
            upper=np.array([1.0]),
        )
        assert verify_certificate(lp, ray)

    def test_sign_violation_rejected(self):
        # a >= row with a negative multiplier is not a valid aggregation
        lp = box_lp([LinearRow(((0, 1.0),), GE, 2.0)], n=1)
        bad = FarkasRay(np.array([-1.0]), np.array([1.0]), np.array([0.0]))
        assert not verify_certificate(lp, bad)

    def test_zero_ray_rejected(self):
        lp = box_lp([LinearRow(((0, 1.0),), EQ, 2.0)], n=1)
        zero = FarkasRay(np.zeros(1), np.zeros(1), np.zeros(1))
        assert not verify_certificate(lp, zero)

    def test_feasible_system_has_no_ray(self):
        lp = box_lp([LinearRow(((0, 1.0),), EQ, 0.5)], n=1)
        assert farkas_certificate(lp) is None

    def test_synthesized_ray_on_ge_system(self):
        # x0 + x1 >= 3 on the unit square
        lp = box_lp([LinearRow(((0, 1.0), (1, 1.0)), GE, 3.0)])
        ray = farkas_certificate(lp)
        assert ray is not None
        assert verify_certificate(lp, ray)

    def test_perturbed_ray_rejected(self):
        lp = box_lp([LinearRow(((0, 1.0), (1, 1.0)), GE, 3.0)])
        ray = farkas_certificate(lp)
        rng = np.random.default_rng(7)
        bad = FarkasRay(
            constraints=ray.constraints + rng.normal(0, 1e-3, ray.constraints.shape),
            lower=ray.lower + rng.normal(0, 1e-3, ray.lower.shape),
            upper=ray.upper + rng.normal(0, 1e-3, ray.upper.shape),
        )
        assert not verify_certificate(lp, bad)

    def test_infinite_bound_multiplier_rejected(self):
        lp = box_lp(
            [LinearRow(((0, 1.0),), EQ, 2.0)],
            n=1,
            bounds=[(0.0, np.inf)],
        )
        # no finite upper bound, so weight on it is meaningless
        bad = FarkasRay(np.array([1.0]), np.array([0.0]), np.array([1.0]))
        assert not verify_certificate(lp, bad)

    def test_shape_mismatch_raises(self):
        lp = box_lp([LinearRow(((0, 1.0),), EQ, 2.0)])
        with pytest.raises(DimensionMismatch):
            verify_certificate(lp, FarkasRay(np.zeros(3), np.zeros(2), np.zeros(2)))

    def test_free_variable_infeasibility(self):
        # x free, x >= 1 and x <= 0: combine the two rows
        lp = LinearProgram(
            ("x",),
            ((-np.inf, np.inf),),
            (
                LinearRow(((0, 1.0),), GE, 1.0),
                LinearRow(((0, 1.0),), LE, 0.0),
            ),
        )
        out = solve(lp)
        assert out.status is SolveStatus.INFEASIBLE
        assert verify_certificate(lp, out.certificate)

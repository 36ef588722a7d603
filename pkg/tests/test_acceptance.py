"""Acceptance gate for the nested-rectangles experiment.

Ten end-to-end criteria, one test each, executed in numeric order. Every
test emits a single live "[criterion N] PASS/FAIL" line (capture suspended
for that line) so a full-suite run prints the whole scorecard.

Level-3 solves dominate the runtime: a feasible level-3 instance takes a
few minutes of interior-point iterations and the corner refutation spends
most of its budget synthesizing the Farkas certificate. Statuses of those
solves are memoized at module scope and shared across criteria.
"""

import time

import numpy as np
import pytest

from polarize.cli import run
from polarize.hierarchy import (
    FAMILY_FULL,
    HierarchySpec,
    PI_HILBERT_SCHMIDT,
    PI_IDENTITY,
    PI_MATRIX_PRODUCT,
    VARIANT_POLARIZED,
    build_lp,
    build_plus_lp,
    check_pi_soundness,
    lift_vector,
)
from polarize.lp import (
    FarkasRay,
    SolveStatus,
    max_violation,
    solve,
    verify_certificate,
)
from polarize.moments import canonical_index, coord, count_indices, enumerate_indices, unit
from polarize.mps import read_mps, write_mps
from polarize.nmf import (
    analytic_feasible,
    check_point,
    matrix_from_array,
    nested_rectangles_matrix,
    nmf_problem,
    scan_region,
)
from polarize.spaces import make_left_stochastic_space

pytestmark = pytest.mark.acceptance

GRID5 = [i / 4 for i in range(5)]
GRID8 = [i / 7 for i in range(8)]
# componentwise-maximal grid points of the analytic region on the 5x5
# lattice; (0,1) and (1,0) sit exactly on the boundary curve
FRONTIER = [(0.0, 1.0), (0.25, 0.5), (0.5, 0.25), (1.0, 0.0)]

# (a, b) -> status string for Plus/PaperLite at level 3, shared across
# criteria 2, 3, 5 and 6 so each point is solved at most once
_plus3_status: dict[tuple[float, float], str] = {}


def _plus3(a, b):
    key = (a, b)
    if key not in _plus3_status:
        problem = nmf_problem(nested_rectangles_matrix(a, b).M, 3)
        lp = build_plus_lp(problem, HierarchySpec(level=3))
        _plus3_status[key] = solve(lp).status.value
    return _plus3_status[key]


@pytest.fixture(scope="module")
def announce(request):
    manager = request.config.pluginmanager.getplugin("capturemanager")

    def _announce(num, ok, detail):
        line = f"[criterion {num:2d}] {'PASS' if ok else 'FAIL'}: {detail}"
        with manager.global_and_fixture_disabled():
            print(f"\n{line}", flush=True)

    return _announce


def test_criterion_01_variable_counts(announce, capsys):
    t0 = time.perf_counter()
    printed = []
    for n in (1, 2, 3):
        assert run(["count", "--n", str(n)]) == 0
        printed.append(capsys.readouterr().out.strip())
    elapsed = time.perf_counter() - t0
    ok = printed == ["90", "2475", "36300"] and elapsed < 1.0
    announce(1, ok, f"count --n 1/2/3 -> {'/'.join(printed)} in {elapsed:.2f}s")
    assert printed == ["90", "2475", "36300"]
    assert elapsed < 1.0


def test_criterion_02_feasible_side_soundness(announce):
    t0 = time.perf_counter()
    points = [(a, b) for a in GRID5 for b in GRID5 if analytic_feasible(a, b)]
    assert len(points) == 12
    verdicts = {p: check_point(p[0], p[1], 2).status for p in points}
    for p in FRONTIER:
        assert analytic_feasible(*p)
        verdicts[("n3",) + p] = _plus3(*p)
    elapsed = time.perf_counter() - t0
    bad = {p: s for p, s in verdicts.items() if s != "feasible"}
    ok = not bad and elapsed <= 1800
    announce(
        2,
        ok,
        f"{len(points)} pts at n=2 + {len(FRONTIER)} frontier pts at n=3 "
        f"all feasible in {elapsed:.0f}s" if ok else f"violations: {bad}",
    )
    assert not bad, bad
    assert elapsed <= 1800


def test_criterion_03_corner_certificate(announce):
    t0 = time.perf_counter()
    problem = nmf_problem(nested_rectangles_matrix(1.0, 1.0).M, 3)
    lp = build_plus_lp(problem, HierarchySpec(level=3))
    outcome = solve(lp)
    _plus3_status[(1.0, 1.0)] = outcome.status.value
    certified = (
        outcome.status is SolveStatus.INFEASIBLE
        and outcome.certificate is not None
        and verify_certificate(lp, outcome.certificate)
    )
    elapsed = time.perf_counter() - t0
    ok = certified and elapsed <= 600
    announce(
        3,
        ok,
        f"(1,1) at n=3 -> {outcome.status.value}, certificate "
        f"verified={certified}, {elapsed:.0f}s",
    )
    assert outcome.status is SolveStatus.INFEASIBLE
    assert certified
    assert elapsed <= 600


def test_criterion_04_global_soundness_sweep(announce):
    records = scan_region(2, grid=16)
    infeasible = [r for r in records if r.status == "infeasible"]
    unknown = [r for r in records if r.status == "unknown"]
    false_refutations = [
        r for r in infeasible if (1 + r.a) * (1 + r.b) <= 2.0 + 1e-9
    ]
    ok = not false_refutations
    announce(
        4,
        ok,
        f"grid-16 scan at n=2: {len(records)} records, "
        f"{len(infeasible)} infeasible, {len(unknown)} unknown, "
        f"{len(false_refutations)} false refutations",
    )
    assert not false_refutations, false_refutations


def test_criterion_05_level_nesting(announce):
    n2 = {
        (a, b): check_point(a, b, 2).status for a in GRID8 for b in GRID8
    }
    infeasible2 = sorted(p for p, s in n2.items() if s == "infeasible")
    leaks = [p for p in infeasible2 if _plus3(*p) != "infeasible"]
    ok = not leaks
    announce(
        5,
        ok,
        f"8x8 grid: n=2 infeasible set has {len(infeasible2)} points, "
        f"{len(leaks)} escape the n=3 infeasible set",
    )
    assert not leaks, leaks


def test_criterion_06_variant_dominance(announce):
    polarized = {
        (a, b): check_point(
            a, b, 3, variant=VARIANT_POLARIZED, pi=PI_IDENTITY
        ).status
        for a in GRID8
        for b in GRID8
    }
    infeasible_pol = sorted(p for p, s in polarized.items() if s == "infeasible")
    leaks = [p for p in infeasible_pol if _plus3(*p) != "infeasible"]
    ok = not leaks
    announce(
        6,
        ok,
        f"8x8 grid at n=3: polarized(id) infeasible set has "
        f"{len(infeasible_pol)} points, {len(leaks)} dominance violations",
    )
    assert not leaks, leaks


def test_criterion_07_lift_oracle(announce):
    problem = nmf_problem(nested_rectangles_matrix(0.0, 0.0).M, 3)
    lp = build_plus_lp(problem, HierarchySpec(level=3))
    # rank-3 factorization of the all-quarters matrix: K_A = ones(4,3)/4,
    # K_B = e_1 ones(4)^T; free coordinates drop each trailing row
    l_point = np.full(9, 0.25)
    r_point = np.array([1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    vec = lift_vector(problem, [l_point, r_point], 3)
    residual = max_violation(lp, vec)
    ok = residual < 1e-9
    announce(7, ok, f"rank-3 product lift residual {residual:.2e} on the n=3 LP")
    assert residual < 1e-9


def test_criterion_08_small_instance_oracle(announce):
    # brute force for k=1: K_A is a single stochastic column, K_B a row of
    # ones, so the product has identical columns; the identity does not
    identity = matrix_from_array(np.eye(2))
    out_identity = solve(build_plus_lp(nmf_problem(identity, 1), HierarchySpec(level=1)))
    constant = matrix_from_array(np.full((2, 2), 0.5))
    constant_status = [
        solve(build_plus_lp(nmf_problem(constant, 1), HierarchySpec(level=n))).status.value
        for n in (1, 2, 3)
    ]
    ok = (
        out_identity.status is SolveStatus.INFEASIBLE
        and constant_status == ["feasible"] * 3
    )
    announce(
        8,
        ok,
        f"identity k=1 at n=1 -> {out_identity.status.value}; "
        f"constant-half k=1 at n=1..3 -> {constant_status}",
    )
    assert out_identity.status is SolveStatus.INFEASIBLE
    assert constant_status == ["feasible"] * 3


def test_criterion_09_export_roundtrip(announce):
    rect = lambda a, b, k=3: nmf_problem(nested_rectangles_matrix(a, b).M, k)
    identity = nmf_problem(matrix_from_array(np.eye(2)), 1)
    constant = nmf_problem(matrix_from_array(np.full((2, 2), 0.5)), 1)
    cases = [
        (rect(0.0, 0.0), HierarchySpec(level=1)),
        (rect(1.0, 1.0), HierarchySpec(level=1)),
        (rect(0.7, 0.2), HierarchySpec(level=2)),
        (rect(1.0, 1.0), HierarchySpec(level=2)),
        (rect(1.0, 1.0, k=2), HierarchySpec(level=2)),
        (identity, HierarchySpec(level=1)),
        (constant, HierarchySpec(level=3)),
        (rect(1.0, 1.0), HierarchySpec(level=2, variant=VARIANT_POLARIZED, pi=PI_IDENTITY)),
        (rect(0.3, 0.3), HierarchySpec(level=2, variant=VARIANT_POLARIZED, pi=PI_HILBERT_SCHMIDT)),
        (rect(0.25, 0.5), HierarchySpec(level=2, family=FAMILY_FULL)),
    ]
    results = []
    for problem, spec in cases:
        lp = build_lp(problem, spec)
        internal = solve(lp).status
        reread = read_mps(write_mps(lp))
        external = solve(reread).status
        results.append(
            internal is not SolveStatus.UNKNOWN and internal is external
        )
    ok = all(results) and len(results) == 10
    announce(
        9, ok, f"{sum(results)}/10 sampled LPs keep their status through MPS"
    )
    assert all(results), results


def test_criterion_10_property_suite(announce):
    rng = np.random.default_rng(20260816)
    spaces = nmf_problem(nested_rectangles_matrix(0.5, 0.5).M, 3).spaces

    # canonical_index must not depend on letter order
    permutation_failures = 0
    for _ in range(1000):
        letters = []
        for s, sp in enumerate(spaces):
            for _ in range(rng.integers(0, 4)):
                letters.append(coord(s, int(rng.integers(0, sp.free_dim))))
            for _ in range(rng.integers(0, 3)):
                letters.append(unit(s))
        reference = canonical_index(3, letters, spaces)
        rng.shuffle(letters)
        if canonical_index(3, letters, spaces) != reference:
            permutation_failures += 1

    # closed-form count against full enumeration, alphabets up to 10
    count_failures = 0
    simplexes = [make_left_stochastic_space(d + 1, 1) for d in range(10)]
    for n in range(4):
        for sp1 in simplexes:
            if count_indices(n, [sp1]) != len(enumerate_indices(n, [sp1])):
                count_failures += 1
            for sp2 in simplexes:
                pair = [sp1, sp2]
                if count_indices(n, pair) != len(enumerate_indices(n, pair)):
                    count_failures += 1

    pi_ok = (
        check_pi_soundness(PI_IDENTITY, 16, 100)
        and check_pi_soundness(PI_HILBERT_SCHMIDT, 16, 100)
        and check_pi_soundness(PI_MATRIX_PRODUCT, 16, 100, output_shape=(4, 4))
    )

    # a verified refutation must stop verifying under multiplier noise
    lp = build_plus_lp(
        nmf_problem(matrix_from_array(np.eye(2)), 1), HierarchySpec(level=1)
    )
    outcome = solve(lp)
    assert outcome.certificate is not None
    assert verify_certificate(lp, outcome.certificate)
    rejected = 0
    for _ in range(20):
        noisy = FarkasRay(
            constraints=np.asarray(outcome.certificate.constraints)
            + rng.normal(scale=1e-3, size=lp.num_rows),
            lower=np.asarray(outcome.certificate.lower)
            + rng.normal(scale=1e-3, size=lp.num_variables),
            upper=np.asarray(outcome.certificate.upper)
            + rng.normal(scale=1e-3, size=lp.num_variables),
        )
        if not verify_certificate(lp, noisy):
            rejected += 1

    ok = (
        permutation_failures == 0
        and count_failures == 0
        and pi_ok
        and rejected == 20
    )
    announce(
        10,
        ok,
        f"permutation 1000/1000, count/enumerate exhaustive to alphabet 10, "
        f"pi soundness 3x100 samples, perturbed rays rejected {rejected}/20",
    )
    assert permutation_failures == 0
    assert count_failures == 0
    assert pi_ok
    assert rejected == 20

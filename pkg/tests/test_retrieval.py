import numpy as np
import pytest

from darklattice.errors import InvalidInputError
from darklattice.lattice import build_square_lattice
from darklattice.protocols.defects import DEFECT_SETS, DefectPoint, defect_sweep, fit_alpha
from darklattice.protocols.retrieval import optimal_waist, retrieval_experiment, waist_sweep


@pytest.fixture(scope="module")
def lat13():
    return build_square_lattice(13, 13, 0.3)


def test_preconditions(lat13):
    with pytest.raises(InvalidInputError):
        retrieval_experiment(build_square_lattice(5, 5, 0.8), 1.0)
    with pytest.raises(InvalidInputError):
        retrieval_experiment(lat13, 1.0, t_storage=-1.0)


def test_error_is_u_shaped(lat13):
    res = waist_sweep(lat13, [2.0, 3.5, 6.5])
    errs = [r.error for r in res]
    assert errs[1] < errs[0] and errs[1] < errs[2]
    assert all(0 < e < 1 for e in errs)


def test_one_sided_mode_collects_half(lat13):
    both = retrieval_experiment(lat13, 3.5 * 0.3)
    one = retrieval_experiment(lat13, 3.5 * 0.3, two_sided=False)
    assert one.eta == pytest.approx(both.eta / 2, rel=1e-12)


def test_storage_costs_efficiency(lat13):
    now = retrieval_experiment(lat13, 3.5 * 0.3)
    later = retrieval_experiment(lat13, 3.5 * 0.3, t_storage=10.0)
    assert later.stored_norm < 1
    assert later.error > now.error


def test_larger_lattices_do_better():
    found = []
    for n in (9, 13, 21):
        lat = build_square_lattice(n, n, 0.3)
        w, res = optimal_waist(lat)
        found.append((w, res.error))
    waists, errors = zip(*found)
    assert errors[0] > errors[1] > errors[2]
    assert waists[0] < waists[1] < waists[2]


def test_fit_alpha_through_origin():
    pts = [DefectPoint("a", 4.0, f, 1.0, 1.0 - 1.2 * f) for f in (0.01, 0.03, 0.05)]
    assert fit_alpha(pts) == pytest.approx(1.2)
    assert pts[1].drop == pytest.approx(0.036)


def test_defect_sets_fit_the_lattice():
    for holes in DEFECT_SETS.values():
        assert len(set(map(tuple, holes))) == len(holes)
        assert all(max(abs(x), abs(y)) <= 10 for x, y in holes)


def test_far_defect_is_harmless():
    base = build_square_lattice(21, 21, 0.3)
    points, _ = defect_sweep(base, {"far": [(8, 8)]}, waists=(4.0,))
    assert points[0].fraction < 1e-4
    assert abs(points[0].drop) < 5e-3

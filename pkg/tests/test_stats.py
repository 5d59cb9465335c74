import csv
import io
import math

import numpy as np
import pytest
from helpers import synthetic_spectrum
from hypothesis import given
from hypothesis import strategies as st

from trappedset.errors import InsufficientDataError, OutOfHorizonError
from trappedset.generators.three_disk import finite_difference_monodromy, solve_orbit
from trappedset.io import orbits_csv
from trappedset.stats import (
    check_minimal_separation,
    choose_j_plus,
    entropy_estimate,
    find_separation_witness,
    theta_plus_u,
    window_count,
)


def test_window_count_cylinder(cylinder30):
    assert window_count(cylinder30, 6.25, 0.5) == 1
    assert window_count(cylinder30, 5.25, 0.5) == 0
    with pytest.raises(OutOfHorizonError):
        window_count(cylinder30, 31.0)


def test_window_count_recount_from_csv(schottky12):
    rows = list(csv.DictReader(io.StringIO(orbits_csv(schottky12))))
    recount = sum(1 for r in rows if 7.5 <= float(r["length"]) <= 8.0)
    assert window_count(schottky12, 8.0, 0.5) == recount
    assert recount > 0


def test_entropy_cylinder_is_zero(cylinder30):
    fit = entropy_estimate(cylinder30, (4.0, 30.0))
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    lo, hi = fit.band
    assert lo <= 0.0 <= hi


def test_entropy_log_grid_has_slope_one():
    # lengths log n: window counts grow like e^T (1 - e^{-1/2})
    n = np.arange(2, int(math.exp(12.5)))
    spec = synthetic_spectrum(np.log(n))
    fit = entropy_estimate(spec, (6.0, 12.0))
    assert fit.slope == pytest.approx(1.0, abs=0.02)


def test_entropy_translation_invariant():
    n = np.arange(2, int(math.exp(9.5)))
    base = entropy_estimate(synthetic_spectrum(np.log(n)), (4.0, 9.0))
    moved = entropy_estimate(synthetic_spectrum(np.log(n) + 3.0), (7.0, 12.0))
    assert moved.slope == pytest.approx(base.slope, abs=1e-12)


def test_entropy_insufficient_data():
    with pytest.raises(InsufficientDataError):
        entropy_estimate(synthetic_spectrum([1.0, 5.0], 10.0), (1.0, 10.0))


def _witness_fixture(T, nu, c0):
    l1 = T - 0.4
    l2 = l1 + 2 * math.exp(-nu * T)
    l3 = l2 + math.exp(-(c0 + 1) * T)
    l4 = l3 + 2 * math.exp(-nu * T)
    return [l1, l2, l3, l4]


def test_witness_found_on_fixture():
    T, nu, c0 = 10.0, 0.5, 1.0
    lengths = _witness_fixture(T, nu, c0)
    w = find_separation_witness(lengths, T, nu, c0)
    assert w is not None
    assert w.left_gap >= math.exp(-nu * T)
    assert w.right_gap >= math.exp(-nu * T)
    assert w.cluster_span <= math.exp(-c0 * T)
    assert all(T - 0.5 <= x <= T for x in w.cluster)
    assert len(w.cluster) >= 3


def test_equal_lengths_merge():
    T, nu, c0 = 10.0, 0.5, 1.0
    lengths = _witness_fixture(T, nu, c0)
    w = find_separation_witness(lengths + [lengths[1]], T, nu, c0)
    assert w is not None
    assert 2 in w.multiplicities


def test_cylinder_has_no_witness(cylinder30):
    grid = [6.0, 8.25, 10.0, 20.5]
    out = check_minimal_separation(cylinder30, 0.1, 1.0, grid)
    assert set(out) == set(grid)
    assert all(v is None for v in out.values())


def test_arithmetic_spectrum_has_no_witness():
    T, nu = 8.0, 0.5
    step = math.exp(-2 * nu * T)
    lengths = T - 0.5 + step * np.arange(int(0.5 / step))
    assert find_separation_witness(lengths, T, nu, 1.0) is None


def test_separation_needs_positive_parameters(cylinder30):
    with pytest.raises(ValueError):
        check_minimal_separation(cylinder30, 0.0, 1.0, [5.0])


@given(
    st.lists(st.floats(0.0, 0.5), min_size=3, max_size=12),
    st.floats(0.05, 2.0),
    st.floats(0.05, 2.0),
    st.floats(0.1, 2.0),
)
def test_witness_monotone_in_nu(offsets, nu, extra, c0):
    T = 3.0
    lengths = [T - x for x in offsets]
    if find_separation_witness(lengths, T, nu, c0) is not None:
        assert find_separation_witness(lengths, T, nu + extra, c0) is not None


def test_theta_cylinder(cylinder30):
    th = theta_plus_u(cylinder30, (10.0, 20.0))
    assert th == pytest.approx(0.5, abs=1e-3)
    assert abs(th - 0.5) <= 1 / (2 * 10.0)


def test_theta_schottky(schottky12):
    th = theta_plus_u(schottky12, (8.0, 12.0))
    assert th == pytest.approx(0.5, abs=1e-2)
    assert abs(th - 0.5) <= 1 / (2 * 8.0)


def test_theta_three_disk_matches_finite_differences(disk_config, three_disk24):
    oracle = []
    for o in three_disk24.in_window(8.0, 24.0):
        if o.repetition != 1:
            continue
        solved = solve_orbit(disk_config, o.code.symbols)
        fd = finite_difference_monodromy(disk_config, solved)
        t = np.trace(fd)
        lam = (t + math.copysign(math.sqrt(t * t - 4), t)) / 2
        oracle.append(math.log(abs(1 - lam)) / (2 * o.length))
    # iterates only add log|1 - lam^m| / (2 m l), so primitives bound the max
    assert theta_plus_u(three_disk24, (8.0, 24.0)) == pytest.approx(max(oracle), abs=1e-3)


def test_theta_empty_range(cylinder30):
    with pytest.raises(InsufficientDataError):
        theta_plus_u(cylinder30, (2.5, 3.5))


def test_choose_j_plus():
    assert choose_j_plus(0.5, 0.0, 0.1).j_plus == pytest.approx(0.6)
    assert choose_j_plus(0.5, 0.3, 0.7).j_plus == pytest.approx(0.8)
    assert choose_j_plus(0.0, 0.0, 0.0).j_plus == pytest.approx(0.1)
    with pytest.raises(ValueError):
        choose_j_plus(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        choose_j_plus(math.nan, 0.0, 0.0)

import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from trappedset import bump
from trappedset.errors import ConfigurationError, InsufficientDataError, TruncationError
from trappedset.resonances import (
    CALIBRATED_ORIENTED,
    CALIBRATED_RULE,
    Lattice,
    MultiplicityRule,
    Poisson,
    PowerLaw,
    Resonance,
    ResonanceSet,
    Synthetic,
    calibrate_cylinder,
    cylinder_discrepancy,
    cylinder_lattice,
    fit_count_exponent,
    fit_count_slope,
    power_lower_bound_check,
    read_resonances,
    required_box,
    spectral_side,
    strip_count,
    strip_measure,
    synthetic_ensemble,
    tauberian_accumulate,
    window_lower_bound_check,
    write_resonances,
)
from trappedset.trace import WindowedTest


def _synthetic(values, mults=None):
    mults = mults or [1] * len(values)
    return ResonanceSet(tuple(Resonance(complex(v), m) for v, m in zip(values, mults)), Synthetic(0, None))


@pytest.fixture(scope="module")
def lattice2():
    return cylinder_lattice(2.0, 3, 40)


# ---------------------------------------------------------------------------
# lattice


def test_lattice_first_point(lattice2):
    assert complex(math.pi, -0.5) in {r.lam for r in lattice2}


def test_lattice_point_is_zeta_zero():
    # s = 1/2 - i lam on the k = 0 row: lam = pi - i/2 gives s = -i pi
    lam = complex(math.pi, -0.5)
    s = 0.5 - 1j * lam
    assert abs(s + 1j * math.pi) < 1e-15
    assert abs(1 - cmath.exp(-2 * s)) < 1e-15


def test_lattice_row_spacing(lattice2):
    row = sorted(r.lam.real for r in lattice2 if r.lam.imag == -0.5)
    assert np.allclose(np.diff(row), math.pi, rtol=0, atol=1e-13)
    assert len(row) == 81


def test_lattice_rows_and_rules():
    assert {r.lam.imag for r in cylinder_lattice(2.0, 2, 1)} == {-0.5, -1.5, -2.5}
    assert [MultiplicityRule.UNIT(k) for k in range(3)] == [1, 1, 1]
    assert [MultiplicityRule.TWO(k) for k in range(3)] == [2, 2, 2]
    assert [MultiplicityRule.ODD(k) for k in range(3)] == [1, 3, 5]


def test_lattice_invalid():
    with pytest.raises(ConfigurationError):
        cylinder_lattice(0.0, 1, 1)
    with pytest.raises(ConfigurationError):
        cylinder_lattice(2.0, -1, 1)


def test_resonance_rejects_upper_half_plane():
    with pytest.raises(ConfigurationError):
        Resonance(complex(1.0, 0.1))


# ---------------------------------------------------------------------------
# spectral side


def test_spectral_side_empty():
    ev = spectral_side(_synthetic([]), WindowedTest.phi2(10.5, 50.0))
    assert ev.value == 0
    assert ev.truncation_bound == 0


def test_spectral_side_single_resonance():
    lam, test = 7.0, WindowedTest.phi2(10.5, 7.0)
    a, b = test.a, test.b
    ev = spectral_side(_synthetic([lam]), test)
    expected = a * bump.phi_hat(0.0) + a * bump.phi_hat(2 * a * lam) * cmath.exp(-2j * b * lam)
    assert abs(ev.value - expected) < 1e-12
    # the dominant term is a * integral of phi
    assert abs(ev.value - a * bump.phi_integral()) < abs(a * bump.phi_hat(2 * a * lam)) + 1e-15
    assert abs(a * bump.phi_integral() - 0.5 * 1.75) < 1e-12


@given(
    st.lists(st.floats(-40, 40), min_size=1, max_size=6),
    st.lists(st.floats(-40, 40), min_size=1, max_size=6),
)
def test_spectral_side_additive(xs, ys):
    test = WindowedTest.phi2(8.5, 30.0)
    left = _synthetic([complex(x, -0.5) for x in xs])
    right = _synthetic([complex(y, -1.0) for y in ys])
    total = spectral_side(left.union(right), test).value
    parts = spectral_side(left, test).value + spectral_side(right, test).value
    assert abs(total - parts) <= 1e-12 * max(1.0, abs(total)) + 1e-15


def test_pairing_reality_on_symmetric_lattice():
    test = WindowedTest.phi2(8.5, 50.0)
    res = cylinder_lattice(2.0, *required_box(2.0, test, 1e-10))
    full = spectral_side(res, test, 1e-10).value
    pos = spectral_side(res.select(lambda r: r.lam.real > 0), test, 1.0).value
    axis = spectral_side(res.select(lambda r: r.lam.real == 0), test, 1.0).value
    assert abs(full.imag) < 1e-12
    assert abs(full - (2 * pos.real + axis.real)) < 1e-12
    assert abs(axis.imag) < 1e-15


@pytest.mark.parametrize("T", [8.5, 10.5])
def test_deep_rows_suppressed(T):
    test = WindowedTest.phi2(T, 100.0)
    res = cylinder_lattice(2.0, 4, 400)
    rows = spectral_side(res, test, 1.0).details["rows"]
    mags = [abs(rows[k + 0.5]) for k in range(5)]
    b_eff = test.b - test.a
    assert b_eff >= T - 1
    for k in range(4):
        assert mags[k + 1] <= math.exp(-b_eff) * mags[k]


@pytest.mark.parametrize("T", [6.5, 10.5])
@pytest.mark.parametrize("lam", [50.0, 500.0])
def test_cylinder_identity(T, lam):
    diff, bound = cylinder_discrepancy(2.0, T, lam)
    assert diff <= bound + 1e-6


def test_truncation_error_names_box():
    test = WindowedTest.phi2(10.5, 100.0)
    need = required_box(2.0, test, 1e-9)
    with pytest.raises(TruncationError, match=f"k_max={need[0]}, n_max={need[1]}"):
        spectral_side(cylinder_lattice(2.0, 0, 5), test, 1e-9)
    ev = spectral_side(cylinder_lattice(2.0, *need), test, 1e-9)
    assert ev.truncation_bound <= 1e-9


def test_calibration_selects_frozen_default():
    cal = calibrate_cylinder()
    assert (cal.rule, cal.oriented) == (CALIBRATED_RULE, CALIBRATED_ORIENTED)
    assert (cal.rule, cal.oriented) == (MultiplicityRule.UNIT, True)
    assert cal.winners == ((MultiplicityRule.UNIT, True),)
    assert len(cal.table) == 6


def test_spectral_side_rejects_huge_lambda():
    test = WindowedTest.phi2(10.5, mpmath.mpf(10) ** 15)
    with pytest.raises(ConfigurationError):
        spectral_side(_synthetic([1.0]), test)


# ---------------------------------------------------------------------------
# strip counting


def test_strip_measure_rows(lattice2):
    m1 = strip_measure(lattice2, 1.0)
    assert len(m1.atoms) == 81
    assert np.allclose(np.sort(m1.atoms), math.pi * np.arange(-40, 41), atol=1e-12)
    assert strip_measure(lattice2, 2.0).total == 162
    assert strip_measure(lattice2, 0.4).total == 0
    with pytest.raises(ConfigurationError):
        strip_measure(lattice2, 0.0)


def test_strip_count_examples(lattice2):
    m1 = strip_measure(lattice2, 1.0)
    assert strip_count(m1, 10.0) == 7
    assert strip_count(m1, math.pi) == 3
    with pytest.raises(ConfigurationError):
        strip_count(m1, 0.0)


@given(st.floats(0.1, 120), st.floats(0.0, 50), st.floats(0.3, 3.9), st.floats(0.0, 2.0))
def test_strip_count_monotone(r, dr, s, ds):
    res = cylinder_lattice(2.0, 3, 40)
    m = strip_measure(res, s)
    assert strip_count(m, r) <= strip_count(m, r + dr)
    assert strip_count(m, r) <= strip_count(strip_measure(res, s + ds), r)


def test_strip_count_exact_lattice_formula(lattice2):
    m1 = strip_measure(lattice2, 1.0)
    for r in np.linspace(0.5, 120, 50):
        assert strip_count(m1, r) == 2 * math.floor(r / math.pi) + 1


def test_count_slope_on_cylinder():
    res = cylinder_lattice(2.0, 0, 4000)
    fit = fit_count_slope(strip_measure(res, 1.0), np.geomspace(1e2, 1e4, 40))
    assert abs(fit.slope - 2 / math.pi) < 0.01 * 2 / math.pi


@pytest.mark.parametrize("exponent", [1.3, 1.7])
def test_power_law_exponent(exponent):
    res = synthetic_ensemble(PowerLaw(exponent, 1.0, 1000.0), seed=3)
    fit = fit_count_exponent(strip_measure(res, 1.0), np.geomspace(10, 1000, 30))
    assert abs(fit.slope - exponent) < 0.05


def test_fit_exponent_needs_data():
    with pytest.raises(InsufficientDataError):
        fit_count_exponent(strip_measure(_synthetic([]), 1.0), [1.0, 2.0])


def test_power_lower_bound_check():
    m = strip_measure(cylinder_lattice(2.0, 0, 400), 1.0)
    ok = power_lower_bound_check(m, np.geomspace(10, 1000, 20), 0.9)
    assert ok.holds and ok.constant > 0 and ok.failures == ()
    # a sparse ensemble cannot sustain exponent 2
    bad = power_lower_bound_check(m, np.geomspace(10, 1000, 20), 2.0)
    assert not bad.holds and bad.failures


def test_window_lower_bound_wide_windows(lattice2):
    m1 = strip_measure(lattice2, 1.0)
    # nu chosen so that w = beta^nu >= pi for beta >= 10
    rows = window_lower_bound_check(m1, [10.0, 20.0, 40.0], 0.1, 1.0, 0.5)
    for row in rows:
        assert row.half_width >= math.pi
        # each side contributes floor(2w / pi) atoms at least
        assert row.mass >= math.floor(2 * row.half_width / math.pi)
        assert np.isfinite(row.ratio) and not row.empty


def test_window_lower_bound_narrow_window_flagged(lattice2):
    m1 = strip_measure(lattice2, 1.0)
    # beta mid-gap, half-width beta^nu < pi / 2
    beta = 10.5 * math.pi
    rows = window_lower_bound_check(m1, [beta], 0.01, 1.0, 0.1)
    assert rows[0].half_width < math.pi / 2
    assert rows[0].mass == 0 and rows[0].empty and rows[0].ratio == 0


def test_window_lower_bound_schottky_smoke(schottky12):
    lengths = sorted({round(o.length, 9) for o in schottky12.orbits})[:6]
    res = _synthetic([complex(2 * math.pi * n / ell, -0.5) for ell in lengths for n in range(-50, 51)])
    rows = window_lower_bound_check(strip_measure(res, 1.0), [5.0, 20.0, 80.0], 0.1, 1.0, 0.5)
    assert len(rows) == 3
    assert all(np.isfinite(r.ratio) for r in rows)


# ---------------------------------------------------------------------------
# Tauberian lemma


def test_tauberian_unit_lattice():
    m = strip_measure(synthetic_ensemble(Lattice(1.0, 1, 1000.0)), 1.0)
    v = tauberian_accumulate(m, 0.5, 0.0, 0.5, 1.0)
    assert v.hypothesis_held and v.conclusion_held and v.verdict
    assert abs(v.c1 - 1.0) < 0.05
    assert v.first_violation is None


def test_tauberian_single_atom():
    m = strip_measure(_synthetic([complex(5.0, -0.5)]), 1.0)
    v = tauberian_accumulate(m, 0.5, 0.0, 0.5, 1.0, r_max=100.0)
    assert not v.verdict
    assert v.first_violation is not None and v.first_violation > 0


def test_tauberian_cylinder():
    m = strip_measure(cylinder_lattice(2.0, 0, 2000), 1.0)
    v = tauberian_accumulate(m, 0.5, 0.0, 0.25, 10.0)
    assert v.verdict
    assert 0.57 <= v.c1 <= 0.70
    assert v.c2 >= 0
    cum = np.array([m.folded().mass(0.0, x) for x in v.r_grid])
    assert np.all(cum >= v.c1 * v.r_grid - v.c2 - 1e-9)


def test_tauberian_errors():
    m = strip_measure(cylinder_lattice(2.0, 0, 10), 1.0)
    with pytest.raises(ConfigurationError):
        tauberian_accumulate(m, 1.0, 0.0, 0.5, 1.0)
    with pytest.raises(ConfigurationError):
        tauberian_accumulate(m, 0.5, -1.0, 0.5, 1.0)
    with pytest.raises(InsufficientDataError):
        tauberian_accumulate(strip_measure(_synthetic([]), 1.0), 0.5, 0.0, 0.5, 1.0)


# ---------------------------------------------------------------------------
# ensembles and CSV


def test_lattice_ensemble_integers():
    res = synthetic_ensemble(Lattice(1.0, 1, 20.0))
    assert [r.lam for r in res] == [complex(i, -0.5) for i in range(21)]


def test_poisson_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_resonances(a, synthetic_ensemble(Poisson(1.0, 1.0, 200.0), seed=11))
    write_resonances(b, synthetic_ensemble(Poisson(1.0, 1.0, 200.0), seed=11))
    assert a.read_bytes() == b.read_bytes()
    write_resonances(b, synthetic_ensemble(Poisson(1.0, 1.0, 200.0), seed=12))
    assert a.read_bytes() != b.read_bytes()


def test_invalid_descriptors():
    for desc in (Lattice(0.0), PowerLaw(-1.0), Poisson(0.0), "lattice"):
        with pytest.raises(ConfigurationError):
            synthetic_ensemble(desc)


def test_csv_round_trip(tmp_path):
    res = cylinder_lattice(2.0, 2, 5, MultiplicityRule.ODD)
    path = tmp_path / "res.csv"
    write_resonances(path, res)
    assert path.read_text().splitlines()[0] == "re,im,multiplicity"
    back = read_resonances(path)
    assert [r.lam for r in back] == [r.lam for r in res]
    assert list(back.multiplicities) == list(res.multiplicities)


def test_csv_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,y,m\n1,-0.5,1\n")
    with pytest.raises(ConfigurationError):
        read_resonances(path)

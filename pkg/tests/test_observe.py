import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperq.errors import ConfigError, DegenerateXi, FitError, NonDecayingTail, NumericsError
from hyperq.evolve import PropagationRoute
from hyperq.model import CoherentPacket, LogNormalPacket, PhysicalParams, singularity_time
from hyperq.observe import (
    BRACKET_TERMS, DivergenceCriteria, LogComplex, MomentSeries, Verdict, bracket_oracle,
    bracket_oracle_terms, closed_form_tl, closed_form_tl_terms, divergence_profile, fit_growth,
    free_window_exponent, lognormal_moment_oracle, lognormal_moment_printed, moment_rotation,
    moment_series, moment_truncated, profiles_to_csv, scan_singularities, tl_prefactor, total_x2,
)

P = PhysicalParams(1.0, 0.0, 1.0)
W0 = CoherentPacket(0j)
T0 = math.pi / 32
LADDER = [4, 8, 16, 32]


# -- moments -------------------------------------------------------------------

def test_rotation_examples():
    assert abs(moment_rotation(2, math.pi / 64, W0, P)[0] - 2**0.75 / 2) < 1e-10
    assert abs(moment_rotation(2, 0.0, W0, P)[0] - 0.5) < 1e-12
    assert abs(moment_rotation(0, 0.0, LogNormalPacket(1.0), P)[0] - math.sqrt(2) / 2) < 1e-12


@pytest.mark.parametrize("t", [0.0981748, 0.1, 0.15])
def test_rotation_diverges_past_singular_time(t):
    with pytest.raises(NonDecayingTail):
        moment_rotation(2, t, W0, P)


def test_rotation_rejects_bad_order():
    with pytest.raises(ConfigError):
        moment_rotation(-1, 0.0, W0, P)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 4])
@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_lognormal_oracle_agreement(n, a):
    w = LogNormalPacket(a)
    p = PhysicalParams(1.0, 0.3, 1.0)
    for t in (0.0, 0.07, 0.2):
        v, _ = moment_rotation(n, t, w, p)
        assert abs(v / lognormal_moment_oracle(n, t, a, p) - 1) < 1e-8


@pytest.mark.parametrize("w", [CoherentPacket(0j), CoherentPacket(0.3 + 0.2j), LogNormalPacket(0.8)])
def test_linear_regime_exactness(w):
    p = PhysicalParams(1.0, 0.7, 0.0)
    base = moment_rotation(2, 0.0, w, p)[0]
    for t in (0.3, 1.0, 2.5):
        assert abs(moment_rotation(2, t, w, p)[0] * math.exp(-4 * 0.7 * t) / base - 1) < 1e-8


def test_odd_moment_of_displaced_packet():
    w = CoherentPacket(0.5)
    assert abs(moment_rotation(1, 0.0, w, P)[0] - math.sqrt(2) * 0.5) < 1e-10


def test_truncated_limits():
    assert moment_truncated(2, 0.05, 0.0, W0, P) == (0.0, 0.0)
    with pytest.raises(ConfigError):
        moment_truncated(2, 0.05, -1.0, W0, P)
    full = moment_rotation(2, 0.05, W0, P)[0]
    for route in ("rotation", "saddle"):
        v, _ = moment_truncated(2, 0.05, 40.0, W0, P, route)
        assert abs(v / full - 1) < 1e-9


def test_truncated_spectral_route_cut():
    full = moment_rotation(2, 0.02, W0, P)[0]
    v, _ = moment_truncated(2, 0.02, 40.0, W0, P, "spectral")
    assert abs(v / full - 1) < 1e-6


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.1, max_value=100.0))
def test_truncated_is_always_finite(t, x0):
    v, e = moment_truncated(2, t, x0, W0, P, "saddle")
    if isinstance(v, LogComplex):
        assert math.isfinite(v.log_abs)
    else:
        assert np.isfinite(v)


def test_huge_moment_returns_log_representation():
    w = LogNormalPacket(1.0)
    v, _ = moment_truncated(40, 0.0, 1e300, w, P, "saddle")
    assert isinstance(v, LogComplex)
    assert abs(v.log_abs - lognormal_moment_oracle(40, 0.0, 1.0, P, log=True)) < 1e-8
    assert abs(v) == math.inf
    assert abs(v.log10_abs * math.log(10) - v.log_abs) < 1e-12


def test_log_complex_linear():
    z = LogComplex(math.log(2.0), math.pi / 2)
    assert abs(z.linear() - 2j) < 1e-15
    assert abs(z) == pytest.approx(2.0)


# -- free windows -------------------------------------------------------------

def test_total_x2_partition_at_zero():
    vals = [total_x2(0.0, x0, W0, P)[0] for x0 in (0.1, 0.5, 1.0, 2.0, 4.0)]
    assert max(abs(v - 0.5) for v in vals) < 1e-8 * 0.5
    with pytest.raises(ConfigError):
        total_x2(0.0, 0.0, W0, P)


def test_total_x2_large_window():
    v, _ = total_x2(0.02, 30.0, W0, P)
    assert abs(v / moment_rotation(2, 0.02, W0, P)[0] - 1) < 1e-10


def test_free_window_exponent():
    assert abs(free_window_exponent(W0, P) - 2.0) < 0.02


# -- singular times -----------------------------------------------------------

def test_prefactor_phase_identity():
    p = PhysicalParams(1.0, 0.4, 1.3)
    for l in range(6):
        pref = tl_prefactor(l, 0j, p)
        expected = (-1j) ** l / math.sqrt(math.pi) * math.exp(4 * p.omega * singularity_time(l, p)) \
            * np.exp(3j * math.pi / 4)
        assert abs(pref - expected) < 1e-14 * abs(expected)


def test_prefactor_requires_mu():
    with pytest.raises(ConfigError):
        tl_prefactor(0, 0j, PhysicalParams(1.0, 0.0, 0.0))


def test_bracket_example():
    assert abs(bracket_oracle(1.0, 1.0) - (math.e - 5 / math.e)) < 1e-14
    assert abs(bracket_oracle(1.0, 1.0) - 0.87889) < 1e-5


@given(st.complex_numbers(min_magnitude=1e-4, max_magnitude=5.0), st.floats(min_value=0.1, max_value=3.0))
def test_bracket_is_even(c, x0):
    a, b = bracket_oracle(c, x0), bracket_oracle(-c, x0)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_bracket_small_c_limit():
    with pytest.warns(RuntimeWarning):
        assert bracket_oracle(0.0, 2.0) == pytest.approx(16 / 3)
    # the Taylor branch and the closed form agree across the switch-over
    x0 = 1.0
    for c in (0.99e-3, 1.01e-3, 1e-3j, 1e-6 + 1e-6j):
        q = 2 * x0**3 / 3 + c * c * x0**5 / 5
        assert abs(bracket_oracle(c, x0) - q) < 1e-12


def test_bracket_term_magnitudes_match_printed():
    alpha = 0.5 + 0.25j
    for l in (0, 1):
        xi = alpha.conjugate() + 1j * (-1) ** l * alpha
        pr = closed_form_tl_terms(l, alpha, 1.5, P)
        orc = bracket_oracle_terms(math.sqrt(2) * xi, 1.5)
        for k in BRACKET_TERMS:
            assert abs(abs(pr[k]) / abs(orc[k]) - 1) < 1e-12
        # only the x0^2 sinh term differs in sign
        signs = {k: (pr[k] / orc[k]).real > 0 for k in BRACKET_TERMS}
        assert signs == {"sinh": True, "cosh": True, "x0^2 sinh": False}


@pytest.mark.parametrize("l", [0, 1])
def test_saddle_route_matches_oracle_at_singular_time(l):
    alpha, x0 = 0.5 + 0.25j, 2.0
    w = CoherentPacket(alpha)
    t = singularity_time(l, P)
    xi = alpha.conjugate() + 1j * (-1) ** l * alpha
    expected = tl_prefactor(l, alpha, P) * bracket_oracle(math.sqrt(2) * xi, x0)
    v, _ = moment_truncated(2, t, x0, w, P, "saddle")
    assert abs(v - expected) < 1e-9 * abs(expected)
    # the bracket as printed does not reproduce it
    assert abs(closed_form_tl(l, alpha, x0, P) - expected) > 1e-3 * abs(expected)


def test_degenerate_xi():
    alpha = 0.7 * np.exp(1j * math.pi / 4)
    with pytest.raises(DegenerateXi) as info:
        closed_form_tl(0, alpha, 2.0, P)
    pref = tl_prefactor(0, alpha, P)
    assert abs(info.value.limit - pref * 16 / 3) < 1e-12
    assert abs(info.value.printed_limit - pref * (-80 / 3)) < 1e-12


# -- divergence scanning ------------------------------------------------------

def test_profile_verdicts():
    assert divergence_profile(T0, W0, P, LADDER).verdict == Verdict.DIVERGING
    conv = divergence_profile(0.8 * T0, W0, P, LADDER)
    assert conv.verdict == Verdict.CONVERGED
    assert conv.ladder[-1][1] == pytest.approx(moment_rotation(2, 0.8 * T0, W0, P)[0], rel=1e-9)
    zero = divergence_profile(0.0, W0, P, LADDER)
    assert zero.verdict == Verdict.CONVERGED
    assert abs(zero.ladder[-1][1] - 0.5) < 1e-12


def test_profile_growth_ratio_near_cubic():
    pr = divergence_profile(T0, W0, P, LADDER)
    assert 6.0 < pr.growth_ratio < 9.0


def test_profile_preconditions():
    with pytest.raises(ConfigError):
        divergence_profile(0.0, W0, P, [4, 8, 16])
    with pytest.raises(ConfigError):
        divergence_profile(0.0, W0, P, [4, 8, 8, 16])
    with pytest.raises(ConfigError):
        DivergenceCriteria(diverge_ratio=1.0)
    with pytest.raises(ConfigError):
        divergence_profile(0.0, W0, P, LADDER, criteria=DivergenceCriteria(min_rungs=5))


def test_scan_without_nonlinearity_flags_nothing():
    grid = np.round(np.arange(0, 0.1200001, 0.002), 10)
    res = scan_singularities(grid, W0, PhysicalParams(1.0, 0.0, 0.0), LADDER)
    assert res.flagged == [] and res.clusters == ()
    assert "singularity_times" not in res.summary(PhysicalParams(1.0, 0.0, 0.0))


def test_scan_before_first_threshold_flags_nothing():
    grid = np.round(np.arange(0, 0.0500001, 0.002), 10)
    assert scan_singularities(grid, W0, P, LADDER).flagged == []


def test_scan_summary_and_csv():
    res = scan_singularities([0.094, 0.096, 0.098, 0.1], W0, P, LADDER)
    s = res.summary(P)
    assert s["flagged"] == [0.098]
    assert s["singularity_times"] == [pytest.approx(T0)]
    text = profiles_to_csv(res.profiles)
    lines = text.splitlines()
    assert lines[0].startswith("t,x0,route,value_real")
    assert len(lines) == 1 + 4 * len(LADDER)
    with pytest.raises(ConfigError):
        scan_singularities([0.1, 0.05], W0, P, LADDER)


# -- log-normal closed forms and fits -------------------------------------------

def test_lognormal_closed_forms():
    a = 1.0
    assert lognormal_moment_printed(0, 0.0, a, P) == pytest.approx(math.sqrt(2) / 2, rel=1e-15)
    assert lognormal_moment_oracle(0, 0.0, a, P) == pytest.approx(math.sqrt(2) / 2, rel=1e-15)
    assert lognormal_moment_oracle(2, 0.0, 1.0, P) == pytest.approx(math.sqrt(2) / 2 * math.e**2, rel=1e-15)
    assert abs(lognormal_moment_oracle(2, 0.0, 1.0, P) - 5.2249) < 1e-4
    assert lognormal_moment_oracle(0, 0.1, 1.0, P) == pytest.approx(math.sqrt(2) / 2 * math.exp(0.32), rel=1e-14)
    flat = PhysicalParams(1.0, 0.0, 0.0)
    for t in (0.0, 0.5, 2.0):
        assert lognormal_moment_printed(2, t, 1.2, flat) == pytest.approx(
            math.sqrt(2) / 2 * math.exp(1.2**4 * 4), rel=1e-14)
    with pytest.raises(ConfigError):
        lognormal_moment_oracle(0, 0.0, 0.0, P)


def _series(ts, vs, n=2, route="rotation"):
    s = MomentSeries()
    for t, v in zip(ts, vs):
        s.append(t, n, v, 0.0, route)
    return s


def test_fit_synthetic():
    ts = np.linspace(0, 1, 11)
    f = fit_growth(_series(ts, 2 * np.exp(3 * ts + 5 * ts * ts)))
    assert abs(f.c0 - math.log(2)) < 1e-10 and abs(f.c1 - 3) < 1e-10 and abs(f.c2 - 5) < 1e-10
    assert f.residual >= 0 and f.n == 2 and f.route is PropagationRoute.ROTATION


def test_fit_errors():
    ts = np.linspace(0, 1, 8)
    with pytest.raises(FitError):
        fit_growth(_series(ts[:5], np.ones(5)))
    with pytest.raises(FitError):
        fit_growth(_series(ts, -np.ones(8)))
    mixed = _series(ts[:4], np.ones(4))
    for t in ts[4:]:
        mixed.append(t, 3, 1.0, 0.0, "rotation")
    with pytest.raises(FitError):
        fit_growth(mixed)


def test_fit_classical_rate():
    ts = np.linspace(0, 0.2, 21)
    f = fit_growth(moment_series(2, ts, LogNormalPacket(1.0), PhysicalParams(1.0, 1.0, 0.0)))
    assert abs(f.c1 / 4 - 1) < 5e-3
    assert abs(f.c2) < 1e-6


def test_fit_quantum_rate():
    ts = np.linspace(0, 0.2, 21)
    a = 1.0
    f = fit_growth(moment_series(0, ts, LogNormalPacket(a), P), P, a)
    assert abs(f.c2 / (32 / a**2) - 1) < 1e-3
    assert abs(f.kappa_scale - 32) < 0.032


# -- series containers ----------------------------------------------------------

def test_series_csv_roundtrip():
    s = moment_series(2, [0.0, 0.01, 0.02], W0, P)
    text = s.to_csv()
    assert text.splitlines()[0] == "t,n,route,value,log10_magnitude,err_estimate,flags"
    back = MomentSeries.from_csv(text)
    assert back.entries == s.entries
    with pytest.raises(ConfigError):
        MomentSeries.from_csv("a,b\n1,2\n")


def test_series_rejects_bad_entries():
    s = MomentSeries()
    with pytest.raises(NumericsError):
        s.append(0.0, 2, math.inf, 0.0, "rotation")
    with pytest.raises(NumericsError):
        s.append(0.0, 2, 1.0, -1.0, "rotation")
    with pytest.raises(ValueError):
        s.append(0.0, 2, 1.0, 0.0, "nonsense")


def test_series_propagates_divergence():
    with pytest.raises(NonDecayingTail):
        moment_series(2, [0.05, 0.1], W0, P)

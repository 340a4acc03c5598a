import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperq.errors import ConfigError, DomainError, NoSingularity
from hyperq.model import (
    CoherentPacket, LogNormalPacket, PhysicalParams, RotatedArg, conj_eval_packet, dilation_growth,
    energy_dispersion, eval_packet, packet_norm, rotation_angle, singularity_time,
)

P = PhysicalParams(1.0, 0.0, 1.0)

hbars = st.floats(min_value=0.1, max_value=10.0)
mus = st.floats(min_value=-10.0, max_value=10.0).filter(lambda m: abs(m) > 1e-3)
thetas = st.floats(min_value=-10.0, max_value=10.0)
ys = st.floats(min_value=1e-3, max_value=5.0)
alphas = st.complex_numbers(max_magnitude=2.0)


def test_singularity_times():
    assert singularity_time(0, P) == pytest.approx(math.pi / 32, rel=1e-15)
    assert abs(singularity_time(0, P) - 0.0981748) < 1e-7
    assert singularity_time(1, P) == pytest.approx(3 * math.pi / 32, rel=1e-15)
    with pytest.raises(NoSingularity):
        singularity_time(0, PhysicalParams(1.0, 0.0, 0.0))


def test_negative_mu_reverses_time():
    assert singularity_time(0, PhysicalParams(1.0, 0.0, -1.0)) == -singularity_time(0, P)


@given(st.integers(min_value=0, max_value=50), hbars, mus)
def test_singularity_spacing_and_angle(l, hbar, mu):
    p = PhysicalParams(hbar, 0.0, mu)
    dt = singularity_time(l + 1, p) - singularity_time(l, p)
    assert dt == pytest.approx(math.pi / (16 * hbar * mu), rel=1e-12)
    assert rotation_angle(singularity_time(l, p), p) == pytest.approx(math.pi / 4 + l * math.pi / 2, rel=1e-12)


def test_rotation_angle_and_growth():
    assert rotation_angle(0.0, P) == 0.0
    assert rotation_angle(singularity_time(0, P), P) == pytest.approx(math.pi / 4, rel=1e-15)
    assert rotation_angle(3.7, PhysicalParams(1.0, 0.0, 0.0)) == 0.0
    # the angle is never reduced modulo 2 pi
    assert rotation_angle(10.0, P) == 80.0
    assert dilation_growth(0.0, P) == 1.0
    assert dilation_growth(1.0, PhysicalParams(1.0, 1.0, 0.0)) == pytest.approx(math.e**4, rel=1e-15)
    assert np.all(dilation_growth(np.linspace(0, 5, 6), P) == 1.0)


def test_energy_dispersion():
    assert energy_dispersion(0.0, P) == 0.0
    assert energy_dispersion(1.0, PhysicalParams(1.0, 1.0, 1.0)) == -2.0
    eps = np.linspace(-3, 3, 7)
    assert np.allclose(energy_dispersion(eps, PhysicalParams(1.0, 0.5, 0.0)), eps)


def test_params_validation():
    with pytest.raises(ConfigError):
        PhysicalParams(0.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        PhysicalParams(1.0, math.inf, 1.0)
    with pytest.raises(ConfigError):
        LogNormalPacket(0.0)
    with pytest.raises(ConfigError):
        CoherentPacket(complex(math.nan, 0))


def test_rotated_arg_validation():
    with pytest.raises(DomainError):
        RotatedArg(0.0)
    with pytest.raises(DomainError):
        RotatedArg(1.0, math.inf)
    with pytest.raises(DomainError):
        RotatedArg(1.0, 0.0, 2)
    z = RotatedArg(2.0, math.pi / 2, -1)
    assert abs(z.z - (-2j)) < 1e-15


def test_eval_examples():
    w = CoherentPacket(0j)
    for y in (0.1, 1.0, 2.5):
        assert abs(eval_packet(w, RotatedArg(y)) - math.pi**-0.25 * math.exp(-y * y / 2)) < 1e-15
    v = eval_packet(w, RotatedArg(1.0, math.pi / 4))
    assert abs(v - math.pi**-0.25 * cmath.exp(-0.5j)) < 1e-15
    assert abs(eval_packet(LogNormalPacket(1.0), RotatedArg(1.0)) - 1 / math.sqrt(4 * math.sqrt(math.pi))) < 1e-15


def test_conj_eval_examples():
    w = CoherentPacket(0j)
    # conj(Psi(exp(-i pi/4))) = conj(pi^-1/4 exp(i/2)) = pi^-1/4 exp(-i/2)
    v = conj_eval_packet(w, RotatedArg(1.0, math.pi / 4))
    assert abs(v - math.pi**-0.25 * cmath.exp(-0.5j)) < 1e-15
    for th in (0.3, 1.1):
        prod = conj_eval_packet(w, RotatedArg(1.3, th)) * eval_packet(w, RotatedArg(1.3, -th))
        assert abs(prod - math.exp(-1.69 * math.cos(2 * th)) / math.sqrt(math.pi)) < 1e-14


@given(alphas, ys, thetas, st.sampled_from([1, -1]))
def test_conj_eval_is_mirror_of_eval(alpha, y, theta, side):
    w = CoherentPacket(alpha)
    a = conj_eval_packet(w, RotatedArg(y, theta, side))
    b = np.conj(eval_packet(w, RotatedArg(y, -theta, side)))
    assert abs(a - b) <= 1e-15 * max(1.0, abs(a))


@given(st.floats(min_value=0.3, max_value=3.0), ys, thetas)
def test_conj_eval_lognormal_real_axis(a, y, theta):
    w = LogNormalPacket(a)
    assert abs(conj_eval_packet(w, RotatedArg(y)) - np.conj(eval_packet(w, RotatedArg(y)))) < 1e-15
    v = conj_eval_packet(w, RotatedArg(y, theta))
    assert abs(v - np.conj(eval_packet(w, RotatedArg(y, -theta)))) <= 1e-15 * max(1.0, abs(v))


@given(ys, thetas)
def test_ground_state_product_is_real(y, theta):
    w = CoherentPacket(0j)
    prod = conj_eval_packet(w, RotatedArg(y, theta)) * eval_packet(w, RotatedArg(y, -theta))
    assert abs(prod.imag) <= 1e-14 * abs(prod)


def test_amplitude_matches_real_axis_call():
    w = CoherentPacket(0.4 - 0.3j, hbar=0.7)
    x = np.array([-2.0, -0.5, 0.3, 1.7])
    direct = (0.7 * math.pi) ** -0.25 * np.exp(
        -abs(w.alpha) ** 2 / 1.4 - (x * x - 2 * math.sqrt(2) * x * w.alpha + w.alpha**2) / 1.4)
    assert np.allclose(w(x), direct, rtol=1e-14, atol=0)


def test_derivatives_against_finite_differences():
    h = 1e-6
    for w in (CoherentPacket(0.5 + 0.2j), LogNormalPacket(0.8)):
        for x in (-1.3, 0.4, 2.0):
            fd = (w(x + h) - w(x - h)) / (2 * h)
            assert abs(w.derivative(x) - fd) < 1e-8
    with pytest.raises(DomainError):
        LogNormalPacket(1.0).derivative(0.0)


ALPHAS = [0, 0.5, -0.5, 1j, -1j, 1 + 1j, -0.7 + 0.2j, 2 - 1j, 0.3 + 1.7j, -1.5 - 0.5j]


@pytest.mark.parametrize("alpha", ALPHAS)
def test_coherent_norm(alpha):
    assert abs(packet_norm(CoherentPacket(alpha)) - 1) < 1e-10


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 5.0])
def test_lognormal_norm_independent_of_width(a):
    assert abs(packet_norm(LogNormalPacket(a)) - math.sqrt(2) / 2) < 1e-10


def test_coherent_norm_other_hbar():
    assert abs(packet_norm(CoherentPacket(0.3 + 0.4j, hbar=2.5)) - 1) < 1e-10


def test_parity_flags():
    assert CoherentPacket(0j).is_even
    assert not CoherentPacket(0.1).is_even
    assert LogNormalPacket(1.0).is_even

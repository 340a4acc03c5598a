import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hyperq.errors import ConfigError, DomainError, WindowError
from hyperq.model import CoherentPacket, LogNormalPacket, packet_norm
from hyperq.spectral import (
    EigenNormConstant, LogGrid, ReducedField, chi_eval, crop_field, delta_sequence_slope, expand,
    field_moment, field_norm, gaussian_weight_field, overlap_window, pad_field, read_field,
    reduce_packet, shape_variance, synthesize, write_field,
)

# wide enough on the left that the coherent e^{u/2} tail is below 1e-12
COHERENT_GRID = LogGrid(-64.0, 4.0, 2**13)


def test_chi_eval():
    assert abs(chi_eval(0.0, 1.0) - 1 / math.sqrt(4 * math.pi)) < 1e-15
    assert abs(chi_eval(1.3, 2.0) - chi_eval(1.3, -2.0)) == 0
    with pytest.raises(DomainError):
        chi_eval(0.0, 0.0)


def test_overlap_examples():
    assert abs(overlap_window(0.0, 0.0, 10.0) - 10 / math.pi) < 1e-10
    assert abs(overlap_window(math.pi / 10, 0.0, 10.0)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=-3, max_value=3), st.floats(min_value=-3, max_value=3),
       st.floats(min_value=1.0, max_value=20.0))
def test_overlap_matches_sine_kernel(e1, e2, L):
    d = e1 - e2
    exact = (4 / (4 * math.pi)) * (math.sin(d * L) / d if d else L)
    assert abs(overlap_window(e1, e2, L) - exact) < 1e-9 * max(1.0, L)


def test_delta_sequence_slope():
    assert abs(delta_sequence_slope() * math.pi - 1) < 0.01
    # a wrong normalisation changes the slope: N_s = 2 pi doubles it
    assert abs(delta_sequence_slope(n=EigenNormConstant(2 * math.pi)) * math.pi - 2) < 0.02
    with pytest.raises(ConfigError):
        EigenNormConstant(0.0)


def test_grid_validation():
    for bad in (dict(u_min=1, u_max=0), dict(n_points=100), dict(n_points=8), dict(side=0)):
        with pytest.raises(ConfigError):
            LogGrid(**bad)
    g = LogGrid(-2.0, 2.0, 64)
    assert g.du == 4 / 64
    assert g.nodes[0] == -2.0 and g.nodes.size == 64
    assert 0.0 in g.eps


def test_reduce_coherent_form():
    f = reduce_packet(CoherentPacket(0j), COHERENT_GRID)
    u = COHERENT_GRID.nodes
    exact = math.pi**-0.25 * np.exp(0.5 * u - 0.5 * np.exp(2 * u))
    assert np.max(np.abs(f.values - exact)) < 1e-15


def test_reduce_lognormal_form():
    a = 0.7
    f = reduce_packet(LogNormalPacket(a), LogGrid())
    u = LogGrid().nodes
    exact = np.exp(-u * u / (4 * a * a)) / math.sqrt(4 * a * math.sqrt(math.pi))
    assert np.max(np.abs(f.values - exact)) < 1e-15


@pytest.mark.parametrize("w", [CoherentPacket(0j), CoherentPacket(0.6 + 0.3j), LogNormalPacket(1.5)])
def test_reduction_is_isometric(w):
    g = COHERENT_GRID if isinstance(w, CoherentPacket) else LogGrid()
    total = sum(field_norm(reduce_packet(w, LogGrid(g.u_min, g.u_max, g.n_points, side))) for side in (1, -1))
    assert abs(total - packet_norm(w)) < 1e-8


def test_window_error_and_apodization():
    w = CoherentPacket(0j)
    with pytest.raises(WindowError):
        reduce_packet(w, LogGrid())
    f = reduce_packet(w, LogGrid(), apodize=True)
    assert f.apodized == ("left",)
    assert abs(f.values[0]) < 1e-5 * np.max(np.abs(f.values))


def test_parity_of_even_packets():
    for w, g in ((CoherentPacket(0j), COHERENT_GRID), (LogNormalPacket(1.0), LogGrid())):
        right = reduce_packet(w, g).values
        left = reduce_packet(w, g.flipped()).values
        assert np.array_equal(right, left)


def test_expand_gaussian_pair():
    a = 1.3
    g = LogGrid(-40.0, 40.0, 2**12)
    u = g.nodes
    s = expand(ReducedField(g, np.exp(-u * u / (4 * a * a))))
    exact = math.sqrt(2) * a * np.exp(-(a * s.eps) ** 2)
    assert np.max(np.abs(s.weights - exact)) < 1e-12


def test_expand_zero():
    g = LogGrid(-4.0, 4.0, 64)
    assert not np.any(expand(ReducedField(g, np.zeros(64))).weights)


@settings(max_examples=15, deadline=None)
@given(st.complex_numbers(max_magnitude=1.5), st.floats(min_value=0.4, max_value=1.4))
def test_parseval_and_roundtrip(alpha, a):
    for w, g in ((CoherentPacket(alpha), COHERENT_GRID), (LogNormalPacket(a), LogGrid())):
        f = reduce_packet(w, g)
        s = expand(f)
        lhs = field_norm(f)
        rhs = float(np.sum(np.abs(s.weights) ** 2) * s.d_eps)
        assert abs(lhs - rhs) <= 1e-10 * lhs
        back = synthesize(s, g).values
        assert np.max(np.abs(back - f.values)) <= 1e-10 * np.max(np.abs(f.values))


def test_synthesize_rejects_foreign_grid():
    g = LogGrid()
    s = expand(reduce_packet(LogNormalPacket(1.0), g))
    with pytest.raises(ConfigError):
        synthesize(s, LogGrid(-15.0, 17.0))


def test_gaussian_weight_width():
    # q = (2a/pi)^1/4 exp(-a eps^2) synthesizes to a u-Gaussian of variance 2a
    g = LogGrid()
    for a in (0.5, 1.0, 2.0):
        f = synthesize(gaussian_weight_field(a, g), g)
        assert abs(shape_variance(f) / (2 * a) - 1) < 1e-8
    # while the log-normal packet has variance 2 a^2
    assert abs(shape_variance(reduce_packet(LogNormalPacket(2.0), LogGrid(-40.0, 40.0, 2**14))) / 8.0 - 1) < 1e-8


def test_single_mode_reproduces_plane_wave():
    g = LogGrid(-8.0, 8.0, 256)
    k = 140
    q = np.zeros(256, dtype=complex)
    q[k] = 1.0
    base = expand(ReducedField(g, np.zeros(256)))
    s = type(base)(base.eps, q, base.u_origin, base.du, base.side)
    phi = synthesize(s, g).values
    ratio = phi / np.exp(1j * s.eps[k] * g.nodes)
    assert np.max(np.abs(ratio - ratio[0])) < 1e-12 * abs(ratio[0])


def test_pad_crop_and_moment():
    f = reduce_packet(LogNormalPacket(1.0), LogGrid())
    p = pad_field(f, 2)
    assert p.grid.n_points == 2 * f.grid.n_points and p.grid.du == f.grid.du
    assert np.array_equal(crop_field(p, f.grid).values, f.values)
    assert field_moment(f, 0) == pytest.approx(field_norm(f), rel=1e-15)
    assert field_moment(f, 2, u_cut=-100.0) == 0.0


@pytest.mark.parametrize("kind", ["reduced", "spectral"])
def test_field_file_roundtrip(tmp_path, kind):
    f = reduce_packet(CoherentPacket(0.3 - 0.2j), LogGrid(), apodize=True)
    obj = f if kind == "reduced" else expand(f)
    path = tmp_path / "field.txt"
    write_field(path, obj)
    back = read_field(path)
    assert type(back) is type(obj)
    if kind == "reduced":
        assert back.grid == f.grid and back.apodized == f.apodized
        assert np.array_equal(back.values, f.values)
    else:
        assert np.array_equal(back.weights, obj.weights)
        assert back.convention == obj.convention
    text = path.read_text()
    assert "# columns=node real imag" in text

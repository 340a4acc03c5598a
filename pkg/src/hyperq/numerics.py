"""Quadrature, uniform-grid Fourier transforms, and small fitting helpers.

Everything here is deterministic: no Monte Carlo, no randomized starts, and
summation order is fixed for a given input.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy import special as _special

from .errors import ConfigError, FitError, NonDecayingTail

__all__ = [
    "QuadratureSpec",
    "QuadResult",
    "DEFAULT_QUAD",
    "integrate_adaptive",
    "integrate_semi_infinite",
    "integrate_line",
    "integrate_panels",
    "integrate_gl_adaptive",
    "extrapolate_to_zero",
    "dft_uniform",
    "dft_frequencies",
    "normal_cdf",
    "normal_pdf",
    "polyfit_quadratic",
]


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances shared by the adaptive integrators.

    ``max_depth`` bounds the number of bisections QUADPACK may perform on a
    single call; ``tail_extension_factor`` is the growth factor of successive
    windows in :func:`integrate_semi_infinite`.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_depth: int = 50
    tail_extension_factor: float = 2.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ConfigError("quadrature tolerances must be positive")
        if self.max_depth < 4:
            raise ConfigError("max_depth must be >= 4")
        if self.tail_extension_factor <= 1:
            raise ConfigError("tail_extension_factor must exceed 1")


DEFAULT_QUAD = QuadratureSpec()


class QuadResult(NamedTuple):
    value: complex
    err_estimate: float
    converged: bool


def _quad_real(g, a, b, spec, points):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _integrate.IntegrationWarning)
        out = _integrate.quad(
            g, a, b,
            epsabs=spec.abs_tol, epsrel=spec.rel_tol,
            limit=spec.max_depth, points=points, full_output=1,
        )
    # a fourth element (the message) is only present when ier > 0
    ok = len(out) == 3
    return out[0], out[1], ok


def integrate_adaptive(
    f: Callable[[float], complex],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
    points: Sequence[float] | None = None,
) -> QuadResult:
    """Adaptive Gauss-Kronrod integration of a complex integrand on [a, b].

    Real and imaginary parts are integrated separately with QUADPACK (21-pt
    Kronrod rule, global bisection). The returned error is the Euclidean sum
    of both estimates; ``converged`` is False when either part exhausts its
    subdivision budget with an error above the tolerance of the complex
    value, rather than returning a silently wrong value.
    """
    if not a < b:
        raise ConfigError(f"integration bounds must satisfy a < b (got {a}, {b})")
    pts = None
    if points is not None:
        pts = sorted(p for p in points if a < p < b) or None
    if pts is not None and len(pts) >= spec.max_depth // 2:
        # many breakpoints: integrate panel by panel instead of through one call
        edges = [a, *pts, b]
        parts = [integrate_adaptive(f, lo, hi, spec) for lo, hi in zip(edges, edges[1:])]
        return QuadResult(sum(r.value for r in parts), float(math.fsum(r.err_estimate for r in parts)),
                          all(r.converged for r in parts))

    if not np.iscomplexobj(f(0.5 * (a + b))):
        vr, er, okr = _quad_real(lambda x: float(f(x)), a, b, spec, pts)
        return QuadResult(complex(vr), float(er), okr)
    vr, er, okr = _quad_real(lambda x: complex(f(x)).real, a, b, spec, pts)
    vi, ei, oki = _quad_real(lambda x: complex(f(x)).imag, a, b, spec, pts)
    # a part that vanishes by symmetry cannot meet its own relative tolerance;
    # judge both parts against the modulus of the whole value instead
    tol = max(spec.rel_tol * math.hypot(vr, vi), spec.abs_tol)
    ok = (okr or er <= tol) and (oki or ei <= tol)
    return QuadResult(complex(vr, vi), float(math.hypot(er, ei)), ok)


def _probe_width(f, a):
    """Distance from ``a`` beyond which |f| sits below 1e-16 of its probed peak.

    Returns ``None`` when the integrand is non-finite somewhere on the probe:
    that alone is a non-decay signal.
    """
    ks = np.arange(-20, 61)
    xs = a + np.exp2(ks.astype(float))
    mags = np.empty(xs.size)
    with np.errstate(all="ignore"):
        for i, x in enumerate(xs):
            try:
                v = complex(f(x))
            except OverflowError:
                return None
            mags[i] = abs(v) if np.isfinite(v.real) and np.isfinite(v.imag) else np.inf
    if not np.all(np.isfinite(mags)):
        return None
    peak = mags.max()
    if peak == 0.0:
        return 1.0
    significant = np.nonzero(mags > 1e-16 * peak)[0]
    return float(2.0 ** (ks[significant[-1]] + 1))


def integrate_semi_infinite(
    f: Callable[[float], complex],
    a: float,
    decay_probe: float | None = None,
    spec: QuadratureSpec = DEFAULT_QUAD,
    max_windows: int = 80,
) -> QuadResult:
    """Integrate ``f`` over [a, inf) on geometrically growing windows.

    The first window is [a, a + w] with ``w = decay_probe`` or, when omitted,
    a width found by probing |f| at a + 2^k. Windows then grow by
    ``spec.tail_extension_factor`` until the newest one contributes less
    than the tolerances.

    Raises
    ------
    NonDecayingTail
        When window contributions fail to decrease for three consecutive
        extensions, or the integrand overflows.
    """
    width = decay_probe if decay_probe is not None else _probe_width(f, a)
    if width is None:
        raise NonDecayingTail("integrand is non-finite on the decay probe", x_reached=a)
    total = 0j
    err = 0.0
    converged = True
    lo, hi = a, a + width
    prev = None
    growth = 0
    for _ in range(max_windows):
        try:
            r = integrate_adaptive(f, lo, hi, spec)
        except OverflowError:
            raise NonDecayingTail("integrand overflowed", partial=total, x_reached=lo) from None
        if not (np.isfinite(r.value.real) and np.isfinite(r.value.imag)):
            raise NonDecayingTail("window contribution overflowed", partial=total, x_reached=lo)
        total += r.value
        err += r.err_estimate
        converged &= r.converged
        mag = abs(r.value)
        if mag <= max(spec.rel_tol * abs(total), spec.abs_tol):
            return QuadResult(total, err + mag, converged)
        if prev is not None and mag >= prev:
            growth += 1
            if growth >= 3:
                raise NonDecayingTail(
                    f"window contributions grew 3 times in a row (last window ends at {hi:.6g})",
                    partial=total, x_reached=hi,
                )
        else:
            growth = 0
        prev = mag
        lo, hi = hi, a + (hi - a) * spec.tail_extension_factor
    raise NonDecayingTail("window budget exhausted before the tail decayed", partial=total, x_reached=hi)


def integrate_line(f, center: float = 0.0, spec: QuadratureSpec = DEFAULT_QUAD) -> QuadResult:
    """Integral over the whole real line, split at ``center``."""
    right = integrate_semi_infinite(f, center, spec=spec)
    left = integrate_semi_infinite(lambda s: f(2 * center - s), center, spec=spec)
    return QuadResult(right.value + left.value,
                      right.err_estimate + left.err_estimate,
                      right.converged and left.converged)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def integrate_panels(f_vec, breakpoints, order: int = 16) -> complex:
    """Fixed-order Gauss-Legendre sum over consecutive panels.

    ``f_vec`` must accept an ndarray. Used for long oscillatory integrals
    where the panel layout is chosen by the caller to follow the phase.
    """
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    x, w = _GL_CACHE[order]
    b = np.asarray(breakpoints, dtype=float)
    mid = 0.5 * (b[1:] + b[:-1])
    half = 0.5 * (b[1:] - b[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    vals = f_vec(nodes)
    panel = (vals * w[None, :]).sum(axis=1) * half
    return complex(np.sum(panel))


def integrate_gl_adaptive(f_vec, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUAD,
                          n0: int = 16, max_panels: int = 2**15, order: int = 16) -> QuadResult:
    """Vectorized composite Gauss-Legendre on [a, b], doubling the panel count.

    Stops when two successive panel counts agree to the tolerances; the
    difference is the error estimate. Suited to smooth but strongly
    oscillating integrands on long finite intervals.
    """
    if not a < b:
        raise ConfigError(f"integration bounds must satisfy a < b (got {a}, {b})")
    n = n0
    prev = integrate_panels(f_vec, np.linspace(a, b, n + 1), order)
    while n < max_panels:
        n *= 2
        cur = integrate_panels(f_vec, np.linspace(a, b, n + 1), order)
        err = abs(cur - prev)
        if not np.isfinite(err):
            return QuadResult(cur, float("inf"), False)
        if err <= max(spec.rel_tol * abs(cur), spec.abs_tol):
            return QuadResult(cur, float(err), True)
        prev = cur
    return QuadResult(prev, float(err), False)


def extrapolate_to_zero(hs: Sequence[float], values: Sequence[complex]) -> complex:
    """Polynomial (Richardson/Neville) extrapolation of values(h) to h = 0."""
    hs = [float(h) for h in hs]
    p = [complex(v) for v in values]
    n = len(p)
    for m in range(1, n):
        for i in range(n - m):
            p[i] = (hs[i + m] * p[i] - hs[i] * p[i + 1]) / (hs[i + m] - hs[i])
    return p[0]


def _require_pow2(n):
    if n < 1 or n & (n - 1):
        raise ConfigError(f"transform length must be a power of two (got {n})")


def dft_frequencies(n: int, delta: float) -> np.ndarray:
    """Centered angular frequencies (k - n/2) * 2 pi / (n delta)."""
    _require_pow2(n)
    return (np.arange(n) - n // 2) * (2.0 * np.pi / (n * delta))


def _origin_phase(n, du, origin, sign):
    """exp(sign i k_m origin) on the centered grid, reduced in cycles.

    k_m origin = 2 pi m origin / (n du); working with the exact ratio
    origin / (n du) avoids evaluating exp at arguments of order 1e4.
    """
    cycles = origin / (n * du)
    m = np.arange(n) - n // 2
    return np.exp(sign * 2j * np.pi * np.mod(m * cycles, 1.0))


def dft_uniform(values, direction: int, delta: float, origin: float = 0.0):
    """Continuous-transform-scaled FFT with centered frequency ordering.

    Forward (``direction=-1``) approximates
    ``F(k) = (2 pi)^-1/2 \\int f(u) exp(-i k u) du`` for samples
    ``f(origin + j delta)``; returns ``(F, delta_k)`` with ``F`` ordered by
    :func:`dft_frequencies`. Inverse (``direction=+1``) takes centered
    samples with spacing ``delta`` and returns samples in u and the u spacing.
    ``origin`` is always the first u node.
    """
    v = np.asarray(values, dtype=complex)
    n = v.shape[-1]
    _require_pow2(n)
    if direction == -1:
        k = dft_frequencies(n, delta)
        out = np.fft.fftshift(np.fft.fft(v, axis=-1), axes=-1)
        out *= (delta / np.sqrt(2 * np.pi)) * _origin_phase(n, delta, origin, -1)
        return out, 2.0 * np.pi / (n * delta)
    if direction == 1:
        du = 2.0 * np.pi / (n * delta)
        shifted = np.fft.ifftshift(v * _origin_phase(n, du, origin, 1), axes=-1)
        out = np.fft.ifft(shifted, axis=-1) * (n * delta / np.sqrt(2 * np.pi))
        return out, du
    raise ConfigError("direction must be -1 (forward) or +1 (inverse)")


def normal_cdf(z):
    """Standard normal CDF, (2 pi)^-1/2 \\int_{-inf}^z exp(-s^2/2) ds."""
    return _special.ndtr(z)


def normal_pdf(z):
    return np.exp(-0.5 * np.square(z)) / math.sqrt(2.0 * math.pi)


def polyfit_quadratic(ts, ys):
    """Least-squares fit ys ~ c0 + c1 t + c2 t^2.

    Returns ``(c0, c1, c2, residual)`` with the residual the RMS of the fit
    errors. Raises FitError when fewer than three distinct abscissae exist.
    """
    t = np.asarray(ts, dtype=float)
    y = np.asarray(ys, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise FitError("ts and ys must be 1-D arrays of equal length")
    if np.unique(t).size < 3:
        raise FitError("quadratic fit needs at least 3 distinct abscissae")
    if not np.all(np.isfinite(y)):
        raise FitError("non-finite ordinates")
    # centre and scale t so the Vandermonde system is well conditioned
    t0 = 0.5 * (t.max() + t.min())
    s = 0.5 * (t.max() - t.min())
    x = (t - t0) / s
    V = np.vander(x, 3, increasing=True)
    coef, _, rank, _ = np.linalg.lstsq(V, y, rcond=None)
    if rank < 3:
        raise FitError("rank-deficient quadratic fit")
    b0, b1, b2 = coef
    c2 = b2 / s**2
    c1 = b1 / s - 2 * b2 * t0 / s**2
    c0 = b0 - b1 * t0 / s + b2 * t0**2 / s**2
    resid = float(np.sqrt(np.mean((V @ coef - y) ** 2)))
    return float(c0), float(c1), float(c2), resid

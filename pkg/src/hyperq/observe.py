"""Moments, truncated saddle integrals, closed forms at the singular times,
divergence scanning, and growth fits.

Moment routes
-------------
rotation
    ``2 e^{2n omega t} \\int_0^inf y^n conj(Psi)(y e^{i theta}) Psi(y e^{-i theta}) dy``
    on the real y axis (sum over both half-lines for packets that are not even).
saddle
    the same integral after rotating the contour onto the real x axis,
    ``e^{2n omega t} \\int x^n e^{i(n+1)theta} conj(Psi)(x) Psi(x e^{2 i theta}) dx``.
    It is the continuation that stays finite between the singular times.
spectral, pde
    ``\\int e^{n u} |phi(u, t)|^2 du`` of the evolved reduced field on each
    half-line.

All quadratures over x are performed in ``u = ln(|x| / s)``; integrands are
handled as logarithms so that exploding truncated integrals are carried as
(log-magnitude, phase) rather than overflowing.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigError, DegenerateXi, FitError, NonDecayingTail, NumericsError
from .evolve import (
    PdeStepper, PdeStepperConfig, PropagationRoute, free_x2_window, propagate_field_spectral,
)
from .model import (
    PhysicalParams, Wavepacket, rotation_angle, singularity_time,
)
from .numerics import (
    DEFAULT_QUAD, QuadratureSpec, integrate_gl_adaptive, integrate_semi_infinite, polyfit_quadratic,
)
from .spectral import APODIZE_OFFSET, LogGrid, field_moment, reduce_packet

__all__ = [
    "LogComplex",
    "MomentEntry",
    "MomentSeries",
    "DivergenceCriteria",
    "DivergenceProfile",
    "ScanCluster",
    "ScanResult",
    "GrowthFit",
    "moment_rotation",
    "moment_truncated",
    "moment_spectral",
    "moment_pde",
    "moment_series",
    "total_x2",
    "free_window_sum",
    "free_window_exponent",
    "closed_form_tl",
    "closed_form_tl_terms",
    "tl_prefactor",
    "bracket_oracle",
    "bracket_oracle_terms",
    "divergence_profile",
    "scan_singularities",
    "lognormal_moment_printed",
    "lognormal_moment_oracle",
    "fit_growth",
]

LINEAR_LOG_LIMIT = 300 * math.log(10)   # materialize linear values below 1e300
BRACKET_TERMS = ("sinh", "cosh", "x0^2 sinh")


class LogComplex(NamedTuple):
    """A complex number stored as ``exp(log_abs + i phase)``."""

    log_abs: float
    phase: float

    @property
    def log10_abs(self) -> float:
        return self.log_abs / math.log(10)

    def __abs__(self):
        return math.exp(self.log_abs) if self.log_abs < 709 else math.inf

    def linear(self) -> complex:
        return complex(np.exp(self.log_abs + 1j * self.phase))


def _log_abs(v) -> float:
    if isinstance(v, LogComplex):
        return v.log_abs
    a = abs(v)
    return math.log(a) if a > 0 else -math.inf


def _from_log(log_abs: float, phase: float):
    if log_abs < LINEAR_LOG_LIMIT:
        return complex(np.exp(log_abs + 1j * phase))
    return LogComplex(float(log_abs), float(phase))


def _as_real(v: complex, rel: float = 1e-9):
    """Drop an imaginary part that is round-off relative to the real part."""
    v = complex(v)
    return v.real if abs(v.imag) <= rel * max(abs(v.real), 1e-300) else v


def _sides(w: Wavepacket):
    return (1,) if w.is_even else (1, -1)


def _side_weight(w: Wavepacket) -> float:
    return 2.0 if w.is_even else 1.0


# ---------------------------------------------------------------------------
# series containers

class MomentEntry(NamedTuple):
    t: float
    n: int
    value: float
    err_estimate: float
    route: PropagationRoute
    flags: str = ""


CSV_COLUMNS = ("t", "n", "route", "value", "log10_magnitude", "err_estimate", "flags")


def _fmt(x: float) -> str:
    return f"{x:.16e}"


@dataclass
class MomentSeries:
    """Finite moment values along a time grid.

    Divergent evaluations never enter a series; they are reported through
    :class:`DivergenceProfile` instead.
    """

    entries: list = field(default_factory=list)

    def append(self, t, n, value, err_estimate, route, flags=""):
        value = float(np.real_if_close(value))
        if not math.isfinite(value):
            raise NumericsError(f"non-finite moment at t={t} cannot enter a MomentSeries")
        if not err_estimate >= 0:
            raise NumericsError("err_estimate must be non-negative")
        self.entries.append(MomentEntry(float(t), int(n), value, float(err_estimate),
                                        PropagationRoute(route), flags))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def ts(self) -> np.ndarray:
        return np.array([e.t for e in self.entries])

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.entries])

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(CSV_COLUMNS)
        for e in self.entries:
            lg = math.log10(abs(e.value)) if e.value != 0 else -math.inf
            wr.writerow([_fmt(e.t), e.n, e.route.value, _fmt(e.value), _fmt(lg),
                         _fmt(e.err_estimate), e.flags])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text: str) -> "MomentSeries":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != CSV_COLUMNS:
            raise ConfigError(f"moment CSV header must be {','.join(CSV_COLUMNS)}")
        out = cls()
        for r in rows[1:]:
            out.append(float(r[0]), int(r[1]), float(r[3]), float(r[5]), r[2], r[6])
        return out


# ---------------------------------------------------------------------------
# log-integrands in u

def _rotation_log_integrand(w, t, p, n, side):
    th = rotation_angle(t, p)
    s = w.length_scale

    def L(u):
        y = s * np.exp(u)
        return ((n + 1) * (u + math.log(s)) + w.conj_log_amplitude(y, th, side)
                + w.log_amplitude(y, -th, side))
    return L


def _saddle_log_integrand(w, t, p, n, side):
    th = rotation_angle(t, p)
    s = w.length_scale

    def L(u):
        y = s * np.exp(u)
        return ((n + 1) * (u + math.log(s)) + 1j * (n + 1) * th
                + np.conj(w.log_amplitude(y, 0.0, side)) + w.log_amplitude(y, 2 * th, side))
    return L


def _truncated_log_integral(L, u_top: float, spec: QuadratureSpec, depth: float = 80.0):
    """\int_{-inf}^{u_top} exp(L(u)) du as (log|I|, arg I, relative error).

    The lower end starts ``depth`` units below the top and moves down until
    the integrand there is below exp(-depth) relative to its maximum (or
    u = -700 is reached), so cuts far above the packet keep all its mass.
    """
    def real_log(us):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            lp = np.real(L(us))
        return np.where(np.isfinite(lp), lp, -np.inf)

    lo = u_top - depth
    while True:
        lp = real_log(np.linspace(lo, u_top, 4097))
        shift = float(lp.max())
        if not math.isfinite(shift):
            return -math.inf, 0.0, 0.0
        if lp[0] < shift - depth or lo <= -700.0:
            break
        lo = max(-700.0, u_top - 2 * (u_top - lo))
    u_peak = lo + (u_top - lo) * int(np.argmax(lp)) / 4096

    def f(u):
        with np.errstate(under="ignore", over="ignore", invalid="ignore"):
            v = np.exp(L(u) - shift)
        return np.where(np.isfinite(v), v, 0.0)

    # separate the last few units, where oscillation and growth concentrate,
    # and split at the peak when it lies further down
    mid = u_top - 4.0
    edges = [lo, mid, u_top]
    if lo < u_peak < mid - 1.0:
        edges.insert(1, u_peak)
    total, err = 0j, 0.0
    ok = True
    for a, b in zip(edges, edges[1:]):
        r = integrate_gl_adaptive(f, a, b, spec)
        total += r.value
        err += r.err_estimate
        ok &= r.converged
    if total == 0:
        return -math.inf, 0.0, 0.0
    rel = err / abs(total)
    if not ok:
        rel = max(rel, 1e-6)
    return shift + math.log(abs(total)), float(np.angle(total)), rel


def _peak_u(L, lo=-40.0, hi=40.0):
    """Maximum of Re L on a probe grid, widened upward while it sits on the edge."""
    while True:
        us = np.linspace(lo, hi, 1601)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            lv = np.real(L(us))
        lv = np.where(np.isfinite(lv), lv, -np.inf)
        k = int(np.argmax(lv))
        if k < us.size - 1 or hi >= 640.0:
            return float(us[k]), float(lv[k])
        hi *= 2


def moment_rotation(n: int, t: float, w: Wavepacket, p: PhysicalParams,
                    spec: QuadratureSpec = DEFAULT_QUAD):
    """<x^n(t)> from the rotated-argument form, integrated to infinity.

    Returns ``(value, err)``; ``value`` is real unless the continued pair
    leaves a genuine imaginary part. Raises NonDecayingTail when the pair
    does not decay, which is how divergent moments are signalled.
    """
    if n < 0 or int(n) != n:
        raise ConfigError("moment order n must be a non-negative integer")
    total, err = 0j, 0.0
    for side in _sides(w):
        L = _rotation_log_integrand(w, t, p, n, side)
        u0, shift = _peak_u(L)
        if not math.isfinite(shift):
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            ahead = float(np.real(L(u0 + 20.0)))
        if np.isnan(ahead) or ahead > shift - 1.0:
            raise NonDecayingTail(f"rotated pair grows past its probe at t={t} "
                                  f"(theta={rotation_angle(t, p):.6g})", x_reached=u0)
        if shift > 700.0:
            raise NumericsError("moment exceeds the floating point range")

        def h(v, direction, L=L, u0=u0, shift=shift):
            with np.errstate(over="ignore", invalid="ignore", under="ignore"):
                return complex(np.exp(L(u0 + direction * v) - shift))

        part = 0j
        for direction in (1, -1):
            try:
                r = integrate_semi_infinite(lambda v, d=direction: h(v, d), 0.0, decay_probe=4.0, spec=spec)
            except NonDecayingTail as exc:
                raise NonDecayingTail(
                    f"rotated pair does not decay at t={t} (theta={rotation_angle(t, p):.6g})",
                    partial=exc.partial, x_reached=exc.x_reached) from exc
            part += r.value
            err_side = r.err_estimate
            err += err_side * math.exp(shift)
        total += (side**n) * part * math.exp(shift)
    scale = _side_weight(w) * math.exp(2 * n * p.omega * t)
    value = total * scale
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise NumericsError("moment exceeds the floating point range")
    return _as_real(value), float(err * scale)


def moment_truncated(n: int, t: float, x0: float, w: Wavepacket, p: PhysicalParams,
                     route=PropagationRoute.ROTATION, spec: QuadratureSpec = DEFAULT_QUAD,
                     grid: LogGrid | None = None, pde: PdeStepperConfig | None = None):
    """Saddle-region contribution of |x| <= x0 to <x^n(t)>.

    rotation / saddle truncate the y integral at ``x0 exp(-2 omega t)``;
    spectral / pde cut the evolved field at ``u = ln(x0 / s)``. Returns
    ``(value, err)``; values too large for a float come back as
    :class:`LogComplex`.
    """
    route = PropagationRoute(route)
    if x0 < 0:
        raise ConfigError("x0 must be non-negative")
    if x0 == 0:
        return 0.0, 0.0
    if route in (PropagationRoute.SPECTRAL, PropagationRoute.PDE):
        fn = moment_spectral if route is PropagationRoute.SPECTRAL else moment_pde
        kw = {"grid": grid} if route is PropagationRoute.SPECTRAL else {"cfg": pde}
        kw = {k: v for k, v in kw.items() if v is not None}
        return fn(n, t, w, p, x0=x0, **kw)
    if route is PropagationRoute.ROTATION:
        make = _rotation_log_integrand
    elif route is PropagationRoute.SADDLE:
        make = _saddle_log_integrand
    else:
        raise ConfigError(f"route {route.value!r} does not compute saddle-region moments")
    s = w.length_scale
    y0 = x0 * math.exp(-2 * p.omega * t)
    u_top = math.log(y0 / s)
    logs, phases, rels = [], [], []
    for side in _sides(w):
        la, ph, rel = _truncated_log_integral(make(w, t, p, n, side), u_top, spec)
        if n % 2 and side < 0:
            ph += math.pi
        logs.append(la)
        phases.append(ph)
        rels.append(rel)
    base = math.log(_side_weight(w)) + 2 * n * p.omega * t
    # combine the half-lines in log space relative to the larger one
    m = max(logs)
    if not math.isfinite(m):
        return 0.0, 0.0
    acc = sum(np.exp(la - m + 1j * ph) for la, ph in zip(logs, phases))
    if acc == 0:
        return 0.0, 0.0
    log_abs = m + math.log(abs(acc)) + base
    value = _from_log(log_abs, float(np.angle(acc)))
    rel = max(r * math.exp(la - m) for r, la in zip(rels, logs)) / max(abs(acc), 1e-300)
    if isinstance(value, LogComplex):
        return value, math.inf if rel > 0 else 0.0
    return _as_real(value), float(abs(value) * rel)


def _sided_fields(w, grid):
    out = []
    for side in _sides(w):
        g = LogGrid(grid.u_min, grid.u_max, grid.n_points, side)
        out.append(reduce_packet(w, g, apodize=True))
    return out


def _u_cut(x0, w):
    return None if x0 is None else math.log(x0 / w.length_scale)


def moment_spectral(n: int, t: float, w: Wavepacket, p: PhysicalParams, grid: LogGrid = LogGrid(),
                    x0: float | None = None, pad_factor: int = 2):
    """<x^n(t)> (optionally cut at |x| <= x0) from the exact spectral propagator.

    The error estimate adds the change under twofold grid coarsening to the
    moment carried by the last APODIZE_OFFSET units of the window, where
    floating point noise is amplified by e^{nu}.
    """
    edge = grid.u_max - APODIZE_OFFSET
    cut = _u_cut(x0, w)

    def run(g):
        tot, tail = 0.0, 0.0
        for f in _sided_fields(w, g):
            ft = propagate_field_spectral(f, t, p, pad_factor)
            m = field_moment(ft, n, cut)
            tot += m
            if cut is None or cut > edge:
                tail += abs(m - field_moment(ft, n, edge))
        k = _side_weight(w) if w.is_even else 1.0
        return tot * k, tail * k

    fine, tail = run(grid)
    coarse, _ = run(grid.refined(0.5))
    return fine, abs(fine - coarse) + tail


def _pde_series(n, times, w, p, cfg, x0):
    totals = np.zeros(len(times))
    for f in _sided_fields(w, cfg.grid):
        st = PdeStepper(f, p, cfg)
        for i, t in enumerate(times):
            totals[i] += field_moment(st.advance_to(t), n, _u_cut(x0, w))
    return totals * (_side_weight(w) if w.is_even else 1.0)


def moment_pde(n: int, t: float, w: Wavepacket, p: PhysicalParams, cfg: PdeStepperConfig = PdeStepperConfig(),
               x0: float | None = None):
    """<x^n(t)> from the Crank-Nicolson oracle (Richardson-combined when configured)."""
    v, e = _pde_moments(n, [t], w, p, cfg, x0)
    return float(v[0]), float(e[0])


def _pde_moments(n, times, w, p, cfg, x0):
    times = sorted(times)
    fine = _pde_series(n, times, w, p, cfg, x0)
    if not cfg.richardson:
        return fine, np.zeros_like(fine)
    coarse = _pde_series(n, times, w, p, cfg.coarsened(), x0)
    # second-order scheme: error ~ (dt, du)^2 halves by 4 between the runs
    return (4 * fine - coarse) / 3, np.abs(fine - coarse) / 3


def moment_series(n: int, times: Sequence[float], w: Wavepacket, p: PhysicalParams,
                  route=PropagationRoute.ROTATION, x0: float | None = None,
                  grid: LogGrid = LogGrid(), pde: PdeStepperConfig = PdeStepperConfig(),
                  spec: QuadratureSpec = DEFAULT_QUAD) -> MomentSeries:
    """Evaluate one route along a time grid. NonDecayingTail propagates."""
    route = PropagationRoute(route)
    out = MomentSeries()
    times = [float(t) for t in times]
    if route is PropagationRoute.PDE:
        order = sorted(range(len(times)), key=times.__getitem__)
        vals, errs = _pde_moments(n, [times[i] for i in order], w, p, pde, x0)
        res = {i: (vals[k], errs[k]) for k, i in enumerate(order)}
        for i, t in enumerate(times):
            out.append(t, n, res[i][0], res[i][1], route)
        return out
    for t in times:
        if route is PropagationRoute.ROTATION and x0 is None:
            v, e = moment_rotation(n, t, w, p, spec)
        elif route is PropagationRoute.SPECTRAL:
            v, e = moment_spectral(n, t, w, p, grid, x0)
        else:
            v, e = moment_truncated(n, t, x0, w, p, route, spec)
            if isinstance(v, LogComplex):
                raise NonDecayingTail(f"truncated moment beyond float range at t={t}")
        flags = ""
        if isinstance(v, complex):
            # a truncated saddle piece is genuinely complex; keep the real part, flag the rest
            if abs(v.imag) > 1e-8 * abs(v):
                flags = f"imag={v.imag:.16e}"
            v = v.real
        out.append(t, n, v, e, route, flags)
    return out


# ---------------------------------------------------------------------------
# x^2 with free windows

def free_window_sum(t: float, x0: float, w: Wavepacket, p: PhysicalParams,
                    spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """I_f^- + I_f^+: free evolution of the two outer windows |x| > x0."""
    return sum(free_x2_window(w, t, x0, side, p.hbar, spec) for side in ("left", "right"))


def total_x2(t: float, x0: float, w: Wavepacket, p: PhysicalParams,
             route=PropagationRoute.ROTATION, spec: QuadratureSpec = DEFAULT_QUAD):
    """Saddle-region integral plus both free windows. Returns ``(value, err)``."""
    if not x0 > 0:
        raise ConfigError("x0 must be positive")
    v, e = moment_truncated(2, t, x0, w, p, route, spec)
    if isinstance(v, LogComplex):
        return v, e
    return _as_real(v + free_window_sum(t, x0, w, p, spec)), e


def free_window_exponent(w: Wavepacket, p: PhysicalParams, x0: float = 1.0,
                         ts: Sequence[float] = tuple(np.geomspace(10, 100, 19))) -> float:
    """Least-squares slope of ln(I_f^- + I_f^+) against ln t."""
    ts = np.asarray(ts, dtype=float)
    vals = np.array([free_window_sum(t, x0, w, p) for t in ts])
    if np.any(vals <= 0):
        raise FitError("free-window values must be positive for a power-law fit")
    slope, _ = np.polyfit(np.log(ts), np.log(vals), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# singular times

def _xi(l: int, alpha: complex) -> complex:
    alpha = complex(alpha)
    return alpha.conjugate() + 1j * (-1) ** l * alpha


def tl_prefactor(l: int, alpha: complex, p: PhysicalParams) -> complex:
    """(-i)^l (hbar pi)^-1/2 e^{-(alpha+alpha*)^2/2hbar} e^{omega pi/8hbar mu + l omega pi/4hbar mu} e^{3i pi/4}."""
    if p.mu == 0:
        raise ConfigError("singular times require mu != 0")
    h, m = p.hbar, p.mu
    re2 = (2 * complex(alpha).real) ** 2
    lin = p.omega * math.pi / (8 * h * m) + l * p.omega * math.pi / (4 * h * m)
    return complex((-1j) ** l * (h * math.pi) ** -0.5 * math.exp(-re2 / (2 * h) + lin)
                   * np.exp(3j * math.pi / 4))


def closed_form_tl_terms(l: int, alpha: complex, x0: float, p: PhysicalParams) -> dict:
    """The three bracket terms of the closed form as printed (no prefactor)."""
    xi = _xi(l, alpha)
    h = p.hbar
    # on the degenerate ray a float alpha leaves xi at round-off level
    if abs(xi) <= 1e-12 * max(abs(complex(alpha)), 1.0):
        raise DegenerateXi("xi = 0: bracket terms have xi^-3 poles", limit=2 * x0**3 / 3)
    arg = math.sqrt(2) * xi * x0 / h
    return {
        "sinh": complex(math.sqrt(2) * h**3 / xi**3 * np.sinh(arg)),
        "cosh": complex(-2 * h**2 * x0 / xi**2 * np.cosh(arg)),
        "x0^2 sinh": complex(-math.sqrt(2) * h * x0**2 / xi * np.sinh(arg)),
    }


def closed_form_tl(l: int, alpha: complex, x0: float, p: PhysicalParams) -> complex:
    """I_s(t_l) evaluated from the closed form exactly as printed.

    At xi = 0 raises DegenerateXi whose ``limit`` is the prefactor times the
    exact xi -> 0 value 2 x0^3 / 3; ``printed_limit`` carries the limit of
    the printed bracket (-10 x0^3 / 3), which differs.
    """
    pref = tl_prefactor(l, alpha, p)
    try:
        terms = closed_form_tl_terms(l, alpha, x0, p)
    except DegenerateXi:
        exc = DegenerateXi("xi = 0 at this singular time; returning the flagged limit",
                           limit=pref * 2 * x0**3 / 3)
        exc.printed_limit = pref * (-10 * x0**3 / 3)
        raise exc from None
    return pref * sum(terms.values())


def bracket_oracle_terms(c: complex, x0: float) -> dict:
    """Exact antiderivative pieces of \\int_{-x0}^{x0} x^2 e^{cx} dx, keyed like the printed bracket."""
    c = complex(c)
    return {
        "sinh": complex(4 / c**3 * np.sinh(c * x0)),
        "cosh": complex(-4 * x0 / c**2 * np.cosh(c * x0)),
        "x0^2 sinh": complex(2 * x0**2 / c * np.sinh(c * x0)),
    }


def bracket_oracle(c: complex, x0: float) -> complex:
    """\\int_{-x0}^{x0} x^2 e^{cx} dx in closed form.

    Even in c. At c = 0 the limit 2 x0^3 / 3 is returned with a warning;
    for |c x0| < 0.5 a Taylor series replaces the cancelling
    sinh/cosh combination.
    """
    if x0 <= 0:
        raise ConfigError("x0 must be positive")
    c = complex(c)
    if c == 0:
        warnings.warn("bracket_oracle at c = 0: returning the limit 2 x0^3 / 3", RuntimeWarning, stacklevel=2)
        return complex(2 * x0**3 / 3)
    z = c * x0
    if abs(z) < 0.5:
        # 2 x0^3 sum_k z^{2k} / ((2k)! (2k + 3)); the closed form cancels like 1/z^2 here
        s, term = 0j, 1 + 0j
        for k in range(12):
            if k:
                term *= z * z / ((2 * k - 1) * (2 * k))
            s += term / (2 * k + 3)
        return complex(2 * x0**3 * s)
    return sum(bracket_oracle_terms(c, x0).values())


# ---------------------------------------------------------------------------
# divergence scanning

class Verdict:
    CONVERGED = "converged"
    DIVERGING = "diverging"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DivergenceCriteria:
    """Ratios are |value| between consecutive rungs of the ladder.

    diverging: every ratio above ``diverge_ratio`` (sustained growth; an
    x0^3 law on a doubling ladder gives ratio 8 at each rung, a bounded
    oscillating integral gives ratios near 1);
    converged: last relative change below ``converge_tol``.
    """

    diverge_ratio: float = 4.0
    converge_tol: float = 1e-6
    min_rungs: int = 4

    def __post_init__(self):
        if not self.diverge_ratio > 1:
            raise ConfigError("diverge_ratio must exceed 1")
        if not self.converge_tol > 0:
            raise ConfigError("converge_tol must be positive")
        if self.min_rungs < 2:
            raise ConfigError("min_rungs must be at least 2")


@dataclass(frozen=True)
class DivergenceProfile:
    t: float
    ladder: tuple      # of (x0, value, err)
    verdict: str
    growth_ratio: float
    route: PropagationRoute = PropagationRoute.SADDLE

    CSV_COLUMNS = ("t", "x0", "route", "value_real", "value_imag", "log10_magnitude",
                   "err_estimate", "verdict", "growth_ratio")

    def csv_rows(self):
        for x0, v, e in self.ladder:
            if isinstance(v, LogComplex):
                re = im = math.nan
                lg = v.log10_abs
            else:
                v = complex(v)
                re, im = v.real, v.imag
                lg = math.log10(abs(v)) if v != 0 else -math.inf
            yield [_fmt(self.t), _fmt(x0), self.route.value, _fmt(re), _fmt(im), _fmt(lg),
                   _fmt(e), self.verdict, _fmt(self.growth_ratio)]


def profiles_to_csv(profiles: Sequence[DivergenceProfile]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(DivergenceProfile.CSV_COLUMNS)
    for pr in profiles:
        for row in pr.csv_rows():
            wr.writerow(row)
    return buf.getvalue()


def _classify(logs: Sequence[float], values, crit: DivergenceCriteria):
    lr = np.diff(np.asarray(logs, dtype=float))
    with np.errstate(over="ignore"):
        ratios = np.exp(lr)
    growth = float(ratios[-1])
    v1, v0 = values[-1], values[-2]
    if not isinstance(v1, LogComplex) and not isinstance(v0, LogComplex) and v1 != 0:
        change = abs(complex(v1) - complex(v0)) / abs(v1)
        if change < crit.converge_tol:
            return Verdict.CONVERGED, growth
    if np.all(lr > math.log(crit.diverge_ratio)):
        return Verdict.DIVERGING, growth
    return Verdict.INCONCLUSIVE, growth


def divergence_profile(t: float, w: Wavepacket, p: PhysicalParams, ladder: Sequence[float],
                       route=PropagationRoute.SADDLE, criteria: DivergenceCriteria = DivergenceCriteria(),
                       n: int = 2, spec: QuadratureSpec = DEFAULT_QUAD) -> DivergenceProfile:
    """Truncated moments along an x0 ladder and the resulting verdict."""
    ladder = [float(x) for x in ladder]
    if len(ladder) < criteria.min_rungs:
        raise ConfigError(f"ladder needs at least {criteria.min_rungs} rungs (got {len(ladder)})")
    if any(b <= a for a, b in zip(ladder, ladder[1:])) or ladder[0] <= 0:
        raise ConfigError("ladder must be positive and strictly increasing")
    rows, logs, vals = [], [], []
    for x0 in ladder:
        v, e = moment_truncated(n, t, x0, w, p, route, spec)
        rows.append((x0, v, e))
        logs.append(_log_abs(v))
        vals.append(v)
    verdict, growth = _classify(logs, vals, criteria)
    return DivergenceProfile(float(t), tuple(rows), verdict, growth, PropagationRoute(route))


class ScanCluster(NamedTuple):
    t_start: float
    t_end: float
    midpoint: float
    points: tuple


@dataclass(frozen=True)
class ScanResult:
    profiles: tuple
    clusters: tuple

    @property
    def flagged(self) -> list:
        return [pr.t for pr in self.profiles if pr.verdict == Verdict.DIVERGING]

    def summary(self, p: PhysicalParams | None = None) -> dict:
        out = {
            "n_points": len(self.profiles),
            "flagged": self.flagged,
            "clusters": [{"t_start": c.t_start, "t_end": c.t_end, "midpoint": c.midpoint,
                          "n_points": len(c.points)} for c in self.clusters],
        }
        if p is not None and p.mu != 0 and self.profiles:
            t_hi = max(pr.t for pr in self.profiles)
            law = []
            l = 0
            while True:
                tl = singularity_time(l, p)
                if tl > t_hi or l > 1000:
                    break
                law.append(tl)
                l += 1
            out["singularity_times"] = law
        return out


def scan_singularities(t_grid: Sequence[float], w: Wavepacket, p: PhysicalParams, ladder: Sequence[float],
                       route=PropagationRoute.SADDLE, criteria: DivergenceCriteria = DivergenceCriteria(),
                       spec: QuadratureSpec = DEFAULT_QUAD) -> ScanResult:
    """Divergence profiles over a sorted time grid, grouped into flagged clusters."""
    ts = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise ConfigError("t_grid must be strictly increasing")
    profiles = tuple(divergence_profile(t, w, p, ladder, route, criteria, spec=spec) for t in ts)
    clusters, run = [], []
    for pr in profiles + (None,):
        if pr is not None and pr.verdict == Verdict.DIVERGING:
            run.append(pr.t)
        elif run:
            clusters.append(ScanCluster(run[0], run[-1], 0.5 * (run[0] + run[-1]), tuple(run)))
            run = []
    return ScanResult(profiles, tuple(clusters))


# ---------------------------------------------------------------------------
# log-normal closed forms

def lognormal_moment_printed(n: int, t: float, a: float, p: PhysicalParams, log: bool = False):
    """(sqrt2/2) exp(4 omega t + a^4 n^2 + 16 hbar^2 mu^2 t^2 / a^2), taken as printed."""
    if not a > 0:
        raise ConfigError("a must be positive")
    e = 4 * p.omega * t + a**4 * n**2 + 16 * p.hbar**2 * p.mu**2 * t**2 / a**2
    lv = math.log(math.sqrt(2) / 2) + e
    return lv if log else math.exp(lv)


def lognormal_moment_oracle(n: int, t: float, a: float, p: PhysicalParams, log: bool = False):
    """(sqrt2/2) exp(2 n omega t + n^2 a^2 / 2 + 32 hbar^2 mu^2 t^2 / a^2).

    Gaussian integral in u of the rotated-argument moment of the log-normal
    packet: the rotation adds theta^2 / 2a^2 with theta = 8 hbar mu t.
    """
    if not a > 0:
        raise ConfigError("a must be positive")
    e = 2 * n * p.omega * t + n**2 * a**2 / 2 + 32 * p.hbar**2 * p.mu**2 * t**2 / a**2
    lv = math.log(math.sqrt(2) / 2) + e
    return lv if log else math.exp(lv)


# ---------------------------------------------------------------------------
# growth fits

@dataclass(frozen=True)
class GrowthFit:
    """ln v = c0 + c1 t + c2 t^2.

    ``kappa_scale`` is c2 a^2 / (hbar mu)^2, the coefficient of (kappa / a)^2
    with kappa = hbar mu t, when hbar, mu and a are supplied.
    """

    c0: float
    c1: float
    c2: float
    residual: float
    n: int | None = None
    route: PropagationRoute | None = None
    kappa_scale: float | None = None


def fit_growth(series: MomentSeries, p: PhysicalParams | None = None, a: float | None = None) -> GrowthFit:
    if len(series) < 6:
        raise FitError(f"growth fit needs at least 6 entries (got {len(series)})")
    ns = {e.n for e in series}
    routes = {e.route for e in series}
    if len(ns) != 1 or len(routes) != 1:
        raise FitError("growth fit needs a single moment order and route")
    v = series.values
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise FitError("growth fit needs finite positive values")
    c0, c1, c2, res = polyfit_quadratic(series.ts, np.log(v))
    ks = None
    if p is not None and a is not None and p.mu != 0:
        ks = c2 * a**2 / (p.hbar * p.mu) ** 2
    return GrowthFit(c0, c1, c2, res, ns.pop(), routes.pop(), ks)

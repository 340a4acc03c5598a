"""Physical parameters, initial wave packets, and complex-argument evaluation.

The Hamiltonian studied is a quadratic polynomial of the dilation generator,

    H_s = 2 omega (xp - i hbar/2) - 4 mu (xp - i hbar/2)^2,

whose eigenvalue on the logarithmic eigenfunctions is
``E(eps) = 2 omega eps - 4 hbar mu eps^2``. Its evolution acts on an initial
packet by dilating the coordinate by ``exp(-2 omega t)`` and rotating it into
the complex plane by ``theta = 8 hbar mu t``; the packets below therefore
know how to evaluate themselves at ``side * y * exp(i theta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, NoSingularity, NumericsError
from .numerics import DEFAULT_QUAD, QuadratureSpec, integrate_semi_infinite

__all__ = [
    "PhysicalParams",
    "RotatedArg",
    "CoherentPacket",
    "LogNormalPacket",
    "Wavepacket",
    "singularity_time",
    "rotation_angle",
    "dilation_growth",
    "energy_dispersion",
    "eval_packet",
    "conj_eval_packet",
    "packet_norm",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Planck constant, linear (omega) and nonlinear (mu) couplings."""

    hbar: float = 1.0
    omega: float = 0.0
    mu: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ConfigError(f"hbar must be positive (got {self.hbar})")
        if not (math.isfinite(self.omega) and math.isfinite(self.mu)):
            raise ConfigError("omega and mu must be finite")


@dataclass(frozen=True)
class RotatedArg:
    """The complex argument ``side * y * exp(i theta)``.

    ``theta`` is never reduced modulo 2 pi, so ``log`` of the argument is
    ``ln y + i theta`` on the continued branch.
    """

    y: float
    theta: float = 0.0
    side: int = 1

    def __post_init__(self):
        if not self.y > 0:
            raise DomainError(f"RotatedArg requires y > 0 (got {self.y})")
        if not math.isfinite(self.theta):
            raise DomainError("RotatedArg angle must be finite")
        if self.side not in (1, -1):
            raise DomainError("side must be +1 or -1")

    @property
    def z(self) -> complex:
        return self.side * self.y * complex(math.cos(self.theta), math.sin(self.theta))

    def conj(self) -> "RotatedArg":
        return RotatedArg(self.y, -self.theta, self.side)


def singularity_time(l: int, p: PhysicalParams) -> float:
    """Time ``(2l + 1) pi / (32 hbar mu)`` at which the coherent x^2 moment blows up.

    Negative ``mu`` gives time-reversed (negative) singularity times.
    """
    if p.mu == 0:
        raise NoSingularity("mu = 0: singularity times are pushed to infinity")
    return (2 * int(l) + 1) * math.pi / (32.0 * p.hbar * p.mu)


def rotation_angle(t, p: PhysicalParams):
    """Unwrapped rotation angle theta(t) = 8 hbar mu t."""
    return 8.0 * p.hbar * p.mu * t


def dilation_growth(t, p: PhysicalParams):
    """Classical moment growth factor exp(4 omega t)."""
    return np.exp(4.0 * p.omega * np.asarray(t, dtype=float))


def energy_dispersion(eps, p: PhysicalParams):
    """E(eps) = 2 omega eps - 4 hbar mu eps^2, used as an angular frequency."""
    return 2.0 * p.omega * eps - 4.0 * p.hbar * p.mu * eps * eps


class Wavepacket:
    """Initial state evaluable on the rotated rays ``side * y * exp(i theta)``.

    Subclasses implement :meth:`amplitude` (vectorized in ``y`` and
    ``theta``) and :meth:`derivative` on the real axis. ``length_scale`` is
    the unit of x used by the logarithmic grids (sqrt(hbar) for coherent
    states).
    """

    is_even: bool = False
    length_scale: float = 1.0

    def log_amplitude(self, y, theta=0.0, side=1):
        """log Psi on the ray, continued along the unwrapped angle."""
        raise NotImplementedError

    def amplitude(self, y, theta=0.0, side=1):
        with np.errstate(under="ignore"):
            return np.exp(self.log_amplitude(y, theta, side))

    def conj_amplitude(self, y, theta=0.0, side=1):
        """Analytic continuation of x -> conj(Psi(x)) to the rotated ray."""
        return np.conj(self.amplitude(y, -np.asarray(theta, dtype=float), side))

    def conj_log_amplitude(self, y, theta=0.0, side=1):
        return np.conj(self.log_amplitude(y, -np.asarray(theta, dtype=float), side))

    def __call__(self, x):
        """Psi(x) on the real axis (x may be an array of any sign, x != 0 for log-normal)."""
        x = np.asarray(x, dtype=float)
        side = np.where(x < 0, -1, 1)
        return self.amplitude(np.abs(x), 0.0, side)

    def derivative(self, x):
        raise NotImplementedError


@dataclass(frozen=True)
class CoherentPacket(Wavepacket):
    """Glauber coherent state in the x representation.

    Psi(x) = (hbar pi)^-1/4 exp(-|alpha|^2/2hbar - (x^2 - 2 sqrt2 x alpha + alpha^2)/2hbar);
    x carries units of sqrt(hbar).
    """

    alpha: complex = 0j
    hbar: float = 1.0

    def __post_init__(self):
        if not self.hbar > 0:
            raise ConfigError("hbar must be positive")
        a = complex(self.alpha)
        if not (math.isfinite(a.real) and math.isfinite(a.imag)):
            raise ConfigError("alpha must be finite")
        object.__setattr__(self, "alpha", a)

    @property
    def is_even(self):
        return self.alpha == 0

    @property
    def length_scale(self):
        return math.sqrt(self.hbar)

    def log_amplitude(self, y, theta=0.0, side=1):
        a, h = self.alpha, self.hbar
        y = np.asarray(y, dtype=float)
        th = np.asarray(theta, dtype=float)
        z = side * y * np.exp(1j * th)
        # z^2 from the doubled angle: z * z would leave a real part of order eps y^2 near theta = pi/4
        z2 = y * y * np.exp(2j * th)
        return (-0.25 * math.log(h * math.pi) - abs(a) ** 2 / (2 * h)
                - (z2 - 2 * math.sqrt(2) * z * a + a * a) / (2 * h))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -(x - math.sqrt(2) * self.alpha) / self.hbar * self(x)

    @property
    def mean_x(self) -> float:
        return math.sqrt(2) * self.alpha.real


@dataclass(frozen=True)
class LogNormalPacket(Wavepacket):
    """Packet Gaussian in ln|x|:

    Psi(x) = N^-1/2 exp(-ln^2|x| / 4a^2 - ln|x| / 2),  N = 4 a sqrt(pi).

    Its squared norm is sqrt(2)/2 with this N; the normalisation is kept
    as written so that moments keep the sqrt(2)/2 prefactor.
    """

    a: float = 1.0

    is_even = True
    length_scale = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigError(f"log-normal width a must be positive (got {self.a})")

    @property
    def norm_constant(self) -> float:
        return 4.0 * self.a * math.sqrt(math.pi)

    def log_amplitude(self, y, theta=0.0, side=1):
        with np.errstate(divide="ignore"):
            lz = np.log(np.asarray(y, dtype=float)) + 1j * np.asarray(theta, dtype=float)
        return -lz * lz / (4 * self.a**2) - 0.5 * lz - 0.5 * math.log(self.norm_constant)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x == 0):
            raise DomainError("log-normal packet is not differentiable at x = 0")
        lx = np.log(np.abs(x))
        return self(x) * (-lx / (2 * self.a**2) - 0.5) / x


def eval_packet(w: Wavepacket, z: RotatedArg) -> complex:
    """Psi_0 analytically continued to ``z``."""
    return complex(w.amplitude(z.y, z.theta, z.side))


def conj_eval_packet(w: Wavepacket, z: RotatedArg) -> complex:
    """conj(Psi_0(conj z)): the continuation of x -> conj(Psi_0(x))."""
    return complex(np.conj(w.amplitude(z.y, -z.theta, z.side)))


def packet_norm(w: Wavepacket, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """Integral of |Psi_0|^2 over the whole line.

    Each half-line is integrated in u = ln(|x|/s) so that log-normal packets
    (singular at x = 0) and displaced Gaussians are handled the same way.
    """
    s = w.length_scale
    total = 0.0
    err = 0.0
    for side in (1, -1):
        def dens(u, side=side):
            if abs(u) > 700:
                return 0.0
            x = s * math.exp(u)
            return float(abs(w.amplitude(x, 0.0, side)) ** 2 * x)

        peak = _log_peak(dens)
        for direction in (1, -1):
            r = integrate_semi_infinite(lambda v: dens(peak + direction * v), 0.0,
                                        decay_probe=8.0, spec=spec)
            if not r.converged:
                raise NumericsError("packet_norm quadrature did not converge")
            total += r.value.real
            err += r.err_estimate
    if err > 1e-10 * max(total, 1.0):
        raise NumericsError(f"packet_norm error estimate {err:.3g} above 1e-10")
    return total


def _log_peak(dens):
    us = np.linspace(-30, 30, 601)
    vals = np.array([dens(u) for u in us])
    return float(us[np.argmax(vals)]) if vals.max() > 0 else 0.0

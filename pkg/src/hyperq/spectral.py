"""Logarithmic eigenbasis and the position <-> eps transforms.

On each half-line write x = side * s * exp(u) with s the packet length unit
(sqrt(hbar) for coherent states). The dilation eigenfunctions

    chi_eps(x) = exp(i eps ln|x|) / sqrt(N_s |x|)

become plane waves in u, so a state is represented by the reduced field

    phi(u) = s^(1/2) exp(u/2) Psi(side * s * exp(u)),

an isometry from L2 of the half-line onto L2(du). Its Fourier transform in u
is the spectral weight q(eps). Positive and negative x are decoupled: the
evolution never moves a packet across x = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError, WindowError
from .model import Wavepacket
from .numerics import DEFAULT_QUAD, dft_frequencies, dft_uniform, integrate_adaptive

__all__ = [
    "LogGrid",
    "ReducedField",
    "SpectralField",
    "EigenNormConstant",
    "chi_eval",
    "overlap_window",
    "delta_sequence_slope",
    "reduce_packet",
    "expand",
    "synthesize",
    "pad_field",
    "crop_field",
    "field_norm",
    "field_moment",
    "gaussian_weight_field",
    "shape_variance",
    "write_field",
    "read_field",
]

# edge apodization: tanh step centred this far inside the offending end
APODIZE_OFFSET = 6.0
APODIZE_WIDTH = 1.0
TAIL_TOL = 1e-12


@dataclass(frozen=True)
class LogGrid:
    """Uniform periodic grid u_j = u_min + j du, j < n_points, on one side of x = 0."""

    u_min: float = -16.0
    u_max: float = 16.0
    n_points: int = 2**14
    side: int = 1

    def __post_init__(self):
        if not self.u_min < self.u_max:
            raise ConfigError("LogGrid requires u_min < u_max")
        n = int(self.n_points)
        if n < 16 or n & (n - 1):
            raise ConfigError(f"n_points must be a power of two >= 16 (got {self.n_points})")
        if self.side not in (1, -1):
            raise ConfigError("side must be +1 or -1")

    @property
    def du(self) -> float:
        return (self.u_max - self.u_min) / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return self.u_min + self.du * np.arange(self.n_points)

    @property
    def eps(self) -> np.ndarray:
        return dft_frequencies(self.n_points, self.du)

    def padded(self, factor: int) -> "LogGrid":
        """Same spacing, extended to the right by (factor - 1) window lengths."""
        width = self.u_max - self.u_min
        return replace(self, u_max=self.u_min + factor * width, n_points=factor * self.n_points)

    def refined(self, factor: int) -> "LogGrid":
        return replace(self, n_points=int(self.n_points * factor))

    def flipped(self) -> "LogGrid":
        return replace(self, side=-self.side)


@dataclass(frozen=True)
class ReducedField:
    grid: LogGrid
    values: np.ndarray
    length_scale: float = 1.0
    apodized: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (self.grid.n_points,):
            raise ConfigError("field values do not match the grid size")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SpectralField:
    """Weights q(eps_k) on the centred grid eps_k = (k - n/2) d_eps.

    ``u_origin`` and ``du`` record the u grid the weights refer to, so the
    transform can be inverted; ``convention`` makes written files
    self-describing.
    """

    eps: np.ndarray
    weights: np.ndarray
    u_origin: float
    du: float
    side: int = 1
    length_scale: float = 1.0
    convention: dict = field(default_factory=lambda: {
        "forward_sign": -1, "scaling": "du/sqrt(2pi)", "N_s": 4 * math.pi,
    })

    @property
    def d_eps(self) -> float:
        return float(self.eps[1] - self.eps[0])


@dataclass(frozen=True)
class EigenNormConstant:
    N_s: float = 4 * math.pi

    def __post_init__(self):
        if not self.N_s > 0:
            raise ConfigError("N_s must be positive")


def chi_eval(eps, x, n: EigenNormConstant = EigenNormConstant()):
    """Dilation eigenfunction exp(i eps ln|x|) / sqrt(N_s |x|); even in x."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise DomainError("chi_eps is singular at x = 0")
    ax = np.abs(x)
    out = np.exp(1j * np.asarray(eps) * np.log(ax)) / np.sqrt(n.N_s * ax)
    return complex(out) if out.ndim == 0 else out


def overlap_window(eps, eps2, L, n: EigenNormConstant = EigenNormConstant()) -> complex:
    """Integral of conj(chi_eps2) chi_eps over e^-L <= |x| <= e^L (both signs).

    Exact value (4/N_s) sin(d L)/d with d = eps - eps2, a delta sequence of
    unit weight when N_s = 4 pi.
    """
    if not L > 0:
        raise ConfigError("window half-width L must be positive")
    total = 0j
    for side in (1, -1):
        def integrand(u, side=side):
            x = side * math.exp(u)
            return np.conj(chi_eval(eps2, x, n)) * chi_eval(eps, x, n) * math.exp(u)
        # split so each panel holds a bounded number of oscillations
        d = abs(eps - eps2)
        pieces = max(1, int(math.ceil(2 * L * max(d, 1.0) / math.pi)))
        r = integrate_adaptive(integrand, -L, L, DEFAULT_QUAD,
                               points=np.linspace(-L, L, pieces + 1)[1:-1] if pieces > 1 else None)
        total += r.value
    return total


def delta_sequence_slope(Ls=(10.0, 20.0, 40.0, 80.0), n: EigenNormConstant = EigenNormConstant()):
    """Slope of the overlap peak height versus window half-width L."""
    peaks = np.array([overlap_window(0.0, 0.0, L, n).real for L in Ls])
    slope, _ = np.polyfit(np.asarray(Ls, dtype=float), peaks, 1)
    return float(slope)


def _edge_step(u, center, width, rising):
    s = 0.5 * (1.0 + np.tanh((u - center) / width))
    return s if rising else 1.0 - s


def reduce_packet(w: Wavepacket, g: LogGrid, apodize: bool = False, tail_tol: float = TAIL_TOL) -> ReducedField:
    """Sample phi(u) = s^1/2 e^{u/2} Psi(side s e^u) on ``g``.

    A grid on which |phi| at either end exceeds ``tail_tol`` times its
    maximum raises WindowError, unless ``apodize`` is set, in which case the
    offending tail is rolled off by a smooth tanh step centred
    APODIZE_OFFSET inside the end. The rolled-off ends are recorded in
    ``ReducedField.apodized``.
    """
    s = w.length_scale
    u = g.nodes
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        x = s * np.exp(np.minimum(u, 700.0))
        vals = np.sqrt(s) * np.exp(0.5 * u) * w.amplitude(x, 0.0, g.side)
    vals = np.where(np.isfinite(vals), vals, 0.0)
    amp = np.abs(vals)
    peak = amp.max()
    if peak == 0:
        return ReducedField(g, vals, s)
    bad = []
    if amp[0] > tail_tol * peak:
        bad.append("left")
    if amp[-1] > tail_tol * peak:
        bad.append("right")
    if bad and not apodize:
        raise WindowError(
            f"reduced field not negligible at the {' and '.join(bad)} end of "
            f"[{g.u_min}, {g.u_max}] (|phi|/max = {max(amp[0], amp[-1]) / peak:.2e})"
        )
    for end in bad:
        if end == "left":
            vals = vals * _edge_step(u, g.u_min + APODIZE_OFFSET, APODIZE_WIDTH, True)
        else:
            vals = vals * _edge_step(u, g.u_max - APODIZE_OFFSET, APODIZE_WIDTH, False)
    return ReducedField(g, vals, s, tuple(bad))


def expand(f: ReducedField) -> SpectralField:
    """q(eps) = (2 pi)^-1/2 \\int exp(-i eps u) phi(u) du via FFT."""
    g = f.grid
    q, _ = dft_uniform(f.values, -1, g.du, origin=g.u_min)
    return SpectralField(g.eps, q, g.u_min, g.du, g.side, f.length_scale)


def synthesize(s: SpectralField, g: LogGrid) -> ReducedField:
    """Inverse of :func:`expand`: phi(u) = (2 pi)^-1/2 \\int exp(i eps u) q(eps) d eps."""
    if s.weights.shape != (g.n_points,):
        raise ConfigError("spectral field and grid sizes differ")
    if not (math.isclose(s.du, g.du, rel_tol=1e-12) and math.isclose(s.u_origin, g.u_min, abs_tol=1e-12)):
        raise ConfigError("spectral field was not expanded on this grid")
    phi, _ = dft_uniform(s.weights, 1, s.d_eps, origin=g.u_min)
    return ReducedField(g, phi, s.length_scale)


def pad_field(f: ReducedField, factor: int = 2) -> ReducedField:
    """Zero-extend the field to the right, keeping the spacing."""
    g = f.grid.padded(factor)
    v = np.zeros(g.n_points, dtype=complex)
    v[: f.grid.n_points] = f.values
    return ReducedField(g, v, f.length_scale, f.apodized)


def crop_field(f: ReducedField, g: LogGrid) -> ReducedField:
    """Restrict a padded field back to the leading window ``g``."""
    if not math.isclose(f.grid.du, g.du, rel_tol=1e-12) or f.grid.u_min != g.u_min:
        raise ConfigError("crop grid must share origin and spacing")
    return ReducedField(g, f.values[: g.n_points], f.length_scale, f.apodized)


def field_norm(f: ReducedField) -> float:
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.du)


def field_moment(f: ReducedField, n: int, u_cut: float | None = None) -> float:
    """Half-line moment of x^n: side^n s^n \\int_{u <= u_cut} e^{n u} |phi|^2 du."""
    g = f.grid
    u = g.nodes
    dens = np.abs(f.values) ** 2
    mask = np.ones_like(u, dtype=bool) if u_cut is None else u <= u_cut
    with np.errstate(over="ignore"):
        m = np.sum(np.exp(n * u[mask]) * dens[mask]) * g.du
    return float(g.side**n * f.length_scale**n * m)


def gaussian_weight_field(a: float, g: LogGrid) -> SpectralField:
    """q(eps) = (2a/pi)^(1/4) exp(-a eps^2) on the eps grid of ``g``."""
    eps = g.eps
    q = (2 * a / math.pi) ** 0.25 * np.exp(-a * eps**2)
    # weights refer to a field centred at u = 0, independent of the grid origin
    return SpectralField(eps, q.astype(complex), g.u_min, g.du, g.side)


def shape_variance(f: ReducedField) -> float:
    """Variance v of the Gaussian shape phi ~ exp(-(u - m)^2 / 2v).

    Measured as twice the second central moment of |phi|^2.
    """
    u = f.grid.nodes
    dens = np.abs(f.values) ** 2
    w = dens / dens.sum()
    m = np.sum(w * u)
    return float(2 * np.sum(w * (u - m) ** 2))


def write_field(path, f) -> None:
    """Write a ReducedField or SpectralField as a columnar text file.

    Header lines start with '#', carry key=value grid and convention data;
    rows are ``node real imag`` with 17 significant digits.
    """
    if isinstance(f, ReducedField):
        g = f.grid
        header = {
            "kind": "reduced", "u_min": g.u_min, "u_max": g.u_max, "n_points": g.n_points,
            "side": g.side, "length_scale": f.length_scale, "apodized": ",".join(f.apodized) or "none",
        }
        coords, vals = g.nodes, f.values
    elif isinstance(f, SpectralField):
        header = {
            "kind": "spectral", "u_origin": f.u_origin, "du": f.du, "n_points": f.eps.size,
            "side": f.side, "length_scale": f.length_scale,
        }
        header.update({f"convention.{k}": v for k, v in f.convention.items()})
        coords, vals = f.eps, f.weights
    else:
        raise TypeError(f"cannot serialize {type(f).__name__}")
    with open(path, "w") as fh:
        for k, v in header.items():
            fh.write(f"# {k}={_fmt(v)}\n")
        fh.write("# columns=node real imag\n")
        for c, v in zip(coords, vals):
            fh.write(f"{c:.16e} {v.real:.16e} {v.imag:.16e}\n")


def _fmt(v):
    return f"{v:.16e}" if isinstance(v, float) else str(v)


def read_field(path):
    header = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                header[k] = v
            elif line.strip():
                rows.append([float(t) for t in line.split()])
    data = np.array(rows)
    vals = data[:, 1] + 1j * data[:, 2]
    if header["kind"] == "reduced":
        g = LogGrid(float(header["u_min"]), float(header["u_max"]), int(header["n_points"]), int(header["side"]))
        ap = () if header["apodized"] == "none" else tuple(header["apodized"].split(","))
        return ReducedField(g, vals, float(header["length_scale"]), ap)
    if header["kind"] == "spectral":
        conv = {k.split(".", 1)[1]: _parse(v) for k, v in header.items() if k.startswith("convention.")}
        return SpectralField(data[:, 0], vals, float(header["u_origin"]), float(header["du"]),
                             int(header["side"]), float(header["length_scale"]), conv)
    raise ConfigError(f"unknown field kind {header.get('kind')!r}")


def _parse(v):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v

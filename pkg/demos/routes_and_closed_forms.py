"""Four routes to one moment, and two closed forms checked against them.

<x^2(t)> for the coherent ground state is computed by rotating the argument
of the packet, by exact propagation of its log-grid field, and by a
Crank-Nicolson march of the same field. The saddle contour is compared with
the rotated integral on a truncated window. We then put the log-normal
moment and the singular-time bracket next to independent evaluations.
"""
import math

import numpy as np

from hyperq import (
    CoherentPacket, DegenerateXi, LogNormalPacket, PdeStepperConfig, PhysicalParams, bracket_oracle,
    closed_form_tl, lognormal_moment_oracle, lognormal_moment_printed, moment_rotation, moment_truncated,
)
from hyperq.observe import bracket_oracle_terms, closed_form_tl_terms, moment_pde, moment_spectral, tl_prefactor
from hyperq.numerics import integrate_adaptive

p = PhysicalParams(hbar=1.0, omega=0.0, mu=1.0)
w = CoherentPacket(0j)
t = 0.05

# 1. route agreement for the full moment
exact = 0.5 * math.cos(16 * t) ** -1.5
rows = [("rotation", moment_rotation(2, t, w, p)),
        ("spectral", moment_spectral(2, t, w, p)),
        ("pde", moment_pde(2, t, w, p, PdeStepperConfig(dt=1e-4)))]
print(f"<x^2>({t}) closed form {exact:.12f}")
for name, (v, e) in rows:
    print(f"  {name:9s} {complex(v).real:.12f}   |diff| {abs(v - exact):.1e}   est {e:.1e}")

# the saddle contour runs along a different path, so its truncated piece
# only matches the rotated one once the window covers the whole packet
for x0 in (1.0, 3.0, 6.0, 40.0):
    a, _ = moment_truncated(2, t, x0, w, p, "rotation")
    b, _ = moment_truncated(2, t, x0, w, p, "saddle")
    print(f"  x0 = {x0}: rotation {complex(a).real:.12f}  saddle {complex(b).real:.12f}")

# 2. the log-normal moment: the exponent as printed uses 4 omega t + a^4 n^2 + 16 kappa^2/a^2,
# while the Gaussian integral gives 2 n omega t + n^2 a^2 / 2 + 32 kappa^2/a^2
q = PhysicalParams(1.0, 0.3, 1.0)
print("\nlog-normal a = 0.8, n = 2")
print("   t      printed        oracle         rotation")
for tt in (0.0, 0.1, 0.2):
    v, _ = moment_rotation(2, tt, LogNormalPacket(0.8), q)
    print(f"  {tt:.1f}  {lognormal_moment_printed(2, tt, 0.8, q):12.6f}  "
          f"{lognormal_moment_oracle(2, tt, 0.8, q):12.6f}  {complex(v).real:12.6f}")

# 3. the bracket integral int_{-x0}^{x0} x^2 e^{cx} dx, term by term
c, x0 = 0.7 + 0.4j, 1.5
num = integrate_adaptive(lambda x: x * x * np.exp(c * x), -x0, x0)[0]
print(f"\nbracket at c = {c}, x0 = {x0}")
print(f"  quadrature {num:.12f}\n  oracle     {bracket_oracle(c, x0):.12f}")
for k, v in bracket_oracle_terms(c, x0).items():
    print(f"  oracle term {k:10s} {v:.6f}")

# at t_0 the printed terms map onto the oracle ones with xi = sqrt2 c; the ratio shows each sign
alpha = 0.3 + 0.1j
xi = alpha.conjugate() + 1j * alpha
printed = closed_form_tl_terms(0, alpha, x0, p)
oracle = bracket_oracle_terms(math.sqrt(2) * xi, x0)
print(f"\nsingular-time bracket at alpha = {alpha}: printed / oracle per term")
for k in printed:
    print(f"  {k:10s} {printed[k] / oracle[k]:+.6f}")
print(f"  total with prefactor: {closed_form_tl(0, alpha, x0, p):.6f}")

# on the ray where xi vanishes both expressions have a finite limit, and they differ
try:
    closed_form_tl(0, 0.7 * np.exp(1j * math.pi / 4), x0, p)
except DegenerateXi as exc:
    pref = tl_prefactor(0, 0.7 * np.exp(1j * math.pi / 4), p)
    print(f"\nxi = 0: exact limit / prefactor {exc.limit / pref:.4f}, "
          f"printed limit / prefactor {exc.printed_limit / pref:.4f}  (2 x0^3/3 = {2 * x0**3 / 3:.4f})")

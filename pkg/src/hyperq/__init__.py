"""Quantum dynamics generated by a quadratic function of the dilation operator.

Moments of x for coherent and log-normal packets are computed through four
independent routes (rotated-argument quadrature, its saddle-contour form,
an exact spectral propagator on a logarithmic grid, and a Crank-Nicolson
oracle), together with the closed forms at the singular times and a
divergence scanner that locates them.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError, DegenerateXi, DomainError, FitError, HyperqError, NoSingularity,
    NonDecayingTail, NumericsError, StabilityError, WindowError,
)
from .model import (  # noqa: E402
    CoherentPacket, LogNormalPacket, PhysicalParams, RotatedArg, Wavepacket, conj_eval_packet,
    dilation_growth, energy_dispersion, eval_packet, packet_norm, rotation_angle, singularity_time,
)
from .evolve import PdeStepperConfig, PropagationRoute  # noqa: E402
from .spectral import LogGrid  # noqa: E402
from .observe import (  # noqa: E402
    DivergenceCriteria, DivergenceProfile, GrowthFit, MomentSeries, bracket_oracle, closed_form_tl,
    divergence_profile, fit_growth, lognormal_moment_oracle, lognormal_moment_printed,
    moment_rotation, moment_truncated, scan_singularities, total_x2,
)
from .report import ReportConfig, comparison_report  # noqa: E402

"""Sampled-data feedback stabilization toolkit.

Layers:

* :mod:`sdstab.sysmodel` / :mod:`sdstab.odeint` - systems, signals,
  sampling partitions, fixed-step integration with blow-up detection.
* :mod:`sdstab.synth` - stabilizing-gain synthesis (Riccati via the
  Hamiltonian's stable subspace) with verified quadratic decrease.
* :mod:`sdstab.liecalc` / :mod:`sdstab.exprs` / :mod:`sdstab.jets` -
  expression fields, Lie brackets and derivatives through jet arithmetic,
  and the pointwise stabilizability condition checkers.
* :mod:`sdstab.patchwork` - discontinuous glued Lyapunov functions built
  from region-local pieces, with statistical verification.
* :mod:`sdstab.sdfctl` - sampled-data closed loops (frozen-gain and
  patchwork-dispatch controllers) and decrease certificates.
* :mod:`sdstab.cli` - the ``sdstab`` command-line front end.
"""

from .errors import (
    ConfigError,
    ControllerError,
    NoCertifiedStepError,
    NotStabilizableError,
    NumericalFailure,
    OffsetSelectionError,
    UncoveredPointError,
)
from .odeint import IntegrationConfig, integrate, max_excursion
from .sysmodel import (
    AffineSystem,
    ControlSignal,
    GeneralSystem,
    SamplingPartition,
    StateLinearSystem,
    Trajectory,
    make_uniform_partition,
    state_vector,
    zero_signal,
)
from .synth import (
    GainSynthesisResult,
    UniformBounds,
    solve_lyapunov,
    spectral_abscissa,
    synthesize_gain,
    uniform_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "AffineSystem",
    "ConfigError",
    "ControlSignal",
    "ControllerError",
    "GainSynthesisResult",
    "GeneralSystem",
    "IntegrationConfig",
    "NoCertifiedStepError",
    "NotStabilizableError",
    "NumericalFailure",
    "OffsetSelectionError",
    "SamplingPartition",
    "StateLinearSystem",
    "Trajectory",
    "UncoveredPointError",
    "UniformBounds",
    "integrate",
    "make_uniform_partition",
    "max_excursion",
    "solve_lyapunov",
    "spectral_abscissa",
    "state_vector",
    "synthesize_gain",
    "uniform_bounds",
    "zero_signal",
]

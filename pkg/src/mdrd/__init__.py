"""Finite-alphabet toolkit for multiple-description rate-distortion analysis.

Subpackages: probability (pmf calculus), frl (noise-substitution
decomposition), polymatroid (rate set-functions and greedy vertices),
regions (achievable-region evaluation and transforms), scalable
(successive-refinement computations), strategy (state-informed capacity),
cli (command-line front end).
"""

from .probability import (
    Alphabet,
    AxisLookupError,
    Channel,
    Decoder,
    DistortionMeasure,
    InfeasibleError,
    InvalidInputError,
    JointPmf,
    MdrdError,
    expected_distortion,
)

__all__ = [
    "Alphabet",
    "AxisLookupError",
    "Channel",
    "Decoder",
    "DistortionMeasure",
    "InfeasibleError",
    "InvalidInputError",
    "JointPmf",
    "MdrdError",
    "expected_distortion",
]

__version__ = "0.1.0"

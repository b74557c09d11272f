"""Collapse-model exclusion bounds from two-mode BEC interferometry."""

from .core import (
    CslPoint,
    ExperimentSpec,
    InitialState,
    MziGeometry,
    NoiseModel,
    Protocol,
    Species,
    SwiGeometry,
)
from .dynamics import PhaseMoments, Rates, phase_variance, rates, visibility
from .geometry import GeometryFactors, f_closed, f_quadrature, optimal_rc
from .inference import (
    ExclusionCurve,
    RepetitionEstimate,
    exclusion_curve,
    lambda_bound,
    repetitions,
    table1,
    variance_split,
)
from .scenarios import SCENARIOS

__version__ = "0.1.0"

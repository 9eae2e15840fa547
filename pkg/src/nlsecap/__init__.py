"""Capacity bounds for the dispersive NLS channel."""
from . import (channel_sim, coefficients, condpdf, distribution, envelope, information, jtensors, sampler,
               specfun)
from .coefficients import QuadratureSpec
from .condpdf import ChannelKernels
from .distribution import SymbolSequence
from .information import ChannelParams
from .jtensors import JBundle

__version__ = "0.1.0"

__all__ = [
    "channel_sim",
    "coefficients",
    "condpdf",
    "distribution",
    "envelope",
    "information",
    "jtensors",
    "sampler",
    "specfun",
    "ChannelKernels",
    "ChannelParams",
    "JBundle",
    "QuadratureSpec",
    "SymbolSequence",
    "__version__",
]

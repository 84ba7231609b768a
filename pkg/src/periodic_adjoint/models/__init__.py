"""Built-in parametrized semi-discrete models and QoIs."""

from .base import CallbackQoi, QuantityOfInterest, SemiDiscreteModel
from .burgers import make_burgers_1d
from .linear import (
    FourierForcing,
    make_linear_periodic,
    make_linear_qoi,
    make_random_linear_periodic,
)
from .vanderpol import make_forced_vdp

__all__ = [
    "CallbackQoi",
    "FourierForcing",
    "QuantityOfInterest",
    "SemiDiscreteModel",
    "make_burgers_1d",
    "make_forced_vdp",
    "make_linear_periodic",
    "make_linear_qoi",
    "make_random_linear_periodic",
]

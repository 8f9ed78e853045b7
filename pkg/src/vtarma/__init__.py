"""
V-transforms and VT-ARMA copula processes for volatile time series.
"""

from vtarma.arma import ArmaSpec
from vtarma.errors import (
    DataError,
    DegenerateInputError,
    InvalidGeneratorError,
    InvalidProfileError,
    InvalidSpecError,
    NoDualError,
    NumericError,
    VtArmaError,
)
from vtarma.estimation import (
    FitReport,
    diagnose,
    empirical_vtransform,
    fit_copula,
    fit_joint,
    fit_margin_iid,
    lr_stochastic_volatility,
    pseudo_obs,
    std_errors,
)
from vtarma.margins import Margin
from vtarma.model import ConditionalState, VtArmaModel, simulate
from vtarma.vtransform import VTransform, linear, three_param, two_param

__version__ = "0.1.0"

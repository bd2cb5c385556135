"""Algebra, geometry and likelihood inference for mixture transition distribution models."""
from .errors import (
    BalanceError,
    DegenerateDenominator,
    FormulaMismatch,
    MTDError,
    NonIdentifiable,
    NotInModel,
    OracleMismatch,
    ShapeError,
    ZeroMarginal,
)
from .model import (
    CountsTensor,
    ModelShape,
    MTDParams,
    ProbTensor,
    invert,
    jacobian_rank,
    parametrize,
    sample_data,
    sample_params,
    symbolic_parametrize,
)

__version__ = "0.1.0"

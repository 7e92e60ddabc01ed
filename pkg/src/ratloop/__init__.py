"""Exact factorization of rational loops and dressing of integrable flows."""

from .dressing import dress_order2, dress_simple_pole, dress_twisted_pair, permute
from .elements import (
    SimpleElement,
    make_m,
    make_n_upq,
    make_p,
    make_p_herm,
    make_q_glnr,
    make_q_upq,
    make_r_glnr,
    make_twisted_pair,
    product_loop,
    twist_partner,
)
from .errors import IrreducibleDenominator, NotWellDefined, RatLoopError, ValidationError
from .factorize import factor
from .loops import RationalLoop, check_conditions
from .poly import Poly, RatFunc
from .scalars import S, TowerScalar

__version__ = "0.1.0"

__all__ = [
    "IrreducibleDenominator",
    "NotWellDefined",
    "Poly",
    "RatFunc",
    "RatLoopError",
    "RationalLoop",
    "S",
    "SimpleElement",
    "TowerScalar",
    "ValidationError",
    "check_conditions",
    "dress_order2",
    "dress_simple_pole",
    "dress_twisted_pair",
    "factor",
    "make_m",
    "make_n_upq",
    "make_p",
    "make_p_herm",
    "make_q_glnr",
    "make_q_upq",
    "make_r_glnr",
    "make_twisted_pair",
    "permute",
    "product_loop",
    "twist_partner",
]

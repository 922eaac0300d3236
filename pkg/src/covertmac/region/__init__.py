"""Covert and non-covert rate-key regions."""
from .formulas import (NotReducible, convex_mix, corner, corner_general, corner_ic, covert_moments,
                       denominator, evaluate, jammer_region_point, single_user_constants,
                       single_user_tradeoff, tradeoff_knee, two_user_region_point)
from .params import LN2, CovertParams, RateKeyTuple, ZeroDenominator
from .search import InfeasibleQuery, RegionPoint, RegionQuery, default_phases, grid_search, maximize

__all__ = [
    "CovertParams", "InfeasibleQuery", "LN2", "NotReducible", "RateKeyTuple", "RegionPoint",
    "RegionQuery", "ZeroDenominator", "convex_mix", "corner", "corner_general", "corner_ic",
    "covert_moments", "default_phases", "denominator", "evaluate", "grid_search",
    "jammer_region_point", "maximize", "single_user_constants", "single_user_tradeoff",
    "tradeoff_knee", "two_user_region_point",
]

"""Visuo-haptic JND algebra.

Each link's packet error rate 1 - eta_i enters the integrated JND through

    gamma12^-2 = (1 - eta1)^-2 + (1 - eta2)^-2

so a target integrated JND theta pins eta1 once eta2 is chosen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleError, SlicingError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class JndTargets:
    theta: float
    eta2_floor: float = 0.9

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise SlicingError(f"theta must be positive, got {self.theta}")
        if not (0.0 < self.eta2_floor < 1.0):
            raise SlicingError(f"eta2_floor must lie in (0, 1), got {self.eta2_floor}")

    @property
    def feasible(self) -> bool:
        return not eta2_feasible_range(self.theta, self.eta2_floor).empty


@dataclass(frozen=True)
class Interval:
    """Half-open interval [lo, hi); ``empty`` when lo >= hi."""

    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return not self.lo < self.hi

    def __contains__(self, x: float) -> bool:
        return self.lo <= x < self.hi


def integrated_jnd(eta1: float, eta2: float) -> float:
    for name, eta in (("eta1", eta1), ("eta2", eta2)):
        if not (0.0 < eta < 1.0):
            raise SlicingError(f"{name} must lie in (0, 1), got {eta}")
    return math.hypot(1.0 / (1.0 - eta1), 1.0 / (1.0 - eta2)) ** -1


def eta1_for_jnd(theta: float, eta2: float) -> float:
    """URLLC reliability that brings the integrated JND to exactly theta.

    eta1 = 1 - (1/theta^2 - 1/(1-eta2)^2)^(-1/2).  Needs 1 - eta2 > theta
    for a real root and eta2 <= 1 - theta*sqrt(2) for eta1 >= eta2.
    """
    if not theta > 0:
        raise SlicingError(f"theta must be positive, got {theta}")
    if not (0.0 < eta2 < 1.0):
        raise SlicingError(f"eta2 must lie in (0, 1), got {eta2}")
    per2 = 1.0 - eta2
    if per2 <= theta:
        raise InfeasibleError(
            f"no real eta1: 1 - eta2 = {per2:.6g} must exceed theta = {theta:.6g}"
        )
    if eta2 > 1.0 - theta * SQRT2:
        raise InfeasibleError(
            f"eta2 = {eta2:.6g} exceeds 1 - theta*sqrt(2) = {1.0 - theta * SQRT2:.6g}; eta1 would fall below eta2"
        )
    # (1/theta^2 - 1/per2^2)^(-1/2) = theta*per2 / sqrt(per2^2 - theta^2)
    per1 = theta * per2 / math.sqrt((per2 - theta) * (per2 + theta))
    # clamp the boundary case eta2 = 1 - theta*sqrt(2) onto eta1 == eta2
    return max(1.0 - per1, eta2)


def eta2_feasible_range(theta: float, eta2_floor: float) -> Interval:
    """[eta2_floor, min(1, 1 - theta*sqrt(2))), possibly empty."""
    return Interval(eta2_floor, min(1.0, 1.0 - theta * SQRT2))

"""Optimal OMA/NOMA slicing of a fixed-rate URLLC link and a max-rate eMBB link.

For a fixed eMBB reliability eta2 the JND constraint fixes eta1, and the URLLC
rate equality fixes the resource split (bandwidth under OMA, power under
NOMA).  What remains is a 1-D search over eta2 on
[eta2_floor, 1 - theta*sqrt(2)).  ``search="closed_form"`` skips the search
and evaluates at eta2 = eta2_floor, which is optimal whenever the eMBB rate
is decreasing on the feasible interval (the usual case for eta2_floor >= 0.3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import analytic
from .analytic import NetworkParams, NomaPowerSplit, OmaBandwidthSplit
from .errors import ConvergenceError, InfeasibleError, SlicingError
from .perception import JndTargets, eta1_for_jnd, eta2_feasible_range, integrated_jnd

COARSE_POINTS = 64
SEARCH_TOL = 1e-6
TOP_MARGIN = 1e-9
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class Scheme(str, Enum):
    OMA = "oma"
    NOMA = "noma"


class Search(str, Enum):
    GRID_REFINE = "grid"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class ProblemP1:
    params: NetworkParams
    r1_target: float
    jnd: JndTargets

    def __post_init__(self):
        if not (self.r1_target > 0 and math.isfinite(self.r1_target)):
            raise SlicingError(f"URLLC rate target must be positive, got {self.r1_target}")

    @classmethod
    def build(cls, alpha=4.0, c_mode="lower", c_value=None, r1_target=1e-5, theta=1e-2, eta2_floor=0.9):
        return cls(NetworkParams(alpha, c_mode, c_value), r1_target, JndTargets(theta, eta2_floor))

    @property
    def theta(self) -> float:
        return self.jnd.theta

    def search_interval(self) -> tuple[float, float]:
        iv = eta2_feasible_range(self.jnd.theta, self.jnd.eta2_floor)
        hi = iv.hi - TOP_MARGIN
        if iv.empty or hi <= iv.lo:
            raise InfeasibleError(
                f"empty eta2 interval: eta2_floor={iv.lo} >= 1 - theta*sqrt(2)={iv.hi:.6g}"
            )
        return iv.lo, hi


@dataclass(frozen=True)
class SliceDesign:
    scheme: Scheme
    split: OmaBandwidthSplit | NomaPowerSplit
    t1_star: float
    t2_star: float
    eta1: float
    eta2: float

    @property
    def resource_split(self) -> tuple[float, float]:
        if isinstance(self.split, OmaBandwidthSplit):
            return self.split.w1, self.split.w2
        return self.split.beta1, self.split.beta2


@dataclass(frozen=True)
class RateResult:
    rate1: float
    rate2: float
    p1: float
    p2: float


@dataclass(frozen=True)
class Solution:
    design: SliceDesign
    rates: RateResult
    search: Search
    model: str = "bound"
    evaluations: int = field(default=0, compare=False)

    def __iter__(self):
        # allows ``design, rates = solve_p1(...)``
        yield self.design
        yield self.rates


# --------------------------------------------------------------------------
# equality-constraint resource splits


def urllc_capacity(params: NetworkParams, eta1: float, model: str = "bound") -> float:
    """Largest URLLC rate at reliability eta1 (whole band / all power)."""
    return eta1 * math.log1p(analytic.inverse_coverage(params, eta1, model))


def _check_order(eta1: float, eta2: float):
    if not (0.0 < eta2 <= eta1 < 1.0):
        raise InfeasibleError(f"need 0 < eta2 <= eta1 < 1, got eta1={eta1}, eta2={eta2}")


def oma_split_for_target(problem: ProblemP1, eta1: float, eta2: float, model: str = "bound") -> OmaBandwidthSplit:
    """Bandwidth split meeting R1 = r1_target exactly: w1 = R1 / (eta1 log(1 + G(eta1)))."""
    _check_order(eta1, eta2)
    cap = urllc_capacity(problem.params, eta1, model)
    w1 = problem.r1_target / cap
    if w1 >= 1.0:
        raise InfeasibleError(
            f"URLLC target unsatisfiable: r1_target={problem.r1_target:.6g} >= eta1*log(1+G(eta1))={cap:.6g}"
        )
    return OmaBandwidthSplit.from_w1(w1)


def noma_split_for_target(problem: ProblemP1, eta1: float, eta2: float, model: str = "bound") -> NomaPowerSplit:
    """Power split meeting R1 = r1_target exactly.

    With t = exp(R1/eta1) - 1 the Link-1 threshold that delivers the target:

    derived:      beta1 = (1 + G) (1 - exp(-R1/eta1)) / G
    unnormalized: beta2/beta1 = 1/t - 1/G

    Either way t < G(eta1) is required.
    """
    _check_order(eta1, eta2)
    params = problem.params
    g = analytic.inverse_coverage(params, eta1, model)
    r = problem.r1_target / eta1
    t1_needed = math.expm1(r)
    if t1_needed >= g:
        raise InfeasibleError(
            f"URLLC target unsatisfiable under NOMA: exp(r1/eta1)-1={t1_needed:.6g} >= G(eta1)={g:.6g}"
        )
    if params.link1_form == "unnormalized":
        return NomaPowerSplit.from_ratio(1.0 / t1_needed - 1.0 / g)
    return NomaPowerSplit.from_beta1(-(1.0 + g) * math.expm1(-r) / g)


# --------------------------------------------------------------------------
# designs at a fixed eta2


def design_at(problem: ProblemP1, scheme: Scheme | str, eta2: float, model: str = "bound") -> tuple[SliceDesign, RateResult]:
    """Constraint-satisfying design for a given eta2 (the floor is not enforced here)."""
    scheme = Scheme(scheme)
    params = problem.params
    eta1 = eta1_for_jnd(problem.theta, eta2)
    if scheme is Scheme.OMA:
        split = oma_split_for_target(problem, eta1, eta2, model)
        t1 = analytic.inverse_coverage(params, eta1, model)
        t2 = analytic.inverse_coverage(params, eta2, model)
        rates = RateResult(
            rate1=analytic.rate_oma(params, split, 1, eta1, model),
            rate2=analytic.rate_oma(params, split, 2, eta2, model),
            p1=analytic.coverage(params, t1, model),
            p2=analytic.coverage(params, t2, model),
        )
    else:
        split = noma_split_for_target(problem, eta1, eta2, model)
        t1 = analytic.noma_threshold_t1(params, split, eta1, model)
        t2 = analytic.noma_threshold_t2(params, split, eta1, eta2, model)
        r1, r2 = analytic.rate_noma(params, split, eta1, eta2, model)
        rates = RateResult(
            rate1=r1,
            rate2=r2,
            p1=analytic.noma_p1(params, split, t1, model),
            p2=analytic.noma_p2(params, split, t1, t2, analytic.P2Mode.INDEPENDENT, model),
        )
    return SliceDesign(scheme, split, t1, t2, eta1, eta2), rates


def objective(problem: ProblemP1, scheme: Scheme | str, eta2: float, model: str = "bound") -> float:
    """eMBB rate at eta2, or -inf where the constraints cannot be met."""
    try:
        return design_at(problem, scheme, eta2, model)[1].rate2
    except InfeasibleError:
        return -math.inf


def constraint_residuals(problem: ProblemP1, design: SliceDesign, model: str = "bound") -> tuple[float, float]:
    """Relative violations (|R1 - R1_target|/R1_target, |gamma12 - theta|/theta)."""
    params = problem.params
    if design.scheme is Scheme.OMA:
        r1 = analytic.rate_oma(params, design.split, 1, design.eta1, model)
    else:
        r1 = analytic.rate_noma(params, design.split, design.eta1, design.eta2, model)[0]
    gamma = integrated_jnd(design.eta1, design.eta2)
    return abs(r1 - problem.r1_target) / problem.r1_target, abs(gamma - problem.theta) / problem.theta


# --------------------------------------------------------------------------
# 1-D search


def golden_section_max(f, a: float, b: float, tol: float = SEARCH_TOL, max_iter: int = 200):
    """Maximise a unimodal f on [a, b]; returns (x, f(x), evaluations)."""
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    else:
        raise ConvergenceError(f"golden-section search stalled with bracket [{a!r}, {b!r}]")
    return (c, fc, evals) if fc >= fd else (d, fd, evals)


def _grid_refine(problem: ProblemP1, scheme: Scheme, model: str) -> tuple[float, int]:
    lo, hi = problem.search_interval()
    grid = np.linspace(lo, hi, COARSE_POINTS)
    values = np.array([objective(problem, scheme, x, model) for x in grid])
    if not np.isfinite(values).any():
        raise InfeasibleError(
            f"URLLC target {problem.r1_target:.6g} unsatisfiable for every eta2 in [{lo:.6g}, {hi:.6g}]"
        )
    i = int(np.argmax(values))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, COARSE_POINTS - 1)]
    x, fx, evals = golden_section_max(lambda e: objective(problem, scheme, e, model), a, b)
    if not math.isfinite(fx) or fx < values[i]:
        x, fx = grid[i], values[i]
    return float(x), COARSE_POINTS + evals


def solve_p1(problem: ProblemP1, scheme: Scheme | str, search: Search | str = Search.GRID_REFINE,
             model: str = "bound") -> Solution:
    """Maximise the eMBB rate subject to the URLLC rate, JND and reliability constraints.

    ``model="exact"`` evaluates the same problem with the exact coverage
    inverse instead of the closed-form bound.
    """
    scheme, search = Scheme(scheme), Search(search)
    lo, _ = problem.search_interval()
    if search is Search.CLOSED_FORM:
        eta2, evals = lo, 1
    else:
        eta2, evals = _grid_refine(problem, scheme, model)
    design, rates = design_at(problem, scheme, eta2, model)
    return Solution(design, rates, search, model, evals)


# --------------------------------------------------------------------------
# SIC order


def compare_sic_orders(problem: ProblemP1, design: SliceDesign, model: str = "bound") -> tuple[float, float]:
    """eMBB rate with reliability-ordered SIC vs. power-ordered SIC.

    Power order decodes the stronger layer first.  When beta1 >= 1/2 that is
    Link 1 and both orders coincide.  Otherwise Link 2 is decoded first and
    must itself succeed with probability eta1 for Link 1 to keep its target,
    so the eMBB rate is evaluated with eta2 replaced by eta1.
    """
    if design.scheme is not Scheme.NOMA:
        raise SlicingError("SIC order comparison needs a NOMA design")
    params, split = problem.params, design.split
    reliability = analytic.rate_noma(params, split, design.eta1, design.eta2, model)[1]
    if split.beta1 >= split.beta2:
        return reliability, reliability
    power = analytic.rate_noma(params, split, design.eta1, design.eta1, model)[1]
    return reliability, power


# --------------------------------------------------------------------------
# NOMA/OMA crossover in theta


@dataclass(frozen=True)
class Crossover:
    r1_target: float
    theta_star: float
    dominating: bool
    bracket: tuple[float, float]
    sign_changes: int
    scan: tuple[tuple[float, float], ...] = field(repr=False, default=())


def rate_gap(params: NetworkParams, r1_target: float, theta: float, eta2_floor: float = 0.9,
             search: Search | str = Search.GRID_REFINE, model: str = "bound") -> float:
    """Optimal eMBB rate of NOMA minus OMA; nan if either scheme is infeasible."""
    try:
        problem = ProblemP1(params, r1_target, JndTargets(theta, eta2_floor))
        noma = solve_p1(problem, Scheme.NOMA, search, model).rates.rate2
        oma = solve_p1(problem, Scheme.OMA, search, model).rates.rate2
    except InfeasibleError:
        return math.nan
    return noma - oma


def crossover_theta(params: NetworkParams, r1_target: float, theta_range: tuple[float, float] = (1e-6, 5e-2),
                    eta2_floor: float = 0.9, scan_points: int = 41, search: Search | str = Search.GRID_REFINE,
                    model: str = "bound", log_tol: float = 1e-3) -> Crossover:
    """Largest theta below which NOMA beats OMA.

    The theta range is scanned on a log grid, then the last NOMA-to-OMA sign
    change is bisected in log10(theta) down to ``log_tol``.  If NOMA still
    wins at the last feasible scan point, theta* lies beyond the range and
    its upper end is returned with ``dominating=True``.  ``sign_changes`` counts all sign flips seen on the
    scan; a value above 1 means OMA also wins somewhere below theta_star
    (typically right next to the URLLC infeasibility edge).
    """
    lo, hi = theta_range
    if not 0 < lo < hi:
        raise SlicingError(f"bad theta range {theta_range}")

    def gap(log_theta):
        return rate_gap(params, r1_target, 10.0**log_theta, eta2_floor, search, model)

    xs = np.linspace(math.log10(lo), math.log10(hi), scan_points)
    gaps = [gap(x) for x in xs]
    scan = tuple((float(10.0**x), g) for x, g in zip(xs, gaps))
    finite = [(x, g) for x, g in zip(xs, gaps) if math.isfinite(g) and g != 0.0]
    if not finite:
        raise InfeasibleError(f"no crossover in range: both schemes infeasible on {theta_range} for r1={r1_target}")
    signs = [g > 0 for _, g in finite]
    changes = sum(1 for s0, s1 in zip(signs, signs[1:]) if s0 != s1)
    last_pos = max((k for k, s in enumerate(signs) if s), default=None)
    if last_pos is None:
        raise InfeasibleError(
            f"no crossover in range: OMA better at every feasible theta in {theta_range} "
            f"(gap signs: first={'+' if signs[0] else '-'}, last={'+' if signs[-1] else '-'})"
        )
    if last_pos == len(finite) - 1:
        top = float(hi) if finite[-1][0] == xs[-1] else float(10.0 ** finite[-1][0])
        return Crossover(r1_target, top, True, (top, top), changes, scan)

    a, b = finite[last_pos][0], finite[last_pos + 1][0]
    for _ in range(200):
        if b - a <= log_tol:
            break
        m = 0.5 * (a + b)
        gm = gap(m)
        if not math.isfinite(gm):
            raise ConvergenceError(f"rate gap undefined at theta={10.0**m:.6g} inside bracket [{10.0**a:.6g}, {10.0**b:.6g}]")
        if gm > 0:
            a = m
        else:
            b = m
    else:
        raise ConvergenceError(f"bisection stalled at bracket [{10.0**a:.6g}, {10.0**b:.6g}]")
    return Crossover(r1_target, float(10.0 ** (0.5 * (a + b))), False, (float(10.0**a), float(10.0**b)), changes, scan)

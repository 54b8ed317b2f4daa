"""Closed-form SIR coverage, threshold inversion and per-link average rates.

Interference-limited downlink with PPP base stations, nearest-BS association
and unit-mean exponential (Rayleigh power) fading.  Every link SIR reduces to
the canonical ratio

    SIRbar = g |x0|^-alpha / sum_x g_x |x|^-alpha

whose coverage ``Pr(SIRbar >= t)`` is available both exactly (Gauss
hypergeometric form) and through the one-parameter approximation
``(1 + c t)^(-2/alpha)``.  Rates are in nats per normalized bandwidth.

NOMA Link 1 sees its own eMBB layer as interference:
SIR_1 = beta1 X / (beta2 X + 1) with X = SIRbar, so SIR_1 >= t1 iff
X >= t1 / (beta1 - t1 beta2).  ``NetworkParams.link1_form="unnormalized"``
instead uses 1 / (1/t1 - beta2/beta1), which is beta1 times smaller; it is
kept for reproducing closed forms built on that expression and is not what
the Monte Carlo engine measures.

Most functions accept ``model="bound"`` (the ``(1 + c t)^(-2/alpha)`` family,
with ``c`` taken from :class:`NetworkParams`) or ``model="exact"`` (the
hypergeometric coverage, inverted numerically).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError, SlicingError, ThresholdCeilingError

COVERAGE_MODELS = ("bound", "exact")
LINK1_FORMS = ("derived", "unnormalized")
QUAD_TOL = 1e-10


class CMode(str, Enum):
    LOWER = "lower"
    UPPER = "upper"
    EXPLICIT = "explicit"


def c_lower(alpha: float) -> float:
    """Smallest admissible coverage constant, alpha/(alpha-2).

    Exact as t -> 0; gives an upper bound on coverage elsewhere.
    """
    return alpha / (alpha - 2.0)


def c_upper(alpha: float) -> float:
    """Largest admissible coverage constant, [2pi/alpha * csc(2pi/alpha)]^(alpha/2)."""
    x = 2.0 * math.pi / alpha
    return (x / math.sin(x)) ** (alpha / 2.0)


@dataclass(frozen=True)
class NetworkParams:
    """Path-loss exponent and coverage constant.

    ``c_mode`` selects ``c``: ``"lower"`` -> alpha/(alpha-2) (the default used
    throughout the numerical study), ``"upper"`` -> the csc form, or
    ``"explicit"`` with ``c_value`` inside that bracket.  ``link1_form``
    picks the NOMA Link-1 threshold mapping (see module docstring).
    """

    alpha: float = 4.0
    c_mode: CMode = CMode.LOWER
    c_value: float | None = None
    link1_form: str = "derived"
    c: float = field(init=False)

    def __post_init__(self):
        alpha = float(self.alpha)
        if not math.isfinite(alpha) or alpha <= 2.0:
            raise SlicingError(f"path-loss exponent must exceed 2, got alpha={self.alpha}")
        try:
            mode = CMode(self.c_mode)
        except ValueError:
            raise SlicingError(f"unknown c_mode {self.c_mode!r}") from None
        if self.link1_form not in LINK1_FORMS:
            raise SlicingError(f"link1_form must be one of {LINK1_FORMS}, got {self.link1_form!r}")
        lo, hi = c_lower(alpha), c_upper(alpha)
        if mode is CMode.LOWER:
            c = lo
        elif mode is CMode.UPPER:
            c = hi
        else:
            if self.c_value is None:
                raise SlicingError("c_mode='explicit' requires c_value")
            c = float(self.c_value)
            # small slack so that c_value=c_upper(alpha) round-trips
            if not (lo * (1 - 1e-12) <= c <= hi * (1 + 1e-12)):
                raise SlicingError(
                    f"c={c} outside admissible bracket [{lo:.6g}, {hi:.6g}] for alpha={alpha}"
                )
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "c_mode", mode)
        object.__setattr__(self, "c", c)

    @classmethod
    def explicit(cls, alpha: float, c: float, link1_form: str = "derived") -> "NetworkParams":
        return cls(alpha=alpha, c_mode=CMode.EXPLICIT, c_value=c, link1_form=link1_form)

    def with_c_mode(self, mode: CMode | str, c_value: float | None = None) -> "NetworkParams":
        return NetworkParams(self.alpha, mode, c_value, self.link1_form)

    def with_link1_form(self, form: str) -> "NetworkParams":
        return NetworkParams(self.alpha, self.c_mode, self.c_value, form)


def _check_fraction(name: str, value: float):
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise SlicingError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class OmaBandwidthSplit:
    """Miniblock (bandwidth) fractions, w1 + w2 = 1."""

    w1: float
    w2: float

    def __post_init__(self):
        _check_fraction("w1", self.w1)
        _check_fraction("w2", self.w2)
        if abs(self.w1 + self.w2 - 1.0) > 1e-12:
            raise SlicingError(f"w1 + w2 must equal 1, got {self.w1} + {self.w2}")

    @classmethod
    def from_w1(cls, w1: float) -> "OmaBandwidthSplit":
        return cls(w1=w1, w2=1.0 - w1)

    def fraction(self, link: int) -> float:
        if link == 1:
            return self.w1
        if link == 2:
            return self.w2
        raise SlicingError(f"link must be 1 or 2, got {link}")


@dataclass(frozen=True)
class NomaPowerSplit:
    """Transmit power fractions, beta1 + beta2 = 1.

    Both fractions are stored so that ``beta2 / beta1`` stays accurate when
    beta1 is tiny (URLLC loads of ~1e-5 nats put beta1 near 1e-5).
    """

    beta1: float
    beta2: float

    def __post_init__(self):
        _check_fraction("beta1", self.beta1)
        _check_fraction("beta2", self.beta2)
        if self.beta1 <= 0.0:
            raise SlicingError("beta1 must be positive (Link 1 needs power)")
        if abs(self.beta1 + self.beta2 - 1.0) > 1e-12:
            raise SlicingError(f"beta1 + beta2 must equal 1, got {self.beta1} + {self.beta2}")

    @classmethod
    def from_beta2(cls, beta2: float) -> "NomaPowerSplit":
        return cls(beta1=1.0 - beta2, beta2=beta2)

    @classmethod
    def from_beta1(cls, beta1: float) -> "NomaPowerSplit":
        return cls(beta1=beta1, beta2=1.0 - beta1)

    @classmethod
    def from_ratio(cls, ratio: float) -> "NomaPowerSplit":
        """Split with beta2/beta1 = ratio."""
        if ratio < 0:
            raise SlicingError(f"power ratio must be non-negative, got {ratio}")
        return cls(beta1=1.0 / (1.0 + ratio), beta2=ratio / (1.0 + ratio))

    @property
    def ratio(self) -> float:
        return self.beta2 / self.beta1

    @property
    def ceiling(self) -> float:
        """Upper limit beta1/beta2 of the Link-1 SIR under self-interference."""
        return math.inf if self.beta2 == 0.0 else self.beta1 / self.beta2


# --------------------------------------------------------------------------
# coverage


def _scalar_or_array(fn, t):
    arr = np.asarray(t, dtype=float)
    if arr.ndim == 0:
        return fn(float(arr))
    return np.vectorize(fn, otypes=[float])(arr)


def coverage_bound(params: NetworkParams, t):
    """``(1 + c t)^(-2/alpha)``; works elementwise on arrays."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise SlicingError("SIR threshold must be non-negative")
    out = np.power(1.0 + params.c * t, -2.0 / params.alpha)
    return float(out) if out.ndim == 0 else out


def _tail_from(alpha: float, lo: float) -> tuple[float, float]:
    # int_lo^inf du / (1 + u^k) with lo >= 1, as int_0^(1/lo) v^(k-2) / (1 + v^k) dv.
    # The v^(k-2) factor goes into QUADPACK's algebraic weight, so the slow
    # u^-k decay near alpha = 2 costs nothing.
    k = alpha / 2.0
    return integrate.quad(lambda v: 1.0 / (1.0 + v**k), 0.0, 1.0 / lo, weight="alg", wvar=(k - 2.0, 0.0),
                          epsabs=0.0, epsrel=QUAD_TOL * 0.1, limit=200)


@lru_cache(maxsize=64)
def _upper_tail(alpha: float) -> float:
    # int_1^inf du / (1 + u^(alpha/2))
    val, err = _tail_from(alpha, 1.0)
    if err > QUAD_TOL * val:
        raise ConvergenceError(f"tail integral did not converge for alpha={alpha} (err={err:.2e})")
    return val


def _interference_ratio(alpha: float, t: float) -> float:
    """rho(t) = 2F1(1, -2/alpha; 1-2/alpha; -t) - 1 via its integral form.

    rho(t) = t^(2/alpha) * int_{t^(-2/alpha)}^inf du / (1 + u^(alpha/2))
    """
    if t == 0.0:
        return 0.0
    delta = 2.0 / alpha
    k = alpha / 2.0
    lo = t ** (-delta)
    if lo >= 1.0:
        val, err = _tail_from(alpha, lo)
    else:
        val, err = integrate.quad(lambda u: 1.0 / (1.0 + u**k), lo, 1.0, epsabs=0.0, epsrel=QUAD_TOL * 0.1, limit=200)
        val += _upper_tail(alpha)
    if not math.isfinite(val) or err > QUAD_TOL * max(val, 1e-300):
        raise ConvergenceError(f"coverage quadrature did not converge at t={t} (alpha={alpha}, err={err:.2e})")
    return t**delta * val


def _coverage_exact_scalar(alpha: float, t: float) -> float:
    if t < 0 or math.isnan(t):
        raise SlicingError(f"SIR threshold must be non-negative, got {t}")
    if math.isinf(t):
        return 0.0
    if alpha == 4.0:
        s = math.sqrt(t)
        return 1.0 / (1.0 + s * math.atan(s))
    return 1.0 / (1.0 + _interference_ratio(alpha, t))


def coverage_exact(params: NetworkParams, t):
    """Exact coverage ``1 / 2F1(1, -2/alpha; 1-2/alpha; -t)``.

    alpha = 4 uses ``1 / (1 + sqrt(t) atan(sqrt(t)))``; other exponents go
    through adaptive quadrature of the integral representation (the power
    series diverges for t > 1).
    """
    return _scalar_or_array(lambda x: _coverage_exact_scalar(params.alpha, x), t)


def coverage(params: NetworkParams, t, model: str = "bound"):
    if model == "bound":
        return coverage_bound(params, t)
    if model == "exact":
        return coverage_exact(params, t)
    raise SlicingError(f"unknown coverage model {model!r}; expected one of {COVERAGE_MODELS}")


# --------------------------------------------------------------------------
# inverse coverage


def _check_open_probability(name: str, eta: float):
    if not (0.0 < eta < 1.0):
        raise SlicingError(f"{name} must lie strictly inside (0, 1), got {eta}")


def _g_with_c(alpha: float, c: float, eta: float) -> float:
    # eta^(-alpha/2) - 1 without cancellation for eta near 1
    return math.expm1(-0.5 * alpha * math.log(eta)) / c


def inverse_threshold_G(params: NetworkParams, eta: float) -> float:
    """SIR threshold met with probability ``eta``: (eta^(-alpha/2) - 1)/c."""
    _check_open_probability("eta", eta)
    return _g_with_c(params.alpha, params.c, eta)


def inverse_coverage_exact(params: NetworkParams, eta: float) -> float:
    """Threshold t with coverage_exact(t) = eta, by bracketed root finding.

    The bound family brackets the exact curve, so the root lies between the
    thresholds obtained with the upper and lower coverage constants.
    """
    _check_open_probability("eta", eta)
    a = _g_with_c(params.alpha, c_upper(params.alpha), eta)
    b = _g_with_c(params.alpha, c_lower(params.alpha), eta)
    fa = _coverage_exact_scalar(params.alpha, a) - eta
    fb = _coverage_exact_scalar(params.alpha, b) - eta
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        # rounding at the extreme ends of (0, 1); widen once
        a, b = a * 0.5, b * 2.0
    root, res = optimize.brentq(
        lambda t: _coverage_exact_scalar(params.alpha, t) - eta,
        a, b, xtol=1e-300, rtol=1e-14, maxiter=200, full_output=True,
    )
    if not res.converged:
        raise ConvergenceError(f"inverse exact coverage failed for eta={eta}: {res.flag}")
    return root


def inverse_coverage(params: NetworkParams, eta: float, model: str = "bound") -> float:
    if model == "bound":
        return inverse_threshold_G(params, eta)
    if model == "exact":
        return inverse_coverage_exact(params, eta)
    raise SlicingError(f"unknown coverage model {model!r}; expected one of {COVERAGE_MODELS}")


# --------------------------------------------------------------------------
# OMA


def rate_oma(params: NetworkParams, split: OmaBandwidthSplit, link: int, eta: float, model: str = "bound") -> float:
    """Average rate w_i * eta * log(1 + t*) of one OMA link."""
    w = split.fraction(link)
    if w == 0.0:
        return 0.0
    return w * eta * math.log1p(inverse_coverage(params, eta, model))


# --------------------------------------------------------------------------
# NOMA with Link 1 decoded first


def link1_effective_threshold(params: NetworkParams, split: NomaPowerSplit, t1: float) -> float:
    """SIRbar threshold equivalent to SIR_1 >= t1 under self-interference.

    derived:      X >= 1 / (beta1/t1 - beta2)
    unnormalized: X >= 1 / (1/t1 - beta2/beta1)
    """
    if t1 < 0:
        raise SlicingError(f"t1 must be non-negative, got {t1}")
    if t1 == 0.0:
        return 0.0
    if t1 >= split.ceiling:
        raise ThresholdCeilingError(
            f"threshold ceiling exceeded: t1={t1} >= beta1/beta2={split.ceiling}"
        )
    if params.link1_form == "unnormalized":
        return 1.0 / (1.0 / t1 - split.ratio)
    return 1.0 / (split.beta1 / t1 - split.beta2)


def noma_p1(params: NetworkParams, split: NomaPowerSplit, t1: float, model: str = "bound") -> float:
    """Link-1 decoding success probability Pr(SIR_1 >= t1)."""
    return coverage(params, link1_effective_threshold(params, split, t1), model)


def noma_threshold_t1(params: NetworkParams, split: NomaPowerSplit, eta1: float, model: str = "bound") -> float:
    """Link-1 threshold met with probability eta1.

    derived:      beta1 G / (1 + beta2 G)      = [beta2/beta1 + 1/(beta1 G)]^-1
    unnormalized: [beta2/beta1 + 1/G]^-1
    """
    g = inverse_coverage(params, eta1, model)
    if params.link1_form == "unnormalized":
        return 1.0 / (split.ratio + 1.0 / g)
    return split.beta1 * g / (1.0 + split.beta2 * g)


def embb_threshold_gain(params: NetworkParams, eta1: float, eta2: float, model: str = "bound") -> float:
    """Link-2 SIR threshold per unit of eMBB power after Link-1 decoding.

    Bound model: [(eta1/eta2)^(alpha/2) - 1] / c, i.e. G(eta2/eta1).  Zero
    when eta1 == eta2; the reliability order eta2 <= eta1 is required.
    """
    _check_open_probability("eta1", eta1)
    _check_open_probability("eta2", eta2)
    if eta2 > eta1:
        raise SlicingError(f"reliability order violated: eta2={eta2} > eta1={eta1}")
    if eta2 == eta1:
        return 0.0
    return inverse_coverage(params, eta2 / eta1, model)


def noma_threshold_t2(params: NetworkParams, split: NomaPowerSplit, eta1: float, eta2: float, model: str = "bound") -> float:
    return split.beta2 * embb_threshold_gain(params, eta1, eta2, model)


def rate_noma(params: NetworkParams, split: NomaPowerSplit, eta1: float, eta2: float, model: str = "bound") -> tuple[float, float]:
    """(R1, R2) under NOMA with reliability-ordered SIC.

    R1 = eta1 log(1 + t1*(eta1))          (see noma_threshold_t1)
    R2 = eta2 log(1 + beta2 H(eta1, eta2))
    """
    h = embb_threshold_gain(params, eta1, eta2, model)
    r1 = eta1 * math.log1p(noma_threshold_t1(params, split, eta1, model))
    r2 = eta2 * math.log1p(split.beta2 * h)
    return r1, r2


class P2Mode(str, Enum):
    EXACT = "exact"  # fully correlated joint event
    NESTED = "nested"  # as printed: p1 * Pr(SIRbar >= max{...})
    INDEPENDENT = "independent"  # p1 * Pr(SIR_2 >= t2)


def noma_p2(params: NetworkParams, split: NomaPowerSplit, t1: float, t2: float,
            mode: P2Mode | str = P2Mode.INDEPENDENT, model: str = "bound") -> float:
    """Probability that Link 2 is decoded (after Link 1 succeeded).

    With a single fading draw shared by both layers, {SIR_1 >= t1} and
    {SIR_2 >= t2} are both upper sets of SIRbar, so the exact joint is the
    coverage at the larger of the two effective thresholds.  ``"nested"``
    keeps an extra factor p1 in front of that; ``"independent"`` drops the
    max and is what the closed-form rates are built on.
    """
    mode = P2Mode(mode)
    if t2 < 0:
        raise SlicingError(f"t2 must be non-negative, got {t2}")
    x1 = link1_effective_threshold(params, split, t1)
    if t2 == 0.0:
        x2 = 0.0
    elif split.beta2 == 0.0:
        x2 = math.inf
    else:
        x2 = t2 / split.beta2

    def cov(x):
        return 0.0 if math.isinf(x) else coverage(params, x, model)

    if mode is P2Mode.EXACT:
        return cov(max(x1, x2))
    p1 = cov(x1)
    if mode is P2Mode.NESTED:
        return p1 * cov(max(x1, x2))
    return p1 * cov(x2)


def noma_p2_exact(params: NetworkParams, split: NomaPowerSplit, t1: float, t2: float,
                  approximate: bool = False, model: str = "bound") -> float:
    """Joint Link-2 success: exact nested event, or the independence shortcut."""
    return noma_p2(params, split, t1, t2, P2Mode.INDEPENDENT if approximate else P2Mode.EXACT, model)

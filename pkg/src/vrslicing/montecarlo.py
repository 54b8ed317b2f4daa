"""Monte Carlo oracle: PPP interference fields seen by the typical user.

Each sample draws

* the serving distance r0 from its exact law (pi*lam*r0^2 ~ Exp(1)),
* interferers as a homogeneous PPP on the annulus (r0, R_max], and
* unit-mean exponential fading for the desired and every interfering link.

The field beyond R_max is replaced by its mean, 2*pi*lam*R_max^(2-alpha)/(alpha-2);
with the default R_max >= 10*max(r0, mean nearest distance) the neglected
fluctuation moves coverage by well under 1e-4.

Samples are generated in fixed-size chunks.  Chunk k draws from
``PCG64(SeedSequence(seed, spawn_key=(k,)))`` so the stream depends only on
(seed, k): serial and threaded runs give bit-identical estimates, because
each chunk reduces to integer success counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import norm

from .analytic import NetworkParams, NomaPowerSplit, OmaBandwidthSplit
from .errors import SlicingError

RNG_ALGORITHM = "numpy.PCG64/SeedSequence(seed,spawn_key=(chunk,))"
MIN_PUBLISHED_SAMPLES = 1000


@dataclass(frozen=True)
class McConfig:
    n_samples: int = 200_000
    seed: int = 1
    bs_density: float = 1.0
    truncation_radius_factor: float = 10.0
    confidence_level: float = 0.95
    chunk_size: int = 16384
    workers: int = 1
    tail_compensation: bool = True

    def __post_init__(self):
        if self.n_samples < 1:
            raise SlicingError(f"n_samples must be positive, got {self.n_samples}")
        if not (0 <= self.seed < 2**64):
            raise SlicingError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if not self.bs_density > 0:
            raise SlicingError(f"bs_density must be positive, got {self.bs_density}")
        if self.truncation_radius_factor < 10.0:
            raise SlicingError("truncation_radius_factor must be at least 10 mean nearest-BS distances")
        if not (0.0 < self.confidence_level < 1.0):
            raise SlicingError(f"confidence_level must lie in (0, 1), got {self.confidence_level}")
        if self.chunk_size < 1 or self.workers < 1:
            raise SlicingError("chunk_size and workers must be positive")

    @property
    def mean_nearest_distance(self) -> float:
        return 0.5 / math.sqrt(self.bs_density)

    @property
    def z(self) -> float:
        return float(norm.ppf(0.5 + 0.5 * self.confidence_level))


@dataclass(frozen=True)
class McEstimate:
    value: float
    half_width: float
    n: int
    seed: int

    @property
    def low(self) -> float:
        return self.value - self.half_width

    @property
    def high(self) -> float:
        return self.value + self.half_width

    def contains(self, x: float) -> bool:
        return self.low <= x <= self.high


def _estimate(successes: int, n: int, config: McConfig) -> McEstimate:
    p = successes / n
    return McEstimate(p, config.z * math.sqrt(p * (1.0 - p) / n), n, config.seed)


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(chunk,))))


@dataclass
class Field:
    """One chunk of typical-user draws.

    ``signal[i, l]`` is g*r0^-alpha and ``interference[i, l]`` the aggregate
    interference for sample i on miniblock l.  Columns share the geometry and
    have independent fading.
    """

    signal: np.ndarray
    interference: np.ndarray

    @property
    def sirbar(self) -> np.ndarray:
        return self.signal / self.interference


def sample_field(params: NetworkParams, config: McConfig, rng: np.random.Generator, n: int, links: int = 1) -> Field:
    alpha, lam = params.alpha, config.bs_density
    r0_sq = rng.standard_exponential(n) / (math.pi * lam)
    r_max = config.truncation_radius_factor * np.maximum(config.mean_nearest_distance, np.sqrt(r0_sq))
    r_max_sq = r_max * r_max
    counts = rng.poisson(math.pi * lam * (r_max_sq - r0_sq))
    owner = np.repeat(np.arange(n), counts)
    # uniform in area on the annulus <=> r^2 uniform on (r0^2, R_max^2)
    r_sq = r0_sq[owner] + rng.random(owner.size) * (r_max_sq - r0_sq)[owner]
    path = r_sq ** (-0.5 * alpha)
    tail = 2.0 * math.pi * lam * r_max ** (2.0 - alpha) / (alpha - 2.0) if config.tail_compensation else 0.0
    interference = np.empty((n, links))
    for k in range(links):
        interference[:, k] = np.bincount(owner, rng.standard_exponential(owner.size) * path, minlength=n) + tail
    signal = rng.standard_exponential((n, links)) * (r0_sq ** (-0.5 * alpha))[:, None]
    return Field(signal, interference)


def sample_sirbar(params: NetworkParams, config: McConfig, rng: np.random.Generator, size: int | None = None):
    """Draw SIRbar samples; one float when ``size`` is None."""
    x = sample_field(params, config, rng, 1 if size is None else size).sirbar[:, 0]
    return float(x[0]) if size is None else x


def _chunks(config: McConfig):
    full, rest = divmod(config.n_samples, config.chunk_size)
    sizes = [config.chunk_size] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def _reduce(config: McConfig, fn):
    """Sum integer count vectors fn(chunk_index, size) over all chunks."""
    jobs = _chunks(config)
    if config.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            parts = list(pool.map(lambda job: fn(*job), jobs))
    else:
        parts = [fn(*job) for job in jobs]
    return np.sum(parts, axis=0, dtype=np.int64)


def estimate_coverage(params: NetworkParams, config: McConfig, thresholds) -> list[McEstimate]:
    """Pr(SIRbar >= t) for every t, all from the same samples."""
    ts = np.atleast_1d(np.asarray(thresholds, dtype=float))

    def count(chunk, size):
        x = sample_field(params, config, chunk_rng(config.seed, chunk), size).sirbar[:, 0]
        return (x[:, None] >= ts[None, :]).sum(axis=0)

    if ts.size == 0:
        return []
    totals = _reduce(config, count)
    return [_estimate(int(c), config.n_samples, config) for c in totals]


def estimate_oma_success(params: NetworkParams, config: McConfig, t1: float, t2: float) -> tuple[McEstimate, McEstimate]:
    """Per-link OMA decoding success: shared geometry, independent fading per link."""

    def count(chunk, size):
        f = sample_field(params, config, chunk_rng(config.seed, chunk), size, links=2)
        sir = f.sirbar
        return np.array([(sir[:, 0] >= t1).sum(), (sir[:, 1] >= t2).sum()])

    c1, c2 = _reduce(config, count)
    return _estimate(int(c1), config.n_samples, config), _estimate(int(c2), config.n_samples, config)


def oma_success_correlation(params: NetworkParams, config: McConfig, t1: float, t2: float,
                            shared_geometry: bool = True) -> float:
    """Sample correlation of the two OMA success indicators.

    With ``shared_geometry=False`` each link gets its own independent
    geometry, which is the zero-correlation baseline.
    """

    def count(chunk, size):
        rng = chunk_rng(config.seed, chunk)
        if shared_geometry:
            sir = sample_field(params, config, rng, size, links=2).sirbar
            s1, s2 = sir[:, 0] >= t1, sir[:, 1] >= t2
        else:
            s1 = sample_field(params, config, rng, size).sirbar[:, 0] >= t1
            s2 = sample_field(params, config, rng, size).sirbar[:, 0] >= t2
        return np.array([s1.sum(), s2.sum(), (s1 & s2).sum()])

    a, b, ab = (int(v) for v in _reduce(config, count))
    n = config.n_samples
    p1, p2, p12 = a / n, b / n, ab / n
    denom = math.sqrt(p1 * (1 - p1) * p2 * (1 - p2))
    return 0.0 if denom == 0 else (p12 - p1 * p2) / denom


class SicOrder(str, Enum):
    RELIABILITY = "reliability"  # Link 1 first, always
    POWER = "power"  # stronger layer first


def _noma_counts(f: Field, split: NomaPowerSplit, t1: float, t2: float, order: SicOrder):
    s, i = f.signal[:, 0], f.interference[:, 0]
    b1, b2 = split.beta1, split.beta2
    link1_first = order is SicOrder.RELIABILITY or b1 >= b2
    if link1_first:
        ok1 = b1 * s >= t1 * (b2 * s + i)
        ok2 = ok1 & (b2 * s >= t2 * i)
    else:
        ok2 = b2 * s >= t2 * (b1 * s + i)
        ok1 = ok2 & (b1 * s >= t1 * i)
    return np.array([ok1.sum(), ok2.sum()])


def estimate_noma_success(params: NetworkParams, config: McConfig, split: NomaPowerSplit, t1: float, t2: float,
                          order: SicOrder | str = SicOrder.RELIABILITY) -> tuple[McEstimate, McEstimate]:
    """NOMA decoding success (p1, p2) with one fading draw shared by both layers.

    The layer decoded second only counts as a success when the first one was
    decoded (no decoding after an SIC failure).
    """
    order = SicOrder(order)
    if order is SicOrder.RELIABILITY and t1 >= split.ceiling:
        raise SlicingError(f"t1={t1} at or above the decodability ceiling beta1/beta2={split.ceiling}")

    def count(chunk, size):
        return _noma_counts(sample_field(params, config, chunk_rng(config.seed, chunk), size), split, t1, t2, order)

    c1, c2 = _reduce(config, count)
    return _estimate(int(c1), config.n_samples, config), _estimate(int(c2), config.n_samples, config)


def estimate_noma_grid(params: NetworkParams, config: McConfig, split: NomaPowerSplit, t1s, t2s,
                       order: SicOrder | str = SicOrder.RELIABILITY) -> tuple[list[McEstimate], list[list[McEstimate]]]:
    """Like :func:`estimate_noma_success` for every (t1, t2) pair, on one sample set.

    Returns (p1 per t1, p2 per [t1][t2]).
    """
    order = SicOrder(order)
    t1s = [float(t) for t in t1s]
    t2s = [float(t) for t in t2s]
    if order is SicOrder.RELIABILITY and any(t >= split.ceiling for t in t1s):
        raise SlicingError(f"a t1 value is at or above the decodability ceiling beta1/beta2={split.ceiling}")

    def count(chunk, size):
        f = sample_field(params, config, chunk_rng(config.seed, chunk), size)
        out = np.zeros((len(t1s), 1 + len(t2s)), dtype=np.int64)
        for i, t1 in enumerate(t1s):
            for j, t2 in enumerate(t2s):
                c1, c2 = _noma_counts(f, split, t1, t2, order)
                out[i, 0] = c1
                out[i, 1 + j] = c2
        return out

    totals = _reduce(config, count)
    n = config.n_samples
    p1 = [_estimate(int(totals[i, 0]), n, config) for i in range(len(t1s))]
    p2 = [[_estimate(int(totals[i, 1 + j]), n, config) for j in range(len(t2s))] for i in range(len(t1s))]
    return p1, p2


def estimate_rates(params: NetworkParams, config: McConfig, design) -> tuple[McEstimate, McEstimate]:
    """Empirical outage-capacity rates: fraction * success * log(1 + t*)."""
    from .optimizer import Scheme

    t1, t2 = design.t1_star, design.t2_star
    if design.scheme is Scheme.OMA:
        split: OmaBandwidthSplit = design.split
        p1, p2 = estimate_oma_success(params, config, t1, t2)
        f1, f2 = split.w1, split.w2
    else:
        p1, p2 = estimate_noma_success(params, config, design.split, t1, t2, SicOrder.RELIABILITY)
        f1 = f2 = 1.0
    out = []
    for p, frac, t in ((p1, f1, t1), (p2, f2, t2)):
        scale = frac * math.log1p(t)
        out.append(McEstimate(p.value * scale, p.half_width * scale, p.n, p.seed))
    return out[0], out[1]

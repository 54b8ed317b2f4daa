import math

import numpy as np
import pytest

from vrslicing import analytic
from vrslicing import montecarlo as mc
from vrslicing.analytic import NetworkParams, NomaPowerSplit, OmaBandwidthSplit
from vrslicing.errors import SlicingError
from vrslicing.montecarlo import McConfig, SicOrder
from vrslicing.optimizer import ProblemP1, Scheme, SliceDesign, solve_p1
from vrslicing.perception import JndTargets

P = NetworkParams()
CFG = McConfig(n_samples=200_000, seed=11)
SMALL = McConfig(n_samples=40_000, seed=5, chunk_size=4096)


def exact(t):
    return float(analytic.coverage_exact(P, t))


def test_config_validation():
    with pytest.raises(SlicingError):
        McConfig(truncation_radius_factor=5.0)
    with pytest.raises(SlicingError):
        McConfig(n_samples=0)
    with pytest.raises(SlicingError):
        McConfig(seed=-1)
    with pytest.raises(SlicingError):
        McConfig(confidence_level=1.0)
    assert McConfig().z == pytest.approx(1.959964, abs=1e-6)


def test_coverage_at_unit_threshold():
    est = mc.estimate_coverage(P, CFG, [1.0])[0]
    assert est.contains(1 / (1 + math.pi / 4))
    assert est.half_width < 3e-3 and est.n == CFG.n_samples and est.seed == CFG.seed


def test_coverage_within_sandwich():
    ts = [0.1, 1.0, 10.0]
    up = P.with_c_mode("upper")
    for t, est in zip(ts, mc.estimate_coverage(P, CFG, ts)):
        assert analytic.coverage_bound(up, t) - est.half_width <= est.value
        assert est.value <= analytic.coverage_bound(P, t) + est.half_width


@pytest.mark.parametrize("alpha", [3.0, 5.0])
def test_coverage_other_exponents(alpha):
    p = NetworkParams(alpha)
    ts = [0.3, 3.0]
    for t, est in zip(ts, mc.estimate_coverage(p, CFG, ts)):
        assert est.contains(float(analytic.coverage_exact(p, t)))


def test_seed_determinism_and_thread_invariance():
    a = mc.estimate_coverage(P, SMALL, [0.5, 2.0])
    b = mc.estimate_coverage(P, SMALL, [0.5, 2.0])
    c = mc.estimate_coverage(P, McConfig(n_samples=40_000, seed=5, chunk_size=4096, workers=4), [0.5, 2.0])
    assert a == b == c
    other = mc.estimate_coverage(P, McConfig(n_samples=40_000, seed=6, chunk_size=4096), [0.5, 2.0])
    assert other != a


def test_sample_sirbar_stream_is_reproducible():
    x = mc.sample_sirbar(P, SMALL, mc.chunk_rng(3, 0), 10)
    y = mc.sample_sirbar(P, SMALL, mc.chunk_rng(3, 0), 10)
    assert np.array_equal(x, y) and np.all(x > 0)
    assert isinstance(mc.sample_sirbar(P, SMALL, mc.chunk_rng(3, 0)), float)


def test_density_invariance():
    ts = [0.2, 2.0]
    a = mc.estimate_coverage(P, CFG, ts)
    b = mc.estimate_coverage(P, McConfig(n_samples=CFG.n_samples, seed=12, bs_density=10.0), ts)
    for x, y in zip(a, b):
        assert abs(x.value - y.value) <= math.hypot(x.half_width, y.half_width)


def test_truncation_insensitivity():
    ts = [0.2, 1.0, 5.0]
    base = mc.estimate_coverage(P, CFG, ts)
    wide = mc.estimate_coverage(P, McConfig(n_samples=CFG.n_samples, seed=CFG.seed, truncation_radius_factor=20.0), ts)
    for x, y in zip(base, wide):
        assert abs(x.value - y.value) < x.half_width


def test_tail_compensation_removes_truncation_bias():
    # without the mean far-field term the estimate is visibly biased upwards
    n = 400_000
    on = mc.estimate_coverage(P, McConfig(n_samples=n, seed=2), [1.0])[0]
    off = mc.estimate_coverage(P, McConfig(n_samples=n, seed=2, tail_compensation=False), [1.0])[0]
    truth = exact(1.0)
    assert abs(on.value - truth) < abs(off.value - truth)


# --------------------------------------------------------------------------
# OMA


def test_oma_success_matches_exact_law_at_G():
    t = analytic.inverse_threshold_G(P, 0.9)
    e1, e2 = mc.estimate_oma_success(P, CFG, t, t)
    assert e1.contains(exact(t)) and e2.contains(exact(t))
    # the bound inverse overstates success a little: 0.9 is not the truth here
    assert exact(t) < 0.9


def test_oma_success_vanishing_threshold():
    e1, _ = mc.estimate_oma_success(P, SMALL, 1e-12, 1.0)
    assert e1.value == 1.0


def test_oma_correlation_comes_from_geometry_only():
    cfg = McConfig(n_samples=100_000, seed=4)
    shared = mc.oma_success_correlation(P, cfg, 1.0, 1.0)
    indep = mc.oma_success_correlation(P, cfg, 1.0, 1.0, shared_geometry=False)
    noise = 4 / math.sqrt(cfg.n_samples)
    assert abs(indep) < noise
    assert shared > 0.05 > noise


# --------------------------------------------------------------------------
# NOMA


def test_noma_without_superposition_is_plain_coverage():
    split = NomaPowerSplit.from_beta2(0.0)
    p1, _ = mc.estimate_noma_success(P, SMALL, split, 0.7, 0.0)
    cov = mc.estimate_coverage(P, SMALL, [0.7])[0]
    assert p1.value == pytest.approx(cov.value, abs=2 / SMALL.n_samples)


def test_noma_joint_matches_exact_form():
    split = NomaPowerSplit.from_beta2(0.8)
    t1s = [0.02, 0.1]
    t2s = [0.05, 0.4, 1.5]
    p1s, p2s = mc.estimate_noma_grid(P, CFG, split, t1s, t2s)
    for i, t1 in enumerate(t1s):
        assert p1s[i].contains(analytic.noma_p1(P, split, t1, "exact"))
        for j, t2 in enumerate(t2s):
            assert p2s[i][j].contains(analytic.noma_p2(P, split, t1, t2, analytic.P2Mode.EXACT, "exact"))


def test_noma_grid_agrees_with_single_point():
    split = NomaPowerSplit.from_beta2(0.8)
    p1s, p2s = mc.estimate_noma_grid(P, SMALL, split, [0.05], [0.3])
    p1, p2 = mc.estimate_noma_success(P, SMALL, split, 0.05, 0.3)
    assert p1s[0] == p1 and p2s[0][0] == p2


def test_noma_ceiling_rejected():
    split = NomaPowerSplit.from_beta2(0.8)
    with pytest.raises(SlicingError):
        mc.estimate_noma_success(P, SMALL, split, split.ceiling, 0.1)


def test_power_order_decodes_stronger_layer_first():
    split = NomaPowerSplit.from_beta2(0.8)
    p1, p2 = mc.estimate_noma_success(P, SMALL, split, 0.05, 0.3, SicOrder.POWER)
    # Link 1 is decoded second, so it can only succeed where Link 2 did
    assert p1.value <= p2.value
    r1, r2 = mc.estimate_noma_success(P, SMALL, split, 0.05, 0.3, SicOrder.RELIABILITY)
    assert r2.value <= r1.value


# --------------------------------------------------------------------------
# rates


@pytest.mark.parametrize("scheme", list(Scheme))
def test_rates_of_default_designs(scheme):
    pr = ProblemP1(P, 1e-5, JndTargets(1e-2, 0.9))
    design = solve_p1(pr, scheme).design
    r1, r2 = mc.estimate_rates(P, CFG, design)
    t1, t2 = design.t1_star, design.t2_star
    if scheme is Scheme.OMA:
        ref1 = design.split.w1 * exact(t1) * math.log1p(t1)
        ref2 = design.split.w2 * exact(t2) * math.log1p(t2)
        assert r2.value == pytest.approx(0.0997, rel=5e-3)
    else:
        ref1 = analytic.noma_p1(P, design.split, t1, "exact") * math.log1p(t1)
        ref2 = analytic.noma_p2(P, design.split, t1, t2, analytic.P2Mode.EXACT, "exact") * math.log1p(t2)
        assert r2.value == pytest.approx(0.0898, rel=1e-2)
    assert r1.contains(ref1) and r2.contains(ref2)


def test_zero_bandwidth_gives_zero_rate():
    design = SliceDesign(Scheme.OMA, OmaBandwidthSplit.from_w1(1.0), 0.01, 0.1, 0.99, 0.9)
    _, r2 = mc.estimate_rates(P, SMALL, design)
    assert r2.value == 0.0 and r2.half_width == 0.0

import math

import numpy as np
import pytest

from rsma_covert.analytic import max_covert_snr, symmetric_ect
from rsma_covert.config import baseline_config
from rsma_covert.optimizer import AoConfig, GaConfig, ao_ga, ga_maximize_1d, grid_search

FAST = GaConfig(population=30, generations=40)


def test_ga_finds_interior_peak():
    x, f = ga_maximize_1d(lambda x: -(x - 0.3) ** 2, 0.0, 1.0, FAST)
    assert x == pytest.approx(0.3, abs=0.01)
    assert f <= 0.0


def test_ga_finds_boundary_of_monotone_objective():
    x, _ = ga_maximize_1d(lambda x: x, 2.0, 7.0, FAST)
    assert x == pytest.approx(7.0, rel=0.005)


def test_ga_history_is_monotone():
    hist = []
    ga_maximize_1d(lambda x: math.sin(5 * x) + x, 0.0, 3.0, FAST, history=hist)
    assert len(hist) == FAST.generations
    assert all(b >= a for a, b in zip(hist, hist[1:]))


def test_warm_start_is_never_lost():
    bumpy = lambda x: -abs(x - 0.777) if abs(x - 0.777) < 1e-6 else -1.0
    x, f = ga_maximize_1d(bumpy, 0.0, 1.0, GaConfig(population=4, generations=3), warm_start=0.777)
    assert f >= bumpy(0.777)


def test_ga_skips_non_finite_values():
    def f(x):
        if x < 0.5:
            return math.nan
        return -(x - 0.8) ** 2
    x, _ = ga_maximize_1d(f, 0.0, 1.0, FAST)
    assert x == pytest.approx(0.8, abs=0.01)


def test_ga_rejects_all_non_finite():
    with pytest.raises(ValueError):
        ga_maximize_1d(lambda x: math.inf, 0.0, 1.0, FAST)
    with pytest.raises(ValueError):
        ga_maximize_1d(lambda x: x, 1.0, 1.0, FAST)


def test_ga_is_reproducible():
    f = lambda x: math.cos(13 * x) * x
    assert ga_maximize_1d(f, 0, 2, FAST) == ga_maximize_1d(f, 0, 2, FAST)


@pytest.mark.parametrize("kwargs", [
    dict(population=3), dict(elitism=0), dict(elitism=50), dict(generations=0),
    dict(mutation_std=0.0), dict(crossover_rate=1.5), dict(tournament=0),
])
def test_ga_config_validation(kwargs):
    with pytest.raises(ValueError):
        GaConfig(**kwargs)


def test_ao_config_validation():
    with pytest.raises(ValueError):
        AoConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        AoConfig(max_iterations=0)


def test_ga_matches_dense_grid_on_snr_subproblem(cfg):
    hi = max_covert_snr(cfg).value
    obj = lambda p: symmetric_ect(cfg, 0.5, p)
    _, f = ga_maximize_1d(obj, 1e-6, hi)
    grid = max(obj(p) for p in np.linspace(1e-6, hi, 500))
    assert f >= grid - 1e-6


def test_ao_ga_trace_and_reproducibility(cfg):
    a = ao_ga(cfg, FAST)
    b = ao_ga(cfg, FAST)
    assert a == b
    taus = [t for _, _, t in a.trace]
    assert all(y >= x for x, y in zip(taus, taus[1:]))
    assert 1 <= a.iterations <= 10
    assert a.best_snr.value <= max_covert_snr(cfg).value
    assert 0.0 <= a.best_common < 1.0


def test_tight_covertness_pins_snr_at_bound():
    cfg = baseline_config(covert_tolerance=0.001)
    res = ao_ga(cfg, FAST)
    assert res.best_snr.value == pytest.approx(max_covert_snr(cfg).value, rel=1e-3)


def test_custom_evaluator():
    res = ao_ga(baseline_config(), FAST, evaluator=lambda c, p: -(c - 0.25) ** 2 - (p - 10) ** 2)
    assert res.best_common == pytest.approx(0.25, abs=0.01)
    assert res.best_snr.value == pytest.approx(10.0, abs=0.2)


def test_grid_search_small():
    c, p, t = grid_search(lambda c, p: c * p, 4.0, 5, 5)
    assert (c, p) == pytest.approx((1 - 1e-6, 4.0))
    assert t == pytest.approx(4.0 * (1 - 1e-6))


@pytest.mark.slow
def test_ao_ga_dominates_grid(cfg):
    res = ao_ga(cfg)
    *_, t = grid_search(lambda c, p: symmetric_ect(cfg, c, p), max_covert_snr(cfg).value)
    assert res.best_ect >= t - 1e-4

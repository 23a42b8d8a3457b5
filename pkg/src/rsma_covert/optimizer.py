"""Real-coded genetic algorithm and the alternating (P, a_c) optimization."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analytic import max_covert_snr, symmetric_ect
from .config import SystemConfig, TransmitSnr

log = logging.getLogger(__name__)

SNR_FLOOR = 1e-6
COMMON_CEILING = 1.0 - 1e-6


@dataclass(frozen=True)
class GaConfig:
    population: int = 50
    elitism: int = 2
    generations: int = 100
    mutation_std: float = 0.05
    crossover_rate: float = 0.9
    mutation_rate: float = 1.0
    tournament: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be >= 4")
        if not 1 <= self.elitism < self.population:
            raise ValueError("elitism must satisfy 1 <= elitism < population")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not self.mutation_std > 0:
            raise ValueError("mutation_std must be > 0")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if self.tournament < 1:
            raise ValueError("tournament must be >= 1")


@dataclass(frozen=True)
class AoConfig:
    tolerance: float = 1e-9
    max_iterations: int = 10

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class OptimizationResult:
    best_snr: TransmitSnr
    best_common: float
    best_ect: float
    trace: tuple[tuple[float, float, float], ...] = field(default=())

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1


def _fitness(objective, x: float) -> float:
    try:
        f = float(objective(x))
    except (ArithmeticError, ValueError) as exc:
        log.warning("objective failed at x=%r: %s", x, exc)
        return -math.inf
    if not math.isfinite(f):
        log.warning("objective returned %r at x=%r", f, x)
        return -math.inf
    return f


def _tournament(rng: np.random.Generator, fitness: np.ndarray, size: int) -> int:
    picks = rng.integers(0, fitness.size, size)
    return int(picks[np.argmax(fitness[picks])])


def ga_maximize_1d(
    objective: Callable[[float], float],
    lower: float,
    upper: float,
    ga: GaConfig = GaConfig(),
    warm_start: float | None = None,
    history: list | None = None,
) -> tuple[float, float]:
    """Maximize a scalar function on [lower, upper]; returns (x*, f*).

    Elitist GA with tournament selection, arithmetic crossover and clamped
    Gaussian mutation. Every child uses its own generator seeded from
    (seed, generation, index). A ``warm_start`` point joins the initial
    population, so the result is never worse than it. Pass a list as
    ``history`` to collect the best fitness of every generation.
    """
    if not lower < upper:
        raise ValueError(f"empty interval [{lower}, {upper}]")
    width = upper - lower
    rng0 = np.random.default_rng((ga.seed, 0, 0))
    pop = lower + width * rng0.random(ga.population)
    if warm_start is not None:
        pop[0] = min(max(warm_start, lower), upper)
    fit = np.array([_fitness(objective, x) for x in pop])
    if not np.isfinite(fit).any():
        raise ValueError("objective is non-finite on the whole initial population")

    for gen in range(1, ga.generations + 1):
        order = np.argsort(-fit, kind="stable")
        new_pop = np.empty_like(pop)
        new_fit = np.empty_like(fit)
        new_pop[: ga.elitism] = pop[order[: ga.elitism]]
        new_fit[: ga.elitism] = fit[order[: ga.elitism]]
        for i in range(ga.elitism, ga.population):
            rng = np.random.default_rng((ga.seed, gen, i))
            a = pop[_tournament(rng, fit, ga.tournament)]
            b = pop[_tournament(rng, fit, ga.tournament)]
            child = a + rng.random() * (b - a) if rng.random() < ga.crossover_rate else a
            if rng.random() < ga.mutation_rate:
                child += rng.normal(0.0, ga.mutation_std * width)
            child = min(max(child, lower), upper)
            new_pop[i] = child
            new_fit[i] = _fitness(objective, child)
        pop, fit = new_pop, new_fit
        if history is not None:
            history.append(float(fit.max()))

    best = int(np.argmax(fit))
    return float(pop[best]), float(fit[best])


def ao_ga(
    cfg: SystemConfig,
    ga: GaConfig = GaConfig(),
    ao: AoConfig = AoConfig(),
    evaluator: Callable[[float, float], float] | None = None,
) -> OptimizationResult:
    """Alternate GA searches over the transmit SNR and the common power share.

    Each round solves the SNR subproblem on [1e-6, varsigma/nu] with a_c
    fixed, then the a_c subproblem on [0, 1 - 1e-6] with the SNR fixed.
    Both GAs are warm-started from the incumbent, so the ECT trace never
    decreases. Stops when successive ECTs differ by less than the tolerance
    or after ``max_iterations`` rounds.
    """
    if evaluator is None:
        def evaluator(common, snr):
            return symmetric_ect(cfg, common, snr)

    snr_max = max_covert_snr(cfg).value
    rng = np.random.default_rng((ga.seed, 1 << 20))
    common = float(rng.uniform(0.0, COMMON_CEILING))
    snr = float(rng.uniform(SNR_FLOOR, snr_max))
    tau = float(evaluator(common, snr))
    trace = [(common, snr, tau)]

    for n in range(ao.max_iterations):
        ga_p = GaConfig(**{**ga.__dict__, "seed": ga.seed * 1000 + 2 * n + 1})
        ga_c = GaConfig(**{**ga.__dict__, "seed": ga.seed * 1000 + 2 * n + 2})
        snr, _ = ga_maximize_1d(lambda p: evaluator(common, p), SNR_FLOOR, snr_max, ga_p, warm_start=snr)
        common, new_tau = ga_maximize_1d(lambda c: evaluator(c, snr), 0.0, COMMON_CEILING, ga_c, warm_start=common)
        trace.append((common, snr, new_tau))
        log.debug("AO round %d: a_c=%.6f P=%.4f tau=%.12g", n + 1, common, snr, new_tau)
        converged = abs(new_tau - tau) < ao.tolerance
        tau = new_tau
        if converged:
            break

    return OptimizationResult(TransmitSnr(snr), common, tau, tuple(trace))


def grid_search(
    evaluator: Callable[[float, float], float],
    snr_max: float,
    n_snr: int = 200,
    n_common: int = 200,
) -> tuple[float, float, float]:
    """Best (a_c, P, tau) over a rectangular grid of the feasible box."""
    best = (math.nan, math.nan, -math.inf)
    for P in np.linspace(SNR_FLOOR, snr_max, n_snr):
        for c in np.linspace(0.0, COMMON_CEILING, n_common):
            t = evaluator(float(c), float(P))
            if t > best[2]:
                best = (float(c), float(P), float(t))
    return best

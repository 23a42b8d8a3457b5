"""Monte Carlo simulator for the RSMA downlink and the warden field.

This is the independent side of every closed-form check: SINRs come straight
from the channel vectors and precoders with no Gamma approximations.

Randomness is split into fixed-size chunks, each with its own
``SeedSequence`` child. Results depend only on (seed, config, n_draws),
never on the number of worker threads.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import PowerAllocation, SystemConfig, TransmitSnr

log = logging.getLogger(__name__)

CHUNK = 1 << 15
DEFAULT_R_MAX = 2000.0
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class McEstimate:
    value: float
    half_width: float
    samples: int

    @classmethod
    def from_samples(cls, x: np.ndarray) -> "McEstimate":
        x = np.asarray(x, dtype=float)
        n = x.size
        std = float(np.std(x, ddof=1)) if n > 1 else 0.0
        return cls(float(np.mean(x)), 1.96 * std / math.sqrt(n), n)

    @classmethod
    def from_moments(cls, total: float, total_sq: float, n: int) -> "McEstimate":
        mean = total / n
        var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
        return cls(mean, 1.96 * math.sqrt(var / n), n)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries."""
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * math.sqrt(0.5)


def _chunk_sizes(n: int, chunk: int = CHUNK) -> list[int]:
    sizes = [chunk] * (n // chunk)
    if n % chunk:
        sizes.append(n % chunk)
    return sizes


def _chunk_rngs(seed: int, n: int, stream: int = 0, chunk: int = CHUNK):
    ss = np.random.SeedSequence(seed, spawn_key=(stream,))
    sizes = _chunk_sizes(n, chunk)
    return list(zip(sizes, (np.random.default_rng(s) for s in ss.spawn(len(sizes)))))


def _map_chunks(fn, jobs, threads: int = 1):
    if threads <= 1 or len(jobs) < 2:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


# ---------------------------------------------------------------------------
# Channel realizations


@dataclass(frozen=True)
class ChannelRealization:
    """One fading draw. Arrays are (M, K): column k belongs to user k."""

    estimated: np.ndarray
    errors: np.ndarray
    composite: np.ndarray
    private_precoders: np.ndarray
    common_precoder: np.ndarray


def _zf_precoders(est: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalised pseudo-inverse columns for a batch of (..., M, K) channels.

    Returns the precoders and the condition number of each channel matrix.
    """
    s = np.linalg.svd(est, compute_uv=False)
    cond = s[..., 0] / s[..., -1]
    gram = np.swapaxes(est.conj(), -1, -2) @ est
    w = est @ np.linalg.inv(gram)
    w /= np.linalg.norm(w, axis=-2, keepdims=True)
    return w, cond


def _draw_batch(rng: np.random.Generator, n: int, M: int, K: int, eps: float):
    """Draw ``n`` realizations; rank-deficient ones are redrawn."""
    est = _complex_normal(rng, (n, M, K))
    w, cond = _zf_precoders(est)
    bad = ~(cond <= MAX_CONDITION)
    redraws = 0
    while bad.any():
        idx = np.flatnonzero(bad)
        redraws += idx.size
        est[idx] = _complex_normal(rng, (idx.size, M, K))
        w[idx], cond[idx] = _zf_precoders(est[idx])
        bad = ~(cond <= MAX_CONDITION)
    if redraws:
        log.info("redrew %d ill-conditioned channel matrices", redraws)
    err = _complex_normal(rng, (n, M, K))
    wc = _complex_normal(rng, (n, M))
    wc /= np.linalg.norm(wc, axis=-1, keepdims=True)
    composite = eps * est + math.sqrt(1.0 - eps * eps) * err
    return est, err, composite, w, wc


def sample_realization(cfg: SystemConfig, alloc: PowerAllocation | None = None, rng_seed: int = 0) -> ChannelRealization:
    """Single realization; ``alloc`` is accepted for symmetry but unused."""
    rng = np.random.default_rng(rng_seed)
    est, err, comp, w, wc = _draw_batch(rng, 1, cfg.antennas, cfg.users, cfg.csit_quality)
    return ChannelRealization(est[0], err[0], comp[0], w[0], wc[0])


def _gains(composite: np.ndarray, w: np.ndarray, wc: np.ndarray):
    """|g_k^H w_j|^2 as (..., K, K) indexed [k, j] and |g_k^H w_c|^2 as (..., K)."""
    gh = np.swapaxes(composite.conj(), -1, -2)
    private = np.abs(gh @ w) ** 2
    common = np.abs(gh @ wc[..., None])[..., 0] ** 2
    return private, common


def _sinrs_from_gains(private, common, cfg: SystemConfig, alloc: PowerAllocation, snr: float):
    P = float(snr)
    beta = cfg.path_gains
    a = alloc.as_array
    weighted = private * a  # [.., k, j] * a_j
    total = weighted.sum(axis=-1)
    own = np.diagonal(weighted, axis1=-2, axis2=-1)
    gc = P * alloc.common * beta * common / (P * beta * total + 1.0)
    gp = P * beta * own / (P * beta * (total - own) + 1.0)
    return gc, gp


def sample_user_sinrs(real: ChannelRealization, cfg: SystemConfig, alloc: PowerAllocation, snr):
    """Exact common and private SINRs of every user for one realization."""
    private, common = _gains(real.composite, real.private_precoders, real.common_precoder)
    return _sinrs_from_gains(private, common, cfg, alloc, snr)


def sample_sinrs(
    cfg: SystemConfig,
    alloc: PowerAllocation,
    snr,
    n_draws: int,
    seed: int = 0,
    threads: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """``n_draws`` i.i.d. SINR pairs, each array shaped (n_draws, K)."""

    def run(n, rng):
        _, _, comp, w, wc = _draw_batch(rng, n, cfg.antennas, cfg.users, cfg.csit_quality)
        return _sinrs_from_gains(*_gains(comp, w, wc), cfg, alloc, snr)

    parts = _map_chunks(run, _chunk_rngs(seed, n_draws), threads)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def sample_channel_gains(cfg: SystemConfig, n_draws: int, seed: int = 0, threads: int = 1):
    """Normalized gain statistics (|g_k^H w_j|^2, |g_k^H w_c|^2, |ghat_k^H w_k|^2)."""

    def run(n, rng):
        est, _, comp, w, wc = _draw_batch(rng, n, cfg.antennas, cfg.users, cfg.csit_quality)
        private, common = _gains(comp, w, wc)
        own_est = np.abs(np.einsum("nmk,nmk->nk", est.conj(), w)) ** 2
        return private, common, own_est

    parts = _map_chunks(run, _chunk_rngs(seed, n_draws), threads)
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(3))


def empirical_cdf(samples, x: float) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("empirical_cdf needs at least one sample")
    return float(np.count_nonzero(samples <= x)) / samples.size


def ks_distance(samples, cdf) -> float:
    """Kolmogorov distance between the sample's empirical CDF and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


# ---------------------------------------------------------------------------
# Outage and throughput


@dataclass(frozen=True)
class OutageEctEstimate:
    snr: float
    outage: tuple[McEstimate, ...]
    throughput: tuple[McEstimate, ...]
    ect: McEstimate


def empirical_outage_and_ect(
    cfg: SystemConfig,
    alloc: PowerAllocation,
    snr,
    n_draws: int,
    seed: int = 0,
    threads: int = 1,
):
    """Joint outage per user and system ECT by simulation.

    Outage is the exact event {gamma_c < th_c or gamma_p < th_p}. Without a
    common stream (a_c = 0) only the private stream counts. ``snr`` may be
    a single value or a sequence; the same channel draws serve every SNR,
    and a sequence input returns a list of estimates.
    """
    if n_draws < 2:
        raise ValueError("need at least two draws")
    scalar = np.isscalar(snr) or isinstance(snr, TransmitSnr)
    snrs = [float(snr)] if scalar else [float(s) for s in snr]
    K = cfg.users
    th_c = np.asarray(cfg.common_thresholds)
    th_p = np.asarray(cfg.private_thresholds)
    rc = np.log2(1.0 + th_c)
    rp = np.log2(1.0 + th_p)
    has_common = alloc.common > 0

    def run(n, rng):
        _, _, comp, w, wc = _draw_batch(rng, n, cfg.antennas, K, cfg.csit_quality)
        private, common = _gains(comp, w, wc)
        acc = np.zeros((len(snrs), 3 * K + 2))
        for i, P in enumerate(snrs):
            gc, gp = _sinrs_from_gains(private, common, cfg, alloc, P)
            ok_c = gc >= th_c if has_common else np.zeros_like(gc, dtype=bool)
            ok_p = gp >= th_p
            ok_joint = (ok_c & ok_p) if has_common else ok_p
            tau_k = rc * ok_c + rp * ok_joint
            tau = tau_k.sum(axis=1)
            acc[i, :K] = n - ok_joint.sum(axis=0)
            acc[i, K : 2 * K] = tau_k.sum(axis=0)
            acc[i, 2 * K : 3 * K] = (tau_k**2).sum(axis=0)
            acc[i, 3 * K] = tau.sum()
            acc[i, 3 * K + 1] = (tau**2).sum()
        return acc

    acc = np.zeros((len(snrs), 3 * K + 2))
    for part in _map_chunks(run, _chunk_rngs(seed, n_draws), threads):
        acc += part

    out = []
    for i, P in enumerate(snrs):
        outage = tuple(McEstimate.from_moments(c, c, n_draws) for c in acc[i, :K])
        thr = tuple(
            McEstimate.from_moments(acc[i, K + k], acc[i, 2 * K + k], n_draws) for k in range(K)
        )
        ect = McEstimate.from_moments(acc[i, 3 * K], acc[i, 3 * K + 1], n_draws)
        out.append(OutageEctEstimate(P, outage, thr, ect))
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# Wardens


@dataclass(frozen=True)
class WardenField:
    """Warden distances from the BS, all in the annulus [r_p, R_max]."""

    distances: np.ndarray
    angles: np.ndarray
    protected_radius: float
    outer_radius: float

    @property
    def count(self) -> int:
        return int(self.distances.size)

    def nearest_distance(self) -> float:
        return float(self.distances.min()) if self.distances.size else math.inf

    def path_gains(self, alpha: float) -> np.ndarray:
        return self.distances ** (-alpha)


def _annulus_area(cfg: SystemConfig, r_max: float) -> float:
    return math.pi * (r_max**2 - cfg.protected_radius**2)


def truncation_bias_bound(cfg: SystemConfig, r_max: float = DEFAULT_R_MAX) -> float:
    """Upper bound on the error in E[d_nearest^-alpha] from ignoring wardens past R_max.

    Truncation only matters when the annulus is empty, and then the true
    nearest warden sits beyond R_max, so the bias is at most
    R_max^-alpha * exp(-lambda pi (R_max^2 - r_p^2)).
    """
    return r_max ** (-cfg.path_loss_exponent) * math.exp(-cfg.warden_density * _annulus_area(cfg, r_max))


def sample_warden_field(cfg: SystemConfig, r_max: float = DEFAULT_R_MAX, seed: int = 0) -> WardenField:
    """Poisson number of wardens placed uniformly in the annulus."""
    rp = cfg.protected_radius
    if not r_max > rp:
        raise ValueError(f"outer radius {r_max} must exceed the protected radius {rp}")
    rng = np.random.default_rng(seed)
    n = rng.poisson(cfg.warden_density * _annulus_area(cfg, r_max))
    r = np.sqrt(rp * rp + rng.random(n) * (r_max * r_max - rp * rp))
    theta = rng.random(n) * 2 * math.pi
    return WardenField(r, theta, rp, r_max)


def sample_nearest_distances(
    cfg: SystemConfig,
    n_fields: int,
    r_max: float = DEFAULT_R_MAX,
    seed: int = 0,
    place_all: bool = False,
) -> np.ndarray:
    """Nearest-warden distance of ``n_fields`` independent fields.

    Equivalent to ``sample_warden_field(...).nearest_distance()``. By default
    the wardens are not placed individually: given N uniform points, the
    smallest squared radius is r_p^2 + (R^2 - r_p^2) * Beta(1, N). With
    ``place_all`` every warden is drawn and the minimum taken per field.
    Empty fields give inf.
    """
    rp = cfg.protected_radius
    if not r_max > rp:
        raise ValueError(f"outer radius {r_max} must exceed the protected radius {rp}")
    span = r_max * r_max - rp * rp
    mean_count = cfg.warden_density * _annulus_area(cfg, r_max)
    out = []
    if place_all:
        chunk = max(1, int(4e6 / max(mean_count, 1.0)))
        for size, rng in _chunk_rngs(seed, n_fields, stream=2, chunk=chunk):
            counts = rng.poisson(mean_count, size)
            frac = rng.random(int(counts.sum()))
            starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
            nonempty = counts > 0
            best = np.full(size, np.inf)
            if frac.size:
                best[nonempty] = np.minimum.reduceat(frac, starts[nonempty])
            out.append(np.sqrt(rp * rp + span * best))
        return np.concatenate(out)
    for size, rng in _chunk_rngs(seed, n_fields, stream=1, chunk=1 << 18):
        counts = rng.poisson(mean_count, size)
        u = rng.random(size)
        with np.errstate(divide="ignore"):
            frac = -np.expm1(np.log(u) / counts)
        r = np.sqrt(rp * rp + span * frac)
        out.append(np.where(counts > 0, r, np.inf))
    return np.concatenate(out)


def kl_divergence(m):
    """KL divergence between CN(0, (1+m) s^2) and CN(0, s^2): m - ln(1 + m)."""
    m = np.asarray(m, dtype=float)
    # series below 1e-3 avoids cancellation
    series = m * m * (0.5 - m * (1 / 3 - m * (0.25 - m / 5)))
    return np.where(np.abs(m) < 1e-3, series, m - np.log1p(m))


@dataclass(frozen=True)
class CovertnessStats:
    mean_half_inverse_distance_term: McEstimate
    mean_max_sqrt_kl: McEstimate
    mean_common_warden_gain: float
    mean_private_warden_gain: float


def _nearest_wardens(rng, n, count, cfg, r_max):
    """Distances of the ``count`` nearest wardens per field (inf past R_max).

    Squared radii of a planar PPP outside r_p map to a unit-rate Poisson
    process on the line via s = lambda pi (r^2 - r_p^2).
    """
    arrivals = np.cumsum(rng.exponential(size=(n, count)), axis=1)
    r2 = cfg.protected_radius**2 + arrivals / (cfg.warden_density * math.pi)
    r = np.sqrt(r2)
    return np.where(r <= r_max, r, np.inf)


def empirical_covertness_stats(
    cfg: SystemConfig,
    snr,
    alloc: PowerAllocation,
    n_fields: int = 1000,
    n_fading: int = 1000,
    seed: int = 0,
    r_max: float = DEFAULT_R_MAX,
    wardens_per_field: int = 32,
    threads: int = 1,
) -> CovertnessStats:
    """Simulated counterparts of the covertness analysis.

    ``mean_half_inverse_distance_term`` is (P/2) E[d_min^-alpha] over
    ``n_fields * n_fading`` nearest-warden draws and should match nu * P.
    ``mean_max_sqrt_kl`` averages max_v sqrt(KL_v / 2) with the exact KL
    over fields and fading; only the ``wardens_per_field`` nearest wardens
    enter the max, the rest are weaker by orders of magnitude.
    """
    P = float(snr)
    alpha = cfg.path_loss_exponent
    nearest = sample_nearest_distances(cfg, n_fields * n_fading, r_max, seed)
    inv = np.where(np.isfinite(nearest), nearest ** (-alpha), 0.0)
    half_term = McEstimate.from_samples(0.5 * P * inv)

    M, K = cfg.antennas, cfg.users
    a = alloc.as_array

    def run(n_fields_chunk, rng):
        n = n_fields_chunk * n_fading
        _, _, _, w, wc = _draw_batch(rng, n, M, K, cfg.csit_quality)
        d = _nearest_wardens(rng, n_fields_chunk, wardens_per_field, cfg, r_max)
        d = np.repeat(d, n_fading, axis=0)
        gv = _complex_normal(rng, (n, wardens_per_field, M))
        cg = np.abs(gv.conj() @ wc[..., None])[..., 0] ** 2
        pg = np.abs(gv.conj() @ w) ** 2
        load_c = alloc.common * cg
        load_p = pg @ a
        m = P * np.where(np.isfinite(d), d ** (-alpha), 0.0) * (load_c + load_p)
        score = np.sqrt(0.5 * kl_divergence(m)).max(axis=1)
        return score.sum(), (score**2).sum(), load_c[:, 0].sum(), load_p[:, 0].sum(), n

    fields_per_chunk = max(1, (1 << 14) // max(n_fading, 1))
    jobs = _chunk_rngs(seed, n_fields, stream=2, chunk=fields_per_chunk)
    parts = _map_chunks(run, jobs, threads)
    s, s2, lc, lp, n = (sum(p[i] for p in parts) for i in range(5))
    return CovertnessStats(half_term, McEstimate.from_moments(s, s2, n), lc / n, lp / n)


# ---------------------------------------------------------------------------
# NOMA baseline


def simplex_grid(users: int, step: float = 0.05) -> list[tuple[float, ...]]:
    """All allocations with entries on multiples of ``step`` summing to one."""
    units = int(round(1.0 / step))
    if not math.isclose(units * step, 1.0):
        raise ValueError(f"step {step} does not divide 1")
    grid = []
    for cuts in itertools.combinations(range(units + users - 1), users - 1):
        parts = np.diff((-1,) + cuts + (units + users - 1,)) - 1
        grid.append(tuple(float(p) / units for p in parts))
    return grid


def noma_required_gains(alloc: Sequence[float], thresholds: Sequence[float], snr: float) -> np.ndarray:
    """Smallest |h_k^H w|^2 at which user k decodes its own stream under SIC.

    Streams are decoded in descending power (ties by user index). Stage i
    succeeds iff P a_i q / (P q rest_i + 1) >= th_i, i.e.
    q >= th_i / (P (a_i - th_i rest_i)). Unreachable stages give inf;
    users with zero power get inf.
    """
    a = np.asarray(alloc, dtype=float)
    th = np.asarray(thresholds, dtype=float)
    order = sorted((k for k in range(a.size) if a[k] > 0), key=lambda k: (-a[k], k))
    need = np.full(a.size, np.inf)
    running = 0.0
    remaining = float(a[order].sum()) if order else 0.0
    for k in order:
        remaining -= a[k]
        margin = a[k] - th[k] * max(remaining, 0.0)
        stage = th[k] / (snr * margin) if margin > 0 else np.inf
        running = max(running, stage)
        need[k] = running
    return need


def _noma_gains(cfg: SystemConfig, n_draws: int, seed: int, stream: int, threads: int) -> np.ndarray:
    """beta_k |g_k^H w|^2 for a single isotropic precoder shared by all users."""
    M, K = cfg.antennas, cfg.users
    beta = cfg.path_gains

    def run(n, rng):
        g = _complex_normal(rng, (n, M, K))
        w = _complex_normal(rng, (n, M))
        w /= np.linalg.norm(w, axis=-1, keepdims=True)
        return beta * np.abs(np.einsum("nmk,nm->nk", g.conj(), w)) ** 2

    return np.concatenate(_map_chunks(run, _chunk_rngs(seed, n_draws, stream=stream), threads))


@dataclass(frozen=True)
class NomaResult:
    ect: McEstimate
    allocation: tuple[float, ...]


def noma_baseline_ect(
    cfg: SystemConfig,
    snr,
    n_draws: int,
    power_grid: Sequence[Sequence[float]] | None = None,
    seed: int = 0,
    threads: int = 1,
) -> NomaResult:
    """NOMA with one random precoder and exhaustive search over ``power_grid``.

    The allocation is picked on one batch of draws and its ECT re-estimated
    on an independent batch, so the reported value carries no selection bias.
    """
    if power_grid is None:
        power_grid = simplex_grid(cfg.users)
    power_grid = [tuple(p) for p in power_grid]
    if not power_grid:
        raise ValueError("power grid is empty")
    P = float(snr)
    th = np.asarray(cfg.private_thresholds)
    rates = np.log2(1.0 + th)

    search = np.sort(_noma_gains(cfg, n_draws, seed, 3, threads), axis=0)
    n = search.shape[0]
    best, best_val = None, -np.inf
    for alloc in power_grid:
        need = noma_required_gains(alloc, th, P)
        val = 0.0
        for k in range(cfg.users):
            if np.isfinite(need[k]):
                val += rates[k] * (n - np.searchsorted(search[:, k], need[k], side="left")) / n
        if val > best_val + 1e-15:
            best, best_val = alloc, val

    fresh = _noma_gains(cfg, n_draws, seed, 4, threads)
    need = noma_required_gains(best, th, P)
    per_draw = ((fresh >= need) * rates).sum(axis=1)
    return NomaResult(McEstimate.from_samples(per_draw), best)

"""Closed-form performance model: SINR distributions, covertness, outage, ECT.

All functions are pure. Per-user quantities take a zero-based user index ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import special

from .config import GammaParams, PowerAllocation, SystemConfig, TransmitSnr, validate_config
from .specfun import ln_gamma, upper_inc_gamma, whittaker_w_restricted


def moment_match(parts: Sequence[GammaParams]) -> GammaParams:
    """Single Gamma with the same mean and variance as a sum of independent Gammas."""
    parts = list(parts)
    if not parts:
        raise ValueError("moment_match needs at least one Gamma part")
    if len(parts) == 1:
        return parts[0]
    mean = math.fsum(p.shape * p.scale for p in parts)
    var = math.fsum(p.shape * p.scale**2 for p in parts)
    return GammaParams(mean * mean / var, var / mean)


@dataclass(frozen=True)
class Table1Params:
    """Moment-matched (shape, scale) pairs of the four channel-gain sums.

    ``private_interference`` is None when user k sees no other private
    stream (K = 1 or all other a_j = 0).
    """

    common_interference: GammaParams
    warden_private: GammaParams | None
    private_interference: GammaParams | None
    desired_gain: GammaParams


def _drop_empty(parts):
    return [GammaParams(d, t) for d, t in parts if d > 0 and t > 0]


@lru_cache(maxsize=4096)
def table1_params(cfg: SystemConfig, alloc: PowerAllocation, k: int) -> Table1Params:
    """Shapes and normalised scales for user ``k``.

    Cross terms between the estimated channel and the estimation error are
    dropped; the remaining independent Gamma terms are moment matched.
    Terms with zero weight (e.g. all error terms at eps = 1) are removed
    first so the perfect-CSIT case reduces to a single exact Gamma.
    """
    if alloc.users != cfg.users:
        raise ValueError(f"allocation has {alloc.users} users, config has {cfg.users}")
    dof = cfg.antennas - cfg.users + 1
    eps2 = cfg.csit_quality**2
    err = 1.0 - eps2
    a = alloc.private

    y_parts = _drop_empty([(dof, eps2 * a[k])] + [(1, err * aj) for aj in a])
    l_parts = _drop_empty([(1, aj) for j, aj in enumerate(a) if j != k])
    w_parts = _drop_empty([(1, aj) for aj in a])
    z_parts = _drop_empty([(dof, eps2), (1, err)])

    return Table1Params(
        common_interference=moment_match(y_parts),
        warden_private=moment_match(w_parts) if w_parts else None,
        private_interference=moment_match(l_parts) if l_parts else None,
        desired_gain=moment_match(z_parts),
    )


def table1_closed_form(cfg: SystemConfig, alloc: PowerAllocation, k: int) -> dict[str, float]:
    """The eight tabulated expressions written out literally.

    Used to cross-check ``table1_params``; undefined rows come back as NaN.
    """
    M, K = cfg.antennas, cfg.users
    e = cfg.csit_quality
    a = np.asarray(alloc.private)
    ac, ak = alloc.common, a[k]
    dof = M - K + 1
    sum_sq = float(np.sum(a**2))
    others_sq = sum_sq - ak**2

    y_num = dof * e**2 * ak + (1 - ac) * (1 - e**2)
    y_var = dof * e**4 * ak**2 + sum_sq * (1 - e**2) ** 2
    z_num = dof * e**2 + 1 - e**2
    z_var = dof * e**4 + (1 - e**2) ** 2
    nan = float("nan")
    return {
        "D_Y": y_num**2 / y_var,
        "theta_Y": y_var / y_num,
        "D_1": (1 - ac) ** 2 / sum_sq if sum_sq > 0 else nan,
        "theta_1": sum_sq / (1 - ac) if sum_sq > 0 else nan,
        "D_L": (1 - ac - ak) ** 2 / others_sq if others_sq > 0 else nan,
        "theta_L": others_sq / (1 - ac - ak) if others_sq > 0 else nan,
        "D_Z": z_num**2 / z_var,
        "theta_Z": z_var / z_num,
    }


def round_shape(d: float) -> int:
    """Nearest integer, ties to even, never below 1."""
    return max(1, int(round(d)))


def cdf_common_sinr(x, cfg: SystemConfig, alloc: PowerAllocation, snr: TransmitSnr | float, k: int):
    """CDF of the common-stream SINR at user ``k``.

    F(x) = 1 - exp(-phi x) (mu x + 1)^(-D_Y) with mu = theta_Y / a_c and
    phi = 1 / (P a_c beta_k). With a_c = 0 the SINR is identically zero, so
    F is 0 at x = 0 and 1 for x > 0. Accepts scalar or array ``x``.
    """
    P = float(snr)
    ac = alloc.common
    signal_scale = P * ac * cfg.path_gain(k)
    if np.isscalar(x) and signal_scale > 0.0:
        if x <= 0:
            return 0.0
        t1 = table1_params(cfg, alloc, k).common_interference
        return -math.expm1(-x / signal_scale - t1.shape * math.log1p(x * t1.scale / ac))
    x = np.asarray(x, dtype=float)
    if signal_scale == 0.0:
        out = np.where(x > 0, 1.0, 0.0)
        return out if out.ndim else float(out)
    t1 = table1_params(cfg, alloc, k).common_interference
    mu = t1.scale / ac
    phi = 1.0 / signal_scale
    out = -np.expm1(-phi * x - t1.shape * np.log1p(mu * x))
    out = np.where(x > 0, out, 0.0)
    return out if out.ndim else float(out)


def _private_terms(cfg, alloc, P, k, preserve_mean=False):
    t1 = table1_params(cfg, alloc, k)
    beta = cfg.path_gain(k)
    ak = alloc.private[k]
    dz = round_shape(t1.desired_gain.shape)
    theta_z = P * ak * beta * t1.desired_gain.scale
    if preserve_mean:
        theta_z *= t1.desired_gain.shape / dz
    li = t1.private_interference
    err = 1.0 - cfg.csit_quality**2
    if li is None or err == 0.0:
        return dz, theta_z, None, 0.0
    return dz, theta_z, li.shape, P * beta * err * li.scale


def _log_psi_table(dz: int, dl: float, log_tl: float, log_tz: float):
    lg_dl = ln_gamma(dl)
    return [
        (m, n, n * log_tl + (dl - m) * log_tz + ln_gamma(n + dl) - lg_dl - math.lgamma(m + 1) - math.lgamma(n + 1))
        for m in range(dz)
        for n in range(dz - m)
    ]


def _private_survival_scalar(x: float, dz: int, theta_z: float, dl, theta_l: float) -> float:
    if dl is None:
        u = x / theta_z
        term, total = 1.0, 1.0
        for m in range(1, dz):
            term *= u / m
            total += term
        return math.exp(-u) * total
    log_x = math.log(x)
    log_den = math.log(x * theta_l + theta_z)
    base = -x / theta_z
    return math.fsum(
        math.exp(base + (m + n) * log_x + lp - (n + dl) * log_den)
        for m, n, lp in _log_psi_table(dz, dl, math.log(theta_l), math.log(theta_z))
    )


def _private_survival(x: np.ndarray, dz: int, theta_z: float, dl, theta_l: float) -> np.ndarray:
    if dl is None:
        u = x / theta_z
        total = np.ones_like(u)
        term = np.ones_like(u)
        for m in range(1, dz):
            term = term * u / m
            total = total + term
        return np.exp(-u) * total
    log_x = np.log(x)
    log_den = np.log(x * theta_l + theta_z)
    surv = np.zeros_like(x)
    for m, n, lp in _log_psi_table(dz, dl, math.log(theta_l), math.log(theta_z)):
        surv += np.exp(-x / theta_z + (m + n) * log_x + lp - (n + dl) * log_den)
    return surv


def cdf_private_sinr(
    x,
    cfg: SystemConfig,
    alloc: PowerAllocation,
    snr: TransmitSnr | float,
    k: int,
    preserve_mean: bool = False,
):
    """CDF of the private-stream SINR at user ``k`` after removing the common stream.

    The desired-gain shape is rounded to an integer so the Gamma CDF becomes
    a finite Erlang sum; interference keeps its real shape. Terms are summed
    in log space. Without residual interference (eps = 1, K = 1) this is the
    plain Erlang CDF.

    By default the scale is left as matched before rounding, which shifts
    the mean of the desired gain. ``preserve_mean=True`` rescales it so the
    rounded Gamma keeps the matched mean.
    """
    P = float(snr)
    terms = _private_terms(cfg, alloc, P, k, preserve_mean) if alloc.private[k] > 0 else None
    if terms is None or terms[1] == 0.0:
        out = np.where(np.asarray(x) > 0, 1.0, 0.0)
        return out if out.ndim else float(out)
    if np.isscalar(x):
        if x <= 0:
            return 0.0
        return min(max(1.0 - _private_survival_scalar(float(x), *terms), 0.0), 1.0)
    x = np.asarray(x, dtype=float)
    pos = x > 0
    surv = _private_survival(np.where(pos, x, 1.0), *terms)
    return np.where(pos, np.clip(1.0 - surv, 0.0, 1.0), 0.0)


def erlang_cdf(x: float, shape: int, scale: float) -> float:
    """Gamma CDF with integer shape, from the regularized lower incomplete gamma."""
    return float(special.gammainc(shape, x / scale))


@dataclass(frozen=True)
class CovertnessParams:
    """Covertness load per unit transmit SNR and its ingredients.

    ``nu_incomplete_gamma`` is the same quantity evaluated through the
    incomplete gamma function; ``nu`` comes from the Whittaker form.
    """

    nu: float
    nu_incomplete_gamma: float
    density_factor: float
    radius_factor: float
    zone_mass: float


def covertness_coefficient(cfg: SystemConfig) -> CovertnessParams:
    """Coefficient nu such that covertness holds iff nu * P <= varsigma.

    Depends only on the path-loss exponent, protected radius and warden
    density. Both evaluation routes are computed and must agree to 1e-9.
    """
    validate_config(cfg)
    alpha = cfg.path_loss_exponent
    lam_pi = cfg.warden_density * math.pi
    rp = cfg.protected_radius
    z = lam_pi * rp * rp

    density_factor = lam_pi ** (alpha / 4)
    radius_factor = rp ** (alpha / 2)
    w = whittaker_w_restricted(-alpha / 4, z)
    nu_w = density_factor * math.exp(z / 2) * w / (2 * radius_factor)
    nu_g = 0.5 * lam_pi ** (alpha / 2) * math.exp(z) * upper_inc_gamma(1 - alpha / 2, z)

    if not math.isclose(nu_w, nu_g, rel_tol=1e-9):
        raise ArithmeticError(f"covertness coefficient routes disagree: {nu_w} vs {nu_g}")
    return CovertnessParams(nu_w, nu_g, density_factor, radius_factor, z)


def max_covert_snr(cfg: SystemConfig) -> TransmitSnr:
    return TransmitSnr(cfg.covert_tolerance / covertness_coefficient(cfg).nu)


def outage_probability(cfg: SystemConfig, alloc: PowerAllocation, snr, k: int) -> float:
    """Outage of user ``k``: max of the common and private CDFs at its thresholds.

    With a_c = 0 there is no common stream to decode and only the private
    CDF counts.
    """
    fp = cdf_private_sinr(cfg.private_thresholds[k], cfg, alloc, snr, k)
    if alloc.common == 0.0:
        return fp
    fc = cdf_common_sinr(cfg.common_thresholds[k], cfg, alloc, snr, k)
    return max(fc, fp)


def target_rates(cfg: SystemConfig, k: int) -> tuple[float, float]:
    return math.log2(1 + cfg.common_thresholds[k]), math.log2(1 + cfg.private_thresholds[k])


def user_throughput(cfg: SystemConfig, alloc: PowerAllocation, snr, k: int) -> float:
    """Effective throughput of user ``k`` in bit/s/Hz.

    The common rate counts whenever the common stream decodes; the private
    rate needs both streams. With a_c = 0 the common term is dropped.
    """
    rc, rp = target_rates(cfg, k)
    fp = cdf_private_sinr(cfg.private_thresholds[k], cfg, alloc, snr, k)
    if alloc.common == 0.0:
        return rp * (1.0 - fp)
    fc = cdf_common_sinr(cfg.common_thresholds[k], cfg, alloc, snr, k)
    return rc * (1.0 - fc) + rp * (1.0 - max(fc, fp))


def system_ect(cfg: SystemConfig, alloc: PowerAllocation, snr) -> float:
    return math.fsum(user_throughput(cfg, alloc, snr, k) for k in range(cfg.users))


def symmetric_ect(cfg: SystemConfig, common: float, snr) -> float:
    """System ECT with a_k = (1 - a_c) / K; the optimizer's objective."""
    return system_ect(cfg, PowerAllocation.symmetric(common, cfg.users), snr)

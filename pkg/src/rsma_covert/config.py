"""Shared domain types for the RSMA covert-communication model.

Everything here is immutable and validated at construction. Numerics live in
the other modules; this one only knows what a valid system looks like.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration or allocation violates an invariant.

    ``problems`` lists every violation found, so a caller can report them all
    at once instead of fixing one field per run.
    """

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


def _as_tuple(values, n: int | None = None) -> tuple[float, ...]:
    if np.isscalar(values):
        if n is None:
            raise ValueError("scalar value needs an explicit length")
        return (float(values),) * n
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class SystemConfig:
    """Physical and system parameters of one downlink deployment.

    Thresholds are linear SINR values, one per user. ``user_distances``,
    ``common_thresholds`` and ``private_thresholds`` accept a scalar, which is
    broadcast to all ``users``.
    """

    antennas: int = 4
    users: int = 4
    csit_quality: float = 0.95
    path_loss_exponent: float = 2.0
    user_distances: tuple[float, ...] | float = 5.0
    protected_radius: float = 10.0
    warden_density: float = 1e-4
    covert_tolerance: float = 0.1
    common_thresholds: tuple[float, ...] | float = 0.01
    private_thresholds: tuple[float, ...] | float = 0.01

    def __post_init__(self):
        k = self.users if isinstance(self.users, int) and self.users > 0 else None
        for name in ("user_distances", "common_thresholds", "private_thresholds"):
            value = getattr(self, name)
            if np.isscalar(value) and k is None:
                continue
            object.__setattr__(self, name, _as_tuple(value, k))
        validate_config(self)

    @property
    def path_gains(self) -> np.ndarray:
        """Large-scale gains d_k^-alpha, recomputed on every access."""
        return np.asarray(self.user_distances, dtype=float) ** (-self.path_loss_exponent)

    def path_gain(self, k: int) -> float:
        return float(self.user_distances[k]) ** (-self.path_loss_exponent)

    def with_updates(self, **changes) -> "SystemConfig":
        """Copy with some fields replaced; per-user tuples re-broadcast when
        ``users`` changes and the old tuple was uniform."""
        if "users" in changes:
            k = changes["users"]
            for name in ("user_distances", "common_thresholds", "private_thresholds"):
                if name not in changes:
                    old = getattr(self, name)
                    if len(set(old)) != 1:
                        raise ConfigError([f"{name}: cannot re-broadcast non-uniform values to {k} users"])
                    changes[name] = (old[0],) * k
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "antennas": self.antennas,
            "users": self.users,
            "csit_quality": self.csit_quality,
            "path_loss_exponent": self.path_loss_exponent,
            "user_distances": list(self.user_distances),
            "protected_radius": self.protected_radius,
            "warden_density": self.warden_density,
            "covert_tolerance": self.covert_tolerance,
            "common_thresholds": list(self.common_thresholds),
            "private_thresholds": list(self.private_thresholds),
        }


def _check_config(cfg: SystemConfig) -> list[str]:
    problems = []
    M, K = cfg.antennas, cfg.users
    if not isinstance(M, (int, np.integer)) or isinstance(M, bool) or M < 1:
        problems.append(f"antennas: must be a positive integer, got {M!r}")
    if not isinstance(K, (int, np.integer)) or isinstance(K, bool) or K < 1:
        problems.append(f"users: must be a positive integer, got {K!r}")
    if not problems and M < K:
        problems.append(f"antennas: M < K ({M} < {K}); zero-forcing needs M >= K")
    if not 0.0 <= cfg.csit_quality <= 1.0:
        problems.append(f"csit_quality: must lie in [0, 1], got {cfg.csit_quality}")
    if not cfg.path_loss_exponent > 0:
        problems.append(f"path_loss_exponent: must be > 0, got {cfg.path_loss_exponent}")
    if not cfg.protected_radius > 0:
        problems.append(f"protected_radius: must be > 0, got {cfg.protected_radius}")
    if not cfg.warden_density > 0:
        problems.append(f"warden_density: must be > 0, got {cfg.warden_density}")
    if not 0.0 < cfg.covert_tolerance <= 1.0:
        problems.append(f"covert_tolerance: must lie in (0, 1], got {cfg.covert_tolerance}")

    per_user = {
        "user_distances": cfg.user_distances,
        "common_thresholds": cfg.common_thresholds,
        "private_thresholds": cfg.private_thresholds,
    }
    for name, values in per_user.items():
        if np.isscalar(values):
            continue
        if isinstance(K, int) and K >= 1 and len(values) != K:
            problems.append(f"{name}: expected {K} entries, got {len(values)}")
        if any(not v > 0 for v in values):
            problems.append(f"{name}: all entries must be > 0")
    if not np.isscalar(cfg.user_distances) and cfg.protected_radius > 0:
        far = [d for d in cfg.user_distances if d > cfg.protected_radius]
        if far:
            problems.append(
                f"user_distances: user outside protected zone (d={far[0]} > r_p={cfg.protected_radius})"
            )
    return problems


def validate_config(cfg: SystemConfig) -> SystemConfig:
    """Return ``cfg`` unchanged if every invariant holds, else raise ConfigError."""
    problems = _check_config(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


@dataclass(frozen=True)
class PowerAllocation:
    """Fractions of the transmit power: common stream plus one per user."""

    common: float
    private: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "private", tuple(float(a) for a in self.private))
        problems = []
        if not 0.0 <= self.common < 1.0:
            problems.append(f"common: a_c must lie in [0, 1), got {self.common}")
        if not self.private:
            problems.append("private: need at least one user")
        if any(a < 0 for a in self.private):
            problems.append("private: coefficients must be >= 0")
        total = self.common + math.fsum(self.private)
        if abs(total - 1.0) > 1e-12:
            problems.append(f"allocation sums to {total!r}, not 1")
        if problems:
            raise ConfigError(problems)

    @classmethod
    def symmetric(cls, common: float, users: int) -> "PowerAllocation":
        return cls(common, ((1.0 - common) / users,) * users)

    @property
    def users(self) -> int:
        return len(self.private)

    @property
    def as_array(self) -> np.ndarray:
        return np.asarray(self.private, dtype=float)


@dataclass(frozen=True)
class GammaParams:
    """Gamma(shape, scale) with density x^(D-1) exp(-x/theta) / (Gamma(D) theta^D)."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError(f"Gamma shape and scale must be > 0, got ({self.shape}, {self.scale})")

    def mean(self) -> float:
        return self.shape * self.scale

    def variance(self) -> float:
        return self.shape * self.scale**2


@dataclass(frozen=True, order=True)
class TransmitSnr:
    """Transmit SNR P/sigma^2, stored linear."""

    value: float = field()

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"transmit SNR must be > 0, got {self.value}")

    @classmethod
    def from_db(cls, db: float) -> "TransmitSnr":
        return cls(db_to_linear(db))

    @property
    def db(self) -> float:
        return linear_to_db(self.value)

    def __float__(self) -> float:
        return float(self.value)


def baseline_config(**overrides) -> SystemConfig:
    """Default operating point: M=K=4, eps=0.95, alpha=2, d_k=5 m, r_p=10 m,
    varsigma=0.1, thresholds -20 dB, and the inferred warden density 1e-4 m^-2."""
    return SystemConfig(**overrides)

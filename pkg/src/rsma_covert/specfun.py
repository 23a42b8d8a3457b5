"""Special functions used by the closed forms.

Only real arguments. The incomplete gamma function supports a non-positive
first argument, which shows up whenever the path-loss exponent is >= 2.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special


def ln_gamma(x: float) -> float:
    if not x > 0:
        raise ValueError(f"ln_gamma: x must be > 0, got {x}")
    return math.lgamma(x)


def _upper_inc_gamma_nonneg(s: float, z: float) -> float:
    if s == 0.0:
        return float(special.exp1(z))
    return float(special.gammaincc(s, z) * special.gamma(s))


def upper_inc_gamma(s: float, z: float) -> float:
    """Gamma(s, z) = integral_z^inf t^(s-1) e^-t dt for any real s, z > 0.

    For s < 0 the value is reached by the downward recurrence
    Gamma(s, z) = (Gamma(s+1, z) - z^s e^-z) / s starting from s + n in [0, 1).
    """
    if not z > 0:
        raise ValueError(f"upper_inc_gamma: z must be > 0, got {z}")
    s = float(s)
    z = float(z)
    if s >= 0:
        return _upper_inc_gamma_nonneg(s, z)
    n = math.ceil(-s)
    start = s + n
    if abs(start - 1.0) < 1e-15:
        start, n = 0.0, n - 1
    value = _upper_inc_gamma_nonneg(start, z)
    a = start
    for _ in range(n):
        a -= 1.0
        value = (value - math.exp(a * math.log(z) - z)) / a
    return value


def lower_inc_gamma(s: float, z: float) -> float:
    """gamma(s, z) = integral_0^z t^(s-1) e^-t dt, s > 0."""
    if not s > 0:
        raise ValueError(f"lower_inc_gamma: s must be > 0, got {s}")
    if z < 0:
        raise ValueError(f"lower_inc_gamma: z must be >= 0, got {z}")
    return float(special.gammainc(s, z) * special.gamma(s))


def upper_inc_gamma_quad(s: float, z: float) -> float:
    """Gamma(s, z) by adaptive quadrature, kept independent of the recurrence.

    Substitutes t = z e^u so the integrand is smooth even for small z and
    very negative s; the range is cut where e^-t drops below 1e-300 relative.
    """
    if not z > 0:
        raise ValueError(f"upper_inc_gamma_quad: z must be > 0, got {z}")
    log_z = math.log(z)

    def f(u):
        return math.exp(s * (log_z + u) - z * math.exp(u))

    u_max = math.log((z + 750.0) / z)
    breaks = [u for u in (math.log((z + 1.0) / z), math.log((z + 50.0) / z)) if 0 < u < u_max]
    value, _ = integrate.quad(f, 0.0, u_max, points=breaks or None, epsabs=0.0, epsrel=1e-13, limit=500)
    return value


def whittaker_w_restricted(v: float, z: float) -> float:
    """W_{v, 1/2 + v}(z) = z^-v e^(z/2) Gamma(2v + 1, z).

    Only this one-parameter family of Whittaker's W function is provided.
    """
    if not z > 0:
        raise ValueError(f"whittaker_w_restricted: z must be > 0, got {z}")
    return math.exp(-v * math.log(z) + 0.5 * z) * upper_inc_gamma(2.0 * v + 1.0, z)


def whittaker_w_restricted_quad(v: float, z: float) -> float:
    if not z > 0:
        raise ValueError(f"whittaker_w_restricted_quad: z must be > 0, got {z}")
    return math.exp(-v * math.log(z) + 0.5 * z) * upper_inc_gamma_quad(2.0 * v + 1.0, z)


def exp1_series(z: float, tol: float = 1e-17) -> float:
    """E1(z) = -gamma_E - ln z + sum_{n>=1} (-1)^(n+1) z^n / (n n!). Small z only."""
    total = 0.0
    term = 1.0
    n = 1
    while True:
        term *= z / n
        contrib = term / n * (1 if n % 2 else -1)
        total += contrib
        if abs(contrib) < tol * max(abs(total), 1e-300) or n > 500:
            break
        n += 1
    return -np.euler_gamma - math.log(z) + total

"""Error-bound and parameter calculators for the SJPC estimator."""
from __future__ import annotations

import math

from .combinatorics import choose


def _lattice_factor(d: int, s: int) -> int:
    return choose(d, s) ** 2 * choose(2 * (d - s), d - s)


def _check(d: int, s: int, r: float) -> None:
    if not 1 <= s <= d:
        raise ValueError(f"need 1 <= s <= d, got s={s}, d={d}")
    if not 0.0 < r <= 1.0:
        raise ValueError(f"sampling ratio must be in (0, 1], got {r}")


def variance_bound_offline(d: int, s: int, r: float, g_s: float) -> float:
    """Upper bound on ``var(G_s / g_s)`` when level self-join sizes are exact."""
    _check(d, s, r)
    if g_s <= 0:
        raise ValueError("g_s must be positive")
    return _lattice_factor(d, s) / r / g_s


def variance_bound_online(d: int, s: int, r: float, w: int, n: int, g_s: float) -> float:
    """Upper bound on ``var(G_s / g_s)`` with depth-1 Fast-AGMS sketches of width ``w``."""
    _check(d, s, r)
    if g_s <= 0:
        raise ValueError("g_s must be positive")
    if w < 1:
        raise ValueError("w must be >= 1")
    if n < 0:
        raise ValueError("n must be non-negative")
    return _lattice_factor(d, s) / r * ((1 + 2 / w) / g_s + (2 / w) * (1 + n / (r * g_s)) ** 2)


def suggest_parameters(epsilon: float, lam: float, d: int, s: int, w: int) -> tuple[float, int]:
    """Sampling ratio and depth for selectivity error ``epsilon`` w.p. ``1 - lam``.

    ``r = min(1, 64 / (epsilon^2 w) * C(d,s)^2 * C(2(d-s), d-s))`` and
    ``t = ceil(2 ln(1/lam))``. When ``r`` saturates at 1 the guarantee needs a
    wider sketch; the returned ratio is then only the best available.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not 0 < lam < 1:
        raise ValueError("lambda must be in (0, 1)")
    if w < 1:
        raise ValueError("w must be >= 1")
    r = min(1.0, 64.0 / (epsilon ** 2 * w) * _lattice_factor(d, s))
    t = max(1, math.ceil(2 * math.log(1 / lam)))
    return r, t

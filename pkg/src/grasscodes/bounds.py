"""Asymptotic rate bounds and finite Rankin bounds for Grassmannian codes.

Rates are in nats per ambient dimension, as functions of the code distance
delta in (0, sqrt(k)].
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .errors import DomainError, NoRoot

SCAN_POINTS = 512
ROOT_TOL = 1e-6


def _check_delta(delta, k: int) -> np.ndarray:
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    d = np.asarray(delta, dtype=float)
    # small slack so that delta = sqrt(k) computed in floating point is accepted
    if np.any(d <= 0) or np.any(d > math.sqrt(k) * (1 + 1e-15)):
        raise DomainError(f"delta must lie in (0, sqrt({k})], got {delta}")
    return np.minimum(d, math.sqrt(k))


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def rate_gv(delta, k: int):
    d = _check_delta(delta, k)
    return _scalar(-k * np.log(d / math.sqrt(k)))


def _sphere_rate(x, k):
    # -k ln sqrt(1 - sqrt(1 - x))
    inner = 1.0 - np.sqrt(np.maximum(1.0 - x, 0.0))
    return -0.5 * k * np.log(inner)


def rate_hamming(delta, k: int):
    d = _check_delta(delta, k)
    return _scalar(_sphere_rate((d / math.sqrt(k)) ** 2 / 2, k))


def rate_rankin_new(delta, k: int):
    """Upper bound -k ln sqrt(1 - sqrt(1 - delta^2/k)) from the Blichfeldt argument."""
    d = _check_delta(delta, k)
    return _scalar(_sphere_rate((d / math.sqrt(k)) ** 2, k))


def lp_parameter(delta, k: int):
    d = _check_delta(delta, k)
    return _scalar(0.5 * k * (math.sqrt(k) / d - 1.0))


def rate_lp(delta, k: int):
    s = np.asarray(lp_parameter(delta, k))
    # xlogy(0, 0) == 0 gives the continuous extension at delta = sqrt(k)
    return _scalar(k * (xlogy(1.0 + s, 1.0 + s) - xlogy(s, s)))


def rankin_sq_bound(M: int, k: int, n: int) -> float:
    """Upper bound on the squared distance of any M-plane code in G(k, n).

    Simplex bound r^2 M/(M-1) up to M = n(n+1)/2 planes, orthoplex bound r^2
    beyond, where r^2 = k(n-k)/n.
    """
    if M < 2 or not 1 <= k < n:
        raise DomainError(f"need M >= 2 and 1 <= k < n, got M={M}, k={k}, n={n}")
    r2 = k * (n - k) / n
    if M <= n * (n + 1) // 2:
        return r2 * M / (M - 1)
    return r2


def _scan_grid(k: int, points: int = SCAN_POINTS) -> np.ndarray:
    root_k = math.sqrt(k)
    grid = root_k * np.arange(1, points + 1) / (points + 1)
    # Large-k crossings sit within one grid step of sqrt(k); every curve
    # vanishes at sqrt(k) itself, so probe just inside it instead.
    return np.append(grid, root_k * (1 - 1e-9))


def find_crossing(f, k: int, points: int = SCAN_POINTS, tol: float = ROOT_TOL) -> float:
    """First sign change of f on an open grid in (0, sqrt(k)), refined by bisection."""
    grid = _scan_grid(k, points)
    values = np.array([f(d) for d in grid])
    signs = np.sign(values)
    flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    exact = np.nonzero(signs == 0)[0]
    if exact.size and (not flips.size or exact[0] <= flips[0]):
        return float(grid[exact[0]])
    if not flips.size:
        raise NoRoot(f"no sign change found for k={k}")
    lo, hi = grid[flips[0]], grid[flips[0] + 1]
    f_lo = values[flips[0]]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0:
            return float(mid)
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def crossover_delta_star(k: int) -> float:
    """Distance where the new Rankin-type bound meets the LP bound."""
    if k < 2:
        raise DomainError("the crossover is defined for k >= 2")
    return find_crossing(lambda d: rate_rankin_new(d, k) - rate_lp(d, k), k)


def crossover_lp_hamming(k: int) -> float:
    if k < 2:
        raise DomainError("the LP/Hamming crossing is defined for k >= 2")
    return find_crossing(lambda d: rate_lp(d, k) - rate_hamming(d, k), k)


@dataclass(frozen=True)
class RatePoint:
    delta: float
    k: int
    r_gv: float
    r_hamming: float
    r_lp: float
    r_rankin: float


CSV_COLUMNS = ("delta", "r_gv", "r_rankin", "r_lp", "r_hamming")


def rate_point(delta: float, k: int) -> RatePoint:
    return RatePoint(
        delta=float(delta),
        k=k,
        r_gv=rate_gv(delta, k),
        r_hamming=rate_hamming(delta, k),
        r_lp=rate_lp(delta, k),
        r_rankin=rate_rankin_new(delta, k),
    )


def emit_rate_table(k: int, grid) -> list[RatePoint]:
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    _check_delta(grid, k)
    return [rate_point(d, k) for d in grid]


def format_number(x: float) -> str:
    return f"{x:.12g}"


def rate_table_csv(table: list[RatePoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for pt in table:
        writer.writerow(format_number(getattr(pt, c)) for c in CSV_COLUMNS)
    return buf.getvalue()

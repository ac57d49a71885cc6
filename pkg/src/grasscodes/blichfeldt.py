"""Blichfeldt-type densities on G(k, n) and on the unit sphere.

A code of distance delta in G(k, n) embeds as a spherical code on a sphere
of radius r. Around every codeword we place a quadratic density supported
on a ball of radius rho > delta/2; the point of the construction is that
these densities never sum to more than 1 anywhere, which
:func:`total_density` lets us check numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .errors import DegenerateBeta, DimensionMismatch, DomainError, PreconditionViolation

UNIT_TOL = 1e-12


@dataclass(frozen=True)
class DensityParams:
    delta: float
    r: float
    alpha: float
    beta: float
    rho: float
    cap_radius_P: float

    @property
    def degenerate(self) -> bool:
        return math.isclose(self.beta, math.pi / 2, rel_tol=0, abs_tol=1e-15)

    @property
    def rho_closed_form(self) -> float:
        """r sqrt(1 - sqrt(1 - delta^2/r^2)); equals rho by construction."""
        q = min(self.delta / self.r, 1.0)
        return self.r * math.sqrt(1 - math.sqrt((1 - q) * (1 + q)))

    @property
    def tau_scale(self) -> float:
        return 2 * math.cos(self.beta) / (self.r**2 * math.sin(self.beta) ** 2)

    @property
    def sigma_scale(self) -> float:
        return math.cos(self.beta) / math.sin(self.beta) ** 2


def density_params(delta: float, r: float) -> DensityParams:
    """Derive (alpha, beta, rho, P) for a code of distance ``delta`` on radius ``r``."""
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    if not 0 < delta <= r * (1 + 1e-15):
        raise DomainError(f"need 0 < delta <= r, got delta={delta}, r={r}")
    q = min(delta / r, 1.0)
    # cos(beta) = sqrt(1 - q^2), factored to stay accurate as q -> 1
    cos_beta = math.sqrt((1 - q) * (1 + q))
    beta = math.atan2(q, cos_beta)
    return DensityParams(
        delta=float(delta),
        r=float(r),
        alpha=math.asin(q / math.sqrt(2)),
        beta=beta,
        rho=r * math.sqrt(1 - cos_beta),
        cap_radius_P=math.sqrt(2 * (1 - cos_beta)),
    )


def params_for_sphere_distance(delta_tilde: float) -> DensityParams:
    """Params for a code on the unit sphere with minimum distance ``delta_tilde``.

    On the unit sphere delta_tilde = 2 sin(alpha); this is the Grassmannian
    setup with r = 1 and delta = delta_tilde / sqrt(2).
    """
    return density_params(delta_tilde / math.sqrt(2), 1.0)


def _require_nondegenerate(params: DensityParams) -> None:
    if params.degenerate:
        raise DegenerateBeta("beta = pi/2: the density vanishes identically")


def tau(d, params: DensityParams):
    """Density on G(k, n) at chordal distance ``d`` from a codeword."""
    _require_nondegenerate(params)
    d = np.asarray(d, dtype=float)
    out = np.where(d <= params.rho, params.tau_scale * (params.rho**2 - d**2), 0.0)
    return float(out) if out.ndim == 0 else out


def sigma(s, params: DensityParams):
    """Density on the unit sphere at Euclidean distance ``s`` from a cap centre."""
    _require_nondegenerate(params)
    s = np.asarray(s, dtype=float)
    P = params.cap_radius_P
    out = np.where(s <= P, params.sigma_scale * (P**2 - s**2), 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SphericalCode:
    points: np.ndarray
    min_distance: float

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


def spherical_code(points) -> SphericalCode:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    norms = np.linalg.norm(pts, axis=1)
    if np.any(np.abs(norms - 1) > UNIT_TOL):
        raise PreconditionViolation("spherical code points must have unit norm")
    pts = pts.copy()
    pts.setflags(write=False)
    dmin = float(pdist(pts).min()) if len(pts) > 1 else math.inf
    return SphericalCode(pts, dmin)


def total_density(code: SphericalCode, z, params: DensityParams) -> float:
    z = np.asarray(z, dtype=float)
    if z.shape != (code.dimension,):
        raise DimensionMismatch(f"point of shape {z.shape} vs code dimension {code.dimension}")
    dist = np.linalg.norm(code.points - z, axis=1)
    return float(np.sum(sigma(dist, params)))


def quadratic_inequality_lhs(
    points_near_z, z, delta_tilde: float, params: DensityParams
) -> float:
    """(sum d_j^2)^2 - 4 m sum d_j^2 + 2 m (m-1) delta_tilde^2 for the points near z.

    Nonpositive whenever the points are unit vectors with pairwise distance at
    least ``delta_tilde``.
    """
    pts = np.atleast_2d(np.asarray(points_near_z, dtype=float))
    if pts.size == 0:
        return 0.0
    z = np.asarray(z, dtype=float)
    d2 = np.sum((pts - z) ** 2, axis=1)
    if np.any(d2 > params.cap_radius_P**2 * (1 + 1e-12)):
        raise PreconditionViolation("a listed point lies outside the cap of radius P")
    m = len(pts)
    total = float(np.sum(d2))
    return total**2 - 4 * m * total + 2 * m * (m - 1) * delta_tilde**2


quadratic_inequality_check = quadratic_inequality_lhs


def reduced_inequality_slack(alpha_z: float, m: int, params: DensityParams) -> float:
    """4m(1 - alpha_z) - alpha_z^2 tan^2(beta).

    Substituting sum d_j^2 = (1 - cos b)(2m - alpha_z (1 + cos b)/cos b) into
    the quadratic inequality and dividing out (1 - cos^2 b) leaves exactly this
    expression, so it is nonnegative whenever the quadratic LHS is <= 0.
    For alpha_z > 1 it is negative, hence alpha_z <= 1.
    """
    return 4 * m * (1 - alpha_z) - alpha_z**2 * math.tan(params.beta) ** 2


def points_in_cap(code: SphericalCode, z, params: DensityParams) -> np.ndarray:
    dist = np.linalg.norm(code.points - np.asarray(z, dtype=float), axis=1)
    return code.points[dist <= params.cap_radius_P]


# -- randomized verification -------------------------------------------------


def random_unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def rejection_code(
    rng: np.random.Generator, dim: int, target_distance: float, max_points: int, attempts: int = 2000
) -> SphericalCode:
    """Greedy random spherical code with all pairwise distances >= target_distance."""
    kept = [random_unit_vectors(rng, 1, dim)[0]]
    for cand in random_unit_vectors(rng, attempts, dim):
        if len(kept) >= max_points:
            break
        if np.min(np.linalg.norm(np.asarray(kept) - cand, axis=1)) >= target_distance:
            kept.append(cand)
    return spherical_code(kept)


def repulsion_code(
    rng: np.random.Generator, dim: int, count: int, steps: int = 200, lr: float = 0.05
) -> SphericalCode:
    """Spread ``count`` points on the sphere by pairwise inverse-square repulsion."""
    x = random_unit_vectors(rng, count, dim)
    for _ in range(steps):
        diff = x[:, None, :] - x[None, :, :]
        d2 = np.sum(diff**2, axis=2) + np.eye(count)
        force = np.sum(diff / d2[:, :, None] ** 2, axis=1)
        x = x + lr * force / count
        x /= np.linalg.norm(x, axis=1, keepdims=True)
    return spherical_code(x)


def _adversarial_points(rng, code: SphericalCode, count: int) -> np.ndarray:
    # Mix of uniform points, points near codewords, and normalized centroids
    # of close codeword pairs, where several caps overlap.
    dim = code.dimension
    n_uniform = count // 3
    n_near = count // 3
    n_mid = count - n_uniform - n_near
    uniform = random_unit_vectors(rng, n_uniform, dim)
    idx = rng.integers(len(code), size=n_near)
    near = code.points[idx] + 0.1 * rng.standard_normal((n_near, dim)) / math.sqrt(dim)
    i = rng.integers(len(code), size=n_mid)
    j = rng.integers(len(code), size=n_mid)
    mid = code.points[i] + code.points[j] + 0.05 * rng.standard_normal((n_mid, dim))
    z = np.vstack([uniform, near, mid])
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    bad = norms[:, 0] < 1e-9
    z[bad] = random_unit_vectors(rng, int(bad.sum()), dim)
    norms[bad] = 1.0
    return z / norms


@dataclass
class DensityReport:
    trials: int
    max_total_density: float
    max_quadratic_lhs: float
    min_reduced_slack: float
    seed: int

    @property
    def passed(self) -> bool:
        return (
            self.max_total_density <= 1 + 1e-9
            and self.max_quadratic_lhs <= 1e-9
            and self.min_reduced_slack >= -1e-9
        )

    def as_dict(self) -> dict:
        return {
            "trials": self.trials,
            "max_total_density": self.max_total_density,
            "max_quadratic_lhs": self.max_quadratic_lhs,
            "min_reduced_slack": self.min_reduced_slack,
            "seed": self.seed,
            "passed": self.passed,
        }


def _random_campaign_code(rng, max_dim: int, max_points: int) -> SphericalCode:
    dim = int(rng.integers(2, max_dim + 1))
    count = int(rng.integers(2, max_points + 1))
    if rng.random() < 0.5:
        target = float(rng.uniform(0.3, 1.4))
        return rejection_code(rng, dim, target, count)
    return repulsion_code(rng, dim, count)


def verify_density(
    trials: int = 100,
    points_per_code: int = 100,
    seed: int = 0,
    max_dim: int = 20,
    max_points: int = 50,
) -> DensityReport:
    """Check total density <= 1 and the quadratic inequality on random codes.

    Each trial draws a code (rejection-sampled or repulsion-optimized) and
    evaluates ``points_per_code`` test points z against params derived from
    the code's own minimum distance.
    """
    rng = np.random.default_rng(seed)
    max_density = -math.inf
    max_lhs = -math.inf
    min_slack = math.inf
    done = 0
    while done < trials:
        code = _random_campaign_code(rng, max_dim, max_points)
        dt = code.min_distance
        if len(code) < 2 or not dt < math.sqrt(2):
            # beta would hit pi/2: densities vanish and the bound is empty
            continue
        params = params_for_sphere_distance(dt)
        P = params.cap_radius_P
        for z in _adversarial_points(rng, code, points_per_code):
            dist = np.linalg.norm(code.points - z, axis=1)
            near = dist <= P
            alpha_z = float(np.sum(sigma(dist, params)))
            max_density = max(max_density, alpha_z)
            m = int(near.sum())
            if m:
                lhs = quadratic_inequality_lhs(code.points[near], z, dt, params)
                max_lhs = max(max_lhs, lhs)
                min_slack = min(min_slack, reduced_inequality_slack(alpha_z, m, params))
        done += 1
    return DensityReport(trials, max_density, max_lhs, min_slack, seed)

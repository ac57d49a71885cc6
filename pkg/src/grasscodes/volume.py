"""Ball masses in G(k, n) under the Blichfeldt density.

The normalized mass of a ball is the expectation of tau(d(p0, Q)) over a
uniformly random plane Q, so the normalizing constant of the principal-angle
volume form never has to be computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import multigammaln

from . import _random
from .blichfeldt import DensityParams, density_params, tau
from .core import Subspace, _orthonormal_rows, embedding_radius
from .errors import DomainError, InsufficientSamples


def omega_unnormalized(theta, k: int, n: int):
    """Principal-angle volume density without its normalizing constant.

    ``theta`` holds angles sorted non-increasing along the last axis (a
    PrincipalAngles instance also works). Boundary points get density 0.
    """
    if not 2 * k < n:
        raise DomainError(f"the volume form needs k < n/2, got k={k}, n={n}")
    th = np.asarray(getattr(theta, "theta", theta), dtype=float)
    if th.shape[-1] != k:
        raise DomainError(f"expected {k} angles, got {th.shape[-1]}")
    s = np.sin(th)
    out = np.prod(s ** (n - 2 * k), axis=-1)
    s2 = s**2
    for i in range(k):
        for j in range(i + 1, k):
            out = out * (s2[..., i] - s2[..., j])
    return float(out) if np.ndim(out) == 0 else out


def sample_uniform_subspace(n: int, k: int, rng, allow_large_k: bool = False) -> Subspace:
    """Orthonormalized k x n Gaussian matrix: a plane drawn from the invariant measure."""
    g = _random.generator(rng)
    if not 1 <= k <= n:
        raise DomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    while True:
        rows = g.standard_normal((k, n))
        s = np.linalg.svd(rows, compute_uv=False)
        if s[-1] > 1e-10 * s[0]:
            return Subspace(_orthonormal_rows(rows), allow_large_k=allow_large_k)


def sample_sq_sines(rng: np.random.Generator, count: int, k: int, n: int):
    """Sum and log-product of sin^2 of principal angles to span(e_1..e_k).

    Uses ``count`` uniform planes. With G = [G1 | G2] a Gaussian k x n matrix
    and S = G G^T, the squared sines are the eigenvalues of S^{-1} G2 G2^T,
    so only k x k determinants and traces are needed.
    """
    g = rng.standard_normal((count, k, n))
    g2 = g[:, :, k:]
    w2 = g2 @ g2.transpose(0, 2, 1)
    s = g @ g.transpose(0, 2, 1)
    sum_sq = np.trace(np.linalg.solve(s, w2), axis1=1, axis2=2)
    log_prod = np.linalg.slogdet(w2)[1] - np.linalg.slogdet(s)[1]
    return np.clip(sum_sq, 0.0, k), log_prod


@dataclass(frozen=True)
class VolumeEstimate:
    mean: float
    stderr: float
    samples: int
    rho: float
    k: int
    n: int
    method: str = "uniform"


def _merge(blocks, samples, params, k, n, method) -> VolumeEstimate:
    total = sum(b[0] for b in blocks)
    total_sq = sum(b[1] for b in blocks)
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0) * samples / max(samples - 1, 1)
    return VolumeEstimate(mean, math.sqrt(var / samples), samples, params.rho, k, n, method)


def _check_volume_args(params: DensityParams, k: int, n: int, samples: int) -> None:
    if samples < 100:
        raise DomainError("at least 100 samples are required")
    if not 1 <= k < n:
        raise DomainError(f"need 1 <= k < n, got k={k}, n={n}")


def estimate_mu_ball(
    params: DensityParams, k: int, n: int, samples: int, rng=0, threads: int = 1
) -> VolumeEstimate:
    """Plain Monte-Carlo estimate of the normalized mass of B_rho.

    Averages tau(d(p0, Q)) over uniformly random planes Q. This cannot see
    balls whose mass is far below 1/samples; see
    :func:`estimate_mu_ball_weighted` for that regime.
    """
    _check_volume_args(params, k, n, samples)
    tau(0.0, params)  # raises DegenerateBeta early

    def block(g, size):
        sum_sq, _ = sample_sq_sines(g, size, k, n)
        vals = tau(np.sqrt(sum_sq), params)
        return float(vals.sum()), float((vals**2).sum())

    seq = _random.as_seed_sequence(rng)
    blocks = _random.map_blocks(block, seq, samples, threads)
    return _merge(blocks, samples, params, k, n, "uniform")


def _log_multivariate_beta(a: float, b: float, k: int) -> float:
    return multigammaln(a, k) + multigammaln(b, k) - multigammaln(a + b, k)


def estimate_mu_ball_weighted(
    params: DensityParams,
    k: int,
    n: int,
    samples: int,
    rng=0,
    proposal_dof: int | None = None,
    threads: int = 1,
) -> VolumeEstimate:
    """Unbiased reweighted estimate of the mass of B_rho for tiny balls.

    The squared sines of the principal angles between a uniform plane in
    R^n and a fixed k-plane follow a matrix Beta((n-k)/2, k/2) law. Planes
    are drawn in the smaller space R^{k + nu} instead (default nu = k), where
    the ball is hit often, and each draw is weighted by the density ratio

        B_k(nu/2, k/2) / B_k((n-k)/2, k/2) * prod(sin^2)^((n-k-nu)/2).

    With nu = n - k every weight is 1 and this is the plain estimator.
    """
    _check_volume_args(params, k, n, samples)
    tau(0.0, params)
    nu = k if proposal_dof is None else int(proposal_dof)
    if not k <= nu <= n - k:
        raise DomainError(f"proposal_dof must lie in [k, n-k] = [{k}, {n - k}], got {nu}")
    log_const = _log_multivariate_beta(nu / 2, k / 2, k) - _log_multivariate_beta(
        (n - k) / 2, k / 2, k
    )
    exponent = (n - k - nu) / 2

    def block(g, size):
        sum_sq, log_prod = sample_sq_sines(g, size, k, k + nu)
        inside = sum_sq <= params.rho**2
        vals = np.zeros(size)
        vals[inside] = tau(np.sqrt(sum_sq[inside]), params) * np.exp(
            log_const + exponent * log_prod[inside]
        )
        return float(vals.sum()), float((vals**2).sum())

    seq = _random.as_seed_sequence(rng)
    blocks = _random.map_blocks(block, seq, samples, threads)
    return _merge(blocks, samples, params, k, n, f"weighted(nu={nu})")


def params_for_radius(rho: float, r: float) -> DensityParams:
    """Inverse of the rho(delta) relation: the params whose extended radius is ``rho``."""
    if not 0 < rho < r:
        raise DomainError(f"need 0 < rho < r, got rho={rho}, r={r}")
    beta = 2 * math.asin(rho / (math.sqrt(2) * r))
    return density_params(r * math.sin(beta), r)


@dataclass(frozen=True)
class TracePoint:
    n: int
    samples: int
    mu_hat: float
    stderr: float
    normalized_log: float
    insufficient: bool = False


TRACE_COLUMNS = ("n", "samples", "mu_hat", "stderr", "normalized_log")


def lemma2_exponent_trace(
    rho_over_sqrtk: float,
    k: int,
    n_list,
    samples: int,
    rng=0,
    method: str = "weighted",
    threads: int = 1,
    strict: bool = True,
) -> list[TracePoint]:
    """(1/(nk)) ln mu(B_rho) along a sequence of ambient dimensions.

    For each n the radius is rho = rho_over_sqrtk * r(n), which keeps the
    angle beta, and hence the density shape, fixed in n. The asymptotic
    prediction is ln(rho_over_sqrtk).

    With ``strict`` a zero estimate raises InsufficientSamples; otherwise the
    row is flagged and its normalized log is -inf.
    """
    if not 0 < rho_over_sqrtk < 1:
        raise DomainError("rho_over_sqrtk must lie in (0, 1)")
    estimators = {"weighted": estimate_mu_ball_weighted, "uniform": estimate_mu_ball}
    if method not in estimators:
        raise DomainError(f"unknown method {method!r}")
    seq = _random.as_seed_sequence(rng)
    out = []
    for i, n in enumerate(n_list):
        if not n > 2 * k:
            raise DomainError(f"need n > 2k, got n={n}, k={k}")
        r = embedding_radius(k, n)
        params = params_for_radius(rho_over_sqrtk * r, r)
        est = estimators[method](params, k, n, samples, _random.child(seq, i), threads=threads)
        if est.mean <= 0:
            if strict:
                raise InsufficientSamples(f"no sample landed in the ball for n={n}")
            out.append(TracePoint(n, samples, 0.0, est.stderr, -math.inf, True))
            continue
        out.append(TracePoint(n, samples, est.mean, est.stderr, math.log(est.mean) / (n * k)))
    return out


@dataclass(frozen=True)
class CountingReport:
    M: int
    k: int
    n: int
    delta: float
    mu_hat: float
    stderr: float
    samples: int

    @property
    def lhs(self) -> float:
        return self.M * self.mu_hat

    @property
    def threshold(self) -> float:
        return 1 + 3 * self.M * self.stderr

    @property
    def passed(self) -> bool:
        return self.lhs <= self.threshold

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "k": self.k,
            "n": self.n,
            "delta": self.delta,
            "mu_hat": self.mu_hat,
            "stderr": self.stderr,
            "samples": self.samples,
            "M_mu_hat": self.lhs,
            "threshold": self.threshold,
            "passed": self.passed,
        }


DELTA_CAP = 0.99


def counting_bound_check(code, samples: int, rng=0, delta: float | None = None, threads: int = 1):
    """Check M * mu(B_rho(delta)) <= 1 for a code, up to 3 combined standard errors.

    ``delta`` defaults to the code's minimum distance, capped at
    ``DELTA_CAP * r`` because the density degenerates at delta = r. Any
    smaller positive value is also a valid distance for the code. A
    single-plane code passes without sampling, since the density never
    exceeds 1.
    """
    M, k, n = code.M, code.k, code.n
    if M == 1:
        return CountingReport(1, k, n, math.inf, 0.0, 0.0, 0)
    r = embedding_radius(k, n)
    d = min(code.min_distance, DELTA_CAP * r) if delta is None else float(delta)
    if d > code.min_distance + 1e-12:
        raise DomainError("delta exceeds the code's minimum distance")
    params = density_params(d, r)
    est = estimate_mu_ball(params, k, n, samples, rng, threads=threads)
    return CountingReport(M, k, n, d, est.mean, est.stderr, samples)

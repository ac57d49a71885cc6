"""Constructing Grassmannian codes and comparing them with the bounds."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _random, bounds
from .core import (
    Subspace,
    pairwise_sq_distances,
    read_subspace,
    write_subspace,
)
from .errors import DomainError
from .volume import sample_uniform_subspace


@dataclass(frozen=True, eq=False)
class Code:
    """A finite set of planes in G(k, n). ``min_distance`` is +inf when M = 1."""

    planes: tuple
    min_distance: float = field(init=False)

    def __post_init__(self):
        planes = tuple(self.planes)
        if not planes:
            raise DomainError("a code needs at least one plane")
        k, n = planes[0].k, planes[0].n
        if any(p.k != k or p.n != n for p in planes):
            raise DomainError("all planes of a code must share (k, n)")
        object.__setattr__(self, "planes", planes)
        if len(planes) == 1:
            dmin = math.inf
        else:
            d2 = pairwise_sq_distances(self.bases())
            iu = np.triu_indices(len(planes), k=1)
            dmin = float(np.sqrt(d2[iu].min()))
        object.__setattr__(self, "min_distance", dmin)

    @property
    def M(self) -> int:
        return len(self.planes)

    @property
    def k(self) -> int:
        return self.planes[0].k

    @property
    def n(self) -> int:
        return self.planes[0].n

    @property
    def min_sq_distance(self) -> float:
        return self.min_distance**2

    def bases(self) -> np.ndarray:
        return np.stack([p.basis for p in self.planes])

    @classmethod
    def from_bases(cls, bases, allow_large_k: bool = False) -> "Code":
        return cls(tuple(Subspace(b, allow_large_k=allow_large_k) for b in bases))

    def to_text(self) -> str:
        buf = io.StringIO()
        write_code(self, buf)
        return buf.getvalue()


def write_code(code: Code, fh) -> None:
    fh.write(f"{code.M} {code.k} {code.n}\n")
    for p in code.planes:
        write_subspace(p, fh)


def read_code(fh, allow_large_k: bool = False) -> Code:
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    header = ""
    for line in fh:
        if line.strip():
            header = line
            break
    M, k, n = (int(t) for t in header.split())
    planes = tuple(read_subspace(fh, allow_large_k=allow_large_k) for _ in range(M))
    if any(p.k != k or p.n != n for p in planes):
        raise DomainError(f"plane dimensions disagree with header {M} {k} {n}")
    return Code(planes)


def random_code(M: int, k: int, n: int, rng=0, allow_large_k: bool = False) -> Code:
    if M < 1:
        raise DomainError("M must be positive")
    if not allow_large_k and not 2 * k < n:
        raise DomainError(f"need k < n/2, got k={k}, n={n}")
    g = _random.generator(rng)
    return Code(tuple(sample_uniform_subspace(n, k, g, allow_large_k) for _ in range(M)))


def greedy_packing(
    delta: float, k: int, n: int, max_trials: int = 1000, rng=0, allow_large_k: bool = False
) -> Code:
    """Keep random planes at distance >= delta from everything kept so far.

    Stops after ``max_trials`` consecutive rejections.
    """
    if not 0 < delta < math.sqrt(k):
        raise DomainError(f"need 0 < delta < sqrt(k), got {delta}")
    g = _random.generator(rng)
    first = sample_uniform_subspace(n, k, g, allow_large_k)
    kept = [first.basis]
    stack = first.basis[None]
    misses = 0
    d2_min = delta**2
    while misses < max_trials:
        cand = sample_uniform_subspace(n, k, g, allow_large_k).basis
        overlap = np.einsum("ki,mli->mkl", cand, stack)
        d2 = k - np.sum(overlap**2, axis=(1, 2))
        if np.all(d2 >= d2_min):
            kept.append(cand)
            stack = np.stack(kept)
            misses = 0
        else:
            misses += 1
    return Code.from_bases(kept, allow_large_k)


def _orthonormalize_stack(x: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(x.transpose(0, 2, 1))
    return q.transpose(0, 2, 1)


@dataclass
class OptimizationResult:
    code: Code
    converged: bool
    best_history: list = field(repr=False)
    iterations: int = 0


def default_step_schedule(i: int, iterations: int) -> float:
    return 0.1 * 0.01 ** (i / max(iterations - 1, 1))


def optimize_code(
    code: Code,
    iterations: int = 2000,
    step_schedule=None,
    smoothing: float = 0.05,
    final_smoothing: float = 1e-4,
    tol: float = 1e-12,
) -> OptimizationResult:
    """Push a code towards larger minimum distance.

    Gradient ascent on the soft minimum -t log sum exp(-d_ij^2 / t) over
    pairs, with t annealed geometrically from ``smoothing`` to
    ``final_smoothing``. Every generator matrix is re-orthonormalized after
    each step. The iterate with the largest hard minimum is returned, so the
    result is never worse than the input.

    ``step_schedule(i, iterations)`` gives the step length; by default it
    decays geometrically from 0.1 to 0.001.
    """
    if code.M < 2:
        raise DomainError("optimizing needs at least two planes")
    step = step_schedule or default_step_schedule
    x = code.bases().copy()
    M, k, _ = x.shape
    iu = np.triu_indices(M, k=1)
    best_x = x.copy()
    best = code.min_sq_distance
    history = []
    stalled = 0
    converged = False
    it = 0
    for it in range(iterations):
        frac = it / max(iterations - 1, 1)
        t = smoothing * (final_smoothing / smoothing) ** frac
        overlaps = np.einsum("aki,bli->abkl", x, x)
        d2 = k - np.sum(overlaps**2, axis=(2, 3))
        pair_d2 = d2[iu]
        current = float(pair_d2.min())
        if current > best + tol:
            best, best_x = current, x.copy()
            stalled = 0
        else:
            stalled += 1
        history.append(best)
        if stalled >= 200 and frac > 0.5:
            converged = True
            break
        w = np.zeros((M, M))
        logits = -(pair_d2 - current) / t
        weights = np.exp(logits - logits.max())
        w[iu] = weights / weights.sum()
        w = w + w.T
        # d(d_ab^2)/dX_a = -2 (X_a X_b^T) X_b
        grad = -2.0 * np.einsum("ab,abkl,bli->aki", w, overlaps, x)
        if not np.any(grad):
            converged = True
            break
        x = _orthonormalize_stack(x + step(it, iterations) * grad)
    allow = 2 * k >= code.n
    return OptimizationResult(Code.from_bases(best_x, allow), converged, history, it + 1)


def best_of_restarts(
    M: int,
    k: int,
    n: int,
    restarts: int = 20,
    iterations: int = 2000,
    rng=0,
    allow_large_k: bool = False,
    **kwargs,
) -> OptimizationResult:
    """Optimize ``restarts`` random codes, each from its own derived seed, and keep the best."""
    seq = _random.as_seed_sequence(rng)
    best = None
    for i in range(restarts):
        start = random_code(M, k, n, _random.child(seq, i), allow_large_k)
        res = optimize_code(start, iterations, **kwargs)
        if best is None or res.code.min_distance > best.code.min_distance:
            best = res
    return best


# -- reference configurations --------------------------------------------------


def three_lines_code() -> Code:
    """Three lines in R^2 at mutual angles of 60 degrees."""
    angles = np.array([0.0, np.pi / 3, 2 * np.pi / 3])
    bases = np.stack([np.cos(angles), np.sin(angles)], axis=1)[:, None, :]
    return Code.from_bases(bases, allow_large_k=True)


def icosahedron_lines_code() -> Code:
    """The six diagonals of the regular icosahedron, as lines in R^3."""
    phi = (1 + math.sqrt(5)) / 2
    v = np.array(
        [[0, 1, phi], [0, 1, -phi], [1, phi, 0], [1, -phi, 0], [phi, 0, 1], [-phi, 0, 1]],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return Code.from_bases(v[:, None, :])


def bound_report(code: Code) -> dict:
    """Achieved distance of a code against the Rankin bound and the rate curves.

    The rate comparison uses ln(M)/n, while the curves are n -> infinity
    limits, so at finite n it is advisory only.
    """
    M, k, n = code.M, code.k, code.n
    report = {"M": M, "k": k, "n": n}
    if M == 1:
        report.update(min_distance="inf", achieved_sq_distance="inf")
        return report
    d = code.min_distance
    d2 = d * d
    rankin = bounds.rankin_sq_bound(M, k, n)
    report.update(
        min_distance=d,
        achieved_sq_distance=d2,
        rankin_sq_bound=rankin,
        gap=rankin - d2,
    )
    rates = {"empirical_rate": math.log(M) / n, "advisory": "finite-n rate vs asymptotic bounds"}
    if 0 < d <= math.sqrt(k):
        rates.update(
            r_gv=bounds.rate_gv(d, k),
            r_rankin=bounds.rate_rankin_new(d, k),
            r_lp=bounds.rate_lp(d, k),
            r_hamming=bounds.rate_hamming(d, k),
        )
    report["rates"] = rates
    return report

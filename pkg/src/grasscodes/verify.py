"""Randomized verification campaigns driven by the ``verify`` subcommand.

Each campaign returns a plain dict with its worst-case statistics and a
``passed`` flag.
"""

from __future__ import annotations

import math

import numpy as np

from . import _random
from .blichfeldt import (
    _adversarial_points,
    _random_campaign_code,
    params_for_sphere_distance,
    quadratic_inequality_lhs,
    reduced_inequality_slack,
    sigma,
    verify_density,
)
from .bounds import rankin_sq_bound
from .core import chordal_distance, embed, embedding_radius, projection_matrix
from .packing import random_code
from .volume import counting_bound_check, sample_uniform_subspace

ISOMETRY_SHAPES = ((1, 4), (2, 6), (3, 10), (5, 20))
COUNTING_SHAPES = ((1, 4), (2, 6), (2, 8))


def verify_isometry(trials: int = 1000, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    worst_scaled = 0.0
    worst_norm = 0.0
    for i in range(trials):
        k, n = ISOMETRY_SHAPES[i % len(ISOMETRY_SHAPES)]
        p = sample_uniform_subspace(n, k, rng)
        q = sample_uniform_subspace(n, k, rng)
        d2 = chordal_distance(p, q) ** 2
        half = 0.5 * np.sum((projection_matrix(p) - projection_matrix(q)) ** 2)
        worst_scaled = max(worst_scaled, float(abs(d2 - half)) / k)
        r = embedding_radius(k, n)
        worst_norm = max(worst_norm, abs(embed(p).norm - r), abs(embed(q).norm - r))
    return {
        "trials": trials,
        "max_violation_over_k": worst_scaled,
        "max_norm_error": worst_norm,
        "seed": seed,
        "passed": worst_scaled <= 1e-9 and worst_norm <= 1e-10,
    }


def verify_quadratic(trials: int = 10_000, seed: int = 0, points_per_code: int = 100) -> dict:
    """Quadratic inequality on distances to nearby codewords, and its reduced form."""
    rng = np.random.default_rng(seed)
    max_lhs = -math.inf
    min_slack = math.inf
    done = 0
    while done < trials:
        code = _random_campaign_code(rng, 20, 50)
        dt = code.min_distance
        if len(code) < 2 or not dt < math.sqrt(2):
            continue
        params = params_for_sphere_distance(dt)
        batch = min(points_per_code, trials - done)
        for z in _adversarial_points(rng, code, batch):
            dist = np.linalg.norm(code.points - z, axis=1)
            near = dist <= params.cap_radius_P
            m = int(near.sum())
            if m:
                max_lhs = max(max_lhs, quadratic_inequality_lhs(code.points[near], z, dt, params))
                alpha_z = float(np.sum(sigma(dist, params)))
                min_slack = min(min_slack, reduced_inequality_slack(alpha_z, m, params))
        done += batch
    return {
        "trials": trials,
        "max_quadratic_lhs": max_lhs,
        "min_reduced_slack": min_slack,
        "seed": seed,
        "passed": max_lhs <= 1e-9 and min_slack >= -1e-9,
    }


def random_valid_code(rng: np.random.Generator, shapes=COUNTING_SHAPES):
    k, n = shapes[int(rng.integers(len(shapes)))]
    M = int(rng.integers(2, 21))
    return random_code(M, k, n, rng)


def verify_counting(trials: int = 200, seed: int = 0, samples: int = 20_000, threads: int = 1) -> dict:
    """Counting bound M mu(B_rho) <= 1 on random codes.

    A code whose distance exceeds the embedding radius is checked at the
    capped distance used by :func:`counting_bound_check`, which it also has.
    """
    seq = _random.as_seed_sequence(seed)
    rng = np.random.default_rng(_random.child(seq, 0))
    worst = -math.inf
    failures = 0
    rankin_violations = 0
    for i in range(trials):
        code = random_valid_code(rng)
        rep = counting_bound_check(code, samples, _random.child(seq, 1, i), threads=threads)
        worst = max(worst, rep.lhs - rep.threshold)
        failures += not rep.passed
        rankin_violations += code.min_sq_distance > rankin_sq_bound(code.M, code.k, code.n) + 1e-9
    return {
        "trials": trials,
        "samples_per_code": samples,
        "max_excess": worst,
        "failures": failures,
        "rankin_violations": rankin_violations,
        "seed": seed,
        "passed": failures == 0 and rankin_violations == 0,
    }


def run_suite(name: str, trials: int, seed: int, threads: int = 1) -> dict:
    if name == "isometry":
        return verify_isometry(trials, seed)
    if name == "density":
        return verify_density(trials, seed=seed).as_dict()
    if name == "rankin-ineq":
        return verify_quadratic(trials, seed)
    if name == "counting":
        return verify_counting(trials, seed, threads=threads)
    raise ValueError(f"unknown suite {name!r}")


SUITES = ("isometry", "density", "rankin-ineq", "counting")

import math

import numpy as np
import pytest
from scipy import stats

from grasscodes.blichfeldt import density_params, tau
from grasscodes.core import Subspace, embedding_radius, principal_angles, projection_matrix
from grasscodes.errors import DegenerateBeta, DomainError, InsufficientSamples
from grasscodes.packing import random_code, three_lines_code
from grasscodes.volume import (
    TRACE_COLUMNS,
    CountingReport,
    counting_bound_check,
    estimate_mu_ball,
    estimate_mu_ball_weighted,
    lemma2_exponent_trace,
    omega_unnormalized,
    params_for_radius,
    sample_sq_sines,
    sample_uniform_subspace,
)

from oracles import mu_quadrature_k1_n2, mu_quadrature_k2, omega_cell_masses

R12 = embedding_radius(1, 2)


def fixed_plane(k, n):
    return Subspace(np.eye(n)[:k], allow_large_k=True)


# -- omega -----------------------------------------------------------------------


def test_omega_repeated_angles_vanish():
    assert omega_unnormalized([0.9, 0.9], 2, 5) == 0.0
    assert omega_unnormalized([1.2, 0.7, 0.7], 3, 8) == 0.0


@pytest.mark.parametrize("n", [3, 4, 7])
def test_omega_k1_is_sine_power(n):
    for t in [0.1, 0.8, 1.5]:
        assert omega_unnormalized([t], 1, n) == pytest.approx(math.sin(t) ** (n - 2))


def test_omega_zero_smallest_angle():
    assert omega_unnormalized([1.0, 0.0], 2, 5) == 0.0


def test_omega_general_value():
    t1, t2 = 1.1, 0.4
    s1, s2 = math.sin(t1), math.sin(t2)
    expected = (s1 * s2) ** 3 * (s1**2 - s2**2)
    assert omega_unnormalized([t1, t2], 2, 7) == pytest.approx(expected)


def test_omega_vectorized():
    th = np.array([[1.1, 0.4], [0.9, 0.2]])
    out = omega_unnormalized(th, 2, 6)
    assert out.shape == (2,)
    assert out[1] == pytest.approx(omega_unnormalized(th[1], 2, 6))


@pytest.mark.parametrize("k,n", [(2, 4), (3, 5)])
def test_omega_domain(k, n):
    with pytest.raises(DomainError):
        omega_unnormalized([0.5] * k, k, n)


# -- uniform sampling ------------------------------------------------------------


@pytest.mark.parametrize("k,n", [(1, 3), (2, 5), (2, 7)])
def test_mean_projector_is_scaled_identity(k, n):
    g = np.random.default_rng(0)
    P = np.array([projection_matrix(sample_uniform_subspace(n, k, g)) for _ in range(10_000)])
    mean = P.mean(axis=0)
    stderr = P.std(axis=0, ddof=1) / math.sqrt(len(P))
    dev = np.abs(mean - (k / n) * np.eye(n))
    # off-diagonal entries have nonzero spread, diagonal ones too unless k = n
    assert np.all(dev <= 5 * stderr + 1e-15)


def test_sampling_is_deterministic():
    a = sample_uniform_subspace(9, 3, 42)
    b = sample_uniform_subspace(9, 3, 42)
    assert np.array_equal(a.basis, b.basis)
    assert not np.array_equal(a.basis, sample_uniform_subspace(9, 3, 43).basis)


def test_sampling_respects_size_policy():
    with pytest.raises(Exception):
        sample_uniform_subspace(4, 2, 0)
    assert sample_uniform_subspace(4, 2, 0, allow_large_k=True).k == 2


def test_lines_in_plane_have_uniform_angle():
    g = np.random.default_rng(1)
    p0 = fixed_plane(1, 2)
    theta = np.array(
        [principal_angles(p0, sample_uniform_subspace(2, 1, g, allow_large_k=True)).theta[0] for _ in range(5000)]
    )
    res = stats.kstest(theta, stats.uniform(0, math.pi / 2).cdf)
    assert res.pvalue > 0.01


def _chi_square_pvalue(observed, expected):
    # merge sparse cells so every expected count is at least 5
    order = np.argsort(expected)
    obs, exp = observed[order], expected[order]
    o_acc = e_acc = 0.0
    merged_o, merged_e = [], []
    for o, e in zip(obs, exp):
        o_acc += o
        e_acc += e
        if e_acc >= 5:
            merged_o.append(o_acc)
            merged_e.append(e_acc)
            o_acc = e_acc = 0.0
    merged_o[-1] += o_acc
    merged_e[-1] += e_acc
    merged_e = np.array(merged_e) * np.sum(merged_o) / np.sum(merged_e)
    return stats.chisquare(merged_o, merged_e).pvalue


@pytest.mark.slow
def test_omega_consistency_lines_in_space():
    samples, bins = 100_000, 20
    g = np.random.default_rng(2)
    p0 = fixed_plane(1, 3)
    theta = np.array([principal_angles(p0, sample_uniform_subspace(3, 1, g)).theta[0] for _ in range(samples)])
    edges = np.linspace(0, math.pi / 2, bins + 1)
    observed = np.histogram(theta, edges)[0].astype(float)
    expected = omega_cell_masses(1, 3, edges) * samples
    assert _chi_square_pvalue(observed, expected) > 0.01


@pytest.mark.slow
def test_omega_consistency_planes_in_five_space():
    samples, bins = 100_000, 8
    g = np.random.default_rng(3)
    p0 = fixed_plane(2, 5)
    theta = np.array([principal_angles(p0, sample_uniform_subspace(5, 2, g)).theta for _ in range(samples)])
    edges = np.linspace(0, math.pi / 2, bins + 1)
    masses = omega_cell_masses(2, 5, edges)
    i = np.clip(np.searchsorted(edges, theta[:, 0], side="right") - 1, 0, bins - 1)
    j = np.clip(np.searchsorted(edges, theta[:, 1], side="right") - 1, 0, bins - 1)
    keys = sorted(masses)
    index = {key: t for t, key in enumerate(keys)}
    observed = np.zeros(len(keys))
    for a, b in zip(i, j):
        observed[index[(a, b)]] += 1
    expected = np.array([masses[key] for key in keys]) * samples
    assert _chi_square_pvalue(observed, expected) > 0.01


@pytest.mark.parametrize("k,n", [(1, 2), (2, 5), (3, 9)])
def test_batched_sines_match_principal_angles(k, n):
    # the batched sampler must agree with the SVD angles on the same Gaussian draws
    seed = 11
    sum_sq, log_prod = sample_sq_sines(np.random.default_rng(seed), 50, k, n)
    draws = np.random.default_rng(seed).standard_normal((50, k, n))
    p0 = fixed_plane(k, n)
    for t in range(50):
        s = np.sin(principal_angles(p0, Subspace(draws[t], allow_large_k=True)).theta)
        assert sum_sq[t] == pytest.approx(np.sum(s**2), abs=1e-10)
        assert log_prod[t] == pytest.approx(np.sum(np.log(s**2)), abs=1e-8)


# -- plain estimator ---------------------------------------------------------------


@pytest.mark.parametrize("frac", [0.2, 0.5, 0.85])
def test_mu_matches_quadrature_lines_in_plane(frac):
    params = params_for_radius(frac * R12, R12)
    est = estimate_mu_ball(params, 1, 2, 200_000, rng=int(100 * frac))
    exact = mu_quadrature_k1_n2(params)
    assert abs(est.mean - exact) <= 3 * est.stderr
    assert est.stderr > 0


def test_estimate_fields():
    params = density_params(0.5, embedding_radius(2, 6))
    est = estimate_mu_ball(params, 2, 6, 1000, rng=0)
    assert est.samples == 1000 and est.k == 2 and est.n == 6
    assert est.rho == params.rho
    assert est.mean >= 0 and est.stderr >= 0


def test_mean_bounded_by_peak_density():
    # nearly the whole space inside the ball for n = 3
    r = embedding_radius(1, 3)
    params = params_for_radius(0.98 * r, r)
    est = estimate_mu_ball(params, 1, 3, 20_000, rng=1)
    assert est.mean <= tau(0.0, params)


def test_doubling_samples_scales_stderr():
    params = params_for_radius(0.5 * R12, R12)
    ratios = []
    for rep in range(10):
        a = estimate_mu_ball(params, 1, 2, 4000, rng=rep)
        b = estimate_mu_ball(params, 1, 2, 8000, rng=1000 + rep)
        ratios.append(b.stderr / a.stderr)
    assert np.mean(ratios) == pytest.approx(1 / math.sqrt(2), rel=0.2)


def test_mu_non_decreasing_in_rho_below_peak():
    # coupled sampling: the same seed gives the same planes for every rho
    r = embedding_radius(2, 6)
    means = [estimate_mu_ball(params_for_radius(f * r, r), 2, 6, 20_000, rng=5).mean for f in np.linspace(0.3, 0.8, 6)]
    assert all(a <= b for a, b in zip(means, means[1:]))


def test_mu_falls_near_full_radius():
    # the density flattens as beta -> pi/2, so the mass is not monotone all the way to r
    peak = mu_quadrature_k1_n2(params_for_radius(0.75 * R12, R12))
    edge = mu_quadrature_k1_n2(params_for_radius(0.99 * R12, R12))
    assert edge < peak
    est = estimate_mu_ball(params_for_radius(0.99 * R12, R12), 1, 2, 100_000, rng=6)
    assert abs(est.mean - edge) <= 3 * est.stderr


def test_thread_count_does_not_change_estimate():
    params = params_for_radius(0.6 * R12, R12)
    one = estimate_mu_ball(params, 1, 2, 70_000, rng=9, threads=1)
    four = estimate_mu_ball(params, 1, 2, 70_000, rng=9, threads=4)
    assert one == four


def test_estimator_guards():
    with pytest.raises(DomainError):
        estimate_mu_ball(density_params(0.5, 1.0), 1, 3, 50)
    with pytest.raises(DegenerateBeta):
        estimate_mu_ball(density_params(1.0, 1.0), 1, 3, 1000)


# -- reweighted estimator --------------------------------------------------------


@pytest.mark.parametrize("n,frac", [(6, 0.5), (8, 0.5), (12, 0.7)])
def test_weighted_matches_quadrature(n, frac):
    r = embedding_radius(2, n)
    params = params_for_radius(frac * r, r)
    est = estimate_mu_ball_weighted(params, 2, n, 400_000, rng=n)
    exact = mu_quadrature_k2(params, n)
    assert abs(est.mean - exact) <= 3 * est.stderr
    assert est.stderr < 0.05 * exact


def test_weighted_with_full_dof_is_plain_estimator():
    r = embedding_radius(2, 7)
    params = params_for_radius(0.6 * r, r)
    plain = estimate_mu_ball(params, 2, 7, 5000, rng=3)
    weighted = estimate_mu_ball_weighted(params, 2, 7, 5000, rng=3, proposal_dof=5)
    assert weighted.mean == pytest.approx(plain.mean, rel=1e-12)
    assert weighted.stderr == pytest.approx(plain.stderr, rel=1e-9)


def test_weighted_agrees_with_plain_where_both_work():
    r = embedding_radius(2, 8)
    params = params_for_radius(0.6 * r, r)
    plain = estimate_mu_ball(params, 2, 8, 400_000, rng=4)
    weighted = estimate_mu_ball_weighted(params, 2, 8, 400_000, rng=5)
    gap = abs(plain.mean - weighted.mean)
    assert gap <= 3 * math.hypot(plain.stderr, weighted.stderr)


def test_weighted_proposal_range():
    params = density_params(0.3, embedding_radius(2, 8))
    with pytest.raises(DomainError):
        estimate_mu_ball_weighted(params, 2, 8, 1000, proposal_dof=1)
    with pytest.raises(DomainError):
        estimate_mu_ball_weighted(params, 2, 8, 1000, proposal_dof=7)


def test_params_for_radius_inverts_rho():
    for frac in [0.1, 0.5, 0.95]:
        p = params_for_radius(frac * 1.3, 1.3)
        assert p.rho == pytest.approx(frac * 1.3, rel=1e-12)
    with pytest.raises(DomainError):
        params_for_radius(1.3, 1.3)


# -- exponent trace ----------------------------------------------------------------


def test_trace_is_deterministic():
    a = lemma2_exponent_trace(0.5, 2, [8, 12], 20_000, rng=7)
    b = lemma2_exponent_trace(0.5, 2, [8, 12], 20_000, rng=7)
    assert a == b
    assert [pt.n for pt in a] == [8, 12]
    assert TRACE_COLUMNS == ("n", "samples", "mu_hat", "stderr", "normalized_log")


def test_trace_normalization():
    (pt,) = lemma2_exponent_trace(0.5, 2, [8], 20_000, rng=1)
    assert pt.normalized_log == pytest.approx(math.log(pt.mu_hat) / 16)


def test_trace_near_unit_ratio_approaches_zero_from_below():
    # at fixed n the density flattens as the ratio nears 1, so the approach to 0 is along n
    values = [pt.normalized_log for pt in lemma2_exponent_trace(0.95, 2, [10, 30, 100], 100_000, rng=2)]
    assert all(v < 0 for v in values)
    assert values[0] < values[1] < values[2]
    assert values[2] > -0.1


def test_trace_uniform_method_misses_tiny_ball():
    with pytest.raises(InsufficientSamples):
        lemma2_exponent_trace(0.5, 2, [32], 1000, rng=0, method="uniform")
    (pt,) = lemma2_exponent_trace(0.5, 2, [32], 1000, rng=0, method="uniform", strict=False)
    assert pt.insufficient and pt.normalized_log == -math.inf


@pytest.mark.parametrize("ratio", [0.0, 1.0, 1.5])
def test_trace_ratio_domain(ratio):
    with pytest.raises(DomainError):
        lemma2_exponent_trace(ratio, 2, [8], 1000)


def test_trace_needs_n_above_2k():
    with pytest.raises(DomainError):
        lemma2_exponent_trace(0.5, 2, [4], 1000)


# -- counting bound --------------------------------------------------------------


def test_single_plane_code_passes():
    rep = counting_bound_check(random_code(1, 2, 6, rng=0), 1000)
    assert rep.passed and rep.samples == 0


def test_three_lines_code_passes():
    code = three_lines_code()
    assert code.min_sq_distance == pytest.approx(0.75)
    rep = counting_bound_check(code, 100_000, rng=1)
    assert rep.passed
    assert rep.delta == pytest.approx(0.99 * R12)


def test_counting_rejects_too_large_delta():
    code = random_code(3, 1, 4, rng=2)
    with pytest.raises(DomainError):
        counting_bound_check(code, 1000, delta=code.min_distance * 1.1)


@pytest.mark.parametrize("k,n", [(1, 4), (2, 6), (2, 8)])
def test_random_codes_pass(k, n):
    rng = np.random.default_rng(k * 100 + n)
    for _ in range(5):
        code = random_code(int(rng.integers(2, 15)), k, n, rng)
        rep = counting_bound_check(code, 20_000, rng)
        assert rep.passed
        assert set(rep.as_dict()) >= {"M", "k", "n", "delta", "mu_hat", "stderr", "passed"}


def test_check_detects_overfull_claim():
    # 200 lines in R^4 cannot all be 0.5 apart; the report for that claim must fail
    est = estimate_mu_ball(density_params(0.5, embedding_radius(1, 4)), 1, 4, 20_000, rng=4)
    rep = CountingReport(200, 1, 4, 0.5, est.mean, est.stderr, est.samples)
    assert rep.lhs > 1
    assert not rep.passed

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prores import bregman as br
from prores import errors
from prores import market as mkt
from prores import potential as pot
from conftest import random_interior_state


# ---------------------------------------------------------------------------
# KL divergence

def test_kl_identity_is_zero():
    x = np.array([0.3, 0.7])
    assert br.kl(x, x) == 0.0


def test_kl_single_term():
    assert br.kl(np.array([1.0, 0.0]), np.array([0.5, 0.5])) == pytest.approx(
        math.log(2.0), rel=1e-15)


def test_kl_two_term_frozen_value():
    # 0.75 ln 3 + 0.25 ln(1/3) = 0.5 ln 3
    got = br.kl(np.array([0.75, 0.25]), np.array([0.25, 0.75]))
    assert got == pytest.approx(0.5 * math.log(3.0), rel=1e-15)


def test_kl_support_mismatch():
    with pytest.raises(errors.SupportMismatch):
        br.kl(np.array([0.5, 0.5]), np.array([1.0, 0.0]))


def test_kl_requires_equal_totals():
    with pytest.raises(ValueError):
        br.kl(np.array([1.0, 1.0]), np.array([0.5, 0.5]))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10**6))
def test_kl_nonnegative_on_random_simplex_pairs(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(n))
    y = np.maximum(rng.dirichlet(np.ones(n)), 1e-12)
    y = y / y.sum()
    assert br.kl(x, y) >= 0.0


def test_kl_nonnegativity_bulk():
    rng = np.random.default_rng(0)
    vals = []
    for _ in range(10_000):
        x = rng.dirichlet(np.ones(4))
        y = np.maximum(rng.dirichlet(np.ones(4)), 1e-12)
        vals.append(br.kl(x, y / y.sum()))
    assert min(vals) >= 0.0


def test_composite_divergence_dominates_price_divergence(rng):
    # sum_i KL(b_i || b'_i) >= KL(p || p') for every spending pair
    market = mkt.generate_random(4, 5, "mixed", seed=6)
    for _ in range(1000):
        b = random_interior_state(market, rng)
        b2 = random_interior_state(market, rng)
        total = sum(br.kl(b[i], b2[i]) for i in range(market.m))
        assert total >= br.kl(b.sum(axis=0), b2.sum(axis=0)) - 1e-12


# ---------------------------------------------------------------------------
# entropic mirror step

def test_md_step_zero_gradient_is_identity():
    cur = np.array([0.2, 0.5, 0.3])
    out = br.entropic_md_step(np.zeros(3), cur, 0.7, 1.0)
    assert np.allclose(out, cur, atol=1e-15)


def test_md_step_constant_gradient_is_identity():
    cur = np.array([0.2, 0.5, 0.3])
    out = br.entropic_md_step(np.full(3, 4.2), cur, 0.7, 1.0)
    assert np.allclose(out, cur, rtol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 7), st.integers(0, 10**6))
def test_md_step_budget_and_positivity(n, seed):
    rng = np.random.default_rng(seed)
    budget = float(rng.uniform(0.2, 3.0))
    cur = rng.dirichlet(np.ones(n)) * budget
    cur = np.maximum(cur, 1e-9 * budget)
    cur = budget * cur / cur.sum()
    out = br.entropic_md_step(rng.standard_normal(n), cur, float(rng.uniform(0.05, 3.0)), budget)
    assert abs(out.sum() - budget) <= 1e-12 * budget
    assert np.all(out > 0)


def test_md_step_preserves_zeros():
    cur = np.array([0.0, 0.6, 0.4])
    out = br.entropic_md_step(np.array([-10.0, 0.0, 0.0]), cur, 1.0, 1.0)
    assert out[0] == 0.0


def test_md_step_matches_argmin_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = 5
        budget = 2.0
        cur = rng.dirichlet(np.ones(n)) * budget
        g = rng.standard_normal(n)
        scale = float(rng.uniform(0.1, 2.0))
        closed = br.entropic_md_step(g, cur, scale, budget)

        def obj(x, g=g, cur=cur, scale=scale):
            pos = x > 0
            return float(g @ x + (x[pos] @ np.log(x[pos] / cur[pos])) / scale)

        def grad(x, g=g, cur=cur, scale=scale):
            with np.errstate(divide="ignore"):
                return g + (np.log(x / cur) + 1.0) / scale

        got = br.numeric_argmin_oracle(obj, grad, budget, start=cur, tol=1e-10)
        assert np.max(np.abs(closed - got)) < 1e-8


# ---------------------------------------------------------------------------
# numeric argmin oracle on its own

def test_oracle_kl_objective_returns_target():
    u = np.array([0.1, 0.4, 0.2, 0.3])

    def obj(x):
        pos = x > 0
        return float(x[pos] @ np.log(x[pos] / u[pos]))

    def grad(x):
        with np.errstate(divide="ignore"):
            return np.log(x / u) + 1.0

    got = br.numeric_argmin_oracle(obj, grad, 1.0, n=4, tol=1e-12)
    assert np.max(np.abs(got - u)) < 1e-10


def test_oracle_linear_objective_reaches_vertex():
    g = np.array([3.0, 1.0, 2.0, 5.0])
    got = br.numeric_argmin_oracle(lambda x: float(g @ x), lambda x: g, 1.0, n=4,
                                   tol=1e-10)
    assert got[1] == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.delete(got, 1)) < 1e-9


def test_oracle_flags_nonconvergence():
    u = np.array([0.05, 0.6, 0.35])

    def obj(x):
        pos = x > 0
        return float(x[pos] @ np.log(x[pos] / u[pos]))

    def grad(x):
        with np.errstate(divide="ignore"):
            return np.log(x / u) + 1.0

    with pytest.raises(errors.NoConvergence):
        br.numeric_argmin_oracle(obj, grad, 1.0, n=3, tol=1e-14, max_iters=2)


# ---------------------------------------------------------------------------
# strong Bregman probe

def _phi_probe(market):
    return lambda b: (pot.phi(market, b).phi, pot.grad_phi(market, b))


def test_probe_substitutes_potential_in_theory_interval():
    market = mkt.generate_random(4, 4, "substitutes:0.4,0.6", seed=3)
    kernel = br.EntropyKernel(gamma=1.0 / market.rhos)
    sampler = br.dirichlet_spending_sampler(market.budgets, market.goods)
    est = br.strong_bregman_probe(_phi_probe(market), kernel, sampler, 300,
                                  np.random.default_rng(5))
    sigma = float(np.min(1.0 - market.rhos))
    assert est.sample_count == 300
    assert sigma - 1e-9 <= est.sigma_hat <= est.L_hat <= 1.0 + 1e-9


def test_probe_complements_negated_potential():
    market = mkt.generate_random(4, 4, "complements:-3,-0.5", seed=3)
    kernel = br.EntropyKernel(gamma=(market.rhos - 1.0) / market.rhos)
    sampler = br.dirichlet_spending_sampler(market.budgets, market.goods)

    def f(b):
        return -pot.phi(market, b).phi, -pot.grad_phi(market, b)

    est = br.strong_bregman_probe(f, kernel, sampler, 300, np.random.default_rng(5))
    sigma = float(np.min(1.0 / (1.0 - market.rhos)))
    assert sigma - 1e-9 <= est.sigma_hat <= est.L_hat <= 1.0 + 1e-9


def test_probe_kernel_generator_ratio_is_one():
    kernel = br.EntropyKernel(gamma=np.array([1.0, 2.0, 0.5]))
    sampler = br.dirichlet_spending_sampler(np.array([1.0, 2.0, 0.7]), 4)
    est = br.strong_bregman_probe(lambda b: kernel.generator(b), kernel, sampler,
                                  100, np.random.default_rng(1))
    assert est.sigma_hat == pytest.approx(1.0, abs=1e-9)
    assert est.L_hat == pytest.approx(1.0, abs=1e-9)


def test_probe_skips_degenerate_pairs():
    kernel = br.EntropyKernel(gamma=np.ones(1))
    fixed = np.array([[0.4, 0.6]])
    toggle = {"n": 0}

    def sampler(rng):
        toggle["n"] += 1
        if toggle["n"] % 4 != 0:
            return fixed  # most pairs coincide -> degenerate, skipped
        return rng.dirichlet(np.ones(2)).reshape(1, 2)

    est = br.strong_bregman_probe(lambda b: kernel.generator(b), kernel, sampler,
                                  20, np.random.default_rng(2))
    assert est.sample_count == 20

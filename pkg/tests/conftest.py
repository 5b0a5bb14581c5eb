import functools

import numpy as np
import pytest

from prores import equilibrium
from prores import market as mkt


def symmetric_market(kind=mkt.UtilityKind.SUBSTITUTES, rho=0.5, m=2, n=2, budget=1.0):
    """Identical buyers with equal weights on every good."""
    if kind is mkt.UtilityKind.COBB_DOUGLAS:
        w, r = np.full(n, 1.0 / n), None
    elif kind in (mkt.UtilityKind.LINEAR, mkt.UtilityKind.LEONTIEF):
        w, r = np.full(n, 0.5), None
    else:
        w, r = np.full(n, 0.5), rho
    buyers = tuple(mkt.Buyer(kind=kind, weights=w, budget=budget, rho=r) for _ in range(m))
    return mkt.validate(mkt.MarketInstance(buyers=buyers, goods=n))


def cycling_market():
    """Two symmetric rho=-1 buyers, two goods, all weights one half."""
    return symmetric_market(mkt.UtilityKind.COMPLEMENTS, rho=-1.0)


def two_class_market(kinds_rhos, n=4, seed=0):
    """Hand-assembled market with an explicit (kind, rho) list."""
    rng = np.random.default_rng(seed)
    buyers = []
    for kind, rho in kinds_rhos:
        w = np.exp(rng.uniform(np.log(0.1), np.log(10.0), n))
        if kind is mkt.UtilityKind.COBB_DOUGLAS:
            w = w / w.sum()
        buyers.append(mkt.Buyer(kind=kind, weights=w, budget=float(rng.uniform(0.5, 2.0)), rho=rho))
    return mkt.validate(mkt.MarketInstance(buyers=tuple(buyers), goods=n))


def random_interior_state(market, rng):
    rows = rng.dirichlet(np.ones(market.goods), size=market.m)
    rows = np.maximum(rows, 1e-9)
    rows = rows / rows.sum(axis=1, keepdims=True)
    return rows * market.budgets[:, None]


@functools.lru_cache(maxsize=None)
def _solved(spec, seed, m, n, normalize):
    market = mkt.generate_random(m, n, spec, seed=seed, normalize_budgets=normalize)
    cert = equilibrium.solve(market, tol=1e-12)
    return market, cert


def solved_market(spec, seed, m=5, n=5, normalize=False):
    """Cached (market, equilibrium certificate) pair for rate protocols."""
    return _solved(spec, seed, m, n, normalize)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

import math

import numpy as np
import pytest

from prores import dynamics as dyn
from prores import eg
from prores import equilibrium as eq
from prores import errors
from prores import market as mkt
from conftest import random_interior_state, symmetric_market, two_class_market

UK = mkt.UtilityKind


def test_eg_objective_symmetric_closed_form():
    # two identical rho = 1/2 buyers, x_ij = 1/2: u = ((2)(1/2)(1/2)^(1/2))^2 = 1/2
    m = symmetric_market(UK.SUBSTITUTES, rho=0.5)
    x = np.full((2, 2), 0.5)
    assert eg.eg_objective(m, x) == pytest.approx(2.0 * math.log(0.5), rel=1e-14)


def test_eg_objective_zero_utility_raises():
    m = symmetric_market(UK.COMPLEMENTS, rho=-1.0)
    with pytest.raises(errors.ZeroUtility):
        eg.eg_objective(m, np.array([[1.0, 0.0], [0.0, 1.0]]))


def test_eg_objective_maximal_at_substitutes_equilibrium(rng):
    m = mkt.generate_random(4, 4, "substitutes:0.3,0.7", seed=31)
    cert = eq.solve(m, tol=1e-12)
    best = eg.eg_objective(m, cert.spending / cert.prices)
    for _ in range(100):
        b = random_interior_state(m, rng)
        assert eg.eg_objective(m, b / b.sum(axis=0)) <= best + 1e-9


def test_eg_dual_strong_duality_at_equilibrium():
    m = mkt.generate_random(4, 4, "complements:-3,-0.4", seed=31)
    cert = eq.solve(m, tol=1e-12)
    psi_star = eg.eg_objective(m, cert.spending / cert.prices)
    ups_star = eg.eg_dual(m, cert.prices)
    # sum of prices equals total budget, so the linear terms cancel
    assert ups_star == pytest.approx(psi_star, abs=1e-8)


def test_eg_dual_minimal_at_equilibrium_prices(rng):
    m = mkt.generate_random(4, 4, "complements:-3,-0.4", seed=32)
    cert = eq.solve(m, tol=1e-12)
    base = eg.eg_dual(m, cert.prices)
    for _ in range(100):
        p = cert.prices * np.exp(rng.uniform(-0.2, 0.2, size=m.goods))
        assert eg.eg_dual(m, p) >= base - 1e-9


def test_eg_dual_sensitive_to_price_changes():
    m = mkt.generate_random(3, 3, "complements:-2,-0.5", seed=4)
    cert = eq.solve(m, tol=1e-12)
    p = cert.prices.copy()
    p[0] *= 2.0
    assert abs(eg.eg_dual(m, p) - eg.eg_dual(m, cert.prices)) > 1e-6


def test_log_sum_lower_bound_below_exact(rng):
    m = two_class_market([(UK.SUBSTITUTES, 0.5), (UK.SUBSTITUTES, 0.3),
                          (UK.COBB_DOUGLAS, None)], n=4, seed=12)
    for _ in range(200):
        b = random_interior_state(m, rng)
        exact = eg.eg_objective(m, b / b.sum(axis=0))
        assert eg.psi_log_lower_bound(m, b) <= exact + 1e-10


def test_log_sum_lower_bound_tight_at_equilibrium():
    m = mkt.generate_random(3, 4, "substitutes:0.3,0.7", seed=13)
    cert = eq.solve(m, tol=1e-13)
    exact = eg.eg_objective(m, cert.spending / cert.prices)
    assert eg.psi_log_lower_bound(m, cert.spending) == pytest.approx(exact, abs=1e-7)


def test_dominance_substitutes_trace():
    m = mkt.generate_random(4, 4, "substitutes:0.3,0.7", seed=41)
    cert = eq.solve(m, tol=1e-12)
    sp = dyn.simulate(m, dyn.Rule.PR, 100)
    rows = eg.dominance_check(m, sp, cert.spending)
    assert all(r["dominates"] for r in rows)
    assert all(r["psi_gap"] <= r["phi_gap"] + 1e-9 for r in rows)


def test_dominance_complements_trace():
    m = mkt.generate_random(4, 4, "complements:-3,-0.4", seed=41)
    cert = eq.solve(m, tol=1e-12)
    sp = dyn.simulate(m, dyn.Rule.PR, 100)
    rows = eg.dominance_check(m, sp, cert.spending)
    assert all(r["dominates"] for r in rows)
    assert all(r["upsilon_gap"] <= r["phi_gap"] + 1e-9 for r in rows)


def test_dominance_zero_at_equilibrium():
    m = mkt.generate_random(3, 3, "substitutes:0.3,0.7", seed=42)
    cert = eq.solve(m, tol=1e-12)
    rows = eg.dominance_check(m, cert.spending[None, :, :], cert.spending)
    assert rows[0]["phi_gap"] == pytest.approx(0.0, abs=1e-12)
    assert rows[0]["psi_gap"] == pytest.approx(0.0, abs=1e-12)


def test_dominance_csv(tmp_path):
    m = mkt.generate_random(3, 3, "complements:-2,-0.5", seed=43)
    cert = eq.solve(m, tol=1e-12)
    sp = dyn.simulate(m, dyn.Rule.PR, 5)
    rows = eg.dominance_check(m, sp, cert.spending)
    path = tmp_path / "dom.csv"
    eg.write_dominance_csv(rows, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "iter,phi_gap,psi_gap,upsilon_gap,dominates"
    assert len(lines) == len(rows) + 1

"""Both kernel backends must implement identical semantics."""

import numpy as np
import pytest

from prores import _kernels
from prores import market as mkt
from conftest import random_interior_state

compiled = pytest.importorskip("prores._kernels._compiled",
                               reason="compiled kernels not built")
fallback = _kernels.get_backend("python")


@pytest.mark.parametrize("spec", ["substitutes:0.2,0.8", "complements:-4,-0.3",
                                  "everything", "full"])
@pytest.mark.parametrize("mode", [0, 1])
def test_step_round_parity(spec, mode, rng):
    m = mkt.generate_random(6, 5, spec, seed=mode)
    for _ in range(20):
        b = random_interior_state(m, rng)
        a = compiled.step_round(b, m.kinds, m.rhos, m.weights, m.budgets, mode)
        c = fallback.step_round(b, m.kinds, m.rhos, m.weights, m.budgets, mode)
        np.testing.assert_allclose(a, c, rtol=1e-12, atol=1e-15)


def test_step_round_parity_generalized(rng):
    m = mkt.generate_random(6, 5, "mixed", seed=3)
    for _ in range(20):
        b = random_interior_state(m, rng)
        a = compiled.step_round(b, m.kinds, m.rhos, m.weights, m.budgets, 2)
        c = fallback.step_round(b, m.kinds, m.rhos, m.weights, m.budgets, 2)
        np.testing.assert_allclose(a, c, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("spec", ["substitutes:0.2,0.8", "complements:-4,-0.3",
                                  "everything"])
def test_phi_terms_parity(spec, rng):
    m = mkt.generate_random(6, 5, spec, seed=5)
    extended = m.has_cobb_douglas
    for _ in range(20):
        b = random_interior_state(m, rng)
        a = compiled.phi_terms(b, m.kinds, m.rhos, m.weights, extended)
        c = fallback.phi_terms(b, m.kinds, m.rhos, m.weights, extended)
        np.testing.assert_allclose(a, c, rtol=1e-12, atol=1e-15)


def test_phi_terms_parity_on_boundary_states():
    # zero spendings on zero-weight goods, infinities included
    weights = np.array([[1.0, 0.0, 2.0], [1.0, 1.0, 1.0]])
    kinds = np.array([1, 1], dtype=np.int64)
    rhos = np.array([0.5, 0.8])
    b = np.array([[0.5, 0.0, 0.5], [0.2, 0.5, 0.3]])
    a = compiled.phi_terms(b, kinds, rhos, weights, False)
    c = fallback.phi_terms(b, kinds, rhos, weights, False)
    np.testing.assert_allclose(a, c, rtol=1e-13)
    # spending where the weight is zero makes the substitutes term infinite
    b2 = np.array([[0.4, 0.2, 0.4], [0.2, 0.5, 0.3]])
    a2 = compiled.phi_terms(b2, kinds, rhos, weights, False)
    c2 = fallback.phi_terms(b2, kinds, rhos, weights, False)
    assert a2[0] == np.inf and c2[0] == np.inf

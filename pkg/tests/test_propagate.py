"""Chebyshev propagator against dense scipy.linalg.expm as the oracle."""

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp

from scattergate.errors import NumericalFailure
from scattergate.propagate import (DEFAULT_TOL, chebyshev_order, expm_apply,
                                   spectral_interval)


def random_hermitian(n, seed, density=0.3):
    rng = np.random.default_rng(seed)
    a = sp.random(n, n, density=density, random_state=rng, dtype=complex,
                  data_rvs=lambda size: rng.normal(size=size)
                  + 1j * rng.normal(size=size))
    h = (a + a.conj().T) / 2.0
    return h.tocsr()


def test_spectral_interval_encloses_eigenvalues():
    h = random_hermitian(40, seed=0)
    lo, hi = spectral_interval(h)
    evals = np.linalg.eigvalsh(h.toarray())
    assert lo <= evals.min() + 1e-12
    assert hi >= evals.max() - 1e-12


def test_chebyshev_order_grows_with_z():
    orders = [chebyshev_order(z, 1e-10) for z in (1.0, 10.0, 100.0)]
    assert orders == sorted(orders)
    assert orders[-1] >= 100  # at least z terms before the Bessel tail decays
    with pytest.raises(ValueError):
        chebyshev_order(-1.0, 1e-10)


@pytest.mark.parametrize("t", [0.7, -1.3, 6.0])
def test_matches_dense_expm(t):
    h = random_hermitian(30, seed=1)
    psi = np.random.default_rng(2).normal(size=30) + 0j
    psi /= np.linalg.norm(psi)
    expected = sla.expm(-1j * t * h.toarray()) @ psi
    got = expm_apply(h, psi, t, tol=1e-12)
    assert np.linalg.norm(got - expected) < 1e-11


def test_tolerance_is_an_upper_bound():
    h = random_hermitian(25, seed=3)
    psi = np.eye(25, dtype=complex)[0]
    expected = sla.expm(-2j * h.toarray()) @ psi
    for tol in (1e-4, 1e-8, 1e-12):
        err = np.linalg.norm(expm_apply(h, psi, 2.0, tol=tol) - expected)
        assert err < tol


def test_multiple_columns_at_once():
    h = random_hermitian(20, seed=4)
    block = np.random.default_rng(5).normal(size=(20, 3)) + 0j
    expected = sla.expm(-0.9j * h.toarray()) @ block
    got = expm_apply(h, block, 0.9, tol=1e-12)
    assert got.shape == (20, 3)
    assert np.max(np.abs(got - expected)) < 1e-11


def test_zero_time_is_identity():
    h = random_hermitian(10, seed=6)
    psi = np.arange(10, dtype=complex)
    out = expm_apply(h, psi, 0.0)
    assert np.array_equal(out, psi)
    assert out is not psi


def test_diagonal_shift_only():
    # zero half-width: pure phase, no Chebyshev series needed
    h = sp.identity(6, format="csr") * 2.5
    psi = np.ones(6, dtype=complex)
    out = expm_apply(h, psi, 1.2)
    np.testing.assert_allclose(out, np.exp(-1j * 2.5 * 1.2) * psi, atol=1e-14)


def test_norm_preserved_on_long_evolution():
    h = random_hermitian(50, seed=7)
    psi = np.random.default_rng(8).normal(size=50) + 0j
    psi /= np.linalg.norm(psi)
    out = expm_apply(h, psi, 200.0, tol=DEFAULT_TOL)
    assert abs(np.linalg.norm(out) - 1.0) < 10 * DEFAULT_TOL


def test_caller_interval_is_used():
    h = random_hermitian(15, seed=9)
    psi = np.eye(15, dtype=complex)[3]
    expected = sla.expm(-1j * h.toarray()) @ psi
    lo, hi = spectral_interval(h)
    got = expm_apply(h, psi, 1.0, tol=1e-12, interval=(lo - 1.0, hi + 1.0))
    assert np.linalg.norm(got - expected) < 1e-11

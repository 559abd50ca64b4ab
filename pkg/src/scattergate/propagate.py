"""Chebyshev propagator for exp(-iHT)|psi> with an a-priori error bound.

The Hamiltonian spectrum is enclosed in [lo, hi] by Gershgorin discs (or a
caller-supplied interval), H is shifted and scaled onto [-1, 1], and the
propagator is expanded as

    exp(-iHT) = e^{-icT} [ J_0(z) + 2 sum_{m>=1} (-i)^m J_m(z) T_m((H-c)/a) ]

with c the interval centre, a the half-width and z = aT.  The truncation
order is chosen so that the Bessel tail 2*sum_{m>K} |J_m(z)| is below the
requested tolerance, which upper-bounds the operator-norm error because
|T_m| <= 1 on the enclosing interval.  Dense matrix exponentials are never
formed; cost is one sparse matvec per expansion order.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from .errors import NumericalFailure

__all__ = ["spectral_interval", "chebyshev_order", "expm_apply"]

#: default operator-norm error budget for time evolution
DEFAULT_TOL = 1e-8


def spectral_interval(h):
    """Gershgorin enclosure [lo, hi] of the spectrum of a sparse Hermitian matrix."""
    h = h.tocsr()
    diag = h.diagonal().real
    rowsum = np.asarray(np.abs(h).sum(axis=1)).ravel()
    radius = rowsum - np.abs(diag)
    return float((diag - radius).min()), float((diag + radius).max())


def chebyshev_order(z, tol):
    """Smallest K with Bessel tail 2*sum_{m>K} |J_m(z)| <= tol."""
    if z < 0:
        raise ValueError("z must be >= 0")
    # superexponential decay starts near m = z; scan a safely padded range
    m_max = int(z + 60 + 12 * z ** (1.0 / 3.0))
    m = np.arange(m_max + 1)
    bessel = np.abs(jv(m, z))
    tail = 2.0 * np.cumsum(bessel[::-1])[::-1]
    # tail[k] bounds the discarded mass for truncation at order k-1
    ok = np.nonzero(tail <= tol)[0]
    if len(ok) == 0 or bessel[-1] > tol / 4:
        raise NumericalFailure(
            f"Chebyshev order search failed for z={z:.3g}, tol={tol:.3g}")
    return int(ok[0])


def expm_apply(h, psi, t, tol=DEFAULT_TOL, interval=None):
    """Apply exp(-i h t) to one or more vectors.

    Parameters
    ----------
    h : sparse Hermitian matrix
    psi : ndarray, shape (n,) or (n, m)
    t : float, evolution time (may be 0)
    tol : float, operator-norm error budget
    interval : (lo, hi), optional spectral enclosure; Gershgorin by default

    Returns
    -------
    ndarray with the same shape as psi.
    """
    psi = np.asarray(psi, dtype=complex)
    if t == 0:
        return psi.copy()
    if interval is None:
        interval = spectral_interval(h)
    lo, hi = interval
    centre = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    if half == 0.0:
        return np.exp(-1j * centre * t) * psi
    z = half * abs(t)
    order = chebyshev_order(z, tol)
    sign = 1.0 if t > 0 else -1.0

    h_op = h.tocsr()

    def scaled_matvec(v):
        return (h_op @ v - centre * v) / half

    jm = jv(np.arange(order + 1), z)
    phase = (-1j * sign) ** np.arange(order + 1)
    coeff = jm * phase
    coeff[1:] *= 2.0

    t_prev = psi
    t_cur = scaled_matvec(psi)
    acc = coeff[0] * t_prev + coeff[1] * t_cur
    for m in range(2, order + 1):
        t_prev, t_cur = t_cur, 2.0 * scaled_matvec(t_cur) - t_prev
        acc += coeff[m] * t_cur
    return np.exp(-1j * centre * t) * acc

"""Number-theoretic synthesis of exchange unitaries from repeated collisions.

Two identical collisions give the diagonal gate G = g^2 whose only nontrivial
entry is exp(2 i theta) on the singlet.  Powers G^k therefore step around the
unit circle by 2 theta, and reproducing the exchange unitary

    U(gamma t) = exp(i gamma t S1.S2)
               = exp(i gamma t / 4) diag(1, 1, exp(-i gamma t), 1)

in the coupled basis reduces to a circle problem: find the smallest k with
2 k theta close to the target phase modulo 2 pi.  Feasibility is governed by
the continued fraction expansion of alpha = theta / pi.  Rational alpha = p/q
makes G^k periodic with period q, so only q distinct phases ever appear; a
convergent p/q guarantees |alpha - p/q| < 1/q^2 and hence that the first q
powers reach every angle to within 3 pi / q.  Gates with two active phases
are planned one diagonal entry at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConfigError, SynthesisBudgetExceeded, SynthesisUnreachable
from .phases import PhaseGate

__all__ = [
    "ContinuedFraction",
    "SynthesisPlan",
    "SuitabilityReport",
    "circle_distance",
    "continued_fraction",
    "suitability",
    "plan_power",
    "plan_heisenberg",
    "heisenberg_target",
    "gate_power",
    "gate_distance",
]

# a convergent this close to the float target is the float target
RATIONAL_TOL = 1e-15

_SCAN_CHUNK = 1 << 16
DEFAULT_CAP = 10 ** 7


def circle_distance(a, b):
    """Arc distance between two phases on the unit circle, in [0, pi]."""
    return abs(float(np.angle(np.exp(1j * (float(a) - float(b))))))


@dataclass(frozen=True)
class ContinuedFraction:
    """Continued fraction expansion of a real target in [0, 1).

    `convergents` are exact lowest-terms integer pairs (p, q); every one
    satisfies |target - p/q| < 1/q^2 and the denominators at least double
    every other step.  `is_rational` marks expansions that terminated because
    a convergent reproduced the target within RATIONAL_TOL; the last
    convergent is then the detected rational.
    """

    target: float
    partial_quotients: tuple
    convergents: tuple
    is_rational: bool

    @property
    def denominators(self):
        return tuple(q for _, q in self.convergents)


def continued_fraction(alpha, max_convergents=64):
    """Expand alpha mod 1 with exact integer convergents.

    Stops early once a convergent matches alpha to within RATIONAL_TOL (the
    float cannot distinguish the two), marking the expansion rational.  A
    double exhausts its information after at most ~50 quotients, so
    max_convergents may not exceed 64.
    """
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise ConfigError(f"continued fraction target must be finite, got {alpha}")
    max_convergents = int(max_convergents)
    if not 1 <= max_convergents <= 64:
        raise ConfigError(f"max_convergents must be in 1..64, got {max_convergents}")
    a = alpha % 1.0
    x = Fraction(a)          # floats are dyadic rationals, so this is exact
    exact = Fraction(a)

    quotients = [0]
    convergents = [(0, 1)]
    # p/q recurrence seeded by the two virtual convergents 1/0 and a0/1
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    rational = x == 0
    while not rational and len(convergents) < max_convergents:
        x = 1 / x
        digit = int(x)       # floor: x > 0 here
        x -= digit
        quotients.append(digit)
        p, p_prev = digit * p + p_prev, p
        q, q_prev = digit * q + q_prev, q
        convergents.append((p, q))
        if abs(exact - Fraction(p, q)) < RATIONAL_TOL:
            rational = True
    return ContinuedFraction(target=a,
                             partial_quotients=tuple(quotients),
                             convergents=tuple(convergents),
                             is_rational=rational)


@dataclass(frozen=True)
class SynthesisPlan:
    """Result of approximating a target phase by 2 k theta steps."""

    k: int
    achieved_error: float    # arc distance, radians
    target_phase: float
    theta: float
    convergents_used: int

    def as_dict(self):
        return {
            "k": self.k,
            "achieved_error": self.achieved_error,
            "target_phase": self.target_phase,
            "theta": self.theta,
            "convergents_used": self.convergents_used,
        }


def _scan_first_hit(beta, tau, tol_turns, cap):
    """Smallest k in 1..cap with k*beta within tol of tau (all in turns).

    Chunked vectorised scan in extended precision; k beta at k ~ 1e7 carries
    ~1e-12 turns of representation error, which bounds the usable tolerance.
    Returns (k, error_turns, best_k, best_error_turns).
    """
    beta_l = np.longdouble(beta)
    tau_l = np.longdouble(tau)
    best_k, best_err = 0, np.inf
    lo = 1
    while lo <= cap:
        hi = min(lo + _SCAN_CHUNK - 1, cap)
        k = np.arange(lo, hi + 1, dtype=np.int64)
        r = np.mod(k * beta_l - tau_l, 1.0)
        d = np.minimum(r, 1.0 - r).astype(float)
        hit = np.nonzero(d <= tol_turns)[0]
        if hit.size:
            j = int(hit[0])
            return int(k[j]), float(d[j]), int(k[j]), float(d[j])
        j = int(np.argmin(d))
        if d[j] < best_err:
            best_k, best_err = int(k[j]), float(d[j])
        lo = hi + 1
    return None, None, best_k, best_err


def plan_power(theta, gamma_t, epsilon, cap=DEFAULT_CAP):
    """Smallest k >= 1 with circle_distance(2 k theta, gamma_t) <= epsilon.

    The expansion of theta/pi diagnoses feasibility first: an exactly
    rational theta/pi = p/q revisits the same q phases forever, so the scan
    stops at one period and raises SynthesisUnreachable if none of them is
    close enough.  Otherwise k is found by direct scan (first hit is the
    smallest k by construction) up to `cap`, beyond which
    SynthesisBudgetExceeded reports the best phase seen.
    """
    theta = float(theta)
    gamma_t = float(gamma_t)
    epsilon = float(epsilon)
    if not 1e-12 < epsilon < math.pi:
        raise ConfigError(f"epsilon must lie in (1e-12, pi), got {epsilon:g}")
    if cap < 1:
        raise ConfigError(f"search cap must be positive, got {cap}")

    # positions in turns: 2 k theta / 2 pi = k alpha with alpha = theta/pi
    cf = continued_fraction(theta / math.pi)
    beta = (theta / math.pi) % 1.0
    tau = (gamma_t / (2.0 * math.pi)) % 1.0
    tol_turns = epsilon / (2.0 * math.pi)

    scan_cap = cap
    period = None
    if cf.is_rational:
        period = cf.convergents[-1][1]
        scan_cap = min(cap, period)

    k, err, best_k, best_err = _scan_first_hit(beta, tau, tol_turns, scan_cap)
    if k is None:
        best = best_err * 2.0 * math.pi
        if period is not None and period <= cap:
            raise SynthesisUnreachable(
                f"theta/pi is rational with denominator {period}; the {period} "
                f"distinct powers come no closer than {best:.3e} > {epsilon:g}",
                period=period, best_error=best)
        raise SynthesisBudgetExceeded(
            f"no exponent k <= {scan_cap} reaches the target within "
            f"{epsilon:g}; best miss {best:.3e} at k = {best_k}",
            cap=scan_cap, best_error=best)
    return SynthesisPlan(k=k, achieved_error=err * 2.0 * math.pi,
                         target_phase=gamma_t, theta=theta,
                         convergents_used=len(cf.convergents))


@dataclass(frozen=True)
class SuitabilityReport:
    """Whether a given collision phase can reach precision epsilon cheaply.

    A convergent denominator q in the window [1/(c eps), c/eps] guarantees
    every angle is reachable to within 3 pi / q using at most q collisions,
    which is the optimal O(1/eps) scaling.  `suitable` is False when the
    denominators jump over the window (too-rational targets) and the report
    carries the guaranteed resolution of the best convergent found.
    """

    alpha: float
    epsilon: float
    requested_convergents: int
    convergents: tuple
    window: tuple
    best_q: int
    resolution: float
    suitable: bool


def suitability(theta, epsilon, window_factor=10.0):
    """Check theta/pi for convergents with denominators of order 1/epsilon.

    Denominators grow at least like 2^((r-1)/2), so the first
    ceil(2 log2(1/eps) + 1) convergents are enough to see everything up to
    the window; a double's expansion simply ends sooner when it runs out of
    information.
    """
    epsilon = float(epsilon)
    if not 1e-12 < epsilon < math.pi:
        raise ConfigError(f"epsilon must lie in (1e-12, pi), got {epsilon:g}")
    needed = int(math.ceil(2.0 * math.log2(1.0 / epsilon) + 1.0))
    cf = continued_fraction(float(theta) / math.pi,
                            max_convergents=min(needed, 64))
    lo, hi = 1.0 / (window_factor * epsilon), window_factor / epsilon
    in_window = [q for _, q in cf.convergents if lo <= q <= hi]
    if in_window:
        best_q = max(in_window)
    else:
        below = [q for _, q in cf.convergents if q < lo]
        best_q = max(below) if below else cf.convergents[-1][1]
    return SuitabilityReport(alpha=cf.target, epsilon=epsilon,
                             requested_convergents=needed,
                             convergents=cf.convergents,
                             window=(lo, hi), best_q=best_q,
                             resolution=3.0 * math.pi / best_q,
                             suitable=bool(in_window))


def heisenberg_target(gamma_t):
    """Exchange unitary exp(i gamma t S1.S2) as a diagonal phase gate.

    Factorises as exp(i gamma t / 4) times a pure singlet phase exp(-i gamma t),
    so matching it with collision gates means steering the singlet entry.
    """
    gamma_t = float(gamma_t)
    return PhaseGate(entries=(1.0, 1.0, np.exp(-1j * gamma_t), 1.0),
                     factored_phase=gamma_t / 4.0)


def gate_power(gate, k):
    """Elementwise k-th power of a diagonal gate; k = 0 is the identity."""
    k = int(k)
    if k < 0:
        raise ConfigError(f"gate power must be non-negative, got {k}")
    return gate.power(k)


def gate_distance(a, b):
    """Sup norm over the diagonal, common factored phases excluded.

    For diagonal unitaries every standard operator norm of the difference
    coincides with this; with triplet entries pinned at 1 it reduces to the
    chord |e^{2 i k theta} - e^{-i gamma t}|, bounded by the arc error of the
    plan that produced the power.
    """
    ea = np.asarray(a.entries, dtype=complex)
    eb = np.asarray(b.entries, dtype=complex)
    return float(np.max(np.abs(ea - eb)))


def plan_heisenberg(theta, gamma_t, epsilon, cap=DEFAULT_CAP):
    """Plan G^k to approximate exp(i gamma t S1.S2).

    The gate's singlet entry advances by +2 theta per application while the
    target's singlet phase is -gamma t, so the circle search targets the
    negated angle; the plan's achieved arc error bounds the gate distance.
    """
    return plan_power(theta, -float(gamma_t), epsilon, cap=cap)

"""Continued fractions and collision-power synthesis.

The convergent properties (lowest terms, |alpha - p/q| < 1/q^2, denominator
doubling every other step) are checked in exact integer arithmetic, and
plan_power is checked against a brute-force first-hit scan.
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from scattergate.errors import (ConfigError, SynthesisBudgetExceeded,
                                SynthesisUnreachable)
from scattergate.phases import PhaseGate
from scattergate.synth import (circle_distance, continued_fraction,
                               gate_distance, gate_power, heisenberg_target,
                               plan_heisenberg, plan_power, suitability)

PHI_INV = (math.sqrt(5.0) - 1.0) / 2.0
THETA_GOLDEN = math.pi * PHI_INV

# frozen: plan_power(THETA_GOLDEN, 2.31, 1e-3)
GOLDEN_K = 342
GOLDEN_ERR = 1.4932667349109024e-4


def test_circle_distance():
    assert circle_distance(0.3, 0.3) == 0.0
    assert circle_distance(0.0, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)
    assert circle_distance(-math.pi, math.pi) == pytest.approx(0.0, abs=1e-12)
    assert circle_distance(0.1, -0.2) == pytest.approx(0.3, abs=1e-12)
    assert circle_distance(1.0, 5.0) == pytest.approx(2 * math.pi - 4.0, abs=1e-12)


# ---------------------------------------------------------------------------
# continued fractions


def test_golden_ratio_expansion():
    cf = continued_fraction(PHI_INV)
    assert cf.partial_quotients[0] == 0
    assert set(cf.partial_quotients[1:]) == {1}
    # Fibonacci convergents until the float runs out of information
    assert cf.convergents[:5] == ((0, 1), (1, 1), (1, 2), (2, 3), (3, 5))
    assert cf.convergents[-1] == (14930352, 24157817)
    assert len(cf.partial_quotients) == 37
    assert cf.is_rational          # the double equals its last convergent


def test_simple_rationals():
    cf = continued_fraction(1.0 / 3.0)
    assert cf.convergents == ((0, 1), (1, 3))
    assert cf.is_rational
    cf = continued_fraction(0.5)
    assert cf.convergents == ((0, 1), (1, 2))
    assert cf.is_rational
    cf = continued_fraction(0.0)
    assert cf.convergents == ((0, 1),)
    assert cf.is_rational
    # targets reduce modulo 1
    assert continued_fraction(7.25).convergents[-1] == (1, 4)


def test_continued_fraction_validation():
    with pytest.raises(ConfigError):
        continued_fraction(float("nan"))
    with pytest.raises(ConfigError):
        continued_fraction(float("inf"))
    with pytest.raises(ConfigError):
        continued_fraction(0.3, max_convergents=0)
    with pytest.raises(ConfigError):
        continued_fraction(0.3, max_convergents=65)


def test_convergent_invariants_random_targets():
    # lowest terms, approximation quality and denominator growth, all exact
    rng = np.random.default_rng(20260815)
    for alpha in rng.uniform(0.0, 1.0, size=200):
        cf = continued_fraction(alpha)
        target = Fraction(float(alpha))
        qs = cf.denominators
        for r, (p, q) in enumerate(cf.convergents):
            assert math.gcd(p, q) == 1
            assert abs(target - Fraction(p, q)) < Fraction(1, q * q)
            if r >= 1:
                assert q * q >= 2 ** (r - 1)
        assert all(q2 > q1 for q1, q2 in zip(qs[1:], qs[2:]))


# ---------------------------------------------------------------------------
# power planning


def test_plan_power_exact_multiple():
    plan = plan_power(0.3, 3.0, 1e-9)
    assert plan.k == 5
    assert plan.achieved_error < 1e-12
    assert plan.target_phase == 3.0 and plan.theta == 0.3
    d = plan.as_dict()
    assert d["k"] == 5 and d["convergents_used"] == plan.convergents_used


def test_plan_power_first_hit_is_minimal():
    # brute-force oracle: every k below the plan misses, the plan itself hits
    rng = np.random.default_rng(99)
    eps = 0.03
    for _ in range(25):
        theta = rng.uniform(0.1, math.pi - 0.1)
        gamma_t = rng.uniform(0.0, 2 * math.pi)
        plan = plan_power(theta, gamma_t, eps)
        k = np.arange(1, plan.k + 1)
        d = np.abs(np.angle(np.exp(1j * (2.0 * k * theta - gamma_t))))
        assert d[-1] <= eps + 1e-9
        if plan.k > 1:
            assert np.min(d[:-1]) > eps - 1e-9


def test_plan_power_golden_frozen():
    plan = plan_power(THETA_GOLDEN, 2.31, 1e-3)
    assert plan.k == GOLDEN_K
    assert plan.achieved_error == pytest.approx(GOLDEN_ERR, rel=1e-9)
    assert plan.convergents_used == 37


def test_plan_power_batch_stays_linear_in_inverse_epsilon():
    # the golden collision phase reaches every target in O(1/eps) steps
    rng = np.random.default_rng(424242)
    eps = 1e-3
    for gamma_t in rng.uniform(0.0, 2 * math.pi, size=100):
        plan = plan_power(THETA_GOLDEN, gamma_t, eps)
        assert plan.achieved_error <= eps
        assert plan.k <= 5.0 / eps          # max observed 4055


def test_plan_power_rational_theta_unreachable():
    # theta/pi = 1/4 revisits four phases; pi/4 sits exactly between two
    with pytest.raises(SynthesisUnreachable) as exc:
        plan_power(math.pi / 4, math.pi / 4, 1e-6)
    assert exc.value.period == 4
    assert exc.value.best_error == pytest.approx(math.pi / 4, abs=1e-12)


def test_plan_power_rational_theta_can_still_hit():
    # the same gate reaches a phase it does visit
    plan = plan_power(math.pi / 4, math.pi, 1e-9)
    assert plan.k == 2
    assert plan.achieved_error < 1e-12


def test_plan_power_budget_exceeded():
    with pytest.raises(SynthesisBudgetExceeded) as exc:
        plan_power(THETA_GOLDEN, 2.31, 1e-6, cap=100)
    assert exc.value.cap == 100
    assert exc.value.best_error == pytest.approx(0.03887704542405495, rel=1e-9)


def test_plan_power_validation():
    with pytest.raises(ConfigError):
        plan_power(0.3, 1.0, 1e-13)
    with pytest.raises(ConfigError):
        plan_power(0.3, 1.0, math.pi)
    with pytest.raises(ConfigError):
        plan_power(0.3, 1.0, 1e-3, cap=0)


# ---------------------------------------------------------------------------
# suitability


def test_suitability_golden():
    rep = suitability(THETA_GOLDEN, 1e-3)
    assert rep.suitable
    assert rep.window == (100.0, 10000.0)
    assert rep.best_q == 6765                       # largest Fibonacci in window
    assert rep.resolution == pytest.approx(3 * math.pi / 6765, rel=1e-12)
    assert rep.requested_convergents == 21
    assert rep.alpha == pytest.approx(PHI_INV, abs=1e-15)
    for eps in (1e-2, 1e-4, 1e-6):
        assert suitability(THETA_GOLDEN, eps).suitable


def test_suitability_nearly_rational_is_flagged():
    # theta/pi = 355/113: denominators jump from 113 past the 1e-5 window
    rep = suitability(math.pi * 355 / 113, 1e-5)
    assert not rep.suitable
    assert (16, 113) in rep.convergents
    assert rep.best_q == 113
    assert rep.resolution == pytest.approx(3 * math.pi / 113, rel=1e-12)
    assert rep.window[0] > 113


def test_suitability_validation():
    with pytest.raises(ConfigError):
        suitability(0.3, 1e-13)


# ---------------------------------------------------------------------------
# gates


def test_heisenberg_target_structure():
    gt = 1.7
    u = heisenberg_target(gt)
    assert u.entries[0] == 1.0 and u.entries[1] == 1.0 and u.entries[3] == 1.0
    assert u.entries[2] == pytest.approx(np.exp(-1j * gt), abs=1e-15)
    assert u.factored_phase == pytest.approx(gt / 4.0)
    assert u.unitarity_defect() < 1e-15
    # a full 2 pi of exchange is the identity up to the factored phase
    full = heisenberg_target(2 * math.pi)
    assert full.entries[2] == pytest.approx(1.0, abs=1e-12)
    assert full.factored_phase == pytest.approx(math.pi / 2)


def test_gate_power_and_distance():
    g = PhaseGate(entries=(1.0, 1.0, np.exp(0.4j), 1.0))
    assert gate_power(g, 0).entries == (1.0, 1.0, 1.0, 1.0)
    np.testing.assert_allclose(gate_power(g, 3).entries[2], np.exp(1.2j), atol=1e-15)
    with pytest.raises(ConfigError):
        gate_power(g, -1)
    a = PhaseGate(entries=(1.0, 1.0, np.exp(0.4j), 1.0))
    b = PhaseGate(entries=(1.0, 1.0, np.exp(0.6j), 1.0))
    assert gate_distance(a, b) == pytest.approx(abs(np.exp(0.4j) - np.exp(0.6j)),
                                                abs=1e-15)
    assert gate_distance(a, a) == 0.0


def test_plan_heisenberg_bounds_gate_distance():
    gamma_t = 2.31
    eps = 1e-3
    plan = plan_heisenberg(THETA_GOLDEN, gamma_t, eps)
    assert plan.k == plan_power(THETA_GOLDEN, -gamma_t, eps).k
    big_g = PhaseGate(entries=(1.0, 1.0, np.exp(2j * THETA_GOLDEN), 1.0))
    dist = gate_distance(gate_power(big_g, plan.k), heisenberg_target(gamma_t))
    # chord length is bounded by the arc error of the plan
    assert dist <= plan.achieved_error + 1e-12
    assert dist <= eps

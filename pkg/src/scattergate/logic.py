"""Triple-rail logical qubits driven by collision-gate exchange schedules.

Each logical qubit lives in the S = 1/2, Sz = +1/2 subspace of three spin
rails (up = 0, big endian, so rail 0 is the most significant bit):

    |0_L> = |S>|up>,
    |1_L> = sqrt(2/3)|up up down> - (1/sqrt 3)|T0>|up>.

Exchange schedules apply diagonal-in-coupled-basis two-spin gates on chosen
rail pairs; because every such gate commutes with the pair's total spin, the
schedule conserves total Sz and S^2 exactly, and leakage out of the code
space can only move within fixed-spin sectors.  Gates come either from the
exact exchange unitary exp(i gamma t S1.S2) or from quantized collision
powers G^k supplied per step, which is how schedule quantization studies and
the state-preparation protocol are run.  Readout measures the third rail's
spin along z: |0_L> always gives up, |1_L> gives down with probability 2/3,
and repeating the computation with majority voting suppresses the error
exponentially.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .errors import ConfigError, ScheduleFormatError
from .phases import PhaseGate
from .synth import SynthesisPlan, circle_distance, heisenberg_target, plan_power

__all__ = [
    "LogicalQubitState",
    "ScheduleStep",
    "ExchangeSchedule",
    "MeasurementStats",
    "PreparationResult",
    "logical_basis",
    "code_matrix",
    "encode",
    "decode",
    "embed_pair_gate",
    "apply_schedule",
    "quantize_schedule",
    "logical_unitary",
    "prepare_singlet_protocol",
    "measure_third_spin",
    "majority_vote_error",
    "load_schedule",
    "save_schedule",
]

_SQ2 = math.sqrt(2.0)


def _single_qubit_codewords():
    zero = np.zeros(8, dtype=complex)
    one = np.zeros(8, dtype=complex)
    # |S>|up> = (|up down up> - |down up up>) / sqrt 2 -> indices 0b010, 0b100
    zero[0b010] = 1.0 / _SQ2
    zero[0b100] = -1.0 / _SQ2
    # sqrt(2/3)|up up down> - (1/sqrt 3)|T0>|up>
    one[0b001] = math.sqrt(2.0 / 3.0)
    one[0b010] = -1.0 / math.sqrt(6.0)
    one[0b100] = -1.0 / math.sqrt(6.0)
    return zero, one


def logical_basis(n=1):
    """Codewords for n logical qubits as columns, big-endian logical index."""
    zero, one = _single_qubit_codewords()
    cols = []
    for idx in range(2 ** n):
        vec = np.ones(1, dtype=complex)
        for bit in range(n):
            b = (idx >> (n - 1 - bit)) & 1
            vec = np.kron(vec, one if b else zero)
        cols.append(vec)
    return np.column_stack(cols)


def code_matrix(n=1):
    """Isometry from 2^n logical amplitudes into the 2^(3n) spin space."""
    return logical_basis(n)


@dataclass(frozen=True)
class LogicalQubitState:
    """A physical spin state of 3n rails with code-space bookkeeping."""

    physical: np.ndarray
    n_logical: int

    def __post_init__(self):
        dim = 2 ** (3 * self.n_logical)
        vec = np.asarray(self.physical, dtype=complex)
        if vec.shape != (dim,):
            raise ConfigError(
                f"state for {self.n_logical} logical qubit(s) needs a vector "
                f"of length {dim}, got shape {vec.shape}")
        object.__setattr__(self, "physical", vec)

    @property
    def num_spins(self):
        return 3 * self.n_logical

    def norm(self):
        return float(np.linalg.norm(self.physical))

    def logical_amplitudes(self):
        return code_matrix(self.n_logical).conj().T @ self.physical

    @property
    def leakage(self):
        """Weight outside the code space."""
        amps = self.logical_amplitudes()
        return float(max(0.0, np.vdot(self.physical, self.physical).real
                         - np.vdot(amps, amps).real))


def encode(amplitudes, n=1):
    """Embed normalized logical amplitudes into the code space exactly."""
    amps = np.asarray(amplitudes, dtype=complex).ravel()
    if amps.shape != (2 ** n,):
        raise ConfigError(f"expected 2^{n} logical amplitudes, got {amps.shape}")
    nrm = np.linalg.norm(amps)
    if abs(nrm - 1.0) > 1e-10:
        raise ConfigError(f"logical amplitudes must be normalized, |a| = {nrm:.6f}")
    return LogicalQubitState(physical=code_matrix(n) @ amps, n_logical=n)


def decode(state):
    """Logical amplitudes and the leaked weight."""
    return state.logical_amplitudes(), state.leakage


@dataclass(frozen=True)
class ScheduleStep:
    """One exchange interaction: rail pair and its Heisenberg angle gamma t."""

    pair: tuple
    gamma_t: float


@dataclass(frozen=True)
class ExchangeSchedule:
    """Ordered exchange steps; disjoint-pair steps commute, others apply in order."""

    steps: tuple
    provenance: str = ""

    def __len__(self):
        return len(self.steps)

    def max_rail(self):
        return max((max(s.pair) for s in self.steps), default=-1)

    def validate(self, num_spins):
        for s in self.steps:
            i, j = s.pair
            if i == j or not (0 <= i < num_spins and 0 <= j < num_spins):
                raise ConfigError(
                    f"schedule pair {s.pair} out of range for {num_spins} rails")


def load_schedule(path):
    """Read a schedule file: JSON {provenance?, steps: [{pair, gamma_t}]}."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ScheduleFormatError(f"cannot read schedule {path}: {exc}") from exc
    if not isinstance(raw, dict) or "steps" not in raw:
        raise ScheduleFormatError(f"{path}: expected an object with a 'steps' list")
    steps = []
    for pos, entry in enumerate(raw["steps"]):
        try:
            i, j = entry["pair"]
            gamma_t = float(entry["gamma_t"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScheduleFormatError(
                f"{path}: step {pos} needs 'pair': [i, j] and numeric "
                f"'gamma_t' ({exc})") from exc
        if int(i) == int(j) or int(i) < 0 or int(j) < 0:
            raise ScheduleFormatError(
                f"{path}: step {pos} pair [{i}, {j}] is not a valid rail pair")
        if not math.isfinite(gamma_t):
            raise ScheduleFormatError(f"{path}: step {pos} gamma_t not finite")
        steps.append(ScheduleStep(pair=(int(i), int(j)), gamma_t=gamma_t))
    return ExchangeSchedule(steps=tuple(steps),
                            provenance=str(raw.get("provenance", "")))


def save_schedule(schedule, path):
    doc = {"provenance": schedule.provenance,
           "steps": [{"pair": list(s.pair), "gamma_t": s.gamma_t}
                     for s in schedule.steps]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def embed_pair_gate(gate, pair, num_spins):
    """Embed a diagonal coupled-basis two-spin gate on one rail pair.

    In the pair's computational basis the gate is diagonal on the aligned
    states (T+ and T-) and acts as a symmetric 2x2 block mixing up-down and
    down-up through the T0/S split.  Everything else is identity.
    """
    i, j = pair
    if i == j or not (0 <= i < num_spins and 0 <= j < num_spins):
        raise ConfigError(f"rail pair {pair} out of range for {num_spins} spins")
    a_tp, a_t0, a_s, a_tm = gate.diagonal()
    mid_same = 0.5 * (a_t0 + a_s)
    mid_swap = 0.5 * (a_t0 - a_s)
    dim = 2 ** num_spins
    bit_i = 1 << (num_spins - 1 - i)
    bit_j = 1 << (num_spins - 1 - j)
    U = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        up_i = (b & bit_i) == 0
        up_j = (b & bit_j) == 0
        if up_i == up_j:
            U[b, b] = a_tp if up_i else a_tm
        else:
            U[b, b] = mid_same
            U[b ^ bit_i ^ bit_j, b] = mid_swap
    return U


def apply_schedule(state, schedule, gate_for_step=None):
    """Apply schedule steps in order; default gates are exact exchange unitaries.

    `gate_for_step` maps a ScheduleStep to the PhaseGate actually applied,
    which is how quantized collision powers G^k are substituted for the ideal
    exp(i gamma t S1.S2).
    """
    m = state.num_spins
    schedule.validate(m)
    if gate_for_step is None:
        gate_for_step = lambda step: heisenberg_target(step.gamma_t)
    psi = state.physical
    for step in schedule.steps:
        psi = embed_pair_gate(gate_for_step(step), step.pair, m) @ psi
    return LogicalQubitState(physical=psi, n_logical=state.n_logical)


def quantize_schedule(schedule, theta, epsilon, cap=10 ** 7):
    """Plan G^k for every step; returns the plans and a gate_for_step.

    Each collision gate G advances the singlet by +2 theta while the exchange
    target's singlet phase is -gamma t, so each step's plan targets the
    negated angle.  The returned gates keep the exchange global-phase
    convention so quantized and exact schedules differ only by the phase
    misses, not by bookkeeping.
    """
    plans = {}
    for step in schedule.steps:
        if step not in plans:
            plans[step] = plan_power(theta, -step.gamma_t, epsilon, cap=cap)

    def gate_for_step(step):
        plan = plans[step]
        achieved = 2.0 * plan.k * plan.theta
        return heisenberg_target(-achieved)

    return [plans[s] for s in schedule.steps], gate_for_step


def logical_unitary(schedule, n, gate_for_step=None):
    """Code-subspace block of the schedule's unitary plus worst-case leakage.

    Leakage is the largest singular value of the out-of-code component of
    U restricted to code-space inputs; exact exchange gates give exactly 0
    because they commute with each pair's total spin.
    """
    if n not in (1, 2):
        raise ConfigError(f"logical_unitary supports 1 or 2 logical qubits, got {n}")
    m = 3 * n
    schedule.validate(m)
    if gate_for_step is None:
        gate_for_step = lambda step: heisenberg_target(step.gamma_t)
    U = np.eye(2 ** m, dtype=complex)
    for step in schedule.steps:
        U = embed_pair_gate(gate_for_step(step), step.pair, m) @ U
    C = code_matrix(n)
    on_code = U @ C
    block = C.conj().T @ on_code
    leaked = on_code - C @ block
    leakage = float(np.linalg.svd(leaked, compute_uv=False)[0]) if leaked.size else 0.0
    return block, leakage


@dataclass(frozen=True)
class PreparationResult:
    """Outcome of the singlet preparation protocol."""

    state: LogicalQubitState
    fidelity: float
    achieved_phase: float
    phase_fix: float
    plan: SynthesisPlan = None


def prepare_singlet_protocol(plan, phase_fix=True, max_phase_miss=0.2):
    """Prepare |0_L> from |up down up> by repeated scattering plus a phase fix.

    The plan's collisions put a phase of 2 k theta on the singlet component
    of the first two rails, approximating the theta = pi/2 collision gate; a
    fixed single-rail correction diag(1, e^{-i pi/2}) on rail 0 (the idealized
    localized-field pass) then turns (|ud> - i|du>)|u>/sqrt2 into |S>|u>.
    Without the fix the overlap with |0_L> is 1/2 exactly.
    """
    if circle_distance(plan.target_phase, math.pi / 2.0) > 1e-9:
        raise ConfigError(
            f"preparation needs a plan targeting pi/2 on the singlet, "
            f"got target {plan.target_phase:g}")
    achieved = 2.0 * plan.k * plan.theta
    miss = circle_distance(achieved, math.pi / 2.0)
    if miss > max_phase_miss:
        raise ConfigError(
            f"plan reaches the singlet phase only to {miss:.3f} rad "
            f"(> {max_phase_miss:g}); preparation would be useless")

    psi = np.zeros(8, dtype=complex)
    psi[0b010] = 1.0          # |up down up>
    gate = PhaseGate(entries=(1.0, 1.0, np.exp(1j * achieved), 1.0))
    psi = embed_pair_gate(gate, (0, 1), 3) @ psi
    fix = -math.pi / 2.0
    if phase_fix:
        # diagonal phase on the down component of rail 0
        down0 = (np.arange(8) & 0b100) != 0
        psi = np.where(down0, np.exp(1j * fix) * psi, psi)
    state = LogicalQubitState(physical=psi, n_logical=1)
    target = code_matrix(1)[:, 0]
    fidelity = float(abs(np.vdot(target, psi)) ** 2)
    return PreparationResult(state=state, fidelity=fidelity,
                             achieved_phase=float(achieved % (2.0 * math.pi)),
                             phase_fix=fix if phase_fix else 0.0, plan=plan)


@dataclass(frozen=True)
class MeasurementStats:
    """z measurement of the third rail: exact probability and sampled counts."""

    p_down: float
    repetitions: int
    n_down: int
    seed: object = None

    @property
    def n_up(self):
        return self.repetitions - self.n_down

    @property
    def frequency(self):
        return self.n_down / self.repetitions if self.repetitions else float("nan")


def measure_third_spin(state, repetitions=0, rng_seed=None):
    """Measure rail 2 of the first triple along z.

    The exact down probability is returned always; with repetitions > 0 a
    seeded generator draws that many shots (|0_L> gives 0, |1_L> gives 2/3).
    """
    m = state.num_spins
    bit = 1 << (m - 1 - 2)
    weights = np.abs(state.physical) ** 2
    nrm = weights.sum()
    if nrm <= 0:
        raise ConfigError("cannot measure a zero state")
    p_down = float(weights[(np.arange(weights.size) & bit) != 0].sum() / nrm)
    n_down = 0
    if repetitions:
        rng = np.random.default_rng(rng_seed)
        n_down = int(rng.binomial(int(repetitions), p_down))
    return MeasurementStats(p_down=p_down, repetitions=int(repetitions),
                            n_down=n_down, seed=rng_seed)


def majority_vote_error(repetitions, p_correct=2.0 / 3.0):
    """Probability that a majority vote over independent shots decides wrong.

    Exact binomial tail P[successes <= R/2] with ties counted as errors; for
    p_correct > 1/2 this shrinks exponentially in the repetition count.
    """
    R = int(repetitions)
    if R < 1:
        raise ConfigError(f"need at least one repetition, got {repetitions}")
    if not 0.0 <= p_correct <= 1.0:
        raise ConfigError(f"p_correct must be a probability, got {p_correct}")
    return float(binom.cdf(R // 2, R, p_correct))

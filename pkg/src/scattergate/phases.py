"""Closed-form two-particle scattering phases and the resulting spin gates.

For two packets with momenta k1, k2 colliding on a line, centre-of-mass and
relative momenta are

    p1 = -(k1 + k2),   p2 = (k2 - k1) / 2,   c = cos(p1 / 2),

and the relative coordinate moves on a chain with hopping 2tc, so the relative
dispersion is E = -4tc cos(p2).  The closed forms below are written for the
branch on which exp(i p2 r) is the incoming relative wave, which means
sign(p2) = -sign(c); RelativeKinematics canonicalises the branch so swapping
the packet labels does not silently conjugate every phase.

Channel amplitudes are quoted in the mirror convention: the outgoing relative
packet in a channel is (amplitude) x (the mirrored incoming packet).  A free
spatially antisymmetric channel then has amplitude -1 and a free symmetric
one +1, so the spin gate relative to free propagation of distinguishable
particles is

    g_raw = diag(-rho_T+, -rho_T0, +rho_S, -rho_T-).

Models with a hard core scatter each channel off a half line (site r=0
removed) with a potential v on the r = +-1 sites:

    rho(v) = -(v e^{i p2} + 2tc) / (v e^{-i p2} + 2tc)

with v = 0 for t-J triplets (gate entry exactly 1), v = -J for the t-J
singlet (reproducing the standard reflection formula), and the XXZ channel
values (Jz/4, Jx/2 - Jz/4, -Jx/2 - Jz/4) for (T+-, T0, S).  Hubbard has no
hard core; its triplets are free and the symmetric channel amplitude is
1 - 2U / (U + 4itc sin p2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .hamiltonians import CHANNELS, ModelParams, channel_edge_potentials

__all__ = [
    "RelativeKinematics",
    "PhaseGate",
    "half_line_reflection",
    "tj_reflection",
    "hubbard_phase",
    "gate_g",
    "gate_g_xxz",
    "phase_curve",
    "unwrap_phases",
]

_KIN_TOL = 1e-12


@dataclass(frozen=True)
class RelativeKinematics:
    """Two-packet collision kinematics on a line (canonical relative branch)."""

    k1: float
    k2: float
    p1: float
    p2: float
    c: float

    @classmethod
    def from_momenta(cls, k1, k2):
        k1 = float(k1)
        k2 = float(k2)
        for k in (k1, k2):
            if not 0.0 < k < math.pi:
                raise ConfigError(f"packet momentum {k:g} outside (0, pi)")
        p1 = -(k1 + k2)
        c = math.cos(p1 / 2.0)
        if abs(c) < _KIN_TOL:
            raise ConfigError(
                f"k1 + k2 = pi makes the relative motion dispersionless (c = cos((k1+k2)/2) = 0)")
        p2 = (k2 - k1) / 2.0
        if abs(math.sin(p2)) < _KIN_TOL:
            raise ConfigError("equal momenta: packets never collide")
        p2 = -math.copysign(abs(p2), c)
        return cls(k1=k1, k2=k2, p1=p1, p2=p2, c=c)

    @property
    def group_velocities(self):
        """(v1, v2) in units of t."""
        return 2.0 * math.sin(self.k1), 2.0 * math.sin(self.k2)

    @property
    def closing_speed(self):
        v1, v2 = self.group_velocities
        return abs(v1 - v2)


def half_line_reflection(v, kin, t=1.0):
    """Reflection off the hard core with potential v on the first sites.

    Mirror-convention amplitude for one relative-coordinate channel of a
    hard-core model; v=0 gives exactly -1.
    """
    q = kin.p2
    tc2 = 2.0 * t * kin.c
    return -(v * np.exp(1j * q) + tc2) / (v * np.exp(-1j * q) + tc2)


def tj_reflection(J, kin, t=1.0):
    """Singlet reflection amplitude of the t-J collision.

    Equals half_line_reflection(-J, kin, t); kept in the standard printed
    arrangement.  J=0 gives -1, J=inf gives -exp(2i p2).
    """
    q = kin.p2
    phase = -np.exp(2j * q)
    if math.isinf(J):
        return complex(phase)
    tc2 = 2.0 * t * kin.c
    return phase * (J - tc2 * np.exp(-1j * q)) / (J - tc2 * np.exp(1j * q))


def hubbard_phase(U, kin, t=1.0):
    """Symmetric-channel amplitude of the Hubbard collision, 1 - 2U/(U + 4itc sin p2).

    U=0 gives 1 (free), U=inf gives -1 (hard-core limit).
    """
    if math.isinf(U):
        return complex(-1.0)
    return 1.0 - 2.0 * U / (U + 4j * t * kin.c * math.sin(kin.p2))


@dataclass(frozen=True)
class PhaseGate:
    """Diagonal spin gate in the coupled basis (T+, T0, S, T-).

    `entries` is the diagonal after factoring exp(i factored_phase) out, so
    gates are stored with corner (T+-) entries exactly 1.
    """

    entries: tuple
    factored_phase: float = 0.0

    @property
    def channels(self):
        return CHANNELS

    def diagonal(self):
        """Full diagonal including the factored common phase."""
        return np.asarray(self.entries, dtype=complex) * np.exp(1j * self.factored_phase)

    def unitary(self):
        return np.diag(self.diagonal())

    def channel_phase(self, channel):
        """Principal argument of one diagonal entry (factored phase excluded)."""
        return float(np.angle(self.entries[CHANNELS.index(channel)]))

    @property
    def singlet_phase(self):
        return self.channel_phase("S")

    def power(self, k):
        k = int(k)
        entries = tuple(np.asarray(self.entries, dtype=complex) ** k)
        return PhaseGate(entries=entries, factored_phase=k * self.factored_phase)

    def unitarity_defect(self):
        return float(np.max(np.abs(np.abs(np.asarray(self.entries, dtype=complex)) - 1.0)))


def gate_g(params, kin):
    """Spin gate of one collision, relative to free distinguishable propagation.

    t-J:      diag(1, 1, R(J), 1)
    Hubbard:  diag(1, 1, 1 - 2U/(U + 4itc sin p2), 1)
    XXZ:      diag(1, rho_T0/rho_T, -rho_S/rho_T, 1) with the common phase of
              the T+- entries, Arg(-rho_T), factored out and recorded.
    """
    if not isinstance(params, ModelParams):
        raise ConfigError("gate_g needs ModelParams")
    if params.model == "tj":
        return PhaseGate(entries=(1.0, 1.0, complex(tj_reflection(params.J, kin, params.t)), 1.0))
    if params.model == "hubbard":
        return PhaseGate(entries=(1.0, 1.0, complex(hubbard_phase(params.U, kin, params.t)), 1.0))
    v_plus, v_zero, v_sing, _ = channel_edge_potentials(params)
    rho_t = half_line_reflection(v_plus, kin, params.t)
    rho_0 = half_line_reflection(v_zero, kin, params.t)
    rho_s = half_line_reflection(v_sing, kin, params.t)
    common = -rho_t
    entries = (1.0, complex(rho_0 / rho_t), complex(-rho_s / rho_t), 1.0)
    return PhaseGate(entries=entries, factored_phase=float(np.angle(common)))


def gate_g_xxz(Jx, Jz, kin, t=1.0):
    """XXZ collision gate (see gate_g); Jx = Jz = 0 gives diag(1, 1, -1, 1)."""
    return gate_g(ModelParams(model="xxz", t=t, Jx=Jx, Jz=Jz), kin)


def phase_curve(params, couplings, kin):
    """Gates along a sweep of the scalar coupling (t-J J or Hubbard U).

    Returns (gates, thetas) with thetas the unwrapped singlet phases; the
    first theta is the principal argument of the first gate.
    """
    couplings = np.asarray(couplings, dtype=float)
    if couplings.ndim != 1 or couplings.size == 0:
        raise ConfigError("couplings must be a non-empty 1d array")
    gates = [gate_g(params.with_coupling(g), kin) for g in couplings]
    return gates, unwrap_phases(g.singlet_phase for g in gates)


def unwrap_phases(phases):
    return np.unwrap(np.fromiter((float(p) for p in phases), dtype=float))

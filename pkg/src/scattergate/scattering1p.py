"""Single-particle scattering on graphs with semi-infinite rails.

For a core graph with adjacency A and terminals tau_1..tau_m, each terminal
carries a semi-infinite rail.  Under H = -t(A + rails) an incoming plane wave
of momentum k in (0, pi) on rail `i` has energy E = -2t cos k and rail
amplitudes

    psi_j(d) = delta_{ji} e^{-ikd} + S_{ji} e^{+ikd},   d = 1, 2, ...

with d the distance from the terminal.  Eliminating the rails exactly leaves
a finite linear system for the core amplitudes and the S-matrix column: the
bulk rail equations are satisfied identically and the d = 1 equation reduces
to the continuity condition psi_{tau_j} = delta_{ji} + S_{ji}.

The S-matrix is unitary and, because the core Hamiltonian is real symmetric,
satisfies S(-k) = conj(S(k)).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalFailure
from .graphs import build_momentum_switch
from .propagate import expm_apply

__all__ = ["SMatrix", "s_matrix", "verify_switch", "SwitchReport", "evolve_1p"]

#: default certification tolerance for the momentum switch
SWITCH_TOL = 1e-10

#: (momentum, in-rail, out-rail) pairs the switch must route perfectly, 0-based
SWITCH_ROUTES = ((np.pi / 4, 0, 2), (np.pi / 2, 1, 2))


@dataclass(frozen=True)
class SMatrix:
    """S-matrix of a terminated graph at fixed momentum.

    matrix[j, i] is the outgoing amplitude on rail j for a unit wave incoming
    on rail i (rails 0-based, ordered like the graph's terminal list).
    """

    k: float
    matrix: np.ndarray

    def unitarity_defect(self):
        s = self.matrix
        return float(np.max(np.abs(s.conj().T @ s - np.eye(len(s)))))

    def transmission(self, i, j):
        """|S_{ji}|^2, the transmission probability from rail i to rail j."""
        return float(abs(self.matrix[j, i]) ** 2)


def s_matrix(graph, k, t=1.0):
    """Exact S-matrix of `graph` (with rails on its terminals) at momentum k.

    Parameters
    ----------
    graph : ScatterGraph
        Core graph; must have at least one terminal.
    k : float
        Momentum with 0 < |k| < pi.  Negative k returns conj(S(|k|)).
    t : float
        Hopping amplitude (sets the energy scale only).

    Raises
    ------
    ConfigError
        If there are no terminals or k is at a band edge (sin k = 0).
    NumericalFailure
        If the scattering linear system is singular at this energy.
    """
    m = graph.num_terminals
    if m == 0:
        raise ConfigError("graph has no terminals to attach rails to")
    if t <= 0:
        raise ConfigError("hopping t must be positive")
    k = float(k)
    if abs(np.sin(k)) < 1e-12 or not np.isfinite(k):
        raise ConfigError(f"momentum k={k} is at a band edge; no propagating wave")
    if k < 0:
        return SMatrix(k=k, matrix=s_matrix(graph, -k, t).matrix.conj())

    n = graph.num_vertices
    a = graph.adjacency().toarray().astype(complex)
    energy = -2.0 * t * np.cos(k)
    # unknown vector: (psi_core[0..n-1], S[0..m-1]); one linear system per in-rail
    mat = np.zeros((n + m, n + m), dtype=complex)
    rhs = np.zeros((n + m, m), dtype=complex)
    # core vertex equations: -t sum_u A_vu psi_u - t sum_{j: tau_j=v} psi_j(1) = E psi_v
    mat[:n, :n] = -t * a - energy * np.eye(n)
    for j, tau in enumerate(graph.terminals):
        # psi_j(1) = delta e^{-ik} + S_j e^{ik}
        mat[tau, n + j] += -t * np.exp(1j * k)
        rhs[tau, j] += t * np.exp(-1j * k)
        # continuity: psi_tau = delta + S_j
        mat[n + j, tau] = 1.0
        mat[n + j, n + j] = -1.0
        rhs[n + j, j] = 1.0
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(
            f"scattering system singular at k={k:.6g} (bound state at this energy?)"
        ) from exc
    return SMatrix(k=k, matrix=sol[n:, :].copy())


def transmission_delay(graph, k, rail_out, rail_in, t=1.0, dk=1e-5):
    """Group delay of transmission rail_in -> rail_out, in lattice sites.

    d Arg(S_out,in)/dk; a transmitted packet emerges displaced back by this
    many sites relative to free flight across a zero-size junction.  Resonant
    structures such as momentum switches hold packets for several sites.
    """
    lo = s_matrix(graph, k - dk, t).matrix[rail_out, rail_in]
    hi = s_matrix(graph, k + dk, t).matrix[rail_out, rail_in]
    if min(abs(lo), abs(hi)) < 1e-12:
        raise NumericalFailure(
            f"no transmission {rail_in}->{rail_out} near k={k:.6g}; "
            "delay undefined")
    return float(np.angle(hi / lo)) / (2.0 * dk)


@dataclass(frozen=True)
class SwitchReport:
    """Result of certifying a momentum-switch candidate."""

    certified: bool
    tol: float
    transmissions: tuple          # |S_out,in| per required route
    unitarity_defect: float       # worst over the checked momenta
    elapsed_seconds: float

    def __str__(self):
        status = "certified" if self.certified else "REJECTED"
        routes = ", ".join(f"{x:.3e}" for x in self.transmissions)
        return (f"switch {status}: |1-|S|| per route = [{routes}], "
                f"unitarity defect {self.unitarity_defect:.3e}, "
                f"{self.elapsed_seconds * 1e3:.1f} ms")


def verify_switch(graph=None, tol=SWITCH_TOL, t=1.0):
    """Certify that a 3-terminal graph is a momentum switch.

    Checks perfect transmission terminal 1 <-> 3 at |k| = pi/4 and terminal
    2 <-> 3 at |k| = pi/2 (1-based labels), plus S-matrix unitarity at both
    momenta, all within `tol`.  With no argument the bundled switch is used.
    """
    if graph is None:
        graph = build_momentum_switch()
    if graph.num_terminals != 3:
        raise ConfigError("a momentum switch needs exactly 3 terminals")
    start = time.perf_counter()
    defects = []
    unitarity = 0.0
    for k, rail_in, rail_out in SWITCH_ROUTES:
        s = s_matrix(graph, k, t)
        defects.append(abs(1.0 - abs(s.matrix[rail_out, rail_in])))
        unitarity = max(unitarity, s.unitarity_defect())
    elapsed = time.perf_counter() - start
    certified = all(d <= tol for d in defects) and unitarity <= tol
    return SwitchReport(
        certified=certified,
        tol=tol,
        transmissions=tuple(defects),
        unitarity_defect=unitarity,
        elapsed_seconds=elapsed,
    )


def evolve_1p(graph, psi0, duration, t=1.0, tol=1e-8):
    """Evolve a single-particle wavefunction under H = -t A for `duration`.

    Accepts a ScatterGraph or RailedGraph; psi0 is a complex vector over the
    (combined) vertex set.
    """
    g = getattr(graph, "graph", graph)
    h = (-t) * graph_adjacency_csr(g)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (g.num_vertices,):
        raise ConfigError(
            f"state has shape {psi0.shape}, expected ({g.num_vertices},)")
    return expm_apply(h, psi0, duration, tol=tol)


def graph_adjacency_csr(g):
    return g.adjacency().astype(float)

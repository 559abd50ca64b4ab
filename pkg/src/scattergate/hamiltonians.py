"""Sparse Hamiltonians for one and two itinerant spin-1/2 fermions on a graph.

Models
------
Hubbard      H = -t sum_sigma sum_{(i,j) in E} (c+_i c_j + h.c.) + U sum_i n_up n_dn
t-J          H = P [ -t hopping + J sum_{(i,j) in E} (S_i.S_j - n_i n_j / 4) ] P
XXZ          H = P [ -t hopping + sum_{(i,j) in E} (Jx (Sx Sx + Sy Sy) + Jz Sz Sz) ] P

with P the no-double-occupancy projector (absent for Hubbard).  The sign
convention is H1 = -t A, so a momentum-k packet moves with group velocity
+2t sin k.

Two-particle basis
------------------
Antisymmetrised two-fermion states, grouped into the four coupled spin
channels T+, T0, S, T- (in that order).  For a site pair a < b,

    |a b; T+> = c+_{a u} c+_{b u} |0>
    |a b; T0> = (c+_{a u} c+_{b d} + c+_{a d} c+_{b u}) |0> / sqrt(2)
    |a b; S>  = (c+_{a u} c+_{b d} - c+_{a d} c+_{b u}) |0> / sqrt(2)
    |a b; T-> = c+_{a d} c+_{b d} |0>

plus, for Hubbard only, the doubly occupied singlets |i i> = c+_{i u} c+_{i d}|0>.
Triplet channels carry an antisymmetric spatial wavefunction and the singlet a
symmetric one, so hopping acquires a fermionic sign in the triplet blocks when
the moving index crosses the spectator index, and no sign in the singlet
block.  The Hamiltonian is block diagonal over the four channels; per edge the
interaction is diagonal with channel values

    Hubbard:  0 (doubles carry +U on site)
    t-J:      (0, 0, -J, 0)           for (T+, T0, S, T-)
    XXZ:      (Jz/4, Jx/2 - Jz/4, -Jx/2 - Jz/4, Jz/4)

These are the per-edge eigenvalues of the corresponding two-spin operators.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError

__all__ = [
    "CHANNELS",
    "COUPLED_FROM_UNCOUPLED",
    "ModelParams",
    "SpinHalfPairState",
    "TwoParticleBasis",
    "SparseHamiltonian",
    "one_particle_h",
    "two_particle_h",
    "channel_edge_potentials",
]

#: coupled-basis channel order used everywhere (gates are diag in this order)
CHANNELS = ("T+", "T0", "S", "T-")

_SQRT1_2 = 1.0 / np.sqrt(2.0)

#: rows: coupled (T+, T0, S, T-); columns: uncoupled (uu, ud, du, dd)
COUPLED_FROM_UNCOUPLED = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, _SQRT1_2, _SQRT1_2, 0.0],
    [0.0, _SQRT1_2, -_SQRT1_2, 0.0],
    [0.0, 0.0, 0.0, 1.0],
])

_MODELS = ("hubbard", "tj", "xxz")


@dataclass(frozen=True)
class ModelParams:
    """Model selection and couplings.  Unused couplings stay None."""

    model: str
    t: float = 1.0
    U: float = None
    J: float = None
    Jx: float = None
    Jz: float = None

    def __post_init__(self):
        if self.model not in _MODELS:
            raise ConfigError(f"unknown model {self.model!r}, expected one of {_MODELS}")
        if not (np.isfinite(self.t) and self.t > 0):
            raise ConfigError(f"hopping t must be positive and finite, got {self.t}")
        need = {"hubbard": ("U",), "tj": ("J",), "xxz": ("Jx", "Jz")}[self.model]
        for name in need:
            val = getattr(self, name)
            if val is None or not np.isfinite(val):
                raise ConfigError(f"model {self.model!r} needs finite {name}")

    def coupling_label(self):
        return {"hubbard": "U", "tj": "J", "xxz": "Jx,Jz"}[self.model]

    def with_coupling(self, value):
        """Copy with the scalar coupling replaced (Hubbard U or t-J J)."""
        if self.model == "hubbard":
            return replace(self, U=float(value))
        if self.model == "tj":
            return replace(self, J=float(value))
        raise ConfigError("with_coupling needs a scalar-coupling model (hubbard or tj)")

    def free_copy(self):
        """Same model with the interaction switched off (reference dynamics)."""
        if self.model == "hubbard":
            return replace(self, U=0.0)
        if self.model == "tj":
            return replace(self, J=0.0)
        return replace(self, Jx=0.0, Jz=0.0)

    @property
    def has_hard_core(self):
        return self.model in ("tj", "xxz")


@dataclass(frozen=True)
class SpinHalfPairState:
    """Spin state of a fermion pair, stored in the coupled basis (T+, T0, S, T-)."""

    coupled: tuple

    @classmethod
    def from_coupled(cls, amps):
        amps = np.asarray(amps, dtype=complex)
        if amps.shape != (4,):
            raise ConfigError("need 4 coupled amplitudes")
        return cls(coupled=tuple(amps))

    @classmethod
    def from_uncoupled(cls, amps):
        """From (uu, ud, du, dd) amplitudes."""
        amps = np.asarray(amps, dtype=complex)
        if amps.shape != (4,):
            raise ConfigError("need 4 uncoupled amplitudes")
        return cls(coupled=tuple(COUPLED_FROM_UNCOUPLED @ amps))

    def to_uncoupled(self):
        return COUPLED_FROM_UNCOUPLED.T @ np.asarray(self.coupled)

    def norm(self):
        return float(np.linalg.norm(self.coupled))


class TwoParticleBasis:
    """Index bookkeeping for the blocked two-fermion basis.

    Layout: [T+ pairs][T0 pairs][S pairs (+ doubles for Hubbard)][T- pairs],
    pairs (a < b) in lexicographic order.
    """

    def __init__(self, num_sites, include_doubles):
        if num_sites < 2:
            raise ConfigError("two particles need at least two sites")
        self.num_sites = int(num_sites)
        self.include_doubles = bool(include_doubles)
        n = self.num_sites
        self.num_pairs = n * (n - 1) // 2
        self.pair_a, self.pair_b = (x.astype(np.int64) for x in np.triu_indices(n, k=1))
        p = self.num_pairs
        s_dim = p + (n if include_doubles else 0)
        self.block_dims = (p, p, s_dim, p)
        self.offsets = (0, p, 2 * p, 2 * p + s_dim)
        self.dim = 3 * p + s_dim

    def pair_index(self, a, b):
        """Index of the (a, b) pair, a < b elementwise (vectorised)."""
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        n = self.num_sites
        return a * (2 * n - a - 1) // 2 + (b - a - 1)

    def index(self, channel, a, b):
        """Global index of |a b; channel> (a < b)."""
        c = CHANNELS.index(channel)
        return self.offsets[c] + self.pair_index(a, b)

    def double_index(self, site):
        """Global index of the doubly-occupied singlet |site site> (Hubbard)."""
        if not self.include_doubles:
            raise ConfigError("this basis has no doubly-occupied states")
        return self.offsets[2] + self.num_pairs + site

    def block_slice(self, channel):
        c = CHANNELS.index(channel)
        return slice(self.offsets[c], self.offsets[c] + self.block_dims[c])


@dataclass(frozen=True)
class SparseHamiltonian:
    """A sparse Hamiltonian together with its basis bookkeeping."""

    matrix: sp.csr_matrix
    basis: object = None
    params: ModelParams = None

    @property
    def dim(self):
        return self.matrix.shape[0]


def one_particle_h(graph, t=1.0):
    """H1 = -t A on the (combined, if railed) vertex set."""
    g = getattr(graph, "graph", graph)
    if t <= 0:
        raise ConfigError("hopping t must be positive")
    return SparseHamiltonian(matrix=(-t) * g.adjacency().astype(float))


def channel_edge_potentials(params):
    """Per-edge interaction eigenvalue for each coupled channel (T+, T0, S, T-).

    For Hubbard the edge values are zero (the interaction is the on-site U of
    the doubly occupied singlets, handled separately).
    """
    if params.model == "tj":
        return (0.0, 0.0, -params.J, 0.0)
    if params.model == "xxz":
        vt = params.Jz / 4.0
        return (vt, params.Jx / 2.0 - vt, -params.Jx / 2.0 - vt, vt)
    return (0.0, 0.0, 0.0, 0.0)


def two_particle_h(graph, params):
    """Blocked two-fermion Hamiltonian on `graph` for `params`.

    Returns a SparseHamiltonian whose basis is a TwoParticleBasis.  The matrix
    is real (float64) and block diagonal over the coupled spin channels.
    """
    g = getattr(graph, "graph", graph)
    basis = TwoParticleBasis(g.num_vertices, include_doubles=params.model == "hubbard")
    n = basis.num_sites
    t = params.t

    rows, cols, vals = [], [], []       # triplet hop block (pair indices)
    srows, scols, svals = [], [], []    # singlet hop block
    all_sites = np.arange(n, dtype=np.int64)
    for (u, v) in g.edges:
        w = all_sites[(all_sites != u) & (all_sites != v)]
        src = basis.pair_index(np.minimum(u, w), np.maximum(u, w))
        tgt = basis.pair_index(np.minimum(v, w), np.maximum(v, w))
        # fermionic sign when the hopping index crosses the spectator index
        flip = (w > u) != (w > v)
        amp = np.where(flip, t, -t)
        rows.extend((src, tgt))
        cols.extend((tgt, src))
        vals.extend((amp, amp))
        srows.extend((src, tgt))
        scols.extend((tgt, src))
        svals.extend((np.full(len(w), -t),) * 2)

    p = basis.num_pairs
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        hop_t = sp.coo_matrix((vals, (rows, cols)), shape=(p, p))
        hop_s = sp.coo_matrix(
            (np.concatenate(svals), (np.concatenate(srows), np.concatenate(scols))),
            shape=(p, p))
    else:
        hop_t = sp.coo_matrix((p, p))
        hop_s = sp.coo_matrix((p, p))

    v_plus, v_zero, v_sing, v_minus = channel_edge_potentials(params)
    edge_pairs = (basis.pair_index(np.array([e[0] for e in g.edges], dtype=np.int64),
                                   np.array([e[1] for e in g.edges], dtype=np.int64))
                  if g.edges else np.array([], dtype=np.int64))

    def with_diag(hop, value):
        if value == 0.0 or len(edge_pairs) == 0:
            return hop
        d = np.zeros(p)
        d[edge_pairs] = value
        return hop + sp.diags(d)

    blocks = [with_diag(hop_t, v_plus), with_diag(hop_t, v_zero)]

    s_block = with_diag(hop_s, v_sing)
    if params.model == "hubbard":
        # pair <-> double couplings: -sqrt(2) t between |uv;S> and |uu>, |vv>
        s_dim = p + n
        coo = s_block.tocoo()
        srow = [coo.row]
        scol = [coo.col]
        sval = [coo.data]
        amp = -np.sqrt(2.0) * t
        for (u, v) in g.edges:
            pi = int(basis.pair_index(u, v))
            for site in (u, v):
                srow.append(np.array([pi, p + site]))
                scol.append(np.array([p + site, pi]))
                sval.append(np.array([amp, amp]))
        srow.append(np.arange(p, s_dim))
        scol.append(np.arange(p, s_dim))
        sval.append(np.full(n, float(params.U)))
        s_block = sp.coo_matrix(
            (np.concatenate(sval), (np.concatenate(srow), np.concatenate(scol))),
            shape=(s_dim, s_dim))
    blocks.append(s_block)
    blocks.append(with_diag(hop_t, v_minus))

    matrix = sp.block_diag(blocks, format="csr")
    return SparseHamiltonian(matrix=matrix, basis=basis, params=params)

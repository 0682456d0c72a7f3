"""Edge scattering matrix, bond propagator and quantum map.

All matrices use the channel layout of `MetricGraph.directed_bond_order`:
directed bonds first, leads last.  With ``Sigma`` mapping incoming to
outgoing amplitudes and ``T = exp(ikL)`` propagating along bonds, the
quantum map is ``U = diag(T, I) Sigma``.  Its blocks are

    U_BB = T Sigma_BB,  U_BL = T Sigma_BL,  U_LB = Sigma_LB,  U_LL = Sigma_LL.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .errors import ConditionError, GraphSpecError
from .graph import MetricGraph, length_and_permutation
from .vertex import VertexCondition, vertex_sigma, vertex_sigma_derivative


def check_conditions(graph: MetricGraph, conditions: Mapping[str, VertexCondition]):
    """Raise unless every vertex has a condition of matching dimension."""
    for v in graph.vertices:
        if v not in conditions:
            raise ConditionError("no vertex condition given", v)
        c = conditions[v]
        d = graph.degrees[v]
        mats = [m for m in (c.A, c.B, c.S) if m is not None]
        if any(m.shape != (d, d) for m in mats):
            raise ConditionError(f"condition dimension does not match degree {d}", v)
    extra = set(conditions) - set(graph.vertices)
    if extra:
        raise GraphSpecError(f"conditions given for unknown vertices {sorted(extra)}")


def _assemble(graph, conditions, k, fn):
    n = graph.n_channels
    M = np.zeros((n, n), dtype=complex)
    for v, stubs in graph.stubs.items():
        d = len(stubs)
        if d == 0:
            continue
        S = fn(conditions[v], k, d)
        if S.shape != (d, d):
            raise ConditionError(f"condition dimension does not match degree {d}", v)
        inc = [s.incoming for s in stubs]
        out = [s.outgoing for s in stubs]
        M[np.ix_(out, inc)] = S
    return M


def edge_scattering(graph: MetricGraph, conditions, k) -> np.ndarray:
    """Full edge scattering matrix ``Sigma(k)`` (incoming to outgoing amplitudes)."""
    if set(graph.vertices) - set(conditions):
        check_conditions(graph, conditions)
    return _assemble(graph, conditions, complex(k), vertex_sigma)


def edge_scattering_derivative(graph: MetricGraph, conditions, k) -> np.ndarray:
    return _assemble(graph, conditions, complex(k), vertex_sigma_derivative)


@dataclass(frozen=True, eq=False)
class QuantumMapSnapshot:
    """Quantum map and its ingredients at one wavenumber.

    ``T`` holds the diagonal of the bond propagator.  Blocks are views into
    ``U``.
    """

    k: complex
    U: np.ndarray
    T: np.ndarray
    Sigma: np.ndarray
    dSigma: np.ndarray
    lengths: np.ndarray
    n_bonds: int
    n_leads: int

    @property
    def _nb(self):
        return 2 * self.n_bonds

    @property
    def UBB(self):
        return self.U[:self._nb, :self._nb]

    @property
    def UBL(self):
        return self.U[:self._nb, self._nb:]

    @property
    def ULB(self):
        return self.U[self._nb:, :self._nb]

    @property
    def ULL(self):
        return self.U[self._nb:, self._nb:]

    @cached_property
    def dU(self) -> np.ndarray:
        """``dU/dk`` from the phase derivative and the vertex derivatives."""
        nb = self._nb
        phase = np.concatenate([self.T, np.ones(self.n_leads)])
        out = phase[:, None] * self.dSigma
        out[:nb] += 1j * self.lengths[:, None] * self.U[:nb]
        return out


def quantum_map(graph: MetricGraph, conditions, k) -> QuantumMapSnapshot:
    """Evaluate the quantum map at complex wavenumber `k` (``k != 0``)."""
    k = complex(k)
    if k == 0:
        raise ConditionError("the quantum map is not evaluated at k = 0")
    Sigma = edge_scattering(graph, conditions, k)
    dSigma = edge_scattering_derivative(graph, conditions, k)
    lengths = graph.bond_lengths
    T = np.exp(1j * k * lengths)
    U = Sigma.copy()
    U[:2 * graph.n_bonds] *= T[:, None]
    return QuantumMapSnapshot(k, U, T, Sigma, dSigma, lengths,
                              graph.n_bonds, graph.n_leads)


def quantum_map_derivative(graph: MetricGraph, conditions, k) -> np.ndarray:
    """``dU/dk`` at `k`."""
    return quantum_map(graph, conditions, k).dU


def derivative_closed_form(graph: MetricGraph, snap: QuantumMapSnapshot) -> np.ndarray:
    """``dU/dk`` from the commutator-type closed formula.

        dU/dk = D U + (1/2k) [E_+ - U E_- U],

    where ``D = diag(iL, 0)`` and ``E_+- = diag(exp(+-ikL) Pi, I)``.  Valid
    when every vertex matrix is of the ``(A, B)`` form; a ``constant``
    prescribed matrix breaks the identity.
    """
    _, Pi = length_and_permutation(graph)
    nb, n = 2 * graph.n_bonds, graph.n_channels
    k = snap.k
    Ep = np.eye(n, dtype=complex)
    Em = np.eye(n, dtype=complex)
    Ep[:nb, :nb] = np.diag(snap.T) @ Pi
    Em[:nb, :nb] = np.diag(np.exp(-1j * k * snap.lengths)) @ Pi
    D = np.zeros(n, dtype=complex)
    D[:nb] = 1j * snap.lengths
    return D[:, None] * snap.U + (Ep - snap.U @ Em @ snap.U) / (2 * k)

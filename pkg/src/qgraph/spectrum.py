"""Secular equation, eigenvalue search and eigenprojections of compact graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegeneracyError, GraphSpecError, ScanResolutionError
from .graph import GraphPoint, MetricGraph, length_and_permutation
from .qmap import quantum_map

MULTIPLICITY_RTOL = 1e-6
ROOT_RESIDUAL = 1e-8
GAUSS_NODES = 64


@dataclass(frozen=True, eq=False)
class SpectralRoot:
    """A positive eigen-wavenumber.

    ``b`` and ``C`` are only filled in for simple roots (see
    `eigenvector_and_normalization`).
    """

    k: float
    multiplicity: int
    b: np.ndarray | None = None
    C: float | None = None


def _require_compact(graph):
    if not graph.is_compact:
        raise GraphSpecError("the secular function is defined for compact graphs only")


def secular(graph: MetricGraph, conditions, k) -> complex:
    """``xi(k) = det(I - U(k))``."""
    _require_compact(graph)
    U = quantum_map(graph, conditions, k).U
    return complex(np.linalg.det(np.eye(len(U)) - U))


# --------------------------------------------------------------------------
# generic search for real k at which a matrix function has eigenvalue one

def _newton(mat_and_deriv, k0, tol, max_iter=200):
    """Newton iteration on ``det(I - M(k))`` using Jacobi's formula.

    The step ``-xi/xi' = 1/tr((I - M)^{-1} M')`` is formed without the
    determinant, so it stays accurate near multiple roots where ``xi``
    itself underflows into round-off.
    """
    k = complex(k0)
    for _ in range(max_iter):
        M, dM = mat_and_deriv(k)
        A = np.eye(len(M)) - M
        try:
            tr = np.trace(np.linalg.solve(A, dM))
        except np.linalg.LinAlgError:
            return k
        if tr == 0 or not np.isfinite(tr):
            return k
        step = 1.0 / tr
        k += step
        if abs(step) < 0.01 * tol:
            return k
    return None


def _null_dimension(M, threshold):
    sv = np.linalg.svd(np.eye(len(M)) - M, compute_uv=False)
    return int(np.sum(sv <= threshold)), sv


def _smin(mat_and_deriv, k):
    M, _ = mat_and_deriv(k)
    return np.linalg.svd(np.eye(len(M)) - M, compute_uv=False)[-1]


def _unit_eigen_roots(mat_and_deriv, kmin, kmax, step, tol):
    """All real k in ``[kmin, kmax]`` where ``M(k)`` has eigenvalue one.

    ``mat_and_deriv(k)`` returns ``(M(k), M'(k))``.  Candidates are grid
    local minima of the smallest singular value of ``I - M`` (a scaled
    ``|det(I - M)|`` that stays linear in ``k - k_n`` at multiple roots).
    Each is refined by Newton on the determinant, with a bounded minimisation
    of the smallest singular value as fallback when Newton leaves the bracket.
    Returns ``(k, multiplicity)`` pairs sorted by k.
    """
    n = max(int(math.ceil((kmax - kmin) / step)), 2)
    grid = np.linspace(kmin, kmax, n + 1)
    h = grid[1] - grid[0]
    vals = np.empty(len(grid))
    for i, k in enumerate(grid):
        vals[i] = _smin(mat_and_deriv, k)

    cand = [i for i in range(len(grid))
            if (i == 0 or vals[i] <= vals[i - 1]) and (i == len(grid) - 1 or vals[i] <= vals[i + 1])]

    roots = []
    for i in cand:
        lo, hi = max(grid[i] - h, kmin - h), min(grid[i] + h, kmax + h)
        k = _newton(mat_and_deriv, grid[i], tol)
        if k is None or abs(k.imag) > 1e-6 or not (lo <= k.real <= hi):
            res = minimize_scalar(lambda x: _smin(mat_and_deriv, x), bounds=(lo, hi), method="bounded",
                                  options={"xatol": tol * 1e-2})
            k = complex(res.x)
        k = float(k.real)
        if not (kmin - tol <= k <= kmax + tol):
            continue
        M, _ = mat_and_deriv(k)
        norm = max(np.linalg.norm(M, 2), 1.0)
        m, sv = _null_dimension(M, MULTIPLICITY_RTOL * norm)
        if m == 0:
            continue
        if m > 1:
            k = _polish_multiple(mat_and_deriv, k, m, h, tol)
        roots.append((k, m))

    roots.sort()
    merged = []
    for k, m in roots:
        if merged and abs(k - merged[-1][0]) <= max(10 * tol, 1e-9):
            continue
        merged.append((k, m))
    return merged


def _polish_multiple(mat_and_deriv, k, m, h, tol):
    """Refine an m-fold root by minimising the sum of the m smallest singular values."""
    def f(x):
        M, _ = mat_and_deriv(x)
        sv = np.linalg.svd(np.eye(len(M)) - M, compute_uv=False)
        return float(np.sum(sv[-m:]))
    width = min(h, 1e-4)
    res = minimize_scalar(f, bounds=(k - width, k + width), method="bounded",
                          options={"xatol": tol * 1e-2})
    return float(res.x) if res.fun <= f(k) else k


def find_unit_eigen_roots(mat_and_deriv: Callable, kmin: float, kmax: float, *,
                          tol: float = 1e-10, step: float, max_refinements: int = 4):
    """Search with `step`, then confirm the result is unchanged at ``step/2``.

    The step is halved until two consecutive scans agree; if they never do
    within `max_refinements` halvings, `ScanResolutionError` is raised.
    """
    if not 0 < kmin < kmax:
        raise ValueError("need 0 < kmin < kmax")
    prev = _unit_eigen_roots(mat_and_deriv, kmin, kmax, step, tol)
    for _ in range(max_refinements):
        step /= 2
        cur = _unit_eigen_roots(mat_and_deriv, kmin, kmax, step, tol)
        if _same_roots(prev, cur, tol):
            return cur
        prev = cur
    raise ScanResolutionError(
        f"root count in [{kmin}, {kmax}] did not stabilise down to step {step:g}")


def _same_roots(a, b, tol):
    if len(a) != len(b):
        return False
    return all(abs(x[0] - y[0]) <= max(100 * tol, 1e-8) and x[1] == y[1] for x, y in zip(a, b))


def default_step(graph: MetricGraph) -> float:
    """A scan step well below the mean level spacing ``pi / total_length``."""
    return math.pi / (8 * graph.total_length)


def find_eigenvalues(graph: MetricGraph, conditions, k_min: float, k_max: float,
                     tol: float = 1e-10, step: float | None = None) -> list[SpectralRoot]:
    """Eigen-wavenumbers of a compact graph in ``[k_min, k_max]``.

    Parameters
    ----------
    graph, conditions
        Compact quantum graph.
    k_min, k_max : float
        Search window, ``0 < k_min < k_max``.
    tol : float
        Target accuracy for each root.
    step : float, optional
        Initial scan step; defaults to `default_step`.

    Returns
    -------
    list of SpectralRoot
        Sorted by k, carrying the multiplicity only.
    """
    _require_compact(graph)

    def md(k):
        s = quantum_map(graph, conditions, k)
        return s.U, s.dU

    roots = find_unit_eigen_roots(md, k_min, k_max, tol=tol,
                                  step=step or default_step(graph))
    return [SpectralRoot(k, m) for k, m in roots]


def normalization_constant(graph: MetricGraph, k: float, b: np.ndarray) -> float:
    """``C = b^dagger [L + sin(k L) Pi / k] b``, equal to ``-i b^dagger U'(k) b``.

    With this C the residue of the Green's function at ``E_n = k**2`` is the
    properly normalised projection kernel ``psi(x) conj(psi(x')) / C``.
    """
    L, Pi = length_and_permutation(graph)
    ell = np.diag(L)
    M = np.diag(ell) + np.diag(np.sin(k * ell) / k) @ Pi
    return float(np.real(b.conj() @ M @ b))


def eigenvector_and_normalization(graph: MetricGraph, conditions, k_n: float) -> SpectralRoot:
    """Unit eigenvector ``U(k_n) b = b`` and normalization constant at a simple root."""
    _require_compact(graph)
    U = quantum_map(graph, conditions, k_n).U
    n = len(U)
    _, sv, Vh = np.linalg.svd(np.eye(n) - U)
    m = int(np.sum(sv <= MULTIPLICITY_RTOL * max(np.linalg.norm(U, 2), 1.0)))
    if m == 0:
        raise GraphSpecError(f"k = {k_n!r} is not a root of the secular equation "
                             f"(smallest singular value {sv[-1]:.3e})")
    if m > 1:
        raise DegeneracyError(f"root k = {k_n!r} has multiplicity {m}; "
                              "eigenprojection of degenerate roots is not supported",
                              k=k_n, multiplicity=m)
    b = Vh[-1].conj()
    b = b / np.linalg.norm(b)
    # fix the global phase so the largest component is real and positive
    j = np.argmax(np.abs(b))
    b = b * (abs(b[j]) / b[j])
    C = normalization_constant(graph, float(np.real(k_n)), b)
    return SpectralRoot(float(np.real(k_n)), 1, b, C)


@dataclass(frozen=True, eq=False)
class ProjectionKernel:
    """``P_n(x, x') = psi(x) conj(psi(x')) / C`` for a simple eigenstate."""

    root: SpectralRoot
    graph: MetricGraph

    def psi(self, point: GraphPoint) -> complex:
        """Unnormalised eigenfunction built from incoming amplitudes ``b``."""
        g, k, b = self.graph, self.root.k, self.root.b
        p = g.locate(point)
        e = g.edge(p.edge)
        bp, bm = b[g.bond_index(e.id, "+")], b[g.bond_index(e.id, "-")]
        return complex(bm * np.exp(-1j * k * p.x) + bp * np.exp(1j * k * (p.x - e.length)))

    def __call__(self, x: GraphPoint, xp: GraphPoint) -> complex:
        return self.psi(x) * np.conj(self.psi(xp)) / self.root.C

    def trace(self, nodes: int = GAUSS_NODES) -> float:
        """``sum_e int_0^{l_e} P_n(x, x) dx`` by Gauss-Legendre quadrature."""
        t, w = np.polynomial.legendre.leggauss(nodes)
        total = 0.0
        for e in self.graph.bonds:
            xs = 0.5 * e.length * (t + 1)
            vals = [abs(self.psi(GraphPoint(e.id, x))) ** 2 for x in xs]
            total += 0.5 * e.length * float(np.dot(w, vals))
        return total / self.root.C


def projection_kernel(root: SpectralRoot, graph: MetricGraph) -> ProjectionKernel:
    if root.multiplicity != 1 or root.b is None:
        raise DegeneracyError("projection kernels need a simple root with eigenvector",
                              k=root.k, multiplicity=root.multiplicity)
    return ProjectionKernel(root, graph)

import math
import warnings

import numpy as np
import pytest

from qgraph import (DegeneracyError, GraphSpecError, NearScarWarning, ScarPresentError,
                    VertexCondition, build_graph, detect_scar, evaluate_scattering,
                    internal_amplitudes, quantum_map, regularized_internal,
                    regularized_scattering, scattering_matrix, yq_inverse)
from qgraph.scattering import p_rho_limit, regularized_outgoing
from qgraph.spectrum import find_unit_eigen_roots
from conftest import DIR, NK, general_graph, interval, lasso, star3


def lasso_sigma(k, ell=1.0):
    z = np.exp(1j * k * ell)
    return (3 * z - 1) / (3 - z)


def lasso_rho(k, ell=1.0):
    z = np.exp(1j * k * ell)
    return 2 * z / (3 - z) * np.ones(2)


def star_closed_form(k, l2, l3):
    a, b = np.exp(2j * k * l2), np.exp(2j * k * l3)
    D = 3 - a - b - a * b
    sigma = np.conj(D) / D * a * b
    # components in the order (e2+, e2-, e3+, e3-)
    rho = 2 / D * np.array([np.exp(1j * k * l2) * (1 - b), -a * (1 - b),
                            np.exp(1j * k * l3) * (1 - a), -b * (1 - a)])
    return sigma, rho


def delta_lasso(alpha=1.5, ell=1.0):
    """Lasso with a delta coupling of strength alpha at the vertex (k-dependent)."""
    g = build_graph(["v1"], [("e1", ["v1"], "lead"), ("e2", ["v1", "v1"], ell)])
    A = [[1, -1, 0], [0, 1, -1], [-alpha, 0, 0]]
    B = [[0, 0, 0], [0, 0, 0], [1, 1, 1]]
    return g, {"v1": VertexCondition.general(A, B)}


def mixed_star(alpha=0.8):
    """Equilateral 3-star with a delta centre and prescribed constant end reflections."""
    g = build_graph(["v1", "v2", "v3"], [("e1", ["v1"], "lead"), ("e2", ["v1", "v2"], math.pi),
                                         ("e3", ["v1", "v3"], math.pi)])
    A = [[1, -1, 0], [0, 1, -1], [-alpha, 0, 0]]
    B = [[0, 0, 0], [0, 0, 0], [1, 1, 1]]
    end = VertexCondition.constant([[-1]])
    return g, {"v1": VertexCondition.general(A, B), "v2": end, "v3": end}


def two_loops(l2=1.0, l3=1.5):
    g = build_graph(["v1"], [("e1", ["v1"], "lead"), ("e2", ["v1", "v1"], l2),
                             ("e3", ["v1", "v1"], l3)])
    return g, {"v1": NK}


def extrapolate(f, k0, deltas=(1e-3, 1e-4)):
    """Richardson extrapolation of two-sided means, exact for f quadratic in k - k0."""
    d1, d2 = deltas
    m1 = (f(k0 + d1) + f(k0 - d1)) / 2
    m2 = (f(k0 + d2) + f(k0 - d2)) / 2
    return (m2 * d1 ** 2 - m1 * d2 ** 2) / (d1 ** 2 - d2 ** 2)


def test_lasso_closed_form():
    g, c = lasso()
    for k in (0.3, 1.0, 2.5, 4.0 + 0.2j, 9.9):
        res = scattering_matrix(g, c, k)
        assert abs(res.sigma[0, 0] - lasso_sigma(k)) < 1e-12
        np.testing.assert_allclose(res.rho[:, 0], lasso_rho(k), atol=1e-12)


def test_lasso_at_pi():
    g, c = lasso()
    res = internal_amplitudes(g, c, math.pi)
    assert abs(res.sigma[0, 0] + 1) < 1e-14
    np.testing.assert_allclose(res.rho[:, 0], [-0.5, -0.5], atol=1e-14)


def test_star_closed_form():
    l2, l3 = 1.0, math.sqrt(2)
    g, c = star3(l2, l3)
    for k in np.linspace(0.2, 11.0, 23):
        res = scattering_matrix(g, c, k)
        sigma, rho = star_closed_form(k, l2, l3)
        assert abs(res.sigma[0, 0] - sigma) < 1e-10
        np.testing.assert_allclose(res.rho[:, 0], rho, atol=1e-10)


def test_relation_and_unitarity(rng):
    g, c = general_graph(rng)
    for k in (0.5, 1.7, 3.3):
        res = scattering_matrix(g, c, k)
        snap = quantum_map(g, c, k)
        assert np.max(np.abs(res.sigma - (snap.ULL + snap.ULB @ res.rho))) <= 1e-12
        assert np.max(np.abs(res.sigma.conj().T @ res.sigma - np.eye(1))) <= 1e-10


def test_scattering_needs_leads():
    g, c = interval()
    with pytest.raises(GraphSpecError):
        scattering_matrix(g, c, 1.0)


def test_scar_raises_with_basis():
    g, c = lasso()
    with pytest.raises(ScarPresentError) as info:
        scattering_matrix(g, c, 2 * math.pi)
    scar = info.value.scar
    assert abs(abs(np.vdot(scar.b, [1 / math.sqrt(2), -1 / math.sqrt(2)])) - 1) < 1e-12
    assert info.value.details()["k0"] == pytest.approx(2 * math.pi)


def test_detect_scar_lasso():
    g, c = lasso()
    scar = detect_scar(g, c, 2 * math.pi)
    assert scar is not None
    assert all(v <= 1e-8 for v in scar.residuals.values())
    P, Q = scar.P, scar.Q
    np.testing.assert_allclose(P @ P, P, atol=1e-15)
    np.testing.assert_allclose(P, P.conj().T, atol=1e-15)
    np.testing.assert_allclose(P + Q, np.eye(2), atol=1e-15)
    assert detect_scar(g, c, math.pi) is None


def test_detect_scar_equilateral_star():
    g, c = star3(math.pi, math.pi)
    scar = detect_scar(g, c, 2.0)
    assert scar is not None
    assert scar.residuals["U_LB b"] <= 1e-8 and scar.residuals["b^dagger U_BL"] <= 1e-8


def test_detect_scar_needs_real_k():
    g, c = lasso()
    with pytest.raises(ValueError):
        detect_scar(g, c, 2 + 0.1j)


def test_degenerate_scar_detected():
    g, c = two_loops(1.0, 1.0)
    with pytest.raises(DegeneracyError):
        detect_scar(g, c, 2 * math.pi)


def test_yq_identities(rng):
    g, c = lasso()
    scar = detect_scar(g, c, 2 * math.pi)
    UBB = quantum_map(g, c, scar.k0).UBB
    Yinv = yq_inverse(UBB, scar.b)
    Y = scar.Q @ (np.eye(2) - UBB) @ scar.Q
    np.testing.assert_allclose(Yinv @ Y, scar.Q, atol=1e-10)
    np.testing.assert_allclose(Y @ Yinv, scar.Q, atol=1e-10)
    np.testing.assert_allclose(scar.P @ Yinv, 0, atol=1e-10)
    np.testing.assert_allclose(Yinv @ scar.P, 0, atol=1e-10)


def test_regularized_lasso():
    g, c = lasso()
    res = regularized_scattering(g, c, detect_scar(g, c, 2 * math.pi))
    assert res.regularized
    assert abs(res.sigma[0, 0] - 1) < 1e-10
    np.testing.assert_allclose(res.p_rho[:, 0], 0, atol=1e-10)
    np.testing.assert_allclose(res.q_rho[:, 0], [1, 1], atol=1e-10)
    snap = quantum_map(g, c, 2 * math.pi)
    assert np.max(np.abs(res.sigma - (snap.ULL + snap.ULB @ res.rho))) <= 1e-12


def test_regularized_equilateral_star():
    g, c = star3(math.pi, math.pi)
    res = regularized_scattering(g, c, detect_scar(g, c, 2.0))
    assert abs(res.sigma[0, 0] + 1) < 1e-8
    assert abs(abs(res.sigma[0, 0]) - 1) < 1e-12


@pytest.mark.parametrize("build, k0", [
    (lasso, 2 * math.pi),
    (lambda: star3(math.pi, math.pi), 2.0),
    (delta_lasso, 2 * math.pi),
    (mixed_star, 3.0),
])
def test_regularized_matches_extrapolation(build, k0):
    g, c = build()
    scar = detect_scar(g, c, k0)
    res = regularized_scattering(g, c, scar)
    sig = extrapolate(lambda k: scattering_matrix(g, c, k).sigma, k0)
    rho = extrapolate(lambda k: scattering_matrix(g, c, k).rho, k0)
    assert np.max(np.abs(res.sigma - sig)) <= 1e-6
    assert np.max(np.abs(res.rho - rho)) <= 1e-6
    # the three-point Richardson sequence agrees as well
    seq = [extrapolate(lambda k: scattering_matrix(g, c, k).sigma, k0, (d, d / 10))
           for d in (1e-3, 1e-4)]
    assert all(np.max(np.abs(res.sigma - s)) <= 1e-5 for s in seq)


@pytest.mark.parametrize("build, k0", [(delta_lasso, 2 * math.pi), (mixed_star, 3.0),
                                       (lasso, 2 * math.pi)])
def test_closed_and_derivative_limits_agree(build, k0):
    g, c = build()
    scar = detect_scar(g, c, k0)
    snap = quantum_map(g, c, k0)
    nb = 2 * g.n_bonds
    Y = yq_inverse(snap.UBB, scar.b)
    generic = p_rho_limit(snap.UBB, snap.UBL, snap.dU[:nb, :nb], snap.dU[:nb, nb:], scar.b, Y)
    p_rho, _ = regularized_internal(g, c, scar)
    np.testing.assert_allclose(p_rho, generic, atol=1e-12)


def test_regularized_outgoing_matches_extrapolation():
    g, c = delta_lasso()
    scar = detect_scar(g, c, 2 * math.pi)

    def rho_out(k):
        snap = quantum_map(g, c, k)
        return np.linalg.solve((np.eye(2) - snap.UBB).T, snap.ULB.T).T

    np.testing.assert_allclose(regularized_outgoing(g, c, scar), extrapolate(rho_out, scar.k0),
                               atol=1e-6)


def test_scar_denominator_positive_on_rational_graph():
    g, c = two_loops(1.0, 1.5)
    nb = 2 * g.n_bonds

    def md(k):
        s = quantum_map(g, c, k)
        return s.UBB, s.dU[:nb, :nb]

    roots = find_unit_eigen_roots(md, 0.5, 10.0, step=0.05)
    expected = sorted([2 * math.pi, 4 * math.pi / 3, 8 * math.pi / 3])
    np.testing.assert_allclose([k for k, _ in roots], expected, atol=1e-9)
    for k0, _ in roots:
        scar = detect_scar(g, c, k0)
        L = np.diag(g.bond_lengths)
        Pi = np.kron(np.eye(2), [[0, 1], [1, 0]])
        den = np.real(scar.b.conj() @ (k0 * L + np.diag(np.sin(k0 * g.bond_lengths)) @ Pi) @ scar.b)
        assert den > 0
        res = regularized_scattering(g, c, scar)
        sig = extrapolate(lambda k: scattering_matrix(g, c, k).sigma, k0)
        assert np.max(np.abs(res.sigma - sig)) <= 1e-6


def test_lasso_scar_denominator():
    g, c = lasso()
    k0 = 2 * math.pi
    b = detect_scar(g, c, k0).b
    L = np.diag(g.bond_lengths)
    den = np.real(b.conj() @ (k0 * L + np.diag(np.sin(k0 * g.bond_lengths)) @ [[0, 1], [1, 0]]) @ b)
    assert den == pytest.approx(k0, abs=1e-12)


def test_evaluate_dispatch():
    g, c = lasso()
    assert not evaluate_scattering(g, c, 1.0).regularized
    res = evaluate_scattering(g, c, 6.2831853)
    assert res.regularized and abs(res.sigma[0, 0] - 1) < 1e-7
    assert not evaluate_scattering(g, c, 2 * math.pi + 0.1j).regularized


def test_near_scar_warns_and_stays_accurate():
    g, c = lasso()
    k = 2 * math.pi + 1e-6
    with pytest.warns(NearScarWarning):
        res = evaluate_scattering(g, c, k)
    assert abs(res.sigma[0, 0] - lasso_sigma(k)) < 1e-10
    np.testing.assert_allclose(res.rho[:, 0], lasso_rho(k), atol=1e-9)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        evaluate_scattering(g, c, 2 * math.pi + 0.01)

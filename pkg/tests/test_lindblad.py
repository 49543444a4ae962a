import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from conftest import DISPERSIVE, GATE_SET
from coupler_lab import lindblad as lb
from coupler_lab.errors import ContractError, InvariantError
from coupler_lab.hamiltonian import build_lab, gamma_from_t1, to_angular
from coupler_lab.hilbert import FockSpace

rng = np.random.default_rng(17)


def rand_density(d, rank=None):
    rank = rank or d
    A = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    r = A @ A.conj().T
    return r / np.trace(r)


def test_vectorization_identity():
    A, X, B = (rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)) for _ in range(3))
    lhs = lb.vec(A @ X @ B)
    rhs = np.kron(B.T, A) @ lb.vec(X)
    assert np.abs(lhs - rhs).max() < 1e-12
    np.testing.assert_array_equal(lb.unvec(lb.vec(X)), X)


def test_dissipator_matches_direct_action():
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rho = rand_density(4)
    Bd = B.conj().T
    direct = A @ rho @ Bd - 0.5 * (Bd @ A @ rho + rho @ Bd @ A)
    np.testing.assert_allclose(lb.unvec(lb.dissipator(A, B) @ lb.vec(rho)), direct, atol=1e-13)
    sp = lb.dissipator(A, B, sparse=True).toarray()
    np.testing.assert_allclose(sp, lb.dissipator(A, B), atol=1e-15)


def test_decay_rates_plug_in():
    p = DISPERSIVE.with_(T1_q1=100.0, T1_q2=100.0, T1_c=100.0)
    r = lb.effective_decay_rates(p)
    g = gamma_from_t1(100.0)
    assert r.gamma_q1q2 == pytest.approx(0.0025 * g, rel=1e-12)
    assert r.gamma_q1q1 == pytest.approx(g * (1 + 0.0025), rel=1e-12)
    ev = np.linalg.eigvalsh(r.matrix)
    np.testing.assert_allclose(ev, g + 0.0025 * g * np.array([0.0, 2.0]), rtol=1e-12)
    r0 = lb.effective_decay_rates(p.with_(T1_c=math.inf))
    assert (r0.gamma_q1q1, r0.gamma_q2q2, r0.gamma_q1q2) == (g, g, 0.0)


def test_decay_rates_validation():
    with pytest.raises(ContractError):
        lb.DecayRates(-1e-5, 1e-5, 0.0)
    with pytest.raises(ContractError):
        lb.DecayRates(1e-6, 1e-6, 1e-3)


def test_unitary_generator_spectrum_imaginary():
    H = np.diag([0.0, 1.3, 2.9])
    ev = np.linalg.eigvals(lb.liouvillian(H))
    assert np.abs(ev.real).max() < 1e-14


def test_negative_rate_rejected():
    with pytest.raises(ContractError):
        lb.liouvillian(np.eye(2), [(lb.SM, -1.0)])


def test_amplitude_damping():
    gamma = 0.37
    L = lb.liouvillian(np.diag([0.0, 1.0]), [(lb.SM, gamma)])
    rho0 = np.diag([0.0, 1.0]).astype(complex)
    for t in (0.0, 0.5, 2.0, 7.0):
        rho = lb.propagate(L, rho0, t)
        assert rho[1, 1].real == pytest.approx(math.exp(-gamma * t), abs=1e-12)
    np.testing.assert_array_equal(lb.propagate(L, rho0, 0.0), rho0)


def test_trace_row_and_drift_gate_set():
    p = GATE_SET.with_t1(20.0)
    L = lb.reduced_generator(p, g_eff=to_angular(0.004), zeta=to_angular(1e-4))
    assert lb.trace_row_residual(L) < 1e-12
    rho = rand_density(4)
    for t in np.linspace(0, 200, 9):
        out = lb.propagate(L, rho, t)
        assert abs(np.trace(out) - 1) < 1e-9


def test_unitary_purity():
    L = lb.reduced_liouvillian(0.02, 0.003)
    v = np.ones(4) / 2
    rho = np.outer(v, v.conj())
    for t in (0.0, 10.0, 100.0):
        out = lb.propagate(L, rho, t)
        assert np.trace(out @ out).real == pytest.approx(1.0, abs=1e-9)


def test_iswap_action():
    g = 2 * math.pi * 0.005
    L = lb.reduced_liouvillian(g, 0.0)
    ket10 = np.zeros(4)
    ket10[2] = 1.0  # q1 excited
    out = lb.propagate(L, np.outer(ket10, ket10), math.pi / (2 * g))
    assert out[1, 1].real == pytest.approx(1.0, abs=1e-12)


def test_factorized_damping_channels():
    g1, g2 = 1e-2, 3e-2
    L = lb.reduced_liouvillian(0.0, 0.0, lb.DecayRates(g1, g2, 0.0))
    a = rand_density(2)
    b = rand_density(2)
    t = 13.0
    L1 = lb.liouvillian(np.zeros((2, 2)), [(lb.SM, g1)])
    L2 = lb.liouvillian(np.zeros((2, 2)), [(lb.SM, g2)])
    ea = lb.propagate(L1, a, t)
    eb = lb.propagate(L2, b, t)
    out = lb.propagate(L, np.kron(a, b), t)
    np.testing.assert_allclose(out, np.kron(ea, eb), atol=1e-13)


def test_check_density_failures():
    with pytest.raises(InvariantError):
        lb.check_density(np.diag([0.5, 0.6]))
    with pytest.raises(InvariantError):
        lb.check_density(np.diag([1.5, -0.5]))
    with pytest.raises(InvariantError):
        lb.check_density(np.array([[0.5, 0.1], [0.0, 0.5]]))
    with pytest.raises(ContractError):
        lb.propagator(np.eye(4), -1.0)


def test_blocked_exponential_equals_dense():
    s = FockSpace.uniform(3)
    p = DISPERSIVE.with_t1(5.0)
    L = lb.lab_generator(p, s)
    comps = lb.block_components(L)
    assert len(comps) >= 2
    V = rng.standard_normal((L.shape[0], 3)) + 0j
    t = 3.0
    ref = sla.expm(L.toarray() * t) @ V
    np.testing.assert_allclose(lb.expm_action_blocked(L, V, t), ref, atol=1e-10)


def test_dressed_basis():
    s = FockSpace.uniform(4)
    H = build_lab(DISPERSIVE, s)
    basis, frame, h_pair = lb.dressed_computational_basis(H, s)
    np.testing.assert_allclose(basis.conj().T @ basis, np.eye(4), atol=1e-12)
    for k, occ in enumerate([(0, 0, 0), (0, 0, 1), (1, 0, 0), (1, 0, 1)]):
        c = basis[s.index(occ), k]
        assert abs(c.imag) < 1e-14 and c.real > 0.9
    assert frame[0] == 0 and frame[3] == 2 * frame[1]
    np.testing.assert_allclose(h_pair, h_pair.conj().T, atol=1e-14)
    # the off-diagonal element is the exchange coupling
    from coupler_lab.spectral import geff_numeric
    assert h_pair[0, 1].real == pytest.approx(geff_numeric(H, s, DISPERSIVE), rel=1e-6)


def test_embed_project_roundtrip():
    s = FockSpace.uniform(3)
    basis, frame, _ = lb.dressed_computational_basis(build_lab(DISPERSIVE, s), s)
    rhos = np.stack([rand_density(4) for _ in range(3)])
    back = lb.project_states(basis, lb.embed_states(basis, rhos), frame, 0.0)
    np.testing.assert_allclose(back, rhos, atol=1e-13)


def test_reduced_couplings_sources():
    g, z = lb.reduced_couplings(DISPERSIVE, "numeric", FockSpace.uniform(5))
    ga, za = lb.reduced_couplings(DISPERSIVE, "analytic")
    assert g == pytest.approx(ga, rel=0.05)
    with pytest.raises(ContractError):
        lb.reduced_couplings(DISPERSIVE, "magic")


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 0.05), st.floats(-0.01, 0.01), st.floats(0.0, 1e-3), st.floats(0.0, 1e-3),
       st.floats(0.0, 1.0), st.floats(0.0, 300.0))
def test_reduced_propagation_keeps_density_invariants(g, z, ga, gb, c, t):
    cross = c * math.sqrt(ga * gb)
    L = lb.reduced_liouvillian(g, z, lb.DecayRates(ga, gb, cross))
    assert lb.trace_row_residual(L) < 1e-12
    out = lb.propagate(L, rand_density(4, rank=1), t)
    info = lb.check_density(out)
    assert info["trace_error"] < 1e-9 and info["min_eig"] >= -1e-8

"""Lindblad generators, column-major vectorization and exact propagation.

vec stacks columns, so vec(A rho B) = (B^T kron A) vec(rho). All generators
are time independent and are propagated with a matrix exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import expm_multiply

from .errors import ContractError, InvariantError
from .hamiltonian import CircuitParams, gamma_from_t1, to_angular
from .hilbert import FockSpace, HermitianOperator

HERM_TOL = 1e-10
TRACE_TOL = 1e-9
POS_TOL = -1e-8

# two-qubit computational basis, index = q1 * 2 + q2, with |0> the ground state
SM = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1j], [1j, 0.0]])
SZ = np.diag([1.0, -1.0])
I2 = np.eye(2)
I4 = np.eye(4)

SIGMA_MINUS = (np.kron(SM, I2), np.kron(I2, SM))
XX_YY = np.kron(SX, SX) + np.kron(SY, SY)
ZZ = np.kron(SZ, SZ)


def vec(rho) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    dim = dim or math.isqrt(v.size)
    return v.reshape(dim, dim, order="F")


def check_density(rho, herm_tol=HERM_TOL, trace_tol=TRACE_TOL, pos_tol=POS_TOL) -> dict:
    """Raise InvariantError unless rho is a valid density matrix; return the measured deviations."""
    rho = np.asarray(rho)
    herm = float(np.abs(rho - rho.conj().T).max())
    tr = complex(np.trace(rho))
    lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
    if herm >= herm_tol:
        raise InvariantError(f"density matrix not Hermitian ({herm:.3e})")
    if abs(tr - 1) >= trace_tol:
        raise InvariantError(f"density matrix trace {tr} deviates from 1")
    if lam < pos_tol:
        raise InvariantError(f"density matrix has negative eigenvalue {lam:.3e}")
    return {"hermiticity": herm, "trace_error": abs(tr - 1), "min_eig": lam}


@dataclass(frozen=True)
class DecayRates:
    """Dressed relaxation rates of the computational qubits, 1/ns."""

    gamma_q1q1: float
    gamma_q2q2: float
    gamma_q1q2: float

    def __post_init__(self):
        if self.gamma_q1q1 < 0 or self.gamma_q2q2 < 0:
            raise ContractError("diagonal decay rates must be >= 0")
        if self.gamma_q1q2**2 > self.gamma_q1q1 * self.gamma_q2q2 + 1e-12:
            raise ContractError("cross rate exceeds the geometric mean of the diagonal rates")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.gamma_q1q1, self.gamma_q1q2], [self.gamma_q1q2, self.gamma_q2q2]])

    def scaled(self, c: float) -> "DecayRates":
        return DecayRates(c * self.gamma_q1q1, c * self.gamma_q2q2, c * self.gamma_q1q2)


def effective_decay_rates(p: CircuitParams) -> DecayRates:
    """Qubit rates dressed by coupler decay through the dispersive admixture g_k/Delta_k."""
    d1, d2 = p.delta1, p.delta2
    if d1 == 0 or d2 == 0:
        from .errors import SingularParameterError
        raise SingularParameterError("zero qubit-coupler detuning")
    gc = gamma_from_t1(p.T1_c)
    return DecayRates(
        gamma_from_t1(p.T1_q1) + (p.g1 / d1) ** 2 * gc,
        gamma_from_t1(p.T1_q2) + (p.g2 / d2) ** 2 * gc,
        p.g1 * p.g2 / (d1 * d2) * gc,
    )


def _mat(H):
    return H.matrix if isinstance(H, HermitianOperator) else np.asarray(H)


def hamiltonian_part(H, sparse: bool = False):
    """-i (I kron H - H^T kron I)."""
    h = _mat(H)
    n = h.shape[0]
    if sparse:
        h = sps.csr_matrix(h)
        eye = sps.identity(n, format="csr")
        return (-1j * (sps.kron(eye, h) - sps.kron(h.T, eye))).tocsr()
    eye = np.eye(n)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator(A, B=None, sparse: bool = False):
    """D[A, B] rho = A rho B^+ - 1/2 {B^+ A, rho}; D[A, A] is the usual GKSL term."""
    A = np.asarray(A)
    B = A if B is None else np.asarray(B)
    n = A.shape[0]
    BdA = B.conj().T @ A
    kron = sps.kron if sparse else np.kron
    eye = sps.identity(n, format="csr") if sparse else np.eye(n)
    if sparse:
        A, B, BdA = sps.csr_matrix(A), sps.csr_matrix(B), sps.csr_matrix(BdA)
    out = kron(B.conj(), A) - 0.5 * kron(eye, BdA) - 0.5 * kron(BdA.T, eye)
    return out.tocsr() if sparse else out


def liouvillian(H, collapse_ops=(), sparse: bool = False):
    """GKSL generator for column-major vec. collapse_ops: iterable of (A, rate)."""
    h = _mat(H)
    L = hamiltonian_part(h, sparse)
    for A, rate in collapse_ops:
        if rate < 0:
            raise ContractError(f"negative collapse rate {rate}")
        A = np.asarray(A)
        if A.shape != h.shape:
            raise ContractError(f"collapse operator shape {A.shape} != Hamiltonian shape {h.shape}")
        if rate:
            L = L + rate * dissipator(A, sparse=sparse)
    return L


def correlated_dissipator(ops, rates: np.ndarray) -> np.ndarray:
    """sum_ij rates[i, j] D[ops[j], ops[i]] (global-bath cross terms included)."""
    n = ops[0].shape[0]
    L = np.zeros((n * n, n * n), dtype=complex)
    for i, Ai in enumerate(ops):
        for j, Aj in enumerate(ops):
            if rates[i, j]:
                L = L + rates[i, j] * dissipator(Aj, Ai)
    return L


def trace_row_residual(L) -> float:
    """max |vec(I)^+ L|, zero for a trace-preserving generator."""
    n = math.isqrt(L.shape[0])
    row = vec(np.eye(n)).conj() @ L
    return float(np.abs(row).max())


def propagator(L, t: float) -> np.ndarray:
    if t < 0:
        raise ContractError("propagation time must be >= 0")
    return sla.expm(np.asarray(L) * t)


def _finish(rho, check: bool):
    rho = 0.5 * (rho + rho.conj().T)
    if check:
        check_density(rho)
    return rho


def propagate(L, rho0, t: float, check: bool = True) -> np.ndarray:
    """unvec(expm(L t) vec(rho0)), re-Hermitized and checked."""
    rho0 = np.asarray(rho0, dtype=complex)
    if check:
        check_density(rho0)
    if sps.issparse(L):
        v = expm_multiply(L * t, vec(rho0)) if t > 0 else vec(rho0)
    else:
        v = propagator(L, t) @ vec(rho0)
    return _finish(unvec(v, rho0.shape[0]), check)


def block_components(L) -> list[np.ndarray]:
    """Index sets of the decoupled blocks of a generator (connected components of its sparsity graph)."""
    L = sps.csr_matrix(L)
    pattern = (abs(L) + abs(L).T).astype(bool)
    n, lab = connected_components(pattern, directed=False)
    return [np.flatnonzero(lab == k) for k in range(n)]


def expm_action_blocked(L, V: np.ndarray, t: float) -> np.ndarray:
    """expm(L t) @ V, exponentiating each decoupled block densely.

    For lab-frame generators the blocks are the excitation-parity sectors, so
    this stays an exact scaling-and-squaring exponential at a fraction of the
    full-size cost.
    """
    if t < 0:
        raise ContractError("propagation time must be >= 0")
    L = sps.csr_matrix(L)
    V = np.asarray(V, dtype=complex)
    out = np.zeros_like(V)
    for idx in block_components(L):
        sub = L[idx][:, idx].toarray()
        out[idx] = sla.expm(sub * t) @ V[idx]
    return out


def propagate_many(P: np.ndarray, rhos: np.ndarray, check: bool = True) -> np.ndarray:
    """Apply a precomputed propagator to a stack of density matrices (N, d, d)."""
    n, d, _ = rhos.shape
    vecs = rhos.transpose(0, 2, 1).reshape(n, d * d)
    out = (vecs @ P.T).reshape(n, d, d).transpose(0, 2, 1)
    out = 0.5 * (out + out.conj().transpose(0, 2, 1))
    if check:
        check_stack(out)
    return out


def check_stack(rhos: np.ndarray) -> dict:
    herm = float(np.abs(rhos - rhos.conj().transpose(0, 2, 1)).max())
    tr = np.abs(np.trace(rhos, axis1=1, axis2=2) - 1).max()
    lam = float(np.linalg.eigvalsh(rhos).min())
    if herm >= HERM_TOL or tr >= TRACE_TOL or lam < POS_TOL:
        raise InvariantError(f"propagated states broke invariants: herm={herm:.2e} trace={tr:.2e} min_eig={lam:.2e}")
    return {"hermiticity": herm, "trace_error": float(tr), "min_eig": lam}


# reduced two-qubit model

def xy_hamiltonian(g_eff: float) -> np.ndarray:
    """(g_eff/2)(XX + YY) with g_eff in rad/ns."""
    return 0.5 * g_eff * XX_YY


def zz_hamiltonian(zeta: float) -> np.ndarray:
    """zeta * ZZ with zeta in rad/ns."""
    return zeta * ZZ


def reduced_liouvillian(g_eff: float, zeta: float, rates: DecayRates | None = None) -> np.ndarray:
    """16x16 generator with XY exchange, ZZ shift and correlated decay (angular units)."""
    L = hamiltonian_part(xy_hamiltonian(g_eff) + zz_hamiltonian(zeta))
    if rates is not None:
        L = L + correlated_dissipator(SIGMA_MINUS, rates.matrix)
    return L


def reduced_couplings(p: CircuitParams, source: str = "numeric", space: FockSpace | None = None):
    """(g_eff, zeta) in rad/ns from the lab spectrum or the closed forms."""
    if source == "numeric":
        from .hamiltonian import build_lab
        from .spectral import geff_numeric, zz_numeric

        space = space or FockSpace()
        H = build_lab(p, space)
        return geff_numeric(H, space, p), zz_numeric(H, space)
    if source == "analytic":
        from .analytics import effective_params, zz_general

        return to_angular(effective_params(p).g_eff), to_angular(zz_general(p))
    raise ContractError(f"unknown coupling source {source!r}; expected 'numeric' or 'analytic'")


def reduced_generator(p: CircuitParams, source: str = "numeric", space: FockSpace | None = None,
                      g_eff: float | None = None, zeta: float | None = None) -> np.ndarray:
    """Reduced computational-space generator; explicit g_eff / zeta (rad/ns) override the source."""
    if g_eff is None or zeta is None:
        ge, z = reduced_couplings(p, source, space)
        g_eff = ge if g_eff is None else g_eff
        zeta = z if zeta is None else zeta
    return reduced_liouvillian(g_eff, zeta, effective_decay_rates(p))


# lab-frame model

def lab_collapse_ops(p: CircuitParams, space: FockSpace):
    from .hilbert import annihilation

    return [(annihilation(space, m), gamma_from_t1(t1))
            for m, t1 in (("q1", p.T1_q1), ("c", p.T1_c), ("q2", p.T1_q2))]


def lab_generator(p: CircuitParams, space: FockSpace, H: HermitianOperator | None = None):
    """Sparse lab-frame generator with bare-mode relaxation a_lambda at 1/T1_lambda."""
    from .hamiltonian import build_lab

    H = H or build_lab(p, space)
    return liouvillian(H, lab_collapse_ops(p, space), sparse=True)


def dressed_computational_basis(H: HermitianOperator, space: FockSpace):
    """Columns |000>, |001>, |100>, |101> of the dressed computational space, plus their energies.

    The qubit pair is spanned by the two eigenvectors carrying most |100>/|001>
    weight; within it the Loewdin-orthonormalized projections of the bare
    states are used, which keeps each column as close as possible to its bare
    counterpart. Returns (basis (dim, 4), frame energies (4,), pair Hamiltonian (2, 2)).
    """
    from .spectral import Q1, Q1Q2, Q2, G, label_spectrum, single_excitation_pair

    spec = label_spectrum(H, space)
    w, v = spec.eigenvalues, spec.eigenvectors
    i, j = single_excitation_pair(spec)
    pair = v[:, [i, j]]
    bare = np.zeros((space.dim, 2))
    bare[space.index(Q2), 0] = 1.0
    bare[space.index(Q1), 1] = 1.0
    S = pair.conj().T @ bare  # coefficients of projected bare states in the pair
    # Loewdin: C = S (S^+ S)^{-1/2}
    s_vals, s_vecs = np.linalg.eigh(S.conj().T @ S)
    C = S @ (s_vecs @ np.diag(s_vals ** -0.5) @ s_vecs.conj().T)
    q = pair @ C
    h_pair = C.conj().T @ np.diag(w[[i, j]]) @ C

    def fix_phase(col, occ):
        c = col[space.index(occ)]
        return col * (abs(c) / c) if abs(c) > 0 else col

    e0 = spec.assignment[G]
    e3 = spec.assignment[Q1Q2]
    cols = [fix_phase(v[:, e0], G), fix_phase(q[:, 0], Q2), fix_phase(q[:, 1], Q1), fix_phase(v[:, e3], Q1Q2)]
    ground = w[e0]
    wbar = 0.5 * (w[i] + w[j]) - ground
    frame = np.array([0.0, wbar, wbar, 2 * wbar])
    return np.stack(cols, axis=1), frame, h_pair - ground * np.eye(2)


def embed_states(basis: np.ndarray, rhos: np.ndarray) -> np.ndarray:
    """Map (N, 4, 4) computational states into the lab space via the dressed basis."""
    return np.einsum("ai,nij,bj->nab", basis, rhos, basis.conj())


def project_states(basis: np.ndarray, rhos: np.ndarray, frame: np.ndarray, t: float) -> np.ndarray:
    """Dressed-basis block of lab states, moved into the frame rotating at `frame` (rad/ns)."""
    block = np.einsum("ai,nab,bj->nij", basis.conj(), rhos, basis)
    ph = np.exp(1j * frame * t)
    return ph[None, :, None] * block * ph.conj()[None, None, :]

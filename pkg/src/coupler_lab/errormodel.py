"""Superoperator split L = L0 + Lzz + Ldecay, lambda calibration and the closed-form error law.

Unit convention: inside the error law every frequency is rad/ns, times are ns
and T1 is converted from microseconds to ns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from .errors import ContractError, SingularParameterError
from .fidelity import StateEnsemble
from .hamiltonian import CircuitParams, to_angular
from . import lindblad as lb

REFERENCE_LAMBDA_DECAY = 0.81
REFERENCE_LAMBDA_ZZ = 18.55
PI4_8 = math.pi**4 / 8


@dataclass(frozen=True)
class ErrorLawParams:
    lambda_decay: float
    lambda_zz: float
    ensemble: str = "unspecified"
    stderr_decay: float = 0.0
    stderr_zz: float = 0.0

    def __post_init__(self):
        if self.lambda_decay < 0 or self.lambda_zz < 0:
            raise ContractError("error-law constants must be >= 0")


def zz_generator_unit() -> np.ndarray:
    """Lzz / zeta: the parameter-free ZZ commutator superoperator."""
    return lb.hamiltonian_part(lb.ZZ)


def decay_generator(rates: lb.DecayRates) -> np.ndarray:
    """sum_ij g_ij [(s+_i)^T kron s-_j - 1/2 I kron s+_i s-_j - 1/2 (s+_i s-_j)^T kron I]."""
    sm = lb.SIGMA_MINUS
    g = rates.matrix
    L = np.zeros((16, 16), dtype=complex)
    for i in range(2):
        sp_i = sm[i].conj().T
        for j in range(2):
            if g[i, j]:
                x = sp_i @ sm[j]
                L += g[i, j] * (np.kron(sp_i.T, sm[j]) - 0.5 * np.kron(lb.I4, x) - 0.5 * np.kron(x.T, lb.I4))
    return L


def noise_superoperators_from(g_eff: float, zeta: float, rates: lb.DecayRates):
    """(L0, Lzz, Ldecay) for g_eff, zeta in rad/ns and rates in 1/ns."""
    L0 = lb.hamiltonian_part(lb.xy_hamiltonian(g_eff))
    return L0, zeta * zz_generator_unit(), decay_generator(rates)


def noise_superoperators(p: CircuitParams, source: str = "numeric", space=None):
    g, z = lb.reduced_couplings(p, source, space)
    return noise_superoperators_from(g, z, lb.effective_decay_rates(p))


def _bra_ket(vecs: np.ndarray, M: np.ndarray, kets: np.ndarray | None = None) -> np.ndarray:
    """<<rho_k| M |rho_k>> for each row of vecs."""
    kets = vecs if kets is None else kets
    return np.einsum("ni,ij,nj->n", vecs.conj(), M, kets)


def calibrate_lambdas(t_g: float, T1: float, ens: StateEnsemble, p: CircuitParams | None = None) -> ErrorLawParams:
    """Ensemble averages defining lambda_decay and lambda_zz.

    L0 realizes an iSWAP in t_g (g_eff = pi / (2 t_g)). With `p`, the decay
    structure includes the coupler-dressed rates at equal T1 on all three
    elements; without it, two bare qubits decay at 1/T1.
    """
    if t_g <= 0 or T1 <= 0:
        raise ContractError("t_g and T1 must be positive")
    T1_ns = 1000.0 * T1
    g = math.pi / (2 * t_g)
    if p is None:
        rates = lb.DecayRates(1 / T1_ns, 1 / T1_ns, 0.0)
    else:
        rates = lb.effective_decay_rates(p.with_t1(T1))
    L0 = lb.hamiltonian_part(lb.xy_hamiltonian(g))
    Ud = sla.expm(L0 * t_g / 2)
    Ub = sla.expm(-L0 * t_g / 2)
    M = Ub @ (decay_generator(rates) * T1_ns) @ Ud
    x = ens.vecs
    dec = -_bra_ket(x, M).real
    K = zz_generator_unit()
    zz = -PI4_8 * _bra_ket(x, K @ K).real
    n = x.shape[0]
    se = lambda s: float(s.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ErrorLawParams(float(dec.mean()), float(zz.mean()), ens.tag, se(dec), se(zz))


def lambda_zz_direct(ens: StateEnsemble) -> float:
    """Operator-algebra route: -(pi^4/8) <-2 (tr rho^2 - tr(Z rho Z rho))>, Z = ZZ."""
    r = ens.states
    Z = lb.ZZ
    pur = np.einsum("nij,nji->n", r, r).real
    zrz = np.einsum("ij,njk,kl,nli->n", Z, r, Z, r).real
    return float(np.mean(-PI4_8 * (-2.0) * (pur - zrz)))


def _sign_delta(p: CircuitParams) -> float:
    d = p.delta1
    if d == 0:
        raise SingularParameterError("Delta = 0: coupler on resonance with the qubits")
    return 1.0 if d > 0 else -1.0


def zz_bracket(p: CircuitParams, t_g: float, include_coupler: bool = True) -> float:
    """1/a_q1 + 1/a_q2 + 1/(a_c/4 - sgn(Delta) g1 g2 t_g / pi), rad/ns inverse."""
    a1, a2, ac = to_angular(p.a_q1), to_angular(p.a_q2), to_angular(p.a_c)
    if a1 == 0 or a2 == 0:
        raise SingularParameterError("zero qubit anharmonicity")
    b = 1 / a1 + 1 / a2
    if include_coupler:
        gg = to_angular(p.g1) * to_angular(p.g2)
        den = ac / 4 - _sign_delta(p) * gg * t_g / math.pi
        if abs(den) < 1e-15:
            raise SingularParameterError("coupler bracket denominator a_c/4 - sgn(Delta) g1 g2 t_g/pi = 0")
        b += 1 / den
    return b


def analytic_error(p: CircuitParams, t_g: float, T1: float, law: ErrorLawParams,
                   include_coupler: bool = True) -> float:
    """Closed-form gate error lambda_decay t_g/T1 + lambda_zz B^2 / t_g^2."""
    if t_g <= 0:
        raise ContractError("t_g must be positive")
    decay = 0.0 if math.isinf(T1) else law.lambda_decay * t_g / (1000.0 * T1)
    return decay + law.lambda_zz * zz_bracket(p, t_g, include_coupler) ** 2 / t_g**2


def optimal_gate_time(p: CircuitParams, T1: float, law: ErrorLawParams) -> tuple[float, float]:
    """(t_g*, eps(t_g*)) of the coupler-free law; t_g* in ns."""
    b = zz_bracket(p, 1.0, include_coupler=False)
    if abs(b) < 1e-300:
        raise ContractError("1/a_q1 + 1/a_q2 = 0: minimize analytic_error numerically instead")
    if law.lambda_decay == 0 or math.isinf(T1):
        raise ContractError("decay-free law has no finite optimum")
    t = (2 * law.lambda_zz * 1000.0 * T1 * b * b / law.lambda_decay) ** (1 / 3)
    return t, analytic_error(p, t, T1, law, include_coupler=False)


def minimize_analytic_error(p: CircuitParams, T1: float, law: ErrorLawParams, bounds: tuple[float, float],
                            include_coupler: bool = True) -> tuple[float, float]:
    """Numeric argmin of analytic_error over a t_g interval (ns)."""
    res = minimize_scalar(lambda t: analytic_error(p, t, T1, law, include_coupler),
                          bounds=bounds, method="bounded", options={"xatol": 1e-6})
    return float(res.x), float(res.fun)

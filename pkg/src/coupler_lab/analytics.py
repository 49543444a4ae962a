"""Closed-form effective-Hamiltonian results.

Everything here takes and returns GHz (cycles/ns). Resonant-regime ZZ
formulas return magnitudes; the general dispersive expression is signed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ContractError, NoBracketError, RegimeWarning, SingularParameterError
from .hamiltonian import SINGULAR_TOL, CircuitParams

RESONANT_QUBIT_TOL = 1e-3  # GHz, "f_q1 = f_q2" within 1 MHz
REGIME_RATIO = 0.1


def _nz(name, value):
    if abs(value) < SINGULAR_TOL:
        raise SingularParameterError(f"singular parameters: {name} = {value!r}")
    return value


@dataclass(frozen=True)
class EffectiveParams:
    tilde_f_q1: float
    tilde_f_q2: float
    tilde_f_c: float
    tilde_a_q1: float
    tilde_a_q2: float
    tilde_a_c: float
    g_eff: float
    g12_tilde: float
    g200: float
    g002: float
    g020: float
    cross_kerr: float

    @property
    def tilde_delta12(self) -> float:
        return self.tilde_f_q1 - self.tilde_f_q2

    @property
    def tilde_f_c_star(self) -> float:
        """Coupler frequency where |101> meets |020>."""
        return 0.5 * (self.tilde_f_q1 + self.tilde_f_q2 - self.tilde_a_c)


def g12_tilde(p: CircuitParams) -> float:
    d1, d2 = _nz("Delta1", p.delta1), _nz("Delta2", p.delta2)
    return 0.5 * p.g1 * p.g2 * (1 / d1 + 1 / d2 - 1 / p.sigma1 - 1 / p.sigma2)


def g_eff(p: CircuitParams) -> float:
    return p.g12 + g12_tilde(p)


def effective_params(p: CircuitParams, check_second: bool = True) -> EffectiveParams:
    """Shifted frequencies, anharmonicities and effective couplings.

    With check_second=False the tilde anharmonicities may be inf/nan when
    Delta_k + a_qk or Delta_k - a_c vanish (the first-SWT builder never reads them).
    """
    d1, d2 = _nz("Delta1", p.delta1), _nz("Delta2", p.delta2)
    s1, s2 = p.sigma1, p.sigma2
    g1s, g2s = p.g1**2, p.g2**2
    dens = {"Delta1+a_q1": d1 + p.a_q1, "Delta2+a_q2": d2 + p.a_q2,
            "Delta1-a_c": d1 - p.a_c, "Delta2-a_c": d2 - p.a_c}
    if check_second:
        for k, v in dens.items():
            _nz(k, v)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = {k: (np.float64(1.0) / v if abs(v) >= SINGULAR_TOL else np.nan) for k, v in dens.items()}
        ta1 = p.a_q1 * (1 - 2 * g1s / d1 * inv["Delta1+a_q1"])
        ta2 = p.a_q2 * (1 - 2 * g2s / d2 * inv["Delta2+a_q2"])
        tac = p.a_c * (1 - 2 * g1s / d1 * inv["Delta1-a_c"] - 2 * g2s / d2 * inv["Delta2-a_c"])
    gt = 0.5 * p.g1 * p.g2 * (1 / d1 + 1 / d2 - 1 / s1 - 1 / s2)
    ge = p.g12 + gt
    r = p.g1 * p.g2 / (d1 * d2)
    return EffectiveParams(
        tilde_f_q1=p.f_q1 + g1s / d1 - g1s / s1,
        tilde_f_q2=p.f_q2 + g2s / d2 - g2s / s2,
        tilde_f_c=p.f_c - (g1s / d1 + g1s / s1 + g2s / d2 + g2s / s2),
        tilde_a_q1=float(ta1), tilde_a_q2=float(ta2), tilde_a_c=float(tac),
        g_eff=ge,
        g12_tilde=gt,
        g200=math.sqrt(2) * (ge - 0.5 * r * p.a_q1),
        g002=math.sqrt(2) * (ge - 0.5 * r * p.a_q2),
        g020=math.sqrt(2) * r * p.a_c,
        cross_kerr=0.5 * r * r * (p.a_q1 + p.a_q2 + 4 * p.a_c),
    )


def regime_ratios(p: CircuitParams) -> dict:
    """Coupling-to-gap ratios for the three level repulsions on |101>."""
    ep = effective_params(p)
    d12 = ep.tilde_delta12
    gaps = {"g200": d12 + ep.tilde_a_q1, "g002": d12 - ep.tilde_a_q2,
            "g020": 2 * (ep.tilde_f_c - ep.tilde_f_c_star)}
    coup = {"g200": ep.g200, "g002": ep.g002, "g020": ep.g020}
    return {k: (abs(coup[k]) / abs(gaps[k]) if gaps[k] != 0 else math.inf) for k in gaps}


def in_dispersive_regime(p: CircuitParams) -> bool:
    return all(v < REGIME_RATIO for v in regime_ratios(p).values())


def _warn_regime(p: CircuitParams, what: str):
    if not in_dispersive_regime(p):
        warnings.warn(f"{what} evaluated outside the dispersive regime", RegimeWarning, stacklevel=3)


def _require_resonant(p: CircuitParams, what: str):
    if abs(p.f_q1 - p.f_q2) > RESONANT_QUBIT_TOL:
        raise ContractError(f"{what} needs f_q1 = f_q2 (within 1 MHz); got {p.f_q1} vs {p.f_q2}")


def switch_off_frequency(p: CircuitParams) -> float:
    """Rough coupler frequency where direct and mediated couplings cancel."""
    if p.g12 == 0:
        raise ContractError("g12 = 0: the effective coupling has no switch-off point")
    if p.g12 < 0:
        raise ContractError("switch-off estimate needs g12 > 0")
    _require_resonant(p, "switch_off_frequency")
    return 0.5 * (p.f_q1 + p.f_q2) + p.g1 * p.g2 / p.g12


def switch_off_root(p: CircuitParams, lo: float | None = None, hi: float | None = None) -> float:
    """Exact root of the analytic g_eff(f_c) near the rough estimate."""
    guess = switch_off_frequency(p)
    fq = max(p.f_q1, p.f_q2)
    lo = fq + 0.5 * (guess - fq) if lo is None else lo
    hi = fq + 2.0 * (guess - fq) if hi is None else hi
    f = lambda fc: g_eff(p.with_(f_c=fc))
    if f(lo) * f(hi) > 0:
        raise NoBracketError(f"analytic g_eff has no sign change on [{lo}, {hi}] GHz")
    return brentq(f, lo, hi, xtol=1e-13)


def zz_resonant_qubits(p: CircuitParams) -> float:
    """|zeta| from the |101> <-> |200>, |002> level repulsions."""
    ep = effective_params(p)
    d = ep.tilde_delta12
    x1, x2 = d + ep.tilde_a_q1, d - ep.tilde_a_q2
    return 0.5 * (math.hypot(x1, 2 * ep.g200) - abs(x1) + math.hypot(x2, 2 * ep.g002) - abs(x2))


def zz_resonant_coupler(p: CircuitParams) -> float:
    """|zeta| from the |101> <-> |020> level repulsion."""
    ep = effective_params(p)
    x = ep.tilde_f_c - ep.tilde_f_c_star
    return math.hypot(x, ep.g020) - abs(x)


def zz_dispersive(p: CircuitParams, strict: bool = True) -> float:
    """Dispersive |zeta| for resonant qubits and no direct coupling.

    Uses the bare Delta and anharmonicities as in the closed form.
    """
    if strict:
        if p.g12 != 0:
            raise ContractError("zz_dispersive requires g12 = 0; use zz_general")
        if abs(p.f_q1 - p.f_q2) > RESONANT_QUBIT_TOL:
            raise ContractError("zz_dispersive requires f_q1 = f_q2; use zz_general")
    d = p.delta1
    _nz("a_q1", p.a_q1)
    _nz("a_q2", p.a_q2)
    _nz("a_c - 2 Delta", p.a_c - 2 * d)
    gt = g12_tilde(p)
    _warn_regime(p, "zz_dispersive")
    return 2 * gt * gt * abs(1 / p.a_q1 + 1 / p.a_q2 + 4 / (p.a_c - 2 * d))


def zz_general(p: CircuitParams) -> float:
    """Signed dispersive zeta for arbitrary detunings and direct coupling."""
    d1, d2, d12 = p.delta1, p.delta2, p.delta12
    den = {"a_q1+Delta12": p.a_q1 + d12, "a_q2-Delta12": p.a_q2 - d12,
           "a_c-Delta1-Delta2": p.a_c - d1 - d2, "Delta1*Delta2": d1 * d2}
    for k, v in den.items():
        _nz(k, v)
    gg = p.g1 * p.g2
    return -2 * ((p.g12 + gg / d2) ** 2 / den["a_q1+Delta12"]
                 + (p.g12 + gg / d1) ** 2 / den["a_q2-Delta12"]
                 + (gg * (1 / d1 + 1 / d2)) ** 2 / den["a_c-Delta1-Delta2"]
                 - 2 * p.g12 * gg / (d1 * d2))


def zz_general_equal_detuning(p: CircuitParams) -> float:
    """The Delta1 = Delta2 regrouping in terms of g_eff and g12_tilde.

    Here g12_tilde means g1 g2 / Delta (no counter-rotating part), which is
    the quantity that makes the regrouping an identity with zz_general.
    """
    _require_resonant(p, "zz_general_equal_detuning")
    d = _nz("Delta", p.delta1)
    _nz("a_c - 2 Delta", p.a_c - 2 * d)
    gt = p.g1 * p.g2 / d
    ge = p.g12 + gt
    return (-2 * ge * (ge * (1 / p.a_q1 + 1 / p.a_q2) + 4 * gt / (p.a_c - 2 * d))
            + 4 * p.g12 * gt * p.a_c / (d * (p.a_c - 2 * d)))


def zero_zz_alpha1(p: CircuitParams) -> float:
    """a_q1 that nulls the dispersive ZZ for the given Delta, a_c and a_q2."""
    _require_resonant(p, "zero_zz_alpha1")
    d = p.delta1
    _nz("a_q2", p.a_q2)
    _nz("2 Delta - a_c", 2 * d - p.a_c)
    den = 4 / (2 * d - p.a_c) - 1 / p.a_q2
    if abs(den) < SINGULAR_TOL:
        raise ContractError("zero-ZZ condition has no solution: 4/(2 Delta - a_c) = 1/a_q2")
    return 1 / den


def branch_conditions(p: CircuitParams) -> tuple[float, float]:
    """Direct couplings g12 on the upper and lower zero-ZZ branches (a_c = 0 model)."""
    if abs(p.a_c) > 1e-3:
        warnings.warn("branch conditions assume a_c = 0; |a_c| > 1 MHz given", RegimeWarning, stacklevel=2)
    if abs(p.a_q1 - p.a_q2) > 1e-12:
        raise ContractError("branch conditions assume a_q1 = a_q2")
    _require_resonant(p, "branch_conditions")
    d = _nz("Delta", p.delta1)
    upper = -p.g1 * p.g2 / d
    return upper, upper * (1 - p.a_q1 / d)


def coupler_t1_critical(p: CircuitParams) -> float:
    """Coupler T1 (us) below which coupler decay starts to matter."""
    if math.isinf(p.T1_q1):
        raise ContractError("coupler_t1_critical needs a finite T1_q1")
    d1, d2 = _nz("Delta1", p.delta1), _nz("Delta2", p.delta2)
    return p.g1 * p.g2 / (d1 * d2) * p.T1_q1

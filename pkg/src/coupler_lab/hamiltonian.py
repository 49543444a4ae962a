"""Circuit parameters and Hamiltonian builders.

Parameters are stored in GHz (f = omega / 2pi) and microseconds. Matrices are
returned in rad/ns, so a GHz number x enters as 2*pi*x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Iterable

import numpy as np

from .errors import ContractError, SingularParameterError
from .hilbert import FockSpace, HermitianOperator, annihilation

TWO_PI = 2.0 * math.pi
SINGULAR_TOL = 1e-12
DISPERSIVE_RATIO = 0.15

FREQ_FIELDS = ("f_q1", "f_q2", "f_c")
ANHARM_FIELDS = ("a_q1", "a_q2", "a_c")
COUPLING_FIELDS = ("g1", "g2", "g12")
T1_FIELDS = ("T1_q1", "T1_q2", "T1_c")


def to_angular(f_ghz):
    """GHz -> rad/ns."""
    return TWO_PI * np.asarray(f_ghz) if np.ndim(f_ghz) else TWO_PI * f_ghz


def to_ghz(omega):
    """rad/ns -> GHz."""
    return np.asarray(omega) / TWO_PI if np.ndim(omega) else omega / TWO_PI


def gamma_from_t1(t1_us: float) -> float:
    """Relaxation rate in 1/ns for T1 given in microseconds (inf -> 0)."""
    if math.isinf(t1_us):
        return 0.0
    if t1_us <= 0:
        raise ContractError(f"T1 must be positive, got {t1_us}")
    return 1.0 / (1000.0 * t1_us)


@dataclass(frozen=True)
class CircuitParams:
    f_q1: float
    f_q2: float
    f_c: float
    a_q1: float
    a_q2: float
    a_c: float
    g1: float
    g2: float
    g12: float = 0.0
    T1_q1: float = math.inf
    T1_q2: float = math.inf
    T1_c: float = math.inf
    allow_negative_g12: bool = False

    def __post_init__(self):
        for name in FREQ_FIELDS + ANHARM_FIELDS + COUPLING_FIELDS + T1_FIELDS:
            v = getattr(self, name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or math.isnan(v):
                raise ContractError(f"{name} must be a real number, got {v!r}")
        for name in FREQ_FIELDS:
            if not getattr(self, name) > 0:
                raise ContractError(f"{name} must be > 0 GHz")
        for name in ("g1", "g2"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be >= 0")
        if self.g12 < 0 and not self.allow_negative_g12:
            raise ContractError("g12 < 0 requires allow_negative_g12=True")
        for name in T1_FIELDS:
            if not getattr(self, name) > 0:
                raise ContractError(f"{name} must be > 0 us (inf allowed)")

    # detunings in GHz
    @property
    def delta1(self) -> float:
        return self.f_q1 - self.f_c

    @property
    def delta2(self) -> float:
        return self.f_q2 - self.f_c

    @property
    def sigma1(self) -> float:
        return self.f_q1 + self.f_c

    @property
    def sigma2(self) -> float:
        return self.f_q2 + self.f_c

    @property
    def delta12(self) -> float:
        return self.f_q1 - self.f_q2

    @property
    def dispersive(self) -> bool:
        """Advisory flag: g_k/|Delta_k| below 0.15 for both qubits."""
        d = (abs(self.delta1), abs(self.delta2))
        if min(d) == 0:
            return False
        return self.g1 / d[0] < DISPERSIVE_RATIO and self.g2 / d[1] < DISPERSIVE_RATIO

    def with_(self, **changes) -> "CircuitParams":
        return replace(self, **changes)

    def with_t1(self, t1_us: float) -> "CircuitParams":
        return replace(self, T1_q1=t1_us, T1_q2=t1_us, T1_c=t1_us)

    def swapped(self) -> "CircuitParams":
        """Relabel q1 <-> q2."""
        return replace(self, f_q1=self.f_q2, f_q2=self.f_q1, a_q1=self.a_q2, a_q2=self.a_q1,
                       g1=self.g2, g2=self.g1, T1_q1=self.T1_q2, T1_q2=self.T1_q1)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return FREQ_FIELDS + ANHARM_FIELDS + COUPLING_FIELDS + T1_FIELDS


def _check_nonzero(**denoms):
    for name, value in denoms.items():
        if abs(value) < SINGULAR_TOL:
            raise SingularParameterError(f"singular parameters: {name} = {value!r}")


class _Ops:
    """Ladder operators on a space, with the products the builders need."""

    def __init__(self, space: FockSpace):
        self.a1 = annihilation(space, "q1")
        self.ac = annihilation(space, "c")
        self.a2 = annihilation(space, "q2")
        self.dim = space.dim

    @staticmethod
    def d(a):
        return a.T  # ladder matrices are real

    def n(self, a):
        return a.T @ a

    def duffing(self, a, omega, alpha):
        ad = a.T
        return omega * ad @ a + 0.5 * alpha * ad @ ad @ a @ a


def _exchange(ai, aj) -> np.ndarray:
    """(a_i^+ a_j + a_i a_j^+ - a_i^+ a_j^+ - a_i a_j), Hermitian by construction."""
    x = ai.T @ aj - ai.T @ aj.T
    return x + x.T


def _herm(x) -> np.ndarray:
    return x + x.T


def build_lab(p: CircuitParams, space: FockSpace | None = None) -> HermitianOperator:
    """Lab-frame Hamiltonian with counter-rotating coupling terms (rad/ns)."""
    space = space or FockSpace()
    space.require_min_levels(3)
    o = _Ops(space)
    w = to_angular
    h = (o.duffing(o.a1, w(p.f_q1), w(p.a_q1))
         + o.duffing(o.ac, w(p.f_c), w(p.a_c))
         + o.duffing(o.a2, w(p.f_q2), w(p.a_q2)))
    h = h + w(p.g12) * _exchange(o.a1, o.a2)
    h = h + w(p.g1) * _exchange(o.a1, o.ac)
    h = h + w(p.g2) * _exchange(o.a2, o.ac)
    return HermitianOperator(h)


def _shared_terms(p: CircuitParams, o: _Ops, geff: float, r: float, drop: frozenset) -> np.ndarray:
    """Exchange, correlated hopping, coupler two-photon and cross-Kerr pieces."""
    w = to_angular
    a1, ac, a2 = o.a1, o.ac, o.a2
    h = w(geff) * _exchange(a1, a2)
    h = h - 0.5 * w(r * p.a_q1) * _herm(a1.T @ a1 @ a1 @ a2.T)
    h = h - 0.5 * w(r * p.a_q2) * _herm(a2.T @ a2 @ a2 @ a1.T)
    h = h + w(r * p.a_c) * _herm(a1.T @ a2.T @ ac @ ac)
    if "cross_kerr" not in drop:
        h = h + w(0.5 * r * r * (p.a_q1 + p.a_q2 + 4.0 * p.a_c)) * o.n(a1) @ o.n(a2)
    return h


def _zero_couplings(h: np.ndarray, space: FockSpace, drop: frozenset) -> np.ndarray:
    """Remove the direct matrix elements between |101> and the doubly excited states."""
    pairs = {"g200": (2, 0, 0), "g002": (0, 0, 2), "g020": (0, 2, 0)}
    i = space.index((1, 0, 1))
    for key, occ in pairs.items():
        if key in drop:
            j = space.index(occ)
            h[i, j] = 0.0
            h[j, i] = 0.0
    return h


ABLATIONS = frozenset({"g200", "g002", "g020", "cross_kerr"})


def _drop_set(drop: Iterable[str]) -> frozenset:
    drop = frozenset(drop)
    unknown = drop - ABLATIONS
    if unknown:
        raise ContractError(f"unknown ablation terms {sorted(unknown)}; allowed {sorted(ABLATIONS)}")
    return drop


def build_eff1(p: CircuitParams, space: FockSpace | None = None, last_line: bool = True,
               drop: Iterable[str] = ()) -> HermitianOperator:
    """Effective Hamiltonian after the first SWT.

    `last_line` keeps the single-photon nonlinear qubit-coupler terms
    (proportional to g_k alpha / Delta_k). `drop` zeroes selected couplings.
    """
    from .analytics import effective_params  # local import avoids a cycle

    space = space or FockSpace()
    space.require_min_levels(3)
    drop = _drop_set(drop)
    _check_nonzero(Delta1=p.delta1, Delta2=p.delta2, Sigma1=p.sigma1, Sigma2=p.sigma2)
    ep = effective_params(p, check_second=False)
    d1, d2 = p.delta1, p.delta2
    r = p.g1 * p.g2 / (d1 * d2)
    ap1 = p.a_q1 * (1 - 2 * p.g1**2 / d1**2)
    ap2 = p.a_q2 * (1 - 2 * p.g2**2 / d2**2)
    apc = p.a_c * (1 - 2 * (p.g1**2 / d1**2 + p.g2**2 / d2**2))
    o = _Ops(space)
    w = to_angular
    a1, ac, a2 = o.a1, o.ac, o.a2
    h = (o.duffing(a1, w(ep.tilde_f_q1), w(ap1))
         + o.duffing(ac, w(ep.tilde_f_c), w(apc))
         + o.duffing(a2, w(ep.tilde_f_q2), w(ap2)))
    h = h + _shared_terms(p, o, ep.g_eff, r, drop)
    h = h + w(2 * r * p.a_c) * _herm(a1.T @ a2 @ ac.T @ ac)
    nc = o.n(ac)
    for ak, gk, dk, aqk in ((a1, p.g1, d1, p.a_q1), (a2, p.g2, d2, p.a_q2)):
        h = h + w(2 * gk**2 * (aqk + p.a_c) / dk**2) * o.n(ak) @ nc
        if last_line:
            h = h - w(gk * aqk / dk) * _herm(ak.T @ ak.T @ ak @ ac)
            h = h - w(gk * p.a_c / dk) * _herm(ak.T @ ac.T @ ac @ ac)
    return HermitianOperator(_zero_couplings(h, space, drop))


def build_eff2(p: CircuitParams, space: FockSpace | None = None,
               drop: Iterable[str] = ()) -> HermitianOperator:
    """Effective Hamiltonian after both SWTs (tilde parameters)."""
    from .analytics import effective_params

    space = space or FockSpace()
    space.require_min_levels(3)
    drop = _drop_set(drop)
    ep = effective_params(p)
    r = p.g1 * p.g2 / (p.delta1 * p.delta2)
    o = _Ops(space)
    w = to_angular
    h = (o.duffing(o.a1, w(ep.tilde_f_q1), w(ep.tilde_a_q1))
         + o.duffing(o.ac, w(ep.tilde_f_c), w(ep.tilde_a_c))
         + o.duffing(o.a2, w(ep.tilde_f_q2), w(ep.tilde_a_q2)))
    h = h + _shared_terms(p, o, ep.g_eff, r, drop)
    return HermitianOperator(_zero_couplings(h, space, drop))


BUILDERS = {"lab": build_lab, "eff1": build_eff1, "eff2": build_eff2}


def build(source: str, p: CircuitParams, space: FockSpace | None = None, **kw) -> HermitianOperator:
    try:
        fn = BUILDERS[source]
    except KeyError:
        raise ContractError(f"unknown hamiltonian source {source!r}; expected one of {sorted(BUILDERS)}") from None
    return fn(p, space, **kw)

"""Random-state average gate fidelity for the iSWAP target and gate-error sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .analytics import g_eff as g_eff_analytic
from .errors import ContractError, NoBracketError
from .hamiltonian import CircuitParams, build_lab, to_ghz
from .hilbert import FockSpace
from . import lindblad as lb

DEFAULT_N = 2000


@dataclass(frozen=True)
class StateEnsemble:
    """Pure computational-space states; `vectors` is (N, 4), `states` (N, 4, 4)."""

    seed: int
    vectors: np.ndarray
    distribution: str = "haar-pure"

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def states(self) -> np.ndarray:
        v = self.vectors
        return v[:, :, None] * v.conj()[:, None, :]

    @property
    def vecs(self) -> np.ndarray:
        """Column-major vectorized states, (N, 16)."""
        return self.states.transpose(0, 2, 1).reshape(self.count, -1)

    @property
    def tag(self) -> str:
        return f"{self.distribution}(seed={self.seed}, N={self.count})"


def point_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Deterministic substream for sweep point `index`, independent of worker order."""
    return np.random.SeedSequence([int(seed), int(index)])


def haar_ensemble(seed, N: int, dim: int = 4) -> StateEnsemble:
    """Haar-random pure states from normalized complex Gaussian vectors."""
    if N < 1:
        raise ContractError("ensemble size must be >= 1")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((N, dim)) + 1j * rng.standard_normal((N, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    s = seed.entropy if isinstance(seed, np.random.SeedSequence) else int(seed)
    return StateEnsemble(s, z)


def ideal_generator(g_eff: float) -> np.ndarray:
    """Noise-free pure-XY generator (g_eff in rad/ns)."""
    return lb.reduced_liouvillian(g_eff, 0.0, None)


def gate_time(g_eff: float) -> float:
    """iSWAP time pi / (2 |g_eff|) in ns for g_eff in rad/ns."""
    if g_eff == 0:
        raise ContractError("g_eff = 0 gives no gate")
    return math.pi / (2 * abs(g_eff))


def fidelity_samples(L_noisy, L_ideal, t_g: float, ens: StateEnsemble, check: bool = True) -> np.ndarray:
    """Per-state overlaps tr(rho_noisy rho_ideal) at t_g."""
    rhos = ens.states
    a = lb.propagate_many(lb.propagator(L_noisy, t_g), rhos, check)
    b = lb.propagate_many(lb.propagator(L_ideal, t_g), rhos, check)
    return np.einsum("nij,nji->n", a, b).real


def average_fidelity(L_noisy, L_ideal, t_g: float, ens: StateEnsemble, check: bool = True) -> float:
    """Ensemble mean of tr(rho(t_g) rho_ideal(t_g)); the gate error is 1 - F."""
    if np.shape(L_noisy) != np.shape(L_ideal) or np.shape(L_noisy)[0] != 16:
        raise ContractError("both generators must act on the 4-dim computational space")
    return float(np.mean(fidelity_samples(L_noisy, L_ideal, t_g, ens, check)))


def fidelity_stats(L_noisy, L_ideal, t_g, ens, check: bool = True) -> tuple[float, float]:
    """(F, standard error of F)."""
    s = fidelity_samples(L_noisy, L_ideal, t_g, ens, check)
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(s.size)) if s.size > 1 else 0.0


# coupler search

def _geff_at(p: CircuitParams, f_c: float, space: FockSpace) -> float:
    """Numeric |g_eff| in GHz at coupler frequency f_c."""
    from .spectral import label_spectrum, single_excitation_pair

    spec = label_spectrum(build_lab(p.with_(f_c=f_c), space), space)
    i, j = single_excitation_pair(spec)
    return to_ghz(0.5 * abs(spec.eigenvalues[i] - spec.eigenvalues[j]))


def default_bracket(p: CircuitParams) -> tuple[float, float]:
    """Coupler-side search interval: same side of the qubits as the configured f_c."""
    fq = 0.5 * (p.f_q1 + p.f_q2)
    near = 2.5 * max(p.g1, p.g2, 1e-3)
    if p.f_c >= fq:
        return fq + near, fq + 40.0
    return max(fq - 40.0, 0.05), fq - near


def coupler_for_geff(p: CircuitParams, target_ghz: float, space: FockSpace | None = None,
                     bracket: tuple[float, float] | None = None, scan: int = 64) -> float:
    """Coupler frequency where the numeric |g_eff| equals target_ghz.

    The bracket is scanned from the end nearest the qubits outward, and the
    first sign change is refined with Brent's method.
    """
    space = space or FockSpace()
    lo, hi = bracket or default_bracket(p)
    fq = 0.5 * (p.f_q1 + p.f_q2)
    near, far = (lo, hi) if abs(lo - fq) < abs(hi - fq) else (hi, lo)
    dn, df = abs(near - fq), abs(far - fq)
    side = 1.0 if far > fq else -1.0
    grid = fq + side * np.geomspace(dn, df, scan)
    f = lambda fc: _geff_at(p, fc, space) - target_ghz
    prev_x, prev_v = grid[0], f(grid[0])
    for x in grid[1:]:
        v = f(x)
        if prev_v == 0:
            return float(prev_x)
        if prev_v * v < 0:
            return float(brentq(f, prev_x, x, xtol=1e-12, rtol=1e-13))
        prev_x, prev_v = x, v
    raise NoBracketError(f"|g_eff| = {target_ghz:.6g} GHz is unreachable for f_c in [{lo:.4g}, {hi:.4g}] GHz")


@dataclass(frozen=True)
class GatePoint:
    t_g: float
    T1: float
    f_c: float
    g_eff: float  # GHz, signed
    zeta: float  # GHz
    eps: float
    eps_stderr: float


def operating_point(p: CircuitParams, t_g: float, space: FockSpace | None = None,
                    bracket=None) -> tuple[CircuitParams, float, float]:
    """Coupler tuned so the numeric g_eff realizes an iSWAP in t_g; returns (params, g_eff, zeta) in rad/ns."""
    from .spectral import zz_numeric

    space = space or FockSpace()
    target = to_ghz(math.pi / (2 * t_g))
    fc = coupler_for_geff(p, target, space, bracket)
    q = p.with_(f_c=fc)
    sign = 1.0 if g_eff_analytic(q) >= 0 else -1.0
    # use the exact target so the ideal gate closes at t_g
    return q, sign * math.pi / (2 * t_g), zz_numeric(build_lab(q, space), space)


def gate_error_point(q: CircuitParams, g_eff: float, zeta: float, t_g: float, T1: float,
                     ens: StateEnsemble, zz_off: bool = False) -> tuple[float, float]:
    qq = q.with_t1(T1)
    L = lb.reduced_generator(qq, g_eff=g_eff, zeta=0.0 if zz_off else zeta)
    F, se = fidelity_stats(L, ideal_generator(g_eff), t_g, ens)
    return 1.0 - F, se


def gate_error_sweep(p: CircuitParams, t_grid, T1_set, source: str = "numeric",
                     ens: StateEnsemble | None = None, space: FockSpace | None = None,
                     bracket=None, zz_off: bool = False) -> list[GatePoint]:
    """Gate error versus gate time, tuning f_c so that g_eff = pi / (2 t_g).

    source="analytic-couplings" keeps the numeric coupler tuning but uses the
    closed-form zeta at the operating point.
    """
    from .analytics import zz_general
    from .hamiltonian import to_angular

    space = space or FockSpace()
    ens = ens or haar_ensemble(0, DEFAULT_N)
    rows = []
    for t_g in t_grid:
        q, ge, z = operating_point(p, float(t_g), space, bracket)
        if source == "analytic-couplings":
            z = to_angular(zz_general(q))
        elif source != "numeric":
            raise ContractError(f"unknown source {source!r}")
        for T1 in T1_set:
            eps, se = gate_error_point(q, ge, z, float(t_g), float(T1), ens, zz_off)
            rows.append(GatePoint(float(t_g), float(T1), q.f_c, to_ghz(ge), to_ghz(z), eps, se))
    return rows


# lab-frame reference

def lab_average_fidelity(p: CircuitParams, ens: StateEnsemble, space: FockSpace | None = None,
                         t_g: float | None = None) -> dict:
    """Average fidelity from full lab-frame propagation, against the pure-XY target.

    The map from computational inputs to the dressed output block is linear, so
    it is built once from the 16 matrix units |i><j| (block-wise exact
    exponential) and then applied to the whole ensemble.
    """
    from .spectral import geff_numeric

    space = space or FockSpace.uniform(4)
    H = build_lab(p, space)
    g = geff_numeric(H, space, p)
    t_g = t_g if t_g is not None else gate_time(g)
    basis, frame, _ = lb.dressed_computational_basis(H, space)
    L = lb.lab_generator(p, space, H)
    units = np.zeros((16, 4, 4), dtype=complex)
    for k in range(16):
        i, j = k % 4, k // 4  # column-major order
        units[k, i, j] = 1.0
    lab_units = lb.embed_states(basis, units)
    d = space.dim
    V0 = lab_units.transpose(0, 2, 1).reshape(16, d * d).T  # columns = vec of each unit
    Vt = lb.expm_action_blocked(L, V0, t_g)
    out = Vt.T.reshape(16, d, d).transpose(0, 2, 1)
    blocks = lb.project_states(basis, out, frame, t_g)
    # superoperator on the 4-dim block: column k = vec(block of unit k)
    M = blocks.transpose(0, 2, 1).reshape(16, 16).T
    rhos = ens.states
    noisy = lb.propagate_many(M, rhos, check=False)
    ideal = lb.propagate_many(lb.propagator(ideal_generator(g), t_g), rhos)
    samples = np.einsum("nij,nji->n", noisy, ideal).real
    return {"F": float(samples.mean()), "stderr": float(samples.std(ddof=1) / math.sqrt(samples.size)),
            "t_g": t_g, "g_eff": g, "map": M}

"""Truncated three-mode Fock space, ladder operators and Hermitian algebra.

Mode ordering is fixed as (q1, c, q2) with q1 the most significant index, so
the basis state |n1, nc, n2> sits at n1*Lc*L2 + nc*L2 + n2.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ContractError, EigenSolverError, InvariantError

MODES = ("q1", "c", "q2")
HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class FockSpace:
    """Product space of three truncated oscillators.

    The Hamiltonian builders require at least 3 levels per mode so that the
    doubly excited states are representable; bare ladder algebra works with 2.
    """

    levels_q1: int = 5
    levels_c: int = 5
    levels_q2: int = 5

    def __post_init__(self):
        for name in ("levels_q1", "levels_c", "levels_q2"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 2:
                raise ContractError(f"{name} must be an integer >= 2, got {n!r}")

    @classmethod
    def uniform(cls, levels: int) -> "FockSpace":
        return cls(levels, levels, levels)

    @property
    def levels(self) -> tuple[int, int, int]:
        return (self.levels_q1, self.levels_c, self.levels_q2)

    @property
    def dim(self) -> int:
        return self.levels_q1 * self.levels_c * self.levels_q2

    def mode_levels(self, mode: str) -> int:
        return self.levels[_mode_index(mode)]

    def index(self, occ: Sequence[int]) -> int:
        n1, nc, n2 = occ
        l1, lc, l2 = self.levels
        if not (0 <= n1 < l1 and 0 <= nc < lc and 0 <= n2 < l2):
            raise ContractError(f"occupation {tuple(occ)} outside truncation {self.levels}")
        return (n1 * lc + nc) * l2 + n2

    def occupation(self, index: int) -> tuple[int, int, int]:
        l1, lc, l2 = self.levels
        if not 0 <= index < self.dim:
            raise ContractError(f"basis index {index} outside [0, {self.dim})")
        rest, n2 = divmod(int(index), l2)
        n1, nc = divmod(rest, lc)
        return (n1, nc, n2)

    @property
    def labels(self) -> tuple[tuple[int, int, int], ...]:
        """Occupation tuples in basis-index order."""
        return _labels(self.levels)

    def basis(self) -> Iterator[tuple[int, int, int]]:
        return itertools.product(*(range(n) for n in self.levels))

    def require_min_levels(self, minimum: int = 3):
        if min(self.levels) < minimum:
            raise ContractError(f"every mode needs >= {minimum} levels, got {self.levels}")

    def grown(self, extra: int = 1) -> "FockSpace":
        return FockSpace(self.levels_q1 + extra, self.levels_c + extra, self.levels_q2 + extra)


@functools.lru_cache(maxsize=32)
def _labels(levels):
    return tuple(itertools.product(*(range(n) for n in levels)))


def _mode_index(mode: str) -> int:
    try:
        return MODES.index(mode)
    except ValueError:
        raise ContractError(f"unknown mode {mode!r}; expected one of {MODES}") from None


class HermitianOperator:
    """Dense Hermitian matrix. Hamiltonians carry rad/ns."""

    __slots__ = ("_m",)

    def __init__(self, matrix, tol: float = HERMITIAN_TOL):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ContractError(f"expected a square matrix, got shape {m.shape}")
        dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if dev >= tol:
            raise InvariantError(f"matrix is not Hermitian: max |M - M^H| = {dev:.3e}")
        m.setflags(write=False)
        self._m = m

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def __add__(self, other):
        if isinstance(other, HermitianOperator):
            other = other.matrix
        return HermitianOperator(self._m + other)

    def shifted(self, c: float) -> "HermitianOperator":
        return HermitianOperator(self._m + c * np.eye(self.dim))

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"


def ladder(levels: int) -> np.ndarray:
    """Single-mode annihilator with <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, levels, dtype=float)), 1)


def tensor_embed(local, mode: str, space: FockSpace) -> np.ndarray:
    """Place a single-mode matrix on `mode`, identity on the other two."""
    k = _mode_index(mode)
    local = np.asarray(local)
    n = space.levels[k]
    if local.shape != (n, n):
        raise ContractError(f"local operator shape {local.shape} does not match {n} levels of mode {mode}")
    factors = [np.eye(m) for m in space.levels]
    factors[k] = local
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def annihilation(space: FockSpace, mode: str) -> np.ndarray:
    return tensor_embed(ladder(space.mode_levels(mode)), mode, space)


def number(space: FockSpace, mode: str) -> np.ndarray:
    n = space.mode_levels(mode)
    return tensor_embed(np.diag(np.arange(n, dtype=float)), mode, space)


def basis_vector(space: FockSpace, occ: Sequence[int]) -> np.ndarray:
    v = np.zeros(space.dim, dtype=complex)
    v[space.index(occ)] = 1.0
    return v


def eigh(M, residual_tol: float = 1e-10, ortho_tol: float = 1e-10):
    """Ascending eigenvalues and orthonormal eigenvectors with a residual check.

    LAPACK's divide-and-conquer driver does the work. The contract
    |M v - lambda v| < residual_tol * |M| is verified on return.
    """
    m = M.matrix if isinstance(M, HermitianOperator) else np.asarray(M)
    if np.iscomplexobj(m) and not np.any(m.imag):
        m = m.real  # real symmetric input: the real driver is several times faster
    if not np.isfinite(m).all():
        raise EigenSolverError("matrix has non-finite entries")
    try:
        w, v = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(m)
        raise EigenSolverError(f"eigensolver did not converge (condition number {cond:.3e})") from exc
    # spectral norm of a Hermitian matrix is its largest |eigenvalue|
    scale = max(np.abs(w).max() if w.size else 0.0, 1e-300)
    resid = np.linalg.norm(m @ v - v * w, axis=0).max() if m.size else 0.0
    if resid > residual_tol * scale:
        raise EigenSolverError(f"eigen residual {resid:.3e} exceeds {residual_tol:g} x |M| = {scale:.3e}")
    ortho = np.abs(v.conj().T @ v - np.eye(m.shape[0])).max() if m.size else 0.0
    if ortho > ortho_tol:
        raise EigenSolverError(f"eigenvectors not orthonormal (deviation {ortho:.3e})")
    return w, v

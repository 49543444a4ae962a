"""Dressed-state labeling and numerical ZZ / effective-coupling extraction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analytics import RESONANT_QUBIT_TOL, g_eff as g_eff_analytic
from .errors import AmbiguousLabelError, ContractError
from .hamiltonian import CircuitParams
from .hilbert import FockSpace, HermitianOperator, eigh

OVERLAP_FLOOR = 0.5

G = (0, 0, 0)
Q1 = (1, 0, 0)
Q2 = (0, 0, 1)
Q1Q2 = (1, 0, 1)


@dataclass
class LabeledSpectrum:
    """Eigenpairs tagged with bare occupation labels.

    energies are rad/ns relative to the (0,0,0) state. `ambiguous` holds the
    labels whose assigned overlap fell below the floor.
    """

    space: FockSpace
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    assignment: dict  # label -> eigen index
    overlaps: dict  # label -> |<bare|eigen>|^2
    overlap_floor: float = OVERLAP_FLOOR
    ambiguous: set = field(default_factory=set)

    @property
    def ground(self) -> float:
        return self.eigenvalues[self.assignment[G]]

    def energy(self, label, allow_ambiguous: bool = False) -> float:
        label = tuple(label)
        self._check(label, allow_ambiguous)
        return self.eigenvalues[self.assignment[label]] - self.ground

    def overlap(self, label) -> float:
        return self.overlaps[tuple(label)]

    def is_ambiguous(self, label) -> bool:
        return tuple(label) in self.ambiguous

    def _check(self, label, allow_ambiguous):
        if label not in self.assignment:
            raise ContractError(f"label {label} not in the truncated space")
        if not allow_ambiguous and label in self.ambiguous:
            raise AmbiguousLabelError(
                f"label {label}: best overlap {self.overlaps[label]:.4f} < floor {self.overlap_floor}")

    def labels(self):
        return list(self.assignment)


def label_spectrum(H: HermitianOperator, space: FockSpace, overlap_floor: float = OVERLAP_FLOOR,
                   eig=None) -> LabeledSpectrum:
    """Greedy global-maximum assignment of bare labels to eigenvectors.

    The largest unassigned |<bare|eigen>|^2 is taken first, which keeps the
    map injective even where per-state argmax would double-book an eigenvector.
    """
    if H.dim != space.dim:
        raise ContractError(f"operator dim {H.dim} != space dim {space.dim}")
    w, v = eig if eig is not None else eigh(H)
    P = np.abs(v) ** 2  # rows: bare index, cols: eigen index
    dim = space.dim
    names = space.labels
    bare_used = np.zeros(dim, bool)
    eig_used = np.zeros(dim, bool)
    assignment, overlaps = {}, {}
    # rows and columns of P sum to one, so an entry above 1/2 is the strict
    # maximum of its row and column and the greedy pass would take it anyway
    for b, e in zip(*np.nonzero(P > 0.5)):
        bare_used[b] = eig_used[e] = True
        lab = names[b]
        assignment[lab] = int(e)
        overlaps[lab] = float(P[b, e])
    rows, cols = np.nonzero(~bare_used)[0], np.nonzero(~eig_used)[0]
    if rows.size:
        sub = P[np.ix_(rows, cols)]
        # stable descending sort; ties broken by bare index then eigen index
        order = np.argsort(-sub, axis=None, kind="stable")
        left = rows.size
        for flat in order:
            bi, ei = divmod(int(flat), cols.size)
            b, e = rows[bi], cols[ei]
            if bare_used[b] or eig_used[e]:
                continue
            bare_used[b] = eig_used[e] = True
            lab = names[b]
            assignment[lab] = int(e)
            overlaps[lab] = float(P[b, e])
            left -= 1
            if left == 0:
                break
    amb = {lab for lab, ov in overlaps.items() if ov < overlap_floor}
    return LabeledSpectrum(space, w, v, assignment, overlaps, overlap_floor, amb)


def single_excitation_pair(spec: LabeledSpectrum) -> tuple[int, int]:
    """Eigen indices of the two states carrying most |100> + |001> weight."""
    sp = spec.space
    wgt = (np.abs(spec.eigenvectors[sp.index(Q1)]) ** 2
           + np.abs(spec.eigenvectors[sp.index(Q2)]) ** 2)
    i, j = np.argsort(wgt, kind="stable")[-2:]
    return int(i), int(j)


@dataclass(frozen=True)
class ZZPoint:
    """zeta (rad/ns) and the provenance of the |101> energy."""

    zeta: float
    overlap_101: float
    ambiguous: bool
    rule: str  # "overlap" or "branch"
    e101: float
    pair_sum: float


def zz_point(H: HermitianOperator, space: FockSpace, allow_ambiguous: bool = False,
             overlap_floor: float = OVERLAP_FLOOR, spec: LabeledSpectrum | None = None) -> ZZPoint:
    spec = spec or label_spectrum(H, space, overlap_floor)
    i, j = single_excitation_pair(spec)
    pair = spec.eigenvalues[i] + spec.eigenvalues[j] - 2 * spec.ground
    e101 = spec.energy(Q1Q2, allow_ambiguous=allow_ambiguous)
    return ZZPoint(e101 - pair, spec.overlap(Q1Q2), spec.is_ambiguous(Q1Q2), "overlap", e101, pair)


def zz_numeric(H: HermitianOperator, space: FockSpace, allow_ambiguous: bool = False,
               overlap_floor: float = OVERLAP_FLOOR) -> float:
    """zeta = w101 - w100 - w001 in rad/ns with w000 = 0.

    w100 + w001 is read as the energy sum of the two states that carry the
    single-excitation qubit weight; this stays well defined when resonant
    qubits hybridize |100> and |001> into symmetric and antisymmetric states.
    """
    return zz_point(H, space, allow_ambiguous, overlap_floor).zeta


def geff_numeric(H: HermitianOperator, space: FockSpace, params: CircuitParams) -> float:
    """Half the splitting of the single-excitation qubit pair (rad/ns).

    The sign is copied from the analytic g_eff, since eigenvalue gaps carry none.
    """
    if abs(params.f_q1 - params.f_q2) > RESONANT_QUBIT_TOL:
        raise ContractError("geff_numeric needs resonant qubits (f_q1 = f_q2); "
                            "use analytics.g_eff for detuned qubits")
    spec = label_spectrum(H, space)
    i, j = single_excitation_pair(spec)
    mag = 0.5 * abs(spec.eigenvalues[i] - spec.eigenvalues[j])
    return mag if g_eff_analytic(params) >= 0 else -mag


def follow_branch(history: list, spec: LabeledSpectrum, label=Q1Q2) -> float:
    """Energy (rad/ns, ground-referenced) continuing the given history.

    Linear extrapolation from the last two points picks the nearest eigenvalue.
    """
    e = spec.eigenvalues - spec.ground
    if not history:
        raise ContractError("branch following needs at least one earlier point")
    target = history[-1] if len(history) == 1 else 2 * history[-1] - history[-2]
    return float(e[np.argmin(np.abs(e - target))])


def zz_sweep(hamiltonians, space: FockSpace, overlap_floor: float = OVERLAP_FLOOR) -> list[ZZPoint]:
    """zeta along an ordered sweep, falling back to branch following.

    A point whose |101> overlap is below the floor takes the eigenvalue that
    continues the previous |101> energies; the rule used is recorded per point.
    """
    out, hist = [], []
    for H in hamiltonians:
        spec = label_spectrum(H, space, overlap_floor)
        pt = zz_point(H, space, allow_ambiguous=True, spec=spec)
        if pt.ambiguous and hist:
            e101 = follow_branch(hist, spec)
            pt = ZZPoint(e101 - pt.pair_sum, pt.overlap_101, True, "branch", e101, pt.pair_sum)
        out.append(pt)
        hist.append(pt.e101)
    return out

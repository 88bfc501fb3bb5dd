"""Certification and construction of absolutely maximally entangled states.

An AME(n, d) state has a maximally mixed reduced state on every subset of
floor(n/2) parties (entropy m*log2(d) bits on every size-m cut).  Checking
all floor(n/2)-size subsets suffices: tracing a maximally mixed state down
to fewer parties stays maximally mixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Mapping, Sequence

import numpy as np

from .core import (
    TOL_ENT,
    TOL_NORM,
    Bipartition,
    NotMaximallyEntangledError,
    PureState,
    _front_matrix,
    basis_index,
    entropy_bits,
    partial_trace,
    permute_parties,
)


class CertificationError(ValueError):
    """An operation required an AME input (or output) and did not get one."""

    def __init__(self, message: str, report: "AmeReport | None" = None):
        super().__init__(message)
        self.report = report


class NotMdsError(ValueError):
    """Generator matrix has a singular maximal minor, so the code is not MDS."""

    def __init__(self, columns: tuple):
        super().__init__(f"generator columns {columns} form a singular submatrix")
        self.columns = columns


@dataclass(frozen=True)
class AmeReport:
    """Per-cut entropies and the verdict of an AME certification sweep.

    ``per_cut_entropies`` maps each checked B-subset (tuple of party
    indices) to its entropy in bits.  The deficit of a cut is
    ``m*log2(d) - entropy``; the state is AME iff the worst deficit is
    within tolerance.
    """

    is_ame: bool
    worst_bipartition: Bipartition
    worst_entropy_deficit: float
    per_cut_entropies: Mapping[tuple, float]


def certify_ame(state: PureState, include_smaller_cuts: bool = False) -> AmeReport:
    """Check every floor(n/2)-party cut for maximal entanglement.

    With ``include_smaller_cuts`` the report also lists all smaller cuts
    for diagnostics; the verdict only depends on the maximal-size cuts.
    """
    if state.n < 2:
        raise ValueError("certification needs at least two parties")
    m = state.n // 2
    sizes = range(1, m + 1) if include_smaller_cuts else (m,)
    entropies: dict = {}
    worst_cut = None
    worst_deficit = -math.inf
    for size in sizes:
        target = size * math.log2(state.d)
        for b in combinations(range(state.n), size):
            entropy = entropy_bits(partial_trace(state, b))
            entropies[b] = entropy
            deficit = target - entropy
            if size == m and deficit > worst_deficit:
                worst_deficit = deficit
                worst_cut = Bipartition.from_b(b, state.n)
    return AmeReport(
        is_ame=worst_deficit <= TOL_ENT,
        worst_bipartition=worst_cut,
        worst_entropy_deficit=worst_deficit,
        per_cut_entropies=entropies,
    )


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """Expansion of a state as a uniform superposition over B labels.

    ``branch_states[k]`` is the normalized state left on the A parties (in
    the cut's listed order) after projecting the B parties onto |k> and
    rescaling by sqrt(d**m).  The branches are orthonormal exactly when
    the state is maximally entangled across the cut.
    """

    cut: Bipartition
    branch_states: Mapping[tuple, PureState]


def _branch_matrix(state: PureState, cut: Bipartition) -> np.ndarray:
    """Rows are the rescaled projections onto each B label, columns indexed
    by the A parties in the cut's listed order."""
    mat, rest = _front_matrix(state, cut.b_parties)
    perm = [rest.index(p) for p in cut.a_parties]
    d, m = state.d, cut.m
    branches = (
        mat.reshape((d**m,) + (d,) * len(rest))
        .transpose((0, *[1 + q for q in perm]))
        .reshape(d**m, -1)
    )
    return math.sqrt(d**m) * branches


def canonical_form(state: PureState, cut: Bipartition) -> CanonicalForm:
    """Decompose across the cut; fails if the branches are not orthonormal."""
    if cut.n != state.n:
        raise ValueError(f"cut is over {cut.n} parties, state has {state.n}")
    branches = _branch_matrix(state, cut)
    gram = branches.conj() @ branches.T
    deviation = float(np.max(np.abs(gram - np.eye(branches.shape[0]))))
    if deviation > TOL_NORM:
        raise NotMaximallyEntangledError(
            f"state is not maximally entangled across cut B={cut.b_parties}", deviation
        )
    states = {
        labels: PureState(len(cut.a_parties), state.d, branches[basis_index(labels, state.d)])
        for labels in product(range(state.d), repeat=cut.m)
    }
    return CanonicalForm(cut=cut, branch_states=states)


def reassemble_canonical(form: CanonicalForm) -> PureState:
    """Rebuild the original state from its canonical branches."""
    cut = form.cut
    d, m = next(iter(form.branch_states.values())).d, cut.m
    dim_a = d ** len(cut.a_parties)
    amps = np.zeros(d**m * dim_a, dtype=np.complex128)
    for labels, branch in form.branch_states.items():
        row = basis_index(labels, d)
        amps[row * dim_a : (row + 1) * dim_a] = branch.amplitudes / math.sqrt(d**m)
    stacked = PureState(cut.n, d, amps)
    # stacked has parties ordered (B..., A...); map back to original labels
    order = [(cut.b_parties + cut.a_parties).index(p) for p in range(cut.n)]
    return permute_parties(stacked, order)


def build_ghz(n: int, d: int) -> PureState:
    """(1/sqrt d) sum_i |i>^(x n)."""
    if n < 2:
        raise ValueError(f"need at least two parties, got n={n}")
    amps = np.zeros(d**n, dtype=np.complex128)
    step = (d**n - 1) // (d - 1)  # index of |i...i> is i * (d**n - 1)/(d - 1)
    for i in range(d):
        amps[i * step] = 1.0 / math.sqrt(d)
    return PureState(n, d, amps)


# Logical states of the five-qubit code, written out as the 16-term
# superpositions with amplitudes +-1/4.
_ZERO_L = [
    ("00000", +1), ("10010", +1), ("01001", +1), ("10100", +1),
    ("01010", +1), ("11011", -1), ("00110", -1), ("11000", -1),
    ("11101", -1), ("00011", -1), ("11110", -1), ("01111", -1),
    ("10001", -1), ("01100", -1), ("10111", -1), ("00101", +1),
]
_ONE_L = [
    ("11111", +1), ("01101", +1), ("10110", +1), ("01011", +1),
    ("10101", +1), ("00100", -1), ("11001", -1), ("00111", -1),
    ("00010", -1), ("11100", -1), ("00001", -1), ("10000", -1),
    ("01110", -1), ("10011", -1), ("01000", -1), ("11010", +1),
]


def _superposition(terms, n: int, d: int) -> PureState:
    amps = np.zeros(d**n, dtype=np.complex128)
    scale = 1.0 / math.sqrt(len(terms))
    for bits, sign in terms:
        amps[basis_index([int(c) for c in bits], d)] = sign * scale
    return PureState(n, d, amps)


def ame52_states() -> tuple:
    """The two five-qubit-code logical states; each is an AME(5,2) state."""
    return _superposition(_ZERO_L, 5, 2), _superposition(_ONE_L, 5, 2)


def ame62_state() -> PureState:
    """AME(6,2) state (1/sqrt 2)(|0>|0_L> + |1>|1_L>), new qubit first."""
    zero_l, one_l = ame52_states()
    amps = np.concatenate([zero_l.amplitudes, one_l.amplitudes]) / math.sqrt(2)
    return PureState(6, 2, amps)


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, int(math.isqrt(p)) + 1))


def _det_mod(matrix: np.ndarray, p: int) -> int:
    """Determinant mod a prime, by Gaussian elimination over Z_p."""
    mat = np.array(matrix, dtype=np.int64) % p
    k = mat.shape[0]
    det = 1
    for col in range(k):
        pivot = next((r for r in range(col, k) if mat[r, col] % p), None)
        if pivot is None:
            return 0
        if pivot != col:
            mat[[col, pivot]] = mat[[pivot, col]]
            det = -det % p
        det = det * mat[col, col] % p
        inv = pow(int(mat[col, col]), -1, p)
        for r in range(col + 1, k):
            mat[r] = (mat[r] - mat[r, col] * inv * mat[col]) % p
    return det % p


@dataclass(frozen=True, eq=False)
class MdsCode:
    """Generator matrix of a length-n, dimension-k MDS code over Z_d.

    Every k x k submatrix of the generator must be invertible mod d; the
    check is exhaustive over column subsets, which is cheap at the sizes
    this toolkit targets.  Only prime d is supported, and k = floor(n/2)
    since the codes are used to synthesize AME states.
    """

    d: int
    n: int
    k: int
    generator: np.ndarray

    def __post_init__(self):
        if not _is_prime(self.d):
            raise ValueError(f"local dimension must be prime, got d={self.d}")
        if self.k != self.n // 2:
            raise ValueError(f"need k = floor(n/2) = {self.n // 2}, got k={self.k}")
        gen = np.asarray(self.generator, dtype=np.int64) % self.d
        if gen.shape != (self.k, self.n):
            raise ValueError(f"generator must be {self.k}x{self.n}, got {gen.shape}")
        for cols in combinations(range(self.n), self.k):
            if _det_mod(gen[:, cols], self.d) == 0:
                raise NotMdsError(cols)
        gen.flags.writeable = False
        object.__setattr__(self, "generator", gen)


def ame_from_mds(code: MdsCode, verify: bool = True) -> PureState:
    """Uniform superposition over the codewords of an MDS code.

    Returns d**(-k/2) sum over messages x of |x . G mod d>.  The output is
    certified rather than assumed: the MDS property makes every amplitude
    0 or exactly d**(-k/2), and the resulting state AME(n, d).
    """
    d, k = code.d, code.k
    amps = np.zeros(d**code.n, dtype=np.complex128)
    scale = d ** (-k / 2)
    for message in product(range(d), repeat=k):
        codeword = np.array(message, dtype=np.int64) @ code.generator % d
        amps[basis_index(codeword, d)] += scale
    state = PureState(code.n, d, amps)
    if verify:
        report = certify_ame(state)
        if not report.is_ame:
            raise CertificationError(
                f"codeword superposition failed AME({code.n},{d}) certification "
                f"(worst deficit {report.worst_entropy_deficit:.3e} bits)",
                report,
            )
    return state

"""Dense state vectors for systems of qudits with uniform local dimension.

Everything here operates on explicit complex amplitude vectors in double
precision.  Party 0 is the most significant digit: the basis label
``(k_0, ..., k_{n-1})`` lives at flat index ``sum_j k_j * d**(n-1-j)``,
which is numpy's C order for a ``(d, ..., d)`` tensor.

All values are immutable after construction and every function is pure
(random sampling takes an explicit seed), so states may be shared freely
between threads and exhaustive scans parallelized by the caller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Tolerances for double-precision dense linear algebra at desk scale.
TOL_NORM = 1e-10  # norm, unitarity and hermiticity checks
TOL_ENT = 1e-8    # entropy, fidelity and trace-distance comparisons
TOL_EIG = 1e-12   # eigenvalue floor inside entropy logarithms

# Dense amplitude vectors only; reject anything bigger than this.
MAX_AMPLITUDES = 2**22


class NotMaximallyEntangledError(ValueError):
    """A state failed an exact maximal-entanglement condition across a cut.

    Carries the worst deviation seen, so near-misses are quantifiable.
    """

    def __init__(self, message: str, deviation: float):
        super().__init__(f"{message} (deviation {deviation:.3e})")
        self.deviation = deviation


def _as_array(amplitudes) -> np.ndarray:
    arr = np.asarray(amplitudes, dtype=np.complex128).reshape(-1).copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized pure state of ``n`` qudits of local dimension ``d``."""

    n: int
    d: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one party, got n={self.n}")
        if self.d < 2:
            raise ValueError(f"local dimension must be >= 2, got d={self.d}")
        if self.d**self.n > MAX_AMPLITUDES:
            raise ValueError(
                f"d**n = {self.d}**{self.n} exceeds the dense-vector guard "
                f"of {MAX_AMPLITUDES} amplitudes"
            )
        arr = _as_array(self.amplitudes)
        if arr.size != self.d**self.n:
            raise ValueError(
                f"amplitude vector has length {arr.size}, expected d**n = {self.d**self.n}"
            )
        norm = np.linalg.norm(arr)
        if abs(norm - 1.0) > TOL_NORM:
            raise ValueError(f"state is not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dim(self) -> int:
        return self.d**self.n

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per party."""
        return self.amplitudes.reshape((self.d,) * self.n)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > TOL_NORM:
            raise ValueError("matrix is not Hermitian within tolerance")
        if abs(np.trace(mat).real - 1.0) > TOL_NORM:
            raise ValueError(f"trace is {np.trace(mat).real!r}, expected 1")
        if np.linalg.eigvalsh(mat)[0] < -TOL_NORM:
            raise ValueError("matrix has a negative eigenvalue beyond tolerance")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class Bipartition:
    """Ordered split of the parties ``{0, ..., n-1}`` into sets B and A.

    The listed order matters: it fixes which share pairs with which when a
    state is reduced to EPR pairs, and which qudits form the ancilla block.
    """

    b_parties: tuple
    a_parties: tuple
    n: int

    def __post_init__(self):
        b = tuple(int(p) for p in self.b_parties)
        a = tuple(int(p) for p in self.a_parties)
        object.__setattr__(self, "b_parties", b)
        object.__setattr__(self, "a_parties", a)
        if not b:
            raise ValueError("B side of a bipartition must be nonempty")
        if set(b) & set(a):
            raise ValueError(f"B and A overlap: {sorted(set(b) & set(a))}")
        if set(b) | set(a) != set(range(self.n)) or len(b) + len(a) != self.n:
            raise ValueError("B and A must partition {0, ..., n-1} exactly")
        if len(b) > len(a):
            raise ValueError(
                f"bipartition requires m = |B| <= |A| = n - m, got |B|={len(b)}, |A|={len(a)}"
            )

    @classmethod
    def from_b(cls, b_parties: Sequence[int], n: int) -> "Bipartition":
        """Bipartition with A = complement of B in ascending order."""
        b = tuple(int(p) for p in b_parties)
        a = tuple(p for p in range(n) if p not in set(b))
        return cls(b, a, n)

    @property
    def m(self) -> int:
        return len(self.b_parties)


@dataclass(frozen=True)
class BellOutcome:
    """Classical result of a generalized Bell measurement: two dits."""

    a: int
    b: int

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError(f"outcome dits must be nonnegative, got {(self.a, self.b)}")


@dataclass(frozen=True)
class GeneralizedPauli:
    """Shift/phase operator X**a Z**b on a single qudit.

    X|k> = |k+1 mod d> and Z|k> = w**k |k> with w = exp(2*pi*i/d).
    """

    d: int
    a: int
    b: int

    def __post_init__(self):
        object.__setattr__(self, "a", self.a % self.d)
        object.__setattr__(self, "b", self.b % self.d)

    def matrix(self) -> np.ndarray:
        omega = np.exp(2j * np.pi / self.d)
        mat = np.zeros((self.d, self.d), dtype=np.complex128)
        for k in range(self.d):
            mat[(k + self.a) % self.d, k] = omega ** (k * self.b)
        return mat


def basis_index(labels: Sequence[int], d: int) -> int:
    """Flat index of the basis label tuple, party 0 most significant."""
    labels = tuple(int(k) for k in labels)
    if not labels:
        raise ValueError("label tuple must be nonempty")
    index = 0
    for k in labels:
        if not 0 <= k < d:
            raise ValueError(f"label {k} out of range for dimension {d}")
        index = index * d + k
    return index


def basis_labels(index: int, n: int, d: int) -> tuple:
    """Inverse of :func:`basis_index`."""
    if not 0 <= index < d**n:
        raise ValueError(f"index {index} out of range for {n} parties of dimension {d}")
    labels = []
    for _ in range(n):
        index, k = divmod(index, d)
        labels.append(k)
    return tuple(reversed(labels))


def basis_state(labels: Sequence[int], d: int) -> PureState:
    """Computational basis state |k_0 ... k_{n-1}>."""
    labels = tuple(labels)
    amps = np.zeros(d ** len(labels), dtype=np.complex128)
    amps[basis_index(labels, d)] = 1.0
    return PureState(len(labels), d, amps)


def random_state(n: int, d: int, seed: int) -> PureState:
    """Normalized state with iid complex Gaussian amplitudes."""
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(d**n) + 1j * rng.standard_normal(d**n)
    return PureState(n, d, amps / np.linalg.norm(amps))


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-ish random unitary via QR with phase-fixed diagonal."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def tensor_product(x: PureState, y: PureState) -> PureState:
    """Combined state with x's parties first (most significant)."""
    if x.d != y.d:
        raise ValueError(f"local dimensions differ: {x.d} vs {y.d}")
    return PureState(x.n + y.n, x.d, np.kron(x.amplitudes, y.amplitudes))


def permute_parties(state: PureState, order: Sequence[int]) -> PureState:
    """Rearranged state where output party q is input party ``order[q]``."""
    order = tuple(int(p) for p in order)
    if sorted(order) != list(range(state.n)):
        raise ValueError(f"order must be a permutation of 0..{state.n - 1}, got {order}")
    amps = state.tensor().transpose(order).reshape(-1)
    return PureState(state.n, state.d, amps)


def _front_matrix(state: PureState, front: Sequence[int]):
    """Amplitudes as a matrix with ``front`` parties (in the given order)
    indexing rows and the remaining parties, ascending, indexing columns.

    Returns (matrix, survivors).
    """
    front = tuple(int(p) for p in front)
    if len(set(front)) != len(front):
        raise ValueError(f"parties must be distinct, got {front}")
    if any(p < 0 or p >= state.n for p in front):
        raise ValueError(f"party index out of range in {front}")
    rest = [p for p in range(state.n) if p not in set(front)]
    tensor = state.tensor().transpose(front + tuple(rest))
    return tensor.reshape(state.d ** len(front), -1), rest


def partial_trace(state: PureState, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on ``keep``, in the order given."""
    keep = tuple(keep)
    if not keep or len(keep) >= state.n:
        raise ValueError("keep must be a nonempty strict subset of the parties")
    mat, _ = _front_matrix(state, keep)
    return DensityMatrix(mat @ mat.conj().T)


def entropy_bits(rho: DensityMatrix) -> float:
    """Von Neumann entropy in bits, ignoring eigenvalues below the floor."""
    eigs = np.linalg.eigvalsh(rho.matrix)
    lam = eigs[eigs > TOL_EIG]
    return float(-np.sum(lam * np.log2(lam)))


def schmidt_coefficients(state: PureState, cut: Bipartition) -> np.ndarray:
    """Singular values of the state across the cut, descending.

    Squared coefficients sum to 1; they give the reduced-state spectrum on
    either side, so the entropy computed from them is an independent check
    on the partial-trace path.
    """
    if cut.n != state.n:
        raise ValueError(f"cut is over {cut.n} parties, state has {state.n}")
    mat, _ = _front_matrix(state, cut.b_parties)
    return np.linalg.svd(mat, compute_uv=False)


def _require_unitary(matrix: np.ndarray, dim: int) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (dim, dim):
        raise ValueError(f"operator must be {dim}x{dim}, got {matrix.shape}")
    dev = np.max(np.abs(matrix.conj().T @ matrix - np.eye(dim)))
    if dev > TOL_NORM:
        raise ValueError(f"operator is not unitary within tolerance (deviation {dev:.3e})")
    return matrix


def apply_on_parties(state: PureState, matrix: np.ndarray, parties: Sequence[int]) -> PureState:
    """Apply a unitary acting on the listed parties (in that order)."""
    parties = tuple(int(p) for p in parties)
    matrix = _require_unitary(matrix, state.d ** len(parties))
    mat, rest = _front_matrix(state, parties)
    mat = matrix @ mat
    axes = parties + tuple(rest)
    amps = (
        mat.reshape((state.d,) * state.n)
        .transpose(np.argsort(axes))
        .reshape(-1)
    )
    return PureState(state.n, state.d, amps)


def _outcome_probabilities(state: PureState, parties: Sequence[int]) -> np.ndarray:
    mat, _ = _front_matrix(state, parties)
    return np.sum(np.abs(mat) ** 2, axis=1)


def project_onto_outcome(state: PureState, parties: Sequence[int], outcome: Sequence[int]):
    """Deterministic computational-basis projection, keeping all parties.

    Returns (post-measurement state, probability).  Raises if the forced
    outcome has (numerically) zero probability.
    """
    parties = tuple(int(p) for p in parties)
    if not parties or len(parties) >= state.n:
        raise ValueError("measured parties must be a nonempty strict subset")
    mat, rest = _front_matrix(state, parties)
    row = basis_index(outcome, state.d)
    prob = float(np.sum(np.abs(mat[row]) ** 2))
    if prob <= TOL_EIG:
        raise ValueError(f"forced outcome {tuple(outcome)} has zero probability")
    post = np.zeros_like(mat)
    post[row] = mat[row] / math.sqrt(prob)
    axes = parties + tuple(rest)
    amps = (
        post.reshape((state.d,) * state.n)
        .transpose(np.argsort(axes))
        .reshape(-1)
    )
    return PureState(state.n, state.d, amps), prob


def projective_measure(state: PureState, parties: Sequence[int], rng_seed: int):
    """Computational-basis measurement sampled from the Born distribution.

    Returns (outcome labels, post-measurement state, probability).
    """
    parties = tuple(int(p) for p in parties)
    if not parties or len(parties) >= state.n:
        raise ValueError("measured parties must be a nonempty strict subset")
    probs = _outcome_probabilities(state, parties)
    rng = np.random.default_rng(rng_seed)
    row = int(rng.choice(probs.size, p=probs / probs.sum()))
    outcome = basis_labels(row, len(parties), state.d)
    post, prob = project_onto_outcome(state, parties, outcome)
    return outcome, post, prob


def project_onto_state(state: PureState, parties: Sequence[int], bra: PureState):
    """Project the listed parties onto ``bra`` and remove them.

    Returns (state on the surviving parties in ascending original order,
    probability).  Raises if the projection has zero probability.
    """
    parties = tuple(int(p) for p in parties)
    if bra.d != state.d or bra.n != len(parties):
        raise ValueError("bra must cover exactly the measured parties")
    if len(parties) >= state.n:
        raise ValueError("at least one party must survive the projection")
    mat, _ = _front_matrix(state, parties)
    reduced = bra.amplitudes.conj() @ mat
    prob = float(np.sum(np.abs(reduced) ** 2))
    if prob <= TOL_EIG:
        raise ValueError("projection onto the given state has zero probability")
    return PureState(state.n - len(parties), state.d, reduced / math.sqrt(prob)), prob


def bell_state(d: int, a: int, b: int) -> PureState:
    """Two-qudit state (1/sqrt d) sum_k w**(k b) |k>|k+a mod d>."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    omega = np.exp(2j * np.pi / d)
    amps = np.zeros(d * d, dtype=np.complex128)
    for k in range(d):
        amps[basis_index((k, (k + a) % d), d)] = omega ** (k * b) / math.sqrt(d)
    return PureState(2, d, amps)


def bell_basis(d: int) -> list:
    """All d**2 generalized Bell states, index (a, b) at position a*d + b.

    They are pairwise orthonormal and resolve the identity; (0, 0) is the
    maximally entangled pair (1/sqrt d) sum_i |i>|i>.
    """
    return [bell_state(d, a, b) for a in range(d) for b in range(d)]


def epr_state(d: int) -> PureState:
    """Maximally entangled two-qudit pair (1/sqrt d) sum_i |i>|i>."""
    return bell_state(d, 0, 0)


def bell_correction(d: int, outcome: BellOutcome) -> GeneralizedPauli:
    """Single-qudit correction undoing the residue of a Bell projection.

    Projecting one half of an EPR pair (together with a payload qudit)
    onto ``bell_state(d, a, b)`` leaves X**a Z**(-b) applied to the payload
    on the far qudit; X**(-a) Z**b inverts it up to a global phase.
    """
    return GeneralizedPauli(d, -outcome.a, outcome.b)


def fidelity(x: PureState, y: PureState) -> float:
    """|<x|y>|**2; invariant under global phases of either argument."""
    if x.n != y.n or x.d != y.d:
        raise ValueError(f"shape mismatch: ({x.n},{x.d}) vs ({y.n},{y.d})")
    return float(abs(np.vdot(x.amplitudes, y.amplitudes)) ** 2)


def fidelity_with_pure(rho: DensityMatrix, state: PureState) -> float:
    """<psi| rho |psi> for a pure reference state."""
    if rho.dim != state.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {state.dim}")
    return float(np.real(state.amplitudes.conj() @ rho.matrix @ state.amplitudes))


def trace_distance(x: DensityMatrix, y: DensityMatrix) -> float:
    """Half the sum of absolute eigenvalues of the difference."""
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(x.matrix - y.matrix))))

"""Parallel teleportation over a maximally entangled multi-party state.

Both directions share the same resource reduction: a joint unitary on the
A side rotates the canonical branches onto computational tags, which turns
the shared state into EPR pairs between matched parties B_i and A_i plus a
zeroed ancilla register.  Teleportation then runs pairwise over those EPR
pairs with generalized Bell measurements and shift/phase corrections, two
classical dits per teleported qudit.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .ame import canonical_form
from .core import (
    BellOutcome,
    Bipartition,
    PureState,
    _front_matrix,
    _require_unitary,
    apply_on_parties,
    basis_index,
    basis_state,
    bell_correction,
    bell_state,
    fidelity,
    permute_parties,
    project_onto_state,
    tensor_product,
)

A_TO_B = "A->B"
B_TO_A = "B->A"


@dataclass(frozen=True, eq=False)
class JointReductionUnitary:
    """Unitary on the A parties (in the cut's listed order) that maps each
    canonical branch |phi(k)> to |k_1...k_m>|0...0>."""

    cut: Bipartition
    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class TeleportTranscript:
    """Record of one protocol run: 2m classical dits, the corrections they
    triggered, the joint probability of the outcome tuple, and the fidelity
    of the delivered state with the payload."""

    direction: str
    outcomes: tuple
    corrections: tuple
    final_fidelity: float
    probability: float


def build_reduction_unitary(
    state: PureState, cut: Bipartition, candidates: np.ndarray | None = None
) -> JointReductionUnitary:
    """Construct the joint A-side unitary from the canonical branches.

    The first d**m columns of its adjoint are the branch states, placed at
    the |k>|0> block; the rest are a deterministic orthonormal completion
    drawn from ``candidates`` (identity columns by default).  The choice of
    completion never touches the protocol: only the branch block acts on
    the shared state.
    """
    form = canonical_form(state, cut)
    d, m = state.d, cut.m
    dim = d ** len(cut.a_parties)
    anc_dim = d ** (len(cut.a_parties) - m)
    adjoint = np.zeros((dim, dim), dtype=np.complex128)
    filled = set()
    basis = []
    for labels, branch in sorted(form.branch_states.items()):
        col = basis_index(labels, d) * anc_dim
        adjoint[:, col] = branch.amplitudes
        filled.add(col)
        basis.append(branch.amplitudes)
    if candidates is None:
        candidates = np.eye(dim, dtype=np.complex128)
    pool = iter(np.asarray(candidates, dtype=np.complex128).T)
    for col in (c for c in range(dim) if c not in filled):
        while True:
            try:
                vec = next(pool).copy()
            except StopIteration:
                raise ValueError("candidate pool exhausted before the unitary was complete")
            for _ in range(2):  # two passes keep the completion orthonormal
                for q in basis:
                    vec -= np.vdot(q, vec) * q
            norm = np.linalg.norm(vec)
            if norm > 1e-6:
                break
        vec /= norm
        basis.append(vec)
        adjoint[:, col] = vec
    matrix = _require_unitary(adjoint.conj().T, dim)
    return JointReductionUnitary(cut=cut, matrix=matrix)


def reduce_to_epr_pairs(
    state: PureState, cut: Bipartition, reduction: JointReductionUnitary | None = None
) -> PureState:
    """Apply the joint A-side unitary, yielding EPR pairs B_i <-> A_i and a
    zeroed ancilla register on the remaining A parties."""
    if reduction is None:
        reduction = build_reduction_unitary(state, cut)
    return apply_on_parties(state, reduction.matrix, cut.a_parties)


def enumerate_outcome_tuples(d: int, m: int):
    """All d**(2m) tuples of m Bell outcomes, lexicographic."""
    pairs = [BellOutcome(a, b) for a in range(d) for b in range(d)]
    return product(pairs, repeat=m)


class _Tagged:
    """State whose parties carry protocol tags, so positions stay
    resolvable while qudits are measured away."""

    def __init__(self, state: PureState, tags: Sequence[tuple]):
        self.state = state
        self.tags = list(tags)

    def apply(self, matrix: np.ndarray, tags: Sequence[tuple]) -> None:
        self.state = apply_on_parties(self.state, matrix, [self.tags.index(t) for t in tags])

    def measure_bell(self, pair: Sequence[tuple], forced: BellOutcome | None, rng):
        """Generalized Bell measurement on two tagged qudits; removes them.

        Returns (outcome, probability).  The outcome is forced when given,
        otherwise sampled from the Born distribution.
        """
        d = self.state.d
        positions = [self.tags.index(t) for t in pair]
        if forced is None:
            mat, _ = _front_matrix(self.state, positions)
            probs = np.array(
                [
                    np.sum(np.abs(bell_state(d, a, b).amplitudes.conj() @ mat) ** 2)
                    for a in range(d)
                    for b in range(d)
                ]
            )
            idx = int(rng.choice(probs.size, p=probs / probs.sum()))
            forced = BellOutcome(*divmod(idx, d))
        bra = bell_state(d, forced.a % d, forced.b % d)
        self.state, prob = project_onto_state(self.state, positions, bra)
        self.tags = [t for i, t in enumerate(self.tags) if i not in set(positions)]
        return forced, prob

    def extract(self, tag_order: Sequence[tuple]) -> PureState:
        """Remaining state permuted into the requested tag order."""
        return permute_parties(self.state, [self.tags.index(t) for t in tag_order])


def _check_inputs(state: PureState, cut: Bipartition, forced_outcomes, rng_seed, m: int):
    if cut.n != state.n:
        raise ValueError(f"cut is over {cut.n} parties, state has {state.n}")
    if forced_outcomes is None:
        if rng_seed is None:
            raise ValueError("provide forced_outcomes or an explicit rng_seed")
        return [None] * m, np.random.default_rng(rng_seed)
    forced = [o if isinstance(o, BellOutcome) else BellOutcome(*o) for o in forced_outcomes]
    if len(forced) != m:
        raise ValueError(f"need one forced outcome per teleported qudit ({m}), got {len(forced)}")
    return forced, None


def teleport_joint_to_local(
    state: PureState,
    cut: Bipartition,
    payload: PureState,
    forced_outcomes: Sequence | None = None,
    rng_seed: int | None = None,
    reduction: JointReductionUnitary | None = None,
) -> TeleportTranscript:
    """Teleport an m-qudit payload from the joint A side to the B parties.

    A applies the reduction unitary, Bell-measures each payload qudit
    against its EPR half A_i, and broadcasts the outcomes; each B_i then
    applies a local shift/phase correction.  The delivered state on the B
    parties is compared against the payload (ancilla register in |0...0>).
    """
    d, m = state.d, cut.m
    if payload.n != m or payload.d != d:
        raise ValueError(f"payload must be {m} qudits of dimension {d}")
    forced, rng = _check_inputs(state, cut, forced_outcomes, rng_seed, m)
    if reduction is None:
        reduction = build_reduction_unitary(state, cut)

    sys = _Tagged(
        tensor_product(payload, state),
        [("payload", i) for i in range(m)] + [("share", p) for p in range(state.n)],
    )
    sys.apply(reduction.matrix, [("share", p) for p in cut.a_parties])
    outcomes, corrections = [], []
    probability = 1.0
    for i in range(m):
        outcome, prob = sys.measure_bell(
            [("payload", i), ("share", cut.a_parties[i])], forced[i], rng
        )
        probability *= prob
        correction = bell_correction(d, outcome)
        sys.apply(correction.matrix(), [("share", cut.b_parties[i])])
        outcomes.append(outcome)
        corrections.append(correction)

    final = sys.extract([("share", p) for p in cut.b_parties + cut.a_parties[m:]])
    target = payload
    if len(cut.a_parties) > m:
        target = tensor_product(payload, basis_state([0] * (len(cut.a_parties) - m), d))
    return TeleportTranscript(
        direction=A_TO_B,
        outcomes=tuple(outcomes),
        corrections=tuple(corrections),
        final_fidelity=fidelity(final, target),
        probability=probability,
    )


def teleport_local_to_joint(
    state: PureState,
    cut: Bipartition,
    payloads: Sequence[PureState],
    forced_outcomes: Sequence | None = None,
    rng_seed: int | None = None,
    reduction: JointReductionUnitary | None = None,
    joint_op_first: bool = True,
) -> TeleportTranscript:
    """Teleport one qudit from each B party to the joint A side.

    Each B_i Bell-measures its payload against its own share (a purely
    local operation) and broadcasts two dits; A recovers all m qudits with
    the joint reduction unitary followed by per-qudit corrections.  The
    B-side measurements commute with the A-side unitary, so
    ``joint_op_first`` only reorders the simulation, never the result.
    """
    d, m = state.d, cut.m
    payloads = list(payloads)
    if len(payloads) != m or any(p.n != 1 or p.d != d for p in payloads):
        raise ValueError(f"need {m} single-qudit payloads of dimension {d}")
    forced, rng = _check_inputs(state, cut, forced_outcomes, rng_seed, m)
    if reduction is None:
        reduction = build_reduction_unitary(state, cut)

    joint_payload = payloads[0]
    for extra in payloads[1:]:
        joint_payload = tensor_product(joint_payload, extra)
    sys = _Tagged(
        tensor_product(joint_payload, state),
        [("payload", i) for i in range(m)] + [("share", p) for p in range(state.n)],
    )
    a_tags = [("share", p) for p in cut.a_parties]
    if joint_op_first:
        sys.apply(reduction.matrix, a_tags)
    outcomes = []
    probability = 1.0
    for i in range(m):
        outcome, prob = sys.measure_bell(
            [("payload", i), ("share", cut.b_parties[i])], forced[i], rng
        )
        probability *= prob
        outcomes.append(outcome)
    if not joint_op_first:
        sys.apply(reduction.matrix, a_tags)
    corrections = []
    for i, outcome in enumerate(outcomes):
        correction = bell_correction(d, outcome)
        sys.apply(correction.matrix(), [("share", cut.a_parties[i])])
        corrections.append(correction)

    final = sys.extract(a_tags)
    target = joint_payload
    if len(cut.a_parties) > m:
        target = tensor_product(joint_payload, basis_state([0] * (len(cut.a_parties) - m), d))
    return TeleportTranscript(
        direction=B_TO_A,
        outcomes=tuple(outcomes),
        corrections=tuple(corrections),
        final_fidelity=fidelity(final, target),
        probability=probability,
    )


def audit_joint_to_local(
    state: PureState, cut: Bipartition, payload: PureState
) -> list:
    """Run the A-to-B protocol for every one of the d**(2m) outcome tuples."""
    reduction = build_reduction_unitary(state, cut)
    return [
        teleport_joint_to_local(state, cut, payload, forced_outcomes=forced, reduction=reduction)
        for forced in enumerate_outcome_tuples(state.d, cut.m)
    ]


def audit_local_to_joint(
    state: PureState, cut: Bipartition, payloads: Sequence[PureState]
) -> list:
    """Run the B-to-A protocol for every one of the d**(2m) outcome tuples."""
    reduction = build_reduction_unitary(state, cut)
    return [
        teleport_local_to_joint(state, cut, payloads, forced_outcomes=forced, reduction=reduction)
        for forced in enumerate_outcome_tuples(state.d, cut.m)
    ]

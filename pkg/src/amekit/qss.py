"""Threshold quantum secret sharing built on even-party AME states.

A 2m-party AME state with one party singled out as the dealer yields an
((m, 2m-1)) threshold scheme: projecting the dealer onto each |i> gives d
orthonormal basis states on the remaining 2m-1 players, a secret
sum a_i |i> is encoded as sum a_i |basis_i>, any m players can rotate the
secret onto one of their qudits, and any m-1 players see a reduced state
independent of the secret.  The construction runs in both directions:
gluing a fresh dealer qudit onto the basis states of a valid scheme
rebuilds an AME state.

Secrets are single-qudit :class:`~amekit.core.PureState` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .ame import CertificationError, certify_ame
from .core import (
    TOL_ENT,
    TOL_NORM,
    BellOutcome,
    DensityMatrix,
    PureState,
    _front_matrix,
    apply_on_parties,
    basis_state,
    bell_correction,
    partial_trace,
    permute_parties,
    random_state,
    tensor_product,
    trace_distance,
)
from .teleport import _Tagged


class InvalidSchemeError(ValueError):
    """Scheme data violates an exact sharing requirement."""

    def __init__(self, message: str, deviation: float | None = None):
        if deviation is not None:
            message = f"{message} (deviation {deviation:.3e})"
        super().__init__(message)
        self.deviation = deviation


@dataclass(frozen=True, eq=False)
class DealerOrigin:
    """The AME state and dealer index a scheme was derived from.

    The state is None for schemes loaded from disk, where only the dealer
    position survives serialization.
    """

    state: PureState | None
    dealer: int


@dataclass(frozen=True, eq=False)
class QssScheme:
    """((m, 2m-1)) threshold scheme with share and secret dimension d.

    ``basis_states`` are the d orthonormal encoded images of the secret
    basis; ``players`` are the share positions 0..2m-2 those states live on.
    """

    m: int
    d: int
    players: tuple
    basis_states: tuple
    dealer_origin: DealerOrigin | None = None


def make_scheme(
    basis_states: Sequence[PureState],
    dealer_origin: DealerOrigin | None = None,
    validate: bool = True,
) -> QssScheme:
    """Assemble and check a scheme from its encoded basis states.

    Orthonormality of the basis states is always verified.  With
    ``validate`` (the default) every m-player subset is checked for exact
    recoverability and every (m-1)-player subset for secrecy; pass
    ``validate=False`` to defer those sweeps for larger instances.
    """
    basis_states = tuple(basis_states)
    if not basis_states:
        raise InvalidSchemeError("a scheme needs at least one basis state")
    d, n = basis_states[0].d, basis_states[0].n
    if len(basis_states) != d:
        raise InvalidSchemeError(f"need d={d} basis states, got {len(basis_states)}")
    if any(s.d != d or s.n != n for s in basis_states):
        raise InvalidSchemeError("basis states must share one party count and dimension")
    if n % 2 == 0:
        raise InvalidSchemeError(f"player count must be odd (2m-1), got {n}")
    m = (n + 1) // 2
    stacked = np.stack([s.amplitudes for s in basis_states])
    gram = stacked.conj() @ stacked.T
    deviation = float(np.max(np.abs(gram - np.eye(d))))
    if deviation > TOL_NORM:
        raise InvalidSchemeError("basis states are not orthonormal", deviation)
    scheme = QssScheme(
        m=m, d=d, players=tuple(range(n)), basis_states=basis_states, dealer_origin=dealer_origin
    )
    if validate:
        validate_scheme(scheme)
    return scheme


def scheme_from_ame(ame: PureState, dealer: int, validate: bool = True) -> QssScheme:
    """Derive the ((m, 2m-1)) scheme whose basis states are the rescaled
    projections of the dealer party onto each |i>."""
    if ame.n % 2:
        raise ValueError(f"need an even number of parties, got {ame.n}")
    if not 0 <= dealer < ame.n:
        raise ValueError(f"dealer index {dealer} out of range")
    report = certify_ame(ame)
    if not report.is_ame:
        raise CertificationError(
            f"input failed AME({ame.n},{ame.d}) certification "
            f"(worst deficit {report.worst_entropy_deficit:.3e} bits)",
            report,
        )
    mat, _ = _front_matrix(ame, (dealer,))
    rows = math.sqrt(ame.d) * mat
    for i in range(ame.d):
        if abs(np.linalg.norm(rows[i]) - 1.0) > TOL_NORM:
            raise CertificationError(
                f"dealer projection onto |{i}> is not unit norm; certification inconsistent"
            )
    basis_states = tuple(PureState(ame.n - 1, ame.d, rows[i]) for i in range(ame.d))
    return make_scheme(basis_states, DealerOrigin(ame, dealer), validate=validate)


def encode_secret(scheme: QssScheme, secret: PureState) -> PureState:
    """Map sum a_i |i> to sum a_i |basis_i> on the 2m-1 players."""
    if secret.n != 1 or secret.d != scheme.d:
        raise ValueError(f"secret must be a single qudit of dimension {scheme.d}")
    amps = sum(
        secret.amplitudes[i] * scheme.basis_states[i].amplitudes for i in range(scheme.d)
    )
    return PureState(2 * scheme.m - 1, scheme.d, amps)


def _recovery_branches(scheme: QssScheme, authorized: tuple) -> np.ndarray:
    """Branch vectors phi(k, i) on the authorized parties, stacked as rows
    indexed by (unauthorized labels k, secret index i)."""
    d, m = scheme.d, scheme.m
    unauthorized = [p for p in scheme.players if p not in set(authorized)]
    rows = np.zeros((d**m, d**m), dtype=np.complex128)
    scale = math.sqrt(d ** (m - 1))
    for i, basis in enumerate(scheme.basis_states):
        mat, rest = _front_matrix(basis, unauthorized)
        perm = [rest.index(p) for p in authorized]
        branches = (
            mat.reshape((d ** (m - 1),) + (d,) * m)
            .transpose((0, *[1 + q for q in perm]))
            .reshape(d ** (m - 1), -1)
        )
        rows[i::d] = scale * branches  # row k*d + i holds phi(k, i)
    return rows


def build_recovery_unitary(scheme: QssScheme, authorized: Sequence[int]) -> np.ndarray:
    """Joint unitary for an authorized set of m players.

    Acting on the authorized parties in the order given, it rotates every
    encoded secret onto the last of them and decouples the rest; it exists
    exactly when the branch vectors phi(k, i) are orthonormal, which is the
    recoverability condition of the scheme.
    """
    authorized = tuple(int(p) for p in authorized)
    if len(authorized) != scheme.m or len(set(authorized)) != scheme.m:
        raise ValueError(f"authorized set must contain exactly m={scheme.m} distinct players")
    if any(p not in scheme.players for p in authorized):
        raise ValueError(f"unknown player in {authorized}")
    branches = _recovery_branches(scheme, authorized)
    gram = branches.conj() @ branches.T
    deviation = float(np.max(np.abs(gram - np.eye(branches.shape[0]))))
    if deviation > TOL_NORM:
        raise InvalidSchemeError(
            f"branch states for authorized set {authorized} are not orthonormal",
            deviation,
        )
    return branches.conj()


def recover_secret(
    scheme: QssScheme,
    encoded: PureState,
    authorized: Sequence[int],
    outcome: BellOutcome | None = None,
) -> DensityMatrix:
    """Reduced state of the designated output qudit after joint recovery.

    When the encoding came from a dealer measurement with a known Bell
    outcome, pass it to apply the matching correction on the output qudit.
    """
    authorized = tuple(int(p) for p in authorized)
    unitary = build_recovery_unitary(scheme, authorized)
    state = apply_on_parties(encoded, unitary, authorized)
    out_party = authorized[-1]
    if outcome is not None:
        state = apply_on_parties(state, bell_correction(scheme.d, outcome).matrix(), [out_party])
    return partial_trace(state, [out_party])


def default_probe_secrets(d: int, seed: int = 7) -> list:
    """The d basis secrets, the uniform superposition, and one seeded
    random secret; a spanning set for secrecy checks."""
    probes = [basis_state([i], d) for i in range(d)]
    probes.append(PureState(1, d, np.full(d, 1.0 / math.sqrt(d))))
    probes.append(random_state(1, d, seed))
    return probes


@dataclass(frozen=True)
class SecurityReport:
    """Worst-case leakage numbers for one unauthorized set.

    ``max_trace_distance`` is the largest distance between reduced states
    of any two probe encodings; ``max_deviation_from_uniform`` the largest
    distance of any reduced state from the maximally mixed one.
    """

    max_trace_distance: float
    max_deviation_from_uniform: float


def security_check(
    scheme: QssScheme,
    unauthorized: Sequence[int],
    probe_secrets: Sequence[PureState] | None = None,
) -> SecurityReport:
    """Verify an unauthorized set learns nothing about the secret."""
    unauthorized = tuple(int(p) for p in unauthorized)
    if len(unauthorized) > scheme.m - 1:
        raise ValueError(
            f"unauthorized set may have at most m-1 = {scheme.m - 1} players, "
            f"got {len(unauthorized)}"
        )
    if any(p not in scheme.players for p in unauthorized):
        raise ValueError(f"unknown player in {unauthorized}")
    if not unauthorized:
        return SecurityReport(0.0, 0.0)
    if probe_secrets is None:
        probe_secrets = default_probe_secrets(scheme.d)
    reduced = [
        partial_trace(encode_secret(scheme, secret), unauthorized) for secret in probe_secrets
    ]
    dim = scheme.d ** len(unauthorized)
    uniform = DensityMatrix(np.eye(dim) / dim)
    max_pair = max(
        (trace_distance(x, y) for x, y in combinations(reduced, 2)),
        default=0.0,
    )
    max_uniform = max(trace_distance(rho, uniform) for rho in reduced)
    return SecurityReport(max_pair, max_uniform)


def validate_scheme(scheme: QssScheme, probe_secrets: Sequence[PureState] | None = None) -> None:
    """Exhaustively check recoverability and secrecy; raises on failure."""
    for authorized in combinations(scheme.players, scheme.m):
        build_recovery_unitary(scheme, authorized)
    for unauthorized in combinations(scheme.players, scheme.m - 1):
        report = security_check(scheme, unauthorized, probe_secrets)
        if report.max_trace_distance > TOL_ENT or report.max_deviation_from_uniform > TOL_ENT:
            raise InvalidSchemeError(
                f"unauthorized set {unauthorized} leaks",
                max(report.max_trace_distance, report.max_deviation_from_uniform),
            )


def share_via_dealer_measurement(
    ame: PureState,
    dealer: int,
    secret: PureState,
    forced_outcome: BellOutcome | None = None,
    rng_seed: int | None = None,
):
    """Encode by measuring first: the dealer Bell-measures the secret qudit
    against her own share, imprinting the secret on the residual state.

    Returns (outcome, residual state on the 2m-1 remaining parties).  For
    every outcome the residual equals the scheme encoding of a known
    shift/phase modification of the secret, so recovery with the matching
    correction returns the original; outcome (0, 0) needs no correction.
    """
    if ame.n % 2:
        raise ValueError(f"need an even number of parties, got {ame.n}")
    if secret.n != 1 or secret.d != ame.d:
        raise ValueError(f"secret must be a single qudit of dimension {ame.d}")
    report = certify_ame(ame)
    if not report.is_ame:
        raise CertificationError(
            f"input failed AME({ame.n},{ame.d}) certification "
            f"(worst deficit {report.worst_entropy_deficit:.3e} bits)",
            report,
        )
    if forced_outcome is None and rng_seed is None:
        raise ValueError("provide forced_outcome or an explicit rng_seed")
    rng = np.random.default_rng(rng_seed) if forced_outcome is None else None
    sys = _Tagged(
        tensor_product(secret, ame),
        [("secret", 0)] + [("share", p) for p in range(ame.n)],
    )
    outcome, _ = sys.measure_bell([("secret", 0), ("share", dealer)], forced_outcome, rng)
    residual = sys.extract([("share", p) for p in range(ame.n) if p != dealer])
    return outcome, residual


def ame_from_scheme(scheme: QssScheme, validate: bool = True) -> PureState:
    """Glue a fresh dealer qudit onto the basis states, rebuilding the
    2m-party AME state (1/sqrt d) sum_i |i>|basis_i>.

    The dealer qudit is inserted at the position recorded in
    ``dealer_origin`` (position 0 otherwise), so deriving a scheme and
    rebuilding is the identity.  The output is certified, not assumed.
    """
    if validate:
        validate_scheme(scheme)
    d = scheme.d
    n = 2 * scheme.m - 1
    amps = np.concatenate([s.amplitudes for s in scheme.basis_states]) / math.sqrt(d)
    state = PureState(n + 1, d, amps)
    pos = scheme.dealer_origin.dealer if scheme.dealer_origin is not None else 0
    if pos:
        order = list(range(1, pos + 1)) + [0] + list(range(pos + 1, n + 1))
        state = permute_parties(state, order)
    report = certify_ame(state)
    if not report.is_ame:
        raise CertificationError(
            f"rebuilt state failed AME({n + 1},{d}) certification "
            f"(worst deficit {report.worst_entropy_deficit:.3e} bits)",
            report,
        )
    return state

"""Plain-text serialization for states, generator matrices, schemes and reports.

State file grammar: line 1 holds ``n d``, followed by exactly d**n lines
``re im`` in the fixed big-endian index order.  Reals are written with
full round-trip precision, so write-then-read reproduces amplitudes
bit-exactly.  Generator files hold ``d n k`` then k rows of n integers.
Scheme files hold ``qss m d``, an optional ``dealer i`` line, then one
``basis i`` block per basis state, each a state-file body.
"""

from __future__ import annotations

import json
from typing import Sequence

import numpy as np

from .core import PureState
from .ame import MdsCode
from .qss import DealerOrigin, QssScheme, make_scheme


class ParseError(ValueError):
    """Malformed input file; carries the offending location."""

    def __init__(self, path: str, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


def format_state(state: PureState) -> str:
    lines = [f"{state.n} {state.d}"]
    lines.extend(f"{amp.real!r} {amp.imag!r}" for amp in state.amplitudes)
    return "\n".join(lines) + "\n"


def write_state(state: PureState, path: str) -> None:
    with open(path, "w") as handle:
        handle.write(format_state(state))


def _parse_state_lines(lines: Sequence[str], path: str, start: int) -> tuple:
    """Parse one state block starting at ``lines[start]``.

    Returns (state, next line index).  Line numbers in errors are 1-based.
    """
    if start >= len(lines):
        raise ParseError(path, start + 1, "expected a state header line 'n d'")
    header = lines[start].split()
    if len(header) != 2:
        raise ParseError(path, start + 1, f"expected 'n d', got {lines[start]!r}")
    try:
        n, d = int(header[0]), int(header[1])
    except ValueError:
        raise ParseError(path, start + 1, f"non-integer state header {lines[start]!r}")
    count = d**n
    if len(lines) - start - 1 < count:
        raise ParseError(
            path, len(lines), f"state needs {count} amplitude lines, found {len(lines) - start - 1}"
        )
    amps = np.empty(count, dtype=np.complex128)
    for j in range(count):
        row = lines[start + 1 + j].split()
        if len(row) != 2:
            raise ParseError(
                path, start + 2 + j, f"expected 're im', got {lines[start + 1 + j]!r}"
            )
        try:
            amps[j] = complex(float(row[0]), float(row[1]))
        except ValueError:
            raise ParseError(path, start + 2 + j, f"non-numeric amplitude {lines[start + 1 + j]!r}")
    try:
        state = PureState(n, d, amps)
    except ValueError as exc:
        raise ParseError(path, start + 1, str(exc))
    return state, start + 1 + count


def _read_lines(path: str) -> list:
    with open(path) as handle:
        return [line.rstrip("\n") for line in handle if line.strip()]


def read_state(path: str) -> PureState:
    lines = _read_lines(path)
    state, end = _parse_state_lines(lines, path, 0)
    if end != len(lines):
        raise ParseError(path, end + 1, f"unexpected trailing content {lines[end]!r}")
    return state


def write_mds_code(code: MdsCode, path: str) -> None:
    rows = [f"{code.d} {code.n} {code.k}"]
    rows.extend(" ".join(str(int(x)) for x in row) for row in code.generator)
    with open(path, "w") as handle:
        handle.write("\n".join(rows) + "\n")


def read_mds_code(path: str) -> MdsCode:
    lines = _read_lines(path)
    if not lines:
        raise ParseError(path, 1, "expected a header line 'd n k'")
    header = lines[0].split()
    if len(header) != 3:
        raise ParseError(path, 1, f"expected 'd n k', got {lines[0]!r}")
    try:
        d, n, k = (int(x) for x in header)
    except ValueError:
        raise ParseError(path, 1, f"non-integer header {lines[0]!r}")
    if len(lines) - 1 != k:
        raise ParseError(path, len(lines), f"expected {k} generator rows, found {len(lines) - 1}")
    generator = np.zeros((k, n), dtype=np.int64)
    for i in range(k):
        row = lines[1 + i].split()
        if len(row) != n:
            raise ParseError(path, 2 + i, f"expected {n} entries, got {len(row)}")
        try:
            generator[i] = [int(x) for x in row]
        except ValueError:
            raise ParseError(path, 2 + i, f"non-integer entry in {lines[1 + i]!r}")
    try:
        return MdsCode(d=d, n=n, k=k, generator=generator)
    except ValueError as exc:
        raise ParseError(path, 1, str(exc))


def write_scheme(scheme: QssScheme, path: str) -> None:
    chunks = [f"qss {scheme.m} {scheme.d}"]
    if scheme.dealer_origin is not None:
        chunks.append(f"dealer {scheme.dealer_origin.dealer}")
    for i, basis in enumerate(scheme.basis_states):
        chunks.append(f"basis {i}")
        chunks.append(format_state(basis).rstrip("\n"))
    with open(path, "w") as handle:
        handle.write("\n".join(chunks) + "\n")


def read_scheme(path: str, validate: bool = True) -> QssScheme:
    lines = _read_lines(path)
    if not lines or lines[0].split()[:1] != ["qss"]:
        raise ParseError(path, 1, "expected a scheme header line 'qss m d'")
    header = lines[0].split()
    if len(header) != 3:
        raise ParseError(path, 1, f"expected 'qss m d', got {lines[0]!r}")
    try:
        m, d = int(header[1]), int(header[2])
    except ValueError:
        raise ParseError(path, 1, f"non-integer scheme header {lines[0]!r}")
    cursor = 1
    dealer = None
    if cursor < len(lines) and lines[cursor].startswith("dealer"):
        row = lines[cursor].split()
        if len(row) != 2:
            raise ParseError(path, cursor + 1, f"expected 'dealer i', got {lines[cursor]!r}")
        dealer = int(row[1])
        cursor += 1
    basis_states = []
    for i in range(d):
        if cursor >= len(lines) or lines[cursor].split() != ["basis", str(i)]:
            raise ParseError(path, cursor + 1, f"expected 'basis {i}' block")
        state, cursor = _parse_state_lines(lines, path, cursor + 1)
        if state.n != 2 * m - 1 or state.d != d:
            raise ParseError(path, cursor, f"basis {i} has wrong shape for an ((" f"{m},{2 * m - 1})) scheme")
        basis_states.append(state)
    if cursor != len(lines):
        raise ParseError(path, cursor + 1, f"unexpected trailing content {lines[cursor]!r}")
    origin = DealerOrigin(None, dealer) if dealer is not None else None
    return make_scheme(basis_states, dealer_origin=origin, validate=validate)


def report_json(report: dict) -> str:
    """Deterministic JSON rendering: sorted keys, fixed indentation."""
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report: dict, path: str) -> None:
    with open(path, "w") as handle:
        handle.write(report_json(report))

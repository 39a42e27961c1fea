"""Gate-level circuit IR: parsing, dependency analysis and time slicing.

Program order defines data dependencies: a gate depends on the most recent
earlier gate acting on each of its operand qubits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class CircuitError(ValueError):
    """Raised for malformed circuit text or invalid gates."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Kind(str, enum.Enum):
    I = "i"
    X = "x"
    Y = "y"
    Z = "z"
    H = "h"
    S = "s"
    T = "t"
    CNOT = "cnot"
    SWAP = "swap"
    CZ = "cz"
    R = "r"
    XX = "xx"

    @property
    def arity(self) -> int:
        return 2 if self in _TWO_QUBIT else 1

    @property
    def n_params(self) -> int:
        return _N_PARAMS.get(self, 0)

    @property
    def native(self) -> bool:
        return self in NATIVE_KINDS


_TWO_QUBIT = frozenset({Kind.CNOT, Kind.SWAP, Kind.CZ, Kind.XX})
_N_PARAMS = {Kind.R: 2, Kind.XX: 1}
NATIVE_KINDS = frozenset({Kind.R, Kind.XX})

_REJECTED = {"measure", "m", "reset", "barrier", "if", "creg", "c_if"}


@dataclass(frozen=True)
class Gate:
    """One gate application.

    ``params`` holds (theta, phi) for R and (chi,) for XX, in radians.
    ``outputs`` defaults to ``operands``; a gate whose outputs leave its
    operand set is *mismatched* and is kept, not rejected.
    """

    id: int
    kind: Kind
    operands: tuple[int, ...]
    params: tuple[float, ...] = ()
    outputs: tuple[int, ...] | None = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "operands", tuple(int(q) for q in self.operands))
        object.__setattr__(self, "params", tuple(float(a) for a in self.params))
        if self.outputs is None:
            object.__setattr__(self, "outputs", self.operands)
        else:
            object.__setattr__(self, "outputs", tuple(int(q) for q in self.outputs))
        if len(self.operands) != kind.arity:
            raise CircuitError(f"{kind.value} takes {kind.arity} operand(s), got {len(self.operands)}")
        if len(set(self.operands)) != len(self.operands):
            raise CircuitError(f"duplicate operand in {kind.value} {self.operands}")
        if len(self.params) != kind.n_params:
            raise CircuitError(f"{kind.value} takes {kind.n_params} angle(s), got {len(self.params)}")
        if not all(math.isfinite(a) for a in self.params):
            raise CircuitError(f"non-finite angle in {kind.value}")
        if len(set(self.outputs)) != len(self.outputs):
            raise CircuitError(f"duplicate output location in {kind.value}")

    @property
    def mismatched(self) -> bool:
        return not set(self.outputs) <= set(self.operands)

    @property
    def two_qubit(self) -> bool:
        return self.kind.arity == 2

    def with_id(self, gid: int) -> Gate:
        return Gate(gid, self.kind, self.operands, self.params, self.outputs)

    def __str__(self) -> str:
        parts = [self.kind.value, *map(str, self.operands), *map(repr, self.params)]
        if self.outputs != self.operands:
            parts += ["->", *map(str, self.outputs)]
        return " ".join(parts)


@dataclass(frozen=True)
class Circuit:
    width: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.width < 1:
            raise CircuitError(f"width must be >= 1, got {self.width}")
        for i, g in enumerate(self.gates):
            if g.id != i:
                raise CircuitError(f"gate ids must be dense from 0; position {i} has id {g.id}")
            for q in (*g.operands, *g.outputs):
                if not 0 <= q < self.width:
                    raise CircuitError(f"qubit {q} out of range [0, {self.width}) in gate {g.id}")

    @classmethod
    def from_gates(cls, width: int, gates: Iterable[Gate | tuple]) -> Circuit:
        """Build a circuit renumbering ids; tuples are ``(kind, operands, params)``."""
        out = []
        for i, g in enumerate(gates):
            if isinstance(g, Gate):
                out.append(g.with_id(i))
            else:
                kind, operands, *rest = g
                out.append(Gate(i, Kind(kind), tuple(operands), tuple(rest[0]) if rest else ()))
        return cls(width, tuple(out))

    def __len__(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class DependencyDag:
    n_gates: int
    preds: tuple[frozenset[int], ...]
    succs: tuple[frozenset[int], ...] = field(repr=False)

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((p, h) for h, ps in enumerate(self.preds) for p in ps)

    def is_topological(self, order: Sequence[int]) -> bool:
        pos = {g: i for i, g in enumerate(order)}
        if len(pos) != self.n_gates or set(pos) != set(range(self.n_gates)):
            return False
        return all(pos[p] < pos[h] for p, h in self.edges)


@dataclass(frozen=True)
class TimeSlicing:
    slices: tuple[frozenset[int], ...]
    level: tuple[int, ...]  # 0-based slice index per gate id

    @property
    def depth(self) -> int:
        return len(self.slices)


def parse_circuit(text: str) -> Circuit:
    width = None
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0].lower()
        if width is None:
            if head != "qubits" or len(tokens) != 2:
                raise CircuitError("expected 'qubits N' header", lineno)
            width = _int(tokens[1], lineno)
            if width < 1:
                raise CircuitError("qubit count must be >= 1", lineno)
            continue
        if head in _REJECTED:
            raise CircuitError(f"'{head}' is not supported: circuits are unitary-only", lineno)
        try:
            kind = Kind(head)
        except ValueError:
            raise CircuitError(f"unknown gate '{tokens[0]}'", lineno) from None
        outputs = None
        if "->" in tokens:
            cut = tokens.index("->")
            outputs = tuple(_int(t, lineno) for t in tokens[cut + 1:])
            if not outputs:
                raise CircuitError("empty output list after '->'", lineno)
            tokens = tokens[:cut]
        args = tokens[1:]
        if len(args) != kind.arity + kind.n_params:
            raise CircuitError(
                f"{kind.value} expects {kind.arity} qubit(s) and {kind.n_params} angle(s)", lineno)
        operands = tuple(_int(t, lineno) for t in args[:kind.arity])
        params = tuple(_float(t, lineno) for t in args[kind.arity:])
        for q in (*operands, *(outputs or ())):
            if not 0 <= q < width:
                raise CircuitError(f"qubit {q} out of range [0, {width})", lineno)
        try:
            gates.append(Gate(len(gates), kind, operands, params, outputs))
        except CircuitError as exc:
            raise CircuitError(str(exc), lineno) from None
    if width is None:
        raise CircuitError("missing 'qubits N' header")
    return Circuit(width, tuple(gates))


def format_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.width}"]
    lines += [str(g) for g in c.gates]
    return "\n".join(lines) + "\n"


def _int(tok: str, lineno: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise CircuitError(f"expected integer, got '{tok}'", lineno) from None


def _float(tok: str, lineno: int) -> float:
    try:
        value = float(tok)
    except ValueError:
        raise CircuitError(f"expected angle, got '{tok}'", lineno) from None
    if not math.isfinite(value):
        raise CircuitError(f"non-finite angle '{tok}'", lineno)
    return value


def dependency_dag(c: Circuit) -> DependencyDag:
    last: dict[int, int] = {}
    preds: list[set[int]] = []
    succs: list[set[int]] = [set() for _ in c.gates]
    for g in c.gates:
        ps = {last[q] for q in g.operands if q in last}
        preds.append(ps)
        for p in ps:
            succs[p].add(g.id)
        for q in g.operands:
            last[q] = g.id
    return DependencyDag(len(c.gates), tuple(map(frozenset, preds)), tuple(map(frozenset, succs)))


def time_slices(c: Circuit) -> TimeSlicing:
    # ASAP leveling; program order is already topological.
    dag = dependency_dag(c)
    level = []
    for g in c.gates:
        level.append(1 + max((level[p] for p in dag.preds[g.id]), default=-1))
    depth = max(level, default=-1) + 1
    slices = [set() for _ in range(depth)]
    for gid, lv in enumerate(level):
        slices[lv].add(gid)
    return TimeSlicing(tuple(map(frozenset, slices)), tuple(level))


def circuit_stats(c: Circuit) -> tuple[int, int, int]:
    return c.width, time_slices(c).depth, len(c.gates)

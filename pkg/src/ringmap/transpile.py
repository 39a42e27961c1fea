"""Rewrite standard gates into the native set {R(theta, phi), XX(chi)}.

Every rule in the table is checked against the source gate's matrix when
this module is imported; a wrong rule fails fast.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .circuit import Circuit, CircuitError, Gate, Kind, NATIVE_KINDS, time_slices
from .verify import gate_unitary, max_deviation, sequence_unitary

PI = math.pi
RULE_TOLERANCE = 1e-12


class TranspileError(ValueError):
    pass


@dataclass(frozen=True)
class NativeCircuit(Circuit):
    """A circuit over R and XX only, with native id -> source id provenance."""

    provenance: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        super().__post_init__()
        bad = [g.id for g in self.gates if g.kind not in NATIVE_KINDS]
        if bad:
            raise TranspileError(f"non-native gates {bad} in native circuit")
        prov = dict(self.provenance) or {g.id: g.id for g in self.gates}
        if set(prov) != {g.id for g in self.gates}:
            raise TranspileError("provenance must cover every native gate")
        object.__setattr__(self, "provenance", MappingProxyType(prov))


# Template entries: (kind, operand positions, angles). Time order, first
# entry applied first. Positions index into the source gate's operands.
Template = tuple[tuple[Kind, tuple[int, ...], tuple[float, ...]], ...]


def _rz(pos: int, lam: float) -> Template:
    # R(pi, phi2) R(pi, phi1) = -Rz(2 (phi2 - phi1))
    return ((Kind.R, (pos,), (PI, 0.0)), (Kind.R, (pos,), (PI, lam / 2)))


def _h(pos: int) -> Template:
    return ((Kind.R, (pos,), (PI / 2, PI / 2)), (Kind.R, (pos,), (PI, 0.0)))


def _cnot(c: int, t: int) -> Template:
    return (
        (Kind.R, (c,), (PI / 2, PI / 2)),
        (Kind.XX, (c, t), (PI / 4,)),
        (Kind.R, (c,), (-PI / 2, 0.0)),
        (Kind.R, (t,), (-PI / 2, 0.0)),
        (Kind.R, (c,), (-PI / 2, PI / 2)),
    )


@dataclass(frozen=True)
class DecompositionRule:
    source: Kind
    template: Template

    def expand(self, g: Gate) -> list[Gate]:
        return [Gate(0, kind, tuple(g.operands[p] for p in pos), angles)
                for kind, pos, angles in self.template]


RULES: Mapping[Kind, DecompositionRule] = MappingProxyType({
    r.source: r for r in (
        DecompositionRule(Kind.I, ()),
        DecompositionRule(Kind.X, ((Kind.R, (0,), (PI, 0.0)),)),
        DecompositionRule(Kind.Y, ((Kind.R, (0,), (PI, PI / 2)),)),
        DecompositionRule(Kind.Z, _rz(0, PI)),
        DecompositionRule(Kind.S, _rz(0, PI / 2)),
        DecompositionRule(Kind.T, _rz(0, PI / 4)),
        DecompositionRule(Kind.H, _h(0)),
        DecompositionRule(Kind.CNOT, _cnot(0, 1)),
        DecompositionRule(Kind.CZ, _h(1) + _cnot(0, 1) + _h(1)),
        DecompositionRule(Kind.SWAP, _cnot(0, 1) + _cnot(1, 0) + _cnot(0, 1)),
    )
})


def certify_rules(tol: float = RULE_TOLERANCE) -> dict[Kind, float]:
    """Return the phase-quotient deviation of every rule; raise if any exceeds ``tol``."""
    deviations = {}
    for kind, rule in RULES.items():
        src = Gate(0, kind, tuple(range(kind.arity)))
        n = kind.arity
        dev = max_deviation(sequence_unitary(rule.expand(src), n), gate_unitary(src, n))
        if dev > tol:
            raise TranspileError(f"decomposition rule for {kind.name} is wrong (deviation {dev:.3g})")
        deviations[kind] = dev
    return deviations


certify_rules()


def decompose(g: Gate) -> list[Gate]:
    """Native gate sequence for ``g``; ids are placeholders (0)."""
    if g.kind in NATIVE_KINDS:
        return [Gate(0, g.kind, g.operands, g.params, g.outputs)]
    if g.mismatched:
        raise TranspileError(
            f"gate {g.id} ({g.kind.name}) declares outputs {g.outputs} outside its operands; "
            "only native gates may carry mismatched outputs")
    try:
        rule = RULES[g.kind]
    except KeyError:
        raise TranspileError(f"no decomposition rule for {g.kind!r}") from None
    return rule.expand(g)


def transpile(c: Circuit) -> NativeCircuit:
    gates: list[Gate] = []
    provenance: dict[int, int] = {}
    for g in c.gates:
        for ng in decompose(g):
            provenance[len(gates)] = g.id
            gates.append(ng.with_id(len(gates)))
    return NativeCircuit(c.width, tuple(gates), provenance)


def native_stats(nc: NativeCircuit) -> tuple[int, int, dict[str, int]]:
    counts = Counter(g.kind.name for g in nc.gates)
    return nc.width, time_slices(nc).depth, dict(sorted(counts.items()))


def parse_native(text: str) -> NativeCircuit:
    from .circuit import parse_circuit

    c = parse_circuit(text)
    try:
        return NativeCircuit(c.width, c.gates)
    except TranspileError as exc:
        raise CircuitError(str(exc)) from None

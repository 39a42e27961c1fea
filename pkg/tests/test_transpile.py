import math
import random

import pytest
from hypothesis import given

from ringmap.circuit import Circuit, Gate, Kind, parse_circuit, time_slices
from ringmap.transpile import (RULES, NativeCircuit, TranspileError, certify_rules, decompose,
                               native_stats, parse_native, transpile)
from ringmap.verify import circuit_unitary, gate_unitary, sequence_unitary, unitary_equiv

from support import circuits, random_circuit


def test_every_rule_certified_at_load_tolerance():
    devs = certify_rules()
    assert set(devs) == set(RULES) == {k for k in Kind if not k.native}
    assert max(devs.values()) <= 1e-12


@pytest.mark.parametrize("kind", sorted(RULES, key=lambda k: k.value))
def test_rule_matches_source_matrix(kind):
    g = Gate(0, kind, tuple(range(kind.arity)))
    seq = decompose(g)
    assert all(x.kind.native for x in seq)
    assert {q for x in seq for q in x.operands} <= set(g.operands)
    assert unitary_equiv(sequence_unitary(seq, kind.arity), gate_unitary(g, kind.arity), 1e-12)


def test_rules_on_reversed_and_distant_operands():
    for kind in (Kind.CNOT, Kind.CZ, Kind.SWAP):
        g = Gate(0, kind, (3, 1))
        assert unitary_equiv(sequence_unitary(decompose(g), 4), gate_unitary(g, 4), 1e-12)


def test_native_gates_are_fixed_points():
    r = Gate(4, Kind.R, (0,), (0.3, 1.1))
    assert [(g.kind, g.operands, g.params) for g in decompose(r)] == [(Kind.R, (0,), (0.3, 1.1))]


def test_identity_elides():
    assert decompose(Gate(0, Kind.I, (0,))) == []
    nc = transpile(Circuit.from_gates(2, [("i", (0,)), ("i", (1,))]))
    assert nc.gates == () and nc.width == 2


def test_hadamard_cnot_matches_source():
    c = Circuit.from_gates(2, [("h", (0,)), ("cnot", (0, 1))])
    nc = transpile(c)
    assert unitary_equiv(circuit_unitary(nc), circuit_unitary(c), 1e-9)
    W, D, counts = native_stats(nc)
    assert counts == {"R": 2 + 4, "XX": 1}
    assert W == 2 and D == time_slices(nc).depth == 6


def test_already_native_identity_provenance():
    c = Circuit.from_gates(2, [("r", (0,), (0.1, 0.2)), ("xx", (0, 1), (0.3,)), ("r", (1,), (1.0, 0.0))])
    nc = transpile(c)
    assert [(g.kind, g.operands, g.params) for g in nc.gates] == [(g.kind, g.operands, g.params) for g in c.gates]
    assert dict(nc.provenance) == {0: 0, 1: 1, 2: 2}


def test_native_stats_small_cases():
    assert native_stats(NativeCircuit(3)) == (3, 0, {})
    assert native_stats(transpile(Circuit.from_gates(2, [("xx", (0, 1), (0.4,))]))) == (2, 1, {"XX": 1})


def test_mismatched_standard_gate_rejected():
    c = parse_circuit("qubits 3\ncnot 0 1 -> 1 2\n")
    with pytest.raises(TranspileError):
        transpile(c)


def test_native_circuit_rejects_standard_kinds():
    with pytest.raises(TranspileError):
        NativeCircuit(1, (Gate(0, Kind.H, (0,)),))


def test_parse_native():
    nc = parse_native("qubits 2\nr 0 1.0 0.5\nxx 0 1 0.25\n")
    assert isinstance(nc, NativeCircuit) and len(nc.gates) == 2


@given(circuits())
def test_transpile_idempotent(c):
    once = transpile(c)
    twice = transpile(once)
    assert [(g.kind, g.operands, g.params) for g in twice.gates] == [(g.kind, g.operands, g.params) for g in once.gates]


@given(circuits())
def test_provenance_total_and_per_qubit_monotone(c):
    nc = transpile(c)
    assert set(nc.provenance) == {g.id for g in nc.gates}
    for q in range(c.width):
        src = [nc.provenance[g.id] for g in nc.gates if q in g.operands]
        assert src == sorted(src)
        assert all(q in c.gates[s].operands for s in src)


def test_hundred_random_circuits_equivalent():
    rng = random.Random(20240611)
    for _ in range(100):
        c = random_circuit(rng)
        assert unitary_equiv(circuit_unitary(transpile(c)), circuit_unitary(c), 1e-9)


def test_rotation_angles_survive_extremes():
    c = Circuit.from_gates(1, [("r", (0,), (4 * math.pi, -math.pi)), ("t", (0,)), ("s", (0,))])
    assert unitary_equiv(circuit_unitary(transpile(c)), circuit_unitary(c), 1e-9)

"""Dense state-vector / unitary simulation and schedule replay.

Qubit ordering is little-endian: basis index ``sum(b_q << q)``, so qubit 0 is
the least significant bit. Two-qubit gate matrices are written in the
textbook operand-major basis ``|b_op0 b_op1>``.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence

import numpy as np

from .circuit import Circuit, Gate, Kind, dependency_dag

if TYPE_CHECKING:
    from .scheduler import Schedule

MAX_UNITARY_QUBITS = 10
MAX_STATE_QUBITS = 12


class ReplayError(ValueError):
    """The schedule is incomplete or violates the circuit's dependencies."""


_S2 = 1 / np.sqrt(2)
_FIXED = {
    Kind.I: np.eye(2, dtype=complex),
    Kind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Kind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Kind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    Kind.H: np.array([[1, 1], [1, -1]], dtype=complex) * _S2,
    Kind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    Kind.T: np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    Kind.CNOT: np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    Kind.CZ: np.diag([1, 1, 1, -1]).astype(complex),
    Kind.SWAP: np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}
_XX = np.kron(_FIXED[Kind.X], _FIXED[Kind.X])


def r_matrix(theta: float, phi: float) -> np.ndarray:
    """Rotation by ``theta`` about the equatorial axis at azimuth ``phi``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * np.exp(-1j * phi) * s],
                     [-1j * np.exp(1j * phi) * s, c]], dtype=complex)


def xx_matrix(chi: float) -> np.ndarray:
    """Ising interaction exp(-i chi X(x)X)."""
    return np.cos(chi) * np.eye(4, dtype=complex) - 1j * np.sin(chi) * _XX


def local_matrix(g: Gate) -> np.ndarray:
    if g.kind is Kind.R:
        return r_matrix(*g.params)
    if g.kind is Kind.XX:
        return xx_matrix(*g.params)
    return _FIXED[g.kind]


def _apply(tensor: np.ndarray, g: Gate, n: int) -> np.ndarray:
    """Apply ``g`` to the leading ``n`` qubit axes of ``tensor``."""
    k = len(g.operands)
    m = local_matrix(g).reshape((2,) * (2 * k))
    axes = [n - 1 - q for q in g.operands]
    out = np.tensordot(m, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _check_operands(g: Gate, n: int) -> None:
    if any(not 0 <= q < n for q in g.operands):
        raise ValueError(f"gate {g} does not fit in {n} qubits")


class StateVector:
    def __init__(self, n: int, amplitudes: np.ndarray | None = None):
        if not 1 <= n <= MAX_STATE_QUBITS:
            raise ValueError(f"state vectors are limited to {MAX_STATE_QUBITS} qubits, got {n}")
        self.n = n
        if amplitudes is None:
            amplitudes = np.zeros(2 ** n, dtype=complex)
            amplitudes[0] = 1
        self.amplitudes = np.asarray(amplitudes, dtype=complex).reshape(2 ** n)

    def apply(self, g: Gate) -> StateVector:
        _check_operands(g, self.n)
        t = _apply(self.amplitudes.reshape((2,) * self.n), g, self.n)
        return StateVector(self.n, t.reshape(-1))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def simulate(c: Circuit, state: StateVector | None = None) -> StateVector:
    state = state or StateVector(c.width)
    for g in c.gates:
        state = state.apply(g)
    return state


def gate_unitary(g: Gate, n: int) -> np.ndarray:
    return sequence_unitary([g], n)


def circuit_unitary(c: Circuit) -> np.ndarray:
    return sequence_unitary(c.gates, c.width)


def sequence_unitary(gates: Sequence[Gate], n: int) -> np.ndarray:
    if n > MAX_UNITARY_QUBITS:
        raise ValueError(f"unitaries are limited to {MAX_UNITARY_QUBITS} qubits, got {n}")
    dim = 2 ** n
    # Trailing axis indexes the input basis column.
    t = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in gates:
        _check_operands(g, n)
        t = _apply(t, g, n)
    return t.reshape(dim, dim)


def max_deviation(a: np.ndarray, b: np.ndarray) -> float:
    """Max-norm distance between ``a`` and ``b`` after removing global phase.

    The phase is fixed by the largest-magnitude entry of ``b``.
    """
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    ratio = a[idx] / b[idx] if b[idx] != 0 else 1.0
    phase = ratio / abs(ratio) if ratio != 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))


def unitary_equiv(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    return max_deviation(a, b) <= tol


def completion_order(s: Schedule, n_gates: int) -> list[int]:
    """Gate ids sorted by completion time, ties by id.

    Raises ReplayError if any gate lacks its full action sequence.
    """
    seen: dict[int, set[int]] = {}
    finish: dict[int, object] = {}
    for a in s.actions:
        seen.setdefault(a.gate_id, set()).add(a.action_index)
        end = a.t + s.action_time_ps
        if a.gate_id not in finish or end > finish[a.gate_id]:
            finish[a.gate_id] = end
    for gid in range(n_gates):
        need = s.actions_required.get(gid)
        if gid not in seen or need is None or seen[gid] != set(range(need)):
            raise ReplayError(f"schedule is incomplete: gate {gid} lacks its full action sequence")
    extra = set(seen) - set(range(n_gates))
    if extra:
        raise ReplayError(f"schedule references unknown gates {sorted(extra)}")
    return sorted(range(n_gates), key=lambda g: (finish[g], g))


def replay(s: Schedule, nc: Circuit) -> tuple[list[int], np.ndarray]:
    order = completion_order(s, len(nc.gates))
    dag = dependency_dag(nc)
    start: dict[int, object] = {}
    end: dict[int, object] = {}
    for a in s.actions:
        start[a.gate_id] = min(start.get(a.gate_id, a.t), a.t)
        end[a.gate_id] = max(end.get(a.gate_id, a.t), a.t + s.action_time_ps)
    for p, h in sorted(dag.edges):
        if start[h] < end[p]:
            raise ReplayError(f"gate {h} starts before its predecessor {p} completes")
    if not dag.is_topological(order):
        raise ReplayError("completion order violates the dependency DAG")
    return order, sequence_unitary([nc.gates[g] for g in order], nc.width)

"""Shared builders for the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

from hypothesis import strategies as st

from ringmap.circuit import Circuit
from ringmap.ring import RingConfig, Window
from ringmap.transpile import NativeCircuit

ONE_QUBIT = ("i", "x", "y", "z", "h", "s", "t")
TWO_QUBIT = ("cnot", "swap", "cz")
ROOT = __import__("pathlib").Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


def bank_line(L: int, G: int = 0, n_windows: int = 8, mode: str = "continuous",
              steps_per_ion: int = 2, lasers: int | None = None, width_ions: int | None = None,
              actions_2q: int = 2) -> RingConfig:
    """Windows one bunch pitch apart, each ``width_ions`` wide (default L).

    An ion crosses one spacing in ``steps_per_ion`` action times, so a window
    of ``L`` ions admits ``L * steps_per_ion`` actions per pass.
    """
    s = 1000
    pitch = L * (1 + G) * s
    width = (width_ions or L) * s
    v = Fraction(s, steps_per_ion * 1000) * 10 ** 6
    windows = [Window(10_000_000 + k * max(pitch, width), width, 1, lasers or L) for k in range(n_windows)]
    return RingConfig(100_000_000, s, v, windows, 1000, 1, actions_2q, 1, mode)


def rect(W: int, D: int) -> NativeCircuit:
    """Uniform rectangular circuit: ``D`` layers of one R gate per qubit."""
    gates = [("r", (q,), (0.1 * d + q, 0.3)) for d in range(D) for q in range(W)]
    return NativeCircuit(W, Circuit.from_gates(W, gates).gates)


def random_circuit(rng: random.Random, max_width: int = 5, max_gates: int = 20,
                   two_qubit_share: float = 0.4) -> Circuit:
    W = rng.randint(1, max_width)
    gates = []
    for _ in range(rng.randint(0, max_gates)):
        if W > 1 and rng.random() < two_qubit_share:
            gates.append((rng.choice(TWO_QUBIT), tuple(rng.sample(range(W), 2))))
        else:
            gates.append((rng.choice(ONE_QUBIT), (rng.randrange(W),)))
    return Circuit.from_gates(W, gates)


angles = st.floats(min_value=-7.0, max_value=7.0, allow_nan=False, allow_infinity=False)


@st.composite
def circuits(draw, max_width: int = 5, max_gates: int = 20, native: bool = False) -> Circuit:
    W = draw(st.integers(1, max_width))
    kinds = ["r", "xx"] if native else list(ONE_QUBIT + TWO_QUBIT) + ["r", "xx"]
    gates = []
    for _ in range(draw(st.integers(0, max_gates))):
        k = draw(st.sampled_from(kinds))
        two = k in TWO_QUBIT or k == "xx"
        if two and W < 2:
            k, two = ("r" if native else "x"), False
        if two:
            a = draw(st.integers(0, W - 1))
            b = draw(st.integers(0, W - 2))
            ops = (a, b + (b >= a))
        else:
            ops = (draw(st.integers(0, W - 1)),)
        params = (draw(angles), draw(angles)) if k == "r" else (draw(angles),) if k == "xx" else ()
        gates.append((k, ops, params))
    return Circuit.from_gates(W, gates)

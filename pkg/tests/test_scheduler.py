import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ringmap.circuit import Circuit, parse_circuit
from ringmap.ring import Window, capacity
from ringmap.scheduler import (InfeasibleCrossBunchError, Mode, RingCapacityError, Schedule, check_schedule,
                               detect_predecessors, measure_WL, partition, ramp_profile, schedule,
                               validate_outputs)
from ringmap.timing import TimingQuery, wl_parallel, wl_serial
from ringmap.transpile import NativeCircuit, transpile
from ringmap.verify import circuit_unitary, replay, unitary_equiv

from support import bank_line, random_circuit, rect


def native(width, gates):
    return NativeCircuit(width, Circuit.from_gates(width, gates).gates)


def boundary_circuit():
    return Circuit.from_gates(4, [("h", (0,)), ("h", (2,)), ("x", (3,)), ("cnot", (1, 2)), ("x", (0,))])


def test_mode_parsing():
    assert Mode.parse("serial") == Mode.serial()
    assert Mode.parse("parallel") == Mode.parallel()
    assert Mode.parse("hybrid:2") == Mode.hybrid(2)
    assert Mode.hybrid(0) == Mode.parallel()
    assert str(Mode.hybrid(3)) == "hybrid:3"
    assert Mode.serial().ramp_passes(4) == 3
    assert Mode.hybrid(9).ramp_passes(4) == 3
    for bad in ("burst", "hybrid:", "hybrid:-1"):
        with pytest.raises(ValueError):
            Mode.parse(bad)


def test_partition_examples():
    nc = native(4, [("xx", (1, 2), (0.1,)), ("xx", (0, 1), (0.1,))])
    p = partition(nc, 2)
    assert [list(p.qubits_in(b)) for b in range(p.bunch_count)] == [[0, 1], [2, 3]]
    assert p.cross_gates == (0,) and p.local_gates == ((1,), ())
    assert partition(nc, 4).cross_gates == ()
    assert partition(rect(400, 1), 100).bunch_count == 4


def test_partition_gap_and_capacity():
    p = partition(rect(6, 1), 2, 3)
    assert p.ion_of == (0, 1, 8, 9, 16, 17)
    cfg = bank_line(2).replace(circumference_nm=20_000, windows=(Window(0, 2000, 1, 2),))
    with pytest.raises(RingCapacityError, match="24 ions"):
        partition(rect(6, 1), 2, 3, cfg=cfg)


@pytest.mark.parametrize("G", [0, 1, 3])
def test_hazard_span(G):
    nc = native(4, [("xx", (1, 2), (0.1,))])
    (h,) = detect_predecessors(partition(nc, 2, G), nc)
    assert h.bunches == (0, 1) and h.span_ions == G * 2 + 1


@pytest.mark.parametrize("L", [2, 3])
def test_hazard_far_bunches(L):
    nc = native(3 * L, [("xx", (0, 3 * L - 1), (0.2,))])
    (h,) = detect_predecessors(partition(nc, L), nc)
    assert h.bunches == (0, 2) and h.span_ions == 3 * L - 1


def test_no_hazards_when_local():
    nc = native(4, [("xx", (0, 1), (0.1,)), ("xx", (2, 3), (0.1,))])
    assert detect_predecessors(partition(nc, 2), nc) == []


def test_output_validation():
    c = parse_circuit("qubits 6\nxx 0 1 0.3\nxx 0 1 0.3 -> 1 0\nxx 0 1 0.3 -> 0 5\n")
    p = partition(transpile(c), 2)
    (v,) = validate_outputs(c, p)
    assert (v.gate_id, v.qubit, v.bunch, v.operand_bunches, v.bunch_distance) == (2, 5, 2, (0,), 2)
    c = parse_circuit("qubits 4\nxx 0 1 0.3 -> 0 2\n")
    assert validate_outputs(c, partition(transpile(c), 2))[0].bunch_distance == 1
    c = parse_circuit("qubits 4\nxx 1 2 0.3 -> 0 3\n")
    assert validate_outputs(c, partition(transpile(c), 2)) == []


def test_single_pass_fits_window():
    cfg = bank_line(3)
    _, dstar = capacity(cfg, two_qubit=False)
    nc = rect(3, dstar)
    s = schedule(nc, cfg, partition(nc, 3, cfg=cfg), Mode.parallel())
    assert s.stats.passes_used == 1
    # Makespan runs from the lead ion's entry to the trailing ion's last action.
    bunch_transit = cfg.travel_ps(cfg.windows[0].width_nm + 2 * cfg.ion_spacing_nm)
    assert s.stats.makespan_ps <= bunch_transit
    assert measure_WL(s, partition(nc, 3)) == 3


@pytest.mark.parametrize("L", [2, 3])
def test_parallel_two_passes(L):
    cfg = bank_line(L)
    _, dstar = capacity(cfg, two_qubit=False)
    nc = rect(4 * L, 2 * dstar)
    p = partition(nc, L, cfg=cfg)
    s = schedule(nc, cfg, p, Mode.parallel())
    assert s.stats.passes_used == 2
    assert measure_WL(s, p) == wl_parallel(TimingQuery(4 * L, 2 * dstar, L, dstar)) == 5 * L


@pytest.mark.parametrize("mode", ["continuous", "block"])
def test_boundary_cnot_deferred_once(mode):
    c = boundary_circuit()
    nc = transpile(c)
    cfg = bank_line(2, G=1, width_ions=4, mode=mode)
    p = partition(nc, 2, 1, cfg=cfg)
    (h,) = detect_predecessors(p, nc)
    s = schedule(nc, cfg, p, Mode.parallel())
    (deferred,) = s.stats.deferred_gates
    assert deferred[0] == h.gate_id and deferred[1] > 0
    assert check_schedule(s, nc, cfg, p) == []
    _, u = replay(s, nc)
    assert unitary_equiv(u, circuit_unitary(c), 1e-9)


def test_span_wider_than_window_is_infeasible():
    nc = transpile(boundary_circuit())
    cfg = bank_line(2, G=1, width_ions=3)
    with pytest.raises(InfeasibleCrossBunchError, match="span of 3"):
        schedule(nc, cfg, partition(nc, 2, 1, cfg=cfg), Mode.parallel())


def test_serial_ramp_is_triangular():
    cfg = bank_line(3)
    _, dstar = capacity(cfg, two_qubit=False)
    nc = rect(12, 10 * dstar)
    p = partition(nc, 3, cfg=cfg)
    s = schedule(nc, cfg, p, Mode.serial())
    assert ramp_profile(s, nc, cfg, p) == [dstar, 2 * dstar, 3 * dstar, 4 * dstar]
    assert check_schedule(s, nc, cfg, p) == []


def test_serial_ramp_caps_at_total_depth():
    cfg = bank_line(2)
    _, dstar = capacity(cfg, two_qubit=False)
    nc = rect(8, 2 * dstar + 1)
    p = partition(nc, 2, cfg=cfg)
    s = schedule(nc, cfg, p, Mode.serial())
    assert ramp_profile(s, nc, cfg, p) == [dstar, 2 * dstar, 2 * dstar + 1, 2 * dstar + 1]


def test_hybrid_is_trapezoidal():
    cfg = bank_line(2)
    _, dstar = capacity(cfg, two_qubit=False)
    nc = rect(8, 10 * dstar)
    p = partition(nc, 2, cfg=cfg)
    s = schedule(nc, cfg, p, Mode.hybrid(1))
    assert ramp_profile(s, nc, cfg, p) == [dstar, 2 * dstar, 2 * dstar, 2 * dstar]


@pytest.mark.parametrize("L", [1, 2, 3])
def test_serial_single_bunch_width(L):
    cfg = bank_line(L)
    _, dstar = capacity(cfg, two_qubit=False)
    for D in (dstar, 2 * dstar, 3 * dstar + 1):
        nc = rect(L, D)
        p = partition(nc, L, cfg=cfg)
        s = schedule(nc, cfg, p, Mode.serial())
        assert measure_WL(s, p) == wl_serial(TimingQuery(L, D, L, dstar))


def test_schedule_round_trips_through_json():
    nc = transpile(boundary_circuit())
    cfg = bank_line(2, G=1, width_ions=4)
    s = schedule(nc, cfg, partition(nc, 2, 1, cfg=cfg), Mode.serial())
    again = Schedule.from_dict(json.loads(json.dumps({k: v for k, v in _plain(s.to_dict()).items()})))
    assert again == s


def _plain(doc):
    from ringmap.report import canonical
    return canonical(doc)


def test_actions_sorted_by_time_bank_laser():
    nc = transpile(boundary_circuit())
    cfg = bank_line(2, G=1, width_ions=4)
    s = schedule(nc, cfg, partition(nc, 2, 1, cfg=cfg), Mode.parallel())
    keys = [(a.t, a.bank, a.laser) for a in s.actions]
    assert keys == sorted(keys)


def test_coherence_limit():
    cfg = bank_line(2)
    _, dstar = capacity(cfg, two_qubit=False)
    nc = rect(2, 3 * dstar)
    p = partition(nc, 2, cfg=cfg)
    s = schedule(nc, cfg, p, Mode.parallel())
    from ringmap.scheduler import SchedulingError
    with pytest.raises(SchedulingError, match="coherence"):
        schedule(nc, cfg.replace(coherence_limit_ps=int(s.stats.makespan_ps) - 1), p, Mode.parallel())
    assert schedule(nc, cfg.replace(coherence_limit_ps=int(s.stats.makespan_ps) + 1), p, Mode.parallel()) == s


def test_check_schedule_flags_tampering():
    nc = transpile(boundary_circuit())
    cfg = bank_line(2, G=1, width_ions=4)
    p = partition(nc, 2, 1, cfg=cfg)
    s = schedule(nc, cfg, p, Mode.parallel())
    a = s.actions[0]
    moved = Schedule((a.__class__(a.t + 10 ** 9, a.bank, a.laser, a.window, a.ions, a.gate_id, a.action_index),)
                     + s.actions[1:], s.stats, s.mode, s.L, s.gap, s.start_ps, s.action_time_ps, s.actions_required)
    assert check_schedule(moved, nc, cfg, p)
    assert check_schedule(Schedule(s.actions[1:], s.stats, s.mode, s.L, s.gap, s.start_ps, s.action_time_ps,
                                   s.actions_required), nc, cfg, p)


def random_case(seed):
    rng = random.Random(seed)
    L = rng.choice([2, 3])
    G = rng.randint(0, 1)
    banks = rng.randint(1, 2)
    lasers = rng.randint(L, 4)
    c = random_circuit(rng, max_width=5, max_gates=12)
    # Every window must hold the widest operand span of the partitioned circuit.
    last_ion = ((c.width - 1) // L) * L * (1 + G) + (c.width - 1) % L
    width = rng.randint(max(lasers, last_ion + 1), 14)
    n_win = rng.randint(1, 4)
    pitch = width + rng.randint(0, 5)
    s = 1000
    cfg = bank_line(L).replace(
        circumference_nm=rng.choice([200, 500]) * s,
        ion_velocity_nm_per_us=Fraction(s, rng.randint(1, 4) * 1000) * 10 ** 6,
        windows=tuple(Window((3 + k * pitch) * s, width * s, banks, lasers) for k in range(n_win)),
        actions_per_2q_gate=rng.randint(1, 3),
        mode=rng.choice(["block", "continuous"]))
    mode = rng.choice([Mode.serial(), Mode.parallel(), Mode.hybrid(1)])
    return cfg, c, L, G, mode


@settings(max_examples=60)
@given(st.integers(0, 2 ** 32))
def test_random_schedules_physically_valid(seed):
    cfg, c, L, G, mode = random_case(seed)
    nc = transpile(c)
    p = partition(nc, L, G, cfg=cfg)
    s = schedule(nc, cfg, p, mode)
    assert check_schedule(s, nc, cfg, p) == []
    _, u = replay(s, nc)
    assert unitary_equiv(u, circuit_unitary(c), 1e-9)
    assert schedule(nc, cfg, p, mode) == s


@settings(max_examples=60)
@given(st.integers(0, 2 ** 32))
def test_continuous_never_later_than_block(seed):
    cfg, c, L, G, mode = random_case(seed)
    # Without laser contention (one bank, every window within a bunch pitch) the
    # continuous feasible set contains the block one at every step.
    cfg = cfg.replace(windows=tuple(Window(w.position_nm, min(w.width_nm, L * (1 + G) * 1000), 1, L)
                                    for w in cfg.windows), actions_per_2q_gate=1)
    nc = transpile(c)
    if any(abs(a - b) >= L * (1 + G) for g in nc.gates if g.two_qubit for a, b in [g.operands]):
        return
    p = partition(nc, L, G, cfg=cfg)
    try:
        block = schedule(nc, cfg.replace(mode="block"), p, mode)
    except InfeasibleCrossBunchError:
        return
    cont = schedule(nc, cfg.replace(mode="continuous"), p, mode)
    for g in range(len(nc.gates)):
        assert cont.gate_window(g)[0] <= block.gate_window(g)[0]

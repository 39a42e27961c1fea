"""Bunch partitioning and laser-action scheduling on a storage ring.

Physical model
--------------
Qubit ``q`` lives on ion ``partition.ion_of[q]``; qubits are grouped into
bunches of ``L`` consecutive slots with ``gap * L`` idle slots between
bunches. Because ions travel toward increasing arc position, the bunch with
the highest qubit indices leads and meets a window first.

Each window offers one or more banks; bank lasers are indexed by the qubit's
slot within its bunch. An action on a set of ions may run in a window over
``[t, t + action_time)`` only while every target ion is inside it.
``continuous`` operation needs just the gate's own ions in view; ``block``
operation also needs the gate's whole bunch in view (cross-bunch gates are
always handled ion by ion).

The mode fixes when each bunch is *engaged*: at ``t0`` the lead ion of bunch
``r`` reaches window 0, where ``r`` is the number of ramp passes (0 for
parallel, ``B - 1`` for serial). Bunches ahead of ``r`` are engaged at
``t0``; bunch ``r - k`` is engaged ``k`` bunch pitches later. An ion only
takes actions in window transits that begin at or after its engagement.

Gates are placed in program order at the earliest feasible start, ties
broken by lowest bank id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .circuit import Circuit, Gate, dependency_dag
from .ring import RingConfig, visibility_intervals


class SchedulingError(RuntimeError):
    """The circuit cannot be scheduled on the given ring."""


class InfeasibleCrossBunchError(SchedulingError):
    pass


class RingCapacityError(SchedulingError):
    pass


@dataclass(frozen=True)
class Mode:
    kind: str
    ramp: int = 0

    def __post_init__(self):
        if self.kind not in ("serial", "parallel", "hybrid"):
            raise ValueError(f"unknown mode {self.kind!r}")
        if self.ramp < 0:
            raise ValueError("hybrid ramp passes must be >= 0")
        if self.kind == "hybrid" and self.ramp == 0:
            object.__setattr__(self, "kind", "parallel")
        if self.kind != "hybrid":
            object.__setattr__(self, "ramp", 0)

    @classmethod
    def serial(cls) -> Mode:
        return cls("serial")

    @classmethod
    def parallel(cls) -> Mode:
        return cls("parallel")

    @classmethod
    def hybrid(cls, ramp: int) -> Mode:
        return cls("hybrid", ramp)

    @classmethod
    def parse(cls, text: str) -> Mode:
        head, _, arg = text.partition(":")
        if head == "hybrid":
            if not arg.isdigit():
                raise ValueError("hybrid mode needs a ramp count, e.g. 'hybrid:2'")
            return cls.hybrid(int(arg))
        if arg:
            raise ValueError(f"mode {head!r} takes no argument")
        return cls(head)

    def ramp_passes(self, bunch_count: int) -> int:
        if self.kind == "serial":
            return bunch_count - 1
        return min(self.ramp, bunch_count - 1)

    def __str__(self) -> str:
        return f"hybrid:{self.ramp}" if self.kind == "hybrid" else self.kind


@dataclass(frozen=True)
class Partition:
    width: int
    L: int
    bunch_count: int
    gap: int
    physical_per_logical: int
    ion_of: tuple[int, ...]
    local_gates: tuple[tuple[int, ...], ...]
    cross_gates: tuple[int, ...]

    @property
    def pitch_ions(self) -> int:
        return self.L * (1 + self.gap) * self.physical_per_logical

    def bunch(self, q: int) -> int:
        return q // self.L

    def slot(self, q: int) -> int:
        return q % self.L

    def qubits_in(self, b: int) -> range:
        return range(b * self.L, min((b + 1) * self.L, self.width))

    def lead_ion(self, b: int) -> int:
        """Ion of the bunch's nominal last slot (first to reach a window)."""
        return b * self.pitch_ions + (self.L - 1) * self.physical_per_logical

    @property
    def slot_of_ion(self) -> dict[int, int]:
        return {ion: self.slot(q) for q, ion in enumerate(self.ion_of)}

    @property
    def ions_required(self) -> int:
        return self.bunch_count * self.pitch_ions


@dataclass(frozen=True)
class Hazard:
    gate_id: int
    bunches: tuple[int, int]
    span_ions: int


@dataclass(frozen=True)
class OutputViolation:
    gate_id: int
    qubit: int
    bunch: int
    operand_bunches: tuple[int, ...]

    @property
    def bunch_distance(self) -> int:
        return min(abs(self.bunch - b) for b in self.operand_bunches)


@dataclass(frozen=True, order=True)
class LaserAction:
    t: Fraction
    bank: int
    laser: int
    window: int
    ions: tuple[int, ...]
    gate_id: int
    action_index: int

    def to_dict(self) -> dict:
        return {"t_ps": self.t, "window": self.window, "bank": self.bank, "laser": self.laser,
                "ions": list(self.ions), "gate_id": self.gate_id, "action_index": self.action_index}

    @classmethod
    def from_dict(cls, d: dict) -> LaserAction:
        return cls(Fraction(d["t_ps"]), int(d["bank"]), int(d["laser"]), int(d["window"]),
                   tuple(int(i) for i in d["ions"]), int(d["gate_id"]), int(d["action_index"]))


@dataclass(frozen=True)
class ScheduleStats:
    makespan_ps: Fraction
    passes_used: int
    measured_wl_qubits: int
    deferred_gates: tuple[tuple[int, Fraction], ...] = ()


@dataclass(frozen=True)
class Schedule:
    actions: tuple[LaserAction, ...]
    stats: ScheduleStats
    mode: str
    L: int
    gap: int
    start_ps: Fraction
    action_time_ps: int
    actions_required: dict[int, int] = field(default_factory=dict)
    physical_per_logical: int = 1

    def gate_window(self, gid: int) -> tuple[Fraction, Fraction]:
        ts = [a.t for a in self.actions if a.gate_id == gid]
        return min(ts), max(ts) + self.action_time_ps

    def header(self) -> dict:
        return {
            "mode": self.mode,
            "L": self.L,
            "G": self.gap,
            "physical_per_logical": self.physical_per_logical,
            "start_ps": self.start_ps,
            "action_time_ps": self.action_time_ps,
            "actions_required": {str(g): k for g, k in sorted(self.actions_required.items())},
            "stats": {
                "makespan_ps": self.stats.makespan_ps,
                "passes_used": self.stats.passes_used,
                "measured_wl_qubits": self.stats.measured_wl_qubits,
                "deferred_gates": [{"gate_id": g, "wait_ps": w} for g, w in self.stats.deferred_gates],
            },
        }

    def to_dict(self) -> dict:
        return {"header": self.header(), "actions": [a.to_dict() for a in self.actions]}

    @classmethod
    def from_dict(cls, d: dict) -> Schedule:
        h = d["header"]
        st = h["stats"]
        stats = ScheduleStats(
            Fraction(st["makespan_ps"]), int(st["passes_used"]), int(st["measured_wl_qubits"]),
            tuple((int(x["gate_id"]), Fraction(x["wait_ps"])) for x in st["deferred_gates"]))
        return cls(
            actions=tuple(sorted(LaserAction.from_dict(a) for a in d["actions"])),
            stats=stats, mode=h["mode"], L=int(h["L"]), gap=int(h["G"]),
            start_ps=Fraction(h["start_ps"]), action_time_ps=int(h["action_time_ps"]),
            actions_required={int(g): int(k) for g, k in h["actions_required"].items()},
            physical_per_logical=int(h.get("physical_per_logical", 1)),
        )


def partition(nc: Circuit, L: int, G: int = 0, *, cfg: RingConfig | None = None,
              physical_per_logical: int | None = None) -> Partition:
    """Group qubits into bunches of ``L``; ``cfg`` supplies ion spacing per qubit and ring capacity."""
    if L < 1:
        raise ValueError("bunch size L must be >= 1")
    if G < 0:
        raise ValueError("gap G must be >= 0")
    ppl = cfg.physical_per_logical if cfg else physical_per_logical or 1
    B = -(-nc.width // L)
    pitch = L * (1 + G) * ppl
    if cfg is not None and B * pitch > cfg.total_ions:
        raise RingCapacityError(
            f"ring too small: {B} bunches x {L} slots x (1 + {G}) x {ppl} ions need "
            f"{B * pitch} ions, ring holds {cfg.total_ions}")
    ion_of = tuple((q // L) * pitch + (q % L) * ppl for q in range(nc.width))
    local: list[list[int]] = [[] for _ in range(B)]
    cross = []
    for g in nc.gates:
        bunches = {q // L for q in g.operands}
        if len(bunches) == 1:
            local[bunches.pop()].append(g.id)
        else:
            cross.append(g.id)
    return Partition(nc.width, L, B, G, ppl, ion_of, tuple(map(tuple, local)), tuple(cross))


def detect_predecessors(p: Partition, nc: Circuit) -> list[Hazard]:
    out = []
    for gid in p.cross_gates:
        g = nc.gates[gid]
        if not g.two_qubit:
            continue
        a, b = g.operands
        ba, bb = sorted((p.bunch(a), p.bunch(b)))
        out.append(Hazard(gid, (ba, bb), abs(p.ion_of[a] - p.ion_of[b])))
    return out


def validate_outputs(c: Circuit, p: Partition) -> list[OutputViolation]:
    out = []
    for g in c.gates:
        if not g.mismatched:
            continue
        reach = tuple(sorted({p.bunch(q) for q in g.operands}))
        for q in g.outputs:
            if p.bunch(q) not in reach:
                out.append(OutputViolation(g.id, q, p.bunch(q), reach))
    return out


def engagement_times(cfg: RingConfig, p: Partition, mode: Mode) -> tuple[Fraction, tuple[Fraction, ...]]:
    """Schedule origin ``t0`` and the engagement time of every qubit's ion."""
    s, C = cfg.ion_spacing_nm, cfg.circumference_nm
    r = mode.ramp_passes(p.bunch_count)
    t0 = cfg.travel_ps((cfg.windows[0].position_nm - p.lead_ion(r) * s) % C)
    pitch_time = cfg.travel_ps(p.pitch_ions * s)
    out = []
    for q, ion in enumerate(p.ion_of):
        b = p.bunch(q)
        out.append(t0 + max(0, r - b) * pitch_time + cfg.travel_ps((p.lead_ion(b) - ion) * s))
    return t0, tuple(out)


def gate_actions(g: Gate, cfg: RingConfig) -> int:
    return cfg.actions_per_2q_gate if g.two_qubit else cfg.actions_per_1q_gate


class _Booking:
    """Busy intervals per (bank, laser)."""

    def __init__(self):
        self.busy: dict[tuple[int, int], list[tuple[Fraction, Fraction]]] = {}

    def conflict_end(self, bank: int, lasers: Iterable[int], t: Fraction, end: Fraction) -> Fraction | None:
        worst = None
        for laser in lasers:
            for a, b in self.busy.get((bank, laser), ()):
                if a < end and t < b and (worst is None or b > worst):
                    worst = b
        return worst

    def book(self, bank: int, lasers: Iterable[int], t: Fraction, end: Fraction) -> None:
        for laser in lasers:
            self.busy.setdefault((bank, laser), []).append((t, end))


def schedule(nc: Circuit, cfg: RingConfig, p: Partition, mode: Mode) -> Schedule:
    if p.width != nc.width:
        raise ValueError("partition does not match circuit width")
    if p.physical_per_logical != cfg.physical_per_logical:
        raise ValueError("partition was built for a different physical_per_logical")
    if p.ions_required > cfg.total_ions:
        raise RingCapacityError(f"partition needs {p.ions_required} ions, ring holds {cfg.total_ions}")
    if all(w.lasers_per_bank < p.L for w in cfg.windows):
        raise SchedulingError(f"no window has a bank of {p.L} lasers")

    s = cfg.ion_spacing_nm
    period = cfg.circumnavigation_ps
    a_time = cfg.action_time_ps
    t0, engage = engagement_times(cfg, p, mode)
    pos = [ion * s for ion in p.ion_of]
    banks_of = [[] for _ in cfg.windows]
    for w, b in cfg.bank_ids():
        banks_of[w].append(b)
    hazards = {h.gate_id for h in detect_predecessors(p, nc)}
    dag = dependency_dag(nc)
    booking = _Booking()

    actions: list[LaserAction] = []
    done: dict[int, Fraction] = {}
    transits: list[set] = [set() for _ in range(nc.width)]
    deferred = []
    required = {}

    for g in nc.gates:
        k = gate_actions(g, cfg)
        required[g.id] = k
        dur = k * a_time
        ready = max([t0, *(done[pr] for pr in dag.preds[g.id])])
        view = list(g.operands)
        if cfg.mode == "block" and g.id not in hazards:
            view = list(p.qubits_in(p.bunch(g.operands[0])))
        lasers = sorted({p.slot(q) for q in g.operands})
        lead = max(view, key=lambda q: pos[q])
        extent = pos[lead] - min(pos[q] for q in view)

        best = None  # (t, bank, window, lead entry)
        reasons = []
        for w_id, w in enumerate(cfg.windows):
            if w.lasers_per_bank <= lasers[-1]:
                reasons.append(f"window {w_id}: bank has {w.lasers_per_bank} lasers, needs slot {lasers[-1]}")
                continue
            slack = cfg.travel_ps(w.width_nm - extent)
            if extent >= w.width_nm or slack < dur:
                reasons.append(
                    f"window {w_id}: {w.width_nm // s} visible ions cannot hold a "
                    f"span of {extent // s} ions for {k} action(s)")
                continue
            found = _earliest_in_window(
                w, w_id, banks_of[w_id], view, lead, extent, lasers, ready, dur,
                pos, engage, cfg, period, booking, best[0] if best else None)
            if found is not None and (best is None or found[:2] < best[:2]):
                best = found
        if best is None:
            msg = "; ".join(reasons)
            if g.id in hazards:
                raise InfeasibleCrossBunchError(
                    f"cross-bunch gate {g.id} ({g.kind.name} on qubits {g.operands}) is infeasible: {msg}")
            raise SchedulingError(f"gate {g.id} cannot be placed: {msg}")

        t, bank, w_id, lead_entry = best
        booking.book(bank, lasers, t, t + dur)
        ions = tuple(p.ion_of[q] for q in g.operands)
        for i in range(k):
            actions.append(LaserAction(t + i * a_time, bank, p.slot(g.operands[0]), w_id, ions, g.id, i))
        done[g.id] = t + dur
        for q in g.operands:
            transits[q].add((w_id, lead_entry + cfg.travel_ps(pos[lead] - pos[q])))
        if g.id in hazards and t > ready:
            deferred.append((g.id, t - ready))
        if cfg.coherence_limit_ps is not None and t + dur - t0 > cfg.coherence_limit_ps:
            raise SchedulingError(
                f"gate {g.id} completes {t + dur - t0} ps after start, beyond the "
                f"coherence limit of {cfg.coherence_limit_ps} ps")

    actions.sort()
    makespan = (max(done.values()) - t0) if done else Fraction(0)
    slot_of = p.slot_of_ion
    wl = len({(a.bank, slot_of[i]) for a in actions for i in a.ions})
    stats = ScheduleStats(
        makespan_ps=makespan,
        passes_used=max((len(x) for x in transits), default=0),
        measured_wl_qubits=wl,
        deferred_gates=tuple(deferred),
    )
    return Schedule(tuple(actions), stats, str(mode), p.L, p.gap, t0, a_time, required,
                    p.physical_per_logical)


def _earliest_in_window(w, w_id, banks, view, lead, extent, lasers, ready, dur,
                        pos, engage, cfg, period, booking, cutoff):
    """Earliest (t, bank, window, lead entry) in window ``w``, or None.

    ``cutoff`` lets the search stop once it cannot beat another window.
    """
    C = cfg.circumference_nm
    first = cfg.travel_ps((w.position_nm - pos[lead]) % C)
    head = cfg.travel_ps(extent)
    dwell = cfg.travel_ps(w.width_nm)
    offsets = [cfg.travel_ps(pos[lead] - pos[q]) for q in view]
    # Lead ion's transit n enters at first + n * period; the whole view is
    # inside over [entry + head, entry + dwell).
    n = math.ceil((ready + dur - dwell - first) / period)
    while True:
        entry = first + n * period
        lo, hi = entry + head, entry + dwell
        if cutoff is not None and max(lo, ready) >= cutoff:
            return None
        if all(entry + off >= engage[q] for q, off in zip(view, offsets)):
            t = max(lo, ready)
            while t + dur <= hi:
                pushes = []
                for bank in banks:
                    clash = booking.conflict_end(bank, lasers, t, t + dur)
                    if clash is None:
                        return t, bank, w_id, entry
                    pushes.append(clash)
                t = min(pushes)
        n += 1


def measure_WL(s: Schedule, p: Partition) -> int:
    """Distinct (bank, qubit slot) laser positions ever used."""
    slot_of = p.slot_of_ion
    return len({(a.bank, slot_of[i]) for a in s.actions for i in a.ions})


def completed_depth(s: Schedule, nc: Circuit, q: int, at: Fraction) -> int:
    """Number of gates on qubit ``q`` finished by time ``at``."""
    return sum(1 for g in nc.gates if q in g.operands and s.gate_window(g.id)[1] <= at)


def ramp_profile(s: Schedule, nc: Circuit, cfg: RingConfig, p: Partition) -> list[int]:
    """Depth each bunch has completed when the serial ramp finishes.

    The ramp ends, lane by lane, when the ion in that slot of bunch 0 (the
    last bunch to arrive) leaves the first window it was engaged at. The
    value per bunch is the minimum over its qubits.
    """
    _, engage = engagement_times(cfg, p, Mode.serial())
    dwell = cfg.travel_ps(cfg.windows[0].width_nm)
    out = []
    for b in range(p.bunch_count):
        depths = [completed_depth(s, nc, q, engage[p.slot(q)] + dwell) for q in p.qubits_in(b)]
        out.append(min(depths))
    return out


def target_mismatches(s: Schedule, nc: Circuit, p: Partition) -> list[str]:
    """Actions whose target ions differ from their gate's operand ions."""
    out = []
    for a in s.actions:
        if not 0 <= a.gate_id < len(nc.gates):
            out.append(f"action targets unknown gate {a.gate_id}")
            continue
        expected = tuple(p.ion_of[q] for q in nc.gates[a.gate_id].operands)
        if a.ions != expected:
            out.append(f"gate {a.gate_id}: targets {a.ions}, expected {expected}")
    return out


def check_schedule(s: Schedule, nc: Circuit, cfg: RingConfig, p: Partition) -> list[str]:
    """Physical-validity violations of ``s``; an empty list means valid.

    Visibility is checked against :func:`ring.visibility_intervals`, separately
    from the closed-form transit arithmetic the scheduler uses.
    """
    errors: list[str] = []
    a_time = s.action_time_ps
    bank_window = {b: w for w, b in cfg.bank_ids()}
    slot_of = p.slot_of_ion
    hazards = {h.gate_id for h in detect_predecessors(p, nc)}
    cache: dict[tuple[int, int], list] = {}
    horizon = max((a.t for a in s.actions), default=Fraction(0)) + a_time

    def visible(ion: int, w: int, t: Fraction) -> bool:
        if (ion, w) not in cache:
            cache[ion, w] = visibility_intervals(cfg, ion, w, horizon)
        return any(lo <= t and t + a_time <= hi for lo, hi in cache[ion, w])

    errors += target_mismatches(s, nc, p)
    per_gate: dict[int, list[LaserAction]] = {}
    laser_use: dict[tuple[int, int], list[Fraction]] = {}
    ion_use: dict[int, list[Fraction]] = {}
    for a in s.actions:
        per_gate.setdefault(a.gate_id, []).append(a)
        if bank_window.get(a.bank) != a.window:
            errors.append(f"action {a}: bank {a.bank} is not in window {a.window}")
            continue
        if not 0 <= a.gate_id < len(nc.gates):
            continue
        g = nc.gates[a.gate_id]
        watch = set(a.ions)
        if cfg.mode == "block" and g.id not in hazards:
            watch |= {p.ion_of[q] for q in p.qubits_in(p.bunch(g.operands[0]))}
        for ion in sorted(watch):
            if not visible(ion, a.window, a.t):
                errors.append(f"gate {g.id} action {a.action_index}: ion {ion} not visible "
                              f"in window {a.window} over [{a.t}, {a.t + a_time})")
        for ion in a.ions:
            ion_use.setdefault(ion, []).append(a.t)
        for laser in {slot_of[i] for i in a.ions if i in slot_of}:
            if laser >= cfg.windows[a.window].lasers_per_bank:
                errors.append(f"gate {g.id}: laser {laser} does not exist in bank {a.bank}")
            laser_use.setdefault((a.bank, laser), []).append(a.t)

    for key, starts in [*laser_use.items(), *(((i,), v) for i, v in ion_use.items())]:
        starts = sorted(starts)
        for t1, t2 in zip(starts, starts[1:]):
            if t2 < t1 + a_time:
                errors.append(f"double booking of {'laser' if len(key) == 2 else 'ion'} {key} at {t2}")

    ends = {}
    starts_of = {}
    for g in nc.gates:
        acts = sorted(per_gate.get(g.id, []), key=lambda a: a.action_index)
        need = s.actions_required.get(g.id)
        if need is None or [a.action_index for a in acts] != list(range(need)):
            errors.append(f"gate {g.id}: incomplete action sequence")
            continue
        t0 = acts[0].t
        if any(a.t != t0 + i * a_time or a.bank != acts[0].bank for i, a in enumerate(acts)):
            errors.append(f"gate {g.id}: actions are not consecutive slots at one bank")
        starts_of[g.id], ends[g.id] = t0, acts[-1].t + a_time
    for pr, h in dependency_dag(nc).edges:
        if pr in ends and h in starts_of and starts_of[h] < ends[pr]:
            errors.append(f"gate {h} starts before predecessor {pr} completes")
    return errors

"""Closed-form laser-bank width and latency estimates.

Widths are counted in qubit slots. ``W_star`` is the widest sub-circuit one
bank handles, ``D_star`` the depth one pass can program, and ``delta_W_star``
how far the sub-circuit slides along the banks between passes.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .ring import RingConfig, capacity, derive


class TimingError(ValueError):
    pass


@dataclass(frozen=True)
class TimingQuery:
    W: int
    D: int
    W_star: int
    D_star: int
    delta_W_star: int | None = None

    def __post_init__(self):
        if self.delta_W_star is None:
            object.__setattr__(self, "delta_W_star", self.W_star)
        if min(self.W, self.D, self.W_star, self.D_star, self.delta_W_star) < 1:
            raise TimingError(f"all timing quantities must be positive: {self}")
        if self.delta_W_star > self.W_star:
            raise TimingError("delta_W_star cannot exceed W_star")

    @property
    def passes(self) -> int:
        return passes(self.D, self.D_star)


def passes(D: int, D_star: int) -> int:
    return max(1, -(-D // D_star))


def wl_general(q: TimingQuery) -> int:
    if q.W > q.W_star:
        raise TimingError(f"W={q.W} exceeds W*={q.W_star}; the general form needs one sub-circuit")
    return q.W_star + (q.passes - 1) * q.delta_W_star


def wl_serial(q: TimingQuery) -> int:
    if q.W > q.W_star:
        raise TimingError(f"W={q.W} exceeds W*={q.W_star}; serial form needs one sub-circuit")
    return q.W_star * q.passes


def wl_parallel(q: TimingQuery) -> int:
    if q.W < q.W_star:
        raise TimingError(f"W={q.W} is narrower than W*={q.W_star}; parallel form needs W >= W*")
    return q.W + (q.passes - 1) * q.W_star


def applicable_wl(q: TimingQuery) -> dict[str, int]:
    out = {}
    for name, fn in (("wl_general", wl_general), ("wl_serial", wl_serial), ("wl_parallel", wl_parallel)):
        try:
            out[name] = fn(q)
        except TimingError:
            pass
    return out


@dataclass(frozen=True)
class Latency:
    per_pass_ps: Fraction
    inter_pass_gaps_ps: tuple[Fraction, ...]
    circumnavigations: int
    total_ps: Fraction


@dataclass(frozen=True)
class TimingReport:
    WL: dict[str, int]
    passes: int
    D_star: int
    actions_per_pass: int
    latency: Latency
    velocity_nm_per_us: Fraction

    @property
    def WL_min(self) -> int:
        return min(self.WL.values())


def latency(cfg: RingConfig, n_passes: int) -> Latency:
    """Time from the first window entry to the end of the last pass.

    Consecutive passes use consecutive windows in ring order starting from
    window 0; after the last window the ions need a full lap to come back.
    """
    geo = derive(cfg)
    order = sorted(range(len(cfg.windows)), key=lambda k: cfg.windows[k].position_nm)
    order = order[order.index(0):] + order[:order.index(0)]
    gaps, laps = [], 0
    for i in range(n_passes - 1):
        k = order[i % len(order)]
        if (i + 1) % len(order) == 0:
            laps += 1
        hop = cfg.travel_ps(geo.window_arcs_nm[k])
        gaps.append(hop - geo.pass_time_per_window_ps[k])
    last = order[(n_passes - 1) % len(order)]
    per_pass = geo.pass_time_per_window_ps[last]
    total = sum(geo.pass_time_per_window_ps[order[i % len(order)]] for i in range(n_passes)) + sum(gaps)
    return Latency(per_pass, tuple(gaps), laps, total)


def sizing_report(cfg: RingConfig, q: TimingQuery, two_qubit: bool = True) -> TimingReport:
    """Pass count, bank widths and latency for ``q`` on ``cfg``.

    ``D_star`` comes from the ring's per-pass capacity, overriding ``q.D_star``.
    """
    actions, dstar = capacity(cfg, two_qubit)
    if dstar < 1:
        raise TimingError(
            f"a window pass allows {actions} action(s); not enough for one gate")
    q = replace(q, D_star=dstar)
    n = q.passes
    return TimingReport(applicable_wl(q), n, dstar, actions, latency(cfg, n), cfg.ion_velocity_nm_per_us)


def velocity_scenarios(cfg: RingConfig, q: TimingQuery, velocities_nm_per_us, two_qubit: bool = True):
    """Reports for the configured velocity plus each of ``velocities_nm_per_us``."""
    out = {cfg.ion_velocity_nm_per_us: sizing_report(cfg, q, two_qubit)}
    for v in velocities_nm_per_us:
        out[Fraction(v)] = sizing_report(cfg.with_velocity(v), q, two_qubit)
    return out

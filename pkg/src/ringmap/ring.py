"""Storage-ring geometry and kinematics in exact arithmetic.

Lengths are integer nanometres, durations are picoseconds held as
``Fraction``, and velocity is a rational number of nm/us (converted to nm/ps
internally). Ion ``i`` sits at arc position ``i * ion_spacing_nm`` at t = 0
and moves toward increasing arc position.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

PS_PER_US = 10 ** 6

MODES = ("block", "continuous")


class RingConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Window:
    position_nm: int
    width_nm: int
    banks: int = 1
    lasers_per_bank: int = 1

    def contains(self, x_nm: int | Fraction, circumference_nm: int) -> bool:
        return (x_nm - self.position_nm) % circumference_nm < self.width_nm


@dataclass(frozen=True)
class RingConfig:
    circumference_nm: int
    ion_spacing_nm: int
    ion_velocity_nm_per_us: Fraction
    windows: tuple[Window, ...]
    action_time_ps: int
    actions_per_1q_gate: int = 1
    actions_per_2q_gate: int = 1
    physical_per_logical: int = 1
    mode: str = "block"
    # Optional ceiling on schedule makespan (ion state lifetime); None disables it.
    coherence_limit_ps: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "ion_velocity_nm_per_us", Fraction(self.ion_velocity_nm_per_us))
        object.__setattr__(self, "windows", tuple(self.windows))
        C, s = self.circumference_nm, self.ion_spacing_nm
        if C <= 0 or s <= 0:
            raise RingConfigError("circumference and ion spacing must be positive")
        if C % s:
            raise RingConfigError(f"ion spacing {s} nm does not divide circumference {C} nm")
        if self.ion_velocity_nm_per_us <= 0:
            raise RingConfigError("ion velocity must be positive")
        if self.action_time_ps <= 0:
            raise RingConfigError("action time must be positive")
        if min(self.actions_per_1q_gate, self.actions_per_2q_gate, self.physical_per_logical) < 1:
            raise RingConfigError("action counts and physical_per_logical must be >= 1")
        if self.mode not in MODES:
            raise RingConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.windows:
            raise RingConfigError("at least one window is required")
        for k, w in enumerate(self.windows):
            if not 0 <= w.position_nm < C:
                raise RingConfigError(f"window {k} position outside [0, {C})")
            if w.width_nm < s:
                raise RingConfigError(f"window {k} is narrower than the ion spacing")
            if w.banks < 1 or w.lasers_per_bank < 1:
                raise RingConfigError(f"window {k} needs at least one bank and one laser")
            if w.lasers_per_bank > w.width_nm // s:
                raise RingConfigError(
                    f"window {k}: bank reach {w.lasers_per_bank} exceeds {w.width_nm // s} visible ions")
        spans = sorted((w.position_nm, w.position_nm + w.width_nm) for w in self.windows)
        for (a0, a1), (b0, _) in zip(spans, spans[1:]):
            if b0 < a1:
                raise RingConfigError("windows overlap")
        if spans[-1][1] > C and spans[-1][1] - C > spans[0][0]:
            raise RingConfigError("windows overlap across the ring origin")

    @property
    def velocity_nm_per_ps(self) -> Fraction:
        return self.ion_velocity_nm_per_us / PS_PER_US

    @property
    def total_ions(self) -> int:
        return self.circumference_nm // self.ion_spacing_nm

    @property
    def circumnavigation_ps(self) -> Fraction:
        return self.circumference_nm / self.velocity_nm_per_ps

    def travel_ps(self, distance_nm: int | Fraction) -> Fraction:
        return Fraction(distance_nm) / self.velocity_nm_per_ps

    def bank_ids(self) -> list[tuple[int, int]]:
        """(window id, bank id) for every bank; bank ids are global and dense."""
        out, b = [], 0
        for k, w in enumerate(self.windows):
            for _ in range(w.banks):
                out.append((k, b))
                b += 1
        return out

    def with_velocity(self, nm_per_us) -> RingConfig:
        return _replace(self, ion_velocity_nm_per_us=Fraction(nm_per_us))

    def replace(self, **changes) -> RingConfig:
        return _replace(self, **changes)

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> RingConfig:
        required = {"circumference_nm", "ion_spacing_nm", "ion_velocity_nm_per_us", "windows",
                    "action_time_ps", "actions_per_1q_gate", "actions_per_2q_gate",
                    "physical_per_logical", "mode"}
        missing = required - set(doc)
        unknown = set(doc) - required - {"coherence_limit_ps"}
        if missing:
            raise RingConfigError(f"ring config missing keys: {sorted(missing)}")
        if unknown:
            raise RingConfigError(f"ring config has unknown keys: {sorted(unknown)}")
        try:
            windows = tuple(
                Window(int(w["position_nm"]), int(w["width_nm"]), int(w["banks"]), int(w["lasers_per_bank"]))
                for w in doc["windows"])
            velocity = doc["ion_velocity_nm_per_us"]
            if isinstance(velocity, float):
                raise RingConfigError("ion_velocity_nm_per_us must be an integer or a 'p/q' string")
            return cls(
                circumference_nm=_int(doc["circumference_nm"]),
                ion_spacing_nm=_int(doc["ion_spacing_nm"]),
                ion_velocity_nm_per_us=Fraction(velocity),
                windows=windows,
                action_time_ps=_int(doc["action_time_ps"]),
                actions_per_1q_gate=_int(doc["actions_per_1q_gate"]),
                actions_per_2q_gate=_int(doc["actions_per_2q_gate"]),
                physical_per_logical=_int(doc["physical_per_logical"]),
                mode=doc["mode"],
                coherence_limit_ps=doc.get("coherence_limit_ps"),
            )
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, RingConfigError):
                raise
            raise RingConfigError(f"bad ring config: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> RingConfig:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise RingConfigError(f"ring config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise RingConfigError("ring config must be a JSON object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict[str, Any]:
        v = self.ion_velocity_nm_per_us
        doc = {
            "circumference_nm": self.circumference_nm,
            "ion_spacing_nm": self.ion_spacing_nm,
            "ion_velocity_nm_per_us": v.numerator if v.denominator == 1 else f"{v.numerator}/{v.denominator}",
            "windows": [
                {"position_nm": w.position_nm, "width_nm": w.width_nm, "banks": w.banks,
                 "lasers_per_bank": w.lasers_per_bank} for w in self.windows],
            "action_time_ps": self.action_time_ps,
            "actions_per_1q_gate": self.actions_per_1q_gate,
            "actions_per_2q_gate": self.actions_per_2q_gate,
            "physical_per_logical": self.physical_per_logical,
            "mode": self.mode,
        }
        if self.coherence_limit_ps is not None:
            doc["coherence_limit_ps"] = self.coherence_limit_ps
        return doc


def _int(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise RingConfigError(f"expected integer, got {value!r}")
    return value


def _replace(cfg: RingConfig, **changes) -> RingConfig:
    from dataclasses import replace

    return replace(cfg, **changes)


@dataclass(frozen=True)
class RingGeometry:
    total_ions: int
    visible_per_window: tuple[int, ...]
    pass_time_per_window_ps: tuple[Fraction, ...]
    circumnavigation_ps: Fraction
    actions_per_pass: int
    dstar_1q: int
    dstar_2q: int
    window_arcs_nm: tuple[int, ...] = field(repr=False)

    @property
    def pass_time_ps(self) -> Fraction:
        """Governing (shortest) window pass time."""
        return min(self.pass_time_per_window_ps)

    @property
    def visible(self) -> int:
        return min(self.visible_per_window)


def derive(cfg: RingConfig) -> RingGeometry:
    passes = tuple(cfg.travel_ps(w.width_nm) for w in cfg.windows)
    actions = _floor(min(passes) / cfg.action_time_ps)
    # Arc from each window's leading edge to the next window's leading edge (ring order).
    order = sorted(range(len(cfg.windows)), key=lambda k: cfg.windows[k].position_nm)
    arcs = [0] * len(order)
    for i, k in enumerate(order):
        nxt = cfg.windows[order[(i + 1) % len(order)]]
        arcs[k] = (nxt.position_nm - cfg.windows[k].position_nm) % cfg.circumference_nm or cfg.circumference_nm
    return RingGeometry(
        total_ions=cfg.total_ions,
        visible_per_window=tuple(w.width_nm // cfg.ion_spacing_nm for w in cfg.windows),
        pass_time_per_window_ps=passes,
        circumnavigation_ps=cfg.circumnavigation_ps,
        actions_per_pass=actions,
        dstar_1q=actions // cfg.actions_per_1q_gate,
        dstar_2q=actions // cfg.actions_per_2q_gate,
        window_arcs_nm=tuple(arcs),
    )


def circumnavigation(cfg: RingConfig) -> Fraction:
    return cfg.circumnavigation_ps


def capacity(cfg: RingConfig, two_qubit: bool = True) -> tuple[int, int]:
    """(actions per pass, max depth per pass) for the governing gate class."""
    if cfg.action_time_ps <= 0:
        raise RingConfigError("action time must be positive")
    geo = derive(cfg)
    return geo.actions_per_pass, geo.dstar_2q if two_qubit else geo.dstar_1q


def visibility_intervals(cfg: RingConfig, ion: int, window: Window | int,
                         horizon_ps) -> list[tuple[Fraction, Fraction]]:
    """Closed-open intervals within [0, horizon] when ``ion`` is inside ``window``.

    With a zero horizon the result is ``[(0, 0)]`` if the ion starts inside
    the window and empty otherwise.
    """
    if not 0 <= ion < cfg.total_ions:
        raise ValueError(f"ion {ion} outside [0, {cfg.total_ions})")
    w = cfg.windows[window] if isinstance(window, int) else window
    horizon = Fraction(horizon_ps)
    C = cfg.circumference_nm
    d = (ion * cfg.ion_spacing_nm - w.position_nm) % C
    dwell = cfg.travel_ps(w.width_nm)
    period = cfg.circumnavigation_ps
    out: list[tuple[Fraction, Fraction]] = []
    if 0 < d < w.width_nm:
        out.append((Fraction(0), min(cfg.travel_ps(w.width_nm - d), horizon)))
    enter = cfg.travel_ps((C - d) % C)
    while enter <= horizon:
        end = min(enter + dwell, horizon)
        if end > enter or horizon == 0:
            out.append((enter, end))
        enter += period
    return out


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator

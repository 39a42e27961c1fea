"""``ringmap`` command line: transpile, schedule, timing, analyze, verify.

Exit codes: 0 success, 1 domain failure (infeasible schedule, failed
verification, I/O error on output), 2 usage or input parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from . import __version__
from .circuit import CircuitError, circuit_stats, format_circuit, parse_circuit
from .report import dumps, emit_report, manifest, sha256_doc
from .ring import RingConfig, RingConfigError, capacity, derive
from .scheduler import (Mode, Schedule, SchedulingError, check_schedule, detect_predecessors,
                        partition, schedule, target_mismatches, validate_outputs)
from .timing import TimingError, TimingQuery, applicable_wl, latency, passes, wl_parallel, wl_serial
from .transpile import TranspileError, native_stats, transpile
from .verify import ReplayError, circuit_unitary, max_deviation, replay


class UsageError(Exception):
    """Bad input files or options (exit 2)."""


class DomainError(Exception):
    """Well-formed request that cannot be satisfied (exit 1)."""


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_circuit(path: str):
    try:
        return parse_circuit(_read(path))
    except CircuitError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_ring(path: str) -> RingConfig:
    try:
        return RingConfig.from_json(_read(path))
    except RingConfigError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _native(c):
    try:
        return transpile(c)
    except TranspileError as exc:
        raise DomainError(str(exc)) from None


def _write_json(doc, out: str | None) -> None:
    if out is None:
        sys.stdout.write(dumps(doc))
        return
    try:
        emit_report(doc, out)
    except OSError as exc:
        raise DomainError(f"cannot write {out}: {exc.strerror}") from None


def _write_text(text: str, out: str) -> None:
    path = Path(out)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise DomainError(f"cannot write {out}: {exc.strerror}") from None


def cmd_transpile(args) -> int:
    c = _load_circuit(args.circuit)
    nc = _native(c)
    _write_text(format_circuit(nc), args.out)
    width, depth, counts = native_stats(nc)
    doc = {
        "manifest": manifest("transpile", {"circuit": args.circuit}, {}, not args.no_timestamp),
        "source": {"width_qubits": c.width, "depth": circuit_stats(c)[1], "gates": len(c.gates)},
        "native": {"width_qubits": width, "depth": depth, "counts": counts},
        "provenance": [{"native_id": n, "source_id": s} for n, s in sorted(nc.provenance.items())],
    }
    _write_json(doc, args.provenance or f"{args.out}.provenance.json")
    return 0


def cmd_schedule(args) -> int:
    c = _load_circuit(args.circuit)
    cfg = _load_ring(args.ring)
    try:
        mode = Mode.parse(args.mode)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    nc = _native(c)
    try:
        p = partition(nc, args.bunch_size, args.gap, cfg=cfg)
        violations = validate_outputs(nc, p)
        if violations:
            v = violations[0]
            raise DomainError(
                f"gate {v.gate_id} places output qubit {v.qubit} in bunch {v.bunch}, outside "
                f"its operand bunches {list(v.operand_bunches)}; relocation is not supported")
        s = schedule(nc, cfg, p, mode)
    except SchedulingError as exc:
        raise DomainError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    header = s.header()
    header["config_hash"] = sha256_doc(cfg.to_dict())
    header["hazards"] = [{"gate_id": h.gate_id, "bunches": list(h.bunches), "span_ions": h.span_ions}
                         for h in detect_predecessors(p, nc)]
    doc = {
        "manifest": manifest("schedule", {"circuit": args.circuit, "ring": args.ring},
                             {"mode": str(mode), "bunch_size": args.bunch_size, "gap": args.gap},
                             not args.no_timestamp),
        "header": header,
        "actions": [a.to_dict() for a in s.actions],
    }
    _write_json(doc, args.out)
    return 0


def cmd_timing(args) -> int:
    try:
        q = TimingQuery(args.w, args.d, args.wstar, args.dstar, args.dwstar)
    except TimingError as exc:
        raise UsageError(str(exc)) from None
    doc = {
        "manifest": manifest("timing", {}, {"w": args.w, "d": args.d, "wstar": args.wstar,
                                            "dstar": args.dstar, "dwstar": q.delta_W_star},
                             not args.no_timestamp),
        "passes": q.passes,
        **{f"{k}_qubits": v for k, v in applicable_wl(q).items()},
    }
    _write_json(doc, args.out)
    return 0


def _analysis(cfg: RingConfig, c) -> dict:
    geo = derive(cfg)
    doc = {
        "n_ions": geo.total_ions,
        "visible": geo.visible,
        "pass_time_ps": geo.pass_time_ps,
        "t_ring_ps": geo.circumnavigation_ps,
        "actions_per_pass": geo.actions_per_pass,
        "dstar": None, "passes": None, "wl_serial": None, "wl_parallel": None, "latency_ps": None,
    }
    if c is None:
        doc["dstar"] = geo.dstar_2q
        return doc
    nc = _native(c)
    width, depth, counts = native_stats(nc)
    _, dstar = capacity(cfg, two_qubit="XX" in counts)
    doc.update(dstar=dstar, width_qubits=width, depth=depth)
    if dstar < 1 or depth == 0:
        return doc
    n = passes(depth, dstar)
    w_star = cfg.windows[0].lasers_per_bank
    q = TimingQuery(width, depth, w_star, dstar)
    doc.update(
        passes=n,
        wl_serial=wl_serial(q) if width <= w_star else None,
        wl_parallel=wl_parallel(q) if width >= w_star else None,
        latency_ps=latency(cfg, n).total_ps,
    )
    return doc


def cmd_analyze(args) -> int:
    cfg = _load_ring(args.ring)
    c = _load_circuit(args.circuit) if args.circuit else None
    inputs = {"ring": args.ring, **({"circuit": args.circuit} if args.circuit else {})}
    doc = _analysis(cfg, c)
    if args.velocity:
        doc["scenarios"] = [
            {"ion_velocity_nm_per_us": v, **_analysis(cfg.with_velocity(v), c)} for v in args.velocity]
    doc["manifest"] = manifest("analyze", inputs, {"velocity": args.velocity or []}, not args.no_timestamp)
    _write_json(doc, args.out)
    return 0


def cmd_verify(args) -> int:
    c = _load_circuit(args.circuit)
    try:
        s = Schedule.from_dict(json.loads(_read(args.schedule)))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{args.schedule}: not a schedule file ({exc})") from None
    nc = _native(c)
    verdict = {"equivalent": False, "max_deviation": None, "gate_order_valid": False}
    try:
        p = partition(nc, s.L, s.gap, physical_per_logical=s.physical_per_logical)
        mismatches = target_mismatches(s, nc, p)
        if mismatches:
            raise ReplayError(f"schedule does not belong to this circuit: {mismatches[0]}")
        _, u = replay(s, nc)
        verdict["gate_order_valid"] = True
        dev = max_deviation(u, circuit_unitary(c))
        verdict.update(max_deviation=dev, equivalent=dev <= args.tol)
    except ReplayError as exc:
        verdict["error"] = str(exc)
    except ValueError as exc:  # beyond the dense simulator's width limit
        raise DomainError(str(exc)) from None
    inputs = {"circuit": args.circuit, "schedule": args.schedule}
    if args.ring:
        cfg = _load_ring(args.ring)
        if cfg.physical_per_logical != s.physical_per_logical:
            raise UsageError("ring config and schedule disagree on physical_per_logical")
        try:
            p = partition(nc, s.L, s.gap, cfg=cfg)
        except SchedulingError as exc:
            raise DomainError(str(exc)) from None
        verdict["physical_violations"] = check_schedule(s, nc, cfg, p)
        inputs["ring"] = args.ring
    verdict["manifest"] = manifest("verify", inputs, {"tol": args.tol}, not args.no_timestamp)
    _write_json(verdict, args.out)
    ok = verdict["equivalent"] and verdict["gate_order_valid"] and not verdict.get("physical_violations")
    return 0 if ok else 1


def _velocity(text: str) -> Fraction:
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational velocity: {text!r}") from None
    if v <= 0:
        raise argparse.ArgumentTypeError("velocity must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ringmap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"ringmap {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--no-timestamp", action="store_true", help="omit the manifest timestamp")
        p.set_defaults(func=func)
        return p

    p = add("transpile", cmd_transpile, "rewrite a circuit into native R/XX gates")
    p.add_argument("--circuit", required=True, metavar="FILE")
    p.add_argument("--out", required=True, metavar="FILE", help="native circuit output")
    p.add_argument("--provenance", metavar="FILE", help="sidecar report (default: OUT.provenance.json)")

    p = add("schedule", cmd_schedule, "schedule laser actions for a circuit on a ring")
    p.add_argument("--circuit", required=True, metavar="FILE")
    p.add_argument("--ring", required=True, metavar="FILE")
    p.add_argument("--mode", default="parallel", help="serial | parallel | hybrid:K")
    p.add_argument("--bunch-size", type=int, required=True, metavar="L")
    p.add_argument("--gap", type=int, default=0, metavar="G")
    p.add_argument("--out", metavar="FILE")

    p = add("timing", cmd_timing, "evaluate laser-bank width formulas")
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--wstar", type=int, required=True)
    p.add_argument("--dstar", type=int, required=True)
    p.add_argument("--dwstar", type=int)
    p.add_argument("--out", metavar="FILE")

    p = add("analyze", cmd_analyze, "ring sizing and latency report")
    p.add_argument("--ring", required=True, metavar="FILE")
    p.add_argument("--circuit", metavar="FILE")
    p.add_argument("--velocity", action="append", type=_velocity, metavar="NM_PER_US",
                   help="extra velocity scenario (repeatable), e.g. 1000000")
    p.add_argument("--out", metavar="FILE")

    p = add("verify", cmd_verify, "replay a schedule and check it against its circuit")
    p.add_argument("--circuit", required=True, metavar="FILE")
    p.add_argument("--schedule", required=True, metavar="FILE")
    p.add_argument("--ring", metavar="FILE", help="also check physical validity")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", metavar="FILE")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ringmap {args.command}: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"ringmap {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

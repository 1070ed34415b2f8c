"""Command-line harness: every experiment as a reproducible subcommand.

Each run is a pure function of its effective configuration, which merges
defaults, an optional JSON ``--config`` file and explicit flags (flags win)
and is echoed into every JSON report.  Exit codes: 0 success, 1 failed
threshold under ``--check``, 2 usage error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Callable, Optional

from . import classify, excursion, invariants, lattice, oracles, sde
from .errors import CapacityError
from .parallel import default_workers
from .rng import replicate_generator
from .stats import EstimateReport, excursion_tail, mc_mean, ratio_estimate

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3

# per-subcommand defaults; anything not listed is None
DEFAULTS = {
    "common": {"epsilon": 0.1, "seed": 0, "format": "json", "check": False},
    "sample": {"window": "-10,10,0,10", "format": "text"},
    "census": {"window": "-10,10,0,10", "format": "csv"},
    "density-psi": {"epsilon": 0.05, "reps": 200, "time": 1.0, "width": 40.0},
    "relevant-density": {"epsilon": 0.05, "reps": 500, "s": 0.0, "u": 1.0, "a": 0.0, "b": 1.0},
    "t-mesh": {"window": "-10,10,0,10", "format": "csv"},
    "excursions": {"reps": 250, "dt": 1e-6, "horizon": 1000.0, "h": "0.01,0.1,1"},
    "cross-thinning": {"reps": 2000, "h": "0.04,0.16,0.64"},
    "sticky": {"reps": 10000, "dt": 1e-6, "times": "0.001,0.1,0.2,0.4,0.8"},
    "meeting": {"reps": 2000, "dt": 1e-6, "horizon": 10.0, "starts": "0.4,0.2,0.1,0.05"},
    "reflect-cross": {"reps": 2000, "dt": 1e-4, "horizon": 1.0, "barrier": 0.5, "z": 0.0},
    "invariants": {"cases": 500, "epsilons": "0,0.1,0.5,1"},
}


class UsageError(Exception):
    """Invalid flag combination detected after parsing."""


def _floats(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _window(text) -> tuple:
    vals = [int(v) for v in (text if isinstance(text, (list, tuple)) else str(text).split(","))]
    if len(vals) != 4:
        raise UsageError("--window needs x_lo,x_hi,t_lo,t_hi")
    return tuple(vals)


def _config(cfg: dict) -> lattice.LatticeConfig:
    if cfg.get("window") is None:
        raise UsageError("--window is required")
    try:
        return lattice.LatticeConfig(float(cfg["epsilon"]), *_window(cfg["window"]),
                                     int(cfg["seed"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# report plumbing ---------------------------------------------------------------


def _report(cfg: dict, rows: list, extra: Optional[dict] = None) -> dict:
    """JSON report; ``rows`` are ``(label, EstimateReport)`` pairs."""
    out = {"config_echo": cfg, "seed": cfg.get("seed")}
    if len(rows) == 1:
        label, rep = rows[0]
        out.update(label=label, estimate=rep.estimate, stderr=rep.stderr,
                   reference=rep.reference, n=rep.n)
    else:
        out.update(labels=[r[0] for r in rows], estimate=[r[1].estimate for r in rows],
                   stderr=[r[1].stderr for r in rows], reference=[r[1].reference for r in rows],
                   n=[r[1].n for r in rows])
    out["reports"] = {str(label): rep.to_dict() for label, rep in rows}
    if extra:
        out.update(extra)
    return out


def _rows_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "estimate", "stderr", "reference", "n"])
    for label, rep in rows:
        w.writerow([label, repr(rep.estimate), repr(rep.stderr),
                    "" if rep.reference is None else repr(rep.reference), rep.n])
    return buf.getvalue()


def _table_csv(header: list, table: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(table)
    return buf.getvalue()


def _emit(text: str, cfg: dict) -> None:
    path = cfg.get("output")
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_rows(cfg: dict, rows: list, extra: Optional[dict] = None) -> None:
    if cfg["format"] == "csv":
        _emit(_rows_csv(rows), cfg)
    else:
        _emit(json.dumps(_report(cfg, rows, extra), indent=2, sort_keys=True) + "\n", cfg)


def _within(rep: EstimateReport, rel: float) -> bool:
    return rep.ratio is not None and abs(rep.ratio - 1.0) <= rel


def _verdict(cfg: dict, lines: list) -> int:
    """Print ``(name, ok)`` lines to stderr; failure exit only under ``--check``."""
    ok = all(flag for _, flag in lines)
    if cfg.get("check"):
        for name, flag in lines:
            print(f"{'PASS' if flag else 'FAIL'} {name}", file=sys.stderr)
        return EXIT_OK if ok else EXIT_CHECK
    return EXIT_OK


# subcommands -------------------------------------------------------------------


def cmd_sample(cfg: dict) -> int:
    field = lattice.sample_arrow_field(_config(cfg))
    _emit(lattice.dump_field(field), cfg)
    return EXIT_OK


def cmd_census(cfg: dict) -> int:
    field = lattice.sample_arrow_field(_config(cfg))
    records = classify.census(field)
    sep = {r.site for r in records if r.is_separation}
    cross = {r.site for r in records if r.is_crossing}
    if cfg["format"] == "csv":
        _emit(classify.census_to_csv(records), cfg)
    else:
        rows = [{"x": r.site[0], "t": r.site[1], "kind": r.kind.value, "m_in": r.m_in,
                 "m_out": r.m_out, "dual_m_in": r.dual_m_in, "dual_m_out": r.dual_m_out}
                for r in records]
        kinds = {}
        for r in records:
            kinds[r.kind.value] = kinds.get(r.kind.value, 0) + 1
        rep = EstimateReport(float(len(sep)), 0.0, len(records))
        _emit(json.dumps(_report(cfg, [("separation_sites", rep)],
                                 {"kinds": kinds, "sites": rows}), indent=2, sort_keys=True) + "\n",
              cfg)
    return _verdict(cfg, [("separation sites equal crossing sites", sep == cross)])


def cmd_density_psi(cfg: dict) -> int:
    if cfg.get("window") is not None:
        # window mode: the window is the whole system; exact reference by enumeration
        config = _config(cfg)
        rep = classify.window_density_estimate(config, int(cfg["reps"]))
        try:
            ref = oracles.exact_window_count(config)
        except ValueError:
            ref = None
        rep = rep.with_reference(ref)
        _emit_rows(cfg, [("window_count", rep)])
        ok = ref is not None and abs(rep.estimate - ref) <= max(4.0 * rep.stderr, 1e-12)
        return _verdict(cfg, [("window count matches enumeration", ok)])
    eps = float(cfg["epsilon"])
    if eps <= 0:
        raise UsageError("density-psi without --window needs --epsilon > 0")
    rep = classify.point_density_estimate(eps, float(cfg["time"]), float(cfg["width"]),
                                          int(cfg["reps"]), int(cfg["seed"]), default_workers())
    _emit_rows(cfg, [("density", rep)])
    return _verdict(cfg, [("density within 5% of psi", _within(rep, 0.05))])


def cmd_relevant_density(cfg: dict) -> int:
    eps = float(cfg["epsilon"])
    if eps <= 0:
        raise UsageError("relevant-density needs --epsilon > 0")
    config = lattice.LatticeConfig(eps, 0, 2, 0, 1, int(cfg["seed"]))
    rep = classify.relevant_density_estimate(config, float(cfg["s"]), float(cfg["u"]),
                                             float(cfg["a"]), float(cfg["b"]), int(cfg["reps"]),
                                             default_workers())
    _emit_rows(cfg, [("relevant_count", rep)])
    return _verdict(cfg, [("count within 15% of the integral", _within(rep, 0.15))])


def cmd_t_mesh(cfg: dict) -> int:
    field = lattice.sample_arrow_field(_config(cfg))
    T = int(cfg["T"]) if cfg.get("T") is not None else field.t_lo
    comps = classify.t_mesh_components(field, T)
    table = [(i, int(c.bounded), len(c.faces), c.lowest_face[0], c.lowest_face[1],
              "" if c.boundary_ok is None else int(c.boundary_ok)) for i, c in enumerate(comps)]
    header = ["component", "bounded", "faces", "lowest_x", "lowest_t", "boundary_ok"]
    bounded = [c for c in comps if c.bounded]
    if cfg["format"] == "csv":
        _emit(_table_csv(header, table), cfg)
    else:
        rep = EstimateReport(float(len(bounded)), 0.0, len(comps))
        _emit(json.dumps(_report(cfg, [("bounded_components", rep)],
                                 {"components": [dict(zip(header, row)) for row in table]}),
                         indent=2, sort_keys=True) + "\n", cfg)
    return _verdict(cfg, [("bounded components match their boundary paths",
                           all(c.boundary_ok for c in bounded))])


def cmd_excursions(cfg: dict) -> int:
    hs = sorted(_floats(cfg["h"]))
    walks = int(cfg["reps"])
    summaries = [excursion.simulate_long_walk(float(cfg["horizon"]), max(hs), float(cfg["dt"]),
                                              replicate_generator(int(cfg["seed"]), i))
                 for i in range(walks)]
    comps = [s.compensator_cut for s in summaries]
    rows = []
    for h in hs:
        counts = [s.count_at_least(h) for s in summaries]
        rows.append((f"h={h!r}", ratio_estimate(counts, comps, excursion_tail(h))))
    if cfg["format"] == "csv":
        local = float(sum(comps))
        table = []
        for h, (_, rep) in zip(hs, rows):
            count = sum(s.count_at_least(h) for s in summaries)
            table.append((h, math.inf, count, local, rep.estimate, rep.reference))
        _emit(_table_csv(["h_lo", "h_hi", "count", "local_time", "estimate", "reference"], table),
              cfg)
    else:
        _emit_rows(cfg, rows)
    return _verdict(cfg, [(f"tail intensity within 5% at {label}", _within(rep, 0.05))
                          for label, rep in rows])


def cmd_cross_thinning(cfg: dict) -> int:
    hs = sorted(_floats(cfg["h"]))
    reports = [excursion.crossing_thinning_estimate(h, int(cfg["reps"]), int(cfg["seed"]))
               for h in hs]
    rows = [(f"h={r.h!r}", r.scaled) for r in reports]
    extra = {"thinning": [r.to_dict() for r in reports]}
    _emit_rows(cfg, rows, extra)
    scaled = [r.scaled.estimate for r in reports]
    lines = [(f"paired estimators agree at h={r.h!r}", r.crossing.consistent()) for r in reports]
    if len(scaled) > 1:
        lines.append(("rho(h)/sqrt(h) extremes within 30%",
                      abs(scaled[-1] / scaled[0] - 1.0) <= 0.3))
    return _verdict(cfg, lines)


def cmd_sticky(cfg: dict) -> int:
    times = sorted(_floats(cfg["times"]))
    st = sde.sticky_zero_statistics(times, float(cfg["dt"]), int(cfg["reps"]), int(cfg["seed"]))
    occ = [mc_mean(st["zero_time"][:, k] / t) for k, t in enumerate(times)]
    atom = [mc_mean(st["zero_at"][:, k]) for k, t in enumerate(times)]
    rows = [(f"occupation t={t!r}", r) for t, r in zip(times, occ)]
    rows += [(f"P[D=0] t={t!r}", r) for t, r in zip(times, atom)]
    _emit_rows(cfg, rows)
    lines = []
    if len(times) >= 2:
        lines.append((f"occupation at t={times[0]!r} exceeds 0.9", occ[0].estimate > 0.9))
        lines.append((f"occupation at t={times[0]!r} exceeds that at t={times[1]!r}",
                      occ[0].estimate > occ[1].estimate))
    for k in range(1, len(times)):
        a, b = atom[k - 1], atom[k]
        if times[k - 1] >= 0.1:
            lines.append((f"P[D=0] non-increasing {times[k - 1]!r}->{times[k]!r}",
                          b.estimate <= a.estimate + 3.0 * math.hypot(a.stderr, b.stderr)))
    return _verdict(cfg, lines)


def cmd_meeting(cfg: dict) -> int:
    starts = sorted(_floats(cfg["starts"]), reverse=True)
    reps = [sde.meeting_absorption_estimate(e, float(cfg["dt"]), int(cfg["reps"]),
                                            int(cfg["seed"]), float(cfg["horizon"]))
            for e in starts]
    rows = [(f"epsilon={e!r}", r) for e, r in zip(starts, reps)]
    _emit_rows(cfg, rows)
    lines = [(f"increasing {starts[k - 1]!r}->{starts[k]!r}",
              reps[k].estimate > reps[k - 1].estimate) for k in range(1, len(starts))]
    lines.append((f"estimate at epsilon={starts[-1]!r} exceeds 0.8", reps[-1].estimate > 0.8))
    return _verdict(cfg, lines)


def cmd_reflect_cross(cfg: dict) -> int:
    est = sde.reflect_cross_estimate(float(cfg["barrier"]), float(cfg["z"]),
                                     float(cfg["horizon"]), float(cfg["dt"]), int(cfg["reps"]),
                                     int(cfg["seed"]))
    rows = [("indicator", est.indicator), ("closed_form", est.closed_form),
            ("difference", est.difference)]
    _emit_rows(cfg, rows)
    return _verdict(cfg, [("indicator and closed form agree", est.consistent())])


def cmd_invariants(cfg: dict) -> int:
    eps = tuple(_floats(cfg["epsilons"]))
    res = invariants.run_suite(int(cfg["cases"]), eps, int(cfg["seed"]))
    rep = EstimateReport(float(len(res.failures)), 0.0, res.cases, 0.0)
    extra = {"failures": [{"check": f.check, "epsilon": f.epsilon, "seed": f.seed,
                           "window": list(f.window), "messages": f.messages}
                          for f in res.failures],
             "checks": sorted(invariants.CHECKS)}
    if cfg["format"] == "csv":
        _emit(_table_csv(["check", "epsilon", "seed", "window", "message"],
                         [(f.check, f.epsilon, f.seed, " ".join(map(str, f.window)),
                           f.messages[0] if f.messages else "") for f in res.failures]), cfg)
    else:
        _emit(json.dumps(_report(cfg, [("failures", rep)], extra), indent=2, sort_keys=True)
              + "\n", cfg)
    if res.failures and not cfg.get("check"):
        for f in res.failures:
            print(f"failure: {f.check} eps={f.epsilon} window={f.window}", file=sys.stderr)
    return _verdict(cfg, [("zero invariant failures", res.ok)])


COMMANDS: dict[str, Callable[[dict], int]] = {
    "sample": cmd_sample,
    "census": cmd_census,
    "density-psi": cmd_density_psi,
    "relevant-density": cmd_relevant_density,
    "t-mesh": cmd_t_mesh,
    "excursions": cmd_excursions,
    "cross-thinning": cmd_cross_thinning,
    "sticky": cmd_sticky,
    "meeting": cmd_meeting,
    "reflect-cross": cmd_reflect_cross,
    "invariants": cmd_invariants,
}

HELP = {
    "sample": "dump an arrow field (needs --window)",
    "census": "per-site degree census as CSV (needs --window)",
    "density-psi": "point-set density versus psi; with --window, exact small-window count",
    "relevant-density": "relevant separation count versus the density integral",
    "t-mesh": "components of the complement of the image set from time --T",
    "excursions": "excursion tail intensity per unit compensator",
    "cross-thinning": "crossing probability within an excursion, scaled by sqrt(h)",
    "sticky": "zero occupation and zero probability of the sticky gap",
    "meeting": "absorption probability of the meeting triple",
    "reflect-cross": "reflection with exponential crossing clock, two estimators",
    "invariants": "randomized structural invariant suite with shrinking",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--epsilon", type=float, help="branching probability")
    common.add_argument("--window", help="x_lo,x_hi,t_lo,t_hi (x_hi - x_lo even)")
    common.add_argument("--seed", type=int, help="base seed; replicate i uses hash(seed, i)")
    common.add_argument("--reps", type=int, help="replicates (walks for excursions)")
    common.add_argument("--dt", type=float, help="time step")
    common.add_argument("--horizon", type=float, help="time horizon")
    common.add_argument("--output", help="output file (default stdout)")
    common.add_argument("--format", choices=["csv", "json", "text"], help="output format")
    common.add_argument("--config", help="JSON file of flag values; flags override it")
    common.add_argument("--check", action="store_true", help="exit 1 if a threshold fails")
    common.add_argument("--cases", type=int, help="random windows for invariants")
    common.add_argument("--epsilons", help="comma list of epsilons for invariants")
    common.add_argument("--time", type=float, help="rescaled time for density-psi")
    common.add_argument("--width", type=float, help="rescaled width for density-psi")
    for name in ("s", "u", "a", "b"):
        common.add_argument(f"--{name}", type=float, help=f"relevant-density parameter {name}")
    common.add_argument("--T", type=int, help="start time for t-mesh")
    common.add_argument("--h", help="comma list of durations")
    common.add_argument("--times", help="comma list of probe times for sticky")
    common.add_argument("--starts", help="comma list of start distances for meeting")
    common.add_argument("--barrier", type=float, help="constant barrier for reflect-cross")
    common.add_argument("--z", type=float, help="start point for reflect-cross")
    parser = argparse.ArgumentParser(prog="bnetlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
    return parser


def effective_config(args: argparse.Namespace) -> dict:
    """Defaults, then the JSON config file, then explicit flags."""
    flags = vars(args).copy()
    command = flags.pop("command")
    cfg = {k: None for k in ("window", "output", "T", "cases")}
    cfg.update(DEFAULTS["common"])
    cfg.update(DEFAULTS[command])
    path = flags.pop("config", None)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(from_file, dict):
            raise UsageError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in from_file.items()})
    cfg.update(flags)
    cfg["command"] = command
    return cfg


def _join_negative_values(argv: list) -> list:
    """Turn ``--flag -4,4`` into ``--flag=-4,4`` so negative lists parse as values."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if (a.startswith("--") and "=" not in a and i + 1 < len(argv)
                and argv[i + 1].startswith("-") and len(argv[i + 1]) > 1
                and (argv[i + 1][1].isdigit() or argv[i + 1][1] == ".")):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        cfg = effective_config(args)
        return COMMANDS[cfg["command"]](cfg)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

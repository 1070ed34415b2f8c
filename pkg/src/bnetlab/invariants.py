"""Randomised structural checks on small windows against exhaustive oracles.

Each check takes an :class:`ArrowField` and returns a list of violation
messages.  :func:`run_suite` draws windows of at most 11 x 11 sites and, on
failure, shrinks the window while the failure persists.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .classify import (Mesh, SiteKind, Wedge, census, mesh_at, paths_entering_mesh,
                       paths_entering_wedge, quarter_matrix, reachable_set,
                       relevant_separation_points, t_mesh_components)
from .lattice import Arrow, LatticeConfig, dual_arrows, mirror, sample_arrow_field
from .oracles import (admissible_max, all_step_sequences, enumerate_arrow_paths, hop_closure,
                      reachable_by_enumeration)
from .paths import (LatticePath, dual_leftmost, dual_rightmost, hop_concatenate, is_net_path,
                    leftmost_path, reflected_rightmost, rightmost_path)
from .errors import DomainError
from .rng import derive_seed


def _segments_cross(p1, p2, q1, q2) -> bool:
    """Proper intersection of segments p1p2 and q1q2 at an interior point."""
    def orient(a, b, c):
        return np.sign((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    return (orient(p1, p2, q1) * orient(p1, p2, q2) < 0
            and orient(q1, q2, p1) * orient(q1, q2, p2) < 0)


def check_mirror(field) -> list:
    out = []
    if not np.array_equal(mirror(mirror(field.mask)), field.mask):
        out.append("mirror is not an involution")
    dual = dual_arrows(field)
    for x, t in field.iter_sites():
        m = field.arrows(x, t)
        d = dual[t - field.t_lo, x - field.x_lo]
        if bool(d & Arrow.LEFT) != bool(m & Arrow.RIGHT) or bool(d & Arrow.RIGHT) != bool(m & Arrow.LEFT):
            out.append(f"dual at ({x},{t + 1}) is not the mirror of ({x},{t})")
    return out


def check_geometric_noncrossing(field) -> list:
    out = []
    for x, t in field.iter_sites():
        m = field.arrows(x, t)
        d = field.dual_arrows_at(x, t + 1)
        crossed = False
        for fb, fdx in ((Arrow.LEFT, -1), (Arrow.RIGHT, 1)):
            for db, ddx in ((Arrow.LEFT, -1), (Arrow.RIGHT, 1)):
                if m & fb and d & db and _segments_cross((x, t), (x + fdx, t + 1),
                                                         (x, t + 1), (x + ddx, t)):
                    crossed = True
        if crossed and m != Arrow.BOTH:
            out.append(f"forward and dual arrows cross at non-Both site ({x},{t})")
        if m == Arrow.BOTH and not crossed:
            out.append(f"Both site ({x},{t}) shows no crossing")
    return out


def _extremal(field):
    lefts, rights = {}, {}
    for z in field.iter_sites():
        lefts[z] = leftmost_path(field, z)
        rights[z] = rightmost_path(field, z)
    return lefts, rights


def check_extremal_order_and_coalescence(field) -> list:
    out = []
    lefts, rights = _extremal(field)
    for z in lefts:
        l, r = lefts[z], rights[z]
        for t in range(z[1], min(l.end_time, r.end_time) + 1):
            if l.at(t) > r.at(t):
                out.append(f"leftmost right of rightmost from {z} at t={t}")
                break
    items = list(lefts.items())
    for i, (z1, p1) in enumerate(items):
        for z2, p2 in items[i + 1:]:
            lo, hi = max(p1.start_time, p2.start_time), min(p1.end_time, p2.end_time)
            met = False
            for t in range(lo, hi + 1):
                if p1.at(t) == p2.at(t):
                    met = True
                elif met:
                    out.append(f"leftmost paths from {z1} and {z2} separate after meeting")
                    break
    return out


def check_duality_noncrossing(field) -> list:
    out = []
    lefts, rights = _extremal(field)
    duals = [dual_leftmost(field, (int(x), t)) for t in range(field.t_lo + 1, field.t_hi + 2)
             for x in field.dual_sites(t)]
    for z in lefts:
        for d in duals:
            for fwd, name in ((lefts[z], "leftmost"), (rights[z], "rightmost")):
                lo = max(fwd.start_time, d.end_time)
                hi = min(fwd.end_time, d.start_time)
                for t in range(lo, hi):
                    a = np.sign(d.at(t) - fwd.at(t))
                    b = np.sign(d.at(t + 1) - fwd.at(t + 1))
                    if a != b:
                        if name == "leftmost":
                            out.append(f"forward leftmost from {z} swaps with dual leftmost at t={t}")
                        elif field.arrows(fwd.at(t), t) != Arrow.BOTH:
                            out.append(f"rightmost from {z} crosses dual leftmost at non-Both t={t}")
    return out


def check_net_paths(field, rng) -> list:
    """Accepted set, hop closure, containment and hopping closure."""
    out = []
    lefts, rights = _extremal(field)
    enumerated = {}
    for z in field.iter_sites():
        paths = enumerate_arrow_paths(field, z)
        keys = {tuple(int(v) for v in p.positions) for p in paths}
        enumerated[z] = paths
        for p in paths:
            if not is_net_path(field, p):
                out.append(f"enumerated path {p} rejected by is_net_path")
                break
        steps = field.t_hi - z[1]
        cands = all_step_sequences(z, steps)
        if cands.shape[0] > 64:
            cands = cands[rng.choice(cands.shape[0], 64, replace=False)]
        for c in cands:
            p = LatticePath(z[1], c)
            if is_net_path(field, p) != (tuple(int(v) for v in c) in keys):
                out.append(f"is_net_path disagrees with enumeration on {p}")
                break
        if hop_closure(field, z) != keys:
            out.append(f"hop closure from {z} differs from enumeration")
        l, r = lefts[z], rights[z]
        for p in paths:
            for t in range(z[1], min(l.end_time, r.end_time) + 1):
                if not l.at(t) <= p.at(t) <= r.at(t):
                    out.append(f"path {p} leaves [l, r] from {z}")
                    break
    allp = [p for ps in enumerated.values() for p in ps]
    if len(allp) >= 2:
        for _ in range(60):
            i, j = rng.integers(len(allp), size=2)
            p1, p2 = allp[i], allp[j]
            for t in range(max(p1.start_time, p2.start_time) + 1, min(p1.end_time, p2.end_time) + 1):
                if p1.at(t) == p2.at(t):
                    h = hop_concatenate(p1, p2, t)
                    if not is_net_path(field, h):
                        out.append(f"hop of {p1} onto {p2} at {t} rejected")
                    break
    return out


def check_reflected(field, rng) -> list:
    out = []
    duals = [f(field, (int(x), t)) for t in range(field.t_lo + 1, field.t_hi + 2)
             for x in field.dual_sites(t) for f in (dual_leftmost, dual_rightmost)]
    sites = list(field.iter_sites())
    for _ in range(min(20, len(duals) * len(sites))):
        d = duals[rng.integers(len(duals))]
        z = sites[rng.integers(len(sites))]
        bound = d.at(z[1]) if z[1] <= d.start_time else None
        if bound is not None and z[0] > bound - 1:
            continue
        best, _ = admissible_max(field, z, d)
        try:
            res = reflected_rightmost(field, z, d)
        except DomainError:
            if best is not None:
                out.append(f"reflected_rightmost from {z} found no path but {best} is admissible")
            continue
        if res.path.tainted:
            continue
        if best is None or not np.array_equal(best, res.path.positions):
            out.append(f"reflected path from {z} against {d} is not the admissible maximum")
            continue
        # segment structure: rightmost from each segment start until the next reflection
        stops = sorted(res.reflection_times) + [res.path.end_time]
        for (sx, st), stop in zip(res.segments(), stops):
            seg = rightmost_path(field, (sx, st))
            for t in range(st, stop + 1):
                if seg.at(t) != res.path.at(t):
                    out.append(f"reflected path from {z} leaves the right-most segment at t={t}")
                    break
        for s in res.reflection_times:
            if field.arrows(res.path.at(s), s) != Arrow.BOTH:
                out.append(f"reflection time {s} is not at a Both site")
    return out


def check_census(field) -> list:
    out = []
    for rec in census(field):
        if rec.is_separation != rec.is_crossing:
            out.append(f"separation/crossing mismatch at {rec.site}")
        if rec.is_separation != (field.arrows(*rec.site) == Arrow.BOTH):
            out.append(f"separation tag differs from Both mask at {rec.site}")
        if rec.kind not in (SiteKind.PLAIN, SiteKind.MEETING, SiteKind.SEPARATION):
            out.append(f"unexpected kind {rec.kind} at {rec.site}")
        if rec.kind is SiteKind.MEETING and (rec.m_in != 2 or rec.m_out != 1):
            out.append(f"meeting site {rec.site} has m_in={rec.m_in}, m_out={rec.m_out}")
    return out


def check_reachable(field) -> list:
    out = []
    for s in range(field.t_lo, field.t_hi + 1):
        if not np.array_equal(reachable_set(field, s).occupied, reachable_by_enumeration(field, s)):
            out.append(f"reachable set from s={s} differs from enumeration")
    return out


def check_relevant_monotone(field, rng) -> list:
    out = []
    for _ in range(4):
        s, u = sorted(rng.integers(field.t_lo, field.t_hi + 2, size=2))
        if u - s < 2:
            continue
        s2 = int(rng.integers(s, u - 1))
        u2 = int(rng.integers(s2 + 1, u + 1))
        big = relevant_separation_points(field, s, u)
        small = set(relevant_separation_points(field, s2, u2, include_undetermined=True))
        for x, t in big:
            if s2 < t < u2 and (x, t) not in small:
                out.append(f"R({s},{u}) point {(x, t)} missing from R({s2},{u2})")
    return out


def check_wedges_and_meshes(field, rng, max_wedges: int = 60) -> list:
    out = []
    paths = [p for z in field.iter_sites()
             for p in enumerate_arrow_paths(field, z, complete_only=False)]
    if not paths:
        return out
    grid = quarter_matrix(paths)
    pairs = []
    for t in range(field.t_lo + 1, field.t_hi + 2):
        xs = field.dual_sites(t)
        pairs += [((int(a), t), (int(b), t)) for a in xs for b in xs if a < b]
    dual_sites = [(int(x), t) for t in range(field.t_lo + 1, field.t_hi + 2)
                  for x in field.dual_sites(t)]
    for _ in range(20):
        a = dual_sites[rng.integers(len(dual_sites))]
        b = dual_sites[rng.integers(len(dual_sites))]
        pairs.append((a, b))
    if len(pairs) > max_wedges:
        pairs = [pairs[i] for i in rng.choice(len(pairs), max_wedges, replace=False)]
    for a, b in pairs:
        r_hat, l_hat = dual_rightmost(field, a), dual_leftmost(field, b)
        top = min(r_hat.start_time, l_hat.start_time)
        if r_hat.at(top) is None or l_hat.at(top) is None or not r_hat.at(top) < l_hat.at(top):
            continue
        wedge = Wedge(r_hat, l_hat)
        hits = np.flatnonzero(paths_entering_wedge(paths, wedge, grid))
        if hits.size:
            out.append(f"path {paths[hits[0]]} enters wedge {r_hat} / {l_hat} from outside")
    for z in field.iter_sites():
        if field.arrows(*z) != Arrow.BOTH:
            continue
        mesh = mesh_at(field, z)
        if mesh is None:
            continue
        hits = np.flatnonzero(paths_entering_mesh(paths, mesh, grid))
        if hits.size:
            out.append(f"path {paths[hits[0]]} enters mesh at {z}")
    return out


def check_t_mesh(field) -> list:
    out = []
    for comp in t_mesh_components(field, field.t_lo):
        if comp.bounded and not comp.boundary_ok:
            out.append(f"component with lowest face {comp.lowest_face} is not bounded by r/l")
    return out


CHECKS: dict = {
    "mirror": lambda f, rng: check_mirror(f),
    "geometric_noncrossing": lambda f, rng: check_geometric_noncrossing(f),
    "extremal_order_coalescence": lambda f, rng: check_extremal_order_and_coalescence(f),
    "duality_noncrossing": lambda f, rng: check_duality_noncrossing(f),
    "net_paths": check_net_paths,
    "reflected": check_reflected,
    "census": lambda f, rng: check_census(f),
    "reachable": lambda f, rng: check_reachable(f),
    "relevant_monotone": check_relevant_monotone,
    "wedges_meshes": check_wedges_and_meshes,
    "t_mesh": lambda f, rng: check_t_mesh(f),
}


@dataclass
class Failure:
    check: str
    epsilon: float
    seed: int
    window: tuple
    messages: list


@dataclass
class SuiteResult:
    cases: int
    failures: list = dc_field(default_factory=list)
    seconds: float = 0.0
    epsilons: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.failures


def random_window(rng, max_side: int = 11) -> tuple:
    half = int(rng.integers(1, (max_side - 1) // 2 + 1))
    x_lo = int(rng.integers(-6, 7))
    height = int(rng.integers(2, max_side + 1))
    t_lo = int(rng.integers(-6, 7))
    return x_lo, x_lo + 2 * half, t_lo, t_lo + height - 1


def _run_check(name, field, seed) -> list:
    return CHECKS[name](field, np.random.default_rng(seed))


def shrink(name: str, field, seed: int) -> tuple:
    """Smallest sub-window (greedy) on which check ``name`` still fails."""
    msgs = _run_check(name, field, seed)
    improved = True
    while improved:
        improved = False
        c = field.config
        for w in ((c.x_lo + 2, c.x_hi, c.t_lo, c.t_hi), (c.x_lo, c.x_hi - 2, c.t_lo, c.t_hi),
                  (c.x_lo + 1, c.x_hi - 1, c.t_lo, c.t_hi), (c.x_lo, c.x_hi, c.t_lo + 1, c.t_hi),
                  (c.x_lo, c.x_hi, c.t_lo, c.t_hi - 1)):
            if w[0] >= w[1] or w[2] >= w[3]:
                continue
            sub = field.restrict(*w)
            sub_msgs = _run_check(name, sub, seed)
            if sub_msgs:
                field, msgs, improved = sub, sub_msgs, True
                break
    return field, msgs


def run_suite(cases: int = 500, epsilons=(0.0, 0.1, 0.5, 1.0), seed: int = 0,
              checks=None, progress: Callable | None = None) -> SuiteResult:
    """Run every check on ``cases`` random windows cycling through ``epsilons``."""
    names = list(checks or CHECKS)
    rng = np.random.default_rng(seed)
    result = SuiteResult(cases, epsilons=tuple(epsilons))
    t0 = time.perf_counter()
    for i in range(cases):
        eps = float(epsilons[i % len(epsilons)])
        window = random_window(rng)
        case_seed = derive_seed(seed, i)
        field = sample_arrow_field(LatticeConfig(eps, *window, case_seed))
        for name in names:
            msgs = _run_check(name, field, case_seed)
            if msgs:
                small, small_msgs = shrink(name, field, case_seed)
                c = small.config
                result.failures.append(Failure(name, eps, case_seed,
                                               (c.x_lo, c.x_hi, c.t_lo, c.t_hi), small_msgs[:5]))
        if progress is not None:
            progress(i + 1, cases)
    result.seconds = time.perf_counter() - t0
    return result

"""Special sites, reachable sets, wedges, meshes and density estimators."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .lattice import Arrow, ArrowField, LatticeConfig, classify_uniforms, sample_arrow_field
from .paths import (DualLatticePath, LatticePath, dual_leftmost_step, first_meeting_time,
                    is_net_path, leftmost_path, leftmost_step, rightmost_path, rightmost_step)
from .rng import derive_seed, site_uniforms
from .stats import EstimateReport, empty_report, mc_mean, psi, relevant_density_integral


class SiteKind(enum.Enum):
    PLAIN = "Plain"
    MEETING = "Meeting"
    SEPARATION = "Separation"
    CROSSING = "Crossing"


@dataclass(frozen=True)
class SiteCensus:
    """Classification record of one forward site.

    ``kind`` resolves overlapping tags with priority Separation, then
    Crossing, then Meeting; the boolean flags keep every tag.
    """

    site: tuple
    kind: SiteKind
    m_in: int
    m_out: int
    dual_m_in: int
    dual_m_out: int
    is_separation: bool
    is_crossing: bool
    is_meeting: bool


# reachable sets ----------------------------------------------------------------


def _advance(occupied: np.ndarray, mask_row: np.ndarray) -> np.ndarray:
    """Occupied positions one step later (dense column indexing)."""
    src = occupied & (mask_row > 0)
    new = np.zeros_like(occupied)
    new[..., 1:] |= (src & ((mask_row & Arrow.RIGHT) > 0))[..., :-1]
    new[..., :-1] |= (src & ((mask_row & Arrow.LEFT) > 0))[..., 1:]
    return new


@dataclass
class ReachableSet:
    """Positions hit by net paths started from every window site at ``start_time``.

    ``occupied[k, j]`` refers to ``(x_lo + j, start_time + k)``.  Sites within
    ``k`` columns of a side edge at row ``start_time + k`` may miss walkers
    from outside the window; :meth:`interior` marks the exact ones.
    """

    start_time: int
    x_lo: int
    occupied: np.ndarray

    @property
    def end_time(self) -> int:
        return self.start_time + self.occupied.shape[0] - 1

    def contains(self, x: int, t: int) -> bool:
        k, j = t - self.start_time, x - self.x_lo
        if 0 <= k < self.occupied.shape[0] and 0 <= j < self.occupied.shape[1]:
            return bool(self.occupied[k, j])
        return False

    def positions(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.occupied[t - self.start_time]) + self.x_lo

    def count(self, t: int) -> int:
        return int(self.occupied[t - self.start_time].sum())

    def interior(self) -> np.ndarray:
        """Boolean array of entries unaffected by the finite window."""
        n, w = self.occupied.shape
        k = np.arange(n)[:, None]
        j = np.arange(w)[None, :]
        return (j >= k) & (w - 1 - j >= k)


def reachable_set(field: ArrowField, s: int) -> ReachableSet:
    """Forward closure under the arrows of all window sites at time ``s``."""
    if not field.t_lo <= s <= field.t_hi:
        raise ValueError("start time outside the window")
    rows = field.t_hi - s + 1
    occ = np.zeros((rows, field.config.width), dtype=bool)
    occ[0] = field.row(s) > 0
    for k in range(1, rows):
        occ[k] = _advance(occ[k - 1], field.row(s + k - 1))
    return ReachableSet(s, field.x_lo, occ)


# census ------------------------------------------------------------------------


def census_arrays(field: ArrowField) -> dict:
    """Per-site tag arrays over the whole field (``-1`` marks undefined).

    Walkers start from every site, so every arrow is occupied.  Entries that
    depend on sites outside the window are set to ``-1`` in the degree arrays
    and ``False`` in ``valid``.
    """
    m = field.mask.astype(np.int16)
    site = m > 0
    has_l = (m & Arrow.LEFT) > 0
    has_r = (m & Arrow.RIGHT) > 0
    nt, nx = m.shape
    m_out = has_l.astype(np.int16) + has_r
    m_in = np.full((nt, nx), -1, dtype=np.int16)
    m_in[1:, 1:-1] = has_r[:-1, :-2].astype(np.int16) + has_l[:-1, 2:]
    # dual site (x, t+1) receives dual arrows from (x-1, t+2) [needs forward left at (x-1, t+1)]
    # and (x+1, t+2) [needs forward right at (x+1, t+1)]
    dual_m_in = np.full((nt, nx), -1, dtype=np.int16)
    dual_m_in[:-1, 1:-1] = has_l[1:, :-2].astype(np.int16) + has_r[1:, 2:]
    dual_m_out = m_out.copy()

    # crossing from path steps: forward right-most (x,t)->(x+f,t+1) vs dual left-most (x,t+1)->(x+d,t)
    fwd = rightmost_step(m)
    back = dual_leftmost_step(m)
    before = np.sign(back)          # dual minus forward at time t
    after = np.sign(-fwd)           # dual minus forward at time t + 1
    crossing = site & (before != after)
    separation = site & (m == Arrow.BOTH)
    meeting = site & (m_in == 2)

    valid = site.copy()
    valid[0, :] = False
    valid[-1, :] = False
    valid[:, 0] = False
    valid[:, -1] = False
    return dict(site=site, valid=valid, m_in=m_in, m_out=m_out, dual_m_in=dual_m_in,
                dual_m_out=dual_m_out, crossing=crossing, separation=separation,
                meeting=meeting)


def _kind(sep: bool, cross: bool, meet: bool) -> SiteKind:
    if sep:
        return SiteKind.SEPARATION
    if cross:
        return SiteKind.CROSSING
    if meet:
        return SiteKind.MEETING
    return SiteKind.PLAIN


def census(field: ArrowField, window: Optional[tuple] = None) -> list:
    """Classify every non-tainted forward site of ``window``.

    Parameters
    ----------
    field : ArrowField
    window : tuple (x_lo, x_hi, t_lo, t_hi), optional
        Reporting window; defaults to the field.  Sites in the first or last
        row or the edge columns of the field are excluded because their
        degrees depend on arrows outside it.
    """
    arr = census_arrays(field)
    x_lo, x_hi, t_lo, t_hi = window or (field.x_lo, field.x_hi, field.t_lo, field.t_hi)
    out = []
    for k, j in zip(*np.nonzero(arr["valid"])):
        x, t = int(j) + field.x_lo, int(k) + field.t_lo
        if not (x_lo <= x <= x_hi and t_lo <= t <= t_hi):
            continue
        sep, cross, meet = (bool(arr[n][k, j]) for n in ("separation", "crossing", "meeting"))
        out.append(SiteCensus((x, t), _kind(sep, cross, meet), int(arr["m_in"][k, j]),
                              int(arr["m_out"][k, j]), int(arr["dual_m_in"][k, j]),
                              int(arr["dual_m_out"][k, j]), sep, cross, meet))
    return out


def census_to_csv(records: list) -> str:
    lines = ["x,t,kind,m_in,m_out,dual_m_in,dual_m_out"]
    for r in records:
        lines.append(f"{r.site[0]},{r.site[1]},{r.kind.value},{r.m_in},{r.m_out},"
                     f"{r.dual_m_in},{r.dual_m_out}")
    return "\n".join(lines) + "\n"


# relevant separation points ---------------------------------------------------


def _relevant_mask(field: ArrowField, s: int, u: int, x_range=None) -> tuple:
    """Vectorised core of :func:`relevant_separation_points`.

    Returns ``(ts, xs, relevant, determined)`` arrays over reachable Both
    sites with ``s < t < u`` and ``x`` in ``x_range`` (half-open).
    """
    occ = np.zeros(field.config.width, dtype=bool)
    occ[:] = field.row(s) > 0
    cols = np.arange(field.config.width) + field.x_lo
    if x_range is None:
        in_cols = np.ones_like(occ)
    else:
        in_cols = (cols >= x_range[0]) & (cols < x_range[1])
    ts, js = [], []
    for t in range(s, u):
        if t > s:
            hit = np.flatnonzero(occ & (field.row(t) == Arrow.BOTH) & in_cols)
            ts.append(np.full(hit.size, t))
            js.append(hit)
        occ = _advance(occ, field.row(t))
    if not ts:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0, bool), np.zeros(0, bool)
    t0 = np.concatenate(ts).astype(np.int64)
    j0 = np.concatenate(js).astype(np.int64)
    width = field.config.width
    lpos, rpos = j0 - 1, j0 + 1
    t = t0 + 1
    alive = np.ones(t0.size, dtype=bool)      # not yet met
    ok = (lpos >= 0) & (rpos < width)          # paths still inside the window
    active = ok & (t < u)
    while active.any():
        met = active & (lpos == rpos)
        alive &= ~met
        active &= ~met
        if not active.any():
            break
        idx = np.flatnonzero(active)
        rows = t[idx] - field.t_lo
        ml = field.mask[rows, lpos[idx]]
        mr = field.mask[rows, rpos[idx]]
        lpos[idx] += leftmost_step(ml)
        rpos[idx] += rightmost_step(mr)
        t[idx] += 1
        left_window = (lpos[idx] < 0) | (rpos[idx] >= width)
        ok[idx[left_window]] = False
        active = ok & alive & (t < u)
    return t0, j0 + field.x_lo, alive & ok, ok


def relevant_separation_points(field: ArrowField, s: int, u: int,
                               include_undetermined: bool = False) -> list:
    """Both sites ``z = (x, t)``, ``s < t < u``, reachable from time ``s`` whose
    left-most and right-most paths stay apart at all integer times in ``(t, u)``.

    Reachability is computed inside the window.  Sites whose extremal paths
    leave the window before the question is settled are dropped unless
    ``include_undetermined`` is set.
    """
    if not (field.t_lo <= s and u <= field.t_hi + 1):
        raise ValueError("times outside the window")
    if u <= s:
        return []
    ts, xs, relevant, determined = _relevant_mask(field, s, min(u, field.t_hi + 1))
    keep = relevant | (include_undetermined & ~determined)
    return [(int(x), int(t)) for x, t in zip(xs[keep], ts[keep])]


def _lattice_window_for(epsilon: float, s: float, u: float, a: float, b: float) -> tuple:
    t_s, t_u = round(s / epsilon ** 2), round(u / epsilon ** 2)
    x_a, x_b = round(a / epsilon), round(b / epsilon)
    margin = t_u - t_s + 2
    return t_s, t_u, x_a, x_b, margin


def relevant_count_one(epsilon: float, seed: int, s: float, u: float, a: float, b: float) -> int:
    """Relevant separation points of one field in ``[a, b) x (s, u)`` after rescaling."""
    t_s, t_u, x_a, x_b, margin = _lattice_window_for(epsilon, s, u, a, b)
    lo, hi = x_a - margin, x_b + margin
    if (hi - lo) % 2:
        hi += 1
    cfg = LatticeConfig(epsilon, lo, hi, t_s, max(t_u, t_s + 1), seed)
    field = sample_arrow_field(cfg)
    _, _, relevant, determined = _relevant_mask(field, t_s, t_u, (x_a, x_b))
    if not determined.all():
        raise RuntimeError("margin too small: an extremal path left the window")
    return int(relevant.sum())


def relevant_density_estimate(config: LatticeConfig, s: float, u: float, a: float, b: float,
                              reps: int, workers: int = 1) -> EstimateReport:
    """Monte Carlo count of ``(s, u)``-relevant separation points in ``[a, b] x [s, u]``.

    Uses ``config.epsilon`` and ``config.seed``; the lattice window is derived
    from the rescaled box plus a light-cone margin, so no boundary effect
    reaches the counted sites.  Replicate ``i`` uses ``derive_seed(seed, i)``.
    """
    if reps <= 0:
        return empty_report("reps must be positive")
    if u < s or b < a:
        raise ValueError("need s <= u and a <= b")
    if u == s:
        return EstimateReport(0.0, 0.0, reps, 0.0, None)
    reference = relevant_density_integral(s, s, u, u, a, b)
    from .parallel import map_ordered

    counts = map_ordered(_relevant_job, [(config.epsilon, derive_seed(config.seed, i), s, u, a, b)
                                         for i in range(reps)], workers)
    return mc_mean(counts, reference)


def _relevant_job(args):
    return relevant_count_one(*args)


# point-set density -------------------------------------------------------------


def occupied_count_one(epsilon: float, seed: int, steps: int, width: int, margin: int) -> int:
    """Occupied sites of ``xi^(0)`` at time ``steps`` within ``[0, width)``.

    Streams the field row by row from the counter-based generator, so memory
    is one row regardless of height.
    """
    xs = np.arange(-margin, width + margin + 1)
    occ = (xs % 2) == 0
    for t in range(steps):
        row = np.zeros(xs.size, dtype=np.uint8)
        par = ((xs + t) % 2) == 0
        row[par] = classify_uniforms(site_uniforms(seed, t, xs[par]), epsilon)
        occ = _advance(occ, row)
    keep = (xs >= 0) & (xs < width)
    return int(occ[keep].sum())


def point_density_estimate(epsilon: float, t: float = 1.0, width: float = 40.0, reps: int = 200,
                           seed: int = 0, workers: int = 1) -> EstimateReport:
    """Density per unit rescaled length of points hit at time ``t`` by paths from the full line.

    The reference is ``psi(t)``.
    """
    if reps <= 0:
        return empty_report("reps must be positive", psi(t))
    steps = round(t / epsilon ** 2)
    cols = round(width / epsilon)
    cols += cols % 2
    from .parallel import map_ordered

    counts = map_ordered(_density_job, [(epsilon, derive_seed(seed, i), steps, cols, steps + 2)
                                        for i in range(reps)], workers)
    dens = np.asarray(counts, dtype=np.float64) / (cols * epsilon)
    return mc_mean(dens, psi(t))


def _density_job(args):
    return occupied_count_one(*args)


def window_density_estimate(config: LatticeConfig, reps: int, workers: int = 1) -> EstimateReport:
    """Mean count of ``xi^(t_lo)`` at ``t_hi`` inside ``config``'s window.

    Unlike :func:`point_density_estimate` the window is the universe: walkers
    outside it do not exist.  Used to compare against exhaustive enumeration.
    """
    if reps <= 0:
        return empty_report("reps must be positive")
    from dataclasses import replace

    counts = []
    for i in range(reps):
        f = sample_arrow_field(replace(config, seed=derive_seed(config.seed, i)))
        counts.append(reachable_set(f, config.t_lo).count(config.t_hi))
    return mc_mean(counts)


# wedges and meshes ---------------------------------------------------------------

_OUT, _BOUNDARY, _IN, _UNKNOWN, _ABSENT = 0, 1, 2, 3, 4


def _interp(path, q: np.ndarray) -> np.ndarray:
    """Linear interpolation of a lattice path at real times ``q`` (nan outside)."""
    ts = path.times()
    xs = path.positions.astype(np.float64)
    if isinstance(path, DualLatticePath):
        ts, xs = ts[::-1], xs[::-1]
    out = np.interp(q, ts, xs)
    out[(q < ts[0]) | (q > ts[-1])] = np.nan
    return out


@dataclass
class Wedge:
    """Open region between a dual right-most path ``r_hat`` (left boundary) and a
    dual left-most path ``l_hat`` (right boundary), above their first backward
    meeting time."""

    r_hat: DualLatticePath
    l_hat: DualLatticePath
    bottom_time: Optional[int] = dc_field(default=None, init=False)

    def __post_init__(self):
        top = self.top_time
        if not self.r_hat.at(top) < self.l_hat.at(top):
            raise ValueError("wedge needs r_hat < l_hat at the earlier start time")
        self.bottom_time = first_meeting_time(self.r_hat, self.l_hat)

    @property
    def top_time(self) -> int:
        return min(self.r_hat.start_time, self.l_hat.start_time)

    def status(self, q: np.ndarray, xq: np.ndarray) -> np.ndarray:
        lo, hi = _interp(self.r_hat, q), _interp(self.l_hat, q)
        # an unclosed wedge continues below the window: unknown there
        return _region_status(q, xq, lo, hi, self.bottom_time, self.top_time,
                              self.bottom_time is None)


@dataclass
class Mesh:
    """Open region between ``r`` (left) and ``l`` (right) started at a common point
    up to their first meeting time."""

    r: LatticePath
    l: LatticePath
    top_time: Optional[int] = dc_field(default=None, init=False)

    def __post_init__(self):
        if self.r.start_time != self.l.start_time or self.r.at(self.r.start_time) != self.l.at(
                self.l.start_time):
            raise ValueError("mesh boundaries must start at the same point")
        self.top_time = first_meeting_time(self.r, self.l)
        end = self.top_time if self.top_time is not None else min(self.r.end_time, self.l.end_time) + 1
        for t in range(self.r.start_time + 1, end):
            if not self.r.at(t) < self.l.at(t):
                raise ValueError("need r < l strictly between bottom and top")

    @property
    def bottom(self) -> tuple:
        return (self.r.at(self.r.start_time), self.r.start_time)

    def status(self, q: np.ndarray, xq: np.ndarray) -> np.ndarray:
        lo, hi = _interp(self.r, q), _interp(self.l, q)
        if self.top_time is None:
            # unclosed mesh: unknown wherever a boundary has left the window
            return _region_status(q, xq, lo, hi, self.r.start_time, math.inf, True)
        return _region_status(q, xq, lo, hi, self.r.start_time, self.top_time, False)


def _region_status(q, xq, lo, hi, bottom, top, unknown_where_undefined):
    """Status of points ``(xq, q)`` relative to ``{bottom < q < top, lo < x < hi}``.

    ``q``, ``lo`` and ``hi`` have shape ``(Q,)``; ``xq`` may be ``(Q,)`` or
    ``(N, Q)`` with ``nan`` where a path is undefined (status ``_ABSENT``).
    ``bottom=None`` means no lower time bound.
    """
    xq = np.asarray(xq, dtype=np.float64)
    st = np.full(xq.shape, _OUT, dtype=np.int8)
    known = ~np.isnan(lo) & ~np.isnan(hi)
    lower = -math.inf if bottom is None else bottom
    t_open = known & (q > lower) & (q < top)
    t_closed = known & (q >= lower) & (q <= top)
    with np.errstate(invalid="ignore"):
        strict = t_open & (xq > lo) & (xq < hi)
        closed = t_closed & (xq >= lo) & (xq <= hi) & ~strict
    st[strict] = _IN
    st[closed] = _BOUNDARY
    if unknown_where_undefined:
        st[..., ~known & (q >= lower) & (q <= top)] = _UNKNOWN
    st[np.isnan(xq)] = _ABSENT
    return st


def quarter_matrix(paths) -> tuple:
    """Positions of forward lattice paths on a shared quarter-time grid.

    All order changes between lattice paths happen at integer or
    half-integer times, so sampling at quarter times sees every piece of
    every inside/outside set.  Returns ``(q, X, starts)`` with ``nan`` where
    a path is undefined.
    """
    paths = list(paths)
    t0 = min(p.start_time for p in paths)
    t1 = max(p.end_time for p in paths)
    q = t0 + np.arange(4 * (t1 - t0) + 1) / 4.0
    X = np.full((len(paths), q.size), np.nan)
    for i, p in enumerate(paths):
        X[i] = _interp(p, q)
    return q, X, np.array([p.start_time for p in paths], dtype=np.float64)


def _enters_batch(status: np.ndarray, q: np.ndarray, starts: np.ndarray,
                  from_outside: bool) -> np.ndarray:
    after = q[None, :] > starts[:, None]
    if from_outside:
        before = after & (status == _OUT)
    else:
        before = after & ((status == _OUT) | (status == _BOUNDARY))
    inside = status == _IN
    Q = q.size
    first_before = np.where(before.any(axis=1), np.argmax(before, axis=1), Q)
    last_inside = np.where(inside.any(axis=1), Q - 1 - np.argmax(inside[:, ::-1], axis=1), -1)
    return first_before < last_inside


def paths_entering_wedge(paths, wedge: "Wedge", grid=None) -> np.ndarray:
    """Vectorised :func:`wedge_entered_from_outside` over many paths.

    ``grid`` may pass a precomputed ``quarter_matrix(paths)``.
    """
    q, X, starts = grid if grid is not None else quarter_matrix(paths)
    return _enters_batch(wedge.status(q, X), q, starts, True)


def paths_entering_mesh(paths, mesh: "Mesh", grid=None) -> np.ndarray:
    """Vectorised :func:`mesh_entered` over many paths."""
    q, X, starts = grid if grid is not None else quarter_matrix(paths)
    return _enters_batch(mesh.status(q, X), q, starts, False)


def wedge_entered_from_outside(path: LatticePath, wedge: Wedge) -> bool:
    """True iff the path is outside the wedge's closure at some time after its
    start and inside the open wedge at a later time."""
    return bool(paths_entering_wedge([path], wedge)[0])


def mesh_entered(path: LatticePath, mesh: Mesh) -> bool:
    """True iff the path is outside the open mesh at some time after its start
    and inside it later."""
    return bool(paths_entering_mesh([path], mesh)[0])


def mesh_at(field: ArrowField, z) -> Optional[Mesh]:
    """Lattice mesh with bottom at the Both site ``z``: ``r`` steps left then
    follows the right-most path, ``l`` steps right then follows the left-most path.
    Returns ``None`` when ``z`` is not a Both site or sits in the last row or
    an edge column."""
    x, t = int(z[0]), int(z[1])
    if field.arrows(x, t) != Arrow.BOTH or t >= field.t_hi or x <= field.x_lo or x >= field.x_hi:
        return None
    rr = rightmost_path(field, (x - 1, t + 1))
    ll = leftmost_path(field, (x + 1, t + 1))
    r = LatticePath(t, np.concatenate([[x], rr.positions]), rr.tainted)
    l = LatticePath(t, np.concatenate([[x], ll.positions]), ll.tainted)
    return Mesh(r, l)


# T-mesh components ------------------------------------------------------------


@dataclass
class MeshComponent:
    """Connected component of the complement of the image of ``xi^(T)``.

    Faces are the odd points ``(x, t)``; a face is the diamond with corners
    ``(x +- 1, t)`` and ``(x, t +- 1)``.
    """

    faces: np.ndarray
    bounded: bool
    lowest_face: tuple
    left_boundary: Optional[LatticePath] = None
    right_boundary: Optional[LatticePath] = None
    top: Optional[tuple] = None
    boundary_ok: Optional[bool] = None


def t_mesh_components(field: ArrowField, T: int, window: Optional[tuple] = None) -> list:
    """Connected components of the complement of the image set of ``xi^(T)``.

    Two faces are adjacent across a shared arrow edge unless that arrow exists
    and its source is occupied.  Components touching the window's sides or
    top are returned with ``bounded=False``.  For bounded components the left
    boundary is the right-most path from the lowest face's left corner and the
    right boundary the left-most path from its right corner; ``boundary_ok``
    records whether the component is exactly the set of faces strictly
    between them up to their meeting.

    Parameters
    ----------
    window : tuple (x_lo, x_hi, t_lo, t_hi), optional
        Restrict to a sub-window of the field (``t_lo`` is ignored in favour of ``T``).
    """
    if window is not None:
        field = field.restrict(window[0], window[1], field.t_lo, window[3])
    occ = reachable_set(field, T).occupied
    x_lo, x_hi, t_hi = field.x_lo, field.x_hi, field.t_hi
    faces = [(x, t) for t in range(T, t_hi) for x in range(x_lo + 1, x_hi)
             if (x + t) % 2 == 1]
    if not faces:
        return []
    index = {f: i for i, f in enumerate(faces)}
    n = len(faces)
    open_edge = np.zeros(n, dtype=bool)

    def blocked(x, t, bit):
        return bool(occ[t - T, x - x_lo]) and bool(field.mask[t - field.t_lo, x - x_lo] & bit)

    rows, cols = [], []
    for i, (x, t) in enumerate(faces):
        for nx, bit, sx in ((x - 1, Arrow.RIGHT, x - 1), (x + 1, Arrow.LEFT, x + 1)):
            # upper edge from (sx, t) to (x, t + 1)
            if blocked(sx, t, bit):
                continue
            j = index.get((nx, t + 1))
            if j is None:
                open_edge[i] = True
            else:
                rows.append(i)
                cols.append(j)
        if t > T:
            # lower edges from (x, t - 1); a missing lower neighbour means the side edge
            for nx, bit in ((x - 1, Arrow.LEFT), (x + 1, Arrow.RIGHT)):
                if blocked(x, t - 1, bit):
                    continue
                if (nx, t - 1) not in index:
                    open_edge[i] = True
    adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    face_arr = np.array(faces, dtype=np.int64)
    out = []
    for c in range(ncomp):
        members = np.flatnonzero(labels == c)
        fs = face_arr[members]
        bounded = not open_edge[members].any()
        low = fs[np.lexsort((fs[:, 0], fs[:, 1]))[0]]
        comp = MeshComponent(fs, bounded, (int(low[0]), int(low[1])))
        if bounded:
            _attach_boundaries(field, comp)
        out.append(comp)
    return out


def _attach_boundaries(field: ArrowField, comp: MeshComponent) -> None:
    x0, t0 = comp.lowest_face
    low_row = comp.faces[comp.faces[:, 1] == t0]
    r = rightmost_path(field, (x0 - 1, t0))
    l = leftmost_path(field, (x0 + 1, t0))
    comp.left_boundary, comp.right_boundary = r, l
    tau = first_meeting_time(r, l)
    ok = low_row.shape[0] == 1 and tau is not None
    if tau is not None:
        comp.top = (r.at(tau), tau)
        expected = {(y, t) for t in range(t0, tau) for y in range(r.at(t) + 1, l.at(t), 2)}
        got = {(int(a), int(b)) for a, b in comp.faces}
        ok = ok and expected == got and is_net_path(field, r) and is_net_path(field, l)
    comp.boundary_ok = bool(ok)


# incoming signature -----------------------------------------------------------


class IncomingType(enum.Enum):
    C_O = "C_o"
    C_S = "C_s"
    C_M = "C_m"
    C_P = "C_p"


def incoming_signature(field: ArrowField, z, lookback: Optional[int] = None) -> IncomingType:
    """Type of ``z`` by the walkers arriving from ``lookback`` steps earlier.

    ``C_o``: no walker arrives; ``C_s``: a Both site with an arrival;
    ``C_m``: both incoming arrows carry walkers; ``C_p``: otherwise.
    """
    x, t = int(z[0]), int(z[1])
    field.arrows(x, t)
    if lookback is None:
        lookback = field.config.height
    start = max(field.t_lo, t - lookback)
    if start >= t:
        return IncomingType.C_O
    occ = reachable_set(field.restrict(field.x_lo, field.x_hi, start, t), start)
    prev = t - 1
    incoming = 0
    if x - 1 >= field.x_lo and occ.contains(x - 1, prev) and field.arrows(x - 1, prev) & Arrow.RIGHT:
        incoming += 1
    if x + 1 <= field.x_hi and occ.contains(x + 1, prev) and field.arrows(x + 1, prev) & Arrow.LEFT:
        incoming += 1
    if incoming == 0:
        return IncomingType.C_O
    if field.arrows(x, t) == Arrow.BOTH:
        return IncomingType.C_S
    if incoming == 2:
        return IncomingType.C_M
    return IncomingType.C_P

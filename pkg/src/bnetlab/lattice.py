"""Arrow fields of branching-coalescing random walks on the even lattice.

A forward site ``(x, t)`` with ``x + t`` even carries arrows to
``(x - 1, t + 1)`` and/or ``(x + 1, t + 1)``.  The dual site ``(x, t + 1)``
carries the mirrored arrows pointing backward in time, so forward and dual
arrows never cross except at sites carrying both arrows.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import CapacityError, ParityError
from .rng import site_uniforms

#: refuse windows whose mask would exceed this many bytes
DEFAULT_CAPACITY_BYTES = 2 ** 32


class Arrow(enum.IntFlag):
    """Arrow mask of a site; ``BOTH = LEFT | RIGHT``."""

    NONE = 0
    LEFT = 1
    RIGHT = 2
    BOTH = 3


_SYMBOL = {Arrow.LEFT: "L", Arrow.RIGHT: "R", Arrow.BOTH: "B"}
_FROM_SYMBOL = {v: k for k, v in _SYMBOL.items()}


def mirror(mask):
    """Swap left and right arrows (works on ints and uint8 arrays)."""
    if isinstance(mask, np.ndarray):
        return ((mask & 1) << 1) | ((mask >> 1) & 1)
    m = int(mask)
    return Arrow(((m & 1) << 1) | ((m >> 1) & 1))


@dataclass(frozen=True)
class LatticeConfig:
    """Window and law of an arrow field.

    Attributes
    ----------
    epsilon : float
        Branching probability, ``0 <= epsilon <= 1``.  ``0`` is accepted as
        the pure coalescing endpoint.
    x_lo, x_hi, t_lo, t_hi : int
        Inclusive window bounds with ``x_hi - x_lo`` even.
    seed : int
        64-bit unsigned seed.
    """

    epsilon: float
    x_lo: int
    x_hi: int
    t_lo: int
    t_hi: int
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0) or math.isnan(self.epsilon):
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not self.x_lo < self.x_hi:
            raise ValueError("need x_lo < x_hi")
        if not self.t_lo < self.t_hi:
            raise ValueError("need t_lo < t_hi")
        if (self.x_hi - self.x_lo) % 2:
            raise ValueError("x_hi - x_lo must be even")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def width(self) -> int:
        return self.x_hi - self.x_lo + 1

    @property
    def height(self) -> int:
        return self.t_hi - self.t_lo + 1

    def enlarged(self, margin: int) -> "LatticeConfig":
        """Same law and seed on a window grown by ``margin`` columns per side."""
        return replace(self, x_lo=self.x_lo - margin, x_hi=self.x_hi + margin)


class ArrowField:
    """Quenched forward arrows on a window plus the coupled dual arrows.

    The mask is stored densely as ``uint8`` indexed ``[t - t_lo, x - x_lo]``
    with ``0`` at off-parity cells.  The dual mask is derived on access.
    """

    def __init__(self, config: LatticeConfig, mask: np.ndarray):
        mask = np.asarray(mask, dtype=np.uint8)
        if mask.shape != (config.height, config.width):
            raise ValueError("mask shape does not match window")
        self.config = config
        self.mask = mask
        self.mask.setflags(write=False)

    # geometry ---------------------------------------------------------------
    @property
    def epsilon(self) -> float:
        return self.config.epsilon

    @property
    def x_lo(self) -> int:
        return self.config.x_lo

    @property
    def x_hi(self) -> int:
        return self.config.x_hi

    @property
    def t_lo(self) -> int:
        return self.config.t_lo

    @property
    def t_hi(self) -> int:
        return self.config.t_hi

    def in_window(self, x: int, t: int) -> bool:
        return self.x_lo <= x <= self.x_hi and self.t_lo <= t <= self.t_hi

    def is_site(self, x: int, t: int) -> bool:
        """True for forward sites inside the window."""
        return self.in_window(x, t) and (x + t) % 2 == 0

    def is_dual_site(self, x: int, t: int) -> bool:
        """True for dual sites whose mirrored forward site is in the window."""
        return self.in_window(x, t - 1) and (x + t) % 2 == 1

    def sites(self, t: int) -> np.ndarray:
        """Forward site positions in row ``t``."""
        first = self.x_lo + ((self.x_lo + t) % 2)
        return np.arange(first, self.x_hi + 1, 2)

    def dual_sites(self, t: int) -> np.ndarray:
        """Dual site positions in row ``t`` (mirrors of row ``t - 1``)."""
        return self.sites(t - 1)

    # access ---------------------------------------------------------------
    def arrows(self, x: int, t: int) -> Arrow:
        if not self.is_site(x, t):
            raise ParityError(f"({x}, {t}) is not a forward site of the window")
        return Arrow(int(self.mask[t - self.t_lo, x - self.x_lo]))

    def dual_arrows_at(self, x: int, t: int) -> Arrow:
        """Dual arrows at dual site ``(x, t)``; LEFT points to ``(x-1, t-1)``."""
        if not self.is_dual_site(x, t):
            raise ParityError(f"({x}, {t}) is not a dual site of the window")
        return mirror(self.arrows(x, t - 1))

    def row(self, t: int) -> np.ndarray:
        return self.mask[t - self.t_lo]

    def iter_sites(self) -> Iterator[tuple[int, int]]:
        for t in range(self.t_lo, self.t_hi + 1):
            for x in self.sites(t):
                yield int(x), t

    def both_fraction(self) -> float:
        valid = self.mask > 0
        return float(np.count_nonzero(self.mask == Arrow.BOTH) / np.count_nonzero(valid))

    def restrict(self, x_lo: int, x_hi: int, t_lo: int, t_hi: int) -> "ArrowField":
        """Sub-window view with identical arrows (counter-based RNG makes this
        equal to sampling the sub-window directly)."""
        cfg = replace(self.config, x_lo=x_lo, x_hi=x_hi, t_lo=t_lo, t_hi=t_hi)
        if not (self.x_lo <= x_lo and x_hi <= self.x_hi and self.t_lo <= t_lo and t_hi <= self.t_hi):
            raise ValueError("sub-window must lie inside the field")
        sub = self.mask[t_lo - self.t_lo:t_hi - self.t_lo + 1, x_lo - self.x_lo:x_hi - self.x_lo + 1]
        return ArrowField(cfg, sub.copy())

    def __eq__(self, other):
        return (isinstance(other, ArrowField) and self.config == other.config
                and np.array_equal(self.mask, other.mask))

    def __repr__(self):
        c = self.config
        return (f"ArrowField(epsilon={c.epsilon}, window=[{c.x_lo},{c.x_hi}]x"
                f"[{c.t_lo},{c.t_hi}], seed={c.seed})")


def _check_capacity(config: LatticeConfig, capacity_bytes: int) -> None:
    need = config.width * config.height
    if need > capacity_bytes:
        raise CapacityError(
            f"window needs {need} bytes of mask storage, limit is {capacity_bytes}")


def classify_uniforms(u: np.ndarray, epsilon: float) -> np.ndarray:
    """Map uniforms to arrow masks: BOTH below ``epsilon``, then LEFT, then RIGHT."""
    left_cut = epsilon + 0.5 * (1.0 - epsilon)
    out = np.where(u < epsilon, Arrow.BOTH, np.where(u < left_cut, Arrow.LEFT, Arrow.RIGHT))
    return out.astype(np.uint8)


def sample_arrow_field(config: LatticeConfig, rng_stream=None,
                       capacity_bytes: int = DEFAULT_CAPACITY_BYTES) -> ArrowField:
    """Sample the arrows of every forward site in the window.

    Parameters
    ----------
    config : LatticeConfig
        Window, branching probability and seed.
    rng_stream : int, optional
        Overrides ``config.seed`` when given.  Each site's arrows depend only
        on ``(seed, x, t)``.
    capacity_bytes : int
        Storage limit; larger windows raise :class:`CapacityError`.
    """
    if rng_stream is not None:
        config = replace(config, seed=int(rng_stream))
    _check_capacity(config, capacity_bytes)
    mask = np.zeros((config.height, config.width), dtype=np.uint8)
    for i, t in enumerate(range(config.t_lo, config.t_hi + 1)):
        offset = (config.x_lo + t) % 2
        xs = np.arange(config.x_lo + offset, config.x_hi + 1, 2)
        mask[i, offset::2] = classify_uniforms(site_uniforms(config.seed, t, xs), config.epsilon)
    return ArrowField(config, mask)


def field_from_spec(config: LatticeConfig, rows: dict, default: Arrow = Arrow.LEFT) -> ArrowField:
    """Field on ``config``'s window with the arrows listed in ``rows``."""
    mask = np.zeros((config.height, config.width), dtype=np.uint8)
    for i, t in enumerate(range(config.t_lo, config.t_hi + 1)):
        offset = (config.x_lo + t) % 2
        mask[i, offset::2] = int(default)
        for x, sym in rows.get(t, {}).items():
            if (x + t) % 2:
                raise ParityError(f"({x}, {t}) is not a forward site")
            mask[i, x - config.x_lo] = int(_FROM_SYMBOL[sym] if isinstance(sym, str) else sym)
    return ArrowField(config, mask)


def dual_arrows(field: ArrowField) -> np.ndarray:
    """Dual mask indexed like the forward mask but one row later.

    Entry ``[i, j]`` is the dual arrow mask at ``(x_lo + j, t_lo + i + 1)``.
    """
    return mirror(field.mask)


# transition kernel ---------------------------------------------------------

def transition_kernel_check(epsilon: float) -> dict:
    """Conditional step law of a forward right-most path beside a dual left-most path.

    Returns
    -------
    dict
        ``left_contact_cross``: probability the right-most path steps right
        (crossing) given the dual left-most path stepped toward it, i.e.
        ``2 eps / (1 + eps)``; ``off_contact_right``: unconditional right-step
        probability ``(1 + eps) / 2``; ``right_contact_right``: 1, since the
        right arrow is known to be present.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    return {
        "left_contact_cross": 2.0 * epsilon / (1.0 + epsilon),
        "off_contact_right": 0.5 * (1.0 + epsilon),
        "right_contact_right": 1.0,
    }


def empirical_crossing_frequency(epsilon: float, contact_events: int, seed: int = 0,
                                 block_rows: int = 512):
    """Monte Carlo frequency of crossings at left-contact sites.

    Sweeps rows of a field and, at every site where the dual left-most step
    heads toward the forward site's right (the left-contact configuration),
    records whether the forward right-most step crosses it.  Crossing is
    detected as a strict order swap of the two unit segments.

    Returns
    -------
    tuple of (frequency, stderr, events)
    """
    from .paths import rightmost_step, dual_leftmost_step

    width = 2 * block_rows
    events = 0
    crossings = 0
    t = 0
    while events < contact_events:
        xs = np.arange(0, width, 2) + (t % 2)
        masks = classify_uniforms(site_uniforms(seed, t, xs), epsilon)
        # forward right-most goes (x, t) -> x + fwd; dual left-most goes (x, t+1) -> x + back
        fwd = rightmost_step(masks)
        back = dual_leftmost_step(masks)
        contact = back == 1
        before = np.sign(xs + back - xs)       # dual minus forward at time t
        after = np.sign(xs - (xs + fwd))       # dual minus forward at time t + 1
        swapped = contact & (before != after)
        take = min(int(contact.sum()), contact_events - events)
        idx = np.flatnonzero(contact)[:take]
        crossings += int(swapped[idx].sum())
        events += take
        t += 1
    p = crossings / events
    return p, math.sqrt(p * (1 - p) / events), events


# dump format ---------------------------------------------------------------

def dump_field(field: ArrowField) -> str:
    """Text dump: header then one line of L/R/B per time row, sites only."""
    c = field.config
    lines = [f"epsilon={c.epsilon!r} window={c.x_lo},{c.x_hi},{c.t_lo},{c.t_hi} seed={c.seed}"]
    for i, t in enumerate(range(c.t_lo, c.t_hi + 1)):
        offset = (c.x_lo + t) % 2
        lines.append("".join(_SYMBOL[Arrow(int(m))] for m in field.mask[i, offset::2]))
    return "\n".join(lines) + "\n"


def load_field(text: str) -> ArrowField:
    """Inverse of :func:`dump_field`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = dict(part.split("=", 1) for part in lines[0].split())
    x_lo, x_hi, t_lo, t_hi = (int(v) for v in header["window"].split(","))
    cfg = LatticeConfig(float(header["epsilon"]), x_lo, x_hi, t_lo, t_hi, int(header["seed"]))
    if len(lines) - 1 != cfg.height:
        raise ValueError("row count does not match window height")
    mask = np.zeros((cfg.height, cfg.width), dtype=np.uint8)
    for i, line in enumerate(lines[1:]):
        offset = (x_lo + t_lo + i) % 2
        vals = [int(_FROM_SYMBOL[ch]) for ch in line.strip()]
        if len(vals) != len(range(offset, cfg.width, 2)):
            raise ValueError(f"row {t_lo + i} has the wrong number of sites")
        mask[i, offset::2] = vals
    return ArrowField(cfg, mask)

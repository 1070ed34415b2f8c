import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from bnetlab import excursion, lattice, paths, sde, stats
from bnetlab.lattice import Arrow, LatticeConfig, sample_arrow_field

eps_st = st.sampled_from([0.0, 0.1, 0.5, 1.0]) | st.floats(0.0, 1.0)
seed_st = st.integers(0, 2 ** 31)


@st.composite
def fields(draw, max_half=5, max_height=8):
    half = draw(st.integers(1, max_half))
    x_lo = draw(st.integers(-5, 5))
    t_lo = draw(st.integers(-5, 5))
    height = draw(st.integers(1, max_height))
    cfg = LatticeConfig(draw(eps_st), x_lo, x_lo + 2 * half, t_lo, t_lo + height, draw(seed_st))
    return sample_arrow_field(cfg)


@settings(max_examples=60, deadline=None)
@given(f=fields(), dx=st.integers(1, 3), dt=st.integers(1, 3))
def test_arrows_do_not_depend_on_the_window(f, dx, dt):
    c = f.config
    big = sample_arrow_field(LatticeConfig(c.epsilon, c.x_lo - 2 * dx, c.x_hi + 2 * dx,
                                           c.t_lo - dt, c.t_hi + dt, c.seed))
    for t in range(c.t_lo, c.t_hi + 1):
        for x in f.sites(t):
            assert f.arrows(int(x), t) == big.arrows(int(x), t)


@settings(max_examples=60, deadline=None)
@given(f=fields())
def test_every_site_has_an_arrow_and_mirror_is_an_involution(f):
    c = f.config
    for t in range(c.t_lo, c.t_hi + 1):
        for x in f.sites(t):
            m = f.arrows(int(x), t)
            assert m in (Arrow.LEFT, Arrow.RIGHT, Arrow.BOTH)
            assert lattice.mirror(lattice.mirror(m)) == m
            if c.epsilon == 0.0:
                assert m != Arrow.BOTH
            if c.epsilon == 1.0:
                assert m == Arrow.BOTH


@settings(max_examples=60, deadline=None)
@given(f=fields(), data=st.data())
def test_extremal_paths_ordered_and_coalescing(f, data):
    c = f.config
    t = data.draw(st.integers(c.t_lo, c.t_hi))
    xs = list(f.sites(t))
    x = int(data.draw(st.sampled_from(xs)))
    left, right = paths.leftmost_path(f, (x, t)), paths.rightmost_path(f, (x, t))
    n = min(len(left.positions), len(right.positions))
    assert np.all(np.asarray(left.positions[:n]) <= np.asarray(right.positions[:n]))
    assert paths.is_net_path(f, left) and paths.is_net_path(f, right)
    y = int(data.draw(st.sampled_from(xs)))
    other = paths.rightmost_path(f, (y, t))
    a, b = np.asarray(right.positions), np.asarray(other.positions)
    n = min(a.size, b.size)
    same = np.flatnonzero(a[:n] == b[:n])
    if same.size:
        assert np.all(a[same[0]:n] == b[same[0]:n])
    # forward paths from the same time never swap order
    d = np.sign(a[:n] - b[:n])
    assert np.all(d * d[0] >= 0)


@settings(max_examples=40, deadline=None)
@given(f=fields(), data=st.data())
def test_dual_paths_are_dual_net_paths(f, data):
    c = f.config
    t = data.draw(st.integers(c.t_lo + 1, c.t_hi + 1))
    x = data.draw(st.integers(c.x_lo, c.x_hi - 1).filter(lambda v: (v + t) % 2 == 1))
    for p in (paths.dual_leftmost(f, (x, t)), paths.dual_rightmost(f, (x, t))):
        assert paths.is_dual_net_path(f, p)


@settings(max_examples=60, deadline=None)
@given(t=st.floats(1e-4, 30.0))
def test_psi_bounds_and_monotone(t):
    v = stats.psi(t)
    assert v >= 2.0
    assert stats.psi(t * 1.5) <= v + 1e-12
    assert v <= 2.0 + 1.0 / math.sqrt(math.pi * t) + 1e-9


@settings(max_examples=60, deadline=None)
@given(h=st.floats(1e-6, 1e6), c=st.floats(0.1, 10.0))
def test_excursion_tail_scaling(h, c):
    assert math.isclose(stats.excursion_tail(c * c * h), stats.excursion_tail(h) / c,
                        rel_tol=1e-12)


@settings(max_examples=80, deadline=None)
@given(steps=st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=60))
def test_decomposition_partitions_forced_inputs(steps):
    B = np.concatenate([[0.0], np.cumsum(steps)])
    w = excursion.ReflectedWalk.from_samples(B, 0.5)
    recs = excursion.decompose_excursions(w)
    zero = w.X <= 0
    contact = w.dt * np.count_nonzero(zero[:-1] & zero[1:])
    assert math.isclose(sum(r.duration for r in recs) + contact, w.horizon, abs_tol=1e-9)
    assert np.all(w.X >= 0)
    assert sum(r.open for r in recs) <= 1
    ends = [r.start + r.duration for r in recs]
    assert all(e <= s + 1e-12 for e, s in zip(ends, [r.start for r in recs][1:]))


@settings(max_examples=80, deadline=None)
@given(steps=st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=60),
       b=st.floats(0.0, 2.0), clock=st.floats(0.0, 3.0))
def test_reflect_cross_sides(steps, b, clock):
    W = np.concatenate([[0.0], np.cumsum(steps)])
    bar = np.full(W.size, b)
    r, delta, free, k = sde.reflect_cross_path(W, bar, clock)
    assert np.all(np.diff(free) >= 0) and np.all(free >= 0)
    stop = W.size if k is None else k
    assert np.all(r[:stop] <= b + 1e-12)
    assert np.all(free[:stop] <= clock)
    if k is not None:
        assert free[k] > clock
        assert np.all(r[k:] >= b - 1e-12)
        assert np.all(np.diff(delta[k:]) >= 0)

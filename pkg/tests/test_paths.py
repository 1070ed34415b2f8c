import math

import numpy as np
import pytest

from bnetlab import oracles, paths
from bnetlab.errors import DomainError, ParityError, PreconditionError
from bnetlab.lattice import LatticeConfig, field_from_spec, sample_arrow_field
from bnetlab.paths import ContinuousPath, DualLatticePath, LatticePath


def test_path_validation():
    with pytest.raises(ParityError):
        LatticePath(0, [1, 2])
    with pytest.raises(ValueError):
        LatticePath(0, [0, 2])
    with pytest.raises(ParityError):
        DualLatticePath(1, [1, 0])


def test_four_slice_fixture(four_slice_field):
    f = four_slice_field
    assert list(paths.leftmost_path(f, (0, 0)).positions) == [0, -1, -2, -3]
    assert list(paths.rightmost_path(f, (0, 0)).positions) == [0, 1, 0, -1]
    # mirror images: the dual left-most path avoids forward left-most paths, so it
    # takes the right-hand dual arrow at the mirrored branch site
    assert list(paths.dual_leftmost(f, (0, 1)).positions) == [0, 1]
    assert list(paths.dual_rightmost(f, (0, 1)).positions) == [0, -1]
    assert list(paths.dual_leftmost(f, (0, 3)).positions) == [0, 1, 2, 3]
    assert list(paths.dual_rightmost(f, (0, 3)).positions) == [0, 1, 2, 3]


def test_no_branching_means_equal_extremal_paths():
    f = sample_arrow_field(LatticeConfig(0.0, -10, 10, 0, 10, seed=4))
    for x in f.sites(0):
        z = (int(x), 0)
        assert paths.leftmost_path(f, z) == paths.rightmost_path(f, z)


def test_extremal_order_on_random_fields():
    rng = np.random.default_rng(1)
    for i in range(1000):
        eps = float(rng.uniform(0, 1))
        f = sample_arrow_field(LatticeConfig(eps, -8, 8, 0, 8, seed=i))
        x = int(rng.choice(f.sites(0)))
        l, r = paths.leftmost_path(f, (x, 0)), paths.rightmost_path(f, (x, 0))
        n = min(len(l), len(r))
        assert np.all(l.positions[:n] <= r.positions[:n])


def test_window_edge_taints_path():
    f = field_from_spec(LatticeConfig(0.0, -2, 2, 0, 6), {})
    p = paths.leftmost_path(f, (0, 0))
    assert p.tainted and p.end_time < 6


def test_is_net_path(four_slice_field):
    f = four_slice_field
    assert paths.is_net_path(f, paths.leftmost_path(f, (0, 0)))
    assert paths.is_net_path(f, paths.rightmost_path(f, (0, 0)))
    # a left step is fine at (0, 0) but (1, 1) has only a left arrow
    assert not paths.is_net_path(f, LatticePath(0, [0, 1, 2]))
    assert paths.is_dual_net_path(f, paths.dual_leftmost(f, (0, 3)))


def test_is_net_path_equals_enumeration_on_7x7():
    f = sample_arrow_field(LatticeConfig(0.4, -3, 3, 0, 6, seed=17))
    for x in f.sites(0):
        z = (int(x), 0)
        accepted = {p.key() for p in oracles.enumerate_arrow_paths(f, z)}
        # every +-1 sequence staying inside the window, checked one by one
        for row in oracles.all_step_sequences(z, 6):
            if row.min() < f.x_lo or row.max() > f.x_hi:
                continue
            p = LatticePath(0, row)
            assert paths.is_net_path(f, p) == (p.key() in accepted)


def test_hop_concatenate(four_slice_field):
    f = four_slice_field
    l = paths.leftmost_path(f, (0, 0))
    r = paths.rightmost_path(f, (0, 0))
    assert paths.hop_concatenate(l, l, 2) == l
    # the left-most path from (2, 0) meets the right-most path from (0, 0) at t = 1
    l2 = paths.leftmost_path(f, (2, 0))
    hopped = paths.hop_concatenate(r, l2, 1)
    assert paths.is_net_path(f, hopped)
    with pytest.raises(PreconditionError):
        paths.hop_concatenate(l, r, 0)
    with pytest.raises(PreconditionError):
        paths.hop_concatenate(l, r, 2)


def test_first_meeting_time(four_slice_field):
    f = four_slice_field
    l = paths.leftmost_path(f, (0, 0))
    assert paths.first_meeting_time(l, l) == 1
    r = paths.rightmost_path(f, (0, 0))
    l2 = paths.leftmost_path(f, (2, 0))
    assert paths.first_meeting_time(r, l2) == 1
    assert paths.first_meeting_time(l, r) is None
    with pytest.raises(ParityError):
        paths.first_meeting_time(l, paths.dual_leftmost(f, (0, 3)))


def test_reflected_rightmost_inactive_constraint():
    f = sample_arrow_field(LatticeConfig(0.5, -4, 12, 0, 8, seed=2))
    dual = DualLatticePath(8, [11, 12, 11, 12, 11, 12, 11, 12, 11])
    res = paths.reflected_rightmost(f, (0, 0), dual)
    assert res.path == paths.rightmost_path(f, (0, 0))
    assert not res.reflection_times


def test_reflected_rightmost_matches_oracle_on_9x9():
    found = 0
    for seed in range(60):
        f = sample_arrow_field(LatticeConfig(0.4, -4, 4, 0, 8, seed=seed))
        for xd in (-3, -1, 1, 3):
            dual = paths.dual_leftmost(f, (xd, 8))
            if dual.tainted:
                continue
            for x in f.sites(0):
                z = (int(x), 0)
                best, _ = oracles.admissible_max(f, z, dual)
                try:
                    res = paths.reflected_rightmost(f, z, dual)
                except DomainError:
                    assert best is None
                    continue
                if best is None or res.path.tainted:
                    continue
                assert list(res.path.positions) == list(best)
                # between reflections the result follows the right-most path
                # restarted at the segment start
                starts = res.segments()
                ends = [t for _, t in starts[1:]] + [res.path.end_time + 1]
                for (x0, t0), t_next in zip(starts, ends):
                    restart = paths.rightmost_path(f, (x0, t0))
                    stop = t_next - 1  # the step out of a reflection time is a refused right step
                    seg = res.path.positions[t0 - res.path.start_time: stop - res.path.start_time + 1]
                    assert list(restart.positions[: seg.size]) == list(seg)
                found += 1
    assert found > 50


def test_reflected_rightmost_rejects_start_right_of_dual():
    f = sample_arrow_field(LatticeConfig(0.4, -4, 4, 0, 4, seed=0))
    dual = paths.dual_leftmost(f, (-1, 4))
    with pytest.raises(DomainError):
        paths.reflected_rightmost(f, (int(dual.at(0)) + 1, 0), dual)


def test_rescale():
    p = LatticePath(100, [10, 11])
    pts = paths.rescale(p, 0.1)
    assert (pts[0].x, pts[0].t) == pytest.approx((1.0, 1.0))
    q = LatticePath(0, [0, 1, 2, 1])
    ident = paths.rescale(q, 1.0)
    assert [(c.x, c.t) for c in ident] == [(0, 0), (1, 1), (2, 2), (1, 3)]
    eps, delta = 0.3, 0.5
    two = paths.rescale(q, eps * delta)
    for a, b in zip(two, paths.rescale(q, delta)):
        assert (a.x, a.t) == pytest.approx((eps * b.x, eps ** 2 * b.t))


def _const(x, t0=0.0, t1=10.0):
    return ContinuousPath(np.array([t0, t1]), np.array([x, x], dtype=float))


def test_path_distance_examples():
    p = LatticePath(0, [0, 1, 2, 1, 0])
    assert paths.path_distance(p, p) == 0.0
    assert paths.path_distance(_const(0.0), _const(1.0)) == pytest.approx(math.tanh(1), abs=1e-12)
    assert paths.path_distance(_const(0.0), _const(1.0)) == pytest.approx(0.7616, abs=1e-4)
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = LatticePath(0, np.concatenate([[0], np.cumsum(rng.choice([-1, 1], 8))]))
        b = LatticePath(2, np.concatenate([[0], np.cumsum(rng.choice([-1, 1], 6))]))
        assert 0 <= paths.path_distance(a, b, 0.5) <= 2


def test_hausdorff():
    c0, c1, c2 = _const(0.0), _const(1.0), _const(2.0)
    assert paths.hausdorff_distance([c0, c1], [c0, c1]) == 0.0
    assert paths.hausdorff_distance([c1], [c2]) == pytest.approx(paths.path_distance(c1, c2))
    # each of c1, c2 is closest to the other; c0 is shared
    assert paths.hausdorff_distance([c0, c1], [c0, c2]) == pytest.approx(
        math.tanh(2) - math.tanh(1), abs=1e-12)


def test_write_path_set(tmp_path, four_slice_field):
    ps = [paths.leftmost_path(four_slice_field, (0, 0)),
          paths.rightmost_path(four_slice_field, (0, 0))]
    index = paths.write_path_set(ps, str(tmp_path))
    lines = open(index).read().strip().splitlines()
    assert lines[0] == "file,kind,start_time,length,tainted"
    assert len(lines) == 3
    assert paths.path_to_csv(ps[1]).splitlines()[1:] == ["0,0", "1,1", "2,0", "3,-1"]
